//! Time integration of u'' + u' + B^2 u - lambda A u + (u^T A u) A u = f(t)
//! in first-order form.
//!
//! The stiff linear part B^2 - lambda A is diagonalized once per run, so
//! every implicit stage reduces to a divide per eigendirection. Stages are
//! one-step TR-BDF2 (trapezoidal over the first fraction gamma = 2 - sqrt 2
//! of the step, BDF2 over the rest), which is L-stable, so unresolved
//! high-frequency content is damped instead of frozen. The cubic
//! nonlinearity and the forcing are evaluated explicitly at stage
//! predictors, keeping every solve linear and diagonal.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pair::MatrixPair;

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
/// Shared implicit constant of both stages: gamma/2 = 1 - 1/sqrt 2.
const CIMP: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
const MIN_STEP_FLOOR: f64 = 1e-14;

/// Instantaneous configuration and velocity.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl State {
    pub fn new(u: DVector<f64>, v: DVector<f64>) -> Self {
        State { t: 0.0, u, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingKind {
    Zero,
    Constant,
    Decaying { rate: f64 },
    Sinusoidal { omega: f64 },
}

/// Right-hand side f(t) = eps * envelope(t) * shape, with |shape| = 1 for
/// the nonzero kinds, so |f(t)| <= eps for all t >= 0.
#[derive(Debug, Clone)]
pub struct Forcing {
    kind: ForcingKind,
    eps: f64,
    shape: DVector<f64>,
}

impl Forcing {
    pub fn zero(n: usize) -> Self {
        Forcing {
            kind: ForcingKind::Zero,
            eps: 0.0,
            shape: DVector::zeros(n),
        }
    }

    pub fn constant(eps: f64, shape: DVector<f64>) -> Result<Self> {
        Self::build(ForcingKind::Constant, eps, shape)
    }

    pub fn decaying(eps: f64, shape: DVector<f64>, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid("decay rate must be positive and finite"));
        }
        Self::build(ForcingKind::Decaying { rate }, eps, shape)
    }

    pub fn sinusoidal(eps: f64, shape: DVector<f64>, omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::invalid("forcing frequency must be finite"));
        }
        Self::build(ForcingKind::Sinusoidal { omega }, eps, shape)
    }

    fn build(kind: ForcingKind, eps: f64, shape: DVector<f64>) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::invalid("forcing amplitude must be a finite nonnegative number"));
        }
        let norm = shape.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("forcing shape must be a nonzero finite vector"));
        }
        Ok(Forcing {
            kind,
            eps,
            shape: shape / norm,
        })
    }

    pub fn kind(&self) -> ForcingKind {
        self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn shape(&self) -> &DVector<f64> {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.len()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ForcingKind::Zero) || self.eps == 0.0
    }

    /// Scalar coefficient of the shape at time t.
    pub fn amplitude_at(&self, t: f64) -> f64 {
        let env = match self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::Constant => 1.0,
            ForcingKind::Decaying { rate } => (-rate * t).exp(),
            ForcingKind::Sinusoidal { omega } => (omega * t).sin(),
        };
        self.eps * env
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        &self.shape * self.amplitude_at(t)
    }

    /// Supremum of |f(s)| over s >= t.
    pub fn sup_after(&self, t: f64) -> f64 {
        match self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::Constant | ForcingKind::Sinusoidal { .. } => self.eps,
            ForcingKind::Decaying { rate } => self.eps * (-rate * t).exp(),
        }
    }
}

/// Dense trajectory samples on the uniform stride grid, plus a summary of
/// the adaptive stepping that produced them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub stride: f64,
    pub times: Vec<f64>,
    pub us: Vec<DVector<f64>>,
    pub vs: Vec<DVector<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> State {
        State {
            t: self.times[i],
            u: self.us[i].clone(),
            v: self.vs[i].clone(),
        }
    }

    pub fn last_state(&self) -> State {
        self.state(self.len() - 1)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOpts {
    pub horizon: f64,
    pub tol: f64,
    pub stride: f64,
}

impl IntegrateOpts {
    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive and finite"));
        }
        if !(self.tol >= 1e-12 && self.tol <= 1e-3) {
            return Err(Error::invalid("tolerance must lie in [1e-12, 1e-3]"));
        }
        if !(self.stride > 0.0) || self.stride > self.horizon {
            return Err(Error::invalid("stride must be positive and at most the horizon"));
        }
        Ok(())
    }
}

/// Acceleration implied by the equation: f - v - B^2 u + lambda A u
/// - (u^T A u) A u.
pub fn residual(pair: &MatrixPair, lambda: f64, state: &State, f_value: &DVector<f64>) -> DVector<f64> {
    let au = pair.a() * &state.u;
    let q = state.u.dot(&au);
    f_value - &state.v - pair.b2() * &state.u + au * (lambda - q)
}

/// The system diagonalized in the eigenbasis of B^2 - lambda A.
struct EigenSystem<'a> {
    q: DMatrix<f64>,
    nu: DVector<f64>,
    a_t: DMatrix<f64>,
    shape_t: DVector<f64>,
    forcing: &'a Forcing,
    nu_min: f64,
}

impl<'a> EigenSystem<'a> {
    fn new(pair: &MatrixPair, lambda: f64, forcing: &'a Forcing) -> Self {
        let l = {
            let raw = pair.b2() - pair.a() * lambda;
            (&raw + raw.transpose()) * 0.5
        };
        let eig = l.symmetric_eigen();
        let q = eig.eigenvectors;
        let nu = eig.eigenvalues;
        let a_t = q.transpose() * pair.a() * &q;
        let shape_t = q.transpose() * forcing.shape();
        let nu_min = nu.iter().cloned().fold(f64::INFINITY, f64::min);
        EigenSystem {
            q,
            nu,
            a_t,
            shape_t,
            forcing,
            nu_min,
        }
    }

    /// Largest step for which the implicit stage divisor stays safely
    /// positive on the most unstable eigendirection.
    fn step_cap(&self) -> f64 {
        if self.nu_min < 0.0 {
            0.5 / (CIMP * (-self.nu_min).sqrt())
        } else {
            f64::INFINITY
        }
    }

    fn f_tilde(&self, t: f64) -> DVector<f64> {
        &self.shape_t * self.forcing.amplitude_at(t)
    }

    fn nonlin(&self, y: &DVector<f64>) -> DVector<f64> {
        let ay = &self.a_t * y;
        let q = y.dot(&ay);
        ay * q
    }

    fn g(&self, t: f64, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let mut g = self.f_tilde(t) - z - self.nonlin(y);
        for i in 0..y.len() {
            g[i] -= self.nu[i] * y[i];
        }
        g
    }

    /// Solve z (1 + ch) + ch nu y = rhs_z with y = r_y + ch z, diagonal in
    /// the eigenbasis.
    fn solve_stage(&self, ch: f64, r_y: &DVector<f64>, rhs_z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = r_y.len();
        let mut z = DVector::zeros(n);
        for i in 0..n {
            let d = 1.0 + ch + ch * ch * self.nu[i];
            z[i] = (rhs_z[i] - ch * self.nu[i] * r_y[i]) / d;
        }
        let y = r_y + &z * ch;
        (y, z)
    }

    /// One TR-BDF2 step of size h from (y, z) at time t.
    fn step(&self, t: f64, y: &DVector<f64>, z: &DVector<f64>, h: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        let ch = CIMP * h;
        if 1.0 + ch + ch * ch * self.nu_min <= 0.05 {
            return Err(Error::invalid(
                "fixed step too large for the most unstable eigendirection",
            ));
        }
        let g_n = self.g(t, y, z);

        // trapezoidal stage over gamma h, nonlinearity at the Euler predictor
        let t_a = t + GAMMA * h;
        let pred_a = y + z * (GAMMA * h);
        let r_y = y + z * ch;
        let rhs_z = z + (&g_n + self.f_tilde(t_a) - self.nonlin(&pred_a)) * ch;
        let (y_a, z_a) = self.solve_stage(ch, &r_y, &rhs_z);

        // BDF2 stage to t + h, nonlinearity extrapolated through the stages
        let c1 = 1.0 / (GAMMA * (2.0 - GAMMA));
        let c2 = (1.0 - GAMMA) * (1.0 - GAMMA) / (GAMMA * (2.0 - GAMMA));
        let pred_b = y + (&y_a - y) / GAMMA;
        let r_y2 = &y_a * c1 - y * c2;
        let rhs_z2 = &z_a * c1 - z * c2 + (self.f_tilde(t + h) - self.nonlin(&pred_b)) * ch;
        Ok(self.solve_stage(ch, &r_y2, &rhs_z2))
    }
}

fn check_dims(pair: &MatrixPair, forcing: &Forcing, s0: &State) -> Result<()> {
    let n = pair.n();
    if s0.u.len() != n || s0.v.len() != n {
        return Err(Error::invalid(format!(
            "initial state dimension {} does not match operator dimension {}",
            s0.u.len(),
            n
        )));
    }
    if forcing.n() != n {
        return Err(Error::invalid(format!(
            "forcing dimension {} does not match operator dimension {}",
            forcing.n(),
            n
        )));
    }
    if !s0.u.iter().chain(s0.v.iter()).all(|x| x.is_finite()) {
        return Err(Error::invalid("initial data must be finite"));
    }
    Ok(())
}

/// Adaptive integration with dense output on the uniform stride grid.
///
/// Error control is step-doubling Richardson on the second-order step (one
/// full step against two halves), with a PI controller on the accepted
/// estimates.
pub fn integrate(
    pair: &MatrixPair,
    lambda: f64,
    forcing: &Forcing,
    s0: &State,
    opts: &IntegrateOpts,
) -> Result<Trajectory> {
    opts.validate()?;
    check_dims(pair, forcing, s0)?;
    let sys = EigenSystem::new(pair, lambda, forcing);
    let horizon = opts.horizon;
    let stride = opts.stride;
    let n_samples = (horizon / stride + 1e-9).floor() as usize;

    let mut y = sys.q.transpose() * &s0.u;
    let mut z = sys.q.transpose() * &s0.v;
    let mut t = 0.0;
    let h_cap = sys.step_cap().min(horizon);
    let mut h = (1e-3 * (1.0 + horizon)).min(h_cap).min(stride);
    let mut err_prev: f64 = 1.0;

    let mut traj = Trajectory {
        stride,
        times: Vec::with_capacity(n_samples + 1),
        us: Vec::with_capacity(n_samples + 1),
        vs: Vec::with_capacity(n_samples + 1),
        steps_accepted: 0,
        steps_rejected: 0,
        min_step: f64::INFINITY,
        max_step: 0.0,
    };
    traj.times.push(0.0);
    traj.us.push(s0.u.clone());
    traj.vs.push(s0.v.clone());
    let mut next_sample = 1usize;

    while t < horizon - 1e-12 * horizon && next_sample <= n_samples {
        h = h.min(h_cap).min(horizon - t);
        if h < MIN_STEP_FLOOR * (1.0 + t.abs()) {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        let (y_big, z_big) = sys.step(t, &y, &z, h)?;
        let (y_h1, z_h1) = sys.step(t, &y, &z, 0.5 * h)?;
        let (y_new, z_new) = sys.step(t + 0.5 * h, &y_h1, &z_h1, 0.5 * h)?;

        // Richardson: the doubled step of a second-order method overshoots
        // the halved pair by 3x the halved pair's error
        let mut sum_sq = 0.0;
        let n = y.len();
        for i in 0..n {
            let wy = opts.tol * (1.0 + y_new[i].abs().max(y[i].abs()));
            let wz = opts.tol * (1.0 + z_new[i].abs().max(z[i].abs()));
            let ey = (y_new[i] - y_big[i]) / 3.0 / wy;
            let ez = (z_new[i] - z_big[i]) / 3.0 / wz;
            sum_sq += ey * ey + ez * ez;
        }
        let err = (sum_sq / (2 * n) as f64).sqrt();

        if err <= 1.0 {
            let g0 = sys.g(t, &y, &z);
            let g1 = sys.g(t + h, &y_new, &z_new);
            emit_samples(
                &sys, &mut traj, &mut next_sample, n_samples, t, h, &y, &z, &g0, &y_new, &z_new,
                &g1,
            );
            t += h;
            y = y_new;
            z = z_new;
            traj.steps_accepted += 1;
            traj.min_step = traj.min_step.min(h);
            traj.max_step = traj.max_step.max(h);
            let e = err.max(1e-10);
            let factor = (0.9 * e.powf(-0.7 / 3.0) * err_prev.powf(0.4 / 3.0)).clamp(0.2, 2.0);
            err_prev = e;
            h *= factor;
        } else {
            traj.steps_rejected += 1;
            h *= (0.9 * err.powf(-1.0 / 3.0)).max(0.2);
        }
    }

    // flush any samples stranded by roundoff at the horizon
    while next_sample <= n_samples {
        let tk = stride * next_sample as f64;
        traj.times.push(tk);
        traj.us.push(&sys.q * &y);
        traj.vs.push(&sys.q * &z);
        next_sample += 1;
    }
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn emit_samples(
    sys: &EigenSystem,
    traj: &mut Trajectory,
    next_sample: &mut usize,
    n_samples: usize,
    t: f64,
    h: f64,
    y0: &DVector<f64>,
    z0: &DVector<f64>,
    g0: &DVector<f64>,
    y1: &DVector<f64>,
    z1: &DVector<f64>,
    g1: &DVector<f64>,
) {
    while *next_sample <= n_samples {
        let tk = traj.stride * *next_sample as f64;
        if tk > t + h + 1e-12 * (1.0 + t + h) {
            break;
        }
        let th = ((tk - t) / h).clamp(0.0, 1.0);
        let h00 = (2.0 * th - 3.0) * th * th + 1.0;
        let h10 = ((th - 2.0) * th + 1.0) * th;
        let h01 = (3.0 - 2.0 * th) * th * th;
        let h11 = (th - 1.0) * th * th;
        let yk = y0 * h00 + z0 * (h10 * h) + y1 * h01 + z1 * (h11 * h);
        let zk = z0 * h00 + g0 * (h10 * h) + z1 * h01 + g1 * (h11 * h);
        traj.times.push(tk);
        traj.us.push(&sys.q * yk);
        traj.vs.push(&sys.q * zk);
        *next_sample += 1;
    }
}

/// Fixed-step TR-BDF2, for order measurements. Returns the final state.
pub fn integrate_fixed(
    pair: &MatrixPair,
    lambda: f64,
    forcing: &Forcing,
    s0: &State,
    h: f64,
    n_steps: usize,
) -> Result<State> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("step size must be positive and finite"));
    }
    check_dims(pair, forcing, s0)?;
    let sys = EigenSystem::new(pair, lambda, forcing);
    let mut y = sys.q.transpose() * &s0.u;
    let mut z = sys.q.transpose() * &s0.v;
    let mut t = 0.0;
    for k in 0..n_steps {
        let (y1, z1) = sys.step(t, &y, &z, h)?;
        y = y1;
        z = z1;
        t = h * (k + 1) as f64;
    }
    Ok(State {
        t,
        u: &sys.q * y,
        v: &sys.q * z,
    })
}

/// Classic fixed-step RK4 on the first-order system in the original
/// coordinates. Deliberately shares no machinery with the implicit path,
/// so it can serve as an independent reference.
pub fn rk4_reference(
    pair: &MatrixPair,
    lambda: f64,
    forcing: &Forcing,
    s0: &State,
    h: f64,
    n_steps: usize,
) -> Result<State> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("step size must be positive and finite"));
    }
    check_dims(pair, forcing, s0)?;
    let accel = |t: f64, u: &DVector<f64>, v: &DVector<f64>| -> DVector<f64> {
        let au = pair.a() * u;
        let q = u.dot(&au);
        forcing.value(t) - v - pair.b2() * u + au * (lambda - q)
    };
    let mut u = s0.u.clone();
    let mut v = s0.v.clone();
    let mut t = 0.0;
    for k in 0..n_steps {
        let k1u = v.clone();
        let k1v = accel(t, &u, &v);
        let k2u = &v + &k1v * (0.5 * h);
        let k2v = accel(t + 0.5 * h, &(&u + &k1u * (0.5 * h)), &k2u);
        let k3u = &v + &k2v * (0.5 * h);
        let k3v = accel(t + 0.5 * h, &(&u + &k2u * (0.5 * h)), &k3u);
        let k4u = &v + &k3v * h;
        let k4v = accel(t + h, &(&u + &k3u * h), &k4u);
        u += (k1u + (k2u + k3u) * 2.0 + k4u) * (h / 6.0);
        v += (k1v + (k2v + k3v) * 2.0 + k4v) * (h / 6.0);
        t = h * (k + 1) as f64;
    }
    Ok(State { t, u, v })
}

/// Time series of |v_a - v_b| + |B (u_a - u_b)| for two trajectories on
/// the same sample grid.
pub fn pairwise_difference(a: &Trajectory, b: &Trajectory, pair: &MatrixPair) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::MisalignedGrids);
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > 1e-12 * (1.0 + ta.abs()) {
            return Err(Error::MisalignedGrids);
        }
    }
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let du = &a.us[i] - &b.us[i];
        let dv = &a.vs[i] - &b.vs[i];
        out.push(dv.norm() + pair.quad_b2(&du).sqrt());
    }
    Ok(out)
}
