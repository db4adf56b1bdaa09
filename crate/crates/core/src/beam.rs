//! Clamped-beam realization of the operator pair, its exact spectrum, and
//! the boundary-corrected integral operators.
//!
//! On [0,1] with clamped ends the fourth-order operator splits into two
//! families: trigonometric modes with eigenvalues 4 pi^2 k^2 and mixed
//! modes with eigenvalues 4 alpha_k^2, where alpha_k solves tan a = a.
//! The two families strictly interlace.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pair::MatrixPair;

/// Minimum number of grid points that keeps any of the stencils meaningful.
pub const MIN_GRID: usize = 8;

/// Roots of tan(a) = a, one per interval (k pi, (k + 1/2) pi).
#[derive(Debug, Clone)]
pub struct CharRoots {
    pub alphas: Vec<f64>,
}

/// One exact eigenvalue of the clamped-beam operator with its normalized
/// shape (unit first-derivative L^2 seminorm).
#[derive(Debug, Clone)]
pub struct BeamMode {
    pub value: f64,
    pub kind: ModeKind,
    norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeKind {
    Trig { k: usize },
    Mixed { k: usize, alpha: f64 },
}

/// Uniform grid on [0,1] with m panels, endpoints included.
#[derive(Debug, Clone, Copy)]
pub struct UnitGrid {
    m: usize,
}

/// Image of the solution operator T: the function and its exact second
/// derivative, both sampled on the grid.
#[derive(Debug, Clone)]
pub struct TImage {
    pub u: Vec<f64>,
    pub uxx: Vec<f64>,
}

/// First k roots of tan(a) = a.
///
/// Works on g(a) = sin a - a cos a, which shares the roots but has no
/// poles; g' = a sin a keeps one sign on each bracket, so bisection
/// followed by a few Newton steps is safe.
pub fn char_roots(k: usize) -> Result<CharRoots> {
    if k == 0 {
        return Err(Error::invalid("requested zero characteristic roots"));
    }
    let g = |a: f64| a.sin() - a * a.cos();
    let mut alphas = Vec::with_capacity(k);
    for i in 1..=k {
        let mut lo = i as f64 * PI;
        let mut hi = (i as f64 + 0.5) * PI;
        // g(k pi) = -k pi (-1)^k, g((k+1/2) pi) = (-1)^k
        let mut glo = g(lo);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if (gm >= 0.0) == (glo >= 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        let mut a = 0.5 * (lo + hi);
        for _ in 0..4 {
            let da = g(a) / (a * a.sin());
            a -= da;
            if da.abs() <= f64::EPSILON * a {
                break;
            }
        }
        alphas.push(a);
    }
    Ok(CharRoots { alphas })
}

/// First `count` exact eigenvalues, merged across the two families in
/// ascending order. The interlacing 4 pi^2 k^2 < 4 alpha_k^2
/// < 4 pi^2 (k+1)^2 makes the merge a strict alternation.
pub fn beam_eigenvalues(count: usize) -> Result<Vec<BeamMode>> {
    if count == 0 {
        return Err(Error::invalid("requested zero beam modes"));
    }
    let per_family = count / 2 + 1;
    let roots = char_roots(per_family)?;
    let mut modes = Vec::with_capacity(count);
    for k in 1..=per_family {
        modes.push(BeamMode::trig(k));
        modes.push(BeamMode::mixed(k, roots.alphas[k - 1]));
    }
    modes.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    modes.truncate(count);
    Ok(modes)
}

impl BeamMode {
    fn trig(k: usize) -> Self {
        let kf = k as f64;
        BeamMode {
            value: 4.0 * PI * PI * kf * kf,
            kind: ModeKind::Trig { k },
            norm: 1.0 / (kf * PI * 2.0f64.sqrt()),
        }
    }

    fn mixed(k: usize, alpha: f64) -> Self {
        // int psi'^2 for psi = a(1 - cos 2ax) + sin 2ax - 2ax, in closed
        // form after substituting u = 2ax
        let (s2, c2) = (2.0 * alpha).sin_cos();
        let (s4, c4) = (4.0 * alpha).sin_cos();
        let inner = alpha * alpha * (alpha - s4 / 4.0)
            + (alpha + s4 / 4.0)
            + 2.0 * alpha
            + alpha * (1.0 - c4) / 2.0
            - 2.0 * alpha * (1.0 - c2)
            - 2.0 * s2;
        let seminorm_sq = 2.0 * alpha * inner;
        BeamMode {
            value: 4.0 * alpha * alpha,
            kind: ModeKind::Mixed { k, alpha },
            norm: 1.0 / seminorm_sq.sqrt(),
        }
    }

    /// Normalized shape value at x.
    pub fn eval(&self, x: f64) -> f64 {
        let raw = match self.kind {
            ModeKind::Trig { k } => 1.0 - (2.0 * k as f64 * PI * x).cos(),
            ModeKind::Mixed { alpha, .. } => {
                alpha * (1.0 - (2.0 * alpha * x).cos()) + (2.0 * alpha * x).sin()
                    - 2.0 * alpha * x
            }
        };
        raw * self.norm
    }
}

/// Finite-difference pair on n interior nodes of [0,1].
///
/// A is the second-difference matrix h^-2 tridiag(-1, 2, -1). B^2 is the
/// fourth difference with the clamped ghost closure u(-1) = u(1) (and its
/// mirror), which lifts the first and last diagonal entries from 6 to 7.
pub fn assemble_fd(n: usize) -> Result<MatrixPair> {
    if n < MIN_GRID {
        return Err(Error::GridTooCoarse { n, min: MIN_GRID });
    }
    let h = 1.0 / (n as f64 + 1.0);
    let h2 = h * h;
    let h4 = h2 * h2;
    let mut a = DMatrix::zeros(n, n);
    let mut b2 = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0 / h2;
        if i + 1 < n {
            a[(i, i + 1)] = -1.0 / h2;
            a[(i + 1, i)] = -1.0 / h2;
        }
        b2[(i, i)] = if i == 0 || i == n - 1 { 7.0 / h4 } else { 6.0 / h4 };
        if i + 1 < n {
            b2[(i, i + 1)] = -4.0 / h4;
            b2[(i + 1, i)] = -4.0 / h4;
        }
        if i + 2 < n {
            b2[(i, i + 2)] = 1.0 / h4;
            b2[(i + 2, i)] = 1.0 / h4;
        }
    }
    MatrixPair::validate(a, b2)
}

impl UnitGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < MIN_GRID {
            return Err(Error::GridTooCoarse { n: m, min: MIN_GRID });
        }
        Ok(UnitGrid { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.m as f64;
        (0..=self.m).map(move |j| j as f64 / m)
    }
}

/// Running integral of uniformly sampled values, one entry per node.
///
/// Each panel integrates the cubic through the four nearest samples, so
/// the rule is exact on cubics and fourth-order accurate in general.
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let m = values.len().checked_sub(1).expect("empty sample array");
    assert!(m >= 3, "cumulative integral needs at least 4 samples");
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..m {
        let panel = if i == 0 {
            9.0 * values[0] + 19.0 * values[1] - 5.0 * values[2] + values[3]
        } else if i == m - 1 {
            values[m - 3] - 5.0 * values[m - 2] + 19.0 * values[m - 1] + 9.0 * values[m]
        } else {
            -values[i - 1] + 13.0 * values[i] + 13.0 * values[i + 1] - values[i + 2]
        };
        acc += panel * h / 24.0;
        out.push(acc);
    }
    out
}

/// Definite integral over [0,1] of uniformly sampled values.
pub fn integral(values: &[f64], h: f64) -> f64 {
    *cumulative_integral(values, h).last().unwrap()
}

/// Solution operator T of the boundary-corrected problem: maps f (which
/// must vanish at both ends) to the clamped function u with
///
/// ```text
/// u = -FF + (3 FF(1) - F(1)) x^2 + (F(1) - 2 FF(1)) x^3,
/// ```
///
/// where F and FF are the first and second running integrals of f. The
/// second derivative comes out analytically as
/// u'' = -f + 2(3 FF(1) - F(1)) + 6(F(1) - 2 FF(1)) x, so no numerical
/// differentiation ever happens.
pub fn apply_t(f: &[f64], grid: &UnitGrid) -> Result<TImage> {
    if f.len() != grid.len() {
        return Err(Error::invalid(format!(
            "sample count {} does not match grid size {}",
            f.len(),
            grid.len()
        )));
    }
    let scale = f.iter().fold(0.0f64, |s, &x| s.max(x.abs()));
    if f[0].abs() > 1e-12 * (1.0 + scale) || f[grid.m()].abs() > 1e-12 * (1.0 + scale) {
        return Err(Error::invalid(
            "operator domain requires f(0) = f(1) = 0".to_string(),
        ));
    }
    let h = grid.h();
    let big_f = cumulative_integral(f, h);
    let big_ff = cumulative_integral(&big_f, h);
    let f1 = big_f[grid.m()];
    let ff1 = big_ff[grid.m()];
    let c2 = 3.0 * ff1 - f1;
    let c3 = f1 - 2.0 * ff1;
    let mut u = Vec::with_capacity(grid.len());
    let mut uxx = Vec::with_capacity(grid.len());
    for (j, x) in grid.points().enumerate() {
        u.push(-big_ff[j] + c2 * x * x + c3 * x * x * x);
        uxx.push(-f[j] + 2.0 * c2 + 6.0 * c3 * x);
    }
    Ok(TImage { u, uxx })
}

/// The boundary-corrected operator C from second-derivative samples:
/// Cu = -u'' + u''(0) + (u''(1) - u''(0)) x. The result vanishes at both
/// ends by construction.
pub fn apply_c(uxx: &[f64], grid: &UnitGrid) -> Vec<f64> {
    assert_eq!(uxx.len(), grid.len(), "sample count does not match grid");
    let left = uxx[0];
    let right = uxx[grid.m()];
    grid.points()
        .enumerate()
        .map(|(j, x)| -uxx[j] + left + (right - left) * x)
        .collect()
}
