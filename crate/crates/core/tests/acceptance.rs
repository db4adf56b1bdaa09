//! End-to-end acceptance battery.
//!
//! Each test checks one advertised capability against pinned tolerances and
//! prints a single machine-greppable verdict line (visible under
//! `--nocapture`; on failure the line is also in the panic message).

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use beamlab_core::asymptotics::{
    classify, forcing_response_ratio, response_stable, ultimate_bound_check, ResponseScenario,
    DEFAULT_TAIL_FRACTION,
};
use beamlab_core::beam::{apply_c, apply_t, assemble_fd, char_roots, integral, UnitGrid};
use beamlab_core::dynamics::{integrate, pairwise_difference, Forcing, IntegrateOpts, State};
use beamlab_core::lyapunov::{monitor, CertifiedConstants, CheckId};
use beamlab_core::sampling::{seeded_euclid_ball, seeded_mode_ball, sweep_seed};
use beamlab_core::{GapSpectrum, MatrixPair, UnstableMode};

const ALPHA1: f64 = 4.493409457909064;

fn verdict(num: usize, slug: &str, ok: bool, detail: &str) {
    let line = format!(
        "acceptance {num:02} {slug}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(ok, "{line}");
}

fn diag_setup() -> (MatrixPair, GapSpectrum, UnstableMode, f64) {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    let b2 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 8.0]));
    let pair = MatrixPair::validate(a, b2).unwrap();
    let spectrum = pair.gap_spectrum(2).unwrap();
    let lambda = 2.0;
    let mode = pair.unstable_mode(&spectrum, lambda).unwrap();
    (pair, spectrum, mode, lambda)
}

fn beam_setup(n: usize, lambda: f64, k: usize) -> (MatrixPair, GapSpectrum, UnstableMode) {
    let pair = assemble_fd(n).unwrap();
    let spectrum = pair.gap_spectrum(k).unwrap();
    let mode = pair.unstable_mode(&spectrum, lambda).unwrap();
    (pair, spectrum, mode)
}

#[test]
fn acceptance_01_characteristic_root() {
    let clock = Instant::now();
    let computed = char_roots(1).unwrap().alphas[0];

    // independent route: plain bisection of tan(a) - a on (pi, 3pi/2)
    let g = |a: f64| a.tan() - a;
    let (mut lo, mut hi) = (PI + 1e-9, 1.5 * PI - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bisected = 0.5 * (lo + hi);
    let elapsed = clock.elapsed().as_secs_f64();

    let err = (computed - ALPHA1).abs().max((bisected - ALPHA1).abs());
    verdict(
        1,
        "characteristic-root",
        err <= 1e-9 && elapsed < 1.0,
        &format!("max err {err:.2e} <= 1e-9, {elapsed:.3} s < 1 s"),
    );
}

#[test]
fn acceptance_02_eigenvalue_reproduction() {
    let clock = Instant::now();
    let exact = [4.0 * PI * PI, 4.0 * ALPHA1 * ALPHA1];
    let mut lam = [[0.0f64; 2]; 3]; // [grid][which eigenvalue]
    for (g, n) in [64usize, 128, 256].into_iter().enumerate() {
        let spectrum = assemble_fd(n).unwrap().gap_spectrum(2).unwrap();
        lam[g] = [spectrum.lambda1(), spectrum.lambda2()];
    }
    let mut worst_raw = 0.0f64;
    let mut worst_ext = 0.0f64;
    for j in 0..2 {
        worst_raw = worst_raw.max((lam[2][j] - exact[j]).abs() / exact[j]);
        // second-order Richardson at grid ratio 2, then one repeat
        let r1 = lam[1][j] + (lam[1][j] - lam[0][j]) / 3.0;
        let r2 = lam[2][j] + (lam[2][j] - lam[1][j]) / 3.0;
        let ext = r2 + (r2 - r1) / 15.0;
        worst_ext = worst_ext.max((ext - exact[j]).abs() / exact[j]);
    }
    let elapsed = clock.elapsed().as_secs_f64();
    verdict(
        2,
        "eigenvalue-reproduction",
        worst_raw <= 1e-2 && worst_ext <= 5e-4 && elapsed < 30.0,
        &format!(
            "n=256 rel err {worst_raw:.2e} <= 1e-2, extrapolated {worst_ext:.2e} <= 5e-4, \
             {elapsed:.2} s < 30 s"
        ),
    );
}

#[test]
fn acceptance_03_integral_operator_roundtrip() {
    let grid = UnitGrid::new(1024).unwrap();
    let l2_of = |f: &[f64]| -> f64 {
        let img = apply_t(f, &grid).unwrap();
        let cu = apply_c(&img.uxx, &grid);
        let err2: Vec<f64> = cu.iter().zip(f).map(|(c, f)| (c - f) * (c - f)).collect();
        integral(&err2, grid.h()).max(0.0).sqrt()
    };

    let sine: Vec<f64> = grid.points().map(|x| (PI * x).sin()).collect();
    let sine_err = l2_of(&sine);

    let mut rng = ChaCha12Rng::seed_from_u64(3003);
    let sample = |c: &[f64], x: f64| -> f64 {
        c.iter()
            .enumerate()
            .map(|(k, ck)| ck * ((k + 1) as f64 * PI * x).sin())
            .sum()
    };
    let mut rand_err = 0.0f64;
    for _ in 0..20 {
        let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f: Vec<f64> = grid.points().map(|x| sample(&coeffs, x)).collect();
        rand_err = rand_err.max(l2_of(&f));
    }

    let mut sym_err = 0.0f64;
    for _ in 0..10 {
        let cf: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cg: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f: Vec<f64> = grid.points().map(|x| sample(&cf, x)).collect();
        let g: Vec<f64> = grid.points().map(|x| sample(&cg, x)).collect();
        let iu = apply_t(&f, &grid).unwrap();
        let iv = apply_t(&g, &grid).unwrap();
        let cu = apply_c(&iu.uxx, &grid);
        let lhs_int: Vec<f64> = iv.uxx.iter().zip(&cu).map(|(vxx, c)| -vxx * c).collect();
        let rhs_int: Vec<f64> =
            iv.uxx.iter().zip(&iu.uxx).map(|(vxx, uxx)| vxx * uxx).collect();
        let lhs = integral(&lhs_int, grid.h());
        let rhs = integral(&rhs_int, grid.h());
        sym_err = sym_err.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }

    verdict(
        3,
        "integral-operator-roundtrip",
        sine_err <= 1e-10 && rand_err <= 1e-8 && sym_err <= 1e-8,
        &format!(
            "sine L2 {sine_err:.2e} <= 1e-10, random L2 {rand_err:.2e} <= 1e-8, \
             symmetry {sym_err:.2e} <= 1e-8"
        ),
    );
}

#[test]
fn acceptance_04_inertia_oracle_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(4004);
    let spd = |rng: &mut ChaCha12Rng, n: usize| -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut s = m.transpose() * &m;
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
            s[(i, i)] += 0.3;
        }
        s
    };

    let mut checked = 0usize;
    let mut lambda_checks = 0usize;
    let mut transition_checks = 0usize;
    while checked < 1000 {
        let n = rng.gen_range(2..=8);
        let pair = MatrixPair::validate(spd(&mut rng, n), spd(&mut rng, n)).unwrap();

        // independent pencil eigenvalues via explicit Cholesky reduction
        let chol = pair.a().clone().cholesky().unwrap();
        let linv = chol.l().try_inverse().unwrap();
        let reduced = &linv * pair.b2() * linv.transpose();
        let sym = 0.5 * (&reduced + reduced.transpose());
        let mut pencil: Vec<f64> =
            sym.symmetric_eigenvalues().iter().copied().collect();
        pencil.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let top = pencil[n - 1];
        for _ in 0..3 {
            let lambda = rng.gen_range(0.0..1.2 * top);
            let Ok(idx) = pair.inertia_index(lambda) else { continue };
            // brute force on the shifted matrix itself
            let shifted = pair.b2() - pair.a() * lambda;
            let brute = shifted
                .symmetric_eigenvalues()
                .iter()
                .filter(|e| **e < 0.0)
                .count();
            assert_eq!(idx, brute, "index mismatch at lambda={lambda}");
            lambda_checks += 1;
        }

        // crossing any pencil value must raise the index by exactly one
        let below = pencil[0] - 0.5;
        if let Ok(idx) = pair.inertia_index(below) {
            assert_eq!(idx, 0);
            transition_checks += 1;
        }
        for j in 0..n - 1 {
            if pencil[j + 1] - pencil[j] <= 1e-6 * (1.0 + pencil[j].abs()) {
                continue;
            }
            let mid = 0.5 * (pencil[j] + pencil[j + 1]);
            if let Ok(idx) = pair.inertia_index(mid) {
                assert_eq!(idx, j + 1, "between pencil values {} and {}", j, j + 1);
                transition_checks += 1;
            }
        }
        if let Ok(idx) = pair.inertia_index(top + 0.5) {
            assert_eq!(idx, n);
            transition_checks += 1;
        }
        checked += 1;
    }
    verdict(
        4,
        "inertia-oracle-equivalence",
        checked == 1000,
        &format!(
            "1000 pairs, {lambda_checks} random-shift matches, \
             {transition_checks} bracketing transitions"
        ),
    );
}

#[test]
fn acceptance_05_stationary_residual() {
    let zero = |n: usize| DVector::<f64>::zeros(n);
    let mut worst_res = 0.0f64;
    let mut worst_drift = 0.0f64;

    let diag = diag_setup();
    let beam = beam_setup(64, 60.0, 2);
    let cases: [(&MatrixPair, &GapSpectrum, f64); 2] = [
        (&diag.0, &diag.1, diag.3),
        (&beam.0, &beam.1, 60.0),
    ];
    for (pair, spectrum, lambda) in cases {
        let tol_scale = lambda * pair.a().norm();
        for point in pair.stationary_points(spectrum, lambda).unwrap() {
            let st = State::new(point, zero(pair.n()));
            let r = beamlab_core::dynamics::residual(pair, lambda, &st, &zero(pair.n()));
            worst_res = worst_res.max(r.norm() / tol_scale);
        }

        let sigma0 = (lambda - spectrum.lambda1()).sqrt();
        let s0 = State::new(spectrum.e1() * sigma0, zero(pair.n()));
        let opts = IntegrateOpts { horizon: 100.0, tol: 1e-10, stride: 0.5 };
        let traj = integrate(pair, lambda, &Forcing::zero(pair.n()), &s0, &opts).unwrap();
        for u in &traj.us {
            worst_drift = worst_drift.max((u - &s0.u).norm());
        }
    }
    verdict(
        5,
        "stationary-residual",
        worst_res <= 1e-9 && worst_drift <= 1e-8,
        &format!(
            "scaled residual {worst_res:.2e} <= 1e-9, drift over T=100 \
             {worst_drift:.2e} <= 1e-8"
        ),
    );
}

#[test]
fn acceptance_06_energy_identity() {
    let (pair, spectrum, mode, lambda) = diag_setup();
    let consts = CertifiedConstants::certify(&pair, &spectrum, &mode).unwrap();
    let forcing = Forcing::zero(2);
    let opts = IntegrateOpts { horizon: 10.0, tol: 1e-10, stride: 1e-3 };
    let mut worst = 0.0f64;
    for i in 0..10 {
        let s0 = seeded_euclid_ball(2, 1.5, 1.5, sweep_seed(6001, i)).unwrap();
        let traj = integrate(&pair, lambda, &forcing, &s0, &opts).unwrap();
        let report = monitor(&traj, &forcing, &pair, &spectrum, &mode, &consts).unwrap();
        assert!(
            report.violations.iter().all(|v| v.check != CheckId::EnergyIdentity),
            "run {i} logged an identity violation"
        );
        worst = worst.max(report.identity_max_rel);
    }
    verdict(
        6,
        "energy-identity",
        worst <= 1e-4,
        &format!("10 runs, centered dE/dt rel err {worst:.2e} <= 1e-4 at stride 1e-3"),
    );
}

#[test]
fn acceptance_07_certified_inequality_suite() {
    let (pair, spectrum, mode, lambda) = diag_setup();
    let consts = CertifiedConstants::certify(&pair, &spectrum, &mode).unwrap();
    let opts = IntegrateOpts { horizon: 12.0, tol: 1e-10, stride: 2.5e-4 };
    let shape = DVector::from_vec(vec![0.6, 0.8]);
    let mut forced = 0usize;
    let mut unforced = 0usize;
    let mut decay_violations = 0usize;
    for i in 0..20u64 {
        let forcing = match i % 5 {
            2 => Forcing::sinusoidal(0.03, shape.clone(), 1.1).unwrap(),
            4 => Forcing::decaying(0.05, shape.clone(), 0.7).unwrap(),
            _ => Forcing::zero(2),
        };
        if forcing.is_zero() {
            unforced += 1;
        } else {
            forced += 1;
        }
        let s0 = seeded_euclid_ball(2, 1.5, 1.5, sweep_seed(7001, i)).unwrap();
        let traj = integrate(&pair, lambda, &forcing, &s0, &opts).unwrap();
        let report = monitor(&traj, &forcing, &pair, &spectrum, &mode, &consts).unwrap();
        decay_violations += report
            .violations
            .iter()
            .filter(|v| {
                matches!(
                    v.check,
                    CheckId::FDecay | CheckId::SPlusDecay | CheckId::SMinusDecay
                )
            })
            .count();
    }
    verdict(
        7,
        "certified-inequality-suite",
        decay_violations == 0,
        &format!(
            "{unforced} unforced + {forced} forced runs, {decay_violations} \
             F'/S' violations (require 0)"
        ),
    );
}

#[test]
fn acceptance_08_ultimate_bound() {
    let (pair, spectrum, mode, lambda) = diag_setup();
    let consts = CertifiedConstants::certify(&pair, &spectrum, &mode).unwrap();
    let horizon_pinned = 1810.143476810144; // 10 / gamma0
    assert!((10.0 * consts.m3 - horizon_pinned).abs() <= 1e-9 * horizon_pinned);

    // |B u0| = 10 along the first mode
    let u0 = spectrum.e1() * (10.0 / spectrum.lambda1().sqrt());
    let s0 = State::new(u0, DVector::zeros(2));
    let forcing = Forcing::zero(2);
    let opts = IntegrateOpts { horizon: 1815.0, tol: 1e-8, stride: 0.5 };
    let traj = integrate(&pair, lambda, &forcing, &s0, &opts).unwrap();
    let report = ultimate_bound_check(&traj, &pair, &consts, &forcing).unwrap();
    assert_eq!(report.bound, lambda * lambda);
    verdict(
        8,
        "ultimate-bound",
        report.pass,
        &format!(
            "tail |u'|^2+|Bu|^2 = {:.3} <= 1.05 * lambda^2 = {:.3} by T = {horizon_pinned}",
            report.tail_max,
            1.05 * report.bound
        ),
    );
}

#[test]
fn acceptance_09_three_regime_alternative() {
    let (pair, spectrum, _) = beam_setup(64, 60.0, 3);
    let lambda = 60.0;
    let sigma0 = (lambda - spectrum.lambda1()).sqrt();
    let opts = IntegrateOpts { horizon: 150.0, tol: 1e-6, stride: 0.05 };
    let forcing = Forcing::zero(pair.n());

    let mut settled = 0usize;
    let mut worst_tail = 0.0f64;
    for i in 0..100u64 {
        let s0 = seeded_mode_ball(&spectrum, 3, 2.0, 2.0, sweep_seed(9001, i)).unwrap();
        let traj = integrate(&pair, lambda, &forcing, &s0, &opts).unwrap();
        let label = classify(&traj, &pair, &spectrum, lambda, DEFAULT_TAIL_FRACTION).unwrap();
        if label.sigma.abs() == sigma0 && label.tail_metric <= 1e-4 {
            settled += 1;
        }
        worst_tail = worst_tail.max(label.tail_metric);
    }

    let rest = State::new(DVector::zeros(pair.n()), DVector::zeros(pair.n()));
    let traj = integrate(&pair, lambda, &forcing, &rest, &opts).unwrap();
    let zero_label = classify(&traj, &pair, &spectrum, lambda, DEFAULT_TAIL_FRACTION).unwrap();

    verdict(
        9,
        "three-regime-alternative",
        settled == 100 && zero_label.sigma == 0.0 && zero_label.tail_metric == 0.0,
        &format!(
            "{settled}/100 random runs at +-sigma0 with tail <= 1e-4 (worst \
             {worst_tail:.2e}); prepared rest state: sigma = {}, tail = {:.1e}",
            zero_label.sigma, zero_label.tail_metric
        ),
    );
}

#[test]
fn acceptance_10_asymptotic_pairing() {
    let (pair, spectrum, _, lambda) = diag_setup();
    let sigma0 = (lambda - spectrum.lambda1()).sqrt();
    let forcing = Forcing::zero(2);
    let opts = IntegrateOpts { horizon: 200.0, tol: 1e-10, stride: 0.05 };
    let run = |u: [f64; 2], v: [f64; 2]| {
        let s0 = State::new(DVector::from_vec(u.to_vec()), DVector::from_vec(v.to_vec()));
        integrate(&pair, lambda, &forcing, &s0, &opts).unwrap()
    };

    let a = run([1.4, 0.3], [0.1, -0.2]);
    let b = run([0.9, -0.4], [-0.3, 0.1]);
    let c = run([-1.4, -0.3], [-0.1, 0.2]);
    for (t, s) in [(&a, 1.0), (&b, 1.0), (&c, -1.0)] {
        let label = classify(t, &pair, &spectrum, lambda, DEFAULT_TAIL_FRACTION).unwrap();
        assert_eq!(label.sigma, s * sigma0, "basin placement of a prepared run");
    }

    let same = pairwise_difference(&a, &b, &pair).unwrap();
    let opposite = pairwise_difference(&a, &c, &pair).unwrap();
    let same_final = *same.last().unwrap();
    let tail_start = opposite.len() - opposite.len() / 5;
    let opposite_min = opposite[tail_start..]
        .iter()
        .fold(f64::INFINITY, |m, x| m.min(*x));
    let separation = 0.9 * 2.0 * sigma0 * spectrum.lambda1().sqrt();
    verdict(
        10,
        "asymptotic-pairing",
        same_final <= 1e-6 && opposite_min >= separation,
        &format!(
            "same-basin metric {same_final:.2e} <= 1e-6 at T=200, opposite-basin \
             tail min {opposite_min:.3} >= {separation:.2}"
        ),
    );
}

#[test]
fn acceptance_11_linear_response() {
    let (pair, spectrum, _, lambda) = diag_setup();
    let sigma0 = (lambda - spectrum.lambda1()).sqrt();
    let scenario = ResponseScenario {
        shape: DVector::from_vec(vec![0.6, 0.8]),
        omega: 1.0,
        initial: State::new(spectrum.e1() * sigma0, DVector::zeros(2)),
        opts: IntegrateOpts { horizon: 60.0, tol: 1e-9, stride: 0.01 },
        tail_fraction: DEFAULT_TAIL_FRACTION,
    };
    let eps = [1e-2, 5e-3, 2.5e-3];
    let rows = forcing_response_ratio(&pair, &spectrum, lambda, &eps, &scenario).unwrap();
    let stable = response_stable(&rows);
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.ratio)).collect();
    let in_well = rows.iter().all(|r| r.sigma == sigma0);
    verdict(
        11,
        "linear-response",
        stable && in_well,
        &format!(
            "tail/eps ratios [{}] within factor 2, all runs stay at +sigma0",
            ratios.join(", ")
        ),
    );
}
