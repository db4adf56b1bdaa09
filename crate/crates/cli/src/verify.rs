//! Built-in verification battery.
//!
//! Re-derives the structural inequalities on reference pairs with seeded
//! random states: norm chain, complement coercivity, the certified constant
//! chain, rest-point residuals, and exact sign symmetry of the energies.
//! This is the `verify` subcommand; it needs no config file.

use anyhow::Result;
use nalgebra::{DMatrix, DVector};

use beamlab_core::beam::assemble_fd;
use beamlab_core::dynamics::{residual, State};
use beamlab_core::lyapunov::{apply_p, energy_e, energy_f, energy_s, CertifiedConstants};
use beamlab_core::sampling::{seeded_euclid_ball, sweep_seed};
use beamlab_core::MatrixPair;

struct Case {
    name: &'static str,
    pair: MatrixPair,
    lambda: f64,
}

fn cases() -> Result<Vec<Case>> {
    let diag = MatrixPair::validate(
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])),
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 8.0])),
    )?;
    Ok(vec![
        Case { name: "diag-2x2", pair: diag, lambda: 2.0 },
        Case { name: "beam-fd-32", pair: assemble_fd(32)?, lambda: 60.0 },
        Case { name: "beam-fd-64", pair: assemble_fd(64)?, lambda: 60.0 },
    ])
}

pub fn run() -> Result<i32> {
    let mut failures = 0usize;
    for case in cases()? {
        failures += check_case(&case)?;
    }
    if failures == 0 {
        println!("verify: all suites ok");
        Ok(0)
    } else {
        println!("verify: {failures} suite(s) FAILED");
        Ok(2)
    }
}

fn states(n: usize, count: usize, tag: u64) -> Vec<State> {
    (0..count as u64)
        .map(|i| seeded_euclid_ball(n, 2.0, 2.0, sweep_seed(tag, i)).unwrap())
        .collect()
}

fn check_case(case: &Case) -> Result<usize> {
    let mut bad = 0usize;
    let mut outcome = |name: &str, ok: bool, detail: String| {
        println!(
            "verify {:<10} {name:<14} {} ({detail})",
            case.name,
            if ok { "ok  " } else { "FAIL" }
        );
        if !ok {
            bad += 1;
        }
    };

    let pair = &case.pair;
    let n = pair.n();
    let tol = |scale: f64| 1e-9 * (1.0 + scale.abs());

    let spectrum = pair.gap_spectrum(2)?;
    let (l1, l2) = (spectrum.lambda1(), spectrum.lambda2());
    outcome(
        "gap",
        l1 > 0.0 && l2 > l1 && pair.mu1 > 0.0 && pair.mu2 > 0.0,
        format!("lambda1 {l1:.6e} < lambda2 {l2:.6e}"),
    );

    let mut chain_margin = f64::INFINITY;
    for s in states(n, 200, 0x5EED_0001) {
        let u = &s.u;
        let bu2 = pair.quad_b2(u);
        let au2 = (pair.a() * u).norm_squared();
        let ha2 = pair.quad_a(u);
        let uu = u.norm_squared();
        let t = tol(bu2.max(au2));
        chain_margin = chain_margin
            .min(bu2 - pair.mu1 * au2 + t)
            .min(pair.mu1 * (au2 - pair.mu2 * ha2) + t)
            .min(pair.mu2 * (ha2 - pair.mu2 * uu) + t);
    }
    outcome(
        "norm-chain",
        chain_margin >= 0.0,
        format!("200 states, worst slack {chain_margin:.3e}"),
    );

    let keep = (l2 - case.lambda) / l2;
    let mut coercive = f64::INFINITY;
    for s in states(n, 200, 0x5EED_0002) {
        let w = spectrum.split_w(&s.u).w;
        let bw2 = pair.quad_b2(&w);
        let lhs = bw2 - case.lambda * pair.quad_a(&w);
        coercive = coercive.min(lhs - keep * bw2 + tol(bw2));
    }
    outcome(
        "coercivity",
        coercive >= 0.0,
        format!("retained fraction {keep:.4}, worst slack {coercive:.3e}"),
    );

    let mode = pair.unstable_mode(&spectrum, case.lambda)?;
    let consts = CertifiedConstants::certify(pair, &spectrum, &mode)?;
    let checks = consts.verify(pair, &spectrum, &mode);
    let all_ok = checks.iter().all(|c| c.ok);
    let failing: Vec<&str> = checks.iter().filter(|c| !c.ok).map(|c| c.name).collect();
    outcome(
        "constants",
        all_ok,
        if all_ok {
            format!("{} defining inequalities re-verified", checks.len())
        } else {
            format!("failing: {}", failing.join(", "))
        },
    );

    let mut delta_ok = true;
    for s in states(n, 100, 0x5EED_0003) {
        let u = &s.u;
        let pu = apply_p(&mode, consts.delta, u);
        let form = pu.dot(u);
        let uu = u.norm_squared();
        delta_ok &= (1.0 - consts.delta) * uu - tol(uu) <= form
            && form <= (1.0 + consts.delta) * uu + tol(uu);
    }
    outcome("p-collar", delta_ok, format!("delta {:.6e}", consts.delta));

    let zero = DVector::zeros(n);
    let mut worst_res = 0.0f64;
    for p in pair.stationary_points(&spectrum, case.lambda)? {
        let st = State::new(p, zero.clone());
        let r = residual(pair, case.lambda, &st, &zero);
        worst_res = worst_res.max(r.norm() / (case.lambda * pair.a().norm()));
    }
    outcome(
        "rest-points",
        worst_res <= 1e-9,
        format!("scaled residual {worst_res:.3e} <= 1e-9"),
    );

    let mut even = true;
    for s in states(n, 100, 0x5EED_0004) {
        let (u, v) = (&s.u, &s.v);
        let (nu, nv) = (-u, -v);
        even &= energy_e(pair, case.lambda, u, v) == energy_e(pair, case.lambda, &nu, &nv);
        even &= energy_f(pair, &mode, &consts, u, v) == energy_f(pair, &mode, &consts, &nu, &nv);
        even &= energy_s(pair, &spectrum, &consts, 1.0, u, v)
            == energy_s(pair, &spectrum, &consts, -1.0, &nu, &nv);
    }
    outcome("sign-flip", even, "energies even bit for bit".to_string());

    Ok(bad)
}
