//! The five subcommands. Each returns a process exit code: 0 when every
//! monitored relation holds, 1 never (errors bubble up as `anyhow::Error`),
//! 2 when a run completed but a certified relation was violated.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::json;

use beamlab_core::asymptotics::{classify, DEFAULT_TAIL_FRACTION};
use beamlab_core::beam::beam_eigenvalues;
use beamlab_core::dynamics::{integrate, State};
use beamlab_core::export::{
    fmt17, write_energy_csv, write_eigs_csv, write_sweep_csv, write_trajectory_csv, EigRow,
    SweepRow,
};
use beamlab_core::lyapunov::{monitor, CertifiedConstants};
use beamlab_core::sampling::{seeded_mode_ball, sweep_seed};
use beamlab_core::Error as CoreError;

use crate::config::{Discretization, OutputSpec, ScenarioConfig};
use crate::verify;

/// Resolved output location, or None when the scenario has no output
/// section and the command only prints.
fn out_spec(cfg: &ScenarioConfig, out_flag: &Option<PathBuf>) -> Option<OutputSpec> {
    match (out_flag, &cfg.output) {
        (Some(dir), Some(spec)) => {
            Some(OutputSpec { dir: dir.clone(), prefix: spec.prefix.clone() })
        }
        (Some(dir), None) => {
            Some(OutputSpec { dir: dir.clone(), prefix: "run".to_string() })
        }
        (None, Some(spec)) => Some(spec.clone()),
        (None, None) => None,
    }
}

fn create(spec: &OutputSpec, stem: &str) -> Result<(fs::File, PathBuf)> {
    fs::create_dir_all(&spec.dir)
        .with_context(|| format!("creating output dir {}", spec.dir.display()))?;
    let path = spec.dir.join(format!("{}_{stem}", spec.prefix));
    let file = fs::File::create(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    Ok((file, path))
}

pub fn eigs(cfg: &ScenarioConfig, out_flag: &Option<PathBuf>) -> Result<i32> {
    let spec = cfg.eigs()?;
    let pair = cfg.pair()?;
    let spectrum = pair.gap_spectrum(spec.count)?;
    let exact = match cfg.discretization {
        Discretization::Fd { .. } => Some(beam_eigenvalues(spec.count)?),
        Discretization::ExplicitMatrices { .. } => None,
    };

    let mut rows = Vec::with_capacity(spec.count);
    for j in 0..spec.count {
        let lambda = spectrum.lambda(j);
        let ex = exact.as_ref().map(|modes| (modes[j].kind, modes[j].value));
        rows.push(EigRow { index: j + 1, lambda, exact: ex });
    }

    println!("index  lambda                     exact                      rel error");
    for row in &rows {
        match row.exact {
            Some((_, ex)) => println!(
                "{:<5}  {:<25}  {:<25}  {:.3e}",
                row.index,
                fmt17(row.lambda),
                fmt17(ex),
                (row.lambda - ex).abs() / ex
            ),
            None => println!("{:<5}  {:<25}", row.index, fmt17(row.lambda)),
        }
    }

    if let Some(spec) = out_spec(cfg, out_flag) {
        let (mut file, path) = create(&spec, "eigs.csv")?;
        write_eigs_csv(&mut file, &rows)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(0)
}

pub fn constants(cfg: &ScenarioConfig, out_flag: &Option<PathBuf>) -> Result<i32> {
    let pair = cfg.pair()?;
    let lambda = cfg.lambda()?;
    let spectrum = pair.gap_spectrum(2)?;
    let mode = pair.unstable_mode(&spectrum, lambda)?;
    let consts = CertifiedConstants::certify(&pair, &spectrum, &mode)?;
    let checks = consts.verify(&pair, &spectrum, &mode);

    let doc = json!({
        "gap": { "lambda1": spectrum.lambda1(), "lambda2": spectrum.lambda2() },
        "unstable_mode": { "lambda0": mode.lambda0, "mu3": mode.mu3_paper },
        "constants": consts,
        "checks": checks,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    println!("{text}");

    if let Some(spec) = out_spec(cfg, out_flag) {
        let (mut file, path) = create(&spec, "constants.json")?;
        file.write_all(text.as_bytes())?;
        file.write_all(b"\n")?;
        eprintln!("wrote {}", path.display());
    }
    Ok(if checks.iter().all(|c| c.ok) { 0 } else { 2 })
}

pub fn simulate(cfg: &ScenarioConfig, out_flag: &Option<PathBuf>) -> Result<i32> {
    let prep = crate::config::Prepared::build(cfg)?;
    let consts = CertifiedConstants::certify(&prep.pair, &prep.spectrum, &prep.mode)?;
    let spec = match out_spec(cfg, out_flag) {
        Some(s) => s,
        None => cfg.output()?, // carries the "section required" diagnostic
    };

    let traj = integrate(&prep.pair, prep.lambda, &prep.forcing, &prep.initial, &prep.opts)?;
    let report = monitor(&traj, &prep.forcing, &prep.pair, &prep.spectrum, &prep.mode, &consts)?;
    let label = classify(&traj, &prep.pair, &prep.spectrum, prep.lambda, DEFAULT_TAIL_FRACTION)?;

    // tail of the certified energy against its forcing-sized ultimate bound
    let tail_from = report.times.len() - report.times.len() / 5;
    let tail_f_max = report.f[tail_from..]
        .iter()
        .fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let sup_f = prep.forcing.sup_after(report.times[tail_from]);
    let tail_f_bound = consts.m1 * sup_f * sup_f;
    let tail_f_pass = tail_f_max <= 1.05 * tail_f_bound + 1e-9;

    let traj_name = "trajectory.csv";
    let energy_name = "energy.csv";
    let summary = json!({
        "lambda": prep.lambda,
        "sigma0": consts.sigma0,
        "label": label,
        "violations": report.violations,
        "identity_max_rel": report.identity_max_rel,
        "tail_f_max": tail_f_max,
        "tail_f_bound": tail_f_bound,
        "tail_f_pass": tail_f_pass,
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
        "min_step": traj.min_step,
        "max_step": traj.max_step,
        "files": { "trajectory": format!("{}_{traj_name}", spec.prefix),
                   "energy": format!("{}_{energy_name}", spec.prefix) },
    });
    let text = serde_json::to_string_pretty(&summary)?;

    let (mut tf, _) = create(&spec, traj_name)?;
    write_trajectory_csv(&mut tf, &traj)?;
    let (mut ef, _) = create(&spec, energy_name)?;
    write_energy_csv(&mut ef, &report)?;
    let (mut sf, spath) = create(&spec, "summary.json")?;
    sf.write_all(text.as_bytes())?;
    sf.write_all(b"\n")?;

    println!("{text}");
    eprintln!("wrote {} and siblings", spath.display());
    Ok(if report.violations.is_empty() { 0 } else { 2 })
}

pub fn sweep(
    cfg: &ScenarioConfig,
    out_flag: &Option<PathBuf>,
    seed_flag: Option<u64>,
    workers: usize,
) -> Result<i32> {
    let sweep = cfg.sweep()?;
    let base_seed = seed_flag.unwrap_or(sweep.seed);
    let pair = cfg.pair()?;
    let lambda = cfg.lambda()?;
    let spectrum = pair.gap_spectrum(cfg.modes_needed())?;
    pair.unstable_mode(&spectrum, lambda)?; // gap membership up front
    let forcing = cfg.forcing(pair.n())?;
    let opts = cfg.integrator()?;
    let spec = match out_spec(cfg, out_flag) {
        Some(s) => s,
        None => cfg.output()?,
    };

    let run_row = |i: u64| -> SweepRow {
        let seed = sweep_seed(base_seed, i);
        let drawn = match seeded_mode_ball(
            &spectrum,
            sweep.modes,
            sweep.radius_u,
            sweep.radius_v,
            seed,
        ) {
            Ok(s) => s,
            Err(e) => {
                return SweepRow {
                    seed,
                    u0_norm: f64::NAN,
                    v0_norm: f64::NAN,
                    label: None,
                    status: e.to_string(),
                }
            }
        };
        let s0 = if sweep.negate {
            State::new(-&drawn.u, -&drawn.v)
        } else {
            drawn
        };
        let (u0_norm, v0_norm) = (s0.u.norm(), s0.v.norm());
        let outcome = integrate(&pair, lambda, &forcing, &s0, &opts).and_then(|traj| {
            classify(&traj, &pair, &spectrum, lambda, DEFAULT_TAIL_FRACTION)
        });
        match outcome {
            Ok(label) => SweepRow {
                seed,
                u0_norm,
                v0_norm,
                label: Some(label),
                status: if label.resolved { "ok" } else { "unresolved" }.to_string(),
            },
            Err(e) => SweepRow { seed, u0_norm, v0_norm, label: None, status: e.to_string() },
        }
    };

    let indices: Vec<u64> = (0..sweep.count as u64).collect();
    let rows: Vec<SweepRow> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("building sweep worker pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            indices.par_iter().map(|i| run_row(*i)).collect()
        })
    } else {
        indices.iter().map(|i| run_row(*i)).collect()
    };

    let (mut file, path) = create(&spec, "sweep.csv")?;
    write_sweep_csv(&mut file, &rows)?;

    let mut plus = 0usize;
    let mut minus = 0usize;
    let mut zero = 0usize;
    let mut unresolved = 0usize;
    let mut failed = 0usize;
    for row in &rows {
        match &row.label {
            Some(l) if !l.resolved => unresolved += 1,
            Some(l) if l.sigma > 0.0 => plus += 1,
            Some(l) if l.sigma < 0.0 => minus += 1,
            Some(_) => zero += 1,
            None => failed += 1,
        }
    }
    println!(
        "sweep: {} rows -> +sigma0 {plus}, -sigma0 {minus}, zero {zero}, \
         unresolved {unresolved}, failed {failed}",
        rows.len()
    );
    eprintln!("wrote {}", path.display());
    Ok(0)
}

pub fn run_verify() -> Result<i32> {
    verify::run()
}

/// Human-facing rendering of core errors that carry the computed gap.
pub fn describe(err: &anyhow::Error) -> String {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        if let CoreError::LambdaOutOfGap { lambda, lo, hi } = core {
            return format!(
                "lambda = {} must lie strictly inside the computed gap ({}, {})",
                fmt17(*lambda),
                fmt17(*lo),
                fmt17(*hi)
            );
        }
    }
    format!("{err:#}")
}
