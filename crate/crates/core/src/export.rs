//! Fixed-format CSV emission.
//!
//! All numbers are printed with 17 significant digits (`{:.16e}`), enough
//! to round-trip every f64 bit pattern, so identical runs produce
//! byte-identical files. Column orders are part of the output contract:
//!
//! - trajectory: `t,u_1..u_n,v_1..v_n`
//! - energies:   `t,E,F,S_plus,S_minus,alpha,normBw,u_minus`
//! - sweep:      `seed,u0_norm,v0_norm,sigma,tail_metric,margin,status`
//! - eigs:       `index,lambda,lambda_exact,kind,k,rel_error`

use std::io::{self, Write};

use crate::asymptotics::BasinLabel;
use crate::beam::ModeKind;
use crate::dynamics::Trajectory;
use crate::lyapunov::EnergyReport;

/// 17-significant-digit decimal form; round-trips f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory) -> io::Result<()> {
    let n = if traj.is_empty() { 0 } else { traj.us[0].len() };
    write!(w, "t")?;
    for j in 1..=n {
        write!(w, ",u_{j}")?;
    }
    for j in 1..=n {
        write!(w, ",v_{j}")?;
    }
    writeln!(w)?;
    for k in 0..traj.len() {
        write!(w, "{}", fmt17(traj.times[k]))?;
        for x in traj.us[k].iter() {
            write!(w, ",{}", fmt17(*x))?;
        }
        for x in traj.vs[k].iter() {
            write!(w, ",{}", fmt17(*x))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_energy_csv<W: Write>(w: &mut W, report: &EnergyReport) -> io::Result<()> {
    writeln!(w, "t,E,F,S_plus,S_minus,alpha,normBw,u_minus")?;
    for k in 0..report.times.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt17(report.times[k]),
            fmt17(report.e[k]),
            fmt17(report.f[k]),
            fmt17(report.s_plus[k]),
            fmt17(report.s_minus[k]),
            fmt17(report.alpha[k]),
            fmt17(report.norm_bw[k]),
            fmt17(report.u_minus[k]),
        )?;
    }
    Ok(())
}

/// One classified sweep entry; `label` is None when that row's run failed,
/// with the failure text kept in `status`.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub seed: u64,
    pub u0_norm: f64,
    pub v0_norm: f64,
    pub label: Option<BasinLabel>,
    pub status: String,
}

pub fn write_sweep_csv<W: Write>(w: &mut W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "seed,u0_norm,v0_norm,sigma,tail_metric,margin,status")?;
    for row in rows {
        // commas in failure text would shift columns
        let status = row.status.replace(',', ";");
        match row.label {
            Some(label) => writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.seed,
                fmt17(row.u0_norm),
                fmt17(row.v0_norm),
                fmt17(label.sigma),
                fmt17(label.tail_metric),
                fmt17(label.margin),
                status,
            )?,
            None => writeln!(
                w,
                "{},{},{},,,,{}",
                row.seed,
                fmt17(row.u0_norm),
                fmt17(row.v0_norm),
                status,
            )?,
        }
    }
    Ok(())
}

/// One line of the eigenvalue table; analytic reference columns are empty
/// for pairs with no closed-form spectrum.
#[derive(Debug, Clone)]
pub struct EigRow {
    pub index: usize,
    pub lambda: f64,
    pub exact: Option<(ModeKind, f64)>,
}

pub fn write_eigs_csv<W: Write>(w: &mut W, rows: &[EigRow]) -> io::Result<()> {
    writeln!(w, "index,lambda,lambda_exact,kind,k,rel_error")?;
    for row in rows {
        match row.exact {
            Some((kind, exact)) => {
                let (kind_name, k) = match kind {
                    ModeKind::Trig { k } => ("trig", k),
                    ModeKind::Mixed { k, .. } => ("mixed", k),
                };
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    row.index,
                    fmt17(row.lambda),
                    fmt17(exact),
                    kind_name,
                    k,
                    fmt17((row.lambda - exact).abs() / exact),
                )?;
            }
            None => writeln!(w, "{},{},,,,", row.index, fmt17(row.lambda))?,
        }
    }
    Ok(())
}
