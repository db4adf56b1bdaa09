//! Scenario configuration: JSON schema, total validation, and construction
//! of the domain objects a command needs.
//!
//! Validation is all-or-nothing: `Prepared::build` resolves every section a
//! command relies on before the caller opens a single output file, so a bad
//! scenario can never leave partial artifacts behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use beamlab_core::beam::assemble_fd;
use beamlab_core::dynamics::{Forcing, IntegrateOpts, State};
use beamlab_core::sampling::seeded_mode_ball;
use beamlab_core::{GapSpectrum, MatrixPair, UnstableMode};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub discretization: Discretization,
    pub lambda: Option<f64>,
    pub forcing: Option<ForcingSpec>,
    pub initial: Option<InitialSpec>,
    pub integrator: Option<IntegratorSpec>,
    pub eigs: Option<EigsSpec>,
    pub sweep: Option<SweepSpec>,
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Discretization {
    /// Clamped-beam finite differences on n interior nodes.
    Fd { n: usize },
    /// Dense symmetric matrices given row by row.
    ExplicitMatrices { a: Vec<Vec<f64>>, b2: Vec<Vec<f64>> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    Constant { eps: f64, shape: Vec<f64> },
    Decaying { eps: f64, shape: Vec<f64>, rate: f64 },
    Sinusoidal { eps: f64, shape: Vec<f64>, omega: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Explicit {
        u: Vec<f64>,
        v: Vec<f64>,
    },
    /// Coefficients against the first pencil modes (position, then optional
    /// velocity).
    Modes {
        u_coeffs: Vec<f64>,
        #[serde(default)]
        v_coeffs: Vec<f64>,
    },
    /// Seeded draw from coefficient balls over the first `modes` modes.
    RandomBall {
        modes: usize,
        radius_u: f64,
        radius_v: f64,
        seed: u64,
    },
    /// One of the three rest points: sigma in {-1, 0, 1} selects
    /// sigma * sigma0 e1.
    Stationary {
        sigma: i8,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub horizon: f64,
    pub tol: f64,
    pub stride: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigsSpec {
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub count: usize,
    pub seed: u64,
    pub modes: usize,
    pub radius_u: f64,
    pub radius_v: f64,
    /// Negate every drawn state; the odd symmetry of the flow then flips
    /// each label sign exactly.
    #[serde(default)]
    pub negate: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_prefix() -> String {
    "run".to_string()
}

pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ScenarioConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn pair(&self) -> Result<MatrixPair> {
        match &self.discretization {
            Discretization::Fd { n } => Ok(assemble_fd(*n)?),
            Discretization::ExplicitMatrices { a, b2 } => {
                let a = dense("a", a)?;
                let b2 = dense("b2", b2)?;
                Ok(MatrixPair::validate(a, b2)?)
            }
        }
    }

    pub fn lambda(&self) -> Result<f64> {
        self.lambda
            .context("config section `lambda` is required for this command")
    }

    pub fn integrator(&self) -> Result<IntegrateOpts> {
        let spec = self
            .integrator
            .context("config section `integrator` is required for this command")?;
        Ok(IntegrateOpts {
            horizon: spec.horizon,
            tol: spec.tol,
            stride: spec.stride,
        })
    }

    pub fn eigs(&self) -> Result<EigsSpec> {
        self.eigs
            .context("config section `eigs` is required for this command")
    }

    pub fn sweep(&self) -> Result<SweepSpec> {
        self.sweep
            .clone()
            .context("config section `sweep` is required for this command")
    }

    pub fn output(&self) -> Result<OutputSpec> {
        self.output
            .clone()
            .context("config section `output` is required for this command")
    }

    /// How many pencil modes the requested initial data and sweep need.
    pub fn modes_needed(&self) -> usize {
        let mut k = 2;
        if let Some(InitialSpec::Modes { u_coeffs, v_coeffs }) = &self.initial {
            k = k.max(u_coeffs.len()).max(v_coeffs.len());
        }
        if let Some(InitialSpec::RandomBall { modes, .. }) = &self.initial {
            k = k.max(*modes);
        }
        if let Some(sweep) = &self.sweep {
            k = k.max(sweep.modes);
        }
        k
    }

    pub fn forcing(&self, n: usize) -> Result<Forcing> {
        let spec = match &self.forcing {
            None => return Ok(Forcing::zero(n)),
            Some(s) => s,
        };
        let f = match spec {
            ForcingSpec::Zero => Forcing::zero(n),
            ForcingSpec::Constant { eps, shape } => {
                Forcing::constant(*eps, vector("forcing.shape", shape, n)?)?
            }
            ForcingSpec::Decaying { eps, shape, rate } => {
                Forcing::decaying(*eps, vector("forcing.shape", shape, n)?, *rate)?
            }
            ForcingSpec::Sinusoidal { eps, shape, omega } => {
                Forcing::sinusoidal(*eps, vector("forcing.shape", shape, n)?, *omega)?
            }
        };
        Ok(f)
    }

    pub fn initial(&self, spectrum: &GapSpectrum, lambda: f64, n: usize) -> Result<State> {
        let spec = self
            .initial
            .as_ref()
            .context("config section `initial` is required for this command")?;
        match spec {
            InitialSpec::Explicit { u, v } => Ok(State::new(
                vector("initial.u", u, n)?,
                vector("initial.v", v, n)?,
            )),
            InitialSpec::Modes { u_coeffs, v_coeffs } => {
                let mut u = DVector::zeros(n);
                for (j, c) in u_coeffs.iter().enumerate() {
                    u += spectrum.mode(j) * *c;
                }
                let mut v = DVector::zeros(n);
                for (j, c) in v_coeffs.iter().enumerate() {
                    v += spectrum.mode(j) * *c;
                }
                Ok(State::new(u, v))
            }
            InitialSpec::RandomBall { modes, radius_u, radius_v, seed } => {
                Ok(seeded_mode_ball(spectrum, *modes, *radius_u, *radius_v, *seed)?)
            }
            InitialSpec::Stationary { sigma } => {
                if !(-1..=1).contains(sigma) {
                    bail!("initial.sigma must be -1, 0, or 1, got {sigma}");
                }
                let sigma0 = (lambda - spectrum.lambda1()).sqrt();
                let u = spectrum.e1() * (f64::from(*sigma) * sigma0);
                Ok(State::new(u, DVector::zeros(n)))
            }
        }
    }
}

fn dense(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        bail!("matrix `{name}` is empty");
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            bail!(
                "matrix `{name}` is not square: row {i} has {} entries, expected {n}",
                row.len()
            );
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(name: &str, data: &[f64], n: usize) -> Result<DVector<f64>> {
    if data.len() != n {
        bail!("`{name}` has {} entries, expected {n}", data.len());
    }
    Ok(DVector::from_column_slice(data))
}

/// Everything `simulate` needs, resolved before any output is written.
pub struct Prepared {
    pub pair: MatrixPair,
    pub spectrum: GapSpectrum,
    pub mode: UnstableMode,
    pub lambda: f64,
    pub forcing: Forcing,
    pub initial: State,
    pub opts: IntegrateOpts,
}

impl Prepared {
    pub fn build(cfg: &ScenarioConfig) -> Result<Prepared> {
        let pair = cfg.pair()?;
        let lambda = cfg.lambda()?;
        let spectrum = pair.gap_spectrum(cfg.modes_needed())?;
        let mode = pair.unstable_mode(&spectrum, lambda)?;
        let forcing = cfg.forcing(pair.n())?;
        let initial = cfg.initial(&spectrum, lambda, pair.n())?;
        let opts = cfg.integrator()?;
        Ok(Prepared { pair, spectrum, mode, lambda, forcing, initial, opts })
    }
}
