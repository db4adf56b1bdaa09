//! Numerical laboratory for the damped second-order evolution equation
//!
//! ```text
//! u'' + u' + B^2 u - lambda A u + |A^(1/2)u|^2 A u = f(t)
//! ```
//!
//! driven by a symmetric positive definite pair (A, B^2) that need not
//! commute. The crate computes the pencil spectrum and the unstable
//! direction for lambda inside the first spectral gap, certifies the
//! constant chain behind the Lyapunov energies E, F and S, integrates the
//! stiff dynamics, and classifies trajectories by the rest point they
//! reach. A clamped-beam discretization provides the canonical
//! non-commuting pair.

pub mod asymptotics;
pub mod beam;
pub mod dynamics;
pub mod error;
pub mod export;
mod linalg;
pub mod lyapunov;
pub mod pair;
pub mod sampling;
pub mod spectrum;

pub use error::{Error, Result};
pub use pair::MatrixPair;
pub use spectrum::{GapSpectrum, HSplit, UnstableMode, WSplit};
