//! Validated operator pair (A, B^2) and the inertia count of B^2 - lambda A.
//!
//! B itself is never materialized: |Bu|^2 = u^T B^2 u and
//! |A^(1/2)u|^2 = u^T A u are the only ways the square roots enter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative asymmetry allowed before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues of B^2 - lambda A within this fraction of |B^2| of zero make
/// the inertia count ill-posed.
pub const CROSSING_TOL: f64 = 1e-10;

/// A symmetric positive definite pair together with the two coupling
/// constants of the non-commuting estimate chain
/// |Bu|^2 >= mu1 |Au|^2 >= mu1 mu2 |A^(1/2)u|^2 >= mu1 mu2^2 |u|^2.
#[derive(Debug, Clone)]
pub struct MatrixPair {
    n: usize,
    a: DMatrix<f64>,
    b2: DMatrix<f64>,
    /// Largest constant with u^T B^2 u >= mu1 u^T A^2 u.
    pub mu1: f64,
    /// Smallest eigenvalue of A.
    pub mu2: f64,
}

impl MatrixPair {
    /// Checks symmetry and positivity, then computes mu1 (smallest
    /// eigenvalue of the pencil (B^2, A^2)) and mu2 (smallest eigenvalue
    /// of A). Inputs are symmetrized before further use.
    pub fn validate(a: DMatrix<f64>, b2: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || !a.is_square() || !b2.is_square() || a.nrows() != b2.nrows() {
            return Err(Error::invalid(format!(
                "pair dimensions do not match: A is {}x{}, B2 is {}x{}",
                a.nrows(),
                a.ncols(),
                b2.nrows(),
                b2.ncols()
            )));
        }
        for (name, m) in [("A", &a), ("B2", &b2)] {
            let asym = linalg::relative_asymmetry(m);
            if asym > SYMMETRY_TOL {
                return Err(Error::NotSymmetric { name, asym });
            }
        }
        let a = linalg::symmetrized(&a);
        let b2 = linalg::symmetrized(&b2);
        let (eigs_a, _) = linalg::sym_eigen_ascending(&a);
        let (eigs_b2, _) = linalg::sym_eigen_ascending(&b2);
        let mu2 = eigs_a[0];
        if !(mu2 > 1e-14 * eigs_a[eigs_a.len() - 1]) || mu2 <= 0.0 {
            return Err(Error::NotPositive { name: "A", eig: mu2 });
        }
        let min_b2 = eigs_b2[0];
        if !(min_b2 > 1e-14 * eigs_b2[eigs_b2.len() - 1]) || min_b2 <= 0.0 {
            return Err(Error::NotPositive { name: "B2", eig: min_b2 });
        }
        let a_sq = linalg::symmetrized(&(&a * &a));
        let (pencil, _) = linalg::pencil_eigen_ascending(&b2, &a_sq, "A^2")?;
        let mu1 = pencil[0];
        Ok(MatrixPair { n: a.nrows(), a, b2, mu1, mu2 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b2(&self) -> &DMatrix<f64> {
        &self.b2
    }

    /// |A^(1/2) u|^2 = u^T A u.
    pub fn quad_a(&self, u: &DVector<f64>) -> f64 {
        (&self.a * u).dot(u)
    }

    /// |B u|^2 = u^T B^2 u.
    pub fn quad_b2(&self, u: &DVector<f64>) -> f64 {
        (&self.b2 * u).dot(u)
    }

    /// |B u|, clamped against tiny negative round-off.
    pub fn norm_b(&self, u: &DVector<f64>) -> f64 {
        self.quad_b2(u).max(0.0).sqrt()
    }

    /// Number of negative eigenvalues of B^2 - lambda A. Eigenvalues within
    /// `CROSSING_TOL * |B^2|_F` of zero mean lambda sits on a pencil
    /// eigenvalue and the count is refused.
    ///
    /// The count is 0 below the gap, 1 inside it, and at least 2 above.
    pub fn inertia_index(&self, lambda: f64) -> Result<usize> {
        let shifted = &self.b2 - &self.a * lambda;
        let (eigs, _) = linalg::sym_eigen_ascending(&shifted);
        let threshold = CROSSING_TOL * self.b2.norm();
        if let Some(&eig) = eigs.iter().find(|e| e.abs() <= threshold) {
            return Err(Error::NearSingular { lambda, eig, threshold });
        }
        Ok(eigs.iter().filter(|&&e| e < -threshold).count())
    }
}
