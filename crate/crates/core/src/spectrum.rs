//! Pencil spectrum, the unstable direction inside the gap, and the two
//! state-space splittings built from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::pair::{MatrixPair, CROSSING_TOL};

/// lambda2 - lambda1 below this fraction of lambda1 counts as a multiple
/// smallest eigenvalue.
pub const GAP_TOL: f64 = 1e-8;

/// Leading part of the generalized spectrum B^2 e = lambda A e.
///
/// Eigenvalues ascend; eigenvectors satisfy e_j^T A e_k = delta_jk with the
/// largest-magnitude entry of each made positive.
#[derive(Debug, Clone)]
pub struct GapSpectrum {
    lambdas: Vec<f64>,
    modes: Vec<DVector<f64>>,
    /// Full eigenvalue list of the pencil, kept for gap checks.
    all_lambdas: Vec<f64>,
    a_e1: DVector<f64>,
    /// True on every successfully constructed value; the constructor
    /// refuses a multiple lambda1 outright.
    pub simple_gap: bool,
}

/// alpha e1 + w with w A-orthogonal to e1.
#[derive(Debug, Clone)]
pub struct WSplit {
    pub alpha: f64,
    pub w: DVector<f64>,
}

/// Euclidean split along the unstable direction: u = plus + minus * e0.
#[derive(Debug, Clone)]
pub struct HSplit {
    pub minus: f64,
    pub plus: DVector<f64>,
}

/// Negative direction of B^2 - lambda A for a lambda inside the gap.
#[derive(Debug, Clone)]
pub struct UnstableMode {
    pub lambda: f64,
    /// -lambda0 is the single negative eigenvalue of B^2 - lambda A.
    pub lambda0: f64,
    /// Unit eigenvector, largest-magnitude entry positive.
    pub e0: DVector<f64>,
    /// sqrt(lambda - lambda1); the nonzero rest points are +-sigma0 e1.
    pub sigma0: f64,
    /// Sharp restricted coercivity constant:
    /// min of u^T(B^2-lambda A)u / u^T B^2 u over u orthogonal to e0.
    pub mu3_exact: f64,
    /// Closed-form lower bound for the same constant.
    pub mu3_paper: f64,
}

impl MatrixPair {
    /// First k eigenpairs of the pencil. Refuses a multiple smallest
    /// eigenvalue: the single-mode machinery downstream has no meaning
    /// without a simple lambda1.
    pub fn gap_spectrum(&self, k: usize) -> Result<GapSpectrum> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "requested {k} modes from an {n}-dimensional pair"
            )));
        }
        let (all_lambdas, vectors) = linalg::pencil_eigen_ascending(self.b2(), self.a(), "A")?;
        if n >= 2 {
            let (l1, l2) = (all_lambdas[0], all_lambdas[1]);
            if l2 - l1 <= GAP_TOL * l1 {
                return Err(Error::DegenerateGap { lambda1: l1, lambda2: l2 });
            }
        }
        let modes: Vec<DVector<f64>> = vectors.into_iter().take(k).collect();
        let a_e1 = self.a() * &modes[0];
        Ok(GapSpectrum {
            lambdas: all_lambdas[..k].to_vec(),
            modes,
            all_lambdas,
            a_e1,
            simple_gap: true,
        })
    }

    /// Negative eigenpair of B^2 - lambda A for lambda strictly inside
    /// (lambda1, lambda2), with both the sharp and the closed-form
    /// restricted coercivity constants.
    pub fn unstable_mode(&self, spectrum: &GapSpectrum, lambda: f64) -> Result<UnstableMode> {
        let (l1, l2) = (spectrum.lambda1(), spectrum.lambda2());
        if !(lambda > l1 && lambda < l2) {
            return Err(Error::LambdaOutOfGap { lambda, lo: l1, hi: l2 });
        }
        let n = self.n();
        let shifted = self.b2() - self.a() * lambda;
        let (eigs, vecs) = linalg::sym_eigen_ascending(&shifted);
        let threshold = CROSSING_TOL * self.b2().norm();
        if eigs[0] >= -threshold || (n >= 2 && eigs[1] <= threshold) {
            let eig = if eigs[0] >= -threshold { eigs[0] } else { eigs[1] };
            return Err(Error::NearSingular { lambda, eig, threshold });
        }
        let lambda0 = -eigs[0];
        let e0 = vecs[0].normalize();

        // Restrict the pencil (B^2 - lambda A, B^2) to the orthogonal
        // complement of e0 via a Householder reflection sending e0 to a
        // coordinate axis, then drop that axis.
        let mu3_exact = if n >= 2 {
            let mut hv = e0.clone();
            let s = if e0[n - 1] >= 0.0 { 1.0 } else { -1.0 };
            hv[n - 1] += s;
            let hv = hv.normalize();
            let reflect = |m: &DMatrix<f64>| -> DMatrix<f64> {
                // H m H with H = I - 2 hv hv^T
                let hm = m - &hv * (hv.transpose() * m) * 2.0;
                &hm - (&hm * &hv) * hv.transpose() * 2.0
            };
            let lr = reflect(&shifted);
            let br = reflect(self.b2());
            let lred = lr.view((0, 0), (n - 1, n - 1)).into_owned();
            let bred = br.view((0, 0), (n - 1, n - 1)).into_owned();
            let (vals, _) = linalg::pencil_eigen_ascending(
                &linalg::symmetrized(&lred),
                &linalg::symmetrized(&bred),
                "B2 restricted",
            )?;
            vals[0]
        } else {
            1.0
        };

        let a_half_e0_sq = self.quad_a(&e0);
        let mu3_paper = 0.999
            * ((l2 - lambda) / (l2 + lambda))
                .min(lambda0 / (2.0 * lambda * a_half_e0_sq + lambda0));

        Ok(UnstableMode {
            lambda,
            lambda0,
            e0,
            sigma0: (lambda - l1).sqrt(),
            mu3_exact,
            mu3_paper,
        })
    }

    /// The three rest points of the unforced flow: 0 and +-sigma0 e1.
    pub fn stationary_points(
        &self,
        spectrum: &GapSpectrum,
        lambda: f64,
    ) -> Result<Vec<DVector<f64>>> {
        let (l1, l2) = (spectrum.lambda1(), spectrum.lambda2());
        if !(lambda > l1 && lambda < l2) {
            return Err(Error::LambdaOutOfGap { lambda, lo: l1, hi: l2 });
        }
        let sigma0 = (lambda - l1).sqrt();
        let zero = DVector::zeros(self.n());
        let plus = spectrum.e1() * sigma0;
        let minus = -&plus;
        Ok(vec![zero, plus, minus])
    }
}

impl GapSpectrum {
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.lambdas[j]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mode(&self, j: usize) -> &DVector<f64> {
        &self.modes[j]
    }

    pub fn lambda1(&self) -> f64 {
        self.all_lambdas[0]
    }

    /// Second pencil eigenvalue, available even when only one mode was kept.
    pub fn lambda2(&self) -> f64 {
        self.all_lambdas[1]
    }

    pub fn e1(&self) -> &DVector<f64> {
        &self.modes[0]
    }

    /// u = alpha e1 + w with alpha = <u, A e1>; w is A-orthogonal to e1, so
    /// |A^(1/2)u|^2 = alpha^2 + |A^(1/2)w|^2 and
    /// |Bu|^2 = lambda1 alpha^2 + |Bw|^2.
    pub fn split_w(&self, u: &DVector<f64>) -> WSplit {
        let alpha = self.a_e1.dot(u);
        let w = u - self.e1() * alpha;
        WSplit { alpha, w }
    }
}

impl UnstableMode {
    /// Euclidean-orthogonal split along e0.
    pub fn split_h(&self, u: &DVector<f64>) -> HSplit {
        let minus = self.e0.dot(u);
        let plus = u - &self.e0 * minus;
        HSplit { minus, plus }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_pair() -> MatrixPair {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let b2 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 8.0]));
        MatrixPair::validate(a, b2).unwrap()
    }

    #[test]
    fn rejects_zero_and_oversized_mode_counts() {
        let pair = diag_pair();
        assert!(pair.gap_spectrum(0).is_err());
        assert!(pair.gap_spectrum(3).is_err());
    }

    #[test]
    fn lambda2_available_with_one_kept_mode() {
        let pair = diag_pair();
        let sp = pair.gap_spectrum(1).unwrap();
        assert_eq!(sp.k(), 1);
        assert!((sp.lambda2() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sigma0_squared_is_lambda_minus_lambda1() {
        let pair = diag_pair();
        let sp = pair.gap_spectrum(2).unwrap();
        for lambda in [1.5, 2.0, 3.0, 3.9] {
            let mode = pair.unstable_mode(&sp, lambda).unwrap();
            assert_eq!(mode.sigma0, (lambda - 1.0).sqrt());
        }
    }

    #[test]
    fn mu3_bounds_inside_the_gap() {
        let pair = diag_pair();
        let sp = pair.gap_spectrum(2).unwrap();
        for lambda in [1.2, 2.0, 3.5] {
            let mode = pair.unstable_mode(&sp, lambda).unwrap();
            assert!(mode.mu3_exact > 0.0 && mode.mu3_exact < 1.0);
            assert!(mode.mu3_paper > 0.0);
            assert!(mode.mu3_paper <= mode.mu3_exact);
        }
    }
}
