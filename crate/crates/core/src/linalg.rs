//! Dense symmetric eigensolves shared by the spectral modules.
//!
//! Everything here works on explicitly symmetrized copies; callers are
//! expected to have validated symmetry beforehand.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub(crate) fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenpairs of a symmetric matrix, ascending, unit eigenvectors with the
/// largest-magnitude entry made positive.
pub(crate) fn sym_eigen_ascending(m: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let n = m.nrows();
    let se = SymmetricEigen::new(symmetrized(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &i in &order {
        values.push(se.eigenvalues[i]);
        let mut v: DVector<f64> = se.eigenvectors.column(i).into_owned();
        fix_sign(&mut v);
        vectors.push(v);
    }
    (values, vectors)
}

pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        *v = -&*v;
    }
}

/// Generalized symmetric-definite eigenpairs of `k e = mu m e` with `m`
/// positive definite, ascending, eigenvectors normalized so e^T m e = 1.
///
/// Reduction: m = L L^T, solve the standard problem for L^-1 k L^-T, map
/// back through e = L^-T y. One inverse-iteration pass polishes each
/// well-separated pair to the floating-point residual floor.
pub(crate) fn pencil_eigen_ascending(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    name: &'static str,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = k.nrows();
    let chol = nalgebra::Cholesky::new(symmetrized(m))
        .ok_or(Error::NotPositive { name, eig: f64::NAN })?;
    let l = chol.l();
    // c = L^-1 k L^-T
    let x = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    let (values, ys) = sym_eigen_ascending(&c);
    let lt = l.transpose();
    let mut vectors = Vec::with_capacity(n);
    for y in &ys {
        let mut e = lt
            .solve_upper_triangular(y)
            .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
        normalize_in_metric(&mut e, m);
        vectors.push(e);
    }
    let mut values = values;
    polish_pencil(k, m, &mut values, &mut vectors);
    for v in &mut vectors {
        fix_sign(v);
    }
    Ok((values, vectors))
}

fn normalize_in_metric(e: &mut DVector<f64>, m: &DMatrix<f64>) {
    let q = (m * &*e).dot(e);
    if q > 0.0 {
        *e /= q.sqrt();
    }
}

/// One inverse-iteration sweep per eigenpair. Skips clustered eigenvalues
/// and keeps the original pair whenever the residual does not improve.
fn polish_pencil(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    values: &mut [f64],
    vectors: &mut [DVector<f64>],
) {
    let n = values.len();
    let scale = k.norm() + m.norm();
    for i in 0..n {
        let sep = (0..n)
            .filter(|&j| j != i)
            .map(|j| (values[j] - values[i]).abs())
            .fold(f64::INFINITY, f64::min);
        if sep <= 1e-8 * (1.0 + values[i].abs()) {
            continue;
        }
        let old_resid = (k * &vectors[i] - m * &vectors[i] * values[i]).norm();
        let shifted = k - m * values[i];
        let lu = shifted.lu();
        let Some(mut z) = lu.solve(&(m * &vectors[i])) else {
            continue;
        };
        normalize_in_metric(&mut z, m);
        let new_val = (k * &z).dot(&z);
        let new_resid = (k * &z - m * &z * new_val).norm();
        if new_resid.is_finite() && new_resid < old_resid && new_resid <= 1e-10 * scale {
            values[i] = new_val;
            vectors[i] = z;
        }
    }
}
