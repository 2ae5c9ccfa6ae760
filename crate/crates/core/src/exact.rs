//! Dense reference computations: log-determinants, solves, covariances and
//! the Gaussian partition function. Everything here is `O(n^3)` and meant for
//! validation-scale problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::EdgeWeights;

/// Largest dimension accepted by the dense routines unless overridden.
pub const DENSE_BUDGET: usize = 4000;

/// `(log |det M|, sign det M)` via LU with partial pivoting.
pub fn dense_logdet(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !m.is_square() {
        return Err(Error::InvalidParameter(format!(
            "determinant of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok((0.0, 1.0));
    }
    let lu = m.clone().lu();
    let mut sign = lu.p().determinant::<f64>();
    let mut log_abs = 0.0;
    for u in lu.u().diagonal().iter() {
        if *u == 0.0 || !u.is_finite() {
            return Err(Error::Singular);
        }
        if *u < 0.0 {
            sign = -sign;
        }
        log_abs += u.abs().ln();
    }
    Ok((log_abs, sign))
}

/// `log Z(A) = -log det(I - A)` for a matrix given as `I - A`; fails when the
/// determinant is not positive.
pub fn log_z_of(identity_minus: &DMatrix<f64>) -> Result<f64> {
    let (log_abs, sign) = dense_logdet(identity_minus)?;
    if sign <= 0.0 {
        return Err(Error::Numerical(
            "det(I - A) is negative; the operator is not walk-summable".into(),
        ));
    }
    Ok(-log_abs)
}

/// Exact `log Z = -log det(I - R)` of a normalized model.
pub fn log_z(weights: &EdgeWeights) -> Result<f64> {
    check_budget(weights.n(), DENSE_BUDGET)?;
    log_z_of(&weights.identity_minus_dense())
}

pub(crate) fn check_budget(dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        Err(Error::Budget {
            what: format!("dense factorization of dimension {dim}"),
            limit,
        })
    } else {
        Ok(())
    }
}

/// `mu = J^{-1} h`, with the residual checked against `1e-10 |h|_inf`.
pub fn dense_solve(j: &DMatrix<f64>, h: &[f64]) -> Result<Vec<f64>> {
    let rhs = DVector::from_column_slice(h);
    let mu = j.clone().lu().solve(&rhs).ok_or(Error::Singular)?;
    let resid = (j * &mu - &rhs).amax();
    let hmax = rhs.amax();
    if resid > 1e-10 * hmax.max(f64::MIN_POSITIVE) && resid > 0.0 {
        return Err(Error::Numerical(format!(
            "solve residual {resid:e} exceeds 1e-10 |h|_inf"
        )));
    }
    Ok(mu.iter().copied().collect())
}

/// Selected entries `K_ij` of `K = J^{-1}`; `J` must be positive definite.
pub fn covariance_entries(j: &DMatrix<f64>, targets: &[(usize, usize)]) -> Result<Vec<f64>> {
    let chol = j
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidModel("J is not positive definite".into()))?;
    let k = chol.inverse();
    targets
        .iter()
        .map(|&(a, b)| {
            if a < k.nrows() && b < k.nrows() {
                Ok(k[(a, b)])
            } else {
                Err(Error::InvalidParameter(format!("entry ({a}, {b}) out of range")))
            }
        })
        .collect()
}

/// `log Zcal(h, J) = (n/2) log 2 pi - (1/2) log det J + (1/2) h^T J^{-1} h`.
pub fn log_partition(j: &DMatrix<f64>, h: &[f64]) -> Result<f64> {
    let n = j.nrows();
    let chol = j
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidModel("J is not positive definite".into()))?;
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let rhs = DVector::from_column_slice(h);
    let mu = chol.solve(&rhs);
    Ok(0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * logdet + 0.5 * rhs.dot(&mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_cycle, gen_random};

    #[test]
    fn identity_and_two_by_two() {
        assert_eq!(dense_logdet(&DMatrix::identity(5, 5)).unwrap(), (0.0, 1.0));
        let r = 0.35;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -r, -r, 1.0]);
        let (l, s) = dense_logdet(&m).unwrap();
        assert_eq!(s, 1.0);
        assert!((l - (1.0 - r * r).ln()).abs() < 1e-15);
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(dense_logdet(&neg).unwrap().1, -1.0);
        assert!(matches!(dense_logdet(&DMatrix::zeros(3, 3)), Err(Error::Singular)));
    }

    #[test]
    fn triangle_characteristic_polynomial() {
        // eigenvalues of the triangle adjacency are 2, -1, -1
        for r in [0.1, 0.2, 0.45] {
            let w = gen_cycle(3, r).unwrap().normalize().0;
            let expect = (1.0 - 2.0 * r) * (1.0 + r) * (1.0 + r);
            assert!((log_z(&w).unwrap() + expect.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn solve_and_covariance() {
        let id = DMatrix::identity(3, 3);
        assert_eq!(dense_solve(&id, &[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        assert_eq!(dense_solve(&id, &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(covariance_entries(&id, &[(1, 1)]).unwrap(), vec![1.0]);
        let r: f64 = 0.3;
        let j = DMatrix::from_row_slice(3, 3, &[1.0, -r, 0.0, -r, 1.0, -r, 0.0, -r, 1.0]);
        let k22 = covariance_entries(&j, &[(1, 1)]).unwrap()[0];
        assert!((k22 - 1.0 / (1.0 - 2.0 * r * r)).abs() < 1e-14);
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(covariance_entries(&indefinite, &[(0, 0)]).is_err());
    }

    #[test]
    fn partition_function() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let id = DMatrix::identity(4, 4);
        assert!((log_partition(&id, &[0.0; 4]).unwrap() - 2.0 * two_pi.ln()).abs() < 1e-14);
        let c = 3.0;
        let scaled = &id * c;
        let diff = log_partition(&scaled, &[0.0; 4]).unwrap() - log_partition(&id, &[0.0; 4]).unwrap();
        assert!((diff + 2.0 * c.ln()).abs() < 1e-14);
        let (jv, hv) = (2.5, 0.7);
        let one = DMatrix::from_element(1, 1, jv);
        let closed = ((two_pi / jv).sqrt() * (hv * hv / (2.0 * jv)).exp()).ln();
        assert!((log_partition(&one, &[hv]).unwrap() - closed).abs() < 1e-14);
    }

    #[test]
    fn normalization_preserves_determinant() {
        let m = gen_random(10, 3.0, 0.8, 11).unwrap();
        let (w, shift) = m.normalize();
        let (lj, sj) = dense_logdet(&m.to_dense()).unwrap();
        assert_eq!(sj, 1.0);
        assert!((lj - (shift - log_z(&w).unwrap())).abs() < 1e-12);
    }
}
