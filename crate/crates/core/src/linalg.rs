//! Ordinary least squares for the identification fits.
//!
//! Columns are equilibrated to unit norm, then the normal equations are
//! solved by Cholesky. When the equilibrated Gram matrix has a condition
//! number above [`NORMAL_EQUATION_COND_LIMIT`] the solve falls back to a
//! column-pivoted Householder QR of the regressor matrix itself.

use nalgebra::{ColPivQR, DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

pub(crate) const NORMAL_EQUATION_COND_LIMIT: f64 = 1e8;
const RANK_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Method {
    NormalEquations,
    PivotedQr,
}

#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    pub residual_rms: f64,
    pub method: Method,
    /// Condition number of the equilibrated Gram matrix.
    pub gram_condition: f64,
}

/// Solves `min ‖X·c − y‖₂` for a row-major regressor list.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n != y.len() {
        return Err(Error::InvalidParams(format!("{n} regressor rows but {} targets", y.len())));
    }
    if m == 0 || n < m {
        return Err(Error::RankDeficient(format!("{n} rows for {m} unknowns")));
    }
    let x = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    if x.iter().chain(yv.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite value in regression data".into()));
    }

    let mut scale = vec![0.0; m];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = x.column(j).norm();
        if norm == 0.0 {
            return Err(Error::RankDeficient(format!("regressor column {j} is identically zero")));
        }
        *s = norm;
    }
    let xs = DMatrix::from_fn(n, m, |i, j| x[(i, j)] / scale[j]);

    let gram = xs.transpose() * &xs;
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let lmax = eig.max();
    let lmin = eig.min();
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };

    let (zs, method) = match (cond <= NORMAL_EQUATION_COND_LIMIT)
        .then(|| gram.clone().cholesky())
        .flatten()
    {
        Some(chol) => (chol.solve(&(xs.transpose() * &yv)), Method::NormalEquations),
        None => (pivoted_qr_solve(xs.clone(), &yv)?, Method::PivotedQr),
    };

    let coef: Vec<f64> = zs.iter().zip(&scale).map(|(z, s)| z / s).collect();
    let fitted = &x * DVector::from_column_slice(&coef);
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(LeastSquares {
        coef,
        residuals,
        residual_rms,
        method,
        gram_condition: cond,
    })
}

fn pivoted_qr_solve(xs: DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let m = xs.ncols();
    let qr = ColPivQR::new(xs);
    let r = qr.r();
    let d0 = r[(0, 0)].abs();
    for k in 0..m {
        if r[(k, k)].abs() <= RANK_TOL * d0 {
            return Err(Error::RankDeficient(format!(
                "pivoted QR diagonal {k} is {:e} relative to {:e}",
                r[(k, k)].abs(),
                d0
            )));
        }
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let head = qty.rows(0, m).into_owned();
    let mut z = r
        .solve_upper_triangular(&head)
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    qr.p().inv_permute_rows(&mut z);
    Ok(z)
}
