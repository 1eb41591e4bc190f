//! Shared least-squares machinery.
//!
//! All regressions in the crate solve through an SVD rather than explicit
//! normal equations; lagged and transformed conflict-count designs are
//! ill-conditioned enough that the extra stability matters. Singular values
//! below `max(n, k) * eps * sigma_max` are treated as zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Output of a full-rank least-squares solve.
pub struct Lstsq {
    pub coef: DVector<f64>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    /// (X'X)^-1, reconstructed from the SVD factors.
    pub xtx_inv: DMatrix<f64>,
    pub rank: usize,
}

/// Rank of `x` under the default singular-value tolerance.
pub fn rank(x: &DMatrix<f64>) -> usize {
    let svd = x.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let tol = rank_tol(x.nrows(), x.ncols(), smax);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

fn rank_tol(n: usize, k: usize, smax: f64) -> f64 {
    n.max(k) as f64 * f64::EPSILON * smax
}

/// Least-squares solve requiring `x` to have full column rank.
///
/// On rank deficiency the error names the dependent column set (labels are
/// positional; pass an empty slice to report indices instead).
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>, labels: &[String]) -> Result<Lstsq> {
    let (n, k) = (x.nrows(), x.ncols());
    if n <= k {
        return Err(Error::TooFewObservations { n, k });
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rank_tol(n, k, smax);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < k {
        return Err(Error::RankDeficient {
            columns: dependent_columns(x, labels),
        });
    }

    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");

    // beta = V S^-1 U' y
    let mut uty = u.transpose() * y;
    for i in 0..k {
        uty[i] /= svd.singular_values[i];
    }
    let coef = v_t.transpose() * uty;

    // (X'X)^-1 = V S^-2 V'
    let mut vs = v_t.transpose();
    for j in 0..k {
        let s2 = svd.singular_values[j] * svd.singular_values[j];
        for i in 0..k {
            vs[(i, j)] /= s2;
        }
    }
    let xtx_inv = vs * v_t;

    let fitted = x * &coef;
    let residuals = y - &fitted;
    Ok(Lstsq {
        coef,
        fitted,
        residuals,
        xtx_inv,
        rank,
    })
}

/// Minimum-norm least-squares solve that tolerates rank deficiency.
///
/// Used for auxiliary regressions (VIF, dependence probes) where collinearity
/// is the thing being measured, not an error.
pub fn lstsq_pinv(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (n, k) = (x.nrows(), x.ncols());
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rank_tol(n, k, smax);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let mut uty = u.transpose() * y;
    for i in 0..uty.len() {
        if svd.singular_values[i] > tol {
            uty[i] /= svd.singular_values[i];
        } else {
            uty[i] = 0.0;
        }
    }
    v_t.transpose() * uty
}

/// Columns expressible (to 1e-8 relative residual) as combinations of the
/// others. Perfectly duplicated columns are both reported.
pub fn dependent_columns(x: &DMatrix<f64>, labels: &[String]) -> Vec<String> {
    let k = x.ncols();
    let name = |j: usize| {
        labels
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("column {j}"))
    };
    if k == 1 {
        return if x.column(0).norm() == 0.0 {
            vec![name(0)]
        } else {
            vec![]
        };
    }
    let mut out = Vec::new();
    for j in 0..k {
        let target = DVector::from(x.column(j).clone_owned());
        let others = x.clone().remove_column(j);
        let coef = lstsq_pinv(&others, &target);
        let resid = &target - others * coef;
        let scale = target.norm();
        let dependent = if scale == 0.0 {
            true
        } else {
            resid.norm() / scale < 1e-8
        };
        if dependent {
            out.push(name(j));
        }
    }
    out
}
