//! Ordinary least squares with classical, HC1, and cluster-robust
//! standard errors, plus variance-inflation-factor diagnostics.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linalg;

/// Which covariance estimator produced the standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeKind {
    /// Homoskedastic: sigma^2 (X'X)^-1.
    Classical,
    /// White sandwich with the n/(n-k) small-sample scaling.
    Hc1,
    /// Liang-Zeger sandwich summing score outer products within clusters,
    /// with the G/(G-1) * (n-1)/(n-k) correction.
    Cluster,
}

impl std::fmt::Display for SeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeKind::Classical => write!(f, "classical"),
            SeKind::Hc1 => write!(f, "HC1"),
            SeKind::Cluster => write!(f, "cluster"),
        }
    }
}

/// A fitted least-squares regression.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub labels: Vec<String>,
    pub coefficients: DVector<f64>,
    pub stderr: DVector<f64>,
    pub p_values: DVector<f64>,
    /// Coefficient covariance under `se_kind`.
    pub vcov: DMatrix<f64>,
    pub se_kind: SeKind,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    pub n: usize,
    pub k: usize,
    /// Residual degrees of freedom used for sigma^2, t p-values, and CIs.
    /// Equals n - k for pooled fits; panel callers subtract absorbed effects.
    pub df_resid: usize,
}

impl OlsFit {
    /// Two-sided 95% confidence intervals from the t distribution.
    pub fn ci95(&self) -> Vec<(f64, f64)> {
        let t = StudentsT::new(0.0, 1.0, self.df_resid as f64)
            .expect("df validated at fit time");
        let q = t.inverse_cdf(0.975);
        self.coefficients
            .iter()
            .zip(self.stderr.iter())
            .map(|(&b, &se)| (b - q * se, b + q * se))
            .collect()
    }
}

/// Fits OLS with the requested standard-error estimator.
///
/// `cluster_keys` (one id per row) is required iff `se_kind` is
/// [`SeKind::Cluster`]. The design must have full column rank under the
/// singular-value tolerance; the error names the dependent columns.
pub fn fit_ols(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    labels: &[String],
    se_kind: SeKind,
    cluster_keys: Option<&[usize]>,
) -> Result<OlsFit> {
    fit_ols_with_df(y, x, labels, se_kind, cluster_keys, None)
}

/// As [`fit_ols`], with an overridden residual degree-of-freedom count for
/// estimators that absorb effects outside the design matrix.
pub(crate) fn fit_ols_with_df(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    labels: &[String],
    se_kind: SeKind,
    cluster_keys: Option<&[usize]>,
    df_resid: Option<usize>,
) -> Result<OlsFit> {
    let (n, k) = (x.nrows(), x.ncols());
    if se_kind == SeKind::Cluster && cluster_keys.is_none() {
        return Err(Error::Config(
            "cluster standard errors require cluster keys".into(),
        ));
    }
    if let Some(keys) = cluster_keys {
        if keys.len() != n {
            return Err(Error::Config(format!(
                "cluster keys length {} != n {}",
                keys.len(),
                n
            )));
        }
    }
    let df = df_resid.unwrap_or(n.saturating_sub(k));
    if df == 0 {
        return Err(Error::TooFewObservations { n, k });
    }

    let solved = linalg::lstsq(x, y, labels)?;
    let sse: f64 = solved.residuals.iter().map(|e| e * e).sum();
    let mean_y = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let adj_r_squared = if sst > 0.0 {
        1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df as f64
    } else {
        0.0
    };

    let vcov = match se_kind {
        SeKind::Classical => {
            let sigma2 = sse / df as f64;
            &solved.xtx_inv * sigma2
        }
        SeKind::Hc1 => {
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let e2 = solved.residuals[i] * solved.residuals[i];
                for a in 0..k {
                    for b in a..k {
                        let v = e2 * x[(i, a)] * x[(i, b)];
                        meat[(a, b)] += v;
                        if a != b {
                            meat[(b, a)] += v;
                        }
                    }
                }
            }
            let scale = n as f64 / df as f64;
            &solved.xtx_inv * meat * &solved.xtx_inv * scale
        }
        SeKind::Cluster => {
            let keys = cluster_keys.expect("checked above");
            let mut scores: HashMap<usize, DVector<f64>> = HashMap::new();
            for i in 0..n {
                let s = scores
                    .entry(keys[i])
                    .or_insert_with(|| DVector::zeros(k));
                for j in 0..k {
                    s[j] += x[(i, j)] * solved.residuals[i];
                }
            }
            let g = scores.len() as f64;
            if g < 2.0 {
                return Err(Error::Config(
                    "cluster standard errors need at least 2 clusters".into(),
                ));
            }
            let mut meat = DMatrix::zeros(k, k);
            for s in scores.values() {
                meat += s * s.transpose();
            }
            let correction = (g / (g - 1.0)) * ((n as f64 - 1.0) / df as f64);
            &solved.xtx_inv * meat * &solved.xtx_inv * correction
        }
    };

    let stderr = DVector::from_iterator(k, (0..k).map(|j| vcov[(j, j)].max(0.0).sqrt()));
    let tdist = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| Error::Insufficient(format!("t distribution: {e}")))?;
    let p_values = DVector::from_iterator(
        k,
        (0..k).map(|j| {
            if stderr[j] > 0.0 {
                2.0 * (1.0 - tdist.cdf((solved.coef[j] / stderr[j]).abs()))
            } else {
                f64::NAN
            }
        }),
    );

    Ok(OlsFit {
        labels: labels.to_vec(),
        coefficients: solved.coef,
        stderr,
        p_values,
        vcov,
        se_kind,
        r_squared,
        adj_r_squared,
        fitted: solved.fitted,
        residuals: solved.residuals,
        n,
        k,
        df_resid: df,
    })
}

/// Variance inflation factors, one per predictor.
#[derive(Debug, Clone)]
pub struct VifReport {
    pub labels: Vec<String>,
    /// `1 / (1 - R^2_j)`; `f64::INFINITY` flags perfect collinearity.
    pub vif: Vec<f64>,
}

/// Computes VIFs by regressing each predictor on all the others.
///
/// `x` holds predictor columns only — pass the design without its intercept;
/// each auxiliary regression adds its own constant. Perfectly collinear
/// columns report `+inf` rather than failing.
pub fn vif(x: &DMatrix<f64>, labels: &[String]) -> Result<VifReport> {
    let (n, k) = (x.nrows(), x.ncols());
    if k < 2 {
        return Err(Error::Insufficient(
            "VIF needs at least 2 predictors".into(),
        ));
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let target = DVector::from(x.column(j).clone_owned());
        let mut aux = DMatrix::zeros(n, k);
        for i in 0..n {
            aux[(i, 0)] = 1.0;
        }
        let mut c = 1;
        for jj in 0..k {
            if jj == j {
                continue;
            }
            for i in 0..n {
                aux[(i, c)] = x[(i, jj)];
            }
            c += 1;
        }
        let coef = linalg::lstsq_pinv(&aux, &target);
        let resid = &target - aux * coef;
        let sse: f64 = resid.iter().map(|e| e * e).sum();
        let mean = target.mean();
        let sst: f64 = target.iter().map(|v| (v - mean) * (v - mean)).sum();
        let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
        out.push(if r2 >= 1.0 - 1e-12 {
            f64::INFINITY
        } else {
            1.0 / (1.0 - r2)
        });
    }
    Ok(VifReport {
        labels: labels.to_vec(),
        vif: out,
    })
}
