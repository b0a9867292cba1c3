//! Comparison selection rules: information criteria, the coarsened
//! (power) posterior for the sparse-mean Gaussian family, and Evanno's Δk
//! elbow heuristic.

use nalgebra::{DMatrix, DVector};

use crate::error::{LadError, Result};
use crate::models::MvnSupportModel;

/// Information criterion flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    Aic,
    Bic,
}

/// One-hot weights on the criterion minimizer.
///
/// Scores are `2·total_nll + 2d` (AIC) or `2·total_nll + d·log n` (BIC);
/// exact score ties go to the lowest model index.
pub fn ic_weights(total_nll: &[f64], dims: &[u32], n: usize, kind: IcKind) -> Result<Vec<f64>> {
    if total_nll.is_empty() || total_nll.len() != dims.len() {
        return Err(LadError::Validation(
            "total_nll and dims must be nonempty and equal length".into(),
        ));
    }
    if n < 1 {
        return Err(LadError::Validation("n must be >= 1".into()));
    }
    let per_dim = match kind {
        IcKind::Aic => 2.0,
        IcKind::Bic => (n as f64).ln(),
    };
    let scores = ic_scores(total_nll, dims, per_dim);
    let mut best = 0usize;
    for (k, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = k;
        }
    }
    let mut w = vec![0.0; total_nll.len()];
    w[best] = 1.0;
    Ok(w)
}

/// Criterion scores with an explicit per-dimension penalty
/// (`2` reproduces AIC; `log n` reproduces BIC).
pub fn ic_scores(total_nll: &[f64], dims: &[u32], per_dim_penalty: f64) -> Vec<f64> {
    total_nll
        .iter()
        .zip(dims)
        .map(|(&nll, &d)| 2.0 * nll + per_dim_penalty * f64::from(d))
        .collect()
}

/// Settings of the coarsened posterior over sparse-mean Gaussian models.
#[derive(Debug, Clone, PartialEq)]
pub struct CPostConfig {
    /// Coarsening parameter; `f64::INFINITY` recovers the standard Bayes
    /// posterior (the power `ζ_n = α/(α+n)` tends to 1).
    pub alpha: f64,
    /// Prior precision on the free coordinates.
    pub kappa0: f64,
    /// Per-model prior means on the free coordinates.
    pub theta0_prior: Vec<DVector<f64>>,
}

impl CPostConfig {
    /// Zero prior means for each model, the documented default.
    pub fn zero_means(alpha: f64, kappa0: f64, models: &[MvnSupportModel]) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(LadError::Validation(format!(
                "alpha must be positive (or infinite), got {alpha}"
            )));
        }
        if !(kappa0 > 0.0) || !kappa0.is_finite() {
            return Err(LadError::Validation(format!(
                "kappa0 must be positive and finite, got {kappa0}"
            )));
        }
        Ok(CPostConfig {
            alpha,
            kappa0,
            theta0_prior: models.iter().map(|m| DVector::zeros(m.dim())).collect(),
        })
    }
}

/// Log marginal power likelihoods of the sparse-mean Gaussian candidates,
/// up to one additive constant shared by all models:
///
/// ```text
/// (d_k/2)·log(κ₀/(κ₀ + ζ_n n))
///   − κ₀ ζ_n n / (2(κ₀ + ζ_n n)) · ‖x̄_J − θ₀J‖²
///   − (ζ_n n / 2) · ‖x̄_Jᶜ‖²
/// ```
///
/// with `ζ_n = α/(α + n)` and `ζ_n = 1` at `α = ∞`.
pub fn cpost_log_marginals(
    data: &DMatrix<f64>,
    models: &[MvnSupportModel],
    cfg: &CPostConfig,
) -> Result<Vec<f64>> {
    let (n, p) = data.shape();
    if n == 0 {
        return Err(LadError::Validation("data matrix is empty".into()));
    }
    if models.is_empty() || cfg.theta0_prior.len() != models.len() {
        return Err(LadError::Validation(
            "need one prior mean vector per model".into(),
        ));
    }
    let nf = n as f64;
    let zeta = if cfg.alpha.is_infinite() {
        1.0
    } else {
        cfg.alpha / (cfg.alpha + nf)
    };
    let zn = zeta * nf;
    let xbar: Vec<f64> = (0..p).map(|j| data.column(j).sum() / nf).collect();

    models
        .iter()
        .zip(&cfg.theta0_prior)
        .map(|(model, theta0j)| {
            if model.ambient_dim() != p {
                return Err(LadError::Validation(format!(
                    "model lives on dimension {} but data has {p} columns",
                    model.ambient_dim()
                )));
            }
            if theta0j.len() != model.dim() {
                return Err(LadError::Validation(format!(
                    "prior mean has length {} but the model has {} free coordinates",
                    theta0j.len(),
                    model.dim()
                )));
            }
            let d = model.dim() as f64;
            let mut fit = 0.0;
            for (idx, &j) in model.support().iter().enumerate() {
                fit += (xbar[j] - theta0j[idx]).powi(2);
            }
            let mut miss = 0.0;
            for (j, &x) in xbar.iter().enumerate() {
                if model.support().binary_search(&j).is_err() {
                    miss += x * x;
                }
            }
            Ok(d / 2.0 * (cfg.kappa0 / (cfg.kappa0 + zn)).ln()
                - cfg.kappa0 * zn / (2.0 * (cfg.kappa0 + zn)) * fit
                - zn / 2.0 * miss)
        })
        .collect()
}

/// Softmax of log marginals with max subtraction; sums to 1 within 1e-12
/// and is invariant to a shared additive constant.
pub fn cpost_weights(log_marginals: &[f64]) -> Result<Vec<f64>> {
    if log_marginals.is_empty() {
        return Err(LadError::Validation("no log marginals".into()));
    }
    if let Some(bad) = log_marginals.iter().find(|x| !x.is_finite()) {
        return Err(LadError::Validation(format!(
            "log marginals must be finite, got {bad}"
        )));
    }
    let max = log_marginals
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = log_marginals.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Output of Evanno's Δk computation over a runs×K table of fit scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EvannoResult {
    /// Mean of L(k) over runs.
    pub means: Vec<f64>,
    /// First differences of the means; undefined at k = 1.
    pub first_diffs: Vec<Option<f64>>,
    /// Δk = mean |L(k+1) − 2L(k) + L(k−1)| / sd(L(k)); undefined at the
    /// endpoints. A zero across-run sd yields 0 when the mean absolute
    /// second difference is also 0 and +∞ otherwise, with a flag either way.
    pub delta_k: Vec<Option<f64>>,
    /// True where the across-run sd of L(k) was exactly zero.
    pub zero_sd: Vec<bool>,
}

impl EvannoResult {
    /// Index (0-based) of the largest defined Δk, if any is finite.
    pub fn argmax(&self) -> Option<usize> {
        self.delta_k
            .iter()
            .enumerate()
            .filter_map(|(k, d)| d.map(|v| (k, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
    }
}

/// Evanno's Δk over per-run fit scores `l` (runs × K). Requires at least
/// 2 runs and K ≥ 3 so that an interior point exists.
pub fn evanno_delta_k(l: &DMatrix<f64>) -> Result<EvannoResult> {
    let (runs, k) = l.shape();
    if runs < 2 {
        return Err(LadError::Validation(format!(
            "Evanno's method needs >= 2 runs, got {runs}"
        )));
    }
    if k < 3 {
        return Err(LadError::Validation(format!(
            "Evanno's method needs K >= 3 columns, got {k}"
        )));
    }
    let means: Vec<f64> = (0..k).map(|j| l.column(j).sum() / runs as f64).collect();
    let sds: Vec<f64> = (0..k)
        .map(|j| {
            let m = means[j];
            (l.column(j).iter().map(|x| (x - m).powi(2)).sum::<f64>() / (runs as f64 - 1.0)).sqrt()
        })
        .collect();
    let first_diffs: Vec<Option<f64>> = (0..k)
        .map(|j| (j > 0).then(|| means[j] - means[j - 1]))
        .collect();
    let mut delta_k = vec![None; k];
    let mut zero_sd = vec![false; k];
    for j in 1..k - 1 {
        let mean_abs_second: f64 = (0..runs)
            .map(|r| (l[(r, j + 1)] - 2.0 * l[(r, j)] + l[(r, j - 1)]).abs())
            .sum::<f64>()
            / runs as f64;
        if sds[j] == 0.0 {
            zero_sd[j] = true;
            delta_k[j] = Some(if mean_abs_second == 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
        } else {
            delta_k[j] = Some(mean_abs_second / sds[j]);
        }
    }
    Ok(EvannoResult {
        means,
        first_diffs,
        delta_k,
        zero_sd,
    })
}
