//! Selection scores over posterior draws of the loss mean vector.
//!
//! For a tolerance δ ≥ 0, a draw μ ∈ ℝᴷ induces
//!
//! ```text
//! M_δ(μ)  = {k : μ_k ≤ min_j μ_j + δ}            (δ-optimal models)
//! c*_δ(μ) = min {c(k) : k ∈ M_δ(μ)}              (minimal complexity)
//! M*_δ(μ) = argmin {μ_k : c(k) = c*_δ(μ)}        (target set)
//! ```
//!
//! The smooth criterion score of model k is the product of the posterior
//! probability that its complexity class attains `c*_δ` and the expected
//! within-class soft-min factor `exp(-α_n (μ_k - μ_min,c(k)))`. The hard
//! and plug-in variants replace the soft factor with an exact-tie indicator
//! and with membership in `M*_δ`, respectively; both are provided for
//! comparison studies, with the soft score as the recommended default.
//!
//! All Monte Carlo averages use fixed-shape pairwise sums over the draw
//! index, so scores are bit-identical across thread counts.

use serde::Serialize;

use crate::data::{bias_correct, summarize, LossMatrix, ModelMeta};
use crate::error::{LadError, Result};
use crate::niw::{
    default_prior, nig_match_update_sample, niw_update, sample_posterior, CovarianceModel,
    DrawMode, PosteriorDraws,
};
use crate::par;

/// Smallest within-class factor kept before clamping to zero.
const SOFT_UNDERFLOW: f64 = 1e-300;

/// Tolerances within this distance of an estimated gap are flagged in the
/// report (the theory excludes exact gap values).
const GAP_FLAG_TOL: f64 = 1e-9;

/// Scoring rule applied to the posterior draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreVariant {
    Soft,
    Hard,
    Plugin,
}

/// Knobs of the selection pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    pub delta: f64,
    pub alpha_exponent: f64,
    pub t_draws: usize,
    pub seed: u64,
    pub omega: f64,
    pub variant: ScoreVariant,
    pub covariance: CovarianceModel,
    pub bias_correct: bool,
}

impl SelectorConfig {
    pub fn new(delta: f64) -> Result<Self> {
        let cfg = SelectorConfig {
            delta,
            alpha_exponent: 0.45,
            t_draws: 1000,
            seed: 0,
            omega: 0.5,
            variant: ScoreVariant::Soft,
            covariance: CovarianceModel::Full,
            bias_correct: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(LadError::Validation(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        // the temperature must grow strictly slower than sqrt(n)
        if !(self.alpha_exponent > 0.0 && self.alpha_exponent < 0.5) {
            return Err(LadError::Validation(format!(
                "alpha exponent must lie strictly in (0, 0.5), got {}",
                self.alpha_exponent
            )));
        }
        if self.t_draws < 1 {
            return Err(LadError::Validation("draw count T must be >= 1".into()));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(LadError::Validation(format!(
                "omega must lie strictly in (0, 1), got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Per-model scores. `r_hat` is `None` for the plug-in variant, which does
/// not factor into between/within components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub name: String,
    pub complexity: f64,
    pub p_hat: f64,
    pub r_hat: Option<f64>,
    pub w_hat: f64,
}

/// Location/scale/quantile summary of one posterior marginal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

/// Full output of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlcReport {
    pub variant: ScoreVariant,
    pub per_model: Vec<ModelScore>,
    pub delta: f64,
    pub alpha_n: f64,
    pub tau: Option<f64>,
    pub omega: f64,
    /// Indices of models with `w_hat > omega`; may be empty at small n.
    pub selected: Vec<usize>,
    /// Posterior summaries of μ_k.
    pub mu_summary: Vec<SummaryStats>,
    /// Posterior summaries of the gaps μ_k − min_j μ_j.
    pub gap_summary: Vec<SummaryStats>,
    pub warnings: Vec<String>,
}

impl SlcReport {
    pub fn scores(&self) -> Vec<f64> {
        self.per_model.iter().map(|m| m.w_hat).collect()
    }
}

// ---------------------------------------------------------------------------
// Deterministic per-draw primitives
// ---------------------------------------------------------------------------

/// `{k : μ_k ≤ min_j μ_j + δ}`; always contains every argmin index.
pub fn delta_optimal_set(mu: &[f64], delta: f64) -> Vec<usize> {
    let min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    mu.iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + delta)
        .map(|(k, _)| k)
        .collect()
}

/// Minimal complexity among δ-optimal models.
pub fn minimal_complexity(mu: &[f64], delta: f64, meta: &ModelMeta) -> f64 {
    delta_optimal_set(mu, delta)
        .into_iter()
        .map(|k| meta.complexity[k])
        .fold(f64::INFINITY, f64::min)
}

/// Best minimal-complexity δ-optimal models: the exact argmin of μ over the
/// class attaining `c*_δ`, all ties included.
pub fn target_set(mu: &[f64], delta: f64, meta: &ModelMeta) -> Vec<usize> {
    let c_star = minimal_complexity(mu, delta, meta);
    let class_min = mu
        .iter()
        .zip(&meta.complexity)
        .filter(|(_, &c)| c == c_star)
        .map(|(&v, _)| v)
        .fold(f64::INFINITY, f64::min);
    (0..mu.len())
        .filter(|&k| meta.complexity[k] == c_star && mu[k] == class_min)
        .collect()
}

/// Within-class soft-selection factors `exp(-α_n (μ_k − μ_min,c(k)))`,
/// clamped to 0 below 1e-300. Class minimizers score exactly 1.
pub fn soft_scores(mu: &[f64], meta: &ModelMeta, alpha_n: f64) -> Vec<f64> {
    let classes = ClassIndex::build(meta);
    classes.soft_factors(mu, alpha_n)
}

/// Complexity classes, built once per scoring run. Complexity values are
/// compared exactly; callers needing fuzzy classes must pre-bucket.
struct ClassIndex {
    class_of: Vec<usize>,
    values: Vec<f64>,
    members: Vec<Vec<usize>>,
}

impl ClassIndex {
    fn build(meta: &ModelMeta) -> Self {
        let mut values: Vec<f64> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut class_of = Vec::with_capacity(meta.num_models());
        for (k, &c) in meta.complexity.iter().enumerate() {
            let id = match values.iter().position(|&v| v == c) {
                Some(id) => id,
                None => {
                    values.push(c);
                    members.push(Vec::new());
                    values.len() - 1
                }
            };
            class_of.push(id);
            members[id].push(k);
        }
        ClassIndex {
            class_of,
            values,
            members,
        }
    }

    fn num_classes(&self) -> usize {
        self.values.len()
    }

    /// Class id attaining the minimal complexity among δ-optimal models.
    fn c_star_class(&self, mu: &[f64], delta: f64) -> usize {
        let min = mu.iter().copied().fold(f64::INFINITY, f64::min);
        let mut best: Option<usize> = None;
        for (k, &v) in mu.iter().enumerate() {
            if v <= min + delta {
                let id = self.class_of[k];
                if best.is_none_or(|b| self.values[id] < self.values[b]) {
                    best = Some(id);
                }
            }
        }
        best.expect("mu is nonempty")
    }

    fn class_minima(&self, mu: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .map(|ms| ms.iter().map(|&k| mu[k]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    fn soft_factors(&self, mu: &[f64], alpha_n: f64) -> Vec<f64> {
        let minima = self.class_minima(mu);
        mu.iter()
            .enumerate()
            .map(|(k, &v)| {
                let r = (-alpha_n * (v - minima[self.class_of[k]])).exp();
                if r < SOFT_UNDERFLOW {
                    0.0
                } else {
                    r
                }
            })
            .collect()
    }

    /// Exact-tie indicator shares: members attaining their class minimum
    /// split one unit of mass equally, so the shares partition each draw.
    fn hard_shares(&self, mu: &[f64]) -> Vec<f64> {
        let minima = self.class_minima(mu);
        let mut shares = vec![0.0; mu.len()];
        for (id, ms) in self.members.iter().enumerate() {
            let attain: Vec<usize> = ms
                .iter()
                .copied()
                .filter(|&k| mu[k] == minima[id])
                .collect();
            let share = 1.0 / attain.len() as f64;
            for k in attain {
                shares[k] = share;
            }
        }
        shares
    }
}

fn check_draws(draws: &PosteriorDraws, meta: &ModelMeta) -> Result<()> {
    if draws.t == 0 {
        return Err(LadError::Validation("draws are empty".into()));
    }
    if draws.num_models() != meta.num_models() {
        return Err(LadError::Validation(format!(
            "draws have {} models but meta has {}",
            draws.num_models(),
            meta.num_models()
        )));
    }
    Ok(())
}

fn draw_rows(draws: &PosteriorDraws) -> Vec<Vec<f64>> {
    (0..draws.t)
        .map(|t| draws.mus.row(t).iter().copied().collect())
        .collect()
}

// ---------------------------------------------------------------------------
// Monte Carlo scores
// ---------------------------------------------------------------------------

/// Smooth criterion scores (the recommended selector).
///
/// `p̂_δ(k)` is the fraction of draws whose minimal δ-optimal complexity
/// equals `c(k)`; `r̂(k)` is the draw average of the within-class soft
/// factor; `ŵ_δ(k) = p̂_δ(k)·r̂(k)`.
pub fn slc_scores(
    draws: &PosteriorDraws,
    meta: &ModelMeta,
    delta: f64,
    alpha_n: f64,
) -> Result<SlcReport> {
    check_draws(draws, meta)?;
    let classes = ClassIndex::build(meta);
    let rows = draw_rows(draws);
    let t = draws.t;

    let per_draw: Vec<(usize, Vec<f64>)> = par::map_indexed(t, |i| {
        let mu = &rows[i];
        (
            classes.c_star_class(mu, delta),
            classes.soft_factors(mu, alpha_n),
        )
    });

    let mut class_counts = vec![0u64; classes.num_classes()];
    for (c, _) in &per_draw {
        class_counts[*c] += 1;
    }
    let k = meta.num_models();
    let mut r_hat = vec![0.0; k];
    for (j, r) in r_hat.iter_mut().enumerate() {
        let col: Vec<f64> = per_draw.iter().map(|(_, rs)| rs[j]).collect();
        *r = par::pairwise_mean(&col);
    }

    let per_model: Vec<ModelScore> = (0..k)
        .map(|j| {
            let p = class_counts[classes.class_of[j]] as f64 / t as f64;
            ModelScore {
                name: meta.model_names[j].clone(),
                complexity: meta.complexity[j],
                p_hat: p,
                r_hat: Some(r_hat[j]),
                w_hat: p * r_hat[j],
            }
        })
        .collect();

    Ok(assemble_report(
        ScoreVariant::Soft,
        per_model,
        draws,
        delta,
        alpha_n,
    ))
}

/// Hard-minimum variant: the within-class factor is the draw average of the
/// exact-tie indicator `1(μ_k = μ_min,c(k))` (ties split the unit equally).
/// Unstable at population ties; provided for comparison studies.
pub fn hard_scores(draws: &PosteriorDraws, meta: &ModelMeta, delta: f64) -> Result<Vec<f64>> {
    Ok(hard_report(draws, meta, delta)?.scores())
}

pub(crate) fn hard_report(
    draws: &PosteriorDraws,
    meta: &ModelMeta,
    delta: f64,
) -> Result<SlcReport> {
    check_draws(draws, meta)?;
    let classes = ClassIndex::build(meta);
    let rows = draw_rows(draws);
    let t = draws.t;

    let per_draw: Vec<(usize, Vec<f64>)> = par::map_indexed(t, |i| {
        let mu = &rows[i];
        (classes.c_star_class(mu, delta), classes.hard_shares(mu))
    });

    let mut class_counts = vec![0u64; classes.num_classes()];
    for (c, _) in &per_draw {
        class_counts[*c] += 1;
    }
    let k = meta.num_models();
    let per_model: Vec<ModelScore> = (0..k)
        .map(|j| {
            let col: Vec<f64> = per_draw.iter().map(|(_, s)| s[j]).collect();
            let r = par::pairwise_mean(&col);
            let p = class_counts[classes.class_of[j]] as f64 / t as f64;
            ModelScore {
                name: meta.model_names[j].clone(),
                complexity: meta.complexity[j],
                p_hat: p,
                r_hat: Some(r),
                w_hat: p * r,
            }
        })
        .collect();

    Ok(assemble_report(
        ScoreVariant::Hard,
        per_model,
        draws,
        delta,
        f64::NAN,
    ))
}

/// Plug-in posterior probabilities `P(k ∈ M*_δ(μ) | Z)`. Unstable at
/// population ties; provided for comparison studies.
pub fn plugin_probabilities(
    draws: &PosteriorDraws,
    meta: &ModelMeta,
    delta: f64,
) -> Result<Vec<f64>> {
    Ok(plugin_report(draws, meta, delta)?.scores())
}

pub(crate) fn plugin_report(
    draws: &PosteriorDraws,
    meta: &ModelMeta,
    delta: f64,
) -> Result<SlcReport> {
    check_draws(draws, meta)?;
    let classes = ClassIndex::build(meta);
    let rows = draw_rows(draws);
    let t = draws.t;
    let k = meta.num_models();

    let per_draw: Vec<(usize, Vec<usize>)> = par::map_indexed(t, |i| {
        (
            classes.c_star_class(&rows[i], delta),
            target_set(&rows[i], delta, meta),
        )
    });

    let mut class_counts = vec![0u64; classes.num_classes()];
    let mut member_counts = vec![0u64; k];
    for (c, members) in &per_draw {
        class_counts[*c] += 1;
        for &m in members {
            member_counts[m] += 1;
        }
    }

    let per_model: Vec<ModelScore> = (0..k)
        .map(|j| ModelScore {
            name: meta.model_names[j].clone(),
            complexity: meta.complexity[j],
            p_hat: class_counts[classes.class_of[j]] as f64 / t as f64,
            r_hat: None,
            w_hat: member_counts[j] as f64 / t as f64,
        })
        .collect();

    Ok(assemble_report(
        ScoreVariant::Plugin,
        per_model,
        draws,
        delta,
        f64::NAN,
    ))
}

fn assemble_report(
    variant: ScoreVariant,
    per_model: Vec<ModelScore>,
    draws: &PosteriorDraws,
    delta: f64,
    alpha_n: f64,
) -> SlcReport {
    let (mu_summary, gap_summary) = summarize_draws(draws);
    let omega = 0.5;
    let scores: Vec<f64> = per_model.iter().map(|m| m.w_hat).collect();
    let selected = threshold_select(&scores, omega);
    SlcReport {
        variant,
        per_model,
        delta,
        alpha_n,
        tau: None,
        omega,
        selected,
        mu_summary,
        gap_summary,
        warnings: Vec::new(),
    }
}

fn summarize_draws(draws: &PosteriorDraws) -> (Vec<SummaryStats>, Vec<SummaryStats>) {
    let t = draws.t;
    let k = draws.num_models();
    let mut mu_cols: Vec<Vec<f64>> = vec![Vec::with_capacity(t); k];
    let mut gap_cols: Vec<Vec<f64>> = vec![Vec::with_capacity(t); k];
    for i in 0..t {
        let row = draws.mus.row(i);
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        for j in 0..k {
            mu_cols[j].push(row[j]);
            gap_cols[j].push(row[j] - min);
        }
    }
    let stats = |col: &mut Vec<f64>| {
        let mean = par::pairwise_mean(col);
        let sd = if t > 1 {
            let sq: Vec<f64> = col.iter().map(|x| (x - mean).powi(2)).collect();
            (par::pairwise_sum(&sq) / (t as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        col.sort_by(|a, b| a.total_cmp(b));
        SummaryStats {
            mean,
            sd,
            q025: quantile(col, 0.025),
            q50: quantile(col, 0.5),
            q975: quantile(col, 0.975),
        }
    };
    let mu_summary = mu_cols.iter_mut().map(&stats).collect();
    let gap_summary = gap_cols.iter_mut().map(&stats).collect();
    (mu_summary, gap_summary)
}

/// Linear-interpolation quantile of a sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn threshold_select(scores: &[f64], omega: f64) -> Vec<usize> {
    scores
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > omega)
        .map(|(k, _)| k)
        .collect()
}

/// `M̂*_δ = {k : ŵ_δ(k) > ω}`. An empty set at small n is a reported
/// outcome, not an error.
pub fn select(report: &SlcReport, omega: f64) -> Result<Vec<usize>> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(LadError::Validation(format!(
            "omega must lie strictly in (0, 1), got {omega}"
        )));
    }
    Ok(threshold_select(&report.scores(), omega))
}

// ---------------------------------------------------------------------------
// Tolerance rescaling and posterior paths
// ---------------------------------------------------------------------------

/// Rescaled tolerance `τ = δ / (μ_noise − μ_min)`: the fraction of the
/// explainable improvement (noise model → best candidate) sacrificed for
/// simplicity.
pub fn rescale_tolerance(delta: f64, mu_noise: f64, mu_min: f64) -> Result<f64> {
    if !(mu_noise > mu_min) {
        return Err(LadError::Numerical(format!(
            "noise reference {mu_noise} must exceed the best candidate mean {mu_min}; \
             the noise model fits better than every candidate"
        )));
    }
    Ok(delta / (mu_noise - mu_min))
}

/// Inverse mapping for τ-grid use: `δ = τ · (μ_noise − μ_min)`.
pub fn delta_for_tau(tau: f64, mu_noise: f64, mu_min: f64) -> Result<f64> {
    if !(mu_noise > mu_min) {
        return Err(LadError::Numerical(format!(
            "noise reference {mu_noise} must exceed the best candidate mean {mu_min}; \
             the noise model fits better than every candidate"
        )));
    }
    Ok(tau * (mu_noise - mu_min))
}

/// Scores along a grid of rescaled tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPath {
    pub taus: Vec<f64>,
    pub deltas: Vec<f64>,
    /// grid × K smooth-criterion scores.
    pub scores: nalgebra::DMatrix<f64>,
}

/// Smooth scores traced over `tau_grid ⊂ [0, 1.5]` (strictly increasing).
/// Row g holds the scores at `δ_g = τ_g · (μ_noise − μ_min)`, with `μ_min`
/// taken as the minimum of the draw means so the path is a pure function of
/// the draws. One pass over the draws fills all rows.
pub fn posterior_path(
    draws: &PosteriorDraws,
    meta: &ModelMeta,
    tau_grid: &[f64],
    mu_noise: f64,
    alpha_n: f64,
) -> Result<PosteriorPath> {
    check_draws(draws, meta)?;
    if tau_grid.is_empty() {
        return Err(LadError::Validation("tau grid is empty".into()));
    }
    for w in tau_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(LadError::Validation(format!(
                "tau grid must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    if tau_grid[0] < 0.0 || *tau_grid.last().unwrap() > 1.5 {
        return Err(LadError::Validation(format!(
            "tau grid must lie within [0, 1.5], got [{}, {}]",
            tau_grid[0],
            tau_grid.last().unwrap()
        )));
    }
    let mu_mean = draws.mu_mean();
    let mu_min = mu_mean.iter().copied().fold(f64::INFINITY, f64::min);
    let deltas: Result<Vec<f64>> = tau_grid
        .iter()
        .map(|&tau| delta_for_tau(tau, mu_noise, mu_min))
        .collect();
    let deltas = deltas?;

    let classes = ClassIndex::build(meta);
    let rows = draw_rows(draws);
    let t = draws.t;
    let g = tau_grid.len();
    let k = meta.num_models();

    // per draw: soft factors once, then the c* class for every grid row
    let per_draw: Vec<(Vec<usize>, Vec<f64>)> = par::map_indexed(t, |i| {
        let mu = &rows[i];
        let soft = classes.soft_factors(mu, alpha_n);
        let stars = deltas
            .iter()
            .map(|&d| classes.c_star_class(mu, d))
            .collect();
        (stars, soft)
    });

    let mut class_counts = vec![vec![0u64; classes.num_classes()]; g];
    for (stars, _) in &per_draw {
        for (row, &c) in stars.iter().enumerate() {
            class_counts[row][c] += 1;
        }
    }
    let mut r_hat = vec![0.0; k];
    for (j, r) in r_hat.iter_mut().enumerate() {
        let col: Vec<f64> = per_draw.iter().map(|(_, s)| s[j]).collect();
        *r = par::pairwise_mean(&col);
    }

    let scores = nalgebra::DMatrix::from_fn(g, k, |row, j| {
        let p = class_counts[row][classes.class_of[j]] as f64 / t as f64;
        p * r_hat[j]
    });

    Ok(PosteriorPath {
        taus: tau_grid.to_vec(),
        deltas,
        scores,
    })
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

/// Full selection workflow on a loss matrix: optional bias correction,
/// summary, conjugate update of the recommended prior, posterior sampling,
/// scoring, and optional tolerance rescaling against `noise_mu`.
///
/// Deterministic given `config.seed`; identical inputs produce identical
/// reports byte for byte.
pub fn analyze(
    z: &LossMatrix,
    meta: &ModelMeta,
    config: &SelectorConfig,
    noise_mu: Option<f64>,
) -> Result<SlcReport> {
    config.validate()?;
    let meta = meta.aligned_to(z)?;
    let corrected;
    let z = if config.bias_correct {
        corrected = bias_correct(z, &meta)?;
        &corrected
    } else {
        z
    };
    let n = z.n() as f64;
    let alpha_n = n.powf(config.alpha_exponent);
    let summary = summarize(z);
    let prior = default_prior(z.num_models())?;
    let draws = match config.covariance {
        CovarianceModel::Full => {
            let post = niw_update(&prior, &summary)?;
            sample_posterior(&post, config.t_draws, config.seed, DrawMode::Compact)?
        }
        CovarianceModel::Diagonal => nig_match_update_sample(
            &prior,
            &summary,
            config.t_draws,
            config.seed,
            DrawMode::Compact,
        )?,
    };

    let mut report = match config.variant {
        ScoreVariant::Soft => slc_scores(&draws, &meta, config.delta, alpha_n)?,
        ScoreVariant::Hard => hard_report(&draws, &meta, config.delta)?,
        ScoreVariant::Plugin => plugin_report(&draws, &meta, config.delta)?,
    };
    if matches!(config.variant, ScoreVariant::Hard | ScoreVariant::Plugin) {
        report.alpha_n = alpha_n;
    }
    report.omega = config.omega;
    report.selected = threshold_select(&report.scores(), config.omega);

    // flag tolerances sitting on an estimated gap (theory excludes them)
    let col_means = z.column_means();
    let mu_min_hat = col_means.iter().copied().fold(f64::INFINITY, f64::min);
    for (j, &m) in col_means.iter().enumerate() {
        let gap = m - mu_min_hat;
        if gap > 0.0 && (config.delta - gap).abs() < GAP_FLAG_TOL {
            report.warnings.push(format!(
                "delta {} is within {GAP_FLAG_TOL:.1e} of the estimated gap {} for model {}",
                config.delta, gap, meta.model_names[j]
            ));
        }
    }

    if let Some(noise) = noise_mu {
        let tau = rescale_tolerance(config.delta, noise, mu_min_hat)?;
        if tau > 1.0 {
            report.warnings.push(format!(
                "tau {tau} exceeds 1: this tolerance admits the noise model"
            ));
        }
        report.tau = Some(tau);
    }

    if report.selected.is_empty() {
        let (best, w) = report
            .scores()
            .into_iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one model");
        report.warnings.push(format!(
            "no model exceeds omega {}; best score {} at model {}",
            config.omega, w, meta.model_names[best]
        ));
    }

    Ok(report)
}
