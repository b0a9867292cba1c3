//! Replicated simulation experiments: Brier-score method comparisons,
//! tie-uniformity checks, and the argmin-instability demonstration.
//!
//! Replicate r of an experiment derives all of its randomness from the
//! substream `(seed, REPLICATE, index)`, so runs are reproducible and
//! independent of the parallel schedule; every method inside a replicate
//! sees the same simulated dataset.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::baselines::{cpost_log_marginals, cpost_weights, ic_weights, CPostConfig, IcKind};
use crate::data::{bias_correct, summarize, LossMatrix, ModelMeta};
use crate::error::{LadError, Result};
use crate::models::{
    gmm_fit_em, mvn_fit_and_loss, mvn_kl_oracle, simulate_dgp, DgpKind, DgpSpec, MvnSupportModel,
};
use crate::niw::{
    cholesky_with_jitter, default_prior, nig_match_update_sample, niw_update, sample_posterior,
    DrawMode,
};
use crate::par;
use crate::rng::{derive_seed, domain, substream};
use crate::selector::{hard_scores, plugin_probabilities, slc_scores, target_set};

/// A model-selection method compared in the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    LadSoft,
    LadHard,
    LadDiag,
    LadPlugin,
    CPost(f64),
    Bayes,
    Aic,
    Bic,
}

pub const METHOD_NAMES: &str =
    "lad-soft, lad-hard, lad-diag, lad-plugin, cpost:ALPHA, bayes, aic, bic";

impl FromStr for Method {
    type Err = LadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lad-soft" => Ok(Method::LadSoft),
            "lad-hard" => Ok(Method::LadHard),
            "lad-diag" => Ok(Method::LadDiag),
            "lad-plugin" => Ok(Method::LadPlugin),
            "bayes" => Ok(Method::Bayes),
            "aic" => Ok(Method::Aic),
            "bic" => Ok(Method::Bic),
            _ => {
                if let Some(alpha) = s.strip_prefix("cpost:") {
                    let alpha: f64 = alpha.parse().map_err(|_| {
                        LadError::Validation(format!(
                            "bad cpost alpha {alpha:?}; valid methods: {METHOD_NAMES}"
                        ))
                    })?;
                    if !(alpha > 0.0) {
                        return Err(LadError::Validation(format!(
                            "cpost alpha must be positive, got {alpha}"
                        )));
                    }
                    Ok(Method::CPost(alpha))
                } else {
                    Err(LadError::Validation(format!(
                        "unknown method {s:?}; valid methods: {METHOD_NAMES}"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::LadSoft => write!(f, "lad-soft"),
            Method::LadHard => write!(f, "lad-hard"),
            Method::LadDiag => write!(f, "lad-diag"),
            Method::LadPlugin => write!(f, "lad-plugin"),
            Method::CPost(a) => write!(f, "cpost:{a}"),
            Method::Bayes => write!(f, "bayes"),
            Method::Aic => write!(f, "aic"),
            Method::Bic => write!(f, "bic"),
        }
    }
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// The sparse-mean vector used by the `mvn-table1` scenario.
pub fn mvn_table1_theta0() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 1.0, 0.5, 0.5, 0.4, 0.0])
}

/// The seven sparse-support candidates of the `mvn-table1` scenario.
pub fn mvn_table1_models() -> Vec<MvnSupportModel> {
    [
        vec![0, 3],
        vec![0, 1],
        vec![0, 1, 4],
        vec![0, 1, 3],
        vec![0, 1, 2],
        vec![0, 1, 2, 3, 4],
        vec![0, 1, 2, 3, 4, 5],
    ]
    .into_iter()
    .map(|s| MvnSupportModel::new(s, 6).expect("valid support"))
    .collect()
}

/// Complexity = support size = parameter dimension for the `mvn-table1`
/// candidates.
pub fn mvn_table1_meta() -> ModelMeta {
    let models = mvn_table1_models();
    ModelMeta::new(
        (1..=models.len()).map(|k| format!("model_{k}")).collect(),
        models.iter().map(|m| m.dim() as f64).collect(),
        models.iter().map(|m| m.dim() as u32).collect(),
    )
    .expect("valid meta")
}

const GMM4_WEIGHTS: [f64; 4] = [0.35, 0.3, 0.2, 0.15];
const GMM4_MEANS: [f64; 4] = [-3.0, 0.0, 2.5, 6.0];
const GMM4_VARS: [f64; 4] = [0.64, 1.0, 0.36, 1.44];
const GMM4_KMAX: usize = 6;
const GMM4_RESTARTS: usize = 6;
/// Reference/evaluation sample sizes for the Monte Carlo oracle of the
/// mixture scenario (no closed-form KL exists for mixture candidates).
const GMM4_ORACLE_FIT_N: usize = 10_000;
const GMM4_ORACLE_EVAL_N: usize = 50_000;

fn gmm4_dgp(seed: u64, n: usize) -> DgpSpec {
    DgpSpec {
        kind: DgpKind::Gmm {
            weights: GMM4_WEIGHTS.to_vec(),
            means: GMM4_MEANS.to_vec(),
            vars: GMM4_VARS.to_vec(),
        },
        seed,
        n,
    }
}

/// Candidate mixture sizes k = 1..=6 with complexity k and dimension 3k−1.
pub fn gmm4_meta() -> ModelMeta {
    ModelMeta::new(
        (1..=GMM4_KMAX).map(|k| format!("gmm_{k}")).collect(),
        (1..=GMM4_KMAX).map(|k| k as f64).collect(),
        (1..=GMM4_KMAX).map(|k| (3 * k - 1) as u32).collect(),
    )
    .expect("valid meta")
}

/// Simulation scenario: data-generating process, candidate set, and the
/// oracle mean-loss vector that defines the Brier target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `N(θ₀, I)` data with seven sparse-mean candidates and an exact KL
    /// oracle.
    MvnTable1,
    /// Four-component Gaussian mixture data with mixture candidates
    /// k = 1..6 and a Monte Carlo oracle (large fixed reference samples).
    Gmm4,
}

impl FromStr for Scenario {
    type Err = LadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mvn-table1" => Ok(Scenario::MvnTable1),
            "gmm4" => Ok(Scenario::Gmm4),
            _ => Err(LadError::Validation(format!(
                "unknown scenario {s:?}; valid scenarios: mvn-table1, gmm4"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::MvnTable1 => write!(f, "mvn-table1"),
            Scenario::Gmm4 => write!(f, "gmm4"),
        }
    }
}

impl Scenario {
    pub fn meta(&self) -> ModelMeta {
        match self {
            Scenario::MvnTable1 => mvn_table1_meta(),
            Scenario::Gmm4 => gmm4_meta(),
        }
    }

    /// Oracle per-model mean losses, up to a shared additive constant that
    /// the target-set computation cancels. Exact KL values for the MVN
    /// scenario; a cached Monte Carlo estimate for the mixture scenario.
    pub fn oracle_mu(&self) -> Result<Vec<f64>> {
        match self {
            Scenario::MvnTable1 => {
                let theta0 = mvn_table1_theta0();
                Ok(mvn_table1_models()
                    .iter()
                    .map(|m| mvn_kl_oracle(&theta0, m))
                    .collect())
            }
            Scenario::Gmm4 => {
                static ORACLE: OnceLock<Vec<f64>> = OnceLock::new();
                if let Some(v) = ORACLE.get() {
                    return Ok(v.clone());
                }
                let v = gmm4_oracle_mu()?;
                Ok(ORACLE.get_or_init(|| v).clone())
            }
        }
    }

    fn simulate(&self, n: usize, seed: u64) -> Result<DMatrix<f64>> {
        match self {
            Scenario::MvnTable1 => simulate_dgp(&DgpSpec {
                kind: DgpKind::Mvn {
                    theta0: mvn_table1_theta0(),
                },
                seed,
                n,
            }),
            Scenario::Gmm4 => simulate_dgp(&gmm4_dgp(seed, n)),
        }
    }

    /// Fit every candidate and assemble the bias-corrected loss matrix.
    fn build_loss_matrix(&self, data: &DMatrix<f64>, fit_seed: u64) -> Result<LossMatrix> {
        let meta = self.meta();
        let n = data.nrows();
        let k = meta.num_models();
        let mut values = DMatrix::zeros(n, k);
        match self {
            Scenario::MvnTable1 => {
                for (j, model) in mvn_table1_models().iter().enumerate() {
                    let fit = mvn_fit_and_loss(data, model)?;
                    values.set_column(j, &fit.losses);
                }
            }
            Scenario::Gmm4 => {
                let xs: Vec<f64> = data.column(0).iter().copied().collect();
                for j in 0..k {
                    let (_, losses) = gmm_fit_em(&xs, j + 1, GMM4_RESTARTS, fit_seed)?;
                    values.set_column(j, &DVector::from_vec(losses));
                }
            }
        }
        let z = LossMatrix::new(values, meta.model_names.clone())?;
        bias_correct(&z, &meta)
    }
}

/// Simulate one `mvn-table1` dataset and assemble its bias-corrected loss
/// matrix; convenience for benches and tests.
pub fn mvn_table1_loss_matrix(n: usize, seed: u64) -> Result<(LossMatrix, ModelMeta)> {
    let data = Scenario::MvnTable1.simulate(n, seed)?;
    let z = Scenario::MvnTable1.build_loss_matrix(&data, seed)?;
    Ok((z, mvn_table1_meta()))
}

/// Monte Carlo oracle for the mixture scenario: fit each candidate on a
/// large reference sample, then estimate its population mean loss on an
/// independent evaluation sample. Both samples use frozen substreams, so
/// the oracle is a deterministic constant of the build.
fn gmm4_oracle_mu() -> Result<Vec<f64>> {
    let fit_data = simulate_dgp(&gmm4_dgp(0xD6A4_0001, GMM4_ORACLE_FIT_N))?;
    let eval_data = simulate_dgp(&gmm4_dgp(0xD6A4_0002, GMM4_ORACLE_EVAL_N))?;
    let fit_xs: Vec<f64> = fit_data.column(0).iter().copied().collect();
    let eval_xs: Vec<f64> = eval_data.column(0).iter().copied().collect();
    let mus: Vec<Result<f64>> = par::map_indexed(GMM4_KMAX, |j| {
        let (fit, _) = gmm_fit_em(&fit_xs, j + 1, GMM4_RESTARTS, 0xD6A4_0003)?;
        let losses: Vec<f64> = eval_xs
            .iter()
            .map(|&x| {
                let terms: Vec<f64> = (0..fit.k)
                    .map(|c| {
                        let lw = if fit.weights[c] > 0.0 {
                            fit.weights[c].ln()
                        } else {
                            f64::NEG_INFINITY
                        };
                        lw - 0.5 * (1.837_877_066_409_345_3 + fit.variances[c].ln())
                            - (x - fit.means[c]).powi(2) / (2.0 * fit.variances[c])
                    })
                    .collect();
                let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                -(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
            })
            .collect();
        Ok(par::pairwise_mean(&losses))
    });
    mus.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Brier comparison
// ---------------------------------------------------------------------------

/// Squared distance between a weight vector and the indicator of the
/// target set: `Σ_k (w_k − 1(k ∈ target))²`.
pub fn brier_loss(w: &[f64], target: &[usize]) -> f64 {
    w.iter()
        .enumerate()
        .map(|(k, &wk)| {
            let t = if target.contains(&k) { 1.0 } else { 0.0 };
            (wk - t) * (wk - t)
        })
        .sum()
}

/// Settings of a replicated method comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_grid: Vec<usize>,
    pub deltas: Vec<f64>,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub t_draws: usize,
    pub alpha_exponent: f64,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, n_grid: Vec<usize>, deltas: Vec<f64>, reps: usize) -> Self {
        ExperimentConfig {
            scenario,
            n_grid,
            deltas,
            reps,
            methods: vec![Method::LadSoft],
            seed: 0,
            t_draws: 1000,
            alpha_exponent: 0.45,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(LadError::Validation("reps must be >= 1".into()));
        }
        if self.n_grid.is_empty() || self.deltas.is_empty() || self.methods.is_empty() {
            return Err(LadError::Validation(
                "n grid, deltas, and methods must be nonempty".into(),
            ));
        }
        if self.deltas.iter().any(|d| !(*d >= 0.0)) {
            return Err(LadError::Validation("all deltas must be >= 0".into()));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(LadError::Validation("all n must be >= 2".into()));
        }
        if matches!(self.scenario, Scenario::Gmm4)
            && self
                .methods
                .iter()
                .any(|m| matches!(m, Method::CPost(_) | Method::Bayes))
        {
            return Err(LadError::Validation(
                "cpost/bayes have a closed form only for the mvn-table1 scenario".into(),
            ));
        }
        Ok(())
    }
}

/// One aggregated cell of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrierRow {
    pub method: String,
    pub n: usize,
    pub delta: f64,
    pub mean: f64,
    pub se: f64,
    /// Successful replicates behind the mean.
    pub reps: usize,
    /// Replicates aborted by component errors.
    pub failed: usize,
    /// True when a standard error could not be estimated (reps < 2).
    pub degenerate_se: bool,
}

/// Long-format mean ± se Brier table over (method, n, δ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrierTable {
    pub rows: Vec<BrierRow>,
}

impl BrierTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,n,delta,mean,se,reps,failed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method,
                r.n,
                crate::data::format_f64(r.delta),
                crate::data::format_f64(r.mean),
                crate::data::format_f64(r.se),
                r.reps,
                r.failed
            ));
        }
        out
    }

    pub fn mean_for(&self, method: &str, n: usize, delta: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.n == n && r.delta == delta)
            .map(|r| r.mean)
    }
}

/// Run the replicated comparison: simulate, fit every candidate, apply
/// every method to the same data, and score the resulting weight vectors
/// against the oracle target `M*_δ(μ⁰)` for each δ.
///
/// Replicate failures abort only that replicate and are counted in the
/// output. Deterministic given the seed; the aggregation uses fixed-shape
/// pairwise sums over the replicate index.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<BrierTable> {
    cfg.validate()?;
    let meta = cfg.scenario.meta();
    let oracle_mu = cfg.scenario.oracle_mu()?;
    let targets: Vec<Vec<usize>> = cfg
        .deltas
        .iter()
        .map(|&d| target_set(&oracle_mu, d, &meta))
        .collect();

    let mut rows = Vec::new();
    for (n_idx, &n) in cfg.n_grid.iter().enumerate() {
        // per replicate: brier[(method_idx, delta_idx)]
        let outcomes: Vec<Result<Vec<f64>>> = par::map_indexed(cfg.reps, |r| {
            let index = ((n_idx as u64) << 32) | r as u64;
            let rep_seed = derive_seed(cfg.seed, domain::REPLICATE, index);
            run_replicate(cfg, &meta, &targets, n, rep_seed)
        });

        let mut ok: Vec<&Vec<f64>> = Vec::with_capacity(cfg.reps);
        let mut failed = 0usize;
        for o in &outcomes {
            match o {
                Ok(v) => ok.push(v),
                Err(_) => failed += 1,
            }
        }
        for (m_idx, method) in cfg.methods.iter().enumerate() {
            for (d_idx, &delta) in cfg.deltas.iter().enumerate() {
                let cell = m_idx * cfg.deltas.len() + d_idx;
                let values: Vec<f64> = ok.iter().map(|v| v[cell]).collect();
                let reps = values.len();
                let mean = par::pairwise_mean(&values);
                let (se, degenerate) = if reps >= 2 {
                    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
                    let sd = (par::pairwise_sum(&sq) / (reps as f64 - 1.0)).sqrt();
                    (sd / (reps as f64).sqrt(), false)
                } else {
                    (0.0, true)
                };
                rows.push(BrierRow {
                    method: method.to_string(),
                    n,
                    delta,
                    mean,
                    se,
                    reps,
                    failed,
                    degenerate_se: degenerate,
                });
            }
        }
    }
    Ok(BrierTable { rows })
}

fn run_replicate(
    cfg: &ExperimentConfig,
    meta: &ModelMeta,
    targets: &[Vec<usize>],
    n: usize,
    rep_seed: u64,
) -> Result<Vec<f64>> {
    let data = cfg.scenario.simulate(n, rep_seed)?;
    let z = cfg.scenario.build_loss_matrix(&data, rep_seed)?;
    let alpha_n = (n as f64).powf(cfg.alpha_exponent);
    let summary = summarize(&z);
    let prior = default_prior(z.num_models())?;

    let needs_full = cfg
        .methods
        .iter()
        .any(|m| matches!(m, Method::LadSoft | Method::LadHard | Method::LadPlugin));
    let needs_diag = cfg.methods.iter().any(|m| matches!(m, Method::LadDiag));
    let draws_full = if needs_full {
        let post = niw_update(&prior, &summary)?;
        Some(sample_posterior(
            &post,
            cfg.t_draws,
            rep_seed,
            DrawMode::Compact,
        )?)
    } else {
        None
    };
    let draws_diag = if needs_diag {
        Some(nig_match_update_sample(
            &prior,
            &summary,
            cfg.t_draws,
            rep_seed,
            DrawMode::Compact,
        )?)
    } else {
        None
    };

    let totals: Vec<f64> = (0..z.num_models())
        .map(|j| z.values().column(j).sum())
        .collect();

    let mut briers = Vec::with_capacity(cfg.methods.len() * cfg.deltas.len());
    for method in &cfg.methods {
        // δ-independent methods are computed once and reused per δ
        let fixed_weights: Option<Vec<f64>> = match method {
            Method::Aic => Some(ic_weights(&totals, &meta.dims, n, IcKind::Aic)?),
            Method::Bic => Some(ic_weights(&totals, &meta.dims, n, IcKind::Bic)?),
            Method::CPost(alpha) => Some(cpost_weights_for(&data, *alpha)?),
            Method::Bayes => Some(cpost_weights_for(&data, f64::INFINITY)?),
            _ => None,
        };
        for (d_idx, &delta) in cfg.deltas.iter().enumerate() {
            let w = match (method, &fixed_weights) {
                (_, Some(w)) => w.clone(),
                (Method::LadSoft, None) => {
                    slc_scores(draws_full.as_ref().unwrap(), meta, delta, alpha_n)?.scores()
                }
                (Method::LadHard, None) => hard_scores(draws_full.as_ref().unwrap(), meta, delta)?,
                (Method::LadPlugin, None) => {
                    plugin_probabilities(draws_full.as_ref().unwrap(), meta, delta)?
                }
                (Method::LadDiag, None) => {
                    slc_scores(draws_diag.as_ref().unwrap(), meta, delta, alpha_n)?.scores()
                }
                _ => unreachable!("fixed methods handled above"),
            };
            debug_assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
            briers.push(brier_loss(&w, &targets[d_idx]));
        }
    }
    Ok(briers)
}

fn cpost_weights_for(data: &DMatrix<f64>, alpha: f64) -> Result<Vec<f64>> {
    let models = mvn_table1_models();
    let cfg = CPostConfig::zero_means(alpha, 1.0, &models)?;
    cpost_weights(&cpost_log_marginals(data, &models, &cfg)?)
}

// ---------------------------------------------------------------------------
// Tie uniformity
// ---------------------------------------------------------------------------

/// Output of the tie-uniformity experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TieUniformity {
    /// One-sample Kolmogorov–Smirnov distance of the hard score of the
    /// first model to Uniform(0,1).
    pub ks_distance: f64,
    /// Asymptotic Kolmogorov p-value proxy for that distance.
    pub p_value: f64,
    /// Hard score of model 1 across replicates.
    pub hard_w1: Vec<f64>,
    /// Smooth scores (model 1, model 2) across replicates.
    pub soft_scores: Vec<(f64, f64)>,
}

/// Two candidates of equal complexity tied in population mean loss: data
/// are `N((0.5, 0.5), I)` in the plane and the candidates fix one
/// coordinate each at zero (both have one free parameter). Collects the
/// hard score of model 1 across `reps` independent datasets and reports
/// its KS distance to Uniform(0,1), plus the smooth scores for stability
/// checks.
pub fn tie_uniformity_experiment(
    reps: usize,
    n: usize,
    t: usize,
    seed: u64,
) -> Result<TieUniformity> {
    if reps < 2 {
        return Err(LadError::Validation(
            "tie-uniformity needs >= 2 replicates for a KS distance".into(),
        ));
    }
    if n < 2 {
        return Err(LadError::Validation("n must be >= 2".into()));
    }
    let theta0 = DVector::from_vec(vec![0.5, 0.5]);
    let models = [
        MvnSupportModel::new(vec![0], 2)?,
        MvnSupportModel::new(vec![1], 2)?,
    ];
    let meta = ModelMeta::new(
        vec!["model_1".into(), "model_2".into()],
        vec![1.0, 1.0],
        vec![1, 1],
    )?;
    let alpha_n = (n as f64).powf(0.45);

    let per_rep: Vec<Result<(f64, (f64, f64))>> = par::map_indexed(reps, |r| {
        let rep_seed = derive_seed(seed, domain::REPLICATE, r as u64);
        let data = simulate_dgp(&DgpSpec {
            kind: DgpKind::Mvn {
                theta0: theta0.clone(),
            },
            seed: rep_seed,
            n,
        })?;
        let mut values = DMatrix::zeros(n, 2);
        for (j, model) in models.iter().enumerate() {
            let fit = mvn_fit_and_loss(&data, model)?;
            values.set_column(j, &fit.losses);
        }
        let z = LossMatrix::new(values, meta.model_names.clone())?;
        let z = bias_correct(&z, &meta)?;
        let summary = summarize(&z);
        let post = niw_update(&default_prior(2)?, &summary)?;
        let draws = sample_posterior(&post, t, rep_seed, DrawMode::Compact)?;
        let hard = hard_scores(&draws, &meta, 0.0)?;
        let soft = slc_scores(&draws, &meta, 0.0, alpha_n)?.scores();
        Ok((hard[0], (soft[0], soft[1])))
    });

    let mut hard_w1 = Vec::with_capacity(reps);
    let mut soft_scores = Vec::with_capacity(reps);
    for r in per_rep {
        let (h, s) = r?;
        hard_w1.push(h);
        soft_scores.push(s);
    }
    let ks_distance = ks_distance_uniform(&hard_w1);
    let p_value = kolmogorov_p(ks_distance, reps);
    Ok(TieUniformity {
        ks_distance,
        p_value,
        hard_w1,
        soft_scores,
    })
}

/// One-sample KS distance to Uniform(0,1).
pub fn ks_distance_uniform(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic Kolmogorov tail probability with the small-sample adjustment
/// λ = (√n + 0.12 + 0.11/√n)·D; a proxy, not an exact finite-sample value.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = 2.0 * (-1.0f64).powi(j + 1) * (-2.0 * jf * jf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Argmin instability
// ---------------------------------------------------------------------------

/// Frequency with which each coordinate of `N(μ₀, Σ/n)` attains the
/// minimum, over `t` draws.
pub fn argmin_frequencies(
    mu0: &DVector<f64>,
    sigma: &DMatrix<f64>,
    n: usize,
    t: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if t < 1 {
        return Err(LadError::Validation("need at least one draw".into()));
    }
    let k = mu0.len();
    if sigma.shape() != (k, k) {
        return Err(LadError::Validation("sigma shape mismatch".into()));
    }
    let scaled = sigma / n as f64;
    let (chol, _) = cholesky_with_jitter(&scaled)?;
    let l = chol.l();
    let counts: Vec<u64> = {
        let per_draw: Vec<usize> = par::map_indexed(t, |i| {
            let mut rng = substream(seed, domain::ARGMIN_DRAW, i as u64);
            let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mu = mu0 + &l * z;
            let mut best = 0;
            for j in 1..k {
                if mu[j] < mu[best] {
                    best = j;
                }
            }
            best
        });
        let mut counts = vec![0u64; k];
        for b in per_draw {
            counts[b] += 1;
        }
        counts
    };
    Ok(counts.into_iter().map(|c| c as f64 / t as f64).collect())
}

/// The three-model instability demonstration: equal means, strong negative
/// correlation between the first two coordinates, tiny variance on the
/// third, n = 500. Returns the argmin frequency of each coordinate.
pub fn argmin_instability_experiment(t: usize, seed: u64) -> Result<[f64; 3]> {
    let mu0 = DVector::zeros(3);
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, -0.99, 0.0, -0.99, 1.0, 0.0, 0.0, 0.0, 0.01]);
    let freqs = argmin_frequencies(&mu0, &sigma, 500, t, seed)?;
    Ok([freqs[0], freqs[1], freqs[2]])
}
