//! Built-in candidate model families: per-observation loss columns, analytic
//! KL oracles, noise baselines, and synthetic data generators.
//!
//! Two families ship with the crate: multivariate normal models with a
//! sparse mean vector (identity covariance, masked sample-mean MLE) and
//! univariate Gaussian mixtures fitted by EM with conjugate MAP updates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{LadError, Result};
use crate::par;
use crate::rng::{domain, substream};

const LN_2PI: f64 = 1.8378770664093453;

// ---------------------------------------------------------------------------
// Sparse-mean multivariate normal family
// ---------------------------------------------------------------------------

/// `N(θ, I)` on ℝᵖ with θ restricted to the coordinates in `support`
/// (0-based); all other coordinates are fixed at zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MvnSupportModel {
    support: Vec<usize>,
    p: usize,
}

impl MvnSupportModel {
    pub fn new(mut support: Vec<usize>, p: usize) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if let Some(&j) = support.iter().find(|&&j| j >= p) {
            return Err(LadError::Validation(format!(
                "support coordinate {j} out of range for ambient dimension {p}"
            )));
        }
        Ok(MvnSupportModel { support, p })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn ambient_dim(&self) -> usize {
        self.p
    }

    /// Number of free parameters |J|.
    pub fn dim(&self) -> usize {
        self.support.len()
    }

    fn contains(&self, j: usize) -> bool {
        self.support.binary_search(&j).is_ok()
    }
}

/// Masked sample-mean fit of a sparse-mean MVN model.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnFit {
    /// MLE with zeros outside the support: `θ̂_j = x̄_j · 1(j ∈ J)`.
    pub theta_hat: DVector<f64>,
    /// Per-observation Gaussian negative log-likelihoods,
    /// `(p/2)·log 2π + ½‖x_i − θ̂‖²`.
    pub losses: DVector<f64>,
    /// Parameter dimension d = |J|.
    pub d: u32,
}

/// Fit a sparse-mean model by the masked sample mean and evaluate the
/// per-observation losses.
pub fn mvn_fit_and_loss(data: &DMatrix<f64>, model: &MvnSupportModel) -> Result<MvnFit> {
    let (n, p) = data.shape();
    if n == 0 {
        return Err(LadError::Validation("data matrix is empty".into()));
    }
    if n < 2 {
        return Err(LadError::Validation(format!(
            "need n >= 2 observations, got {n}"
        )));
    }
    if p != model.ambient_dim() {
        return Err(LadError::Validation(format!(
            "data has {p} columns but the model lives on dimension {}",
            model.ambient_dim()
        )));
    }
    let mut theta = DVector::zeros(p);
    for &j in model.support() {
        theta[j] = data.column(j).sum() / n as f64;
    }
    let half_const = p as f64 / 2.0 * LN_2PI;
    let losses = DVector::from_fn(n, |i, _| {
        let mut q = 0.0;
        for j in 0..p {
            let d = data[(i, j)] - theta[j];
            q += d * d;
        }
        half_const + 0.5 * q
    });
    Ok(MvnFit {
        theta_hat: theta,
        losses,
        d: model.dim() as u32,
    })
}

/// Exact KL divergence from `N(θ₀, I)` to the best distribution in the
/// model: `½‖θ₀ − Π_J θ₀‖²`, the squared distance to the coordinate
/// projection onto the support.
pub fn mvn_kl_oracle(theta0: &DVector<f64>, model: &MvnSupportModel) -> f64 {
    let mut acc = 0.0;
    for j in 0..theta0.len() {
        if !model.contains(j) {
            acc += 0.5 * theta0[j] * theta0[j];
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Univariate Gaussian mixtures via EM with conjugate MAP updates
// ---------------------------------------------------------------------------

/// A fitted k-component univariate Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub k: usize,
    /// Mixture weights on the simplex.
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Observed-data log-likelihood of the kept run.
    pub loglik: f64,
    /// Parameter count 3k − 1 (means, variances, free weights).
    pub d: u32,
}

struct GmmPrior {
    m0: f64,
    kappa0: f64,
    s0sq: f64,
    nu0: f64,
}

struct EmRun {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    loglik: f64,
    /// MAP objective (log-likelihood plus log-prior kernel) at the start of
    /// each iteration; non-decreasing by EM theory.
    #[cfg_attr(not(test), allow(dead_code))]
    objective_trace: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    updates: usize,
}

const EM_MAX_ITERS: usize = 500;
const EM_TOL: f64 = 1e-8;

/// Fit a k-component mixture with `restarts` independently initialized EM
/// runs, keeping the run with the highest observed log-likelihood (ties go
/// to the lowest restart index). Per-observation losses are the negative
/// log-densities of the kept mixture.
///
/// Restart j draws its initial means uniformly from the observed data range
/// using substream `(seed, EM_RESTART, j)`; initial variances are the prior
/// scale `s₀² = Var(x)/k²` (1/n normalization) and weights are uniform.
pub fn gmm_fit_em(
    data: &[f64],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<(GmmFit, Vec<f64>)> {
    if k < 1 {
        return Err(LadError::Validation("k must be >= 1".into()));
    }
    if data.len() < k {
        return Err(LadError::Validation(format!(
            "cannot fit {k} components to {} observations",
            data.len()
        )));
    }
    if restarts < 1 {
        return Err(LadError::Validation("restarts must be >= 1".into()));
    }
    if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
        return Err(LadError::Validation(format!(
            "non-finite observation {bad}"
        )));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(LadError::Validation(
            "degenerate data: all observations are equal".into(),
        ));
    }
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let prior = GmmPrior {
        m0: mean,
        kappa0: 0.01,
        s0sq: var / (k as f64 * k as f64),
        nu0: 10.0,
    };

    let runs: Vec<EmRun> = par::map_indexed(restarts, |r| {
        let mut rng = substream(seed, domain::EM_RESTART, r as u64);
        let means: Vec<f64> = (0..k)
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        em_run(data, k, &prior, means)
    });

    let best = runs
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.loglik.total_cmp(&b.loglik).then(ib.cmp(ia)) // ties: lowest restart index wins
        })
        .map(|(_, run)| run)
        .expect("at least one restart");

    let losses: Vec<f64> = data
        .iter()
        .map(|&x| -mixture_log_density(x, &best.weights, &best.means, &best.variances))
        .collect();
    let fit = GmmFit {
        k,
        weights: best.weights.clone(),
        means: best.means.clone(),
        variances: best.variances.clone(),
        loglik: best.loglik,
        d: (3 * k - 1) as u32,
    };
    Ok((fit, losses))
}

fn normal_log_density(x: f64, m: f64, s2: f64) -> f64 {
    -0.5 * (LN_2PI + s2.ln()) - (x - m).powi(2) / (2.0 * s2)
}

fn mixture_log_density(x: f64, weights: &[f64], means: &[f64], vars: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(weights.len());
    for j in 0..weights.len() {
        let lw = if weights[j] > 0.0 {
            weights[j].ln()
        } else {
            f64::NEG_INFINITY
        };
        terms.push(lw + normal_log_density(x, means[j], vars[j]));
    }
    log_sum_exp(&terms)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Log-prior kernel (terms that vary over parameters; additive constants
/// are dropped since the objective is only compared across iterations):
/// normal-inverse-gamma on each (mean, variance) pair and a flat Dirichlet
/// on the weights.
fn log_prior_kernel(prior: &GmmPrior, means: &[f64], vars: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..means.len() {
        let s2 = vars[j];
        acc += -0.5 * s2.ln() - prior.kappa0 * (means[j] - prior.m0).powi(2) / (2.0 * s2);
        acc += -(prior.nu0 / 2.0 + 1.0) * s2.ln() - (prior.s0sq / 2.0) / s2;
    }
    acc
}

fn em_run(data: &[f64], k: usize, prior: &GmmPrior, init_means: Vec<f64>) -> EmRun {
    let n = data.len();
    let nf = n as f64;
    let mut weights = vec![1.0 / k as f64; k];
    let mut means = init_means;
    let mut vars = vec![prior.s0sq; k];

    let mut objective_trace = Vec::new();
    let mut resp = vec![0.0; n * k];
    let mut loglik = f64::NEG_INFINITY;
    let mut updates = 0;

    for _ in 0..EM_MAX_ITERS {
        // E-step: responsibilities and observed log-likelihood
        loglik = 0.0;
        for i in 0..n {
            let mut terms = Vec::with_capacity(k);
            for j in 0..k {
                let lw = if weights[j] > 0.0 {
                    weights[j].ln()
                } else {
                    f64::NEG_INFINITY
                };
                terms.push(lw + normal_log_density(data[i], means[j], vars[j]));
            }
            let lse = log_sum_exp(&terms);
            loglik += lse;
            for j in 0..k {
                resp[i * k + j] = (terms[j] - lse).exp();
            }
        }
        let objective = loglik + log_prior_kernel(prior, &means, &vars);
        let converged = objective_trace
            .last()
            .is_some_and(|prev| objective - prev < EM_TOL);
        objective_trace.push(objective);
        if converged {
            break;
        }

        // M-step: conjugate MAP updates
        for j in 0..k {
            let nj: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            let xbar = if nj > 0.0 {
                (0..n).map(|i| resp[i * k + j] * data[i]).sum::<f64>() / nj
            } else {
                prior.m0
            };
            let ss: f64 = (0..n)
                .map(|i| resp[i * k + j] * (data[i] - xbar).powi(2))
                .sum();
            weights[j] = nj / nf;
            means[j] = (prior.kappa0 * prior.m0 + nj * xbar) / (prior.kappa0 + nj);
            vars[j] = (prior.s0sq
                + prior.kappa0 * nj / (prior.kappa0 + nj) * (xbar - prior.m0).powi(2)
                + ss)
                / (prior.nu0 + nj + 3.0);
        }
        updates += 1;
    }

    EmRun {
        weights,
        means,
        variances: vars,
        loglik,
        objective_trace,
        updates,
    }
}

// ---------------------------------------------------------------------------
// Noise baselines
// ---------------------------------------------------------------------------

/// Deliberately signal-free reference models used to put the tolerance on
/// an interpretable scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Uniform density over the observed range of univariate data:
    /// `μ̂_noise = log(max − min)`.
    UniformRange,
    /// Standard multivariate normal `N(0, I)`: the mean over rows of
    /// `(p/2)·log 2π + ½‖x_i‖²`.
    StandardMvn,
}

/// Estimated mean loss of the noise reference on the given data.
pub fn noise_reference(data: &DMatrix<f64>, kind: NoiseKind) -> Result<f64> {
    let (n, p) = data.shape();
    if n == 0 {
        return Err(LadError::Validation("data matrix is empty".into()));
    }
    match kind {
        NoiseKind::UniformRange => {
            if p != 1 {
                return Err(LadError::Validation(format!(
                    "uniform-range noise model needs univariate data, got {p} columns"
                )));
            }
            let lo = data.column(0).iter().copied().fold(f64::INFINITY, f64::min);
            let hi = data
                .column(0)
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if hi <= lo {
                return Err(LadError::Validation(
                    "zero data range: uniform-range noise model is undefined".into(),
                ));
            }
            Ok((hi - lo).ln())
        }
        NoiseKind::StandardMvn => {
            let half_const = p as f64 / 2.0 * LN_2PI;
            let per_row: Vec<f64> = (0..n)
                .map(|i| half_const + 0.5 * data.row(i).iter().map(|x| x * x).sum::<f64>())
                .collect();
            Ok(par::pairwise_mean(&per_row))
        }
    }
}

// ---------------------------------------------------------------------------
// Data-generating processes
// ---------------------------------------------------------------------------

/// True distribution used by simulation experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum DgpKind {
    /// `N(θ₀, I)` rows of dimension `theta0.len()`.
    Mvn { theta0: DVector<f64> },
    /// Univariate Gaussian mixture (one column).
    Gmm {
        weights: Vec<f64>,
        means: Vec<f64>,
        vars: Vec<f64>,
    },
}

/// Parameters of a seeded, reproducible synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub seed: u64,
    pub n: usize,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DgpKind::Mvn { theta0 } => {
                if theta0.is_empty() || theta0.iter().any(|t| !t.is_finite()) {
                    return Err(LadError::Validation("invalid theta0".into()));
                }
            }
            DgpKind::Gmm {
                weights,
                means,
                vars,
            } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != vars.len()
                {
                    return Err(LadError::Validation(
                        "mixture parameter arrays must be nonempty and equal length".into(),
                    ));
                }
                if weights.iter().any(|w| *w < 0.0)
                    || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return Err(LadError::Validation(
                        "mixture weights must be nonnegative and sum to 1".into(),
                    ));
                }
                if vars.iter().any(|v| !(*v > 0.0)) {
                    return Err(LadError::Validation(
                        "mixture variances must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DgpKind::Mvn { theta0 } => theta0.len(),
            DgpKind::Gmm { .. } => 1,
        }
    }
}

/// Draw the dataset described by `spec`. The stream is
/// `(spec.seed, SIMULATE, 0)` with a fixed row-major draw order: for each
/// observation, p standard normals (MVN) or one uniform followed by one
/// standard normal (mixture). `n = 0` yields an empty matrix.
pub fn simulate_dgp(spec: &DgpSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let mut rng = substream(spec.seed, domain::SIMULATE, 0);
    match &spec.kind {
        DgpKind::Mvn { theta0 } => {
            let p = theta0.len();
            let mut m = DMatrix::zeros(spec.n, p);
            for i in 0..spec.n {
                for j in 0..p {
                    let z: f64 = rng.sample(StandardNormal);
                    m[(i, j)] = theta0[j] + z;
                }
            }
            Ok(m)
        }
        DgpKind::Gmm {
            weights,
            means,
            vars,
        } => {
            let mut m = DMatrix::zeros(spec.n, 1);
            for i in 0..spec.n {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut comp = weights.len() - 1;
                for (j, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        comp = j;
                        break;
                    }
                }
                let z: f64 = rng.sample(StandardNormal);
                m[(i, 0)] = means[comp] + vars[comp].sqrt() * z;
            }
            Ok(m)
        }
    }
}
