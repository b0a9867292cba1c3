//! Normal-Inverse-Wishart conjugate inference for the loss-vector mean and
//! covariance, plus the coordinatewise normal-inverse-gamma variant.
//!
//! The model is `Z_i | μ,Σ ~ N(μ,Σ)` with `(μ,Σ) ~ NIW(μ₀, λ₀, Ψ₀, ν₀)`.
//! The posterior is again NIW with
//!
//! ```text
//! λ_n = λ₀ + n
//! μ_n = (λ₀ μ₀ + n Z̄) / λ_n
//! Ψ_n = Ψ₀ + n S_n + (λ₀ n / λ_n)(Z̄ − μ₀)(Z̄ − μ₀)ᵀ
//! ν_n = ν₀ + n
//! ```
//!
//! where Z̄ and S_n are the sample mean and 1/n-normalized covariance.
//! Posterior draws follow the standard route: Σ' ~ InverseWishart(Ψ_n, ν_n)
//! via a Bartlett-decomposed Wishart draw and triangular solves, then
//! μ' ~ N(μ_n, Σ'/λ_n).

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use crate::data::LossSummary;
use crate::error::{LadError, Result};
use crate::par;
use crate::rng::{domain, substream};

/// Which covariance family generated a set of posterior draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceModel {
    /// Full K×K covariance (Normal-Inverse-Wishart).
    Full,
    /// Diagonal covariance (independent normal-inverse-gamma coordinates).
    Diagonal,
}

/// Whether to retain sampled covariance matrices.
///
/// The selector only consumes μ draws, so `Compact` is the default; `Full`
/// keeps every Σ' for sampler diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawMode {
    Compact,
    Full,
}

/// Parameters of a Normal-Inverse-Wishart distribution (prior or posterior).
#[derive(Debug, Clone, PartialEq)]
pub struct NiwState {
    mu: DVector<f64>,
    lambda: f64,
    psi: DMatrix<f64>,
    nu: f64,
}

impl NiwState {
    /// Validate and construct. `psi` must be symmetric within 1e-12 and
    /// admit a (possibly jittered) Cholesky factorization; `lambda > 0` and
    /// `nu > K - 1`.
    pub fn new(mu: DVector<f64>, lambda: f64, psi: DMatrix<f64>, nu: f64) -> Result<Self> {
        let k = mu.len();
        if psi.shape() != (k, k) {
            return Err(LadError::Validation(format!(
                "psi shape {:?} does not match mu length {k}",
                psi.shape()
            )));
        }
        if !(lambda > 0.0) {
            return Err(LadError::Validation(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        if !(nu > k as f64 - 1.0) {
            return Err(LadError::Validation(format!(
                "nu must exceed K-1 = {}, got {nu}",
                k as f64 - 1.0
            )));
        }
        if mu.iter().any(|x| !x.is_finite()) || psi.iter().any(|x| !x.is_finite()) {
            return Err(LadError::Numerical(
                "non-finite NIW parameters (inputs may have overflowed)".into(),
            ));
        }
        for i in 0..k {
            for j in 0..i {
                if (psi[(i, j)] - psi[(j, i)]).abs() > 1e-12 {
                    return Err(LadError::Validation(format!(
                        "psi is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        cholesky_with_jitter(&psi)?;
        Ok(NiwState {
            mu,
            lambda,
            psi,
            nu,
        })
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Recommended weakly informative prior: μ₀ = 0, λ₀ = 0.01, Ψ₀ = I,
/// ν₀ = K + 2.
pub fn default_prior(k: usize) -> Result<NiwState> {
    if k < 1 {
        return Err(LadError::Validation("prior needs K >= 1".into()));
    }
    NiwState::new(
        DVector::zeros(k),
        0.01,
        DMatrix::identity(k, k),
        k as f64 + 2.0,
    )
}

/// Conjugate update of an NIW prior with a loss summary. An empty summary
/// (n = 0) returns the prior unchanged.
pub fn niw_update(prior: &NiwState, summary: &LossSummary) -> Result<NiwState> {
    if summary.num_models() != prior.dim() {
        return Err(LadError::Validation(format!(
            "summary dimension {} does not match prior dimension {}",
            summary.num_models(),
            prior.dim()
        )));
    }
    if summary.n == 0 {
        return Ok(prior.clone());
    }
    let n = summary.n as f64;
    let lambda_n = prior.lambda + n;
    let mu_n = (&prior.mu * prior.lambda + &summary.mean * n) / lambda_n;
    let centered = &summary.mean - &prior.mu;
    let mut psi_n = &prior.psi + &summary.cov * n;
    // rank-1 term computed once per unordered pair so Psi_n is exactly
    // symmetric whenever the inputs are
    let w = prior.lambda * n / lambda_n;
    for a in 0..psi_n.nrows() {
        for b in 0..=a {
            let v = w * (centered[a] * centered[b]);
            psi_n[(a, b)] += v;
            if a != b {
                psi_n[(b, a)] += v;
            }
        }
    }
    let nu_n = prior.nu + n;
    NiwState::new(mu_n, lambda_n, psi_n, nu_n)
}

type DrawOutcome = Result<(DVector<f64>, Option<DMatrix<f64>>)>;

/// Posterior draws of (μ, Σ). `mus` is T×K; `sigmas` is populated only in
/// `DrawMode::Full`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub mus: DMatrix<f64>,
    pub sigmas: Option<Vec<DMatrix<f64>>>,
    pub t: usize,
    pub seed: u64,
    pub variant: CovarianceModel,
}

impl PosteriorDraws {
    pub fn num_models(&self) -> usize {
        self.mus.ncols()
    }

    /// Mean of the μ draws (pairwise-summed, schedule-independent).
    pub fn mu_mean(&self) -> DVector<f64> {
        let k = self.num_models();
        DVector::from_fn(k, |j, _| {
            let col: Vec<f64> = self.mus.column(j).iter().copied().collect();
            par::pairwise_mean(&col)
        })
    }
}

/// Draw T posterior samples from an NIW state.
///
/// Draw t uses the substream `(seed, NIW_DRAW, t)` with a fixed order:
/// Bartlett diagonal χ² variates (i = 0..K), Bartlett subdiagonal standard
/// normals (row-major), then the K standard normals for μ. Results are
/// therefore bit-identical for a given `(seed, T)` regardless of batching
/// or thread count.
pub fn sample_posterior(
    post: &NiwState,
    t: usize,
    seed: u64,
    mode: DrawMode,
) -> Result<PosteriorDraws> {
    if t < 1 {
        return Err(LadError::Validation("draw count T must be >= 1".into()));
    }
    let k = post.dim();
    let (psi_chol, _) = cholesky_with_jitter(&post.psi)?;
    // upper-triangular factor Lᵀ of Ψ_n = L Lᵀ, used in the per-draw solve
    let psi_l_t = psi_chol.l().transpose();

    let draws: Vec<DrawOutcome> = par::map_indexed(t, |i| {
        let mut rng = substream(seed, domain::NIW_DRAW, i as u64);
        let root = inverse_wishart_root(&mut rng, post.nu, &psi_l_t)?;
        // μ' = μ_n + Mᵀ z / sqrt(λ_n) where Mᵀ M = Σ'
        let z: DVector<f64> = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mu = &post.mu + root.transpose() * z / post.lambda.sqrt();
        let sigma = match mode {
            DrawMode::Full => Some(root.transpose() * &root),
            DrawMode::Compact => None,
        };
        Ok((mu, sigma))
    });

    collect_draws(draws, t, k, seed, CovarianceModel::Full)
}

/// Draw the matrix M with Mᵀ M = Σ' ~ InverseWishart(Ψ, ν), given the
/// upper factor Lᵀ of Ψ = L Lᵀ.
///
/// Bartlett: W = C A Aᵀ Cᵀ ~ Wishart(ν, Ψ⁻¹) for any C with C Cᵀ = Ψ⁻¹;
/// we take C = L⁻ᵀ, so Σ' = W⁻¹ = Mᵀ M with M = A⁻¹ Lᵀ, obtained by one
/// forward substitution against the lower-triangular Bartlett factor A.
fn inverse_wishart_root(
    rng: &mut ChaCha8Rng,
    nu: f64,
    psi_l_t: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let k = psi_l_t.nrows();
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        let dof = nu - i as f64;
        let chi = ChiSquared::new(dof)
            .map_err(|e| LadError::Numerical(format!("chi-squared dof {dof} invalid: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
    }
    for i in 0..k {
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    a.solve_lower_triangular(psi_l_t).ok_or_else(|| {
        LadError::Numerical("singular Bartlett factor in inverse-Wishart draw".into())
    })
}

fn collect_draws(
    draws: Vec<DrawOutcome>,
    t: usize,
    k: usize,
    seed: u64,
    variant: CovarianceModel,
) -> Result<PosteriorDraws> {
    let mut mus = DMatrix::zeros(t, k);
    let mut sigmas = Vec::new();
    let mut keep_sigmas = false;
    for (i, draw) in draws.into_iter().enumerate() {
        let (mu, sigma) = draw?;
        mus.row_mut(i).copy_from(&mu.transpose());
        if let Some(s) = sigma {
            keep_sigmas = true;
            sigmas.push(s);
        }
    }
    Ok(PosteriorDraws {
        mus,
        sigmas: keep_sigmas.then_some(sigmas),
        t,
        seed,
        variant,
    })
}

/// Per-coordinate normal-inverse-gamma state (the diagonal-covariance
/// counterpart of [`NiwState`]), with hyperparameters matched to an NIW
/// prior by `a₀k = (ν₀ − K + 1)/2`, `b₀k = Ψ₀,kk/2`, `μ₀k = (μ₀)_k`,
/// `λ₀k = λ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl NigState {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Hyperparameters matched to an NIW prior.
    pub fn matched_to(niw: &NiwState) -> Result<Self> {
        let k = niw.dim();
        let a0 = (niw.nu - k as f64 + 1.0) / 2.0;
        if a0 <= 0.0 {
            return Err(LadError::Validation(format!(
                "matched inverse-gamma shape (nu0 - K + 1)/2 = {a0} must be positive"
            )));
        }
        Ok(NigState {
            a: vec![a0; k],
            b: (0..k).map(|j| niw.psi[(j, j)] / 2.0).collect(),
            mu: niw.mu.iter().copied().collect(),
            lambda: vec![niw.lambda; k],
        })
    }

    /// Coordinatewise conjugate update:
    /// `a_nk = a₀k + n/2`,
    /// `b_nk = b₀k + ½ Σᵢ (Z_ik − Z̄_k)² + ½ (λ₀ n / λ_n)(Z̄_k − μ₀k)²`.
    /// The centered sum of squares equals `n·S_kk` for the 1/n-normalized
    /// summary covariance. An empty summary returns the prior unchanged.
    pub fn updated(&self, summary: &LossSummary) -> Result<NigState> {
        if summary.num_models() != self.dim() {
            return Err(LadError::Validation(format!(
                "summary dimension {} does not match prior dimension {}",
                summary.num_models(),
                self.dim()
            )));
        }
        if summary.n == 0 {
            return Ok(self.clone());
        }
        let n = summary.n as f64;
        let k = self.dim();
        let mut post = self.clone();
        for j in 0..k {
            let lambda_n = self.lambda[j] + n;
            let zbar = summary.mean[j];
            post.a[j] = self.a[j] + n / 2.0;
            post.b[j] = self.b[j]
                + 0.5 * n * summary.cov[(j, j)]
                + 0.5 * (self.lambda[j] * n / lambda_n) * (zbar - self.mu[j]).powi(2);
            post.mu[j] = (self.lambda[j] * self.mu[j] + n * zbar) / lambda_n;
            post.lambda[j] = lambda_n;
        }
        Ok(post)
    }
}

/// Diagonal-covariance analogue of update-then-sample: match NIG
/// hyperparameters to `niw_prior`, update with `summary`, and draw T
/// samples.
///
/// Draw t uses substream `(seed, NIG_DRAW, t)`; within a draw the order is
/// (σ²_k, μ_k) pairs for k = 0..K. σ²_k ~ InverseGamma(a_nk, b_nk) is drawn
/// as the reciprocal of a Gamma(a_nk, rate b_nk) variate, then
/// μ_k ~ N(μ_nk, σ²_k/λ_nk).
pub fn nig_match_update_sample(
    niw_prior: &NiwState,
    summary: &LossSummary,
    t: usize,
    seed: u64,
    mode: DrawMode,
) -> Result<PosteriorDraws> {
    if t < 1 {
        return Err(LadError::Validation("draw count T must be >= 1".into()));
    }
    let post = NigState::matched_to(niw_prior)?.updated(summary)?;
    let k = post.dim();

    let draws: Vec<DrawOutcome> = par::map_indexed(t, |i| {
        let mut rng = substream(seed, domain::NIG_DRAW, i as u64);
        let mut mu = DVector::zeros(k);
        let mut sig_diag = DVector::zeros(k);
        for j in 0..k {
            let gamma = Gamma::new(post.a[j], 1.0 / post.b[j])
                .map_err(|e| LadError::Numerical(format!("gamma draw for coordinate {j}: {e}")))?;
            let sigma2 = 1.0 / gamma.sample(&mut rng);
            let z: f64 = rng.sample(StandardNormal);
            mu[j] = post.mu[j] + (sigma2 / post.lambda[j]).sqrt() * z;
            sig_diag[j] = sigma2;
        }
        let sigma = match mode {
            DrawMode::Full => Some(DMatrix::from_diagonal(&sig_diag)),
            DrawMode::Compact => None,
        };
        Ok((mu, sigma))
    });

    collect_draws(draws, t, k, seed, CovarianceModel::Diagonal)
}

/// Cholesky with bounded PD repair: on failure, add `1e-10·trace(A)/K` of
/// jitter to the diagonal and retry up to 3 times with 10× escalation.
/// Returns the factorization and the jitter that was needed.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(Cholesky<f64, nalgebra::Dyn>, f64)> {
    let k = m.nrows();
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok((chol, 0.0));
    }
    let base = 1e-10 * m.trace().abs().max(f64::MIN_POSITIVE) / k as f64;
    let mut jitter = base;
    for _ in 0..3 {
        let repaired = m + DMatrix::identity(k, k) * jitter;
        if let Some(chol) = Cholesky::new(repaired) {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
    }
    Err(LadError::Numerical(format!(
        "Cholesky failed for {k}x{k} matrix even after jitter up to {:.3e} \
         (trace {:.6e}, min diagonal {:.6e})",
        jitter / 10.0,
        m.trace(),
        (0..k).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min),
    )))
}
