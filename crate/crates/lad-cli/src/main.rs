//! `lad`: Likelihood-as-Data model selection from the command line.
//!
//! Subcommands: `analyze` (score candidate models from a loss CSV), `path`
//! (scores along a tolerance grid), `simulate` (replicated method
//! comparisons), and `gmm` (fit univariate Gaussian mixtures and select the
//! component count).
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical error.

// negated comparisons like `!(x > 0.0)` reject NaN inputs on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lad_core::data::{
    bias_correct, format_f64, load_data_matrix_auto, load_loss_matrix_auto, load_model_meta,
    summarize, LossMatrix, ModelMeta,
};
use lad_core::harness::{run_comparison, ExperimentConfig, Method, Scenario};
use lad_core::models::{gmm_fit_em, noise_reference, NoiseKind};
use lad_core::nalgebra::{DMatrix, DVector};
use lad_core::niw::{
    default_prior, nig_match_update_sample, niw_update, sample_posterior, CovarianceModel,
    DrawMode, PosteriorDraws,
};
use lad_core::rng::{derive_seed, domain};
use lad_core::selector::{
    analyze, delta_for_tau, posterior_path, ScoreVariant, SelectorConfig, SlcReport,
};
use lad_core::LadError;

use report::{to_json, CliReport, ConfigEcho};

#[derive(Parser)]
#[command(
    name = "lad",
    version,
    about = "Robust model selection by treating per-observation losses as data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score candidate models from a loss CSV at one or more tolerances.
    Analyze(AnalyzeArgs),
    /// Trace selection scores along a grid of rescaled tolerances.
    Path(PathArgs),
    /// Run a replicated simulation comparison and emit a Brier table.
    Simulate(SimulateArgs),
    /// Fit k-component Gaussian mixtures to univariate data and select k.
    Gmm(GmmArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Soft,
    Hard,
    Plugin,
}

impl VariantArg {
    fn to_core(self) -> ScoreVariant {
        match self {
            VariantArg::Soft => ScoreVariant::Soft,
            VariantArg::Hard => ScoreVariant::Hard,
            VariantArg::Plugin => ScoreVariant::Plugin,
        }
    }

    fn name(self) -> &'static str {
        match self {
            VariantArg::Soft => "soft",
            VariantArg::Hard => "hard",
            VariantArg::Plugin => "plugin",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CovArg {
    Full,
    Diag,
}

impl CovArg {
    fn to_core(self) -> CovarianceModel {
        match self {
            CovArg::Full => CovarianceModel::Full,
            CovArg::Diag => CovarianceModel::Diagonal,
        }
    }

    fn name(self) -> &'static str {
        match self {
            CovArg::Full => "full",
            CovArg::Diag => "diag",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct ScoringOpts {
    /// Tolerance value(s) in nats.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    delta: Vec<f64>,
    /// Rescaled tolerance value(s) in [0, 1]; requires --noise-mu.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    tau: Vec<f64>,
    /// Mean loss of the noise reference model.
    #[arg(long, allow_negative_numbers = true)]
    noise_mu: Option<f64>,
    /// Posterior draw count T.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Soft-min temperature exponent: alpha_n = n^E, E in (0, 0.5).
    #[arg(long, default_value_t = 0.45)]
    alpha_exp: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Soft)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = CovArg::Full)]
    cov: CovArg,
    /// Selection threshold on the scores.
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Loss CSV (n rows, K columns, optional header of model names).
    #[arg(long)]
    loss: PathBuf,
    /// Model metadata JSON {"names":[...],"complexity":[...],"dims":[...]}.
    #[arg(long)]
    meta: PathBuf,
    /// Add d_k/(2n) to column k before analysis.
    #[arg(long)]
    bias_correct: bool,
    #[command(flatten)]
    scoring: ScoringOpts,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Also write the posterior mu draws as CSV (diagnostics).
    #[arg(long)]
    dump_draws: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long)]
    loss: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long)]
    bias_correct: bool,
    /// Mean loss of the noise reference model (required for the grid).
    #[arg(long, allow_negative_numbers = true)]
    noise_mu: f64,
    /// Tau grid LO:HI:STEP, e.g. 0:1:0.01.
    #[arg(long)]
    tau_grid: String,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.45)]
    alpha_exp: f64,
    #[arg(long, value_enum, default_value_t = CovArg::Full)]
    cov: CovArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario name: mvn-table1 or gmm4.
    #[arg(long)]
    scenario: String,
    /// Sample size(s).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Replicates per sample size.
    #[arg(long)]
    reps: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    delta: Vec<f64>,
    /// Comma list of methods (lad-soft, lad-hard, lad-diag, lad-plugin,
    /// cpost:ALPHA, bayes, aic, bic).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Posterior draw count for the LaD methods.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct GmmArgs {
    /// Univariate data CSV (one column).
    #[arg(long)]
    data: PathBuf,
    /// Largest component count to fit (k = 1..=kmax).
    #[arg(long)]
    kmax: usize,
    /// EM restarts per component count.
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[command(flatten)]
    scoring: ScoringOpts,
    /// Tau grid LO:HI:STEP; when given, emits the posterior path instead of
    /// per-tolerance reports.
    #[arg(long)]
    tau_grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

enum CliError {
    Usage(String),
    Core(LadError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<LadError> for CliError {
    fn from(e: LadError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => {
                if e.is_input_error() {
                    2
                } else {
                    3
                }
            }
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Path(args) => cmd_path(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Gmm(args) => cmd_gmm(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Cap worker parallelism via LAD_THREADS; outputs are identical for any
/// value because all randomness flows through per-index substreams.
fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("LAD_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Core(LadError::io(path.display().to_string(), e))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Resolve the requested tolerances to delta values. Tau inputs are
/// converted with the noise reference and the minimum column mean of the
/// (bias-corrected) loss matrix.
fn resolve_deltas(
    scoring: &ScoringOpts,
    corrected: &LossMatrix,
) -> CliResult<(Vec<f64>, Option<f64>)> {
    match (scoring.delta.is_empty(), scoring.tau.is_empty()) {
        (false, false) => Err(CliError::Usage(
            "--delta and --tau are mutually exclusive; give exactly one".into(),
        )),
        (true, true) => Err(CliError::Usage(
            "one of --delta or --tau is required".into(),
        )),
        (false, true) => Ok((scoring.delta.clone(), scoring.noise_mu)),
        (true, false) => {
            let noise = scoring.noise_mu.ok_or_else(|| {
                CliError::Usage("--tau requires --noise-mu (the noise reference mean loss)".into())
            })?;
            let mu_min = corrected
                .column_means()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let deltas: Result<Vec<f64>, LadError> = scoring
                .tau
                .iter()
                .map(|&t| delta_for_tau(t, noise, mu_min))
                .collect();
            Ok((deltas?, Some(noise)))
        }
    }
}

fn selector_config(scoring: &ScoringOpts, delta: f64, bias: bool) -> SelectorConfig {
    SelectorConfig {
        delta,
        alpha_exponent: scoring.alpha_exp,
        t_draws: scoring.draws,
        seed: scoring.seed,
        omega: scoring.omega,
        variant: scoring.variant.to_core(),
        covariance: scoring.cov.to_core(),
        bias_correct: bias,
    }
}

fn run_reports(
    z: &LossMatrix,
    meta: &ModelMeta,
    scoring: &ScoringOpts,
    bias: bool,
    loss_label: &str,
    meta_label: &str,
) -> CliResult<Vec<CliReport>> {
    let aligned = meta.aligned_to(z)?;
    let corrected = if bias {
        bias_correct(z, &aligned)?
    } else {
        z.clone()
    };
    let (deltas, noise_mu) = resolve_deltas(scoring, &corrected)?;
    let mut reports = Vec::with_capacity(deltas.len());
    for &delta in &deltas {
        let config = selector_config(scoring, delta, bias);
        let slc: SlcReport = analyze(z, &aligned, &config, noise_mu)?;
        let echo = ConfigEcho {
            loss: loss_label.to_string(),
            meta: meta_label.to_string(),
            bias_correct: bias,
            variant: scoring.variant.name().to_string(),
            cov: scoring.cov.name().to_string(),
            draws: scoring.draws,
            seed: scoring.seed,
            alpha_exp: scoring.alpha_exp,
            omega: scoring.omega,
        };
        reports.push(CliReport::from_slc(&slc, &aligned.dims, echo, noise_mu));
    }
    Ok(reports)
}

fn render_reports(reports: &[CliReport], format: FormatArg) -> String {
    match format {
        FormatArg::Json => {
            if reports.len() == 1 {
                to_json(&reports[0])
            } else {
                to_json(&reports)
            }
        }
        FormatArg::Csv => report::reports_to_csv(reports),
    }
}

/// Draw the posterior sample exactly as `analyze` does (same substreams),
/// for the draw-dump diagnostic and the path command.
fn sample_draws(
    corrected: &LossMatrix,
    t: usize,
    seed: u64,
    cov: CovarianceModel,
) -> CliResult<PosteriorDraws> {
    let summary = summarize(corrected);
    let prior = default_prior(corrected.num_models())?;
    let draws = match cov {
        CovarianceModel::Full => {
            let post = niw_update(&prior, &summary)?;
            sample_posterior(&post, t, seed, DrawMode::Compact)?
        }
        CovarianceModel::Diagonal => {
            nig_match_update_sample(&prior, &summary, t, seed, DrawMode::Compact)?
        }
    };
    Ok(draws)
}

fn dump_draws_csv(draws: &PosteriorDraws, names: &[String], path: &PathBuf) -> CliResult<()> {
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..draws.t {
        for j in 0..draws.num_models() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(draws.mus[(i, j)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Core(LadError::io(path.display().to_string(), e)))
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    let z = load_loss_matrix_auto(&args.loss)?;
    let meta = load_model_meta(&args.meta)?;
    let reports = run_reports(
        &z,
        &meta,
        &args.scoring,
        args.bias_correct,
        &args.loss.display().to_string(),
        &args.meta.display().to_string(),
    )?;
    if let Some(dump) = &args.dump_draws {
        let aligned = meta.aligned_to(&z)?;
        let corrected = if args.bias_correct {
            bias_correct(&z, &aligned)?
        } else {
            z.clone()
        };
        let draws = sample_draws(
            &corrected,
            args.scoring.draws,
            args.scoring.seed,
            args.scoring.cov.to_core(),
        )?;
        dump_draws_csv(&draws, z.model_names(), dump)?;
    }
    write_output(&args.out, &render_reports(&reports, args.format))
}

/// Parse LO:HI:STEP into an inclusive, strictly increasing grid.
fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "--tau-grid must be LO:HI:STEP, got {text:?}"
        )));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| f64::from_str(p.trim())).collect();
    let nums = nums
        .map_err(|_| CliError::Usage(format!("--tau-grid values must be numbers, got {text:?}")))?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if hi < lo {
        return Err(CliError::Usage(format!(
            "--tau-grid is inverted: LO {lo} exceeds HI {hi}"
        )));
    }
    if !(step > 0.0) {
        return Err(CliError::Usage(format!(
            "--tau-grid STEP must be positive, got {step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

fn path_csv(taus: &[f64], deltas: &[f64], scores: &DMatrix<f64>, names: &[String]) -> String {
    let mut out = String::from("tau,delta");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for g in 0..taus.len() {
        out.push_str(&format_f64(taus[g]));
        out.push(',');
        out.push_str(&format_f64(deltas[g]));
        for j in 0..names.len() {
            out.push(',');
            out.push_str(&format_f64(scores[(g, j)]));
        }
        out.push('\n');
    }
    out
}

fn cmd_path(args: PathArgs) -> CliResult<()> {
    let grid = parse_grid(&args.tau_grid)?;
    let z = load_loss_matrix_auto(&args.loss)?;
    let meta = load_model_meta(&args.meta)?.aligned_to(&z)?;
    let corrected = if args.bias_correct {
        bias_correct(&z, &meta)?
    } else {
        z.clone()
    };
    let draws = sample_draws(&corrected, args.draws, args.seed, args.cov.to_core())?;
    let alpha_n = (corrected.n() as f64).powf(args.alpha_exp);
    let path = posterior_path(&draws, &meta, &grid, args.noise_mu, alpha_n)?;
    let csv = path_csv(&path.taus, &path.deltas, &path.scores, &meta.model_names);
    write_output(&args.out, &csv)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let scenario: Scenario = args.scenario.parse()?;
    if args.methods.is_empty() {
        return Err(CliError::Usage(
            "--methods must list at least one method".into(),
        ));
    }
    let methods: Result<Vec<Method>, LadError> = args.methods.iter().map(|m| m.parse()).collect();
    let methods = methods?;
    let mut cfg = ExperimentConfig::new(scenario, args.n.clone(), args.delta.clone(), args.reps);
    cfg.methods = methods;
    cfg.seed = args.seed;
    cfg.t_draws = args.draws;
    let table = run_comparison(&cfg)?;
    let content = match args.format {
        FormatArg::Csv => table.to_csv(),
        FormatArg::Json => to_json(&table),
    };
    write_output(&args.out, &content)
}

fn cmd_gmm(args: GmmArgs) -> CliResult<()> {
    if args.kmax < 1 {
        return Err(CliError::Usage("--kmax must be >= 1".into()));
    }
    let data = load_data_matrix_auto(&args.data)?;
    if data.ncols() != 1 {
        return Err(CliError::Core(LadError::Validation(format!(
            "gmm needs univariate data (one column), got {}",
            data.ncols()
        ))));
    }
    let n = data.nrows();
    if args.kmax > n {
        return Err(CliError::Core(LadError::Validation(format!(
            "kmax {} exceeds the number of observations {n}",
            args.kmax
        ))));
    }
    let xs: Vec<f64> = data.column(0).iter().copied().collect();
    let noise_mu = noise_reference(&data, NoiseKind::UniformRange)?;

    let mut values = DMatrix::zeros(n, args.kmax);
    for k in 1..=args.kmax {
        // one derived fit seed per component count
        let fit_seed = derive_seed(args.scoring.seed, domain::REPLICATE, k as u64);
        let (_, losses) = gmm_fit_em(&xs, k, args.restarts, fit_seed)?;
        values.set_column(k - 1, &DVector::from_vec(losses));
    }
    let meta = ModelMeta::new(
        (1..=args.kmax).map(|k| format!("gmm_{k}")).collect(),
        (1..=args.kmax).map(|k| k as f64).collect(),
        (1..=args.kmax).map(|k| (3 * k - 1) as u32).collect(),
    )?;
    let z = LossMatrix::new(values, meta.model_names.clone())?;
    let corrected = bias_correct(&z, &meta)?;

    if let Some(grid_text) = &args.tau_grid {
        let grid = parse_grid(grid_text)?;
        let draws = sample_draws(
            &corrected,
            args.scoring.draws,
            args.scoring.seed,
            args.scoring.cov.to_core(),
        )?;
        let alpha_n = (n as f64).powf(args.scoring.alpha_exp);
        let path = posterior_path(&draws, &meta, &grid, noise_mu, alpha_n)?;
        let csv = path_csv(&path.taus, &path.deltas, &path.scores, &meta.model_names);
        return write_output(&args.out, &csv);
    }

    // mixture losses are already bias-corrected; the noise reference comes
    // from the data range, so tau inputs need no explicit --noise-mu
    let mut scoring = args.scoring;
    if scoring.noise_mu.is_none() {
        let mu_min = corrected
            .column_means()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        // with explicit deltas the noise reference only feeds the tau echo;
        // drop it rather than fail when it cannot beat the candidates
        if !scoring.tau.is_empty() || noise_mu > mu_min {
            scoring.noise_mu = Some(noise_mu);
        }
    }
    let reports = run_reports(
        &corrected,
        &meta,
        &scoring,
        false,
        &args.data.display().to_string(),
        &format!("gmm k=1..{}", args.kmax),
    )?;
    write_output(&args.out, &render_reports(&reports, args.format))
}
