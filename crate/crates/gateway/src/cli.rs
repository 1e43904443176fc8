//! `pairank` command line. Every subcommand reads its settings from flags,
//! falling back to the matching table of an optional TOML `--config` file.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pairank_core::{ItemId, RankingConfig, Session, Strategy};
use pairank_prior::{mock_provider_with, MockOptions, PriorAssessment, PriorWeights, VlmClient, VlmConfig};
use pairank_simlab::{
    corruption_setup, corruption_sweep, gen_ground_truth, run_ablation, run_simulation, write_ablation_csv,
    write_corruption_csv, write_curves_csv, AblationSetup, AnnotatorModel, Checkpoints, Hypothesis, LatentDistribution,
};
use pairank_stats::{agreement_matrix, compare, AgreementMatrix, ComparisonReport, Metric, SessionRanking};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::api::router;
use crate::store::Store;

pub const ENDPOINT_ENV: &str = "PAIRANK_VLM_ENDPOINT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] pairank_simlab::SimError),
    #[error(transparent)]
    Stats(#[from] pairank_stats::StatsError),
    #[error(transparent)]
    Prior(#[from] pairank_prior::PriorError),
    #[error(transparent)]
    Core(#[from] pairank_core::Error),
    #[error("server: {0}")]
    Server(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Sim(_) => "simulation",
            CliError::Stats(_) => "stats",
            CliError::Prior(_) => "prior",
            CliError::Core(_) => "session",
            CliError::Server(_) => "server",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Single-line machine-readable form written to stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": { "code": self.code(), "message": self.to_string() } }).to_string()
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
            write(&mut f)?;
            f.flush().map_err(|e| io_err(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush().map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Config(e.to_string()))?;
        writeln!(w).map_err(|e| io_err(Path::new("<output>"), e))
    })
}

#[derive(Debug, Parser)]
#[command(name = "pairank", version, about = "Budgeted active pairwise ranking")]
pub struct Cli {
    /// TOML file with one table per subcommand (`[sim]`, `[ablate]`, ...) and an optional `[ranking]` table.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the annotation HTTP API.
    Serve(ServeOpts),
    /// Run simulated annotation sessions and print convergence curves as CSV.
    Sim(SimOpts),
    /// Run one ablation table.
    Ablate(AblateOpts),
    /// Measure how inverted prior scores degrade the final ranking.
    CorruptSweep(SweepOpts),
    /// Inter-session agreement statistics.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Prior score computation.
    #[command(subcommand)]
    Prior(PriorCommand),
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Compare agreement between two conditions, each a directory of session results.
    Compare(CompareOpts),
}

#[derive(Debug, Subcommand)]
pub enum PriorCommand {
    /// Query a vision-language model for every image in a directory.
    Compute(PriorComputeOpts),
    /// Synthesize prior assessments from known latent scores.
    Mock(PriorMockOpts),
}

/// Fills every unset field of `self` from `file`.
macro_rules! overlay {
    ($t:ident { $($f:ident),* $(,)? }) => {
        impl $t {
            fn overlay(self, file: Self) -> Self {
                Self { $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatorArg {
    Oracle,
    Bt,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    Hybrid,
    Uncertainty,
    Boundary,
    Random,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Hybrid => Strategy::Hybrid,
            StrategyArg::Uncertainty => Strategy::Uncertainty,
            StrategyArg::Boundary => Strategy::Boundary,
            StrategyArg::Random => Strategy::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionArg {
    Normal,
    Uniform,
}

impl From<DistributionArg> for LatentDistribution {
    fn from(d: DistributionArg) -> Self {
        match d {
            DistributionArg::Normal => LatentDistribution::Normal,
            DistributionArg::Uniform => LatentDistribution::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatArg {
    Csv,
    Json,
}

fn format_for(format: Option<FormatArg>, out: Option<&Path>) -> FormatArg {
    format.unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => FormatArg::Json,
        _ => FormatArg::Csv,
    })
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeOpts {
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}
overlay!(ServeOpts { host, port, data_dir });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOpts {
    /// Number of items.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comparisons per run; defaults to 3N.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, value_enum)]
    pub annotator: Option<AnnotatorArg>,
    /// Probability of a random answer for the noisy annotator.
    #[arg(long)]
    pub noise_p: Option<f64>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    pub distribution: Option<DistributionArg>,
    /// Run `r` uses seed `seed + r`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(SimOpts { n, budget, annotator, noise_p, strategy, distribution, seed, runs, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateOpts {
    /// One of h1..h5.
    #[arg(long)]
    pub hypothesis: Option<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub annotator: Option<AnnotatorArg>,
    #[arg(long)]
    pub noise_p: Option<f64>,
    /// Noise of the mock prior provider.
    #[arg(long)]
    pub prior_noise: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to json for a `.json` output path, csv otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}
overlay!(AblateOpts { hypothesis, runs, seed, n, annotator, noise_p, prior_noise, out, format });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOpts {
    /// Comma-separated corruption fractions.
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub prior_noise: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}
overlay!(SweepOpts { p_list, runs, seed, n, prior_noise, out, format });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOpts {
    /// Directory of session results for condition A (`.jsonl` logs or `.json` ranking exports).
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(CompareOpts { a, b, metric, resamples, seed, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorComputeOpts {
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Generate endpoint; also read from the PAIRANK_VLM_ENDPOINT environment variable.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Samples per image.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(PriorComputeOpts { images, endpoint, model, k, timeout_secs, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorMockOpts {
    /// JSON object mapping item id to latent score.
    #[arg(long)]
    pub latents: Option<PathBuf>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(PriorMockOpts { latents, noise, k, seed, out });

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub ranking: Option<RankingConfig>,
    pub serve: ServeOpts,
    pub sim: SimOpts,
    pub ablate: AblateOpts,
    pub corrupt_sweep: SweepOpts,
    pub stats_compare: CompareOpts,
    pub prior_compute: PriorComputeOpts,
    pub prior_mock: PriorMockOpts,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => toml::from_str(&read_file(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        }
    }
}

fn annotator_model(kind: AnnotatorArg, noise_p: Option<f64>) -> AnnotatorModel {
    match kind {
        AnnotatorArg::Oracle => AnnotatorModel::oracle(),
        AnnotatorArg::Bt => AnnotatorModel::bradley_terry(),
        AnnotatorArg::Noisy => AnnotatorModel::noisy(noise_p.unwrap_or(0.0)),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let ranking = file.ranking.clone().unwrap_or_default();
    match cli.command {
        Command::Serve(o) => serve(o.overlay(file.serve), ranking),
        Command::Sim(o) => sim(o.overlay(file.sim), ranking),
        Command::Ablate(o) => ablate(o.overlay(file.ablate), file.ranking),
        Command::CorruptSweep(o) => sweep(o.overlay(file.corrupt_sweep), file.ranking),
        Command::Stats(StatsCommand::Compare(o)) => stats_compare(o.overlay(file.stats_compare)),
        Command::Prior(PriorCommand::Compute(o)) => prior_compute(o.overlay(file.prior_compute)),
        Command::Prior(PriorCommand::Mock(o)) => prior_mock(o.overlay(file.prior_mock)),
    }
}

fn serve(o: ServeOpts, ranking: RankingConfig) -> CliResult<()> {
    let host = o.host.unwrap_or_else(|| "127.0.0.1".into());
    let port = o.port.unwrap_or(8080);
    let data_dir = o.data_dir.unwrap_or_else(|| PathBuf::from("data"));
    let addr: SocketAddr =
        format!("{host}:{port}").parse().map_err(|e| CliError::Usage(format!("bad address {host}:{port}: {e}")))?;
    let store = Store::open(&data_dir, ranking).map_err(|e| CliError::Server(e.to_string()))?;
    let app = router(Arc::new(store));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Server(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| CliError::Server(e.to_string()))?;
        tracing::info!(%addr, data_dir = %data_dir.display(), "serving");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Server(e.to_string()))
    })
}

fn sim(o: SimOpts, ranking: RankingConfig) -> CliResult<()> {
    let n = o.n.unwrap_or(600);
    let seed = o.seed.unwrap_or(0);
    let runs = o.runs.unwrap_or(1);
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let model = annotator_model(o.annotator.unwrap_or(AnnotatorArg::Oracle), o.noise_p);
    let distribution = o.distribution.map(Into::into).unwrap_or_default();
    let mut config = RankingConfig { budget: o.budget.or(ranking.budget), ..ranking };
    if let Some(s) = o.strategy {
        config.acquisition.strategy = s.into();
    }
    let results = (0..runs as u64)
        .map(|r| {
            let gt = gen_ground_truth(n, distribution, seed + r)?;
            let config = RankingConfig { seed: seed + r, ..config.clone() };
            run_simulation(&config, &gt, None, &model, &Checkpoints::default())
        })
        .collect::<Result<Vec<_>, _>>()?;
    emit(o.out.as_deref(), |w| Ok(write_curves_csv(&results, w)?))
}

fn ablation_setup(
    runs: Option<usize>,
    seed: Option<u64>,
    n: Option<usize>,
    prior_noise: Option<f64>,
    base: AblationSetup,
    ranking: Option<RankingConfig>,
) -> AblationSetup {
    AblationSetup {
        runs: runs.unwrap_or(base.runs),
        base_seed: seed.unwrap_or(base.base_seed),
        n: n.unwrap_or(base.n),
        prior_noise: prior_noise.unwrap_or(base.prior_noise),
        base: ranking.unwrap_or(base.base),
        ..base
    }
}

fn ablate(o: AblateOpts, ranking: Option<RankingConfig>) -> CliResult<()> {
    let tag = o.hypothesis.ok_or_else(|| CliError::Usage("--hypothesis is required".into()))?;
    let hypothesis: Hypothesis = tag.parse()?;
    let mut setup = ablation_setup(o.runs, o.seed, o.n, o.prior_noise, AblationSetup::default(), ranking);
    if let Some(kind) = o.annotator {
        setup.annotator = annotator_model(kind, o.noise_p);
    }
    let table = run_ablation(hypothesis, &setup)?;
    match format_for(o.format, o.out.as_deref()) {
        FormatArg::Json => write_json(o.out.as_deref(), &table),
        FormatArg::Csv => emit(o.out.as_deref(), |w| Ok(write_ablation_csv(&table, w)?)),
    }
}

fn sweep(o: SweepOpts, ranking: Option<RankingConfig>) -> CliResult<()> {
    let fractions = o.p_list.unwrap_or_else(|| vec![0.0, 0.5, 1.0]);
    let setup = ablation_setup(o.runs, o.seed, o.n, o.prior_noise, corruption_setup(), ranking);
    let rows = corruption_sweep(&setup, &fractions)?;
    match format_for(o.format, o.out.as_deref()) {
        FormatArg::Json => write_json(o.out.as_deref(), &rows),
        FormatArg::Csv => emit(o.out.as_deref(), |w| Ok(write_corruption_csv(&rows, w)?)),
    }
}

/// Loads every `.jsonl` session log and `.json` ranking export in `dir`,
/// keyed by file stem.
pub fn load_rankings(dir: &Path) -> CliResult<Vec<SessionRanking>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "jsonl")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let text = read_file(p)?;
            if p.extension().and_then(|e| e.to_str()) == Some("jsonl") {
                let session = Session::read_jsonl(text.as_bytes())?;
                let scores: BTreeMap<String, f64> =
                    session.items().iter().map(|i| (i.id.as_str().to_string(), i.rating)).collect();
                Ok(SessionRanking { session_id: stem.clone(), annotator_id: stem, scores })
            } else {
                Ok(SessionRanking::from_export_json(stem.clone(), stem, &text)?)
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ConditionSummary {
    pub dir: String,
    pub sessions: usize,
    pub mean: f64,
    pub matrix: AgreementMatrix,
}

#[derive(Debug, Serialize)]
pub struct CompareOutput {
    pub metric: Metric,
    pub pairs: usize,
    pub a: ConditionSummary,
    pub b: ConditionSummary,
    /// Paired over the same session pairs; differences are A minus B.
    pub comparison: ComparisonReport,
}

fn stats_compare(o: CompareOpts) -> CliResult<()> {
    let a_dir = o.a.ok_or_else(|| CliError::Usage("--a is required".into()))?;
    let b_dir = o.b.ok_or_else(|| CliError::Usage("--b is required".into()))?;
    let metric: Metric = o.metric.as_deref().unwrap_or("kendall").parse()?;
    let (a, b) = (load_rankings(&a_dir)?, load_rankings(&b_dir)?);
    let stems = |s: &[SessionRanking]| s.iter().map(|r| r.session_id.clone()).collect::<Vec<_>>();
    if stems(&a) != stems(&b) {
        return Err(CliError::Usage(format!(
            "conditions must hold the same session names to be paired: {:?} vs {:?}",
            stems(&a),
            stems(&b)
        )));
    }
    let (ma, mb) = (agreement_matrix(&a, metric)?, agreement_matrix(&b, metric)?);
    let comparison = compare(&ma.values(), &mb.values(), o.resamples.unwrap_or(20_000), o.seed.unwrap_or(0))?;
    let output = CompareOutput {
        metric,
        pairs: ma.pairs.len(),
        a: ConditionSummary { dir: a_dir.display().to_string(), sessions: a.len(), mean: ma.mean(), matrix: ma },
        b: ConditionSummary { dir: b_dir.display().to_string(), sessions: b.len(), mean: mb.mean(), matrix: mb },
        comparison,
    };
    write_json(o.out.as_deref(), &output)
}

fn prior_compute(o: PriorComputeOpts) -> CliResult<()> {
    let dir = o.images.ok_or_else(|| CliError::Usage("--images is required".into()))?;
    let defaults = VlmConfig::default();
    let endpoint = o
        .endpoint
        .or_else(|| std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or(defaults.endpoint.clone());
    let config = VlmConfig {
        endpoint,
        model: o.model.unwrap_or(defaults.model.clone()),
        timeout_secs: o.timeout_secs.unwrap_or(defaults.timeout_secs),
        ..defaults
    };
    let k = o.k.unwrap_or(2);
    let client = VlmClient::new(config)?;
    let weights = PriorWeights::default();
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| io_err(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("jpg" | "jpeg" | "png")
            )
        })
        .collect();
    paths.sort();
    let mut out = BTreeMap::new();
    for path in paths {
        let id = ItemId::from(path.file_stem().and_then(|s| s.to_str()).unwrap_or_default());
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        let samples = client.fetch_assessments(&bytes, k)?;
        out.insert(id.clone(), PriorAssessment::from_samples(id, samples, &weights)?);
    }
    write_json(o.out.as_deref(), &out)
}

fn prior_mock(o: PriorMockOpts) -> CliResult<()> {
    let path = o.latents.ok_or_else(|| CliError::Usage("--latents is required".into()))?;
    let latents: BTreeMap<ItemId, f64> =
        serde_json::from_str(&read_file(&path)?).map_err(|e| io_err(&path, format!("expected {{id: score}}: {e}")))?;
    let options = MockOptions { samples: o.k.unwrap_or(MockOptions::default().samples), ..MockOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap_or(0));
    let out = mock_provider_with(&latents, o.noise.unwrap_or(0.0), &options, &mut rng)?;
    write_json(o.out.as_deref(), &out)
}
