use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use pairank_core::{AutoPolicy, ItemId, PriorMode, RankingConfig, RatingEngine, Strategy};
use pairank_prior::mock_provider;
use pairank_stats::kendall_tau;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::run::{corrupt_prior, run_simulation, Checkpoints, RunResult};
use crate::truth::{gen_ground_truth, AnnotatorModel, GroundTruth, LatentDistribution};

/// Mock-prior noise giving a prior/latent Kendall tau of about 0.17.
pub const DEFAULT_PRIOR_NOISE: f64 = 3.6;
pub const WARM_START_SPREAD: f64 = 100.0;
pub const NOISE_LEVELS: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    /// Prior usage and initialization.
    H1,
    /// Acquisition strategy.
    H2,
    /// Rating engine.
    H3,
    /// Automatic labelling policy.
    H4,
    /// Annotator noise.
    H5,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 5] = [Hypothesis::H1, Hypothesis::H2, Hypothesis::H3, Hypothesis::H4, Hypothesis::H5];
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hypothesis::H1 => "h1",
            Hypothesis::H2 => "h2",
            Hypothesis::H3 => "h3",
            Hypothesis::H4 => "h4",
            Hypothesis::H5 => "h5",
        };
        f.write_str(s)
    }
}

impl FromStr for Hypothesis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SimError::UnknownHypothesis(s.to_string()))
    }
}

/// Shared settings for every arm of an ablation or sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationSetup {
    pub n: usize,
    pub distribution: LatentDistribution,
    pub annotator: AnnotatorModel,
    /// Noise of the mock prior provider.
    pub prior_noise: f64,
    /// Run `r` uses seed `base_seed + r` for ground truth, priors and session.
    pub base_seed: u64,
    pub runs: usize,
    /// Configuration that every arm modifies; its seed is overridden per run.
    pub base: RankingConfig,
}

impl Default for AblationSetup {
    fn default() -> Self {
        Self {
            n: 600,
            distribution: LatentDistribution::Normal,
            annotator: AnnotatorModel::bradley_terry(),
            prior_noise: DEFAULT_PRIOR_NOISE,
            base_seed: 0,
            runs: 3,
            base: RankingConfig {
                prior_mode: PriorMode::Full,
                warm_start_spread: WARM_START_SPREAD,
                ..RankingConfig::default()
            },
        }
    }
}

impl AblationSetup {
    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(SimError::InvalidInput("runs must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(SimError::InvalidInput(format!("need at least 2 items, got {}", self.n)));
        }
        self.annotator.validate()?;
        self.base.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub label: String,
    pub config: RankingConfig,
    pub annotator: AnnotatorModel,
}

/// The arms compared under `hypothesis`, derived from `setup`.
pub fn arms(hypothesis: Hypothesis, setup: &AblationSetup) -> Vec<Arm> {
    let base = &setup.base;
    let arm = |label: &str, config: RankingConfig| Arm { label: label.into(), config, annotator: setup.annotator };
    match hypothesis {
        Hypothesis::H1 => [
            ("baseline_flat", PriorMode::None, 0.0),
            ("sampling_guide_flat", PriorMode::SamplingGuide, 0.0),
            ("rd_init_flat", PriorMode::RdInit, 0.0),
            ("full_prior_flat", PriorMode::Full, 0.0),
            ("warm_start_s100", PriorMode::WarmStart, WARM_START_SPREAD),
            ("warm_start_sampling_s100", PriorMode::WarmStartPlusGuide, WARM_START_SPREAD),
            ("warm_start_rd_s100", PriorMode::WarmStartPlusRd, WARM_START_SPREAD),
            ("full_s100", PriorMode::Full, WARM_START_SPREAD),
        ]
        .into_iter()
        .map(|(label, mode, spread)| {
            arm(label, RankingConfig { prior_mode: mode, warm_start_spread: spread, ..base.clone() })
        })
        .collect(),
        Hypothesis::H2 => [
            ("hybrid", Strategy::Hybrid),
            ("uncertainty", Strategy::Uncertainty),
            ("boundary", Strategy::Boundary),
            ("random", Strategy::Random),
        ]
        .into_iter()
        .map(|(label, strategy)| {
            let mut config = base.clone();
            config.acquisition.strategy = strategy;
            arm(label, config)
        })
        .collect(),
        Hypothesis::H3 => [
            ("glicko_adaptive", RatingEngine::GlickoAdaptive),
            ("glicko_fixed", RatingEngine::GlickoFixed),
            ("elo_k32", RatingEngine::Elo { k: 32.0 }),
            ("elo_k16", RatingEngine::Elo { k: 16.0 }),
        ]
        .into_iter()
        .map(|(label, engine)| arm(label, RankingConfig { engine, ..base.clone() }))
        .collect(),
        Hypothesis::H4 => [
            ("off", AutoPolicy::Off, base.acquisition.auto_threshold),
            ("threshold_0.85", AutoPolicy::Fixed, 0.85),
            ("threshold_0.90", AutoPolicy::Fixed, 0.90),
            ("adaptive", AutoPolicy::Adaptive, 0.85),
        ]
        .into_iter()
        .map(|(label, policy, threshold)| {
            let mut config = base.clone();
            config.acquisition.auto_policy = policy;
            config.acquisition.auto_threshold = threshold;
            arm(label, config)
        })
        .collect(),
        Hypothesis::H5 => NOISE_LEVELS
            .into_iter()
            .map(|p| Arm {
                label: format!("noise_{p:.1}"),
                config: base.clone(),
                annotator: AnnotatorModel::noisy(p),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub label: String,
    pub mean_tau: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_tau: f64,
    pub taus: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean_human_queries: f64,
    pub mean_auto_queries: f64,
}

impl ArmSummary {
    fn from_runs(label: String, runs: &[RunResult]) -> Self {
        let taus: Vec<f64> = runs.iter().map(|r| r.final_tau).collect();
        let (mean_tau, std_tau) = mean_std(&taus);
        let k = runs.len().max(1) as f64;
        Self {
            label,
            mean_tau,
            std_tau,
            seeds: runs.iter().map(|r| r.seed).collect(),
            mean_human_queries: runs.iter().map(|r| r.human_queries as f64).sum::<f64>() / k,
            mean_auto_queries: runs.iter().map(|r| r.auto_queries as f64).sum::<f64>() / k,
            taus,
        }
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub budget: u64,
    pub runs: usize,
    pub arms: Vec<ArmSummary>,
}

impl AblationTable {
    pub fn arm(&self, label: &str) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.label == label)
    }
}

fn prior_scores(gt: &GroundTruth, noise: f64, seed: u64) -> Result<BTreeMap<ItemId, f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - 1);
    Ok(mock_provider(&gt.latent, noise, &mut rng)?.into_iter().map(|(id, a)| (id, a.score)).collect())
}

/// Runs every arm of `hypothesis` on the same `setup.runs` ground truths.
pub fn run_ablation(hypothesis: Hypothesis, setup: &AblationSetup) -> Result<AblationTable> {
    setup.validate()?;
    let arms = arms(hypothesis, setup);
    let mut results: Vec<Vec<RunResult>> = vec![Vec::with_capacity(setup.runs); arms.len()];
    let needs_priors = arms.iter().any(|a| a.config.prior_mode.needs_priors());
    for r in 0..setup.runs {
        let seed = setup.base_seed + r as u64;
        let gt = gen_ground_truth(setup.n, setup.distribution, seed)?;
        let priors = if needs_priors { Some(prior_scores(&gt, setup.prior_noise, seed)?) } else { None };
        for (arm, out) in arms.iter().zip(results.iter_mut()) {
            let config = RankingConfig { seed, ..arm.config.clone() };
            let arm_priors = if config.prior_mode.needs_priors() { priors.as_ref() } else { None };
            out.push(run_simulation(&config, &gt, arm_priors, &arm.annotator, &Checkpoints::FinalOnly)?);
        }
    }
    let budget = results.first().and_then(|r| r.first()).map_or(0, |r| r.budget);
    Ok(AblationTable {
        hypothesis,
        n: setup.n,
        budget,
        runs: setup.runs,
        arms: arms.into_iter().zip(&results).map(|(a, runs)| ArmSummary::from_runs(a.label, runs)).collect(),
    })
}

/// Defaults for the prior-corruption sweep: the ablation base configuration
/// (every prior use, warm-start spread 100) with the deterministic oracle answering.
pub fn corruption_setup() -> AblationSetup {
    AblationSetup { annotator: AnnotatorModel::oracle(), ..AblationSetup::default() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRow {
    pub fraction: f64,
    /// Mean Kendall tau between the corrupted prior and the latent scores.
    pub mean_prior_tau: f64,
    pub mean_tau: f64,
    pub std_tau: f64,
    pub taus: Vec<f64>,
    /// `mean_tau` of the first row minus this row's.
    pub degradation: f64,
}

/// Final tau when a fraction of prior scores is inverted, one row per fraction.
pub fn corruption_sweep(setup: &AblationSetup, fractions: &[f64]) -> Result<Vec<CorruptionRow>> {
    setup.validate()?;
    if !setup.base.prior_mode.needs_priors() {
        return Err(SimError::InvalidInput("corruption sweep needs a prior mode that uses priors".into()));
    }
    if fractions.is_empty() {
        return Err(SimError::InvalidInput("no corruption fractions given".into()));
    }
    let mut taus = vec![Vec::with_capacity(setup.runs); fractions.len()];
    let mut prior_taus = vec![Vec::with_capacity(setup.runs); fractions.len()];
    for r in 0..setup.runs {
        let seed = setup.base_seed + r as u64;
        let gt = gen_ground_truth(setup.n, setup.distribution, seed)?;
        let clean = prior_scores(&gt, setup.prior_noise, seed)?;
        let latent: Vec<f64> = gt.latent.values().copied().collect();
        for (k, &p) in fractions.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX - 2);
            let prior = corrupt_prior(&clean, p, &mut rng)?;
            let scores: Vec<f64> = prior.values().copied().collect();
            prior_taus[k].push(kendall_tau(&latent, &scores)?);
            let config = RankingConfig { seed, ..setup.base.clone() };
            let run = run_simulation(&config, &gt, Some(&prior), &setup.annotator, &Checkpoints::FinalOnly)?;
            taus[k].push(run.final_tau);
        }
    }
    let mut rows: Vec<CorruptionRow> = fractions
        .iter()
        .zip(taus)
        .zip(prior_taus)
        .map(|((&fraction, taus), prior_taus)| {
            let (mean_tau, std_tau) = mean_std(&taus);
            CorruptionRow {
                fraction,
                mean_prior_tau: mean_std(&prior_taus).0,
                mean_tau,
                std_tau,
                taus,
                degradation: 0.0,
            }
        })
        .collect();
    let reference = rows[0].mean_tau;
    for row in &mut rows {
        row.degradation = reference - row.mean_tau;
    }
    Ok(rows)
}
