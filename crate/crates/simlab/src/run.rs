use std::collections::{BTreeMap, HashMap};

use pairank_core::{Choice, ItemId, NextQuery, Outcome, RankingConfig, Session, Source};
use pairank_stats::kendall_tau;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::truth::{simulate_annotator, AnnotatorModel, GroundTruth};

pub const DEFAULT_CURVE_POINTS: u64 = 50;

/// RNG stream for the simulated annotator, distinct from the session's own streams.
pub(crate) fn annotator_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng
}

/// When to record Kendall's tau during a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoints {
    /// Step 0, every `ceil(B / points)` steps, and the final step.
    Cadence { points: u64 },
    EveryStep,
    FinalOnly,
}

impl Default for Checkpoints {
    fn default() -> Self {
        Checkpoints::Cadence { points: DEFAULT_CURVE_POINTS }
    }
}

impl Checkpoints {
    pub fn steps(&self, budget: u64) -> Vec<u64> {
        let mut steps = match self {
            Checkpoints::Cadence { points } => {
                let stride = budget.div_ceil((*points).max(1)).max(1);
                (0..=budget).step_by(stride as usize).collect()
            }
            Checkpoints::EveryStep => (0..=budget).collect(),
            Checkpoints::FinalOnly => vec![],
        };
        if steps.last() != Some(&budget) {
            steps.push(budget);
        }
        steps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub budget: u64,
    pub curve: Vec<CurvePoint>,
    pub final_tau: f64,
    pub human_queries: u64,
    pub auto_queries: u64,
}

impl RunResult {
    /// First recorded step whose tau reaches `target`.
    pub fn steps_to(&self, target: f64) -> Option<u64> {
        if target <= 0.0 {
            // A non-positive target needs no comparisons by convention.
            return Some(0);
        }
        self.curve.iter().find(|p| p.tau >= target).map(|p| p.step)
    }
}

/// Kendall's tau between the session's current ranking and the ground truth.
pub fn ranking_tau(session: &Session, gt: &GroundTruth) -> Result<f64> {
    let ranking = session.current_ranking();
    let n = ranking.len();
    let mut truth = Vec::with_capacity(n);
    let mut placed = Vec::with_capacity(n);
    for (pos, item) in ranking.iter().enumerate() {
        truth.push(gt.value(&item.id)?);
        placed.push((n - pos) as f64);
    }
    Ok(kendall_tau(&truth, &placed)?)
}

fn check_items(gt: &GroundTruth, priors: Option<&BTreeMap<ItemId, f64>>) -> Result<()> {
    if let Some(p) = priors {
        if let Some(id) = p.keys().find(|id| !gt.latent.contains_key(*id)) {
            return Err(SimError::UnknownItem(id.clone()));
        }
    }
    Ok(())
}

/// Drives one session to completion, answering every human-bound query
/// with the simulated annotator. The annotator RNG derives from `config.seed`.
///
/// A budget of 0 evaluates the initial (tie-broken) ranking only.
pub fn run_simulation(
    config: &RankingConfig,
    gt: &GroundTruth,
    priors: Option<&BTreeMap<ItemId, f64>>,
    model: &AnnotatorModel,
    checkpoints: &Checkpoints,
) -> Result<RunResult> {
    model.validate()?;
    check_items(gt, priors)?;
    let priors: Option<HashMap<ItemId, f64>> = priors.map(|p| p.iter().map(|(k, v)| (k.clone(), *v)).collect());
    let zero_budget = config.budget == Some(0);
    let session_config = if zero_budget { RankingConfig { budget: Some(1), ..config.clone() } } else { config.clone() };
    let mut session = Session::create(gt.ids().cloned(), priors.as_ref(), session_config)?;
    let budget = if zero_budget { 0 } else { session.budget() };

    let steps = checkpoints.steps(budget);
    let mut curve = Vec::with_capacity(steps.len());
    let mut next = 0;
    let mut rng = annotator_rng(config.seed);
    let record = |session: &Session, curve: &mut Vec<CurvePoint>, next: &mut usize, done: u64| -> Result<()> {
        if *next < steps.len() && steps[*next] <= done {
            let tau = ranking_tau(session, gt)?;
            while *next < steps.len() && steps[*next] <= done {
                curve.push(CurvePoint { step: steps[*next], tau });
                *next += 1;
            }
        }
        Ok(())
    };

    record(&session, &mut curve, &mut next, 0)?;
    if budget > 0 {
        loop {
            match session.next_query(None)? {
                NextQuery::Complete => break,
                NextQuery::Query(q) => {
                    let choice = match simulate_annotator(gt, &q.left, &q.right, model, &mut rng)? {
                        Outcome::Win => Choice::Left,
                        Outcome::Loss => Choice::Right,
                        Outcome::Tie => Choice::Tie,
                    };
                    session.submit(q.id, choice, Source::Simulated, None)?;
                }
            }
            record(&session, &mut curve, &mut next, session.events().len() as u64)?;
        }
        record(&session, &mut curve, &mut next, budget)?;
    }

    let final_tau = curve.last().map(|p| p.tau).unwrap_or(0.0);
    Ok(RunResult {
        seed: config.seed,
        budget,
        curve,
        final_tau,
        human_queries: session.human_queries(),
        auto_queries: session.auto_queries(),
    })
}

/// Inverts (`s -> 1 - s`) a uniformly chosen `floor(p * N)` subset of scores.
pub fn corrupt_prior<R: Rng + ?Sized>(
    scores: &BTreeMap<ItemId, f64>,
    fraction: f64,
    rng: &mut R,
) -> Result<BTreeMap<ItemId, f64>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(SimError::InvalidInput(format!("corruption fraction must lie in [0, 1], got {fraction}")));
    }
    let n = scores.len();
    let m = ((fraction * n as f64).floor() as usize).min(n);
    let mut out = scores.clone();
    let ids: Vec<&ItemId> = scores.keys().collect();
    for k in index::sample(rng, n, m) {
        let s = out.get_mut(ids[k]).expect("id from the same map");
        *s = 1.0 - *s;
    }
    Ok(out)
}

/// One configuration in a steps-to-target comparison.
#[derive(Clone, Debug)]
pub struct Variant {
    pub label: String,
    pub config: RankingConfig,
    pub priors: Option<BTreeMap<ItemId, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub label: String,
    pub final_tau: f64,
    /// `None` when the target was not reached within the budget.
    pub steps: Option<u64>,
}

/// For each variant, the first step at which tau reaches `target`.
pub fn compare_budget_to_target(
    variants: &[Variant],
    gt: &GroundTruth,
    model: &AnnotatorModel,
    target: f64,
) -> Result<Vec<TargetRow>> {
    if !(0.0..=1.0).contains(&target) {
        return Err(SimError::InvalidInput(format!("target must lie in [0, 1], got {target}")));
    }
    variants
        .iter()
        .map(|v| {
            let run = run_simulation(&v.config, gt, v.priors.as_ref(), model, &Checkpoints::EveryStep)?;
            Ok(TargetRow { label: v.label.clone(), final_tau: run.final_tau, steps: run.steps_to(target) })
        })
        .collect()
}
