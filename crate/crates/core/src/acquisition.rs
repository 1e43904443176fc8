//! Pair scoring, candidate pool generation and auto-labelling.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rating::{ItemId, ItemState, Outcome};

/// Which terms of the acquisition function are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Uncertainty x closeness x novelty.
    Hybrid,
    /// Deviation sum only.
    Uncertainty,
    /// Closeness x novelty, without the deviation factor.
    Boundary,
    /// Uniformly random pair; no pool, no scoring.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoPolicy {
    Off,
    Fixed,
    /// Threshold ramps linearly by +0.10 across the budget.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionParams {
    pub kappa: f64,
    pub lambda: f64,
    pub closeness_exponent: f64,
    pub neighbor_k: usize,
    pub random_pairs: usize,
    /// `None` leaves the pool unbounded.
    pub pool_cap: Option<usize>,
    pub auto_threshold: f64,
    pub auto_policy: AutoPolicy,
    pub auto_rd_gate: f64,
    pub strategy: Strategy,
}

impl Default for AcquisitionParams {
    fn default() -> Self {
        Self {
            kappa: 100.0,
            lambda: 0.8,
            closeness_exponent: 1.5,
            neighbor_k: 5,
            random_pairs: 50,
            pool_cap: Some(200),
            auto_threshold: 0.85,
            auto_policy: AutoPolicy::Off,
            auto_rd_gate: 100.0,
            strategy: Strategy::Hybrid,
        }
    }
}

impl AcquisitionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidConfig(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(self.auto_threshold > 0.5 && self.auto_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "auto_threshold must lie in (0.5, 1], got {}",
                self.auto_threshold
            )));
        }
        if self.neighbor_k == 0 {
            return Err(Error::InvalidConfig("neighbor_k must be at least 1".into()));
        }
        if self.pool_cap == Some(0) {
            return Err(Error::InvalidConfig("pool_cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// A scored, canonicalised pair (`first < second` in id order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub first: ItemId,
    pub second: ItemId,
    pub score: f64,
}

fn closeness(i: &ItemState, j: &ItemState, params: &AcquisitionParams) -> f64 {
    (1.0 + (i.rating - j.rating).abs() / params.kappa).powf(-params.closeness_exponent)
}

fn novelty(i: &ItemState, j: &ItemState, params: &AcquisitionParams) -> f64 {
    1.0 / (1.0 + params.lambda * f64::from(i.comparisons + j.comparisons))
}

/// `A(i, j) = (RD_i + RD_j) * (1 + |r_i - r_j| / kappa)^(-1.5) * (1 + lambda (c_i + c_j))^(-1)`.
pub fn acquisition_score(i: &ItemState, j: &ItemState, params: &AcquisitionParams) -> f64 {
    (i.deviation + j.deviation) * closeness(i, j, params) * novelty(i, j, params)
}

/// Score under the configured strategy. Random scores every pair as 1.
pub fn strategy_score(i: &ItemState, j: &ItemState, params: &AcquisitionParams) -> f64 {
    match params.strategy {
        Strategy::Hybrid => acquisition_score(i, j, params),
        Strategy::Uncertainty => i.deviation + j.deviation,
        Strategy::Boundary => closeness(i, j, params) * novelty(i, j, params),
        Strategy::Random => 1.0,
    }
}

fn canonical(items: &[ItemState], a: usize, b: usize) -> (usize, usize) {
    if items[a].id <= items[b].id {
        (a, b)
    } else {
        (b, a)
    }
}

/// Decodes a linear index over the strict upper triangle of an `n x n` grid.
fn decode_pair(k: usize, n: usize) -> (usize, usize) {
    // Row a starts at a(2n - a - 1)/2; invert the quadratic, then correct rounding.
    let nf = n as f64;
    let kf = k as f64;
    let mut a = ((2.0 * nf - 1.0 - ((2.0 * nf - 1.0).powi(2) - 8.0 * kf).max(0.0).sqrt()) / 2.0).floor() as usize;
    let start = |a: usize| a * (2 * n - a - 1) / 2;
    while a > 0 && start(a) > k {
        a -= 1;
    }
    while start(a + 1) <= k {
        a += 1;
    }
    let b = a + 1 + (k - start(a));
    (a, b)
}

/// Adjacency pairs over the given rank order: every position paired with the
/// next `width` positions.
fn adjacency_pairs(order: &[usize], width: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    order
        .iter()
        .enumerate()
        .flat_map(move |(pos, &a)| order[pos + 1..order.len().min(pos + 1 + width)].iter().map(move |&b| (a, b)))
}

/// Index pairs of the hybrid candidate pool.
///
/// Adjacency is taken over prior-score order when every item carries a prior,
/// otherwise over current ratings. Uniform random pairs are added, the union
/// deduplicated and subsampled down to `pool_cap`.
pub fn candidate_indices<R: Rng + ?Sized>(
    items: &[ItemState],
    params: &AcquisitionParams,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = items.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("candidate pool needs at least 2 items, got {n}")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    if items.iter().all(|it| it.prior.is_some()) {
        order.sort_by(|&a, &b| {
            let (pa, pb) = (items[a].prior.unwrap_or(0.0), items[b].prior.unwrap_or(0.0));
            pa.total_cmp(&pb).then_with(|| items[a].id.cmp(&items[b].id))
        });
    } else {
        order.sort_by(|&a, &b| {
            items[a]
                .rating
                .total_cmp(&items[b].rating)
                .then_with(|| items[a].id.cmp(&items[b].id))
        });
    }

    let total = n * (n - 1) / 2;
    let mut seen = HashSet::with_capacity(n * params.neighbor_k + params.random_pairs);
    let mut pool = Vec::with_capacity(n * params.neighbor_k + params.random_pairs);
    for (a, b) in adjacency_pairs(&order, params.neighbor_k) {
        let p = canonical(items, a, b);
        if seen.insert(p) {
            pool.push(p);
        }
    }
    let draws = params.random_pairs.min(total);
    for k in index::sample(rng, total, draws) {
        let (a, b) = decode_pair(k, n);
        let p = canonical(items, a, b);
        if seen.insert(p) {
            pool.push(p);
        }
    }

    if let Some(cap) = params.pool_cap {
        if pool.len() > cap {
            let (chosen, _) = pool.partial_shuffle(rng, cap);
            let chosen = chosen.to_vec();
            pool = chosen;
        }
    }
    Ok(pool)
}

/// Builds the scored candidate pool.
pub fn sample_candidate_pairs<R: Rng + ?Sized>(
    items: &[ItemState],
    params: &AcquisitionParams,
    rng: &mut R,
) -> Result<Vec<CandidatePair>> {
    Ok(candidate_indices(items, params, rng)?
        .into_iter()
        .map(|(a, b)| CandidatePair {
            first: items[a].id.clone(),
            second: items[b].id.clone(),
            score: strategy_score(&items[a], &items[b], params),
        })
        .collect())
}

/// Highest-scoring pair; ties go to the lexicographically smallest `(first, second)`.
pub fn select_pair(pool: &[CandidatePair]) -> Result<&CandidatePair> {
    pool.iter()
        .reduce(|best, c| {
            if c.score > best.score
                || (c.score == best.score && (&c.first, &c.second) < (&best.first, &best.second))
            {
                c
            } else {
                best
            }
        })
        .ok_or_else(|| Error::InvalidInput("cannot select from an empty candidate pool".into()))
}

/// A uniformly random canonical pair of indices.
pub fn random_pair<R: Rng + ?Sized>(items: &[ItemState], rng: &mut R) -> Result<(usize, usize)> {
    let n = items.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 items, got {n}")));
    }
    let (a, b) = decode_pair(rng.random_range(0..n * (n - 1) / 2), n);
    Ok(canonical(items, a, b))
}

/// Confidence threshold in force at step `step` of a `budget`-step session.
pub fn auto_threshold_at(step: u64, budget: u64, params: &AcquisitionParams) -> Option<f64> {
    match params.auto_policy {
        AutoPolicy::Off => None,
        AutoPolicy::Fixed => Some(params.auto_threshold),
        AutoPolicy::Adaptive => {
            let frac = if budget == 0 { 1.0 } else { step as f64 / budget as f64 };
            Some((params.auto_threshold + 0.10 * frac).min(1.0))
        }
    }
}

/// Returns the model's own verdict when the comparison may be auto-labelled.
///
/// Eligible only when `max(p, 1 - p)` reaches the active threshold and both
/// deviations are at or below the gate.
pub fn auto_label_decision(
    i: &ItemState,
    j: &ItemState,
    prediction: f64,
    step: u64,
    budget: u64,
    params: &AcquisitionParams,
) -> Option<Outcome> {
    let threshold = auto_threshold_at(step, budget, params)?;
    let confidence = prediction.max(1.0 - prediction);
    let explored = i.deviation <= params.auto_rd_gate && j.deviation <= params.auto_rd_gate;
    if confidence >= threshold && explored {
        Some(if prediction > 0.5 { Outcome::Win } else { Outcome::Loss })
    } else {
        None
    }
}
