//! Deterministic stand-in for a real model: synthesizes sample sets whose
//! derived score tracks a given latent quality.
//!
//! Every distinct score reachable with `k` samples is enumerated once (from
//! visibility multisets, a shared object core and per-sample extra objects)
//! and sorted. Items are ranked by `z(latent) + noise * N(0, 1)` and spread
//! evenly over that table, so with zero noise the score order equals the
//! latent order whenever there are at least as many levels as items.

use std::collections::BTreeMap;

use pairank_core::ItemId;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{PriorError, Result};
use crate::sample::{Visibility, VlmSample, MAX_OBJECTS};
use crate::score::{prior_score, PriorAssessment, PriorWeights};

pub const DEFAULT_MOCK_SAMPLES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct MockOptions {
    pub samples: usize,
    pub weights: PriorWeights,
}

impl Default for MockOptions {
    fn default() -> Self {
        Self { samples: DEFAULT_MOCK_SAMPLES, weights: PriorWeights::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Shape {
    visibility: Vec<Visibility>,
    core: usize,
    extra: Vec<usize>,
}

impl Shape {
    fn samples(&self) -> Vec<VlmSample> {
        self.visibility
            .iter()
            .zip(&self.extra)
            .enumerate()
            .map(|(k, (&visibility, &extra))| {
                let mut objects: Vec<String> = (0..self.core).map(|o| format!("object{o}")).collect();
                objects.extend((0..extra).map(|o| format!("variant{k}x{o}")));
                VlmSample {
                    caption: format!("synthetic sample {k}"),
                    objects,
                    visibility,
                    confidence: 0.1 + 0.8 * visibility.value(),
                }
            })
            .collect()
    }
}

/// Non-decreasing sequences of length `len` over `0..=max`.
fn multisets(len: usize, max: usize) -> Vec<Vec<usize>> {
    fn go(len: usize, lo: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in lo..=max {
            cur.push(v);
            go(len, v, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(len, 0, max, &mut Vec::with_capacity(len), &mut out);
    out
}

/// Sorted table of distinct reachable scores, each with one sample shape.
fn level_table(k: usize, weights: &PriorWeights) -> Result<Vec<(f64, Shape)>> {
    let mut table = Vec::new();
    for vis in multisets(k, Visibility::ALL.len() - 1) {
        let visibility: Vec<Visibility> = vis.iter().map(|&v| Visibility::ALL[v]).collect();
        for core in 0..=MAX_OBJECTS {
            for extra in multisets(k, MAX_OBJECTS - core) {
                let shape = Shape { visibility: visibility.clone(), core, extra };
                let s = prior_score(&shape.samples(), weights)?;
                table.push((s, shape));
            }
        }
    }
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    table.dedup_by(|later, kept| (later.0 - kept.0).abs() < 1e-12);
    Ok(table)
}

/// Number of distinct scores the mock can emit with `k` samples.
pub fn level_count(k: usize, weights: &PriorWeights) -> Result<usize> {
    Ok(level_table(k, weights)?.len())
}

pub fn mock_provider<R: Rng + ?Sized>(
    latents: &BTreeMap<ItemId, f64>,
    noise: f64,
    rng: &mut R,
) -> Result<BTreeMap<ItemId, PriorAssessment>> {
    mock_provider_with(latents, noise, &MockOptions::default(), rng)
}

pub fn mock_provider_with<R: Rng + ?Sized>(
    latents: &BTreeMap<ItemId, f64>,
    noise: f64,
    options: &MockOptions,
    rng: &mut R,
) -> Result<BTreeMap<ItemId, PriorAssessment>> {
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(PriorError::InvalidInput(format!("noise must be finite and non-negative, got {noise}")));
    }
    if options.samples < 2 {
        return Err(PriorError::InvalidInput(format!("need at least 2 samples, got {}", options.samples)));
    }
    if latents.values().any(|v| !v.is_finite()) {
        return Err(PriorError::InvalidInput("latent scores must be finite".into()));
    }
    if latents.is_empty() {
        return Ok(BTreeMap::new());
    }

    let n = latents.len() as f64;
    let mean = latents.values().sum::<f64>() / n;
    let sd = (latents.values().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut keyed: Vec<(f64, &ItemId)> = latents
        .iter()
        .map(|(id, &v)| {
            let z = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
            let eps: f64 = rng.sample(StandardNormal);
            (z + noise * eps, id)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let table = level_table(options.samples, &options.weights)?;
    let top = (table.len() - 1) as f64;
    let last = (keyed.len().max(2) - 1) as f64;
    let mut out = BTreeMap::new();
    for (rank, (_, id)) in keyed.into_iter().enumerate() {
        let level = (rank as f64 * top / last).round() as usize;
        let shape = &table[level.min(table.len() - 1)].1;
        let assessment = PriorAssessment::from_samples(id.clone(), shape.samples(), &options.weights)?;
        out.insert(id.clone(), assessment);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(3, 2).len(), 10);
        assert_eq!(multisets(2, 8).len(), 45);
    }

    #[test]
    fn table_spans_unit_interval() {
        let table = level_table(3, &PriorWeights::default()).unwrap();
        assert_eq!(table[0].0, 0.0);
        assert!((table.last().unwrap().0 - 1.0).abs() < 1e-12);
        assert!(table.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(table.len() > 2000);
    }

    #[test]
    fn noiseless_order_matches_latents() {
        let latents: BTreeMap<ItemId, f64> =
            (0..50).map(|k| (ItemId::from(format!("i{k:02}")), ((k * 37) % 50) as f64)).collect();
        let out = mock_provider(&latents, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut by_latent: Vec<(&f64, f64)> = latents.iter().map(|(id, v)| (v, out[id].score)).collect();
        by_latent.sort_by(|a, b| a.0.total_cmp(b.0));
        assert!(by_latent.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn bad_noise_rejected() {
        let latents = BTreeMap::from([(ItemId::from("a"), 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(mock_provider(&latents, -1.0, &mut rng).is_err());
        assert!(mock_provider(&latents, f64::INFINITY, &mut rng).is_err());
    }
}
