use std::collections::BTreeSet;

use pairank_core::ItemId;
use serde::{Deserialize, Serialize};

use crate::error::{PriorError, Result};
use crate::sample::{VlmSample, MAX_OBJECTS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorWeights {
    pub visibility: f64,
    pub consistency: f64,
    pub objects: f64,
    /// Divisor for `ln(1 + mean object count)`.
    pub object_norm: f64,
}

impl Default for PriorWeights {
    fn default() -> Self {
        Self { visibility: 0.4, consistency: 0.4, objects: 0.2, object_norm: (1.0 + MAX_OBJECTS as f64).ln() }
    }
}

impl PriorWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.visibility, self.consistency, self.objects];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(PriorError::InvalidInput(format!("weights must be non-negative and sum to 1, got {w:?}")));
        }
        if !(self.object_norm.is_finite() && self.object_norm > 0.0) {
            return Err(PriorError::InvalidInput(format!("object_norm must be positive, got {}", self.object_norm)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorAssessment {
    pub item: ItemId,
    pub samples: Vec<VlmSample>,
    pub consistency: f64,
    pub mean_visibility: f64,
    pub mean_objects: f64,
    pub score: f64,
}

impl PriorAssessment {
    pub fn from_samples(item: ItemId, samples: Vec<VlmSample>, weights: &PriorWeights) -> Result<Self> {
        weights.validate()?;
        let consistency = semantic_consistency(&samples)?;
        let mean_visibility = mean_visibility(&samples);
        let mean_objects = mean_objects(&samples);
        let score = combine(mean_visibility, consistency, mean_objects, weights);
        Ok(Self { item, samples, consistency, mean_visibility, mean_objects, score })
    }
}

fn check_k(samples: &[VlmSample]) -> Result<()> {
    if samples.len() < 2 {
        return Err(PriorError::InvalidInput(format!(
            "consistency needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    Ok(())
}

/// Jaccard index; two empty sets score 0.
pub fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Mean Jaccard index of the object sets over all ordered pairs of distinct samples.
pub fn semantic_consistency(samples: &[VlmSample]) -> Result<f64> {
    check_k(samples)?;
    let sets: Vec<BTreeSet<&str>> =
        samples.iter().map(|s| s.objects.iter().map(String::as_str).collect()).collect();
    let k = sets.len();
    let mut sum = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            sum += jaccard(&sets[a], &sets[b]);
        }
    }
    // Jaccard is symmetric, so each unordered pair stands for two ordered ones.
    Ok(2.0 * sum / (k * (k - 1)) as f64)
}

fn mean_visibility(samples: &[VlmSample]) -> f64 {
    samples.iter().map(|s| s.visibility.value()).sum::<f64>() / samples.len() as f64
}

fn mean_objects(samples: &[VlmSample]) -> f64 {
    samples.iter().map(|s| s.objects.len() as f64).sum::<f64>() / samples.len() as f64
}

fn combine(visibility: f64, consistency: f64, objects: f64, w: &PriorWeights) -> f64 {
    let object_term = ((1.0 + objects).ln() / w.object_norm).clamp(0.0, 1.0);
    (w.visibility * visibility + w.consistency * consistency + w.objects * object_term).clamp(0.0, 1.0)
}

/// `w1 * mean visibility + w2 * consistency + w3 * ln(1 + mean objects) / norm`.
pub fn prior_score(samples: &[VlmSample], weights: &PriorWeights) -> Result<f64> {
    weights.validate()?;
    let consistency = semantic_consistency(samples)?;
    Ok(combine(mean_visibility(samples), consistency, mean_objects(samples), weights))
}

/// Scores from the component means directly.
pub fn prior_score_from_parts(visibility: f64, consistency: f64, mean_objects: f64, weights: &PriorWeights) -> f64 {
    combine(visibility, consistency, mean_objects, weights)
}
