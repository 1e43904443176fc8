use std::collections::BTreeMap;

use pairank_core::{ItemId, Outcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentDistribution {
    #[default]
    Normal,
    /// Uniform on `[-sqrt(3), sqrt(3)]`, i.e. unit variance like `Normal`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub latent: BTreeMap<ItemId, f64>,
    /// Best first; equal latents ordered by id.
    pub induced_ranking: Vec<ItemId>,
}

impl GroundTruth {
    pub fn from_latent(latent: BTreeMap<ItemId, f64>) -> Result<Self> {
        if latent.len() < 2 {
            return Err(SimError::InvalidInput(format!("need at least 2 items, got {}", latent.len())));
        }
        if latent.values().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidInput("latent scores must be finite".into()));
        }
        let mut induced_ranking: Vec<ItemId> = latent.keys().cloned().collect();
        induced_ranking.sort_by(|a, b| latent[b].total_cmp(&latent[a]).then_with(|| a.cmp(b)));
        Ok(Self { latent, induced_ranking })
    }

    pub fn len(&self) -> usize {
        self.latent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latent.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ItemId> {
        self.latent.keys()
    }

    /// Whether `i` outranks `j` in the induced (strict) order.
    pub fn prefers(&self, i: &ItemId, j: &ItemId) -> Result<bool> {
        let (a, b) = (self.value(i)?, self.value(j)?);
        Ok(a > b || (a == b && i < j))
    }

    pub fn value(&self, id: &ItemId) -> Result<f64> {
        self.latent.get(id).copied().ok_or_else(|| SimError::UnknownItem(id.clone()))
    }
}

pub fn item_ids(n: usize) -> Vec<ItemId> {
    let width = n.saturating_sub(1).to_string().len().max(4);
    (0..n).map(|k| ItemId::new(format!("item{k:0width$}"))).collect()
}

/// Latent qualities drawn i.i.d.; deterministic in `seed`.
pub fn gen_ground_truth(n: usize, distribution: LatentDistribution, seed: u64) -> Result<GroundTruth> {
    if n < 2 {
        return Err(SimError::InvalidInput(format!("need at least 2 items, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_width = 3f64.sqrt();
    let latent = item_ids(n)
        .into_iter()
        .map(|id| {
            let v = match distribution {
                LatentDistribution::Normal => rng.sample(StandardNormal),
                LatentDistribution::Uniform => rng.random_range(-half_width..half_width),
            };
            (id, v)
        })
        .collect();
    GroundTruth::from_latent(latent)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatorKind {
    /// Always prefers the item with the higher latent score.
    #[default]
    Oracle,
    /// Bradley-Terry: `P(i wins) = 1 / (1 + exp(-scale * (latent_i - latent_j)))`.
    BradleyTerry,
    /// With probability `noise_p` a fair coin, otherwise the oracle's answer.
    NoisyRandom,
}

/// `ln(10) / 2`: a one-standard-deviation latent gap wins ~76% of the time.
pub const DEFAULT_BT_SCALE: f64 = std::f64::consts::LN_10 / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotatorModel {
    pub kind: AnnotatorKind,
    pub noise_p: f64,
    pub scale: f64,
}

impl Default for AnnotatorModel {
    fn default() -> Self {
        Self { kind: AnnotatorKind::Oracle, noise_p: 0.0, scale: DEFAULT_BT_SCALE }
    }
}

impl AnnotatorModel {
    pub fn oracle() -> Self {
        Self::default()
    }

    pub fn bradley_terry() -> Self {
        Self { kind: AnnotatorKind::BradleyTerry, ..Self::default() }
    }

    pub fn noisy(noise_p: f64) -> Self {
        Self { kind: AnnotatorKind::NoisyRandom, noise_p, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(SimError::InvalidInput(format!("noise_p must lie in [0, 1], got {}", self.noise_p)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(SimError::InvalidInput(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Simulated answer for "is `i` better than `j`?".
pub fn simulate_annotator<R: Rng + ?Sized>(
    gt: &GroundTruth,
    i: &ItemId,
    j: &ItemId,
    model: &AnnotatorModel,
    rng: &mut R,
) -> Result<Outcome> {
    if i == j {
        return Err(SimError::InvalidInput(format!("cannot compare {i} with itself")));
    }
    model.validate()?;
    let won = match model.kind {
        AnnotatorKind::Oracle => gt.prefers(i, j)?,
        AnnotatorKind::BradleyTerry => {
            let d = gt.value(i)? - gt.value(j)?;
            rng.random::<f64>() < 1.0 / (1.0 + (-model.scale * d).exp())
        }
        AnnotatorKind::NoisyRandom => {
            if rng.random::<f64>() < model.noise_p {
                rng.random::<bool>()
            } else {
                gt.prefers(i, j)?
            }
        }
    };
    Ok(if won { Outcome::Win } else { Outcome::Loss })
}
