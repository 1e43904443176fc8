//! Glicko-scale rating engine with adaptive volatility, plus an Elo baseline.
//!
//! Ratings live on the classical Glicko scale (initial rating 1500, deviation
//! in rating points). A judgment is processed in three steps:
//!
//! 1. [`update_pair`] applies the closed-form single-game Glicko update to
//!    both participants and returns the prediction made *before* the update.
//! 2. [`apply_adaptive_volatility`] grows each participant's volatility by
//!    `alpha * max(0, |y - p| - theta)`.
//! 3. [`inflate_deviation`] feeds the (possibly grown) volatility back into
//!    the deviation, capped at the initial deviation.
//!
//! Everything here is a pure function over value types.

use std::f64::consts::{LN_10, PI};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Glicko scale constant `q = ln(10) / 400`.
pub const Q: f64 = LN_10 / 400.0;

/// Rating every item starts from under an uninformative initialisation.
pub const BASE_RATING: f64 = 1500.0;

/// Opaque item identifier. Ordering is the plain string order, which is the
/// stable order used for canonical pairs and deterministic tie-breaks.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Outcome of one comparison from the first item's perspective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Loss,
    Tie,
    Win,
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Loss => 0.0,
            Outcome::Tie => 0.5,
            Outcome::Win => 1.0,
        }
    }

    /// The same outcome seen from the other participant.
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Loss => Outcome::Win,
            Outcome::Tie => Outcome::Tie,
            Outcome::Win => Outcome::Loss,
        }
    }
}

impl TryFrom<f64> for Outcome {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        if v == 0.0 {
            Ok(Outcome::Loss)
        } else if v == 0.5 {
            Ok(Outcome::Tie)
        } else if v == 1.0 {
            Ok(Outcome::Win)
        } else {
            Err(Error::InvalidOutcome(v))
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Outcome::try_from(v).map_err(serde::de::Error::custom)
    }
}

/// Per-item rating state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemState {
    pub id: ItemId,
    pub rating: f64,
    pub deviation: f64,
    pub volatility: f64,
    pub comparisons: u32,
    /// Prior score in `[0, 1]`, present only when the prior guides sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
}

impl ItemState {
    /// Uninformative initial state: rating 1500, deviation `RD0`, volatility `sigma0`.
    pub fn fresh(id: impl Into<ItemId>, params: &RatingParams) -> Self {
        Self {
            id: id.into(),
            rating: BASE_RATING,
            deviation: params.rd_init,
            volatility: params.sigma_init,
            comparisons: 0,
            prior: None,
        }
    }
}

/// Hyperparameters of the rating engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingParams {
    pub rd_init: f64,
    pub sigma_init: f64,
    pub alpha: f64,
    pub theta: f64,
    /// Converts volatility into rating points when inflating the deviation.
    pub sigma_to_rd_scale: f64,
}

impl Default for RatingParams {
    fn default() -> Self {
        Self {
            rd_init: 350.0,
            sigma_init: 0.06,
            alpha: 0.5,
            theta: 0.05,
            sigma_to_rd_scale: 173.7178,
        }
    }
}

impl RatingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rd_init", self.rd_init),
            ("sigma_init", self.sigma_init),
            ("sigma_to_rd_scale", self.sigma_to_rd_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        // alpha = 0 is the fixed-volatility ablation arm.
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!("theta must lie in [0, 1), got {}", self.theta)));
        }
        Ok(())
    }
}

/// Glicko attenuation factor `g(RD) = (1 + 3 q^2 RD^2 / pi^2)^(-1/2)`.
pub fn g_factor(deviation: f64) -> f64 {
    1.0 / (1.0 + 3.0 * Q * Q * deviation * deviation / (PI * PI)).sqrt()
}

/// Probability that an item rated `rating` is preferred over an opponent
/// rated `opponent` with deviation `opponent_rd`.
pub fn expected_score(rating: f64, opponent: f64, opponent_rd: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-g_factor(opponent_rd) * (rating - opponent) / 400.0))
}

fn glicko_step(me: &ItemState, opp: &ItemState, score: f64) -> (f64, f64) {
    let g = g_factor(opp.deviation);
    let e = expected_score(me.rating, opp.rating, opp.deviation);
    // 1/d^2 written directly so a saturated expectation cannot divide by zero.
    let inv_d2 = Q * Q * g * g * e * (1.0 - e);
    let precision = 1.0 / (me.deviation * me.deviation) + inv_d2;
    let rating = me.rating + Q / precision * g * (score - e);
    (rating, (1.0 / precision).sqrt())
}

/// Single-game Glicko update of both participants.
///
/// Returns the updated pair and the prediction `p = Pr(i beats j)` taken
/// before either rating moved. Both comparison counts are incremented.
pub fn update_pair(
    i: &ItemState,
    j: &ItemState,
    outcome: Outcome,
) -> Result<(ItemState, ItemState, f64)> {
    if i.id == j.id {
        return Err(Error::SelfComparison(i.id.clone()));
    }
    let y = outcome.value();
    let p = expected_score(i.rating, j.rating, j.deviation);

    let (ri, rdi) = glicko_step(i, j, y);
    let (rj, rdj) = glicko_step(j, i, 1.0 - y);

    let mut ni = i.clone();
    ni.rating = ri;
    ni.deviation = rdi;
    ni.comparisons += 1;
    let mut nj = j.clone();
    nj.rating = rj;
    nj.deviation = rdj;
    nj.comparisons += 1;
    Ok((ni, nj, p))
}

/// Volatility growth from the prediction error: `sigma + alpha * max(0, |y - p| - theta)`.
///
/// The error magnitude is symmetric, so the same `(p, y)` serves both
/// participants of a judgment.
pub fn apply_adaptive_volatility(
    item: &ItemState,
    prediction: f64,
    outcome: Outcome,
    params: &RatingParams,
) -> ItemState {
    let err = (outcome.value() - prediction).abs();
    let mut next = item.clone();
    next.volatility += params.alpha * (err - params.theta).max(0.0);
    next
}

/// `RD' = min(sqrt(RD^2 + (sigma * scale)^2), RD0)`.
pub fn inflate_deviation(item: &ItemState, params: &RatingParams) -> ItemState {
    let spread = item.volatility * params.sigma_to_rd_scale;
    let mut next = item.clone();
    next.deviation = (item.deviation.hypot(spread)).min(params.rd_init);
    next
}

/// Elo expectation `1 / (1 + 10^(-(r_i - r_j) / 400))`.
pub fn elo_expected(rating: f64, opponent: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-(rating - opponent) / 400.0))
}

/// Elo update with step size `k`. Deviation and volatility are left alone.
pub fn elo_update(
    i: &ItemState,
    j: &ItemState,
    outcome: Outcome,
    k: f64,
) -> Result<(ItemState, ItemState)> {
    if i.id == j.id {
        return Err(Error::SelfComparison(i.id.clone()));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("Elo step size must be positive, got {k}")));
    }
    let delta = k * (outcome.value() - elo_expected(i.rating, j.rating));
    let mut ni = i.clone();
    ni.rating += delta;
    ni.comparisons += 1;
    let mut nj = j.clone();
    nj.rating -= delta;
    nj.comparisons += 1;
    Ok((ni, nj))
}
