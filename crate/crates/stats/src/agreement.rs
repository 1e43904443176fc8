//! Pairwise agreement between independent annotation sessions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::{kendall_tau, pearson_r, spearman_rho};
use crate::error::{Result, StatsError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Kendall,
    Spearman,
    Pearson,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Kendall, Metric::Spearman, Metric::Pearson];

    pub fn compute(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Metric::Kendall => kendall_tau(a, b),
            Metric::Spearman => spearman_rho(a, b),
            Metric::Pearson => pearson_r(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Kendall => "kendall",
            Metric::Spearman => "spearman",
            Metric::Pearson => "pearson",
        })
    }
}

impl FromStr for Metric {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kendall" | "tau" => Ok(Metric::Kendall),
            "spearman" | "rho" => Ok(Metric::Spearman),
            "pearson" | "r" => Ok(Metric::Pearson),
            other => Err(StatsError::InvalidValue(format!("unknown metric {other:?}"))),
        }
    }
}

/// One session's outcome as a score per item (higher is better).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRanking {
    pub session_id: String,
    pub annotator_id: String,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct ExportRow {
    id: String,
    rating: f64,
}

impl SessionRanking {
    /// From a best-first ordered item list; scores are `n - position`.
    pub fn from_order(session_id: impl Into<String>, annotator_id: impl Into<String>, order: &[String]) -> Self {
        let n = order.len() as f64;
        Self {
            session_id: session_id.into(),
            annotator_id: annotator_id.into(),
            scores: order.iter().enumerate().map(|(k, id)| (id.clone(), n - k as f64)).collect(),
        }
    }

    /// From a ranking export: a JSON list of `{id, rating, ...}` rows.
    pub fn from_export_json(session_id: impl Into<String>, annotator_id: impl Into<String>, json: &str) -> Result<Self> {
        let rows: Vec<ExportRow> = serde_json::from_str(json).map_err(|e| StatsError::Malformed(e.to_string()))?;
        let mut scores = BTreeMap::new();
        for row in rows {
            if scores.insert(row.id.clone(), row.rating).is_some() {
                return Err(StatsError::Malformed(format!("duplicate item {}", row.id)));
            }
        }
        Ok(Self { session_id: session_id.into(), annotator_id: annotator_id.into(), scores })
    }

    /// Scores aligned to the shared (sorted) item order.
    pub fn vector(&self) -> Vec<f64> {
        self.scores.values().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub first: String,
    pub second: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub metric: Metric,
    pub sessions: Vec<String>,
    /// One entry per unordered session pair, in `(i, j)`, `i < j` order.
    pub pairs: Vec<PairCorrelation>,
}

impl AgreementMatrix {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn mean(&self) -> f64 {
        self.pairs.iter().map(|p| p.value).sum::<f64>() / self.pairs.len() as f64
    }
}

/// Correlation for every unordered pair of sessions.
pub fn agreement_matrix(sessions: &[SessionRanking], metric: Metric) -> Result<AgreementMatrix> {
    if sessions.len() < 2 {
        return Err(StatsError::TooShort { len: sessions.len(), min: 2 });
    }
    let reference = &sessions[0];
    for s in &sessions[1..] {
        if !s.scores.keys().eq(reference.scores.keys()) {
            return Err(StatsError::ItemSetMismatch(reference.session_id.clone(), s.session_id.clone()));
        }
    }
    let vectors: Vec<Vec<f64>> = sessions.iter().map(SessionRanking::vector).collect();
    let mut pairs = Vec::with_capacity(sessions.len() * (sessions.len() - 1) / 2);
    for i in 0..sessions.len() {
        for j in i + 1..sessions.len() {
            pairs.push(PairCorrelation {
                first: sessions[i].session_id.clone(),
                second: sessions[j].session_id.clone(),
                value: metric.compute(&vectors[i], &vectors[j])?,
            });
        }
    }
    Ok(AgreementMatrix { metric, sessions: sessions.iter().map(|s| s.session_id.clone()).collect(), pairs })
}
