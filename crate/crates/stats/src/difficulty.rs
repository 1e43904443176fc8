//! Per-pair annotator agreement and difficulty regimes.

use std::collections::BTreeMap;

use pairank_core::{ItemId, Judgment, Outcome, Source};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

pub const EASY_THRESHOLD: f64 = 0.8;
pub const HARD_THRESHOLD: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyBins {
    pub pairs: usize,
    pub easy: f64,
    pub middle: f64,
    pub hard: f64,
}

/// Fractions of pairs with agreement `>= 0.8` (easy), `<= 0.6` (hard), and in between.
pub fn difficulty_bins<I>(agreements: I) -> Result<DifficultyBins>
where
    I: IntoIterator<Item = f64>,
{
    let (mut easy, mut hard, mut total) = (0usize, 0usize, 0usize);
    for a in agreements {
        if !(0.0..=1.0).contains(&a) {
            return Err(StatsError::InvalidValue(format!("agreement {a} outside [0, 1]")));
        }
        total += 1;
        if a >= EASY_THRESHOLD {
            easy += 1;
        } else if a <= HARD_THRESHOLD {
            hard += 1;
        }
    }
    if total == 0 {
        return Err(StatsError::Empty);
    }
    let n = total as f64;
    let middle = total - easy - hard;
    Ok(DifficultyBins { pairs: total, easy: easy as f64 / n, middle: middle as f64 / n, hard: hard as f64 / n })
}

/// Unordered item pair, smaller id first.
pub type PairKey = (ItemId, ItemId);

/// Agreement for every pair judged by at least two sessions: the largest
/// fraction of those sessions that reported the same outcome.
///
/// Only each session's last non-automatic judgment of a pair counts.
pub fn pair_agreements<'a, I>(sessions: I) -> BTreeMap<PairKey, f64>
where
    I: IntoIterator<Item = &'a [Judgment]>,
{
    let mut votes: BTreeMap<PairKey, [usize; 3]> = BTreeMap::new();
    for events in sessions {
        let mut last: BTreeMap<PairKey, Outcome> = BTreeMap::new();
        for j in events.iter().filter(|j| j.source != Source::Auto) {
            let (key, outcome) = if j.first <= j.second {
                ((j.first.clone(), j.second.clone()), j.outcome)
            } else {
                ((j.second.clone(), j.first.clone()), j.outcome.flipped())
            };
            last.insert(key, outcome);
        }
        for (key, outcome) in last {
            let slot = match outcome {
                Outcome::Loss => 0,
                Outcome::Tie => 1,
                Outcome::Win => 2,
            };
            votes.entry(key).or_default()[slot] += 1;
        }
    }
    votes
        .into_iter()
        .filter_map(|(key, counts)| {
            let total: usize = counts.iter().sum();
            (total >= 2).then(|| (key, *counts.iter().max().unwrap() as f64 / total as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn judgment(first: &str, second: &str, outcome: Outcome, source: Source) -> Judgment {
        Judgment {
            step: 1,
            first: first.into(),
            second: second.into(),
            outcome,
            prediction: 0.5,
            source,
            presented_left: first.into(),
            query_id: None,
            timestamp: None,
        }
    }

    #[test]
    fn bin_examples() {
        let all_easy = difficulty_bins([1.0, 1.0, 1.0]).unwrap();
        assert_eq!((all_easy.easy, all_easy.middle, all_easy.hard), (1.0, 0.0, 0.0));
        let third = difficulty_bins([0.9, 0.7, 0.5]).unwrap();
        assert_eq!((third.easy, third.hard), (1.0 / 3.0, 1.0 / 3.0));
        assert_eq!(third.easy + third.middle + third.hard, 1.0);
        let edges = difficulty_bins([0.8, 0.6]).unwrap();
        assert_eq!((edges.easy, edges.middle, edges.hard), (0.5, 0.0, 0.5));
    }

    #[test]
    fn bin_errors() {
        assert!(matches!(difficulty_bins([1.2]), Err(StatsError::InvalidValue(_))));
        assert!(matches!(difficulty_bins([-0.1]), Err(StatsError::InvalidValue(_))));
        assert!(matches!(difficulty_bins([f64::NAN]), Err(StatsError::InvalidValue(_))));
        assert_eq!(difficulty_bins(std::iter::empty()).unwrap_err(), StatsError::Empty);
    }

    #[test]
    fn agreement_uses_canonical_orientation() {
        // "b beats a" in session 1 is the same vote as "a loses to b" in session 2.
        let s1 = vec![judgment("b", "a", Outcome::Win, Source::Human)];
        let s2 = vec![judgment("a", "b", Outcome::Loss, Source::Human)];
        let s3 = vec![judgment("a", "b", Outcome::Tie, Source::Human)];
        let agreements = pair_agreements([s1.as_slice(), s2.as_slice(), s3.as_slice()]);
        let key: PairKey = ("a".into(), "b".into());
        assert!((agreements[&key] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn agreement_needs_two_sessions_and_ignores_auto() {
        let s1 = vec![
            judgment("a", "b", Outcome::Win, Source::Human),
            judgment("a", "c", Outcome::Win, Source::Auto),
        ];
        let s2 = vec![
            judgment("a", "c", Outcome::Win, Source::Auto),
            judgment("a", "b", Outcome::Loss, Source::Human),
            judgment("a", "b", Outcome::Win, Source::Human),
        ];
        let agreements = pair_agreements([s1.as_slice(), s2.as_slice()]);
        assert_eq!(agreements.len(), 1);
        assert_eq!(agreements[&("a".into(), "b".into())], 1.0);
    }
}
