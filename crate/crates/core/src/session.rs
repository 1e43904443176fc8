//! Event-sourced active ranking session.
//!
//! A [`Session`] owns the item states and an append-only log of judgments.
//! Every mutation goes through [`Session::next_query`] (which may append
//! auto-labelled judgments) or [`Session::submit`]. The log plus the header
//! written by [`Session::header`] is enough to rebuild the session
//! bit-for-bit with [`Session::replay`].
//!
//! Randomness for each query is derived from `(seed, step, cancellations)`
//! rather than carried as mutable state, so a replayed session issues the
//! same next query as the live one would have.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcquisitionParams, Strategy};
use crate::error::{Error, Result};
use crate::rating::{
    apply_adaptive_volatility, elo_expected, elo_update, expected_score, inflate_deviation, update_pair,
    ItemId, ItemState, Outcome, RatingParams, BASE_RATING,
};

/// Log format version written into every header.
pub const LOG_VERSION: u32 = 1;

/// How prior scores enter a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    None,
    SamplingGuide,
    WarmStart,
    WarmStartPlusGuide,
    WarmStartPlusRd,
    RdInit,
    Full,
}

impl PriorMode {
    pub fn needs_priors(self) -> bool {
        self != PriorMode::None
    }

    pub fn guides_sampling(self) -> bool {
        matches!(self, PriorMode::SamplingGuide | PriorMode::WarmStartPlusGuide | PriorMode::Full)
    }

    pub fn warm_starts(self) -> bool {
        matches!(
            self,
            PriorMode::WarmStart | PriorMode::WarmStartPlusGuide | PriorMode::WarmStartPlusRd | PriorMode::Full
        )
    }

    pub fn shrinks_deviation(self) -> bool {
        matches!(self, PriorMode::RdInit | PriorMode::WarmStartPlusRd | PriorMode::Full)
    }
}

/// Rating update rule used by a session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatingEngine {
    /// Glicko update plus volatility growth from prediction error.
    GlickoAdaptive,
    /// Glicko update with volatility frozen at its initial value.
    GlickoFixed,
    Elo { k: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingConfig {
    /// Total comparisons; `None` means three per item.
    pub budget: Option<u64>,
    pub rating: RatingParams,
    pub acquisition: AcquisitionParams,
    pub engine: RatingEngine,
    pub prior_mode: PriorMode,
    pub warm_start_spread: f64,
    /// Fractional deviation reduction for a prior of 1 in deviation-init modes.
    pub rd_init_strength: f64,
    pub seed: u64,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            budget: None,
            rating: RatingParams::default(),
            acquisition: AcquisitionParams::default(),
            engine: RatingEngine::GlickoAdaptive,
            prior_mode: PriorMode::None,
            warm_start_spread: 0.0,
            rd_init_strength: 0.5,
            seed: 0,
        }
    }
}

impl RankingConfig {
    pub fn validate(&self) -> Result<()> {
        self.rating.validate()?;
        self.acquisition.validate()?;
        if self.budget == Some(0) {
            return Err(Error::InvalidConfig("budget must be at least 1".into()));
        }
        if !(self.warm_start_spread.is_finite() && self.warm_start_spread >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "warm_start_spread must be non-negative, got {}",
                self.warm_start_spread
            )));
        }
        if !(0.0..1.0).contains(&self.rd_init_strength) {
            return Err(Error::InvalidConfig(format!(
                "rd_init_strength must lie in [0, 1), got {}",
                self.rd_init_strength
            )));
        }
        if let RatingEngine::Elo { k } = self.engine {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::InvalidConfig(format!("Elo k must be positive, got {k}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Human,
    Auto,
    Simulated,
}

/// What the annotator picked, in presentation terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Left,
    Right,
    Tie,
}

/// One issued comparison awaiting an answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: u64,
    pub step: u64,
    pub first: ItemId,
    pub second: ItemId,
    pub left: ItemId,
    pub right: ItemId,
}

impl Query {
    /// Translates a presentation-side choice into an outcome for `first`.
    pub fn outcome_for(&self, choice: Choice) -> Outcome {
        let first_on_left = self.left == self.first;
        match (choice, first_on_left) {
            (Choice::Tie, _) => Outcome::Tie,
            (Choice::Left, true) | (Choice::Right, false) => Outcome::Win,
            (Choice::Left, false) | (Choice::Right, true) => Outcome::Loss,
        }
    }

    /// Inverse of [`Query::outcome_for`] for decisive outcomes and ties.
    pub fn choice_for(&self, outcome: Outcome) -> Choice {
        let first_on_left = self.left == self.first;
        match (outcome, first_on_left) {
            (Outcome::Tie, _) => Choice::Tie,
            (Outcome::Win, true) | (Outcome::Loss, false) => Choice::Left,
            (Outcome::Win, false) | (Outcome::Loss, true) => Choice::Right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NextQuery {
    Query(Query),
    Complete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    /// 1-based position in the log.
    pub step: u64,
    pub first: ItemId,
    pub second: ItemId,
    pub outcome: Outcome,
    /// `Pr(first beats second)` before the update.
    pub prediction: f64,
    pub source: Source,
    pub presented_left: ItemId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_id: Option<u64>,
    /// Unix milliseconds, when the caller supplied a clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// A skipped query. Not counted against the budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cancellation {
    pub step: u64,
    pub query_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub version: u32,
    /// Configuration with the budget resolved.
    pub config: RankingConfig,
    pub items: Vec<ItemState>,
}

/// One line of the JSONL session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEntry {
    Header(SessionHeader),
    Judgment(Judgment),
    Cancel(Cancellation),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub id: ItemId,
    pub rating: f64,
    pub rd: f64,
    pub comparisons: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: u64,
    pub budget: u64,
}

#[derive(Clone, Debug)]
pub struct Session {
    config: RankingConfig,
    budget: u64,
    initial: Vec<ItemState>,
    items: Vec<ItemState>,
    index: HashMap<ItemId, usize>,
    events: Vec<Judgment>,
    cancellations: Vec<Cancellation>,
    pending: Option<Query>,
    human_queries: u64,
    auto_queries: u64,
}

impl Session {
    /// Creates a session over `ids`. Priors are required unless the prior
    /// mode is `None`, and are ignored otherwise.
    pub fn create<I>(ids: I, priors: Option<&HashMap<ItemId, f64>>, config: RankingConfig) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<ItemId>,
    {
        config.validate()?;
        let mut ids: Vec<ItemId> = ids.into_iter().map(Into::into).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateItem(w[0].clone()));
        }
        if ids.len() < 2 {
            return Err(Error::InvalidInput(format!("a session needs at least 2 items, got {}", ids.len())));
        }

        let mode = config.prior_mode;
        let mut items = Vec::with_capacity(ids.len());
        for id in ids {
            let mut item = ItemState::fresh(id, &config.rating);
            if mode.needs_priors() {
                let s = *priors
                    .and_then(|p| p.get(&item.id))
                    .ok_or_else(|| Error::MissingPrior(item.id.clone()))?;
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidInput(format!("prior for {} outside [0, 1]: {s}", item.id)));
                }
                if mode.warm_starts() {
                    item.rating = BASE_RATING + config.warm_start_spread * (2.0 * s - 1.0);
                }
                if mode.shrinks_deviation() {
                    item.deviation = config.rating.rd_init * (1.0 - config.rd_init_strength * s);
                }
                if mode.guides_sampling() {
                    item.prior = Some(s);
                }
            }
            items.push(item);
        }

        let budget = config.budget.unwrap_or(3 * items.len() as u64);
        let config = RankingConfig { budget: Some(budget), ..config };
        Ok(Self::from_parts(config, items))
    }

    fn from_parts(config: RankingConfig, items: Vec<ItemState>) -> Self {
        let index = items.iter().enumerate().map(|(k, it)| (it.id.clone(), k)).collect();
        Self {
            budget: config.budget.unwrap_or(3 * items.len() as u64),
            config,
            initial: items.clone(),
            items,
            index,
            events: Vec::new(),
            cancellations: Vec::new(),
            pending: None,
            human_queries: 0,
            auto_queries: 0,
        }
    }

    pub fn config(&self) -> &RankingConfig {
        &self.config
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn items(&self) -> &[ItemState] {
        &self.items
    }

    pub fn item(&self, id: &ItemId) -> Option<&ItemState> {
        self.index.get(id).map(|&k| &self.items[k])
    }

    pub fn events(&self) -> &[Judgment] {
        &self.events
    }

    pub fn cancellations(&self) -> &[Cancellation] {
        &self.cancellations
    }

    pub fn pending(&self) -> Option<&Query> {
        self.pending.as_ref()
    }

    pub fn human_queries(&self) -> u64 {
        self.human_queries
    }

    pub fn auto_queries(&self) -> u64 {
        self.auto_queries
    }

    pub fn is_complete(&self) -> bool {
        self.events.len() as u64 >= self.budget
    }

    pub fn progress(&self) -> Progress {
        Progress { done: self.events.len() as u64, budget: self.budget }
    }

    fn next_step(&self) -> u64 {
        self.events.len() as u64 + 1
    }

    fn query_rng(&self, step: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream((step << 32) | self.cancellations.len() as u64);
        rng
    }

    fn prediction(&self, a: usize, b: usize) -> f64 {
        let (i, j) = (&self.items[a], &self.items[b]);
        match self.config.engine {
            RatingEngine::Elo { .. } => elo_expected(i.rating, j.rating),
            _ => expected_score(i.rating, j.rating, j.deviation),
        }
    }

    fn pick_pair(&self, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
        let params = &self.config.acquisition;
        if params.strategy == Strategy::Random {
            return acquisition::random_pair(&self.items, rng);
        }
        let pool = acquisition::candidate_indices(&self.items, params, rng)?;
        let mut best: Option<((usize, usize), f64)> = None;
        for (a, b) in pool {
            let score = acquisition::strategy_score(&self.items[a], &self.items[b], params);
            let better = match best {
                None => true,
                Some(((ba, bb), bs)) => {
                    score > bs
                        || (score == bs
                            && (&self.items[a].id, &self.items[b].id) < (&self.items[ba].id, &self.items[bb].id))
                }
            };
            if better {
                best = Some(((a, b), score));
            }
        }
        best.map(|(p, _)| p)
            .ok_or_else(|| Error::InvalidInput("empty candidate pool".into()))
    }

    /// Issues the next human-bound query, auto-labelling along the way when
    /// the policy allows. Returns [`NextQuery::Complete`] once the budget is
    /// spent.
    pub fn next_query(&mut self, now: Option<u64>) -> Result<NextQuery> {
        if self.pending.is_some() {
            return Err(Error::QueryPending);
        }
        loop {
            if self.is_complete() {
                return Ok(NextQuery::Complete);
            }
            let step = self.next_step();
            let mut rng = self.query_rng(step);
            let (a, b) = self.pick_pair(&mut rng)?;
            let p = self.prediction(a, b);

            if let Some(outcome) = acquisition::auto_label_decision(
                &self.items[a],
                &self.items[b],
                p,
                step - 1,
                self.budget,
                &self.config.acquisition,
            ) {
                let first = self.items[a].id.clone();
                self.apply(a, b, outcome, Source::Auto, first, None, now)?;
                continue;
            }

            let (first, second) = (self.items[a].id.clone(), self.items[b].id.clone());
            let (left, right) = if rng.random_bool(0.5) {
                (first.clone(), second.clone())
            } else {
                (second.clone(), first.clone())
            };
            let query = Query {
                id: self.human_queries + self.cancellations.len() as u64 + 1,
                step,
                first,
                second,
                left,
                right,
            };
            self.pending = Some(query.clone());
            return Ok(NextQuery::Query(query));
        }
    }

    /// Answers the pending query.
    pub fn submit(&mut self, query_id: u64, choice: Choice, source: Source, now: Option<u64>) -> Result<&Judgment> {
        if source == Source::Auto {
            return Err(Error::InvalidInput("auto judgments are produced by the session itself".into()));
        }
        let query = match &self.pending {
            Some(q) if q.id == query_id => q.clone(),
            _ => return Err(Error::StaleQuery(query_id)),
        };
        let (a, b) = (self.index[&query.first], self.index[&query.second]);
        let outcome = query.outcome_for(choice);
        self.apply(a, b, outcome, source, query.left.clone(), Some(query.id), now)?;
        self.pending = None;
        Ok(self.events.last().expect("judgment just appended"))
    }

    /// Drops the pending query without spending budget.
    pub fn cancel_pending(&mut self, now: Option<u64>) -> Result<()> {
        let query = self.pending.take().ok_or_else(|| Error::InvalidInput("no pending query".into()))?;
        self.cancellations.push(Cancellation { step: query.step, query_id: query.id, timestamp: now });
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn apply(
        &mut self,
        a: usize,
        b: usize,
        outcome: Outcome,
        source: Source,
        presented_left: ItemId,
        query_id: Option<u64>,
        timestamp: Option<u64>,
    ) -> Result<()> {
        let (i, j) = (&self.items[a], &self.items[b]);
        let params = &self.config.rating;
        let (ni, nj, p) = match self.config.engine {
            RatingEngine::Elo { k } => {
                let p = elo_expected(i.rating, j.rating);
                let (ni, nj) = elo_update(i, j, outcome, k)?;
                (ni, nj, p)
            }
            RatingEngine::GlickoAdaptive | RatingEngine::GlickoFixed => {
                let (mut ni, mut nj, p) = update_pair(i, j, outcome)?;
                if self.config.engine == RatingEngine::GlickoAdaptive {
                    ni = apply_adaptive_volatility(&ni, p, outcome, params);
                    nj = apply_adaptive_volatility(&nj, p, outcome, params);
                }
                (inflate_deviation(&ni, params), inflate_deviation(&nj, params), p)
            }
        };
        let judgment = Judgment {
            step: self.next_step(),
            first: ni.id.clone(),
            second: nj.id.clone(),
            outcome,
            prediction: p,
            source,
            presented_left,
            query_id,
            timestamp,
        };
        self.items[a] = ni;
        self.items[b] = nj;
        match source {
            Source::Auto => self.auto_queries += 1,
            Source::Human | Source::Simulated => self.human_queries += 1,
        }
        self.events.push(judgment);
        Ok(())
    }

    /// Items by descending rating; ties by ascending deviation, then id.
    pub fn current_ranking(&self) -> Vec<RankedItem> {
        let mut order: Vec<&ItemState> = self.items.iter().collect();
        order.sort_by(|x, y| {
            y.rating
                .total_cmp(&x.rating)
                .then_with(|| x.deviation.total_cmp(&y.deviation))
                .then_with(|| x.id.cmp(&y.id))
        });
        order
            .into_iter()
            .map(|it| RankedItem { id: it.id.clone(), rating: it.rating, rd: it.deviation, comparisons: it.comparisons })
            .collect()
    }

    pub fn header(&self) -> SessionHeader {
        SessionHeader { version: LOG_VERSION, config: self.config.clone(), items: self.initial.clone() }
    }

    /// Judgments and cancellations in append order (cancellations at step
    /// `s` precede the judgment recorded at step `s`).
    pub fn log_entries(&self) -> Vec<LogEntry> {
        let mut out = Vec::with_capacity(self.events.len() + self.cancellations.len());
        let mut cancels = self.cancellations.iter().peekable();
        for j in &self.events {
            while let Some(c) = cancels.next_if(|c| c.step <= j.step) {
                out.push(LogEntry::Cancel(c.clone()));
            }
            out.push(LogEntry::Judgment(j.clone()));
        }
        out.extend(cancels.cloned().map(LogEntry::Cancel));
        out
    }

    /// Rebuilds a session from its header and log entries.
    pub fn replay<I>(header: SessionHeader, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = LogEntry>,
    {
        if header.version != LOG_VERSION {
            return Err(Error::MalformedLog(format!("unsupported log version {}", header.version)));
        }
        header.config.validate()?;
        let mut sorted = header.items.clone();
        sorted.sort_by(|x, y| x.id.cmp(&y.id));
        if sorted != header.items {
            return Err(Error::MalformedLog("header items must be sorted by id".into()));
        }
        if let Some(w) = sorted.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateItem(w[0].id.clone()));
        }
        if sorted.len() < 2 {
            return Err(Error::MalformedLog("header needs at least 2 items".into()));
        }
        let mut session = Self::from_parts(header.config, header.items);

        for entry in entries {
            match entry {
                LogEntry::Header(_) => return Err(Error::MalformedLog("second header in log".into())),
                LogEntry::Cancel(c) => {
                    let expected = session.next_step();
                    if c.step != expected {
                        return Err(Error::OutOfOrder { expected, found: c.step });
                    }
                    session.cancellations.push(c);
                }
                LogEntry::Judgment(j) => session.replay_judgment(j)?,
            }
        }
        Ok(session)
    }

    fn replay_judgment(&mut self, j: Judgment) -> Result<()> {
        let expected = self.next_step();
        if j.step != expected {
            return Err(Error::OutOfOrder { expected, found: j.step });
        }
        if self.is_complete() {
            return Err(Error::BudgetExhausted);
        }
        let a = *self.index.get(&j.first).ok_or_else(|| Error::UnknownItem(j.first.clone()))?;
        let b = *self.index.get(&j.second).ok_or_else(|| Error::UnknownItem(j.second.clone()))?;
        if a == b {
            return Err(Error::SelfComparison(j.first.clone()));
        }
        if j.presented_left != j.first && j.presented_left != j.second {
            return Err(Error::MalformedLog(format!("step {}: presented item is not part of the pair", j.step)));
        }
        let p = self.prediction(a, b);
        if (p - j.prediction).abs() > 1e-9 {
            return Err(Error::MalformedLog(format!(
                "step {}: recorded prediction {} does not match replayed {}",
                j.step, j.prediction, p
            )));
        }
        self.apply(a, b, j.outcome, j.source, j.presented_left, j.query_id, j.timestamp)
    }

    /// Writes the header line followed by every log entry.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", serde_json::to_string(&LogEntry::Header(self.header()))?)?;
        for entry in self.log_entries() {
            writeln!(w, "{}", serde_json::to_string(&entry)?)?;
        }
        Ok(())
    }

    /// Parses a JSONL log and replays it. Blank lines are skipped.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut entries = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::MalformedLog(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LogEntry = serde_json::from_str(&line)
                .map_err(|e| Error::MalformedLog(format!("line {}: {e}", lineno + 1)))?;
            match (entry, header.is_none()) {
                (LogEntry::Header(h), true) => header = Some(h),
                (_, true) => return Err(Error::MalformedLog("log must start with a header".into())),
                (entry, false) => entries.push(entry),
            }
        }
        let header = header.ok_or_else(|| Error::MalformedLog("empty log".into()))?;
        Self::replay(header, entries)
    }
}

/// Ratings keyed by id, handy for comparing sessions.
pub fn rating_map(session: &Session) -> BTreeMap<ItemId, f64> {
    session.items().iter().map(|it| (it.id.clone(), it.rating)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::AutoPolicy;
    use approx::assert_abs_diff_eq;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|k| format!("img-{k:02}")).collect()
    }

    fn query(s: &mut Session) -> Query {
        match s.next_query(None).unwrap() {
            NextQuery::Query(q) => q,
            NextQuery::Complete => panic!("unexpected completion"),
        }
    }

    #[test]
    fn flat_initialisation() {
        let s = Session::create(ids(5), None, RankingConfig::default()).unwrap();
        assert!(s.items().iter().all(|it| it.rating == 1500.0 && it.deviation == 350.0 && it.volatility == 0.06));
        assert_eq!(s.budget(), 15);
    }

    #[test]
    fn warm_start_and_rd_init() {
        let priors: HashMap<ItemId, f64> = [("hi".into(), 1.0), ("lo".into(), 0.0)].into_iter().collect();
        let cfg = RankingConfig { prior_mode: PriorMode::WarmStart, warm_start_spread: 100.0, ..Default::default() };
        let s = Session::create(["hi", "lo"], Some(&priors), cfg).unwrap();
        assert_eq!(s.item(&"hi".into()).unwrap().rating, 1600.0);
        assert_eq!(s.item(&"lo".into()).unwrap().rating, 1400.0);
        assert!(s.items().iter().all(|it| it.prior.is_none()));

        let cfg = RankingConfig { prior_mode: PriorMode::RdInit, ..Default::default() };
        let s = Session::create(["hi", "lo"], Some(&priors), cfg).unwrap();
        assert_eq!(s.item(&"hi".into()).unwrap().deviation, 175.0);
        assert_eq!(s.item(&"lo".into()).unwrap().deviation, 350.0);
        assert_eq!(s.item(&"hi".into()).unwrap().rating, 1500.0);

        let cfg = RankingConfig { prior_mode: PriorMode::SamplingGuide, ..Default::default() };
        let s = Session::create(["hi", "lo"], Some(&priors), cfg).unwrap();
        assert_eq!(s.item(&"hi".into()).unwrap().prior, Some(1.0));
    }

    #[test]
    fn creation_errors() {
        assert_eq!(
            Session::create(["a", "b", "a"], None, RankingConfig::default()).unwrap_err(),
            Error::DuplicateItem("a".into())
        );
        let cfg = RankingConfig { prior_mode: PriorMode::SamplingGuide, ..Default::default() };
        let partial: HashMap<ItemId, f64> = [("a".into(), 0.5)].into_iter().collect();
        assert_eq!(Session::create(["a", "b"], Some(&partial), cfg).unwrap_err(), Error::MissingPrior("b".into()));
        assert!(Session::create(["a"], None, RankingConfig::default()).is_err());
    }

    #[test]
    fn two_items_single_pair_and_completion() {
        let cfg = RankingConfig { budget: Some(2), ..Default::default() };
        let mut s = Session::create(["a", "b"], None, cfg).unwrap();
        let q = query(&mut s);
        assert_eq!((q.first.as_str(), q.second.as_str()), ("a", "b"));
        assert!(q.left == q.first || q.left == q.second);
        assert_eq!(s.next_query(None), Err(Error::QueryPending));
        s.submit(q.id, Choice::Left, Source::Human, None).unwrap();
        let q = query(&mut s);
        s.submit(q.id, Choice::Tie, Source::Human, None).unwrap();
        assert_eq!(s.next_query(None).unwrap(), NextQuery::Complete);
        assert_eq!(s.events().len(), 2);
    }

    #[test]
    fn tie_on_fresh_pair() {
        let mut s = Session::create(["a", "b"], None, RankingConfig::default()).unwrap();
        let q = query(&mut s);
        let j = s.submit(q.id, Choice::Tie, Source::Human, None).unwrap().clone();
        assert_eq!(j.outcome, Outcome::Tie);
        assert_eq!(j.prediction, 0.5);
        for it in s.items() {
            assert_eq!(it.rating, 1500.0);
            assert_eq!(it.volatility, 0.06);
            assert_abs_diff_eq!(it.deviation, 290.4176, epsilon = 1e-3);
        }
    }

    #[test]
    fn side_decoding() {
        let q = Query { id: 1, step: 1, first: "a".into(), second: "b".into(), left: "b".into(), right: "a".into() };
        assert_eq!(q.outcome_for(Choice::Left), Outcome::Loss);
        assert_eq!(q.outcome_for(Choice::Right), Outcome::Win);
        assert_eq!(q.outcome_for(Choice::Tie), Outcome::Tie);
        for o in [Outcome::Win, Outcome::Loss, Outcome::Tie] {
            assert_eq!(q.outcome_for(q.choice_for(o)), o);
        }
    }

    #[test]
    fn surprise_raises_both_volatilities() {
        // Item "a" is warm-started high so a loss is a surprise.
        let priors: HashMap<ItemId, f64> = [("a".into(), 1.0), ("b".into(), 0.0)].into_iter().collect();
        let cfg = RankingConfig { prior_mode: PriorMode::WarmStart, warm_start_spread: 100.0, ..Default::default() };
        let mut s = Session::create(["a", "b"], Some(&priors), cfg).unwrap();
        let q = query(&mut s);
        let choice = q.choice_for(Outcome::Loss);
        let j = s.submit(q.id, choice, Source::Human, None).unwrap().clone();
        let err = j.prediction;
        let bump = 0.5 * (err - 0.05);
        for it in s.items() {
            assert_abs_diff_eq!(it.volatility, 0.06 + bump, epsilon = 1e-12);
        }
    }

    #[test]
    fn stale_and_double_submit() {
        let mut s = Session::create(ids(4), None, RankingConfig::default()).unwrap();
        let q = query(&mut s);
        assert_eq!(s.submit(q.id + 7, Choice::Left, Source::Human, None).unwrap_err(), Error::StaleQuery(q.id + 7));
        s.submit(q.id, Choice::Left, Source::Human, None).unwrap();
        assert_eq!(s.submit(q.id, Choice::Left, Source::Human, None).unwrap_err(), Error::StaleQuery(q.id));
        assert!(s.submit(q.id, Choice::Left, Source::Auto, None).is_err());
    }

    #[test]
    fn ranking_orders() {
        let mut s = Session::create(["c", "a", "b"], None, RankingConfig::default()).unwrap();
        let order: Vec<_> = s.current_ranking().into_iter().map(|r| r.id.to_string()).collect();
        assert_eq!(order, ["a", "b", "c"]);
        let q = query(&mut s);
        let choice = q.choice_for(Outcome::Loss);
        s.submit(q.id, choice, Source::Human, None).unwrap();
        let ranking = s.current_ranking();
        assert_eq!(ranking.len(), 3);
        assert_eq!(ranking[0].id, q.second);
        assert_eq!(ranking[2].id, q.first);
    }

    #[test]
    fn auto_labels_fire_for_dominant_item() {
        // One dominant, well-explored item; deviations below the gate.
        let cfg = RankingConfig {
            budget: Some(4),
            acquisition: AcquisitionParams { auto_policy: AutoPolicy::Fixed, ..Default::default() },
            ..Default::default()
        };
        let mut items = Vec::new();
        for (id, rating) in [("a", 1850.0), ("b", 1500.0), ("c", 1150.0)] {
            items.push(ItemState {
                id: id.into(),
                rating,
                deviation: 40.0,
                volatility: 0.0,
                comparisons: 0,
                prior: None,
            });
        }
        let header = SessionHeader { version: LOG_VERSION, config: cfg, items };
        let mut s = Session::replay(header, Vec::new()).unwrap();
        // Both adjacent gaps predict ~0.88 for the stronger item, above the 0.85 threshold.
        let mut humans = 0;
        while let NextQuery::Query(q) = s.next_query(None).unwrap() {
            humans += 1;
            let choice = q.choice_for(Outcome::Win);
            s.submit(q.id, choice, Source::Human, None).unwrap();
        }
        assert_eq!(s.events().len(), 4);
        assert_eq!(s.human_queries(), humans);
        assert_eq!(s.human_queries() + s.auto_queries(), 4);
        assert!(s.events()[..2].iter().all(|j| j.source == Source::Auto), "log: {:?}", s.events());
    }

    #[test]
    fn replay_rejects_gaps_and_unknown_ids() {
        let mut s = Session::create(ids(4), None, RankingConfig::default()).unwrap();
        let q = query(&mut s);
        s.submit(q.id, Choice::Right, Source::Human, None).unwrap();
        let mut entries = s.log_entries();
        if let LogEntry::Judgment(j) = &mut entries[0] {
            j.step = 2;
        }
        assert_eq!(Session::replay(s.header(), entries).unwrap_err(), Error::OutOfOrder { expected: 1, found: 2 });

        let mut entries = s.log_entries();
        if let LogEntry::Judgment(j) = &mut entries[0] {
            j.second = "ghost".into();
        }
        assert_eq!(Session::replay(s.header(), entries).unwrap_err(), Error::UnknownItem("ghost".into()));
    }

    #[test]
    fn empty_log_replays_to_fresh_session() {
        let s = Session::create(ids(6), None, RankingConfig::default()).unwrap();
        let r = Session::replay(s.header(), Vec::new()).unwrap();
        assert_eq!(r.items(), s.items());
    }

    #[test]
    fn cancellation_reissues_without_spending_budget() {
        let mut s = Session::create(ids(6), None, RankingConfig::default()).unwrap();
        let q1 = query(&mut s);
        s.cancel_pending(None).unwrap();
        let q2 = query(&mut s);
        assert_ne!(q1.id, q2.id);
        assert_eq!(q2.step, 1);
        s.submit(q2.id, Choice::Left, Source::Human, None).unwrap();
        let mut buf = Vec::new();
        s.write_jsonl(&mut buf).unwrap();
        let mut r = Session::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(r.items(), s.items());
        assert_eq!(r.cancellations().len(), 1);
        assert_eq!(query(&mut r), query(&mut s));
    }
}
