//! Greedy schedule construction.
//!
//! The core loop repeatedly picks the candidate slice (or slice extension)
//! maximizing `reward^α / Δt`, where Δt is the additionally claimed time and
//! the reward of a candidate sums `β^k` over the problems its time window
//! reaches (`k` = number of already-emitted slices covering the problem,
//! with 0^0 = 1). Defaults (α=1, β=0, w=1, b=0) give the base algorithm:
//! newly covered problems per unit of extra time.
//!
//! Three extension modes are supported:
//! - [`ExtensionMode::Full`]: any strategy's slice may be extended at any
//!   time, charged only the difference; the result is a [`PreSchedule`].
//! - [`ExtensionMode::Conservative`]: only the most recently emitted slice
//!   may be extended; other picks open fresh slices charged in full.
//! - [`ExtensionMode::None`]: no extension; every pick is a fresh run.
//!
//! Slack (w, b) inflates emitted limits to `round(t·w) + b` (half-up).
//! Selection always uses raw times and raw rewards; the budget, the journal's
//! `new_limit`/`delta`/`cumulative` fields, and the returned schedules all
//! use the inflated values, which coincide with the raw ones at w=1, b=0.
//!
//! Every run also produces a [`Journal`]; an unbounded run's journal can be
//! cut to any budget later with [`replay_journal`] without reconstructing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    estimate_success_probability, EvaluationMatrix, Mi, ModelError, PreSchedule, Schedule, Slice,
    Status, StrategyId,
};

#[derive(Debug, Error)]
pub enum GreedyError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("probabilistic construction requires a finite budget")]
    UnboundedBudget,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Total time budget for construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Bounded(Mi),
    Unbounded,
}

impl Budget {
    fn admits(self, total: Mi) -> bool {
        match self {
            Budget::Bounded(t) => total <= t,
            Budget::Unbounded => true,
        }
    }
}

/// Which slices may grow after being emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionMode {
    Full,
    Conservative,
    None,
}

/// Slack (w, b), temporal reward adjustment (α), diminishing rewards (β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationParams {
    /// Multiplicative slack w ≥ 1 applied to emitted limits.
    pub slack_mul: f64,
    /// Additive slack b in Mi applied to emitted limits.
    pub slack_add: Mi,
    /// Exponent α ≥ 0 on the reward in the selection criterion.
    pub alpha: f64,
    /// Geometric decay β ∈ [0,1] for re-covered problems.
    pub beta: f64,
}

impl Default for RegularizationParams {
    fn default() -> Self {
        RegularizationParams { slack_mul: 1.0, slack_add: 0, alpha: 1.0, beta: 0.0 }
    }
}

impl RegularizationParams {
    fn validate(&self) -> Result<(), GreedyError> {
        let err = |m: String| Err(GreedyError::InvalidParams(m));
        if !self.slack_mul.is_finite() || self.slack_mul < 1.0 {
            return err(format!("slack_mul must be ≥ 1, got {}", self.slack_mul));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return err(format!("alpha must be ≥ 0, got {}", self.alpha));
        }
        if !self.beta.is_finite() || !(0.0..=1.0).contains(&self.beta) {
            return err(format!("beta must lie in [0,1], got {}", self.beta));
        }
        Ok(())
    }

    /// Emitted limit for raw limit `t`: round(t·w) + b, half-up; 0 stays 0
    /// (an absent slice is not inflated).
    pub fn extend_limit(&self, t: Mi) -> Mi {
        if t == 0 {
            0
        } else {
            (t as f64 * self.slack_mul + 0.5).floor() as Mi + self.slack_add
        }
    }

    fn beta_pow(&self, k: u32) -> f64 {
        if k == 0 {
            1.0 // 0^0 = 1: a first cover always earns full reward
        } else {
            self.beta.powi(k as i32)
        }
    }
}

/// Selection criterion `reward^α / Δt`.
pub fn criterion_value(reward: f64, alpha: f64, delta: Mi) -> f64 {
    reward.powf(alpha) / delta as f64
}

/// One construction step: which strategy grew to which limit, what the step
/// cost, the running total, the problems covered for the first time, and the
/// selection criterion value. Limits and times are emitted (post-slack) Mi;
/// `criterion` is the raw selection ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub strategy: StrategyId,
    pub new_limit: Mi,
    pub delta: Mi,
    pub cumulative: Mi,
    pub newly_covered: Vec<crate::model::ProblemId>,
    pub criterion: f64,
}

/// Iteration-by-iteration log of a greedy run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Journal {
    pub entries: Vec<JournalEntry>,
}

impl Journal {
    pub fn to_json_string(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(self).map_err(ModelError::from)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(ModelError::from)
    }

    /// Total problems covered across all entries.
    pub fn covered(&self) -> usize {
        self.entries.iter().map(|e| e.newly_covered.len()).sum()
    }
}

/// Result of [`construct_greedy`]: a pre-schedule in FULL mode, an ordered
/// slice list otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constructed {
    Pre(PreSchedule),
    Sliced(Schedule),
}

impl Constructed {
    pub fn total(&self) -> Mi {
        match self {
            Constructed::Pre(p) => p.total(),
            Constructed::Sliced(s) => s.total(),
        }
    }

    /// Covered problems under the deterministic view.
    pub fn simulate(
        &self,
        matrix: &EvaluationMatrix,
    ) -> Result<std::collections::BTreeSet<crate::model::ProblemId>, ModelError> {
        match self {
            Constructed::Pre(p) => crate::model::simulate_pre_schedule(matrix, p),
            Constructed::Sliced(s) => crate::model::simulate_schedule(matrix, s),
        }
    }

    /// Collapses to a per-strategy maximum-limit pre-schedule
    /// (coverage-equivalent in every mode).
    pub fn to_pre_schedule(&self) -> PreSchedule {
        match self {
            Constructed::Pre(p) => p.clone(),
            Constructed::Sliced(s) => {
                let mut pre = PreSchedule::new();
                for slice in &s.slices {
                    if slice.limit > pre.get(&slice.strategy) {
                        pre.set(slice.strategy.clone(), slice.limit);
                    }
                }
                pre
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    /// Grow an existing slice; charged the difference.
    Extend,
    /// Open a new slice; charged in full.
    Fresh,
}

struct Candidate {
    criterion: f64,
    delta_raw: Mi,
    strategy: usize,
    t_raw: Mi,
    kind: Kind,
    window_cur: Mi,
    delta_ext: Mi,
    new_ext: Mi,
    newly: Vec<usize>,
}

impl Candidate {
    /// Binding tie order: criterion max, then smallest Δt, then smallest
    /// strategy id, then smallest t (extensions before fresh repeats).
    fn beats(&self, other: &Candidate) -> bool {
        if self.criterion != other.criterion {
            return self.criterion > other.criterion;
        }
        (self.delta_raw, self.strategy, self.t_raw, self.kind)
            < (other.delta_raw, other.strategy, other.t_raw, other.kind)
    }
}

/// Distinct finite deterministic times of one strategy, ascending, each with
/// the problems solved at exactly that time.
fn time_grid(matrix: &EvaluationMatrix, s: usize) -> Vec<(Mi, Vec<usize>)> {
    let mut by_time: BTreeMap<Mi, Vec<usize>> = BTreeMap::new();
    for (p, t) in matrix.strategy_det_times(s) {
        by_time.entry(t).or_default().push(p);
    }
    by_time.into_iter().collect()
}

struct GreedyState<'a> {
    params: &'a RegularizationParams,
    budget: Budget,
    grids: Vec<Vec<(Mi, Vec<usize>)>>,
    cover_count: Vec<u32>,
    /// Per strategy: highest raw limit so far (the only extendable point in
    /// FULL mode; the fresh-slice eligibility threshold otherwise).
    raw_limit: Vec<Mi>,
    ext_total: Mi,
}

impl<'a> GreedyState<'a> {
    fn new(matrix: &EvaluationMatrix, params: &'a RegularizationParams, budget: Budget) -> Self {
        GreedyState {
            params,
            budget,
            grids: (0..matrix.n_strategies()).map(|s| time_grid(matrix, s)).collect(),
            cover_count: vec![0; matrix.n_problems()],
            raw_limit: vec![0; matrix.n_strategies()],
            ext_total: 0,
        }
    }

    /// Scans one strategy's candidate times, accumulating the reward window
    /// and offering each eligible (strategy, t) to `best`.
    ///
    /// `window_cur` is the exclusive window lower bound (0 means a fresh run
    /// covering everything up to t); `min_t` the eligibility threshold
    /// (candidates need t > min_t); `base_ext` what the emitted time grows
    /// from (previous extended limit, or 0 for a fresh slice).
    fn scan(
        &self,
        best: &mut Option<Candidate>,
        strategy: usize,
        kind: Kind,
        window_cur: Mi,
        min_t: Mi,
        base_ext: Mi,
    ) {
        let mut reward = 0.0;
        let mut newly: Vec<usize> = Vec::new();
        for (t, probs) in &self.grids[strategy] {
            if *t <= window_cur && window_cur > 0 {
                continue;
            }
            for &p in probs {
                reward += self.params.beta_pow(self.cover_count[p]);
                if self.cover_count[p] == 0 {
                    newly.push(p);
                }
            }
            if *t <= min_t || reward <= 0.0 {
                continue;
            }
            let new_ext = self.params.extend_limit(*t);
            let delta_ext = new_ext - base_ext;
            if !self.budget.admits(self.ext_total + delta_ext) {
                continue;
            }
            let delta_raw = *t - window_cur;
            let cand = Candidate {
                criterion: criterion_value(reward, self.params.alpha, delta_raw),
                delta_raw,
                strategy,
                t_raw: *t,
                kind,
                window_cur,
                delta_ext,
                new_ext,
                newly: newly.clone(),
            };
            if best.as_ref().map_or(true, |b| cand.beats(b)) {
                *best = Some(cand);
            }
        }
    }

    /// Bumps cover counts over the window the chosen candidate claims.
    fn apply_cover(&mut self, c: &Candidate) {
        for (t, probs) in &self.grids[c.strategy] {
            if *t > c.t_raw {
                break;
            }
            if *t <= c.window_cur && c.window_cur > 0 {
                continue;
            }
            for &p in probs {
                self.cover_count[p] += 1;
            }
        }
    }
}

/// Greedy schedule construction with slice extension and regularizations.
///
/// Candidate times are exactly the finite deterministic-view values above the
/// strategy's current limit. Construction stops when no candidate both earns
/// a positive reward and fits the remaining budget.
pub fn construct_greedy(
    matrix: &EvaluationMatrix,
    budget: Budget,
    params: &RegularizationParams,
    mode: ExtensionMode,
) -> Result<(Constructed, Journal), GreedyError> {
    params.validate()?;
    let mut state = GreedyState::new(matrix, params, budget);
    // per strategy in FULL mode: current extended limit
    let mut ext_limit: Vec<Mi> = vec![0; matrix.n_strategies()];
    // other modes: emitted slices as (strategy, raw, extended)
    let mut slices: Vec<(usize, Mi, Mi)> = Vec::new();
    let mut entries: Vec<JournalEntry> = Vec::new();

    loop {
        let mut best: Option<Candidate> = None;
        match mode {
            ExtensionMode::Full => {
                for s in 0..matrix.n_strategies() {
                    let cur = state.raw_limit[s];
                    state.scan(&mut best, s, Kind::Extend, cur, cur, ext_limit[s]);
                }
            }
            ExtensionMode::Conservative | ExtensionMode::None => {
                if mode == ExtensionMode::Conservative {
                    if let Some(&(s, raw, ext)) = slices.last() {
                        state.scan(&mut best, s, Kind::Extend, raw, raw, ext);
                    }
                }
                for s in 0..matrix.n_strategies() {
                    state.scan(&mut best, s, Kind::Fresh, 0, state.raw_limit[s], 0);
                }
            }
        }
        let Some(c) = best.take() else { break };
        state.apply_cover(&c);
        state.raw_limit[c.strategy] = c.t_raw;
        state.ext_total += c.delta_ext;
        match c.kind {
            Kind::Extend if mode == ExtensionMode::Full => ext_limit[c.strategy] = c.new_ext,
            Kind::Extend => {
                let last = slices.last_mut().expect("extension requires a slice");
                *last = (c.strategy, c.t_raw, c.new_ext);
            }
            Kind::Fresh => slices.push((c.strategy, c.t_raw, c.new_ext)),
        }
        let mut newly: Vec<_> =
            c.newly.iter().map(|&p| matrix.problem_id(p).clone()).collect();
        newly.sort();
        entries.push(JournalEntry {
            strategy: matrix.strategy_id(c.strategy).clone(),
            new_limit: c.new_ext,
            delta: c.delta_ext,
            cumulative: state.ext_total,
            newly_covered: newly,
            criterion: c.criterion,
        });
    }

    let journal = Journal { entries };
    let constructed = match mode {
        ExtensionMode::Full => {
            let pre = (0..matrix.n_strategies())
                .filter(|&s| ext_limit[s] > 0)
                .map(|s| (matrix.strategy_id(s).clone(), ext_limit[s]))
                .collect();
            Constructed::Pre(pre)
        }
        _ => {
            let sched = Schedule::new(
                slices
                    .into_iter()
                    .map(|(s, _, ext)| Slice { strategy: matrix.strategy_id(s).clone(), limit: ext })
                    .collect(),
            )?;
            Constructed::Sliced(sched)
        }
    };
    Ok((constructed, journal))
}

/// Limits after the longest journal prefix whose cumulative time fits the
/// budget (per strategy, the last limit it reached within the prefix).
pub fn replay_journal(journal: &Journal, budget: Mi) -> PreSchedule {
    let mut pre = PreSchedule::new();
    for e in &journal.entries {
        if e.cumulative > budget {
            break;
        }
        pre.set(e.strategy.clone(), e.new_limit);
    }
    pre
}

/// Slices of a FULL-mode result in the order the strategies first entered the
/// schedule (the default execution order when no explicit ordering is asked
/// for).
pub fn schedule_in_first_extension_order(pre: &PreSchedule, journal: &Journal) -> Schedule {
    let mut seen: Vec<&StrategyId> = Vec::new();
    for e in &journal.entries {
        if pre.get(&e.strategy) > 0 && !seen.contains(&&e.strategy) {
            seen.push(&e.strategy);
        }
    }
    let mut slices: Vec<Slice> =
        seen.iter().map(|&s| Slice { strategy: s.clone(), limit: pre.get(s) }).collect();
    for (s, t) in pre.iter() {
        if !seen.contains(&s) {
            slices.push(Slice { strategy: s.clone(), limit: t });
        }
    }
    Schedule::new(slices).expect("pre-schedule limits are positive")
}

/// Probabilistic greedy for nondeterministic evaluation data.
///
/// Candidate slices are (ξ, T+1) for every observed (SOL, T) of strategy ξ.
/// A candidate's reward sums, over problems, P_SOL(T|E) weighted by
/// `(1 − P_solved) + β^k · P_solved` where P_solved is the estimated
/// probability the schedule built so far already solves the problem and `k`
/// counts its prior positive-probability slices; the criterion is
/// `reward^α / T`. With β=0 this is the expected number of new solves per
/// time unit; when every cell holds a single SOL observation it reduces to
/// the deterministic no-extension greedy on times shifted by +1.
///
/// Slices repeat with geometrically vanishing scores, so termination is by
/// the `epsilon` threshold (or budget exhaustion); an unbounded budget is
/// rejected.
pub fn construct_probabilistic(
    matrix: &EvaluationMatrix,
    budget: Budget,
    params: &RegularizationParams,
    epsilon: f64,
) -> Result<(Schedule, Journal), GreedyError> {
    params.validate()?;
    if !(epsilon > 0.0) {
        return Err(GreedyError::InvalidParams(format!("epsilon must be > 0, got {epsilon}")));
    }
    let Budget::Bounded(budget) = budget else {
        return Err(GreedyError::UnboundedBudget);
    };

    // static candidate grid: per strategy, ascending T with the per-problem
    // success probabilities at that T (only positive entries kept)
    let mut cands: Vec<(usize, Mi, Vec<(usize, f64)>)> = Vec::new();
    for s in 0..matrix.n_strategies() {
        let mut times: Vec<Mi> = Vec::new();
        for p in 0..matrix.n_problems() {
            if let Some(obs) = matrix.observations(s, p) {
                times.extend(
                    obs.iter().filter(|o| o.status == Status::Sol).map(|o| o.time + 1),
                );
            }
        }
        times.sort_unstable();
        times.dedup();
        for t in times {
            let psols: Vec<(usize, f64)> = (0..matrix.n_problems())
                .filter_map(|p| {
                    let obs = matrix.observations(s, p)?;
                    let v = estimate_success_probability(obs, t).value();
                    (v > 0.0).then_some((p, v))
                })
                .collect();
            cands.push((s, t, psols));
        }
    }

    let mut miss: Vec<f64> = vec![1.0; matrix.n_problems()]; // Π (1 − P_SOL)
    let mut kcount: Vec<u32> = vec![0; matrix.n_problems()];
    let mut ext_total: Mi = 0;
    let mut slices: Vec<Slice> = Vec::new();
    let mut entries: Vec<JournalEntry> = Vec::new();

    loop {
        let mut best: Option<(f64, Mi, usize, usize)> = None; // (score, t, strategy, cand idx)
        for (i, (s, t, psols)) in cands.iter().enumerate() {
            let ext = params.extend_limit(*t);
            if ext_total + ext > budget {
                continue;
            }
            let reward: f64 = psols
                .iter()
                .map(|&(p, v)| v * (miss[p] + params.beta_pow(kcount[p]) * (1.0 - miss[p])))
                .sum();
            let score = criterion_value(reward, params.alpha, *t);
            if score < epsilon {
                continue;
            }
            let better = match best {
                None => true,
                Some((bs, bt, bstrat, _)) => {
                    if score != bs {
                        score > bs
                    } else {
                        (*t, *s) < (bt, bstrat)
                    }
                }
            };
            if better {
                best = Some((score, *t, *s, i));
            }
        }
        let Some((score, t, s, i)) = best else { break };
        let ext = params.extend_limit(t);
        ext_total += ext;
        let mut newly: Vec<_> = Vec::new();
        for &(p, v) in &cands[i].2 {
            if kcount[p] == 0 {
                newly.push(matrix.problem_id(p).clone());
            }
            kcount[p] += 1;
            miss[p] *= 1.0 - v;
        }
        newly.sort();
        slices.push(Slice { strategy: matrix.strategy_id(s).clone(), limit: ext });
        entries.push(JournalEntry {
            strategy: matrix.strategy_id(s).clone(),
            new_limit: ext,
            delta: ext,
            cumulative: ext_total,
            newly_covered: newly,
            criterion: score,
        });
    }

    Ok((Schedule::new(slices)?, Journal { entries }))
}

/// Orders a pre-schedule for execution: repeatedly emit the slice maximizing
/// (problems newly solvable within its limit) / limit, ties by strategy id.
pub fn order_slices(pre: &PreSchedule, matrix: &EvaluationMatrix) -> Result<Schedule, ModelError> {
    struct Entry {
        sid: StrategyId,
        limit: Mi,
        solves: Vec<usize>,
    }
    let mut remaining: Vec<Entry> = pre
        .iter()
        .map(|(sid, limit)| {
            let s = matrix
                .strategy_index(sid)
                .ok_or_else(|| ModelError::UnknownStrategy(sid.as_str().into()))?;
            let solves = matrix
                .strategy_det_times(s)
                .into_iter()
                .filter_map(|(p, t)| (t <= limit).then_some(p))
                .collect();
            Ok(Entry { sid: sid.clone(), limit, solves })
        })
        .collect::<Result<_, ModelError>>()?;

    let mut covered = vec![false; matrix.n_problems()];
    let mut slices = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let mut pick = 0;
        let mut pick_gain = u64::MAX;
        for (i, e) in remaining.iter().enumerate() {
            let gain = e.solves.iter().filter(|&&p| !covered[p]).count() as u64;
            if i == 0 {
                pick_gain = gain;
                continue;
            }
            // gain/limit > best so far, compared exactly (entries stay in
            // ascending strategy-id order, so strict improvement keeps ties
            // on the smaller id)
            if gain * remaining[pick].limit > pick_gain * e.limit {
                pick = i;
                pick_gain = gain;
            }
        }
        let e = remaining.remove(pick);
        for &p in &e.solves {
            covered[p] = true;
        }
        slices.push(Slice { strategy: e.sid, limit: e.limit });
    }
    Schedule::new(slices)
}

/// Extends every slice limit by `pad` Mi, preserving order.
pub fn pad_slices(schedule: &Schedule, pad: Mi) -> Schedule {
    Schedule {
        slices: schedule
            .slices
            .iter()
            .map(|s| Slice { strategy: s.strategy.clone(), limit: s.limit + pad })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{simulate_pre_schedule, EvaluationMatrix, PreSchedule};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full(
        matrix: &EvaluationMatrix,
        budget: Budget,
        params: &RegularizationParams,
    ) -> (PreSchedule, Journal) {
        let (c, j) = construct_greedy(matrix, budget, params, ExtensionMode::Full).unwrap();
        match c {
            Constructed::Pre(p) => (p, j),
            Constructed::Sliced(_) => panic!("FULL mode must yield a pre-schedule"),
        }
    }

    fn pre_of(limits: &[(&str, Mi)]) -> PreSchedule {
        limits.iter().map(|&(s, t)| (s.into(), t)).collect()
    }

    #[test]
    fn toy1_budget_10_base() {
        let (pre, journal) = full(&toy1(), Budget::Bounded(10), &Default::default());
        assert_eq!(pre, pre_of(&[("A", 5), ("B", 3)]));
        assert_eq!(pre.total(), 8);
        let got: Vec<(&str, Mi, Mi, Mi, Vec<&str>)> = journal
            .entries
            .iter()
            .map(|e| {
                (
                    e.strategy.as_str(),
                    e.new_limit,
                    e.delta,
                    e.cumulative,
                    e.newly_covered.iter().map(|p| p.as_str()).collect(),
                )
            })
            .collect();
        assert_eq!(
            got,
            vec![
                ("A", 2, 2, 2, vec!["p1"]),
                ("A", 5, 3, 5, vec!["p2"]),
                ("B", 3, 3, 8, vec!["p3"]),
            ]
        );
        let crits: Vec<f64> = journal.entries.iter().map(|e| e.criterion).collect();
        assert_eq!(crits, vec![0.5, 1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn toy1_budget_4_stops_when_nothing_fits() {
        let (pre, _) = full(&toy1(), Budget::Bounded(4), &Default::default());
        assert_eq!(pre, pre_of(&[("A", 2)]));
    }

    #[test]
    fn toy2_budget_6_delta_tiebreak_leaves_optimum_behind() {
        let m = toy2();
        let (pre, _) = full(&m, Budget::Bounded(6), &Default::default());
        assert_eq!(pre, pre_of(&[("A", 2)]));
        assert_eq!(simulate_pre_schedule(&m, &pre).unwrap().len(), 1);
    }

    #[test]
    fn alpha_prefers_bulk_coverage() {
        let params = RegularizationParams { alpha: 1.5, ..Default::default() };
        let (pre, journal) = full(&toy1(), Budget::Bounded(10), &params);
        let first = &journal.entries[0];
        assert_eq!((first.strategy.as_str(), first.new_limit), ("A", 5));
        assert!((first.criterion - 2f64.powf(1.5) / 5.0).abs() < 1e-12);
        assert_eq!(pre, pre_of(&[("A", 5), ("B", 3)]));
    }

    #[test]
    fn unbounded_run_covers_everything_and_stops() {
        let (pre, journal) = full(&toy1(), Budget::Unbounded, &Default::default());
        assert_eq!(pre, pre_of(&[("A", 5), ("B", 3)]));
        assert_eq!(journal.entries.len(), 3);
    }

    #[test]
    fn replay_examples() {
        let (_, journal) = full(&toy1(), Budget::Unbounded, &Default::default());
        assert_eq!(replay_journal(&journal, 8), pre_of(&[("A", 5), ("B", 3)]));
        assert_eq!(replay_journal(&journal, 4), pre_of(&[("A", 2)]));
        assert!(replay_journal(&journal, 0).is_empty());
    }

    #[test]
    fn slack_inflates_emissions_and_budget() {
        let params =
            RegularizationParams { slack_mul: 1.5, slack_add: 1, ..Default::default() };
        // raw picks stay A@2, A@5, B@3; emitted 4, 9, 6
        let (pre, journal) = full(&toy1(), Budget::Bounded(20), &params);
        assert_eq!(pre, pre_of(&[("A", 9), ("B", 6)]));
        let rows: Vec<(Mi, Mi, Mi)> =
            journal.entries.iter().map(|e| (e.new_limit, e.delta, e.cumulative)).collect();
        assert_eq!(rows, vec![(4, 4, 4), (9, 5, 9), (6, 6, 15)]);
        // the budget sees extended totals: raw total 8 would fit 14, extended 15 does not
        let (tight, _) = full(&toy1(), Budget::Bounded(14), &params);
        assert_eq!(tight, pre_of(&[("A", 9)]));
    }

    #[test]
    fn slack_rounds_half_up() {
        let p = RegularizationParams { slack_mul: 1.25, ..Default::default() };
        assert_eq!(p.extend_limit(2), 3); // 2.5 → 3
        assert_eq!(p.extend_limit(0), 0);
        let q = RegularizationParams { slack_mul: 1.5, slack_add: 1, ..Default::default() };
        assert_eq!(q.extend_limit(3), 6); // 4.5 → 5, +1
    }

    /// A solves p1 fast; B re-solves p1 and adds p2; C adds p2,p3 slower.
    fn overlap_matrix() -> EvaluationMatrix {
        EvaluationMatrix::from_sol_times([
            ("A", "p1", 1),
            ("B", "p1", 2),
            ("B", "p2", 2),
            ("C", "p2", 3),
            ("C", "p3", 3),
        ])
    }

    #[test]
    fn beta_rewards_re_covering() {
        let m = overlap_matrix();
        let (pre0, j0) = full(&m, Budget::Bounded(10), &Default::default());
        assert_eq!(pre0, pre_of(&[("A", 1), ("C", 3)]));
        assert_eq!(j0.entries.len(), 2);
        let params = RegularizationParams { beta: 1.0, ..Default::default() };
        let (pre1, j1) = full(&m, Budget::Bounded(10), &params);
        assert_eq!(pre1, pre_of(&[("A", 1), ("B", 2), ("C", 3)]));
        let picks: Vec<(&str, Vec<&str>)> = j1
            .entries
            .iter()
            .map(|e| {
                (e.strategy.as_str(), e.newly_covered.iter().map(|p| p.as_str()).collect())
            })
            .collect();
        assert_eq!(
            picks,
            vec![("A", vec!["p1"]), ("B", vec!["p2"]), ("C", vec!["p3"])]
        );
    }

    #[test]
    fn no_extension_charges_full_reruns() {
        let (c, j) = construct_greedy(
            &toy1(),
            Budget::Bounded(10),
            &Default::default(),
            ExtensionMode::None,
        )
        .unwrap();
        let Constructed::Sliced(s) = c else { panic!("expected slices") };
        assert_eq!(s, schedule(&[("A", 2), ("B", 3), ("A", 5)]));
        assert_eq!(s.total(), 10);
        let cum: Vec<Mi> = j.entries.iter().map(|e| e.cumulative).collect();
        assert_eq!(cum, vec![2, 5, 10]);
    }

    #[test]
    fn conservative_extends_only_most_recent_slice() {
        let m = EvaluationMatrix::from_sol_times([
            ("A", "p1", 1),
            ("A", "p4", 10),
            ("B", "p2", 2),
        ]);
        let run = |budget| {
            let (c, _) = construct_greedy(
                &m,
                Budget::Bounded(budget),
                &Default::default(),
                ExtensionMode::Conservative,
            )
            .unwrap();
            match c {
                Constructed::Sliced(s) => s,
                _ => panic!("expected slices"),
            }
        };
        // closing A's slice forces a fully charged re-run to reach p4
        assert_eq!(run(13), schedule(&[("A", 1), ("B", 2), ("A", 10)]));
        assert_eq!(run(12), schedule(&[("A", 1), ("B", 2)]));
        // FULL mode extends the old slice and fits the same budget
        let (pre, _) = full(&m, Budget::Bounded(12), &Default::default());
        assert_eq!(pre, pre_of(&[("A", 10), ("B", 2)]));
    }

    #[test]
    fn conservative_tie_prefers_extension_strategy_order() {
        let (c, _) = construct_greedy(
            &toy1(),
            Budget::Bounded(10),
            &Default::default(),
            ExtensionMode::Conservative,
        )
        .unwrap();
        let Constructed::Sliced(s) = c else { panic!("expected slices") };
        // extending A 2→5 ties fresh B@3 at 1/3 and Δ3; strategy id decides
        assert_eq!(s, schedule(&[("A", 5), ("B", 3)]));
    }

    #[test]
    fn probabilistic_worked_example() {
        let mut b = EvaluationMatrix::builder();
        for o in obs1().iter() {
            b.observe("s", "p", o.status, o.time);
        }
        let m = b.build();
        let (sched, journal) =
            construct_probabilistic(&m, Budget::Bounded(7), &Default::default(), 1e-9).unwrap();
        assert_eq!(sched, schedule(&[("s", 6)]));
        assert!((journal.entries[0].criterion - 0.125).abs() < 1e-12);
        assert_eq!(journal.entries[0].newly_covered.len(), 1);
    }

    #[test]
    fn probabilistic_requires_finite_budget_and_positive_epsilon() {
        let m = toy1();
        assert!(matches!(
            construct_probabilistic(&m, Budget::Unbounded, &Default::default(), 1e-9),
            Err(GreedyError::UnboundedBudget)
        ));
        assert!(matches!(
            construct_probabilistic(&m, Budget::Bounded(5), &Default::default(), 0.0),
            Err(GreedyError::InvalidParams(_))
        ));
    }

    #[test]
    fn probabilistic_empty_matrix_yields_empty_schedule() {
        let m = EvaluationMatrix::builder().build();
        let (sched, journal) =
            construct_probabilistic(&m, Budget::Bounded(100), &Default::default(), 1e-9).unwrap();
        assert!(sched.is_empty());
        assert!(journal.entries.is_empty());
    }

    fn random_matrix(rng: &mut ChaCha8Rng, max_s: usize, max_p: usize) -> EvaluationMatrix {
        let ns = rng.gen_range(1..=max_s);
        let np = rng.gen_range(1..=max_p);
        let mut b = EvaluationMatrix::builder();
        for p in 0..np {
            b.problem(format!("p{p:02}"));
        }
        for s in 0..ns {
            b.strategy(format!("s{s:02}"));
            for p in 0..np {
                if rng.gen_bool(0.5) {
                    b.observe(
                        format!("s{s:02}"),
                        format!("p{p:02}"),
                        Status::Sol,
                        rng.gen_range(1..=32),
                    );
                }
            }
        }
        b.build()
    }

    #[test]
    fn probabilistic_reduces_to_no_extension_greedy_on_shifted_times() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let m = random_matrix(&mut rng, 5, 8);
            let budget = rng.gen_range(0..=80);
            let mut shifted = EvaluationMatrix::builder();
            for p in m.problems() {
                shifted.problem(p.clone());
            }
            for s in 0..m.n_strategies() {
                shifted.strategy(m.strategy_id(s).clone());
                for (p, t) in m.strategy_det_times(s) {
                    shifted.observe(
                        m.strategy_id(s).clone(),
                        m.problem_id(p).clone(),
                        Status::Sol,
                        t + 1,
                    );
                }
            }
            let shifted = shifted.build();
            let (prob, _) = construct_probabilistic(
                &m,
                Budget::Bounded(budget),
                &Default::default(),
                1e-9,
            )
            .unwrap();
            let (det, _) = construct_greedy(
                &shifted,
                Budget::Bounded(budget),
                &Default::default(),
                ExtensionMode::None,
            )
            .unwrap();
            let Constructed::Sliced(det) = det else { panic!() };
            assert_eq!(prob, det, "budget {budget}");
        }
    }

    #[test]
    fn order_slices_examples() {
        let m = toy1();
        let s = order_slices(&pre_of(&[("A", 5), ("B", 3)]), &m).unwrap();
        assert_eq!(s, schedule(&[("A", 5), ("B", 3)])); // 2/5 > 1/3
        let s = order_slices(&pre_of(&[("A", 2), ("B", 3)]), &m).unwrap();
        assert_eq!(s, schedule(&[("A", 2), ("B", 3)])); // 1/2 > 1/3
        let s = order_slices(&pre_of(&[("B", 3)]), &m).unwrap();
        assert_eq!(s, schedule(&[("B", 3)]));
        // B first when it beats A's ratio (1/3 > 2/9)
        let s = order_slices(&pre_of(&[("A", 9), ("B", 3)]), &m).unwrap();
        assert_eq!(s.slices[0].strategy.as_str(), "B");
    }

    #[test]
    fn pad_slices_examples() {
        let s = schedule(&[("A", 5), ("B", 3)]);
        assert_eq!(pad_slices(&s, 10), schedule(&[("A", 15), ("B", 13)]));
        assert_eq!(pad_slices(&s, 0), s);
        assert!(pad_slices(&Schedule::default(), 10).is_empty());
    }

    #[test]
    fn first_extension_order_follows_journal() {
        let (pre, journal) = full(&toy1(), Budget::Bounded(10), &Default::default());
        let s = schedule_in_first_extension_order(&pre, &journal);
        assert_eq!(s, schedule(&[("A", 5), ("B", 3)]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn budget_feasibility_and_journal_consistency(
            seed in 0u64..1000,
            budget in 0u64..120,
            alpha in prop_oneof![Just(1.0), Just(0.5), Just(1.7)],
            beta in prop_oneof![Just(0.0), Just(0.5), Just(1.0)],
            slack in prop_oneof![Just((1.0, 0)), Just((1.5, 2))],
            mode in prop_oneof![
                Just(ExtensionMode::Full),
                Just(ExtensionMode::Conservative),
                Just(ExtensionMode::None),
            ],
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 6, 10);
            let params = RegularizationParams {
                slack_mul: slack.0,
                slack_add: slack.1,
                alpha,
                beta,
            };
            let (c, j) = construct_greedy(&m, Budget::Bounded(budget), &params, mode).unwrap();
            prop_assert!(c.total() <= budget, "total {} > budget {}", c.total(), budget);
            // cumulative strictly increases and Σ newly equals simulated coverage
            let mut prev = 0;
            for e in &j.entries {
                prop_assert!(e.cumulative > prev);
                prev = e.cumulative;
            }
            prop_assert_eq!(j.entries.last().map_or(0, |e| e.cumulative), c.total());
            // slack-inflated limits may cover more than raw construction saw
            if slack == (1.0, 0) {
                prop_assert_eq!(j.covered(), c.simulate(&m).unwrap().len());
            } else {
                prop_assert!(j.covered() <= c.simulate(&m).unwrap().len());
            }
            if beta == 0.0 {
                prop_assert!(j.entries.iter().all(|e| !e.newly_covered.is_empty()));
            }
            // replaying the run's own journal at its own budget reproduces it
            if mode == ExtensionMode::Full {
                prop_assert_eq!(replay_journal(&j, budget), c.to_pre_schedule());
            }
        }

        #[test]
        fn journal_round_trips_through_json(seed in 0u64..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 4, 6);
            let (_, j) = construct_greedy(
                &m,
                Budget::Unbounded,
                &Default::default(),
                ExtensionMode::Full,
            ).unwrap();
            let back = Journal::from_json_str(&j.to_json_string().unwrap()).unwrap();
            prop_assert_eq!(j, back);
        }
    }
}
