//! Shared data model: identifiers, observations, evaluation matrices,
//! schedules, the success-probability estimator, and the schedule simulator.
//!
//! Times are integer megainstructions ([`Mi`]) throughout. An evaluation
//! matrix records, per (strategy, problem) pair, a multiset of observed
//! outcomes; its *deterministic view* `D(s,p)` collapses each cell to the
//! minimum solving time (or infinity, represented as `None`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Time in megainstructions (2^20 CPU instructions).
pub type Mi = u64;

/// Errors raised by the data model and its file formats.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("{0}")]
    Format(String),
    #[error("unknown strategy id `{0}`")]
    UnknownStrategy(String),
    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Opaque strategy identifier with stable lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyId(String);

/// Opaque problem identifier with stable lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProblemId(String);

macro_rules! id_impls {
    ($ty:ident) => {
        impl $ty {
            pub fn new(id: impl Into<String>) -> Self {
                $ty(id.into())
            }
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
        impl From<&str> for $ty {
            fn from(s: &str) -> Self {
                $ty(s.to_owned())
            }
        }
        impl From<String> for $ty {
            fn from(s: String) -> Self {
                $ty(s)
            }
        }
    };
}
id_impls!(StrategyId);
id_impls!(ProblemId);

/// Outcome status of a single evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    /// Solved within the limit.
    Sol,
    /// Gave up before the limit (e.g. saturation without refutation).
    Gup,
    /// Ran into the time limit.
    Tmo,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Sol => "SOL",
            Status::Gup => "GUP",
            Status::Tmo => "TMO",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "SOL" => Some(Status::Sol),
            "GUP" => Some(Status::Gup),
            "TMO" => Some(Status::Tmo),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One recorded evaluation outcome: a status and the runtime at which it
/// occurred (for TMO, the limit that was hit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub status: Status,
    pub time: Mi,
}

impl Observation {
    pub fn new(status: Status, time: Mi) -> Self {
        Observation { status, time }
    }
}

impl Ord for Observation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.status).cmp(&(other.time, other.status))
    }
}

impl PartialOrd for Observation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Multiset of observations for one (strategy, problem) pair, kept in
/// canonical (time, status) order. Duplicates are permitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Observation>", into = "Vec<Observation>")]
pub struct ObservationSet(Vec<Observation>);

impl ObservationSet {
    pub fn new() -> Self {
        ObservationSet(Vec::new())
    }

    pub fn push(&mut self, obs: Observation) {
        let at = self.0.partition_point(|o| o <= &obs);
        self.0.insert(at, obs);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Minimum runtime over SOL observations; `None` when nothing solved.
    pub fn min_sol_time(&self) -> Option<Mi> {
        self.0
            .iter()
            .filter(|o| o.status == Status::Sol)
            .map(|o| o.time)
            .min()
    }
}

impl From<Vec<Observation>> for ObservationSet {
    fn from(mut v: Vec<Observation>) -> Self {
        v.sort();
        ObservationSet(v)
    }
}

impl From<ObservationSet> for Vec<Observation> {
    fn from(s: ObservationSet) -> Self {
        s.0
    }
}

impl FromIterator<Observation> for ObservationSet {
    fn from_iter<T: IntoIterator<Item = Observation>>(iter: T) -> Self {
        iter.into_iter().collect::<Vec<_>>().into()
    }
}

/// Success probability as the exact unreduced fraction produced by counting,
/// so that e.g. 2/4 and 1/2 remain distinguishable. A zero denominator means
/// "no information"; such values report as probability 0 and are flagged by
/// [`SuccessProbability::is_unknown`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SuccessProbability {
    pub numerator: u64,
    pub denominator: u64,
}

impl SuccessProbability {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        SuccessProbability { numerator, denominator }
    }

    pub fn is_unknown(&self) -> bool {
        self.denominator == 0
    }

    pub fn value(&self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }
}

impl fmt::Display for SuccessProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Estimate the probability that a fresh run succeeds within `t` Mi given the
/// recorded observations: successes strictly below `t` over observations that
/// are informative at `t` (ran at least `t`, or ended for a reason other than
/// the time limit).
pub fn estimate_success_probability(obs: &ObservationSet, t: Mi) -> SuccessProbability {
    let mut num = 0;
    let mut den = 0;
    for o in obs.iter() {
        if o.time < t && o.status == Status::Sol {
            num += 1;
        }
        if o.time >= t || o.status != Status::Tmo {
            den += 1;
        }
    }
    SuccessProbability::new(num, den)
}

/// One schedule entry: run `strategy` for up to `limit` Mi.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub strategy: StrategyId,
    pub limit: Mi,
}

impl Slice {
    pub fn new(strategy: impl Into<StrategyId>, limit: Mi) -> Self {
        Slice { strategy: strategy.into(), limit }
    }
}

/// Ordered sequence of slices. A strategy may appear more than once (needed
/// by the no-extension and conservative greedy variants).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct Schedule {
    pub slices: Vec<Slice>,
}

impl Schedule {
    /// Builds a schedule, rejecting zero limits (1 Mi granularity).
    pub fn new(slices: Vec<Slice>) -> Result<Self, ModelError> {
        if let Some(s) = slices.iter().find(|s| s.limit == 0) {
            return Err(ModelError::Format(format!(
                "slice for strategy `{}` has zero limit",
                s.strategy
            )));
        }
        Ok(Schedule { slices })
    }

    pub fn total(&self) -> Mi {
        self.slices.iter().map(|s| s.limit).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    slices: Vec<Slice>,
    total: Mi,
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = ModelError;

    fn try_from(r: ScheduleRepr) -> Result<Self, ModelError> {
        let s = Schedule::new(r.slices)?;
        if s.total() != r.total {
            return Err(ModelError::Format(format!(
                "schedule total {} does not match sum of limits {}",
                r.total,
                s.total()
            )));
        }
        Ok(s)
    }
}

impl From<Schedule> for ScheduleRepr {
    fn from(s: Schedule) -> Self {
        let total = s.total();
        ScheduleRepr { slices: s.slices, total }
    }
}

/// Unordered time assignment t_s per strategy; an entry of 0 is semantically
/// absent and never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<StrategyId, Mi>", into = "BTreeMap<StrategyId, Mi>")]
pub struct PreSchedule {
    limits: BTreeMap<StrategyId, Mi>,
}

impl PreSchedule {
    pub fn new() -> Self {
        PreSchedule::default()
    }

    /// Sets a strategy's limit; 0 removes the entry.
    pub fn set(&mut self, strategy: impl Into<StrategyId>, limit: Mi) {
        let strategy = strategy.into();
        if limit == 0 {
            self.limits.remove(&strategy);
        } else {
            self.limits.insert(strategy, limit);
        }
    }

    pub fn get(&self, strategy: &StrategyId) -> Mi {
        self.limits.get(strategy).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StrategyId, Mi)> {
        self.limits.iter().map(|(s, &t)| (s, t))
    }

    pub fn len(&self) -> usize {
        self.limits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.limits.is_empty()
    }

    pub fn total(&self) -> Mi {
        self.limits.values().sum()
    }

    /// Slices in lexicographic strategy order (ordering-insensitive uses).
    pub fn to_slices_lex(&self) -> Vec<Slice> {
        self.limits
            .iter()
            .map(|(s, &t)| Slice { strategy: s.clone(), limit: t })
            .collect()
    }
}

impl From<BTreeMap<StrategyId, Mi>> for PreSchedule {
    fn from(m: BTreeMap<StrategyId, Mi>) -> Self {
        PreSchedule { limits: m.into_iter().filter(|&(_, t)| t > 0).collect() }
    }
}

impl From<PreSchedule> for BTreeMap<StrategyId, Mi> {
    fn from(p: PreSchedule) -> Self {
        p.limits
    }
}

impl FromIterator<(StrategyId, Mi)> for PreSchedule {
    fn from_iter<T: IntoIterator<Item = (StrategyId, Mi)>>(iter: T) -> Self {
        iter.into_iter().collect::<BTreeMap<_, _>>().into()
    }
}

/// Evaluation data for a set of strategies on a set of problems.
///
/// Identifier lists are sorted and duplicate-free; cells are keyed by
/// (strategy index, problem index). A problem or strategy may exist without
/// any observations — an absent cell means "no information".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct EvaluationMatrix {
    strategies: Vec<StrategyId>,
    problems: Vec<ProblemId>,
    cells: BTreeMap<(usize, usize), ObservationSet>,
}

impl EvaluationMatrix {
    pub fn builder() -> MatrixBuilder {
        MatrixBuilder::default()
    }

    /// Convenience constructor from (strategy, problem, SOL time) triples,
    /// the shape of a classic deterministic evaluation matrix.
    pub fn from_sol_times<S, P>(entries: impl IntoIterator<Item = (S, P, Mi)>) -> Self
    where
        S: Into<StrategyId>,
        P: Into<ProblemId>,
    {
        let mut b = MatrixBuilder::default();
        for (s, p, t) in entries {
            b.observe(s, p, Status::Sol, t);
        }
        b.build()
    }

    pub fn strategies(&self) -> &[StrategyId] {
        &self.strategies
    }

    pub fn problems(&self) -> &[ProblemId] {
        &self.problems
    }

    pub fn n_strategies(&self) -> usize {
        self.strategies.len()
    }

    pub fn n_problems(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty() && self.problems.is_empty()
    }

    pub fn strategy_index(&self, id: &StrategyId) -> Option<usize> {
        self.strategies.binary_search(id).ok()
    }

    pub fn problem_index(&self, id: &ProblemId) -> Option<usize> {
        self.problems.binary_search(id).ok()
    }

    pub fn strategy_id(&self, idx: usize) -> &StrategyId {
        &self.strategies[idx]
    }

    pub fn problem_id(&self, idx: usize) -> &ProblemId {
        &self.problems[idx]
    }

    pub fn observations(&self, s: usize, p: usize) -> Option<&ObservationSet> {
        self.cells.get(&(s, p))
    }

    /// Deterministic view D(s,p): minimum SOL runtime, `None` for ∞.
    pub fn det_time(&self, s: usize, p: usize) -> Option<Mi> {
        self.cells.get(&(s, p)).and_then(|o| o.min_sol_time())
    }

    /// All finite deterministic-view entries of one strategy, as
    /// (problem index, time) pairs in problem order.
    pub fn strategy_det_times(&self, s: usize) -> Vec<(usize, Mi)> {
        self.cells
            .range((s, 0)..=(s, usize::MAX))
            .filter_map(|(&(_, p), obs)| obs.min_sol_time().map(|t| (p, t)))
            .collect()
    }

    /// Restriction to subsets of strategies and/or problems (`None` keeps
    /// everything). Ids absent from the matrix are silently ignored.
    pub fn restrict(
        &self,
        strategies: Option<&BTreeSet<StrategyId>>,
        problems: Option<&BTreeSet<ProblemId>>,
    ) -> EvaluationMatrix {
        let keep_s: Vec<usize> = (0..self.strategies.len())
            .filter(|&i| strategies.map_or(true, |set| set.contains(&self.strategies[i])))
            .collect();
        let keep_p: Vec<usize> = (0..self.problems.len())
            .filter(|&i| problems.map_or(true, |set| set.contains(&self.problems[i])))
            .collect();
        let s_map: BTreeMap<usize, usize> =
            keep_s.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let p_map: BTreeMap<usize, usize> =
            keep_p.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        EvaluationMatrix {
            strategies: keep_s.iter().map(|&i| self.strategies[i].clone()).collect(),
            problems: keep_p.iter().map(|&i| self.problems[i].clone()).collect(),
            cells: self
                .cells
                .iter()
                .filter_map(|(&(s, p), obs)| {
                    Some(((*s_map.get(&s)?, *p_map.get(&p)?), obs.clone()))
                })
                .collect(),
        }
    }

    /// Reads the evaluation CSV format (header `strategy,problem,status,time`,
    /// one observation per row). Rows accumulate into cell multisets.
    pub fn from_csv_reader<R: io::Read>(reader: R) -> Result<Self, ModelError> {
        const HEADER: [&str; 4] = ["strategy", "problem", "status", "time"];
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        {
            let headers = rdr.headers()?;
            if !headers.iter().eq(HEADER) {
                return Err(ModelError::Parse {
                    line: 1,
                    msg: format!(
                        "expected header `strategy,problem,status,time`, got `{}`",
                        headers.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
        }
        let mut b = MatrixBuilder::default();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let fail = |msg: String| ModelError::Parse { line, msg };
            if record.iter().eq(HEADER) {
                return Err(fail("duplicate header row".into()));
            }
            if record.len() != 4 {
                return Err(fail(format!("expected 4 columns, got {}", record.len())));
            }
            let sid = &record[0];
            let pid = &record[1];
            if sid.is_empty() {
                return Err(fail("empty strategy id".into()));
            }
            if pid.is_empty() {
                return Err(fail("empty problem id".into()));
            }
            let status = Status::parse(&record[2])
                .ok_or_else(|| fail(format!("unknown status `{}`", &record[2])))?;
            let time: Mi = record[3].parse().map_err(|_| {
                fail(format!("invalid time `{}` (expected nonnegative integer Mi)", &record[3]))
            })?;
            b.observe(sid, pid, status, time);
        }
        Ok(b.build())
    }

    pub fn from_csv_str(s: &str) -> Result<Self, ModelError> {
        Self::from_csv_reader(s.as_bytes())
    }

    /// Writes the evaluation CSV in canonical order (strategies, then
    /// problems, then observations, all ascending). Strategies or problems
    /// without observations are not representable in CSV.
    pub fn to_csv_writer<W: io::Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["strategy", "problem", "status", "time"])?;
        for (&(s, p), obs) in &self.cells {
            for o in obs.iter() {
                wtr.write_record([
                    self.strategies[s].as_str(),
                    self.problems[p].as_str(),
                    o.status.as_str(),
                    &o.time.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, ModelError> {
        let mut buf = Vec::new();
        self.to_csv_writer(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(ModelError::from)
    }

    pub fn from_json_reader<R: io::Read>(reader: R) -> Result<Self, ModelError> {
        serde_json::from_reader(reader).map_err(ModelError::from)
    }

    pub fn to_json_string(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(self).map_err(ModelError::from)
    }
}

/// Incremental construction of an [`EvaluationMatrix`].
#[derive(Debug, Default)]
pub struct MatrixBuilder {
    strategies: BTreeSet<StrategyId>,
    problems: BTreeSet<ProblemId>,
    obs: BTreeMap<(StrategyId, ProblemId), ObservationSet>,
}

impl MatrixBuilder {
    /// Declares a strategy even if it never produces an observation.
    pub fn strategy(&mut self, id: impl Into<StrategyId>) -> &mut Self {
        self.strategies.insert(id.into());
        self
    }

    /// Declares a problem even if no strategy was evaluated on it.
    pub fn problem(&mut self, id: impl Into<ProblemId>) -> &mut Self {
        self.problems.insert(id.into());
        self
    }

    pub fn observe(
        &mut self,
        strategy: impl Into<StrategyId>,
        problem: impl Into<ProblemId>,
        status: Status,
        time: Mi,
    ) -> &mut Self {
        let s = strategy.into();
        let p = problem.into();
        self.strategies.insert(s.clone());
        self.problems.insert(p.clone());
        self.obs.entry((s, p)).or_default().push(Observation::new(status, time));
        self
    }

    pub fn build(self) -> EvaluationMatrix {
        let strategies: Vec<StrategyId> = self.strategies.into_iter().collect();
        let problems: Vec<ProblemId> = self.problems.into_iter().collect();
        let cells = self
            .obs
            .into_iter()
            .filter(|(_, obs)| !obs.is_empty())
            .map(|((s, p), obs)| {
                let si = strategies.binary_search(&s).expect("declared strategy");
                let pi = problems.binary_search(&p).expect("declared problem");
                ((si, pi), obs)
            })
            .collect();
        EvaluationMatrix { strategies, problems, cells }
    }
}

#[derive(Serialize, Deserialize)]
struct CellRepr {
    strategy: StrategyId,
    problem: ProblemId,
    obs: Vec<Observation>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    strategies: Vec<StrategyId>,
    problems: Vec<ProblemId>,
    cells: Vec<CellRepr>,
}

impl TryFrom<MatrixRepr> for EvaluationMatrix {
    type Error = ModelError;

    fn try_from(r: MatrixRepr) -> Result<Self, ModelError> {
        let mut b = MatrixBuilder::default();
        for s in r.strategies {
            b.strategy(s);
        }
        for p in r.problems {
            b.problem(p);
        }
        for cell in r.cells {
            if !b.strategies.contains(&cell.strategy) {
                return Err(ModelError::UnknownStrategy(cell.strategy.as_str().into()));
            }
            if !b.problems.contains(&cell.problem) {
                return Err(ModelError::UnknownProblem(cell.problem.as_str().into()));
            }
            for o in cell.obs {
                b.observe(cell.strategy.clone(), cell.problem.clone(), o.status, o.time);
            }
        }
        Ok(b.build())
    }
}

impl From<EvaluationMatrix> for MatrixRepr {
    fn from(m: EvaluationMatrix) -> Self {
        MatrixRepr {
            cells: m
                .cells
                .iter()
                .map(|(&(s, p), obs)| CellRepr {
                    strategy: m.strategies[s].clone(),
                    problem: m.problems[p].clone(),
                    obs: obs.clone().into(),
                })
                .collect(),
            strategies: m.strategies,
            problems: m.problems,
        }
    }
}

/// Per-problem best strategy time: min over strategies of D(s,p).
/// `None` marks problems no strategy solves.
pub fn vbss_times(matrix: &EvaluationMatrix) -> BTreeMap<ProblemId, Option<Mi>> {
    let mut best: Vec<Option<Mi>> = vec![None; matrix.n_problems()];
    for s in 0..matrix.n_strategies() {
        for (p, t) in matrix.strategy_det_times(s) {
            best[p] = Some(best[p].map_or(t, |b: Mi| b.min(t)));
        }
    }
    matrix
        .problems()
        .iter()
        .zip(best)
        .map(|(p, t)| (p.clone(), t))
        .collect()
}

fn simulate_pairs<'a>(
    matrix: &EvaluationMatrix,
    pairs: impl Iterator<Item = (&'a StrategyId, Mi)>,
) -> Result<BTreeSet<ProblemId>, ModelError> {
    let mut solved = BTreeSet::new();
    for (sid, limit) in pairs {
        let s = matrix
            .strategy_index(sid)
            .ok_or_else(|| ModelError::UnknownStrategy(sid.as_str().into()))?;
        for (p, t) in matrix.strategy_det_times(s) {
            if t <= limit {
                solved.insert(matrix.problem_id(p).clone());
            }
        }
    }
    Ok(solved)
}

/// Problems the schedule covers under the deterministic view:
/// { p | ∃ slice (s,t) with D(s,p) ≤ t }.
pub fn simulate_schedule(
    matrix: &EvaluationMatrix,
    schedule: &Schedule,
) -> Result<BTreeSet<ProblemId>, ModelError> {
    simulate_pairs(matrix, schedule.slices.iter().map(|s| (&s.strategy, s.limit)))
}

/// [`simulate_schedule`] for a pre-schedule (order is irrelevant to coverage).
pub fn simulate_pre_schedule(
    matrix: &EvaluationMatrix,
    pre: &PreSchedule,
) -> Result<BTreeSet<ProblemId>, ModelError> {
    simulate_pairs(matrix, pre.iter())
}

/// Estimated probability that the schedule solves `problem`:
/// 1 − Π over slices of (1 − P_SOL(limit | observations)). Slices of
/// strategies with no recorded observations contribute factor 1.
pub fn schedule_success_probability(
    matrix: &EvaluationMatrix,
    schedule: &Schedule,
    problem: &ProblemId,
) -> Result<f64, ModelError> {
    let p = matrix
        .problem_index(problem)
        .ok_or_else(|| ModelError::UnknownProblem(problem.as_str().into()))?;
    let mut miss = 1.0;
    for slice in &schedule.slices {
        if let Some(s) = matrix.strategy_index(&slice.strategy) {
            if let Some(obs) = matrix.observations(s, p) {
                miss *= 1.0 - estimate_success_probability(obs, slice.limit).value();
            }
        }
    }
    Ok(1.0 - miss)
}
