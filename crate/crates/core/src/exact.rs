//! Exact solutions of the schedule construction problem on small instances.
//!
//! [`build_mip`] produces the integer program
//!
//! ```text
//! max  Σ r_{s,p}
//! s.t. D(s,p)·r_{s,p} ≤ t_s          for every finite D(s,p)
//!      Σ_s r_{s,p} ≤ 1               per problem
//!      Σ_s t_s ≤ T
//!      t_s ≥ 0 integer, r_{s,p} ∈ {0,1}
//! ```
//!
//! which [`export_lp`] writes in the CPLEX LP text dialect for external
//! solvers. [`solve_exact`] instead solves the instance directly by
//! branch-and-bound over per-strategy candidate grids: any optimal `t_s` can
//! be shifted down to the nearest finite `D(s,·)` value (or 0) without losing
//! coverage — coverage only changes at those points — so restricting each
//! `t_s` to `{0} ∪ {finite D(s,p) ≤ T}` is lossless and makes the search
//! finite. [`min_time_full_cover`] minimizes total time subject to covering
//! every problem some strategy solves.
//!
//! Both solvers refuse instances whose candidate-grid product exceeds
//! [`ExactLimits::max_combinations`] and report the lexicographically
//! smallest optimal limit vector (strategies in id order).

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{EvaluationMatrix, Mi, PreSchedule};

#[derive(Debug, Error)]
pub enum ExactError {
    #[error(
        "instance too large for exact search: {combinations:e} candidate combinations \
         exceed the limit {limit:e}; consider exporting the LP model instead"
    )]
    TooLarge { combinations: f64, limit: f64 },
    #[error("variable name collision after sanitization: `{a}` and `{b}` both map to `{name}`")]
    NameCollision { a: String, b: String, name: String },
    #[error("exact search exceeded the wall-clock cap of {0:?}")]
    Timeout(Duration),
}

/// Size guards for the exact solvers.
#[derive(Debug, Clone, Copy)]
pub struct ExactLimits {
    /// Upper bound on Π_s (|candidate times of s| + 1).
    pub max_combinations: u64,
    /// Optional wall-clock cap on the search.
    pub wall_clock: Option<Duration>,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits { max_combinations: 10_000_000, wall_clock: None }
    }
}

/// The integer program for one (matrix, budget) instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipModel {
    /// Strategy ids in matrix order; one integer variable t_s each.
    pub strategies: Vec<String>,
    /// Problem ids in matrix order.
    pub problems: Vec<String>,
    /// One binary reward variable per finite deterministic entry:
    /// (strategy index, problem index, D(s,p)).
    pub rewards: Vec<(usize, usize, Mi)>,
    pub budget: Mi,
}

/// Instantiates the MIP over the deterministic view. Pairs with infinite
/// D(s,p) get no reward variable.
pub fn build_mip(matrix: &EvaluationMatrix, budget: Mi) -> MipModel {
    let mut rewards = Vec::new();
    for s in 0..matrix.n_strategies() {
        for (p, t) in matrix.strategy_det_times(s) {
            rewards.push((s, p, t));
        }
    }
    MipModel {
        strategies: matrix.strategies().iter().map(|s| s.as_str().to_owned()).collect(),
        problems: matrix.problems().iter().map(|p| p.as_str().to_owned()).collect(),
        rewards,
        budget,
    }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

/// Writes the model as CPLEX LP text. Variable names are `t_<sid>` and
/// `r_<sid>__<pid>` with ids sanitized to `[A-Za-z0-9_]`; a collision of two
/// distinct ids after sanitization is an error.
pub fn export_lp(model: &MipModel) -> Result<String, ExactError> {
    use std::collections::btree_map::Entry;
    use std::collections::BTreeMap;
    use std::fmt::Write;

    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut intern = |original: String, name: String| -> Result<String, ExactError> {
        match seen.entry(name.clone()) {
            Entry::Vacant(v) => {
                v.insert(original);
                Ok(name)
            }
            Entry::Occupied(o) if *o.get() == original => Ok(name),
            Entry::Occupied(o) => Err(ExactError::NameCollision {
                a: o.get().clone(),
                b: original,
                name,
            }),
        }
    };

    let mut t_names = Vec::with_capacity(model.strategies.len());
    for sid in &model.strategies {
        t_names.push(intern(format!("strategy {sid}"), format!("t_{}", sanitize(sid)))?);
    }
    let mut r_names = Vec::with_capacity(model.rewards.len());
    for &(s, p, _) in &model.rewards {
        let sid = &model.strategies[s];
        let pid = &model.problems[p];
        r_names.push(intern(
            format!("reward ({sid}, {pid})"),
            format!("r_{}__{}", sanitize(sid), sanitize(pid)),
        )?);
    }

    let mut out = String::new();
    out.push_str("Maximize\n");
    if r_names.is_empty() {
        out.push_str(" obj: 0\n");
    } else {
        writeln!(out, " obj: {}", r_names.join(" + ")).unwrap();
    }
    out.push_str("Subject To\n");
    if !t_names.is_empty() {
        writeln!(out, " budget: {} <= {}", t_names.join(" + "), model.budget).unwrap();
    }
    for (i, &(s, _, d)) in model.rewards.iter().enumerate() {
        writeln!(out, " link_{}: {} {} - {} <= 0", r_names[i], d, r_names[i], t_names[s]).unwrap();
    }
    for p in 0..model.problems.len() {
        let vars: Vec<&str> = model
            .rewards
            .iter()
            .enumerate()
            .filter(|&(_, &(_, rp, _))| rp == p)
            .map(|(i, _)| r_names[i].as_str())
            .collect();
        if !vars.is_empty() {
            writeln!(out, " once_{}: {} <= 1", sanitize(&model.problems[p]), vars.join(" + "))
                .unwrap();
        }
    }
    if !t_names.is_empty() {
        out.push_str("Generals\n");
        writeln!(out, " {}", t_names.join(" ")).unwrap();
    }
    if !r_names.is_empty() {
        out.push_str("Binaries\n");
        writeln!(out, " {}", r_names.join(" ")).unwrap();
    }
    out.push_str("End\n");
    Ok(out)
}

/// Per-strategy grids, guarded combination count, and the problems each
/// strategy solves at each grid point.
struct SearchSpace {
    /// grids[s]: ascending candidate times (excluding the implicit 0).
    grids: Vec<Vec<Mi>>,
    /// covers[s][i]: problems with D(s,p) ≤ grids[s][i].
    covers: Vec<Vec<Vec<usize>>>,
    deadline: Option<Instant>,
    cap: Duration,
}

impl SearchSpace {
    fn build(
        matrix: &EvaluationMatrix,
        time_cap: Option<Mi>,
        limits: &ExactLimits,
    ) -> Result<Self, ExactError> {
        let mut grids = Vec::new();
        let mut covers = Vec::new();
        let mut combinations = 1f64;
        for s in 0..matrix.n_strategies() {
            let det = matrix.strategy_det_times(s);
            let mut grid: Vec<Mi> = det
                .iter()
                .map(|&(_, t)| t)
                .filter(|&t| time_cap.map_or(true, |cap| t <= cap))
                .collect();
            grid.sort_unstable();
            grid.dedup();
            let cover: Vec<Vec<usize>> = grid
                .iter()
                .map(|&g| det.iter().filter(|&&(_, t)| t <= g).map(|&(p, _)| p).collect())
                .collect();
            combinations *= (grid.len() + 1) as f64;
            grids.push(grid);
            covers.push(cover);
        }
        if combinations > limits.max_combinations as f64 {
            return Err(ExactError::TooLarge {
                combinations,
                limit: limits.max_combinations as f64,
            });
        }
        Ok(SearchSpace {
            grids,
            covers,
            deadline: limits.wall_clock.map(|d| Instant::now() + d),
            cap: limits.wall_clock.unwrap_or_default(),
        })
    }

    fn check_clock(&self) -> Result<(), ExactError> {
        if let Some(deadline) = self.deadline {
            if Instant::now() > deadline {
                return Err(ExactError::Timeout(self.cap));
            }
        }
        Ok(())
    }
}

fn to_pre_schedule(matrix: &EvaluationMatrix, limits: &[Mi]) -> PreSchedule {
    limits
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t > 0)
        .map(|(s, &t)| (matrix.strategy_id(s).clone(), t))
        .collect()
}

/// Maximum-coverage search. DFS in ascending limit order per strategy with
/// strict-improvement updates, so the first optimum found — and hence the one
/// reported — has the lexicographically smallest limit vector.
struct CoverageSearch<'a> {
    space: &'a SearchSpace,
    n_problems: usize,
    best_coverage: usize,
    best_limits: Vec<Mi>,
    limits: Vec<Mi>,
}

impl<'a> CoverageSearch<'a> {
    /// `covered` holds cover multiplicities of the partial assignment.
    fn dfs(
        &mut self,
        s: usize,
        budget_left: Mi,
        covered: &mut Vec<u32>,
        n_covered: usize,
    ) -> Result<(), ExactError> {
        if s == self.space.grids.len() {
            if n_covered > self.best_coverage {
                self.best_coverage = n_covered;
                self.best_limits = self.limits.clone();
            }
            return Ok(());
        }
        self.space.check_clock()?;
        // bound: current coverage + problems still coverable by the
        // remaining strategies within the remaining budget
        let mut still = 0;
        let mut reachable = vec![false; self.n_problems];
        for s2 in s..self.space.grids.len() {
            let grid = &self.space.grids[s2];
            let within = grid.partition_point(|&t| t <= budget_left);
            if within > 0 {
                for &p in &self.space.covers[s2][within - 1] {
                    if covered[p] == 0 && !reachable[p] {
                        reachable[p] = true;
                        still += 1;
                    }
                }
            }
        }
        if n_covered + still <= self.best_coverage {
            return Ok(());
        }

        // t_s = 0 first keeps the DFS in ascending lexicographic order
        self.limits[s] = 0;
        self.dfs(s + 1, budget_left, covered, n_covered)?;
        for (i, &t) in self.space.grids[s].iter().enumerate() {
            if t > budget_left {
                break;
            }
            let mut gained = 0;
            for &p in &self.space.covers[s][i] {
                if covered[p] == 0 {
                    gained += 1;
                }
                covered[p] += 1;
            }
            self.limits[s] = t;
            self.dfs(s + 1, budget_left - t, covered, n_covered + gained)?;
            for &p in &self.space.covers[s][i] {
                covered[p] -= 1;
            }
        }
        self.limits[s] = 0;
        Ok(())
    }
}

/// Optimal coverage under the budget, with the witnessing pre-schedule.
pub fn solve_exact(
    matrix: &EvaluationMatrix,
    budget: Mi,
    limits: &ExactLimits,
) -> Result<(PreSchedule, usize), ExactError> {
    let space = SearchSpace::build(matrix, Some(budget), limits)?;
    let mut search = CoverageSearch {
        space: &space,
        n_problems: matrix.n_problems(),
        best_coverage: 0,
        best_limits: vec![0; matrix.n_strategies()],
        limits: vec![0; matrix.n_strategies()],
    };
    let mut covered = vec![0u32; matrix.n_problems()];
    search.dfs(0, budget, &mut covered, 0)?;
    Ok((to_pre_schedule(matrix, &search.best_limits), search.best_coverage))
}

/// Minimum total-time search covering a fixed target set.
struct FullCoverSearch<'a> {
    space: &'a SearchSpace,
    /// uncovered target problems are tracked by multiplicity over targets
    target: Vec<bool>,
    best_total: Option<Mi>,
    best_limits: Vec<Mi>,
    limits: Vec<Mi>,
}

impl<'a> FullCoverSearch<'a> {
    fn dfs(
        &mut self,
        s: usize,
        spent: Mi,
        covered: &mut Vec<u32>,
        missing: usize,
    ) -> Result<(), ExactError> {
        if let Some(best) = self.best_total {
            if spent >= best {
                return Ok(());
            }
        }
        if s == self.space.grids.len() {
            if missing == 0 && self.best_total.map_or(true, |b| spent < b) {
                self.best_total = Some(spent);
                self.best_limits = self.limits.clone();
            }
            return Ok(());
        }
        self.space.check_clock()?;
        if missing > 0 {
            // every uncovered target needs some remaining strategy; the
            // cheapest way to reach problem p costs at least
            // min_{s' ≥ s} D(s',p), so the dearest such problem bounds the
            // additional spend from below
            let mut lower = 0;
            for p in 0..self.target.len() {
                if !self.target[p] || covered[p] > 0 {
                    continue;
                }
                let mut cheapest: Option<Mi> = None;
                for s2 in s..self.space.grids.len() {
                    for (i, &t) in self.space.grids[s2].iter().enumerate() {
                        if self.space.covers[s2][i].contains(&p) {
                            cheapest = Some(cheapest.map_or(t, |c: Mi| c.min(t)));
                            break;
                        }
                    }
                }
                match cheapest {
                    None => return Ok(()), // dead end: p is unreachable now
                    Some(c) => lower = lower.max(c),
                }
            }
            if let Some(best) = self.best_total {
                if spent + lower >= best {
                    return Ok(());
                }
            }
        }

        self.limits[s] = 0;
        self.dfs(s + 1, spent, covered, missing)?;
        for (i, &t) in self.space.grids[s].iter().enumerate() {
            let mut gained = 0;
            for &p in &self.space.covers[s][i] {
                if self.target[p] && covered[p] == 0 {
                    gained += 1;
                }
                covered[p] += 1;
            }
            self.limits[s] = t;
            self.dfs(s + 1, spent + t, covered, missing - gained)?;
            for &p in &self.space.covers[s][i] {
                covered[p] -= 1;
            }
        }
        self.limits[s] = 0;
        Ok(())
    }
}

/// Shortest pre-schedule covering every problem some strategy solves
/// (the virtual-best-coverable set). Returns the schedule and its total.
pub fn min_time_full_cover(
    matrix: &EvaluationMatrix,
    limits: &ExactLimits,
) -> Result<(PreSchedule, Mi), ExactError> {
    let space = SearchSpace::build(matrix, None, limits)?;
    let mut target = vec![false; matrix.n_problems()];
    for s in 0..matrix.n_strategies() {
        for (p, _) in matrix.strategy_det_times(s) {
            target[p] = true;
        }
    }
    let missing = target.iter().filter(|&&t| t).count();
    let mut search = FullCoverSearch {
        space: &space,
        target,
        best_total: None,
        best_limits: vec![0; matrix.n_strategies()],
        limits: vec![0; matrix.n_strategies()],
    };
    let mut covered = vec![0u32; matrix.n_problems()];
    search.dfs(0, 0, &mut covered, missing)?;
    let total = search.best_total.expect("coverable set is always coverable");
    Ok((to_pre_schedule(matrix, &search.best_limits), total))
}
