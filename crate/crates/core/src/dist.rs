//! Sampling-distribution derivation from evaluation data.
//!
//! The utility of an option value is measured by the number of problems
//! uniquely solved per strategy carrying that value; normalizing those
//! utilities yields a sampling distribution over the value space
//! ([`option_value_distribution`], optionally conditioned on another option
//! via [`conditional_distribution`]). The module also counts raw value
//! frequencies among contributing strategies
//! ([`update_sampling_frequencies`]), produces capped Luby limit sequences
//! for probe scheduling ([`luby_limits`]), and implements the forgotten-half
//! problem sampler ([`sample_uncovered_problem`]).

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EvaluationMatrix, Mi, ModelError, ProblemId, StrategyId};

#[derive(Debug, Error)]
pub enum DistError {
    #[error("option `{0}` is not set by any strategy under analysis")]
    EmptyAnalysis(String),
    #[error("strategy `{0}` has no metadata entry")]
    MissingMeta(String),
    #[error("invalid Luby config: cap {cap} is not base {base} times a power of two")]
    BadLubyCap { base: Mi, cap: Mi },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Descriptive record of one strategy: its option assignment, the witness
/// problem that led to its discovery, the discovery timestamp in days, and
/// the probe limit it was found under. An option absent from `options`
/// means "not applicable" (N/A) for that strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMeta {
    pub id: StrategyId,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<ProblemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discovered_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_limit: Option<Mi>,
}

impl StrategyMeta {
    pub fn new(id: impl Into<StrategyId>) -> Self {
        StrategyMeta {
            id: id.into(),
            options: BTreeMap::new(),
            witness: None,
            discovered_at: None,
            probe_limit: None,
        }
    }

    pub fn with_option(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.options.insert(name.into(), value.into());
        self
    }

    pub fn with_witness(mut self, witness: impl Into<ProblemId>) -> Self {
        self.witness = Some(witness.into());
        self
    }
}

#[derive(Serialize, Deserialize)]
struct MetaBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<ProblemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discovered_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probe_limit: Option<Mi>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    options: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct MetadataFile {
    strategies: BTreeMap<StrategyId, MetaBody>,
}

/// Reads strategy metadata from its JSON layout
/// `{"strategies": {"<id>": {"witness": …, "options": {…}}}}`, sorted by id.
pub fn load_metadata<R: io::Read>(reader: R) -> Result<Vec<StrategyMeta>, ModelError> {
    let file: MetadataFile = serde_json::from_reader(reader)?;
    let mut metas = Vec::with_capacity(file.strategies.len());
    for (id, body) in file.strategies {
        if body.options.keys().any(|k| k.is_empty()) {
            return Err(ModelError::Format(format!(
                "strategy `{id}` has an empty option name"
            )));
        }
        metas.push(StrategyMeta {
            id,
            options: body.options,
            witness: body.witness,
            discovered_at: body.discovered_at,
            probe_limit: body.probe_limit,
        });
    }
    Ok(metas)
}

pub fn write_metadata<W: io::Write>(
    metas: &[StrategyMeta],
    writer: W,
) -> Result<(), ModelError> {
    let file = MetadataFile {
        strategies: metas
            .iter()
            .map(|m| {
                (
                    m.id.clone(),
                    MetaBody {
                        witness: m.witness.clone(),
                        discovered_at: m.discovered_at,
                        probe_limit: m.probe_limit,
                        options: m.options.clone(),
                    },
                )
            })
            .collect(),
    };
    serde_json::to_writer_pretty(writer, &file)?;
    Ok(())
}

/// Problems solved (deterministic view) by some strategy in `subset` and by
/// no strategy outside it.
pub fn uniquely_solved(
    matrix: &EvaluationMatrix,
    subset: &BTreeSet<StrategyId>,
) -> Result<BTreeSet<ProblemId>, ModelError> {
    let mut in_subset = vec![false; matrix.n_strategies()];
    for id in subset {
        let s = matrix
            .strategy_index(id)
            .ok_or_else(|| ModelError::UnknownStrategy(id.as_str().into()))?;
        in_subset[s] = true;
    }
    // a problem qualifies when every solver lies in the subset and there is
    // at least one solver
    let mut solvers = vec![(0usize, 0usize); matrix.n_problems()]; // (total, inside)
    for s in 0..matrix.n_strategies() {
        for (p, _) in matrix.strategy_det_times(s) {
            solvers[p].0 += 1;
            if in_subset[s] {
                solvers[p].1 += 1;
            }
        }
    }
    Ok(solvers
        .iter()
        .enumerate()
        .filter(|&(_, &(total, inside))| total > 0 && total == inside)
        .map(|(p, _)| matrix.problem_id(p).clone())
        .collect())
}

/// One bucket of an option-value analysis. `value` of `None` is the N/A
/// bucket of strategies that do not set the option; it carries no
/// `normalized` entry because it does not participate in the distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionDistributionRow {
    pub value: Option<String>,
    pub strategy_count: usize,
    pub unique_solved: usize,
    pub per_strategy: f64,
    pub normalized: Option<f64>,
}

/// Result of [`option_value_distribution`]: non-N/A rows in value order,
/// then the N/A row if any strategy lacks the option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionDistribution {
    pub option: String,
    pub rows: Vec<OptionDistributionRow>,
    /// Set when every non-N/A bucket had zero utility and the distribution
    /// fell back to uniform.
    pub zero_utility_uniform: bool,
}

impl OptionDistribution {
    pub fn normalized_of(&self, value: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.value.as_deref() == Some(value))
            .and_then(|r| r.normalized)
    }
}

/// Buckets the matrix strategies by their value of `option` (N/A for
/// strategies that do not set it), measures each bucket by problems
/// uniquely solved per strategy, and normalizes the non-N/A utilities to a
/// sampling distribution.
pub fn option_value_distribution(
    matrix: &EvaluationMatrix,
    metas: &[StrategyMeta],
    option: &str,
) -> Result<OptionDistribution, DistError> {
    let by_id: BTreeMap<&StrategyId, &StrategyMeta> = metas.iter().map(|m| (&m.id, m)).collect();
    let mut buckets: BTreeMap<Option<&str>, BTreeSet<StrategyId>> = BTreeMap::new();
    for sid in matrix.strategies() {
        let meta = by_id
            .get(sid)
            .ok_or_else(|| DistError::MissingMeta(sid.as_str().into()))?;
        let value = meta.options.get(option).map(String::as_str);
        buckets.entry(value).or_default().insert(sid.clone());
    }
    if buckets.keys().all(Option::is_none) {
        return Err(DistError::EmptyAnalysis(option.into()));
    }

    // Option<&str> orders None first; emit non-N/A rows first instead
    let mut rows: Vec<OptionDistributionRow> = Vec::with_capacity(buckets.len());
    for (value, ids) in buckets.iter().filter(|(v, _)| v.is_some()).chain(
        buckets.iter().filter(|(v, _)| v.is_none()),
    ) {
        let unique = uniquely_solved(matrix, ids)?.len();
        rows.push(OptionDistributionRow {
            value: value.map(str::to_owned),
            strategy_count: ids.len(),
            unique_solved: unique,
            per_strategy: unique as f64 / ids.len() as f64,
            normalized: None,
        });
    }

    let mass: f64 = rows.iter().filter(|r| r.value.is_some()).map(|r| r.per_strategy).sum();
    let participants = rows.iter().filter(|r| r.value.is_some()).count();
    let zero_utility_uniform = mass == 0.0;
    for row in rows.iter_mut().filter(|r| r.value.is_some()) {
        row.normalized = Some(if zero_utility_uniform {
            1.0 / participants as f64
        } else {
            row.per_strategy / mass
        });
    }
    Ok(OptionDistribution { option: option.into(), rows, zero_utility_uniform })
}

/// Distributions of `option` conditioned on the value of `given`, plus the
/// unconditional distribution over the union of the conditioned groups.
/// Strategies that do not set `given` belong to no group and are excluded
/// from the unconditional row as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDistribution {
    pub option: String,
    pub given: String,
    pub groups: Vec<(String, OptionDistribution)>,
    pub unconditional: OptionDistribution,
}

pub fn conditional_distribution(
    matrix: &EvaluationMatrix,
    metas: &[StrategyMeta],
    option: &str,
    given: &str,
) -> Result<ConditionalDistribution, DistError> {
    let by_id: BTreeMap<&StrategyId, &StrategyMeta> = metas.iter().map(|m| (&m.id, m)).collect();
    let mut groups: BTreeMap<String, BTreeSet<StrategyId>> = BTreeMap::new();
    for sid in matrix.strategies() {
        let meta = by_id
            .get(sid)
            .ok_or_else(|| DistError::MissingMeta(sid.as_str().into()))?;
        if let Some(v) = meta.options.get(given) {
            groups.entry(v.clone()).or_default().insert(sid.clone());
        }
    }
    if groups.is_empty() {
        return Err(DistError::EmptyAnalysis(given.into()));
    }
    let union: BTreeSet<StrategyId> = groups.values().flatten().cloned().collect();
    let rows = groups
        .into_iter()
        .map(|(value, ids)| {
            let restricted = matrix.restrict(Some(&ids), None);
            option_value_distribution(&restricted, metas, option).map(|d| (value, d))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let unconditional =
        option_value_distribution(&matrix.restrict(Some(&union), None), metas, option)?;
    Ok(ConditionalDistribution {
        option: option.into(),
        given: given.into(),
        groups: rows,
        unconditional,
    })
}

/// Counts how often each value of `option` occurs among the contributing
/// strategies; strategies without the option are excluded from counts and
/// denominator alike.
pub fn update_sampling_frequencies(
    contributing: &[StrategyMeta],
    option: &str,
) -> BTreeMap<String, (u64, f64)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for meta in contributing {
        if let Some(v) = meta.options.get(option) {
            *counts.entry(v.clone()).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    counts
        .into_iter()
        .map(|(v, c)| (v, (c, c as f64 / total as f64)))
        .collect()
}

/// Report rounding used by the distribution tables.
fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Writes an option-value analysis as CSV with the report columns
/// `value,strategies,unique_absolute,unique_per_strategy,distribution`;
/// ratios are rounded to two decimals, and the N/A row leaves the
/// distribution column empty.
pub fn write_distribution_csv<W: io::Write>(
    dist: &OptionDistribution,
    writer: W,
) -> Result<(), ModelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["value", "strategies", "unique_absolute", "unique_per_strategy", "distribution"])?;
    for row in &dist.rows {
        w.write_record([
            row.value.as_deref().unwrap_or("N/A").to_owned(),
            row.strategy_count.to_string(),
            row.unique_solved.to_string(),
            format!("{:.2}", round2(row.per_strategy)),
            row.normalized.map(|n| format!("{:.2}", round2(n))).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a conditional analysis as a wide table: one column per non-N/A
/// option value, one row per given-value, and a final `Unconditional` row.
/// Groups missing a value entirely report 0.00 for it.
pub fn write_conditional_csv<W: io::Write>(
    dist: &ConditionalDistribution,
    writer: W,
) -> Result<(), ModelError> {
    let mut values: BTreeSet<&str> = BTreeSet::new();
    for (_, d) in &dist.groups {
        values.extend(d.rows.iter().filter_map(|r| r.value.as_deref()));
    }
    values.extend(dist.unconditional.rows.iter().filter_map(|r| r.value.as_deref()));

    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![dist.given.clone()];
    header.extend(values.iter().map(|v| v.to_string()));
    w.write_record(&header)?;
    let emit = |d: &OptionDistribution| -> Vec<String> {
        values
            .iter()
            .map(|v| format!("{:.2}", round2(d.normalized_of(v).unwrap_or(0.0))))
            .collect()
    };
    for (value, d) in &dist.groups {
        let mut record = vec![value.clone()];
        record.extend(emit(d));
        w.write_record(&record)?;
    }
    let mut record = vec!["Unconditional".to_owned()];
    record.extend(emit(&dist.unconditional));
    w.write_record(&record)?;
    w.flush()?;
    Ok(())
}

/// A Luby limit sequence scaled by `base` and capped at `cap`, which must be
/// `base · 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LubyConfig {
    base: Mi,
    cap: Mi,
}

impl LubyConfig {
    pub fn new(base: Mi, cap: Mi) -> Result<Self, DistError> {
        let valid = base >= 1
            && cap >= base
            && cap % base == 0
            && (cap / base).is_power_of_two();
        if valid {
            Ok(LubyConfig { base, cap })
        } else {
            Err(DistError::BadLubyCap { base, cap })
        }
    }

    pub fn base(&self) -> Mi {
        self.base
    }

    pub fn cap(&self) -> Mi {
        self.cap
    }
}

/// The unbounded limit sequence `base × Luby(i)`, restarted from the
/// beginning each time `cap` is emitted so no limit ever exceeds it.
///
/// Luby indices are stepped with the classic pair rule: emit `v`; if
/// `u & u.wrapping_neg() == v` advance to `(u+1, 1)`, else to `(u, 2v)`.
pub fn luby_limits(config: LubyConfig) -> impl Iterator<Item = Mi> {
    let (mut u, mut v): (Mi, Mi) = (1, 1);
    std::iter::from_fn(move || {
        let limit = config.base * v;
        if limit == config.cap {
            (u, v) = (1, 1);
        } else if u & u.wrapping_neg() == v {
            (u, v) = (u + 1, 1);
        } else {
            v *= 2;
        }
        Some(limit)
    })
}

/// Outcome of one forgotten-half sampling round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgottenSample {
    pub forgotten: BTreeSet<ProblemId>,
    pub remaining: BTreeSet<ProblemId>,
    pub pick: Option<ProblemId>,
}

/// Forgets a uniformly random ⌊|P|/2⌋-sized half of `problems`, restricts
/// the strategy pool to those whose witness survives in the remaining half,
/// and picks uniformly among the remaining problems those strategies do not
/// cover. `pick` is `None` when everything remaining is covered.
///
/// The sampler is fully determined by `seed`.
///
/// # Panics
///
/// Panics if `problems` is empty.
pub fn sample_uncovered_problem(
    problems: &BTreeSet<ProblemId>,
    metas: &[StrategyMeta],
    matrix: &EvaluationMatrix,
    seed: u64,
) -> ForgottenSample {
    assert!(!problems.is_empty(), "cannot sample from an empty problem set");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<&ProblemId> = problems.iter().collect();
    pool.shuffle(&mut rng);
    let half = problems.len() / 2;
    let forgotten: BTreeSet<ProblemId> = pool[..half].iter().map(|&p| p.clone()).collect();
    let remaining: BTreeSet<ProblemId> =
        pool[half..].iter().map(|&p| p.clone()).collect();

    let mut covered: BTreeSet<&ProblemId> = BTreeSet::new();
    for meta in metas {
        let witness_remains = meta.witness.as_ref().is_some_and(|w| remaining.contains(w));
        if !witness_remains {
            continue;
        }
        if let Some(s) = matrix.strategy_index(&meta.id) {
            for (p, _) in matrix.strategy_det_times(s) {
                covered.insert(matrix.problem_id(p));
            }
        }
    }
    let candidates: Vec<&ProblemId> =
        remaining.iter().filter(|p| !covered.contains(p)).collect();
    let pick = candidates.choose(&mut rng).map(|&p| p.clone());
    ForgottenSample { forgotten, remaining, pick }
}
