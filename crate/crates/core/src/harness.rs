//! Train/test evaluation methodology for comparing constructors.
//!
//! A schedule must be judged on problems it has never seen: [`kfold_splits`]
//! partitions the problem set, [`training_strategy_set`] enforces witness
//! hygiene (a strategy whose witness problem falls into the test set is
//! banned from training), [`evaluate_split`] builds a schedule on the
//! training restriction and scores it on both halves with rescaling back to
//! the full set size, and [`cross_validate`] aggregates folds into mean and
//! sample standard deviation. Folds run in parallel; aggregation is
//! order-independent.

use std::collections::BTreeSet;
use std::io;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{bucket_schedule, psetheo, PSetheoParams};
use crate::dist::StrategyMeta;
use crate::exact::{solve_exact, ExactError, ExactLimits};
use crate::greedy::{
    construct_greedy, construct_probabilistic, order_slices, Budget, ExtensionMode, GreedyError,
    RegularizationParams,
};
use crate::model::{
    simulate_schedule, EvaluationMatrix, Mi, ModelError, ProblemId, Schedule, StrategyId,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(
        "k-fold split needs 2 ≤ k ≤ |problems| and rounds ≥ 1 \
         (got k={k}, rounds={rounds}, |problems|={n})"
    )]
    BadSplit { k: usize, rounds: usize, n: usize },
    #[error("empty training strategy set for this split")]
    EmptyTrainingSet,
    #[error("all {0} folds were skipped; first error: {1}")]
    AllFoldsSkipped(usize, String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Greedy(#[from] GreedyError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// One train/test partition of the problem set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: BTreeSet<ProblemId>,
    pub test: BTreeSet<ProblemId>,
}

/// `rounds` independent random partitions into `k` near-equal folds, each
/// fold serving once as the test set. Deterministic under `seed`.
pub fn kfold_splits(
    problems: &BTreeSet<ProblemId>,
    k: usize,
    rounds: usize,
    seed: u64,
) -> Result<Vec<SplitSpec>, HarnessError> {
    if k < 2 || k > problems.len() || rounds < 1 {
        return Err(HarnessError::BadSplit { k, rounds, n: problems.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(k * rounds);
    for _ in 0..rounds {
        let mut pool: Vec<&ProblemId> = problems.iter().collect();
        pool.shuffle(&mut rng);
        let base = pool.len() / k;
        let extra = pool.len() % k;
        let mut start = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            let test: BTreeSet<ProblemId> =
                pool[start..start + size].iter().map(|&p| p.clone()).collect();
            let train = problems.difference(&test).cloned().collect();
            splits.push(SplitSpec { train, test });
            start += size;
        }
    }
    Ok(splits)
}

/// Strategies admissible for training on `train`: those whose witness
/// problem lies inside it. Strategies without a witness are excluded unless
/// `include_unwitnessed` relaxes the hygiene rule.
pub fn training_strategy_set(
    metas: &[StrategyMeta],
    train: &BTreeSet<ProblemId>,
    include_unwitnessed: bool,
) -> BTreeSet<StrategyId> {
    metas
        .iter()
        .filter(|m| match &m.witness {
            Some(w) => train.contains(w),
            None => include_unwitnessed,
        })
        .map(|m| m.id.clone())
        .collect()
}

/// Strategies discovered no later than `cutoff` days; strategies without a
/// timestamp are excluded.
pub fn filter_by_timestamp(metas: &[StrategyMeta], cutoff: f64) -> BTreeSet<StrategyId> {
    metas
        .iter()
        .filter(|m| m.discovered_at.is_some_and(|d| d <= cutoff))
        .map(|m| m.id.clone())
        .collect()
}

/// Which constructor a fold runs, with its parameters. Serialized into
/// summaries so reports are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constructor", rename_all = "kebab-case")]
pub enum ConstructorConfig {
    Greedy { params: RegularizationParams, mode: ExtensionMode },
    Probabilistic { params: RegularizationParams, epsilon: f64 },
    Exact { max_combinations: u64 },
    Psetheo { delta_t: Mi, l: Mi },
    Buckets { bucket: Mi },
}

impl ConstructorConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ConstructorConfig::Greedy { .. } => "greedy",
            ConstructorConfig::Probabilistic { .. } => "probabilistic",
            ConstructorConfig::Exact { .. } => "exact",
            ConstructorConfig::Psetheo { .. } => "psetheo",
            ConstructorConfig::Buckets { .. } => "buckets",
        }
    }

    /// Builds a schedule on `matrix` within `budget`.
    pub fn construct(
        &self,
        matrix: &EvaluationMatrix,
        budget: Mi,
    ) -> Result<Schedule, HarnessError> {
        match self {
            ConstructorConfig::Greedy { params, mode } => {
                let (built, _) = construct_greedy(matrix, Budget::Bounded(budget), params, *mode)?;
                Ok(order_slices(&built.to_pre_schedule(), matrix)?)
            }
            ConstructorConfig::Probabilistic { params, epsilon } => {
                let (schedule, _) =
                    construct_probabilistic(matrix, Budget::Bounded(budget), params, *epsilon)?;
                Ok(schedule)
            }
            ConstructorConfig::Exact { max_combinations } => {
                let limits =
                    ExactLimits { max_combinations: *max_combinations, ..Default::default() };
                let (pre, _) = solve_exact(matrix, budget, &limits)?;
                Ok(order_slices(&pre, matrix)?)
            }
            ConstructorConfig::Psetheo { delta_t, l } => {
                let params = PSetheoParams { delta_t: *delta_t, l: *l, budget };
                Ok(order_slices(&psetheo(matrix, &params), matrix)?)
            }
            ConstructorConfig::Buckets { bucket } => Ok(bucket_schedule(matrix, *bucket, budget)),
        }
    }
}

/// Outcome of one fold: raw and rescaled coverage on both halves, the
/// schedule itself, and the wall-clock seconds construction took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub train_solved: usize,
    pub test_solved: usize,
    pub train_rescaled: f64,
    /// Absent for splits with an empty test half.
    pub test_rescaled: Option<f64>,
    pub schedule: Schedule,
    pub fit_seconds: f64,
}

/// Builds a schedule on the hygienic training restriction and scores it.
///
/// The training matrix is `matrix` restricted to the admissible strategies
/// and `split.train`; test coverage simulates the same schedule against the
/// full matrix rows restricted to `split.test` — test problems stay unseen
/// during construction, which is exactly the leakage boundary. Both counts
/// are rescaled by |P| / |subset|.
pub fn evaluate_split(
    matrix: &EvaluationMatrix,
    metas: &[StrategyMeta],
    split: &SplitSpec,
    config: &ConstructorConfig,
    budget: Mi,
    include_unwitnessed: bool,
) -> Result<FoldResult, HarnessError> {
    let admissible = training_strategy_set(metas, &split.train, include_unwitnessed);
    let train_matrix = matrix.restrict(Some(&admissible), Some(&split.train));
    if train_matrix.n_strategies() == 0 {
        return Err(HarnessError::EmptyTrainingSet);
    }

    let started = Instant::now();
    let schedule = config.construct(&train_matrix, budget)?;
    let fit_seconds = started.elapsed().as_secs_f64();

    let train_solved = simulate_schedule(&train_matrix, &schedule)?.len();
    let test_matrix = matrix.restrict(None, Some(&split.test));
    let test_solved = simulate_schedule(&test_matrix, &schedule)?.len();

    let full = matrix.n_problems() as f64;
    Ok(FoldResult {
        train_solved,
        test_solved,
        train_rescaled: train_solved as f64 * full / split.train.len() as f64,
        test_rescaled: (!split.test.is_empty())
            .then(|| test_solved as f64 * full / split.test.len() as f64),
        schedule,
        fit_seconds,
    })
}

/// Aggregate over all folds of a cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub config: ConstructorConfig,
    pub k: usize,
    pub rounds: usize,
    pub seed: u64,
    pub budget: Mi,
    pub folds: Vec<FoldResult>,
    /// Folds dropped because their training strategy set was empty.
    pub skipped: usize,
    pub train_mean: f64,
    /// Sample (n−1) standard deviation of the rescaled train coverage.
    pub train_stddev_sample: f64,
    pub test_mean: f64,
    pub test_stddev_sample: f64,
    pub mean_fit_seconds: f64,
}

fn mean_and_sample_stddev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Runs `evaluate_split` over `rounds` × `k` folds (in parallel) and
/// aggregates. Folds with an empty training strategy set are counted in
/// `skipped`; if every fold is skipped the run fails.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    matrix: &EvaluationMatrix,
    metas: &[StrategyMeta],
    k: usize,
    rounds: usize,
    seed: u64,
    config: &ConstructorConfig,
    budget: Mi,
    include_unwitnessed: bool,
) -> Result<CvSummary, HarnessError> {
    let problems: BTreeSet<ProblemId> = matrix.problems().iter().cloned().collect();
    let splits = kfold_splits(&problems, k, rounds, seed)?;
    let outcomes: Vec<Result<FoldResult, HarnessError>> = splits
        .par_iter()
        .map(|split| evaluate_split(matrix, metas, split, config, budget, include_unwitnessed))
        .collect();

    let total = outcomes.len();
    let mut folds = Vec::with_capacity(total);
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(fold) => folds.push(fold),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e.to_string());
                }
            }
        }
    }
    if folds.is_empty() {
        return Err(HarnessError::AllFoldsSkipped(
            total,
            first_error.unwrap_or_else(|| "no folds produced".into()),
        ));
    }
    let skipped = total - folds.len();

    let train: Vec<f64> = folds.iter().map(|f| f.train_rescaled).collect();
    let test: Vec<f64> = folds.iter().filter_map(|f| f.test_rescaled).collect();
    let fit: Vec<f64> = folds.iter().map(|f| f.fit_seconds).collect();
    let (train_mean, train_stddev_sample) = mean_and_sample_stddev(&train);
    let (test_mean, test_stddev_sample) = mean_and_sample_stddev(&test);
    let (mean_fit_seconds, _) = mean_and_sample_stddev(&fit);

    Ok(CvSummary {
        config: config.clone(),
        k,
        rounds,
        seed,
        budget,
        folds,
        skipped,
        train_mean,
        train_stddev_sample,
        test_mean,
        test_stddev_sample,
        mean_fit_seconds,
    })
}

impl CvSummary {
    pub fn to_json_string(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(self).map_err(ModelError::from)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(ModelError::from)
    }
}

/// Writes one summary row per call, suitable for side-by-side tabulation of
/// several configurations.
pub fn write_cv_csv<W: io::Write>(
    summaries: &[&CvSummary],
    writer: W,
) -> Result<(), ModelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "constructor",
        "k",
        "rounds",
        "seed",
        "budget",
        "folds",
        "skipped",
        "train_mean",
        "train_stddev_sample",
        "test_mean",
        "test_stddev_sample",
        "mean_fit_seconds",
    ])?;
    for s in summaries {
        w.write_record([
            s.config.name().to_owned(),
            s.k.to_string(),
            s.rounds.to_string(),
            s.seed.to_string(),
            s.budget.to_string(),
            s.folds.len().to_string(),
            s.skipped.to_string(),
            format!("{:.3}", s.train_mean),
            format!("{:.3}", s.train_stddev_sample),
            format!("{:.3}", s.test_mean),
            format!("{:.3}", s.test_stddev_sample),
            format!("{:.6}", s.mean_fit_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}
