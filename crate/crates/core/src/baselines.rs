//! Reference schedule constructors and cumulative-performance curves.
//!
//! The constructors here are the classic points of comparison for the greedy
//! builder: the p-SETHEO-style step-growth loop ([`psetheo`]), equally sized
//! bucket schedules ([`bucket_schedule`]), and the virtual best strategy
//! selector ([`vbss_curve`]). Curves are plain `time,solved` step functions,
//! exported as CSV for external plotting.

use std::collections::BTreeSet;
use std::io;

use serde::{Deserialize, Serialize};

use crate::greedy::Journal;
use crate::model::{
    simulate_pre_schedule, vbss_times, EvaluationMatrix, Mi, ModelError, PreSchedule, Schedule,
};

/// Parameters of the p-SETHEO growth loop.
///
/// `delta_t` is the initial extension step ΔT, `l` the quantization of the
/// step growth, and `budget` the total time T. Both `delta_t` and `l` must
/// be at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PSetheoParams {
    pub delta_t: Mi,
    pub l: Mi,
    pub budget: Mi,
}

/// One step of a cumulative-performance curve: after `time` total schedule
/// Mi, `solved` problems are covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub time: Mi,
    pub solved: usize,
}

/// p-SETHEO-style construction: starting from all-zero limits, repeatedly
/// extend by ΔT the strategy whose extension covers the most additional
/// problems (ties by strategy id). When no extension gains anything, ΔT
/// grows by ⌈T/l⌉. Stops once every coverable problem is covered or the
/// next extension would not fit (Σ t_s + ΔT > T).
///
/// # Panics
///
/// Panics if `delta_t` or `l` is zero.
pub fn psetheo(matrix: &EvaluationMatrix, params: &PSetheoParams) -> PreSchedule {
    assert!(params.delta_t >= 1, "p-SETHEO step ΔT must be at least 1");
    assert!(params.l >= 1, "p-SETHEO quantization l must be at least 1");

    let det: Vec<Vec<(usize, Mi)>> =
        (0..matrix.n_strategies()).map(|s| matrix.strategy_det_times(s)).collect();
    let coverable: BTreeSet<usize> =
        det.iter().flatten().map(|&(p, _)| p).collect();

    let mut limits = vec![0 as Mi; matrix.n_strategies()];
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut dt = params.delta_t;
    let mut total = 0 as Mi;
    while covered.len() < coverable.len() && total + dt <= params.budget {
        let gain = |s: usize| {
            det[s]
                .iter()
                .filter(|&&(p, t)| t <= limits[s] + dt && !covered.contains(&p))
                .count()
        };
        // strategies are in id order, so max_by with ≥ keeps the earliest
        let best = (0..matrix.n_strategies())
            .map(|s| (s, gain(s)))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
        match best {
            Some((s, g)) if g > 0 => {
                limits[s] += dt;
                total += dt;
                covered.extend(
                    det[s].iter().filter(|&&(_, t)| t <= limits[s]).map(|&(p, _)| p),
                );
            }
            _ => dt += params.budget.div_ceil(params.l),
        }
    }
    limits
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t > 0)
        .map(|(s, &t)| (matrix.strategy_id(s).clone(), t))
        .collect()
}

/// Equally sized bucket schedule: repeatedly appends the strategy covering
/// the most still-uncovered problems within `bucket` Mi, each strategy at
/// most once, until the budget is exhausted or no strategy adds coverage.
///
/// # Panics
///
/// Panics if `bucket` is zero.
pub fn bucket_schedule(matrix: &EvaluationMatrix, bucket: Mi, budget: Mi) -> Schedule {
    assert!(bucket >= 1, "bucket size must be at least 1");
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut used = vec![false; matrix.n_strategies()];
    let mut slices = Vec::new();
    let mut total = 0 as Mi;
    while total + bucket <= budget {
        let best = (0..matrix.n_strategies())
            .filter(|&s| !used[s])
            .map(|s| {
                let gain = matrix
                    .strategy_det_times(s)
                    .into_iter()
                    .filter(|&(p, t)| t <= bucket && !covered.contains(&p))
                    .count();
                (s, gain)
            })
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
        match best {
            Some((s, g)) if g > 0 => {
                used[s] = true;
                total += bucket;
                covered.extend(
                    matrix
                        .strategy_det_times(s)
                        .into_iter()
                        .filter(|&(_, t)| t <= bucket)
                        .map(|(p, _)| p),
                );
                slices.push(crate::model::Slice {
                    strategy: matrix.strategy_id(s).clone(),
                    limit: bucket,
                });
            }
            _ => break,
        }
    }
    Schedule { slices }
}

/// Cumulative curve of the virtual best strategy selector: one point per
/// distinct finite per-problem best time.
pub fn vbss_curve(matrix: &EvaluationMatrix) -> Vec<CurvePoint> {
    let mut times: Vec<Mi> = vbss_times(matrix).into_values().flatten().collect();
    times.sort_unstable();
    let mut curve = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        if i + 1 == times.len() || times[i + 1] != t {
            curve.push(CurvePoint { time: t, solved: i + 1 });
        }
    }
    curve
}

/// Curve of a construction run: one point per journal entry at its
/// cumulative time, counting all first-time covers up to that entry.
pub fn curve_from_journal(journal: &Journal) -> Vec<CurvePoint> {
    let mut solved = 0;
    journal
        .entries
        .iter()
        .map(|e| {
            solved += e.newly_covered.len();
            CurvePoint { time: e.cumulative, solved }
        })
        .collect()
}

/// Curve of an ordered schedule: slice-by-slice prefix simulation on the
/// matrix.
pub fn curve_from_schedule(
    schedule: &Schedule,
    matrix: &EvaluationMatrix,
) -> Result<Vec<CurvePoint>, ModelError> {
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut total = 0 as Mi;
    let mut curve = Vec::new();
    for slice in &schedule.slices {
        let s = matrix
            .strategy_index(&slice.strategy)
            .ok_or_else(|| ModelError::UnknownStrategy(slice.strategy.as_str().into()))?;
        covered.extend(
            matrix
                .strategy_det_times(s)
                .into_iter()
                .filter(|&(_, t)| t <= slice.limit)
                .map(|(p, _)| p),
        );
        total += slice.limit;
        curve.push(CurvePoint { time: total, solved: covered.len() });
    }
    Ok(curve)
}

/// Step-function value of a curve at `time`: the `solved` of the last point
/// at or before it.
pub fn curve_value_at(curve: &[CurvePoint], time: Mi) -> usize {
    match curve.partition_point(|p| p.time <= time) {
        0 => 0,
        i => curve[i - 1].solved,
    }
}

/// Whether `upper` solves at least as much as `lower` at every time.
pub fn curve_dominates(upper: &[CurvePoint], lower: &[CurvePoint]) -> bool {
    lower.iter().all(|p| curve_value_at(upper, p.time) >= p.solved)
}

/// Writes a curve as CSV with header `time,solved`.
pub fn write_curve_csv<W: io::Write>(curve: &[CurvePoint], writer: W) -> Result<(), ModelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "solved"])?;
    for p in curve {
        w.write_record([p.time.to_string(), p.solved.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Coverage of the p-SETHEO result, for reporting.
pub fn psetheo_coverage(matrix: &EvaluationMatrix, pre: &PreSchedule) -> usize {
    simulate_pre_schedule(matrix, pre).map(|c| c.len()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{construct_greedy, Budget, ExtensionMode, RegularizationParams};
    use crate::model::fixtures::*;
    use crate::model::{simulate_schedule, Status};

    fn points(pairs: &[(Mi, usize)]) -> Vec<CurvePoint> {
        pairs.iter().map(|&(time, solved)| CurvePoint { time, solved }).collect()
    }

    #[test]
    fn psetheo_toy1_small_step() {
        let params = PSetheoParams { delta_t: 1, l: 8, budget: 8 };
        let pre = psetheo(&toy1(), &params);
        let expect: PreSchedule = [("A".into(), 5), ("B".into(), 3)].into_iter().collect();
        assert_eq!(pre, expect);
        assert_eq!(psetheo_coverage(&toy1(), &pre), 3);
    }

    #[test]
    fn psetheo_toy1_single_step() {
        let params = PSetheoParams { delta_t: 8, l: 1, budget: 8 };
        let pre = psetheo(&toy1(), &params);
        let expect: PreSchedule = [("A".into(), 8)].into_iter().collect();
        assert_eq!(pre, expect);
        assert_eq!(psetheo_coverage(&toy1(), &pre), 2);
    }

    #[test]
    fn psetheo_empty_matrix() {
        let m = EvaluationMatrix::builder().build();
        let params = PSetheoParams { delta_t: 1, l: 1, budget: 10 };
        assert!(psetheo(&m, &params).is_empty());
    }

    #[test]
    fn bucket_schedule_examples() {
        let sched = bucket_schedule(&toy1(), 3, 9);
        assert_eq!(sched, schedule(&[("A", 3), ("B", 3)]));
        assert_eq!(
            simulate_schedule(&toy1(), &sched).unwrap().len(),
            2 // {p1, p3}
        );
        assert_eq!(bucket_schedule(&toy1(), 5, 5), schedule(&[("A", 5)]));
        assert!(bucket_schedule(&toy1(), 10, 9).slices.is_empty());
    }

    #[test]
    fn vbss_curve_examples() {
        assert_eq!(vbss_curve(&toy1()), points(&[(2, 1), (3, 2), (5, 3)]));
        assert_eq!(vbss_curve(&toy2()), points(&[(2, 1), (6, 4)]));
        let mut b = EvaluationMatrix::builder();
        b.observe("A", "p1", Status::Tmo, 9);
        assert!(vbss_curve(&b.build()).is_empty());
    }

    #[test]
    fn journal_curve_from_unbounded_greedy() {
        let (_, journal) = construct_greedy(
            &toy1(),
            Budget::Unbounded,
            &RegularizationParams::default(),
            ExtensionMode::Full,
        )
        .unwrap();
        assert_eq!(curve_from_journal(&journal), points(&[(2, 1), (5, 2), (8, 3)]));
        assert!(curve_from_journal(&Journal { entries: vec![] }).is_empty());
    }

    #[test]
    fn schedule_curve_by_prefix_simulation() {
        let sched = schedule(&[("B", 3), ("A", 5)]);
        let curve = curve_from_schedule(&sched, &toy1()).unwrap();
        assert_eq!(curve, points(&[(3, 1), (8, 3)]));
    }

    #[test]
    fn curve_csv_layout() {
        let mut out = Vec::new();
        write_curve_csv(&points(&[(2, 1), (5, 3)]), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "time,solved\n2,1\n5,3\n");
    }

    #[test]
    fn curve_value_steps() {
        let c = points(&[(2, 1), (5, 3)]);
        assert_eq!(curve_value_at(&c, 1), 0);
        assert_eq!(curve_value_at(&c, 2), 1);
        assert_eq!(curve_value_at(&c, 4), 1);
        assert_eq!(curve_value_at(&c, 9), 3);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn small_matrix() -> impl Strategy<Value = EvaluationMatrix> {
            proptest::collection::vec((0usize..4, 0usize..8, 1u64..=16), 1..20).prop_map(|obs| {
                let mut b = EvaluationMatrix::builder();
                for (s, p, t) in obs {
                    b.observe(format!("s{s}"), format!("p{p}"), Status::Sol, t);
                }
                b.build()
            })
        }

        fn assert_monotone(curve: &[CurvePoint]) {
            for w in curve.windows(2) {
                assert!(w[0].time < w[1].time, "times must strictly increase");
                assert!(w[0].solved <= w[1].solved, "solved must not decrease");
            }
        }

        proptest! {
            #[test]
            fn psetheo_stays_within_budget(m in small_matrix(), dt in 1u64..=6, l in 1u64..=6, budget in 0u64..=40) {
                let pre = psetheo(&m, &PSetheoParams { delta_t: dt, l, budget });
                prop_assert!(pre.total() <= budget);
            }

            #[test]
            fn curves_are_monotone_and_end_at_full_coverage(m in small_matrix(), budget in 1u64..=40) {
                let vbss = vbss_curve(&m);
                assert_monotone(&vbss);

                let sched = bucket_schedule(&m, 4, budget);
                let curve = curve_from_schedule(&sched, &m).unwrap();
                assert_monotone(&curve);
                let last = curve.last().map_or(0, |p| p.solved);
                prop_assert_eq!(last, simulate_schedule(&m, &sched).unwrap().len());
            }

            #[test]
            fn vbss_dominates_every_schedule_curve(m in small_matrix(), budget in 1u64..=40) {
                let vbss = vbss_curve(&m);
                let (built, journal) = construct_greedy(
                    &m,
                    Budget::Bounded(budget),
                    &RegularizationParams::default(),
                    ExtensionMode::Full,
                )
                .unwrap();
                prop_assert!(curve_dominates(&vbss, &curve_from_journal(&journal)));
                let ordered = crate::greedy::order_slices(&built.to_pre_schedule(), &m).unwrap();
                prop_assert!(curve_dominates(&vbss, &curve_from_schedule(&ordered, &m).unwrap()));
                let buckets = bucket_schedule(&m, 4, budget);
                prop_assert!(curve_dominates(&vbss, &curve_from_schedule(&buckets, &m).unwrap()));
            }
        }
    }
}
