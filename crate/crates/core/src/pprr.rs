//! Predicted Proportional Round Robin as an exact fluid simulation.
//!
//! The policy is re-evaluated at time 0 and whenever one or more jobs
//! complete. With `g` unoccupied machines and the `h` uncompleted
//! non-mandatory jobs sorted by predicted time (largest first), the first
//! `d` of them become mandatory, each pinned to its own machine at speed 1
//! until it completes. The remaining `h - d` jobs share the other `g - d`
//! machines, each at speed `(g - d) * q_j / (sum of their q)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DiscretePreemptiveSchedule, FluidSchedule, Instance, Segment};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PprrError {
    #[error("predicted times must be sorted non-increasingly (position {position})")]
    Unsorted { position: usize },
    #[error("predicted time at position {position} is not positive")]
    NonPositive { position: usize },
    #[error("interval {interval}: speed {speed} of job {job} is outside [0, 1]")]
    SpeedOutOfRange { interval: usize, job: usize, speed: Rational },
    #[error("interval {interval}: total speed {total} exceeds {machines} machines")]
    CapacityExceeded { interval: usize, total: Rational, machines: usize },
    #[error("fluid schedule breakpoints are malformed")]
    BadBreakpoints,
}

/// Which predicted times drive the mandatory count and the shared speeds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionMode {
    /// The original predictions `q_j`, as the policy is stated.
    #[default]
    Original,
    /// Experimental: `q_j` minus the work already received, re-estimated as
    /// `q_j` once a job overruns its prediction. Not covered by the PPRR bound.
    Residual,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PprrConfig {
    pub predictions: PredictionMode,
}

/// One re-evaluation of the policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PprrPhase {
    pub start: Rational,
    /// Unoccupied machines `g`.
    pub unoccupied: usize,
    /// Uncompleted non-mandatory jobs, largest prediction first (`h` of them).
    pub pool: Vec<usize>,
    /// Number `d` of pool jobs made mandatory in this phase (a prefix of `pool`).
    pub mandatory: usize,
    /// Speeds of the `h - d` shared jobs.
    pub shared_speeds: BTreeMap<usize, Rational>,
}

impl PprrPhase {
    pub fn newly_mandatory(&self) -> &[usize] {
        &self.pool[..self.mandatory]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PprrRun {
    pub fluid: FluidSchedule,
    pub phases: Vec<PprrPhase>,
    /// Machine each mandatory job was pinned to.
    pub pinned: BTreeMap<usize, usize>,
}

impl PprrRun {
    pub fn makespan(&self) -> Rational {
        self.fluid.makespan()
    }
}

/// Largest `k` in `1..=min(g, h)` with `(g - k) * q_k >= q_{k+1} + ... + q_h`
/// (1-based), or 0 when no `k` qualifies.
pub fn compute_mandatory_count(g: usize, predicted: &[Rational]) -> Result<usize, PprrError> {
    for (i, q) in predicted.iter().enumerate() {
        if !q.is_positive() {
            return Err(PprrError::NonPositive { position: i });
        }
        if i > 0 && *q > predicted[i - 1] {
            return Err(PprrError::Unsorted { position: i });
        }
    }
    let h = predicted.len();
    // suffix[k] = q_{k+1} + ... + q_h with 0-based storage.
    let mut suffix = vec![Rational::zero(); h + 1];
    for i in (0..h).rev() {
        suffix[i] = &suffix[i + 1] + &predicted[i];
    }
    let d = (1..=g.min(h))
        .rev()
        .find(|&k| Rational::from(g - k) * &predicted[k - 1] >= suffix[k])
        .unwrap_or(0);
    Ok(d)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Shared,
    Mandatory,
    Done,
}

pub fn run_pprr(instance: &Instance) -> PprrRun {
    run_pprr_with(instance, PprrConfig::default())
}

pub fn run_pprr_with(instance: &Instance, config: PprrConfig) -> PprrRun {
    let n = instance.len();
    let m = instance.machines();
    let mut remaining: Vec<Rational> = instance.jobs().iter().map(|j| j.actual.clone()).collect();
    let mut status = vec![Status::Shared; n];
    // occupant[k] = mandatory job pinned to machine k.
    let mut occupant: Vec<Option<usize>> = vec![None; m];
    let mut pinned = BTreeMap::new();
    let mut now = Rational::zero();
    let mut breakpoints = vec![Rational::zero()];
    let mut intervals = Vec::new();
    let mut phases = Vec::new();

    loop {
        let estimate = |j: usize| -> Rational {
            let q = instance.predicted(j);
            match config.predictions {
                PredictionMode::Original => q.clone(),
                PredictionMode::Residual => {
                    let received = instance.actual(j) - &remaining[j];
                    if received < *q {
                        q - &received
                    } else {
                        q.clone()
                    }
                }
            }
        };
        let mut pool: Vec<(usize, Rational)> = (0..n)
            .filter(|&j| status[j] == Status::Shared)
            .map(|j| (j, estimate(j)))
            .collect();
        pool.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let free: Vec<usize> = (0..m).filter(|&k| occupant[k].is_none()).collect();
        let g = free.len();
        let estimates: Vec<Rational> = pool.iter().map(|(_, q)| q.clone()).collect();
        let d = compute_mandatory_count(g, &estimates).expect("pool is sorted and positive");

        for (i, &(job, _)) in pool.iter().take(d).enumerate() {
            status[job] = Status::Mandatory;
            occupant[free[i]] = Some(job);
            pinned.insert(job, free[i]);
        }
        let shared = &pool[d..];
        let shared_total: Rational = shared.iter().map(|(_, q)| q).sum();
        let share = Rational::from(g - d);
        let shared_speeds: BTreeMap<usize, Rational> = shared
            .iter()
            .map(|(j, q)| (*j, &share * q / &shared_total))
            .collect();

        let mut speeds = shared_speeds.clone();
        for &job in occupant.iter().flatten() {
            speeds.insert(job, Rational::one());
        }
        speeds.retain(|_, s| s.is_positive());
        if speeds.is_empty() {
            break;
        }

        let step = speeds
            .iter()
            .map(|(&j, s)| &remaining[j] / s)
            .min()
            .expect("speeds nonempty");
        phases.push(PprrPhase {
            start: now.clone(),
            unoccupied: g,
            pool: pool.iter().map(|(j, _)| *j).collect(),
            mandatory: d,
            shared_speeds,
        });
        for (&job, s) in &speeds {
            remaining[job] -= s * &step;
            if remaining[job].is_zero() {
                if status[job] == Status::Mandatory {
                    let machine = pinned[&job];
                    occupant[machine] = None;
                }
                status[job] = Status::Done;
            }
        }
        now += &step;
        breakpoints.push(now.clone());
        intervals.push(speeds);
    }

    PprrRun {
        fluid: FluidSchedule {
            breakpoints,
            intervals,
        },
        phases,
        pinned,
    }
}

/// Turns a fluid schedule into explicit machine segments by wrap-around
/// packing inside every interval. Jobs are packed in ascending id order;
/// each job's quantum `speed * length` is at most the interval length, so
/// a wrapped job's two pieces never overlap in time. Contiguous pieces of
/// the same job on the same machine are merged.
pub fn realize_fluid(fluid: &FluidSchedule, machines: usize) -> Result<DiscretePreemptiveSchedule, PprrError> {
    let bps = &fluid.breakpoints;
    if bps.len() != fluid.intervals.len() + 1 || bps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PprrError::BadBreakpoints);
    }
    let one = Rational::one();
    let capacity = Rational::from(machines);
    let mut segments: Vec<Segment> = Vec::new();
    // Index of the last segment per machine, for merging.
    let mut last_on: Vec<Option<usize>> = vec![None; machines];

    for (k, speeds) in fluid.intervals.iter().enumerate() {
        let (a, b) = (&bps[k], &bps[k + 1]);
        let len = b - a;
        let mut total = Rational::zero();
        for (&job, s) in speeds {
            if s.is_negative() || *s > one {
                return Err(PprrError::SpeedOutOfRange {
                    interval: k,
                    job,
                    speed: s.clone(),
                });
            }
            total += s;
        }
        if total > capacity {
            return Err(PprrError::CapacityExceeded {
                interval: k,
                total,
                machines,
            });
        }

        let mut machine = 0;
        let mut cursor = a.clone();
        let mut place = |job: usize, machine: usize, start: Rational, end: Rational| {
            if let Some(idx) = last_on[machine] {
                let prev = &mut segments[idx];
                if prev.job == job && prev.end == start {
                    prev.end = end;
                    return;
                }
            }
            last_on[machine] = Some(segments.len());
            segments.push(Segment { job, machine, start, end });
        };
        for (&job, s) in speeds {
            let mut work = s * &len;
            while work.is_positive() {
                let room = b - &cursor;
                if work < room {
                    let end = &cursor + &work;
                    place(job, machine, cursor.clone(), end.clone());
                    cursor = end;
                    work = Rational::zero();
                } else {
                    place(job, machine, cursor.clone(), b.clone());
                    work -= room;
                    machine += 1;
                    cursor = a.clone();
                }
            }
        }
    }
    Ok(DiscretePreemptiveSchedule { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from(x)).collect()
    }

    #[test]
    fn mandatory_count_examples() {
        assert_eq!(compute_mandatory_count(2, &ints(&[2, 1, 1])), Ok(1));
        assert_eq!(compute_mandatory_count(2, &ints(&[1, 1, 1])), Ok(0));
        assert_eq!(compute_mandatory_count(3, &ints(&[5, 4])), Ok(2));
        assert_eq!(compute_mandatory_count(3, &[]), Ok(0));
        assert_eq!(compute_mandatory_count(0, &ints(&[1])), Ok(0));
    }

    #[test]
    fn mandatory_count_rejects_bad_input() {
        assert_eq!(
            compute_mandatory_count(2, &ints(&[1, 2])),
            Err(PprrError::Unsorted { position: 1 })
        );
        assert_eq!(
            compute_mandatory_count(2, &ints(&[1, 0])),
            Err(PprrError::NonPositive { position: 1 })
        );
    }

    /// Direct transcription of the defining set, scanned upward.
    fn mandatory_count_by_scan(g: usize, q: &[Rational]) -> usize {
        let mut best = 0;
        for k in 1..=g.min(q.len()) {
            let tail: Rational = q[k..].iter().sum();
            if Rational::from(g - k) * &q[k - 1] >= tail {
                best = k;
            }
        }
        best
    }

    #[test]
    fn mandatory_count_agrees_with_scan() {
        let mut q: Vec<Rational> = (1..=9).map(|i| rat(i * i % 7 + 1, (i % 3) + 1)).collect();
        q.sort_by(|a, b| b.cmp(a));
        for g in 1..8 {
            for h in 0..=q.len() {
                assert_eq!(
                    compute_mandatory_count(g, &q[..h]).unwrap(),
                    mandatory_count_by_scan(g, &q[..h]),
                    "g={g} h={h}"
                );
            }
        }
    }

    #[test]
    fn one_mandatory_two_shared() {
        let inst = Instance::from_integers(2, &[2, 1, 1], &[2, 1, 1]).unwrap();
        let run = run_pprr(&inst);
        assert_eq!(run.phases[0].mandatory, 1);
        assert_eq!(run.phases[0].shared_speeds[&1], rat(1, 2));
        assert_eq!(run.phases[0].shared_speeds[&2], rat(1, 2));
        assert_eq!(run.makespan(), rat(2, 1));
        assert_eq!(run.fluid.breakpoints, vec![rat(0, 1), rat(2, 1)]);
        assert_eq!(run.fluid.validate(&inst), Ok(()));
    }

    #[test]
    fn all_shared() {
        let inst = Instance::from_integers(2, &[1, 1, 1], &[1, 1, 1]).unwrap();
        let run = run_pprr(&inst);
        assert_eq!(run.phases[0].mandatory, 0);
        assert!(run.phases[0].shared_speeds.values().all(|s| *s == rat(2, 3)));
        assert_eq!(run.makespan(), rat(3, 2));
    }

    #[test]
    fn predicted_and_actual_diverge() {
        let inst = Instance::from_integers(2, &[1, 1, 1], &[2, 1, 1]).unwrap();
        let run = run_pprr(&inst);
        assert_eq!(run.phases.len(), 2);
        assert_eq!(run.phases[0].mandatory, 1);
        assert_eq!(run.phases[0].newly_mandatory(), &[0]);
        assert_eq!(run.phases[1].start, rat(1, 1));
        assert_eq!((run.phases[1].unoccupied, run.phases[1].pool.len()), (2, 2));
        assert_eq!(run.phases[1].mandatory, 2);
        assert_eq!(run.makespan(), rat(3, 2));
        assert_eq!(run.fluid.validate(&inst), Ok(()));
    }

    #[test]
    fn residual_mode_runs_to_completion() {
        let inst = Instance::from_integers(3, &[5, 1, 2, 7, 3], &[2, 2, 4, 3, 3]).unwrap();
        let run = run_pprr_with(
            &inst,
            PprrConfig {
                predictions: PredictionMode::Residual,
            },
        );
        assert_eq!(run.fluid.validate(&inst), Ok(()));
    }

    #[test]
    fn realize_single_interval() {
        let fluid = FluidSchedule {
            breakpoints: vec![rat(0, 1), rat(2, 1)],
            intervals: vec![[(0, rat(1, 1)), (1, rat(1, 2)), (2, rat(1, 2))].into_iter().collect()],
        };
        let d = realize_fluid(&fluid, 2).unwrap();
        let shown: Vec<String> = d.segments.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, vec!["M0:J0[0,2]", "M1:J1[0,1]", "M1:J2[1,2]"]);
    }

    #[test]
    fn realize_wraps_a_job_across_machines() {
        let fluid = FluidSchedule {
            breakpoints: vec![rat(0, 1), rat(3, 2)],
            intervals: vec![[(0, rat(2, 3)), (1, rat(2, 3)), (2, rat(2, 3))].into_iter().collect()],
        };
        let d = realize_fluid(&fluid, 2).unwrap();
        let shown: Vec<String> = d.segments.iter().map(|s| s.to_string()).collect();
        assert_eq!(
            shown,
            vec!["M0:J0[0,1]", "M0:J1[1,3/2]", "M1:J1[0,1/2]", "M1:J2[1/2,3/2]"]
        );
        let inst = Instance::from_integers(2, &[1, 1, 1], &[1, 1, 1]).unwrap();
        assert_eq!(d.validate(&inst), Ok(()));
    }

    #[test]
    fn realize_single_job_is_identity() {
        let fluid = FluidSchedule {
            breakpoints: vec![rat(0, 1), rat(5, 1)],
            intervals: vec![[(0, rat(1, 1))].into_iter().collect()],
        };
        let d = realize_fluid(&fluid, 2).unwrap();
        assert_eq!(d.segments.len(), 1);
        assert_eq!(d.makespan(), rat(5, 1));
    }

    #[test]
    fn realize_rejects_overfull_interval() {
        let fluid = FluidSchedule {
            breakpoints: vec![rat(0, 1), rat(1, 1)],
            intervals: vec![[(0, rat(1, 1)), (1, rat(1, 1)), (2, rat(1, 2))].into_iter().collect()],
        };
        assert!(matches!(realize_fluid(&fluid, 2), Err(PprrError::CapacityExceeded { .. })));
        let fast = FluidSchedule {
            breakpoints: vec![rat(0, 1), rat(1, 1)],
            intervals: vec![[(0, rat(3, 2))].into_iter().collect()],
        };
        assert!(matches!(realize_fluid(&fast, 2), Err(PprrError::SpeedOutOfRange { .. })));
    }

    #[test]
    fn realize_merges_across_intervals() {
        let inst = Instance::from_integers(2, &[2, 1, 1], &[2, 1, 1]).unwrap();
        let fluid = FluidSchedule {
            breakpoints: vec![rat(0, 1), rat(1, 1), rat(2, 1)],
            intervals: vec![
                [(0, rat(1, 1)), (1, rat(1, 1))].into_iter().collect(),
                [(0, rat(1, 1)), (2, rat(1, 1))].into_iter().collect(),
            ],
        };
        let d = realize_fluid(&fluid, 2).unwrap();
        assert_eq!(d.validate(&inst), Ok(()));
        assert_eq!(d.on_machine(0).len(), 1);
    }
}
