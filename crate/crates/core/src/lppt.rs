//! Longest Predicted Processing Time, simulated event by event.
//!
//! Jobs are dispatched in order of non-increasing predicted time (ties by
//! ascending id). At time 0 the first `min(m, n)` jobs start on machines
//! `0, 1, ...`; afterwards, whenever machines complete their jobs (completion
//! is governed by the *actual* time), the idle machines take the next jobs in
//! ascending machine order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::model::{Assignment, Instance, NonPreemptiveSchedule};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispatch {
    pub time: Rational,
    pub machine: usize,
    pub job: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpptTrace {
    pub dispatches: Vec<Dispatch>,
    pub schedule: NonPreemptiveSchedule,
}

impl LpptTrace {
    pub fn makespan(&self, instance: &Instance) -> Rational {
        self.schedule.makespan(instance)
    }
}

/// Job ids sorted by predicted time, largest first; ties by ascending id.
pub fn dispatch_order(instance: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| instance.predicted(b).cmp(instance.predicted(a)).then(a.cmp(&b)));
    order
}

pub fn run_lppt(instance: &Instance) -> LpptTrace {
    let m = instance.machines();
    let order = dispatch_order(instance);
    let mut pending = order.into_iter();
    let mut assignments: Vec<Option<Assignment>> = vec![None; instance.len()];
    let mut dispatches = Vec::with_capacity(instance.len());
    // Min-heap of (completion time, machine); equal times pop in machine order.
    let mut busy: BinaryHeap<Reverse<(Rational, usize)>> = BinaryHeap::new();

    let mut dispatch = |time: Rational, machine: usize, job: usize, busy: &mut BinaryHeap<_>| {
        busy.push(Reverse((&time + instance.actual(job), machine)));
        assignments[job] = Some(Assignment {
            machine,
            start: time.clone(),
        });
        dispatches.push(Dispatch { time, machine, job });
    };

    for machine in 0..m {
        match pending.next() {
            Some(job) => dispatch(Rational::zero(), machine, job, &mut busy),
            None => break,
        }
    }
    while let Some(job) = pending.next() {
        let Reverse((now, _)) = busy.peek().cloned().expect("some machine is busy");
        // Every machine finishing at `now` becomes idle before any dispatch.
        let mut idle = Vec::new();
        while let Some(Reverse((t, machine))) = busy.peek().cloned() {
            if t != now {
                break;
            }
            busy.pop();
            idle.push(machine);
        }
        let mut next = Some(job);
        for machine in idle {
            match next.take().or_else(|| pending.next()) {
                Some(j) => dispatch(now.clone(), machine, j, &mut busy),
                None => break,
            }
        }
    }

    LpptTrace {
        dispatches,
        schedule: NonPreemptiveSchedule {
            assignments: assignments
                .into_iter()
                .map(|a| a.expect("every job is dispatched"))
                .collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    /// Plain list scheduling: each job in turn goes to the least-loaded
    /// machine, lowest index on ties.
    fn list_schedule_makespan(instance: &Instance, order: &[usize]) -> Rational {
        let mut loads = vec![Rational::zero(); instance.machines()];
        for &job in order {
            let k = (0..loads.len())
                .min_by(|&a, &b| loads[a].cmp(&loads[b]).then(a.cmp(&b)))
                .unwrap();
            loads[k] += instance.actual(job);
        }
        loads.into_iter().max().unwrap()
    }

    #[test]
    fn equal_predictions_three_two_two() {
        let inst = Instance::from_integers(2, &[3, 2, 2], &[3, 2, 2]).unwrap();
        let trace = run_lppt(&inst);
        let a = &trace.schedule.assignments;
        assert_eq!((a[0].machine, a[0].start.clone()), (0, rat(0, 1)));
        assert_eq!((a[1].machine, a[1].start.clone()), (1, rat(0, 1)));
        assert_eq!((a[2].machine, a[2].start.clone()), (1, rat(2, 1)));
        assert_eq!(trace.makespan(&inst), rat(4, 1));
    }

    #[test]
    fn long_job_revealed_late() {
        let inst = Instance::from_integers(2, &[1, 1, 2], &[1, 1, 1]).unwrap();
        let trace = run_lppt(&inst);
        let starts: Vec<_> = trace.schedule.assignments.iter().map(|a| a.start.clone()).collect();
        assert_eq!(starts, vec![rat(0, 1), rat(0, 1), rat(1, 1)]);
        assert_eq!(trace.schedule.assignments[2].machine, 0);
        assert_eq!(trace.makespan(&inst), rat(3, 1));
    }

    #[test]
    fn single_job() {
        let inst = Instance::from_integers(2, &[7], &[7]).unwrap();
        let trace = run_lppt(&inst);
        assert_eq!(trace.makespan(&inst), rat(7, 1));
        assert_eq!(trace.dispatches.len(), 1);
    }

    #[test]
    fn surplus_machines_stay_idle() {
        let inst = Instance::from_integers(5, &[4, 1], &[1, 4]).unwrap();
        let trace = run_lppt(&inst);
        assert_eq!(trace.schedule.assignments[1].machine, 0);
        assert_eq!(trace.schedule.assignments[0].machine, 1);
        assert_eq!(trace.makespan(&inst), rat(4, 1));
    }

    #[test]
    fn simultaneous_completions_go_to_lower_machine_first() {
        // Both machines free at t=1; J2 must land on M0 and J3 on M1.
        let inst = Instance::from_integers(2, &[1, 1, 5, 1], &[4, 4, 2, 1]).unwrap();
        let trace = run_lppt(&inst);
        let a = &trace.schedule.assignments;
        assert_eq!((a[2].machine, a[2].start.clone()), (0, rat(1, 1)));
        assert_eq!((a[3].machine, a[3].start.clone()), (1, rat(1, 1)));
    }

    #[test]
    fn ties_follow_ascending_id() {
        let inst = Instance::from_integers(2, &[1, 2, 3, 4], &[1, 2, 2, 1]).unwrap();
        assert_eq!(dispatch_order(&inst), vec![1, 2, 0, 3]);
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (2usize..5, prop::collection::vec((1i64..30, 1i64..5, 1i64..30, 1i64..5), 1..12)).prop_map(
            |(m, jobs)| {
                Instance::new(m, jobs.into_iter().map(|(a, b, c, d)| (rat(a, b), rat(c, d)))).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn matches_list_scheduling_reference(inst in arb_instance()) {
            let trace = run_lppt(&inst);
            prop_assert_eq!(trace.schedule.validate(&inst), Ok(()));
            let reference = list_schedule_makespan(&inst, &dispatch_order(&inst));
            prop_assert_eq!(trace.makespan(&inst), reference);
        }

        #[test]
        fn dispatch_trace_is_ordered_and_never_idles(inst in arb_instance()) {
            let trace = run_lppt(&inst);
            for w in trace.dispatches.windows(2) {
                prop_assert!(w[0].time <= w[1].time);
                let (a, b) = (w[0].job, w[1].job);
                let (qa, qb) = (inst.predicted(a), inst.predicted(b));
                prop_assert!(qa > qb || (qa == qb && a < b));
            }
            // No idling: each machine's jobs are back to back from time 0.
            for seq in trace.schedule.machine_sequences(inst.machines()) {
                let mut t = Rational::zero();
                for job in seq {
                    prop_assert_eq!(&trace.schedule.assignments[job].start, &t);
                    t += inst.actual(job);
                }
            }
        }
    }
}
