//! Clairvoyant offline optima: the denominators of every competitive ratio.
//!
//! Only actual processing times enter here; predictions are ignored.

use std::collections::HashSet;
use std::hash::Hash;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assignment, DiscretePreemptiveSchedule, Instance, NonPreemptiveSchedule, Segment};
use crate::rational::Rational;

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Largest instance the exhaustive oracle accepts.
pub const EXHAUSTIVE_MAX_JOBS: usize = 12;

/// Distinct load profiles remembered by the branch-and-bound before the
/// memo stops growing.
const MEMO_CAPACITY: usize = 1 << 21;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("exhaustive enumeration is capped at {cap} jobs, instance has {jobs}")]
    TooManyJobs { jobs: usize, cap: usize },
    #[error("scaled processing times overflow the exhaustive oracle's integer range")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    NonPreemptive(NonPreemptiveSchedule),
    Preemptive(DiscretePreemptiveSchedule),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptResult {
    pub makespan: Rational,
    pub witness: Option<Witness>,
    pub nodes: u64,
    /// False when the node budget ran out: `makespan` is then only an upper bound.
    pub optimal: bool,
}

/// `max(p_max, sum(p) / m)`.
pub fn opt_preemptive(instance: &Instance) -> OptResult {
    let makespan = preemptive_optimum(instance);
    OptResult {
        witness: Some(Witness::Preemptive(mcnaughton_schedule(instance))),
        makespan,
        nodes: 0,
        optimal: true,
    }
}

fn preemptive_optimum(instance: &Instance) -> Rational {
    let avg = instance.total_actual() / Rational::from(instance.machines());
    instance.max_actual().max(avg)
}

/// McNaughton's wrap-around rule at `T = opt_preemptive`: fill machine 0
/// with jobs in id order up to `T`, spill the remainder onto the next
/// machine starting at 0, and so on.
pub fn mcnaughton_schedule(instance: &Instance) -> DiscretePreemptiveSchedule {
    let horizon = preemptive_optimum(instance);
    let mut segments = Vec::new();
    let mut machine = 0;
    let mut cursor = Rational::zero();
    for job in instance.jobs() {
        let mut work = job.actual.clone();
        while work.is_positive() {
            let room = &horizon - &cursor;
            let piece = work.clone().min(room.clone());
            let end = &cursor + &piece;
            segments.push(Segment {
                job: job.id,
                machine,
                start: cursor.clone(),
                end: end.clone(),
            });
            work -= &piece;
            if end == horizon {
                machine += 1;
                cursor = Rational::zero();
            } else {
                cursor = end;
            }
        }
    }
    DiscretePreemptiveSchedule { segments }
}

/// Common scale turning every actual time into an integer.
fn integer_times(instance: &Instance) -> (BigInt, Vec<BigUint>) {
    let scale = Rational::lcm_of_denominators(instance.jobs().iter().map(|j| &j.actual));
    let times = instance
        .jobs()
        .iter()
        .map(|j| j.actual.scaled_to_biguint(&scale).expect("scaled times are integers"))
        .collect();
    (scale, times)
}

/// Exact non-preemptive optimum by depth-first branch-and-bound.
///
/// Jobs are placed largest first. A node is cut when its load bound reaches
/// the incumbent; machines with equal loads are tried once (so an empty job
/// only ever opens the lowest empty machine); and every `(depth, sorted
/// loads)` profile is expanded at most once. The incumbent starts from LPT.
/// With `node_budget` exhausted the incumbent comes back with `optimal = false`.
pub fn opt_nonpreemptive(instance: &Instance, node_budget: Option<u64>) -> OptResult {
    let budget = node_budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let (scale, times) = integer_times(instance);
    let total: BigUint = times.iter().sum();
    let outcome = match total.to_u64() {
        Some(_) => {
            let small: Vec<u64> = times.iter().map(|t| t.to_u64().expect("fits")).collect();
            branch_and_bound(&small, instance.machines(), budget)
        }
        None => branch_and_bound(&times, instance.machines(), budget),
    };
    let makespan = Rational::new(outcome.makespan, scale);
    let schedule = schedule_from_machines(instance, &outcome.machine_of);
    debug_assert_eq!(schedule.makespan(instance), makespan);
    OptResult {
        makespan,
        witness: Some(Witness::NonPreemptive(schedule)),
        nodes: outcome.nodes,
        optimal: outcome.optimal,
    }
}

fn schedule_from_machines(instance: &Instance, machine_of: &[usize]) -> NonPreemptiveSchedule {
    let mut loads = vec![Rational::zero(); instance.machines()];
    let assignments = machine_of
        .iter()
        .enumerate()
        .map(|(job, &machine)| {
            let start = loads[machine].clone();
            loads[machine] += instance.actual(job);
            Assignment { machine, start }
        })
        .collect();
    NonPreemptiveSchedule { assignments }
}

struct BnbOutcome {
    makespan: BigInt,
    machine_of: Vec<usize>,
    nodes: u64,
    optimal: bool,
}

trait Load: Clone + Ord + Hash + Integer + for<'a> std::ops::AddAssign<&'a Self> + for<'a> std::ops::SubAssign<&'a Self> {
    fn from_usize(n: usize) -> Self;
}

impl Load for u64 {
    fn from_usize(n: usize) -> Self {
        n as u64
    }
}

impl Load for BigUint {
    fn from_usize(n: usize) -> Self {
        BigUint::from(n)
    }
}

struct Search<'a, T: Load> {
    times: &'a [T],
    /// Job ids in placement order (largest first).
    order: Vec<usize>,
    /// suffix[i] = total time of order[i..].
    suffix: Vec<T>,
    machines: usize,
    loads: Vec<T>,
    current: Vec<usize>,
    best: T,
    best_assignment: Vec<usize>,
    floor: T,
    memo: HashSet<(usize, Vec<T>)>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl<T: Load> Search<'_, T> {
    fn dfs(&mut self, depth: usize, assigned: &T) {
        if self.exhausted || self.best == self.floor {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let current_max = self.loads.iter().max().cloned().unwrap_or_else(T::zero);
        if depth == self.order.len() {
            if current_max < self.best {
                self.best = current_max;
                self.best_assignment = self.current.clone();
            }
            return;
        }
        let everything = assigned.clone() + self.suffix[depth].clone();
        let bound = current_max.max(everything.div_ceil(&T::from_usize(self.machines)));
        if bound >= self.best {
            return;
        }
        let mut key = self.loads.clone();
        key.sort_unstable();
        let key = (depth, key);
        if self.memo.contains(&key) {
            return;
        }
        if self.memo.len() < MEMO_CAPACITY {
            self.memo.insert(key);
        }
        let job = self.order[depth];
        let p = self.times[job].clone();
        let next_assigned = assigned.clone() + p.clone();
        for k in 0..self.machines {
            if self.loads[..k].contains(&self.loads[k]) {
                continue;
            }
            let candidate = self.loads[k].clone() + p.clone();
            if candidate >= self.best {
                continue;
            }
            self.loads[k] = candidate;
            self.current[job] = k;
            self.dfs(depth + 1, &next_assigned);
            self.loads[k] -= &p;
            if self.exhausted || self.best == self.floor {
                return;
            }
        }
    }
}

fn branch_and_bound<T: Load>(times: &[T], machines: usize, budget: u64) -> BnbOutcome
where
    BigInt: From<T>,
{
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].cmp(&times[a]).then(a.cmp(&b)));
    let mut suffix = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1].clone() + times[order[i]].clone();
    }

    // Lower bound: longest job, average load, and the two jobs that must
    // share a machine once there are more jobs than machines.
    let mut floor = times[order[0]].clone().max(suffix[0].div_ceil(&T::from_usize(machines)));
    if n > machines {
        floor = floor.max(times[order[machines - 1]].clone() + times[order[machines]].clone());
    }

    // LPT incumbent.
    let mut loads = vec![T::zero(); machines];
    let mut lpt = vec![0; n];
    for &job in &order {
        let k = (0..machines)
            .min_by(|&a, &b| loads[a].cmp(&loads[b]).then(a.cmp(&b)))
            .expect("at least one machine");
        loads[k] += &times[job];
        lpt[job] = k;
    }
    let lpt_makespan = loads.into_iter().max().expect("at least one machine");

    let mut search = Search {
        times,
        order,
        suffix,
        machines,
        loads: vec![T::zero(); machines],
        current: vec![0; n],
        best: lpt_makespan,
        best_assignment: lpt,
        floor,
        memo: HashSet::new(),
        nodes: 0,
        budget,
        exhausted: false,
    };
    search.dfs(0, &T::zero());
    BnbOutcome {
        makespan: BigInt::from(search.best),
        machine_of: search.best_assignment,
        nodes: search.nodes,
        optimal: !search.exhausted,
    }
}

/// Exact non-preemptive optimum by enumerating all `m^n` machine assignments.
pub fn opt_nonpreemptive_exhaustive(instance: &Instance) -> Result<OptResult, OracleError> {
    let n = instance.len();
    if n > EXHAUSTIVE_MAX_JOBS {
        return Err(OracleError::TooManyJobs {
            jobs: n,
            cap: EXHAUSTIVE_MAX_JOBS,
        });
    }
    let m = instance.machines();
    let mut denom = BigInt::from(1);
    for job in instance.jobs() {
        denom = denom.lcm(job.actual.denom());
    }
    let mut times = Vec::with_capacity(n);
    for job in instance.jobs() {
        let scaled = job.actual.numer() * (&denom / job.actual.denom());
        times.push(scaled.to_u128().ok_or(OracleError::Overflow)?);
    }
    times
        .iter()
        .try_fold(0u128, |acc, &t| acc.checked_add(t))
        .ok_or(OracleError::Overflow)?;

    let mut machine_of = vec![0usize; n];
    let mut best_assignment = machine_of.clone();
    let mut best = u128::MAX;
    let mut count = 0u64;
    loop {
        count += 1;
        let mut loads = vec![0u128; m];
        for (job, &k) in machine_of.iter().enumerate() {
            loads[k] += times[job];
        }
        let span = loads.into_iter().max().unwrap_or(0);
        if span < best {
            best = span;
            best_assignment.clone_from(&machine_of);
        }
        // Odometer increment over base-m digits.
        let mut pos = 0;
        loop {
            if pos == n {
                let makespan = Rational::new(BigInt::from(best), denom);
                return Ok(OptResult {
                    makespan,
                    witness: Some(Witness::NonPreemptive(schedule_from_machines(instance, &best_assignment))),
                    nodes: count,
                    optimal: true,
                });
            }
            machine_of[pos] += 1;
            if machine_of[pos] < m {
                break;
            }
            machine_of[pos] = 0;
            pos += 1;
        }
    }
}
