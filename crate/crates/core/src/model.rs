//! Jobs, instances and the three schedule representations, with validators.
//!
//! An [`Instance`] carries `m >= 2` identical machines and a nonempty list of
//! jobs, each with an actual processing time `p` (revealed on completion) and
//! a predicted time `q` (known up front). Job ids are list positions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("need at least 2 machines, got {0}")]
    TooFewMachines(usize),
    #[error("instance has no jobs")]
    NoJobs,
    #[error("job {job}: actual time must be positive, got {value}")]
    NonPositiveActual { job: usize, value: Rational },
    #[error("job {job}: predicted time must be positive, got {value}")]
    NonPositivePredicted { job: usize, value: Rational },
    #[error("malformed instance document: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Job {
    pub id: usize,
    /// Actual processing time `p`.
    pub actual: Rational,
    /// Predicted processing time `q`.
    pub predicted: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "InstanceDoc", try_from = "InstanceDoc")]
pub struct Instance {
    machines: usize,
    jobs: Vec<Job>,
}

#[derive(Clone, Serialize, Deserialize)]
struct JobDoc {
    p: Rational,
    q: Rational,
}

#[derive(Clone, Serialize, Deserialize)]
struct InstanceDoc {
    m: usize,
    jobs: Vec<JobDoc>,
}

impl Instance {
    /// Builds an instance from `(actual, predicted)` pairs; ids follow list order.
    pub fn new(
        machines: usize,
        times: impl IntoIterator<Item = (Rational, Rational)>,
    ) -> Result<Self, InstanceError> {
        if machines < 2 {
            return Err(InstanceError::TooFewMachines(machines));
        }
        let mut jobs = Vec::new();
        for (id, (actual, predicted)) in times.into_iter().enumerate() {
            if !actual.is_positive() {
                return Err(InstanceError::NonPositiveActual { job: id, value: actual });
            }
            if !predicted.is_positive() {
                return Err(InstanceError::NonPositivePredicted {
                    job: id,
                    value: predicted,
                });
            }
            jobs.push(Job { id, actual, predicted });
        }
        if jobs.is_empty() {
            return Err(InstanceError::NoJobs);
        }
        Ok(Instance { machines, jobs })
    }

    /// Instance with perfect predictions (`q = p`).
    pub fn exact(
        machines: usize,
        times: impl IntoIterator<Item = Rational>,
    ) -> Result<Self, InstanceError> {
        Self::new(machines, times.into_iter().map(|p| (p.clone(), p)))
    }

    pub fn from_integers(machines: usize, actual: &[i64], predicted: &[i64]) -> Result<Self, InstanceError> {
        assert_eq!(actual.len(), predicted.len(), "actual/predicted length mismatch");
        Self::new(
            machines,
            actual
                .iter()
                .zip(predicted)
                .map(|(&p, &q)| (Rational::from(p), Rational::from(q))),
        )
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn actual(&self, job: usize) -> &Rational {
        &self.jobs[job].actual
    }

    pub fn predicted(&self, job: usize) -> &Rational {
        &self.jobs[job].predicted
    }

    pub fn total_actual(&self) -> Rational {
        self.jobs.iter().map(|j| &j.actual).sum()
    }

    pub fn max_actual(&self) -> Rational {
        self.jobs
            .iter()
            .map(|j| j.actual.clone())
            .max()
            .expect("instances are nonempty")
    }

    /// Squared prediction error `alpha^2 = (max_j max{p_j/q_j, q_j/p_j})^2`.
    pub fn alpha_squared(&self) -> Rational {
        alpha_squared_of_instance(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("instance serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| InstanceError::Format(e.to_string()))?;
        doc.try_into()
    }

    /// Hex SHA-256 of the canonical (compact, canonical-rational) JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            m: self.machines,
            jobs: self
                .jobs
                .iter()
                .map(|j| JobDoc {
                    p: j.actual.clone(),
                    q: j.predicted.clone(),
                })
                .collect(),
        }
    }
}

impl From<Instance> for InstanceDoc {
    fn from(instance: Instance) -> Self {
        instance.to_doc()
    }
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = InstanceError;
    fn try_from(doc: InstanceDoc) -> Result<Self, InstanceError> {
        Instance::new(doc.m, doc.jobs.into_iter().map(|j| (j.p, j.q)))
    }
}

/// Squared prediction error of an instance; always `>= 1`.
pub fn alpha_squared_of_instance(instance: &Instance) -> Rational {
    instance
        .jobs
        .iter()
        .map(|j| {
            let r = &j.actual / &j.predicted;
            if r >= Rational::one() {
                r
            } else {
                r.recip()
            }
        })
        .max()
        .expect("instances are nonempty")
        .square()
}

/// Why a schedule failed validation. Ids are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleViolation {
    #[error("schedule covers {got} jobs, instance has {expected}")]
    JobCountMismatch { expected: usize, got: usize },
    #[error("job {job} assigned to machine {machine}, only {machines} machines exist")]
    MachineOutOfRange { job: usize, machine: usize, machines: usize },
    #[error("job {job} starts at negative time {start}")]
    NegativeStart { job: usize, start: Rational },
    #[error("jobs {first} and {second} overlap on machine {machine}")]
    MachineOverlap { machine: usize, first: usize, second: usize },
    #[error("job {job} runs on two machines at once")]
    JobOverlap { job: usize },
    #[error("segment of job {job} on machine {machine} is empty or reversed")]
    EmptySegment { job: usize, machine: usize },
    #[error("job {job} receives {processed} units of work, needs {required}")]
    WorkMismatch { job: usize, processed: Rational, required: Rational },
    #[error("job {job} referenced but not in the instance")]
    UnknownJob { job: usize },
    #[error("breakpoints must start at 0 and strictly increase (index {index})")]
    BadBreakpoints { index: usize },
    #[error("fluid schedule has {breakpoints} breakpoints but {intervals} intervals")]
    IntervalCountMismatch { breakpoints: usize, intervals: usize },
    #[error("interval {interval}: job {job} speed {speed} outside [0, 1]")]
    SpeedOutOfRange { interval: usize, job: usize, speed: Rational },
    #[error("interval {interval}: total speed {total} exceeds {machines} machines")]
    CapacityExceeded { interval: usize, total: Rational, machines: usize },
    #[error("interval {interval}: job {job} runs after completing")]
    RunsAfterCompletion { interval: usize, job: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub machine: usize,
    pub start: Rational,
}

/// A non-preemptive schedule: one `(machine, start)` per job id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonPreemptiveSchedule {
    pub assignments: Vec<Assignment>,
}

impl NonPreemptiveSchedule {
    pub fn validate(&self, instance: &Instance) -> Result<(), ScheduleViolation> {
        validate_nonpreemptive(instance, self)
    }

    pub fn completion(&self, instance: &Instance, job: usize) -> Rational {
        &self.assignments[job].start + instance.actual(job)
    }

    pub fn makespan(&self, instance: &Instance) -> Rational {
        (0..self.assignments.len())
            .map(|j| self.completion(instance, j))
            .max()
            .unwrap_or_default()
    }

    /// Job ids per machine, ordered by start time.
    pub fn machine_sequences(&self, machines: usize) -> Vec<Vec<usize>> {
        let mut seqs = vec![Vec::new(); machines];
        for (job, a) in self.assignments.iter().enumerate() {
            if a.machine < machines {
                seqs[a.machine].push(job);
            }
        }
        for seq in &mut seqs {
            seq.sort_by(|&a, &b| self.assignments[a].start.cmp(&self.assignments[b].start).then(a.cmp(&b)));
        }
        seqs
    }
}

pub fn validate_nonpreemptive(
    instance: &Instance,
    schedule: &NonPreemptiveSchedule,
) -> Result<(), ScheduleViolation> {
    let n = instance.len();
    let m = instance.machines();
    if schedule.assignments.len() != n {
        return Err(ScheduleViolation::JobCountMismatch {
            expected: n,
            got: schedule.assignments.len(),
        });
    }
    for (job, a) in schedule.assignments.iter().enumerate() {
        if a.machine >= m {
            return Err(ScheduleViolation::MachineOutOfRange {
                job,
                machine: a.machine,
                machines: m,
            });
        }
        if a.start.is_negative() {
            return Err(ScheduleViolation::NegativeStart {
                job,
                start: a.start.clone(),
            });
        }
    }
    for (machine, seq) in schedule.machine_sequences(m).into_iter().enumerate() {
        for pair in seq.windows(2) {
            let end = schedule.completion(instance, pair[0]);
            if end > schedule.assignments[pair[1]].start {
                return Err(ScheduleViolation::MachineOverlap {
                    machine,
                    first: pair[0],
                    second: pair[1],
                });
            }
        }
    }
    Ok(())
}

/// Piecewise-constant processing speeds. `intervals[k]` holds the speeds on
/// `[breakpoints[k], breakpoints[k + 1])`; jobs absent from a map run at speed 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluidSchedule {
    pub breakpoints: Vec<Rational>,
    pub intervals: Vec<BTreeMap<usize, Rational>>,
}

impl FluidSchedule {
    pub fn validate(&self, instance: &Instance) -> Result<(), ScheduleViolation> {
        validate_fluid(instance, self)
    }

    pub fn interval_len(&self, k: usize) -> Rational {
        &self.breakpoints[k + 1] - &self.breakpoints[k]
    }

    /// Per-job completion time: end of the last interval with positive speed.
    pub fn completions(&self) -> BTreeMap<usize, Rational> {
        let mut done = BTreeMap::new();
        for (k, speeds) in self.intervals.iter().enumerate() {
            for (&job, s) in speeds {
                if s.is_positive() {
                    done.insert(job, self.breakpoints[k + 1].clone());
                }
            }
        }
        done
    }

    pub fn makespan(&self) -> Rational {
        self.completions().into_values().max().unwrap_or_default()
    }

    /// Work processed per job over the whole schedule.
    pub fn processed(&self) -> BTreeMap<usize, Rational> {
        let mut work: BTreeMap<usize, Rational> = BTreeMap::new();
        for (k, speeds) in self.intervals.iter().enumerate() {
            let len = self.interval_len(k);
            for (&job, s) in speeds {
                *work.entry(job).or_default() += s * &len;
            }
        }
        work
    }
}

pub fn validate_fluid(instance: &Instance, schedule: &FluidSchedule) -> Result<(), ScheduleViolation> {
    let m = instance.machines();
    let n = instance.len();
    let bps = &schedule.breakpoints;
    if bps.is_empty() || !bps[0].is_zero() {
        return Err(ScheduleViolation::BadBreakpoints { index: 0 });
    }
    for (i, w) in bps.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(ScheduleViolation::BadBreakpoints { index: i + 1 });
        }
    }
    if schedule.intervals.len() + 1 != bps.len() {
        return Err(ScheduleViolation::IntervalCountMismatch {
            breakpoints: bps.len(),
            intervals: schedule.intervals.len(),
        });
    }
    let one = Rational::one();
    let capacity = Rational::from(m);
    let mut processed = vec![Rational::zero(); n];
    let mut cumulative = Rational::zero();
    for (k, speeds) in schedule.intervals.iter().enumerate() {
        let len = schedule.interval_len(k);
        let mut total = Rational::zero();
        for (&job, s) in speeds {
            if job >= n {
                return Err(ScheduleViolation::UnknownJob { job });
            }
            if s.is_negative() || *s > one {
                return Err(ScheduleViolation::SpeedOutOfRange {
                    interval: k,
                    job,
                    speed: s.clone(),
                });
            }
            if s.is_positive() && processed[job] >= *instance.actual(job) {
                return Err(ScheduleViolation::RunsAfterCompletion { interval: k, job });
            }
            total += s;
            processed[job] += s * &len;
            if processed[job] > *instance.actual(job) {
                return Err(ScheduleViolation::WorkMismatch {
                    job,
                    processed: processed[job].clone(),
                    required: instance.actual(job).clone(),
                });
            }
        }
        if total > capacity {
            return Err(ScheduleViolation::CapacityExceeded {
                interval: k,
                total,
                machines: m,
            });
        }
        cumulative += &total * &len;
        // Work done by time t never exceeds m * t; implied by the per-interval cap.
        debug_assert!(cumulative <= &capacity * &bps[k + 1]);
    }
    for (job, work) in processed.into_iter().enumerate() {
        if work != *instance.actual(job) {
            return Err(ScheduleViolation::WorkMismatch {
                job,
                processed: work,
                required: instance.actual(job).clone(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub job: usize,
    pub machine: usize,
    pub start: Rational,
    pub end: Rational,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}:J{}[{},{}]", self.machine, self.job, self.start, self.end)
    }
}

/// Preemptive schedule as explicit `(job, machine, start, end)` segments.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretePreemptiveSchedule {
    pub segments: Vec<Segment>,
}

impl DiscretePreemptiveSchedule {
    pub fn validate(&self, instance: &Instance) -> Result<(), ScheduleViolation> {
        validate_discrete(instance, self)
    }

    pub fn makespan(&self) -> Rational {
        self.segments
            .iter()
            .map(|s| s.end.clone())
            .max()
            .unwrap_or_default()
    }

    /// Segments of one machine, ordered by start.
    pub fn on_machine(&self, machine: usize) -> Vec<&Segment> {
        let mut segs: Vec<&Segment> = self.segments.iter().filter(|s| s.machine == machine).collect();
        segs.sort_by(|a, b| a.start.cmp(&b.start));
        segs
    }
}

fn first_overlap(mut segs: Vec<&Segment>) -> Option<(&Segment, &Segment)> {
    segs.sort_by(|a, b| a.start.cmp(&b.start).then(a.end.cmp(&b.end)));
    segs.windows(2)
        .find(|w| w[0].end > w[1].start)
        .map(|w| (w[0], w[1]))
}

pub fn validate_discrete(
    instance: &Instance,
    schedule: &DiscretePreemptiveSchedule,
) -> Result<(), ScheduleViolation> {
    let m = instance.machines();
    let n = instance.len();
    let mut by_machine: Vec<Vec<&Segment>> = vec![Vec::new(); m];
    let mut by_job: Vec<Vec<&Segment>> = vec![Vec::new(); n];
    for seg in &schedule.segments {
        if seg.job >= n {
            return Err(ScheduleViolation::UnknownJob { job: seg.job });
        }
        if seg.machine >= m {
            return Err(ScheduleViolation::MachineOutOfRange {
                job: seg.job,
                machine: seg.machine,
                machines: m,
            });
        }
        if seg.start.is_negative() {
            return Err(ScheduleViolation::NegativeStart {
                job: seg.job,
                start: seg.start.clone(),
            });
        }
        if seg.end <= seg.start {
            return Err(ScheduleViolation::EmptySegment {
                job: seg.job,
                machine: seg.machine,
            });
        }
        by_machine[seg.machine].push(seg);
        by_job[seg.job].push(seg);
    }
    for (machine, segs) in by_machine.into_iter().enumerate() {
        if let Some((a, b)) = first_overlap(segs) {
            return Err(ScheduleViolation::MachineOverlap {
                machine,
                first: a.job,
                second: b.job,
            });
        }
    }
    for (job, segs) in by_job.into_iter().enumerate() {
        let work: Rational = segs.iter().map(|s| &s.end - &s.start).sum();
        if first_overlap(segs).is_some() {
            return Err(ScheduleViolation::JobOverlap { job });
        }
        if work != *instance.actual(job) {
            return Err(ScheduleViolation::WorkMismatch {
                job,
                processed: work,
                required: instance.actual(job).clone(),
            });
        }
    }
    Ok(())
}
