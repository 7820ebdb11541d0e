//! Per-instance competitive-ratio reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{lppt_bound, ub_pprr, AlphaSquared, BoundEvaluation};
use crate::lppt::run_lppt;
use crate::model::Instance;
use crate::oracles::{opt_nonpreemptive, opt_preemptive};
use crate::pprr::run_pprr;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lppt,
    Pprr,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown algorithm `{0}` (expected lppt or pprr)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lppt" => Ok(Algorithm::Lppt),
            "pprr" => Ok(Algorithm::Pprr),
            _ => Err(UnknownAlgorithm(s.to_string())),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Lppt => "lppt",
            Algorithm::Pprr => "pprr",
        })
    }
}

impl Algorithm {
    /// Makespan of the algorithm's schedule on `instance`.
    pub fn makespan(self, instance: &Instance) -> Rational {
        match self {
            Algorithm::Lppt => run_lppt(instance).makespan(instance),
            Algorithm::Pprr => run_pprr(instance).makespan(),
        }
    }

    /// Clairvoyant optimum of the matching offline problem, with an
    /// optimality flag (false only if the node budget ran out).
    pub fn optimum(self, instance: &Instance, node_budget: Option<u64>) -> (Rational, bool) {
        match self {
            Algorithm::Lppt => {
                let r = opt_nonpreemptive(instance, node_budget);
                (r.makespan, r.optimal)
            }
            Algorithm::Pprr => (opt_preemptive(instance).makespan, true),
        }
    }

    /// The proven guarantee for this algorithm on `m` machines at `x`.
    pub fn bound(self, m: usize, x: &AlphaSquared) -> BoundEvaluation {
        match self {
            Algorithm::Lppt => lppt_bound(m, x),
            Algorithm::Pprr => ub_pprr(m, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioReport {
    pub instance_digest: String,
    pub algorithm: Algorithm,
    pub machines: usize,
    pub jobs: usize,
    pub algorithm_makespan: Rational,
    pub optimal_makespan: Rational,
    /// False if the offline optimum is only an upper bound (budget exhausted).
    pub optimum_proven: bool,
    pub ratio: Rational,
    pub x: Rational,
    pub bound: BoundEvaluation,
    /// `ratio <= bound.value`, compared exactly.
    pub compliant: bool,
}

impl RatioReport {
    /// Compliance is only certified against a proven optimum. A violation is
    /// conclusive either way: an unproven optimum can only over-estimate OPT.
    pub fn is_certified(&self) -> bool {
        self.compliant && self.optimum_proven
    }

    pub fn csv_header() -> &'static str {
        "instance_digest,algorithm,m,n,algorithm_makespan,optimal_makespan,optimum_proven,ratio,ratio_float,x,bound,bound_float,piece,compliant"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance_digest,
            self.algorithm,
            self.machines,
            self.jobs,
            self.algorithm_makespan,
            self.optimal_makespan,
            self.optimum_proven,
            self.ratio,
            self.ratio.to_sig_digits(12),
            self.x,
            self.bound.value,
            self.bound.value.to_sig_digits(12),
            self.bound.piece,
            self.compliant
        )
    }
}

/// Runs `algorithm`, its oracle and its bound on `instance`.
pub fn simulate(instance: &Instance, algorithm: Algorithm, node_budget: Option<u64>) -> RatioReport {
    let makespan = algorithm.makespan(instance);
    let (optimum, proven) = algorithm.optimum(instance, node_budget);
    let x = instance.alpha_squared();
    let bound = algorithm.bound(
        instance.machines(),
        &AlphaSquared::new(x.clone()).expect("alpha^2 of an instance is at least 1"),
    );
    let ratio = &makespan / &optimum;
    let compliant = ratio <= bound.value;
    RatioReport {
        instance_digest: instance.digest(),
        algorithm,
        machines: instance.machines(),
        jobs: instance.len(),
        algorithm_makespan: makespan,
        optimal_makespan: optimum,
        optimum_proven: proven,
        ratio,
        x,
        bound,
        compliant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::worst_case_family_lppt;
    use crate::rational::rat;

    #[test]
    fn family_instance_meets_its_bound() {
        let r = simulate(&worst_case_family_lppt(2), Algorithm::Lppt, None);
        assert_eq!(r.ratio, rat(3, 2));
        assert_eq!(r.bound.value, rat(3, 2));
        assert_eq!(r.x, rat(4, 1));
        assert!(r.compliant);
    }

    #[test]
    fn pprr_perfect_prediction() {
        let inst = Instance::from_integers(2, &[2, 1, 1], &[2, 1, 1]).unwrap();
        let r = simulate(&inst, Algorithm::Pprr, None);
        assert_eq!((r.ratio.clone(), r.bound.value.clone()), (rat(1, 1), rat(1, 1)));
        assert!(r.compliant);
    }

    #[test]
    fn single_job_ratio_is_one() {
        let inst = Instance::from_integers(3, &[4], &[9]).unwrap();
        for a in [Algorithm::Lppt, Algorithm::Pprr] {
            assert_eq!(simulate(&inst, a, None).ratio, rat(1, 1));
        }
    }

    #[test]
    fn report_serializes() {
        let inst = Instance::from_integers(2, &[1, 1, 2], &[1, 1, 1]).unwrap();
        let r = simulate(&inst, Algorithm::Lppt, None);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["ratio"], "3/2");
        assert_eq!(json["algorithm"], "lppt");
        assert_eq!(json["bound"]["formula"], "thm3");
        assert_eq!(r.csv_row().split(',').count(), RatioReport::csv_header().split(',').count());
        assert_eq!("PPRR".parse::<Algorithm>().unwrap(), Algorithm::Pprr);
        assert!("spt".parse::<Algorithm>().is_err());
    }
}
