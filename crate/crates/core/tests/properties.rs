//! Cross-module properties over arbitrary small instances.

use std::collections::BTreeSet;

use predsched::adversary::{gen_random_instance, GeneratorConfig};
use predsched::bounds::{lb_nonpreemptive, lppt_bound, ub_lppt_general, ub_pprr, AlphaSquared};
use predsched::lppt::run_lppt;
use predsched::oracles::{mcnaughton_schedule, opt_nonpreemptive, opt_nonpreemptive_exhaustive, opt_preemptive};
use predsched::pprr::{realize_fluid, run_pprr};
use predsched::report::simulate;
use predsched::{rat, Algorithm, Instance, Rational};
use proptest::prelude::*;

/// Times on a 1/4 grid in `[1/4, 6]`.
fn time() -> impl Strategy<Value = Rational> {
    (1i64..=24).prop_map(|k| rat(k, 4))
}

fn arb_instance(max_jobs: usize) -> impl Strategy<Value = Instance> {
    (2usize..=5, prop::collection::vec((time(), time()), 1..=max_jobs))
        .prop_map(|(m, jobs)| Instance::new(m, jobs).unwrap())
}

fn lower_bounds(inst: &Instance) -> (Rational, Rational) {
    (inst.max_actual(), inst.total_actual() / Rational::from(inst.machines()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_schedule_respects_trivial_lower_bounds(inst in arb_instance(10)) {
        let (pmax, avg) = lower_bounds(&inst);
        let lppt = run_lppt(&inst);
        prop_assert!(lppt.schedule.validate(&inst).is_ok());
        let run = run_pprr(&inst);
        let realised = realize_fluid(&run.fluid, inst.machines()).unwrap();
        let mc = mcnaughton_schedule(&inst);
        for makespan in [lppt.makespan(&inst), run.makespan(), realised.makespan(), mc.makespan()] {
            prop_assert!(makespan >= pmax && makespan >= avg);
        }
    }

    #[test]
    fn fluid_work_never_exceeds_capacity(inst in arb_instance(12)) {
        let run = run_pprr(&inst);
        let fluid = &run.fluid;
        prop_assert!(fluid.validate(&inst).is_ok());
        let m = Rational::from(inst.machines());
        let mut done = Rational::zero();
        for (k, speeds) in fluid.intervals.iter().enumerate() {
            let len = &fluid.breakpoints[k + 1] - &fluid.breakpoints[k];
            let total: Rational = speeds.values().sum();
            done += total * len;
            prop_assert!(done <= &m * &fluid.breakpoints[k + 1]);
        }
        prop_assert_eq!(done, inst.total_actual());
    }

    #[test]
    fn pprr_phase_invariants(inst in arb_instance(12)) {
        let run = run_pprr(&inst);
        let mut mandatory = BTreeSet::new();
        for phase in &run.phases {
            prop_assert!(phase.pool.iter().all(|j| !mandatory.contains(j)));
            mandatory.extend(phase.newly_mandatory().iter().copied());
            let (h, d) = (phase.pool.len(), phase.mandatory);
            if h > d {
                let sum: Rational = phase.shared_speeds.values().sum();
                prop_assert_eq!(sum, Rational::from(phase.unoccupied - d));
                if d >= 1 {
                    prop_assert!(phase.shared_speeds.values().all(|s| *s < Rational::one()));
                }
            }
        }
    }

    #[test]
    fn realisation_matches_fluid(inst in arb_instance(12)) {
        let run = run_pprr(&inst);
        let discrete = realize_fluid(&run.fluid, inst.machines()).unwrap();
        prop_assert!(discrete.validate(&inst).is_ok());
        prop_assert_eq!(discrete.makespan(), run.makespan());
    }

    #[test]
    fn oracle_ordering(inst in arb_instance(9)) {
        let pre = opt_preemptive(&inst).makespan;
        let non = opt_nonpreemptive(&inst, None);
        prop_assert!(non.optimal);
        prop_assert!(pre <= non.makespan);
        prop_assert!(non.makespan <= run_lppt(&inst).makespan(&inst));
        prop_assert_eq!(&non.makespan, &opt_nonpreemptive_exhaustive(&inst).unwrap().makespan);
    }

    #[test]
    fn ratios_stay_within_bounds(inst in arb_instance(9)) {
        let x = AlphaSquared::new(inst.alpha_squared()).unwrap();
        let m = inst.machines();
        let lppt = simulate(&inst, Algorithm::Lppt, None);
        prop_assert!(lppt.ratio >= Rational::one());
        prop_assert!(lppt.is_certified());
        prop_assert!(lppt.ratio <= ub_lppt_general(m, &x).value);
        prop_assert_eq!(&lppt.bound.value, &lppt_bound(m, &x).value);
        let pprr = simulate(&inst, Algorithm::Pprr, None);
        prop_assert!(pprr.ratio >= Rational::one());
        prop_assert!(pprr.ratio <= ub_pprr(m, &x).value);
    }

    #[test]
    fn exact_predictions_make_pprr_optimal(times in prop::collection::vec(time(), 1..14), m in 2usize..=6) {
        let inst = Instance::exact(m, times).unwrap();
        prop_assert_eq!(run_pprr(&inst).makespan(), opt_preemptive(&inst).makespan);
    }

    #[test]
    fn report_round_trips_through_json(inst in arb_instance(8)) {
        let replayed = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(&replayed, &inst);
        prop_assert_eq!(replayed.digest(), inst.digest());
        let a = simulate(&inst, Algorithm::Lppt, None);
        let b = simulate(&replayed, Algorithm::Lppt, None);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn generator_caps_hold_exactly(seed in any::<u64>(), k in 0usize..5) {
        let cap = [rat(1, 1), rat(9, 8), rat(2, 1), rat(17, 4), rat(9, 1)][k].clone();
        let config = GeneratorConfig::new(3, 12, AlphaSquared::new(cap.clone()).unwrap(), seed);
        let inst = gen_random_instance(&config).unwrap();
        prop_assert!(inst.alpha_squared() <= cap);
        prop_assert!(inst.len() <= 12);
    }
}

#[test]
fn lower_bound_is_attained_by_lppt_on_flat_piece() {
    // x >= m puts both the lower bound and the LPPT guarantee at 2 - 1/m.
    for m in 2..=6usize {
        let x = AlphaSquared::new(Rational::from(m)).unwrap();
        assert_eq!(lb_nonpreemptive(m, &x).value, ub_lppt_general(m, &x).value);
    }
}
