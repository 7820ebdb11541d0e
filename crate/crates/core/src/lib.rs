//! Exact simulation and verification toolkit for non-clairvoyant makespan
//! scheduling on identical machines with predicted processing times.
//!
//! - [`lppt`]: Longest Predicted Processing Time (non-preemptive).
//! - [`pprr`]: Predicted Proportional Round Robin (preemptive, fluid).
//! - [`oracles`]: clairvoyant offline optima.
//! - [`bounds`]: lower and upper bounds on the competitive ratio as exact
//!   functions of the squared prediction error.
//! - [`adversary`]: random instances, worst-case families and local search.
//! - [`report`] and [`verify`]: per-instance ratio reports and invariant suites.
//!
//! All quantities are exact [`Rational`]s; nothing is ever rounded.

// Violation errors carry exact witnesses and sit on cold paths.
#![allow(clippy::result_large_err)]

pub mod adversary;
pub mod bounds;
pub mod lppt;
pub mod model;
pub mod oracles;
pub mod pprr;
pub mod rational;
pub mod report;
pub mod verify;

pub use bounds::{AlphaSquared, BoundEvaluation, Formula};
pub use model::{
    alpha_squared_of_instance, DiscretePreemptiveSchedule, FluidSchedule, Instance, InstanceError, Job,
    NonPreemptiveSchedule, ScheduleViolation,
};
pub use oracles::OptResult;
pub use rational::{rat, Rational};
pub use report::{Algorithm, RatioReport};
