//! Solver suite for the optimal placement of imperfect attack detectors on
//! grid scenarios.
//!
//! An attacker enters a rectangular grid at one of several entrances and
//! walks a shortest line-of-sight path to one of several objectives.
//! Concealed detectors, each effective within a disk, fire with probability
//! depending on how much of the attacker's path they watch; a detection
//! triggers a neutralization attempt that succeeds with fixed probability,
//! but not within the final dead-zone meters of the path. Placing `delta`
//! detectors to minimize expected casualties is a hard combinatorial
//! problem; this crate provides the exact model, a constructive greedy
//! baseline, four metaheuristics (randomized greedy restarts, swap-descent
//! hill climbing, a steady-state evolutionary algorithm and a univariate
//! distribution-estimation algorithm), exhaustive and Monte-Carlo oracles,
//! a seeded instance generator and a benchmark harness.
//!
//! The usual pipeline:
//!
//! ```no_run
//! use opsbd::instgen::{generate_instance, GenParams};
//! use opsbd::objective::Instance;
//! use opsbd::solvers::{hc_run, SolverBudget};
//!
//! let scenario = generate_instance(&GenParams::default()).unwrap();
//! let instance = Instance::build(scenario).unwrap();
//! let trace = hc_run(&instance, 8, SolverBudget::WallClock(5.0), 42).unwrap();
//! println!("best value {}", trace.best.value());
//! ```

pub mod bench;
pub mod coverage;
pub mod geometry;
pub mod instgen;
pub mod objective;
pub mod oracle;
pub mod paths;
pub mod scenario;
pub mod solvers;

pub use objective::{baseline_casualties, Instance, Solution};
pub use scenario::{parse_scenario, validate_scenario, write_scenario, CellRef, Scenario};
pub use solvers::{RunTrace, SolverBudget};
