//! Ventilator allocation under demand uncertainty.
//!
//! A [`PlanningInstance`](instance::PlanningInstance) describes regions,
//! stockpiles and production; a [`ScenarioSet`](scenario::ScenarioSet) holds
//! sampled demand trajectories. [`model`] turns the pair into a mixed-binary
//! program, [`solver`] solves it, [`report`] summarizes the plan and
//! [`orchestrator`] wires everything into runs and a job service.

pub mod instance;
pub mod model;
pub mod orchestrator;
pub mod report;
pub mod scenario;
pub mod solver;
