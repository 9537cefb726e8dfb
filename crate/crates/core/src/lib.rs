//! Mission orchestration for a single operator supervising a robot fleet.
//!
//! [`model`] turns a mission template into a task graph, [`planner`] keeps
//! a resource-feasible schedule for it, [`executor`] runs tasks through
//! precondition, execution and postcondition checks with operator gates,
//! [`store`] records everything as an append-only event log, [`sim`]
//! stands in for the robots, [`service`] ties these together behind the
//! operator command surface, and [`analysis`] computes post-mission metrics.

pub mod analysis;
pub mod executor;
pub mod model;
pub mod planner;
pub mod service;
pub mod sim;
pub mod store;
