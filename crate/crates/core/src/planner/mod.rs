//! Temporal planning: consistency checking, resource-aware scheduling,
//! deadline relaxation, PDDL export, and the periodic planning cycle.

mod cycle;
pub mod pddl;
mod problem;
mod relax;
mod schedule;
pub mod stn;
mod validate;

pub use cycle::{compute_plan, PlanCycle, PlanOutcome, PlannerSettings, Trigger};
pub use problem::{PlanTask, PlanningProblem};
pub use relax::{relax_and_schedule, HardInfeasible, RelaxSettings};
pub use schedule::{
    schedule, schedule_with_budget, Infeasible, RelaxationReport, RelaxedTask, Schedule, ScheduleEntry,
    DEFAULT_SEARCH_BUDGET,
};
pub use stn::{check_consistency, Constraint, Witness};
pub use validate::{validate_schedule, Violation};
