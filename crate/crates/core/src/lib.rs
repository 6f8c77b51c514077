//! Facility location on the unit interval under Nash social welfare.
//!
//! Agents sit at points of `[0, 1]` and each receives utility `1 - |y - x|`
//! from a facility placed at `y`. This crate provides:
//!
//! * welfare functions (utilitarian, egalitarian, Nash) in [`model`],
//! * a certified Nash-welfare maximizer with closed-form fast paths in [`solver`],
//! * the Mid, Med, MidOrNearest and NashFL placement rules in [`mechanisms`],
//! * fair-share audits in [`fairness`],
//! * misreport (best-response) search in [`strategy`],
//! * approximation-ratio experiments and adversarial profiles in [`experiments`].
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line front end live in the `nashfl-cli` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod experiments;
pub mod fairness;
pub mod mechanisms;
pub mod model;
mod search;
pub mod solver;
pub mod strategy;

pub use error::{Error, Result};
pub use mechanisms::{apply_mechanism, MechanismId};
pub use model::{
    esw, log_nash, log_nash_derivative, nash_welfare, usw, utility, welfare_report,
    FacilityPlacement, LocationProfile, SolveConfig, WelfareReport,
};
pub use solver::nash_fl;
