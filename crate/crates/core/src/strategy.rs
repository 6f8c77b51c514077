//! Unilateral misreport search.
//!
//! A mechanism is strategy-proof when no agent can raise its own utility by
//! reporting a false location. [`best_response`] scans reports on a grid and
//! refines the best cell, so a positive gain is a certified manipulation
//! while a zero gain is only evidence of strategy-proofness up to the grid.

use alloc::vec::Vec;

use crate::model::{log_nash_runs, raw_utility};
use crate::search::golden_section_max;
use crate::solver::nash_fl;
use crate::{apply_mechanism, Error, LocationProfile, MechanismId, Result, SolveConfig};

/// Report grid step for manipulation scans.
pub const DEFAULT_MANIPULATION_GRID: f64 = 1e-3;
/// Width to which the best grid cell is refined.
pub const REFINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationFinding {
    pub mechanism: MechanismId,
    pub profile: LocationProfile,
    /// Original index of the manipulating agent.
    pub agent: usize,
    pub true_location: f64,
    pub best_report: f64,
    pub truthful_facility: f64,
    pub manipulated_facility: f64,
    pub truthful_utility: f64,
    pub manipulated_utility: f64,
    /// `manipulated_utility - truthful_utility`.
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentSelection {
    All,
    One(usize),
}

/// Best misreport found for one agent, judged by its true utility.
pub fn best_response(
    id: MechanismId,
    profile: &LocationProfile,
    agent: usize,
    cfg: &SolveConfig,
) -> Result<ManipulationFinding> {
    let true_location = profile.location_of(agent)?;
    let mut others = profile.original_order();
    others.remove(agent);
    others.sort_by(f64::total_cmp);

    let facility_for = |report: f64| -> Result<f64> {
        let mut xs = Vec::with_capacity(others.len() + 1);
        let at = others.partition_point(|&x| x < report);
        xs.extend_from_slice(&others[..at]);
        xs.push(report);
        xs.extend_from_slice(&others[at..]);
        let reported = LocationProfile::new(xs)?;
        Ok(apply_mechanism(id, &reported, cfg)?.y)
    };

    let truthful_facility = facility_for(true_location)?;
    let truthful_utility = raw_utility(truthful_facility, true_location);
    let mut best = (true_location, truthful_facility, truthful_utility);

    let step = cfg.grid_resolution;
    let cells = libm::ceil(1.0 / step) as usize;
    let breakpoints = others.iter().copied().chain([0.0, 0.5, 1.0]);
    let grid = (0..=cells).map(|i| (i as f64 * step).min(1.0));
    for report in breakpoints.chain(grid) {
        let y = facility_for(report)?;
        let u = raw_utility(y, true_location);
        if u > best.2 {
            best = (report, y, u);
        }
    }

    let (lo, hi) = ((best.0 - step).max(0.0), (best.0 + step).min(1.0));
    let (report, u) = golden_section_max(
        |r| facility_for(r).map(|y| raw_utility(y, true_location)),
        lo,
        hi,
        REFINE_TOL,
    )?;
    if u > best.2 {
        best = (report, facility_for(report)?, u);
    }

    Ok(ManipulationFinding {
        mechanism: id,
        profile: profile.clone(),
        agent,
        true_location,
        best_report: best.0,
        truthful_facility,
        manipulated_facility: best.1,
        truthful_utility,
        manipulated_utility: best.2,
        gain: best.2 - truthful_utility,
    })
}

pub fn best_responses(
    id: MechanismId,
    profile: &LocationProfile,
    agents: AgentSelection,
    cfg: &SolveConfig,
) -> Result<Vec<ManipulationFinding>> {
    match agents {
        AgentSelection::All => (0..profile.len())
            .map(|a| best_response(id, profile, a, cfg))
            .collect(),
        AgentSelection::One(a) => Ok(alloc::vec![best_response(id, profile, a, cfg)?]),
    }
}

/// Largest manipulation gain over a set of (profile, agent) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyAudit {
    pub max_gain: f64,
    pub witness: ManipulationFinding,
    pub pairs: usize,
}

impl StrategyAudit {
    /// Combines audits of disjoint pair sets; ties keep `self`'s witness.
    pub fn merge(self, other: StrategyAudit) -> StrategyAudit {
        let pairs = self.pairs + other.pairs;
        let keep = if other.max_gain > self.max_gain {
            other
        } else {
            self
        };
        StrategyAudit { pairs, ..keep }
    }
}

pub fn audit_strategyproofness(
    id: MechanismId,
    profiles: &[LocationProfile],
    cfg: &SolveConfig,
) -> Result<StrategyAudit> {
    let mut audit: Option<StrategyAudit> = None;
    for profile in profiles {
        for agent in 0..profile.len() {
            let finding = best_response(id, profile, agent, cfg)?;
            let single = StrategyAudit {
                max_gain: finding.gain,
                witness: finding,
                pairs: 1,
            };
            audit = Some(match audit {
                Some(a) => a.merge(single),
                None => single,
            });
        }
    }
    audit.ok_or(Error::EmptyInput("profile list"))
}

/// Nash welfare figures for the co-located group manipulation argument:
/// `k` agents at 0 with `k` at 1/4, and `k` at 0 with `k` at 1, each with
/// the facility held at 1/4. All values are natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpossibilityRow {
    pub k: usize,
    /// NashFL location for k at 0, k at 1/4.
    pub quarter_optimum: f64,
    pub log_opt_quarter: f64,
    pub log_nash_quarter_at_quarter: f64,
    pub log_ratio_quarter: f64,
    pub log_opt_endpoints: f64,
    pub log_nash_endpoints_at_quarter: f64,
    pub log_ratio_endpoints: f64,
}

pub fn sp_impossibility_demo(k: usize, cfg: &SolveConfig) -> Result<ImpossibilityRow> {
    if k == 0 {
        return Err(Error::FamilySize {
            family: "sp_impossibility_demo",
            size: 0,
        });
    }
    let quarter_runs = [(0.0, k), (0.25, k)];
    let endpoint_runs = [(0.0, k), (1.0, k)];
    let quarter = LocationProfile::from_groups(&quarter_runs)?;
    let endpoints = LocationProfile::from_groups(&endpoint_runs)?;

    let y_quarter = nash_fl(&quarter, cfg)?.y;
    let y_endpoints = nash_fl(&endpoints, cfg)?.y;
    let log_opt_quarter = log_nash_runs(y_quarter, &quarter_runs);
    let log_nash_quarter_at_quarter = log_nash_runs(0.25, &quarter_runs);
    let log_opt_endpoints = log_nash_runs(y_endpoints, &endpoint_runs);
    let log_nash_endpoints_at_quarter = log_nash_runs(0.25, &endpoint_runs);
    Ok(ImpossibilityRow {
        k,
        quarter_optimum: y_quarter,
        log_opt_quarter,
        log_nash_quarter_at_quarter,
        log_ratio_quarter: log_opt_quarter - log_nash_quarter_at_quarter,
        log_opt_endpoints,
        log_nash_endpoints_at_quarter,
        log_ratio_endpoints: log_opt_endpoints - log_nash_endpoints_at_quarter,
    })
}
