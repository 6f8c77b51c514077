//! Agent profiles, facility placements and the three welfare objectives.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Default target accuracy for the facility location.
pub const DEFAULT_EPS_LOC: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Default step of the brute-force grid oracle.
pub const DEFAULT_GRID_RESOLUTION: f64 = 1e-5;

fn check_unit(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}

/// Agent locations on `[0, 1]`, stored in non-decreasing order.
///
/// The permutation back to the order in which agents were supplied is kept,
/// so per-agent results can be reported against the caller's indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationProfile {
    locations: Vec<f64>,
    /// `agents[k]` is the original index of the agent at sorted position `k`.
    agents: Vec<usize>,
}

impl LocationProfile {
    pub fn new(locations: Vec<f64>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::EmptyProfile);
        }
        for &x in &locations {
            check_unit("agent location", x)?;
        }
        let mut agents: Vec<usize> = (0..locations.len()).collect();
        // Stable sort keeps co-located agents in input order.
        agents.sort_by(|&a, &b| locations[a].total_cmp(&locations[b]));
        let sorted = agents.iter().map(|&i| locations[i]).collect();
        Ok(Self {
            locations: sorted,
            agents,
        })
    }

    pub fn from_slice(locations: &[f64]) -> Result<Self> {
        Self::new(locations.to_vec())
    }

    /// `copies` agents at each listed location, in the listed order.
    pub fn from_groups(groups: &[(f64, usize)]) -> Result<Self> {
        let mut locations = Vec::with_capacity(groups.iter().map(|g| g.1).sum());
        for &(x, count) in groups {
            locations.extend(core::iter::repeat_n(x, count));
        }
        Self::new(locations)
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Locations in non-decreasing order.
    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn leftmost(&self) -> f64 {
        self.locations[0]
    }

    pub fn rightmost(&self) -> f64 {
        self.locations[self.locations.len() - 1]
    }

    /// Original index of the agent at sorted position `pos`.
    pub fn original_index(&self, pos: usize) -> usize {
        self.agents[pos]
    }

    /// Location of agent `agent` (original input order).
    pub fn location_of(&self, agent: usize) -> Result<f64> {
        self.agents
            .iter()
            .position(|&a| a == agent)
            .map(|pos| self.locations[pos])
            .ok_or(Error::AgentIndex {
                index: agent,
                n: self.len(),
            })
    }

    /// Locations in the original input order.
    pub fn original_order(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.len()];
        for (pos, &agent) in self.agents.iter().enumerate() {
            out[agent] = self.locations[pos];
        }
        out
    }

    /// The same agents with `agent` reporting `location` instead.
    pub fn with_report(&self, agent: usize, location: f64) -> Result<Self> {
        if agent >= self.len() {
            return Err(Error::AgentIndex {
                index: agent,
                n: self.len(),
            });
        }
        let mut original = self.original_order();
        original[agent] = location;
        Self::new(original)
    }

    /// Every agent moved by `shift`; fails if anyone leaves `[0, 1]`.
    pub fn translated(&self, shift: f64) -> Result<Self> {
        Self::new(
            self.original_order()
                .into_iter()
                .map(|x| x + shift)
                .collect(),
        )
    }

    pub fn all_equal(&self) -> bool {
        self.leftmost() == self.rightmost()
    }

    /// Maximal runs of identical locations as `(location, count)`, left to right.
    pub fn distinct(&self) -> Vec<(f64, usize)> {
        let mut runs: Vec<(f64, usize)> = Vec::new();
        for &x in &self.locations {
            match runs.last_mut() {
                Some((last, count)) if *last == x => *count += 1,
                _ => runs.push((x, 1)),
            }
        }
        runs
    }
}

/// A facility position with a certified bound on its distance to the exact
/// optimizer of whatever rule produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacilityPlacement {
    pub y: f64,
    /// `|y - y*|` bound; zero for closed forms and non-optimizing rules.
    pub loc_error: f64,
}

impl FacilityPlacement {
    pub fn exact(y: f64) -> Self {
        Self { y, loc_error: 0.0 }
    }

    pub(crate) fn approx(y: f64, loc_error: f64) -> Self {
        Self { y, loc_error }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareReport {
    pub usw: f64,
    pub esw: f64,
    pub nash: f64,
    /// `f64::NEG_INFINITY` when some agent has zero utility.
    pub log_nash: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Target accuracy of the returned location.
    pub eps_loc: f64,
    pub max_iter: usize,
    /// Step of brute-force grids (oracle solver, misreport scans).
    pub grid_resolution: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            eps_loc: DEFAULT_EPS_LOC,
            max_iter: DEFAULT_MAX_ITER,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
        }
    }
}

impl SolveConfig {
    pub fn new(eps_loc: f64, max_iter: usize, grid_resolution: f64) -> Result<Self> {
        Self {
            eps_loc,
            max_iter,
            grid_resolution,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.eps_loc > 0.0 && self.eps_loc.is_finite()) {
            return Err(Error::InvalidConfig("eps_loc must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1"));
        }
        if !(self.grid_resolution > 0.0 && self.grid_resolution <= 1.0) {
            return Err(Error::InvalidConfig("grid_resolution must lie in (0, 1]"));
        }
        Ok(self)
    }

    pub fn with_eps(self, eps_loc: f64) -> Result<Self> {
        Self { eps_loc, ..self }.validated()
    }

    pub fn with_grid(self, grid_resolution: f64) -> Result<Self> {
        Self {
            grid_resolution,
            ..self
        }
        .validated()
    }
}

/// `1 - |y - x|` for a facility at `y` and an agent at `x`.
pub fn utility(y: f64, x: f64) -> Result<f64> {
    check_unit("facility location", y)?;
    check_unit("agent location", x)?;
    Ok(raw_utility(y, x))
}

#[inline]
pub(crate) fn raw_utility(y: f64, x: f64) -> f64 {
    1.0 - libm::fabs(y - x)
}

/// Utilitarian social welfare: the sum of utilities.
pub fn usw(y: f64, profile: &LocationProfile) -> Result<f64> {
    check_unit("facility location", y)?;
    Ok(profile.locations().iter().map(|&x| raw_utility(y, x)).sum())
}

/// Egalitarian social welfare: the smallest utility.
pub fn esw(y: f64, profile: &LocationProfile) -> Result<f64> {
    check_unit("facility location", y)?;
    // The minimum is attained by one of the two extreme agents.
    Ok(raw_utility(y, profile.leftmost()).min(raw_utility(y, profile.rightmost())))
}

/// Logarithm of the Nash welfare; `-inf` when some utility is zero.
pub fn log_nash(y: f64, profile: &LocationProfile) -> Result<f64> {
    check_unit("facility location", y)?;
    Ok(log_nash_runs(y, &profile.distinct()))
}

pub(crate) fn log_nash_runs(y: f64, runs: &[(f64, usize)]) -> f64 {
    let mut total = 0.0;
    for &(x, count) in runs {
        let u = raw_utility(y, x);
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += count as f64 * libm::log(u);
    }
    total
}

/// Nash welfare: the product of utilities, accumulated in log space.
pub fn nash_welfare(y: f64, profile: &LocationProfile) -> Result<f64> {
    let ln = log_nash(y, profile)?;
    Ok(if ln == f64::NEG_INFINITY {
        0.0
    } else {
        libm::exp(ln)
    })
}

/// `d/dy log Nash(y)`.
///
/// Agents located exactly at `y` are counted on the left of the facility, so
/// at a breakpoint this is the right-hand derivative.
pub fn log_nash_derivative(y: f64, profile: &LocationProfile) -> Result<f64> {
    check_unit("facility location", y)?;
    let runs = profile.distinct();
    if runs.iter().any(|&(x, _)| raw_utility(y, x) <= 0.0) {
        return Err(Error::SingularPoint { y });
    }
    Ok(one_sided_slope(y, &runs, Side::Right))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// Limit from the left: agents at `y` count as right of the facility.
    Left,
    /// Limit from the right: agents at `y` count as left of the facility.
    Right,
}

/// One-sided derivative of log-Nash. A zero utility yields `+inf` or `-inf`
/// with the sign of the blown-up term instead of an error.
pub(crate) fn one_sided_slope(y: f64, runs: &[(f64, usize)], side: Side) -> f64 {
    let mut total = 0.0;
    for &(x, count) in runs {
        let left_of_facility = x < y || (x == y && side == Side::Right);
        let c = count as f64;
        if left_of_facility {
            let u = 1.0 - y + x;
            if u <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total -= c / u;
        } else {
            let u = 1.0 + y - x;
            if u <= 0.0 {
                return f64::INFINITY;
            }
            total += c / u;
        }
    }
    total
}

pub fn welfare_report(y: f64, profile: &LocationProfile) -> Result<WelfareReport> {
    let ln = log_nash(y, profile)?;
    Ok(WelfareReport {
        usw: usw(y, profile)?,
        esw: esw(y, profile)?,
        nash: if ln == f64::NEG_INFINITY {
            0.0
        } else {
            libm::exp(ln)
        },
        log_nash: ln,
    })
}
