//! Nash-welfare maximizing facility placement.
//!
//! `log Nash(y)` is strictly concave between consecutive agent locations and
//! its derivative only jumps downward when the facility passes an agent, so
//! the derivative `S(y)` is strictly decreasing on `[x_1, x_n]`. The numeric
//! solver first locates the unique sign change of `S` among the distinct
//! agent locations and then bisects inside the bracketing segment.

use alloc::vec::Vec;

use crate::model::{log_nash_runs, one_sided_slope, raw_utility, Side};
use crate::{Error, FacilityPlacement, LocationProfile, Result, SolveConfig};

/// Where the optimum of a three-agent profile sits relative to the middle agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeAgentBranch {
    AtX2,
    RightOfX2,
    LeftOfX2,
}

/// Quantities of the closed-form three-agent solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeAgentCase {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub branch: ThreeAgentBranch,
}

impl ThreeAgentCase {
    /// Classifies a sorted triple.
    ///
    /// `2x1 - 2x2 + c` is the left derivative of Nash welfare at `x2` and
    /// `2x2 - 2x3 + c` is minus its right derivative. Their difference is
    /// `2 (1 + x1 - x2)(1 + x2 - x3) >= 0`, so both can only be negative
    /// through rounding.
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        for x in [x1, x2, x3] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain {
                    what: "agent location",
                    value: x,
                });
            }
        }
        if !(x1 <= x2 && x2 <= x3) {
            return Err(Error::Domain {
                what: "unsorted three-agent location",
                value: x2,
            });
        }
        let c = 1.0 - x2 * x2 + x1 * x2 + x2 * x3 - x1 * x3;
        let left = 2.0 * x1 - 2.0 * x2 + c;
        let right = 2.0 * x2 - 2.0 * x3 + c;
        let branch = match (left >= 0.0, right >= 0.0) {
            (true, true) => ThreeAgentBranch::AtX2,
            (true, false) => ThreeAgentBranch::RightOfX2,
            (false, true) => ThreeAgentBranch::LeftOfX2,
            (false, false) => return Err(Error::InconsistentThreeAgentCase { x1, x2, x3 }),
        };
        Ok(Self {
            x1,
            x2,
            x3,
            c,
            alpha: x1 + x2 + x3,
            beta: 1.0 - x1 * x2 - x2 * x3 - x1 * x3,
            branch,
        })
    }

    pub fn location(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        match self.branch {
            ThreeAgentBranch::AtX2 => self.x2,
            ThreeAgentBranch::RightOfX2 => {
                let disc = (1.0 + a) * (1.0 + a) - 3.0 * (2.0 * self.x3 - b);
                let y = ((1.0 + a) - libm::sqrt(disc.max(0.0))) / 3.0;
                y.clamp(self.x2, self.x3)
            }
            ThreeAgentBranch::LeftOfX2 => {
                let disc = (a - 1.0) * (a - 1.0) + 3.0 * (2.0 * self.x1 + b);
                let y = ((a - 1.0) + libm::sqrt(disc.max(0.0))) / 3.0;
                y.clamp(self.x1, self.x2)
            }
        }
    }
}

/// Closed-form optimum for three agents.
///
/// Falls back to [`nash_fl_numeric`] with the default configuration if the
/// sign tests disagree, which only rounding can cause.
pub fn nash_fl_three_closed_form(x1: f64, x2: f64, x3: f64) -> Result<FacilityPlacement> {
    match ThreeAgentCase::new(x1, x2, x3) {
        Ok(case) => Ok(FacilityPlacement::exact(case.location())),
        Err(Error::InconsistentThreeAgentCase { .. }) => {
            log::warn!(
                "inconsistent three-agent classification for ({x1}, {x2}, {x3}); using bisection"
            );
            let profile = LocationProfile::new(alloc::vec![x1, x2, x3])?;
            nash_fl_numeric(&profile, &SolveConfig::default())
        }
        Err(e) => Err(e),
    }
}

/// Closed-form optimum for `k` agents at `x` and `n - k` agents at 0.
pub fn nash_fl_two_location(k: usize, n: usize, x: f64) -> Result<FacilityPlacement> {
    if k == 0 || k > n {
        return Err(Error::Domain {
            what: "two-location group size k",
            value: k as f64,
        });
    }
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain {
            what: "two-location position x",
            value: x,
        });
    }
    let (k, n) = (k as f64, n as f64);
    // k/n >= 1/(2-x) and k/n <= (1-x)/(2-x), cleared of denominators.
    let y = if k * (2.0 - x) >= n {
        x
    } else if k * (2.0 - x) <= n * (1.0 - x) {
        0.0
    } else {
        (x - 1.0 + (2.0 * k - k * x) / n).clamp(0.0, x)
    };
    Ok(FacilityPlacement::exact(y))
}

/// Bisection on the sign of the log-Nash derivative, certified to
/// `cfg.eps_loc` in location.
pub fn nash_fl_numeric(profile: &LocationProfile, cfg: &SolveConfig) -> Result<FacilityPlacement> {
    let cfg = cfg.validated()?;
    let runs = profile.distinct();
    if runs.len() == 1 {
        return Ok(FacilityPlacement::exact(runs[0].0));
    }

    // First distinct location whose right-hand derivative is non-positive.
    // The rightmost one always qualifies since every agent is then on the left.
    let right_slope = |j: usize| one_sided_slope(runs[j].0, &runs, Side::Right);
    let (mut lo_idx, mut hi_idx) = (0, runs.len() - 1);
    while lo_idx < hi_idx {
        let mid = lo_idx + (hi_idx - lo_idx) / 2;
        if right_slope(mid) <= 0.0 {
            hi_idx = mid;
        } else {
            lo_idx = mid + 1;
        }
    }
    let j = lo_idx;
    let xj = runs[j].0;
    if j == 0 || one_sided_slope(xj, &runs, Side::Left) >= 0.0 {
        // Derivative changes sign across the agents at xj.
        return Ok(FacilityPlacement::exact(xj));
    }

    // Optimum lies strictly inside (x_{j-1}, x_j) where S is continuous.
    let (mut lo, mut hi) = (runs[j - 1].0, xj);
    let mut iterations = 0;
    while hi - lo > cfg.eps_loc {
        if iterations == cfg.max_iter {
            return Err(Error::Convergence { lo, hi, iterations });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = one_sided_slope(mid, &runs, Side::Right);
        if s > 0.0 {
            lo = mid;
        } else if s < 0.0 {
            hi = mid;
        } else {
            return Ok(FacilityPlacement::approx(mid, 0.0));
        }
    }
    Ok(FacilityPlacement::approx(0.5 * (lo + hi), 0.5 * (hi - lo)))
}

/// Brute-force maximizer of log-Nash over a uniform grid on `[x_1, x_n]`
/// plus every agent location.
pub fn nash_fl_grid_oracle(profile: &LocationProfile, cfg: &SolveConfig) -> FacilityPlacement {
    let runs = profile.distinct();
    let (lo, hi) = (profile.leftmost(), profile.rightmost());
    if lo == hi {
        return FacilityPlacement::exact(lo);
    }
    let h = cfg.grid_resolution;
    let steps = libm::floor((hi - lo) / h) as usize;

    let mut best = (lo, f64::NEG_INFINITY);
    let mut consider = |y: f64| {
        let v = log_nash_runs(y, &runs);
        if v > best.1 {
            best = (y, v);
        }
    };
    for i in 0..=steps {
        consider((lo + i as f64 * h).min(hi));
    }
    consider(hi);
    for &(x, _) in &runs {
        consider(x);
    }
    FacilityPlacement::approx(best.0, h)
}

/// NashFL: exact closed forms where available, bisection otherwise.
pub fn nash_fl(profile: &LocationProfile, cfg: &SolveConfig) -> Result<FacilityPlacement> {
    let xs = profile.locations();
    let runs = profile.distinct();
    match (xs.len(), runs.len()) {
        (_, 1) => Ok(FacilityPlacement::exact(xs[0])),
        (2, _) => Ok(FacilityPlacement::exact(0.5 * (xs[0] + xs[1]))),
        (3, _) => nash_fl_three_closed_form(xs[0], xs[1], xs[2]),
        (n, 2) => {
            // Shift so the left group sits at 0, solve, shift back.
            let (base, (top, k)) = (runs[0].0, runs[1]);
            let local = nash_fl_two_location(k, n, top - base)?;
            Ok(FacilityPlacement::exact((base + local.y).clamp(base, top)))
        }
        _ => nash_fl_numeric(profile, cfg),
    }
}

/// Upper bound on `|Nash(y) - Nash(y*)|` implied by the placement's
/// location error.
///
/// On `[y - e, y + e]` each utility is at most `u_i(y) + e` and changes with
/// slope of magnitude 1, so `|dNash/dy| <= sum_i prod_{j != i} min(1, u_j(y) + e)`.
pub fn nash_value_error_bound(profile: &LocationProfile, placement: &FacilityPlacement) -> f64 {
    let e = placement.loc_error;
    if e == 0.0 {
        return 0.0;
    }
    let caps: Vec<f64> = profile
        .locations()
        .iter()
        .map(|&x| (raw_utility(placement.y, x) + e).min(1.0))
        .collect();
    let slope_bound: f64 = (0..caps.len())
        .map(|i| {
            caps.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c)
                .product::<f64>()
        })
        .sum();
    slope_bound * e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_nash;

    fn p(xs: &[f64]) -> LocationProfile {
        LocationProfile::from_slice(xs).unwrap()
    }

    fn irrational() -> f64 {
        (16.0 - 91f64.sqrt()) / 21.0
    }

    #[test]
    fn irrational_optimum_all_paths() {
        let cfg = SolveConfig::default();
        let prof = p(&[1.0 / 7.0, 2.0 / 7.0, 6.0 / 7.0]);
        let closed = nash_fl_three_closed_form(1.0 / 7.0, 2.0 / 7.0, 6.0 / 7.0).unwrap();
        assert!((closed.y - irrational()).abs() < 1e-15);
        assert_eq!(closed.loc_error, 0.0);
        let case = ThreeAgentCase::new(1.0 / 7.0, 2.0 / 7.0, 6.0 / 7.0).unwrap();
        assert_eq!(case.branch, ThreeAgentBranch::RightOfX2);
        assert!((case.c - 53.0 / 49.0).abs() < 1e-15);

        let num = nash_fl_numeric(&prof, &cfg).unwrap();
        assert!((num.y - irrational()).abs() <= 1e-9);
        assert!(num.loc_error <= 1e-9);
        let grid = nash_fl_grid_oracle(&prof, &cfg);
        assert!((grid.y - irrational()).abs() <= cfg.grid_resolution);
    }

    #[test]
    fn numeric_examples() {
        let cfg = SolveConfig::default();
        let same = nash_fl_numeric(&p(&[0.4; 5]), &cfg).unwrap();
        assert_eq!(same, FacilityPlacement::exact(0.4));

        let sandwich = nash_fl_numeric(&p(&[0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 1.0]), &cfg).unwrap();
        assert!((0.4455..=0.4465).contains(&sandwich.y));
        // Independent brute-force grid at step 5e-7 puts the optimum at 0.445903.
        assert!((sandwich.y - 0.445903).abs() < 1e-6);

        for n in 2..=40usize {
            let prof = LocationProfile::from_groups(&[(0.0, n - 1), (1.0, 1)]).unwrap();
            let y = nash_fl_numeric(&prof, &cfg).unwrap().y;
            assert!((y - 1.0 / n as f64).abs() <= 1e-9, "n = {n}: {y}");
        }
    }

    #[test]
    fn numeric_pins_breakpoints_exactly() {
        let cfg = SolveConfig::default();
        // Optimum at the median agent: S jumps from positive to negative there.
        let y = nash_fl_numeric(&p(&[0.0, 0.5, 0.5, 0.5, 1.0]), &cfg).unwrap();
        assert_eq!(y, FacilityPlacement::exact(0.5));
        // Two agents at 0 and one at 0.5 with n-1 = 3: optimum at the left group.
        let y = nash_fl_numeric(&p(&[0.0, 0.0, 0.0, 0.5]), &cfg).unwrap();
        assert_eq!(y, FacilityPlacement::exact(0.0));
    }

    #[test]
    fn numeric_reports_convergence_failure() {
        let cfg = SolveConfig::new(1e-12, 3, 1e-5).unwrap();
        let err = nash_fl_numeric(&p(&[0.0, 0.1, 0.7, 1.0]), &cfg).unwrap_err();
        match err {
            Error::Convergence { lo, hi, iterations } => {
                assert_eq!(iterations, 3);
                assert!(lo < hi);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_oracle_examples() {
        let cfg = SolveConfig::default();
        let g = nash_fl_grid_oracle(&p(&[0.0, 0.5]), &cfg);
        assert!((g.y - 0.25).abs() <= cfg.grid_resolution);
        let g = nash_fl_grid_oracle(&p(&[0.0, 0.0, 1.0]), &cfg);
        assert!((g.y - 1.0 / 3.0).abs() <= cfg.grid_resolution);
        assert_eq!(g.loc_error, cfg.grid_resolution);
    }

    #[test]
    fn three_agent_examples() {
        assert_eq!(
            nash_fl_three_closed_form(0.0, 0.5, 1.0).unwrap(),
            FacilityPlacement::exact(0.5)
        );
        assert_eq!(
            ThreeAgentCase::new(0.0, 0.5, 1.0).unwrap().branch,
            ThreeAgentBranch::AtX2
        );
        let y = nash_fl_three_closed_form(0.0, 0.0, 1.0).unwrap().y;
        assert!((y - 1.0 / 3.0).abs() < 1e-15);
        // Mirror image lands left of the middle agent.
        let case = ThreeAgentCase::new(0.0, 1.0, 1.0).unwrap();
        assert_eq!(case.branch, ThreeAgentBranch::LeftOfX2);
        assert!((case.location() - 2.0 / 3.0).abs() < 1e-15);
        assert!(nash_fl_three_closed_form(0.5, 0.2, 0.9).is_err());
        assert!(nash_fl_three_closed_form(0.1, 0.2, 1.5).is_err());
    }

    #[test]
    fn two_location_examples() {
        assert_eq!(nash_fl_two_location(1, 2, 1.0).unwrap().y, 0.5);
        assert!(nash_fl_two_location(1, 10, 8.0 / 9.0).unwrap().y.abs() < 1e-15);
        for k in 1..=20usize {
            assert!((nash_fl_two_location(k, 2 * k, 1.0).unwrap().y - 0.5).abs() < 1e-15);
        }
        for n in 2..=20usize {
            for k in 1..n {
                let y = nash_fl_two_location(k, n, 1.0).unwrap().y;
                assert!((y - k as f64 / n as f64).abs() < 1e-15);
            }
        }
        assert!(nash_fl_two_location(0, 3, 0.5).is_err());
        assert!(nash_fl_two_location(4, 3, 0.5).is_err());
        assert!(nash_fl_two_location(1, 3, 0.0).is_err());
        assert!(nash_fl_two_location(1, 3, 1.5).is_err());
    }

    #[test]
    fn both_endpoint_branches_reachable() {
        for i in 1..=9 {
            let x = i as f64 / 10.0;
            let mut at_zero = false;
            let mut at_x = false;
            for n in 1..=50usize {
                for k in 1..=n {
                    let y = nash_fl_two_location(k, n, x).unwrap().y;
                    at_zero |= y == 0.0;
                    at_x |= y == x;
                }
            }
            assert!(at_zero && at_x, "x = {x}");
        }
    }

    #[test]
    fn dispatcher_examples() {
        let cfg = SolveConfig::default();
        assert_eq!(nash_fl(&p(&[0.3, 0.7]), &cfg).unwrap().y, 0.5);
        assert_eq!(nash_fl(&p(&[0.8]), &cfg).unwrap().y, 0.8);
        let y = nash_fl(&p(&[0.1, 0.1, 0.6, 0.6, 0.6]), &cfg).unwrap().y;
        assert!((y - 0.5).abs() < 1e-12, "{y}");
        let g = nash_fl_grid_oracle(&p(&[0.1, 0.1, 0.6, 0.6, 0.6]), &cfg);
        assert!((g.y - 0.5).abs() <= cfg.grid_resolution);
        let y = nash_fl(&p(&[2.0 / 7.0, 6.0 / 7.0, 1.0 / 7.0]), &cfg)
            .unwrap()
            .y;
        assert!((y - irrational()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularities_are_handled() {
        let cfg = SolveConfig::default();
        // Agents at both ends: Nash is zero at 0 and 1, optimum interior.
        let prof = p(&[0.0, 0.0, 0.3, 1.0, 1.0]);
        let y = nash_fl_numeric(&prof, &cfg).unwrap();
        let g = nash_fl_grid_oracle(&prof, &cfg);
        assert!(y.y > 0.0 && y.y < 1.0);
        assert!((y.y - g.y).abs() <= cfg.grid_resolution + cfg.eps_loc);
    }

    #[test]
    fn value_error_bound_covers_true_gap() {
        let cfg = SolveConfig::default().with_eps(1e-3).unwrap();
        let prof = p(&[0.05, 0.2, 0.33, 0.8, 0.9]);
        let approx = nash_fl_numeric(&prof, &cfg).unwrap();
        let exact = nash_fl_numeric(&prof, &SolveConfig::default()).unwrap();
        let gap = (log_nash(exact.y, &prof).unwrap().exp()
            - log_nash(approx.y, &prof).unwrap().exp())
        .abs();
        assert!(gap <= nash_value_error_bound(&prof, &approx));
        assert_eq!(
            nash_value_error_bound(&prof, &FacilityPlacement::exact(0.3)),
            0.0
        );
    }

    #[test]
    fn differential_random_triples() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let cfg = SolveConfig::default();
        for _ in 0..20_000 {
            let mut xs: Vec<f64> = (0..3)
                .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
                .collect();
            xs.sort_by(f64::total_cmp);
            let closed = nash_fl_three_closed_form(xs[0], xs[1], xs[2]).unwrap().y;
            let num = nash_fl_numeric(&p(&xs), &cfg).unwrap().y;
            assert!((closed - num).abs() <= 1e-9, "{xs:?}: {closed} vs {num}");
        }
    }
}
