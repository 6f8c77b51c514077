//! Approximation-ratio measurement.
//!
//! The ratio of a mechanism for an objective is the optimal objective value
//! divided by the value at the mechanism's placement. The optimum comes from
//! Mid for egalitarian welfare, Med for utilitarian welfare and NashFL for
//! Nash welfare. Worst cases are estimated by seeded random sampling joined
//! with the adversarial profile families below, which are the extremal
//! instances for the known bounds.

use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{esw, log_nash, usw};
use crate::solver::nash_fl;
use crate::{apply_mechanism, Error, LocationProfile, MechanismId, Result, SolveConfig};

/// Relative tolerance for table pass/fail checks.
pub const TABLE_TOL: f64 = 1e-6;
pub const USW_FLOOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Objective {
    Esw,
    Usw,
    Nash,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Esw, Objective::Usw, Objective::Nash];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Esw => "esw",
            Objective::Usw => "usw",
            Objective::Nash => "nash",
        }
    }

    /// The mechanism that maximizes this objective.
    pub fn optimal_mechanism(self) -> MechanismId {
        match self {
            Objective::Esw => MechanismId::Mid,
            Objective::Usw => MechanismId::Med,
            Objective::Nash => MechanismId::NashFl,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownObjective(s.to_string()))
    }
}

/// A welfare ratio; `Unbounded` when the mechanism achieves zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Unbounded,
}

impl Ratio {
    pub fn as_f64(self) -> f64 {
        match self {
            Ratio::Finite(r) => r,
            Ratio::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(self) -> bool {
        self == Ratio::Unbounded
    }

    /// `Unbounded` sorts above every finite ratio.
    pub fn total_cmp(&self, other: &Ratio) -> Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r}"),
            Ratio::Unbounded => f.write_str("inf"),
        }
    }
}

/// One ratio measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRecord {
    pub mechanism: MechanismId,
    pub objective: Objective,
    pub profile: LocationProfile,
    /// Where the audited mechanism put the facility.
    pub facility: f64,
    pub optimal_value: f64,
    pub achieved_value: f64,
    /// Natural logs of the two values; Nash ratios are formed from these so
    /// they survive when the values themselves underflow.
    pub log_optimal: f64,
    pub log_achieved: f64,
    pub ratio: Ratio,
    /// Which instance produced the record, e.g. `random#17` or `mid_nash`.
    pub witness: String,
}

pub fn approx_ratio(
    id: MechanismId,
    objective: Objective,
    profile: &LocationProfile,
    cfg: &SolveConfig,
) -> Result<RatioRecord> {
    ratio_with_witness(id, objective, profile, cfg, "given".to_string())
}

fn ln_or_sentinel(v: f64) -> f64 {
    if v > 0.0 {
        libm::log(v)
    } else {
        f64::NEG_INFINITY
    }
}

fn ratio_with_witness(
    id: MechanismId,
    objective: Objective,
    profile: &LocationProfile,
    cfg: &SolveConfig,
    witness: String,
) -> Result<RatioRecord> {
    let facility = apply_mechanism(id, profile, cfg)?.y;
    let optimum = apply_mechanism(objective.optimal_mechanism(), profile, cfg)?.y;
    let (log_optimal, log_achieved) = match objective {
        Objective::Esw => (
            ln_or_sentinel(esw(optimum, profile)?),
            ln_or_sentinel(esw(facility, profile)?),
        ),
        Objective::Usw => (
            ln_or_sentinel(usw(optimum, profile)?),
            ln_or_sentinel(usw(facility, profile)?),
        ),
        Objective::Nash => (log_nash(optimum, profile)?, log_nash(facility, profile)?),
    };
    let ratio = match (
        log_optimal == f64::NEG_INFINITY,
        log_achieved == f64::NEG_INFINITY,
    ) {
        (true, _) => Ratio::Finite(1.0),
        (false, true) => Ratio::Unbounded,
        (false, false) => Ratio::Finite(libm::exp(log_optimal - log_achieved)),
    };
    let value = |ln: f64| {
        if ln == f64::NEG_INFINITY {
            0.0
        } else {
            libm::exp(ln)
        }
    };
    Ok(RatioRecord {
        mechanism: id,
        objective,
        profile: profile.clone(),
        facility,
        optimal_value: value(log_optimal),
        achieved_value: value(log_achieved),
        log_optimal,
        log_achieved,
        ratio,
        witness,
    })
}

/// Profile families on which the known bounds are attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdversarialFamily {
    /// `n-1` agents at 0 and one at `(n-2)/(n-1)`: NashFL's egalitarian ratio hits `n/2`.
    EgalTight,
    /// `round(r n)` agents at 1, the rest at 0, `r = (2 - sqrt 2)/2`:
    /// NashFL's utilitarian ratio tends to `(sqrt 2 + 1)/2`.
    UswTight,
    /// `n-1` agents at 0 and one at 1.
    MidNash,
    /// `n-1` agents at 0 and one at 1/2: MidOrNearest's Nash ratio is `2^(n-2)`.
    MidOrNearestNash,
    /// One agent at 1/2 and `n-1` at 1: MidOrNearest's egalitarian ratio is 3/2.
    MidOrNearestEgal,
    /// `k` agents at 0 and `k` at 1/4 (or at the given parameter).
    SpImpossibilityDemo,
    /// `k` agents at 0, `k` at 1/2, one at 1.
    Sandwich,
}

/// A ratio a family is known to attain exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyTarget {
    pub mechanism: MechanismId,
    pub objective: Objective,
    pub ratio: Ratio,
}

fn usw_tight_r() -> f64 {
    (2.0 - core::f64::consts::SQRT_2) / 2.0
}

impl AdversarialFamily {
    pub const ALL: [AdversarialFamily; 7] = [
        AdversarialFamily::EgalTight,
        AdversarialFamily::UswTight,
        AdversarialFamily::MidNash,
        AdversarialFamily::MidOrNearestNash,
        AdversarialFamily::MidOrNearestEgal,
        AdversarialFamily::SpImpossibilityDemo,
        AdversarialFamily::Sandwich,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversarialFamily::EgalTight => "egal_tight",
            AdversarialFamily::UswTight => "usw_tight",
            AdversarialFamily::MidNash => "mid_nash",
            AdversarialFamily::MidOrNearestNash => "midornearest_nash",
            AdversarialFamily::MidOrNearestEgal => "midornearest_egal",
            AdversarialFamily::SpImpossibilityDemo => "sp_impossibility_demo",
            AdversarialFamily::Sandwich => "sandwich",
        }
    }

    /// Whether `size` counts groups (`k`) rather than agents.
    pub fn sized_by_group(self) -> bool {
        matches!(
            self,
            AdversarialFamily::SpImpossibilityDemo | AdversarialFamily::Sandwich
        )
    }

    /// The `size` argument that yields a profile of `n` agents, if any.
    pub fn size_for_agents(self, n: usize) -> Option<usize> {
        match self {
            AdversarialFamily::SpImpossibilityDemo => {
                (n >= 2 && n.is_multiple_of(2)).then_some(n / 2)
            }
            AdversarialFamily::Sandwich => (n >= 3 && n % 2 == 1).then_some((n - 1) / 2),
            _ => (n >= 2).then_some(n),
        }
    }

    /// Builds the profile. `size` is the agent count, or `k` for group-sized
    /// families. `parameter` overrides the free location where one exists:
    /// the lone agent for `egal_tight`, `mid_nash` and `midornearest_nash`,
    /// the fraction `r` for `usw_tight`, the second group for
    /// `sp_impossibility_demo`.
    pub fn generate(self, size: usize, parameter: Option<f64>) -> Result<LocationProfile> {
        let too_small = Error::FamilySize {
            family: self.name(),
            size,
        };
        let min = if self.sized_by_group() { 1 } else { 2 };
        if size < min {
            return Err(too_small);
        }
        let n = size;
        let nf = n as f64;
        let groups: Vec<(f64, usize)> = match self {
            AdversarialFamily::EgalTight => {
                let x = parameter.unwrap_or((nf - 2.0) / (nf - 1.0));
                alloc::vec![(0.0, n - 1), (x, 1)]
            }
            AdversarialFamily::UswTight => {
                let r = parameter.unwrap_or_else(usw_tight_r);
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::Domain {
                        what: "usw_tight fraction",
                        value: r,
                    });
                }
                let k = libm::round(r * nf) as usize;
                alloc::vec![(0.0, n - k), (1.0, k)]
            }
            AdversarialFamily::MidNash => alloc::vec![(0.0, n - 1), (parameter.unwrap_or(1.0), 1)],
            AdversarialFamily::MidOrNearestNash => {
                alloc::vec![(0.0, n - 1), (parameter.unwrap_or(0.5), 1)]
            }
            AdversarialFamily::MidOrNearestEgal => alloc::vec![(0.5, 1), (1.0, n - 1)],
            AdversarialFamily::SpImpossibilityDemo => {
                alloc::vec![(0.0, size), (parameter.unwrap_or(0.25), size)]
            }
            AdversarialFamily::Sandwich => alloc::vec![(0.0, size), (0.5, size), (1.0, 1)],
        };
        LocationProfile::from_groups(&groups)
    }

    /// Ratios this family attains exactly at `n` agents (default parameters).
    pub fn targets(self, n: usize) -> Vec<FamilyTarget> {
        use MechanismId::*;
        use Objective::*;
        let t = |mechanism, objective, ratio| FamilyTarget {
            mechanism,
            objective,
            ratio,
        };
        let nf = n as f64;
        if self.size_for_agents(n).is_none() {
            return Vec::new();
        }
        match self {
            AdversarialFamily::EgalTight if n >= 3 => {
                alloc::vec![t(NashFl, Esw, Ratio::Finite(nf / 2.0))]
            }
            AdversarialFamily::UswTight => {
                let k = libm::round(usw_tight_r() * nf);
                let r = k / nf;
                if k < 1.0 {
                    return Vec::new();
                }
                let realized = (1.0 - r) / ((1.0 - r) * (1.0 - r) + r * r);
                alloc::vec![t(NashFl, Usw, Ratio::Finite(realized))]
            }
            AdversarialFamily::MidNash => alloc::vec![
                t(Mid, Usw, Ratio::Finite(2.0 - 2.0 / nf)),
                t(Mid, Nash, Ratio::Finite(mid_nash_ratio(n))),
                t(MidOrNearest, Usw, Ratio::Finite(2.0 - 2.0 / nf)),
                t(Med, Esw, Ratio::Unbounded),
                t(Med, Nash, Ratio::Unbounded),
            ],
            AdversarialFamily::MidOrNearestNash if n >= 3 => {
                alloc::vec![t(
                    MidOrNearest,
                    Nash,
                    Ratio::Finite(libm::pow(2.0, nf - 2.0))
                )]
            }
            AdversarialFamily::MidOrNearestEgal => {
                alloc::vec![t(MidOrNearest, Esw, Ratio::Finite(1.5))]
            }
            _ => Vec::new(),
        }
    }
}

/// `(2^n / n) ((n-1)/n)^(n-1)`, evaluated in log space.
pub fn mid_nash_ratio(n: usize) -> f64 {
    let nf = n as f64;
    libm::exp(
        nf * core::f64::consts::LN_2 - libm::log(nf) + (nf - 1.0) * libm::log((nf - 1.0) / nf),
    )
}

impl fmt::Display for AdversarialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversarialFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdversarialFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

pub fn adversarial_profiles(
    family: &str,
    size: usize,
    parameter: Option<f64>,
) -> Result<LocationProfile> {
    family
        .parse::<AdversarialFamily>()?
        .generate(size, parameter)
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n` i.i.d. uniform locations. Sample `index` of `seed` always draws from
/// the same stream, whatever order samples are generated in.
pub fn random_profile(n: usize, seed: u64, index: u64) -> Result<LocationProfile> {
    let mut rng = sample_rng(seed, index);
    LocationProfile::new((0..n).map(|_| unit_f64(&mut rng)).collect())
}

/// `n` locations on a random lattice `{0, 1/m, ..., 1}` with `m` in 1..=8,
/// so agents frequently share locations.
pub fn clustered_profile(n: usize, seed: u64, index: u64) -> Result<LocationProfile> {
    let mut rng = sample_rng(seed, index ^ (1 << 63));
    let m = 1 + rng.next_u64() % 8;
    LocationProfile::new(
        (0..n)
            .map(|_| (rng.next_u64() % (m + 1)) as f64 / m as f64)
            .collect(),
    )
}

/// Largest ratio over `samples` random profiles of `n` agents and every
/// adversarial family that can be built with `n` agents. Ties keep the
/// earliest instance; random samples come first.
pub fn empirical_worst_case(
    id: MechanismId,
    objective: Objective,
    n: usize,
    samples: usize,
    seed: u64,
    cfg: &SolveConfig,
) -> Result<RatioRecord> {
    if samples == 0 {
        return Err(Error::EmptyInput("samples"));
    }
    let mut worst: Option<RatioRecord> = None;
    let mut offer = |record: RatioRecord| {
        if worst
            .as_ref()
            .is_none_or(|w| record.ratio.total_cmp(&w.ratio) == Ordering::Greater)
        {
            worst = Some(record);
        }
    };
    for i in 0..samples as u64 {
        let profile = random_profile(n, seed, i)?;
        offer(ratio_with_witness(
            id,
            objective,
            &profile,
            cfg,
            format!("random#{i}"),
        )?);
    }
    for family in AdversarialFamily::ALL {
        if let Some(size) = family.size_for_agents(n) {
            let profile = family.generate(size, None)?;
            let label = match family {
                AdversarialFamily::UswTight => {
                    let k = profile.locations().iter().filter(|&&x| x == 1.0).count();
                    format!("usw_tight(r={})", k as f64 / n as f64)
                }
                _ => family.name().to_string(),
            };
            offer(ratio_with_witness(id, objective, &profile, cfg, label)?);
        }
    }
    Ok(worst.expect("at least one sample"))
}

/// Largest ratio over profiles with `k` agents at 1 and `n - k` at 0,
/// `k = 1..n-1`.
pub fn two_location_scan(
    id: MechanismId,
    objective: Objective,
    n: usize,
    cfg: &SolveConfig,
) -> Result<RatioRecord> {
    if n < 2 {
        return Err(Error::FamilySize {
            family: "two_location_scan",
            size: n,
        });
    }
    let mut worst: Option<RatioRecord> = None;
    for k in 1..n {
        let profile = LocationProfile::from_groups(&[(0.0, n - k), (1.0, k)])?;
        let record =
            ratio_with_witness(id, objective, &profile, cfg, format!("two_location(k={k})"))?;
        if worst
            .as_ref()
            .is_none_or(|w| record.ratio.total_cmp(&w.ratio) == Ordering::Greater)
        {
            worst = Some(record);
        }
    }
    Ok(worst.expect("n >= 2"))
}

/// Known worst-case guarantee for one (mechanism, objective) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalBound {
    pub label: &'static str,
    /// No profile exceeds this ratio. `None` when no bound applies at this `n`.
    pub upper: Option<Ratio>,
    /// Some adversarial family attains this ratio.
    pub tight: Option<Ratio>,
}

pub fn theoretical_bound(id: MechanismId, objective: Objective, n: usize) -> TheoreticalBound {
    use MechanismId::*;
    use Objective::*;
    let nf = n as f64;
    let fin = Ratio::Finite;
    let (label, upper, tight) = match (id, objective) {
        (Mid, Esw) => ("1", Some(fin(1.0)), None),
        (Mid, Usw) => (
            "2-2/n",
            Some(fin(2.0 - 2.0 / nf)),
            Some(fin(2.0 - 2.0 / nf)),
        ),
        (Mid, Nash) => (
            "O(2^n)",
            Some(fin(libm::pow(2.0, nf))),
            Some(fin(mid_nash_ratio(n))),
        ),
        (Med, Esw) => ("inf", Some(Ratio::Unbounded), Some(Ratio::Unbounded)),
        (Med, Usw) => ("1", Some(fin(1.0)), None),
        (Med, Nash) => ("inf", Some(Ratio::Unbounded), Some(Ratio::Unbounded)),
        (NashFl, Esw) => (
            "n/2",
            Some(fin(nf / 2.0)),
            (n >= 3).then_some(fin(nf / 2.0)),
        ),
        (NashFl, Usw) => ("[1.2,2]", Some(fin(2.0)), None),
        (NashFl, Nash) => ("1", Some(fin(1.0)), None),
        (MidOrNearest, Esw) => ("3/2", Some(fin(1.5)), Some(fin(1.5))),
        (MidOrNearest, Usw) => (
            "2-2/n",
            Some(fin(2.0 - 2.0 / nf)),
            Some(fin(2.0 - 2.0 / nf)),
        ),
        (MidOrNearest, Nash) => {
            let b = (n >= 3).then(|| fin(libm::pow(2.0, nf - 2.0)));
            ("2^(n-2)", b, b)
        }
    };
    TheoreticalBound {
        label,
        upper,
        tight,
    }
}

impl TheoreticalBound {
    /// Empirical ratio within the upper bound and reaching the tight value,
    /// both up to [`TABLE_TOL`] relative.
    pub fn admits(&self, empirical: Ratio) -> bool {
        let slack = |b: f64| TABLE_TOL * b.max(1.0);
        let below_upper = match (self.upper, empirical) {
            (None, _) | (Some(Ratio::Unbounded), _) => true,
            (Some(Ratio::Finite(_)), Ratio::Unbounded) => false,
            (Some(Ratio::Finite(u)), Ratio::Finite(r)) => r <= u + slack(u),
        };
        let reaches_tight = match (self.tight, empirical) {
            (None, _) | (Some(Ratio::Finite(_)), Ratio::Unbounded) => true,
            (Some(Ratio::Unbounded), r) => r.is_unbounded(),
            (Some(Ratio::Finite(t)), Ratio::Finite(r)) => r >= t - slack(t),
        };
        below_upper && reaches_tight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Cell {
    pub record: RatioRecord,
    pub bound: TheoreticalBound,
    pub pass: bool,
}

/// Empirical worst-case ratios for every mechanism and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Mechanism-major, in [`MechanismId::ALL`] × [`Objective::ALL`] order.
    pub cells: Vec<Table1Cell>,
}

impl Table1 {
    pub fn cell(&self, id: MechanismId, objective: Objective) -> &Table1Cell {
        let row = MechanismId::ALL.iter().position(|&m| m == id).unwrap();
        let col = Objective::ALL.iter().position(|&o| o == objective).unwrap();
        &self.cells[row * Objective::ALL.len() + col]
    }

    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }
}

pub fn table1_report(n: usize, samples: usize, seed: u64, cfg: &SolveConfig) -> Result<Table1> {
    if n < 2 {
        return Err(Error::Domain {
            what: "table agent count",
            value: n as f64,
        });
    }
    let mut cells = Vec::with_capacity(12);
    for id in MechanismId::ALL {
        for objective in Objective::ALL {
            let record = empirical_worst_case(id, objective, n, samples, seed, cfg)?;
            let bound = theoretical_bound(id, objective, n);
            let pass = bound.admits(record.ratio);
            cells.push(Table1Cell {
                record,
                bound,
                pass,
            });
        }
    }
    Ok(Table1 {
        n,
        samples,
        seed,
        cells,
    })
}

/// NashFL gives total utility at least `n/2`.
pub fn usw_floor_check(profile: &LocationProfile, cfg: &SolveConfig) -> Result<bool> {
    let y = nash_fl(profile, cfg)?.y;
    Ok(usw(y, profile)? >= profile.len() as f64 / 2.0 - USW_FLOOR_TOL)
}
