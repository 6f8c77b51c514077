//! Deterministic placement rules.

use core::fmt;
use core::str::FromStr;

use alloc::string::ToString;

use crate::solver::nash_fl;
use crate::{Error, FacilityPlacement, LocationProfile, Result, SolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechanismId {
    /// Midpoint of the extreme agents; maximizes egalitarian welfare.
    Mid,
    /// Leftmost median; maximizes utilitarian welfare.
    Med,
    /// 1/2 when the agents straddle it, otherwise the agent nearest to 1/2.
    MidOrNearest,
    /// Nash-welfare maximizer.
    NashFl,
}

impl MechanismId {
    pub const ALL: [MechanismId; 4] = [
        MechanismId::Mid,
        MechanismId::Med,
        MechanismId::MidOrNearest,
        MechanismId::NashFl,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            MechanismId::Mid => "mid",
            MechanismId::Med => "med",
            MechanismId::MidOrNearest => "midornearest",
            MechanismId::NashFl => "nashfl",
        }
    }

    pub fn place(self, profile: &LocationProfile, cfg: &SolveConfig) -> Result<FacilityPlacement> {
        apply_mechanism(self, profile, cfg)
    }
}

impl fmt::Display for MechanismId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: alloc::string::String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        MechanismId::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::UnknownMechanism(s.to_string()))
    }
}

pub fn mid(profile: &LocationProfile) -> FacilityPlacement {
    FacilityPlacement::exact(0.5 * (profile.leftmost() + profile.rightmost()))
}

pub fn med(profile: &LocationProfile) -> FacilityPlacement {
    let xs = profile.locations();
    // Index (n-1)/2 is the middle agent for odd n and the left median for even n.
    FacilityPlacement::exact(xs[(xs.len() - 1) / 2])
}

pub fn mid_or_nearest(profile: &LocationProfile) -> FacilityPlacement {
    let (lo, hi) = (profile.leftmost(), profile.rightmost());
    let y = if lo > 0.5 {
        lo
    } else if hi < 0.5 {
        hi
    } else {
        0.5
    };
    FacilityPlacement::exact(y)
}

pub fn apply_mechanism(
    id: MechanismId,
    profile: &LocationProfile,
    cfg: &SolveConfig,
) -> Result<FacilityPlacement> {
    match id {
        MechanismId::Mid => Ok(mid(profile)),
        MechanismId::Med => Ok(med(profile)),
        MechanismId::MidOrNearest => Ok(mid_or_nearest(profile)),
        MechanismId::NashFl => nash_fl(profile, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{esw, usw};
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn p(xs: &[f64]) -> LocationProfile {
        LocationProfile::from_slice(xs).unwrap()
    }

    #[test]
    fn mid_examples() {
        assert_eq!(mid(&p(&[0.0, 1.0])).y, 0.5);
        assert_eq!(mid(&p(&[0.0, 0.0, 0.0, 1.0])).y, 0.5);
        assert!((mid(&p(&[0.2, 0.4, 0.9])).y - 0.55).abs() < 1e-15);
    }

    #[test]
    fn med_examples() {
        assert_eq!(med(&p(&[0.0, 0.0, 1.0])).y, 0.0);
        assert_eq!(med(&p(&[0.0, 1.0])).y, 0.0);
        assert_eq!(med(&p(&[0.1, 0.5, 0.9])).y, 0.5);
        assert_eq!(med(&p(&[0.9, 0.1, 0.5, 0.7])).y, 0.5);
    }

    #[test]
    fn mid_or_nearest_examples() {
        assert_eq!(mid_or_nearest(&p(&[0.0, 1.0])).y, 0.5);
        assert_eq!(mid_or_nearest(&p(&[0.6, 0.8])).y, 0.6);
        assert_eq!(mid_or_nearest(&p(&[0.1, 0.3])).y, 0.3);
        for n in 2..10 {
            let prof = LocationProfile::from_groups(&[(0.0, n - 1), (0.5, 1)]).unwrap();
            assert_eq!(mid_or_nearest(&prof).y, 0.5);
        }
    }

    #[test]
    fn dispatch_examples() {
        let cfg = SolveConfig::default();
        assert_eq!(
            apply_mechanism(MechanismId::Mid, &p(&[0.0, 1.0]), &cfg)
                .unwrap()
                .y,
            0.5
        );
        let y = apply_mechanism(
            MechanismId::NashFl,
            &p(&[1.0 / 7.0, 2.0 / 7.0, 6.0 / 7.0]),
            &cfg,
        )
        .unwrap()
        .y;
        assert!((y - 0.30765).abs() < 1e-5);
        assert_eq!(
            apply_mechanism(MechanismId::Med, &p(&[0.0, 0.0, 1.0]), &cfg)
                .unwrap()
                .y,
            0.0
        );
    }

    #[test]
    fn names_round_trip_case_insensitively() {
        for m in MechanismId::ALL {
            assert_eq!(m.name().parse::<MechanismId>().unwrap(), m);
            assert_eq!(m.name().to_uppercase().parse::<MechanismId>().unwrap(), m);
        }
        assert_eq!(
            "MidOrNearest".parse::<MechanismId>().unwrap(),
            MechanismId::MidOrNearest
        );
        assert_eq!(
            "nash_fl".parse::<MechanismId>().unwrap(),
            MechanismId::NashFl
        );
        assert!("median".parse::<MechanismId>().is_err());
    }

    #[test]
    fn single_agent_everywhere() {
        let cfg = SolveConfig::default();
        for m in MechanismId::ALL {
            assert_eq!(m.place(&p(&[0.37]), &cfg).unwrap().y, 0.37);
        }
    }

    #[test]
    fn nash_fl_not_between_mid_and_med() {
        let cfg = SolveConfig::default();
        let prof = p(&[0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 1.0]);
        assert_eq!(mid(&prof).y, 0.5);
        assert_eq!(med(&prof).y, 0.5);
        let y = nash_fl(&prof, &cfg).unwrap().y;
        assert!((y - 0.446).abs() < 5e-4);
    }

    /// Median of the agents plus n-1 phantom points at 1/2.
    fn phantom_median(xs: &[f64]) -> f64 {
        let mut all: Vec<f64> = xs.to_vec();
        all.extend(core::iter::repeat_n(0.5, xs.len() - 1));
        all.sort_by(f64::total_cmp);
        all[all.len() / 2]
    }

    fn profile_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![0.0f64..=1.0, Just(0.0), Just(0.5), Just(1.0)],
            1..10,
        )
    }

    proptest! {
        #[test]
        fn mid_or_nearest_is_phantom_median(xs in profile_strategy()) {
            prop_assert_eq!(mid_or_nearest(&p(&xs)).y, phantom_median(&xs));
        }

        #[test]
        fn mid_and_med_are_optimal_on_grid(xs in profile_strategy()) {
            let prof = p(&xs);
            let best_e = esw(mid(&prof).y, &prof).unwrap();
            let best_u = usw(med(&prof).y, &prof).unwrap();
            for i in 0..=2000 {
                let y = i as f64 / 2000.0;
                prop_assert!(esw(y, &prof).unwrap() <= best_e + 1e-12);
                prop_assert!(usw(y, &prof).unwrap() <= best_u + 1e-12);
            }
        }

        #[test]
        fn anonymous_and_within_range(mut xs in profile_strategy(), rot in 0usize..10) {
            let cfg = SolveConfig::default();
            let prof = p(&xs);
            let len = xs.len();
            xs.rotate_left(rot % len);
            xs.reverse();
            let permuted = p(&xs);
            for m in MechanismId::ALL {
                let y = m.place(&prof, &cfg).unwrap().y;
                prop_assert_eq!(y, m.place(&permuted, &cfg).unwrap().y);
                prop_assert!(prof.leftmost() <= y && y <= prof.rightmost());
            }
        }
    }
}
