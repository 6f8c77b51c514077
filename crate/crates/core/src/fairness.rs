//! Individual and Unanimous Fair Share audits.
//!
//! Individual Fair Share asks that every agent receives utility at least
//! `1/n`. Unanimous Fair Share asks that every group of `|S|` co-located
//! agents receives at least `|S|/n` each. Only maximal co-located groups are
//! audited: a sub-group has the same utility and a smaller requirement.

use alloc::vec::Vec;

use crate::model::raw_utility;
use crate::{apply_mechanism, LocationProfile, MechanismId, Result, SolveConfig};

pub const DEFAULT_FAIRNESS_TOL: f64 = 1e-9;

/// Agents sharing one location.
#[derive(Debug, Clone, PartialEq)]
pub struct Coalition {
    pub location: f64,
    /// Original agent indices, ascending.
    pub members: Vec<usize>,
}

impl Coalition {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairnessNotion {
    Individual,
    Unanimous,
}

impl FairnessNotion {
    pub fn name(self) -> &'static str {
        match self {
            FairnessNotion::Individual => "ifs",
            FairnessNotion::Unanimous => "ufs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessFinding {
    pub mechanism: MechanismId,
    pub notion: FairnessNotion,
    pub profile: LocationProfile,
    pub facility: f64,
    pub coalition: Coalition,
    /// `|S| / n`.
    pub required: f64,
    /// Smallest utility among the coalition's members.
    pub achieved: f64,
    /// Amount subtracted from `required` before comparing.
    pub slack: f64,
    pub satisfied: bool,
}

/// Audit settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessAudit {
    pub tol: f64,
    /// Merge agents whose consecutive locations differ by at most this much.
    /// `None` groups by exact equality.
    pub coalesce_tol: Option<f64>,
}

impl Default for FairnessAudit {
    fn default() -> Self {
        Self {
            tol: DEFAULT_FAIRNESS_TOL,
            coalesce_tol: None,
        }
    }
}

impl FairnessAudit {
    /// NashFL is only located to within `eps_loc`, which can cost each
    /// agent up to that much utility; twice that absorbs it with room to spare.
    pub fn slack(&self, id: MechanismId, cfg: &SolveConfig) -> f64 {
        match id {
            MechanismId::NashFl => self.tol + 2.0 * cfg.eps_loc,
            _ => self.tol,
        }
    }

    pub fn ufs(
        &self,
        id: MechanismId,
        profile: &LocationProfile,
        cfg: &SolveConfig,
    ) -> Result<Vec<FairnessFinding>> {
        let groups = match self.coalesce_tol {
            Some(tol) => coalitions_within(profile, tol),
            None => coalitions(profile),
        };
        self.audit(id, FairnessNotion::Unanimous, profile, groups, cfg)
    }

    pub fn ifs(
        &self,
        id: MechanismId,
        profile: &LocationProfile,
        cfg: &SolveConfig,
    ) -> Result<Vec<FairnessFinding>> {
        let mut singletons: Vec<Coalition> = (0..profile.len())
            .map(|pos| Coalition {
                location: profile.locations()[pos],
                members: alloc::vec![profile.original_index(pos)],
            })
            .collect();
        singletons.sort_by_key(|c| c.members[0]);
        self.audit(id, FairnessNotion::Individual, profile, singletons, cfg)
    }

    fn audit(
        &self,
        id: MechanismId,
        notion: FairnessNotion,
        profile: &LocationProfile,
        groups: Vec<Coalition>,
        cfg: &SolveConfig,
    ) -> Result<Vec<FairnessFinding>> {
        let y = apply_mechanism(id, profile, cfg)?.y;
        let n = profile.len() as f64;
        let slack = self.slack(id, cfg);
        let locations = profile.original_order();
        Ok(groups
            .into_iter()
            .map(|coalition| {
                let required = coalition.size() as f64 / n;
                let achieved = coalition
                    .members
                    .iter()
                    .map(|&a| raw_utility(y, locations[a]))
                    .fold(f64::INFINITY, f64::min);
                FairnessFinding {
                    mechanism: id,
                    notion,
                    profile: profile.clone(),
                    facility: y,
                    coalition,
                    required,
                    achieved,
                    slack,
                    satisfied: achieved >= required - slack,
                }
            })
            .collect())
    }
}

/// Maximal groups of agents at exactly the same location, left to right.
pub fn coalitions(profile: &LocationProfile) -> Vec<Coalition> {
    group_by(profile, |a, b| a == b)
}

/// Like [`coalitions`], but chains agents whose neighbouring locations differ
/// by at most `tol`. The coalition location is its leftmost member's.
pub fn coalitions_within(profile: &LocationProfile, tol: f64) -> Vec<Coalition> {
    group_by(profile, |a, b| b - a <= tol)
}

fn group_by(profile: &LocationProfile, same: impl Fn(f64, f64) -> bool) -> Vec<Coalition> {
    let xs = profile.locations();
    let mut out: Vec<Coalition> = Vec::new();
    for (pos, &x) in xs.iter().enumerate() {
        let agent = profile.original_index(pos);
        match out.last_mut() {
            Some(c) if same(xs[pos - 1], x) => c.members.push(agent),
            _ => out.push(Coalition {
                location: x,
                members: alloc::vec![agent],
            }),
        }
    }
    for c in &mut out {
        c.members.sort_unstable();
    }
    out
}

pub fn audit_ufs(
    id: MechanismId,
    profile: &LocationProfile,
    cfg: &SolveConfig,
) -> Result<Vec<FairnessFinding>> {
    FairnessAudit::default().ufs(id, profile, cfg)
}

pub fn audit_ifs(
    id: MechanismId,
    profile: &LocationProfile,
    cfg: &SolveConfig,
) -> Result<Vec<FairnessFinding>> {
    FairnessAudit::default().ifs(id, profile, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn p(xs: &[f64]) -> LocationProfile {
        LocationProfile::from_slice(xs).unwrap()
    }

    #[test]
    fn coalition_examples() {
        let cs = coalitions(&p(&[0.0, 1.0, 0.0]));
        assert_eq!(cs.len(), 2);
        assert_eq!((cs[0].location, cs[0].members.clone()), (0.0, vec![0, 2]));
        assert_eq!((cs[1].location, cs[1].size()), (1.0, 1));

        let cs = coalitions(&p(&[0.3, 0.3, 0.3]));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].size(), 3);

        assert_eq!(coalitions(&p(&[0.1, 0.2, 0.3])).len(), 3);
        assert_eq!(
            coalitions_within(&p(&[0.1, 0.1 + 1e-12, 0.3]), 1e-9).len(),
            2
        );
    }

    #[test]
    fn mid_violates_ufs() {
        let cfg = SolveConfig::default();
        let f = audit_ufs(MechanismId::Mid, &p(&[0.0, 0.0, 1.0]), &cfg).unwrap();
        let at_zero = &f[0];
        assert_eq!(at_zero.coalition.location, 0.0);
        assert!((at_zero.required - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(at_zero.achieved, 0.5);
        assert!(!at_zero.satisfied);
        assert!(f[1].satisfied);
    }

    #[test]
    fn med_violations() {
        let cfg = SolveConfig::default();
        let f = audit_ufs(MechanismId::Med, &p(&[0.0, 0.0, 0.0, 1.0, 1.0]), &cfg).unwrap();
        let at_one = f.iter().find(|f| f.coalition.location == 1.0).unwrap();
        assert!((at_one.required - 0.4).abs() < 1e-15);
        assert_eq!(at_one.achieved, 0.0);
        assert!(!at_one.satisfied);

        let f = audit_ifs(MechanismId::Med, &p(&[0.0, 0.0, 1.0]), &cfg).unwrap();
        assert_eq!(f.iter().filter(|f| !f.satisfied).count(), 1);
        assert_eq!(f[2].coalition.members, vec![2]);
        assert!(!f[2].satisfied);
    }

    #[test]
    fn nash_fl_ifs_example() {
        let cfg = SolveConfig::default();
        let f = audit_ifs(MechanismId::NashFl, &p(&[0.0, 0.0, 1.0]), &cfg).unwrap();
        let achieved: Vec<f64> = f.iter().map(|f| f.achieved).collect();
        assert!((achieved[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((achieved[2] - 1.0 / 3.0).abs() < 1e-12);
        assert!(f.iter().all(|f| f.satisfied));
        assert_eq!(f[0].slack, DEFAULT_FAIRNESS_TOL + 2.0 * cfg.eps_loc);
    }

    #[test]
    fn single_agent_passes_everything() {
        let cfg = SolveConfig::default();
        for m in MechanismId::ALL {
            let f = audit_ifs(m, &p(&[0.8]), &cfg).unwrap();
            assert!(f[0].satisfied && f[0].achieved == 1.0);
        }
    }

    fn lattice_profile() -> impl Strategy<Value = Vec<f64>> {
        (2u32..9).prop_flat_map(|m| {
            prop::collection::vec((0..=m).prop_map(move |i| i as f64 / m as f64), 1..14)
        })
    }

    proptest! {
        #[test]
        fn nash_fl_satisfies_ufs(xs in lattice_profile()) {
            let cfg = SolveConfig::default();
            for f in audit_ufs(MechanismId::NashFl, &p(&xs), &cfg).unwrap() {
                prop_assert!(f.satisfied, "{:?}", f);
            }
        }

        #[test]
        fn ufs_implies_ifs(xs in lattice_profile(), mech in 0usize..4) {
            let cfg = SolveConfig::default();
            let id = MechanismId::ALL[mech];
            let prof = p(&xs);
            if audit_ufs(id, &prof, &cfg).unwrap().iter().all(|f| f.satisfied) {
                prop_assert!(audit_ifs(id, &prof, &cfg).unwrap().iter().all(|f| f.satisfied));
            }
        }

        #[test]
        fn maximal_coalitions_dominate_subsets(xs in lattice_profile(), mech in 0usize..4, keep in 1usize..14) {
            let cfg = SolveConfig::default();
            let id = MechanismId::ALL[mech];
            let prof = p(&xs);
            let n = prof.len() as f64;
            for f in audit_ufs(id, &prof, &cfg).unwrap() {
                let sub = keep.min(f.coalition.size());
                let sub_required = sub as f64 / n;
                prop_assert!(sub_required <= f.required);
                if f.satisfied {
                    prop_assert!(f.achieved >= sub_required - f.slack);
                }
            }
        }
    }
}
