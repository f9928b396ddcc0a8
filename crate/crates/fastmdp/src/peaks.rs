//! Peak construction for one decision step: the goal peak, risk wells around
//! other batch aircraft and intruders, and static terrain wells.

use serde::{Deserialize, Serialize};

use crate::domain::{AircraftState, Peak, PeakKind, Vec3};
use crate::{Error, Result};

/// Goal peak parameters: vertiport attraction.
pub const GOAL_REWARD: f64 = 200.0;
pub const GOAL_DISCOUNT: f64 = 0.999;

/// Traffic risk-well parameters. Five wells are strung along the straight
/// extrapolation of the traffic's velocity, one per lookahead offset in
/// `TRAFFIC_OFFSETS_S` (seconds), with radius growing by
/// `TRAFFIC_RADIUS_PER_S` per second of lookahead.
pub const TRAFFIC_REWARD: f64 = 1000.0;
pub const TRAFFIC_DISCOUNT: f64 = 0.97;
pub const TRAFFIC_BASE_RADIUS: f64 = 300.0;
pub const TRAFFIC_RADIUS_PER_S: f64 = 10.0;
pub const TRAFFIC_OFFSETS_S: [f64; 5] = [-5.0, 0.0, 5.0, 10.0, 15.0];

/// Default terrain well parameters used when synthesizing terrain.
pub const TERRAIN_REWARD: f64 = 1000.0;
pub const TERRAIN_DISCOUNT: f64 = 0.99;

/// All peaks visible to one planning aircraft for one decision step, grouped
/// by class so each class can be max-reduced independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSets {
    pub positive: Vec<Peak>,
    pub batch_negative: Vec<Peak>,
    pub intruder_negative: Vec<Peak>,
    pub terrain_negative: Vec<Peak>,
}

/// The single positive attraction peak for a goal position.
pub fn build_goal_peak(goal: Vec3) -> Peak {
    Peak {
        reward_magnitude: GOAL_REWARD,
        discount: GOAL_DISCOUNT,
        position: goal,
        radius: f64::INFINITY,
        kind: PeakKind::Goal,
    }
}

/// Five collision-avoidance wells along a traffic's linear trajectory.
fn traffic_peaks(position: Vec3, velocity: Vec3, kind: PeakKind) -> [Peak; 5] {
    TRAFFIC_OFFSETS_S.map(|t| Peak {
        reward_magnitude: TRAFFIC_REWARD,
        discount: TRAFFIC_DISCOUNT,
        position: position + velocity * t,
        radius: TRAFFIC_BASE_RADIUS + TRAFFIC_RADIUS_PER_S * t,
        kind,
    })
}

/// Risk wells for one intruder given its position and linear velocity.
pub fn build_traffic_peaks(position: Vec3, velocity: Vec3) -> [Peak; 5] {
    traffic_peaks(position, velocity, PeakKind::Intruder)
}

/// A terrain well with the standard magnitude and decay.
pub fn terrain_peak(position: Vec3, radius: f64) -> Peak {
    Peak {
        reward_magnitude: TERRAIN_REWARD,
        discount: TERRAIN_DISCOUNT,
        position,
        radius,
        kind: PeakKind::Terrain,
    }
}

/// Build the per-aircraft peak sets for one decision step.
///
/// Each batch aircraft sees: its own goal peak, five wells per *other* batch
/// aircraft, five wells per intruder, and the static terrain wells.
pub fn build_step_peaks(
    batch: &[AircraftState],
    goals: &[Vec3],
    intruders: &[(Vec3, Vec3)],
    terrain: &[Peak],
) -> Result<Vec<PeakSets>> {
    if batch.len() != goals.len() {
        return Err(Error::MismatchedBatchGoals {
            batch: batch.len(),
            goals: goals.len(),
        });
    }
    let intruder_negative: Vec<Peak> = intruders
        .iter()
        .flat_map(|(p, v)| build_traffic_peaks(*p, *v))
        .collect();
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let batch_negative: Vec<Peak> = batch
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, other)| {
                    traffic_peaks(other.position, other.velocity, PeakKind::BatchAircraft)
                })
                .collect();
            PeakSets {
                positive: vec![build_goal_peak(goals[i])],
                batch_negative,
                intruder_negative: intruder_negative.clone(),
                terrain_negative: terrain.to_vec(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn goal_peak_parameters() {
        let p = build_goal_peak(Vec3::new(0.0, 0.0, 300.0));
        assert_eq!(p.reward_magnitude, 200.0);
        assert_eq!(p.discount, 0.999);
        assert_eq!(p.position, Vec3::new(0.0, 0.0, 300.0));
        assert!(p.radius.is_infinite());
        assert_eq!(p.kind, PeakKind::Goal);
        assert!(p.violations().is_empty());
    }

    #[test]
    fn goal_peaks_differ_only_in_position() {
        let a = build_goal_peak(Vec3::new(1.0, 2.0, 3.0));
        let b = build_goal_peak(Vec3::new(-7.0, 0.0, 500.0));
        assert_eq!(a.reward_magnitude, b.reward_magnitude);
        assert_eq!(a.discount, b.discount);
        assert_eq!(a.radius, b.radius);
        assert_eq!(a.kind, b.kind);
        assert_ne!(a.position, b.position);
    }

    #[test]
    fn traffic_peaks_follow_velocity_extrapolation() {
        let p = Vec3::new(0.0, 0.0, 100.0);
        let v = Vec3::new(50.0, 0.0, 0.0);
        let peaks = build_traffic_peaks(p, v);
        assert_eq!(peaks.len(), 5);
        // t = 15 s member
        let far = &peaks[4];
        assert_eq!(far.position, Vec3::new(750.0, 0.0, 100.0));
        assert_eq!(far.radius, 450.0);
        // t = -5 s member
        let behind = &peaks[0];
        assert_eq!(behind.position, Vec3::new(-250.0, 0.0, 100.0));
        assert_eq!(behind.radius, 250.0);
        for peak in &peaks {
            assert_eq!(peak.reward_magnitude, 1000.0);
            assert_eq!(peak.discount, 0.97);
            assert!(peak.violations().is_empty());
        }
    }

    #[test]
    fn stationary_traffic_peaks_are_colocated() {
        let p = Vec3::new(3.0, -2.0, 150.0);
        let peaks = build_traffic_peaks(p, Vec3::zeros());
        let radii: Vec<f64> = peaks.iter().map(|pk| pk.radius).collect();
        assert_eq!(radii, vec![250.0, 300.0, 350.0, 400.0, 450.0]);
        assert!(peaks.iter().all(|pk| pk.position == p));
    }

    fn state_at(p: Vec3) -> AircraftState {
        AircraftState::new(p, 0.0, 30.0, 0.0, 0.0)
    }

    #[test]
    fn step_peaks_counts_single_aircraft() {
        let batch = vec![state_at(Vec3::zeros())];
        let goals = vec![Vec3::new(1000.0, 0.0, 200.0)];
        let intruders = vec![
            (Vec3::new(500.0, 0.0, 200.0), Vec3::new(0.0, 10.0, 0.0)),
            (Vec3::new(-500.0, 0.0, 200.0), Vec3::zeros()),
        ];
        let terrain = vec![
            terrain_peak(Vec3::new(0.0, 800.0, 0.0), 300.0),
            terrain_peak(Vec3::new(0.0, -800.0, 0.0), 300.0),
            terrain_peak(Vec3::new(800.0, 800.0, 0.0), 300.0),
        ];
        let sets = build_step_peaks(&batch, &goals, &intruders, &terrain).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].positive.len(), 1);
        assert_eq!(sets[0].batch_negative.len(), 0);
        assert_eq!(sets[0].intruder_negative.len(), 10);
        assert_eq!(sets[0].terrain_negative.len(), 3);
    }

    #[test]
    fn step_peaks_counts_batch_of_three() {
        let batch = vec![
            state_at(Vec3::zeros()),
            state_at(Vec3::new(1000.0, 0.0, 0.0)),
            state_at(Vec3::new(0.0, 1000.0, 0.0)),
        ];
        let goals = vec![Vec3::zeros(); 3];
        let sets = build_step_peaks(&batch, &goals, &[], &[]).unwrap();
        for set in &sets {
            assert_eq!(set.batch_negative.len(), 10); // 5 x (3 - 1)
            assert_eq!(set.intruder_negative.len(), 0);
        }
    }

    #[test]
    fn mismatched_goals_is_an_error() {
        let batch = vec![state_at(Vec3::zeros())];
        let err = build_step_peaks(&batch, &[], &[], &[]).unwrap_err();
        assert!(matches!(err, Error::MismatchedBatchGoals { .. }));
    }

    proptest! {
        // Counts must match the construction rule for arbitrary sizes.
        #[test]
        fn peak_counts_match_formulas(n in 1usize..6, ri in 0usize..20, rt in 0usize..10) {
            let batch: Vec<AircraftState> = (0..n)
                .map(|k| state_at(Vec3::new(k as f64 * 500.0, 0.0, 200.0)))
                .collect();
            let goals = vec![Vec3::new(0.0, 5000.0, 200.0); n];
            let intruders: Vec<(Vec3, Vec3)> = (0..ri)
                .map(|k| (Vec3::new(0.0, k as f64 * 100.0, 150.0), Vec3::new(5.0, 0.0, 0.0)))
                .collect();
            let terrain: Vec<Peak> = (0..rt)
                .map(|k| terrain_peak(Vec3::new(-(k as f64) * 200.0, 0.0, 0.0), 250.0))
                .collect();
            let sets = build_step_peaks(&batch, &goals, &intruders, &terrain).unwrap();
            prop_assert_eq!(sets.len(), n);
            for set in &sets {
                prop_assert_eq!(set.positive.len(), 1);
                prop_assert_eq!(set.batch_negative.len(), 5 * (n - 1));
                prop_assert_eq!(set.intruder_negative.len(), 5 * ri);
                prop_assert_eq!(set.terrain_negative.len(), rt);
                prop_assert!(set.positive[0].kind == PeakKind::Goal);
                for p in set.batch_negative.iter().chain(&set.intruder_negative) {
                    prop_assert_eq!(p.discount, TRAFFIC_DISCOUNT);
                }
            }
        }

        // Translating every input translates every peak position and leaves
        // all other fields untouched.
        #[test]
        fn translation_equivariance(
            dx in -1e4f64..1e4, dy in -1e4f64..1e4, dz in -100f64..100.0,
        ) {
            let offset = Vec3::new(dx, dy, dz);
            let batch = vec![state_at(Vec3::new(10.0, 20.0, 200.0)), state_at(Vec3::new(-400.0, 35.0, 180.0))];
            let goals = vec![Vec3::new(900.0, 900.0, 250.0), Vec3::new(-900.0, 100.0, 250.0)];
            let intruders = vec![(Vec3::new(0.0, 300.0, 220.0), Vec3::new(12.0, -3.0, 0.5))];
            let terrain = vec![terrain_peak(Vec3::new(50.0, -60.0, 0.0), 400.0)];

            let base = build_step_peaks(&batch, &goals, &intruders, &terrain).unwrap();

            let batch_t: Vec<AircraftState> = batch.iter().map(|s| {
                let mut s2 = *s;
                s2.position += offset;
                s2
            }).collect();
            let goals_t: Vec<Vec3> = goals.iter().map(|g| g + offset).collect();
            let intruders_t: Vec<(Vec3, Vec3)> = intruders.iter().map(|(p, v)| (p + offset, *v)).collect();
            let terrain_t: Vec<Peak> = terrain.iter().map(|p| {
                let mut p2 = *p;
                p2.position += offset;
                p2
            }).collect();
            let shifted = build_step_peaks(&batch_t, &goals_t, &intruders_t, &terrain_t).unwrap();

            for (a, b) in base.iter().zip(&shifted) {
                let pairs = a.positive.iter().zip(&b.positive)
                    .chain(a.batch_negative.iter().zip(&b.batch_negative))
                    .chain(a.intruder_negative.iter().zip(&b.intruder_negative))
                    .chain(a.terrain_negative.iter().zip(&b.terrain_negative));
                for (pa, pb) in pairs {
                    // One ulp of slack: (p + offset) + v*t need not be
                    // bitwise equal to (p + v*t) + offset.
                    let expected = pa.position + offset;
                    let scale = 1.0 + expected.norm();
                    prop_assert!((pb.position - expected).norm() <= 1e-12 * scale);
                    prop_assert_eq!(pa.reward_magnitude, pb.reward_magnitude);
                    prop_assert_eq!(pa.discount, pb.discount);
                    prop_assert_eq!(pa.radius, pb.radius);
                    prop_assert!(pa.kind == pb.kind);
                }
            }
        }
    }
}
