//! Lockstep decision loop for a batch of aircraft: build peaks, project,
//! value, select, apply, then check terminal conditions, until every
//! aircraft is terminal or the step budget runs out.
//!
//! All aircraft in the batch share one wall clock. Within a step every
//! decision is computed against the same state snapshot, and the chosen
//! actions are applied synchronously, so batch order never influences any
//! aircraft's behaviour. Aircraft whose departure time lies in the future
//! hold at their source, contribute no peaks, and spawn when the clock
//! reaches them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{
    validate_scenario, AircraftState, FlightPlan, Peak, Scenario, Vec3,
};
use crate::dynamics::forward_project;
use crate::peaks::build_step_peaks;
use crate::planstore::{active_intruders, StoreSnapshot};
use crate::valuation::evaluate;
use crate::{Error, Result};

/// Terminal status of one simulated aircraft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AircraftStatus {
    ReachedGoal,
    CollisionAircraft,
    CollisionTerrain,
    Timeout,
}

/// Final status plus whether a near mid-air collision was flagged at any
/// point; NMAC is recorded but never terminates a flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AircraftOutcome {
    pub status: AircraftStatus,
    pub nmac_flagged: bool,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub outcomes: Vec<AircraftOutcome>,
    pub trajectories: Vec<FlightPlan>,
    /// Minimum separation observed between any pair of simulated aircraft
    /// or aircraft-intruder pair; infinite when nothing was ever compared.
    pub min_separation_observed: f64,
    pub step_count: usize,
}

/// Per-aircraft result of one terminal-condition sweep.
#[derive(Debug, Clone)]
pub struct TerminalCheck {
    pub status: Vec<Option<AircraftStatus>>,
    pub nmac: Vec<bool>,
    pub min_separation: f64,
}

/// Check goal capture, aircraft/intruder collisions, terrain collisions, and
/// NMAC flags for a set of co-located-in-time states. Collisions dominate
/// goal capture when both hold on the same step.
pub fn check_terminal(
    states: &[AircraftState],
    goals: &[Vec3],
    intruders: &[(Vec3, Vec3)],
    terrain: &[Peak],
    scenario: &Scenario,
) -> TerminalCheck {
    let mut status = vec![None; states.len()];
    let mut nmac = vec![false; states.len()];
    let mut min_separation = f64::INFINITY;
    for (i, s) in states.iter().enumerate() {
        let pos = s.position;
        let mut sep = f64::INFINITY;
        for (j, other) in states.iter().enumerate() {
            if i != j {
                sep = sep.min((pos - other.position).norm());
            }
        }
        for (ip, _) in intruders {
            sep = sep.min((pos - ip).norm());
        }
        min_separation = min_separation.min(sep);
        nmac[i] = sep < scenario.separation_threshold;

        let hit_terrain = pos.z < 0.0
            || terrain
                .iter()
                .any(|p| (pos - p.position).norm() < scenario.terrain_core_fraction * p.radius);
        status[i] = if sep < scenario.collision_radius {
            Some(AircraftStatus::CollisionAircraft)
        } else if hit_terrain {
            Some(AircraftStatus::CollisionTerrain)
        } else if (pos - goals[i]).norm() < scenario.goal_capture_radius {
            Some(AircraftStatus::ReachedGoal)
        } else {
            None
        };
    }
    TerminalCheck {
        status,
        nmac,
        min_separation,
    }
}

/// Run the decision loop for a batch against a plan-store snapshot.
///
/// Returns the full dt-spaced trajectories (including the initial state) and
/// a terminal status per aircraft; aircraft still flying when the step
/// budget is exhausted time out.
pub fn simulate_batch(
    batch: &[AircraftState],
    goals: &[Vec3],
    store: &StoreSnapshot,
    scenario: &Scenario,
) -> Result<SimOutcome> {
    let violations = validate_scenario(scenario);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.len() != goals.len() {
        return Err(Error::MismatchedBatchGoals {
            batch: batch.len(),
            goals: goals.len(),
        });
    }

    let n = batch.len();
    let actions = scenario.action_set();
    let dt = scenario.dt;
    let spawn_slack = dt * 1e-6;

    let mut clock = batch.iter().map(|s| s.clock).fold(f64::INFINITY, f64::min);
    let mut status: Vec<Option<AircraftStatus>> = vec![None; n];
    let mut nmac = vec![false; n];
    let mut departed = vec![false; n];
    let mut current: Vec<AircraftState> = batch.to_vec();
    let mut trajectories: Vec<Vec<AircraftState>> = vec![Vec::new(); n];
    let mut min_separation = f64::INFINITY;
    let mut steps = 0usize;

    loop {
        for i in 0..n {
            if !departed[i] && batch[i].clock <= clock + spawn_slack {
                departed[i] = true;
                let mut s = batch[i];
                s.clock = clock;
                current[i] = s;
                trajectories[i].push(s);
            }
        }

        let intruders = active_intruders(store, clock);

        let flying: Vec<usize> = (0..n)
            .filter(|&i| departed[i] && status[i].is_none())
            .collect();
        if !flying.is_empty() {
            let states: Vec<AircraftState> = flying.iter().map(|&i| current[i]).collect();
            let fgoals: Vec<Vec3> = flying.iter().map(|&i| goals[i]).collect();
            let check = check_terminal(&states, &fgoals, &intruders, &scenario.terrain_peaks, scenario);
            min_separation = min_separation.min(check.min_separation);
            for (slot, &i) in flying.iter().enumerate() {
                if let Some(st) = check.status[slot] {
                    status[i] = Some(st);
                }
                nmac[i] |= check.nmac[slot];
            }
        }

        let all_departed = departed.iter().all(|d| *d);
        if (all_departed && status.iter().all(|s| s.is_some())) || steps >= scenario.max_steps {
            break;
        }

        let active: Vec<usize> = (0..n)
            .filter(|&i| departed[i] && status[i].is_none())
            .collect();
        if !active.is_empty() {
            let states: Vec<AircraftState> = active.iter().map(|&i| current[i]).collect();
            let agoals: Vec<Vec3> = active.iter().map(|&i| goals[i]).collect();
            let peak_sets = build_step_peaks(&states, &agoals, &intruders, &scenario.terrain_peaks)?;
            let proj = forward_project(&states, &actions, &scenario.limits, dt, scenario.window);
            let grid = evaluate(&proj, &peak_sets, scenario.limits.hard_deck_altitude);
            for (slot, &i) in active.iter().enumerate() {
                // First step of the chosen rollout is the next state.
                let next = *proj.get(slot, grid.best_action[slot], 1);
                current[i] = next;
                trajectories[i].push(next);
            }
        }
        clock += dt;
        steps += 1;
    }

    let outcomes = status
        .iter()
        .zip(&nmac)
        .map(|(s, flagged)| AircraftOutcome {
            status: s.unwrap_or(AircraftStatus::Timeout),
            nmac_flagged: *flagged,
        })
        .collect();
    let plans = trajectories
        .into_iter()
        .enumerate()
        .map(|(i, states)| FlightPlan {
            plan_id: format!("sim-{i}"),
            aircraft_id: format!("ac{i}"),
            departure_time: states.first().map(|s| s.clock).unwrap_or(batch[i].clock),
            states,
            goal_position: goals[i],
        })
        .collect();

    Ok(SimOutcome {
        outcomes,
        trajectories: plans,
        min_separation_observed: min_separation,
        step_count: steps,
    })
}

/// Export trajectories as CSV, one row per step per aircraft.
pub fn write_trajectories_csv<W: Write>(plans: &[FlightPlan], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "time,aircraft_id,x,y,z,heading,speed,vertical_rate")?;
    for plan in plans {
        for s in &plan.states {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.clock,
                plan.aircraft_id,
                s.position.x,
                s.position.y,
                s.position.z,
                s.heading,
                s.speed,
                s.vertical_rate
            )?;
        }
    }
    Ok(())
}
