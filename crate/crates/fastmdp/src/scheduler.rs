//! First-come-first-served pre-departure flight planning.
//!
//! A request is solved against a snapshot of the accepted-plan store; only a
//! simulation that reaches its goal AND passes an independent geometric
//! validation is committed. The solver plans with margin (risk wells reach
//! 250-450 m) while the validator certifies the hard guarantee (150 m
//! default), so acceptance never rests on the solver's own risk model.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::{AircraftState, FlightPlan, Peak, Scenario, Vec3};
use crate::planstore::{PlanStore, StoreSnapshot};
use crate::simulation::{simulate_batch, AircraftStatus, SimOutcome};
use crate::{Error, Result};

/// Permitted dip below the hard deck before validation fails, in meters.
pub const HARD_DECK_TOLERANCE: f64 = 1.0;

/// A pre-departure flight plan request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub aircraft_id: String,
    pub source: Vec3,
    pub destination: Vec3,
    pub requested_departure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectionReason {
    /// The simulated flight collided with terrain or another aircraft.
    SimCollision,
    /// The step budget ran out before the goal was captured.
    Timeout,
    /// The flight reached its goal but failed independent validation.
    ValidationFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Smallest separation seen in simulation or validation, absent when
    /// nothing was ever compared.
    pub min_separation: Option<f64>,
    pub step_count: usize,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResponse {
    pub aircraft_id: String,
    pub status: RequestStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<FlightPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<RejectionReason>,
    pub diagnostics: Diagnostics,
}

impl PlanResponse {
    pub fn accepted(&self) -> bool {
        self.status == RequestStatus::Accepted
    }
}

/// Outcome of the independent geometric post-check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub pass: bool,
    pub min_separation: Option<f64>,
    /// First violation found, for diagnostics.
    pub failure: Option<String>,
}

fn check_request(req: &PlanRequest, scenario: &Scenario) -> Result<()> {
    let mut problems = Vec::new();
    if req.aircraft_id.is_empty() {
        problems.push("aircraft_id must be non-empty".to_string());
    }
    if req.source == req.destination {
        problems.push("source and destination must differ".to_string());
    }
    for (name, p) in [("source", req.source), ("destination", req.destination)] {
        if !p.iter().all(|c| c.is_finite()) {
            problems.push(format!("{name} must be finite"));
        } else if p.z < scenario.limits.hard_deck_altitude {
            problems.push(format!("{name} is below the hard deck"));
        }
    }
    if !req.requested_departure.is_finite() || req.requested_departure < 0.0 {
        problems.push("requested_departure must be a non-negative time".to_string());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidRequest {
            aircraft_id: req.aircraft_id.clone(),
            message: problems.join("; "),
        })
    }
}

/// Departure state: at the source, aimed at the destination, mid-envelope
/// speed, level.
pub fn request_initial_state(req: &PlanRequest, scenario: &Scenario) -> AircraftState {
    let delta = req.destination - req.source;
    let heading = delta.y.atan2(delta.x);
    let speed = 0.5 * (scenario.limits.speed_min + scenario.limits.speed_max);
    AircraftState::new(req.source, heading, speed, 0.0, req.requested_departure)
}

/// Interpolated position of a stored plan at a clock, None outside its
/// interval. Deliberately local to the validator: the post-check shares no
/// code with the solver's intruder sampling.
fn plan_position_at(plan: &FlightPlan, clock: f64) -> Option<Vec3> {
    let states = &plan.states;
    let n = states.len();
    if n == 0 {
        return None;
    }
    let first = states[0].clock;
    let last = states[n - 1].clock;
    if clock < first || clock > last {
        return None;
    }
    if n == 1 {
        return Some(states[0].position);
    }
    let spacing = (last - first) / (n - 1) as f64;
    let mut k = (((clock - first) / spacing) as usize).min(n - 2);
    while k > 0 && clock < states[k].clock {
        k -= 1;
    }
    while k + 2 < n && clock > states[k + 1].clock {
        k += 1;
    }
    let (a, b) = (&states[k], &states[k + 1]);
    let alpha = ((clock - a.clock) / (b.clock - a.clock)).clamp(0.0, 1.0);
    Some(a.position * (1.0 - alpha) + b.position * alpha)
}

pub(crate) fn validate_against(
    candidate: &FlightPlan,
    others: &[&FlightPlan],
    terrain: &[Peak],
    scenario: &Scenario,
) -> ValidationReport {
    let mut min_separation = f64::INFINITY;
    let mut failure = None;
    let fail = |msg: String, failure: &mut Option<String>| {
        if failure.is_none() {
            *failure = Some(msg);
        }
    };

    if let Some(v) = candidate.violations(scenario.dt).first() {
        fail(format!("malformed plan: {v}"), &mut failure);
    }

    let deck_floor = scenario.limits.hard_deck_altitude - HARD_DECK_TOLERANCE;
    for (idx, s) in candidate.states.iter().enumerate() {
        if s.position.z < deck_floor {
            fail(
                format!(
                    "state {idx} altitude {:.1} below hard deck floor {deck_floor:.1}",
                    s.position.z
                ),
                &mut failure,
            );
        }
        for peak in terrain {
            let core = scenario.terrain_core_fraction * peak.radius;
            if (s.position - peak.position).norm() < core {
                fail(
                    format!("state {idx} inside terrain core at {:?}", peak.position),
                    &mut failure,
                );
            }
        }
        for other in others {
            if other.plan_id == candidate.plan_id {
                continue;
            }
            if let Some(pos) = plan_position_at(other, s.clock) {
                let d = (s.position - pos).norm();
                min_separation = min_separation.min(d);
                if d < scenario.separation_threshold {
                    fail(
                        format!(
                            "state {idx} separation {d:.1} m from plan {} below {}",
                            other.plan_id, scenario.separation_threshold
                        ),
                        &mut failure,
                    );
                }
            }
        }
    }

    ValidationReport {
        pass: failure.is_none(),
        min_separation: min_separation.is_finite().then_some(min_separation),
        failure,
    }
}

/// Certify a candidate against a store snapshot: separation at every shared
/// clock, terrain cores, and the hard deck.
pub fn validate_plan(
    candidate: &FlightPlan,
    snapshot: &StoreSnapshot,
    terrain: &[Peak],
    scenario: &Scenario,
) -> ValidationReport {
    let others: Vec<&FlightPlan> = snapshot.plans().collect();
    validate_against(candidate, &others, terrain, scenario)
}

fn merge_min(a: f64, b: Option<f64>) -> Option<f64> {
    let m = b.map_or(a, |x| x.min(a));
    m.is_finite().then_some(m)
}

fn respond(
    req: &PlanRequest,
    sim: &SimOutcome,
    committed: Option<FlightPlan>,
    reason: Option<RejectionReason>,
    validation_min_sep: Option<f64>,
    started: Instant,
) -> PlanResponse {
    PlanResponse {
        aircraft_id: req.aircraft_id.clone(),
        status: if committed.is_some() {
            RequestStatus::Accepted
        } else {
            RequestStatus::Rejected
        },
        plan: committed,
        rejection_reason: reason,
        diagnostics: Diagnostics {
            min_separation: merge_min(sim.min_separation_observed, validation_min_sep),
            step_count: sim.step_count,
            solve_seconds: started.elapsed().as_secs_f64(),
        },
    }
}

/// Process one request FCFS: snapshot, simulate, validate, commit.
pub fn process_request(
    req: &PlanRequest,
    store: &mut PlanStore,
    scenario: &Scenario,
) -> Result<PlanResponse> {
    let responses = process_batch(std::slice::from_ref(req), store, scenario)?;
    Ok(responses.into_iter().next().expect("one response per request"))
}

/// Co-simulate a batch of requests against one snapshot with mutual
/// awareness. Each aircraft that reaches its goal is validated against the
/// snapshot plus the batch plans already committed (request order), so every
/// committed pair is certified; partial commits are allowed.
pub fn process_batch(
    reqs: &[PlanRequest],
    store: &mut PlanStore,
    scenario: &Scenario,
) -> Result<Vec<PlanResponse>> {
    if reqs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for req in reqs {
        check_request(req, scenario)?;
    }
    let started = Instant::now();
    let snapshot = store.snapshot();
    let states: Vec<AircraftState> = reqs
        .iter()
        .map(|r| request_initial_state(r, scenario))
        .collect();
    let goals: Vec<Vec3> = reqs.iter().map(|r| r.destination).collect();
    let sim = simulate_batch(&states, &goals, &snapshot, scenario)?;

    let snapshot_plans: Vec<&FlightPlan> = snapshot.plans().collect();
    let mut committed: Vec<FlightPlan> = Vec::new();
    let mut responses = Vec::with_capacity(reqs.len());
    for (i, req) in reqs.iter().enumerate() {
        let outcome = sim.outcomes[i];
        let response = match outcome.status {
            AircraftStatus::ReachedGoal => {
                let mut plan = sim.trajectories[i].clone();
                plan.aircraft_id = req.aircraft_id.clone();
                plan.plan_id = format!("{}-{:04}", req.aircraft_id, store.len());
                let mut others = snapshot_plans.clone();
                others.extend(committed.iter());
                let report = validate_against(&plan, &others, &scenario.terrain_peaks, scenario);
                if report.pass {
                    store.append_plan(plan.clone())?;
                    committed.push(plan.clone());
                    respond(req, &sim, Some(plan), None, report.min_separation, started)
                } else {
                    respond(
                        req,
                        &sim,
                        None,
                        Some(RejectionReason::ValidationFailed),
                        report.min_separation,
                        started,
                    )
                }
            }
            AircraftStatus::Timeout => {
                respond(req, &sim, None, Some(RejectionReason::Timeout), None, started)
            }
            AircraftStatus::CollisionAircraft | AircraftStatus::CollisionTerrain => {
                respond(req, &sim, None, Some(RejectionReason::SimCollision), None, started)
            }
        };
        responses.push(response);
    }
    Ok(responses)
}

/// Process a sequence of single requests strictly in arrival order.
pub fn process_requests(
    reqs: &[PlanRequest],
    store: &mut PlanStore,
    scenario: &Scenario,
) -> Result<Vec<PlanResponse>> {
    reqs.iter()
        .map(|req| process_request(req, store, scenario))
        .collect()
}
