//! Forward projection: roll aircraft states forward under each candidate
//! action for the lookahead window.
//!
//! The default model is a kinematic point mass. Commands are clamped to the
//! aircraft limits, never rejected: heading integrates the turn rate, speed
//! integrates the (clamped) acceleration, the vertical rate is commanded
//! directly, and position integrates the rebuilt velocity. Alternative
//! models can implement [`DynamicsModel`]; the projection table and the
//! valuation pipeline are model-agnostic.

use rayon::prelude::*;

use crate::domain::{Action, ActionSet, AircraftLimits, AircraftState};

/// A single-step state transition under one action.
pub trait DynamicsModel: Sync {
    fn step(&self, s: &AircraftState, a: &Action, dt: f64, limits: &AircraftLimits)
        -> AircraftState;
}

/// Kinematic point-mass model used throughout.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointMass;

impl DynamicsModel for PointMass {
    fn step(
        &self,
        s: &AircraftState,
        a: &Action,
        dt: f64,
        limits: &AircraftLimits,
    ) -> AircraftState {
        step_dynamics(s, a, dt, limits)
    }
}

/// Advance one state by dt under one action, clamping to limits.
pub fn step_dynamics(
    s: &AircraftState,
    a: &Action,
    dt: f64,
    limits: &AircraftLimits,
) -> AircraftState {
    let turn = a
        .turn_rate_cmd
        .clamp(-limits.turn_rate_max, limits.turn_rate_max);
    let accel = a.accel_cmd.clamp(-limits.accel_max, limits.accel_max);
    let mut next = *s;
    next.heading = s.heading + turn * dt;
    next.speed = (s.speed + accel * dt).clamp(limits.speed_min, limits.speed_max);
    next.vertical_rate = a
        .vertical_rate_cmd
        .clamp(-limits.climb_rate_max, limits.climb_rate_max);
    next.rebuild_velocity();
    next.position = s.position + next.velocity * dt;
    next.clock = s.clock + dt;
    next
}

/// Dense table of projected states indexed `[aircraft][action][timestep]`,
/// timesteps 1..=window steps ahead of the input state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTable {
    pub aircraft: usize,
    pub actions: usize,
    pub window: usize,
    states: Vec<AircraftState>,
}

impl ProjectionTable {
    pub fn get(&self, aircraft: usize, action: usize, timestep: usize) -> &AircraftState {
        debug_assert!((1..=self.window).contains(&timestep));
        &self.states[(aircraft * self.actions + action) * self.window + (timestep - 1)]
    }

    /// The W states projected for one (aircraft, action) pair, in time order.
    pub fn rollout(&self, aircraft: usize, action: usize) -> &[AircraftState] {
        let start = (aircraft * self.actions + action) * self.window;
        &self.states[start..start + self.window]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Project every (aircraft, action) pair forward `window` steps.
///
/// Rows are independent: each is the sequential composition of
/// [`step_dynamics`] from that aircraft's current state. Work is distributed
/// over rows with each row written to a disjoint slice, so the result is
/// bit-identical for any worker count.
pub fn forward_project(
    batch: &[AircraftState],
    actions: &ActionSet,
    limits: &AircraftLimits,
    dt: f64,
    window: usize,
) -> ProjectionTable {
    forward_project_with(&PointMass, batch, actions, limits, dt, window)
}

pub fn forward_project_with<M: DynamicsModel>(
    model: &M,
    batch: &[AircraftState],
    actions: &ActionSet,
    limits: &AircraftLimits,
    dt: f64,
    window: usize,
) -> ProjectionTable {
    let n_actions = actions.len();
    let mut states = vec![AircraftState::new(Default::default(), 0.0, 0.0, 0.0, 0.0);
        batch.len() * n_actions * window];
    states
        .par_chunks_mut(window)
        .enumerate()
        .for_each(|(row, chunk)| {
            let aircraft = row / n_actions;
            let action = actions.get(row % n_actions);
            let mut s = batch[aircraft];
            for slot in chunk.iter_mut() {
                s = model.step(&s, &action, dt, limits);
                *slot = s;
            }
        });
    ProjectionTable {
        aircraft: batch.len(),
        actions: n_actions,
        window,
        states,
    }
}
