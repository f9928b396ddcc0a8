//! Core data types shared by the solver, scheduler, and plan store.
//!
//! Units are SI throughout: meters, seconds, radians. Coordinates are a flat
//! local ENU frame (x east, y north, z altitude). Headings are measured
//! counterclockwise from +x and are not normalized; trigonometry is periodic
//! so an unwrapped heading accumulator is safe.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Classifies a reward peak. The sign of the underlying reward is implied:
/// `Goal` is positive, everything else is negative held in standard positive
/// form (magnitudes stored as absolute values, subtracted at combine time).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeakKind {
    Goal,
    BatchAircraft,
    Intruder,
    Terrain,
}

/// An exponentially decaying reward source: contributes |r|·γ^d to the value
/// at distance d, truncated to zero beyond `radius` for non-goal peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub reward_magnitude: f64,
    pub discount: f64,
    pub position: Vec3,
    pub radius: f64,
    pub kind: PeakKind,
}

impl Peak {
    /// Invariant violations for this peak, empty when well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.discount > 0.0 && self.discount < 1.0) {
            v.push(format!(
                "peak {:?}: discount out of (0,1): {}",
                self.kind, self.discount
            ));
        }
        if !(self.reward_magnitude >= 0.0 && self.reward_magnitude.is_finite()) {
            v.push(format!(
                "peak {:?}: reward_magnitude must be a finite absolute value: {}",
                self.kind, self.reward_magnitude
            ));
        }
        if !(self.radius > 0.0) {
            v.push(format!("peak {:?}: radius must be positive", self.kind));
        }
        let infinite = self.radius.is_infinite();
        if infinite != (self.kind == PeakKind::Goal) {
            v.push(format!(
                "peak {:?}: radius is infinite iff kind is Goal",
                self.kind
            ));
        }
        if !self.position.iter().all(|c| c.is_finite()) {
            v.push(format!("peak {:?}: position must be finite", self.kind));
        }
        v
    }
}

/// 4D kinematic state of one aircraft. Exactly 12 scalars: position (3),
/// velocity (3), heading, speed, vertical_rate, bank_angle, clock, reserved.
///
/// `speed` is horizontal ground speed; `velocity` is always derived from
/// heading/speed/vertical_rate via [`AircraftState::rebuild_velocity`] and is
/// never mutated independently. `bank_angle` and `reserved` are carried for
/// alternative dynamics models and padding; the default model leaves them 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub heading: f64,
    pub speed: f64,
    pub vertical_rate: f64,
    pub bank_angle: f64,
    pub clock: f64,
    #[serde(default)]
    pub reserved: f64,
}

impl AircraftState {
    /// State from position plus heading/speed/vertical rate, velocity
    /// derived, everything else zero.
    pub fn new(position: Vec3, heading: f64, speed: f64, vertical_rate: f64, clock: f64) -> Self {
        let mut s = AircraftState {
            position,
            velocity: Vec3::zeros(),
            heading,
            speed,
            vertical_rate,
            bank_angle: 0.0,
            clock,
            reserved: 0.0,
        };
        s.rebuild_velocity();
        s
    }

    /// Derive the velocity vector from heading, speed, and vertical rate.
    /// Idempotent: the inputs are untouched.
    pub fn rebuild_velocity(&mut self) {
        self.velocity = Vec3::new(
            self.speed * self.heading.cos(),
            self.speed * self.heading.sin(),
            self.vertical_rate,
        );
    }

    pub fn altitude(&self) -> f64 {
        self.position.z
    }

    /// The fixed 12-scalar layout used by dense projection tables.
    pub fn to_scalars(&self) -> [f64; 12] {
        [
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
            self.heading,
            self.speed,
            self.vertical_rate,
            self.bank_angle,
            self.clock,
            self.reserved,
        ]
    }

    pub fn from_scalars(s: [f64; 12]) -> Self {
        AircraftState {
            position: Vec3::new(s[0], s[1], s[2]),
            velocity: Vec3::new(s[3], s[4], s[5]),
            heading: s[6],
            speed: s[7],
            vertical_rate: s[8],
            bank_angle: s[9],
            clock: s[10],
            reserved: s[11],
        }
    }
}

/// Performance envelope of the simulated aircraft class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftLimits {
    pub speed_min: f64,
    pub speed_max: f64,
    pub accel_max: f64,
    pub turn_rate_max: f64,
    pub climb_rate_max: f64,
    pub hard_deck_altitude: f64,
}

impl AircraftLimits {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [
            ("speed_min", self.speed_min),
            ("speed_max", self.speed_max),
            ("accel_max", self.accel_max),
            ("turn_rate_max", self.turn_rate_max),
            ("climb_rate_max", self.climb_rate_max),
            ("hard_deck_altitude", self.hard_deck_altitude),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                v.push(format!("limits: {name} must be strictly positive"));
            }
        }
        if !(self.speed_min < self.speed_max) {
            v.push("limits: speed_min must be less than speed_max".to_string());
        }
        v
    }
}

impl Default for AircraftLimits {
    fn default() -> Self {
        AircraftLimits {
            speed_min: 15.0,
            speed_max: 50.0,
            accel_max: 5.0,
            turn_rate_max: 0.5,
            climb_rate_max: 5.0,
            hard_deck_altitude: 100.0,
        }
    }
}

/// One discretized control command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub turn_rate_cmd: f64,
    pub vertical_rate_cmd: f64,
    pub accel_cmd: f64,
}

impl Action {
    pub const HOLD: Action = Action {
        turn_rate_cmd: 0.0,
        vertical_rate_cmd: 0.0,
        accel_cmd: 0.0,
    };
}

/// Discretized command lists whose Cartesian product forms the candidate
/// actions evaluated each decision step. Every list contains 0 exactly once
/// so a "hold everything" action always exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    pub turn_rates: Vec<f64>,
    pub vertical_rates: Vec<f64>,
    pub accels: Vec<f64>,
}

/// Number of values per command axis. The default 15 x 10 x 9 = 1350.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub turn_rates: usize,
    pub vertical_rates: usize,
    pub accels: usize,
}

impl Default for ActionCounts {
    fn default() -> Self {
        ActionCounts {
            turn_rates: 15,
            vertical_rates: 10,
            accels: 9,
        }
    }
}

/// Uniform grid over [-limit, +limit] containing 0 exactly once.
///
/// Odd counts give the symmetric grid. Even counts cannot be both symmetric
/// and contain 0, so the grid keeps uniform spacing 2·limit/n and drops the
/// most negative point: integer multiples k·(2·limit/n) for k in
/// [-(n/2-1), n/2], reaching +limit but only -limit·(n-2)/n.
fn command_span(limit: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        n if n % 2 == 1 => {
            let step = 2.0 * limit / (n - 1) as f64;
            let half = (n / 2) as i64;
            (-half..=half).map(|k| k as f64 * step).collect()
        }
        n => {
            let step = 2.0 * limit / n as f64;
            let half = (n / 2) as i64;
            (-(half - 1)..=half).map(|k| k as f64 * step).collect()
        }
    }
}

impl ActionSet {
    /// Build the command grids from the aircraft limits.
    pub fn from_limits(limits: &AircraftLimits, counts: ActionCounts) -> Self {
        ActionSet {
            turn_rates: command_span(limits.turn_rate_max, counts.turn_rates),
            vertical_rates: command_span(limits.climb_rate_max, counts.vertical_rates),
            accels: command_span(limits.accel_max, counts.accels),
        }
    }

    /// Total number of candidate actions (Cartesian product size).
    pub fn len(&self) -> usize {
        self.turn_rates.len() * self.vertical_rates.len() * self.accels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Action at a flat index; ordering is turn-major, then vertical rate,
    /// then acceleration. Stable across calls, shared by all kernels.
    pub fn get(&self, index: usize) -> Action {
        let n_acc = self.accels.len();
        let n_vr = self.vertical_rates.len();
        let i_acc = index % n_acc;
        let i_vr = (index / n_acc) % n_vr;
        let i_turn = index / (n_acc * n_vr);
        Action {
            turn_rate_cmd: self.turn_rates[i_turn],
            vertical_rate_cmd: self.vertical_rates[i_vr],
            accel_cmd: self.accels[i_acc],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, list) in [
            ("turn_rates", &self.turn_rates),
            ("vertical_rates", &self.vertical_rates),
            ("accels", &self.accels),
        ] {
            if list.iter().filter(|x| **x == 0.0).count() != 1 {
                v.push(format!("action set: {name} must contain 0 exactly once"));
            }
        }
        v
    }
}

/// An accepted, timestamped trajectory: the unit stored by the plan database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub plan_id: String,
    pub aircraft_id: String,
    pub departure_time: f64,
    pub states: Vec<AircraftState>,
    pub goal_position: Vec3,
}

/// Clock spacing is validated to this relative slack; clocks accumulate one
/// dt per step so consecutive differences carry a few ulps of drift.
pub const CLOCK_SPACING_TOL: f64 = 1e-6;

impl FlightPlan {
    pub fn first_clock(&self) -> f64 {
        self.states.first().map(|s| s.clock).unwrap_or(f64::NAN)
    }

    pub fn last_clock(&self) -> f64 {
        self.states.last().map(|s| s.clock).unwrap_or(f64::NAN)
    }

    pub fn violations(&self, dt: f64) -> Vec<String> {
        let mut v = Vec::new();
        if self.states.is_empty() {
            v.push(format!("plan {}: states must be non-empty", self.plan_id));
            return v;
        }
        if (self.first_clock() - self.departure_time).abs() > CLOCK_SPACING_TOL {
            v.push(format!(
                "plan {}: first state clock {} differs from departure_time {}",
                self.plan_id,
                self.first_clock(),
                self.departure_time
            ));
        }
        for (i, pair) in self.states.windows(2).enumerate() {
            let gap = pair[1].clock - pair[0].clock;
            if (gap - dt).abs() > CLOCK_SPACING_TOL * dt.max(1.0) {
                v.push(format!(
                    "plan {}: clock gap {} at state {} is not dt={}",
                    self.plan_id, gap, i, dt
                ));
                break;
            }
        }
        v
    }
}

fn default_schema_version() -> u32 {
    1
}
fn default_dt() -> f64 {
    0.1
}
fn default_window() -> usize {
    10
}
fn default_goal_capture_radius() -> f64 {
    100.0
}
fn default_separation_threshold() -> f64 {
    150.0
}
fn default_collision_radius() -> f64 {
    30.0
}
fn default_terrain_core_fraction() -> f64 {
    0.5
}
fn default_max_steps() -> usize {
    18_000
}

/// Static description of the airspace problem: terrain wells, vertiports,
/// aircraft envelope, and the solver/termination parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub terrain_peaks: Vec<Peak>,
    #[serde(default)]
    pub vertiports: BTreeMap<String, Vec3>,
    #[serde(default)]
    pub limits: AircraftLimits,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_goal_capture_radius")]
    pub goal_capture_radius: f64,
    #[serde(default = "default_separation_threshold")]
    pub separation_threshold: f64,
    #[serde(default = "default_collision_radius")]
    pub collision_radius: f64,
    /// Fraction of a terrain well's radius treated as solid obstacle for
    /// collision and validation purposes.
    #[serde(default = "default_terrain_core_fraction")]
    pub terrain_core_fraction: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub action_counts: ActionCounts,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            schema_version: 1,
            terrain_peaks: Vec::new(),
            vertiports: BTreeMap::new(),
            limits: AircraftLimits::default(),
            dt: default_dt(),
            window: default_window(),
            goal_capture_radius: default_goal_capture_radius(),
            separation_threshold: default_separation_threshold(),
            collision_radius: default_collision_radius(),
            terrain_core_fraction: default_terrain_core_fraction(),
            max_steps: default_max_steps(),
            action_counts: ActionCounts::default(),
        }
    }
}

impl Scenario {
    /// Candidate action grid derived from the limits and configured counts.
    pub fn action_set(&self) -> ActionSet {
        ActionSet::from_limits(&self.limits, self.action_counts)
    }
}

/// Collect every invariant violation in the scenario. Empty means valid;
/// violations are returned, not thrown.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut v = Vec::new();
    if s.schema_version != 1 {
        v.push(format!("unsupported schema_version {}", s.schema_version));
    }
    if !(s.dt > 0.0 && s.dt.is_finite()) {
        v.push("dt must be positive".to_string());
    }
    if s.window < 1 {
        v.push("window must be at least 1".to_string());
    }
    if !(s.goal_capture_radius > 0.0) {
        v.push("goal_capture_radius must be positive".to_string());
    }
    if !(s.separation_threshold > 0.0) {
        v.push("separation_threshold must be positive".to_string());
    }
    if !(s.collision_radius > 0.0) {
        v.push("collision_radius must be positive".to_string());
    }
    if !(s.terrain_core_fraction > 0.0 && s.terrain_core_fraction <= 1.0) {
        v.push("terrain_core_fraction must be in (0,1]".to_string());
    }
    if s.max_steps == 0 {
        v.push("max_steps must be positive".to_string());
    }
    v.extend(s.limits.violations());
    v.extend(s.action_set().violations());
    for peak in &s.terrain_peaks {
        v.extend(peak.violations());
        if peak.kind != PeakKind::Terrain {
            v.push(format!(
                "terrain peak at {:?} has kind {:?}",
                peak.position, peak.kind
            ));
        }
    }
    for (name, pos) in &s.vertiports {
        if !pos.iter().all(|c| c.is_finite()) {
            v.push(format!("vertiport {name}: position must be finite"));
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_scenario_has_no_violations() {
        let s = Scenario::default();
        assert_eq!(validate_scenario(&s), Vec::<String>::new());
    }

    #[test]
    fn zero_dt_is_reported() {
        let s = Scenario {
            dt: 0.0,
            ..Scenario::default()
        };
        let v = validate_scenario(&s);
        assert!(v.iter().any(|m| m == "dt must be positive"), "{v:?}");
    }

    #[test]
    fn out_of_range_discount_is_reported() {
        let mut s = Scenario::default();
        s.terrain_peaks.push(Peak {
            reward_magnitude: 1000.0,
            discount: 1.2,
            position: Vec3::new(0.0, 0.0, 0.0),
            radius: 300.0,
            kind: PeakKind::Terrain,
        });
        let v = validate_scenario(&s);
        assert!(
            v.iter().any(|m| m.contains("discount out of (0,1)")),
            "{v:?}"
        );
    }

    #[test]
    fn goal_radius_must_be_infinite() {
        let finite_goal = Peak {
            reward_magnitude: 200.0,
            discount: 0.999,
            position: Vec3::zeros(),
            radius: 500.0,
            kind: PeakKind::Goal,
        };
        assert!(!finite_goal.violations().is_empty());
        let infinite_terrain = Peak {
            reward_magnitude: 1000.0,
            discount: 0.99,
            position: Vec3::zeros(),
            radius: f64::INFINITY,
            kind: PeakKind::Terrain,
        };
        assert!(!infinite_terrain.violations().is_empty());
    }

    #[test]
    fn rebuild_velocity_is_idempotent() {
        let mut s = AircraftState::new(Vec3::new(1.0, 2.0, 300.0), 0.7, 42.0, -1.5, 12.0);
        let once = s.velocity;
        s.rebuild_velocity();
        assert_eq!(once, s.velocity);
    }

    #[test]
    fn default_action_set_has_1350_actions() {
        let set = ActionSet::from_limits(&AircraftLimits::default(), ActionCounts::default());
        assert_eq!(set.turn_rates.len(), 15);
        assert_eq!(set.vertical_rates.len(), 10);
        assert_eq!(set.accels.len(), 9);
        assert_eq!(set.len(), 1350);
        assert!(set.violations().is_empty());
    }

    #[test]
    fn command_span_contains_zero_once_and_respects_limit() {
        for n in 1..=16 {
            let span = command_span(3.0, n);
            assert_eq!(span.len(), n);
            assert_eq!(span.iter().filter(|x| **x == 0.0).count(), 1, "n={n}");
            assert!(span.iter().all(|x| x.abs() <= 3.0 + 1e-12), "n={n}");
            for pair in span.windows(2) {
                assert!(pair[1] > pair[0]);
            }
        }
    }

    #[test]
    fn action_indexing_covers_cartesian_product() {
        let set = ActionSet {
            turn_rates: vec![-1.0, 0.0, 1.0],
            vertical_rates: vec![0.0, 2.0],
            accels: vec![-3.0, 0.0],
        };
        let all: Vec<Action> = set.iter().collect();
        assert_eq!(all.len(), 12);
        let hold = all
            .iter()
            .filter(|a| a.turn_rate_cmd == 0.0 && a.vertical_rate_cmd == 0.0 && a.accel_cmd == 0.0)
            .count();
        assert_eq!(hold, 1);
    }

    #[test]
    fn state_scalar_layout_round_trips() {
        let s = AircraftState::new(Vec3::new(10.0, -4.0, 250.0), 1.2, 30.0, 2.0, 5.5);
        assert_eq!(AircraftState::from_scalars(s.to_scalars()), s);
    }

    mod serde_round_trip {
        use super::*;
        use proptest::prelude::*;

        fn finite() -> impl Strategy<Value = f64> {
            // Spans magnitudes from subnormal-adjacent to large, plus zero.
            prop_oneof![
                Just(0.0),
                -1e12f64..1e12,
                (-60i32..60).prop_map(|e| 1.37f64 * 2f64.powi(e)),
            ]
        }

        proptest! {
            // JSON round trip preserves every state scalar bit-for-bit.
            #[test]
            fn aircraft_state_round_trips_bit_exactly(
                scalars in proptest::array::uniform12(finite())
            ) {
                let state = AircraftState::from_scalars(scalars);
                let json = serde_json::to_string(&state).unwrap();
                let back: AircraftState = serde_json::from_str(&json).unwrap();
                for (a, b) in state.to_scalars().iter().zip(back.to_scalars()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn flight_plan_validation_flags_gaps() {
        let dt = 0.1;
        let mut states = vec![AircraftState::new(Vec3::zeros(), 0.0, 20.0, 0.0, 0.0)];
        let mut second = states[0];
        second.clock = 0.3; // should be 0.1
        states.push(second);
        let plan = FlightPlan {
            plan_id: "p1".into(),
            aircraft_id: "ac1".into(),
            departure_time: 0.0,
            states,
            goal_position: Vec3::new(100.0, 0.0, 0.0),
        };
        assert!(!plan.violations(dt).is_empty());
    }
}
