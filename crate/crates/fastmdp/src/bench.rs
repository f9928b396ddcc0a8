//! Benchmark harness: solver step rate versus accepted-plan count, and
//! batch-size throughput, emitted as CSV suitable for replotting.
//!
//! Synthetic accepted plans are straight-line flights with seeded random
//! endpoints inside a configured volume; generating them through the
//! scheduler would conflate measurement with solve cost. Benchmarks read a
//! local store they build themselves and never touch a caller's store.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ActionSet, AircraftState, FlightPlan, Scenario, Vec3};
use crate::dynamics::forward_project;
use crate::peaks::build_step_peaks;
use crate::planstore::{active_intruders, PlanStore, StoreSnapshot};
use crate::valuation::evaluate;
use crate::Result;

/// One measured sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// Sweep parameter: accepted-plan count or batch size.
    pub param: usize,
    pub steps_measured: usize,
    pub wall_seconds: f64,
    /// Decision steps per second for the whole batch.
    pub hz: f64,
    /// batch_size x hz: aircraft-steps per second.
    pub total_cycles_hz: f64,
}

impl BenchRecord {
    pub fn new(param: usize, steps_measured: usize, wall_seconds: f64, batch_size: usize) -> Self {
        let hz = steps_measured as f64 / wall_seconds;
        BenchRecord {
            param,
            steps_measured,
            wall_seconds,
            hz,
            total_cycles_hz: batch_size as f64 * hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Timed decision steps per sweep point.
    pub steps: usize,
    /// Untimed steps run before measurement starts.
    pub warmup_steps: usize,
    /// Corner coordinates of the volume synthetic plans fly in.
    pub volume_min: Vec3,
    pub volume_max: Vec3,
    /// Flight time of each synthetic plan; must cover the measurement
    /// horizon so the intruder peak count stays constant while timing.
    pub plan_duration_s: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            steps: 100,
            warmup_steps: 50,
            volume_min: Vec3::new(-4_000.0, -4_000.0, 200.0),
            volume_max: Vec3::new(4_000.0, 4_000.0, 400.0),
            plan_duration_s: 120.0,
        }
    }
}

/// Seeded straight-line flights with random endpoints inside the volume.
/// The same seed and count always produce the same plans, and a longer run
/// extends a shorter one plan-for-plan.
pub fn synth_plans(count: usize, scenario: &Scenario, cfg: &BenchConfig, seed: u64) -> Vec<FlightPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plans = Vec::with_capacity(count);
    let n_states = (cfg.plan_duration_s / scenario.dt).round() as usize + 1;
    for k in 0..count {
        let mut corner = |lo: Vec3, hi: Vec3| {
            Vec3::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            )
        };
        let from = corner(cfg.volume_min, cfg.volume_max);
        let to = corner(cfg.volume_min, cfg.volume_max);
        let dir = to - from;
        let heading = dir.y.atan2(dir.x);
        let speed = (dir.x * dir.x + dir.y * dir.y).sqrt() / cfg.plan_duration_s;
        let climb = dir.z / cfg.plan_duration_s;
        let states = (0..n_states)
            .map(|i| {
                let alpha = i as f64 / (n_states - 1) as f64;
                AircraftState::new(
                    from + dir * alpha,
                    heading,
                    speed,
                    climb,
                    i as f64 * scenario.dt,
                )
            })
            .collect();
        plans.push(FlightPlan {
            plan_id: format!("synth-{k:05}"),
            aircraft_id: format!("synth-{k:05}"),
            departure_time: 0.0,
            states,
            goal_position: to,
        });
    }
    plans
}

/// Run raw decision steps with no terminal checks, mutating the states in
/// place. This is the measured inner loop of both benchmarks.
fn decision_steps(
    states: &mut [AircraftState],
    goals: &[Vec3],
    snapshot: &StoreSnapshot,
    scenario: &Scenario,
    actions: &ActionSet,
    steps: usize,
) -> Result<()> {
    for _ in 0..steps {
        let clock = states[0].clock;
        let intruders = active_intruders(snapshot, clock);
        let peak_sets = build_step_peaks(states, goals, &intruders, &scenario.terrain_peaks)?;
        let proj = forward_project(states, actions, &scenario.limits, scenario.dt, scenario.window);
        let grid = evaluate(&proj, &peak_sets, scenario.limits.hard_deck_altitude);
        for (i, state) in states.iter_mut().enumerate() {
            *state = *proj.get(i, grid.best_action[i], 1);
        }
    }
    Ok(())
}

/// Evenly spaced starting ring for the measured batch, kept wide so batch
/// members do not immediately entangle.
fn ring_states(batch_size: usize, cfg: &BenchConfig) -> (Vec<AircraftState>, Vec<Vec3>) {
    let mid_z = 0.5 * (cfg.volume_min.z + cfg.volume_max.z);
    let radius = 2_000.0;
    let mut states = Vec::with_capacity(batch_size);
    let mut goals = Vec::with_capacity(batch_size);
    for i in 0..batch_size {
        let angle = i as f64 / batch_size as f64 * std::f64::consts::TAU;
        let start = Vec3::new(radius * angle.cos(), radius * angle.sin(), mid_z);
        let goal = -start + Vec3::new(0.0, 0.0, 2.0 * mid_z);
        let heading = (goal.y - start.y).atan2(goal.x - start.x);
        states.push(AircraftState::new(start, heading, 30.0, 0.0, 0.0));
        goals.push(goal);
    }
    (states, goals)
}

fn measure(
    batch_size: usize,
    param: usize,
    snapshot: &StoreSnapshot,
    scenario: &Scenario,
    cfg: &BenchConfig,
) -> Result<BenchRecord> {
    let actions = scenario.action_set();
    let (mut states, goals) = ring_states(batch_size, cfg);
    decision_steps(&mut states, &goals, snapshot, scenario, &actions, cfg.warmup_steps)?;
    let started = Instant::now();
    decision_steps(&mut states, &goals, snapshot, scenario, &actions, cfg.steps)?;
    let wall = started.elapsed().as_secs_f64().max(1e-9);
    Ok(BenchRecord::new(param, cfg.steps, wall, batch_size))
}

/// Step rate of a single aircraft as the accepted-plan count grows.
pub fn bench_plan_scaling(
    plan_counts: &[usize],
    scenario: &Scenario,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::with_capacity(plan_counts.len());
    for &count in plan_counts {
        let mut store = PlanStore::new();
        for plan in synth_plans(count, scenario, cfg, seed) {
            store.append_plan(plan)?;
        }
        records.push(measure(1, count, &store.snapshot(), scenario, cfg)?);
    }
    Ok(records)
}

/// Batch step rate and total aircraft-steps per second against a fixed
/// number of synthetic intruders.
pub fn bench_batch_scaling(
    batch_sizes: &[usize],
    intruder_count: usize,
    scenario: &Scenario,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    let mut store = PlanStore::new();
    for plan in synth_plans(intruder_count, scenario, cfg, seed) {
        store.append_plan(plan)?;
    }
    let snapshot = store.snapshot();
    batch_sizes
        .iter()
        .map(|&b| measure(b, b, &snapshot, scenario, cfg))
        .collect()
}

/// CSV emission, one row per sweep point.
pub fn write_bench_csv<W: Write>(records: &[BenchRecord], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "param,steps,wall_seconds,hz,total_cycles_hz")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.param, r.steps_measured, r.wall_seconds, r.hz, r.total_cycles_hz
        )?;
    }
    Ok(())
}

/// Coefficient of determination of the least-squares line through (x, y).
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if syy == 0.0 {
        return 1.0; // constant data is fit perfectly by a flat line
    }
    let slope = sxy / sxx;
    let mut ss_res = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let fit = mean_y + slope * (x - mean_x);
        ss_res += (y - fit) * (y - fit);
    }
    1.0 - ss_res / syy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ActionCounts;

    fn quick_scenario() -> Scenario {
        Scenario {
            action_counts: ActionCounts {
                turn_rates: 3,
                vertical_rates: 3,
                accels: 1,
            },
            ..Scenario::default()
        }
    }

    fn quick_config() -> BenchConfig {
        BenchConfig {
            steps: 3,
            warmup_steps: 1,
            plan_duration_s: 10.0,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn record_arithmetic() {
        let r = BenchRecord::new(7, 500, 10.0, 1);
        assert_eq!(r.hz, 50.0);
        assert_eq!(r.total_cycles_hz, 50.0);
        let r = BenchRecord::new(7, 500, 10.0, 4);
        assert_eq!(r.total_cycles_hz, 200.0);
    }

    #[test]
    fn synthesis_is_seed_deterministic_and_prefix_stable() {
        let sc = quick_scenario();
        let cfg = quick_config();
        let a = synth_plans(5, &sc, &cfg, 42);
        let b = synth_plans(5, &sc, &cfg, 42);
        assert_eq!(a, b);
        let longer = synth_plans(8, &sc, &cfg, 42);
        assert_eq!(&longer[..5], &a[..]);
        let other_seed = synth_plans(5, &sc, &cfg, 43);
        assert_ne!(a, other_seed);
    }

    #[test]
    fn synthetic_plans_are_well_formed() {
        let sc = quick_scenario();
        let cfg = quick_config();
        for plan in synth_plans(4, &sc, &cfg, 9) {
            assert!(plan.violations(sc.dt).is_empty(), "{:?}", plan.plan_id);
        }
    }

    #[test]
    fn plan_sweep_emits_one_row_per_count() {
        let sc = quick_scenario();
        let cfg = quick_config();
        let records = bench_plan_scaling(&[0, 5, 10], &sc, &cfg, 1).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(
            records.iter().map(|r| r.param).collect::<Vec<_>>(),
            vec![0, 5, 10]
        );
        let mut csv = Vec::new();
        write_bench_csv(&records, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 4); // header + 3 rows
        assert!(text.starts_with("param,steps,wall_seconds,hz,total_cycles_hz"));
    }

    #[test]
    fn batch_sweep_total_cycles_is_batch_times_hz() {
        let sc = quick_scenario();
        let cfg = quick_config();
        let records = bench_batch_scaling(&[1, 3], 5, &sc, &cfg, 1).unwrap();
        for r in &records {
            assert!((r.total_cycles_hz - r.param as f64 * r.hz).abs() < 1e-9);
        }
        assert_eq!(records[0].param, 1);
    }

    #[test]
    fn r2_of_perfect_line_is_one() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        assert!((linear_fit_r2(&xs, &ys) - 1.0).abs() < 1e-12);
        let noisy = [3.0, 5.5, 6.5, 9.0];
        let r2 = linear_fit_r2(&xs, &noisy);
        assert!(r2 > 0.9 && r2 < 1.0);
    }
}
