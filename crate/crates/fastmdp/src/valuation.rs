//! Value computation over projected states: per-class peak contributions,
//! hard-deck penalty, combined action values, and action selection.
//!
//! Contributions are held in standard positive form (all non-negative) and
//! combined per timestep as V⁺ - max(V⁻, Vᵀ, Vᴵ) - V_deck; an action is
//! scored by the best combined value anywhere along its rollout. Every
//! reduction is a max, which is exact in floating point, so results are
//! independent of evaluation order and worker count.

use std::io::Write;

use rayon::prelude::*;

use crate::domain::{Peak, Vec3};
use crate::dynamics::ProjectionTable;
use crate::peaks::PeakSets;

/// Scale constant of the hard-deck penalty (value points at zero altitude).
pub const HARD_DECK_PENALTY_SCALE: f64 = 1000.0;

/// Per-(aircraft, action, timestep) value contributions plus the reduced
/// per-action scores and chosen action per aircraft.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationGrid {
    pub aircraft: usize,
    pub actions: usize,
    pub window: usize,
    /// Contribution arrays, each `aircraft * actions * window` cells.
    pub v_pos: Vec<f64>,
    pub v_neg: Vec<f64>,
    pub v_terrain: Vec<f64>,
    pub v_intruder: Vec<f64>,
    /// Best combined value along each action's rollout, `aircraft * actions`.
    pub v_star: Vec<f64>,
    /// Chosen action index per aircraft.
    pub best_action: Vec<usize>,
}

impl ValuationGrid {
    fn zeroed(aircraft: usize, actions: usize, window: usize) -> Self {
        let cells = aircraft * actions * window;
        ValuationGrid {
            aircraft,
            actions,
            window,
            v_pos: vec![0.0; cells],
            v_neg: vec![0.0; cells],
            v_terrain: vec![0.0; cells],
            v_intruder: vec![0.0; cells],
            v_star: vec![0.0; aircraft * actions],
            best_action: vec![0; aircraft],
        }
    }

    #[inline]
    pub fn cell(&self, aircraft: usize, action: usize, timestep: usize) -> usize {
        debug_assert!((1..=self.window).contains(&timestep));
        (aircraft * self.actions + action) * self.window + (timestep - 1)
    }

    /// Per-action scores for one aircraft.
    pub fn v_star_row(&self, aircraft: usize) -> &[f64] {
        &self.v_star[aircraft * self.actions..(aircraft + 1) * self.actions]
    }

    /// Dump every cell as CSV for debugging and visualization.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "aircraft,action,timestep,v_pos,v_neg,v_terrain,v_intruder,v_star"
        )?;
        for i in 0..self.aircraft {
            for a in 0..self.actions {
                for t in 1..=self.window {
                    let c = self.cell(i, a, t);
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        i,
                        a,
                        t,
                        self.v_pos[c],
                        self.v_neg[c],
                        self.v_terrain[c],
                        self.v_intruder[c],
                        self.v_star[i * self.actions + a]
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Value contributed by a positive peak at a point: |r|·γ^d.
pub fn positive_value(state_pos: Vec3, peak: &Peak) -> f64 {
    let d = (state_pos - peak.position).norm();
    peak.reward_magnitude * peak.discount.powf(d)
}

/// Value contributed by a risk well: |r|·γ^d inside the radius (strict),
/// zero at and beyond it.
pub fn well_value(state_pos: Vec3, peak: &Peak) -> f64 {
    let d = (state_pos - peak.position).norm();
    if d < peak.radius {
        peak.reward_magnitude * peak.discount.powf(d)
    } else {
        0.0
    }
}

/// Hard-deck penalty: below `penalty_alt` the value is docked by
/// `HARD_DECK_PENALTY_SCALE - altitude`, floored at zero.
pub fn hard_deck_penalty(altitude: f64, penalty_alt: f64) -> f64 {
    if altitude < penalty_alt {
        (HARD_DECK_PENALTY_SCALE - altitude).max(0.0)
    } else {
        0.0
    }
}

fn fill_class(
    out: &mut [f64],
    proj: &ProjectionTable,
    peaks: &[PeakSets],
    class: fn(&PeakSets) -> &[Peak],
    valuer: fn(Vec3, &Peak) -> f64,
) {
    let actions = proj.actions;
    let window = proj.window;
    out.par_chunks_mut(window)
        .enumerate()
        .for_each(|(row, cells)| {
            let aircraft = row / actions;
            let class_peaks = class(&peaks[aircraft]);
            let rollout = proj.rollout(aircraft, row % actions);
            for (t, cell) in cells.iter_mut().enumerate() {
                let pos = rollout[t].position;
                let mut best = 0.0f64;
                for peak in class_peaks {
                    best = best.max(valuer(pos, peak));
                }
                *cell = best;
            }
        });
}

/// Fill the four contribution arrays: each cell holds the maximum
/// contribution over all peaks of that class at that projected state.
pub fn accumulate_contributions(proj: &ProjectionTable, peaks: &[PeakSets]) -> ValuationGrid {
    assert_eq!(
        peaks.len(),
        proj.aircraft,
        "one PeakSets per projected aircraft"
    );
    let mut grid = ValuationGrid::zeroed(proj.aircraft, proj.actions, proj.window);
    fill_class(&mut grid.v_pos, proj, peaks, |p| &p.positive, positive_value);
    fill_class(&mut grid.v_neg, proj, peaks, |p| &p.batch_negative, well_value);
    fill_class(
        &mut grid.v_terrain,
        proj,
        peaks,
        |p| &p.terrain_negative,
        well_value,
    );
    fill_class(
        &mut grid.v_intruder,
        proj,
        peaks,
        |p| &p.intruder_negative,
        well_value,
    );
    grid
}

/// Combine contributions into the per-action score: for each (aircraft,
/// action), the max over the window of
/// v_pos - max(v_neg, v_terrain, v_intruder) - hard_deck_penalty.
pub fn combine_value(grid: &mut ValuationGrid, proj: &ProjectionTable, penalty_alt: f64) {
    let window = grid.window;
    let actions = grid.actions;
    let v_pos = &grid.v_pos;
    let v_neg = &grid.v_neg;
    let v_terrain = &grid.v_terrain;
    let v_intruder = &grid.v_intruder;
    grid.v_star
        .par_iter_mut()
        .enumerate()
        .for_each(|(row, slot)| {
            let rollout = proj.rollout(row / actions, row % actions);
            let base = row * window;
            let mut best = f64::NEG_INFINITY;
            for (state, c) in rollout.iter().zip(base..base + window) {
                let neg = v_neg[c].max(v_terrain[c]).max(v_intruder[c]);
                let deck = hard_deck_penalty(state.position.z, penalty_alt);
                best = best.max(v_pos[c] - neg - deck);
            }
            *slot = best;
        });
}

/// Index of the maximum value; ties break to the lowest action index.
pub fn select_action(v_star_row: &[f64]) -> usize {
    assert!(!v_star_row.is_empty(), "action row must be non-empty");
    let mut best = 0;
    for (i, v) in v_star_row.iter().enumerate().skip(1) {
        if *v > v_star_row[best] {
            best = i;
        }
    }
    best
}

/// Run the full valuation pipeline for a projected batch.
pub fn evaluate(proj: &ProjectionTable, peaks: &[PeakSets], penalty_alt: f64) -> ValuationGrid {
    let mut grid = accumulate_contributions(proj, peaks);
    combine_value(&mut grid, proj, penalty_alt);
    for i in 0..grid.aircraft {
        grid.best_action[i] = select_action(grid.v_star_row(i));
    }
    grid
}
