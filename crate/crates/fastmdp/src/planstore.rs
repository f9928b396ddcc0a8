//! Database of accepted flight plans, plus time-indexed sampling that turns
//! stored plans into intruder (position, velocity) pairs.
//!
//! Persistence is line-delimited JSON, one plan per line, appendable and
//! streamable. Each record carries `schema_version` and flattens trajectory
//! rows to `[t, x, y, z, heading, speed, vertical_rate]`; velocity is rebuilt
//! from heading/speed/vertical rate on load and bank_angle/reserved are
//! zeroed, which is exact for every plan this system produces.
//!
//! Concurrency model: one writer, many readers. Readers take a
//! [`StoreSnapshot`]; appends never disturb an existing snapshot.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{AircraftState, FlightPlan, Vec3};
use crate::{Error, Result};

/// Ordered collection of accepted plans; order is FCFS acceptance order.
#[derive(Debug, Clone, Default)]
pub struct PlanStore {
    plans: Vec<Arc<FlightPlan>>,
}

/// Immutable view of the store at snapshot time.
#[derive(Debug, Clone, Default)]
pub struct StoreSnapshot {
    plans: Vec<Arc<FlightPlan>>,
}

impl PlanStore {
    pub fn new() -> Self {
        PlanStore::default()
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn plans(&self) -> impl Iterator<Item = &FlightPlan> {
        self.plans.iter().map(|p| p.as_ref())
    }

    /// Append in acceptance order; plan ids must be unique.
    pub fn append_plan(&mut self, plan: FlightPlan) -> Result<()> {
        if self.plans.iter().any(|p| p.plan_id == plan.plan_id) {
            return Err(Error::DuplicatePlanId(plan.plan_id));
        }
        if plan.states.is_empty() {
            return Err(Error::InvalidPlan(format!(
                "plan {} has no states",
                plan.plan_id
            )));
        }
        self.plans.push(Arc::new(plan));
        Ok(())
    }

    /// Cheap snapshot: clones the list of shared plan handles, so later
    /// appends are invisible to the snapshot holder.
    pub fn snapshot(&self) -> StoreSnapshot {
        StoreSnapshot {
            plans: self.plans.clone(),
        }
    }
}

impl StoreSnapshot {
    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn plans(&self) -> impl Iterator<Item = &FlightPlan> {
        self.plans.iter().map(|p| p.as_ref())
    }
}

/// Sample a stored plan at a query clock.
///
/// Inside the plan's [first, last] clock interval the position is linearly
/// interpolated between the bracketing states and the velocity is the finite
/// difference of those states over their spacing; outside the interval the
/// plan occupies no airspace and the result is absent. A single-state plan
/// answers with its stored position and velocity.
pub fn sample_intruder(plan: &FlightPlan, clock: f64) -> Option<(Vec3, Vec3)> {
    let first = plan.first_clock();
    let last = plan.last_clock();
    if plan.states.is_empty() || clock < first || clock > last {
        return None;
    }
    let n = plan.states.len();
    if n == 1 {
        let s = &plan.states[0];
        return Some((s.position, s.velocity));
    }
    let spacing = (last - first) / (n - 1) as f64;
    let mut k = (((clock - first) / spacing) as usize).min(n - 2);
    // Guard against accumulated clock drift around the estimated bracket.
    while k > 0 && clock < plan.states[k].clock {
        k -= 1;
    }
    while k + 2 < n && clock > plan.states[k + 1].clock {
        k += 1;
    }
    let a = &plan.states[k];
    let b = &plan.states[k + 1];
    let gap = b.clock - a.clock;
    let alpha = ((clock - a.clock) / gap).clamp(0.0, 1.0);
    // Convex form is exact at both endpoints.
    let position = a.position * (1.0 - alpha) + b.position * alpha;
    let velocity = (b.position - a.position) / gap;
    Some((position, velocity))
}

/// Sample every plan in the snapshot, keeping present values in acceptance
/// order.
pub fn active_intruders(snapshot: &StoreSnapshot, clock: f64) -> Vec<(Vec3, Vec3)> {
    snapshot
        .plans()
        .filter_map(|p| sample_intruder(p, clock))
        .collect()
}

const STORE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PlanRecord {
    schema_version: u32,
    plan_id: String,
    aircraft_id: String,
    departure_time: f64,
    goal_position: [f64; 3],
    states: Vec<[f64; 7]>,
}

impl From<&FlightPlan> for PlanRecord {
    fn from(plan: &FlightPlan) -> Self {
        PlanRecord {
            schema_version: STORE_SCHEMA_VERSION,
            plan_id: plan.plan_id.clone(),
            aircraft_id: plan.aircraft_id.clone(),
            departure_time: plan.departure_time,
            goal_position: [
                plan.goal_position.x,
                plan.goal_position.y,
                plan.goal_position.z,
            ],
            states: plan
                .states
                .iter()
                .map(|s| {
                    [
                        s.clock,
                        s.position.x,
                        s.position.y,
                        s.position.z,
                        s.heading,
                        s.speed,
                        s.vertical_rate,
                    ]
                })
                .collect(),
        }
    }
}

impl PlanRecord {
    fn into_plan(self) -> FlightPlan {
        FlightPlan {
            plan_id: self.plan_id,
            aircraft_id: self.aircraft_id,
            departure_time: self.departure_time,
            goal_position: Vec3::new(
                self.goal_position[0],
                self.goal_position[1],
                self.goal_position[2],
            ),
            states: self
                .states
                .into_iter()
                .map(|[t, x, y, z, heading, speed, vertical_rate]| {
                    AircraftState::new(Vec3::new(x, y, z), heading, speed, vertical_rate, t)
                })
                .collect(),
        }
    }
}

fn write_record<W: Write>(out: &mut W, plan: &FlightPlan) -> std::io::Result<()> {
    let record = PlanRecord::from(plan);
    serde_json::to_writer(&mut *out, &record)?;
    writeln!(out)
}

/// Load a store from a line-delimited JSON file. Missing fields, bad JSON,
/// or duplicate plan ids report the offending record number.
pub fn load_store(path: &Path) -> Result<PlanStore> {
    let file = File::open(path).map_err(|source| Error::StoreIo {
        path: path.to_owned(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut store = PlanStore::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| Error::StoreIo {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PlanRecord =
            serde_json::from_str(&line).map_err(|e| Error::StoreParse {
                path: path.to_owned(),
                line: line_no,
                message: e.to_string(),
            })?;
        if record.schema_version != STORE_SCHEMA_VERSION {
            return Err(Error::StoreParse {
                path: path.to_owned(),
                line: line_no,
                message: format!("unsupported schema_version {}", record.schema_version),
            });
        }
        store
            .append_plan(record.into_plan())
            .map_err(|e| Error::StoreParse {
                path: path.to_owned(),
                line: line_no,
                message: e.to_string(),
            })?;
    }
    Ok(store)
}

/// Write the whole store, one record per line, in acceptance order.
pub fn save_store(store: &PlanStore, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::StoreIo {
        path: path.to_owned(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    for plan in store.plans() {
        write_record(&mut out, plan).map_err(|source| Error::StoreIo {
            path: path.to_owned(),
            source,
        })?;
    }
    out.flush().map_err(|source| Error::StoreIo {
        path: path.to_owned(),
        source,
    })
}

/// Append one accepted plan to the store file, creating it if needed.
/// Appending after every acceptance yields the same bytes as a full save.
pub fn append_plan_to_file(path: &Path, plan: &FlightPlan) -> Result<()> {
    let file = File::options()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|source| Error::StoreIo {
            path: path.to_owned(),
            source,
        })?;
    let mut out = BufWriter::new(file);
    write_record(&mut out, plan).map_err(|source| Error::StoreIo {
        path: path.to_owned(),
        source,
    })?;
    out.flush().map_err(|source| Error::StoreIo {
        path: path.to_owned(),
        source,
    })
}
