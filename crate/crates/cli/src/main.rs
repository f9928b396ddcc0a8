//! Command line front end: scenario loading, plan requests, batch requests,
//! simulation export, benchmarks, and plan-file validation.
//!
//! Exit codes: 0 success, 1 domain rejection (a request was rejected or a
//! plan failed validation), 2 usage/parse/configuration error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fastmdp::bench::{bench_batch_scaling, bench_plan_scaling, write_bench_csv, BenchConfig};
use fastmdp::domain::{validate_scenario, Scenario, Vec3};
use fastmdp::planstore::{load_store, save_store, PlanStore};
use fastmdp::scheduler::{
    process_batch, process_requests, request_initial_state, validate_plan, PlanRequest,
    PlanResponse,
};
use fastmdp::simulation::{simulate_batch, write_trajectories_csv, AircraftStatus};
use fastmdp::valuation::evaluate;

#[derive(Parser)]
#[command(name = "pdfp", version, about = "Pre-departure flight plan scheduler")]
struct Cli {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    /// Plan store file (line-delimited JSON); loaded if present
    #[arg(long)]
    store: Option<PathBuf>,
    /// Worker threads for the data-parallel pipeline (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for synthetic workloads
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for reports, trajectories, and CSVs
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Chattier progress output
    #[arg(long, short)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process requests one by one in arrival order (FCFS)
    Plan {
        /// JSON array of plan requests
        #[arg(long)]
        requests: PathBuf,
    },
    /// Co-simulate all requests as one mutually-aware batch
    Batch {
        #[arg(long)]
        requests: PathBuf,
    },
    /// Fly requests against the store without committing anything
    Simulate {
        #[arg(long)]
        requests: PathBuf,
        /// Also dump the first decision step's valuation grid as CSV
        #[arg(long)]
        dump_values: Option<PathBuf>,
    },
    /// Scaling benchmarks, written as CSV
    Bench {
        #[arg(long, value_enum)]
        mode: BenchMode,
        /// Accepted-plan counts for --mode plans
        #[arg(long, value_delimiter = ',', default_value = "0,100,500")]
        counts: Vec<usize>,
        /// Batch sizes for --mode batch
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
        batch_sizes: Vec<usize>,
        /// Fixed intruder count for --mode batch
        #[arg(long, default_value_t = 100)]
        intruders: usize,
        /// Timed decision steps per sweep point
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Untimed steps before measurement
        #[arg(long, default_value_t = 50)]
        warmup: usize,
    },
    /// Validate a plan file against the store and terrain
    Validate {
        /// Candidate plans, same line-delimited format as the store
        #[arg(long)]
        plans: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchMode {
    Plans,
    Batch,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let file = File::open(path).with_context(|| format!("opening scenario {}", path.display()))?;
    let scenario: Scenario = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing scenario {}", path.display()))?;
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        bail!("invalid scenario: {}", violations.join("; "));
    }
    Ok(scenario)
}

fn load_requests(path: &Path) -> Result<Vec<PlanRequest>> {
    let file = File::open(path).with_context(|| format!("opening requests {}", path.display()))?;
    let reqs: Vec<PlanRequest> = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing requests {}", path.display()))?;
    Ok(reqs)
}

fn open_store(path: Option<&Path>) -> Result<PlanStore> {
    match path {
        Some(p) if p.exists() => Ok(load_store(p)?),
        _ => Ok(PlanStore::new()),
    }
}

fn write_responses(out_dir: &Path, responses: &[PlanResponse]) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    #[derive(serde::Serialize)]
    struct ResponseRow<'a> {
        aircraft_id: &'a str,
        status: &'a fastmdp::scheduler::RequestStatus,
        #[serde(skip_serializing_if = "Option::is_none")]
        plan_id: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        rejection_reason: &'a Option<fastmdp::scheduler::RejectionReason>,
        diagnostics: &'a fastmdp::scheduler::Diagnostics,
    }
    let rows: Vec<ResponseRow> = responses
        .iter()
        .map(|r| ResponseRow {
            aircraft_id: &r.aircraft_id,
            status: &r.status,
            plan_id: r.plan.as_ref().map(|p| p.plan_id.as_str()),
            rejection_reason: &r.rejection_reason,
            diagnostics: &r.diagnostics,
        })
        .collect();
    let path = out_dir.join("responses.json");
    let mut file = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut file, &rows)?;
    file.flush()?;
    Ok(())
}

fn write_plan_csvs(out_dir: &Path, responses: &[PlanResponse]) -> Result<()> {
    for response in responses {
        if let Some(plan) = &response.plan {
            let path = out_dir.join(format!("{}.csv", plan.plan_id));
            let mut file = BufWriter::new(File::create(&path)?);
            write_trajectories_csv(std::slice::from_ref(plan), &mut file)?;
            file.flush()?;
        }
    }
    Ok(())
}

fn finish_requests(
    cli_store: Option<&Path>,
    out_dir: &Path,
    store: &PlanStore,
    responses: &[PlanResponse],
    verbose: bool,
) -> Result<ExitCode> {
    if let Some(path) = cli_store {
        save_store(store, path)?;
    }
    write_responses(out_dir, responses)?;
    write_plan_csvs(out_dir, responses)?;
    let accepted = responses.iter().filter(|r| r.accepted()).count();
    if verbose {
        for r in responses {
            eprintln!(
                "{}: {:?} {:?} (steps {}, min sep {:?})",
                r.aircraft_id,
                r.status,
                r.rejection_reason,
                r.diagnostics.step_count,
                r.diagnostics.min_separation
            );
        }
    }
    println!("accepted {accepted}/{} requests", responses.len());
    Ok(if accepted == responses.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("initializing worker pool")?;
    }
    let scenario = load_scenario(&cli.scenario)?;
    let out_dir = cli.out.clone();

    match cli.command {
        Command::Plan { requests } => {
            let reqs = load_requests(&requests)?;
            let mut store = open_store(cli.store.as_deref())?;
            let responses = process_requests(&reqs, &mut store, &scenario)?;
            finish_requests(cli.store.as_deref(), &out_dir, &store, &responses, cli.verbose)
        }
        Command::Batch { requests } => {
            let reqs = load_requests(&requests)?;
            if reqs.is_empty() {
                bail!("batch request file contains no requests");
            }
            let mut store = open_store(cli.store.as_deref())?;
            let responses = process_batch(&reqs, &mut store, &scenario)?;
            finish_requests(cli.store.as_deref(), &out_dir, &store, &responses, cli.verbose)
        }
        Command::Simulate {
            requests,
            dump_values,
        } => {
            let reqs = load_requests(&requests)?;
            if reqs.is_empty() {
                bail!("simulate request file contains no requests");
            }
            let store = open_store(cli.store.as_deref())?;
            let snapshot = store.snapshot();
            let states: Vec<_> = reqs
                .iter()
                .map(|r| request_initial_state(r, &scenario))
                .collect();
            let goals: Vec<Vec3> = reqs.iter().map(|r| r.destination).collect();

            if let Some(values_path) = dump_values {
                let intruders =
                    fastmdp::planstore::active_intruders(&snapshot, states[0].clock);
                let peaks = fastmdp::peaks::build_step_peaks(
                    &states,
                    &goals,
                    &intruders,
                    &scenario.terrain_peaks,
                )?;
                let proj = fastmdp::dynamics::forward_project(
                    &states,
                    &scenario.action_set(),
                    &scenario.limits,
                    scenario.dt,
                    scenario.window,
                );
                let grid = evaluate(&proj, &peaks, scenario.limits.hard_deck_altitude);
                let mut file = BufWriter::new(File::create(&values_path)?);
                grid.write_csv(&mut file)?;
                file.flush()?;
            }

            let mut sim = simulate_batch(&states, &goals, &snapshot, &scenario)?;
            for (plan, req) in sim.trajectories.iter_mut().zip(&reqs) {
                plan.aircraft_id = req.aircraft_id.clone();
                plan.plan_id = req.aircraft_id.clone();
            }
            std::fs::create_dir_all(&out_dir)?;
            for plan in &sim.trajectories {
                let path = out_dir.join(format!("{}.csv", plan.aircraft_id));
                let mut file = BufWriter::new(File::create(&path)?);
                write_trajectories_csv(std::slice::from_ref(plan), &mut file)?;
                file.flush()?;
            }
            let all_reached = sim
                .outcomes
                .iter()
                .all(|o| o.status == AircraftStatus::ReachedGoal);
            for (req, outcome) in reqs.iter().zip(&sim.outcomes) {
                println!(
                    "{}: {:?}{}",
                    req.aircraft_id,
                    outcome.status,
                    if outcome.nmac_flagged { " (NMAC)" } else { "" }
                );
            }
            println!(
                "steps {} min_separation {}",
                sim.step_count, sim.min_separation_observed
            );
            Ok(if all_reached {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bench {
            mode,
            counts,
            batch_sizes,
            intruders,
            steps,
            warmup,
        } => {
            let cfg = BenchConfig {
                steps,
                warmup_steps: warmup,
                ..BenchConfig::default()
            };
            std::fs::create_dir_all(&out_dir)?;
            let (records, name) = match mode {
                BenchMode::Plans => (
                    bench_plan_scaling(&counts, &scenario, &cfg, cli.seed)?,
                    "bench_plans.csv",
                ),
                BenchMode::Batch => (
                    bench_batch_scaling(&batch_sizes, intruders, &scenario, &cfg, cli.seed)?,
                    "bench_batch.csv",
                ),
            };
            let path = out_dir.join(name);
            let mut file = BufWriter::new(File::create(&path)?);
            write_bench_csv(&records, &mut file)?;
            file.flush()?;
            for r in &records {
                println!(
                    "param {} -> {:.2} Hz ({:.2} total cycles/s)",
                    r.param, r.hz, r.total_cycles_hz
                );
            }
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { plans } => {
            let store = open_store(cli.store.as_deref())?;
            let snapshot = store.snapshot();
            let candidates = load_store(&plans)?;
            let mut all_pass = true;
            for plan in candidates.plans() {
                let report = validate_plan(plan, &snapshot, &scenario.terrain_peaks, &scenario);
                all_pass &= report.pass;
                println!(
                    "{}: {}{}",
                    plan.plan_id,
                    if report.pass { "PASS" } else { "FAIL" },
                    report
                        .failure
                        .as_deref()
                        .map(|f| format!(" ({f})"))
                        .unwrap_or_default()
                );
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
