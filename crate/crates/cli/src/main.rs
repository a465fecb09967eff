//! `fleetflow`: ingest trip data, solve allocations, run and compare
//! simulations.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fleetflow_core::cmcf::{initial_linearization, solve_cmcf};
use fleetflow_core::cost::{build_profiles, EdgeCost};
use fleetflow_core::experiment::{run_batch, write_atomic, write_batch, ExperimentSpec};
use fleetflow_core::graph::{AllocationGraph, EdgeRole};
use fleetflow_core::mcf::write_dimacs;
use fleetflow_core::par::Execution;
use fleetflow_core::scenario::{ingest_trips, read_trips, EconomicParams, FleetState, IngestOptions, Scenario};
use fleetflow_core::sim::{compare, read_kpi_csv, write_comparison_csv, write_kpi_csv, PolicyKind};
use fleetflow_core::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fleetflow", version, about = "Fleet redistribution by convex min-cost flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a trip CSV into a scenario file.
    Ingest(IngestArgs),
    /// Solve one allocation for a supply vector.
    Solve(SolveArgs),
    /// Run an experiment: simulations over fleet sizes, policies and seeds.
    Simulate(SimulateArgs),
    /// Compare a KPI table against a baseline policy.
    Compare(CompareArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Trip CSV with pickup_min,pickup_lon,pickup_lat,dropoff_lon,dropoff_lat.
    #[arg(long)]
    trips: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Epoch length in minutes.
    #[arg(long, default_value_t = 30.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    /// Start of the first of the two demand epochs (minutes).
    #[arg(long, default_value_t = 0.0)]
    epoch_start: f64,
    /// Average driving speed for travel times (km/h).
    #[arg(long, default_value_t = 20.0)]
    speed: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Vehicles per cluster, comma-separated.
    #[arg(long)]
    supply: String,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Write the plan as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the allocation graph edge list as CSV.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Write the initial linearized network in DIMACS form.
    #[arg(long)]
    dimacs: Option<PathBuf>,
    /// Write one cost-curve CSV per non-linear edge into this directory.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment JSON; the flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Fleet sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    fleet: Vec<usize>,
    /// Policies (none, cmcf, greedy_deficit), comma-separated.
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    /// Seeds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the simulations one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// KPI table written by `simulate`.
    #[arg(long)]
    kpi: PathBuf,
    #[arg(long, default_value = "none")]
    baseline: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn ingest(a: IngestArgs) -> Result<()> {
    let file = fs::File::open(&a.trips)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", a.trips.display()))))?;
    let trips = read_trips(file)?;
    let mut opts = IngestOptions::new(a.k, a.tau, a.epoch_start);
    opts.speed_kmh = a.speed;
    opts.seed = a.seed;
    let fragment = ingest_trips(&trips, &opts)?;
    let econ = EconomicParams {
        epoch_length: a.tau,
        alpha: a.alpha,
        ..EconomicParams::case_study()
    };
    let scenario = fragment.into_scenario(econ, a.seed)?;
    let mut text = scenario.to_json();
    text.push('\n');
    write_atomic(&a.out, text.as_bytes())?;
    println!("clusters,{}", scenario.cluster_count);
    println!("trips,{}", trips.len());
    println!("cluster,lon,lat,demand_current,demand_next");
    for (i, c) in scenario.centroids.iter().enumerate() {
        let z0: f64 = scenario.demand[0][i].iter().sum();
        let z1: f64 = scenario.demand[1][i].iter().sum();
        println!("{i},{},{},{z0},{z1}", c[0], c[1]);
    }
    Ok(())
}

fn parse_supply(text: &str) -> Result<Vec<i64>> {
    text.split(',')
        .enumerate()
        .map(|(i, s)| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| Error::invalid(format!("supply[{i}]"), format!("not an integer: `{s}`")))
        })
        .collect()
}

fn solve(a: SolveArgs) -> Result<()> {
    let scenario = Scenario::from_json(&read_text(&a.scenario)?)?.with_overrides(a.tau, a.alpha)?;
    let fleet = FleetState::new(parse_supply(&a.supply)?)?;
    let graph = AllocationGraph::build(&scenario, &fleet)?;
    let profiles = build_profiles(&graph, &scenario, Execution::Parallel)?;

    if let Some(path) = &a.graph {
        let mut buf = Vec::new();
        graph.write_edge_list(&mut buf)?;
        write_atomic(path, &buf)?;
    }
    if let Some(path) = &a.dimacs {
        let (net, _) = initial_linearization(&graph, &profiles).network();
        let mut buf = Vec::new();
        write_dimacs(&net, &mut buf)?;
        write_atomic(path, &buf)?;
    }
    if let Some(dir) = &a.curves {
        fs::create_dir_all(dir)?;
        for p in &profiles {
            if let EdgeCost::Convex(c) = &p.cost {
                let e = &graph.edges[p.edge];
                let name = format!("edge-{}-{}-{}.csv", p.edge, graph.vertices[e.from], graph.vertices[e.to]);
                let mut buf = Vec::new();
                c.write_curve(&mut buf)?;
                write_atomic(&dir.join(name.replace('+', "_")), &buf)?;
            }
        }
    }

    let report = solve_cmcf(&graph, &profiles)?;
    if let Some(path) = &a.trace {
        let mut buf = Vec::new();
        report.write_trace(&mut buf)?;
        write_atomic(path, &buf)?;
    }

    let mut trips: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut relocations: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut idle: BTreeMap<usize, i64> = BTreeMap::new();
    for (e, &x) in graph.edges.iter().zip(&report.edge_flow) {
        if x == 0 {
            continue;
        }
        match e.role {
            EdgeRole::Trip => *trips.entry(e.od.unwrap()).or_default() += x,
            EdgeRole::Relocate => *relocations.entry(e.od.unwrap()).or_default() += x,
            EdgeRole::Idle | EdgeRole::Overflow => *idle.entry(e.od.unwrap().0).or_default() += x,
            _ => {}
        }
    }
    println!("objective,{}", report.objective);
    println!("original_objective,{}", report.original_objective);
    println!("iterations,{}", report.iterations);
    println!("segments_added,{}", report.segments_added);
    println!("class,from,to,vehicles");
    for ((i, j), x) in &trips {
        println!("trip,{i},{j},{x}");
    }
    for ((i, j), x) in &relocations {
        println!("redistribution,{i},{j},{x}");
    }
    for (i, x) in &idle {
        println!("idle,{i},{i},{x}");
    }

    if let Some(path) = &a.out {
        let rows = |m: &BTreeMap<(usize, usize), i64>| -> Vec<serde_json::Value> {
            m.iter()
                .map(|(&(i, j), &x)| json!({"from": i, "to": j, "vehicles": x}))
                .collect()
        };
        let plan = json!({
            "supply": fleet.supply,
            "objective": report.objective,
            "original_objective": report.original_objective,
            "iterations": report.iterations,
            "segments_added": report.segments_added,
            "trips": rows(&trips),
            "redistribution": rows(&relocations),
            "idle": idle.iter().map(|(&i, &x)| json!({"cluster": i, "vehicles": x})).collect::<Vec<_>>(),
            "edge_flow": report.edge_flow,
        });
        let mut text = serde_json::to_string_pretty(&plan)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

fn build_spec(a: &SimulateArgs) -> Result<ExperimentSpec> {
    let mut spec = match &a.spec {
        Some(path) => {
            let mut spec = ExperimentSpec::from_json(&read_text(path)?)?;
            let base = path.parent().unwrap_or(Path::new("."));
            spec.scenario = base.join(&spec.scenario);
            spec.out = base.join(&spec.out);
            spec
        }
        None => ExperimentSpec {
            scenario: a
                .scenario
                .clone()
                .ok_or_else(|| Error::invalid("--scenario", "required without --spec"))?,
            fleet_sizes: Vec::new(),
            policies: vec![PolicyKind::None, PolicyKind::Cmcf],
            tau: None,
            alpha: None,
            seeds: vec![0],
            epochs: 8,
            out: a
                .out
                .clone()
                .ok_or_else(|| Error::invalid("--out", "required without --spec"))?,
        },
    };
    if let Some(s) = &a.scenario {
        spec.scenario = s.clone();
    }
    if !a.fleet.is_empty() {
        spec.fleet_sizes = a.fleet.clone();
    }
    if !a.policy.is_empty() {
        spec.policies = a.policy.iter().map(|p| p.parse()).collect::<Result<_>>()?;
    }
    if !a.seed.is_empty() {
        spec.seeds = a.seed.clone();
    }
    if let Some(e) = a.epochs {
        spec.epochs = e;
    }
    if a.tau.is_some() {
        spec.tau = a.tau;
    }
    if a.alpha.is_some() {
        spec.alpha = a.alpha;
    }
    if let Some(o) = &a.out {
        spec.out = o.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let spec = build_spec(&a)?;
    let scenario = Scenario::from_json(&read_text(&spec.scenario)?)?.with_overrides(spec.tau, spec.alpha)?;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let results = run_batch(&scenario, &spec.runs(), exec);
    let summary = write_batch(&spec, &results, &spec.out)?;
    let stdout = std::io::stdout();
    write_kpi_csv(&summary.reports, stdout.lock())?;
    if !summary.comparisons.is_empty() {
        println!();
        write_comparison_csv(&summary.comparisons, stdout.lock())?;
    }
    for (name, err) in &summary.failures {
        eprintln!("run {name} failed: {err}");
    }
    if !summary.failures.is_empty() {
        return Err(Error::Fault(format!("{} of {} runs failed", summary.failures.len(), results.len())));
    }
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    let file = fs::File::open(&a.kpi)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", a.kpi.display()))))?;
    let reports = read_kpi_csv(file)?;
    let rows = compare(&reports, &a.baseline)?;
    let mut buf = Vec::new();
    write_comparison_csv(&rows, &mut buf)?;
    match &a.out {
        Some(path) => write_atomic(path, &buf)?,
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Solve(a) => solve(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
