//! Batches of seeded simulations over fleet sizes and policies.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::scenario::Scenario;
use crate::sim::{self, compare, write_comparison_csv, write_event_log, write_kpi_csv, KpiReport, PolicyKind, SimConfig, SimOutcome};

fn default_epochs() -> usize {
    8
}

/// An experiment description as read from JSON. Relative paths are
/// resolved by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: PathBuf,
    pub fleet_sizes: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    pub out: PathBuf,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ExperimentSpec = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::invalid(e.path().to_string(), e.into_inner().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fleet_sizes.is_empty() {
            return Err(Error::invalid("fleet_sizes", "need at least one fleet size"));
        }
        if self.policies.is_empty() {
            return Err(Error::invalid("policies", "need at least one policy"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds", "need at least one seed"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        Ok(())
    }

    /// Every `(fleet, policy, seed)` combination in spec order.
    pub fn runs(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &fleet_size in &self.fleet_sizes {
            for &policy in &self.policies {
                for &seed in &self.seeds {
                    out.push(SimConfig {
                        epochs: self.epochs,
                        fleet_size,
                        policy,
                        seed,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: SimConfig,
    /// Error text for failed runs.
    pub outcome: std::result::Result<SimOutcome, String>,
}

impl RunResult {
    pub fn name(&self) -> String {
        run_name(&self.config)
    }
}

pub fn run_name(c: &SimConfig) -> String {
    format!("{}-f{}-s{}", c.policy, c.fleet_size, c.seed)
}

/// Runs every combination. Runs are independent and share the scenario
/// read-only; a failing run does not stop the others.
pub fn run_batch(scenario: &Scenario, configs: &[SimConfig], exec: Execution) -> Vec<RunResult> {
    par::map(exec, configs, |c| RunResult {
        config: c.clone(),
        outcome: sim::run(scenario, c).map_err(|e| e.to_string()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ManifestRun {
    name: String,
    policy: PolicyKind,
    fleet_size: usize,
    seed: u64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kpi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    spec: &'a ExperimentSpec,
    runs: Vec<ManifestRun>,
    kpi_table: &'static str,
    comparison_table: Option<&'static str>,
    timings: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub reports: Vec<KpiReport>,
    pub comparisons: Vec<sim::Comparison>,
    pub failures: Vec<(String, String)>,
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so
/// readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes per-run tables and logs, the combined KPI and comparison tables,
/// solve timings and the manifest under `out`. Everything except
/// `timings.csv` is identical between repeated runs.
pub fn write_batch(spec: &ExperimentSpec, results: &[RunResult], out: &Path) -> Result<BatchSummary> {
    fs::create_dir_all(out.join("runs"))?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut manifest_runs = Vec::new();
    let mut timings = String::from("policy,fleet_size,seed,epoch,seconds\n");
    for r in results {
        let name = r.name();
        let c = &r.config;
        match &r.outcome {
            Ok(o) => {
                let dir = out.join("runs").join(&name);
                fs::create_dir_all(&dir)?;
                let mut kpi = Vec::new();
                write_kpi_csv(std::slice::from_ref(&o.report), &mut kpi)?;
                write_atomic(&dir.join("kpi.csv"), &kpi)?;
                let mut log = Vec::new();
                write_event_log(&o.events, &mut log)?;
                write_atomic(&dir.join("events.csv"), &log)?;
                for (epoch, s) in o.solve_seconds.iter().enumerate() {
                    timings.push_str(&format!("{},{},{},{epoch},{s}\n", c.policy, c.fleet_size, c.seed));
                }
                reports.push(o.report.clone());
                manifest_runs.push(ManifestRun {
                    name: name.clone(),
                    policy: c.policy,
                    fleet_size: c.fleet_size,
                    seed: c.seed,
                    status: "ok",
                    error: None,
                    kpi: Some(format!("runs/{name}/kpi.csv")),
                    events: Some(format!("runs/{name}/events.csv")),
                });
            }
            Err(e) => {
                failures.push((name.clone(), e.clone()));
                manifest_runs.push(ManifestRun {
                    name,
                    policy: c.policy,
                    fleet_size: c.fleet_size,
                    seed: c.seed,
                    status: "failed",
                    error: Some(e.clone()),
                    kpi: None,
                    events: None,
                });
            }
        }
    }
    let mut kpi = Vec::new();
    write_kpi_csv(&reports, &mut kpi)?;
    write_atomic(&out.join("kpi.csv"), &kpi)?;

    let has_baseline = spec.policies.contains(&PolicyKind::None);
    let comparisons = if has_baseline {
        let runs: Vec<KpiReport> = reports
            .iter()
            .filter(|r| {
                reports
                    .iter()
                    .any(|b| b.policy == "none" && b.fleet_size == r.fleet_size && b.seed == r.seed)
            })
            .cloned()
            .collect();
        let rows = compare(&runs, "none")?;
        let mut buf = Vec::new();
        write_comparison_csv(&rows, &mut buf)?;
        write_atomic(&out.join("comparison.csv"), &buf)?;
        rows
    } else {
        Vec::new()
    };
    write_atomic(&out.join("timings.csv"), timings.as_bytes())?;

    let manifest = Manifest {
        tool: "fleetflow",
        version: env!("CARGO_PKG_VERSION"),
        spec,
        runs: manifest_runs,
        kpi_table: "kpi.csv",
        comparison_table: has_baseline.then_some("comparison.csv"),
        timings: "timings.csv",
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&out.join("manifest.json"), &json)?;
    Ok(BatchSummary {
        reports,
        comparisons,
        failures,
    })
}
