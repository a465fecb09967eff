//! Run-level indicators and comparison against a baseline policy.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Outcome, Request, SimConfig};
use crate::error::{Error, Result};
use crate::scenario::EconomicParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub policy: String,
    pub fleet_size: usize,
    pub seed: u64,
    pub requests: usize,
    pub served: usize,
    /// Mean quoted wait of served requests (min); absent if none served.
    pub avg_wait: Option<f64>,
    pub market_share: f64,
    pub fares: f64,
    pub profit: f64,
    /// Driving minutes over the fleet.
    pub mileage: f64,
    pub relocations: u64,
    pub idle_vehicle_epochs: u64,
}

impl KpiReport {
    pub(super) fn from_run(
        config: &SimConfig,
        requests: &[Request],
        fares: f64,
        driving: f64,
        idle_epochs: u64,
        relocations: u64,
        econ: &EconomicParams,
    ) -> Self {
        let waits: Vec<f64> = requests.iter().filter_map(|r| r.wait).collect();
        let served = requests.iter().filter(|r| r.outcome == Outcome::Served).count();
        KpiReport {
            policy: config.policy.name().to_string(),
            fleet_size: config.fleet_size,
            seed: config.seed,
            requests: requests.len(),
            served,
            avg_wait: (!waits.is_empty()).then(|| waits.iter().sum::<f64>() / waits.len() as f64),
            market_share: if requests.is_empty() {
                0.0
            } else {
                served as f64 / requests.len() as f64
            },
            fares,
            profit: fares - econ.moving_cost * driving - econ.idle_cost * idle_epochs as f64,
            mileage: driving,
            relocations,
            idle_vehicle_epochs: idle_epochs,
        }
    }
}

/// Percentage changes of one run against the baseline with the same fleet
/// size and seed. `None` where the baseline value is zero (or absent) and
/// the run differs from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub policy: String,
    pub baseline: String,
    pub fleet_size: usize,
    pub seed: u64,
    #[serde(rename = "wait_reduction_pct")]
    pub wait_reduction: Option<f64>,
    #[serde(rename = "share_improvement_pct")]
    pub share_improvement: Option<f64>,
    #[serde(rename = "profit_improvement_pct")]
    pub profit_improvement: Option<f64>,
    #[serde(rename = "added_mileage_pct")]
    pub added_mileage: Option<f64>,
}

fn pct(run: f64, base: f64) -> Option<f64> {
    if run == base {
        Some(0.0)
    } else if base == 0.0 {
        None
    } else {
        Some((run - base) / base.abs() * 100.0)
    }
}

/// Compares every run with the `baseline` policy run of the same fleet size
/// and seed.
pub fn compare(runs: &[KpiReport], baseline: &str) -> Result<Vec<Comparison>> {
    runs.iter()
        .map(|r| {
            let base = runs
                .iter()
                .find(|b| b.policy == baseline && b.fleet_size == r.fleet_size && b.seed == r.seed)
                .ok_or_else(|| {
                    Error::invalid(
                        "baseline",
                        format!(
                            "no `{baseline}` run for fleet {} seed {}",
                            r.fleet_size, r.seed
                        ),
                    )
                })?;
            let wait_reduction = match (r.avg_wait, base.avg_wait) {
                (Some(w), Some(b)) => pct(w, b).map(|p| if p == 0.0 { 0.0 } else { -p }),
                (None, None) => Some(0.0),
                _ => None,
            };
            Ok(Comparison {
                policy: r.policy.clone(),
                baseline: baseline.to_string(),
                fleet_size: r.fleet_size,
                seed: r.seed,
                wait_reduction,
                share_improvement: pct(r.market_share, base.market_share),
                profit_improvement: pct(r.profit, base.profit),
                added_mileage: pct(r.mileage, base.mileage),
            })
        })
        .collect()
}

pub fn write_kpi_csv<W: Write>(reports: &[KpiReport], w: W) -> Result<()> {
    write_rows(reports, w)
}

pub fn read_kpi_csv<R: Read>(r: R) -> Result<Vec<KpiReport>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_comparison_csv<W: Write>(rows: &[Comparison], w: W) -> Result<()> {
    write_rows(rows, w)
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(policy: &str, profit: f64) -> KpiReport {
        KpiReport {
            policy: policy.into(),
            fleet_size: 10,
            seed: 1,
            requests: 100,
            served: 50,
            avg_wait: Some(4.0),
            market_share: 0.5,
            fares: 0.0,
            profit,
            mileage: 200.0,
            relocations: 0,
            idle_vehicle_epochs: 0,
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let rows = compare(&[report("none", 100.0)], "none").unwrap();
        let c = &rows[0];
        assert_eq!(c.wait_reduction, Some(0.0));
        assert_eq!(c.share_improvement, Some(0.0));
        assert_eq!(c.profit_improvement, Some(0.0));
        assert_eq!(c.added_mileage, Some(0.0));
    }

    #[test]
    fn profit_improvement_definition() {
        let rows = compare(&[report("none", 100.0), report("cmcf", 110.0)], "none").unwrap();
        assert!((rows[1].profit_improvement.unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn negative_baseline_profit_uses_magnitude() {
        let rows = compare(&[report("none", -100.0), report("cmcf", -50.0)], "none").unwrap();
        assert!((rows[1].profit_improvement.unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn kpi_csv_round_trip() {
        let mut r = report("cmcf", 12.5);
        r.avg_wait = None;
        let rows = vec![report("none", 1.0), r];
        let mut buf = Vec::new();
        write_kpi_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("policy,fleet_size,seed,"));
        assert_eq!(read_kpi_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn missing_baseline() {
        let err = compare(&[report("cmcf", 1.0)], "none").unwrap_err();
        assert!(err.is_validation());
    }
}
