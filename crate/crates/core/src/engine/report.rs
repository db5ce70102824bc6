//! Result files. Every file carries the config hash and tool version: CSV
//! files in leading `#` lines, JSON files in a `meta` object.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::thermal::PowerBreakdown;

use super::{ComparisonReport, SimulationResult, TOOL_VERSION};

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    meta: Stamp<'a>,
    data: &'a T,
}

#[derive(Serialize)]
struct Stamp<'a> {
    config_hash: &'a str,
    tool_version: &'a str,
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Domain(format!("writing {}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, config_hash: &str, value: &T) -> Result<()> {
    let doc = Stamped {
        meta: Stamp {
            config_hash,
            tool_version: TOOL_VERSION,
        },
        data: value,
    };
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    io(path, fs::write(path, text + "\n"))
}

fn header_lines(config_hash: &str) -> String {
    format!("# config_hash={config_hash}\n# tool_version={TOOL_VERSION}\n")
}

/// Writes flat serializable rows as CSV under the stamp lines.
pub fn write_csv<T: Serialize>(path: &Path, config_hash: &str, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(header_lines(config_hash).into_bytes());
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    io(path, fs::write(path, bytes))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_hourly_csv(path: &Path, result: &SimulationResult) -> Result<()> {
    let mut head: Vec<String> = [
        "hour",
        "day",
        "clock_hour",
        "t_ext",
        "t_in",
        "dni",
        "dhi",
        "altitude_deg",
        "azimuth_deg",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    head.extend(PowerBreakdown::COLUMNS.iter().map(|s| s.to_string()));
    head.extend(
        [
            "residual_w",
            "led_tier12_w",
            "led_tier3_w",
            "chiller_w",
            "heating_w",
            "hvac_electric_w",
            "daylight_ppfd",
            "led3_ppfd",
            "tier3_ppfd",
            "dim",
            "ec_voltage",
            "ec_tau",
            "transpiration_kg_h",
            "condensate_kg",
            "net_water_kg",
            "harvested_w",
            "tier3_lai",
            "harvested_kg",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut w = csv::Writer::from_writer(header_lines(&result.meta.config_hash).into_bytes());
    w.write_record(&head).map_err(|e| csv_err(path, e))?;
    for h in &result.hours {
        let mut rec = vec![
            h.hour.to_string(),
            h.day.to_string(),
            h.clock_hour.to_string(),
        ];
        rec.extend(
            [h.t_ext, h.t_in, h.dni, h.dhi, h.altitude_deg, h.azimuth_deg]
                .iter()
                .map(f64::to_string),
        );
        rec.extend(h.balance.values().iter().map(f64::to_string));
        rec.extend(
            [
                h.balance.residual(),
                h.led_tier12_w,
                h.led_tier3_w,
                h.chiller_w,
                h.heating_w,
                h.hvac_electric_w,
                h.daylight_ppfd,
                h.led3_ppfd,
                h.tier3_ppfd,
                h.dim,
            ]
            .iter()
            .map(f64::to_string),
        );
        rec.push(opt(h.ec_voltage));
        rec.push(opt(h.ec_tau));
        rec.extend(
            [
                h.transpiration_kg_h,
                h.condensate_kg,
                h.net_water_kg,
                h.harvested_w,
                h.tier3_lai,
                h.harvested_kg,
            ]
            .iter()
            .map(f64::to_string),
        );
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    io(path, fs::write(path, bytes))
}

/// `hourly.csv`, `summary.json` and `daily_dli.csv` for one run.
pub fn write_simulation(dir: &Path, result: &SimulationResult) -> Result<()> {
    io(dir, fs::create_dir_all(dir))?;
    if !result.hours.is_empty() {
        write_hourly_csv(&dir.join("hourly.csv"), result)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        meta: &'a super::RunMeta,
        totals: &'a crate::economics::EnergyTotals,
        yields: &'a super::YieldLedger,
        kpis: &'a crate::economics::KpiReport,
        economics: &'a crate::economics::EconomicInputs,
        peak_chiller_w: f64,
        flags: &'a super::RunFlags,
    }
    let s = Summary {
        meta: &result.meta,
        totals: &result.totals,
        yields: &result.yields,
        kpis: &result.kpis,
        economics: &result.economics,
        peak_chiller_w: result.peak_chiller_w,
        flags: &result.flags,
    };
    write_json(&dir.join("summary.json"), &result.meta.config_hash, &s)?;
    #[derive(Serialize)]
    struct Day {
        day: usize,
        dli: f64,
    }
    let days: Vec<Day> = result
        .daily_dli
        .iter()
        .enumerate()
        .map(|(d, v)| Day {
            day: d + 1,
            dli: *v,
        })
        .collect();
    write_csv(&dir.join("daily_dli.csv"), &result.meta.config_hash, &days)
}

/// `comparison.csv`, `ppe.csv` and `comparison.json`. The stamp hash
/// combines the hashes of all rows.
pub fn write_comparison(dir: &Path, report: &ComparisonReport) -> Result<()> {
    use sha2::{Digest, Sha256};
    io(dir, fs::create_dir_all(dir))?;
    let mut h = Sha256::new();
    for r in &report.rows {
        h.update(r.config_hash.as_bytes());
    }
    let hash = hex::encode(h.finalize());
    write_csv(&dir.join("comparison.csv"), &hash, &report.rows)?;
    if !report.ppe_rows.is_empty() {
        write_csv(&dir.join("ppe.csv"), &hash, &report.ppe_rows)?;
    }
    write_json(&dir.join("comparison.json"), &hash, report)
}
