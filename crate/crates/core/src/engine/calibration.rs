use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::climate::ClimateSeries;
use crate::config::ScenarioConfig;
use crate::crop::LueTable;
use crate::error::{Error, Result};
use crate::lighting::Strategy;

use super::{run_scenario, PreparedScenario, TOOL_VERSION};

/// Annual benchmark yield the LUE scale is fitted to, kg.
pub const BENCH_TARGET_KG: f64 = 9221.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CalibrationState {
    Uncalibrated,
    Calibrated {
        lue_scale: f64,
        artifact_hash: String,
        climate_hash: String,
    },
}

/// Result of fitting the single LUE factor on the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationArtifact {
    pub lue_scale: f64,
    pub target_kg: f64,
    pub achieved_kg: f64,
    pub iterations: usize,
    pub climate_hash: String,
    pub lue_hash: String,
    pub crop_hash: String,
    pub tool_version: String,
}

fn sha_json<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("serializable");
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn lue_hash(table: &LueTable) -> String {
    sha_json(&table.with_scale(1.0))
}

/// Hash of every input besides the LUE table that moves crop yield.
pub(crate) fn crop_hash(cfg: &ScenarioConfig) -> String {
    let mut leds = cfg.leds;
    leds.ppe = 0.0;
    sha_json(&(&cfg.crop, &cfg.setpoints, &cfg.tiers, leds))
}

impl CalibrationArtifact {
    pub fn hash(&self) -> String {
        sha_json(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let text = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn bench_yield(prep: &PreparedScenario, climate: &ClimateSeries, scale: f64) -> Result<f64> {
    let mut p = prep.clone();
    p.lue = prep.lue.with_scale(scale);
    p.config.output.hourly_trace = false;
    Ok(run_scenario(&p, climate)?.yields.normalized_kg)
}

/// Fits the LUE scale so the benchmark's cycle-normalized yield hits
/// `target_kg`. Yield rises monotonically with the scale, so bisection on
/// the log of the scale converges.
pub fn calibrate(
    bench: &PreparedScenario,
    climate: &ClimateSeries,
    target_kg: f64,
) -> Result<CalibrationArtifact> {
    if bench.config.strategy() != Strategy::Bench {
        return Err(Error::Calibration(
            "calibration runs on the Bench scenario".into(),
        ));
    }
    if !(target_kg > 0.0) {
        return Err(Error::Calibration("target yield must be positive".into()));
    }
    let mut prep = bench.clone();
    prep.lue = bench.lue.with_scale(1.0);
    prep.calibration = CalibrationState::Uncalibrated;

    let (mut lo, mut hi) = (0.05_f64.ln(), 20.0_f64.ln());
    let y_lo = bench_yield(&prep, climate, lo.exp())?;
    let y_hi = bench_yield(&prep, climate, hi.exp())?;
    if !(y_lo <= target_kg && target_kg <= y_hi) {
        return Err(Error::Calibration(format!(
            "target {target_kg} kg outside reachable range [{y_lo:.0}, {y_hi:.0}] kg"
        )));
    }
    let mut iterations = 0;
    let mut achieved = f64::NAN;
    let mut scale = 1.0;
    while iterations < 60 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        scale = mid.exp();
        achieved = bench_yield(&prep, climate, scale)?;
        if (achieved - target_kg).abs() / target_kg < 1e-4 {
            break;
        }
        if achieved < target_kg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CalibrationArtifact {
        lue_scale: scale,
        target_kg,
        achieved_kg: achieved,
        iterations,
        climate_hash: climate.content_hash(),
        lue_hash: lue_hash(&prep.lue),
        crop_hash: crop_hash(&prep.config),
        tool_version: TOOL_VERSION.to_string(),
    })
}
