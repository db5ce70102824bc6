use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::climate::{load_climate, ClimateSeries};
use crate::config::{LoadedConfig, ScenarioConfig};
use crate::crop::LueTable;
use crate::error::{Error, Result};
use crate::optics::{load_or_build_table, OpticalEfficiencyTable, TableSource};

use super::calibration::{CalibrationArtifact, CalibrationState};

/// A validated scenario with every referenced input loaded.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub config: ScenarioConfig,
    pub hash: String,
    pub base_dir: PathBuf,
    pub lue: LueTable,
    /// Present for light-pipe scenarios.
    pub optics: Option<Arc<OpticalEfficiencyTable>>,
    pub calibration: CalibrationState,
}

pub fn load_lue_table(config: &ScenarioConfig) -> Result<LueTable> {
    match &config.lue.path {
        Some(p) => LueTable::load(p),
        None => Ok(LueTable::lettuce_default()),
    }
}

/// The configured climate file, or the synthetic year when none is given.
pub fn load_scenario_climate(config: &ScenarioConfig) -> Result<ClimateSeries> {
    match &config.climate.path {
        Some(p) => load_climate(p, &config.climate.mapping),
        None => config.climate.synthetic.generate(&config.site),
    }
}

fn load_optics(config: &ScenarioConfig, base_dir: &Path) -> Result<OpticalEfficiencyTable> {
    let src = &config.optics;
    match src.source {
        TableSource::Imported => {
            let dir = src
                .table_dir
                .as_ref()
                .ok_or_else(|| Error::config("imported optics need `optics.table_dir`"))?;
            OpticalEfficiencyTable::import(dir)
        }
        TableSource::Traced => {
            let cache = src
                .cache_dir
                .clone()
                .unwrap_or_else(|| base_dir.join(".optics-cache"));
            load_or_build_table(&cache, &config.geometry, &src.trace)
        }
    }
}

impl PreparedScenario {
    pub fn from_loaded(loaded: &LoadedConfig) -> Result<Self> {
        Self::new(
            loaded.config.clone(),
            loaded.hash.clone(),
            loaded.base_dir(),
        )
    }

    /// Loads tables and the calibration artifact referenced by `config`.
    pub fn new(config: ScenarioConfig, hash: String, base_dir: &Path) -> Result<Self> {
        config.validate()?;
        let lue = load_lue_table(&config)?;
        let optics = if config.strategy().uses_light_pipes() {
            Some(Arc::new(load_optics(&config, base_dir)?))
        } else {
            None
        };
        let mut prep = PreparedScenario {
            config,
            hash,
            base_dir: base_dir.to_path_buf(),
            lue,
            optics,
            calibration: CalibrationState::Uncalibrated,
        };
        match prep.config.calibration.path.clone() {
            Some(p) if p.exists() => {
                let art = CalibrationArtifact::load(&p)?;
                prep.apply_calibration(&art)?;
            }
            Some(p) if prep.config.calibration.require => {
                return Err(Error::Calibration(format!(
                    "calibration artifact {} not found; run `calibrate` first",
                    p.display()
                )));
            }
            Some(p) => log::warn!(
                "calibration artifact {} missing; running uncalibrated",
                p.display()
            ),
            None if prep.config.calibration.require => {
                return Err(Error::Calibration(
                    "calibration required but no artifact configured".into(),
                ));
            }
            None => {}
        }
        Ok(prep)
    }

    /// Builds a scenario from an in-memory config, hashing it without a base
    /// directory.
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        let hash = config.hash(None);
        Self::new(config, hash, Path::new("."))
    }

    /// Reuses an already loaded optical table.
    pub fn with_optics(mut self, table: Arc<OpticalEfficiencyTable>) -> Self {
        if self.config.strategy().uses_light_pipes() {
            self.optics = Some(table);
        }
        self
    }

    pub fn apply_calibration(&mut self, art: &CalibrationArtifact) -> Result<()> {
        let base = self.lue.with_scale(1.0);
        if art.lue_hash != super::calibration::lue_hash(&base) {
            return Err(Error::Calibration(
                "artifact was fitted to a different LUE table".into(),
            ));
        }
        if art.crop_hash != super::calibration::crop_hash(&self.config) {
            return Err(Error::Calibration(
                "artifact was fitted with different crop or setpoint parameters".into(),
            ));
        }
        self.lue = base.with_scale(art.lue_scale);
        self.calibration = CalibrationState::Calibrated {
            lue_scale: art.lue_scale,
            artifact_hash: art.hash(),
            climate_hash: art.climate_hash.clone(),
        };
        Ok(())
    }
}
