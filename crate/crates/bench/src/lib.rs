//! Fixtures shared by the benchmarks: the shipped scenario configs and their
//! climate year.

use std::path::{Path, PathBuf};

use lpfarm::engine::load_scenario_climate;
use lpfarm::{load_config, ClimateSeries, PreparedScenario};

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Loads `configs/<name>.toml` with its optics table and calibration.
pub fn shipped(name: &str) -> PreparedScenario {
    let path = configs_dir().join(format!("{name}.toml"));
    let loaded = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    PreparedScenario::from_loaded(&loaded).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn climate_for(prep: &PreparedScenario) -> ClimateSeries {
    load_scenario_climate(&prep.config).expect("shipped climate loads")
}
