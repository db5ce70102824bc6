//! Scenario configuration: one TOML file per scenario plus shared includes.
//!
//! A file may list `include = ["common.toml"]`; included files are merged
//! first (depth-first, in order) and the including file's keys win. Relative
//! paths are resolved against the directory of the file that wrote them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::climate::synthetic::SyntheticClimate;
use crate::climate::{ColumnMapping, SiteConfig};
use crate::crop::CropParams;
use crate::economics::{CostTable, LightCostReference, SweepGrid};
use crate::error::{Error, Result};
use crate::lighting::{ControlConfig, DriverCurve, EcFilm, LedArray, Strategy};
use crate::optics::{Footprint, LpGeometry, TableSource, TraceConfig};
use crate::thermal::{
    AirProperties, ChamberGeometry, ConvectionArea, CopModel, LatentConfig, Setpoints, ThermalMode,
};

const MAX_INCLUDE_DEPTH: usize = 8;

/// Keys holding file or directory paths, as `section.key`.
const PATH_KEYS: [(&str, &str); 5] = [
    ("climate", "path"),
    ("lue", "path"),
    ("optics", "table_dir"),
    ("optics", "cache_dir"),
    ("calibration", "path"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: Strategy,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    20_240_601
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            id: Strategy::Bench,
            label: None,
            seed: default_seed(),
        }
    }
}

/// Hourly climate from a file, or the built-in synthetic year when no path
/// is given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClimateSource {
    pub path: Option<PathBuf>,
    pub mapping: ColumnMapping,
    pub synthetic: SyntheticClimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fleet {
    pub n_pipes: usize,
    pub footprint: Footprint,
}

impl Default for Fleet {
    fn default() -> Self {
        Fleet {
            n_pipes: 750,
            footprint: Footprint::Array,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenhouseConfig {
    pub glazing_area_m2: f64,
    pub tau_glass: f64,
    pub u_glass: f64,
    /// Share of transmitted light landing on the daylit tier.
    pub crop_share: f64,
}

impl Default for GreenhouseConfig {
    fn default() -> Self {
        GreenhouseConfig {
            glazing_area_m2: 49.0,
            tau_glass: 0.82,
            u_glass: 3.75,
            crop_share: 0.61,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSection {
    pub mode: ThermalMode,
    pub convection_area: ConvectionArea,
}

impl Default for ThermalSection {
    fn default() -> Self {
        ThermalSection {
            mode: ThermalMode::QuasiSteady,
            convection_area: ConvectionArea::Aperture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TierLayout {
    pub count: usize,
    /// Days before first transplant, per tier.
    pub stagger_days: Vec<f64>,
}

impl Default for TierLayout {
    fn default() -> Self {
        TierLayout {
            count: 3,
            stagger_days: vec![0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LueSource {
    /// Delimited table; the built-in lettuce table is used when absent.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsSource {
    pub source: TableSource,
    /// Directory holding `direct.csv`, `diffuse.csv` and `meta.json`.
    pub table_dir: Option<PathBuf>,
    /// Where traced tables are cached.
    pub cache_dir: Option<PathBuf>,
    pub trace: TraceConfig,
}

impl Default for OpticsSource {
    fn default() -> Self {
        OpticsSource {
            source: TableSource::Traced,
            table_dir: None,
            cache_dir: None,
            trace: TraceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationRef {
    pub path: Option<PathBuf>,
    /// Fail instead of running uncalibrated when the artifact is missing.
    pub require: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub hourly_trace: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { hourly_trace: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub site: SiteConfig,
    pub climate: ClimateSource,
    pub geometry: LpGeometry,
    pub fleet: Fleet,
    /// All three tiers; tier 3 gets `area_m2 / tiers.count`.
    pub leds: LedArray,
    pub driver: DriverCurve,
    pub control: ControlConfig,
    pub ec_film: EcFilm,
    pub greenhouse: GreenhouseConfig,
    pub chamber: ChamberGeometry,
    pub setpoints: Setpoints,
    pub air: AirProperties,
    pub cop: CopModel,
    pub latent: LatentConfig,
    pub thermal: ThermalSection,
    pub crop: CropParams,
    pub tiers: TierLayout,
    pub lue: LueSource,
    pub optics: OpticsSource,
    pub costs: CostTable,
    pub light_cost: LightCostReference,
    pub sweep: SweepGrid,
    pub calibration: CalibrationRef,
    pub output: OutputOptions,
}

impl ScenarioConfig {
    pub fn for_strategy(id: Strategy) -> Self {
        ScenarioConfig {
            scenario: ScenarioSection {
                id,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.scenario.id
    }

    pub fn label(&self) -> String {
        self.scenario
            .label
            .clone()
            .unwrap_or_else(|| self.scenario.id.name().to_string())
    }

    pub fn tier_area(&self) -> f64 {
        self.crop.tier_area_m2
    }

    pub fn validate(&self) -> Result<()> {
        self.site.validate()?;
        self.geometry.validate()?;
        self.leds.validate()?;
        self.driver.validate()?;
        self.ec_film.validate()?;
        self.chamber.validate()?;
        self.air.validate()?;
        self.cop.validate()?;
        self.latent.validate()?;
        self.crop.validate()?;
        self.costs.validate()?;
        self.optics.trace.validate()?;
        if self.tiers.count < 1 {
            return Err(Error::config("at least one tier is required"));
        }
        if self.tiers.stagger_days.len() > self.tiers.count {
            return Err(Error::config("more stagger offsets than tiers"));
        }
        let tier_total = self.crop.tier_area_m2 * self.tiers.count as f64;
        if (tier_total - self.leds.area_m2).abs() > 1e-6 * tier_total {
            return Err(Error::config(format!(
                "LED area {} m² differs from total tier area {} m²",
                self.leds.area_m2, tier_total
            )));
        }
        let gh = &self.greenhouse;
        if !(gh.tau_glass > 0.0 && gh.tau_glass <= 1.0)
            || !(0.0..=1.0).contains(&gh.crop_share)
            || !(gh.u_glass > 0.0)
            || gh.glazing_area_m2 < 0.0
        {
            return Err(Error::config("greenhouse glazing parameters out of range"));
        }
        if self.strategy().uses_light_pipes() && self.fleet.n_pipes == 0 {
            return Err(Error::config("light-pipe scenario with zero pipes"));
        }
        if self.optics.source == TableSource::Imported
            && self.strategy().uses_light_pipes()
            && self.optics.table_dir.is_none()
        {
            return Err(Error::config("imported optics need `optics.table_dir`"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, with paths written relative to
    /// `base` so the hash survives moving the repository.
    pub fn hash(&self, base: Option<&Path>) -> String {
        let mut c = self.clone();
        if let Some(base) = base {
            let rel = |p: &mut Option<PathBuf>| {
                if let Some(x) = p.as_mut() {
                    *x = relative_to(x, base);
                }
            };
            rel(&mut c.climate.path);
            rel(&mut c.lue.path);
            rel(&mut c.optics.table_dir);
            rel(&mut c.optics.cache_dir);
            rel(&mut c.calibration.path);
        }
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// `path` expressed relative to `base` (both absolute and normalized).
fn relative_to(path: &Path, base: &Path) -> PathBuf {
    let p: Vec<_> = path.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = p.iter().zip(&b).take_while(|(x, y)| x == y).count();
    if common == 0 {
        return path.to_path_buf();
    }
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &p[common..] {
        out.push(c);
    }
    out
}

/// A parsed configuration together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub path: PathBuf,
    pub hash: String,
}

impl LoadedConfig {
    pub fn base_dir(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }
}

fn read_table(path: &Path, depth: usize) -> Result<toml::Table> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(Error::config(format!(
            "include nesting deeper than {MAX_INCLUDE_DEPTH} at {}",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    absolutize_paths(&mut table, dir);

    let includes = match table.remove("include") {
        None => Vec::new(),
        Some(toml::Value::Array(a)) => a
            .into_iter()
            .map(|v| match v {
                toml::Value::String(s) => Ok(dir.join(s)),
                _ => Err(Error::config("`include` entries must be strings")),
            })
            .collect::<Result<Vec<_>>>()?,
        Some(toml::Value::String(s)) => vec![dir.join(s)],
        Some(_) => return Err(Error::config("`include` must be a string or array")),
    };
    let mut merged = toml::Table::new();
    for inc in includes {
        merge(&mut merged, read_table(&inc, depth + 1)?);
    }
    merge(&mut merged, table);
    Ok(merged)
}

fn absolutize_paths(table: &mut toml::Table, dir: &Path) {
    for (section, key) in PATH_KEYS {
        if let Some(toml::Value::Table(s)) = table.get_mut(section) {
            if let Some(toml::Value::String(p)) = s.get_mut(key) {
                let path = Path::new(p.as_str());
                if path.is_relative() {
                    *p = normalize(&dir.join(path)).to_string_lossy().into_owned();
                }
            }
        }
    }
}

/// Lexically removes `.` and `..` components.
fn normalize(path: &Path) -> PathBuf {
    use std::path::Component;
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

fn merge(into: &mut toml::Table, from: toml::Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(a)), toml::Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

/// Reads, merges and validates a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let abs = if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map_err(|e| Error::io(path, e))?
            .join(path)
    };
    let abs = normalize(&abs);
    let table = read_table(&abs, 0)?;
    let config: ScenarioConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::config(format!("{}: {e}", abs.display())))?;
    config.validate()?;
    let base = abs.parent().unwrap_or(Path::new("."));
    let hash = config.hash(Some(base));
    Ok(LoadedConfig {
        config,
        path: abs,
        hash,
    })
}

/// Parses a config given as text, resolving relative paths against `dir`.
pub fn parse_config(text: &str, dir: &Path) -> Result<ScenarioConfig> {
    let mut table: toml::Table = text.parse().map_err(|e| Error::config(format!("{e}")))?;
    if table.contains_key("include") {
        return Err(Error::config("includes need a file-backed config"));
    }
    absolutize_paths(&mut table, dir);
    let config: ScenarioConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::config(format!("{e}")))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn defaults_mirror_the_farm() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.fleet.n_pipes, 750);
        assert_eq!(c.setpoints.t_air_c, 24.0);
        assert_eq!(c.leds.area_m2, 90.0);
        assert_eq!(c.crop.tier_area_m2, 30.0);
    }

    #[test]
    fn includes_merge_and_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("shared")).unwrap();
        write(
            &dir.path().join("shared"),
            "common.toml",
            "[leds]\nppe = 3.0\n[lue]\npath = \"../lue.csv\"\n[costs]\nelectricity_price_per_mwh = 150.0\n",
        );
        let p = write(
            dir.path(),
            "s.toml",
            "include = [\"shared/common.toml\"]\n[scenario]\nid = \"LP_Dim\"\n[costs]\nelectricity_price_per_mwh = 200.0\n",
        );
        let l = load_config(&p).unwrap();
        assert_eq!(l.config.strategy(), Strategy::LpDim);
        assert_eq!(l.config.leds.ppe, 3.0);
        assert_eq!(l.config.costs.electricity_price_per_mwh, 200.0);
        assert_eq!(l.config.costs.lettuce_price_per_kg, 7.82);
        assert_eq!(
            l.config.lue.path.as_deref(),
            Some(dir.path().join("lue.csv").as_path())
        );
    }

    #[test]
    fn rejects_unknown_keys_and_strategies() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.toml", "[scenario]\nid = \"LP_Max\"\n");
        assert!(matches!(load_config(&p), Err(Error::Config(_))));
        let p = write(dir.path(), "b.toml", "[leds]\nwatts = 3\n");
        assert!(matches!(load_config(&p), Err(Error::Config(_))));
        let p = write(dir.path(), "c.toml", "[leds]\nppe = -1.0\n");
        assert!(matches!(load_config(&p), Err(Error::Config(_))));
    }

    #[test]
    fn include_cycles_are_bounded() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "loop.toml", "include = [\"loop.toml\"]\n");
        assert!(load_config(&p).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(None), b.hash(None));
        b.leds.ppe = 3.0;
        assert_ne!(a.hash(None), b.hash(None));
        let base = Path::new("/x/configs");
        let mut c = a.clone();
        c.lue.path = Some(PathBuf::from("/x/configs/lue.csv"));
        let mut d = a.clone();
        d.lue.path = Some(PathBuf::from("lue.csv"));
        assert_eq!(c.hash(Some(base)), d.hash(None));
    }
}
