//! Lettuce growth per tier from intercepted photons and a light-use
//! efficiency table, with threshold harvests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropParams {
    /// Canopy extinction coefficient.
    pub k: f64,
    pub plant_density: f64,
    pub target_fm_g: f64,
    pub tier_area_m2: f64,
    /// Specific leaf area, m² g⁻¹ of dry matter.
    pub sla_m2_g: f64,
    pub lai_cap: f64,
    /// Dry and fresh matter right after transplant, g m⁻².
    pub dm0_g_m2: f64,
    pub fm0_g_m2: f64,
    /// Share of intercepted PAR energy fixed by photosynthesis and so
    /// removed from the air budget; the rest ends up as sensible or latent
    /// heat in the room.
    pub photosynthetic_fraction: f64,
}

impl Default for CropParams {
    fn default() -> Self {
        CropParams {
            k: 0.9,
            plant_density: 25.0,
            target_fm_g: 250.0,
            tier_area_m2: 30.0,
            sla_m2_g: 0.05,
            lai_cap: 6.0,
            dm0_g_m2: 2.5,
            fm0_g_m2: 50.0,
            photosynthetic_fraction: 0.10,
        }
    }
}

impl CropParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("extinction coefficient", self.k),
            ("plant density", self.plant_density),
            ("target fresh mass", self.target_fm_g),
            ("tier area", self.tier_area_m2),
            ("specific leaf area", self.sla_m2_g),
            ("LAI cap", self.lai_cap),
            ("transplant dry matter", self.dm0_g_m2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.photosynthetic_fraction) {
            return Err(Error::config("photosynthetic fraction must lie in [0, 1]"));
        }
        if self.fm0_g_m2 < self.dm0_g_m2 {
            return Err(Error::config("transplant fresh mass below dry mass"));
        }
        if self.fm0_g_m2 >= self.target_fm_g * self.plant_density {
            return Err(Error::config(
                "transplant fresh mass already at harvest size",
            ));
        }
        Ok(())
    }

    pub fn plants_per_tier(&self) -> f64 {
        self.plant_density * self.tier_area_m2
    }

    /// Fresh mass harvested from one full tier, kg.
    pub fn tier_harvest_kg(&self) -> f64 {
        self.plants_per_tier() * self.target_fm_g / 1000.0
    }

    pub fn lai_from_dm(&self, dm: f64) -> f64 {
        (self.sla_m2_g * dm).min(self.lai_cap)
    }

    pub fn interception(&self, lai: f64) -> f64 {
        1.0 - (-self.k * lai).exp()
    }
}

const LETTUCE_DEFAULT: &str = include_str!("../../../data/lue/lettuce_default.csv");

/// Gridded LUE over (T, CO₂, PPFD), g µmol⁻¹ of intercepted photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LueTable {
    pub t_axis: Vec<f64>,
    pub co2_axis: Vec<f64>,
    pub ppfd_axis: Vec<f64>,
    /// Indexed `[t][co2][ppfd]` flattened row-major.
    pub lue_dm: Vec<f64>,
    pub lue_fm: Vec<f64>,
    /// Multiplies both columns on lookup.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LueRow {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "CO2")]
    pub co2: f64,
    #[serde(rename = "PPFD")]
    pub ppfd: f64,
    #[serde(rename = "LUE_dm")]
    pub lue_dm: f64,
    #[serde(rename = "LUE_fm")]
    pub lue_fm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LueValue {
    pub dm: f64,
    pub fm: f64,
    /// Query fell outside the grid and was clamped to its edge.
    pub clamped: bool,
}

fn axis(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Bracketing indices and weight of `x` on `axis`, clamped.
fn locate(axis: &[f64], x: f64) -> (usize, usize, f64, bool) {
    let last = axis.len() - 1;
    if axis.len() == 1 {
        return (0, 0, 0.0, x != axis[0]);
    }
    if x <= axis[0] {
        return (0, 1, 0.0, x < axis[0]);
    }
    if x >= axis[last] {
        return (last - 1, last, 1.0, x > axis[last]);
    }
    let hi = axis.partition_point(|a| *a <= x).min(last);
    let lo = hi - 1;
    (lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo]), false)
}

impl LueTable {
    /// Builds a table from a complete grid of rows in any order.
    pub fn from_rows(rows: &[LueRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("LUE table is empty"));
        }
        let t_axis = axis(rows.iter().map(|r| r.t));
        let co2_axis = axis(rows.iter().map(|r| r.co2));
        let ppfd_axis = axis(rows.iter().map(|r| r.ppfd));
        let n = t_axis.len() * co2_axis.len() * ppfd_axis.len();
        if rows.len() != n {
            return Err(Error::config(format!(
                "LUE table is not a full grid: {} rows for {}×{}×{} nodes",
                rows.len(),
                t_axis.len(),
                co2_axis.len(),
                ppfd_axis.len()
            )));
        }
        let mut dm = vec![f64::NAN; n];
        let mut fm = vec![f64::NAN; n];
        let find = |a: &[f64], x: f64| a.iter().position(|v| *v == x).expect("value on axis");
        for r in rows {
            let idx = (find(&t_axis, r.t) * co2_axis.len() + find(&co2_axis, r.co2))
                * ppfd_axis.len()
                + find(&ppfd_axis, r.ppfd);
            if !dm[idx].is_nan() {
                return Err(Error::config(format!(
                    "duplicate LUE node T={} CO2={} PPFD={}",
                    r.t, r.co2, r.ppfd
                )));
            }
            dm[idx] = r.lue_dm;
            fm[idx] = r.lue_fm;
        }
        let table = LueTable {
            t_axis,
            co2_axis,
            ppfd_axis,
            lue_dm: dm,
            lue_fm: fm,
            scale: 1.0,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ppfd_axis.len() < 2 {
            return Err(Error::config("LUE table needs at least two PPFD levels"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config("LUE calibration scale must be > 0"));
        }
        if self
            .lue_dm
            .iter()
            .chain(&self.lue_fm)
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return Err(Error::config("LUE values must be > 0"));
        }
        let np = self.ppfd_axis.len();
        for block in 0..self.t_axis.len() * self.co2_axis.len() {
            for col in [&self.lue_dm, &self.lue_fm] {
                let s = &col[block * np..(block + 1) * np];
                if s.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::config("LUE must be non-increasing in PPFD"));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        LueTable::parse(file)
            .map_err(|e| Error::config(format!("LUE table {}: {e}", path.display())))
    }

    /// Reads `T,CO2,PPFD,LUE_dm,LUE_fm` rows.
    pub fn parse(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<LueRow>, _>>()
            .map_err(|e| Error::config(e.to_string()))?;
        LueTable::from_rows(&rows)
    }

    /// Built-in lettuce table: LUE falling with PPFD as a rectangular
    /// hyperbola, peaking near 24 °C and saturating in CO₂.
    pub fn lettuce_default() -> Self {
        LueTable::parse(LETTUCE_DEFAULT.as_bytes()).expect("built-in LUE table is valid")
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        LueTable {
            scale,
            ..self.clone()
        }
    }

    fn node(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.co2_axis.len() + j) * self.ppfd_axis.len() + k
    }

    /// Trilinear interpolation, clamped to the grid.
    pub fn lookup(&self, t: f64, co2: f64, ppfd: f64) -> LueValue {
        let (i0, i1, wi, ci) = locate(&self.t_axis, t);
        let (j0, j1, wj, cj) = locate(&self.co2_axis, co2);
        let (k0, k1, wk, ck) = locate(&self.ppfd_axis, ppfd);
        let mut dm = 0.0;
        let mut fm = 0.0;
        for (i, a) in [(i0, 1.0 - wi), (i1, wi)] {
            for (j, b) in [(j0, 1.0 - wj), (j1, wj)] {
                for (k, c) in [(k0, 1.0 - wk), (k1, wk)] {
                    let w = a * b * c;
                    if w == 0.0 {
                        continue;
                    }
                    let n = self.node(i, j, k);
                    dm += w * self.lue_dm[n];
                    fm += w * self.lue_fm[n];
                }
            }
        }
        LueValue {
            dm: dm * self.scale,
            fm: fm * self.scale,
            clamped: ci || cj || ck,
        }
    }
}

/// One cultivation tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierState {
    pub dm: f64,
    pub fm: f64,
    pub lai: f64,
    pub hours_since_transplant: f64,
    /// Hours left before the first transplant (stagger offset).
    pub idle_hours: f64,
    pub harvested_kg: f64,
    pub cycles: u32,
    pub completed_cycle_hours: f64,
}

impl TierState {
    pub fn transplant(params: &CropParams) -> Self {
        TierState {
            dm: params.dm0_g_m2,
            fm: params.fm0_g_m2,
            lai: params.lai_from_dm(params.dm0_g_m2),
            hours_since_transplant: 0.0,
            idle_hours: 0.0,
            harvested_kg: 0.0,
            cycles: 0,
            completed_cycle_hours: 0.0,
        }
    }

    pub fn with_offset_days(params: &CropParams, days: f64) -> Self {
        TierState {
            idle_hours: days.max(0.0) * 24.0,
            ..TierState::transplant(params)
        }
    }

    pub fn fm_per_plant_g(&self, params: &CropParams) -> f64 {
        self.fm / params.plant_density
    }

    pub fn is_growing(&self) -> bool {
        self.idle_hours <= 0.0
    }

    /// Completed cycles plus the elapsed share of the running one, measured
    /// against the mean completed-cycle length.
    pub fn equivalent_cycles(&self, params: &CropParams) -> f64 {
        if self.cycles == 0 {
            let span = (params.target_fm_g * params.plant_density - params.fm0_g_m2).max(1e-9);
            return ((self.fm - params.fm0_g_m2) / span).clamp(0.0, 1.0);
        }
        let mean = self.completed_cycle_hours / self.cycles as f64;
        self.cycles as f64 + (self.hours_since_transplant / mean).min(1.0)
    }
}

/// Advances a tier by `dt_h` hours under canopy PPFD `ppfd`.
pub fn growth_step(
    state: &TierState,
    ppfd: f64,
    dt_h: f64,
    params: &CropParams,
    table: &LueTable,
    t_air: f64,
    co2: f64,
) -> TierState {
    let mut s = *state;
    if !s.is_growing() {
        s.idle_hours -= dt_h;
        return s;
    }
    let lue = table.lookup(t_air, co2, ppfd);
    let photons = ppfd.max(0.0) * params.interception(s.lai) * dt_h * 3600.0;
    s.dm += photons * lue.dm;
    s.fm += photons * lue.fm;
    s.lai = params.lai_from_dm(s.dm);
    s.hours_since_transplant += dt_h;
    s
}

/// Radiant power absorbed by the canopy, W, for PPFD delivered at photon
/// yield `conversion` (µmol J⁻¹).
pub fn plant_heat_sink(ppfd: f64, lai: f64, k: f64, area_m2: f64, conversion: f64) -> f64 {
    ppfd * (1.0 - (-k * lai).exp()) * area_m2 / conversion
}

/// Harvests and replants a tier whose plants reached target size. Returns
/// the new state and kg harvested (0 when not due).
pub fn harvest_if_due(state: &TierState, params: &CropParams) -> (TierState, f64) {
    if !state.is_growing() || state.fm_per_plant_g(params) < params.target_fm_g {
        return (*state, 0.0);
    }
    let kg = params.tier_harvest_kg();
    let next = TierState {
        harvested_kg: state.harvested_kg + kg,
        cycles: state.cycles + 1,
        completed_cycle_hours: state.completed_cycle_hours + state.hours_since_transplant,
        ..TierState::transplant(params)
    };
    (next, kg)
}

/// Water leaving with one tier harvest, kg (fresh minus dry matter).
pub fn embodied_water_kg(state: &TierState, params: &CropParams) -> f64 {
    (state.fm - state.dm).max(0.0) * params.tier_area_m2 / 1000.0
}
