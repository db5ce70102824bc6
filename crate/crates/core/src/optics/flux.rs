use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Irradiance on the canopy plane beneath one pipe, centred on its axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxMap {
    pub pitch_m: f64,
    pub half_extent_m: f64,
    pub nx: usize,
    pub ny: usize,
    /// Power entering through the aperture that the map is scaled to, W.
    pub incident_power_w: f64,
    /// Row-major (y outer), W m⁻².
    pub cells: Vec<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    pitch_m: f64,
    extent_m: [f64; 2],
    origin_m: [f64; 2],
    nx: usize,
    ny: usize,
    incident_power_w: f64,
    units: &'a str,
    #[serde(flatten)]
    extra: &'a serde_json::Map<String, serde_json::Value>,
}

impl FluxMap {
    pub fn new(pitch_m: f64, half_extent_m: f64) -> FluxMap {
        let n = (2.0 * half_extent_m / pitch_m).round() as usize;
        FluxMap {
            pitch_m,
            half_extent_m,
            nx: n,
            ny: n,
            incident_power_w: 0.0,
            cells: vec![0.0; n * n],
        }
    }

    pub fn cell_index(&self, x: f64, y: f64) -> Option<usize> {
        let i = ((x + self.half_extent_m) / self.pitch_m).floor();
        let j = ((y + self.half_extent_m) / self.pitch_m).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some(j as usize * self.nx + i as usize)
    }

    /// Converts per-cell ray weights into irradiance.
    pub(crate) fn fill(&mut self, weights: &[f64], total_weight: f64, incident_power_w: f64) {
        let cell_area = self.pitch_m * self.pitch_m;
        self.incident_power_w = incident_power_w;
        for (c, w) in self.cells.iter_mut().zip(weights) {
            *c = w / total_weight * incident_power_w / cell_area;
        }
    }

    pub fn cell_centre(&self, i: usize, j: usize) -> (f64, f64) {
        (
            -self.half_extent_m + (i as f64 + 0.5) * self.pitch_m,
            -self.half_extent_m + (j as f64 + 0.5) * self.pitch_m,
        )
    }

    /// Power landing on the centred `width × depth` rectangle, W.
    pub fn integrate(&self, width_m: f64, depth_m: f64) -> f64 {
        let mut total = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.cell_centre(i, j);
                if x.abs() <= width_m / 2.0 && y.abs() <= depth_m / 2.0 {
                    total += self.cells[j * self.nx + i];
                }
            }
        }
        total * self.pitch_m * self.pitch_m
    }

    /// Writes `<stem>.csv` (one row per y, one column per x) and
    /// `<stem>.json` with grid metadata plus `extra` fields.
    pub fn export(
        &self,
        dir: &Path,
        stem: &str,
        extra: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<()> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let mut s = String::new();
        for j in 0..self.ny {
            let row: Vec<String> = self.cells[j * self.nx..(j + 1) * self.nx]
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        f.write_all(s.as_bytes())
            .map_err(|e| Error::io(&csv_path, e))?;

        let json_path = dir.join(format!("{stem}.json"));
        let side = Sidecar {
            pitch_m: self.pitch_m,
            extent_m: [2.0 * self.half_extent_m, 2.0 * self.half_extent_m],
            origin_m: [-self.half_extent_m, -self.half_extent_m],
            nx: self.nx,
            ny: self.ny,
            incident_power_w: self.incident_power_w,
            units: "W m-2",
            extra,
        };
        let body = serde_json::to_string_pretty(&side).expect("sidecar serializes");
        std::fs::write(&json_path, body).map_err(|e| Error::io(&json_path, e))
    }
}
