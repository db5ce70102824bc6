//! Deterministic clear-sky surrogate year for hot-desert sites.
//!
//! Used when no measured typical-year file is available. Beam irradiance
//! follows Beer-Lambert attenuation with a seasonal aerosol depth (hazier,
//! dustier summers), diffuse irradiance scales with the extraterrestrial
//! horizontal flux and the same depth, and temperature is an annual plus a
//! diurnal cosine.

use std::f64::consts::PI;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{solar_position, ClimateRecord, ClimateSeries, SiteConfig, HOURS_PER_YEAR};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticClimate {
    pub year: i32,
    pub solar_constant: f64,
    pub t_mean: f64,
    pub t_annual_amplitude: f64,
    /// Day of year of the coldest daily mean.
    pub coldest_day: f64,
    pub t_diurnal_amplitude: f64,
    /// Clock hour of the daily maximum.
    pub warmest_hour: f64,
    pub depth_winter: f64,
    pub depth_summer: f64,
    /// Day of year of the haziest sky.
    pub haziest_day: f64,
    pub diffuse_base: f64,
    pub diffuse_per_depth: f64,
}

impl Default for SyntheticClimate {
    fn default() -> Self {
        SyntheticClimate {
            year: 2021,
            solar_constant: 1361.0,
            t_mean: 28.0,
            t_annual_amplitude: 7.5,
            coldest_day: 20.0,
            t_diurnal_amplitude: 5.0,
            warmest_hour: 15.0,
            depth_winter: 0.40,
            depth_summer: 0.80,
            haziest_day: 200.0,
            diffuse_base: 0.06,
            diffuse_per_depth: 0.30,
        }
    }
}

impl SyntheticClimate {
    fn depth(&self, n: f64) -> f64 {
        let mid = 0.5 * (self.depth_winter + self.depth_summer);
        let amp = 0.5 * (self.depth_summer - self.depth_winter);
        mid + amp * (2.0 * PI * (n - self.haziest_day) / 365.0).cos()
    }

    fn temperature(&self, n: f64, hour: f64) -> f64 {
        self.t_mean - self.t_annual_amplitude * (2.0 * PI * (n - self.coldest_day) / 365.0).cos()
            + self.t_diurnal_amplitude * (2.0 * PI * (hour - self.warmest_hour) / 24.0).cos()
    }

    /// Irradiance `(DNI, DHI)` for the mid-point of an hour.
    fn irradiance(&self, site: &SiteConfig, n: u32, hour: f64) -> (f64, f64) {
        let pos = solar_position(site, n, hour + 0.5);
        if pos.altitude_deg <= 0.0 {
            return (0.0, 0.0);
        }
        let e0 = self.solar_constant * (1.0 + 0.033 * (2.0 * PI * n as f64 / 365.0).cos());
        let alt = pos.altitude_deg;
        // Kasten-Young relative air mass.
        let m = 1.0 / (alt.to_radians().sin() + 0.50572 * (alt + 6.07995).powf(-1.6364));
        let tau = self.depth(n as f64);
        let dni = e0 * (-tau * m).exp();
        let dhi = e0 * alt.to_radians().sin() * (self.diffuse_base + self.diffuse_per_depth * tau);
        (dni, dhi)
    }

    pub fn generate(&self, site: &SiteConfig) -> Result<ClimateSeries> {
        let start = NaiveDate::from_ymd_opt(self.year, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .ok_or_else(|| crate::error::Error::config("invalid synthetic year"))?;
        let records = (0..HOURS_PER_YEAR)
            .map(|i| {
                let n = (i / 24 + 1) as u32;
                let hour = (i % 24) as f64;
                let (dni, dhi) = self.irradiance(site, n, hour);
                ClimateRecord {
                    timestamp: start + chrono::Duration::hours(i as i64),
                    t_ext: round3(self.temperature(n as f64, hour + 0.5)),
                    dni: round3(dni),
                    dhi: round3(dhi),
                }
            })
            .collect();
        ClimateSeries::from_records(records, 0.0)
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Writes a series in the default column layout.
pub fn write_climate_csv(series: &ClimateSeries, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::error::Error::Domain(format!("csv write: {e}"));
    w.write_record(["time", "T2m", "Gb(n)", "Gd(h)"])
        .map_err(io)?;
    for r in series.records() {
        w.write_record([
            r.timestamp.format("%Y-%m-%dT%H:%M").to_string(),
            r.t_ext.to_string(),
            r.dni.to_string(),
            r.dhi.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| crate::error::Error::Domain(format!("csv write: {e}")))?;
    Ok(())
}
