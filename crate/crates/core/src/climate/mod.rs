//! Site definition, hourly climate series and solar geometry.
//!
//! Solar position follows the Cooper declination / equation-of-time chain:
//! declination from the day of year, a local-solar-time correction, the hour
//! angle, then altitude and azimuth. Azimuth is reported clockwise from North
//! over the full compass.

mod ingest;
pub mod synthetic;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

pub use ingest::{load_climate, parse_climate, ColumnMapping};

use crate::error::{Error, Result};

/// Number of hourly records in a (non-leap) simulation year.
pub const HOURS_PER_YEAR: usize = 8760;

/// Amplitude of the declination curve, degrees.
pub const MAX_DECLINATION_DEG: f64 = 23.45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteConfig {
    pub latitude_deg: f64,
    /// East-positive.
    pub longitude_deg: f64,
    /// Standard meridian of the local clock, normally `15 * utc_offset`.
    pub reference_longitude_deg: f64,
    pub utc_offset_hours: f64,
}

impl SiteConfig {
    pub fn new(latitude_deg: f64, longitude_deg: f64, utc_offset_hours: f64) -> Result<Self> {
        let site = SiteConfig {
            latitude_deg,
            longitude_deg,
            reference_longitude_deg: 15.0 * utc_offset_hours,
            utc_offset_hours,
        };
        site.validate()?;
        Ok(site)
    }

    pub fn dubai() -> Self {
        SiteConfig {
            latitude_deg: 25.0,
            longitude_deg: 55.0,
            reference_longitude_deg: 60.0,
            utc_offset_hours: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::config(format!(
                "latitude {} outside [-90, 90]",
                self.latitude_deg
            )));
        }
        for (name, v) in [
            ("longitude", self.longitude_deg),
            ("reference longitude", self.reference_longitude_deg),
        ] {
            if !(-180.0..=180.0).contains(&v) {
                return Err(Error::config(format!("{name} {v} outside [-180, 180]")));
            }
        }
        Ok(())
    }
}

impl Default for SiteConfig {
    fn default() -> Self {
        Self::dubai()
    }
}

/// One hour of outdoor conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateRecord {
    pub timestamp: NaiveDateTime,
    /// Outdoor air temperature, °C.
    pub t_ext: f64,
    /// Direct normal irradiance, W m⁻².
    pub dni: f64,
    /// Diffuse horizontal irradiance, W m⁻².
    pub dhi: f64,
}

impl ClimateRecord {
    /// Day of year in the local clock after applying `shift_hours`, counted
    /// on a non-leap calendar so March 1 is always day 60.
    pub fn day_of_year(&self, shift_hours: f64) -> u32 {
        let local = self.local(shift_hours);
        let leap_shift = u32::from(local.date().leap_year() && local.month() > 2);
        (local.ordinal() - leap_shift).min(365)
    }

    /// Local clock hour of the record start (integer hour, minutes dropped).
    pub fn clock_hour(&self, shift_hours: f64) -> u32 {
        self.local(shift_hours).hour()
    }

    fn local(&self, shift_hours: f64) -> NaiveDateTime {
        let secs = (shift_hours * 3600.0).round() as i64;
        self.timestamp + chrono::Duration::seconds(secs)
    }
}

/// A validated year of hourly records.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimateSeries {
    records: Vec<ClimateRecord>,
    /// Hours added to file timestamps to obtain local clock time.
    pub time_shift_hours: f64,
}

impl ClimateSeries {
    /// Builds a series from records that have already been checked.
    pub fn from_records(records: Vec<ClimateRecord>, time_shift_hours: f64) -> Result<Self> {
        if records.len() != HOURS_PER_YEAR {
            return Err(crate::error::ClimateError::IncompleteYear(records.len()).into());
        }
        Ok(ClimateSeries {
            records,
            time_shift_hours,
        })
    }

    pub fn records(&self) -> &[ClimateRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Returns a copy with transformed records, e.g. for zero-irradiance
    /// regression runs.
    pub fn map_records(&self, f: impl Fn(&ClimateRecord) -> ClimateRecord) -> ClimateSeries {
        ClimateSeries {
            records: self.records.iter().map(f).collect(),
            time_shift_hours: self.time_shift_hours,
        }
    }

    /// Stable content hash (hex SHA-256) used to tie calibrations and outputs
    /// to the exact input year.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for r in &self.records {
            h.update(r.timestamp.and_utc().timestamp().to_le_bytes());
            h.update(r.t_ext.to_le_bytes());
            h.update(r.dni.to_le_bytes());
            h.update(r.dhi.to_le_bytes());
        }
        h.update(self.time_shift_hours.to_le_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolarPosition {
    pub day_of_year: u32,
    pub declination_deg: f64,
    /// Auxiliary angle of the equation of time, degrees.
    pub aux_angle_deg: f64,
    pub equation_of_time_min: f64,
    pub solar_time_h: f64,
    pub hour_angle_deg: f64,
    pub altitude_deg: f64,
    /// Clockwise from North, in [0, 360).
    pub azimuth_deg: f64,
}

impl SolarPosition {
    pub fn above_horizon(&self) -> bool {
        self.altitude_deg > 0.0
    }
}

pub fn declination_deg(day_of_year: u32) -> f64 {
    let n = day_of_year as f64;
    MAX_DECLINATION_DEG * (360.0 * (284.0 + n) / 365.0).to_radians().sin()
}

/// Returns `(B, EoT)` with `B` in degrees and `EoT` in minutes.
pub fn equation_of_time(day_of_year: u32) -> (f64, f64) {
    let b = (day_of_year as f64 - 81.0) * 360.0 / 364.0;
    let br = b.to_radians();
    let eot = 9.87 * (2.0 * br).sin() - 7.53 * br.cos() - 1.5 * br.sin();
    (b, eot)
}

pub fn solar_position(site: &SiteConfig, day_of_year: u32, clock_hour: f64) -> SolarPosition {
    let n = day_of_year.clamp(1, 365);
    let delta = declination_deg(n);
    let (b, eot) = equation_of_time(n);
    // East-positive longitudes: a site west of its standard meridian sees
    // solar noon after 12:00 clock time.
    let h_sol =
        clock_hour + (eot + 4.0 * (site.longitude_deg - site.reference_longitude_deg)) / 60.0;
    let omega = 15.0 * (h_sol - 12.0);

    let (sd, cd) = delta.to_radians().sin_cos();
    let (sp, cp) = site.latitude_deg.to_radians().sin_cos();
    let (sw, cw) = omega.to_radians().sin_cos();

    let sin_alt = (sd * sp + cd * cp * cw).clamp(-1.0, 1.0);
    let alt = sin_alt.asin();
    let cos_alt = alt.cos();

    // South-referenced, west-positive azimuth from the arcsine form, then the
    // quadrant is fixed by the sign of the north-south component.
    let mut az_south = if cos_alt > 1e-12 {
        (cd * sw / cos_alt).clamp(-1.0, 1.0).asin().to_degrees()
    } else {
        0.0
    };
    if sin_alt * sp - sd < 0.0 {
        let sign = if sw < 0.0 { -1.0 } else { 1.0 };
        az_south = sign * 180.0 - az_south;
    }
    let azimuth = (180.0 + az_south).rem_euclid(360.0);

    SolarPosition {
        day_of_year: n,
        declination_deg: delta,
        aux_angle_deg: b,
        equation_of_time_min: eot,
        solar_time_h: h_sol,
        hour_angle_deg: omega,
        altitude_deg: alt.to_degrees(),
        azimuth_deg: azimuth,
    }
}

/// Cosine of the incidence angle on a horizontal aperture, zero below the
/// horizon.
pub fn incidence_cosine(altitude_deg: f64) -> f64 {
    altitude_deg.to_radians().sin().max(0.0)
}

/// One row of a sun-path table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SunPathRow {
    pub clock_hour: f64,
    pub position: SolarPosition,
    pub incidence_cosine: f64,
}

/// Solar positions for every day and every `step_hours` of clock time.
pub fn sun_path_table(site: &SiteConfig, step_hours: f64) -> Vec<SunPathRow> {
    let steps = (24.0 / step_hours).round() as usize;
    let mut rows = Vec::with_capacity(365 * steps);
    for n in 1..=365 {
        for k in 0..steps {
            let h = k as f64 * step_hours;
            let position = solar_position(site, n, h);
            rows.push(SunPathRow {
                clock_hour: h,
                incidence_cosine: incidence_cosine(position.altitude_deg),
                position,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn equinox_declination_and_eot() {
        assert_abs_diff_eq!(declination_deg(81), 0.0, epsilon = 1e-9);
        let (b, eot) = equation_of_time(81);
        assert_eq!(b, 0.0);
        assert_abs_diff_eq!(eot, -7.53, epsilon = 1e-12);
    }

    #[test]
    fn solstice_declination() {
        assert_abs_diff_eq!(declination_deg(172), 23.45, epsilon = 0.01);
    }

    #[test]
    fn dubai_equinox_noon_altitude() {
        // δ = 0, ω = 0 reduces the altitude to asin(cos φ) = 90° − φ.
        let site = SiteConfig::dubai();
        let pos = solar_position(&site, 81, 12.0);
        let noon = 12.0 - (pos.equation_of_time_min - 20.0) / 60.0;
        let at_noon = solar_position(&site, 81, noon);
        assert_abs_diff_eq!(at_noon.hour_angle_deg, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(at_noon.altitude_deg, 65.0, epsilon = 1e-9);
    }

    #[test]
    fn dubai_solar_noon_is_after_clock_noon() {
        // 55°E on a UTC+4 clock: the sun crosses the meridian about 20 min
        // after 12:00 once EoT is near zero (mid-April).
        let site = SiteConfig::dubai();
        let n = 105;
        let (_, eot) = equation_of_time(n);
        assert!(eot.abs() < 1.0);
        let best = (0..=1440)
            .map(|m| 11.0 + m as f64 / 720.0)
            .max_by(|a, b| {
                let pa = solar_position(&site, n, *a).altitude_deg;
                let pb = solar_position(&site, n, *b).altitude_deg;
                pa.partial_cmp(&pb).unwrap()
            })
            .unwrap();
        assert!((best - 12.333).abs() < 0.05, "solar noon at {best}");
    }

    #[test]
    fn azimuth_morning_east_afternoon_west() {
        let site = SiteConfig::dubai();
        let am = solar_position(&site, 172, 8.0);
        let pm = solar_position(&site, 172, 17.0);
        assert!(am.azimuth_deg > 0.0 && am.azimuth_deg < 180.0);
        assert!(pm.azimuth_deg > 180.0 && pm.azimuth_deg < 360.0);
        // Summer mornings at 25°N the sun rises north of east.
        let early = solar_position(&site, 172, 6.5);
        assert!(early.azimuth_deg < 90.0, "{}", early.azimuth_deg);
    }

    #[test]
    fn incidence_examples() {
        assert_abs_diff_eq!(incidence_cosine(90.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(incidence_cosine(30.0), 0.5, epsilon = 1e-15);
        assert_eq!(incidence_cosine(-5.0), 0.0);
    }

    #[test]
    fn site_validation() {
        assert!(SiteConfig::new(91.0, 0.0, 0.0).is_err());
        assert!(SiteConfig::new(10.0, 181.0, 0.0).is_err());
        let s = SiteConfig::new(25.0, 55.0, 4.0).unwrap();
        assert_eq!(s.reference_longitude_deg, 60.0);
    }

    /// Azimuth from the two-argument arctangent of the east-west and
    /// north-south components; independent of the arcsine + sign test.
    fn azimuth_atan2(lat: f64, decl: f64, omega: f64) -> f64 {
        let (sd, cd) = decl.to_radians().sin_cos();
        let (sp, cp) = lat.to_radians().sin_cos();
        let (sw, cw) = omega.to_radians().sin_cos();
        let sin_alt = sd * sp + cd * cp * cw;
        let east_west = cd * sw * cp;
        let north_south = sin_alt * sp - sd;
        (180.0 + east_west.atan2(north_south).to_degrees()).rem_euclid(360.0)
    }

    proptest! {
        #[test]
        fn declination_bounded_and_periodic(n in 1u32..=365) {
            let d = declination_deg(n);
            prop_assert!(d.abs() <= MAX_DECLINATION_DEG + 1e-12);
            prop_assert!((declination_deg(n) - d).abs() == 0.0);
        }

        #[test]
        fn eot_within_band(n in 1u32..=365) {
            let (_, eot) = equation_of_time(n);
            prop_assert!((-15.0..=17.0).contains(&eot));
        }

        #[test]
        fn azimuth_matches_atan2_oracle(
            lat in -60.0f64..60.0,
            n in 1u32..=365,
            h in 0.0f64..24.0,
        ) {
            let site = SiteConfig { latitude_deg: lat, longitude_deg: 0.0,
                reference_longitude_deg: 0.0, utc_offset_hours: 0.0 };
            let p = solar_position(&site, n, h);
            prop_assume!(p.altitude_deg.abs() < 85.0);
            let oracle = azimuth_atan2(lat, p.declination_deg, p.hour_angle_deg);
            let diff = (p.azimuth_deg - oracle).rem_euclid(360.0);
            let diff = diff.min(360.0 - diff);
            prop_assert!(diff < 1e-6, "az {} oracle {}", p.azimuth_deg, oracle);
        }

        #[test]
        fn below_horizon_gives_zero_incidence(n in 1u32..=365, h in 0.0f64..24.0) {
            let p = solar_position(&SiteConfig::dubai(), n, h);
            if p.altitude_deg <= 0.0 {
                prop_assert_eq!(incidence_cosine(p.altitude_deg), 0.0);
            }
        }

        #[test]
        fn deterministic(n in 1u32..=365, h in 0.0f64..24.0) {
            let a = solar_position(&SiteConfig::dubai(), n, h);
            let b = solar_position(&SiteConfig::dubai(), n, h);
            prop_assert_eq!(a.altitude_deg.to_bits(), b.altitude_deg.to_bits());
            prop_assert_eq!(a.azimuth_deg.to_bits(), b.azimuth_deg.to_bits());
        }
    }

    #[test]
    fn day_366_folds() {
        let site = SiteConfig::dubai();
        assert_eq!(
            solar_position(&site, 366, 10.0),
            solar_position(&site, 365, 10.0)
        );
    }
}
