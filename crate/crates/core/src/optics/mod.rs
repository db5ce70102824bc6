//! Light-pipe optical chain: geometry, efficiency tables and the conversion
//! of outdoor irradiance into chamber heat gains and canopy PPFD.

mod flux;
mod table;
pub mod tracer;

use serde::{Deserialize, Serialize};

use crate::climate::{incidence_cosine, SolarPosition};
use crate::error::{Error, Result};

pub use flux::FluxMap;
pub use table::{
    build_table, cache_key, load_or_build_table, BandEfficiency, DiffuseRow, DirectSample,
    OpticalEfficiencyTable, TableSource, DIFFUSE_TILTS, DIRECT_ALTITUDES,
};
pub use tracer::{trace_diffuse_bands, trace_direct, DirectTrace, TraceConfig, TraceTally};

/// Photon yield of broadband sunlight, µmol J⁻¹.
pub const SOLAR_PHOTON_YIELD: f64 = 2.247;
/// Photon yield of PAR-only radiation, µmol J⁻¹.
pub const PAR_PHOTON_YIELD: f64 = 4.56;
/// Upper edges of the ten-degree sky bands, degrees.
pub const BAND_EDGES: [f64; 9] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpGeometry {
    pub pipe_diameter_mm: f64,
    pub pipe_length_mm: f64,
    pub dome_transmittance: f64,
    pub wall_reflectance: f64,
    pub mirror_reflectance: f64,
    pub mirror_enabled: bool,
    pub mirror_diameter_mm: f64,
    /// Hinge position along the sun-facing axis, measured from the pipe
    /// axis; the default sits on the rim opposite the sun.
    pub mirror_hinge_x_mm: f64,
    pub diffuser_enabled: bool,
    pub prism_pitch_mm: f64,
    /// Stored for reference; facet slope is taken from the apex angle.
    pub pyramid_height_mm: f64,
    pub apex_angle_deg: f64,
    pub refractive_index: f64,
    /// Bulk fraction surviving absorption and Fresnel losses in the sheet.
    pub diffuser_throughput: f64,
    pub canopy_distance_m: f64,
    pub target_width_m: f64,
    pub target_depth_m: f64,
}

impl Default for LpGeometry {
    fn default() -> Self {
        LpGeometry {
            pipe_diameter_mm: 150.0,
            pipe_length_mm: 1000.0,
            dome_transmittance: 0.91,
            wall_reflectance: 0.90,
            mirror_reflectance: 0.90,
            mirror_enabled: true,
            mirror_diameter_mm: 150.0,
            mirror_hinge_x_mm: -75.0,
            diffuser_enabled: true,
            prism_pitch_mm: 2.0,
            pyramid_height_mm: 4.0,
            apex_angle_deg: 152.0,
            refractive_index: 1.49,
            diffuser_throughput: 0.81,
            canopy_distance_m: 0.5,
            target_width_m: 0.20,
            target_depth_m: 0.20,
        }
    }
}

impl LpGeometry {
    /// Horizontal aperture area of one pipe, m².
    pub fn aperture_area(&self) -> f64 {
        let r = self.pipe_diameter_mm / 2000.0;
        std::f64::consts::PI * r * r
    }

    /// Facet slope from horizontal implied by the apex angle, degrees.
    pub fn facet_slope_deg(&self) -> f64 {
        (180.0 - self.apex_angle_deg) / 2.0
    }

    /// Lossless, diffuser-free copy used for geometric checks.
    pub fn lossless(&self) -> Self {
        LpGeometry {
            dome_transmittance: 1.0,
            wall_reflectance: 1.0,
            mirror_reflectance: 1.0,
            diffuser_throughput: 1.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pipe diameter", self.pipe_diameter_mm),
            ("pipe length", self.pipe_length_mm),
            ("mirror diameter", self.mirror_diameter_mm),
            ("prism pitch", self.prism_pitch_mm),
            ("pyramid height", self.pyramid_height_mm),
            ("canopy distance", self.canopy_distance_m),
            ("target width", self.target_width_m),
            ("target depth", self.target_depth_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be > 0, got {v}")));
            }
        }
        let fractions = [
            ("dome transmittance", self.dome_transmittance),
            ("wall reflectance", self.wall_reflectance),
            ("mirror reflectance", self.mirror_reflectance),
            ("diffuser throughput", self.diffuser_throughput),
        ];
        for (name, v) in fractions {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if !(0.0..180.0).contains(&self.apex_angle_deg) || self.apex_angle_deg <= 90.0 {
            return Err(Error::config(format!(
                "apex angle {} outside (90, 180)",
                self.apex_angle_deg
            )));
        }
        if self.refractive_index < 1.0 {
            return Err(Error::config("refractive index must be >= 1"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical serialization; keys table caches.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("geometry serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Mirror tilt that sends a beam at altitude `alt_deg` straight down the
/// pipe: the normal bisects the reversed beam and the downward axis.
pub fn mirror_tilt(alt_deg: f64) -> f64 {
    (90.0 + alt_deg) / 2.0
}

/// Share of isotropic diffuse flux on a horizontal plane arriving from the
/// band whose upper edge is `upper_deg`.
pub fn dome_band_fraction(upper_deg: f64) -> f64 {
    let hi = upper_deg.to_radians().sin();
    let lo = (upper_deg - 10.0).to_radians().sin();
    hi * hi - lo * lo
}

/// Power ratio of beam intercepted by the mirror to beam crossing the
/// horizontal aperture, from projected areas.
pub fn mirror_interception_ratio(geom: &LpGeometry, alt_deg: f64) -> f64 {
    let s = alt_deg.to_radians().sin();
    if s <= 0.0 {
        return 0.0;
    }
    let rm = geom.mirror_diameter_mm / 2000.0;
    let a_m = std::f64::consts::PI * rm * rm;
    // Angle between the mirror normal and the reversed beam is (90 − α)/2.
    let cos_inc = ((90.0 - alt_deg) / 2.0).to_radians().sin();
    a_m * cos_inc / (geom.aperture_area() * s)
}

/// Which direct-beam efficiency feeds the canopy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    /// A uniform roof array: beam light a pipe sends into neighbouring
    /// zones is matched by what the neighbours send into its own, so the
    /// whole chamber-entering beam reaches the canopy.
    #[default]
    Array,
    /// Only light inside the pipe's own target zone counts.
    Single,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LpGains {
    /// Direct power reaching the canopy, W.
    pub q_dir: f64,
    /// Direct power entering the chamber, W.
    pub q_dir_th: f64,
    pub q_diff_th: f64,
    pub q_diff_crop: f64,
    pub q_sol: f64,
    /// Set when the altitude fell outside the table and the nearest sample
    /// was used.
    pub out_of_support: bool,
}

impl LpGains {
    /// Gains after a filter or film passing `factor` of the transmitted
    /// power. Photon accounting then uses the matching conversion factor.
    pub fn attenuated(&self, factor: f64) -> LpGains {
        LpGains {
            q_dir: self.q_dir * factor,
            q_dir_th: self.q_dir_th * factor,
            q_diff_th: self.q_diff_th * factor,
            q_diff_crop: self.q_diff_crop * factor,
            q_sol: self.q_sol * factor,
            out_of_support: self.out_of_support,
        }
    }
}

pub fn lp_solar_gains(
    table: &OpticalEfficiencyTable,
    i_dir: f64,
    i_diff: f64,
    pos: &SolarPosition,
    geom: &LpGeometry,
    n_pipes: usize,
    footprint: Footprint,
) -> LpGains {
    if pos.altitude_deg <= 0.0 {
        return LpGains::default();
    }
    let area = geom.aperture_area() * n_pipes as f64;
    let (eta_th, dir_flag) = table.direct_chamber_efficiency(pos.altitude_deg);
    let eta_crop = match footprint {
        Footprint::Array => eta_th,
        Footprint::Single => table.direct_efficiency(pos.altitude_deg).0,
    };
    let beam = i_dir * incidence_cosine(pos.altitude_deg) * area;
    let q_dir = beam * eta_crop;
    let q_dir_th = beam * eta_th;

    let (bands, tilt_flag) = table.diffuse_efficiency(mirror_tilt(pos.altitude_deg));
    let mut q_diff_th = 0.0;
    let mut q_diff_crop = 0.0;
    for (edge, b) in BAND_EDGES.iter().zip(bands.iter()) {
        let band_power = 0.5 * i_diff * dome_band_fraction(*edge) * area;
        q_diff_th += band_power * b.eta_th;
        q_diff_crop += band_power * b.eta_crop;
    }
    LpGains {
        q_dir,
        q_dir_th,
        q_diff_th,
        q_diff_crop,
        q_sol: q_dir_th + q_diff_th,
        out_of_support: dir_flag || tilt_flag,
    }
}

/// Canopy PPFD from the crop-reaching part of the gains.
pub fn lp_crop_ppfd(gains: &LpGains, crop_area: f64, conversion: f64) -> f64 {
    (gains.q_dir + gains.q_diff_crop) * conversion / crop_area
}

pub fn filtered_efficiency(eta_base: f64, tau_vis: f64) -> f64 {
    eta_base * tau_vis
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GhGains {
    /// Solar power transmitted into the chamber, W.
    pub q_sol: f64,
    /// Part of it landing on cultivation tiers, W.
    pub q_crop: f64,
    /// Canopy PPFD on the daylit tier, µmol m⁻² s⁻¹.
    pub ppfd: f64,
}

/// Transmission through horizontal greenhouse glazing.
pub fn gh_gains(
    i_dir: f64,
    i_diff: f64,
    pos: &SolarPosition,
    glazing_area: f64,
    tau_glass: f64,
    crop_share: f64,
    crop_area: f64,
) -> GhGains {
    let cos_theta = incidence_cosine(pos.altitude_deg);
    let q_sol = (i_dir * cos_theta + i_diff) * tau_glass * glazing_area;
    let q_crop = q_sol * crop_share;
    GhGains {
        q_sol,
        q_crop,
        ppfd: q_crop * SOLAR_PHOTON_YIELD / crop_area,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::climate::{solar_position, SiteConfig};
    use approx::assert_relative_eq;

    #[test]
    fn tilt_law() {
        assert_eq!(mirror_tilt(50.0), 70.0);
        assert_eq!(mirror_tilt(0.0), 45.0);
        assert_eq!(mirror_tilt(90.0), 90.0);
    }

    #[test]
    fn band_fractions() {
        assert_relative_eq!(dome_band_fraction(90.0), 0.0302, epsilon = 1e-4);
        assert_relative_eq!(dome_band_fraction(10.0), 0.0302, epsilon = 1e-4);
        let total: f64 = BAND_EDGES.iter().map(|e| dome_band_fraction(*e)).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn aperture_and_fleet_area() {
        let g = LpGeometry::default();
        assert_relative_eq!(g.aperture_area(), 0.017671, epsilon = 1e-6);
        assert_relative_eq!(g.aperture_area() * 750.0, 13.25, epsilon = 0.005);
    }

    #[test]
    fn crop_ppfd_conversions() {
        let gains = LpGains {
            q_dir: 11.04,
            ..Default::default()
        };
        let flux = lp_crop_ppfd(&gains, 1.0, SOLAR_PHOTON_YIELD);
        assert_relative_eq!(flux, 24.81, epsilon = 0.01);
        let par = lp_crop_ppfd(&gains, 1.0, PAR_PHOTON_YIELD);
        assert_relative_eq!(par / flux, 4.56 / 2.247, epsilon = 1e-12);
        assert_eq!(lp_crop_ppfd(&LpGains::default(), 1.0, 2.247), 0.0);
    }

    #[test]
    fn filter_products() {
        assert_relative_eq!(filtered_efficiency(0.456, 0.98), 0.447, epsilon = 0.0005);
        assert_relative_eq!(filtered_efficiency(0.456, 0.90), 0.410, epsilon = 0.0005);
        assert_eq!(filtered_efficiency(0.456, 1.0), 0.456);
    }

    #[test]
    fn greenhouse_transmission() {
        // Incidence 60° ⇒ altitude 30°.
        let mut pos = solar_position(&SiteConfig::dubai(), 81, 12.0);
        pos.altitude_deg = 30.0;
        let g = gh_gains(800.0, 0.0, &pos, 1.0, 0.82, 1.0, 1.0);
        assert_relative_eq!(g.q_sol, 328.0, epsilon = 1e-9);
        let z = gh_gains(0.0, 0.0, &pos, 49.0, 0.82, 0.61, 30.0);
        assert_eq!(z.q_sol, 0.0);
        assert_eq!(z.ppfd, 0.0);
        assert_relative_eq!(0.80 * 0.61, 0.49, epsilon = 0.003);
    }

    #[test]
    fn interception_exceeds_aperture_at_low_sun() {
        let g = LpGeometry::default();
        assert!(mirror_interception_ratio(&g, 15.0) > 1.0);
        assert!(mirror_interception_ratio(&g, 80.0) < 0.2);
        assert_eq!(mirror_interception_ratio(&g, 90.0), 0.0);
    }

    #[test]
    fn validation() {
        assert!(LpGeometry::default().validate().is_ok());
        let bad = LpGeometry {
            wall_reflectance: 1.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LpGeometry {
            pipe_length_mm: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
