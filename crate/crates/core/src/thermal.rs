//! Chamber air-node energy balance under setpoint control, buoyancy losses
//! through the pipes, envelope transmission, coil latent handling and HVAC
//! electricity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::LpGeometry;

const KELVIN: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Wall,
    Roof,
    Floor,
    Glazing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Surface {
    pub kind: SurfaceKind,
    pub area_m2: f64,
    pub u_w_m2k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChamberGeometry {
    pub floor_area_m2: f64,
    pub height_m: f64,
    pub surfaces: Vec<Surface>,
    pub air_density: f64,
    pub air_cp: f64,
}

impl Default for ChamberGeometry {
    fn default() -> Self {
        ChamberGeometry::container(7.0, 7.0, 3.0, 0.175)
    }
}

impl ChamberGeometry {
    /// Insulated box of `length × width × height` with one U-value everywhere.
    pub fn container(length_m: f64, width_m: f64, height_m: f64, u: f64) -> Self {
        let floor = length_m * width_m;
        let walls = 2.0 * (length_m + width_m) * height_m;
        let s = |kind, area_m2| Surface {
            kind,
            area_m2,
            u_w_m2k: u,
        };
        ChamberGeometry {
            floor_area_m2: floor,
            height_m,
            surfaces: vec![
                s(SurfaceKind::Wall, walls),
                s(SurfaceKind::Roof, floor),
                s(SurfaceKind::Floor, floor),
            ],
            air_density: 1.2,
            air_cp: 1006.0,
        }
    }

    pub fn volume(&self) -> f64 {
        self.floor_area_m2 * self.height_m
    }

    /// Σ U·A, W K⁻¹.
    pub fn conductance(&self) -> f64 {
        self.surfaces.iter().map(|s| s.u_w_m2k * s.area_m2).sum()
    }

    /// Removes `area` of opaque roof, e.g. for pipe penetrations.
    pub fn with_roof_openings(mut self, area_m2: f64) -> Self {
        if let Some(r) = self
            .surfaces
            .iter_mut()
            .find(|s| s.kind == SurfaceKind::Roof)
        {
            r.area_m2 = (r.area_m2 - area_m2).max(0.0);
        }
        self
    }

    /// Replaces the opaque roof by glazing of transmittance U `u_glass`.
    pub fn with_glazed_roof(mut self, u_glass: f64) -> Self {
        for s in self
            .surfaces
            .iter_mut()
            .filter(|s| s.kind == SurfaceKind::Roof)
        {
            s.kind = SurfaceKind::Glazing;
            s.u_w_m2k = u_glass;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume() > 0.0) {
            return Err(Error::config("chamber volume must be > 0"));
        }
        for s in &self.surfaces {
            if !(s.u_w_m2k > 0.0) || s.area_m2 < 0.0 {
                return Err(Error::config(format!(
                    "surface {:?}: U must be > 0 and area >= 0",
                    s.kind
                )));
            }
        }
        if !(self.air_density > 0.0 && self.air_cp > 0.0) {
            return Err(Error::config("air density and heat capacity must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Setpoints {
    pub t_air_c: f64,
    pub rh_light: f64,
    pub rh_dark: f64,
    pub co2_ppm: f64,
    pub ppfd: f64,
}

impl Default for Setpoints {
    fn default() -> Self {
        Setpoints {
            t_air_c: 24.0,
            rh_light: 0.75,
            rh_dark: 0.85,
            co2_ppm: 1400.0,
            ppfd: 250.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChamberState {
    pub t_air_c: f64,
    pub setpoints: Setpoints,
}

impl ChamberState {
    pub fn at_setpoint(setpoints: Setpoints) -> Self {
        ChamberState {
            t_air_c: setpoints.t_air_c,
            setpoints,
        }
    }
}

/// Still-air properties at a fixed film temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AirProperties {
    pub g: f64,
    pub beta: f64,
    pub nu: f64,
    pub prandtl: f64,
    pub k_air: f64,
    pub length_m: f64,
}

impl Default for AirProperties {
    fn default() -> Self {
        AirProperties {
            g: 9.81,
            beta: 1.0 / 300.0,
            nu: 1.5e-5,
            prandtl: 0.71,
            k_air: 0.026,
            length_m: 1.0,
        }
    }
}

impl AirProperties {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g,
            self.beta,
            self.nu,
            self.prandtl,
            self.k_air,
            self.length_m,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::config("air properties must all be > 0"))
        }
    }
}

/// Which pipe area carries the buoyant exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvectionArea {
    #[default]
    Aperture,
    Lateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Convection {
    pub q_w: f64,
    pub rayleigh: f64,
    /// Rayleigh number outside [1e7, 1e11], where the correlation is untested.
    pub out_of_range: bool,
}

pub fn lp_convection(
    t_in: f64,
    t_ext: f64,
    geom: &LpGeometry,
    props: &AirProperties,
    area_mode: ConvectionArea,
    n_pipes: usize,
) -> Convection {
    let dt = t_in - t_ext;
    if dt <= 0.0 {
        return Convection::default();
    }
    let l = props.length_m;
    let ra = props.g * props.beta * dt * l.powi(3) / (props.nu * props.nu / props.prandtl);
    let nu = 0.15 * ra.powf(0.33);
    let u = nu * props.k_air / l;
    let area = match area_mode {
        ConvectionArea::Aperture => geom.aperture_area(),
        ConvectionArea::Lateral => {
            std::f64::consts::PI * geom.pipe_diameter_mm / 1000.0 * geom.pipe_length_mm / 1000.0
        }
    };
    Convection {
        q_w: u * area * dt * n_pipes as f64,
        rayleigh: ra,
        out_of_range: !(1e7..=1e11).contains(&ra),
    }
}

/// Transmission through the envelope, positive into the chamber.
pub fn envelope_load(geom: &ChamberGeometry, t_in: f64, t_ext: f64) -> f64 {
    geom.conductance() * (t_ext - t_in)
}

/// Every term of the air-node balance. All fields except `q_env` and `q_hc`
/// are non-negative magnitudes entering with the sign of the balance:
///
/// `C dT/dt = q_env + q_led + q_lp_sol + q_glazing_sol − q_lp_conv − q_plant
///            − q_eva + q_hc − q_ahu − q_hum`
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub q_env: f64,
    pub q_led: f64,
    pub q_lp_sol: f64,
    pub q_glazing_sol: f64,
    pub q_lp_conv: f64,
    pub q_plant: f64,
    pub q_eva: f64,
    /// Negative for cooling, positive for heating.
    pub q_hc: f64,
    pub q_ahu: f64,
    pub q_hum: f64,
}

impl PowerBreakdown {
    pub const COLUMNS: [&'static str; 10] = [
        "q_env",
        "q_led",
        "q_lp_sol",
        "q_glazing_sol",
        "q_lp_conv",
        "q_plant",
        "q_eva",
        "q_hc",
        "q_ahu",
        "q_hum",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.q_env,
            self.q_led,
            self.q_lp_sol,
            self.q_glazing_sol,
            self.q_lp_conv,
            self.q_plant,
            self.q_eva,
            self.q_hc,
            self.q_ahu,
            self.q_hum,
        ]
    }

    /// Net power into the air node excluding the heating/cooling term.
    pub fn net_without_hc(&self) -> f64 {
        self.q_env + self.q_led + self.q_lp_sol + self.q_glazing_sol
            - self.q_lp_conv
            - self.q_plant
            - self.q_eva
            - self.q_ahu
            - self.q_hum
    }

    pub fn residual(&self) -> f64 {
        self.net_without_hc() + self.q_hc
    }

    /// Residual over the largest term magnitude (at least 1 W).
    pub fn relative_residual(&self) -> f64 {
        let scale = self.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        self.residual().abs() / scale
    }

    pub fn cooling(&self) -> f64 {
        (-self.q_hc).max(0.0)
    }

    pub fn heating(&self) -> f64 {
        self.q_hc.max(0.0)
    }
}

/// Closes the balance at ∂T/∂t = 0 by solving for `q_hc`.
pub fn solve_hvac_load(mut b: PowerBreakdown) -> PowerBreakdown {
    b.q_hc = -b.net_without_hc();
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CopModel {
    /// Second-law fraction of the Carnot COP.
    pub eta_ii: f64,
    pub t_evap_c: f64,
    /// Condenser temperature above outdoor air, K.
    pub approach_k: f64,
    /// Supply temperature for heat-pump heating, °C.
    pub t_heat_supply_c: f64,
    pub cop_min: f64,
    pub cop_max: f64,
}

impl Default for CopModel {
    fn default() -> Self {
        CopModel {
            eta_ii: 0.45,
            t_evap_c: 7.0,
            approach_k: 10.0,
            t_heat_supply_c: 35.0,
            cop_min: 1.5,
            cop_max: 8.0,
        }
    }
}

impl CopModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_ii > 0.0 && self.eta_ii <= 1.0) {
            return Err(Error::config("COP second-law fraction must be in (0, 1]"));
        }
        if !(self.approach_k > 0.0) {
            return Err(Error::config("condenser approach must be > 0 K"));
        }
        if !(self.cop_min > 0.0 && self.cop_min <= self.cop_max) {
            return Err(Error::config("COP clamp must satisfy 0 < min <= max"));
        }
        Ok(())
    }

    /// Rejects climates whose coldest hour puts the condenser at or below
    /// the evaporator.
    pub fn validate_for_climate(&self, t_ext_min: f64) -> Result<()> {
        self.validate()?;
        if t_ext_min + self.approach_k <= self.t_evap_c {
            return Err(Error::config(format!(
                "condenser {:.1} °C at or below evaporator {:.1} °C",
                t_ext_min + self.approach_k,
                self.t_evap_c
            )));
        }
        Ok(())
    }

    pub fn cooling_cop(&self, t_ext: f64) -> f64 {
        let te = self.t_evap_c + KELVIN;
        let tc = t_ext + self.approach_k + KELVIN;
        let cop = if tc > te {
            self.eta_ii * te / (tc - te)
        } else {
            self.cop_max
        };
        cop.clamp(self.cop_min, self.cop_max)
    }

    pub fn heating_cop(&self, t_ext: f64) -> f64 {
        let th = self.t_heat_supply_c + KELVIN;
        let ts = t_ext - self.approach_k + KELVIN;
        let cop = if th > ts {
            self.eta_ii * th / (th - ts)
        } else {
            self.cop_max
        };
        cop.clamp(self.cop_min, self.cop_max)
    }
}

pub fn hvac_electricity(q_cool: f64, q_heat: f64, t_ext: f64, cop: &CopModel) -> f64 {
    q_cool.abs() / cop.cooling_cop(t_ext) + q_heat.max(0.0) / cop.heating_cop(t_ext)
}

/// Surrogate latent handling: the crop transpires at a light-dependent rate
/// per unit intercepting canopy, the coil condenses it, and dehumidifying
/// while no cooling is needed overcools the supply air by `ahu_sensible_ratio`
/// of the latent load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentConfig {
    pub latent_heat_j_kg: f64,
    pub condensate_recovery: f64,
    /// Transpiration of a fully intercepting canopy with lights on, kg m⁻² h⁻¹.
    pub transpiration_light: f64,
    /// Same, lights off.
    pub transpiration_dark: f64,
    pub ahu_sensible_ratio: f64,
    /// Moisture lost to leakage that a humidifier must replace, kg h⁻¹.
    pub moisture_loss_kg_h: f64,
}

impl Default for LatentConfig {
    fn default() -> Self {
        LatentConfig {
            latent_heat_j_kg: 2.45e6,
            condensate_recovery: 0.95,
            transpiration_light: 0.04,
            transpiration_dark: 0.01,
            ahu_sensible_ratio: 0.5,
            moisture_loss_kg_h: 0.0,
        }
    }
}

impl LatentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.latent_heat_j_kg > 0.0) {
            return Err(Error::config("latent heat must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.condensate_recovery) {
            return Err(Error::config("condensate recovery must be in [0, 1]"));
        }
        let rates = [
            self.transpiration_light,
            self.transpiration_dark,
            self.ahu_sensible_ratio,
            self.moisture_loss_kg_h,
        ];
        if rates.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config("latent surrogate rates must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LatentResult {
    pub q_eva: f64,
    pub q_ahu: f64,
    pub q_hum: f64,
    /// Latent load taken by the coil, W.
    pub q_coil_latent: f64,
    /// Water condensed during the step, kg (≈ L).
    pub condensate_kg: f64,
    /// Condensate returned to the nutrient loop, kg.
    pub recovered_kg: f64,
    /// Water supplied to the humidifier, kg.
    pub humidifier_kg: f64,
}

/// Latent terms for a step of `dt_s` seconds given transpiration in kg s⁻¹.
/// `chiller_cooling` tells whether the sensible balance already calls for
/// cooling, in which case dehumidification is free of overcooling.
pub fn latent_balance(
    transpiration_kg_s: f64,
    chiller_cooling: bool,
    dt_s: f64,
    cfg: &LatentConfig,
) -> LatentResult {
    let lambda = cfg.latent_heat_j_kg;
    let q_eva = lambda * transpiration_kg_s;
    let loss_kg_s = cfg.moisture_loss_kg_h / 3600.0;
    let hum_kg_s = (loss_kg_s - transpiration_kg_s).max(0.0);
    let condense_kg_s = (transpiration_kg_s - loss_kg_s).max(0.0);
    let q_coil_latent = lambda * condense_kg_s;
    let q_ahu = if chiller_cooling {
        0.0
    } else {
        q_coil_latent * cfg.ahu_sensible_ratio
    };
    let condensate_kg = condense_kg_s * dt_s;
    LatentResult {
        q_eva,
        q_ahu,
        q_hum: lambda * hum_kg_s,
        q_coil_latent,
        condensate_kg,
        recovered_kg: condensate_kg * cfg.condensate_recovery,
        humidifier_kg: hum_kg_s * dt_s,
    }
}

/// Net water drawn in a step: unrecovered condensate, humidifier make-up,
/// and the water leaving with harvested biomass.
pub fn net_water_kg(lat: &LatentResult, embodied_kg: f64) -> f64 {
    lat.condensate_kg - lat.recovered_kg + lat.humidifier_kg + embodied_kg
}

/// Optional explicit integration of the indoor temperature with an ideal
/// thermostat of finite capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransientConfig {
    pub substep_s: f64,
    pub deadband_k: f64,
    pub cooling_capacity_w: f64,
    pub heating_capacity_w: f64,
}

impl Default for TransientConfig {
    fn default() -> Self {
        TransientConfig {
            substep_s: 60.0,
            deadband_k: 1.0,
            cooling_capacity_w: 30_000.0,
            heating_capacity_w: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThermalMode {
    #[default]
    QuasiSteady,
    Transient(TransientConfig),
}

/// Integrates one master step of `dt_s`. `gains(t)` returns the balance with
/// every term but `q_hc` evaluated at indoor temperature `t`. Returns the
/// end temperature and the step-averaged breakdown; the averaged `q_hc`
/// includes the storage term so the returned balance still closes.
pub fn transient_step(
    t_start: f64,
    setpoint: f64,
    dt_s: f64,
    chamber: &ChamberGeometry,
    cfg: &TransientConfig,
    gains: impl Fn(f64) -> PowerBreakdown,
) -> (f64, PowerBreakdown) {
    let cap = chamber.air_density * chamber.air_cp * chamber.volume();
    let n = (dt_s / cfg.substep_s).ceil().max(1.0) as usize;
    let h = dt_s / n as f64;
    let mut t = t_start;
    let mut acc = [0.0; 10];
    for _ in 0..n {
        let b = gains(t);
        let net = b.net_without_hc();
        // Power that would bring the node exactly to setpoint over one substep.
        let needed = (setpoint - t) * cap / h - net;
        let q_hc = if t > setpoint + cfg.deadband_k / 2.0 || (t >= setpoint && net > 0.0) {
            needed.clamp(-cfg.cooling_capacity_w, 0.0)
        } else if t < setpoint - cfg.deadband_k / 2.0 || (t <= setpoint && net < 0.0) {
            needed.clamp(0.0, cfg.heating_capacity_w)
        } else {
            0.0
        };
        t += (net + q_hc) * h / cap;
        for (a, v) in acc.iter_mut().zip(PowerBreakdown { q_hc, ..b }.values()) {
            *a += v / n as f64;
        }
    }
    let mut avg = PowerBreakdown {
        q_env: acc[0],
        q_led: acc[1],
        q_lp_sol: acc[2],
        q_glazing_sol: acc[3],
        q_lp_conv: acc[4],
        q_plant: acc[5],
        q_eva: acc[6],
        q_hc: acc[7],
        q_ahu: acc[8],
        q_hum: acc[9],
    };
    // Fold the stored energy into q_hc so the reported balance is closed.
    avg.q_hc -= (t - t_start) * cap / dt_s;
    (t, avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn oracle_props() -> AirProperties {
        AirProperties {
            beta: 1.0 / 297.0,
            ..Default::default()
        }
    }

    #[test]
    fn single_pipe_convection_oracle() {
        // Ra = 9.81·(1/297)·4 / (1.5e-5² / 0.71) = 4.169e8, Nu = 0.15·Ra^0.33
        // = 104.9, U = 2.727 W m⁻² K⁻¹, Q = U·0.017671·4.
        let c = lp_convection(
            24.0,
            20.0,
            &LpGeometry::default(),
            &oracle_props(),
            ConvectionArea::Aperture,
            1,
        );
        assert_relative_eq!(c.rayleigh, 4.169e8, max_relative = 1e-3);
        assert_relative_eq!(c.q_w, 0.1928, max_relative = 2e-3);
        assert!(!c.out_of_range);
    }

    #[test]
    fn convection_suppressed_when_outside_is_warmer() {
        let g = LpGeometry::default();
        let p = AirProperties::default();
        assert_eq!(
            lp_convection(24.0, 24.0, &g, &p, ConvectionArea::Aperture, 750).q_w,
            0.0
        );
        assert_eq!(
            lp_convection(24.0, 29.0, &g, &p, ConvectionArea::Aperture, 750).q_w,
            0.0
        );
    }

    #[test]
    fn lateral_area_scales_loss() {
        let g = LpGeometry::default();
        let p = AirProperties::default();
        let a = lp_convection(24.0, 14.0, &g, &p, ConvectionArea::Aperture, 1).q_w;
        let l = lp_convection(24.0, 14.0, &g, &p, ConvectionArea::Lateral, 1).q_w;
        // π d L / (π d² / 4) = 4 L / d.
        assert_relative_eq!(l / a, 4.0 * 1.0 / 0.15, max_relative = 1e-12);
    }

    #[test]
    fn envelope_products() {
        let one = ChamberGeometry {
            surfaces: vec![Surface {
                kind: SurfaceKind::Wall,
                area_m2: 100.0,
                u_w_m2k: 0.175,
            }],
            ..Default::default()
        };
        assert_relative_eq!(envelope_load(&one, 24.0, 34.0), 175.0, epsilon = 1e-9);
        assert_eq!(envelope_load(&one, 24.0, 24.0), 0.0);
        let glass = ChamberGeometry {
            surfaces: vec![Surface {
                kind: SurfaceKind::Glazing,
                area_m2: 49.0,
                u_w_m2k: 3.75,
            }],
            ..Default::default()
        };
        assert_relative_eq!(envelope_load(&glass, 24.0, 34.0), 1837.5, epsilon = 1e-9);
    }

    #[test]
    fn container_shape() {
        let c = ChamberGeometry::default();
        assert_relative_eq!(c.volume(), 147.0);
        assert_relative_eq!(
            c.conductance(),
            0.175 * (84.0 + 49.0 + 49.0),
            epsilon = 1e-12
        );
        let lp = c.clone().with_roof_openings(13.25);
        assert_relative_eq!(
            c.conductance() - lp.conductance(),
            0.175 * 13.25,
            epsilon = 1e-12
        );
        let gh = c.with_glazed_roof(3.75);
        assert_relative_eq!(
            gh.conductance(),
            0.175 * 133.0 + 3.75 * 49.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn balance_closure_examples() {
        assert_eq!(solve_hvac_load(PowerBreakdown::default()).q_hc, 0.0);
        let b = solve_hvac_load(PowerBreakdown {
            q_led: 9000.0,
            q_plant: 1000.0,
            q_eva: 2000.0,
            ..Default::default()
        });
        assert_eq!(b.q_hc, -6000.0);
        assert_eq!(b.residual(), 0.0);
        let b2 = solve_hvac_load(PowerBreakdown {
            q_lp_sol: 5000.0,
            ..b
        });
        assert_eq!(b2.q_hc, -11000.0);
        assert_eq!(b2.cooling(), 11000.0);
        assert_eq!(b2.heating(), 0.0);
    }

    #[test]
    fn cop_oracle_and_monotonicity() {
        let m = CopModel::default();
        // 0.45 · 280.15 / 28 = 4.5024 ⇒ 10 kW / 4.5024.
        let p = hvac_electricity(10_000.0, 0.0, 25.0, &m);
        assert_relative_eq!(p, 10_000.0 / (0.45 * 280.15 / 28.0), epsilon = 1e-9);
        assert_relative_eq!(p, 2221.0, epsilon = 1.0);
        assert!(hvac_electricity(5000.0, 0.0, 40.0, &m) > hvac_electricity(5000.0, 0.0, 20.0, &m));
        assert_eq!(hvac_electricity(0.0, 0.0, 30.0, &m), 0.0);
        // Very cold condenser hits the clamp.
        assert_eq!(m.cooling_cop(-2.5), m.cop_max);
    }

    #[test]
    fn cop_config_rejection() {
        let m = CopModel::default();
        assert!(m.validate_for_climate(12.0).is_ok());
        assert!(m.validate_for_climate(-3.0).is_err());
        let bad = CopModel {
            approach_k: 0.0,
            ..m
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn latent_examples() {
        let cfg = LatentConfig::default();
        let zero = latent_balance(0.0, true, 3600.0, &cfg);
        assert_eq!(zero.q_eva, 0.0);
        assert_eq!(zero.condensate_kg, 0.0);
        let one = latent_balance(1.0 / 3600.0, true, 3600.0, &cfg);
        assert_relative_eq!(one.q_eva, 680.56, epsilon = 0.01);
        assert_relative_eq!(one.condensate_kg, 1.0, epsilon = 1e-12);
        assert_eq!(one.q_ahu, 0.0);
        let dehum = latent_balance(1.0 / 3600.0, false, 3600.0, &cfg);
        assert_relative_eq!(dehum.q_ahu, 0.5 * 680.56, epsilon = 0.01);

        let closed = LatentConfig {
            condensate_recovery: 1.0,
            ..cfg
        };
        let r = latent_balance(1.0 / 3600.0, true, 3600.0, &closed);
        assert_relative_eq!(net_water_kg(&r, 4.2), 4.2, epsilon = 1e-12);
    }

    #[test]
    fn humidifier_covers_leakage() {
        let cfg = LatentConfig {
            moisture_loss_kg_h: 2.0,
            ..Default::default()
        };
        let r = latent_balance(0.5 / 3600.0, false, 3600.0, &cfg);
        assert_relative_eq!(r.humidifier_kg, 1.5, epsilon = 1e-12);
        assert_eq!(r.condensate_kg, 0.0);
        assert_relative_eq!(r.q_hum, 1.5 / 3600.0 * 2.45e6, epsilon = 1e-9);
    }

    #[test]
    fn transient_holds_setpoint_and_closes() {
        let chamber = ChamberGeometry::default();
        let cfg = TransientConfig::default();
        let gains = |t: f64| PowerBreakdown {
            q_env: envelope_load(&chamber, t, 35.0),
            q_led: 8000.0,
            ..Default::default()
        };
        let (t, avg) = transient_step(24.0, 24.0, 3600.0, &chamber, &cfg, gains);
        assert!((t - 24.0).abs() < 0.5);
        assert!(avg.q_hc < 0.0);
        assert!(avg.relative_residual() < 1e-9);
    }
}
