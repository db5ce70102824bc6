//! Annual hourly loop for one scenario, calibration and multi-scenario
//! comparison.

mod calibration;
mod compare;
mod prepare;
pub mod report;

use serde::{Deserialize, Serialize};

use crate::climate::{solar_position, ClimateSeries, SolarPosition};
use crate::config::ScenarioConfig;
use crate::crop::{embodied_water_kg, growth_step, harvest_if_due, plant_heat_sink, TierState};
use crate::economics::{
    daily_light_integral, kpis, CapexInputs, EconomicInputs, EnergyTotals, KpiReport,
};
use crate::error::{Error, Result};
use crate::lighting::{control_tier3, led_electric_power, tier3_power, LightingCommand, Strategy};
use crate::optics::{
    gh_gains, lp_crop_ppfd, lp_solar_gains, LpGains, PAR_PHOTON_YIELD, SOLAR_PHOTON_YIELD,
};
use crate::thermal::{
    envelope_load, hvac_electricity, latent_balance, lp_convection, net_water_kg, solve_hvac_load,
    transient_step, ChamberGeometry, PowerBreakdown, ThermalMode,
};

pub use calibration::{calibrate, CalibrationArtifact, CalibrationState, BENCH_TARGET_KG};
pub use compare::{compare_scenarios, ComparisonReport, ComparisonRow, PpeRow};
pub use prepare::{load_lue_table, load_scenario_climate, PreparedScenario};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const DT_H: f64 = 1.0;
const DT_S: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub hour: usize,
    pub day: u32,
    pub clock_hour: u32,
    pub t_ext: f64,
    pub t_in: f64,
    pub dni: f64,
    pub dhi: f64,
    pub altitude_deg: f64,
    pub azimuth_deg: f64,
    pub balance: PowerBreakdown,
    pub led_tier12_w: f64,
    pub led_tier3_w: f64,
    /// Heat removed by the chiller including latent and AHU loads, W.
    pub chiller_w: f64,
    pub heating_w: f64,
    pub hvac_electric_w: f64,
    pub daylight_ppfd: f64,
    pub led3_ppfd: f64,
    pub tier3_ppfd: f64,
    pub dim: f64,
    pub ec_voltage: Option<f64>,
    pub ec_tau: Option<f64>,
    pub transpiration_kg_h: f64,
    pub condensate_kg: f64,
    pub net_water_kg: f64,
    /// Daylight power entering the chamber, W.
    pub harvested_w: f64,
    pub tier3_lai: f64,
    pub harvested_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunFlags {
    pub optics_out_of_support_hours: usize,
    pub convection_out_of_range_hours: usize,
    pub ec_cap_unreachable_hours: usize,
    pub lue_clamped_hours: usize,
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldLedger {
    pub raw_kg: f64,
    /// Completed plus partial cycles at the observed cycle length.
    pub normalized_kg: f64,
    pub cycles_per_tier: Vec<u32>,
    pub equivalent_cycles_per_tier: Vec<f64>,
    pub mean_cycle_days: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario: Strategy,
    pub label: String,
    pub config_hash: String,
    pub climate_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub calibration: CalibrationState,
    pub optics_source: Option<String>,
    pub ppe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub meta: RunMeta,
    /// Empty when the hourly trace is disabled.
    pub hours: Vec<HourRecord>,
    pub totals: EnergyTotals,
    pub yields: YieldLedger,
    pub daily_dli: Vec<f64>,
    pub kpis: KpiReport,
    pub economics: EconomicInputs,
    pub peak_chiller_w: f64,
    pub flags: RunFlags,
}

/// Daylight reaching the chamber and the tier-3 canopy in one hour.
struct Daylight {
    thermal_lp_w: f64,
    thermal_glazing_w: f64,
    /// Canopy PPFD before any switchable film.
    ppfd: f64,
    out_of_support: bool,
}

fn daylight(prep: &PreparedScenario, dni: f64, dhi: f64, pos: &SolarPosition) -> Daylight {
    let cfg = &prep.config;
    let s = cfg.strategy();
    let tier_area = cfg.tier_area();
    let none = Daylight {
        thermal_lp_w: 0.0,
        thermal_glazing_w: 0.0,
        ppfd: 0.0,
        out_of_support: false,
    };
    if pos.altitude_deg <= 0.0 {
        return none;
    }
    if s == Strategy::Gh {
        let gh = &cfg.greenhouse;
        let g = gh_gains(
            dni,
            dhi,
            pos,
            gh.glazing_area_m2,
            gh.tau_glass,
            gh.crop_share,
            tier_area,
        );
        return Daylight {
            thermal_glazing_w: g.q_sol,
            ppfd: g.ppfd,
            ..none
        };
    }
    let Some(table) = prep.optics.as_deref() else {
        return none;
    };
    let raw: LpGains = lp_solar_gains(
        table,
        dni,
        dhi,
        pos,
        &cfg.geometry,
        cfg.fleet.n_pipes,
        cfg.fleet.footprint,
    );
    let (gains, conversion) = match s.filter_tau() {
        // The filter passes only PAR, and of that a fraction τ.
        Some(tau) => (
            raw.attenuated(SOLAR_PHOTON_YIELD / PAR_PHOTON_YIELD * tau),
            PAR_PHOTON_YIELD,
        ),
        None => (raw, SOLAR_PHOTON_YIELD),
    };
    Daylight {
        thermal_lp_w: gains.q_sol,
        thermal_glazing_w: 0.0,
        ppfd: lp_crop_ppfd(&gains, tier_area, conversion),
        out_of_support: raw.out_of_support,
    }
}

fn chamber_for(cfg: &ScenarioConfig) -> ChamberGeometry {
    let s = cfg.strategy();
    if s == Strategy::Gh {
        cfg.chamber.clone().with_glazed_roof(cfg.greenhouse.u_glass)
    } else if s.uses_light_pipes() {
        cfg.chamber
            .clone()
            .with_roof_openings(cfg.geometry.aperture_area() * cfg.fleet.n_pipes as f64)
    } else {
        cfg.chamber.clone()
    }
}

fn tier3_installed_ppfd(s: Strategy, nominal: f64) -> f64 {
    match s {
        Strategy::LpNl | Strategy::Gh => 0.0,
        Strategy::LpMin200 => 200.0,
        _ => nominal,
    }
}

fn check_finite(values: &[(&'static str, f64)], hour: usize) -> Result<()> {
    for (quantity, v) in values {
        if !v.is_finite() {
            return Err(Error::NonFinite { quantity, hour });
        }
    }
    Ok(())
}

/// Runs one scenario over the year. Every hour: sun → daylight gains →
/// tier-3 control → LED power → balance closure → HVAC electricity → crop
/// growth → harvest.
pub fn run_scenario(prep: &PreparedScenario, climate: &ClimateSeries) -> Result<SimulationResult> {
    let cfg = &prep.config;
    let s = cfg.strategy();
    cfg.cop.validate_for_climate(
        climate
            .records()
            .iter()
            .map(|r| r.t_ext)
            .fold(f64::INFINITY, f64::min),
    )?;
    if let CalibrationState::Calibrated { climate_hash, .. } = &prep.calibration {
        if *climate_hash != climate.content_hash() {
            return Err(Error::Calibration(
                "artifact was fitted on a different climate year".into(),
            ));
        }
    }
    if s.uses_light_pipes() && prep.optics.is_none() {
        return Err(Error::config(
            "light-pipe scenario without an optical table",
        ));
    }

    let chamber = chamber_for(cfg);
    let tiers_n = cfg.tiers.count;
    let tier_area = cfg.tier_area();
    let lower_area = tier_area * (tiers_n - 1) as f64;
    let nominal = cfg.leds.nominal_ppfd;
    let ppe = cfg.leds.ppe;
    let setpoint = cfg.setpoints.t_air_c;
    let film = cfg.ec_film;
    let film_range = film.range();
    let lat = &cfg.latent;
    let ref_ppfd = cfg.setpoints.ppfd.max(1e-9);

    let mut tiers: Vec<TierState> = (0..tiers_n)
        .map(|i| {
            let off = cfg.tiers.stagger_days.get(i).copied().unwrap_or(0.0);
            TierState::with_offset_days(&cfg.crop, off)
        })
        .collect();

    let mut hours = Vec::with_capacity(climate.len());
    let mut flags = RunFlags::default();
    let mut t_in = setpoint;
    let mut tier3_ppfd_series = Vec::with_capacity(climate.len());
    let mut totals = EnergyTotals::default();
    let mut raw_kg = 0.0;
    let mut peak_chiller: f64 = 0.0;
    let shift = climate.time_shift_hours;

    for (i, rec) in climate.records().iter().enumerate() {
        let day = rec.day_of_year(shift);
        let clock = rec.clock_hour(shift);
        let hour = clock as f64;
        let pos = solar_position(&cfg.site, day, hour + 0.5);

        let dl = daylight(prep, rec.dni, rec.dhi, &pos);
        flags.optics_out_of_support_hours += usize::from(dl.out_of_support);

        let cmd: LightingCommand = control_tier3(
            s,
            dl.ppfd,
            hour,
            &cfg.leds,
            &cfg.driver,
            &cfg.control,
            Some((&film, &film_range)),
        );
        flags.ec_cap_unreachable_hours += usize::from(cmd.ec_cap_unreachable);
        // The film attenuates heat and light alike.
        let film_tau = if s.has_ec_film() {
            cmd.ec_tau.unwrap_or(1.0)
        } else {
            1.0
        };
        let q_lp_sol = dl.thermal_lp_w * film_tau;
        let q_glazing_sol = dl.thermal_glazing_w;

        let lit = cfg.leds.is_lit(hour);
        let lower_ppfd = if lit { nominal } else { 0.0 };
        let led12_w = led_electric_power(lower_ppfd, lower_area, ppe, 1.0);
        let led3_w = tier3_power(s, &cmd, tier_area, ppe, &cfg.driver)?;

        // Canopy interception and heat sink per tier.
        let mut q_plant = 0.0;
        let mut transpiration = 0.0;
        for (t, tier) in tiers.iter().enumerate() {
            if !tier.is_growing() {
                continue;
            }
            let f = cfg.crop.interception(tier.lai);
            let (led_ppfd, day_ppfd) = if t + 1 == tiers_n {
                (cmd.led_ppfd, cmd.daylight_ppfd)
            } else {
                (lower_ppfd, 0.0)
            };
            q_plant += cfg.crop.photosynthetic_fraction
                * plant_heat_sink(
                    led_ppfd + day_ppfd,
                    tier.lai,
                    cfg.crop.k,
                    tier_area,
                    PAR_PHOTON_YIELD,
                );
            let rate = lat.transpiration_dark
                + (lat.transpiration_light - lat.transpiration_dark) * (led_ppfd + day_ppfd)
                    / ref_ppfd;
            transpiration += rate.max(0.0) * f * tier_area / 3600.0;
        }

        let conv_at = |t: f64| {
            if s.uses_light_pipes() {
                lp_convection(
                    t,
                    rec.t_ext,
                    &cfg.geometry,
                    &cfg.air,
                    cfg.thermal.convection_area,
                    cfg.fleet.n_pipes,
                )
            } else {
                Default::default()
            }
        };
        let conv = conv_at(t_in);
        flags.convection_out_of_range_hours += usize::from(conv.q_w > 0.0 && conv.out_of_range);

        let base = PowerBreakdown {
            q_env: envelope_load(&chamber, t_in, rec.t_ext),
            q_led: led12_w + led3_w,
            q_lp_sol,
            q_glazing_sol,
            q_lp_conv: conv.q_w,
            q_plant,
            q_eva: lat.latent_heat_j_kg * transpiration,
            ..Default::default()
        };
        let chiller_cooling = base.net_without_hc() > 0.0;
        let latent = latent_balance(transpiration, chiller_cooling, DT_S, lat);
        let pre = PowerBreakdown {
            q_eva: latent.q_eva,
            q_ahu: latent.q_ahu,
            q_hum: latent.q_hum,
            ..base
        };
        let balance = match cfg.thermal.mode {
            ThermalMode::QuasiSteady => solve_hvac_load(pre),
            ThermalMode::Transient(tc) => {
                let (t_end, avg) =
                    transient_step(t_in, setpoint, DT_S, &chamber, &tc, |t| PowerBreakdown {
                        q_env: envelope_load(&chamber, t, rec.t_ext),
                        q_lp_conv: conv_at(t).q_w,
                        ..pre
                    });
                t_in = t_end;
                avg
            }
        };
        let rel = balance.relative_residual();
        flags.max_relative_residual = flags.max_relative_residual.max(rel);

        let chiller_w = balance.cooling() + balance.q_ahu + latent.q_coil_latent;
        let heating_w = balance.heating();
        let hvac_w = hvac_electricity(chiller_w, heating_w, rec.t_ext, &cfg.cop);
        peak_chiller = peak_chiller.max(chiller_w);

        // Crop growth and harvest.
        let mut harvested_kg = 0.0;
        let mut embodied = 0.0;
        for (t, tier) in tiers.iter_mut().enumerate() {
            let ppfd = if t + 1 == tiers_n {
                cmd.total_ppfd
            } else {
                lower_ppfd
            };
            flags.lue_clamped_hours += usize::from(
                t + 1 == tiers_n
                    && tier.is_growing()
                    && prep
                        .lue
                        .lookup(setpoint, cfg.setpoints.co2_ppm, ppfd)
                        .clamped,
            );
            let grown = growth_step(
                tier,
                ppfd,
                DT_H,
                &cfg.crop,
                &prep.lue,
                setpoint,
                cfg.setpoints.co2_ppm,
            );
            let (next, kg) = harvest_if_due(&grown, &cfg.crop);
            if kg > 0.0 {
                embodied += embodied_water_kg(&grown, &cfg.crop);
            }
            harvested_kg += kg;
            *tier = next;
        }
        raw_kg += harvested_kg;
        let water = net_water_kg(&latent, embodied);

        check_finite(
            &[
                ("q_hc", balance.q_hc),
                ("q_lp_sol", balance.q_lp_sol),
                ("q_plant", balance.q_plant),
                ("hvac electricity", hvac_w),
                ("tier-3 PPFD", cmd.total_ppfd),
                ("tier-3 dry matter", tiers[tiers_n - 1].dm),
            ],
            i,
        )?;

        let harvested_w = q_lp_sol + q_glazing_sol;
        totals.lighting_tier12_mwh += led12_w * DT_H / 1e6;
        totals.lighting_tier3_mwh += led3_w * DT_H / 1e6;
        totals.cooling_thermal_mwh += chiller_w * DT_H / 1e6;
        totals.heating_thermal_mwh += heating_w * DT_H / 1e6;
        totals.cooling_electric_mwh += chiller_w / cfg.cop.cooling_cop(rec.t_ext) * DT_H / 1e6;
        totals.heating_electric_mwh += heating_w / cfg.cop.heating_cop(rec.t_ext) * DT_H / 1e6;
        totals.harvested_daylight_mwh += harvested_w * DT_H / 1e6;
        totals.net_water_l += water;
        tier3_ppfd_series.push(cmd.total_ppfd);

        if cfg.output.hourly_trace {
            hours.push(HourRecord {
                hour: i,
                day,
                clock_hour: clock,
                t_ext: rec.t_ext,
                t_in,
                dni: rec.dni,
                dhi: rec.dhi,
                altitude_deg: pos.altitude_deg,
                azimuth_deg: pos.azimuth_deg,
                balance,
                led_tier12_w: led12_w,
                led_tier3_w: led3_w,
                chiller_w,
                heating_w,
                hvac_electric_w: hvac_w,
                daylight_ppfd: cmd.daylight_ppfd,
                led3_ppfd: cmd.led_ppfd,
                tier3_ppfd: cmd.total_ppfd,
                dim: cmd.dim,
                ec_voltage: cmd.ec_voltage,
                ec_tau: cmd.ec_tau,
                transpiration_kg_h: transpiration * 3600.0,
                condensate_kg: latent.condensate_kg,
                net_water_kg: water,
                harvested_w,
                tier3_lai: tiers[tiers_n - 1].lai,
                harvested_kg,
            });
        }
    }

    let tier_kg = cfg.crop.tier_harvest_kg();
    let equivalent: Vec<f64> = tiers
        .iter()
        .map(|t| t.equivalent_cycles(&cfg.crop))
        .collect();
    let yields = YieldLedger {
        raw_kg,
        normalized_kg: equivalent.iter().sum::<f64>() * tier_kg,
        cycles_per_tier: tiers.iter().map(|t| t.cycles).collect(),
        equivalent_cycles_per_tier: equivalent,
        mean_cycle_days: tiers
            .iter()
            .map(|t| (t.cycles > 0).then(|| t.completed_cycle_hours / t.cycles as f64 / 24.0))
            .collect(),
    };
    let daily_dli = daily_light_integral(&tier3_ppfd_series);
    let kpi = kpis(&totals, yields.normalized_kg, &daily_dli);
    let led_installed_w = led_electric_power(nominal, lower_area, ppe, 1.0)
        + led_electric_power(tier3_installed_ppfd(s, nominal), tier_area, ppe, 1.0);
    let economics = EconomicInputs {
        capex: CapexInputs {
            strategy: s,
            n_pipes: if s.uses_light_pipes() {
                cfg.fleet.n_pipes
            } else {
                0
            },
            ppe,
            led_installed_w,
            hvac_peak_w: peak_chiller,
        },
        electricity_mwh: totals.electricity_mwh(),
        yield_kg: yields.normalized_kg,
    };
    Ok(SimulationResult {
        meta: RunMeta {
            scenario: s,
            label: cfg.label(),
            config_hash: prep.hash.clone(),
            climate_hash: climate.content_hash(),
            seed: cfg.scenario.seed,
            tool_version: TOOL_VERSION.to_string(),
            calibration: prep.calibration.clone(),
            optics_source: prep
                .optics
                .as_ref()
                .map(|t| format!("{:?}", t.source).to_lowercase()),
            ppe,
        },
        hours,
        totals,
        yields,
        daily_dli,
        kpis: kpi,
        economics,
        peak_chiller_w: peak_chiller,
        flags,
    })
}
