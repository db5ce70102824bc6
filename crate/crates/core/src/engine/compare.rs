use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::climate::ClimateSeries;
use crate::economics::{capex, payback_time};
use crate::error::{Error, Result};
use crate::lighting::Strategy;

use super::{run_scenario, CalibrationState, PreparedScenario, SimulationResult};

/// One scenario row of the comparison tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: Strategy,
    pub label: String,
    pub yield_kg: f64,
    pub raw_yield_kg: f64,
    pub wue_g_l: Option<f64>,
    pub total_lighting_energy_kwh_kg: Option<f64>,
    pub harvested_daylight_mwh: f64,
    pub lighting_tier12_mwh: f64,
    pub lighting_tier3_mwh: f64,
    pub cooling_thermal_mwh: f64,
    pub heating_thermal_mwh: f64,
    pub electricity_mwh: f64,
    pub sec_kwh_kg: Option<f64>,
    pub seec_kwh_kg: Option<f64>,
    pub mean_tier3_dli: f64,
    pub capex_usd: f64,
    /// Light cost, $ (µmol s⁻¹)⁻¹; only for light-pipe rows.
    pub light_cost: Option<f64>,
    /// Payback against the Bench row of the same set.
    pub payback_years: Option<f64>,
    pub config_hash: String,
}

/// Benchmark figures at one LED efficacy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpeRow {
    pub ppe: f64,
    pub nominal_power_kw: f64,
    pub lighting_mwh: f64,
    pub cooling_thermal_mwh: f64,
    pub heating_thermal_mwh: f64,
    pub electricity_mwh: f64,
    pub yield_kg: f64,
    pub seec_kwh_kg: Option<f64>,
    pub sec_kwh_kg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub calibration: CalibrationState,
    pub climate_hash: String,
    pub rows: Vec<ComparisonRow>,
    pub ppe_rows: Vec<PpeRow>,
    #[serde(skip)]
    pub results: Vec<SimulationResult>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

fn row(
    r: &SimulationResult,
    prep: &PreparedScenario,
    bench: Option<&SimulationResult>,
) -> ComparisonRow {
    let k = &r.kpis;
    let costs = &prep.config.costs;
    let payback = bench
        .filter(|_| r.meta.scenario != Strategy::Bench)
        .map(|b| payback_time(&r.economics, &b.economics, costs))
        .and_then(|p| p.years);
    ComparisonRow {
        scenario: r.meta.scenario,
        label: r.meta.label.clone(),
        yield_kg: r.yields.normalized_kg,
        raw_yield_kg: r.yields.raw_kg,
        wue_g_l: k.wue_g_l,
        total_lighting_energy_kwh_kg: k.total_lighting_energy_kwh_kg,
        harvested_daylight_mwh: r.totals.harvested_daylight_mwh,
        lighting_tier12_mwh: r.totals.lighting_tier12_mwh,
        lighting_tier3_mwh: r.totals.lighting_tier3_mwh,
        cooling_thermal_mwh: r.totals.cooling_thermal_mwh,
        heating_thermal_mwh: r.totals.heating_thermal_mwh,
        electricity_mwh: r.totals.electricity_mwh(),
        sec_kwh_kg: k.sec_kwh_kg,
        seec_kwh_kg: k.seec_kwh_kg,
        mean_tier3_dli: k.mean_dli,
        capex_usd: capex(&r.economics.capex, costs).total,
        light_cost: prep
            .config
            .light_cost
            .strategy_light_cost(r.meta.scenario, costs),
        payback_years: payback,
        config_hash: r.meta.config_hash.clone(),
    }
}

/// Runs a scenario set on shared climate. All rows must share one
/// calibration state. With `ppe_sweep` non-empty, the Bench entry is rerun
/// at each efficacy for the benchmark table.
pub fn compare_scenarios(
    preps: &[PreparedScenario],
    climate: &ClimateSeries,
    workers: usize,
    ppe_sweep: &[f64],
) -> Result<ComparisonReport> {
    let first = preps
        .first()
        .ok_or_else(|| Error::config("no scenarios to compare"))?;
    if preps.iter().any(|p| p.calibration != first.calibration) {
        return Err(Error::Calibration(
            "scenarios carry different calibration states".into(),
        ));
    }
    let pool = pool(workers)?;
    let results: Vec<SimulationResult> = pool.install(|| {
        preps
            .par_iter()
            .map(|p| run_scenario(p, climate))
            .collect::<Result<Vec<_>>>()
    })?;
    let bench = results.iter().find(|r| r.meta.scenario == Strategy::Bench);
    let rows = results
        .iter()
        .zip(preps)
        .map(|(r, p)| row(r, p, bench))
        .collect();

    let ppe_rows = match preps
        .iter()
        .find(|p| p.config.strategy() == Strategy::Bench)
    {
        Some(b) if !ppe_sweep.is_empty() => pool.install(|| {
            ppe_sweep
                .par_iter()
                .map(|&ppe| {
                    let mut p = b.clone();
                    p.config.leds.ppe = ppe;
                    p.config.output.hourly_trace = false;
                    let r = run_scenario(&p, climate)?;
                    Ok(PpeRow {
                        ppe,
                        nominal_power_kw: p.config.leds.nominal_power_w() / 1e3,
                        lighting_mwh: r.totals.lighting_mwh(),
                        cooling_thermal_mwh: r.totals.cooling_thermal_mwh,
                        heating_thermal_mwh: r.totals.heating_thermal_mwh,
                        electricity_mwh: r.totals.electricity_mwh(),
                        yield_kg: r.yields.normalized_kg,
                        seec_kwh_kg: r.kpis.seec_kwh_kg,
                        sec_kwh_kg: r.kpis.sec_kwh_kg,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?,
        _ => Vec::new(),
    };

    Ok(ComparisonReport {
        calibration: first.calibration.clone(),
        climate_hash: climate.content_hash(),
        rows,
        ppe_rows,
        results,
    })
}
