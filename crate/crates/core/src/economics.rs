//! KPI bundles, light cost, payback time and price sweeps. Everything here
//! re-prices finished runs; nothing re-simulates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lighting::Strategy;

pub const FT2_PER_M2: f64 = 10.763_910_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostTable {
    /// Installed LED cost per cultivated floor area, $ ft⁻².
    pub led_cost_per_ft2: f64,
    /// PPFD the area cost refers to, µmol m⁻² s⁻¹.
    pub led_reference_ppfd: f64,
    pub light_pipe: f64,
    pub auxiliaries: f64,
    pub uv_ir_filter: f64,
    pub ec_film: f64,
    pub hvac_per_w: f64,
    pub lettuce_price_per_kg: f64,
    pub electricity_price_per_mwh: f64,
    pub carbon_price_per_t: f64,
    pub carbon_intensity_t_per_mwh: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            led_cost_per_ft2: 35.0,
            led_reference_ppfd: 250.0,
            light_pipe: 210.0,
            auxiliaries: 90.0,
            uv_ir_filter: 104.0,
            ec_film: 100.0,
            hvac_per_w: 0.65,
            lettuce_price_per_kg: 7.82,
            electricity_price_per_mwh: 100.0,
            carbon_price_per_t: 0.0,
            carbon_intensity_t_per_mwh: 0.45,
        }
    }
}

impl CostTable {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.led_cost_per_ft2,
            self.light_pipe,
            self.auxiliaries,
            self.uv_ir_filter,
            self.ec_film,
            self.hvac_per_w,
            self.lettuce_price_per_kg,
            self.electricity_price_per_mwh,
            self.carbon_price_per_t,
            self.carbon_intensity_t_per_mwh,
        ];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("cost entries must be finite and >= 0"));
        }
        if !(self.led_reference_ppfd > 0.0) {
            return Err(Error::config("LED reference PPFD must be > 0"));
        }
        Ok(())
    }

    /// Area cost → photon-flux cost → electrical-watt cost.
    pub fn led_cost_per_w(&self, ppe: f64) -> f64 {
        self.led_cost_per_ft2 * FT2_PER_M2 / self.led_reference_ppfd * ppe
    }

    /// Per-pipe hardware for a strategy, $.
    pub fn lp_unit_cost(&self, strategy: Strategy) -> f64 {
        if !strategy.uses_light_pipes() {
            return 0.0;
        }
        let mut c = self.light_pipe + self.auxiliaries;
        if strategy.filter_tau().is_some() {
            c += self.uv_ir_filter;
        }
        if strategy.has_ec_film() {
            c += self.ec_film;
        }
        c
    }
}

/// Installed equipment that differs between scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapexInputs {
    pub strategy: Strategy,
    pub n_pipes: usize,
    pub ppe: f64,
    /// Installed LED electrical power over all tiers, W.
    pub led_installed_w: f64,
    /// HVAC sizing, W thermal.
    pub hvac_peak_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CapexBreakdown {
    pub leds: f64,
    pub light_pipes: f64,
    pub hvac: f64,
    pub total: f64,
}

pub fn capex(inputs: &CapexInputs, costs: &CostTable) -> CapexBreakdown {
    let leds = inputs.led_installed_w * costs.led_cost_per_w(inputs.ppe);
    let light_pipes = inputs.n_pipes as f64 * costs.lp_unit_cost(inputs.strategy);
    let hvac = inputs.hvac_peak_w * costs.hvac_per_w;
    CapexBreakdown {
        leds,
        light_pipes,
        hvac,
        total: leds + light_pipes + hvac,
    }
}

/// Capital cost per unit of delivered photon flux, $ (µmol s⁻¹)⁻¹.
pub fn light_cost(capex: f64, flux_umol_s: f64) -> Result<f64> {
    if !(flux_umol_s > 0.0) {
        return Err(Error::Domain(
            "light cost needs a positive photon flux".into(),
        ));
    }
    Ok(capex / flux_umol_s)
}

/// Photon flux of a PAR source quoted in lumens, µmol s⁻¹.
pub fn lumens_to_photon_flux(lumens: f64, lm_per_w: f64, umol_per_j: f64) -> f64 {
    lumens / lm_per_w * umol_per_j
}

/// Delivered per-unit fluxes used for light-cost comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightCostReference {
    /// Unfiltered pipe output at the reference daylight level, µmol s⁻¹.
    pub lp_flux: f64,
    /// Pipe output with the switchable film fitted, µmol s⁻¹.
    pub ec_flux: f64,
    pub fiber_cost: f64,
    pub fiber_lumens: f64,
    pub lm_per_w: f64,
    pub par_umol_per_j: f64,
}

impl Default for LightCostReference {
    fn default() -> Self {
        LightCostReference {
            lp_flux: 24.9,
            ec_flux: 16.0,
            fiber_cost: 3264.0,
            fiber_lumens: 9200.0,
            lm_per_w: 251.0,
            par_umol_per_j: 4.56,
        }
    }
}

impl LightCostReference {
    pub fn fiber_flux(&self) -> f64 {
        lumens_to_photon_flux(self.fiber_lumens, self.lm_per_w, self.par_umol_per_j)
    }

    pub fn fiber_light_cost(&self) -> f64 {
        self.fiber_cost / self.fiber_flux()
    }

    /// Per-pipe delivered flux for a strategy; `None` without pipes.
    pub fn strategy_flux(&self, strategy: Strategy) -> Option<f64> {
        if !strategy.uses_light_pipes() {
            return None;
        }
        Some(if strategy.has_ec_film() {
            self.ec_flux
        } else {
            self.lp_flux * strategy.filter_tau().unwrap_or(1.0)
        })
    }

    pub fn strategy_light_cost(&self, strategy: Strategy, costs: &CostTable) -> Option<f64> {
        let flux = self.strategy_flux(strategy)?;
        light_cost(costs.lp_unit_cost(strategy), flux).ok()
    }

    /// Unit cost at which a strategy's light cost equals the fiber's.
    pub fn lc_parity_unit_cost(&self, strategy: Strategy) -> Option<f64> {
        Some(self.fiber_light_cost() * self.strategy_flux(strategy)?)
    }
}

/// Annual figures of one run needed for re-pricing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicInputs {
    pub capex: CapexInputs,
    pub electricity_mwh: f64,
    pub yield_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payback {
    pub delta_capex: f64,
    /// Annual benefit: electricity, carbon and revenue deltas, $ yr⁻¹.
    pub annual_benefit: f64,
    /// `None` when the investment never pays back.
    pub years: Option<f64>,
}

impl Payback {
    pub fn viable(&self) -> bool {
        self.years.is_some()
    }
}

pub fn payback_time(
    scenario: &EconomicInputs,
    bench: &EconomicInputs,
    costs: &CostTable,
) -> Payback {
    let delta_capex = capex(&scenario.capex, costs).total - capex(&bench.capex, costs).total;
    payback_from_delta(delta_capex, scenario, bench, costs)
}

fn payback_from_delta(
    delta_capex: f64,
    scenario: &EconomicInputs,
    bench: &EconomicInputs,
    costs: &CostTable,
) -> Payback {
    let saved_mwh = bench.electricity_mwh - scenario.electricity_mwh;
    let annual_benefit = costs.electricity_price_per_mwh * saved_mwh
        + costs.carbon_price_per_t * costs.carbon_intensity_t_per_mwh * saved_mwh
        + costs.lettuce_price_per_kg * (scenario.yield_kg - bench.yield_kg);
    let years = if delta_capex <= 0.0 {
        Some(0.0)
    } else if annual_benefit > 0.0 {
        Some(delta_capex / annual_benefit)
    } else {
        None
    };
    Payback {
        delta_capex,
        annual_benefit,
        years,
    }
}

/// Pipe unit cost (pipe plus auxiliaries and optics) giving `target_years`,
/// by bisection on the monotone cost–payback relation. `None` when even
/// free pipes miss the target.
pub fn break_even_unit_cost(
    scenario: &EconomicInputs,
    bench: &EconomicInputs,
    costs: &CostTable,
    target_years: f64,
) -> Option<f64> {
    let strategy = scenario.capex.strategy;
    let current = costs.lp_unit_cost(strategy);
    let n = scenario.capex.n_pipes as f64;
    let base = capex(&scenario.capex, costs).total - n * current - capex(&bench.capex, costs).total;
    let pbt = |unit: f64| payback_from_delta(base + n * unit, scenario, bench, costs).years;
    let meets = |unit: f64| pbt(unit).is_some_and(|y| y <= target_years);
    if !meets(0.0) {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = current.max(1.0);
    while meets(hi) {
        hi *= 2.0;
        if hi > 1e9 {
            return Some(hi);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if meets(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub electricity_prices: Vec<f64>,
    pub carbon_prices: Vec<f64>,
    /// Multipliers on the pipe unit cost.
    pub unit_cost_factors: Vec<f64>,
    pub target_years: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            electricity_prices: vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0],
            carbon_prices: vec![0.0, 25.0, 50.0, 75.0, 100.0],
            unit_cost_factors: vec![1.0, 0.8, 0.6, 0.42, 0.2],
            target_years: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub electricity_price: f64,
    pub carbon_price: f64,
    pub unit_cost_factor: f64,
    pub unit_cost: f64,
    pub payback_years: Option<f64>,
    pub break_even_unit_cost: Option<f64>,
    /// Reduction of the pipe unit cost required to reach the target.
    pub required_reduction: Option<f64>,
}

pub fn sensitivity_sweep(
    scenario: &EconomicInputs,
    bench: &EconomicInputs,
    costs: &CostTable,
    grid: &SweepGrid,
) -> Vec<SweepRow> {
    let strategy = scenario.capex.strategy;
    let mut rows = Vec::new();
    for &el in &grid.electricity_prices {
        for &co2 in &grid.carbon_prices {
            let priced = CostTable {
                electricity_price_per_mwh: el,
                carbon_price_per_t: co2,
                ..*costs
            };
            let be = break_even_unit_cost(scenario, bench, &priced, grid.target_years);
            let current = priced.lp_unit_cost(strategy);
            for &f in &grid.unit_cost_factors {
                let scaled = CostTable {
                    light_pipe: priced.light_pipe * f,
                    auxiliaries: priced.auxiliaries * f,
                    uv_ir_filter: priced.uv_ir_filter * f,
                    ec_film: priced.ec_film * f,
                    ..priced
                };
                rows.push(SweepRow {
                    electricity_price: el,
                    carbon_price: co2,
                    unit_cost_factor: f,
                    unit_cost: scaled.lp_unit_cost(strategy),
                    payback_years: payback_time(scenario, bench, &scaled).years,
                    break_even_unit_cost: be,
                    required_reduction: be
                        .filter(|_| current > 0.0)
                        .map(|b| (1.0 - b / current).max(0.0)),
                });
            }
        }
    }
    rows
}

/// Annual energy totals of a run, MWh unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyTotals {
    pub lighting_tier12_mwh: f64,
    pub lighting_tier3_mwh: f64,
    pub cooling_thermal_mwh: f64,
    pub heating_thermal_mwh: f64,
    pub cooling_electric_mwh: f64,
    pub heating_electric_mwh: f64,
    pub harvested_daylight_mwh: f64,
    pub net_water_l: f64,
}

impl EnergyTotals {
    pub fn lighting_mwh(&self) -> f64 {
        self.lighting_tier12_mwh + self.lighting_tier3_mwh
    }

    pub fn hvac_electric_mwh(&self) -> f64 {
        self.cooling_electric_mwh + self.heating_electric_mwh
    }

    pub fn electricity_mwh(&self) -> f64 {
        self.lighting_mwh() + self.hvac_electric_mwh()
    }

    pub fn hvac_thermal_mwh(&self) -> f64 {
        self.cooling_thermal_mwh + self.heating_thermal_mwh
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub yield_kg: f64,
    pub seec_kwh_kg: Option<f64>,
    pub sec_kwh_kg: Option<f64>,
    pub wue_g_l: Option<f64>,
    pub total_lighting_energy_kwh_kg: Option<f64>,
    pub harvested_daylight_mwh: f64,
    pub electricity_mwh: f64,
    pub energies: EnergyTotals,
    pub mean_dli: f64,
    /// Yield was zero, so the specific figures are undefined.
    pub undefined: bool,
}

/// SEC counts lighting electricity, delivered HVAC heat and cold, and
/// harvested daylight; SEEC counts electricity only.
pub fn kpis(energies: &EnergyTotals, yield_kg: f64, daily_dli: &[f64]) -> KpiReport {
    let per_kg = |mwh: f64| (yield_kg > 0.0).then(|| mwh * 1000.0 / yield_kg);
    let sec_mwh =
        energies.lighting_mwh() + energies.hvac_thermal_mwh() + energies.harvested_daylight_mwh;
    let mean_dli = if daily_dli.is_empty() {
        0.0
    } else {
        daily_dli.iter().sum::<f64>() / daily_dli.len() as f64
    };
    KpiReport {
        yield_kg,
        seec_kwh_kg: per_kg(energies.electricity_mwh()),
        sec_kwh_kg: per_kg(sec_mwh),
        wue_g_l: (yield_kg > 0.0 && energies.net_water_l > 0.0)
            .then(|| yield_kg * 1000.0 / energies.net_water_l),
        total_lighting_energy_kwh_kg: per_kg(
            energies.lighting_mwh() + energies.harvested_daylight_mwh,
        ),
        harvested_daylight_mwh: energies.harvested_daylight_mwh,
        electricity_mwh: energies.electricity_mwh(),
        energies: *energies,
        mean_dli,
        undefined: yield_kg <= 0.0,
    }
}

/// Daily light integral from hourly PPFD, mol m⁻² day⁻¹.
pub fn daily_light_integral(hourly_ppfd: &[f64]) -> Vec<f64> {
    hourly_ppfd
        .chunks(24)
        .map(|d| d.iter().sum::<f64>() * 3600.0 / 1e6)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn run(strategy: Strategy, el: f64, kg: f64, pipes: usize) -> EconomicInputs {
        EconomicInputs {
            capex: CapexInputs {
                strategy,
                n_pipes: pipes,
                ppe: 2.5,
                led_installed_w: 9000.0,
                hvac_peak_w: 10_000.0,
            },
            electricity_mwh: el,
            yield_kg: kg,
        }
    }

    #[test]
    fn led_cost_chain() {
        let c = CostTable::default();
        assert_relative_eq!(c.led_cost_per_w(3.0), 4.5, epsilon = 0.03);
        assert_relative_eq!(c.led_cost_per_w(2.5), 3.75, epsilon = 0.03);
        assert_relative_eq!(c.led_cost_per_w(2.0), 3.0, epsilon = 0.03);
    }

    #[test]
    fn light_cost_table() {
        let r = LightCostReference::default();
        let c = CostTable::default();
        assert_relative_eq!(r.fiber_flux(), 167.0, max_relative = 0.01);
        assert_relative_eq!(r.fiber_light_cost(), 19.53, epsilon = 0.02);
        let expect = [
            (Strategy::LpNl, 12.05),
            (Strategy::LpMin250, 12.05),
            (Strategy::LpDim, 12.05),
            (Strategy::LpDimIr98, 16.56),
            (Strategy::LpDimEc, 25.00),
        ];
        for (s, lc) in expect {
            assert_relative_eq!(r.strategy_light_cost(s, &c).unwrap(), lc, epsilon = 0.02);
        }
        assert_eq!(r.strategy_light_cost(Strategy::Bench, &c), None);
        assert_relative_eq!(light_cost(300.0, 24.9).unwrap(), 12.05, epsilon = 0.005);
        assert_relative_eq!(light_cost(400.0, 16.0).unwrap(), 25.0);
        assert!(light_cost(1.0, 0.0).is_err());
        // Parity near 480 $.
        assert!(480.0 / 24.9 <= r.fiber_light_cost());
        assert!(r.lc_parity_unit_cost(Strategy::LpDim).unwrap() > 480.0);
    }

    #[test]
    fn light_cost_homogeneous() {
        let a = light_cost(300.0, 24.9).unwrap();
        let b = light_cost(3000.0, 249.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn payback_examples() {
        let c = CostTable {
            electricity_price_per_mwh: 1000.0,
            ..Default::default()
        };
        let bench = run(Strategy::Bench, 10.0, 100.0, 0);
        let mut s = run(Strategy::Bench, 9.99, 100.0, 0);
        s.capex.hvac_peak_w += 100.0 / 0.65;
        let p = payback_time(&s, &bench, &c);
        assert_relative_eq!(p.years.unwrap(), 10.0, max_relative = 1e-9);

        let same = payback_time(&bench, &bench, &c);
        assert_eq!(same.years, Some(0.0));

        let lossy = run(Strategy::LpNl, 9.9, 50.0, 750);
        assert!(!payback_time(&lossy, &bench, &c).viable());
    }

    #[test]
    fn payback_homogeneous_in_price() {
        let bench = run(Strategy::Bench, 68.0, 9221.0, 0);
        let s = run(Strategy::LpDim, 60.0, 9221.0, 750);
        let c1 = CostTable {
            electricity_price_per_mwh: 100.0,
            ..Default::default()
        };
        let c2 = CostTable {
            electricity_price_per_mwh: 200.0,
            ..c1
        };
        let y1 = payback_time(&s, &bench, &c1).years.unwrap();
        let y2 = payback_time(&s, &bench, &c2).years.unwrap();
        assert_relative_eq!(y1 / y2, 2.0, max_relative = 1e-12);
        let free = CostTable {
            electricity_price_per_mwh: 0.0,
            ..c1
        };
        assert!(!payback_time(&s, &bench, &free).viable());
    }

    #[test]
    fn break_even_hits_target() {
        let bench = run(Strategy::Bench, 68.0, 9221.0, 0);
        let s = run(Strategy::LpDim, 60.0, 9221.0, 750);
        let c = CostTable {
            electricity_price_per_mwh: 350.0,
            carbon_price_per_t: 100.0,
            ..Default::default()
        };
        let unit = break_even_unit_cost(&s, &bench, &c, 10.0).unwrap();
        let priced = CostTable {
            light_pipe: unit,
            auxiliaries: 0.0,
            ..c
        };
        assert_relative_eq!(
            payback_time(&s, &bench, &priced).years.unwrap(),
            10.0,
            max_relative = 1e-6
        );
    }

    #[test]
    fn sweep_is_monotone_in_prices() {
        let bench = run(Strategy::Bench, 68.0, 9221.0, 0);
        let s = run(Strategy::LpDim, 60.0, 9221.0, 750);
        let rows = sensitivity_sweep(&s, &bench, &CostTable::default(), &SweepGrid::default());
        assert_eq!(rows.len(), 7 * 5 * 5);
        let at = |el: f64, co2: f64| {
            rows.iter()
                .find(|r| {
                    r.electricity_price == el && r.carbon_price == co2 && r.unit_cost_factor == 1.0
                })
                .and_then(|r| r.payback_years)
                .unwrap()
        };
        assert!(at(100.0, 0.0) >= at(200.0, 0.0));
        assert!(at(100.0, 0.0) >= at(100.0, 50.0));
    }

    #[test]
    fn kpi_identities() {
        let e = EnergyTotals {
            lighting_tier12_mwh: 29.2,
            lighting_tier3_mwh: 14.6,
            cooling_thermal_mwh: 40.0,
            cooling_electric_mwh: 10.0,
            heating_electric_mwh: 2.9,
            net_water_l: 9400.0,
            ..Default::default()
        };
        let k = kpis(&e, 9221.0, &[14.4; 365]);
        assert_relative_eq!(
            k.seec_kwh_kg.unwrap() * 9221.0,
            e.electricity_mwh() * 1000.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(k.seec_kwh_kg.unwrap(), 6.15, epsilon = 0.01);
        assert!(k.seec_kwh_kg <= k.sec_kwh_kg);
        assert_relative_eq!(k.mean_dli, 14.4, max_relative = 1e-12);
        let z = kpis(&e, 0.0, &[]);
        assert!(z.undefined);
        assert_eq!(z.seec_kwh_kg, None);
    }

    #[test]
    fn dli_of_sixteen_hour_day() {
        let mut day = vec![0.0; 24];
        day[4..20].iter_mut().for_each(|p| *p = 250.0);
        let dli = daily_light_integral(&day);
        assert_relative_eq!(dli[0], 14.4, max_relative = 1e-12);
    }
}
