//! LED electrical model and tier-3 control strategies, including PWM driver
//! part-load efficiency and the electrochromic film.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Bench,
    #[serde(rename = "LP_NL")]
    LpNl,
    #[serde(rename = "LP_Min_200")]
    LpMin200,
    #[serde(rename = "LP_Min_250")]
    LpMin250,
    #[serde(rename = "LP_Dim")]
    LpDim,
    #[serde(rename = "LP_Dim_IR_98")]
    LpDimIr98,
    #[serde(rename = "LP_Dim_IR_90")]
    LpDimIr90,
    #[serde(rename = "LP_Dim_EC")]
    LpDimEc,
    #[serde(rename = "GH")]
    Gh,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::Bench,
        Strategy::LpNl,
        Strategy::LpMin200,
        Strategy::LpMin250,
        Strategy::LpDim,
        Strategy::LpDimIr98,
        Strategy::LpDimIr90,
        Strategy::LpDimEc,
        Strategy::Gh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bench => "Bench",
            Strategy::LpNl => "LP_NL",
            Strategy::LpMin200 => "LP_Min_200",
            Strategy::LpMin250 => "LP_Min_250",
            Strategy::LpDim => "LP_Dim",
            Strategy::LpDimIr98 => "LP_Dim_IR_98",
            Strategy::LpDimIr90 => "LP_Dim_IR_90",
            Strategy::LpDimEc => "LP_Dim_EC",
            Strategy::Gh => "GH",
        }
    }

    pub fn parse(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown strategy `{s}`")))
    }

    pub fn uses_light_pipes(self) -> bool {
        !matches!(self, Strategy::Bench | Strategy::Gh)
    }

    /// PWM-dimmed strategies draw through the part-load driver.
    pub fn uses_pwm(self) -> bool {
        matches!(
            self,
            Strategy::LpDim | Strategy::LpDimIr98 | Strategy::LpDimIr90 | Strategy::LpDimEc
        )
    }

    /// Visible transmittance of a passive UV-IR filter, if fitted.
    pub fn filter_tau(self) -> Option<f64> {
        match self {
            Strategy::LpDimIr98 => Some(0.98),
            Strategy::LpDimIr90 => Some(0.90),
            _ => None,
        }
    }

    pub fn has_ec_film(self) -> bool {
        self == Strategy::LpDimEc
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedArray {
    pub ppe: f64,
    pub area_m2: f64,
    pub nominal_ppfd: f64,
    pub photoperiod_start_h: f64,
    pub photoperiod_end_h: f64,
}

impl Default for LedArray {
    fn default() -> Self {
        LedArray {
            ppe: 2.5,
            area_m2: 90.0,
            nominal_ppfd: 250.0,
            photoperiod_start_h: 4.0,
            photoperiod_end_h: 20.0,
        }
    }
}

impl LedArray {
    pub fn validate(&self) -> Result<()> {
        if !(self.ppe > 0.0 && self.area_m2 > 0.0 && self.nominal_ppfd >= 0.0) {
            return Err(Error::config("LED PPE and area must be > 0"));
        }
        if !(0.0..=24.0).contains(&self.photoperiod_start_h)
            || !(0.0..=24.0).contains(&self.photoperiod_end_h)
        {
            return Err(Error::config("photoperiod bounds must lie in [0, 24] h"));
        }
        Ok(())
    }

    pub fn nominal_power_w(&self) -> f64 {
        led_electric_power(self.nominal_ppfd, self.area_m2, self.ppe, 1.0)
    }

    /// Whether the clock hour starting at `hour` lies in the photoperiod.
    /// Windows may wrap past midnight.
    pub fn is_lit(&self, hour: f64) -> bool {
        let (a, b) = (self.photoperiod_start_h, self.photoperiod_end_h);
        if a <= b {
            hour >= a && hour < b
        } else {
            hour >= a || hour < b
        }
    }

    pub fn photoperiod_hours(&self) -> f64 {
        (self.photoperiod_end_h - self.photoperiod_start_h).rem_euclid(24.0)
    }
}

pub fn led_electric_power(ppfd: f64, area_m2: f64, ppe: f64, driver_eff: f64) -> f64 {
    ppfd.max(0.0) * area_m2 / ppe / driver_eff
}

/// Part-load driver efficiency. An empty sample list means the curve is
/// flat at `nominal_efficiency`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverCurve {
    pub nominal_efficiency: f64,
    /// `(dim fraction, efficiency)` pairs.
    pub samples: Vec<(f64, f64)>,
    pub min_dim: f64,
}

impl Default for DriverCurve {
    fn default() -> Self {
        DriverCurve {
            nominal_efficiency: 0.95,
            samples: Vec::new(),
            min_dim: 0.3,
        }
    }
}

impl DriverCurve {
    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_efficiency > 0.0 && self.nominal_efficiency <= 1.0) {
            return Err(Error::config("driver efficiency must be in (0, 1]"));
        }
        if !(self.min_dim > 0.0 && self.min_dim <= 1.0) {
            return Err(Error::config("minimum dim fraction must be in (0, 1]"));
        }
        if self.samples.is_empty() {
            return Ok(());
        }
        if self.samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config("driver curve dim fractions must increase"));
        }
        if self.samples.iter().any(|(_, e)| !(*e > 0.0 && *e <= 1.0)) {
            return Err(Error::config("driver curve efficiencies must be in (0, 1]"));
        }
        let first = self.samples[0].0;
        let last = self.samples[self.samples.len() - 1].0;
        if first > self.min_dim + 1e-12 || last < 1.0 - 1e-12 {
            return Err(Error::config(
                "driver curve must cover the minimum dim fraction and full output",
            ));
        }
        Ok(())
    }
}

/// Driver efficiency at `dim`; `None` when the LEDs are off.
pub fn driver_efficiency(dim: f64, curve: &DriverCurve) -> Result<Option<f64>> {
    if dim == 0.0 {
        return Ok(None);
    }
    if dim < curve.min_dim - 1e-12 || dim > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "dim fraction {dim} outside {{0}} ∪ [{}, 1]",
            curve.min_dim
        )));
    }
    let s = &curve.samples;
    if s.is_empty() {
        return Ok(Some(curve.nominal_efficiency));
    }
    if dim <= s[0].0 {
        return Ok(Some(s[0].1));
    }
    for w in s.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if dim <= x1 {
            return Ok(Some(y0 + (y1 - y0) * (dim - x0) / (x1 - x0)));
        }
    }
    Ok(Some(s[s.len() - 1].1))
}

/// Ratio-of-quadratics voltage–transmittance curve of the switchable film,
/// evaluated over a bounded voltage domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcFilm {
    pub numerator: [f64; 3],
    pub denominator: [f64; 3],
    pub v_min: f64,
    pub v_max: f64,
    /// Voltage resolution of the bracketing scan.
    pub scan_step_v: f64,
}

impl Default for EcFilm {
    fn default() -> Self {
        EcFilm {
            numerator: [0.1331, -0.5184, 8.4437],
            denominator: [0.1811, -0.8825, 15.5613],
            v_min: 0.0,
            v_max: 60.0,
            scan_step_v: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcRange {
    pub v_tau_min: f64,
    pub tau_min: f64,
    pub v_tau_max: f64,
    pub tau_max: f64,
    /// The curve is not monotone between its extrema.
    pub non_monotone: bool,
}

impl EcFilm {
    pub fn tau(&self, v: f64) -> f64 {
        let [a, b, c] = self.numerator;
        let [d, e, f] = self.denominator;
        (a * v * v + b * v + c) / (d * v * v + e * v + f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > self.v_min && self.scan_step_v > 0.0) {
            return Err(Error::config("film voltage domain is empty"));
        }
        let r = self.range();
        if !(r.tau_min > 0.0 && r.tau_max <= 1.0) {
            return Err(Error::config(
                "film transmittance leaves (0, 1] on its domain",
            ));
        }
        Ok(())
    }

    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.v_max - self.v_min) / self.scan_step_v).ceil() as usize;
        (0..=n).map(move |i| (self.v_min + i as f64 * self.scan_step_v).min(self.v_max))
    }

    /// Extremes of τ over the domain, located by scanning.
    pub fn range(&self) -> EcRange {
        let mut lo = (self.v_min, self.tau(self.v_min));
        let mut hi = lo;
        for v in self.grid() {
            let t = self.tau(v);
            if t < lo.1 {
                lo = (v, t);
            }
            if t > hi.1 {
                hi = (v, t);
            }
        }
        let (a, b) = if lo.0 <= hi.0 {
            (lo.0, hi.0)
        } else {
            (hi.0, lo.0)
        };
        let rising = lo.0 <= hi.0;
        let mut prev = self.tau(a);
        let mut non_monotone = false;
        for v in self.grid().filter(|v| *v > a && *v <= b) {
            let t = self.tau(v);
            if (rising && t < prev) || (!rising && t > prev) {
                non_monotone = true;
            }
            prev = t;
        }
        EcRange {
            v_tau_min: lo.0,
            tau_min: lo.1,
            v_tau_max: hi.0,
            tau_max: hi.1,
            non_monotone,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcCommand {
    pub voltage: f64,
    pub tau: f64,
    pub ppfd_out: f64,
    /// Even the darkest state leaves PPFD above the cap.
    pub cap_unreachable: bool,
}

/// Chooses the film state passing the most light while keeping the canopy
/// at or below `cap`.
pub fn ec_control(ppfd_raw: f64, cap: f64, film: &EcFilm, range: &EcRange) -> EcCommand {
    let raw = ppfd_raw.max(0.0);
    let mk = |voltage: f64, tau: f64, flag| EcCommand {
        voltage,
        tau,
        ppfd_out: raw * tau,
        cap_unreachable: flag,
    };
    if raw * range.tau_max <= cap {
        return mk(range.v_tau_max, range.tau_max, false);
    }
    let target = cap / raw;
    if target <= range.tau_min {
        return mk(range.v_tau_min, range.tau_min, target < range.tau_min);
    }
    // Bisect between the extrema for τ(v) = target, keeping the side ≤ target.
    let (mut below, mut above) = (range.v_tau_min, range.v_tau_max);
    for _ in 0..100 {
        let mid = 0.5 * (below + above);
        if film.tau(mid) <= target {
            below = mid;
        } else {
            above = mid;
        }
        if (above - below).abs() < 1e-12 {
            break;
        }
    }
    mk(below, film.tau(below), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    /// Daylight below which LP_Min switches LEDs on.
    pub min_threshold: f64,
    pub dim_setpoint: f64,
    pub ec_cap: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            min_threshold: 100.0,
            dim_setpoint: 250.0,
            ec_cap: 400.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LightingCommand {
    pub led_ppfd: f64,
    /// 0 when off, otherwise in [min_dim, 1].
    pub dim: f64,
    pub ec_voltage: Option<f64>,
    pub ec_tau: Option<f64>,
    pub ec_cap_unreachable: bool,
    /// Daylight reaching the canopy after any film.
    pub daylight_ppfd: f64,
    pub total_ppfd: f64,
}

/// Daylight-dependent tier-3 command for the clock hour starting at `hour`.
/// `daylight` is canopy PPFD from the pipes or glazing before any
/// switchable film; passive filters are already applied by the caller.
pub fn control_tier3(
    strategy: Strategy,
    daylight: f64,
    hour: f64,
    led: &LedArray,
    driver: &DriverCurve,
    ctl: &ControlConfig,
    film: Option<(&EcFilm, &EcRange)>,
) -> LightingCommand {
    let mut cmd = LightingCommand {
        daylight_ppfd: daylight.max(0.0),
        ..Default::default()
    };
    if strategy == Strategy::Bench {
        cmd.daylight_ppfd = 0.0;
    }
    if strategy.has_ec_film() {
        if let Some((f, r)) = film {
            let ec = ec_control(daylight, ctl.ec_cap, f, r);
            cmd.ec_voltage = Some(ec.voltage);
            cmd.ec_tau = Some(ec.tau);
            cmd.ec_cap_unreachable = ec.cap_unreachable;
            cmd.daylight_ppfd = ec.ppfd_out;
        }
    }
    let lit = led.is_lit(hour);
    let (led_ppfd, dim) = match strategy {
        _ if !lit => (0.0, 0.0),
        Strategy::Bench => (led.nominal_ppfd, 1.0),
        Strategy::LpNl | Strategy::Gh => (0.0, 0.0),
        Strategy::LpMin200 | Strategy::LpMin250 => {
            let nominal = if strategy == Strategy::LpMin200 {
                200.0
            } else {
                250.0
            };
            if cmd.daylight_ppfd < ctl.min_threshold {
                (nominal, 1.0)
            } else {
                (0.0, 0.0)
            }
        }
        Strategy::LpDim | Strategy::LpDimIr98 | Strategy::LpDimIr90 | Strategy::LpDimEc => {
            let need = ctl.dim_setpoint - cmd.daylight_ppfd;
            let floor = driver.min_dim * ctl.dim_setpoint;
            if need <= 0.0 || need < floor - 1e-9 {
                (0.0, 0.0)
            } else {
                (need, need / ctl.dim_setpoint)
            }
        }
    };
    cmd.led_ppfd = led_ppfd;
    cmd.dim = dim;
    cmd.total_ppfd = led_ppfd + cmd.daylight_ppfd;
    cmd
}

/// Electrical draw of the tier-3 LEDs for a command.
pub fn tier3_power(
    strategy: Strategy,
    cmd: &LightingCommand,
    area_m2: f64,
    ppe: f64,
    driver: &DriverCurve,
) -> Result<f64> {
    if cmd.led_ppfd <= 0.0 {
        return Ok(0.0);
    }
    let eff = if strategy.uses_pwm() {
        driver_efficiency(cmd.dim, driver)?.unwrap_or(1.0)
    } else {
        1.0
    };
    Ok(led_electric_power(cmd.led_ppfd, area_m2, ppe, eff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tier3() -> LedArray {
        LedArray {
            area_m2: 30.0,
            ..Default::default()
        }
    }

    fn cmd(s: Strategy, daylight: f64) -> LightingCommand {
        let film = EcFilm::default();
        let range = film.range();
        control_tier3(
            s,
            daylight,
            12.0,
            &tier3(),
            &DriverCurve::default(),
            &ControlConfig::default(),
            Some((&film, &range)),
        )
    }

    #[test]
    fn nominal_powers() {
        for (ppe, kw) in [(2.0, 11.25), (2.5, 9.0), (3.0, 7.5)] {
            assert_relative_eq!(
                led_electric_power(250.0, 90.0, ppe, 1.0),
                kw * 1000.0,
                max_relative = 1e-12
            );
        }
        assert_eq!(led_electric_power(0.0, 90.0, 3.0, 1.0), 0.0);
    }

    #[test]
    fn driver_curve_lookup() {
        let flat = DriverCurve::default();
        assert_eq!(driver_efficiency(1.0, &flat).unwrap(), Some(0.95));
        assert_eq!(driver_efficiency(0.0, &flat).unwrap(), None);
        assert!(driver_efficiency(0.2, &flat).is_err());
        let two = DriverCurve {
            samples: vec![(0.3, 0.88), (1.0, 0.95)],
            ..Default::default()
        };
        two.validate().unwrap();
        assert_relative_eq!(driver_efficiency(0.3, &two).unwrap().unwrap(), 0.88);
        assert_relative_eq!(
            driver_efficiency(0.65, &two).unwrap().unwrap(),
            0.915,
            epsilon = 1e-12
        );
    }

    #[test]
    fn strategy_examples() {
        let c = cmd(Strategy::LpMin250, 99.0);
        assert_eq!(c.led_ppfd, 250.0);
        assert_eq!(c.total_ppfd, 349.0);
        let c = cmd(Strategy::LpDim, 180.0);
        assert_eq!(c.led_ppfd, 0.0);
        assert_eq!(c.total_ppfd, 180.0);
        let c = cmd(Strategy::LpDim, 0.0);
        assert_eq!((c.led_ppfd, c.dim), (250.0, 1.0));
        let c = cmd(Strategy::Bench, 500.0);
        assert_eq!((c.led_ppfd, c.total_ppfd), (250.0, 250.0));
        assert_eq!(cmd(Strategy::LpNl, 0.0).led_ppfd, 0.0);
        assert_eq!(cmd(Strategy::Gh, 30.0).total_ppfd, 30.0);
    }

    #[test]
    fn dim_holds_setpoint_in_band() {
        for d in [0.0, 10.0, 100.0, 174.9, 175.0] {
            let c = cmd(Strategy::LpDim, d);
            assert_relative_eq!(c.total_ppfd, 250.0, epsilon = 1e-9);
            assert!(c.dim >= 0.3 && c.dim <= 1.0);
        }
        assert_eq!(cmd(Strategy::LpDim, 175.1).led_ppfd, 0.0);
        assert_eq!(cmd(Strategy::LpDim, 300.0).total_ppfd, 300.0);
    }

    #[test]
    fn lights_off_outside_photoperiod() {
        let led = tier3();
        assert!(led.is_lit(4.0));
        assert!(led.is_lit(19.0));
        assert!(!led.is_lit(20.0));
        assert!(!led.is_lit(3.0));
        assert_eq!(led.photoperiod_hours(), 16.0);
        let c = control_tier3(
            Strategy::Bench,
            0.0,
            22.0,
            &led,
            &DriverCurve::default(),
            &ControlConfig::default(),
            None,
        );
        assert_eq!(c.led_ppfd, 0.0);
    }

    #[test]
    fn film_curve_endpoints() {
        let f = EcFilm::default();
        assert_relative_eq!(f.tau(0.0), 0.5426, epsilon = 1e-4);
        assert_relative_eq!(f.tau(1e7), 0.735, epsilon = 1e-3);
        let r = f.range();
        assert!(!r.non_monotone);
        assert!(r.tau_max > 0.74 && r.tau_max < 0.745);
        assert!(r.v_tau_min < r.v_tau_max);
    }

    #[test]
    fn film_caps_daylight() {
        let f = EcFilm::default();
        let r = f.range();
        let passive = ec_control(300.0, 400.0, &f, &r);
        assert_eq!(passive.tau, r.tau_max);
        assert_relative_eq!(passive.ppfd_out, 300.0 * r.tau_max);
        let capped = ec_control(650.0, 400.0, &f, &r);
        assert!(capped.ppfd_out <= 400.0);
        assert_relative_eq!(capped.ppfd_out, 400.0, epsilon = 1e-6);
        let hopeless = ec_control(2000.0, 400.0, &f, &r);
        assert!(hopeless.cap_unreachable);
        assert_eq!(hopeless.tau, r.tau_min);
    }

    #[test]
    fn pwm_power_uses_driver() {
        let c = cmd(Strategy::LpDim, 0.0);
        let p = tier3_power(Strategy::LpDim, &c, 30.0, 2.5, &DriverCurve::default()).unwrap();
        assert_relative_eq!(p, 3000.0 / 0.95, max_relative = 1e-12);
        let b = cmd(Strategy::Bench, 0.0);
        let p = tier3_power(Strategy::Bench, &b, 30.0, 2.5, &DriverCurve::default()).unwrap();
        assert_relative_eq!(p, 3000.0, max_relative = 1e-12);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(Strategy::parse(s.name()).unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
        assert!(Strategy::parse("LP_Max").is_err());
    }
}
