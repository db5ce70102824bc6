use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lpfarm::climate::{sun_path_table, synthetic::write_climate_csv};
use lpfarm::config::load_config;
use lpfarm::economics::{break_even_unit_cost, sensitivity_sweep};
use lpfarm::engine::report::{write_comparison, write_csv, write_json, write_simulation};
use lpfarm::engine::{
    calibrate, compare_scenarios, load_scenario_climate, run_scenario, PreparedScenario,
    BENCH_TARGET_KG,
};
use lpfarm::optics::trace_direct;
use lpfarm::optics::{build_table, DIRECT_ALTITUDES};
use lpfarm::{Error, LoadedConfig, Strategy};

#[derive(Parser)]
#[command(name = "lpfarm", version, about = "Light-pipe vertical farm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (or file, where noted).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario and tracer seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the optical efficiency tables and flux maps for the configured geometry.
    TraceOptics {
        #[command(flatten)]
        common: Common,
        /// Altitudes (degrees) at which to export flux maps.
        #[arg(long, value_delimiter = ',', default_value = "30,50,70,90")]
        flux_altitudes: Vec<f64>,
    },
    /// Fit the LUE scale so the benchmark yields the target; writes the artifact to --out.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = BENCH_TARGET_KG)]
        target_kg: f64,
    },
    /// Run one scenario over the year.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Replace the scenario id of the config.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Run a scenario set. `--config` is the base; each `--scenario` reuses it with that id,
    /// and extra configs can be listed after `--`.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        scenario: Vec<String>,
        /// Benchmark efficacies for the PPE table.
        #[arg(long, value_delimiter = ',', default_value = "2,2.5,3")]
        ppe: Vec<f64>,
        #[arg(last = true)]
        configs: Vec<PathBuf>,
    },
    /// Payback and break-even grids against the benchmark.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Scenario to price; defaults to the config's own.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Sun position table for the configured site.
    Sunpath {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        step_hours: f64,
    },
    /// Write the synthetic climate year as CSV.
    SynthClimate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Config(_) => (3, "config"),
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                (4, "missing_input")
            }
            Error::Climate(_) | Error::Table(_) => (4, "invalid_input"),
            Error::Calibration(_) => (6, "calibration"),
            Error::Io { .. } | Error::NonFinite { .. } | Error::Domain(_) => (5, "runtime"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: "usage",
        message: message.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn parse_strategy(name: &str) -> CliResult<Strategy> {
    Strategy::parse(name).map_err(|_| usage(format!("unknown scenario `{name}`")))
}

fn load(common: &Common, scenario: Option<&str>) -> CliResult<LoadedConfig> {
    let mut loaded = load_config(&common.config)?;
    if let Some(name) = scenario {
        let s = parse_strategy(name)?;
        if s != loaded.config.scenario.id {
            loaded.config.scenario.id = s;
            loaded.config.scenario.label = None;
        }
    }
    if let Some(seed) = common.seed {
        loaded.config.scenario.seed = seed;
        loaded.config.optics.trace.seed = seed;
    }
    loaded.config.optics.trace.workers = common.workers;
    loaded.config.validate()?;
    loaded.hash = loaded.config.hash(Some(loaded.base_dir()));
    Ok(loaded)
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn trace_optics(common: &Common, flux_altitudes: &[f64]) -> CliResult {
    let loaded = load(common, None)?;
    let cfg = &loaded.config;
    create_dir(&common.out)?;
    log::info!(
        "tracing {} altitudes and tilt rows with {} rays each",
        DIRECT_ALTITUDES.len(),
        cfg.optics.trace.rays
    );
    let table = build_table(&cfg.geometry, &cfg.optics.trace)?;
    table.export(&common.out)?;
    let flux_dir = common.out.join("flux");
    create_dir(&flux_dir)?;
    for &alt in flux_altitudes {
        let t = trace_direct(&cfg.geometry, alt, &cfg.optics.trace)?;
        let mut extra = serde_json::Map::new();
        extra.insert("altitude_deg".into(), alt.into());
        extra.insert("tilt_deg".into(), t.tilt_deg.into());
        extra.insert("eta".into(), t.eta.into());
        extra.insert("config_hash".into(), loaded.hash.clone().into());
        extra.insert("tool_version".into(), lpfarm::engine::TOOL_VERSION.into());
        t.flux
            .export(&flux_dir, &format!("direct_{alt:.0}"), &extra)?;
    }
    Ok(())
}

fn calibrate_cmd(common: &Common, target_kg: f64) -> CliResult {
    let mut loaded = load(common, None)?;
    if loaded.config.strategy() != Strategy::Bench {
        return Err(usage("calibrate takes the Bench scenario config"));
    }
    // The artifact being written must not gate its own fitting.
    loaded.config.calibration.path = None;
    loaded.config.calibration.require = false;
    let prep = PreparedScenario::from_loaded(&loaded)?;
    let climate = load_scenario_climate(&prep.config)?;
    let art = calibrate(&prep, &climate, target_kg)?;
    log::info!(
        "LUE scale {:.5} gives {:.1} kg after {} runs",
        art.lue_scale,
        art.achieved_kg,
        art.iterations
    );
    art.save(&common.out)?;
    Ok(())
}

fn simulate(common: &Common, scenario: Option<&str>) -> CliResult {
    let loaded = load(common, scenario)?;
    let prep = PreparedScenario::from_loaded(&loaded)?;
    let climate = load_scenario_climate(&prep.config)?;
    let result = run_scenario(&prep, &climate)?;
    write_simulation(&common.out, &result)?;
    log::info!(
        "{}: yield {:.0} kg, SEEC {:?} kWh/kg",
        result.meta.label,
        result.yields.normalized_kg,
        result.kpis.seec_kwh_kg
    );
    Ok(())
}

fn compare(common: &Common, scenarios: &[String], ppe: &[f64], extra: &[PathBuf]) -> CliResult {
    let mut loaded = Vec::new();
    if scenarios.is_empty() {
        loaded.push(load(common, None)?);
    }
    for name in scenarios {
        loaded.push(load(common, Some(name))?);
    }
    for path in extra {
        let c = Common {
            config: path.clone(),
            ..common.clone()
        };
        loaded.push(load(&c, None)?);
    }
    let climate = load_scenario_climate(&loaded[0].config)?;
    let preps = loaded
        .iter()
        .map(PreparedScenario::from_loaded)
        .collect::<Result<Vec<_>, _>>()?;
    let report = compare_scenarios(&preps, &climate, common.workers, ppe)?;
    write_comparison(&common.out, &report)?;
    for r in &report.rows {
        log::info!(
            "{}: yield {:.0} kg, SEEC {:?}",
            r.label,
            r.yield_kg,
            r.seec_kwh_kg
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct BreakEven {
    scenario: String,
    target_years: f64,
    unit_cost_now: f64,
    break_even_unit_cost: Option<f64>,
    required_reduction: Option<f64>,
    payback_years_now: Option<f64>,
}

fn sweep(common: &Common, scenario: Option<&str>) -> CliResult {
    let loaded = load(common, scenario)?;
    if loaded.config.strategy() == Strategy::Bench {
        return Err(usage("sweep needs a non-benchmark scenario"));
    }
    let mut bench_cfg = loaded.clone();
    bench_cfg.config.scenario.id = Strategy::Bench;
    bench_cfg.config.scenario.label = None;
    bench_cfg.hash = bench_cfg.config.hash(Some(bench_cfg.base_dir()));
    let prep = PreparedScenario::from_loaded(&loaded)?;
    let bench = PreparedScenario::from_loaded(&bench_cfg)?;
    let climate = load_scenario_climate(&prep.config)?;
    let no_trace = |mut p: PreparedScenario| {
        p.config.output.hourly_trace = false;
        p
    };
    let r = run_scenario(&no_trace(prep.clone()), &climate)?;
    let b = run_scenario(&no_trace(bench), &climate)?;
    let cfg = &prep.config;
    let rows = sensitivity_sweep(&r.economics, &b.economics, &cfg.costs, &cfg.sweep);
    create_dir(&common.out)?;
    write_csv(&common.out.join("sweep.csv"), &loaded.hash, &rows)?;
    let s = cfg.strategy();
    let unit = cfg.costs.lp_unit_cost(s);
    let be = break_even_unit_cost(
        &r.economics,
        &b.economics,
        &cfg.costs,
        cfg.sweep.target_years,
    );
    let summary = BreakEven {
        scenario: s.name().to_string(),
        target_years: cfg.sweep.target_years,
        unit_cost_now: unit,
        break_even_unit_cost: be,
        required_reduction: be.map(|c| 1.0 - c / unit),
        payback_years_now: lpfarm::economics::payback_time(&r.economics, &b.economics, &cfg.costs)
            .years,
    };
    write_json(&common.out.join("break_even.json"), &loaded.hash, &summary)?;
    Ok(())
}

fn site_config(config: Option<&Path>) -> CliResult<(lpfarm::ScenarioConfig, String)> {
    match config {
        Some(p) => {
            let l = load_config(p)?;
            Ok((l.config, l.hash))
        }
        None => {
            let c = lpfarm::ScenarioConfig::default();
            let h = c.hash(None);
            Ok((c, h))
        }
    }
}

fn sunpath(config: Option<&Path>, out: &Path, step: f64) -> CliResult {
    if !(step > 0.0 && step <= 24.0) {
        return Err(usage("--step-hours must be in (0, 24]"));
    }
    let (cfg, hash) = site_config(config)?;
    #[derive(Serialize)]
    struct Row {
        day_of_year: u32,
        clock_hour: f64,
        declination_deg: f64,
        equation_of_time_min: f64,
        solar_time_h: f64,
        hour_angle_deg: f64,
        altitude_deg: f64,
        azimuth_deg: f64,
        incidence_cosine: f64,
    }
    let rows: Vec<Row> = sun_path_table(&cfg.site, step)
        .into_iter()
        .map(|r| Row {
            day_of_year: r.position.day_of_year,
            clock_hour: r.clock_hour,
            declination_deg: r.position.declination_deg,
            equation_of_time_min: r.position.equation_of_time_min,
            solar_time_h: r.position.solar_time_h,
            hour_angle_deg: r.position.hour_angle_deg,
            altitude_deg: r.position.altitude_deg,
            azimuth_deg: r.position.azimuth_deg,
            incidence_cosine: r.incidence_cosine,
        })
        .collect();
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_csv(out, &hash, &rows)?;
    Ok(())
}

fn synth_climate(config: Option<&Path>, out: &Path) -> CliResult {
    let (cfg, _) = site_config(config)?;
    let series = cfg.climate.synthetic.generate(&cfg.site)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut buf = Vec::new();
    write_climate_csv(&series, &mut buf)?;
    fs::write(out, buf).map_err(|e| Error::io(out, e))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match &cli.command {
        Command::TraceOptics {
            common,
            flux_altitudes,
        } => trace_optics(common, flux_altitudes),
        Command::Calibrate { common, target_kg } => calibrate_cmd(common, *target_kg),
        Command::Simulate { common, scenario } => simulate(common, scenario.as_deref()),
        Command::Compare {
            common,
            scenario,
            ppe,
            configs,
        } => compare(common, scenario, ppe, configs),
        Command::Sweep { common, scenario } => sweep(common, scenario.as_deref()),
        Command::Sunpath {
            config,
            out,
            step_hours,
        } => sunpath(config.as_deref(), out, *step_hours),
        Command::SynthClimate { config, out } => synth_climate(config.as_deref(), out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let record = serde_json::json!({
                "error": f.kind,
                "exit_code": f.code,
                "message": f.message,
            });
            let _ = writeln!(std::io::stderr(), "{record}");
            ExitCode::from(f.code)
        }
    }
}
