//! Hourly simulation of a three-tier container vertical farm whose top tier
//! can be daylit through an array of mirrored light pipes.
//!
//! The pieces compose as climate → sun position → optical efficiency tables
//! → tier-3 lighting control → chamber energy balance → crop growth, all
//! driven by [`engine::run_scenario`]. Economic figures are computed after
//! the fact from the annual totals.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod climate;
pub mod config;
pub mod crop;
pub mod economics;
pub mod engine;
pub mod error;
pub mod lighting;
pub mod optics;
pub mod thermal;

pub use climate::{solar_position, ClimateRecord, ClimateSeries, SiteConfig, SolarPosition};
pub use config::{load_config, LoadedConfig, ScenarioConfig};
pub use crop::{CropParams, LueTable, TierState};
pub use economics::{CostTable, EnergyTotals, KpiReport, LightCostReference, Payback};
pub use engine::{
    calibrate, compare_scenarios, run_scenario, CalibrationArtifact, CalibrationState,
    ComparisonReport, PreparedScenario, SimulationResult,
};
pub use error::{Error, Result};
pub use lighting::{LightingCommand, Strategy};
pub use optics::{LpGeometry, OpticalEfficiencyTable, TraceConfig};
pub use thermal::PowerBreakdown;
