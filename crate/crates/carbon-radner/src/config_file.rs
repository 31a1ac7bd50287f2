//! Run configuration files: a sectioned TOML schema with units spelled out in
//! the key names, mapped into a validated `MarketConfig` plus optional run
//! and calibration settings.

use std::path::Path;

use serde::Deserialize;

use crate::calibrate::{CalibrationSpec, DeclaredAggregates};
use crate::error::{Error, Result};
use crate::model::{FirmParams, MarketConfig, RegulatoryParams};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    regulatory: RawRegulatory,
    firms: Vec<RawFirm>,
    run: Option<RawRun>,
    calibration: Option<RawCalibration>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegulatory {
    lambda_eur_per_ton: f64,
    cap_fraction: f64,
    horizon_periods: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFirm {
    name: Option<String>,
    k_eur_per_ton: f64,
    gamma_eur_per_ton2: f64,
    mu_tons_per_period: f64,
    sigma_tons_per_period: f64,
    rho_common_factor: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    n_paths: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    target_price_eur_per_ton: f64,
    gamma_level_low_eur_per_ton2: f64,
    gamma_level_high_eur_per_ton2: f64,
    price_tolerance_eur_per_ton: Option<f64>,
    declared_aggregate_mean_tons: Option<f64>,
    declared_aggregate_std_tons: Option<f64>,
    declared_common_factor_corr: Option<f64>,
}

/// Simulation options of the `[run]` section, with defaults filled in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSettings {
    pub seed: u64,
    pub n_paths: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { seed: 7, n_paths: 100_000 }
    }
}

/// The `[calibration]` section: search settings plus optional declared
/// aggregates for linting.
#[derive(Clone, Debug)]
pub struct CalibrationSettings {
    pub target_price: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub declared: Option<DeclaredAggregates>,
}

impl CalibrationSettings {
    /// Calibration spec whose per-firm offsets reproduce the config's own γ
    /// ladder relative to the first firm.
    pub fn spec_for(&self, market: &MarketConfig) -> CalibrationSpec {
        let base = market.firms[0].quadratic_cost;
        CalibrationSpec {
            target_price: self.target_price,
            gamma_offsets: market.firms.iter().map(|f| f.quadratic_cost - base).collect(),
            bracket: self.bracket,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub market: MarketConfig,
    pub firm_names: Vec<String>,
    pub run: RunSettings,
    pub calibration: Option<CalibrationSettings>,
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().replace('\n', " ")))?;
    if raw.firms.is_empty() {
        return Err(Error::Config("at least one [[firms]] entry is required".into()));
    }
    let market = MarketConfig {
        regulatory: RegulatoryParams {
            penalty: raw.regulatory.lambda_eur_per_ton,
            cap_fraction: raw.regulatory.cap_fraction,
            horizon: raw.regulatory.horizon_periods,
        },
        firms: raw
            .firms
            .iter()
            .map(|f| FirmParams {
                linear_cost: f.k_eur_per_ton,
                quadratic_cost: f.gamma_eur_per_ton2,
                mean_emission: f.mu_tons_per_period,
                std_emission: f.sigma_tons_per_period,
                common_factor_loading: f.rho_common_factor,
            })
            .collect(),
    };
    market.validate()?;
    let firm_names = raw
        .firms
        .iter()
        .enumerate()
        .map(|(i, f)| f.name.clone().unwrap_or_else(|| format!("firm_{}", i + 1)))
        .collect();
    let defaults = RunSettings::default();
    let run = match &raw.run {
        Some(r) => RunSettings {
            seed: r.seed.unwrap_or(defaults.seed),
            n_paths: r.n_paths.unwrap_or(defaults.n_paths),
        },
        None => defaults,
    };
    let calibration = raw.calibration.as_ref().map(|c| {
        let declared = match (c.declared_aggregate_mean_tons, c.declared_aggregate_std_tons) {
            (Some(mean), Some(std)) => Some(DeclaredAggregates {
                aggregate_mean_tons: mean,
                aggregate_std_tons: std,
                common_factor_corr: c.declared_common_factor_corr,
            }),
            _ => None,
        };
        CalibrationSettings {
            target_price: c.target_price_eur_per_ton,
            bracket: (c.gamma_level_low_eur_per_ton2, c.gamma_level_high_eur_per_ton2),
            tolerance: c.price_tolerance_eur_per_ton.unwrap_or(0.01),
            declared,
        }
    });
    Ok(LoadedConfig { market, firm_names, run, calibration })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
