//! Quadratic-cost calibration: pick the common level of the γ ladder so that
//! the equilibrium initial price hits a target, and sanity-lint a
//! configuration against declared aggregate emission statistics.

use crate::error::{Error, Result};
use crate::model::MarketConfig;
use crate::solver;

#[derive(Clone, Debug)]
pub struct CalibrationSpec {
    /// Desired P₀, €/ton; must lie strictly between 0 and the penalty.
    pub target_price: f64,
    /// Fixed per-firm increments added to the common level, €/ton².
    pub gamma_offsets: Vec<f64>,
    /// Search bracket (low, high) for the common level, €/ton².
    pub bracket: (f64, f64),
    /// Acceptable |P₀ − target|, €/ton.
    pub tolerance: f64,
}

const MAX_BISECT_ITER: usize = 200;

fn price_at_level(config: &MarketConfig, offsets: &[f64], level: f64) -> Result<f64> {
    let mut trial = config.clone();
    for (firm, offset) in trial.firms.iter_mut().zip(offsets) {
        firm.quadratic_cost = level + offset;
    }
    Ok(solver::solve_reduced(&trial)?.initial_price)
}

/// Find γ^i = level + offsets_i such that the solved equilibrium's initial
/// price matches `spec.target_price` within `spec.tolerance`, by bisection on
/// the common level. The price is increasing in the level, and both bracket
/// ends must straddle the target.
pub fn calibrate_gamma(config: &MarketConfig, spec: &CalibrationSpec) -> Result<Vec<f64>> {
    let n = config.n_firms();
    if spec.gamma_offsets.len() != n {
        return Err(Error::Dimension(format!(
            "{} gamma offsets for {} firms",
            spec.gamma_offsets.len(),
            n
        )));
    }
    let lambda = config.regulatory.penalty;
    if !(spec.target_price > 0.0 && spec.target_price < lambda) {
        return Err(Error::Invalid(format!(
            "target price {} must lie strictly between 0 and the penalty {}",
            spec.target_price, lambda
        )));
    }
    let (mut lo, mut hi) = spec.bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Invalid(format!("bracket ({lo}, {hi}) must satisfy 0 < low < high")));
    }
    if spec.gamma_offsets.iter().any(|&o| lo + o <= 0.0) {
        return Err(Error::Invalid(
            "every level + offset must stay positive at the low bracket end".into(),
        ));
    }
    if !(spec.tolerance > 0.0) {
        return Err(Error::Invalid(format!("tolerance {} must be positive", spec.tolerance)));
    }

    let p_lo = price_at_level(config, &spec.gamma_offsets, lo)?;
    let p_hi = price_at_level(config, &spec.gamma_offsets, hi)?;
    if p_lo > spec.target_price || p_hi < spec.target_price {
        return Err(Error::Bracket { low: p_lo, high: p_hi, target: spec.target_price });
    }

    let mut best_level = lo;
    let mut best_gap = (p_lo - spec.target_price).abs();
    for _ in 0..MAX_BISECT_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // The bracket has collapsed to adjacent floats.
            break;
        }
        let price = price_at_level(config, &spec.gamma_offsets, mid)?;
        let gap = (price - spec.target_price).abs();
        if gap < best_gap {
            best_gap = gap;
            best_level = mid;
        }
        if gap <= spec.tolerance {
            return Ok(spec.gamma_offsets.iter().map(|o| mid + o).collect());
        }
        if price < spec.target_price {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best_gap <= spec.tolerance {
        return Ok(spec.gamma_offsets.iter().map(|o| best_level + o).collect());
    }
    Err(Error::NoConvergence { iterations: MAX_BISECT_ITER, residual: best_gap })
}

/// Aggregate emission statistics a configuration claims to represent.
#[derive(Clone, Debug)]
pub struct DeclaredAggregates {
    /// Expected business-as-usual emissions over the whole horizon, tons.
    pub aggregate_mean_tons: f64,
    /// Standard deviation of those emissions, tons.
    pub aggregate_std_tons: f64,
    /// Pairwise correlation loading √ρ, if declared.
    pub common_factor_corr: Option<f64>,
}

const LINT_REL_TOL: f64 = 0.01;

/// Check the configuration against declared aggregates; returns one warning
/// per identity that misses by more than 1%, never an error.
pub fn lint_emission_calibration(
    config: &MarketConfig,
    declared: &DeclaredAggregates,
) -> Vec<String> {
    let mut warnings = Vec::new();
    let t = config.horizon() as f64;
    let q = t - 1.0;

    let mean: f64 = config.firms.iter().map(|f| t * f.mean_emission).sum();
    if relative_gap(mean, declared.aggregate_mean_tons) > LINT_REL_TOL {
        warnings.push(format!(
            "aggregate mean emissions: configuration implies {mean:.4e} tons, declared {:.4e} tons",
            declared.aggregate_mean_tons
        ));
    }

    let common: f64 = config
        .firms
        .iter()
        .map(|f| f.std_emission * f.common_factor_loading.sqrt())
        .sum();
    let idio: f64 = config
        .firms
        .iter()
        .map(|f| f.std_emission * f.std_emission * (1.0 - f.common_factor_loading))
        .sum();
    let std = (q * (common * common + idio)).sqrt();
    if relative_gap(std, declared.aggregate_std_tons) > LINT_REL_TOL {
        warnings.push(format!(
            "aggregate emission std: configuration implies {std:.4e} tons, declared {:.4e} tons",
            declared.aggregate_std_tons
        ));
    }

    if let Some(corr) = declared.common_factor_corr {
        for (i, f) in config.firms.iter().enumerate() {
            let loading = f.common_factor_loading.sqrt();
            if relative_gap(loading, corr) > LINT_REL_TOL {
                warnings.push(format!(
                    "common-factor loading of firm {}: configuration implies {loading:.4}, \
                     declared {corr:.4}",
                    i + 1
                ));
            }
        }
    }
    warnings
}

fn relative_gap(computed: f64, declared: f64) -> f64 {
    if declared == 0.0 {
        if computed == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (computed / declared - 1.0).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FirmParams, RegulatoryParams};

    fn config() -> MarketConfig {
        MarketConfig {
            regulatory: RegulatoryParams { penalty: 10.0, cap_fraction: 0.4, horizon: 6 },
            firms: vec![
                FirmParams {
                    linear_cost: 1.0,
                    quadratic_cost: 1.0,
                    mean_emission: 1.2,
                    std_emission: 0.4,
                    common_factor_loading: 0.5,
                },
                FirmParams {
                    linear_cost: 2.0,
                    quadratic_cost: 1.0,
                    mean_emission: 0.9,
                    std_emission: 0.3,
                    common_factor_loading: 0.5,
                },
            ],
        }
    }

    #[test]
    fn recovers_target_and_is_idempotent() {
        let cfg = config();
        let spec = CalibrationSpec {
            target_price: 6.0,
            gamma_offsets: vec![0.0, 0.5],
            bracket: (0.5, 50.0),
            tolerance: 1e-6,
        };
        let gamma = calibrate_gamma(&cfg, &spec).unwrap();
        assert!((gamma[1] - gamma[0] - 0.5).abs() < 1e-12);
        let mut calibrated = cfg.clone();
        for (f, g) in calibrated.firms.iter_mut().zip(&gamma) {
            f.quadratic_cost = *g;
        }
        let sol = crate::solver::solve_reduced(&calibrated).unwrap();
        assert!((sol.initial_price - 6.0).abs() <= 1e-6);
    }

    #[test]
    fn unreachable_target_is_rejected() {
        let cfg = config();
        let spec = CalibrationSpec {
            target_price: 10.0,
            gamma_offsets: vec![0.0, 0.0],
            bracket: (0.5, 50.0),
            tolerance: 0.01,
        };
        assert!(calibrate_gamma(&cfg, &spec).is_err());
    }

    #[test]
    fn bracket_must_straddle() {
        let cfg = config();
        let spec = CalibrationSpec {
            target_price: 6.0,
            gamma_offsets: vec![0.0, 0.5],
            bracket: (40.0, 50.0),
            tolerance: 0.01,
        };
        match calibrate_gamma(&cfg, &spec) {
            Err(Error::Bracket { low, high, target }) => {
                assert!(low > target || high < target);
            }
            other => panic!("expected a bracket error, got {other:?}"),
        }
    }

    #[test]
    fn lint_flags_each_identity() {
        let cfg = config();
        let t = cfg.horizon() as f64;
        let q = t - 1.0;
        let mean: f64 = cfg.firms.iter().map(|f| t * f.mean_emission).sum();
        let common: f64 = cfg
            .firms
            .iter()
            .map(|f| f.std_emission * f.common_factor_loading.sqrt())
            .sum();
        let idio: f64 = cfg
            .firms
            .iter()
            .map(|f| f.std_emission * f.std_emission * (1.0 - f.common_factor_loading))
            .sum();
        let std = (q * (common * common + idio)).sqrt();
        let good = DeclaredAggregates {
            aggregate_mean_tons: mean,
            aggregate_std_tons: std,
            common_factor_corr: Some(0.5f64.sqrt()),
        };
        assert!(lint_emission_calibration(&cfg, &good).is_empty());

        let bad = DeclaredAggregates {
            aggregate_mean_tons: 2.0 * mean,
            aggregate_std_tons: std,
            common_factor_corr: Some(0.92),
        };
        let warnings = lint_emission_calibration(&cfg, &bad);
        assert_eq!(warnings.len(), 3);
        assert!(warnings[0].contains("aggregate mean"));
    }
}
