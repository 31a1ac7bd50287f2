//! The benchmark market description and the reference values its generated
//! artifacts are checked against in the sidecar manifest.
//!
//! Conventions for the reference arrays: expected-excess-emission rows are in
//! 10⁶ tons, price rows in €/ton, elasticity rows dimensionless. Each array is
//! laid out exactly like the corresponding CSV artifact, one inner array per
//! row.

use crate::model::{FirmParams, MarketConfig, RegulatoryParams};

/// Common quadratic-cost level shared by the benchmark firms, calibrated so
/// the equilibrium initial price is 75.02 €/ton.
pub const GAMMA_LEVEL: f64 = 2.37835698117618336e-6;
/// Spacing of the quadratic-cost ladder across the eight benchmark firms.
pub const GAMMA_STEP: f64 = 0.05e-6;

pub const BENCHMARK_PENALTY: f64 = 100.0;
pub const BENCHMARK_CAP_FRACTION: f64 = 0.49;
pub const BENCHMARK_HORIZON: usize = 60;
pub const BENCHMARK_MEAN_EMISSION: f64 = 2.71e7;
pub const BENCHMARK_STD_EMISSION: f64 = 7.86e6;
pub const BENCHMARK_FACTOR_LOADING: f64 = 0.85;
pub const BENCHMARK_LINEAR_COSTS: [f64; 8] = [20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0];

/// Four cheap (power-sector) firms followed by four dear (industrial) firms.
pub const BENCHMARK_FIRM_NAMES: [&str; 8] = ["c1", "c2", "c3", "c4", "d1", "d2", "d3", "d4"];

/// The eight-firm, sixty-period benchmark market with the calibrated
/// quadratic-cost ladder.
pub fn benchmark_config() -> MarketConfig {
    MarketConfig {
        regulatory: RegulatoryParams {
            penalty: BENCHMARK_PENALTY,
            cap_fraction: BENCHMARK_CAP_FRACTION,
            horizon: BENCHMARK_HORIZON,
        },
        firms: BENCHMARK_LINEAR_COSTS
            .iter()
            .enumerate()
            .map(|(i, &k)| FirmParams {
                linear_cost: k,
                quadratic_cost: GAMMA_LEVEL + i as f64 * GAMMA_STEP,
                mean_emission: BENCHMARK_MEAN_EMISSION,
                std_emission: BENCHMARK_STD_EMISSION,
                common_factor_loading: BENCHMARK_FACTOR_LOADING,
            })
            .collect(),
    }
}

/// Single-firm two-period market small enough for exhaustive grid search.
pub fn toy_config() -> MarketConfig {
    MarketConfig {
        regulatory: RegulatoryParams { penalty: 8.0, cap_fraction: 0.3, horizon: 2 },
        firms: vec![FirmParams {
            linear_cost: 2.0,
            quadratic_cost: 8.0,
            mean_emission: 1.0,
            std_emission: 0.5,
            common_factor_loading: 0.5,
        }],
    }
}

pub const TABLE2_LEFT_LAMBDA_GRID: [f64; 4] = [70.0, 75.0, 90.0, 100.0];

/// Rows: EE, μ_P, elasticity of μ_P, then elasticities of the sixteen plan
/// components; columns over the penalty grid.
pub const TABLE2_LEFT_REFERENCE: [[f64; 4]; 19] = [
    [889.54, 35.60, 12.20, 9.48],
    [70.00, 74.91, 75.01, 75.02],
    [1.00, 0.18, 0.00, 0.00],
    [1.40, 0.24, 0.00, 0.00],
    [1.40, 0.23, -0.01, -0.01],
    [1.56, 0.27, 0.00, 0.00],
    [1.56, 0.26, -0.01, -0.01],
    [1.75, 0.30, 0.00, 0.00],
    [1.75, 0.30, -0.00, -0.00],
    [2.00, 0.33, 0.00, 0.00],
    [2.00, 0.35, 0.00, 0.00],
    [2.33, 0.38, 0.00, 0.00],
    [2.33, 0.41, 0.01, 0.01],
    [2.80, 0.45, 0.00, 0.00],
    [2.80, 0.50, 0.02, 0.02],
    [3.50, 0.54, 0.01, 0.00],
    [3.50, 0.61, 0.03, 0.03],
    [4.67, 0.67, 0.01, 0.01],
    [4.67, 0.78, 0.05, 0.04],
];

pub const TABLE2_RIGHT_CAP_GRID: [f64; 3] = [0.54, 0.49, 0.39];

/// Same row layout as `TABLE2_LEFT_REFERENCE`, columns over the cap grid.
pub const TABLE2_RIGHT_REFERENCE: [[f64; 3]; 19] = [
    [8.41, 9.48, 12.17],
    [71.30, 75.02, 82.48],
    [-0.56, -0.49, -0.35],
    [-0.78, -0.66, -0.47],
    [-0.79, -0.67, -0.47],
    [-0.87, -0.73, -0.51],
    [-0.88, -0.74, -0.51],
    [-0.97, -0.81, -0.55],
    [-0.98, -0.81, -0.56],
    [-1.11, -0.91, -0.61],
    [-1.11, -0.91, -0.61],
    [-1.29, -1.04, -0.68],
    [-1.28, -1.04, -0.68],
    [-1.53, -1.22, -0.78],
    [-1.52, -1.21, -0.77],
    [-1.89, -1.46, -0.90],
    [-1.86, -1.44, -0.88],
    [-2.47, -1.82, -1.06],
    [-2.42, -1.79, -1.04],
];

/// Rows: the sixteen cost parameters (linear ladder, then quadratic ladder);
/// columns: elasticity of μ_P, then of the sixteen plan components.
pub const TABLE3_REFERENCE: [[f64; 17]; 16] = [
    [0.04, -0.31, -0.31, 0.05, 0.05, 0.06, 0.06, 0.07, 0.07, 0.08, 0.08, 0.09, 0.09, 0.11, 0.11, 0.13, 0.13],
    [0.04, 0.06, 0.06, -0.43, -0.43, 0.07, 0.07, 0.08, 0.08, 0.09, 0.09, 0.11, 0.11, 0.13, 0.13, 0.16, 0.16],
    [0.05, 0.07, 0.07, 0.08, 0.08, -0.58, -0.57, 0.10, 0.09, 0.11, 0.11, 0.13, 0.13, 0.15, 0.15, 0.19, 0.19],
    [0.06, 0.08, 0.08, 0.09, 0.09, 0.10, 0.10, -0.76, -0.75, 0.13, 0.12, 0.15, 0.14, 0.18, 0.17, 0.22, 0.21],
    [0.07, 0.09, 0.09, 0.10, 0.10, 0.11, 0.11, 0.12, 0.12, -1.00, -0.99, 0.16, 0.16, 0.20, 0.19, 0.25, 0.24],
    [0.07, 0.10, 0.10, 0.11, 0.11, 0.12, 0.12, 0.14, 0.13, 0.16, 0.15, -1.32, -1.30, 0.22, 0.21, 0.27, 0.26],
    [0.08, 0.11, 0.11, 0.12, 0.12, 0.13, 0.13, 0.15, 0.15, 0.17, 0.17, 0.20, 0.19, -1.76, -1.73, 0.30, 0.28],
    [0.09, 0.12, 0.12, 0.13, 0.13, 0.14, 0.14, 0.16, 0.16, 0.18, 0.18, 0.21, 0.21, 0.26, 0.24, -2.43, -2.38],
    [0.10, -0.87, -0.86, 0.15, 0.14, 0.16, 0.16, 0.18, 0.18, 0.21, 0.21, 0.24, 0.24, 0.29, 0.29, 0.37, 0.37],
    [0.09, 0.12, 0.12, -0.87, -0.86, 0.15, 0.14, 0.16, 0.16, 0.19, 0.18, 0.22, 0.22, 0.26, 0.26, 0.33, 0.32],
    [0.08, 0.10, 0.10, 0.12, 0.11, -0.87, -0.86, 0.14, 0.14, 0.16, 0.16, 0.19, 0.19, 0.23, 0.23, 0.29, 0.28],
    [0.07, 0.09, 0.09, 0.10, 0.10, 0.11, 0.11, -0.87, -0.86, 0.14, 0.14, 0.17, 0.16, 0.20, 0.20, 0.25, 0.24],
    [0.06, 0.08, 0.08, 0.09, 0.09, 0.10, 0.10, 0.11, 0.11, -0.88, -0.87, 0.14, 0.14, 0.17, 0.17, 0.22, 0.21],
    [0.05, 0.07, 0.07, 0.07, 0.07, 0.08, 0.08, 0.09, 0.09, 0.10, 0.10, -0.88, -0.87, 0.15, 0.14, 0.18, 0.17],
    [0.04, 0.05, 0.06, 0.06, 0.06, 0.07, 0.07, 0.07, 0.07, 0.09, 0.08, 0.10, 0.10, -0.88, -0.87, 0.15, 0.14],
    [0.03, 0.04, 0.04, 0.05, 0.05, 0.05, 0.05, 0.06, 0.06, 0.07, 0.07, 0.08, 0.08, 0.09, 0.09, -0.88, -0.88],
];

pub const TABLE4_KC1_GRID: [f64; 5] = [15.0, 17.5, 20.0, 22.5, 25.0];

/// Rows: EE, μ_P; columns over the first firm's linear-cost grid.
pub const TABLE4_KC1_REFERENCE: [[f64; 5]; 2] = [
    [10.08, 9.77, 9.48, 9.21, 8.96],
    [74.35, 74.69, 75.02, 75.36, 75.69],
];

pub const TABLE4_KD4_GRID: [f64; 5] = [45.0, 47.5, 50.0, 52.5, 55.0];

/// Rows: EE, μ_P; columns over the last firm's linear-cost grid.
pub const TABLE4_KD4_REFERENCE: [[f64; 5]; 2] = [
    [8.12, 8.41, 8.74, 9.09, 9.48],
    [73.86, 74.15, 74.44, 74.73, 75.02],
];

pub const TABLE5_MU_GRID: [f64; 3] = [2.55e7, 2.71e7, 2.86e7];

/// Same row layout as `TABLE2_LEFT_REFERENCE`, columns over the shared
/// mean-emission grid.
pub const TABLE5_MU_REFERENCE: [[f64; 3]; 19] = [
    [9.37, 9.48, 9.61],
    [73.14, 75.04, 76.85],
    [0.41, 0.43, 0.45],
    [-0.43, -0.41, -0.39],
    [-0.25, -0.25, -0.24],
    [-0.37, -0.35, -0.33],
    [-0.19, -0.19, -0.19],
    [-0.30, -0.28, -0.26],
    [-0.13, -0.12, -0.12],
    [-0.21, -0.19, -0.18],
    [-0.04, -0.04, -0.04],
    [-0.09, -0.07, -0.06],
    [0.07, 0.07, 0.07],
    [0.07, 0.08, 0.08],
    [0.23, 0.22, 0.21],
    [0.30, 0.29, 0.29],
    [0.44, 0.42, 0.40],
    [0.66, 0.62, 0.58],
    [0.78, 0.72, 0.68],
];

pub const TABLE5_SIGMA_GRID: [f64; 3] = [0.61e7, 0.79e7, 0.96e7];

/// Same row layout as `TABLE2_LEFT_REFERENCE`, columns over the shared
/// emission-volatility grid.
pub const TABLE5_SIGMA_REFERENCE: [[f64; 3]; 19] = [
    [7.34, 9.53, 11.65],
    [73.90, 75.05, 76.40],
    [0.05, 0.08, 0.11],
    [0.06, 0.10, 0.15],
    [-0.04, -0.05, -0.07],
    [0.07, 0.11, 0.16],
    [-0.03, -0.04, -0.06],
    [0.08, 0.13, 0.18],
    [-0.02, -0.03, -0.04],
    [0.09, 0.14, 0.20],
    [-0.01, -0.01, -0.02],
    [0.10, 0.16, 0.23],
    [0.01, 0.01, 0.01],
    [0.12, 0.19, 0.27],
    [0.03, 0.04, 0.05],
    [0.14, 0.23, 0.32],
    [0.05, 0.08, 0.10],
    [0.18, 0.28, 0.39],
    [0.09, 0.14, 0.18],
];

pub const TABLE6_RHO_GRID: [f64; 5] = [0.71, 0.78, 0.85, 0.92, 0.99];

/// Same row layout as `TABLE2_LEFT_REFERENCE`, columns over the shared
/// factor-loading grid.
pub const TABLE6_RHO_REFERENCE: [[f64; 5]; 19] = [
    [13.11, 11.44, 9.48, 6.95, 2.48],
    [75.02, 75.02, 75.02, 75.02, 74.95],
    [-0.03, -0.03, -0.03, -0.03, -0.11],
    [-0.04, -0.04, -0.04, -0.05, -0.14],
    [0.03, 0.04, 0.04, 0.05, 0.09],
    [-0.05, -0.05, -0.05, -0.05, -0.16],
    [0.03, 0.03, 0.03, 0.04, 0.08],
    [-0.05, -0.05, -0.05, -0.06, -0.18],
    [0.02, 0.02, 0.02, 0.03, 0.05],
    [-0.06, -0.06, -0.06, -0.06, -0.20],
    [0.01, 0.01, 0.01, 0.01, 0.03],
    [-0.07, -0.07, -0.07, -0.07, -0.23],
    [-0.00, -0.00, -0.00, -0.00, -0.00],
    [-0.08, -0.08, -0.08, -0.09, -0.26],
    [-0.02, -0.02, -0.02, -0.03, -0.04],
    [-0.09, -0.10, -0.10, -0.10, -0.32],
    [-0.04, -0.05, -0.05, -0.06, -0.10],
    [-0.12, -0.12, -0.12, -0.13, -0.40],
    [-0.08, -0.08, -0.09, -0.10, -0.18],
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_config_is_valid() {
        benchmark_config().validate().unwrap();
        toy_config().validate().unwrap();
    }

    #[test]
    fn gamma_ladder_is_increasing_from_the_calibrated_level() {
        let config = benchmark_config();
        assert_eq!(config.firms[0].quadratic_cost, GAMMA_LEVEL);
        for pair in config.firms.windows(2) {
            let step = pair[1].quadratic_cost - pair[0].quadratic_cost;
            assert!((step - GAMMA_STEP).abs() < 1e-20);
        }
    }
}
