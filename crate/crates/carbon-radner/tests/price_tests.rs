//! Price-process checks: the Owen-based variance profile against direct
//! quadrature of the defining expectation, exact endpoint values, martingale
//! structure, and the pathwise price formula.

use carbon_radner::gauss::{adaptive_simpson, normal_cdf, normal_pdf};
use carbon_radner::model::{
    loading_norm_sq, mean_net_emissions, total_norm_sq, AbatementPlan, FirmParams, MarketConfig,
    RegulatoryParams,
};
use carbon_radner::price::{
    information_ratio, price_at, price_mean, price_moments, price_variance, ShockPrefix,
};
use carbon_radner::solver::solve_reduced;
use carbon_radner::targets;

fn two_firm_case() -> (MarketConfig, AbatementPlan) {
    let config = MarketConfig {
        regulatory: RegulatoryParams { penalty: 50.0, cap_fraction: 0.4, horizon: 10 },
        firms: vec![
            FirmParams {
                linear_cost: 10.0,
                quadratic_cost: 0.01,
                mean_emission: 120.0,
                std_emission: 250.0,
                common_factor_loading: 0.6,
            },
            FirmParams {
                linear_cost: 18.0,
                quadratic_cost: 0.02,
                mean_emission: 80.0,
                std_emission: 200.0,
                common_factor_loading: 0.3,
            },
        ],
    };
    let plan = AbatementPlan::reduced(vec![0.25, 0.1], vec![0.2, 0.15]);
    (config, plan)
}

/// Var[P_t] integrated straight from the definition: P_t = λΦ((m + √(tv)W)/
/// √((T−1−t)v + (1−a)²)) with W standard normal. Returns (mean, variance).
fn direct_moments(config: &MarketConfig, plan: &AbatementPlan, t: usize) -> (f64, f64) {
    let lambda = config.regulatory.penalty;
    let q = (config.horizon() - 1) as f64;
    let m = mean_net_emissions(config, plan).unwrap();
    let v = loading_norm_sq(config, plan, 1).unwrap();
    let cap = (1.0 - config.regulatory.cap_fraction).powi(2);
    let denom = ((q - t as f64) * v + cap).sqrt();
    let sd = (t as f64 * v).sqrt();
    let moment = |k: i32| {
        adaptive_simpson(
            |w: f64| normal_cdf((m + sd * w) / denom).powi(k) * normal_pdf(w),
            -10.0,
            10.0,
            1e-13,
        )
    };
    let i1 = moment(1);
    let i2 = moment(2);
    (lambda * i1, lambda * lambda * (i2 - i1 * i1))
}

#[test]
fn owen_variance_matches_direct_quadrature() {
    let bench = targets::benchmark_config();
    let bench_plan = solve_reduced(&bench).unwrap().plan;
    let (small, small_plan) = two_firm_case();
    let cases: [(&MarketConfig, &AbatementPlan, &[usize]); 2] = [
        (&bench, &bench_plan, &[1, 7, 30, 59]),
        (&small, &small_plan, &[1, 5, 9]),
    ];
    for (config, plan, times) in cases {
        let lambda_sq = config.regulatory.penalty * config.regulatory.penalty;
        for &t in times {
            let closed = price_variance(config, plan, t).unwrap();
            let (_, direct) = direct_moments(config, plan, t);
            assert!(
                (closed - direct).abs() <= 1e-9 * lambda_sq,
                "t={t}: closed {closed:e} vs quadrature {direct:e}"
            );
        }
    }
}

#[test]
fn price_is_a_martingale_under_direct_quadrature() {
    let (config, plan) = two_firm_case();
    let mean = price_mean(&config, &plan).unwrap();
    for t in [1, 4, 9] {
        let (direct_mean, _) = direct_moments(&config, &plan, t);
        assert!(
            (direct_mean - mean).abs() <= 1e-9 * config.regulatory.penalty,
            "t={t}: E[P_t] {direct_mean} vs μ_P {mean}"
        );
    }
}

#[test]
fn variance_endpoints_are_exact() {
    let (config, plan) = two_firm_case();
    assert_eq!(price_variance(&config, &plan, 0).unwrap(), 0.0);
    let lambda = config.regulatory.penalty;
    let x = mean_net_emissions(&config, &plan).unwrap() / total_norm_sq(&config, &plan).unwrap().sqrt();
    let phi = normal_cdf(x);
    let terminal = price_variance(&config, &plan, config.horizon()).unwrap();
    assert!(
        (terminal - lambda * lambda * phi * (1.0 - phi)).abs() <= 1e-13 * lambda * lambda,
        "terminal variance {terminal:e}"
    );
}

#[test]
fn variance_grows_and_information_ratio_falls() {
    let (config, plan) = two_firm_case();
    let moments = price_moments(&config, &plan).unwrap();
    assert_eq!(moments.ell_by_time[0], 1.0);
    assert_eq!(*moments.ell_by_time.last().unwrap(), 0.0);
    for t in 1..=config.horizon() {
        assert!(moments.variance_by_time[t] > moments.variance_by_time[t - 1] - 1e-12);
        assert!(moments.ell_by_time[t] < moments.ell_by_time[t - 1]);
        assert_eq!(moments.ell_by_time[t], information_ratio(&config, &plan, t).unwrap());
    }
    assert_eq!(moments.mean, price_mean(&config, &plan).unwrap());
}

#[test]
fn pathwise_price_reproduces_the_one_period_distribution() {
    // Feed price_at the sufficient-statistic shock direction (s, w_1..w_n)/√v
    // scaled by z; the period-1 price then equals λΦ((m + √v z)/denom) and
    // its quadrature variance must match the Owen closed form.
    let (config, plan) = two_firm_case();
    let (_, alpha1) = plan.reduced_parts().unwrap();
    let a = config.regulatory.cap_fraction;
    let v = loading_norm_sq(&config, &plan, 1).unwrap();
    let common: f64 = config
        .firms
        .iter()
        .zip(alpha1)
        .map(|(f, &al)| f.std_emission * f.common_factor_loading.sqrt() * (1.0 - a - al))
        .sum();
    let idio: Vec<f64> = config
        .firms
        .iter()
        .zip(alpha1)
        .map(|(f, &al)| f.std_emission * (1.0 - f.common_factor_loading).sqrt() * (1.0 - a - al))
        .collect();

    let price_of = |z: f64| -> f64 {
        let mut row = vec![common / v.sqrt() * z];
        for w in &idio {
            row.push(w / v.sqrt() * z);
        }
        let shocks = ShockPrefix::new(vec![vec![0.0; config.n_firms() + 1], row]).unwrap();
        price_at(&config, &plan, &shocks, 1).unwrap()
    };

    let mean = price_mean(&config, &plan).unwrap();
    let var = adaptive_simpson(
        |z: f64| (price_of(z) - mean).powi(2) * normal_pdf(z),
        -10.0,
        10.0,
        1e-13,
    );
    let closed = price_variance(&config, &plan, 1).unwrap();
    let lambda_sq = config.regulatory.penalty * config.regulatory.penalty;
    assert!(
        (var - closed).abs() <= 1e-9 * lambda_sq,
        "pathwise variance {var:e} vs closed form {closed:e}"
    );
}

#[test]
fn orthogonal_idiosyncratic_shocks_leave_the_price_unchanged() {
    // A shock vector orthogonal to the loading (zero common factor, firm
    // shocks in the ratio (w_2, −w_1)) must not move the price at all.
    let (config, plan) = two_firm_case();
    let (_, alpha1) = plan.reduced_parts().unwrap();
    let a = config.regulatory.cap_fraction;
    let w: Vec<f64> = config
        .firms
        .iter()
        .zip(alpha1)
        .map(|(f, &al)| f.std_emission * (1.0 - f.common_factor_loading).sqrt() * (1.0 - a - al))
        .collect();
    let base = price_at(&config, &plan, &ShockPrefix::zeros(3, 3), 3).unwrap();
    for scale in [-2.0, 0.5, 4.0] {
        let row = vec![0.0, scale * w[1], -scale * w[0]];
        let shocks =
            ShockPrefix::new(vec![vec![0.0; 3], row.clone(), vec![0.0; 3], row]).unwrap();
        let shifted = price_at(&config, &plan, &shocks, 3).unwrap();
        assert!(
            (shifted - base).abs() <= 1e-12 * config.regulatory.penalty,
            "orthogonal shocks moved the price: {base} -> {shifted}"
        );
    }
}

#[test]
fn domain_errors_are_reported() {
    let (config, plan) = two_firm_case();
    assert!(price_variance(&config, &plan, config.horizon() + 1).is_err());
    assert!(information_ratio(&config, &plan, config.horizon() + 1).is_err());
    let shocks = ShockPrefix::zeros(config.n_firms() + 1, 2);
    assert!(price_at(&config, &plan, &shocks, config.horizon()).is_err());
    assert!(price_at(&config, &plan, &shocks, 5).is_err());
    let wrong_width = ShockPrefix::zeros(config.n_firms() + 2, 2);
    assert!(price_at(&config, &plan, &wrong_width, 2).is_err());
    let full = plan.to_full(config.horizon());
    assert!(price_mean(&config, &full).is_err());
}
