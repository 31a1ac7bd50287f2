//! Finite-difference verification of the analytic first-order conditions,
//! Hessian, and parameter Jacobian on randomly drawn markets.

use carbon_radner::foc::{
    foc_residual, full_horizon_gradient, hessian, param_jacobian, sensitivity_system, ThetaLayout,
};
use carbon_radner::model::{
    net_emission_moments, social_cost, AbatementPlan, FirmParams, MarketConfig, RegulatoryParams,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_market(rng: &mut StdRng) -> MarketConfig {
    let n = rng.gen_range(1..=4);
    MarketConfig {
        regulatory: RegulatoryParams {
            penalty: rng.gen_range(5.0..120.0),
            cap_fraction: rng.gen_range(0.2..0.7),
            horizon: rng.gen_range(2..12),
        },
        firms: (0..n)
            .map(|_| FirmParams {
                linear_cost: rng.gen_range(5.0..60.0),
                quadratic_cost: rng.gen_range(1e-3..0.1),
                mean_emission: rng.gen_range(50.0..300.0),
                std_emission: rng.gen_range(20.0..250.0),
                common_factor_loading: rng.gen_range(0.1..0.9),
            })
            .collect(),
    }
}

/// Draw a config and an interior plan whose net-emission ratio m/‖B‖ stays in
/// a band where the Gaussian tail terms are numerically alive; deep in either
/// tail every shock derivative collapses to zero and relative comparisons
/// stop meaning anything.
fn random_case(rng: &mut StdRng) -> (MarketConfig, Vec<f64>, Vec<f64>) {
    loop {
        let config = random_market(rng);
        let n = config.n_firms();
        let alpha0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.6)).collect();
        let alpha1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.6)).collect();
        let plan = AbatementPlan::reduced(alpha0.clone(), alpha1.clone());
        let moments = net_emission_moments(&config, &plan).unwrap();
        let x = moments.mean / moments.total_norm_sq.sqrt();
        if x.abs() <= 4.0 {
            return (config, alpha0, alpha1);
        }
    }
}

fn interleave(alpha0: &[f64], alpha1: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * alpha0.len());
    for (a0, a1) in alpha0.iter().zip(alpha1) {
        v.push(*a0);
        v.push(*a1);
    }
    v
}

fn plan_from_vars(vars: &[f64]) -> AbatementPlan {
    let alpha0 = vars.iter().step_by(2).copied().collect();
    let alpha1 = vars.iter().skip(1).step_by(2).copied().collect();
    AbatementPlan::reduced(alpha0, alpha1)
}

#[test]
fn residual_matches_social_cost_differences() {
    let mut rng = StdRng::seed_from_u64(101);
    let h = 1e-5;
    for case in 0..20 {
        let (config, alpha0, alpha1) = random_case(&mut rng);
        let vars = interleave(&alpha0, &alpha1);
        let analytic = foc_residual(&config, &plan_from_vars(&vars)).unwrap();
        let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        for j in 0..vars.len() {
            let mut up = vars.clone();
            let mut dn = vars.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (social_cost(&config, &plan_from_vars(&up)).unwrap()
                - social_cost(&config, &plan_from_vars(&dn)).unwrap())
                / (2.0 * h);
            let rel = (fd - analytic[j]).abs() / scale;
            assert!(
                rel <= 1e-6,
                "case {case}, coordinate {j}: gradient fd {fd:e} vs analytic {:e}, rel {rel:e}",
                analytic[j]
            );
        }
    }
}

#[test]
fn hessian_matches_residual_differences() {
    let mut rng = StdRng::seed_from_u64(211);
    let h = 1e-5;
    for case in 0..12 {
        let (config, alpha0, alpha1) = random_case(&mut rng);
        let vars = interleave(&alpha0, &alpha1);
        let hess = hessian(&config, &plan_from_vars(&vars)).unwrap();
        let dim = vars.len();
        let scale = hess.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in 0..dim {
                let sym = (hess[(i, j)] - hess[(j, i)]).abs() / scale;
                assert!(sym <= 1e-12, "case {case}: Hessian asymmetry at ({i},{j})");
            }
        }
        for j in 0..dim {
            let mut up = vars.clone();
            let mut dn = vars.clone();
            up[j] += h;
            dn[j] -= h;
            let ru = foc_residual(&config, &plan_from_vars(&up)).unwrap();
            let rd = foc_residual(&config, &plan_from_vars(&dn)).unwrap();
            for i in 0..dim {
                let fd = (ru[i] - rd[i]) / (2.0 * h);
                let rel = (fd - hess[(i, j)]).abs() / scale;
                assert!(
                    rel <= 1e-6,
                    "case {case}, entry ({i},{j}): Hessian fd {fd:e} vs analytic {:e}, rel {rel:e}",
                    hess[(i, j)]
                );
            }
        }
    }
}

#[test]
fn param_jacobian_matches_residual_differences() {
    let mut rng = StdRng::seed_from_u64(307);
    for case in 0..12 {
        let (config, alpha0, alpha1) = random_case(&mut rng);
        let plan = AbatementPlan::reduced(alpha0, alpha1);
        let jac = param_jacobian(&config, &plan).unwrap();
        let layout = ThetaLayout::new(config.n_firms());
        let global = jac.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for p in 0..layout.dim() {
            let value = layout.value(&config, p);
            let delta = 1e-5 * (value.abs() + 0.1);
            let up = foc_residual(&layout.bump(&config, p, delta), &plan).unwrap();
            let dn = foc_residual(&layout.bump(&config, p, -delta), &plan).unwrap();
            let col_scale = (0..jac.nrows())
                .map(|i| jac[(i, p)].abs())
                .fold(0.0f64, f64::max)
                .max(1e-6 * global);
            for i in 0..jac.nrows() {
                let fd = (up[i] - dn[i]) / (2.0 * delta);
                let rel = (fd - jac[(i, p)]).abs() / col_scale;
                assert!(
                    rel <= 1e-5,
                    "case {case}, θ column {p} ({}), row {i}: fd {fd:e} vs analytic {:e}, rel {rel:e}",
                    layout.labels()[p],
                    jac[(i, p)]
                );
            }
        }
    }
}

#[test]
fn full_horizon_gradient_aggregates_reduced_residual() {
    let mut rng = StdRng::seed_from_u64(401);
    for _ in 0..10 {
        let (config, alpha0, alpha1) = random_case(&mut rng);
        let plan = AbatementPlan::reduced(alpha0.clone(), alpha1.clone());
        let reduced = foc_residual(&config, &plan).unwrap();
        let full = match plan.to_full(config.horizon()) {
            AbatementPlan::Full { alpha } => alpha,
            _ => unreachable!(),
        };
        let grad = full_horizon_gradient(&config, &full).unwrap();
        let scale = reduced.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..config.n_firms() {
            assert!((grad[i][0] - reduced[2 * i]).abs() <= 1e-12 * scale);
            let late: f64 = grad[i][1..].iter().sum();
            assert!(
                (late - reduced[2 * i + 1]).abs() <= 1e-10 * scale,
                "firm {i}: late-block gradient sum {late:e} vs reduced residual {:e}",
                reduced[2 * i + 1]
            );
        }
    }
}

#[test]
fn sensitivity_system_bundles_the_same_matrices() {
    let mut rng = StdRng::seed_from_u64(503);
    let (config, alpha0, alpha1) = random_case(&mut rng);
    let plan = AbatementPlan::reduced(alpha0, alpha1);
    let system = sensitivity_system(&config, &plan).unwrap();
    assert_eq!(system.hessian, hessian(&config, &plan).unwrap());
    assert_eq!(system.param_jacobian, param_jacobian(&config, &plan).unwrap());
    assert_eq!(system.theta_layout.len(), config.theta_dim());
    assert_eq!(system.theta_layout[0], "lambda");
    assert_eq!(system.theta_layout.last().unwrap(), "cap_fraction");
}
