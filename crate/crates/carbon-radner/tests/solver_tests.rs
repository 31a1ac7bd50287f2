//! Solver-level guarantees: the reduced parameterization is exact, the
//! computed point is the unique minimum, boundary cases degrade cleanly, and
//! comparative statics move the way the economics says they must.

use carbon_radner::model::{social_cost, AbatementPlan, FirmParams, MarketConfig, RegulatoryParams};
use carbon_radner::price::price_mean;
use carbon_radner::solver::{solve_full_horizon, solve_reduced, solve_reduced_from, RESIDUAL_TOL};
use carbon_radner::targets;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn small_market() -> MarketConfig {
    MarketConfig {
        regulatory: RegulatoryParams { penalty: 60.0, cap_fraction: 0.45, horizon: 12 },
        firms: vec![
            FirmParams {
                linear_cost: 12.0,
                quadratic_cost: 0.4,
                mean_emission: 150.0,
                std_emission: 110.0,
                common_factor_loading: 0.7,
            },
            FirmParams {
                linear_cost: 22.0,
                quadratic_cost: 0.5,
                mean_emission: 90.0,
                std_emission: 140.0,
                common_factor_loading: 0.4,
            },
            FirmParams {
                linear_cost: 30.0,
                quadratic_cost: 0.35,
                mean_emission: 200.0,
                std_emission: 90.0,
                common_factor_loading: 0.55,
            },
        ],
    }
}

/// Quadratic costs far too small for the penalty: the equilibrium pins the
/// two cheap firms at full abatement and the dear one at zero.
fn pinned_market() -> MarketConfig {
    let mut config = small_market();
    config.firms[0].quadratic_cost = 0.02;
    config.firms[1].quadratic_cost = 0.015;
    config.firms[2].quadratic_cost = 0.03;
    config.firms[2].linear_cost = 40.0;
    config
}

#[test]
fn benchmark_solve_converges_cleanly() {
    let config = targets::benchmark_config();
    let solution = solve_reduced(&config).unwrap();
    let d = &solution.diagnostics;
    assert!(d.residual_norm <= RESIDUAL_TOL, "residual {:e}", d.residual_norm);
    assert!(d.iterations < 50, "took {} iterations", d.iterations);
    assert!(!d.boundary_flag);
    assert!(d.hessian_min_eigenvalue > 0.0);
    assert!(solution.initial_price > 0.0 && solution.initial_price < config.regulatory.penalty);
    assert_eq!(solution.initial_price, price_mean(&config, &solution.plan).unwrap());
}

#[test]
fn full_horizon_plan_is_constant_over_late_periods() {
    for config in [small_market(), targets::benchmark_config()] {
        let full = solve_full_horizon(&config).unwrap();
        let reduced = solve_reduced(&config).unwrap();
        let (alpha0, alpha1) = reduced.plan.reduced_parts().unwrap();
        let horizon = config.horizon();
        let rows = match &full {
            AbatementPlan::Full { alpha } => alpha,
            _ => panic!("full-horizon solver must return a full plan"),
        };
        for (i, row) in rows.iter().enumerate() {
            let spread = row[1..]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            assert!(
                spread.1 - spread.0 <= 1e-6,
                "firm {i}: late-period rates vary by {:e} over periods 1..{}",
                spread.1 - spread.0,
                horizon - 1
            );
            assert!((row[0] - alpha0[i]).abs() <= 1e-5);
            assert!((row[1] - alpha1[i]).abs() <= 1e-5);
        }
    }
}

#[test]
fn distinct_starts_reach_the_same_plan() {
    let config = small_market();
    let reference = solve_reduced(&config).unwrap();
    let (r0, r1) = reference.plan.reduced_parts().unwrap();
    let mut rng = StdRng::seed_from_u64(613);
    for _ in 0..10 {
        let start: Vec<f64> = (0..2 * config.n_firms()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let solution = solve_reduced_from(&config, &start).unwrap();
        let (a0, a1) = solution.plan.reduced_parts().unwrap();
        for i in 0..config.n_firms() {
            assert!((a0[i] - r0[i]).abs() <= 1e-8, "early rate differs from start {start:?}");
            assert!((a1[i] - r1[i]).abs() <= 1e-8, "late rate differs from start {start:?}");
        }
    }
}

#[test]
fn solved_plan_beats_random_perturbations() {
    let config = targets::benchmark_config();
    let solution = solve_reduced(&config).unwrap();
    let (a0, a1) = solution.plan.reduced_parts().unwrap();
    let base = solution.social_cost;
    let mut rng = StdRng::seed_from_u64(719);
    for _ in 0..1000 {
        let perturb = |v: &[f64], rng: &mut StdRng| -> Vec<f64> {
            v.iter().map(|&x| (x + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0)).collect()
        };
        let trial = AbatementPlan::reduced(perturb(a0, &mut rng), perturb(a1, &mut rng));
        let cost = social_cost(&config, &trial).unwrap();
        assert!(
            cost >= base * (1.0 - 1e-12),
            "perturbed plan undercuts the solution: {cost} < {base}"
        );
    }
}

#[test]
fn zero_penalty_gives_the_zero_abatement_boundary() {
    let mut config = small_market();
    config.regulatory.penalty = 0.0;
    let solution = solve_reduced(&config).unwrap();
    let (a0, a1) = solution.plan.reduced_parts().unwrap();
    for v in a0.iter().chain(a1) {
        assert_eq!(*v, 0.0);
    }
    assert!(solution.diagnostics.boundary_flag);
    assert_eq!(solution.initial_price, 0.0);
    assert_eq!(solution.social_cost, 0.0);
}

#[test]
fn comparative_statics_move_with_the_parameters() {
    let base = small_market();
    let base_sol = solve_reduced(&base).unwrap();
    let (b0, b1) = base_sol.plan.reduced_parts().unwrap();

    // A harsher penalty raises the price and every abatement rate.
    let mut harsher = base.clone();
    harsher.regulatory.penalty *= 1.3;
    let h = solve_reduced(&harsher).unwrap();
    assert!(h.initial_price > base_sol.initial_price);
    let (h0, h1) = h.plan.reduced_parts().unwrap();
    for i in 0..base.n_firms() {
        assert!(h0[i] > b0[i] && h1[i] > b1[i]);
    }

    // A looser cap (more free allowances) lowers the price. The per-firm
    // rate responses are not sign-definite in general because shrinking net
    // positions also shrinks the variance-hedging term, so the rate claim is
    // checked at the benchmark below rather than here.
    let mut looser = base.clone();
    looser.regulatory.cap_fraction += 0.1;
    let l = solve_reduced(&looser).unwrap();
    assert!(l.initial_price < base_sol.initial_price);

    // A costlier firm abates less itself.
    let mut costlier = base.clone();
    costlier.firms[1].linear_cost *= 1.5;
    let c = solve_reduced(&costlier).unwrap();
    let (c0, c1) = c.plan.reduced_parts().unwrap();
    assert!(c0[1] < b0[1] && c1[1] < b1[1]);

    // At the benchmark the scarcity channel dominates: a looser cap lowers
    // the price and every abatement rate.
    let bench = targets::benchmark_config();
    let bench_sol = solve_reduced(&bench).unwrap();
    let (e0, e1) = bench_sol.plan.reduced_parts().unwrap();
    let mut bench_loose = bench.clone();
    bench_loose.regulatory.cap_fraction += 0.05;
    let bl = solve_reduced(&bench_loose).unwrap();
    assert!(bl.initial_price < bench_sol.initial_price);
    let (f0, f1) = bl.plan.reduced_parts().unwrap();
    for i in 0..bench.n_firms() {
        assert!(f0[i] < e0[i] && f1[i] < e1[i]);
    }
}

#[test]
fn cheaper_firms_abate_more_at_the_benchmark() {
    // The eight benchmark firms differ only in their linear cost, which
    // increases along the roster; both rate blocks must decrease strictly.
    let config = targets::benchmark_config();
    let solution = solve_reduced(&config).unwrap();
    let (a0, a1) = solution.plan.reduced_parts().unwrap();
    for i in 1..config.n_firms() {
        assert!(a0[i] < a0[i - 1]);
        assert!(a1[i] < a1[i - 1]);
    }
    for i in 0..config.n_firms() {
        assert!(a0[i] > a1[i], "early rates exceed late rates at the benchmark");
    }
}

#[test]
fn full_horizon_handles_pinned_boundary_equilibria() {
    let config = pinned_market();
    let reduced = solve_reduced(&config).unwrap();
    assert!(reduced.diagnostics.boundary_flag);
    let (a0, a1) = reduced.plan.reduced_parts().unwrap();
    assert_eq!((a0[0], a1[0]), (1.0, 1.0));
    assert_eq!((a0[2], a1[2]), (0.0, 0.0));

    let full = solve_full_horizon(&config).unwrap();
    let rows = match &full {
        AbatementPlan::Full { alpha } => alpha,
        _ => unreachable!(),
    };
    for (i, row) in rows.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            let want = if t == 0 { a0[i] } else { a1[i] };
            assert!(
                (v - want).abs() <= 1e-5,
                "firm {i}, period {t}: full {v} vs reduced {want}"
            );
        }
    }
}

#[test]
fn full_horizon_guard_rejects_oversized_problems() {
    let mut config = small_market();
    config.regulatory.horizon = 5000;
    assert!(solve_full_horizon(&config).is_err());
}
