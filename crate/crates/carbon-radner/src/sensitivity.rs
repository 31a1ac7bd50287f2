//! Implicit-function sensitivities of the equilibrium: how the optimal plan,
//! the mean price, the price volatility profile, and expected excess emissions
//! respond to each parameter, as derivatives and as elasticities.
//!
//! The plan response solves H dα = −J with the plan Hessian H and parameter
//! Jacobian J of the stationarity system; every output derivative then
//! combines its explicit parameter dependence with the plan-mediated channel.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::foc::{self, ReducedCtx, ThetaLayout};
use crate::gauss::{normal_cdf, normal_pdf, owens_t};
use crate::model::MarketConfig;
use crate::price::ShockPrefix;
use crate::solver;

/// Derivatives and elasticities of every equilibrium output with respect to
/// every parameter component, in `ThetaLayout` column order. Elasticity
/// entries are NaN where the output or the parameter is zero; the derivative
/// matrices are always fully populated.
#[derive(Clone, Debug)]
pub struct SensitivityReport {
    pub theta_labels: Vec<String>,
    /// Plan response dα/dθ, 2n × (5n+2), rows in (α¹(0), α¹(1), …) order.
    pub dalpha_dtheta: DMatrix<f64>,
    /// d μ_P / dθ.
    pub dmean_dtheta: DVector<f64>,
    /// d EE / dθ.
    pub dee_dtheta: DVector<f64>,
    /// d σ_{P_t} / dθ, (T+1) × (5n+2); the t = 0 row is identically zero.
    pub dstd_dtheta_by_time: DMatrix<f64>,
    pub alpha_elasticity: DMatrix<f64>,
    pub mean_elasticity: DVector<f64>,
    pub ee_elasticity: DVector<f64>,
    /// The t = 0 row is NaN: σ_{P_0} = 0 leaves the elasticity undefined.
    pub std_elasticity_by_time: DMatrix<f64>,
}

/// η_θ(f) = (df/dθ)·θ/f.
pub fn elasticity_transform(value: f64, derivative: f64, theta_component: f64) -> Result<f64> {
    if value == 0.0 {
        return Err(Error::Invalid("elasticity undefined at a zero output value".into()));
    }
    if theta_component == 0.0 {
        return Err(Error::Invalid("elasticity undefined at a zero parameter value".into()));
    }
    Ok(derivative * theta_component / value)
}

fn elasticity_or_nan(value: f64, derivative: f64, theta_component: f64) -> f64 {
    if value == 0.0 || theta_component == 0.0 {
        f64::NAN
    } else {
        derivative * theta_component / value
    }
}

/// Equilibrium state plus the per-column chain totals shared by all outputs.
struct Engine {
    layout: ThetaLayout,
    ctx: ReducedCtx,
    alpha0: Vec<f64>,
    alpha1: Vec<f64>,
    theta: Vec<f64>,
    dalpha: DMatrix<f64>,
    /// Total derivative of m, v, ‖B‖, x per θ column (explicit + via plan).
    dm_tot: Vec<f64>,
    dv_tot: Vec<f64>,
    db_tot: Vec<f64>,
    dx_tot: Vec<f64>,
}

fn build_engine(config: &MarketConfig) -> Result<Engine> {
    config.validate()?;
    let solution = solver::solve_reduced(config)?;
    if solution.diagnostics.boundary_flag {
        return Err(Error::BoundaryEquilibrium);
    }
    let (a0, a1) = solution
        .plan
        .reduced_parts()
        .expect("reduced solver returns a reduced plan");
    let alpha0 = a0.to_vec();
    let alpha1 = a1.to_vec();
    let ctx = foc::reduced_ctx(config, &alpha0, &alpha1);
    let n = config.n_firms();
    let layout = ThetaLayout::new(n);

    let hessian = foc::hessian_at(config, &ctx)?;
    let chol = hessian.cholesky().ok_or(Error::SingularHessian)?;
    let jac = foc::param_jacobian(config, &solution.plan)?;
    let dalpha = -chol.solve(&jac);

    let dim = layout.dim();
    let theta: Vec<f64> = (0..dim).map(|idx| layout.value(config, idx)).collect();
    let mut dm_tot = Vec::with_capacity(dim);
    let mut dv_tot = Vec::with_capacity(dim);
    let mut db_tot = Vec::with_capacity(dim);
    let mut dx_tot = Vec::with_capacity(dim);
    for idx in 0..dim {
        let partial = foc::theta_partial(config, &ctx, &alpha0, &alpha1, idx);
        let mut dm_via = 0.0;
        let mut dv_via = 0.0;
        for (i, f) in config.firms.iter().enumerate() {
            let da0 = dalpha[(2 * i, idx)];
            let da1 = dalpha[(2 * i + 1, idx)];
            dm_via -= f.mean_emission * (da0 + ctx.q * da1);
            dv_via -= 2.0 * ctx.r[i] * da1;
        }
        let dm = partial.dm + dm_via;
        let dv = partial.dv + dv_via;
        let dw = partial.dw + ctx.q * dv_via;
        let db = dw / (2.0 * ctx.b);
        dm_tot.push(dm);
        dv_tot.push(dv);
        db_tot.push(db);
        dx_tot.push((dm - ctx.x * db) / ctx.b);
    }
    Ok(Engine { layout, ctx, alpha0, alpha1, theta, dalpha, dm_tot, dv_tot, db_tot, dx_tot })
}

impl Engine {
    fn dmean(&self, config: &MarketConfig, idx: usize) -> f64 {
        let lambda = config.regulatory.penalty;
        let explicit = if idx == self.layout.lambda() { self.ctx.cdf_x } else { 0.0 };
        explicit + lambda * self.ctx.pdf_x * self.dx_tot[idx]
    }

    fn dee(&self, idx: usize) -> f64 {
        // EE = mΦ(x) + ‖B‖φ(x); the φ terms of dm and d‖B‖ cancel via m = x‖B‖.
        self.ctx.cdf_x * self.dm_tot[idx] + self.ctx.pdf_x * self.db_tot[idx]
    }

    /// dσ²_{P_t}/dθ for 1 ≤ t ≤ T−1 given the precomputed Owen terms at t.
    fn dvariance_mid(
        &self,
        config: &MarketConfig,
        idx: usize,
        t: usize,
        owen: &OwenTerms,
    ) -> f64 {
        let lambda = config.regulatory.penalty;
        let cap = (1.0 - config.regulatory.cap_fraction).powi(2);
        let q = self.ctx.q;
        let tf = t as f64;
        let numer = (q - tf) * self.ctx.v + cap;
        let denom = (q + tf) * self.ctx.v + cap;
        let dcap = if idx == self.layout.cap_fraction() {
            -2.0 * (1.0 - config.regulatory.cap_fraction)
        } else {
            0.0
        };
        let dnumer = (q - tf) * self.dv_tot[idx] + dcap;
        let ddenom = (q + tf) * self.dv_tot[idx] + dcap;
        let dell = (dnumer * denom - numer * ddenom) / (2.0 * owen.ell * denom * denom);

        let dlambda = if idx == self.layout.lambda() { 1.0 } else { 0.0 };
        4.0 * lambda * (owen.t_at_one - owen.t_at_ell) * dlambda
            + 2.0 * lambda * lambda * (owen.dh_at_one - owen.dh_at_ell) * self.dx_tot[idx]
            - 2.0 * lambda * lambda * owen.dd_at_ell * dell
    }

    /// dσ²_{P_T}/dθ from the exact terminal form λ²Φ(x)(1−Φ(x)).
    fn dvariance_terminal(&self, config: &MarketConfig, idx: usize) -> f64 {
        let lambda = config.regulatory.penalty;
        let phi = self.ctx.cdf_x;
        let dlambda = if idx == self.layout.lambda() { 1.0 } else { 0.0 };
        2.0 * lambda * phi * (1.0 - phi) * dlambda
            + lambda * lambda * (1.0 - 2.0 * phi) * self.ctx.pdf_x * self.dx_tot[idx]
    }
}

/// Owen's-T values and partials at (x, ℓ_t), shared by every θ column.
struct OwenTerms {
    ell: f64,
    t_at_one: f64,
    t_at_ell: f64,
    /// ∂T/∂h at (x,1): −φ(x)(Φ(x)−½).
    dh_at_one: f64,
    dh_at_ell: f64,
    /// ∂T/∂d at (x,ℓ): φ(x)φ(xℓ)/(1+ℓ²).
    dd_at_ell: f64,
}

fn owen_terms(x: f64, ell: f64) -> OwenTerms {
    let pdf = normal_pdf(x);
    OwenTerms {
        ell,
        t_at_one: owens_t(x, 1.0),
        t_at_ell: owens_t(x, ell),
        dh_at_one: -pdf * (normal_cdf(x) - 0.5),
        dh_at_ell: -pdf * (normal_cdf(x * ell) - 0.5),
        dd_at_ell: pdf * normal_pdf(x * ell) / (1.0 + ell * ell),
    }
}

/// Plan response dα/dθ at the solved equilibrium.
pub fn plan_sensitivity(config: &MarketConfig) -> Result<DMatrix<f64>> {
    Ok(build_engine(config)?.dalpha)
}

/// Total derivative of μ_P per parameter component.
pub fn price_mean_sensitivity(config: &MarketConfig) -> Result<DVector<f64>> {
    let engine = build_engine(config)?;
    let dim = engine.layout.dim();
    Ok(DVector::from_fn(dim, |idx, _| engine.dmean(config, idx)))
}

/// Total derivative of EE per parameter component.
pub fn excess_emissions_sensitivity(config: &MarketConfig) -> Result<DVector<f64>> {
    let engine = build_engine(config)?;
    let dim = engine.layout.dim();
    Ok(DVector::from_fn(dim, |idx, _| engine.dee(idx)))
}

/// Total derivative of σ_{P_t} per parameter component, 1 ≤ t ≤ T.
pub fn price_std_sensitivity(config: &MarketConfig, t: usize) -> Result<DVector<f64>> {
    config.validate()?;
    let horizon = config.horizon();
    if t == 0 || t > horizon {
        return Err(Error::Invalid(format!(
            "volatility sensitivity covers periods 1..{horizon}; period {t} has none"
        )));
    }
    let engine = build_engine(config)?;
    let lambda = config.regulatory.penalty;
    let dim = engine.layout.dim();
    let (variance, dvar): (f64, Vec<f64>) = if t == horizon {
        let phi = engine.ctx.cdf_x;
        (
            lambda * lambda * phi * (1.0 - phi),
            (0..dim).map(|idx| engine.dvariance_terminal(config, idx)).collect(),
        )
    } else {
        let ell = ell_value(config, &engine.ctx, t);
        let owen = owen_terms(engine.ctx.x, ell);
        (
            2.0 * lambda * lambda * (owen.t_at_one - owen.t_at_ell),
            (0..dim).map(|idx| engine.dvariance_mid(config, idx, t, &owen)).collect(),
        )
    };
    let std = variance.sqrt();
    Ok(DVector::from_fn(dim, |idx, _| {
        if std > 0.0 {
            dvar[idx] / (2.0 * std)
        } else {
            f64::NAN
        }
    }))
}

fn ell_value(config: &MarketConfig, ctx: &ReducedCtx, t: usize) -> f64 {
    let cap = (1.0 - config.regulatory.cap_fraction).powi(2);
    let tf = t as f64;
    (((ctx.q - tf) * ctx.v + cap) / ((ctx.q + tf) * ctx.v + cap)).sqrt()
}

/// Full report: all derivatives and elasticities in one pass.
pub fn sensitivity_report(config: &MarketConfig) -> Result<SensitivityReport> {
    let engine = build_engine(config)?;
    let dim = engine.layout.dim();
    let n = engine.layout.n;
    let horizon = config.horizon();
    let lambda = config.regulatory.penalty;

    let dmean = DVector::from_fn(dim, |idx, _| engine.dmean(config, idx));
    let dee = DVector::from_fn(dim, |idx, _| engine.dee(idx));
    let mean_value = lambda * engine.ctx.cdf_x;
    let ee_value = engine.ctx.m * engine.ctx.cdf_x + engine.ctx.b * engine.ctx.pdf_x;

    let mut dstd = DMatrix::zeros(horizon + 1, dim);
    let mut std_el = DMatrix::from_element(horizon + 1, dim, f64::NAN);
    for t in 1..=horizon {
        let (variance, dvar): (f64, Vec<f64>) = if t == horizon {
            let phi = engine.ctx.cdf_x;
            (
                lambda * lambda * phi * (1.0 - phi),
                (0..dim).map(|idx| engine.dvariance_terminal(config, idx)).collect(),
            )
        } else {
            let ell = ell_value(config, &engine.ctx, t);
            let owen = owen_terms(engine.ctx.x, ell);
            (
                2.0 * lambda * lambda * (owen.t_at_one - owen.t_at_ell),
                (0..dim).map(|idx| engine.dvariance_mid(config, idx, t, &owen)).collect(),
            )
        };
        let std = variance.sqrt();
        for idx in 0..dim {
            let d = if std > 0.0 { dvar[idx] / (2.0 * std) } else { f64::NAN };
            dstd[(t, idx)] = d;
            std_el[(t, idx)] = elasticity_or_nan(std, d, engine.theta[idx]);
        }
    }

    let alpha_el = DMatrix::from_fn(2 * n, dim, |row, idx| {
        let value = if row % 2 == 0 {
            engine.alpha0[row / 2]
        } else {
            engine.alpha1[row / 2]
        };
        elasticity_or_nan(value, engine.dalpha[(row, idx)], engine.theta[idx])
    });
    let mean_el =
        DVector::from_fn(dim, |idx, _| elasticity_or_nan(mean_value, dmean[idx], engine.theta[idx]));
    let ee_el =
        DVector::from_fn(dim, |idx, _| elasticity_or_nan(ee_value, dee[idx], engine.theta[idx]));

    Ok(SensitivityReport {
        theta_labels: engine.layout.labels(),
        dalpha_dtheta: engine.dalpha.clone(),
        dmean_dtheta: dmean,
        dee_dtheta: dee,
        dstd_dtheta_by_time: dstd,
        alpha_elasticity: alpha_el,
        mean_elasticity: mean_el,
        ee_elasticity: ee_el,
        std_elasticity_by_time: std_el,
    })
}

/// Per-firm parameter kinds that the benchmark scenarios move in lockstep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SharedParam {
    MeanEmission,
    StdEmission,
    FactorLoading,
}

/// Sensitivities to a simultaneous bump of one per-firm parameter across all
/// firms: derivatives add across firms, and the elasticity uses the common
/// parameter value, which every firm must share.
#[derive(Clone, Debug)]
pub struct SharedColumn {
    pub plan_derivative: Vec<f64>,
    pub plan_elasticity: Vec<f64>,
    pub mean_derivative: f64,
    pub mean_elasticity: f64,
    pub ee_derivative: f64,
    pub ee_elasticity: f64,
    pub std_derivative_by_time: Vec<f64>,
    pub std_elasticity_by_time: Vec<f64>,
}

pub fn shared_sensitivity(config: &MarketConfig, which: SharedParam) -> Result<SharedColumn> {
    let n = config.n_firms();
    let layout = ThetaLayout::new(n);
    let indices: Vec<usize> = (0..n)
        .map(|i| match which {
            SharedParam::MeanEmission => layout.mu(i),
            SharedParam::StdEmission => layout.sigma(i),
            SharedParam::FactorLoading => layout.rho(i),
        })
        .collect();
    let values: Vec<f64> = indices.iter().map(|&idx| layout.value(config, idx)).collect();
    let common = values[0];
    if values.iter().any(|&v| (v - common).abs() > 1e-9 * common.abs().max(1.0)) {
        return Err(Error::Invalid(
            "shared-parameter sensitivity needs all firms at the same value".into(),
        ));
    }

    let report = sensitivity_report(config)?;
    let horizon = report.dstd_dtheta_by_time.nrows() - 1;
    let sum_cols = |matrix: &DMatrix<f64>, row: usize| -> f64 {
        indices.iter().map(|&idx| matrix[(row, idx)]).sum()
    };
    let sum_vec = |vector: &DVector<f64>| -> f64 { indices.iter().map(|&idx| vector[idx]).sum() };

    let plan_derivative: Vec<f64> =
        (0..2 * n).map(|row| sum_cols(&report.dalpha_dtheta, row)).collect();
    let solution = solver::solve_reduced(config)?;
    let (a0, a1) = solution.plan.reduced_parts().expect("reduced plan");
    let plan_elasticity: Vec<f64> = (0..2 * n)
        .map(|row| {
            let value = if row % 2 == 0 { a0[row / 2] } else { a1[row / 2] };
            elasticity_or_nan(value, plan_derivative[row], common)
        })
        .collect();

    let mean_derivative = sum_vec(&report.dmean_dtheta);
    let ee_derivative = sum_vec(&report.dee_dtheta);
    let mean_value = solution.initial_price;
    let ee_value = solution.expected_excess;

    let mut std_derivative_by_time = Vec::with_capacity(horizon + 1);
    let mut std_elasticity_by_time = Vec::with_capacity(horizon + 1);
    std_derivative_by_time.push(0.0);
    std_elasticity_by_time.push(f64::NAN);
    for t in 1..=horizon {
        let d = sum_cols(&report.dstd_dtheta_by_time, t);
        std_derivative_by_time.push(d);
        let std = crate::price::price_variance(config, &solution.plan, t)?.sqrt();
        std_elasticity_by_time.push(elasticity_or_nan(std, d, common));
    }

    Ok(SharedColumn {
        plan_derivative,
        plan_elasticity,
        mean_derivative,
        mean_elasticity: elasticity_or_nan(mean_value, mean_derivative, common),
        ee_derivative,
        ee_elasticity: elasticity_or_nan(ee_value, ee_derivative, common),
        std_derivative_by_time,
        std_elasticity_by_time,
    })
}

/// Total derivative of the period-t price on a fixed shock history, per
/// parameter component: the realized shocks stay put while the plan and the
/// distributional quantities respond.
pub fn price_at_sensitivity(
    config: &MarketConfig,
    shocks: &ShockPrefix,
    t: usize,
) -> Result<DVector<f64>> {
    config.validate()?;
    let horizon = config.horizon();
    if t >= horizon {
        return Err(Error::Invalid(format!(
            "price sensitivity on shocks covers periods 0..{}",
            horizon - 1
        )));
    }
    if shocks.periods_covered() < t {
        return Err(Error::Dimension(format!(
            "shock prefix covers {} periods, need {}",
            shocks.periods_covered(),
            t
        )));
    }
    let n = config.n_firms();
    if shocks.row(0).len() != n + 1 {
        return Err(Error::Dimension(format!(
            "shock rows have {} entries, expected {}",
            shocks.row(0).len(),
            n + 1
        )));
    }
    let engine = build_engine(config)?;
    let layout = engine.layout;
    let lambda = config.regulatory.penalty;
    let a = config.regulatory.cap_fraction;
    let cap = (1.0 - a).powi(2);
    let q = engine.ctx.q;
    let tf = t as f64;

    // Cumulative common and idiosyncratic shocks through period t.
    let mut z0 = 0.0;
    let mut z = vec![0.0; n];
    for s in 1..=t {
        let row = shocks.row(s);
        z0 += row[0];
        for j in 0..n {
            z[j] += row[j + 1];
        }
    }

    let mut shock_sum = engine.ctx.s * z0;
    for (j, f) in config.firms.iter().enumerate() {
        shock_sum +=
            f.std_emission * (1.0 - f.common_factor_loading).sqrt() * engine.ctx.c[j] * z[j];
    }
    let numer = engine.ctx.m + shock_sum;
    let scale = ((q - tf) * engine.ctx.v + cap).sqrt();
    let zval = numer / scale;
    let (pdf_z, cdf_z) = (normal_pdf(zval), normal_cdf(zval));

    let dim = layout.dim();
    let mut out = DVector::zeros(dim);
    for idx in 0..dim {
        // Explicit movement of the realized shock term.
        let mut ds = 0.0;
        if idx == layout.cap_fraction() {
            for (j, f) in config.firms.iter().enumerate() {
                let rho = f.common_factor_loading;
                ds -= f.std_emission * (rho.sqrt() * z0 + (1.0 - rho).sqrt() * z[j]);
            }
        } else if idx >= layout.sigma(0) && idx < layout.rho(0) {
            let j = idx - layout.sigma(0);
            let rho = config.firms[j].common_factor_loading;
            let cj = engine.ctx.c[j];
            ds = rho.sqrt() * cj * z0 + (1.0 - rho).sqrt() * cj * z[j];
        } else if idx >= layout.rho(0) && idx < layout.cap_fraction() {
            let j = idx - layout.rho(0);
            let f = &config.firms[j];
            let rho = f.common_factor_loading;
            let cj = engine.ctx.c[j];
            ds = f.std_emission
                * cj
                * (z0 / (2.0 * rho.sqrt()) - z[j] / (2.0 * (1.0 - rho).sqrt()));
        }
        // Plan-mediated movement through c^j = 1 − a − α^j(1).
        for (j, f) in config.firms.iter().enumerate() {
            let rho = f.common_factor_loading;
            let da1 = engine.dalpha[(2 * j + 1, idx)];
            ds -= f.std_emission * (rho.sqrt() * z0 + (1.0 - rho).sqrt() * z[j]) * da1;
        }

        let dcap = if idx == layout.cap_fraction() { -2.0 * (1.0 - a) } else { 0.0 };
        let dscale_sq = (q - tf) * engine.dv_tot[idx] + dcap;
        let dz = (engine.dm_tot[idx] + ds) / scale - zval * dscale_sq / (2.0 * scale * scale);
        let dlambda = if idx == layout.lambda() { 1.0 } else { 0.0 };
        out[idx] = dlambda * cdf_z + lambda * pdf_z * dz;
    }
    Ok(out)
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
                    quadratic_cost: 4.0,
                    mean_emission: 1.2,
                    std_emission: 0.4,
                    common_factor_loading: 0.5,
                },
                FirmParams {
                    linear_cost: 2.0,
                    quadratic_cost: 3.0,
                    mean_emission: 0.9,
                    std_emission: 0.3,
                    common_factor_loading: 0.5,
                },
            ],
        }
    }

    #[test]
    fn elasticity_transform_basics() {
        // f = cθ has unit elasticity; f = θ³ has elasticity 3.
        assert!((elasticity_transform(6.0, 2.0, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((elasticity_transform(8.0, 12.0, 2.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(elasticity_transform(5.0, 0.0, 2.0).unwrap(), 0.0);
        assert!(elasticity_transform(0.0, 1.0, 2.0).is_err());
        assert!(elasticity_transform(5.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn report_shapes_and_undefined_rows() {
        let cfg = config();
        let report = sensitivity_report(&cfg).unwrap();
        let dim = 5 * 2 + 2;
        assert_eq!(report.theta_labels.len(), dim);
        assert_eq!(report.dalpha_dtheta.shape(), (4, dim));
        assert_eq!(report.dstd_dtheta_by_time.shape(), (cfg.horizon() + 1, dim));
        for idx in 0..dim {
            assert_eq!(report.dstd_dtheta_by_time[(0, idx)], 0.0);
            assert!(report.std_elasticity_by_time[(0, idx)].is_nan());
            assert!(report.std_elasticity_by_time[(1, idx)].is_finite());
        }
    }

    #[test]
    fn boundary_equilibrium_is_rejected() {
        let mut cfg = config();
        cfg.regulatory.penalty = 0.0;
        assert!(matches!(sensitivity_report(&cfg), Err(Error::BoundaryEquilibrium)));
        assert!(matches!(plan_sensitivity(&cfg), Err(Error::BoundaryEquilibrium)));
    }

    #[test]
    fn period_bounds_on_std_sensitivity() {
        let cfg = config();
        assert!(price_std_sensitivity(&cfg, 0).is_err());
        assert!(price_std_sensitivity(&cfg, cfg.horizon() + 1).is_err());
        assert!(price_std_sensitivity(&cfg, cfg.horizon()).is_ok());
    }

    #[test]
    fn shared_sum_matches_per_firm_columns() {
        let cfg = config();
        let report = sensitivity_report(&cfg).unwrap();
        let shared = shared_sensitivity(&cfg, SharedParam::FactorLoading).unwrap();
        let layout = ThetaLayout::new(2);
        let expect: f64 =
            (0..2).map(|i| report.dmean_dtheta[layout.rho(i)]).sum();
        assert!((shared.mean_derivative - expect).abs() <= 1e-12 * expect.abs().max(1.0));

        let mut uneven = cfg.clone();
        uneven.firms[1].std_emission = 0.35;
        assert!(shared_sensitivity(&uneven, SharedParam::StdEmission).is_err());
    }

    #[test]
    fn price_at_sensitivity_matches_mean_at_time_zero() {
        let cfg = config();
        let shocks = ShockPrefix::zeros(cfg.n_firms() + 1, 0);
        let on_path = price_at_sensitivity(&cfg, &shocks, 0).unwrap();
        let mean = price_mean_sensitivity(&cfg).unwrap();
        for idx in 0..on_path.len() {
            assert!(
                (on_path[idx] - mean[idx]).abs() <= 1e-12 * mean[idx].abs().max(1.0),
                "component {idx}: {} vs {}",
                on_path[idx],
                mean[idx]
            );
        }
    }
}
