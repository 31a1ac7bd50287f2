//! First-order-condition system in the reduced 2n parameterization: the exact
//! gradient of the social cost, its Hessian in the plan, and its Jacobian in
//! the parameter vector. These three objects drive both the Newton solver and
//! the implicit-function sensitivities.
//!
//! Residual ordering is (α¹(0), α¹(1), …, αⁿ(0), αⁿ(1)). Because the reduced
//! coordinate α^i(1) stands for T−1 identical periods, its gradient entries
//! carry an explicit (T−1) factor relative to the single-period stationarity
//! conditions; dividing those rows by T−1 recovers the per-period form.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauss::{normal_cdf, normal_pdf};
use crate::model::{AbatementPlan, MarketConfig};

/// Closed-form quantities shared by the residual, Hessian, parameter Jacobian,
/// price analytics, and sensitivity engine, all evaluated at one reduced plan.
#[derive(Clone, Debug)]
pub(crate) struct ReducedCtx {
    /// T−1 as a float.
    pub q: f64,
    /// m(α), tons.
    pub m: f64,
    /// c^i = 1 − α^i(1) − a.
    pub c: Vec<f64>,
    /// s = Σⱼ σ^j √ρ^j c^j.
    pub s: f64,
    /// v = ‖b(1,α)‖².
    pub v: f64,
    /// b = ‖B(T,α)‖ = √((T−1)v + (1−a)²).
    pub b: f64,
    /// x = m/b, the signal-to-noise ratio.
    pub x: f64,
    pub pdf_x: f64,
    pub cdf_x: f64,
    /// r^i = (σ^i)²(1−ρ^i)c^i + σ^i√ρ^i s.
    pub r: Vec<f64>,
}

impl ReducedCtx {
    /// Per-period emission covariance Σ_{ij} = (σ^i)²(1−ρ^i)δ_{ij} + σ^iσ^j√(ρ^iρ^j);
    /// r = Σ·c and v = cᵀΣc.
    pub fn emission_cov(config: &MarketConfig, i: usize, j: usize) -> f64 {
        let fi = &config.firms[i];
        let fj = &config.firms[j];
        let mut cov = fi.std_emission
            * fj.std_emission
            * (fi.common_factor_loading * fj.common_factor_loading).sqrt();
        if i == j {
            cov += fi.std_emission * fi.std_emission * (1.0 - fi.common_factor_loading);
        }
        cov
    }
}

pub(crate) fn reduced_ctx(config: &MarketConfig, alpha0: &[f64], alpha1: &[f64]) -> ReducedCtx {
    let n = config.n_firms();
    let a = config.regulatory.cap_fraction;
    let t = config.horizon() as f64;
    let q = t - 1.0;

    let mut m = 0.0;
    let mut c = vec![0.0; n];
    let mut s = 0.0;
    let mut idio = 0.0;
    for (i, f) in config.firms.iter().enumerate() {
        m += (t * (1.0 - a) - alpha0[i] - q * alpha1[i]) * f.mean_emission;
        c[i] = 1.0 - a - alpha1[i];
        s += f.std_emission * f.common_factor_loading.sqrt() * c[i];
        idio += f.std_emission * f.std_emission * (1.0 - f.common_factor_loading) * c[i] * c[i];
    }
    let v = s * s + idio;
    let b = (q * v + (1.0 - a) * (1.0 - a)).sqrt();
    let x = m / b;
    let r = config
        .firms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.std_emission * f.std_emission * (1.0 - f.common_factor_loading) * c[i]
                + f.std_emission * f.common_factor_loading.sqrt() * s
        })
        .collect();
    ReducedCtx { q, m, c, s, v, b, x, pdf_x: normal_pdf(x), cdf_x: normal_cdf(x), r }
}

fn reduced_parts<'p>(config: &MarketConfig, plan: &'p AbatementPlan) -> Result<(&'p [f64], &'p [f64])> {
    plan.validate(config)?;
    plan.reduced_parts()
        .ok_or_else(|| Error::Invalid("the first-order-condition system expects a reduced plan".into()))
}

/// Gradient of the social cost in the reduced coordinates.
///
/// Entry 2i:   μ^i (k^i + γ^i μ^i α^i(0) − λΦ(x)).
/// Entry 2i+1: (T−1)[k^iμ^i + γ^i((μ^i)²+(σ^i)²)α^i(1) − λΦ(x)μ^i − λφ(x)r^i/‖B‖].
pub fn foc_residual(config: &MarketConfig, plan: &AbatementPlan) -> Result<Vec<f64>> {
    config.validate()?;
    let (alpha0, alpha1) = reduced_parts(config, plan)?;
    let ctx = reduced_ctx(config, alpha0, alpha1);
    let lambda = config.regulatory.penalty;
    let mut g = vec![0.0; 2 * config.n_firms()];
    for (i, f) in config.firms.iter().enumerate() {
        let mu = f.mean_emission;
        let second = mu * mu + f.std_emission * f.std_emission;
        g[2 * i] = mu * (f.linear_cost + f.quadratic_cost * mu * alpha0[i] - lambda * ctx.cdf_x);
        g[2 * i + 1] = ctx.q
            * (f.linear_cost * mu + f.quadratic_cost * second * alpha1[i]
                - lambda * ctx.cdf_x * mu
                - lambda * ctx.pdf_x * ctx.r[i] / ctx.b);
    }
    Ok(g)
}

/// Hessian of the social cost in the reduced coordinates (symmetric, and
/// positive definite wherever the objective's strict convexity is active).
pub fn hessian(config: &MarketConfig, plan: &AbatementPlan) -> Result<DMatrix<f64>> {
    config.validate()?;
    let (alpha0, alpha1) = reduced_parts(config, plan)?;
    let ctx = reduced_ctx(config, alpha0, alpha1);
    hessian_at(config, &ctx)
}

pub(crate) fn hessian_at(config: &MarketConfig, ctx: &ReducedCtx) -> Result<DMatrix<f64>> {
    let n = config.n_firms();
    let lambda = config.regulatory.penalty;
    let q = ctx.q;
    let lp = lambda * ctx.pdf_x;
    // y_i = ∂x/∂α^i(1) / (−q): the per-period response of x to the late block.
    let y: Vec<f64> = config
        .firms
        .iter()
        .enumerate()
        .map(|(i, f)| (f.mean_emission - ctx.x * ctx.r[i] / ctx.b) / ctx.b)
        .collect();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let fi = &config.firms[i];
        let mu_i = fi.mean_emission;
        for j in 0..n {
            let mu_j = config.firms[j].mean_emission;
            let mut h00 = lp * mu_i * mu_j / ctx.b;
            if i == j {
                h00 += fi.quadratic_cost * mu_i * mu_i;
            }
            h[(2 * i, 2 * j)] = h00;
            h[(2 * i, 2 * j + 1)] = q * lp * mu_i * y[j];
            h[(2 * i + 1, 2 * j)] = q * lp * mu_j * y[i];
            let cov = ReducedCtx::emission_cov(config, i, j);
            let mut h11 = q * lp * cov / ctx.b
                + q * q * lp * (ctx.b * y[i] * y[j] - ctx.r[i] * ctx.r[j] / (ctx.b * ctx.b * ctx.b));
            if i == j {
                h11 += q * fi.quadratic_cost * (mu_i * mu_i + fi.std_emission * fi.std_emission);
            }
            h[(2 * i + 1, 2 * j + 1)] = h11;
        }
    }
    Ok(h)
}

/// Ordered layout of the parameter vector θ = (λ, k¹..kⁿ, γ¹..γⁿ, μ¹..μⁿ, σ¹..σⁿ, ρ¹..ρⁿ, a).
#[derive(Clone, Copy, Debug)]
pub struct ThetaLayout {
    pub n: usize,
}

impl ThetaLayout {
    pub fn new(n: usize) -> Self {
        ThetaLayout { n }
    }

    pub fn dim(&self) -> usize {
        5 * self.n + 2
    }

    pub fn lambda(&self) -> usize {
        0
    }

    pub fn k(&self, i: usize) -> usize {
        1 + i
    }

    pub fn gamma(&self, i: usize) -> usize {
        1 + self.n + i
    }

    pub fn mu(&self, i: usize) -> usize {
        1 + 2 * self.n + i
    }

    pub fn sigma(&self, i: usize) -> usize {
        1 + 3 * self.n + i
    }

    pub fn rho(&self, i: usize) -> usize {
        1 + 4 * self.n + i
    }

    pub fn cap_fraction(&self) -> usize {
        1 + 5 * self.n
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        out.push("lambda".to_string());
        for stem in ["k", "gamma", "mu", "sigma", "rho"] {
            for i in 0..self.n {
                out.push(format!("{}_{}", stem, i + 1));
            }
        }
        out.push("cap_fraction".to_string());
        out
    }

    /// Value of component `idx` in `config`.
    pub fn value(&self, config: &MarketConfig, idx: usize) -> f64 {
        let n = self.n;
        match idx {
            0 => config.regulatory.penalty,
            i if i <= n => config.firms[i - 1].linear_cost,
            i if i <= 2 * n => config.firms[i - 1 - n].quadratic_cost,
            i if i <= 3 * n => config.firms[i - 1 - 2 * n].mean_emission,
            i if i <= 4 * n => config.firms[i - 1 - 3 * n].std_emission,
            i if i <= 5 * n => config.firms[i - 1 - 4 * n].common_factor_loading,
            i if i == 5 * n + 1 => config.regulatory.cap_fraction,
            _ => panic!("theta index {idx} out of range"),
        }
    }

    /// Copy of `config` with component `idx` shifted by `delta`.
    pub fn bump(&self, config: &MarketConfig, idx: usize, delta: f64) -> MarketConfig {
        let n = self.n;
        let mut out = config.clone();
        match idx {
            0 => out.regulatory.penalty += delta,
            i if i <= n => out.firms[i - 1].linear_cost += delta,
            i if i <= 2 * n => out.firms[i - 1 - n].quadratic_cost += delta,
            i if i <= 3 * n => out.firms[i - 1 - 2 * n].mean_emission += delta,
            i if i <= 4 * n => out.firms[i - 1 - 3 * n].std_emission += delta,
            i if i <= 5 * n => out.firms[i - 1 - 4 * n].common_factor_loading += delta,
            i if i == 5 * n + 1 => out.regulatory.cap_fraction += delta,
            _ => panic!("theta index {idx} out of range"),
        }
        out
    }
}

/// Explicit partial derivatives of the residual's building blocks with respect
/// to one parameter component, holding the plan fixed.
#[derive(Clone, Debug)]
pub(crate) struct ThetaPartial {
    /// ∂m/∂θ.
    pub dm: f64,
    /// ∂v/∂θ (per-period loading norm²).
    pub dv: f64,
    /// ∂w/∂θ including the cap term −2(1−a) when θ = a.
    pub dw: f64,
    /// ∂r^i/∂θ.
    pub dr: Vec<f64>,
    /// Direct terms of the α(0) rows (everything except the Φ(x) channel).
    pub d0: Vec<f64>,
    /// Direct terms of the per-period α(1) rows.
    pub d1: Vec<f64>,
}

pub(crate) fn theta_partial(
    config: &MarketConfig,
    ctx: &ReducedCtx,
    alpha0: &[f64],
    alpha1: &[f64],
    idx: usize,
) -> ThetaPartial {
    let n = config.n_firms();
    let layout = ThetaLayout::new(n);
    let a = config.regulatory.cap_fraction;
    let lambda = config.regulatory.penalty;
    let t = config.horizon() as f64;
    let q = ctx.q;
    let mut p = ThetaPartial {
        dm: 0.0,
        dv: 0.0,
        dw: 0.0,
        dr: vec![0.0; n],
        d0: vec![0.0; n],
        d1: vec![0.0; n],
    };

    if idx == layout.lambda() {
        for (i, f) in config.firms.iter().enumerate() {
            p.d0[i] = -ctx.cdf_x * f.mean_emission;
            p.d1[i] = -ctx.cdf_x * f.mean_emission - ctx.pdf_x * ctx.r[i] / ctx.b;
        }
    } else if idx == layout.cap_fraction() {
        p.dm = -t * config.firms.iter().map(|f| f.mean_emission).sum::<f64>();
        p.dv = -2.0 * ctx.r.iter().sum::<f64>();
        p.dw = q * p.dv - 2.0 * (1.0 - a);
        // Every c^i falls one-for-one with a, so ∂s/∂a = −Σⱼσ^j√ρ^j.
        let sum_load: f64 = config
            .firms
            .iter()
            .map(|f| f.std_emission * f.common_factor_loading.sqrt())
            .sum();
        for (i, f) in config.firms.iter().enumerate() {
            p.dr[i] = -f.std_emission * f.std_emission * (1.0 - f.common_factor_loading)
                - f.std_emission * f.common_factor_loading.sqrt() * sum_load;
        }
    } else if idx >= layout.k(0) && idx < layout.gamma(0) {
        let j = idx - layout.k(0);
        let mu = config.firms[j].mean_emission;
        p.d0[j] = mu;
        p.d1[j] = mu;
    } else if idx >= layout.gamma(0) && idx < layout.mu(0) {
        let j = idx - layout.gamma(0);
        let f = &config.firms[j];
        let mu = f.mean_emission;
        p.d0[j] = mu * mu * alpha0[j];
        p.d1[j] = (mu * mu + f.std_emission * f.std_emission) * alpha1[j];
    } else if idx >= layout.mu(0) && idx < layout.sigma(0) {
        let j = idx - layout.mu(0);
        let f = &config.firms[j];
        p.dm = t * (1.0 - a) - alpha0[j] - q * alpha1[j];
        p.d0[j] = f.linear_cost + 2.0 * f.quadratic_cost * f.mean_emission * alpha0[j] - lambda * ctx.cdf_x;
        p.d1[j] = f.linear_cost + 2.0 * f.quadratic_cost * f.mean_emission * alpha1[j] - lambda * ctx.cdf_x;
    } else if idx >= layout.sigma(0) && idx < layout.rho(0) {
        let j = idx - layout.sigma(0);
        let f = &config.firms[j];
        let rho = f.common_factor_loading;
        let cj = ctx.c[j];
        p.dv = 2.0 * ctx.s * rho.sqrt() * cj + 2.0 * f.std_emission * (1.0 - rho) * cj * cj;
        p.dw = q * p.dv;
        for (i, fi) in config.firms.iter().enumerate() {
            p.dr[i] = fi.std_emission * fi.common_factor_loading.sqrt() * rho.sqrt() * cj;
            if i == j {
                p.dr[i] += 2.0 * f.std_emission * (1.0 - rho) * cj + rho.sqrt() * ctx.s;
            }
        }
        p.d1[j] = 2.0 * f.quadratic_cost * f.std_emission * alpha1[j];
    } else if idx >= layout.rho(0) && idx < layout.cap_fraction() {
        let j = idx - layout.rho(0);
        let f = &config.firms[j];
        let rho = f.common_factor_loading;
        let sig = f.std_emission;
        let cj = ctx.c[j];
        p.dv = ctx.s * sig * cj / rho.sqrt() - sig * sig * cj * cj;
        p.dw = q * p.dv;
        for (i, fi) in config.firms.iter().enumerate() {
            p.dr[i] =
                fi.std_emission * fi.common_factor_loading.sqrt() * sig * cj / (2.0 * rho.sqrt());
            if i == j {
                p.dr[i] += -sig * sig * cj + sig * ctx.s / (2.0 * rho.sqrt());
            }
        }
    } else {
        panic!("theta index {idx} out of range");
    }
    p
}

/// Assemble one Jacobian column from the partials of the residual's blocks.
pub(crate) fn jac_column(config: &MarketConfig, ctx: &ReducedCtx, partial: &ThetaPartial) -> Vec<f64> {
    let n = config.n_firms();
    let lambda = config.regulatory.penalty;
    let q = ctx.q;
    let db = partial.dw / (2.0 * ctx.b);
    let dx = (partial.dm - ctx.x * db) / ctx.b;
    let lp = lambda * ctx.pdf_x;
    let mut col = vec![0.0; 2 * n];
    for (i, f) in config.firms.iter().enumerate() {
        let mu = f.mean_emission;
        col[2 * i] = partial.d0[i] - lp * mu * dx;
        col[2 * i + 1] = q
            * (partial.d1[i] - lp * mu * dx
                + lp * (ctx.x * dx * ctx.r[i] / ctx.b - partial.dr[i] / ctx.b
                    + ctx.r[i] * db / (ctx.b * ctx.b)));
    }
    col
}

/// Jacobian of the residual in θ, holding the plan fixed: one column per
/// parameter component in `ThetaLayout` order.
pub fn param_jacobian(config: &MarketConfig, plan: &AbatementPlan) -> Result<DMatrix<f64>> {
    config.validate()?;
    let (alpha0, alpha1) = reduced_parts(config, plan)?;
    let ctx = reduced_ctx(config, alpha0, alpha1);
    let layout = ThetaLayout::new(config.n_firms());
    let mut jac = DMatrix::zeros(2 * config.n_firms(), layout.dim());
    for idx in 0..layout.dim() {
        let partial = theta_partial(config, &ctx, alpha0, alpha1, idx);
        let col = jac_column(config, &ctx, &partial);
        for (row, value) in col.into_iter().enumerate() {
            jac[(row, idx)] = value;
        }
    }
    Ok(jac)
}

/// Hessian, parameter Jacobian, and the θ labels bundled for downstream use.
#[derive(Clone, Debug)]
pub struct SensitivitySystem {
    pub hessian: DMatrix<f64>,
    pub param_jacobian: DMatrix<f64>,
    pub theta_layout: Vec<String>,
}

pub fn sensitivity_system(config: &MarketConfig, plan: &AbatementPlan) -> Result<SensitivitySystem> {
    Ok(SensitivitySystem {
        hessian: hessian(config, plan)?,
        param_jacobian: param_jacobian(config, plan)?,
        theta_layout: ThetaLayout::new(config.n_firms()).labels(),
    })
}

/// Gradient of the social cost over a full per-period plan; row i holds
/// ∂R/∂α^i(t) for t = 0..T−1. Used by the full-horizon cross-check solver.
pub fn full_horizon_gradient(config: &MarketConfig, alpha: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let plan = AbatementPlan::Full { alpha: alpha.to_vec() };
    plan.validate(config)?;
    let n = config.n_firms();
    let horizon = config.horizon();
    let a = config.regulatory.cap_fraction;
    let lambda = config.regulatory.penalty;

    let mut m = 0.0;
    let mut w = (1.0 - a) * (1.0 - a);
    let mut s_t = vec![0.0; horizon];
    for t in 0..horizon {
        let mut idio = 0.0;
        for (i, f) in config.firms.iter().enumerate() {
            let c = 1.0 - a - alpha[i][t];
            m += c * f.mean_emission;
            if t >= 1 {
                s_t[t] += f.std_emission * f.common_factor_loading.sqrt() * c;
                idio += f.std_emission * f.std_emission * (1.0 - f.common_factor_loading) * c * c;
            }
        }
        if t >= 1 {
            w += s_t[t] * s_t[t] + idio;
        }
    }
    let b = w.sqrt();
    let x = m / b;
    let (pdf_x, cdf_x) = (normal_pdf(x), normal_cdf(x));

    let mut grad = vec![vec![0.0; horizon]; n];
    for (i, f) in config.firms.iter().enumerate() {
        let mu = f.mean_emission;
        let second = mu * mu + f.std_emission * f.std_emission;
        grad[i][0] = mu * (f.linear_cost + f.quadratic_cost * mu * alpha[i][0] - lambda * cdf_x);
        for t in 1..horizon {
            let c = 1.0 - a - alpha[i][t];
            let r_it = f.std_emission * f.std_emission * (1.0 - f.common_factor_loading) * c
                + f.std_emission * f.common_factor_loading.sqrt() * s_t[t];
            grad[i][t] = f.linear_cost * mu + f.quadratic_cost * second * alpha[i][t]
                - lambda * cdf_x * mu
                - lambda * pdf_x * r_it / b;
        }
    }
    Ok(grad)
}
