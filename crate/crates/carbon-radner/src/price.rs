//! Closed-form allowance-price analytics for a reduced plan: the price along
//! a shock path, its constant mean, and its variance profile through the
//! Owen's-T reduction, together with the information ratio ℓ(t) that governs
//! how uncertainty resolves over the horizon.

use crate::error::{Error, Result};
use crate::foc::{reduced_ctx, ReducedCtx};
use crate::gauss::{normal_cdf, owens_t};
use crate::model::{AbatementPlan, MarketConfig};

#[derive(Clone, Debug)]
pub struct PriceMoments {
    /// μ_P = P₀, €/ton, constant over t by the martingale property.
    pub mean: f64,
    /// σ²_{P_t} for t = 0..T, (€/ton)².
    pub variance_by_time: Vec<f64>,
    /// ℓ(t) for t = 0..T, from 1 down to 0.
    pub ell_by_time: Vec<f64>,
}

fn ctx_for<'p>(config: &MarketConfig, plan: &'p AbatementPlan) -> Result<ReducedCtx> {
    config.validate()?;
    plan.validate(config)?;
    let (a0, a1) = plan
        .reduced_parts()
        .ok_or_else(|| Error::Invalid("price analytics expect a reduced plan".into()))?;
    Ok(reduced_ctx(config, a0, a1))
}

/// Mean allowance price μ_P = λΦ(m/‖B‖); equals P₀ and is constant in t.
pub fn price_mean(config: &MarketConfig, plan: &AbatementPlan) -> Result<f64> {
    let ctx = ctx_for(config, plan)?;
    Ok(config.regulatory.penalty * ctx.cdf_x)
}

/// Information ratio
/// ℓ(t) = √(((T−1−t)v + (1−a)²) / ((T−1+t)v + (1−a)²)) for t < T, and 0 at t = T.
pub fn information_ratio(config: &MarketConfig, plan: &AbatementPlan, t: usize) -> Result<f64> {
    let ctx = ctx_for(config, plan)?;
    let horizon = config.horizon();
    if t > horizon {
        return Err(Error::Invalid(format!("period {t} outside 0..{horizon}")));
    }
    Ok(ell_at(config, &ctx, t))
}

fn ell_at(config: &MarketConfig, ctx: &ReducedCtx, t: usize) -> f64 {
    if t == config.horizon() {
        return 0.0;
    }
    let cap = (1.0 - config.regulatory.cap_fraction).powi(2);
    let tf = t as f64;
    (((ctx.q - tf) * ctx.v + cap) / ((ctx.q + tf) * ctx.v + cap)).sqrt()
}

/// Price variance σ²_{P_t} = 2λ²[𝒯(x,1) − 𝒯(x,ℓ(t))], with the exact endpoint
/// values 0 at t = 0 and λ²Φ(x)(1−Φ(x)) at t = T.
pub fn price_variance(config: &MarketConfig, plan: &AbatementPlan, t: usize) -> Result<f64> {
    let ctx = ctx_for(config, plan)?;
    let horizon = config.horizon();
    if t > horizon {
        return Err(Error::Invalid(format!("period {t} outside 0..{horizon}")));
    }
    Ok(variance_at(config, &ctx, t))
}

fn variance_at(config: &MarketConfig, ctx: &ReducedCtx, t: usize) -> f64 {
    let lambda = config.regulatory.penalty;
    if t == 0 {
        return 0.0;
    }
    if t == config.horizon() {
        return lambda * lambda * ctx.cdf_x * (1.0 - ctx.cdf_x);
    }
    let ell = ell_at(config, ctx, t);
    2.0 * lambda * lambda * (owens_t(ctx.x, 1.0) - owens_t(ctx.x, ell))
}

/// Mean, variance profile, and information ratios in one pass.
pub fn price_moments(config: &MarketConfig, plan: &AbatementPlan) -> Result<PriceMoments> {
    let ctx = ctx_for(config, plan)?;
    let horizon = config.horizon();
    let mut variance_by_time = Vec::with_capacity(horizon + 1);
    let mut ell_by_time = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        variance_by_time.push(variance_at(config, &ctx, t));
        ell_by_time.push(ell_at(config, &ctx, t));
    }
    Ok(PriceMoments { mean: config.regulatory.penalty * ctx.cdf_x, variance_by_time, ell_by_time })
}

/// Shock history ε_0..ε_t, each an (n+1)-vector with the common factor first;
/// the period-0 entry is identically zero by the filtration convention.
#[derive(Clone, Debug)]
pub struct ShockPrefix {
    rows: Vec<Vec<f64>>,
}

impl ShockPrefix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("shock prefix must cover at least period 0".into()));
        }
        let width = rows[0].len();
        for (t, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Dimension(format!(
                    "shock row {} has {} entries, expected {}",
                    t,
                    row.len(),
                    width
                )));
            }
        }
        if rows[0].iter().any(|&x| x != 0.0) {
            return Err(Error::Invalid("period-0 shocks must be identically zero".into()));
        }
        Ok(ShockPrefix { rows })
    }

    /// All-zero shocks through period `t` for an (n+1)-dimensional market.
    pub fn zeros(n_plus_1: usize, t: usize) -> Self {
        ShockPrefix { rows: vec![vec![0.0; n_plus_1]; t + 1] }
    }

    pub fn periods_covered(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }
}

/// Price at period t ≤ T−1 given the shock history:
/// P_t = λΦ((m + Σ_{s≤t} b·ε_s) / √((T−1−t)v + (1−a)²)).
pub fn price_at(
    config: &MarketConfig,
    plan: &AbatementPlan,
    shocks: &ShockPrefix,
    t: usize,
) -> Result<f64> {
    let ctx = ctx_for(config, plan)?;
    let horizon = config.horizon();
    if t >= horizon {
        return Err(Error::Invalid(format!(
            "price_at covers periods 0..{} (period {} has only the settlement value)",
            horizon - 1,
            t
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

    let mut drift = ctx.m;
    for s in 1..=t {
        let row = shocks.row(s);
        drift += ctx.s * row[0];
        for (j, f) in config.firms.iter().enumerate() {
            drift += f.std_emission * (1.0 - f.common_factor_loading).sqrt() * ctx.c[j] * row[j + 1];
        }
    }
    let cap = (1.0 - config.regulatory.cap_fraction).powi(2);
    let denom = ((ctx.q - t as f64) * ctx.v + cap).sqrt();
    Ok(config.regulatory.penalty * normal_cdf(drift / denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FirmParams, RegulatoryParams};

    fn config() -> MarketConfig {
        MarketConfig {
            regulatory: RegulatoryParams { penalty: 15.0, cap_fraction: 0.35, horizon: 10 },
            firms: vec![
                FirmParams {
                    linear_cost: 1.0,
                    quadratic_cost: 3.0,
                    mean_emission: 1.1,
                    std_emission: 0.4,
                    common_factor_loading: 0.55,
                },
                FirmParams {
                    linear_cost: 2.0,
                    quadratic_cost: 2.5,
                    mean_emission: 0.9,
                    std_emission: 0.35,
                    common_factor_loading: 0.4,
                },
            ],
        }
    }

    #[test]
    fn variance_endpoints() {
        let cfg = config();
        let plan = AbatementPlan::reduced(vec![0.3, 0.25], vec![0.28, 0.22]);
        assert_eq!(price_variance(&cfg, &plan, 0).unwrap(), 0.0);
        let moments = price_moments(&cfg, &plan).unwrap();
        assert_eq!(moments.ell_by_time[0], 1.0);
        assert_eq!(*moments.ell_by_time.last().unwrap(), 0.0);
        let x = {
            let m = crate::model::mean_net_emissions(&cfg, &plan).unwrap();
            let w = crate::model::total_norm_sq(&cfg, &plan).unwrap();
            m / w.sqrt()
        };
        let phi = normal_cdf(x);
        let lam = cfg.regulatory.penalty;
        let terminal = moments.variance_by_time[cfg.horizon()];
        assert_eq!(terminal, lam * lam * phi * (1.0 - phi));
        for t in 1..=cfg.horizon() {
            assert!(moments.variance_by_time[t] >= moments.variance_by_time[t - 1] - 1e-12);
        }
    }

    #[test]
    fn half_penalty_when_mean_is_zero() {
        let cfg = config();
        let level = 1.0 - cfg.regulatory.cap_fraction;
        let plan = AbatementPlan::reduced(vec![level, level], vec![level, level]);
        let p = price_mean(&cfg, &plan).unwrap();
        assert!((p - 0.5 * cfg.regulatory.penalty).abs() < 1e-12);
        // With all loadings gone, information resolves only at settlement.
        for t in 0..cfg.horizon() {
            assert_eq!(information_ratio(&cfg, &plan, t).unwrap(), 1.0);
        }
    }

    #[test]
    fn price_at_deterministic_start() {
        let cfg = config();
        let plan = AbatementPlan::reduced(vec![0.3, 0.25], vec![0.28, 0.22]);
        let shocks = ShockPrefix::zeros(cfg.n_firms() + 1, 0);
        let p0 = price_at(&cfg, &plan, &shocks, 0).unwrap();
        assert_eq!(p0, price_mean(&cfg, &plan).unwrap());

        // Zero shocks keep the numerator at m, so the price drifts toward
        // Φ(±∞) with the sign of m as t grows.
        let m = crate::model::mean_net_emissions(&cfg, &plan).unwrap();
        assert!(m > 0.0);
        let zeros = ShockPrefix::zeros(cfg.n_firms() + 1, cfg.horizon() - 1);
        let mut last = p0;
        for t in 1..cfg.horizon() {
            let p = price_at(&cfg, &plan, &zeros, t).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn shock_prefix_validation() {
        assert!(ShockPrefix::new(vec![vec![0.0, 0.0], vec![1.0, -0.5]]).is_ok());
        assert!(ShockPrefix::new(vec![vec![0.1, 0.0]]).is_err());
        assert!(ShockPrefix::new(vec![vec![0.0, 0.0], vec![1.0]]).is_err());
        let cfg = config();
        let plan = AbatementPlan::reduced(vec![0.3, 0.25], vec![0.28, 0.22]);
        let shocks = ShockPrefix::zeros(cfg.n_firms() + 1, 1);
        assert!(price_at(&cfg, &plan, &shocks, 5).is_err());
        assert!(price_at(&cfg, &plan, &shocks, cfg.horizon()).is_err());
    }
}
