//! Market domain types and the closed-form Gaussian aggregates: net-emission
//! moments, abatement cost, expected excess emissions, and the planner's
//! social cost.
//!
//! Period 0 is deterministic (the period-0 shock is identically zero), so all
//! variance loadings run over periods 1..T−1 and the independent cap shock
//! contributes (1−a)² to the terminal variance.

use crate::error::{Error, Result};
use crate::gauss;

#[derive(Clone, Debug, PartialEq)]
pub struct FirmParams {
    /// k^i, €/ton.
    pub linear_cost: f64,
    /// γ^i, €/ton².
    pub quadratic_cost: f64,
    /// μ^i, tons per period.
    pub mean_emission: f64,
    /// σ^i, tons per period.
    pub std_emission: f64,
    /// ρ^i ∈ (0,1), share of per-period variance driven by the common factor.
    pub common_factor_loading: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegulatoryParams {
    /// λ, €/ton of terminal excess.
    pub penalty: f64,
    /// a ∈ (0,1), share of aggregate emissions granted as free allowances.
    pub cap_fraction: f64,
    /// T ≥ 2, number of periods in the compliance horizon.
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarketConfig {
    pub regulatory: RegulatoryParams,
    pub firms: Vec<FirmParams>,
}

impl MarketConfig {
    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn horizon(&self) -> usize {
        self.regulatory.horizon
    }

    /// Dimension of the parameter vector (λ, k¹..kⁿ, γ¹..γⁿ, μ¹..μⁿ, σ¹..σⁿ, ρ¹..ρⁿ, a).
    pub fn theta_dim(&self) -> usize {
        5 * self.n_firms() + 2
    }

    /// λ = 0 is accepted (it produces the zero-abatement boundary solution);
    /// everything else follows the strict parameter-domain constraints.
    pub fn validate(&self) -> Result<()> {
        let reg = &self.regulatory;
        if !reg.penalty.is_finite() || reg.penalty < 0.0 {
            return Err(Error::Config(format!("penalty must be nonnegative, got {}", reg.penalty)));
        }
        if !reg.cap_fraction.is_finite() || reg.cap_fraction <= 0.0 || reg.cap_fraction >= 1.0 {
            return Err(Error::Config(format!(
                "cap_fraction must lie in (0,1), got {}",
                reg.cap_fraction
            )));
        }
        if reg.horizon < 2 {
            return Err(Error::Config(format!("horizon must be at least 2 periods, got {}", reg.horizon)));
        }
        if self.firms.is_empty() {
            return Err(Error::Config("at least one firm is required".into()));
        }
        for (i, f) in self.firms.iter().enumerate() {
            let firm = |field: &str, v: f64| -> Error {
                Error::Config(format!("firm {}: {} must be positive, got {}", i + 1, field, v))
            };
            if !f.linear_cost.is_finite() || f.linear_cost <= 0.0 {
                return Err(firm("linear_cost", f.linear_cost));
            }
            if !f.quadratic_cost.is_finite() || f.quadratic_cost <= 0.0 {
                return Err(firm("quadratic_cost", f.quadratic_cost));
            }
            if !f.mean_emission.is_finite() || f.mean_emission <= 0.0 {
                return Err(firm("mean_emission", f.mean_emission));
            }
            if !f.std_emission.is_finite() || f.std_emission <= 0.0 {
                return Err(firm("std_emission", f.std_emission));
            }
            if !f.common_factor_loading.is_finite()
                || f.common_factor_loading <= 0.0
                || f.common_factor_loading >= 1.0
            {
                return Err(Error::Config(format!(
                    "firm {}: common_factor_loading must lie in (0,1), got {}",
                    i + 1,
                    f.common_factor_loading
                )));
            }
        }
        Ok(())
    }
}

/// Per-firm abatement rates, either in the two-value reduced parameterization
/// (the optimal plan is constant over periods 1..T−1) or as full per-period
/// vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum AbatementPlan {
    Reduced { alpha0: Vec<f64>, alpha1: Vec<f64> },
    Full { alpha: Vec<Vec<f64>> },
}

impl AbatementPlan {
    pub fn reduced(alpha0: Vec<f64>, alpha1: Vec<f64>) -> Self {
        AbatementPlan::Reduced { alpha0, alpha1 }
    }

    pub fn n_firms(&self) -> usize {
        match self {
            AbatementPlan::Reduced { alpha0, .. } => alpha0.len(),
            AbatementPlan::Full { alpha } => alpha.len(),
        }
    }

    /// Abatement rate of `firm` in period `t`.
    pub fn rate(&self, firm: usize, t: usize) -> f64 {
        match self {
            AbatementPlan::Reduced { alpha0, alpha1 } => {
                if t == 0 {
                    alpha0[firm]
                } else {
                    alpha1[firm]
                }
            }
            AbatementPlan::Full { alpha } => alpha[firm][t],
        }
    }

    pub fn reduced_parts(&self) -> Option<(&[f64], &[f64])> {
        match self {
            AbatementPlan::Reduced { alpha0, alpha1 } => Some((alpha0, alpha1)),
            AbatementPlan::Full { .. } => None,
        }
    }

    /// Expand to the full per-period representation over `horizon` periods.
    pub fn to_full(&self, horizon: usize) -> AbatementPlan {
        match self {
            AbatementPlan::Reduced { alpha0, alpha1 } => {
                let alpha = alpha0
                    .iter()
                    .zip(alpha1)
                    .map(|(&a0, &a1)| {
                        let mut row = vec![a1; horizon];
                        row[0] = a0;
                        row
                    })
                    .collect();
                AbatementPlan::Full { alpha }
            }
            AbatementPlan::Full { .. } => self.clone(),
        }
    }

    pub fn validate(&self, config: &MarketConfig) -> Result<()> {
        let n = config.n_firms();
        let horizon = config.horizon();
        match self {
            AbatementPlan::Reduced { alpha0, alpha1 } => {
                if alpha0.len() != n || alpha1.len() != n {
                    return Err(Error::Dimension(format!(
                        "reduced plan has {}/{} firm entries, config has {} firms",
                        alpha0.len(),
                        alpha1.len(),
                        n
                    )));
                }
                for v in alpha0.iter().chain(alpha1) {
                    if !(0.0..=1.0).contains(v) {
                        return Err(Error::Invalid(format!("abatement rate {v} outside [0,1]")));
                    }
                }
            }
            AbatementPlan::Full { alpha } => {
                if alpha.len() != n {
                    return Err(Error::Dimension(format!(
                        "full plan has {} firm rows, config has {} firms",
                        alpha.len(),
                        n
                    )));
                }
                for row in alpha {
                    if row.len() != horizon {
                        return Err(Error::Dimension(format!(
                            "full plan row has {} periods, config horizon is {}",
                            row.len(),
                            horizon
                        )));
                    }
                    for v in row {
                        if !(0.0..=1.0).contains(v) {
                            return Err(Error::Invalid(format!("abatement rate {v} outside [0,1]")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Moments of net terminal emissions Y = E^α_T − A_T under a reduced plan:
/// Y ~ N(mean, total_norm_sq).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetEmissionMoments {
    /// m(α), tons.
    pub mean: f64,
    /// ‖b(1,α)‖², tons²: per-period loading of the abated emission vector.
    pub per_period_loading_norm_sq: f64,
    /// ‖B(T,α)‖² = (T−1)‖b(1,α)‖² + (1−a)², tons².
    pub total_norm_sq: f64,
}

fn check(config: &MarketConfig, plan: &AbatementPlan) -> Result<()> {
    config.validate()?;
    plan.validate(config)
}

/// Mean net terminal emissions m(α) = Σᵢ Σₜ (1 − a − α^i(t)) μ^i.
pub fn mean_net_emissions(config: &MarketConfig, plan: &AbatementPlan) -> Result<f64> {
    check(config, plan)?;
    let a = config.regulatory.cap_fraction;
    let mut m = 0.0;
    for (i, f) in config.firms.iter().enumerate() {
        for t in 0..config.horizon() {
            m += (1.0 - a - plan.rate(i, t)) * f.mean_emission;
        }
    }
    Ok(m)
}

/// Squared norm of the period-`t` shock loading,
/// ‖b(t,α)‖² = (Σᵢ σ^i √ρ^i c^i)² + Σᵢ (σ^i)²(1−ρ^i)(c^i)² with c^i = 1−α^i(t)−a.
///
/// Period 0 carries no shock and is rejected; the terminal cap shock is
/// accounted for by `total_norm_sq` only.
pub fn loading_norm_sq(config: &MarketConfig, plan: &AbatementPlan, t: usize) -> Result<f64> {
    check(config, plan)?;
    if t == 0 || t >= config.horizon() {
        return Err(Error::Invalid(format!(
            "loading period {} outside 1..{}",
            t,
            config.horizon() - 1
        )));
    }
    let a = config.regulatory.cap_fraction;
    let mut common = 0.0;
    let mut idio = 0.0;
    for (i, f) in config.firms.iter().enumerate() {
        let c = 1.0 - a - plan.rate(i, t);
        common += f.std_emission * f.common_factor_loading.sqrt() * c;
        idio += f.std_emission * f.std_emission * (1.0 - f.common_factor_loading) * c * c;
    }
    Ok(common * common + idio)
}

/// ‖B(T,α)‖² = Σ_{t=1}^{T−1} ‖b(t,α)‖² + (1−a)².
pub fn total_norm_sq(config: &MarketConfig, plan: &AbatementPlan) -> Result<f64> {
    check(config, plan)?;
    let a = config.regulatory.cap_fraction;
    let mut w = (1.0 - a) * (1.0 - a);
    for t in 1..config.horizon() {
        w += loading_norm_sq(config, plan, t)?;
    }
    Ok(w)
}

/// Net-emission moments for a reduced plan.
pub fn net_emission_moments(config: &MarketConfig, plan: &AbatementPlan) -> Result<NetEmissionMoments> {
    check(config, plan)?;
    if plan.reduced_parts().is_none() {
        return Err(Error::Invalid("net_emission_moments expects a reduced plan".into()));
    }
    Ok(NetEmissionMoments {
        mean: mean_net_emissions(config, plan)?,
        per_period_loading_norm_sq: loading_norm_sq(config, plan, 1)?,
        total_norm_sq: total_norm_sq(config, plan)?,
    })
}

/// Expected aggregate abatement cost
/// AC(α) = Σᵢ Σₜ (k^i α^i(t) + (γ^i/2) α^i(t)² · E[(e^i_t)²] / E[e^i_t] …) evaluated
/// against the emission moments: period 0 uses the deterministic μ^i, periods
/// t ≥ 1 use E[e²] = μ² + σ².
pub fn abatement_cost(config: &MarketConfig, plan: &AbatementPlan) -> Result<f64> {
    check(config, plan)?;
    let mut ac = 0.0;
    for (i, f) in config.firms.iter().enumerate() {
        let mu2 = f.mean_emission * f.mean_emission;
        let second_moment = mu2 + f.std_emission * f.std_emission;
        for t in 0..config.horizon() {
            let al = plan.rate(i, t);
            let e2 = if t == 0 { mu2 } else { second_moment };
            ac += f.linear_cost * al * f.mean_emission + 0.5 * f.quadratic_cost * al * al * e2;
        }
    }
    Ok(ac)
}

/// Expected excess emissions EE(α) = E[(Y)⁺] = m Φ(m/‖B‖) + ‖B‖ φ(m/‖B‖).
pub fn expected_excess_emissions(config: &MarketConfig, plan: &AbatementPlan) -> Result<f64> {
    check(config, plan)?;
    let m = mean_net_emissions(config, plan)?;
    let w = total_norm_sq(config, plan)?;
    Ok(gauss::expected_positive_part(m, w.sqrt()))
}

/// Planner objective R(α) = AC(α) + λ·EE(α).
pub fn social_cost(config: &MarketConfig, plan: &AbatementPlan) -> Result<f64> {
    Ok(abatement_cost(config, plan)? + config.regulatory.penalty * expected_excess_emissions(config, plan)?)
}
