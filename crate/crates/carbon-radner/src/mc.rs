//! Monte Carlo cross-check of the closed forms and of the equilibrium
//! property itself: simulate emission paths under a plan, price the allowance
//! along each path, and test martingality, market clearing, and the absence
//! of profitable firm deviations directly on the samples.
//!
//! Reproducibility contract: each path draws from its own generator keyed by
//! (seed, path index), so results are bit-identical for a given seed no
//! matter how the work is chunked across threads.

use std::io::Write;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::foc;
use crate::gauss::normal_cdf;
use crate::model::{AbatementPlan, MarketConfig};

fn path_key(seed: u64, path: u64) -> u64 {
    let mut z = seed ^ path.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Immutable per-simulation tables derived from (config, plan) once.
struct SimModel {
    n: usize,
    horizon: usize,
    lambda: f64,
    one_minus_a: f64,
    mu: Vec<f64>,
    /// σ^i √(1−ρ^i).
    sig_idio: Vec<f64>,
    /// σ^i √ρ^i.
    sig_common: Vec<f64>,
    /// α^i(t), n × T.
    alpha: Vec<Vec<f64>>,
    /// c^i_t = 1 − a − α^i(t), n × T.
    c: Vec<Vec<f64>>,
    /// Common-factor loading of net emissions per period (zero at t = 0).
    s_t: Vec<f64>,
    /// √(Σ_{s>t} ‖b_s‖² + (1−a)²) for t = 0..T−1.
    tail_sd: Vec<f64>,
    /// Expected net emissions m(α).
    m: f64,
}

impl SimModel {
    fn build(config: &MarketConfig, plan: &AbatementPlan) -> Result<SimModel> {
        config.validate()?;
        plan.validate(config)?;
        let n = config.n_firms();
        let horizon = config.horizon();
        let a = config.regulatory.cap_fraction;

        let mu: Vec<f64> = config.firms.iter().map(|f| f.mean_emission).collect();
        let sig_idio: Vec<f64> = config
            .firms
            .iter()
            .map(|f| f.std_emission * (1.0 - f.common_factor_loading).sqrt())
            .collect();
        let sig_common: Vec<f64> = config
            .firms
            .iter()
            .map(|f| f.std_emission * f.common_factor_loading.sqrt())
            .collect();

        let mut alpha = vec![vec![0.0; horizon]; n];
        let mut c = vec![vec![0.0; horizon]; n];
        let mut m = 0.0;
        for i in 0..n {
            for t in 0..horizon {
                alpha[i][t] = plan.rate(i, t);
                c[i][t] = 1.0 - a - alpha[i][t];
                m += c[i][t] * mu[i];
            }
        }

        let mut s_t = vec![0.0; horizon];
        let mut v_t = vec![0.0; horizon];
        for t in 1..horizon {
            let mut idio = 0.0;
            for i in 0..n {
                s_t[t] += sig_common[i] * c[i][t];
                idio += sig_idio[i] * sig_idio[i] * c[i][t] * c[i][t];
            }
            v_t[t] = s_t[t] * s_t[t] + idio;
        }
        let mut tail_sd = vec![0.0; horizon];
        let mut acc = (1.0 - a) * (1.0 - a);
        for t in (0..horizon).rev() {
            tail_sd[t] = acc.sqrt();
            if t >= 1 {
                acc += v_t[t];
            }
        }

        Ok(SimModel {
            n,
            horizon,
            lambda: config.regulatory.penalty,
            one_minus_a: 1.0 - a,
            mu,
            sig_idio,
            sig_common,
            alpha,
            c,
            s_t,
            tail_sd,
            m,
        })
    }
}

/// Per-path outputs of one generation pass.
struct PathScratch {
    /// Σ_{t≥1} e^i_t.
    s1: Vec<f64>,
    /// Σ_{t≥1} (e^i_t)².
    s2: Vec<f64>,
    /// Σ_{t≥1} α^i(t) e^i_t.
    ab1: Vec<f64>,
    /// Σ_{t≥1} (α^i(t) e^i_t)².
    ab2: Vec<f64>,
    prices: Vec<f64>,
    sign_words: Vec<u64>,
    /// Shock rows ε_t, T × (n+1), row 0 zero; the cap shock is separate.
    shocks: Vec<f64>,
    /// e^i_t, n × T.
    emissions: Vec<f64>,
    cap_shock: f64,
    net_position: f64,
    settlement: f64,
}

impl PathScratch {
    fn new(n: usize, horizon: usize, words: usize) -> PathScratch {
        PathScratch {
            s1: vec![0.0; n],
            s2: vec![0.0; n],
            ab1: vec![0.0; n],
            ab2: vec![0.0; n],
            prices: vec![0.0; horizon + 1],
            sign_words: vec![0; words],
            shocks: vec![0.0; horizon * (n + 1)],
            emissions: vec![0.0; n * horizon],
            cap_shock: 0.0,
            net_position: 0.0,
            settlement: 0.0,
        }
    }
}

fn gen_path(model: &SimModel, key: u64, negate: bool, scr: &mut PathScratch) {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let flip = if negate { -1.0 } else { 1.0 };
    let n = model.n;
    let horizon = model.horizon;

    scr.s1.iter_mut().for_each(|x| *x = 0.0);
    scr.s2.iter_mut().for_each(|x| *x = 0.0);
    scr.ab1.iter_mut().for_each(|x| *x = 0.0);
    scr.ab2.iter_mut().for_each(|x| *x = 0.0);
    scr.sign_words.iter_mut().for_each(|x| *x = 0);
    for x in scr.shocks[..n + 1].iter_mut() {
        *x = 0.0;
    }
    for i in 0..n {
        scr.emissions[i * horizon] = model.mu[i];
    }

    let mut drift = model.m;
    scr.prices[0] = model.lambda * normal_cdf(model.m / model.tail_sd[0]);
    for t in 1..horizon {
        let draw: f64 = StandardNormal.sample(&mut rng);
        let common = flip * draw;
        if common > 0.0 {
            scr.sign_words[t / 64] |= 1u64 << (t % 64);
        }
        scr.shocks[t * (n + 1)] = common;
        drift += model.s_t[t] * common;
        for i in 0..n {
            let draw: f64 = StandardNormal.sample(&mut rng);
            let own = flip * draw;
            scr.shocks[t * (n + 1) + i + 1] = own;
            let e = model.mu[i] + model.sig_idio[i] * own + model.sig_common[i] * common;
            scr.emissions[i * horizon + t] = e;
            scr.s1[i] += e;
            scr.s2[i] += e * e;
            let al = model.alpha[i][t];
            scr.ab1[i] += al * e;
            scr.ab2[i] += al * al * e * e;
            drift += model.sig_idio[i] * model.c[i][t] * own;
        }
        scr.prices[t] = model.lambda * normal_cdf(drift / model.tail_sd[t]);
    }
    let cap_draw: f64 = StandardNormal.sample(&mut rng);
    scr.cap_shock = flip * cap_draw;

    let mut y = -model.one_minus_a * scr.cap_shock;
    for i in 0..n {
        y += model.c[i][0] * model.mu[i] + model.one_minus_a * scr.s1[i] - scr.ab1[i];
    }
    scr.net_position = y;
    scr.settlement = if y > 0.0 { model.lambda } else { 0.0 };
    scr.prices[horizon] = scr.settlement;
}

/// Simulated ensemble: per-path sufficient statistics, settlement data, and
/// the full price path, enough to evaluate costs of arbitrary reduced plans
/// per firm without storing every emission realization.
pub struct PathEnsemble {
    config: MarketConfig,
    plan: AbatementPlan,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
    n: usize,
    horizon: usize,
    words_per_path: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
    ab1: Vec<f64>,
    ab2: Vec<f64>,
    cap_shock: Vec<f64>,
    net_position: Vec<f64>,
    settlement: Vec<f64>,
    prices: Vec<f64>,
    sign_words: Vec<u64>,
}

/// Full per-path realization, regenerated on demand from the seed.
#[derive(Clone, Debug)]
pub struct PathDetail {
    /// ε_t rows, T × (n+1), common factor first, row 0 zero.
    pub shocks: Vec<Vec<f64>>,
    pub cap_shock: f64,
    /// e^i_t, n × T.
    pub emissions: Vec<Vec<f64>>,
    /// P_t for t = 0..T; the final entry is the settlement value ξ.
    pub prices: Vec<f64>,
    pub net_position: f64,
    pub settlement: f64,
}

pub fn simulate(
    config: &MarketConfig,
    plan: &AbatementPlan,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    simulate_inner(config, plan, n_paths, seed, false)
}

/// Antithetic variant: `n_pairs` pairs where the second path of each pair
/// negates every draw of the first. Standard errors are then computed over
/// pair averages.
pub fn simulate_antithetic(
    config: &MarketConfig,
    plan: &AbatementPlan,
    n_pairs: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    simulate_inner(config, plan, 2 * n_pairs, seed, true)
}

fn simulate_inner(
    config: &MarketConfig,
    plan: &AbatementPlan,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return Err(Error::Invalid("simulation needs at least one path".into()));
    }
    let model = SimModel::build(config, plan)?;
    let n = model.n;
    let horizon = model.horizon;
    let words = horizon / 64 + 1;
    let t_len = horizon + 1;

    let mut out = PathEnsemble {
        config: config.clone(),
        plan: plan.clone(),
        n_paths,
        seed,
        antithetic,
        n,
        horizon,
        words_per_path: words,
        s1: vec![0.0; n_paths * n],
        s2: vec![0.0; n_paths * n],
        ab1: vec![0.0; n_paths * n],
        ab2: vec![0.0; n_paths * n],
        cap_shock: vec![0.0; n_paths],
        net_position: vec![0.0; n_paths],
        settlement: vec![0.0; n_paths],
        prices: vec![0.0; n_paths * t_len],
        sign_words: vec![0; n_paths * words],
    };

    out.s1
        .par_chunks_mut(n)
        .zip(out.s2.par_chunks_mut(n))
        .zip(out.ab1.par_chunks_mut(n))
        .zip(out.ab2.par_chunks_mut(n))
        .zip(out.cap_shock.par_iter_mut())
        .zip(out.net_position.par_iter_mut())
        .zip(out.settlement.par_iter_mut())
        .zip(out.prices.par_chunks_mut(t_len))
        .zip(out.sign_words.par_chunks_mut(words))
        .enumerate()
        .for_each_init(
            || PathScratch::new(n, horizon, words),
            |scr, (p, ((((((((s1, s2), ab1), ab2), cap), y), xi), prices), signs))| {
                let (key_index, negate) =
                    if antithetic { ((p / 2) as u64, p % 2 == 1) } else { (p as u64, false) };
                gen_path(&model, path_key(seed, key_index), negate, scr);
                s1.copy_from_slice(&scr.s1);
                s2.copy_from_slice(&scr.s2);
                ab1.copy_from_slice(&scr.ab1);
                ab2.copy_from_slice(&scr.ab2);
                *cap = scr.cap_shock;
                *y = scr.net_position;
                *xi = scr.settlement;
                prices.copy_from_slice(&scr.prices);
                signs.copy_from_slice(&scr.sign_words);
            },
        );
    Ok(out)
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_antithetic(&self) -> bool {
        self.antithetic
    }

    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    pub fn plan(&self) -> &AbatementPlan {
        &self.plan
    }

    /// Σ_{t≥1} e^i_t per firm for one path.
    pub fn sum_emissions(&self, path: usize) -> &[f64] {
        &self.s1[path * self.n..(path + 1) * self.n]
    }

    pub fn cap_shock(&self, path: usize) -> f64 {
        self.cap_shock[path]
    }

    pub fn net_position(&self, path: usize) -> f64 {
        self.net_position[path]
    }

    pub fn settlement(&self, path: usize) -> f64 {
        self.settlement[path]
    }

    pub fn price(&self, path: usize, t: usize) -> f64 {
        self.prices[path * (self.horizon + 1) + t]
    }

    /// Mean and standard error of P_t across paths.
    pub fn price_mean_se(&self, t: usize) -> (f64, f64) {
        self.mean_se(|p| self.price(p, t))
    }

    fn common_shock_positive(&self, path: usize, t: usize) -> bool {
        let word = self.sign_words[path * self.words_per_path + t / 64];
        word & (1u64 << (t % 64)) != 0
    }

    /// Mean and standard error of a per-path statistic; with antithetic
    /// sampling the averaging unit is the pair.
    fn mean_se<F: Fn(usize) -> f64>(&self, stat: F) -> (f64, f64) {
        let units = if self.antithetic { self.n_paths / 2 } else { self.n_paths };
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for u in 0..units {
            let value = if self.antithetic {
                0.5 * (stat(2 * u) + stat(2 * u + 1))
            } else {
                stat(u)
            };
            sum += value;
            sumsq += value * value;
        }
        let mean = sum / units as f64;
        if units < 2 {
            return (mean, 0.0);
        }
        let var = ((sumsq - sum * sum / units as f64) / (units as f64 - 1.0)).max(0.0);
        (mean, (var / units as f64).sqrt())
    }

    /// Regenerate one path in full from the stored seed.
    pub fn path_detail(&self, path: usize) -> Result<PathDetail> {
        if path >= self.n_paths {
            return Err(Error::Invalid(format!(
                "path {path} outside ensemble of {}",
                self.n_paths
            )));
        }
        let model = SimModel::build(&self.config, &self.plan)?;
        let mut scr = PathScratch::new(self.n, self.horizon, self.words_per_path);
        let (key_index, negate) = if self.antithetic {
            ((path / 2) as u64, path % 2 == 1)
        } else {
            (path as u64, false)
        };
        gen_path(&model, path_key(self.seed, key_index), negate, &mut scr);
        let shocks = (0..self.horizon)
            .map(|t| scr.shocks[t * (self.n + 1)..(t + 1) * (self.n + 1)].to_vec())
            .collect();
        let emissions = (0..self.n)
            .map(|i| scr.emissions[i * self.horizon..(i + 1) * self.horizon].to_vec())
            .collect();
        Ok(PathDetail {
            shocks,
            cap_shock: scr.cap_shock,
            emissions,
            prices: scr.prices,
            net_position: scr.net_position,
            settlement: scr.settlement,
        })
    }

    /// Columnar dump of the first `n_dump` paths: one row per
    /// (path, period, firm) with the price, net position, and settlement.
    pub fn dump_paths_csv<W: Write>(&self, mut out: W, n_dump: usize) -> Result<()> {
        writeln!(out, "path_id,t,firm,e,P,Y,xi")?;
        for path in 0..n_dump.min(self.n_paths) {
            let detail = self.path_detail(path)?;
            for t in 0..self.horizon {
                for firm in 0..self.n {
                    writeln!(
                        out,
                        "{path},{t},{firm},{:.6},{:.6},{:.6},{:.6}",
                        detail.emissions[firm][t],
                        detail.prices[t],
                        detail.net_position,
                        detail.settlement,
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Sample mean and standard error of (E^α_T − A_T)⁺.
pub fn estimate_excess_emissions(ensemble: &PathEnsemble) -> (f64, f64) {
    ensemble.mean_se(|p| ensemble.net_position[p].max(0.0))
}

/// Sample variance of P_t across paths and its delta-method standard error,
/// √((m₄ − s⁴)/n) with m₄ the fourth central moment.
pub fn estimate_price_variance(ensemble: &PathEnsemble, t: usize) -> (f64, f64) {
    let n = ensemble.n_paths as f64;
    let mean = (0..ensemble.n_paths).map(|p| ensemble.price(p, t)).sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for p in 0..ensemble.n_paths {
        let d = ensemble.price(p, t) - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    let variance = m2 * n / (n - 1.0);
    (variance, ((m4 - m2 * m2).max(0.0) / n).sqrt())
}

/// Max over t ≥ 1 of |mean(P_t) − P₀| in standard-error units. The t = T row
/// checks that the settlement values average to the initial price.
pub fn check_martingale(ensemble: &PathEnsemble) -> f64 {
    let p0 = ensemble.price(0, 0);
    let mut worst: f64 = 0.0;
    for t in 1..=ensemble.horizon {
        let (mean, se) = ensemble.mean_se(|p| ensemble.price(p, t));
        let diff = (mean - p0).abs();
        let stat = if diff == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            diff / se
        };
        worst = worst.max(stat);
    }
    worst
}

/// Per-firm market positions of the settlement-date clearing construction:
/// zero until T, and the net short position minus the equal share of the
/// aggregate at T. Positions sum to zero exactly at every date.
#[derive(Clone, Debug)]
pub struct TradingStrategyPath {
    /// n × (T+1).
    pub positions: Vec<Vec<f64>>,
}

pub fn trading_positions(ensemble: &PathEnsemble, path: usize) -> Result<TradingStrategyPath> {
    if path >= ensemble.n_paths {
        return Err(Error::Invalid(format!(
            "path {path} outside ensemble of {}",
            ensemble.n_paths
        )));
    }
    let n = ensemble.n;
    let horizon = ensemble.horizon;
    let model = SimModel::build(&ensemble.config, &ensemble.plan)?;
    let share = ensemble.net_position[path] / n as f64;
    let s1 = ensemble.sum_emissions(path);
    let mut positions = vec![vec![0.0; horizon + 1]; n];
    let mut partial = 0.0;
    for i in 0..n {
        let y_i = model.c[i][0] * model.mu[i] + model.one_minus_a * s1[i]
            - ensemble.ab1[path * n + i]
            - model.one_minus_a * ensemble.cap_shock[path] / n as f64;
        let q_i = if i + 1 < n { y_i - share } else { -partial };
        partial += q_i;
        positions[i][horizon] = q_i;
    }
    Ok(TradingStrategyPath { positions })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeviationKind {
    Abatement,
    Trading,
}

#[derive(Clone, Debug)]
pub struct OptimalityCheck {
    pub firm: usize,
    pub kind: DeviationKind,
    /// Mean of (deviation cost − equilibrium cost) across paths, €.
    pub mean_excess_cost: f64,
    pub standard_error: f64,
    /// mean/SE; a profitable deviation drives this below −3.
    pub margin: f64,
    pub violation: bool,
}

#[derive(Clone, Debug)]
pub struct OptimalityReport {
    pub checks: Vec<OptimalityCheck>,
    pub n_violations: usize,
    pub worst_margin: f64,
}

const DEVIATION_STREAM: u64 = 0x5EED_DE71;

/// Test the equilibrium property on samples: no random feasible abatement
/// deviation and no adapted zero-terminal trading deviation may lower a
/// firm's expected cost by more than 3 standard errors.
pub fn check_firm_optimality(
    config: &MarketConfig,
    plan: &AbatementPlan,
    ensemble: &PathEnsemble,
    n_alternatives: usize,
) -> Result<OptimalityReport> {
    if *ensemble.config() != *config || *ensemble.plan() != *plan {
        return Err(Error::Invalid(
            "optimality check needs the ensemble simulated at the same config and plan".into(),
        ));
    }
    let (alpha0, alpha1) = plan
        .reduced_parts()
        .ok_or_else(|| Error::Invalid("optimality deviations are defined for reduced plans".into()))?;
    let n = ensemble.n;
    let horizon = ensemble.horizon;
    let mut checks = Vec::with_capacity(n * n_alternatives);
    for firm in 0..n {
        let f = &config.firms[firm];
        for alt in 0..n_alternatives {
            let mut rng = ChaCha8Rng::seed_from_u64(path_key(
                ensemble.seed ^ DEVIATION_STREAM,
                ((firm as u64) << 32) | alt as u64,
            ));
            let check = if alt % 2 == 0 {
                let d0: f64 = rng.gen_range(-0.05..0.05);
                let d1: f64 = rng.gen_range(-0.05..0.05);
                let new0 = (alpha0[firm] + d0).clamp(0.0, 1.0);
                let new1 = (alpha1[firm] + d1).clamp(0.0, 1.0);
                let mu = f.mean_emission;
                let k = f.linear_cost;
                let ga = f.quadratic_cost;
                let base0 = alpha0[firm];
                let base1 = alpha1[firm];
                let (mean, se) = ensemble.mean_se(|p| {
                    let s1 = ensemble.s1[p * n + firm];
                    let s2 = ensemble.s2[p * n + firm];
                    let xi = ensemble.settlement[p];
                    k * mu * (new0 - base0)
                        + 0.5 * ga * mu * mu * (new0 * new0 - base0 * base0)
                        + k * (new1 - base1) * s1
                        + 0.5 * ga * (new1 * new1 - base1 * base1) * s2
                        + xi * ((base0 - new0) * mu + (base1 - new1) * s1)
                });
                build_check(firm, DeviationKind::Abatement, mean, se)
            } else {
                // Buy (or sell) a block at an adapted time on the event that
                // the common shock is positive, unwinding at settlement; the
                // martingale property makes its expected cost zero.
                let s = rng.gen_range(1..horizon);
                let magnitude = rng.gen_range(0.0..0.01 * f.mean_emission);
                let block = if rng.gen::<bool>() { magnitude } else { -magnitude };
                let (mean, se) = ensemble.mean_se(|p| {
                    if ensemble.common_shock_positive(p, s) {
                        block * (ensemble.price(p, s) - ensemble.settlement[p])
                    } else {
                        0.0
                    }
                });
                build_check(firm, DeviationKind::Trading, mean, se)
            };
            checks.push(check);
        }
    }
    let n_violations = checks.iter().filter(|c| c.violation).count();
    let worst_margin = checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    Ok(OptimalityReport { checks, n_violations, worst_margin })
}

fn build_check(firm: usize, kind: DeviationKind, mean: f64, se: f64) -> OptimalityCheck {
    let margin = if mean == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY * mean.signum()
    } else {
        mean / se
    };
    OptimalityCheck {
        firm,
        kind,
        mean_excess_cost: mean,
        standard_error: se,
        margin,
        violation: margin < -3.0,
    }
}

/// Closed-form expected cost of one firm under the constructed equilibrium
/// strategy: abatement cost plus the settlement exposure priced against the
/// jointly Gaussian aggregate. Firm costs sum to the social cost exactly.
pub fn firm_expected_cost(config: &MarketConfig, plan: &AbatementPlan, firm: usize) -> Result<f64> {
    config.validate()?;
    plan.validate(config)?;
    let (alpha0, alpha1) = plan
        .reduced_parts()
        .ok_or_else(|| Error::Invalid("firm cost closed form expects a reduced plan".into()))?;
    let n = config.n_firms();
    if firm >= n {
        return Err(Error::Invalid(format!("firm {firm} outside 0..{n}")));
    }
    let ctx = foc::reduced_ctx(config, alpha0, alpha1);
    let f = &config.firms[firm];
    let a = config.regulatory.cap_fraction;
    let lambda = config.regulatory.penalty;
    let mu = f.mean_emission;
    let second = mu * mu + f.std_emission * f.std_emission;

    let abatement = f.linear_cost * alpha0[firm] * mu
        + 0.5 * f.quadratic_cost * (alpha0[firm] * mu).powi(2)
        + ctx.q
            * (f.linear_cost * alpha1[firm] * mu
                + 0.5 * f.quadratic_cost * alpha1[firm] * alpha1[firm] * second);
    let c0 = 1.0 - alpha0[firm] - a;
    let c1 = 1.0 - alpha1[firm] - a;
    let mean_exposure = c0 * mu + ctx.q * c1 * mu;
    let cov_with_aggregate =
        ctx.q * c1 * ctx.r[firm] + (1.0 - a) * (1.0 - a) / n as f64;
    Ok(abatement
        + lambda * (mean_exposure * ctx.cdf_x + cov_with_aggregate / ctx.b * ctx.pdf_x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, FirmParams, RegulatoryParams};

    fn config() -> MarketConfig {
        MarketConfig {
            regulatory: RegulatoryParams { penalty: 10.0, cap_fraction: 0.4, horizon: 5 },
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
                    common_factor_loading: 0.3,
                },
            ],
        }
    }

    fn plan() -> AbatementPlan {
        AbatementPlan::reduced(vec![0.3, 0.2], vec![0.25, 0.15])
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = config();
        let e1 = simulate(&cfg, &plan(), 64, 7).unwrap();
        let e2 = simulate(&cfg, &plan(), 64, 7).unwrap();
        assert_eq!(e1.prices, e2.prices);
        assert_eq!(e1.s1, e2.s1);
        assert_eq!(e1.net_position, e2.net_position);
        let e3 = simulate(&cfg, &plan(), 64, 8).unwrap();
        assert_ne!(e1.prices, e3.prices);
    }

    #[test]
    fn emission_recurrence_and_zero_initial_shock() {
        let cfg = config();
        let ens = simulate(&cfg, &plan(), 16, 3).unwrap();
        for path in 0..16 {
            let d = ens.path_detail(path).unwrap();
            assert!(d.shocks[0].iter().all(|&x| x == 0.0));
            for (i, f) in cfg.firms.iter().enumerate() {
                assert_eq!(d.emissions[i][0], f.mean_emission);
                for t in 1..cfg.horizon() {
                    let expect = f.mean_emission
                        + f.std_emission * (1.0 - f.common_factor_loading).sqrt() * d.shocks[t][i + 1]
                        + f.std_emission * f.common_factor_loading.sqrt() * d.shocks[t][0];
                    assert!((d.emissions[i][t] - expect).abs() < 1e-12);
                }
            }
            let xi = ens.settlement(path);
            assert!(xi == 0.0 || xi == cfg.regulatory.penalty);
            assert_eq!(d.settlement, xi);
        }
    }

    #[test]
    fn clearing_is_exact() {
        let cfg = config();
        let ens = simulate(&cfg, &plan(), 32, 11).unwrap();
        for path in 0..32 {
            let strategy = trading_positions(&ens, path).unwrap();
            for t in 0..=cfg.horizon() {
                let total: f64 = strategy.positions.iter().map(|row| row[t]).sum();
                if t < cfg.horizon() {
                    assert_eq!(total, 0.0);
                } else {
                    assert_eq!(total, 0.0, "terminal positions must clear exactly");
                }
            }
        }
    }

    #[test]
    fn firm_costs_sum_to_social_cost() {
        let cfg = config();
        let p = plan();
        let total: f64 = (0..2).map(|i| firm_expected_cost(&cfg, &p, i).unwrap()).sum();
        let social = model::social_cost(&cfg, &p).unwrap();
        assert!((total - social).abs() <= 1e-12 * social.abs());
    }

    #[test]
    fn antithetic_pairs_mirror_draws() {
        let cfg = config();
        let ens = simulate_antithetic(&cfg, &plan(), 8, 5).unwrap();
        assert!(ens.is_antithetic());
        assert_eq!(ens.n_paths(), 16);
        let d0 = ens.path_detail(0).unwrap();
        let d1 = ens.path_detail(1).unwrap();
        for t in 0..cfg.horizon() {
            for j in 0..=cfg.n_firms() {
                assert_eq!(d0.shocks[t][j], -d1.shocks[t][j]);
            }
        }
        assert_eq!(d0.cap_shock, -d1.cap_shock);
    }

    #[test]
    fn excess_estimate_near_closed_form() {
        let cfg = config();
        let p = plan();
        let ens = simulate(&cfg, &p, 4000, 99).unwrap();
        let (mean, se) = estimate_excess_emissions(&ens);
        let exact = model::expected_excess_emissions(&cfg, &p).unwrap();
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "sampled {mean} vs exact {exact} with se {se}"
        );
        assert!(se > 0.0);
    }
}
