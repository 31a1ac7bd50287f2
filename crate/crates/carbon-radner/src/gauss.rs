//! Scalar Gaussian kernels behind every closed form in the crate: the standard
//! normal density and distribution, Owen's T function, and the expected
//! positive part of a normal variable.

use statrs::function::erf::erfc;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_68;
const FRAC_1_2PI: f64 = 0.159_154_943_091_895_34;

/// Standard normal density φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    assert!(x.is_finite(), "normal_pdf: non-finite argument");
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x), evaluated through the
/// complementary error function so both tails keep full relative accuracy.
pub fn normal_cdf(x: f64) -> f64 {
    assert!(x.is_finite(), "normal_cdf: non-finite argument");
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Owen's T function (1/2π) ∫₀ᵈ exp(−h²(1+u²)/2) / (1+u²) du.
///
/// Evaluated by adaptive quadrature of the defining integrand; the integrand
/// is smooth and bounded, and the subdivision tolerance keeps the absolute
/// error below 1e−12 on the domain used here.
pub fn owens_t(h: f64, d: f64) -> f64 {
    assert!(h.is_finite() && d.is_finite(), "owens_t: non-finite argument");
    assert!(d.abs() <= 100.0, "owens_t: |d| > 100 is outside the supported range");
    if d == 0.0 {
        return 0.0;
    }
    if d < 0.0 {
        return -owens_t(h, -d);
    }
    let h = h.abs();
    if h == 0.0 {
        return d.atan() * FRAC_1_2PI;
    }
    let f = |u: f64| (-0.5 * h * h * (1.0 + u * u)).exp() / (1.0 + u * u);
    FRAC_1_2PI * adaptive_simpson(f, 0.0, d, 1e-13)
}

/// E[(μ + σZ)⁺] for standard normal Z: μΦ(μ/σ) + σφ(μ/σ), with the
/// degenerate σ = 0 limit max(μ, 0).
pub fn expected_positive_part(mean: f64, std: f64) -> f64 {
    assert!(mean.is_finite() && std.is_finite(), "expected_positive_part: non-finite argument");
    assert!(std >= 0.0, "expected_positive_part: negative std");
    if std == 0.0 {
        return mean.max(0.0);
    }
    let z = mean / std;
    (mean * normal_cdf(z) + std * normal_pdf(z)).max(mean.max(0.0))
}

/// Adaptive Simpson quadrature of `f` over [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(&f, a, m, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        refine(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + refine(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
