//! Closed forms for the sech, Gaussian and persistence densities.

use super::{beta_of, KappaResult, Regime, Route};
use crate::error::{domain, Result};
use crate::numerics_base::special::{digamma_complex, gamma, hurwitz_zeta, zeta, EULER_GAMMA};
use crate::numerics_base::{integrate_intervals, polylog, GkOptions};
use num_complex::Complex64;
use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::OnceLock;

/// Exact Riemann sums are used up to this n; beyond it, their asymptotic expansion.
const EXACT_SUMS: usize = 4096;
const EXPANSION_TERMS: usize = 6;

fn opts() -> GkOptions<f64> {
    GkOptions::tol(1e-14, 1e-12)
}

/// Geometric breakpoints 0, ¼, ½, 1, 1.5, … up to `end`.
fn geometric_points(end: f64) -> Vec<f64> {
    let mut pts = vec![0.0, 0.25, 0.5];
    let mut x = 1.0;
    while x < end {
        pts.push(x);
        x *= 1.5;
    }
    pts.push(end);
    pts
}

fn ln_sinh(y: f64) -> f64 {
    y + (-(-2.0 * y).exp_m1() / 2.0).ln()
}

fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// 1 − β sech(u), accurate when β = 1 and u is small.
fn one_minus_beta_sech(beta: f64, u: f64) -> f64 {
    (1.0 - beta) + beta * 2.0 * (u / 2.0).sinh().powi(2) * sech(u)
}

/// L(p, x) for the sech density:
/// (cosh x − cosh(cx)) / (2x sinh x cosh x) with c = (4/π) arccos(|2p−1|/√2).
pub fn sech_l(p: f64, x: f64) -> f64 {
    let c = 4.0 / PI * ((2.0 * p - 1.0).abs() / SQRT_2).acos();
    let x = x.abs();
    if x == 0.0 {
        return (1.0 - c * c) / 4.0;
    }
    // cosh x − cosh cx = −2 sinh((1+c)x/2) sinh((c−1)x/2), kept in logs
    let (a, b) = ((1.0 + c) * x / 2.0, (c - 1.0) * x / 2.0);
    if b <= 0.0 {
        return 0.0;
    }
    -(LN_2 + ln_sinh(a) + ln_sinh(b) - x.ln() - ln_sinh(2.0 * x)).exp()
}

/// ∫₀^∞ x L(p,x)² dx for the sech density.
fn sech_kac_integral(p: f64) -> f64 {
    let c = 4.0 / PI * ((2.0 * p - 1.0).abs() / SQRT_2).acos();
    if c <= 1.0 {
        return 0.0;
    }
    let end = (40.0 / (2.0 - c).max(1e-6)).min(1e6).max(40.0);
    integrate_intervals(
        |x| {
            let l = sech_l(p, x);
            x * l * l
        },
        &geometric_points(end),
        &opts(),
    )
    .value
}

/// ∫₀^∞ log x · ((tanh x + tanh(x/2))²)′ dx, with the derivative taken analytically.
fn sech_critical_integral() -> f64 {
    integrate_intervals(
        |x: f64| {
            if x == 0.0 {
                return 0.0;
            }
            let (t1, t2) = (x.tanh(), (x / 2.0).tanh());
            let d = 2.0 * (t1 + t2) * (sech(x).powi(2) + 0.5 * sech(x / 2.0).powi(2));
            x.ln() * d
        },
        &geometric_points(90.0),
        &opts(),
    )
    .value
}

/// (2/π) ∫₀^∞ log(1 − β sech(a k)) / (1 + k²) dk.
fn lorentz_term(beta: f64, a: f64) -> f64 {
    let end = 45.0 / a.max(1e-3);
    2.0 / PI * integrate_intervals(|k| one_minus_beta_sech(beta, a * k).ln() / (1.0 + k * k), &geometric_points(end), &opts()).value
}

fn closed(density: &str, p: f64, kappa1: f64, kappa2: f64, phi_p: Option<f64>, n: usize) -> KappaResult {
    KappaResult {
        density: density.into(),
        p,
        regime: Regime::of(p),
        kappa1,
        kappa2,
        log_coeff: 0.0,
        phi_p,
        truncation_n: n,
        est_error: 1e-10,
        route: Route::Closed,
    }
}

/// Closed-form coefficients for ρ = π⁻¹ sech, p ∈ [0, 1).
pub fn kappa_sech_closed(p: f64) -> Result<KappaResult> {
    if !(0.0..1.0).contains(&p) {
        return domain(format!("sech closed form needs p in [0, 1), got {p}"));
    }
    let beta = beta_of(p);
    let kappa1 = 2.0 / (PI * PI) * ((1.0 - 2.0 * p) / SQRT_2).acos().powi(2) - 0.125;
    let (kappa2, phi) = match Regime::of(p) {
        Regime::Subcritical => (0.5 * sech_kac_integral(p) + ((1.0 - 2.0 * p).sqrt() / (1.0 - p)).ln(), None),
        Regime::Critical => (0.25 * (PI * PI / 2.0).ln() - 0.5 * EULER_GAMMA - sech_critical_integral() / 8.0, None),
        Regime::Supercritical => {
            let a = beta.acos();
            let k2 = 0.5 * sech_kac_integral(p)
                - a.ln()
                - (((2.0 * p - 1.0) * (1.0 + 4.0 * p - 4.0 * p * p)).sqrt() / (2.0 * p)).ln()
                + lorentz_term(beta, a);
            (k2, Some(2.0 / PI * a))
        }
    };
    let mut r = closed("sech", p, kappa1, kappa2, phi, 0);
    if p == 0.0 {
        r.kappa1 = 0.0;
    }
    Ok(r)
}

/// Σ_{k=1}^{n−1} 1/√(k(n−k)).
pub fn gauss_riemann_sum(n: usize) -> f64 {
    if n <= EXACT_SUMS {
        return exact_sums()[n];
    }
    direct_riemann_sum(n)
}

fn direct_riemann_sum(n: usize) -> f64 {
    let nf = n as f64;
    // pair k with n−k
    let mut s = 0.0;
    for k in 1..=(n - 1) / 2 {
        let kf = k as f64;
        s += 2.0 / (kf * (nf - kf)).sqrt();
    }
    if n % 2 == 0 && n >= 2 {
        s += 2.0 / nf;
    }
    s
}

fn exact_sums() -> &'static [f64] {
    static SUMS: OnceLock<Vec<f64>> = OnceLock::new();
    SUMS.get_or_init(|| (0..=EXACT_SUMS).map(|n| if n < 2 { 0.0 } else { direct_riemann_sum(n) }).collect())
}

/// Coefficients C(2j, j)/4ʲ of (1 − u)^{−1/2}.
fn binomial_half(j: usize) -> f64 {
    (0..j).fold(1.0, |c, i| c * (2 * i + 1) as f64 / (2 * i + 2) as f64)
}

/// π + 2 Σ_{j<terms} C(2j,j)4⁻ʲ ζ(½ − j) n^{−½−j}: the endpoint-singularity
/// expansion of the Riemann sum of 1/√(u(1−u)).
pub fn gauss_riemann_sum_asymptotic(n: usize, terms: usize) -> Result<f64> {
    let nf = n as f64;
    let mut s = PI;
    for j in 0..terms {
        s += 2.0 * binomial_half(j) * zeta(0.5 - j as f64)? * nf.powf(-0.5 - j as f64);
    }
    Ok(s)
}

/// Σ_{n≥2} (βⁿ/n) S_n for β < 1, with 1 − β passed separately for accuracy.
fn gauss_pair_series(beta: f64, one_minus_beta: f64) -> Result<f64> {
    let sums = exact_sums();
    let mut total = 0.0;
    let (mut bn, mut partial_log) = (beta, beta);
    let mut partial_pow = vec![beta; EXPANSION_TERMS];
    for (n, s) in sums.iter().enumerate().take(EXACT_SUMS + 1).skip(2) {
        bn *= beta;
        let nf = n as f64;
        total += bn / nf * s;
        partial_log += bn / nf;
        for (j, pp) in partial_pow.iter_mut().enumerate() {
            *pp += bn * nf.powf(-1.5 - j as f64);
        }
    }
    if bn < 1e-20 {
        return Ok(total);
    }
    // tail n > EXACT_SUMS from the expansion of S_n
    let mut tail = PI * (-one_minus_beta.ln() - partial_log);
    for (j, pp) in partial_pow.iter().enumerate() {
        let li = polylog(1.5 + j as f64, beta)?;
        tail += 2.0 * binomial_half(j) * zeta(0.5 - j as f64)? * (li - pp);
    }
    Ok(total + tail)
}

/// Σ_{n≥2} (S_n − π)/n.
fn gauss_compensated_series() -> Result<f64> {
    let sums = exact_sums();
    let mut total = 0.0;
    for (n, s) in sums.iter().enumerate().skip(2) {
        total += (s - PI) / n as f64;
    }
    let a = EXACT_SUMS as f64 + 1.0;
    for j in 0..EXPANSION_TERMS {
        total += 2.0 * binomial_half(j) * zeta(0.5 - j as f64)? * hurwitz_zeta(1.5 + j as f64, a)?;
    }
    Ok(total)
}

/// Σ_{n≥1} erfc(√(n u))/n.
///
/// Direct summation needs ~40/u terms, hopeless as p → ½⁺. Craig's form
/// erfc(x) = (2/π) ∫₀^∞ e^{−x²(1+s²)}/(1+s²) ds sums the series inside the integral:
/// (2/π) ∫₀^∞ −log(1 − e^{−u(1+s²)}) / (1+s²) ds.
fn erfc_series(u: f64) -> f64 {
    let f = |s: f64| {
        let w = u * (1.0 + s * s);
        -(-(-w).exp_m1()).ln() / (1.0 + s * s)
    };
    let end = (45.0 / u).sqrt() + 10.0;
    2.0 / PI * integrate_intervals(f, &geometric_points(end), &opts()).value
}

/// Closed-form coefficients for the Gaussian density of variance 2t, p ∈ [0, 1).
pub fn kappa_gauss_closed(p: f64, t: f64) -> Result<KappaResult> {
    if !(0.0..1.0).contains(&p) {
        return domain(format!("Gaussian closed form needs p in [0, 1), got {p}"));
    }
    if !(t > 0.0) {
        return domain("Gaussian closed form needs t > 0");
    }
    let name = format!("gaussian(t={t})");
    if p == 0.0 {
        return Ok(closed(&name, p, 0.0, 0.0, None, 0));
    }
    let beta = beta_of(p);
    let omb = (1.0 - 2.0 * p).powi(2);
    let mut kappa1 = polylog(1.5, beta)? / (4.0 * (PI * t).sqrt());
    let (kappa2, phi) = match Regime::of(p) {
        Regime::Subcritical => {
            (((1.0 - 2.0 * p).sqrt() / (1.0 - p)).ln() + gauss_pair_series(beta, omb)? / (4.0 * PI), None)
        }
        Regime::Critical => (LN_2 - 0.25 + gauss_compensated_series()? / (4.0 * PI), None),
        Regime::Supercritical => {
            let u = -(-omb).ln_1p();
            let phi = (u / t).sqrt();
            kappa1 += phi;
            let k2 = 0.5 * ((2.0 * p - 1.0) / (16.0 * (1.0 - p).powi(2))).ln()
                + gauss_pair_series(beta, omb)? / (4.0 * PI)
                - u.ln()
                - erfc_series(u);
            (k2, Some(phi))
        }
    };
    Ok(closed(&name, p, kappa1, kappa2, phi, EXACT_SUMS))
}

/// −(1/8π) ∫_ℝ ψ((1+ik)/2) log(1 − β sech(πk/2)) dk, the digamma-weighted term
/// of the persistence expansion (real part; the imaginary part is odd).
///
/// This equals ½ Σ βⁿ/n² ∫ x (ρ*ⁿ(x))² dx for ρ̂(k) = ∫ e^{ikx} ρ = Γ((1+ik)/2)/√π:
/// Parseval gives ∫ x f² = (−i/2π) ∫ f̂′(k) f̂(−k) dk, hence the overall minus sign.
/// The term is negative, as it must be for a density with negative mean.
pub fn persistence_digamma_term(beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let f = |k: f64| {
        let psi = digamma_complex(Complex64::new(0.5, 0.5 * k)).re;
        psi * one_minus_beta_sech(beta, PI * k / 2.0).ln()
    };
    -integrate_intervals(f, &geometric_points(60.0), &opts()).value / (4.0 * PI)
}

/// Closed-form edge coefficients for the persistence density (2/√π) exp(x − e^{2x}),
/// p ∈ [0, 1]; p = 1 is the coalescing limit.
pub fn kappa_persistence_closed(p: f64) -> Result<KappaResult> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("persistence closed form needs p in [0, 1], got {p}"));
    }
    let beta = beta_of(p);
    let psi = persistence_digamma_term(beta);
    let a = beta.acos();
    let mut kappa1 = 2.0 / (PI * PI) * ((2.0 * p - 1.0).abs() / SQRT_2).acos().powi(2) - 0.125;
    let (kappa2, phi) = match Regime::of(p) {
        Regime::Subcritical => (0.5 * ((1.0 - 2.0 * p) / (1.0 - p)).ln() + 0.5 * sech_kac_integral(p) + psi, None),
        Regime::Critical => {
            (0.25 * (PI * PI / 8.0).ln() - 0.5 * EULER_GAMMA - sech_critical_integral() / 8.0 + psi, None)
        }
        Regime::Supercritical => {
            let phi = 2.0 / PI * a;
            kappa1 += phi;
            let pre = ((2.0 * p - 1.0) * (1.0 + 4.0 * p - 4.0 * p * p) / (PI * p)).sqrt() * gamma((1.0 + phi) / 2.0);
            let lor = if beta == 0.0 { 0.0 } else { lorentz_term(beta, PI * phi / 2.0) };
            (0.5 * sech_kac_integral(p) - a.ln() - pre.ln() + lor + psi, Some(phi))
        }
    };
    if p == 0.0 {
        kappa1 = 0.0;
    }
    Ok(closed("persistence", p, kappa1, kappa2, phi, 0))
}

/// Bulk constant for the real Ginibre / annihilating (p = ½) Gaussian kernel:
/// log 2 − ¼ + (1/4π) Σ_{n≥2} (S_n − π)/n.
pub fn ginibre_kappa2_bulk() -> Result<f64> {
    Ok(LN_2 - 0.25 + gauss_compensated_series()? / (4.0 * PI))
}

/// Edge constant for the same kernel, assembled from the edge expansion at p = ½
/// with the Gaussian pair integrals ∫₀^∞ x ρ̃*ᵏ ρ̃*ᵐ = √(km)/(2π(k+m)).
pub fn ginibre_kappa2_edge() -> Result<f64> {
    let mut comp = 0.0;
    for n in 2..=EXACT_SUMS {
        let mut c = 0.0;
        for k in 1..n {
            let (kf, mf) = (k as f64, (n - k) as f64);
            c += (kf * mf).sqrt() / (2.0 * PI * (kf + mf)) / (kf * mf);
        }
        comp += c - 0.5 / n as f64;
    }
    let a = EXACT_SUMS as f64 + 1.0;
    for j in 0..EXPANSION_TERMS {
        comp += binomial_half(j) * zeta(0.5 - j as f64)? * hurwitz_zeta(1.5 + j as f64, a)? / PI;
    }
    Ok(0.5 * LN_2 - 0.25 + 0.5 * comp)
}

/// γ(q) = −1/8 + (2/π²) arccos²((2−q)/(√2 q)), q ≥ 1.
pub fn gamma_q(q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return domain(format!("γ(q) needs q ≥ 1, got {q}"));
    }
    Ok(-0.125 + 2.0 / (PI * PI) * ((2.0 - q) / (SQRT_2 * q)).acos().powi(2))
}
