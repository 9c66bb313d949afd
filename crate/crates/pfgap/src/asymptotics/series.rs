//! The convolution-series route.

use super::table::{build_table, default_step, default_window, gregory_weights, ConvolutionPowers};
use super::{beta_of, check_open_p, fitted_tail, solve_phi, solve_tilt, KappaResult, Regime, Route};
use crate::error::{domain, numerical, Result};
use crate::kernels::{rho_tilde, StepDensity};
use crate::numerics_base::gregory;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Number of tabulated powers at β = 1, where the series converge like n^{−3/2}.
const CRITICAL_N: usize = 400;
/// Geometric tail bound at which the β < 1 series are cut.
const SERIES_TOL: f64 = 1e-9;
const MAX_SERIES_N: usize = 20_000;

/// Exponents of the asymptotic expansions used for the β = 1 tails.
const ORIGIN_EXPS: [f64; 4] = [1.5, 2.5, 3.5, 4.5];
const COMPENSATED_EXPS: [f64; 4] = [1.5, 2.0, 2.5, 3.0];

fn geometric_n(beta: f64, scale: f64) -> Result<usize> {
    let n = ((SERIES_TOL * (1.0 - beta) / scale).ln() / beta.ln()).ceil().max(1.0);
    if n > MAX_SERIES_N as f64 {
        return numerical(format!(
            "series route needs more than {MAX_SERIES_N} powers at β = {beta}; use the Fourier route"
        ));
    }
    Ok(n as usize)
}

/// Sums over n for β < 1 of a symmetric density's powers.
struct GeometricSums {
    /// Σ βⁿ ρ*ⁿ(0) / n
    origin: f64,
    /// ∫₀^∞ x F(x)² dx with F = Σ βⁿ ρ*ⁿ / n
    kac: f64,
    /// Σ (βⁿ/n) ∫_{−∞}^0 e^{φx} ρ*ⁿ(x) dx
    neg_tilt: f64,
    n: usize,
    error: f64,
}

fn geometric_sums(rho: &StepDensity, beta: f64, phi: Option<f64>) -> Result<GeometricSums> {
    let sup = rho.sup_norm();
    let n = geometric_n(beta, sup)?;
    let h = default_step(rho);
    let mut stream = ConvolutionPowers::new(rho, h, default_window(rho, n))?;
    let m0 = stream.half_len;
    let w = gregory_weights(m0 + 1, h);
    let tilt: Vec<f64> = match phi {
        Some(phi) => (0..=m0).map(|i| w[i] * (phi * stream.x(i)).exp()).collect(),
        None => Vec::new(),
    };
    let mut f = vec![0.0; m0 + 1];
    let (mut origin, mut neg_tilt, mut bn) = (0.0, 0.0, 1.0);
    for k in 1..=n {
        bn *= beta;
        let c = bn / k as f64;
        let row = stream.next_row(rho)?;
        origin += c * row[m0];
        for (fi, r) in f.iter_mut().zip(&row[m0..]) {
            *fi += c * r;
        }
        if !tilt.is_empty() {
            neg_tilt += c * tilt.iter().zip(&row[..=m0]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let kac = (0..=m0).map(|i| w[i] * i as f64 * h * f[i] * f[i]).sum();
    let error = bn * beta * sup / (1.0 - beta) + stream.mass_loss;
    Ok(GeometricSums { origin, kac, neg_tilt, n, error })
}

/// Sums at β = 1, with fitted power-law tails.
struct CriticalSums {
    /// Σ ρ*ⁿ(0) / n
    origin: f64,
    /// Σ_{n≥2} (c_n − 1/(2n)), c_n = Σ_k ∫₀^∞ x ρ*ᵏ ρ*⁽ⁿ⁻ᵏ⁾ / (k(n−k))
    compensated: f64,
    n: usize,
    error: f64,
}

fn critical_sums(rho: &StepDensity) -> Result<CriticalSums> {
    let n = CRITICAL_N;
    let h = default_step(rho);
    let table = build_table(rho, n, h, default_window(rho, n))?;
    let m0 = table.origin_index();
    let origin_terms: Vec<(usize, f64)> = (1..=n).map(|k| (k, table.at_zero(k) / k as f64)).collect();

    // c_n for all n at once: at each abscissa the inner sum over k is a Cauchy
    // product of the sequence ρ*ᵏ(x)/k, done by FFT along k.
    let size = (2 * n + 2).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let len = table.row(1).len();
    let w = gregory_weights(len - m0, h);
    let mut c = vec![0.0; n + 1];
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    for i in m0 + 1..len {
        let x = table.x(i);
        let mut peak = 0.0f64;
        for b in buf.iter_mut() {
            *b = Complex::new(0.0, 0.0);
        }
        for k in 1..=n {
            let v = table.row(k)[i] / k as f64;
            peak = peak.max(v.abs());
            buf[k].re = v;
        }
        if peak < 1e-300 {
            continue;
        }
        fwd.process(&mut buf);
        for b in buf.iter_mut() {
            *b = *b * *b;
        }
        inv.process(&mut buf);
        let s = w[i - m0] * x / size as f64;
        for (nn, cn) in c.iter_mut().enumerate().skip(2) {
            *cn += s * buf[nn].re;
        }
    }
    let comp_terms: Vec<(usize, f64)> = (2..=n).map(|k| (k, c[k] - 0.5 / k as f64)).collect();

    let half = |t: &[(usize, f64)]| t.iter().filter(|(k, _)| 2 * k >= n).copied().collect::<Vec<_>>();
    let (t0, e0) = fitted_tail(&half(&origin_terms), &ORIGIN_EXPS)?;
    let (t1, e1) = fitted_tail(&half(&comp_terms), &COMPENSATED_EXPS)?;
    Ok(CriticalSums {
        origin: origin_terms.iter().map(|t| t.1).sum::<f64>() + t0,
        compensated: comp_terms.iter().map(|t| t.1).sum::<f64>() + t1,
        n,
        error: e0 + e1 + table.mass_loss(),
    })
}

/// Σₙ (βⁿ/n²) ∫_ℝ x (ρ*ⁿ(x))² dx, with an error estimate and the number of terms.
///
/// Vanishes identically for symmetric ρ. At β = 1 the terms decay like n^{−3/2}
/// and the tail is fitted.
pub fn x_square_series(rho: &StepDensity, beta: f64) -> Result<(f64, f64, usize)> {
    if !(beta > 0.0 && beta <= 1.0) {
        return domain(format!("β = {beta} outside (0, 1]"));
    }
    if rho.is_symmetric() {
        return Ok((0.0, 0.0, 0));
    }
    let h = default_step(rho);
    let mu = rho.mean();
    let n = if beta < 1.0 { geometric_n(beta, rho.sup_norm() * (1.0 + mu.abs()))? } else { CRITICAL_N };
    let mut stream = ConvolutionPowers::new(rho, h, default_window(rho, n))?;
    let mut terms = Vec::with_capacity(n);
    let mut bn = 1.0;
    for k in 1..=n {
        bn *= beta;
        let row = stream.next_row(rho)?;
        let sq: Vec<f64> = row.iter().map(|v| v * v).collect();
        let first: Vec<f64> = sq.iter().enumerate().map(|(i, v)| stream.x(i) * v).collect();
        let moment = gregory(&first, h) + k as f64 * mu * gregory(&sq, h);
        terms.push((k, bn * moment / (k * k) as f64));
    }
    let sum: f64 = terms.iter().map(|t| t.1).sum();
    if beta < 1.0 {
        return Ok((sum, bn * beta * rho.sup_norm() / (1.0 - beta) + stream.mass_loss, n));
    }
    let tail_terms: Vec<(usize, f64)> = terms.iter().filter(|(k, _)| 2 * k >= n).copied().collect();
    let (tail, err) = fitted_tail(&tail_terms, &COMPENSATED_EXPS)?;
    Ok((sum + tail, err + stream.mass_loss, n))
}

fn result(
    rho: &StepDensity,
    p: f64,
    regime: Regime,
    kappa: (f64, f64),
    phi_p: Option<f64>,
    n: usize,
    est_error: f64,
) -> KappaResult {
    KappaResult {
        density: rho.name(),
        p,
        regime,
        kappa1: kappa.0,
        kappa2: kappa.1,
        log_coeff: 0.0,
        phi_p,
        truncation_n: n,
        est_error,
        route: Route::Series,
    }
}

/// κ₁, κ₂ for the translation-invariant (bulk) kernel by convolution series.
pub fn kappa_bulk_series(rho: &StepDensity, p: f64) -> Result<KappaResult> {
    check_open_p(p)?;
    if !rho.is_symmetric() {
        return domain("the bulk kernel needs a symmetric density");
    }
    let beta = beta_of(p);
    let regime = Regime::of(p);
    Ok(match regime {
        Regime::Subcritical => {
            let s = geometric_sums(rho, beta, None)?;
            let k2 = ((1.0 - 2.0 * p).sqrt() / (1.0 - p)).ln() + 0.5 * s.kac;
            result(rho, p, regime, (0.5 * s.origin, k2), None, s.n, s.error)
        }
        Regime::Critical => {
            let c = critical_sums(rho)?;
            let k2 = 2f64.ln() - 0.25 + 0.5 * c.compensated;
            result(rho, p, regime, (0.5 * c.origin, k2), None, c.n, c.error)
        }
        Regime::Supercritical => {
            let phi = solve_phi(rho, p)?;
            let s = geometric_sums(rho, beta, Some(phi))?;
            let k2 = ((2.0 * p - 1.0).sqrt() / (8.0 * p * (1.0 - p).powi(2))).ln() + 0.5 * s.kac
                - (phi * rho.mgf_deriv(phi)?).ln()
                - 2.0 * s.neg_tilt;
            result(rho, p, regime, (phi + 0.5 * s.origin, k2), Some(phi), s.n, s.error)
        }
    })
}

/// κ₁, κ₂ for the half-line (edge) kernel built from ρ, by convolution series
/// over the autocorrelation ρ̃ plus the ∫x(ρ*ⁿ)² correction.
pub fn kappa_edge_series(rho: &StepDensity, p: f64) -> Result<KappaResult> {
    check_open_p(p)?;
    let beta = beta_of(p);
    let regime = Regime::of(p);
    let rt = rho_tilde(rho)?;
    let (xs, xs_err, _) = x_square_series(rho, beta)?;
    Ok(match regime {
        Regime::Subcritical => {
            let s = geometric_sums(&rt, beta, None)?;
            let k2 = 0.5 * ((1.0 - 2.0 * p) / (1.0 - p)).ln() + 0.5 * xs + 0.5 * s.kac;
            result(rho, p, regime, (0.5 * s.origin, k2), None, s.n, s.error + xs_err)
        }
        Regime::Critical => {
            let c = critical_sums(&rt)?;
            let k2 = 0.5 * 2f64.ln() - 0.25 + 0.5 * xs + 0.5 * c.compensated;
            result(rho, p, regime, (0.5 * c.origin, k2), None, c.n, c.error + xs_err)
        }
        Regime::Supercritical => {
            let phi = solve_tilt(&rt, beta)?;
            let s = geometric_sums(&rt, beta, Some(phi))?;
            let k2 = ((2.0 * p - 1.0).sqrt() / (16.0 * p.powf(1.5) * (1.0 - p).powi(2))).ln()
                + 0.5 * xs
                + 0.5 * s.kac
                - (phi * rt.mgf_deriv(phi)?).ln()
                - rho.mgf(phi)?.ln()
                - 2.0 * s.neg_tilt;
            result(rho, p, regime, (phi + 0.5 * s.origin, k2), Some(phi), s.n, s.error + xs_err)
        }
    })
}

/// Coefficients of `log Det_{[−L,∞)}(I − βT)` for T(x,y) = ∫_{−∞}^0 ρ(x−z)ρ(y−z) dz.
///
/// For β = 1 the expansion carries an extra `+ log L`, reported as `log_coeff = 1`.
pub fn kappa_det(rho: &StepDensity, beta: f64) -> Result<KappaResult> {
    if !(beta > 0.0 && beta <= 1.0) {
        return domain(format!("β = {beta} outside (0, 1]"));
    }
    let rt = rho_tilde(rho)?;
    let (xs, xs_err, _) = x_square_series(rho, beta)?;
    if beta < 1.0 {
        let s = geometric_sums(&rt, beta, None)?;
        return Ok(result(rho, beta, Regime::Subcritical, (s.origin, xs + s.kac), None, s.n, s.error + xs_err));
    }
    let c = critical_sums(&rt)?;
    let sigma_t = rt.second_moment().sqrt();
    let k2 = 1.5 * 2f64.ln() - 0.5 - sigma_t.ln() + xs + c.compensated;
    let mut r = result(rho, beta, Regime::Critical, (c.origin, k2), None, c.n, c.error + xs_err);
    r.log_coeff = 1.0;
    Ok(r)
}
