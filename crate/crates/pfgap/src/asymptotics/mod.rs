//! The coefficients κ₁(p), κ₂(p) in `log Pf = −κ₁(p) L + κ₂(p) + o(1)`.
//!
//! Three independent routes are provided:
//!
//! * convolution series over the powers ρ*ⁿ ([`kappa_bulk_series`], [`kappa_edge_series`],
//!   [`kappa_det`]), built on a [`ConvolutionTable`];
//! * Fourier integrals of `log(1 − βρ̂)` ([`kappa_bulk_fourier`], [`kappa_edge_fourier`]);
//! * closed forms for the sech, Gaussian and persistence densities.
//!
//! Throughout β = 4p(1−p). The regime is sub-critical for p < ½, critical at
//! p = ½ (where β = 1 and the series need compensation) and super-critical above,
//! where an exponential tilt φ_p with β·E[e^{φ_p X}] = 1 enters.

mod closed;
mod fourier;
mod series;
mod table;

pub use closed::{
    gamma_q, gauss_riemann_sum, gauss_riemann_sum_asymptotic, ginibre_kappa2_bulk, ginibre_kappa2_edge,
    kappa_gauss_closed, kappa_persistence_closed, kappa_sech_closed, persistence_digamma_term, sech_l,
};
pub use fourier::{kappa_bulk_fourier, kappa_edge_fourier, l_function};
pub use series::{kappa_bulk_series, kappa_det, kappa_edge_series, x_square_series};
pub use table::{build_table, default_step, default_window, ConvolutionTable};

use crate::error::{domain, numerical, Result};
use crate::kernels::StepDensity;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn of(p: f64) -> Self {
        if p < 0.5 {
            Regime::Subcritical
        } else if p == 0.5 {
            Regime::Critical
        } else {
            Regime::Supercritical
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Series,
    Fourier,
    Closed,
}

/// One evaluation of the asymptotic coefficients.
///
/// `p` is the thinning parameter, except for [`kappa_det`] where it holds β.
/// `log_coeff` is the coefficient of a `log L` term (only the determinant at β = 1 has one).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub density: String,
    pub p: f64,
    pub regime: Regime,
    pub kappa1: f64,
    pub kappa2: f64,
    pub log_coeff: f64,
    pub phi_p: Option<f64>,
    pub truncation_n: usize,
    pub est_error: f64,
    pub route: Route,
}

impl KappaResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// β = 4p(1−p).
pub fn beta_of(p: f64) -> f64 {
    4.0 * p * (1.0 - p)
}

pub(crate) fn check_open_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p = {p} must lie in (0, 1); p = 1 is outside the asymptotic theorems"));
    }
    Ok(())
}

/// The tilt φ_p > 0 solving 4p(1−p)·∫ e^{φx} ρ(x) dx = 1, for p ∈ (½, 1).
pub fn solve_phi(rho: &StepDensity, p: f64) -> Result<f64> {
    if !(p > 0.5 && p < 1.0) {
        return domain(format!("tilt equation needs p in (1/2, 1), got {p}"));
    }
    solve_tilt(rho, beta_of(p))
}

/// Positive root of β·M(φ) = 1 with M the moment generating function of ρ.
pub(crate) fn solve_tilt(rho: &StepDensity, beta: f64) -> Result<f64> {
    let target = 1.0 / beta;
    let abscissa = rho.mgf_abscissa();
    let mgf = |phi: f64| rho.mgf(phi).unwrap_or(f64::INFINITY);
    // bracket: expand towards the abscissa (or geometrically if M is entire)
    let mut hi = if abscissa.is_finite() { 0.5 * abscissa } else { 1.0 };
    let mut lo = 0.0;
    let mut found = false;
    for j in 0..200 {
        if mgf(hi) >= target {
            found = true;
            break;
        }
        lo = hi;
        hi = if abscissa.is_finite() { abscissa * (1.0 - 0.5f64.powi(j + 2)) } else { 2.0 * hi };
        if abscissa.is_finite() && hi >= abscissa {
            break;
        }
    }
    if !found {
        return numerical(format!(
            "moment generating function of {} never reaches 1/β = {target}",
            rho.name()
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mgf(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    let mut phi = 0.5 * (lo + hi);
    for _ in 0..8 {
        let r = beta * rho.mgf(phi)? - 1.0;
        if r.abs() < 1e-15 {
            break;
        }
        let next = phi - r / (beta * rho.mgf_deriv(phi)?);
        if !(next > 0.0) || (abscissa.is_finite() && next >= abscissa) {
            break;
        }
        phi = next;
    }
    let r = beta * rho.mgf(phi)? - 1.0;
    if r.abs() >= 1e-12 {
        return numerical(format!("tilt residual {r:.2e} above 1e-12"));
    }
    Ok(phi)
}

/// Least-squares fit of `a_j n^{−e_j}` to a sequence's last half, and the
/// resulting estimate of Σ_{n > n_last} via Hurwitz zeta values.
///
/// Returns (tail, error estimate); the error compares against the fit with the
/// last exponent dropped.
pub(crate) fn fitted_tail(terms: &[(usize, f64)], exps: &[f64]) -> Result<(f64, f64)> {
    use crate::numerics_base::special::hurwitz_zeta;
    let n_last = terms.last().map(|t| t.0).unwrap_or(0);
    let fit = |k: usize| -> Result<f64> {
        let e = &exps[..k];
        let rows = terms.len();
        let a = nalgebra::DMatrix::from_fn(rows, k, |i, j| (terms[i].0 as f64).powf(-e[j]));
        let b = nalgebra::DVector::from_iterator(rows, terms.iter().map(|t| t.1));
        // scale columns for conditioning
        let scales: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
        let mut a_s = a.clone();
        for (j, s) in scales.iter().enumerate() {
            a_s.column_mut(j).scale_mut(1.0 / s);
        }
        let coef = a_s
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| crate::Error::Numerical(format!("tail fit: {e}")))?;
        let mut tail = 0.0;
        for j in 0..k {
            tail += coef[j] / scales[j] * hurwitz_zeta(e[j], n_last as f64 + 1.0)?;
        }
        Ok(tail)
    };
    if terms.len() < exps.len() + 2 {
        return domain("too few terms for the tail fit");
    }
    let full = fit(exps.len())?;
    let reduced = fit(exps.len() - 1)?;
    Ok((full, (full - reduced).abs()))
}
