//! The Fourier route: everything is expressed through g(k) = log(1 − βρ̂(k)).

use super::series::x_square_series;
use super::{beta_of, check_open_p, solve_phi, KappaResult, Regime, Route};
use crate::error::{domain, numerical, Result};
use crate::kernels::{rho_tilde, DensityKind, StepDensity};
use crate::numerics_base::special::EULER_GAMMA;
use crate::numerics_base::{integrate_intervals, GkOptions};
use std::f64::consts::PI;

/// |βρ̂| below which the symbol is treated as zero.
const SYMBOL_CUTOFF: f64 = 1e-14;

struct Symbol<'a> {
    rho: &'a StepDensity,
    beta: f64,
    k_max: f64,
}

impl<'a> Symbol<'a> {
    fn new(rho: &'a StepDensity, beta: f64) -> Result<Self> {
        if !rho.is_symmetric() {
            return domain("the Fourier route needs a symmetric density");
        }
        let nyquist = match rho.kind() {
            DensityKind::Tabulated(tab) => 0.95 * PI / tab.grid.step,
            _ => f64::INFINITY,
        };
        let mut k = 1.0;
        while k < nyquist && beta * rho.ft(k)?.abs() >= SYMBOL_CUTOFF {
            k *= 1.25;
            if k > 1e6 {
                return numerical("Fourier transform does not decay");
            }
        }
        let sym = Self { rho, beta, k_max: k.min(nyquist) };
        // 1 − βρ̂ must stay positive away from k = 0
        for j in 1..=400 {
            let kk = sym.k_max * j as f64 / 400.0;
            if sym.denom(kk)? <= 0.0 {
                return domain(format!("1 − βρ̂(k) vanishes near k = {kk}; log singularity off the origin"));
            }
        }
        Ok(sym)
    }

    fn denom(&self, k: f64) -> Result<f64> {
        Ok((1.0 - self.beta) + self.beta * self.rho.one_minus_ft(k)?)
    }

    fn g(&self, k: f64) -> f64 {
        self.denom(k).map(f64::ln).unwrap_or(f64::NAN)
    }

    fn dg(&self, k: f64) -> f64 {
        match (self.rho.ft_deriv(k), self.denom(k)) {
            (Ok(d), Ok(q)) => -self.beta * d / q,
            _ => f64::NAN,
        }
    }

    /// Breakpoints on [0, k_max] resolving oscillations of frequency x.
    fn points(&self, x: f64) -> Vec<f64> {
        let spacing = if x > 0.0 { (2.0 * PI / x).min(self.k_max / 16.0) } else { self.k_max / 16.0 };
        let n = (self.k_max / spacing).ceil() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|i| (i as f64 * spacing).min(self.k_max)).collect();
        pts.dedup();
        // geometric refinement near the origin, where g may be singular
        if self.beta == 1.0 {
            let mut extra: Vec<f64> = (1..12).map(|j| pts[1] * 0.25f64.powi(j)).collect();
            extra.reverse();
            pts.splice(1..1, extra);
        }
        pts
    }

    fn quad(&self, f: impl FnMut(f64) -> f64, x: f64) -> f64 {
        integrate_intervals(f, &self.points(x), &GkOptions::tol(1e-15, 1e-13)).value
    }

    /// L(x) = (1/π) ∫₀^∞ cos(kx) g(k) dk.
    fn l(&self, x: f64) -> f64 {
        if self.beta == 1.0 {
            if x == 0.0 {
                return f64::NEG_INFINITY;
            }
            return self.xl(x) / x;
        }
        self.quad(|k| (k * x).cos() * self.g(k), x) / PI
    }

    /// x L(x) = −(1/π) ∫₀^∞ sin(kx) g′(k) dk (integration by parts; smooth at β = 1).
    fn xl(&self, x: f64) -> f64 {
        -self.quad(|k| (k * x).sin() * self.dg(k), x) / PI
    }

    /// (x L(x))′ = −(1/π) ∫₀^∞ k cos(kx) g′(k) dk.
    fn dxl(&self, x: f64) -> f64 {
        -self.quad(|k| k * (k * x).cos() * self.dg(k), x) / PI
    }

    /// −½ L(0) = −(1/2π) ∫₀^∞ g, integrated by parts at β = 1.
    fn half_l0(&self) -> f64 {
        if self.beta == 1.0 {
            let i = self.quad(|k| k * self.dg(k), 0.0);
            (i - self.k_max * self.g(self.k_max)) / (2.0 * PI)
        } else {
            -self.quad(|k| self.g(k), 0.0) / (2.0 * PI)
        }
    }
}

/// Right end of a half-line integral whose integrand `f` decays: the first
/// power of two past which |f| stays below `tol` at two consecutive probes.
/// Returns the end point and a bound on the neglected tail (zero when `tol` was
/// reached); fails when L decays too slowly for the tail to be negligible.
fn decay_cutoff(f: impl Fn(f64) -> f64, tol: f64) -> Result<(f64, f64)> {
    const CAP: f64 = 4096.0;
    let mut x = 4.0;
    while x < CAP {
        if f(x).abs() < tol && f(1.5 * x).abs() < tol {
            return Ok((1.5 * x, 0.0));
        }
        x *= 2.0;
    }
    // decay length is at most CAP here, so |f(CAP)|·CAP bounds what is left
    let tail = f(CAP).abs() * CAP;
    if tail > 1e-8 {
        return numerical("L(p, x) decays too slowly for the half-line integral; p is too close to 1/2");
    }
    Ok((CAP, tail))
}

fn half_line(f: impl Fn(f64) -> f64, end: f64) -> (f64, f64) {
    let mut pts = vec![0.0, 0.25, 0.5];
    let mut x = 1.0;
    while x < end {
        pts.push(x);
        x *= 1.5;
    }
    pts.push(end);
    let r = integrate_intervals(f, &pts, &GkOptions::tol(1e-13, 1e-11));
    (r.value, r.error)
}

/// L_ρ(p, x) = (1/2π) ∫ e^{−ikx} log(1 − 4p(1−p)ρ̂(k)) dk.
pub fn l_function(rho: &StepDensity, p: f64, x: f64) -> Result<f64> {
    check_open_p(p)?;
    let sym = Symbol::new(rho, beta_of(p))?;
    Ok(sym.l(x.abs()))
}

/// κ₁, κ₂ for the bulk kernel from the transform of ρ.
pub fn kappa_bulk_fourier(rho: &StepDensity, p: f64) -> Result<KappaResult> {
    check_open_p(p)?;
    let beta = beta_of(p);
    let sym = Symbol::new(rho, beta)?;
    let regime = Regime::of(p);
    let mut kappa1 = sym.half_l0();
    let mut phi_p = None;
    let (kappa2, err) = match regime {
        Regime::Critical => {
            let integrand = |x: f64| {
                if x == 0.0 {
                    return 0.0;
                }
                2.0 * x.ln() * sym.xl(x) * sym.dxl(x)
            };
            let (end, tail) = decay_cutoff(|x| sym.dxl(x), 1e-14)?;
            let (i, e) = half_line(integrand, end);
            let sigma2 = rho.second_moment();
            (0.25 * (2.0 * sigma2).ln() - 0.5 * EULER_GAMMA - 0.5 * i, 0.5 * e + tail)
        }
        _ => {
            let kac = |x: f64| {
                let l = sym.l(x);
                x * l * l
            };
            let (end, tail) = decay_cutoff(kac, 1e-16)?;
            let (i, e) = half_line(kac, end);
            let e = e + tail;
            if regime == Regime::Subcritical {
                (((1.0 - 2.0 * p).sqrt() / (1.0 - p)).ln() + 0.5 * i, 0.5 * e)
            } else {
                let phi = solve_phi(rho, p)?;
                let lorentz = sym.quad(|k| phi / (phi * phi + k * k) * sym.g(k), 0.0);
                let gamma_p = (phi * rho.mgf_deriv(phi)?).ln() - 2.0 / PI * lorentz;
                kappa1 += phi;
                phi_p = Some(phi);
                (((2.0 * p - 1.0).sqrt() / (8.0 * p * (1.0 - p).powi(2))).ln() - gamma_p + 0.5 * i, 0.5 * e)
            }
        }
    };
    Ok(KappaResult {
        density: rho.name(),
        p,
        regime,
        kappa1,
        kappa2,
        log_coeff: 0.0,
        phi_p,
        truncation_n: 0,
        est_error: err,
        route: Route::Fourier,
    })
}

/// κ₁, κ₂ for the edge kernel: the bulk transform formulas applied to ρ̃, shifted
/// by the constants separating the edge and bulk expansions, plus the ∫x(ρ*ⁿ)² series
/// (which vanishes for symmetric ρ).
pub fn kappa_edge_fourier(rho: &StepDensity, p: f64) -> Result<KappaResult> {
    check_open_p(p)?;
    let rt = rho_tilde(rho)?;
    let mut r = kappa_bulk_fourier(&rt, p)?;
    let (xs, xs_err, n) = x_square_series(rho, beta_of(p))?;
    let shift = match r.regime {
        Regime::Subcritical => 0.5 * (1.0 - p).ln(),
        Regime::Critical => -0.5 * 2f64.ln(),
        Regime::Supercritical => {
            let phi = r.phi_p.expect("tilt solved");
            -(2.0 * p.sqrt()).ln() - rho.mgf(phi)?.ln()
        }
    };
    r.kappa2 += shift + 0.5 * xs;
    r.est_error += xs_err;
    r.truncation_n = n;
    r.density = rho.name();
    Ok(r)
}
