//! Real special functions, plus the complex Γ and ψ needed for Fourier transforms.

use crate::error::{domain, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// B₂, B₄, …, B₂₀.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialFn {
    Erfc,
    Digamma,
    LogGamma,
    Zeta,
}

/// Dispatcher over the scalar special functions.
pub fn special(func: SpecialFn, x: f64) -> Result<f64> {
    match func {
        SpecialFn::Erfc => Ok(erfc(x)),
        SpecialFn::Digamma => digamma(x),
        SpecialFn::LogGamma => {
            if x <= 0.0 && x == x.floor() {
                domain(format!("log-gamma pole at {x}"))
            } else {
                Ok(ln_gamma(x))
            }
        }
        SpecialFn::Zeta => zeta(x),
    }
}

pub fn erf(x: f64) -> f64 {
    statrs::function::erf::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// Scaled complementary error function e^{x²} erfc(x), stable for large x.
pub fn erfcx(x: f64) -> f64 {
    if x < 5.0 {
        if x < -26.0 {
            return f64::INFINITY;
        }
        return (x * x).exp() * erfc(x);
    }
    // continued fraction  √π erfcx(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
    let mut tail = 0.0;
    for k in (1..=60).rev() {
        tail = (k as f64 * 0.5) / (x + tail);
    }
    1.0 / ((x + tail) * PI.sqrt())
}

/// ln Γ(x) for real x (log of |Γ| on the negative axis).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the Lanczos approximation on its good half-plane
        (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x)
    } else {
        statrs::function::gamma::ln_gamma(x)
    }
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn digamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return domain(format!("digamma pole at {x}"));
    }
    Ok(digamma_complex(Complex64::new(x, 0.0)).re)
}

/// ln Γ(z) for Re z > 0 by upward recurrence and the Stirling series.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    let mut s = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln();
    let w2 = w * w;
    let mut wp = w;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate().take(8) {
        let k = (k + 1) as f64;
        s += b / (2.0 * k * (2.0 * k - 1.0)) / wp;
        wp *= w2;
    }
    s - shift
}

/// ψ(z) for Re z > 0 by upward recurrence and the asymptotic series.
pub fn digamma_complex(z: Complex64) -> Complex64 {
    if z.re <= 0.0 {
        // reflection ψ(1−z) − ψ(z) = π cot(πz)
        let pz = PI * z;
        return digamma_complex(1.0 - z) - PI * pz.cos() / pz.sin();
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 15.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    let mut s = w.ln() - 0.5 / w;
    let w2 = w * w;
    let mut wp = w2;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate().take(8) {
        let k = (k + 1) as f64;
        s -= b / (2.0 * k) / wp;
        wp *= w2;
    }
    s + acc
}

/// Hurwitz zeta ζ(s, a) = Σₙ (n + a)^{−s} for s > 1 (or s ∈ (0,1) as the analytic
/// continuation), a > 0, by Euler–Maclaurin with ten Bernoulli corrections.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if s == 1.0 {
        return domain("zeta pole at s = 1");
    }
    if a <= 0.0 {
        return domain("Hurwitz zeta needs a > 0");
    }
    const N: usize = 10;
    let mut sum = 0.0;
    for n in 0..N {
        sum += (n as f64 + a).powf(-s);
    }
    let x = N as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // B_{2k}/(2k)! · s(s+1)…(s+2k−2) · x^{−s−2k+1}
    let mut poch = s;
    let mut fact = 2.0;
    let mut xp = x.powf(-s - 1.0);
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * poch * xp;
        sum += term;
        let k2 = 2.0 * (k + 1) as f64;
        poch *= (s + k2 - 1.0) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        xp /= x * x;
    }
    Ok(sum)
}

/// Riemann zeta; negative arguments by the functional equation.
pub fn zeta(s: f64) -> Result<f64> {
    if s == 1.0 {
        return domain("zeta pole at s = 1");
    }
    if s >= 0.0 {
        return hurwitz_zeta(s, 1.0);
    }
    if (s / 2.0).fract() == 0.0 {
        return Ok(0.0); // trivial zeros
    }
    // ζ(s) = 2^s π^{s−1} sin(πs/2) Γ(1−s) ζ(1−s)
    let g = ln_gamma(1.0 - s);
    let sin = (PI * s / 2.0).sin();
    let mag = (s * 2f64.ln() + (s - 1.0) * PI.ln() + g).exp();
    Ok(mag * sin * hurwitz_zeta(1.0 - s, 1.0)?)
}

/// Polylogarithm Liₛ(x) for non-integer s > 0 and 0 < x ≤ 1.
///
/// Direct series for x ≤ ½; otherwise the expansion in powers of log x,
/// Liₛ(x) = Γ(1−s)(−log x)^{s−1} + Σₙ ζ(s−n) logⁿx / n!, cut at 30 terms.
pub fn polylog(s: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return domain(format!("polylog argument {x} outside (0, 1]"));
    }
    if s <= 0.0 || s == s.floor() {
        return domain(format!("polylog order {s} must be a positive non-integer"));
    }
    if x == 1.0 {
        if s <= 1.0 {
            return domain(format!("Li_{s}(1) diverges"));
        }
        return zeta(s);
    }
    if x <= 0.5 {
        let mut sum = 0.0;
        let mut xp = x;
        for k in 1..200 {
            let t = xp / (k as f64).powf(s);
            sum += t;
            if t < 1e-17 * sum {
                break;
            }
            xp *= x;
        }
        return Ok(sum);
    }
    let lx = x.ln();
    let mut sum = gamma(1.0 - s) * (-lx).powf(s - 1.0);
    let mut pw = 1.0;
    for n in 0..30 {
        let t = zeta(s - n as f64)? * pw;
        sum += t;
        if n > 2 && t.abs() < 1e-15 * sum.abs() {
            break;
        }
        pw *= lx / (n + 1) as f64;
    }
    Ok(sum)
}
