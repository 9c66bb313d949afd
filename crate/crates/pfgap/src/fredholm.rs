//! Nyström evaluation of Fredholm determinants and Pfaffians.
//!
//! Three routes to `Pf_{[a,b]}(J − p𝐊)` for a derived-form kernel:
//!
//! * [`fpf_direct`] — the 2N×2N antisymmetric Nyström matrix. The jump in the
//!   (1,1) entry limits it to algebraic convergence; it is kept as a check.
//! * [`fpf_tw`] — the square root of `Det(I + 2p(1−p)D₂K)` times a 2×2 determinant
//!   built from resolvent solves. All kernels involved are smooth, so Gauss–Legendre
//!   Nyström converges spectrally.
//! * [`fpf_edge`] — the analogous reduction for half-space kernels, with
//!   `Det(I − βT)` and a 3×3 determinant.
//!
//! Every result carries `|v(N) − v(2N)|` as its Richardson error.

use crate::error::{domain, numerical, Error, Result};
use crate::kernels::{DerivedKernel, ScalarKernel};
use crate::numerics_base::{
    gauss_legendre, integrate, log_det_f64, log_pfaffian, make_grid, AntisymMatrix, GkOptions, QuadratureGrid, Rule,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Largest 1-norm condition number accepted for the resolvent systems.
const MAX_CONDITION: f64 = 1e12;

/// A Nyström matrix on a Gauss–Legendre grid.
///
/// Scalar discretisations hold `I − β W^{1/2} T W^{1/2}`; block ones hold the
/// interleaved 2N×2N matrix `J − p W^{1/2} 𝐊 W^{1/2}`. Weights always enter
/// symmetrically, so the block matrix is antisymmetric.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub grid: QuadratureGrid<f64>,
    pub kernel: String,
    pub matrix: DMatrix<f64>,
    pub block: bool,
    pub symmetrized: bool,
}

impl Discretization {
    pub fn scalar(grid: QuadratureGrid<f64>, kernel: &str, t: impl Fn(f64, f64) -> f64, beta: f64) -> Self {
        let n = grid.len();
        let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
        let x = &grid.nodes;
        let matrix = DMatrix::from_fn(n, n, |i, j| f64::from(i == j) - beta * sw[i] * t(x[i], x[j]) * sw[j]);
        Self { grid, kernel: kernel.into(), matrix, block: false, symmetrized: true }
    }

    pub fn derived(grid: QuadratureGrid<f64>, k: &DerivedKernel, p: f64) -> Self {
        let n = grid.len();
        let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
        let x = &grid.nodes;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            // diagonal block: J plus the (1,2) entry −D₂K(x,x)
            let d = -p * sw[i] * sw[i] * k.block(x[i], x[i])[0][1];
            m[(2 * i, 2 * i + 1)] = 1.0 + d;
            m[(2 * i + 1, 2 * i)] = -1.0 - d;
            for j in i + 1..n {
                let b = k.block(x[i], x[j]);
                let w = p * sw[i] * sw[j];
                for a in 0..2 {
                    for c in 0..2 {
                        m[(2 * i + a, 2 * j + c)] = -w * b[a][c];
                        m[(2 * j + c, 2 * i + a)] = w * b[a][c];
                    }
                }
            }
        }
        Self { grid, kernel: k.scalar.name(), matrix: m, block: true, symmetrized: true }
    }

    /// `(sign, log|det|)` of the matrix.
    pub fn log_det(&self) -> (f64, f64) {
        log_det_f64(self.matrix.clone())
    }

    /// `(sign, log|pf|)` of a block discretisation.
    pub fn log_pf(&self) -> Result<(f64, f64)> {
        if !self.block {
            return domain("Pfaffian of a scalar discretisation");
        }
        let m = &self.matrix;
        let a = AntisymMatrix::from_upper(m.nrows(), |i, j| m[(i, j)])?;
        log_pfaffian(&a)
    }
}

/// One evaluated Fredholm determinant or Pfaffian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub log_value: f64,
    pub value: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub richardson_error: f64,
}

impl EvalResult {
    fn new(log_value: f64, n: usize, richardson_error: f64) -> Self {
        Self { log_value, value: log_value.exp(), n, richardson_error }
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return domain(format!("interval [{a}, {b}] must be finite and non-empty"));
    }
    Ok(())
}

fn check_nodes(n: usize) -> Result<()> {
    if n < 8 {
        return domain(format!("N = {n} nodes is below the minimum of 8"));
    }
    Ok(())
}

fn grid(a: f64, b: f64, n: usize) -> Result<QuadratureGrid<f64>> {
    make_grid(a, b, n, Rule::GaussLegendre)
}

/// Evaluates `route` at N and 2N.
fn with_richardson(n: usize, route: impl Fn(usize) -> Result<f64>) -> Result<EvalResult> {
    let coarse = route(n)?;
    let fine = route(2 * n)?;
    Ok(EvalResult::new(coarse, n, (fine - coarse).abs()))
}

/// `Det_{[a,b]}(I − βT)` by Gauss–Legendre Nyström with N nodes.
pub fn fdet(t: impl Fn(f64, f64) -> f64, interval: (f64, f64), beta: f64, n: usize) -> Result<EvalResult> {
    let (a, b) = interval;
    check_interval(a, b)?;
    check_nodes(n)?;
    with_richardson(n, |m| {
        let d = Discretization::scalar(grid(a, b, m)?, "scalar", &t, beta);
        let (sign, log_abs) = d.log_det();
        if sign <= 0.0 {
            return numerical(format!(
                "discretised determinant on [{a}, {b}] with β = {beta}, N = {m} has sign {sign} (log|det| = {log_abs})"
            ));
        }
        Ok(log_abs)
    })
}

fn check_p(p: f64, open: bool) -> Result<()> {
    let ok = if open { p > 0.0 && p < 1.0 } else { (0.0..=1.0).contains(&p) };
    if !ok {
        return domain(format!("thinning parameter p = {p} out of range"));
    }
    Ok(())
}

/// `Pf_{[a,b]}(J − p𝐊)` from the 2N×2N Nyström matrix.
pub fn fpf_direct(k: &DerivedKernel, p: f64, interval: (f64, f64), n: usize) -> Result<EvalResult> {
    check_p(p, false)?;
    let (a, b) = interval;
    check_interval(a, b)?;
    check_nodes(n)?;
    with_richardson(n, |m| {
        let d = Discretization::derived(grid(a, b, m)?, k, p);
        let (sign, log_abs) = d.log_pf()?;
        if sign <= 0.0 {
            return numerical(format!("discretised Pfaffian on [{a}, {b}] at N = {m} is not positive"));
        }
        Ok(log_abs)
    })
}

/// LU of a Nyström system together with a 1-norm condition estimate.
struct Resolvent {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    log_det: f64,
    sqrt_w: Vec<f64>,
}

impl Resolvent {
    fn new(m: DMatrix<f64>, grid: &QuadratureGrid<f64>, what: &str) -> Result<Self> {
        let norm1 = |a: &DMatrix<f64>| a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
        let a_norm = norm1(&m);
        let (sign, log_det) = log_det_f64(m.clone());
        if sign <= 0.0 {
            return numerical(format!("{what}: discretised determinant is not positive (sign {sign})"));
        }
        let lu = m.lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Numerical(format!("{what}: singular discretised operator")))?;
        let cond = a_norm * norm1(&inv);
        if !(cond < MAX_CONDITION) {
            return numerical(format!("{what}: condition estimate {cond:.2e} too large"));
        }
        let sqrt_w = grid.weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self { lu, log_det, sqrt_w })
    }

    /// Values at the nodes of u solving (I + c·Op)u = f, given f at the nodes.
    fn solve(&self, f: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_iterator(f.len(), f.iter().zip(&self.sqrt_w).map(|(v, s)| v * s));
        let g = self.lu.solve(&rhs).expect("factorisation checked invertible");
        g.iter().zip(&self.sqrt_w).map(|(v, s)| v / s).collect()
    }
}

/// log Pf at one N by the 2×2 reduction.
fn tw_log_pf(k: &ScalarKernel, p: f64, a: f64, b: f64, n: usize) -> Result<f64> {
    let g = grid(a, b, n)?;
    let c = 2.0 * p * (1.0 - p);
    let x = g.nodes.clone();
    let w = g.weights.clone();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| f64::from(i == j) + c * sw[i] * k.d2(x[i], x[j]) * sw[j]);
    let res = Resolvent::new(m, &g, "I + 2p(1−p)D₂K")?;
    let ka: Vec<f64> = x.iter().map(|&xi| k.k(xi, a)).collect();
    let kb: Vec<f64> = x.iter().map(|&xi| k.k(xi, b)).collect();
    let (rka, rkb) = (res.solve(&ka), res.solve(&kb));
    // Nyström interpolation: (Rf)(s) = f(s) − c Σ w_j D₂K(s, x_j) (Rf)(x_j)
    let at = |s: f64, f_s: f64, r: &[f64]| f_s - c * (0..n).map(|j| w[j] * k.d2(s, x[j]) * r[j]).sum::<f64>();
    let (rka_a, rka_b) = (at(a, 0.0, &rka), at(b, k.k(b, a), &rka));
    let (rkb_a, rkb_b) = (at(a, k.k(a, b), &rkb), at(b, 0.0, &rkb));
    let q = p - p * p;
    let k1 = |ra: f64, rb: f64| q * ra + p * p * rb;
    let k2 = |ra: f64, rb: f64| -q * rb - p * p * ra;
    let det2 = (1.0 + k1(rka_a, rkb_a)) * (1.0 + k2(rka_b, rkb_b)) - k1(rka_b, rkb_b) * k2(rka_a, rkb_a);
    if !(det2 > 0.0) {
        return numerical(format!("2×2 determinant {det2:.3e} is not positive at N = {n}"));
    }
    Ok(0.5 * (res.log_det + det2.ln()))
}

/// `Pf_{[a,b]}(J − p𝐊)` via `Pf² = Det(I + 2p(1−p)D₂K)·det₂`, positive root.
pub fn fpf_tw(k: &DerivedKernel, p: f64, interval: (f64, f64), n: usize) -> Result<EvalResult> {
    check_p(p, true)?;
    let (a, b) = interval;
    check_interval(a, b)?;
    check_nodes(n)?;
    with_richardson(n, |m| tw_log_pf(&k.scalar, p, a, b, m))
}

/// One-point intensity −p D₂K(x, x) of the thinned process.
pub fn intensity(k: &DerivedKernel, p: f64, x: f64) -> f64 {
    -p * k.scalar.d2(x, x)
}

/// Right truncation point for a half-space kernel: where the one-point intensity
/// falls below 1e−10, plus five units of margin.
pub fn edge_cutoff(k: &DerivedKernel, p: f64) -> Result<f64> {
    let ScalarKernel::Edge(e) = &k.scalar else {
        return domain("edge cutoff needs a half-space kernel");
    };
    let mut x = e.rho.mean().max(0.0);
    while intensity(k, p, x) >= 1e-10 || intensity(k, p, x + 0.5) >= 1e-10 {
        x += 0.25;
        if x > 1e4 {
            return numerical("intensity does not decay");
        }
    }
    Ok(x + 5.0)
}

/// Expected number of particles beyond `b`.
fn tail_mass(k: &DerivedKernel, p: f64, b: f64) -> f64 {
    integrate(|x| intensity(k, p, x), b, b + 60.0, &GkOptions::tol(1e-16, 1e-8)).value
}

/// log Pf on [a, b] by the 3×3 reduction for kernels built from a density ρ.
fn edge_log_pf(k: &ScalarKernel, p: f64, a: f64, b: f64, n: usize) -> Result<f64> {
    let ScalarKernel::Edge(e) = k else {
        return domain("fpf_edge needs a half-space kernel");
    };
    let rho = &e.rho;
    let beta = 4.0 * p * (1.0 - p);
    let g = grid(a, b, n)?;
    let x = g.nodes.clone();
    let w = g.weights.clone();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| f64::from(i == j) - beta * sw[i] * e.overlap(x[i], x[j]) * sw[j]);
    let res = Resolvent::new(m, &g, "I − βT")?;
    // rank-three part: e₁ = −½Φ, e₂ = (p/2)(K(·,b) + K(·,a)), e₃ = (p(2p−1)/2)(K(·,b) − K(·,a))
    let es = |s: f64| -> [f64; 3] {
        let (ka, kb) = (k.k(s, a), k.k(s, b));
        [-0.5 * rho.cdf(s), 0.5 * p * (kb + ka), 0.5 * p * (2.0 * p - 1.0) * (kb - ka)]
    };
    let at_nodes: Vec<[f64; 3]> = x.iter().map(|&s| es(s)).collect();
    let (ea, eb) = (es(a), es(b));
    let mut det3 = nalgebra::Matrix3::<f64>::identity();
    for i in 0..3 {
        let f: Vec<f64> = at_nodes.iter().map(|v| v[i]).collect();
        let r = res.solve(&f);
        // (Re)(s) = e(s) + β Σ w_j T(s, x_j)(Re)(x_j)
        let at = |s: f64, e_s: f64| e_s + beta * (0..n).map(|j| w[j] * e.overlap(s, x[j]) * r[j]).sum::<f64>();
        let (ra, rb) = (at(a, ea[i]), at(b, eb[i]));
        let with_rho = beta * (0..n).map(|j| w[j] * rho.pdf(x[j]) * r[j]).sum::<f64>();
        det3[(i, 0)] += with_rho;
        det3[(i, 1)] += ra - rb;
        det3[(i, 2)] += ra + rb;
    }
    let d = det3.determinant();
    if !(d > 0.0) {
        return numerical(format!("3×3 determinant {d:.3e} is not positive at N = {n}"));
    }
    Ok(0.5 * (res.log_det + d.ln()))
}

/// `Pf_{[−L, b_cut]}(J − p𝐊)` for a half-space kernel, approximating the gap
/// probability of [−L, ∞). If the expected number of particles beyond `b_cut`
/// exceeds 1e−8 it is added to the Richardson error as a truncation warning.
pub fn fpf_edge(k: &DerivedKernel, p: f64, l: f64, b_cut: f64, n: usize) -> Result<EvalResult> {
    check_p(p, false)?;
    check_interval(-l, b_cut)?;
    check_nodes(n)?;
    let mut r = with_richardson(n, |m| edge_log_pf(&k.scalar, p, -l, b_cut, m))?;
    let tail = tail_mass(k, p, b_cut);
    if tail > 1e-8 {
        r.richardson_error += tail;
    }
    Ok(r)
}

/// Kernel argument of [`series_oracle`].
pub enum SeriesKernel<'a> {
    /// Scalar kernel T of `Det(I − βT)`.
    Det(&'a dyn Fn(f64, f64) -> f64),
    /// Derived-form kernel 𝐊 of `Pf(J − p𝐊)`.
    Pf(&'a DerivedKernel),
}

/// Gauss–Legendre points per dimension for the n-th series term.
fn oracle_order(n: usize) -> usize {
    match n {
        1 => 40,
        2 => 32,
        3 => 20,
        4 => 14,
        _ => 10,
    }
}

/// ∫ over the ordered simplex a < x₁ < … < xₙ < b of `f`, by collapsed
/// coordinates x_k = x_{k−1} + (b − x_{k−1})u_k and tensor Gauss–Legendre in u.
fn simplex_integral(n: usize, a: f64, b: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let m = oracle_order(n);
    let (t, wt) = gauss_legendre(m);
    let u: Vec<f64> = t.iter().map(|v| 0.5 * (v + 1.0)).collect();
    let wu: Vec<f64> = wt.iter().map(|v| 0.5 * v).collect();
    let mut idx = vec![0usize; n];
    let mut pts = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let mut lo = a;
        let mut jac = 1.0;
        for k in 0..n {
            let span = b - lo;
            pts[k] = lo + span * u[idx[k]];
            jac *= span * wu[idx[k]];
            lo = pts[k];
        }
        total += jac * f(&pts);
        // odometer
        let mut k = n;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// (−1)ⁿ/n! ∫_{[a,b]ⁿ} of the n-point determinant or Pfaffian, as (−1)ⁿ times the
/// integral over the ordered simplex (the integrand is symmetric, and on the
/// simplex the jump S is constant so the integrand is smooth).
fn series_term(kernel: &SeriesKernel, a: f64, b: f64, weight: f64, n: usize) -> Result<f64> {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut failure = None;
    let v = simplex_integral(n, a, b, |x| match kernel {
        SeriesKernel::Det(t) => {
            let m = DMatrix::from_fn(n, n, |i, j| weight * t(x[i], x[j]));
            m.determinant()
        }
        SeriesKernel::Pf(k) => match k.intensity(weight, x) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        },
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(sign * v)
}

/// Hadamard bound on Σ_{n > n_max} |term n|, from entry bounds sampled on a grid.
fn hadamard_tail(kernel: &SeriesKernel, a: f64, b: f64, weight: f64, n_max: usize) -> f64 {
    let s: Vec<f64> = (0..=48).map(|i| a + (b - a) * i as f64 / 48.0).collect();
    // row-norm ingredients: scalar kernels have one entry type, derived ones a
    // (S+K, D₂K) row and a (D₁K, D₁₂K) row
    let (r1, r2) = match kernel {
        SeriesKernel::Det(t) => {
            let m = s.iter().flat_map(|&x| s.iter().map(move |&y| (x, y))).map(|(x, y)| t(x, y).abs()).fold(0.0, f64::max);
            let m = 1.1 * weight.abs() * m;
            (m, m)
        }
        SeriesKernel::Pf(k) => {
            let mut e = [0.0f64; 4];
            for &x in &s {
                for &y in &s {
                    let blk = k.block(x, y);
                    // |S + K| ≤ 1 + |K| for either ordering of the points
                    e[0] = e[0].max(1.0 + k.scalar.k(x, y).abs());
                    e[1] = e[1].max(blk[0][1].abs());
                    e[2] = e[2].max(blk[1][0].abs());
                    e[3] = e[3].max(blk[1][1].abs());
                }
            }
            let w = 1.1 * weight.abs();
            ((w * w * (e[0] * e[0] + e[1] * e[1])).sqrt(), (w * w * (e[2] * e[2] + e[3] * e[3])).sqrt())
        }
    };
    let mut tail = 0.0;
    let mut log_fact = (1..=n_max).map(|i| (i as f64).ln()).sum::<f64>();
    for n in n_max + 1..400 {
        log_fact += (n as f64).ln();
        let nf = n as f64;
        // |det| ≤ Π row norms; derived Pfaffians: |pf| = |det|^{1/2} with n rows of each type
        let log_entry = match kernel {
            SeriesKernel::Det(_) => nf * (r1.ln() + 0.5 * nf.ln()),
            SeriesKernel::Pf(_) => 0.5 * nf * (r1.ln() + r2.ln() + nf.ln()),
        };
        let term = (nf * (b - a).ln() + log_entry - log_fact).exp();
        tail += term;
        if term < 1e-30 * tail.max(1e-300) || (n > n_max + 5 && term < 1e-40) {
            break;
        }
    }
    tail
}

/// Whether the series is the gap probability of a point process, so that partial
/// sums bracket the value (Bonferroni). Pfaffian kernels qualify for p ∈ [0,1];
/// scalar ones when βT is symmetric with spectrum in [0,1], checked on a Nyström grid.
fn alternating(kernel: &SeriesKernel, a: f64, b: f64, weight: f64) -> Result<bool> {
    let t = match kernel {
        SeriesKernel::Pf(_) => return Ok(true),
        SeriesKernel::Det(t) => t,
    };
    if !(0.0..=1.0).contains(&weight) {
        return Ok(false);
    }
    let g = make_grid(a, b, 48, Rule::GaussLegendre)?;
    let n = g.nodes.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        weight * (g.weights[i] * g.weights[j]).sqrt() * t(g.nodes[i], g.nodes[j])
    });
    let scale = m.norm().max(1e-300);
    if (&m - m.transpose()).norm() > 1e-12 * scale {
        return Ok(false);
    }
    let eig = m.symmetric_eigenvalues();
    Ok(eig.iter().all(|&l| l > -1e-10 * scale && l < 1.0 - 1e-10))
}

/// Truncated series `Σ_{n ≤ n_max} (−1)ⁿ/n! ∫_{[a,b]ⁿ} det/pf(weight·kernel)`.
///
/// The truncation error must be certified below 1e−8: by the Hadamard bound, or,
/// when the series is a gap probability (Pfaffian kernels with p ∈ [0,1], or a
/// symmetric scalar kernel with 0 ≤ βT < I), by the Bonferroni bound |term n_max+1|.
pub fn series_oracle(kernel: SeriesKernel, interval: (f64, f64), weight: f64, n_max: usize) -> Result<f64> {
    let (a, b) = interval;
    check_interval(a, b)?;
    if n_max > 4 {
        return domain("series oracle supports n_max ≤ 4");
    }
    if let SeriesKernel::Pf(_) = kernel {
        check_p(weight, false)?;
    }
    let mut total = 1.0;
    for n in 1..=n_max {
        total += series_term(&kernel, a, b, weight, n)?;
    }
    let mut bound = hadamard_tail(&kernel, a, b, weight, n_max);
    if bound >= 1e-8 && alternating(&kernel, a, b, weight)? {
        bound = bound.min(series_term(&kernel, a, b, weight, n_max + 1)?.abs());
    }
    if !(bound < 1e-8) {
        return domain(format!(
            "series truncated at n = {n_max} on [{a}, {b}]: error bound {bound:.2e} exceeds 1e-8"
        ));
    }
    Ok(total)
}

/// Least-squares fit of `log v(L) ≈ −κ₁L + κ₂ (+ c log L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteFit {
    pub kappa1: f64,
    pub kappa2: f64,
    pub log_coeff: Option<f64>,
    /// Largest absolute deviation of the samples from the fit.
    pub residual: f64,
}

pub fn fit_asymptote(samples: &[(f64, f64)], with_log_term: bool) -> Result<AsymptoteFit> {
    let cols = if with_log_term { 3 } else { 2 };
    if samples.len() < 3 {
        return domain("asymptote fit needs at least three samples");
    }
    for (i, s) in samples.iter().enumerate() {
        if samples[i + 1..].iter().any(|t| t.0 == s.0) {
            return domain("asymptote fit needs distinct L values");
        }
        if with_log_term && !(s.0 > 0.0) {
            return domain("log L regressor needs L > 0");
        }
    }
    let rows = samples.len();
    let design = DMatrix::from_fn(rows, cols, |i, j| match j {
        0 => -samples[i].0,
        1 => 1.0,
        _ => samples[i].0.ln(),
    });
    let y = DVector::from_iterator(rows, samples.iter().map(|s| s.1));
    let svd = design.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if !(smin > 1e-10 * smax) {
        return domain("asymptote fit design is collinear");
    }
    let coef = svd.solve(&y, 0.0).map_err(|e| Error::Numerical(format!("asymptote fit: {e}")))?;
    let residual = (&design * &coef - &y).amax();
    Ok(AsymptoteFit {
        kappa1: coef[0],
        kappa2: coef[1],
        log_coeff: with_log_term.then(|| coef[2]),
        residual,
    })
}

/// One CSV row of evaluated log Pfaffians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub kernel: String,
    pub p: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub log_pf: f64,
    pub richardson_error: f64,
}

pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_records`]; lines starting with `#` are skipped.
pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
