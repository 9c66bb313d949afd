use super::density::{read_two_columns, DensityKind, StepDensity};
use crate::error::{domain, Result};
use crate::numerics_base::special::{erfc, erfcx};
use crate::numerics_base::{integrate, integrate_intervals, GkOptions};
use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::Arc;

/// Translation-invariant kernel K(x,y) = −2∫₀^{y−x} ρ for a symmetric density.
#[derive(Clone, Debug)]
pub struct BulkKernel {
    pub rho: StepDensity,
}

/// Half-space kernel K(x,y) = ∫_{−∞}^0 [Φ(x−z)ρ(y−z) − Φ(y−z)ρ(x−z)] dz.
#[derive(Clone, Debug)]
pub struct EdgeKernel {
    pub rho: StepDensity,
    /// Effective support of ρ, beyond which it is below 1e−14 (or 1e-18 for quadrature).
    support: (f64, f64),
}

/// Intensity of the initial Poisson field for the exit kernel.
#[derive(Clone)]
pub enum ExitIntensity {
    Constant(f64),
    /// λ(y) together with its primitive Λ(y) = ∫₀^y λ.
    Function { lambda: Arc<dyn Fn(f64) -> f64 + Send + Sync>, primitive: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl std::fmt::Debug for ExitIntensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExitIntensity::Constant(l) => write!(f, "Constant({l})"),
            ExitIntensity::Function { .. } => write!(f, "Function(..)"),
        }
    }
}

/// Exit-time kernel for Poisson initial data on (0, ∞), in time coordinates.
#[derive(Clone, Debug)]
pub struct ExitPoissonKernel {
    pub intensity: ExitIntensity,
    pub theta: f64,
}

/// Kernel of the form K(x,y) = g(y − x) with g odd, read from a table of g on [0, d_max].
#[derive(Clone, Debug)]
pub struct TabulatedKernel {
    spline: CubicSpline,
}

/// Strictly increasing C¹ change of variables; kernels are pulled back through its inverse.
#[derive(Clone)]
pub struct MonotoneMap {
    pub name: String,
    pub forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub inverse_deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MonotoneMap({})", self.name)
    }
}

/// K′(x,y) = K(φ⁻¹x, φ⁻¹y) with derivative entries rescaled by (φ⁻¹)′.
#[derive(Clone, Debug)]
pub struct PushforwardKernel {
    pub base: ScalarKernel,
    pub map: MonotoneMap,
}

/// Scalar antisymmetric kernel generating a derived-form Pfaffian kernel.
#[derive(Clone, Debug)]
pub enum ScalarKernel {
    Bulk(BulkKernel),
    Edge(EdgeKernel),
    /// Real zeros of the Gaussian power series on (−1, 1).
    Gps,
    /// Exit times under the maximal entrance law, coordinates t > 0.
    ExitMaximal,
    ExitPoisson(ExitPoissonKernel),
    Tabulated(TabulatedKernel),
    Pushforward(Arc<PushforwardKernel>),
}

pub fn scalar_bulk(rho: StepDensity) -> Result<ScalarKernel> {
    if !rho.is_symmetric() {
        return domain("the bulk kernel needs a symmetric density");
    }
    Ok(ScalarKernel::Bulk(BulkKernel { rho }))
}

pub fn scalar_edge(rho: StepDensity) -> Result<ScalarKernel> {
    let support = rho.tail_bounds(1e-18);
    if !(support.0.is_finite() && support.1.is_finite()) {
        return domain("edge kernel needs a density with integrable tails");
    }
    Ok(ScalarKernel::Edge(EdgeKernel { rho, support }))
}

pub fn scalar_gps() -> ScalarKernel {
    ScalarKernel::Gps
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Maximal,
    Poisson,
}

pub fn scalar_exit_maximal() -> ScalarKernel {
    ScalarKernel::ExitMaximal
}

pub fn scalar_exit_poisson(intensity: ExitIntensity, theta: f64) -> Result<ScalarKernel> {
    if !(0.0..=1.0).contains(&theta) {
        return domain("θ must lie in [0, 1]");
    }
    if let ExitIntensity::Constant(l) = intensity {
        if !(l > 0.0 && l.is_finite()) {
            return domain("Poisson intensity must be positive and finite");
        }
    }
    Ok(ScalarKernel::ExitPoisson(ExitPoissonKernel { intensity, theta }))
}

pub fn scalar_tabulated(d: Vec<f64>, g: Vec<f64>) -> Result<ScalarKernel> {
    if d.len() < 4 || d.len() != g.len() {
        return domain("tabulated kernel needs at least four (d, g) rows");
    }
    if d[0] != 0.0 || g[0].abs() > 1e-12 {
        return domain("tabulated kernel profile must start at d = 0 with g(0) = 0");
    }
    if d.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("tabulated kernel abscissae must be strictly increasing");
    }
    Ok(ScalarKernel::Tabulated(TabulatedKernel { spline: CubicSpline::natural(d, g) }))
}

pub fn scalar_tabulated_csv(path: &std::path::Path) -> Result<ScalarKernel> {
    let (d, g) = read_two_columns(path)?;
    scalar_tabulated(d, g)
}

pub fn pushforward(base: ScalarKernel, map: MonotoneMap) -> Result<ScalarKernel> {
    Ok(ScalarKernel::Pushforward(Arc::new(PushforwardKernel { base, map })))
}

impl MonotoneMap {
    /// Validates monotonicity and inversion on `probe` points of the target coordinate.
    pub fn new(
        name: &str,
        forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        inverse_deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        probe: &[f64],
    ) -> Result<Self> {
        let mut prev = f64::NEG_INFINITY;
        let mut sorted = probe.to_vec();
        sorted.sort_by(f64::total_cmp);
        for &x in &sorted {
            let u = inverse(x);
            if !(u > prev) || !(inverse_deriv(x) > 0.0) {
                return domain(format!("map {name} is not strictly increasing near {x}"));
            }
            if (forward(u) - x).abs() > 1e-8 * x.abs().max(1.0) {
                return domain(format!("map {name}: forward and inverse disagree at {x}"));
            }
            prev = u;
        }
        Ok(Self { name: name.into(), forward, inverse, inverse_deriv })
    }

    pub fn identity() -> Self {
        Self {
            name: "identity".into(),
            forward: Arc::new(|x| x),
            inverse: Arc::new(|x| x),
            inverse_deriv: Arc::new(|_| 1.0),
        }
    }

    /// x ↦ ½ log((1+x)/(1−x)) from (−1, 1) onto ℝ.
    pub fn artanh() -> Self {
        Self {
            name: "artanh".into(),
            forward: Arc::new(|x: f64| x.atanh()),
            inverse: Arc::new(|y: f64| y.tanh()),
            inverse_deriv: Arc::new(|y: f64| 1.0 / y.cosh().powi(2)),
        }
    }

    /// t ↦ ½ log t from (0, ∞) onto ℝ.
    pub fn half_log() -> Self {
        Self {
            name: "half_log".into(),
            forward: Arc::new(|t: f64| 0.5 * t.ln()),
            inverse: Arc::new(|y: f64| (2.0 * y).exp()),
            inverse_deriv: Arc::new(|y: f64| 2.0 * (2.0 * y).exp()),
        }
    }
}

impl ScalarKernel {
    pub fn name(&self) -> String {
        match self {
            ScalarKernel::Bulk(b) => format!("bulk[{}]", b.rho.name()),
            ScalarKernel::Edge(e) => format!("edge[{}]", e.rho.name()),
            ScalarKernel::Gps => "gps".into(),
            ScalarKernel::ExitMaximal => "exit_maximal".into(),
            ScalarKernel::ExitPoisson(e) => format!("exit_poisson(theta={})", e.theta),
            ScalarKernel::Tabulated(_) => "tabulated".into(),
            ScalarKernel::Pushforward(p) => format!("{}∘{}", p.base.name(), p.map.name),
        }
    }

    /// Open coordinate range on which the kernel is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            ScalarKernel::Gps => (-1.0, 1.0),
            ScalarKernel::ExitMaximal | ScalarKernel::ExitPoisson(_) => (0.0, f64::INFINITY),
            ScalarKernel::Pushforward(p) => {
                let (a, b) = p.base.domain();
                let f = &p.map.forward;
                let img = |v: f64, inf: f64| if v.is_finite() { f(v) } else { inf };
                (img(a, f64::NEG_INFINITY), img(b, f64::INFINITY))
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Checked evaluation of K(x, y).
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let (a, b) = self.domain();
        let inside = |v: f64| v > a && v < b;
        if !(inside(x) && inside(y)) {
            return domain(format!("kernel {} evaluated outside ({a}, {b})", self.name()));
        }
        Ok(self.k(x, y))
    }

    pub fn k(&self, x: f64, y: f64) -> f64 {
        if x == y {
            return 0.0;
        }
        match self {
            ScalarKernel::Bulk(b) => bulk_k(&b.rho, y - x),
            ScalarKernel::Edge(e) => e.k(x, y),
            ScalarKernel::Gps => {
                let v = FRAC_2_PI * gps_ratio(x, y).min(1.0).asin() - 1.0;
                if x < y { v } else { -v }
            }
            ScalarKernel::ExitMaximal => 4.0 / PI * (x / y).sqrt().atan() - 1.0,
            ScalarKernel::ExitPoisson(e) => e.eval(x, y, 0),
            ScalarKernel::Tabulated(t) => t.g(y - x),
            ScalarKernel::Pushforward(p) => p.base.k((p.map.inverse)(x), (p.map.inverse)(y)),
        }
    }

    /// ∂K/∂y.
    pub fn d2(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarKernel::Bulk(b) => -2.0 * b.rho.pdf(y - x),
            ScalarKernel::Edge(e) => -2.0 * e.overlap(x, y) - e.rho.pdf(y) * e.rho.cdf(x),
            ScalarKernel::Gps => -FRAC_2_PI * gps_ratio(x, y) / (1.0 - y * y),
            ScalarKernel::ExitMaximal => -FRAC_2_PI * (x / y).sqrt() / (x + y),
            ScalarKernel::ExitPoisson(e) => e.eval(x, y, 2),
            ScalarKernel::Tabulated(t) => t.dg(y - x),
            ScalarKernel::Pushforward(p) => {
                let (u, v) = ((p.map.inverse)(x), (p.map.inverse)(y));
                p.base.d2(u, v) * (p.map.inverse_deriv)(y)
            }
        }
    }

    /// ∂K/∂x.
    pub fn d1(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarKernel::Bulk(b) => 2.0 * b.rho.pdf(y - x),
            ScalarKernel::Edge(e) => 2.0 * e.overlap(x, y) + e.rho.pdf(x) * e.rho.cdf(y),
            ScalarKernel::Gps => FRAC_2_PI * gps_ratio(x, y) / (1.0 - x * x),
            ScalarKernel::ExitMaximal => FRAC_2_PI * (y / x).sqrt() / (x + y),
            ScalarKernel::ExitPoisson(e) => e.eval(x, y, 1),
            ScalarKernel::Tabulated(t) => -t.dg(y - x),
            ScalarKernel::Pushforward(p) => {
                let (u, v) = ((p.map.inverse)(x), (p.map.inverse)(y));
                p.base.d1(u, v) * (p.map.inverse_deriv)(x)
            }
        }
    }

    /// ∂²K/∂x∂y.
    pub fn d12(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarKernel::Bulk(b) => 2.0 * b.rho.dpdf(y - x),
            ScalarKernel::Edge(e) => -2.0 * e.overlap_dx(x, y) - e.rho.pdf(x) * e.rho.pdf(y),
            ScalarKernel::Gps => {
                -FRAC_2_PI * gps_ratio(x, y) * (y - x) / ((1.0 - x * x) * (1.0 - y * y) * (1.0 - x * y))
            }
            ScalarKernel::ExitMaximal => -(y - x) / (PI * (x * y).sqrt() * (x + y).powi(2)),
            ScalarKernel::ExitPoisson(e) => e.eval(x, y, 3),
            ScalarKernel::Tabulated(t) => -t.d2g(y - x),
            ScalarKernel::Pushforward(p) => {
                let (u, v) = ((p.map.inverse)(x), (p.map.inverse)(y));
                p.base.d12(u, v) * (p.map.inverse_deriv)(x) * (p.map.inverse_deriv)(y)
            }
        }
    }
}

fn bulk_k(rho: &StepDensity, d: f64) -> f64 {
    // −2 ∫₀^d ρ = 1 − 2Φ(d), computed from the smaller tail for accuracy
    if d > 0.0 {
        -(1.0 - 2.0 * (1.0 - rho.cdf(d)))
    } else {
        1.0 - 2.0 * rho.cdf(d)
    }
}

fn gps_ratio(x: f64, y: f64) -> f64 {
    ((1.0 - x * x) * (1.0 - y * y)).sqrt() / (1.0 - x * y)
}

impl EdgeKernel {
    fn opts() -> GkOptions<f64> {
        GkOptions::tol(1e-15, 1e-12)
    }

    /// Integrates `f(u)` over u = −z ∈ [0, ∞) where ρ(x+u) or ρ(y+u) is non-negligible.
    fn half_line(&self, x: f64, y: f64, f: impl Fn(f64) -> f64) -> f64 {
        let hi = self.support.1 - x.min(y);
        if hi <= 0.0 {
            return 0.0;
        }
        let mut pts = vec![0.0, hi];
        for c in [self.rho.mode() - x, self.rho.mode() - y] {
            if c > 0.0 && c < hi {
                pts.push(c);
            }
        }
        pts.sort_by(f64::total_cmp);
        integrate_intervals(f, &pts, &Self::opts()).value
    }

    pub fn k(&self, x: f64, y: f64) -> f64 {
        let r = &self.rho;
        // the integrand tends to Φ(x+u)ρ(y+u) − Φ(y+u)ρ(x+u) → 0 for large u
        let hi = self.support.1 - x.min(y);
        if hi <= 0.0 {
            return 0.0;
        }
        let lo_u = (self.support.0 - x.max(y)).max(0.0);
        // below lo_u both densities vanish, so the integrand is zero
        let mut pts = vec![lo_u, hi];
        for c in [r.mode() - x, r.mode() - y] {
            if c > lo_u && c < hi {
                pts.push(c);
            }
        }
        pts.sort_by(f64::total_cmp);
        integrate_intervals(
            |u| r.cdf(x + u) * r.pdf(y + u) - r.cdf(y + u) * r.pdf(x + u),
            &pts,
            &Self::opts(),
        )
        .value
    }

    /// T(x,y) = ∫_{−∞}^0 ρ(x−z)ρ(y−z) dz.
    pub fn overlap(&self, x: f64, y: f64) -> f64 {
        match self.rho.kind() {
            DensityKind::Gaussian { t } => {
                let s2 = 2.0 * t;
                let s = s2.sqrt();
                let m = 0.5 * (x + y);
                let d = x - y;
                // (1/(2πs²)) e^{−d²/4s²} (s√π/2) erfc(m/s), with erfc scaled when m ≫ s
                let pref = 1.0 / (2.0 * PI * s2) * 0.5 * s * PI.sqrt();
                if m / s > 5.0 {
                    pref * (-(d * d) / (4.0 * s2) - m * m / s2).exp() * erfcx(m / s)
                } else {
                    pref * (-(d * d) / (4.0 * s2)).exp() * erfc(m / s)
                }
            }
            DensityKind::Persistence => {
                let c = (2.0 * x).exp() + (2.0 * y).exp();
                2.0 / PI * (x + y - c).exp() / c
            }
            _ => self.half_line(x, y, |u| self.rho.pdf(x + u) * self.rho.pdf(y + u)),
        }
    }

    /// ∂T/∂x.
    pub fn overlap_dx(&self, x: f64, y: f64) -> f64 {
        match self.rho.kind() {
            DensityKind::Gaussian { t } => {
                let s2 = 2.0 * t;
                -(x - y) / (2.0 * s2) * self.overlap(x, y) - 0.5 * self.rho.pdf(x) * self.rho.pdf(y)
            }
            DensityKind::Persistence => {
                let (ex, ey) = ((2.0 * x).exp(), (2.0 * y).exp());
                let c = ex + ey;
                self.overlap(x, y) * (1.0 - 2.0 * ex - 2.0 * ex / c)
            }
            _ => self.half_line(x, y, |u| self.rho.dpdf(x + u) * self.rho.pdf(y + u)),
        }
    }

    /// ∫_{−∞}^0 ρ(x−z) [Φ(hi−z) − Φ(lo−z)] dz, i.e. T applied to the indicator of (lo, hi).
    pub fn overlap_indicator(&self, x: f64, lo: f64, hi: f64) -> f64 {
        let r = &self.rho;
        let u_hi = self.support.1 - x;
        if u_hi <= 0.0 {
            return 0.0;
        }
        let u_lo = (self.support.0 - x).max(0.0);
        let mut pts = vec![u_lo, u_hi];
        let c = r.mode() - x;
        if c > u_lo && c < u_hi {
            pts.push(c);
        }
        pts.sort_by(f64::total_cmp);
        let upper = |u: f64| if hi.is_finite() { r.cdf(hi + u) } else { 1.0 };
        let lower = |u: f64| if lo.is_finite() { r.cdf(lo + u) } else { 0.0 };
        integrate_intervals(|u| r.pdf(x + u) * (upper(u) - lower(u)), &pts, &Self::opts()).value
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }
}

impl ExitPoissonKernel {
    fn p(t: f64, y: f64) -> f64 {
        (2.0 / (PI * t)).sqrt() * (-y * y / (2.0 * t)).exp()
    }

    fn dp(t: f64, y: f64) -> f64 {
        Self::p(t, y) * (y * y / (2.0 * t * t) - 0.5 / t)
    }

    /// G_t(y₁) = ∫_{y₁}^∞ (e^{−(1+θ)(Λ(y₂)−Λ(y₁))} − 1) p_t(y₂) dy₂, or its t-derivative.
    fn g(&self, t: f64, y1: f64, deriv: bool) -> f64 {
        match &self.intensity {
            ExitIntensity::Constant(l) => {
                let c = (1.0 + self.theta) * l;
                let s = (2.0 * t).sqrt();
                let w = (y1 + c * t) / s;
                let gauss = (-y1 * y1 / (2.0 * t)).exp();
                let a = gauss * erfcx(w);
                if !deriv {
                    return a - erfc(y1 / s);
                }
                let dw = c / s - (y1 + c * t) / (s * s * s);
                let da = 0.5 * c * c * a - 2.0 / PI.sqrt() * gauss * dw;
                let db = 2.0 / PI.sqrt() * gauss * y1 / (s * s * s);
                da - db
            }
            ExitIntensity::Function { primitive, .. } => {
                let l1 = primitive(y1);
                let f = |y2: f64| {
                    let w = (-(1.0 + self.theta) * (primitive(y2) - l1)).exp() - 1.0;
                    w * if deriv { Self::dp(t, y2) } else { Self::p(t, y2) }
                };
                let top = y1 + 12.0 * t.sqrt();
                integrate(f, y1, top, &GkOptions::tol(1e-14, 1e-11)).value
            }
        }
    }

    /// `which`: 0 → K, 1 → ∂ₛK, 2 → ∂ₜK, 3 → ∂ₛ∂ₜK.
    fn eval(&self, s: f64, t: f64, which: u8) -> f64 {
        let (ds, dt) = (which == 1 || which == 3, which == 2 || which == 3);
        let ps = |y: f64| if ds { Self::dp(s, y) } else { Self::p(s, y) };
        let pt = |y: f64| if dt { Self::dp(t, y) } else { Self::p(t, y) };
        let top = 12.0 * s.max(t).sqrt();
        let f = |y1: f64| ps(y1) * self.g(t, y1, dt) - pt(y1) * self.g(s, y1, ds);
        let pts = [0.0, 2.0 * s.min(t).sqrt(), top];
        integrate_intervals(f, &pts, &GkOptions::tol(1e-14, 1e-11)).value
    }
}

impl TabulatedKernel {
    fn g(&self, d: f64) -> f64 {
        if d >= 0.0 { self.spline.eval(d) } else { -self.spline.eval(-d) }
    }

    fn richardson(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = 1e-5;
        let c = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        (4.0 * c(h / 2.0) - c(h)) / 3.0
    }

    fn dg(&self, d: f64) -> f64 {
        self.richardson(|e| self.g(d + e))
    }

    fn d2g(&self, d: f64) -> f64 {
        self.richardson(|e| self.dg(d + e))
    }
}

/// Natural cubic spline through (x, y); constant extension beyond the last knot.
#[derive(Clone, Debug)]
struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    fn natural(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        // tridiagonal system for the second derivatives (Thomas algorithm)
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            d[i] = (rhs - h0 * d[i - 1]) / diag;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}
