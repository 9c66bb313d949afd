use crate::error::{domain, Result};
use crate::numerics_base::special::{digamma, erf, erfc, erfcx, gamma, ln_gamma_complex, EULER_GAMMA};
use crate::numerics_base::{
    grid_convolve, integrate, integrate_intervals, GkOptions, UniformGridFn,
};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Exp, StandardNormal};
use std::f64::consts::{FRAC_2_SQRT_PI, PI};
use std::sync::Arc;

/// Density sampled on a uniform grid, with its cumulative integral.
#[derive(Clone, Debug)]
pub struct TabulatedDensity {
    pub grid: UniformGridFn<f64>,
    cdf: Vec<f64>,
}

impl TabulatedDensity {
    /// Normalises the table; rejects negative values and tables whose raw mass is far from 1.
    pub fn new(grid: UniformGridFn<f64>) -> Result<Self> {
        if grid.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return domain("tabulated density must be finite and non-negative");
        }
        let mass = grid.integral();
        if (mass - 1.0).abs() > 1e-3 {
            return domain(format!("tabulated density has mass {mass}, not 1"));
        }
        let values: Vec<f64> = grid.values.iter().map(|v| v / mass).collect();
        let grid = UniformGridFn::new(grid.origin, grid.step, values)?;
        let mut cdf = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            cdf[i] = cdf[i - 1] + 0.5 * grid.step * (grid.values[i - 1] + grid.values[i]);
        }
        Ok(Self { grid, cdf })
    }

    /// Reads a two-column CSV `(x, value)` with a header and uniformly spaced x.
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let (xs, ys) = read_two_columns(path)?;
        if xs.len() < 3 {
            return domain("tabulated density needs at least three rows");
        }
        let h = xs[1] - xs[0];
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return domain("tabulated x values must be strictly increasing");
            }
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0) {
                return domain("tabulated density must be sampled on a uniform grid");
            }
        }
        Self::new(UniformGridFn::new(xs[0], h, ys)?)
    }

    fn cdf(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.origin {
            return 0.0;
        }
        if x >= g.end() {
            return 1.0;
        }
        let u = (x - g.origin) / g.step;
        let i = (u.floor() as usize).min(g.len() - 2);
        let f = u - i as f64;
        let (a, b) = (g.values[i], g.values[i + 1]);
        // exact integral of the linear interpolant over the partial cell
        self.cdf[i] + g.step * (a * f + 0.5 * (b - a) * f * f)
    }

    fn quantile(&self, u: f64) -> f64 {
        let total = *self.cdf.last().unwrap();
        let target = u * total;
        let i = self.cdf.partition_point(|&c| c < target).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let f = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        self.grid.x(i - 1) + f * self.grid.step
    }
}

pub(crate) fn read_two_columns(path: &std::path::Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return domain("expected two columns (x, value)");
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| crate::Error::Domain(format!("bad number {s:?}: {e}")));
        xs.push(parse(&rec[0])?);
        ys.push(parse(&rec[1])?);
    }
    Ok((xs, ys))
}

/// The density families a kernel can be built from.
#[derive(Clone, Debug)]
pub enum DensityKind {
    /// π⁻¹ sech x.
    Sech,
    /// Centred Gaussian with variance 2t.
    Gaussian { t: f64 },
    /// N(0, 2t) plus an independent two-sided exponential of rate λ(1+θ).
    PoissonSmoothed { lambda: f64, theta: f64, t: f64 },
    /// (2/√π) exp(x − e^{2x}): the law of ½ log of a Gamma(½) variable.
    Persistence,
    /// (2/π²) z / sinh z, the autocorrelation of the sech density.
    SechAutocorrelation,
    Tabulated(Arc<TabulatedDensity>),
}

/// A probability density on ℝ with the transforms and moments the kernels need.
#[derive(Clone, Debug)]
pub struct StepDensity {
    kind: DensityKind,
    second_moment: f64,
    fourth_moment: f64,
}

impl StepDensity {
    pub fn new(kind: DensityKind) -> Result<Self> {
        match &kind {
            DensityKind::Gaussian { t } if !(*t > 0.0) => return domain("gaussian needs t > 0"),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                if !(*lambda > 0.0 && *t > 0.0 && (0.0..=1.0).contains(theta)) {
                    return domain("poisson_smoothed needs λ > 0, t > 0 and θ in [0,1]");
                }
            }
            _ => {}
        }
        let (m2, m4) = match &kind {
            DensityKind::Sech => (PI * PI / 4.0, 5.0 * PI.powi(4) / 16.0),
            DensityKind::Gaussian { t } => (2.0 * t, 12.0 * t * t),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                let (g2, l2) = (2.0 * t, 2.0 / (mu * mu));
                (g2 + l2, 3.0 * g2 * g2 + 6.0 * g2 * l2 + 24.0 / mu.powi(4))
            }
            DensityKind::Persistence => {
                // central moments of ½ log G, G ~ Gamma(½): polygamma values at ½
                let mean = 0.5 * (-EULER_GAMMA - 2.0 * 2f64.ln());
                let var = PI * PI / 8.0;
                let k3 = 0.125 * (-14.0 * 1.202_056_903_159_594_2);
                let k4 = 0.0625 * PI.powi(4);
                let m2 = var + mean * mean;
                let m4 = k4 + 4.0 * k3 * mean + 3.0 * var * var + 6.0 * var * mean * mean + mean.powi(4);
                (m2, m4)
            }
            DensityKind::SechAutocorrelation => (PI * PI / 2.0, PI.powi(4)),
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                let m = |k: i32| (0..g.len()).map(|i| g.x(i).powi(k) * g.values[i]).sum::<f64>() * g.step;
                (m(2), m(4))
            }
        };
        Ok(Self { kind, second_moment: m2, fourth_moment: m4 })
    }

    pub fn sech() -> Self {
        Self::new(DensityKind::Sech).unwrap()
    }

    pub fn gaussian(t: f64) -> Result<Self> {
        Self::new(DensityKind::Gaussian { t })
    }

    pub fn poisson_smoothed(lambda: f64, theta: f64, t: f64) -> Result<Self> {
        Self::new(DensityKind::PoissonSmoothed { lambda, theta, t })
    }

    pub fn persistence() -> Self {
        Self::new(DensityKind::Persistence).unwrap()
    }

    pub fn tabulated(tab: TabulatedDensity) -> Result<Self> {
        Self::new(DensityKind::Tabulated(Arc::new(tab)))
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            DensityKind::Sech => "sech".into(),
            DensityKind::Gaussian { t } => format!("gaussian(t={t})"),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                format!("poisson_smoothed(lambda={lambda},theta={theta},t={t})")
            }
            DensityKind::Persistence => "persistence".into(),
            DensityKind::SechAutocorrelation => "sech_autocorrelation".into(),
            DensityKind::Tabulated(_) => "tabulated".into(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            DensityKind::Persistence => false,
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                let scale = g.values.iter().cloned().fold(0.0, f64::max);
                (g.origin + g.end()).abs() < 1e-9 * g.step.max(1.0)
                    && (0..g.len()).all(|i| (g.values[i] - g.values[g.len() - 1 - i]).abs() <= 1e-9 * scale)
            }
            _ => true,
        }
    }

    /// ∫ x² ρ.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// ∫ x⁴ ρ.
    pub fn fourth_moment(&self) -> f64 {
        self.fourth_moment
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            DensityKind::Persistence => 0.5 * (-EULER_GAMMA - 2.0 * 2f64.ln()),
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                (0..g.len()).map(|i| g.x(i) * g.values[i]).sum::<f64>() * g.step
            }
            _ => 0.0,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Sech => {
                let e = (-x.abs()).exp();
                2.0 * e / (PI * (1.0 + e * e))
            }
            DensityKind::Gaussian { t } => (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt(),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                0.25 * mu * (laplace_gauss_tail(mu, *t, x) + laplace_gauss_tail(mu, *t, -x))
            }
            DensityKind::Persistence => {
                if x > 6.0 {
                    return 0.0;
                }
                FRAC_2_SQRT_PI * (x - (2.0 * x).exp()).exp()
            }
            DensityKind::SechAutocorrelation => {
                let a = x.abs();
                let ratio = if a < 1e-4 { 1.0 - a * a / 6.0 } else { 2.0 * a * (-a).exp() / (1.0 - (-2.0 * a).exp()) };
                2.0 / (PI * PI) * ratio
            }
            DensityKind::Tabulated(tab) => tab.grid.eval(x),
        }
    }

    /// ρ′(x).
    pub fn dpdf(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Sech => -self.pdf(x) * x.tanh(),
            DensityKind::Gaussian { t } => -x / (2.0 * t) * self.pdf(x),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                0.25 * mu * mu * (laplace_gauss_tail(mu, *t, -x) - laplace_gauss_tail(mu, *t, x))
            }
            DensityKind::Persistence => self.pdf(x) * (1.0 - 2.0 * (2.0 * x).exp()),
            DensityKind::SechAutocorrelation => {
                let a = x.abs();
                if a < 1e-3 {
                    return -2.0 / (PI * PI) * x / 3.0;
                }
                // d/dz (z / sinh z) = (sinh z − z cosh z) / sinh² z
                let (s, c) = (x.sinh(), x.cosh());
                2.0 / (PI * PI) * (s - x * c) / (s * s)
            }
            DensityKind::Tabulated(tab) => {
                let h = tab.grid.step;
                (tab.grid.eval(x + h) - tab.grid.eval(x - h)) / (2.0 * h)
            }
        }
    }

    /// Φ(x) = ∫_{−∞}^x ρ.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Sech => 2.0 / PI * x.exp().atan(),
            DensityKind::Gaussian { t } => 0.5 * erfc(-x / (2.0 * t.sqrt())),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                let s = 2.0 * t.sqrt();
                let a = |y: f64| exp_times_erfc(mu * mu * t - mu * y, (2.0 * mu * t - y) / s);
                0.5 * erfc(-x / s) - 0.25 * a(x) + 0.25 * a(-x)
            }
            DensityKind::Persistence => erf(x.exp()),
            DensityKind::SechAutocorrelation => {
                let opts = GkOptions::tol(1e-15, 1e-13);
                let half = integrate(|z| self.pdf(z), 0.0, x.abs(), &opts).value;
                0.5 + half.copysign(x)
            }
            DensityKind::Tabulated(tab) => tab.cdf(x),
        }
    }

    /// ρ̂(k) = ∫ e^{ikx} ρ(x) dx, as a complex number.
    pub fn ft_complex(&self, k: f64) -> Result<Complex64> {
        Ok(match &self.kind {
            DensityKind::Persistence => {
                (ln_gamma_complex(Complex64::new(0.5, 0.5 * k)) - 0.5 * PI.ln()).exp()
            }
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                if k.abs() * g.step > PI {
                    return domain(format!("wavenumber {k} beyond the table's Nyquist limit"));
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..g.len() {
                    let w = if i == 0 || i + 1 == g.len() { 0.5 } else { 1.0 };
                    acc += w * g.values[i] * Complex64::from_polar(1.0, k * g.x(i));
                }
                acc * g.step
            }
            _ => Complex64::new(self.ft(k)?, 0.0),
        })
    }

    /// Real Fourier transform; for asymmetric densities this is the real part.
    pub fn ft(&self, k: f64) -> Result<f64> {
        Ok(match &self.kind {
            DensityKind::Sech => sech(PI * k / 2.0),
            DensityKind::Gaussian { t } => (-t * k * k).exp(),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                (-t * k * k).exp() * mu * mu / (mu * mu + k * k)
            }
            DensityKind::SechAutocorrelation => sech(PI * k / 2.0).powi(2),
            DensityKind::Persistence | DensityKind::Tabulated(_) => self.ft_complex(k)?.re,
        })
    }

    /// 1 − ρ̂(k) without cancellation near k = 0 (real part for asymmetric densities).
    pub fn one_minus_ft(&self, k: f64) -> Result<f64> {
        Ok(match &self.kind {
            DensityKind::Sech => {
                let u = PI * k / 2.0;
                2.0 * (u / 2.0).sinh().powi(2) * sech(u)
            }
            DensityKind::Gaussian { t } => -(-t * k * k).exp_m1(),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                (k * k - mu * mu * (-t * k * k).exp_m1()) / (mu * mu + k * k)
            }
            DensityKind::SechAutocorrelation => (PI * k / 2.0).tanh().powi(2),
            _ => {
                // 1 − cos(kx) = 2 sin²(kx/2) keeps small k accurate
                if k.abs() * self.second_moment.sqrt() < 1e-3 {
                    let k2 = k * k;
                    0.5 * self.second_moment * k2 - self.fourth_moment * k2 * k2 / 24.0
                } else {
                    1.0 - self.ft(k)?
                }
            }
        })
    }

    /// d ρ̂ / dk for symmetric densities.
    pub fn ft_deriv(&self, k: f64) -> Result<f64> {
        Ok(match &self.kind {
            DensityKind::Sech => {
                let u = PI * k / 2.0;
                -PI / 2.0 * sech(u) * u.tanh()
            }
            DensityKind::Gaussian { t } => -2.0 * t * k * (-t * k * k).exp(),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                let lor = mu * mu / (mu * mu + k * k);
                (-t * k * k).exp() * lor * (-2.0 * t * k - 2.0 * k / (mu * mu + k * k))
            }
            DensityKind::SechAutocorrelation => {
                let u = PI * k / 2.0;
                -PI * sech(u).powi(2) * u.tanh()
            }
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                if k.abs() * g.step > PI {
                    return domain(format!("wavenumber {k} beyond the table's Nyquist limit"));
                }
                let mut acc = 0.0;
                for i in 0..g.len() {
                    let w = if i == 0 || i + 1 == g.len() { 0.5 } else { 1.0 };
                    acc -= w * g.values[i] * g.x(i) * (k * g.x(i)).sin();
                }
                acc * g.step
            }
            DensityKind::Persistence => return domain("ft_deriv needs a symmetric density"),
        })
    }

    /// ∫ e^{φx} ρ(x) dx; errors where it diverges.
    pub fn mgf(&self, phi: f64) -> Result<f64> {
        let out = match &self.kind {
            DensityKind::Sech if phi.abs() < 1.0 => 1.0 / (PI * phi / 2.0).cos(),
            DensityKind::SechAutocorrelation if phi.abs() < 1.0 => 1.0 / (PI * phi / 2.0).cos().powi(2),
            DensityKind::Gaussian { t } => (t * phi * phi).exp(),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                if phi.abs() >= mu {
                    return domain(format!("moment generating function diverges at {phi}"));
                }
                (t * phi * phi).exp() * mu * mu / (mu * mu - phi * phi)
            }
            DensityKind::Persistence if phi > -1.0 => gamma((1.0 + phi) / 2.0) / PI.sqrt(),
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                (0..g.len()).map(|i| (phi * g.x(i)).exp() * g.values[i]).sum::<f64>() * g.step
            }
            _ => return domain(format!("moment generating function diverges at {phi}")),
        };
        Ok(out)
    }

    /// ∫ x e^{φx} ρ(x) dx, the derivative of [`Self::mgf`].
    pub fn mgf_deriv(&self, phi: f64) -> Result<f64> {
        let out = match &self.kind {
            DensityKind::Sech if phi.abs() < 1.0 => {
                let u = PI * phi / 2.0;
                PI / 2.0 * u.tan() / u.cos()
            }
            DensityKind::SechAutocorrelation if phi.abs() < 1.0 => {
                let u = PI * phi / 2.0;
                PI * u.tan() / u.cos().powi(2)
            }
            DensityKind::Gaussian { t } => 2.0 * t * phi * (t * phi * phi).exp(),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                if phi.abs() >= mu {
                    return domain(format!("moment generating function diverges at {phi}"));
                }
                let m = self.mgf(phi)?;
                m * (2.0 * t * phi + 2.0 * phi / (mu * mu - phi * phi))
            }
            DensityKind::Persistence if phi > -1.0 => {
                let z = (1.0 + phi) / 2.0;
                0.5 * gamma(z) * digamma(z)? / PI.sqrt()
            }
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                (0..g.len()).map(|i| g.x(i) * (phi * g.x(i)).exp() * g.values[i]).sum::<f64>() * g.step
            }
            _ => return domain(format!("moment generating function diverges at {phi}")),
        };
        Ok(out)
    }

    /// Largest φ for which the moment generating function is finite (∞ if entire).
    pub fn mgf_abscissa(&self) -> f64 {
        match &self.kind {
            DensityKind::Sech | DensityKind::SechAutocorrelation => 1.0,
            DensityKind::PoissonSmoothed { lambda, theta, .. } => lambda * (1.0 + theta),
            _ => f64::INFINITY,
        }
    }

    /// Mode of the density.
    pub fn mode(&self) -> f64 {
        match &self.kind {
            DensityKind::Persistence => -0.5 * 2f64.ln(),
            DensityKind::Tabulated(tab) => {
                let g = &tab.grid;
                let i = (0..g.len()).max_by(|&a, &b| g.values[a].total_cmp(&g.values[b])).unwrap();
                g.x(i)
            }
            _ => 0.0,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.pdf(self.mode())
    }

    /// Points `(lo, hi)` outside of which ρ < tol (densities are unimodal).
    pub fn tail_bounds(&self, tol: f64) -> (f64, f64) {
        if let DensityKind::Tabulated(tab) = &self.kind {
            let g = &tab.grid;
            return (g.origin, g.end());
        }
        let m = self.mode();
        let find = |dir: f64| {
            let mut step = 1.0;
            while self.pdf(m + dir * step) >= tol && step < 1e6 {
                step *= 2.0;
            }
            let (mut a, mut b) = (0.0, step);
            for _ in 0..80 {
                let c = 0.5 * (a + b);
                if self.pdf(m + dir * c) >= tol {
                    a = c;
                } else {
                    b = c;
                }
            }
            m + dir * b
        };
        (find(-1.0), find(1.0))
    }

    /// ∫ g(x) ρ(x) dx over the effective support, by adaptive quadrature.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.tail_bounds(1e-18);
        let m = self.mode();
        integrate_intervals(|x| g(x) * self.pdf(x), &[lo, m, hi], &GkOptions::tol(1e-15, 1e-13)).value
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            DensityKind::Sech => sample_sech(rng),
            DensityKind::Gaussian { t } => (2.0 * t).sqrt() * Distribution::<f64>::sample(&StandardNormal, rng),
            DensityKind::PoissonSmoothed { lambda, theta, t } => {
                let mu = lambda * (1.0 + theta);
                let g: f64 = StandardNormal.sample(rng);
                let e = Exp::new(mu).unwrap().sample(rng);
                (2.0 * t).sqrt() * g + if rng.random::<bool>() { e } else { -e }
            }
            DensityKind::Persistence => {
                let z: f64 = StandardNormal.sample(rng);
                0.5 * (0.5 * z * z).ln()
            }
            DensityKind::SechAutocorrelation => sample_sech(rng) - sample_sech(rng),
            DensityKind::Tabulated(tab) => tab.quantile(rng.random::<f64>()),
        }
    }
}

fn sample_sech<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (PI * u / 2.0).tan().ln()
}

/// Exponentially tilted sech law, density ∝ e^{φx} sech x for |φ| < 1.
///
/// Sampled as ½ log(V/(1−V)) with V ~ Beta((1+φ)/2, (1−φ)/2), written through the two
/// Gamma variables so that V never rounds to 1.
pub fn sample_tilted_sech<R: Rng + ?Sized>(phi: f64, rng: &mut R) -> f64 {
    let g1 = Gamma::new((1.0 + phi) / 2.0, 1.0).unwrap().sample(rng);
    let g2 = Gamma::new((1.0 - phi) / 2.0, 1.0).unwrap().sample(rng);
    0.5 * (g1.ln() - g2.ln())
}

fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// e^{a} erfc(z) without overflow for the combinations arising below.
fn exp_times_erfc(a: f64, z: f64) -> f64 {
    if z >= 0.0 {
        (a - z * z).exp() * erfcx(z)
    } else {
        2.0 * a.exp() - (a - z * z).exp() * erfcx(-z)
    }
}

/// e^{μ²t − μx} erfc((2μt − x)/(2√t)) = one half of the Laplace–Gauss convolution.
fn laplace_gauss_tail(mu: f64, t: f64, x: f64) -> f64 {
    exp_times_erfc(mu * mu * t - mu * x, (2.0 * mu * t - x) / (2.0 * t.sqrt()))
}

/// The autocorrelation density ρ̃(z) = ∫ ρ(w) ρ(w − z) dw.
///
/// Closed forms for sech, Gaussian and persistence; otherwise a grid convolution.
pub fn rho_tilde(rho: &StepDensity) -> Result<StepDensity> {
    match rho.kind() {
        DensityKind::Sech => StepDensity::new(DensityKind::SechAutocorrelation),
        DensityKind::Gaussian { t } => StepDensity::gaussian(2.0 * t),
        DensityKind::Persistence => Ok(StepDensity::sech()),
        _ => {
            let (lo, hi) = rho.tail_bounds(1e-14);
            let h = (rho.second_moment().sqrt() / 400.0).min(0.01);
            let n = ((hi - lo) / h).ceil() as usize + 1;
            let f = UniformGridFn::sample(lo, h, n, |x| rho.pdf(x))?;
            let mut rev = f.values.clone();
            rev.reverse();
            let g = UniformGridFn::new(-f.end(), h, rev)?;
            let c = grid_convolve(&f, &g)?;
            // symmetrise exactly; the grid is symmetric about 0 by construction
            let len = c.len();
            let vals: Vec<f64> = (0..len).map(|i| 0.5 * (c.values[i] + c.values[len - 1 - i]).max(0.0)).collect();
            let grid = UniformGridFn::new(c.origin, h, vals)?;
            StepDensity::tabulated(TabulatedDensity::new(grid)?)
        }
    }
}
