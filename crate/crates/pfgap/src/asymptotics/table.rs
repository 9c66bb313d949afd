use crate::error::{domain, numerical, Result};
use crate::kernels::StepDensity;
use crate::numerics_base::{gregory, Convolver, UniformGridFn};

/// Mass lost to window clipping beyond which a table is rejected.
const MAX_MASS_LOSS: f64 = 1e-4;

/// Grid step obeying ‖ρ‖∞·h < 0.01 (the trapezoid rule on ℝ is spectrally
/// accurate for the smooth densities here, so this is ample).
pub fn default_step(rho: &StepDensity) -> f64 {
    (0.0099 / rho.sup_norm()).min(0.05)
}

/// Half-width covering eight standard deviations of ρ*ⁿ for n ≤ `n_max`, plus
/// the support of ρ itself.
pub fn default_window(rho: &StepDensity, n_max: usize) -> f64 {
    let sd = centred_variance(rho).sqrt();
    8.0 * sd * (n_max as f64).sqrt() + kernel_radius(rho) + 5.0 * sd
}

fn centred_variance(rho: &StepDensity) -> f64 {
    let m = rho.mean();
    rho.second_moment() - m * m
}

fn kernel_radius(rho: &StepDensity) -> f64 {
    let m = rho.mean();
    let (lo, hi) = rho.tail_bounds(1e-17);
    (m - lo).max(hi - m)
}

/// Streams the convolution powers ρ*¹, ρ*², … of the centred density
/// ρ_c(y) = ρ(y + mean) on the window y ∈ [−W, W], with 0 on a node.
pub(crate) struct ConvolutionPowers {
    conv: Convolver<f64>,
    row: Vec<f64>,
    scratch: Vec<f64>,
    n: usize,
    pub step: f64,
    pub half_len: usize,
    pub centre: f64,
    pub mass_loss: f64,
}

impl ConvolutionPowers {
    pub fn new(rho: &StepDensity, h: f64, w: f64) -> Result<Self> {
        if !(h > 0.0) || !(w > h) {
            return domain(format!("invalid table step {h} or window {w}"));
        }
        if rho.sup_norm() * h >= 0.01 {
            return domain(format!("table step {h} too coarse: need ‖ρ‖∞·h < 0.01"));
        }
        let centre = rho.mean();
        let half_len = (w / h).ceil() as usize;
        let r = ((kernel_radius(rho) / h).ceil() as usize).min(half_len);
        let kernel = UniformGridFn::sample(-(r as f64) * h, h, 2 * r + 1, |y| rho.pdf(y + centre))?;
        let len = 2 * half_len + 1;
        let conv = Convolver::new(&kernel, len)?;
        Ok(Self { conv, row: Vec::new(), scratch: vec![0.0; len], n: 0, step: h, half_len, centre, mass_loss: 0.0 })
    }

    fn sample_first(&mut self, rho: &StepDensity) {
        let (h, m, c) = (self.step, self.half_len as f64, self.centre);
        self.row = (0..2 * self.half_len + 1).map(|i| rho.pdf((i as f64 - m) * h + c)).collect();
    }

    /// The next power; the first call returns ρ_c itself.
    pub fn next_row(&mut self, rho: &StepDensity) -> Result<&[f64]> {
        if self.n == 0 {
            self.sample_first(rho);
        } else {
            self.conv.apply(&self.row, &mut self.scratch);
            std::mem::swap(&mut self.row, &mut self.scratch);
        }
        self.n += 1;
        let mass: f64 = self.row.iter().sum::<f64>() * self.step;
        self.mass_loss = self.mass_loss.max((1.0 - mass).abs());
        if self.mass_loss > MAX_MASS_LOSS {
            return numerical(format!(
                "convolution window too small: mass loss {:.2e} at n = {}",
                self.mass_loss, self.n
            ));
        }
        Ok(&self.row)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.half_len as f64) * self.step
    }
}

/// The convolution powers ρ*ⁿ, n = 1…n_max, sampled on a symmetric window.
///
/// Rows hold the powers of the centred density ρ_c(y) = ρ(y + μ); for a
/// symmetric ρ (μ = 0) they are the powers of ρ itself and index `half_len`
/// is the origin.
#[derive(Clone, Debug)]
pub struct ConvolutionTable {
    step: f64,
    half_len: usize,
    centre: f64,
    rows: Vec<Vec<f64>>,
    mass_loss: f64,
}

/// Tabulates ρ*ⁿ for n ≤ `n_max` with grid step `h` on [−W, W].
pub fn build_table(rho: &StepDensity, n_max: usize, h: f64, w: f64) -> Result<ConvolutionTable> {
    if n_max == 0 {
        return domain("table needs n_max ≥ 1");
    }
    let mut stream = ConvolutionPowers::new(rho, h, w)?;
    let mut rows = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        rows.push(stream.next_row(rho)?.to_vec());
    }
    Ok(ConvolutionTable {
        step: h,
        half_len: stream.half_len,
        centre: stream.centre,
        rows,
        mass_loss: stream.mass_loss,
    })
}

impl ConvolutionTable {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    pub fn window(&self) -> f64 {
        self.half_len as f64 * self.step
    }

    /// Mean of ρ; row n is centred at n times this.
    pub fn centre(&self) -> f64 {
        self.centre
    }

    /// Largest mass defect over all rows.
    pub fn mass_loss(&self) -> f64 {
        self.mass_loss
    }

    /// Index of the node at y = 0.
    pub fn origin_index(&self) -> usize {
        self.half_len
    }

    /// Abscissa (centred coordinate) of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.half_len as f64) * self.step
    }

    /// Samples of ρ_c*ⁿ, n ≥ 1.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n - 1]
    }

    /// ∫ ρ*ⁿ.
    pub fn mass(&self, n: usize) -> f64 {
        gregory(self.row(n), self.step)
    }

    /// ρ*ⁿ(x), by four-point Lagrange interpolation between nodes.
    pub fn value(&self, n: usize, x: f64) -> f64 {
        let y = x - n as f64 * self.centre;
        let u = y / self.step + self.half_len as f64;
        let row = self.row(n);
        if u < 1.0 || u > (row.len() - 3) as f64 {
            return 0.0;
        }
        let i = u.floor() as usize;
        let f = u - i as f64;
        if f == 0.0 {
            return row[i];
        }
        let (a, b, c, d) = (row[i - 1], row[i], row[i + 1], row[i + 2]);
        let (fm, f1, f2) = (f + 1.0, f - 1.0, f - 2.0);
        -a * f * f1 * f2 / 6.0 + b * fm * f1 * f2 / 2.0 - c * fm * f * f2 / 2.0 + d * fm * f * f1 / 6.0
    }

    /// ρ*ⁿ(0).
    pub fn at_zero(&self, n: usize) -> f64 {
        if self.centre == 0.0 {
            self.row(n)[self.half_len]
        } else {
            self.value(n, 0.0)
        }
    }

    fn require_centred(&self) -> Result<()> {
        if self.centre != 0.0 {
            return domain("half-line moments need a table of a centred density");
        }
        Ok(())
    }

    /// ∫₀^∞ x ρ*ᵏ(x) ρ*ᵐ(x) dx.
    pub fn pair_moment(&self, k: usize, m: usize) -> Result<f64> {
        self.require_centred()?;
        let (a, b) = (self.row(k), self.row(m));
        let m0 = self.half_len;
        let vals: Vec<f64> = (m0..a.len()).map(|i| self.x(i) * a[i] * b[i]).collect();
        Ok(gregory(&vals, self.step))
    }

    /// Kac_ρ(n) = (n/2) Σ_{k=1}^{n−1} ∫₀^∞ x ρ*ᵏ ρ*⁽ⁿ⁻ᵏ⁾ / (k(n−k)) dx; zero for n ≤ 1.
    pub fn kac(&self, n: usize) -> Result<f64> {
        if n > self.n_max() {
            return domain(format!("Kac term {n} beyond the table's n_max {}", self.n_max()));
        }
        let mut s = 0.0;
        for k in 1..n {
            let w = if 2 * k == n { 1.0 } else { 2.0 };
            if 2 * k <= n {
                s += w * self.pair_moment(k, n - k)? / (k * (n - k)) as f64;
            }
        }
        Ok(0.5 * n as f64 * s)
    }

    /// ∫_ℝ x (ρ*ⁿ(x))² dx, using ρ*ⁿ(x) = ρ_c*ⁿ(x − nμ).
    pub fn x_square_moment(&self, n: usize) -> f64 {
        let row = self.row(n);
        let sq: Vec<f64> = row.iter().map(|v| v * v).collect();
        let first: Vec<f64> = sq.iter().enumerate().map(|(i, v)| self.x(i) * v).collect();
        gregory(&first, self.step) + n as f64 * self.centre * gregory(&sq, self.step)
    }
}

/// Weights w with Σ wᵢ fᵢ equal to [`gregory`] applied to f.
pub(crate) fn gregory_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n < 2 {
        return vec![0.0; n];
    }
    let ends: Vec<usize> = if n < 12 { vec![0, n - 1] } else { (0..6).chain(n - 6..n).collect() };
    let mut e = vec![0.0; n];
    for &i in &ends {
        e[i] = 1.0;
        w[i] = gregory(&e, h);
        e[i] = 0.0;
    }
    w
}
