use super::Real;
use crate::error::{domain, Result};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use std::sync::Arc;

/// Samples `values[i] = f(origin + i·step)`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformGridFn<T> {
    pub origin: T,
    pub step: T,
    pub values: Vec<T>,
}

impl<T: Real> UniformGridFn<T> {
    pub fn new(origin: T, step: T, values: Vec<T>) -> Result<Self> {
        if !(step > T::zero()) {
            return domain("grid step must be positive");
        }
        if values.is_empty() {
            return domain("grid function needs at least one sample");
        }
        Ok(Self { origin, step, values })
    }

    /// Samples `f` at `n` points starting at `origin`.
    pub fn sample(origin: T, step: T, n: usize, mut f: impl FnMut(T) -> T) -> Result<Self> {
        let values = (0..n).map(|i| f(origin + step * T::lit(i as f64))).collect();
        Self::new(origin, step, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> T {
        self.origin + self.step * T::lit(i as f64)
    }

    pub fn end(&self) -> T {
        self.x(self.values.len() - 1)
    }

    /// Linear interpolation, zero outside the sampled range.
    pub fn eval(&self, x: T) -> T {
        let u = (x - self.origin) / self.step;
        if u < T::zero() || u > T::lit((self.values.len() - 1) as f64) {
            return T::zero();
        }
        let i = u.floor().to_usize().unwrap_or(0).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return self.values[i];
        }
        let f = u - T::lit(i as f64);
        self.values[i] * (T::one() - f) + self.values[i + 1] * f
    }

    /// Trapezoid integral over the sampled range.
    pub fn integral(&self) -> T {
        let n = self.values.len();
        let s = self.values.iter().fold(T::zero(), |a, &v| a + v);
        (s - T::lit(0.5) * (self.values[0] + self.values[n - 1])) * self.step
    }

    /// Index of the sample nearest to `x`, if inside the range.
    pub fn index_of(&self, x: T) -> Option<usize> {
        let u = ((x - self.origin) / self.step).round();
        if u < T::zero() {
            return None;
        }
        let i = u.to_usize()?;
        (i < self.values.len()).then_some(i)
    }
}

/// Discrete convolution scaled by the step; the support is the sum of supports.
pub fn grid_convolve<T: Real + FftNum>(
    f: &UniformGridFn<T>,
    g: &UniformGridFn<T>,
) -> Result<UniformGridFn<T>> {
    let tol = T::lit(1e-12) * f.step.max(g.step);
    if (f.step - g.step).abs() > tol {
        return domain(format!("grid steps differ: {} vs {}", f.step, g.step));
    }
    let n = f.len() + g.len() - 1;
    let mut planner = FftPlanner::new();
    let size = n.next_power_of_two();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a = padded(&f.values, size);
    let mut b = padded(&g.values, size);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = *x * *y;
    }
    inv.process(&mut a);
    let scale = f.step / T::lit(size as f64);
    let values = a[..n].iter().map(|c| c.re * scale).collect();
    UniformGridFn::new(f.origin + g.origin, f.step, values)
}

fn padded<T: Real + FftNum>(v: &[T], size: usize) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); size];
    for (o, &x) in out.iter_mut().zip(v) {
        o.re = x;
    }
    out
}

/// Repeated convolution against one fixed function on a fixed output window.
///
/// Used to stream n-fold convolution powers: each call maps samples on the
/// window to samples of their convolution with the fixed function, clipped back
/// to the same window.
pub struct Convolver<T: FftNum> {
    kernel_hat: Vec<Complex<T>>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    size: usize,
    window_len: usize,
    /// Output index shift: out[i] = full[i + shift].
    shift: usize,
    step: T,
    scratch: Vec<Complex<T>>,
}

impl<T: Real + FftNum> Convolver<T> {
    /// `kernel` must be sampled on a grid symmetric about 0 with odd length and
    /// the same step as the window grid.
    pub fn new(kernel: &UniformGridFn<T>, window_len: usize) -> Result<Self> {
        let m = kernel.len();
        if m % 2 == 0 {
            return domain("convolver kernel needs an odd number of samples centred at 0");
        }
        let centre = T::lit((m / 2) as f64) * kernel.step;
        if (kernel.origin + centre).abs() > T::lit(1e-9) * kernel.step {
            return domain("convolver kernel must be centred at 0");
        }
        let size = (window_len + m - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut kernel_hat = padded(&kernel.values, size);
        fwd.process(&mut kernel_hat);
        Ok(Self {
            kernel_hat,
            fwd,
            inv,
            size,
            window_len,
            shift: m / 2,
            step: kernel.step,
            scratch: vec![Complex::new(T::zero(), T::zero()); size],
        })
    }

    /// Convolves `values` (window samples) into `out` (same window).
    pub fn apply(&mut self, values: &[T], out: &mut [T]) {
        debug_assert_eq!(values.len(), self.window_len);
        for (s, &v) in self.scratch.iter_mut().zip(values) {
            *s = Complex::new(v, T::zero());
        }
        for s in self.scratch[values.len()..].iter_mut() {
            *s = Complex::new(T::zero(), T::zero());
        }
        self.fwd.process(&mut self.scratch);
        for (s, k) in self.scratch.iter_mut().zip(&self.kernel_hat) {
            *s = *s * *k;
        }
        self.inv.process(&mut self.scratch);
        let scale = self.step / T::lit(self.size as f64);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.scratch[i + self.shift].re * scale;
        }
    }
}
