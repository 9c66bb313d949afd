use super::Real;
use crate::error::{domain, Result};

/// Quadrature rule used to build a [`QuadratureGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    GaussLegendre,
    /// Midpoint rule on `n` equal cells.
    Uniform,
}

/// Nodes and positive weights on `[a, b]`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid<T> {
    pub a: T,
    pub b: T,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub rule: Rule,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }
}

pub fn make_grid<T: Real>(a: T, b: T, n: usize, rule: Rule) -> Result<QuadratureGrid<T>> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return domain(format!("grid interval [{a}, {b}] is empty or not finite"));
    }
    if n < 2 {
        return domain("a quadrature grid needs at least two nodes");
    }
    let (nodes, weights) = match rule {
        Rule::GaussLegendre => {
            let (x, w) = gauss_legendre(n);
            let (c, r) = ((b + a).as_f64() / 2.0, (b - a).as_f64() / 2.0);
            (
                x.iter().map(|&t| T::lit(c + r * t)).collect(),
                w.iter().map(|&wi| T::lit(r * wi)).collect(),
            )
        }
        Rule::Uniform => {
            let h = (b - a) / T::lit(n as f64);
            (
                (0..n).map(|i| a + h * T::lit(i as f64 + 0.5)).collect(),
                vec![h; n],
            )
        }
    };
    Ok(QuadratureGrid { a, b, nodes, weights, rule })
}

/// Gauss–Legendre rule on `panels` equal sub-intervals of `[a, b]`.
pub fn composite_gauss_legendre<T: Real>(
    a: T,
    b: T,
    panels: usize,
    order: usize,
) -> Result<QuadratureGrid<T>> {
    if panels == 0 {
        return domain("composite rule needs at least one panel");
    }
    let (af, bf) = (a.as_f64(), b.as_f64());
    let width = (bf - af) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = af + p as f64 * width;
        let g = make_grid(lo, lo + width, order, Rule::GaussLegendre)?;
        nodes.extend(g.nodes.iter().map(|&x| T::lit(x)));
        weights.extend(g.weights.iter().map(|&w| T::lit(w)));
    }
    Ok(QuadratureGrid { a, b, nodes, weights, rule: Rule::GaussLegendre })
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`, by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Trapezoid rule with fifth-order Gregory end corrections on a uniform sample.
pub fn gregory<T: Real>(values: &[T], h: T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let mut s = values.iter().fold(T::zero(), |a, &v| a + v);
    s = s - T::lit(0.5) * (values[0] + values[n - 1]);
    if n < 12 {
        return s * h;
    }
    // forward differences at the left end, backward at the right end
    let diffs = |it: &mut dyn Iterator<Item = T>| -> [T; 5] {
        let mut d: Vec<T> = it.take(6).collect();
        let mut out = [T::zero(); 5];
        for o in out.iter_mut() {
            for i in 0..d.len() - 1 {
                d[i] = d[i + 1] - d[i];
            }
            d.pop();
            *o = d[0];
        }
        out
    };
    let fwd = diffs(&mut values.iter().copied());
    let bwd = diffs(&mut values.iter().rev().copied());
    let c = [1.0 / 12.0, 1.0 / 24.0, 19.0 / 720.0, 3.0 / 160.0, 863.0 / 60480.0];
    let mut corr = T::zero();
    for k in 0..5 {
        let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
        corr = corr + T::lit(c[k] * sgn) * (fwd[k] + bwd[k]);
    }
    (s + corr) * h
}

/// Tolerances for the adaptive Gauss–Kronrod integrator.
#[derive(Clone, Copy, Debug)]
pub struct GkOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for GkOptions<T> {
    fn default() -> Self {
        Self { abs_tol: T::lit(1e-13), rel_tol: T::lit(1e-12), max_intervals: 4000 }
    }
}

impl<T: Real> GkOptions<T> {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol: T::lit(abs_tol), rel_tol: T::lit(rel_tol), ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Real>(f: &mut impl FnMut(T) -> T, a: T, b: T) -> (T, T) {
    let c = (a + b) * T::lit(0.5);
    let r = (b - a) * T::lit(0.5);
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = r * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * s;
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

/// Globally adaptive G7–K15 integration over `[a, b]`.
pub fn integrate<T: Real>(f: impl FnMut(T) -> T, a: T, b: T, opts: &GkOptions<T>) -> Integral<T> {
    integrate_intervals(f, &[a, b], opts)
}

/// As [`integrate`], starting from the partition given by `points` (ascending).
///
/// Interior points are useful for kinks and peaks the bisection might otherwise miss.
pub fn integrate_intervals<T: Real>(
    mut f: impl FnMut(T) -> T,
    points: &[T],
    opts: &GkOptions<T>,
) -> Integral<T> {
    let mut segs: Vec<(T, T, T, T)> = Vec::new();
    let mut evals = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            evals += 15;
            segs.push((w[0], w[1], v, e));
        }
    }
    let mut rounds = 0;
    loop {
        let (total, err) = segs
            .iter()
            .fold((T::zero(), T::zero()), |(s, e), seg| (s + seg.2, e + seg.3));
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        rounds += 1;
        // a non-finite estimate cannot be refined; report it rather than loop
        if err <= target || !err.is_finite() || rounds > 2 * opts.max_intervals || segs.is_empty() {
            return Integral { value: total, error: err, evaluations: evals };
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, s)| if s.3 > be { (i, s.3) } else { (bi, be) });
        let (a, b, _, _) = segs.swap_remove(worst);
        let m = (a + b) * T::lit(0.5);
        if !(m > a && m < b) {
            // interval below resolution; accept as is
            let (v, _) = gk15(&mut f, a, b);
            segs.push((a, b, v, T::zero()));
            continue;
        }
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        evals += 30;
        segs.push((a, m, v1, e1));
        segs.push((m, b, v2, e2));
    }
}

/// ∫ₐ^∞ f, by the map x = a + t/(1 − t) onto [0, 1).
pub fn integrate_to_infinity<T: Real>(
    mut f: impl FnMut(T) -> T,
    a: T,
    opts: &GkOptions<T>,
) -> Integral<T> {
    integrate(
        |t: T| {
            let s = T::one() - t;
            let v = f(a + t / s);
            if v == T::zero() { v } else { v / (s * s) }
        },
        T::zero(),
        T::one(),
        opts,
    )
}
