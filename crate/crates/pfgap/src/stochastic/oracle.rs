//! Both sides of the cyclic-symmetry and Kac identities for n ≤ 4 steps.
//!
//! Left sides are integrals over the walk's positions with the endpoint pinned at
//! zero. They are evaluated as a chain of Gauss–Legendre Nyström steps (the
//! tensor-product rule, summed one coordinate at a time), using nothing but the
//! density ρ. Maxima enter through E[M δ₀] = ∫ P(M > m; δ₀) dm, where the event
//! {M ≤ m} restricts the chain's domains. Right sides come from the convolution
//! tables of ρ and ρ̃.

use crate::asymptotics::{build_table, default_step, default_window, ConvolutionTable};
use crate::error::{domain, Result};
use crate::kernels::{rho_tilde, StepDensity};
use crate::numerics_base::composite_gauss_legendre;
use serde::Serialize;

const ORDER: usize = 16;
const M_ORDER: usize = 8;

/// Each field is (left side, right side) of one identity at this n.
#[derive(Clone, Debug, Serialize)]
pub struct SmallNRecord {
    pub density: String,
    pub n: usize,
    /// E₀[δ₀(Sₙ); τ₀₊ = n] and ρ*ⁿ(0)/n (symmetric ρ only).
    pub cs1: Option<(f64, f64)>,
    /// E₀[Mₙ δ₀(Sₙ)] and Kac_ρ(n) (symmetric ρ only).
    pub kac: Option<(f64, f64)>,
    /// E₀[Mₙ δ₀(Sₙ); τ₀₋ = n] and (2/n) Kac_ρ(n) (symmetric ρ only).
    pub cs3: Option<(f64, f64)>,
    /// E₀[M̃ₙ δ₀(Sₙ)] for the walk alternating X ~ ρ(−x), Y ~ ρ(x), and
    /// −(1/n)∫x(ρ*ⁿ)² + Kac_ρ̃(n).
    pub kac_two_step: (f64, f64),
}

impl SmallNRecord {
    /// Largest |left − right| over the identities present.
    pub fn max_discrepancy(&self) -> f64 {
        [self.cs1, self.kac, self.cs3, Some(self.kac_two_step)]
            .iter()
            .flatten()
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max)
    }
}

struct Nodes {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Nodes {
    fn on(lo: f64, hi: f64, width: f64, order: usize) -> Result<Self> {
        if !(hi > lo) {
            return Ok(Self { x: Vec::new(), w: Vec::new() });
        }
        let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
        let g = composite_gauss_legendre(lo, hi, panels, order)?;
        Ok(Self { x: g.nodes, w: g.weights })
    }
}

/// Density at 0 of the last position, with intermediate positions k = 1..N−1
/// restricted to `domains[k−1]` and the k-th increment drawn from `steps[k−1]`.
fn pinned_chain(steps: &[&dyn Fn(f64) -> f64], domains: &[&Nodes]) -> f64 {
    debug_assert_eq!(steps.len(), domains.len() + 1);
    if domains.is_empty() {
        return steps[0](0.0);
    }
    let mut f: Vec<f64> = domains[0].x.iter().map(|&x| steps[0](x)).collect();
    for k in 1..domains.len() {
        let (from, to) = (domains[k - 1], domains[k]);
        let weighted: Vec<f64> = f.iter().zip(&from.w).map(|(a, b)| a * b).collect();
        f = to
            .x
            .iter()
            .map(|&y| from.x.iter().zip(&weighted).map(|(&x, &v)| v * steps[k](y - x)).sum())
            .collect();
    }
    let last = domains[domains.len() - 1];
    let q = steps[steps.len() - 1];
    last.x.iter().zip(last.w.iter().zip(&f)).map(|(&x, (&w, &v))| w * v * q(-x)).sum()
}

struct Setup {
    reach: f64,
    width: f64,
}

impl Setup {
    fn new(rho: &StepDensity, n: usize) -> Self {
        let mean = rho.mean();
        let sd = (rho.second_moment() - mean * mean).sqrt();
        // pinned chains see roughly the square of the one-step tail
        let (lo, hi) = rho.tail_bounds(1e-10);
        let reach = lo.abs().max(hi.abs()) + 2.0 * sd * (n as f64).sqrt();
        Self { reach, width: sd }
    }

    fn nodes(&self, lo: f64, hi: f64) -> Result<Nodes> {
        Nodes::on(lo, hi, self.width, ORDER)
    }

    /// ∫_lo^hi g(m) dm by composite Gauss–Legendre.
    fn m_integral(&self, lo: f64, hi: f64, mut g: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let m = Nodes::on(lo, hi, self.width, M_ORDER)?;
        let mut s = 0.0;
        for (x, w) in m.x.iter().zip(&m.w) {
            s += w * g(*x)?;
        }
        Ok(s)
    }
}

fn table_for(rho: &StepDensity, n: usize) -> Result<ConvolutionTable> {
    build_table(rho, n, default_step(rho), default_window(rho, n))
}

/// Both sides of the two cyclic-symmetry identities, Kac's formula and the
/// two-step Kac formula.
pub fn small_n_oracle(rho: &StepDensity, n: usize) -> Result<SmallNRecord> {
    if !(1..=4).contains(&n) {
        return domain(format!("small-n oracle supports 1 ≤ n ≤ 4, got {n}"));
    }
    let setup = Setup::new(rho, n);
    let r = setup.reach;
    let fwd = |x: f64| rho.pdf(x);
    let back = |x: f64| rho.pdf(-x);
    let full = setup.nodes(-r, r)?;

    let (cs1, kac, cs3) = if rho.is_symmetric() {
        let table = table_for(rho, n)?;
        let kac_rhs = if n >= 2 { table.kac(n)? } else { 0.0 };
        let steps: Vec<&dyn Fn(f64) -> f64> = vec![&fwd; n];
        let chain = |d: &Nodes| pinned_chain(&steps, &vec![d; n - 1]);

        let cs1_lhs = chain(&setup.nodes(-r, 0.0)?);
        let cs1 = (cs1_lhs, table.at_zero(n) / n as f64);

        let total = chain(&full);
        let kac_lhs = setup.m_integral(0.0, r, |m| Ok(total - chain(&setup.nodes(-r, m)?)))?;

        let positive = chain(&setup.nodes(0.0, r)?);
        let cs3_lhs = setup.m_integral(0.0, r, |m| Ok(positive - chain(&setup.nodes(0.0, m)?)))?;
        let (kac_lhs, cs3_lhs) = if n == 1 { (0.0, 0.0) } else { (kac_lhs, cs3_lhs) };
        (Some(cs1), Some((kac_lhs, kac_rhs)), Some((cs3_lhs, 2.0 * kac_rhs / n as f64)))
    } else {
        (None, None, None)
    };

    // two-step walk: positions S̃₁, S₁, …, S̃ₙ, then Sₙ pinned at 0
    let steps: Vec<&dyn Fn(f64) -> f64> = (0..2 * n).map(|k| if k % 2 == 0 { &back as _ } else { &fwd as _ }).collect();
    let two_step = |capped: &Nodes| {
        let domains: Vec<&Nodes> = (0..2 * n - 1).map(|k| if k % 2 == 0 { capped } else { &full }).collect();
        pinned_chain(&steps, &domains)
    };
    let total = two_step(&full);
    let upper = setup.m_integral(0.0, r, |m| Ok(total - two_step(&setup.nodes(-r, m)?)))?;
    let lower = setup.m_integral(-r, 0.0, |m| Ok(two_step(&setup.nodes(-r, m)?)))?;
    let tilde = rho_tilde(rho)?;
    let tilde_kac = if n >= 2 { table_for(&tilde, n)?.kac(n)? } else { 0.0 };
    let rhs = -table_for(rho, n)?.x_square_moment(n) / n as f64 + tilde_kac;

    Ok(SmallNRecord { density: rho.name(), n, cs1, kac, cs3, kac_two_step: (upper - lower, rhs) })
}
