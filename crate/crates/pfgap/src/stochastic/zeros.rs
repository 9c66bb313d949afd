//! Real zeros of the truncated Gaussian power series Σₖ aₖxᵏ, aₖ i.i.d. N(0,1).
//!
//! Realizations are evaluated in batches as one matrix product (powers of the
//! grid nodes times a block of coefficient vectors). The grid is uniform in
//! u = artanh x, where the zeros have constant intensity 1/π, so a fixed step
//! resolves them equally well everywhere.

use super::{path_rng, run_paths, Estimate};
use crate::error::{domain, Result};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Grid step in u = artanh x.
const DU: f64 = 0.005;
const BATCH: usize = 256;
/// The neglected tail |x|^N at the interval endpoints must stay below this.
const TRUNCATION_TOL: f64 = 1e-12;

/// Zero statistics of one interval over a set of realizations.
#[derive(Clone, Debug, Serialize)]
pub struct GpsSample {
    pub interval: (f64, f64),
    pub trunc_n: usize,
    pub n_real: usize,
    /// P[no zero in the interval].
    pub gap: Estimate,
    /// Mean number of zeros in the interval.
    pub count: Estimate,
}

/// Zeros of Σ cₖxᵏ in (a, b), located by sign changes on the artanh grid and
/// refined by bisection.
pub fn gps_zeros_in(coeffs: &[f64], interval: (f64, f64)) -> Result<Vec<f64>> {
    let (a, b) = check_interval(interval)?;
    let grid = grid(&[a, b]);
    let horner = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let mut zeros = Vec::new();
    let mut prev = (grid[0], horner(grid[0]));
    for &x in &grid[1..] {
        let fx = horner(x);
        if (prev.1 < 0.0) != (fx < 0.0) {
            let (mut lo, mut hi, mut flo) = (prev.0, x, prev.1);
            while hi - lo > 1e-14 * hi.abs().max(1.0) {
                let mid = 0.5 * (lo + hi);
                let fm = horner(mid);
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        prev = (x, fx);
    }
    Ok(zeros)
}

/// Gap probability of (a, b) for the series truncated after degree `trunc_n`.
pub fn gps_zeros(trunc_n: usize, interval: (f64, f64), n_real: usize, seed: u64) -> Result<GpsSample> {
    Ok(gps_gap_probabilities(trunc_n, &[interval], n_real, seed)?.remove(0))
}

/// Mean number of zeros in (a, b).
pub fn gps_zero_count(trunc_n: usize, interval: (f64, f64), n_real: usize, seed: u64) -> Result<Estimate> {
    Ok(gps_zeros(trunc_n, interval, n_real, seed)?.count)
}

/// Gap and count statistics for several intervals, all from the same realizations.
pub fn gps_gap_probabilities(
    trunc_n: usize,
    intervals: &[(f64, f64)],
    n_real: usize,
    seed: u64,
) -> Result<Vec<GpsSample>> {
    if intervals.is_empty() || n_real < 2 {
        return domain("need at least one interval and two realizations");
    }
    let mut breaks = Vec::new();
    for &iv in intervals {
        let (a, b) = check_interval(iv)?;
        let worst = a.abs().max(b.abs());
        if worst.powi(trunc_n as i32) >= TRUNCATION_TOL {
            let need = (TRUNCATION_TOL.ln() / worst.ln()).ceil();
            return domain(format!(
                "interval ({a}, {b}) reaches too close to ±1 for truncation N = {trunc_n} (needs N ≥ {need})"
            ));
        }
        breaks.extend([a, b]);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let nodes = grid(&breaks);
    let powers = DMatrix::from_fn(nodes.len(), trunc_n + 1, |i, k| nodes[i].powi(k as i32));
    // cells (i, i+1) lying inside each interval
    let ranges: Vec<(usize, usize)> = intervals
        .iter()
        .map(|&(a, b)| {
            let lo = nodes.iter().position(|&x| x >= a).unwrap_or(0);
            let hi = nodes.iter().rposition(|&x| x <= b).unwrap_or(0);
            (lo, hi)
        })
        .collect();

    let batches = n_real.div_ceil(BATCH);
    let counts: Vec<Vec<Vec<u32>>> = run_paths(seed, batches, |_, batch| {
        let first = batch * BATCH;
        let size = BATCH.min(n_real - first);
        let mut coeffs = DMatrix::zeros(trunc_n + 1, size);
        for j in 0..size {
            let mut rng = path_rng(seed, (first + j) as u64);
            for k in 0..=trunc_n {
                coeffs[(k, j)] = StandardNormal.sample(&mut rng);
            }
        }
        let values = &powers * &coeffs;
        (0..size)
            .map(|j| {
                let col = values.column(j);
                ranges
                    .iter()
                    .map(|&(lo, hi)| (lo..hi).filter(|&i| (col[i] < 0.0) != (col[i + 1] < 0.0)).count() as u32)
                    .collect()
            })
            .collect()
    });
    let per_real: Vec<&Vec<u32>> = counts.iter().flatten().collect();

    Ok(intervals
        .iter()
        .enumerate()
        .map(|(m, &interval)| {
            let c: Vec<f64> = per_real.iter().map(|r| r[m] as f64).collect();
            let gaps = c.iter().filter(|&&v| v == 0.0).count();
            GpsSample {
                interval,
                trunc_n,
                n_real,
                gap: Estimate::proportion(gaps, n_real),
                count: Estimate::from_samples(&c),
            }
        })
        .collect())
}

fn check_interval((a, b): (f64, f64)) -> Result<(f64, f64)> {
    if !(a > -1.0 && b < 1.0 && a < b) {
        return domain(format!("interval ({a}, {b}) must satisfy −1 < a < b < 1"));
    }
    Ok((a, b))
}

/// Nodes uniform in artanh x between consecutive breakpoints (which are included).
fn grid(breaks: &[f64]) -> Vec<f64> {
    let mut nodes = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (u0, u1) = (w[0].atanh(), w[1].atanh());
        let cells = ((u1 - u0) / DU).ceil().max(1.0) as usize;
        nodes.extend((1..cells).map(|i| (u0 + (u1 - u0) * i as f64 / cells as f64).tanh()));
        nodes.push(w[1]);
    }
    nodes
}
