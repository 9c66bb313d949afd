//! Monte Carlo checks of the random-walk identities, quadrature oracles for
//! the pinned (delta-function) functionals, and particle simulations.
//!
//! Every path or realization draws from its own ChaCha8 stream, keyed by the
//! seed and the path index, so results do not depend on how work is split
//! across threads.

mod oracle;
mod particles;
mod walks;
mod zeros;

pub use oracle::{small_n_oracle, SmallNRecord};
pub use particles::{
    estimate_exit_intensity, estimate_gap, estimate_intensity, estimate_thinned_gap, first_exit_times,
    no_exit_probability, simulate_cabm, simulate_cabm_halved, simulate_exit, thin, CabmConfig, ExitConfig, ExitRecord,
    InitialCondition, ParticleState, Side, MAXIMAL_DENSITY,
};
pub use walks::{
    check_gambler, check_gambler_scaling, check_sparre_andersen, check_sparre_andersen_two_step, check_spitzer,
    check_tilted_limit, tilted_limit_reference, HitStats, Observable, TwoStepWalkConfig, WalkConfig,
};
pub use zeros::{gps_gap_probabilities, gps_zero_count, gps_zeros, gps_zeros_in, GpsSample};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean and standard error from per-path values.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self { value: f64::NAN, se: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self { value: mean, se: (var / n).sqrt() }
    }

    /// Binomial proportion `hits / n`.
    pub fn proportion(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self { value: p, se: (p * (1.0 - p) / n as f64).sqrt() }
    }

    /// (value − reference)/se; infinite when a zero-variance estimate misses.
    pub fn z(&self, reference: f64) -> f64 {
        let d = self.value - reference;
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

/// The stream for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluates `f(rng, i)` for i in 0..n on the available cores; results come
/// back in index order.
pub(crate) fn run_paths<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let workers = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1).min(n.max(1));
    if workers <= 1 {
        return (0..n).map(|i| f(&mut path_rng(seed, i as u64), i)).collect();
    }
    let chunk = n.div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                s.spawn(move || {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(n);
                    (lo..hi).map(|i| f(&mut path_rng(seed, i as u64), i)).collect::<Vec<T>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
