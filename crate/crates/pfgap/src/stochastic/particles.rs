//! Coalescing/annihilating Brownian motions, CABM(θ), in discrete time.
//!
//! Particles are standard Brownian motions. Within a step, an adjacent pair with
//! gaps g before and g′ after meets when g′ ≤ 0, or otherwise with the bridge
//! crossing probability exp(−g g′/h) of the gap (a Brownian motion of variance
//! 2h over the step). A meeting annihilates both with probability θ and
//! otherwise merges them at the midpoint. Pairs are resolved left to right with
//! a stack, so a merged particle is re-tested against its new left neighbour.
//! With an absorbing wall at 0 the leftmost particle leaves when its own bridge
//! (variance h) crosses 0, and the exit is recorded at the end of the step.
//!
//! Step sizes follow h = min(dt, η(s + g₀²)), g₀ = 1/λ: near s = 0 the spacing
//! is g₀, afterwards it grows like √s, so the bridge approximation stays fine
//! throughout while the step count only grows logarithmically in λ.
//!
//! Every particle carries its own ChaCha8 stream and draws two normals per
//! step; the halved run spends them one per half-step. Reaction uniforms are
//! hashed from (particle ids, step), not drawn from a stream, so the two runs
//! also agree on them. Together this couples a run to its half-step refinement
//! path by path.

use super::{run_paths, Estimate};
use crate::error::{domain, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

/// λ·√(2t) of the Poisson field standing in for the maximal entrance law.
pub const MAXIMAL_DENSITY: f64 = 50.0;
/// Step size relative to the squared particle spacing.
const ETA: f64 = 0.05;
/// Meeting probabilities below this are treated as zero.
const NEGLIGIBLE: f64 = 1e-16;
/// Width of the initial window beyond the wall, in units of √(2T).
const EXIT_WINDOW: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum InitialCondition {
    /// Poisson(λ) on the whole window.
    Poisson(f64),
    /// Poisson with intensity `MAXIMAL_DENSITY/√(2s)` for the run's time scale s.
    Maximal,
    /// Poisson(λ) on the part of the window on one side of 0.
    PoissonHalfline { lambda: f64, side: Side },
}

impl InitialCondition {
    fn intensity(&self, time_scale: f64) -> f64 {
        match *self {
            InitialCondition::Poisson(l) => l,
            InitialCondition::Maximal => MAXIMAL_DENSITY / (2.0 * time_scale).sqrt(),
            InitialCondition::PoissonHalfline { lambda, .. } => lambda,
        }
    }

    fn support(&self, (a, b): (f64, f64)) -> (f64, f64) {
        match self {
            InitialCondition::PoissonHalfline { side: Side::Left, .. } => (a, b.min(0.0)),
            InitialCondition::PoissonHalfline { side: Side::Right, .. } => (a.max(0.0), b),
            _ => (a, b),
        }
    }
}

/// Configuration of a whole-line run observed at time `t`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CabmConfig {
    pub theta: f64,
    pub init: InitialCondition,
    pub t: f64,
    pub window: (f64, f64),
    pub dt: f64,
    /// Run every step as two half-steps.
    pub halved: bool,
}

impl CabmConfig {
    pub fn new(theta: f64, init: InitialCondition, t: f64, window: (f64, f64), dt: f64) -> Self {
        Self { theta, init, t, window, dt, halved: false }
    }
}

/// State of a run at its final time.
#[derive(Clone, Debug, Serialize)]
pub struct ParticleState {
    pub time: f64,
    /// Strictly increasing positions.
    pub positions: Vec<f64>,
    pub theta: f64,
    /// Times at which particles were absorbed at 0 (half-line runs).
    pub frozen_exits: Vec<f64>,
    pub initial_count: usize,
    pub annihilations: usize,
    pub coalescences: usize,
}

/// Exit times at the wall during [0, horizon], sorted.
#[derive(Clone, Debug, Serialize)]
pub struct ExitRecord {
    pub times: Vec<f64>,
    pub horizon: f64,
}

/// Which part of a step `advance` is resolving.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Whole,
    FirstHalf,
    SecondHalf,
}

const TAG_MEET: u64 = 1;
const TAG_COIN: u64 = 2;
const TAG_EXIT: u64 = 3;
/// Stands in for the right-hand id when a particle meets the wall.
const WALL: u64 = u64::MAX;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A uniform on [0, 1) determined by its keys alone, so the coarse and the
/// halved run see the same value for the same event.
fn keyed_uniform(base: u64, left: u64, right: u64, step: u64, tag: u64) -> f64 {
    let h = mix(mix(mix(mix(base ^ left) ^ right) ^ step) ^ tag);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Reaction probability of a first half-step that did not fire, kept so the
/// second half reuses the same uniform conditionally: given u ≥ P₁,
/// (u − P₁)/(1 − P₁) is again uniform, and the halved run reacts exactly when
/// u < 1 − (1 − P₁)(1 − P₂).
#[derive(Clone, Copy)]
struct Carry {
    partner: u64,
    step: u64,
    prob: f64,
}

struct System {
    pos: Vec<f64>,
    ids: Vec<usize>,
    rngs: Vec<ChaCha8Rng>,
    theta: f64,
    absorbing: bool,
    width: f64,
    key: u64,
    step: u64,
    /// Indexed by the id of the right-hand particle of a pair (or of the
    /// particle facing the wall).
    carry: Vec<Option<Carry>>,
    exits: Vec<f64>,
    initial_count: usize,
    annihilations: usize,
    coalescences: usize,
}

struct Slot {
    old: f64,
    new: f64,
    id: usize,
}

impl System {
    fn new(theta: f64, lambda: f64, support: (f64, f64), absorbing: bool, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (a, b) = support;
        let mean = lambda * (b - a).max(0.0);
        let count = if mean > 0.0 {
            Poisson::new(mean).map_err(|e| crate::Error::Domain(e.to_string()))?.sample(rng) as usize
        } else {
            0
        };
        let mut pos: Vec<f64> = (0..count).map(|_| a + (b - a) * rng.random::<f64>()).collect();
        pos.sort_by(f64::total_cmp);
        pos.dedup();
        let base = rng.next_u64();
        let rngs = (0..pos.len())
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(base);
                r.set_stream(i as u64);
                r
            })
            .collect();
        Ok(Self {
            ids: (0..pos.len()).collect(),
            initial_count: pos.len(),
            carry: vec![None; pos.len()],
            pos,
            rngs,
            theta,
            absorbing,
            width: (b - a).max(0.0),
            key: rng.next_u64(),
            step: 0,
            exits: Vec::new(),
            annihilations: 0,
            coalescences: 0,
        })
    }

    /// Typical spacing: the initial window shared among the current particles.
    fn mean_gap(&self) -> Option<f64> {
        (!self.pos.is_empty()).then(|| self.width / self.pos.len() as f64)
    }

    /// Whether a bridge with crossing probability `prob` crosses, for the pair
    /// (left, right) in the current step.
    fn crosses(&mut self, left: u64, right: usize, prob: f64, phase: Phase) -> bool {
        if prob <= NEGLIGIBLE {
            return false;
        }
        let mut u = keyed_uniform(self.key, left, right as u64, self.step, TAG_MEET);
        if phase == Phase::SecondHalf {
            if let Some(c) = self.carry[right] {
                if c.partner == left && c.step == self.step {
                    u = (u - c.prob) / (1.0 - c.prob);
                }
            }
        }
        let hit = u < prob;
        if phase == Phase::FirstHalf && !hit {
            self.carry[right] = Some(Carry { partner: left, step: self.step, prob });
        }
        hit
    }

    /// Moves every particle by its increment and resolves meetings and exits.
    fn advance(&mut self, incr: &[f64], h: f64, end_time: f64, phase: Phase) {
        let mut stack: Vec<Slot> = Vec::with_capacity(self.pos.len());
        let ids = std::mem::take(&mut self.ids);
        let pos = std::mem::take(&mut self.pos);
        for (k, (&x, &id)) in pos.iter().zip(&ids).enumerate() {
            let mut cur = Slot { old: x, new: x + incr[k], id };
            loop {
                let Some(top) = stack.last() else {
                    stack.push(cur);
                    break;
                };
                let (left, g_new) = (top.id as u64, cur.new - top.new);
                let prob = (-(cur.old - top.old) * g_new / h).exp();
                let met = g_new <= 0.0 || self.crosses(left, cur.id, prob, phase);
                if !met {
                    stack.push(cur);
                    break;
                }
                let top = stack.pop().expect("non-empty stack");
                if keyed_uniform(self.key, left, cur.id as u64, self.step, TAG_COIN) < self.theta {
                    self.annihilations += 1;
                    break;
                }
                self.coalescences += 1;
                cur = Slot { old: 0.5 * (top.old + cur.old), new: 0.5 * (top.new + cur.new), id: top.id };
            }
        }
        let mut first = 0;
        if self.absorbing {
            while let Some(s) = stack.get(first) {
                let prob = (-2.0 * s.old * s.new / h).exp();
                let id = s.id;
                let gone = s.new <= 0.0 || self.crosses_wall(id, prob, phase);
                if !gone {
                    break;
                }
                self.exits.push(end_time);
                first += 1;
            }
        }
        self.pos = stack[first..].iter().map(|s| s.new).collect();
        self.ids = stack[first..].iter().map(|s| s.id).collect();
    }

    fn crosses_wall(&mut self, id: usize, prob: f64, phase: Phase) -> bool {
        // the wall event uses its own tag so it never shares a uniform with a pair
        if prob <= NEGLIGIBLE {
            return false;
        }
        let mut u = keyed_uniform(self.key, WALL, id as u64, self.step, TAG_EXIT);
        if phase == Phase::SecondHalf {
            if let Some(c) = self.carry[id] {
                if c.partner == WALL && c.step == self.step {
                    u = (u - c.prob) / (1.0 - c.prob);
                }
            }
        }
        let hit = u < prob;
        if phase == Phase::FirstHalf && !hit {
            self.carry[id] = Some(Carry { partner: WALL, step: self.step, prob });
        }
        hit
    }

    fn state(self, time: f64) -> ParticleState {
        ParticleState {
            time,
            positions: self.pos,
            theta: self.theta,
            frozen_exits: self.exits,
            initial_count: self.initial_count,
            annihilations: self.annihilations,
            coalescences: self.coalescences,
        }
    }
}

struct RunSpec {
    theta: f64,
    lambda: f64,
    support: (f64, f64),
    t_end: f64,
    dt: f64,
    halved: bool,
    absorbing: bool,
    stop_at_first_exit: bool,
}

fn check_common(theta: f64, t_end: f64, dt: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return domain("θ must lie in [0, 1]");
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return domain("final time must be positive and finite");
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return domain("time step must be positive and finite");
    }
    Ok(())
}

fn evolve(spec: &RunSpec, rng: &mut ChaCha8Rng) -> Result<ParticleState> {
    let mut sys = System::new(spec.theta, spec.lambda, spec.support, spec.absorbing, rng)?;
    let g0 = 1.0 / spec.lambda;
    let mut s = 0.0;
    let mut z1: Vec<f64> = Vec::new();
    let mut z2: Vec<f64> = Vec::new();
    while spec.t_end - s > 1e-12 * spec.t_end {
        if sys.pos.is_empty() || (spec.stop_at_first_exit && !sys.exits.is_empty()) {
            break;
        }
        let h = spec.dt.min(ETA * (s + g0 * g0)).min(spec.t_end - s);
        if let Some(g) = sys.mean_gap() {
            if (-g * g / h).exp() > 0.5 {
                return domain(format!("time step {h} is too large for the mean spacing {g}"));
            }
        }
        z1.clear();
        z2.clear();
        for &id in &sys.ids {
            let r = &mut sys.rngs[id];
            z1.push(StandardNormal.sample(r));
            z2.push(StandardNormal.sample(r));
        }
        let half = (0.5 * h).sqrt();
        if spec.halved {
            // survivors of the first half spend their own second normal
            let mut second = vec![0.0; sys.rngs.len()];
            for (&id, &z) in sys.ids.iter().zip(&z2) {
                second[id] = z;
            }
            let incr: Vec<f64> = z1.iter().map(|z| half * z).collect();
            sys.advance(&incr, 0.5 * h, s + 0.5 * h, Phase::FirstHalf);
            let incr: Vec<f64> = sys.ids.iter().map(|&id| half * second[id]).collect();
            sys.advance(&incr, 0.5 * h, s + h, Phase::SecondHalf);
        } else {
            let incr: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| half * (a + b)).collect();
            sys.advance(&incr, h, s + h, Phase::Whole);
        }
        sys.step += 1;
        s += h;
    }
    Ok(sys.state(s.min(spec.t_end)))
}

/// One realization of CABM(θ) at time `cfg.t` on `cfg.window`.
pub fn simulate_cabm(cfg: &CabmConfig, rng: &mut ChaCha8Rng) -> Result<ParticleState> {
    check_common(cfg.theta, cfg.t, cfg.dt)?;
    if !(cfg.window.0 < cfg.window.1) {
        return domain("window must satisfy A < B");
    }
    let lambda = cfg.init.intensity(cfg.t);
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain("initial intensity must be positive and finite");
    }
    let spec = RunSpec {
        theta: cfg.theta,
        lambda,
        support: cfg.init.support(cfg.window),
        t_end: cfg.t,
        dt: cfg.dt,
        halved: cfg.halved,
        absorbing: false,
        stop_at_first_exit: false,
    };
    evolve(&spec, rng)
}

/// The same realization as [`simulate_cabm`] (given the same `rng` state) with
/// every step split in two.
pub fn simulate_cabm_halved(cfg: &CabmConfig, rng: &mut ChaCha8Rng) -> Result<ParticleState> {
    simulate_cabm(&CabmConfig { halved: true, ..*cfg }, rng)
}

/// Configuration of a half-line run: particles start on (a, a + 6√(2T)) and are
/// absorbed at 0.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExitConfig {
    pub theta: f64,
    pub init: InitialCondition,
    pub a: f64,
    pub horizon: f64,
    pub dt: f64,
    pub halved: bool,
}

impl ExitConfig {
    pub fn new(theta: f64, init: InitialCondition, a: f64, horizon: f64, dt: f64) -> Self {
        Self { theta, init, a, horizon, dt, halved: false }
    }

    fn spec(&self, stop_at_first_exit: bool) -> Result<RunSpec> {
        check_common(self.theta, self.horizon, self.dt)?;
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return domain("the initial condition must start at a ≥ 0");
        }
        // the maximal law is resolved on the scale of the first exits
        let scale = if self.a > 0.0 { self.a * self.a } else { self.horizon };
        let lambda = self.init.intensity(scale);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain("initial intensity must be positive and finite");
        }
        let far = self.a + EXIT_WINDOW * (2.0 * self.horizon).sqrt();
        Ok(RunSpec {
            theta: self.theta,
            lambda,
            support: (self.a, far),
            t_end: self.horizon,
            dt: self.dt,
            halved: self.halved,
            absorbing: true,
            stop_at_first_exit,
        })
    }
}

/// One realization of the exit measure on {0} × [0, horizon].
pub fn simulate_exit(cfg: &ExitConfig, rng: &mut ChaCha8Rng) -> Result<ExitRecord> {
    let state = evolve(&cfg.spec(false)?, rng)?;
    Ok(ExitRecord { times: state.frozen_exits, horizon: cfg.horizon })
}

/// First exit time of each of `n_real` runs (None when nothing exits by the horizon).
pub fn first_exit_times(cfg: &ExitConfig, n_real: usize, seed: u64) -> Result<Vec<Option<f64>>> {
    let spec = cfg.spec(true)?;
    run_paths(seed, n_real, |rng, _| evolve(&spec, rng).map(|s| s.frozen_exits.first().copied()))
        .into_iter()
        .collect()
}

/// P[no exit by T] for each T in `horizons` (all ≤ the configured horizon), from
/// the same runs.
pub fn no_exit_probability(cfg: &ExitConfig, horizons: &[f64], n_real: usize, seed: u64) -> Result<Vec<Estimate>> {
    if horizons.iter().any(|&t| !(t > 0.0 && t <= cfg.horizon)) {
        return domain("query times must lie in (0, horizon]");
    }
    let firsts = first_exit_times(cfg, n_real, seed)?;
    Ok(horizons
        .iter()
        .map(|&t| {
            let survived = firsts.iter().filter(|f| f.is_none_or(|e| e > t)).count();
            Estimate::proportion(survived, n_real)
        })
        .collect())
}

/// Mean number of exits per unit time in each bin (t₀, t₁] of the time axis.
pub fn estimate_exit_intensity(
    cfg: &ExitConfig,
    bins: &[(f64, f64)],
    n_real: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if bins.iter().any(|&(lo, hi)| !(0.0 <= lo && lo < hi && hi <= cfg.horizon)) {
        return domain("bins must be increasing intervals inside [0, horizon]");
    }
    let spec = cfg.spec(false)?;
    let records: Vec<Vec<f64>> =
        run_paths(seed, n_real, |rng, _| evolve(&spec, rng).map(|s| s.frozen_exits)).into_iter().collect::<Result<_>>()?;
    Ok(bins
        .iter()
        .map(|&(lo, hi)| {
            let per_run: Vec<f64> = records
                .iter()
                .map(|r| r.iter().filter(|&&t| t > lo && t <= hi).count() as f64 / (hi - lo))
                .collect();
            Estimate::from_samples(&per_run)
        })
        .collect())
}

/// Independent retention of each point with probability p.
pub fn thin<R: Rng + ?Sized>(points: &[f64], p: f64, rng: &mut R) -> Vec<f64> {
    points.iter().copied().filter(|_| rng.random::<f64>() < p).collect()
}

fn check_measure(cfg: &CabmConfig, (lo, hi): (f64, f64)) -> Result<()> {
    if !(cfg.window.0 <= lo && lo < hi && hi <= cfg.window.1) {
        return domain("measured interval must lie inside the window");
    }
    Ok(())
}

/// Mean number of particles per unit length in (lo, hi) at time t.
pub fn estimate_intensity(cfg: &CabmConfig, interval: (f64, f64), n_real: usize, seed: u64) -> Result<Estimate> {
    check_measure(cfg, interval)?;
    let (lo, hi) = interval;
    let counts: Vec<f64> = run_paths(seed, n_real, |rng, _| {
        simulate_cabm(cfg, rng).map(|s| s.positions.iter().filter(|&&x| x > lo && x < hi).count() as f64 / (hi - lo))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&counts))
}

/// P[no particle in (lo, hi) at time t].
pub fn estimate_gap(cfg: &CabmConfig, interval: (f64, f64), n_real: usize, seed: u64) -> Result<Estimate> {
    estimate_thinned_gap(cfg, 1.0, interval, n_real, seed)
}

/// P[no particle in (lo, hi) at time t after p-thinning].
pub fn estimate_thinned_gap(
    cfg: &CabmConfig,
    p: f64,
    interval: (f64, f64),
    n_real: usize,
    seed: u64,
) -> Result<Estimate> {
    check_measure(cfg, interval)?;
    if !(0.0..=1.0).contains(&p) {
        return domain("thinning probability must lie in [0, 1]");
    }
    let (lo, hi) = interval;
    let gaps: Vec<bool> = run_paths(seed, n_real, |rng, _| {
        let s = simulate_cabm(cfg, rng)?;
        let inside: Vec<f64> = s.positions.iter().copied().filter(|&x| x > lo && x < hi).collect();
        Ok(thin(&inside, p, rng).is_empty())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(Estimate::proportion(gaps.iter().filter(|&&g| g).count(), n_real))
}
