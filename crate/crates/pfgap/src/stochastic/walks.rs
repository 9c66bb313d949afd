//! Fluctuation identities for walks with continuous increments, checked by simulation.

use super::{run_paths, Estimate};
use crate::asymptotics::{beta_of, build_table, default_step, default_window, solve_phi};
use crate::error::{domain, Result};
use crate::kernels::{sample_tilted_sech, DensityKind, StepDensity};
use crate::numerics_base::gregory;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;

/// Increments of size ≥ this many standard deviations of a block are never
/// crossed by the block's partial sums (probability below 2e−15).
const JUMP_SIGMAS: f64 = 8.0;

/// Step cap used when Gaussian walks can jump over excursions, which makes
/// long horizons cheap.
const LONG_HORIZON: u64 = 1_000_000_000_000;

/// Weights β^n below this end a path early; the remainder is negligible.
const NEGLIGIBLE_WEIGHT: f64 = 1e-18;

#[derive(Clone, Debug)]
pub struct WalkConfig {
    pub rho: StepDensity,
    pub beta: f64,
    pub l: f64,
    pub n_paths: usize,
    /// Step cap per path; paths reaching it are censored.
    pub horizon: u64,
    pub seed: u64,
    /// φ for the tilted check; solved from β when absent.
    pub tilt: Option<f64>,
}

impl WalkConfig {
    pub fn new(rho: StepDensity) -> Self {
        Self { rho, beta: 1.0, l: 30.0, n_paths: 100_000, horizon: 100_000_000, seed: 0, tilt: None }
    }
}

/// Walk whose increments alternate X ~ ρ(−x) and Y ~ ρ(x); `S` is observed
/// after each pair.
#[derive(Clone, Debug)]
pub struct TwoStepWalkConfig {
    pub walk: WalkConfig,
    pub alternating: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Observable {
    SparreAndersen,
    Spitzer,
    Gambler,
    GamblerScaling,
    TiltedLimit,
}

/// Hitting-time statistics of a batch of walks.
#[derive(Clone, Debug, Serialize)]
pub struct HitStats {
    pub observable: Observable,
    pub reference: f64,
    pub n_paths: usize,
    pub censored: usize,
    /// E[β^{τ₀₋}].
    pub beta_tau_minus: Option<Estimate>,
    /// E[β^{τ₀₊}].
    pub beta_tau_plus: Option<Estimate>,
    /// E[S_{τ₀₊}].
    pub overshoot_plus: Option<Estimate>,
    /// L·P[τ_{L+} < τ₀₋].
    pub gambler: Option<Estimate>,
    /// e^{φL} E[β^{τ_{L+}}; τ_{L+} < τ₀₋].
    pub tilted: Option<Estimate>,
}

impl HitStats {
    fn new(observable: Observable, reference: f64, n_paths: usize, censored: usize) -> Self {
        Self {
            observable,
            reference,
            n_paths,
            censored,
            beta_tau_minus: None,
            beta_tau_plus: None,
            overshoot_plus: None,
            gambler: None,
            tilted: None,
        }
    }

    /// The estimate the check is about.
    pub fn primary(&self) -> Estimate {
        match self.observable {
            Observable::SparreAndersen => self.beta_tau_plus,
            Observable::Spitzer => self.overshoot_plus,
            Observable::Gambler | Observable::GamblerScaling => self.gambler,
            Observable::TiltedLimit => self.tilted,
        }
        .expect("primary estimate is always filled")
    }

    pub fn z(&self) -> f64 {
        self.primary().z(self.reference)
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_paths as f64
    }
}

/// Draws increments, jumping over long excursions of Gaussian walks: a block of m
/// Gaussian steps is itself Gaussian, and it is taken only when the walk sits
/// more than `JUMP_SIGMAS` block deviations away from the level it waits for.
struct Stepper<'a> {
    rho: &'a StepDensity,
    gaussian_sd: Option<f64>,
}

impl<'a> Stepper<'a> {
    fn new(rho: &'a StepDensity) -> Self {
        let gaussian_sd = match rho.kind() {
            DensityKind::Gaussian { t } => Some((2.0 * t).sqrt()),
            _ => None,
        };
        Self { rho, gaussian_sd }
    }

    /// Advances from `s`, which waits to cross `level`; returns the new position and step count.
    fn advance(&self, s: f64, level: f64, rng: &mut ChaCha8Rng) -> (f64, u64) {
        if let Some(sd) = self.gaussian_sd {
            let m = ((s - level).abs() / (JUMP_SIGMAS * sd)).powi(2).floor();
            if m >= 2.0 {
                let z: f64 = StandardNormal.sample(rng);
                return (s + sd * m.sqrt() * z, m as u64);
            }
        }
        (s + self.rho.sample(rng), 1)
    }
}

fn require_symmetric(rho: &StepDensity) -> Result<()> {
    if !rho.is_symmetric() {
        return domain(format!("{} is not symmetric", rho.name()));
    }
    Ok(())
}

fn check_counts(cfg: &WalkConfig) -> Result<()> {
    if cfg.n_paths == 0 || cfg.horizon == 0 {
        return domain("need at least one path and a positive horizon");
    }
    Ok(())
}

/// P[τ₀₊ > n] for a symmetric continuous walk is C(2n,n)/4ⁿ ≈ 1/√(πn) whatever ρ is.
fn survival_bound(horizon: u64) -> f64 {
    1.0 / (std::f64::consts::PI * horizon as f64).sqrt()
}

/// E₀[β^{τ₀₊}] and E₀[β^{τ₀₋}] against 1 − √(1−β).
pub fn check_sparre_andersen(cfg: &WalkConfig) -> Result<HitStats> {
    sparre_andersen(cfg, false)
}

/// Sparre Andersen for the pair-sum walk of alternating ρ(−x), ρ(x) increments
/// (whose steps are symmetric even when ρ is not).
pub fn check_sparre_andersen_two_step(cfg: &TwoStepWalkConfig) -> Result<HitStats> {
    sparre_andersen(&cfg.walk, cfg.alternating)
}

fn sparre_andersen(cfg: &WalkConfig, alternating: bool) -> Result<HitStats> {
    check_counts(cfg)?;
    if !alternating {
        require_symmetric(&cfg.rho)?;
    }
    let beta = cfg.beta;
    if !(0.0..=1.0).contains(&beta) {
        return domain(format!("β = {beta} outside [0, 1]"));
    }
    let stepper = Stepper::new(&cfg.rho);
    let horizon = if beta < 1.0 {
        cfg.horizon.min((NEGLIGIBLE_WEIGHT.ln() / beta.ln()).ceil() as u64 + 1)
    } else if stepper.gaussian_sd.is_some() && !alternating {
        cfg.horizon.max(LONG_HORIZON)
    } else {
        cfg.horizon
    };
    if beta == 1.0 && survival_bound(horizon) > 1e-4 {
        return domain("horizon too short: P[τ > horizon] exceeds 1e-4");
    }
    let rho = &cfg.rho;
    let weight = |n: u64| if beta == 1.0 { 1.0 } else { beta.powf(n as f64) };
    let out = run_paths(cfg.seed, cfg.n_paths, |rng, _| {
        let (mut s, mut n) = (0.0, 0u64);
        let (mut up, mut down) = (None, None);
        while n < horizon {
            let (next, k) = match (up, down) {
                (None, Some(_)) if !alternating => stepper.advance(s, 0.0, rng),
                (Some(_), None) if !alternating => stepper.advance(s, 0.0, rng),
                _ if alternating => (s - rho.sample(rng) + rho.sample(rng), 1),
                _ => (s + rho.sample(rng), 1),
            };
            s = next;
            n += k;
            if s > 0.0 && up.is_none() {
                up = Some(n);
            }
            if s < 0.0 && down.is_none() {
                down = Some(n);
            }
            if up.is_some() && down.is_some() {
                break;
            }
        }
        let censored = (up.is_none() || down.is_none()) && weight(horizon) > NEGLIGIBLE_WEIGHT;
        (up.map_or(0.0, weight), down.map_or(0.0, weight), censored)
    });
    let plus: Vec<f64> = out.iter().map(|o| o.0).collect();
    let minus: Vec<f64> = out.iter().map(|o| o.1).collect();
    let censored = out.iter().filter(|o| o.2).count();
    let mut h = HitStats::new(Observable::SparreAndersen, 1.0 - (1.0 - beta).sqrt(), cfg.n_paths, censored);
    h.beta_tau_plus = Some(Estimate::from_samples(&plus));
    h.beta_tau_minus = Some(Estimate::from_samples(&minus));
    Ok(h)
}

/// E₀[S_{τ₀₊}] against σ/√2.
pub fn check_spitzer(cfg: &WalkConfig) -> Result<HitStats> {
    check_counts(cfg)?;
    require_symmetric(&cfg.rho)?;
    let var = cfg.rho.second_moment();
    if !var.is_finite() {
        return domain("Spitzer's formula needs a finite variance");
    }
    let stepper = Stepper::new(&cfg.rho);
    let horizon = if stepper.gaussian_sd.is_some() { cfg.horizon.max(LONG_HORIZON) } else { cfg.horizon };
    if survival_bound(horizon) > 1e-4 {
        return domain("horizon too short: P[τ > horizon] exceeds 1e-4");
    }
    let out = run_paths(cfg.seed, cfg.n_paths, |rng, _| {
        let (mut s, mut n) = (0.0, 0u64);
        while n < horizon {
            let (next, k) = stepper.advance(s, 0.0, rng);
            s = next;
            n += k;
            if s > 0.0 {
                return Some(s);
            }
        }
        None
    });
    let censored = out.iter().filter(|o| o.is_none()).count();
    let xs: Vec<f64> = out.iter().map(|o| o.unwrap_or(0.0)).collect();
    let mut h = HitStats::new(Observable::Spitzer, (var / 2.0).sqrt(), cfg.n_paths, censored);
    h.overshoot_plus = Some(Estimate::from_samples(&xs));
    Ok(h)
}

fn gambler_samples(cfg: &WalkConfig, l: f64, seed: u64) -> (Vec<f64>, usize) {
    let rho = &cfg.rho;
    let out = run_paths(seed, cfg.n_paths, |rng, _| {
        let mut s = 0.0;
        for _ in 0..cfg.horizon {
            s += rho.sample(rng);
            if s < 0.0 {
                return Some(0.0);
            }
            if s > l {
                return Some(l);
            }
        }
        None
    });
    let censored = out.iter().filter(|o| o.is_none()).count();
    (out.into_iter().map(|o| o.unwrap_or(0.0)).collect(), censored)
}

fn gambler_reference(cfg: &WalkConfig) -> Result<f64> {
    check_counts(cfg)?;
    require_symmetric(&cfg.rho)?;
    if !(cfg.l > 0.0) {
        return domain("gambler's ruin needs L > 0");
    }
    Ok((cfg.rho.second_moment() / 2.0).sqrt())
}

/// L·P₀[τ_{L+} < τ₀₋] against its L → ∞ limit σ/√2.
pub fn check_gambler(cfg: &WalkConfig) -> Result<HitStats> {
    let reference = gambler_reference(cfg)?;
    let (xs, censored) = gambler_samples(cfg, cfg.l, cfg.seed);
    let mut h = HitStats::new(Observable::Gambler, reference, cfg.n_paths, censored);
    h.gambler = Some(Estimate::from_samples(&xs));
    Ok(h)
}

/// L·P₀[τ_{L+} < τ₀₋] at two lengths, extrapolated linearly in 1/L to L = ∞.
///
/// The leading correction comes from the two overshoots and is O(1/L), so the
/// extrapolant converges at O(1/L²). Each length uses its own seed.
pub fn check_gambler_scaling(cfg: &WalkConfig, lengths: (f64, f64)) -> Result<HitStats> {
    let reference = gambler_reference(cfg)?;
    let (l1, l2) = lengths;
    if !(l1 > 0.0 && l2 > l1) {
        return domain("need 0 < L₁ < L₂");
    }
    let (x1, c1) = gambler_samples(cfg, l1, cfg.seed);
    let (x2, c2) = gambler_samples(cfg, l2, cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let (e1, e2) = (Estimate::from_samples(&x1), Estimate::from_samples(&x2));
    let value = (l2 * e2.value - l1 * e1.value) / (l2 - l1);
    let se = ((l2 * e2.se).powi(2) + (l1 * e1.se).powi(2)).sqrt() / (l2 - l1);
    let mut h = HitStats::new(Observable::GamblerScaling, reference, 2 * cfg.n_paths, c1 + c2);
    h.gambler = Some(Estimate { value, se });
    Ok(h)
}

/// Sampler for the tilted law β e^{φx} ρ(x).
fn tilted_sampler(rho: &StepDensity, phi: f64) -> Result<Box<dyn Fn(&mut ChaCha8Rng) -> f64 + Sync>> {
    match rho.kind() {
        DensityKind::Sech if phi.abs() < 1.0 => Ok(Box::new(move |rng| sample_tilted_sech(phi, rng))),
        DensityKind::Gaussian { t } => {
            let (mean, sd) = (2.0 * t * phi, (2.0 * t).sqrt());
            Ok(Box::new(move |rng| {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }))
        }
        DensityKind::Persistence if phi > -1.0 => {
            let g = Gamma::new((1.0 + phi) / 2.0, 1.0).expect("positive shape");
            Ok(Box::new(move |rng| 0.5 * g.sample(rng).ln()))
        }
        _ => domain(format!("no tilted sampler for {} at φ = {phi}", rho.name())),
    }
}

/// The p of the supercritical branch with β = 4p(1−p).
fn p_of_beta(beta: f64) -> f64 {
    0.5 * (1.0 + (1.0 - beta).sqrt())
}

/// Limit of e^{φL} E₀[β^{τ_{L+}}; τ_{L+} < τ₀₋] as L → ∞:
/// √(1−β)/(φ E⁽ᵖ⁾[S₁]) · P⁽ᵖ⁾[τ₀₋ = ∞]², with the entrance probability
/// exp(−Σ P⁽ᵖ⁾[Sₙ < 0]/n) from convolution tables of ρ, using
/// P⁽ᵖ⁾[Sₙ < 0] = βⁿ ∫_{x<0} e^{φx} ρ*ⁿ(x) dx.
///
/// Returns the value and a bound on the truncation error of the series.
pub fn tilted_limit_reference(rho: &StepDensity, p: f64) -> Result<(f64, f64)> {
    require_symmetric(rho)?;
    let beta = beta_of(p);
    let phi = solve_phi(rho, p)?;
    let drift = beta * rho.mgf_deriv(phi)?;
    if !(drift > 0.0) {
        return domain("tilted walk has no positive drift");
    }
    // P⁽ᵖ⁾[Sₙ < 0] ≤ βⁿ/2
    let n_max = ((1e-14f64).ln() / beta.ln()).ceil().clamp(10.0, 4000.0) as usize;
    let table = build_table(rho, n_max, default_step(rho), default_window(rho, n_max))?;
    let origin = table.origin_index();
    let mut sum = 0.0;
    for n in 1..=n_max {
        let row = table.row(n);
        let vals: Vec<f64> = (0..=origin).map(|i| row[i] * (phi * table.x(i)).exp()).collect();
        sum += beta.powi(n as i32) * gregory(&vals, table.step()) / n as f64;
    }
    let tail = beta.powi(n_max as i32 + 1) / (2.0 * (n_max + 1) as f64 * (1.0 - beta));
    let entrance = (-sum).exp();
    let value = (1.0 - beta).sqrt() / (phi * drift) * entrance * entrance;
    Ok((value, value * (2.0 * tail + table.mass_loss())))
}

/// e^{φL} E₀[β^{τ_{L+}}; τ_{L+} < τ₀₋], estimated as E⁽ᵖ⁾[e^{−φ(S_{τ_{L+}}−L)}; τ_{L+} < τ₀₋]
/// under the tilted walk (an exact change of measure), against its L → ∞ limit.
pub fn check_tilted_limit(cfg: &WalkConfig) -> Result<HitStats> {
    check_counts(cfg)?;
    if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        return domain("the tilted limit needs β in (0, 1)");
    }
    let p = p_of_beta(cfg.beta);
    let phi = match cfg.tilt {
        Some(phi) => phi,
        None => solve_phi(&cfg.rho, p)?,
    };
    let (reference, _) = tilted_limit_reference(&cfg.rho, p)?;
    let sample = tilted_sampler(&cfg.rho, phi)?;
    let l = cfg.l;
    let out = run_paths(cfg.seed, cfg.n_paths, |rng, _| {
        let mut s = 0.0;
        for _ in 0..cfg.horizon {
            s += sample(rng);
            if s < 0.0 {
                return Some(0.0);
            }
            if s > l {
                return Some((-phi * (s - l)).exp());
            }
        }
        None
    });
    let censored = out.iter().filter(|o| o.is_none()).count();
    let xs: Vec<f64> = out.into_iter().map(|o| o.unwrap_or(0.0)).collect();
    let mut h = HitStats::new(Observable::TiltedLimit, reference, cfg.n_paths, censored);
    h.tilted = Some(Estimate::from_samples(&xs));
    Ok(h)
}
