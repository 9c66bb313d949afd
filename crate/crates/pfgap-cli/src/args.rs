use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Debug, Serialize)]
#[command(name = "pfgap", version, about = "Gap probabilities of Pfaffian point processes: asymptotics, Fredholm evaluation and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Asymptotic coefficients κ₁(p), κ₂(p) by series, Fourier and closed-form routes.
    Kappa(KappaArgs),
    /// Nyström log Pf over a grid of interval lengths.
    Eval(EvalArgs),
    /// Fit log Pf ≈ −κ₁L + κ₂ to evaluated values and compare with the analytic coefficients.
    Fit(FitArgs),
    /// Monte Carlo checks of the random-walk identities.
    Mc(McArgs),
    /// Coalescing/annihilating Brownian motion against its Pfaffian description.
    Sim(SimArgs),
    /// Gap probabilities of the real zeros of the Gaussian power series.
    Zeros(ZerosArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Seed for Monte Carlo commands; a fresh one is drawn and echoed when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when absent.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Largest accepted |z| of a Monte Carlo estimate.
    #[arg(long = "tol-z", default_value_t = 4.0, global = true)]
    pub z_max: f64,
    /// Standard errors above this mark a run as under-resolved.
    #[arg(long = "tol-se", default_value_t = 0.05, global = true)]
    pub se_max: f64,
    /// Largest accepted deviation of an asymptote fit from its samples.
    #[arg(long = "tol-residual", default_value_t = 1e-2, global = true)]
    pub fit_residual: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// π⁻¹ sech x.
    Sech,
    /// Gaussian with variance 2t.
    Gauss,
    /// Half-space kernel of the persistence density.
    Persistence,
    /// Gaussian smoothed by the Poisson initial condition (λ, θ, t).
    Poisson,
    /// Zeros of the Gaussian power series, in artanh coordinates.
    Gps,
    /// Exit times under the maximal entrance law, in ½ log t coordinates.
    Exit,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteArg {
    Series,
    Fourier,
    Closed,
    All,
}

/// Parameters selecting a kernel.
#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = Kernel::Sech)]
    pub kernel: Kernel,
    /// Time of the Gaussian and Poisson-smoothed densities.
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Initial intensity of the Poisson-smoothed density.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Annihilation probability of the Poisson-smoothed density.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Use the half-space kernel (always on for persistence); the Gaussian one
    /// at time t is built from the density of variance t.
    #[arg(long)]
    pub edge: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct KappaArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Single thinning parameter (default ½ when no grid is given).
    #[arg(long, conflicts_with = "p_grid")]
    pub p: Option<f64>,
    /// Grid of thinning parameters `a:b:n` (n points including both ends).
    #[arg(long = "p-grid", value_parser = parse_range)]
    pub p_grid: Option<Grid>,
    #[arg(long, value_enum, default_value_t = RouteArg::All)]
    pub route: RouteArg,
    /// κ₁, κ₂ against p on a fine grid by the Fourier route (the figure tables).
    #[arg(long, conflicts_with_all = ["p", "p_grid"])]
    pub figure: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Interval lengths: a comma list or `a:b:n`.
    #[arg(long = "L-grid", value_parser = parse_list)]
    pub l_grid: Option<Grid>,
    /// Quadrature nodes (the Richardson check also runs 2N).
    #[arg(long = "N", default_value_t = 400)]
    pub n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// CSV written by `eval`; evaluates the L-grid directly when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Include a c·log L term in the fit.
    #[arg(long = "log-term")]
    pub log_term: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    SparreAndersen,
    Spitzer,
    Gambler,
    GamblerScaling,
    Tilted,
}

#[derive(Args, Debug, Serialize)]
pub struct McArgs {
    #[arg(long, value_enum)]
    pub identity: Identity,
    #[arg(long, value_enum, default_value_t = Kernel::Sech)]
    pub kernel: Kernel,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Discount β of the generating-function identities.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Thinning parameter; sets β = 4p(1−p) (required by the tilted check, default ¾).
    #[arg(long)]
    pub p: Option<f64>,
    /// Level of the gambler's-ruin and tilted checks (the scaling check also runs 2L).
    #[arg(long = "L", default_value_t = 30.0)]
    pub l: f64,
    #[arg(long = "n-paths", default_value_t = 100_000)]
    pub n_paths: usize,
    /// Step cap per path.
    #[arg(long, default_value_t = 100_000_000)]
    pub horizon: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Gap,
    ThinnedGap,
    Intensity,
    Exit,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Maximal,
    Poisson,
}

#[derive(Args, Debug, Serialize)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = Observable::Gap)]
    pub observable: Observable,
    /// Observed interval (0, L).
    #[arg(long = "L", default_value_t = 2.0)]
    pub l: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = Init::Maximal)]
    pub init: Init,
    /// Intensity of the Poisson initial condition.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Retention probability of the thinned gap.
    #[arg(long = "thin", default_value_t = 1.0)]
    pub thin: f64,
    /// Starting distance of the particles from the absorbing wall.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Exit horizons (comma list or `a:b:n`).
    #[arg(long = "T", value_parser = parse_list, default_value = "4,40")]
    pub horizons: Grid,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long = "n-paths", default_value_t = 10_000)]
    pub n_paths: usize,
    /// Quadrature nodes of the Fredholm reference.
    #[arg(long = "N", default_value_t = 100)]
    pub n: usize,
    /// Run every realization at half the time step as well and report the paired difference.
    #[arg(long)]
    pub halved: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct ZerosArgs {
    /// Intervals (−1+2ε, 1−2ε); nested, so the first and last give a slope.
    #[arg(long, value_parser = parse_list, default_value = "0.1,0.05")]
    pub eps: Grid,
    /// Degree of the truncated series.
    #[arg(long = "N", default_value_t = 264)]
    pub n: usize,
    #[arg(long = "n-paths", default_value_t = 200_000)]
    pub n_paths: usize,
    /// Quadrature nodes of the Fredholm reference.
    #[arg(long = "N-ref", default_value_t = 100)]
    pub n_ref: usize,
}

/// A list of parameter values given on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

/// `a:b:n` — n equally spaced points from a to b inclusive.
pub fn parse_range(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("expected a:b:n, got `{s}`"));
    };
    let a: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
    match n {
        0 => Err("a grid needs at least one point".into()),
        1 => Ok(Grid(vec![a])),
        // weighted form, so symmetric grids hit their midpoint exactly
        _ => Ok(Grid((0..n).map(|i| (a * (n - 1 - i) as f64 + b * i as f64) / (n - 1) as f64).collect())),
    }
}

/// Either `a:b:n` or a comma-separated list; never empty.
pub fn parse_list(s: &str) -> Result<Grid, String> {
    if s.contains(':') {
        return parse_range(s);
    }
    let v: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("the grid is empty".into());
    }
    Ok(Grid(v))
}
