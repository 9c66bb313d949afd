use crate::args::{
    EvalArgs, FitArgs, Format, Identity, Init, KappaArgs, Kernel, KernelArgs, McArgs, Observable, RouteArg,
    SimArgs, Tolerances, ZerosArgs,
};
use crate::output::{num, opt, Table};
use pfgap::asymptotics::{
    kappa_bulk_fourier, kappa_bulk_series, kappa_edge_fourier, kappa_edge_series, kappa_gauss_closed,
    kappa_persistence_closed, kappa_sech_closed, KappaResult,
};
use pfgap::fredholm::{edge_cutoff, fit_asymptote, fpf_direct, fpf_edge, fpf_tw, intensity, read_records, EvalRecord};
use pfgap::kernels::{
    derived, pushforward, scalar_bulk, scalar_edge, scalar_exit_maximal, scalar_gps, DerivedKernel, MonotoneMap,
    StepDensity,
};
use pfgap::stochastic::{
    check_gambler, check_gambler_scaling, check_sparre_andersen, check_spitzer, check_tilted_limit,
    estimate_gap, estimate_intensity, estimate_thinned_gap, gps_gap_probabilities, no_exit_probability, CabmConfig,
    Estimate, ExitConfig, InitialCondition, WalkConfig,
};
use pfgap::Error;
use serde_json::json;

/// A finished command: its table, default format, and whether a check failed.
pub struct Outcome {
    pub table: Table,
    pub default_format: Format,
    pub failure: Option<Failure>,
}

pub enum Failure {
    Numerical(String),
    Statistical(String),
}

impl Outcome {
    fn ok(table: Table, default_format: Format) -> Self {
        Self { table, default_format, failure: None }
    }
}

/// Maps `f` over `items` on the available cores, keeping the order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

// ---------- kernels ----------

/// The density the kernel is built from. At system time t the bulk Gaussian
/// kernel uses variance 2t and the half-space one variance t.
fn density(k: &KernelArgs) -> pfgap::Result<StepDensity> {
    match k.kernel {
        Kernel::Sech | Kernel::Gps | Kernel::Exit => Ok(StepDensity::sech()),
        Kernel::Gauss if is_edge(k) => StepDensity::gaussian(0.5 * k.t),
        Kernel::Gauss => StepDensity::gaussian(k.t),
        Kernel::Persistence => Ok(StepDensity::persistence()),
        Kernel::Poisson if is_edge(k) => Err(Error::Domain("the Poisson-smoothed kernel has no half-space form".into())),
        Kernel::Poisson => StepDensity::poisson_smoothed(k.lambda, k.theta, k.t),
    }
}

fn is_edge(k: &KernelArgs) -> bool {
    k.edge || k.kernel == Kernel::Persistence
}

fn kernel_name(k: Kernel) -> &'static str {
    match k {
        Kernel::Sech => "sech",
        Kernel::Gauss => "gauss",
        Kernel::Persistence => "persistence",
        Kernel::Poisson => "poisson",
        Kernel::Gps => "gps",
        Kernel::Exit => "exit",
    }
}

/// `name[-edge][:key=value;…]`, the kernel column of evaluation tables.
fn label(k: &KernelArgs) -> String {
    let mut s = kernel_name(k.kernel).to_string();
    if is_edge(k) && k.kernel != Kernel::Persistence {
        s.push_str("-edge");
    }
    match k.kernel {
        Kernel::Gauss => s.push_str(&format!(":t={}", k.t)),
        Kernel::Poisson => s.push_str(&format!(":lambda={};theta={};t={}", k.lambda, k.theta, k.t)),
        _ => {}
    }
    s
}

fn parse_label(s: &str) -> Result<KernelArgs, String> {
    let (head, params) = s.split_once(':').unwrap_or((s, ""));
    let (name, edge) = match head.strip_suffix("-edge") {
        Some(n) => (n, true),
        None => (head, false),
    };
    let kernel = <Kernel as clap::ValueEnum>::from_str(name, true).map_err(|e| format!("kernel `{name}`: {e}"))?;
    let mut k = KernelArgs { kernel, t: 0.5, lambda: 1.0, theta: 0.0, edge };
    for kv in params.split(';').filter(|x| !x.is_empty()) {
        let (key, v) = kv.split_once('=').ok_or_else(|| format!("bad kernel parameter `{kv}`"))?;
        let v: f64 = v.parse().map_err(|e| format!("`{kv}`: {e}"))?;
        match key {
            "t" => k.t = v,
            "lambda" => k.lambda = v,
            "theta" => k.theta = v,
            _ => return Err(format!("unknown kernel parameter `{key}`")),
        }
    }
    Ok(k)
}

// ---------- kappa ----------

/// p = 0.01, 0.02, …, 0.99, with ½ hit exactly.
fn figure_grid() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

fn closed_route(k: &KernelArgs, p: f64) -> Option<pfgap::Result<KappaResult>> {
    match (k.kernel, is_edge(k)) {
        (Kernel::Sech | Kernel::Gps | Kernel::Exit, false) => Some(kappa_sech_closed(p)),
        (Kernel::Gauss, false) => Some(kappa_gauss_closed(p, k.t)),
        (Kernel::Persistence, true) => Some(kappa_persistence_closed(p)),
        _ => None,
    }
}

fn kappa_route(k: &KernelArgs, rho: &StepDensity, p: f64, route: RouteArg) -> Option<pfgap::Result<KappaResult>> {
    let edge = is_edge(k);
    match route {
        RouteArg::Series if edge => Some(kappa_edge_series(rho, p)),
        RouteArg::Series => Some(kappa_bulk_series(rho, p)),
        RouteArg::Fourier if edge => Some(kappa_edge_fourier(rho, p)),
        RouteArg::Fourier => Some(kappa_bulk_fourier(rho, p)),
        RouteArg::Closed => closed_route(k, p),
        RouteArg::All => unreachable!("expanded by the caller"),
    }
}

fn route_name(r: RouteArg) -> &'static str {
    match r {
        RouteArg::Series => "series",
        RouteArg::Fourier => "fourier",
        RouteArg::Closed => "closed",
        RouteArg::All => "all",
    }
}

/// The most accurate analytic coefficients available: closed form, else Fourier.
fn reference_kappa(k: &KernelArgs, p: f64) -> pfgap::Result<KappaResult> {
    match closed_route(k, p) {
        Some(r) => r,
        None => kappa_route(k, &density(k)?, p, RouteArg::Fourier).expect("Fourier route always exists"),
    }
}

pub fn kappa(a: &KappaArgs) -> Result<Outcome, Error> {
    let rho = density(&a.kernel)?;
    let ps = if a.figure {
        figure_grid()
    } else {
        a.p_grid.clone().map_or_else(|| vec![a.p.unwrap_or(0.5)], |g| g.0)
    };
    let route = if a.figure { RouteArg::Fourier } else { a.route };
    let routes = match route {
        RouteArg::All => vec![RouteArg::Series, RouteArg::Fourier, RouteArg::Closed],
        r => vec![r],
    };
    let tasks: Vec<(f64, RouteArg)> = ps.iter().flat_map(|&p| routes.iter().map(move |&r| (p, r))).collect();
    let results = par_map(&tasks, |&(p, r)| kappa_route(&a.kernel, &rho, p, r));

    let mut table = Table::new(&[
        "kernel", "variant", "p", "route", "regime", "kappa1", "kappa2", "log_coeff", "phi_p", "truncation_n", "est_error",
    ]);
    let variant = if is_edge(&a.kernel) { "edge" } else { "bulk" };
    for (&(p, r), res) in tasks.iter().zip(results) {
        let res = match res {
            Some(res) => res,
            None if route == RouteArg::All => continue,
            None => {
                return Err(Error::Domain(format!("no closed form for the {} {variant} kernel", label(&a.kernel))));
            }
        };
        let k = match res {
            Ok(k) => k,
            // a sweep over every route drops the routes that do not cover this p
            Err(Error::Domain(msg)) if route == RouteArg::All => {
                eprintln!("note: {} route skipped at p = {p}: {msg}", route_name(r));
                continue;
            }
            Err(e) => return Err(e),
        };
        table.push(vec![
            json!(label(&a.kernel)),
            json!(variant),
            num(p),
            json!(route_name(r)),
            serde_json::to_value(k.regime).expect("enum serializes"),
            num(k.kappa1),
            num(k.kappa2),
            num(k.log_coeff),
            opt(k.phi_p),
            json!(k.truncation_n),
            num(k.est_error),
        ]);
    }
    if table.rows.is_empty() {
        return Err(Error::Domain("no route applies to the requested parameters".into()));
    }
    Ok(Outcome::ok(table, Format::Csv))
}

// ---------- eval / fit ----------

fn eval_one(k: &KernelArgs, kernel: &DerivedKernel, p: f64, l: f64, n: usize) -> pfgap::Result<EvalRecord> {
    let r = if is_edge(k) {
        fpf_edge(kernel, p, l, edge_cutoff(kernel, p)?, n)?
    } else if k.kernel == Kernel::Gps {
        fpf_direct(kernel, p, (-0.5 * l, 0.5 * l), n)?
    } else {
        fpf_direct(kernel, p, (0.0, l), n)?
    };
    Ok(EvalRecord { kernel: label(k), p, l, n, log_pf: r.log_value, richardson_error: r.richardson_error })
}

fn derived_kernel(k: &KernelArgs) -> pfgap::Result<DerivedKernel> {
    let scalar = match k.kernel {
        Kernel::Gps if !is_edge(k) => pushforward(scalar_gps(), MonotoneMap::artanh())?,
        Kernel::Exit if !is_edge(k) => pushforward(scalar_exit_maximal(), MonotoneMap::half_log())?,
        _ if is_edge(k) => scalar_edge(density(k)?)?,
        _ => scalar_bulk(density(k)?)?,
    };
    Ok(derived(scalar))
}

fn require_l_grid(a: &EvalArgs) -> Result<Vec<f64>, Error> {
    match &a.l_grid {
        Some(g) if !g.0.is_empty() => Ok(g.0.clone()),
        _ => Err(Error::Domain("usage: an --L-grid is required".into())),
    }
}

fn evaluate(a: &EvalArgs) -> Result<Vec<EvalRecord>, Error> {
    let ls = require_l_grid(a)?;
    let kernel = derived_kernel(&a.kernel)?;
    par_map(&ls, |&l| eval_one(&a.kernel, &kernel, a.p, l, a.n)).into_iter().collect()
}

pub fn eval(a: &EvalArgs) -> Result<Outcome, Error> {
    let mut table = Table::new(&["kernel", "p", "L", "N", "log_pf", "richardson_error"]);
    for r in evaluate(a)? {
        table.push(vec![json!(r.kernel), num(r.p), num(r.l), json!(r.n), num(r.log_pf), num(r.richardson_error)]);
    }
    Ok(Outcome::ok(table, Format::Csv))
}

pub fn fit(a: &FitArgs, tol: &Tolerances) -> Result<Outcome, Error> {
    let records = match &a.input {
        Some(path) => read_records(path)?,
        None => evaluate(&a.eval)?,
    };
    // one fit per (kernel, p), in order of first appearance
    let mut groups: Vec<((String, u64), Vec<(f64, f64)>)> = Vec::new();
    for r in &records {
        let key = (r.kernel.clone(), r.p.to_bits());
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push((r.l, r.log_pf)),
            None => groups.push((key, vec![(r.l, r.log_pf)])),
        }
    }
    if groups.is_empty() {
        return Err(Error::Domain("no evaluated values to fit".into()));
    }
    let mut table = Table::new(&[
        "kernel", "p", "points", "kappa1_fit", "kappa2_fit", "log_coeff_fit", "residual", "kappa1_ref", "kappa2_ref",
        "kappa1_rel_dev", "kappa2_dev",
    ]);
    let mut worst: Option<String> = None;
    for ((name, p_bits), samples) in &groups {
        let p = f64::from_bits(*p_bits);
        let f = fit_asymptote(samples, a.log_term)?;
        let k = parse_label(name).map_err(Error::Domain)?;
        let reference = reference_kappa(&k, p)?;
        if f.residual > tol.fit_residual {
            worst = Some(format!(
                "fit of {name} at p = {p}: residual {:.3e} exceeds {:.1e}; samples {samples:?}",
                f.residual, tol.fit_residual
            ));
        }
        table.push(vec![
            json!(name),
            num(p),
            json!(samples.len()),
            num(f.kappa1),
            num(f.kappa2),
            opt(f.log_coeff),
            num(f.residual),
            num(reference.kappa1),
            num(reference.kappa2),
            num(if reference.kappa1 != 0.0 { (f.kappa1 - reference.kappa1) / reference.kappa1 } else { f.kappa1 }),
            num(f.kappa2 - reference.kappa2),
        ]);
    }
    let default_format = if table.rows.len() == 1 { Format::Json } else { Format::Csv };
    Ok(Outcome { table, default_format, failure: worst.map(Failure::Numerical) })
}

// ---------- Monte Carlo tables ----------

struct Stat {
    name: String,
    params: String,
    est: Estimate,
    reference: Option<f64>,
    asymptote: Option<f64>,
}

fn stat_outcome(stats: Vec<Stat>, tol: &Tolerances) -> Outcome {
    let mut table = Table::new(&["name", "params", "estimate", "se", "reference", "z", "asymptote", "flag"]);
    let mut rejected = Vec::new();
    for s in stats {
        let z = s.reference.map(|r| s.est.z(r));
        let flag = if z.is_some_and(|z| !(z.abs() <= tol.z_max)) {
            rejected.push(format!("{} ({}): z = {:.2}", s.name, s.params, z.unwrap_or(f64::NAN)));
            "rejected"
        } else if !(s.est.se <= tol.se_max) {
            eprintln!("warning: {} ({}) is under-resolved: SE {:.3e} > {:.1e}", s.name, s.params, s.est.se, tol.se_max);
            "under-resolved"
        } else {
            "ok"
        };
        table.push(vec![
            json!(s.name),
            json!(s.params),
            num(s.est.value),
            num(s.est.se),
            opt(s.reference),
            opt(z),
            opt(s.asymptote),
            json!(flag),
        ]);
    }
    let failure = (!rejected.is_empty()).then(|| Failure::Statistical(rejected.join("; ")));
    Outcome { table, default_format: Format::Csv, failure }
}

pub fn mc(a: &McArgs, seed: u64, tol: &Tolerances) -> Result<Outcome, Error> {
    let k = KernelArgs { kernel: a.kernel, t: a.t, lambda: 1.0, theta: 0.0, edge: false };
    let mut cfg = WalkConfig::new(density(&k)?);
    cfg.beta = match (a.identity, a.p) {
        (_, Some(p)) => pfgap::asymptotics::beta_of(p),
        (Identity::Tilted, None) => pfgap::asymptotics::beta_of(0.75),
        _ => a.beta,
    };
    cfg.l = a.l;
    cfg.n_paths = a.n_paths;
    cfg.horizon = a.horizon;
    cfg.seed = seed;
    let (name, stats) = match a.identity {
        Identity::SparreAndersen => ("sparre-andersen", check_sparre_andersen(&cfg)?),
        Identity::Spitzer => ("spitzer", check_spitzer(&cfg)?),
        Identity::Gambler => ("gambler", check_gambler(&cfg)?),
        Identity::GamblerScaling => ("gambler-scaling", check_gambler_scaling(&cfg, (a.l, 2.0 * a.l))?),
        Identity::Tilted => ("tilted", check_tilted_limit(&cfg)?),
    };
    let params = format!(
        "kernel={};beta={};L={};paths={};censored={}",
        label(&k),
        cfg.beta,
        a.l,
        a.n_paths,
        stats.censored
    );
    Ok(stat_outcome(
        vec![Stat { name: name.into(), params, est: stats.primary(), reference: Some(stats.reference), asymptote: None }],
        tol,
    ))
}

fn bulk_reference(rho: StepDensity, p: f64, interval: (f64, f64), n: usize) -> pfgap::Result<f64> {
    let k = derived(scalar_bulk(rho)?);
    let r = if p < 1.0 { fpf_tw(&k, p, interval, n)? } else { fpf_direct(&k, p, interval, n)? };
    Ok(r.value)
}

pub fn sim(a: &SimArgs, seed: u64, tol: &Tolerances) -> Result<Outcome, Error> {
    if !(0.0..=1.0).contains(&a.theta) {
        return Err(Error::Domain(format!("θ = {} must lie in [0, 1]", a.theta)));
    }
    let p_theta = 1.0 / (1.0 + a.theta);
    let (init, rho) = match a.init {
        Init::Maximal => (InitialCondition::Maximal, StepDensity::gaussian(a.t)?),
        Init::Poisson => (InitialCondition::Poisson(a.lambda), StepDensity::poisson_smoothed(a.lambda, a.theta, a.t)?),
    };
    let init_name = match a.init {
        Init::Maximal => "maximal".to_string(),
        Init::Poisson => format!("poisson({})", a.lambda),
    };
    let mut stats = Vec::new();
    match a.observable {
        Observable::Gap | Observable::ThinnedGap | Observable::Intensity => {
            let pad = 6.0 * (2.0 * a.t).sqrt();
            let interval = (0.0, a.l);
            let mut cfg = CabmConfig::new(a.theta, init, a.t, (-pad, a.l + pad), a.dt);
            let params = format!("theta={};t={};L={};init={init_name};dt={}", a.theta, a.t, a.l, a.dt);
            let runs: Vec<bool> = if a.halved { vec![false, true] } else { vec![false] };
            for halved in runs {
                cfg.halved = halved;
                let suffix = if halved { " (dt/2)" } else { "" };
                let stat = match a.observable {
                    Observable::Gap => Stat {
                        name: format!("gap{suffix}"),
                        params: params.clone(),
                        est: estimate_gap(&cfg, interval, a.n_paths, seed)?,
                        reference: Some(bulk_reference(rho.clone(), p_theta, interval, a.n)?),
                        asymptote: None,
                    },
                    Observable::ThinnedGap => Stat {
                        name: format!("thinned-gap{suffix}"),
                        params: format!("{params};thin={}", a.thin),
                        est: estimate_thinned_gap(&cfg, a.thin, interval, a.n_paths, seed)?,
                        reference: Some(bulk_reference(rho.clone(), p_theta * a.thin, interval, a.n)?),
                        asymptote: None,
                    },
                    _ => {
                        let k = derived(scalar_bulk(rho.clone())?);
                        Stat {
                            name: format!("intensity{suffix}"),
                            params: params.clone(),
                            est: estimate_intensity(&cfg, interval, a.n_paths, seed)?,
                            reference: Some(intensity(&k, p_theta, 0.5 * a.l)),
                            asymptote: None,
                        }
                    }
                };
                stats.push(stat);
            }
        }
        Observable::Exit => stats = exit_stats(a, init, &init_name, p_theta, seed)?,
    }
    Ok(stat_outcome(stats, tol))
}

/// No-exit probabilities at each horizon and the log–log slope between the
/// first and last one.
fn exit_stats(a: &SimArgs, init: InitialCondition, init_name: &str, p: f64, seed: u64) -> Result<Vec<Stat>, Error> {
    let mut horizons = a.horizons.0.clone();
    horizons.sort_by(f64::total_cmp);
    horizons.dedup();
    let t_max = *horizons.last().expect("non-empty by parsing");
    let mut cfg = ExitConfig::new(a.theta, init, a.a, t_max, a.dt);
    cfg.halved = a.halved;
    let est = no_exit_probability(&cfg, &horizons, a.n_paths, seed)?;
    // the Fredholm description covers the maximal entrance law
    let references: Vec<Option<f64>> = if a.init == Init::Maximal && a.a > 0.0 {
        let k = derived(scalar_edge(StepDensity::persistence())?);
        let cut = edge_cutoff(&k, p)?;
        horizons
            .iter()
            .map(|&t| Ok(Some(fpf_edge(&k, p, 0.5 * (2.0 * t / (a.a * a.a)).ln(), cut, a.n)?.value)))
            .collect::<pfgap::Result<_>>()?
    } else {
        vec![None; horizons.len()]
    };
    let params = |extra: String| format!("theta={};a={};init={init_name};dt={};{extra}", a.theta, a.a, a.dt);
    let mut stats: Vec<Stat> = horizons
        .iter()
        .zip(&est)
        .zip(&references)
        .map(|((&t, &e), &r)| Stat {
            name: "no-exit".into(),
            params: params(format!("T={t}")),
            est: e,
            reference: r,
            asymptote: None,
        })
        .collect();
    if horizons.len() >= 2 {
        let (first, last) = (0, horizons.len() - 1);
        let span = (horizons[last] / horizons[first]).ln();
        let slope = nested_log_ratio(est[first].value, est[last].value, a.n_paths).map(|e| Estimate {
            value: e.value / span,
            se: e.se / span,
        });
        let reference = match (references[first], references[last]) {
            (Some(r1), Some(r2)) => Some((r2 / r1).ln() / span),
            _ => None,
        };
        let asymptote = -0.5 * kappa_persistence_closed(p)?.kappa1;
        if let Some(slope) = slope {
            stats.push(Stat {
                name: "no-exit-slope".into(),
                params: params(format!("T={}..{}", horizons[first], horizons[last])),
                est: slope,
                reference,
                asymptote: Some(asymptote),
            });
        }
    }
    Ok(stats)
}

/// log(P₂/P₁) for nested events {2} ⊂ {1} estimated from the same n runs:
/// P₂/P₁ is a binomial proportion among the n·P₁ runs in event 1.
fn nested_log_ratio(p1: f64, p2: f64, n: usize) -> Option<Estimate> {
    if !(p1 > 0.0 && p2 > 0.0) {
        return None;
    }
    let q = p2 / p1;
    let n1 = n as f64 * p1;
    Some(Estimate { value: q.ln(), se: ((1.0 - q) / (q * n1)).sqrt() })
}

pub fn zeros(a: &ZerosArgs, seed: u64, tol: &Tolerances) -> Result<Outcome, Error> {
    let mut eps = a.eps.0.clone();
    if eps.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
        return Err(Error::Domain("ε must lie in (0, ½)".into()));
    }
    eps.sort_by(|x, y| y.total_cmp(x));
    eps.dedup();
    let intervals: Vec<(f64, f64)> = eps.iter().map(|&e| (-1.0 + 2.0 * e, 1.0 - 2.0 * e)).collect();
    let samples = gps_gap_probabilities(a.n, &intervals, a.n_paths, seed)?;
    let kappa = kappa_sech_closed(0.5)?;
    let gps = derived(pushforward(scalar_gps(), MonotoneMap::artanh())?);
    // (−1+2ε, 1−2ε) has length log((1−ε)/ε) in artanh coordinates
    let length = |e: f64| ((1.0 - e) / e).ln();
    let mut stats = Vec::new();
    for (&e, s) in eps.iter().zip(&samples) {
        let l = length(e);
        let fredholm = fpf_tw(&gps, 0.5, (-0.5 * l, 0.5 * l), a.n_ref)?.log_value;
        let g = s.gap;
        stats.push(Stat {
            name: "log-gap".into(),
            params: format!("eps={e};N={};interval=({}, {})", a.n, s.interval.0, s.interval.1),
            est: Estimate { value: g.value.ln(), se: g.se / g.value },
            reference: Some(fredholm),
            asymptote: Some(-kappa.kappa1 * l + kappa.kappa2),
        });
    }
    if eps.len() >= 2 {
        let (first, last) = (0, eps.len() - 1);
        let span = length(eps[last]) - length(eps[first]);
        if let Some(r) = nested_log_ratio(samples[first].gap.value, samples[last].gap.value, a.n_paths) {
            stats.push(Stat {
                name: "log-gap-slope".into(),
                params: format!("eps={}..{};N={}", eps[first], eps[last], a.n),
                est: Estimate { value: -r.value / span, se: r.se / span },
                reference: Some(kappa.kappa1),
                asymptote: Some(kappa.kappa1),
            });
        }
    }
    Ok(stat_outcome(stats, tol))
}
