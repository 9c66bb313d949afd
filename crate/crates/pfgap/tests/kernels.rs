use pfgap::kernels::*;
use pfgap::numerics_base::{integrate, integrate_intervals, GkOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn opts() -> GkOptions<f64> {
    GkOptions::tol(1e-15, 1e-13)
}

fn cheap_kernels() -> Vec<ScalarKernel> {
    vec![
        scalar_bulk(StepDensity::sech()).unwrap(),
        scalar_bulk(StepDensity::gaussian(0.5).unwrap()).unwrap(),
        scalar_bulk(StepDensity::poisson_smoothed(1.5, 0.5, 0.3).unwrap()).unwrap(),
        scalar_gps(),
        scalar_exit_maximal(),
        pushforward(scalar_gps(), MonotoneMap::artanh()).unwrap(),
        pushforward(scalar_exit_maximal(), MonotoneMap::half_log()).unwrap(),
        tabulated_erf_kernel(),
    ]
}

// g(d) = −erf(d), the bulk profile of a Gaussian with variance ½
fn tabulated_erf_kernel() -> ScalarKernel {
    let d: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01).collect();
    let g: Vec<f64> = d.iter().map(|&x| -statrs::function::erf::erf(x)).collect();
    scalar_tabulated(d, g).unwrap()
}

fn point_in(k: &ScalarKernel, rng: &mut ChaCha8Rng) -> f64 {
    match k.domain() {
        (a, b) if a.is_finite() && b.is_finite() => a + (b - a) * rng.random_range(0.02..0.98),
        (a, _) if a.is_finite() => a + rng.random_range(0.05..4.0),
        _ => rng.random_range(-4.0..4.0),
    }
}

#[test]
fn antisymmetry_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in cheap_kernels() {
        for _ in 0..1000 {
            let (x, y) = (point_in(&k, &mut rng), point_in(&k, &mut rng));
            let (a, b) = (k.k(x, y), k.k(y, x));
            assert!((a + b).abs() < 1e-12, "{} at ({x},{y}): {a} vs {b}", k.name());
            assert_eq!(k.k(x, x), 0.0);
            assert!((k.d2(x, y) + k.d1(y, x)).abs() < 1e-9 * (1.0 + k.d2(x, y).abs()), "{}", k.name());
        }
    }
    let costly = [
        scalar_edge(StepDensity::gaussian(0.5).unwrap()).unwrap(),
        scalar_edge(StepDensity::persistence()).unwrap(),
    ];
    for k in &costly {
        for _ in 0..1000 {
            let (x, y) = (point_in(k, &mut rng), point_in(k, &mut rng));
            assert!((k.k(x, y) + k.k(y, x)).abs() < 1e-11, "{}", k.name());
            assert!((k.d2(x, y) + k.d1(y, x)).abs() < 1e-10, "{}", k.name());
        }
    }
    let exit = scalar_exit_poisson(ExitIntensity::Constant(2.0), 0.5).unwrap();
    for _ in 0..40 {
        let (x, y) = (point_in(&exit, &mut rng), point_in(&exit, &mut rng));
        assert!((exit.k(x, y) + exit.k(y, x)).abs() < 1e-10);
    }
}

fn check_derivatives(k: &ScalarKernel, x: f64, y: f64, tol: f64) {
    let h = 1e-4;
    let c = |f: &dyn Fn(f64) -> f64, t: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    let fd2 = c(&|v| k.k(x, v), y);
    let fd1 = c(&|u| k.k(u, y), x);
    let fd12 = c(&|u| k.d2(u, y), x);
    let name = k.name();
    assert!((k.d2(x, y) - fd2).abs() < tol * (1.0 + fd2.abs()), "{name} d2 {} vs {fd2}", k.d2(x, y));
    assert!((k.d1(x, y) - fd1).abs() < tol * (1.0 + fd1.abs()), "{name} d1 {} vs {fd1}", k.d1(x, y));
    assert!((k.d12(x, y) - fd12).abs() < tol * (1.0 + fd12.abs()), "{name} d12 {} vs {fd12}", k.d12(x, y));
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    for k in cheap_kernels() {
        let pts: &[(f64, f64)] = match k.domain() {
            (a, b) if a.is_finite() && b.is_finite() => &[(-0.4, 0.3), (0.5, -0.2), (0.1, 0.8)],
            (a, _) if a.is_finite() => &[(0.5, 1.7), (2.5, 0.3), (1.0, 1.1)],
            _ => &[(-0.4, 0.9), (1.3, -0.6), (0.2, 0.35)],
        };
        // tabulated derivatives are themselves Richardson differences at h = 1e-5
        let tol = if matches!(k, ScalarKernel::Tabulated(_)) { 2e-5 } else { 1e-6 };
        for &(x, y) in pts {
            check_derivatives(&k, x, y, tol);
        }
    }
    for rho in [StepDensity::gaussian(0.5).unwrap(), StepDensity::persistence(), StepDensity::sech()] {
        let k = scalar_edge(rho).unwrap();
        for (x, y) in [(-0.4, 0.9), (1.3, -0.6), (-3.0, -2.2)] {
            check_derivatives(&k, x, y, 1e-6);
        }
    }
    let exit = scalar_exit_poisson(ExitIntensity::Constant(1.3), 0.4).unwrap();
    check_derivatives(&exit, 0.7, 1.9, 1e-5);
}

#[test]
fn sech_bulk_matches_gudermannian_identity() {
    let k = scalar_bulk(StepDensity::sech()).unwrap();
    let closed = 2.0 / PI * (1.0 / 1f64.cosh()).asin() - 1.0;
    let quad = -2.0 / PI * integrate(|z: f64| 1.0 / z.cosh(), 0.0, 1.0, &opts()).value;
    assert!((k.k(0.0, 1.0) - closed).abs() < 1e-10);
    assert!((k.k(0.0, 1.0) - quad).abs() < 1e-10);
    assert!((k.k(0.0, 60.0) + 1.0).abs() < 1e-12);
}

#[test]
fn bulk_rejects_asymmetric_density() {
    assert!(scalar_bulk(StepDensity::persistence()).is_err());
}

#[test]
fn edge_kernel_far_from_the_boundary_is_bulk_of_autocorrelation() {
    for rho in [StepDensity::gaussian(0.5).unwrap(), StepDensity::persistence()] {
        let edge = scalar_edge(rho.clone()).unwrap();
        let bulk = scalar_bulk(rho_tilde(&rho).unwrap()).unwrap();
        for (x, y) in [(0.0, 1.0), (-0.7, 0.4), (0.3, -1.5), (0.0, 3.0)] {
            let (e, b) = (edge.k(x - 20.0, y - 20.0), bulk.k(x, y));
            assert!((e - b).abs() < 1e-6, "{}: {e} vs {b}", rho.name());
        }
    }
}

#[test]
fn edge_kernel_tends_to_one_at_minus_infinity() {
    for rho in [StepDensity::gaussian(0.5).unwrap(), StepDensity::persistence()] {
        let edge = scalar_edge(rho).unwrap();
        assert!((edge.k(0.3, -60.0) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn gps_pushforward_is_the_sech_bulk_kernel() {
    let gps = scalar_gps();
    assert_eq!(gps.k(0.3, 0.3), 0.0);
    assert!(gps.eval(0.2, 1.0).is_err());
    let pushed = pushforward(scalar_gps(), MonotoneMap::artanh()).unwrap();
    let sech = scalar_bulk(StepDensity::sech()).unwrap();
    for (x, y) in [(-1.0f64, 0.5f64), (0.2, 2.2), (1.5, -0.3)] {
        let printed = 2.0 / PI * (1.0 / (y - x).cosh()).asin() - 1.0;
        if x < y {
            assert!((pushed.k(x, y) - printed).abs() < 1e-12);
        }
        assert!((pushed.k(x, y) - sech.k(x, y)).abs() < 1e-12);
        assert!((pushed.d2(x, y) - sech.d2(x, y)).abs() < 1e-12);
        assert!((pushed.d1(x, y) - sech.d1(x, y)).abs() < 1e-12);
        assert!((pushed.d12(x, y) - sech.d12(x, y)).abs() < 1e-11);
    }
}

#[test]
fn identity_pushforward_is_transparent() {
    let base = scalar_gps();
    let same = pushforward(scalar_gps(), MonotoneMap::identity()).unwrap();
    for (x, y) in [(-0.5, 0.4), (0.9, 0.1)] {
        assert_eq!(base.k(x, y), same.k(x, y));
        assert_eq!(base.d12(x, y), same.d12(x, y));
    }
}

#[test]
fn non_monotone_map_is_rejected() {
    let square = MonotoneMap::new(
        "square",
        Arc::new(|x: f64| x * x),
        Arc::new(|y: f64| y.sqrt()),
        Arc::new(|y: f64| 0.5 / y.sqrt()),
        &[-1.0, 0.5, 2.0],
    );
    assert!(square.is_err());
    let ok = MonotoneMap::new(
        "cube",
        Arc::new(|x: f64| x * x * x),
        Arc::new(|y: f64| y.cbrt()),
        Arc::new(|y: f64| 1.0 / (3.0 * y.cbrt().powi(2))),
        &[-2.0, 0.5, 2.0],
    );
    assert!(ok.is_ok());
}

#[test]
fn maximal_exit_kernel_pushes_forward_to_sech_bulk() {
    let k = scalar_exit_maximal();
    assert_eq!(k.k(0.7, 0.7), 0.0);
    assert!((k.k(1e-14, 1.0) + 1.0).abs() < 1e-6);
    assert!(k.eval(0.0, 1.0).is_err());
    assert!(k.eval(-1.0, 1.0).is_err());
    let pushed = pushforward(scalar_exit_maximal(), MonotoneMap::half_log()).unwrap();
    let sech = scalar_bulk(StepDensity::sech()).unwrap();
    for (x, y) in [(-1.0, 0.5), (0.2, 2.2), (1.5, -0.3), (0.0, 0.01)] {
        assert!((pushed.k(x, y) - sech.k(x, y)).abs() < 1e-8);
        assert!((pushed.d2(x, y) - sech.d2(x, y)).abs() < 1e-8);
        assert!((pushed.d12(x, y) - sech.d12(x, y)).abs() < 1e-8);
    }
}

#[test]
fn poisson_exit_kernel_approaches_maximal_for_large_intensity() {
    let maximal = scalar_exit_maximal();
    let big = scalar_exit_poisson(ExitIntensity::Constant(400.0), 0.0).unwrap();
    for (s, t) in [(0.5, 1.5), (1.0, 4.0)] {
        assert!((big.k(s, t) - maximal.k(s, t)).abs() < 5e-3, "{} vs {}", big.k(s, t), maximal.k(s, t));
    }
    // the functional intensity route must agree with the closed inner integral
    let c = scalar_exit_poisson(ExitIntensity::Constant(0.8), 0.5).unwrap();
    let f = scalar_exit_poisson(
        ExitIntensity::Function { lambda: Arc::new(|_| 0.8), primitive: Arc::new(|y| 0.8 * y) },
        0.5,
    )
    .unwrap();
    for (s, t) in [(0.5, 1.5), (2.0, 0.3)] {
        assert!((c.k(s, t) - f.k(s, t)).abs() < 1e-7);
        assert!((c.d12(s, t) - f.d12(s, t)).abs() < 1e-6 * (1.0 + c.d12(s, t).abs()));
    }
    assert!(scalar_exit_poisson(ExitIntensity::Constant(1.0), 1.5).is_err());
}

#[test]
fn one_point_intensity_of_bulk_kernel() {
    let d = derived(scalar_bulk(StepDensity::sech()).unwrap());
    for p in [0.25, 0.5, 1.0] {
        let v = d.intensity(p, &[0.7]).unwrap();
        assert!((v - 2.0 * p / PI).abs() < 1e-14);
    }
    assert!(d.intensity(0.5, &[0.1, 0.1]).is_err());
    assert!(d.intensity(1.5, &[0.1]).is_err());
}

#[test]
fn two_point_intensity_matches_expanded_pfaffian() {
    let k = scalar_bulk(StepDensity::sech()).unwrap();
    let d = derived(k.clone());
    let p = 0.5;
    let (x, y) = (0.0, 1.0);
    // entries of the 4×4 matrix in the order (x,1), (x,2), (y,1), (y,2)
    let a01 = -p * k.d2(x, x);
    let a02 = p * (1.0 + k.k(x, y));
    let a03 = -p * k.d2(x, y);
    let a12 = -p * k.d1(x, y);
    let a13 = p * k.d12(x, y);
    let a23 = -p * k.d2(y, y);
    let expanded = a01 * a23 - a02 * a13 + a03 * a12;
    assert!((d.intensity(p, &[x, y]).unwrap() - expanded).abs() < 1e-14);
    // repulsion: the pair intensity is below the product of one-point intensities
    assert!(expanded < (2.0 * p / PI).powi(2));
}

#[test]
fn derived_block_conventions() {
    let k = scalar_bulk(StepDensity::gaussian(0.5).unwrap()).unwrap();
    let d = derived(k.clone());
    let b = d.block(0.3, 0.3);
    assert_eq!(b[0][0], 0.0);
    let b = d.block(0.3, 1.0);
    assert!((b[0][0] - (1.0 + k.k(0.3, 1.0))).abs() < 1e-15);
    let c = d.block(1.0, 0.3);
    for i in 0..2 {
        for j in 0..2 {
            assert!((b[i][j] + c[j][i]).abs() < 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intensity_is_homogeneous_in_p(
        xs in proptest::collection::btree_set(-300i32..300, 1..5),
        p in 0.05f64..1.0,
    ) {
        let d = derived(scalar_bulk(StepDensity::sech()).unwrap());
        let pts: Vec<f64> = xs.iter().map(|&v| v as f64 / 100.0).collect();
        let one = d.intensity(1.0, &pts).unwrap();
        let scaled = d.intensity(p, &pts).unwrap();
        prop_assert!((scaled - p.powi(pts.len() as i32) * one).abs() < 1e-12);
        prop_assert!(one >= -1e-14);
    }

    #[test]
    fn bulk_kernel_antisymmetric(x in -10.0f64..10.0, y in -10.0f64..10.0) {
        for k in cheap_kernels().into_iter().take(3) {
            prop_assert!((k.k(x, y) + k.k(y, x)).abs() < 1e-13);
        }
    }
}

// ---------------------------------------------------------------- densities

fn builtin_densities() -> Vec<StepDensity> {
    vec![
        StepDensity::sech(),
        StepDensity::gaussian(0.5).unwrap(),
        StepDensity::gaussian(2.0).unwrap(),
        StepDensity::poisson_smoothed(1.5, 0.5, 0.3).unwrap(),
        StepDensity::persistence(),
        rho_tilde(&StepDensity::sech()).unwrap(),
    ]
}

#[test]
fn densities_normalised_with_correct_moments() {
    for rho in builtin_densities() {
        let (lo, hi) = rho.tail_bounds(1e-18);
        let m = rho.mode();
        let mass = integrate_intervals(|x| rho.pdf(x), &[lo, m, hi], &opts()).value;
        assert!((mass - 1.0).abs() < 1e-10, "{} mass {mass}", rho.name());
        let m2 = rho.expect(|x| x * x);
        let m4 = rho.expect(|x| x.powi(4));
        let mean = rho.expect(|x| x);
        assert!((m2 - rho.second_moment()).abs() < 1e-9 * m2, "{} m2", rho.name());
        assert!((m4 - rho.fourth_moment()).abs() < 1e-8 * m4, "{} m4", rho.name());
        assert!((mean - rho.mean()).abs() < 1e-10, "{} mean", rho.name());
        // cdf is the primitive of pdf, pdf′ is dpdf
        for x in [-1.3, -0.2, 0.0, 0.4, 1.1] {
            let fd = (rho.cdf(x + 1e-5) - rho.cdf(x - 1e-5)) / 2e-5;
            assert!((fd - rho.pdf(x)).abs() < 1e-8, "{} cdf' at {x}", rho.name());
            let fd = (rho.pdf(x + 1e-5) - rho.pdf(x - 1e-5)) / 2e-5;
            assert!((fd - rho.dpdf(x)).abs() < 1e-7, "{} pdf' at {x}", rho.name());
            let direct = integrate_intervals(|z| rho.pdf(z), &[lo, m.min(x), x], &opts()).value;
            if x > lo {
                assert!((direct - rho.cdf(x)).abs() < 1e-10, "{} cdf at {x}", rho.name());
            }
        }
        assert!(rho.cdf(lo - 5.0) < 1e-12 && (rho.cdf(hi + 5.0) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fourier_transforms_match_quadrature() {
    for rho in builtin_densities() {
        let (lo, hi) = rho.tail_bounds(1e-18);
        assert!((rho.ft(0.0).unwrap() - 1.0).abs() < 1e-12);
        for k in [0.3, 1.0, 2.5] {
            let re = integrate_intervals(|x| (k * x).cos() * rho.pdf(x), &[lo, rho.mode(), hi], &opts()).value;
            let im = integrate_intervals(|x| (k * x).sin() * rho.pdf(x), &[lo, rho.mode(), hi], &opts()).value;
            let z = rho.ft_complex(k).unwrap();
            assert!((z.re - re).abs() < 1e-10 && (z.im - im).abs() < 1e-10, "{} ft({k})", rho.name());
        }
    }
}

#[test]
fn persistence_laplace_transform_at_one() {
    let rho = StepDensity::persistence();
    let quad = rho.expect(|x| x.exp());
    assert!((rho.mgf(1.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-13);
    assert!((quad - 1.0 / PI.sqrt()).abs() < 1e-10);
}

#[test]
fn gaussian_density_at_zero() {
    let rho = StepDensity::gaussian(0.5).unwrap();
    assert!((rho.pdf(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    assert!(StepDensity::gaussian(0.0).is_err());
    assert!(StepDensity::poisson_smoothed(1.0, 2.0, 1.0).is_err());
}

#[test]
fn mgf_matches_quadrature_and_rejects_divergence() {
    for rho in builtin_densities() {
        for phi in [0.2, 0.6] {
            if phi >= rho.mgf_abscissa() {
                continue;
            }
            let f = |x: f64| (phi * x).exp() * rho.pdf(x);
            let quad = integrate_intervals(f, &[-200.0, 0.0, 200.0], &opts()).value;
            assert!((rho.mgf(phi).unwrap() - quad).abs() < 1e-9 * quad, "{}", rho.name());
        }
    }
    assert!(StepDensity::sech().mgf(1.0).is_err());
    assert!(StepDensity::poisson_smoothed(1.0, 0.0, 1.0).unwrap().mgf(1.2).is_err());
}

#[test]
fn poisson_smoothed_matches_grid_convolution() {
    let (lambda, theta, t) = (1.2, 0.5, 0.4);
    let rho = StepDensity::poisson_smoothed(lambda, theta, t).unwrap();
    let mu = lambda * (1.0 + theta);
    let h = 1e-3;
    let n = 24001;
    let origin = -12.0;
    let gauss = pfgap::UniformGridFnF64::sample(origin, h, n, |x| {
        (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
    })
    .unwrap();
    let laplace = pfgap::UniformGridFnF64::sample(origin, h, n, |x| 0.5 * mu * (-mu * x.abs()).exp()).unwrap();
    let conv = pfgap::numerics_base::grid_convolve(&gauss, &laplace).unwrap();
    for x in [-2.0, -0.5, 0.0, 0.3, 1.7] {
        assert!((conv.eval(x) - rho.pdf(x)).abs() < 1e-6, "{x}: {} vs {}", conv.eval(x), rho.pdf(x));
    }
}

#[test]
fn autocorrelation_closed_forms() {
    let pers = rho_tilde(&StepDensity::persistence()).unwrap();
    for z in [-2.0, 0.0, 0.7] {
        assert!((pers.pdf(z) - 1.0 / (PI * z.cosh())).abs() < 1e-15);
    }
    let g = rho_tilde(&StepDensity::gaussian(0.5).unwrap()).unwrap();
    assert!((g.second_moment() - 2.0).abs() < 1e-15);
    // sech autocorrelation at 0 is ∫(π⁻¹ sech)² = 2/π²
    let s = rho_tilde(&StepDensity::sech()).unwrap();
    assert!((s.pdf(0.0) - 2.0 / (PI * PI)).abs() < 1e-15);
    let quad = integrate(|w: f64| (1.0 / (PI * w.cosh())) * (1.0 / (PI * (w - 1.3).cosh())), -40.0, 40.0, &opts()).value;
    assert!((s.pdf(1.3) - quad).abs() < 1e-12);
}

#[test]
fn tabulated_autocorrelation_is_symmetric_with_squared_transform() {
    let rho = StepDensity::poisson_smoothed(1.5, 0.0, 0.3).unwrap();
    let tilde = rho_tilde(&rho).unwrap();
    assert!(tilde.is_symmetric());
    for z in [0.2, 0.9, 2.0] {
        assert!((tilde.pdf(z) - tilde.pdf(-z)).abs() < 1e-12);
    }
    for k in [0.0, 0.5, 1.5] {
        let want = rho.ft(k).unwrap().powi(2);
        assert!((tilde.ft(k).unwrap() - want).abs() < 1e-5, "k={k}");
    }
    assert!(tilde.ft(1e5).is_err());
}

#[test]
fn tabulated_density_from_csv() {
    let dir = std::env::temp_dir().join(format!("pfgap-kernels-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rho.csv");
    let mut text = String::from("x,value\n");
    for i in 0..=800 {
        let x = -8.0 + i as f64 * 0.02;
        text.push_str(&format!("{x},{}\n", (-x * x / 2.0).exp() / (2.0 * PI).sqrt()));
    }
    std::fs::write(&path, text).unwrap();
    let rho = StepDensity::tabulated(TabulatedDensity::from_csv(&path).unwrap()).unwrap();
    assert!(rho.is_symmetric());
    assert!((rho.cdf(0.0) - 0.5).abs() < 1e-6);
    assert!((rho.second_moment() - 1.0).abs() < 1e-4);
    assert!((rho.ft(1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-5);
    std::fs::write(&path, "x,value\n0,1\n0,2\n1,3\n").unwrap();
    assert!(TabulatedDensity::from_csv(&path).is_err());
    std::fs::write(&path, "x,value\n0,1\n0.5,-2\n1,3\n").unwrap();
    assert!(TabulatedDensity::from_csv(&path).is_err());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn samplers_reproduce_their_cdfs() {
    let n = 200_000;
    for rho in builtin_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..n).map(|_| rho.sample(&mut rng)).collect();
        for q in [-1.0, -0.3, 0.0, 0.5, 1.4] {
            let f = rho.cdf(q);
            let emp = xs.iter().filter(|&&x| x <= q).count() as f64 / n as f64;
            let se = (f * (1.0 - f) / n as f64).sqrt().max(1e-9);
            assert!((emp - f).abs() < 4.5 * se, "{} at {q}: {emp} vs {f}", rho.name());
        }
    }
}

#[test]
fn tilted_sech_sampler_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let phi = 0.4;
    let n = 200_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_tilted_sech(phi, &mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let want = PI / 2.0 * (PI * phi / 2.0).tan();
    assert!((mean - want).abs() < 4.0 * (var / n as f64).sqrt());
}
