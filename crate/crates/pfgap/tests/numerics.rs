use approx::assert_relative_eq;
use pfgap::numerics_base::special::{
    digamma, digamma_complex, erfc, erfcx, hurwitz_zeta, ln_gamma_complex, zeta, EULER_GAMMA,
};
use pfgap::numerics_base::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_antisym(rng: &mut impl Rng, dim: usize) -> AntisymMatrix<f64> {
    AntisymMatrix::from_upper(dim, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

/// Pfaffian by expansion along the first row; exponential cost, tiny matrices only.
fn pfaffian_expansion(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for j in 1..n {
        let keep: Vec<usize> = (1..n).filter(|&k| k != j).collect();
        let minor: Vec<Vec<f64>> =
            keep.iter().map(|&r| keep.iter().map(|&c| a[r][c]).collect()).collect();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * a[0][j] * pfaffian_expansion(&minor);
    }
    total
}

#[test]
fn pfaffian_small_cases() {
    let a = AntisymMatrix::from_rows(&[vec![0.0, 2.5], vec![-2.5, 0.0]]).unwrap();
    assert_eq!(pfaffian(&a).unwrap(), 2.5);
    let j = AntisymMatrix::<f64>::from_upper(10, |i, k| if i % 2 == 0 && k == i + 1 { 1.0 } else { 0.0 })
        .unwrap();
    assert_relative_eq!(pfaffian(&j).unwrap(), 1.0, epsilon = 1e-15);
    let odd = AntisymMatrix::<f64>::zeros(3).unwrap();
    assert!(pfaffian(&odd).is_err());
    assert!(AntisymMatrix::from_rows(&[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).is_err());
}

#[test]
fn pfaffian_matches_expansion_and_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in [2, 4, 6, 8] {
        let a = random_antisym(&mut rng, dim);
        let pf = pfaffian(&a).unwrap();
        assert_relative_eq!(pf, pfaffian_expansion(&a.to_rows()), max_relative = 1e-12);
        let det = determinant(&a.to_rows()).unwrap();
        assert_relative_eq!(pf * pf, det, max_relative = 1e-10);
    }
}

#[test]
fn pfaffian_single_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a64 = random_antisym(&mut rng, 6);
    let a32 = AntisymMatrix::<f32>::from_upper(6, |i, j| a64.get(i, j) as f32).unwrap();
    let pf64 = pfaffian(&a64).unwrap();
    let pf32 = pfaffian(&a32).unwrap();
    assert!(((pf32 as f64) - pf64).abs() < 1e-4 * pf64.abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfaffian_squared_is_determinant(seed in any::<u64>(), half in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_antisym(&mut rng, 2 * half);
        let pf = pfaffian(&a).unwrap();
        let det = determinant(&a.to_rows()).unwrap();
        prop_assert!((pf * pf - det).abs() <= 1e-9 * det.abs().max(1e-300));
    }

    #[test]
    fn pfaffian_congruence(seed in any::<u64>(), half in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * half;
        let a = random_antisym(&mut rng, n);
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let bab = AntisymMatrix::from_upper(n, |i, j| {
            let mut s = 0.0;
            for k in 0..n { for l in 0..n { s += b[i][k] * a.get(k, l) * b[j][l]; } }
            s
        }).unwrap();
        let lhs = pfaffian(&bab).unwrap();
        let rhs = determinant(&b).unwrap() * pfaffian(&a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-12));
    }

    #[test]
    fn pfaffian_homogeneity(seed in any::<u64>(), half in 1usize..=6, c in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_antisym(&mut rng, 2 * half);
        let mut ca = a.clone();
        ca.scale(c);
        let lhs = pfaffian(&ca).unwrap();
        let rhs = c.powi(half as i32) * pfaffian(&a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-12));
    }
}

/// ζ(s) by brute summation plus an integral tail with two correction terms.
fn zeta_oracle(s: f64) -> f64 {
    let n = 200_000u64;
    let head: f64 = (1..n).rev().map(|k| (k as f64).powf(-s)).sum();
    let x = n as f64;
    head + x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s) + s / 12.0 * x.powf(-s - 1.0)
}

#[test]
fn special_values() {
    assert_eq!(erfc(0.0), 1.0);
    assert_relative_eq!(digamma(0.5).unwrap(), -EULER_GAMMA - 2.0 * 2f64.ln(), max_relative = 1e-13);
    assert!(digamma(-2.0).is_err());
    assert!(special(SpecialFn::Digamma, 0.0).is_err());
    assert_relative_eq!(zeta(1.5).unwrap(), zeta_oracle(1.5), max_relative = 1e-12);
    assert_relative_eq!(zeta(2.0).unwrap(), std::f64::consts::PI.powi(2) / 6.0, max_relative = 1e-14);
    assert_relative_eq!(zeta(0.5).unwrap(), -1.460_354_508_809_586_8, max_relative = 1e-13);
    assert_relative_eq!(zeta(-0.5).unwrap(), -0.207_886_224_977_354_57, max_relative = 1e-12);
    assert_relative_eq!(zeta(-1.0).unwrap(), -1.0 / 12.0, max_relative = 1e-13);
    assert!(zeta(1.0).is_err());
    assert_relative_eq!(hurwitz_zeta(2.0, 0.5).unwrap(), std::f64::consts::PI.powi(2) / 2.0, max_relative = 1e-13);
    for &x in &[0.1f64, 1.0, 4.9, 5.1, 12.0, 30.0] {
        let direct = if x < 20.0 { (x * x).exp() * erfc(x) } else { 1.0 / (x * std::f64::consts::PI.sqrt()) * (1.0 - 0.5 / (x * x) + 0.75 / x.powi(4) - 1.875 / x.powi(6) + 6.5625 / x.powi(8)) };
        assert_relative_eq!(erfcx(x), direct, max_relative = 1e-10);
    }
}

#[test]
fn complex_gamma_and_digamma_agree_with_real() {
    use num_complex::Complex64;
    for &x in &[0.3, 0.5, 1.0, 2.5, 7.25, 40.0] {
        let z = Complex64::new(x, 0.0);
        assert_relative_eq!(ln_gamma_complex(z).re, statrs::function::gamma::ln_gamma(x), epsilon = 1e-13, max_relative = 1e-13);
        assert_relative_eq!(digamma_complex(z).re, statrs::function::gamma::digamma(x), epsilon = 1e-13, max_relative = 1e-12);
    }
    // |Γ(½ + iy)|² = π / cosh(πy)
    for &y in &[0.5, 2.0, 10.0] {
        let lg = ln_gamma_complex(Complex64::new(0.5, y));
        let pi = std::f64::consts::PI;
        assert_relative_eq!(2.0 * lg.re, (pi / (pi * y).cosh()).ln(), max_relative = 1e-12);
    }
}

#[test]
fn polylog_values() {
    assert_relative_eq!(polylog(1.5, 1.0).unwrap(), zeta(1.5).unwrap(), max_relative = 1e-14);
    let brute: f64 = (1..=1_000_000u64).rev().map(|k| 0.75f64.powi(k as i32) / (k as f64).powf(1.5)).sum();
    assert_relative_eq!(polylog(1.5, 0.75).unwrap(), brute, max_relative = 1e-12);
    let brute_half: f64 = (1..=2000u64).rev().map(|k| 0.9f64.powi(k as i32) / (k as f64).sqrt()).sum();
    assert_relative_eq!(polylog(0.5, 0.9).unwrap(), brute_half, max_relative = 1e-12);
    // the two branches meet at x = ½
    let below = polylog(0.5, 0.5).unwrap();
    let above = polylog(0.5, 0.500_000_000_1).unwrap();
    assert!((below - above).abs() < 1e-9);
    assert!(polylog(0.5, 1.0).is_err());
    assert!(polylog(1.5, 0.0).is_err());
    assert!(polylog(1.5, 1.2).is_err());
}

#[test]
fn grids() {
    let g = make_grid(0.0, 1.0, 2, Rule::GaussLegendre).unwrap();
    let d = 1.0 / (2.0 * 3f64.sqrt());
    assert_relative_eq!(g.nodes[0], 0.5 - d, epsilon = 1e-15);
    assert_relative_eq!(g.nodes[1], 0.5 + d, epsilon = 1e-15);
    assert_relative_eq!(g.weights[0], 0.5, epsilon = 1e-15);
    assert_relative_eq!(g.integrate(|x| x.powi(3)), 0.25, epsilon = 1e-15);
    for n in [2, 17, 400, 1000] {
        for rule in [Rule::GaussLegendre, Rule::Uniform] {
            let g = make_grid(-2.0, 3.0, n, rule).unwrap();
            assert_relative_eq!(g.weights.iter().sum::<f64>(), 5.0, epsilon = 1e-12);
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }
    let g400 = make_grid(0.0, 1.0, 400, Rule::GaussLegendre).unwrap();
    assert_relative_eq!(g400.integrate(|x: f64| (3.0 * x).cos()), 3f64.sin() / 3.0, epsilon = 1e-14);
    assert!(make_grid(1.0, 1.0, 4, Rule::Uniform).is_err());
    assert!(make_grid(0.0, 1.0, 1, Rule::Uniform).is_err());
    let g32 = make_grid(0.0f32, 1.0f32, 8, Rule::GaussLegendre).unwrap();
    assert!((g32.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn adaptive_integration() {
    let opts = GkOptions::default();
    let r = integrate(|x: f64| x.ln(), 0.0, 1.0, &opts);
    assert_relative_eq!(r.value, -1.0, epsilon = 1e-12);
    let r = integrate_to_infinity(|x: f64| (-x * x).exp(), 0.0, &opts);
    assert_relative_eq!(r.value, std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-12);
    let r = integrate_intervals(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], &opts);
    assert_relative_eq!(r.value, 2.5, epsilon = 1e-13);
    let h = 0.05;
    let vals: Vec<f64> = (0..800).map(|i| (-(i as f64) * h).exp() * (1.0 + i as f64 * h)).collect();
    assert_relative_eq!(gregory(&vals, h), 2.0, epsilon = 1e-9);
}

#[test]
fn convolution() {
    let h = 1e-3;
    let ind = UniformGridFn::sample(0.0, h, 1001, |_| 1.0).unwrap();
    let tri = grid_convolve(&ind, &ind).unwrap();
    let peak = tri.values.iter().cloned().fold(0.0, f64::max);
    assert!((peak - 1.0).abs() < 2e-3);
    assert!((tri.x(tri.values.iter().position(|&v| v == peak).unwrap()) - 1.0).abs() < 2e-3);

    let t = 0.5;
    let gauss = |var: f64| move |x: f64| (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let n = 16001;
    let g = UniformGridFn::sample(-8.0, h, n, gauss(t)).unwrap();
    let gg = grid_convolve(&g, &g).unwrap();
    let worst = (0..gg.len()).step_by(37).map(|i| (gg.values[i] - gauss(2.0 * t)(gg.x(i))).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "worst {worst}");
    assert_relative_eq!(gg.integral(), g.integral() * g.integral(), epsilon = 1e-10);

    let bad = UniformGridFn::sample(0.0, 2e-3, 10, |_| 1.0).unwrap();
    assert!(grid_convolve(&ind, &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convolution_commutes_and_associates(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mk = |n: usize| UniformGridFn::<f64>::new(rng.random_range(-1.0..1.0), 0.1,
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let (f, g, k) = (mk(40), mk(25), mk(31));
        let fg = grid_convolve(&f, &g).unwrap();
        let gf = grid_convolve(&g, &f).unwrap();
        prop_assert!((fg.origin - gf.origin).abs() < 1e-12);
        for (a, b) in fg.values.iter().zip(&gf.values) { prop_assert!((a - b).abs() < 1e-9); }
        let l = grid_convolve(&fg, &k).unwrap();
        let r = grid_convolve(&f, &grid_convolve(&g, &k).unwrap()).unwrap();
        for (a, b) in l.values.iter().zip(&r.values) { prop_assert!((a - b).abs() < 1e-9); }
    }
}
