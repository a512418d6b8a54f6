use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use stot_nts::inversion::{self, CharacteristicFunction, TabulatedCdf};
use stot_nts::nts::{StdNtsParams, TailShape};
use stot_nts::{pricer, stats, tails, Error};

/// `n`-th Taylor coefficient times `n!` of `f` at 0 from a circular stencil.
fn circle_derivative(f: impl Fn(Complex64) -> Complex64, n: u32, r: f64) -> Complex64 {
    let k = 64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..k {
        let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
        acc += f(Complex64::from_polar(r, t)) * Complex64::from_polar(1.0, -(n as f64) * t);
    }
    let fact: f64 = (1..=n).map(|v| v as f64).product();
    acc * fact / (k as f64 * r.powi(n as i32))
}

#[test]
fn subordinator_cumulants_from_laplace_transform() {
    for (a, t) in [(1.8, 1.5), (0.5, 0.2), (1.2, 4.0)] {
        let shape = TailShape::new(a, t).unwrap();
        // log L(s) is analytic for |s| < theta
        let psi = |s: Complex64| shape.subordinator_laplace(s).ln();
        let r = 0.25 * t;
        let k1 = -circle_derivative(psi, 1, r).re;
        let k2 = circle_derivative(psi, 2, r).re;
        assert!((k1 - 1.0).abs() < 1e-10, "mean {k1}");
        assert!((k2 - shape.subordinator_variance()).abs() < 1e-10, "variance {k2}");
    }
    let v = TailShape::new(1.8, 1.5).unwrap().subordinator_variance();
    assert!((v - 0.2 / 3.0).abs() < 1e-15);
}

#[test]
fn real_line_and_contour_inversions_agree() {
    let shape = TailShape::new(1.3, 0.7).unwrap();
    let sd = shape.subordinator_variance().sqrt();
    for x in [0.05, 0.3, 0.8, 1.0, 1.7, 3.0] {
        let gp = inversion::gil_pelaez_cdf(&shape, x, 1.0, sd).unwrap();
        let br = inversion::contour_cdf(&shape, x).unwrap();
        assert!((gp - br).abs() < 1e-7, "x={x}: {gp} vs {br}");
    }
}

#[test]
fn standardized_tables_have_unit_moments() {
    let shape = TailShape::new(1.5, 0.9).unwrap();
    for b in [-0.8, -0.2, 0.0, 0.6] {
        let t = tails::stdnts_table(shape, b, 512).unwrap();
        let (m, v) = t.moments();
        assert!(m.abs() < 1e-6 && (v - 1.0).abs() < 1e-5, "b={b}: {m} {v}");
    }
    let sym = tails::stdnts_table(shape, 0.0, 512).unwrap();
    assert!((sym.cdf_at(0.0) - 0.5).abs() < 1e-9);
    for x in [0.3, 1.0, 2.5] {
        assert!((sym.cdf_at(x) + sym.cdf_at(-x) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn skew_flips_with_b() {
    let shape = TailShape::new(1.5, 0.9).unwrap();
    let lo = tails::stdnts_table(shape, -0.5, 512).unwrap();
    let hi = tails::stdnts_table(shape, 0.5, 512).unwrap();
    for x in [0.2, 1.0, 3.0] {
        assert!((lo.cdf_at(x) + hi.cdf_at(-x) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn quantile_draws_reproduce_the_subordinator_mean() {
    let shape = TailShape::new(0.9, 0.4).unwrap();
    let table = pricer::subordinator_table(shape, 1024).unwrap();
    let r = pricer::generate_randoms(200, 500, 21).unwrap();
    let tau = pricer::subordinator_draws(&r.u, &table).unwrap();
    let se = (stats::sample_variance(&tau) / tau.len() as f64).sqrt();
    assert!((stats::mean(&tau) - 1.0).abs() < 4.0 * se);
    assert!(stats::ks_distance(&tau, |x| table.cdf_at(x)) < 0.01);
}

#[test]
fn log_mgf_matches_monte_carlo() {
    let p = StdNtsParams::new(1.6, 1.1, -0.4).unwrap();
    let table = pricer::subordinator_table(p.shape(), 2048).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sigma = 0.2;
    let n = 400_000;
    let v: Vec<f64> = (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            let x: f64 = StandardNormal.sample(&mut rng);
            (sigma * p.from_subordinator(table.quantile(u).unwrap(), x)).exp()
        })
        .collect();
    let se = (stats::sample_variance(&v) / n as f64).sqrt();
    let w = p.log_mgf(sigma).unwrap();
    assert!((stats::mean(&v) - w.exp()).abs() < 4.0 * se, "{} vs {}", stats::mean(&v), w.exp());
}

#[test]
fn log_mgf_diverges_beyond_tempering() {
    let p = StdNtsParams::new(1.6, 0.5, 0.9).unwrap();
    assert!(matches!(p.log_mgf(3.0), Err(Error::MgfDivergence { .. })));
}

#[test]
fn table_survives_binary_round_trip() {
    let t = pricer::subordinator_table(TailShape::new(1.2, 2.0).unwrap(), 256).unwrap();
    let mut buf = Vec::new();
    t.write_to(&mut buf).unwrap();
    let back = TabulatedCdf::read_from(buf.as_slice()).unwrap();
    assert_eq!(back.grid(), t.grid());
    assert_eq!(back.cdf_values(), t.cdf_values());
    buf[0] ^= 1;
    assert!(TabulatedCdf::read_from(buf.as_slice()).is_err());
}

struct Shifted(TailShape);

impl CharacteristicFunction for Shifted {
    fn chf(&self, u: f64) -> Complex64 {
        self.0.subordinator_chf(u) * Complex64::from_polar(1.0, -u)
    }
}

#[test]
fn centred_subordinator_inverts_on_the_real_line() {
    let shape = TailShape::new(1.8, 1.5).unwrap();
    let sd = shape.subordinator_variance().sqrt();
    let centred = inversion::build_cdf(&Shifted(shape), 0.0, sd, false, 1024).unwrap();
    let direct = pricer::subordinator_table(shape, 1024).unwrap();
    for x in [0.5, 0.9, 1.0, 1.3, 2.0] {
        assert!((centred.cdf_at(x - 1.0) - direct.cdf_at(x)).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn table_cdf_is_monotone_and_quantiles_invert(
        alpha in 0.3f64..1.95,
        theta in 0.2f64..5.0,
        b in -0.95f64..0.95,
        p in 0.001f64..0.999,
    ) {
        let t = tails::stdnts_table(TailShape::new(alpha, theta).unwrap(), b, 256).unwrap();
        prop_assert!(t.cdf_values().windows(2).all(|w| w[0] <= w[1]));
        let q = t.quantile(p).unwrap();
        prop_assert!((t.cdf_at(q) - p).abs() < 1e-9);
    }

    #[test]
    fn endpoint_skewness_is_odd_in_b(alpha in 0.1f64..1.99, theta in 0.05f64..20.0, b in 0.0f64..1.0) {
        let hi = StdNtsParams::new(alpha, theta, b).unwrap();
        let lo = StdNtsParams::new(alpha, theta, -b).unwrap();
        prop_assert!((hi.skewness() + lo.skewness()).abs() < 1e-12);
        prop_assert!((hi.excess_kurtosis() - lo.excess_kurtosis()).abs() < 1e-12);
        prop_assert!(hi.excess_kurtosis() > 0.0);
    }
}
