use gpi_core::linalg::{CorrelationMatrix, Matrix, SymMatrix};
use gpi_core::moments::{
    abs_moment_1d, gamma_representation_1d, mc_mixed_moment, mixed_moment_one_negative, moment, nabeya_bivariate,
    tilted, ExponentVector, McOptions, Method, MethodChoice,
};
use gpi_core::verifier::{random_correlation, MatrixFamily};
use proptest::prelude::*;

fn mc() -> McOptions {
    McOptions { samples: 200_000, seed: 11 }
}

fn correlation(n: usize) -> impl Strategy<Value = CorrelationMatrix> {
    any::<u64>().prop_map(move |seed| random_correlation(n, MatrixFamily::GramNormalized, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn covariance_scaling(
        c in correlation(3),
        sd in prop::collection::vec(0.2f64..4.0, 3),
        a1 in -0.9f64..-0.05,
        a2 in 0.1f64..3.0,
        a3 in 0.1f64..3.0,
    ) {
        let mut cov = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] = sd[i] * sd[j] * c.rho(i, j);
            }
        }
        let a = [a1, a2, a3];
        let alphas = ExponentVector::new(a.to_vec()).unwrap();
        let scaled = moment(&SymMatrix::new(cov).unwrap(), &alphas, MethodChoice::Auto, mc()).unwrap();
        let unit = moment(c.sym(), &alphas, MethodChoice::Auto, mc()).unwrap();
        let factor: f64 = (0..3).map(|i| sd[i].powf(a[i])).product();
        prop_assert!((scaled.value - factor * unit.value).abs() <= 1e-9 * scaled.value, "{} vs {}", scaled.value, factor * unit.value);
    }

    #[test]
    fn quadrature_agrees_with_nabeya(rho in -0.95f64..0.95, a1 in -0.95f64..-0.02, a2 in 0.05f64..4.0) {
        let s = CorrelationMatrix::bivariate(rho).unwrap();
        let alphas = ExponentVector::new(vec![a1, a2]).unwrap();
        let q = moment(s.sym(), &alphas, MethodChoice::Quadrature, mc()).unwrap();
        let exact = nabeya_bivariate(a1, a2, 1.0, 1.0, rho).unwrap();
        prop_assert_eq!(q.method, Method::Quadrature);
        prop_assert!((q.value - exact).abs() <= q.err + 1e-9 * exact, "{} vs {exact} (err {})", q.value, q.err);
    }

    #[test]
    fn tilted_variances_dominate_one_minus_rho_squared(c in correlation(4), t in 1e-4f64..1e4) {
        let g = tilted(&c, &[t, 0.0, 0.0, 0.0]).unwrap();
        for i in 1..4 {
            let floor = 1.0 - c.rho(0, i).powi(2);
            prop_assert!(g.var_diag[i] >= floor - 1e-12 && g.var_diag[i] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn untilted_variance_never_exceeds_one(c in correlation(4), t in prop::collection::vec(0.0f64..100.0, 3)) {
        let g = tilted(&c, &[t[0], t[1], t[2], 0.0]).unwrap();
        prop_assert!(g.var_diag[3] <= 1.0 + 1e-12);
    }
}

#[test]
fn gamma_representation_reproduces_negative_moments() {
    for i in 1..10 {
        let alpha = i as f64 / 10.0;
        let (v, _) = gamma_representation_1d(alpha).unwrap();
        let exact = abs_moment_1d(-alpha, 1.0).unwrap();
        assert!((v - exact).abs() <= 1e-9 * exact, "α = {alpha}: {v} vs {exact}");
    }
}

#[test]
fn one_negative_with_even_rest_against_monte_carlo() {
    let s = random_correlation(3, MatrixFamily::GramNormalized, 5).unwrap();
    let q = mixed_moment_one_negative(&s, 0.4, &ExponentVector::new(vec![2.0, 2.0]).unwrap()).unwrap();
    let m = mc_mixed_moment(s.sym(), &ExponentVector::new(vec![-0.4, 2.0, 2.0]).unwrap(), 400_000, 3).unwrap();
    assert!((q.value - m.value).abs() <= 4.0 * m.err + q.err, "{} vs {} ± {}", q.value, m.value, m.err);
}

#[test]
fn methods_agree_on_a_grid() {
    let mut checked = 0;
    for seed in 0..20u64 {
        let s = random_correlation(2, MatrixFamily::GramNormalized, seed).unwrap();
        for (a1, a2) in [(-0.3, 1.5), (-0.45, 0.7), (-0.1, 3.2)] {
            let alphas = ExponentVector::new(vec![a1, a2]).unwrap();
            let n = moment(s.sym(), &alphas, MethodChoice::Nabeya, mc()).unwrap();
            let q = moment(s.sym(), &alphas, MethodChoice::Quadrature, mc()).unwrap();
            let m = moment(s.sym(), &alphas, MethodChoice::MonteCarlo, McOptions { samples: 200_000, seed }).unwrap();
            assert!((n.value - q.value).abs() <= q.err + 1e-10, "{} vs {}", n.value, q.value);
            assert!((n.value - m.value).abs() <= 5.0 * m.err, "{} vs {} ± {}", n.value, m.value, m.err);
            checked += 1;
        }
    }
    assert_eq!(checked, 60);
}

#[test]
fn isserlis_and_monte_carlo_on_even_exponents() {
    let s = random_correlation(3, MatrixFamily::NonnegEntries, 8).unwrap();
    let alphas = ExponentVector::new(vec![2.0, 4.0, 2.0]).unwrap();
    let i = moment(s.sym(), &alphas, MethodChoice::Isserlis, mc()).unwrap();
    let m = mc_mixed_moment(s.sym(), &alphas, 400_000, 9).unwrap();
    assert!((i.value - m.value).abs() <= 4.0 * m.err, "{} vs {} ± {}", i.value, m.value, m.err);
}
