use gpi_core::bounds::{prop14_constant, Prop15Diagnostics};
use gpi_core::linalg::CorrelationMatrix;
use gpi_core::moments::tilted_var_last;
use gpi_core::specfun::{gauss_2f1, HyperParams};
use gpi_core::verifier::{random_correlation, MatrixFamily};
use proptest::prelude::*;

fn trivariate() -> impl Strategy<Value = CorrelationMatrix> {
    (any::<u64>(), prop_oneof![Just(MatrixFamily::GramNormalized), Just(MatrixFamily::NearSingular)])
        .prop_map(|(seed, f)| random_correlation(3, f, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn prop15_diagnostics_identities(s in trivariate()) {
        let (a, b, c) = (s.rho(0, 1), s.rho(0, 2), s.rho(1, 2));
        let d = Prop15Diagnostics::from_sigma(&s);
        let scale = 1e-12 * (1.0 + d.k.abs());
        prop_assert!((d.i1 - 8.0 * (c * c - a * b * c)).abs() <= scale * 16.0);
        prop_assert!((d.i2 - 8.0 * (a * b - c).powi(2)).abs() <= scale * 16.0);
        prop_assert!((d.g_slope - 8.0 * (a * c - b).powi(2)).abs() <= scale * 16.0);
        prop_assert!(d.i2 >= -1e-12 && d.g_slope >= -1e-12);
        prop_assert!(d.discriminant <= 1e-10, "Δ = {}", d.discriminant);
        prop_assert!(d.var_floor > 0.0 && d.var_floor <= 1.0);
        prop_assert!(d.g_limit >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tilted_variance_respects_the_floor(s in trivariate(), t1 in 1e-4f64..1e4, t2 in 1e-4f64..1e4) {
        let floor = Prop15Diagnostics::from_sigma(&s).var_floor;
        let v = tilted_var_last(&s, &[t1, t2]).unwrap();
        prop_assert!(v >= floor - 1e-10, "{v} < {floor}");
    }
}

#[test]
fn prop14_constant_is_at_least_one() {
    let grid: Vec<f64> = (0..=16).map(|i| i as f64 * 0.25).collect();
    for &a in &grid {
        for &b in &grid {
            let c = prop14_constant(a, b).unwrap();
            if a * b == 0.0 {
                assert!((c - 1.0).abs() < 1e-12, "C({a}, {b}) = {c}");
            } else {
                assert!(c > 1.0, "C({a}, {b}) = {c}");
            }
        }
    }
}

#[test]
fn positive_exponent_series_dominates_one() {
    for &(a, b) in &[(0.5, 0.5), (1.0, 3.0), (2.5, 0.1), (3.9, 3.9)] {
        for i in 0..=20 {
            let z = i as f64 / 20.0;
            let f = gauss_2f1(&HyperParams::new(-0.5 * a, -0.5 * b, 0.5, z).unwrap()).unwrap();
            assert!(f >= 1.0 - 1e-14, "F at z = {z}: {f}");
        }
    }
}
