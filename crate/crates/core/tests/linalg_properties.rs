use gpi_core::linalg::{
    block_inverse_lower, block_inverse_upper, cholesky, det_sym, lemma_2_3_schur, sylvester_reduce, BlockPartition,
    CorrelationMatrix, Matrix,
};
use gpi_core::moments::{tilted, tilted_var_last};
use gpi_core::verifier::{random_correlation, MatrixFamily};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = MatrixFamily> {
    prop_oneof![
        Just(MatrixFamily::GramNormalized),
        Just(MatrixFamily::Equicorrelated),
        Just(MatrixFamily::NearSingular),
        Just(MatrixFamily::NonnegEntries),
    ]
}

fn correlation(max_n: usize) -> impl Strategy<Value = CorrelationMatrix> {
    (2..=max_n, family(), any::<u64>()).prop_map(|(n, f, seed)| random_correlation(n, f, seed).unwrap())
}

fn covariance(c: &CorrelationMatrix, sd: &[f64]) -> Matrix {
    let n = c.n();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = sd[i] * sd[j] * c.rho(i, j);
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn block_inverses_invert_for_every_split(c in correlation(6), sd in prop::collection::vec(0.3f64..3.0, 6)) {
        let n = c.n();
        let m = covariance(&c, &sd[..n]);
        for k in 1..n {
            let p = BlockPartition::new(&m, k).unwrap();
            for inv in [block_inverse_lower(&p).unwrap(), block_inverse_upper(&p).unwrap()] {
                let residual = m.matmul(inv.matrix()).max_abs_diff(&Matrix::identity(n));
                let cond = inv.matrix().max_abs().max(1.0);
                prop_assert!(residual <= 1e-10 * n as f64 * cond, "k = {k}: residual {residual:e}");
            }
        }
    }

    #[test]
    fn sylvester_reduction_matches_full_determinant(
        c in correlation(6),
        t in prop::collection::vec(0.0f64..20.0, 6),
    ) {
        let n = c.n();
        let mut tilt = t[..n].to_vec();
        tilt[n - 1] = 0.0;
        let reduced = sylvester_reduce(&c, &tilt).unwrap();
        let full = Matrix::identity(n).add(&Matrix::diag(&tilt).scale(2.0).matmul(c.matrix())).det();
        prop_assert!((reduced - full).abs() <= 1e-10 * full.abs(), "{reduced} vs {full}");
    }

    #[test]
    fn schur_complement_carries_the_determinant(c in correlation(6)) {
        let s = lemma_2_3_schur(&c).unwrap();
        let (a, b) = (det_sym(c.sym()), det_sym(&s));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300) + 1e-15, "{a} vs {b}");
    }

    #[test]
    fn tilted_last_variance_closed_form(c in correlation(5), t in prop::collection::vec(1e-3f64..50.0, 5)) {
        let n = c.n();
        let t1 = &t[..n - 1];
        let closed = tilted_var_last(&c, t1).unwrap();
        let mut tilt = t1.to_vec();
        tilt.push(0.0);
        let direct = tilted(&c, &tilt).unwrap().var_diag[n - 1];
        prop_assert!((closed - direct).abs() <= 1e-10, "{closed} vs {direct}");
        prop_assert!(closed <= 1.0 && closed > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn lemma_2_3_output_is_positive_definite(c in correlation(7)) {
        let s = lemma_2_3_schur(&c).unwrap();
        prop_assert_eq!(s.n(), c.n() - 1);
        prop_assert!(cholesky(&s).is_ok());
    }
}

#[test]
fn bivariate_schur_is_one_minus_rho_squared() {
    let c = CorrelationMatrix::bivariate(0.6).unwrap();
    let s = lemma_2_3_schur(&c).unwrap();
    assert!((s.get(0, 0) - 0.64).abs() < 1e-15);
}
