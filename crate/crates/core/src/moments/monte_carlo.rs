use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GpiError, Result};
use crate::linalg::{cholesky, SymMatrix};

use super::{ExponentVector, Method, MomentEstimate};

/// Flag attached when some exponent is ≤ −1/2: the integrand then has an
/// infinite second moment and the standard error means little.
pub const STDERR_UNRELIABLE: &str = "stderr unreliable";

/// Sample mean of ∏|x_j|^{α_j} over X ~ N(0, Σ), drawn through the Cholesky
/// factor of Σ from a ChaCha8 stream seeded with `seed`.
pub fn mc_mixed_moment(sigma: &SymMatrix, alphas: &ExponentVector, n_samples: u64, seed: u64) -> Result<MomentEstimate> {
    let n = sigma.n();
    if alphas.len() != n {
        return Err(GpiError::Invalid(format!("{} exponents for a {n}x{n} matrix", alphas.len())));
    }
    if n_samples < 2 {
        return Err(GpiError::Invalid("Monte Carlo needs at least two samples".into()));
    }
    let factor = cholesky(sigma)?;
    let a = alphas.as_slice();
    let active: Vec<usize> = (0..n).filter(|&j| a[j] != 0.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut rng);
        }
        factor.apply(&z, &mut x);
        let mut prod = 1.0;
        for &j in &active {
            prod *= x[j].abs().powf(a[j]);
        }
        let delta = prod - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (prod - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    let mut flags = Vec::new();
    if a.iter().any(|&v| v <= -0.5) {
        flags.push(STDERR_UNRELIABLE.to_string());
    }
    Ok(MomentEstimate {
        value: mean,
        method: Method::MonteCarlo,
        err: (var / n_samples as f64).sqrt(),
        samples: Some(n_samples),
        seed: Some(seed),
        flags,
    })
}
