//! The Gamma-integral reduction: a negative power |x|^{−α} is traded for an
//! integral over a diagonal tilt T of the Gaussian precision, after which
//! the remaining moment is taken under the tilted covariance (Σ⁻¹ + 2T)⁻¹.
//!
//! Each tilt axis is integrated in two pieces that meet at s = 1:
//! the head t ∈ (0, 1) with s = t^{2/α}, and the tail w ∈ (0, 1) with
//! 1/s = w^q, q = 2/(1 − α). On the tail the algebraic decay and the
//! Jacobian cancel exactly, leaving the constant factor αq/2.

use crate::error::{GpiError, Result};
use crate::linalg::{cholesky_matrix, lemma_2_3_schur, CorrelationMatrix, Matrix, SymMatrix};
use crate::quadrature::{integrate_fallible, Tolerance};
use crate::specfun::ln_gamma_pos;

use super::closed::{abs_moment_1d, isserlis_even_moment, nabeya_bivariate};

/// Auxiliary vector Y with covariance (Σ⁻¹ + 2T)⁻¹.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedGaussian {
    pub base: CorrelationMatrix,
    pub tilt: Vec<f64>,
    pub cov: SymMatrix,
    pub var_diag: Vec<f64>,
    pub rho_t: SymMatrix,
}

/// Builds the tilted Gaussian for a diagonal tilt T ≥ 0.
pub fn tilted(sigma: &CorrelationMatrix, tilt: &[f64]) -> Result<TiltedGaussian> {
    let n = sigma.n();
    if tilt.len() != n {
        return Err(GpiError::Invalid(format!("tilt has {} entries, Σ is {n}x{n}", tilt.len())));
    }
    if tilt.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(GpiError::Invalid("tilt entries must be finite and non-negative".into()));
    }
    let sigma_inv = sigma.matrix().inverse_named("Σ")?;
    let mut precision = sigma_inv.add(&Matrix::diag(tilt).scale(2.0));
    precision = precision.symmetrized();
    let factor = cholesky_matrix(&precision)
        .map_err(|e| GpiError::numeric(format!("Σ⁻¹ + 2T is not positive definite: {e}"), f64::NAN))?;
    let mut cov = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, v) in factor.solve(&e).into_iter().enumerate() {
            cov[(i, j)] = v;
        }
    }
    let cov = SymMatrix::symmetrize(&cov)?;
    let var_diag = cov.diagonal();
    let mut rho = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rho[(i, j)] = cov.get(i, j) / (var_diag[i] * var_diag[j]).sqrt();
            }
        }
    }
    if tilt[n - 1] == 0.0 && var_diag[n - 1] > 1.0 + 1e-12 {
        return Err(GpiError::Consistency(format!(
            "untilted last coordinate has tilted variance {} > 1",
            var_diag[n - 1]
        )));
    }
    Ok(TiltedGaussian {
        base: sigma.clone(),
        tilt: tilt.to_vec(),
        cov,
        var_diag,
        rho_t: SymMatrix::symmetrize(&rho)?,
    })
}

/// Var(Yₙ) = [1 + 2 t′(T₁⁻¹ + 2(Σ₁ − tt′))⁻¹ t]⁻¹ for Σ = [[Σ₁, t], [t′, 1]]
/// and a tilt T = diag(T₁, 0) with T₁ > 0.
pub fn tilted_var_last(sigma: &CorrelationMatrix, t1: &[f64]) -> Result<f64> {
    let n = sigma.n();
    if t1.len() + 1 != n {
        return Err(GpiError::Invalid(format!("T₁ needs {} entries, got {}", n - 1, t1.len())));
    }
    if t1.iter().any(|t| !(*t > 0.0)) {
        return Err(GpiError::Invalid("T₁ entries must be positive".into()));
    }
    let schur = lemma_2_3_schur(sigma)?;
    let m = n - 1;
    let mut mat = schur.matrix().scale(2.0);
    for i in 0..m {
        mat[(i, i)] += 1.0 / t1[i];
    }
    let factor = cholesky_matrix(&mat)
        .map_err(|e| GpiError::Consistency(format!("T₁⁻¹ + 2(Σ₁ − tt′) failed Cholesky: {e}")))?;
    let t: Vec<f64> = (0..m).map(|i| sigma.rho(i, m)).collect();
    Ok(1.0 / (1.0 + 2.0 * factor.inv_quadratic_form(&t)))
}

/// The moment left after the tilt has absorbed the negative exponents.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Inner {
    Unit,
    Single(f64),
    Pair(f64, f64),
    Even(Vec<u32>),
}

impl Inner {
    pub(crate) fn classify(alphas: &[f64]) -> Result<Inner> {
        match alphas {
            [] => Ok(Inner::Unit),
            [a] => Ok(Inner::Single(*a)),
            [a, b] => Ok(Inner::Pair(*a, *b)),
            _ => match super::even_halves(alphas) {
                Some(m) => Ok(Inner::Even(m)),
                None => Err(GpiError::Capability(format!(
                    "inner moment over {} coordinates needs all even integer exponents",
                    alphas.len()
                ))),
            },
        }
    }

    fn eval(&self, cov: &Matrix) -> Result<f64> {
        match self {
            Inner::Unit => Ok(1.0),
            Inner::Single(a) => abs_moment_1d(*a, cov[(0, 0)]),
            Inner::Pair(a, b) => {
                let (v2, v3) = (cov[(0, 0)], cov[(1, 1)]);
                let rho = (cov[(0, 1)] / (v2 * v3).sqrt()).clamp(-1.0, 1.0);
                nabeya_bivariate(*a, *b, v2, v3, rho)
            }
            Inner::Even(m) => isserlis_even_moment(&SymMatrix::symmetrize(cov)?, m),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Head(f64),
    Tail(f64),
}

/// E[∏_{i∈N}|X_i|^{−α_i} · ∏_{j∈P}|X_j|^{β_j}] as a |N|-fold tilt integral.
#[derive(Clone, Debug)]
pub(crate) struct TiltIntegral {
    neg: Vec<f64>,
    sig_nn: Matrix,
    sig_np: Matrix,
    sig_pp: Matrix,
    inner: Inner,
}

/// Per-axis relative tolerances, outermost first.
pub(crate) fn default_tolerances(k: usize) -> Vec<f64> {
    match k {
        1 => vec![1e-11],
        2 => vec![1e-9, 1e-10],
        _ => vec![1e-6, 1e-7, 1e-8],
    }
}

pub(crate) const MAX_TILT_AXES: usize = 3;

impl TiltIntegral {
    /// `neg` pairs a coordinate with its negated exponent α ∈ (0, 1);
    /// `pos` pairs a coordinate with an exponent > −1 handled in closed form.
    pub(crate) fn new(sigma: &CorrelationMatrix, neg: &[(usize, f64)], pos: &[(usize, f64)]) -> Result<Self> {
        if neg.is_empty() {
            return Err(GpiError::Invalid("tilt integral needs a negative exponent".into()));
        }
        if neg.len() > MAX_TILT_AXES {
            return Err(GpiError::Capability(format!(
                "{} negative exponents exceed the quadrature limit of {MAX_TILT_AXES}",
                neg.len()
            )));
        }
        for &(_, a) in neg {
            if !(a > 0.0 && a < 1.0) {
                return Err(GpiError::Domain(format!("negated exponent {a} outside (0, 1)")));
            }
        }
        let ni: Vec<usize> = neg.iter().map(|p| p.0).collect();
        let pi: Vec<usize> = pos.iter().map(|p| p.0).collect();
        let inner = Inner::classify(&pos.iter().map(|p| p.1).collect::<Vec<_>>())?;
        let full = sigma.matrix();
        let pick = |rows: &[usize], cols: &[usize]| {
            let mut m = Matrix::zeros(rows.len(), cols.len());
            for (a, &i) in rows.iter().enumerate() {
                for (b, &j) in cols.iter().enumerate() {
                    m[(a, b)] = full[(i, j)];
                }
            }
            m
        };
        Ok(TiltIntegral {
            neg: neg.iter().map(|p| p.1).collect(),
            sig_nn: pick(&ni, &ni),
            sig_np: pick(&ni, &pi),
            sig_pp: pick(&pi, &pi),
            inner,
        })
    }

    pub(crate) fn axes(&self) -> usize {
        self.neg.len()
    }

    /// det(M′)^{−1/2} · inner moment, with M′ the row-rescaled I + 2TΣ_NN.
    fn integrand(&self, pieces: &[Piece]) -> Result<f64> {
        let k = self.neg.len();
        let mut m = Matrix::zeros(k, k);
        let mut d = vec![0.0; k];
        for i in 0..k {
            match pieces[i] {
                Piece::Head(s) => {
                    for j in 0..k {
                        m[(i, j)] = 2.0 * s * self.sig_nn[(i, j)];
                    }
                    m[(i, i)] += 1.0;
                    d[i] = 2.0 * s;
                }
                Piece::Tail(v) => {
                    for j in 0..k {
                        m[(i, j)] = 2.0 * self.sig_nn[(i, j)];
                    }
                    m[(i, i)] += v;
                    d[i] = 2.0;
                }
            }
        }
        let det = m.det();
        if !(det > 0.0) {
            return Err(GpiError::numeric("tilted determinant is not positive", det));
        }
        let g = if self.inner == Inner::Unit {
            1.0
        } else {
            // cov_PP = Σ_PP − Σ_PN M′⁻¹ diag(d) Σ_NP
            let p = self.sig_pp.nrows();
            let mut rhs = self.sig_np.clone();
            for i in 0..k {
                for j in 0..p {
                    rhs[(i, j)] *= d[i];
                }
            }
            let x = m.inverse_named("tilted system")?.matmul(&rhs);
            let cov = self.sig_pp.sub(&self.sig_np.transpose().matmul(&x));
            self.inner.eval(&cov)?
        };
        Ok(g / det.sqrt())
    }

    fn integrate_axis(&self, axis: usize, pieces: [Piece; MAX_TILT_AXES], tols: &[f64]) -> Result<(f64, f64)> {
        let k = self.neg.len();
        let alpha = self.neg[axis];
        let q = 2.0 / (1.0 - alpha);
        let tol = Tolerance::relative(tols[axis]);
        let eval = |piece: Piece| -> Result<f64> {
            let mut local = pieces;
            local[axis] = piece;
            if axis + 1 == k {
                self.integrand(&local[..k])
            } else {
                Ok(self.integrate_axis(axis + 1, local, tols)?.0)
            }
        };
        let head = integrate_fallible(|t| eval(Piece::Head(t.powf(2.0 / alpha))), 0.0, 1.0, tol)?;
        let tail = integrate_fallible(|w| eval(Piece::Tail(w.powf(q))), 0.0, 1.0, tol)?;
        let scale = 0.5 * alpha * q;
        let value = head.value + scale * tail.value;
        let mut err = head.error + scale * tail.error;
        if axis + 1 < k {
            err += tols[axis + 1] * value.abs();
        }
        Ok((value, err))
    }

    /// Value and absolute error estimate.
    pub(crate) fn evaluate(&self, tols: &[f64]) -> Result<(f64, f64)> {
        let (raw, err) = self.integrate_axis(0, [Piece::Head(0.0); MAX_TILT_AXES], tols)?;
        let norm: f64 = self.neg.iter().map(|a| -ln_gamma_pos(1.0 + 0.5 * a)).sum::<f64>().exp();
        Ok((raw * norm, err * norm))
    }
}

/// (1/Γ(1+α/2)) ∫₀^∞ (1 + 2t^{2/α})^{−1/2} dt, which equals E|X|^{−α} for X ~ N(0, 1).
pub fn gamma_representation_1d(alpha: f64) -> Result<(f64, f64)> {
    let ti = TiltIntegral::new(&CorrelationMatrix::identity(1), &[(0, alpha)], &[])?;
    ti.evaluate(&default_tolerances(1))
}
