//! Dense symmetric-matrix kernel: Cholesky, determinants, the two
//! Schur-complement block inverses, the Σ₁ − tt′ reduction and the
//! Sylvester determinant reduction used by the tilted-Gaussian integrals.

mod matrix;

use serde::{Deserialize, Serialize};

use crate::error::{GpiError, Result};
pub use matrix::{Matrix, SymMatrix};

/// Smallest admissible Cholesky pivot.
pub const PD_PIVOT_THRESHOLD: f64 = 1e-14;

/// Lower-triangular L with positive diagonal and L L′ = S.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    lower: Matrix,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn n(&self) -> usize {
        self.lower.nrows()
    }

    /// The diagonal entries m_{j,j}.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.lower[(i, i)]).collect()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.lower.matmul(&self.lower.transpose())
    }

    pub fn det(&self) -> f64 {
        self.diagonal().iter().map(|d| d * d).product()
    }

    /// Solves S x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[(i, k)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= l[(k, i)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        y
    }

    /// x′ S⁻¹ x.
    pub fn inv_quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let l = &self.lower;
        let mut y = x.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[(i, k)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        y.iter().map(|v| v * v).sum()
    }

    /// L z: maps a standard normal vector to one with covariance S.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += self.lower[(i, k)] * z[k];
            }
            out[i] = acc;
        }
    }
}

/// Cholesky factorisation; fails with `NotPositiveDefinite` when a pivot
/// drops to `PD_PIVOT_THRESHOLD` or below.
pub fn cholesky(s: &SymMatrix) -> Result<CholeskyFactor> {
    cholesky_matrix(s.matrix())
}

pub(crate) fn cholesky_matrix(s: &Matrix) -> Result<CholeskyFactor> {
    let n = s.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = s[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > PD_PIVOT_THRESHOLD) {
            return Err(GpiError::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Ok(CholeskyFactor { lower: l })
}

/// Positive-definite symmetric matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrix", into = "SymMatrix")]
pub struct CorrelationMatrix(SymMatrix);

impl TryFrom<SymMatrix> for CorrelationMatrix {
    type Error = GpiError;
    fn try_from(s: SymMatrix) -> Result<Self> {
        CorrelationMatrix::new(s)
    }
}

impl From<CorrelationMatrix> for SymMatrix {
    fn from(c: CorrelationMatrix) -> Self {
        c.0
    }
}

impl CorrelationMatrix {
    pub fn new(s: SymMatrix) -> Result<Self> {
        for i in 0..s.n() {
            if s.get(i, i) != 1.0 {
                return Err(GpiError::Invalid(format!(
                    "correlation matrix needs a unit diagonal (entry {i} is {})",
                    s.get(i, i)
                )));
            }
            for j in 0..i {
                if s.get(i, j).abs() > 1.0 {
                    return Err(GpiError::Invalid(format!("|ρ_{i}{j}| exceeds 1")));
                }
            }
        }
        cholesky(&s)?;
        Ok(CorrelationMatrix(s))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        CorrelationMatrix::new(SymMatrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        CorrelationMatrix(SymMatrix::identity(n))
    }

    /// [[1, ρ], [ρ, 1]].
    pub fn bivariate(rho: f64) -> Result<Self> {
        CorrelationMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]])
    }

    /// [[1, a, b], [a, 1, c], [b, c, 1]].
    pub fn trivariate(a: f64, b: f64, c: f64) -> Result<Self> {
        CorrelationMatrix::from_rows(&[vec![1.0, a, b], vec![a, 1.0, c], vec![b, c, 1.0]])
    }

    /// Rescales a covariance matrix to unit diagonal; also returns the standard deviations.
    pub fn from_covariance(cov: &SymMatrix) -> Result<(Self, Vec<f64>)> {
        let sd: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
        if sd.iter().any(|s| !(*s > 0.0)) {
            return Err(GpiError::Invalid("covariance diagonal must be positive".into()));
        }
        let n = cov.n();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = if i == j { 1.0 } else { cov.get(i, j) / (sd[i] * sd[j]) };
            }
        }
        Ok((CorrelationMatrix::new(SymMatrix::symmetrize(&m)?)?, sd))
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &Matrix {
        self.0.matrix()
    }

    pub fn select(&self, idx: &[usize]) -> CorrelationMatrix {
        // principal submatrices of a PD matrix stay PD
        CorrelationMatrix(self.0.select(idx))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n()).all(|i| (0..i).all(|j| self.rho(i, j) == 0.0))
    }
}

/// A square matrix cut into [[A, B], [C, D]] with A of size k×k.
#[derive(Clone, Debug)]
pub struct BlockPartition {
    pub k: usize,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl BlockPartition {
    pub fn new(m: &Matrix, k: usize) -> Result<Self> {
        let n = m.nrows();
        if !m.is_square() || k == 0 || k >= n {
            return Err(GpiError::Invalid(format!("cannot split a {n}x{} matrix at {k}", m.ncols())));
        }
        Ok(BlockPartition {
            k,
            a: m.block(0, k, 0, k),
            b: m.block(0, k, k, n),
            c: m.block(k, n, 0, k),
            d: m.block(k, n, k, n),
        })
    }

    pub fn assemble(&self) -> Matrix {
        Matrix::from_blocks(&self.a, &self.b, &self.c, &self.d)
    }
}

/// Inverse through the Schur complement of A, D − C A⁻¹ B.
pub fn block_inverse_lower(p: &BlockPartition) -> Result<SymMatrix> {
    let a_inv = p.a.inverse_named("leading block A")?;
    let schur = p.d.sub(&p.c.matmul(&a_inv).matmul(&p.b));
    let s_inv = schur.inverse_named("Schur complement D − C A⁻¹ B")?;
    let a_inv_b = a_inv.matmul(&p.b);
    let c_a_inv = p.c.matmul(&a_inv);
    let top_left = a_inv.add(&a_inv_b.matmul(&s_inv).matmul(&c_a_inv));
    let top_right = a_inv_b.matmul(&s_inv).scale(-1.0);
    let bottom_left = s_inv.matmul(&c_a_inv).scale(-1.0);
    SymMatrix::symmetrize(&Matrix::from_blocks(&top_left, &top_right, &bottom_left, &s_inv))
}

/// Inverse through the Schur complement of D, A − B D⁻¹ C.
pub fn block_inverse_upper(p: &BlockPartition) -> Result<SymMatrix> {
    let d_inv = p.d.inverse_named("trailing block D")?;
    let schur = p.a.sub(&p.b.matmul(&d_inv).matmul(&p.c));
    let s_inv = schur.inverse_named("Schur complement A − B D⁻¹ C")?;
    let b_d_inv = p.b.matmul(&d_inv);
    let d_inv_c = d_inv.matmul(&p.c);
    let top_right = s_inv.matmul(&b_d_inv).scale(-1.0);
    let bottom_left = d_inv_c.matmul(&s_inv).scale(-1.0);
    let bottom_right = d_inv.add(&d_inv_c.matmul(&s_inv).matmul(&b_d_inv));
    SymMatrix::symmetrize(&Matrix::from_blocks(&s_inv, &top_right, &bottom_left, &bottom_right))
}

/// Splits off the last coordinate, Σ = [[Σ₁, t], [t′, 1]], and returns
/// Σ₁ − t t′ after certifying it positive definite.
pub fn lemma_2_3_schur(s: &CorrelationMatrix) -> Result<SymMatrix> {
    let n = s.n();
    if n < 2 {
        return Err(GpiError::Invalid("need at least two coordinates".into()));
    }
    let m = n - 1;
    let t: Vec<f64> = (0..m).map(|i| s.rho(i, m)).collect();
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = s.rho(i, j) - t[i] * t[j];
        }
    }
    let out = SymMatrix::new(out)?;
    cholesky(&out)?;
    Ok(out)
}

/// Determinant: Cholesky when positive definite, LU otherwise.
pub fn det_sym(s: &SymMatrix) -> f64 {
    match cholesky(s) {
        Ok(f) => f.det(),
        Err(_) => s.matrix().det(),
    }
}

/// det(I_n + 2TΣ) for diagonal T ≥ 0 with T[n][n] = 0, computed on the
/// reduced (n−1)-dimensional system det(I + 2 T₁^{1/2} Σ₁ T₁^{1/2}) and
/// cross-checked against the full n-dimensional determinant.
pub fn sylvester_reduce(sigma: &CorrelationMatrix, tilt: &[f64]) -> Result<f64> {
    let n = sigma.n();
    if tilt.len() != n {
        return Err(GpiError::Invalid(format!("tilt has {} entries, Σ is {n}x{n}", tilt.len())));
    }
    if tilt.iter().any(|t| !(*t >= 0.0)) {
        return Err(GpiError::Invalid("tilt entries must be non-negative".into()));
    }
    if tilt[n - 1] != 0.0 {
        return Err(GpiError::Invalid("the last tilt entry must be zero".into()));
    }
    let full = Matrix::identity(n).add(&Matrix::diag(tilt).matmul(sigma.matrix()).scale(2.0)).det();

    let m = n - 1;
    let root: Vec<f64> = tilt[..m].iter().map(|t| t.sqrt()).collect();
    let mut reduced = Matrix::identity(m);
    for i in 0..m {
        for j in 0..m {
            reduced[(i, j)] += 2.0 * root[i] * sigma.rho(i, j) * root[j];
        }
    }
    let reduced = det_sym(&SymMatrix::symmetrize(&reduced)?);
    if (full - reduced).abs() > 1e-10 * reduced.abs() {
        return Err(GpiError::Consistency(format!(
            "Sylvester reduction: det(I_n + 2TΣ) = {full} but det(I_(n-1) + 2T₁Σ₁) = {reduced}"
        )));
    }
    Ok(reduced)
}

/// (S + I/m) / (1 + 1/m): pulls a positive semi-definite correlation matrix
/// strictly inside the cone.
pub fn shrink_to_pd(s: &SymMatrix, m: f64) -> Result<CorrelationMatrix> {
    if !(m > 0.0) {
        return Err(GpiError::Invalid(format!("shrinkage parameter must be positive, got {m}")));
    }
    let n = s.n();
    let denom = 1.0 + 1.0 / m;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = if i == j { 1.0 } else { s.get(i, j) / denom };
        }
    }
    CorrelationMatrix::new(SymMatrix::new(out)?)
}
