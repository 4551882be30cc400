use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{GpiError, Result};

/// Dense row-major real matrix. Dimensions here never exceed a dozen, so
/// everything is plain `Vec<f64>` with O(n³) kernels.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(GpiError::Invalid("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn column(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).take(self.rows).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Sub-block with rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        let mut out = Matrix::zeros(r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out[(i - r0, j - c0)] = self[(i, j)];
            }
        }
        out
    }

    /// Principal submatrix on the given index set.
    pub fn select(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    /// Assembles [[a, b], [c, d]].
    pub fn from_blocks(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Matrix {
        let (k, m) = (a.rows, d.rows);
        let mut out = Matrix::zeros(k + m, k + m);
        for i in 0..k + m {
            for j in 0..k + m {
                out[(i, j)] = match (i < k, j < k) {
                    (true, true) => a[(i, j)],
                    (true, false) => b[(i, j - k)],
                    (false, true) => c[(i - k, j)],
                    (false, false) => d[(i - k, j - k)],
                };
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn symmetrized(&self) -> Matrix {
        let t = self.transpose();
        self.add(&t).scale(0.5)
    }

    /// LU factorisation with partial pivoting; returns None when a pivot is exactly zero.
    fn lu(&self) -> Option<(Matrix, Vec<usize>, f64)> {
        assert!(self.is_square(), "LU of a non-square matrix");
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let (piv, best) = (col..n)
                .map(|r| (r, lu[(r, col)].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    lu.data.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
                sign = -sign;
            }
            let p = lu[(col, col)];
            for r in col + 1..n {
                let f = lu[(r, col)] / p;
                lu[(r, col)] = f;
                for j in col + 1..n {
                    let v = lu[(col, j)];
                    lu[(r, j)] -= f * v;
                }
            }
        }
        Some((lu, perm, sign))
    }

    pub fn det(&self) -> f64 {
        match self.lu() {
            None => 0.0,
            Some((lu, _, sign)) => (0..self.rows).fold(sign, |acc, i| acc * lu[(i, i)]),
        }
    }

    /// Inverse via LU; `what` names the matrix in the error message.
    pub fn inverse_named(&self, what: &str) -> Result<Matrix> {
        let n = self.rows;
        let (lu, perm, _) = self
            .lu()
            .ok_or_else(|| GpiError::Singular(format!("{what} has a zero pivot")))?;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let min_pivot = (0..n).map(|i| lu[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-14 * scale {
            return Err(GpiError::Singular(format!(
                "{what} is numerically singular (pivot {min_pivot:.3e})"
            )));
        }
        let mut inv = Matrix::zeros(n, n);
        for col in 0..n {
            // solve LU x = P e_col
            let mut x: Vec<f64> = perm.iter().map(|&p| if p == col { 1.0 } else { 0.0 }).collect();
            for i in 0..n {
                for k in 0..i {
                    x[i] -= lu[(i, k)] * x[k];
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    x[i] -= lu[(i, k)] * x[k];
                }
                x[i] /= lu[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.inverse_named("matrix")
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.to_rows() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Symmetric matrix; symmetry is exact in storage.
///
/// Serialises as `{"n": 3, "rows": [[...], [...], [...]]}`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SymMatrix(Matrix);

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for SymMatrix {
    type Error = GpiError;
    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows.len() != j.n {
            return Err(GpiError::Invalid(format!(
                "matrix declares n = {} but has {} rows",
                j.n,
                j.rows.len()
            )));
        }
        SymMatrix::from_rows(&j.rows)
    }
}

impl From<SymMatrix> for MatrixJson {
    fn from(s: SymMatrix) -> Self {
        MatrixJson {
            n: s.n(),
            rows: s.0.to_rows(),
        }
    }
}

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(GpiError::Invalid("symmetric matrix must be square".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if !v.is_finite() {
                    return Err(GpiError::Invalid(format!("non-finite entry at ({i}, {j})")));
                }
                if v != m[(j, i)] {
                    return Err(GpiError::Invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Replaces the input by (M + M')/2 before wrapping.
    pub fn symmetrize(m: &Matrix) -> Result<Self> {
        SymMatrix::new(m.symmetrized())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        SymMatrix::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    /// Principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix(self.0.select(idx))
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, ij: (usize, usize)) -> &f64 {
        &self.0[ij]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_determinant_of_small_matrix() {
        let m = Matrix::from_rows(&[vec![4.0, 7.0], vec![2.0, 6.0]]).unwrap();
        assert!((m.det() - 10.0).abs() < 1e-14);
        let inv = m.inverse().unwrap();
        let want = Matrix::from_rows(&[vec![0.6, -0.7], vec![-0.2, 0.4]]).unwrap();
        assert!(inv.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(m.det(), 0.0);
        assert!(matches!(m.inverse_named("B"), Err(GpiError::Singular(s)) if s.contains('B')));
    }

    #[test]
    fn blocks_round_trip() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| (i * 4 + j) as f64).collect()).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let rebuilt = Matrix::from_blocks(&m.block(0, 1, 0, 1), &m.block(0, 1, 1, 4), &m.block(1, 4, 0, 1), &m.block(1, 4, 1, 4));
        assert_eq!(rebuilt, m);
    }

    #[test]
    fn json_schema() {
        let s = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"n":2,"rows":[[1.0,0.5],[0.5,1.0]]}"#);
        let back: SymMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SymMatrix>(r#"{"n":3,"rows":[[1.0]]}"#).is_err());
        assert!(serde_json::from_str::<SymMatrix>(r#"{"n":2,"rows":[[1.0,0.2],[0.3,1.0]]}"#).is_err());
    }
}
