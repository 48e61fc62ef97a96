//! Dense real-matrix kernel: storage, Cholesky factorization, quadratic
//! forms and weighted moments.
//!
//! Everything downstream (hat values, Mahalanobis distances, the MCD search,
//! the modified-design quadratic forms) is built on the two types here.
//! Matrices are small (p in the tens) so storage is dense row-major and all
//! factorizations are plain O(p^3) loops.

use thiserror::Error;

/// Relative pivot tolerance: a Cholesky pivot no larger than
/// `DEFAULT_RANK_TOL * max diagonal` declares rank deficiency.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("matrix dimensions must be at least 1x1 (got {rows}x{cols})")]
    EmptyShape { rows: usize, cols: usize },
    #[error("entry length {len} does not match {rows}x{cols}")]
    LengthMismatch { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
}

/// Cholesky failure report: `column` is the 0-based index of the first
/// column whose pivot fell at or below the tolerance.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("matrix is rank deficient at column {} (pivot {pivot:.3e}, threshold {threshold:.3e})", column + 1)]
pub struct RankDeficiency {
    pub column: usize,
    pub pivot: f64,
    pub threshold: f64,
}

/// Dense real matrix, row-major storage, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(MatrixError::LengthMismatch { rows, cols, len: data.len() });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be at least 1x1");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            if r.len() != p {
                return Err(MatrixError::LengthMismatch { rows: n, cols: p, len: r.len() });
            }
            data.extend_from_slice(r);
        }
        Matrix::new(n, p, data)
    }

    /// Build from column vectors (all of equal length).
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let p = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        if p == 0 || n == 0 {
            return Err(MatrixError::EmptyShape { rows: n, cols: p });
        }
        let mut m = Matrix::zeros(n, p);
        for (j, c) in cols.iter().enumerate() {
            if c.len() != n {
                return Err(MatrixError::LengthMismatch { rows: n, cols: p, len: c.len() });
            }
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        if let Some(k) = m.data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite { row: k / p, col: k % p });
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// New matrix keeping only the listed columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        assert!(!idx.is_empty(), "select_columns needs at least one column");
        let mut m = Matrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                m.set(i, k, self.get(i, j));
            }
        }
        m
    }

    /// Gram matrix X'X.
    pub fn gram(&self) -> Matrix {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..p {
                    let v = g.get(a, b) + ra * r[b];
                    g.set(a, b, v);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.set(a, b, g.get(b, a));
            }
        }
        g
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                m[j] += v;
            }
        }
        let n = self.rows as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Sample covariance with divisor n-1.
    pub fn sample_covariance(&self) -> Matrix {
        let ones = vec![1u8; self.rows];
        weighted_moments(self, &ones)
            .expect("n >= 2 rows required for a sample covariance")
            .1
    }
}

/// Symmetric positive-definite matrix with a cached lower Cholesky factor.
///
/// Stores the lower triangle of A once plus the factor L with L L' = A, so
/// quadratic forms and log-determinants never form an explicit inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPosDef {
    order: usize,
    lower: Vec<f64>, // packed rows of A's lower triangle
    chol: Vec<f64>,  // packed rows of L
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

impl SymmetricPosDef {
    /// Factor a symmetric matrix, reading only its lower triangle.
    ///
    /// Fails with the first column whose pivot is `<= tol * max diagonal`,
    /// which signals a singular design or a singular covariance.
    pub fn from_matrix(a: &Matrix, tol: f64) -> Result<Self, RankDeficiency> {
        assert_eq!(a.rows(), a.cols(), "matrix must be square");
        assert!(tol >= 0.0, "tolerance must be nonnegative");
        let p = a.rows();
        let mut lower = vec![0.0; p * (p + 1) / 2];
        for i in 0..p {
            for j in 0..=i {
                lower[packed(i, j)] = a.get(i, j);
            }
        }
        let max_diag = (0..p).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
        let threshold = tol * max_diag;

        let mut chol = vec![0.0; p * (p + 1) / 2];
        for j in 0..p {
            let mut pivot = lower[packed(j, j)];
            for k in 0..j {
                pivot -= chol[packed(j, k)] * chol[packed(j, k)];
            }
            if pivot <= threshold {
                return Err(RankDeficiency { column: j, pivot, threshold });
            }
            let ljj = pivot.sqrt();
            chol[packed(j, j)] = ljj;
            for i in (j + 1)..p {
                let mut s = lower[packed(i, j)];
                for k in 0..j {
                    s -= chol[packed(i, k)] * chol[packed(j, k)];
                }
                chol[packed(i, j)] = s / ljj;
            }
        }
        Ok(SymmetricPosDef { order: p, lower, chol })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Entry A[i,j] (symmetric read).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.lower[packed(i, j)]
        } else {
            self.lower[packed(j, i)]
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let p = self.order;
        let mut m = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                m.set(i, j, self.entry(i, j));
            }
        }
        m
    }

    /// v' A^{-1} v via one forward triangular solve: ||L^{-1} v||^2.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.order, "vector length must match order");
        let mut z = vec![0.0; self.order];
        for i in 0..self.order {
            let mut s = v[i];
            for k in 0..i {
                s -= self.chol[packed(i, k)] * z[k];
            }
            z[i] = s / self.chol[packed(i, i)];
        }
        z.iter().map(|x| x * x).sum()
    }

    /// log det A = 2 sum log L_ii.
    pub fn log_det(&self) -> f64 {
        (0..self.order)
            .map(|i| self.chol[packed(i, i)].ln())
            .sum::<f64>()
            * 2.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MomentsError {
    #[error("weight vector length {got} does not match {expected} rows")]
    WeightLength { expected: usize, got: usize },
    #[error("weights must be 0 or 1 (weight {value} at row {row})")]
    NonBinaryWeight { row: usize, value: u8 },
    #[error("need at least 2 active weights, got {active}")]
    TooFewActive { active: usize },
}

/// Weighted mean and covariance with binary weights and divisor (sum w) - 1.
///
/// A zero-variance column is allowed here; positive definiteness is the
/// caller's concern.
pub fn weighted_moments(x: &Matrix, w: &[u8]) -> Result<(Vec<f64>, Matrix), MomentsError> {
    if w.len() != x.rows() {
        return Err(MomentsError::WeightLength { expected: x.rows(), got: w.len() });
    }
    if let Some(row) = w.iter().position(|&v| v > 1) {
        return Err(MomentsError::NonBinaryWeight { row, value: w[row] });
    }
    let active: usize = w.iter().map(|&v| v as usize).sum();
    if active < 2 {
        return Err(MomentsError::TooFewActive { active });
    }

    let p = x.cols();
    let mut mean = vec![0.0; p];
    for i in 0..x.rows() {
        if w[i] == 1 {
            for (j, v) in x.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
    }
    mean.iter_mut().for_each(|v| *v /= active as f64);

    let mut cov = Matrix::zeros(p, p);
    let mut dev = vec![0.0; p];
    for i in 0..x.rows() {
        if w[i] == 0 {
            continue;
        }
        for (j, v) in x.row(i).iter().enumerate() {
            dev[j] = v - mean[j];
        }
        for a in 0..p {
            for b in a..p {
                let v = cov.get(a, b) + dev[a] * dev[b];
                cov.set(a, b, v);
            }
        }
    }
    let denom = (active - 1) as f64;
    for a in 0..p {
        for b in a..p {
            let v = cov.get(a, b) / denom;
            cov.set(a, b, v);
            cov.set(b, a, v);
        }
    }
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(entries: &[f64], p: usize) -> SymmetricPosDef {
        let m = Matrix::new(p, p, entries.to_vec()).unwrap();
        SymmetricPosDef::from_matrix(&m, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn cholesky_identity() {
        let s = spd(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(s.entry(i, j), expect);
            }
        }
        assert_eq!(s.log_det(), 0.0);
    }

    #[test]
    fn cholesky_two_by_two() {
        // [[4,2],[2,2]] = L L' with L = [[2,0],[1,1]]
        let s = spd(&[4.0, 2.0, 2.0, 2.0], 2);
        assert!((s.chol[packed(0, 0)] - 2.0).abs() < 1e-15);
        assert!((s.chol[packed(1, 0)] - 1.0).abs() < 1e-15);
        assert!((s.chol[packed(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cholesky_rank_deficient_names_column() {
        let m = Matrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let err = SymmetricPosDef::from_matrix(&m, DEFAULT_RANK_TOL).unwrap_err();
        assert_eq!(err.column, 1); // second column
        assert!(err.to_string().contains("column 2"));
    }

    #[test]
    fn quad_form_identity() {
        let s = spd(&[1.0, 0.0, 0.0, 1.0], 2);
        assert!((s.quad_form(&[3.0, 4.0]) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn quad_form_diagonal() {
        let s = spd(&[4.0, 0.0, 0.0, 1.0], 2);
        assert!((s.quad_form(&[2.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quad_form_dense_two_by_two() {
        // inv([[4,2],[2,2]]) = [[0.5,-0.5],[-0.5,1.0]]; (1,1) form = 0.5
        let s = spd(&[4.0, 2.0, 2.0, 2.0], 2);
        assert!((s.quad_form(&[1.0, 1.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn log_det_values() {
        assert!((spd(&[4.0, 0.0, 0.0, 1.0], 2).log_det() - 4.0f64.ln()).abs() < 1e-12);
        // det([[4,2],[2,2]]) = 8 - 4 = 4
        assert!((spd(&[4.0, 2.0, 2.0, 2.0], 2).log_det() - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn weighted_moments_zero_weight_drops_outlier() {
        let x = Matrix::new(3, 1, vec![1.0, 3.0, 100.0]).unwrap();
        let (mean, cov) = weighted_moments(&x, &[1, 1, 0]).unwrap();
        assert!((mean[0] - 2.0).abs() < 1e-15);
        assert!((cov.get(0, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_moments_all_ones() {
        // mean 104/3, covariance 57642/18 (divisor n-1 = 2)
        let x = Matrix::new(3, 1, vec![1.0, 3.0, 100.0]).unwrap();
        let (mean, cov) = weighted_moments(&x, &[1, 1, 1]).unwrap();
        assert!((mean[0] - 104.0 / 3.0).abs() < 1e-12);
        assert!((cov.get(0, 0) - 57642.0 / 18.0).abs() < 1e-9);
    }

    #[test]
    fn weighted_moments_too_few_active() {
        let x = Matrix::new(3, 1, vec![1.0, 3.0, 100.0]).unwrap();
        assert!(matches!(
            weighted_moments(&x, &[1, 0, 0]),
            Err(MomentsError::TooFewActive { active: 1 })
        ));
    }

    #[test]
    fn matrix_rejects_non_finite() {
        let err = Matrix::new(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert_eq!(err, MatrixError::NonFinite { row: 0, col: 1 });
    }
}
