//! Minimal dense linear algebra used by every other module.
//!
//! Everything here is sized for the problem at hand: matrices up to 15×15,
//! Kronecker systems up to 81 unknowns. Direct methods only — LU with partial
//! pivoting, Householder least squares, cyclic Jacobi for symmetric spectra,
//! and a balanced Hessenberg QR iteration for general spectra.

mod eig;
mod ode;

pub use eig::{eig_real_parts, eigenvalues, Eigenvalue};
pub use ode::{rk4_step, rk4_step_into, OdeError, Rk4Scratch};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("dimension mismatch: {op} with {left} and {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("matrix is singular: pivot {pivot:.3e} at elimination step {step} is below 1e-12")]
    SingularPivot { step: usize, pivot: f64 },
    #[error("matrix is rank deficient at column {col} (|r| = {value:.3e})")]
    RankDeficient { col: usize, value: f64 },
    #[error("matrix is not Hurwitz: eigenvalue real part {max_re:.6e} >= 0")]
    NotHurwitz { max_re: f64 },
    #[error("matrix is not symmetric positive definite: {reason}")]
    NotSymmetricPositiveDefinite { reason: String },
    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Pivot magnitude below which elimination declares the matrix singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows, checking shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(NumericError::DimensionMismatch {
                    op: "from_rows",
                    left: format!("row 0 has {c} entries"),
                    right: format!("row {i} has {}", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(NumericError::NonFinite { row: i, col: j });
                }
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Mat::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Result<Mat, NumericError> {
        self.zip_check("add", other)?;
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat, NumericError> {
        self.zip_check("sub", other)?;
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn zip_check(&self, op: &'static str, other: &Mat) -> Result<(), NumericError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericError::DimensionMismatch {
                op,
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }

    /// Standard matrix product.
    pub fn mul(&self, other: &Mat) -> Result<Mat, NumericError> {
        if self.cols != other.rows {
            return Err(NumericError::DimensionMismatch {
                op: "mul",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
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
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, NumericError> {
        if self.cols != v.len() {
            return Err(NumericError::DimensionMismatch {
                op: "matvec",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("len {}", v.len()),
            });
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// Largest absolute entry. Used for residual reports.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self[(i, j)].abs()).sum();
            best = best.max(s);
        }
        best
    }

    pub fn symmetrize(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + self[(j, i)])
        })
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Copy `block` into `self` with its top-left corner at (`row`, `col`).
    pub fn set_block(&mut self, row: usize, col: usize, block: &Mat) {
        assert!(
            row + block.rows <= self.rows && col + block.cols <= self.cols,
            "block {}x{} does not fit at ({row},{col}) in {}x{}",
            block.rows,
            block.cols,
            self.rows,
            self.cols
        );
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(row + i, col + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Mat {
        Mat::from_fn(rows, cols, |i, j| self[(row + i, col + j)])
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[&Mat]) -> Mat {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out[(i * other.rows + p, j * other.cols + q)] = a * other[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// Column-major vectorization, the convention every Kronecker identity
    /// in this crate relies on: vec(A X B) = (Bᵀ ⊗ A) vec(X).
    pub fn vec_cols(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn from_vec_cols(rows: usize, cols: usize, v: &[f64]) -> Mat {
        assert_eq!(v.len(), rows * cols);
        Mat::from_fn(rows, cols, |i, j| v[j * rows + i])
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Infinity norm of a vector.
pub fn vec_inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Euclidean norm of a vector.
pub fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// LU factorization with partial pivoting.
struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

fn lu_factor(a: &Mat) -> Result<Lu, NumericError> {
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= PIVOT_TOL {
            return Err(NumericError::SingularPivot {
                step: k,
                pivot: best,
            });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            perm.swap(k, p);
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / piv;
            lu[(i, k)] = factor;
            for j in k + 1..n {
                lu[(i, j)] -= factor * lu[(k, j)];
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solve `a · x = b` for a square nonsingular `a` and vector right-hand side.
pub fn solve_linear_vec(a: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericError> {
    if !a.is_square() {
        return Err(NumericError::DimensionMismatch {
            op: "solve_linear",
            left: format!("{}x{}", a.rows, a.cols),
            right: "square matrix required".into(),
        });
    }
    if a.rows != b.len() {
        return Err(NumericError::DimensionMismatch {
            op: "solve_linear",
            left: format!("{}x{}", a.rows, a.cols),
            right: format!("rhs len {}", b.len()),
        });
    }
    Ok(lu_factor(a)?.solve_vec(b))
}

/// Solve `a · X = B` column by column.
pub fn solve_linear(a: &Mat, b: &Mat) -> Result<Mat, NumericError> {
    if !a.is_square() {
        return Err(NumericError::DimensionMismatch {
            op: "solve_linear",
            left: format!("{}x{}", a.rows, a.cols),
            right: "square matrix required".into(),
        });
    }
    if a.rows != b.rows {
        return Err(NumericError::DimensionMismatch {
            op: "solve_linear",
            left: format!("{}x{}", a.rows, a.cols),
            right: format!("{}x{}", b.rows, b.cols),
        });
    }
    let lu = lu_factor(a)?;
    let mut out = Mat::zeros(b.rows, b.cols);
    let mut col = vec![0.0; b.rows];
    for j in 0..b.cols {
        for i in 0..b.rows {
            col[i] = b[(i, j)];
        }
        let x = lu.solve_vec(&col);
        for i in 0..b.rows {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

pub fn invert(a: &Mat) -> Result<Mat, NumericError> {
    solve_linear(a, &Mat::identity(a.rows))
}

/// Least-squares solution of an overdetermined `a · x = b` via Householder QR.
pub fn solve_least_squares(a: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericError> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return Err(NumericError::DimensionMismatch {
            op: "least_squares",
            left: format!("{m}x{n}"),
            right: "needs rows >= cols".into(),
        });
    }
    if b.len() != m {
        return Err(NumericError::DimensionMismatch {
            op: "least_squares",
            left: format!("{m}x{n}"),
            right: format!("rhs len {}", b.len()),
        });
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let scale = a.max_abs().max(1.0);
    for k in 0..n {
        let mut norm = 0.0;
        for i in k..m {
            norm += r[(i, k)] * r[(i, k)];
        }
        let norm = norm.sqrt();
        if norm <= PIVOT_TOL * scale {
            return Err(NumericError::RankDeficient {
                col: k,
                value: norm,
            });
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - k];
        v[0] = r[(k, k)] - alpha;
        for i in k + 1..m {
            v[i - k] = r[(i, k)];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            for j in k..n {
                let mut dot = 0.0;
                for i in k..m {
                    dot += v[i - k] * r[(i, j)];
                }
                let f = 2.0 * dot / vtv;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i - k] * y[i];
            }
            let f = 2.0 * dot / vtv;
            for i in k..m {
                y[i] -= f * v[i - k];
            }
        }
        r[(k, k)] = alpha;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    Ok(x)
}

/// Solve the continuous Lyapunov equation `p·a + aᵀ·p = -q` by Kronecker
/// vectorization: (I ⊗ aᵀ + aᵀ ⊗ I) vec(p) = vec(-q).
///
/// `a` must be Hurwitz and `q` symmetric positive definite; the returned `p`
/// is exactly symmetric.
pub fn lyapunov_solve(a: &Mat, q: &Mat) -> Result<Mat, NumericError> {
    if !a.is_square() || !q.is_square() || a.rows != q.rows {
        return Err(NumericError::DimensionMismatch {
            op: "lyapunov",
            left: format!("{}x{}", a.rows, a.cols),
            right: format!("{}x{}", q.rows, q.cols),
        });
    }
    let n = a.rows;
    let max_re = eig_real_parts(a)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re >= 0.0 {
        return Err(NumericError::NotHurwitz { max_re });
    }
    let qs = q.asymmetry();
    if qs > 1e-10 * (1.0 + q.max_abs()) {
        return Err(NumericError::NotSymmetricPositiveDefinite {
            reason: format!("asymmetry {qs:.3e}"),
        });
    }
    let min_eig = sym_eigenvalues(q)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(NumericError::NotSymmetricPositiveDefinite {
            reason: format!("min eigenvalue {min_eig:.3e}"),
        });
    }
    let eye = Mat::identity(n);
    let at = a.transpose();
    let op = eye.kron(&at).add(&at.kron(&eye))?;
    let rhs: Vec<f64> = q.vec_cols().iter().map(|v| -v).collect();
    let sol = solve_linear_vec(&op, &rhs)?;
    let p = Mat::from_vec_cols(n, n, &sol);
    Ok(p.symmetrize())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(a: &Mat) -> Result<Vec<f64>, NumericError> {
    Ok(sym_eig(a)?.0)
}

/// Full symmetric eigendecomposition: (eigenvalues ascending, orthonormal
/// eigenvectors as columns).
pub fn sym_eig(a: &Mat) -> Result<(Vec<f64>, Mat), NumericError> {
    if !a.is_square() {
        return Err(NumericError::DimensionMismatch {
            op: "sym_eig",
            left: format!("{}x{}", a.rows, a.cols),
            right: "square matrix required".into(),
        });
    }
    let n = a.rows;
    let mut m = a.symmetrize();
    let mut v = Mat::identity(n);
    let max_sweeps = 64;
    for _sweep in 0..max_sweeps {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= 1e-14 * (1.0 + m.max_abs()) {
            let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m[(i, i)], i)).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let vecs = Mat::from_fn(n, n, |i, j| v[(i, pairs[j].1)]);
            return Ok((vals, vecs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(NumericError::NoConvergence {
        iterations: max_sweeps,
    })
}

/// Moore–Penrose pseudo-inverse of a symmetric positive semidefinite matrix.
/// Eigenvalues below `tol` (relative to the largest) are treated as zero.
pub fn sym_pseudo_inverse(a: &Mat, tol: f64) -> Result<Mat, NumericError> {
    let (vals, vecs) = sym_eig(a)?;
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let inv = Mat::diag(
        &vals
            .iter()
            .map(|&v| if v.abs() > tol * scale { 1.0 / v } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    vecs.mul(&inv)?.mul(&vecs.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_m() -> Mat {
        Mat::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, -0.5],
            vec![0.0, -0.5, 1.0],
        ])
        .unwrap()
    }

    // Hand Gaussian elimination on the block-diagonal M: the 2x2 block
    // [[2,-0.5],[-0.5,1]] has determinant 7/4, so by the adjugate formula
    // M^-1 = diag(1/3, [[4/7, 2/7], [2/7, 8/7]]).
    fn paper_m_inv() -> Mat {
        Mat::from_rows(&[
            vec![1.0 / 3.0, 0.0, 0.0],
            vec![0.0, 4.0 / 7.0, 2.0 / 7.0],
            vec![0.0, 2.0 / 7.0, 8.0 / 7.0],
        ])
        .unwrap()
    }

    #[test]
    fn identity_times_identity() {
        let i3 = Mat::identity(3);
        assert_eq!(i3.mul(&i3).unwrap(), i3);
    }

    #[test]
    fn mul_dimension_mismatch() {
        let a = Mat::zeros(2, 3);
        let b = Mat::zeros(2, 3);
        assert!(matches!(
            a.mul(&b),
            Err(NumericError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn m_times_m_inverse_is_identity() {
        let prod = paper_m().mul(&paper_m_inv()).unwrap();
        let err = prod.sub(&Mat::identity(3)).unwrap().max_abs();
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn solve_identity() {
        let x = solve_linear_vec(&Mat::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_m_first_column() {
        // First column of M^-1 by the adjugate formula: (1/3, 0, 0).
        let x = solve_linear_vec(&paper_m(), &[1.0, 0.0, 0.0]).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14 && x[2].abs() < 1e-14);
    }

    #[test]
    fn solve_residual_bound() {
        let a = Mat::from_rows(&[
            vec![4.0, 1.0, -2.0],
            vec![1.0, 5.0, 0.5],
            vec![-2.0, 0.5, 3.0],
        ])
        .unwrap();
        let b = vec![1.0, -2.0, 0.25];
        let x = solve_linear_vec(&a, &b).unwrap();
        let ax = a.matvec(&x).unwrap();
        let res = ax
            .iter()
            .zip(&b)
            .fold(0.0_f64, |m, (l, r)| m.max((l - r).abs()));
        assert!(res <= 1e-9 * (1.0 + vec_inf_norm(&b)));
    }

    #[test]
    fn singular_matrix_names_pivot() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        match solve_linear_vec(&a, &[1.0, 1.0]) {
            Err(NumericError::SingularPivot { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected singular pivot, got {other:?}"),
        }
    }

    #[test]
    fn lyapunov_scalar_case() {
        // a = -I, q = 2I  =>  p a + a^T p = -2p = -q  =>  p = I.
        let p =
            lyapunov_solve(&Mat::identity(3).scale(-1.0), &Mat::identity(3).scale(2.0)).unwrap();
        assert!(p.sub(&Mat::identity(3)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn lyapunov_companion_block() {
        // F_i is the companion matrix of (s+1)^3.
        let f = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![-1.0, -3.0, -3.0],
        ])
        .unwrap();
        let p = lyapunov_solve(&f, &Mat::identity(3)).unwrap();
        assert!(p.asymmetry() < 1e-12);
        let res = p
            .mul(&f)
            .unwrap()
            .add(&f.transpose().mul(&p).unwrap())
            .unwrap()
            .add(&Mat::identity(3))
            .unwrap()
            .max_abs();
        assert!(res < 1e-8, "residual {res}");
        let min_eig = sym_eigenvalues(&p).unwrap()[0];
        assert!(min_eig > 0.0, "min eig {min_eig}");
    }

    #[test]
    fn lyapunov_rejects_marginal_matrix() {
        let a = Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(matches!(
            lyapunov_solve(&a, &Mat::identity(2)),
            Err(NumericError::NotHurwitz { .. })
        ));
    }

    #[test]
    fn least_squares_consistent_system() {
        // Overdetermined but consistent: x = (1, -2).
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let b = [1.0, -2.0, -1.0];
        let x = solve_least_squares(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_rank_deficient() {
        let a = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_least_squares(&a, &[1.0, 1.0, 1.0]),
            Err(NumericError::RankDeficient { .. })
        ));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = Mat::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 4.0],
        ])
        .unwrap();
        let (vals, vecs) = sym_eig(&a).unwrap();
        // reconstruct
        let d = Mat::diag(&vals);
        let rec = vecs.mul(&d).unwrap().mul(&vecs.transpose()).unwrap();
        assert!(rec.sub(&a).unwrap().max_abs() < 1e-10);
        // characteristic polynomial check: trace and determinant
        let tr: f64 = vals.iter().sum();
        assert!((tr - 9.0).abs() < 1e-10);
    }

    #[test]
    fn pseudo_inverse_on_adaptation_gain() {
        let q = Mat::diag(&[0.0, 0.5, 0.0]);
        let qp = sym_pseudo_inverse(&q, 1e-12).unwrap();
        assert!(qp.sub(&Mat::diag(&[0.0, 2.0, 0.0])).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn kron_vec_identity() {
        // vec(A X B) = (B^T kron A) vec(X)
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let x = Mat::from_rows(&[vec![0.5, -1.0], vec![2.0, 0.0]]).unwrap();
        let b = Mat::from_rows(&[vec![1.0, -1.0], vec![0.0, 2.0]]).unwrap();
        let lhs = a.mul(&x).unwrap().mul(&b).unwrap().vec_cols();
        let rhs = b.transpose().kron(&a).matvec(&x.vec_cols()).unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).abs() < 1e-12);
        }
    }
}
