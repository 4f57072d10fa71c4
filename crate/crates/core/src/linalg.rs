//! Minimal dense linear algebra for the small systems arising in
//! meta-regression (at most a handful of coefficients).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("SingularMatrix: pivot below tolerance at column {0}")]
    Singular(usize),
    #[error("ShapeMismatch: {0}")]
    Shape(String),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        debug_assert!(rows.iter().all(|row| row.len() == c));
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, factor: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Quadratic form `x' A x` for a square matrix and conforming vector.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        debug_assert_eq!(self.rows, x.len());
        let mut total = 0.0;
        for i in 0..self.rows {
            let inner: f64 = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
            total += x[i] * inner;
        }
        total
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pivot_tolerance(a: &Mat) -> f64 {
    let max_abs = a.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    max_abs.max(f64::MIN_POSITIVE) * f64::EPSILON * 64.0
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
///
/// Returns the solution together with `log |det A|`, which the REML
/// objective needs anyway.
pub fn solve(a: &Mat, b: &[f64]) -> Result<(Vec<f64>, f64), LinalgError> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(LinalgError::Shape(format!(
            "solve expects square system, got {}x{} with rhs {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let tol = pivot_tolerance(a);
    let mut aug = vec![0.0; n * (n + 1)];
    for i in 0..n {
        aug[i * (n + 1)..i * (n + 1) + n].copy_from_slice(a.row(i));
        aug[i * (n + 1) + n] = b[i];
    }

    let mut log_det = 0.0;
    for col in 0..n {
        let mut max_row = col;
        let mut max_val = aug[col * (n + 1) + col].abs();
        for row in (col + 1)..n {
            let v = aug[row * (n + 1) + col].abs();
            if v > max_val {
                max_val = v;
                max_row = row;
            }
        }
        if !(max_val > tol) {
            return Err(LinalgError::Singular(col));
        }
        if max_row != col {
            for j in col..=n {
                aug.swap(col * (n + 1) + j, max_row * (n + 1) + j);
            }
        }
        let pivot = aug[col * (n + 1) + col];
        log_det += pivot.abs().ln();
        for row in (col + 1)..n {
            let factor = aug[row * (n + 1) + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..=n {
                let upper = aug[col * (n + 1) + j];
                aug[row * (n + 1) + j] -= factor * upper;
            }
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = aug[i * (n + 1) + n];
        for j in (i + 1)..n {
            sum -= aug[i * (n + 1) + j] * x[j];
        }
        x[i] = sum / aug[i * (n + 1) + i];
    }
    Ok((x, log_det))
}

/// Invert a square matrix by Gauss-Jordan elimination with partial pivoting.
pub fn invert(a: &Mat) -> Result<Mat, LinalgError> {
    let n = a.rows;
    if a.cols != n {
        return Err(LinalgError::Shape(format!("invert expects square matrix, got {}x{}", a.rows, a.cols)));
    }
    let tol = pivot_tolerance(a);
    let cols = 2 * n;
    let mut aug = vec![0.0; n * cols];
    for i in 0..n {
        aug[i * cols..i * cols + n].copy_from_slice(a.row(i));
        aug[i * cols + n + i] = 1.0;
    }

    for col in 0..n {
        let mut max_row = col;
        let mut max_val = aug[col * cols + col].abs();
        for row in (col + 1)..n {
            let v = aug[row * cols + col].abs();
            if v > max_val {
                max_val = v;
                max_row = row;
            }
        }
        if !(max_val > tol) {
            return Err(LinalgError::Singular(col));
        }
        if max_row != col {
            for j in 0..cols {
                aug.swap(col * cols + j, max_row * cols + j);
            }
        }
        let pivot = aug[col * cols + col];
        for j in 0..cols {
            aug[col * cols + j] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[row * cols + col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..cols {
                let upper = aug[col * cols + j];
                aug[row * cols + j] -= factor * upper;
            }
        }
    }

    let mut inv = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, aug[i * cols + n + j]);
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = Mat::from_rows(vec![vec![4.0, 1.0], vec![1.0, 3.0]]);
        let (x, log_det) = solve(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
        assert!((log_det - 11.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let a = Mat::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(LinalgError::Singular(_))));
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Mat::from_rows(vec![vec![2.0, 0.5, 0.0], vec![0.5, 3.0, 1.0], vec![0.0, 1.0, 1.5]]);
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    v += a.at(i, k) * inv.at(k, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }
}
