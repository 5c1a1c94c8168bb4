//! Small dense linear algebra: symmetric matrices of order at most 3 and
//! row-major rectangular matrices for Jacobians.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

pub const MAX_DIM: usize = 3;

/// Symmetric matrix of order `n <= 3`, stored densely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    n: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl SymMat {
    pub fn zeros(n: usize) -> SymMat {
        assert!((1..=MAX_DIM).contains(&n), "order {n} outside 1..=3");
        SymMat { n, a: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> SymMat {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> SymMat {
        let mut m = SymMat::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.a[i][i] = *v;
        }
        m
    }

    /// Builds from a full row-major square array, symmetrising by averaging.
    pub fn from_rows(rows: &[&[f64]]) -> SymMat {
        let n = rows.len();
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    pub fn scale(&self, s: f64) -> SymMat {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] *= s;
            }
        }
        m
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        debug_assert_eq!(self.n, other.n);
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] += other.a[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        self.add(&other.scale(-1.0))
    }

    /// `v^T A w`.
    pub fn bilinear(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += v[i] * self.a[i][j] * w[j];
            }
        }
        s
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i][i]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i][j] * self.a[i][j];
            }
        }
        math::sqrt(s)
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.n {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Inverse via the adjugate. Fails when `|det|` is negligible against the
    /// matrix scale.
    pub fn inverse(&self) -> Option<SymMat> {
        let det = self.det();
        let scale = self.frobenius();
        if !(det.abs() > 1e-300) || det.abs() <= 1e-14 * math::powf(scale, self.n as f64) {
            return None;
        }
        let a = &self.a;
        let mut m = SymMat::zeros(self.n);
        match self.n {
            1 => m.a[0][0] = 1.0 / a[0][0],
            2 => {
                m.set(0, 0, a[1][1] / det);
                m.set(1, 1, a[0][0] / det);
                m.set(0, 1, -a[0][1] / det);
            }
            _ => {
                m.set(0, 0, (a[1][1] * a[2][2] - a[1][2] * a[1][2]) / det);
                m.set(1, 1, (a[0][0] * a[2][2] - a[0][2] * a[0][2]) / det);
                m.set(2, 2, (a[0][0] * a[1][1] - a[0][1] * a[0][1]) / det);
                m.set(0, 1, (a[0][2] * a[1][2] - a[0][1] * a[2][2]) / det);
                m.set(0, 2, (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det);
                m.set(1, 2, (a[0][1] * a[0][2] - a[0][0] * a[1][2]) / det);
            }
        }
        Some(m)
    }

    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = (0..self.n).map(|j| self.a[i][j] * v[j]).sum();
        }
    }

    /// Leading principal minors, in order.
    pub fn leading_minors(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        for k in 1..=self.n {
            let mut sub = SymMat::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    sub.a[i][j] = self.a[i][j];
                }
            }
            out.push(sub.det());
        }
        out
    }

    /// Eigenvalues in ascending order, from closed-form characteristic roots.
    pub fn eigenvalues(&self) -> [f64; MAX_DIM] {
        let a = &self.a;
        let mut out = [0.0; MAX_DIM];
        match self.n {
            1 => out[0] = a[0][0],
            2 => {
                let (lo, hi) = eig2(a[0][0], a[0][1], a[1][1]);
                out[0] = lo;
                out[1] = hi;
            }
            _ => out = eig3(self),
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()[self.n - 1]
    }
}

fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let rad = math::hypot(0.5 * (a - c), b);
    let det = a * c - b * b;
    // The root of larger magnitude is accurate; recover the other from the determinant.
    if mean >= 0.0 {
        let hi = mean + rad;
        let lo = if hi != 0.0 { det / hi } else { 0.0 };
        (lo, hi)
    } else {
        let lo = mean - rad;
        let hi = if lo != 0.0 { det / lo } else { 0.0 };
        (lo, hi)
    }
}

fn eig3(m: &SymMat) -> [f64; MAX_DIM] {
    let a = &m.a;
    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let mut ev = if off == 0.0 {
        [a[0][0], a[1][1], a[2][2]]
    } else {
        let q = m.trace() / 3.0;
        let p2 = (a[0][0] - q) * (a[0][0] - q)
            + (a[1][1] - q) * (a[1][1] - q)
            + (a[2][2] - q) * (a[2][2] - q)
            + 2.0 * off;
        let p = math::sqrt(p2 / 6.0);
        let mut b = *m;
        for i in 0..3 {
            b.a[i][i] -= q;
        }
        let half_det = (b.scale(1.0 / p).det() * 0.5).clamp(-1.0, 1.0);
        let phi = math::acos(half_det) / 3.0;
        let hi = q + 2.0 * p * math::cos(phi);
        let lo = q + 2.0 * p * math::cos(phi + 2.0 * math::PI / 3.0);
        [lo, 3.0 * q - hi - lo, hi]
    };
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    // Newton polish on det(A - t I); the trigonometric roots lose digits near
    // repeated eigenvalues.
    let scale = m.frobenius().max(1e-300);
    for t in ev.iter_mut() {
        for _ in 0..3 {
            let (f, df) = char_poly3(m, *t);
            if df.abs() <= 1e-10 * scale * scale {
                break;
            }
            let step = f / df;
            if !(step.abs() <= 1e-6 * scale) {
                break;
            }
            *t -= step;
        }
    }
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

/// `det(A - t I)` and its derivative in `t`.
fn char_poly3(m: &SymMat, t: f64) -> (f64, f64) {
    let a = &m.a;
    let c2 = -(a[0][0] + a[1][1] + a[2][2]);
    let c1 = a[0][0] * a[1][1] + a[0][0] * a[2][2] + a[1][1] * a[2][2]
        - a[0][1] * a[0][1]
        - a[0][2] * a[0][2]
        - a[1][2] * a[1][2];
    let c0 = -m.det();
    // det(A - tI) = -(t^3 + c2 t^2 + c1 t + c0)
    let f = -(((t + c2) * t + c1) * t + c0);
    let df = -((3.0 * t + 2.0 * c2) * t + c1);
    (f, df)
}

/// Row-major rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn diag(d: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = *v;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `J^T J` for a Jacobian with at most three columns.
    pub fn gram(&self) -> SymMat {
        let mut g = SymMat::zeros(self.cols);
        for a in 0..self.cols {
            for b in a..self.cols {
                let s = (0..self.rows).map(|i| self.get(i, a) * self.get(i, b)).sum();
                g.set(a, b, s);
            }
        }
        g
    }

    /// Smallest singular value, for at most three columns.
    pub fn min_singular_value(&self) -> f64 {
        math::sqrt(self.gram().min_eigenvalue().max(0.0))
    }
}

/// `J^T H J`: the pullback of the bilinear form `H` through `J`.
pub fn pullback(ambient: &Matrix, jacobian: &Matrix) -> Result<SymMat> {
    if ambient.rows != ambient.cols {
        return Err(Error::DimensionMismatch { expected: ambient.rows, found: ambient.cols });
    }
    if ambient.cols != jacobian.rows {
        return Err(Error::DimensionMismatch { expected: ambient.cols, found: jacobian.rows });
    }
    let m = jacobian.cols;
    if !(1..=MAX_DIM).contains(&m) {
        return Err(Error::DimensionMismatch { expected: MAX_DIM, found: m });
    }
    let n = ambient.rows;
    let mut hj = vec![0.0; n * m];
    for i in 0..n {
        for b in 0..m {
            hj[i * m + b] = (0..n).map(|k| ambient.get(i, k) * jacobian.get(k, b)).sum();
        }
    }
    let mut out = SymMat::zeros(m);
    for a in 0..m {
        for b in a..m {
            let s = (0..n).map(|i| jacobian.get(i, a) * hj[i * m + b]).sum();
            out.set(a, b, s);
        }
    }
    Ok(out)
}
