//! Small dense complex matrices for Fock-space and symplectic work.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::NumericsError;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn scalar(n: usize, c: C64) -> Self {
        Self::identity(n).scale(c)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, v: &[f64]) -> Self {
        assert_eq!(v.len(), rows * cols);
        Self { rows, cols, data: v.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] += v;
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Commutator AB − BA.
    pub fn commutator(&self, other: &CMat) -> CMat {
        &self.matmul(other) - &other.matmul(self)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMat, NumericsError> {
        if !self.is_square() {
            return Err(NumericsError::DimensionMismatch(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a.get(i, col).norm().total_cmp(&a.get(j, col).norm())).unwrap();
            if a.get(piv, col).norm() <= 1e-14 * scale {
                return Err(NumericsError::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = ONE / a.get(col, col);
            for j in 0..n {
                a.data[col * n + j] *= d;
                inv.data[col * n + j] *= d;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.get(i, col);
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let av = a.data[col * n + j];
                    let iv = inv.data[col * n + j];
                    a.data[i * n + j] -= f * av;
                    inv.data[i * n + j] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Result<C64, NumericsError> {
        if !self.is_square() {
            return Err(NumericsError::DimensionMismatch(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = ONE;
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a.get(i, col).norm().total_cmp(&a.get(j, col).norm())).unwrap();
            let p = a.get(piv, col);
            if p == ZERO {
                return Ok(ZERO);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            det *= p;
            for i in col + 1..n {
                let f = a.get(i, col) / p;
                for j in col..n {
                    let v = a.get(col, j);
                    a.data[i * n + j] -= f * v;
                }
            }
        }
        Ok(det)
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    pub fn expm(&self) -> CMat {
        assert!(self.is_square());
        let n = self.rows;
        let norm = self.frobenius();
        let mut squarings = 0;
        let mut s = 1.0;
        while norm * s > 0.5 {
            s *= 0.5;
            squarings += 1;
        }
        let a = self.scale_re(s);
        let mut result = CMat::identity(n);
        let mut term = CMat::identity(n);
        for k in 1..40 {
            term = term.matmul(&a).scale_re(1.0 / k as f64);
            result = &result + &term;
            if term.frobenius() <= 1e-18 * result.frobenius() {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }

    /// Spectral norm via power iteration on A*A.
    pub fn op_norm(&self) -> f64 {
        let ah = self.adjoint();
        let mut x = vec![C64::new(1.0 / (self.cols as f64).sqrt(), 0.0); self.cols];
        let mut est = 0.0;
        for _ in 0..10_000 {
            let y = ah.matvec(&self.matvec(&x));
            let ny = cnorm(&y);
            if ny == 0.0 {
                return 0.0;
            }
            let next = ny.sqrt();
            x = y.iter().map(|z| z / ny).collect();
            if (next - est).abs() <= 1e-14 * next {
                return next;
            }
            est = next;
        }
        est
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    // ⟨a, b⟩ antilinear in the first slot
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn cnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn cconj(a: &[C64]) -> Vec<C64> {
    a.iter().map(|z| z.conj()).collect()
}
