//! Dense symmetric eigenproblems, PSD square roots and power-iteration norms.

use super::NumericsError;

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Builds from the upper triangle of `f(i, j)`, mirroring so symmetry is exact.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Rejects input that is not exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(NumericsError::DimensionMismatch(format!("{n} rows of unequal length")));
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(NumericsError::InvalidInput(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both (i,j) and (j,i).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Adds c·v vᵀ.
    pub fn add_rank_one(&mut self, c: f64, v: &[f64]) {
        assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            let ci = c * v[i];
            for j in 0..self.n {
                self.data[i * self.n + j] += ci * v[j];
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Solves A x = b by Cholesky; fails unless A is positive definite.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(NumericsError::InvalidInput("matrix not positive definite".into()));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[i * n + k] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= l[k * n + i] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        Ok(y)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenvalues in ascending order with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

impl Eigen {
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Q g(Λ) Qᵀ.
    pub fn apply_fn(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let gv: Vec<f64> = self.values.iter().map(|&v| g(v)).collect();
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| gv[k] * self.vectors[k][i] * self.vectors[k][j]).sum())
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymMatrix) -> Result<Eigen, NumericsError> {
    jacobi(a, true)
}

/// Eigenvalues only (skips accumulating rotations).
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>, NumericsError> {
    jacobi(a, false).map(|e| e.values)
}

fn jacobi(a: &SymMatrix, want_vectors: bool) -> Result<Eigen, NumericsError> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut vt = if want_vectors { SymMatrix::identity(n).data } else { Vec::new() };
    let scale = a.frobenius();
    if n == 0 {
        return Ok(Eigen { values: vec![], vectors: vec![] });
    }
    let mut converged = scale == 0.0;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off.sqrt() <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() < 1e-300 || apq.abs() <= 1e-18 * (app.abs() + aqq.abs()) {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                // rows p and q are contiguous; columns mirror them
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let g = m[p * n + k];
                    let h = m[q * n + k];
                    let gp = g - s * (h + g * tau);
                    let hq = h + s * (g - h * tau);
                    m[p * n + k] = gp;
                    m[q * n + k] = hq;
                    m[k * n + p] = gp;
                    m[k * n + q] = hq;
                }
                if want_vectors {
                    let (lo, hi) = vt.split_at_mut(q * n);
                    let rp = &mut lo[p * n..(p + 1) * n];
                    let rq = &mut hi[..n];
                    for (g, h) in rp.iter_mut().zip(rq.iter_mut()) {
                        let gv = *g;
                        let hv = *h;
                        *g = gv - s * (hv + gv * tau);
                        *h = hv + s * (gv - hv * tau);
                    }
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off.sqrt() > 1e-15 * scale {
            return Err(NumericsError::NonConvergence {
                what: "jacobi eigensolver",
                detail: format!("off-diagonal norm {:.3e} after {MAX_SWEEPS} sweeps", off.sqrt()),
            });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = if want_vectors { order.iter().map(|&i| vt[i * n..(i + 1) * n].to_vec()).collect() } else { vec![] };
    Ok(Eigen { values, vectors })
}

/// Q√ΛQᵀ with roundoff-level negative eigenvalues clamped to zero.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix, NumericsError> {
    let e = sym_eigen(a)?;
    let norm = e.spectral_norm();
    check_psd(&e.values, norm)?;
    Ok(e.apply_fn(|v| v.max(0.0).sqrt()))
}

/// tr √A without forming the square root.
pub fn trace_sqrt(a: &SymMatrix) -> Result<f64, NumericsError> {
    let values = sym_eigenvalues(a)?;
    let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    check_psd(&values, norm)?;
    Ok(values.iter().map(|v| v.max(0.0).sqrt()).sum())
}

fn check_psd(values: &[f64], norm: f64) -> Result<(), NumericsError> {
    if let Some(&bad) = values.iter().find(|&&v| v < -1e-12 * norm) {
        return Err(NumericsError::NegativeEigenvalue(bad));
    }
    Ok(())
}

const POWER_ITERATION_CAP: usize = 200_000;

/// Largest eigenvalue of a symmetric positive map by power iteration from the all-ones vector.
pub fn op_norm(apply: impl Fn(&[f64]) -> Vec<f64>, dim: usize, tol: f64) -> Result<f64, NumericsError> {
    if dim == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut prev = f64::NAN;
    for _ in 0..POWER_ITERATION_CAP {
        let y = apply(&x);
        if y.len() != dim {
            return Err(NumericsError::DimensionMismatch(format!("map returned {} entries, expected {dim}", y.len())));
        }
        let rq = dot(&x, &y);
        let ny = dot(&y, &y).sqrt();
        if ny == 0.0 {
            return Ok(0.0);
        }
        if !ny.is_finite() {
            return Err(NumericsError::InvalidInput("map produced non-finite values".into()));
        }
        if (rq - prev).abs() <= tol * rq.abs() {
            return Ok(rq);
        }
        prev = rq;
        x = y.into_iter().map(|v| v / ny).collect();
    }
    Err(NumericsError::NonConvergence { what: "power iteration", detail: format!("cap {POWER_ITERATION_CAP} reached") })
}
