//! Truncated bosonic Fock space over finitely many modes.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;

use crate::numerics::cmat::{cdot, cnorm, CMat, C64, I, ONE, ZERO};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FockError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("one-particle operator is not self-adjoint (residual {0:.3e})")]
    NotSelfAdjoint(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Occupation-number basis with at most `cap` bosons in `modes` modes.
///
/// States are ordered by total boson number, then lexicographically, so every
/// sector "at most k bosons" is a prefix of the basis.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: usize,
    cap: usize,
    basis: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn layer(modes: usize, total: u32) -> Vec<Vec<u32>> {
    if modes == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in layer(modes - 1, total - first) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

impl FockSpace {
    pub fn new(modes: usize, cap: usize) -> Result<Self, FockError> {
        if modes == 0 || cap == 0 {
            return Err(FockError::Precondition("modes and cap must be at least 1".into()));
        }
        let mut basis = Vec::with_capacity(binomial(modes + cap, cap));
        for n in 0..=cap as u32 {
            basis.extend(layer(modes, n));
        }
        let index = basis.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        Ok(Self { modes, cap, basis, index })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.basis[i]
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    pub fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim()];
        v[0] = ONE;
        v
    }

    /// Number of basis states carrying at most `k` bosons.
    pub fn sector_dim(&self, k: usize) -> usize {
        binomial(self.modes + k.min(self.cap), k.min(self.cap))
    }

    pub fn particle_number(&self, i: usize) -> u32 {
        self.basis[i].iter().sum()
    }

    fn check_vec(&self, f: &[C64]) -> Result<(), FockError> {
        if f.len() != self.modes {
            return Err(FockError::DimensionMismatch(format!("vector of length {} for {} modes", f.len(), self.modes)));
        }
        Ok(())
    }

    /// a*_i with creations out of the top layer dropped.
    pub fn create_mode(&self, mode: usize) -> CMat {
        let mut m = CMat::zeros(self.dim(), self.dim());
        for (j, occ) in self.basis.iter().enumerate() {
            if occ.iter().sum::<u32>() as usize >= self.cap {
                continue;
            }
            let mut up = occ.clone();
            up[mode] += 1;
            let i = self.index[&up];
            m.set(i, j, C64::new((up[mode] as f64).sqrt(), 0.0));
        }
        m
    }

    pub fn annihilate_mode(&self, mode: usize) -> CMat {
        self.create_mode(mode).transpose()
    }

    pub fn number(&self) -> CMat {
        let mut m = CMat::zeros(self.dim(), self.dim());
        for i in 0..self.dim() {
            m.set(i, i, C64::new(self.particle_number(i) as f64, 0.0));
        }
        m
    }

    /// Restricts an operator to the sector with at most `k` bosons.
    pub fn compress(&self, op: &CMat, k: usize) -> CMat {
        let n = self.sector_dim(k);
        CMat::from_fn(n, n, |i, j| op.get(i, j))
    }
}

/// Whether the ladder operator raises or lowers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// a*(f) = Σ fᵢ a*ᵢ or a(f) = Σ fᵢ aᵢ; both are linear in f and a(f)* = a*(f̄).
pub fn ladder(space: &FockSpace, f: &[C64], kind: Ladder) -> Result<CMat, FockError> {
    space.check_vec(f)?;
    let dim = space.dim();
    let mut m = CMat::zeros(dim, dim);
    for (mode, &c) in f.iter().enumerate() {
        if c == ZERO {
            continue;
        }
        for (j, occ) in space.basis.iter().enumerate() {
            if occ.iter().sum::<u32>() as usize >= space.cap {
                continue;
            }
            let mut up = occ.clone();
            up[mode] += 1;
            let i = space.index[&up];
            let amp = (up[mode] as f64).sqrt();
            match kind {
                Ladder::Create => m.add_at(i, j, c * amp),
                Ladder::Annihilate => m.add_at(j, i, c * amp),
            }
        }
    }
    Ok(m)
}

/// Applies a*(f) or a(f) to a state without forming the matrix.
pub fn apply_ladder(space: &FockSpace, f: &[C64], kind: Ladder, v: &[C64]) -> Result<Vec<C64>, FockError> {
    space.check_vec(f)?;
    if v.len() != space.dim() {
        return Err(FockError::DimensionMismatch(format!("state of length {} for dimension {}", v.len(), space.dim())));
    }
    let mut out = vec![ZERO; space.dim()];
    for (j, occ) in space.basis.iter().enumerate() {
        if occ.iter().sum::<u32>() as usize >= space.cap {
            continue;
        }
        for (mode, &c) in f.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let mut up = occ.clone();
            up[mode] += 1;
            let i = space.index[&up];
            let amp = c * (up[mode] as f64).sqrt();
            match kind {
                Ladder::Create => out[i] += amp * v[j],
                Ladder::Annihilate => out[j] += amp * v[i],
            }
        }
    }
    Ok(out)
}

/// dΓ(h) = Σ hᵢⱼ a*ᵢ aⱼ.
pub fn dgamma(space: &FockSpace, h: &CMat) -> Result<CMat, FockError> {
    if h.rows != space.modes || h.cols != space.modes {
        return Err(FockError::DimensionMismatch(format!("{}x{} one-particle matrix", h.rows, h.cols)));
    }
    let resid = (h - &h.adjoint()).frobenius();
    if resid > 1e-12 {
        return Err(FockError::NotSelfAdjoint(resid));
    }
    Ok(dgamma_unchecked(space, h))
}

/// Σ hᵢⱼ a*ᵢ aⱼ for any square h (no self-adjointness requirement).
pub fn dgamma_unchecked(space: &FockSpace, h: &CMat) -> CMat {
    let dim = space.dim();
    let mut m = CMat::zeros(dim, dim);
    for (col, occ) in space.basis.iter().enumerate() {
        for j in 0..space.modes {
            if occ[j] == 0 {
                continue;
            }
            let lower = (occ[j] as f64).sqrt();
            for i in 0..space.modes {
                let hij = h.get(i, j);
                if hij == ZERO {
                    continue;
                }
                let mut next = occ.clone();
                next[j] -= 1;
                next[i] += 1;
                let raise = (next[i] as f64).sqrt();
                let row = space.index[&next];
                m.add_at(row, col, hij * lower * raise);
            }
        }
    }
    m
}

/// Φ(f) = (a*(f̄)+a(f))/√2 and Π(f) = i(a*(f̄)−a(f))/√2.
pub fn segal_field(space: &FockSpace, f: &[C64]) -> Result<(CMat, CMat), FockError> {
    let fbar: Vec<C64> = f.iter().map(|z| z.conj()).collect();
    let cr = ladder(space, &fbar, Ladder::Create)?;
    let an = ladder(space, f, Ladder::Annihilate)?;
    let phi = (&cr + &an).scale_re(1.0 / SQRT_2);
    let pi = (&cr - &an).scale(I / SQRT_2);
    Ok((phi, pi))
}

fn real_vec(f: &[f64]) -> Vec<C64> {
    f.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// ⟨Ω, e^{zΦ(f)} Ω⟩ by the exponential series truncated after `terms` powers.
pub fn vacuum_moment(space: &FockSpace, f: &[f64], z: C64, terms: usize) -> Result<C64, FockError> {
    if terms > 2 * space.cap {
        return Err(FockError::Precondition(format!("{terms} series terms exceed twice the particle cap {}", space.cap)));
    }
    let (phi, _) = segal_field(space, &real_vec(f))?;
    let omega = space.vacuum();
    let mut v = omega.clone();
    let mut sum = ONE;
    let mut coeff = ONE;
    for n in 1..=terms {
        v = phi.matvec(&v);
        coeff = coeff * z / n as f64;
        sum += coeff * cdot(&omega, &v);
    }
    Ok(sum)
}

/// :Φ(f)ⁿ: = Σ_k n!/(k!(n−2k)!) Φ(f)^{n−2k} (−‖f‖²/4)^k.
pub fn wick_power(space: &FockSpace, f: &[f64], n: usize) -> Result<CMat, FockError> {
    if n > space.cap {
        return Err(FockError::Precondition(format!("Wick power {n} exceeds particle cap {}", space.cap)));
    }
    let (phi, _) = segal_field(space, &real_vec(f))?;
    let dim = space.dim();
    let norm2: f64 = f.iter().map(|x| x * x).sum();
    let mut powers = vec![CMat::identity(dim)];
    for k in 1..=n {
        powers.push(powers[k - 1].matmul(&phi));
    }
    let mut out = CMat::zeros(dim, dim);
    for k in 0..=n / 2 {
        let c = factorial(n) / (factorial(k) * factorial(n - 2 * k)) * (-norm2 / 4.0).powi(k as i32);
        out = &out + &powers[n - 2 * k].scale_re(c);
    }
    Ok(out)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Largest |⟨e_i,(A − c·1)e_j⟩| over the sector with at most `k` bosons.
pub fn sector_residual(space: &FockSpace, op: &CMat, c: C64, k: usize) -> f64 {
    let n = space.sector_dim(k);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { c } else { ZERO };
            worst = worst.max((op.get(i, j) - target).norm());
        }
    }
    worst
}

/// ‖ψ‖ for a state vector.
pub fn state_norm(v: &[C64]) -> f64 {
    cnorm(v)
}
