//! Symplectic pairs (S, T) and their Bogoliubov implementers on a truncated Fock space.

use crate::fock::{apply_ladder, factorial, ladder, FockError, FockSpace, Ladder};
use crate::numerics::cmat::{cconj, cdot, cnorm, CMat, C64, ONE, ZERO};
use crate::numerics::{romberg, NumericsError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SymplecticError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pair is not symplectic (largest residual {0:.3e})")]
    NotSymplectic(f64),
    #[error("S is singular")]
    SingularS,
    #[error("‖K₁‖ = {0} is not below one")]
    NormKOneExceedsOne(f64),
    #[error("quadratic series tail {tail:.3e} exceeds tolerance {tol:.3e} at the particle cap")]
    SeriesNonConvergent { tail: f64, tol: f64 },
    #[error("vacuum overlap vanishes")]
    VacuumOverlapZero,
    #[error("generator is not in sp₂ (residual {0:.3e})")]
    GeneratorNotInSp2(f64),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Tolerance used when a routine needs the pair to be in sp.
pub const SP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPair {
    pub s: CMat,
    pub t: CMat,
}

impl SymplecticPair {
    pub fn new(s: CMat, t: CMat) -> Result<Self, SymplecticError> {
        if !s.is_square() || s.rows != t.rows || s.cols != t.cols {
            return Err(SymplecticError::DimensionMismatch(format!(
                "S is {}x{}, T is {}x{}",
                s.rows, s.cols, t.rows, t.cols
            )));
        }
        Ok(Self { s, t })
    }

    pub fn identity(m: usize) -> Self {
        Self { s: CMat::identity(m), t: CMat::zeros(m, m) }
    }

    /// Single-mode squeeze S = cosh θ, T = sinh θ.
    pub fn squeeze(theta: f64) -> Self {
        Self {
            s: CMat::from_real(1, 1, &[theta.cosh()]),
            t: CMat::from_real(1, 1, &[theta.sinh()]),
        }
    }

    /// (S_t, T_t) read off from e^{tA}, A = [[S_gen, T̄_gen], [T_gen, S̄_gen]].
    pub fn from_generator(s_gen: &CMat, t_gen: &CMat, t: f64) -> Result<Self, SymplecticError> {
        generator_residual(s_gen, t_gen)?;
        let (s, tt) = flow(s_gen, t_gen, t);
        Ok(Self { s, t: tt })
    }

    pub fn modes(&self) -> usize {
        self.s.rows
    }
}

/// Frobenius residuals of S*S − T*T − 1, (S̄)*T − (T̄)*S, SS* − (TT*)‾ − 1 and TS* − (ST*)‾.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpResiduals {
    pub values: [f64; 4],
    pub in_sp: bool,
}

impl SpResiduals {
    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &r| m.max(r))
    }
}

pub fn verify_symplectic(pair: &SymplecticPair, tol: f64) -> Result<SpResiduals, SymplecticError> {
    let (s, t) = (&pair.s, &pair.t);
    if !s.is_square() || s.rows != t.rows || s.cols != t.cols {
        return Err(SymplecticError::DimensionMismatch(format!("S is {}x{}, T is {}x{}", s.rows, s.cols, t.rows, t.cols)));
    }
    let id = CMat::identity(s.rows);
    let sh = s.adjoint();
    let th = t.adjoint();
    let r1 = &(&sh.matmul(s) - &th.matmul(t)) - &id;
    let r2 = &s.transpose().matmul(t) - &t.transpose().matmul(s);
    let r3 = &(&s.matmul(&sh) - &t.matmul(&th).conj()) - &id;
    let r4 = &t.matmul(&sh) - &s.matmul(&th).conj();
    let values = [r1.frobenius(), r2.frobenius(), r3.frobenius(), r4.frobenius()];
    let in_sp = values.iter().all(|&r| r <= tol);
    Ok(SpResiduals { values, in_sp })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovCoeffs {
    pub k1: CMat,
    pub k2: CMat,
    pub k3: CMat,
    pub norm_k1: f64,
    /// det(1 − K₁*K₁)^{1/4}
    pub det_factor: f64,
}

pub fn bogoliubov_coeffs(pair: &SymplecticPair) -> Result<BogoliubovCoeffs, SymplecticError> {
    let res = verify_symplectic(pair, SP_TOL)?;
    if !res.in_sp {
        return Err(SymplecticError::NotSymplectic(res.max()));
    }
    let m = pair.modes();
    let sinv = pair.s.inverse().map_err(|_| SymplecticError::SingularS)?;
    let k1 = pair.t.matmul(&sinv);
    let k2 = &CMat::identity(m) - &sinv.adjoint().conj();
    let k3 = sinv.matmul(&pair.t.conj()).scale_re(-1.0);
    let norm_k1 = k1.op_norm();
    if norm_k1 >= 1.0 {
        return Err(SymplecticError::NormKOneExceedsOne(norm_k1));
    }
    let gram = &CMat::identity(m) - &k1.adjoint().matmul(&k1);
    let det = gram.det()?.re;
    Ok(BogoliubovCoeffs { k1, k2, k3, norm_k1, det_factor: det.powf(0.25) })
}

fn check_square(space: &FockSpace, k: &CMat) -> Result<(), SymplecticError> {
    if k.rows != space.modes() || k.cols != space.modes() {
        return Err(SymplecticError::DimensionMismatch(format!("{}x{} coefficient matrix for {} modes", k.rows, k.cols, space.modes())));
    }
    Ok(())
}

/// Δ_K v with Δ_K = Σ Kᵢⱼ a*ᵢ a*ⱼ; pairs leaving the cap are dropped.
pub fn apply_pair_creation(space: &FockSpace, k: &CMat, v: &[C64]) -> Result<Vec<C64>, SymplecticError> {
    check_square(space, k)?;
    let m = space.modes();
    let mut out = vec![ZERO; space.dim()];
    for (col, &amp) in v.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let occ = space.state(col);
        if occ.iter().sum::<u32>() as usize + 2 > space.cap() {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                let kij = k.get(i, j);
                if kij == ZERO {
                    continue;
                }
                let mut next = occ.to_vec();
                next[j] += 1;
                let first = (next[j] as f64).sqrt();
                next[i] += 1;
                let second = (next[i] as f64).sqrt();
                let row = space.index_of(&next).expect("state below cap");
                out[row] += kij * amp * first * second;
            }
        }
    }
    Ok(out)
}

/// Matrix of Δ_K.
pub fn pair_creation(space: &FockSpace, k: &CMat) -> Result<CMat, SymplecticError> {
    check_square(space, k)?;
    let dim = space.dim();
    let mut out = CMat::zeros(dim, dim);
    let mut e = vec![ZERO; dim];
    for col in 0..dim {
        e[col] = ONE;
        let v = apply_pair_creation(space, k, &e)?;
        e[col] = ZERO;
        for (row, z) in v.into_iter().enumerate() {
            if z != ZERO {
                out.set(row, col, z);
            }
        }
    }
    Ok(out)
}

/// Matrix of Δᵃ_K = Σ Kᵢⱼ aᵢ aⱼ, the plain transpose of Δ_K.
pub fn pair_annihilation(space: &FockSpace, k: &CMat) -> Result<CMat, SymplecticError> {
    Ok(pair_creation(space, k)?.transpose())
}

/// Γ(X): a*(f₁)⋯a*(fₙ)Ω ↦ a*(Xf₁)⋯a*(Xfₙ)Ω. Particle number is preserved, so no truncation occurs.
pub fn second_quantize(space: &FockSpace, x: &CMat) -> Result<CMat, SymplecticError> {
    check_square(space, x)?;
    let m = space.modes();
    let dim = space.dim();
    let columns: Vec<Vec<C64>> = (0..m).map(|i| (0..m).map(|r| x.get(r, i)).collect()).collect();
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let occ = space.state(col).to_vec();
        let mut v = space.vacuum();
        let mut norm = 1.0;
        for (mode, &n) in occ.iter().enumerate() {
            for _ in 0..n {
                v = apply_ladder(space, &columns[mode], Ladder::Create, &v)?;
            }
            norm *= factorial(n as usize).sqrt();
        }
        for (row, z) in v.into_iter().enumerate() {
            if z != ZERO {
                out.set(row, col, z / norm);
            }
        }
    }
    Ok(out)
}

// Σₙ Gⁿ/n! for a nilpotent G; stops when the next power vanishes.
fn nilpotent_exp(g: &CMat) -> CMat {
    let n = g.rows;
    let mut out = CMat::identity(n);
    let mut term = CMat::identity(n);
    for k in 1..=n {
        term = term.matmul(g).scale_re(1.0 / k as f64);
        if term.max_abs() == 0.0 {
            break;
        }
        out = &out + &term;
    }
    out
}

#[derive(Debug, Clone)]
pub struct Intertwiner {
    pub matrix: CMat,
    pub coeffs: BogoliubovCoeffs,
    /// det(1 − K₁*K₁)^{−1/2} − ‖exp(−½Δ_{K₁})Ω‖², the weight lost at the cap.
    pub tail: f64,
}

/// U = det(1−K₁*K₁)^{1/4} exp(−½Δ_{K₁}) Γ(1−K₂) exp(−½Δᵃ_{K₃}).
pub fn intertwiner(space: &FockSpace, pair: &SymplecticPair, tail_tol: f64) -> Result<Intertwiner, SymplecticError> {
    let coeffs = bogoliubov_coeffs(pair)?;
    check_square(space, &coeffs.k1)?;
    let m = pair.modes();
    let e1 = nilpotent_exp(&pair_creation(space, &coeffs.k1)?.scale_re(-0.5));
    let gam = second_quantize(space, &(&CMat::identity(m) - &coeffs.k2))?;
    let e3 = nilpotent_exp(&pair_annihilation(space, &coeffs.k3)?.scale_re(-0.5));
    let vac = e1.matvec(&space.vacuum());
    let kept = cnorm(&vac).powi(2);
    let tail = coeffs.det_factor.powi(-2) - kept;
    if tail.abs() > tail_tol {
        return Err(SymplecticError::SeriesNonConvergent { tail, tol: tail_tol });
    }
    let matrix = e1.matmul(&gam).matmul(&e3).scale_re(coeffs.det_factor);
    Ok(Intertwiner { matrix, coeffs, tail })
}

/// b(f) = a*(Tf) + a(Sf) and b*(f) = a*(S̄f) + a(T̄f).
pub fn b_operators(space: &FockSpace, pair: &SymplecticPair, f: &[C64]) -> Result<(CMat, CMat), SymplecticError> {
    let tf = pair.t.matvec(f);
    let sf = pair.s.matvec(f);
    let sbf = pair.s.conj().matvec(f);
    let tbf = pair.t.conj().matvec(f);
    let b = &ladder(space, &tf, Ladder::Create)? + &ladder(space, &sf, Ladder::Annihilate)?;
    let bstar = &ladder(space, &sbf, Ladder::Create)? + &ladder(space, &tbf, Ladder::Annihilate)?;
    Ok((b, bstar))
}

/// Low-particle probe states: every basis vector with at most `depth` bosons.
pub fn probe_count(space: &FockSpace, depth: usize) -> usize {
    space.sector_dim(depth)
}

fn max_column_norm(op: &CMat, cols: usize) -> f64 {
    (0..cols)
        .map(|j| (0..op.rows).map(|i| op.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max)
}

/// max over probes Ψ with ≤ `depth` bosons of ‖(U a*(f) − b*(f) U)Ψ‖.
pub fn intertwine_check(space: &FockSpace, pair: &SymplecticPair, f: &[C64], depth: usize) -> Result<f64, SymplecticError> {
    let u = intertwiner(space, pair, f64::INFINITY)?.matrix;
    let (_, bstar) = b_operators(space, pair, f)?;
    let af = ladder(space, f, Ladder::Create)?;
    let diff = &u.matmul(&af) - &bstar.matmul(&u);
    Ok(max_column_norm(&diff, probe_count(space, depth)))
}

/// As [`intertwine_check`] but with the residual projected onto states below the cap, where
/// the identity holds exactly.
pub fn intertwine_check_subcap(space: &FockSpace, pair: &SymplecticPair, f: &[C64], depth: usize) -> Result<f64, SymplecticError> {
    let u = intertwiner(space, pair, f64::INFINITY)?.matrix;
    let (_, bstar) = b_operators(space, pair, f)?;
    let af = ladder(space, f, Ladder::Create)?;
    let diff = &u.matmul(&af) - &bstar.matmul(&u);
    let keep = space.sector_dim(space.cap() - 1);
    let cut = CMat::from_fn(keep, diff.cols, |i, j| diff.get(i, j));
    Ok(max_column_norm(&cut, probe_count(space, depth)))
}

/// ‖[b(f), b*(g)] − (f̄,g)‖ on the sector with ≤ `depth` bosons.
pub fn ccr_residual(space: &FockSpace, pair: &SymplecticPair, f: &[C64], g: &[C64], depth: usize) -> Result<f64, SymplecticError> {
    let (bf, _) = b_operators(space, pair, f)?;
    let (_, bg) = b_operators(space, pair, g)?;
    let c: C64 = f.iter().zip(g).map(|(x, y)| x * y).sum();
    let comm = &bf.commutator(&bg) - &CMat::scalar(space.dim(), c);
    Ok(max_column_norm(&comm, probe_count(space, depth)))
}

/// Rebuilds a(f) = b(S*f) − b*((T*)‾f) and a*(f) = −b(T*f) + b*((S*)‾f); returns the larger
/// deviation from the direct ladder matrices on the sector with ≤ `depth` bosons.
pub fn inversion_residual(space: &FockSpace, pair: &SymplecticPair, f: &[C64], depth: usize) -> Result<f64, SymplecticError> {
    let sh = pair.s.adjoint();
    let th = pair.t.adjoint();
    let (b1, _) = b_operators(space, pair, &sh.matvec(f))?;
    let (_, bs1) = b_operators(space, pair, &th.conj().matvec(f))?;
    let (b2, _) = b_operators(space, pair, &th.matvec(f))?;
    let (_, bs2) = b_operators(space, pair, &sh.conj().matvec(f))?;
    let a = &b1 - &bs1;
    let astar = &bs2 - &b2;
    let da = &a - &ladder(space, f, Ladder::Annihilate)?;
    let dastar = &astar - &ladder(space, f, Ladder::Create)?;
    let cols = probe_count(space, depth);
    Ok(max_column_norm(&da, cols).max(max_column_norm(&dastar, cols)))
}

/// Pair together with an inhomogeneous shift L, ξ = TL − S̄L̄ and K = TS⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovData {
    pub pair: SymplecticPair,
    pub l: Vec<C64>,
    pub xi: Vec<C64>,
    pub k: CMat,
}

fn shift_of(pair: &SymplecticPair, l: &[C64]) -> Vec<C64> {
    let tl = pair.t.matvec(l);
    let sl = pair.s.conj().matvec(&cconj(l));
    tl.iter().zip(&sl).map(|(a, b)| a - b).collect()
}

impl BogoliubovData {
    pub fn new(pair: SymplecticPair, l: Vec<C64>) -> Result<Self, SymplecticError> {
        if l.len() != pair.modes() {
            return Err(SymplecticError::DimensionMismatch(format!("shift of length {} for {} modes", l.len(), pair.modes())));
        }
        let sinv = pair.s.inverse().map_err(|_| SymplecticError::SingularS)?;
        let xi = shift_of(&pair, &l);
        let k = pair.t.matmul(&sinv);
        Ok(Self { pair, l, xi, k })
    }

    /// Largest deviation of the stored ξ and K from a fresh recomputation.
    pub fn consistency_residual(&self) -> f64 {
        let xi = shift_of(&self.pair, &self.l);
        let dxi = xi.iter().zip(&self.xi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let dk = match self.pair.s.inverse() {
            Ok(sinv) => (&self.pair.t.matmul(&sinv) - &self.k).max_abs(),
            Err(_) => f64::INFINITY,
        };
        dxi.max(dk)
    }
}

/// S_{A,L} = exp(b(L) − b*(L̄)) = exp(a*(ξ) − a(ξ̄)).
pub fn displacement(space: &FockSpace, pair: &SymplecticPair, l: &[C64]) -> Result<CMat, SymplecticError> {
    if l.len() != pair.modes() || l.len() != space.modes() {
        return Err(SymplecticError::DimensionMismatch(format!("shift of length {}", l.len())));
    }
    let res = verify_symplectic(pair, SP_TOL)?;
    if !res.in_sp {
        return Err(SymplecticError::NotSymplectic(res.max()));
    }
    let xi = shift_of(pair, l);
    let gen = &ladder(space, &xi, Ladder::Create)? - &ladder(space, &cconj(&xi), Ladder::Annihilate)?;
    Ok(gen.expm())
}

/// U_{A,L} = S_{A,L} U_A.
pub fn full_bogoliubov(space: &FockSpace, pair: &SymplecticPair, l: &[C64], tail_tol: f64) -> Result<CMat, SymplecticError> {
    let u = intertwiner(space, pair, tail_tol)?;
    Ok(displacement(space, pair, l)?.matmul(&u.matrix))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumOverlaps {
    pub r1: C64,
    pub r2: C64,
    pub r1_closed: C64,
    pub r2_closed: C64,
}

impl VacuumOverlaps {
    pub fn residuals(&self) -> (f64, f64) {
        ((self.r1 - self.r1_closed).norm(), (self.r2 - self.r2_closed).norm())
    }
}

fn vacuum_image(space: &FockSpace, data: &BogoliubovData) -> Result<(Vec<C64>, C64), SymplecticError> {
    let u = full_bogoliubov(space, &data.pair, &data.l, f64::INFINITY)?;
    let phi = u.matvec(&space.vacuum());
    let z = phi[space.vacuum_index()];
    if z.norm() < 1e-300 {
        return Err(SymplecticError::VacuumOverlapZero);
    }
    Ok((phi, z))
}

/// Matrix-side ratios ⟨a*(f)Ω,Φ⟩/⟨Ω,Φ⟩ and ⟨a*(f)a*(g)Ω,Φ⟩/⟨Ω,Φ⟩ for Φ = U_{A,L}Ω,
/// alongside their closed forms in ξ and K.
pub fn vacuum_overlaps(space: &FockSpace, data: &BogoliubovData, f: &[C64], g: &[C64]) -> Result<VacuumOverlaps, SymplecticError> {
    let (phi, z) = vacuum_image(space, data)?;
    let omega = space.vacuum();
    let af = apply_ladder(space, f, Ladder::Create, &omega)?;
    let afg = apply_ladder(space, f, Ladder::Create, &apply_ladder(space, g, Ladder::Create, &omega)?)?;
    let r1 = cdot(&af, &phi) / z;
    let r2 = cdot(&afg, &phi) / z;

    let xi = &data.xi;
    let xib = cconj(xi);
    let kb = data.k.conj();
    let fx = cdot(f, xi);
    let gx = cdot(g, xi);
    let kf = cdot(&kb.matvec(f), &xib);
    let kg = cdot(&kb.matvec(g), &xib);
    let r1_closed = fx + kf;
    let r2_closed = fx * gx + gx * kf + fx * kg + kg * kf - cdot(f, &data.k.matvec(&cconj(g)));
    Ok(VacuumOverlaps { r1, r2, r1_closed, r2_closed })
}

/// For real f and real ξ: (⟨(p + a(f) + a*(f))²Ω, Φ⟩/⟨Ω,Φ⟩, (p+γ)² + (f,(1−K)f)) with γ = (ξ,(1+K)f).
pub fn gamma_check(space: &FockSpace, data: &BogoliubovData, f: &[f64], p: f64) -> Result<(C64, C64), SymplecticError> {
    let (phi, z) = vacuum_image(space, data)?;
    let fc: Vec<C64> = f.iter().map(|&x| C64::new(x, 0.0)).collect();
    let x = &(&ladder(space, &fc, Ladder::Annihilate)? + &ladder(space, &fc, Ladder::Create)?) + &CMat::scalar(space.dim(), C64::new(p, 0.0));
    let xo = x.matvec(&x.matvec(&space.vacuum()));
    let lhs = cdot(&xo, &phi) / z;
    let m = data.k.rows;
    let gamma = cdot(&data.xi, &(&CMat::identity(m) + &data.k).matvec(&fc));
    let quad = cdot(&fc, &(&CMat::identity(m) - &data.k).matvec(&fc));
    Ok((lhs, (gamma + p) * (gamma + p) + quad))
}

/// Partial sums Σ_{n≤N} aₙzⁿ, aₙ = ‖Δ_KⁿΩ‖²/(2ⁿn!)², for N = 0..=terms, and the target det(1 − zK*K)^{−1/2}.
pub fn det_identity_partial_sums(k: &CMat, z: f64, terms: usize) -> Result<(Vec<f64>, f64), SymplecticError> {
    if !k.is_square() {
        return Err(SymplecticError::DimensionMismatch("K must be square".into()));
    }
    let space = FockSpace::new(k.rows, (2 * terms).max(1))?;
    let mut v = space.vacuum();
    let mut sums = vec![1.0];
    let mut acc = 1.0;
    for n in 1..=terms {
        v = apply_pair_creation(&space, k, &v)?;
        let denom = 2f64.powi(n as i32) * factorial(n);
        acc += cnorm(&v).powi(2) / (denom * denom) * z.powi(n as i32);
        sums.push(acc);
    }
    let gram = &CMat::identity(k.rows) - &k.adjoint().matmul(k).scale_re(z);
    let target = gram.det()?.re.powf(-0.5);
    Ok((sums, target))
}

/// ‖S_gen* + S_gen‖ + ‖T_genᵀ − T_gen‖, zero exactly for sp₂ generators.
pub fn generator_residual(s_gen: &CMat, t_gen: &CMat) -> Result<f64, SymplecticError> {
    if !s_gen.is_square() || s_gen.rows != t_gen.rows || s_gen.cols != t_gen.cols {
        return Err(SymplecticError::DimensionMismatch("generator blocks must be square of equal order".into()));
    }
    let r = (&s_gen.adjoint() + s_gen).frobenius() + (&t_gen.transpose() - t_gen).frobenius();
    if r > SP_TOL {
        return Err(SymplecticError::GeneratorNotInSp2(r));
    }
    Ok(r)
}

fn flow(s_gen: &CMat, t_gen: &CMat, t: f64) -> (CMat, CMat) {
    let m = s_gen.rows;
    let tb = t_gen.conj();
    let sb = s_gen.conj();
    let a = CMat::from_fn(2 * m, 2 * m, |i, j| match (i < m, j < m) {
        (true, true) => s_gen.get(i, j),
        (true, false) => tb.get(i, j - m),
        (false, true) => t_gen.get(i - m, j),
        (false, false) => sb.get(i - m, j - m),
    })
    .scale_re(t);
    let e = a.expm();
    let s = CMat::from_fn(m, m, |i, j| e.get(i, j));
    let tt = CMat::from_fn(m, m, |i, j| e.get(i + m, j));
    (s, tt)
}

/// Local exponent θ(t) = ∫₀ᵗ τᵣ dr of a one-parameter subgroup, τᵣ = ½ Im tr(T_gen* Tᵣ Sᵣ⁻¹).
#[derive(Debug, Clone)]
pub struct LocalExponent {
    s_gen: CMat,
    t_gen: CMat,
    grid: usize,
    pub tau_samples: Vec<f64>,
    pub theta_t: f64,
    /// |T_n − T_{n/2}|/3 for the trapezoid values at the requested t.
    pub richardson_error: f64,
}

impl LocalExponent {
    pub fn tau(&self, r: f64) -> f64 {
        let (s, t) = flow(&self.s_gen, &self.t_gen, r);
        match s.inverse() {
            Ok(sinv) => 0.5 * self.t_gen.adjoint().matmul(&t).matmul(&sinv).trace().im,
            Err(_) => f64::NAN,
        }
    }

    fn trapezoid(&self, t: f64, panels: usize) -> f64 {
        let h = t / panels as f64;
        let inner: f64 = (1..panels).map(|i| self.tau(i as f64 * h)).sum();
        h * (0.5 * (self.tau(0.0) + self.tau(t)) + inner)
    }

    /// θ(t) from the trapezoid rule on the grid with one Richardson step.
    pub fn theta(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let fine = self.trapezoid(t, self.grid);
        let coarse = self.trapezoid(t, self.grid / 2);
        (4.0 * fine - coarse) / 3.0
    }

    /// θ(t) by Romberg extrapolation to tolerance `tol`.
    pub fn theta_romberg(&self, t: f64, tol: f64) -> Result<f64, SymplecticError> {
        Ok(romberg(|r| self.tau(r), 0.0, t, self.grid.max(2), tol)?)
    }

    pub fn rho(&self, t: f64, s: f64) -> f64 {
        self.theta(t) + self.theta(s) - self.theta(t + s)
    }
}

pub fn local_exponent(s_gen: &CMat, t_gen: &CMat, t: f64, grid: usize) -> Result<LocalExponent, SymplecticError> {
    generator_residual(s_gen, t_gen)?;
    let grid = grid.max(2) & !1;
    let mut le = LocalExponent {
        s_gen: s_gen.clone(),
        t_gen: t_gen.clone(),
        grid,
        tau_samples: Vec::new(),
        theta_t: 0.0,
        richardson_error: 0.0,
    };
    le.tau_samples = (0..=grid).map(|i| le.tau(t * i as f64 / grid as f64)).collect();
    if t != 0.0 {
        let fine = le.trapezoid(t, grid);
        let coarse = le.trapezoid(t, grid / 2);
        le.theta_t = (4.0 * fine - coarse) / 3.0;
        le.richardson_error = (fine - coarse).abs() / 3.0;
    }
    Ok(le)
}
