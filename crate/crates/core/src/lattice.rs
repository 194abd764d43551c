//! Momentum-lattice approximation: finite oscillator matrices, exact ground energy by
//! eigendecomposition, the rational closed forms, and extrapolation to the continuum energy.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dispersion::{CutoffProfile, DispersionError};
use crate::gse::{energy_breakdown, GseError, ModelParams};
use crate::numerics::linalg::{dot, trace_sqrt, SymMatrix};
use crate::numerics::{integrate, NumericsError, Quadrature};

pub const DEFAULT_CAP: usize = 1500;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimension {dim} exceeds cap {cap}")]
    LatticeTooLarge { dim: usize, cap: usize },
    #[error("φ̂(0) ≠ 0: the origin carries no polarization frame")]
    OriginInSupport,
    #[error("invalid lattice configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gse(#[from] GseError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// How a lattice cell samples the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// φ̂ and ω at the lattice point, cell volume (2π/a)³ as weight.
    Point,
    /// φ̂² and ω averaged over a sub×sub×sub grid inside the cell.
    CellAverage { sub: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub a: f64,
    pub l: f64,
    pub eps_ph: f64,
    pub cap: usize,
    pub sampling: Sampling,
}

impl LatticeConfig {
    pub fn new(a: f64, l: f64, eps_ph: f64) -> Result<Self, LatticeError> {
        let cfg = Self { a, l, eps_ph, cap: DEFAULT_CAP, sampling: Sampling::Point };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Result<Self, LatticeError> {
        self.sampling = sampling;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.l > 0.0 && self.l.is_finite()) {
            return Err(LatticeError::InvalidConfig(format!("a = {}, L = {}", self.a, self.l)));
        }
        if !(self.eps_ph > 0.0 && self.eps_ph.is_finite()) {
            return Err(LatticeError::InvalidConfig(format!("ε_ph = {} must be positive", self.eps_ph)));
        }
        if let Sampling::CellAverage { sub } = self.sampling {
            if sub == 0 {
                return Err(LatticeError::InvalidConfig("empty sub-grid".into()));
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.a
    }

    /// Largest |n_i| with n·(2π/a) inside the max-norm ball of radius 2πL.
    pub fn half_width(&self) -> i64 {
        (self.a * self.l + 1e-12).floor() as i64
    }

    /// ℓ = (2⌊aL⌋+1)³.
    pub fn nominal_points(&self) -> usize {
        (2 * self.half_width() as usize + 1).pow(3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub k: [f64; 3],
    /// ω(l) before the ε_ph shift.
    pub omega: f64,
    /// √(cell weight)·φ̂(l).
    pub amp: f64,
    pub pol: [[f64; 3]; 2],
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Transverse frame: e¹ = (l×ẑ)/|l×ẑ|, e² = l̂×e¹; x̂, ŷ for l along ±ẑ.
pub fn polarization_frame(l: [f64; 3]) -> [[f64; 3]; 2] {
    let r = norm3(l);
    let lhat = [l[0] / r, l[1] / r, l[2] / r];
    let c = cross(l, [0.0, 0.0, 1.0]);
    let cn = norm3(c);
    if cn <= 1e-14 * r {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    }
    let e1 = [c[0] / cn, c[1] / cn, c[2] / cn];
    [e1, cross(lhat, e1)]
}

/// Support-restricted lattice points for `cfg`; the second value is the nominal count ℓ.
pub fn lattice_points(cut: &CutoffProfile, cfg: &LatticeConfig) -> Result<(Vec<LatticePoint>, usize), LatticeError> {
    cfg.validate()?;
    if cut.dim() != 3 {
        return Err(LatticeError::InvalidConfig("lattice approximation is three-dimensional".into()));
    }
    if cut.value(0.0) != 0.0 {
        return Err(LatticeError::OriginInSupport);
    }
    let h = cfg.spacing();
    let (_, hi) = cut.support();
    let reach = ((hi / h).ceil() as i64 + 1).min(cfg.half_width());
    let w = h.powi(3);
    let rows: Vec<Vec<LatticePoint>> = (-reach..=reach)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in -reach..=reach {
                for k in -reach..=reach {
                    let c = [i as f64 * h, j as f64 * h, k as f64 * h];
                    match cfg.sampling {
                        Sampling::Point => {
                            if (i, j, k) == (0, 0, 0) {
                                continue;
                            }
                            let r = norm3(c);
                            let v = cut.value(r);
                            if v != 0.0 {
                                out.push(LatticePoint { k: c, omega: r, amp: w.sqrt() * v, pol: polarization_frame(c) });
                            }
                        }
                        Sampling::CellAverage { sub } => {
                            if let Some((weight, omega)) = cell_average(cut, c, h, sub) {
                                if (i, j, k) == (0, 0, 0) {
                                    // no frame at the origin: split into three axis points
                                    for axis in 0..3 {
                                        let mut dir = [0.0; 3];
                                        dir[axis] = 1.0;
                                        out.push(LatticePoint { k: c, omega, amp: (weight / 3.0).sqrt(), pol: polarization_frame(dir) });
                                    }
                                } else {
                                    out.push(LatticePoint { k: c, omega, amp: weight.sqrt(), pol: polarization_frame(c) });
                                }
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    Ok((rows.into_iter().flatten().collect(), cfg.nominal_points()))
}

// (∫_cell φ̂², φ̂²-weighted mean of |k|) by midpoint sub-sampling; None when φ̂ vanishes on the cell.
fn cell_average(cut: &CutoffProfile, c: [f64; 3], h: f64, sub: usize) -> Option<(f64, f64)> {
    let (lo, hi) = cut.support();
    let near = (0..3).map(|i| (c[i].abs() - h / 2.0).max(0.0).powi(2)).sum::<f64>().sqrt();
    let far = (0..3).map(|i| (c[i].abs() + h / 2.0).powi(2)).sum::<f64>().sqrt();
    if far < lo || near > hi {
        return None;
    }
    let step = h / sub as f64;
    let offs: Vec<f64> = (0..sub).map(|t| -h / 2.0 + (t as f64 + 0.5) * step).collect();
    let (mut s0, mut s1) = (0.0, 0.0);
    for &x in &offs {
        for &y in &offs {
            for &z in &offs {
                let r = ((c[0] + x).powi(2) + (c[1] + y).powi(2) + (c[2] + z).powi(2)).sqrt();
                let v = cut.value(r);
                if v != 0.0 {
                    s0 += v * v;
                    s1 += v * v * r;
                }
            }
        }
    }
    if s0 == 0.0 {
        return None;
    }
    Some((s0 * step.powi(3), s1 / s0))
}

/// A₀ = diag(ω_ε²), coupling vectors v_μ, and f; dense A and P are formed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMatrices {
    pub a0: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    /// α²/m.
    pub coupling: f64,
    pub f: Vec<f64>,
    pub nominal_points: usize,
    pub cap: usize,
}

impl LatticeMatrices {
    /// Direct assembly from diag(A₀) and the coupling vectors.
    pub fn from_parts(a0: Vec<f64>, v: Vec<Vec<f64>>, prm: &ModelParams, cap: usize) -> Result<Self, LatticeError> {
        let dim = a0.len();
        if v.len() != prm.p.len() || v.iter().any(|x| x.len() != dim) {
            return Err(LatticeError::InvalidConfig("coupling vectors do not match A₀ and p".into()));
        }
        if a0.iter().any(|&x| !(x > 0.0)) {
            return Err(LatticeError::InvalidConfig("A₀ must be strictly positive".into()));
        }
        if !(prm.m > 0.0) {
            return Err(LatticeError::InvalidConfig(format!("m = {} must be positive", prm.m)));
        }
        let coupling = prm.alpha * prm.alpha / prm.m;
        let f = woodbury_f(&a0, &v, coupling, prm)?;
        Ok(Self { a0, v, coupling, f, nominal_points: dim / 2, cap })
    }

    pub fn dim(&self) -> usize {
        self.a0.len()
    }

    /// Σ_μ p_μ v_μ.
    fn source(&self, p: &[f64]) -> Vec<f64> {
        source(&self.v, p, self.dim())
    }

    pub fn p_matrix(&self) -> SymMatrix {
        let mut pm = SymMatrix::zeros(self.dim());
        for vm in &self.v {
            pm.add_rank_one(1.0, vm);
        }
        pm
    }

    pub fn a_matrix(&self) -> SymMatrix {
        let mut a = SymMatrix::diag(&self.a0);
        for vm in &self.v {
            a.add_rank_one(self.coupling, vm);
        }
        a
    }

    /// θ = (1/d) Σ_i |v_i|²/ω_i², i.e. ((d−1)/d) Σ_l φ̂(l)²/ω_ε(l)².
    pub fn theta(&self) -> f64 {
        self.xi_sq(0.0)
    }

    /// ξ(s) = (1/d) Σ_i |v_i|²/(s²+ω_i²).
    pub fn xi_sq(&self, s2: f64) -> f64 {
        let d = self.v.len() as f64;
        (0..self.dim()).map(|i| self.weight(i) / (s2 + self.a0[i])).sum::<f64>() / d
    }

    fn weight(&self, i: usize) -> f64 {
        self.v.iter().map(|vm| vm[i] * vm[i]).sum()
    }

    /// Gram matrix (v_μ, (s²+A₀)⁻¹ v_ν).
    pub fn resolvent_gram(&self, s: f64) -> Vec<Vec<f64>> {
        let d = self.v.len();
        (0..d)
            .map(|mu| (0..d).map(|nu| (0..self.dim()).map(|i| self.v[mu][i] * self.v[nu][i] / (s * s + self.a0[i])).sum()).collect())
            .collect()
    }
}

fn source(v: &[Vec<f64>], p: &[f64], dim: usize) -> Vec<f64> {
    let mut u = vec![0.0; dim];
    for (pm, vm) in p.iter().zip(v) {
        for (ui, vi) in u.iter_mut().zip(vm) {
            *ui += pm * vi;
        }
    }
    u
}

// f = (α/m)A⁻¹u with A = A₀ + c VVᵀ, via the rank-d Woodbury identity.
fn woodbury_f(a0: &[f64], v: &[Vec<f64>], c: f64, prm: &ModelParams) -> Result<Vec<f64>, LatticeError> {
    let dim = a0.len();
    let u = source(v, &prm.p, dim);
    if c == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    let a0u: Vec<f64> = u.iter().zip(a0).map(|(x, w)| x / w).collect();
    let d = v.len();
    let a0v: Vec<Vec<f64>> = v.iter().map(|vm| vm.iter().zip(a0).map(|(x, w)| x / w).collect()).collect();
    let small = SymMatrix::from_fn(d, |i, j| dot(&v[i], &a0v[j]) + if i == j { 1.0 / c } else { 0.0 });
    let rhs: Vec<f64> = v.iter().map(|vm| dot(vm, &a0u)).collect();
    let y = small.solve_spd(&rhs)?;
    let scale = prm.alpha / prm.m;
    Ok((0..dim).map(|i| scale * (a0u[i] - (0..d).map(|mu| a0v[mu][i] * y[mu]).sum::<f64>())).collect())
}

/// Assemble the lattice data for the support points of `cut`.
pub fn build(cut: &CutoffProfile, prm: &ModelParams, cfg: &LatticeConfig) -> Result<LatticeMatrices, LatticeError> {
    prm.validate()?;
    if prm.d != 3 {
        return Err(LatticeError::InvalidConfig("lattice approximation is three-dimensional".into()));
    }
    let (points, nominal) = lattice_points(cut, cfg)?;
    let dim = 2 * points.len();
    if dim > cfg.cap {
        return Err(LatticeError::LatticeTooLarge { dim, cap: cfg.cap });
    }
    let mut a0 = Vec::with_capacity(dim);
    let mut v = vec![Vec::with_capacity(dim); 3];
    for pt in &points {
        let w = pt.omega + cfg.eps_ph;
        for e in &pt.pol {
            a0.push(w * w);
            for mu in 0..3 {
                v[mu].push(pt.amp * e[mu]);
            }
        }
    }
    let mut mats = LatticeMatrices::from_parts(a0, v, prm, cfg.cap)?;
    mats.nominal_points = nominal;
    Ok(mats)
}

/// p²/2m − ½(f, Af) + ½ tr(√A − √A₀) from a dense eigendecomposition.
pub fn energy_eigen(mats: &LatticeMatrices, prm: &ModelParams) -> Result<f64, LatticeError> {
    if mats.dim() > mats.cap {
        return Err(LatticeError::LatticeTooLarge { dim: mats.dim(), cap: mats.cap });
    }
    let kinetic = prm.p2() / (2.0 * prm.m);
    if mats.coupling == 0.0 {
        return Ok(kinetic);
    }
    let a = mats.a_matrix();
    let u = mats.source(&prm.p);
    let f: Vec<f64> = a.solve_spd(&u)?.iter().map(|x| x * prm.alpha / prm.m).collect();
    let faf = dot(&f, &a.matvec(&f));
    let tr0: f64 = mats.a0.iter().map(|x| x.sqrt()).sum();
    Ok(kinetic - 0.5 * faf + 0.5 * (trace_sqrt(&a)? - tr0))
}

/// (p²/2m)/(1 + (α²/m)θ) + (1/2π)∫_ℝ (α²/m)s²/(1+(α²/m)ξ(s)) Σ_i |v_i|²/(s²+ω_i²)² ds.
pub fn energy_closed(mats: &LatticeMatrices, prm: &ModelParams, q: &Quadrature) -> Result<f64, LatticeError> {
    let c = mats.coupling;
    let kinetic = prm.p2() / (2.0 * prm.m) / (1.0 + c * mats.theta());
    if c == 0.0 {
        return Ok(kinetic);
    }
    let weights: Vec<f64> = (0..mats.dim()).map(|i| mats.weight(i)).collect();
    let d = mats.v.len() as f64;
    let integrand = |s: f64| {
        let s2 = s * s;
        let (mut xi, mut sum) = (0.0, 0.0);
        for (w, a) in weights.iter().zip(&mats.a0) {
            let r = 1.0 / (s2 + a);
            xi += w * r;
            sum += w * r * r;
        }
        c * s2 / (1.0 + c * xi / d) * sum
    };
    let half = integrate(integrand, 0.0, f64::INFINITY, q)?;
    Ok(kinetic + half / PI)
}

/// ½(f, Af) via the closed quadratic form (p²/2m)(α²/m)θ/(1+(α²/m)θ).
pub fn quadratic_form_closed(mats: &LatticeMatrices, prm: &ModelParams) -> f64 {
    let ct = mats.coupling * mats.theta();
    prm.p2() / (2.0 * prm.m) * ct / (1.0 + ct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMethod {
    Eigen,
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub config: LatticeConfig,
    pub dim: usize,
    pub nominal_points: usize,
    pub energy: f64,
    pub method: EnergyMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub entries: Vec<ScheduleEntry>,
    /// p²/(2m_eff) + g.
    pub target: f64,
    pub gaps: Vec<f64>,
    /// ε_ph → 0 limit per (a, L) stage.
    pub stage_limits: Vec<(f64, f64, f64)>,
    pub extrapolated: f64,
    pub relative_gap: f64,
    /// Gaps shrink as ε_ph decreases within every stage.
    pub monotone_in_eps: bool,
    /// Stage-limit gaps shrink as a grows.
    pub monotone_in_a: bool,
}

/// a ∈ {4, 8, 16} paired with L ∈ {1, 2, 4}, each at ε_ph ∈ {0.5, 0.25, 0.125}, cell-averaged.
pub fn default_schedule() -> Vec<LatticeConfig> {
    let mut out = Vec::new();
    for (a, l) in [(4.0, 1.0), (8.0, 2.0), (16.0, 4.0)] {
        for eps in [0.5, 0.25, 0.125] {
            out.push(LatticeConfig {
                a,
                l,
                eps_ph: eps,
                cap: 4 * DEFAULT_CAP,
                sampling: Sampling::CellAverage { sub: 16 },
            });
        }
    }
    out
}

/// Richardson table for samples at steps h, h/2, h/4, … with error orders `orders`.
pub fn richardson(values: &[f64], orders: &[i32]) -> f64 {
    let mut col = values.to_vec();
    for &p in orders.iter().take(values.len().saturating_sub(1)) {
        let f = 2f64.powi(p) - 1.0;
        col = col.windows(2).map(|w| w[1] + (w[1] - w[0]) / f).collect();
    }
    col[col.len() - 1]
}

/// Evaluate the schedule and extrapolate: Richardson in ε_ph (orders 1, 2) per stage, then in 1/a.
/// Entries at or below `eigen_limit` use the eigendecomposition, the rest the closed form.
pub fn converge_to_ep(
    cut: &CutoffProfile,
    prm: &ModelParams,
    schedule: &[LatticeConfig],
    eigen_limit: usize,
    q: &Quadrature,
) -> Result<Convergence, LatticeError> {
    if schedule.is_empty() {
        return Err(LatticeError::InvalidConfig("empty schedule".into()));
    }
    let target = energy_breakdown(cut, prm, q)?.e_p;
    let entries = schedule
        .par_iter()
        .map(|cfg| {
            let mats = build(cut, prm, cfg)?;
            let (energy, method) = if mats.dim() <= eigen_limit {
                (energy_eigen(&mats, prm)?, EnergyMethod::Eigen)
            } else {
                (energy_closed(&mats, prm, q)?, EnergyMethod::Closed)
            };
            Ok(ScheduleEntry { config: *cfg, dim: mats.dim(), nominal_points: mats.nominal_points, energy, method })
        })
        .collect::<Result<Vec<_>, LatticeError>>()?;
    let gaps: Vec<f64> = entries.iter().map(|e| (e.energy - target).abs()).collect();
    let mut stages: Vec<(f64, f64, Vec<(f64, f64)>)> = Vec::new();
    for e in &entries {
        let key = (e.config.a, e.config.l);
        match stages.iter_mut().find(|s| (s.0, s.1) == key) {
            Some(s) => s.2.push((e.config.eps_ph, e.energy)),
            None => stages.push((key.0, key.1, vec![(e.config.eps_ph, e.energy)])),
        }
    }
    let mut stage_limits = Vec::new();
    let mut monotone_in_eps = true;
    for (a, l, mut pts) in stages {
        pts.sort_by(|x, y| y.0.total_cmp(&x.0));
        let vals: Vec<f64> = pts.iter().map(|p| p.1).collect();
        monotone_in_eps &= vals.windows(2).all(|w| (w[1] - target).abs() <= (w[0] - target).abs());
        stage_limits.push((a, l, richardson(&vals, &[1, 2, 3])));
    }
    stage_limits.sort_by(|x, y| x.0.total_cmp(&y.0));
    let vals: Vec<f64> = stage_limits.iter().map(|s| s.2).collect();
    let monotone_in_a = vals.windows(2).all(|w| (w[1] - target).abs() <= (w[0] - target).abs());
    let extrapolated = richardson(&vals, &A_ORDERS);
    let relative_gap = (extrapolated - target).abs() / target.abs().max(f64::MIN_POSITIVE);
    Ok(Convergence { entries, target, gaps, stage_limits, extrapolated, relative_gap, monotone_in_eps, monotone_in_a })
}

// Stage limits approach the continuum value at first order in the spacing.
const A_ORDERS: [i32; 2] = [1, 2];
