//! Birman-Schwinger analysis for −Δ/(2m) + V in three dimensions: s-wave kernels, critical
//! masses, the Lieb lower bound, and coupling thresholds for binding.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dispersion::{polarization, CutoffProfile, DispersionError};
use crate::numerics::linalg::dot;
use crate::numerics::{op_norm, sym_eigenvalues, NumericsError, Quadrature, SymMatrix};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BindingError {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("energy E = {0} must be ≤ 0")]
    PositiveEnergy(f64),
    #[error("grid too coarse: diagonal cells dominate ({0} cells)")]
    GridTooCoarse(usize),
    #[error("m = {m} is not below the critical mass {m_c}")]
    MassAboveCritical { m: f64, m_c: f64 },
    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Radial potential V ≤ 0 in d = 3.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// V = −V0 on r < R.
    SphericalWell { v0: f64, r: f64 },
    /// Piecewise-linear V(r) through the nodes, zero beyond the last node.
    Tabulated { r: Vec<f64>, v: Vec<f64> },
}

impl PotentialSpec {
    pub fn well(v0: f64, r: f64) -> Result<Self, BindingError> {
        if !(v0 >= 0.0 && v0.is_finite()) || !(r > 0.0 && r.is_finite()) {
            return Err(BindingError::InvalidPotential(format!("well V0 = {v0}, R = {r}")));
        }
        Ok(Self::SphericalWell { v0, r })
    }

    pub fn tabulated(r: Vec<f64>, v: Vec<f64>) -> Result<Self, BindingError> {
        if r.len() < 2 || r.len() != v.len() {
            return Err(BindingError::InvalidPotential("need at least two (r, V) nodes".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(BindingError::InvalidPotential("radii must be nonnegative and ascending".into()));
        }
        if v.iter().any(|&x| !(x <= 0.0) || !x.is_finite()) {
            return Err(BindingError::InvalidPotential("V must be finite and ≤ 0".into()));
        }
        Ok(Self::Tabulated { r, v })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::SphericalWell { v0, r } => {
                if x < *r {
                    -v0
                } else {
                    0.0
                }
            }
            Self::Tabulated { r, v } => {
                if x < r[0] || x > r[r.len() - 1] {
                    return 0.0;
                }
                let i = r.partition_point(|&t| t <= x).clamp(1, r.len() - 1);
                let t = (x - r[i - 1]) / (r[i] - r[i - 1]);
                v[i - 1] + t * (v[i] - v[i - 1])
            }
        }
    }

    /// Radius beyond which V vanishes.
    pub fn range(&self) -> f64 {
        match self {
            Self::SphericalWell { r, .. } => *r,
            Self::Tabulated { r, .. } => r[r.len() - 1],
        }
    }

    /// V_κ(x) = V(x/κ)/κ².
    pub fn scaled(&self, kappa: f64) -> Self {
        match self {
            Self::SphericalWell { v0, r } => Self::SphericalWell { v0: v0 / (kappa * kappa), r: r * kappa },
            Self::Tabulated { r, v } => Self::Tabulated {
                r: r.iter().map(|x| x * kappa).collect(),
                v: v.iter().map(|x| x / (kappa * kappa)).collect(),
            },
        }
    }

    /// c·V.
    pub fn times(&self, c: f64) -> Self {
        match self {
            Self::SphericalWell { v0, r } => Self::SphericalWell { v0: v0 * c, r: *r },
            Self::Tabulated { r, v } => Self::Tabulated { r: r.clone(), v: v.iter().map(|x| x * c).collect() },
        }
    }

    /// ‖V‖_{3/2} = (∫|V|^{3/2} dx)^{2/3}.
    pub fn norm_three_halves(&self, q: &Quadrature) -> Result<f64, BindingError> {
        let integral = match self {
            Self::SphericalWell { v0, r } => 4.0 * PI / 3.0 * r.powi(3) * v0.powf(1.5),
            Self::Tabulated { r, .. } => {
                let mut s = 0.0;
                for w in r.windows(2) {
                    s += crate::numerics::integrate(|x| 4.0 * PI * x * x * self.value(x).abs().powf(1.5), w[0], w[1], q)?;
                }
                s
            }
        };
        Ok(integral.powf(2.0 / 3.0))
    }

    fn is_zero(&self) -> bool {
        match self {
            Self::SphericalWell { v0, .. } => *v0 == 0.0,
            Self::Tabulated { v, .. } => v.iter().all(|&x| x == 0.0),
        }
    }
}

/// s-wave Green function of (−½Δ + |E|) acting on u = rψ: 2 sinh(μr<) e^{−μr>}/μ, μ = √(2|E|).
pub fn swave_green(mu: f64, r: f64, rp: f64) -> f64 {
    let (lo, hi) = if r < rp { (r, rp) } else { (rp, r) };
    if mu * lo < 1e-8 {
        // sinh(μr<)/μ → r<
        return 2.0 * lo * (-mu * hi).exp() * (1.0 + (mu * lo).powi(2) / 6.0);
    }
    // 2 sinh(μr<) e^{−μr>}/μ = (e^{−μ(r>−r<)} − e^{−μ(r>+r<)})/μ
    ((-mu * (hi - lo)).exp() - (-mu * (hi + lo)).exp()) / mu
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

// ∫∫ over [a, a+h]² of the Green function; smooth off the diagonal, split into two triangles on it.
fn cell_integral(mu: f64, a: f64, b: f64, h: f64) -> f64 {
    let mut s = 0.0;
    if a != b {
        for &(x, wx) in &GL4 {
            for &(y, wy) in &GL4 {
                s += wx * wy * swave_green(mu, a + h * (x + 1.0) / 2.0, b + h * (y + 1.0) / 2.0);
            }
        }
        return s * h * h / 4.0;
    }
    // triangle r' < r, Duffy map r = a + h u, r' = a + h u v; symmetric half doubled
    for &(x, wx) in &GL4 {
        let u = (x + 1.0) / 2.0;
        for &(y, wy) in &GL4 {
            let v = (y + 1.0) / 2.0;
            s += wx * wy * u * swave_green(mu, a + h * u, a + h * u * v);
        }
    }
    2.0 * s * h * h / 4.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsOperator {
    pub e: f64,
    /// Cell midpoints on (0, R_max].
    pub nodes: Vec<f64>,
    pub width: f64,
    pub kernel: SymMatrix,
}

impl BsOperator {
    pub fn norm(&self) -> Result<f64, BindingError> {
        Ok(op_norm(|x| self.kernel.matvec(x), self.kernel.order(), 1e-13)?)
    }

    /// Number of eigenvalues of c·K_E above 1.
    pub fn count_above(&self, c: f64) -> Result<usize, BindingError> {
        Ok(sym_eigenvalues(&self.kernel)?.iter().filter(|&&v| c * v > 1.0).count())
    }
}

/// Galerkin matrix of K_E = |V|^{1/2}(h₀ − E)^{−1}|V|^{1/2} on piecewise-constant radial cells.
pub fn bs_kernel(pot: &PotentialSpec, e: f64, grid_size: usize) -> Result<BsOperator, BindingError> {
    if !(e <= 0.0) {
        return Err(BindingError::PositiveEnergy(e));
    }
    if grid_size < 4 {
        return Err(BindingError::GridTooCoarse(grid_size));
    }
    let rmax = pot.range();
    let h = rmax / grid_size as f64;
    let nodes: Vec<f64> = (0..grid_size).map(|i| (i as f64 + 0.5) * h).collect();
    let sv: Vec<f64> = nodes.iter().map(|&r| pot.value(r).abs().sqrt()).collect();
    let mu = (2.0 * -e).sqrt();
    let rows: Vec<Vec<f64>> = (0..grid_size)
        .into_par_iter()
        .map(|i| {
            (0..grid_size)
                .map(|j| if sv[i] == 0.0 || sv[j] == 0.0 { 0.0 } else { sv[i] * sv[j] * cell_integral(mu, i as f64 * h, j as f64 * h, h) / h })
                .collect()
        })
        .collect();
    let kernel = SymMatrix::from_fn(grid_size, |i, j| rows[i][j]);
    for (i, row) in rows.iter().enumerate() {
        let total: f64 = row.iter().sum();
        if total > 0.0 && row[i] > 0.5 * total {
            return Err(BindingError::GridTooCoarse(grid_size));
        }
    }
    Ok(BsOperator { e, nodes, width: h, kernel })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalMass {
    /// ‖K₀‖^{−1} at grid_size.
    pub m_c: f64,
    /// ‖K_{−ε}‖^{−1} at grid_size.
    pub m_eps: f64,
    /// Richardson value of m_c from grid_size/2 and grid_size.
    pub m_c_extrapolated: f64,
    pub grid_size: usize,
}

pub fn critical_mass(pot: &PotentialSpec, eps: f64, grid_size: usize) -> Result<CriticalMass, BindingError> {
    if !(eps >= 0.0) {
        return Err(BindingError::PositiveEnergy(-eps));
    }
    if pot.is_zero() {
        return Ok(CriticalMass { m_c: f64::INFINITY, m_eps: f64::INFINITY, m_c_extrapolated: f64::INFINITY, grid_size });
    }
    let k0 = bs_kernel(pot, 0.0, grid_size)?.norm()?;
    let ke = if eps == 0.0 { k0 } else { bs_kernel(pot, -eps, grid_size)?.norm()? };
    let coarse = bs_kernel(pot, 0.0, (grid_size / 2).max(4))?.norm()?;
    // Galerkin error is second order in the cell width
    let k_ext = k0 + (k0 - coarse) / 3.0;
    Ok(CriticalMass { m_c: 1.0 / k0, m_eps: 1.0 / ke, m_c_extrapolated: 1.0 / k_ext, grid_size })
}

/// ∫_{[−½,½]³} |x|^{−1} dx.
pub const CUBE_INVERSE_DISTANCE: f64 = 2.380_077_363_979_355;

/// Top eigenvalue of K₀ from a direct cubic-grid discretization with kernel 1/(2π|x−y|).
pub fn bs_norm_3d(pot: &PotentialSpec, spacing: f64) -> Result<f64, BindingError> {
    if !(spacing > 0.0) {
        return Err(BindingError::InvalidPotential(format!("spacing {spacing}")));
    }
    let n = (pot.range() / spacing).ceil() as i64;
    let mut pts = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let x = [(i as f64) * spacing, (j as f64) * spacing, (k as f64) * spacing];
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let v = pot.value(r).abs();
                if v > 0.0 {
                    pts.push((x, v.sqrt()));
                }
            }
        }
    }
    let h3 = spacing.powi(3);
    let diag = spacing * spacing * CUBE_INVERSE_DISTANCE / (2.0 * PI);
    let apply = |y: &[f64]| -> Vec<f64> {
        pts.par_iter()
            .enumerate()
            .map(|(a, (xa, sa))| {
                let mut s = diag * sa * sa * y[a];
                for (b, (xb, sb)) in pts.iter().enumerate() {
                    if a != b {
                        let d = ((xa[0] - xb[0]).powi(2) + (xa[1] - xb[1]).powi(2) + (xa[2] - xb[2]).powi(2)).sqrt();
                        s += sa * sb * h3 / (2.0 * PI * d) * y[b];
                    }
                }
                s
            })
            .collect()
    };
    Ok(op_norm(apply, pts.len(), 1e-10)?)
}

/// m_c ≥ (3/(√2 π^{2/3} 4^{5/3}))‖V‖_{3/2}^{−2}.
pub fn lieb_constant() -> f64 {
    3.0 / (2f64.sqrt() * PI.powf(2.0 / 3.0) * 4f64.powf(5.0 / 3.0))
}

pub fn lieb_bound(pot: &PotentialSpec, q: &Quadrature) -> Result<f64, BindingError> {
    let n = pot.norm_three_halves(q)?;
    if n == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(lieb_constant() / (n * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NoGroundState,
    GroundStateLargeScale,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NoGroundState => "no_ground_state",
            Self::GroundStateLargeScale => "ground_state_large_scale",
            Self::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BindingReport {
    pub m_eff: f64,
    pub m_c: f64,
    pub m_eps: f64,
    pub alpha0: f64,
    pub alpha_eps: f64,
    /// Sharp-band cutoff below which no ground state exists; None for other profiles.
    pub lambda_bound: Option<f64>,
    pub verdict: Verdict,
}

/// |α| < α₀ ⇔ m_eff < m_c; |α| > α_ε puts the system on the binding side.
pub fn verdict(alpha: f64, alpha0: f64, alpha_eps: f64) -> Verdict {
    if alpha.abs() < alpha0 {
        Verdict::NoGroundState
    } else if alpha.abs() > alpha_eps {
        Verdict::GroundStateLargeScale
    } else {
        Verdict::Undecided
    }
}

/// α = (((d−1)/d)‖φ̂/ω‖²)^{−1/2}√(m_target − m).
pub fn threshold_coupling(cut: &CutoffProfile, m: f64, m_target: f64, q: &Quadrature) -> Result<f64, BindingError> {
    let n2 = cut.weighted_norm(2, q)?;
    if n2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(((m_target - m).max(0.0) / (polarization(cut.dim()) * n2)).sqrt())
}

pub fn coupling_window(
    cut: &CutoffProfile,
    pot: &PotentialSpec,
    m: f64,
    eps: f64,
    alpha: f64,
    grid_size: usize,
    q: &Quadrature,
) -> Result<BindingReport, BindingError> {
    if cut.dim() != 3 {
        return Err(BindingError::InvalidCutoff("binding analysis is three-dimensional".into()));
    }
    let cm = critical_mass(pot, eps, grid_size)?;
    window_from_masses(cut, m, cm.m_c, cm.m_eps, alpha, q)
}

/// The report for given critical masses; shared with callers that already hold m_c and m_ε.
pub fn window_from_masses(cut: &CutoffProfile, m: f64, m_c: f64, m_eps: f64, alpha: f64, q: &Quadrature) -> Result<BindingReport, BindingError> {
    if !(m < m_c) {
        return Err(BindingError::MassAboveCritical { m, m_c });
    }
    let n2 = cut.weighted_norm(2, q)?;
    let m_eff = m + alpha * alpha * polarization(cut.dim()) * n2;
    let alpha0 = threshold_coupling(cut, m, m_c, q)?;
    let alpha_eps = threshold_coupling(cut, m, m_eps, q)?;
    let lambda_bound = match cut.unit_sharp_band() {
        Some((lo, _)) if alpha != 0.0 => Some(uv_threshold(lo, cut.normalization(), m, m_c, alpha)?.lambda_no_gs),
        _ => None,
    };
    Ok(BindingReport { m_eff, m_c, m_eps, alpha0, alpha_eps, lambda_bound, verdict: verdict(alpha, alpha0, alpha_eps) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UvWindow {
    /// Λ below which m_eff < m_c, from m_eff = m + (8π/3)n²α²(Λ − λ).
    pub lambda_no_gs: f64,
    /// The same threshold with the constant 8/(3π) in place of 3/(8π).
    pub lambda_alt_constant: f64,
    pub note: &'static str,
}

pub fn uv_threshold(lo: f64, norm: f64, m: f64, m_c: f64, alpha: f64) -> Result<UvWindow, BindingError> {
    if !(m < m_c) {
        return Err(BindingError::MassAboveCritical { m, m_c });
    }
    if alpha == 0.0 {
        return Ok(UvWindow { lambda_no_gs: f64::INFINITY, lambda_alt_constant: f64::INFINITY, note: UV_NOTE });
    }
    let gap = (m_c - m) / (alpha * alpha * norm * norm);
    Ok(UvWindow {
        lambda_no_gs: 3.0 / (8.0 * PI) * gap + lo,
        lambda_alt_constant: 8.0 / (3.0 * PI) * gap + lo,
        note: UV_NOTE,
    })
}

const UV_NOTE: &str = "ground state exists for sufficiently large Λ; the threshold Λ_* is not computed";

/// UV window for a sharp band [λ, ·] with critical mass from the potential.
pub fn uv_window(lo: f64, norm: f64, pot: &PotentialSpec, m: f64, alpha: f64, grid_size: usize) -> Result<UvWindow, BindingError> {
    let cm = critical_mass(pot, 0.0, grid_size)?;
    uv_threshold(lo, norm, m, cm.m_c, alpha)
}

/// Rayleigh quotient (x, Kx)/(x, x), used by tests and diagnostics.
pub fn rayleigh(k: &SymMatrix, x: &[f64]) -> f64 {
    dot(x, &k.matvec(x)) / dot(x, x)
}
