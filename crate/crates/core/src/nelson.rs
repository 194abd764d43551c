//! Nelson-model binding analytics: field-induced pair potentials, the self-energy constant G,
//! radial cluster energies and the two-cluster stability margin for N = 2.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::binding::PotentialSpec;
use crate::dispersion::{CutoffKind, CutoffProfile, DispersionError};
use crate::numerics::{bessel_j, integrate, sine_integral, sphere_area, NumericsError, Quadrature};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NelsonError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid too coarse: eigenvalue moved by {shift:.3e} under refinement (tolerance {tol:.1e})")]
    GridTooCoarse { shift: f64, tol: f64 },
    #[error("N = {0} is not supported for cluster energies (N = 2 only)")]
    UnsupportedN(usize),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// V_eff(x) = −(α_iα_j/(8π²x))[Si(Λx) − Si(κx)] for λ̂ = (2π)^{−3/2}1_{[κ,Λ]}/√ω in d = 3.
pub fn veff_sharp3d(alpha_i: f64, alpha_j: f64, kappa: f64, cutoff: f64, x: f64) -> f64 {
    let c = alpha_i * alpha_j / (8.0 * PI * PI);
    if x.abs() < 1e-8 {
        // Si(y) = y − y³/18 + …
        let cube = (cutoff.powi(3) - kappa.powi(3)) / 18.0;
        return -c * ((cutoff - kappa) - cube * x * x);
    }
    -c / x * (sine_integral(cutoff * x) - sine_integral(kappa * x))
}

/// λ̂ = (2π)^{−3/2} 1_{[κ,Λ]} ω^{−1/2}.
pub fn rho_profile(kappa: f64, cutoff: f64) -> Result<CutoffProfile, NelsonError> {
    Ok(CutoffProfile::sharp(kappa, cutoff, 3)?.with_normalization((2.0 * PI).powf(-1.5))?.with_power(-0.5))
}

// (κ, Λ) when the profile is exactly the ρ/√ω band used by `veff_sharp3d`.
fn rho_band(cut: &CutoffProfile) -> Option<(f64, f64)> {
    match cut.kind() {
        CutoffKind::Sharp { lo, hi } if cut.dim() == 3 && cut.power() == -0.5 && (cut.normalization() - (2.0 * PI).powf(-1.5)).abs() < 1e-15 => {
            Some((*lo, *hi))
        }
        _ => None,
    }
}

// ∫_{S^{d−1}} e^{−ik·x} dΩ at |k||x| = y.
fn angular_average(d: usize, y: f64) -> Result<f64, NelsonError> {
    if y.abs() < 1e-8 {
        return Ok(sphere_area(d));
    }
    if d == 3 {
        return Ok(4.0 * PI * y.sin() / y);
    }
    let nu = d as f64 / 2.0 - 1.0;
    Ok((2.0 * PI).powf(d as f64 / 2.0) * y.powf(-nu) * bessel_j(nu, y)?)
}

/// V_eff_ij(x) = −¼α_iα_j ∫ λ̂_i(k)λ̂_j(k)/ω(k) e^{−ik·x} dk by radial quadrature.
pub fn veff_pair(li: &CutoffProfile, lj: &CutoffProfile, alpha_i: f64, alpha_j: f64, x: f64, q: &Quadrature) -> Result<f64, NelsonError> {
    if li.dim() != lj.dim() {
        return Err(NelsonError::InvalidConfig("profiles of different dimension".into()));
    }
    let d = li.dim();
    let (alo, ahi) = li.support();
    let (blo, bhi) = lj.support();
    let (lo, hi) = (alo.max(blo), ahi.min(bhi));
    if !(lo < hi) || alpha_i * alpha_j == 0.0 {
        return Ok(0.0);
    }
    let x = x.abs();
    let mut breaks: Vec<f64> = li.jump_points().into_iter().chain(lj.jump_points()).filter(|&b| b > lo && b < hi).collect();
    if x > 0.0 && hi.is_finite() {
        // split at every half period of the oscillation
        let period = PI / x;
        let mut t = (lo / period).floor() * period + period;
        while t < hi {
            breaks.push(t);
            t += period;
        }
    }
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let failure = std::cell::RefCell::new(None);
    let f = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        match angular_average(d, r * x) {
            Ok(avg) => li.value(r) * lj.value(r) / r * r.powi(d as i32 - 1) * avg,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate(f, w[0], w[1], q)?;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(-0.25 * alpha_i * alpha_j * total)
}

/// Two-body pair potential W with unit couplings, tabulated through the closed form when available.
pub fn unit_pair_potential(cut: &CutoffProfile, q: &Quadrature) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
    match rho_band(cut) {
        Some((k, l)) => Arc::new(move |x| veff_sharp3d(1.0, 1.0, k, l, x)),
        None => {
            let cut = cut.clone();
            let q = *q;
            Arc::new(move |x| veff_pair(&cut, &cut, 1.0, 1.0, x, &q).unwrap_or(f64::NAN))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelsonConfig {
    pub masses: Vec<f64>,
    pub alphas: Vec<f64>,
    pub cutoffs: Vec<CutoffProfile>,
    pub potentials: Vec<PotentialSpec>,
}

impl NelsonConfig {
    /// N identical particles.
    pub fn identical(n: usize, m: f64, alpha: f64, cut: CutoffProfile, pot: PotentialSpec) -> Result<Self, NelsonError> {
        let cfg = Self { masses: vec![m; n], alphas: vec![alpha; n], cutoffs: vec![cut; n], potentials: vec![pot; n] };
        cfg.validate(&Quadrature::default())?;
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn validate(&self, q: &Quadrature) -> Result<(), NelsonError> {
        let n = self.n();
        if n == 0 || self.alphas.len() != n || self.cutoffs.len() != n || self.potentials.len() != n {
            return Err(NelsonError::InvalidConfig("per-particle lists must be nonempty and of equal length".into()));
        }
        if self.masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(NelsonError::InvalidConfig("masses must be positive".into()));
        }
        for c in &self.cutoffs {
            if c.dim() != 3 {
                return Err(NelsonError::InvalidConfig("Nelson cutoffs are three-dimensional".into()));
            }
            c.weighted_norm(0, q)?;
            c.weighted_norm(1, q)?;
        }
        Ok(())
    }

    fn identical_pair(&self) -> Option<(f64, f64, &CutoffProfile, &PotentialSpec)> {
        if self.n() != 2 {
            return None;
        }
        let same = self.masses[0] == self.masses[1]
            && self.alphas[0] == self.alphas[1]
            && self.cutoffs[0] == self.cutoffs[1]
            && self.potentials[0] == self.potentials[1];
        same.then(|| (self.masses[0], self.alphas[0], &self.cutoffs[0], &self.potentials[0]))
    }
}

/// G = −¼ Σ_j α_j² ∫ λ̂_j²/ω dk.
pub fn constant_g(cfg: &NelsonConfig, q: &Quadrature) -> Result<f64, NelsonError> {
    let mut g = 0.0;
    for (a, c) in cfg.alphas.iter().zip(&cfg.cutoffs) {
        if *a != 0.0 {
            g -= 0.25 * a * a * c.weighted_norm(1, q)?;
        }
    }
    Ok(g)
}

/// −(1/2μ)u″ + [V(r) + ℓ(ℓ+1)/(2μr²)]u = Eu on (0, r_max) with Dirichlet ends.
#[derive(Clone)]
pub struct RadialProblem {
    pub mu: f64,
    pub potential: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub r_max: f64,
    pub nodes: usize,
    pub l: usize,
    /// Allowed change of the eigenvalue between `nodes` and 2·`nodes`.
    pub tol: f64,
}

impl std::fmt::Debug for RadialProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProblem").field("mu", &self.mu).field("r_max", &self.r_max).field("nodes", &self.nodes).field("l", &self.l).finish()
    }
}

impl RadialProblem {
    pub fn new(mu: f64, potential: Arc<dyn Fn(f64) -> f64 + Send + Sync>, r_max: f64, nodes: usize) -> Result<Self, NelsonError> {
        if !(mu > 0.0) || !(r_max > 0.0) || nodes < 200 {
            return Err(NelsonError::InvalidConfig(format!("μ = {mu}, r_max = {r_max}, nodes = {nodes} (need ≥ 200)")));
        }
        Ok(Self { mu, potential, r_max, nodes, l: 0, tol: 1e-3 })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialResult {
    /// Box eigenvalue at 2·nodes, Richardson-corrected.
    pub eigenvalue: f64,
    /// min(eigenvalue, 0): a nonnegative box eigenvalue is the continuum edge.
    pub energy: f64,
    pub bound: bool,
    pub shift: f64,
}

// Lowest eigenvalue of the tridiagonal FD matrix by Sturm bisection, plus its eigenvector.
fn fd_ground(prob: &RadialProblem, n: usize) -> (f64, Vec<f64>) {
    let h = prob.r_max / (n + 1) as f64;
    let k = 1.0 / (2.0 * prob.mu * h * h);
    let lterm = (prob.l * (prob.l + 1)) as f64 / (2.0 * prob.mu);
    let diag: Vec<f64> = (1..=n)
        .map(|i| {
            let r = i as f64 * h;
            // cell average keeps second order across jumps of V
            let v = (0..8).map(|j| (prob.potential)(r + h * ((j as f64 + 0.5) / 8.0 - 0.5))).sum::<f64>() / 8.0;
            2.0 * k + v + lterm / (r * r)
        })
        .collect();
    let off = -k;
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for (i, &a) in diag.iter().enumerate() {
            d = a - x - if i == 0 { 0.0 } else { off * off / d };
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let mut lo = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * k;
    let mut hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * k;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * (lo.abs() + hi.abs()) {
            break;
        }
    }
    let e = 0.5 * (lo + hi);
    // eigenvector by inverse iteration with a slightly shifted Thomas solve
    let shift = e - 1e-9 * e.abs().max(k * 1e-6);
    let mut u = vec![1.0; n];
    for _ in 0..3 {
        u = thomas(&diag, off, shift, &u);
        let s = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        u.iter_mut().for_each(|v| *v /= s);
    }
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let norm = (u.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    u.iter_mut().for_each(|v| *v /= norm);
    (e, u)
}

// Solves (T − σ)x = b for symmetric tridiagonal T with constant off-diagonal.
fn thomas(diag: &[f64], off: f64, sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0] - sigma;
    c[0] = off / piv;
    d[0] = b[0] / piv;
    for i in 1..n {
        piv = diag[i] - sigma - off * c[i - 1];
        if piv == 0.0 {
            piv = 1e-300;
        }
        c[i] = off / piv;
        d[i] = (b[i] - off * d[i - 1]) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Lowest radial eigenvalue with refinement check; energies ≥ 0 are reported as the continuum edge 0.
pub fn radial_ground_energy(prob: &RadialProblem) -> Result<RadialResult, NelsonError> {
    let (e1, _) = fd_ground(prob, prob.nodes);
    let (e2, _) = fd_ground(prob, 2 * prob.nodes + 1);
    let shift = (e2 - e1).abs();
    if shift > prob.tol * e2.abs().max(1.0) {
        return Err(NelsonError::GridTooCoarse { shift, tol: prob.tol });
    }
    // h halves exactly between n and 2n+1 interior nodes
    let eigenvalue = e2 + (e2 - e1) / 3.0;
    let bound = eigenvalue < 0.0;
    Ok(RadialResult { eigenvalue, energy: eigenvalue.min(0.0), bound, shift })
}

/// Radial ground state u(r) on the 2·nodes+1 grid, normalized by ∫u² dr = 1.
pub fn radial_ground_state(prob: &RadialProblem) -> (Vec<f64>, Vec<f64>) {
    let n = 2 * prob.nodes + 1;
    let h = prob.r_max / (n + 1) as f64;
    let (_, u) = fd_ground(prob, n);
    ((1..=n).map(|i| i as f64 * h).collect(), u)
}

// Average of V(|R + s n̂|) over unit vectors n̂: (1/(2Rs))∫_{|R−s|}^{R+s} V(t) t dt.
fn shell_average(pot: &PotentialSpec, big_r: f64, s: f64, q: &Quadrature) -> f64 {
    if big_r < 1e-12 || s < 1e-12 {
        return pot.value((big_r + s).abs());
    }
    let (a, b) = ((big_r - s).abs(), big_r + s);
    let integral = match pot {
        PotentialSpec::SphericalWell { v0, r } => {
            let top = b.min(*r);
            if top <= a {
                0.0
            } else {
                -v0 * (top * top - a * a) / 2.0
            }
        }
        PotentialSpec::Tabulated { .. } => {
            let top = b.min(pot.range());
            if top <= a {
                0.0
            } else {
                integrate(|t| pot.value(t) * t, a, top, q).unwrap_or(0.0)
            }
        }
    };
    integral / (2.0 * big_r * s)
}

/// Grid settings shared by the cluster problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterGrid {
    pub r_max: f64,
    pub nodes: usize,
    pub tol: f64,
}

impl Default for ClusterGrid {
    fn default() -> Self {
        Self { r_max: 20.0, nodes: 1500, tol: 5e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub alpha: f64,
    /// E_V({1}): one particle in its external potential.
    pub e_single: f64,
    /// E_0({1,2}): relative ground energy of the pair without external potential.
    pub e_pair_free: f64,
    /// Box eigenvalue of the pair problem (unclamped).
    pub e_pair_box: f64,
    /// Ξ_V = min(E_V({1}) + E_0({2}), E_V(∅) + E_0({1,2})).
    pub xi_v: f64,
    /// Product-ansatz upper bound on E_V({1,2}) in Jacobi coordinates.
    pub e_variational: f64,
    /// E_V = min(Ξ_V, variational bound).
    pub e_v: f64,
    /// Ξ_V − variational bound; positive certifies a gap below the two-cluster threshold.
    pub delta_p: f64,
    /// Σ_j α_j²‖λ̂_j‖²/(4m_jκ²).
    pub margin: f64,
    pub kappa_threshold_ok: bool,
    pub pair_w0: f64,
}

/// N = 2 identical particles: cluster energies, Ξ_V, E_V and the κ-margin test.
pub fn stability_check(cfg: &NelsonConfig, kappa_scale: f64, grid: &ClusterGrid, q: &Quadrature) -> Result<StabilityReport, NelsonError> {
    cfg.validate(q)?;
    if cfg.n() != 2 {
        return Err(NelsonError::UnsupportedN(cfg.n()));
    }
    let (m, alpha, cut, pot) = cfg
        .identical_pair()
        .ok_or_else(|| NelsonError::InvalidConfig("stability check needs identical particles".into()))?;
    if !(kappa_scale > 0.0) {
        return Err(NelsonError::InvalidConfig(format!("κ = {kappa_scale}")));
    }
    let w = unit_pair_potential(cut, q);
    let pair_w0 = w(0.0);

    let pot_single = pot.clone();
    let single = RadialProblem::new(m, Arc::new(move |r| pot_single.value(r)), grid.r_max, grid.nodes)?.with_tol(grid.tol);
    let e_single = radial_ground_energy(&single)?.energy;

    // relative coordinate: reduced mass m/2, interaction Σ_{i≠j} α² W
    let a2 = alpha * alpha;
    let wrel = w.clone();
    let rel = RadialProblem::new(m / 2.0, Arc::new(move |r| 2.0 * a2 * wrel(r)), grid.r_max, grid.nodes)?.with_tol(grid.tol);
    let rel_res = radial_ground_energy(&rel)?;
    let e_pair_free = rel_res.energy;
    let xi_v = e_single.min(e_pair_free);

    // centre of mass (mass 2m) in V(R + r/2) + V(R − r/2) averaged over the relative ground state
    let (rs, u) = radial_ground_state(&rel);
    let h = rs[0];
    let com_grid: Vec<f64> = (0..=400).map(|i| grid.r_max * i as f64 / 400.0).collect();
    let vavg: Vec<f64> = com_grid
        .par_iter()
        .map(|&big_r| 2.0 * rs.iter().zip(&u).map(|(&r, &ur)| ur * ur * shell_average(pot, big_r, r / 2.0, q)).sum::<f64>() * h)
        .collect();
    let step = grid.r_max / 400.0;
    let vavg_fn = move |x: f64| {
        let t = (x / step).clamp(0.0, 399.999_999);
        let i = t.floor() as usize;
        vavg[i] + (t - i as f64) * (vavg[i + 1] - vavg[i])
    };
    let com = RadialProblem::new(2.0 * m, Arc::new(vavg_fn), grid.r_max, grid.nodes)?.with_tol(grid.tol);
    let com_res = radial_ground_energy(&com)?;
    let e_variational = rel_res.eigenvalue + com_res.eigenvalue;
    let e_v = xi_v.min(e_variational);
    let delta_p = xi_v - e_variational;
    let mut margin = 0.0;
    for ((a, c), mj) in cfg.alphas.iter().zip(&cfg.cutoffs).zip(&cfg.masses) {
        margin += a * a * c.weighted_norm(0, q)? / (4.0 * mj * kappa_scale * kappa_scale);
    }
    Ok(StabilityReport {
        alpha,
        e_single,
        e_pair_free,
        e_pair_box: rel_res.eigenvalue,
        xi_v,
        e_variational,
        e_v,
        delta_p,
        margin,
        kappa_threshold_ok: delta_p > margin,
        pair_w0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySweep {
    pub reports: Vec<StabilityReport>,
    /// First swept α with Δ_p > 0 after a nonpositive value.
    pub alpha_c: Option<f64>,
    /// E_0(α)/α² at the largest α, and its target 2W(0).
    pub ratio_last: f64,
    pub ratio_target: f64,
}

pub fn stability_sweep(base: &NelsonConfig, alphas: &[f64], kappa_scale: f64, grid: &ClusterGrid, q: &Quadrature) -> Result<StabilitySweep, NelsonError> {
    let reports = alphas
        .par_iter()
        .map(|&a| {
            let mut cfg = base.clone();
            cfg.alphas = vec![a; cfg.n()];
            stability_check(&cfg, kappa_scale, grid, q)
        })
        .collect::<Result<Vec<_>, NelsonError>>()?;
    let alpha_c = reports.windows(2).find(|w| w[0].delta_p <= 0.0 && w[1].delta_p > 0.0).map(|w| w[1].alpha);
    let last = reports.last().ok_or_else(|| NelsonError::InvalidConfig("empty sweep".into()))?;
    let ratio_last = last.e_pair_free / (last.alpha * last.alpha);
    Ok(StabilitySweep { ratio_target: 2.0 * last.pair_w0, reports, alpha_c, ratio_last })
}

/// Ground energy of −Δ/(2Σm_j) + Σ_j V_j, a lumped-mass diagnostic.
pub fn heuristic_mass_lump(cfg: &NelsonConfig, grid: &ClusterGrid) -> Result<f64, NelsonError> {
    let total_mass: f64 = cfg.masses.iter().sum();
    if cfg.masses.is_empty() {
        return Err(NelsonError::InvalidConfig("no particles".into()));
    }
    let pots = cfg.potentials.clone();
    let v = move |r: f64| pots.iter().map(|p| p.value(r)).sum::<f64>();
    let prob = RadialProblem::new(total_mass, Arc::new(v), grid.r_max, grid.nodes)?.with_tol(grid.tol);
    Ok(radial_ground_energy(&prob)?.energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn sharp_origin_value() {
        let v = veff_sharp3d(1.0, 1.0, 1.0, 2.0, 0.0);
        assert!((v + 1.0 / (8.0 * PI * PI)).abs() < 1e-15);
        let near = veff_sharp3d(1.0, 1.0, 1.0, 2.0, 1e-6);
        assert!((near - v).abs() < 1e-12);
        assert!(veff_sharp3d(1.0, -1.0, 1.0, 2.0, 0.1) > 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let cut = rho_profile(1.0, 2.0).unwrap();
        for x in [0.0, 0.01, 0.3, 1.0, 2.5, 7.0, 40.0] {
            let a = veff_pair(&cut, &cut, 1.0, 1.0, x, &q()).unwrap();
            let b = veff_sharp3d(1.0, 1.0, 1.0, 2.0, x);
            assert!((a - b).abs() < 1e-10, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn decays_at_infinity() {
        let cut = rho_profile(1.0, 2.0).unwrap();
        let v0 = veff_pair(&cut, &cut, 1.0, 1.0, 0.0, &q()).unwrap();
        let far = veff_pair(&cut, &cut, 1.0, 1.0, 1e3, &q()).unwrap();
        assert!(far.abs() <= 1e-3 * v0.abs());
    }

    #[test]
    fn disjoint_profiles_do_not_interact() {
        let a = rho_profile(0.5, 1.0).unwrap();
        let b = rho_profile(1.0, 2.0).unwrap();
        assert_eq!(veff_pair(&a, &b, 1.0, 1.0, 0.3, &q()).unwrap(), 0.0);
    }

    #[test]
    fn bessel_form_agrees_in_three_dimensions() {
        for y in [0.1f64, 1.0, 5.0] {
            let nu = 0.5;
            let b = (2.0 * PI).powf(1.5) * y.powf(-nu) * bessel_j(nu, y).unwrap();
            assert!((b - angular_average(3, y).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn g_is_sum_of_diagonal_values() {
        let cut = rho_profile(1.0, 2.0).unwrap();
        let pot = PotentialSpec::well(0.5, 1.0).unwrap();
        let cfg = NelsonConfig::identical(2, 1.0, 0.7, cut.clone(), pot).unwrap();
        let g = constant_g(&cfg, &q()).unwrap();
        let diag = veff_pair(&cut, &cut, 0.7, 0.7, 0.0, &q()).unwrap();
        assert!((g - 2.0 * diag).abs() < 1e-13);
        let mut zero = cfg.clone();
        zero.alphas = vec![0.0, 0.0];
        assert_eq!(constant_g(&zero, &q()).unwrap(), 0.0);
    }

    #[test]
    fn minimum_at_origin() {
        for x in [0.05, 0.5, 1.0, 3.0, 10.0] {
            assert!(veff_sharp3d(1.0, 1.0, 1.0, 2.0, 0.0) < veff_sharp3d(1.0, 1.0, 1.0, 2.0, x));
        }
    }

    #[test]
    fn free_box() {
        let p = RadialProblem::new(1.0, Arc::new(|_| 0.0), 10.0, 400).unwrap();
        let (e, _) = fd_ground(&p, 400);
        let exact = PI * PI / (2.0 * 100.0);
        assert!((e - exact).abs() < 1e-4 * exact);
        let r = radial_ground_energy(&p).unwrap();
        assert!(!r.bound && r.energy == 0.0);
    }

    #[test]
    fn hydrogenic_ground_state() {
        let (mu, c) = (0.5, 2.0);
        let p = RadialProblem::new(mu, Arc::new(move |r| -c / r), 20.0, 2000).unwrap();
        let e = radial_ground_energy(&p).unwrap().energy;
        let exact = -mu * c * c / 2.0;
        assert!((e - exact).abs() < 2e-3 * exact.abs(), "{e} vs {exact}");
    }

    #[test]
    fn well_threshold_binding() {
        // √(2μV0)R = π/2 + δ binds, π/2 − δ does not
        for (delta, bound) in [(0.1, true), (-0.1, false)] {
            let k: f64 = PI / 2.0 + delta;
            let v0 = k * k / 2.0;
            let p = RadialProblem::new(1.0, Arc::new(move |r| if r < 1.0 { -v0 } else { 0.0 }), 60.0, 3000).unwrap();
            assert_eq!(radial_ground_energy(&p).unwrap().bound, bound);
        }
    }

    #[test]
    fn second_order_convergence() {
        let v0: f64 = 3.0;
        let p = RadialProblem::new(1.0, Arc::new(move |r| if r < 1.0 { -v0 } else { 0.0 }), 8.0, 200).unwrap();
        // exact: k cot k = −κ with k² + κ² = 2V0
        let f = |k: f64| k / k.tan() + (2.0 * v0 - k * k).sqrt();
        let (mut lo, mut hi) = (PI / 2.0 + 1e-9, (2.0 * v0).sqrt() - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let kappa = (2.0 * v0 - lo * lo).sqrt();
        let exact = -kappa * kappa / 2.0;
        let e1 = (fd_ground(&p, 199).0 - exact).abs();
        let e2 = (fd_ground(&p, 399).0 - exact).abs();
        assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
    }

    #[test]
    fn no_coupling_no_binding() {
        let cut = rho_profile(0.0, 1.0).unwrap();
        let pot = PotentialSpec::well(0.5, 1.0).unwrap();
        let cfg = NelsonConfig::identical(2, 1.0, 0.0, cut, pot).unwrap();
        let r = stability_check(&cfg, 1.0, &ClusterGrid::default(), &q()).unwrap();
        assert_eq!(r.e_single, 0.0);
        assert_eq!(r.xi_v, 0.0);
        assert_eq!(r.e_v, 0.0);
        assert!(r.delta_p <= 0.0);
        assert!(!r.kappa_threshold_ok);
    }

    #[test]
    fn lump_monotone_in_n() {
        let cut = rho_profile(0.0, 1.0).unwrap();
        let pot = PotentialSpec::well(0.5, 1.0).unwrap();
        let grid = ClusterGrid::default();
        let mut prev = f64::INFINITY;
        for n in 1..=3 {
            let cfg = NelsonConfig::identical(n, 1.0, 0.0, cut.clone(), pot.clone()).unwrap();
            let e = heuristic_mass_lump(&cfg, &grid).unwrap();
            assert!(e <= prev);
            prev = e;
        }
        let one = NelsonConfig::identical(1, 1.0, 0.0, cut, pot).unwrap();
        assert_eq!(heuristic_mass_lump(&one, &grid).unwrap(), 0.0);
    }

    #[test]
    fn enhanced_binding_sweep() {
        let cut = rho_profile(0.0, 1.0).unwrap();
        let pot = PotentialSpec::well(0.5, 1.0).unwrap();
        let cfg = NelsonConfig::identical(2, 1.0, 1.0, cut, pot).unwrap();
        let alphas = [1.0, 4.0, 16.0, 64.0, 512.0];
        let s = stability_sweep(&cfg, &alphas, 1.0, &ClusterGrid::default(), &q()).unwrap();
        assert!(s.alpha_c.is_some());
        for r in &s.reports {
            assert!(r.xi_v <= 0.0 && r.e_v <= r.xi_v);
        }
        assert!((s.ratio_last - s.ratio_target).abs() < 0.05 * s.ratio_target.abs());
        assert!(matches!(stability_check(&NelsonConfig::identical(3, 1.0, 1.0, rho_profile(0.0, 1.0).unwrap(), PotentialSpec::well(0.5, 1.0).unwrap()).unwrap(), 1.0, &ClusterGrid::default(), &q()), Err(NelsonError::UnsupportedN(3))));
    }
}
