//! Effective mass and ground-state energy of the dipole model, with many-particle,
//! self-energy-interpolated and scaling-limit variants.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use crate::dispersion::{d_plus, polarization, CutoffProfile, DispersionError};
use crate::numerics::{integrate, NumericsError, Quadrature};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GseError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("denominator m + ... vanishes (m = {0})")]
    DenominatorVanishes(f64),
    #[error("m = {m} does not exceed 8πλ/3 = {bound}")]
    MassTooSmall { m: f64, bound: f64 },
    #[error("cutoff supports overlap: {0}")]
    OverlappingSupports(String),
    #[error("|D₊| drops to {0:.3e} on the support")]
    DispersionVanishesOnSupport(f64),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub m: f64,
    pub alpha: f64,
    pub d: usize,
    pub p: Vec<f64>,
    /// Weight of the A² self-energy term, in [0, 1].
    pub eps_self: f64,
    /// Photon mass shift used by lattice approximations.
    pub eps_ph: f64,
}

impl ModelParams {
    pub fn new(m: f64, alpha: f64, d: usize) -> Result<Self, GseError> {
        let prm = Self { m, alpha, d, p: vec![0.0; d], eps_self: 1.0, eps_ph: 0.0 };
        prm.validate()?;
        Ok(prm)
    }

    pub fn with_p(mut self, p: Vec<f64>) -> Result<Self, GseError> {
        self.p = p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps_self(mut self, eps: f64) -> Result<Self, GseError> {
        self.eps_self = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps_ph(mut self, eps: f64) -> Result<Self, GseError> {
        self.eps_ph = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), GseError> {
        if self.d < 3 {
            return Err(GseError::InvalidParams(format!("dimension {} < 3", self.d)));
        }
        if self.p.len() != self.d {
            return Err(GseError::InvalidParams(format!("momentum has {} components in dimension {}", self.p.len(), self.d)));
        }
        if !(0.0..=1.0).contains(&self.eps_self) {
            return Err(GseError::InvalidParams(format!("eps_self = {} outside [0, 1]", self.eps_self)));
        }
        if !(self.eps_ph >= 0.0) {
            return Err(GseError::InvalidParams(format!("eps_ph = {} is negative", self.eps_ph)));
        }
        if !self.m.is_finite() || self.m == 0.0 || !self.alpha.is_finite() || self.p.iter().any(|x| !x.is_finite()) {
            return Err(GseError::InvalidParams("m must be finite and nonzero; α and p finite".into()));
        }
        Ok(())
    }

    pub fn p2(&self) -> f64 {
        self.p.iter().map(|x| x * x).sum()
    }
}

fn check_dims(cut: &CutoffProfile, prm: &ModelParams) -> Result<(), GseError> {
    prm.validate()?;
    if cut.dim() != prm.d {
        return Err(GseError::InvalidParams(format!("profile dimension {} vs model dimension {}", cut.dim(), prm.d)));
    }
    Ok(())
}

/// Infrared classification by ∫ φ̂²/ω³ dk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrCriterion {
    Regular(f64),
    Singular,
}

pub fn ir_criterion(cut: &CutoffProfile, q: &Quadrature) -> Result<IrCriterion, GseError> {
    match cut.weighted_norm(3, q) {
        Ok(v) => Ok(IrCriterion::Regular(v)),
        Err(DispersionError::DivergentIntegral(_)) => Ok(IrCriterion::Singular),
        Err(e) => Err(e.into()),
    }
}

/// m + ε α² ((d−1)/d) ‖φ̂/ω‖².
pub fn effective_mass(cut: &CutoffProfile, prm: &ModelParams, q: &Quadrature) -> Result<f64, GseError> {
    check_dims(cut, prm)?;
    let a2 = prm.eps_self * prm.alpha * prm.alpha;
    if a2 == 0.0 {
        return Ok(prm.m);
    }
    Ok(prm.m + a2 * polarization(prm.d) * cut.weighted_norm(2, q)?)
}

// ∫ of the g integrand over t ∈ (0, ∞); coupling = ε α² (d−1)/d and `scale` maps (ω, φ̂) → (κ²ω, κ²φ̂).
fn g_half_line(cut: &CutoffProfile, m: f64, coupling: f64, scale: f64, q: &Quadrature) -> Result<f64, GseError> {
    if coupling == 0.0 {
        return Ok(0.0);
    }
    if !(m > 0.0) {
        return Err(GseError::DenominatorVanishes(m));
    }
    let amp2 = scale.powi(4);
    let w2 = scale.powi(4);
    let failure: RefCell<Option<GseError>> = RefCell::new(None);
    let integrand = |t: f64| {
        if failure.borrow().is_some() {
            return 0.0;
        }
        let t2 = t * t;
        let num = cut.radial_integral(|r| amp2 * t2 / (t2 + w2 * r * r).powi(2), q);
        let den = cut.radial_integral(|r| amp2 / (t2 + w2 * r * r), q);
        match (num, den) {
            (Ok(n), Ok(d)) => coupling * n / (m + coupling * d),
            (Err(e), _) | (_, Err(e)) => {
                *failure.borrow_mut() = Some(e.into());
                0.0
            }
        }
    };
    let v = integrate(integrand, 0.0, f64::INFINITY, q);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v?)
}

/// g = (d/2π) ∫_ℝ εα²((d−1)/d)‖tφ̂/(t²+ω²)‖² / (m + εα²((d−1)/d)‖φ̂/√(t²+ω²)‖²) dt.
pub fn ground_energy(cut: &CutoffProfile, prm: &ModelParams, q: &Quadrature) -> Result<f64, GseError> {
    check_dims(cut, prm)?;
    let coupling = prm.eps_self * prm.alpha * prm.alpha * polarization(prm.d);
    let half = g_half_line(cut, prm.m, coupling, 1.0, q)?;
    Ok(prm.d as f64 / (2.0 * PI) * 2.0 * half)
}

/// g evaluated directly with ω → κ²ω and φ̂ → κ²φ̂; equals κ²·g.
pub fn ground_energy_scaled(cut: &CutoffProfile, prm: &ModelParams, kappa: f64, q: &Quadrature) -> Result<f64, GseError> {
    check_dims(cut, prm)?;
    if !(kappa > 0.0) {
        return Err(GseError::InvalidParams(format!("κ = {kappa}")));
    }
    let coupling = prm.eps_self * prm.alpha * prm.alpha * polarization(prm.d);
    let half = g_half_line(cut, prm.m, coupling, kappa, q)?;
    Ok(prm.d as f64 / (2.0 * PI) * 2.0 * half)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// m + εα²((d−1)/d)‖φ̂/ω‖².
    pub m_eff: f64,
    /// Kinetic mass m_ε with E_p = p²/(2m_ε) + g; equals m_eff at ε = 1.
    pub m_kinetic: f64,
    pub g: f64,
    pub e_p: f64,
    pub ir: IrCriterion,
}

pub fn energy_breakdown(cut: &CutoffProfile, prm: &ModelParams, q: &Quadrature) -> Result<EnergyBreakdown, GseError> {
    let fam = epsilon_family(cut, prm, q)?;
    let ir = ir_criterion(cut, q)?;
    let m_kinetic = 1.0 / fam.m_eps_inv;
    let e_p = prm.p2() * fam.m_eps_inv / 2.0 + fam.g_eps;
    Ok(EnergyBreakdown { m_eff: fam.m_eff_eps, m_kinetic, g: fam.g_eps, e_p, ir })
}

// atan x − x/(1+x²) and x − atan x without cancellation near 0.
fn arctan_gap(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        let mut pow = x * x2;
        let mut s = 0.0;
        for n in 1..30 {
            let term = pow * (2 * n) as f64 / (2 * n + 1) as f64;
            s += if n % 2 == 1 { term } else { -term };
            pow *= x2;
        }
        s
    } else {
        x.atan() - x / (1.0 + x * x)
    }
}

fn arctan_excess(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        let mut pow = x * x2;
        let mut s = 0.0;
        for n in 1..30 {
            let term = pow / (2 * n + 1) as f64;
            s += if n % 2 == 1 { term } else { -term };
            pow *= x2;
        }
        s
    } else {
        x - x.atan()
    }
}

/// Closed single-integral form of g for the unit sharp band in d = 3 with α = 1:
/// g = 4Λ² ∫₀^∞ [F(r) − F(rλ/Λ)] / (m r + (8π/3)Λ[H(r) − H(rλ/Λ)]) dr/r², F = atan r − r/(1+r²), H = r − atan r.
pub fn ground_energy_sharp(lo: f64, hi: f64, m: f64, q: &Quadrature) -> Result<f64, GseError> {
    ground_energy_sharp_n(lo, hi, m, 1, q)
}

// N-particle shared-cutoff version: m r → (m/N) r and an overall factor N.
fn ground_energy_sharp_n(lo: f64, hi: f64, m: f64, n: usize, q: &Quadrature) -> Result<f64, GseError> {
    if !(lo >= 0.0) || !(hi >= lo) {
        return Err(GseError::InvalidParams(format!("band [{lo}, {hi}]")));
    }
    if !(m > 0.0) {
        return Err(GseError::DenominatorVanishes(m));
    }
    if hi == lo {
        return Ok(0.0);
    }
    let rho = lo / hi;
    let nf = n as f64;
    let f = |r: f64| {
        if r == 0.0 {
            return 2.0 / 3.0 * (1.0 - rho.powi(3)) * nf / m;
        }
        let num = arctan_gap(r) - arctan_gap(r * rho);
        let den = m / nf * r + 8.0 * PI / 3.0 * hi * (arctan_excess(r) - arctan_excess(r * rho));
        num / den / (r * r)
    };
    Ok(4.0 * hi * hi * integrate(f, 0.0, f64::INFINITY, q)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Asymptotics {
    /// (Λ, g(Λ)/Λ^{3/2}).
    pub ratios: Vec<(f64, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub within_band: bool,
}

/// Large-Λ band for g(Λ)/Λ^{3/2}: lower = (8/3)(3/(8πm))^{1/2}(π/2), upper = √3·lower.
pub fn asymptotic_constants(m: f64) -> (f64, f64) {
    let lower = 8.0 / 3.0 * (3.0 / (8.0 * PI * m)).sqrt() * PI / 2.0;
    let upper = 8.0 / 3.0 * (9.0 / (8.0 * PI * m)).sqrt() * PI / 2.0;
    (lower, upper)
}

pub fn g_asymptotics(lo: f64, m: f64, grid: &[f64], slack: f64, q: &Quadrature) -> Result<Asymptotics, GseError> {
    let bound = 8.0 * PI * lo / 3.0;
    if !(m > bound) {
        return Err(GseError::MassTooSmall { m, bound });
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= lo {
        return Err(GseError::InvalidParams("Λ grid must be ascending and above λ".into()));
    }
    let ratios = grid
        .iter()
        .map(|&hi| Ok((hi, ground_energy_sharp(lo, hi, m, q)? / hi.powf(1.5))))
        .collect::<Result<Vec<_>, GseError>>()?;
    let (lower, upper) = asymptotic_constants(m);
    let last = ratios[ratios.len() - 1].1;
    let within_band = last >= lower * (1.0 - slack) && last <= upper * (1.0 + slack);
    Ok(Asymptotics { ratios, lower, upper, slack, within_band })
}

/// Cutoff arrangement for N particles.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiCase {
    Shared(CutoffProfile),
    Disjoint(Vec<CutoffProfile>),
}

/// Shared: (N/π)∫_ℝ ‖tφ̂/(t²+ω²)‖²/(m + (2/3)N‖φ̂/√(t²+ω²)‖²) dt. Disjoint: sum of one-particle values.
pub fn ground_energy_multi(n: usize, case: &MultiCase, m: f64, q: &Quadrature) -> Result<f64, GseError> {
    if n == 0 {
        return Err(GseError::InvalidParams("N must be at least 1".into()));
    }
    match case {
        MultiCase::Shared(cut) => {
            if cut.dim() != 3 {
                return Err(GseError::InvalidParams("many-particle energies are three-dimensional".into()));
            }
            let nf = n as f64;
            let half = g_half_line(cut, m / nf, 2.0 / 3.0, 1.0, q)?;
            // (N/π)·2∫₀^∞ ‖‖²/(m + (2/3)N‖‖²) = (3/π)∫₀^∞ (2/3)‖‖²/(m/N + (2/3)‖‖²)
            Ok(3.0 / PI * half)
        }
        MultiCase::Disjoint(cuts) => {
            if cuts.len() != n {
                return Err(GseError::InvalidParams(format!("{} profiles for N = {n}", cuts.len())));
            }
            for (i, a) in cuts.iter().enumerate() {
                if a.dim() != 3 {
                    return Err(GseError::InvalidParams("many-particle energies are three-dimensional".into()));
                }
                for (j, b) in cuts.iter().enumerate().skip(i + 1) {
                    let (alo, ahi) = a.support();
                    let (blo, bhi) = b.support();
                    if alo.max(blo) < ahi.min(bhi) {
                        return Err(GseError::OverlappingSupports(format!("profiles {i} and {j}")));
                    }
                }
            }
            let mut total = 0.0;
            for cut in cuts {
                total += 3.0 / PI * g_half_line(cut, m, 2.0 / 3.0, 1.0, q)?;
            }
            Ok(total)
        }
    }
}

/// Shared-cutoff N-particle g for the unit sharp band via the single-integral form.
pub fn ground_energy_multi_sharp(lo: f64, hi: f64, m: f64, n: usize, q: &Quadrature) -> Result<f64, GseError> {
    if n == 0 {
        return Err(GseError::InvalidParams("N must be at least 1".into()));
    }
    ground_energy_sharp_n(lo, hi, m, n, q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonFamily {
    /// m + εα²((d−1)/d)‖φ̂/ω‖².
    pub m_eff_eps: f64,
    /// 1/m_ε = 1/m − α²((d−1)/d)‖φ̂/ω‖² / ((m + εα²((d−1)/d)‖φ̂/ω‖²) m).
    pub m_eps_inv: f64,
    pub g_eps: f64,
    /// m/((1−ε)((d−1)/d)‖φ̂/ω‖²); +∞ at ε = 1.
    pub alpha_star_sq: f64,
    /// α² < α*², equivalently 1/m_ε > 0.
    pub bounded_below: bool,
}

pub fn epsilon_family(cut: &CutoffProfile, prm: &ModelParams, q: &Quadrature) -> Result<EpsilonFamily, GseError> {
    check_dims(cut, prm)?;
    let a2 = prm.alpha * prm.alpha;
    let eps = prm.eps_self;
    let m = prm.m;
    let c = polarization(prm.d);
    let n2 = if a2 == 0.0 && eps < 1.0 { 0.0 } else { cut.weighted_norm(2, q)? };
    let m_eff_eps = m + eps * a2 * c * n2;
    let m_eps_inv = 1.0 / m - a2 * c * n2 / (m_eff_eps * m);
    let g_eps = if eps * a2 == 0.0 { 0.0 } else { ground_energy(cut, prm, q)? };
    let alpha_star_sq = if eps >= 1.0 {
        f64::INFINITY
    } else if n2 == 0.0 {
        cut.weighted_norm(2, q).map(|v| m / ((1.0 - eps) * c * v)).unwrap_or(f64::INFINITY)
    } else {
        m / ((1.0 - eps) * c * n2)
    };
    Ok(EpsilonFamily { m_eff_eps, m_eps_inv, g_eps, alpha_star_sq, bounded_below: a2 < alpha_star_sq })
}

/// C = ½((d−1)/d) ∫ |Q_ε(k)|²/ω(k)³ dk with Q_ε = αφ̂/D₊^ε(ω²), D^ε carrying εα².
pub fn scl_constant(cut: &CutoffProfile, prm: &ModelParams, q: &Quadrature) -> Result<f64, GseError> {
    check_dims(cut, prm)?;
    let c = polarization(prm.d);
    let a2 = prm.alpha * prm.alpha;
    if let IrCriterion::Singular = ir_criterion(cut, q)? {
        return Err(DispersionError::DivergentIntegral(3).into());
    }
    if a2 == 0.0 {
        return Ok(0.0);
    }
    let eps_alpha = (prm.eps_self).sqrt() * prm.alpha;
    if eps_alpha == 0.0 {
        return Ok(0.5 * c * a2 / (prm.m * prm.m) * cut.weighted_norm(3, q)?);
    }
    let worst = Cell::new(f64::INFINITY);
    let failure = RefCell::new(None);
    let integral = cut.radial_integral(
        |r| match d_plus(cut, prm.m, eps_alpha, r * r, q) {
            Ok(res) => {
                let dn = res.d_plus.norm();
                if dn.is_infinite() {
                    return 0.0;
                }
                worst.set(worst.get().min(dn));
                a2 / (dn * dn) / r.powi(3)
            }
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        },
        q,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    if worst.get() < 1e-12 {
        return Err(GseError::DispersionVanishesOnSupport(worst.get()));
    }
    Ok(0.5 * c * integral?)
}

/// (V ∗ P_C)(x) in d = 3 for radial V, P_C the centred Gaussian with variance C per axis.
pub fn smear(v: impl Fn(f64) -> f64, c: f64, x: f64, q: &Quadrature) -> Result<f64, GseError> {
    if !(c > 0.0) {
        return Err(GseError::InvalidParams(format!("variance C = {c}")));
    }
    let x = x.abs();
    let norm = (2.0 * PI * c).powf(-0.5);
    let val = if x < 1e-12 {
        integrate(|r| v(r) * 4.0 * PI * r * r * (2.0 * PI * c).powf(-1.5) * (-r * r / (2.0 * c)).exp(), 0.0, f64::INFINITY, q)?
    } else {
        let kernel = |r: f64| {
            let a = -(x - r).powi(2) / (2.0 * c);
            // e^a − e^b with b = −(x+r)²/2C, written as e^a (1 − e^{b−a}), b − a = −2xr/C
            v(r) * r / x * norm * a.exp() * (-(-2.0 * x * r / c).exp_m1())
        };
        integrate(kernel, 0.0, f64::INFINITY, q)?
    };
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    fn band() -> CutoffProfile {
        CutoffProfile::sharp(1.0, 2.0, 3).unwrap()
    }

    #[test]
    fn effective_mass_values() {
        let prm = ModelParams::new(1.0, 1.0, 3).unwrap();
        assert!((effective_mass(&band(), &prm, &q()).unwrap() - 9.377_580_409_572_781).abs() < 1e-10);
        let zero = ModelParams::new(1.0, 0.0, 3).unwrap();
        assert_eq!(effective_mass(&band(), &zero, &q()).unwrap(), 1.0);
        let no_self = prm.clone().with_eps_self(0.0).unwrap();
        assert_eq!(effective_mass(&band(), &no_self, &q()).unwrap(), 1.0);
    }

    #[test]
    fn generic_matches_single_integral_form() {
        let prm = ModelParams::new(9.0, 1.0, 3).unwrap();
        let g = ground_energy(&band(), &prm, &q()).unwrap();
        let s = ground_energy_sharp(1.0, 2.0, 9.0, &q()).unwrap();
        assert!((g - s).abs() <= 1e-6 * s, "{g} vs {s}");
    }

    #[test]
    fn arctan_helpers_agree_across_branch() {
        for x in [0.0999999, 0.1] {
            assert!((arctan_gap(x) - (x.atan() - x / (1.0 + x * x))).abs() < 1e-15);
            assert!((arctan_excess(x) - (x - x.atan())).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_band_and_zero_coupling() {
        assert_eq!(ground_energy_sharp(1.5, 1.5, 2.0, &q()).unwrap(), 0.0);
        let prm = ModelParams::new(1.0, 0.0, 3).unwrap();
        assert_eq!(ground_energy(&band(), &prm, &q()).unwrap(), 0.0);
    }

    #[test]
    fn theorem_constants() {
        let (lo, hi) = asymptotic_constants(9.0);
        assert!((lo - 0.482_400_836).abs() < 1e-8);
        assert!((hi - 0.835_542_758).abs() < 1e-8);
        assert!(matches!(g_asymptotics(1.0, 8.0, &[4.0], 0.05, &q()), Err(GseError::MassTooSmall { .. })));
    }

    #[test]
    fn large_cutoff_ratio_in_band() {
        let grid: Vec<f64> = (2..=9).map(|k| 2f64.powi(k)).collect();
        let a = g_asymptotics(1.0, 9.0, &grid, 0.05, &q()).unwrap();
        assert!(a.within_band);
    }

    #[test]
    fn multi_reduces_to_single() {
        let g1 = ground_energy(&band(), &ModelParams::new(2.0, 1.0, 3).unwrap(), &q()).unwrap();
        let shared = ground_energy_multi(1, &MultiCase::Shared(band()), 2.0, &q()).unwrap();
        let disjoint = ground_energy_multi(1, &MultiCase::Disjoint(vec![band()]), 2.0, &q()).unwrap();
        assert!((g1 - shared).abs() < 1e-9 * g1);
        assert!((g1 - disjoint).abs() < 1e-9 * g1);
        let closed = ground_energy_multi_sharp(1.0, 2.0, 2.0, 3, &q()).unwrap();
        let generic = ground_energy_multi(3, &MultiCase::Shared(band()), 2.0, &q()).unwrap();
        assert!((closed - generic).abs() < 1e-7 * closed);
    }

    #[test]
    fn overlapping_supports_rejected() {
        let cuts = vec![band(), CutoffProfile::sharp(1.5, 3.0, 3).unwrap()];
        assert!(matches!(ground_energy_multi(2, &MultiCase::Disjoint(cuts), 1.0, &q()), Err(GseError::OverlappingSupports(_))));
    }

    #[test]
    fn epsilon_endpoints() {
        let prm = ModelParams::new(1.0, 0.7, 3).unwrap();
        let one = epsilon_family(&band(), &prm, &q()).unwrap();
        let meff = effective_mass(&band(), &prm, &q()).unwrap();
        assert!((one.m_eps_inv - 1.0 / meff).abs() < 1e-14);
        assert!(one.alpha_star_sq.is_infinite());
        let zero = epsilon_family(&band(), &prm.clone().with_eps_self(0.0).unwrap(), &q()).unwrap();
        assert_eq!(zero.g_eps, 0.0);
        let n2 = band().weighted_norm(2, &q()).unwrap();
        assert!((zero.alpha_star_sq - 1.0 / (2.0 / 3.0 * n2)).abs() < 1e-12);
        assert!((zero.m_eps_inv - (1.0 - 0.49 * 2.0 / 3.0 * n2)).abs() < 1e-12);
    }

    #[test]
    fn weak_coupling_scaling() {
        let prm = ModelParams::new(3.0, 0.8, 3).unwrap();
        let g = ground_energy(&band(), &prm, &q()).unwrap();
        for kappa in [0.5, 2.0, 5.0] {
            let gk = ground_energy_scaled(&band(), &prm, kappa, &q()).unwrap();
            assert!((gk - kappa * kappa * g).abs() < 1e-8 * gk, "{kappa}");
        }
    }

    #[test]
    fn strong_coupling_constant_without_self_energy() {
        let prm = ModelParams::new(2.0, 0.6, 3).unwrap().with_eps_self(0.0).unwrap();
        let c = scl_constant(&band(), &prm, &q()).unwrap();
        let expect = 0.5 * (2.0 / 3.0) * 0.36 / 4.0 * 4.0 * PI * 2f64.ln();
        assert!((c - expect).abs() < 1e-10);
    }

    #[test]
    fn smear_preserves_constants() {
        for c in [0.1, 1.0, 4.0] {
            for x in [0.0, 0.5, 3.0] {
                let s = smear(|_| 2.5, c, x, &q()).unwrap();
                assert!((s - 2.5).abs() < 1e-8, "{c} {x} {s}");
            }
        }
    }

    #[test]
    fn ir_classification() {
        assert!(matches!(ir_criterion(&band(), &q()).unwrap(), IrCriterion::Regular(v) if (v - 4.0 * PI * 2f64.ln()).abs() < 1e-10));
        let t = CutoffProfile::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 0.0], 3).unwrap();
        assert_eq!(ir_criterion(&t, &q()).unwrap(), IrCriterion::Singular);
    }
}
