//! Radial cutoff profiles and the dispersion function D(z) with its boundary values.

use std::f64::consts::PI;

use crate::numerics::cmat::C64;
use crate::numerics::{integrate_breaks, integrate_pv, sphere_area, NumericsError, Quadrature};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("invalid cutoff profile: {0}")]
    InvalidProfile(String),
    #[error("weighted norm with n = {0} diverges")]
    DivergentIntegral(i32),
    #[error("z = {0} lies on the branch cut [0, ∞)")]
    OnBranchCut(C64),
    #[error("no zero of D on the negative axis: {0}")]
    NoRoot(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Points closer than this to a jump of the profile are treated as band edges.
pub const EDGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum CutoffKind {
    /// Indicator of lo ≤ |k| ≤ hi.
    Sharp { lo: f64, hi: f64 },
    /// Piecewise-linear interpolation of (r, v), zero outside [r₀, r_last].
    Tabulated { r: Vec<f64>, v: Vec<f64> },
}

/// Rotation-invariant cutoff φ̂(k) = normalization · base(|k|) · |k|^power.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile {
    kind: CutoffKind,
    dim: usize,
    normalization: f64,
    power: f64,
}

impl CutoffProfile {
    pub fn sharp(lo: f64, hi: f64, dim: usize) -> Result<Self, DispersionError> {
        if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(DispersionError::InvalidProfile(format!("sharp band [{lo}, {hi}]")));
        }
        Self::checked(CutoffKind::Sharp { lo, hi }, dim)
    }

    pub fn tabulated(r: Vec<f64>, v: Vec<f64>, dim: usize) -> Result<Self, DispersionError> {
        if r.len() < 2 || r.len() != v.len() {
            return Err(DispersionError::InvalidProfile("table needs at least two (r, value) rows".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().any(|x| !x.is_finite()) {
            return Err(DispersionError::InvalidProfile("radii must be finite, nonnegative and strictly increasing".into()));
        }
        if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(DispersionError::InvalidProfile("values must be finite and nonnegative".into()));
        }
        Self::checked(CutoffKind::Tabulated { r, v }, dim)
    }

    /// Parses whitespace- or comma-separated `r value` rows; `#` starts a comment.
    pub fn from_table_text(text: &str, dim: usize) -> Result<Self, DispersionError> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(DispersionError::InvalidProfile(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| DispersionError::InvalidProfile(format!("line {}: {e}", lineno + 1)));
            r.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::tabulated(r, v, dim)
    }

    fn checked(kind: CutoffKind, dim: usize) -> Result<Self, DispersionError> {
        if dim < 3 {
            return Err(DispersionError::InvalidProfile(format!("dimension {dim} < 3")));
        }
        Ok(Self { kind, dim, normalization: 1.0, power: 0.0 })
    }

    pub fn with_normalization(mut self, c: f64) -> Result<Self, DispersionError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(DispersionError::InvalidProfile(format!("normalization {c}")));
        }
        self.normalization = c;
        Ok(self)
    }

    /// Multiplies the profile by |k|^p.
    pub fn with_power(mut self, p: f64) -> Self {
        self.power = p;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self, DispersionError> {
        if dim < 3 {
            return Err(DispersionError::InvalidProfile(format!("dimension {dim} < 3")));
        }
        self.dim = dim;
        Ok(self)
    }

    pub fn kind(&self) -> &CutoffKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Band [lo, hi] for a unit-normalized sharp profile without a power factor.
    pub fn unit_sharp_band(&self) -> Option<(f64, f64)> {
        match self.kind {
            CutoffKind::Sharp { lo, hi } if self.normalization == 1.0 && self.power == 0.0 => Some((lo, hi)),
            _ => None,
        }
    }

    fn base(&self, r: f64) -> f64 {
        match &self.kind {
            CutoffKind::Sharp { lo, hi } => {
                if r >= *lo && r <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffKind::Tabulated { r: xs, v } => {
                if r < xs[0] || r > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&x| x <= r).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let t = (r - x0) / (x1 - x0);
                v[i - 1] + t * (v[i] - v[i - 1])
            }
        }
    }

    /// φ̂ at radius r.
    pub fn value(&self, r: f64) -> f64 {
        let b = self.base(r);
        if b == 0.0 {
            return 0.0;
        }
        if self.power == 0.0 {
            self.normalization * b
        } else {
            self.normalization * b * r.powf(self.power)
        }
    }

    /// Smallest interval outside of which φ̂ vanishes.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            CutoffKind::Sharp { lo, hi } => (*lo, *hi),
            CutoffKind::Tabulated { r, v } => {
                let first = v.iter().position(|&x| x > 0.0);
                let last = v.iter().rposition(|&x| x > 0.0);
                match (first, last) {
                    (Some(i), Some(j)) => (r[i.saturating_sub(1)], r[(j + 1).min(r.len() - 1)]),
                    _ => (r[0], r[0]),
                }
            }
        }
    }

    /// Radii where φ̂ jumps; principal values there diverge.
    pub fn jump_points(&self) -> Vec<f64> {
        match &self.kind {
            CutoffKind::Sharp { lo, hi } => {
                if *lo > 0.0 {
                    vec![*lo, *hi]
                } else {
                    vec![*hi]
                }
            }
            CutoffKind::Tabulated { r, v } => {
                let mut out = Vec::new();
                if v[0] > 0.0 && r[0] > 0.0 {
                    out.push(r[0]);
                }
                if v[v.len() - 1] > 0.0 {
                    out.push(r[r.len() - 1]);
                }
                out
            }
        }
    }

    fn interior_breaks(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        match &self.kind {
            CutoffKind::Sharp { .. } => Vec::new(),
            CutoffKind::Tabulated { r, .. } => r.iter().copied().filter(|&x| x > lo && x < hi).collect(),
        }
    }

    /// Order of vanishing of φ̂² r^{−2·power} at the origin, None if φ̂ vanishes near 0.
    fn origin_order(&self) -> Option<f64> {
        let (lo, hi) = self.support();
        if lo > 0.0 || hi == lo {
            return None;
        }
        match &self.kind {
            CutoffKind::Sharp { .. } => Some(0.0),
            CutoffKind::Tabulated { v, .. } => Some(if v[0] > 0.0 { 0.0 } else { 2.0 }),
        }
    }

    /// ∫_{ℝᵈ} φ̂(k)² g(|k|) dk = |S_{d−1}| ∫ φ̂(r)² g(r) r^{d−1} dr.
    pub fn radial_integral(&self, g: impl Fn(f64) -> f64, q: &Quadrature) -> Result<f64, DispersionError> {
        let (lo, hi) = self.support();
        if hi <= lo {
            return Ok(0.0);
        }
        let dm1 = (self.dim - 1) as i32;
        let f = |r: f64| {
            let p = self.value(r);
            if p == 0.0 {
                0.0
            } else {
                p * p * g(r) * r.powi(dm1)
            }
        };
        let v = integrate_breaks(f, lo, hi, &self.interior_breaks(), q)?;
        Ok(sphere_area(self.dim) * v)
    }

    /// ‖φ̂/ω^{n/2}‖² = ∫ φ̂(k)²/|k|ⁿ dk.
    pub fn weighted_norm(&self, n: i32, q: &Quadrature) -> Result<f64, DispersionError> {
        if let Some(order) = self.origin_order() {
            let e = self.dim as f64 - 1.0 - n as f64 + 2.0 * self.power + order;
            if e <= -1.0 {
                return Err(DispersionError::DivergentIntegral(n));
            }
        }
        self.radial_integral(|r| r.powi(-n), q)
    }
}

/// (d−1)/d, the transverse polarization fraction.
pub fn polarization(d: usize) -> f64 {
    (d as f64 - 1.0) / d as f64
}

/// D(z) = m − α²((d−1)/d) ∫ φ̂(k)²/(z − |k|²) dk for z off [0, ∞).
pub fn d_of_z(cut: &CutoffProfile, m: f64, alpha: f64, z: C64, q: &Quadrature) -> Result<C64, DispersionError> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(DispersionError::OnBranchCut(z));
    }
    let re = cut.radial_integral(
        |r| {
            let w = z - r * r;
            w.re / w.norm_sqr()
        },
        q,
    )?;
    let im = cut.radial_integral(
        |r| {
            let w = z - r * r;
            -w.im / w.norm_sqr()
        },
        q,
    )?;
    let c = alpha * alpha * polarization(cut.dim());
    Ok(C64::new(m, 0.0) - C64::new(re, im) * c)
}

/// ρ(x) = φ̂(√x)² x^{(d−2)/2}.
pub fn spectral_density(cut: &CutoffProfile, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let p = cut.value(x.sqrt());
    p * p * x.powf((cut.dim() as f64 - 2.0) / 2.0)
}

/// Hρ(s) = PV ∫ ρ(x)/(s − x) dx; ±∞ within EDGE_TOL of a jump of φ̂.
pub fn hilbert_rho(cut: &CutoffProfile, s: f64, q: &Quadrature) -> Result<f64, DispersionError> {
    let k = s.max(0.0).sqrt();
    let (lo, hi) = cut.support();
    for edge in cut.jump_points() {
        if (k - edge).abs() < EDGE_TOL {
            return Ok(if edge == hi { f64::INFINITY } else { f64::NEG_INFINITY });
        }
    }
    if hi <= lo {
        return Ok(0.0);
    }
    if k > lo && k < hi {
        let rho = |x: f64| spectral_density(cut, x);
        return Ok(integrate_pv(rho, lo * lo, hi * hi, s, q)?);
    }
    // off the support: 2∫ φ̂(r)² r^{d−1}/(s − r²) dr
    let v = cut.radial_integral(|r| 1.0 / (s - r * r), q)?;
    Ok(2.0 * v / sphere_area(cut.dim()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionResult {
    pub s: f64,
    pub d_plus: C64,
    pub d_minus: C64,
    /// m_eff(k) = D₊(|k|²) with |k| = √s.
    pub m_eff_k: C64,
}

/// D±(s) = m − (α²/2)((d−1)/d)|S_{d−1}|(Hρ(s) ∓ iπρ(s)).
pub fn d_plus(cut: &CutoffProfile, m: f64, alpha: f64, s: f64, q: &Quadrature) -> Result<DispersionResult, DispersionError> {
    if !(s >= 0.0) {
        return Err(DispersionError::InvalidProfile(format!("boundary value requested at s = {s}")));
    }
    let pref = 0.5 * alpha * alpha * polarization(cut.dim()) * sphere_area(cut.dim());
    if pref == 0.0 {
        let d = C64::new(m, 0.0);
        return Ok(DispersionResult { s, d_plus: d, d_minus: d, m_eff_k: d });
    }
    let h = hilbert_rho(cut, s, q)?;
    let rho = spectral_density(cut, s);
    let dp = C64::new(m - pref * h, pref * PI * rho);
    Ok(DispersionResult { s, d_plus: dp, d_minus: dp.conj(), m_eff_k: dp })
}

/// Closed form of Hρ for ρ(x) = 1_{[λ²,Λ²]}(x)√x; ±∞ at the band edges.
pub fn h_rho_sharp(lo: f64, hi: f64, s: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let k = s.max(0.0).sqrt();
    if lo > 0.0 && (k - lo).abs() < EDGE_TOL {
        return f64::NEG_INFINITY;
    }
    if (k - hi).abs() < EDGE_TOL {
        return f64::INFINITY;
    }
    if k == 0.0 {
        return -2.0 * (hi - lo);
    }
    let ratio = ((k + hi) * (k - lo)) / ((k + lo) * (k - hi));
    -2.0 * (hi - lo) + k * ratio.abs().ln()
}

/// Running mass m_eff(k) = D₊(|k|²) for the unit sharp band in d = 3.
pub fn running_mass_sharp(m: f64, alpha: f64, lo: f64, hi: f64, k: f64) -> C64 {
    let a2 = alpha * alpha;
    if a2 == 0.0 {
        return C64::new(m, 0.0);
    }
    let k = k.abs();
    let h = h_rho_sharp(lo, hi, k * k);
    let re = m - 4.0 * PI * a2 / 3.0 * h;
    let im = if k >= lo && k <= hi { 4.0 * PI * PI * a2 / 3.0 * k } else { 0.0 };
    C64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeMassData {
    /// D(−E²) = 0.
    pub e: f64,
    /// γ = D′(−E²)^{−1/2}.
    pub gamma: f64,
    /// D′(−E²) = α²((d−1)/d)∫ φ̂²/(E² + ω²)² dk.
    pub d_prime: f64,
}

/// Zero −E² of D on the negative axis and γ for m in (−((d−1)/d)α²‖φ̂/ω‖², 0).
pub fn negative_mass_data(cut: &CutoffProfile, m: f64, alpha: f64, q: &Quadrature) -> Result<NegativeMassData, DispersionError> {
    let c = alpha * alpha * polarization(cut.dim());
    let bound = c * cut.weighted_norm(2, q)?;
    if !(m < 0.0) || !(m > -bound) {
        return Err(DispersionError::NoRoot(format!("m = {m} outside (−{bound}, 0)")));
    }
    let d_neg = |x: f64| -> Result<f64, DispersionError> { Ok(m + c * cut.radial_integral(|r| 1.0 / (x + r * r), q)?) };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut grow = 0;
    while d_neg(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(DispersionError::NoRoot("bracket expansion failed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d_neg(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let d_prime = c * cut.radial_integral(|r| (x + r * r).powi(-2), q)?;
    Ok(NegativeMassData { e: x.sqrt(), gamma: d_prime.powf(-0.5), d_prime })
}

/// Whether the boundary value D₊ stays away from zero along a grid of s in [lo², hi²].
pub fn min_abs_d_plus(cut: &CutoffProfile, m: f64, alpha: f64, samples: usize, q: &Quadrature) -> Result<f64, DispersionError> {
    let (lo, hi) = cut.support();
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let k = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
        let d = d_plus(cut, m, alpha, k * k, q)?;
        if d.d_plus.re.is_finite() {
            best = best.min(d.d_plus.norm());
        }
    }
    Ok(best)
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
    fn sharp_norms() {
        let c = band();
        assert!((c.weighted_norm(2, &q()).unwrap() - 4.0 * PI).abs() < 1e-10);
        assert!((c.weighted_norm(0, &q()).unwrap() - 28.0 * PI / 3.0).abs() < 1e-10);
        assert!((c.weighted_norm(3, &q()).unwrap() - 4.0 * PI * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn infrared_divergence() {
        let c = CutoffProfile::sharp(0.0, 2.0, 3).unwrap();
        assert_eq!(c.weighted_norm(3, &q()), Err(DispersionError::DivergentIntegral(3)));
        assert!(c.weighted_norm(2, &q()).is_ok());
        let t = CutoffProfile::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 0.0], 3).unwrap();
        assert!(t.weighted_norm(3, &q()).is_err());
        let t0 = CutoffProfile::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0], 3).unwrap();
        assert!(t0.weighted_norm(3, &q()).is_ok());
    }

    #[test]
    fn tabulated_interpolates() {
        let t = CutoffProfile::tabulated(vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 0.0], 3).unwrap();
        assert_eq!(t.value(1.5), 3.0);
        assert_eq!(t.value(0.5), 0.0);
        assert_eq!(t.value(3.5), 0.0);
        assert_eq!(t.support(), (1.0, 3.0));
        assert_eq!(t.jump_points(), vec![1.0]);
    }

    #[test]
    fn table_text_parsing() {
        let t = CutoffProfile::from_table_text("# r v\n0.5, 1\n1.0 2 # tail\n\n2.0 0\n", 3).unwrap();
        assert_eq!(t.value(0.75), 1.5);
        assert!(CutoffProfile::from_table_text("1 2 3\n", 3).is_err());
    }

    #[test]
    fn d_far_on_negative_axis() {
        let d = d_of_z(&band(), 1.0, 1.0, C64::new(-1e6, 0.0), &q()).unwrap();
        assert!((d.re - 1.0).abs() < 1e-3);
        assert!(d_of_z(&band(), 1.0, 1.0, C64::new(2.0, 0.0), &q()).is_err());
        let d0 = d_of_z(&band(), 1.0, 0.0, C64::new(0.3, 0.7), &q()).unwrap();
        assert_eq!(d0, C64::new(1.0, 0.0));
    }

    #[test]
    fn d_plus_at_zero_is_effective_mass() {
        let r = d_plus(&band(), 1.0, 1.0, 0.0, &q()).unwrap();
        assert!((r.d_plus.re - (1.0 + 8.0 * PI / 3.0)).abs() < 1e-9);
        assert_eq!(r.d_plus.im, 0.0);
    }

    #[test]
    fn closed_form_hilbert() {
        assert_eq!(h_rho_sharp(1.0, 2.0, 0.0), -2.0);
        assert_eq!(h_rho_sharp(1.5, 1.5, 3.0), 0.0);
        let pv = hilbert_rho(&band(), 2.0, &q()).unwrap();
        assert!((pv - h_rho_sharp(1.0, 2.0, 2.0)).abs() < 1e-8);
        assert_eq!(h_rho_sharp(1.0, 2.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(hilbert_rho(&band(), 4.0, &q()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn running_mass_matches_boundary_value() {
        assert!((running_mass_sharp(1.0, 1.0, 1.0, 2.0, 0.0).re - 9.377_580_409_572_781).abs() < 1e-12);
        for k in [0.3, 1.3, 1.7, 2.5, 7.0] {
            let a = running_mass_sharp(1.0, 0.8, 1.0, 2.0, k);
            let b = d_plus(&band(), 1.0, 0.8, k * k, &q()).unwrap().m_eff_k;
            assert!((a - b).norm() <= 1e-6 * a.norm(), "{k}: {a} vs {b}");
        }
    }

    #[test]
    fn negative_mass_root() {
        let c = band();
        let bound = polarization(3) * c.weighted_norm(2, &q()).unwrap();
        let nm = negative_mass_data(&c, -0.5 * bound, 1.0, &q()).unwrap();
        let d = d_of_z(&c, -0.5 * bound, 1.0, C64::new(-nm.e * nm.e, 0.0), &q()).unwrap();
        assert!(d.re.abs() < 1e-9);
        assert!(nm.gamma > 0.0);
        assert!(negative_mass_data(&c, -1.01 * bound, 1.0, &q()).is_err());
        assert!(negative_mass_data(&c, 0.5, 1.0, &q()).is_err());
    }
}
