//! Adaptive Gauss-Kronrod quadrature, improper endpoints and principal values.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::NumericsError;

// 15-point Kronrod abscissae (positive half) with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-11, max_subdivisions: 4000 }
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self, NumericsError> {
        let q = Self { abs_tol, rel_tol, max_subdivisions };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || self.abs_tol + self.rel_tol <= 0.0 {
            return Err(NumericsError::InvalidInput("tolerances must be nonnegative with positive sum".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(NumericsError::InvalidInput("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value and error estimate of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, NumericsError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(NumericsError::InvalidInput(format!("integrand not finite at {c}")));
    }
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(NumericsError::InvalidInput(format!("integrand not finite near {}", c - dx)));
        }
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let value = resk * h;
    let error = ((resk - resg) * h).abs();
    Ok(Segment { a, b, value, error })
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, q: &Quadrature) -> Result<Estimate, NumericsError> {
    let first = kronrod(f, a, b)?;
    let mut total = first.value;
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut count = 1;
    // Tiny roundoff floor so smooth integrands that are already exact terminate.
    let floor = 50.0 * f64::EPSILON;
    while err > q.target(total) && err > floor * total.abs() {
        if count >= q.max_subdivisions {
            return Err(NumericsError::NonConvergence {
                what: "adaptive quadrature",
                detail: format!("error {err:.3e} after {count} subdivisions on [{a}, {b}]"),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(NumericsError::NonConvergence {
                what: "adaptive quadrature",
                detail: format!("interval collapsed near {mid}"),
            });
        }
        let left = kronrod(f, worst.a, mid)?;
        let right = kronrod(f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
        if count % 64 == 0 {
            // Re-sum to stop drift in the running totals.
            total = heap.iter().map(|s| s.value).sum();
            err = heap.iter().map(|s| s.error).sum();
        }
    }
    Ok(Estimate { value: total, error: err })
}

/// Integrates `f` over `(a, b)`; either endpoint may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, q: &Quadrature) -> Result<f64, NumericsError> {
    integrate_estimate(f, a, b, q).map(|e| e.value)
}

/// Same as [`integrate`] but also returns the error estimate.
pub fn integrate_estimate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    q: &Quadrature,
) -> Result<Estimate, NumericsError> {
    q.validate()?;
    estimate_dyn(&f, a, b, q)
}

fn estimate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, q: &Quadrature) -> Result<Estimate, NumericsError> {
    if a.is_nan() || b.is_nan() {
        return Err(NumericsError::InvalidInput("NaN integration limit".into()));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if a > b {
        return estimate_dyn(f, b, a, q).map(|e| Estimate { value: -e.value, error: e.error });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, q),
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, q)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, q)
        }
        (false, false) => {
            let left = estimate_dyn(f, f64::NEG_INFINITY, 0.0, q)?;
            let right = estimate_dyn(f, 0.0, f64::INFINITY, q)?;
            Ok(Estimate { value: left.value + right.value, error: left.error + right.error })
        }
    }
}

/// Integrates over `(a, b)` split at interior `breaks` (kinks, jumps).
pub fn integrate_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    q: &Quadrature,
) -> Result<f64, NumericsError> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut lo = a;
    let mut sum = 0.0;
    for &p in pts.iter().chain(std::iter::once(&b)) {
        sum += integrate(&f, lo, p, q)?;
        lo = p;
    }
    Ok(sum)
}

/// Principal value of ∫ₐᵇ f(x)/(s−x) dx for a < s < b.
pub fn integrate_pv<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, s: f64, q: &Quadrature) -> Result<f64, NumericsError> {
    q.validate()?;
    if [a, b, s].iter().any(|v| v.is_nan()) {
        return Err(NumericsError::InvalidInput("NaN argument to principal value".into()));
    }
    if !(a < s && s < b) {
        return Err(NumericsError::SingularityAtEndpoint { s, a, b });
    }
    let h = (s - a).min(b - s);
    let inner = integrate(|u: f64| (f(s - u) - f(s + u)) / u, 0.0, h, q)?;
    let outer = if s - a > h {
        integrate(|x: f64| f(x) / (s - x), a, s - h, q)?
    } else if b - s > h {
        integrate(|x: f64| f(x) / (s - x), s + h, b, q)?
    } else {
        0.0
    };
    Ok(inner + outer)
}

/// Romberg table for a smooth function on [a, b] starting from `panels` trapezoid panels.
pub fn romberg<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> Result<f64, NumericsError> {
    if a == b {
        return Ok(0.0);
    }
    let n0 = panels.max(1);
    let mut n = n0;
    let mut h = (b - a) / n as f64;
    let mut trap = 0.5 * (f(a) + f(b)) + (1..n).map(|i| f(a + i as f64 * h)).sum::<f64>();
    trap *= h;
    let mut prev = vec![trap];
    for _level in 1..20 {
        let mid: f64 = (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum();
        let t = 0.5 * prev[0] + 0.5 * h * mid;
        n *= 2;
        h *= 0.5;
        let mut row = vec![t];
        let mut factor = 1.0;
        for k in 0..prev.len() {
            factor *= 4.0;
            let r = row[k] + (row[k] - prev[k]) / (factor - 1.0);
            row.push(r);
        }
        let last = *row.last().unwrap();
        let before = *prev.last().unwrap();
        if !last.is_finite() {
            return Err(NumericsError::InvalidInput("non-finite Romberg sample".into()));
        }
        if (last - before).abs() <= tol * (1.0 + last.abs()) {
            return Ok(last);
        }
        prev = row;
    }
    Err(NumericsError::NonConvergence { what: "romberg", detail: format!("no convergence from {n0} panels") })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = Quadrature::default();
        assert!((integrate(|x| x, 0.0, 1.0, &q).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponential_tail() {
        let q = Quadrature::default();
        let v = integrate(|x: f64| (-x).exp(), 0.0, f64::INFINITY, &q).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        let w = integrate(|x: f64| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &q).unwrap();
        assert!((w - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = Quadrature::default();
        let v = integrate(|x: f64| x.sin(), 1.0, 0.0, &q).unwrap();
        assert!((v + (1.0 - 1f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn nan_integrand_rejected() {
        let q = Quadrature::default();
        assert!(matches!(integrate(|_| f64::NAN, 0.0, 1.0, &q), Err(NumericsError::InvalidInput(_))));
    }

    #[test]
    fn budget_exhaustion_reports_nonconvergence() {
        let q = Quadrature { abs_tol: 1e-15, rel_tol: 0.0, max_subdivisions: 3 };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &q);
        assert!(matches!(r, Err(NumericsError::NonConvergence { .. })));
    }

    #[test]
    fn pv_constant_vanishes() {
        let q = Quadrature::default();
        let v = integrate_pv(|_| 1.0, 0.3, 2.3, 1.3, &q).unwrap();
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn pv_linear_closed_form() {
        let q = Quadrature::default();
        let v = integrate_pv(|x| x, 0.0, 2.0, 1.0, &q).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
        // asymmetric placement exercises the outer piece
        let s = 0.5;
        let w = integrate_pv(|x| x, 0.0, 2.0, s, &q).unwrap();
        let exact = -2.0 + s * (s / (2.0 - s)).ln();
        assert!((w - exact).abs() < 1e-12, "{w} vs {exact}");
    }

    #[test]
    fn pv_rejects_endpoint() {
        let q = Quadrature::default();
        assert!(matches!(integrate_pv(|x| x, 0.0, 1.0, 1.0, &q), Err(NumericsError::SingularityAtEndpoint { .. })));
    }

    #[test]
    fn romberg_smooth() {
        let v = romberg(|x: f64| x.cos(), 0.0, 1.0, 8, 1e-14).unwrap();
        assert!((v - 1f64.sin()).abs() < 1e-13);
    }
}
