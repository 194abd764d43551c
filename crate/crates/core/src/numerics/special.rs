//! Sine integral and the few Bessel orders needed for radial Fourier transforms.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::NumericsError;

/// Si(x) = ∫₀ˣ sin t / t dt.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return FRAC_PI_2;
    }
    if x <= 2.0 {
        // alternating power series, terms shrink fast for x ≤ 2
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0usize;
        loop {
            n += 1;
            let k = (2 * n) as f64;
            term *= -x2 / (k * (k + 1.0));
            let add = term / (k + 1.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    // Lentz continued fraction for E₁(ix), then Si = π/2 + Im(e^{-ix} h).
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..100_000usize {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += Complex64::new(2.0, 0.0);
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(x.cos(), -x.sin());
    FRAC_PI_2 + h.im
}

/// Bessel function of the first kind for ν ∈ {1/2, 1, 3/2, 2}.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64, NumericsError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(NumericsError::InvalidInput(format!("bessel argument {x}")));
    }
    if nu == 0.5 {
        if x == 0.0 {
            return Ok(0.0);
        }
        return Ok((2.0 / (PI * x)).sqrt() * x.sin());
    }
    if nu == 1.5 {
        if x < 0.5 {
            return Ok(power_series(1.5, x));
        }
        return Ok((2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos()));
    }
    if nu == 1.0 || nu == 2.0 {
        return Ok(integer_order(nu as i32, x));
    }
    Err(NumericsError::UnsupportedOrder(nu))
}

fn gamma_half_integer_or_int(z: f64) -> f64 {
    // Γ(z) for z a positive integer or half-integer
    if z == 0.5 {
        return PI.sqrt();
    }
    if z == 1.0 {
        return 1.0;
    }
    (z - 1.0) * gamma_half_integer_or_int(z - 1.0)
}

fn power_series(nu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h.powf(nu) / gamma_half_integer_or_int(nu + 1.0);
    let mut sum = term;
    for n in 1..200 {
        let n = n as f64;
        term *= -h * h / (n * (n + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

// J_n(x) = (1/2π)∫₀^{2π} cos(nτ − x sin τ) dτ; the periodic trapezoid rule converges
// geometrically once the node count exceeds the effective bandwidth ~ x.
fn integer_order(n: i32, x: f64) -> f64 {
    let nodes = (2.0 * x + 64.0).ceil() as usize;
    let h = 2.0 * PI / nodes as f64;
    let nf = n as f64;
    let s: f64 = (0..nodes)
        .map(|i| {
            let t = i as f64 * h;
            (nf * t - x * t.sin()).cos()
        })
        .sum();
    s / nodes as f64
}

/// Surface area of the unit sphere S^{d−1} ⊂ ℝᵈ.
pub fn sphere_area(d: usize) -> f64 {
    // 2π^{d/2}/Γ(d/2), by the recursion |S^{d+1}| = 2π/d · |S^{d−1}|
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn si_origin_and_pi() {
        assert_eq!(sine_integral(0.0), 0.0);
        assert!((sine_integral(PI) - 1.851_937_051_982_466).abs() < 1e-13);
    }

    #[test]
    fn si_branches_agree_at_two() {
        let below = sine_integral(2.0);
        let above = sine_integral(2.0 + 1e-12);
        assert!((below - above).abs() < 1e-11);
        assert!((below - 1.605_412_976_802_694_9).abs() < 1e-14);
    }

    #[test]
    fn si_large_argument() {
        assert!((sine_integral(100.0) - FRAC_PI_2).abs() < 0.011);
        assert!((sine_integral(100.0) - 1.562_225_466_889_056).abs() < 1e-12);
    }

    #[test]
    fn bessel_half() {
        assert!(bessel_j(0.5, PI).unwrap().abs() < 1e-15);
        assert!((bessel_j(0.5, FRAC_PI_2).unwrap() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn bessel_one() {
        assert!((bessel_j(1.0, 1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-13);
    }

    #[test]
    fn bessel_unsupported() {
        assert!(matches!(bessel_j(0.7, 1.0), Err(NumericsError::UnsupportedOrder(_))));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
