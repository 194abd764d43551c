//! Cross-module checks against independently computed references.

use std::f64::consts::PI;
use std::sync::Arc;

use pfspec::binding::{critical_mass, PotentialSpec};
use pfspec::dispersion::{d_of_z, d_plus, CutoffProfile};
use pfspec::fock::{vacuum_moment, FockSpace};
use pfspec::gse::{effective_mass, ground_energy, ground_energy_sharp, ModelParams};
use pfspec::lattice::{build, energy_closed, energy_eigen, LatticeConfig};
use pfspec::nelson::{radial_ground_energy, RadialProblem};
use pfspec::numerics::cmat::C64;
use pfspec::numerics::Quadrature;

fn q() -> Quadrature {
    Quadrature::default()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn sharp_band_effective_mass() {
    // ‖φ̂/ω‖² = 4π(Λ − λ)n² for the band, polarization factor 2/3
    let cut = CutoffProfile::sharp(0.5, 3.0, 3).unwrap().with_normalization(0.8).unwrap();
    let prm = ModelParams::new(2.0, 0.7, 3).unwrap();
    let expect = 2.0 + 0.49 * (2.0 / 3.0) * 4.0 * PI * 2.5 * 0.64;
    assert!((effective_mass(&cut, &prm, &q()).unwrap() - expect).abs() < 1e-10 * expect);
}

#[test]
fn generic_g_matches_single_integral() {
    for (lo, hi, m) in [(1.0, 2.0, 1.0), (0.5, 4.0, 3.0), (2.0, 3.0, 0.2)] {
        let cut = CutoffProfile::sharp(lo, hi, 3).unwrap();
        let generic = ground_energy(&cut, &ModelParams::new(m, 1.0, 3).unwrap(), &q()).unwrap();
        let closed = ground_energy_sharp(lo, hi, m, &q()).unwrap();
        assert!((generic - closed).abs() < 1e-8 * closed, "{lo} {hi} {m}: {generic} vs {closed}");
    }
}

#[test]
fn lattice_closed_form_beyond_small_coupling() {
    let cut = CutoffProfile::sharp(1.0, 2.0, 3).unwrap();
    for alpha in [1.0, 2.0, 3.0] {
        let prm = ModelParams::new(1.0, alpha, 3).unwrap().with_p(vec![0.3, -1.0, 0.5]).unwrap();
        let mats = build(&cut, &prm, &LatticeConfig::new(4.0, 1.0, 0.5).unwrap()).unwrap();
        let e = energy_eigen(&mats, &prm).unwrap();
        let c = energy_closed(&mats, &prm, &q()).unwrap();
        assert!((e - c).abs() < 1e-8 * (1.0 + e.abs()), "α = {alpha}: {e} vs {c}");
    }
}

#[test]
fn boundary_value_is_limit_from_upper_half_plane() {
    let cut = CutoffProfile::sharp(1.0, 2.0, 3).unwrap();
    let s = 2.5;
    let dp = d_plus(&cut, 1.0, 0.6, s, &q()).unwrap().d_plus;
    let near = d_of_z(&cut, 1.0, 0.6, C64::new(s, 1e-4), &q()).unwrap();
    assert!((near - dp).norm() < 1e-3 * dp.norm(), "{near} vs {dp}");
}

#[test]
fn critical_mass_scales_like_shooting_threshold() {
    // zero-energy threshold of a square well: √(2mV₀)R = π/2
    for (v0, r) in [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)] {
        let pot = PotentialSpec::well(v0, r).unwrap();
        let m_c = critical_mass(&pot, 0.0, 400).unwrap().m_c;
        let expect = PI * PI / (8.0 * v0 * r * r);
        assert!((m_c - expect).abs() < 1e-4 * expect, "{v0} {r}: {m_c} vs {expect}");
    }
}

#[test]
fn radial_well_ground_energy() {
    // k cot(kR) = −q with k² = 2μ(V₀ − |E|), q² = 2μ|E|
    let (mu, v0, r) = (1.0, 5.0, 1.0);
    let f = |b: f64| {
        let k = (2.0 * mu * (v0 - b)).sqrt();
        let qq = (2.0 * mu * b).sqrt();
        k / (k * r).tan() + qq
    };
    // the ground state has kR in (π/2, π)
    let b_lo = v0 - PI * PI / (2.0 * mu) + 1e-9;
    let b_hi = v0 - PI * PI / (8.0 * mu) - 1e-9;
    let binding = bisect(f, b_lo, b_hi);
    let prob = RadialProblem::new(mu, Arc::new(move |x: f64| if x < r { -v0 } else { 0.0 }), 15.0, 8000).unwrap();
    let e = radial_ground_energy(&prob).unwrap().energy;
    assert!((e + binding).abs() < 2e-4 * binding, "{e} vs {}", -binding);
}

#[test]
fn real_vacuum_moment_is_gaussian() {
    let space = FockSpace::new(2, 20).unwrap();
    let f = [0.3, -0.4];
    let z = C64::new(0.8, 0.0);
    let m = vacuum_moment(&space, &f, z, 40).unwrap();
    let expect = (0.64 * 0.25 / 4.0f64).exp();
    assert!((m.re - expect).abs() < 1e-12 && m.im.abs() < 1e-15);
}
