use proptest::prelude::*;

use pfspec::binding::{bs_kernel, verdict, PotentialSpec, Verdict};
use pfspec::dispersion::{d_plus, CutoffProfile};
use pfspec::fock::{ladder, sector_residual, FockSpace, Ladder};
use pfspec::gse::{effective_mass, ground_energy_sharp, ModelParams};
use pfspec::lattice::{build, richardson, LatticeConfig};
use pfspec::nelson::veff_sharp3d;
use pfspec::numerics::cmat::C64;
use pfspec::numerics::{trace_sqrt, Quadrature};
use pfspec::symplectic::{verify_symplectic, SymplecticPair};

fn q() -> Quadrature {
    Quadrature::default()
}

fn rank(v: Verdict) -> u8 {
    match v {
        Verdict::NoGroundState => 0,
        Verdict::Undecided => 1,
        Verdict::GroundStateLargeScale => 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn g_is_nonnegative_and_monotone(lo in 0.1f64..2.0, width in 0.5f64..4.0, m in 0.5f64..20.0) {
        let hi = lo + width;
        let g = ground_energy_sharp(lo, hi, m, &q()).unwrap();
        prop_assert!(g >= 0.0);
        let wider = ground_energy_sharp(lo, hi * 1.5, m, &q()).unwrap();
        prop_assert!(wider >= g);
        let heavier = ground_energy_sharp(lo, hi, m * 2.0, &q()).unwrap();
        prop_assert!(heavier <= g);
    }

    #[test]
    fn effective_mass_exceeds_bare_mass(m in 0.1f64..5.0, alpha in -2.0f64..2.0) {
        let cut = CutoffProfile::sharp(1.0, 2.0, 3).unwrap();
        let prm = ModelParams::new(m, alpha, 3).unwrap();
        prop_assert!(effective_mass(&cut, &prm, &q()).unwrap() >= m);
    }

    #[test]
    fn boundary_value_has_nonnegative_imaginary_part(s in 0.0f64..9.0, alpha in 0.0f64..2.0) {
        prop_assume!((s.sqrt() - 1.0).abs() > 1e-6 && (s.sqrt() - 2.0).abs() > 1e-6);
        let cut = CutoffProfile::sharp(1.0, 2.0, 3).unwrap();
        let r = d_plus(&cut, 1.0, alpha, s, &q()).unwrap();
        prop_assert!(r.d_plus.im >= 0.0);
        prop_assert_eq!(r.d_minus, r.d_plus.conj());
    }

    #[test]
    fn lattice_field_energy_is_nonnegative(alpha in 0.0f64..2.0, eps in 0.1f64..1.0) {
        // ½ tr(√A − √A₀) ≥ 0 because A − A₀ is positive semidefinite
        let cut = CutoffProfile::sharp(1.0, 2.0, 3).unwrap();
        let prm = ModelParams::new(1.0, alpha, 3).unwrap();
        let cfg = LatticeConfig::new(4.0, 1.0, eps).unwrap();
        let mats = build(&cut, &prm, &cfg).unwrap();
        let a = trace_sqrt(&mats.a_matrix()).unwrap();
        let a0: f64 = mats.a0.iter().map(|x| x.sqrt()).sum();
        prop_assert!(0.5 * (a - a0) >= -1e-12);
    }

    #[test]
    fn verdict_is_monotone_in_coupling(a0 in 0.0f64..2.0, gap in 0.0f64..2.0, x in 0.0f64..5.0, dx in 0.0f64..1.0) {
        let ae = a0 + gap;
        prop_assert!(rank(verdict(x, a0, ae)) <= rank(verdict(x + dx, a0, ae)));
    }

    #[test]
    fn pair_potential_is_deepest_at_origin(kappa in 0.0f64..1.0, width in 0.1f64..4.0, x in 0.0f64..30.0) {
        let cutoff = kappa + width;
        let v0 = veff_sharp3d(1.0, 1.0, kappa, cutoff, 0.0);
        prop_assert!(veff_sharp3d(1.0, 1.0, kappa, cutoff, x) >= v0 - 1e-15);
    }

    #[test]
    fn ccr_holds_below_the_cap(re in proptest::collection::vec(-1.0f64..1.0, 4), im in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let space = FockSpace::new(2, 6).unwrap();
        let f = [C64::new(re[0], im[0]), C64::new(re[1], im[1])];
        let g = [C64::new(re[2], im[2]), C64::new(re[3], im[3])];
        let a = ladder(&space, &f, Ladder::Annihilate).unwrap();
        let ad = ladder(&space, &g, Ladder::Create).unwrap();
        let c: C64 = f.iter().zip(&g).map(|(x, y)| x * y).sum();
        prop_assert!(sector_residual(&space, &a.commutator(&ad), c, 5) < 1e-13);
    }

    #[test]
    fn squeeze_is_symplectic(theta in -2.0f64..2.0) {
        prop_assert!(verify_symplectic(&SymplecticPair::squeeze(theta), 1e-10).unwrap().in_sp);
    }

    #[test]
    fn bs_norm_grows_with_energy(e in -3.0f64..-0.01, de in 0.0f64..0.5) {
        let pot = PotentialSpec::well(1.0, 1.0).unwrap();
        let lower = bs_kernel(&pot, e, 64).unwrap().norm().unwrap();
        let upper = bs_kernel(&pot, (e + de).min(0.0), 64).unwrap().norm().unwrap();
        prop_assert!(upper >= lower - 1e-12);
    }

    #[test]
    fn richardson_removes_named_orders(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0) {
        let vals: Vec<f64> = (0..3).map(|k| { let h = 0.5f64.powi(k); c0 + c1 * h + c2 * h * h }).collect();
        prop_assert!((richardson(&vals, &[1, 2]) - c0).abs() < 1e-10);
    }
}
