//! Randomized invariants of the geometry, densities, energies and potentials.

use hypenergy::density::RadialDensity;
use hypenergy::energy::{interaction_energy, mean_pairwise_distance, pair_distance_sandwich, total_energy};
use hypenergy::geometry::{Isometry, Space};
use hypenergy::hls::{estimate_c0, integrated_hls_deficit, log_hls_deficit, HlsConfig};
use hypenergy::potentials::Potential;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c0_plane() -> f64 {
    static C0: OnceLock<f64> = OnceLock::new();
    *C0.get_or_init(|| estimate_c0(2).unwrap())
}

fn space() -> impl Strategy<Value = Space> {
    (2usize..=4, 0.25f64..4.0).prop_map(|(n, c)| Space::new(n, c).unwrap())
}

fn spatial(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric((s, a, b, c) in space().prop_flat_map(|s| {
        let n = s.dim();
        (Just(s), spatial(n), spatial(n), spatial(n))
    })) {
        let (x, y, z) = (s.lift(&a), s.lift(&b), s.lift(&c));
        let dxy = s.distance(&x, &y).unwrap();
        let dyx = s.distance(&y, &x).unwrap();
        let dxz = s.distance(&x, &z).unwrap();
        let dzy = s.distance(&z, &y).unwrap();
        prop_assert!(dxy >= 0.0);
        prop_assert!((dxy - dyx).abs() <= 1e-10 * (1.0 + dxy));
        prop_assert!(dxy <= dxz + dzy + 1e-9 * (1.0 + dxz + dzy));
        prop_assert!(s.distance(&x, &x).unwrap() < 1e-7);
    }

    #[test]
    fn exp_inverts_log((s, a, b) in space().prop_flat_map(|s| {
        let n = s.dim();
        (Just(s), spatial(n), spatial(n))
    })) {
        let (x, y) = (s.lift(&a), s.lift(&b));
        let v = s.log_map(&x, &y).unwrap();
        let d = s.distance(&x, &y).unwrap();
        prop_assert!((v.norm() - d).abs() <= 1e-8 * (1.0 + d));
        let back = s.exp_map(&x, &v);
        prop_assert!(s.distance(&back, &y).unwrap() <= 1e-7 * (1.0 + d));
    }

    #[test]
    fn isometries_preserve_distance((s, a, b, seed) in space().prop_flat_map(|s| {
        let n = s.dim();
        (Just(s), spatial(n), spatial(n), any::<u64>())
    })) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Isometry::random(&s, &mut rng, 1.0);
        let (x, y) = (s.lift(&a), s.lift(&b));
        let d = s.distance(&x, &y).unwrap();
        let dg = s.distance(&g.apply(&s, &x), &g.apply(&s, &y)).unwrap();
        prop_assert!((d - dg).abs() <= 1e-7 * (1.0 + d));
        prop_assert!(s.sheet_defect(&g.apply(&s, &x)) <= 1e-8 * (1.0 + x.coords()[0].powi(2)));
    }

    #[test]
    fn rauch_gap_is_nonnegative((s, a, b) in space().prop_flat_map(|s| {
        let n = s.dim();
        (Just(s), spatial(n), spatial(n))
    })) {
        let gap = s.rauch_gap(&s.lift(&a), &s.lift(&b), &s.pole()).unwrap();
        prop_assert!(gap >= -1e-9, "gap {gap}");
    }

    #[test]
    fn balls_have_unit_mass_and_log_volume_entropy(s in space(), r in 0.01f64..5.0) {
        let rho = RadialDensity::uniform_ball(&s, r).unwrap();
        prop_assert!((rho.mass() - 1.0).abs() < 1e-10);
        let expected = -s.ball_volume(r).ln();
        prop_assert!((rho.entropy() - expected).abs() < 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn pair_distance_sandwich_holds(r in 0.01f64..4.0, sigma in 0.05f64..3.0, c in 0.25f64..4.0) {
        let s = Space::new(2, c).unwrap();
        for rho in [
            RadialDensity::uniform_ball_with(&s, r, 24).unwrap(),
            RadialDensity::gaussian_like_with(&s, sigma, 48).unwrap(),
        ] {
            let w = pair_distance_sandwich(&rho);
            prop_assert!(w.holds(1e-6), "{w:?}");
            prop_assert!((w.mid - mean_pairwise_distance(&rho)).abs() < 1e-12 * (1.0 + w.mid));
        }
    }

    #[test]
    fn interaction_is_monotone_in_the_potential(r in 0.05f64..3.0, a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let s = Space::new(2, 1.0).unwrap();
        let rho = RadialDensity::uniform_ball_with(&s, r, 24).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let e_lo = interaction_energy(&rho, &Potential::linear(lo).unwrap()).unwrap();
        let e_hi = interaction_energy(&rho, &Potential::linear(hi).unwrap()).unwrap();
        prop_assert!(e_lo <= e_hi + 1e-12);
        let t = total_energy(&rho, &Potential::linear(lo).unwrap()).unwrap();
        prop_assert!((t.total - t.entropy - t.interaction).abs() < 1e-12 * (1.0 + t.total.abs()));
    }

    #[test]
    fn constant_shift_moves_interaction_by_half(r in 0.05f64..3.0, k in -5.0f64..5.0) {
        let s = Space::new(3, 0.5).unwrap();
        let rho = RadialDensity::uniform_ball_with(&s, r, 24).unwrap();
        let h = Potential::linear(2.0).unwrap();
        let e = interaction_energy(&rho, &h).unwrap();
        let e_shift = interaction_energy(&rho, &h.shifted(k)).unwrap();
        prop_assert!((e_shift - e - 0.5 * k).abs() < 1e-9 * (1.0 + e.abs() + k.abs()));
    }

    #[test]
    fn potentials_are_nondecreasing(a1 in 0.0f64..6.0, slope in 0.0f64..4.0, t in 1e-4f64..20.0, dt in 1e-6f64..5.0) {
        let h = Potential::log_linear(a1, slope).unwrap();
        prop_assert!(h.eval(t + dt) >= h.eval(t));
        prop_assert!(h.deriv(t) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn log_hls_deficits_are_nonnegative(sigma in 0.05f64..3.0, r in 0.01f64..3.0, c in 0.25f64..4.0) {
        let s = Space::new(2, c).unwrap();
        let cfg = HlsConfig::user(c0_plane());
        for rho in [
            RadialDensity::uniform_ball_with(&s, r, 24).unwrap(),
            RadialDensity::gaussian_like_with(&s, sigma, 48).unwrap(),
        ] {
            prop_assert!(log_hls_deficit(&rho, &cfg) >= -1e-6);
            prop_assert!(integrated_hls_deficit(&rho, &cfg) >= -1e-6);
        }
    }
}
