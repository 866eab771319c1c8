//! Randomized invariants of the self-energy, the pole search and the dynamics.

use bswg_core::green::{
    pole_function, pole_function_at_depth, self_energy, self_energy_complex, self_energy_in_band,
    spectral_density,
};
use bswg_core::roots::linear_grid;
use bswg_core::{
    evolve, find_bocs, region_scan, BocSearch, EmitterArray, EvolveOptions, LatticeParams,
    ProjectionBasis, ScanGrid, ScanOptions, Sector, SingleExcitationState,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn unit() -> LatticeParams {
    LatticeParams::default()
}

fn sector() -> impl Strategy<Value = Sector> {
    prop_oneof![Just(Sector::Plus), Just(Sector::Minus)]
}

proptest! {
    #[test]
    fn dispersion_is_even_and_inverted(k in 0.0..std::f64::consts::PI) {
        let l = unit();
        prop_assert_eq!(l.dispersion(k), l.dispersion(-k));
        let e = l.dispersion(k);
        if l.in_band(e) {
            prop_assert!((l.wavevector_of_energy(e).unwrap() - k).abs() < 1e-7);
        }
    }

    #[test]
    fn retarded_branch_has_non_positive_imaginary_part(
        e in -1.999..1.999f64, x in 1usize..64, g in 0.0..0.5f64, s in sector(),
    ) {
        let v = self_energy_in_band(e, x, s, &unit(), g).unwrap();
        prop_assert!(v.value.im <= 0.0);
    }

    #[test]
    fn continuation_off_the_axis_is_retarded(
        re in -4.0..4.0f64, eta in 1e-6..1.0f64, x in 1usize..64, s in sector(),
    ) {
        let v = self_energy_complex(Complex64::new(re, eta), x, s, &unit(), 0.1).unwrap();
        prop_assert!(v.im <= 0.0);
    }

    #[test]
    fn sector_sum_rule(e in -1.999..1.999f64, x in 1usize..64, g in 0.001..0.5f64) {
        let l = unit();
        let sum = self_energy_in_band(e, x, Sector::Plus, &l, g).unwrap().value
            + self_energy_in_band(e, x, Sector::Minus, &l, g).unwrap().value;
        let j = spectral_density(e, &l, g).unwrap();
        prop_assert!((sum - Complex64::new(0.0, -2.0 * j)).norm() <= 1e-14 * j.max(1e-300) * 4.0);
    }

    #[test]
    fn odd_separation_mirror(delta in 2.0001..10.0f64, half in 0usize..40, g in 0.001..0.5f64, s in sector()) {
        let x = 2 * half + 1;
        let l = unit();
        let below = self_energy(-delta, x, s, &l, g).unwrap().value.re;
        let above = self_energy(delta, x, s.flipped(), &l, g).unwrap().value.re;
        prop_assert!((below + above).abs() <= 1e-12 * below.abs().max(above.abs()).max(1e-12));
    }

    #[test]
    fn pole_slope_exceeds_one_outside_the_band(
        depth in 1e-4..5.0f64, above in any::<bool>(), x in 1usize..40, g in 0.001..0.5f64, s in sector(),
    ) {
        let l = unit();
        let e = if above { 2.0 + depth } else { -2.0 - depth };
        let em = EmitterArray::new(vec![0.3; 2], g, vec![0, x]).unwrap();
        let f = pole_function(e, s, &em, &l, true).unwrap();
        prop_assert!(f.value.im == 0.0);
        prop_assert!(f.derivative.unwrap().re >= 1.0 - 1e-9);
    }

    #[test]
    fn boc_residues_lie_in_unit_interval(delta in -1.99..1.99f64, x in 1usize..40, g in 0.005..0.4f64) {
        let l = unit();
        let em = EmitterArray::new(vec![delta; 2], g, vec![0, x]).unwrap();
        let states = find_bocs(&em, &l, &BocSearch::both_sides()).unwrap();
        for s in Sector::BOTH {
            let total: f64 = states.iter().filter(|b| b.sector == s).map(|b| b.residue).sum();
            prop_assert!(total <= 1.0 + 1e-12);
        }
        for b in &states {
            prop_assert!(b.residue > 0.0 && b.residue <= 1.0);
            prop_assert!(!l.in_band(b.energy));
            let (f, _) = pole_function_at_depth(b.kind.side().unwrap(), b.depth.unwrap(), b.sector, &em, &l).unwrap();
            prop_assert!(f.abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn populations_are_consistent_and_mirror_symmetric(
        delta in -1.9..1.9f64, g in 0.0..0.3f64, x in 1usize..12, left in any::<bool>(),
    ) {
        // even length and odd x put the pair symmetric about the centre
        let x = 2 * (x / 2) + 1;
        let n = 150;
        let l = unit().with_cavities(n);
        let em = EmitterArray::centered_pair(n, x, delta, g).unwrap();
        prop_assert_eq!(em.positions[0] + em.positions[1], n - 1);
        let times = linear_grid(0.0, 15.0, 31);
        let opts = EvolveOptions { field_map: true, ..Default::default() };
        let psi = SingleExcitationState::emitter_excited(2, n, if left { 0 } else { 1 }).unwrap();
        let a = evolve(&psi, &l, &em, &times, &opts).unwrap();
        let b = evolve(&psi.mirrored(), &l, &em, &times, &opts).unwrap();
        prop_assert!(a.max_norm_error() <= 1e-9);
        let fa = a.field_map.as_ref().unwrap();
        let fb = b.field_map.as_ref().unwrap();
        for t in 0..times.len() {
            for i in 0..n {
                prop_assert!((fa[[t, i]] - fb[[t, n - 1 - i]]).abs() <= 1e-12);
            }
        }
        let site = a.populations(ProjectionBasis::Site).unwrap();
        let sec = a.populations(ProjectionBasis::Sector).unwrap();
        for t in 0..times.len() {
            let lhs = site.values[0][t] + site.values[1][t];
            let rhs = sec.values[0][t] + sec.values[1][t];
            prop_assert!((lhs - rhs).abs() <= 1e-12);
            prop_assert!(site.values.iter().all(|p| (0.0..=1.0 + 1e-12).contains(&p[t])));
        }
    }
}

#[test]
fn scan_is_independent_of_thread_count() {
    let grid = ScanGrid::new(linear_grid(-1.9, 1.9, 17), linear_grid(0.01, 0.3, 16)).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| region_scan(11, &unit(), &grid, &ScanOptions::default()).unwrap())
    };
    let one = run(1);
    let many = run(8);
    assert_eq!(one, many);
    assert_eq!(
        serde_json::to_string(&one).unwrap(),
        serde_json::to_string(&many).unwrap()
    );
}
