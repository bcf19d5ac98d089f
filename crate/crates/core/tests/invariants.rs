//! Property tests over the public API.

use perdyn_core::dynamics::{activity_potential, find_cycles, green_function, GREEN_MAX_ITER, GREEN_TOL};
use perdyn_core::dynatomic::{divisors, nu};
use perdyn_core::family::{builtin_rational, builtin_unicritical, HomogeneousMap};
use perdyn_core::geometry::wedge_pair;
use perdyn_core::param_loci::{critical_orbit_polynomial, h_polynomial, Divisor, DivisorEntry};
use perdyn_core::potentials::{divisor_potential_grid, laplacian_mass, GridSpec, Serial};
use perdyn_core::{MarkedFamily, ProjectivePoint, Region, C64};
use proptest::prelude::*;

fn families() -> Vec<MarkedFamily> {
    vec![builtin_unicritical(2).unwrap(), builtin_unicritical(3).unwrap(), builtin_rational().unwrap()]
}

fn coord(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b))
}

fn point() -> impl Strategy<Value = ProjectivePoint> {
    (coord(3.0), coord(3.0))
        .prop_filter("nonzero", |(a, b)| a.norm() + b.norm() > 1e-2)
        .prop_map(|(a, b)| ProjectivePoint::new(a, b).unwrap())
}

fn scalar() -> impl Strategy<Value = C64> {
    (0.05f64..20.0, 0.0f64..6.3).prop_map(|(r, t)| C64::from_polar(r, t))
}

/// Parameters of the rational family stay away from its degenerate `λ = ±1`.
fn lambda() -> impl Strategy<Value = C64> {
    coord(0.8)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn green_is_homogeneous(fi in 0usize..3, l in lambda(), p in point(), k in scalar()) {
        let f = &families()[fi];
        let g0 = green_function(f, l, &p, GREEN_TOL, GREEN_MAX_ITER).unwrap();
        let g1 = green_function(f, l, &p.scaled(k), GREEN_TOL, GREEN_MAX_ITER).unwrap();
        prop_assert!((g1 - g0 - k.norm().ln()).abs() < 1e-9);
    }

    #[test]
    fn green_functional_equation(fi in 0usize..3, l in lambda(), p in point()) {
        let f = &families()[fi];
        let img = f.at(l).apply(p.pair());
        let q = ProjectivePoint::new(img[0], img[1]).unwrap();
        let g0 = green_function(f, l, &p, GREEN_TOL, GREEN_MAX_ITER).unwrap();
        let g1 = green_function(f, l, &q, GREEN_TOL, GREEN_MAX_ITER).unwrap();
        prop_assert!((g1 - f.degree() as f64 * g0).abs() < 1e-8 * g0.abs().max(1.0));
    }

    #[test]
    fn jacobian_factors_through_critical_lifts(fi in 0usize..3, l in lambda(), p in point()) {
        let f = &families()[fi];
        let det = f.at(l).det_jacobian(p.pair());
        let prod: C64 = (0..f.critical.len()).map(|j| wedge_pair(&p.pair(), &f.critical_at(j, l).unwrap())).product();
        let scale = det.norm().max(prod.norm()).max(1e-300);
        prop_assert!((det - prod).norm() <= 1e-10 * scale);
    }

    #[test]
    fn activity_is_conjugation_symmetric(fi in 0usize..3, l in lambda()) {
        let f = &families()[fi];
        for j in 0..f.critical.len() {
            let a = activity_potential(f, j, l).unwrap();
            let b = activity_potential(f, j, l.conj()).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nu_sums_to_fixed_point_count(n in 1usize..=12, d in 2usize..=3) {
        let s: u128 = divisors(n).into_iter().map(|m| nu(m, d)).sum();
        prop_assert_eq!(s, (d as u128).pow(n as u32) + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn fixed_points_counted_with_multiplicity(fi in 0usize..3, l in lambda(), n in 1usize..=4) {
        let f = &families()[fi];
        let set = find_cycles(f, l, n).unwrap();
        prop_assert_eq!(set.total_multiplicity(), f.degree().pow(n as u32) + 1);
    }

    #[test]
    fn orbit_degree_splits_over_exact_periods(fi in 0usize..3, n in 1usize..=7) {
        let f = &families()[fi];
        for j in 0..f.critical.len() {
            let p = critical_orbit_polynomial(f, j, n).unwrap();
            let hs: Vec<usize> = divisors(n)
                .into_iter()
                .map(|m| h_polynomial(f, j, m).unwrap().degree().unwrap_or(0))
                .collect();
            prop_assert_eq!(p.degree().unwrap_or(0), hs.iter().sum::<usize>());
        }
    }

    #[test]
    fn divisor_mass_matches_count(
        roots in prop::collection::vec(coord(0.7), 1..6),
        norm in 1.0f64..20.0,
    ) {
        let entries = roots
            .iter()
            .map(|&root| DivisorEntry { root, multiplicity: 1, residual: 0.0, converged: true })
            .collect();
        let div = Divisor { entries, normalization: norm, degree: roots.len(), ..Divisor::empty(norm, false) };
        let spec = GridSpec::new(Region::new(-1.5, 1.5, -1.5, 1.5).unwrap(), 151, 151).unwrap();
        let grid = divisor_potential_grid(&div, spec, &Serial).unwrap();
        let big = Region::new(-1.2, 1.2, -1.2, 1.2).unwrap();
        let m = laplacian_mass(&grid, &big).unwrap();
        let expect = roots.len() as f64 / norm;
        prop_assert!((m - expect).abs() <= 0.02 * expect, "{} vs {}", m, expect);
    }
}
