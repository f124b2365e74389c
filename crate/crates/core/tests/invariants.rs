//! Cross-module physical invariants of the loop states, plus randomized
//! property suites over the numerical kernels.

use proptest::prelude::*;

use timebin_core::arch::ArchitectureSpec;
use timebin_core::fock::{beam_splitter, CouplerSpec, FockDim};
use timebin_core::mps::{build_single_loop, canonicalize};
use timebin_core::observables::{
    area_law_bound, entropy_profile, loop_mean_occupation, occupation_profile, schmidt_spectrum,
};
use timebin_core::tensor::{contract, svd_split, ComplexTensor};
use timebin_core::C64;

const PI: f64 = std::f64::consts::PI;

#[test]
fn entropy_stays_below_loop_occupation_bound_for_mixed_patterns() {
    // Nonuniform input trains: every cut obeys E <= g(n(i)).
    let patterns: [&[usize]; 3] = [&[2, 0, 1, 1, 2, 0], &[1, 2, 1, 0, 0, 2], &[0, 0, 2, 2, 1, 1]];
    for pattern in patterns {
        let spec =
            ArchitectureSpec::single_loop(CouplerSpec::rotation(0.2 * PI), pattern.to_vec(), 8);
        let canon = canonicalize(&build_single_loop(&spec).unwrap()).unwrap();
        let profile = entropy_profile(&canon);
        let max_n = *pattern.iter().max().unwrap() as f64;
        let ceiling = area_law_bound(max_n).unwrap();
        for (bond, &e) in profile.iter().enumerate() {
            let bound = area_law_bound(loop_mean_occupation(&spec, bond + 1).unwrap()).unwrap();
            assert!(
                e <= bound + 1e-6,
                "cut {}: E = {e} exceeds g(n) = {bound}",
                bond + 1
            );
            assert!(e <= ceiling + 1e-6, "cut {}: E = {e} exceeds g(max n)", bond + 1);
        }
    }
}

#[test]
fn entropy_grows_monotonically_and_saturates() {
    let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 200, 12);
    let canon = canonicalize(&build_single_loop(&spec).unwrap()).unwrap();
    let profile = entropy_profile(&canon);
    // Bin cuts only; the final bond duplicates the loop-site spectrum.
    let bins = &profile[..199];
    for w in bins.windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "entropy decreased along the train");
    }
    let late = bins[198];
    let earlier = bins[148];
    assert!(
        (late - earlier).abs() < 1e-6,
        "no saturation: E(199) = {late}, E(149) = {earlier}"
    );
}

#[test]
fn observables_stable_once_cutoffs_converged() {
    // Ladder in (d, chi): after the first rung whose relative move is
    // below the tolerance, a further increase stays below it too.
    let tol = 1e-4;
    let mut previous: Option<f64> = None;
    let mut deltas = Vec::new();
    for d in [10usize, 15, 23] {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 100, d);
        let canon = canonicalize(&build_single_loop(&spec).unwrap()).unwrap();
        let e_max = entropy_profile(&canon).into_iter().fold(0.0f64, f64::max);
        if let Some(p) = previous {
            deltas.push(((e_max - p) / p.abs()).abs());
        }
        previous = Some(e_max);
    }
    assert!(
        deltas[0] < tol,
        "starting cutoff (10x mean occupation) did not converge: {deltas:?}"
    );
    assert!(
        deltas[1] <= tol,
        "converged observable moved by {} on the next rung",
        deltas[1]
    );
}

#[test]
fn schmidt_coefficients_decay_exponentially_when_saturated() {
    let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 150, 12);
    let canon = canonicalize(&build_single_loop(&spec).unwrap()).unwrap();
    let lambda = schmidt_spectrum(&canon, 120).unwrap();
    // Strictly decreasing wherever the values are numerically meaningful.
    for w in lambda.windows(2) {
        if w[0] > 1e-10 {
            assert!(w[1] / w[0] < 1.0, "ratio {} not below 1", w[1] / w[0]);
        }
    }
    // Log-linear tail: consecutive ratios settle rather than blow up.
    let usable: Vec<f64> = lambda.iter().copied().filter(|&l| l > 1e-8).collect();
    assert!(usable.len() >= 4);
}

#[test]
fn built_states_have_unit_norm_and_conserve_photons() {
    for (theta, pattern, d) in [
        (0.15 * PI, vec![1, 1, 1, 1, 1], 7),
        (0.3 * PI, vec![2, 0, 2], 6),
        (0.45 * PI, vec![1, 0, 0, 1], 4),
    ] {
        let spec = ArchitectureSpec::single_loop(CouplerSpec::rotation(theta), pattern.clone(), d);
        let m = build_single_loop(&spec).unwrap();
        assert!((m.norm() - 1.0).abs() < 1e-8);
        let total: f64 = occupation_profile(&m).unwrap().iter().sum();
        let want: usize = pattern.iter().sum();
        assert!(
            (total - want as f64).abs() < 1e-8,
            "occupation total {total} vs {want}"
        );
    }
}

// ---------------------------------------------------------------------------
// Randomized property suites.

fn arb_complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn arb_tensor(shape: Vec<usize>) -> impl Strategy<Value = ComplexTensor> {
    let len: usize = shape.iter().product();
    proptest::collection::vec(arb_complex(), len)
        .prop_map(move |data| ComplexTensor::new(shape.clone(), data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contraction_is_linear_in_each_factor(
        a in arb_tensor(vec![3, 4]),
        b in arb_tensor(vec![4, 2]),
        scale in arb_complex(),
    ) {
        let lhs = contract(&a.scale(scale), &b, &[(1, 0)]).unwrap();
        let rhs = contract(&a, &b, &[(1, 0)]).unwrap().scale(scale);
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn svd_split_reconstructs_within_reported_error(
        t in arb_tensor(vec![4, 3, 4]),
        max_rank in 1usize..6,
    ) {
        let svd = svd_split(&t, &[0, 1], max_rank, 0.0).unwrap();
        let k = svd.rank();
        let s = ComplexTensor::from_fn(vec![k, k], |ix| {
            if ix[0] == ix[1] { C64::new(svd.singular_values[ix[0]], 0.0) } else { C64::new(0.0, 0.0) }
        }).unwrap();
        let us = contract(&svd.left_isometry, &s, &[(2, 0)]).unwrap();
        let rebuilt = contract(&us, &svd.right_isometry, &[(2, 0)]).unwrap();
        let err2: f64 = rebuilt
            .data()
            .iter()
            .zip(t.data())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        prop_assert!((err2.sqrt() - svd.truncation_error).abs() < 1e-9);
    }

    #[test]
    fn couplers_are_unitary_and_gauge_invariant(
        theta in -PI..PI,
        phi in -PI..PI,
        d in 2usize..6,
    ) {
        let dim = FockDim::new(d).unwrap();
        let u = beam_splitter(CouplerSpec::new(theta, phi), dim).unwrap();
        let m = u.as_matrix();
        let utu = contract(&m.conjugate(), &m, &[(0, 0)]).unwrap();
        let eye = ComplexTensor::identity(d * d).unwrap();
        prop_assert!(utu.max_abs_diff(&eye).unwrap() < 1e-10);

        // |entries|^2 do not depend on phi.
        let reference = beam_splitter(CouplerSpec::new(theta, 0.0), dim).unwrap();
        for o in 0..d {
            for p in 0..d {
                for q in 0..d {
                    for r in 0..d {
                        let a = u.entry(o, p, q, r).norm_sqr();
                        let b = reference.entry(o, p, q, r).norm_sqr();
                        prop_assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn single_loop_states_conserve_norm(
        theta in -PI..PI,
        n_bins in 1usize..5,
        n_photons in 0usize..3,
    ) {
        let spec = ArchitectureSpec::uniform_single_loop(theta, n_photons, n_bins, 4);
        let m = build_single_loop(&spec).unwrap();
        prop_assert!((m.norm() - 1.0).abs() < 1e-10);
    }
}
