use gsimplex::cli::{parse_args, Command, Experiment, Format, RunConfig};
use gsimplex::distributions::{chi_moment, chiprod_moment, spec_from_theorem1, weighted_volume_moment, ChiProductLaw, ChiProductSpec};
use gsimplex::geometry::{covariance_det_closed_form, covariance_matrix, scale_coefficient, simplex_volume, Point, SimplexVertices, WeightVector};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `(d, l, vertex coordinates)` with `l + 1` vertices in `R^d`.
fn simplex_strategy() -> impl Strategy<Value = (usize, usize, Vec<Vec<f64>>)> {
    (1usize..=6).prop_flat_map(|d| (Just(d), 1..=d)).prop_flat_map(|(d, l)| (Just(d), Just(l), prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), l + 1)))
}

fn weights_strategy(max_l: usize) -> impl Strategy<Value = Vec<f64>> {
    (1..=max_l).prop_flat_map(|l| prop::collection::vec(0.1..10.0f64, l + 1))
}

fn simplex(coords: &[Vec<f64>]) -> SimplexVertices {
    SimplexVertices::new(coords.iter().map(|c| Point::new(c.clone()).unwrap()).collect()).unwrap()
}

/// Orthogonal matrix from the QR factor of a generic matrix.
fn orthogonal(d: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(d, d, &entries[..d * d]).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn volume_is_rigid_motion_and_permutation_invariant(
        (d, _l, coords) in simplex_strategy(),
        shift in prop::collection::vec(-5.0..5.0f64, 6),
        entries in prop::collection::vec(-1.0..1.0f64, 36),
        rot in 0usize..7,
    ) {
        let v = simplex_volume(&simplex(&coords));
        prop_assume!(v > 1e-6);
        let mut permuted = coords.clone();
        permuted.rotate_left(rot % coords.len());
        permuted.swap(0, coords.len() - 1);
        prop_assert!(rel(simplex_volume(&simplex(&permuted)), v) < 1e-9);

        let moved: Vec<Vec<f64>> = coords.iter().map(|c| c.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        prop_assert!(rel(simplex_volume(&simplex(&moved)), v) < 1e-9);

        let q = orthogonal(d, &entries);
        prop_assume!(q.iter().all(|x| x.is_finite()));
        let rotated: Vec<Vec<f64>> = coords.iter().map(|c| (&q * nalgebra::DVector::from_column_slice(c)).iter().copied().collect()).collect();
        prop_assert!(rel(simplex_volume(&simplex(&rotated)), v) < 1e-9);
    }

    #[test]
    fn volume_scales_with_power_l((_d, l, coords) in simplex_strategy(), c in 0.1..10.0f64) {
        let v = simplex_volume(&simplex(&coords));
        prop_assume!(v > 1e-6);
        let scaled: Vec<Vec<f64>> = coords.iter().map(|p| p.iter().map(|x| c * x).collect()).collect();
        prop_assert!(rel(simplex_volume(&simplex(&scaled)), c.powi(l as i32) * v) < 1e-9);
    }

    #[test]
    fn covariance_determinant_closed_form(sigmas in weights_strategy(8)) {
        let w = WeightVector::new(sigmas).unwrap();
        let numeric = covariance_matrix(&w).lu().determinant();
        prop_assert!(rel(covariance_det_closed_form(&w), numeric) < 1e-10);
        prop_assert!(rel(scale_coefficient(&w).powi(2), covariance_det_closed_form(&w)) < 1e-12);
    }

    #[test]
    fn scale_coefficient_is_homogeneous_of_degree_l(sigmas in weights_strategy(8), c in 0.1..10.0f64) {
        let l = sigmas.len() - 1;
        let w = WeightVector::new(sigmas.clone()).unwrap();
        let cw = WeightVector::new(sigmas.iter().map(|s| c * s).collect()).unwrap();
        prop_assert!(rel(scale_coefficient(&cw), c.powi(l as i32) * scale_coefficient(&w)) < 1e-12);
    }

    #[test]
    fn law_moments_match_volume_moments(sigmas in weights_strategy(6), extra in 0usize..5) {
        let l = sigmas.len() - 1;
        let d = l + extra;
        let w = WeightVector::new(sigmas).unwrap();
        let spec = spec_from_theorem1(d, l, &w).unwrap();
        for p in [1.0, 2.0, 3.0] {
            prop_assert!(rel(chiprod_moment(&spec, p).unwrap(), weighted_volume_moment(d, l, &w, p).unwrap()) < 1e-12);
        }
        prop_assert_eq!(chiprod_moment(&spec, 0.0).unwrap(), 1.0);
        prop_assert_eq!(weighted_volume_moment(d, l, &w, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn chi_moment_recurrence(k in 1u32..40, p in 0.0..6.0f64) {
        // E[chi_k^{p+2}] = (k + p) E[chi_k^p]
        prop_assert!(rel(chi_moment(k, p + 2.0).unwrap(), (k as f64 + p) * chi_moment(k, p).unwrap()) < 1e-12);
        prop_assert_eq!(chi_moment(k, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn argv_round_trip(
        cmd in 0usize..8,
        d in 1usize..10,
        l_off in 0usize..9,
        use_sigmas in any::<bool>(),
        n in 1usize..1_000_000,
        seed in any::<u64>(),
        p_list in prop::collection::vec(-0.5..5.0f64, 1..4),
        format in 0usize..3,
        workers in 1usize..16,
        timing in any::<bool>(),
    ) {
        let command = [
            Command::Moments, Command::Density, Command::Sample, Command::Report,
            Command::Verify(Experiment::Theorem1), Command::Verify(Experiment::Origin),
            Command::Verify(Experiment::Projection), Command::Verify(Experiment::Grassmannian),
        ][cmd];
        let strict = matches!(command, Command::Verify(Experiment::Projection | Experiment::Grassmannian));
        let d = if strict { d + 1 } else { d };
        let l = 1 + l_off % if strict { d - 1 } else { d };
        let takes_sigmas = matches!(command, Command::Moments | Command::Density | Command::Sample | Command::Verify(Experiment::Theorem1 | Experiment::Grassmannian));
        let report = command == Command::Report;
        let config = RunConfig {
            command,
            d: (!report).then_some(d),
            l: (!report).then_some(l),
            sigmas: (use_sigmas && takes_sigmas && !report).then(|| (0..=l).map(|i| 0.25 + i as f64 / 3.0).collect()),
            origin: false,
            n,
            seed,
            p_list,
            output_path: None,
            format: [Format::Csv, Format::Json, Format::Text][format],
            workers,
            timing,
            grid_size: 1024,
            range_quantiles: (1e-7, 0.9999),
        };
        prop_assert_eq!(parse_args(&config.to_argv()).unwrap(), config);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cdf_is_monotone_and_inverted_by_quantile(c in 0.1..5.0f64, dofs in prop::collection::vec(1u32..8, 1..4), q in 0.001..0.999f64) {
        let spec = ChiProductSpec::new(c, dofs).unwrap();
        let law = ChiProductLaw::new(&spec).unwrap();
        let x = law.quantile(q).unwrap();
        prop_assert!((law.cdf(x) - q).abs() < 1e-9);
        let xs: Vec<f64> = (1..40).map(|i| x * (i as f64 / 20.0)).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| law.cdf(x)).collect();
        prop_assert!(fs.windows(2).all(|w| w[0] <= w[1] + 1e-14), "{:?}", fs);
        prop_assert!(fs.iter().all(|f| (0.0..=1.0).contains(f)));
    }
}
