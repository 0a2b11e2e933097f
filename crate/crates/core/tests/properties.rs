//! Randomized invariants over parameter ranges. The unit tests pin
//! frozen values at fixed parameters; these sweep the admissible
//! domains and check the structural identities that must hold on all
//! of them.

use levyslow_core::fastslow_system::{inverse_transform, random_transform, GapConstants, StateZ};
use levyslow_core::fractional_laplacian::{SpatialField, SpectralOperator};
use levyslow_core::levy_noise::{sample_path, shift_path, stats, RngStream, StableParams};
use levyslow_core::presets::example2;
use levyslow_core::stationary_ou::{eta_values, StationarySpec};
use proptest::prelude::*;

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_increase_on_the_whole_alpha_range(
        alpha in 1.01..=2.0f64,
        n_modes in 1usize..16,
    ) {
        let op = SpectralOperator::new(alpha, n_modes).unwrap();
        prop_assert!(op.lambda1() > 0.0);
        for w in op.eigenvalues().windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn semigroup_composes_and_contracts(
        alpha in 1.01..=2.0f64,
        t in 0.0..3.0f64,
        s in 0.0..3.0f64,
        coefficients in coeffs(),
    ) {
        let op = SpectralOperator::new(alpha, coefficients.len()).unwrap();
        let x = SpatialField::new(coefficients);
        let two_step = op.apply_semigroup(&op.apply_semigroup(&x, t).unwrap(), s).unwrap();
        let one_step = op.apply_semigroup(&x, t + s).unwrap();
        for (a, b) in two_step.coefficients.iter().zip(&one_step.coefficients) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let bound = (-op.lambda1() * t).exp() * x.norm();
        prop_assert!(op.apply_semigroup(&x, t).unwrap().norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn path_shifts_compose_exactly(
        seed in 0u64..1000,
        i in 0usize..40,
        j in 0usize..40,
        dt_exp in -4i32..-1,
    ) {
        let dt = 10.0f64.powi(dt_exp);
        let params = StableParams::new(1.5, 1.0).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let path = sample_path(&params, -(100.0 * dt), 20.0 * dt, dt, &mut rng).unwrap();
        let via_two = shift_path(&shift_path(&path, i as f64 * dt).unwrap(), j as f64 * dt).unwrap();
        let via_one = shift_path(&path, (i + j) as f64 * dt).unwrap();
        prop_assert_eq!(via_two.increments(), via_one.increments());
        prop_assert!((via_two.t_start() - via_one.t_start()).abs() < 1e-12);
    }

    #[test]
    fn noise_transform_round_trips(
        y0 in -5.0..5.0f64,
        eta in -20.0..20.0f64,
        xi in -20.0..20.0f64,
        sigma1 in 0.0..3.0f64,
        coefficients in prop::collection::vec(-10.0..10.0f64, 8),
    ) {
        // sigma2 stays zero: the contracting example only carries fast noise
        let spec = example2(0.05, 1.5, 8, 1.0, sigma1, 0.0).unwrap();
        let x = SpatialField::new(coefficients.clone());
        let z = random_transform(&x, &[y0], eta, &[xi], &spec);
        let (back_x, back_y) = inverse_transform(&z, eta, &[xi], &spec);
        for (a, b) in back_x.coefficients.iter().zip(&coefficients) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(sigma1 * eta.abs()).max(1.0));
        }
        prop_assert!((back_y[0] - y0).abs() <= 1e-12);
        let again = random_transform(&back_x, &back_y, eta, &[xi], &spec);
        prop_assert!((again.x.coefficients[0] - z.x.coefficients[0]).abs() <= 1e-12 * z.x.coefficients[0].abs().max(1.0));
    }

    #[test]
    fn contraction_and_lipschitz_grow_with_the_nonlinearity(
        // lambda1 >= 1 keeps the gap lambda1 - gamma open for every gamma_j
        lambda1 in 1.0..5.0f64,
        gamma_j in 0.1..2.0f64,
        epsilon in 0.001..0.2f64,
        k1 in 0.0..0.4f64,
        dk in 0.001..0.4f64,
    ) {
        let at = |k: f64, epsilon: f64| GapConstants { lambda1, gamma_j, k, epsilon };
        let k2 = k1 + dk;
        prop_assert!(at(k1, epsilon).contraction_rho().unwrap()
            <= at(k2, epsilon).contraction_rho().unwrap());
        prop_assert!(at(k1, epsilon).lipschitz_bound().unwrap_or(f64::INFINITY)
            <= at(k2, epsilon).lipschitz_bound().unwrap_or(f64::INFINITY));
        // the factor grows with epsilon and collapses onto its gap term
        // K/(lambda1 - gamma) as epsilon drops; the stated small-K limit
        // K/lambda1 sits strictly below both
        let gap_term = k2 / (lambda1 - at(k2, epsilon).gamma());
        prop_assert!(at(k2, epsilon / 2.0).contraction_rho().unwrap()
            <= at(k2, epsilon).contraction_rho().unwrap());
        let tight = at(k2, 1e-9).contraction_rho().unwrap();
        prop_assert!(tight >= gap_term);
        // residual term is k epsilon / gamma, a few 1e-8 at worst here
        prop_assert!(tight - gap_term <= 1e-6 * (1.0 + gap_term));
        prop_assert!(at(k2, epsilon).contraction_limit() < gap_term + 1e-15);
    }

    #[test]
    fn a_closed_gap_is_reported_not_silently_used(
        lambda1 in 0.05..0.3f64,
        gamma_j in 3.0..8.0f64,
    ) {
        // gamma = gamma_j / (2 lambda1 + gamma_j) tops lambda1 here
        let constants = GapConstants { lambda1, gamma_j, k: 0.1, epsilon: 0.05 };
        prop_assume!(constants.gamma() > lambda1);
        prop_assert!(constants.contraction_rho().is_err());
        prop_assert!(constants.lipschitz_bound().is_err());
    }

    #[test]
    fn ks_p_value_stays_in_the_unit_interval_and_decreases(
        d in 0.0..1.0f64,
        delta in 0.001..0.5f64,
        n1 in 10usize..100_000,
        n2 in 10usize..100_000,
    ) {
        let p = stats::ks_p_value(d, n1, n2);
        prop_assert!((0.0..=1.0).contains(&p));
        let p_further = stats::ks_p_value((d + delta).min(1.0), n1, n2);
        prop_assert!(p_further <= p + 1e-12);
    }

    #[test]
    fn sampled_paths_fill_their_grid_with_finite_increments(
        alpha in 1.01..=2.0f64,
        scale in 0.1..3.0f64,
        n in 1usize..400,
        seed in 0u64..1000,
    ) {
        let dt = 0.01;
        let params = StableParams::new(alpha, scale).unwrap();
        let mut rng = RngStream::new(seed, 1);
        let path = sample_path(&params, 0.0, n as f64 * dt, dt, &mut rng).unwrap();
        prop_assert_eq!(path.increments().len(), n);
        prop_assert!(path.increments().iter().all(|v| v.is_finite()));
        let mut rng = RngStream::new(seed, 1);
        let replay = sample_path(&params, 0.0, n as f64 * dt, dt, &mut rng).unwrap();
        prop_assert_eq!(path.increments(), replay.increments());
    }

    #[test]
    fn silent_noise_is_zero_on_any_grid(
        rate in 0.2..5.0f64,
        epsilon in 0.01..1.0f64,
        t0 in -3.0..0.0f64,
        n_nodes in 1usize..50,
    ) {
        let t_trunc = StationarySpec::default_t_trunc(rate, epsilon);
        let spec = StationarySpec::fast(rate, 0.0, epsilon, 1.5, t_trunc).unwrap();
        let params = StableParams::new(1.5, 1.0).unwrap();
        let path = sample_path(&params, -1.0, 0.1, 0.05, &mut RngStream::new(3, 0)).unwrap();
        let values = eta_values(&path, t0, n_nodes, &spec).unwrap();
        prop_assert_eq!(values, vec![0.0; n_nodes]);
    }

    #[test]
    fn state_norm_dominates_both_factors(
        coefficients in coeffs(),
        y in prop::collection::vec(-5.0..5.0f64, 1..4),
    ) {
        let x = SpatialField::new(coefficients);
        let z = StateZ::new(x.clone(), y.clone());
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(z.norm() >= x.norm());
        prop_assert!(z.norm() >= y_norm);
        prop_assert!((z.norm() - (x.norm() + y_norm)).abs() <= 1e-12 * z.norm().max(1.0));
    }
}
