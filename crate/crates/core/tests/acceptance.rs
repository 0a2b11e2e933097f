//! End-to-end acceptance checks, one numbered test per contract item.
//! Each test asserts its gate and prints a single PASS line with the
//! measured quantities (visible under --nocapture).

// frozen reference values keep every round-trip digit
#![allow(clippy::excessive_precision)]

use levyslow_core::fastslow_system::{integrate_random_system, GapConstants, StateZ};
use levyslow_core::fractional_laplacian::{
    eigenvalue_asymptotic, quadrature_eigenvalue_oracle, SpatialField,
};
use levyslow_core::levy_noise::{
    sample_path, sample_stable_increment, self_similarity_statistic, shift_path, stats, NoisePath,
    RngStream, StableParams,
};
use levyslow_core::presets::{example2, linear_oracle};
use levyslow_core::slow_manifold::{
    approx_manifold, contraction_factor, solve_manifold_full, solve_manifold_point,
    solve_tracking_point, weighted_backward_distance, ManifoldConfig,
};
use levyslow_core::stationary_ou::{delta_stat, eta_eps, StationarySpec};

const LAMBDA1_15: f64 = 1.6113574638497827;
const GAMMA_15: f64 = 0.23681447057681826;
const RHO_REF: f64 = 0.0076803079319828587;
const LIP_REF: f64 = 0.0073314531196153282;

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

fn spatial_gap(a: &SpatialField, b: &SpatialField) -> f64 {
    a.coefficients
        .iter()
        .zip(&b.coefficients)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn state_gap(a: &StateZ, b: &StateZ) -> f64 {
    spatial_gap(&a.x, &b.x)
        + a.y
            .iter()
            .zip(&b.y)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
}

#[test]
fn criterion_01_sampler_matches_the_stable_characteristic_function() {
    let mut worst = 0.0f64;
    for (si, &alpha) in [1.2, 1.5, 1.8].iter().enumerate() {
        let params = StableParams::new(alpha, 1.0).unwrap();
        let mut rng = RngStream::new(0xC1, si as u64);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| sample_stable_increment(&params, 1.0, &mut rng).unwrap())
            .collect();
        for theta in [0.5, 1.0, 2.0] {
            let measured = stats::ecf_real(&samples, theta);
            let target = (-theta.powf(alpha)).exp();
            let err = (measured - target).abs();
            assert!(
                err <= 0.01,
                "characteristic function off at alpha={alpha}, theta={theta}: {measured} vs {target}"
            );
            worst = worst.max(err);
        }
    }
    println!("PASS criterion-01 sampler law: max |ecf - exp(-|theta|^alpha)| = {worst:.2e} <= 0.01");
}

#[test]
fn criterion_02_increments_are_self_similar() {
    let mut worst_p = 1.0f64;
    for (si, &alpha) in [1.2, 1.5, 1.8].iter().enumerate() {
        let params = StableParams::new(alpha, 1.0).unwrap();
        for (ci, &c) in [0.25, 4.0].iter().enumerate() {
            let mut rng = RngStream::new(0xC2, (si * 2 + ci) as u64);
            let d = self_similarity_statistic(&params, c, 10_000, &mut rng).unwrap();
            let p = stats::ks_p_value(d, 10_000, 10_000);
            assert!(
                p > 0.001,
                "scaling mismatch at alpha={alpha}, c={c}: KS p = {p:.4}"
            );
            worst_p = worst_p.min(p);
        }
    }
    println!("PASS criterion-02 self-similarity: min KS p = {worst_p:.3} > 0.001");
}

#[test]
fn criterion_03_asymptotic_eigenvalues_match_the_quadrature_oracle() {
    let mut worst = 0.0f64;
    for alpha in [1.2, 1.5, 1.8] {
        for l in 1..=5 {
            let asym = eigenvalue_asymptotic(l, alpha).unwrap();
            let quad = quadrature_eigenvalue_oracle(alpha, l, 512).unwrap();
            let rel = (asym - quad).abs() / quad;
            assert!(
                rel <= 0.05,
                "eigenvalue {l} at alpha={alpha}: asymptotic {asym} vs quadrature {quad} ({rel:.4} rel)"
            );
            worst = worst.max(rel);
        }
    }
    for l in 1..=5 {
        let closed = (l as f64 * std::f64::consts::PI / 2.0).powf(2.0);
        assert_eq!(eigenvalue_asymptotic(l, 2.0).unwrap(), closed);
    }
    println!("PASS criterion-03 eigenvalue oracle: max rel gap {worst:.4} <= 0.05; alpha=2 exact");
}

#[test]
fn criterion_04_fast_process_rescales_to_the_unit_clock_law() {
    let alpha = 1.5;
    let dt0 = 0.005;
    let params = StableParams::new(alpha, 1.0).unwrap();
    let mut worst_p = 1.0f64;
    for (ei, &eps) in [0.1, 0.01].iter().enumerate() {
        let eta_spec = StationarySpec::fast(
            LAMBDA1_15,
            1.0,
            eps,
            alpha,
            StationarySpec::default_t_trunc(LAMBDA1_15, eps),
        )
        .unwrap();
        let delta_spec = StationarySpec::fast(
            LAMBDA1_15,
            1.0,
            1.0,
            alpha,
            StationarySpec::default_t_trunc(LAMBDA1_15, 1.0),
        )
        .unwrap();
        let n_hist = 2402usize;
        let mut eta_samples = Vec::with_capacity(1000);
        let mut delta_samples = Vec::with_capacity(1000);
        for k in 0..1000u64 {
            let dte = eps * dt0;
            let mut rng = RngStream::new(0xC4 + ei as u64, 2 * k);
            let path = sample_path(&params, -(n_hist as f64) * dte, 0.0, dte, &mut rng).unwrap();
            eta_samples.push(eta_eps(&path, 0.0, &eta_spec).unwrap());
            let mut rng = RngStream::new(0xC4 + ei as u64, 2 * k + 1);
            let path = sample_path(&params, -(n_hist as f64) * dt0, 0.0, dt0, &mut rng).unwrap();
            delta_samples.push(delta_stat(&path, 0.0, &delta_spec).unwrap());
        }
        eta_samples.sort_by(f64::total_cmp);
        delta_samples.sort_by(f64::total_cmp);
        let d = stats::ks_statistic_sorted(&eta_samples, &delta_samples);
        let p = stats::ks_p_value(d, 1000, 1000);
        assert!(p > 0.001, "law mismatch at eps={eps}: KS p = {p:.4}");
        worst_p = worst_p.min(p);
    }
    println!("PASS criterion-04 stationary rescaling: min KS p = {worst_p:.3} > 0.001");
}

#[test]
fn criterion_05_linear_graph_has_the_closed_form() {
    let y0 = 0.7;
    let mut worst = 0.0f64;
    for (c, j, eps, alpha) in [
        (0.1, 1.0, 0.05, 1.5),
        (0.2, -0.5, 0.1, 1.8),
        (0.05, 2.0, 0.02, 1.2),
    ] {
        let spec = linear_oracle(c, j, eps, alpha, 1).unwrap();
        let config = ManifoldConfig::with_default_horizon(&spec, 2e-4, 40, 1e-10).unwrap();
        let params = StableParams::new(1.5, 1.0).unwrap();
        let path = sample_path(&params, 0.0, 1e-3, 2e-4, &mut RngStream::new(1, 0)).unwrap();
        let point = solve_manifold_point(&spec, (&path, &path), &[y0], &config).unwrap();
        let expected = c * y0 / (spec.operator().lambda1() + eps * j);
        let rel = (point.h_value.coefficients[0] - expected).abs() / expected.abs();
        assert!(
            rel <= 1e-4,
            "graph value off at (c={c}, j={j}, eps={eps}, alpha={alpha}): rel {rel:.2e}"
        );
        worst = worst.max(rel);
    }
    println!("PASS criterion-05 linear oracle: max rel error {worst:.2e} <= 1e-4");
}

fn example2_with_noise(eps: f64) -> levyslow_core::fastslow_system::SystemSpec {
    example2(eps, 1.5, 8, 1.0, 0.1, 0.0).unwrap()
}

fn noise_path(t_start: f64, t_end: f64, dt: f64, seed: u64) -> NoisePath {
    let params = StableParams::new(1.5, 1.0).unwrap();
    sample_path(&params, t_start, t_end, dt, &mut RngStream::new(seed, 0)).unwrap()
}

#[test]
fn criterion_06_iterate_ratios_sit_below_the_contraction_factor() {
    let spec = example2_with_noise(0.01);
    let reference = GapConstants {
        lambda1: spec.operator().lambda1(),
        gamma_j: 1.0,
        k: 0.01,
        epsilon: 0.01,
    };
    let rho_ref = reference.contraction_rho().unwrap();
    assert!(
        (rho_ref - RHO_REF).abs() < 1e-15,
        "closed-form factor drifted: {rho_ref:.17}"
    );
    let config = ManifoldConfig::with_default_horizon(&spec, 1e-3, 60, 1e-10).unwrap();
    let path = noise_path(-1.35, 0.01, 1e-3, 0xC6);
    let (point, _) = solve_manifold_full(&spec, (&path, &path), &[0.5], &config).unwrap();
    assert!(point.iterations >= 3, "need at least three iterates to measure ratios");
    let mut worst = 0.0f64;
    for w in point.residuals.windows(2) {
        let ratio = w[1] / w[0];
        assert!(
            ratio <= rho_ref + 0.05,
            "iterate ratio {ratio:.4} above {:.4}",
            rho_ref + 0.05
        );
        worst = worst.max(ratio);
    }
    println!(
        "PASS criterion-06 contraction: closed form {rho_ref:.5}, max iterate ratio {worst:.5} <= {:.5}",
        rho_ref + 0.05
    );
}

#[test]
fn criterion_07_graph_quotients_sit_below_the_lipschitz_bound() {
    let spec = example2_with_noise(0.01);
    let reference = GapConstants {
        lambda1: spec.operator().lambda1(),
        gamma_j: 1.0,
        k: 0.01,
        epsilon: 0.01,
    };
    let bound = reference.lipschitz_bound().unwrap();
    assert!(
        (bound - LIP_REF).abs() < 1e-15,
        "closed-form bound drifted: {bound:.17}"
    );
    let config = ManifoldConfig::with_default_horizon(&spec, 1e-3, 60, 1e-10).unwrap();
    let path = noise_path(-1.35, 0.01, 1e-3, 0xC7);
    let ys = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let points: Vec<_> = ys
        .iter()
        .map(|&y| solve_manifold_point(&spec, (&path, &path), &[y], &config).unwrap())
        .collect();
    let mut worst = 0.0f64;
    for i in 0..ys.len() {
        for j in (i + 1)..ys.len() {
            let q = spatial_gap(&points[i].h_value, &points[j].h_value) / (ys[i] - ys[j]).abs();
            assert!(
                q <= bound * 1.1,
                "difference quotient {q:.2e} above {:.2e}",
                bound * 1.1
            );
            worst = worst.max(q);
        }
    }
    println!(
        "PASS criterion-07 graph regularity: max quotient {worst:.2e} <= bound {bound:.5} + 10%"
    );
}

#[test]
fn criterion_08_manifold_start_stays_on_the_shifted_graph() {
    let spec = example2_with_noise(0.01);
    let dt = 1e-4;
    let config = ManifoldConfig::with_default_horizon(&spec, dt, 60, 1e-10).unwrap();
    let path = noise_path(-1.35, 0.55, dt, 0xC8);
    let (start, _) = solve_manifold_full(&spec, (&path, &path), &[0.5], &config).unwrap();
    let z0 = StateZ::new(start.h_value.clone(), vec![0.5]);
    let traj = integrate_random_system(&spec, (&path, &path), &z0, 0.0, 0.5, dt).unwrap();
    let mut worst = 0.0f64;
    for t in [0.1, 0.5] {
        let shifted = shift_path(&path, t).unwrap();
        let idx = traj.index_of(t, "invariance check").unwrap();
        let y_t = traj.states()[idx].y.clone();
        let graph = solve_manifold_point(&spec, (&shifted, &shifted), &y_t, &config).unwrap();
        let defect = spatial_gap(&traj.states()[idx].x, &graph.h_value);
        let tolerance = 0.05 * graph.h_value.norm().max(1e-3);
        assert!(
            defect <= tolerance,
            "invariance defect {defect:.2e} above {tolerance:.2e} at t={t}"
        );
        worst = worst.max(defect / tolerance);
    }
    println!("PASS criterion-08 invariance: worst defect at {worst:.2e} of tolerance");
}

#[test]
fn criterion_09_orbits_are_tracked_at_the_fast_rate() {
    let spec = example2_with_noise(0.01);
    let dt = 1e-4;
    let config = ManifoldConfig::with_default_horizon(&spec, dt, 60, 1e-12).unwrap();
    let path = noise_path(-1.35, 1.17, dt, 0xC9);
    let z0 = StateZ::new(SpatialField::first_mode(8, 0.5), vec![0.5]);
    let report = solve_tracking_point(&spec, (&path, &path), &z0, &config).unwrap();
    let predicted = GAMMA_15 / 0.01;
    assert!(
        (report.predicted_rate - predicted).abs() < 1e-12,
        "predicted rate drifted: {}",
        report.predicted_rate
    );
    let measured = report.decay_rate.expect("off-manifold start must produce a fit window");
    let gate = 0.8 * predicted;
    assert!(
        measured >= gate,
        "tracking decay {measured:.2} below 0.8 gamma/eps = {gate:.3}"
    );
    println!(
        "PASS criterion-09 tracking: fitted decay {measured:.1} >= {gate:.3} (predicted {predicted:.3})"
    );
}

#[test]
fn criterion_10_first_order_approximation_leaves_a_second_order_defect() {
    let dtau = 0.005;
    let epsilons = [0.1, 0.05, 0.025, 0.0125];
    let params = StableParams::new(1.5, 1.0).unwrap();
    let dummy = sample_path(&params, 0.0, 0.04, 0.01, &mut RngStream::new(1, 0)).unwrap();
    let mut slopes = Vec::new();
    for case in ["linear", "contracting"] {
        let mut lns = Vec::new();
        let mut lne = Vec::new();
        for &eps in &epsilons {
            let spec = match case {
                "linear" => linear_oracle(0.1, 1.0, eps, 1.5, 1).unwrap(),
                _ => example2(eps, 1.5, 8, 1.0, 0.0, 0.0).unwrap(),
            };
            let y0 = match case {
                "linear" => vec![0.7],
                _ => vec![0.5],
            };
            let t_config =
                ManifoldConfig::with_default_horizon(&spec, eps * dtau, 60, 1e-10).unwrap();
            let h_eps = solve_manifold_point(&spec, (&dummy, &dummy), &y0, &t_config)
                .unwrap()
                .h_value;
            let tau_config = ManifoldConfig::new(&spec, 17.0, dtau, 60, 1e-10).unwrap();
            let approx = approx_manifold(&spec, (&dummy, &dummy), &y0, 1, &tau_config).unwrap();
            let defect = spatial_gap(&h_eps, &approx);
            lns.push(defect.ln());
            lne.push(eps.ln());
        }
        let slope = fit_slope(&lne, &lns);
        assert!(
            (1.6..=2.4).contains(&slope),
            "defect slope {slope:.3} outside [1.6, 2.4] on the {case} system"
        );
        slopes.push((case, slope));
    }
    println!(
        "PASS criterion-10 asymptotic order: slopes {:.3} (linear), {:.3} (contracting) in [1.6, 2.4]",
        slopes[0].1, slopes[1].1
    );
}

#[test]
fn criterion_11_solution_operator_composes_as_a_cocycle() {
    let spec = example2_with_noise(0.01);
    let dt = 1e-3;
    let path = noise_path(-0.15, 0.6, dt, 0xCB);
    let z0 = StateZ::new(SpatialField::first_mode(8, 0.3), vec![0.4]);
    let mut worst = 0.0f64;
    for (s, t) in [(0.1, 0.1), (0.2, 0.3), (0.05, 0.45)] {
        let direct = integrate_random_system(&spec, (&path, &path), &z0, 0.0, s + t, dt).unwrap();
        let first = integrate_random_system(&spec, (&path, &path), &z0, 0.0, s, dt).unwrap();
        let shifted = shift_path(&path, s).unwrap();
        let second =
            integrate_random_system(&spec, (&shifted, &shifted), first.terminal(), 0.0, t, dt)
                .unwrap();
        let gap = state_gap(direct.terminal(), second.terminal());
        assert!(
            gap <= 10.0 * dt,
            "composition gap {gap:.2e} above {:.2e} for (s, t) = ({s}, {t})",
            10.0 * dt
        );
        worst = worst.max(gap);
    }
    println!("PASS criterion-11 cocycle: max composition gap {worst:.2e} <= {:.2e}", 10.0 * 1e-3);
}

#[test]
fn criterion_12_fixed_points_separate_no_faster_than_the_contraction_allows() {
    let spec = example2(0.01, 1.5, 8, 1.0, 0.0, 0.0).unwrap();
    let config = ManifoldConfig::with_default_horizon(&spec, 1e-3, 60, 1e-10).unwrap();
    let params = StableParams::new(1.5, 1.0).unwrap();
    let path = sample_path(&params, 0.0, 1e-2, 1e-3, &mut RngStream::new(1, 0)).unwrap();
    let (_, ta) = solve_manifold_full(&spec, (&path, &path), &[0.5], &config).unwrap();
    let (_, tb) = solve_manifold_full(&spec, (&path, &path), &[-0.5], &config).unwrap();
    let measured = weighted_backward_distance(&ta, &tb, &spec).unwrap();
    let rho = contraction_factor(&spec).unwrap().rho;
    let bound = 1.0 / (1.0 - rho) * 1.05;
    assert!(
        measured <= bound,
        "weighted distance {measured:.5} above {bound:.5} for |y0 - y0'| = 1"
    );
    println!(
        "PASS criterion-12 fixed-point separation: weighted distance {measured:.5} <= {bound:.5}"
    );
}
