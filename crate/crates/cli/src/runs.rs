//! The artifact-producing commands. Each run writes manifest.json first,
//! then its data files, all stamped with the manifest hash. Tasks fan
//! out over (seed x y0) through the core's batch map; every task draws
//! its noise from (seed, fixed stream) so scheduling cannot change the
//! output bytes.

use levyslow_core::fastslow_system::{
    check_conditions, integrate_random_system, StateZ, SystemSpec,
};
use levyslow_core::fractional_laplacian::SpatialField;
use levyslow_core::levy_noise::{sample_path, NoisePath, RngStream, StableParams};
use levyslow_core::parallel::par_map;
use levyslow_core::slow_manifold::{
    approx_manifold, solve_manifold_point, solve_tracking_point, ManifoldConfig,
};
use levyslow_core::stationary_ou::StationarySpec;
use serde_json::{json, Value};

use crate::artifacts::{fmt_f, ArtifactSet};
use crate::config::{ExperimentConfig, SystemId};
use crate::CliError;

const MAX_ITER: usize = 60;
const SOLVE_TOL: f64 = 1e-9;
const APPROX_TOL: f64 = 1e-10;
const EPS_SWEEP: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
const TAU_STEP: f64 = 0.005;
/// Both systems that admit slow noise (example1, custom) have J = 1.
const SLOW_RATE: f64 = 1.0;

pub struct RunPlan {
    pub graph: bool,
    pub tracking: bool,
    pub approx: bool,
    pub simulate: bool,
}

pub fn execute(config: &ExperimentConfig, plan: &RunPlan) -> Result<(), CliError> {
    let spec = config.spec()?;
    let mut names = Vec::new();
    if plan.graph {
        for seed in &config.seeds {
            names.push(format!("manifold_seed{seed}.csv"));
        }
    }
    if plan.tracking {
        names.push("tracking.json".into());
    }
    if plan.approx {
        names.push("approx.csv".into());
    }
    if plan.simulate {
        names.push("trajectory.csv".into());
    }
    let manifest = build_manifest(config, &spec, &names);
    let set = ArtifactSet::create(&config.out_dir, &manifest)?;
    if plan.graph {
        write_graphs(config, &spec, &set)?;
    }
    if plan.tracking {
        write_tracking(config, &spec, &set)?;
    }
    if plan.approx {
        write_approx(config, &set)?;
    }
    if plan.simulate {
        write_trajectory(config, &spec, &set)?;
    }
    Ok(())
}

pub fn build_manifest(config: &ExperimentConfig, spec: &SystemSpec, artifacts: &[String]) -> Value {
    let report = check_conditions(spec);
    let gap = spec.gap();
    let (l_f, l_g) = match config.system {
        // the self-amplifying feedback has no global constant
        SystemId::Example1 => (None, None),
        SystemId::Example2 => (Some(0.01), Some(0.01 * config.b)),
        SystemId::Custom => (Some(0.1), Some(0.0)),
    };
    json!({
        "artifact": "run_manifest",
        "config": serde_json::to_value(config).expect("config serializes"),
        "versions": {
            "levyslow-cli": env!("CARGO_PKG_VERSION"),
            "levyslow-core": levyslow_core::VERSION,
        },
        "system": {
            "id": config.system.to_string(),
            "joint_k": spec.k(),
            "l_f": l_f,
            "l_g": l_g,
            "contraction_rho": gap.contraction_rho().ok(),
            "lipschitz_bound": gap.lipschitz_bound().ok(),
            "condition_report": {
                "lambda1": report.lambda1,
                "gamma_j": report.gamma_j,
                "k": report.k,
                "threshold": report.threshold,
                "gamma": report.gamma,
                "s3_pass": report.s3_pass,
                "k_below_gamma_lambda1": report.k_below_gamma_lambda1,
                "gap_exceeds_k": report.gap_exceeds_k,
                "s1_warning": report.s1_warning,
                "pass": report.pass,
            },
        },
        "artifacts": artifacts,
    })
}

fn solver_config(config: &ExperimentConfig, spec: &SystemSpec) -> Result<ManifoldConfig, CliError> {
    let built = match config.horizon {
        Some(t) => ManifoldConfig::new(spec, t, config.dt, MAX_ITER, SOLVE_TOL),
        None => ManifoldConfig::with_default_horizon(spec, config.dt, MAX_ITER, SOLVE_TOL),
    };
    built.map_err(|e| CliError::config(format!("horizon/dt: {e}")))
}

fn steps_for(interval: f64, dt: f64) -> usize {
    (interval / dt).ceil() as usize + 4
}

/// Fast and (if needed) slow noise paths covering [-t_back, t_forward],
/// grid-aligned to dt. The slow path reuses the fast one when sigma2 = 0;
/// the zero-sigma grids never read it.
#[allow(clippy::too_many_arguments)]
fn sample_omega(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    epsilon: f64,
    dt: f64,
    t_back: f64,
    t_forward: f64,
    seed: u64,
    stream_base: u64,
) -> Result<(NoisePath, NoisePath), CliError> {
    let lambda1 = spec.operator().lambda1();
    let fast_hist = StationarySpec::default_t_trunc(lambda1, epsilon);
    let params1 = StableParams::new(config.alpha1, 1.0).map_err(CliError::from_core)?;
    let n_back = steps_for(t_back + fast_hist, dt);
    let n_fwd = steps_for(t_forward, dt);
    let fast = sample_path(
        &params1,
        -(n_back as f64) * dt,
        n_fwd as f64 * dt,
        dt,
        &mut RngStream::new(seed, stream_base),
    )
    .map_err(CliError::from_core)?;
    if config.sigma2 == 0.0 {
        let slow = fast.clone();
        return Ok((fast, slow));
    }
    let slow_hist = StationarySpec::default_t_trunc(SLOW_RATE, 1.0);
    let params2 = StableParams::new(config.alpha2, 1.0).map_err(CliError::from_core)?;
    let n_back = steps_for(t_back + slow_hist, dt);
    let slow = sample_path(
        &params2,
        -(n_back as f64) * dt,
        n_fwd as f64 * dt,
        dt,
        &mut RngStream::new(seed, stream_base + 1),
    )
    .map_err(CliError::from_core)?;
    Ok((fast, slow))
}

fn write_graphs(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    set: &ArtifactSet,
) -> Result<(), CliError> {
    let mconfig = solver_config(config, spec)?;
    let mut tasks = Vec::new();
    for &seed in &config.seeds {
        for &y0 in &config.y0_grid {
            tasks.push((seed, y0));
        }
    }
    let rows = par_map(tasks, |(seed, y0)| -> Result<(u64, String), CliError> {
        let (fast, slow) = sample_omega(
            config,
            spec,
            config.epsilon,
            config.dt,
            mconfig.horizon(),
            0.0,
            seed,
            0,
        )?;
        let point = solve_manifold_point(spec, (&fast, &slow), &[y0], &mconfig)
            .map_err(CliError::from_core)?;
        let recheck_gap = point
            .h_value
            .coefficients
            .iter()
            .zip(&point.h_recomputed.coefficients)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let mut row = format!("{},{},{}", fmt_f(y0), point.iterations, fmt_f(recheck_gap));
        for c in &point.h_value.coefficients {
            row.push(',');
            row.push_str(&fmt_f(*c));
        }
        Ok((seed, row))
    });
    let mut header = String::from("y0,iterations,recheck_gap");
    for k in 0..config.n_modes {
        header.push_str(&format!(",h_{k}"));
    }
    for &seed in &config.seeds {
        let mut seed_rows = Vec::new();
        for item in &rows {
            match item {
                Ok((s, row)) if *s == seed => seed_rows.push(row.clone()),
                Ok(_) => {}
                Err(e) => return Err(e.clone()),
            }
        }
        set.write_csv(&format!("manifold_seed{seed}.csv"), &header, &seed_rows)?;
    }
    Ok(())
}

fn write_tracking(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    set: &ArtifactSet,
) -> Result<(), CliError> {
    let mconfig = solver_config(config, spec)?;
    let seed = config.seeds[0];
    let (fast, slow) = sample_omega(
        config,
        spec,
        config.epsilon,
        config.dt,
        mconfig.horizon(),
        mconfig.horizon(),
        seed,
        10,
    )?;
    let y_mid = config.y0_grid[config.y0_grid.len() / 2];
    let z0 = StateZ::new(SpatialField::first_mode(config.n_modes, 0.5), vec![y_mid]);
    let report = solve_tracking_point(spec, (&fast, &slow), &z0, &mconfig)
        .map_err(CliError::from_core)?;
    let value = json!({
        "artifact": "tracking_report",
        "seed": seed,
        "z0": {"x": z0.x.coefficients, "y": z0.y},
        "z_checked": {"x": report.z_checked.x.coefficients, "y": report.z_checked.y},
        "decay_rate": report.decay_rate,
        "prefactor": report.prefactor,
        "window": report.window.map(|(a, b)| vec![a, b]),
        "predicted_rate": report.predicted_rate,
        "iterations": report.iterations,
    });
    set.write_json("tracking.json", &value)
}

fn write_approx(config: &ExperimentConfig, set: &ArtifactSet) -> Result<(), CliError> {
    let seed = config.seeds[0];
    let mut tasks = Vec::new();
    for (i, &eps) in EPS_SWEEP.iter().enumerate() {
        for &y0 in &config.y0_grid {
            tasks.push((i, eps, y0));
        }
    }
    let rows = par_map(tasks, |(i, eps, y0)| -> Result<String, CliError> {
        let spec = config.build_system(eps, config.noise())?;
        let dt = eps * TAU_STEP;
        let t_config = ManifoldConfig::with_default_horizon(&spec, dt, MAX_ITER, APPROX_TOL)
            .map_err(CliError::from_core)?;
        let gap = spec.gap().lambda1 - spec.gap().gamma();
        let t_tau = (((1.0 / APPROX_TOL).ln() / gap / TAU_STEP).ceil() + 1.0) * TAU_STEP;
        let tau_config = ManifoldConfig::new(&spec, t_tau, TAU_STEP, MAX_ITER, APPROX_TOL)
            .map_err(CliError::from_core)?;
        let (fast, slow) = sample_omega(
            config,
            &spec,
            eps,
            dt,
            t_config.horizon(),
            0.0,
            seed,
            20 + 2 * i as u64,
        )?;
        let h_eps = solve_manifold_point(&spec, (&fast, &slow), &[y0], &t_config)
            .map_err(CliError::from_core)?
            .h_value;
        let order0 = approx_manifold(&spec, (&fast, &slow), &[y0], 0, &tau_config)
            .map_err(CliError::from_core)?;
        let order1 = approx_manifold(&spec, (&fast, &slow), &[y0], 1, &tau_config)
            .map_err(CliError::from_core)?;
        let defect = |approx: &SpatialField| {
            h_eps
                .coefficients
                .iter()
                .zip(&approx.coefficients)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        Ok(format!(
            "{},{},{},{}",
            fmt_f(eps),
            fmt_f(y0),
            fmt_f(defect(&order0)),
            fmt_f(defect(&order1))
        ))
    });
    let rows: Result<Vec<String>, CliError> = rows.into_iter().collect();
    set.write_csv("approx.csv", "epsilon,y0,defect_order0,defect_order1", &rows?)
}

fn write_trajectory(
    config: &ExperimentConfig,
    spec: &SystemSpec,
    set: &ArtifactSet,
) -> Result<(), CliError> {
    let t_end = config.horizon.unwrap_or(1.0);
    let seed = config.seeds[0];
    let (fast, slow) = sample_omega(config, spec, config.epsilon, config.dt, 0.0, t_end, seed, 30)?;
    let y_mid = config.y0_grid[config.y0_grid.len() / 2];
    let z0 = StateZ::new(SpatialField::first_mode(config.n_modes, 0.5), vec![y_mid]);
    let traj = integrate_random_system(spec, (&fast, &slow), &z0, 0.0, t_end, config.dt)
        .map_err(CliError::from_core)?;
    let mut header = String::from("t");
    for k in 0..config.n_modes {
        header.push_str(&format!(",x_{k}"));
    }
    header.push_str(",y_0");
    let rows: Vec<String> = traj
        .states()
        .iter()
        .enumerate()
        .map(|(m, z)| {
            let mut row = fmt_f(m as f64 * config.dt);
            for c in &z.x.coefficients {
                row.push(',');
                row.push_str(&fmt_f(*c));
            }
            row.push(',');
            row.push_str(&fmt_f(z.y[0]));
            row
        })
        .collect();
    set.write_csv("trajectory.csv", &header, &rows)
}
