//! Construction of the random slow manifold and everything hanging off
//! it: the backward fixed-point solve, the contraction and graph
//! Lipschitz constants, the order-epsilon^2 asymptotic approximation on
//! the rescaled clock, and the exponential tracking construction.
//!
//! All backward objects live on a truncated window [-T, 0] with the
//! weighted sup-norm max_t e^{(gamma/eps) t} (|X| + |Y|); the window
//! invariant on ManifoldConfig certifies that the discarded tail cannot
//! move anything by more than the fixed-point tolerance. Kernels are
//! evaluated exactly at the nodes and integrals use the trapezoid rule.
//!
//! The tracking solve deliberately does not reuse the trapezoid
//! machinery. Its difference pair (U, V) is iterated with the same
//! exponential-Euler and explicit-Euler recursions the time integrator
//! applies, so the converged pair is, node for node, the difference of
//! two integrator orbits up to rounding. A trapezoid fixed point would
//! sit a quadrature error off the discrete orbits, and that offset would
//! re-enter the measured difference as a spurious slow component and cap
//! the fitted decay rate near the slow eigenvalue.

use crate::error::{invalid, Error, Result};
use crate::fastslow_system::{
    euclid, exp_euler_weights, fast_noise_grid, integrate_random_system, slow_noise_grid, StateZ,
    SystemSpec, Trajectory,
};
use crate::fractional_laplacian::SpatialField;
use crate::levy_noise::NoisePath;
use crate::parallel::{par_map, seq_map};

const FIT_FLOOR: f64 = 1e-10;
const FIT_CEIL: f64 = 1e-1;
const FIT_MIN_POINTS: usize = 5;
const DIFF_STEP: f64 = 1e-5;

/// Discretization of the backward window and the fixed-point stopping
/// rule. Construction certifies the window against the weight: the
/// truncated tail carries a factor e^{-(lambda1 - gamma) T / eps} and
/// must sit below the tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldConfig {
    horizon: f64,
    dt: f64,
    max_iter: usize,
    tol: f64,
}

impl ManifoldConfig {
    pub fn new(spec: &SystemSpec, horizon: f64, dt: f64, max_iter: usize, tol: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
        }
        if !(dt > 0.0 && dt < horizon) {
            return Err(invalid("dt", format!("must lie in (0, horizon), got {dt}")));
        }
        if max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        if !(tol > 0.0) {
            return Err(invalid("tol", format!("must be > 0, got {tol}")));
        }
        let raw = horizon / dt;
        if (raw - raw.round()).abs() > 1e-6 {
            return Err(Error::GridMisaligned {
                context: "manifold window",
                detail: format!("horizon {horizon} is not a multiple of dt = {dt}"),
            });
        }
        let gap = spec.gap();
        let gamma = gap.gamma();
        if gap.lambda1 <= gamma {
            return Err(invalid(
                "gamma_j",
                format!(
                    "weight rate {gamma} reaches lambda1 = {}, no spectral gap",
                    gap.lambda1
                ),
            ));
        }
        let tail = (-(gap.lambda1 - gamma) * horizon / spec.epsilon()).exp();
        if tail > tol {
            return Err(invalid(
                "horizon",
                format!(
                    "window tail factor {tail:e} exceeds tol = {tol:e}; \
                     lengthen the horizon or relax the tolerance"
                ),
            ));
        }
        Ok(Self {
            horizon,
            dt,
            max_iter,
            tol,
        })
    }

    /// Window 1.5 (eps / gamma) ln(1e8), rounded up to a whole number of
    /// steps: long enough that the tail factor is far below any tolerance
    /// in practical use.
    pub fn with_default_horizon(spec: &SystemSpec, dt: f64, max_iter: usize, tol: f64) -> Result<Self> {
        let gamma = spec.gap().gamma();
        let raw = 1.5 * spec.epsilon() / gamma * (1e8f64).ln();
        let horizon = (raw / dt).ceil() * dt;
        Self::new(spec, horizon, dt, max_iter, tol)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Converged graph point H(omega, y0) with its iteration history. The
/// recomputed field is one further application of the integral map to the
/// converged trajectory; fixed-point self-consistency keeps it within the
/// stopping tolerance of h_value.
#[derive(Debug, Clone)]
pub struct ManifoldPoint {
    pub y0: Vec<f64>,
    pub h_value: SpatialField,
    pub h_recomputed: SpatialField,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub certified: bool,
}

/// Outcome of the tracking construction. decay_rate and its companions
/// are None when the orbit difference never rises above the fit floor,
/// which is exactly the on-manifold case.
#[derive(Debug, Clone)]
pub struct TrackingReport {
    pub z_checked: StateZ,
    pub decay_rate: Option<f64>,
    pub prefactor: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub predicted_rate: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionFactor {
    pub rho: f64,
    pub contractive: bool,
}

/// Contraction factor of the backward fixed-point map,
/// K/(lambda1 - gamma) + K/(gamma/eps + gamma_J).
pub fn contraction_factor(spec: &SystemSpec) -> Result<ContractionFactor> {
    let rho = spec.gap().contraction_rho()?;
    Ok(ContractionFactor {
        rho,
        contractive: rho < 1.0,
    })
}

/// Lipschitz constant of y0 -> H(omega, y0) guaranteed by the gap
/// arithmetic.
pub fn lipschitz_bound(spec: &SystemSpec) -> Result<f64> {
    spec.gap().lipschitz_bound()
}

fn state_difference(a: &StateZ, b: &StateZ) -> f64 {
    let dx: f64 = a
        .x
        .coefficients
        .iter()
        .zip(&b.x.coefficients)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    let dy: f64 = a.y.iter().zip(&b.y).map(|(p, q)| (p - q) * (p - q)).sum();
    dx.sqrt() + dy.sqrt()
}

/// max_m e^{rate t_m} |a_m - b_m| in the product norm; serves both the
/// backward (t <= 0) and forward (t >= 0) weighted spaces.
fn weighted_distance(a: &[StateZ], b: &[StateZ], t0: f64, dt: f64, rate: f64) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(m, (p, q))| ((t0 + m as f64 * dt) * rate).exp() * state_difference(p, q))
        .fold(0.0, f64::max)
}

/// Weighted sup-norm distance of two trajectories on the same backward
/// grid, with the weight e^{(gamma/eps) t}.
pub fn weighted_backward_distance(a: &Trajectory, b: &Trajectory, spec: &SystemSpec) -> Result<f64> {
    if (a.t_start() - b.t_start()).abs() > 1e-9
        || (a.dt() - b.dt()).abs() > 1e-15
        || a.n_nodes() != b.n_nodes()
    {
        return Err(Error::GridMisaligned {
            context: "weighted distance",
            detail: "trajectories live on different grids".into(),
        });
    }
    let rate = spec.gap().gamma() / spec.epsilon();
    Ok(weighted_distance(a.states(), b.states(), a.t_start(), a.dt(), rate))
}

struct BackwardGrid {
    t0: f64,
    dt: f64,
    n_steps: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl BackwardGrid {
    fn new(spec: &SystemSpec, omega: (&NoisePath, &NoisePath), config: &ManifoldConfig) -> Result<Self> {
        let n_steps = config.n_steps();
        let t0 = -config.horizon;
        let s1 = fast_noise_grid(spec, omega.0, t0, n_steps + 1)?;
        let s2 = slow_noise_grid(spec, omega.1, t0, n_steps + 1)?;
        Ok(Self {
            t0,
            dt: config.dt,
            n_steps,
            s1,
            s2,
        })
    }

    fn seed(&self, spec: &SystemSpec, y0: &[f64]) -> Vec<StateZ> {
        (0..=self.n_steps)
            .map(|m| {
                let t = self.t0 + m as f64 * self.dt;
                StateZ::new(
                    SpatialField::zeros(spec.n_modes()),
                    spec.j().exp_flow(t, y0),
                )
            })
            .collect()
    }

    /// One application of the backward integral map. X(t) accumulates the
    /// kernel integral from -T with the trapezoid recursion; Y(t) is the
    /// linear flow from y0 at t = 0 plus the backward-integrated
    /// nonlinearity, anchored at W(0) = 0.
    fn lp_pass(
        &self,
        spec: &SystemSpec,
        y0: &[f64],
        states: &[StateZ],
        iterate: usize,
    ) -> Result<Vec<StateZ>> {
        let n = self.n_steps;
        let eps = spec.epsilon();
        let n_modes = spec.n_modes();
        let slow_dim = spec.slow_dim();
        let (decay, _) = exp_euler_weights(spec.operator().eigenvalues(), self.dt / eps);
        let mut fv = Vec::with_capacity(n + 1);
        let mut gv = Vec::with_capacity(n + 1);
        for (m, z) in states.iter().enumerate() {
            let mut ax = z.x.clone();
            ax.coefficients[0] += self.s1[m];
            let ay: Vec<f64> = z.y.iter().map(|v| v + self.s2[m]).collect();
            fv.push(spec.eval_f(&ax, &ay));
            gv.push(spec.eval_g(&ax, &ay));
        }
        let mut xs = vec![vec![0.0; n_modes]; n + 1];
        let mut integral = vec![0.0; n_modes];
        for m in 1..=n {
            for k in 0..n_modes {
                integral[k] = decay[k] * integral[k]
                    + 0.5 * self.dt * (decay[k] * fv[m - 1].coefficients[k] + fv[m].coefficients[k]);
                xs[m][k] = integral[k] / eps;
            }
        }
        let j_rates = spec.j().components(slow_dim);
        let back: Vec<f64> = j_rates.iter().map(|j| (-j * self.dt).exp()).collect();
        let mut ys = vec![vec![0.0; slow_dim]; n + 1];
        let mut w = vec![0.0; slow_dim];
        ys[n] = spec.j().exp_flow(self.t0 + n as f64 * self.dt, y0);
        for m in (0..n).rev() {
            for i in 0..slow_dim {
                w[i] = back[i] * w[i] - 0.5 * self.dt * (gv[m][i] + back[i] * gv[m + 1][i]);
            }
            let flow = spec.j().exp_flow(self.t0 + m as f64 * self.dt, y0);
            for i in 0..slow_dim {
                ys[m][i] = flow[i] + w[i];
            }
        }
        let next: Vec<StateZ> = xs
            .into_iter()
            .zip(ys)
            .map(|(x, y)| StateZ::new(SpatialField::new(x), y))
            .collect();
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                context: "fixed-point pass",
                step: iterate,
            });
        }
        Ok(next)
    }
}

/// One public application of the backward map to a trajectory ending at 0.
pub fn lp_step(
    traj: &Trajectory,
    omega: (&NoisePath, &NoisePath),
    spec: &SystemSpec,
    y0: &[f64],
) -> Result<Trajectory> {
    if traj.t_end().abs() > 1e-9 {
        return Err(Error::GridMisaligned {
            context: "backward map",
            detail: format!("window must end at 0, got t_end = {}", traj.t_end()),
        });
    }
    if y0.len() != spec.slow_dim() {
        return Err(Error::DimensionMismatch {
            context: "backward map y0",
            expected: spec.slow_dim(),
            actual: y0.len(),
        });
    }
    let n_steps = traj.n_nodes() - 1;
    let t0 = traj.t_start();
    let grid = BackwardGrid {
        t0,
        dt: traj.dt(),
        n_steps,
        s1: fast_noise_grid(spec, omega.0, t0, n_steps + 1)?,
        s2: slow_noise_grid(spec, omega.1, t0, n_steps + 1)?,
    };
    let next = grid.lp_pass(spec, y0, traj.states(), 0)?;
    Trajectory::from_states(t0, traj.dt(), next)
}

/// Fixed-point solve returning both the graph point and the converged
/// backward trajectory.
pub fn solve_manifold_full(
    spec: &SystemSpec,
    omega: (&NoisePath, &NoisePath),
    y0: &[f64],
    config: &ManifoldConfig,
) -> Result<(ManifoldPoint, Trajectory)> {
    if y0.len() != spec.slow_dim() {
        return Err(Error::DimensionMismatch {
            context: "manifold y0",
            expected: spec.slow_dim(),
            actual: y0.len(),
        });
    }
    let contraction = contraction_factor(spec)?;
    let certified = contraction.contractive;
    let grid = BackwardGrid::new(spec, omega, config)?;
    let rate = spec.gap().gamma() / spec.epsilon();
    let mut current = grid.seed(spec, y0);
    let mut residuals = Vec::new();
    let mut converged = false;
    for iterate in 1..=config.max_iter {
        let next = grid.lp_pass(spec, y0, &current, iterate)?;
        let residual = weighted_distance(&next, &current, grid.t0, grid.dt, rate);
        residuals.push(residual);
        current = next;
        if residual <= config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: residuals.len(),
            residuals,
        });
    }
    let recomputed = grid.lp_pass(spec, y0, &current, residuals.len() + 1)?;
    let point = ManifoldPoint {
        y0: y0.to_vec(),
        h_value: current.last().expect("window is nonempty").x.clone(),
        h_recomputed: recomputed.last().expect("window is nonempty").x.clone(),
        iterations: residuals.len(),
        residuals,
        certified,
    };
    let traj = Trajectory::from_states(grid.t0, grid.dt, current)?;
    Ok((point, traj))
}

/// Graph point H(omega, y0) by backward fixed-point iteration.
pub fn solve_manifold_point(
    spec: &SystemSpec,
    omega: (&NoisePath, &NoisePath),
    y0: &[f64],
    config: &ManifoldConfig,
) -> Result<ManifoldPoint> {
    solve_manifold_full(spec, omega, y0, config).map(|(point, _)| point)
}

/// Graph over a y0 grid; points are independent and run concurrently.
pub fn manifold_graph(
    spec: &SystemSpec,
    omega: (&NoisePath, &NoisePath),
    y0s: Vec<Vec<f64>>,
    config: &ManifoldConfig,
) -> Vec<Result<ManifoldPoint>> {
    par_map(y0s, |y0| solve_manifold_point(spec, omega, &y0, config))
}

/// Sequential twin of manifold_graph, kept callable regardless of the
/// parallel feature so the two can be benchmarked against each other.
pub fn manifold_graph_seq(
    spec: &SystemSpec,
    omega: (&NoisePath, &NoisePath),
    y0s: Vec<Vec<f64>>,
    config: &ManifoldConfig,
) -> Vec<Result<ManifoldPoint>> {
    seq_map(y0s, |y0| solve_manifold_point(spec, omega, &y0, config))
}

/// Graph point of the original system: the transformed graph plus the
/// fast noise sitting on the first mode.
pub fn back_transform_manifold(point: &ManifoldPoint, eta_value: f64, spec: &SystemSpec) -> SpatialField {
    let mut out = point.h_value.clone();
    out.coefficients[0] += spec.noise().sigma1 * eta_value;
    out
}

fn directional_dx(
    spec: &SystemSpec,
    bx: &SpatialField,
    by: &[f64],
    v: &SpatialField,
) -> SpatialField {
    let scale = v.norm();
    if scale == 0.0 {
        return SpatialField::zeros(bx.len());
    }
    let base = bx.norm() + euclid(by);
    let h = DIFF_STEP * base.max(1.0) / scale.max(1.0);
    let plus = SpatialField::new(
        bx.coefficients
            .iter()
            .zip(&v.coefficients)
            .map(|(b, d)| b + h * d)
            .collect(),
    );
    let minus = SpatialField::new(
        bx.coefficients
            .iter()
            .zip(&v.coefficients)
            .map(|(b, d)| b - h * d)
            .collect(),
    );
    let fp = spec.eval_f(&plus, by);
    let fm = spec.eval_f(&minus, by);
    SpatialField::new(
        fp.coefficients
            .iter()
            .zip(&fm.coefficients)
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect(),
    )
}

fn directional_dy(spec: &SystemSpec, bx: &SpatialField, by: &[f64], w: &[f64]) -> SpatialField {
    let scale = euclid(w);
    if scale == 0.0 {
        return SpatialField::zeros(bx.len());
    }
    let base = bx.norm() + euclid(by);
    let h = DIFF_STEP * base.max(1.0) / scale.max(1.0);
    let plus: Vec<f64> = by.iter().zip(w).map(|(b, d)| b + h * d).collect();
    let minus: Vec<f64> = by.iter().zip(w).map(|(b, d)| b - h * d).collect();
    let fp = spec.eval_f(bx, &plus);
    let fm = spec.eval_f(bx, &minus);
    SpatialField::new(
        fp.coefficients
            .iter()
            .zip(&fm.coefficients)
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect(),
    )
}

/// Kernel accumulation of one backward pass on the rescaled clock:
/// out_m = sum of e^{-lambda (tau_m - s)} integrand(s) by trapezoid.
fn tau_kernel_pass(eigenvalues: &[f64], dtau: f64, integrand: &[SpatialField]) -> Vec<SpatialField> {
    let n = integrand.len() - 1;
    let n_modes = eigenvalues.len();
    let decay: Vec<f64> = eigenvalues.iter().map(|l| (-l * dtau).exp()).collect();
    let mut out = Vec::with_capacity(n + 1);
    out.push(SpatialField::zeros(n_modes));
    let mut acc = vec![0.0; n_modes];
    for m in 1..=n {
        for k in 0..n_modes {
            acc[k] = decay[k] * acc[k]
                + 0.5
                    * dtau
                    * (decay[k] * integrand[m - 1].coefficients[k] + integrand[m].coefficients[k]);
        }
        out.push(SpatialField::new(acc.clone()));
    }
    out
}

/// Leading and first-order manifold terms on the rescaled clock
/// tau = t / eps. The config is read in tau units: horizon and dt are the
/// tau-window and tau-step, and when sigma1 > 0 the fast path must be
/// sampled at dt = eps * config.dt so each tau-node lands on a path node.
/// Returns H0 for order 0 and H0 + eps H1 for order 1.
pub fn approx_manifold(
    spec: &SystemSpec,
    omega: (&NoisePath, &NoisePath),
    y0: &[f64],
    order: usize,
    config: &ManifoldConfig,
) -> Result<SpatialField> {
    if order > 1 {
        return Err(invalid("order", format!("only orders 0 and 1 exist, got {order}")));
    }
    if y0.len() != spec.slow_dim() {
        return Err(Error::DimensionMismatch {
            context: "approximation y0",
            expected: spec.slow_dim(),
            actual: y0.len(),
        });
    }
    let gap = spec.gap();
    let gamma = gap.gamma();
    let tail = (-(gap.lambda1 - gamma) * config.horizon).exp();
    if tail > config.tol {
        return Err(invalid(
            "horizon",
            format!(
                "rescaled window tail factor {tail:e} exceeds tol = {:e}",
                config.tol
            ),
        ));
    }
    let eps = spec.epsilon();
    let dtau = config.dt;
    let n = config.n_steps();
    let sigma1 = spec.noise().sigma1;
    let s1: Vec<f64> = if sigma1 == 0.0 {
        vec![0.0; n + 1]
    } else {
        let path_dt = omega.0.dt();
        if ((path_dt - eps * dtau) / (eps * dtau)).abs() > 1e-9 {
            return Err(Error::GridMisaligned {
                context: "rescaled clock",
                detail: format!(
                    "fast path step {path_dt} must equal eps * dtau = {}",
                    eps * dtau
                ),
            });
        }
        fast_noise_grid(spec, omega.0, -eps * config.horizon, n + 1)?
    };
    let sxi = slow_noise_grid(spec, omega.1, 0.0, 1)?[0];
    let by: Vec<f64> = y0.iter().map(|v| v + sxi).collect();
    let n_modes = spec.n_modes();
    let eig = spec.operator().eigenvalues();

    // order-0 field: backward fixed point with Y frozen at y0
    let mut x0: Vec<SpatialField> = vec![SpatialField::zeros(n_modes); n + 1];
    let mut converged = false;
    let mut residuals = Vec::new();
    for _ in 0..config.max_iter {
        let integrand: Vec<SpatialField> = (0..=n)
            .map(|m| {
                let mut ax = x0[m].clone();
                ax.coefficients[0] += s1[m];
                spec.eval_f(&ax, &by)
            })
            .collect();
        let next = tau_kernel_pass(eig, dtau, &integrand);
        let residual = (0..=n)
            .map(|m| {
                let d: f64 = next[m]
                    .coefficients
                    .iter()
                    .zip(&x0[m].coefficients)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                ((m as f64 * dtau - config.horizon) * gamma).exp() * d.sqrt()
            })
            .fold(0.0, f64::max);
        residuals.push(residual);
        x0 = next;
        if residual <= config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: residuals.len(),
            residuals,
        });
    }
    if x0.iter().any(|f| f.coefficients.iter().any(|c| !c.is_finite())) {
        return Err(Error::NonFinite {
            context: "rescaled fixed point",
            step: 0,
        });
    }
    let h0 = x0[n].clone();
    if order == 0 {
        return Ok(h0);
    }

    // first-order slow drift integral from 0 backward
    let j_y0 = spec.j().apply(y0);
    let q: Vec<Vec<f64>> = (0..=n)
        .map(|m| {
            let mut ax = x0[m].clone();
            ax.coefficients[0] += s1[m];
            let g = spec.eval_g(&ax, &by);
            j_y0.iter().zip(&g).map(|(a, b)| a + b).collect()
        })
        .collect();
    let mut inner = vec![vec![0.0; spec.slow_dim()]; n + 1];
    for m in (0..n).rev() {
        for i in 0..spec.slow_dim() {
            inner[m][i] = inner[m + 1][i] - 0.5 * dtau * (q[m][i] + q[m + 1][i]);
        }
    }

    // first-order field: linear backward fixed point driven by the frozen
    // derivative data along the order-0 trajectory
    let mut x1: Vec<SpatialField> = vec![SpatialField::zeros(n_modes); n + 1];
    let mut converged = false;
    let mut residuals = Vec::new();
    for _ in 0..config.max_iter {
        let integrand: Vec<SpatialField> = (0..=n)
            .map(|m| {
                let mut bx = x0[m].clone();
                bx.coefficients[0] += s1[m];
                let dx = directional_dx(spec, &bx, &by, &x1[m]);
                let dy = directional_dy(spec, &bx, &by, &inner[m]);
                SpatialField::new(
                    dx.coefficients
                        .iter()
                        .zip(&dy.coefficients)
                        .map(|(a, b)| a + b)
                        .collect(),
                )
            })
            .collect();
        let next = tau_kernel_pass(eig, dtau, &integrand);
        let residual = (0..=n)
            .map(|m| {
                let d: f64 = next[m]
                    .coefficients
                    .iter()
                    .zip(&x1[m].coefficients)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                ((m as f64 * dtau - config.horizon) * gamma).exp() * d.sqrt()
            })
            .fold(0.0, f64::max);
        residuals.push(residual);
        x1 = next;
        if residual <= config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: residuals.len(),
            residuals,
        });
    }
    let h1 = &x1[n];
    Ok(SpatialField::new(
        h0.coefficients
            .iter()
            .zip(&h1.coefficients)
            .map(|(a, b)| a + eps * b)
            .collect(),
    ))
}

/// Tracking construction: find the manifold orbit shadowing the orbit of
/// z0. The difference pair (U, V) is iterated with the integrator's own
/// recursions (see the module doc), with V pinned to 0 at the forward
/// horizon and U re-coupled at 0 through the manifold graph at
/// y0 + V(0). The report carries the fitted decay of the actual orbit
/// difference and the predicted rate gamma / eps.
pub fn solve_tracking_point(
    spec: &SystemSpec,
    omega: (&NoisePath, &NoisePath),
    z0: &StateZ,
    config: &ManifoldConfig,
) -> Result<TrackingReport> {
    spec.check_state(z0, "tracking initial state")?;
    let eps = spec.epsilon();
    let gamma = spec.gap().gamma();
    let rate = gamma / eps;
    let dt = config.dt;
    let n = config.n_steps();
    let horizon = config.horizon;
    let back_config = ManifoldConfig::with_default_horizon(spec, dt, config.max_iter, config.tol)?;
    let base = integrate_random_system(spec, omega, z0, 0.0, horizon, dt)?;
    let s1 = fast_noise_grid(spec, omega.0, 0.0, n + 1)?;
    let s2 = slow_noise_grid(spec, omega.1, 0.0, n + 1)?;
    let (decay, weight) = exp_euler_weights(spec.operator().eigenvalues(), dt / eps);
    let slow_dim = spec.slow_dim();
    let n_modes = spec.n_modes();
    let j_rates = spec.j().components(slow_dim);
    let implicit: Vec<f64> = j_rates.iter().map(|j| 1.0 + j * dt).collect();
    if implicit.iter().any(|d| d.abs() < 1e-12) {
        return Err(invalid(
            "dt",
            "slow step 1 + J dt vanishes; the backward difference pass is singular",
        ));
    }

    let perturbed = |m: usize, u: &SpatialField, v: &[f64]| -> (SpatialField, Vec<f64>) {
        let zb = &base.states()[m];
        let mut ax = zb.x.clone();
        for (c, du) in ax.coefficients.iter_mut().zip(&u.coefficients) {
            *c += du;
        }
        ax.coefficients[0] += s1[m];
        let ay: Vec<f64> = zb
            .y
            .iter()
            .zip(v)
            .map(|(y, dv)| y + dv + s2[m])
            .collect();
        (ax, ay)
    };
    let base_args = |m: usize| -> (SpatialField, Vec<f64>) {
        let zb = &base.states()[m];
        let mut ax = zb.x.clone();
        ax.coefficients[0] += s1[m];
        let ay: Vec<f64> = zb.y.iter().map(|y| y + s2[m]).collect();
        (ax, ay)
    };

    let mut u_cur: Vec<SpatialField> = vec![SpatialField::zeros(n_modes); n + 1];
    let mut v_cur: Vec<Vec<f64>> = vec![vec![0.0; slow_dim]; n + 1];
    let mut iterations = 0;
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut h_point: Option<SpatialField> = None;
    for iterate in 1..=config.max_iter {
        iterations = iterate;
        // slow difference, slaved backward from V = 0 at the horizon
        let mut v_new = vec![vec![0.0; slow_dim]; n + 1];
        for m in (0..n).rev() {
            let (ax, ay) = perturbed(m, &u_cur[m], &v_cur[m]);
            let (bx, by) = base_args(m);
            let ga = spec.eval_g(&ax, &ay);
            let gb = spec.eval_g(&bx, &by);
            for i in 0..slow_dim {
                v_new[m][i] = (v_new[m + 1][i] - dt * (ga[i] - gb[i])) / implicit[i];
            }
        }
        // re-couple the fast difference through the graph at y0 + V(0)
        let y_check: Vec<f64> = z0.y.iter().zip(&v_new[0]).map(|(y, v)| y + v).collect();
        let mp = solve_manifold_point(spec, omega, &y_check, &back_config)?;
        let mut u_new = vec![SpatialField::zeros(n_modes); n + 1];
        u_new[0] = SpatialField::new(
            mp.h_value
                .coefficients
                .iter()
                .zip(&z0.x.coefficients)
                .map(|(h, x)| h - x)
                .collect(),
        );
        for m in 0..n {
            let (ax, ay) = perturbed(m, &u_cur[m], &v_new[m]);
            let (bx, by) = base_args(m);
            let fa = spec.eval_f(&ax, &ay);
            let fb = spec.eval_f(&bx, &by);
            let next: Vec<f64> = (0..n_modes)
                .map(|k| {
                    decay[k] * u_new[m].coefficients[k]
                        + weight[k] * (fa.coefficients[k] - fb.coefficients[k])
                })
                .collect();
            u_new[m + 1] = SpatialField::new(next);
        }
        if u_new
            .iter()
            .any(|f| f.coefficients.iter().any(|c| !c.is_finite()))
            || v_new.iter().any(|v| v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::NonFinite {
                context: "tracking pass",
                step: iterate,
            });
        }
        let residual = (0..=n)
            .map(|m| {
                let du: f64 = u_new[m]
                    .coefficients
                    .iter()
                    .zip(&u_cur[m].coefficients)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let dv: f64 = v_new[m]
                    .iter()
                    .zip(&v_cur[m])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (rate * m as f64 * dt).exp() * (du.sqrt() + dv.sqrt())
            })
            .fold(0.0, f64::max);
        residuals.push(residual);
        u_cur = u_new;
        v_cur = v_new;
        h_point = Some(mp.h_value);
        if residual <= config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: residuals.len(),
            residuals,
        });
    }
    let h0 = h_point.expect("at least one iterate ran");
    let y_checked: Vec<f64> = z0.y.iter().zip(&v_cur[0]).map(|(y, v)| y + v).collect();
    let z_checked = StateZ::new(h0, y_checked);

    let shadow = integrate_random_system(spec, omega, &z_checked, 0.0, horizon, dt)?;
    let mut times = Vec::new();
    let mut norms = Vec::new();
    for (m, (a, b)) in base.states().iter().zip(shadow.states()).enumerate() {
        let d = state_difference(a, b);
        if (FIT_FLOOR..=FIT_CEIL).contains(&d) {
            times.push(m as f64 * dt);
            norms.push(d.ln());
        }
    }
    let (decay_rate, prefactor, window) = if times.len() >= FIT_MIN_POINTS {
        let (slope, intercept) = least_squares(&times, &norms);
        (
            Some(-slope),
            Some(intercept.exp()),
            Some((times[0], *times.last().expect("nonempty"))),
        )
    } else {
        (None, None, None)
    };
    Ok(TrackingReport {
        z_checked,
        decay_rate,
        prefactor,
        window,
        predicted_rate: rate,
        iterations,
    })
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
