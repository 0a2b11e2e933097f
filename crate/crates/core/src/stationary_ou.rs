//! Stationary solutions of the linear fast and slow equations, evaluated
//! pathwise as truncated backward convolutions against the driving noise.
//!
//! Three processes share one kernel shape. With rate r and prefactor p,
//! the value at a grid time t is
//!
//! ```text
//! p * sum_k exp(-r (t - s_k)) dL_k     over s_k in [t - t_trunc, t)
//! ```
//!
//! The fast process eta uses r = rate/epsilon and p = sigma * epsilon^(-1/alpha);
//! delta is the same at epsilon = 1; the slow process xi uses the slow linear
//! coefficient as the rate, which must decay backward for the improper
//! integral to exist at all. Kernel exponents are computed from integer
//! index differences and the sum runs oldest-first, so evaluating at time t
//! on a path equals evaluating at time 0 on the shifted path bit for bit.

use crate::error::{invalid, Error, Result};
use crate::levy_noise::NoisePath;

/// Tail mass the truncation must push below before construction accepts it.
const TAIL_BOUND: f64 = 1e-8;
/// Kernel growth beyond this factor marks the integral divergent.
const GROWTH_LIMIT: f64 = 1e8;

/// Rate, intensity and truncation data for one stationary convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarySpec {
    rate: f64,
    sigma: f64,
    epsilon: f64,
    alpha: f64,
    t_trunc: f64,
}

impl StationarySpec {
    /// Fast process spec: requires rate > 0, epsilon in (0, 1], and a
    /// truncation horizon with exp(-rate t_trunc / epsilon) < 1e-8.
    pub fn fast(rate: f64, sigma: f64, epsilon: f64, alpha: f64, t_trunc: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(invalid("rate", format!("fast rate must be > 0, got {rate}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(invalid(
                "epsilon",
                format!("scale must lie in (0, 1], got {epsilon}"),
            ));
        }
        let spec = Self::checked(rate, sigma, epsilon, alpha, t_trunc)?;
        if (-rate * t_trunc / epsilon).exp() >= TAIL_BOUND {
            return Err(invalid(
                "t_trunc",
                format!(
                    "truncation tail exp(-rate t/eps) = {:e} not below {TAIL_BOUND:e}",
                    (-rate * t_trunc / epsilon).exp()
                ),
            ));
        }
        Ok(spec)
    }

    /// Slow process spec (epsilon fixed at 1). The coefficient j may carry
    /// either sign at construction; a growing kernel is rejected when the
    /// convolution is actually evaluated.
    pub fn slow(j: f64, sigma: f64, alpha: f64, t_trunc: f64) -> Result<Self> {
        if j == 0.0 {
            return Err(invalid("rate", "slow coefficient must be nonzero"));
        }
        let spec = Self::checked(j, sigma, 1.0, alpha, t_trunc)?;
        if (-j.abs() * t_trunc).exp() >= TAIL_BOUND {
            return Err(invalid(
                "t_trunc",
                format!(
                    "truncation tail exp(-|j| t) = {:e} not below {TAIL_BOUND:e}",
                    (-j.abs() * t_trunc).exp()
                ),
            ));
        }
        Ok(spec)
    }

    fn checked(rate: f64, sigma: f64, epsilon: f64, alpha: f64, t_trunc: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(invalid("sigma", format!("must be >= 0, got {sigma}")));
        }
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(invalid(
                "alpha",
                format!("stability index must lie in (1, 2), got {alpha}"),
            ));
        }
        if !(t_trunc > 0.0) {
            return Err(invalid("t_trunc", format!("must be > 0, got {t_trunc}")));
        }
        Ok(Self {
            rate,
            sigma,
            epsilon,
            alpha,
            t_trunc,
        })
    }

    /// Horizon that pushes the kernel tail a 5% margin below the 1e-8 gate.
    pub fn default_t_trunc(rate: f64, epsilon: f64) -> f64 {
        1.05 * epsilon * TAIL_BOUND.recip().ln() / rate
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t_trunc(&self) -> f64 {
        self.t_trunc
    }

    /// Effective backward decay rate of the kernel in real time.
    fn effective_rate(&self) -> f64 {
        self.rate / self.epsilon
    }

    fn prefactor(&self) -> f64 {
        self.sigma * self.epsilon.powf(-1.0 / self.alpha)
    }
}

/// Truncated kernel sum at one grid time. Ascending in history so the
/// floating-point order is reproducible across shifted paths.
#[allow(clippy::needless_range_loop)]
fn convolve_at(
    path: &NoisePath,
    t: f64,
    rate: f64,
    prefactor: f64,
    t_trunc: f64,
) -> Result<f64> {
    let dt = path.dt();
    if rate <= 0.0 && (-rate * t_trunc).exp() > GROWTH_LIMIT {
        return Err(Error::NonConvergentKernel { rate, t_trunc });
    }
    let i_t = path.index_of(t, "stationary convolution")?;
    let n_trunc = (t_trunc / dt + 1e-9).floor() as usize;
    if i_t < n_trunc {
        return Err(Error::WindowTooShort {
            context: "stationary convolution",
            needed_start: t - t_trunc,
            needed_end: t,
            have_start: path.t_start(),
            have_end: path.t_end(),
        });
    }
    let inc = path.increments();
    let mut acc = 0.0;
    for k in (i_t - n_trunc)..i_t {
        let lag = (i_t - k) as f64 * dt;
        acc += (-rate * lag).exp() * inc[k];
    }
    Ok(prefactor * acc)
}

/// Fast stationary process at scale epsilon.
pub fn eta_eps(path: &NoisePath, t: f64, spec: &StationarySpec) -> Result<f64> {
    if spec.sigma == 0.0 {
        return Ok(0.0);
    }
    convolve_at(path, t, spec.effective_rate(), spec.prefactor(), spec.t_trunc)
}

/// Fast stationary process at scale one. Requires a spec built with
/// epsilon = 1 so the two names cannot silently disagree.
pub fn delta_stat(path: &NoisePath, t: f64, spec: &StationarySpec) -> Result<f64> {
    if spec.epsilon != 1.0 {
        return Err(invalid(
            "epsilon",
            format!("delta is the epsilon = 1 process, spec has {}", spec.epsilon),
        ));
    }
    if spec.sigma == 0.0 {
        return Ok(0.0);
    }
    convolve_at(path, t, spec.rate, spec.sigma, spec.t_trunc)
}

/// Slow stationary process; errors when the kernel grows backward instead
/// of decaying (the improper integral then diverges).
pub fn xi_stat(path: &NoisePath, t: f64, spec: &StationarySpec) -> Result<f64> {
    if spec.sigma == 0.0 {
        return Ok(0.0);
    }
    convolve_at(path, t, spec.rate, spec.sigma, spec.t_trunc)
}

/// Values of the convolution on the n_steps + 1 nodes t0 + k dt, advanced
/// by the one-step recursion v <- exp(-r dt) (v + p inc). The grid step
/// must equal the path step. The window absorbed at the seed keeps feeding
/// the recursion, so only [t0 - t_trunc, t0 + n dt] needs coverage.
pub(crate) fn series_on_grid(
    path: &NoisePath,
    t0: f64,
    n_steps: usize,
    rate: f64,
    prefactor: f64,
    t_trunc: f64,
) -> Result<Vec<f64>> {
    let dt = path.dt();
    if rate <= 0.0 && (-rate * t_trunc).exp() > GROWTH_LIMIT {
        return Err(Error::NonConvergentKernel { rate, t_trunc });
    }
    let i0 = path.index_of(t0, "stationary series")?;
    let seed = convolve_at(path, t0, rate, 1.0, t_trunc)?;
    if i0 + n_steps > path.increments().len() {
        return Err(Error::WindowTooShort {
            context: "stationary series",
            needed_start: t0 - t_trunc,
            needed_end: t0 + n_steps as f64 * dt,
            have_start: path.t_start(),
            have_end: path.t_end(),
        });
    }
    let decay = (-rate * dt).exp();
    let inc = path.increments();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut v = seed;
    values.push(prefactor * v);
    for k in 0..n_steps {
        v = decay * (v + inc[i0 + k]);
        values.push(prefactor * v);
    }
    Ok(values)
}

/// Direct truncated sums at the n_nodes grid times t0 + k dt. The kernel
/// table holds one exponential per lag, which is exactly the factor the
/// single-point evaluation computes, so every node agrees with eta_eps or
/// xi_stat bit for bit while the exp calls amortize across nodes.
fn direct_values(
    path: &NoisePath,
    t0: f64,
    n_nodes: usize,
    rate: f64,
    prefactor: f64,
    t_trunc: f64,
) -> Result<Vec<f64>> {
    let dt = path.dt();
    if rate <= 0.0 && (-rate * t_trunc).exp() > GROWTH_LIMIT {
        return Err(Error::NonConvergentKernel { rate, t_trunc });
    }
    if n_nodes == 0 {
        return Ok(Vec::new());
    }
    let i0 = path.index_of(t0, "stationary values")?;
    let n_trunc = (t_trunc / dt + 1e-9).floor() as usize;
    let last = i0 + (n_nodes - 1);
    if i0 < n_trunc || last > path.increments().len() {
        return Err(Error::WindowTooShort {
            context: "stationary values",
            needed_start: t0 - t_trunc,
            needed_end: t0 + (n_nodes - 1) as f64 * dt,
            have_start: path.t_start(),
            have_end: path.t_end(),
        });
    }
    let mut kernel = vec![0.0; n_trunc + 1];
    for (m, k) in kernel.iter_mut().enumerate().skip(1) {
        *k = (-rate * (m as f64 * dt)).exp();
    }
    let inc = path.increments();
    let mut out = Vec::with_capacity(n_nodes);
    for node in 0..n_nodes {
        let i_t = i0 + node;
        let mut acc = 0.0;
        for k in (i_t - n_trunc)..i_t {
            acc += kernel[i_t - k] * inc[k];
        }
        out.push(prefactor * acc);
    }
    Ok(out)
}

/// Node values of the fast process, each bitwise equal to eta_eps there.
pub fn eta_values(path: &NoisePath, t0: f64, n_nodes: usize, spec: &StationarySpec) -> Result<Vec<f64>> {
    if spec.sigma == 0.0 {
        return Ok(vec![0.0; n_nodes]);
    }
    direct_values(
        path,
        t0,
        n_nodes,
        spec.effective_rate(),
        spec.prefactor(),
        spec.t_trunc,
    )
}

/// Node values of the slow process, each bitwise equal to xi_stat there.
pub fn xi_values(path: &NoisePath, t0: f64, n_nodes: usize, spec: &StationarySpec) -> Result<Vec<f64>> {
    if spec.sigma == 0.0 {
        return Ok(vec![0.0; n_nodes]);
    }
    direct_values(path, t0, n_nodes, spec.rate, spec.sigma, spec.t_trunc)
}

/// Series for a fast spec on its own grid.
pub fn eta_series(path: &NoisePath, t0: f64, n_steps: usize, spec: &StationarySpec) -> Result<Vec<f64>> {
    if spec.sigma == 0.0 {
        return Ok(vec![0.0; n_steps + 1]);
    }
    series_on_grid(
        path,
        t0,
        n_steps,
        spec.effective_rate(),
        spec.prefactor(),
        spec.t_trunc,
    )
}

/// Series for a slow spec on its own grid.
pub fn xi_series(path: &NoisePath, t0: f64, n_steps: usize, spec: &StationarySpec) -> Result<Vec<f64>> {
    if spec.sigma == 0.0 {
        return Ok(vec![0.0; n_steps + 1]);
    }
    series_on_grid(path, t0, n_steps, spec.rate, spec.sigma, spec.t_trunc)
}
