//! Scalar symmetric alpha-stable sample paths on uniform grids, the
//! time-shift flow acting on them, and distributional test statistics.
//!
//! Paths are increment sequences: the process value is the running sum of
//! per-step jumps, anchored at zero at the window start. All downstream
//! integrals consume increments directly, so no event-time representation
//! is kept. Standard variates come from the Chambers-Mallows-Stuck
//! transform, which is exact for the symmetric case: with V uniform on
//! (-pi/2, pi/2) and W unit exponential,
//!
//! ```text
//! S = sin(alpha V) / cos(V)^(1/alpha) * (cos(V - alpha V) / W)^((1 - alpha)/alpha)
//! ```
//!
//! has characteristic function exp(-|theta|^alpha). Increments over a step
//! of length dt scale as dt^(1/alpha).

pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Relative slack when deciding whether a time is a whole number of steps.
const GRID_TOL: f64 = 1e-6;

/// Stability index and intensity of the driving process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    scale: f64,
}

impl StableParams {
    /// Requires 1 < alpha < 2 and scale >= 0.
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(invalid(
                "alpha",
                format!("stability index must lie in (1, 2), got {alpha}"),
            ));
        }
        if !(scale >= 0.0) {
            return Err(invalid("scale", format!("must be >= 0, got {scale}")));
        }
        Ok(Self { alpha, scale })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Deterministic random source: identical (seed, stream) reproduces
/// identical draws bit for bit on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw from the open interval (0, 1). Zero is rejected so the
    /// logarithm and the tangent-like CMS factors stay finite.
    fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 {
                return u;
            }
        }
    }
}

/// One standard symmetric alpha-stable variate via the CMS transform.
fn standard_stable(alpha: f64, rng: &mut RngStream) -> f64 {
    let v = (rng.uniform_open() - 0.5) * PI;
    let w = -rng.uniform_open().ln();
    let num = (alpha * v).sin();
    let den = v.cos().powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    num / den * tail
}

/// Samples one increment distributed as scale * dt^(1/alpha) * S.
pub fn sample_stable_increment(
    params: &StableParams,
    dt: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if params.scale == 0.0 {
        return Ok(0.0);
    }
    Ok(params.scale * dt.powf(1.0 / params.alpha) * standard_stable(params.alpha, rng))
}

/// Sample path of the driving process on a uniform grid.
///
/// `increments[k]` is the jump accumulated over `[t_start + k dt, t_start + (k+1) dt)`;
/// `cumulative` has one more entry than `increments` and starts at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    t_start: f64,
    t_end: f64,
    dt: f64,
    increments: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NoisePath {
    fn from_increments(t_start: f64, dt: f64, increments: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for &inc in &increments {
            acc += inc;
            cumulative.push(acc);
        }
        let t_end = t_start + dt * increments.len() as f64;
        Self {
            t_start,
            t_end,
            dt,
            increments,
            cumulative,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Grid index of time `t`, which must sit on a node.
    pub(crate) fn index_of(&self, t: f64, context: &'static str) -> Result<usize> {
        let pos = (t - self.t_start) / self.dt;
        let idx = pos.round();
        if (pos - idx).abs() > GRID_TOL * pos.abs().max(1.0) {
            return Err(Error::GridMisaligned {
                context,
                detail: format!("t = {t} is {pos} steps from the window start, not a whole number"),
            });
        }
        if idx < 0.0 || idx as usize > self.increments.len() {
            return Err(Error::WindowTooShort {
                context,
                needed_start: t.min(self.t_start),
                needed_end: t.max(self.t_end),
                have_start: self.t_start,
                have_end: self.t_end,
            });
        }
        Ok(idx as usize)
    }
}

/// Samples a path with i.i.d. stable increments on `[t_start, t_end]`.
pub fn sample_path(
    params: &StableParams,
    t_start: f64,
    t_end: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<NoisePath> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_start < t_end) {
        return Err(invalid(
            "t_end",
            format!("window [{t_start}, {t_end}] is empty"),
        ));
    }
    let steps_f = (t_end - t_start) / dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > GRID_TOL * steps.max(1.0) {
        return Err(Error::GridMisaligned {
            context: "sample_path",
            detail: format!("dt = {dt} does not divide the window length {}", t_end - t_start),
        });
    }
    let n = steps as usize;
    let mut increments = Vec::with_capacity(n);
    for _ in 0..n {
        increments.push(sample_stable_increment(params, dt, rng)?);
    }
    Ok(NoisePath::from_increments(t_start, dt, increments))
}

/// Time-shift flow: the returned path sees, at absolute time t, the
/// increments of `path` at t + l. The window is clamped to the part of
/// `[t_start, t_end]` where that data exists, so shifts compose exactly on
/// the common window.
pub fn shift_path(path: &NoisePath, l: f64) -> Result<NoisePath> {
    let m_f = l / path.dt;
    let m = m_f.round();
    if (m_f - m).abs() > GRID_TOL * m.abs().max(1.0) {
        return Err(Error::GridMisaligned {
            context: "shift_path",
            detail: format!("shift {l} is {m_f} steps, not a whole number"),
        });
    }
    let n = path.increments.len() as i64;
    let m = m as i64;
    let (new_start, slice): (f64, &[f64]) = if m >= 0 {
        if m >= n {
            return Err(Error::WindowTooShort {
                context: "shift_path",
                needed_start: path.t_start,
                needed_end: path.t_end + l,
                have_start: path.t_start,
                have_end: path.t_end,
            });
        }
        (path.t_start, &path.increments[m as usize..])
    } else {
        if -m >= n {
            return Err(Error::WindowTooShort {
                context: "shift_path",
                needed_start: path.t_start + l,
                needed_end: path.t_end,
                have_start: path.t_start,
                have_end: path.t_end,
            });
        }
        (
            path.t_start - l,
            &path.increments[..(n + m) as usize],
        )
    };
    Ok(NoisePath::from_increments(new_start, path.dt, slice.to_vec()))
}

/// Two-sample Kolmogorov-Smirnov statistic between increments over a window
/// of length c and rescaled unit-window increments, probing the
/// self-similarity law L(c) =d c^(1/alpha) L(1).
pub fn self_similarity_statistic(
    params: &StableParams,
    c: f64,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(invalid("c", format!("must be > 0, got {c}")));
    }
    if n_samples < 1000 {
        return Err(invalid(
            "n_samples",
            format!("need at least 1000 samples, got {n_samples}"),
        ));
    }
    let factor = c.powf(1.0 / params.alpha);
    let mut a = Vec::with_capacity(n_samples);
    let mut b = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        a.push(sample_stable_increment(params, c, rng)?);
        b.push(factor * sample_stable_increment(params, 1.0, rng)?);
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(stats::ks_statistic_sorted(&a, &b))
}
