//! Ready-made system descriptions used by the command line runs, the
//! worked examples, and the oracle tests.
//!
//! Both worked examples couple every mode through the spatial average
//! integral(x) of the fast field and push slow feedback onto the modes
//! through the basis mode integrals, so no mode is decoupled even though
//! the linear part is diagonal. The declared Lipschitz constants are
//! small enough to survive the sampled-quotient check on the box the
//! validator draws from: the mode-integral vector has norm below sqrt(2)
//! for every truncation level.

use crate::error::Result;
use crate::fastslow_system::{NoiseSpec, SlowLinear, SystemSpec};
use crate::fractional_laplacian::{SpatialField, SpectralOperator};

/// Self-amplifying example: f = (y^2 / 6) per mode integral,
/// g = (1/3) sin(integral of x), J = +1. The declared constant 0.95
/// covers the quotients on the sampling box but sits above the
/// spectral-gap smallness thresholds, so condition checks report
/// failures while the contraction factor stays below one for small
/// epsilon.
pub fn example1(
    epsilon: f64,
    alpha: f64,
    n_modes: usize,
    sigma1: f64,
    sigma2: f64,
) -> Result<SystemSpec> {
    example1_with(
        epsilon,
        alpha,
        n_modes,
        NoiseSpec {
            sigma1,
            sigma2,
            alpha1: alpha,
            alpha2: alpha,
        },
    )
}

/// [`example1`] with the noise channels spelled out separately, for
/// callers whose stability indices differ from the spatial exponent.
pub fn example1_with(
    epsilon: f64,
    alpha: f64,
    n_modes: usize,
    noise: NoiseSpec,
) -> Result<SystemSpec> {
    let operator = SpectralOperator::new(alpha, n_modes)?;
    let iota = operator.mode_integrals().to_vec();
    let iota_g = iota.clone();
    SystemSpec::new(
        epsilon,
        operator,
        1,
        SlowLinear::Scalar(1.0),
        1.0,
        Box::new(move |_x, y| {
            let a = y[0] * y[0] / 6.0;
            SpatialField::new(iota.iter().map(|i| a * i).collect())
        }),
        Box::new(move |x, _y| {
            let avg: f64 = x.coefficients.iter().zip(&iota_g).map(|(c, i)| c * i).sum();
            vec![avg.sin() / 3.0]
        }),
        0.95,
        noise,
    )
}

/// Contracting example: f = 0.01 (sqrt(y^2 + 5) - sqrt(5)) per mode
/// integral, g = 0.01 b sin(integral of x), J = -1. The joint constant
/// 0.01 sqrt(2) max(1, b) passes every smallness condition, so the
/// construction is certified for any epsilon in range. With J < 0 the
/// slow stationary convolution diverges, so sigma2 > 0 builds but fails
/// at evaluation time; pass sigma2 = 0 for this example.
pub fn example2(
    epsilon: f64,
    alpha: f64,
    n_modes: usize,
    b: f64,
    sigma1: f64,
    sigma2: f64,
) -> Result<SystemSpec> {
    example2_with(
        epsilon,
        alpha,
        n_modes,
        b,
        NoiseSpec {
            sigma1,
            sigma2,
            alpha1: alpha,
            alpha2: alpha,
        },
    )
}

/// [`example2`] with the noise channels spelled out separately.
pub fn example2_with(
    epsilon: f64,
    alpha: f64,
    n_modes: usize,
    b: f64,
    noise: NoiseSpec,
) -> Result<SystemSpec> {
    let operator = SpectralOperator::new(alpha, n_modes)?;
    let iota = operator.mode_integrals().to_vec();
    let iota_g = iota.clone();
    let k = 0.01 * std::f64::consts::SQRT_2 * b.max(1.0);
    SystemSpec::new(
        epsilon,
        operator,
        1,
        SlowLinear::Scalar(-1.0),
        1.0,
        Box::new(move |_x, y| {
            let a = 0.01 * ((y[0] * y[0] + 5.0).sqrt() - 5f64.sqrt());
            SpatialField::new(iota.iter().map(|i| a * i).collect())
        }),
        Box::new(move |x, _y| {
            let avg: f64 = x.coefficients.iter().zip(&iota_g).map(|(c, i)| c * i).sum();
            vec![0.01 * b * avg.sin()]
        }),
        k,
        noise,
    )
}

/// Noise-free benchmark with f = c y on the first mode and g = 0; its
/// graph is exactly c y0 / (lambda1 + epsilon J) on the first mode,
/// which pins the quadrature error of every solver path.
pub fn linear_oracle(c: f64, j: f64, epsilon: f64, alpha: f64, n_modes: usize) -> Result<SystemSpec> {
    linear_oracle_with(c, j, epsilon, alpha, n_modes, NoiseSpec::none())
}

/// [`linear_oracle`] with noise channels attached; the drift stays
/// linear, so the transformed graph formula still holds exactly.
pub fn linear_oracle_with(
    c: f64,
    j: f64,
    epsilon: f64,
    alpha: f64,
    n_modes: usize,
    noise: NoiseSpec,
) -> Result<SystemSpec> {
    let operator = SpectralOperator::new(alpha, n_modes)?;
    SystemSpec::new(
        epsilon,
        operator,
        1,
        SlowLinear::Scalar(j),
        1.0,
        Box::new(move |_x, y| SpatialField::first_mode(n_modes, c * y[0])),
        Box::new(|_x, _y| vec![0.0]),
        c.abs().max(1e-12),
        noise,
    )
}
