//! Solve one slow-manifold point for the contracting example system and
//! print the leading graph coefficient with its certification flag.

use levyslow_core::levy_noise::{sample_path, RngStream, StableParams};
use levyslow_core::presets::example2;
use levyslow_core::slow_manifold::{solve_manifold_point, ManifoldConfig};

fn main() -> Result<(), levyslow_core::Error> {
    // 8 spectral modes, alpha = 1.5, scale separation 1/100
    let spec = example2(0.01, 1.5, 8, 1.0, 0.1, 0.0)?;
    let config = ManifoldConfig::with_default_horizon(&spec, 1e-3, 40, 1e-9)?;

    // one driving path; it must reach one truncation window past the
    // backward horizon for the stationary convolution
    let params = StableParams::new(1.5, 1.0)?;
    let mut rng = RngStream::new(7, 0);
    let omega = sample_path(&params, -config.horizon() - 0.7, 1e-3, 1e-3, &mut rng)?;

    let point = solve_manifold_point(&spec, (&omega, &omega), &[0.5], &config)?;
    println!(
        "h(0.5) mode 1 = {:.3e}, certified: {}",
        point.h_value.coefficients[0], point.certified
    );
    Ok(())
}
