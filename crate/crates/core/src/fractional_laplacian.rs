//! Spectral representation of the fractional Laplacian on (-1, 1) with
//! zero exterior condition, truncated to N modes.
//!
//! The working eigenpairs are the asymptotic ones: eigenvalues
//! (l pi/2 - (2 - alpha) pi/8)^alpha with sine mode shapes
//! sin(l pi (u + 1)/2), which are already orthonormal in L2(-1, 1). These
//! are exact at alpha = 2 and an O(1/l)-accurate surrogate below it; the
//! collocation oracle in this module quantifies the committed error, and
//! the acceptance suite pins it under 5% for l <= 5.
//!
//! The oracle discretizes the generator in its symmetric-pairing form,
//!
//! ```text
//! (-Delta)^(alpha/2) x(u) = C_alpha int_0^inf (2 x(u) - x(u+w) - x(u-w)) w^(-1-alpha) dw,
//! ```
//!
//! with exact power-law moments of the kernel on every grid cell. On the
//! singular cell [0, h] the paired difference is modeled by the local
//! quadratic through the three nearest nodes, whose curvature term is what
//! keeps the scheme convergent for alpha > 1; a piecewise-linear model has
//! zero curvature there and loses the entire cell.

use nalgebra::DMatrix;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Field on (-1, 1) stored as mode coefficients in the operator basis.
/// The L2 norm is the Euclidean norm of the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub coefficients: Vec<f64>,
}

impl SpatialField {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coefficients: vec![0.0; n_modes],
        }
    }

    /// c times the mode-1 shape.
    pub fn first_mode(n_modes: usize, c: f64) -> Self {
        let mut coefficients = vec![0.0; n_modes];
        coefficients[0] = c;
        Self { coefficients }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Asymptotic eigenvalue (l pi/2 - (2 - alpha) pi/8)^alpha.
pub fn eigenvalue_asymptotic(l: usize, alpha: f64) -> Result<f64> {
    if l == 0 {
        return Err(invalid("l", "mode index starts at 1"));
    }
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(invalid(
            "alpha",
            format!("operator order must lie in (1, 2], got {alpha}"),
        ));
    }
    let base = l as f64 * PI / 2.0 - (2.0 - alpha) * PI / 8.0;
    Ok(base.powf(alpha))
}

/// Truncated eigendecomposition of the fast linear part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    alpha: f64,
    eigenvalues: Vec<f64>,
    mode_integrals: Vec<f64>,
}

impl SpectralOperator {
    /// Builds the N-mode operator; eigenvalues come from the asymptotic
    /// formula and the mode integrals int_{-1}^1 sin(l pi (u+1)/2) du are
    /// computed once by quadrature and cached.
    pub fn new(alpha: f64, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("n_modes", "need at least one mode"));
        }
        let mut eigenvalues = Vec::with_capacity(n_modes);
        for l in 1..=n_modes {
            eigenvalues.push(eigenvalue_asymptotic(l, alpha)?);
        }
        for pair in eigenvalues.windows(2) {
            debug_assert!(pair[0] < pair[1]);
        }
        let mode_integrals = (1..=n_modes).map(mode_integral).collect();
        Ok(Self {
            alpha,
            eigenvalues,
            mode_integrals,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn mode_integrals(&self) -> &[f64] {
        &self.mode_integrals
    }

    /// e^{A t} x in the spectral frame: coefficient k decays by
    /// exp(-lambda_k t). Contractive with constant 1 for t >= 0.
    pub fn apply_semigroup(&self, x: &SpatialField, t: f64) -> Result<SpatialField> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("semigroup time must be >= 0, got {t}")));
        }
        self.check_dim(x, "apply_semigroup")?;
        Ok(SpatialField::new(
            x.coefficients
                .iter()
                .zip(&self.eigenvalues)
                .map(|(c, lam)| c * (-lam * t).exp())
                .collect(),
        ))
    }

    /// int_{-1}^1 x(a) da from cached mode integrals; exactly linear in x.
    pub fn integrate_field(&self, x: &SpatialField) -> Result<f64> {
        self.check_dim(x, "integrate_field")?;
        Ok(x.coefficients
            .iter()
            .zip(&self.mode_integrals)
            .map(|(c, w)| c * w)
            .sum())
    }

    fn check_dim(&self, x: &SpatialField, context: &'static str) -> Result<()> {
        if x.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.n_modes(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// Simpson quadrature of sin(l pi (u+1)/2) over (-1, 1).
fn mode_integral(l: usize) -> f64 {
    let panels = 4096;
    let h = 2.0 / panels as f64;
    let shape = |u: f64| (l as f64 * PI * (u + 1.0) / 2.0).sin();
    let mut sum = shape(-1.0) + shape(1.0);
    for i in 1..panels {
        let u = -1.0 + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * shape(u);
    }
    sum * h / 3.0
}

/// Normalizing constant of the singular integral in one dimension.
fn singular_constant(alpha: f64) -> f64 {
    2f64.powf(alpha) * gamma((1.0 + alpha) / 2.0) * (PI * alpha / 2.0).sin()
        * gamma(1.0 + alpha / 2.0)
        / PI.powf(1.5)
}

/// Collocation matrix on the interior nodes u_i = -1 + i h, h = 2/(M+1),
/// with zero exterior values. Symmetric Toeplitz by construction.
fn collocation_matrix(alpha: f64, m: usize) -> DMatrix<f64> {
    let h = 2.0 / (m + 1) as f64;
    let c = singular_constant(alpha);
    let kmax = m + 1;
    // exact kernel moments per cell [k h, (k+1) h]:
    // J0 = int w^(-1-alpha), J1 = int w^(-alpha); I1/I2 are the hat-function
    // weights of the linear interpolant of x(u +- w) on that cell
    let mut w = vec![0.0; kmax + 1];
    let mut i1 = vec![0.0; kmax + 1];
    let mut i2 = vec![0.0; kmax + 1];
    for k in 1..=kmax {
        let kf = k as f64;
        let j0 = ((kf * h).powf(-alpha) - ((kf + 1.0) * h).powf(-alpha)) / alpha;
        let j1 = (((kf + 1.0) * h).powf(1.0 - alpha) - (kf * h).powf(1.0 - alpha)) / (1.0 - alpha);
        i1[k] = (kf + 1.0) * j0 - j1 / h;
        i2[k] = j1 / h - kf * j0;
    }
    // singular cell handled by the quadratic through the three nearest
    // nodes: contributes h^(-alpha)/(2-alpha) * (2 x_i - x_{i+1} - x_{i-1})
    let singular = h.powf(-alpha) / (2.0 - alpha);
    w[1] = i1[1] + singular;
    for d in 2..=kmax {
        w[d] = i1[d] + i2[d - 1];
    }
    let diag = h.powf(-alpha) * (2.0 / (2.0 - alpha) + 2.0 / alpha);
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            c * diag
        } else {
            let d = i.abs_diff(j);
            if d <= kmax {
                -c * w[d]
            } else {
                0.0
            }
        }
    })
}

/// Sorted eigenvalues of the collocation matrix, ascending.
fn collocation_spectrum(alpha: f64, grid_points: usize) -> Result<Vec<f64>> {
    let a = collocation_matrix(alpha, grid_points);
    let max_asymmetry = (0..grid_points)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - a[(j, i)]).abs())
        .fold(0.0f64, f64::max);
    if max_asymmetry > 1e-10 {
        return Err(Error::AsymmetricMatrix { max_asymmetry });
    }
    let mut evs: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    evs.sort_by(f64::total_cmp);
    Ok(evs)
}

/// Independent eigenvalue estimate from singular-integral collocation on
/// `grid_points` interior nodes. Validates the asymptotic formula.
pub fn quadrature_eigenvalue_oracle(alpha: f64, l: usize, grid_points: usize) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(invalid(
            "alpha",
            format!("collocation kernel needs alpha in (1, 2), got {alpha}"),
        ));
    }
    if grid_points < 64 {
        return Err(invalid(
            "grid_points",
            format!("need at least 64 nodes, got {grid_points}"),
        ));
    }
    if l == 0 || l > grid_points / 4 {
        return Err(invalid(
            "l",
            format!("mode index must lie in 1..={}, got {l}", grid_points / 4),
        ));
    }
    Ok(collocation_spectrum(alpha, grid_points)?[l - 1])
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    const LAMBDA1_15: f64 = 1.611_357_463_849_782_7;
    const LAMBDA2_15: f64 = 5.054_540_999_519_463_4;
    const LAMBDA3_15: f64 = 9.597_024_181_329_004_6;

    #[test]
    fn asymptotic_values_match_closed_form() {
        assert!((eigenvalue_asymptotic(1, 1.5).unwrap() - LAMBDA1_15).abs() < 1e-15);
        assert!((eigenvalue_asymptotic(2, 1.5).unwrap() - LAMBDA2_15).abs() < 1e-14);
        assert!((eigenvalue_asymptotic(3, 1.5).unwrap() - LAMBDA3_15).abs() < 1e-14);
        assert!(
            (eigenvalue_asymptotic(1, 1.2).unwrap() - 1.315_381_825_092_729_2).abs() < 1e-15
        );
        assert!(
            (eigenvalue_asymptotic(1, 1.8).unwrap() - 2.055_503_725_119_492_5).abs() < 1e-15
        );
    }

    #[test]
    fn alpha_two_reduces_to_dirichlet_laplacian() {
        for l in 1..=4 {
            let expected = (l as f64 * PI / 2.0).powi(2);
            assert!((eigenvalue_asymptotic(l, 2.0).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert!(eigenvalue_asymptotic(0, 1.5).is_err());
        assert!(eigenvalue_asymptotic(1, 1.0).is_err());
        assert!(eigenvalue_asymptotic(1, 2.1).is_err());
        assert!(quadrature_eigenvalue_oracle(2.0, 1, 128).is_err());
        assert!(quadrature_eigenvalue_oracle(1.5, 0, 128).is_err());
        assert!(quadrature_eigenvalue_oracle(1.5, 33, 128).is_err());
        assert!(quadrature_eigenvalue_oracle(1.5, 1, 32).is_err());
        assert!(SpectralOperator::new(1.5, 0).is_err());
    }

    #[test]
    fn eigenvalues_strictly_increase() {
        let op = SpectralOperator::new(1.3, 12).unwrap();
        for pair in op.eigenvalues().windows(2) {
            assert!(pair[0] < pair[1]);
        }
        assert!(op.lambda1() > 0.0);
    }

    #[test]
    fn singular_constant_matches_reference_values() {
        assert!((singular_constant(1.2) - 0.333_549_429_912_248_11).abs() < 1e-15);
        assert!((singular_constant(1.5) - 0.299_206_710_301_074_51).abs() < 1e-15);
        assert!((singular_constant(1.8) - 0.164_904_938_818_302_72).abs() < 1e-15);
    }

    #[test]
    fn oracle_confirms_asymptotic_at_alpha_19() {
        let reference = 2.247_690_635_452_102_2; // (pi/2 - pi/80)^1.9
        assert!((eigenvalue_asymptotic(1, 1.9).unwrap() - reference).abs() < 1e-15);
        let oracle = quadrature_eigenvalue_oracle(1.9, 1, 256).unwrap();
        assert!(
            ((oracle - reference) / reference).abs() < 0.05,
            "oracle {oracle} vs {reference}"
        );
    }

    #[test]
    fn oracle_tracks_asymptotic_at_moderate_grid() {
        for l in 1..=3 {
            let asym = eigenvalue_asymptotic(l, 1.5).unwrap();
            let oracle = quadrature_eigenvalue_oracle(1.5, l, 256).unwrap();
            assert!(
                ((asym - oracle) / asym).abs() < 0.05,
                "l = {l}: asymptotic {asym}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn ground_mode_of_collocation_is_even_symmetric() {
        let m = 129;
        let a = collocation_matrix(1.5, m);
        let eig = a.symmetric_eigen();
        let mut idx = 0;
        for k in 1..m {
            if eig.eigenvalues[k] < eig.eigenvalues[idx] {
                idx = k;
            }
        }
        let v = eig.eigenvectors.column(idx);
        let scale = v.amax();
        for i in 0..m {
            let mirrored = v[m - 1 - i];
            assert!(
                (v[i].abs() - mirrored.abs()).abs() < 1e-8 * scale,
                "node {i} breaks even symmetry"
            );
        }
    }

    #[test]
    fn semigroup_decays_first_mode_by_frozen_factor() {
        let op = SpectralOperator::new(1.5, 4).unwrap();
        let x = SpatialField::first_mode(4, 1.0);
        let y = op.apply_semigroup(&x, 1.0).unwrap();
        assert!((y.coefficients[0] - 0.1996).abs() < 5e-4);
        assert!((y.coefficients[0] - (-LAMBDA1_15).exp()).abs() < 1e-15);
    }

    #[test]
    fn semigroup_composes_to_machine_precision() {
        let op = SpectralOperator::new(1.7, 6).unwrap();
        let x = SpatialField::new(vec![1.0, -0.5, 0.25, 2.0, 0.0, -1.5]);
        let two_step = op
            .apply_semigroup(&op.apply_semigroup(&x, 0.3).unwrap(), 0.45)
            .unwrap();
        let one_step = op.apply_semigroup(&x, 0.75).unwrap();
        for (a, b) in two_step.coefficients.iter().zip(&one_step.coefficients) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn semigroup_contracts_with_constant_one() {
        let op = SpectralOperator::new(1.4, 5).unwrap();
        let x = SpatialField::new(vec![0.3, -1.2, 0.8, 0.05, 2.0]);
        for &t in &[0.0, 0.01, 0.1, 1.0, 5.0] {
            let y = op.apply_semigroup(&x, t).unwrap();
            assert!(y.norm() <= (-op.lambda1() * t).exp() * x.norm() + 1e-14);
        }
        assert!(op.apply_semigroup(&x, -0.1).is_err());
    }

    #[test]
    fn integrate_field_uses_cached_mode_integrals() {
        let op = SpectralOperator::new(1.5, 8).unwrap();
        assert_eq!(op.integrate_field(&SpatialField::zeros(8)).unwrap(), 0.0);
        // odd modes integrate to 4/(l pi), even modes vanish
        for (l, w) in op.mode_integrals().iter().enumerate() {
            let l = l + 1;
            let exact = if l % 2 == 1 { 4.0 / (l as f64 * PI) } else { 0.0 };
            assert!((w - exact).abs() < 1e-10, "mode {l}: {w} vs {exact}");
        }
        let c = 0.7;
        let field = SpatialField::first_mode(8, c);
        let val = op.integrate_field(&field).unwrap();
        assert!((val - c * op.mode_integrals()[0]).abs() < 1e-15);
    }

    #[test]
    fn integrate_field_is_exactly_linear() {
        let op = SpectralOperator::new(1.5, 4).unwrap();
        let u = SpatialField::new(vec![0.2, -1.0, 0.5, 3.0]);
        let v = SpatialField::new(vec![1.1, 0.4, -0.7, 0.9]);
        let (a, b) = (2.5, -1.25);
        let combo = SpatialField::new(
            u.coefficients
                .iter()
                .zip(&v.coefficients)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        );
        let lhs = op.integrate_field(&combo).unwrap();
        let rhs = a * op.integrate_field(&u).unwrap() + b * op.integrate_field(&v).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = SpectralOperator::new(1.5, 4).unwrap();
        let x = SpatialField::zeros(3);
        assert!(op.apply_semigroup(&x, 1.0).is_err());
        assert!(op.integrate_field(&x).is_err());
    }
}
