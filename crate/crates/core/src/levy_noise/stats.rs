//! Small statistics kit used by the distributional checks: two-sample
//! Kolmogorov-Smirnov with the asymptotic tail, empirical characteristic
//! function, and order statistics. Inputs marked `_sorted` must be sorted
//! ascending; sorting is left to the caller, which often reuses the array.

/// Two-sample KS statistic, tie-aware. Both slices sorted ascending.
pub fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    d
}

/// Asymptotic two-sided p-value for the two-sample statistic, with the
/// small-sample effective-size correction.
pub fn ks_p_value(d: f64, n1: usize, n2: usize) -> f64 {
    let en = ((n1 * n2) as f64 / (n1 + n2) as f64).sqrt();
    kolmogorov_tail((en + 0.12 + 0.11 / en) * d)
}

/// Q_KS(x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2).
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * x).powi(2)).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Real part of the empirical characteristic function at frequency theta.
/// For symmetric laws this is the whole characteristic function.
pub fn ecf_real(samples: &[f64], theta: f64) -> f64 {
    samples.iter().map(|&x| (theta * x).cos()).sum::<f64>() / samples.len() as f64
}

pub fn median_sorted(sorted: &[f64]) -> f64 {
    quantile_sorted(sorted, 0.5)
}

/// Interquartile range from linearly interpolated quartiles.
pub fn iqr_sorted(sorted: &[f64]) -> f64 {
    quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}
