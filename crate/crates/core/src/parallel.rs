//! Batch execution over independent tasks.
//!
//! Every batch entry point in this crate funnels through [`par_map`], which
//! runs on the rayon pool when the `parallel` feature is enabled and falls
//! back to a plain sequential loop otherwise. Output order always matches
//! input order, so results are reproducible regardless of scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map over independent tasks.
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Sequential reference implementation, compiled unconditionally so the
/// bench suite can compare both paths under any feature set.
pub fn seq_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order() {
        let squares = par_map((0..100).collect(), |i: i64| i * i);
        assert_eq!(squares, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn seq_and_par_agree() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let a = par_map(xs.clone(), |x| (x.sin() * 1e6).round());
        let b = seq_map(xs, |x| (x.sin() * 1e6).round());
        assert_eq!(a, b);
    }
}
