//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) independent blocks run on the rayon
//! pool; without it, or with [`Execution::Sequential`], they run in order.
//! Results are always collected in block order and reduced with pairwise
//! summation, so both paths produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

const PAIRWISE_BASE: usize = 8;

/// Pairwise (cascade) summation; the association order depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise summation of a row-major `n × width` array, column by column.
pub fn pairwise_sum_columns(data: &[f64], width: usize) -> Vec<f64> {
    if width == 0 {
        return Vec::new();
    }
    let n = data.len() / width;
    (0..width)
        .map(|j| {
            let col: Vec<f64> = (0..n).map(|i| data[i * width + j]).collect();
            pairwise_sum(&col)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_inputs() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 10.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn pairwise_beats_naive_on_ill_conditioned_sum() {
        let n = 1 << 20;
        let xs = vec![0.1; n];
        let naive: f64 = xs.iter().sum();
        let exact = 0.1 * n as f64;
        assert!((pairwise_sum(&xs) - exact).abs() <= (naive - exact).abs());
    }

    #[test]
    fn columns() {
        let data = [1.0, 10.0, 2.0, 20.0, 3.0, 30.0];
        assert_eq!(pairwise_sum_columns(&data, 2), vec![6.0, 60.0]);
    }

    #[test]
    fn both_execution_modes_agree() {
        let f = |i: usize| (i as f64).sin();
        let a = map_indexed(1000, Execution::Sequential, f);
        let b = map_indexed(1000, Execution::Parallel, f);
        assert_eq!(a, b);
    }
}
