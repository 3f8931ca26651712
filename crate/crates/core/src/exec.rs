//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) `Parallelism::Parallel` fans work out
//! over the rayon pool. Without it, or with `Parallelism::Sequential`, the same
//! closures run in index order on the calling thread. Results are always
//! returned in index order, so reductions downstream are deterministic.

use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// `workers == 1` means sequential; anything else uses the pool.
    pub fn from_workers(workers: usize) -> Self {
        if workers == 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        }
    }

    /// Whether work actually fans out; always false without the `parallel` feature.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Size the global worker pool. Only the first call has an effect.
pub fn configure_workers(workers: usize) {
    #[cfg(feature = "parallel")]
    {
        if workers > 1 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
}

/// Evaluate `f(i)` for `i in 0..n`.
pub fn map_range<T, F>(n: usize, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_range`]; the first error in index order wins.
pub fn try_map_range<T, F>(n: usize, par: Parallelism, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_range(n, par, f).into_iter().collect()
}

/// Apply `f(i, row_i)` to consecutive rows of width `width`, collecting results.
pub fn try_map_rows<T, F>(data: &mut [f64], width: usize, par: Parallelism, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut [f64]) -> Result<T> + Sync + Send,
{
    assert!(width > 0, "row width must be positive");
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        let out: Vec<Result<T>> = data
            .par_chunks_mut(width)
            .enumerate()
            .map(|(i, row)| f(i, row))
            .collect();
        return out.into_iter().collect();
    }
    let _ = par;
    data.chunks_mut(width)
        .enumerate()
        .map(|(i, row)| f(i, row))
        .collect()
}

/// Like [`try_map_rows`] but walks two row-aligned arrays in lockstep.
pub fn try_map_rows2<T, F>(
    a: &mut [f64],
    width_a: usize,
    b: &mut [f64],
    width_b: usize,
    par: Parallelism,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut [f64], &mut [f64]) -> Result<T> + Sync + Send,
{
    assert!(width_a > 0 && width_b > 0, "row width must be positive");
    assert_eq!(a.len() / width_a, b.len() / width_b, "row counts differ");
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        let out: Vec<Result<T>> = a
            .par_chunks_mut(width_a)
            .zip(b.par_chunks_mut(width_b))
            .enumerate()
            .map(|(i, (ra, rb))| f(i, ra, rb))
            .collect();
        return out.into_iter().collect();
    }
    let _ = par;
    a.chunks_mut(width_a)
        .zip(b.chunks_mut(width_b))
        .enumerate()
        .map(|(i, (ra, rb))| f(i, ra, rb))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let seq = map_range(1000, Parallelism::Sequential, |i| (i as f64).sqrt());
        let par = map_range(1000, Parallelism::Parallel, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
    }

    #[test]
    fn rows_visit_in_order() {
        let mut a = vec![0.0; 12];
        let idx = try_map_rows(&mut a, 3, Parallelism::Parallel, |i, row| {
            row.fill(i as f64);
            Ok(i)
        })
        .unwrap();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert_eq!(a[9..], [3.0, 3.0, 3.0]);
    }

    #[test]
    fn first_error_in_index_order() {
        let r: Result<Vec<usize>> = try_map_range(10, Parallelism::Parallel, |i| {
            if i >= 4 {
                Err(crate::Error::input(format!("bad {i}")))
            } else {
                Ok(i)
            }
        });
        assert_eq!(r.unwrap_err().to_string(), "invalid input: bad 4");
    }
}
