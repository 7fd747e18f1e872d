//! Data-parallel helpers with a sequential fallback.
//!
//! All helpers preserve input order in their output, which is what keeps
//! mining, evaluation and gradient accumulation bit-identical across worker
//! counts.

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses the current rayon pool. Degrades to [`Exec::Sequential`] when the
    /// crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces of
/// `data` and the matching pieces of `other`.
pub fn zip_chunks_mut<F>(exec: Exec, data: &mut [f64], other: &[f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64], &[f64]) + Sync + Send,
{
    assert_eq!(data.len(), other.len());
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .zip(other.par_chunks(chunk))
            .enumerate()
            .for_each(|(i, (d, o))| f(i, d, o));
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk)
        .zip(other.chunks(chunk))
        .enumerate()
        .for_each(|(i, (d, o))| f(i, d, o));
}

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
