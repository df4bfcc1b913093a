//! Execution mode for batch-level data parallelism.
//!
//! Banded recursions (Cholesky, Takahashi, triangular solves) are inherently
//! sequential along the band. Parallelism is applied one level up: independent
//! instances of a gradient suite, column blocks of large band products and
//! independent HMC chains. Every parallel map preserves input order, so
//! reductions done by the caller over the returned `Vec` are bit-stable
//! regardless of mode.
//!
//! Without the `parallel` feature, [`Mode::Parallel`] silently runs
//! sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sequential,
    #[default]
    Parallel,
}

impl Mode {
    /// True when this mode will actually fan out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Mode::Parallel
    }
}

/// Order-preserving map over `0..len`.
pub fn map_range<T, F>(mode: Mode, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Mode::Parallel {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    let _ = mode;
    (0..len).map(f).collect()
}

/// Order-preserving map over a slice.
pub fn map_slice<S, T, F>(mode: Mode, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Mode::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Applies `f(index, chunk)` to consecutive `chunk`-sized pieces of `data`.
pub fn for_each_chunk_mut<T, F>(mode: Mode, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk > 0);
    #[cfg(feature = "parallel")]
    {
        if mode == Mode::Parallel {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(k, c)| f(k, c));
            return;
        }
    }
    let _ = mode;
    data.chunks_mut(chunk).enumerate().for_each(|(k, c)| f(k, c));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let seq = map_range(Mode::Sequential, 1000, |i| (i as f64).sqrt());
        let par = map_range(Mode::Parallel, 1000, |i| (i as f64).sqrt());
        assert_eq!(seq, par);

        let items: Vec<u32> = (0..257).collect();
        let a = map_slice(Mode::Parallel, &items, |x| x * 3);
        assert_eq!(a[256], 768);
    }

    #[test]
    fn chunked_writes_cover_everything() {
        let mut v = vec![0usize; 103];
        for_each_chunk_mut(Mode::Parallel, &mut v, 10, |k, c| {
            for (o, x) in c.iter_mut().enumerate() {
                *x = k * 10 + o;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }
}
