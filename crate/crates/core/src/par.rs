//! Thin data-parallel shim: rayon with the `parallel` feature (default),
//! plain sequential loops without it.
//!
//! Reductions go through fixed-size chunks so that results are bit-identical
//! regardless of thread count.

/// Chunk length used by deterministic reductions.
pub const DET_CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    pub fn for_each_chunk_mut<T: Send, F>(data: &mut [T], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [T]) + Sync,
    {
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    pub fn for_each_index<F>(len: usize, grain: usize, f: F)
    where
        F: Fn(usize) + Sync + Send,
    {
        (0..len).into_par_iter().with_min_len(grain.max(1)).for_each(f);
    }

    /// Map fixed chunks to partial values, then fold them sequentially.
    pub fn map_chunks<T, U, F>(data: &[T], chunk: usize, f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&[T]) -> U + Sync,
    {
        data.par_chunks(chunk).map(|c| f(c)).collect()
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [T]),
    {
        for (i, c) in data.chunks_mut(chunk).enumerate() {
            f(i, c);
        }
    }

    pub fn for_each_index<F>(len: usize, _grain: usize, f: F)
    where
        F: Fn(usize),
    {
        for i in 0..len {
            f(i);
        }
    }

    pub fn map_chunks<T, U, F>(data: &[T], chunk: usize, f: F) -> Vec<U>
    where
        F: Fn(&[T]) -> U,
    {
        data.chunks(chunk).map(|c| f(c)).collect()
    }
}

pub use imp::{for_each_chunk_mut, for_each_index, map_chunks};

/// Deterministic sum of `f` over all elements: partial sums over fixed chunks,
/// folded in chunk order.
pub fn det_sum<T: Sync, F>(data: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64 + Sync,
{
    map_chunks(data, DET_CHUNK, |c| c.iter().map(&f).sum::<f64>())
        .into_iter()
        .sum()
}

/// Deterministic complex sum, same chunking scheme as [`det_sum`].
pub fn det_sum_c<T: Sync, F>(data: &[T], f: F) -> num_complex::Complex64
where
    F: Fn(&T) -> num_complex::Complex64 + Sync,
{
    map_chunks(data, DET_CHUNK, |c| {
        c.iter().map(&f).sum::<num_complex::Complex64>()
    })
    .into_iter()
    .sum()
}

/// Maximum of `f` over all elements (exact regardless of order).
pub fn det_max<T: Sync, F>(data: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64 + Sync,
{
    map_chunks(data, DET_CHUNK, |c| c.iter().map(&f).fold(f64::NEG_INFINITY, f64::max))
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}
