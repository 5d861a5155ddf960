//! Data-parallel helpers.
//!
//! With the `parallel` feature every helper fans out over the rayon pool;
//! without it the same calls run sequentially. In both cases results are
//! returned in index order, so reductions over them do not depend on
//! scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(i)` for every `i in 0..n`, collecting in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fallible variant of [`map_range`]; returns the error with the lowest index.
pub fn try_map_range<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(n, f).into_iter().collect()
}

/// Fill `out[i] = f(i)` in place, chunked across workers.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        const CHUNK: usize = 1 << 12;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (j, slot) in chunk.iter_mut().enumerate() {
                *slot = f(c * CHUNK + j);
            }
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_preserves_order() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn try_map_range_reports_first_error() {
        let r: Result<Vec<usize>, usize> = try_map_range(100, |i| if i % 30 == 29 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(29));
    }

    #[test]
    fn fill_indexed_independent_of_chunking() {
        let mut out = vec![0u64; 10_001];
        fill_indexed(&mut out, |i| (i as u64).wrapping_mul(2654435761));
        for (i, x) in out.iter().enumerate() {
            assert_eq!(*x, (i as u64).wrapping_mul(2654435761));
        }
    }
}
