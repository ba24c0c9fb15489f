//! Data-parallel helpers with a sequential fallback.
//!
//! Every hot loop in the crate (per-tree forest fitting, per-shard gradient
//! accumulation, per-rep rollouts, per-candidate cross-validation) goes
//! through [`map_indexed`]. Results are always returned in input order, so
//! parallel and sequential execution produce identical values.

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, and falls
    /// back to [`Execution::Sequential`] otherwise.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this mode will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Applies `f` to `0..n` and collects the results in index order.
pub fn map_indexed<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel && n > 1 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f` to every item of `items`, preserving order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indexed(exec, items.len(), |i| f(&items[i]))
}

/// Derives an independent 64-bit seed from a base seed and a stream index
/// (SplitMix64 finalizer). Used for per-tree and per-shard generators so that
/// results do not depend on scheduling.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
