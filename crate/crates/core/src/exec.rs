//! Parallel map over independent jobs, with a sequential fallback.
//!
//! Results always come back in job order, so reductions over them are
//! deterministic whatever the thread count.

/// Maps `f` over `0..jobs`. Runs on the rayon pool when `parallel` is set and
/// the `parallel` feature is enabled; sequentially otherwise.
pub fn map_indexed<T, F>(jobs: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel && jobs > 1 {
            use rayon::prelude::*;
            return (0..jobs).into_par_iter().map(f).collect();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    (0..jobs).map(f).collect()
}

/// Whether this build can run jobs in parallel.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Caps the global pool at `threads`. Returns false if the pool was already
/// initialized or the build is sequential.
pub fn init_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}
