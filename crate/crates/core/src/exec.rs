//! Data-parallel execution with a sequential fallback.
//!
//! Every batch is split into fixed chunks whose boundaries do not depend on
//! the number of worker threads, and partial results are combined in chunk
//! order. Output is therefore identical for `Parallel` and `Sequential`.

/// How a batch of independent jobs is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    /// Rayon work-stealing pool. Without the `parallel` feature this runs
    /// sequentially.
    Parallel,
    Sequential,
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
    /// `f(0), …, f(n-1)` in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Folds `0..n` in chunks of `chunk` items and reduces the partials in
    /// chunk order.
    pub fn fold_chunks<A, Init, Fold, Reduce>(self, n: usize, chunk: usize, init: Init, fold: Fold, reduce: Reduce) -> A
    where
        A: Send,
        Init: Fn() -> A + Sync + Send,
        Fold: Fn(&mut A, std::ops::Range<usize>) + Sync + Send,
        Reduce: Fn(A, A) -> A,
    {
        let chunk = chunk.max(1);
        let chunks = n.div_ceil(chunk);
        let partials = self.map(chunks, |c| {
            let mut acc = init();
            fold(&mut acc, c * chunk..((c + 1) * chunk).min(n));
            acc
        });
        partials.into_iter().fold(init(), reduce)
    }
}

/// Upper bound on worker threads from `LFPP_THREADS`, if set.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var("LFPP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
