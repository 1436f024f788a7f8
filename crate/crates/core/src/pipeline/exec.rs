//! Row-parallel evaluation of per-pixel kernels.

use crate::error::{Error, Result};
use crate::metrics::Tally;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "LUTFILT_THREADS";

/// Execution knobs. `threads: None` uses every available core.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn with_threads(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::Param("thread count must be positive".into()));
        }
        Ok(Self {
            threads: Some(threads),
        })
    }

    /// Reads the worker cap from `LUTFILT_THREADS`, if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => {
                let n = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Param(format!("{THREADS_ENV}={v:?} is not a count")))?;
                Self::with_threads(n)
            }
            _ => Ok(Self::default()),
        }
    }
}

/// Fills a `height x row_len` buffer row by row, one fresh tally per row,
/// and sums the tallies. Output and totals do not depend on the worker count.
pub(crate) fn map_rows<E, T, F>(opts: &RunOptions, height: usize, row_len: usize, f: F) -> (Vec<E>, T)
where
    E: Copy + Default + Send,
    T: Tally,
    F: Fn(usize, &mut [E], &mut T) + Sync,
{
    let mut data = vec![E::default(); height * row_len];
    if row_len == 0 {
        return (data, T::default());
    }
    #[cfg(feature = "parallel")]
    {
        if opts.threads != Some(1) && height > 1 {
            let run = |data: &mut Vec<E>| {
                use rayon::prelude::*;
                data.par_chunks_mut(row_len)
                    .enumerate()
                    .map(|(y, row)| {
                        let mut t = T::default();
                        f(y, row, &mut t);
                        t
                    })
                    .reduce(T::default, |mut a, b| {
                        a.absorb(b);
                        a
                    })
            };
            let total = match opts.threads {
                Some(n) => pool(n).install(|| run(&mut data)),
                None => run(&mut data),
            };
            return (data, total);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = opts;
    let mut total = T::default();
    for (y, row) in data.chunks_mut(row_len).enumerate() {
        let mut t = T::default();
        f(y, row, &mut t);
        total.absorb(t);
    }
    (data, total)
}

#[cfg(feature = "parallel")]
fn pool(threads: usize) -> std::sync::Arc<rayon::ThreadPool> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    pools
        .entry(threads)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .expect("thread pool"),
            )
        })
        .clone()
}
