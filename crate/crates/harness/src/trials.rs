//! Parallel Monte-Carlo trials with a deterministic reduction.
//!
//! Trials are evaluated in fixed-size chunks on the current rayon pool and
//! folded strictly in trial order, so aggregates do not depend on the
//! number of workers.

use cbo_core::CboError;
use rayon::prelude::*;

use crate::error::Result;

/// Trials evaluated per parallel batch. Fixed, so the fold order never
/// depends on the pool size.
pub const CHUNK: usize = 16;

/// Indices of trials that diverged, in increasing order.
pub type Diverged = Vec<u64>;

/// Run `trials` trials and fold the successful ones in order. Diverged
/// trials are skipped and listed; any other error aborts.
pub fn fold_trials<T, A>(
    trials: usize,
    run: impl Fn(u64) -> cbo_core::Result<T> + Sync,
    mut acc: A,
    mut fold: impl FnMut(&mut A, u64, T),
) -> Result<(A, Diverged)>
where
    T: Send,
{
    let mut diverged = Vec::new();
    let mut start = 0;
    while start < trials {
        let end = (start + CHUNK).min(trials);
        let batch: Vec<cbo_core::Result<T>> = (start as u64..end as u64).into_par_iter().map(&run).collect();
        for (offset, out) in batch.into_iter().enumerate() {
            let trial = (start + offset) as u64;
            match out {
                Ok(v) => fold(&mut acc, trial, v),
                Err(CboError::Diverged { .. }) => diverged.push(trial),
                Err(e) => return Err(e.into()),
            }
        }
        start = end;
    }
    Ok((acc, diverged))
}

/// Collect every successful trial result in trial order.
pub fn collect_trials<T: Send>(
    trials: usize,
    run: impl Fn(u64) -> cbo_core::Result<T> + Sync,
) -> Result<(Vec<T>, Diverged)> {
    fold_trials(trials, run, Vec::with_capacity(trials), |v, _, x| v.push(x))
}

/// Run `work` on a dedicated pool of `workers` threads.
pub fn with_pool<R: Send>(workers: usize, work: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    Ok(pool.install(work))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_is_in_trial_order_and_counts_divergences() {
        let run = |t: u64| {
            if t % 7 == 3 {
                Err(CboError::Diverged { t: 0.0, particle: 0 })
            } else {
                Ok(t)
            }
        };
        for workers in [1, 3] {
            let (seen, diverged) = with_pool(workers, || collect_trials(40, run)).unwrap().unwrap();
            assert_eq!(diverged, vec![3, 10, 17, 24, 31, 38]);
            assert!(seen.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(seen.len(), 34);
        }
    }

    #[test]
    fn other_errors_abort() {
        let out = collect_trials(5, |t| {
            if t == 2 {
                Err(CboError::InvalidInput("boom".into()))
            } else {
                Ok(())
            }
        });
        assert!(out.is_err());
    }
}
