//! Job scheduling for the embarrassingly parallel parts of the pipeline
//! (folds, sweep points, aging windows, per-URL generation).
//!
//! With the `parallel` feature (default) jobs run on rayon; without it, or
//! when [`Executor::Sequential`] is selected, they run in order on the
//! calling thread. Results always come back in input order, so reports do
//! not depend on completion order.

/// How independent jobs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Executor {
    Sequential,
    /// Rayon's global pool, or a dedicated pool with `n` threads.
    #[default]
    Parallel,
    Threads(usize),
}

impl Executor {
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            None | Some(0) => Executor::Parallel,
            Some(1) => Executor::Sequential,
            Some(n) => Executor::Threads(n),
        }
    }

    /// Map `f` over `items`, preserving order.
    pub fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            Executor::Sequential => items.into_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel => {
                use rayon::prelude::*;
                items.into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Executor::Threads(n) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(*n).build() {
                    Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
                    Err(e) => {
                        log::warn!("could not build a {n}-thread pool ({e}); running sequentially");
                        items.into_iter().map(f).collect()
                    }
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => items.into_iter().map(f).collect(),
        }
    }

    /// Fallible [`Executor::map`]; the first error in input order wins.
    pub fn try_map<T, R, E, F>(&self, items: Vec<T>, f: F) -> Result<Vec<R>, E>
    where
        T: Send,
        R: Send,
        E: Send,
        F: Fn(T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        for exec in [Executor::Sequential, Executor::Parallel, Executor::Threads(3)] {
            let out = exec.map(items.clone(), |x| x * x);
            assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_in_order_wins() {
        let r: Result<Vec<u32>, u32> =
            Executor::Parallel.try_map((0..50u32).collect(), |x| if x % 7 == 6 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(6));
    }
}
