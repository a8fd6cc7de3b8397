//! Data-parallel execution with a sequential fallback.
//!
//! Work is always split into the same deterministic chunks, so results do not
//! depend on the executor or the worker count.

/// How independent work items are run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    /// Rayon pool with the given number of workers (0 = rayon default).
    Parallel { jobs: usize },
}

impl Default for Executor {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Executor::Parallel { jobs: 0 }
        } else {
            Executor::Sequential
        }
    }
}

impl Executor {
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Executor::Sequential,
            Some(j) => Executor::Parallel { jobs: j },
            None => Executor::default(),
        }
    }

    /// `f(0..n)` collected in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            Executor::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel { jobs } => {
                use rayon::prelude::*;
                let run = || (0..n).into_par_iter().map(&f).collect();
                if jobs == 0 {
                    run()
                } else {
                    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                        Ok(pool) => pool.install(run),
                        Err(_) => (0..n).map(&f).collect(),
                    }
                }
            }
            #[cfg(not(feature = "parallel"))]
            Executor::Parallel { .. } => (0..n).map(f).collect(),
        }
    }
}

/// Default-executor map used by internal data-parallel loops.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    Executor::default().map(n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn executors_agree() {
        let f = |i: usize| (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let a = Executor::Sequential.map(1000, f);
        let b = Executor::Parallel { jobs: 3 }.map(1000, f);
        let c = Executor::default().map(1000, f);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(Executor::from_jobs(Some(1)), Executor::Sequential);
    }
}
