//! Scoped-thread executor.
//!
//! Jobs are split into contiguous index ranges, one per worker, and the
//! per-range results are concatenated in range order — so the output vector
//! is identical to the serial one no matter how the OS schedules the
//! workers. Determinism across `--threads` values falls out of that plus the
//! purity contract of [`Executor::map`].

use fockwalk::exec::Executor;

#[derive(Debug, Clone, Copy)]
pub struct ThreadedExecutor {
    threads: usize,
}

impl ThreadedExecutor {
    pub fn new(threads: usize) -> Self {
        ThreadedExecutor { threads: threads.max(1) }
    }
}

impl Executor for ThreadedExecutor {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        let workers = self.threads.min(n);
        if workers <= 1 {
            return (0..n).map(f).collect();
        }
        // Ceil split keeps ranges contiguous and covers the tail.
        let chunk = n.div_ceil(workers);
        let mut out = Vec::with_capacity(n);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(n);
                    scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
                })
                .collect();
            for handle in handles {
                out.extend(handle.join().expect("worker panicked"));
            }
        });
        out
    }
}
