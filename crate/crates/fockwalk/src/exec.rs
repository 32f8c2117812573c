//! Deterministic parallel execution hook.
//!
//! Walkers batch independent pivots (same weight shell, same scheduler
//! group), map a pure function over the batch, and commit the results
//! serially in plan order. The map is the only part that may run in
//! parallel, so any [`Executor`] that returns results in index order yields
//! bit-identical output to [`SerialExecutor`]. The core crate only ships the
//! serial executor; threaded implementations live with the binary, where an
//! operating system is available.

use alloc::vec::Vec;

/// Order-preserving parallel map over `0..n`.
pub trait Executor: Sync {
    /// Apply `f` to every index in `0..n` and return the results in index
    /// order. `f` must be pure: implementations are free to partition the
    /// domain arbitrarily.
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;
}

/// Runs every job on the calling thread, in order.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialExecutor;

impl Executor for SerialExecutor {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..n).map(f).collect()
    }
}
