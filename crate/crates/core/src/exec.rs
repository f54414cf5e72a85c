//! Indexed parallel map with an order-preserving result.
//!
//! Every estimator expresses its work as `i ↦ f(i)` over independent units
//! (paths, environments, probe points) and reduces the returned vector in
//! index order. With the `parallel` feature the map runs on a rayon pool of
//! the requested size; without it, or with one worker, it is a plain loop.
//! Both produce the same vector.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exec {
    workers: usize,
}

impl Default for Exec {
    fn default() -> Self {
        Exec::all_cores()
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec { workers: 1 }
    }

    /// `0` means all available cores.
    pub fn with_workers(workers: usize) -> Self {
        Exec { workers }
    }

    pub fn all_cores() -> Self {
        Exec { workers: 0 }
    }

    pub fn workers(&self) -> usize {
        if self.workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            self.workers
        }
    }

    pub fn is_sequential(&self) -> bool {
        !cfg!(feature = "parallel") || self.workers() == 1
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.is_sequential() || n <= 1 {
            return (0..n).map(f).collect();
        }
        par::map(self.workers(), n, f)
    }
}

#[cfg(feature = "parallel")]
mod par {
    use rayon::prelude::*;

    pub fn map<T, F>(workers: usize, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        // Nested calls reuse the enclosing pool.
        if rayon::current_thread_index().is_some() {
            return (0..n).into_par_iter().map(f).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
            Err(_) => (0..n).map(f).collect(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod par {
    pub fn map<T, F>(_workers: usize, n: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T,
    {
        (0..n).map(f).collect()
    }
}
