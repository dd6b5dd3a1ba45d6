// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ordered data-parallel map over independent work items.
//!
//! Results always come back in input order and each item is computed by a
//! single thread, so output is bit-identical for every worker count. Without
//! the `parallel` feature every mode runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// `None` uses every available core.
    Parallel(Option<usize>),
    #[default]
    Auto,
}

impl Execution {
    pub fn with_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            w => Execution::Parallel(w),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential)
    }
}

/// `items.map(f)` in order.
pub fn map_ordered<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match exec {
            Execution::Sequential => items.iter().map(f).collect(),
            Execution::Auto | Execution::Parallel(None) => items.par_iter().map(f).collect(),
            Execution::Parallel(Some(n)) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                Err(_) => items.iter().map(f).collect(),
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec;
        items.iter().map(f).collect()
    }
}

/// Fallible variant; the first error in input order wins.
pub fn try_map_ordered<T, R, E, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map_ordered(exec, items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_for_all_modes() {
        let items: Vec<u64> = (0..200).collect();
        let f = |x: &u64| (*x as f64).sqrt().sin();
        let reference: Vec<f64> = items.iter().map(f).collect();
        for exec in [Execution::Sequential, Execution::Auto, Execution::Parallel(Some(3)), Execution::Parallel(None)] {
            let out = map_ordered(exec, &items, f);
            assert_eq!(out.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), reference.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_in_order() {
        let items = [1, 2, 3, 4];
        let r: Result<Vec<i32>, i32> =
            try_map_ordered(Execution::Auto, &items, |&x| if x % 2 == 0 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(2));
        assert_eq!(Execution::with_workers(Some(1)), Execution::Sequential);
    }
}
