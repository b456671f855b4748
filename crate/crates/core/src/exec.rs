//! Index-ordered map helpers with a rayon backend behind the `parallel`
//! feature. Without the feature, or with `parallel == false`, everything
//! runs on the calling thread. Outputs are always collected in index order,
//! so the two paths produce identical results for pure closures.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was built with the rayon backend.
pub const PARALLEL_AVAILABLE: bool = cfg!(feature = "parallel");

/// `(0..n).map(f).collect()`, possibly fanned out over the rayon pool.
pub fn map_range<T, F>(parallel: bool, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Applies `f` to every element with its index.
pub fn for_each_mut<T, F>(parallel: bool, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
        return;
    }
    let _ = parallel;
    items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

/// Maps every element mutably (with its index) into a new vector.
pub fn map_mut<T, U, F>(parallel: bool, items: &mut [T], f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(usize, &mut T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items
            .par_iter_mut()
            .enumerate()
            .map(|(i, x)| f(i, x))
            .collect();
    }
    let _ = parallel;
    items.iter_mut().enumerate().map(|(i, x)| f(i, x)).collect()
}

/// Maps every element (with its index) into a new vector.
pub fn map_slice<T, U, F>(parallel: bool, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect();
    }
    let _ = parallel;
    items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
}
