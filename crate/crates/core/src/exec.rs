//! Thin switch between serial and rayon-backed execution.

use alloc::vec::Vec;

/// `(0..n).map(f).collect()`, spread over the rayon pool when `parallel`
/// is requested and the crate is built with the `parallel` feature.
pub(crate) fn map_range<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Runs `f` over every item with one scratch value per worker.
pub(crate) fn for_each_with<T, S, E, Init, F>(items: Vec<T>, parallel: bool, init: Init, f: F) -> Result<(), E>
where
    T: Send,
    E: Send,
    Init: Fn() -> S + Sync + Send,
    F: Fn(&mut S, T) -> Result<(), E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return items.into_par_iter().try_for_each_init(init, f);
    }
    let _ = parallel;
    let mut scratch = init();
    items.into_iter().try_for_each(|item| f(&mut scratch, item))
}

/// Whether work will actually be spread across threads.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Splits `data` into consecutive per-row slices following `row_ptr`.
pub(crate) fn split_rows<'a, T>(row_ptr: &[usize], mut data: &'a mut [T]) -> Vec<&'a mut [T]> {
    let mut out = Vec::with_capacity(row_ptr.len().saturating_sub(1));
    for w in row_ptr.windows(2) {
        let (head, tail) = core::mem::take(&mut data).split_at_mut(w[1] - w[0]);
        out.push(head);
        data = tail;
    }
    out
}
