//! Thread-local tallies of the operations the layered search is meant to
//! economize: slicing calls, length-`2 * lr` inner products, and lattice
//! candidates scored. The test suite uses them to pin search sizes; they are
//! also handy when profiling detector settings.
//!
//! Counters are per thread. Read them on the thread that did the work.

use std::cell::Cell;

thread_local! {
    static SLICES: Cell<u64> = const { Cell::new(0) };
    static INNER_PRODUCTS: Cell<u64> = const { Cell::new(0) };
    static CANDIDATES: Cell<u64> = const { Cell::new(0) };
}

/// Resets all counters on the calling thread.
pub fn reset() {
    SLICES.with(|c| c.set(0));
    INNER_PRODUCTS.with(|c| c.set(0));
    CANDIDATES.with(|c| c.set(0));
}

/// Number of slicing calls since the last [`reset`].
pub fn slices() -> u64 {
    SLICES.with(Cell::get)
}

/// Number of full-length inner products since the last [`reset`].
pub fn inner_products() -> u64 {
    INNER_PRODUCTS.with(Cell::get)
}

/// Number of lattice candidates scored since the last [`reset`].
pub fn candidates() -> u64 {
    CANDIDATES.with(Cell::get)
}

pub(crate) fn record_slice() {
    SLICES.with(|c| c.set(c.get() + 1));
}

pub(crate) fn record_inner_product() {
    INNER_PRODUCTS.with(|c| c.set(c.get() + 1));
}

pub(crate) fn record_candidate() {
    CANDIDATES.with(|c| c.set(c.get() + 1));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_start_at_zero_after_reset() {
        record_slice();
        record_inner_product();
        record_candidate();
        reset();
        assert_eq!(slices(), 0);
        assert_eq!(inner_products(), 0);
        assert_eq!(candidates(), 0);
    }

    #[test]
    fn counters_accumulate_per_event() {
        reset();
        record_slice();
        record_slice();
        record_inner_product();
        record_candidate();
        record_candidate();
        record_candidate();
        assert_eq!(slices(), 2);
        assert_eq!(inner_products(), 1);
        assert_eq!(candidates(), 3);
    }
}
