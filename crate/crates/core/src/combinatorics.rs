//! Binomial coefficients and subset enumeration shared by the verifiers,
//! the search and the decoder.

use itertools::Itertools;

use crate::matrix::ColumnSet;

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// All size-`size` subsets of `0..n` in lexicographic order.
pub fn subsets_of_size(n: usize, size: usize) -> impl Iterator<Item = ColumnSet> {
    (0..n)
        .combinations(size)
        .map(ColumnSet::from_sorted_unchecked)
}

/// All nonempty subsets of `0..n` with at most `max_size` elements, ordered
/// by size and then lexicographically.
pub fn subsets_up_to(n: usize, max_size: usize) -> impl Iterator<Item = ColumnSet> {
    (1..=max_size.min(n)).flat_map(move |size| subsets_of_size(n, size))
}

/// Number of nonempty subsets of at most `max_size` out of `n`.
pub fn count_subsets_up_to(n: usize, max_size: usize) -> u128 {
    (1..=max_size.min(n))
        .map(|j| binomial(n as u64, j as u64).unwrap_or(u128::MAX))
        .fold(0u128, u128::saturating_add)
}
