//! Exhaustive search for minimum-row codes, deduplicated up to row and
//! column permutation.
//!
//! Candidates at each `m` are the size-`m` subsets of the distinct `n`-bit
//! rows with at least `r` ones. Duplicate rows never help any of the code
//! properties (removing one preserves every k̄-sum condition), so this loses
//! no minimal codes.

use std::collections::BTreeSet;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::matrix::BitMatrix;
use crate::verify::{self, CodeKind};

/// Widest matrix [`canonical_form`] accepts (`10!` column permutations).
pub const MAX_CANONICAL_COLUMNS: usize = 10;
/// Largest `n` accepted by [`exhaustive_min`].
pub const MAX_SEARCH_COLUMNS: usize = 8;
/// Largest `m` budget accepted by [`exhaustive_min`].
pub const MAX_SEARCH_ROWS: usize = 12;

/// Row `i` packed MSB-first: column 0 is the highest bit, so integer order
/// equals lexicographic order of the row string.
fn packed_rows(h: &BitMatrix) -> Vec<u32> {
    let n = h.cols();
    (0..h.rows())
        .map(|i| {
            (0..n).fold(0u32, |acc, j| acc | (u32::from(h.get(i, j)) << (n - 1 - j)))
        })
        .collect()
}

fn unpack_rows(rows: &[u32], n: usize) -> BitMatrix {
    BitMatrix::from_fn(rows.len(), n, |i, j| (rows[i] >> (n - 1 - j)) & 1 == 1)
        .expect("nonempty candidate")
}

/// The lexicographically smallest matrix obtainable by permuting columns
/// and then sorting rows. Two matrices are equivalent under row and column
/// permutation iff their canonical forms are equal.
pub fn canonical_form(h: &BitMatrix) -> Result<BitMatrix> {
    let n = h.cols();
    if n > MAX_CANONICAL_COLUMNS {
        return Err(Error::ResourceLimit(format!(
            "canonical form enumerates n! column orders; n={n} exceeds {MAX_CANONICAL_COLUMNS}"
        )));
    }
    Ok(unpack_rows(&canonical_rows(h), n))
}

fn canonical_rows(h: &BitMatrix) -> Vec<u32> {
    let n = h.cols();
    // Column j of the input sits at bit (n-1-j).
    let original = packed_rows(h);
    let mut best: Option<Vec<u32>> = None;
    let mut scratch = vec![0u32; original.len()];
    for perm in (0..n).permutations(n) {
        // New column p takes old column perm[p].
        for (dst, &row) in scratch.iter_mut().zip(&original) {
            *dst = perm.iter().enumerate().fold(0u32, |acc, (p, &old)| {
                acc | (((row >> (n - 1 - old)) & 1) << (n - 1 - p))
            });
        }
        scratch.sort_unstable();
        if best.as_ref().is_none_or(|b| scratch < *b) {
            best = Some(scratch.clone());
        }
    }
    best.expect("at least one permutation")
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub kind: CodeKind,
    pub k: usize,
    pub r: usize,
    pub n: usize,
    pub max_rows: usize,
    /// Smallest `m` with a passing candidate, `None` if none up to the budget.
    pub min_rows: Option<usize>,
    /// One canonical representative per equivalence class at `min_rows`,
    /// sorted.
    #[serde(skip)]
    pub codes: Vec<BitMatrix>,
    /// Candidate matrices tested across all `m`.
    pub explored: u64,
}

impl SearchResult {
    pub fn classes(&self) -> usize {
        self.codes.len()
    }
}

/// Finds the smallest `m <= max_m` for which an `m x n` matrix of the given
/// kind exists, and every such matrix up to equivalence.
pub fn exhaustive_min(
    kind: CodeKind,
    k: usize,
    r: usize,
    n: usize,
    max_m: usize,
) -> Result<SearchResult> {
    if k == 0 || r == 0 || n == 0 || max_m == 0 {
        return Err(invalid("k, r, n and max_m must all be positive"));
    }
    if n > MAX_SEARCH_COLUMNS || max_m > MAX_SEARCH_ROWS {
        return Err(Error::ResourceLimit(format!(
            "exhaustive search is limited to n <= {MAX_SEARCH_COLUMNS} and m <= {MAX_SEARCH_ROWS} \
             (got n={n}, m={max_m})"
        )));
    }

    let candidates: Vec<u32> = (1u32..(1 << n))
        .filter(|row| row.count_ones() as usize >= r)
        .collect();

    let mut explored = 0u64;
    for m in 1..=max_m.min(candidates.len()) {
        let (tested, passing) = search_size(&candidates, m, n, kind, k, r)?;
        explored += tested;
        if !passing.is_empty() {
            let codes = passing.into_iter().map(|rows| unpack_rows(&rows, n)).collect();
            return Ok(SearchResult {
                kind,
                k,
                r,
                n,
                max_rows: max_m,
                min_rows: Some(m),
                codes,
                explored,
            });
        }
    }
    Ok(SearchResult {
        kind,
        k,
        r,
        n,
        max_rows: max_m,
        min_rows: None,
        codes: Vec::new(),
        explored,
    })
}

/// Tests every size-`m` candidate subset; returns the number tested and the
/// distinct canonical forms of those that pass.
fn search_size(
    candidates: &[u32],
    m: usize,
    n: usize,
    kind: CodeKind,
    k: usize,
    r: usize,
) -> Result<(u64, BTreeSet<Vec<u32>>)> {
    candidates
        .iter()
        .copied()
        .combinations(m)
        .par_bridge()
        .map(|rows| -> Result<(u64, BTreeSet<Vec<u32>>)> {
            let h = unpack_rows(&rows, n);
            let mut found = BTreeSet::new();
            if verify::check_kind(&h, kind, k, r)?.is_none() {
                found.insert(canonical_rows(&h));
            }
            Ok((1, found))
        })
        .try_reduce(
            || (0, BTreeSet::new()),
            |(ca, mut a), (cb, b)| {
                a.extend(b);
                Ok((ca + cb, a))
            },
        )
}
