//! Code constructions.
//!
//! Deterministic: the minimal detection code `H^(k,r)` built recursively,
//! the all-ones row that upgrades detection to correction, general
//! correction codes by column duplication, and the non-overlapping
//! partition baseline. Randomized (seeded, reproducible): constant row
//! weight random codes, separable matrices by sample-and-verify, and
//! tracking codes by stacking a correction code on a separable matrix.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, count_subsets_up_to};
use crate::error::{invalid, Error, Result};
use crate::format::{CodeFile, FileKind};
use crate::matrix::BitMatrix;
use crate::verify::{self, CodeKind, CodeParams};

/// Largest row count [`minimal_bdc`] will build by default.
pub const DEFAULT_MAX_ROWS: u128 = 1_000_000;
/// Default row budget for [`separable_search`] and [`btc`].
pub const DEFAULT_SEARCH_MAX_ROWS: usize = 64;
/// Candidates sampled per row count in [`separable_search`].
pub const DEFAULT_ATTEMPTS_PER_SIZE: usize = 200;
const RANDOM_CODE_RETRIES: usize = 1000;

fn require_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(invalid(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// `H^(k,r)`: the unique (up to permutation) BDC(k, r, k+r) with
/// `C(k+r, k)` rows.
pub fn minimal_bdc(k: usize, r: usize) -> Result<BitMatrix> {
    minimal_bdc_with_limit(k, r, DEFAULT_MAX_ROWS)
}

pub fn minimal_bdc_with_limit(k: usize, r: usize, max_rows: u128) -> Result<BitMatrix> {
    require_positive("k", k)?;
    require_positive("r", r)?;
    let rows = binomial((k + r) as u64, k as u64).unwrap_or(u128::MAX);
    if rows > max_rows {
        return Err(Error::ResourceLimit(format!(
            "H^({k},{r}) has C({},{k}) = {rows} rows, above the limit of {max_rows}",
            k + r
        )));
    }
    BitMatrix::from_rows(&minimal_bdc_rows(k, r))
}

fn minimal_bdc_rows(k: usize, r: usize) -> Vec<Vec<u8>> {
    if r == 1 {
        return (0..=k)
            .map(|i| (0..=k).map(|j| u8::from(i == j)).collect())
            .collect();
    }
    // [ 1 | H^(k, r-1) ]
    // [ 0 | H^(k-1, r) ]   with H^(0, r) = 1^T
    let mut rows: Vec<Vec<u8>> = minimal_bdc_rows(k, r - 1)
        .into_iter()
        .map(|tail| std::iter::once(1).chain(tail).collect())
        .collect();
    if k == 1 {
        rows.push(std::iter::once(0).chain(std::iter::repeat_n(1, r)).collect());
    } else {
        rows.extend(
            minimal_bdc_rows(k - 1, r)
                .into_iter()
                .map(|tail| std::iter::once(0).chain(tail).collect()),
        );
    }
    rows
}

/// Prepends an all-ones row.
pub fn add_ones_row(h: &BitMatrix) -> BitMatrix {
    let ones = BitMatrix::ones(1, h.cols()).expect("matrix has at least one column");
    ones.vstack(h).expect("same width")
}

/// Minimal BCC(k, r, k+r): `H^(k,r)` itself when `r > 1`, otherwise
/// `I_{k+1}` with an all-ones row on top (`k + 2` rows).
pub fn minimal_bcc(k: usize, r: usize) -> Result<BitMatrix> {
    require_positive("k", k)?;
    require_positive("r", r)?;
    if r > 1 {
        minimal_bdc(k, r)
    } else {
        Ok(add_ones_row(&BitMatrix::identity(k + 1)?))
    }
}

/// Parameters of the column-duplication construction for BCC(k, r, n).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralBccPlan {
    /// Number of full copies of the base code.
    pub copies: usize,
    /// Row weight of the base code BCC(k, r0, k+r0).
    pub base_r: usize,
    /// Leading columns taken from the base code before the copies.
    pub lead: usize,
}

/// Chooses `p = floor((n-r)/k)` and `r0 = ceil(r/p)`, lowering `p` while
/// `p (k + r0)` would exceed `n`.
pub fn general_bcc_plan(k: usize, r: usize, n: usize) -> Result<GeneralBccPlan> {
    require_positive("k", k)?;
    require_positive("r", r)?;
    if n < k + r {
        return Err(invalid(format!(
            "BCC({k},{r},{n}) does not exist: with n < k + r every {k}-sum is all ones"
        )));
    }
    let mut copies = (n - r) / k;
    loop {
        let base_r = r.div_ceil(copies);
        let width = copies * (k + base_r);
        if width <= n {
            return Ok(GeneralBccPlan { copies, base_r, lead: n - width });
        }
        // copies == 1 gives width k + r <= n, so this terminates.
        copies -= 1;
    }
}

/// BCC(k, r, n) for any `n >= k + r`, by repeating the columns of a minimal
/// correction code.
pub fn general_bcc(k: usize, r: usize, n: usize) -> Result<BitMatrix> {
    let plan = general_bcc_plan(k, r, n)?;
    let base = minimal_bcc(k, plan.base_r)?;
    let width = base.cols();
    let order: Vec<usize> = (0..plan.lead)
        .map(|j| j % width)
        .chain((0..plan.copies).flat_map(|_| 0..width))
        .collect();
    base.select_columns(&order)
}

/// Non-overlapping partition of `n` users into `m` contiguous groups whose
/// sizes differ by at most one; earlier groups take the remainder.
pub fn partition_code(m: usize, n: usize) -> Result<BitMatrix> {
    require_positive("m", m)?;
    if m > n {
        return Err(invalid(format!("cannot split {n} users into {m} nonempty groups")));
    }
    let base = n / m;
    let extra = n % m;
    let mut group_of = Vec::with_capacity(n);
    for g in 0..m {
        let size = base + usize::from(g < extra);
        group_of.extend(std::iter::repeat_n(g, size));
    }
    BitMatrix::from_fn(m, n, |i, j| group_of[j] == i)
}

fn random_row_matrix(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    mut weight: impl FnMut(&mut ChaCha8Rng) -> usize,
) -> BitMatrix {
    let mut rows = vec![vec![0u8; n]; m];
    for row in &mut rows {
        let w = weight(rng);
        for j in sample(rng, n, w) {
            row[j] = 1;
        }
    }
    BitMatrix::from_rows(&rows).expect("dimensions are positive")
}

/// `m` independent rows, each with exactly `row_weight` ones at uniform
/// positions. Draws containing a zero column are rejected and redrawn.
pub fn random_code(m: usize, n: usize, row_weight: usize, seed: u64) -> Result<BitMatrix> {
    require_positive("m", m)?;
    require_positive("row weight", row_weight)?;
    if row_weight > n {
        return Err(invalid(format!("row weight {row_weight} exceeds n={n}")));
    }
    if m * row_weight < n {
        return Err(Error::ConstructionFailure {
            reason: format!("{m} rows of weight {row_weight} cannot cover {n} columns"),
            last_rows: Some(m),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_CODE_RETRIES {
        let h = random_row_matrix(&mut rng, m, n, |_| row_weight);
        if h.zero_column().is_none() {
            return Ok(h);
        }
    }
    Err(Error::ConstructionFailure {
        reason: format!("no zero-column-free {m}x{n} draw in {RANDOM_CODE_RETRIES} attempts"),
        last_rows: Some(m),
    })
}

/// Smallest `m` with `2^m - 1 >=` the number of k̄-sums: below it the sums
/// cannot all be distinct nonzero vectors.
pub fn separable_lower_bound(k: usize, n: usize) -> usize {
    let sums = count_subsets_up_to(n, k);
    let mut m = 1usize;
    while m < 127 && (1u128 << m) - 1 < sums {
        m += 1;
    }
    m
}

/// Random search for a k̄-separable `m x n` matrix with every row weight at
/// least `min_row_weight`, trying `m` upward from [`separable_lower_bound`]
/// to `max_rows` with [`DEFAULT_ATTEMPTS_PER_SIZE`] draws per `m`.
pub fn separable_search(
    k: usize,
    n: usize,
    min_row_weight: usize,
    seed: u64,
    max_rows: usize,
) -> Result<BitMatrix> {
    separable_search_with_budget(k, n, min_row_weight, seed, max_rows, DEFAULT_ATTEMPTS_PER_SIZE)
}

pub fn separable_search_with_budget(
    k: usize,
    n: usize,
    min_row_weight: usize,
    seed: u64,
    max_rows: usize,
    attempts_per_size: usize,
) -> Result<BitMatrix> {
    require_positive("k", k)?;
    if n < 2 {
        return Err(invalid("separable search needs n >= 2"));
    }
    if min_row_weight > n {
        return Err(invalid(format!("row weight {min_row_weight} exceeds n={n}")));
    }
    // Row weights near n/2 make unions of distinct column sets differ most
    // often.
    let centre = (n as f64 / 2.0 - (n as f64).sqrt()).floor().max(1.0) as usize;
    let lo = min_row_weight.max(centre).max(1);
    let hi = (n - 1).max(lo);

    let start = separable_lower_bound(k, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = None;
    for m in start..=max_rows {
        last = Some(m);
        for _ in 0..attempts_per_size {
            let h = random_row_matrix(&mut rng, m, n, |g| g.random_range(lo..=hi));
            if h.zero_column().is_none() && verify::is_separable(&h, k)? {
                return Ok(h);
            }
        }
    }
    Err(Error::ConstructionFailure {
        reason: format!(
            "no {k}-separable matrix with {n} columns found for m in {start}..={max_rows}"
        ),
        last_rows: last,
    })
}

/// BTC(k, r, n): `general_bcc(k, r, n)` stacked on a k̄-separable matrix of
/// row weight at least `r`. The result is verified before it is returned.
pub fn btc(k: usize, r: usize, n: usize, seed: u64, max_rows: usize) -> Result<BitMatrix> {
    let correction = general_bcc(k, r, n)?;
    let separable = separable_search(k, n, r, seed, max_rows)?;
    let h = correction.vstack(&separable)?;
    if let Some(v) = verify::check_btc(&h, k, r)? {
        return Err(Error::ConstructionFailure {
            reason: format!("stacked matrix is not BTC({k},{r},{n}): {v}"),
            last_rows: Some(h.rows()),
        });
    }
    Ok(h)
}

/// A named construction with all of its parameters, including the seed for
/// randomized kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    MinimalBdc { k: usize, r: usize },
    MinimalBcc { k: usize, r: usize },
    GeneralBcc { k: usize, r: usize, n: usize },
    Btc { k: usize, r: usize, n: usize, seed: u64, max_rows: usize },
    Partition { m: usize, n: usize },
    Random { m: usize, n: usize, row_weight: usize, seed: u64 },
}

impl Recipe {
    pub fn build(&self) -> Result<BitMatrix> {
        match *self {
            Recipe::MinimalBdc { k, r } => minimal_bdc(k, r),
            Recipe::MinimalBcc { k, r } => minimal_bcc(k, r),
            Recipe::GeneralBcc { k, r, n } => general_bcc(k, r, n),
            Recipe::Btc { k, r, n, seed, max_rows } => btc(k, r, n, seed, max_rows),
            Recipe::Partition { m, n } => partition_code(m, n),
            Recipe::Random { m, n, row_weight, seed } => random_code(m, n, row_weight, seed),
        }
    }

    /// The property the construction guarantees, if any.
    pub fn guarantee(&self) -> Option<CodeParams> {
        let (kind, k, r, n) = match *self {
            Recipe::MinimalBdc { k, r } => (CodeKind::Bdc, k, r, k + r),
            Recipe::MinimalBcc { k, r } => (CodeKind::Bcc, k, r, k + r),
            Recipe::GeneralBcc { k, r, n } => (CodeKind::Bcc, k, r, n),
            Recipe::Btc { k, r, n, .. } => (CodeKind::Btc, k, r, n),
            Recipe::Partition { .. } | Recipe::Random { .. } => return None,
        };
        Some(CodeParams { kind, k, r, n })
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Recipe::Btc { seed, .. } | Recipe::Random { seed, .. } => Some(seed),
            _ => None,
        }
    }

    /// Wraps a built matrix with the header matching [`Recipe::guarantee`].
    pub fn to_file(&self, matrix: BitMatrix) -> CodeFile {
        match self.guarantee() {
            Some(p) => CodeFile::new(FileKind::Code(p.kind), p.k, p.r, matrix),
            None => CodeFile::raw(matrix),
        }
    }
}
