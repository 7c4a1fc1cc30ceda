//! Exact verifiers for the detection, correction, tracking and separability
//! properties of a code matrix.
//!
//! A *k̄-sum* is the Boolean OR of between 1 and `k` columns. With `T` sums
//! the verifiers cost `O(T)` column ORs plus `O(T)` hash lookups; `T` is
//! `sum_j C(n, j)` for `j = 1..=k` ([`enumeration_cost`]). The intended
//! operating range is `n <= 24`, `k <= 4`.
//!
//! Every check returns the first violation found in enumeration order (sets
//! ordered by size, then lexicographically), so witnesses are reproducible.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::combinatorics::{count_subsets_up_to, subsets_of_size, subsets_up_to};
use crate::error::{invalid, Error, Result};
use crate::matrix::{BitMatrix, ColumnSet};

/// The code property being asked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeKind {
    /// Detects that an attack happened.
    Bdc,
    /// Detects and recovers the true label.
    Bcc,
    /// Detects, corrects, and identifies the attackers.
    Btc,
    /// All k̄-sums pairwise distinct.
    Separable,
}

impl CodeKind {
    pub fn name(self) -> &'static str {
        match self {
            CodeKind::Bdc => "BDC",
            CodeKind::Bcc => "BCC",
            CodeKind::Btc => "BTC",
            CodeKind::Separable => "SEP",
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bdc" => Ok(CodeKind::Bdc),
            "bcc" => Ok(CodeKind::Bcc),
            "btc" => Ok(CodeKind::Btc),
            "sep" | "separable" => Ok(CodeKind::Separable),
            other => Err(invalid(format!("unknown code kind {other:?}"))),
        }
    }
}

/// A code class together with its `(k, r, n)` signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub kind: CodeKind,
    pub k: usize,
    pub r: usize,
    pub n: usize,
}

impl CodeParams {
    pub fn new(kind: CodeKind, k: usize, r: usize, n: usize) -> Result<Self> {
        let p = Self { kind, k, r, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.r == 0 || self.n == 0 {
            return Err(invalid(format!(
                "k, r and n must be positive (k={}, r={}, n={})",
                self.k, self.r, self.n
            )));
        }
        if self.kind != CodeKind::Separable && self.n < self.k + self.r {
            return Err(invalid(format!(
                "{}({},{},{}) cannot exist: n < k + r",
                self.kind, self.k, self.r, self.n
            )));
        }
        Ok(())
    }
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{},{})", self.kind, self.k, self.r, self.n)
    }
}

/// Why a matrix fails a property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ZeroColumn(usize),
    RowWeight { row: usize, weight: usize, required: usize },
    /// This k̄-sum is the all-ones vector: every model is compromised.
    SumIsOnes(ColumnSet),
    /// The XOR of these two k̄-sums is all-ones.
    ComplementarySums(ColumnSet, ColumnSet),
    /// These two k̄-sums are equal.
    EqualSums(ColumnSet, ColumnSet),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroColumn(j) => write!(f, "column {j} is all zeros"),
            Violation::RowWeight { row, weight, required } => {
                write!(f, "row {row} has weight {weight} < {required}")
            }
            Violation::SumIsOnes(s) => write!(f, "sum of columns {s} is all ones"),
            Violation::ComplementarySums(a, b) => {
                write!(f, "sums of columns {a} and {b} are complementary")
            }
            Violation::EqualSums(a, b) => write!(f, "sums of columns {a} and {b} are equal"),
        }
    }
}

/// Boolean OR of the columns in `s`.
pub fn column_or(h: &BitMatrix, s: &ColumnSet) -> Result<BitVec> {
    if let Some(&bad) = s.indices().iter().find(|&&j| j >= h.cols()) {
        return Err(invalid(format!("column {bad} out of range for n={}", h.cols())));
    }
    Ok(or_unchecked(h, s))
}

fn or_unchecked(h: &BitMatrix, s: &ColumnSet) -> BitVec {
    let mut acc = BitVec::zeros(h.rows());
    for &j in s.indices() {
        acc.or_assign(h.column(j));
    }
    acc
}

pub fn min_row_weight(h: &BitMatrix) -> usize {
    h.min_row_weight()
}

fn require_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(invalid(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn check_structure(h: &BitMatrix, r: usize) -> Option<Violation> {
    if let Some(j) = h.zero_column() {
        return Some(Violation::ZeroColumn(j));
    }
    (0..h.rows()).find_map(|i| {
        let weight = h.row_weight(i);
        (weight < r).then_some(Violation::RowWeight { row: i, weight, required: r })
    })
}

/// All k̄-sums in enumeration order.
fn all_sums(h: &BitMatrix, k: usize) -> Vec<(ColumnSet, BitVec)> {
    subsets_up_to(h.cols(), k)
        .map(|s| {
            let v = or_unchecked(h, &s);
            (s, v)
        })
        .collect()
}

pub fn check_bdc(h: &BitMatrix, k: usize, r: usize) -> Result<Option<Violation>> {
    require_positive("k", k)?;
    require_positive("r", r)?;
    if let Some(v) = check_structure(h, r) {
        return Ok(Some(v));
    }
    // Boolean sums are monotone in the addend set, so if any k̄-sum is
    // all-ones then some sum of exactly min(k, n) columns is too.
    let size = k.min(h.cols());
    Ok(subsets_of_size(h.cols(), size)
        .find(|s| or_unchecked(h, s).is_all_ones())
        .map(|s| {
            // Report the smallest offending subset, not just the padded one.
            minimal_all_ones(h, s)
        }))
}

fn minimal_all_ones(h: &BitMatrix, s: ColumnSet) -> Violation {
    let smaller = subsets_up_to(h.cols(), s.len())
        .find(|t| or_unchecked(h, t).is_all_ones())
        .unwrap_or(s);
    Violation::SumIsOnes(smaller)
}

pub fn check_bcc(h: &BitMatrix, k: usize, r: usize) -> Result<Option<Violation>> {
    if let Some(v) = check_bdc(h, k, r)? {
        return Ok(Some(v));
    }
    let sums = all_sums(h, k);
    let mut first_seen: HashMap<&BitVec, usize> = HashMap::with_capacity(sums.len());
    for (idx, (_, v)) in sums.iter().enumerate() {
        first_seen.entry(v).or_insert(idx);
    }
    // a XOR b == 1 exactly when b is the complement of a.
    for (idx, (set, v)) in sums.iter().enumerate() {
        if let Some(&other) = first_seen.get(&v.complement()) {
            let (a, b) = if other < idx {
                (sums[other].0.clone(), set.clone())
            } else {
                (set.clone(), sums[other].0.clone())
            };
            return Ok(Some(Violation::ComplementarySums(a, b)));
        }
    }
    Ok(None)
}

pub fn check_separable(h: &BitMatrix, k: usize) -> Result<Option<Violation>> {
    require_positive("k", k)?;
    let mut seen: HashMap<BitVec, ColumnSet> = HashMap::new();
    for s in subsets_up_to(h.cols(), k) {
        let v = or_unchecked(h, &s);
        if let Some(prev) = seen.get(&v) {
            return Ok(Some(Violation::EqualSums(prev.clone(), s)));
        }
        seen.insert(v, s);
    }
    Ok(None)
}

pub fn check_btc(h: &BitMatrix, k: usize, r: usize) -> Result<Option<Violation>> {
    if let Some(v) = check_bcc(h, k, r)? {
        return Ok(Some(v));
    }
    check_separable(h, k)
}

pub fn is_bdc(h: &BitMatrix, k: usize, r: usize) -> Result<bool> {
    Ok(check_bdc(h, k, r)?.is_none())
}

pub fn is_bcc(h: &BitMatrix, k: usize, r: usize) -> Result<bool> {
    Ok(check_bcc(h, k, r)?.is_none())
}

pub fn is_separable(h: &BitMatrix, k: usize) -> Result<bool> {
    Ok(check_separable(h, k)?.is_none())
}

pub fn is_btc(h: &BitMatrix, k: usize, r: usize) -> Result<bool> {
    Ok(check_btc(h, k, r)?.is_none())
}

/// Checks `h` against `p`, returning the first violation. `p.n` must match
/// the matrix width.
pub fn check(h: &BitMatrix, p: &CodeParams) -> Result<Option<Violation>> {
    p.validate()?;
    if p.n != h.cols() {
        return Err(invalid(format!(
            "{p} expects {} columns but the matrix has {}",
            p.n,
            h.cols()
        )));
    }
    match p.kind {
        CodeKind::Bdc => check_bdc(h, p.k, p.r),
        CodeKind::Bcc => check_bcc(h, p.k, p.r),
        CodeKind::Btc => check_btc(h, p.k, p.r),
        CodeKind::Separable => check_separable(h, p.k),
    }
}

pub fn verify(h: &BitMatrix, p: &CodeParams) -> Result<bool> {
    Ok(check(h, p)?.is_none())
}

/// Like [`check`] without the `n >= k + r` existence precondition; used by
/// the exhaustive search and the CLI where callers may ask about any shape.
pub fn check_kind(h: &BitMatrix, kind: CodeKind, k: usize, r: usize) -> Result<Option<Violation>> {
    match kind {
        CodeKind::Bdc => check_bdc(h, k, r),
        CodeKind::Bcc => check_bcc(h, k, r),
        CodeKind::Btc => check_btc(h, k, r),
        CodeKind::Separable => check_separable(h, k),
    }
}

/// Enumeration cost of the verifiers for `n` columns and `k` attackers.
pub fn enumeration_cost(n: usize, k: usize) -> u128 {
    count_subsets_up_to(n, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::minimal_bdc;

    fn set(ix: &[usize], n: usize) -> ColumnSet {
        ColumnSet::new(ix.to_vec(), n).unwrap()
    }

    fn i3_with_ones() -> BitMatrix {
        BitMatrix::from_row_strs(&["111", "100", "010", "001"]).unwrap()
    }

    #[test]
    fn column_or_examples() {
        let i3 = BitMatrix::identity(3).unwrap();
        assert_eq!(column_or(&i3, &set(&[0], 3)).unwrap().to_string(), "100");
        assert_eq!(column_or(&i3, &set(&[0, 1], 3)).unwrap().to_string(), "110");
        let wide = BitMatrix::identity(5).unwrap();
        let out_of_range = ColumnSet::new(vec![4], 5).unwrap();
        assert!(column_or(&i3, &out_of_range).is_err());
        assert_eq!(column_or(&wide, &out_of_range).unwrap().to_string(), "00001");
    }

    #[test]
    fn every_two_sum_of_h22_has_exactly_one_zero() {
        let h = minimal_bdc(2, 2).unwrap();
        for s in subsets_of_size(4, 2) {
            let v = column_or(&h, &s).unwrap();
            assert_eq!(v.len() - v.count_ones(), 1, "{s}");
        }
    }

    #[test]
    fn min_row_weight_examples() {
        assert_eq!(min_row_weight(&BitMatrix::identity(3).unwrap()), 1);
        assert_eq!(min_row_weight(&BitMatrix::ones(2, 4).unwrap()), 4);
        assert_eq!(min_row_weight(&minimal_bdc(2, 2).unwrap()), 2);
    }

    #[test]
    fn bdc_examples() {
        let i3 = BitMatrix::identity(3).unwrap();
        assert!(is_bdc(&i3, 2, 1).unwrap());
        assert!(!is_bdc(&BitMatrix::ones(2, 3).unwrap(), 1, 1).unwrap());
        assert!(is_bdc(&minimal_bdc(2, 3).unwrap(), 2, 3).unwrap());
        assert_eq!(minimal_bdc(2, 3).unwrap().rows(), 10);
        assert!(is_bdc(&i3, 0, 1).is_err());
        assert!(is_bdc(&i3, 1, 0).is_err());
    }

    #[test]
    fn bdc_reports_smallest_all_ones_sum() {
        let h = BitMatrix::from_row_strs(&["10", "10"]).unwrap();
        // Column 1 is zero: structure check fires first.
        assert_eq!(check_bdc(&h, 2, 1).unwrap(), Some(Violation::ZeroColumn(1)));
        let h = BitMatrix::from_row_strs(&["110", "101"]).unwrap();
        assert_eq!(
            check_bdc(&h, 2, 1).unwrap(),
            Some(Violation::SumIsOnes(set(&[0], 3)))
        );
    }

    #[test]
    fn bcc_examples() {
        let i3 = BitMatrix::identity(3).unwrap();
        assert!(!is_bcc(&i3, 2, 1).unwrap());
        assert_eq!(
            check_bcc(&i3, 2, 1).unwrap(),
            Some(Violation::ComplementarySums(set(&[0], 3), set(&[1, 2], 3)))
        );
        assert!(is_bcc(&i3_with_ones(), 2, 1).unwrap());
        assert!(is_bcc(&minimal_bdc(2, 2).unwrap(), 2, 2).unwrap());
    }

    #[test]
    fn separable_examples() {
        let i3 = BitMatrix::identity(3).unwrap();
        assert!(is_separable(&i3, 1).unwrap());
        let dup = BitMatrix::from_row_strs(&["110", "001"]).unwrap();
        assert!(!is_separable(&dup, 1).unwrap());
        assert_eq!(
            check_separable(&dup, 1).unwrap(),
            Some(Violation::EqualSums(set(&[0], 3), set(&[1], 3)))
        );
        assert!(is_separable(&i3, 2).unwrap());
    }

    /// Independent brute force over row-major `Vec<u8>` data: collects
    /// every k̄-sum as a tuple and checks for repeats.
    fn naive_separable(rows: &[Vec<u8>], k: usize) -> bool {
        let n = rows[0].len();
        let mut seen = std::collections::HashSet::new();
        for mask in 1u32..(1 << n) {
            if mask.count_ones() as usize > k {
                continue;
            }
            let sum: Vec<u8> = rows
                .iter()
                .map(|row| u8::from((0..n).any(|j| mask >> j & 1 == 1 && row[j] == 1)))
                .collect();
            if !seen.insert(sum) {
                return false;
            }
        }
        true
    }

    #[test]
    fn btc_examples() {
        // Enumeration: the four columns of H^(2,2) have weight 3 and the six
        // 2-sums each have their single zero in a different row, so all ten
        // sums are distinct and the minimal BCC(2,2,4) also tracks.
        let h = minimal_bdc(2, 2).unwrap();
        assert!(naive_separable(&h.to_rows(), 2));
        assert!(is_btc(&h, 2, 2).unwrap());

        let h = i3_with_ones();
        assert!(naive_separable(&h.to_rows(), 1));
        assert!(is_btc(&h, 1, 1).unwrap());

        // BCC but not separable: duplicated columns.
        let dup = minimal_bdc(2, 2).unwrap().hstack(&minimal_bdc(2, 2).unwrap()).unwrap();
        assert!(is_bcc(&dup, 2, 2).unwrap());
        assert!(!naive_separable(&dup.to_rows(), 2));
        assert!(!is_btc(&dup, 2, 2).unwrap());
    }

    #[test]
    fn separable_matches_naive_on_identity_pairs() {
        let i3 = BitMatrix::identity(3).unwrap();
        assert_eq!(is_separable(&i3, 2).unwrap(), naive_separable(&i3.to_rows(), 2));
        assert!(naive_separable(&i3.to_rows(), 2));
    }

    #[test]
    fn verify_dispatch() {
        let h22 = minimal_bdc(2, 2).unwrap();
        let i3 = BitMatrix::identity(3).unwrap();
        let bcc = |k, r, n| CodeParams::new(CodeKind::Bcc, k, r, n).unwrap();
        assert!(verify(&h22, &bcc(2, 2, 4)).unwrap());
        assert!(!verify(&i3, &bcc(2, 1, 3)).unwrap());
        let zeros = BitMatrix::zeros(2, 2).unwrap();
        let bdc = CodeParams::new(CodeKind::Bdc, 1, 1, 2).unwrap();
        assert!(!verify(&zeros, &bdc).unwrap());
        // n mismatch and impossible parameters are usage errors.
        assert!(verify(&i3, &bcc(1, 1, 2)).is_err());
        assert!(CodeParams::new(CodeKind::Bcc, 2, 2, 3).is_err());
        assert!(CodeParams::new(CodeKind::Bdc, 0, 1, 3).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("bcc".parse::<CodeKind>().unwrap(), CodeKind::Bcc);
        assert_eq!("SEP".parse::<CodeKind>().unwrap(), CodeKind::Separable);
        assert_eq!("separable".parse::<CodeKind>().unwrap(), CodeKind::Separable);
        assert!("xyz".parse::<CodeKind>().is_err());
    }
}
