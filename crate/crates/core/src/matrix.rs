//! The code matrix `H`: `m` models by `n` users, `H[i][j] = 1` when model `i`
//! trains on user `j`'s data.

use std::fmt;

use crate::bits::BitVec;
use crate::error::{invalid, Result};

/// An immutable `m x n` binary matrix stored column-major.
///
/// Columns are the unit of every code property (Boolean sums of user
/// columns), so each column is a packed [`BitVec`] of length `m`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    columns: Vec<BitVec>,
}

impl BitMatrix {
    /// Builds from explicit rows. Every entry must be 0 or 1.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(invalid("matrix needs at least one row"));
        }
        let n = rows[0].as_ref().len();
        if n == 0 {
            return Err(invalid("matrix needs at least one column"));
        }
        let mut columns = vec![BitVec::zeros(m); n];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(invalid(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => columns[j].set(i, true),
                    other => return Err(invalid(format!("entry ({i},{j}) is {other}, not 0/1"))),
                }
            }
        }
        Ok(Self { rows: m, columns })
    }

    /// Parses rows written as `"0110"` strings.
    pub fn from_row_strs(rows: &[&str]) -> Result<Self> {
        let parsed: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| {
                r.chars()
                    .map(|ch| match ch {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(invalid(format!("unexpected character {other:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&parsed)
    }

    pub fn from_columns(columns: Vec<BitVec>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(invalid("matrix needs at least one column"));
        };
        let rows = first.len();
        if rows == 0 {
            return Err(invalid("matrix needs at least one row"));
        }
        if columns.iter().any(|c| c.len() != rows) {
            return Err(invalid("columns have different lengths"));
        }
        Ok(Self { rows, columns })
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid(format!("dimensions must be positive, got {m}x{n}")));
        }
        let columns = (0..n)
            .map(|j| BitVec::from_bools((0..m).map(|i| f(i, j))))
            .collect();
        Ok(Self { rows: m, columns })
    }

    /// `I_n`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| i == j)
    }

    pub fn ones(m: usize, n: usize) -> Result<Self> {
        Self::from_fn(m, n, |_, _| true)
    }

    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        Self::from_fn(m, n, |_, _| false)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// # Panics
    /// Panics if `(i, j)` is outside the matrix.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.columns[j].get(i)
    }

    #[inline]
    pub fn column(&self, j: usize) -> &BitVec {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[BitVec] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> BitVec {
        BitVec::from_bools(self.columns.iter().map(|c| c.get(i)))
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.columns.iter().filter(|c| c.get(i)).count()
    }

    /// Smallest number of ones in any row.
    pub fn min_row_weight(&self) -> usize {
        (0..self.rows).map(|i| self.row_weight(i)).min().unwrap_or(0)
    }

    pub fn zero_column(&self) -> Option<usize> {
        self.columns.iter().position(BitVec::is_zero)
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &Self) -> Result<Self> {
        if self.cols() != below.cols() {
            return Err(invalid(format!(
                "cannot stack {} columns on {} columns",
                self.cols(),
                below.cols()
            )));
        }
        let m = self.rows + below.rows;
        let columns = self
            .columns
            .iter()
            .zip(&below.columns)
            .map(|(top, bottom)| BitVec::from_bools(top.iter().chain(bottom.iter())))
            .collect();
        Ok(Self { rows: m, columns })
    }

    /// Places `right` to the right of `self`.
    pub fn hstack(&self, right: &Self) -> Result<Self> {
        if self.rows != right.rows {
            return Err(invalid(format!(
                "cannot join {} rows with {} rows",
                self.rows, right.rows
            )));
        }
        let mut columns = self.columns.clone();
        columns.extend(right.columns.iter().cloned());
        Ok(Self { rows: self.rows, columns })
    }

    /// New matrix whose column `j` is `self`'s column `order[j]`.
    pub fn select_columns(&self, order: &[usize]) -> Result<Self> {
        if let Some(&bad) = order.iter().find(|&&j| j >= self.cols()) {
            return Err(invalid(format!("column {bad} out of range for n={}", self.cols())));
        }
        Self::from_columns(order.iter().map(|&j| self.columns[j].clone()).collect())
    }

    /// New matrix whose row `i` is `self`'s row `order[i]`.
    pub fn select_rows(&self, order: &[usize]) -> Result<Self> {
        if let Some(&bad) = order.iter().find(|&&i| i >= self.rows) {
            return Err(invalid(format!("row {bad} out of range for m={}", self.rows)));
        }
        Self::from_fn(order.len(), self.cols(), |i, j| self.get(order[i], j))
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| self.columns.iter().map(|c| u8::from(c.get(i))).collect())
            .collect()
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for c in &self.columns {
                f.write_str(if c.get(i) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols())?;
        fmt::Display::fmt(self, f)
    }
}

/// A nonempty, strictly increasing set of column indices: the addends of a
/// Boolean sum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ColumnSet(Vec<usize>);

impl ColumnSet {
    /// Sorts and validates `indices` against a matrix with `n` columns.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("column set must be nonempty"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate column index in {indices:?}")));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(invalid(format!("column {last} out of range for n={n}")));
            }
        }
        Ok(Self(indices))
    }

    /// Skips validation; callers guarantee sorted, unique, in-range indices.
    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(!indices.is_empty());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }
}

impl fmt::Display for ColumnSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (pos, j) in self.0.iter().enumerate() {
            if pos > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        f.write_str("}")
    }
}
