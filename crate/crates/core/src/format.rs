//! The `.bcode` text format.
//!
//! ```text
//! bcode v1
//! kind=BCC k=2 r=2 n=4
//! 6 4
//! 1100
//! ...
//! ```
//!
//! Line 2 declares what the file claims to be; `RAW` makes no claim. Line 3
//! gives `m n`, followed by exactly `m` rows of `n` characters from `{0,1}`.
//! Several blocks may be concatenated (the search report does this).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::BitMatrix;
use crate::verify::CodeKind;

const MAGIC: &str = "bcode v1";

/// Declared kind on the header line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileKind {
    Code(CodeKind),
    Raw,
}

impl fmt::Display for FileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileKind::Code(kind) => f.write_str(kind.name()),
            FileKind::Raw => f.write_str("RAW"),
        }
    }
}

impl FromStr for FileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "BDC" => Ok(FileKind::Code(CodeKind::Bdc)),
            "BCC" => Ok(FileKind::Code(CodeKind::Bcc)),
            "BTC" => Ok(FileKind::Code(CodeKind::Btc)),
            "SEP" => Ok(FileKind::Code(CodeKind::Separable)),
            "RAW" => Ok(FileKind::Raw),
            other => Err(crate::error::invalid(format!("unknown kind {other:?}"))),
        }
    }
}

/// A matrix plus the header it was written with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeFile {
    pub kind: FileKind,
    pub k: usize,
    pub r: usize,
    pub matrix: BitMatrix,
}

impl CodeFile {
    pub fn new(kind: FileKind, k: usize, r: usize, matrix: BitMatrix) -> Self {
        Self { kind, k, r, matrix }
    }

    /// A file that claims nothing beyond its measured row weight.
    pub fn raw(matrix: BitMatrix) -> Self {
        let r = matrix.min_row_weight();
        Self::new(FileKind::Raw, 0, r, matrix)
    }

    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    /// Parses exactly one block.
    pub fn parse(text: &str) -> Result<Self> {
        let mut blocks = Self::parse_many(text)?;
        match blocks.len() {
            1 => Ok(blocks.remove(0)),
            count => Err(parse_err(1, format!("expected one code block, found {count}"))),
        }
    }

    /// Parses one or more concatenated blocks; blank lines between blocks
    /// are ignored.
    pub fn parse_many(text: &str) -> Result<Vec<Self>> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(idx, l)| (idx + 1, l.strip_suffix('\r').unwrap_or(l)))
            .peekable();
        let mut out = Vec::new();
        loop {
            while lines.peek().is_some_and(|(_, l)| l.trim().is_empty()) {
                lines.next();
            }
            if lines.peek().is_none() {
                break;
            }
            out.push(parse_block(&mut lines)?);
        }
        if out.is_empty() {
            return Err(parse_err(1, "empty input"));
        }
        Ok(out)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for CodeFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{MAGIC}")?;
        writeln!(f, "kind={} k={} r={} n={}", self.kind, self.k, self.r, self.n())?;
        writeln!(f, "{} {}", self.matrix.rows(), self.n())?;
        write!(f, "{}", self.matrix)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_block<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<CodeFile> {
    let (ln, magic) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
    if magic.trim_end() != MAGIC {
        return Err(parse_err(ln, format!("expected {MAGIC:?}, found {magic:?}")));
    }

    let (ln, header) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing kind line"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [kind, k, r, n] = fields.as_slice() else {
        return Err(parse_err(ln, "expected `kind=<K> k=<int> r=<int> n=<int>`"));
    };
    let field = |tok: &str, key: &str| -> Result<String> {
        tok.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| parse_err(ln, format!("expected `{key}=...`, found {tok:?}")))
    };
    let int = |tok: &str, key: &str| -> Result<usize> {
        field(tok, key)?
            .parse()
            .map_err(|_| parse_err(ln, format!("`{key}` is not a nonnegative integer")))
    };
    let kind: FileKind = field(kind, "kind")?
        .parse()
        .map_err(|e: Error| parse_err(ln, e.to_string()))?;
    let (k, r, header_n) = (int(k, "k")?, int(r, "r")?, int(n, "n")?);

    let (ln, dims) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing dimension line"))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "dimension line must be `<m> <n>`"))?;
    let [m, n] = dims.as_slice() else {
        return Err(parse_err(ln, "dimension line must be `<m> <n>`"));
    };
    let (m, n) = (*m, *n);
    if n != header_n {
        return Err(parse_err(ln, format!("header says n={header_n} but dimensions say n={n}")));
    }
    if m == 0 || n == 0 {
        return Err(parse_err(ln, "dimensions must be positive"));
    }

    let mut rows = Vec::with_capacity(m);
    let mut last = ln;
    for _ in 0..m {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| parse_err(last + 1, format!("expected {m} rows, found {}", rows.len())))?;
        last = ln;
        if row.chars().count() != n {
            return Err(parse_err(ln, format!("row has {} characters, expected {n}", row.len())));
        }
        let bits = row
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(parse_err(ln, format!("invalid character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(bits);
    }
    let matrix = BitMatrix::from_rows(&rows)?;
    Ok(CodeFile { kind, k, r, matrix })
}
