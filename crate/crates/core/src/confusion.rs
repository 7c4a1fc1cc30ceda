//! Per-model confusion matrices and their JSON file format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Row-stochastic `c x c` matrix: entry `(j, q)` is the probability that a
/// model labels clean class-`j` data as class `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ConfusionMatrix {
    classes: usize,
    probs: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let c = rows.len();
        if c == 0 {
            return Err(invalid("confusion matrix needs at least one class"));
        }
        let mut probs = Vec::with_capacity(c * c);
        for (j, row) in rows.into_iter().enumerate() {
            if row.len() != c {
                return Err(invalid(format!("confusion row {j} has {} entries, expected {c}", row.len())));
            }
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(invalid(format!("confusion row {j} has entry {bad} outside [0,1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(invalid(format!("confusion row {j} sums to {sum}, not 1")));
            }
            probs.extend(row);
        }
        Ok(Self { classes: c, probs })
    }

    /// A perfect classifier.
    pub fn identity(c: usize) -> Result<Self> {
        Self::new((0..c).map(|j| (0..c).map(|q| f64::from(u8::from(j == q))).collect()).collect())
    }

    /// Every entry `1/c`.
    pub fn uniform(c: usize) -> Result<Self> {
        Self::new(vec![vec![1.0 / c as f64; c]; c])
    }

    /// Row `j` = `(count(j -> q) + smoothing) / (count(j -> .) + c * smoothing)`.
    /// Rows without any observations (and no smoothing) are uniform.
    pub fn estimate(pairs: &[(usize, usize)], c: usize, smoothing: f64) -> Result<Self> {
        if c == 0 {
            return Err(invalid("class count must be positive"));
        }
        if smoothing < 0.0 || !smoothing.is_finite() {
            return Err(invalid(format!("smoothing must be a nonnegative number, got {smoothing}")));
        }
        let mut counts = vec![vec![0.0f64; c]; c];
        for &(truth, pred) in pairs {
            if truth >= c || pred >= c {
                return Err(invalid(format!("label pair ({truth},{pred}) outside 0..{c}")));
            }
            counts[truth][pred] += 1.0;
        }
        let rows = counts
            .into_iter()
            .map(|row| {
                let total: f64 = row.iter().sum::<f64>() + c as f64 * smoothing;
                if total == 0.0 {
                    vec![1.0 / c as f64; c]
                } else {
                    row.into_iter().map(|n| (n + smoothing) / total).collect()
                }
            })
            .collect();
        Self::new(rows)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Probability of predicting `pred` for clean data of class `truth`.
    #[inline]
    pub fn prob(&self, truth: usize, pred: usize) -> f64 {
        self.probs[truth * self.classes + pred]
    }

    pub fn row(&self, truth: usize) -> &[f64] {
        &self.probs[truth * self.classes..(truth + 1) * self.classes]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.classes).map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for ConfusionMatrix {
    type Error = crate::error::Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<ConfusionMatrix> for Vec<Vec<f64>> {
    fn from(m: ConfusionMatrix) -> Self {
        m.to_rows()
    }
}

/// JSON document `{"c": <classes>, "models": [<c x c rows>, ...]}`, one
/// matrix per model (row of the code).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionFile {
    pub c: usize,
    pub models: Vec<ConfusionMatrix>,
}

impl ConfusionFile {
    pub fn new(c: usize, models: Vec<ConfusionMatrix>) -> Result<Self> {
        let file = Self { c, models };
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, m)) = self.models.iter().enumerate().find(|(_, m)| m.classes() != self.c) {
            return Err(invalid(format!(
                "model {i} has a {0}x{0} matrix but c={1}",
                m.classes(),
                self.c
            )));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)
            .map_err(|e| invalid(format!("confusion file: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("confusion matrices serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ConfusionMatrix::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).is_ok());
        assert!(ConfusionMatrix::new(vec![vec![0.5, 0.6], vec![0.2, 0.8]]).is_err());
        assert!(ConfusionMatrix::new(vec![vec![1.5, -0.5], vec![0.2, 0.8]]).is_err());
        assert!(ConfusionMatrix::new(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(ConfusionMatrix::new(vec![]).is_err());
    }

    #[test]
    fn estimate_examples() {
        let pairs: Vec<_> = (0..3).flat_map(|c| [(c, c), (c, c)]).collect();
        assert_eq!(
            ConfusionMatrix::estimate(&pairs, 3, 0.0).unwrap(),
            ConfusionMatrix::identity(3).unwrap()
        );
        assert_eq!(
            ConfusionMatrix::estimate(&[], 4, 1.0).unwrap(),
            ConfusionMatrix::uniform(4).unwrap()
        );
        let mut pairs = vec![(0, 0); 9];
        pairs.push((0, 1));
        let m = ConfusionMatrix::estimate(&pairs, 2, 0.0).unwrap();
        assert!((m.prob(0, 0) - 0.9).abs() < 1e-15);
        assert!((m.prob(0, 1) - 0.1).abs() < 1e-15);
        assert_eq!(m.row(1), &[0.5, 0.5]);
        assert!(ConfusionMatrix::estimate(&[(0, 2)], 2, 1.0).is_err());
    }

    #[test]
    fn json_file_round_trip() {
        let file = ConfusionFile::new(
            2,
            vec![
                ConfusionMatrix::identity(2).unwrap(),
                ConfusionMatrix::new(vec![vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap(),
            ],
        )
        .unwrap();
        let text = file.to_json();
        assert_eq!(ConfusionFile::parse(&text).unwrap(), file);
        assert!(ConfusionFile::parse(r#"{"c": 3, "models": [[[1.0, 0.0], [0.0, 1.0]]]}"#).is_err());
        assert!(ConfusionFile::parse(r#"{"c": 2, "models": [[[0.9, 0.0], [0.0, 1.0]]]}"#).is_err());
    }
}
