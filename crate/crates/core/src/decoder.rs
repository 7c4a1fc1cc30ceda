//! Bayesian decoding of ensemble predictions.
//!
//! Every model `i` of the code outputs a class `y[i]`. A hypothesis is an
//! attacker set `x`, a backdoor target `t` and a true label `l`. Models that
//! share a user with `x` emit `t` with probability `S` and otherwise behave
//! like clean models, drawing from row `l` of their confusion matrix.
//!
//! All products over models are accumulated as sums of logs and combined
//! with a max-shifted log-sum-exp, so long codes with small confusion
//! entries do not underflow.

use itertools::{Either, Itertools};
use serde::Serialize;

use crate::combinatorics::{binomial, subsets_of_size};
use crate::confusion::ConfusionMatrix;
use crate::error::{invalid, Error, Result};
use crate::matrix::BitMatrix;

/// Attack posterior above which [`decode`] reports attackers.
pub const DEFAULT_ATTACK_THRESHOLD: f64 = 0.5;

const PRIOR_SUM_TOLERANCE: f64 = 1e-9;

/// Prior over the number of attackers; entry `s` is the probability of
/// exactly `s` attackers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackerPrior {
    probs: Vec<f64>,
}

impl AttackerPrior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("attacker-count prior is empty"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(invalid(format!("attacker-count prior has invalid entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(invalid(format!("attacker-count prior sums to {sum}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Equal mass on every count in `lo..=hi`.
    pub fn uniform(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(invalid(format!("empty attacker-count range {lo}..={hi}")));
        }
        let p = 1.0 / (hi - lo + 1) as f64;
        Self::new((0..=hi).map(|s| if s >= lo { p } else { 0.0 }).collect())
    }

    /// Probability of exactly `count` attackers (zero past the end).
    pub fn prob(&self, count: usize) -> f64 {
        self.probs.get(count).copied().unwrap_or(0.0)
    }

    /// Largest count with an entry (possibly zero).
    pub fn max_count(&self) -> usize {
        self.probs.len() - 1
    }

    /// Counts with positive probability, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(s, _)| s)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[derive(Clone, Debug)]
pub struct DecoderConfig {
    /// Prior probability that the query carries a trigger.
    pub attack_rate: f64,
    /// Probability that a backdoored model emits the target.
    pub success_rate: f64,
    pub prior: AttackerPrior,
    /// One matrix per model (row of `code`).
    pub confusions: Vec<ConfusionMatrix>,
    pub classes: usize,
    pub code: BitMatrix,
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("attack rate", self.attack_rate), ("success rate", self.success_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} {v} outside [0,1]")));
            }
        }
        if self.classes == 0 {
            return Err(invalid("class count must be positive"));
        }
        if self.confusions.len() != self.code.rows() {
            return Err(invalid(format!(
                "{} confusion matrices for a code with {} models",
                self.confusions.len(),
                self.code.rows()
            )));
        }
        if let Some(i) = self.confusions.iter().position(|c| c.classes() != self.classes) {
            return Err(invalid(format!("confusion matrix {i} is not {0}x{0}", self.classes)));
        }
        if self.prior.max_count() > self.code.cols() {
            return Err(invalid(format!(
                "attacker-count prior reaches {} but there are only {} users",
                self.prior.max_count(),
                self.code.cols()
            )));
        }
        Ok(())
    }

    fn check_outputs(&self, y: &[usize]) -> Result<()> {
        if y.len() != self.code.rows() {
            return Err(invalid(format!("{} predictions for {} models", y.len(), self.code.rows())));
        }
        if let Some(&bad) = y.iter().find(|&&q| q >= self.classes) {
            return Err(invalid(format!("prediction {bad} outside 0..{}", self.classes)));
        }
        Ok(())
    }
}

/// One attacker set and its posterior probability given that an attack
/// happened.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackerHypothesis {
    pub attackers: Vec<usize>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecodeResult {
    pub attack_posterior: f64,
    pub label_posterior: Vec<f64>,
    pub decoded_label: usize,
    /// Attacker sets with at least one member, ordered by size and then
    /// lexicographically. Empty when no such set is consistent with `y`.
    pub attacker_posterior: Vec<AttackerHypothesis>,
    /// Most probable attacker set if the attack posterior clears the
    /// threshold, otherwise empty.
    pub decoded_attackers: Vec<usize>,
}

/// The weight of one `(attackers, t, l)` hypothesis for predictions `y`:
/// the prior of the attacker set times the likelihood of `y`.
pub fn joint_weight(
    attackers: &[usize],
    y: &[usize],
    target: usize,
    label: usize,
    cfg: &DecoderConfig,
) -> Result<f64> {
    cfg.validate()?;
    cfg.check_outputs(y)?;
    if target >= cfg.classes || label >= cfg.classes {
        return Err(invalid(format!("target {target} or label {label} outside 0..{}", cfg.classes)));
    }
    let n = cfg.code.cols();
    let mut sorted = attackers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != attackers.len() || sorted.last().is_some_and(|&j| j >= n) {
        return Err(invalid(format!("attacker set {attackers:?} is not a set of users in 0..{n}")));
    }
    let count = attackers.len();
    let q = cfg.prior.prob(count);
    if q <= 0.0 {
        return Err(invalid(format!("{count} attackers lies outside the prior's support")));
    }
    let sets = binomial(n as u64, count as u64).expect("small binomial") as f64;
    let backdoored = backdoored_models(&cfg.code, &sorted);
    let s = cfg.success_rate;
    let likelihood: f64 = y
        .iter()
        .zip(&cfg.confusions)
        .zip(&backdoored)
        .map(|((&yi, conf), &hit)| {
            let clean = conf.prob(label, yi);
            if hit {
                s * f64::from(u8::from(yi == target)) + (1.0 - s) * clean
            } else {
                clean
            }
        })
        .product();
    Ok(q / sets * likelihood)
}

fn backdoored_models(code: &BitMatrix, attackers: &[usize]) -> Vec<bool> {
    let mut hit = vec![false; code.rows()];
    for &j in attackers {
        for i in code.column(j).ones_indices() {
            hit[i] = true;
        }
    }
    hit
}

/// `ln(sum(exp(v)))`, `-inf` for an empty or all-`-inf` input.
fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.into_iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn normalize(log_scores: &[f64]) -> Option<Vec<f64>> {
    let total = log_sum_exp(log_scores.iter().copied());
    (total != f64::NEG_INFINITY).then(|| log_scores.iter().map(|s| (s - total).exp()).collect())
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

struct Hypothesis {
    attackers: Vec<usize>,
    /// Models sharing a user with `attackers`.
    touched: Vec<usize>,
    untouched: Vec<usize>,
    /// `ln(Q(|x|) / C(n, |x|))`.
    log_prior: f64,
}

impl Hypothesis {
    fn new(code: &BitMatrix, attackers: Vec<usize>, log_prior: f64) -> Self {
        let (touched, untouched) =
            backdoored_models(code, &attackers).iter().enumerate().partition_map(|(i, &hit)| {
                if hit { Either::Left(i) } else { Either::Right(i) }
            });
        Self { attackers, touched, untouched, log_prior }
    }
}

/// A configuration with its attacker sets enumerated once, reusable across
/// many prediction vectors.
pub struct Decoder<'a> {
    cfg: &'a DecoderConfig,
    hypotheses: Vec<Hypothesis>,
}

/// Posteriors shared by every public entry point.
struct Evidence {
    attack_posterior: f64,
    label_posterior: Vec<f64>,
    /// Normalized over nonempty attacker sets, `None` if all have weight 0.
    attacker_posterior: Option<Vec<f64>>,
}

impl<'a> Decoder<'a> {
    pub fn new(cfg: &'a DecoderConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.code.cols();
        let mut hypotheses = Vec::new();
        for count in cfg.prior.support() {
            let log_prior = cfg.prior.prob(count).ln()
                - (binomial(n as u64, count as u64).expect("small binomial") as f64).ln();
            if count == 0 {
                hypotheses.push(Hypothesis::new(&cfg.code, Vec::new(), log_prior));
                continue;
            }
            for set in subsets_of_size(n, count) {
                hypotheses.push(Hypothesis::new(&cfg.code, set.indices().to_vec(), log_prior));
            }
        }
        Ok(Self { cfg, hypotheses })
    }

    pub fn config(&self) -> &DecoderConfig {
        self.cfg
    }

    /// Number of attacker sets (including the empty one) enumerated per
    /// decode.
    pub fn hypothesis_count(&self) -> usize {
        self.hypotheses.len()
    }

    fn evidence(&self, y: &[usize]) -> Result<Evidence> {
        let cfg = self.cfg;
        cfg.check_outputs(y)?;
        let c = cfg.classes;
        let s = cfg.success_rate;

        // clean[l][i] = ln C_i[l][y_i]
        let clean: Vec<Vec<f64>> = (0..c)
            .map(|l| y.iter().zip(&cfg.confusions).map(|(&yi, conf)| conf.prob(l, yi).ln()).collect())
            .collect();
        // hit[t][l][i] = ln(S [y_i = t] + (1 - S) C_i[l][y_i])
        let hit: Vec<Vec<Vec<f64>>> = (0..c)
            .map(|t| {
                (0..c)
                    .map(|l| {
                        y.iter()
                            .zip(&cfg.confusions)
                            .map(|(&yi, conf)| {
                                let direct = if yi == t { s } else { 0.0 };
                                (direct + (1.0 - s) * conf.prob(l, yi)).ln()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        // per_set[h][l] = ln sum_t p(x_h, y, t, l)
        let mut per_set = vec![vec![f64::NEG_INFINITY; c]; self.hypotheses.len()];
        let mut by_target = vec![0.0; c];
        for (h, row) in self.hypotheses.iter().zip(per_set.iter_mut()) {
            for (l, out) in row.iter_mut().enumerate() {
                let untouched: f64 = h.untouched.iter().map(|&i| clean[l][i]).sum();
                if untouched == f64::NEG_INFINITY {
                    continue;
                }
                for (t, slot) in by_target.iter_mut().enumerate() {
                    let touched: f64 = h.touched.iter().map(|&i| hit[t][l][i]).sum();
                    *slot = h.log_prior + untouched + touched;
                }
                *out = log_sum_exp(by_target.iter().copied());
            }
        }

        let ln_a = cfg.attack_rate.ln();
        let ln_clean_prior = (1.0 - cfg.attack_rate).ln() + (c as f64).ln();
        let clean_totals: Vec<f64> = clean.iter().map(|row| row.iter().sum()).collect();
        let attacked_by_label: Vec<f64> =
            (0..c).map(|l| log_sum_exp(per_set.iter().map(|row| row[l]))).collect();

        let attack = ln_a + log_sum_exp(attacked_by_label.iter().copied());
        let no_attack = ln_clean_prior + log_sum_exp(clean_totals.iter().copied());
        let evidence = log_sum_exp([attack, no_attack]);
        if evidence == f64::NEG_INFINITY {
            return Err(Error::DegenerateEvidence(format!(
                "predictions {y:?} have probability 0 under all {} attacker sets and the clean model",
                self.hypotheses.len()
            )));
        }

        let label_scores: Vec<f64> = (0..c)
            .map(|l| log_sum_exp([ln_a + attacked_by_label[l], ln_clean_prior + clean_totals[l]]))
            .collect();
        let label_posterior = normalize(&label_scores).expect("finite evidence implies a finite label score");

        let set_scores: Vec<f64> = self
            .hypotheses
            .iter()
            .zip(&per_set)
            .filter(|(h, _)| !h.attackers.is_empty())
            .map(|(_, row)| log_sum_exp(row.iter().copied()))
            .collect();

        Ok(Evidence {
            attack_posterior: (attack - evidence).exp(),
            label_posterior,
            attacker_posterior: normalize(&set_scores),
        })
    }

    pub fn attack_posterior(&self, y: &[usize]) -> Result<f64> {
        Ok(self.evidence(y)?.attack_posterior)
    }

    pub fn label_posterior(&self, y: &[usize]) -> Result<Vec<f64>> {
        Ok(self.evidence(y)?.label_posterior)
    }

    /// Posterior over nonempty attacker sets given that an attack happened.
    pub fn attacker_posterior(&self, y: &[usize]) -> Result<Vec<AttackerHypothesis>> {
        let probs = self.evidence(y)?.attacker_posterior.ok_or_else(|| {
            Error::DegenerateEvidence(format!(
                "no nonempty attacker set explains predictions {y:?}"
            ))
        })?;
        Ok(self.attacker_sets(probs))
    }

    fn attacker_sets(&self, probs: Vec<f64>) -> Vec<AttackerHypothesis> {
        self.hypotheses
            .iter()
            .filter(|h| !h.attackers.is_empty())
            .zip(probs)
            .map(|(h, probability)| AttackerHypothesis { attackers: h.attackers.clone(), probability })
            .collect()
    }

    pub fn decode(&self, y: &[usize], threshold: f64) -> Result<DecodeResult> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(invalid(format!("attack threshold {threshold} outside [0,1]")));
        }
        let ev = self.evidence(y)?;
        let attacker_posterior = ev.attacker_posterior.map(|p| self.attacker_sets(p)).unwrap_or_default();
        let decoded_attackers = if ev.attack_posterior > threshold && !attacker_posterior.is_empty() {
            let probs: Vec<f64> = attacker_posterior.iter().map(|h| h.probability).collect();
            attacker_posterior[argmax(&probs)].attackers.clone()
        } else {
            Vec::new()
        };
        Ok(DecodeResult {
            attack_posterior: ev.attack_posterior,
            decoded_label: argmax(&ev.label_posterior),
            label_posterior: ev.label_posterior,
            attacker_posterior,
            decoded_attackers,
        })
    }
}

/// Probability that `y` was produced under attack.
pub fn attack_posterior(y: &[usize], cfg: &DecoderConfig) -> Result<f64> {
    Decoder::new(cfg)?.attack_posterior(y)
}

/// Posterior over true labels, summing the attack and clean explanations.
pub fn label_posterior(y: &[usize], cfg: &DecoderConfig) -> Result<Vec<f64>> {
    Decoder::new(cfg)?.label_posterior(y)
}

pub fn attacker_posterior(y: &[usize], cfg: &DecoderConfig) -> Result<Vec<AttackerHypothesis>> {
    Decoder::new(cfg)?.attacker_posterior(y)
}

pub fn decode(y: &[usize], cfg: &DecoderConfig, threshold: f64) -> Result<DecodeResult> {
    Decoder::new(cfg)?.decode(y, threshold)
}

/// The most frequent prediction, lowest class on ties. Classes at or above
/// `classes` are still counted.
pub fn majority_vote(y: &[usize], classes: usize) -> usize {
    let width = y.iter().map(|&q| q + 1).max().unwrap_or(0).max(classes);
    let mut counts = vec![0usize; width];
    for &q in y {
        counts[q] += 1;
    }
    counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (q, &n)| if n > best.1 { (q, n) } else { best })
        .0
}
