//! Monte-Carlo evaluation of codes with synthetic models.
//!
//! Trained networks are replaced by confusion matrices whose per-class
//! accuracy saturates with the amount of class data a model was trained on.
//! User data is skewed across classes with a symmetric Dirichlet draw.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::Serialize;

use crate::confusion::ConfusionMatrix;
use crate::decoder::{majority_vote, AttackerPrior, Decoder, DecoderConfig, DEFAULT_ATTACK_THRESHOLD};
use crate::error::{invalid, Error, Result};
use crate::matrix::BitMatrix;

pub const DEFAULT_MAX_ACCURACY: f64 = 0.99;
pub const DEFAULT_KAPPA: f64 = 0.05;

/// Per-user class masses; row `u` holds how much data of each class user
/// `u` owns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassProfile {
    masses: Vec<Vec<f64>>,
}

impl ClassProfile {
    pub fn new(masses: Vec<Vec<f64>>) -> Result<Self> {
        let c = masses.first().map_or(0, Vec::len);
        if masses.is_empty() || c == 0 {
            return Err(invalid("profile needs at least one user and one class"));
        }
        if masses.iter().any(|row| row.len() != c) {
            return Err(invalid("profile rows differ in class count"));
        }
        if masses.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("profile masses must be finite and nonnegative"));
        }
        Ok(Self { masses })
    }

    /// Every user holds `1/c` of each class.
    pub fn iid(users: usize, c: usize) -> Result<Self> {
        Self::new(vec![vec![1.0 / c as f64; c]; users])
    }

    /// Each user's class proportions drawn from a symmetric Dirichlet with
    /// concentration `alpha`, via normalized `Gamma(alpha, 1)` draws.
    pub fn dirichlet(alpha: f64, users: usize, c: usize, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("Dirichlet concentration must be positive, got {alpha}")));
        }
        if users == 0 || c == 0 {
            return Err(invalid("profile needs at least one user and one class"));
        }
        let gamma = Gamma::new(alpha, 1.0).map_err(|e| invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masses = (0..users)
            .map(|_| loop {
                // Small alpha can underflow every draw to zero; redraw.
                let draws: Vec<f64> = (0..c).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                if total > 0.0 {
                    break draws.into_iter().map(|g| g / total).collect();
                }
            })
            .collect();
        Self::new(masses)
    }

    pub fn users(&self) -> usize {
        self.masses.len()
    }

    pub fn classes(&self) -> usize {
        self.masses[0].len()
    }

    pub fn user(&self, u: usize) -> &[f64] {
        &self.masses[u]
    }
}

/// One confusion matrix per model. Model `i` trained on users
/// `{u : H[i][u] = 1}` gets accuracy `a_max * d / (d + kappa)` on a class of
/// which it saw mass `d`; the remaining mass is spread evenly over the
/// other classes.
pub fn synth_confusion(
    code: &BitMatrix,
    profile: &ClassProfile,
    a_max: f64,
    kappa: f64,
) -> Result<Vec<ConfusionMatrix>> {
    if profile.users() != code.cols() {
        return Err(invalid(format!(
            "profile has {} users but the code has {} columns",
            profile.users(),
            code.cols()
        )));
    }
    if !(a_max > 0.0 && a_max <= 1.0) {
        return Err(invalid(format!("maximum accuracy {a_max} outside (0,1]")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    let c = profile.classes();
    (0..code.rows())
        .map(|i| {
            let users: Vec<usize> = code.row(i).ones_indices().collect();
            let rows = (0..c)
                .map(|j| {
                    if c == 1 {
                        return vec![1.0];
                    }
                    let d: f64 = users.iter().map(|&u| profile.user(u)[j]).sum();
                    let acc = a_max * d / (d + kappa);
                    let off = (1.0 - acc) / (c - 1) as f64;
                    (0..c).map(|q| if q == j { acc } else { off }).collect()
                })
                .collect();
            ConfusionMatrix::new(rows)
        })
        .collect()
}

/// Ground truth of one simulated query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Scenario {
    /// Sorted attacking users.
    pub attackers: Vec<usize>,
    pub target: usize,
    pub label: usize,
}

impl Scenario {
    pub fn clean(label: usize) -> Self {
        Self { attackers: Vec::new(), target: label, label }
    }
}

fn backdoored(code: &BitMatrix, attackers: &[usize]) -> Result<Vec<bool>> {
    let mut hit = vec![false; code.rows()];
    for &j in attackers {
        if j >= code.cols() {
            return Err(invalid(format!("attacker {j} outside 0..{}", code.cols())));
        }
        for i in code.column(j).ones_indices() {
            hit[i] = true;
        }
    }
    Ok(hit)
}

/// Outputs of perfect models under a fully successful attack: backdoored
/// models emit the target, the rest the true label.
pub fn noiseless_outputs(code: &BitMatrix, scenario: &Scenario) -> Result<Vec<usize>> {
    Ok(backdoored(code, &scenario.attackers)?
        .into_iter()
        .map(|hit| if hit { scenario.target } else { scenario.label })
        .collect())
}

/// Categorical samplers for every (model, true label) pair.
struct OutputSampler {
    rows: Vec<Vec<WeightedIndex<f64>>>,
}

impl OutputSampler {
    fn new(confusions: &[ConfusionMatrix]) -> Result<Self> {
        let classes = confusions.first().map_or(0, ConfusionMatrix::classes);
        if confusions.iter().any(|m| m.classes() != classes) {
            return Err(invalid("confusion matrices differ in class count"));
        }
        let rows = confusions
            .iter()
            .map(|m| {
                (0..classes)
                    .map(|l| WeightedIndex::new(m.row(l)).map_err(|e| invalid(e.to_string())))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    fn sample(&self, hit: &[bool], s: &Scenario, success: f64, rng: &mut impl Rng) -> Vec<usize> {
        self.rows
            .iter()
            .zip(hit)
            .map(|(dists, &hit)| {
                if hit && rng.random_bool(success) {
                    s.target
                } else {
                    dists[s.label].sample(rng)
                }
            })
            .collect()
    }
}

fn check_scenario(code: &BitMatrix, s: &Scenario, confusions: &[ConfusionMatrix]) -> Result<()> {
    if confusions.len() != code.rows() {
        return Err(invalid(format!(
            "{} confusion matrices for {} models",
            confusions.len(),
            code.rows()
        )));
    }
    let c = confusions.first().map_or(0, ConfusionMatrix::classes);
    if s.label >= c || s.target >= c {
        return Err(invalid(format!("label {} or target {} outside 0..{c}", s.label, s.target)));
    }
    Ok(())
}

/// Draws one prediction per model: a backdoored model emits the target
/// with probability `success`, every other draw comes from row `label` of
/// the model's confusion matrix.
pub fn sample_outputs_with(
    code: &BitMatrix,
    scenario: &Scenario,
    confusions: &[ConfusionMatrix],
    success: f64,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    check_scenario(code, scenario, confusions)?;
    if !(0.0..=1.0).contains(&success) {
        return Err(invalid(format!("success rate {success} outside [0,1]")));
    }
    let hit = backdoored(code, &scenario.attackers)?;
    Ok(OutputSampler::new(confusions)?.sample(&hit, scenario, success, rng))
}

pub fn sample_outputs(
    code: &BitMatrix,
    scenario: &Scenario,
    confusions: &[ConfusionMatrix],
    success: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    sample_outputs_with(code, scenario, confusions, success, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Independent generator for trial `index` of a run seeded with `seed`.
fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, sd: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountBreakdown {
    pub attackers: usize,
    pub trials: usize,
    pub decode_accuracy: f64,
    pub majority_accuracy: f64,
    pub tracking_tp: Stat,
    pub tracking_fp: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub trials: usize,
    pub decode_accuracy: f64,
    pub majority_accuracy: f64,
    /// Decode accuracy over trials without attackers, `None` if there were
    /// none.
    pub clean_accuracy: Option<f64>,
    pub tracking_tp: Stat,
    pub tracking_fp: Stat,
    /// Trials whose predictions had probability zero under the decoder's
    /// model; scored as decode failures with no attackers reported.
    pub degenerate: usize,
    pub per_attacker_count: Vec<CountBreakdown>,
}

struct TrialOutcome {
    attackers: usize,
    decoded: bool,
    majority: bool,
    tp: f64,
    fp: f64,
    degenerate: bool,
}

fn accuracy<'a>(outcomes: impl Iterator<Item = &'a TrialOutcome>, pick: fn(&TrialOutcome) -> bool) -> f64 {
    let (hits, total) = outcomes.fold((0usize, 0usize), |(h, t), o| (h + usize::from(pick(o)), t + 1));
    if total == 0 { 0.0 } else { hits as f64 / total as f64 }
}

impl EvaluationReport {
    fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let stat = |it: &dyn Fn(&TrialOutcome) -> f64, subset: &[&TrialOutcome]| {
            Stat::of(&subset.iter().map(|o| it(o)).collect::<Vec<_>>())
        };
        let all: Vec<&TrialOutcome> = outcomes.iter().collect();
        let mut counts: Vec<usize> = outcomes.iter().map(|o| o.attackers).collect();
        counts.sort_unstable();
        counts.dedup();
        let per_attacker_count = counts
            .into_iter()
            .map(|k| {
                let group: Vec<&TrialOutcome> = all.iter().copied().filter(|o| o.attackers == k).collect();
                CountBreakdown {
                    attackers: k,
                    trials: group.len(),
                    decode_accuracy: accuracy(group.iter().copied(), |o| o.decoded),
                    majority_accuracy: accuracy(group.iter().copied(), |o| o.majority),
                    tracking_tp: stat(&|o| o.tp, &group),
                    tracking_fp: stat(&|o| o.fp, &group),
                }
            })
            .collect::<Vec<_>>();
        let clean_accuracy = per_attacker_count.iter().find(|b| b.attackers == 0).map(|b| b.decode_accuracy);
        Self {
            trials: outcomes.len(),
            decode_accuracy: accuracy(outcomes.iter(), |o| o.decoded),
            majority_accuracy: accuracy(outcomes.iter(), |o| o.majority),
            clean_accuracy,
            tracking_tp: stat(&|o| o.tp, &all),
            tracking_fp: stat(&|o| o.fp, &all),
            degenerate: outcomes.iter().filter(|o| o.degenerate).count(),
            per_attacker_count,
        }
    }
}

/// Runs `trials` independent queries against `cfg.code`. Each trial picks an
/// attacker count uniformly from `attacker_counts`, a uniformly random
/// attacker set of that size, a uniform true label and a uniform target
/// different from it, samples predictions from `cfg`'s own confusion
/// matrices and success rate, and decodes them with `cfg`.
///
/// Trial `i` draws from its own generator derived from `(seed, i)`, so the
/// report does not depend on the thread count.
pub fn run_trials(
    cfg: &DecoderConfig,
    attacker_counts: &[usize],
    trials: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    let decoder = Decoder::new(cfg)?;
    let (n, c) = (cfg.code.cols(), cfg.classes);
    if trials == 0 || attacker_counts.is_empty() {
        return Err(invalid("need at least one trial and one attacker count"));
    }
    if let Some(&k) = attacker_counts.iter().find(|&&k| k > n) {
        return Err(invalid(format!("{k} attackers but only {n} users")));
    }
    if c < 2 && attacker_counts.iter().any(|&k| k > 0) {
        return Err(invalid("attacks need at least two classes"));
    }
    let sampler = OutputSampler::new(&cfg.confusions)?;

    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let mut rng = trial_rng(seed, trial as u64);
            let count = attacker_counts[rng.random_range(0..attacker_counts.len())];
            let mut attackers = index::sample(&mut rng, n, count).into_vec();
            attackers.sort_unstable();
            let label = rng.random_range(0..c);
            let target = if count == 0 {
                label
            } else {
                // Uniform over the other c - 1 classes.
                let t = rng.random_range(0..c - 1);
                if t >= label { t + 1 } else { t }
            };
            let scenario = Scenario { attackers, target, label };
            let hit = backdoored(&cfg.code, &scenario.attackers)?;
            let y = sampler.sample(&hit, &scenario, cfg.success_rate, &mut rng);
            let majority = majority_vote(&y, c) == label;
            match decoder.decode(&y, DEFAULT_ATTACK_THRESHOLD) {
                Ok(res) => {
                    let tp = res.decoded_attackers.iter().filter(|j| scenario.attackers.contains(j)).count();
                    Ok(TrialOutcome {
                        attackers: count,
                        decoded: res.decoded_label == label,
                        majority,
                        tp: tp as f64,
                        fp: (res.decoded_attackers.len() - tp) as f64,
                        degenerate: false,
                    })
                }
                Err(Error::DegenerateEvidence(_)) => Ok(TrialOutcome {
                    attackers: count,
                    decoded: false,
                    majority,
                    tp: 0.0,
                    fp: 0.0,
                    degenerate: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport::from_outcomes(&outcomes))
}

/// Where the models' class data comes from in a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataSplit {
    Iid,
    Dirichlet(f64),
}

impl std::fmt::Display for DataSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSplit::Iid => f.write_str("iid"),
            DataSplit::Dirichlet(alpha) => write!(f, "{alpha}"),
        }
    }
}

impl std::str::FromStr for DataSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("iid") {
            return Ok(DataSplit::Iid);
        }
        match s.parse::<f64>() {
            Ok(alpha) if alpha > 0.0 && alpha.is_finite() => Ok(DataSplit::Dirichlet(alpha)),
            _ => Err(invalid(format!("expected `iid` or a positive concentration, got {s:?}"))),
        }
    }
}

impl DataSplit {
    pub fn profile(self, users: usize, classes: usize, seed: u64) -> Result<ClassProfile> {
        match self {
            DataSplit::Iid => ClassProfile::iid(users, classes),
            DataSplit::Dirichlet(alpha) => ClassProfile::dirichlet(alpha, users, classes, seed),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub split: DataSplit,
    pub classes: usize,
    pub trials: usize,
    pub runs: usize,
    pub attacker_counts: Vec<usize>,
    pub success_rate: f64,
    pub attack_rate: f64,
    pub prior: AttackerPrior,
    pub a_max: f64,
    pub kappa: f64,
    pub seed: u64,
}

/// Run means and their spread across runs for one attacker count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub attackers: usize,
    pub decode_accuracy: Stat,
    pub majority_accuracy: Stat,
    pub tracking_tp: Stat,
    pub tracking_fp: Stat,
    pub degenerate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub code: String,
    pub alpha: String,
    pub classes: usize,
    pub trials: usize,
    pub runs: usize,
    pub success_rate: f64,
    pub attack_rate: f64,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    code: &'a str,
    alpha: &'a str,
    #[serde(rename = "attackerCount")]
    attacker_count: usize,
    #[serde(rename = "decodeAccuracy")]
    decode_accuracy: f64,
    #[serde(rename = "majorityAccuracy")]
    majority_accuracy: f64,
    #[serde(rename = "tpMean")]
    tp_mean: f64,
    #[serde(rename = "tpSd")]
    tp_sd: f64,
    #[serde(rename = "fpMean")]
    fp_mean: f64,
    #[serde(rename = "fpSd")]
    fp_sd: f64,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per attacker count with the run-mean accuracies.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(CsvRow {
                code: &self.code,
                alpha: &self.alpha,
                attacker_count: p.attackers,
                decode_accuracy: p.decode_accuracy.mean,
                majority_accuracy: p.majority_accuracy.mean,
                tp_mean: p.tracking_tp.mean,
                tp_sd: p.tracking_tp.sd,
                fp_mean: p.tracking_fp.mean,
                fp_sd: p.tracking_fp.sd,
            })
            .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }
}

/// Seed for component `part` of run `run`.
fn derived_seed(seed: u64, run: usize, part: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64 + 1);
    rng.set_word_pos(u128::from(part) * 2);
    rng.next_u64()
}

/// For each run, draws a fresh data split and synthetic models, then runs
/// `trials` queries at every attacker count. Accuracies are averaged per
/// run; the reported spread is the population SD of the run means.
pub fn sweep(code: &BitMatrix, name: &str, sc: &SweepConfig) -> Result<SweepReport> {
    if sc.runs == 0 {
        return Err(invalid("need at least one run"));
    }
    let mut per_run = Vec::with_capacity(sc.runs);
    for run in 0..sc.runs {
        let profile = sc.split.profile(code.cols(), sc.classes, derived_seed(sc.seed, run, 0))?;
        let cfg = DecoderConfig {
            attack_rate: sc.attack_rate,
            success_rate: sc.success_rate,
            prior: sc.prior.clone(),
            confusions: synth_confusion(code, &profile, sc.a_max, sc.kappa)?,
            classes: sc.classes,
            code: code.clone(),
        };
        let reports = sc
            .attacker_counts
            .iter()
            .enumerate()
            .map(|(i, &k)| run_trials(&cfg, &[k], sc.trials, derived_seed(sc.seed, run, 1 + i as u64)))
            .collect::<Result<Vec<_>>>()?;
        per_run.push(reports);
    }
    let points = sc
        .attacker_counts
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let over_runs = |f: fn(&EvaluationReport) -> f64| {
                Stat::of(&per_run.iter().map(|r| f(&r[i])).collect::<Vec<_>>())
            };
            SweepPoint {
                attackers: k,
                decode_accuracy: over_runs(|r| r.decode_accuracy),
                majority_accuracy: over_runs(|r| r.majority_accuracy),
                tracking_tp: over_runs(|r| r.tracking_tp.mean),
                tracking_fp: over_runs(|r| r.tracking_fp.mean),
                degenerate: per_run.iter().map(|r| r[i].degenerate).sum(),
            }
        })
        .collect();
    Ok(SweepReport {
        code: name.to_owned(),
        alpha: sc.split.to_string(),
        classes: sc.classes,
        trials: sc.trials,
        runs: sc.runs,
        success_rate: sc.success_rate,
        attack_rate: sc.attack_rate,
        seed: sc.seed,
        points,
    })
}
