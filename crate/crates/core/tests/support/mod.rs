//! Shared test helpers: a deliberately naive decoder and random
//! configuration generators.
#![allow(dead_code)]

use backdoor_codes::confusion::ConfusionMatrix;
use backdoor_codes::decoder::{AttackerPrior, DecoderConfig};
use backdoor_codes::matrix::BitMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Posteriors computed straight from the likelihood, in linear space, by
/// walking every indicator vector `x` in `0..2^n`.
pub struct NaivePosteriors {
    /// `None` when the evidence is exactly zero.
    pub attack: Option<f64>,
    pub labels: Option<Vec<f64>>,
    /// Keyed by sorted attacker indices; `None` when every nonempty set has
    /// weight zero.
    pub attackers: Option<Vec<(Vec<usize>, f64)>>,
}

fn choose(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

fn weight(cfg: &DecoderConfig, bits: u32, y: &[usize], t: usize, l: usize) -> f64 {
    let n = cfg.code.cols();
    let size = bits.count_ones() as usize;
    let mut p = cfg.prior.prob(size) / choose(n, size);
    for (i, &yi) in y.iter().enumerate() {
        let mut attacked = false;
        for j in 0..n {
            if bits >> j & 1 == 1 && cfg.code.get(i, j) {
                attacked = true;
            }
        }
        let clean = cfg.confusions[i].prob(l, yi);
        let f = if attacked {
            let delta = if yi == t { 1.0 } else { 0.0 };
            cfg.success_rate * delta + (1.0 - cfg.success_rate) * clean
        } else {
            clean
        };
        p *= f;
    }
    p
}

pub fn naive_posteriors(cfg: &DecoderConfig, y: &[usize]) -> NaivePosteriors {
    let n = cfg.code.cols();
    let c = cfg.classes;
    let a = cfg.attack_rate;

    let mut attacked_total = 0.0;
    let mut attacked_by_label = vec![0.0; c];
    let mut sets = Vec::new();
    for bits in 0u32..(1 << n) {
        let size = bits.count_ones() as usize;
        if cfg.prior.prob(size) <= 0.0 {
            continue;
        }
        let mut set_total = 0.0;
        for t in 0..c {
            for (l, by_label) in attacked_by_label.iter_mut().enumerate() {
                let p = weight(cfg, bits, y, t, l);
                attacked_total += p;
                *by_label += p;
                set_total += p;
            }
        }
        if size > 0 {
            let members: Vec<usize> = (0..n).filter(|j| bits >> j & 1 == 1).collect();
            sets.push((members, set_total));
        }
    }

    let clean_by_label: Vec<f64> = (0..c)
        .map(|l| y.iter().enumerate().map(|(i, &yi)| cfg.confusions[i].prob(l, yi)).product())
        .collect();
    let clean_total: f64 = clean_by_label.iter().sum();

    let num = a * attacked_total;
    let den = num + (1.0 - a) * c as f64 * clean_total;
    let attack = (den > 0.0).then(|| num / den);

    let scores: Vec<f64> = (0..c)
        .map(|l| a * attacked_by_label[l] + (1.0 - a) * c as f64 * clean_by_label[l])
        .collect();
    let score_total: f64 = scores.iter().sum();
    let labels = (score_total > 0.0).then(|| scores.iter().map(|s| s / score_total).collect());

    // Same order as the optimized decoder: by size, then lexicographic.
    sets.sort_by(|x, y| x.0.len().cmp(&y.0.len()).then_with(|| x.0.cmp(&y.0)));
    let set_total: f64 = sets.iter().map(|s| s.1).sum();
    let attackers = (set_total > 0.0)
        .then(|| sets.into_iter().map(|(s, w)| (s, w / set_total)).collect());

    NaivePosteriors { attack, labels, attackers }
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact zeros equal.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn random_row(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..c)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if row.iter().sum::<f64>() == 0.0 {
        row[rng.random_range(0..c)] = 1.0;
    }
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= total);
    row
}

fn unit_or_endpoint(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

/// A random decoder configuration with `n <= 4`, `m <= 7`, `c <= 3` and at
/// most two attackers, plus a random prediction vector.
pub fn random_case(seed: u64) -> (DecoderConfig, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=7);
    let c = rng.random_range(1..=3);
    let kmax = rng.random_range(0..=n.min(2));
    let code = BitMatrix::from_fn(m, n, |_, _| rng.random_bool(0.5)).unwrap();

    let mut q: Vec<f64> = (0..=kmax).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random() }).collect();
    if q.iter().sum::<f64>() == 0.0 {
        q[kmax] = 1.0;
    }
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);

    let confusions = (0..m)
        .map(|_| ConfusionMatrix::new((0..c).map(|_| random_row(&mut rng, c)).collect()).unwrap())
        .collect();
    let cfg = DecoderConfig {
        attack_rate: unit_or_endpoint(&mut rng),
        success_rate: unit_or_endpoint(&mut rng),
        prior: AttackerPrior::new(q).unwrap(),
        confusions,
        classes: c,
        code,
    };
    let y = (0..m).map(|_| rng.random_range(0..c)).collect();
    (cfg, y)
}

/// Perfect models on `code` with `c` classes, attack prior 1/2, certain
/// attack success and a uniform prior over `0..=kmax` attackers.
pub fn perfect_config(code: BitMatrix, classes: usize, kmax: usize) -> DecoderConfig {
    DecoderConfig {
        attack_rate: 0.5,
        success_rate: 1.0,
        prior: AttackerPrior::uniform(0, kmax).unwrap(),
        confusions: vec![ConfusionMatrix::identity(classes).unwrap(); code.rows()],
        classes,
        code,
    }
}

/// Checks every posterior of the optimized decoder against
/// [`naive_posteriors`], returning a description of the first mismatch.
pub fn compare_with_oracle(cfg: &DecoderConfig, y: &[usize], tol: f64) -> Result<(), String> {
    use backdoor_codes::decoder::decode;
    use backdoor_codes::error::Error;

    let naive = naive_posteriors(cfg, y);
    let fast = match decode(y, cfg, 0.5) {
        Ok(res) => res,
        Err(Error::DegenerateEvidence(_)) if naive.attack.is_none() => return Ok(()),
        Err(e) => return Err(format!("decoder failed: {e}")),
    };
    let attack = naive.attack.ok_or("oracle saw zero evidence, decoder did not")?;
    if !close(fast.attack_posterior, attack, tol) {
        return Err(format!("attack posterior {} vs {attack}", fast.attack_posterior));
    }
    let labels = naive.labels.ok_or("oracle has no label posterior")?;
    for (l, (a, b)) in fast.label_posterior.iter().zip(&labels).enumerate() {
        if !close(*a, *b, tol) {
            return Err(format!("label {l}: {a} vs {b}"));
        }
    }
    match naive.attackers {
        None if fast.attacker_posterior.is_empty() => {}
        None => return Err("decoder has an attacker posterior, oracle does not".into()),
        Some(sets) => {
            if sets.len() != fast.attacker_posterior.len() {
                return Err(format!("{} attacker sets vs {}", fast.attacker_posterior.len(), sets.len()));
            }
            for (h, (members, p)) in fast.attacker_posterior.iter().zip(&sets) {
                if &h.attackers != members || !close(h.probability, *p, tol) {
                    return Err(format!("set {:?}: {} vs {members:?}: {p}", h.attackers, h.probability));
                }
            }
        }
    }
    Ok(())
}
