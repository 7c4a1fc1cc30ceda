mod support;

use backdoor_codes::confusion::ConfusionMatrix;
use backdoor_codes::construct::{btc, general_bcc, minimal_bcc};
use backdoor_codes::decoder::{attacker_posterior, decode, label_posterior, Decoder, DecoderConfig};
use backdoor_codes::matrix::BitMatrix;
use backdoor_codes::simulator::{noiseless_outputs, Scenario};
use itertools::Itertools;
use proptest::prelude::*;
use support::{compare_with_oracle, perfect_config, random_case};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_naive_oracle(seed in any::<u64>()) {
        let (cfg, y) = random_case(seed);
        if let Err(msg) = compare_with_oracle(&cfg, &y, 1e-12) {
            prop_assert!(false, "seed {seed}: {msg}");
        }
    }

    #[test]
    fn posteriors_are_normalized(seed in any::<u64>()) {
        let (cfg, y) = random_case(seed);
        if let Ok(res) = decode(&y, &cfg, 0.5) {
            prop_assert!((res.label_posterior.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if !res.attacker_posterior.is_empty() {
                let total: f64 = res.attacker_posterior.iter().map(|h| h.probability).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
            prop_assert!((0.0..=1.0).contains(&res.attack_posterior));
        }
    }

    #[test]
    fn relabeling_classes_permutes_label_posterior(seed in any::<u64>(), shift in 1usize..3) {
        let (cfg, y) = random_case(seed);
        let c = cfg.classes;
        let pi = |q: usize| (q + shift) % c;
        let confusions = cfg
            .confusions
            .iter()
            .map(|m| {
                let mut rows = vec![vec![0.0; c]; c];
                for a in 0..c {
                    for b in 0..c {
                        rows[pi(a)][pi(b)] = m.prob(a, b);
                    }
                }
                ConfusionMatrix::new(rows).unwrap()
            })
            .collect();
        let moved = DecoderConfig { confusions, ..cfg.clone() };
        let y_moved: Vec<usize> = y.iter().map(|&q| pi(q)).collect();
        match (label_posterior(&y, &cfg), label_posterior(&y_moved, &moved)) {
            (Ok(before), Ok(after)) => {
                for l in 0..c {
                    prop_assert!(support::close(before[l], after[pi(l)], 1e-12));
                }
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "only one side was degenerate"),
        }
    }

    #[test]
    fn fewer_attackers_win_ties(s in 0.05f64..1.0, stay in 0.5f64..1.0) {
        // Users 0 and 1 feed only model 0, so {0}, {1} and {0,1} produce the
        // same likelihood; the prior splits size-1 mass over 4 sets and
        // size-2 mass over 6.
        let code = BitMatrix::from_row_strs(&["1100", "0010", "0001"]).unwrap();
        let noisy = ConfusionMatrix::new(vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]]).unwrap();
        let cfg = DecoderConfig {
            success_rate: s,
            confusions: vec![noisy; 3],
            ..perfect_config(code, 2, 2)
        };
        let sets = attacker_posterior(&[1, 0, 0], &cfg).unwrap();
        let p = |members: &[usize]| sets.iter().find(|h| h.attackers == members).unwrap().probability;
        prop_assert!(p(&[0]) > p(&[0, 1]));
        prop_assert!((p(&[0]) - p(&[1])).abs() < 1e-15);
    }
}

/// Every nonempty attacker set of size at most `k`, every label and every
/// other target, with the outputs perfect models would give.
fn idealized_cases(code: &BitMatrix, k: usize, c: usize) -> Vec<(Scenario, Vec<usize>)> {
    let n = code.cols();
    let mut out = Vec::new();
    for size in 1..=k {
        for attackers in (0..n).combinations(size) {
            for label in 0..c {
                for target in (0..c).filter(|&t| t != label) {
                    let s = Scenario { attackers: attackers.clone(), target, label };
                    let y = noiseless_outputs(code, &s).unwrap();
                    out.push((s, y));
                }
            }
        }
    }
    out
}

fn bcc_catalogue() -> Vec<(String, usize, BitMatrix)> {
    let mut codes = Vec::new();
    for k in 1..=2 {
        for r in 1..=(8 - k) {
            if minimal_bcc(k, r).unwrap().cols() <= 8 {
                codes.push((format!("minimal_bcc({k},{r})"), k, minimal_bcc(k, r).unwrap()));
            }
            for n in (k + r)..=8 {
                codes.push((format!("general_bcc({k},{r},{n})"), k, general_bcc(k, r, n).unwrap()));
            }
        }
    }
    codes
}

#[test]
fn correction_codes_recover_the_label_under_perfect_models() {
    for (name, k, code) in bcc_catalogue() {
        for attack_rate in [0.1, 0.5, 0.9] {
            let cfg = DecoderConfig { attack_rate, ..perfect_config(code.clone(), 3, k) };
            let decoder = Decoder::new(&cfg).unwrap();
            for (s, y) in idealized_cases(&code, k, 3) {
                let res = decoder.decode(&y, 0.5).unwrap();
                assert_eq!(res.decoded_label, s.label, "{name}, A={attack_rate}, {s:?}, y={y:?}");
            }
        }
    }
}

#[test]
fn tracking_codes_recover_the_attackers_under_perfect_models() {
    for (k, r, n) in [(1, 2, 5), (1, 3, 6), (2, 2, 6), (2, 3, 7)] {
        let code = btc(k, r, n, 0, 64).unwrap();
        let cfg = perfect_config(code.clone(), 3, k);
        let decoder = Decoder::new(&cfg).unwrap();
        for (s, y) in idealized_cases(&code, k, 3) {
            let res = decoder.decode(&y, 0.5).unwrap();
            assert_eq!(res.decoded_label, s.label);
            assert_eq!(res.decoded_attackers, s.attackers, "btc({k},{r},{n}), y={y:?}");
        }
    }
}

#[test]
fn two_attackers_can_mislead_a_single_attacker_code() {
    // Built for one attacker; two can make the wrong label the better
    // explanation.
    let code = minimal_bcc(1, 2).unwrap();
    let cfg = perfect_config(code.clone(), 3, 2);
    let decoder = Decoder::new(&cfg).unwrap();
    let fooled = idealized_cases(&code, 2, 3)
        .into_iter()
        .filter(|(s, _)| s.attackers.len() == 2)
        .any(|(s, y)| decoder.decode(&y, 0.5).unwrap().decoded_label != s.label);
    assert!(fooled);
}
