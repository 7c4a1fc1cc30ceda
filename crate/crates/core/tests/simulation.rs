mod support;

use backdoor_codes::construct::{btc, general_bcc};
use backdoor_codes::decoder::DecoderConfig;
use backdoor_codes::simulator::{run_trials, sample_outputs, Scenario};
use support::perfect_config;

#[test]
fn perfect_tracking_names_every_attacker() {
    let code = btc(1, 3, 8, 0, 64).unwrap();
    let cfg = perfect_config(code, 4, 1);
    let report = run_trials(&cfg, &[1], 300, 11).unwrap();
    assert_eq!(report.decode_accuracy, 1.0);
    assert_eq!(report.tracking_tp.mean, 1.0);
    assert_eq!(report.tracking_fp.mean, 0.0);
}

#[test]
fn failed_attacks_leave_outputs_clean() {
    let code = general_bcc(2, 2, 6).unwrap();
    let cfg = DecoderConfig { success_rate: 0.0, ..perfect_config(code.clone(), 3, 2) };
    let attacked = Scenario { attackers: vec![0, 3], target: 2, label: 1 };
    let y = sample_outputs(&code, &attacked, &cfg.confusions, 0.0, 5).unwrap();
    assert!(y.iter().all(|&q| q == 1));
    let report = run_trials(&cfg, &[2], 100, 3).unwrap();
    assert_eq!(report.majority_accuracy, 1.0);
}

#[test]
fn trials_are_reproducible_from_the_seed() {
    let code = general_bcc(1, 2, 5).unwrap();
    let cfg = DecoderConfig { success_rate: 0.7, ..perfect_config(code, 3, 1) };
    let a = run_trials(&cfg, &[0, 1], 200, 42).unwrap();
    let b = run_trials(&cfg, &[0, 1], 200, 42).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
