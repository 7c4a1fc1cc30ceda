//! Monte Carlo accuracy of a correction code under skewed user data.

use backdoor_codes::construct::general_bcc;
use backdoor_codes::decoder::AttackerPrior;
use backdoor_codes::simulator::{sweep, DataSplit, SweepConfig, DEFAULT_KAPPA, DEFAULT_MAX_ACCURACY};

fn main() -> backdoor_codes::error::Result<()> {
    let code = general_bcc(2, 4, 12)?;
    for split in [DataSplit::Iid, DataSplit::Dirichlet(0.1)] {
        let cfg = SweepConfig {
            split,
            classes: 10,
            trials: 300,
            runs: 3,
            attacker_counts: vec![0, 1, 2, 3],
            success_rate: 0.99,
            attack_rate: 0.5,
            prior: AttackerPrior::uniform(0, 3)?,
            a_max: DEFAULT_MAX_ACCURACY,
            kappa: DEFAULT_KAPPA,
            seed: 1,
        };
        let report = sweep(&code, "bcc-2-4-12", &cfg)?;
        println!("split {split}");
        for p in &report.points {
            println!(
                "  attackers={} decode {:.3}±{:.3} majority {:.3}±{:.3}",
                p.attackers, p.decode_accuracy.mean, p.decode_accuracy.sd, p.majority_accuracy.mean, p.majority_accuracy.sd
            );
        }
    }
    Ok(())
}
