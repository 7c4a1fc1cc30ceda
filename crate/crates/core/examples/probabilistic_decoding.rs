//! Posterior decoding with imperfect models on a three-model code.

use backdoor_codes::confusion::ConfusionMatrix;
use backdoor_codes::decoder::{decode, majority_vote, AttackerPrior, DecoderConfig};
use backdoor_codes::matrix::BitMatrix;

fn main() -> backdoor_codes::error::Result<()> {
    let code = BitMatrix::from_row_strs(&["10", "01", "11"])?;
    let noisy = ConfusionMatrix::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]])?;
    let cfg = DecoderConfig {
        attack_rate: 0.5,
        success_rate: 0.95,
        prior: AttackerPrior::uniform(0, 1)?,
        confusions: vec![noisy; 3],
        classes: 2,
        code,
    };
    for y in [[0, 0, 0], [1, 0, 1], [0, 1, 1]] {
        let res = decode(&y, &cfg, 0.5)?;
        println!(
            "outputs {y:?}: attack {:.3}, label {} (posterior {:.3}), majority {}, attackers {:?}",
            res.attack_posterior,
            res.decoded_label,
            res.label_posterior[res.decoded_label],
            majority_vote(&y, 2),
            res.decoded_attackers,
        );
    }
    Ok(())
}
