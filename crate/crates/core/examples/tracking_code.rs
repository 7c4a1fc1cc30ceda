//! A tracking code, which also names the attackers, decoded under perfect
//! models.

use backdoor_codes::confusion::ConfusionMatrix;
use backdoor_codes::construct::btc;
use backdoor_codes::decoder::{AttackerPrior, Decoder, DecoderConfig};
use backdoor_codes::simulator::{noiseless_outputs, Scenario};
use backdoor_codes::verify::is_btc;

fn main() -> backdoor_codes::error::Result<()> {
    let (k, r, n, classes) = (2, 2, 8, 4);
    let code = btc(k, r, n, 0, 64)?;
    println!("BTC({k},{r},{n}) with {} models, valid: {}", code.rows(), is_btc(&code, k, r)?);

    let cfg = DecoderConfig {
        attack_rate: 0.5,
        success_rate: 1.0,
        prior: AttackerPrior::uniform(0, k)?,
        confusions: vec![ConfusionMatrix::identity(classes)?; code.rows()],
        classes,
        code: code.clone(),
    };
    let decoder = Decoder::new(&cfg)?;
    let scenario = Scenario { attackers: vec![2, 5], target: 3, label: 1 };
    let y = noiseless_outputs(&code, &scenario)?;
    let res = decoder.decode(&y, 0.5)?;
    println!("outputs {y:?}");
    println!("label {} attackers {:?}", res.decoded_label, res.decoded_attackers);
    Ok(())
}
