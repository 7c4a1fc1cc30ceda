//! Smallest detection and correction codes for a few attacker budgets.

use backdoor_codes::construct::{minimal_bcc, minimal_bdc};
use backdoor_codes::verify::{is_bcc, is_bdc};

fn main() -> backdoor_codes::error::Result<()> {
    for (k, r) in [(1, 1), (1, 3), (2, 2), (3, 2)] {
        let detect = minimal_bdc(k, r)?;
        let correct = minimal_bcc(k, r)?;
        println!(
            "k={k} r={r}: detection {}x{} (valid: {}), correction {}x{} (valid: {})",
            detect.rows(),
            detect.cols(),
            is_bdc(&detect, k, r)?,
            correct.rows(),
            correct.cols(),
            is_bcc(&correct, k, r)?,
        );
    }
    println!("\ncorrection code for k=2 r=2:\n{}", minimal_bcc(2, 2)?);
    Ok(())
}
