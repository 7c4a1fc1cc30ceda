//! Correction codes whose model count depends on k and r but not on the
//! number of users.

use backdoor_codes::construct::{general_bcc, general_bcc_plan};
use backdoor_codes::verify::is_bcc;

fn main() -> backdoor_codes::error::Result<()> {
    let (k, r) = (2, 4);
    for n in [6, 8, 12, 24, 100] {
        let plan = general_bcc_plan(k, r, n)?;
        let h = general_bcc(k, r, n)?;
        println!(
            "n={n:>3}: {} models, {} copies of a row-weight {} base, BCC: {}",
            h.rows(),
            plan.copies,
            plan.base_r,
            is_bcc(&h, k, r)?
        );
    }
    Ok(())
}
