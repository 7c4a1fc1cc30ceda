//! Exhaustive search for the smallest codes on a handful of users.

use backdoor_codes::search::exhaustive_min;
use backdoor_codes::verify::CodeKind;

fn main() -> backdoor_codes::error::Result<()> {
    for (kind, k, r, n) in [(CodeKind::Bdc, 2, 2, 4), (CodeKind::Bcc, 2, 2, 4), (CodeKind::Bcc, 1, 2, 5)] {
        let found = exhaustive_min(kind, k, r, n, 8)?;
        match found.min_rows {
            Some(m) => {
                println!("{kind}(k={k},r={r},n={n}): {m} rows, {} class(es)", found.codes.len());
                println!("{}", found.codes[0]);
            }
            None => println!("{kind}(k={k},r={r},n={n}): none within 8 rows"),
        }
    }
    Ok(())
}
