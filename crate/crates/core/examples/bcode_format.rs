//! Writing a code to the text format and reading it back.

use backdoor_codes::construct::minimal_bcc;
use backdoor_codes::format::{CodeFile, FileKind};
use backdoor_codes::verify::CodeKind;

fn main() -> backdoor_codes::error::Result<()> {
    let file = CodeFile::new(FileKind::Code(CodeKind::Bcc), 1, 2, minimal_bcc(1, 2)?);
    let text = file.to_string();
    print!("{text}");
    let back = CodeFile::parse(&text)?;
    println!("round trip equal: {}", back == file);
    Ok(())
}
