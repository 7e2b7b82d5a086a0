//! Regenerates the bundled synthetic corpus under `fixtures/corpus`.
//!
//! ```bash
//! cargo run -p score-expansion --example make_fixtures
//! ```

use std::path::PathBuf;

use score_expansion::fixtures::{write_corpus, FIXTURE_PIECES};

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus"));
    let annotations = write_corpus(&dir, FIXTURE_PIECES)?;
    for a in &annotations {
        println!("{:<14} boundary at bar {}", a.file, a.boundary_bar);
    }
    println!("wrote {} pieces to {}", annotations.len(), dir.display());
    Ok(())
}
