//! Load a CWI TSV file, clean it, and look at the token sequences built from it.
//!
//! cargo run --example corpus_stats [-- path/to/German_Train.tsv]

use std::path::PathBuf;

use cwi_transfer::corpus::{preprocess, stats, to_sequences};
use cwi_transfer::eval::{classify_file_name, load_corpus};

fn main() -> cwi_transfer::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/data/German_Train.tsv"));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let (language, genre, split) =
        classify_file_name(name).ok_or_else(|| cwi_transfer::Error::invalid(format!("unrecognised file {name}")))?;

    let raw = load_corpus(&path, language, genre, split)?;
    let (clean, report) = preprocess(&raw);
    let st = stats(&clean);
    println!(
        "{name}: {} instances, {} complex, {} non-complex",
        st.instances, st.complex, st.noncomplex
    );
    println!("dropped by cleaning: {}", report.dropped.len());

    let sequences = to_sequences(&clean)?;
    println!("{} sentences", sequences.len());
    if let Some(seq) = sequences.first() {
        for (tok, label) in seq.tokens.iter().zip(&seq.labels) {
            println!("  {:<20} {label}", tok.text);
        }
    }
    Ok(())
}
