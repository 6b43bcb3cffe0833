//! Read a fastText-style .vec file and query nearest neighbours by cosine.
//!
//! cargo run --example embeddings

use std::path::PathBuf;

use cwi_transfer::alignment::cosine;
use cwi_transfer::corpus::Language;
use cwi_transfer::embeddings::EmbeddingTable;

fn main() -> cwi_transfer::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/embeddings/es.vec");
    let table = EmbeddingTable::load_path(&path, Language::Es, 200_000)?;
    let (unit, zero_rows) = table.normalize();
    println!("{} words, dim {}, {zero_rows} zero rows", unit.len(), unit.dim());

    let query = unit.word(5).to_string();
    let q = unit.lookup(&query);
    let mut scored: Vec<(f64, &str)> = unit
        .rows()
        .filter(|(w, _)| *w != query)
        .map(|(w, v)| (cosine(&q.vector, v), w))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("neighbours of {query}:");
    for (sim, word) in scored.iter().take(5) {
        println!("  {word:<16} {sim:.3}");
    }

    let missing = unit.lookup("no-such-word");
    println!(
        "unknown word -> oov={}, all zeros={}",
        missing.oov,
        missing.vector.iter().all(|&x| x == 0.0)
    );
    Ok(())
}
