//! Map German, Spanish and French vectors into the English space with
//! Procrustes plus CSLS refinement, then measure translation precision.
//!
//! cargo run --example align_spaces

use std::collections::BTreeMap;
use std::path::PathBuf;

use cwi_transfer::alignment::{chain_to_pivot, induction_precision, BilingualDictionary, RefinementConfig};
use cwi_transfer::corpus::Language;
use cwi_transfer::embeddings::EmbeddingTable;

fn main() -> cwi_transfer::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut tables = BTreeMap::new();
    let mut dicts = BTreeMap::new();
    for lang in Language::ALL {
        let table = EmbeddingTable::load_path(&root.join(format!("embeddings/{}.vec", lang.iso())), lang, 200_000)?;
        tables.insert(lang, table.normalize().0);
        if lang != Language::En {
            let path = root.join(format!("dictionaries/en-{}.txt", lang.iso()));
            dicts.insert(lang, BilingualDictionary::load_path(&path, Language::En, lang)?);
        }
    }

    let config = RefinementConfig::default();
    let space = chain_to_pivot(&tables, &dicts, &config)?;
    for (lang, map) in &space.maps {
        let r = &map.fit_report;
        let to_en = dicts[lang].reversed();
        let p1 = induction_precision(map, &tables[lang], &tables[&Language::En], &to_en, 1, config.k_csls)?;
        println!(
            "{} -> EN: {} anchors, mean cosine {:.4}, |W'W-I| {:.1e}, P@1 {:.3}",
            lang.code(),
            r.anchor_count,
            r.mean_cosine_after_fit,
            map.orthogonality_error(),
            p1
        );
    }
    Ok(())
}
