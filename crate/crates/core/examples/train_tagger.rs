//! Train the BiLSTM tagger on Spanish, evaluate zero-shot on German, and
//! round-trip the checkpoint.
//!
//! cargo run --release --example train_tagger

use std::collections::BTreeMap;
use std::path::PathBuf;

use cwi_transfer::alignment::{chain_to_pivot, BilingualDictionary, RefinementConfig};
use cwi_transfer::corpus::{to_sequences, Genre, Language, Split};
use cwi_transfer::embeddings::{EmbeddingTable, SharedSpace};
use cwi_transfer::eval::{evaluate, CorpusStore, DataIndex};
use cwi_transfer::tagger::{checkpoint, train, BiLstmClassifier, TaggerModel, TrainingConfig};

fn main() -> cwi_transfer::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut tables = BTreeMap::new();
    let mut dicts = BTreeMap::new();
    for lang in [Language::En, Language::De, Language::Es] {
        let t = EmbeddingTable::load_path(&root.join(format!("embeddings/{}.vec", lang.iso())), lang, 200_000)?;
        tables.insert(lang, t.normalize().0);
        if lang != Language::En {
            let path = root.join(format!("dictionaries/en-{}.txt", lang.iso()));
            dicts.insert(lang, BilingualDictionary::load_path(&path, Language::En, lang)?);
        }
    }
    let space = SharedSpace::new(
        chain_to_pivot(&tables, &dicts, &RefinementConfig::default())?
            .tables
            .into_values(),
    )?;

    let store = CorpusStore::load(&DataIndex::discover(&root.join("data"))?)?;
    let sequences = to_sequences(&store.language_train(Language::Es)?)?;
    let config = TrainingConfig {
        learning_rate: 1e-2,
        batch_size: 8,
        hidden_size: 16,
        ..TrainingConfig::default()
    };
    let model = TaggerModel::init(space.dim().unwrap_or(0), config.hidden_size, 0)?;
    let outcome = train(model, &sequences, &space, &config)?;
    for log in &outcome.log {
        println!("epoch {} loss {:.4}", log.epoch, log.mean_loss);
    }

    let test = store.get((Language::De, Genre::Wikipedia, Split::Test))?;
    let report = evaluate(&BiLstmClassifier::new(&outcome.model, &space), test)?;
    println!("ES -> DE test macro-F1 {:.3}", report.macro_f1);

    let path = std::env::temp_dir().join("cwi_example_model.json");
    checkpoint::save(&outcome.model, &path)?;
    let restored = checkpoint::load(&path)?;
    println!(
        "checkpoint {} restores identically: {}",
        path.display(),
        restored.params() == outcome.model.params()
    );
    Ok(())
}
