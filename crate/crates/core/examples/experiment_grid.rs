//! Run the full 7 x 6 transfer grid with a baseline model and print the
//! dev/test tables. Pass `bilstm` to train real models on aligned vectors
//! (align them first with `cwi align`, then point CWI_ALIGNED at the output).
//!
//! cargo run --release --example experiment_grid [-- bilstm]

use std::path::PathBuf;

use cwi_transfer::corpus::Language;
use cwi_transfer::embeddings::SharedSpace;
use cwi_transfer::eval::{grid_specs, CorpusStore, DataIndex, ExperimentRunner, Grid, ModelKind};
use cwi_transfer::tagger::TrainingConfig;

fn main() -> cwi_transfer::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = CorpusStore::load(&DataIndex::discover(&root.join("data"))?)?;
    let bilstm = std::env::args().nth(1).as_deref() == Some("bilstm");
    let space = match (bilstm, std::env::var_os("CWI_ALIGNED")) {
        (true, Some(dir)) => Some(SharedSpace::load_dir(&PathBuf::from(dir), &Language::ALL, 200_000)?),
        (true, None) => {
            return Err(cwi_transfer::Error::invalid(
                "set CWI_ALIGNED to a directory of aligned .vec files",
            ))
        }
        _ => None,
    };
    let model = if bilstm {
        ModelKind::Bilstm
    } else {
        ModelKind::ConstantZero
    };
    let training = TrainingConfig {
        learning_rate: 1e-2,
        batch_size: 8,
        hidden_size: 16,
        ..TrainingConfig::default()
    };
    let runner = ExperimentRunner::new(&store, space.as_ref(), training);

    let specs = grid_specs(1, 0, model);
    let mut reports = Vec::new();
    for result in runner.run_all(&specs) {
        reports.push(result?.report);
    }
    print!("{}", Grid::from_reports(&reports)?.render_text());
    Ok(())
}
