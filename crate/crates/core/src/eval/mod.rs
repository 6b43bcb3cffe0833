//! Metrics, experiment cells and result tables.

mod data;
mod experiment;
mod grid;
mod metrics;

pub use data::{classify_file_name, expected_file_name, load_corpus, CorpusKey, CorpusStore, DataIndex, DEFAULT_GENRE};
pub use experiment::{
    combination_label, derive_seed, evaluate, grid_specs, predict_corpus, train_combinations, EpochRecord, EvalReport,
    ExperimentOutcome, ExperimentReport, ExperimentRunner, ExperimentSpec, ModelKind, Protocol, RunReport, Target,
    DEFAULT_FEW_SHOT,
};
pub use grid::{column_marks, format_score, read_reports_jsonl, write_reports_jsonl, Grid, GridCell, Mark};
pub use metrics::{f1_for_class, macro_f1, ConfusionCounts};

pub const SCHEMA_VERSION: u32 = 1;
