//! From-scratch bidirectional LSTM token classifier.

pub mod checkpoint;
mod classifier;
mod model;
mod optim;
mod train;

pub use classifier::{
    aggregate_span, BiLstmClassifier, ComplexityClassifier, ConstantClassifier, EchoGold, Prediction, TokenEmbedder,
};
pub use model::{loss, ForwardCache, LstmDirectionParams, TaggerModel, TaggerParams, PROB_CLAMP};
pub use optim::{rmsprop_step, RmsProp, RmsPropConfig};
pub use train::{
    batch_gradients, encode_sequences, train, train_encoded, BatchGradients, EncodedSequence, EpochLog, TrainOutcome,
    TrainingConfig,
};
