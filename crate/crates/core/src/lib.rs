//! GloVe word embeddings with pluggable co-occurrence weighting.
//!
//! The pipeline runs corpus → vocabulary → sparse co-occurrence counts →
//! weighted least-squares training → embedding export → analogy evaluation.
//! The weighting applied to each co-occurrence term is selected with
//! [`WeightingSpec`]: the power-clip function `min(1, (x/x_max)^alpha)` or the
//! exponential saturation `1 - exp(-lambda x)`.

pub mod cooccur;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod eval;
pub mod trainer;
pub mod weighting;

pub use cooccur::{CooccurRecord, CooccurSet, WindowConfig};
pub use corpus::{TokenIdStream, Vocabulary};
pub use embeddings::{CombineMode, EmbeddingSet};
pub use error::{Error, Result};
pub use eval::{AnalogyQuestion, EvalReport, QuestionKind};
pub use trainer::{LossHistory, ModelParams, TrainConfig};
pub use weighting::WeightingSpec;
