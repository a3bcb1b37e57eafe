//! Embedding storage and geometric queries: cosine, pair and triple
//! similarity, phrasal-verb paraphrasing, preposition ranking, and slice
//! spectra of the count tensor.

mod queries;
mod similarity;
mod spectrum;
mod store;

use std::path::{Path, PathBuf};

pub use queries::{
    paraphrase_phrasal_verb, preposition_similarity_table, rank_preposition, ParaphraseCandidate, PrepositionRank,
    SimilarityRow,
};
pub use similarity::{cosine_or_zero, cosine_similarity, pair_similarity, triple_or_zero, triple_similarity};
pub use spectrum::slice_spectrum;
pub use store::{load_embeddings, save_embeddings, EmbeddingStore, NO_PREP_TOKEN};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("both context vectors are zero")]
    EmptyContext,
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("`{0}` is not in the preposition roster")]
    NotInRoster(String),
    #[error("store has no preposition roster")]
    EmptyRoster,
    #[error("store has no `{}` vector", NO_PREP_TOKEN)]
    MissingConstVector,
    #[error("no candidates given")]
    NoCandidates,
    #[error("slice {0} is empty")]
    EmptySlice(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("duplicate token `{0}`")]
    DuplicateToken(String),
    #[error("non-finite value in vector for `{0}`")]
    NonFinite(String),
    #[error(
        "factor shapes do not match vocabulary: {words} words / {prepositions} prepositions, \
         U has {u_rows} rows, Q has {q_rows}"
    )]
    ShapeMismatch {
        words: usize,
        prepositions: usize,
        u_rows: usize,
        q_rows: usize,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EmbeddingError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
