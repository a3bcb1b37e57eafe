//! Corpus processing: tokenization, vocabulary, and the third-order
//! (word, word, preposition) co-occurrence count tensor.

mod count;
mod tensor;
mod tokenize;
mod vocab;

use std::path::{Path, PathBuf};

pub use count::{count_extra_slice, count_preposition_slices, count_shard, count_tensor};
pub use tensor::{load_tensor, merge_counts, save_tensor, Index, SparseCountTensor};
pub use tokenize::{tokenize_sentences, tokenize_str};
pub use vocab::{Slot, Vocabulary};

/// Default token distance for preposition windows.
pub const DEFAULT_WINDOW: usize = 3;
/// Default vocabulary frequency floor.
pub const DEFAULT_MIN_COUNT: u64 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("tensor shape mismatch: (N, K, t) = {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },
    #[error("nothing to merge")]
    EmptyMerge,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn save_vocabulary(vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    std::fs::write(path, vocab.to_text()).map_err(|e| CorpusError::io(path, e))
}

pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<Vocabulary, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    Vocabulary::from_text(&text)
}
