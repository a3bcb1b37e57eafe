//! Decision tree, feed-forward network and evaluation metrics shared by the
//! selection and attachment tasks.

mod fnn;
mod metrics;
mod tree;

pub use fnn::{train_fnn, FeedForwardNet, FnnHyper, FnnTrace, Gradients};
pub use metrics::{accuracy, edit_counts, precision_recall_f1, EditCounts, Prf};
pub use tree::{train_decision_tree, DecisionTree, Node, TreeParams, TreePrediction};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("no training rows")]
    Empty,
    #[error("expected {expected} features, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

impl LearnError {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        LearnError::Format {
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn check_row(row: &[f64], expected: usize) -> Result<(), LearnError> {
    if row.len() != expected {
        return Err(LearnError::Arity {
            expected,
            found: row.len(),
        });
    }
    if row.iter().any(|x| !x.is_finite()) {
        return Err(LearnError::NonFinite);
    }
    Ok(())
}

pub(crate) fn check_dataset(rows: &[Vec<f64>], labels: &[usize], classes: usize) -> Result<usize, LearnError> {
    if rows.is_empty() {
        return Err(LearnError::Empty);
    }
    if rows.len() != labels.len() {
        return Err(LearnError::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    let arity = rows[0].len();
    for r in rows {
        check_row(r, arity)?;
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(LearnError::InvalidLabel { label, classes });
    }
    Ok(arity)
}

/// Parses whitespace-separated floats, reporting `line` on failure.
pub(crate) fn parse_floats(text: &str, line: usize) -> Result<Vec<f64>, LearnError> {
    text.split_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| LearnError::format(line, format!("`{s}`: {e}")))
        })
        .collect()
}
