use super::LearnError;

/// Edit-level confusion counts for a correction task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Prf {
    pub fn from_counts(c: EditCounts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }
}

/// Counts edits the way correction shared tasks do: a system edit is any
/// prediction that differs from the observed token, a needed edit is any gold
/// token that differs from it.
///
/// * TP: system edit that lands on the gold token.
/// * FP: system edit that does not.
/// * FN: needed edit the system missed or got wrong.
pub fn edit_counts<T: PartialEq>(observed: &[T], predicted: &[T], gold: &[T]) -> Result<EditCounts, LearnError> {
    for other in [predicted.len(), gold.len()] {
        if other != observed.len() {
            return Err(LearnError::LengthMismatch {
                left: observed.len(),
                right: other,
            });
        }
    }
    let mut c = EditCounts::default();
    for ((o, p), g) in observed.iter().zip(predicted).zip(gold) {
        let edited = p != o;
        let needed = g != o;
        let hit = p == g;
        if edited && hit {
            c.tp += 1;
        }
        if edited && !hit {
            c.fp += 1;
        }
        if needed && !hit {
            c.fn_ += 1;
        }
    }
    Ok(c)
}

pub fn precision_recall_f1<T: PartialEq>(observed: &[T], predicted: &[T], gold: &[T]) -> Result<Prf, LearnError> {
    edit_counts(observed, predicted, gold).map(Prf::from_counts)
}

pub fn accuracy<T: PartialEq>(predicted: &[T], gold: &[T]) -> Result<f64, LearnError> {
    if predicted.len() != gold.len() {
        return Err(LearnError::LengthMismatch {
            left: predicted.len(),
            right: gold.len(),
        });
    }
    if predicted.is_empty() {
        return Err(LearnError::Empty);
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / predicted.len() as f64)
}
