use super::similarity::{cosine_or_zero, cosine_similarity};
use super::{EmbeddingError, EmbeddingStore};
use crate::linalg::{distance2, hadamard, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub left: String,
    pub right: String,
    pub cosine: f64,
}

/// Cosine of each preposition pair. With `centered`, the mean of the store's
/// roster vectors is subtracted from both sides first.
pub fn preposition_similarity_table(
    store: &EmbeddingStore,
    pairs: &[(String, String)],
    centered: bool,
) -> Result<Vec<SimilarityRow>, EmbeddingError> {
    let mean = if centered {
        let roster = store.roster();
        if roster.is_empty() {
            return Err(EmbeddingError::EmptyRoster);
        }
        store.average(roster.iter().map(String::as_str))
    } else {
        None
    };
    let prepare = |tok: &str| -> Result<Vec<f64>, EmbeddingError> {
        let v = store.require(tok)?;
        Ok(match &mean {
            Some(m) => v.iter().zip(m).map(|(a, b)| a - b).collect(),
            None => v.to_vec(),
        })
    };
    pairs
        .iter()
        .map(|(l, r)| {
            let (a, b) = (prepare(l)?, prepare(r)?);
            Ok(SimilarityRow {
                left: l.clone(),
                right: r.clone(),
                cosine: cosine_similarity(&a, &b)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParaphraseCandidate {
    pub verb: String,
    pub distance: f64,
}

/// Ranks candidate verbs `v` by `‖u_v ⊙ q_const − u_head ⊙ q_prep‖₂`,
/// closest first; equal distances keep candidate order.
pub fn paraphrase_phrasal_verb(
    head: &str,
    prep: &str,
    candidates: &[String],
    store: &EmbeddingStore,
) -> Result<Vec<ParaphraseCandidate>, EmbeddingError> {
    if candidates.is_empty() {
        return Err(EmbeddingError::NoCandidates);
    }
    let target = hadamard(store.require(head)?, store.require(prep)?);
    let q_const = store.q_const()?;
    let mut ranked = candidates
        .iter()
        .map(|v| {
            let composed = hadamard(store.require(v)?, q_const);
            Ok(ParaphraseCandidate {
                verb: v.clone(),
                distance: distance2(&composed, &target),
            })
        })
        .collect::<Result<Vec<_>, EmbeddingError>>()?;
    ranked.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepositionRank {
    /// 1-based position among the roster by descending cosine.
    pub rank: usize,
    pub cosine: f64,
}

/// Averages the nonzero context vectors, scores every roster preposition by
/// cosine against the average and reports where `observed` lands. Ties go to
/// the preposition earlier in the roster.
pub fn rank_preposition(
    context_vectors: &[Vec<f64>],
    observed: &str,
    store: &EmbeddingStore,
) -> Result<PrepositionRank, EmbeddingError> {
    let roster = store.roster();
    let observed_pos = roster
        .iter()
        .position(|p| p == observed)
        .ok_or_else(|| EmbeddingError::NotInRoster(observed.to_string()))?;
    let live: Vec<&Vec<f64>> = context_vectors.iter().filter(|v| norm2(v) > 0.0).collect();
    if live.is_empty() {
        return Err(EmbeddingError::EmptyContext);
    }
    let mut avg = vec![0.0; store.dim()];
    for v in &live {
        avg.iter_mut().zip(v.iter()).for_each(|(a, x)| *a += x);
    }
    avg.iter_mut().for_each(|a| *a /= live.len() as f64);

    let scores: Vec<f64> = roster
        .iter()
        .map(|p| store.require(p).map(|v| cosine_or_zero(v, &avg)))
        .collect::<Result<_, _>>()?;
    let own = scores[observed_pos];
    let ahead = scores
        .iter()
        .enumerate()
        .filter(|&(n, &s)| s > own || (s == own && n < observed_pos))
        .count();
    Ok(PrepositionRank {
        rank: ahead + 1,
        cosine: own,
    })
}
