use super::{CorpusError, Slot, SparseCountTensor, Vocabulary};

fn check_window(t: usize) -> Result<(), CorpusError> {
    if t == 0 {
        return Err(CorpusError::InvalidParameter("window must be >= 1".into()));
    }
    Ok(())
}

/// Preposition slices: every occurrence of `p_k` contributes all ordered pairs
/// of distinct word positions within distance `t` of it.
fn count_prep_windows(tensor: &mut SparseCountTensor, slots: &[Slot], t: usize) {
    let mut window: Vec<usize> = Vec::with_capacity(2 * t);
    for (pos, slot) in slots.iter().enumerate() {
        let Slot::Prep(k) = *slot else { continue };
        window.clear();
        let lo = pos.saturating_sub(t);
        let hi = (pos + t).min(slots.len() - 1);
        for s in &slots[lo..=hi] {
            if let Slot::Word(id) = *s {
                window.push(id);
            }
        }
        for (a, &wa) in window.iter().enumerate() {
            for (b, &wb) in window.iter().enumerate() {
                if a != b {
                    tensor.add(wa, wb, k, 1);
                }
            }
        }
    }
}

/// Marks positions lying within distance `t` of some preposition occurrence.
fn near_preposition(slots: &[Slot], t: usize) -> Vec<bool> {
    let mut near = vec![false; slots.len()];
    for (pos, slot) in slots.iter().enumerate() {
        if matches!(slot, Slot::Prep(_)) {
            let lo = pos.saturating_sub(t);
            let hi = (pos + t).min(slots.len() - 1);
            near[lo..=hi].iter_mut().for_each(|n| *n = true);
        }
    }
    near
}

/// Extra slice: ordered word pairs within `2t` where at least one side is
/// farther than `t` from every preposition in the sentence.
fn count_outside_pairs(tensor: &mut SparseCountTensor, slots: &[Slot], t: usize) {
    let extra = tensor.extra_slice();
    let near = near_preposition(slots, t);
    let span = 2 * t;
    for (a, sa) in slots.iter().enumerate() {
        let Slot::Word(wa) = *sa else { continue };
        let lo = a.saturating_sub(span);
        let hi = (a + span).min(slots.len() - 1);
        for b in lo..=hi {
            if b == a {
                continue;
            }
            let Slot::Word(wb) = slots[b] else { continue };
            if !(near[a] && near[b]) {
                tensor.add(wa, wb, extra, 1);
            }
        }
    }
}

fn empty_like(vocab: &Vocabulary, t: usize) -> SparseCountTensor {
    SparseCountTensor::new(vocab.num_words(), vocab.num_prepositions(), t)
}

/// Counts slices `0..K` only; the extra slice is left empty.
pub fn count_preposition_slices(
    sentences: &[Vec<String>],
    vocab: &Vocabulary,
    t: usize,
) -> Result<SparseCountTensor, CorpusError> {
    check_window(t)?;
    let mut tensor = empty_like(vocab, t);
    for s in sentences {
        count_prep_windows(&mut tensor, &vocab.slots(s), t);
    }
    Ok(tensor)
}

/// Counts slice `K` only.
pub fn count_extra_slice(
    sentences: &[Vec<String>],
    vocab: &Vocabulary,
    t: usize,
) -> Result<SparseCountTensor, CorpusError> {
    check_window(t)?;
    let mut tensor = empty_like(vocab, t);
    for s in sentences {
        count_outside_pairs(&mut tensor, &vocab.slots(s), t);
    }
    Ok(tensor)
}

/// Counts all `K+1` slices of one shard of sentences.
pub fn count_shard(sentences: &[Vec<String>], vocab: &Vocabulary, t: usize) -> Result<SparseCountTensor, CorpusError> {
    check_window(t)?;
    let mut tensor = empty_like(vocab, t);
    for s in sentences {
        let slots = vocab.slots(s);
        count_prep_windows(&mut tensor, &slots, t);
        count_outside_pairs(&mut tensor, &slots, t);
    }
    Ok(tensor)
}

/// Full tensor, counted over `shards` disjoint contiguous sentence ranges
/// and merged. The result does not depend on the shard count.
pub fn count_tensor(
    sentences: &[Vec<String>],
    vocab: &Vocabulary,
    t: usize,
    shards: usize,
) -> Result<SparseCountTensor, CorpusError> {
    check_window(t)?;
    let shards = shards.max(1);
    if shards == 1 || sentences.len() < 2 {
        return count_shard(sentences, vocab, t);
    }
    let chunk = sentences.len().div_ceil(shards);
    let chunks: Vec<&[Vec<String>]> = sentences.chunks(chunk).collect();

    #[cfg(feature = "parallel")]
    let partials: Vec<SparseCountTensor> = {
        use rayon::prelude::*;
        chunks
            .par_iter()
            .map(|c| count_shard(c, vocab, t))
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<SparseCountTensor> = chunks
        .iter()
        .map(|c| count_shard(c, vocab, t))
        .collect::<Result<_, _>>()?;

    let mut total = empty_like(vocab, t);
    for p in &partials {
        total.merge_from(p)?;
    }
    Ok(total)
}
