//! Browser bindings: the weighting curve, plus a small model trained in-page
//! on a synthetic corpus that answers similarity, paraphrase and spectrum
//! queries. Every call returns a JSON string.

use preptensor::corpus::{count_tensor, tokenize_str, SparseCountTensor, Vocabulary};
use preptensor::embeddings::{
    cosine_similarity, paraphrase_phrasal_verb, slice_spectrum, EmbeddingStore, NO_PREP_TOKEN,
};
use preptensor::factorize::{decompose_weighted, weight, TrainingConfig};
use preptensor::lexicon::selection_roster;
use preptensor::synth;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn err<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    w: f64,
}

pub fn weight_curve_points(x_max: f64, alpha: f64, x_end: f64, points: usize) -> Vec<(f64, f64)> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let x = x_end * i as f64 / (n - 1) as f64;
            (x, weight(x, x_max, alpha))
        })
        .collect()
}

/// `[{x, w}, ...]` sampled evenly on `[0, x_end]`.
#[wasm_bindgen]
pub fn weight_curve(x_max: f64, alpha: f64, x_end: f64, points: usize) -> String {
    let pts: Vec<CurvePoint> = weight_curve_points(x_max, alpha, x_end, points)
        .into_iter()
        .map(|(x, w)| CurvePoint { x, w })
        .collect();
    to_json(&pts)
}

#[derive(Serialize)]
struct Summary<'a> {
    words: usize,
    prepositions: &'a [String],
    nonzeros: usize,
    dim: usize,
    losses: &'a [f64],
    phrasal_verbs: Vec<[&'static str; 3]>,
}

#[derive(Serialize)]
struct Ranked {
    verb: String,
    distance: f64,
}

#[wasm_bindgen]
pub struct ToyModel {
    vocab: Vocabulary,
    tensor: SparseCountTensor,
    store: EmbeddingStore,
    losses: Vec<f64>,
}

#[wasm_bindgen]
impl ToyModel {
    /// Generates `sentences` synthetic sentences, counts the tensor and fits a
    /// `dim`-dimensional weighted decomposition.
    #[wasm_bindgen(constructor)]
    pub fn new(sentences: usize, dim: usize, iterations: usize, seed: u64) -> Result<ToyModel, JsError> {
        let sents = tokenize_str(&synth::toy_corpus(sentences, seed));
        let vocab = Vocabulary::build(&sents, 2, &selection_roster()).map_err(err)?;
        let tensor = count_tensor(&sents, &vocab, 3, 1).map_err(err)?;
        let cfg = TrainingConfig {
            dim,
            iterations,
            ortho_iterations: 0,
            seed,
            ..TrainingConfig::default()
        };
        let out = decompose_weighted(&tensor, &cfg).map_err(err)?;
        let store = EmbeddingStore::from_embedding_set(&vocab, &out.embeddings).map_err(err)?;
        Ok(ToyModel {
            vocab,
            tensor,
            store,
            losses: out.epoch_losses,
        })
    }

    pub fn summary(&self) -> String {
        to_json(&Summary {
            words: self.vocab.num_words(),
            prepositions: self.vocab.prepositions(),
            nonzeros: self.tensor.nnz(),
            dim: self.store.dim(),
            losses: &self.losses,
            phrasal_verbs: synth::PHRASAL_PARAPHRASES.iter().map(|&(h, p, v)| [h, p, v]).collect(),
        })
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<f64, JsError> {
        cosine_similarity(self.store.require(a).map_err(err)?, self.store.require(b).map_err(err)?).map_err(err)
    }

    /// Candidates are comma- or whitespace-separated verbs.
    pub fn paraphrase(&self, head: &str, prep: &str, candidates: &str) -> Result<String, JsError> {
        let verbs: Vec<String> = candidates
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let ranked = paraphrase_phrasal_verb(head, prep, &verbs, &self.store).map_err(err)?;
        Ok(to_json(
            &ranked
                .into_iter()
                .map(|c| Ranked {
                    verb: c.verb,
                    distance: c.distance,
                })
                .collect::<Vec<_>>(),
        ))
    }

    /// Normalized singular values of the slice for `prep` (or `__NOPREP__`).
    pub fn spectrum(&self, prep: &str, top: usize) -> Result<String, JsError> {
        let k = if prep == NO_PREP_TOKEN {
            self.tensor.extra_slice()
        } else {
            self.vocab
                .prep_id(prep)
                .ok_or_else(|| JsError::new(&format!("`{prep}` is not a roster preposition")))?
        };
        Ok(to_json(&slice_spectrum(&self.tensor, k, top).map_err(err)?))
    }
}
