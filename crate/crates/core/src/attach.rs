//! Prepositional-phrase attachment: score each candidate head with an FNN
//! over embedding, similarity, POS and distance features and pick the best.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::embeddings::{cosine_or_zero, triple_or_zero, EmbeddingError, EmbeddingStore};
use crate::learn::{accuracy, train_fnn, FeedForwardNet, FnnHyper, LearnError};
use crate::lexicon::TREEBANK_TAGS;

pub const ATTACHMENT_HIDDEN: [usize; 2] = [1000, 20];
pub const DISTANCE_SCALE: f64 = 10.0;
const MODEL_FILE: &str = "attach.fnn";

#[derive(Debug, thiserror::Error)]
pub enum AttachError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("no instances")]
    Empty,
    #[error("candidate index {index} out of range for {len} candidates")]
    BadCandidate { index: usize, len: usize },
    #[error("model expects {expected} features but the store gives {found}")]
    Arity { expected: usize, found: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> AttachError {
    AttachError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadCandidate {
    pub token: String,
    pub pos: String,
    /// Tag of the token following the candidate.
    pub next_pos: String,
    /// Tokens between candidate and preposition, at least 1.
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachmentInstance {
    pub preposition: String,
    pub child: String,
    pub gold_index: usize,
    pub candidates: Vec<HeadCandidate>,
}

impl AttachmentInstance {
    pub fn to_tsv_line(&self) -> String {
        let cands: Vec<String> = self
            .candidates
            .iter()
            .map(|c| format!("{}:{}:{}:{}", c.token, c.pos, c.next_pos, c.distance))
            .collect();
        format!(
            "{}\t{}\t{}\t{}",
            self.preposition,
            self.child,
            self.gold_index,
            cands.join(";")
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttachmentDataset {
    pub instances: Vec<AttachmentInstance>,
    pub rejected: Vec<(usize, String)>,
}

fn is_tag(t: &str) -> bool {
    TREEBANK_TAGS.contains(&t)
}

/// `token:pos:next_pos:distance`. Tags may themselves be `:`; when the
/// middle part splits more than one way the split into two known tags wins.
fn parse_candidate(field: &str) -> Result<HeadCandidate, String> {
    let (token, rest) = field
        .split_once(':')
        .ok_or_else(|| format!("candidate `{field}` lacks fields"))?;
    let (tags, dist) = rest
        .rsplit_once(':')
        .ok_or_else(|| format!("candidate `{field}` lacks fields"))?;
    let distance: usize = dist.parse().map_err(|e| format!("distance `{dist}`: {e}"))?;
    if distance == 0 {
        return Err(format!("candidate `{token}` has distance 0"));
    }
    let splits: Vec<(&str, &str)> = tags
        .match_indices(':')
        .map(|(i, _)| (&tags[..i], &tags[i + 1..]))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .collect();
    let (pos, next_pos) = splits
        .iter()
        .find(|(a, b)| is_tag(a) && is_tag(b))
        .or(splits.first())
        .ok_or_else(|| format!("candidate `{field}` needs pos and next pos"))?;
    if token.is_empty() {
        return Err("empty candidate token".into());
    }
    Ok(HeadCandidate {
        token: token.to_string(),
        pos: pos.to_string(),
        next_pos: next_pos.to_string(),
        distance,
    })
}

fn parse_attachment_line(line: &str) -> Result<AttachmentInstance, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    }
    let gold_index: usize = fields[2].trim().parse().map_err(|e| format!("gold_index: {e}"))?;
    let candidates = fields[3]
        .split(';')
        .filter(|c| !c.is_empty())
        .map(parse_candidate)
        .collect::<Result<Vec<_>, _>>()?;
    if candidates.is_empty() {
        return Err("no candidates".into());
    }
    if gold_index >= candidates.len() {
        return Err(format!(
            "gold_index {gold_index} out of range for {} candidates",
            candidates.len()
        ));
    }
    Ok(AttachmentInstance {
        preposition: fields[0].trim().to_string(),
        child: fields[1].trim().to_string(),
        gold_index,
        candidates,
    })
}

pub fn parse_attachment_dataset(text: &str) -> AttachmentDataset {
    let mut out = AttachmentDataset::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_attachment_line(line) {
            Ok(i) => out.instances.push(i),
            Err(reason) => out.rejected.push((n + 1, reason)),
        }
    }
    if !out.rejected.is_empty() {
        log::warn!("rejected {} malformed attachment records", out.rejected.len());
    }
    out
}

pub fn load_attachment_dataset(path: impl AsRef<Path>) -> Result<AttachmentDataset, AttachError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(parse_attachment_dataset(&text))
}

/// Number of one-hot slots per tag feature: the treebank tags plus `UNK`.
pub fn tag_slots() -> usize {
    TREEBANK_TAGS.len() + 1
}

/// Feature count for embeddings of dimension `d`.
pub fn attachment_arity(d: usize) -> usize {
    3 * d + 3 + 2 * tag_slots() + 1
}

fn tag_index() -> &'static HashMap<&'static str, usize> {
    static INDEX: std::sync::OnceLock<HashMap<&'static str, usize>> = std::sync::OnceLock::new();
    INDEX.get_or_init(|| TREEBANK_TAGS.iter().enumerate().map(|(n, t)| (*t, n)).collect())
}

fn push_one_hot(row: &mut Vec<f64>, tag: &str) {
    let slot = tag_index().get(tag).copied().unwrap_or(TREEBANK_TAGS.len());
    let start = row.len();
    row.resize(start + tag_slots(), 0.0);
    row[start + slot] = 1.0;
}

/// `[v_h; v_p; v_c; triple(h,p,c); cos(h,p); cos(h,c); pos; next pos;
/// min(distance / 10, 1)]`. Unknown tokens are zero vectors and every
/// similarity touching them is 0.
pub fn attachment_features(
    inst: &AttachmentInstance,
    candidate: usize,
    store: &EmbeddingStore,
) -> Result<Vec<f64>, AttachError> {
    let c = inst.candidates.get(candidate).ok_or(AttachError::BadCandidate {
        index: candidate,
        len: inst.candidates.len(),
    })?;
    let v_h = store.vector_or_zero(&c.token);
    let v_p = store.vector_or_zero(&inst.preposition);
    let v_c = store.vector_or_zero(&inst.child);
    let mut row = Vec::with_capacity(attachment_arity(store.dim()));
    row.extend_from_slice(&v_h);
    row.extend_from_slice(&v_p);
    row.extend_from_slice(&v_c);
    row.push(triple_or_zero(&v_h, &v_p, &v_c));
    row.push(cosine_or_zero(&v_h, &v_p));
    row.push(cosine_or_zero(&v_h, &v_c));
    push_one_hot(&mut row, &c.pos);
    push_one_hot(&mut row, &c.next_pos);
    row.push((c.distance as f64 / DISTANCE_SCALE).min(1.0));
    Ok(row)
}

/// Candidate with the smallest distance, lowest index on ties.
pub fn baseline_nearest_head(inst: &AttachmentInstance) -> usize {
    inst.candidates
        .iter()
        .enumerate()
        .min_by_key(|(n, c)| (c.distance, *n))
        .map_or(0, |(n, _)| n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttachmentModel {
    pub net: FeedForwardNet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttachmentConfig {
    pub hidden: Vec<usize>,
    pub fnn: FnnHyper,
}

impl Default for AttachmentConfig {
    fn default() -> Self {
        Self {
            hidden: ATTACHMENT_HIDDEN.to_vec(),
            fnn: FnnHyper::default(),
        }
    }
}

impl AttachmentModel {
    pub fn file_name() -> &'static str {
        MODEL_FILE
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), AttachError> {
        let p = dir.as_ref().join(MODEL_FILE);
        std::fs::write(&p, self.net.to_text()).map_err(|e| io_err(&p, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, AttachError> {
        let p = dir.as_ref().join(MODEL_FILE);
        let text = std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
        Ok(Self {
            net: FeedForwardNet::from_text(&text)?,
        })
    }
}

/// One binary row per candidate, positive for the gold head.
pub fn attachment_training_rows(
    instances: &[AttachmentInstance],
    store: &EmbeddingStore,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), AttachError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for inst in instances {
        for c in 0..inst.candidates.len() {
            rows.push(attachment_features(inst, c, store)?);
            labels.push((c == inst.gold_index) as usize);
        }
    }
    Ok((rows, labels))
}

pub fn train_attachment(
    instances: &[AttachmentInstance],
    store: &EmbeddingStore,
    cfg: &AttachmentConfig,
) -> Result<AttachmentModel, AttachError> {
    if instances.is_empty() {
        return Err(AttachError::Empty);
    }
    let (rows, labels) = attachment_training_rows(instances, store)?;
    let mut sizes = vec![attachment_arity(store.dim())];
    sizes.extend(&cfg.hidden);
    sizes.push(2);
    let (net, trace) = train_fnn(&rows, &labels, &sizes, &cfg.fnn)?;
    log::info!(
        "attachment net trained on {} rows for {} epochs",
        rows.len(),
        trace.train_losses.len()
    );
    Ok(AttachmentModel { net })
}

/// Candidate with the highest positive-class score. Ties go to the nearest
/// candidate, then the lowest index.
pub fn predict_head(
    inst: &AttachmentInstance,
    model: &AttachmentModel,
    store: &EmbeddingStore,
) -> Result<usize, AttachError> {
    let expected = model.net.num_inputs();
    if expected != attachment_arity(store.dim()) {
        return Err(AttachError::Arity {
            expected,
            found: attachment_arity(store.dim()),
        });
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for (n, c) in inst.candidates.iter().enumerate() {
        let score = model.net.forward(&attachment_features(inst, n, store)?)?[1];
        let better = match best {
            None => true,
            Some((s, d, _)) => score > s || (score == s && c.distance < d),
        };
        if better {
            best = Some((score, c.distance, n));
        }
    }
    best.map(|b| b.2).ok_or(AttachError::BadCandidate { index: 0, len: 0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttachmentErrorRow {
    pub index: usize,
    pub gold: usize,
    pub predicted: usize,
    pub gold_token: String,
    pub predicted_token: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttachmentReport {
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    pub errors: Vec<AttachmentErrorRow>,
}

fn report(instances: &[AttachmentInstance], predictions: Vec<usize>) -> Result<AttachmentReport, AttachError> {
    let gold: Vec<usize> = instances.iter().map(|i| i.gold_index).collect();
    let errors = instances
        .iter()
        .zip(&predictions)
        .enumerate()
        .filter(|(_, (i, &p))| p != i.gold_index)
        .map(|(index, (i, &p))| AttachmentErrorRow {
            index,
            gold: i.gold_index,
            predicted: p,
            gold_token: i.candidates[i.gold_index].token.clone(),
            predicted_token: i.candidates[p].token.clone(),
        })
        .collect();
    Ok(AttachmentReport {
        accuracy: accuracy(&predictions, &gold)?,
        predictions,
        errors,
    })
}

pub fn evaluate_attachment(
    instances: &[AttachmentInstance],
    model: &AttachmentModel,
    store: &EmbeddingStore,
) -> Result<AttachmentReport, AttachError> {
    if instances.is_empty() {
        return Err(AttachError::Empty);
    }
    let predictions = instances
        .iter()
        .map(|i| predict_head(i, model, store))
        .collect::<Result<Vec<_>, _>>()?;
    report(instances, predictions)
}

pub fn evaluate_baseline(instances: &[AttachmentInstance]) -> Result<AttachmentReport, AttachError> {
    if instances.is_empty() {
        return Err(AttachError::Empty);
    }
    report(instances, instances.iter().map(baseline_nearest_head).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{cosine_similarity, triple_similarity};

    fn cand(token: &str, distance: usize) -> HeadCandidate {
        HeadCandidate {
            token: token.into(),
            pos: "NN".into(),
            next_pos: "IN".into(),
            distance,
        }
    }

    #[test]
    fn parses_elephant_record() {
        let d = parse_attachment_dataset("with\ttusks\t1\tsaw:VBD:DT:3;elephant:NN:IN:1\n");
        assert!(d.rejected.is_empty());
        let i = &d.instances[0];
        assert_eq!(i.preposition, "with");
        assert_eq!(i.child, "tusks");
        assert_eq!(i.gold_index, 1);
        assert_eq!(
            i.candidates[0],
            HeadCandidate {
                token: "saw".into(),
                pos: "VBD".into(),
                next_pos: "DT".into(),
                distance: 3
            }
        );
        assert_eq!(i.candidates[1].token, "elephant");
        assert_eq!(parse_attachment_dataset(&i.to_tsv_line()).instances[0], *i);
        assert!(parse_attachment_dataset("").instances.is_empty());
        let one = parse_attachment_dataset("of\tx\t0\thead:NN:IN:2");
        assert_eq!(one.instances[0].candidates.len(), 1);
    }

    #[test]
    fn colon_tags_and_rejections() {
        let c = parse_candidate("said:VBD:::2").unwrap();
        assert_eq!((c.pos.as_str(), c.next_pos.as_str()), ("VBD", ":"));
        let c = parse_candidate("x:::NN:4").unwrap();
        assert_eq!((c.pos.as_str(), c.next_pos.as_str()), (":", "NN"));
        let d = parse_attachment_dataset("with\tt\t2\ta:NN:IN:1;b:NN:IN:2\nwith\tt\t0\ta:NN:IN:0\nbad line\n");
        assert!(d.instances.is_empty());
        assert_eq!(d.rejected.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    fn store() -> EmbeddingStore {
        EmbeddingStore::from_rows(vec![
            ("saw".into(), vec![1.0, 0.5]),
            ("elephant".into(), vec![0.0, 1.0]),
            ("with".into(), vec![1.0, 0.5]),
            ("tusks".into(), vec![0.3, 0.7]),
        ])
        .unwrap()
    }

    #[test]
    fn feature_layout() {
        let s = store();
        let i = AttachmentInstance {
            preposition: "with".into(),
            child: "tusks".into(),
            gold_index: 1,
            candidates: vec![cand("saw", 3), cand("elephant", 1), cand("zebra", 12)],
        };
        let f = attachment_features(&i, 0, &s).unwrap();
        assert_eq!(f.len(), attachment_arity(2));
        assert_eq!(f.len(), 3 * 2 + 3 + 2 * 46 + 1);
        let (h, p, c) = (
            s.require("saw").unwrap(),
            s.require("with").unwrap(),
            s.require("tusks").unwrap(),
        );
        assert_eq!(f[6], triple_similarity(h, p, c).unwrap());
        assert_eq!(f[7], 1.0);
        assert_eq!(f[8], cosine_similarity(h, c).unwrap());
        assert_eq!(f[9 + 11], 1.0); // NN
        assert_eq!(f[9 + 46 + 5], 1.0); // IN
        assert_eq!(f[f.len() - 1], 0.3);
        let oov = attachment_features(&i, 2, &s).unwrap();
        assert_eq!(&oov[..2], &[0.0, 0.0]);
        assert_eq!(&oov[6..9], &[0.0, 0.0, 0.0]);
        assert_eq!(oov[oov.len() - 1], 1.0);
        let mut odd = i.clone();
        odd.candidates[0].pos = "ZZZ".into();
        assert_eq!(attachment_features(&odd, 0, &s).unwrap()[9 + 45], 1.0);
        assert!(attachment_features(&i, 3, &s).is_err());
    }

    #[test]
    fn nearest_head() {
        let mk = |ds: &[usize]| AttachmentInstance {
            preposition: "with".into(),
            child: "x".into(),
            gold_index: 0,
            candidates: ds.iter().map(|&d| cand("c", d)).collect(),
        };
        assert_eq!(baseline_nearest_head(&mk(&[3, 1, 5])), 1);
        assert_eq!(baseline_nearest_head(&mk(&[2])), 0);
        assert_eq!(baseline_nearest_head(&mk(&[2, 1, 1])), 1);
    }

    #[test]
    fn ties_go_to_nearest_candidate() {
        // a zero net scores every candidate identically
        let s = store();
        let model = AttachmentModel {
            net: FeedForwardNet::zeros(&[attachment_arity(2), 3, 2]).unwrap(),
        };
        let i = AttachmentInstance {
            preposition: "with".into(),
            child: "tusks".into(),
            gold_index: 0,
            candidates: vec![cand("saw", 4), cand("elephant", 2), cand("tusks", 2)],
        };
        assert_eq!(predict_head(&i, &model, &s).unwrap(), 1);
        let r = evaluate_attachment(&[i], &model, &s).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.errors[0].predicted_token, "elephant");
    }
}
