//! Two-stage preposition selection: a decision tree flags likely errors from
//! three context features, then a per-candidate FNN scores every roster
//! preposition for the flagged slots.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::embeddings::{pair_similarity, rank_preposition, triple_or_zero, EmbeddingError, EmbeddingStore};
use crate::learn::{
    edit_counts, train_decision_tree, train_fnn, DecisionTree, EditCounts, FeedForwardNet, FnnHyper, LearnError, Prf,
    TreeParams,
};
use crate::lexicon::is_context_stop_word;

pub const DEFAULT_CONTEXT_WINDOW: usize = 3;
pub const CORRECTOR_HIDDEN: [usize; 2] = [500, 10];

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("no instances")]
    Empty,
    #[error("both context sides are empty")]
    EmptyContext,
    #[error("`{0}` is not in the roster")]
    NotInRoster(String),
    #[error("embedding roster does not match the trained models")]
    RosterMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> SelectError {
    SelectError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionInstance {
    pub tokens: Vec<String>,
    pub prep_index: usize,
    pub observed: String,
    pub gold: String,
}

impl SelectionInstance {
    pub fn is_error(&self) -> bool {
        self.observed != self.gold
    }

    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.tokens.join(" "),
            self.prep_index,
            self.observed,
            self.gold
        )
    }
}

/// Parsed dataset plus the lines that were rejected, with their reasons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionDataset {
    pub instances: Vec<SelectionInstance>,
    pub rejected: Vec<(usize, String)>,
}

/// Reads `tokens<TAB>prep_index<TAB>observed<TAB>gold` lines. Bad lines are
/// skipped and listed in `rejected`.
pub fn parse_selection_dataset(text: &str, roster: &[String]) -> SelectionDataset {
    let mut out = SelectionDataset::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_selection_line(line, roster) {
            Ok(inst) => out.instances.push(inst),
            Err(reason) => out.rejected.push((n + 1, reason)),
        }
    }
    if !out.rejected.is_empty() {
        log::warn!("rejected {} malformed selection lines", out.rejected.len());
    }
    out
}

fn parse_selection_line(line: &str, roster: &[String]) -> Result<SelectionInstance, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    }
    let tokens: Vec<String> = fields[0].split_whitespace().map(str::to_string).collect();
    let prep_index: usize = fields[1].trim().parse().map_err(|e| format!("prep_index: {e}"))?;
    let (observed, gold) = (fields[2].trim().to_string(), fields[3].trim().to_string());
    if prep_index >= tokens.len() {
        return Err(format!(
            "prep_index {prep_index} out of range for {} tokens",
            tokens.len()
        ));
    }
    if tokens[prep_index] != observed {
        return Err(format!(
            "token {prep_index} is `{}`, not `{observed}`",
            tokens[prep_index]
        ));
    }
    for p in [&observed, &gold] {
        if !roster.contains(p) {
            return Err(format!("`{p}` is not in the roster"));
        }
    }
    Ok(SelectionInstance {
        tokens,
        prep_index,
        observed,
        gold,
    })
}

pub fn load_selection_dataset(path: impl AsRef<Path>, roster: &[String]) -> Result<SelectionDataset, SelectError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(parse_selection_dataset(&text, roster))
}

/// Up to `window` non-stop-list tokens on each side of the preposition,
/// nearest last on the left and nearest first on the right.
pub fn preprocess_context(inst: &SelectionInstance, window: usize) -> (Vec<String>, Vec<String>) {
    let keep = |t: &&String| !is_context_stop_word(t);
    let mut left: Vec<String> = inst.tokens[..inst.prep_index]
        .iter()
        .rev()
        .filter(keep)
        .take(window)
        .cloned()
        .collect();
    left.reverse();
    let right = inst.tokens[inst.prep_index + 1..]
        .iter()
        .filter(keep)
        .take(window)
        .cloned()
        .collect();
    (left, right)
}

/// Replacement statistics between roster prepositions: `q` written, `p` meant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionTable {
    roster: Vec<String>,
    index: HashMap<String, usize>,
    counts: Vec<Vec<u64>>,
    smoothing: f64,
}

impl ConfusionTable {
    pub fn new(roster: &[String], smoothing: f64) -> Self {
        let k = roster.len();
        Self {
            roster: roster.to_vec(),
            index: roster.iter().enumerate().map(|(n, p)| (p.clone(), n)).collect(),
            counts: vec![vec![0; k]; k],
            smoothing,
        }
    }

    pub fn record(&mut self, observed: &str, gold: &str) {
        if let (Some(&q), Some(&p)) = (self.index.get(observed), self.index.get(gold)) {
            self.counts[q][p] += 1;
        }
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// `P(q is corrected to p)`. A row with no mass is uniform.
    pub fn probability(&self, q: &str, p: &str) -> f64 {
        let (Some(&qi), Some(&pi)) = (self.index.get(q), self.index.get(p)) else {
            return 0.0;
        };
        let row = &self.counts[qi];
        let k = self.roster.len() as f64;
        let total = row.iter().sum::<u64>() as f64 + self.smoothing * k;
        if total == 0.0 {
            return 1.0 / k;
        }
        (row[pi] as f64 + self.smoothing) / total
    }

    pub fn replace_prob(&self, q: &str, p: &str) -> f64 {
        self.probability(q, p)
    }

    pub fn keep_prob(&self, q: &str) -> f64 {
        self.probability(q, q)
    }

    /// `CONFUSION v1 K smoothing`, the roster on one line, then one count row
    /// per written preposition.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "CONFUSION v1 {} {}\n{}\n",
            self.roster.len(),
            self.smoothing,
            self.roster.join(" ")
        );
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SelectError> {
        let bad = |line: usize, message: &str| SelectError::Format {
            line,
            message: message.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        let header: Vec<&str> = lines.first().map_or(vec![], |l| l.split_whitespace().collect());
        if header.len() != 4 || header[..2] != ["CONFUSION", "v1"] {
            return Err(bad(1, "expected `CONFUSION v1 K smoothing`"));
        }
        let k: usize = header[2].parse().map_err(|_| bad(1, "bad K"))?;
        let smoothing: f64 = header[3].parse().map_err(|_| bad(1, "bad smoothing"))?;
        let roster: Vec<String> = lines
            .get(1)
            .map_or(vec![], |l| l.split_whitespace().map(str::to_string).collect());
        if roster.len() != k {
            return Err(bad(2, "roster length does not match K"));
        }
        let mut table = Self::new(&roster, smoothing);
        for q in 0..k {
            let line = q + 3;
            let row = lines.get(q + 2).ok_or_else(|| bad(line, "truncated table"))?;
            let cells = row
                .split_whitespace()
                .map(str::parse::<u64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(line, &e.to_string()))?;
            if cells.len() != k {
                return Err(bad(line, "wrong row length"));
            }
            table.counts[q] = cells;
        }
        Ok(table)
    }
}

/// Add-`smoothing` estimates of each `(observed, gold)` replacement over the
/// roster.
pub fn build_confusion_table(instances: &[SelectionInstance], roster: &[String], smoothing: f64) -> ConfusionTable {
    let mut t = ConfusionTable::new(roster, smoothing);
    for inst in instances {
        t.record(&inst.observed, &inst.gold);
    }
    t
}

/// Averaged context vectors for the two sides; `None` for a side with no
/// in-vocabulary token.
fn side_vectors(
    inst: &SelectionInstance,
    store: &EmbeddingStore,
    window: usize,
) -> (Option<Vec<f64>>, Option<Vec<f64>>, Vec<Vec<f64>>) {
    let (left, right) = preprocess_context(inst, window);
    let all: Vec<Vec<f64>> = left
        .iter()
        .chain(&right)
        .filter_map(|t| store.vector(t).map(<[f64]>::to_vec))
        .collect();
    let l = store.average(left.iter().map(String::as_str));
    let r = store.average(right.iter().map(String::as_str));
    (l, r, all)
}

/// `[cos(observed, averaged context), rank of observed, keep_prob(observed)]`,
/// or `None` when no context token has a vector.
pub fn detection_features(
    inst: &SelectionInstance,
    store: &EmbeddingStore,
    table: &ConfusionTable,
    window: usize,
) -> Result<Option<Vec<f64>>, SelectError> {
    let (_, _, context) = side_vectors(inst, store, window);
    match rank_preposition(&context, &inst.observed, store) {
        Ok(r) => Ok(Some(vec![r.cosine, r.rank as f64, table.keep_prob(&inst.observed)])),
        Err(EmbeddingError::EmptyContext) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// `[v_l; v_p; v_r; pair sim; triple sim; confusion prob]`, length `3d + 3`.
/// A side with no in-vocabulary context contributes zeros and drops out of
/// the similarity terms.
pub fn correction_features(
    inst: &SelectionInstance,
    candidate: &str,
    store: &EmbeddingStore,
    table: &ConfusionTable,
    window: usize,
) -> Result<Vec<f64>, SelectError> {
    if !table.roster().iter().any(|p| p == candidate) {
        return Err(SelectError::NotInRoster(candidate.to_string()));
    }
    let (l, r, _) = side_vectors(inst, store, window);
    if l.is_none() && r.is_none() {
        return Err(SelectError::EmptyContext);
    }
    let d = store.dim();
    let v_l = l.unwrap_or_else(|| vec![0.0; d]);
    let v_r = r.unwrap_or_else(|| vec![0.0; d]);
    let v_p = store.require(candidate)?;
    Ok(correction_row(
        &v_l,
        v_p,
        &v_r,
        table.probability(&inst.observed, candidate),
    ))
}

fn correction_row(v_l: &[f64], v_p: &[f64], v_r: &[f64], confusion: f64) -> Vec<f64> {
    let pair = pair_similarity(v_l, v_r, v_p).unwrap_or(0.0);
    let triple = triple_or_zero(v_l, v_p, v_r);
    let mut row = Vec::with_capacity(3 * v_p.len() + 3);
    row.extend_from_slice(v_l);
    row.extend_from_slice(v_p);
    row.extend_from_slice(v_r);
    row.extend([pair, triple, confusion]);
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub window: usize,
    pub smoothing: f64,
    pub tree: TreeParams,
    pub hidden: Vec<usize>,
    pub fnn: FnnHyper,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_CONTEXT_WINDOW,
            smoothing: 1.0,
            tree: TreeParams::default(),
            hidden: CORRECTOR_HIDDEN.to_vec(),
            fnn: FnnHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionModels {
    pub window: usize,
    pub detector: DecisionTree,
    pub corrector: FeedForwardNet,
    pub table: ConfusionTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrainReport {
    pub detection_rows: usize,
    pub undecidable: usize,
    pub corrector_instances: usize,
    pub corrector_rows: usize,
}

const DETECTOR_FILE: &str = "detector.tree";
const CORRECTOR_FILE: &str = "corrector.fnn";
const CONFUSION_FILE: &str = "confusion.txt";
const META_FILE: &str = "selection.meta";

impl SelectionModels {
    pub fn roster(&self) -> &[String] {
        self.table.roster()
    }

    /// Names of the files [`save`](Self::save) writes.
    pub fn file_names() -> [&'static str; 4] {
        [DETECTOR_FILE, CORRECTOR_FILE, CONFUSION_FILE, META_FILE]
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), SelectError> {
        let dir = dir.as_ref();
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| io_err(&p, e))
        };
        write(DETECTOR_FILE, self.detector.to_text())?;
        write(CORRECTOR_FILE, self.corrector.to_text())?;
        write(CONFUSION_FILE, self.table.to_text())?;
        write(META_FILE, format!("window {}\n", self.window))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, SelectError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))
        };
        let meta = read(META_FILE)?;
        let window = meta
            .trim()
            .strip_prefix("window ")
            .and_then(|w| w.parse().ok())
            .ok_or(SelectError::Format {
                line: 1,
                message: "expected `window N`".into(),
            })?;
        Ok(Self {
            window,
            detector: DecisionTree::from_text(&read(DETECTOR_FILE)?)?,
            corrector: FeedForwardNet::from_text(&read(CORRECTOR_FILE)?)?,
            table: ConfusionTable::from_text(&read(CONFUSION_FILE)?)?,
        })
    }
}

fn check_roster(store: &EmbeddingStore) -> Result<(), SelectError> {
    if store.roster().is_empty() {
        return Err(EmbeddingError::EmptyRoster.into());
    }
    Ok(())
}

/// Trains the detector on every decidable instance (label 1 when the written
/// preposition is wrong), then the corrector on the training instances the
/// detector flags. Each such instance yields one row per roster candidate,
/// labelled 1 for the gold preposition. If the detector flags nothing, the
/// true errors are used instead.
pub fn train_selection(
    instances: &[SelectionInstance],
    store: &EmbeddingStore,
    cfg: &SelectionConfig,
) -> Result<(SelectionModels, SelectionTrainReport), SelectError> {
    if instances.is_empty() {
        return Err(SelectError::Empty);
    }
    if cfg.window == 0 {
        return Err(SelectError::InvalidParameter("window must be >= 1".into()));
    }
    check_roster(store)?;
    let roster = store.roster().to_vec();
    let table = build_confusion_table(instances, &roster, cfg.smoothing);

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut decidable = Vec::new();
    for inst in instances {
        if let Some(f) = detection_features(inst, store, &table, cfg.window)? {
            rows.push(f);
            labels.push(inst.is_error() as usize);
            decidable.push(inst);
        }
    }
    if rows.is_empty() {
        return Err(SelectError::EmptyContext);
    }
    let detector = train_decision_tree(&rows, &labels, cfg.tree)?;

    let mut chosen: Vec<&SelectionInstance> = Vec::new();
    for (inst, f) in decidable.iter().zip(&rows) {
        if detector.predict(f)?.class == 1 {
            chosen.push(inst);
        }
    }
    if chosen.is_empty() {
        chosen = decidable.iter().copied().filter(|i| i.is_error()).collect();
    }
    if chosen.is_empty() {
        chosen = decidable.clone();
    }
    let mut c_rows = Vec::with_capacity(chosen.len() * roster.len());
    let mut c_labels = Vec::with_capacity(chosen.len() * roster.len());
    for inst in &chosen {
        for cand in &roster {
            c_rows.push(correction_features(inst, cand, store, &table, cfg.window)?);
            c_labels.push((cand == &inst.gold) as usize);
        }
    }
    let mut sizes = vec![3 * store.dim() + 3];
    sizes.extend(&cfg.hidden);
    sizes.push(2);
    let (corrector, trace) = train_fnn(&c_rows, &c_labels, &sizes, &cfg.fnn)?;
    log::info!(
        "corrector trained on {} rows for {} epochs",
        c_rows.len(),
        trace.train_losses.len()
    );
    let report = SelectionTrainReport {
        detection_rows: rows.len(),
        undecidable: instances.len() - rows.len(),
        corrector_instances: chosen.len(),
        corrector_rows: c_rows.len(),
    };
    Ok((
        SelectionModels {
            window: cfg.window,
            detector,
            corrector,
            table,
        },
        report,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDecision {
    pub predicted: String,
    /// The detector ran and called the slot an error.
    pub flagged: bool,
    /// Some context token had a vector.
    pub decidable: bool,
}

/// Keeps the written preposition unless the detector flags it, otherwise
/// returns the roster candidate with the highest corrector score (earliest in
/// the roster on ties).
pub fn select_preposition(
    inst: &SelectionInstance,
    models: &SelectionModels,
    store: &EmbeddingStore,
) -> Result<SelectionDecision, SelectError> {
    if store.roster() != models.roster() {
        return Err(SelectError::RosterMismatch);
    }
    let keep = |decidable| SelectionDecision {
        predicted: inst.observed.clone(),
        flagged: false,
        decidable,
    };
    let Some(f) = detection_features(inst, store, &models.table, models.window)? else {
        return Ok(keep(false));
    };
    if models.detector.predict(&f)?.class != 1 {
        return Ok(keep(true));
    }
    let mut best: Option<(f64, &String)> = None;
    for cand in models.roster() {
        let row = correction_features(inst, cand, store, &models.table, models.window)?;
        let score = models.corrector.forward(&row)?[1];
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, cand));
        }
    }
    let (_, p) = best.expect("nonempty roster");
    Ok(SelectionDecision {
        predicted: p.clone(),
        flagged: true,
        decidable: true,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionErrorRow {
    pub index: usize,
    pub observed: String,
    pub gold: String,
    pub predicted: String,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub counts: EditCounts,
    pub prf: Prf,
    pub predictions: Vec<String>,
    /// Instances whose prediction differs from gold.
    pub errors: Vec<SelectionErrorRow>,
}

impl SelectionReport {
    pub fn metrics_line(&self) -> String {
        format!("P={} R={} F1={}", self.prf.precision, self.prf.recall, self.prf.f1)
    }
}

pub fn evaluate_selection(
    instances: &[SelectionInstance],
    models: &SelectionModels,
    store: &EmbeddingStore,
) -> Result<SelectionReport, SelectError> {
    if instances.is_empty() {
        return Err(SelectError::Empty);
    }
    let mut predictions = Vec::with_capacity(instances.len());
    let mut errors = Vec::new();
    for (index, inst) in instances.iter().enumerate() {
        let d = select_preposition(inst, models, store)?;
        if d.predicted != inst.gold {
            errors.push(SelectionErrorRow {
                index,
                observed: inst.observed.clone(),
                gold: inst.gold.clone(),
                predicted: d.predicted.clone(),
                flagged: d.flagged,
            });
        }
        predictions.push(d.predicted);
    }
    let observed: Vec<&str> = instances.iter().map(|i| i.observed.as_str()).collect();
    let gold: Vec<&str> = instances.iter().map(|i| i.gold.as_str()).collect();
    let pred: Vec<&str> = predictions.iter().map(String::as_str).collect();
    let counts = edit_counts(&observed, &pred, &gold)?;
    Ok(SelectionReport {
        counts,
        prf: Prf::from_counts(counts),
        predictions,
        errors,
    })
}
