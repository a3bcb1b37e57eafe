use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use preptensor::attach::{
    evaluate_attachment, evaluate_baseline, load_attachment_dataset, train_attachment, AttachmentConfig,
    AttachmentInstance, AttachmentModel,
};
use preptensor::corpus::{
    count_tensor, load_tensor, load_vocabulary, save_tensor, save_vocabulary, tokenize_sentences, Vocabulary,
};
use preptensor::embeddings::{
    load_embeddings, paraphrase_phrasal_verb, preposition_similarity_table, save_embeddings, slice_spectrum,
    EmbeddingStore, NO_PREP_TOKEN,
};
use preptensor::factorize::{decompose_orth_als, decompose_weighted};
use preptensor::lexicon::{parse_roster, selection_roster};
use preptensor::select::{
    evaluate_selection, load_selection_dataset, train_selection, SelectionConfig, SelectionInstance, SelectionModels,
};
use serde_json::json;

use crate::config::{MethodArg, RunConfig};
use crate::manifest::{digest_file, sidecar, InputDigest, Manifest, OutputGuard};
use crate::Command;

pub const TENSOR_FILE: &str = "tensor.txt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

struct Run<'a> {
    command: &'static str,
    cfg: &'a RunConfig,
    arguments: serde_json::Value,
    inputs: Vec<InputDigest>,
    guard: OutputGuard,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, cfg: &'a RunConfig, arguments: serde_json::Value) -> Self {
        Self {
            command,
            cfg,
            arguments,
            inputs: Vec::new(),
            guard: OutputGuard::new(),
        }
    }

    fn input(&mut self, role: &str, path: &Path) -> Result<PathBuf> {
        ensure!(path.exists(), "missing input {}: {}", role, path.display());
        self.inputs.push(digest_file(role, path)?);
        Ok(path.to_path_buf())
    }

    fn output(&mut self, path: PathBuf) -> PathBuf {
        self.guard.declare(path)
    }

    /// Writes the manifest, checks every declared output exists and keeps them.
    fn finish(mut self, manifest_path: PathBuf) -> Result<()> {
        let outputs = self.guard.files().to_vec();
        for p in &outputs {
            ensure!(p.is_file(), "declared output {} was not written", p.display());
        }
        let manifest_path = self.guard.declare(manifest_path);
        Manifest {
            tool: "preptensor",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.to_string(),
            config: self.cfg.clone(),
            arguments: std::mem::take(&mut self.arguments),
            inputs: std::mem::take(&mut self.inputs),
            outputs,
        }
        .write(&manifest_path)?;
        self.guard.commit();
        Ok(())
    }
}

fn read_roster(path: Option<&Path>) -> Result<Vec<String>> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading roster {}", p.display()))?;
            let roster = parse_roster(&text);
            ensure!(!roster.is_empty(), "roster {} is empty", p.display());
            Ok(roster)
        }
        None => Ok(selection_roster()),
    }
}

fn store_with_roster(store: EmbeddingStore, roster: &[String]) -> Result<EmbeddingStore> {
    let present: Vec<String> = roster.iter().filter(|p| store.contains(p)).cloned().collect();
    if present.len() < roster.len() {
        warn!("{} roster prepositions have no vector", roster.len() - present.len());
    }
    ensure!(!present.is_empty(), "no roster preposition has a vector");
    Ok(store.with_roster(&present)?)
}

fn token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

fn write_csv<S: AsRef<str>>(out: Option<&Path>, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let sink: Box<dyn std::io::Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref))?;
    }
    w.flush()?;
    Ok(())
}

fn manifest_for(out: Option<&Path>) -> Option<PathBuf> {
    out.map(sidecar)
}

pub fn execute(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::BuildTensor {
            corpus, roster, out, ..
        } => build_tensor(cfg, corpus, roster.as_deref(), out),
        Command::Decompose { tensor, out, .. } => decompose(cfg, tensor, out),
        Command::QuerySim {
            embeddings,
            pairs,
            centered,
            roster,
            out,
        } => query_sim(cfg, embeddings, pairs, *centered, roster.as_deref(), out.as_deref()),
        Command::Paraphrase {
            embeddings,
            head,
            prep,
            candidates,
            out,
            ..
        } => paraphrase(cfg, embeddings, head, prep, candidates, out.as_deref()),
        Command::Spectrum { tensor, slice, out, .. } => spectrum(cfg, tensor, slice, out.as_deref()),
        Command::TrainSelect {
            train,
            embeddings,
            roster,
            out,
            ..
        } => train_select(cfg, train, embeddings, roster.as_deref(), out),
        Command::EvalSelect { test, models, out } => eval_select(cfg, test, models, out.as_deref()),
        Command::TrainAttach {
            train, embeddings, out, ..
        } => train_attach(cfg, train, embeddings, out),
        Command::EvalAttach { test, models, out } => eval_attach(cfg, test, models, out.as_deref()),
    }
}

fn build_tensor(cfg: &RunConfig, corpus: &Path, roster: Option<&Path>, out: &Path) -> Result<()> {
    let mut run = Run::new(
        "build-tensor",
        cfg,
        json!({ "corpus": corpus, "roster": roster, "out": out }),
    );
    run.input("corpus", corpus)?;
    if let Some(r) = roster {
        run.input("roster", r)?;
    }
    let roster = read_roster(roster)?;
    let raw = std::fs::read(corpus).with_context(|| format!("reading {}", corpus.display()))?;
    let sentences = tokenize_sentences(&raw)?;
    let vocab = Vocabulary::build(&sentences, cfg.min_count, &roster)?;
    info!(
        "vocabulary: {} words, {} prepositions",
        vocab.num_words(),
        vocab.num_prepositions()
    );
    let tensor = count_tensor(&sentences, &vocab, cfg.window, cfg.threads)?;
    info!("tensor: {} nonzeros, total count {}", tensor.nnz(), tensor.total());

    run.guard.ensure_dir(out)?;
    let tensor_path = run.output(out.join(TENSOR_FILE));
    let vocab_path = run.output(out.join(VOCAB_FILE));
    save_tensor(&tensor, &tensor_path)?;
    save_vocabulary(&vocab, &vocab_path)?;
    ensure!(load_tensor(&tensor_path)? == tensor, "tensor file does not read back");
    ensure!(
        load_vocabulary(&vocab_path)? == vocab,
        "vocabulary file does not read back"
    );
    println!(
        "words={} prepositions={} nnz={}",
        vocab.num_words(),
        vocab.num_prepositions(),
        tensor.nnz()
    );
    run.finish(out.join(MANIFEST_FILE))
}

fn decompose(cfg: &RunConfig, tensor_dir: &Path, out: &Path) -> Result<()> {
    let mut run = Run::new("decompose", cfg, json!({ "tensor": tensor_dir, "out": out }));
    let tensor_path = run.input("tensor", &tensor_dir.join(TENSOR_FILE))?;
    let vocab_path = run.input("vocabulary", &tensor_dir.join(VOCAB_FILE))?;
    let tensor = load_tensor(&tensor_path)?;
    let vocab = load_vocabulary(&vocab_path)?;
    let training = cfg.training();
    let set = match cfg.method {
        MethodArg::Als => {
            let o = decompose_orth_als(&tensor, &training)?;
            if let Some(last) = o.trace.sweeps.last() {
                info!("ALS: {} sweeps, fit {:.6}", o.trace.sweeps.len(), last.fit);
            }
            o.embeddings
        }
        MethodArg::Wd => {
            let o = decompose_weighted(&tensor, &training)?;
            if let Some(l) = o.epoch_losses.last() {
                info!("WD: {} epochs, loss {l:.6}", o.epoch_losses.len());
            }
            o.embeddings
        }
    };
    let store = EmbeddingStore::from_embedding_set(&vocab, &set)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        run.guard.ensure_dir(parent)?;
    }
    let out = run.output(out.to_path_buf());
    save_embeddings(&store, &out)?;
    let back = load_embeddings(&out)?;
    ensure!(
        back.dim() == cfg.dim && back.len() == store.len(),
        "embedding file does not read back"
    );
    println!("vectors={} dim={}", store.len(), store.dim());
    run.finish(sidecar(&out))
}

fn query_sim(
    cfg: &RunConfig,
    embeddings: &Path,
    pairs: &Path,
    centered: bool,
    roster: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let mut run = Run::new(
        "query-sim",
        cfg,
        json!({ "embeddings": embeddings, "pairs": pairs, "centered": centered, "out": out }),
    );
    run.input("embeddings", embeddings)?;
    run.input("pairs", pairs)?;
    if let Some(r) = roster {
        run.input("roster", r)?;
    }
    let store = store_with_roster(load_embeddings(embeddings)?, &read_roster(roster)?)?;
    let pairs = token_lines(pairs)?
        .into_iter()
        .enumerate()
        .map(|(n, t)| match <[String; 2]>::try_from(t) {
            Ok([a, b]) => Ok((a, b)),
            Err(_) => bail!("pairs line {}: expected two tokens", n + 1),
        })
        .collect::<Result<Vec<_>>>()?;
    ensure!(!pairs.is_empty(), "no pairs given");
    let table = preposition_similarity_table(&store, &pairs, centered)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| vec![r.left.clone(), r.right.clone(), r.cosine.to_string()])
        .collect();
    let out = out.map(|p| run.output(p.to_path_buf()));
    write_csv(out.as_deref(), &["left", "right", "cosine"], &rows)?;
    match manifest_for(out.as_deref()) {
        Some(m) => run.finish(m),
        None => {
            run.guard.commit();
            Ok(())
        }
    }
}

fn paraphrase(
    cfg: &RunConfig,
    embeddings: &Path,
    head: &str,
    prep: &str,
    candidates: &Path,
    out: Option<&Path>,
) -> Result<()> {
    let mut run = Run::new(
        "paraphrase",
        cfg,
        json!({ "embeddings": embeddings, "head": head, "prep": prep, "candidates": candidates, "out": out }),
    );
    run.input("embeddings", embeddings)?;
    run.input("candidates", candidates)?;
    let store = load_embeddings(embeddings)?;
    let verbs: Vec<String> = token_lines(candidates)?.into_iter().flatten().collect();
    let ranked = paraphrase_phrasal_verb(head, prep, &verbs, &store)?;
    let rows: Vec<Vec<String>> = ranked
        .iter()
        .take(cfg.top)
        .map(|c| vec![c.verb.clone(), c.distance.to_string()])
        .collect();
    let out = out.map(|p| run.output(p.to_path_buf()));
    write_csv(out.as_deref(), &["verb", "distance"], &rows)?;
    match manifest_for(out.as_deref()) {
        Some(m) => run.finish(m),
        None => {
            run.guard.commit();
            Ok(())
        }
    }
}

fn spectrum(cfg: &RunConfig, tensor_dir: &Path, slice: &str, out: Option<&Path>) -> Result<()> {
    let mut run = Run::new(
        "spectrum",
        cfg,
        json!({ "tensor": tensor_dir, "slice": slice, "out": out }),
    );
    let tensor_path = run.input("tensor", &tensor_dir.join(TENSOR_FILE))?;
    let vocab_path = run.input("vocabulary", &tensor_dir.join(VOCAB_FILE))?;
    let tensor = load_tensor(&tensor_path)?;
    let vocab = load_vocabulary(&vocab_path)?;
    let k = if slice == NO_PREP_TOKEN {
        tensor.extra_slice()
    } else if let Some(k) = vocab.prep_id(slice) {
        k
    } else if let Ok(k) = slice.parse::<usize>() {
        k
    } else {
        bail!("`{slice}` is not a roster preposition");
    };
    let values = slice_spectrum(&tensor, k, cfg.top)?;
    let rows: Vec<Vec<String>> = values
        .iter()
        .enumerate()
        .map(|(n, v)| vec![(n + 1).to_string(), v.to_string()])
        .collect();
    let out = out.map(|p| run.output(p.to_path_buf()));
    write_csv(out.as_deref(), &["index", "normalized_singular_value"], &rows)?;
    match manifest_for(out.as_deref()) {
        Some(m) => run.finish(m),
        None => {
            run.guard.commit();
            Ok(())
        }
    }
}

fn load_selection(path: &Path, roster: &[String]) -> Result<Vec<SelectionInstance>> {
    let data = load_selection_dataset(path, roster)?;
    for (line, reason) in data.rejected.iter().take(5) {
        warn!("{}:{line}: {reason}", path.display());
    }
    ensure!(!data.instances.is_empty(), "{} has no usable instances", path.display());
    Ok(data.instances)
}

fn load_attachment(path: &Path) -> Result<Vec<AttachmentInstance>> {
    let data = load_attachment_dataset(path)?;
    for (line, reason) in data.rejected.iter().take(5) {
        warn!("{}:{line}: {reason}", path.display());
    }
    ensure!(!data.instances.is_empty(), "{} has no usable instances", path.display());
    Ok(data.instances)
}

fn train_select(cfg: &RunConfig, train: &Path, embeddings: &Path, roster: Option<&Path>, out: &Path) -> Result<()> {
    let mut run = Run::new(
        "train-select",
        cfg,
        json!({ "train": train, "embeddings": embeddings, "roster": roster, "out": out }),
    );
    run.input("train", train)?;
    run.input("embeddings", embeddings)?;
    if let Some(r) = roster {
        run.input("roster", r)?;
    }
    let store = store_with_roster(load_embeddings(embeddings)?, &read_roster(roster)?)?;
    let instances = load_selection(train, store.roster())?;
    let sel = SelectionConfig {
        window: cfg.context_window,
        fnn: cfg.fnn(),
        ..SelectionConfig::default()
    };
    let (models, report) = train_selection(&instances, &store, &sel)?;
    info!(
        "detector rows {}, corrector instances {} ({} rows), undecidable {}",
        report.detection_rows, report.corrector_instances, report.corrector_rows, report.undecidable
    );
    run.guard.ensure_dir(out)?;
    for name in SelectionModels::file_names() {
        run.output(out.join(name));
    }
    models.save(out)?;
    let emb = run.output(out.join(EMBEDDINGS_FILE));
    std::fs::copy(embeddings, &emb).with_context(|| format!("copying embeddings to {}", emb.display()))?;
    ensure!(
        SelectionModels::load(out)? == models,
        "saved selection models do not read back"
    );
    run.finish(out.join("train-select.manifest.json"))
}

fn eval_select(cfg: &RunConfig, test: &Path, models_dir: &Path, out: Option<&Path>) -> Result<()> {
    let out = out.unwrap_or(models_dir);
    let mut run = Run::new(
        "eval-select",
        cfg,
        json!({ "test": test, "models": models_dir, "out": out }),
    );
    run.input("test", test)?;
    for name in SelectionModels::file_names() {
        run.input(name, &models_dir.join(name))?;
    }
    let emb = run.input("embeddings", &models_dir.join(EMBEDDINGS_FILE))?;
    let models = SelectionModels::load(models_dir)?;
    let store = load_embeddings(&emb)?.with_roster(models.roster())?;
    let instances = load_selection(test, models.roster())?;
    let report = evaluate_selection(&instances, &models, &store)?;

    run.guard.ensure_dir(out)?;
    let metrics = run.output(out.join("select_metrics.txt"));
    let c = report.counts;
    std::fs::write(
        &metrics,
        format!(
            "{}\nTP={} FP={} FN={} instances={}\n",
            report.metrics_line(),
            c.tp,
            c.fp,
            c.fn_,
            instances.len()
        ),
    )?;
    let errors = run.output(out.join("select_errors.csv"));
    let rows: Vec<Vec<String>> = report
        .errors
        .iter()
        .map(|e| {
            vec![
                e.index.to_string(),
                e.observed.clone(),
                e.gold.clone(),
                e.predicted.clone(),
                e.flagged.to_string(),
                instances[e.index].tokens.join(" "),
            ]
        })
        .collect();
    write_csv(
        Some(&errors),
        &["index", "observed", "gold", "predicted", "flagged", "sentence"],
        &rows,
    )?;
    println!("{}", report.metrics_line());
    run.finish(out.join("eval-select.manifest.json"))
}

fn train_attach(cfg: &RunConfig, train: &Path, embeddings: &Path, out: &Path) -> Result<()> {
    let mut run = Run::new(
        "train-attach",
        cfg,
        json!({ "train": train, "embeddings": embeddings, "out": out }),
    );
    run.input("train", train)?;
    run.input("embeddings", embeddings)?;
    let store = load_embeddings(embeddings)?;
    let instances = load_attachment(train)?;
    let att = AttachmentConfig {
        fnn: cfg.fnn(),
        ..AttachmentConfig::default()
    };
    let model = train_attachment(&instances, &store, &att)?;
    run.guard.ensure_dir(out)?;
    run.output(out.join(AttachmentModel::file_name()));
    model.save(out)?;
    let emb = run.output(out.join(EMBEDDINGS_FILE));
    std::fs::copy(embeddings, &emb).with_context(|| format!("copying embeddings to {}", emb.display()))?;
    ensure!(
        AttachmentModel::load(out)? == model,
        "saved attachment model does not read back"
    );
    run.finish(out.join("train-attach.manifest.json"))
}

fn eval_attach(cfg: &RunConfig, test: &Path, models_dir: &Path, out: Option<&Path>) -> Result<()> {
    let out = out.unwrap_or(models_dir);
    let mut run = Run::new(
        "eval-attach",
        cfg,
        json!({ "test": test, "models": models_dir, "out": out }),
    );
    run.input("test", test)?;
    run.input("model", &models_dir.join(AttachmentModel::file_name()))?;
    let emb = run.input("embeddings", &models_dir.join(EMBEDDINGS_FILE))?;
    let model = AttachmentModel::load(models_dir)?;
    let store = load_embeddings(&emb)?;
    let instances = load_attachment(test)?;
    let report = evaluate_attachment(&instances, &model, &store)?;
    let baseline = evaluate_baseline(&instances)?;

    run.guard.ensure_dir(out)?;
    let metrics = run.output(out.join("attach_metrics.txt"));
    std::fs::write(
        &metrics,
        format!(
            "accuracy={}\nbaseline_nearest={}\ninstances={}\n",
            report.accuracy,
            baseline.accuracy,
            instances.len()
        ),
    )?;
    let errors = run.output(out.join("attach_errors.csv"));
    let rows: Vec<Vec<String>> = report
        .errors
        .iter()
        .map(|e| {
            vec![
                e.index.to_string(),
                instances[e.index].preposition.clone(),
                instances[e.index].child.clone(),
                e.gold_token.clone(),
                e.predicted_token.clone(),
                e.gold.to_string(),
                e.predicted.to_string(),
            ]
        })
        .collect();
    write_csv(
        Some(&errors),
        &[
            "index",
            "preposition",
            "child",
            "gold_head",
            "predicted_head",
            "gold_index",
            "predicted_index",
        ],
        &rows,
    )?;
    println!("accuracy={}", report.accuracy);
    run.finish(out.join("eval-attach.manifest.json"))
}
