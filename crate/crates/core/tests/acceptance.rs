//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! results are printed even when everything passes.

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use preptensor::attach::{evaluate_attachment, evaluate_baseline, train_attachment, AttachmentConfig, AttachmentModel};
use preptensor::corpus::{count_extra_slice, count_tensor, tokenize_sentences, SparseCountTensor, Vocabulary};
use preptensor::embeddings::{
    cosine_similarity, paraphrase_phrasal_verb, slice_spectrum, triple_similarity, EmbeddingStore, NO_PREP_TOKEN,
};
use preptensor::factorize::{
    cp_fit, decompose_weighted, orth_als, weight, weighted_gradient, Biases, EmbeddingSet, Entry, Method, SparseTensor,
    TrainingConfig,
};
use preptensor::learn::{
    edit_counts, train_decision_tree, train_fnn, EditCounts, FeedForwardNet, FnnHyper, Prf, TreeParams,
};
use preptensor::lexicon::selection_roster;
use preptensor::linalg::Matrix;
use preptensor::select::{evaluate_selection, train_selection, SelectionConfig};
use preptensor::synth;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

// 1 -------------------------------------------------------------------------

fn oracle_counts(sentences: &[Vec<String>], vocab: &Vocabulary, t: usize) -> HashMap<(usize, usize, usize), u64> {
    let k_extra = vocab.num_prepositions();
    let mut out = HashMap::new();
    for s in sentences {
        let word = |p: usize| vocab.word_id(&s[p]);
        let preps: Vec<(usize, usize)> = (0..s.len())
            .filter_map(|p| vocab.prep_id(&s[p]).map(|k| (p, k)))
            .collect();
        for &(pp, k) in &preps {
            for a in 0..s.len() {
                for b in 0..s.len() {
                    if a == b || a.abs_diff(pp) > t || b.abs_diff(pp) > t || a == pp || b == pp {
                        continue;
                    }
                    if let (Some(i), Some(j)) = (word(a), word(b)) {
                        *out.entry((i, j, k)).or_insert(0) += 1;
                    }
                }
            }
        }
        let outside = |p: usize| preps.iter().all(|&(pp, _)| p.abs_diff(pp) > t);
        for a in 0..s.len() {
            for b in 0..s.len() {
                if a == b || a.abs_diff(b) > 2 * t {
                    continue;
                }
                if let (Some(i), Some(j)) = (word(a), word(b)) {
                    if outside(a) || outside(b) {
                        *out.entry((i, j, k_extra)).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let roster: Vec<String> = ["p0", "p1", "p2"].map(String::from).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut entries = 0;
    for corpus in 0..100 {
        let vocab_size = rng.random_range(5..=50);
        let n_sent = rng.random_range(1..=200);
        let sentences: Vec<Vec<String>> = (0..n_sent)
            .map(|_| {
                let len = rng.random_range(0..16);
                (0..len)
                    .map(|_| {
                        if rng.random_bool(0.2) {
                            roster[rng.random_range(0..3)].clone()
                        } else {
                            format!("w{}", rng.random_range(0..vocab_size))
                        }
                    })
                    .collect()
            })
            .collect();
        let min_count = rng.random_range(1..=3);
        let Ok(vocab) = Vocabulary::build(&sentences, min_count, &roster) else {
            continue;
        };
        let shards = rng.random_range(1..=4);
        let tensor = count_tensor(&sentences, &vocab, 3, shards).map_err(|e| e.to_string())?;
        let want = oracle_counts(&sentences, &vocab, 3);
        let got: HashMap<(usize, usize, usize), u64> = tensor
            .iter()
            .map(|(ix, c)| ((ix.i as usize, ix.j as usize, ix.k as usize), c))
            .collect();
        ensure(got == want, format!("corpus {corpus}: tensor differs from oracle"))?;
        entries += want.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!(
        "100 corpora, {entries} entries matched exactly in {elapsed:.2?}"
    ))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let roster = vec!["on".to_string()];
    let s1: Vec<Vec<String>> = vec!["cats sat on mats quietly".split(' ').map(String::from).collect()];
    let v1 = Vocabulary::build(&s1, 1, &roster).map_err(|e| e.to_string())?;
    let x1 = count_extra_slice(&s1, &v1, 3).map_err(|e| e.to_string())?;
    ensure(
        x1.total() == 0,
        format!("all-in-window sentence gave {} increments", x1.total()),
    )?;
    let s2: Vec<Vec<String>> = vec!["dogs chase cats".split(' ').map(String::from).collect()];
    let v2 = Vocabulary::build(&s2, 1, &roster).map_err(|e| e.to_string())?;
    let x2 = count_extra_slice(&s2, &v2, 3).map_err(|e| e.to_string())?;
    ensure(
        x2.total() == 6,
        format!("no-preposition sentence gave {} increments", x2.total()),
    )?;
    Ok("0 and 6 increments".into())
}

// 3 -------------------------------------------------------------------------

fn planted_cp(dims: [usize; 3], factors: [&Matrix; 3]) -> SparseTensor {
    SparseTensor::from_dense(dims, |i, j, k| {
        preptensor::linalg::triple_product(factors[0].row(i), factors[1].row(j), factors[2].row(k))
    })
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let dims = [100, 100, 6];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = Matrix::random_normal(dims[0], 5, 1.0, &mut rng);
    let b = Matrix::random_normal(dims[1], 5, 1.0, &mut rng);
    let c = Matrix::random_normal(dims[2], 5, 1.0, &mut rng);
    let t = planted_cp(dims, [&a, &b, &c]);
    let cfg = TrainingConfig {
        dim: 5,
        iterations: 100,
        ortho_iterations: 0,
        fit_tolerance: 0.0,
        seed: 4,
        ..TrainingConfig::default()
    };
    let out = orth_als(&t, &cfg).map_err(|e| e.to_string())?;
    let fit = cp_fit(&t, &out.embeddings).map_err(|e| e.to_string())?;
    let mut prev = out.trace.initial_objective;
    for r in &out.trace.mode_updates {
        ensure(
            r.objective <= prev * (1.0 + 1e-9) + 1e-12,
            format!("objective rose from {prev} to {} in sweep {}", r.objective, r.sweep),
        )?;
        prev = r.objective;
    }
    let elapsed = start.elapsed();
    ensure(fit >= 0.999, format!("fit {fit}"))?;
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!(
        "fit {fit:.6} after {} sweeps, monotone, {elapsed:.2?}",
        out.trace.sweeps.len()
    ))
}

// 4 -------------------------------------------------------------------------

fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| {
        let x: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
        x
    });
    g.qr().q()
}

fn column_cosine(x: &Matrix, c: usize, y: &DMatrix<f64>, r: usize) -> f64 {
    let xc = x.column(c);
    let yc: Vec<f64> = y.column(r).iter().copied().collect();
    cosine_similarity(&xc, &yc).unwrap_or(0.0).abs()
}

fn criterion_4() -> Outcome {
    let dims = [40, 40, 40];
    let d = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let planted: Vec<DMatrix<f64>> = dims.iter().map(|&n| random_orthonormal(n, d, &mut rng)).collect();
    let lambda = [10.0, 8.0, 6.0, 4.0, 2.0];
    let t = SparseTensor::from_dense(dims, |i, j, k| {
        (0..d)
            .map(|r| lambda[r] * planted[0][(i, r)] * planted[1][(j, r)] * planted[2][(k, r)])
            .sum()
    });
    let cfg = TrainingConfig {
        dim: d,
        iterations: 50,
        ortho_iterations: 5,
        seed: 6,
        ..TrainingConfig::default()
    };
    let out = orth_als(&t, &cfg).map_err(|e| e.to_string())?;
    let f = &out.embeddings;
    let mut used = vec![false; d];
    let mut worst: f64 = 1.0;
    for r in 0..d {
        let (best, score) = (0..d)
            .filter(|c| !used[*c])
            .map(|c| (c, column_cosine(&f.u, c, &planted[0], r)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("columns left");
        used[best] = true;
        let per = score
            .min(column_cosine(&f.w, best, &planted[1], r))
            .min(column_cosine(&f.q, best, &planted[2], r));
        worst = worst.min(per);
    }
    ensure(worst >= 0.99, format!("worst per-component cosine {worst}"))?;
    Ok(format!("worst per-component cosine {worst:.6}"))
}

// 5 -------------------------------------------------------------------------

fn random_set(dims: [usize; 3], d: usize, rng: &mut ChaCha8Rng) -> EmbeddingSet {
    let mut m = |n| Matrix::random_normal(n, d, 0.7, rng);
    let (u, w, q) = (m(dims[0]), m(dims[1]), m(dims[2]));
    let mut v = |n| (0..n).map(|_| rng.random_range(-0.5..0.5)).collect::<Vec<f64>>();
    let biases = Biases {
        u: v(dims[0]),
        w: v(dims[1]),
        q: v(dims[2]),
    };
    EmbeddingSet {
        u,
        w,
        q,
        biases: Some(biases),
        method: Method::Weighted,
    }
}

fn entry_loss(f: &EmbeddingSet, e: &Entry, x_max: f64, alpha: f64) -> f64 {
    let (i, j, k) = (e.i as usize, e.j as usize, e.k as usize);
    weight(e.value, x_max, alpha) * (f.predict(i, j, k) - e.value.ln_1p()).powi(2)
}

fn min_hidden_preactivation(net: &FeedForwardNet, rows: &[Vec<f64>]) -> f64 {
    let mut min = f64::INFINITY;
    for row in rows {
        let mut a = row.clone();
        for l in 0..net.num_layers() - 1 {
            let (w, b) = net.layer(l);
            let z: Vec<f64> = (0..w.rows())
                .map(|o| b[o] + preptensor::linalg::dot(w.row(o), &a))
                .collect();
            min = z.iter().fold(min, |m, v| m.min(v.abs()));
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    min
}

fn criterion_5() -> Outcome {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_wd: f64 = 0.0;
    for _ in 0..100 {
        let dims = [rng.random_range(1..5), rng.random_range(1..5), rng.random_range(1..4)];
        let d = rng.random_range(1..7);
        let f = random_set(dims, d, &mut rng);
        let e = Entry {
            i: rng.random_range(0..dims[0]) as u32,
            j: rng.random_range(0..dims[1]) as u32,
            k: rng.random_range(0..dims[2]) as u32,
            value: rng.random_range(1..40) as f64,
        };
        let (x_max, alpha) = (rng.random_range(2.0..20.0), rng.random_range(0.3..1.0));
        let g = weighted_gradient(&f, &e, x_max, alpha);
        let (i, j, k) = (e.i as usize, e.j as usize, e.k as usize);
        for m in 0..3 {
            let row = [i, j, k][m];
            let analytic = [&g.u, &g.w, &g.q][m];
            for c in 0..d {
                let mut p = f.clone();
                let bump = |p: &mut EmbeddingSet, by: f64| {
                    let mat = [&mut p.u, &mut p.w, &mut p.q];
                    let v = mat[m].get(row, c);
                    match m {
                        0 => p.u.set(row, c, v + by),
                        1 => p.w.set(row, c, v + by),
                        _ => p.q.set(row, c, v + by),
                    }
                };
                bump(&mut p, h);
                let lp = entry_loss(&p, &e, x_max, alpha);
                bump(&mut p, -2.0 * h);
                let lm = entry_loss(&p, &e, x_max, alpha);
                worst_wd = worst_wd.max(rel_err((lp - lm) / (2.0 * h), analytic[c]));
            }
        }
        let mut p = f.clone();
        p.biases.as_mut().unwrap().u[i] += h;
        let lp = entry_loss(&p, &e, x_max, alpha);
        p.biases.as_mut().unwrap().u[i] -= 2.0 * h;
        let lm = entry_loss(&p, &e, x_max, alpha);
        worst_wd = worst_wd.max(rel_err((lp - lm) / (2.0 * h), g.bias));
    }

    let mut worst_fnn: f64 = 0.0;
    let mut resampled = 0;
    let mut cfg = 0;
    while cfg < 100 {
        let sizes = [
            rng.random_range(1..6),
            rng.random_range(2..7),
            rng.random_range(2..6),
            rng.random_range(2..4),
        ];
        let mut net = FeedForwardNet::zeros(&sizes).map_err(|e| e.to_string())?;
        let params: Vec<f64> = (0..net.parameters().len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        net.set_parameters(&params);
        let n = rng.random_range(1..6);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..sizes[3])).collect();
        // central differences are meaningless across a rectifier kink
        if min_hidden_preactivation(&net, &rows) < 1e-3 {
            resampled += 1;
            continue;
        }
        cfg += 1;
        let (_, grad) = net.loss_and_gradient(&rows, &labels).map_err(|e| e.to_string())?;
        let g = grad.flatten();
        let base = net.parameters();
        let mut probe = net.clone();
        for p in 0..base.len() {
            let mut x = base.clone();
            x[p] += h;
            probe.set_parameters(&x);
            let lp = probe.loss(&rows, &labels).map_err(|e| e.to_string())?;
            x[p] -= 2.0 * h;
            probe.set_parameters(&x);
            let lm = probe.loss(&rows, &labels).map_err(|e| e.to_string())?;
            worst_fnn = worst_fnn.max(rel_err((lp - lm) / (2.0 * h), g[p]));
        }
    }
    ensure(worst_wd <= 1e-4, format!("weighted gradient rel err {worst_wd:e}"))?;
    ensure(worst_fnn <= 1e-4, format!("FNN gradient rel err {worst_fnn:e}"))?;
    Ok(format!(
        "max rel err: weighted {worst_wd:.2e}, FNN {worst_fnn:.2e} ({resampled} kink-adjacent nets redrawn)"
    ))
}

// 6 -------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    ensure(weight(0.0, 10.0, 0.75) == 0.0, "w(0) != 0")?;
    ensure(weight(10.0, 10.0, 0.75) == 1.0, "w(x_max) != 1")?;
    let grid: Vec<f64> = (0..1000).map(|n| weight(n as f64 * 0.02, 10.0, 0.75)).collect();
    ensure(grid.windows(2).all(|w| w[0] <= w[1]), "not monotone")?;
    let w5 = weight(5.0, 10.0, 0.75);
    ensure((w5 - 0.594604).abs() <= 1e-6, format!("w(5) = {w5}"))?;
    Ok(format!("w(5;10,0.75) = {w5:.6}"))
}

// 7 -------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let d = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut vec_in = |lo: f64, hi: f64| (0..d).map(|_| rng.random_range(lo..hi)).collect::<Vec<f64>>();
    let q_const = vec_in(0.5, 1.5);
    let preps: Vec<Vec<f64>> = (0..4).map(|_| vec_in(-1.0, 1.0)).collect();
    let mut rows = vec![(NO_PREP_TOKEN.to_string(), q_const.clone())];
    for (n, p) in preps.iter().enumerate() {
        rows.push((format!("prep{n}"), p.clone()));
    }
    let mut pairs = Vec::new();
    for n in 0..20 {
        let verb = vec_in(-1.0, 1.0);
        let p = n % preps.len();
        let head: Vec<f64> = verb
            .iter()
            .zip(&q_const)
            .zip(&preps[p])
            .map(|((v, c), q)| v * c / q)
            .collect();
        rows.push((format!("head{n}"), head));
        rows.push((format!("verb{n}"), verb));
        pairs.push((format!("head{n}"), format!("prep{p}"), format!("verb{n}")));
    }
    let store = EmbeddingStore::from_rows(rows).map_err(|e| e.to_string())?;
    let candidates: Vec<String> = (0..20).map(|n| format!("verb{n}")).collect();
    let mut worst: f64 = 0.0;
    for (h, p, v) in &pairs {
        let ranked = paraphrase_phrasal_verb(h, p, &candidates, &store).map_err(|e| e.to_string())?;
        ensure(
            &ranked[0].verb == v,
            format!("{h}+{p}: got {} instead of {v}", ranked[0].verb),
        )?;
        worst = worst.max(ranked[0].distance);
    }
    ensure(worst <= 1e-10, format!("distance {worst:e}"))?;
    Ok(format!("20/20 top-1, max distance {worst:.1e}"))
}

// 8 -------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let vecs = (1usize..24).prop_flat_map(|d| {
        let v = || prop::collection::vec(-10.0f64..10.0, d);
        (v(), v(), v(), 0.01f64..100.0)
    });
    runner
        .run(&vecs, |(a, b, c, s)| {
            prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3));
            prop_assume!(c.iter().any(|x| x.abs() > 1e-3));
            let ab = cosine_similarity(&a, &b).unwrap();
            prop_assert!((ab - cosine_similarity(&b, &a).unwrap()).abs() <= 1e-12);
            let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
            prop_assert!((ab - cosine_similarity(&scaled, &b).unwrap()).abs() <= 1e-12);
            let t = triple_similarity(&a, &b, &c).unwrap();
            for (x, y, z) in [(&a, &c, &b), (&b, &a, &c), (&b, &c, &a), (&c, &a, &b), (&c, &b, &a)] {
                prop_assert!((t - triple_similarity(x, y, z).unwrap()).abs() <= 1e-12);
            }
            prop_assert!((t - triple_similarity(&scaled, &b, &c).unwrap()).abs() <= 1e-12);
            let ones = vec![1.0; a.len()];
            prop_assert_eq!(triple_similarity(&ones, &ones, &ones).unwrap(), 1.0);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 random cases".into())
}

// 9 -------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let b = [1u64, 2, 3, 5, 7];
    let mut text = format!("PREPTENSOR v1 8 1 {} 3\n", b.len() * b.len() + 6);
    for (i, bi) in b.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            text.push_str(&format!("{i} {j} 0 {}\n", (1u64 << (bi * bj)) - 1));
        }
    }
    for i in 0..6 {
        text.push_str(&format!("{i} {i} 1 3\n"));
    }
    let t = SparseCountTensor::from_text(&text).map_err(|e| e.to_string())?;
    let rank_one = slice_spectrum(&t, 0, 5).map_err(|e| e.to_string())?;
    ensure(rank_one[1] <= 1e-8, format!("second value {:e}", rank_one[1]))?;
    let ident = slice_spectrum(&t, 1, 6).map_err(|e| e.to_string())?;
    ensure(
        ident.iter().all(|v| (v - 1.0).abs() <= 1e-10),
        format!("identity spectrum {ident:?}"),
    )?;
    Ok(format!("rank-one tail {:.1e}, identity flat", rank_one[1]))
}

// 10 ------------------------------------------------------------------------

fn criterion_10() -> Outcome {
    let xor: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let xor_y = vec![0, 1, 1, 0];
    let hyper = FnnHyper {
        epochs: 2000,
        validation_fraction: 0.0,
        learning_rate: 0.05,
        ..FnnHyper::default()
    };
    let (net, _) = train_fnn(&xor, &xor_y, &[2, 8, 4, 2], &hyper).map_err(|e| e.to_string())?;
    let hits = xor
        .iter()
        .zip(&xor_y)
        .filter(|(r, y)| net.predict(r).unwrap() == **y)
        .count();
    ensure(hits == 4, format!("XOR {hits}/4"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut blobs = |n: usize| {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = i % 2;
            let c = if y == 1 { 2.0 } else { -2.0 };
            let mut g = || -> f64 { rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng) };
            rows.push(vec![c + 0.5 * g(), c + 0.5 * g()]);
            labels.push(y);
        }
        (rows, labels)
    };
    let (tr, tr_y) = blobs(400);
    let (te, te_y) = blobs(400);
    let (net, _) = train_fnn(&tr, &tr_y, &[2, 16, 8, 2], &FnnHyper::default()).map_err(|e| e.to_string())?;
    let blob_acc = te
        .iter()
        .zip(&te_y)
        .filter(|(r, y)| net.predict(r).unwrap() == **y)
        .count() as f64
        / 400.0;
    ensure(blob_acc >= 0.99, format!("blobs {blob_acc}"))?;

    let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0]).collect();
    let ys: Vec<usize> = xs.iter().map(|x| (x[0] >= 0.5) as usize).collect();
    let tree = train_decision_tree(&xs, &ys, TreeParams::default()).map_err(|e| e.to_string())?;
    let tree_hits = xs
        .iter()
        .zip(&ys)
        .filter(|(x, y)| tree.predict(x).unwrap().class == **y)
        .count();
    ensure(tree_hits == 40, format!("tree {tree_hits}/40"))?;

    let obs = ["to", "in", "at", "for", "on", "of"];
    let pred = ["of", "on", "by", "for", "on", "of"];
    let gold = ["of", "on", "at", "to", "in", "from"];
    let counts = edit_counts(&obs, &pred, &gold).map_err(|e| e.to_string())?;
    ensure(counts == EditCounts { tp: 2, fp: 1, fn_: 3 }, format!("{counts:?}"))?;
    let prf = Prf::from_counts(counts);
    ensure(
        (prf.precision - 2.0 / 3.0).abs() < 1e-15 && (prf.recall - 0.4).abs() < 1e-15 && (prf.f1 - 0.5).abs() < 1e-15,
        format!("{prf:?}"),
    )?;
    Ok(format!(
        "XOR 4/4, blobs {blob_acc:.4}, tree 40/40, PRF (0.667, 0.4, 0.5)"
    ))
}

// 11 / 12 -------------------------------------------------------------------

struct SmokeRun {
    selection_f1: f64,
    keep_f1: f64,
    attach_acc: f64,
    baseline_acc: f64,
}

fn smoke_pipeline(out: &Path) -> Result<SmokeRun, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let raw = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.txt")).map_err(|e| err(&e))?;
    let sentences = tokenize_sentences(&raw).map_err(|e| err(&e))?;
    let vocab = Vocabulary::build(&sentences, 5, &selection_roster()).map_err(|e| err(&e))?;
    let tensor = count_tensor(&sentences, &vocab, 3, 1).map_err(|e| err(&e))?;
    let cfg = TrainingConfig {
        dim: 25,
        iterations: 20,
        ..TrainingConfig::default()
    };
    let wd = decompose_weighted(&tensor, &cfg).map_err(|e| err(&e))?;
    let store = EmbeddingStore::from_embedding_set(&vocab, &wd.embeddings).map_err(|e| err(&e))?;
    std::fs::write(out.join("embeddings.txt"), store.to_text()).map_err(|e| err(&e))?;

    let train = synth::synthetic_selection_instances(500, 0.3, 101);
    let test = synth::synthetic_selection_instances(500, 0.3, 102);
    let (models, _) = train_selection(&train, &store, &SelectionConfig::default()).map_err(|e| err(&e))?;
    models.save(out).map_err(|e| err(&e))?;
    let report = evaluate_selection(&test, &models, &store).map_err(|e| err(&e))?;
    let observed: Vec<&str> = test.iter().map(|i| i.observed.as_str()).collect();
    let gold: Vec<&str> = test.iter().map(|i| i.gold.as_str()).collect();
    let keep = Prf::from_counts(edit_counts(&observed, &observed, &gold).map_err(|e| err(&e))?);

    let a_train = synth::synthetic_attachment_instances(500, 0.6, 201);
    let a_test = synth::synthetic_attachment_instances(500, 0.6, 202);
    let model = train_attachment(&a_train, &store, &AttachmentConfig::default()).map_err(|e| err(&e))?;
    model.save(out).map_err(|e| err(&e))?;
    let acc = evaluate_attachment(&a_test, &model, &store).map_err(|e| err(&e))?;
    let base = evaluate_baseline(&a_test).map_err(|e| err(&e))?;
    std::fs::write(
        out.join("metrics.txt"),
        format!(
            "{}\naccuracy={}\nbaseline={}\n",
            report.metrics_line(),
            acc.accuracy,
            base.accuracy
        ),
    )
    .map_err(|e| err(&e))?;
    Ok(SmokeRun {
        selection_f1: report.prf.f1,
        keep_f1: keep.f1,
        attach_acc: acc.accuracy,
        baseline_acc: base.accuracy,
    })
}

fn criterion_11(dir: &Path) -> Outcome {
    let start = Instant::now();
    let run = smoke_pipeline(dir)?;
    let elapsed = start.elapsed();
    ensure(elapsed <= Duration::from_secs(300), format!("took {elapsed:?}"))?;
    ensure(
        run.selection_f1 > run.keep_f1,
        format!("selection F1 {} vs keep {}", run.selection_f1, run.keep_f1),
    )?;
    ensure(
        (run.baseline_acc - 0.6).abs() < 1e-12,
        format!("baseline {}", run.baseline_acc),
    )?;
    ensure(
        run.attach_acc > run.baseline_acc,
        format!("attachment {} vs {}", run.attach_acc, run.baseline_acc),
    )?;
    Ok(format!(
        "selection F1 {:.4} (keep {:.1}), attachment {:.4} (nearest {:.2}), {elapsed:.1?}",
        run.selection_f1, run.keep_f1, run.attach_acc, run.baseline_acc
    ))
}

fn criterion_12(first: &Path) -> Outcome {
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    smoke_pipeline(second.path())?;
    let mut names: Vec<String> = vec![
        "embeddings.txt".into(),
        "metrics.txt".into(),
        AttachmentModel::file_name().into(),
    ];
    names.extend(preptensor::select::SelectionModels::file_names().map(String::from));
    for name in &names {
        let a = std::fs::read(first.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = std::fs::read(second.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(a == b, format!("{name} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical", names.len()))
}

fn main() {
    let smoke_dir = tempfile::tempdir().expect("temp dir");
    let smoke = smoke_dir.path().to_path_buf();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("counting oracle", Box::new(criterion_1)),
        ("extra-slice hand cases", Box::new(criterion_2)),
        ("ALS rank recovery", Box::new(criterion_3)),
        ("Orth-ALS component recovery", Box::new(criterion_4)),
        ("gradient checks", Box::new(criterion_5)),
        ("weight function", Box::new(criterion_6)),
        ("paraphrase geometry", Box::new(criterion_7)),
        ("similarity algebra", Box::new(criterion_8)),
        ("spectrum", Box::new(criterion_9)),
        ("learners and metrics", Box::new(criterion_10)),
        (
            "end-to-end smoke",
            Box::new({
                let d = smoke.clone();
                move || criterion_11(&d)
            }),
        ),
        (
            "determinism",
            Box::new({
                let d = smoke.clone();
                move || criterion_12(&d)
            }),
        ),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (n, (name, check)) in checks.iter().enumerate() {
        let id = format!("criterion {:>2}", n + 1);
        if let Some(f) = &filter {
            if !name.contains(f.as_str()) && !id.contains(f.as_str()) {
                continue;
            }
        }
        let result =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("{id} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
