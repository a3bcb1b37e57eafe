use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::als::random_init;
use super::{Biases, EmbeddingSet, Entry, FactorizeError, Method, SparseTensor, TrainingConfig};
use crate::corpus::SparseCountTensor;
use crate::linalg::Matrix;

/// GloVe weighting `min((x / x_max)^α, 1)`; zero for `x = 0`.
pub fn weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (x / x_max).powf(alpha).min(1.0)
    }
}

/// Gradient of `ω (⟨u_i, w_j, q_k⟩ + b_Ui + b_Wj + b_Qk − log(1+x))²` for one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryGradient {
    pub residual: f64,
    pub weight: f64,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
    /// Shared by all three biases.
    pub bias: f64,
}

fn bias_sum(f: &EmbeddingSet, i: usize, j: usize, k: usize) -> f64 {
    f.biases.as_ref().map_or(0.0, |b| b.u[i] + b.w[j] + b.q[k])
}

/// `entry.value` is the raw count `x`.
pub fn weighted_gradient(f: &EmbeddingSet, entry: &Entry, x_max: f64, alpha: f64) -> EntryGradient {
    let (i, j, k) = (entry.i as usize, entry.j as usize, entry.k as usize);
    let (u, w, q) = (f.u.row(i), f.w.row(j), f.q.row(k));
    let omega = weight(entry.value, x_max, alpha);
    let residual = crate::linalg::triple_product(u, w, q) + bias_sum(f, i, j, k) - entry.value.ln_1p();
    let g = 2.0 * omega * residual;
    EntryGradient {
        residual,
        weight: omega,
        u: w.iter().zip(q).map(|(a, b)| g * a * b).collect(),
        w: u.iter().zip(q).map(|(a, b)| g * a * b).collect(),
        q: u.iter().zip(w).map(|(a, b)| g * a * b).collect(),
        bias: g,
    }
}

/// Weighted objective over the stored (nonzero) raw counts.
pub fn weighted_loss(counts: &SparseTensor, f: &EmbeddingSet, x_max: f64, alpha: f64) -> f64 {
    counts
        .entries()
        .iter()
        .map(|e| {
            let (i, j, k) = (e.i as usize, e.j as usize, e.k as usize);
            let r = f.predict(i, j, k) - e.value.ln_1p();
            weight(e.value, x_max, alpha) * r * r
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct WeightedOutcome {
    pub embeddings: EmbeddingSet,
    /// Full-pass loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// AdaGrad accumulators, initialised to one.
struct Accumulators {
    u: Matrix,
    w: Matrix,
    q: Matrix,
    bu: Vec<f64>,
    bw: Vec<f64>,
    bq: Vec<f64>,
}

impl Accumulators {
    fn new(dims: [usize; 3], d: usize) -> Self {
        let ones = |r: usize| Matrix::from_vec(r, d, vec![1.0; r * d]);
        Self {
            u: ones(dims[0]),
            w: ones(dims[1]),
            q: ones(dims[2]),
            bu: vec![1.0; dims[0]],
            bw: vec![1.0; dims[1]],
            bq: vec![1.0; dims[2]],
        }
    }
}

fn adagrad_step(param: &mut f64, acc: &mut f64, grad: f64, lr: f64) {
    *acc += grad * grad;
    *param -= lr * grad / acc.sqrt();
}

/// Stochastic weighted decomposition of raw counts: one AdaGrad step per
/// nonzero entry, entries reshuffled every epoch. Single-threaded and
/// deterministic for a fixed seed.
pub fn weighted_decomposition(
    counts: &SparseTensor,
    config: &TrainingConfig,
) -> Result<WeightedOutcome, FactorizeError> {
    config.validate()?;
    if counts.is_empty() {
        return Err(FactorizeError::EmptyTensor);
    }
    let dims = counts.dims();
    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut f = random_init(dims, d, &mut rng, Method::Weighted);
    f.biases = Some(Biases {
        u: vec![0.0; dims[0]],
        w: vec![0.0; dims[1]],
        q: vec![0.0; dims[2]],
    });
    let outcome = train_from(counts, f, config, &mut rng)?;
    Ok(outcome)
}

/// Continues weighted training from the given parameters.
pub(crate) fn train_from(
    counts: &SparseTensor,
    mut f: EmbeddingSet,
    config: &TrainingConfig,
    rng: &mut ChaCha8Rng,
) -> Result<WeightedOutcome, FactorizeError> {
    f.check_shape(counts.dims())?;
    let d = f.dim();
    let lr = config.learning_rate;
    let mut acc = Accumulators::new(counts.dims(), d);
    let mut order: Vec<usize> = (0..counts.nnz()).collect();
    let targets: Vec<(f64, f64)> = counts
        .entries()
        .iter()
        .map(|e| (weight(e.value, config.x_max, config.alpha), e.value.ln_1p()))
        .collect();
    let weighted_norm: f64 = targets.iter().map(|(w, y)| w * y * y).sum();
    let mut gu = vec![0.0; d];
    let mut gw = vec![0.0; d];
    let mut gq = vec![0.0; d];
    let mut epoch_losses = Vec::with_capacity(config.iterations);

    for epoch in 1..=config.iterations {
        order.shuffle(rng);
        for &n in &order {
            let e = counts.entries()[n];
            let (omega, target) = targets[n];
            if omega == 0.0 {
                continue;
            }
            let (i, j, k) = (e.i as usize, e.j as usize, e.k as usize);
            let biases = f.biases.as_mut().expect("weighted embeddings carry biases");
            let (u, w, q) = (f.u.row(i), f.w.row(j), f.q.row(k));
            let residual = crate::linalg::triple_product(u, w, q) + biases.u[i] + biases.w[j] + biases.q[k] - target;
            let g = 2.0 * omega * residual;
            for t in 0..d {
                gu[t] = g * w[t] * q[t];
                gw[t] = g * u[t] * q[t];
                gq[t] = g * u[t] * w[t];
            }
            for (grads, mat, accm, row) in [
                (&gu, &mut f.u, &mut acc.u, i),
                (&gw, &mut f.w, &mut acc.w, j),
                (&gq, &mut f.q, &mut acc.q, k),
            ] {
                let params = mat.row_mut(row);
                let accs = accm.row_mut(row);
                for t in 0..d {
                    adagrad_step(&mut params[t], &mut accs[t], grads[t], lr);
                }
            }
            adagrad_step(&mut biases.u[i], &mut acc.bu[i], g, lr);
            adagrad_step(&mut biases.w[j], &mut acc.bw[j], g, lr);
            adagrad_step(&mut biases.q[k], &mut acc.bq[k], g, lr);
        }
        let loss = weighted_loss(counts, &f, config.x_max, config.alpha);
        if !loss.is_finite() {
            return Err(FactorizeError::Diverged { epoch, loss });
        }
        let fit = if weighted_norm > 0.0 {
            1.0 - (loss / weighted_norm).sqrt()
        } else {
            0.0
        };
        info!("epoch {epoch} loss {loss} fit {fit}");
        epoch_losses.push(loss);
    }
    Ok(WeightedOutcome {
        embeddings: f,
        epoch_losses,
    })
}

/// Runs [`weighted_decomposition`] on the raw counts of a count tensor.
pub fn decompose_weighted(
    counts: &SparseCountTensor,
    config: &TrainingConfig,
) -> Result<WeightedOutcome, FactorizeError> {
    weighted_decomposition(&SparseTensor::from_counts(counts), config)
}
