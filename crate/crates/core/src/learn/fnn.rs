use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_dataset, check_row, parse_floats, LearnError};
use crate::linalg::Matrix;

const HIDDEN_BIAS_INIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct FnnHyper {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Share of the rows held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for FnnHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 64,
            epochs: 50,
            validation_fraction: 0.1,
            patience: 5,
            seed: 7,
        }
    }
}

impl FnnHyper {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be >= 1");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must be in [0, 1)");
        }
        Ok(())
    }
}

/// Per-layer parameter gradients, laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &FeedForwardNet) -> Self {
        Self {
            weights: net.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Same ordering as [`FeedForwardNet::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FnnTrace {
    pub train_losses: Vec<f64>,
    pub validation_losses: Vec<f64>,
    /// Epoch (1-based) whose parameters were kept; 0 means the initial ones.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Fully connected network with rectifier hidden layers and a softmax output.
/// Layer `l` maps `sizes[l]` inputs to `sizes[l+1]` outputs through a
/// `sizes[l+1] x sizes[l]` weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet {
    sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// `-ln softmax(z)[y]`, computed without forming the probabilities.
fn cross_entropy(z: &[f64], y: usize) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[y]
}

impl FeedForwardNet {
    fn check_sizes(sizes: &[usize]) -> Result<(), LearnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(LearnError::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        if sizes[sizes.len() - 1] < 2 {
            return Err(LearnError::InvalidConfig("need at least two output classes".into()));
        }
        Ok(())
    }

    /// He-initialized weights. Hidden biases start at a small positive
    /// constant so that no rectifier starts out dead; output biases at zero.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self, LearnError> {
        Self::check_sizes(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = sizes
            .windows(2)
            .map(|w| Matrix::random_normal(w[1], w[0], (2.0 / w[0] as f64).sqrt(), &mut rng))
            .collect();
        let last = sizes.len() - 2;
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases: sizes[1..]
                .iter()
                .enumerate()
                .map(|(l, &n)| vec![if l < last { HIDDEN_BIAS_INIT } else { 0.0 }; n])
                .collect(),
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, LearnError> {
        Self::check_sizes(sizes)?;
        Ok(Self {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect(),
            biases: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn num_classes(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn layer(&self, l: usize) -> (&Matrix, &[f64]) {
        (&self.weights[l], &self.biases[l])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut Matrix, &mut [f64]) {
        (&mut self.weights[l], &mut self.biases[l])
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite) && self.biases.iter().flatten().all(|b| b.is_finite())
    }

    /// Weights then biases, layer by layer.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let n = w.as_slice().len();
            w.as_mut_slice().copy_from_slice(&params[at..at + n]);
            at += n;
            let m = b.len();
            b.copy_from_slice(&params[at..at + m]);
            at += m;
        }
        assert_eq!(at, params.len(), "parameter vector length");
    }

    /// Pre-activations of every layer (the last one is the logits) together
    /// with the post-activations fed to the next layer.
    fn activations(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.weights.len() + 1);
        acts.push(row.to_vec());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let input = &acts[l];
            let hidden = l + 1 < self.weights.len();
            let out: Vec<f64> = (0..w.rows())
                .map(|o| {
                    let z = b[o] + crate::linalg::dot(w.row(o), input);
                    if hidden {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn logits(&self, row: &[f64]) -> Result<Vec<f64>, LearnError> {
        check_row(row, self.num_inputs())?;
        Ok(self.activations(row).pop().expect("at least one layer"))
    }

    /// Class probabilities.
    pub fn forward(&self, row: &[f64]) -> Result<Vec<f64>, LearnError> {
        let mut z = self.logits(row)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Most probable class, lowest index on ties.
    pub fn predict(&self, row: &[f64]) -> Result<usize, LearnError> {
        let p = self.forward(row)?;
        Ok(p.iter()
            .enumerate()
            .fold(0, |best, (c, &v)| if v > p[best] { c } else { best }))
    }

    /// Mean cross-entropy over the rows.
    pub fn loss(&self, rows: &[Vec<f64>], labels: &[usize]) -> Result<f64, LearnError> {
        check_dataset(rows, labels, self.num_classes())?;
        let mut total = 0.0;
        for (r, &y) in rows.iter().zip(labels) {
            total += cross_entropy(&self.logits(r)?, y);
        }
        Ok(total / rows.len() as f64)
    }

    /// Adds the gradient of one example's cross-entropy into `grad` and
    /// returns that example's loss.
    fn accumulate(&self, row: &[f64], label: usize, grad: &mut Gradients) -> f64 {
        let acts = self.activations(row);
        let logits = &acts[acts.len() - 1];
        let loss = cross_entropy(logits, label);
        let mut delta = logits.clone();
        softmax_in_place(&mut delta);
        delta[label] -= 1.0;
        for l in (0..self.weights.len()).rev() {
            let input = &acts[l];
            let gw = &mut grad.weights[l];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (g, x) in gw.row_mut(o).iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
                grad.biases[l][o] += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.weights[l];
            let mut back = vec![0.0; w.cols()];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (b, wv) in back.iter_mut().zip(w.row(o)) {
                        *b += d * wv;
                    }
                }
            }
            // rectifier derivative, read off the stored post-activation
            for (b, a) in back.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *b = 0.0;
                }
            }
            delta = back;
        }
        loss
    }

    /// Mean cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, rows: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Gradients), LearnError> {
        let arity = check_dataset(rows, labels, self.num_classes())?;
        if arity != self.num_inputs() {
            return Err(LearnError::Arity {
                expected: self.num_inputs(),
                found: arity,
            });
        }
        let mut grad = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (r, &y) in rows.iter().zip(labels) {
            loss += self.accumulate(r, y, &mut grad);
        }
        let scale = 1.0 / rows.len() as f64;
        grad.weights
            .iter_mut()
            .for_each(|w| w.as_mut_slice().iter_mut().for_each(|g| *g *= scale));
        grad.biases.iter_mut().flatten().for_each(|g| *g *= scale);
        Ok((loss * scale, grad))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("FNN v1 sizes");
        for s in &self.sizes {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        let line = |out: &mut String, vals: &[f64]| {
            let mut first = true;
            for v in vals {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        };
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for o in 0..w.rows() {
                line(&mut out, w.row(o));
            }
            line(&mut out, b);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let (_, header) = lines.next().ok_or_else(|| LearnError::format(1, "empty model file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() < 5 || h[..3] != ["FNN", "v1", "sizes"] {
            return Err(LearnError::format(1, "expected `FNN v1 sizes n0 n1 ...`"));
        }
        let sizes = h[3..]
            .iter()
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|e| LearnError::format(1, format!("`{s}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut net = Self::zeros(&sizes).map_err(|e| LearnError::format(1, e.to_string()))?;
        let mut last = 1;
        let mut read = |expect: usize| -> Result<Vec<f64>, LearnError> {
            let (n, l) = lines
                .next()
                .ok_or_else(|| LearnError::format(last + 1, "truncated model file"))?;
            last = n;
            let v = parse_floats(l, n)?;
            if v.len() != expect {
                return Err(LearnError::format(
                    n,
                    format!("expected {expect} values, found {}", v.len()),
                ));
            }
            Ok(v)
        };
        for l in 0..net.weights.len() {
            let (rows, cols) = (net.weights[l].rows(), net.weights[l].cols());
            for o in 0..rows {
                let v = read(cols)?;
                net.weights[l].row_mut(o).copy_from_slice(&v);
            }
            net.biases[l] = read(rows)?;
        }
        if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(LearnError::format(n, "trailing content"));
        }
        if !net.is_finite() {
            return Err(LearnError::NonFinite);
        }
        Ok(net)
    }
}

/// Mini-batch SGD with momentum on mean cross-entropy.
///
/// When `validation_fraction > 0` a seeded share of the rows is held out;
/// training stops after `patience` epochs without a better validation loss
/// and the best parameters seen are returned.
pub fn train_fnn(
    rows: &[Vec<f64>],
    labels: &[usize],
    sizes: &[usize],
    hyper: &FnnHyper,
) -> Result<(FeedForwardNet, FnnTrace), LearnError> {
    hyper.validate()?;
    let mut net = FeedForwardNet::new(sizes, hyper.seed)?;
    let arity = check_dataset(rows, labels, net.num_classes())?;
    if arity != net.num_inputs() {
        return Err(LearnError::Arity {
            expected: net.num_inputs(),
            found: arity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (rows.len() as f64 * hyper.validation_fraction).floor() as usize;
    let n_val = if n_val >= rows.len() { 0 } else { n_val };
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let val_rows: Vec<Vec<f64>> = val_idx.iter().map(|&i| rows[i].clone()).collect();
    let val_labels: Vec<usize> = val_idx.iter().map(|&i| labels[i]).collect();

    let mut velocity = vec![0.0; net.parameters().len()];
    let mut trace = FnnTrace::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut since_best = 0usize;
    if n_val > 0 {
        best = Some((net.loss(&val_rows, &val_labels)?, net.parameters()));
    }

    for epoch in 1..=hyper.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(hyper.batch_size) {
            let mut grad = Gradients::zeros_like(&net);
            for &i in batch {
                epoch_loss += net.accumulate(&rows[i], labels[i], &mut grad);
            }
            let scale = hyper.learning_rate / batch.len() as f64;
            let mut params = net.parameters();
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(grad.flatten()) {
                *v = hyper.momentum * *v - scale * g;
                *p += *v;
            }
            net.set_parameters(&params);
        }
        let epoch_loss = epoch_loss / train_idx.len() as f64;
        if !epoch_loss.is_finite() || !net.is_finite() {
            return Err(LearnError::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
        trace.train_losses.push(epoch_loss);
        log::debug!("epoch {epoch} loss {epoch_loss}");
        if let Some((best_loss, best_params)) = best.as_mut() {
            let v = net.loss(&val_rows, &val_labels)?;
            trace.validation_losses.push(v);
            if v < *best_loss {
                *best_loss = v;
                *best_params = net.parameters();
                trace.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= hyper.patience.max(1) {
                    trace.stopped_early = true;
                    break;
                }
            }
        } else {
            trace.best_epoch = epoch;
        }
    }
    if let Some((_, params)) = best {
        net.set_parameters(&params);
    }
    Ok((net, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_net_is_uniform() {
        let net = FeedForwardNet::zeros(&[3, 4, 5]).unwrap();
        let p = net.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert!(p.iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn hand_computed_tiny_net() {
        // 1-1-1-2: h1 = relu(2x - 1), h2 = relu(-h1 + 3), z = (h2, -h2 + 0.5)
        let mut net = FeedForwardNet::zeros(&[1, 1, 1, 2]).unwrap();
        {
            let (w, b) = net.layer_mut(0);
            w.set(0, 0, 2.0);
            b[0] = -1.0;
        }
        {
            let (w, b) = net.layer_mut(1);
            w.set(0, 0, -1.0);
            b[0] = 3.0;
        }
        {
            let (w, b) = net.layer_mut(2);
            w.set(0, 0, 1.0);
            w.set(1, 0, -1.0);
            b[1] = 0.5;
        }
        // x = 1.5: h1 = 2, h2 = 1, z = (1, -0.5)
        let p = net.forward(&[1.5]).unwrap();
        let want0 = 1.0 / (1.0 + (-1.5f64).exp());
        assert!((p[0] - want0).abs() < 1e-15);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        // x = 0: h1 clipped to 0, h2 = 3, z = (3, -2.5)
        let p = net.forward(&[0.0]).unwrap();
        assert!((p[0] - 1.0 / (1.0 + (-5.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let net = FeedForwardNet::zeros(&[2, 2]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(LearnError::Arity { .. })));
        assert!(matches!(net.forward(&[1.0, f64::INFINITY]), Err(LearnError::NonFinite)));
        assert!(FeedForwardNet::zeros(&[2, 1]).is_err());
        assert!(FeedForwardNet::zeros(&[2]).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = FeedForwardNet::new(&[4, 6, 3, 3], 5).unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels = vec![0, 2, 1, 1, 0];
        let (_, g) = net.loss_and_gradient(&rows, &labels).unwrap();
        let g = g.flatten();
        let base = net.parameters();
        let h = 1e-5;
        let mut probe = net.clone();
        for p in 0..base.len() {
            let mut plus = base.clone();
            plus[p] += h;
            probe.set_parameters(&plus);
            let lp = probe.loss(&rows, &labels).unwrap();
            plus[p] -= 2.0 * h;
            probe.set_parameters(&plus);
            let lm = probe.loss(&rows, &labels).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - g[p]).abs() <= 1e-6 + 1e-4 * fd.abs().max(g[p].abs()),
                "param {p}: {fd} vs {}",
                g[p]
            );
        }
    }

    #[test]
    fn memorizes_single_example() {
        let hyper = FnnHyper {
            learning_rate: 0.1,
            epochs: 300,
            validation_fraction: 0.0,
            ..FnnHyper::default()
        };
        let (net, trace) = train_fnn(&[vec![0.3, -0.7]], &[1], &[2, 8, 2], &hyper).unwrap();
        assert!(*trace.train_losses.last().unwrap() < 1e-3);
        assert_eq!(net.predict(&[0.3, -0.7]).unwrap(), 1);
    }

    #[test]
    fn divergence_is_reported() {
        let hyper = FnnHyper {
            learning_rate: 1e300,
            momentum: 0.0,
            validation_fraction: 0.0,
            ..FnnHyper::default()
        };
        let rows = vec![vec![1e3, -1e3], vec![-1e3, 1e3]];
        assert!(matches!(
            train_fnn(&rows, &[0, 1], &[2, 4, 2], &hyper),
            Err(LearnError::Diverged { .. })
        ));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let net = FeedForwardNet::new(&[5, 7, 3, 2], 9).unwrap();
        let text = net.to_text();
        assert!(text.starts_with("FNN v1 sizes 5 7 3 2\n"));
        assert_eq!(FeedForwardNet::from_text(&text).unwrap(), net);
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        match FeedForwardNet::from_text(&cut) {
            Err(LearnError::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 5) as f64, (i % 3) as f64]).collect();
        let labels: Vec<usize> = (0..40).map(|i| (i % 5 > 2) as usize).collect();
        let a = train_fnn(&rows, &labels, &[2, 5, 2], &FnnHyper::default()).unwrap();
        let b = train_fnn(&rows, &labels, &[2, 5, 2], &FnnHyper::default()).unwrap();
        assert_eq!(a.0.to_text(), b.0.to_text());
        assert_eq!(a.1, b.1);
    }
}
