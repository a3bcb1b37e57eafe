//! Low-rank factorization of the count tensor.
//!
//! Two routes share one parameterization (`U`, `W`, `Q` with one row per
//! entity): Orth-ALS fits `log(1+X)` in full Frobenius norm with zeros as
//! targets, and the weighted decomposition fits only nonzero entries under
//! a GloVe-style weight with per-entity biases.

mod als;
mod config;
mod sparse;
mod weighted;

pub use als::{
    als_objective, als_update_mode, cp_fit, decompose_orth_als, orth_als, orthogonalize_factors, AlsOutcome, AlsTrace,
};
pub use config::TrainingConfig;
pub use sparse::{log_transform, Entry, SparseTensor};
pub use weighted::{
    decompose_weighted, weight, weighted_decomposition, weighted_gradient, weighted_loss, EntryGradient,
    WeightedOutcome,
};

use crate::linalg::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum FactorizeError {
    #[error("tensor has no nonzero entries")]
    EmptyTensor,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("factor shapes do not match tensor dims {dims:?}")]
    ShapeMismatch { dims: [usize; 3] },
    #[error("matrix has {rows} rows, fewer than its {cols} components")]
    TooFewRows { rows: usize, cols: usize },
    #[error("weighted decomposition diverged in epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    U,
    W,
    Q,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::U, Mode::W, Mode::Q];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Als,
    Weighted,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Als => "als",
            Method::Weighted => "wd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "als" => Ok(Method::Als),
            "wd" => Ok(Method::Weighted),
            other => Err(format!("unknown method `{other}` (expected als or wd)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Biases {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
}

/// Factor matrices: `u` (N x d, word embeddings), `w` (N x d, second word
/// mode), `q` ((K+1) x d, prepositions followed by the extra-slice vector).
/// Biases are present exactly for the weighted decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub u: Matrix,
    pub w: Matrix,
    pub q: Matrix,
    pub biases: Option<Biases>,
    pub method: Method,
}

impl EmbeddingSet {
    pub fn dim(&self) -> usize {
        self.u.cols()
    }

    pub fn factor(&self, mode: Mode) -> &Matrix {
        match mode {
            Mode::U => &self.u,
            Mode::W => &self.w,
            Mode::Q => &self.q,
        }
    }

    pub fn factor_mut(&mut self, mode: Mode) -> &mut Matrix {
        match mode {
            Mode::U => &mut self.u,
            Mode::W => &mut self.w,
            Mode::Q => &mut self.q,
        }
    }

    pub fn is_finite(&self) -> bool {
        let biases_ok = self
            .biases
            .as_ref()
            .is_none_or(|b| b.u.iter().chain(&b.w).chain(&b.q).all(|v| v.is_finite()));
        self.u.is_finite() && self.w.is_finite() && self.q.is_finite() && biases_ok
    }

    /// `⟨u_i, w_j, q_k⟩`, plus the three biases when present.
    pub fn predict(&self, i: usize, j: usize, k: usize) -> f64 {
        let core = crate::linalg::triple_product(self.u.row(i), self.w.row(j), self.q.row(k));
        match &self.biases {
            Some(b) => core + b.u[i] + b.w[j] + b.q[k],
            None => core,
        }
    }

    pub(crate) fn check_shape(&self, dims: [usize; 3]) -> Result<(), FactorizeError> {
        let d = self.u.cols();
        let ok = self.u.rows() == dims[0]
            && self.w.rows() == dims[1]
            && self.q.rows() == dims[2]
            && self.w.cols() == d
            && self.q.cols() == d;
        if ok {
            Ok(())
        } else {
            Err(FactorizeError::ShapeMismatch { dims })
        }
    }
}
