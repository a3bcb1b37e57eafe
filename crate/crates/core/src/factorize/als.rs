use log::{info, warn};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingSet, FactorizeError, Method, Mode, SparseTensor, TrainingConfig};
use crate::corpus::SparseCountTensor;
use crate::linalg::{dot, triple_product, Matrix};

/// Cells x rank below which the zero-pattern energy is enumerated cell by cell
/// instead of derived from Gram matrices.
const DENSE_ENERGY_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub objective: f64,
    pub fit: f64,
    pub orthogonalized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRecord {
    pub sweep: usize,
    pub mode: Mode,
    pub objective: f64,
    pub orthogonalized: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlsTrace {
    pub initial_objective: f64,
    pub sweeps: Vec<SweepRecord>,
    /// Objective right after every single-mode update, in update order.
    pub mode_updates: Vec<ModeRecord>,
    /// Columns that had to be replaced during orthogonalization.
    pub replaced_columns: usize,
}

#[derive(Debug, Clone)]
pub struct AlsOutcome {
    pub embeddings: EmbeddingSet,
    pub trace: AlsTrace,
}

fn mode_dims(mode: Mode, dims: [usize; 3]) -> usize {
    match mode {
        Mode::U => dims[0],
        Mode::W => dims[1],
        Mode::Q => dims[2],
    }
}

/// Matricized tensor times Khatri-Rao product of the two fixed factors.
fn mttkrp(tensor: &SparseTensor, f: &EmbeddingSet, mode: Mode) -> Matrix {
    let d = f.dim();
    let mut out = Matrix::zeros(mode_dims(mode, tensor.dims()), d);
    for e in tensor.entries() {
        let (i, j, k) = (e.i as usize, e.j as usize, e.k as usize);
        let (target, a, b) = match mode {
            Mode::U => (i, f.w.row(j), f.q.row(k)),
            Mode::W => (j, f.u.row(i), f.q.row(k)),
            Mode::Q => (k, f.u.row(i), f.w.row(j)),
        };
        let row = out.row_mut(target);
        for ((o, x), y) in row.iter_mut().zip(a).zip(b) {
            *o += e.value * x * y;
        }
    }
    out
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Inverse of `(AᵀA ∘ BᵀB) + ridge·I` for the two fixed factors A, B.
fn normal_inverse(f: &EmbeddingSet, mode: Mode, ridge: f64) -> DMatrix<f64> {
    let (a, b) = match mode {
        Mode::U => (&f.w, &f.q),
        Mode::W => (&f.u, &f.q),
        Mode::Q => (&f.u, &f.w),
    };
    let ga = to_dmatrix(&a.gram());
    let gb = to_dmatrix(&b.gram());
    let d = ga.nrows();
    let v = ga.component_mul(&gb) + DMatrix::<f64>::identity(d, d) * ridge;
    match v.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => {
            warn!("normal equations not positive definite; using pseudo-inverse");
            v.pseudo_inverse(1e-14).expect("pseudo-inverse with nonnegative eps")
        }
    }
}

fn multiply_rows(m: &Matrix, inv: &DMatrix<f64>) -> Matrix {
    let d = m.cols();
    let mut out = Matrix::zeros(m.rows(), d);
    let solve_row = |src: &[f64], dst: &mut [f64]| {
        for (c, o) in dst.iter_mut().enumerate() {
            // inv is symmetric, so row c equals column c
            *o = (0..d).map(|r| inv[(r, c)] * src[r]).sum();
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.as_mut_slice()
            .par_chunks_mut(d)
            .zip(m.as_slice().par_chunks(d))
            .for_each(|(dst, src)| solve_row(src, dst));
    }
    #[cfg(not(feature = "parallel"))]
    for (dst, src) in out.as_mut_slice().chunks_mut(d).zip(m.as_slice().chunks(d)) {
        solve_row(src, dst);
    }
    out
}

/// Exact (ridge-regularized) least-squares minimizer of the full-Frobenius
/// objective in one mode, the other two held fixed.
pub fn als_update_mode(
    tensor: &SparseTensor,
    factors: &EmbeddingSet,
    mode: Mode,
    ridge: f64,
) -> Result<Matrix, FactorizeError> {
    factors.check_shape(tensor.dims())?;
    let m = mttkrp(tensor, factors, mode);
    let inv = normal_inverse(factors, mode, ridge);
    Ok(multiply_rows(&m, &inv))
}

/// `‖R‖²` of the CP reconstruction, from the Hadamard product of Gram matrices.
fn model_energy(f: &EmbeddingSet) -> f64 {
    let (gu, gw, gq) = (f.u.gram(), f.w.gram(), f.q.gram());
    gu.as_slice()
        .iter()
        .zip(gw.as_slice())
        .zip(gq.as_slice())
        .map(|((a, b), c)| a * b * c)
        .sum()
}

fn cp_predict(f: &EmbeddingSet, i: usize, j: usize, k: usize) -> f64 {
    triple_product(f.u.row(i), f.w.row(j), f.q.row(k))
}

/// Squared reconstruction over the cells the tensor does not store.
fn zero_pattern_energy(tensor: &SparseTensor, f: &EmbeddingSet, nnz_model: f64) -> f64 {
    let cells = tensor.num_cells();
    if tensor.nnz() == cells {
        return 0.0;
    }
    if cells.saturating_mul(f.dim()) <= DENSE_ENERGY_LIMIT {
        let [ni, nj, nk] = tensor.dims();
        let mut stored = vec![false; cells];
        for e in tensor.entries() {
            stored[(e.i as usize * nj + e.j as usize) * nk + e.k as usize] = true;
        }
        let mut sum = 0.0;
        for i in 0..ni {
            for j in 0..nj {
                let base = (i * nj + j) * nk;
                let uw: Vec<f64> = f.u.row(i).iter().zip(f.w.row(j)).map(|(a, b)| a * b).collect();
                for k in 0..nk {
                    if !stored[base + k] {
                        let r = dot(&uw, f.q.row(k));
                        sum += r * r;
                    }
                }
            }
        }
        sum
    } else {
        (model_energy(f) - nnz_model).max(0.0)
    }
}

/// Value of the unweighted CP objective, `Σ_ijk (⟨u_i, w_j, q_k⟩ − T_ijk)²`,
/// with absent entries as zero targets. Biases are ignored.
pub fn als_objective(tensor: &SparseTensor, f: &EmbeddingSet) -> Result<f64, FactorizeError> {
    f.check_shape(tensor.dims())?;
    let mut sparse_part = 0.0;
    let mut nnz_model = 0.0;
    for e in tensor.entries() {
        let r = cp_predict(f, e.i as usize, e.j as usize, e.k as usize);
        sparse_part += (r - e.value) * (r - e.value);
        nnz_model += r * r;
    }
    Ok(sparse_part + zero_pattern_energy(tensor, f, nnz_model))
}

/// `1 − ‖T − R‖_F / ‖T‖_F`.
pub fn cp_fit(tensor: &SparseTensor, f: &EmbeddingSet) -> Result<f64, FactorizeError> {
    let norm_sq = tensor.norm_sq();
    if norm_sq == 0.0 {
        return Err(FactorizeError::EmptyTensor);
    }
    let obj = als_objective(tensor, f)?;
    Ok(1.0 - (obj / norm_sq).sqrt())
}

/// Orthonormalizes the columns of `m` (Gram-Schmidt with reorthogonalization),
/// preserving the column span. Rank-deficient columns are replaced by random
/// directions orthogonal to the earlier ones; the count of replacements is
/// returned alongside.
pub fn orthogonalize_factors<R: Rng + ?Sized>(m: &Matrix, rng: &mut R) -> Result<(Matrix, usize), FactorizeError> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows < cols {
        return Err(FactorizeError::TooFewRows { rows, cols });
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut replaced = 0;
    let project_out = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = dot(v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
    };
    for c in 0..cols {
        let mut v = m.column(c);
        let original = crate::linalg::norm2(&v);
        project_out(&mut v, &basis);
        let mut norm = crate::linalg::norm2(&v);
        if !(norm > 1e-10 * original.max(f64::MIN_POSITIVE)) || original == 0.0 {
            replaced += 1;
            loop {
                v = (0..rows).map(|_| rng.random::<f64>() - 0.5).collect();
                project_out(&mut v, &basis);
                norm = crate::linalg::norm2(&v);
                if norm > 1e-8 {
                    break;
                }
            }
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    if replaced > 0 {
        warn!("orthogonalization replaced {replaced} rank-deficient column(s)");
    }
    let mut out = Matrix::zeros(rows, cols);
    for (c, b) in basis.iter().enumerate() {
        out.set_column(c, b);
    }
    Ok((out, replaced))
}

/// Rescales each rank-one component so its three factor columns share one norm.
fn balance_components(f: &mut EmbeddingSet) {
    for r in 0..f.dim() {
        let norms: Vec<f64> = Mode::ALL
            .iter()
            .map(|&m| crate::linalg::norm2(&f.factor(m).column(r)))
            .collect();
        if norms.contains(&0.0) {
            continue;
        }
        let target = (norms[0] * norms[1] * norms[2]).cbrt();
        for (mode, n) in Mode::ALL.iter().zip(&norms) {
            let s = target / n;
            let mat = f.factor_mut(*mode);
            for row in 0..mat.rows() {
                let v = mat.get(row, r) * s;
                mat.set(row, r, v);
            }
        }
    }
}

pub(crate) fn random_init(dims: [usize; 3], d: usize, rng: &mut ChaCha8Rng, method: Method) -> EmbeddingSet {
    let std = 1.0 / (d as f64).sqrt();
    EmbeddingSet {
        u: Matrix::random_normal(dims[0], d, std, rng),
        w: Matrix::random_normal(dims[1], d, std, rng),
        q: Matrix::random_normal(dims[2], d, std, rng),
        biases: None,
        method,
    }
}

/// Orth-ALS on an already transformed tensor: during the first
/// `ortho_iterations` sweeps the two fixed factors are orthonormalized before
/// each mode update; afterwards sweeps are plain ALS with early stopping on fit.
pub fn orth_als(tensor: &SparseTensor, config: &TrainingConfig) -> Result<AlsOutcome, FactorizeError> {
    config.validate()?;
    if tensor.is_empty() || tensor.norm_sq() == 0.0 {
        return Err(FactorizeError::EmptyTensor);
    }
    let dims = tensor.dims();
    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut f = random_init(dims, d, &mut rng, Method::Als);
    let mut ortho_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    for mode in Mode::ALL {
        let rows = mode_dims(mode, dims);
        if config.ortho_iterations > 0 && rows < d {
            warn!("mode {mode:?} has {rows} rows < dim {d}; it is not orthogonalized");
        }
    }

    let mut trace = AlsTrace {
        initial_objective: als_objective(tensor, &f)?,
        ..Default::default()
    };
    let mut prev_fit = f64::NEG_INFINITY;
    for sweep in 0..config.iterations {
        let orthogonalize = sweep < config.ortho_iterations;
        for mode in Mode::ALL {
            if orthogonalize {
                for other in Mode::ALL.into_iter().filter(|m| *m != mode) {
                    if mode_dims(other, dims) >= d {
                        let (q, replaced) = orthogonalize_factors(f.factor(other), &mut ortho_rng)?;
                        *f.factor_mut(other) = q;
                        trace.replaced_columns += replaced;
                    }
                }
            }
            let updated = als_update_mode(tensor, &f, mode, config.ridge)?;
            *f.factor_mut(mode) = updated;
            trace.mode_updates.push(ModeRecord {
                sweep: sweep + 1,
                mode,
                objective: als_objective(tensor, &f)?,
                orthogonalized: orthogonalize,
            });
        }
        let objective = trace.mode_updates.last().map_or(0.0, |r| r.objective);
        let fit = 1.0 - (objective / tensor.norm_sq()).sqrt();
        info!("sweep {} objective {objective} fit {fit}", sweep + 1);
        trace.sweeps.push(SweepRecord {
            sweep: sweep + 1,
            objective,
            fit,
            orthogonalized: orthogonalize,
        });
        if !orthogonalize && (fit - prev_fit).abs() < config.fit_tolerance {
            break;
        }
        prev_fit = fit;
    }
    balance_components(&mut f);
    debug_assert!(f.is_finite());
    Ok(AlsOutcome { embeddings: f, trace })
}

/// Log-transforms the counts and runs [`orth_als`].
pub fn decompose_orth_als(counts: &SparseCountTensor, config: &TrainingConfig) -> Result<AlsOutcome, FactorizeError> {
    orth_als(&super::log_transform(counts), config)
}
