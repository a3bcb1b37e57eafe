use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EmbeddingError;
use crate::corpus::SparseCountTensor;
use crate::factorize::orthogonalize_factors;
use crate::linalg::Matrix;

const OVERSAMPLE: usize = 10;
const MAX_ITERATIONS: usize = 200;
const CONVERGENCE: f64 = 1e-13;

/// Compressed sparse rows over the nonempty rows/columns of one slice.
struct Csr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    fn from_slice(tensor: &SparseCountTensor, k: usize) -> Self {
        let mut entries: Vec<(u32, u32, f64)> = tensor
            .iter()
            .filter(|(ix, _)| ix.k as usize == k)
            .map(|(ix, c)| (ix.i, ix.j, (c as f64).ln_1p()))
            .collect();
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let compact = |keys: &mut dyn Iterator<Item = u32>| -> HashMap<u32, usize> {
            let mut v: Vec<u32> = keys.collect();
            v.sort_unstable();
            v.dedup();
            v.into_iter().enumerate().map(|(n, key)| (key, n)).collect()
        };
        let row_map = compact(&mut entries.iter().map(|e| e.0));
        let col_map = compact(&mut entries.iter().map(|e| e.1));
        let rows = row_map.len();
        let mut row_ptr = vec![0usize; rows + 1];
        for e in &entries {
            row_ptr[row_map[&e.0] + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols: col_map.len(),
            row_ptr,
            col_idx: entries.iter().map(|e| col_map[&e.1]).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        }
    }

    /// `A X` for dense `X` (cols x l).
    fn mul(&self, x: &Matrix) -> Matrix {
        let l = x.cols();
        let mut out = Matrix::zeros(self.rows, l);
        for r in 0..self.rows {
            let dst = out.row_mut(r);
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.values[p];
                for (d, s) in dst.iter_mut().zip(x.row(self.col_idx[p])) {
                    *d += v * s;
                }
            }
        }
        out
    }

    /// `Aᵀ Y` for dense `Y` (rows x l).
    fn mul_transpose(&self, y: &Matrix) -> Matrix {
        let l = y.cols();
        let mut out = Matrix::zeros(self.cols, l);
        for r in 0..self.rows {
            let src = y.row(r);
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.values[p];
                for (d, s) in out.row_mut(self.col_idx[p]).iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        out
    }
}

fn singular_values_of_projection(a: &Csr, q: &Matrix) -> Vec<f64> {
    // B = Qᵀ A, computed as (Aᵀ Q)ᵀ
    let bt = a.mul_transpose(q);
    let b = DMatrix::from_row_slice(bt.rows(), bt.cols(), bt.as_slice());
    let mut s: Vec<f64> = b.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Leading singular values of `log(1 + X[:, :, k])`, divided by the largest
/// and sorted descending. Computed by randomized subspace iteration on the
/// sparse slice; values beyond the slice's rank are reported as zero.
pub fn slice_spectrum(tensor: &SparseCountTensor, k: usize, top_m: usize) -> Result<Vec<f64>, EmbeddingError> {
    if top_m == 0 {
        return Err(EmbeddingError::InvalidParameter("top_m must be >= 1".into()));
    }
    if k >= tensor.num_slices() {
        return Err(EmbeddingError::InvalidParameter(format!(
            "slice {k} out of range (tensor has {} slices)",
            tensor.num_slices()
        )));
    }
    let a = Csr::from_slice(tensor, k);
    if a.values.is_empty() {
        return Err(EmbeddingError::EmptySlice(k));
    }
    let full_rank = a.rows.min(a.cols);
    let l = (top_m + OVERSAMPLE).min(full_rank);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ k as u64);
    let omega = Matrix::random_normal(a.cols, l, 1.0, &mut rng);
    let orth = |m: &Matrix, rng: &mut ChaCha8Rng| {
        orthogonalize_factors(m, rng)
            .expect("subspace width never exceeds the slice dimensions")
            .0
    };
    let mut q = orth(&a.mul(&omega), &mut rng);
    let mut sigma = singular_values_of_projection(&a, &q);
    let watched = top_m.min(sigma.len());
    for _ in 0..MAX_ITERATIONS {
        if l == full_rank {
            // the subspace already contains the whole range of the slice
            break;
        }
        let z = orth(&a.mul_transpose(&q), &mut rng);
        q = orth(&a.mul(&z), &mut rng);
        let next = singular_values_of_projection(&a, &q);
        let scale = next[0].max(f64::MIN_POSITIVE);
        let change = next
            .iter()
            .zip(&sigma)
            .take(watched)
            .map(|(x, y)| (x - y).abs() / scale)
            .fold(0.0, f64::max);
        sigma = next;
        if change < CONVERGENCE {
            break;
        }
    }
    let lead = sigma[0];
    let width = top_m.min(tensor.num_words());
    let mut out: Vec<f64> = sigma.iter().take(width).map(|s| s / lead).collect();
    out.resize(width, 0.0);
    out[0] = 1.0;
    Ok(out)
}
