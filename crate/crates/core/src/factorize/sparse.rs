use crate::corpus::SparseCountTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub value: f64,
}

/// Real-valued sparse third-order tensor in coordinate form, entries in
/// ascending `(k, i, j)` order. Absent entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    dims: [usize; 3],
    entries: Vec<Entry>,
}

impl SparseTensor {
    /// Builds from arbitrary entries, dropping exact zeros and summing duplicates.
    pub fn from_entries(dims: [usize; 3], entries: impl IntoIterator<Item = Entry>) -> Self {
        let mut v: Vec<Entry> = entries.into_iter().collect();
        for e in &v {
            assert!(
                (e.i as usize) < dims[0] && (e.j as usize) < dims[1] && (e.k as usize) < dims[2],
                "entry ({}, {}, {}) outside dims {dims:?}",
                e.i,
                e.j,
                e.k
            );
        }
        v.sort_by_key(|e| (e.k, e.i, e.j));
        let mut merged: Vec<Entry> = Vec::with_capacity(v.len());
        for e in v {
            match merged.last_mut() {
                Some(last) if (last.i, last.j, last.k) == (e.i, e.j, e.k) => last.value += e.value,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        Self { dims, entries: merged }
    }

    /// Dense `dims[0] x dims[1] x dims[2]` data indexed `[i][j][k]`.
    pub fn from_dense(dims: [usize; 3], value: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut entries = Vec::new();
        for k in 0..dims[2] {
            for i in 0..dims[0] {
                for j in 0..dims[1] {
                    let v = value(i, j, k);
                    if v != 0.0 {
                        entries.push(Entry {
                            i: i as u32,
                            j: j as u32,
                            k: k as u32,
                            value: v,
                        });
                    }
                }
            }
        }
        Self { dims, entries }
    }

    /// Raw counts as reals.
    pub fn from_counts(counts: &SparseCountTensor) -> Self {
        let (n, _, s) = counts.dims();
        let entries = counts.sorted_entries().into_iter().map(|(ix, c)| Entry {
            i: ix.i,
            j: ix.j,
            k: ix.k,
            value: c as f64,
        });
        Self {
            dims: [n, n, s],
            entries: entries.collect(),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.value * e.value).sum()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_entries(
            self.dims,
            self.entries.iter().map(|e| Entry {
                value: f(e.value),
                ..*e
            }),
        )
    }

    /// Dense copy, indexed `[(i * J + j) * K + k]`.
    pub fn to_dense(&self) -> Vec<f64> {
        let [_, nj, nk] = self.dims;
        let mut out = vec![0.0; self.num_cells()];
        for e in &self.entries {
            out[(e.i as usize * nj + e.j as usize) * nk + e.k as usize] = e.value;
        }
        out
    }
}

/// `ln(1 + x)` on every stored count; the sparsity pattern is unchanged.
pub fn log_transform(counts: &SparseCountTensor) -> SparseTensor {
    SparseTensor::from_counts(counts).map_values(f64::ln_1p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_values() {
        let mut c = SparseCountTensor::new(2, 1, 3);
        c.add(0, 1, 0, 9);
        c.add(1, 0, 1, 1);
        let t = log_transform(&c);
        assert_eq!(t.nnz(), 2);
        assert!((t.entries()[0].value - 10f64.ln()).abs() < 1e-12);
        assert!((t.entries()[1].value - 2f64.ln()).abs() < 1e-15);
        // absent entries stay absent, i.e. zero
        assert_eq!(t.to_dense().iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn log1p_analytic_point() {
        let x = std::f64::consts::E - 1.0;
        assert!((x.ln_1p() - 1.0).abs() < 1e-15);
        assert_eq!(0f64.ln_1p(), 0.0);
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let e = |i, j, k, value| Entry { i, j, k, value };
        let t = SparseTensor::from_entries(
            [2, 2, 2],
            [e(1, 1, 1, 2.0), e(0, 0, 0, 1.0), e(1, 1, 1, 3.0), e(0, 1, 0, 0.0)],
        );
        assert_eq!(t.entries(), &[e(0, 0, 0, 1.0), e(1, 1, 1, 5.0)]);
    }
}
