use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::CorpusError;

/// Position in the count tensor: word `i`, word `j`, slice `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Index {
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

impl Index {
    pub fn new(i: usize, j: usize, k: usize) -> Self {
        Self {
            i: i as u32,
            j: j as u32,
            k: k as u32,
        }
    }

    fn slice_major(&self) -> (u32, u32, u32) {
        (self.k, self.i, self.j)
    }
}

/// Sparse nonnegative integer counts of shape `N x N x (K+1)`.
///
/// Slices `0..K` hold preposition windows; slice `K` is the extra slice of
/// word pairs that fall outside every preposition window. Only positive
/// counts are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseCountTensor {
    n: usize,
    k: usize,
    window: usize,
    entries: HashMap<Index, u64>,
}

const MAGIC: &str = "PREPTENSOR";
const VERSION: &str = "v1";

impl SparseCountTensor {
    pub fn new(num_words: usize, num_prepositions: usize, window: usize) -> Self {
        Self {
            n: num_words,
            k: num_prepositions,
            window,
            entries: HashMap::new(),
        }
    }

    pub fn num_words(&self) -> usize {
        self.n
    }

    /// K, the number of preposition slices (the tensor has K+1 slices).
    pub fn num_prepositions(&self) -> usize {
        self.k
    }

    pub fn num_slices(&self) -> usize {
        self.k + 1
    }

    /// Index of the slice of pairs outside any preposition window.
    pub fn extra_slice(&self) -> usize {
        self.k
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.n, self.k + 1)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> u64 {
        self.entries.get(&Index::new(i, j, k)).copied().unwrap_or(0)
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, k: usize, by: u64) {
        debug_assert!(i < self.n && j < self.n && k <= self.k);
        *self.entries.entry(Index::new(i, j, k)).or_insert(0) += by;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Index, u64)> + '_ {
        self.entries.iter().map(|(ix, &c)| (*ix, c))
    }

    /// Entries in ascending `(k, i, j)` order.
    pub fn sorted_entries(&self) -> Vec<(Index, u64)> {
        let mut v: Vec<(Index, u64)> = self.iter().collect();
        v.sort_unstable_by_key(|(ix, _)| ix.slice_major());
        v
    }

    /// Sum of all stored counts.
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.window == other.window
    }

    /// Adds `other` entrywise into `self`.
    pub fn merge_from(&mut self, other: &SparseCountTensor) -> Result<(), CorpusError> {
        if !self.same_shape(other) {
            return Err(CorpusError::ShapeMismatch {
                left: (self.n, self.k, self.window),
                right: (other.n, other.k, other.window),
            });
        }
        for (ix, c) in other.iter() {
            *self.entries.entry(ix).or_insert(0) += c;
        }
        Ok(())
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{MAGIC} {VERSION} {} {} {} {}",
            self.n,
            self.k,
            self.nnz(),
            self.window
        )?;
        for (ix, c) in self.sorted_entries() {
            writeln!(out, "{} {} {} {}", ix.i, ix.j, ix.k, c)?;
        }
        out.flush()
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("tensor text is ASCII")
    }

    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        let parse_err = |line: usize, message: String| CorpusError::Parse { line, message };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != MAGIC || h[1] != VERSION {
            return Err(parse_err(1, format!("bad header `{header}`")));
        }
        let num = |s: &str, what: &str| -> Result<usize, CorpusError> {
            s.parse()
                .map_err(|_| parse_err(1, format!("bad {what} `{s}` in header")))
        };
        let n = num(h[2], "N")?;
        let k = num(h[3], "K")?;
        let nnz = num(h[4], "nnz")?;
        let window = num(h[5], "window")?;
        let mut tensor = Self::new(n, k, window);
        tensor.entries.reserve(nnz);

        let mut seen = 0usize;
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            if seen == nnz {
                return Err(parse_err(line_no, "more entries than header nnz".into()));
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(parse_err(line_no, format!("expected `i j k count`, got `{line}`")));
            }
            let field = |s: &str| -> Result<u64, CorpusError> {
                if s.starts_with('-') {
                    return Err(parse_err(line_no, format!("negative value `{s}`")));
                }
                s.parse().map_err(|_| parse_err(line_no, format!("bad integer `{s}`")))
            };
            let (i, j, kk, c) = (field(f[0])?, field(f[1])?, field(f[2])?, field(f[3])?);
            if i as usize >= n || j as usize >= n || kk as usize > k {
                return Err(parse_err(line_no, format!("index ({i}, {j}, {kk}) out of range")));
            }
            if c == 0 {
                return Err(parse_err(line_no, "zero count stored".into()));
            }
            let ix = Index::new(i as usize, j as usize, kk as usize);
            if tensor.entries.insert(ix, c).is_some() {
                return Err(parse_err(line_no, format!("duplicate entry ({i}, {j}, {kk})")));
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(
                text.lines().count() + 1,
                format!("truncated body: header declares {nnz} entries, found {seen}"),
            ));
        }
        Ok(tensor)
    }
}

/// Entrywise sum of partial tensors with identical shape and window.
pub fn merge_counts<'a, I>(partials: I) -> Result<SparseCountTensor, CorpusError>
where
    I: IntoIterator<Item = &'a SparseCountTensor>,
{
    let mut it = partials.into_iter();
    let mut acc = it.next().ok_or(CorpusError::EmptyMerge)?.clone();
    for p in it {
        acc.merge_from(p)?;
    }
    Ok(acc)
}

pub fn save_tensor(tensor: &SparseCountTensor, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    tensor
        .write_text(BufWriter::new(file))
        .map_err(|e| CorpusError::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<SparseCountTensor, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    SparseCountTensor::from_text(&text)
}
