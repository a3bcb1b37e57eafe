use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::EmbeddingError;
use crate::corpus::Vocabulary;
use crate::factorize::EmbeddingSet;
use crate::linalg::Matrix;

/// Reserved token under which the extra-slice vector `q_{K+1}` is stored.
pub const NO_PREP_TOKEN: &str = "__NOPREP__";

/// Immutable token -> vector lookup.
///
/// Words come from the rows of `U`, prepositions from the first K rows of
/// `Q`, and the constant extra-slice vector from the last row of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    tokens: Vec<String>,
    vectors: Matrix,
    index: HashMap<String, usize>,
    roster: Vec<String>,
}

impl EmbeddingStore {
    pub fn from_rows(rows: Vec<(String, Vec<f64>)>) -> Result<Self, EmbeddingError> {
        let dim = rows.first().map_or(0, |(_, v)| v.len());
        let mut tokens = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        let mut index = HashMap::with_capacity(rows.len());
        for (n, (tok, v)) in rows.into_iter().enumerate() {
            if v.len() != dim {
                return Err(EmbeddingError::Format {
                    line: n + 1,
                    message: format!("`{tok}` has {} values, expected {dim}", v.len()),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite(tok));
            }
            if index.insert(tok.clone(), n).is_some() {
                return Err(EmbeddingError::DuplicateToken(tok));
            }
            tokens.push(tok);
            data.extend(v);
        }
        let vectors = Matrix::from_vec(tokens.len(), dim, data);
        Ok(Self {
            dim,
            tokens,
            vectors,
            index,
            roster: Vec::new(),
        })
    }

    /// Merges a vocabulary with its factorization. The store's roster is the
    /// vocabulary's preposition list.
    pub fn from_embedding_set(vocab: &Vocabulary, set: &EmbeddingSet) -> Result<Self, EmbeddingError> {
        let (n, k) = (vocab.num_words(), vocab.num_prepositions());
        if set.u.rows() != n || set.q.rows() != k + 1 {
            return Err(EmbeddingError::ShapeMismatch {
                words: n,
                prepositions: k,
                u_rows: set.u.rows(),
                q_rows: set.q.rows(),
            });
        }
        let mut rows = Vec::with_capacity(n + k + 1);
        for (i, w) in vocab.words().iter().enumerate() {
            rows.push((w.clone(), set.u.row(i).to_vec()));
        }
        for (p, prep) in vocab.prepositions().iter().enumerate() {
            rows.push((prep.clone(), set.q.row(p).to_vec()));
        }
        rows.push((NO_PREP_TOKEN.to_string(), set.q.row(k).to_vec()));
        let mut store = Self::from_rows(rows)?;
        store.roster = vocab.prepositions().to_vec();
        Ok(store)
    }

    /// Declares which tokens are the preposition roster. Every roster entry
    /// must have a vector.
    pub fn with_roster(mut self, roster: &[String]) -> Result<Self, EmbeddingError> {
        for p in roster {
            self.require(p)?;
        }
        self.roster = roster.to_vec();
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&r| self.vectors.row(r))
    }

    pub fn require(&self, token: &str) -> Result<&[f64], EmbeddingError> {
        self.vector(token)
            .ok_or_else(|| EmbeddingError::UnknownToken(token.to_string()))
    }

    /// Vector for `token`, or zeros when it is out of vocabulary.
    pub fn vector_or_zero(&self, token: &str) -> Vec<f64> {
        self.vector(token).map_or_else(|| vec![0.0; self.dim], <[f64]>::to_vec)
    }

    /// The extra-slice vector `q_{K+1}`.
    pub fn q_const(&self) -> Result<&[f64], EmbeddingError> {
        self.vector(NO_PREP_TOKEN).ok_or(EmbeddingError::MissingConstVector)
    }

    /// Averaged vector of the in-vocabulary tokens; `None` when none is known.
    pub fn average<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for t in tokens {
            if let Some(v) = self.vector(t) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                n += 1;
            }
        }
        (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
    }

    /// `N+K+1 d` header, then `token f1 … fd` per line. Values are printed in
    /// shortest round-trip form, so reloading is exact.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (r, tok) in self.tokens.iter().enumerate() {
            out.push_str(tok);
            for v in self.vectors.row(r) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Reads the word-vector text layout. The `count dim` header line is
    /// optional so header-less external vector files load too.
    pub fn from_text(text: &str) -> Result<Self, EmbeddingError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();
        let mut declared: Option<(usize, usize)> = None;
        if let Some((_, first)) = lines.peek() {
            let f: Vec<&str> = first.split_whitespace().collect();
            if f.len() == 2 {
                if let (Ok(c), Ok(d)) = (f[0].parse::<usize>(), f[1].parse::<usize>()) {
                    declared = Some((c, d));
                    lines.next();
                }
            }
        }
        let mut rows = Vec::new();
        let mut dim = declared.map(|(_, d)| d);
        for (n, line) in lines {
            let line_no = n + 1;
            let mut parts = line.split_whitespace();
            let tok = parts.next().expect("nonblank line").to_string();
            let vals = parts
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| EmbeddingError::Format {
                    line: line_no,
                    message: format!("`{tok}`: {e}"),
                })?;
            let expected = *dim.get_or_insert(vals.len());
            if vals.len() != expected {
                return Err(EmbeddingError::Format {
                    line: line_no,
                    message: format!("`{tok}` has {} values, expected {expected}", vals.len()),
                });
            }
            rows.push((tok, vals));
        }
        if let Some((count, _)) = declared {
            if count != rows.len() {
                return Err(EmbeddingError::Format {
                    line: 1,
                    message: format!("header declares {count} vectors, found {}", rows.len()),
                });
            }
        }
        let mut store = Self::from_rows(rows)?;
        if let Some(d) = dim {
            store.dim = d;
        }
        Ok(store)
    }
}

pub fn save_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    let path = path.as_ref();
    std::fs::write(path, store.to_text()).map_err(|e| EmbeddingError::io(path, e))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore, EmbeddingError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EmbeddingError::io(path, e))?;
    EmbeddingStore::from_text(&text)
}
