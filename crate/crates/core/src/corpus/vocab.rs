use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::CorpusError;

/// Content-word vocabulary plus the preposition roster.
///
/// Words and prepositions are disjoint; word ids are dense in `0..N` and
/// preposition ids dense in `0..K` (the slice index of that preposition).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    word_ids: HashMap<String, usize>,
    prepositions: Vec<String>,
    prep_ids: HashMap<String, usize>,
    counts: HashMap<String, u64>,
    min_count: u64,
}

/// What a single token position resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Word(usize),
    Prep(usize),
    Unknown,
}

impl Vocabulary {
    /// Counts token frequencies and keeps every non-roster token seen at
    /// least `min_count` times. Roster entries are always kept, in roster order.
    ///
    /// Words are ordered by descending frequency, ties by token.
    pub fn build(sentences: &[Vec<String>], min_count: u64, roster: &[String]) -> Result<Self, CorpusError> {
        if min_count < 1 {
            return Err(CorpusError::InvalidParameter("min_count must be >= 1".into()));
        }
        if sentences.iter().all(|s| s.is_empty()) {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for tok in sentences.iter().flatten() {
            *counts.entry(tok.clone()).or_default() += 1;
        }
        let roster_set: HashSet<&str> = roster.iter().map(String::as_str).collect();
        let mut words: Vec<(&String, u64)> = counts
            .iter()
            .filter(|(tok, &c)| c >= min_count && !roster_set.contains(tok.as_str()))
            .map(|(tok, &c)| (tok, c))
            .collect();
        words.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let words: Vec<String> = words.into_iter().map(|(t, _)| t.clone()).collect();

        let mut prepositions = Vec::with_capacity(roster.len());
        for p in roster {
            if !prepositions.contains(p) {
                prepositions.push(p.clone());
            }
        }
        Self::from_parts(words, prepositions, counts, min_count)
    }

    fn from_parts(
        words: Vec<String>,
        prepositions: Vec<String>,
        counts: HashMap<String, u64>,
        min_count: u64,
    ) -> Result<Self, CorpusError> {
        let mut counts = counts;
        let word_ids: HashMap<String, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let prep_ids: HashMap<String, usize> = prepositions.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        if word_ids.len() != words.len() || prep_ids.len() != prepositions.len() {
            return Err(CorpusError::InvalidVocabulary("duplicate token".into()));
        }
        if let Some(p) = prepositions.iter().find(|p| word_ids.contains_key(*p)) {
            return Err(CorpusError::InvalidVocabulary(format!(
                "`{p}` is both a word and a preposition"
            )));
        }
        counts.retain(|t, c| *c > 0 && (word_ids.contains_key(t) || prep_ids.contains_key(t)));
        Ok(Self {
            words,
            word_ids,
            prepositions,
            prep_ids,
            counts,
            min_count,
        })
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_prepositions(&self) -> usize {
        self.prepositions.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn prepositions(&self) -> &[String] {
        &self.prepositions
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn word_id(&self, token: &str) -> Option<usize> {
        self.word_ids.get(token).copied()
    }

    pub fn prep_id(&self, token: &str) -> Option<usize> {
        self.prep_ids.get(token).copied()
    }

    pub fn frequency(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn slot(&self, token: &str) -> Slot {
        if let Some(k) = self.prep_id(token) {
            Slot::Prep(k)
        } else if let Some(i) = self.word_id(token) {
            Slot::Word(i)
        } else {
            Slot::Unknown
        }
    }

    pub fn slots(&self, sentence: &[String]) -> Vec<Slot> {
        sentence.iter().map(|t| self.slot(t)).collect()
    }

    /// `token<TAB>frequency<TAB>id` lines, words first, then a
    /// `#PREPOSITIONS` sentinel followed by the roster.
    pub fn to_text(&self) -> String {
        let mut out = format!("#MINCOUNT\t{}\n", self.min_count);
        for (i, w) in self.words.iter().enumerate() {
            let _ = writeln!(out, "{w}\t{}\t{i}", self.frequency(w));
        }
        out.push_str("#PREPOSITIONS\n");
        for (k, p) in self.prepositions.iter().enumerate() {
            let _ = writeln!(out, "{p}\t{}\t{k}", self.frequency(p));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        let mut words = Vec::new();
        let mut preps = Vec::new();
        let mut counts = HashMap::new();
        let mut min_count = 1;
        let mut in_preps = false;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.is_empty() {
                continue;
            }
            if line == "#PREPOSITIONS" {
                in_preps = true;
                continue;
            }
            if let Some(rest) = line.strip_prefix("#MINCOUNT\t") {
                min_count = rest.trim().parse().map_err(|_| CorpusError::Parse {
                    line: line_no,
                    message: "bad min count".into(),
                })?;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let freq: u64 = fields[1].parse().map_err(|_| CorpusError::Parse {
                line: line_no,
                message: format!("bad frequency `{}`", fields[1]),
            })?;
            let id: usize = fields[2].parse().map_err(|_| CorpusError::Parse {
                line: line_no,
                message: format!("bad id `{}`", fields[2]),
            })?;
            let list = if in_preps { &mut preps } else { &mut words };
            if id != list.len() {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("id {id} out of sequence (expected {})", list.len()),
                });
            }
            list.push(fields[0].to_string());
            counts.insert(fields[0].to_string(), freq);
        }
        Self::from_parts(words, preps, counts, min_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(s: &[&[&str]]) -> Vec<Vec<String>> {
        s.iter().map(|x| x.iter().map(|t| t.to_string()).collect()).collect()
    }

    #[test]
    fn frequency_threshold() {
        let v = Vocabulary::build(&sents(&[&["a", "b", "a"]]), 2, &[]).unwrap();
        assert_eq!(v.words(), &["a".to_string()]);
        assert_eq!(v.num_words(), 1);
    }

    #[test]
    fn unseen_roster_token_is_kept() {
        let roster = vec!["on".to_string(), "beneath".to_string()];
        let v = Vocabulary::build(&sents(&[&["cats", "sat", "on", "mats"]]), 1, &roster).unwrap();
        assert_eq!(v.prepositions(), roster.as_slice());
        assert_eq!(v.prep_id("beneath"), Some(1));
        assert_eq!(v.frequency("beneath"), 0);
        assert_eq!(v.word_id("on"), None);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let v = Vocabulary::build(&sents(&[&["x", "y", "z", "x"]]), 1, &[]).unwrap();
        assert_eq!(v.words(), &["x", "y", "z"]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(Vocabulary::build(&[], 1, &[]), Err(CorpusError::EmptyCorpus)));
        assert!(matches!(
            Vocabulary::build(&[vec![]], 1, &[]),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn text_round_trip() {
        let roster = vec!["on".to_string(), "in".to_string()];
        let v = Vocabulary::build(
            &sents(&[&["cats", "sat", "on", "mats"], &["cats", "in", "hats"]]),
            1,
            &roster,
        )
        .unwrap();
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn malformed_vocab_line() {
        let err = Vocabulary::from_text("a\t1\t0\nb\t1\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }), "{err:?}");
    }
}
