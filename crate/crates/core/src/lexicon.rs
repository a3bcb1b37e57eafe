//! Bundled word lists: the preposition roster used by the selection task,
//! the stop-list applied to selection contexts, and the treebank POS inventory
//! used for attachment features.

/// The 49 most frequent prepositions tracked by the selection task, in roster order.
pub const SELECTION_ROSTER: [&str; 49] = [
    "about",
    "above",
    "absent",
    "across",
    "after",
    "against",
    "along",
    "alongside",
    "amid",
    "among",
    "amongst",
    "around",
    "at",
    "before",
    "behind",
    "below",
    "beneath",
    "beside",
    "besides",
    "between",
    "beyond",
    "but",
    "by",
    "despite",
    "during",
    "except",
    "for",
    "from",
    "in",
    "inside",
    "into",
    "of",
    "off",
    "on",
    "onto",
    "opposite",
    "outside",
    "over",
    "since",
    "than",
    "through",
    "to",
    "toward",
    "towards",
    "under",
    "underneath",
    "until",
    "upon",
    "with",
];

/// Articles, determiners and pronouns removed from selection contexts.
pub const CONTEXT_STOP_LIST: &[&str] = &[
    // articles
    "a",
    "an",
    "the",
    // determiners
    "this",
    "that",
    "these",
    "those",
    "each",
    "every",
    "either",
    "neither",
    "some",
    "any",
    "no",
    "all",
    "both",
    "few",
    "many",
    "much",
    "several",
    "such",
    "another",
    "other",
    "what",
    "which",
    "whatever",
    "whichever",
    "enough",
    "more",
    "most",
    "less",
    "least",
    // pronouns (personal, possessive, reflexive, relative, indefinite)
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "who",
    "whom",
    "whose",
    "someone",
    "somebody",
    "something",
    "anyone",
    "anybody",
    "anything",
    "everyone",
    "everybody",
    "everything",
    "nobody",
    "nothing",
    "one",
    "oneself",
];

/// Penn Treebank part-of-speech tags. Attachment features append an `UNK` slot.
pub const TREEBANK_TAGS: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS", "PDT", "POS",
    "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB", "#", "$", ".", ",", ":", "(", ")", "``", "''",
];

pub fn selection_roster() -> Vec<String> {
    SELECTION_ROSTER.iter().map(|s| s.to_string()).collect()
}

pub fn is_context_stop_word(token: &str) -> bool {
    CONTEXT_STOP_LIST.contains(&token)
}

/// Reads a roster file: one preposition per line, `#` comments and blank lines ignored.
pub fn parse_roster(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}
