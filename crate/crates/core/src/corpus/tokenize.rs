use super::CorpusError;

/// Splits raw UTF-8 bytes into lowercased token sentences.
///
/// Sentences end at `.`, `!` or `?`; line breaks are ordinary whitespace.
/// A token is a maximal run of alphanumeric
/// characters, optionally joined by a single inner `'` or `-`. All other
/// punctuation is dropped. Empty sentences are not emitted.
pub fn tokenize_sentences(raw: &[u8]) -> Result<Vec<Vec<String>>, CorpusError> {
    let text = std::str::from_utf8(raw).map_err(|e| CorpusError::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(tokenize_str(text))
}

pub fn tokenize_str(text: &str) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut sentence: Vec<String> = Vec::new();
    let mut token = String::new();
    // joiner seen after an alphanumeric run, kept only if another alphanumeric follows
    let mut pending_joiner: Option<char> = None;

    let flush_token = |token: &mut String, sentence: &mut Vec<String>| {
        if !token.is_empty() {
            sentence.push(std::mem::take(token));
        }
    };

    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if let Some(j) = pending_joiner.take() {
                token.push(j);
            }
            token.extend(ch.to_lowercase());
            continue;
        }
        if (ch == '\'' || ch == '-') && !token.is_empty() && pending_joiner.is_none() {
            pending_joiner = Some(ch);
            continue;
        }
        pending_joiner = None;
        flush_token(&mut token, &mut sentence);
        if matches!(ch, '.' | '!' | '?') && !sentence.is_empty() {
            sentences.push(std::mem::take(&mut sentence));
        }
    }
    flush_token(&mut token, &mut sentence);
    if !sentence.is_empty() {
        sentences.push(sentence);
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&[&str]]) -> Vec<Vec<String>> {
        s.iter().map(|x| x.iter().map(|t| t.to_string()).collect()).collect()
    }

    #[test]
    fn splits_sentences() {
        assert_eq!(
            tokenize_str("Dogs chase cats. Cats flee."),
            toks(&[&["dogs", "chase", "cats"], &["cats", "flee"]])
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize_sentences(b"").unwrap().is_empty());
        assert!(tokenize_str(" ... !? ").is_empty());
    }

    #[test]
    fn lowercases_and_strips() {
        assert_eq!(tokenize_str("He SAT on mats!"), toks(&[&["he", "sat", "on", "mats"]]));
        assert_eq!(
            tokenize_str("\"Well,\" she said -- (quietly)"),
            toks(&[&["well", "she", "said", "quietly"]])
        );
    }

    #[test]
    fn inner_joiners_survive() {
        assert_eq!(
            tokenize_str("don't re-enter 'quoted'"),
            toks(&[&["don't", "re-enter", "quoted"]])
        );
    }

    #[test]
    fn decode_error_reports_offset() {
        let bytes = b"ok text \xff more";
        match tokenize_sentences(bytes) {
            Err(CorpusError::Decode { offset }) => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
    }
}
