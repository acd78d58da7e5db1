//! Tokenization and frequency-ranked vocabularies.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Split raw bytes on ASCII whitespace, optionally ASCII-lowercasing each token.
///
/// The input must be valid UTF-8; the error reports the offset of the first
/// invalid byte.
pub fn tokenize(text: &[u8], lowercase: bool) -> Result<Vec<String>> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(text
        .split_ascii_whitespace()
        .map(|t| {
            if lowercase {
                t.to_ascii_lowercase()
            } else {
                t.to_owned()
            }
        })
        .collect())
}

/// Tokenize line by line, one sentence per non-empty line.
pub fn tokenize_lines(text: &[u8], lowercase: bool) -> Result<Vec<Vec<String>>> {
    let mut sentences = Vec::new();
    let mut offset = 0;
    for line in text.split(|&b| b == b'\n') {
        let tokens = tokenize(line, lowercase).map_err(|e| match e {
            Error::Decode { offset: o } => Error::Decode { offset: offset + o },
            e => e,
        })?;
        offset += line.len() + 1;
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    Ok(sentences)
}

/// Word to dense id map, ids ordered by descending count then ascending word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Build from entries that are already in id order.
    ///
    /// Entries must be unique with positive counts. Ordering is not
    /// re-checked so that externally produced vocabulary files load as-is.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (id, (word, count)) in entries.iter().enumerate() {
            if *count == 0 {
                return Err(Error::parse(id + 1, format!("zero count for {word:?}")));
            }
            if word.is_empty() || word.chars().any(|c| c.is_ascii_whitespace()) {
                return Err(Error::parse(id + 1, format!("invalid word {word:?}")));
            }
            if index.insert(word.clone(), id as u32).is_some() {
                return Err(Error::parse(id + 1, format!("duplicate word {word:?}")));
            }
        }
        Ok(Vocabulary { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|(w, _)| w.as_str())
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.entries.get(id as usize).map(|&(_, c)| c)
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    /// Write `word count` lines, id = line number.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (word, count) in &self.entries {
            writeln!(out, "{word} {count}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let mut parts = line.split(' ');
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(n + 1, "expected `word count`"));
            };
            let count = count
                .parse::<u64>()
                .map_err(|e| Error::parse(n + 1, format!("bad count: {e}")))?;
            entries.push((word.to_owned(), count));
        }
        Vocabulary::from_entries(entries)
    }
}

/// Count words and keep those seen at least `min_count` times.
pub fn build_vocab<S: AsRef<str>>(tokens: &[S], min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(w, c)| (w.to_owned(), c))
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_entries(entries)
}

/// Vocabulary ids with optional segment boundaries.
///
/// A position `p` in `sentence_breaks` starts a new segment: no context
/// window spans positions `p - 1` and `p`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenIdStream {
    pub ids: Vec<u32>,
    pub sentence_breaks: Vec<usize>,
}

impl TokenIdStream {
    pub fn new(ids: Vec<u32>) -> Self {
        TokenIdStream {
            ids,
            sentence_breaks: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Half-open `[start, end)` ranges of each segment.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.sentence_breaks.len() + 1);
        let mut start = 0;
        for &b in &self.sentence_breaks {
            if b > start && b < self.ids.len() {
                out.push((start, b));
                start = b;
            }
        }
        if start < self.ids.len() {
            out.push((start, self.ids.len()));
        }
        out
    }
}

/// Map tokens to ids, dropping out-of-vocabulary words.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> TokenIdStream {
    TokenIdStream::new(tokens.iter().filter_map(|t| vocab.id(t.as_ref())).collect())
}

/// Encode a list of sentences, recording a break at the start of every
/// sentence that follows surviving tokens.
pub fn encode_sentences<S: AsRef<str>>(sentences: &[Vec<S>], vocab: &Vocabulary) -> TokenIdStream {
    let mut stream = TokenIdStream::default();
    for sentence in sentences {
        let start = stream.ids.len();
        stream
            .ids
            .extend(sentence.iter().filter_map(|t| vocab.id(t.as_ref())));
        if start > 0 && stream.ids.len() > start && stream.sentence_breaks.last() != Some(&start) {
            stream.sentence_breaks.push(start);
        }
    }
    stream
}

/// Map ids back to words. Unknown ids are skipped.
pub fn decode<'v>(stream: &TokenIdStream, vocab: &'v Vocabulary) -> Vec<&'v str> {
    stream.ids.iter().filter_map(|&id| vocab.word(id)).collect()
}
