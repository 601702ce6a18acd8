//! Ranked vocabulary, the index-parallel shadow trie, and the model file.

pub(crate) mod codec;
mod model_file;
mod trie;

pub use model_file::{
    load_model, read_model_file, serialize_model, write_model_file, Model, ScriptRules, MODEL_VERSION,
};
pub use trie::{PrefixMatch, Trie, TrieBuilder};

use std::collections::HashMap;
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::rulekit::{transform, RuleSet};

pub const DEFAULT_CAPACITY: usize = 100_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u16),
    #[error("section {section}: truncated")]
    Truncated { section: &'static str },
    #[error("section {section}: {msg}")]
    Corrupt { section: &'static str, msg: String },
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("vocabulary size must be at least 1")]
    ZeroCapacity,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub word: String,
    pub frequency: u32,
}

/// Top-K vocabulary. Rank 0 is the most frequent word; equal frequencies
/// are ordered lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    ranks: HashMap<String, u32>,
}

impl Lexicon {
    pub fn from_counts(counts: HashMap<String, u64>, k: usize) -> Lexicon {
        let mut all: Vec<(String, u64)> = counts.into_iter().collect();
        all.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        Self::from_sorted(
            all.into_iter()
                .map(|(word, f)| LexEntry {
                    word,
                    frequency: f.min(u32::MAX as u64) as u32,
                })
                .collect(),
        )
    }

    /// Entries must already be in rank order; duplicates keep their first rank.
    pub fn from_sorted(entries: Vec<LexEntry>) -> Lexicon {
        let mut ranks = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            ranks.entry(e.word.clone()).or_insert(i as u32);
        }
        Lexicon { entries, ranks }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn get(&self, rank: u32) -> Option<&LexEntry> {
        self.entries.get(rank as usize)
    }

    /// Word at `rank`. Panics on an out-of-range rank.
    pub fn word(&self, rank: u32) -> &str {
        &self.entries[rank as usize].word
    }

    pub fn frequency(&self, rank: u32) -> u32 {
        self.entries[rank as usize].frequency
    }

    pub fn rank_of(&self, word: &str) -> Option<u32> {
        self.ranks.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ranks.contains_key(word)
    }

    pub fn total_frequency(&self) -> u64 {
        self.entries.iter().map(|e| e.frequency as u64).sum()
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{0964}' | '\u{0965}' | '\u{0970}' | '\u{0E4F}' | '\u{0E5A}' | '\u{0E5B}'
            | '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}' | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}' | '\u{FF01}'..='\u{FF0F}')
}

/// Whitespace tokens, lowercased, with punctuation stripped at both edges.
pub fn tokenize(line: &str) -> impl Iterator<Item = String> + '_ {
    line.split_whitespace()
        .map(|t| t.trim_matches(is_punct))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub lines: usize,
    pub invalid_lines: usize,
    pub tokens: usize,
}

/// Reads one sentence per line. Lines that are not valid UTF-8 are skipped
/// and counted.
pub fn read_sentences<R: BufRead>(reader: R) -> Result<(Vec<String>, usize), std::io::Error> {
    let mut lines = Vec::new();
    let mut invalid = 0;
    for raw in reader.split(b'\n') {
        let raw = raw?;
        match String::from_utf8(raw) {
            Ok(mut s) => {
                if s.ends_with('\r') {
                    s.pop();
                }
                lines.push(s);
            }
            Err(_) => invalid += 1,
        }
    }
    Ok((lines, invalid))
}

pub fn build_lexicon<R: BufRead>(corpus: R, k: usize) -> Result<(Lexicon, CorpusStats), LexiconError> {
    if k == 0 {
        return Err(LexiconError::ZeroCapacity);
    }
    let (lines, invalid) = read_sentences(corpus)?;
    let (lex, mut stats) = build_lexicon_from_lines(lines.iter().map(String::as_str), k)?;
    stats.invalid_lines = invalid;
    if invalid > 0 {
        log::warn!("skipped {invalid} corpus lines that are not valid UTF-8");
    }
    Ok((lex, stats))
}

pub fn build_lexicon_from_lines<'a>(
    lines: impl IntoIterator<Item = &'a str>,
    k: usize,
) -> Result<(Lexicon, CorpusStats), LexiconError> {
    if k == 0 {
        return Err(LexiconError::ZeroCapacity);
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut stats = CorpusStats::default();
    for line in lines {
        stats.lines += 1;
        for tok in tokenize(line) {
            stats.tokens += 1;
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    Ok((Lexicon::from_counts(counts, k), stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeReport {
    pub vocab_trie_bytes: usize,
    pub shadow_trie_bytes: usize,
    pub ratio: f64,
}

impl SizeReport {
    pub fn new(vocab_trie_bytes: usize, shadow_trie_bytes: usize) -> Self {
        let ratio = if vocab_trie_bytes == 0 {
            0.0
        } else {
            shadow_trie_bytes as f64 / vocab_trie_bytes as f64
        };
        SizeReport {
            vocab_trie_bytes,
            shadow_trie_bytes,
            ratio,
        }
    }
}

/// A vocabulary trie and its shadow trie over transformed words. Both
/// address words by lexicon rank.
#[derive(Debug, Clone)]
pub struct ParallelTrieSet {
    pub vocab: Trie,
    pub shadow: Trie,
    shadow_keys: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("rank {rank} ({word:?}) is missing from the {trie} trie")]
pub struct ParityError {
    pub rank: u32,
    pub word: String,
    pub trie: &'static str,
}

pub fn build_parallel_tries(lex: &Lexicon, rules: &RuleSet) -> ParallelTrieSet {
    let mut vocab = TrieBuilder::new();
    let mut shadow = TrieBuilder::new();
    let mut shadow_keys = Vec::with_capacity(lex.len());
    for (i, e) in lex.entries().iter().enumerate() {
        let key = transform(&e.word, rules);
        vocab.insert(&e.word, i as u32);
        shadow.insert(&key, i as u32);
        shadow_keys.push(key);
    }
    ParallelTrieSet {
        vocab: vocab.build(),
        shadow: shadow.build(),
        shadow_keys,
    }
}

impl ParallelTrieSet {
    /// Reassembles a loaded pair of tries; shadow keys are recomputed.
    pub fn from_parts(vocab: Trie, shadow: Trie, lex: &Lexicon, rules: &RuleSet) -> Self {
        let shadow_keys = lex.entries().iter().map(|e| transform(&e.word, rules)).collect();
        ParallelTrieSet {
            vocab,
            shadow,
            shadow_keys,
        }
    }

    /// Transformed form of the word at `rank`.
    pub fn shadow_key(&self, rank: u32) -> &str {
        &self.shadow_keys[rank as usize]
    }

    /// Every rank must be found under its word in the vocabulary trie and
    /// under its transformed word in the shadow trie.
    pub fn check_parity(&self, lex: &Lexicon, rules: &RuleSet) -> Result<(), ParityError> {
        for (i, e) in lex.entries().iter().enumerate() {
            let rank = i as u32;
            if !self.vocab.get(&e.word).is_some_and(|p| p.contains(&rank)) {
                return Err(ParityError {
                    rank,
                    word: e.word.clone(),
                    trie: "vocabulary",
                });
            }
            let key = transform(&e.word, rules);
            if !self.shadow.get(&key).is_some_and(|p| p.binary_search(&rank).is_ok()) {
                return Err(ParityError {
                    rank,
                    word: e.word.clone(),
                    trie: "shadow",
                });
            }
        }
        Ok(())
    }

    pub fn size_report(&self) -> SizeReport {
        SizeReport::new(self.vocab.encode().len(), self.shadow.encode().len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulekit::{builtin, derive_native_ruleset, identity_ruleset};

    fn words(lex: &Lexicon) -> Vec<(&str, u32)> {
        lex.entries().iter().map(|e| (e.word.as_str(), e.frequency)).collect()
    }

    #[test]
    fn counts_and_ranks() {
        let (lex, stats) = build_lexicon_from_lines(["a b a"], 2).unwrap();
        assert_eq!(words(&lex), vec![("a", 2), ("b", 1)]);
        assert_eq!(lex.rank_of("b"), Some(1));
        assert_eq!(stats.tokens, 3);
    }

    #[test]
    fn capacity_larger_than_vocabulary() {
        let (lex, _) = build_lexicon_from_lines(["c b a", "a"], 10).unwrap();
        assert_eq!(words(&lex), vec![("a", 2), ("b", 1), ("c", 1)]);
    }

    #[test]
    fn empty_corpus_gives_empty_lexicon() {
        let (lex, _) = build_lexicon(&b""[..], 5).unwrap();
        assert!(lex.is_empty());
        assert!(matches!(build_lexicon(&b"a"[..], 0), Err(LexiconError::ZeroCapacity)));
    }

    #[test]
    fn invalid_utf8_lines_are_skipped_and_counted() {
        let corpus: &[u8] = b"ab cd\n\xff\xfe bad\nab\n";
        let (lex, stats) = build_lexicon(corpus, 10).unwrap();
        assert_eq!(stats.invalid_lines, 1);
        assert_eq!(words(&lex), vec![("ab", 2), ("cd", 1)]);
    }

    #[test]
    fn punctuation_is_stripped_at_edges() {
        let toks: Vec<String> = tokenize("Kaafi, \"der\" se... राम। don't").collect();
        assert_eq!(toks, vec!["kaafi", "der", "se", "राम", "don't"]);
    }

    #[test]
    fn shadow_trie_merges_table_one_pair() {
        let layout = builtin::layout("hi").unwrap().unwrap();
        let rules = derive_native_ruleset(&layout);
        let (lex, _) = build_lexicon_from_lines(["घर घर कल"], 10).unwrap();
        let tries = build_parallel_tries(&lex, &rules);
        assert_eq!(tries.shadow.len(), 1);
        let ghar = lex.rank_of("घर").unwrap();
        let kal = lex.rank_of("कल").unwrap();
        assert_eq!(tries.shadow.get("कय"), Some(&[ghar, kal][..]));
        assert_eq!(
            tries.shadow.prefix_search("कय", 5),
            vec![
                PrefixMatch {
                    index: ghar,
                    exact: true
                },
                PrefixMatch {
                    index: kal,
                    exact: true
                }
            ]
        );
        tries.check_parity(&lex, &rules).unwrap();
    }

    #[test]
    fn identity_rules_mirror_vocab() {
        let (lex, _) = build_lexicon_from_lines(["x y z x"], 10).unwrap();
        let rules = identity_ruleset("x");
        let tries = build_parallel_tries(&lex, &rules);
        assert_eq!(tries.shadow.entries(), tries.vocab.entries());
        assert!(tries.shadow.entries().iter().all(|(_, p)| p.len() == 1));
    }

    #[test]
    fn parity_violation_is_reported() {
        let (lex, _) = build_lexicon_from_lines(["aa a"], 10).unwrap();
        let rules = builtin::ruleset("hinglish").unwrap().unwrap();
        let good = build_parallel_tries(&lex, &rules);
        let broken = ParallelTrieSet::from_parts(good.vocab.clone(), Trie::from_pairs([("A", 0)]), &lex, &rules);
        let err = broken.check_parity(&lex, &rules).unwrap_err();
        assert_eq!(err.rank, 1);
        assert_eq!(err.trie, "shadow");
    }
}
