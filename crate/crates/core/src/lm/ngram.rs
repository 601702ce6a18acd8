use std::collections::HashMap;

use crate::lexicon::codec::{read_varint, write_varint, Cursor};
use crate::lexicon::{tokenize, Lexicon, ModelError};

use super::LmError;

/// Reserved index for tokens outside the lexicon.
pub const UNK: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct ContextEntry {
    total: u64,
    /// `(word, count)` sorted by word for lookup.
    by_word: Vec<(u32, u32)>,
    /// Positions into `by_word`, sorted by count desc then word asc.
    by_count: Vec<u32>,
}

impl ContextEntry {
    fn count(&self, word: u32) -> u32 {
        self.by_word
            .binary_search_by_key(&word, |&(w, _)| w)
            .map(|i| self.by_word[i].1)
            .unwrap_or(0)
    }

    fn finish(&mut self) {
        self.by_word.sort_unstable();
        self.total = self.by_word.iter().map(|&(_, c)| c as u64).sum();
        let mut order: Vec<u32> = (0..self.by_word.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let (wa, ca) = self.by_word[a as usize];
            let (wb, cb) = self.by_word[b as usize];
            cb.cmp(&ca).then(wa.cmp(&wb))
        });
        self.by_count = order;
    }
}

/// Static backoff n-gram model over lexicon rank indices.
///
/// Unigram mass comes from lexicon frequencies plus the number of training
/// tokens that fell outside the lexicon (the UNK class). Higher orders keep,
/// per context, the counts of each continuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramModel {
    order: usize,
    unigram: Vec<u32>,
    unk_count: u64,
    total: u64,
    /// `tables[j]` holds contexts of length `j + 1`.
    tables: Vec<HashMap<Box<[u32]>, ContextEntry>>,
}

pub fn token_ids(lex: &Lexicon, tokens: &[String]) -> Vec<u32> {
    tokens.iter().map(|t| lex.rank_of(t).unwrap_or(UNK)).collect()
}

impl NGramModel {
    pub fn empty(order: usize, lex: &Lexicon) -> NGramModel {
        let unigram: Vec<u32> = lex.entries().iter().map(|e| e.frequency).collect();
        let total = unigram.iter().map(|&f| f as u64).sum();
        NGramModel {
            order: order.max(1),
            unigram,
            unk_count: 0,
            total,
            tables: (1..order.max(1)).map(|_| HashMap::new()).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.unigram.len()
    }

    /// Unigram probability; `UNK` gets the out-of-lexicon mass.
    pub fn unigram_prob(&self, id: u32) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let c = if id == UNK {
            self.unk_count
        } else {
            self.unigram.get(id as usize).copied().unwrap_or(0) as u64
        };
        c as f64 / self.total as f64
    }

    /// Count of `word` following `context` (context length ≥ 1).
    pub fn count(&self, context: &[u32], word: u32) -> u32 {
        if context.is_empty() {
            return self.unigram.get(word as usize).copied().unwrap_or(0);
        }
        self.tables
            .get(context.len() - 1)
            .and_then(|t| t.get(context))
            .map(|e| e.count(word))
            .unwrap_or(0)
    }

    pub fn context_total(&self, context: &[u32]) -> u64 {
        if context.is_empty() {
            return self.total;
        }
        self.tables
            .get(context.len() - 1)
            .and_then(|t| t.get(context))
            .map(|e| e.total)
            .unwrap_or(0)
    }

    /// Relative frequency of `word` after `context`, 0 when unseen.
    pub fn relative_frequency(&self, context: &[u32], word: u32) -> f64 {
        if word == UNK {
            return 0.0;
        }
        let total = self.context_total(context);
        if total == 0 {
            return 0.0;
        }
        self.count(context, word) as f64 / total as f64
    }

    /// Continuations of `context` in (count desc, rank asc) order.
    pub fn successors(&self, context: &[u32]) -> impl Iterator<Item = u32> + '_ {
        let entry = if context.is_empty() {
            None
        } else {
            self.tables.get(context.len() - 1).and_then(|t| t.get(context))
        };
        let unigrams = context.is_empty();
        let n = if unigrams {
            self.unigram.len()
        } else {
            entry.map_or(0, |e| e.by_count.len())
        };
        (0..n).filter_map(move |i| {
            if unigrams {
                // lexicon order already is (frequency desc, word asc)
                Some(i as u32)
            } else {
                let e = entry?;
                let (w, _) = e.by_word[e.by_count[i] as usize];
                (w != UNK).then_some(w)
            }
        })
    }

    pub fn ngram_count(&self) -> usize {
        self.tables
            .iter()
            .map(|t| t.values().map(|e| e.by_word.len()).sum::<usize>())
            .sum()
    }

    fn table_mut(&mut self, context_len: usize) -> &mut HashMap<Box<[u32]>, ContextEntry> {
        &mut self.tables[context_len - 1]
    }

    /// Flat tuple tables: per order `n ≥ 2`, the tuple count, then every
    /// `(w1..wn, count)` in lexicographic tuple order, as varints.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_varint(&mut out, self.order as u64);
        write_varint(&mut out, self.unk_count);
        for (j, table) in self.tables.iter().enumerate() {
            let mut tuples: Vec<(&[u32], u32, u32)> = table
                .iter()
                .flat_map(|(ctx, e)| e.by_word.iter().map(move |&(w, c)| (&ctx[..], w, c)))
                .collect();
            tuples.sort_unstable();
            write_varint(&mut out, tuples.len() as u64);
            debug_assert!(tuples.iter().all(|t| t.0.len() == j + 1));
            for (ctx, w, c) in tuples {
                for &id in ctx.iter().chain(std::iter::once(&w)) {
                    // UNK is stored as 0, ranks shifted by one
                    write_varint(&mut out, if id == UNK { 0 } else { id as u64 + 1 });
                }
                write_varint(&mut out, c as u64);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8], lex: &Lexicon) -> Result<NGramModel, ModelError> {
        let mut cur = Cursor::new(bytes, "NGRAM");
        let order = read_varint(&mut cur)? as usize;
        if order == 0 || order > 16 {
            return Err(cur.corrupt("invalid order"));
        }
        let mut model = NGramModel::empty(order, lex);
        model.unk_count = read_varint(&mut cur)?;
        model.total += model.unk_count;
        let vocab = lex.len() as u64;
        for n in 2..=order {
            let count = read_varint(&mut cur)? as usize;
            let table = model.table_mut(n - 1);
            let mut ids = vec![0u32; n];
            for _ in 0..count {
                for id in ids.iter_mut() {
                    let raw = read_varint(&mut cur)?;
                    *id = match raw {
                        0 => UNK,
                        r if r <= vocab => (r - 1) as u32,
                        _ => return Err(cur.corrupt("rank index out of range")),
                    };
                }
                let c = read_varint(&mut cur)? as u32;
                table
                    .entry(ids[..n - 1].into())
                    .or_default()
                    .by_word
                    .push((ids[n - 1], c));
            }
        }
        if !cur.is_at_end() {
            return Err(cur.corrupt("trailing bytes"));
        }
        for t in &mut model.tables {
            t.values_mut().for_each(ContextEntry::finish);
        }
        Ok(model)
    }
}

/// Counts orders `2..=order` over the corpus; tokens outside `lex` map to UNK.
pub fn train_ngram<'a>(
    corpus: impl IntoIterator<Item = &'a str>,
    lex: &Lexicon,
    order: usize,
) -> Result<NGramModel, LmError> {
    if order < 1 {
        return Err(LmError::InvalidOrder(order));
    }
    let mut model = NGramModel::empty(order, lex);
    // per order above one: context -> successor -> count
    type Counts = HashMap<Box<[u32]>, HashMap<u32, u32>>;
    let mut raw: Vec<Counts> = (1..order).map(|_| HashMap::new()).collect();
    for line in corpus {
        let ids: Vec<u32> = tokenize(line).map(|t| lex.rank_of(&t).unwrap_or(UNK)).collect();
        model.unk_count += ids.iter().filter(|&&i| i == UNK).count() as u64;
        for n in 2..=order {
            if ids.len() < n {
                break;
            }
            let table = &mut raw[n - 2];
            for win in ids.windows(n) {
                let slot = table.entry(win[..n - 1].into()).or_default();
                *slot.entry(win[n - 1]).or_insert(0) += 1;
            }
        }
    }
    model.total += model.unk_count;
    for (j, table) in raw.into_iter().enumerate() {
        let dest = model.table_mut(j + 1);
        for (ctx, words) in table {
            let mut entry = ContextEntry {
                by_word: words.into_iter().collect(),
                ..Default::default()
            };
            entry.finish();
            dest.insert(ctx, entry);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::build_lexicon_from_lines;

    fn model(lines: &[&str], order: usize) -> (Lexicon, NGramModel) {
        let (lex, _) = build_lexicon_from_lines(lines.iter().copied(), 100).unwrap();
        let m = train_ngram(lines.iter().copied(), &lex, order).unwrap();
        (lex, m)
    }

    #[test]
    fn bigram_counts() {
        let lines = vec!["a b"; 10];
        let (lex, m) = model(&lines, 2);
        let a = lex.rank_of("a").unwrap();
        let b = lex.rank_of("b").unwrap();
        assert_eq!(m.count(&[a], b), 10);
        assert_eq!(m.relative_frequency(&[a], b), 1.0);
    }

    #[test]
    fn trigram_counts_match_hand_count() {
        // a b c a b d: trigrams (a b c), (b c a), (c a b), (a b d)
        let (lex, m) = model(&["a b c a b d"], 3);
        let id = |w: &str| lex.rank_of(w).unwrap();
        assert_eq!(m.count(&[id("a"), id("b")], id("c")), 1);
        assert_eq!(m.count(&[id("a"), id("b")], id("d")), 1);
        assert_eq!(m.context_total(&[id("a"), id("b")]), 2);
        assert_eq!(m.count(&[id("b"), id("c")], id("a")), 1);
        assert_eq!(m.count(&[id("c"), id("a")], id("b")), 1);
        assert_eq!(m.count(&[id("a")], id("b")), 2);
        assert_eq!(m.ngram_count(), 4 + 4);
    }

    #[test]
    fn zero_order_is_rejected() {
        let lex = Lexicon::default();
        assert!(matches!(train_ngram(["a"], &lex, 0), Err(LmError::InvalidOrder(0))));
    }

    #[test]
    fn oov_tokens_become_unk() {
        let (lex, _) = build_lexicon_from_lines(["a a b"], 1).unwrap();
        let m = train_ngram(["a b", "a c"], &lex, 2).unwrap();
        let a = lex.rank_of("a").unwrap();
        assert_eq!(m.count(&[a], UNK), 2);
        assert_eq!(m.unigram_prob(UNK), 2.0 / 4.0);
        let sum: f64 = (0..lex.len() as u32).map(|i| m.unigram_prob(i)).sum::<f64>() + m.unigram_prob(UNK);
        assert!((sum - 1.0).abs() < 1e-9);
        // UNK never offered as a continuation
        assert_eq!(m.successors(&[a]).count(), 0);
    }

    #[test]
    fn successors_are_count_ordered() {
        let (lex, m) = model(&["x c", "x b", "x b", "x a"], 2);
        let x = lex.rank_of("x").unwrap();
        let got: Vec<&str> = m.successors(&[x]).map(|i| lex.word(i)).collect();
        assert_eq!(got, vec!["b", "a", "c"]);
    }

    #[test]
    fn encode_round_trip() {
        let (lex, _) = build_lexicon_from_lines(["a b c a b d e"], 4).unwrap();
        let m = train_ngram(["a b c a b d e", "b c"], &lex, 3).unwrap();
        let back = NGramModel::decode(&m.encode(), &lex).unwrap();
        assert_eq!(back, m);
    }
}
