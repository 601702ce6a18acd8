use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::LmError;

pub const USER_MODEL_VERSION: u16 = 1;
const USER_MAGIC: &[u8; 4] = b"EUSR";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct UserToken {
    pub count: u32,
    /// Commit sequence number of the latest use.
    pub last_used: u64,
    /// True when the surface form is not in the lexicon.
    pub oov: bool,
}

/// One committed word as the learner sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    /// What the user actually committed.
    pub surface: String,
    /// The vocabulary twin of an OOV variant, or the surface itself.
    pub normalized: String,
    /// Shadow-key (base form) of the surface.
    pub representation: String,
    pub in_vocab: bool,
}

impl CommitRecord {
    /// A commit whose normalized form and representation equal the surface.
    pub fn plain(word: &str, in_vocab: bool) -> CommitRecord {
        CommitRecord {
            surface: word.to_string(),
            normalized: word.to_string(),
            representation: word.to_string(),
            in_vocab,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Successors {
    total: u64,
    words: BTreeMap<String, u32>,
}

/// Personalized model learned from commits.
///
/// Surface tokens keep their own counts; n-gram statistics are keyed by the
/// normalized context and normalized word, so two spellings of the same word
/// share one history.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserModel {
    order: usize,
    clock: u64,
    tokens: BTreeMap<String, UserToken>,
    unigrams: Successors,
    ngrams: BTreeMap<Vec<String>, Successors>,
    base_map: BTreeMap<String, String>,
    /// Optional cap on any single count.
    pub count_cap: Option<u32>,
}

impl UserModel {
    pub fn new(order: usize) -> UserModel {
        UserModel {
            order: order.max(1),
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, surface: &str) -> Option<&UserToken> {
        self.tokens.get(surface)
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, &UserToken)> {
        self.tokens.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Normalized words with any learned count.
    pub fn known_words(&self) -> impl Iterator<Item = &str> {
        self.unigrams.words.keys().map(String::as_str)
    }

    /// Preferred surface for an OOV variant representation.
    pub fn preferred_surface(&self, representation: &str) -> Option<&str> {
        self.base_map.get(representation).map(String::as_str)
    }

    pub fn base_map(&self) -> impl Iterator<Item = (&str, &str)> {
        self.base_map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn ngram_count<S: AsRef<str>>(&self, context: &[S], word: &str) -> u32 {
        let succ = if context.is_empty() {
            Some(&self.unigrams)
        } else {
            let key: Vec<String> = context.iter().map(|s| s.as_ref().to_string()).collect();
            self.ngrams.get(&key)
        };
        succ.and_then(|s| s.words.get(word)).copied().unwrap_or(0)
    }

    pub fn relative_frequency(&self, context: &[&str], word: &str) -> f64 {
        let succ = if context.is_empty() {
            Some(&self.unigrams)
        } else {
            let key: Vec<String> = context.iter().map(|s| s.to_string()).collect();
            self.ngrams.get(&key)
        };
        match succ {
            Some(s) if s.total > 0 => s.words.get(word).copied().unwrap_or(0) as f64 / s.total as f64,
            _ => 0.0,
        }
    }

    fn bump(cap: Option<u32>, succ: &mut Successors, word: &str) {
        let c = succ.words.entry(word.to_string()).or_insert(0);
        if cap.is_some_and(|cap| *c >= cap) {
            return;
        }
        *c += 1;
        succ.total += 1;
    }

    /// Records a commit after `context` (already normalized).
    pub fn learn_commit<S: AsRef<str>>(&mut self, context: &[S], commit: &CommitRecord) {
        self.clock += 1;
        let cap = self.count_cap;
        let tok = self.tokens.entry(commit.surface.clone()).or_default();
        if !cap.is_some_and(|cap| tok.count >= cap) {
            tok.count += 1;
        }
        tok.last_used = self.clock;
        tok.oov = !commit.in_vocab;
        let surface_count = tok.count;

        Self::bump(cap, &mut self.unigrams, &commit.normalized);
        let keep = context.len().min(self.order - 1);
        let window = &context[context.len() - keep..];
        for j in 1..=window.len() {
            let key: Vec<String> = window[window.len() - j..]
                .iter()
                .map(|s| s.as_ref().to_string())
                .collect();
            Self::bump(cap, self.ngrams.entry(key).or_default(), &commit.normalized);
        }

        if !commit.in_vocab {
            // the most used variant wins; a tie goes to the latest commit
            let replace = match self.base_map.get(&commit.representation) {
                None => true,
                Some(prev) => self.tokens.get(prev).map_or(0, |t| t.count) <= surface_count,
            };
            if replace {
                self.base_map
                    .insert(commit.representation.clone(), commit.surface.clone());
            }
        }
    }

    /// Versioned, length-prefixed records:
    /// `EUSR`, u16 version, u32 order, u64 clock, then counted blocks of
    /// tokens, n-gram entries and base-map entries.
    pub fn to_bytes(&self) -> Vec<u8> {
        fn s(out: &mut Vec<u8>, v: &str) {
            out.extend_from_slice(&(v.len() as u32).to_le_bytes());
            out.extend_from_slice(v.as_bytes());
        }
        let mut out = Vec::new();
        out.extend_from_slice(USER_MAGIC);
        out.extend_from_slice(&USER_MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.order as u32).to_le_bytes());
        out.extend_from_slice(&self.clock.to_le_bytes());
        out.extend_from_slice(&(self.tokens.len() as u32).to_le_bytes());
        for (w, t) in &self.tokens {
            s(&mut out, w);
            out.extend_from_slice(&t.count.to_le_bytes());
            out.extend_from_slice(&t.last_used.to_le_bytes());
            out.push(t.oov as u8);
        }
        let mut grams: Vec<(&[String], &str, u32)> = self
            .unigrams
            .words
            .iter()
            .map(|(w, &c)| (&[][..], w.as_str(), c))
            .collect();
        for (ctx, succ) in &self.ngrams {
            grams.extend(succ.words.iter().map(|(w, &c)| (ctx.as_slice(), w.as_str(), c)));
        }
        out.extend_from_slice(&(grams.len() as u32).to_le_bytes());
        for (ctx, w, c) in grams {
            out.extend_from_slice(&(ctx.len() as u32).to_le_bytes());
            for t in ctx {
                s(&mut out, t);
            }
            s(&mut out, w);
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&(self.base_map.len() as u32).to_le_bytes());
        for (k, v) in &self.base_map {
            s(&mut out, k);
            s(&mut out, v);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<UserModel, LmError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != USER_MAGIC {
            return Err(LmError::UserModel("bad magic".into()));
        }
        let version = r.u16()?;
        if version != USER_MODEL_VERSION {
            return Err(LmError::UserModel(format!("unsupported version {version}")));
        }
        let order = r.u32()? as usize;
        if order == 0 {
            return Err(LmError::UserModel("order 0".into()));
        }
        let mut m = UserModel::new(order);
        m.clock = r.u64()?;
        for _ in 0..r.u32()? {
            let w = r.str()?;
            let count = r.u32()?;
            let last_used = r.u64()?;
            let oov = r.take(1)?[0] != 0;
            m.tokens.insert(w, UserToken { count, last_used, oov });
        }
        for _ in 0..r.u32()? {
            let n = r.u32()? as usize;
            if n >= order {
                return Err(LmError::UserModel("context longer than order".into()));
            }
            let ctx = (0..n).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
            let w = r.str()?;
            let c = r.u32()?;
            let succ = if ctx.is_empty() {
                &mut m.unigrams
            } else {
                m.ngrams.entry(ctx).or_default()
            };
            succ.words.insert(w, c);
            succ.total += c as u64;
        }
        for _ in 0..r.u32()? {
            let k = r.str()?;
            let v = r.str()?;
            m.base_map.insert(k, v);
        }
        if r.pos != bytes.len() {
            return Err(LmError::UserModel("trailing bytes".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| LmError::UserModel(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<UserModel, LmError> {
        let bytes = std::fs::read(path).map_err(|e| LmError::UserModel(e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LmError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| LmError::UserModel("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, LmError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, LmError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LmError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, LmError> {
        let n = self.u32()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| LmError::UserModel("invalid UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variant(surface: &str) -> CommitRecord {
        CommitRecord {
            surface: surface.into(),
            normalized: "kafi".into(),
            representation: "kAFI".into(),
            in_vocab: surface == "kafi",
        }
    }

    #[test]
    fn variants_share_normalized_ngrams() {
        let mut u = UserModel::new(3);
        u.learn_commit(&["bahut"], &variant("kaafi"));
        u.learn_commit(&["bahut"], &variant("kafee"));
        assert_eq!(u.ngram_count(&["bahut"], "kafi"), 2);
        assert_eq!(u.token("kaafi").unwrap().count, 1);
        assert_eq!(u.token("kafee").unwrap().count, 1);
        // equal counts: the latest variant is preferred
        assert_eq!(u.preferred_surface("kAFI"), Some("kafee"));
        u.learn_commit(&["hai"], &variant("kaafi"));
        assert_eq!(u.preferred_surface("kAFI"), Some("kaafi"));
    }

    #[test]
    fn count_cap_limits_growth() {
        let mut u = UserModel::new(2);
        u.count_cap = Some(2);
        for _ in 0..5 {
            u.learn_commit(&["a"], &CommitRecord::plain("b", true));
        }
        assert_eq!(u.token("b").unwrap().count, 2);
        assert_eq!(u.ngram_count(&["a"], "b"), 2);
    }

    #[test]
    fn bytes_round_trip() {
        let mut u = UserModel::new(3);
        u.learn_commit(&["x", "y"], &variant("kaafi"));
        u.learn_commit::<&str>(&[], &CommitRecord::plain("q", false));
        let back = UserModel::from_bytes(&u.to_bytes()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn corrupt_bytes_are_rejected() {
        let mut u = UserModel::new(3);
        u.learn_commit(&["x"], &variant("kaafi"));
        let bytes = u.to_bytes();
        for cut in 0..bytes.len() {
            assert!(UserModel::from_bytes(&bytes[..cut]).is_err());
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(UserModel::from_bytes(&bad).is_err());
    }
}
