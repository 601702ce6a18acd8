use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::distance::{damerau_levenshtein, prefix_distance};
use super::{auto_correct, sort_candidates, Candidate, Decision, EngineConfig, EngineError, Source};
use crate::lexicon::Model;
use crate::lm::{token_ids, CommitRecord, LanguageModel, UserModel, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One key per sibling group; composing holds representatives.
    NativeAmbiguous,
    /// One key per character (the multi-view baseline layout).
    Conventional,
    /// Latin input; `wvd` enables word-variant disambiguation.
    Romanized { wvd: bool },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::NativeAmbiguous => "native-ambiguous",
            Mode::Conventional => "conventional",
            Mode::Romanized { wvd: true } => "romanized",
            Mode::Romanized { wvd: false } => "romanized-plain",
        }
    }

    fn wvd(&self) -> bool {
        matches!(self, Mode::Romanized { wvd: true })
    }
}

/// Per-user typing state over a shared model.
#[derive(Debug, Clone)]
pub struct Session {
    model: Arc<Model>,
    mode: Mode,
    config: EngineConfig,
    context: Vec<String>,
    normalized: Vec<String>,
    composing: String,
    user: UserModel,
    candidates: Vec<Candidate>,
}

/// Replaces OOV tokens by the in-vocabulary word sharing their base form
/// that fits the already normalized prefix best; tokens without such a word
/// stay as they are.
pub fn normalize_context<S: AsRef<str>>(model: &Model, lm: &LanguageModel<'_>, tokens: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    for t in tokens {
        let n = normalize_token(model, lm, &out, t.as_ref());
        out.push(n);
    }
    out
}

fn normalize_token(model: &Model, lm: &LanguageModel<'_>, prev: &[String], token: &str) -> String {
    if model.lexicon.contains(token) {
        return token.to_string();
    }
    let base = model.ruleset().transform(token);
    let Some(ranks) = model.tries.shadow.get(&base) else {
        return token.to_string();
    };
    let mut best: Option<(f64, u32)> = None;
    for &r in ranks {
        let s = lm.score(None, prev, model.lexicon.word(r));
        // ranks ascend, so a strict improvement keeps the lower rank on ties
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, r));
        }
    }
    best.map_or_else(|| token.to_string(), |(_, r)| model.lexicon.word(r).to_string())
}

impl Session {
    pub fn new(model: Arc<Model>, mode: Mode, config: EngineConfig) -> Result<Session, EngineError> {
        config.validate()?;
        let native = model.is_native();
        match mode {
            Mode::NativeAmbiguous | Mode::Conventional if !native => {
                return Err(EngineError::ModeMismatch {
                    mode: mode.name(),
                    needs: "native-script",
                })
            }
            Mode::Romanized { .. } if native => {
                return Err(EngineError::ModeMismatch {
                    mode: mode.name(),
                    needs: "romanized",
                })
            }
            _ => {}
        }
        let order = model.ngram.order();
        Ok(Session {
            model,
            mode,
            config,
            context: Vec::new(),
            normalized: Vec::new(),
            composing: String::new(),
            user: UserModel::new(order),
            candidates: Vec::new(),
        })
    }

    pub fn with_user(mut self, user: UserModel) -> Session {
        self.user = user;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn context(&self) -> &[String] {
        &self.context
    }

    pub fn normalized_context(&self) -> &[String] {
        &self.normalized
    }

    pub fn composing(&self) -> &str {
        &self.composing
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn user(&self) -> &UserModel {
        &self.user
    }

    pub fn into_user(self) -> UserModel {
        self.user
    }

    /// What the text field shows for the word being composed.
    pub fn preview(&self) -> Option<&str> {
        if self.composing.is_empty() {
            return None;
        }
        Some(
            self.candidates
                .first()
                .map_or(self.composing.as_str(), |c| c.surface.as_str()),
        )
    }

    fn lm(&self) -> LanguageModel<'_> {
        LanguageModel {
            ngram: &self.model.ngram,
            lexicon: &self.model.lexicon,
            config: self.config.lm,
        }
    }

    fn check_key(&self, key: char) -> Result<char, EngineError> {
        match self.mode {
            Mode::NativeAmbiguous => {
                let layout = self.model.script.layout().expect("checked at construction");
                if layout.is_representative(key) {
                    Ok(key)
                } else {
                    Err(EngineError::NotRepresentative(key))
                }
            }
            Mode::Conventional => {
                let layout = self.model.script.layout().expect("checked at construction");
                if layout.is_typeable(key) {
                    Ok(key)
                } else {
                    Err(EngineError::Untypeable(key))
                }
            }
            Mode::Romanized { .. } => {
                if key.is_ascii_alphabetic() {
                    Ok(key.to_ascii_lowercase())
                } else {
                    Err(EngineError::Untypeable(key))
                }
            }
        }
    }

    /// Starts a new sentence; the user model is kept.
    pub fn clear_context(&mut self) {
        self.context.clear();
        self.normalized.clear();
        self.composing.clear();
        self.candidates.clear();
    }

    /// Appends one key and returns the new candidate list.
    pub fn press_key(&mut self, key: char) -> Result<&[Candidate], EngineError> {
        let key = self.check_key(key)?;
        self.composing.push(key);
        self.refresh();
        Ok(&self.candidates)
    }

    /// Removes the last composing key, or the last committed token when
    /// nothing is being composed.
    pub fn backspace(&mut self) -> &[Candidate] {
        if self.composing.pop().is_none() {
            self.context.pop();
            self.normalized.pop();
        }
        self.refresh();
        &self.candidates
    }

    fn refresh(&mut self) {
        self.candidates = if self.composing.is_empty() {
            Vec::new()
        } else {
            match self.mode {
                Mode::Romanized { .. } => self.compose_candidates(&self.composing.clone()),
                _ => self.native_candidates(),
            }
        };
    }

    /// Ranks accepted by `key_of`, taken from the likeliest continuations
    /// of the current context.
    fn context_successors(&self, key_of: impl Fn(u32) -> bool) -> Vec<u32> {
        let lm = self.lm();
        let order = self.model.ngram.order();
        let keep = self.normalized.len().min(order - 1);
        let ids = token_ids(lm.lexicon, &self.normalized[self.normalized.len() - keep..]);
        let mut out = Vec::new();
        for j in 1..=ids.len() {
            let ctx = &ids[ids.len() - j..];
            if ctx.iter().all(|&i| i == UNK) {
                continue;
            }
            out.extend(
                self.model
                    .ngram
                    .successors(ctx)
                    .filter(|&w| key_of(w))
                    .take(self.config.pool_limit),
            );
        }
        out
    }

    fn native_candidates(&self) -> Vec<Candidate> {
        let model = &self.model;
        let conventional = self.mode == Mode::Conventional;
        let key = self.composing.as_str();
        let key_len = key.chars().count();
        let (trie, source) = if conventional {
            (&model.tries.vocab, Source::VocabExact)
        } else {
            (&model.tries.shadow, Source::Shadow)
        };
        let key_of = |r: u32| -> &str {
            if conventional {
                model.lexicon.word(r)
            } else {
                model.tries.shadow_key(r)
            }
        };
        let mut ranks: BTreeSet<u32> = trie
            .prefix_search(key, self.config.pool_limit)
            .into_iter()
            .map(|m| m.index)
            .collect();
        ranks.extend(self.context_successors(|r| key_of(r).starts_with(key)));

        let lm = self.lm();
        let score = |word: &str| {
            let remaining = word.chars().count().saturating_sub(key_len);
            lm.score(Some(&self.user), &self.normalized, word) - self.config.lambda_len * remaining as f64
        };
        let mut out: Vec<Candidate> = ranks
            .into_iter()
            .map(|r| {
                let w = model.lexicon.word(r);
                Candidate {
                    surface: w.to_string(),
                    rank: Some(r),
                    score: score(w),
                    source,
                    edit_distance: 0,
                }
            })
            .collect();
        for (surface, tok) in self.user.tokens() {
            if !tok.oov {
                continue;
            }
            let rep = if conventional {
                surface.to_string()
            } else {
                model.ruleset().transform(surface)
            };
            if rep.starts_with(key) {
                out.push(Candidate {
                    surface: surface.to_string(),
                    rank: None,
                    score: score(surface),
                    source: Source::User,
                    edit_distance: 0,
                });
            }
        }
        sort_candidates(&mut out);
        out.truncate(self.config.max_candidates);
        out
    }

    /// The word a learned surface stands for in the model.
    fn scoring_word(&self, surface: &str) -> String {
        if self.mode.wvd() {
            normalize_token(&self.model, &self.lm(), &self.normalized, surface)
        } else {
            surface.to_string()
        }
    }

    /// Candidates for a partially typed romanized token.
    pub fn compose_candidates(&self, token: &str) -> Vec<Candidate> {
        let model = &self.model;
        let wvd = self.mode.wvd();
        let rules = model.ruleset();
        let base = rules.transform(token);
        let token_len = token.chars().count();
        let lm = self.lm();

        let mut pool: Vec<(u32, Source)> = model
            .tries
            .vocab
            .prefix_search(token, self.config.pool_limit)
            .into_iter()
            .map(|m| (m.index, Source::VocabExact))
            .collect();
        if wvd {
            pool.extend(
                model
                    .tries
                    .shadow
                    .prefix_search(&base, self.config.pool_limit)
                    .into_iter()
                    .map(|m| (m.index, Source::Shadow)),
            );
        }
        let succ = self.context_successors(|r| {
            model.lexicon.word(r).starts_with(token) || (wvd && model.tries.shadow_key(r).starts_with(&base))
        });
        pool.extend(succ.into_iter().map(|r| {
            let src = if model.lexicon.word(r).starts_with(token) {
                Source::VocabExact
            } else {
                Source::Shadow
            };
            (r, src)
        }));
        pool.sort_unstable_by_key(|&(r, s)| (r, s != Source::VocabExact));
        pool.dedup_by_key(|p| p.0);

        let finish = |surface: &str, lm_part: f64| {
            let remaining = surface.chars().count().saturating_sub(token_len);
            let ed = prefix_distance(token, surface);
            let score = lm_part - self.config.lambda_len * remaining as f64 - self.config.mu * ed as f64;
            (score, ed)
        };
        let mut out = Vec::with_capacity(pool.len());
        for (r, mut source) in pool {
            let word = model.lexicon.word(r);
            let lm_part = lm.score(Some(&self.user), &self.normalized, word);
            let mut surface = word;
            if wvd {
                if let Some(pref) = self.user.preferred_surface(model.tries.shadow_key(r)) {
                    if pref != word {
                        surface = pref;
                        source = Source::User;
                    }
                }
            }
            let (score, ed) = finish(surface, lm_part);
            out.push(Candidate {
                surface: surface.to_string(),
                rank: model.lexicon.rank_of(surface),
                score,
                source,
                edit_distance: ed,
            });
        }
        for (surface, _) in self.user.tokens() {
            let hit = if wvd {
                rules.transform(surface).starts_with(&base)
            } else {
                surface.starts_with(token)
            };
            if !hit {
                continue;
            }
            let lm_part = lm.score(Some(&self.user), &self.normalized, &self.scoring_word(surface));
            let (score, ed) = finish(surface, lm_part);
            out.push(Candidate {
                surface: surface.to_string(),
                rank: model.lexicon.rank_of(surface),
                score,
                source: Source::User,
                edit_distance: ed,
            });
        }
        sort_candidates(&mut out);
        out.truncate(self.config.max_candidates);
        out
    }

    /// Whole-word alternatives for a completed token, best first: words
    /// sharing its base form (with variant disambiguation on) and vocabulary
    /// words within `correction_max_distance` edits.
    pub fn correction_candidates(&self, token: &str) -> Vec<Candidate> {
        let model = &self.model;
        let lm = self.lm();
        let mut out = Vec::new();
        let mut push = |surface: &str, scoring: &str, source: Source| {
            let ed = damerau_levenshtein(token, surface);
            out.push(Candidate {
                surface: surface.to_string(),
                rank: model.lexicon.rank_of(surface),
                score: lm.score(Some(&self.user), &self.normalized, scoring) - self.config.mu * ed as f64,
                source,
                edit_distance: ed,
            });
        };
        if self.mode.wvd() {
            let base = model.ruleset().transform(token);
            if let Some(ranks) = model.tries.shadow.get(&base) {
                for &r in ranks {
                    let w = model.lexicon.word(r);
                    push(w, w, Source::Shadow);
                }
                if let Some(pref) = self.user.preferred_surface(&base) {
                    let twin = model.lexicon.word(ranks[0]).to_string();
                    push(pref, &twin, Source::User);
                }
            }
            for (surface, _) in self.user.tokens() {
                if model.lexicon.contains(surface) || model.ruleset().transform(surface) != base {
                    continue;
                }
                let scoring = self.scoring_word(surface);
                push(surface, &scoring, Source::User);
            }
        } else if self.user.token(token).is_some() {
            push(token, token, Source::User);
        }
        for (r, _) in model
            .tries
            .vocab
            .fuzzy_search(token, self.config.correction_max_distance)
        {
            let w = model.lexicon.word(r);
            push(w, w, Source::VocabExact);
        }
        // a same-base word found again by the typo search keeps its
        // same-base source
        out.sort_by_key(|c| c.source == Source::VocabExact);
        let mut seen = std::collections::HashSet::new();
        out.retain(|c| seen.insert(c.surface.clone()));
        sort_candidates(&mut out);
        out
    }

    /// Correction decision for a completed token.
    pub fn decide(&self, token: &str) -> Decision {
        if matches!(self.mode, Mode::Romanized { .. }) {
            auto_correct(token, &self.correction_candidates(token), &self.config)
        } else {
            Decision::AcceptAsIs
        }
    }

    /// Variant-normalized form of `tokens` under this session's mode.
    pub fn normalize(&self, tokens: &[String]) -> Vec<String> {
        if self.mode.wvd() {
            normalize_context(&self.model, &self.lm(), tokens)
        } else {
            tokens.to_vec()
        }
    }

    /// Commits `word`, learns from it and returns the context.
    pub fn commit(&mut self, word: &str) -> &[String] {
        let normalized = if self.mode.wvd() {
            normalize_token(&self.model, &self.lm(), &self.normalized, word)
        } else {
            word.to_string()
        };
        let record = CommitRecord {
            surface: word.to_string(),
            normalized: normalized.clone(),
            representation: self.model.ruleset().transform(word),
            in_vocab: self.model.lexicon.contains(word),
        };
        self.user.learn_commit(&self.normalized, &record);
        self.context.push(word.to_string());
        self.normalized.push(normalized);
        self.composing.clear();
        self.candidates.clear();
        &self.context
    }

    /// Next-word candidates for the normalized context.
    pub fn predict(&self, k: usize) -> Vec<Candidate> {
        self.lm()
            .predict_next(Some(&self.user), &self.normalized, k)
            .into_iter()
            .map(|p| Candidate {
                source: if p.rank.is_some() {
                    Source::VocabExact
                } else {
                    Source::User
                },
                surface: p.token,
                rank: p.rank,
                score: p.score,
                edit_distance: 0,
            })
            .collect()
    }
}
