//! Backoff n-gram scoring, next-word prediction and the personalized model.

mod ngram;
mod user;

pub use ngram::{token_ids, train_ngram, NGramModel, UNK};
pub use user::{CommitRecord, UserModel, UserToken, USER_MODEL_VERSION};

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::Lexicon;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LmError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("user model: {0}")]
    UserModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LmConfig {
    /// Multiplier applied per backoff level.
    pub beta: f64,
    /// Probability floor; scores never go below `ln(floor)`.
    pub floor: f64,
    /// Weight of the user model whenever one is supplied.
    pub lambda_user: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            beta: 0.4,
            floor: 1e-8,
            lambda_user: 0.3,
        }
    }
}

/// A static model paired with the lexicon its ids refer to.
#[derive(Debug, Clone, Copy)]
pub struct LanguageModel<'a> {
    pub ngram: &'a NGramModel,
    pub lexicon: &'a Lexicon,
    pub config: LmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub token: String,
    pub rank: Option<u32>,
    pub score: f64,
}

/// Score desc, then rank asc with unranked last, then lexicographic.
pub fn compare_ranked(a: (f64, Option<u32>, &str), b: (f64, Option<u32>, &str)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| match (a.1, b.1) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
        .then_with(|| a.2.cmp(b.2))
}

impl<'a> LanguageModel<'a> {
    pub fn new(ngram: &'a NGramModel, lexicon: &'a Lexicon) -> Self {
        LanguageModel {
            ngram,
            lexicon,
            config: LmConfig::default(),
        }
    }

    fn context_window<'c, S: AsRef<str>>(&self, context: &'c [S]) -> &'c [S] {
        let keep = context.len().min(self.ngram.order() - 1);
        &context[context.len() - keep..]
    }

    /// Backoff probability from the static model alone, before flooring.
    ///
    /// Each order `j` (context length used) contributes
    /// `beta^(L - j) * count / total`; the best order wins. Taking the best
    /// rather than the highest seen order keeps the score monotone in counts.
    pub fn static_prob<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let Some(w) = self.lexicon.rank_of(word) else {
            return 0.0;
        };
        let ctx: Vec<u32> = self
            .context_window(context)
            .iter()
            .map(|t| self.lexicon.rank_of(t.as_ref()).unwrap_or(UNK))
            .collect();
        self.static_prob_ids(&ctx, w)
    }

    fn static_prob_ids(&self, ctx: &[u32], w: u32) -> f64 {
        let l = ctx.len();
        let mut best = 0.0f64;
        let mut weight = 1.0;
        for j in (0..=l).rev() {
            let rf = if j == 0 {
                self.ngram.unigram_prob(w)
            } else {
                self.ngram.relative_frequency(&ctx[l - j..], w)
            };
            best = best.max(weight * rf);
            weight *= self.config.beta;
        }
        best
    }

    fn user_prob<S: AsRef<str>>(&self, user: &UserModel, context: &[S], word: &str) -> f64 {
        let ctx: Vec<&str> = self.context_window(context).iter().map(|s| s.as_ref()).collect();
        let l = ctx.len();
        let mut best = 0.0f64;
        let mut weight = 1.0;
        for j in (0..=l).rev() {
            best = best.max(weight * user.relative_frequency(&ctx[l - j..], word));
            weight *= self.config.beta;
        }
        best
    }

    /// Interpolated probability before flooring.
    pub fn prob<S: AsRef<str>>(&self, user: Option<&UserModel>, context: &[S], word: &str) -> f64 {
        let p = self.static_prob(context, word);
        match user {
            Some(u) => {
                let lam = self.config.lambda_user;
                (1.0 - lam) * p + lam * self.user_prob(u, context, word)
            }
            _ => p,
        }
    }

    /// Log-probability of `word` after the (already normalized) `context`.
    pub fn score<S: AsRef<str>>(&self, user: Option<&UserModel>, context: &[S], word: &str) -> f64 {
        self.prob(user, context, word).max(self.config.floor).ln()
    }

    /// Top-`k` next tokens.
    ///
    /// Only words that appear in some per-order top-`k` list, the `k` best
    /// unigrams or the user model can reach the top `k`: any other word is
    /// beaten or tied at its best order by `k` words already collected, which
    /// win ties by rank.
    pub fn predict_next<S: AsRef<str>>(&self, user: Option<&UserModel>, context: &[S], k: usize) -> Vec<Prediction> {
        if k == 0 {
            return Vec::new();
        }
        let window = self.context_window(context);
        let ids: Vec<u32> = window
            .iter()
            .map(|t| self.lexicon.rank_of(t.as_ref()).unwrap_or(UNK))
            .collect();
        let mut pool: BTreeSet<String> = BTreeSet::new();
        for j in 1..=ids.len() {
            for w in self.ngram.successors(&ids[ids.len() - j..]).take(k) {
                pool.insert(self.lexicon.word(w).to_string());
            }
        }
        for r in 0..k.min(self.lexicon.len()) {
            pool.insert(self.lexicon.word(r as u32).to_string());
        }
        if let Some(u) = user {
            pool.extend(u.known_words().map(str::to_string));
        }
        self.rank_tokens(user, window, pool, k)
    }

    /// Scores `tokens` and keeps the best `k` in prediction order.
    pub fn rank_tokens<S: AsRef<str>>(
        &self,
        user: Option<&UserModel>,
        context: &[S],
        tokens: impl IntoIterator<Item = String>,
        k: usize,
    ) -> Vec<Prediction> {
        let mut scored: Vec<Prediction> = tokens
            .into_iter()
            .map(|t| Prediction {
                score: self.score(user, context, &t),
                rank: self.lexicon.rank_of(&t),
                token: t,
            })
            .collect();
        scored.sort_by(|a, b| compare_ranked((a.score, a.rank, &a.token), (b.score, b.rank, &b.token)));
        scored.truncate(k);
        scored
    }
}

pub fn lm_score<S: AsRef<str>>(lm: &LanguageModel<'_>, user: Option<&UserModel>, context: &[S], word: &str) -> f64 {
    lm.score(user, context, word)
}

pub fn predict_next<S: AsRef<str>>(
    lm: &LanguageModel<'_>,
    user: Option<&UserModel>,
    context: &[S],
    k: usize,
) -> Vec<Prediction> {
    lm.predict_next(user, context, k)
}

pub fn learn_commit(user: &mut UserModel, context: &[String], commit: &CommitRecord) {
    user.learn_commit(context, commit);
}
