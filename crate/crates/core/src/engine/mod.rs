//! Typing sessions: ambiguous native keys, romanized composing with variant
//! disambiguation, auto-correction, context normalization and learning.

pub mod distance;
mod session;

pub use distance::{damerau_levenshtein, prefix_distance};
pub use session::{normalize_context, Mode, Session};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::LmConfig;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("{0:?} is not the representative of any key")]
    NotRepresentative(char),
    #[error("{0:?} cannot be typed in this mode")]
    Untypeable(char),
    #[error("mode {mode} needs a {needs} model")]
    ModeMismatch { mode: &'static str, needs: &'static str },
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub max_candidates: usize,
    /// Log-units subtracted per character still to be typed.
    pub lambda_len: f64,
    /// Log-units subtracted per edit.
    pub mu: f64,
    pub auto_correct_max_distance: u32,
    pub correction_max_distance: u32,
    /// How many trie hits are rescored per keystroke.
    pub pool_limit: usize,
    #[serde(skip)]
    pub lm: LmConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_candidates: 3,
            lambda_len: 0.1,
            mu: 1.0,
            auto_correct_max_distance: 1,
            correction_max_distance: 2,
            pool_limit: 64,
            lm: LmConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.auto_correct_max_distance > self.correction_max_distance {
            return Err(EngineError::InvalidConfig(format!(
                "autoCorrectMaxDistance {} exceeds correctionMaxDistance {}",
                self.auto_correct_max_distance, self.correction_max_distance
            )));
        }
        if self.max_candidates == 0 || self.pool_limit == 0 {
            return Err(EngineError::InvalidConfig("candidate limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Found in the vocabulary trie under the typed characters.
    VocabExact,
    /// Found through the shadow trie.
    Shadow,
    /// Learned from the user's commits.
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub surface: String,
    pub rank: Option<u32>,
    pub score: f64,
    pub source: Source,
    pub edit_distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "decision", content = "surfaces", rename_all = "kebab-case")]
pub enum Decision {
    AcceptAsIs,
    AutoCorrect(String),
    OfferCorrection(Vec<String>),
}

pub(crate) fn sort_candidates(cands: &mut Vec<Candidate>) {
    cands.sort_by(|a, b| crate::lm::compare_ranked((a.score, a.rank, &a.surface), (b.score, b.rank, &b.surface)));
    let mut seen = std::collections::HashSet::new();
    cands.retain(|c| seen.insert(c.surface.clone()));
}

/// Decides what happens to a completed token.
///
/// `candidates` come from [`Session::correction_candidates`], best first.
/// Same-base candidates (shadow or user sourced) are considered before
/// plain typo neighbours from the vocabulary.
pub fn auto_correct(token: &str, candidates: &[Candidate], config: &EngineConfig) -> Decision {
    let known = |c: &&Candidate| c.surface == token && (c.rank.is_some() || c.source == Source::User);
    if candidates.iter().any(|c| known(&c)) {
        return Decision::AcceptAsIs;
    }
    let offer = |pool: Vec<&Candidate>| -> Option<Decision> {
        let best = pool.first()?;
        if best.edit_distance <= config.auto_correct_max_distance {
            return Some(Decision::AutoCorrect(best.surface.clone()));
        }
        let close: Vec<String> = pool
            .iter()
            .filter(|c| c.edit_distance <= config.correction_max_distance)
            .map(|c| c.surface.clone())
            .collect();
        (!close.is_empty()).then_some(Decision::OfferCorrection(close))
    };
    let same_base: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| matches!(c.source, Source::Shadow | Source::User) && c.surface != token)
        .collect();
    if let Some(d) = offer(same_base) {
        return d;
    }
    let typo: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| c.source == Source::VocabExact && c.surface != token)
        .collect();
    offer(typo).unwrap_or(Decision::AcceptAsIs)
}
