//! Keystroke savings, next-word prediction, error-correction scores, layout
//! predictability sweeps, variant injection and the synthetic desk corpus.

pub mod corpus;
mod inject;
mod predictability;
mod simulate;

pub use inject::{inject_variants, variants_of, Injected};
pub use predictability::{elbow, layout_predictability, sweep_groupings, GroupingSpec, Sweep, SweepPoint};
pub use simulate::{
    compute_ec, evaluate, simulate_typing, EvalOptions, EvalReport, EvalSet, LatencyStats, SentenceStats,
};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{0} must be positive")]
    ZeroDenominator(&'static str),
    #[error("rate {0} is outside [0, 1]")]
    InvalidRate(String),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("typed and intended test sets differ in shape")]
    ShapeMismatch,
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}

/// `(n_c - n_k) / n_c * 100`.
pub fn compute_ksr(n_c: u64, n_k: u64) -> Result<f64, EvalError> {
    if n_c == 0 {
        return Err(EvalError::ZeroDenominator("n_c"));
    }
    Ok((n_c as f64 - n_k as f64) / n_c as f64 * 100.0)
}

/// Percentage of positions whose next word was among the predictions.
pub fn compute_nwp(hits: u64, total: u64) -> Result<f64, EvalError> {
    if total == 0 {
        return Err(EvalError::ZeroDenominator("prediction positions"));
    }
    Ok(hits as f64 / total as f64 * 100.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EcCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl EcCounts {
    pub fn add(&mut self, other: EcCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn scores(&self) -> EcScores {
        let ratio = |num: u64, den: u64| if den == 0 { None } else { Some(num as f64 / den as f64) };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let precision = p.unwrap_or(0.0);
        let recall = r.unwrap_or(0.0);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EcScores {
            counts: *self,
            precision,
            recall,
            f1,
            undefined: p.is_none() || r.is_none(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcScores {
    pub counts: EcCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when precision or recall had a zero denominator (reported as 0).
    pub undefined: bool,
}
