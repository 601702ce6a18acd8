use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::{compute_ksr, compute_nwp, EcCounts, EcScores, EvalError};
use crate::engine::{Decision, EngineConfig, Mode, Session};
use crate::lexicon::{tokenize, Model};

/// Sentences as the user means them and as the user types them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSet {
    pub intended: Vec<Vec<String>>,
    pub typed: Vec<Vec<String>>,
}

impl EvalSet {
    pub fn new(intended: Vec<Vec<String>>) -> EvalSet {
        EvalSet {
            typed: intended.clone(),
            intended,
        }
    }

    pub fn with_typed(intended: Vec<Vec<String>>, typed: Vec<Vec<String>>) -> Result<EvalSet, EvalError> {
        let same = intended.len() == typed.len() && intended.iter().zip(&typed).all(|(a, b)| a.len() == b.len());
        if !same {
            return Err(EvalError::ShapeMismatch);
        }
        Ok(EvalSet { intended, typed })
    }

    /// One sentence per line; blank lines are dropped.
    pub fn from_text(text: &str) -> EvalSet {
        EvalSet::new(
            text.lines()
                .map(|l| tokenize(l).collect::<Vec<_>>())
                .filter(|s| !s.is_empty())
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.intended.is_empty()
    }

    pub fn tokens(&self) -> usize {
        self.intended.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalOptions {
    /// Size of the next-word prediction list.
    pub predictions: usize,
    /// Whether choosing a suggestion costs a keystroke.
    pub count_selection: bool,
    /// Extra keystrokes per view change on the conventional layout.
    pub view_switch_cost: u64,
    /// Record per-keystroke latency.
    pub timing: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            predictions: 3,
            count_selection: true,
            view_switch_cost: 1,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SentenceStats {
    pub words: u64,
    pub untypeable: u64,
    pub n_c: u64,
    pub n_k: u64,
    pub nwp_hits: u64,
    pub nwp_total: u64,
    pub ec: EcCounts,
    #[serde(skip)]
    pub latencies_us: Vec<f64>,
}

impl SentenceStats {
    fn add(&mut self, o: SentenceStats) {
        self.words += o.words;
        self.untypeable += o.untypeable;
        self.n_c += o.n_c;
        self.n_k += o.n_k;
        self.nwp_hits += o.nwp_hits;
        self.nwp_total += o.nwp_total;
        self.ec.add(o.ec);
        self.latencies_us.extend(o.latencies_us);
    }
}

fn classify(typed: &str, intended: &str, decision: &Decision) -> EcCounts {
    let mut c = EcCounts::default();
    match decision {
        Decision::AutoCorrect(s) if s == intended => c.tp = 1,
        Decision::AutoCorrect(_) => c.fp = 1,
        _ if typed != intended => c.fn_ = 1,
        _ => {}
    }
    c
}

/// Key presses for one word, or `None` when the mode cannot type it.
fn keys_for(session: &Session, typed: &str, intended: &str) -> Option<Vec<char>> {
    let model = session.model();
    let keys: Option<Vec<char>> = match session.mode() {
        Mode::NativeAmbiguous => {
            let layout = model.script.layout()?;
            intended.chars().map(|c| layout.representative_of(c)).collect()
        }
        Mode::Conventional => {
            let layout = model.script.layout()?;
            intended.chars().map(|c| layout.is_typeable(c).then_some(c)).collect()
        }
        Mode::Romanized { .. } => typed.chars().map(|c| c.is_ascii_lowercase().then_some(c)).collect(),
    };
    keys.filter(|k| !k.is_empty())
}

/// Types one sentence on `session`, whose context should be empty.
///
/// Per word: a prediction hit before typing selects the word with one
/// keystroke. Otherwise keys are pressed one by one until the word (typed or
/// intended form) shows up among the candidates, which costs one selection
/// keystroke; a word that never shows up is typed in full plus one commit
/// keystroke. Selections insert the separator.
pub fn simulate_typing(
    session: &mut Session,
    intended: &[String],
    typed: &[String],
    opts: &EvalOptions,
) -> SentenceStats {
    let mut st = SentenceStats::default();
    let selection = u64::from(opts.count_selection);
    let romanized = matches!(session.mode(), Mode::Romanized { .. });
    let mut view = 0usize;
    for (w, t) in intended.iter().zip(typed) {
        let Some(keys) = keys_for(session, t, w) else {
            st.untypeable += 1;
            session.commit(if romanized { t } else { w });
            continue;
        };
        st.words += 1;
        st.n_c += t.chars().count() as u64 + 1;

        let decision = if romanized {
            let d = session.decide(t);
            st.ec.add(classify(t, w, &d));
            d
        } else {
            Decision::AcceptAsIs
        };

        let hit = |cands: &[crate::engine::Candidate], limit: usize| -> Option<String> {
            let top = &cands[..cands.len().min(limit)];
            top.iter()
                .find(|c| &c.surface == w)
                .or_else(|| top.iter().find(|c| &c.surface == t))
                .map(|c| c.surface.clone())
        };

        st.nwp_total += 1;
        let preds = session.predict(opts.predictions);
        if let Some(s) = hit(&preds, opts.predictions) {
            st.nwp_hits += 1;
            st.n_k += selection;
            session.commit(&s);
            continue;
        }

        let mut selected = None;
        let limit = session.config().max_candidates;
        for k in keys {
            if session.mode() == Mode::Conventional {
                if let Some(v) = session.model().script.layout().and_then(|l| l.view_of(k)) {
                    if v != view {
                        st.n_k += opts.view_switch_cost;
                        view = v;
                    }
                }
            }
            st.n_k += 1;
            let started = opts.timing.then(Instant::now);
            let res = session.press_key(k);
            if let Some(t0) = started {
                st.latencies_us.push(t0.elapsed().as_secs_f64() * 1e6);
            }
            let cands = res.expect("keys are validated before typing");
            if let Some(s) = hit(cands, limit) {
                selected = Some(s);
                break;
            }
        }
        match selected {
            Some(s) => {
                st.n_k += selection;
                session.commit(&s);
            }
            None => {
                st.n_k += 1;
                let fin = match decision {
                    Decision::AutoCorrect(s) => s,
                    _ if romanized => t.clone(),
                    _ => w.clone(),
                };
                session.commit(&fin);
            }
        }
    }
    st
}

/// Runs the auto-correct decision on each `(typed, intended)` pair with the
/// session's current context.
pub fn compute_ec(pairs: &[(String, String)], session: &Session) -> EcScores {
    let mut c = EcCounts::default();
    for (t, w) in pairs {
        c.add(classify(t, w, &session.decide(t)));
    }
    c.scores()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub samples: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

impl LatencyStats {
    pub fn from_micros(mut us: Vec<f64>) -> Option<LatencyStats> {
        if us.is_empty() {
            return None;
        }
        us.sort_by(f64::total_cmp);
        let pick = |q: f64| us[((us.len() - 1) as f64 * q).round() as usize] / 1000.0;
        Some(LatencyStats {
            samples: us.len(),
            p50_ms: pick(0.5),
            p95_ms: pick(0.95),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: &'static str,
    pub sentences: usize,
    pub words: u64,
    pub untypeable_words: u64,
    pub n_c: u64,
    pub n_k: u64,
    pub ksr: f64,
    pub nwp_hits: u64,
    pub nwp_positions: u64,
    pub nwp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ec: Option<EcScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyStats>,
}

/// Simulates the whole set on one session (context reset per sentence,
/// personalization carried over).
pub fn evaluate(
    model: Arc<Model>,
    set: &EvalSet,
    mode: Mode,
    config: EngineConfig,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    if set.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let mut session = Session::new(model, mode, config)?;
    let mut total = SentenceStats::default();
    for (w, t) in set.intended.iter().zip(&set.typed) {
        session.clear_context();
        total.add(simulate_typing(&mut session, w, t, opts));
    }
    Ok(EvalReport {
        mode: mode.name(),
        sentences: set.intended.len(),
        words: total.words,
        untypeable_words: total.untypeable,
        n_c: total.n_c,
        n_k: total.n_k,
        ksr: compute_ksr(total.n_c, total.n_k)?,
        nwp_hits: total.nwp_hits,
        nwp_positions: total.nwp_total,
        nwp: compute_nwp(total.nwp_hits, total.nwp_total)?,
        ec: matches!(mode, Mode::Romanized { .. }).then(|| total.ec.scores()),
        latency: if opts.timing {
            LatencyStats::from_micros(total.latencies_us)
        } else {
            None
        },
    })
}
