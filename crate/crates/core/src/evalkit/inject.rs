use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::EvalError;
use crate::lexicon::Lexicon;
use crate::rulekit::{Anchor, RuleSet};

/// Spellings of `token` obtained by one reverse substitution (canonical
/// side replaced by the variant side) that keep the same representation.
/// Sorted and deduplicated.
pub fn variants_of(token: &str, rules: &RuleSet) -> Vec<String> {
    let target = rules.transform(token);
    let mut out = Vec::new();
    for e in rules.equivalences() {
        for (i, _) in token.match_indices(e.canonical.as_str()) {
            let end = i + e.canonical.len();
            let ok = match e.anchor {
                Anchor::None => true,
                Anchor::WordStart => i == 0,
                Anchor::WordEnd => end == token.len(),
            };
            if !ok {
                continue;
            }
            let v = format!("{}{}{}", &token[..i], e.variant, &token[end..]);
            if v != token && rules.transform(&v) == target {
                out.push(v);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Injected {
    pub typed: Vec<Vec<String>>,
    /// `(sentence, token)` positions that were replaced, ascending.
    pub positions: Vec<(usize, usize)>,
    pub eligible: usize,
}

/// Replaces `round(rate * eligible)` tokens by one of their variants.
///
/// A token is eligible when it has at least one variant (one that is out of
/// `vocabulary`, when given). Positions and variants are drawn from a
/// ChaCha8 stream seeded with `seed`.
pub fn inject_variants(
    sentences: &[Vec<String>],
    rules: &RuleSet,
    rate: f64,
    seed: u64,
    vocabulary: Option<&Lexicon>,
) -> Result<Injected, EvalError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(EvalError::InvalidRate(rate.to_string()));
    }
    let mut eligible: Vec<((usize, usize), Vec<String>)> = Vec::new();
    for (s, sent) in sentences.iter().enumerate() {
        for (t, tok) in sent.iter().enumerate() {
            let mut vs = variants_of(tok, rules);
            if let Some(lex) = vocabulary {
                vs.retain(|v| !lex.contains(v));
            }
            if !vs.is_empty() {
                eligible.push(((s, t), vs));
            }
        }
    }
    let amount = (rate * eligible.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, eligible.len(), amount).into_vec();
    picked.sort_unstable();

    let mut typed = sentences.to_vec();
    let mut positions = Vec::with_capacity(amount);
    for i in picked {
        let ((s, t), vs) = &eligible[i];
        typed[*s][*t] = vs[rng.random_range(0..vs.len())].clone();
        positions.push((*s, *t));
    }
    Ok(Injected {
        typed,
        positions,
        eligible: eligible.len(),
    })
}
