//! Rewrite rules and key layouts.
//!
//! A [`RuleSet`] maps a word onto its ambiguous (native sibling) or base
//! (romanized variant) representation via [`transform`]. Native rulesets are
//! derived from a [`KeyLayout`]; romanized ones are loaded from equivalence
//! tables in the `P<TAB>Q` format.

mod layout;
mod rules;

pub use layout::{Key, KeyKind, KeyLayout};
pub use rules::{
    derive_native_ruleset, identity_ruleset, load_ruleset, parse_ruleset, rule_spans, single_substitutions, transform,
    Anchor, EquivalenceRule, RewriteRule, RuleSet, RuleSetKind,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid rule: {0}")]
    Validation(String),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Rule and layout files bundled with the crate.
pub mod builtin {
    use super::{KeyLayout, RuleError, RuleSet};

    pub const HINGLISH: &str = include_str!("../../data/hinglish.rules");
    pub const BENGLISH: &str = include_str!("../../data/benglish.rules");
    pub const MARATHINGLISH: &str = include_str!("../../data/marathinglish.rules");
    pub const TENGLISH: &str = include_str!("../../data/tenglish.rules");
    pub const THAI_ROMAN: &str = include_str!("../../data/thai-roman.rules");

    pub const HINDI_LAYOUT: &str = include_str!("../../data/hi.json");
    pub const BENGALI_LAYOUT: &str = include_str!("../../data/bn.json");
    pub const THAI_LAYOUT: &str = include_str!("../../data/th.json");

    /// Looks up a bundled romanized ruleset by language id.
    pub fn ruleset(language: &str) -> Option<Result<RuleSet, RuleError>> {
        let src = match language {
            "hinglish" | "hi-latn" => HINGLISH,
            "benglish" | "bn-latn" => BENGLISH,
            "marathinglish" | "mr-latn" => MARATHINGLISH,
            "tenglish" | "te-latn" => TENGLISH,
            "thai-roman" | "th-latn" => THAI_ROMAN,
            _ => return None,
        };
        Some(super::parse_ruleset(language, src))
    }

    /// Looks up a bundled native layout by script/language id.
    pub fn layout(language: &str) -> Option<Result<KeyLayout, RuleError>> {
        let src = match language {
            "hi" => HINDI_LAYOUT,
            "bn" => BENGALI_LAYOUT,
            "th" => THAI_LAYOUT,
            _ => return None,
        };
        Some(KeyLayout::from_json(src))
    }
}
