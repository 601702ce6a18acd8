//! Disambiguation engine for texting in abugida-script languages.
//!
//! Two input methods share one mechanism: every vocabulary word is mapped
//! through a language ruleset onto a shorter representation, and a trie over
//! those representations shares rank indices with the vocabulary trie.
//!
//! * native ambiguous input: one key per group of sibling characters;
//! * romanized input: spelling variants collapse onto one base form.

pub mod engine;
pub mod evalkit;
pub mod lexicon;
pub mod lm;
pub mod rulekit;
