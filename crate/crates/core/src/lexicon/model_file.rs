//! Binary model file.
//!
//! Layout: the magic `EDAT`, a u16 version, the language id, a script-kind
//! byte, then tagged sections (`[tag; 4]`, u32 length, payload). Sections may
//! appear in any order; unknown tags are skipped.

use std::collections::HashMap;
use std::path::Path;

use crate::lm::NGramModel;
use crate::rulekit::{derive_native_ruleset, parse_ruleset, KeyLayout, RuleSet};

use super::codec::{write_str, write_u16, write_u32, Cursor};
use super::{build_parallel_tries, LexEntry, Lexicon, ModelError, ParallelTrieSet, Trie};

pub const MAGIC: &[u8; 4] = b"EDAT";
pub const MODEL_VERSION: u16 = 1;

const TAG_LEXICON: &[u8; 4] = b"LEXI";
const TAG_VOCAB: &[u8; 4] = b"VOCT";
const TAG_SHADOW: &[u8; 4] = b"SHDT";
const TAG_NGRAM: &[u8; 4] = b"NGRM";
const TAG_RULES: &[u8; 4] = b"RULE";

/// Script-specific input rules: a key layout for native scripts, an
/// equivalence table for romanized input.
#[derive(Debug, Clone)]
pub enum ScriptRules {
    Native(KeyLayout),
    Roman(RuleSet),
}

impl ScriptRules {
    fn kind_byte(&self) -> u8 {
        match self {
            ScriptRules::Native(_) => 0,
            ScriptRules::Roman(_) => 1,
        }
    }

    pub fn ruleset(&self) -> RuleSet {
        match self {
            ScriptRules::Native(l) => derive_native_ruleset(l),
            ScriptRules::Roman(r) => r.clone(),
        }
    }

    pub fn layout(&self) -> Option<&KeyLayout> {
        match self {
            ScriptRules::Native(l) => Some(l),
            ScriptRules::Roman(_) => None,
        }
    }
}

/// Everything the engine needs for one language.
#[derive(Debug, Clone)]
pub struct Model {
    pub language: String,
    pub lexicon: Lexicon,
    pub tries: ParallelTrieSet,
    pub ngram: NGramModel,
    pub script: ScriptRules,
    ruleset: RuleSet,
}

impl Model {
    pub fn new(language: impl Into<String>, lexicon: Lexicon, ngram: NGramModel, script: ScriptRules) -> Model {
        let ruleset = script.ruleset();
        let tries = build_parallel_tries(&lexicon, &ruleset);
        Model {
            language: language.into(),
            lexicon,
            tries,
            ngram,
            script,
            ruleset,
        }
    }

    /// The rewrite rules behind the shadow trie.
    pub fn ruleset(&self) -> &RuleSet {
        &self.ruleset
    }

    pub fn is_native(&self) -> bool {
        matches!(self.script, ScriptRules::Native(_))
    }
}

fn encode_lexicon(lex: &Lexicon) -> Vec<u8> {
    let mut out = Vec::new();
    write_u32(&mut out, lex.len() as u32);
    for e in lex.entries() {
        write_str(&mut out, &e.word);
        write_u32(&mut out, e.frequency);
    }
    out
}

fn decode_lexicon(bytes: &[u8]) -> Result<Lexicon, ModelError> {
    let mut cur = Cursor::new(bytes, "LEXICON");
    let n = cur.u32()? as usize;
    // each entry needs at least 8 bytes, so a bogus count fails fast
    if n > bytes.len() / 8 {
        return Err(cur.truncated());
    }
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let word = cur.str()?.to_string();
        let frequency = cur.u32()?;
        entries.push(LexEntry { word, frequency });
    }
    if !cur.is_at_end() {
        return Err(cur.corrupt("trailing bytes"));
    }
    Ok(Lexicon::from_sorted(entries))
}

fn push_section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    write_u32(out, payload.len() as u32);
    out.extend_from_slice(payload);
}

pub fn serialize_model(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    write_u16(&mut out, MODEL_VERSION);
    write_str(&mut out, &model.language);
    out.push(model.script.kind_byte());
    push_section(&mut out, TAG_LEXICON, &encode_lexicon(&model.lexicon));
    let rules = match &model.script {
        ScriptRules::Native(l) => l.source_json().to_string(),
        ScriptRules::Roman(r) => r.to_rules_text(),
    };
    push_section(&mut out, TAG_RULES, rules.as_bytes());
    push_section(&mut out, TAG_VOCAB, &model.tries.vocab.encode());
    push_section(&mut out, TAG_SHADOW, &model.tries.shadow.encode());
    push_section(&mut out, TAG_NGRAM, &model.ngram.encode());
    out
}

pub fn load_model(bytes: &[u8]) -> Result<Model, ModelError> {
    let mut cur = Cursor::new(bytes, "HEADER");
    if bytes.len() < 4 || cur.take(4)? != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = cur.u16()?;
    if version != MODEL_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let language = cur.str()?.to_string();
    let kind = cur.u8()?;

    let mut sections: HashMap<[u8; 4], &[u8]> = HashMap::new();
    while !cur.is_at_end() {
        let tag: [u8; 4] = cur.take(4)?.try_into().expect("4 bytes");
        let len = cur.u32()? as usize;
        let payload = cur.take(len)?;
        sections.insert(tag, payload);
    }
    let section =
        |tag: &[u8; 4], name: &'static str| sections.get(tag).copied().ok_or(ModelError::MissingSection(name));

    let lexicon = decode_lexicon(section(TAG_LEXICON, "LEXICON")?)?;
    let rules_src = std::str::from_utf8(section(TAG_RULES, "RULES")?).map_err(|_| ModelError::Corrupt {
        section: "RULES",
        msg: "invalid UTF-8".into(),
    })?;
    let rules_err = |e: crate::rulekit::RuleError| ModelError::Corrupt {
        section: "RULES",
        msg: e.to_string(),
    };
    let script = match kind {
        0 => ScriptRules::Native(KeyLayout::from_json(rules_src).map_err(rules_err)?),
        1 => ScriptRules::Roman(parse_ruleset(&language, rules_src).map_err(rules_err)?),
        _ => {
            return Err(ModelError::Corrupt {
                section: "HEADER",
                msg: format!("unknown script kind {kind}"),
            })
        }
    };
    let vocab = Trie::decode(section(TAG_VOCAB, "VOCAB_TRIE")?, "VOCAB_TRIE")?;
    let shadow = Trie::decode(section(TAG_SHADOW, "SHADOW_TRIE")?, "SHADOW_TRIE")?;
    let ngram = NGramModel::decode(section(TAG_NGRAM, "NGRAM")?, &lexicon)?;

    let n = lexicon.len() as u32;
    for (trie, name) in [(&vocab, "VOCAB_TRIE"), (&shadow, "SHADOW_TRIE")] {
        if trie.entries().iter().any(|(_, p)| p.iter().any(|&i| i >= n)) {
            return Err(ModelError::Corrupt {
                section: name,
                msg: "rank index out of range".into(),
            });
        }
    }
    let ruleset = script.ruleset();
    let tries = ParallelTrieSet::from_parts(vocab, shadow, &lexicon, &ruleset);
    Ok(Model {
        language,
        lexicon,
        tries,
        ngram,
        script,
        ruleset,
    })
}

pub fn write_model_file(model: &Model, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, serialize_model(model)).map_err(|e| ModelError::Io(e.to_string()))
}

pub fn read_model_file(path: &Path) -> Result<Model, ModelError> {
    let bytes = std::fs::read(path).map_err(|e| ModelError::Io(e.to_string()))?;
    load_model(&bytes)
}
