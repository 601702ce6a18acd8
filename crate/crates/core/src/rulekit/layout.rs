use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::RuleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    #[default]
    Consonant,
    Vowel,
    Modifier,
}

/// One ambiguous key: a group of sibling characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Key {
    pub kind: KeyKind,
    /// Members in file order (phonetic order for consonant keys).
    pub members: Vec<char>,
    pub representative: char,
}

#[derive(Serialize, Deserialize)]
struct KeyRecord {
    #[serde(default)]
    kind: KeyKind,
    members: Vec<String>,
    representative: String,
}

#[derive(Serialize, Deserialize)]
struct LayoutRecord {
    language: String,
    keys: Vec<KeyRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    views: Vec<Vec<String>>,
}

/// Partition of a script's typeable characters into ambiguous keys.
#[derive(Debug, Clone)]
pub struct KeyLayout {
    pub language: String,
    pub keys: Vec<Key>,
    /// Views of the conventional (one character per key) layout. Empty when
    /// the layout file does not describe any.
    pub views: Vec<Vec<char>>,
    key_of: HashMap<char, usize>,
    view_of: HashMap<char, usize>,
    source: String,
}

fn single_char(s: &str, what: &str) -> Result<char, RuleError> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(RuleError::Layout(format!("{what} {s:?} is not a single codepoint"))),
    }
}

impl KeyLayout {
    /// Builds and validates a layout. The representative of every key must
    /// be its least codepoint and no character may sit on two keys.
    pub fn new(language: impl Into<String>, keys: Vec<Key>, views: Vec<Vec<char>>) -> Result<Self, RuleError> {
        let mut key_of = HashMap::new();
        for (i, key) in keys.iter().enumerate() {
            let min = key
                .members
                .iter()
                .copied()
                .min()
                .ok_or_else(|| RuleError::Layout(format!("key {i} has no members")))?;
            if key.representative != min {
                return Err(RuleError::Layout(format!(
                    "key {i}: representative {:?} is not the least codepoint {:?}",
                    key.representative, min
                )));
            }
            for &m in &key.members {
                if key_of.insert(m, i).is_some() {
                    return Err(RuleError::Layout(format!(
                        "character {m:?} appears on more than one key"
                    )));
                }
            }
        }
        let mut view_of = HashMap::new();
        for (v, view) in views.iter().enumerate() {
            for &c in view {
                if view_of.insert(c, v).is_some() {
                    return Err(RuleError::Layout(format!(
                        "character {c:?} appears in more than one view"
                    )));
                }
            }
        }
        let mut layout = KeyLayout {
            language: language.into(),
            keys,
            views,
            key_of,
            view_of,
            source: String::new(),
        };
        layout.source = layout.to_json();
        Ok(layout)
    }

    pub fn from_json(src: &str) -> Result<Self, RuleError> {
        let rec: LayoutRecord = serde_json::from_str(src).map_err(|e| RuleError::Layout(e.to_string()))?;
        let mut keys = Vec::with_capacity(rec.keys.len());
        for k in rec.keys {
            let members = k
                .members
                .iter()
                .map(|m| single_char(m, "member"))
                .collect::<Result<Vec<_>, _>>()?;
            keys.push(Key {
                kind: k.kind,
                members,
                representative: single_char(&k.representative, "representative")?,
            });
        }
        let views = rec
            .views
            .iter()
            .map(|v| v.iter().map(|c| single_char(c, "view member")).collect())
            .collect::<Result<Vec<Vec<char>>, _>>()?;
        let mut layout = KeyLayout::new(rec.language, keys, views)?;
        layout.source = src.to_string();
        Ok(layout)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, RuleError> {
        let src = std::fs::read_to_string(path).map_err(|e| RuleError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&src)
    }

    /// The layout exactly as it was loaded (or as it would be written).
    pub fn source_json(&self) -> &str {
        &self.source
    }

    pub fn to_json(&self) -> String {
        let rec = LayoutRecord {
            language: self.language.clone(),
            keys: self
                .keys
                .iter()
                .map(|k| KeyRecord {
                    kind: k.kind,
                    members: k.members.iter().map(|c| c.to_string()).collect(),
                    representative: k.representative.to_string(),
                })
                .collect(),
            views: self
                .views
                .iter()
                .map(|v| v.iter().map(|c| c.to_string()).collect())
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&rec).expect("layout serializes");
        s.push('\n');
        s
    }

    pub fn key_index(&self, c: char) -> Option<usize> {
        self.key_of.get(&c).copied()
    }

    pub fn representative_of(&self, c: char) -> Option<char> {
        self.key_index(c).map(|i| self.keys[i].representative)
    }

    pub fn is_representative(&self, c: char) -> bool {
        self.representative_of(c) == Some(c)
    }

    pub fn is_typeable(&self, c: char) -> bool {
        self.key_of.contains_key(&c)
    }

    /// Conventional-layout view holding `c`, if views are described.
    pub fn view_of(&self, c: char) -> Option<usize> {
        self.view_of.get(&c).copied()
    }

    pub fn typeable_chars(&self) -> impl Iterator<Item = char> + '_ {
        self.keys.iter().flat_map(|k| k.members.iter().copied())
    }

    /// A layout with one key per typeable character of `self`, keeping views.
    pub fn identity(&self) -> KeyLayout {
        let keys = self
            .keys
            .iter()
            .flat_map(|k| {
                k.members.iter().map(move |&m| Key {
                    kind: k.kind,
                    members: vec![m],
                    representative: m,
                })
            })
            .collect();
        KeyLayout::new(self.language.clone(), keys, self.views.clone()).expect("identity of a valid layout is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulekit::builtin;

    #[test]
    fn bundled_layouts_validate() {
        for id in ["hi", "bn", "th"] {
            let layout = builtin::layout(id).unwrap().unwrap();
            assert_eq!(layout.language, id);
            assert!(layout.keys.len() >= 8);
            for c in layout.typeable_chars() {
                assert!(layout.view_of(c).is_some(), "{c} has no view in {id}");
            }
        }
    }

    #[test]
    fn hindi_seven_consonant_keys() {
        let layout = builtin::layout("hi").unwrap().unwrap();
        let consonants: Vec<_> = layout.keys.iter().filter(|k| k.kind == KeyKind::Consonant).collect();
        assert_eq!(consonants.len(), 7);
        let total: usize = consonants.iter().map(|k| k.members.len()).sum();
        assert_eq!(total, 33);
        assert_eq!(layout.representative_of('घ'), Some('क'));
        assert_eq!(layout.representative_of('ि'), Some('अ'));
    }

    #[test]
    fn rejects_wrong_representative() {
        let src = r#"{"language":"x","keys":[{"members":["b","a"],"representative":"b"}]}"#;
        assert!(matches!(KeyLayout::from_json(src), Err(RuleError::Layout(_))));
    }

    #[test]
    fn rejects_overlapping_keys() {
        let src = r#"{"language":"x","keys":[{"members":["a","b"],"representative":"a"},{"members":["b"],"representative":"b"}]}"#;
        assert!(KeyLayout::from_json(src).is_err());
    }

    #[test]
    fn source_is_kept_verbatim() {
        let layout = KeyLayout::from_json(builtin::HINDI_LAYOUT).unwrap();
        assert_eq!(layout.source_json(), builtin::HINDI_LAYOUT);
    }
}
