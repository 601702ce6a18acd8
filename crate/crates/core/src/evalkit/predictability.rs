use std::collections::HashMap;

use serde::Serialize;

use crate::lexicon::Lexicon;
use crate::rulekit::{KeyKind, KeyLayout};

/// A candidate key arrangement: a partition of the typeable characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupingSpec {
    pub keys: Vec<(KeyKind, Vec<char>)>,
}

impl GroupingSpec {
    pub fn from_layout(layout: &KeyLayout) -> GroupingSpec {
        GroupingSpec {
            keys: layout.keys.iter().map(|k| (k.kind, k.members.clone())).collect(),
        }
    }

    /// One character per key.
    pub fn identity(layout: &KeyLayout) -> GroupingSpec {
        GroupingSpec {
            keys: layout
                .keys
                .iter()
                .flat_map(|k| k.members.iter().map(move |&m| (k.kind, vec![m])))
                .collect(),
        }
    }

    /// Character to representative (least member of its key).
    pub fn representative_map(&self) -> HashMap<char, char> {
        let mut map = HashMap::new();
        for (_, members) in &self.keys {
            let rep = members.iter().copied().min().unwrap_or('\0');
            for &m in members {
                map.insert(m, rep);
            }
        }
        map
    }

    pub fn consonant_keys(&self) -> usize {
        self.keys.iter().filter(|(k, _)| *k == KeyKind::Consonant).count()
    }

    pub fn consonants_per_key(&self) -> f64 {
        let keys = self.consonant_keys();
        if keys == 0 {
            return 0.0;
        }
        let members: usize = self
            .keys
            .iter()
            .filter(|(k, _)| *k == KeyKind::Consonant)
            .map(|(_, m)| m.len())
            .sum();
        members as f64 / keys as f64
    }
}

/// Percentage of lexicon words that rank within the top 3 (by frequency)
/// among all words sharing their key sequence. Characters outside the
/// grouping stand for themselves.
pub fn layout_predictability(lex: &Lexicon, grouping: &GroupingSpec) -> f64 {
    if lex.is_empty() {
        return 100.0;
    }
    let map = grouping.representative_map();
    let mut seen: HashMap<String, u32> = HashMap::with_capacity(lex.len());
    let mut predictable = 0usize;
    // lexicon order is frequency order, so the running count per sequence
    // is each word's position inside its collision group
    for e in lex.entries() {
        let key: String = e.word.chars().map(|c| *map.get(&c).unwrap_or(&c)).collect();
        let pos = seen.entry(key).or_insert(0);
        if *pos < 3 {
            predictable += 1;
        }
        *pos += 1;
    }
    predictable as f64 / lex.len() as f64 * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub consonants_per_key: f64,
    pub consonant_keys: usize,
    pub predictability: f64,
    pub grouping: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Index into `points`.
    pub elbow: Option<usize>,
}

/// Interior index with the largest absolute second difference; the first
/// one wins ties.
pub fn elbow(ys: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 1..ys.len().saturating_sub(1) {
        let d = (ys[i - 1] - 2.0 * ys[i] + ys[i + 1]).abs();
        if best.is_none_or(|(_, b)| d > b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

fn point(lex: &Lexicon, spec: &GroupingSpec) -> SweepPoint {
    SweepPoint {
        consonants_per_key: spec.consonants_per_key(),
        consonant_keys: spec.consonant_keys(),
        predictability: layout_predictability(lex, spec),
        grouping: spec.keys.iter().map(|(_, m)| m.iter().collect()).collect(),
    }
}

/// Coarsens the layout's consonants step by step.
///
/// The first point is the identity grouping. Every later point puts vowels
/// and modifiers on their layout keys and merges one adjacent pair of
/// consonant groups (phonetic order from the layout): pairs inside one
/// phonetic class first, then the smallest combined size, then the leftmost.
/// Groups never exceed `max_per_key` consonants.
pub fn sweep_groupings(lex: &Lexicon, layout: &KeyLayout, max_per_key: usize) -> Sweep {
    let mut points = vec![point(lex, &GroupingSpec::identity(layout))];

    let fixed: Vec<(KeyKind, Vec<char>)> = layout
        .keys
        .iter()
        .filter(|k| k.kind != KeyKind::Consonant)
        .map(|k| (k.kind, k.members.clone()))
        .collect();
    // (phonetic class if uniform, members)
    let mut groups: Vec<(Option<usize>, Vec<char>)> = layout
        .keys
        .iter()
        .enumerate()
        .filter(|(_, k)| k.kind == KeyKind::Consonant)
        .flat_map(|(i, k)| k.members.iter().map(move |&m| (Some(i), vec![m])))
        .collect();

    loop {
        let best = (0..groups.len().saturating_sub(1))
            .filter(|&i| groups[i].1.len() + groups[i + 1].1.len() <= max_per_key)
            .min_by_key(|&i| {
                let same = groups[i].0.is_some() && groups[i].0 == groups[i + 1].0;
                (!same, groups[i].1.len() + groups[i + 1].1.len(), i)
            });
        let Some(i) = best else { break };
        let (class_b, members_b) = groups.remove(i + 1);
        let (class_a, members_a) = &mut groups[i];
        if *class_a != class_b {
            *class_a = None;
        }
        members_a.extend(members_b);

        let mut keys = fixed.clone();
        keys.extend(groups.iter().map(|(_, m)| (KeyKind::Consonant, m.clone())));
        points.push(point(lex, &GroupingSpec { keys }));
    }

    let ys: Vec<f64> = points.iter().map(|p| p.predictability).collect();
    Sweep {
        elbow: elbow(&ys),
        points,
    }
}
