use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use super::{KeyLayout, RuleError};

/// Where a rule may match inside a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Anchor {
    None,
    WordStart,
    WordEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleSetKind {
    NativeSibling,
    RomanVariant,
}

/// `variant ≃ canonical`: two spellings that must share one representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceRule {
    pub variant: String,
    pub canonical: String,
    pub anchor: Anchor,
}

impl EquivalenceRule {
    fn decorate(&self, s: &str) -> String {
        match self.anchor {
            Anchor::None => s.to_string(),
            Anchor::WordStart => format!("<{s}"),
            Anchor::WordEnd => format!("{s}>"),
        }
    }
}

impl fmt::Display for EquivalenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}",
            self.decorate(&self.variant),
            self.decorate(&self.canonical)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub pattern: Vec<char>,
    pub replacement: String,
    pub anchor: Anchor,
}

impl RewriteRule {
    fn priority(&self) -> (Reverse<usize>, bool, &[char], Anchor) {
        (
            Reverse(self.pattern.len()),
            self.anchor == Anchor::None,
            &self.pattern,
            self.anchor,
        )
    }
}

/// An ordered, validated set of rewrite rules for one language.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub language: String,
    pub kind: RuleSetKind,
    equivalences: Vec<EquivalenceRule>,
    rules: Vec<RewriteRule>,
    by_first: HashMap<char, Vec<usize>>,
}

impl RuleSet {
    fn from_rules(
        language: String,
        kind: RuleSetKind,
        equivalences: Vec<EquivalenceRule>,
        mut rules: Vec<RewriteRule>,
    ) -> Result<Self, RuleError> {
        rules.sort_by(|a, b| a.priority().cmp(&b.priority()));

        let mut seen: HashMap<(&[char], Anchor), &str> = HashMap::new();
        for r in &rules {
            if let Some(prev) = seen.insert((&r.pattern, r.anchor), &r.replacement) {
                if prev != r.replacement {
                    let p: String = r.pattern.iter().collect();
                    return Err(RuleError::Validation(format!(
                        "pattern {p:?} rewrites to both {prev:?} and {:?}",
                        r.replacement
                    )));
                }
            }
        }
        rules.dedup();

        let pattern_alphabet: BTreeSet<char> = rules.iter().flat_map(|r| r.pattern.iter().copied()).collect();
        for r in &rules {
            let p: String = r.pattern.iter().collect();
            if p == r.replacement && r.pattern.len() == 1 {
                // a representative mapping onto itself
                continue;
            }
            if let Some(c) = r.replacement.chars().find(|c| {
                pattern_alphabet.contains(c) && !(kind == RuleSetKind::NativeSibling && is_fixed_point(&rules, *c))
            }) {
                return Err(RuleError::Validation(format!(
                    "replacement {:?} of {p:?} shares {c:?} with the pattern alphabet",
                    r.replacement
                )));
            }
        }

        let mut by_first: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_first.entry(r.pattern[0]).or_default().push(i);
        }
        Ok(RuleSet {
            language,
            kind,
            equivalences,
            rules,
            by_first,
        })
    }

    /// Rewrite rules in application priority order.
    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    /// Source equivalences (empty for native rulesets).
    pub fn equivalences(&self) -> &[EquivalenceRule] {
        &self.equivalences
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The ruleset in its file format. Only meaningful for romanized rulesets.
    pub fn to_rules_text(&self) -> String {
        let mut out = String::new();
        for e in &self.equivalences {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub fn transform(&self, word: &str) -> String {
        transform(word, self)
    }
}

fn is_fixed_point(rules: &[RewriteRule], c: char) -> bool {
    rules
        .iter()
        .any(|r| r.pattern == [c] && r.replacement.chars().eq(std::iter::once(c)))
}

fn strip_anchor(field: &str) -> (Anchor, &str) {
    if let Some(rest) = field.strip_prefix('<') {
        (Anchor::WordStart, rest)
    } else if let Some(rest) = field.strip_suffix('>') {
        (Anchor::WordEnd, rest)
    } else {
        (Anchor::None, field)
    }
}

fn check_side(s: &str, line: usize) -> Result<(), RuleError> {
    if s.is_empty() {
        return Err(RuleError::Validation(format!("line {line}: empty rule side")));
    }
    if let Some(c) = s
        .chars()
        .find(|c| c.is_uppercase() || c.is_whitespace() || *c == '<' || *c == '>')
    {
        return Err(RuleError::Validation(format!(
            "line {line}: {s:?} contains {c:?}; rule sides must be lowercase"
        )));
    }
    Ok(())
}

/// Parses a romanized ruleset (`P<TAB>Q` per line, `#` comments).
pub fn parse_ruleset(language: &str, src: &str) -> Result<RuleSet, RuleError> {
    let mut equivalences = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (p, q) = match (fields.next(), fields.next(), fields.next()) {
            (Some(p), Some(q), None) => (p.trim(), q.trim()),
            _ => {
                return Err(RuleError::Parse {
                    line: line_no,
                    msg: format!("expected P<TAB>Q, got {line:?}"),
                })
            }
        };
        let (pa, p) = strip_anchor(p);
        let (qa, q) = strip_anchor(q);
        if pa != qa {
            return Err(RuleError::Validation(format!(
                "line {line_no}: P and Q carry different anchors"
            )));
        }
        check_side(p, line_no)?;
        check_side(q, line_no)?;
        if p == q {
            return Err(RuleError::Validation(format!("line {line_no}: P and Q are identical")));
        }
        equivalences.push(EquivalenceRule {
            variant: p.to_string(),
            canonical: q.to_string(),
            anchor: pa,
        });
    }
    ruleset_from_equivalences(language, equivalences)
}

/// Builds `P → upper(Q)` and `Q → upper(Q)` for every equivalence.
pub fn ruleset_from_equivalences(language: &str, equivalences: Vec<EquivalenceRule>) -> Result<RuleSet, RuleError> {
    let mut rules = Vec::with_capacity(equivalences.len() * 2);
    for e in &equivalences {
        let replacement = e.canonical.to_uppercase();
        for side in [&e.variant, &e.canonical] {
            rules.push(RewriteRule {
                pattern: side.chars().collect(),
                replacement: replacement.clone(),
                anchor: e.anchor,
            });
        }
    }
    RuleSet::from_rules(language.to_string(), RuleSetKind::RomanVariant, equivalences, rules)
}

pub fn load_ruleset(path: &Path) -> Result<RuleSet, RuleError> {
    let src = std::fs::read_to_string(path).map_err(|e| RuleError::Io(format!("{}: {e}", path.display())))?;
    let language = path.file_stem().and_then(|s| s.to_str()).unwrap_or("unknown");
    parse_ruleset(language, &src)
}

/// One single-codepoint rule per layout member: member → representative.
pub fn derive_native_ruleset(layout: &KeyLayout) -> RuleSet {
    let rules = layout
        .keys
        .iter()
        .flat_map(|k| {
            k.members.iter().map(move |&m| RewriteRule {
                pattern: vec![m],
                replacement: k.representative.to_string(),
                anchor: Anchor::None,
            })
        })
        .collect();
    RuleSet::from_rules(layout.language.clone(), RuleSetKind::NativeSibling, Vec::new(), rules)
        .expect("a validated layout yields a valid ruleset")
}

/// A ruleset under which transform is the identity.
pub fn identity_ruleset(language: &str) -> RuleSet {
    RuleSet::from_rules(language.to_string(), RuleSetKind::NativeSibling, Vec::new(), Vec::new())
        .expect("empty ruleset is valid")
}

/// Walks `chars` left to right, calling `f(start, len, rule)` for every
/// rule application and `f(start, 1, None)` for every copied character.
fn scan<'r>(chars: &[char], rules: &'r RuleSet, mut f: impl FnMut(usize, usize, Option<&'r RewriteRule>)) {
    let n = chars.len();
    let mut i = 0;
    'scan: while i < n {
        if let Some(candidates) = rules.by_first.get(&chars[i]) {
            for &ri in candidates {
                let r = &rules.rules[ri];
                let len = r.pattern.len();
                if i + len > n || chars[i..i + len] != r.pattern[..] {
                    continue;
                }
                let anchored_ok = match r.anchor {
                    Anchor::None => true,
                    Anchor::WordStart => i == 0,
                    Anchor::WordEnd => i + len == n,
                };
                if anchored_ok {
                    f(i, len, Some(r));
                    i += len;
                    continue 'scan;
                }
            }
        }
        f(i, 1, None);
        i += 1;
    }
}

/// Left-to-right, longest-match-first rewrite. Anchored rules only match at
/// the word boundary they name; consumed spans are never rescanned.
pub fn transform(word: &str, rules: &RuleSet) -> String {
    if rules.rules.is_empty() {
        return word.to_string();
    }
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::with_capacity(word.len());
    scan(&chars, rules, |i, _, r| match r {
        Some(r) => out.push_str(&r.replacement),
        None => out.push(chars[i]),
    });
    out
}

/// Character spans `(start, end)` that the rewrite consumes as one rule
/// application.
pub fn rule_spans(word: &str, rules: &RuleSet) -> Vec<(usize, usize)> {
    let chars: Vec<char> = word.chars().collect();
    let mut out = Vec::new();
    scan(&chars, rules, |i, len, r| {
        if r.is_some() {
            out.push((i, i + len));
        }
    });
    out
}

/// Every spelling reachable from `word` by swapping one side of an
/// equivalence for the other, where both the original span and its
/// replacement are consumed by a single rule application. Spans that the
/// rewrite splits differently (the `sh` of `shh` seen as `s` + `hh`, say)
/// belong to a different word and are skipped.
pub fn single_substitutions(word: &str, rules: &RuleSet) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let spans = rule_spans(word, rules);
    let mut out = Vec::new();
    for &(a, b) in &spans {
        let piece: String = chars[a..b].iter().collect();
        for e in &rules.equivalences {
            let anchored_ok = match e.anchor {
                Anchor::None => true,
                Anchor::WordStart => a == 0,
                Anchor::WordEnd => b == n,
            };
            if !anchored_ok {
                continue;
            }
            let other = if piece == e.variant {
                &e.canonical
            } else if piece == e.canonical {
                &e.variant
            } else {
                continue;
            };
            let prefix: String = chars[..a].iter().collect();
            let suffix: String = chars[b..].iter().collect();
            let w = format!("{prefix}{other}{suffix}");
            let end = a + other.chars().count();
            if rule_spans(&w, rules).contains(&(a, end)) && !out.contains(&w) {
                out.push(w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulekit::builtin;
    use proptest::prelude::*;

    fn hinglish() -> RuleSet {
        builtin::ruleset("hinglish").unwrap().unwrap()
    }

    fn tenglish() -> RuleSet {
        builtin::ruleset("tenglish").unwrap().unwrap()
    }

    fn has_rule(rs: &RuleSet, pat: &str, rep: &str, anchor: Anchor) -> bool {
        rs.rules()
            .iter()
            .any(|r| r.pattern.iter().collect::<String>() == pat && r.replacement == rep && r.anchor == anchor)
    }

    #[test]
    fn hinglish_rules_expand_both_sides() {
        let rs = hinglish();
        assert_eq!(rs.kind, RuleSetKind::RomanVariant);
        assert!(has_rule(&rs, "aa", "A", Anchor::None));
        assert!(has_rule(&rs, "a", "A", Anchor::None));
        assert!(has_rule(&rs, "sh", "S", Anchor::None));
        assert!(has_rule(&rs, "s", "S", Anchor::None));
        assert!(has_rule(&rs, "ain", "AI", Anchor::WordEnd));
        assert!(has_rule(&rs, "ai", "AI", Anchor::WordEnd));
        assert_eq!(rs.equivalences().len(), 14);
    }

    #[test]
    fn rules_are_longest_first() {
        let rs = tenglish();
        let lens: Vec<usize> = rs.rules().iter().map(|r| r.pattern.len()).collect();
        assert!(lens.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn empty_file_is_identity() {
        let rs = parse_ruleset("x", "# nothing here\n\n").unwrap();
        assert!(rs.is_empty());
        assert_eq!(transform("kaafi", &rs), "kaafi");
    }

    #[test]
    fn uppercase_canonical_is_rejected() {
        let err = parse_ruleset("x", "aa\tA\n").unwrap_err();
        assert!(matches!(err, RuleError::Validation(_)));
    }

    #[test]
    fn malformed_line_is_parse_error() {
        let err = parse_ruleset("x", "aa a\n").unwrap_err();
        assert_eq!(
            err,
            RuleError::Parse {
                line: 1,
                msg: "expected P<TAB>Q, got \"aa a\"".into()
            }
        );
    }

    #[test]
    fn conflicting_replacement_is_rejected() {
        // "s" would rewrite to both S and Z
        let err = parse_ruleset("x", "sh\ts\ns\tz\n").unwrap_err();
        assert!(matches!(err, RuleError::Validation(_)), "{err:?}");
    }

    #[test]
    fn mismatched_anchors_are_rejected() {
        assert!(parse_ruleset("x", "ain>\tai\n").is_err());
    }

    #[test]
    fn round_trips_through_text() {
        let rs = tenglish();
        let again = parse_ruleset("tenglish", &rs.to_rules_text()).unwrap();
        assert_eq!(again.rules(), rs.rules());
    }

    #[test]
    fn golden_romanized_transforms() {
        let hi = hinglish();
        assert_eq!(transform("rashtriya", &hi), "rAStrIyA");
        assert_eq!(transform("pradhanmantree", &hi), transform("pradhaanmantri", &hi));
        assert_eq!(transform("hain", &hi), transform("hai", &hi));
        let kaafi = transform("kaafi", &hi);
        assert_eq!(kaafi, transform("kafi", &hi));
        assert_eq!(kaafi, transform("kafee", &hi));
        assert_eq!(kaafi, "kAFI");

        let te = tenglish();
        assert_eq!(transform("ekkada", &te), transform("yekkada", &te));
        assert_eq!(transform("apurva", &te), "ApUrVA");
        assert_eq!(transform("apoorvaa", &te), "ApUrVA");

        let bn = builtin::ruleset("benglish").unwrap().unwrap();
        assert_eq!(transform("debota", &bn), transform("debotaa", &bn));
    }

    #[test]
    fn anchored_rule_wins_at_word_end_only() {
        let hi = hinglish();
        assert_eq!(transform("hain", &hi), "HAI");
        // mid-word "ain" is not the end-anchored rule
        assert_eq!(transform("bainka", &hi), "bAInkA");
    }

    #[test]
    fn substitutions_follow_the_rewrite_segmentation() {
        let h = hinglish();
        let subs = single_substitutions("kafi", &h);
        assert!(subs.contains(&"kaafi".to_string()));
        assert!(subs.contains(&"kaphi".to_string()));
        assert!(subs.contains(&"kafee".to_string()));
        // "shh" is read as sh + h, so its "hh" is not a unit
        assert_eq!(rule_spans("shh", &h), vec![(0, 2), (2, 3)]);
        assert!(!single_substitutions("shh", &h).contains(&"sh".to_string()));
    }

    proptest! {
        #[test]
        fn variant_merge(word in "[a-z]{0,12}", which in 0usize..3) {
            let rs = [hinglish(), builtin::ruleset("benglish").unwrap().unwrap(), tenglish()];
            let rules = &rs[which];
            let base = rules.transform(&word);
            for w in single_substitutions(&word, rules) {
                prop_assert_eq!(rules.transform(&w), base.clone(), "{} vs {}", word, w);
            }
        }

        #[test]
        fn idempotent(word in "[a-zA-Z]{0,12}", which in 0usize..3) {
            let rs = [hinglish(), builtin::ruleset("benglish").unwrap().unwrap(), tenglish()];
            let once = rs[which].transform(&word);
            prop_assert_eq!(rs[which].transform(&once), once);
        }
    }

    #[test]
    fn empty_word() {
        assert_eq!(transform("", &hinglish()), "");
    }

    #[test]
    fn native_ruleset_from_hindi_layout() {
        let layout = builtin::layout("hi").unwrap().unwrap();
        let rs = derive_native_ruleset(&layout);
        assert_eq!(rs.kind, RuleSetKind::NativeSibling);
        for (m, rep) in [('ख', 'क'), ('ग', 'क'), ('घ', 'क'), ('ङ', 'क'), ('क', 'क')] {
            assert!(has_rule(&rs, &m.to_string(), &rep.to_string(), Anchor::None));
        }
        for c in ['आ', 'ा', 'ि', '्', 'ृ', 'औ'] {
            assert_eq!(transform(&c.to_string(), &rs), "अ");
        }
        assert_eq!(transform("घर", &rs), "कय");
        assert_eq!(transform("कल", &rs), "कय");
        assert_eq!(transform("वास्तविक", &rs), "यअशअतयअक");
        // key sequence for सरकार
        assert_eq!(transform("सरकार", &rs), "शयकअय");
    }

    #[test]
    fn native_bengali_groups() {
        let layout = builtin::layout("bn").unwrap().unwrap();
        let rs = derive_native_ruleset(&layout);
        assert_eq!(transform("কনে", &rs), "কতঅ");
        assert_eq!(transform("গদা", &rs), "কতঅ");
        assert_eq!(transform("বিদেশ", &rs), "পঅতঅশ");
    }

    #[test]
    fn one_char_per_key_is_identity() {
        let layout = builtin::layout("hi").unwrap().unwrap().identity();
        let rs = derive_native_ruleset(&layout);
        assert!(rs
            .rules()
            .iter()
            .all(|r| r.replacement == r.pattern.iter().collect::<String>()));
        assert_eq!(transform("घर", &rs), "घर");
    }

    #[test]
    fn every_bundled_ruleset_parses() {
        for id in ["hinglish", "benglish", "marathinglish", "tenglish", "thai-roman"] {
            let rs = builtin::ruleset(id).unwrap().unwrap();
            assert!(!rs.is_empty(), "{id}");
        }
        let th = builtin::ruleset("thai-roman").unwrap().unwrap();
        assert_eq!(transform("chxb", &th), transform("chhp", &th));
        assert_eq!(transform("pad", &th), transform("phat", &th));
    }
}
