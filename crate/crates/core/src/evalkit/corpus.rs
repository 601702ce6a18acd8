//! Seeded synthetic desk corpus.
//!
//! Words are drawn from a Hindi-like phoneme model and rendered both in
//! Devanagari and in Latin letters. Every word type has a dominant Latin
//! spelling plus a few minority spellings that differ only along the
//! Hinglish equivalence table, so the romanized corpus carries real variant
//! noise. Type frequencies follow a Zipf law and each type prefers a small
//! set of successors, which gives the n-gram model something to learn.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;

use std::collections::HashSet;

use crate::rulekit::builtin;

struct Consonant {
    native: char,
    roman: &'static [&'static str],
    weight: f64,
}

const fn c(native: char, roman: &'static [&'static str], weight: f64) -> Consonant {
    Consonant { native, roman, weight }
}

const CONSONANTS: &[Consonant] = &[
    c('क', &["k"], 9.0),
    c('ख', &["kh"], 1.0),
    c('ग', &["g"], 3.0),
    c('घ', &["gh"], 0.5),
    c('ङ', &["n"], 0.1),
    c('च', &["ch"], 2.0),
    c('छ', &["chh"], 0.5),
    c('ज', &["j", "z"], 3.0),
    c('झ', &["jh"], 0.3),
    c('ञ', &["n"], 0.1),
    c('ट', &["t"], 2.0),
    c('ठ', &["th"], 0.3),
    c('ड', &["d"], 1.5),
    c('ढ', &["dh"], 0.2),
    c('ण', &["n"], 0.3),
    c('त', &["t"], 6.0),
    c('थ', &["th"], 1.0),
    c('द', &["d"], 4.0),
    c('ध', &["dh"], 1.0),
    c('न', &["n"], 7.0),
    c('प', &["p"], 4.0),
    c('फ', &["ph", "f"], 0.5),
    c('ब', &["b"], 3.0),
    c('भ', &["bh"], 1.5),
    c('म', &["m"], 6.0),
    c('य', &["y"], 3.0),
    c('र', &["r"], 9.0),
    c('ल', &["l"], 5.0),
    c('व', &["v", "w"], 3.0),
    c('श', &["sh", "s"], 1.5),
    c('ष', &["sh", "s"], 0.4),
    c('स', &["s"], 6.0),
    c('ह', &["h"], 5.0),
];

struct Vowel {
    independent: char,
    /// Dependent sign; `None` for the inherent vowel.
    sign: Option<char>,
    roman: &'static [&'static str],
    weight: f64,
}

const fn v(independent: char, sign: Option<char>, roman: &'static [&'static str], weight: f64) -> Vowel {
    Vowel {
        independent,
        sign,
        roman,
        weight,
    }
}

const VOWELS: &[Vowel] = &[
    v('अ', None, &["a"], 35.0),
    v('आ', Some('ा'), &["aa", "a"], 18.0),
    v('इ', Some('ि'), &["i"], 12.0),
    v('ई', Some('ी'), &["ee", "i", "ii"], 7.0),
    v('उ', Some('ु'), &["u"], 6.0),
    v('ऊ', Some('ू'), &["oo", "u", "uu"], 2.0),
    v('ए', Some('े'), &["e"], 9.0),
    v('ऐ', Some('ै'), &["ai"], 3.0),
    v('ओ', Some('ो'), &["o"], 5.0),
    v('औ', Some('ौ'), &["au"], 1.5),
    v('ऋ', Some('ृ'), &["ri"], 0.5),
];

const VIRAMA: char = '्';
const ANUSVARA: char = 'ं';
const CHANDRABINDU: char = 'ँ';

/// One generated word type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordType {
    pub native: String,
    /// Dominant spelling first, then minority spellings.
    pub roman: Vec<String>,
}

/// A generated vocabulary with Zipf frequencies and successor preferences.
pub struct DeskLanguage {
    pub types: Vec<WordType>,
    successors: Vec<[u32; 6]>,
    zipf: Zipf<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanguageConfig {
    pub seed: u64,
    pub types: usize,
    pub zipf_exponent: f64,
}

impl Default for LanguageConfig {
    fn default() -> Self {
        LanguageConfig {
            seed: 20_21,
            types: 300_000,
            zipf_exponent: 0.9,
        }
    }
}

/// Pieces of one syllable: onset consonants (indices) and vowel index.
struct Syllable {
    onset: Vec<usize>,
    vowel: usize,
    nasal: Option<char>,
}

fn spell(rng: &mut ChaCha8Rng, syllables: &[Syllable]) -> String {
    let pick = |rng: &mut ChaCha8Rng, options: &[&'static str]| options[rng.random_range(0..options.len())];
    let mut out = String::new();
    let last = syllables.len() - 1;
    for (k, s) in syllables.iter().enumerate() {
        for &o in &s.onset {
            out.push_str(pick(rng, CONSONANTS[o].roman));
        }
        let vowel = &VOWELS[s.vowel];
        // the inherent vowel is silent at the end of longer words
        let silent = vowel.sign.is_none() && k == last && last > 0 && !s.onset.is_empty() && s.nasal.is_none();
        if !silent {
            out.push_str(pick(rng, vowel.roman));
        }
        if s.nasal.is_some() {
            out.push('n');
        }
    }
    out
}

fn native_of(syllables: &[Syllable]) -> String {
    let mut out = String::new();
    for s in syllables {
        let vowel = &VOWELS[s.vowel];
        if s.onset.is_empty() {
            out.push(vowel.independent);
        } else {
            for (i, &o) in s.onset.iter().enumerate() {
                if i > 0 {
                    out.push(VIRAMA);
                }
                out.push(CONSONANTS[o].native);
            }
            if let Some(sign) = vowel.sign {
                out.push(sign);
            }
        }
        if let Some(n) = s.nasal {
            out.push(n);
        }
    }
    out
}

impl DeskLanguage {
    pub fn generate(cfg: &LanguageConfig) -> DeskLanguage {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let cons = WeightedIndex::new(CONSONANTS.iter().map(|c| c.weight)).expect("weights");
        let vows = WeightedIndex::new(VOWELS.iter().map(|v| v.weight)).expect("weights");
        let lengths = WeightedIndex::new([25.0, 40.0, 25.0, 10.0]).expect("weights");
        let rules = builtin::ruleset("hinglish").expect("builtin").expect("valid");

        let mut seen = HashSet::with_capacity(cfg.types);
        let mut types = Vec::with_capacity(cfg.types);
        while types.len() < cfg.types {
            let n = lengths.sample(&mut rng) + 1;
            let mut syl = Vec::with_capacity(n);
            for k in 0..n {
                let r: f64 = rng.random();
                let onset = if k == 0 && r < 0.06 {
                    Vec::new()
                } else if r > 0.93 {
                    vec![cons.sample(&mut rng), cons.sample(&mut rng)]
                } else {
                    vec![cons.sample(&mut rng)]
                };
                let vowel = vows.sample(&mut rng);
                let r: f64 = rng.random();
                let nasal = if r < 0.07 {
                    Some(ANUSVARA)
                } else if r < 0.09 {
                    Some(CHANDRABINDU)
                } else {
                    None
                };
                syl.push(Syllable { onset, vowel, nasal });
            }
            let native = native_of(&syl);
            if !seen.insert(native.clone()) {
                continue;
            }
            let dominant = spell(&mut rng, &syl);
            let base = rules.transform(&dominant);
            let mut roman = vec![dominant];
            for _ in 0..2 {
                let alt = spell(&mut rng, &syl);
                // letter sequences can straddle syllables and change the
                // base form; such spellings are a different word
                if !roman.contains(&alt) && rules.transform(&alt) == base {
                    roman.push(alt);
                }
            }
            types.push(WordType { native, roman });
        }

        let zipf = Zipf::new(cfg.types as f64, cfg.zipf_exponent).expect("zipf parameters");
        let successors = (0..cfg.types)
            .map(|_| std::array::from_fn(|_| zipf.sample(&mut rng) as u32 - 1))
            .collect();
        DeskLanguage {
            types,
            successors,
            zipf,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u32 {
        self.zipf.sample(rng) as u32 - 1
    }

    /// Sentences as type ids. Words follow a preferred successor of the
    /// previous word 60% of the time.
    pub fn sentences(&self, n: usize, seed: u64) -> Vec<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pref = WeightedIndex::new([32.0, 16.0, 8.0, 4.0, 2.0, 1.0]).expect("weights");
        (0..n)
            .map(|_| {
                let len = rng.random_range(3..=10);
                let mut s = vec![self.draw(&mut rng)];
                while s.len() < len {
                    let prev = *s.last().unwrap() as usize;
                    let next = if rng.random_bool(0.6) {
                        self.successors[prev][pref.sample(&mut rng)]
                    } else {
                        self.draw(&mut rng)
                    };
                    s.push(next);
                }
                s
            })
            .collect()
    }

    pub fn native_sentence(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.types[i as usize].native.clone()).collect()
    }

    /// Dominant spellings only.
    pub fn roman_sentence(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.types[i as usize].roman[0].clone()).collect()
    }

    /// Spellings as people write them: a minority spelling with
    /// probability `variant_rate` when the type has one.
    pub fn noisy_roman_sentence(&self, ids: &[u32], variant_rate: f64, rng: &mut ChaCha8Rng) -> Vec<String> {
        ids.iter()
            .map(|&i| {
                let r = &self.types[i as usize].roman;
                if r.len() > 1 && rng.random_bool(variant_rate) {
                    r[rng.random_range(1..r.len())].clone()
                } else {
                    r[0].clone()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeskCorpusConfig {
    pub language: LanguageConfig,
    pub train_sentences: usize,
    pub train_seed: u64,
    pub test_sentences: usize,
    pub test_seed: u64,
    /// Inclusive character-length bounds for test sentences.
    pub test_chars: (usize, usize),
    pub roman_variant_rate: f64,
}

impl Default for DeskCorpusConfig {
    fn default() -> Self {
        DeskCorpusConfig {
            language: LanguageConfig::default(),
            train_sentences: 100_000,
            train_seed: 1,
            test_sentences: 500,
            test_seed: 2,
            test_chars: (15, 35),
            roman_variant_rate: 0.12,
        }
    }
}

/// Training text and test sentences for both scripts.
pub struct DeskCorpus {
    pub native_train: Vec<String>,
    pub roman_train: Vec<String>,
    pub native_test: Vec<Vec<String>>,
    pub roman_test: Vec<Vec<String>>,
}

impl DeskCorpus {
    pub fn generate(cfg: &DeskCorpusConfig) -> DeskCorpus {
        let lang = DeskLanguage::generate(&cfg.language);
        Self::from_language(&lang, cfg)
    }

    pub fn from_language(lang: &DeskLanguage, cfg: &DeskCorpusConfig) -> DeskCorpus {
        let train = lang.sentences(cfg.train_sentences, cfg.train_seed);
        let mut noise = ChaCha8Rng::seed_from_u64(cfg.train_seed ^ 0x5eed);
        let native_train = train.iter().map(|s| lang.native_sentence(s).join(" ")).collect();
        let roman_train = train
            .iter()
            .map(|s| {
                lang.noisy_roman_sentence(s, cfg.roman_variant_rate, &mut noise)
                    .join(" ")
            })
            .collect();

        // test sentences must fit the length window in both scripts
        let (lo, hi) = cfg.test_chars;
        let fits = |words: &[String]| {
            let n = words.iter().map(|w| w.chars().count()).sum::<usize>() + words.len().saturating_sub(1);
            (lo..=hi).contains(&n)
        };
        let mut native_test = Vec::with_capacity(cfg.test_sentences);
        let mut roman_test = Vec::with_capacity(cfg.test_sentences);
        let mut batch_seed = cfg.test_seed;
        while native_test.len() < cfg.test_sentences {
            for s in lang.sentences(cfg.test_sentences.max(64), batch_seed) {
                let s = &s[..s.len().min(6)];
                let n = lang.native_sentence(s);
                let r = lang.roman_sentence(s);
                if fits(&n) && fits(&r) && native_test.len() < cfg.test_sentences {
                    native_test.push(n);
                    roman_test.push(r);
                }
            }
            batch_seed = batch_seed.wrapping_add(0x9e37_79b9);
        }
        DeskCorpus {
            native_train,
            roman_train,
            native_test,
            roman_test,
        }
    }
}
