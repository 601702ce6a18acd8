use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use varna_core::engine::{EngineConfig, Mode, Session};
use varna_core::evalkit::corpus::{DeskCorpus, DeskCorpusConfig, LanguageConfig};
use varna_core::evalkit::{
    evaluate, inject_variants, layout_predictability, sweep_groupings, EvalOptions, EvalReport, EvalSet, GroupingSpec,
};
use varna_core::lexicon::{
    build_lexicon_from_lines, read_model_file, read_sentences, write_model_file, Model, ScriptRules, SizeReport,
};
use varna_core::lm::train_ngram;
use varna_core::rulekit::{builtin, load_ruleset, KeyLayout, RuleSet};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("corpus not found: {}", .0.display())]
    CorpusNotFound(PathBuf),
    #[error("{0}")]
    Usage(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CorpusNotFound(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn stage<E: Display>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Stage {
        stage,
        message: e.to_string(),
    }
}

/// Accepts a bundled id (`hi`, `hinglish`, ...) or a file path.
pub fn resolve_layout(spec: &str) -> Result<KeyLayout, CliError> {
    if let Some(l) = builtin::layout(spec) {
        return l.map_err(stage("layout"));
    }
    let src = std::fs::read_to_string(spec).map_err(|_| CliError::Usage(format!("unknown layout {spec:?}")))?;
    KeyLayout::from_json(&src).map_err(stage("layout"))
}

pub fn resolve_ruleset(spec: &str) -> Result<RuleSet, CliError> {
    if let Some(r) = builtin::ruleset(spec) {
        return r.map_err(stage("ruleset"));
    }
    if !Path::new(spec).exists() {
        return Err(CliError::Usage(format!("unknown ruleset {spec:?}")));
    }
    load_ruleset(Path::new(spec)).map_err(stage("ruleset"))
}

pub fn load_model(path: &Path) -> Result<Arc<Model>, CliError> {
    read_model_file(path).map(Arc::new).map_err(stage("model"))
}

/// Accepts `ambiguous`, `conventional`, `romanized` and `romanized-plain`
/// (romanized with variant disambiguation off).
pub fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "ambiguous" | "native-ambiguous" => Ok(Mode::NativeAmbiguous),
        "conventional" => Ok(Mode::Conventional),
        "romanized" => Ok(Mode::Romanized { wvd: true }),
        "romanized-plain" => Ok(Mode::Romanized { wvd: false }),
        _ => Err(format!(
            "unknown mode {s:?} (expected ambiguous, conventional, romanized or romanized-plain)"
        )),
    }
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub corpus: PathBuf,
    pub language: String,
    pub vocabulary: usize,
    pub order: usize,
    pub layout: Option<String>,
    pub ruleset: Option<String>,
    pub out: PathBuf,
}

pub fn cmd_build(cfg: &BuildConfig, out: &mut impl Write) -> Result<SizeReport, CliError> {
    if !cfg.corpus.is_file() {
        return Err(CliError::CorpusNotFound(cfg.corpus.clone()));
    }
    if cfg.vocabulary == 0 {
        return Err(CliError::Usage("vocabulary size must be at least 1".into()));
    }
    let script = match (&cfg.layout, &cfg.ruleset) {
        (Some(l), None) => ScriptRules::Native(resolve_layout(l)?),
        (None, Some(r)) => ScriptRules::Roman(resolve_ruleset(r)?),
        _ => return Err(CliError::Usage("give exactly one of --layout or --ruleset".into())),
    };
    let (lines, invalid) = read_sentences(BufReader::new(File::open(&cfg.corpus)?)).map_err(stage("corpus"))?;
    if invalid > 0 {
        log::warn!("skipped {invalid} lines that are not UTF-8");
    }
    let (lex, stats) =
        build_lexicon_from_lines(lines.iter().map(String::as_str), cfg.vocabulary).map_err(stage("lexicon"))?;
    let ngram = train_ngram(lines.iter().map(String::as_str), &lex, cfg.order).map_err(stage("ngram"))?;
    let model = Model::new(&cfg.language, lex, ngram, script);
    model
        .tries
        .check_parity(&model.lexicon, model.ruleset())
        .map_err(stage("tries"))?;
    write_model_file(&model, &cfg.out).map_err(stage("serialize"))?;

    let size = model.tries.size_report();
    writeln!(out, "sentences: {}", stats.lines)?;
    writeln!(out, "tokens: {}", stats.tokens)?;
    writeln!(out, "vocabulary: {}", model.lexicon.len())?;
    writeln!(out, "vocab trie: {} bytes", size.vocab_trie_bytes)?;
    writeln!(out, "shadow trie: {} bytes", size.shadow_trie_bytes)?;
    writeln!(out, "shadow/vocab ratio: {:.4}", size.ratio)?;
    writeln!(out, "model written to {}", cfg.out.display())?;
    Ok(size)
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub model: PathBuf,
    pub testset: PathBuf,
    pub typed: Option<PathBuf>,
    pub inject_rate: Option<f64>,
    pub seed: u64,
    pub mode: Mode,
    pub ab: bool,
    pub engine: EngineConfig,
    pub options: EvalOptions,
}

#[derive(Debug, Serialize)]
struct Delta {
    ksr: f64,
    nwp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    f1: Option<f64>,
}

fn delta(before: &EvalReport, after: &EvalReport) -> Delta {
    Delta {
        ksr: after.ksr - before.ksr,
        nwp: after.nwp - before.nwp,
        f1: before.ec.zip(after.ec).map(|(b, a)| a.f1 - b.f1),
    }
}

fn read_set(path: &Path) -> Result<EvalSet, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(EvalSet::from_text(&text))
}

/// Runs the evaluation and returns the JSON report.
pub fn cmd_eval(cfg: &EvalConfig) -> Result<serde_json::Value, CliError> {
    let model = load_model(&cfg.model)?;
    let mut set = read_set(&cfg.testset)?;
    if set.is_empty() {
        return Err(CliError::Usage(format!("test set {} is empty", cfg.testset.display())));
    }
    if let Some(typed) = &cfg.typed {
        set =
            EvalSet::with_typed(set.intended, read_set(typed)?.intended).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut injected = None;
    if let Some(rate) = cfg.inject_rate {
        if model.is_native() {
            return Err(CliError::Usage("variant injection needs a romanized model".into()));
        }
        let inj = inject_variants(&set.intended, model.ruleset(), rate, cfg.seed, Some(&model.lexicon))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        injected =
            Some(json!({"rate": rate, "seed": cfg.seed, "eligible": inj.eligible, "replaced": inj.positions.len()}));
        set = EvalSet::with_typed(set.intended, inj.typed).map_err(stage("inject"))?;
    }

    let run = |mode| evaluate(model.clone(), &set, mode, cfg.engine, &cfg.options).map_err(stage("eval"));
    let mut report = json!({
        "model": model.language,
        "vocabulary": model.lexicon.len(),
        "sentences": set.intended.len(),
    });
    if let Some(i) = injected {
        report["injection"] = i;
    }
    if cfg.ab {
        let baseline_mode = match cfg.mode {
            Mode::NativeAmbiguous => Mode::Conventional,
            Mode::Romanized { wvd: true } => Mode::Romanized { wvd: false },
            m => {
                return Err(CliError::Usage(format!(
                    "--ab needs mode ambiguous or romanized, not {}",
                    m.name()
                )))
            }
        };
        let baseline = run(baseline_mode)?;
        let treatment = run(cfg.mode)?;
        report["delta"] = serde_json::to_value(delta(&baseline, &treatment)).expect("serializable");
        report["baseline"] = serde_json::to_value(&baseline).expect("serializable");
        report["treatment"] = serde_json::to_value(&treatment).expect("serializable");
    } else {
        report["report"] = serde_json::to_value(run(cfg.mode)?).expect("serializable");
    }
    Ok(report)
}

pub fn cmd_analyze_layout(model: &Path, script: &str, max_per_key: usize) -> Result<serde_json::Value, CliError> {
    let layout = match builtin::layout(script) {
        Some(l) => l.map_err(stage("layout"))?,
        None => return Err(CliError::Usage(format!("unknown script id {script:?}"))),
    };
    if max_per_key == 0 {
        return Err(CliError::Usage("max-per-key must be at least 1".into()));
    }
    let model = load_model(model)?;
    let sweep = sweep_groupings(&model.lexicon, &layout, max_per_key);
    let points: Vec<_> = sweep
        .points
        .iter()
        .map(|p| {
            json!({
                "x": p.consonants_per_key,
                "y": p.predictability,
                "consonantKeys": p.consonant_keys,
                "grouping": p.grouping,
            })
        })
        .collect();
    let elbow = sweep
        .elbow
        .map(|i| json!({"index": i, "x": sweep.points[i].consonants_per_key, "y": sweep.points[i].predictability}));
    Ok(json!({
        "script": script,
        "maxPerKey": max_per_key,
        "layoutPredictability": layout_predictability(&model.lexicon, &GroupingSpec::from_layout(&layout)),
        "points": points,
        "elbow": elbow,
    }))
}

#[derive(Debug, Clone, Copy)]
pub struct GenCorpusConfig {
    pub seed: u64,
    pub types: usize,
    pub sentences: usize,
    pub test_sentences: usize,
}

/// Writes `hi.train.txt`, `hi.test.txt`, `hi-latn.train.txt` and
/// `hi-latn.test.txt` into `dir`.
pub fn cmd_gen_corpus(cfg: &GenCorpusConfig, dir: &Path, out: &mut impl Write) -> Result<(), CliError> {
    if cfg.types == 0 {
        return Err(CliError::Usage("types must be at least 1".into()));
    }
    std::fs::create_dir_all(dir)?;
    let corpus = DeskCorpus::generate(&DeskCorpusConfig {
        language: LanguageConfig {
            seed: cfg.seed,
            types: cfg.types,
            ..LanguageConfig::default()
        },
        train_sentences: cfg.sentences,
        train_seed: cfg.seed.wrapping_add(1),
        test_sentences: cfg.test_sentences,
        test_seed: cfg.seed.wrapping_add(2),
        ..DeskCorpusConfig::default()
    });
    let join = |v: &[Vec<String>]| v.iter().map(|s| s.join(" ") + "\n").collect::<String>();
    let files = [
        (
            "hi.train.txt",
            corpus.native_train.iter().map(|s| format!("{s}\n")).collect::<String>(),
        ),
        ("hi.test.txt", join(&corpus.native_test)),
        (
            "hi-latn.train.txt",
            corpus.roman_train.iter().map(|s| format!("{s}\n")).collect(),
        ),
        ("hi-latn.test.txt", join(&corpus.roman_test)),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

fn print_candidates(session: &Session, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "composing: {}", session.composing())?;
    if let Some(p) = session.preview() {
        writeln!(out, "preview: {p}")?;
    }
    for (i, c) in session.candidates().iter().enumerate() {
        writeln!(out, "{}. {} ({:.3})", i + 1, c.surface, c.score)?;
    }
    Ok(())
}

/// Line-driven session. A plain line presses its characters as keys;
/// commands start with `:`.
///
/// ```text
/// :N            commit candidate N
/// :commit WORD  commit WORD
/// :bs           backspace
/// :predict      next-word predictions
/// :clear        start a new sentence
/// :quit
/// ```
///
/// An empty line commits the preview.
pub fn cmd_repl(
    model: Arc<Model>,
    mode: Mode,
    config: EngineConfig,
    input: impl BufRead,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let mut session = Session::new(model, mode, config).map_err(stage("session"))?;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if let Some(cmd) = line.strip_prefix(':') {
            let (name, arg) = cmd.split_once(' ').unwrap_or((cmd, ""));
            match name {
                "quit" | "q" => break,
                "bs" => {
                    session.backspace();
                    print_candidates(&session, out)?;
                }
                "clear" => {
                    session.clear_context();
                    writeln!(out, "context cleared")?;
                }
                "predict" => {
                    for (i, c) in session.predict(config.max_candidates).iter().enumerate() {
                        writeln!(out, "{}. {} ({:.3})", i + 1, c.surface, c.score)?;
                    }
                }
                "commit" if !arg.trim().is_empty() => {
                    let ctx = session.commit(arg.trim());
                    writeln!(out, "context: {}", ctx.join(" "))?;
                }
                n => match n.parse::<usize>() {
                    Ok(i) if (1..=session.candidates().len()).contains(&i) => {
                        let word = session.candidates()[i - 1].surface.clone();
                        let ctx = session.commit(&word);
                        writeln!(out, "context: {}", ctx.join(" "))?;
                    }
                    _ => writeln!(out, "unknown command :{cmd}")?,
                },
            }
            continue;
        }
        if line.is_empty() {
            if let Some(p) = session.preview().map(str::to_string) {
                let ctx = session.commit(&p);
                writeln!(out, "context: {}", ctx.join(" "))?;
            }
            continue;
        }
        let mut failed = false;
        for k in line.chars().filter(|c| !c.is_whitespace()) {
            if let Err(e) = session.press_key(k) {
                writeln!(out, "error: {e}")?;
                failed = true;
                break;
            }
        }
        if !failed {
            print_candidates(&session, out)?;
        }
    }
    Ok(())
}
