use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use varna_cli::commands::{
    cmd_analyze_layout, cmd_build, cmd_eval, cmd_gen_corpus, cmd_repl, load_model, parse_mode, BuildConfig, EvalConfig,
    GenCorpusConfig,
};
use varna_cli::service::{serve, AppState};
use varna_cli::CliError;
use varna_core::engine::{EngineConfig, Mode};
use varna_core::evalkit::EvalOptions;
use varna_core::lm::LmConfig;

#[derive(Parser)]
#[command(name = "varna", version, about = "Ambiguous-keypad and word-variant input engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model file from a corpus (one sentence per line).
    Build(BuildArgs),
    /// Simulate typing a test set and report KSR, NWP and EC.
    Eval(EvalArgs),
    /// Sweep consonant groupings and report layout predictability.
    AnalyzeLayout(AnalyzeArgs),
    /// Write the seeded synthetic desk corpus.
    GenCorpus(GenCorpusArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Interactive session on stdin.
    Repl(ReplArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    language: String,
    /// Vocabulary size K.
    #[arg(long, default_value_t = 100_000)]
    vocab: usize,
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Native layout: bundled id (hi, bn, th) or JSON file.
    #[arg(long, conflicts_with = "ruleset")]
    layout: Option<String>,
    /// Romanized ruleset: bundled name (hinglish, benglish, ...) or rules file.
    #[arg(long)]
    ruleset: Option<String>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct EngineFlags {
    #[arg(long, default_value_t = 3)]
    max_candidates: usize,
    #[arg(long, default_value_t = 0.1)]
    lambda_len: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1)]
    auto_correct_max: u32,
    #[arg(long, default_value_t = 2)]
    correction_max: u32,
    #[arg(long, default_value_t = 64)]
    pool_limit: usize,
    /// Backoff multiplier.
    #[arg(long, default_value_t = 0.4)]
    beta: f64,
    /// Interpolation weight of the user model.
    #[arg(long, default_value_t = 0.3)]
    lambda_user: f64,
}

impl EngineFlags {
    fn config(&self) -> Result<EngineConfig, CliError> {
        let c = EngineConfig {
            max_candidates: self.max_candidates,
            lambda_len: self.lambda_len,
            mu: self.mu,
            auto_correct_max_distance: self.auto_correct_max,
            correction_max_distance: self.correction_max,
            pool_limit: self.pool_limit,
            lm: LmConfig {
                beta: self.beta,
                lambda_user: self.lambda_user,
                ..LmConfig::default()
            },
        };
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Intended sentences, one per line.
    #[arg(long)]
    testset: PathBuf,
    /// What the user typed, line-aligned with the test set.
    #[arg(long, conflicts_with = "inject_rate")]
    typed: Option<PathBuf>,
    /// Replace this fraction of eligible tokens by spelling variants.
    #[arg(long)]
    inject_rate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    /// Also run the baseline (conventional layout or variant disambiguation
    /// off) and report deltas.
    #[arg(long)]
    ab: bool,
    #[arg(long, default_value_t = 3)]
    predictions: usize,
    /// Do not charge a keystroke for choosing a suggestion.
    #[arg(long)]
    free_selection: bool,
    #[arg(long, default_value_t = 1)]
    view_switch_cost: u64,
    /// Record per-keystroke latency.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    engine: EngineFlags,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Layout id whose characters are regrouped (hi, bn, th).
    #[arg(long)]
    script: String,
    #[arg(long, default_value_t = 5)]
    max_per_key: usize,
    /// Curve file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, short)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 2021)]
    seed: u64,
    #[arg(long, default_value_t = 300_000)]
    types: usize,
    #[arg(long, default_value_t = 100_000)]
    sentences: usize,
    #[arg(long, default_value_t = 500)]
    test_sentences: usize,
}

#[derive(Args)]
struct ServeArgs {
    /// Model files; each is served under its language id.
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    engine: EngineFlags,
}

#[derive(Args)]
struct ReplArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    #[command(flatten)]
    engine: EngineFlags,
}

fn print_json(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Build(a) => {
            let cfg = BuildConfig {
                corpus: a.corpus,
                language: a.language,
                vocabulary: a.vocab,
                order: a.order,
                layout: a.layout,
                ruleset: a.ruleset,
                out: a.out,
            };
            cmd_build(&cfg, &mut stdout)?;
        }
        Command::Eval(a) => {
            let cfg = EvalConfig {
                model: a.model,
                testset: a.testset,
                typed: a.typed,
                inject_rate: a.inject_rate,
                seed: a.seed,
                mode: a.mode,
                ab: a.ab,
                engine: a.engine.config()?,
                options: EvalOptions {
                    predictions: a.predictions,
                    count_selection: !a.free_selection,
                    view_switch_cost: a.view_switch_cost,
                    timing: a.timing,
                },
            };
            print_json(&cmd_eval(&cfg)?, None)?;
        }
        Command::AnalyzeLayout(a) => {
            print_json(&cmd_analyze_layout(&a.model, &a.script, a.max_per_key)?, a.out.as_ref())?;
        }
        Command::GenCorpus(a) => {
            let cfg = GenCorpusConfig {
                seed: a.seed,
                types: a.types,
                sentences: a.sentences,
                test_sentences: a.test_sentences,
            };
            cmd_gen_corpus(&cfg, &a.out_dir, &mut stdout)?;
        }
        Command::Serve(a) => {
            let config = a.engine.config()?;
            let models = a.models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?;
            let addr = format!("{}:{}", a.host, a.port);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(AppState::new(models, config), &addr))
                .map_err(|e| CliError::Stage {
                    stage: "serve",
                    message: format!("{addr}: {e}"),
                })?;
        }
        Command::Repl(a) => {
            let model = load_model(&a.model)?;
            cmd_repl(model, a.mode, a.engine.config()?, std::io::stdin().lock(), &mut stdout)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
