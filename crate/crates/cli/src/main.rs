//! Command-line surface: ingest, train, eval, query, repl, stem.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal
//! invariant violation. Errors go to stderr as one line with a stable
//! `error[<code>]:` prefix.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sandhan::engine::{eval_trainer, Engine, EvalTarget};
use sandhan::error::Error as CoreError;
use sandhan::eval::{cross_validate, evaluate_split_detailed, percentage_split};
use sandhan::morphology::{extract_root_verb, SuffixTable};
use sandhan::EngineConfig;

mod output;

#[derive(Parser)]
#[command(
    name = "sandhan",
    about = "Semantic search and question answering for Bengali",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Engine config file (sectioned key=value)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set ensemble.null_floor=0.3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<EngineConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => EngineConfig::load(path).map_err(CliError::from)?,
            None => EngineConfig::default(),
        };
        for kv in &self.sets {
            let Some((key, value)) = kv.split_once('=') else {
                return Err(CliError::usage(format!("--set expects KEY=VALUE, got '{kv}'")));
            };
            config
                .set(key.trim(), value.trim())
                .map_err(|e| CliError::usage(e.to_string()))?;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a corpus (JSONL file or category directory) into a state dir
    Ingest {
        corpus: PathBuf,
        /// State directory to create
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        /// Knowledge-base TSV (subject, relation, object, sentence id)
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Suffix-table TSV overriding the builtin inventory
        #[arg(long)]
        suffixes: Option<PathBuf>,
        /// Function-word lexicon overriding the builtin list
        #[arg(long = "function-words")]
        function_words: Option<PathBuf>,
        /// Synonym lexicon TSV overriding the builtin one
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train the four classifiers of every multi-child taxonomy node
    Train {
        #[arg(short = 's', long = "state")]
        state: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate a classifier (or the ensemble) on the ingested corpus
    Eval {
        #[arg(short = 's', long = "state")]
        state: PathBuf,
        /// K-fold cross-validation with this many folds
        #[arg(long)]
        kfold: Option<usize>,
        /// Percentage split: this much training data
        #[arg(long, conflicts_with = "kfold")]
        split: Option<f64>,
        /// nb | svm | tree | mlp | ensemble
        #[arg(long, default_value = "ensemble")]
        classifier: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Take the split in corpus order instead of shuffling
        #[arg(long = "no-shuffle")]
        no_shuffle: bool,
        #[arg(long)]
        json: bool,
        /// Write the remembered per-instance predictions to a JSONL file
        #[arg(long = "dump-predictions", value_name = "PATH")]
        dump_predictions: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Answer one query
    Query {
        #[arg(short = 's', long = "state")]
        state: PathBuf,
        text: String,
        /// Print the full audit trail (expansions, votes, hits)
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
        #[arg(long = "top-n")]
        top_n: Option<usize>,
    },
    /// Interactive query loop
    Repl {
        #[arg(short = 's', long = "state")]
        state: PathBuf,
        #[arg(long)]
        trace: bool,
    },
    /// Analyze one inflected verb form
    Stem {
        word: String,
        /// Suffix-table TSV overriding the builtin inventory
        #[arg(long)]
        suffixes: Option<PathBuf>,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError { code: 1, message: message.into() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        let code = match e {
            CoreError::Training(_)
            | CoreError::NonFinite(_)
            | CoreError::SchemaMismatch { .. }
            | CoreError::MissingModels(_) => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (help/version go to stdout)
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code, e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { corpus, out, kb, suffixes, function_words, synonyms, config } => {
            let mut engine_config = config.build()?;
            if let Some(p) = kb {
                engine_config.knowledge_base = Some(p);
            }
            if let Some(p) = suffixes {
                engine_config.suffix_table = Some(p);
            }
            if let Some(p) = function_words {
                engine_config.function_words = Some(p);
            }
            if let Some(p) = synonyms {
                engine_config.synonyms = Some(p);
            }
            let engine = Engine::ingest(&corpus, engine_config)?;
            engine.save(&out)?;
            println!(
                "ingested {} sentences into {} categories ({} leaves); state written to {}",
                engine.records.len(),
                engine.taxonomy.node(sandhan::taxonomy::ROOT).children.len(),
                engine.taxonomy.leaves_under(sandhan::taxonomy::ROOT).len(),
                out.display()
            );
            Ok(())
        }
        Command::Train { state, config } => {
            let mut engine = Engine::load(&state)?;
            if config.config.is_some() || !config.sets.is_empty() {
                engine.config = config.build()?;
            }
            let nodes = engine.train()?;
            engine.save(&state)?;
            println!("trained 4 classifiers at {} node(s):", nodes.len());
            for node in nodes {
                println!("  {}", engine.taxonomy.path_string(node));
            }
            Ok(())
        }
        Command::Eval { state, kfold, split, classifier, seed, no_shuffle, json, dump_predictions, config } => {
            let engine = Engine::load(&state)?;
            let mut engine_config = engine.config.clone();
            if config.config.is_some() || !config.sets.is_empty() {
                engine_config = config.build()?;
            }
            let target = EvalTarget::parse(&classifier)
                .ok_or_else(|| CliError::usage(format!("unknown classifier '{classifier}'")))?;
            let seed = seed.unwrap_or(engine_config.eval.seed);
            let (data, n_categories, names) = engine.root_dataset();
            if n_categories < 2 {
                return Err(CliError::from(CoreError::Training(
                    "evaluation needs at least two top-level categories".into(),
                )));
            }
            let trainer = eval_trainer(
                target,
                n_categories,
                engine.vocab.len(),
                engine_config.classifiers.clone(),
                engine_config.ensemble.clone(),
                seed,
            );
            if let Some(pct) = split {
                let (train_idx, test_idx) = percentage_split(data.len(), pct, seed, !no_shuffle)
                    .map_err(CliError::from)?;
                let (report, rows) =
                    evaluate_split_detailed(&trainer, &data, n_categories, &train_idx, &test_idx)?;
                let mode = output::EvalMode::Split {
                    pct,
                    shuffled: !no_shuffle,
                    train_size: train_idx.len(),
                    test_size: test_idx.len(),
                };
                output::print_eval(target.name(), &mode, seed, &report, None, &names, json);
                if let Some(path) = dump_predictions {
                    output::dump_predictions(&path, &rows, &names)?;
                }
            } else {
                let k = kfold.unwrap_or(engine_config.eval.k);
                let outcome = cross_validate(&trainer, &data, n_categories, k, seed)?;
                let mode = output::EvalMode::KFold { k };
                output::print_eval(
                    target.name(),
                    &mode,
                    seed,
                    &outcome.averaged,
                    Some(&outcome.folds),
                    &names,
                    json,
                );
                if let Some(path) = dump_predictions {
                    output::dump_predictions(&path, &outcome.predictions, &names)?;
                }
            }
            Ok(())
        }
        Command::Query { state, text, trace, json, top_n } => {
            let mut engine = Engine::load(&state)?;
            if let Some(n) = top_n {
                engine.config.top_n = n;
            }
            ensure_trained(&engine)?;
            let (answer, query_trace) = engine.answer(&text)?;
            output::print_answer(&engine, &answer, &query_trace, trace, json);
            Ok(())
        }
        Command::Repl { state, trace } => {
            let engine = Engine::load(&state)?;
            ensure_trained(&engine)?;
            repl(&engine, trace)
        }
        Command::Stem { word, suffixes } => {
            let table = match suffixes {
                Some(p) => SuffixTable::load(&p)?,
                None => SuffixTable::builtin(),
            };
            let normalized = sandhan::text::normalize(&word);
            println!("word: {normalized}");
            match extract_root_verb(&normalized, &table) {
                Some(a) => {
                    println!("root: {}", a.root);
                    println!("suffix: {}", a.suffix);
                    println!("tense: {}", a.tense);
                    match a.person {
                        Some(p) => println!("person: {p}"),
                        None => println!("person: -"),
                    }
                }
                None => println!("not an inflected verb form"),
            }
            Ok(())
        }
    }
}

fn ensure_trained(engine: &Engine) -> Result<(), CliError> {
    if engine.is_trained() {
        Ok(())
    } else {
        Err(CliError::from(CoreError::MissingModels(
            "state is untrained; run `sandhan train -s <state>` first".into(),
        )))
    }
}

fn repl(engine: &Engine, trace_default: bool) -> Result<(), CliError> {
    let stdin = std::io::stdin();
    let mut show_trace = trace_default;
    let mut out = std::io::stdout();
    loop {
        print!("sandhan> ");
        out.flush().ok();
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).unwrap_or(0) == 0 {
            println!();
            return Ok(());
        }
        let line = line.trim();
        match line {
            "" => continue,
            ":quit" | ":q" | "exit" => return Ok(()),
            ":trace on" => {
                show_trace = true;
                println!("trace on");
            }
            ":trace off" => {
                show_trace = false;
                println!("trace off");
            }
            query => match engine.answer(query) {
                Ok((answer, trace)) => output::print_answer(engine, &answer, &trace, show_trace, false),
                Err(e) => {
                    let e = CliError::from(e);
                    eprintln!("error[{}]: {}", e.code, e.message);
                }
            },
        }
    }
}

