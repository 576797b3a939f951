use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use translit::aligner::align_corpus;
use translit::model::{write_atomic, ModelError};
use translit::pipeline::{self, Corpus, PipelineError, SplitConfig, DEFAULT_SEED};
use translit::scripts::{discover_unmapped, ScriptError};
use translit::{synth, Direction, MappingTable, TranslitModel, WindowSpec};

/// Learn and apply Uzbek Cyrillic <-> Latin transliteration models.
#[derive(Parser, Debug)]
#[command(name = "translit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align a corpus and write the per-character segments.
    Align {
        #[command(flatten)]
        data: DataArgs,
        /// Alignments as `source<TAB>target<TAB>seg|seg|...` (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Failure report as `source<TAB>target<TAB>position`.
        #[arg(long)]
        failures: Option<PathBuf>,
    },
    /// Train a model on a whole corpus.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(short = 'x', default_value_t = 2)]
        x: usize,
        #[arg(short = 'y', default_value_t = 3)]
        y: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transliterate a word, a file, or stdin.
    Transliterate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "input")]
        word: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score a model on a held-out corpus.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a corpus, search the context window grid, and score the best cell on test.
    GridSearch {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// train,validation,test fractions
        #[arg(long, default_value = "0.7,0.15,0.15")]
        split: String,
        #[arg(long, default_value_t = 0)]
        x_min: usize,
        #[arg(long, default_value_t = 10)]
        x_max: usize,
        #[arg(long, default_value_t = 0)]
        y_min: usize,
        #[arg(long, default_value_t = 10)]
        y_max: usize,
        #[arg(long, value_enum, default_value_t = Format::Tsv)]
        format: Format,
        /// Grid table (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to save the model trained with the best window.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Generate a rule-consistent synthetic corpus.
    GenCorpus {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List corpus pairs the mapping table cannot align.
    Discover {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long = "dir")]
    direction: Direction,
    /// `cyrillic<TAB>latin` pairs.
    #[arg(long)]
    corpus: PathBuf,
    /// Mapping table (the bundled one for the direction if omitted).
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Tsv,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Io { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ScriptError> for CliError {
    fn from(e: ScriptError) -> Self {
        match e {
            ScriptError::Io { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn data_err(e: impl ToString) -> CliError {
    CliError::Data(e.to_string())
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file", path.display())))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(data_err),
    }
}

fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var("TRANSLIT_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("TRANSLIT_SEED={v:?} is not an integer"))),
        Err(_) => Ok(flag),
    }
}

fn parse_split(s: &str, seed: u64) -> Result<SplitConfig, CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--split {s:?}: expected three comma-separated numbers")))?;
    let [a, b, c] = parts[..] else {
        return Err(CliError::Usage(format!("--split {s:?}: expected three fractions")));
    };
    SplitConfig::new(a, b, c, seed).map_err(|e| CliError::Usage(e.to_string()))
}

impl DataArgs {
    /// Checks the input files exist before anything is read or written.
    fn check(&self) -> Result<(), CliError> {
        require_file(&self.corpus)?;
        if let Some(t) = &self.table {
            require_file(t)?;
        }
        Ok(())
    }

    fn load(&self) -> Result<(Corpus, MappingTable), CliError> {
        let corpus = Corpus::load(&self.corpus)?;
        Ok((corpus, load_table(self.table.as_deref(), self.direction)?))
    }
}

fn load_table(path: Option<&Path>, direction: Direction) -> Result<MappingTable, CliError> {
    Ok(match path {
        Some(p) => MappingTable::load(p, direction)?,
        None => direction.bundled_table().clone(),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Align { data, out, failures } => {
            data.check()?;
            let (corpus, table) = data.load()?;
            let (aligned, failed) = align_corpus(&corpus.oriented(data.direction), &table);
            let text: String =
                aligned.iter().map(|a| format!("{}\t{}\t{}\n", a.source(), a.target(), a.render_segments())).collect();
            emit(out.as_deref(), &text)?;
            let report: String = failed.iter().map(|f| f.to_tsv_line() + "\n").collect();
            match failures {
                Some(p) => emit(Some(&p), &report)?,
                None if !failed.is_empty() => eprint!("{report}"),
                None => {}
            }
            eprintln!("aligned {} of {} pairs", aligned.len(), corpus.len());
        }
        Command::Train { data, x, y, out } => {
            data.check()?;
            let window = WindowSpec::new(x, y).map_err(|e| CliError::Usage(e.to_string()))?;
            let (corpus, table) = data.load()?;
            let outcome = pipeline::train_direction(&corpus, window, &table, data.direction)?;
            if outcome.failures.len() * 2 > corpus.len() {
                return Err(CliError::Data(format!(
                    "{} of {} pairs do not align; first: {}",
                    outcome.failures.len(),
                    corpus.len(),
                    outcome.failures[0].to_tsv_line()
                )));
            }
            for f in &outcome.failures {
                eprintln!("warning: skipped unalignable pair {}", f.to_tsv_line());
            }
            outcome.model.save(&out)?;
            println!(
                "trained {} model (x={}, y={}) on {} pairs, {} samples, {} leaves -> {}",
                data.direction,
                x,
                y,
                corpus.len() - outcome.failures.len(),
                outcome.samples,
                outcome.model.tree.root.leaf_count(),
                out.display()
            );
        }
        Command::Transliterate { model, word, input } => {
            require_file(&model)?;
            if let Some(p) = &input {
                require_file(p)?;
            }
            let model = TranslitModel::load(&model)?;
            match (word, input) {
                (Some(w), _) => println!("{}", pipeline::transliterate_text(&model, &w)),
                (None, Some(p)) => {
                    let text = std::fs::read_to_string(&p).map_err(data_err)?;
                    print!("{}", pipeline::transliterate_text(&model, &text));
                }
                (None, None) => {
                    let mut text = String::new();
                    io::stdin().read_to_string(&mut text).map_err(data_err)?;
                    print!("{}", pipeline::transliterate_text(&model, &text));
                }
            }
        }
        Command::Evaluate { model, corpus, table, format, out } => {
            require_file(&model)?;
            require_file(&corpus)?;
            if let Some(t) = &table {
                require_file(t)?;
            }
            let model = TranslitModel::load(&model)?;
            let table = load_table(table.as_deref(), model.direction)?;
            let corpus = Corpus::load(&corpus)?;
            let report = pipeline::evaluate(&model, &corpus, &table)?;
            let text = match format {
                Format::Json => report.to_json(),
                Format::Tsv => report.to_tsv(),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::GridSearch { data, seed, split, x_min, x_max, y_min, y_max, format, out, model_out } => {
            data.check()?;
            let seed = effective_seed(seed)?;
            let config = parse_split(&split, seed)?;
            if x_min > x_max || y_min > y_max {
                return Err(CliError::Usage("empty grid range".into()));
            }
            WindowSpec::new(x_max, y_max).map_err(|e| CliError::Usage(e.to_string()))?;
            let (corpus, table) = data.load()?;
            let (train, validation, test) = pipeline::split_corpus(&corpus, &config)?;
            let grid =
                pipeline::grid_search(&train, &validation, &table, data.direction, x_min..=x_max, y_min..=y_max)?;
            let text = match format {
                Format::Tsv => grid.to_tsv(),
                Format::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "best": {"x": grid.best.x, "y": grid.best.y, "validation_f1": grid.best_f1},
                        "cells": grid.cells,
                    }))
                    .map_err(data_err)?
                        + "\n"
                }
            };
            emit(out.as_deref(), &text)?;
            let best = pipeline::train_direction(&train, grid.best, &table, data.direction)?.model;
            let test_report = pipeline::evaluate(&best, &test, &table)?;
            eprintln!(
                "best window x={} y={}: validation F1 {:.6}, test F1 {:.6} ({} train / {} validation / {} test pairs)",
                grid.best.x,
                grid.best.y,
                grid.best_f1,
                test_report.char_f1,
                train.len(),
                validation.len(),
                test.len()
            );
            if let Some(p) = model_out {
                best.save(&p)?;
            }
        }
        Command::GenCorpus { size, seed, out } => {
            let seed = effective_seed(seed)?;
            let corpus = synth::gen_corpus(size, seed).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(out.as_deref(), &corpus.to_tsv())?;
        }
        Command::Discover { data, out } => {
            data.check()?;
            let (corpus, table) = data.load()?;
            let report = discover_unmapped(&corpus.oriented(data.direction), &table);
            let text: String = report.iter().map(|r| r.to_tsv_line() + "\n").collect();
            emit(out.as_deref(), &text)?;
            eprintln!("{} of {} pairs unaligned", report.len(), corpus.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
