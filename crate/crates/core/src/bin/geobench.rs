use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geobench::corpus::{
    corpus_stats, degrade_case, load_manifest, read_documents, save_corpus, validate_corpus,
    Completeness, Corpus, CorpusError,
};
use geobench::gazetteer::{ingest_gazetteer, ColumnMap, GazetteerError, GazetteerOptions, Schema};
use geobench::harness::{
    render_boards, render_report, run, HarnessError, ReportFormat, RunConfig, RunOptions, RunRecord,
};
use geobench::metrics::MatchMode;

#[derive(Parser, Debug)]
#[command(
    name = "geobench",
    version,
    about = "Benchmark geoparsers against annotated corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus file and print a summary.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Manifest with the corpus name and completeness.
        /// Without one the file stem is used and the corpus is taken as complete.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Build a name index from a tab-separated place table.
    Gazetteer {
        #[arg(long)]
        input: PathBuf,
        /// `geonames` or a path to a JSON column map.
        #[arg(long, default_value = "geonames")]
        schema: String,
        #[arg(long)]
        out_index: PathBuf,
        /// Strip combining marks when normalizing names.
        #[arg(long)]
        fold_diacritics: bool,
    },
    /// Evaluate every configured geoparser on every configured corpus.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `parallelism` from the config.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_parser = parse_match_mode)]
        match_mode: Option<MatchMode>,
        #[arg(long)]
        no_cache: bool,
    },
    /// Print the leaderboard of every corpus in a run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
    /// Print the leaderboard of one corpus.
    Compare {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        corpus: String,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
    /// Write a lowercased copy of a corpus; offsets and gold spans are kept.
    DegradeCase {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_match_mode(s: &str) -> Result<MatchMode, String> {
    match s {
        "exact" => Ok(MatchMode::Exact),
        "overlap" => Ok(MatchMode::Overlap),
        other => Err(format!(
            "unknown match mode {other:?}; expected exact or overlap"
        )),
    }
}

/// Error plus the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

const USAGE: u8 = 1;
const DATA: u8 = 2;
const ADAPTER: u8 = 3;

impl Failure {
    fn data(message: impl ToString) -> Self {
        Failure {
            code: DATA,
            message: message.to_string(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::Config(_) => USAGE,
            HarnessError::Adapter { .. } | HarnessError::AdapterFailures { .. } => ADAPTER,
            _ => DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure::data(e)
    }
}

impl From<GazetteerError> for Failure {
    fn from(e: GazetteerError) -> Self {
        Failure::data(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest { corpus, manifest } => ingest(&corpus, manifest.as_deref()),
        Command::Gazetteer {
            input,
            schema,
            out_index,
            fold_diacritics,
        } => {
            let schema = match schema.as_str() {
                "geonames" => Schema::GeoNames,
                path => Schema::Custom(ColumnMap::from_json_file(Path::new(path))?),
            };
            let (gazetteer, diagnostics) =
                ingest_gazetteer(&input, &schema, GazetteerOptions { fold_diacritics })?;
            gazetteer.save_index(&out_index)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&diagnostics).expect("diagnostics serialize")
            );
            Ok(())
        }
        Command::Run {
            config,
            out,
            workers,
            match_mode,
            no_cache,
        } => {
            let config = RunConfig::load(&config)?;
            let options = RunOptions {
                workers,
                match_mode,
                no_cache,
            };
            let record = run(&config, &options, &out)?;
            print!(
                "{}",
                render_boards(&record.leaderboards()?, ReportFormat::Text)
            );
            Ok(())
        }
        Command::Report { run_dir, format } => {
            let record = RunRecord::load(&run_dir)?;
            print!("{}", render_boards(&record.leaderboards()?, format));
            Ok(())
        }
        Command::Compare {
            run_dir,
            corpus,
            format,
        } => {
            let record = RunRecord::load(&run_dir)?;
            let run = record.corpus(&corpus).ok_or_else(|| Failure {
                code: USAGE,
                message: format!("run has no corpus named {corpus:?}"),
            })?;
            print!("{}", render_report(&run.leaderboard()?, format));
            Ok(())
        }
        Command::DegradeCase { corpus, out } => {
            let mut source = Corpus::new("", Completeness::Complete);
            source.documents = read_documents(&corpus)?;
            save_corpus(&degrade_case(&source), &out)?;
            Ok(())
        }
    }
}

fn ingest(path: &Path, manifest: Option<&Path>) -> Result<(), Failure> {
    let (name, completeness) = match manifest {
        Some(m) => {
            let m = load_manifest(m)?;
            (m.name, m.completeness)
        }
        None => (
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            Completeness::Complete,
        ),
    };
    let mut corpus = Corpus::new(name, completeness);
    corpus.documents = read_documents(path)?;
    let report = validate_corpus(&corpus);
    if !report.is_valid() {
        for v in &report.violations {
            eprintln!("{v}");
        }
        return Err(Failure::data(format!(
            "{} violation(s) in {}",
            report.violations.len(),
            path.display()
        )));
    }
    let stats = corpus_stats(&corpus);
    println!("corpus: {} ({})", corpus.name, corpus.completeness);
    println!("documents: {}", stats.document_count);
    println!(
        "toponyms: {} ({} with coordinates)",
        stats.toponym_count, stats.toponyms_with_coordinates
    );
    println!(
        "mean tokens per document: {:.2}",
        stats.mean_tokens_per_document
    );
    Ok(())
}
