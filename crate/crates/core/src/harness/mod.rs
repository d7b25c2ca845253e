//! Evaluation runs: configuration, parallel scoring, caching and leaderboards.

mod cache;
mod leaderboard;

pub use cache::{CacheLookup, PredictionCache};
pub use leaderboard::{
    compare, render_boards, render_report, Leaderboard, LeaderboardRow, OrderingKey, ReportFormat,
};

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    corpus_stats, load_named_corpus, Completeness, Corpus, CorpusError, CorpusStats, Document,
};
use crate::gazetteer::{
    ingest_gazetteer, ColumnMap, Gazetteer, GazetteerError, GazetteerOptions, Schema,
};
use crate::geoparser::{
    validate_response, AdapterError, Geoparser, GeoparserSpec, PredictedToponym, WireResponse,
    WireToponym,
};
use crate::metrics::{
    align, distance_errors, Counts, DistanceErrors, EvalReport, MatchMode, MetricsConfig,
    MetricsError,
};

/// Runs abort when strictly more than this share of documents fail.
pub const MAX_FAILED_SHARE: f64 = 0.10;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("geoparser {geoparser:?} failed on {failed} of {total} documents in {corpus:?}; first failure: {first}")]
    AdapterFailures {
        geoparser: String,
        corpus: String,
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("geoparser {geoparser:?}: {source}")]
    Adapter {
        geoparser: String,
        source: AdapterError,
    },
    #[error("reports come from different corpora: {0:?} and {1:?}")]
    MixedCorpora(String, String),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed file {}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },
}

impl HarnessError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
        move |source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub name: String,
    pub path: PathBuf,
    pub completeness: Completeness,
}

/// How the place table is laid out on disk.
///
/// In JSON: `"geonames"`, `"index"` (a file written by
/// [`Gazetteer::save_index`]), a path to a column-map file, or an inline
/// column-map object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Named(String),
    Columns(ColumnMap),
}

impl Default for SchemaSource {
    fn default() -> Self {
        SchemaSource::Named("geonames".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazetteerSource {
    pub path: PathBuf,
    #[serde(default)]
    pub schema: SchemaSource,
    /// Ignored for `"index"`, which records its own setting.
    #[serde(default)]
    pub fold_diacritics: bool,
}

impl GazetteerSource {
    pub fn load(&self) -> Result<Gazetteer, HarnessError> {
        let options = GazetteerOptions {
            fold_diacritics: self.fold_diacritics,
        };
        let schema = match &self.schema {
            SchemaSource::Named(name) if name == "index" => {
                return Ok(Gazetteer::load_index(&self.path)?)
            }
            SchemaSource::Named(name) if name == "geonames" => Schema::GeoNames,
            SchemaSource::Named(path) => {
                Schema::Custom(ColumnMap::from_json_file(Path::new(path))?)
            }
            SchemaSource::Columns(map) => Schema::Custom(map.clone()),
        };
        Ok(ingest_gazetteer(&self.path, &schema, options)?.0)
    }
}

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpora: Vec<CorpusSource>,
    pub gazetteer: GazetteerSource,
    pub geoparsers: Vec<GeoparserSpec>,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let raw = fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let mut config: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for corpus in &mut self.corpora {
            join(&mut corpus.path);
        }
        join(&mut self.gazetteer.path);
        if let SchemaSource::Named(name) = &mut self.gazetteer.schema {
            if name != "geonames" && name != "index" && Path::new(name.as_str()).is_relative() {
                *name = base.join(name.as_str()).to_string_lossy().into_owned();
            }
        }
        if let Some(dir) = &mut self.cache_dir {
            join(dir);
        }
        for spec in &mut self.geoparsers {
            spec.resolve_paths(base);
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.corpora.is_empty() {
            return Err(HarnessError::Config(
                "at least one corpus is required".into(),
            ));
        }
        if self.geoparsers.is_empty() {
            return Err(HarnessError::Config(
                "at least one geoparser is required".into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(HarnessError::Config(
                "parallelism must be at least 1".into(),
            ));
        }
        let mut names: Vec<&str> = self.corpora.iter().map(|c| c.name.as_str()).collect();
        if let Some(dup) = first_duplicate(&mut names) {
            return Err(HarnessError::Config(format!(
                "corpus name {dup:?} appears twice"
            )));
        }
        let mut ids: Vec<&str> = self.geoparsers.iter().map(|g| g.id.as_str()).collect();
        if let Some(dup) = first_duplicate(&mut ids) {
            return Err(HarnessError::Config(format!(
                "geoparser id {dup:?} appears twice"
            )));
        }
        for spec in &self.geoparsers {
            spec.settings()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        self.metrics.validate()?;
        Ok(())
    }
}

fn first_duplicate<'a>(items: &mut [&'a str]) -> Option<&'a str> {
    items.sort_unstable();
    items.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
}

/// Per-run knobs that are not part of the scoring configuration.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Worker threads; 0 and 1 both mean sequential.
    pub workers: usize,
    pub cache: Option<PredictionCache>,
}

type RawResult = Result<Vec<WireToponym>, AdapterError>;

/// Runs one parser per worker over `docs`. Results come back in input order.
fn run_workers<F>(make_parser: &F, docs: &[Document], workers: usize) -> Vec<RawResult>
where
    F: Fn() -> Result<Box<dyn Geoparser>, AdapterError> + Sync,
{
    let workers = workers.clamp(1, docs.len().max(1));
    let next = AtomicUsize::new(0);
    let mut indexed: Vec<(usize, RawResult)> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    let mut parser = make_parser();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(doc) = docs.get(i) else { break };
                        let result = match &mut parser {
                            Ok(p) => p.parse_raw(doc),
                            Err(e) => Err(e.clone()),
                        };
                        out.push((i, result));
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

/// Scores raw responses (one per document, in corpus order) against gold.
///
/// Aggregation walks documents in id order so the floating-point sums do
/// not depend on how the corpus file happens to be sorted.
fn score(
    corpus: &Corpus,
    raw: &[RawResult],
    config: &MetricsConfig,
    mut warnings: Vec<String>,
) -> Result<EvalReport, HarnessError> {
    let mut order: Vec<usize> = (0..corpus.documents.len()).collect();
    order.sort_by(|&a, &b| corpus.documents[a].id.cmp(&corpus.documents[b].id));

    let mut counts = Counts::default();
    let mut errors = DistanceErrors::default();
    let mut dropped = 0;
    for i in order {
        let doc = &corpus.documents[i];
        let predictions: Vec<PredictedToponym> = match &raw[i] {
            Ok(toponyms) => {
                let out = validate_response(doc, toponyms);
                dropped += out.dropped;
                out.predictions
            }
            Err(e) => {
                warnings.push(format!("adapter_failure: document {:?}: {e}", doc.id));
                Vec::new()
            }
        };
        let matching = align(&doc.gold, &predictions, config.match_mode)?;
        let doc_errors =
            distance_errors(&matching, &doc.gold, &predictions, config.earth_radius_km);
        counts.gold += doc.gold.len();
        counts.predicted += predictions.len();
        counts.matched += matching.pairs.len();
        counts.resolved += doc_errors.distances_km.len();
        counts.unresolved_matched += doc_errors.unresolved_matched;
        errors.distances_km.extend(doc_errors.distances_km);
        errors.unresolved_matched += doc_errors.unresolved_matched;
        errors.gold_point_missing += doc_errors.gold_point_missing;
    }
    if dropped > 0 {
        warnings.push(format!(
            "dropped_predictions: {dropped} predictions failed validation"
        ));
    }
    Ok(EvalReport::compute(
        &corpus.name,
        corpus.completeness,
        counts,
        &errors,
        config,
        warnings,
    ))
}

fn check_failures(geoparser: &str, corpus: &Corpus, raw: &[RawResult]) -> Result<(), HarnessError> {
    let failed = raw.iter().filter(|r| r.is_err()).count();
    let total = raw.len();
    if failed > 0 && failed as f64 > MAX_FAILED_SHARE * total as f64 {
        let first = raw
            .iter()
            .zip(&corpus.documents)
            .find_map(|(r, d)| {
                r.as_ref()
                    .err()
                    .map(|e| format!("document {:?}: {e}", d.id))
            })
            .unwrap_or_default();
        return Err(HarnessError::AdapterFailures {
            geoparser: geoparser.to_string(),
            corpus: corpus.name.clone(),
            failed,
            total,
            first,
        });
    }
    Ok(())
}

/// Evaluates parsers produced by `make_parser` without touching any cache.
/// Each worker calls `make_parser` once.
pub fn evaluate_with<F>(
    geoparser: &str,
    make_parser: F,
    corpus: &Corpus,
    config: &MetricsConfig,
    workers: usize,
) -> Result<EvalReport, HarnessError>
where
    F: Fn() -> Result<Box<dyn Geoparser>, AdapterError> + Sync,
{
    config.validate()?;
    let raw = run_workers(&make_parser, &corpus.documents, workers);
    check_failures(geoparser, corpus, &raw)?;
    score(corpus, &raw, config, Vec::new())
}

/// Runs `spec` over every document of `corpus` and scores the result.
pub fn evaluate(
    spec: &GeoparserSpec,
    corpus: &Corpus,
    gazetteer: &Arc<Gazetteer>,
    config: &MetricsConfig,
    options: &EvalOptions,
) -> Result<EvalReport, HarnessError> {
    config.validate()?;
    spec.settings().map_err(|source| HarnessError::Adapter {
        geoparser: spec.id.clone(),
        source,
    })?;
    let mut warnings = Vec::new();
    if let Some(cache) = &options.cache {
        match cache.load_cached(spec, corpus, gazetteer) {
            CacheLookup::Hit(responses) => {
                let raw: Vec<RawResult> = responses.into_iter().map(|r| Ok(r.toponyms)).collect();
                return score(corpus, &raw, config, warnings);
            }
            CacheLookup::Miss => {}
            CacheLookup::Corrupt(reason) => {
                warnings.push(format!("cache_corrupt: {reason}; recomputed"));
            }
        }
    }

    let raw = run_workers(
        &|| spec.instantiate(gazetteer),
        &corpus.documents,
        options.workers,
    );
    check_failures(&spec.id, corpus, &raw)?;

    if let Some(cache) = &options.cache {
        if raw.iter().all(|r| r.is_ok()) {
            let responses: Vec<WireResponse> = raw
                .iter()
                .zip(&corpus.documents)
                .map(|(r, doc)| WireResponse {
                    id: doc.id.clone(),
                    toponyms: r.as_ref().expect("checked above").clone(),
                })
                .collect();
            if let Err(e) = cache.cache_predictions(spec, corpus, gazetteer, &responses) {
                warnings.push(format!(
                    "cache_write_failed: {}: {e}",
                    cache.dir().display()
                ));
            }
        }
    }
    score(corpus, &raw, config, warnings)
}

/// Overrides applied on top of a [`RunConfig`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub match_mode: Option<MatchMode>,
    pub no_cache: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoparserReport {
    pub geoparser: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRun {
    pub name: String,
    pub completeness: Completeness,
    pub stats: CorpusStats,
    pub reports: Vec<GeoparserReport>,
}

/// Everything a run produced, as stored in `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub corpora: Vec<CorpusRun>,
}

impl RunRecord {
    pub fn load(run_dir: &Path) -> Result<Self, HarnessError> {
        let path = run_dir.join("run.json");
        let raw = fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
        serde_json::from_str(&raw).map_err(|e| HarnessError::Malformed {
            path,
            message: e.to_string(),
        })
    }

    pub fn corpus(&self, name: &str) -> Option<&CorpusRun> {
        self.corpora.iter().find(|c| c.name == name)
    }

    pub fn leaderboards(&self) -> Result<Vec<Leaderboard>, HarnessError> {
        self.corpora.iter().map(CorpusRun::leaderboard).collect()
    }
}

impl CorpusRun {
    pub fn leaderboard(&self) -> Result<Leaderboard, HarnessError> {
        let reports = self
            .reports
            .iter()
            .map(|r| (r.geoparser.clone(), r.report.clone()))
            .collect();
        compare(reports, self.completeness)
    }
}

/// Keeps ids usable as file names.
pub fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-+".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(HarnessError::io(path))
}

/// Evaluates every geoparser on every corpus and writes `run.json` plus one
/// `<corpus>/<geoparser>.json` per report under `out_dir`.
pub fn run(
    config: &RunConfig,
    options: &RunOptions,
    out_dir: &Path,
) -> Result<RunRecord, HarnessError> {
    let mut metrics = config.metrics;
    if let Some(mode) = options.match_mode {
        metrics.match_mode = mode;
    }
    let eval_options = EvalOptions {
        workers: options.workers.unwrap_or(config.parallelism),
        cache: match (&config.cache_dir, options.no_cache) {
            (Some(dir), false) => Some(PredictionCache::new(dir)),
            _ => None,
        },
    };
    if options.workers == Some(0) {
        return Err(HarnessError::Config("workers must be at least 1".into()));
    }
    let gazetteer = Arc::new(config.gazetteer.load()?);

    let mut record = RunRecord {
        corpora: Vec::new(),
    };
    for source in &config.corpora {
        let corpus = load_named_corpus(&source.path, source.name.clone(), source.completeness)?;
        let mut reports = Vec::new();
        for spec in &config.geoparsers {
            let report = evaluate(spec, &corpus, &gazetteer, &metrics, &eval_options)?;
            reports.push(GeoparserReport {
                geoparser: spec.id.clone(),
                report,
            });
        }
        record.corpora.push(CorpusRun {
            name: corpus.name.clone(),
            completeness: corpus.completeness,
            stats: corpus_stats(&corpus),
            reports,
        });
    }

    fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    for corpus in &record.corpora {
        let dir = out_dir.join(file_stem_for(&corpus.name));
        fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
        for r in &corpus.reports {
            write_json(
                &dir.join(format!("{}.json", file_stem_for(&r.geoparser))),
                &r.report,
            )?;
        }
    }
    write_json(&out_dir.join("run.json"), &record)?;
    Ok(record)
}
