//! The geoparser interface, the built-in lexicon baseline, and adapters for
//! external geoparsers.
//!
//! Every geoparser produces raw [`WireToponym`]s in the adapter wire format.
//! [`validate_response`] turns those into [`PredictedToponym`]s, dropping any
//! prediction whose span or coordinates do not fit the document.

mod adapter;
mod baseline;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{CharOffsets, Document, GeoPoint};
use crate::gazetteer::{EntryId, Gazetteer};
use crate::metrics::Mention;

pub use adapter::{HttpAdapter, ProcessAdapter};
pub use baseline::{
    default_stoplist, recognize_lexicon, resolve_population, resolve_population_filtered, Baseline,
    NoCandidate, RecognizedSpan, RecognizerConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedToponym {
    pub start: usize,
    pub end: usize,
    pub name: String,
    pub point: Option<GeoPoint>,
    pub entry_id: Option<EntryId>,
}

impl Mention for PredictedToponym {
    fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    fn point(&self) -> Option<GeoPoint> {
        self.point
    }
}

/// Request line sent to an external geoparser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: String,
    pub text: String,
}

/// Response line returned by an external geoparser; also the cache format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub id: String,
    pub toponyms: Vec<WireToponym>,
}

/// One prediction as sent over the wire. Offsets are signed so that a
/// negative offset is dropped as an invalid span rather than failing the
/// whole response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireToponym {
    pub start: i64,
    pub end: i64,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_id: Option<EntryId>,
}

impl From<&PredictedToponym> for WireToponym {
    fn from(p: &PredictedToponym) -> Self {
        WireToponym {
            start: p.start as i64,
            end: p.end as i64,
            name: p.name.clone(),
            lat: p.point.map(|pt| pt.lat),
            lon: p.point.map(|pt| pt.lon),
            entry_id: p.entry_id,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum AdapterError {
    #[error("adapter timed out after {0:?}")]
    Timeout(Duration),
    #[error("adapter protocol error: {message}")]
    Protocol { message: String, raw: String },
    #[error("adapter unavailable: {0}")]
    Unavailable(String),
    #[error("invalid geoparser configuration: {0}")]
    Config(String),
}

impl AdapterError {
    pub(crate) fn protocol(message: impl Into<String>, raw: impl Into<String>) -> Self {
        AdapterError::Protocol {
            message: message.into(),
            raw: raw.into(),
        }
    }
}

/// Something that turns a document into raw predictions.
///
/// Implementations may hold a child process or a connection, so each worker
/// owns its own instance.
pub trait Geoparser: Send {
    fn parse_raw(&mut self, doc: &Document) -> Result<Vec<WireToponym>, AdapterError>;
}

/// Validated predictions for one document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutput {
    /// Sorted by (start, end), spans unique.
    pub predictions: Vec<PredictedToponym>,
    /// Predictions rejected by validation.
    pub dropped: usize,
}

/// Keeps predictions whose span lies inside the text, whose name equals the
/// spanned text, and whose coordinates (if any) are complete and in range.
/// Repeated spans keep their first occurrence.
pub fn validate_response(doc: &Document, toponyms: &[WireToponym]) -> ParseOutput {
    let offsets = CharOffsets::new(&doc.text);
    let len = offsets.char_len() as i64;
    let mut out = ParseOutput::default();
    for t in toponyms {
        let span_ok = 0 <= t.start && t.start < t.end && t.end <= len;
        let name_ok =
            span_ok && offsets.slice(t.start as usize, t.end as usize) == Some(t.name.as_str());
        let point = match (t.lat, t.lon) {
            (Some(lat), Some(lon)) => GeoPoint::new(lat, lon).map(Some),
            (None, None) => Some(None),
            _ => None,
        };
        match (name_ok, point) {
            (true, Some(point)) => out.predictions.push(PredictedToponym {
                start: t.start as usize,
                end: t.end as usize,
                name: t.name.clone(),
                point,
                entry_id: t.entry_id,
            }),
            _ => out.dropped += 1,
        }
    }
    out.predictions.sort_by_key(|p| (p.start, p.end));
    let before = out.predictions.len();
    out.predictions.dedup_by_key(|p| (p.start, p.end));
    out.dropped += before - out.predictions.len();
    out
}

/// Runs one geoparser on one document and validates the result.
pub fn parse_document(
    parser: &mut dyn Geoparser,
    doc: &Document,
) -> Result<ParseOutput, AdapterError> {
    Ok(validate_response(doc, &parser.parse_raw(doc)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeoparserKind {
    BuiltinBaseline,
    ExternalProcess,
    ExternalHttp,
    /// Replays stored responses from a file in the wire format.
    PredictionFixture,
}

/// A geoparser as declared in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoparserSpec {
    pub id: String,
    pub kind: GeoparserKind,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub parameters: serde_json::Value,
}

const DEFAULT_TIMEOUT_SECS: f64 = 120.0;

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessParams {
    pub command: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpParams {
    pub endpoint: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureParams {
    pub path: PathBuf,
}

/// Typed parameters for each geoparser kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ParserSettings {
    Baseline(RecognizerConfig),
    Process(ProcessParams),
    Http(HttpParams),
    Fixture(FixtureParams),
}

fn timeout_from_secs(secs: f64) -> Result<Duration, AdapterError> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| AdapterError::Config(format!("timeout_secs must be positive, got {secs}")))
}

impl GeoparserSpec {
    pub fn builtin(id: impl Into<String>, config: &RecognizerConfig) -> Self {
        GeoparserSpec {
            id: id.into(),
            kind: GeoparserKind::BuiltinBaseline,
            parameters: serde_json::to_value(config).expect("recognizer config serializes"),
        }
    }

    /// Parses and checks the kind-specific parameters.
    pub fn settings(&self) -> Result<ParserSettings, AdapterError> {
        let params = if self.parameters.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            self.parameters.clone()
        };
        let bad =
            |e: serde_json::Error| AdapterError::Config(format!("geoparser {:?}: {e}", self.id));
        let settings = match self.kind {
            GeoparserKind::BuiltinBaseline => {
                let config: RecognizerConfig = serde_json::from_value(params).map_err(bad)?;
                if config.max_ngram == 0 {
                    return Err(AdapterError::Config(format!(
                        "geoparser {:?}: max_ngram must be at least 1",
                        self.id
                    )));
                }
                ParserSettings::Baseline(config)
            }
            GeoparserKind::ExternalProcess => {
                let p: ProcessParams = serde_json::from_value(params).map_err(bad)?;
                timeout_from_secs(p.timeout_secs)?;
                ParserSettings::Process(p)
            }
            GeoparserKind::ExternalHttp => {
                let p: HttpParams = serde_json::from_value(params).map_err(bad)?;
                timeout_from_secs(p.timeout_secs)?;
                ParserSettings::Http(p)
            }
            GeoparserKind::PredictionFixture => {
                ParserSettings::Fixture(serde_json::from_value(params).map_err(bad)?)
            }
        };
        Ok(settings)
    }

    /// Rewrites relative file paths in the parameters against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let key = match self.kind {
            GeoparserKind::PredictionFixture => "path",
            GeoparserKind::ExternalProcess => "command",
            _ => return,
        };
        if let Some(serde_json::Value::String(p)) = self.parameters.get_mut(key) {
            let path = Path::new(p.as_str());
            // Bare command names are looked up on PATH, not resolved.
            let is_bare_command = key == "command" && path.components().count() == 1;
            if path.is_relative() && !is_bare_command {
                *p = base.join(path).to_string_lossy().into_owned();
            }
        }
    }

    /// Creates a fresh geoparser instance. External processes are spawned
    /// lazily on the first document.
    pub fn instantiate(
        &self,
        gazetteer: &Arc<Gazetteer>,
    ) -> Result<Box<dyn Geoparser>, AdapterError> {
        Ok(match self.settings()? {
            ParserSettings::Baseline(config) => {
                Box::new(Baseline::new(Arc::clone(gazetteer), config))
            }
            ParserSettings::Process(p) => Box::new(ProcessAdapter::new(
                p.command,
                p.args,
                timeout_from_secs(p.timeout_secs)?,
            )),
            ParserSettings::Http(p) => Box::new(HttpAdapter::new(
                p.endpoint,
                timeout_from_secs(p.timeout_secs)?,
            )),
            ParserSettings::Fixture(p) => Box::new(FixtureReplay::load(&p.path)?),
        })
    }
}

/// Runs `spec` on a single document.
pub fn parse(
    spec: &GeoparserSpec,
    doc: &Document,
    gazetteer: &Arc<Gazetteer>,
) -> Result<ParseOutput, AdapterError> {
    let mut parser = spec.instantiate(gazetteer)?;
    parse_document(parser.as_mut(), doc)
}

/// Replays stored wire responses keyed by document id.
#[derive(Debug, Clone)]
pub struct FixtureReplay {
    responses: Arc<HashMap<String, Vec<WireToponym>>>,
}

impl FixtureReplay {
    pub fn load(path: &Path) -> Result<Self, AdapterError> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            AdapterError::Unavailable(format!("cannot read {}: {e}", path.display()))
        })?;
        let mut responses = HashMap::new();
        for (n, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let response: WireResponse = serde_json::from_str(line).map_err(|e| {
                AdapterError::protocol(format!("{} line {}: {e}", path.display(), n + 1), line)
            })?;
            responses.insert(response.id, response.toponyms);
        }
        Ok(FixtureReplay {
            responses: Arc::new(responses),
        })
    }

    pub fn from_responses(responses: impl IntoIterator<Item = WireResponse>) -> Self {
        FixtureReplay {
            responses: Arc::new(responses.into_iter().map(|r| (r.id, r.toponyms)).collect()),
        }
    }
}

impl Geoparser for FixtureReplay {
    fn parse_raw(&mut self, doc: &Document) -> Result<Vec<WireToponym>, AdapterError> {
        self.responses.get(&doc.id).cloned().ok_or_else(|| {
            AdapterError::protocol(format!("no stored response for document {:?}", doc.id), "")
        })
    }
}
