//! Annotated corpora in the line-delimited JSON interchange format.
//!
//! A corpus file holds one document per line:
//!
//! ```text
//! {"id": "d1", "text": "Berlin is cold.", "toponyms": [{"start": 0, "end": 6, "name": "Berlin", "lat": 52.52, "lon": 13.405}]}
//! ```
//!
//! Offsets count Unicode scalar values, not bytes. A small manifest file
//! (`{"name": ..., "completeness": "complete" | "partial"}`) carries the
//! corpus-level settings.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A point on the globe in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Returns `None` when either coordinate is non-finite or out of range.
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let point = GeoPoint { lat, lon };
        point.is_valid().then_some(point)
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Annotation-scheme tag recorded on a gold toponym.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToponymKind {
    AdminUnit,
    Demonym,
    NaturalFeature,
    Facility,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldToponym {
    /// Inclusive start offset in scalar values.
    pub start: usize,
    /// Exclusive end offset in scalar values.
    pub end: usize,
    pub name: String,
    pub point: Option<GeoPoint>,
    pub gazetteer_id: Option<String>,
    pub kind: Option<ToponymKind>,
}

impl GoldToponym {
    pub fn new(start: usize, end: usize, name: impl Into<String>) -> Self {
        GoldToponym {
            start,
            end,
            name: name.into(),
            point: None,
            gazetteer_id: None,
            kind: None,
        }
    }

    pub fn with_point(mut self, lat: f64, lon: f64) -> Self {
        self.point = Some(GeoPoint { lat, lon });
        self
    }

    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub gold: Vec<GoldToponym>,
    pub source: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            gold: Vec::new(),
            source: String::new(),
        }
    }

    pub fn with_gold(mut self, gold: Vec<GoldToponym>) -> Self {
        self.gold = gold;
        self
    }

    /// Length of the text in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Whether every toponym in the corpus is annotated.
///
/// Partial corpora cannot support precision, so evaluation falls back to
/// accuracy over the annotated toponyms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Completeness {
    Complete,
    Partial,
}

impl fmt::Display for Completeness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Completeness::Complete => "complete",
            Completeness::Partial => "partial",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub documents: Vec<Document>,
    pub completeness: Completeness,
}

impl Corpus {
    pub fn new(name: impl Into<String>, completeness: Completeness) -> Self {
        Corpus {
            name: name.into(),
            documents: Vec::new(),
            completeness,
        }
    }

    /// SHA-256 over the manifest settings and every serialized document line.
    pub fn content_digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.name.as_bytes());
        hasher.update([0]);
        hasher.update(self.completeness.to_string().as_bytes());
        hasher.update([0]);
        for doc in &self.documents {
            let line = serde_json::to_string(&DocumentRecord::from(doc))
                .expect("document records always serialize");
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub document_count: usize,
    pub toponym_count: usize,
    pub mean_tokens_per_document: f64,
    pub toponyms_with_coordinates: usize,
}

/// Corpus manifest as stored next to the document file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub completeness: Completeness,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    SpanOutOfBounds { text_len: usize },
    EmptySpan,
    SurfaceMismatch { annotated: String, actual: String },
    CoordinateOutOfRange { lat: f64, lon: f64 },
    DuplicateSpan,
    DuplicateDocumentId,
}

/// One broken invariant, located by document id and (when relevant) span.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub document: String,
    pub span: Option<(usize, usize)>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "document {:?}", self.document)?;
        if let Some((start, end)) = self.span {
            write!(f, " span ({start}, {end})")?;
        }
        match &self.kind {
            ViolationKind::SpanOutOfBounds { text_len } => {
                write!(f, ": offsets exceed text length {text_len}")
            }
            ViolationKind::EmptySpan => write!(f, ": start must be below end"),
            ViolationKind::SurfaceMismatch { annotated, actual } => {
                write!(
                    f,
                    ": annotated name {annotated:?} does not match text {actual:?}"
                )
            }
            ViolationKind::CoordinateOutOfRange { lat, lon } => {
                write!(f, ": coordinate ({lat}, {lon}) out of range")
            }
            ViolationKind::DuplicateSpan => write!(f, ": duplicate span"),
            ViolationKind::DuplicateDocumentId => write!(f, ": duplicate document id"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid corpus: {0}")]
    Invalid(Violation),
    #[error("malformed manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
}

/// Maps scalar-value offsets to byte offsets for one text.
pub struct CharOffsets<'a> {
    text: &'a str,
    bytes: Vec<usize>,
}

impl<'a> CharOffsets<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharOffsets { text, bytes }
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn byte_offset(&self, char_offset: usize) -> Option<usize> {
        self.bytes.get(char_offset).copied()
    }

    /// The text between two scalar offsets, or `None` if the range is invalid.
    pub fn slice(&self, start: usize, end: usize) -> Option<&'a str> {
        if start > end {
            return None;
        }
        Some(&self.text[self.byte_offset(start)?..self.byte_offset(end)?])
    }
}

// On-disk record shapes.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    id: String,
    text: String,
    #[serde(default)]
    toponyms: Vec<ToponymRecord>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    source: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToponymRecord {
    start: usize,
    end: usize,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gazetteer_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<ToponymKind>,
}

impl From<&Document> for DocumentRecord {
    fn from(doc: &Document) -> Self {
        DocumentRecord {
            id: doc.id.clone(),
            text: doc.text.clone(),
            toponyms: doc
                .gold
                .iter()
                .map(|g| ToponymRecord {
                    start: g.start,
                    end: g.end,
                    name: g.name.clone(),
                    lat: g.point.map(|p| p.lat),
                    lon: g.point.map(|p| p.lon),
                    gazetteer_id: g.gazetteer_id.clone(),
                    kind: g.kind,
                })
                .collect(),
            source: doc.source.clone(),
        }
    }
}

impl DocumentRecord {
    fn into_document(self, line: usize) -> Result<Document, CorpusError> {
        let gold = self
            .toponyms
            .into_iter()
            .map(|t| {
                let point = match (t.lat, t.lon) {
                    (Some(lat), Some(lon)) => Some(GeoPoint { lat, lon }),
                    (None, None) => None,
                    _ => {
                        return Err(CorpusError::Malformed {
                            line,
                            message: format!(
                                "document {:?}: toponym ({}, {}) has only one of lat/lon",
                                self.id, t.start, t.end
                            ),
                        })
                    }
                };
                Ok(GoldToponym {
                    start: t.start,
                    end: t.end,
                    name: t.name,
                    point,
                    gazetteer_id: t.gazetteer_id,
                    kind: t.kind,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Document {
            id: self.id,
            text: self.text,
            gold,
            source: self.source,
        })
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a corpus file without checking invariants. Blank lines are skipped.
pub fn read_documents(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let file = File::open(path).map_err(io_error(path))?;
    let mut documents = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        documents.push(record.into_document(line_no)?);
    }
    Ok(documents)
}

/// Loads and validates a corpus. The corpus is named after the file stem.
pub fn load_corpus(path: &Path, completeness: Completeness) -> Result<Corpus, CorpusError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_named_corpus(path, name, completeness)
}

pub fn load_named_corpus(
    path: &Path,
    name: impl Into<String>,
    completeness: Completeness,
) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus {
        name: name.into(),
        documents: read_documents(path)?,
        completeness,
    };
    if let Some(first) = validate_corpus(&corpus).violations.into_iter().next() {
        return Err(CorpusError::Invalid(first));
    }
    for doc in &mut corpus.documents {
        doc.gold.sort_by_key(|g| (g.start, g.end));
    }
    Ok(corpus)
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CorpusError> {
    let raw = std::fs::read_to_string(path).map_err(io_error(path))?;
    serde_json::from_str(&raw).map_err(|e| CorpusError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads a corpus using the name and completeness declared in its manifest.
pub fn load_corpus_with_manifest(
    corpus_path: &Path,
    manifest_path: &Path,
) -> Result<Corpus, CorpusError> {
    let manifest = load_manifest(manifest_path)?;
    load_named_corpus(corpus_path, manifest.name, manifest.completeness)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut out = BufWriter::new(file);
    for doc in &corpus.documents {
        serde_json::to_writer(&mut out, &DocumentRecord::from(doc)).map_err(|e| {
            CorpusError::Io {
                path: path.to_path_buf(),
                source: e.into(),
            }
        })?;
        out.write_all(b"\n").map_err(io_error(path))?;
    }
    out.flush().map_err(io_error(path))
}

pub fn save_manifest(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let manifest = Manifest {
        name: corpus.name.clone(),
        completeness: corpus.completeness,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(path, json + "\n").map_err(io_error(path))
}

/// Lists every invariant violation in the corpus. Never modifies the input.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen_ids = HashSet::new();
    for doc in &corpus.documents {
        if !seen_ids.insert(doc.id.as_str()) {
            violations.push(Violation {
                document: doc.id.clone(),
                span: None,
                kind: ViolationKind::DuplicateDocumentId,
            });
        }
        validate_document(doc, &mut violations);
    }
    ValidationReport { violations }
}

fn validate_document(doc: &Document, violations: &mut Vec<Violation>) {
    let offsets = CharOffsets::new(&doc.text);
    let text_len = offsets.char_len();
    let mut push = |span, kind| {
        violations.push(Violation {
            document: doc.id.clone(),
            span: Some(span),
            kind,
        })
    };
    for gold in &doc.gold {
        let span = gold.span();
        if gold.start >= gold.end {
            push(span, ViolationKind::EmptySpan);
        } else if gold.end > text_len {
            push(span, ViolationKind::SpanOutOfBounds { text_len });
        } else {
            let actual = offsets.slice(gold.start, gold.end).unwrap_or_default();
            if actual != gold.name {
                push(
                    span,
                    ViolationKind::SurfaceMismatch {
                        annotated: gold.name.clone(),
                        actual: actual.to_string(),
                    },
                );
            }
        }
        if let Some(point) = gold.point {
            if !point.is_valid() {
                push(
                    span,
                    ViolationKind::CoordinateOutOfRange {
                        lat: point.lat,
                        lon: point.lon,
                    },
                );
            }
        }
    }
    let mut spans: Vec<_> = doc.gold.iter().map(GoldToponym::span).collect();
    spans.sort_unstable();
    for pair in spans.windows(2) {
        if pair[0] == pair[1] {
            push(pair[1], ViolationKind::DuplicateSpan);
        }
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let document_count = corpus.documents.len();
    let tokens: usize = corpus
        .documents
        .iter()
        .map(|d| d.text.split_whitespace().count())
        .sum();
    let gold = corpus.documents.iter().flat_map(|d| &d.gold);
    CorpusStats {
        document_count,
        toponym_count: gold.clone().count(),
        mean_tokens_per_document: if document_count == 0 {
            0.0
        } else {
            tokens as f64 / document_count as f64
        },
        toponyms_with_coordinates: gold.filter(|g| g.point.is_some()).count(),
    }
}

/// Lowercases one scalar, keeping it unchanged when its lowercase mapping
/// is not exactly one scalar long.
pub fn lowercase_scalar(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn lowercase_preserving_length(s: &str) -> String {
    s.chars().map(lowercase_scalar).collect()
}

/// Produces an all-lowercase stress variant of the corpus with every
/// offset left intact.
pub fn degrade_case(corpus: &Corpus) -> Corpus {
    Corpus {
        name: corpus.name.clone(),
        completeness: corpus.completeness,
        documents: corpus
            .documents
            .iter()
            .map(|doc| Document {
                id: doc.id.clone(),
                text: lowercase_preserving_length(&doc.text),
                source: doc.source.clone(),
                gold: doc
                    .gold
                    .iter()
                    .map(|g| GoldToponym {
                        name: lowercase_preserving_length(&g.name),
                        ..g.clone()
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn berlin_doc() -> Document {
        Document::new("d1", "Berlin is cold.").with_gold(vec![
            GoldToponym::new(0, 6, "Berlin").with_point(52.52, 13.405)
        ])
    }

    fn corpus_of(docs: Vec<Document>) -> Corpus {
        Corpus {
            name: "t".into(),
            documents: docs,
            completeness: Completeness::Complete,
        }
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(file, "{line}").unwrap();
        }
        file
    }

    #[test]
    fn loads_minimal_document() {
        let file = write_lines(&[
            r#"{"id":"d1","text":"Berlin is cold.","toponyms":[{"start":0,"end":6,"name":"Berlin","lat":52.52,"lon":13.405}]}"#,
        ]);
        let corpus = load_corpus(file.path(), Completeness::Complete).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(corpus.documents[0], berlin_doc());
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.toponym_count, 1);
        assert_eq!(stats.toponyms_with_coordinates, 1);
    }

    #[test]
    fn surface_mismatch_names_document() {
        let file = write_lines(&[
            r#"{"id":"d1","text":"Berlin is cold.","toponyms":[{"start":0,"end":6,"name":"Munich"}]}"#,
        ]);
        let err = load_corpus(file.path(), Completeness::Complete).unwrap_err();
        match err {
            CorpusError::Invalid(v) => {
                assert_eq!(v.document, "d1");
                assert!(matches!(v.kind, ViolationKind::SurfaceMismatch { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let file = write_lines(&[
            r#"{"id":"d1","text":"x","toponyms":[]}"#,
            r#"{"id":"d2","text":"#,
        ]);
        let err = load_corpus(file.path(), Completeness::Complete).unwrap_err();
        assert!(
            matches!(err, CorpusError::Malformed { line: 2, .. }),
            "{err}"
        );
    }

    #[test]
    fn coordinate_out_of_range_rejected() {
        let file = write_lines(&[
            r#"{"id":"d9","text":"Berlin","toponyms":[{"start":0,"end":6,"name":"Berlin","lat":95.0,"lon":13.0}]}"#,
        ]);
        let err = load_corpus(file.path(), Completeness::Complete).unwrap_err();
        assert!(err.to_string().contains("d9"));
    }

    #[test]
    fn load_sorts_gold_and_keeps_file_order() {
        let file = write_lines(&[
            r#"{"id":"b","text":"Rome and Oslo","toponyms":[{"start":9,"end":13,"name":"Oslo"},{"start":0,"end":4,"name":"Rome"}]}"#,
            r#"{"id":"a","text":"nothing"}"#,
        ]);
        let corpus = load_corpus(file.path(), Completeness::Partial).unwrap();
        let ids: Vec<_> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["b", "a"]);
        assert_eq!(corpus.documents[0].gold[0].name, "Rome");
    }

    #[test]
    fn offsets_count_scalars_not_bytes() {
        let doc = Document::new("u", "Über São Paulo").with_gold(vec![GoldToponym::new(
            5,
            14,
            "São Paulo",
        )]);
        assert!(validate_corpus(&corpus_of(vec![doc])).is_valid());
    }

    #[test]
    fn validation_examples() {
        assert!(validate_corpus(&corpus_of(vec![berlin_doc()])).is_valid());

        let beyond =
            Document::new("long", "Berlin").with_gold(vec![GoldToponym::new(0, 20, "Berlin")]);
        let report = validate_corpus(&corpus_of(vec![beyond]));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].document, "long");

        let dup = Document::new("dup", "Berlin").with_gold(vec![
            GoldToponym::new(0, 6, "Berlin"),
            GoldToponym::new(0, 6, "Berlin"),
        ]);
        let report = validate_corpus(&corpus_of(vec![dup]));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::DuplicateSpan);
    }

    #[test]
    fn duplicate_document_ids_flagged() {
        let report = validate_corpus(&corpus_of(vec![berlin_doc(), berlin_doc()]));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(
            report.violations[0].kind,
            ViolationKind::DuplicateDocumentId
        );
    }

    #[test]
    fn stats_examples() {
        let empty = corpus_of(vec![]);
        assert_eq!(corpus_stats(&empty), CorpusStats::default());

        let stats = corpus_stats(&corpus_of(vec![
            Document::new("a", "one two three"),
            Document::new("b", " one  two three four five "),
        ]));
        assert_eq!(stats.document_count, 2);
        assert_eq!(stats.mean_tokens_per_document, 4.0);
    }

    #[test]
    fn degrade_case_examples() {
        let corpus = corpus_of(vec![
            Document::new("p", "Visit Paris").with_gold(vec![GoldToponym::new(6, 11, "Paris")])
        ]);
        let degraded = degrade_case(&corpus);
        let doc = &degraded.documents[0];
        assert_eq!(doc.text, "visit paris");
        assert_eq!(doc.gold[0].span(), (6, 11));
        assert_eq!(doc.gold[0].name, "paris");
        assert_eq!(degrade_case(&degraded), degraded);
    }

    #[test]
    fn degrade_case_keeps_multi_scalar_lowercase() {
        // U+0130 lowercases to "i\u{307}", which would shift offsets.
        let text = "İzmir and Ankara";
        let corpus = corpus_of(vec![Document::new("tr", text).with_gold(vec![
            GoldToponym::new(0, 5, "İzmir"),
            GoldToponym::new(10, 16, "Ankara"),
        ])]);
        let degraded = degrade_case(&corpus);
        let doc = &degraded.documents[0];
        assert_eq!(doc.text, "İzmir and ankara");
        assert_eq!(doc.gold[0].name, "İzmir");
        assert_eq!(doc.char_len(), text.chars().count());
        assert!(validate_corpus(&degraded).is_valid());
    }

    #[test]
    fn only_dotted_capital_i_has_multi_scalar_lowercase() {
        // Frozen from an independent enumeration of the Unicode case tables.
        let multi: Vec<u32> = (0..=0x10FFFFu32)
            .filter_map(char::from_u32)
            .filter(|c| c.to_lowercase().count() != 1)
            .map(u32::from)
            .collect();
        assert_eq!(multi, [0x130]);
        for c in (0..=0x10FFFFu32).filter_map(char::from_u32) {
            let lowered = lowercase_scalar(c);
            assert_eq!(lowercase_scalar(lowered), lowered);
        }
    }

    #[test]
    fn digest_tracks_content() {
        let a = corpus_of(vec![berlin_doc()]);
        let mut b = a.clone();
        assert_eq!(a.content_digest(), b.content_digest());
        b.documents[0].text = "Berlin is warm.".into();
        assert_ne!(a.content_digest(), b.content_digest());
    }
}
