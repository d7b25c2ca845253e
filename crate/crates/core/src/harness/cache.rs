//! On-disk cache of raw geoparser responses.
//!
//! One file per (geoparser, corpus, corpus digest, gazetteer digest) key, one
//! wire-format response line per document in corpus order. Files are written
//! to a temporary name and renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::corpus::Corpus;
use crate::gazetteer::Gazetteer;
use crate::geoparser::{GeoparserKind, GeoparserSpec, WireResponse};

#[derive(Debug, Clone)]
pub struct PredictionCache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CacheLookup {
    Hit(Vec<WireResponse>),
    Miss,
    /// The entry exists but cannot be used; the reason is reported.
    Corrupt(String),
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl PredictionCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PredictionCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex key over the geoparser declaration, corpus identity and content,
    /// and (for the built-in baseline) the gazetteer content.
    pub fn key(spec: &GeoparserSpec, corpus: &Corpus, gazetteer: &Gazetteer) -> String {
        let mut hasher = Sha256::new();
        let mut field = |bytes: &[u8]| {
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(bytes);
        };
        field(spec.id.as_bytes());
        field(&serde_json::to_vec(spec).expect("specs serialize"));
        field(corpus.name.as_bytes());
        field(corpus.content_digest().as_bytes());
        if spec.kind == GeoparserKind::BuiltinBaseline {
            field(gazetteer.digest().as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.jsonl"))
    }

    pub fn cache_predictions(
        &self,
        spec: &GeoparserSpec,
        corpus: &Corpus,
        gazetteer: &Gazetteer,
        responses: &[WireResponse],
    ) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let key = Self::key(spec, corpus, gazetteer);
        let tmp = self.dir.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut out = io::BufWriter::new(fs::File::create(&tmp)?);
        for response in responses {
            serde_json::to_writer(&mut out, response)?;
            out.write_all(b"\n")?;
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, self.entry_path(&key))
    }

    pub fn load_cached(
        &self,
        spec: &GeoparserSpec,
        corpus: &Corpus,
        gazetteer: &Gazetteer,
    ) -> CacheLookup {
        let path = self.entry_path(&Self::key(spec, corpus, gazetteer));
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return CacheLookup::Miss,
            Err(e) => return CacheLookup::Corrupt(format!("{}: {e}", path.display())),
        };
        let lines: Vec<&str> = raw.lines().collect();
        if lines.len() != corpus.documents.len() {
            return CacheLookup::Corrupt(format!(
                "{}: {} lines for {} documents",
                path.display(),
                lines.len(),
                corpus.documents.len()
            ));
        }
        let mut responses = Vec::with_capacity(lines.len());
        for (n, (line, doc)) in lines.iter().zip(&corpus.documents).enumerate() {
            match serde_json::from_str::<WireResponse>(line) {
                Ok(r) if r.id == doc.id => responses.push(r),
                Ok(r) => {
                    return CacheLookup::Corrupt(format!(
                        "{} line {}: id {:?}, expected {:?}",
                        path.display(),
                        n + 1,
                        r.id,
                        doc.id
                    ))
                }
                Err(e) => {
                    return CacheLookup::Corrupt(format!("{} line {}: {e}", path.display(), n + 1))
                }
            }
        }
        CacheLookup::Hit(responses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Completeness, Document};
    use crate::gazetteer::{GazetteerEntry, GazetteerOptions};
    use crate::geoparser::{RecognizerConfig, WireToponym};

    fn setup() -> (Corpus, Gazetteer, GeoparserSpec) {
        let mut corpus = Corpus::new("c", Completeness::Complete);
        corpus.documents = vec![Document::new("a", "Oslo"), Document::new("b", "nothing")];
        let gaz = Gazetteer::from_entries(
            vec![GazetteerEntry::new(1, "Oslo", 59.9, 10.75, 1)],
            GazetteerOptions::default(),
        )
        .unwrap();
        (
            corpus,
            gaz,
            GeoparserSpec::builtin("base", &RecognizerConfig::default()),
        )
    }

    fn responses() -> Vec<WireResponse> {
        vec![
            WireResponse {
                id: "a".into(),
                toponyms: vec![WireToponym {
                    start: 0,
                    end: 4,
                    name: "Oslo".into(),
                    lat: Some(59.9),
                    lon: Some(10.75),
                    entry_id: Some(1),
                }],
            },
            WireResponse {
                id: "b".into(),
                toponyms: vec![],
            },
        ]
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PredictionCache::new(dir.path());
        let (corpus, gaz, spec) = setup();
        assert_eq!(cache.load_cached(&spec, &corpus, &gaz), CacheLookup::Miss);
        cache
            .cache_predictions(&spec, &corpus, &gaz, &responses())
            .unwrap();
        assert_eq!(
            cache.load_cached(&spec, &corpus, &gaz),
            CacheLookup::Hit(responses())
        );
        let leftovers = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .ends_with(".tmp")
            })
            .count();
        assert_eq!(leftovers, 0);
    }

    #[test]
    fn edited_corpus_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PredictionCache::new(dir.path());
        let (mut corpus, gaz, spec) = setup();
        cache
            .cache_predictions(&spec, &corpus, &gaz, &responses())
            .unwrap();
        corpus.documents[1].text = "nothing at all".into();
        assert_eq!(cache.load_cached(&spec, &corpus, &gaz), CacheLookup::Miss);
    }

    #[test]
    fn parameters_and_gazetteer_are_part_of_the_key() {
        let (corpus, gaz, spec) = setup();
        let relaxed = GeoparserSpec::builtin(
            "base",
            &RecognizerConfig {
                require_capitalized: false,
                ..RecognizerConfig::default()
            },
        );
        assert_ne!(
            PredictionCache::key(&spec, &corpus, &gaz),
            PredictionCache::key(&relaxed, &corpus, &gaz)
        );
        let other = Gazetteer::from_entries(
            vec![GazetteerEntry::new(2, "Oslo", 59.9, 10.75, 1)],
            GazetteerOptions::default(),
        )
        .unwrap();
        assert_ne!(
            PredictionCache::key(&spec, &corpus, &gaz),
            PredictionCache::key(&spec, &corpus, &other)
        );
    }

    #[test]
    fn corrupted_line_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PredictionCache::new(dir.path());
        let (corpus, gaz, spec) = setup();
        cache
            .cache_predictions(&spec, &corpus, &gaz, &responses())
            .unwrap();
        let path = cache.entry_path(&PredictionCache::key(&spec, &corpus, &gaz));
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replacen("\"toponyms\"", "\"topo", 1)).unwrap();
        assert!(matches!(
            cache.load_cached(&spec, &corpus, &gaz),
            CacheLookup::Corrupt(_)
        ));
    }
}
