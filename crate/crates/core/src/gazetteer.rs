//! Place gazetteer with a normalized-name index.
//!
//! Tables are tab-separated, one place per line. The GeoNames dump layout is
//! built in; any other table can be read through a [`ColumnMap`] naming the
//! zero-based column of each field.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::GeoPoint;

pub type EntryId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub id: EntryId,
    pub primary_name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternate_names: Vec<String>,
    pub point: GeoPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_class: Option<char>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub feature_code: String,
    pub population: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub country: String,
}

impl GazetteerEntry {
    pub fn new(id: EntryId, name: impl Into<String>, lat: f64, lon: f64, population: u64) -> Self {
        GazetteerEntry {
            id,
            primary_name: name.into(),
            alternate_names: Vec::new(),
            point: GeoPoint { lat, lon },
            feature_class: None,
            feature_code: String::new(),
            population,
            country: String::new(),
        }
    }

    pub fn with_alternates<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.alternate_names = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_country(mut self, country: impl Into<String>) -> Self {
        self.country = country.into();
        self
    }

    fn names(&self) -> impl Iterator<Item = (&str, bool)> {
        std::iter::once((self.primary_name.as_str(), true))
            .chain(self.alternate_names.iter().map(|n| (n.as_str(), false)))
    }

    fn check(&self) -> Result<(), SkipReason> {
        if self.primary_name.trim().is_empty() {
            return Err(SkipReason::EmptyName);
        }
        if !self.point.is_valid() {
            return Err(SkipReason::BadCoordinate);
        }
        Ok(())
    }
}

/// Trims, collapses internal whitespace, and lowercases a place name.
/// With `fold_diacritics`, combining marks are stripped after canonical
/// decomposition ("São Paulo" becomes "sao paulo").
pub fn normalize_name(name: &str, fold_diacritics: bool) -> String {
    let mut collapsed = String::with_capacity(name.len());
    for word in name.split_whitespace() {
        if !collapsed.is_empty() {
            collapsed.push(' ');
        }
        collapsed.push_str(word);
    }
    let lowered = collapsed.to_lowercase();
    if fold_diacritics {
        lowered
            .nfd()
            .filter(|c| !is_combining_mark(*c))
            .nfc()
            .collect()
    } else {
        lowered
    }
}

/// Zero-based column positions for a tab-separated place table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub id: usize,
    pub name: usize,
    #[serde(default)]
    pub alternates: Option<usize>,
    pub lat: usize,
    pub lon: usize,
    #[serde(default)]
    pub population: Option<usize>,
    #[serde(default)]
    pub feature_class: Option<usize>,
    #[serde(default)]
    pub feature_code: Option<usize>,
    #[serde(default)]
    pub country: Option<usize>,
    /// Skip the first line of the file.
    #[serde(default)]
    pub header: bool,
}

impl ColumnMap {
    pub fn geonames() -> Self {
        ColumnMap {
            id: 0,
            name: 1,
            alternates: Some(3),
            lat: 4,
            lon: 5,
            population: Some(14),
            feature_class: Some(6),
            feature_code: Some(7),
            country: Some(8),
            header: false,
        }
    }

    fn min_columns(&self) -> usize {
        [
            Some(self.id),
            Some(self.name),
            self.alternates,
            Some(self.lat),
            Some(self.lon),
            self.population,
            self.feature_class,
            self.feature_code,
            self.country,
        ]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0)
            + 1
    }

    pub fn from_json_file(path: &Path) -> Result<Self, GazetteerError> {
        let raw = std::fs::read_to_string(path).map_err(|source| GazetteerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&raw).map_err(|e| GazetteerError::Schema(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    GeoNames,
    Custom(ColumnMap),
}

impl Schema {
    fn columns(&self) -> ColumnMap {
        match self {
            Schema::GeoNames => ColumnMap::geonames(),
            Schema::Custom(map) => map.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazetteerOptions {
    #[serde(default)]
    pub fold_diacritics: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    TooFewColumns,
    InvalidUtf8,
    BadId,
    EmptyName,
    BadCoordinate,
    BadPopulation,
    DuplicateId,
}

/// Tally of rows read and rows rejected during ingest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestDiagnostics {
    pub rows_read: usize,
    pub entries: usize,
    pub skipped: BTreeMap<SkipReason, usize>,
}

impl IngestDiagnostics {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    fn skip(&mut self, reason: SkipReason) {
        *self.skipped.entry(reason).or_default() += 1;
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GazetteerError {
    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid column map: {0}")]
    Schema(String),
    #[error("{} contains no valid rows ({} skipped)", path.display(), diagnostics.skipped_total())]
    NoValidRows {
        path: PathBuf,
        diagnostics: IngestDiagnostics,
    },
    #[error("entry {id} rejected: {reason:?}")]
    InvalidEntry { id: EntryId, reason: SkipReason },
    #[error("malformed index file {}: {message}", path.display())]
    Index { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Posting {
    entry: u32,
    primary: bool,
}

/// Immutable place table with postings from normalized names to entries.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    /// Sorted by id, ids unique.
    entries: Vec<GazetteerEntry>,
    index: HashMap<String, Vec<Posting>>,
    options: GazetteerOptions,
    digest: String,
}

impl Gazetteer {
    /// Builds a gazetteer from in-memory entries, rejecting invalid or
    /// duplicate records.
    pub fn from_entries(
        mut entries: Vec<GazetteerEntry>,
        options: GazetteerOptions,
    ) -> Result<Self, GazetteerError> {
        for entry in &entries {
            entry
                .check()
                .map_err(|reason| GazetteerError::InvalidEntry {
                    id: entry.id,
                    reason,
                })?;
        }
        entries.sort_by_key(|e| e.id);
        if let Some(pair) = entries.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(GazetteerError::InvalidEntry {
                id: pair[0].id,
                reason: SkipReason::DuplicateId,
            });
        }
        let mut hasher = Sha256::new();
        hasher.update(format!("entries;fold={}\n", options.fold_diacritics));
        for entry in &entries {
            hasher.update(serde_json::to_vec(entry).expect("entries serialize"));
            hasher.update(b"\n");
        }
        Ok(Self::assemble(
            entries,
            options,
            hex::encode(hasher.finalize()),
        ))
    }

    /// `entries` must already be sorted by unique id and individually valid.
    fn assemble(entries: Vec<GazetteerEntry>, options: GazetteerOptions, digest: String) -> Self {
        assert!(entries.len() <= u32::MAX as usize, "gazetteer too large");
        let mut index: HashMap<String, Vec<Posting>> = HashMap::new();
        for (pos, entry) in entries.iter().enumerate() {
            let pos = pos as u32;
            for (name, primary) in entry.names() {
                let key = normalize_name(name, options.fold_diacritics);
                if key.is_empty() {
                    continue;
                }
                let postings = index.entry(key).or_default();
                match postings.last_mut() {
                    Some(last) if last.entry == pos => last.primary |= primary,
                    _ => postings.push(Posting {
                        entry: pos,
                        primary,
                    }),
                }
            }
        }
        Gazetteer {
            entries,
            index,
            options,
            digest,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All entries in ascending id order.
    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn entry(&self, id: EntryId) -> Option<&GazetteerEntry> {
        self.entries
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|pos| &self.entries[pos])
    }

    pub fn options(&self) -> GazetteerOptions {
        self.options
    }

    /// Content digest of the source table and build options.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn normalize(&self, name: &str) -> String {
        normalize_name(name, self.options.fold_diacritics)
    }

    /// Entries whose primary or alternate name normalizes to the same key as
    /// `name`, in ascending id order.
    pub fn lookup(&self, name: &str) -> Vec<&GazetteerEntry> {
        self.lookup_filtered(name, false)
    }

    /// Like [`lookup`](Self::lookup), restricted to primary names.
    pub fn lookup_primary(&self, name: &str) -> Vec<&GazetteerEntry> {
        self.lookup_filtered(name, true)
    }

    pub fn lookup_filtered(&self, name: &str, primary_only: bool) -> Vec<&GazetteerEntry> {
        self.postings(&self.normalize(name))
            .iter()
            .filter(|p| p.primary || !primary_only)
            .map(|p| &self.entries[p.entry as usize])
            .collect()
    }

    /// Whether a pre-normalized key has any candidate.
    pub fn contains_key(&self, key: &str, primary_only: bool) -> bool {
        self.postings(key)
            .iter()
            .any(|p| p.primary || !primary_only)
    }

    fn postings(&self, key: &str) -> &[Posting] {
        self.index.get(key).map(Vec::as_slice).unwrap_or_default()
    }

    /// Writes the entries as JSON lines behind a one-line header; see
    /// [`Gazetteer::load_index`].
    pub fn save_index(&self, path: &Path) -> Result<(), GazetteerError> {
        let io_err = |source| GazetteerError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        let header = IndexHeader {
            format: INDEX_FORMAT.to_string(),
            fold_diacritics: self.options.fold_diacritics,
            digest: self.digest.clone(),
            entries: self.entries.len(),
        };
        serde_json::to_writer(&mut out, &header).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
        for entry in &self.entries {
            serde_json::to_writer(&mut out, entry).map_err(|e| io_err(e.into()))?;
            out.write_all(b"\n").map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }

    pub fn load_index(path: &Path) -> Result<Self, GazetteerError> {
        let io_err = |source| GazetteerError::Io {
            path: path.to_path_buf(),
            source,
        };
        let bad = |message: String| GazetteerError::Index {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = BufReader::new(File::open(path).map_err(io_err)?).lines();
        let header: IndexHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line.map_err(io_err)?)
                .map_err(|e| bad(format!("header: {e}")))?,
            None => return Err(bad("empty file".into())),
        };
        if header.format != INDEX_FORMAT {
            return Err(bad(format!("unknown format {:?}", header.format)));
        }
        let mut entries = Vec::with_capacity(header.entries);
        for (n, line) in lines.enumerate() {
            let line = line.map_err(io_err)?;
            let entry: GazetteerEntry =
                serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
            entry
                .check()
                .map_err(|reason| bad(format!("entry {}: {reason:?}", entry.id)))?;
            entries.push(entry);
        }
        if entries.len() != header.entries {
            return Err(bad(format!(
                "header declares {} entries, found {}",
                header.entries,
                entries.len()
            )));
        }
        if entries.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(bad("entries not in strictly ascending id order".into()));
        }
        let options = GazetteerOptions {
            fold_diacritics: header.fold_diacritics,
        };
        Ok(Self::assemble(entries, options, header.digest))
    }
}

const INDEX_FORMAT: &str = "geobench-gazetteer-index/1";

#[derive(Debug, Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    fold_diacritics: bool,
    digest: String,
    entries: usize,
}

/// Reads a tab-separated place table. Rows that violate field constraints
/// are skipped and tallied; the first occurrence of a repeated id wins.
pub fn ingest_gazetteer(
    path: &Path,
    schema: &Schema,
    options: GazetteerOptions,
) -> Result<(Gazetteer, IngestDiagnostics), GazetteerError> {
    let io_err = |source| GazetteerError::Io {
        path: path.to_path_buf(),
        source,
    };
    let columns = schema.columns();
    let min_columns = columns.min_columns();
    let mut reader = BufReader::with_capacity(1 << 20, File::open(path).map_err(io_err)?);
    let mut hasher = Sha256::new();
    hasher.update(format!("{schema:?};fold={}\n", options.fold_diacritics));

    let mut diagnostics = IngestDiagnostics::default();
    let mut entries = Vec::new();
    let mut raw = Vec::new();
    let mut first = true;
    loop {
        raw.clear();
        if reader.read_until(b'\n', &mut raw).map_err(io_err)? == 0 {
            break;
        }
        hasher.update(&raw);
        if std::mem::take(&mut first) && columns.header {
            continue;
        }
        let line = match std::str::from_utf8(&raw) {
            Ok(line) => line.trim_end_matches(['\n', '\r']),
            Err(_) => {
                diagnostics.rows_read += 1;
                diagnostics.skip(SkipReason::InvalidUtf8);
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        diagnostics.rows_read += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        match parse_row(&fields, &columns, min_columns) {
            Ok(entry) => entries.push(entry),
            Err(reason) => diagnostics.skip(reason),
        }
    }

    entries.sort_by_key(|e| e.id);
    let before = entries.len();
    entries.dedup_by_key(|e| e.id);
    for _ in entries.len()..before {
        diagnostics.skip(SkipReason::DuplicateId);
    }
    diagnostics.entries = entries.len();
    if entries.is_empty() {
        return Err(GazetteerError::NoValidRows {
            path: path.to_path_buf(),
            diagnostics,
        });
    }
    let digest = hex::encode(hasher.finalize());
    Ok((Gazetteer::assemble(entries, options, digest), diagnostics))
}

fn parse_row(
    fields: &[&str],
    columns: &ColumnMap,
    min_columns: usize,
) -> Result<GazetteerEntry, SkipReason> {
    if fields.len() < min_columns {
        return Err(SkipReason::TooFewColumns);
    }
    let field = |idx: Option<usize>| idx.map(|i| fields[i].trim()).unwrap_or("");
    let id = fields[columns.id]
        .trim()
        .parse::<EntryId>()
        .map_err(|_| SkipReason::BadId)?;
    let coordinate = |i: usize| {
        fields[i]
            .trim()
            .parse::<f64>()
            .map_err(|_| SkipReason::BadCoordinate)
    };
    let point = GeoPoint {
        lat: coordinate(columns.lat)?,
        lon: coordinate(columns.lon)?,
    };
    let population = match field(columns.population) {
        "" => 0,
        raw => raw.parse::<u64>().map_err(|_| SkipReason::BadPopulation)?,
    };
    let alternate_names = match field(columns.alternates) {
        "" => Vec::new(),
        raw => raw
            .split(',')
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .map(str::to_string)
            .collect(),
    };
    let entry = GazetteerEntry {
        id,
        primary_name: fields[columns.name].trim().to_string(),
        alternate_names,
        point,
        feature_class: field(columns.feature_class).chars().next(),
        feature_code: field(columns.feature_code).to_string(),
        population,
        country: field(columns.country).to_string(),
    };
    entry.check()?;
    Ok(entry)
}
