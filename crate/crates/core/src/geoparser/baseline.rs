//! Dictionary-lookup recognizer and population-heuristic resolver.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use super::{AdapterError, Geoparser, PredictedToponym, WireToponym};
use crate::corpus::Document;
use crate::gazetteer::{Gazetteer, GazetteerEntry};

const DEFAULT_STOPLIST: &str = include_str!("../../data/stoplist.txt");

/// The bundled list of common words that collide with place names.
pub fn default_stoplist() -> BTreeSet<String> {
    DEFAULT_STOPLIST
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognizerConfig {
    /// Longest candidate name, in word tokens.
    pub max_ngram: usize,
    /// Only accept matches whose first token starts with an uppercase letter.
    pub require_capitalized: bool,
    /// Names never recognized; replaces the bundled list when given.
    pub stoplist: BTreeSet<String>,
    /// Additions to `stoplist`.
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    pub extra_stopwords: BTreeSet<String>,
    /// Match primary gazetteer names only, ignoring alternates.
    pub primary_names_only: bool,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            max_ngram: 5,
            require_capitalized: true,
            stoplist: default_stoplist(),
            extra_stopwords: BTreeSet::new(),
            primary_names_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizedSpan {
    pub start: usize,
    pub end: usize,
    pub name: String,
}

struct Token {
    char_start: usize,
    char_end: usize,
    byte_start: usize,
    byte_end: usize,
}

/// Word tokens by Unicode word boundaries; punctuation and whitespace
/// segments are not tokens.
fn word_tokens(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = 0;
    for (byte_start, segment) in text.split_word_bound_indices() {
        let len = segment.chars().count();
        if segment.chars().any(char::is_alphanumeric) {
            tokens.push(Token {
                char_start: chars,
                char_end: chars + len,
                byte_start,
                byte_end: byte_start + segment.len(),
            });
        }
        chars += len;
    }
    tokens
}

/// Finds gazetteer names in the text by longest match, scanning left to right.
///
/// At each token the longest n-gram (up to `max_ngram` tokens) whose
/// normalized text has a gazetteer entry and is not a stopword wins; the scan
/// then resumes after it. Spans come out sorted and non-overlapping.
pub fn recognize_lexicon(
    doc: &Document,
    gazetteer: &Gazetteer,
    config: &RecognizerConfig,
) -> Vec<RecognizedSpan> {
    let stop: HashSet<String> = config
        .stoplist
        .iter()
        .chain(&config.extra_stopwords)
        .map(|w| gazetteer.normalize(w))
        .collect();
    let text = doc.text.as_str();
    let tokens = word_tokens(text);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let first = &tokens[i];
        let capitalized = text[first.byte_start..]
            .chars()
            .next()
            .is_some_and(char::is_uppercase);
        if config.require_capitalized && !capitalized {
            i += 1;
            continue;
        }
        let longest = config.max_ngram.min(tokens.len() - i);
        let found = (1..=longest).rev().find_map(|n| {
            let last = &tokens[i + n - 1];
            let surface = &text[first.byte_start..last.byte_end];
            let key = gazetteer.normalize(surface);
            (!stop.contains(&key) && gazetteer.contains_key(&key, config.primary_names_only))
                .then_some((n, surface))
        });
        match found {
            Some((n, surface)) => {
                spans.push(RecognizedSpan {
                    start: first.char_start,
                    end: tokens[i + n - 1].char_end,
                    name: surface.to_string(),
                });
                i += n;
            }
            None => i += 1,
        }
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no gazetteer candidate for {0:?}")]
pub struct NoCandidate(pub String);

/// Picks the most populous candidate; ties go to the smallest id.
pub fn resolve_population<'g>(
    name: &str,
    gazetteer: &'g Gazetteer,
) -> Result<&'g GazetteerEntry, NoCandidate> {
    resolve_population_filtered(name, gazetteer, false)
}

pub fn resolve_population_filtered<'g>(
    name: &str,
    gazetteer: &'g Gazetteer,
    primary_only: bool,
) -> Result<&'g GazetteerEntry, NoCandidate> {
    // Candidates arrive in ascending id order, so the first maximum wins ties.
    gazetteer
        .lookup_filtered(name, primary_only)
        .into_iter()
        .reduce(|best, e| {
            if e.population > best.population {
                e
            } else {
                best
            }
        })
        .ok_or_else(|| NoCandidate(name.to_string()))
}

/// Lexicon recognizer followed by the population resolver.
#[derive(Debug, Clone)]
pub struct Baseline {
    gazetteer: Arc<Gazetteer>,
    config: RecognizerConfig,
}

impl Baseline {
    pub fn new(gazetteer: Arc<Gazetteer>, config: RecognizerConfig) -> Self {
        Baseline { gazetteer, config }
    }

    pub fn predict(&self, doc: &Document) -> Vec<PredictedToponym> {
        recognize_lexicon(doc, &self.gazetteer, &self.config)
            .into_iter()
            .map(|span| {
                let entry = resolve_population_filtered(
                    &span.name,
                    &self.gazetteer,
                    self.config.primary_names_only,
                )
                .ok();
                PredictedToponym {
                    start: span.start,
                    end: span.end,
                    name: span.name,
                    point: entry.map(|e| e.point),
                    entry_id: entry.map(|e| e.id),
                }
            })
            .collect()
    }
}

impl Geoparser for Baseline {
    fn parse_raw(&mut self, doc: &Document) -> Result<Vec<WireToponym>, AdapterError> {
        Ok(self.predict(doc).iter().map(WireToponym::from).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gazetteer::GazetteerOptions;
    use proptest::prelude::*;

    fn gazetteer(entries: Vec<GazetteerEntry>) -> Gazetteer {
        Gazetteer::from_entries(entries, GazetteerOptions::default()).unwrap()
    }

    fn names(spans: &[RecognizedSpan]) -> Vec<(usize, usize, &str)> {
        spans
            .iter()
            .map(|s| (s.start, s.end, s.name.as_str()))
            .collect()
    }

    #[test]
    fn finds_berlin() {
        let gaz = gazetteer(vec![GazetteerEntry::new(1, "Berlin", 52.52, 13.405, 1)]);
        let doc = Document::new("d", "I visited Berlin yesterday");
        let spans = recognize_lexicon(&doc, &gaz, &RecognizerConfig::default());
        assert_eq!(names(&spans), [(10, 16, "Berlin")]);
    }

    #[test]
    fn capitalization_gate() {
        let gaz = gazetteer(vec![GazetteerEntry::new(
            1,
            "New York City",
            40.7,
            -74.0,
            1,
        )]);
        let doc = Document::new("d", "new york city");
        assert!(recognize_lexicon(&doc, &gaz, &RecognizerConfig::default()).is_empty());
        let relaxed = RecognizerConfig {
            require_capitalized: false,
            ..RecognizerConfig::default()
        };
        assert_eq!(
            names(&recognize_lexicon(&doc, &gaz, &relaxed)),
            [(0, 13, "new york city")]
        );
    }

    #[test]
    fn longest_match_wins() {
        let gaz = gazetteer(vec![
            GazetteerEntry::new(1, "York", 53.96, -1.08, 1),
            GazetteerEntry::new(2, "New York", 40.7, -74.0, 1),
        ]);
        let doc = Document::new("d", "in New York today");
        let spans = recognize_lexicon(&doc, &gaz, &RecognizerConfig::default());
        assert_eq!(names(&spans), [(3, 11, "New York")]);
    }

    #[test]
    fn max_ngram_limits_match_length() {
        let gaz = gazetteer(vec![
            GazetteerEntry::new(1, "York", 53.96, -1.08, 1),
            GazetteerEntry::new(2, "New York", 40.7, -74.0, 1),
        ]);
        let doc = Document::new("d", "New York");
        let one = RecognizerConfig {
            max_ngram: 1,
            ..RecognizerConfig::default()
        };
        assert_eq!(
            names(&recognize_lexicon(&doc, &gaz, &one)),
            [(4, 8, "York")]
        );
    }

    #[test]
    fn stoplist_and_alternates() {
        let gaz = gazetteer(vec![
            GazetteerEntry::new(1, "Of", 40.9, 40.3, 10_000),
            GazetteerEntry::new(2, "Mumbai", 19.07, 72.88, 12_000_000).with_alternates(["Bombay"]),
        ]);
        let doc = Document::new("d", "Of course Bombay is big");
        let default = RecognizerConfig::default();
        assert_eq!(
            names(&recognize_lexicon(&doc, &gaz, &default)),
            [(10, 16, "Bombay")]
        );

        let primary = RecognizerConfig {
            primary_names_only: true,
            ..RecognizerConfig::default()
        };
        assert!(recognize_lexicon(&doc, &gaz, &primary).is_empty());

        let extended = RecognizerConfig {
            extra_stopwords: ["BOMBAY".to_string()].into(),
            ..RecognizerConfig::default()
        };
        assert!(recognize_lexicon(&doc, &gaz, &extended).is_empty());
    }

    #[test]
    fn multi_word_names_span_punctuation_and_unicode() {
        let gaz = gazetteer(vec![
            GazetteerEntry::new(1, "São Paulo", -23.55, -46.63, 1),
            GazetteerEntry::new(2, "Stratford-upon-Avon", 52.19, -1.71, 1),
        ]);
        let doc = Document::new("d", "Von São  Paulo nach Stratford-upon-Avon.");
        let spans = recognize_lexicon(&doc, &gaz, &RecognizerConfig::default());
        assert_eq!(
            names(&spans),
            [(4, 14, "São  Paulo"), (20, 39, "Stratford-upon-Avon")]
        );
    }

    #[test]
    fn resolver_examples() {
        let gaz = gazetteer(vec![
            GazetteerEntry::new(2988507, "Paris", 48.85, 2.35, 2_140_000).with_country("FR"),
            GazetteerEntry::new(4717560, "Paris", 33.66, -95.56, 25_000).with_country("US"),
            GazetteerEntry::new(42, "Twin", 0.0, 0.0, 0),
            GazetteerEntry::new(7, "Twin", 1.0, 1.0, 0),
        ]);
        assert_eq!(resolve_population("Paris", &gaz).unwrap().country, "FR");
        assert_eq!(
            resolve_population("Atlantis", &gaz),
            Err(NoCandidate("Atlantis".into()))
        );
        assert_eq!(resolve_population("twin", &gaz).unwrap().id, 7);
    }

    fn arb_gazetteer() -> impl Strategy<Value = Gazetteer> {
        let names = prop::sample::select(vec![
            "Alpha",
            "Beta",
            "Alpha Beta",
            "Gamma",
            "Delta Gamma",
            "Beta Gamma Delta",
            "Of",
        ]);
        prop::collection::vec((names, 0u64..1000), 1..8).prop_map(|rows| {
            gazetteer(
                rows.into_iter()
                    .enumerate()
                    .map(|(i, (n, pop))| GazetteerEntry::new(i as u64, n, 0.0, 0.0, pop))
                    .collect(),
            )
        })
    }

    fn arb_text() -> impl Strategy<Value = String> {
        let words = prop::sample::select(vec![
            "Alpha",
            "alpha",
            "Beta",
            "Gamma",
            "Delta",
            "Of",
            "the",
            ",",
            "x",
            "Beta-Gamma",
        ]);
        prop::collection::vec(words, 0..20).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn spans_sorted_disjoint_and_known(gaz in arb_gazetteer(), text in arb_text(), caps in any::<bool>(), n in 1usize..5) {
            let config = RecognizerConfig { require_capitalized: caps, max_ngram: n, ..RecognizerConfig::default() };
            let doc = Document::new("d", text);
            let spans = recognize_lexicon(&doc, &gaz, &config);
            for pair in spans.windows(2) {
                prop_assert!(pair[0].end <= pair[1].start);
            }
            let chars: Vec<char> = doc.text.chars().collect();
            for s in &spans {
                prop_assert!(!gaz.lookup(&s.name).is_empty());
                let slice: String = chars[s.start..s.end].iter().collect();
                prop_assert_eq!(&slice, &s.name);
            }
            prop_assert_eq!(&spans, &recognize_lexicon(&doc, &gaz, &config));
        }

        #[test]
        fn resolver_returns_argmax(gaz in arb_gazetteer(), pick in any::<prop::sample::Index>()) {
            let entry = &gaz.entries()[pick.index(gaz.len())];
            let best = resolve_population(&entry.primary_name, &gaz).unwrap();
            for other in gaz.lookup(&entry.primary_name) {
                prop_assert!(best.population >= other.population);
                if other.population == best.population {
                    prop_assert!(best.id <= other.id);
                }
            }
        }
    }
}
