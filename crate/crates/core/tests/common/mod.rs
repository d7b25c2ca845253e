// Fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use geobench::corpus::{Completeness, Corpus, Document, GoldToponym};
use geobench::gazetteer::GazetteerEntry;

/// Invented place names that collide with nothing else in the fixture text.
pub const PLACES: [&str; 24] = [
    "Brenvale",
    "Korrith",
    "Port Eldmere",
    "Quillharrow",
    "Ålbrück",
    "Saint Veyra",
    "Dunmarrow",
    "Tessaly Cross",
    "Orvanne",
    "Hollowmere",
    "Zarketh",
    "Vellington Bay",
    "Ismoor",
    "Cradlestone",
    "Nyxhaven",
    "Ruvelle",
    "Østerkamp",
    "Gallowreach",
    "Marrowick",
    "Upper Thessel",
    "Pellgrave",
    "Idrisford",
    "Caer Lunn",
    "Wyndspire",
];

const TEMPLATES: [&str; 5] = [
    "Travellers left {} at dawn and reached {} before the storms.",
    "Officials in {} said the bridge to {} would stay closed.",
    "Yesterday a market opened between {} and {}, traders said.",
    "Rain fell across {} while {} stayed dry all week.",
    "Buses from {} to {} were delayed by snow.",
];

pub fn place_point(i: usize) -> (f64, f64) {
    let lat = -60.0 + (i as f64 * 37.3) % 120.0;
    let lon = -170.0 + (i as f64 * 71.9) % 340.0;
    (lat, lon)
}

pub fn place_entries() -> Vec<GazetteerEntry> {
    PLACES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let (lat, lon) = place_point(i);
            GazetteerEntry::new(1000 + i as u64, *name, lat, lon, 10_000 + 137 * i as u64)
        })
        .collect()
}

/// Fills `template` with names and records gold spans in scalar offsets.
fn fill(id: String, template: &str, names: &[usize]) -> Document {
    let mut text = String::new();
    let mut gold = Vec::new();
    let mut pieces = template.split("{}");
    text.push_str(pieces.next().unwrap());
    for (&place, rest) in names.iter().zip(pieces) {
        let start = text.chars().count();
        text.push_str(PLACES[place]);
        let end = text.chars().count();
        let (lat, lon) = place_point(place);
        gold.push(GoldToponym::new(start, end, PLACES[place]).with_point(lat, lon));
        text.push_str(rest);
    }
    Document::new(id, text).with_gold(gold)
}

/// `n` documents, each mentioning two planted places.
pub fn planted_corpus(name: &str, n: usize) -> Corpus {
    let mut corpus = Corpus::new(name, Completeness::Complete);
    corpus.documents = (0..n)
        .map(|i| {
            let a = (i * 7) % PLACES.len();
            let b = (i * 7 + 5) % PLACES.len();
            fill(
                format!("doc-{i:04}"),
                TEMPLATES[i % TEMPLATES.len()],
                &[a, b],
            )
        })
        .collect();
    corpus
}

pub fn geonames_row(e: &GazetteerEntry) -> String {
    let mut cols = vec![String::new(); 19];
    cols[0] = e.id.to_string();
    cols[1] = e.primary_name.clone();
    cols[2] = e.primary_name.clone();
    cols[3] = e.alternate_names.join(",");
    cols[4] = e.point.lat.to_string();
    cols[5] = e.point.lon.to_string();
    cols[6] = "P".into();
    cols[7] = "PPL".into();
    cols[8] = e.country.clone();
    cols[14] = e.population.to_string();
    cols.join("\t")
}

pub fn write_geonames(path: &Path, entries: &[GazetteerEntry]) {
    let mut out = BufWriter::new(fs::File::create(path).unwrap());
    for e in entries {
        writeln!(out, "{}", geonames_row(e)).unwrap();
    }
    out.flush().unwrap();
}
