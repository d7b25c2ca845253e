//! Benchmarking harness for geoparsers.
//!
//! The crate loads annotated corpora and a place gazetteer, runs the
//! built-in lexicon baseline or external geoparsers over the corpora, and
//! scores the output with recognition metrics (precision, recall, F1,
//! accuracy) and resolution metrics (mean and median error distance,
//! accuracy within 161 km, and distance AUC).

pub mod corpus;
pub mod gazetteer;
pub mod geoparser;
pub mod harness;
pub mod metrics;
