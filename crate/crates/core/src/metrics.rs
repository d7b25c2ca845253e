//! Span alignment and the eight evaluation metrics.
//!
//! Recognition is scored by aligning predicted spans with gold spans
//! (precision, recall, F1, and accuracy over annotated toponyms).
//! Resolution is scored only over aligned pairs, by great-circle error
//! distance: mean, median, fraction within a threshold (161 km by
//! default), and a log-scaled distance AUC.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Completeness, GeoPoint, GoldToponym};

/// A span of text with an optional location, on either side of an alignment.
pub trait Mention {
    fn span(&self) -> (usize, usize);
    fn point(&self) -> Option<GeoPoint>;
}

impl Mention for GoldToponym {
    fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    fn point(&self) -> Option<GeoPoint> {
        self.point
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Exact,
    Overlap,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Exact => "exact",
            MatchMode::Overlap => "overlap",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub match_mode: MatchMode,
    pub threshold_km: f64,
    pub d_max_km: f64,
    pub earth_radius_km: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            match_mode: MatchMode::Exact,
            threshold_km: 161.0,
            d_max_km: 20039.0,
            earth_radius_km: 6371.0088,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.threshold_km) {
            return Err(MetricsError::Config("threshold_km must be positive"));
        }
        if !ok(self.d_max_km) || self.d_max_km <= self.threshold_km {
            return Err(MetricsError::Config("d_max_km must exceed threshold_km"));
        }
        if !ok(self.earth_radius_km) {
            return Err(MetricsError::Config("earth_radius_km must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("{side} spans are not sorted by (start, end) at index {index}")]
    Unsorted { side: &'static str, index: usize },
    #[error("invalid metrics config: {0}")]
    Config(&'static str),
}

/// Degenerate inputs are scored, not rejected; each one leaves a warning.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricWarning {
    NoPredictions,
    NoGold,
    NoDistances,
    DistancesClamped { count: usize, d_max_km: f64 },
    GoldPointMissing { count: usize },
}

impl MetricWarning {
    pub fn code(&self) -> &'static str {
        match self {
            MetricWarning::NoPredictions => "no_predictions",
            MetricWarning::NoGold => "no_gold",
            MetricWarning::NoDistances => "no_distances",
            MetricWarning::DistancesClamped { .. } => "distance_clamped",
            MetricWarning::GoldPointMissing { .. } => "gold_point_missing",
        }
    }
}

impl fmt::Display for MetricWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.code())?;
        match self {
            MetricWarning::NoPredictions => f.write_str("no predictions; precision set to 0"),
            MetricWarning::NoGold => f.write_str("no gold toponyms; recall set to 0"),
            MetricWarning::NoDistances => {
                f.write_str("no resolved matches; distance metrics absent")
            }
            MetricWarning::DistancesClamped { count, d_max_km } => {
                write!(f, "{count} distances above {d_max_km} km clamped for auc")
            }
            MetricWarning::GoldPointMissing { count } => {
                write!(f, "{count} matched gold toponyms lack coordinates")
            }
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored<T> {
    pub value: T,
    pub warnings: Vec<MetricWarning>,
}

impl<T> Scored<T> {
    fn clean(value: T) -> Self {
        Scored {
            value,
            warnings: Vec::new(),
        }
    }
}

/// One-to-one alignment between gold and predicted spans, by index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    /// Sorted by gold index.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_gold: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

impl Matching {
    fn from_pairs(mut pairs: Vec<(usize, usize)>, n_gold: usize, n_pred: usize) -> Self {
        pairs.sort_unstable();
        let mut gold_used = vec![false; n_gold];
        let mut pred_used = vec![false; n_pred];
        for &(g, p) in &pairs {
            gold_used[g] = true;
            pred_used[p] = true;
        }
        let unused = |used: Vec<bool>| {
            used.iter()
                .enumerate()
                .filter(|(_, u)| !**u)
                .map(|(i, _)| i)
                .collect()
        };
        Matching {
            pairs,
            unmatched_gold: unused(gold_used),
            unmatched_pred: unused(pred_used),
        }
    }

    pub fn gold_count(&self) -> usize {
        self.pairs.len() + self.unmatched_gold.len()
    }

    pub fn pred_count(&self) -> usize {
        self.pairs.len() + self.unmatched_pred.len()
    }
}

fn check_sorted<M: Mention>(spans: &[M], side: &'static str) -> Result<(), MetricsError> {
    match spans.windows(2).position(|w| w[0].span() > w[1].span()) {
        Some(i) => Err(MetricsError::Unsorted { side, index: i + 1 }),
        None => Ok(()),
    }
}

/// Aligns gold and predicted spans; both lists must be sorted by (start, end).
///
/// Exact mode pairs identical spans. Overlap mode finds a maximum-cardinality
/// matching over intersecting spans and, among those, the lexicographically
/// smallest pair list.
pub fn align<G: Mention, P: Mention>(
    gold: &[G],
    pred: &[P],
    mode: MatchMode,
) -> Result<Matching, MetricsError> {
    check_sorted(gold, "gold")?;
    check_sorted(pred, "predicted")?;
    let pairs = match mode {
        MatchMode::Exact => exact_pairs(gold, pred),
        MatchMode::Overlap => overlap_pairs(gold, pred),
    };
    Ok(Matching::from_pairs(pairs, gold.len(), pred.len()))
}

fn exact_pairs<G: Mention, P: Mention>(gold: &[G], pred: &[P]) -> Vec<(usize, usize)> {
    let (mut g, mut p) = (0, 0);
    let mut pairs = Vec::new();
    while g < gold.len() && p < pred.len() {
        match gold[g].span().cmp(&pred[p].span()) {
            std::cmp::Ordering::Less => g += 1,
            std::cmp::Ordering::Greater => p += 1,
            std::cmp::Ordering::Equal => {
                pairs.push((g, p));
                g += 1;
                p += 1;
            }
        }
    }
    pairs
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

fn overlap_pairs<G: Mention, P: Mention>(gold: &[G], pred: &[P]) -> Vec<(usize, usize)> {
    let adj: Vec<Vec<usize>> = gold
        .iter()
        .map(|g| {
            let gs = g.span();
            pred.iter()
                .enumerate()
                .take_while(|(_, p)| p.span().0 < gs.1)
                .filter(|(_, p)| overlaps(gs, p.span()))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let mut pairs = Vec::new();
    for component in components(&adj, pred.len()) {
        pairs.extend(lexicographic_max_matching(&adj, &component, pred.len()));
    }
    pairs
}

/// Connected components of the bipartite overlap graph, as sorted gold index lists.
fn components(adj: &[Vec<usize>], n_pred: usize) -> Vec<Vec<usize>> {
    let mut pred_to_gold: Vec<Vec<usize>> = vec![Vec::new(); n_pred];
    for (g, preds) in adj.iter().enumerate() {
        for &p in preds {
            pred_to_gold[p].push(g);
        }
    }
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for start in 0..adj.len() {
        if seen[start] || adj[start].is_empty() {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(g) = stack.pop() {
            members.push(g);
            for &p in &adj[g] {
                for &other in &pred_to_gold[p] {
                    if !seen[other] {
                        seen[other] = true;
                        stack.push(other);
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Kuhn's augmenting-path matching restricted to `golds`, skipping blocked predictions.
fn max_matching_size(adj: &[Vec<usize>], golds: &[usize], blocked: &[bool]) -> usize {
    fn augment(
        g: usize,
        adj: &[Vec<usize>],
        blocked: &[bool],
        owner: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &p in &adj[g] {
            if blocked[p] || visited[p] {
                continue;
            }
            visited[p] = true;
            if owner[p].is_none_or(|o| augment(o, adj, blocked, owner, visited)) {
                owner[p] = Some(g);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; blocked.len()];
    let mut size = 0;
    for &g in golds {
        let mut visited = vec![false; blocked.len()];
        if augment(g, adj, blocked, &mut owner, &mut visited) {
            size += 1;
        }
    }
    size
}

fn lexicographic_max_matching(
    adj: &[Vec<usize>],
    golds: &[usize],
    n_pred: usize,
) -> Vec<(usize, usize)> {
    let mut blocked = vec![false; n_pred];
    let target = max_matching_size(adj, golds, &blocked);
    let mut pairs = Vec::new();
    for (k, &g) in golds.iter().enumerate() {
        if pairs.len() == target {
            break;
        }
        for &p in &adj[g] {
            if blocked[p] {
                continue;
            }
            blocked[p] = true;
            if pairs.len() + 1 + max_matching_size(adj, &golds[k + 1..], &blocked) == target {
                pairs.push((g, p));
                break;
            }
            blocked[p] = false;
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

pub fn precision_recall_f1(m: &Matching) -> Scored<Prf> {
    prf_from_counts(m.pairs.len(), m.gold_count(), m.pred_count())
}

/// Precision, recall and F1 from pooled counts.
pub fn prf_from_counts(matched: usize, gold: usize, predicted: usize) -> Scored<Prf> {
    let mut warnings = Vec::new();
    let precision = if predicted == 0 {
        warnings.push(MetricWarning::NoPredictions);
        0.0
    } else {
        matched as f64 / predicted as f64
    };
    let recall = if gold == 0 {
        warnings.push(MetricWarning::NoGold);
        0.0
    } else {
        matched as f64 / gold as f64
    };
    let f_score = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scored {
        value: Prf {
            precision,
            recall,
            f_score,
        },
        warnings,
    }
}

/// Share of annotated toponyms that were recognized.
pub fn recognition_accuracy(m: &Matching) -> Scored<f64> {
    accuracy_from_counts(m.pairs.len(), m.gold_count())
}

pub fn accuracy_from_counts(matched: usize, gold: usize) -> Scored<f64> {
    if gold == 0 {
        Scored {
            value: 0.0,
            warnings: vec![MetricWarning::NoGold],
        }
    } else {
        Scored::clean(matched as f64 / gold as f64)
    }
}

/// Haversine great-circle distance on a sphere, in the unit of `radius_km`.
pub fn geodesic_distance(a: GeoPoint, b: GeoPoint, radius_km: f64) -> f64 {
    let (lat_a, lat_b) = (a.lat.to_radians(), b.lat.to_radians());
    let half_dlat = (lat_b - lat_a) / 2.0;
    let half_dlon = (b.lon - a.lon).to_radians() / 2.0;
    let h = half_dlat.sin().powi(2) + lat_a.cos() * lat_b.cos() * half_dlon.sin().powi(2);
    2.0 * radius_km * h.clamp(0.0, 1.0).sqrt().asin()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistanceErrors {
    /// One entry per pair where both sides have a point, in pair order.
    pub distances_km: Vec<f64>,
    /// Pairs whose prediction carries no point.
    pub unresolved_matched: usize,
    /// Pairs with a resolved prediction but no gold point.
    pub gold_point_missing: usize,
}

impl DistanceErrors {
    pub fn warnings(&self) -> Vec<MetricWarning> {
        if self.gold_point_missing > 0 {
            vec![MetricWarning::GoldPointMissing {
                count: self.gold_point_missing,
            }]
        } else {
            Vec::new()
        }
    }
}

pub fn distance_errors<G: Mention, P: Mention>(
    matching: &Matching,
    gold: &[G],
    pred: &[P],
    radius_km: f64,
) -> DistanceErrors {
    let mut out = DistanceErrors::default();
    for &(g, p) in &matching.pairs {
        match (gold[g].point(), pred[p].point()) {
            (_, None) => out.unresolved_matched += 1,
            (None, Some(_)) => out.gold_point_missing += 1,
            (Some(a), Some(b)) => out.distances_km.push(geodesic_distance(a, b, radius_km)),
        }
    }
    out
}

/// Arithmetic mean and median; `None` for an empty list.
pub fn mean_median(distances: &[f64]) -> Scored<Option<(f64, f64)>> {
    if distances.is_empty() {
        return Scored {
            value: None,
            warnings: vec![MetricWarning::NoDistances],
        };
    }
    let n = distances.len();
    let mean = distances.iter().sum::<f64>() / n as f64;
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Scored::clean(Some((mean, median)))
}

/// Fraction of distances at or below the threshold.
pub fn accuracy_at_threshold(distances: &[f64], threshold_km: f64) -> Option<f64> {
    if distances.is_empty() {
        return None;
    }
    let within = distances.iter().filter(|&&d| d <= threshold_km).count();
    Some(within as f64 / distances.len() as f64)
}

/// Mean of `ln(1 + d) / ln(1 + d_max)`: 0 when every error is zero, 1 when
/// every error is `d_max`. Distances above `d_max` are clamped.
pub fn auc_distance(distances: &[f64], d_max_km: f64) -> Scored<Option<f64>> {
    if distances.is_empty() {
        return Scored {
            value: None,
            warnings: vec![MetricWarning::NoDistances],
        };
    }
    let norm = d_max_km.ln_1p();
    let mut clamped = 0;
    let total: f64 = distances
        .iter()
        .map(|&d| {
            if d > d_max_km {
                clamped += 1;
            }
            d.clamp(0.0, d_max_km).ln_1p() / norm
        })
        .sum();
    let mut warnings = Vec::new();
    if clamped > 0 {
        warnings.push(MetricWarning::DistancesClamped {
            count: clamped,
            d_max_km,
        });
    }
    Scored {
        value: Some(total / distances.len() as f64),
        warnings,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub gold: usize,
    pub predicted: usize,
    pub matched: usize,
    pub resolved: usize,
    pub unresolved_matched: usize,
}

/// The conventions a report was computed under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub match_mode: MatchMode,
    pub threshold_km: f64,
    pub d_max_km: f64,
    pub earth_radius_km: f64,
    pub distance: String,
    pub auc_formula: String,
    pub aggregation: String,
}

impl From<&MetricsConfig> for ReportSettings {
    fn from(config: &MetricsConfig) -> Self {
        ReportSettings {
            match_mode: config.match_mode,
            threshold_km: config.threshold_km,
            d_max_km: config.d_max_km,
            earth_radius_km: config.earth_radius_km,
            distance: "haversine".into(),
            auc_formula: "mean(ln(1+d)/ln(1+d_max))".into(),
            aggregation: "micro".into(),
        }
    }
}

/// All metrics for one geoparser on one corpus.
///
/// Precision, recall and F1 are `None` on partially annotated corpora.
/// Distance metrics are `None` when no matched toponym was resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus: String,
    pub completeness: Completeness,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_score: Option<f64>,
    pub accuracy: Option<f64>,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub acc_at_161: Option<f64>,
    pub auc: Option<f64>,
    pub counts: Counts,
    pub settings: ReportSettings,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Computes every metric from pooled counts and the pooled distance list.
    pub fn compute(
        corpus: &str,
        completeness: Completeness,
        counts: Counts,
        errors: &DistanceErrors,
        config: &MetricsConfig,
        mut warnings: Vec<String>,
    ) -> Self {
        let mut note = |ws: Vec<MetricWarning>| warnings.extend(ws.iter().map(|w| w.to_string()));

        let (precision, recall, f_score) = match completeness {
            Completeness::Complete => {
                let prf = prf_from_counts(counts.matched, counts.gold, counts.predicted);
                note(prf.warnings);
                (
                    Some(prf.value.precision),
                    Some(prf.value.recall),
                    Some(prf.value.f_score),
                )
            }
            Completeness::Partial => (None, None, None),
        };
        let accuracy = accuracy_from_counts(counts.matched, counts.gold);
        if completeness == Completeness::Partial {
            note(accuracy.warnings);
        }

        note(errors.warnings());
        let distances = &errors.distances_km;
        let mm = mean_median(distances);
        note(mm.warnings);
        let auc = auc_distance(distances, config.d_max_km);
        note(
            auc.warnings
                .into_iter()
                .filter(|w| *w != MetricWarning::NoDistances)
                .collect(),
        );

        EvalReport {
            corpus: corpus.to_string(),
            completeness,
            precision,
            recall,
            f_score,
            accuracy: Some(accuracy.value),
            mean: mm.value.map(|(mean, _)| mean),
            median: mm.value.map(|(_, median)| median),
            acc_at_161: accuracy_at_threshold(distances, config.threshold_km),
            auc: auc.value,
            counts,
            settings: config.into(),
            warnings,
        }
    }
}
