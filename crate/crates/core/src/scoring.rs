//! Non-monotonicity scores and the easy / hard / compatible / non-monotone
//! taxonomy of accuracy profiles.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{ProfileCurve, ProfileError, ProfileKind, Profiler};

pub const DEFAULT_NMONO_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("need at least 2 curve values, got {0}")]
    TooShort(usize),
    #[error("taxonomy needs an accuracy profile, got {0:?}")]
    WrongKind(ProfileKind),
    #[error("threshold must be a non-negative number, got {0}")]
    Threshold(f64),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Total negative variation: the sum of all drops between consecutive values.
pub fn nmono_values(values: &[f64]) -> Result<f64, ScoringError> {
    if values.len() < 2 {
        return Err(ScoringError::TooShort(values.len()));
    }
    Ok(values.windows(2).map(|w| (w[0] - w[1]).max(0.0)).sum())
}

pub fn nmono(curve: &ProfileCurve) -> Result<f64, ScoringError> {
    nmono_values(curve.values())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Taxon {
    Easy,
    Hard,
    Compatible,
    NonMonotone,
}

impl Taxon {
    pub const ALL: [Taxon; 4] = [Taxon::Easy, Taxon::Hard, Taxon::Compatible, Taxon::NonMonotone];
}

impl fmt::Display for Taxon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Taxon::Easy => "easy",
            Taxon::Hard => "hard",
            Taxon::Compatible => "compatible",
            Taxon::NonMonotone => "non_monotone",
        })
    }
}

/// Root-mean-square distances to the three template curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateDistances {
    pub easy: f64,
    pub hard: f64,
    pub compatible: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyLabel {
    pub label: Taxon,
    pub nmono: f64,
    pub distances: TemplateDistances,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyConfig {
    pub nmono_threshold: f64,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        Self {
            nmono_threshold: DEFAULT_NMONO_THRESHOLD,
        }
    }
}

impl TaxonomyConfig {
    pub fn new(nmono_threshold: f64) -> Result<Self, ScoringError> {
        if !(nmono_threshold >= 0.0) || !nmono_threshold.is_finite() {
            return Err(ScoringError::Threshold(nmono_threshold));
        }
        Ok(Self { nmono_threshold })
    }
}

fn rms(values: &[f64], grid: &[f64], template: impl Fn(f64) -> f64) -> f64 {
    let sum: f64 = values
        .iter()
        .zip(grid)
        .map(|(v, &p)| (v - template(p)).powi(2))
        .sum();
    (sum / values.len() as f64).sqrt()
}

/// Non-monotone above the threshold, otherwise the nearest template
/// (`f = 1` easy, `f = 0` hard, `f = p` compatible). Ties prefer
/// compatible, then easy, then hard.
pub fn classify(curve: &ProfileCurve, cfg: &TaxonomyConfig) -> Result<TaxonomyLabel, ScoringError> {
    if curve.kind() != ProfileKind::Accuracy {
        return Err(ScoringError::WrongKind(curve.kind()));
    }
    let score = nmono(curve)?;
    let (values, grid) = (curve.values(), curve.grid().points());
    let distances = TemplateDistances {
        easy: rms(values, grid, |_| 1.0),
        hard: rms(values, grid, |_| 0.0),
        compatible: rms(values, grid, |p| p),
    };
    let label = if score > cfg.nmono_threshold {
        Taxon::NonMonotone
    } else {
        [
            (Taxon::Compatible, distances.compatible),
            (Taxon::Easy, distances.easy),
            (Taxon::Hard, distances.hard),
        ]
        .into_iter()
        .fold((Taxon::Compatible, f64::INFINITY), |best, cand| {
            if cand.1 < best.1 {
                cand
            } else {
                best
            }
        })
        .0
    };
    Ok(TaxonomyLabel {
        label,
        nmono: score,
        distances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point_id: usize,
    #[serde(flatten)]
    pub label: TaxonomyLabel,
}

/// Per-point labels of a whole collection plus label counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub records: Vec<PointRecord>,
    pub counts: BTreeMap<Taxon, usize>,
}

impl Decomposition {
    pub fn count(&self, taxon: Taxon) -> usize {
        self.counts.get(&taxon).copied().unwrap_or(0)
    }

    /// `point_id,label,nmono,rms_easy,rms_hard,rms_compatible`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point_id,label,nmono,rms_easy,rms_hard,rms_compatible\n");
        for r in &self.records {
            let d = r.label.distances;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.point_id, r.label.label, r.label.nmono, d.easy, d.hard, d.compatible
            );
        }
        out
    }

    /// Counts keyed by label name, with all four labels present.
    pub fn summary_json(&self) -> serde_json::Value {
        let counts: serde_json::Map<String, serde_json::Value> = Taxon::ALL
            .iter()
            .map(|t| (t.to_string(), self.count(*t).into()))
            .collect();
        serde_json::json!({
            "num_points": self.records.len(),
            "counts": counts,
        })
    }
}

/// Classifies every point's accuracy profile.
pub fn decompose(profiler: &Profiler<'_>, cfg: &TaxonomyConfig) -> Result<Decomposition, ScoringError> {
    let records = (0..profiler.collection().num_points())
        .into_par_iter()
        .map(|point| {
            let curve = profiler.accuracy(point)?;
            Ok(PointRecord {
                point_id: point,
                label: classify(&curve, cfg)?,
            })
        })
        .collect::<Result<Vec<_>, ScoringError>>()?;
    let mut counts = BTreeMap::new();
    for r in &records {
        *counts.entry(r.label.label).or_insert(0) += 1;
    }
    Ok(Decomposition { records, counts })
}
