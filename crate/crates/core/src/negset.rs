//! Construction of class-balanced, filtered, maximally non-monotone subsets
//! of a candidate pool, and the accuracy correlation they induce.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::logstore::RunCollection;
use crate::profile::{ProfileError, Profiler};
use crate::scoring::{nmono, ScoringError};

/// Accuracies are clamped to `[PROBIT_CLAMP, 1 − PROBIT_CLAMP]` before the
/// probit transform.
pub const PROBIT_CLAMP: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum NegSetError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("class {class}: {available} filtered candidates, {k} required (short by {})", k - available)]
    ClassShortfall { class: u32, available: usize, k: usize },
    #[error("point {0}: score is not a number")]
    InvalidScore(usize),
    #[error("point {0} appears more than once")]
    DuplicatePoint(usize),
    #[error("point {point}: class {class} out of range for {num_classes} classes")]
    ClassOutOfRange { point: usize, class: u32, num_classes: usize },
    #[error("manifest references point {point}, but the collection has {num_points} points")]
    UnknownPoint { point: usize, num_points: usize },
    #[error("manifest lists point {point} as class {manifest}, collection label is {label}")]
    ClassMismatch { point: usize, manifest: u32, label: u32 },
    #[error("input lengths differ: {0}")]
    LengthMismatch(String),
    #[error("filter mask: {0}")]
    Mask(String),
    #[error("reference: {0}")]
    Reference(String),
    #[error("k must be positive")]
    ZeroK,
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// How pool points are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolScoring {
    /// Score of the run-averaged profile.
    #[default]
    Pooled,
    /// Mean of per-run profile scores.
    PerRun,
}

/// Non-monotonicity score of every point's accuracy profile.
///
/// The profiler determines the accuracy axis; for an out-of-distribution
/// pool it should be built with [`Profiler::with_reference`].
pub fn score_pool(profiler: &Profiler<'_>, mode: PoolScoring) -> Result<Vec<f64>, NegSetError> {
    let n = profiler.collection().num_points();
    if n == 0 {
        return Err(NegSetError::EmptyPool);
    }
    (0..n)
        .into_par_iter()
        .map(|point| match mode {
            PoolScoring::Pooled => Ok(nmono(&profiler.accuracy(point)?)?),
            PoolScoring::PerRun => {
                let curves = profiler.accuracy_per_run(point)?;
                let mut total = 0.0;
                for c in &curves {
                    total += nmono(c)?;
                }
                Ok(total / curves.len() as f64)
            }
        })
        .collect()
}

/// Scores `pool` against the accuracy axis of `reference`.
pub fn score_pool_against(
    pool: &RunCollection,
    reference: &RunCollection,
    mode: PoolScoring,
) -> Result<Vec<f64>, NegSetError> {
    if pool.num_points() == 0 {
        return Err(NegSetError::EmptyPool);
    }
    score_pool(&Profiler::with_reference(pool, reference)?, mode)
}

/// Externally supplied per-point keep/drop decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterMask {
    pub name: String,
    pub keep: Vec<bool>,
}

impl FilterMask {
    pub fn all(name: impl Into<String>, num_points: usize) -> Self {
        Self {
            name: name.into(),
            keep: vec![true; num_points],
        }
    }

    /// Parses `point_id,0|1` lines; a non-numeric first line is a header.
    /// Every point in `0..num_points` must appear exactly once.
    pub fn parse_csv(name: impl Into<String>, text: &str, num_points: usize) -> Result<Self, NegSetError> {
        let mut keep: Vec<Option<bool>> = vec![None; num_points];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let (Some(id), Some(flag), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(NegSetError::Mask(format!("line {}: expected `point_id,0|1`", lineno + 1)));
            };
            let Ok(id) = id.parse::<usize>() else {
                if lineno == 0 {
                    continue;
                }
                return Err(NegSetError::Mask(format!("line {}: bad point id `{id}`", lineno + 1)));
            };
            let flag = match flag {
                "0" => false,
                "1" => true,
                other => {
                    return Err(NegSetError::Mask(format!("line {}: flag `{other}` is not 0 or 1", lineno + 1)))
                }
            };
            let slot = keep.get_mut(id).ok_or_else(|| {
                NegSetError::Mask(format!("point {id} out of range for {num_points} points"))
            })?;
            if slot.replace(flag).is_some() {
                return Err(NegSetError::Mask(format!("point {id} listed twice")));
            }
        }
        let keep = keep
            .into_iter()
            .enumerate()
            .map(|(i, k)| k.ok_or_else(|| NegSetError::Mask(format!("point {i} missing"))))
            .collect::<Result<_, _>>()?;
        Ok(Self { name: name.into(), keep })
    }

    pub fn load(path: &Path, num_points: usize) -> Result<Self, NegSetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NegSetError::Mask(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse_csv(name, &text, num_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub point_id: usize,
    pub class: u32,
    pub score: f64,
    pub passes_filter: bool,
}

/// Zips per-point scores, labels and a mask into candidates.
pub fn candidates(scores: &[f64], labels: &[u32], mask: &FilterMask) -> Result<Vec<Candidate>, NegSetError> {
    if scores.len() != labels.len() || scores.len() != mask.keep.len() {
        return Err(NegSetError::LengthMismatch(format!(
            "{} scores, {} labels, {} mask entries",
            scores.len(),
            labels.len(),
            mask.keep.len()
        )));
    }
    Ok((0..scores.len())
        .map(|i| Candidate {
            point_id: i,
            class: labels[i],
            score: scores[i],
            passes_filter: mask.keep[i],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedPoint {
    pub point_id: usize,
    pub class: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegSetManifest {
    pub per_class_k: usize,
    pub filter_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    pub selected: Vec<SelectedPoint>,
}

impl NegSetManifest {
    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = Some(provenance.into());
        self
    }

    pub fn point_ids(&self) -> Vec<usize> {
        self.selected.iter().map(|s| s.point_id).collect()
    }

    pub fn per_class_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.selected {
            *counts.entry(s.class).or_insert(0) += 1;
        }
        counts
    }
}

/// Top-`k` filtered candidates by score within each of `num_classes`
/// classes; ties go to the lower point id. Output is ordered by class,
/// then rank.
pub fn build_negset(
    candidates: &[Candidate],
    num_classes: usize,
    k: usize,
    filter_name: impl Into<String>,
) -> Result<NegSetManifest, NegSetError> {
    if k == 0 {
        return Err(NegSetError::ZeroK);
    }
    let mut seen = BTreeSet::new();
    let mut by_class: Vec<Vec<&Candidate>> = vec![Vec::new(); num_classes];
    for c in candidates {
        if !seen.insert(c.point_id) {
            return Err(NegSetError::DuplicatePoint(c.point_id));
        }
        if c.score.is_nan() {
            return Err(NegSetError::InvalidScore(c.point_id));
        }
        if c.class as usize >= num_classes {
            return Err(NegSetError::ClassOutOfRange {
                point: c.point_id,
                class: c.class,
                num_classes,
            });
        }
        if c.passes_filter {
            by_class[c.class as usize].push(c);
        }
    }
    let mut selected = Vec::with_capacity(k * num_classes);
    for (class, mut pool) in by_class.into_iter().enumerate() {
        if pool.len() < k {
            return Err(NegSetError::ClassShortfall {
                class: class as u32,
                available: pool.len(),
                k,
            });
        }
        pool.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.point_id.cmp(&b.point_id)));
        selected.extend(pool[..k].iter().map(|c| SelectedPoint {
            point_id: c.point_id,
            class: c.class,
            score: c.score,
        }));
    }
    Ok(NegSetManifest {
        per_class_k: k,
        filter_name: filter_name.into(),
        provenance: None,
        selected,
    })
}

/// Horizontal axis of a correlation report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyScale {
    #[default]
    Raw,
    Probit,
}

impl AccuracyScale {
    pub fn apply(self, p: f64) -> f64 {
        match self {
            AccuracyScale::Raw => p,
            AccuracyScale::Probit => {
                let normal = Normal::standard();
                normal.inverse_cdf(p.clamp(PROBIT_CLAMP, 1.0 - PROBIT_CLAMP))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub scale: AccuracyScale,
    /// `(reference accuracy, subset accuracy)`, both on `scale`.
    pub pairs: Vec<(f64, f64)>,
    /// `None` when either coordinate has zero variance.
    pub pearson_r: Option<f64>,
    /// Least-squares slope; `None` when the reference accuracy is constant.
    pub slope: Option<f64>,
}

impl CorrelationReport {
    pub fn from_pairs(pairs: Vec<(f64, f64)>, scale: AccuracyScale) -> Self {
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for &(x, y) in &pairs {
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
            sxy += (x - mx) * (y - my);
        }
        let slope = (sxx > 0.0).then(|| sxy / sxx);
        let pearson_r = (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0));
        Self {
            scale,
            pairs,
            pearson_r,
            slope,
        }
    }

    /// Header `p,subset_accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,subset_accuracy\n");
        for (x, y) in &self.pairs {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "pearson_r": self.pearson_r,
            "slope": self.slope,
            "num_pairs": self.pairs.len(),
            "scale": self.scale,
        })
    }
}

/// Pairs every checkpoint's reference accuracy with the accuracy on the
/// manifest's points, across all runs.
pub fn evaluate_correlation(
    manifest: &NegSetManifest,
    runs: &RunCollection,
    reference: &RunCollection,
    scale: AccuracyScale,
) -> Result<CorrelationReport, NegSetError> {
    let labels = runs.labels();
    for s in &manifest.selected {
        let Some(&label) = labels.get(s.point_id) else {
            return Err(NegSetError::UnknownPoint {
                point: s.point_id,
                num_points: runs.num_points(),
            });
        };
        if label != s.class {
            return Err(NegSetError::ClassMismatch {
                point: s.point_id,
                manifest: s.class,
                label,
            });
        }
    }
    if manifest.selected.is_empty() {
        return Err(NegSetError::EmptyPool);
    }
    if runs.runs().len() != reference.runs().len() {
        return Err(NegSetError::Reference(format!(
            "{} runs vs {} reference runs",
            runs.runs().len(),
            reference.runs().len()
        )));
    }
    let mut pairs = Vec::new();
    for (r, (run, refr)) in runs.runs().iter().zip(reference.runs()).enumerate() {
        if run.checkpoints().len() != refr.checkpoints().len() {
            return Err(NegSetError::Reference(format!(
                "run {r}: {} checkpoints vs {} in reference",
                run.checkpoints().len(),
                refr.checkpoints().len()
            )));
        }
        for (ckpt, rc) in run.checkpoints().iter().zip(refr.checkpoints()) {
            let correct = manifest
                .selected
                .iter()
                .filter(|s| ckpt.is_correct(s.point_id, s.class))
                .count();
            let subset = correct as f64 / manifest.selected.len() as f64;
            pairs.push((scale.apply(rc.global_accuracy()), scale.apply(subset)));
        }
    }
    Ok(CorrelationReport::from_pairs(pairs, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cand(point_id: usize, class: u32, score: f64) -> Candidate {
        Candidate {
            point_id,
            class,
            score,
            passes_filter: true,
        }
    }

    #[test]
    fn per_class_argmax() {
        let pool = [cand(0, 0, 0.3), cand(1, 0, 0.1), cand(2, 1, 0.2)];
        let m = build_negset(&pool, 2, 1, "all").unwrap();
        assert_eq!(m.point_ids(), vec![0, 2]);
    }

    #[test]
    fn filter_precedes_ranking() {
        let mut pool = vec![cand(0, 0, 0.9), cand(1, 0, 0.1), cand(2, 1, 0.2)];
        pool[0].passes_filter = false;
        let m = build_negset(&pool, 2, 1, "mask").unwrap();
        assert_eq!(m.point_ids(), vec![1, 2]);
    }

    #[test]
    fn shortfall_names_class() {
        let pool = [cand(0, 0, 0.3), cand(1, 0, 0.1), cand(2, 1, 0.2)];
        let err = build_negset(&pool, 2, 2, "all").unwrap_err();
        assert_eq!(err, NegSetError::ClassShortfall { class: 1, available: 1, k: 2 });
        assert!(err.to_string().contains("short by 1"));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let pool = [cand(5, 0, 0.5), cand(3, 0, 0.5), cand(4, 0, 0.5)];
        let m = build_negset(&pool, 1, 2, "all").unwrap();
        assert_eq!(m.point_ids(), vec![3, 4]);
    }

    #[test]
    fn bad_candidates() {
        assert_eq!(
            build_negset(&[cand(0, 0, f64::NAN)], 1, 1, ""),
            Err(NegSetError::InvalidScore(0))
        );
        assert_eq!(
            build_negset(&[cand(0, 0, 0.1), cand(0, 0, 0.2)], 1, 1, ""),
            Err(NegSetError::DuplicatePoint(0))
        );
        assert!(matches!(
            build_negset(&[cand(0, 3, 0.1)], 2, 1, ""),
            Err(NegSetError::ClassOutOfRange { .. })
        ));
    }

    #[test]
    fn mask_parsing() {
        let m = FilterMask::parse_csv("clip", "point_id,keep\n0,1\n2,0\n1,1\n", 3).unwrap();
        assert_eq!(m.keep, vec![true, true, false]);
        assert!(FilterMask::parse_csv("m", "0,1\n", 2).is_err());
        assert!(FilterMask::parse_csv("m", "0,1\n0,1\n", 1).is_err());
        assert!(FilterMask::parse_csv("m", "0,2\n", 1).is_err());
        assert!(FilterMask::parse_csv("m", "0,1\n5,1\n", 1).is_err());
    }

    #[test]
    fn manifest_json_shape() {
        let m = build_negset(&[cand(7, 0, 0.25)], 1, 1, "clip").unwrap();
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "per_class_k": 1,
                "filter_name": "clip",
                "selected": [{"point_id": 7, "class": 0, "score": 0.25}]
            })
        );
    }

    #[test]
    fn correlation_formulas() {
        let pairs = vec![(0.1, 0.9), (0.2, 0.7), (0.3, 0.5)];
        let r = CorrelationReport::from_pairs(pairs, AccuracyScale::Raw);
        assert!((r.pearson_r.unwrap() + 1.0).abs() < 1e-12);
        assert!((r.slope.unwrap() + 2.0).abs() < 1e-12);
        let flat = CorrelationReport::from_pairs(vec![(0.1, 1.0), (0.5, 1.0)], AccuracyScale::Raw);
        assert_eq!(flat.slope, Some(0.0));
        assert_eq!(flat.pearson_r, None);
    }

    #[test]
    fn probit_is_inverse_normal_cdf() {
        assert_eq!(AccuracyScale::Probit.apply(0.5), 0.0);
        assert!((AccuracyScale::Probit.apply(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!(AccuracyScale::Probit.apply(1.0).is_finite());
    }

    fn pool_strategy() -> impl Strategy<Value = Vec<Candidate>> {
        prop::collection::vec((0u32..3, 0.0f64..1.0, prop::bool::weighted(0.8)), 30..60).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (class, score, passes_filter))| Candidate {
                    point_id: i,
                    class,
                    // coarse scores so ties actually happen
                    score: (score * 10.0).floor() / 10.0,
                    passes_filter,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn selection_invariants(pool in pool_strategy(), seed in any::<u64>()) {
            let Ok(m) = build_negset(&pool, 3, 2, "f") else { return Ok(()); };
            for (&class, &count) in &m.per_class_counts() {
                prop_assert!(class < 3);
                prop_assert_eq!(count, 2);
            }
            for s in &m.selected {
                prop_assert!(pool[s.point_id].passes_filter);
                // nothing better was left behind
                let beaten = pool.iter().filter(|c| c.passes_filter && c.class == s.class
                    && (c.score > s.score || (c.score == s.score && c.point_id < s.point_id))).count();
                prop_assert!(beaten < 2);
            }

            // permutation invariance
            let mut shuffled = pool.clone();
            let mut state = seed;
            for i in (1..shuffled.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (state >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(&build_negset(&shuffled, 3, 2, "f").unwrap(), &m);

            // removing an unselected point changes nothing
            let chosen: BTreeSet<usize> = m.point_ids().into_iter().collect();
            if let Some(drop) = pool.iter().position(|c| !chosen.contains(&c.point_id)) {
                let mut smaller = pool.clone();
                smaller.remove(drop);
                prop_assert_eq!(&build_negset(&smaller, 3, 2, "f").unwrap(), &m);
            }
        }
    }
}
