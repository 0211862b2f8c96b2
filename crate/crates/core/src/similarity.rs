//! Distances between learning profiles of different training procedures.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logstore::RunCollection;
use crate::profile::{AccuracyGrid, ProfileCurve, ProfileError, ProfileKind, Profiler, SoftmaxProfile};

/// Sum tolerance for inputs to [`dist`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_KL_EPSILON: f64 = 1e-12;
const GRID_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("distributions have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("not a probability vector: {0}")]
    NotDistribution(String),
    #[error("profiles are on different grids")]
    GridMismatch,
    #[error("families `{0}` and `{1}` share no points")]
    DisjointFamilies(String, String),
    #[error("collections have {0} and {1} points")]
    PointCountMismatch(usize, usize),
    #[error("KL epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Total variation, `½ Σ |q1 − q2|`.
    Tv,
    /// `KL(q1 ‖ q2)` after clamping both inputs at `epsilon`.
    Kl,
    /// `1 − cos(q1, q2)`.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionMetric {
    pub kind: MetricKind,
    pub epsilon: f64,
}

impl DistributionMetric {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            epsilon: DEFAULT_KL_EPSILON,
        }
    }

    pub fn with_epsilon(kind: MetricKind, epsilon: f64) -> Result<Self, SimilarityError> {
        if !(epsilon > 0.0) {
            return Err(SimilarityError::Epsilon(epsilon));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn tv() -> Self {
        Self::new(MetricKind::Tv)
    }

    pub fn kl() -> Self {
        Self::new(MetricKind::Kl)
    }

    pub fn cosine() -> Self {
        Self::new(MetricKind::Cosine)
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind != MetricKind::Kl
    }
}

fn check_distribution(q: &[f64]) -> Result<(), SimilarityError> {
    if let Some(v) = q.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(SimilarityError::NotDistribution(format!("entry {v}")));
    }
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(SimilarityError::NotDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

fn clamp_normalize(q: &[f64], eps: f64) -> Vec<f64> {
    let clamped: Vec<f64> = q.iter().map(|&v| v.max(eps)).collect();
    let total: f64 = clamped.iter().sum();
    clamped.into_iter().map(|v| v / total).collect()
}

pub fn dist(metric: &DistributionMetric, q1: &[f64], q2: &[f64]) -> Result<f64, SimilarityError> {
    if q1.len() != q2.len() {
        return Err(SimilarityError::LengthMismatch(q1.len(), q2.len()));
    }
    check_distribution(q1)?;
    check_distribution(q2)?;
    Ok(dist_unchecked(metric, q1, q2))
}

fn dist_unchecked(metric: &DistributionMetric, q1: &[f64], q2: &[f64]) -> f64 {
    match metric.kind {
        MetricKind::Tv => 0.5 * q1.iter().zip(q2).map(|(a, b)| (a - b).abs()).sum::<f64>(),
        MetricKind::Kl => {
            let a = clamp_normalize(q1, metric.epsilon);
            let b = clamp_normalize(q2, metric.epsilon);
            // Rounding can push an exact zero slightly negative.
            a.iter()
                .zip(&b)
                .map(|(x, y)| x * (x / y).ln())
                .sum::<f64>()
                .max(0.0)
        }
        MetricKind::Cosine => {
            let dot: f64 = q1.iter().zip(q2).map(|(a, b)| a * b).sum();
            let n1 = q1.iter().map(|a| a * a).sum::<f64>().sqrt();
            let n2 = q2.iter().map(|b| b * b).sum::<f64>().sqrt();
            (1.0 - dot / (n1 * n2)).max(0.0)
        }
    }
}

/// Trapezoidal average of the pointwise distance over the shared grid.
pub fn profile_distance(
    a: &SoftmaxProfile,
    b: &SoftmaxProfile,
    metric: &DistributionMetric,
) -> Result<f64, SimilarityError> {
    if !a.grid().matches(b.grid(), GRID_TOLERANCE) || a.num_classes() != b.num_classes() {
        return Err(SimilarityError::GridMismatch);
    }
    let d: Vec<f64> = a
        .distributions()
        .iter()
        .zip(b.distributions())
        .map(|(x, y)| dist(metric, x, y))
        .collect::<Result<_, _>>()?;
    Ok(trapezoid_mean(a.grid(), &d))
}

fn trapezoid_mean(grid: &AccuracyGrid, values: &[f64]) -> f64 {
    let p = grid.points();
    let area: f64 = (1..p.len())
        .map(|i| 0.5 * (values[i] + values[i - 1]) * (p[i] - p[i - 1]))
        .sum();
    area / grid.span()
}

/// Softmax profiles of one training procedure, keyed by point id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFamily {
    pub name: String,
    pub profiles: BTreeMap<usize, SoftmaxProfile>,
}

impl ProfileFamily {
    pub fn new(name: impl Into<String>, profiles: BTreeMap<usize, SoftmaxProfile>) -> Self {
        Self {
            name: name.into(),
            profiles,
        }
    }

    /// Softmax profiles of the given points (all points if `points` is `None`).
    pub fn from_profiler(
        name: impl Into<String>,
        profiler: &Profiler<'_>,
        points: Option<&[usize]>,
    ) -> Result<Self, SimilarityError> {
        let ids: Vec<usize> = match points {
            Some(p) => p.to_vec(),
            None => (0..profiler.collection().num_points()).collect(),
        };
        let profiles = ids
            .par_iter()
            .map(|&i| profiler.softmax(i).map(|s| (i, s)))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        Ok(Self::new(name, profiles))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    /// Header `name,<names...>`, then one row per family.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name");
        for n in &self.names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for (n, row) in self.names.iter().zip(&self.values) {
            let _ = write!(out, "{n}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn family_distance(
    a: &ProfileFamily,
    b: &ProfileFamily,
    metric: &DistributionMetric,
) -> Result<f64, SimilarityError> {
    let shared: Vec<usize> = a
        .profiles
        .keys()
        .filter(|k| b.profiles.contains_key(k))
        .copied()
        .collect();
    if shared.is_empty() {
        return Err(SimilarityError::DisjointFamilies(a.name.clone(), b.name.clone()));
    }
    let mut total = 0.0;
    for k in &shared {
        total += profile_distance(&a.profiles[k], &b.profiles[k], metric)?;
    }
    Ok(total / shared.len() as f64)
}

/// Mean profile distance over shared points for every ordered family pair.
///
/// TV and cosine matrices are filled from the upper triangle so they are
/// exactly symmetric; KL entries are `KL(row ‖ column)` and are left as is.
pub fn pairwise_matrix(
    families: &[ProfileFamily],
    metric: &DistributionMetric,
) -> Result<DistanceMatrix, SimilarityError> {
    let n = families.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !metric.is_symmetric() || i < j)
        .collect();
    let entries = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                // still validates that the family has points
                family_distance(&families[i], &families[j], metric).map(|_| 0.0)
            } else {
                family_distance(&families[i], &families[j], metric)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(entries) {
        values[i][j] = v;
        if metric.is_symmetric() {
            values[j][i] = v;
        }
    }
    Ok(DistanceMatrix {
        names: families.iter().map(|f| f.name.clone()).collect(),
        values,
    })
}

/// Mean absolute accuracy-profile difference across points, per grid point.
pub fn pointwise_gap_with(a: &Profiler<'_>, b: &Profiler<'_>) -> Result<ProfileCurve, SimilarityError> {
    let (na, nb) = (a.collection().num_points(), b.collection().num_points());
    if na != nb {
        return Err(SimilarityError::PointCountMismatch(na, nb));
    }
    if !a.grid().matches(b.grid(), GRID_TOLERANCE) {
        return Err(SimilarityError::GridMismatch);
    }
    let len = a.grid().len();
    let sum = (0..na)
        .into_par_iter()
        .map(|i| {
            let (ca, cb) = (a.accuracy(i)?, b.accuracy(i)?);
            Ok(ca
                .values()
                .iter()
                .zip(cb.values())
                .map(|(x, y)| (x - y).abs())
                .collect::<Vec<f64>>())
        })
        .try_reduce(
            || vec![0.0; len],
            |mut acc, v| {
                acc.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
                Ok(acc)
            },
        )
        .map_err(SimilarityError::Profile)?;
    let values = sum.into_iter().map(|s| s / na.max(1) as f64).collect();
    Ok(ProfileCurve::new(a.grid().clone(), values, ProfileKind::Accuracy)?)
}

/// [`pointwise_gap_with`] for two collections profiled on their own axes.
pub fn pointwise_gap(
    a: &RunCollection,
    b: &RunCollection,
    grid: &AccuracyGrid,
) -> Result<ProfileCurve, SimilarityError> {
    let pa = Profiler::new(a)?.with_grid(grid.clone())?;
    let pb = Profiler::new(b)?.with_grid(grid.clone())?;
    pointwise_gap_with(&pa, &pb)
}
