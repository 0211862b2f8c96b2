//! Learning profiles: per-point statistics as functions of global accuracy.
//!
//! Each run's checkpoint sequence is placed on a global-accuracy axis (made
//! non-decreasing by running maximum), every per-checkpoint statistic is
//! Gaussian-filtered along the checkpoint index, linearly interpolated onto
//! an [`AccuracyGrid`], and the per-run curves are averaged.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logstore::{Checkpoint, RunCollection, RunLog};

pub const DEFAULT_GRID_LEN: usize = 50;
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_TRUNCATE: f64 = 4.0;
/// Smallest accepted width of a sampled accuracy range.
pub const MIN_SPAN: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("run {run} has {count} checkpoints; at least 2 are required")]
    TooFewCheckpoints { run: usize, count: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate accuracy range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },
    #[error("sample accuracies must be non-decreasing (index {0})")]
    UnsortedSamples(usize),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("point {point} out of range for {num_points} points")]
    PointOutOfRange { point: usize, num_points: usize },
    #[error("reference has {reference} runs but the profiled collection has {runs}")]
    RunCountMismatch { runs: usize, reference: usize },
    #[error("run {run}: {detail}")]
    CheckpointMismatch { run: usize, detail: String },
    #[error("{0} values for a grid of {1} points")]
    LengthMismatch(usize, usize),
}

/// Uniform grid of global-accuracy values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyGrid {
    p_min: f64,
    p_max: f64,
    points: Vec<f64>,
}

impl AccuracyGrid {
    pub fn new(p_min: f64, p_max: f64, len: usize) -> Result<Self, ProfileError> {
        if !(p_min.is_finite() && p_max.is_finite()) || p_min >= p_max {
            return Err(ProfileError::Grid(format!("need p_min < p_max, got [{p_min}, {p_max}]")));
        }
        if len < 2 {
            return Err(ProfileError::Grid(format!("need at least 2 points, got {len}")));
        }
        let step = (p_max - p_min) / (len - 1) as f64;
        let mut points: Vec<f64> = (0..len).map(|i| p_min + step * i as f64).collect();
        points[len - 1] = p_max;
        Ok(Self { p_min, p_max, points })
    }

    /// `[0, 1]` with the default length.
    pub fn unit() -> Self {
        Self::new(0.0, 1.0, DEFAULT_GRID_LEN).expect("unit grid is valid")
    }

    /// Largest range covered by every axis: `[max of firsts, min of lasts]`.
    pub fn covering(axes: &[Vec<f64>], len: usize) -> Result<Self, ProfileError> {
        let lo = axes
            .iter()
            .filter_map(|a| a.first().copied())
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = axes
            .iter()
            .filter_map(|a| a.last().copied())
            .fold(f64::INFINITY, f64::min);
        if !(hi - lo >= MIN_SPAN) {
            return Err(ProfileError::DegenerateRange { min: lo, max: hi });
        }
        Self::new(lo, hi, len)
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.p_max - self.p_min
    }

    /// Same endpoints and length within `tol`.
    pub fn matches(&self, other: &Self, tol: f64) -> bool {
        self.len() == other.len()
            && (self.p_min - other.p_min).abs() <= tol
            && (self.p_max - other.p_max).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Accuracy,
    SoftAccuracy,
    Entropy,
    NegEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    grid: AccuracyGrid,
    values: Vec<f64>,
    kind: ProfileKind,
}

impl ProfileCurve {
    pub fn new(grid: AccuracyGrid, values: Vec<f64>, kind: ProfileKind) -> Result<Self, ProfileError> {
        if values.len() != grid.len() {
            return Err(ProfileError::LengthMismatch(values.len(), grid.len()));
        }
        Ok(Self { grid, values, kind })
    }

    pub fn grid(&self) -> &AccuracyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// The same curve flipped in sign, e.g. entropy into negative entropy.
    pub fn negated(&self) -> Self {
        let kind = match self.kind {
            ProfileKind::Entropy => ProfileKind::NegEntropy,
            ProfileKind::NegEntropy => ProfileKind::Entropy,
            k => k,
        };
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            kind,
        }
    }

    /// `p,value` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,value\n");
        for (p, v) in self.grid.points.iter().zip(&self.values) {
            let _ = writeln!(out, "{p},{v}");
        }
        out
    }
}

/// Per grid point, a distribution over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxProfile {
    grid: AccuracyGrid,
    distributions: Vec<Vec<f64>>,
}

impl SoftmaxProfile {
    /// Each distribution must be non-negative and sum to 1 within 1e-6.
    pub fn new(grid: AccuracyGrid, distributions: Vec<Vec<f64>>) -> Result<Self, ProfileError> {
        if distributions.len() != grid.len() {
            return Err(ProfileError::LengthMismatch(distributions.len(), grid.len()));
        }
        let width = distributions[0].len();
        for (i, d) in distributions.iter().enumerate() {
            let sum: f64 = d.iter().sum();
            if d.len() != width || d.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(ProfileError::Grid(format!(
                    "grid point {i} does not hold a probability vector"
                )));
            }
        }
        Ok(Self { grid, distributions })
    }

    pub fn grid(&self) -> &AccuracyGrid {
        &self.grid
    }

    pub fn distributions(&self) -> &[Vec<f64>] {
        &self.distributions
    }

    pub fn num_classes(&self) -> usize {
        self.distributions.first().map_or(0, Vec::len)
    }

    /// One class channel as a curve.
    pub fn channel(&self, class: usize) -> Vec<f64> {
        self.distributions.iter().map(|d| d[class]).collect()
    }

    /// `p,class_0,...` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p");
        for c in 0..self.num_classes() {
            let _ = write!(out, ",class_{c}");
        }
        out.push('\n');
        for (p, d) in self.grid.points.iter().zip(&self.distributions) {
            let _ = write!(out, "{p}");
            for v in d {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Gaussian filter parameters, in checkpoint-index units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub sigma: f64,
    /// Kernel half-width in multiples of `sigma`.
    pub truncate: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            truncate: DEFAULT_TRUNCATE,
        }
    }
}

impl Smoothing {
    /// Pass-through: curves are gridded from the raw checkpoint values.
    pub fn none() -> Self {
        Self {
            sigma: 0.0,
            truncate: DEFAULT_TRUNCATE,
        }
    }

    /// Normalized kernel weights for offsets `-r..=r`.
    pub fn kernel(&self) -> Vec<f64> {
        if self.sigma <= 0.0 {
            return vec![1.0];
        }
        let radius = (self.truncate * self.sigma + 0.5) as i64;
        let weights: Vec<f64> = (-radius..=radius)
            .map(|k| (-0.5 * (k as f64 / self.sigma).powi(2)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

/// Maps any integer index into `0..n` by mirror reflection about the
/// sample edges (`d c b a | a b c d | d c b a`).
fn reflect_index(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Convolves `values` with a normalized kernel using reflect padding.
pub fn gaussian_filter(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let n = values.len();
    if n == 0 || radius == 0 {
        return values.to_vec();
    }
    (0..n as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * values[reflect_index(i + k as i64 - radius, n)])
                .sum()
        })
        .collect()
}

/// Precomputed mapping from one run's sample axis onto a grid.
///
/// Samples sharing an accuracy value are averaged into one knot; each grid
/// point is then a convex combination of two neighbouring knots, or the
/// nearest end knot outside the sampled range.
#[derive(Debug, Clone)]
struct GridPlan {
    /// Knot `j` averages samples `groups[j]..groups[j + 1]`.
    groups: Vec<usize>,
    stencil: Vec<(usize, usize, f64)>,
}

impl GridPlan {
    fn new(axis: &[f64], grid: &AccuracyGrid) -> Result<Self, ProfileError> {
        if axis.len() < 2 {
            return Err(ProfileError::TooFewSamples(axis.len()));
        }
        if let Some(i) = axis.windows(2).position(|w| !(w[1] >= w[0])) {
            return Err(ProfileError::UnsortedSamples(i + 1));
        }
        let (lo, hi) = (axis[0], axis[axis.len() - 1]);
        if !(hi - lo >= MIN_SPAN) {
            return Err(ProfileError::DegenerateRange { min: lo, max: hi });
        }
        let mut groups = vec![0];
        let mut knots = vec![axis[0]];
        for (i, &p) in axis.iter().enumerate().skip(1) {
            if p > *knots.last().unwrap() {
                groups.push(i);
                knots.push(p);
            }
        }
        groups.push(axis.len());

        let last = knots.len() - 1;
        let mut stencil = Vec::with_capacity(grid.len());
        let mut j = 0;
        for &g in grid.points() {
            if g <= knots[0] {
                stencil.push((0, 0, 0.0));
            } else if g >= knots[last] {
                stencil.push((last, last, 0.0));
            } else {
                while knots[j + 1] < g {
                    j += 1;
                }
                let t = (g - knots[j]) / (knots[j + 1] - knots[j]);
                stencil.push((j, j + 1, t));
            }
        }
        Ok(Self { groups, stencil })
    }

    fn apply(&self, smoothed: &[f64]) -> Vec<f64> {
        let knots: Vec<f64> = self
            .groups
            .windows(2)
            .map(|w| smoothed[w[0]..w[1]].iter().sum::<f64>() / (w[1] - w[0]) as f64)
            .collect();
        self.stencil
            .iter()
            .map(|&(a, b, t)| if t == 0.0 { knots[a] } else { knots[a] + t * (knots[b] - knots[a]) })
            .collect()
    }
}

/// Smooths `(p, value)` samples along their index and interpolates onto `grid`.
///
/// `p` must be non-decreasing. Repeated `p` values are averaged after
/// smoothing; grid points outside the sampled range take the end value.
pub fn smooth_and_grid(
    samples: &[(f64, f64)],
    grid: &AccuracyGrid,
    smoothing: Smoothing,
) -> Result<Vec<f64>, ProfileError> {
    let axis: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let plan = GridPlan::new(&axis, grid)?;
    Ok(plan.apply(&gaussian_filter(&values, &smoothing.kernel())))
}

fn running_max(values: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.max(v);
            best
        })
        .collect()
}

/// Attaches a non-decreasing global-accuracy coordinate (running maximum)
/// to each checkpoint of `run`.
pub fn reparameterize(run: &RunLog) -> Result<Vec<(f64, &Checkpoint)>, ProfileError> {
    let count = run.checkpoints().len();
    if count < 2 {
        return Err(ProfileError::TooFewCheckpoints { run: 0, count });
    }
    let axis = running_max(&run.global_accuracies());
    Ok(axis.into_iter().zip(run.checkpoints()).collect())
}

/// Shannon entropy in nats of a row, normalized to unit mass first.
pub fn entropy(row: &[f32]) -> f64 {
    let total: f64 = row.iter().map(|&v| f64::from(v)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    row.iter()
        .map(|&v| f64::from(v) / total)
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum()
}

/// Computes profiles of single points of a [`RunCollection`].
///
/// The accuracy axis comes from the collection itself or, for points that
/// are not part of the reference distribution, from a separate reference
/// collection evaluated at the same checkpoints.
#[derive(Debug, Clone)]
pub struct Profiler<'a> {
    runs: &'a RunCollection,
    axes: Vec<Vec<f64>>,
    grid: AccuracyGrid,
    smoothing: Smoothing,
    kernel: Vec<f64>,
    plans: Vec<GridPlan>,
}

impl<'a> Profiler<'a> {
    /// Profiles against the collection's own global accuracy.
    pub fn new(runs: &'a RunCollection) -> Result<Self, ProfileError> {
        let mut axes = Vec::with_capacity(runs.runs().len());
        for (i, run) in runs.runs().iter().enumerate() {
            let count = run.checkpoints().len();
            if count < 2 {
                return Err(ProfileError::TooFewCheckpoints { run: i, count });
            }
            axes.push(running_max(&run.global_accuracies()));
        }
        Self::from_axes(runs, axes)
    }

    /// Profiles against the global accuracy of `reference`, whose run `r`
    /// must share checkpoint resources with run `r` of `runs`.
    pub fn with_reference(
        runs: &'a RunCollection,
        reference: &RunCollection,
    ) -> Result<Self, ProfileError> {
        Self::from_axes(runs, reference_axes(runs, reference)?)
    }

    fn from_axes(runs: &'a RunCollection, axes: Vec<Vec<f64>>) -> Result<Self, ProfileError> {
        let grid = AccuracyGrid::covering(&axes, DEFAULT_GRID_LEN)?;
        let smoothing = Smoothing::default();
        let plans = axes
            .iter()
            .map(|a| GridPlan::new(a, &grid))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            runs,
            axes,
            grid,
            kernel: smoothing.kernel(),
            smoothing,
            plans,
        })
    }

    /// Replaces the default (intersection) grid.
    pub fn with_grid(mut self, grid: AccuracyGrid) -> Result<Self, ProfileError> {
        self.plans = self
            .axes
            .iter()
            .map(|a| GridPlan::new(a, &grid))
            .collect::<Result<_, _>>()?;
        self.grid = grid;
        Ok(self)
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.kernel = smoothing.kernel();
        self.smoothing = smoothing;
        self
    }

    pub fn grid(&self) -> &AccuracyGrid {
        &self.grid
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Reparameterized accuracy coordinates, one vector per run.
    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn collection(&self) -> &RunCollection {
        self.runs
    }

    fn check_point(&self, point: usize) -> Result<(), ProfileError> {
        let num_points = self.runs.num_points();
        if point >= num_points {
            return Err(ProfileError::PointOutOfRange { point, num_points });
        }
        Ok(())
    }

    fn grid_run(&self, run: usize, series: &[f64]) -> Vec<f64> {
        self.plans[run].apply(&gaussian_filter(series, &self.kernel))
    }

    /// Per-run gridded curves of a per-checkpoint statistic.
    fn per_run<F>(&self, stat: F) -> Vec<Vec<f64>>
    where
        F: Fn(&Checkpoint) -> f64,
    {
        self.runs
            .runs()
            .iter()
            .enumerate()
            .map(|(r, run)| {
                let series: Vec<f64> = run.checkpoints().iter().map(&stat).collect();
                self.grid_run(r, &series)
            })
            .collect()
    }

    fn mean_curve(curves: &[Vec<f64>]) -> Vec<f64> {
        let n = curves.len() as f64;
        let mut out = vec![0.0; curves[0].len()];
        for c in curves {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    /// Per-run accuracy curves for `point`, before averaging.
    pub fn accuracy_per_run(&self, point: usize) -> Result<Vec<ProfileCurve>, ProfileError> {
        self.check_point(point)?;
        let label = self.runs.labels()[point];
        Ok(self
            .per_run(|c| if c.is_correct(point, label) { 1.0 } else { 0.0 })
            .into_iter()
            .map(|values| ProfileCurve {
                grid: self.grid.clone(),
                values,
                kind: ProfileKind::Accuracy,
            })
            .collect())
    }

    /// Probability of a correct argmax prediction as a function of accuracy.
    pub fn accuracy(&self, point: usize) -> Result<ProfileCurve, ProfileError> {
        self.check_point(point)?;
        let label = self.runs.labels()[point];
        let curves = self.per_run(|c| if c.is_correct(point, label) { 1.0 } else { 0.0 });
        Ok(ProfileCurve {
            grid: self.grid.clone(),
            values: Self::mean_curve(&curves),
            kind: ProfileKind::Accuracy,
        })
    }

    /// Mean softmax distribution as a function of accuracy.
    ///
    /// Channels are gridded independently per run and renormalized at each
    /// grid point before averaging over runs.
    pub fn softmax(&self, point: usize) -> Result<SoftmaxProfile, ProfileError> {
        self.check_point(point)?;
        let classes = self.runs.num_classes();
        let runs = self.runs.runs();
        let mut acc = vec![vec![0.0; classes]; self.grid.len()];
        for (r, run) in runs.iter().enumerate() {
            let channels: Vec<Vec<f64>> = (0..classes)
                .map(|c| {
                    let series: Vec<f64> = run
                        .checkpoints()
                        .iter()
                        .map(|k| f64::from(k.softmax().row(point)[c]))
                        .collect();
                    self.grid_run(r, &series)
                })
                .collect();
            for (g, slot) in acc.iter_mut().enumerate() {
                let column: Vec<f64> = channels.iter().map(|ch| ch[g].max(0.0)).collect();
                let total: f64 = column.iter().sum();
                for (s, v) in slot.iter_mut().zip(&column) {
                    *s += if total > 0.0 { v / total } else { 1.0 / classes as f64 };
                }
            }
        }
        let n = runs.len() as f64;
        for slot in &mut acc {
            slot.iter_mut().for_each(|v| *v /= n);
        }
        Ok(SoftmaxProfile {
            grid: self.grid.clone(),
            distributions: acc,
        })
    }

    /// Mean prediction entropy (nats) as a function of accuracy.
    pub fn entropy(&self, point: usize) -> Result<ProfileCurve, ProfileError> {
        self.check_point(point)?;
        let curves = self.per_run(|c| entropy(c.softmax().row(point)));
        Ok(ProfileCurve {
            grid: self.grid.clone(),
            values: Self::mean_curve(&curves),
            kind: ProfileKind::Entropy,
        })
    }

    /// True-label channel of [`Profiler::softmax`].
    pub fn soft_accuracy(&self, point: usize) -> Result<ProfileCurve, ProfileError> {
        self.check_point(point)?;
        let label = self.runs.labels()[point];
        let profile = self.softmax(point)?;
        Ok(ProfileCurve {
            grid: self.grid.clone(),
            values: profile.channel(label as usize),
            kind: ProfileKind::SoftAccuracy,
        })
    }
}

/// Running-max accuracy axes taken from `reference`, aligned run by run.
pub fn reference_axes(
    runs: &RunCollection,
    reference: &RunCollection,
) -> Result<Vec<Vec<f64>>, ProfileError> {
    if runs.runs().len() != reference.runs().len() {
        return Err(ProfileError::RunCountMismatch {
            runs: runs.runs().len(),
            reference: reference.runs().len(),
        });
    }
    runs.runs()
        .iter()
        .zip(reference.runs())
        .enumerate()
        .map(|(r, (pool, refr))| {
            let (a, b) = (pool.checkpoints(), refr.checkpoints());
            if a.len() != b.len() {
                return Err(ProfileError::CheckpointMismatch {
                    run: r,
                    detail: format!("{} checkpoints vs {} in reference", a.len(), b.len()),
                });
            }
            if a.len() < 2 {
                return Err(ProfileError::TooFewCheckpoints { run: r, count: a.len() });
            }
            if let Some(i) = a.iter().zip(b).position(|(x, y)| x.resource() != y.resource()) {
                return Err(ProfileError::CheckpointMismatch {
                    run: r,
                    detail: format!(
                        "checkpoint {i} at resource {} vs {} in reference",
                        a[i].resource(),
                        b[i].resource()
                    ),
                });
            }
            Ok(running_max(&refr.global_accuracies()))
        })
        .collect()
}

/// Convenience wrapper: accuracy profile on `grid` against the collection's
/// own accuracy axis.
pub fn accuracy_profile(
    runs: &RunCollection,
    point: usize,
    grid: &AccuracyGrid,
) -> Result<ProfileCurve, ProfileError> {
    Profiler::new(runs)?.with_grid(grid.clone())?.accuracy(point)
}

pub fn softmax_profile(
    runs: &RunCollection,
    point: usize,
    grid: &AccuracyGrid,
) -> Result<SoftmaxProfile, ProfileError> {
    Profiler::new(runs)?.with_grid(grid.clone())?.softmax(point)
}

pub fn entropy_profile(
    runs: &RunCollection,
    point: usize,
    grid: &AccuracyGrid,
) -> Result<ProfileCurve, ProfileError> {
    Profiler::new(runs)?.with_grid(grid.clone())?.entropy(point)
}

pub fn soft_accuracy_profile(
    runs: &RunCollection,
    point: usize,
    grid: &AccuracyGrid,
) -> Result<ProfileCurve, ProfileError> {
    Profiler::new(runs)?.with_grid(grid.clone())?.soft_accuracy(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logstore::{merge_runs, SoftmaxMatrix};

    #[test]
    fn running_max_example() {
        assert_eq!(running_max(&[0.3, 0.5, 0.4, 0.7]), vec![0.3, 0.5, 0.5, 0.7]);
        assert_eq!(running_max(&[0.1, 0.2, 0.9]), vec![0.1, 0.2, 0.9]);
    }

    fn two_class_run(correct: &[bool], accs: &[f64]) -> RunLog {
        // Point 0 follows `correct`; the remaining points set the global accuracy.
        let filler = 100;
        let mut checkpoints = Vec::new();
        for (t, (&c, &acc)) in correct.iter().zip(accs).enumerate() {
            let mut rows = vec![if c { vec![1.0, 0.0] } else { vec![0.0, 1.0] }];
            let right = (acc * (filler + 1) as f64).round() as usize - usize::from(c);
            for i in 0..filler {
                rows.push(if i < right { vec![1.0, 0.0] } else { vec![0.0, 1.0] });
            }
            checkpoints.push((t as f64, SoftmaxMatrix::from_rows(&rows).unwrap()));
        }
        RunLog::new("r", 2, vec![0; filler + 1], checkpoints).unwrap()
    }

    #[test]
    fn reparameterize_applies_running_max() {
        let run = two_class_run(&[true; 4], &[0.3, 0.5, 0.4, 0.7]);
        let ps: Vec<f64> = reparameterize(&run).unwrap().iter().map(|x| x.0).collect();
        let expect = [0.3, 0.5, 0.5, 0.7];
        for (p, e) in ps.iter().zip(expect) {
            assert!((p - e).abs() < 0.006, "{ps:?}");
        }
        assert!(ps.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn reparameterize_needs_two_checkpoints() {
        let run = two_class_run(&[true], &[0.5]);
        assert_eq!(
            reparameterize(&run).unwrap_err(),
            ProfileError::TooFewCheckpoints { run: 0, count: 1 }
        );
    }

    #[test]
    fn reflect_index_mirrors() {
        let got: Vec<usize> = (-5..8).map(|i| reflect_index(i, 3)).collect();
        // ... 1 2 2 1 0 | 0 1 2 | 2 1 0 0 1
        assert_eq!(got, vec![1, 2, 2, 1, 0, 0, 1, 2, 2, 1, 0, 0, 1]);
        assert!((-20..20).all(|i| reflect_index(i, 1) == 0));
    }

    #[test]
    fn kernel_is_normalized_and_truncated() {
        let k = Smoothing::default().kernel();
        assert_eq!(k.len(), 17);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(Smoothing::none().kernel(), vec![1.0]);
    }

    #[test]
    fn constant_samples_stay_constant() {
        let grid = AccuracyGrid::new(0.0, 1.0, 50).unwrap();
        let samples: Vec<(f64, f64)> = (0..7).map(|i| (i as f64 / 6.0, 0.37)).collect();
        let out = smooth_and_grid(&samples, &grid, Smoothing::default()).unwrap();
        assert!(out.iter().all(|v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn two_sample_ramp() {
        // Oracle: with two samples the reflected sequence around index 0 reads
        // ... 1 1 0 | 0 1 | 1 0 0 ..., i.e. offset k picks value 1 iff
        // (k mod 4) is 1 or 2.
        let k = Smoothing::default().kernel();
        let radius = (k.len() / 2) as i64;
        let s0: f64 = (-radius..=radius)
            .filter(|o| matches!(o.rem_euclid(4), 1 | 2))
            .map(|o| k[(o + radius) as usize])
            .sum();
        let grid = AccuracyGrid::new(0.0, 1.0, 11).unwrap();
        let out = smooth_and_grid(&[(0.0, 0.0), (1.0, 1.0)], &grid, Smoothing::default()).unwrap();
        for (p, v) in grid.points().iter().zip(&out) {
            let expect = s0 + p * (1.0 - 2.0 * s0);
            assert!((v - expect).abs() < 1e-12, "{p}: {v} vs {expect}");
        }
        // Without smoothing the ramp is the identity.
        let raw = smooth_and_grid(&[(0.0, 0.0), (1.0, 1.0)], &grid, Smoothing::none()).unwrap();
        for (p, v) in grid.points().iter().zip(&raw) {
            assert!((v - p).abs() < 1e-12);
        }
    }

    #[test]
    fn spike_is_attenuated() {
        let mut samples: Vec<(f64, f64)> = (0..21).map(|i| (i as f64 / 20.0, 0.0)).collect();
        samples[10].1 = 1.0;
        let grid = AccuracyGrid::new(0.0, 1.0, 50).unwrap();
        let out = smooth_and_grid(&samples, &grid, Smoothing::default()).unwrap();
        let max = out.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max < 1.0 && max > 0.0);
    }

    #[test]
    fn degenerate_range_is_rejected() {
        let grid = AccuracyGrid::unit();
        let err = smooth_and_grid(&[(0.5, 0.0), (0.5, 1.0)], &grid, Smoothing::default());
        assert!(matches!(err, Err(ProfileError::DegenerateRange { .. })));
        assert!(matches!(
            smooth_and_grid(&[(0.5, 0.0)], &grid, Smoothing::default()),
            Err(ProfileError::TooFewSamples(1))
        ));
    }

    #[test]
    fn plateaus_are_averaged_and_ends_extended() {
        let grid = AccuracyGrid::new(0.0, 1.0, 5).unwrap();
        let samples = [(0.25, 0.0), (0.5, 1.0), (0.5, 0.0), (0.75, 1.0)];
        let out = smooth_and_grid(&samples, &grid, Smoothing::none()).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn grid_rejects_bad_ranges() {
        assert!(AccuracyGrid::new(0.5, 0.5, 10).is_err());
        assert!(AccuracyGrid::new(0.0, 1.0, 1).is_err());
        let g = AccuracyGrid::new(0.2, 0.8, 50).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g.points()[49], 0.8);
        assert!(g.points().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn always_and_never_correct_points() {
        let accs: Vec<f64> = (0..10).map(|i| 0.2 + 0.05 * i as f64).collect();
        let always = two_class_run(&[true; 10], &accs);
        let never = two_class_run(&[false; 10], &accs);
        let coll = merge_runs(vec![always.clone()]).unwrap();
        let grid = AccuracyGrid::new(0.25, 0.6, 50).unwrap();
        let a = accuracy_profile(&coll, 0, &grid).unwrap();
        assert!(a.values().iter().all(|&v| v == 1.0));
        let coll = merge_runs(vec![never.clone()]).unwrap();
        let a = accuracy_profile(&coll, 0, &grid).unwrap();
        assert!(a.values().iter().all(|&v| v == 0.0));
        let coll = merge_runs(vec![always, never]).unwrap();
        let a = accuracy_profile(&coll, 0, &grid).unwrap();
        assert!(a.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(matches!(
            accuracy_profile(&coll, 500, &grid),
            Err(ProfileError::PointOutOfRange { point: 500, .. })
        ));
    }

    fn constant_run(row: &[f32], label: u32, steps: usize) -> RunLog {
        let c = row.len();
        let mut checkpoints = Vec::new();
        for t in 0..steps {
            // a second point drives the accuracy axis
            let driver: Vec<f32> = (0..c).map(|k| if k == t % 2 { 1.0 } else { 0.0 }).collect();
            let m = SoftmaxMatrix::from_rows(&[row.to_vec(), driver]).unwrap();
            checkpoints.push((t as f64, m));
        }
        RunLog::new("c", c, vec![label, 1], checkpoints).unwrap()
    }

    #[test]
    fn one_hot_softmax_profile() {
        let coll = merge_runs(vec![constant_run(&[0.0, 0.0, 0.0, 1.0], 3, 6)]).unwrap();
        let prof = Profiler::new(&coll).unwrap();
        let s = prof.softmax(0).unwrap();
        for d in s.distributions() {
            assert_eq!(d, &vec![0.0, 0.0, 0.0, 1.0]);
        }
        assert!(prof.entropy(0).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(prof.soft_accuracy(0).unwrap().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn uniform_softmax_profile() {
        let coll = merge_runs(vec![constant_run(&[0.25; 4], 2, 6)]).unwrap();
        let prof = Profiler::new(&coll).unwrap();
        for d in prof.softmax(0).unwrap().distributions() {
            assert!(d.iter().all(|v| (v - 0.25).abs() < 1e-12));
        }
        let ln4 = 4f64.ln();
        assert!(prof.entropy(0).unwrap().values().iter().all(|v| (v - ln4).abs() < 1e-7));
        assert!(prof
            .soft_accuracy(0)
            .unwrap()
            .values()
            .iter()
            .all(|v| (v - 0.25).abs() < 1e-12));
        let coll = merge_runs(vec![constant_run(&[0.5, 0.5], 0, 6)]).unwrap();
        let h = Profiler::new(&coll).unwrap().entropy(0).unwrap();
        assert!(h.values().iter().all(|v| (v - std::f64::consts::LN_2).abs() < 1e-12));
    }

    #[test]
    fn two_constant_runs_average() {
        let q1 = [0.7f32, 0.2, 0.1];
        let q2 = [0.5f32, 0.1, 0.4];
        let coll = merge_runs(vec![constant_run(&q1, 0, 6), constant_run(&q2, 0, 6)]).unwrap();
        let s = Profiler::new(&coll).unwrap().softmax(0).unwrap();
        for d in s.distributions() {
            for c in 0..3 {
                let expect = (f64::from(q1[c]) + f64::from(q2[c])) / 2.0;
                assert!((d[c] - expect).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn reference_axis_must_align() {
        let a = merge_runs(vec![constant_run(&[0.5, 0.5], 0, 6)]).unwrap();
        let b = merge_runs(vec![constant_run(&[0.5, 0.5], 0, 5)]).unwrap();
        assert!(matches!(
            Profiler::with_reference(&a, &b),
            Err(ProfileError::CheckpointMismatch { run: 0, .. })
        ));
        let two = merge_runs(vec![constant_run(&[0.5, 0.5], 0, 6); 2]).unwrap();
        assert!(matches!(
            Profiler::with_reference(&a, &two),
            Err(ProfileError::RunCountMismatch { .. })
        ));
        assert!(Profiler::with_reference(&a, &a).is_ok());
    }

    #[test]
    fn csv_output_shapes() {
        let grid = AccuracyGrid::new(0.0, 1.0, 3).unwrap();
        let c = ProfileCurve::new(grid.clone(), vec![0.0, 0.5, 1.0], ProfileKind::Accuracy).unwrap();
        assert_eq!(c.to_csv(), "p,value\n0,0\n0.5,0.5\n1,1\n");
        let s = SoftmaxProfile::new(grid, vec![vec![1.0, 0.0]; 3]).unwrap();
        assert!(s.to_csv().starts_with("p,class_0,class_1\n0,1,0\n"));
    }
}
