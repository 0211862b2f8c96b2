//! Manifold-partition model: a Lipschitz target on `[0,1]^d` approximated
//! on `n = C^d` cubes of side `1/C`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{PropertyReport, TheoryError, Witness};

type Target = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How each cell approximates the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approximation {
    /// Target value at the cell centre (any dimension).
    #[default]
    CellCenter,
    /// Linear interpolation between cell edges (1D only).
    PiecewiseLinear,
}

#[derive(Clone)]
pub struct ManifoldModel {
    dim: usize,
    lipschitz: f64,
    cells_per_axis: usize,
    approximation: Approximation,
    target: Target,
}

impl fmt::Debug for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldModel")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("cells_per_axis", &self.cells_per_axis)
            .field("approximation", &self.approximation)
            .finish_non_exhaustive()
    }
}

impl ManifoldModel {
    /// `lipschitz` bounds the target's slope in the Euclidean norm.
    pub fn new<F>(dim: usize, lipschitz: f64, cells_per_axis: usize, target: F) -> Result<Self, TheoryError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(TheoryError::Model("dimension must be at least 1".into()));
        }
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(TheoryError::Model(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        if cells_per_axis == 0 {
            return Err(TheoryError::Model("need at least one cell per axis".into()));
        }
        Ok(Self {
            dim,
            lipschitz,
            cells_per_axis,
            approximation: Approximation::CellCenter,
            target: Arc::new(target),
        })
    }

    pub fn with_approximation(mut self, approximation: Approximation) -> Result<Self, TheoryError> {
        if approximation == Approximation::PiecewiseLinear && self.dim != 1 {
            return Err(TheoryError::Model("piecewise-linear cells are only available in 1D".into()));
        }
        self.approximation = approximation;
        Ok(self)
    }

    /// Same target on a different partition.
    pub fn with_cells(&self, cells_per_axis: usize) -> Result<Self, TheoryError> {
        if cells_per_axis == 0 {
            return Err(TheoryError::Model("need at least one cell per axis".into()));
        }
        Ok(Self {
            cells_per_axis,
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// `n = C^d`.
    pub fn num_cells(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    /// `L·√d / (2C)`.
    pub fn error_bound(&self) -> f64 {
        self.lipschitz * (self.dim as f64).sqrt() / (2.0 * self.cells_per_axis as f64)
    }

    fn cell(&self, x: f64) -> usize {
        ((x * self.cells_per_axis as f64).floor() as usize).min(self.cells_per_axis - 1)
    }

    /// The model's prediction at `x`.
    pub fn approximate(&self, x: &[f64]) -> Result<f64, TheoryError> {
        if x.len() != self.dim || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(TheoryError::Domain(x.to_vec()));
        }
        let c = self.cells_per_axis as f64;
        Ok(match self.approximation {
            Approximation::CellCenter => {
                let center: Vec<f64> = x.iter().map(|&v| (self.cell(v) as f64 + 0.5) / c).collect();
                (self.target)(&center)
            }
            Approximation::PiecewiseLinear => {
                let k = self.cell(x[0]);
                let (a, b) = (k as f64 / c, (k + 1) as f64 / c);
                let t = (x[0] - a) * c;
                (1.0 - t) * (self.target)(&[a]) + t * (self.target)(&[b])
            }
        })
    }
}

/// Absolute approximation error at each evaluation point.
pub fn manifold_errors(model: &ManifoldModel, eval_points: &[Vec<f64>]) -> Result<Vec<f64>, TheoryError> {
    eval_points
        .iter()
        .map(|x| Ok(((model.target)(x) - model.approximate(x)?).abs()))
        .collect()
}

/// Checks every error against [`ManifoldModel::error_bound`].
pub fn check_error_bound(model: &ManifoldModel, eval_points: &[Vec<f64>]) -> Result<PropertyReport, TheoryError> {
    let bound = model.error_bound();
    let errors = manifold_errors(model, eval_points)?;
    let witness = errors
        .iter()
        .enumerate()
        .find(|(_, &e)| e > bound * (1.0 + 1e-12))
        .map(|(point, &error)| Witness::Bound { point, error, bound });
    Ok(PropertyReport::new("pointwise_scaling_law", witness))
}

/// `(n, max error)` for each partition size in `cells`.
pub fn scaling_sweep(
    model: &ManifoldModel,
    cells: &[usize],
    eval_points: &[Vec<f64>],
) -> Result<Vec<(f64, f64)>, TheoryError> {
    cells
        .iter()
        .map(|&c| {
            let m = model.with_cells(c)?;
            let max = manifold_errors(&m, eval_points)?.into_iter().fold(0.0, f64::max);
            Ok((m.num_cells() as f64, max))
        })
        .collect()
}

/// Regular grid with `per_axis` points per axis over `[0,1]^dim`.
pub fn unit_grid(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let step = 1.0 / (per_axis - 1) as f64;
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut i| {
            (0..dim)
                .map(|_| {
                    let k = i % per_axis;
                    i /= per_axis;
                    k as f64 * step
                })
                .collect()
        })
        .collect()
}

/// `error ≈ prefactor · n^(−exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub prefactor: f64,
    pub exponent: f64,
}

/// Least-squares line through `(ln n, ln error)`.
pub fn fit_scaling(errors_by_n: &[(f64, f64)]) -> Result<ScalingFit, TheoryError> {
    if errors_by_n.len() < 2 {
        return Err(TheoryError::Fit("need at least two (n, error) pairs".into()));
    }
    if errors_by_n.iter().any(|&(n, e)| !(n > 0.0) || !(e > 0.0)) {
        return Err(TheoryError::Fit("n and error must be positive".into()));
    }
    let logs: Vec<(f64, f64)> = errors_by_n.iter().map(|&(n, e)| (n.ln(), e.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(TheoryError::Fit("all n are equal".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(ScalingFit {
        prefactor: (my - slope * mx).exp(),
        exponent: -slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_1d(cells: usize) -> ManifoldModel {
        ManifoldModel::new(1, 1.0, cells, |x| x[0]).unwrap()
    }

    #[test]
    fn hand_evaluated_error() {
        // x = 0.5 falls in [0.5, 0.75), centre 0.625, so the error is
        // 0.125, which meets the bound 1 / (2 * 4) exactly.
        let m = identity_1d(4);
        let e = manifold_errors(&m, &[vec![0.5]]).unwrap();
        assert_eq!(e, vec![0.125]);
        assert_eq!(m.error_bound(), 0.125);
        assert!(check_error_bound(&m, &[vec![0.5]]).unwrap().pass);
    }

    #[test]
    fn constant_target_is_exact() {
        let m = ManifoldModel::new(2, 1.0, 3, |_| 4.2).unwrap();
        let errors = manifold_errors(&m, &unit_grid(2, 11)).unwrap();
        assert!(errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn doubling_cells_halves_max_error() {
        let pts = unit_grid(1, 1025);
        for c in [2, 4, 8, 16] {
            let sweep = scaling_sweep(&identity_1d(1), &[c, 2 * c], &pts).unwrap();
            let ratio = sweep[0].1 / sweep[1].1;
            assert!((ratio / 2.0 - 1.0).abs() < 0.05, "C = {c}: ratio {ratio}");
        }
    }

    #[test]
    fn piecewise_linear_meets_bound() {
        let m = ManifoldModel::new(1, 3.0, 5, |x| (3.0 * x[0]).sin())
            .unwrap()
            .with_approximation(Approximation::PiecewiseLinear)
            .unwrap();
        assert!(check_error_bound(&m, &unit_grid(1, 2001)).unwrap().pass);
        assert!(ManifoldModel::new(2, 1.0, 2, |x| x[0])
            .unwrap()
            .with_approximation(Approximation::PiecewiseLinear)
            .is_err());
    }

    #[test]
    fn bound_violation_is_reported() {
        // claims L = 0.1 for a slope-1 target
        let m = ManifoldModel::new(1, 0.1, 2, |x| x[0]).unwrap();
        let r = check_error_bound(&m, &[vec![0.5], vec![0.0]]).unwrap();
        assert!(matches!(r.witness, Some(Witness::Bound { point: 0, .. })));
    }

    #[test]
    fn outside_unit_cube() {
        let m = identity_1d(2);
        assert!(matches!(manifold_errors(&m, &[vec![1.5]]), Err(TheoryError::Domain(_))));
        assert!(matches!(manifold_errors(&m, &[vec![0.5, 0.5]]), Err(TheoryError::Domain(_))));
    }

    #[test]
    fn exact_power_laws() {
        let pairs: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&n: &f64| (n, 1.0 / n)).collect();
        let fit = fit_scaling(&pairs).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-9);
        assert!((fit.prefactor - 1.0).abs() < 1e-9);
        let pairs: Vec<(f64, f64)> = [3.0, 10.0, 50.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5))).collect();
        let fit = fit_scaling(&pairs).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-9);
        assert!((fit.prefactor - 3.0).abs() < 1e-9);
        assert!(fit_scaling(&[(1.0, 1.0)]).is_err());
        assert!(fit_scaling(&[(2.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_scaling(&[(2.0, 0.0), (4.0, 0.5)]).is_err());
    }

    #[test]
    fn unit_grid_covers_corners() {
        let g = unit_grid(2, 3);
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![0.0, 0.0]) && g.contains(&vec![1.0, 1.0]) && g.contains(&vec![0.5, 1.0]));
    }
}
