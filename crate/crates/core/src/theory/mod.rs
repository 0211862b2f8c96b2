//! Simulators of abstract learning models and checks of their pointwise
//! monotonicity properties.
//!
//! * [`skill`]: accuracy `Φ(skill − difficulty)`.
//! * [`manifold`]: a Lipschitz target approximated cell by cell on `C^d` cubes.
//! * [`bayes`]: exact Bayesian inference over a finite joint table.
//! * [`gp`]: Gaussian-process regression posteriors.

pub mod bayes;
pub mod gp;
pub mod manifold;
pub mod skill;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bayes::{bayes_accuracy, bayes_expected_curves, bayes_posterior, DiscreteBayesModel, ExpectedCurves};
pub use gp::{gp_difficulty_order, gp_posterior, GpModel, Kernel, Rbf};
pub use manifold::{fit_scaling, manifold_errors, ManifoldModel, ScalingFit};
pub use skill::{skill_accuracy, standard_normal_cdf, SkillModel};

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("{what} index {index} out of range ({len})")]
    Index { what: &'static str, index: usize, len: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("table shape: {0}")]
    Shape(String),
    #[error("joint table: {0}")]
    Joint(String),
    #[error("observation sequence has zero probability")]
    ZeroMarginal,
    #[error("horizon {requested} exceeds model horizon {horizon}")]
    Horizon { requested: usize, horizon: usize },
    #[error("evaluation point {0:?} lies outside the unit cube")]
    Domain(Vec<f64>),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("scaling fit: {0}")]
    Fit(String),
    #[error("kernel matrix is not positive definite after jitter")]
    Factorization,
}

/// Accuracy of several models (rows) on several points (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    rows: Vec<Vec<f64>>,
}

impl AccuracyTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, TheoryError> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(TheoryError::Shape("rows have different lengths".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(TheoryError::NonFinite("accuracy table"));
        }
        Ok(Self { rows })
    }

    pub fn num_models(&self) -> usize {
        self.rows.len()
    }

    pub fn num_points(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, model: usize, point: usize) -> f64 {
        self.rows[model][point]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Evidence that a property fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `A[model_a][point_a] <= A[model_a][point_b]` yet
    /// `A[model_b][point_a] > A[model_b][point_b]`.
    Universality {
        model_a: usize,
        model_b: usize,
        point_a: usize,
        point_b: usize,
    },
    /// Accuracy on `point` drops between positions `step - 1` and `step`
    /// of the resource order.
    Monotonicity {
        point: usize,
        step: usize,
        before: f64,
        after: f64,
    },
    /// A curve moves the wrong way between `step - 1` and `step`.
    Curve {
        curve: String,
        step: usize,
        before: f64,
        after: f64,
    },
    /// A pointwise error exceeds its bound.
    Bound { point: usize, error: f64, bound: f64 },
}

/// Outcome of a property check, serialized as
/// `{property, pass, witness?, curves?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<BTreeMap<String, Vec<f64>>>,
}

impl PropertyReport {
    pub fn new(property: impl Into<String>, witness: Option<Witness>) -> Self {
        Self {
            property: property.into(),
            pass: witness.is_none(),
            witness,
            curves: None,
        }
    }

    pub fn with_curves(mut self, curves: BTreeMap<String, Vec<f64>>) -> Self {
        self.curves = Some(curves);
        self
    }
}

/// Table entries are finite, so this is total.
fn cmp(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).expect("finite accuracy")
}

/// Whether every model induces the same difficulty ordering of points.
///
/// Requiring the implication in both directions for every model pair means
/// all rows share one weak order, so it suffices to sort the points by the
/// first row and compare each row's relation on consecutive sorted points.
pub fn check_universality(table: &AccuracyTable) -> PropertyReport {
    const NAME: &str = "universality_of_instance_difficulty";
    if table.num_models() < 2 || table.num_points() < 2 {
        return PropertyReport::new(NAME, None);
    }
    let base = &table.rows[0];
    let mut order: Vec<usize> = (0..table.num_points()).collect();
    order.sort_by(|&a, &b| cmp(base[a], base[b]));

    for (g, row) in table.rows.iter().enumerate().skip(1) {
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            let in_base = cmp(base[a], base[b]);
            let in_row = cmp(row[a], row[b]);
            if in_base == in_row {
                continue;
            }
            let witness = match (in_base, in_row) {
                (Ordering::Less, Ordering::Equal) => (g, 0, b, a),
                (Ordering::Equal, Ordering::Less) => (0, g, b, a),
                _ => (0, g, a, b),
            };
            return PropertyReport::new(
                NAME,
                Some(Witness::Universality {
                    model_a: witness.0,
                    model_b: witness.1,
                    point_a: witness.2,
                    point_b: witness.3,
                }),
            );
        }
    }
    PropertyReport::new(NAME, None)
}

/// Whether every point's accuracy is non-decreasing along `resource_order`
/// (a list of model rows from least to most resources).
pub fn check_accuracy_monotonicity(
    table: &AccuracyTable,
    resource_order: &[usize],
) -> Result<PropertyReport, TheoryError> {
    if let Some(&bad) = resource_order.iter().find(|&&m| m >= table.num_models()) {
        return Err(TheoryError::Index {
            what: "model",
            index: bad,
            len: table.num_models(),
        });
    }
    for point in 0..table.num_points() {
        for step in 1..resource_order.len() {
            let before = table.rows[resource_order[step - 1]][point];
            let after = table.rows[resource_order[step]][point];
            if after < before {
                return Ok(PropertyReport::new(
                    "accuracy_monotonicity",
                    Some(Witness::Monotonicity {
                        point,
                        step,
                        before,
                        after,
                    }),
                ));
            }
        }
    }
    Ok(PropertyReport::new("accuracy_monotonicity", None))
}

/// First step at which `values` rises (`increasing == false`) or falls
/// (`increasing == true`) by more than `tol`.
pub fn check_curve(name: &str, values: &[f64], increasing: bool, tol: f64) -> Option<Witness> {
    values.windows(2).enumerate().find_map(|(i, w)| {
        let bad = if increasing { w[1] < w[0] - tol } else { w[1] > w[0] + tol };
        bad.then(|| Witness::Curve {
            curve: name.to_string(),
            step: i + 1,
            before: w[0],
            after: w[1],
        })
    })
}
