//! Skill-versus-difficulty model: a model of skill `s` classifies a point of
//! difficulty `d` correctly with probability `Φ(s − d)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{AccuracyTable, TheoryError};

/// Standard normal CDF, `½·erfc(−x/√2)`.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillModel {
    skills: Vec<f64>,
    difficulties: Vec<f64>,
}

impl SkillModel {
    pub fn new(skills: Vec<f64>, difficulties: Vec<f64>) -> Result<Self, TheoryError> {
        if skills.iter().chain(&difficulties).any(|v| !v.is_finite()) {
            return Err(TheoryError::NonFinite("skill model"));
        }
        Ok(Self { skills, difficulties })
    }

    /// Skills and difficulties drawn uniformly from `[-range, range]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, num_skills: usize, num_points: usize, range: f64) -> Self {
        let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-range..=range)).collect();
        let skills = draw(num_skills);
        let difficulties = draw(num_points);
        Self { skills, difficulties }
    }

    pub fn skills(&self) -> &[f64] {
        &self.skills
    }

    pub fn difficulties(&self) -> &[f64] {
        &self.difficulties
    }

    /// Rows are models in their stored order.
    pub fn accuracy_table(&self) -> AccuracyTable {
        let rows = self
            .skills
            .iter()
            .map(|s| self.difficulties.iter().map(|d| standard_normal_cdf(s - d)).collect())
            .collect();
        AccuracyTable::new(rows).expect("finite inputs give a finite table")
    }

    /// Model indices ordered by increasing skill (stable on ties).
    pub fn skill_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.skills.len()).collect();
        order.sort_by(|&a, &b| self.skills[a].total_cmp(&self.skills[b]));
        order
    }
}

pub fn skill_accuracy(model: &SkillModel, skill: usize, point: usize) -> Result<f64, TheoryError> {
    let s = *model.skills.get(skill).ok_or(TheoryError::Index {
        what: "skill",
        index: skill,
        len: model.skills.len(),
    })?;
    let d = *model.difficulties.get(point).ok_or(TheoryError::Index {
        what: "point",
        index: point,
        len: model.difficulties.len(),
    })?;
    Ok(standard_normal_cdf(s - d))
}
