//! Exact Bayesian inference over a finite label space `Y` and observation
//! space `Z` with horizon `N`.
//!
//! A general model stores the joint table `P(y, z_1, …, z_N)` flattened
//! label-major, then `z_1` (most significant) through `z_N`. A model with
//! conditionally independent observations stores only a prior and a
//! likelihood, so long horizons stay cheap to sample.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_curve, PropertyReport, TheoryError};

/// Largest `|Z|^n` that is enumerated exactly.
pub const EXACT_LIMIT: usize = 1_000_000;
const SUM_TOL: f64 = 1e-12;
const LEMMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
enum Table {
    Joint(Vec<f64>),
    Iid { prior: Vec<f64>, likelihood: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBayesModel {
    num_labels: usize,
    num_obs: usize,
    horizon: usize,
    table: Table,
}

/// Neumaier summation; long joint tables drift past the tolerance otherwise.
fn compensated_sum(p: &[f64]) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for &v in p {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

fn check_distribution(what: &str, p: &[f64]) -> Result<(), TheoryError> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(TheoryError::Joint(format!("{what} has a negative or non-finite entry")));
    }
    let sum = compensated_sum(p);
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(TheoryError::Joint(format!("{what} sums to {sum}")));
    }
    Ok(())
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

fn max_prob(p: &[f64]) -> f64 {
    p.iter().copied().fold(0.0, f64::max)
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, TheoryError> {
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err(TheoryError::ZeroMarginal);
    }
    v.iter_mut().for_each(|x| *x /= total);
    Ok(v)
}

/// `|Z|^n`, or `None` on overflow.
fn sequences(num_obs: usize, n: usize) -> Option<usize> {
    num_obs.checked_pow(u32::try_from(n).ok()?)
}

impl DiscreteBayesModel {
    /// General joint table of length `|Y|·|Z|^N`.
    pub fn new(num_labels: usize, num_obs: usize, horizon: usize, joint: Vec<f64>) -> Result<Self, TheoryError> {
        if num_labels == 0 || num_obs == 0 {
            return Err(TheoryError::Model("label and observation spaces must be non-empty".into()));
        }
        let expected = sequences(num_obs, horizon)
            .and_then(|s| s.checked_mul(num_labels))
            .ok_or_else(|| TheoryError::Shape("joint table size overflows".into()))?;
        if joint.len() != expected {
            return Err(TheoryError::Shape(format!(
                "joint table has {} entries, expected {num_labels}·{num_obs}^{horizon} = {expected}",
                joint.len()
            )));
        }
        check_distribution("joint table", &joint)?;
        Ok(Self {
            num_labels,
            num_obs,
            horizon,
            table: Table::Joint(joint),
        })
    }

    /// Observations independent given the label: `likelihood[y][z] = P(Z = z | y)`.
    pub fn iid(prior: Vec<f64>, likelihood: Vec<Vec<f64>>, horizon: usize) -> Result<Self, TheoryError> {
        check_distribution("prior", &prior)?;
        if likelihood.len() != prior.len() {
            return Err(TheoryError::Shape(format!(
                "{} likelihood rows for {} labels",
                likelihood.len(),
                prior.len()
            )));
        }
        let num_obs = likelihood.first().map_or(0, Vec::len);
        if num_obs == 0 || likelihood.iter().any(|r| r.len() != num_obs) {
            return Err(TheoryError::Shape("likelihood rows must share a non-zero length".into()));
        }
        for (y, row) in likelihood.iter().enumerate() {
            check_distribution(&format!("likelihood row {y}"), row)?;
        }
        Ok(Self {
            num_labels: prior.len(),
            num_obs,
            horizon,
            table: Table::Iid { prior, likelihood },
        })
    }

    /// Random joint table; about a fifth of the entries are zero so that
    /// impossible observation sequences occur.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, num_labels: usize, num_obs: usize, horizon: usize) -> Self {
        let len = num_labels * num_obs.pow(horizon as u32);
        loop {
            let weights: Vec<f64> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random::<f64>().powi(3)
                    }
                })
                .collect();
            let Ok(joint) = normalize(weights) else { continue };
            if let Ok(model) = Self::new(num_labels, num_obs, horizon, joint) {
                return model;
            }
        }
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_obs(&self) -> usize {
        self.num_obs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn check_horizon(&self, n: usize) -> Result<(), TheoryError> {
        if n > self.horizon {
            return Err(TheoryError::Horizon {
                requested: n,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    fn check_observations(&self, obs: &[usize]) -> Result<(), TheoryError> {
        self.check_horizon(obs.len())?;
        if let Some(&z) = obs.iter().find(|&&z| z >= self.num_obs) {
            return Err(TheoryError::Index {
                what: "observation",
                index: z,
                len: self.num_obs,
            });
        }
        Ok(())
    }

    /// Unnormalized `P(y, z_1..z_n)` for every `y`.
    fn joint_with(&self, obs: &[usize]) -> Vec<f64> {
        match &self.table {
            Table::Joint(joint) => {
                let block = self.num_obs.pow((self.horizon - obs.len()) as u32);
                let prefix = obs.iter().fold(0, |acc, &z| acc * self.num_obs + z);
                let per_label = self.num_obs.pow(self.horizon as u32);
                (0..self.num_labels)
                    .map(|y| {
                        let start = y * per_label + prefix * block;
                        joint[start..start + block].iter().sum()
                    })
                    .collect()
            }
            Table::Iid { prior, likelihood } => prior
                .iter()
                .zip(likelihood)
                .map(|(&p, row)| obs.iter().fold(p, |acc, &z| acc * row[z]))
                .collect(),
        }
    }

    /// Unnormalized `P(y, prefix)` for all prefixes of length `n`, laid out
    /// like the joint table with horizon `n`.
    fn level(&self, n: usize) -> Vec<f64> {
        match &self.table {
            Table::Joint(joint) => {
                let mut level = joint.clone();
                for m in (n..self.horizon).rev() {
                    let width = self.num_obs.pow(m as u32);
                    level = (0..self.num_labels * width)
                        .map(|i| level[i * self.num_obs..(i + 1) * self.num_obs].iter().sum())
                        .collect();
                }
                level
            }
            Table::Iid { prior, likelihood } => {
                let mut level: Vec<Vec<f64>> = prior.iter().map(|&p| vec![p]).collect();
                for _ in 0..n {
                    for (row, lik) in level.iter_mut().zip(likelihood) {
                        *row = row.iter().flat_map(|&v| lik.iter().map(move |&l| v * l)).collect();
                    }
                }
                level.concat()
            }
        }
    }

    /// Every level of the joint table, from `n = 0` to the horizon.
    fn marginal_levels(&self, joint: &[f64]) -> Vec<Vec<f64>> {
        let mut levels = vec![joint.to_vec()];
        for m in (0..self.horizon).rev() {
            let above = levels.last().expect("starts non-empty");
            let width = self.num_obs.pow(m as u32);
            let level = (0..self.num_labels * width)
                .map(|i| above[i * self.num_obs..(i + 1) * self.num_obs].iter().sum())
                .collect();
            levels.push(level);
        }
        levels.reverse();
        levels
    }

    /// Draws a label and a full observation sequence.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, cumulative: &[f64]) -> (usize, Vec<usize>) {
        let draw = |rng: &mut R, cdf: &[f64]| {
            let u = rng.random::<f64>() * cdf[cdf.len() - 1];
            cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
        };
        match &self.table {
            Table::Joint(_) => {
                let per_label = self.num_obs.pow(self.horizon as u32);
                let idx = draw(rng, cumulative);
                let mut rest = idx % per_label;
                let mut obs = vec![0; self.horizon];
                for slot in obs.iter_mut().rev() {
                    *slot = rest % self.num_obs;
                    rest /= self.num_obs;
                }
                (idx / per_label, obs)
            }
            Table::Iid { likelihood, .. } => {
                let y = draw(rng, cumulative);
                let cdf = cumsum(&likelihood[y]);
                let obs = (0..self.horizon).map(|_| draw(rng, &cdf)).collect();
                (y, obs)
            }
        }
    }

    fn sampling_cdf(&self) -> Vec<f64> {
        match &self.table {
            Table::Joint(joint) => cumsum(joint),
            Table::Iid { prior, .. } => cumsum(prior),
        }
    }
}

fn cumsum(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `p_n(y | z_1..z_n)`; the empty sequence gives the prior.
pub fn bayes_posterior(model: &DiscreteBayesModel, observations: &[usize]) -> Result<Vec<f64>, TheoryError> {
    model.check_observations(observations)?;
    normalize(model.joint_with(observations))
}

/// One term of the mixture `p_n = Σ_z α_z p_{n+1}(· | z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub observation: usize,
    pub weight: f64,
    /// `None` when `weight` is zero.
    pub posterior: Option<Vec<f64>>,
}

/// Splits the posterior after `observations` by the next observation.
pub fn mixture_decomposition(
    model: &DiscreteBayesModel,
    observations: &[usize],
) -> Result<Vec<MixtureComponent>, TheoryError> {
    model.check_observations(observations)?;
    model.check_horizon(observations.len() + 1)?;
    let marginal: f64 = model.joint_with(observations).iter().sum();
    if !(marginal > 0.0) {
        return Err(TheoryError::ZeroMarginal);
    }
    let mut next = observations.to_vec();
    next.push(0);
    (0..model.num_obs)
        .map(|z| {
            *next.last_mut().expect("pushed above") = z;
            let joint = model.joint_with(&next);
            let mass: f64 = joint.iter().sum();
            Ok(MixtureComponent {
                observation: z,
                weight: mass / marginal,
                posterior: (mass > 0.0).then(|| normalize(joint)).transpose()?,
            })
        })
        .collect()
}

/// Sample count and seed for the Monte Carlo fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Estimate {
    Exact,
    MonteCarlo {
        samples: usize,
        seed: u64,
        entropy_se: Vec<f64>,
        max_prob_se: Vec<f64>,
    },
}

/// `E H(p_n)` (nats) and `E ‖p_n‖∞` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCurves {
    pub entropy: Vec<f64>,
    pub max_prob: Vec<f64>,
    pub estimate: Estimate,
}

impl ExpectedCurves {
    /// Entropy non-increasing and max-probability non-decreasing, within
    /// 1e-9 when exact and three combined standard errors otherwise.
    pub fn check_lemma(&self) -> PropertyReport {
        let witness = match &self.estimate {
            Estimate::Exact => check_curve("expected_entropy", &self.entropy, false, LEMMA_TOL)
                .or_else(|| check_curve("expected_max_prob", &self.max_prob, true, LEMMA_TOL)),
            Estimate::MonteCarlo {
                entropy_se,
                max_prob_se,
                ..
            } => {
                let step_tol = |se: &[f64], i: usize| 3.0 * (se[i].powi(2) + se[i + 1].powi(2)).sqrt();
                let first_bad = |name: &str, v: &[f64], se: &[f64], increasing: bool| {
                    (0..v.len().saturating_sub(1)).find_map(|i| {
                        check_curve(name, &v[i..i + 2], increasing, step_tol(se, i)).map(|w| match w {
                            super::Witness::Curve {
                                curve, before, after, ..
                            } => super::Witness::Curve {
                                curve,
                                step: i + 1,
                                before,
                                after,
                            },
                            other => other,
                        })
                    })
                };
                first_bad("expected_entropy", &self.entropy, entropy_se, false)
                    .or_else(|| first_bad("expected_max_prob", &self.max_prob, max_prob_se, true))
            }
        };
        let curves = [
            ("expected_entropy".to_string(), self.entropy.clone()),
            ("expected_max_prob".to_string(), self.max_prob.clone()),
        ]
        .into_iter()
        .collect();
        PropertyReport::new("bayesian_posterior_monotonicity", witness).with_curves(curves)
    }

    /// CSV with columns `n,expected_entropy,expected_max_prob`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,expected_entropy,expected_max_prob\n");
        for (n, (h, m)) in self.entropy.iter().zip(&self.max_prob).enumerate() {
            out.push_str(&format!("{n},{h},{m}\n"));
        }
        out
    }
}

fn exact_at(model: &DiscreteBayesModel, n: usize) -> (f64, f64) {
    let level = model.level(n);
    let width = model.num_obs.pow(n as u32);
    let (mut h, mut m) = (0.0, 0.0);
    let mut column = vec![0.0; model.num_labels];
    for prefix in 0..width {
        for (y, slot) in column.iter_mut().enumerate() {
            *slot = level[y * width + prefix];
        }
        let mass: f64 = column.iter().sum();
        if mass > 0.0 {
            // mass · H(column / mass) = −Σ q ln q + mass ln mass
            h += entropy(&column) + mass * mass.ln();
            m += max_prob(&column);
        }
    }
    (h, m)
}

/// Exact when `|Z|^N ≤ EXACT_LIMIT`, Monte Carlo with default settings otherwise.
pub fn bayes_expected_curves(model: &DiscreteBayesModel, horizon: usize) -> Result<ExpectedCurves, TheoryError> {
    bayes_expected_curves_with(model, horizon, MonteCarlo::default())
}

pub fn bayes_expected_curves_with(
    model: &DiscreteBayesModel,
    horizon: usize,
    mc: MonteCarlo,
) -> Result<ExpectedCurves, TheoryError> {
    model.check_horizon(horizon)?;
    if sequences(model.num_obs, horizon).is_some_and(|s| s <= EXACT_LIMIT) {
        let (entropy, max_prob) = (0..=horizon).map(|n| exact_at(model, n)).unzip();
        return Ok(ExpectedCurves {
            entropy,
            max_prob,
            estimate: Estimate::Exact,
        });
    }
    Ok(monte_carlo(model, horizon, mc))
}

fn monte_carlo(model: &DiscreteBayesModel, horizon: usize, mc: MonteCarlo) -> ExpectedCurves {
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    let cdf = model.sampling_cdf();
    let k = horizon + 1;
    let levels = match &model.table {
        Table::Joint(joint) => Some(model.marginal_levels(joint)),
        Table::Iid { .. } => None,
    };
    let (mut sh, mut sh2, mut sm, mut sm2) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    for _ in 0..mc.samples {
        let (_, obs) = model.sample(&mut rng, &cdf);
        for n in 0..k {
            let unnormalized = match &levels {
                Some(levels) => {
                    let width = model.num_obs.pow(n as u32);
                    let prefix = obs[..n].iter().fold(0, |acc, &z| acc * model.num_obs + z);
                    (0..model.num_labels).map(|y| levels[n][y * width + prefix]).collect()
                }
                None => model.joint_with(&obs[..n]),
            };
            let post = normalize(unnormalized).expect("sampled sequences have positive mass");
            let (h, m) = (entropy(&post), max_prob(&post));
            sh[n] += h;
            sh2[n] += h * h;
            sm[n] += m;
            sm2[n] += m * m;
        }
    }
    let s = mc.samples as f64;
    let mean_se = |sum: &[f64], sq: &[f64]| -> (Vec<f64>, Vec<f64>) {
        sum.iter()
            .zip(sq)
            .map(|(&a, &b)| {
                let mean = a / s;
                let var = (b / s - mean * mean).max(0.0) * s / (s - 1.0).max(1.0);
                (mean, (var / s).sqrt())
            })
            .unzip()
    };
    let (entropy, entropy_se) = mean_se(&sh, &sh2);
    let (max_prob, max_prob_se) = mean_se(&sm, &sm2);
    ExpectedCurves {
        entropy,
        max_prob,
        estimate: Estimate::MonteCarlo {
            samples: mc.samples,
            seed: mc.seed,
            entropy_se,
            max_prob_se,
        },
    }
}

/// Probability that the posterior argmax after `n` observations is the true
/// label, splitting ties uniformly: `E ‖p_n‖∞`.
pub fn bayes_accuracy(model: &DiscreteBayesModel, n: usize) -> Result<f64, TheoryError> {
    model.check_horizon(n)?;
    if sequences(model.num_obs, n).is_some_and(|s| s <= EXACT_LIMIT) {
        return Ok(exact_at(model, n).1);
    }
    Ok(monte_carlo(model, n, MonteCarlo::default()).max_prob[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn bernoulli(horizon: usize) -> DiscreteBayesModel {
        DiscreteBayesModel::iid(vec![0.5, 0.5], vec![vec![0.1, 0.9], vec![0.9, 0.1]], horizon).unwrap()
    }

    /// The same model written out as a full joint table.
    fn bernoulli_joint(horizon: usize) -> DiscreteBayesModel {
        let per = 1 << horizon;
        let mut joint = vec![0.0; 2 * per];
        for y in 0..2 {
            for seq in 0..per {
                let ones = (seq as u32).count_ones() as i32;
                let p1: f64 = if y == 0 { 0.9 } else { 0.1 };
                joint[y * per + seq] = 0.5 * p1.powi(ones) * (1.0 - p1).powi(horizon as i32 - ones);
            }
        }
        DiscreteBayesModel::new(2, 2, horizon, joint).unwrap()
    }

    fn deterministic(prior: Vec<f64>, horizon: usize) -> DiscreteBayesModel {
        let k = prior.len();
        let likelihood = (0..k).map(|y| (0..k).map(|z| f64::from(u8::from(y == z))).collect()).collect();
        DiscreteBayesModel::iid(prior, likelihood, horizon).unwrap()
    }

    #[test]
    fn prior_and_single_update() {
        for m in [bernoulli(3), bernoulli_joint(3)] {
            assert_eq!(bayes_posterior(&m, &[]).unwrap(), vec![0.5, 0.5]);
            let p = bayes_posterior(&m, &[1]).unwrap();
            assert!((p[0] - 0.9).abs() < 1e-12 && (p[1] - 0.1).abs() < 1e-12);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_channel() {
        let prior = vec![0.5, 0.3, 0.2];
        let m = deterministic(prior.clone(), 3);
        assert_eq!(bayes_posterior(&m, &[1]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(bayes_posterior(&m, &[1, 0]), Err(TheoryError::ZeroMarginal));
        let c = bayes_expected_curves(&m, 3).unwrap();
        assert!((c.entropy[0] - entropy(&prior)).abs() < 1e-15);
        assert!(c.entropy[1..].iter().all(|&h| h.abs() < 1e-15));
        for n in 1..=3 {
            assert!((bayes_accuracy(&m, n).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn useless_observations_leave_curves_flat() {
        let m = DiscreteBayesModel::iid(vec![0.25; 4], vec![vec![0.2, 0.3, 0.5]; 4], 4).unwrap();
        let c = bayes_expected_curves(&m, 4).unwrap();
        for n in 0..=4 {
            assert!((c.entropy[n] - 4f64.ln()).abs() < 1e-12);
            assert!((c.max_prob[n] - 0.25).abs() < 1e-12);
            assert!((bayes_accuracy(&m, n).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    /// Enumerates the 8 sequences of three Bernoulli observations by hand:
    /// with k ones the posterior on label 0 is 9^k / (9^k + 9^(3-k)).
    #[test]
    fn bernoulli_three_step_enumeration() {
        let mut h = [0.0; 4];
        let mut acc = [0.0; 4];
        for n in 0..=3usize {
            for seq in 0..(1usize << n) {
                let k = seq.count_ones() as i32;
                let n_i = n as i32;
                let l0 = 0.9f64.powi(k) * 0.1f64.powi(n_i - k);
                let l1 = 0.1f64.powi(k) * 0.9f64.powi(n_i - k);
                let marginal = 0.5 * (l0 + l1);
                let q = l0 / (l0 + l1);
                h[n] += marginal * -(q * q.ln() + (1.0 - q) * (1.0 - q).ln());
                acc[n] += marginal * q.max(1.0 - q);
            }
        }
        for m in [bernoulli(3), bernoulli_joint(3)] {
            let c = bayes_expected_curves(&m, 3).unwrap();
            assert_eq!(c.estimate, Estimate::Exact);
            for n in 0..=3 {
                assert!((c.entropy[n] - h[n]).abs() < 1e-12, "n = {n}");
                assert!((c.max_prob[n] - acc[n]).abs() < 1e-12, "n = {n}");
            }
            assert!((bayes_accuracy(&m, 1).unwrap() - 0.9).abs() < 1e-12);
            assert!(c.check_lemma().pass);
        }
        // two observations can cancel, so accuracy only reaches 0.9 again at n = 2
        assert!((acc[2] - 0.9).abs() < 1e-12);
        assert!((acc[3] - 0.972).abs() < 1e-12);
    }

    #[test]
    fn shape_and_range_errors() {
        assert!(matches!(
            DiscreteBayesModel::new(2, 2, 2, vec![0.125; 7]),
            Err(TheoryError::Shape(_))
        ));
        assert!(matches!(
            DiscreteBayesModel::new(2, 2, 1, vec![0.3, 0.3, 0.3, 0.3]),
            Err(TheoryError::Joint(_))
        ));
        let m = bernoulli(2);
        assert!(matches!(bayes_posterior(&m, &[0, 1, 0]), Err(TheoryError::Horizon { .. })));
        assert!(matches!(bayes_posterior(&m, &[2]), Err(TheoryError::Index { .. })));
        assert!(mixture_decomposition(&m, &[0, 0]).is_err());
    }

    #[test]
    fn monte_carlo_fallback_tracks_exact_values() {
        // 3^14 sequences exceed the exact limit
        let m = DiscreteBayesModel::iid(
            vec![0.4, 0.35, 0.25],
            vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.3, 0.3, 0.4]],
            14,
        )
        .unwrap();
        let mc = bayes_expected_curves_with(&m, 14, MonteCarlo { samples: 4000, seed: 3 }).unwrap();
        let Estimate::MonteCarlo {
            ref entropy_se,
            ref max_prob_se,
            ..
        } = mc.estimate
        else {
            panic!("expected Monte Carlo estimate");
        };
        let exact = bayes_expected_curves(&m, 8).unwrap();
        for n in 0..=8 {
            assert!((mc.entropy[n] - exact.entropy[n]).abs() <= 4.0 * entropy_se[n] + 1e-12, "n = {n}");
            assert!((mc.max_prob[n] - exact.max_prob[n]).abs() <= 4.0 * max_prob_se[n] + 1e-12, "n = {n}");
        }
        assert!(mc.check_lemma().pass);
    }

    #[test]
    fn monte_carlo_on_a_joint_table() {
        // 2^21 sequences exceed the exact limit; the iid form of the same
        // model gives the reference values at short horizons
        let horizon = 21;
        let m = bernoulli_joint(horizon);
        let mc = bayes_expected_curves_with(&m, horizon, MonteCarlo { samples: 3000, seed: 8 }).unwrap();
        let Estimate::MonteCarlo { ref max_prob_se, .. } = mc.estimate else {
            panic!("expected Monte Carlo estimate");
        };
        let exact = bayes_expected_curves(&bernoulli(6), 6).unwrap();
        for n in 0..=6 {
            assert!((mc.max_prob[n] - exact.max_prob[n]).abs() <= 4.0 * max_prob_se[n] + 1e-12, "n = {n}");
        }
        assert!(mc.check_lemma().pass);
    }

    #[test]
    fn csv_and_report() {
        let c = bayes_expected_curves(&bernoulli(1), 1).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("n,expected_entropy,expected_max_prob\n0,"));
        assert_eq!(csv.lines().count(), 3);
        let report = serde_json::to_value(c.check_lemma()).unwrap();
        assert_eq!(report["pass"], true);
        assert_eq!(report["curves"]["expected_max_prob"][1], 0.9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn lemma_holds_for_random_tables(seed in any::<u64>(), y in 1usize..=4, z in 1usize..=3, n in 0usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = DiscreteBayesModel::random(&mut rng, y, z, n);
            let c = bayes_expected_curves(&m, n).unwrap();
            prop_assert!(c.check_lemma().pass, "{:?}", c);
            for k in 0..=n {
                prop_assert!((bayes_accuracy(&m, k).unwrap() - c.max_prob[k]).abs() < 1e-15);
            }
        }

        #[test]
        fn posterior_is_its_mixture(seed in any::<u64>(), y in 1usize..=4, z in 1usize..=3, n in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = DiscreteBayesModel::random(&mut rng, y, z, n);
            let obs: Vec<usize> = (0..rng.random_range(0..n)).map(|_| rng.random_range(0..z)).collect();
            let Ok(post) = bayes_posterior(&m, &obs) else { return Ok(()) };
            let parts = mixture_decomposition(&m, &obs).unwrap();
            prop_assert!((parts.iter().map(|c| c.weight).sum::<f64>() - 1.0).abs() < 1e-12);
            let mut mix = vec![0.0; y];
            for c in &parts {
                if let Some(p) = &c.posterior {
                    mix.iter_mut().zip(p).for_each(|(a, b)| *a += c.weight * b);
                }
            }
            for (a, b) in mix.iter().zip(&post) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
