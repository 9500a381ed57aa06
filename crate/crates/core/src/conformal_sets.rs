//! Split conformal prediction sets (LAC, APS, RAPS) built on class-conditional
//! OOD scores.
//!
//! Class scores are first mapped to probability-like rows with
//! [`softmax_like`], `p(x, y) = exp(-s(x, y)) / sum_j exp(-s(x, j))`, so the
//! best-conforming class receives the most mass. Calibration takes the
//! `ceil((n + 1)(1 - alpha))`-th smallest nonconformity score; prediction keeps
//! every class whose score does not exceed it. Sets may be empty.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::scalar::{ceil_tolerant, total_cmp, Real};
use crate::scorers::{row_softmax, ClassScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetMethod {
    Lac,
    Aps,
    Raps,
}

impl fmt::Display for SetMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetMethod::Lac => "lac",
            SetMethod::Aps => "aps",
            SetMethod::Raps => "raps",
        })
    }
}

impl FromStr for SetMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lac" => Ok(SetMethod::Lac),
            "aps" => Ok(SetMethod::Aps),
            "raps" => Ok(SetMethod::Raps),
            other => Err(Error::domain(format!("unknown prediction set method '{other}'"))),
        }
    }
}

/// RAPS rank penalty `lambda * max(0, rank - k_reg)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RapsParams<T> {
    pub lambda: T,
    pub k_reg: usize,
}

impl<T: Real> Default for RapsParams<T> {
    fn default() -> Self {
        RapsParams {
            lambda: T::lit(0.1),
            k_reg: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult<T> {
    pub method: SetMethod,
    pub alpha: T,
    pub n_cal: usize,
    /// Calibrated threshold; `+inf` when the quantile rank exceeds `n_cal`.
    pub q_hat: T,
    pub raps_params: Option<RapsParams<T>>,
    pub seed: u64,
}

/// Sorted 1-based class labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub members: Vec<usize>,
}

impl PredictionSet {
    pub fn contains(&self, label: usize) -> bool {
        self.members.binary_search(&label).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Row-wise `exp(-s) / sum exp(-s)`.
pub fn softmax_like<T: Real>(scores: &ClassScores<T>) -> DMatrix<T> {
    row_softmax(scores.matrix(), -T::one())
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_labels<T: Real>(probs: &DMatrix<T>, labels: &[usize]) -> Result<()> {
    if probs.nrows() == 0 {
        return Err(Error::Empty("calibration rows"));
    }
    if labels.len() != probs.nrows() {
        return Err(Error::SizeMismatch {
            what: "labels vs calibration rows",
            expected: probs.nrows(),
            got: labels.len(),
        });
    }
    let c = probs.ncols();
    match labels.iter().find(|&&l| l == 0 || l > c) {
        Some(&label) => Err(Error::InvalidLabel {
            label,
            num_classes: c,
        }),
        None => Ok(()),
    }
}

/// The `ceil((n + 1)(1 - alpha))`-th smallest score, or `+inf` past `n`.
pub fn conformal_quantile<T: Real>(mut scores: Vec<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    if scores.is_empty() {
        return Err(Error::Empty("calibration scores"));
    }
    let n = scores.len();
    let rank = ceil_tolerant(T::from_count(n + 1) * (T::one() - alpha))
        .to_usize()
        .unwrap_or(usize::MAX)
        .max(1);
    if rank > n {
        return Ok(T::infinity());
    }
    scores.sort_unstable_by(total_cmp);
    Ok(scores[rank - 1])
}

/// Class order by descending probability (ties: ascending class index),
/// with the cumulative mass through each position.
struct RankedRow<T> {
    /// `rank[y]`: 1-based position of class index `y`.
    rank: Vec<usize>,
    /// `through[y]`: mass of all classes up to and including `y`.
    through: Vec<T>,
}

impl<T: Real> RankedRow<T> {
    fn new(row: &[T]) -> Self {
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| total_cmp(&row[b], &row[a]).then(a.cmp(&b)));
        let mut rank = vec![0; row.len()];
        let mut through = vec![T::zero(); row.len()];
        let mut acc = T::zero();
        for (pos, &y) in order.iter().enumerate() {
            acc = acc + row[y];
            rank[y] = pos + 1;
            through[y] = acc;
        }
        RankedRow { rank, through }
    }

    fn aps(&self, row: &[T], y: usize, u: T) -> T {
        self.through[y] - u * row[y]
    }

    fn raps(&self, row: &[T], y: usize, u: T, params: &RapsParams<T>) -> T {
        let excess = self.rank[y].saturating_sub(params.k_reg);
        self.aps(row, y, u) + params.lambda * T::from_count(excess)
    }
}

fn check_row_label<T: Real>(row: &[T], label: usize) -> Result<usize> {
    if label == 0 || label > row.len() {
        Err(Error::InvalidLabel {
            label,
            num_classes: row.len(),
        })
    } else {
        Ok(label - 1)
    }
}

fn check_unit<T: Real>(u: T) -> Result<()> {
    if u >= T::zero() && u <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("randomization u = {u} outside [0, 1]")))
    }
}

fn check_raps<T: Real>(params: &RapsParams<T>) -> Result<()> {
    if params.lambda >= T::zero() && params.lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("RAPS lambda must be >= 0, got {}", params.lambda)))
    }
}

/// APS score: mass of the classes ranked at or above `label`, minus
/// `u` times the label's own mass.
pub fn aps_score<T: Real>(row: &[T], label: usize, u: T) -> Result<T> {
    let y = check_row_label(row, label)?;
    check_unit(u)?;
    Ok(RankedRow::new(row).aps(row, y, u))
}

/// APS score plus `lambda * max(0, rank(label) - k_reg)`.
pub fn raps_score<T: Real>(row: &[T], label: usize, u: T, params: &RapsParams<T>) -> Result<T> {
    let y = check_row_label(row, label)?;
    check_unit(u)?;
    check_raps(params)?;
    Ok(RankedRow::new(row).raps(row, y, u, params))
}

fn row_of<T: Real>(probs: &DMatrix<T>, i: usize) -> Vec<T> {
    probs.row(i).iter().copied().collect()
}

/// The uniform attached to calibration row `i`.
pub fn calibration_uniform<T: Real>(seed: u64, i: usize) -> T {
    rng::unit_at(seed, Purpose::CalibrationRow, i as u64)
}

/// The uniform attached to test row `i`.
pub fn test_uniform<T: Real>(seed: u64, i: usize) -> T {
    rng::unit_at(seed, Purpose::TestRow, i as u64)
}

/// LAC: nonconformity `1 - p(x, y)`.
pub fn lac_calibrate<T: Real>(probs: &DMatrix<T>, labels: &[usize], alpha: T) -> Result<CalibrationResult<T>> {
    check_labels(probs, labels)?;
    let scores = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| T::one() - probs[(i, y - 1)])
        .collect();
    Ok(CalibrationResult {
        method: SetMethod::Lac,
        alpha,
        n_cal: labels.len(),
        q_hat: conformal_quantile(scores, alpha)?,
        raps_params: None,
        seed: 0,
    })
}

pub fn lac_predict<T: Real>(row: &[T], result: &CalibrationResult<T>) -> PredictionSet {
    let members = (0..row.len())
        .filter(|&y| T::one() - row[y] <= result.q_hat)
        .map(|y| y + 1)
        .collect();
    PredictionSet { members }
}

fn randomized_calibrate<T: Real>(
    probs: &DMatrix<T>,
    labels: &[usize],
    alpha: T,
    seed: u64,
    raps: Option<RapsParams<T>>,
) -> Result<CalibrationResult<T>> {
    check_labels(probs, labels)?;
    if let Some(p) = &raps {
        check_raps(p)?;
    }
    let scores = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let row = row_of(probs, i);
            let ranked = RankedRow::new(&row);
            let u = calibration_uniform(seed, i);
            match &raps {
                Some(p) => ranked.raps(&row, y - 1, u, p),
                None => ranked.aps(&row, y - 1, u),
            }
        })
        .collect();
    Ok(CalibrationResult {
        method: if raps.is_some() { SetMethod::Raps } else { SetMethod::Aps },
        alpha,
        n_cal: labels.len(),
        q_hat: conformal_quantile(scores, alpha)?,
        raps_params: raps,
        seed,
    })
}

pub fn aps_calibrate<T: Real>(
    probs: &DMatrix<T>,
    labels: &[usize],
    alpha: T,
    seed: u64,
) -> Result<CalibrationResult<T>> {
    randomized_calibrate(probs, labels, alpha, seed, None)
}

pub fn raps_calibrate<T: Real>(
    probs: &DMatrix<T>,
    labels: &[usize],
    alpha: T,
    seed: u64,
    params: RapsParams<T>,
) -> Result<CalibrationResult<T>> {
    randomized_calibrate(probs, labels, alpha, seed, Some(params))
}

/// Classes whose APS (or RAPS, when the result carries RAPS parameters)
/// score with the shared uniform `u` is at most `q_hat`.
pub fn aps_predict<T: Real>(row: &[T], result: &CalibrationResult<T>, u: T) -> PredictionSet {
    let ranked = RankedRow::new(row);
    let members = (0..row.len())
        .filter(|&y| {
            let score = match &result.raps_params {
                Some(p) => ranked.raps(row, y, u, p),
                None => ranked.aps(row, y, u),
            };
            score <= result.q_hat
        })
        .map(|y| y + 1)
        .collect();
    PredictionSet { members }
}

pub fn raps_predict<T: Real>(row: &[T], result: &CalibrationResult<T>, u: T) -> PredictionSet {
    aps_predict(row, result, u)
}

/// Calibrates `method` on probability-like rows.
pub fn calibrate<T: Real>(
    method: SetMethod,
    probs: &DMatrix<T>,
    labels: &[usize],
    alpha: T,
    seed: u64,
    raps: RapsParams<T>,
) -> Result<CalibrationResult<T>> {
    let mut result = match method {
        SetMethod::Lac => lac_calibrate(probs, labels, alpha)?,
        SetMethod::Aps => aps_calibrate(probs, labels, alpha, seed)?,
        SetMethod::Raps => raps_calibrate(probs, labels, alpha, seed, raps)?,
    };
    result.seed = seed;
    Ok(result)
}

/// Prediction sets for every row, drawing test row `i`'s uniform from
/// `(result.seed, i)`.
pub fn predict_sets<T: Real>(probs: &DMatrix<T>, result: &CalibrationResult<T>) -> Vec<PredictionSet> {
    (0..probs.nrows())
        .map(|i| {
            let row = row_of(probs, i);
            match result.method {
                SetMethod::Lac => lac_predict(&row, result),
                SetMethod::Aps | SetMethod::Raps => aps_predict(&row, result, test_uniform(result.seed, i)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetEvaluation {
    pub coverage: f64,
    /// Mean set size.
    pub efficiency: f64,
    /// Population standard deviation of the set size.
    pub efficiency_sd: f64,
}

pub fn evaluate_sets(sets: &[PredictionSet], labels: &[usize]) -> Result<SetEvaluation> {
    if sets.len() != labels.len() {
        return Err(Error::SizeMismatch {
            what: "prediction sets vs labels",
            expected: labels.len(),
            got: sets.len(),
        });
    }
    if sets.is_empty() {
        return Err(Error::Empty("prediction sets"));
    }
    let n = sets.len() as f64;
    let covered = sets.iter().zip(labels).filter(|(s, &y)| s.contains(y)).count();
    let mean = sets.iter().map(|s| s.len() as f64).sum::<f64>() / n;
    let var = sets
        .iter()
        .map(|s| (s.len() as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(SetEvaluation {
        coverage: covered as f64 / n,
        efficiency: mean,
        efficiency_sd: var.sqrt(),
    })
}
