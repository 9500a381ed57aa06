//! Class-conditional OOD scores over pre-extracted features or logits.
//!
//! Each scorer produces a matrix `s(x, y)` with one row per test sample and
//! one column per class (column `y - 1` holds class `y`); higher means the
//! sample conforms less to that class. [`marginalize_min`] collapses the
//! matrix to a single OOD score per sample.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, RealField};
use num_traits::Float;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pvalues::ScoreVector;
use crate::scalar::Real;

/// Scalars usable with the dense linear algebra backing the Mahalanobis scorer.
pub trait LinalgReal: Real + RealField + Copy {}
impl<T: Real + RealField + Copy> LinalgReal for T {}

/// Feature rows with 1-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures<T: Real> {
    features: DMatrix<T>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Real> LabeledFeatures<T> {
    /// `num_classes` defaults to the largest label. Every class in `1..=C`
    /// must own at least one row.
    pub fn new(features: DMatrix<T>, labels: Vec<usize>, num_classes: Option<usize>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Empty("feature rows"));
        }
        if labels.len() != features.nrows() {
            return Err(Error::SizeMismatch {
                what: "labels vs feature rows",
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        check_finite(&features, "features")?;
        let max_label = labels.iter().copied().max().unwrap_or(0);
        let num_classes = num_classes.unwrap_or(max_label);
        if let Some(&label) = labels.iter().find(|&&l| l == 0 || l > num_classes) {
            return Err(Error::InvalidLabel { label, num_classes });
        }
        let out = LabeledFeatures {
            features,
            labels,
            num_classes,
        };
        for class in 1..=num_classes {
            let rows = out.class_rows(class).len();
            if rows == 0 {
                return Err(Error::InsufficientClassRows {
                    class,
                    rows,
                    required: 1,
                });
            }
        }
        Ok(out)
    }

    pub fn features(&self) -> &DMatrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn class_rows(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }
}

fn check_finite<T: Real>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    match m.iter().position(|v| !Float::is_finite(*v)) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

fn check_dim<T: Real>(tests: &DMatrix<T>, dim: usize) -> Result<()> {
    if tests.ncols() != dim {
        return Err(Error::SizeMismatch {
            what: "test feature dimension",
            expected: dim,
            got: tests.ncols(),
        });
    }
    check_finite(tests, "test features")
}

/// `m x C` matrix of per-class nonconformity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores<T: Real> {
    scores: DMatrix<T>,
}

impl<T: Real> ClassScores<T> {
    pub fn new(scores: DMatrix<T>) -> Result<Self> {
        check_finite(&scores, "class scores")?;
        if scores.ncols() == 0 {
            return Err(Error::Empty("class columns"));
        }
        Ok(ClassScores { scores })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.scores
    }

    pub fn num_rows(&self) -> usize {
        self.scores.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.scores.ncols()
    }

    /// `s(x_row, class)` with a 1-based class.
    pub fn get(&self, row: usize, class: usize) -> T {
        self.scores[(row, class - 1)]
    }

    fn from_rows(rows: Vec<Vec<T>>, num_classes: usize) -> Self {
        let m = rows.len();
        ClassScores {
            scores: DMatrix::from_fn(m, num_classes, |i, j| rows[i][j]),
        }
    }
}

fn squared_distance<T: Real>(a: impl Iterator<Item = T>, b: impl Iterator<Item = T>) -> T {
    a.zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance from each test row to its nearest training row of
/// every class (1-nearest neighbor, brute force).
pub fn knn_class_scores<T: Real>(train: &LabeledFeatures<T>, tests: &DMatrix<T>) -> Result<ClassScores<T>> {
    check_dim(tests, train.dim())?;
    let c = train.num_classes;
    let rows: Vec<Vec<T>> = (0..tests.nrows())
        .into_par_iter()
        .map(|i| {
            let mut best = vec![T::infinity(); c];
            for (j, &label) in train.labels.iter().enumerate() {
                let d2 = squared_distance(
                    tests.row(i).iter().copied(),
                    train.features.row(j).iter().copied(),
                );
                if d2 < best[label - 1] {
                    best[label - 1] = d2;
                }
            }
            best.into_iter().map(Float::sqrt).collect()
        })
        .collect();
    Ok(ClassScores::from_rows(rows, c))
}

/// Per-class Gaussian fit with a shared (class-averaged) covariance.
#[derive(Debug, Clone)]
pub struct MahalanobisModel<T: LinalgReal> {
    means: Vec<DVector<T>>,
    covariances: Vec<DMatrix<T>>,
    shared_covariance: DMatrix<T>,
    class_epsilons: Vec<T>,
    shared_epsilon: T,
    class_factors: Vec<Cholesky<T, Dyn>>,
    shared_factor: Cholesky<T, Dyn>,
}

/// `1e-6 * trace(cov) / d`.
fn auto_epsilon<T: LinalgReal>(cov: &DMatrix<T>) -> T {
    T::lit(1e-6) * cov.trace() / T::from_count(cov.nrows())
}

fn factorize<T: LinalgReal>(cov: &DMatrix<T>, epsilon: T, which: String) -> Result<Cholesky<T, Dyn>> {
    let d = cov.nrows();
    let regularized = cov + DMatrix::<T>::identity(d, d) * epsilon;
    Cholesky::new(regularized).ok_or(Error::SingularCovariance { which })
}

impl<T: LinalgReal> MahalanobisModel<T> {
    /// Builds a model from explicit means and covariances. The shared
    /// covariance is their arithmetic mean. `epsilon = None` selects the
    /// scale-aware default per matrix.
    pub fn from_parts(means: Vec<DVector<T>>, covariances: Vec<DMatrix<T>>, epsilon: Option<T>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Empty("class means"));
        }
        if means.len() != covariances.len() {
            return Err(Error::SizeMismatch {
                what: "covariances vs means",
                expected: means.len(),
                got: covariances.len(),
            });
        }
        let d = means[0].len();
        for (mu, cov) in means.iter().zip(&covariances) {
            if mu.len() != d || cov.nrows() != d || cov.ncols() != d {
                return Err(Error::SizeMismatch {
                    what: "class parameter dimension",
                    expected: d,
                    got: mu.len().max(cov.nrows()),
                });
            }
        }
        if let Some(eps) = epsilon {
            if eps.is_nan() || eps < T::zero() {
                return Err(Error::domain(format!("epsilon must be >= 0, got {eps}")));
            }
        }
        let c = T::from_count(covariances.len());
        let shared_covariance = covariances
            .iter()
            .fold(DMatrix::<T>::zeros(d, d), |acc, cov| acc + cov)
            / c;

        let class_epsilons: Vec<T> = covariances
            .iter()
            .map(|cov| epsilon.unwrap_or_else(|| auto_epsilon(cov)))
            .collect();
        let shared_epsilon = epsilon.unwrap_or_else(|| auto_epsilon(&shared_covariance));
        let class_factors = covariances
            .iter()
            .zip(&class_epsilons)
            .enumerate()
            .map(|(k, (cov, &eps))| factorize(cov, eps, format!("class {}", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        let shared_factor = factorize(&shared_covariance, shared_epsilon, "shared covariance".into())?;
        Ok(MahalanobisModel {
            means,
            covariances,
            shared_covariance,
            class_epsilons,
            shared_epsilon,
            class_factors,
            shared_factor,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[DVector<T>] {
        &self.means
    }

    /// Unregularized per-class covariances.
    pub fn covariances(&self) -> &[DMatrix<T>] {
        &self.covariances
    }

    pub fn shared_covariance(&self) -> &DMatrix<T> {
        &self.shared_covariance
    }

    pub fn class_epsilons(&self) -> &[T] {
        &self.class_epsilons
    }

    pub fn shared_epsilon(&self) -> T {
        self.shared_epsilon
    }

    fn distance(factor: &Cholesky<T, Dyn>, x: &DVector<T>, mean: &DVector<T>) -> T {
        let diff = x - mean;
        let z = factor
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        Float::sqrt(z.iter().map(|&v| v * v).sum::<T>())
    }
}

/// Fits class means and biased (`1/n_k`) covariances.
pub fn mahalanobis_fit<T: LinalgReal>(train: &LabeledFeatures<T>, epsilon: Option<T>) -> Result<MahalanobisModel<T>> {
    let d = train.dim();
    let mut means = Vec::with_capacity(train.num_classes);
    let mut covariances = Vec::with_capacity(train.num_classes);
    for class in 1..=train.num_classes {
        let rows = train.class_rows(class);
        if rows.len() < 2 {
            return Err(Error::InsufficientClassRows {
                class,
                rows: rows.len(),
                required: 2,
            });
        }
        let nk = T::from_count(rows.len());
        let mut mean = DVector::<T>::zeros(d);
        for &r in &rows {
            mean += train.features.row(r).transpose();
        }
        mean /= nk;
        let mut cov = DMatrix::<T>::zeros(d, d);
        for &r in &rows {
            let centered = train.features.row(r).transpose() - &mean;
            cov += &centered * centered.transpose();
        }
        cov /= nk;
        means.push(mean);
        covariances.push(cov);
    }
    MahalanobisModel::from_parts(means, covariances, epsilon)
}

/// Mahalanobis distance of each test row to every class under that class's
/// own regularized covariance.
pub fn mahalanobis_class_scores<T: LinalgReal>(
    model: &MahalanobisModel<T>,
    tests: &DMatrix<T>,
) -> Result<ClassScores<T>> {
    check_dim(tests, model.dim())?;
    let rows: Vec<Vec<T>> = (0..tests.nrows())
        .into_par_iter()
        .map(|i| {
            let x = tests.row(i).transpose();
            model
                .class_factors
                .iter()
                .zip(&model.means)
                .map(|(f, mu)| MahalanobisModel::distance(f, &x, mu))
                .collect()
        })
        .collect();
    Ok(ClassScores::from_rows(rows, model.num_classes()))
}

/// Mahalanobis distance of each test row to its predicted class mean under
/// the shared covariance. `predicted` holds 1-based classes.
pub fn mahalanobis_marginal_scores<T: LinalgReal>(
    model: &MahalanobisModel<T>,
    tests: &DMatrix<T>,
    predicted: &[usize],
) -> Result<ScoreVector<T>> {
    check_dim(tests, model.dim())?;
    if predicted.len() != tests.nrows() {
        return Err(Error::SizeMismatch {
            what: "predicted classes vs test rows",
            expected: tests.nrows(),
            got: predicted.len(),
        });
    }
    let c = model.num_classes();
    if let Some(&label) = predicted.iter().find(|&&p| p == 0 || p > c) {
        return Err(Error::InvalidLabel {
            label,
            num_classes: c,
        });
    }
    let scores = predicted
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let x = tests.row(i).transpose();
            MahalanobisModel::distance(&model.shared_factor, &x, &model.means[y - 1])
        })
        .collect();
    ScoreVector::new(scores)
}

/// `s(x, y) = -softmax(logits(x))_y`.
pub fn softmax_class_scores<T: Real>(logits: &DMatrix<T>) -> Result<ClassScores<T>> {
    check_finite(logits, "logits")?;
    let probs = row_softmax(logits, T::one());
    ClassScores::new(probs.map(|p| -p))
}

/// Row-wise `exp(sign * v) / sum exp(sign * v)` with max-subtraction.
pub(crate) fn row_softmax<T: Real>(values: &DMatrix<T>, sign: T) -> DMatrix<T> {
    let mut out = values.map(|v| v * sign);
    for mut row in out.row_iter_mut() {
        let max = row.iter().copied().fold(T::neg_infinity(), Float::max);
        row.iter_mut().for_each(|v| *v = Float::exp(*v - max));
        let total: T = row.iter().copied().sum();
        row.iter_mut().for_each(|v| *v = *v / total);
    }
    out
}

/// Per-row minimum over classes: the distance to the closest class.
pub fn marginalize_min<T: Real>(scores: &ClassScores<T>) -> ScoreVector<T> {
    let mins = scores
        .scores
        .row_iter()
        .map(|row| row.iter().copied().fold(T::infinity(), Float::min))
        .collect();
    ScoreVector::new(mins).expect("class scores are finite")
}

/// Classes of the argmin column (1-based), ties to the lowest class.
pub fn predicted_classes<T: Real>(scores: &ClassScores<T>) -> Vec<usize> {
    scores
        .scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v < row[best] {
                    best = j;
                }
            }
            best + 1
        })
        .collect()
}
