//! Marginal and calibration-conditional conformal p-values.

use serde::{Deserialize, Serialize};

use crate::corrections::BoundSequence;
use crate::error::{Error, Result};
use crate::scalar::{total_cmp, Real};

/// Finite detector scores; higher means more OOD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector<T>(Vec<T>);

impl<T: Real> ScoreVector<T> {
    /// Rejects NaN and infinities. Empty vectors are allowed here; operations
    /// that need data check for emptiness themselves.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "score vector",
                index,
            });
        }
        Ok(ScoreVector(values))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub(crate) fn sorted(&self) -> Vec<T> {
        let mut v = self.0.clone();
        v.sort_unstable_by(total_cmp);
        v
    }

    pub(crate) fn require_nonempty(&self, what: &'static str) -> Result<()> {
        if self.0.is_empty() {
            Err(Error::Empty(what))
        } else {
            Ok(())
        }
    }
}

impl<T: Real> TryFrom<Vec<T>> for ScoreVector<T> {
    type Error = Error;

    fn try_from(values: Vec<T>) -> Result<Self> {
        ScoreVector::new(values)
    }
}

/// `(1 + k) / (1 + n)` where `k` counts calibration scores at or above the test score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalPValue<T> {
    pub value: T,
    pub rank_above: usize,
    pub n_cal: usize,
}

impl<T: Real> MarginalPValue<T> {
    pub fn from_rank(rank_above: usize, n_cal: usize) -> Self {
        MarginalPValue {
            value: T::from_count(1 + rank_above) / T::from_count(1 + n_cal),
            rank_above,
            n_cal,
        }
    }
}

fn check_test_score<T: Real>(score: T, index: usize) -> Result<()> {
    if score.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            what: "test score",
            index,
        })
    }
}

/// Marginal conformal p-value of one test score. Ties with calibration
/// scores count toward the numerator.
pub fn marginal_pvalue<T: Real>(cal: &ScoreVector<T>, test_score: T) -> Result<MarginalPValue<T>> {
    cal.require_nonempty("calibration scores")?;
    check_test_score(test_score, 0)?;
    let k = cal.as_slice().iter().filter(|&&c| c >= test_score).count();
    Ok(MarginalPValue::from_rank(k, cal.len()))
}

/// Marginal p-values of many test scores: one sort of the calibration set
/// and a binary search per test point.
pub fn marginal_pvalues_batch<T: Real>(
    cal: &ScoreVector<T>,
    tests: &ScoreVector<T>,
) -> Result<Vec<MarginalPValue<T>>> {
    cal.require_nonempty("calibration scores")?;
    let sorted = cal.sorted();
    let n = sorted.len();
    Ok(tests
        .as_slice()
        .iter()
        .map(|&x| {
            let below = sorted.partition_point(|&c| c < x);
            MarginalPValue::from_rank(n - below, n)
        })
        .collect())
}

/// Calibration-conditional p-value: `b_j` with `j = clamp(rank_above, 1, n)`.
pub fn conditional_pvalue<T: Real>(bounds: &BoundSequence<T>, p: &MarginalPValue<T>) -> Result<T> {
    if bounds.n() != p.n_cal {
        return Err(Error::SizeMismatch {
            what: "bound sequence vs calibration size",
            expected: p.n_cal,
            got: bounds.n(),
        });
    }
    let j = p.rank_above.clamp(1, bounds.n());
    Ok(bounds.get(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrections::dkwm_bounds;
    use approx::assert_relative_eq;

    fn sv(v: &[f64]) -> ScoreVector<f64> {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn extremes() {
        let cal = sv(&[1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        assert_relative_eq!(marginal_pvalue(&cal, 100.0).unwrap().value, 0.1);
        assert_eq!(marginal_pvalue(&cal, -100.0).unwrap().value, 1.0);
    }

    #[test]
    fn hand_counted() {
        let p = marginal_pvalue(&sv(&[1., 2., 3., 4.]), 2.5).unwrap();
        assert_eq!(p.rank_above, 2);
        assert_relative_eq!(p.value, 0.6);
    }

    #[test]
    fn ties_count_toward_numerator() {
        let p = marginal_pvalue(&sv(&[1., 2., 2., 3.]), 2.0).unwrap();
        assert_eq!(p.rank_above, 3);
    }

    #[test]
    fn errors() {
        assert!(marginal_pvalue(&sv(&[]), 1.0).is_err());
        assert!(marginal_pvalue(&sv(&[1.0]), f64::NAN).is_err());
        assert!(ScoreVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(marginal_pvalues_batch(&sv(&[]), &sv(&[1.0])).is_err());
    }

    #[test]
    fn self_scoring_gives_a_permutation() {
        let cal = sv(&[0.3, 0.9, 0.1, 0.5, 0.7]);
        let ps = marginal_pvalues_batch(&cal, &cal).unwrap();
        let mut ranks: Vec<usize> = ps.iter().map(|p| p.rank_above).collect();
        ranks.sort();
        assert_eq!(ranks, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn conditional_examples() {
        let b = dkwm_bounds(100, 0.05f64).unwrap();
        let p0 = MarginalPValue::from_rank(0, 100);
        assert_eq!(conditional_pvalue(&b, &p0).unwrap(), b.get(1));
        let pn = MarginalPValue::<f64>::from_rank(100, 100);
        assert_eq!(conditional_pvalue(&b, &pn).unwrap(), 1.0);
        let p10 = MarginalPValue::<f64>::from_rank(10, 100);
        assert_relative_eq!(
            conditional_pvalue(&b, &p10).unwrap(),
            0.10 + 0.135_810_151_574_061_95,
            epsilon = 1e-14
        );
        let wrong = MarginalPValue::<f64>::from_rank(1, 99);
        assert!(conditional_pvalue(&b, &wrong).is_err());
    }
}
