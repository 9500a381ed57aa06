//! Classical and conformal ROC metrics.
//!
//! ID samples are negatives and OOD samples positives; a sample is flagged
//! OOD when its score reaches the threshold. The conformal variants replace
//! the empirical FPR with its corrected level from a [`BoundSequence`] built
//! over the ID calibration scores.

use serde::{Deserialize, Serialize};

use crate::corrections::{apply_bound, BoundSequence, CorrectionMethod, MonteCarloConfig};
use crate::error::{Error, Result};
use crate::pvalues::ScoreVector;
use crate::scalar::{ceil_tolerant, total_cmp, Real};

/// Fraction of ID scores `>= tau`.
pub fn empirical_fpr<T: Real>(id_scores: &ScoreVector<T>, tau: T) -> Result<T> {
    id_scores.require_nonempty("ID scores")?;
    let k = id_scores.as_slice().iter().filter(|&&s| s >= tau).count();
    Ok(T::from_count(k) / T::from_count(id_scores.len()))
}

/// Fraction of OOD scores strictly above `tau`.
pub fn empirical_tpr<T: Real>(ood_scores: &ScoreVector<T>, tau: T) -> Result<T> {
    ood_scores.require_nonempty("OOD scores")?;
    let k = ood_scores.as_slice().iter().filter(|&&s| s > tau).count();
    Ok(T::from_count(k) / T::from_count(ood_scores.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Classical,
    Conformal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint<T> {
    pub threshold: T,
    pub fpr: T,
    pub tpr: T,
}

/// ROC vertices ordered by ascending threshold, from the `-inf` sentinel
/// `(1, 1)` to the `+inf` sentinel `(0, 0)` (`(b_1, 0)` once corrected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve<T> {
    pub points: Vec<RocPoint<T>>,
    pub kind: CurveKind,
    pub n_id: usize,
    pub n_ood: usize,
}

/// Empirical ROC over the union of observed scores plus `-inf`/`+inf`.
///
/// Both rates count scores `>= threshold`, so the vertices agree with the
/// pairwise estimator that counts ties as one half. The lowest observed
/// score reproduces the `-inf` vertex and is dropped.
pub fn roc_curve<T: Real>(id_scores: &ScoreVector<T>, ood_scores: &ScoreVector<T>) -> Result<RocCurve<T>> {
    id_scores.require_nonempty("ID scores")?;
    ood_scores.require_nonempty("OOD scores")?;
    let id = id_scores.sorted();
    let ood = ood_scores.sorted();
    let (n, m) = (id.len(), ood.len());
    let (nf, mf) = (T::from_count(n), T::from_count(m));

    let mut thresholds: Vec<T> = id.iter().chain(&ood).copied().collect();
    thresholds.sort_unstable_by(total_cmp);
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push(RocPoint {
        threshold: T::neg_infinity(),
        fpr: T::one(),
        tpr: T::one(),
    });
    let (mut id_below, mut ood_below) = (0usize, 0usize);
    for &tau in &thresholds {
        while id_below < n && id[id_below] < tau {
            id_below += 1;
        }
        while ood_below < m && ood[ood_below] < tau {
            ood_below += 1;
        }
        let point = RocPoint {
            threshold: tau,
            fpr: T::from_count(n - id_below) / nf,
            tpr: T::from_count(m - ood_below) / mf,
        };
        let last = points.last().expect("sentinel present");
        if last.fpr != point.fpr || last.tpr != point.tpr {
            points.push(point);
        }
    }
    points.push(RocPoint {
        threshold: T::infinity(),
        fpr: T::zero(),
        tpr: T::zero(),
    });
    Ok(RocCurve {
        points,
        kind: CurveKind::Classical,
        n_id: n,
        n_ood: m,
    })
}

/// Replaces every FPR of a classical curve by its corrected level.
pub fn conformal_roc<T: Real>(curve: &RocCurve<T>, bounds: &BoundSequence<T>) -> Result<RocCurve<T>> {
    if curve.kind != CurveKind::Classical {
        return Err(Error::domain("conformal correction expects a classical curve"));
    }
    if bounds.n() != curve.n_id {
        return Err(Error::SizeMismatch {
            what: "bound sequence vs ID calibration size",
            expected: curve.n_id,
            got: bounds.n(),
        });
    }
    let points = curve
        .points
        .iter()
        .map(|p| {
            Ok(RocPoint {
                threshold: p.threshold,
                fpr: apply_bound(bounds, p.fpr)?,
                tpr: p.tpr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocCurve {
        points,
        kind: CurveKind::Conformal,
        n_id: curve.n_id,
        n_ood: curve.n_ood,
    })
}

/// Trapezoidal area under the curve with FPR on the x-axis.
///
/// The TPR is taken as zero left of the smallest FPR on the curve, so a
/// conformal curve contributes nothing on `[0, b_1)`.
pub fn auroc<T: Real>(curve: &RocCurve<T>) -> T {
    let mut pts: Vec<(T, T)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
    pts.sort_by(|a, b| total_cmp(&a.0, &b.0).then_with(|| total_cmp(&a.1, &b.1)));
    let half = T::lit(0.5);
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * half)
        .sum()
}

/// Threshold and FPR at the operating point reaching a target TPR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<T> {
    /// Largest observed score (or `-inf`) whose strict-exceedance TPR reaches
    /// the target.
    pub threshold: T,
    pub fpr: T,
    pub tpr: T,
}

/// FPR when the threshold is the largest one achieving `TPR >= beta`.
///
/// The TPR counts OOD scores strictly above `threshold`, and so does the
/// reported FPR: `#{id > threshold} / n`. Since no observed score lies
/// between `threshold` and the critical OOD score, this is the FPR of the
/// ROC vertex that first reaches `beta`.
pub fn fpr_at_tpr<T: Real>(
    id_scores: &ScoreVector<T>,
    ood_scores: &ScoreVector<T>,
    beta: T,
) -> Result<OperatingPoint<T>> {
    id_scores.require_nonempty("ID scores")?;
    ood_scores.require_nonempty("OOD scores")?;
    if !(beta > T::zero() && beta < T::one()) {
        return Err(Error::domain(format!("TPR level must lie in (0, 1), got {beta}")));
    }
    let m = ood_scores.len();
    let need = ceil_tolerant(beta * T::from_count(m))
        .to_usize()
        .unwrap_or(m)
        .clamp(1, m);
    let ood = ood_scores.sorted();
    // `need`-th largest OOD score: strict exceedance of tau reaches `need`
    // exactly when tau < critical.
    let critical = ood[m - need];
    let threshold = id_scores
        .as_slice()
        .iter()
        .chain(ood_scores.as_slice())
        .copied()
        .filter(|&s| s < critical)
        .fold(T::neg_infinity(), T::max);
    let fpr = empirical_fpr(id_scores, critical)?;
    let tpr = empirical_tpr(ood_scores, threshold)?;
    Ok(OperatingPoint { threshold, fpr, tpr })
}

/// Corrected FPR at the `fpr_at_tpr` operating point.
pub fn conformal_fpr_at_tpr<T: Real>(
    id_scores: &ScoreVector<T>,
    ood_scores: &ScoreVector<T>,
    beta: T,
    bounds: &BoundSequence<T>,
) -> Result<T> {
    if bounds.n() != id_scores.len() {
        return Err(Error::SizeMismatch {
            what: "bound sequence vs ID calibration size",
            expected: id_scores.len(),
            got: bounds.n(),
        });
    }
    apply_bound(bounds, fpr_at_tpr(id_scores, ood_scores, beta)?.fpr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<T> {
    pub auroc_classical: T,
    pub auroc_conformal: T,
    pub fpr_at_tpr_classical: T,
    pub fpr_at_tpr_conformal: T,
    pub beta_level: T,
    pub delta: T,
    pub method: CorrectionMethod,
    pub n_id: usize,
    pub n_ood: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_hat: Option<T>,
}

/// Classical and conformal AUROC and FPR@TPR for one detector.
pub fn metric_report<T: Real>(
    id_scores: &ScoreVector<T>,
    ood_scores: &ScoreVector<T>,
    delta: T,
    method: CorrectionMethod,
    beta: T,
    mc: &MonteCarloConfig,
) -> Result<MetricReport<T>> {
    id_scores.require_nonempty("ID scores")?;
    let bounds = BoundSequence::new(method, id_scores.len(), delta, mc)?;
    metric_report_with_bounds(id_scores, ood_scores, beta, &bounds)
}

/// [`metric_report`] with caller-supplied bounds.
pub fn metric_report_with_bounds<T: Real>(
    id_scores: &ScoreVector<T>,
    ood_scores: &ScoreVector<T>,
    beta: T,
    bounds: &BoundSequence<T>,
) -> Result<MetricReport<T>> {
    let curve = roc_curve(id_scores, ood_scores)?;
    let conformal = conformal_roc(&curve, bounds)?;
    let op = fpr_at_tpr(id_scores, ood_scores, beta)?;
    Ok(MetricReport {
        auroc_classical: auroc(&curve),
        auroc_conformal: auroc(&conformal),
        fpr_at_tpr_classical: op.fpr,
        fpr_at_tpr_conformal: apply_bound(bounds, op.fpr)?,
        beta_level: beta,
        delta: bounds.delta(),
        method: bounds.method(),
        n_id: curve.n_id,
        n_ood: curve.n_ood,
        delta_hat: bounds.delta_hat().map(|d| d.value),
    })
}
