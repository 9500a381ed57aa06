use approx::assert_relative_eq;
use conformal_ood::conformal_sets::{
    aps_predict, aps_score, calibrate, conformal_quantile, evaluate_sets, lac_calibrate, lac_predict, predict_sets,
    raps_score, softmax_like, CalibrationResult, PredictionSet, RapsParams, SetMethod,
};
use conformal_ood::scorers::{mahalanobis_class_scores, mahalanobis_fit, ClassScores, LabeledFeatures};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const CENTERS: [[f64; 2]; 3] = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.8]];

fn gaussian_classes(rng: &mut ChaCha8Rng, n: usize) -> (DMatrix<f64>, Vec<usize>) {
    let labels: Vec<usize> = (0..n).map(|i| i % 3 + 1).collect();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        let z: f64 = StandardNormal.sample(rng);
        CENTERS[labels[i] - 1][j] + z
    });
    (x, labels)
}

/// Probability-like rows for calibration and test splits of one draw.
fn pipeline(seed: u64, n: usize) -> (DMatrix<f64>, Vec<usize>, DMatrix<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train_x, train_y) = gaussian_classes(&mut rng, 600);
    let model = mahalanobis_fit(&LabeledFeatures::new(train_x, train_y, None).unwrap(), None).unwrap();
    let (cal_x, cal_y) = gaussian_classes(&mut rng, n);
    let (test_x, test_y) = gaussian_classes(&mut rng, n);
    let cal = softmax_like(&mahalanobis_class_scores(&model, &cal_x).unwrap());
    let test = softmax_like(&mahalanobis_class_scores(&model, &test_x).unwrap());
    (cal, cal_y, test, test_y)
}

#[test]
fn softmax_like_rows_are_distributions_and_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let raw = DMatrix::from_fn(25, 4, |_, _| { let z: f64 = StandardNormal.sample(&mut rng); 3.0 * z });
    let p = softmax_like(&ClassScores::new(raw.clone()).unwrap());
    for row in p.row_iter() {
        assert!((row.sum() - 1.0).abs() < 1e-12);
    }
    let perm = [2usize, 0, 3, 1];
    let permuted = DMatrix::from_fn(25, 4, |i, j| raw[(i, perm[j])]);
    let q = softmax_like(&ClassScores::new(permuted).unwrap());
    for i in 0..25 {
        for j in 0..4 {
            assert_relative_eq!(q[(i, j)], p[(i, perm[j])], epsilon = 1e-15);
        }
    }
    let dominant = softmax_like(&ClassScores::new(DMatrix::from_row_slice(1, 3, &[-1000.0, 0.0, 1.0])).unwrap());
    assert_relative_eq!(dominant[(0, 0)], 1.0, epsilon = 1e-15);
}

#[test]
fn quantile_examples() {
    assert_relative_eq!(conformal_quantile(vec![0.4, 0.1, 0.3, 0.2], 0.5).unwrap(), 0.3);
    assert_eq!(conformal_quantile(vec![0.5; 10], 0.05).unwrap(), f64::INFINITY);
    assert_eq!(conformal_quantile(vec![0.9, 0.2, 0.7], 0.99).unwrap(), 0.2);
    assert!(conformal_quantile(vec![0.1], 1.0).is_err());
}

#[test]
fn lac_examples() {
    let result = CalibrationResult {
        method: SetMethod::Lac,
        alpha: 0.1,
        n_cal: 4,
        q_hat: 0.3,
        raps_params: None,
        seed: 0,
    };
    assert_eq!(lac_predict(&[0.8, 0.15, 0.05], &result).members, vec![1]);
    assert!(lac_predict(&[0.5, 0.3, 0.2], &result).is_empty());
    let full = CalibrationResult { q_hat: f64::INFINITY, ..result };
    assert_eq!(lac_predict(&[0.5, 0.3, 0.2], &full).members, vec![1, 2, 3]);

    let probs = DMatrix::from_row_slice(10, 2, &[0.6, 0.4].repeat(10));
    let cal = lac_calibrate(&probs, &[1; 10], 0.05).unwrap();
    assert_eq!(cal.q_hat, f64::INFINITY);
    assert!(lac_calibrate(&probs, &[3; 10], 0.1).is_err());
}

#[test]
fn aps_and_raps_examples() {
    let row = [0.5, 0.3, 0.2];
    assert_relative_eq!(aps_score(&row, 2, 0.0).unwrap(), 0.8);
    assert_relative_eq!(aps_score(&row, 1, 1.0).unwrap(), 0.0);
    let uniform = [0.25; 4];
    for y in 1..=4 {
        assert_relative_eq!(aps_score(&uniform, y, 0.5).unwrap(), y as f64 * 0.25 - 0.125, epsilon = 1e-15);
    }
    let p = RapsParams { lambda: 0.1, k_reg: 1 };
    assert_relative_eq!(raps_score(&row, 3, 0.0, &p).unwrap(), 1.2, epsilon = 1e-15);
    assert_eq!(raps_score(&row, 1, 0.3, &p).unwrap(), aps_score(&row, 1, 0.3).unwrap());
    assert!(aps_score(&row, 4, 0.0).is_err());
    assert!(aps_score(&row, 1, 1.5).is_err());

    let result = CalibrationResult {
        method: SetMethod::Aps,
        alpha: 0.1,
        n_cal: 1,
        q_hat: 0.5,
        raps_params: None,
        seed: 0,
    };
    assert!(aps_predict(&[0.9, 0.1], &result, 0.0).is_empty());
    assert_eq!(aps_predict(&[0.9, 0.1], &result, 1.0).members, vec![1]);
    let full = CalibrationResult { q_hat: 1.0, ..result };
    assert_eq!(aps_predict(&[0.9, 0.1], &full, 0.3).members, vec![1, 2]);
}

#[test]
fn evaluation_examples() {
    let sets = vec![PredictionSet { members: vec![1] }, PredictionSet { members: vec![1, 2] }];
    let e = evaluate_sets(&sets, &[1, 3]).unwrap();
    assert_eq!((e.coverage, e.efficiency, e.efficiency_sd), (0.5, 1.5, 0.5));
    let empty = vec![PredictionSet { members: vec![] }; 3];
    let e = evaluate_sets(&empty, &[1, 2, 3]).unwrap();
    assert_eq!((e.coverage, e.efficiency), (0.0, 0.0));
    assert!(evaluate_sets(&sets, &[1]).is_err());
}

#[test]
fn set_size_shrinks_and_nests_as_alpha_grows() {
    let (cal, cal_y, test, _) = pipeline(7, 400);
    for method in [SetMethod::Lac, SetMethod::Aps, SetMethod::Raps] {
        let mut previous: Option<Vec<PredictionSet>> = None;
        for alpha in [0.01, 0.05, 0.1, 0.2, 0.5] {
            let result = calibrate(method, &cal, &cal_y, alpha, 3, RapsParams::default()).unwrap();
            let sets = predict_sets(&test, &result);
            if let Some(prev) = &previous {
                for (wide, narrow) in prev.iter().zip(&sets) {
                    assert!(narrow.members.iter().all(|y| wide.contains(*y)), "{method} alpha={alpha}");
                }
            }
            previous = Some(sets);
        }
    }
}

#[test]
fn raps_without_penalty_is_aps() {
    let (cal, cal_y, test, _) = pipeline(8, 300);
    let aps = calibrate(SetMethod::Aps, &cal, &cal_y, 0.1, 11, RapsParams::default()).unwrap();
    let raps = calibrate(SetMethod::Raps, &cal, &cal_y, 0.1, 11, RapsParams { lambda: 0.0, k_reg: 0 }).unwrap();
    assert_eq!(aps.q_hat.to_bits(), raps.q_hat.to_bits());
    assert_eq!(predict_sets(&test, &aps), predict_sets(&test, &raps));
}

#[test]
fn calibration_is_deterministic() {
    let (cal, cal_y, test, _) = pipeline(9, 300);
    for method in [SetMethod::Lac, SetMethod::Aps, SetMethod::Raps] {
        let a = calibrate(method, &cal, &cal_y, 0.1, 5, RapsParams::default()).unwrap();
        let b = calibrate(method, &cal, &cal_y, 0.1, 5, RapsParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(predict_sets(&test, &a), predict_sets(&test, &b));
    }
}

#[test]
fn coverage_is_close_to_nominal() {
    let trials = 100;
    for method in [SetMethod::Lac, SetMethod::Aps, SetMethod::Raps] {
        let mut total = 0.0;
        for t in 0..trials {
            let (cal, cal_y, test, test_y) = pipeline(1000 + t, 500);
            let result = calibrate(method, &cal, &cal_y, 0.1, t, RapsParams::default()).unwrap();
            total += evaluate_sets(&predict_sets(&test, &result), &test_y).unwrap().coverage;
        }
        let mean = total / trials as f64;
        assert!((0.88..=0.93).contains(&mean), "{method}: {mean}");
    }
}
