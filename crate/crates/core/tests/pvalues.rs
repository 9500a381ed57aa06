use conformal_ood::corrections::{asymptotic_bounds, dkwm_bounds};
use conformal_ood::pvalues::{conditional_pvalue, marginal_pvalue, marginal_pvalues_batch, ScoreVector};
use conformal_ood::MarginalPValue;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force(cal: &[f64], x: f64) -> f64 {
    let k = cal.iter().filter(|&&c| c >= x).count();
    (1 + k) as f64 / (1 + cal.len()) as f64
}

proptest! {
    // Scores on a coarse grid so that ties are common.
    #[test]
    fn batch_matches_brute_force(
        cal in prop::collection::vec(-20i32..20, 1..=100),
        tests in prop::collection::vec(-25i32..25, 0..=100),
    ) {
        let cal: Vec<f64> = cal.into_iter().map(|v| v as f64 * 0.5).collect();
        let tests: Vec<f64> = tests.into_iter().map(|v| v as f64 * 0.5).collect();
        let cv = ScoreVector::new(cal.clone()).unwrap();
        let batch = marginal_pvalues_batch(&cv, &ScoreVector::new(tests.clone()).unwrap()).unwrap();
        prop_assert_eq!(batch.len(), tests.len());
        for (p, &x) in batch.iter().zip(&tests) {
            prop_assert_eq!(p.value, brute_force(&cal, x));
            prop_assert_eq!(*p, marginal_pvalue(&cv, x).unwrap());
        }
    }

    #[test]
    fn values_live_on_the_rank_grid_and_decrease_with_the_score(
        cal in prop::collection::vec(-1e3f64..1e3, 1..60),
        a in -1.2e3f64..1.2e3,
        b in -1.2e3f64..1.2e3,
    ) {
        let n = cal.len();
        let cv = ScoreVector::new(cal).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = marginal_pvalue(&cv, lo).unwrap();
        let p_hi = marginal_pvalue(&cv, hi).unwrap();
        prop_assert!(p_hi.value <= p_lo.value);
        for p in [p_lo, p_hi] {
            prop_assert!(p.rank_above <= n);
            prop_assert_eq!(p.value, (1 + p.rank_above) as f64 / (n + 1) as f64);
        }
    }
}

#[test]
fn self_scoring_distinct_values() {
    let cal: Vec<f64> = (0..20).map(|i| (i * 7 % 20) as f64).collect();
    let cv = ScoreVector::new(cal).unwrap();
    let mut values: Vec<f64> = marginal_pvalues_batch(&cv, &cv).unwrap().iter().map(|p| p.value).collect();
    values.sort_by(f64::total_cmp);
    let expected: Vec<f64> = (2..=21).map(|k| k as f64 / 21.0).collect();
    assert_eq!(values, expected);
}

#[test]
fn marginal_validity_under_the_uniform_null() {
    let (n, sims) = (99usize, 100_000usize);
    let mut rng = ChaCha8Rng::seed_from_u64(20_231);
    let levels = [0.01, 0.05, 0.1, 0.5];
    let mut hits = [0usize; 4];
    let mut cal = vec![0.0f64; n];
    for _ in 0..sims {
        cal.iter_mut().for_each(|c| *c = rng.random());
        let x: f64 = rng.random();
        let p = brute_force(&cal, x);
        for (h, &t) in hits.iter_mut().zip(&levels) {
            if p <= t {
                *h += 1;
            }
        }
    }
    for (&h, &t) in hits.iter().zip(&levels) {
        let freq = h as f64 / sims as f64;
        let sigma = (t * (1.0 - t) / sims as f64).sqrt();
        assert!(freq <= t + 3.0 * sigma, "t={t}: {freq}");
    }
}

#[test]
fn conditional_dominates_marginal_for_diagonal_dominating_families() {
    for n in [16usize, 100, 1000] {
        for delta in [0.01, 0.05, 0.1, 0.5] {
            for bounds in [dkwm_bounds(n, delta).unwrap(), asymptotic_bounds(n, delta).unwrap()] {
                for k in 0..=n {
                    let p = MarginalPValue::<f64>::from_rank(k, n);
                    let cc = conditional_pvalue(&bounds, &p).unwrap();
                    assert!(cc >= p.value, "{:?} n={n} delta={delta} k={k}", bounds.method());
                    assert!(cc > 0.0 && cc <= 1.0);
                }
            }
        }
    }
}
