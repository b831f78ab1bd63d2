//! Regret and ranking-quality metrics against ground-truth ratings.
//!
//! Rankings sort by descending rating with ties broken by the lower index.

use crate::error::{Error, Result};
use crate::game::TrueRatings;

/// `r*_{x*} − (r*_x + r*_y)/2`.
pub fn instant_regret(truth: &TrueRatings, x: usize, y: usize) -> f64 {
    let r = &truth.r_star;
    r[truth.best] - 0.5 * (r[x] + r[y])
}

/// Player indices ordered best-first.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// `1 / rank` of the true best player under `est` (rank 1 is best).
pub fn reciprocal_rank(truth: &TrueRatings, est: &[f64]) -> f64 {
    let pos = ranking(est)
        .iter()
        .position(|&i| i == truth.best)
        .expect("estimate covers every player");
    1.0 / (pos + 1) as f64
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must lie in 1..={n}, got {k}")));
    }
    Ok(())
}

fn true_top_k(truth: &TrueRatings, k: usize) -> Vec<bool> {
    let mut relevant = vec![false; truth.n()];
    for &i in &ranking(&truth.r_star)[..k] {
        relevant[i] = true;
    }
    relevant
}

/// Fraction of the predicted top-k that is in the true top-k.
pub fn hit_ratio_at_k(truth: &TrueRatings, est: &[f64], k: usize) -> Result<f64> {
    check_k(k, truth.n())?;
    let relevant = true_top_k(truth, k);
    let hits = ranking(est)[..k].iter().filter(|&&i| relevant[i]).count();
    Ok(hits as f64 / k as f64)
}

/// Binary-relevance NDCG@k with base-2 discounts.
pub fn ndcg_at_k(truth: &TrueRatings, est: &[f64], k: usize) -> Result<f64> {
    check_k(k, truth.n())?;
    let relevant = true_top_k(truth, k);
    let discount = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
    let dcg: f64 = ranking(est)[..k]
        .iter()
        .enumerate()
        .filter(|(_, &i)| relevant[i])
        .map(|(pos, _)| discount(pos))
        .sum();
    let ideal: f64 = (0..k).map(discount).sum();
    Ok(dcg / ideal)
}

/// Final-state metrics for one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSnapshot {
    pub rr: f64,
    pub hr: Vec<f64>,
    pub ndcg: Vec<f64>,
}

pub fn snapshot(truth: &TrueRatings, est: &[f64], ks: &[usize]) -> Result<MetricSnapshot> {
    Ok(MetricSnapshot {
        rr: reciprocal_rank(truth, est),
        hr: ks
            .iter()
            .map(|&k| hit_ratio_at_k(truth, est, k))
            .collect::<Result<_>>()?,
        ndcg: ks
            .iter()
            .map(|&k| ndcg_at_k(truth, est, k))
            .collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{elo_game_from_ratings, true_ratings, DEFAULT_CLIP_EPS};
    use proptest::prelude::*;

    fn truth_of(r: &[f64]) -> TrueRatings {
        true_ratings(&elo_game_from_ratings(r).unwrap(), DEFAULT_CLIP_EPS).unwrap()
    }

    #[test]
    fn regret_examples() {
        let t = truth_of(&[1.0, 0.5, 0.0]);
        assert_eq!(instant_regret(&t, 0, 0), 0.0);
        assert!((instant_regret(&t, 1, 2) - 0.75).abs() < 1e-12);
        assert!((instant_regret(&t, 0, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rr_examples() {
        let t = truth_of(&[1.0, 0.5, 0.0, -0.5]);
        assert_eq!(reciprocal_rank(&t, &[3.0, 2.0, 1.0, 0.0]), 1.0);
        assert!((reciprocal_rank(&t, &[1.0, 2.0, 3.0, 0.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(reciprocal_rank(&t, &[0.0; 4]), 1.0);
    }

    #[test]
    fn hr_and_ndcg_examples() {
        // true order 0 > 1 > 2 > 3
        let t = truth_of(&[1.0, 0.5, 0.0, -0.5]);
        let perfect = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(hit_ratio_at_k(&t, &perfect, 2).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&t, &perfect, 2).unwrap(), 1.0);
        assert_eq!(hit_ratio_at_k(&t, &[0.0, 1.0, 2.0, 3.0], 4).unwrap(), 1.0);

        // predicted order [0, 2, 1, 3]
        let est = [3.0, 1.0, 2.0, 0.0];
        assert_eq!(hit_ratio_at_k(&t, &est, 2).unwrap(), 0.5);
        let want = 1.0 / (1.0 + 1.0 / 3f64.log2());
        assert!((ndcg_at_k(&t, &est, 2).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.6131).abs() < 1e-4);

        let reversed = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(ndcg_at_k(&t, &reversed, 2).unwrap(), 0.0);
        assert!(hit_ratio_at_k(&t, &reversed, 0).is_err());
        assert!(ndcg_at_k(&t, &reversed, 5).is_err());
    }

    proptest! {
        #[test]
        fn metrics_bounded_and_shift_invariant(est in prop::collection::vec(-3.0f64..3.0, 6),
                                                shift in -10.0f64..10.0, k in 1usize..=6) {
            let t = truth_of(&[0.9, -0.2, 0.4, 0.1, -0.7, 0.3]);
            let shifted: Vec<f64> = est.iter().map(|v| v + shift).collect();
            let rr = reciprocal_rank(&t, &est);
            let hr = hit_ratio_at_k(&t, &est, k).unwrap();
            let nd = ndcg_at_k(&t, &est, k).unwrap();
            prop_assert!(rr > 0.0 && rr <= 1.0);
            prop_assert!((0.0..=1.0).contains(&hr));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&nd));
            prop_assert_eq!((nd - 1.0).abs() < 1e-12, hr == 1.0);
            // shifting can reorder exact float ties only, so compare orderings
            if ranking(&shifted) == ranking(&est) {
                prop_assert_eq!(reciprocal_rank(&t, &shifted), rr);
                prop_assert_eq!(hit_ratio_at_k(&t, &shifted, k).unwrap(), hr);
                prop_assert_eq!(ndcg_at_k(&t, &shifted, k).unwrap(), nd);
            }
        }
    }
}
