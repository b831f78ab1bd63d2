//! Ridge-regularized maximum-likelihood Elo fit by damped Newton iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::{sigmoid, MatchRecord, RatingState};

pub const DEFAULT_MLE_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            ridge: DEFAULT_MLE_RIDGE,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Summed cross-entropy over `history` plus `(ridge/2)‖r‖²`.
pub fn mle_objective(history: &[MatchRecord], r: &[f64], ridge: f64) -> f64 {
    let data: f64 = history
        .iter()
        .map(|m| {
            let z = r[m.x] - r[m.y];
            // −o log σ(z) − (1−o) log σ(−z)
            m.o * softplus(-z) + (1.0 - m.o) * softplus(z)
        })
        .sum();
    data + 0.5 * ridge * r.iter().map(|v| v * v).sum::<f64>()
}

fn gradient(history: &[MatchRecord], r: &[f64], ridge: f64) -> DVector<f64> {
    let mut g = DVector::from_iterator(r.len(), r.iter().map(|v| ridge * v));
    for m in history {
        let resid = sigmoid(r[m.x] - r[m.y]) - m.o;
        g[m.x] += resid;
        g[m.y] -= resid;
    }
    g
}

fn hessian(history: &[MatchRecord], r: &[f64], ridge: f64) -> DMatrix<f64> {
    let n = r.len();
    let mut h = DMatrix::from_diagonal_element(n, n, ridge);
    for m in history {
        if m.x == m.y {
            continue;
        }
        let p = sigmoid(r[m.x] - r[m.y]);
        let w = p * (1.0 - p);
        h[(m.x, m.x)] += w;
        h[(m.y, m.y)] += w;
        h[(m.x, m.y)] -= w;
        h[(m.y, m.x)] -= w;
    }
    h
}

/// Fits ratings to `history` with the given ridge and default tolerances.
pub fn mle_fit(history: &[MatchRecord], n: usize, ridge: f64) -> Result<RatingState> {
    let opts = MleOptions {
        ridge,
        ..MleOptions::default()
    };
    mle_fit_from(history, n, &opts, None)
}

/// Newton/IRLS with Armijo step halving, optionally warm-started.
pub fn mle_fit_from(
    history: &[MatchRecord],
    n: usize,
    opts: &MleOptions,
    init: Option<&[f64]>,
) -> Result<RatingState> {
    if !(opts.ridge > 0.0) {
        return Err(Error::param("ridge", "must be positive"));
    }
    if let Some(&MatchRecord { x, y, .. }) = history.iter().find(|m| m.x >= n || m.y >= n) {
        return Err(Error::IndexOutOfRange { index: x.max(y), n });
    }
    let mut r: Vec<f64> = match init {
        Some(v) if v.len() == n => v.to_vec(),
        _ => vec![0.0; n],
    };
    let mut obj = mle_objective(history, &r, opts.ridge);
    let mut grad_norm = f64::INFINITY;

    for _ in 0..opts.max_iter {
        let g = gradient(history, &r, opts.ridge);
        grad_norm = g.norm();
        if grad_norm <= opts.tol {
            return Ok(centered(r));
        }
        let h = hessian(history, &r, opts.ridge);
        let dir = match h.cholesky() {
            Some(ch) => -ch.solve(&g),
            // ridge keeps H positive definite; fall back to steepest descent
            None => -g.clone(),
        };
        let slope = g.dot(&dir);

        if -slope < 1e-12 * (1.0 + obj.abs()) {
            // predicted decrease is below objective rounding: plain Newton step
            r.iter_mut().zip(dir.iter()).for_each(|(a, d)| *a += d);
            obj = mle_objective(history, &r, opts.ridge);
            continue;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = r
                .iter()
                .zip(dir.iter())
                .map(|(a, d)| a + step * d)
                .collect();
            let cand_obj = mle_objective(history, &cand, opts.ridge);
            if cand_obj <= obj + 1e-4 * step * slope {
                r = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let g = gradient(history, &r, opts.ridge);
    grad_norm = grad_norm.min(g.norm());
    if g.norm() <= opts.tol {
        return Ok(centered(r));
    }
    Err(Error::Solver {
        iterations: opts.max_iter,
        grad_norm,
        last: r,
    })
}

fn centered(mut r: Vec<f64>) -> RatingState {
    let mean = r.iter().sum::<f64>() / r.len().max(1) as f64;
    for v in &mut r {
        *v -= mean;
    }
    RatingState::elo(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn empty_history_gives_zero() {
        let s = mle_fit(&[], 4, 1e-4).unwrap();
        assert_eq!(s.r, vec![0.0; 4]);
    }

    #[test]
    fn symmetric_history_gives_zero() {
        let h = [MatchRecord::new(0, 1, true), MatchRecord::new(1, 0, true)];
        let s = mle_fit(&h, 2, 1e-4).unwrap();
        assert!(s.r.iter().all(|v| v.abs() < 1e-12));
    }

    /// Bisection oracle on the scalar difference `d = r_0 − r_1`.
    ///
    /// With `r = (d/2, −d/2)` the objective is `−log σ(d) + (ridge/4) d²`,
    /// stationary where `1 − σ(d) = (ridge/2) d`.
    fn single_win_oracle(ridge: f64) -> f64 {
        let f = |d: f64| (1.0 - sigmoid(d)) - 0.5 * ridge * d;
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn single_win_matches_bisection_oracle() {
        let d = single_win_oracle(0.01);
        // frozen from the oracle above
        assert!((d - 3.913_994_819_528_106).abs() < 1e-9, "oracle d = {d}");
        let s = mle_fit(&[MatchRecord::new(0, 1, true)], 2, 0.01).unwrap();
        assert!((s.r[0] - d / 2.0).abs() < 1e-6);
        assert!((s.r[1] + d / 2.0).abs() < 1e-6);
    }

    #[test]
    fn optimum_beats_random_perturbations() {
        let mut rng = rng::seeded(42);
        let n = 8;
        let truth: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let history: Vec<MatchRecord> = (0..400)
            .map(|_| {
                let x = rng.random_range(0..n);
                let y = (x + rng.random_range(1..n)) % n;
                let won = rng.random_bool(sigmoid(truth[x] - truth[y]));
                MatchRecord::new(x, y, won)
            })
            .collect();
        let ridge = 1e-4;
        let s = mle_fit(&history, n, ridge).unwrap();
        assert!(gradient(&history, &s.r, ridge).norm() <= 1e-8);
        assert!(s.r.iter().sum::<f64>().abs() < 1e-9);
        let best = mle_objective(&history, &s.r, ridge);
        for _ in 0..100 {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let moved: Vec<f64> =
                s.r.iter()
                    .zip(&u)
                    .map(|(r, d)| r + 1e-3 * d / norm)
                    .collect();
            assert!(mle_objective(&history, &moved, ridge) >= best);
        }
    }

    #[test]
    fn unbeaten_player_stays_finite() {
        let history: Vec<MatchRecord> = (0..30)
            .map(|i| MatchRecord::new(0, 1 + i % 3, true))
            .collect();
        let s = mle_fit(&history, 4, 1e-4).unwrap();
        assert!(s.r.iter().all(|v| v.is_finite()));
        assert_eq!(crate::game::argmax(&s.r), 0);
    }

    #[test]
    fn iteration_cap_reports_solver_error() {
        let history: Vec<MatchRecord> = (0..10).map(|_| MatchRecord::new(0, 1, true)).collect();
        let opts = MleOptions {
            ridge: 1e-4,
            tol: 1e-8,
            max_iter: 1,
        };
        match mle_fit_from(&history, 2, &opts, None) {
            Err(Error::Solver { last, .. }) => assert_eq!(last.len(), 2),
            other => panic!("expected solver error, got {other:?}"),
        }
    }
}
