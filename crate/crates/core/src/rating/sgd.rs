//! Projected mini-batch SGD with iterate averaging.

use crate::error::{Error, Result};

use super::{pair_gradient, RatingState};

/// Radius of the projection ball around the warmup estimate.
pub const DEFAULT_RADIUS: f64 = 2.0;

/// One observed match; `o` is from `x`'s perspective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchRecord {
    pub x: usize,
    pub y: usize,
    pub o: f64,
}

impl MatchRecord {
    pub fn new(x: usize, y: usize, x_won: bool) -> Self {
        Self {
            x,
            y,
            o: if x_won { 1.0 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchBuffer {
    records: Vec<MatchRecord>,
    tau: usize,
}

impl BatchBuffer {
    pub fn new(tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::param("tau", "batch size must be at least 1"));
        }
        Ok(Self {
            records: Vec::with_capacity(tau),
            tau,
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.records.len() == self.tau
    }

    pub fn records(&self) -> &[MatchRecord] {
        &self.records
    }

    /// Appends a record unless the batch is already full.
    pub fn push(&mut self, record: MatchRecord) -> Result<()> {
        if self.is_full() {
            return Err(Error::IncompleteBatch {
                got: self.records.len() + 1,
                expected: self.tau,
            });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }
}

/// Euclidean projection of `r` onto the ball of `radius` around `center`.
pub fn project(r: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let dist = r
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if dist <= radius {
        return r.to_vec();
    }
    let scale = radius / dist;
    r.iter()
        .zip(center)
        .map(|(a, c)| c + (a - c) * scale)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    /// Current iterate (ratings and, for mElo, cyclic features).
    pub tilde: RatingState,
    /// Average of the iterates of batches `1..=j`; the initializer while `j == 0`.
    pub bar: RatingState,
    pub center: Vec<f64>,
    pub radius: f64,
    pub eta0: f64,
    pub alpha: f64,
    /// Number of completed batches `j`.
    pub batches: usize,
}

impl SgdState {
    /// Starts SGD at `init`, which also fixes the projection center.
    pub fn new(init: RatingState, radius: f64, eta0: f64, alpha: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::param("radius", "must be positive"));
        }
        if !(eta0 > 0.0) {
            return Err(Error::param("eta0", "must be positive"));
        }
        if !(alpha > 0.0) {
            return Err(Error::param("alpha", "must be positive"));
        }
        Ok(Self {
            center: init.r.clone(),
            bar: init.clone(),
            tilde: init,
            radius,
            eta0,
            alpha,
            batches: 0,
        })
    }

    /// Step size `η_j = eta0 / (α j)` for batch `j`.
    pub fn step_size(&self, j: usize) -> f64 {
        self.eta0 / (self.alpha * j as f64)
    }
}

/// Consumes one full batch: gradient of the summed batch loss at the current
/// iterate, projected step on the ratings, unprojected step on the cyclic
/// features, then the running average.
pub fn batch_update(sgd: &mut SgdState, buf: &BatchBuffer) -> Result<()> {
    if !buf.is_full() {
        return Err(Error::IncompleteBatch {
            got: buf.len(),
            expected: buf.tau(),
        });
    }
    let j = sgd.batches + 1;
    let eta = sgd.step_size(j);
    let cur = &sgd.tilde;
    let n = cur.n();
    let d = 2 * cur.k;

    let mut grad_r = vec![0.0; n];
    let mut grad_c = vec![0.0; cur.c.len()];
    for rec in buf.records() {
        if rec.x == rec.y {
            continue;
        }
        let g = pair_gradient(cur, rec.x, rec.y, rec.o);
        grad_r[rec.x] += g.rx;
        grad_r[rec.y] += g.ry;
        for (i, v) in g.cx.iter().enumerate() {
            grad_c[rec.x * d + i] += v;
        }
        for (i, v) in g.cy.iter().enumerate() {
            grad_c[rec.y * d + i] += v;
        }
    }

    let stepped: Vec<f64> = cur
        .r
        .iter()
        .zip(&grad_r)
        .map(|(r, g)| r - eta * g)
        .collect();
    sgd.tilde.r = project(&stepped, &sgd.center, sgd.radius);
    for (c, g) in sgd.tilde.c.iter_mut().zip(&grad_c) {
        *c -= eta * g;
    }

    let w = 1.0 / j as f64;
    if j == 1 {
        sgd.bar = sgd.tilde.clone();
    } else {
        for (b, t) in sgd.bar.r.iter_mut().zip(&sgd.tilde.r) {
            *b += (t - *b) * w;
        }
        for (b, t) in sgd.bar.c.iter_mut().zip(&sgd.tilde.c) {
            *b += (t - *b) * w;
        }
    }
    sgd.batches = j;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn norm_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn project_examples() {
        assert_eq!(project(&[0.5, -1.0], &[0.0, 0.0], 2.0), vec![0.5, -1.0]);
        let p = project(&[3.0, 4.0], &[0.0, 0.0], 2.0);
        assert!((p[0] - 1.2).abs() < 1e-15 && (p[1] - 1.6).abs() < 1e-15);
        assert_eq!(project(&[1.0, 1.0], &[1.0, 1.0], 2.0), vec![1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn project_is_idempotent_and_inside(r in prop::collection::vec(-10.0f64..10.0, 4),
                                             c in prop::collection::vec(-3.0f64..3.0, 4),
                                             radius in 0.1f64..5.0) {
            let once = project(&r, &c, radius);
            let twice = project(&once, &c, radius);
            prop_assert!(norm_dist(&once, &c) <= radius + 1e-12);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn batch_update_conserves_sum_and_stays_in_ball(seed in 0u64..5_000, k in 0usize..3, tau in 1usize..8) {
            let mut rng = rng::seeded(seed);
            let n = 6;
            let mut init = if k == 0 {
                RatingState::zeros(n)
            } else {
                RatingState::melo_random(n, k, 0.3, &mut rng).unwrap()
            };
            for r in &mut init.r { *r = rng.random_range(-1.0..1.0); }
            let sum0: f64 = init.r.iter().sum();
            let mut sgd = SgdState::new(init, 0.5, 5.0, 1.0).unwrap();
            let mut buf = BatchBuffer::new(tau).unwrap();
            for _ in 0..10 {
                buf.clear();
                while !buf.is_full() {
                    let x = rng.random_range(0..n);
                    let y = (x + rng.random_range(1..n)) % n;
                    buf.push(MatchRecord::new(x, y, rng.random_bool(0.5))).unwrap();
                }
                batch_update(&mut sgd, &buf).unwrap();
                let sum: f64 = sgd.tilde.r.iter().sum();
                prop_assert!((sum - sum0).abs() < 1e-12);
                prop_assert!(norm_dist(&sgd.tilde.r, &sgd.center) <= sgd.radius + 1e-12);
            }
        }
    }

    #[test]
    fn single_record_batch() {
        let mut sgd = SgdState::new(RatingState::zeros(2), DEFAULT_RADIUS, 1.0, 1.0).unwrap();
        let mut buf = BatchBuffer::new(1).unwrap();
        buf.push(MatchRecord::new(0, 1, true)).unwrap();
        batch_update(&mut sgd, &buf).unwrap();
        assert_eq!(sgd.tilde.r, vec![0.5, -0.5]);
        assert_eq!(sgd.bar.r, vec![0.5, -0.5]);
        assert_eq!(sgd.batches, 1);
    }

    #[test]
    fn zero_residual_batch_keeps_iterate() {
        let init = RatingState::elo(vec![0.4, -0.1, -0.3]);
        let mut sgd = SgdState::new(init.clone(), DEFAULT_RADIUS, 1.0, 2.0).unwrap();
        let mut buf = BatchBuffer::new(3).unwrap();
        for (x, y) in [(0, 1), (1, 2), (0, 2)] {
            buf.push(MatchRecord {
                x,
                y,
                o: init.predict(x, y),
            })
            .unwrap();
        }
        batch_update(&mut sgd, &buf).unwrap();
        assert_eq!(sgd.tilde.r, init.r);
    }

    #[test]
    fn running_average_over_batches() {
        let mut sgd = SgdState::new(RatingState::zeros(2), 10.0, 1.0, 1.0).unwrap();
        let mut buf = BatchBuffer::new(1).unwrap();
        let mut iterates = Vec::new();
        for _ in 0..5 {
            buf.clear();
            buf.push(MatchRecord::new(0, 1, true)).unwrap();
            batch_update(&mut sgd, &buf).unwrap();
            iterates.push(sgd.tilde.r[0]);
        }
        let mean = iterates.iter().sum::<f64>() / 5.0;
        assert!((sgd.bar.r[0] - mean).abs() < 1e-14);
        assert!((sgd.step_size(4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn incomplete_batch_rejected() {
        let mut sgd = SgdState::new(RatingState::zeros(3), 2.0, 1.0, 1.0).unwrap();
        let mut buf = BatchBuffer::new(2).unwrap();
        buf.push(MatchRecord::new(0, 1, true)).unwrap();
        assert!(matches!(
            batch_update(&mut sgd, &buf),
            Err(Error::IncompleteBatch {
                got: 1,
                expected: 2
            })
        ));
        buf.push(MatchRecord::new(0, 2, false)).unwrap();
        assert!(buf.push(MatchRecord::new(1, 2, false)).is_err());
    }
}
