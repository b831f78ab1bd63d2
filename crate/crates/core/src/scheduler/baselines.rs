//! Baselines that choose pairs without a confidence model and learn ratings
//! with one SGD step per match.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::rating::{sgd_step, RatingState};

use super::{uniform_pair, Algorithm, Scheduler, SchedulerConfig};

/// Ratings updated after every match with constant step `eta0`.
#[derive(Debug, Clone)]
struct OnlineRatings {
    state: RatingState,
    eta: f64,
}

impl OnlineRatings {
    fn new(cfg: &SchedulerConfig, rng: &mut dyn RngCore) -> Result<Self> {
        Ok(Self {
            state: cfg.initial_state(rng)?,
            eta: cfg.eta0(),
        })
    }

    fn observe(&mut self, x: usize, y: usize, x_won: bool) -> Result<()> {
        let n = self.state.n();
        for index in [x, y] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, n });
            }
        }
        sgd_step(
            &mut self.state,
            x,
            y,
            if x_won { 1.0 } else { 0.0 },
            self.eta,
        );
        Ok(())
    }
}

/// Uniformly random pair each round.
#[derive(Debug, Clone)]
pub struct RandomPairs {
    n: usize,
    ratings: OnlineRatings,
}

impl RandomPairs {
    pub fn new(cfg: SchedulerConfig, rng: &mut dyn RngCore) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            n: cfg.n,
            ratings: OnlineRatings::new(&cfg, rng)?,
        })
    }
}

impl Scheduler for RandomPairs {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Random
    }

    fn select_pair(&mut self, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        Ok(uniform_pair(self.n, rng))
    }

    fn observe(&mut self, x: usize, y: usize, x_won: bool) -> Result<()> {
        self.ratings.observe(x, y, x_won)
    }

    fn estimate(&self) -> Result<RatingState> {
        Ok(self.ratings.state.clone())
    }
}

/// Hoeffding half-width `√(log(2/δ) / (2N))`.
pub fn hoeffding_half_width(delta: f64, count: usize) -> f64 {
    ((2.0 / delta).ln() / (2.0 * count as f64)).sqrt()
}

/// A pair is resolved once its confidence interval around the empirical win
/// rate excludes 1/2, or once it has `n_max` samples.
pub fn pair_resolved(wins: usize, count: usize, delta: f64, n_max: usize) -> bool {
    if count == 0 {
        return false;
    }
    if count >= n_max {
        return true;
    }
    let p_hat = wins as f64 / count as f64;
    let hw = hoeffding_half_width(delta, count);
    p_hat - hw > 0.5 || p_hat + hw < 0.5
}

/// Uniform sampling over pairs whose win rate is not yet resolved.
#[derive(Debug, Clone)]
pub struct RgUcb {
    n: usize,
    delta: f64,
    n_max: usize,
    /// Per ordered cell `x * n + y` with `x < y`: matches and wins of `x`.
    counts: Vec<usize>,
    wins: Vec<usize>,
    unresolved: Vec<(usize, usize)>,
    /// Position of each pair in `unresolved`.
    slot: Vec<Option<usize>>,
    ratings: OnlineRatings,
}

impl RgUcb {
    pub fn new(cfg: SchedulerConfig, rng: &mut dyn RngCore) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let mut unresolved = Vec::with_capacity(n * (n - 1) / 2);
        let mut slot = vec![None; n * n];
        for x in 0..n {
            for y in (x + 1)..n {
                slot[x * n + y] = Some(unresolved.len());
                unresolved.push((x, y));
            }
        }
        Ok(Self {
            n,
            delta: cfg.delta,
            n_max: cfg.n_max,
            counts: vec![0; n * n],
            wins: vec![0; n * n],
            unresolved,
            slot,
            ratings: OnlineRatings::new(&cfg, rng)?,
        })
    }

    pub fn unresolved(&self) -> &[(usize, usize)] {
        &self.unresolved
    }

    pub fn count(&self, x: usize, y: usize) -> usize {
        let (a, b) = (x.min(y), x.max(y));
        self.counts[a * self.n + b]
    }

    fn resolve(&mut self, cell: usize) {
        if let Some(pos) = self.slot[cell].take() {
            self.unresolved.swap_remove(pos);
            if let Some(&(a, b)) = self.unresolved.get(pos) {
                self.slot[a * self.n + b] = Some(pos);
            }
        }
    }
}

impl Scheduler for RgUcb {
    fn algorithm(&self) -> Algorithm {
        Algorithm::RgUcb
    }

    fn select_pair(&mut self, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        if self.unresolved.is_empty() {
            return Ok(uniform_pair(self.n, rng));
        }
        let i = rng.random_range(0..self.unresolved.len());
        Ok(self.unresolved[i])
    }

    fn observe(&mut self, x: usize, y: usize, x_won: bool) -> Result<()> {
        self.ratings.observe(x, y, x_won)?;
        if x == y {
            return Ok(());
        }
        let (a, b) = (x.min(y), x.max(y));
        let cell = a * self.n + b;
        self.counts[cell] += 1;
        // wins are tallied for the lower index
        if x_won == (x == a) {
            self.wins[cell] += 1;
        }
        if pair_resolved(self.wins[cell], self.counts[cell], self.delta, self.n_max) {
            self.resolve(cell);
        }
        Ok(())
    }

    fn estimate(&self) -> Result<RatingState> {
        Ok(self.ratings.state.clone())
    }
}

/// Keeps a champion and challenges it with a uniformly random opponent;
/// the winner becomes champion.
#[derive(Debug, Clone)]
pub struct Dbgd {
    n: usize,
    champion: usize,
    ratings: OnlineRatings,
}

impl Dbgd {
    pub fn new(cfg: SchedulerConfig, rng: &mut dyn RngCore) -> Result<Self> {
        cfg.validate()?;
        let champion = rng.random_range(0..cfg.n);
        Ok(Self {
            n: cfg.n,
            champion,
            ratings: OnlineRatings::new(&cfg, rng)?,
        })
    }

    /// Starts from a given champion instead of a random one.
    pub fn with_champion(
        cfg: SchedulerConfig,
        champion: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let mut d = Self::new(cfg, rng)?;
        if champion >= d.n {
            return Err(Error::IndexOutOfRange {
                index: champion,
                n: d.n,
            });
        }
        d.champion = champion;
        Ok(d)
    }

    pub fn champion(&self) -> usize {
        self.champion
    }
}

impl Scheduler for Dbgd {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Dbgd
    }

    fn select_pair(&mut self, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        let mut opp = rng.random_range(0..self.n - 1);
        if opp >= self.champion {
            opp += 1;
        }
        Ok((self.champion.min(opp), self.champion.max(opp)))
    }

    fn observe(&mut self, x: usize, y: usize, x_won: bool) -> Result<()> {
        self.ratings.observe(x, y, x_won)?;
        let winner = if x_won { x } else { y };
        if (x == self.champion || y == self.champion) && winner != self.champion {
            self.champion = winner;
        }
        Ok(())
    }

    fn estimate(&self) -> Result<RatingState> {
        Ok(self.ratings.state.clone())
    }
}
