//! Match-scheduling policies.
//!
//! Every policy implements [`Scheduler`]: pick a pair, observe the outcome,
//! report the current rating estimate. [`MaxIn`] is the UCB dueling-bandit
//! scheduler driven by projected batch SGD (Elo or mElo); [`MaxInP`] is the
//! same candidate-set rule driven by a full MLE refit each round. The
//! remaining baselines play pairs by simple rules and learn ratings with
//! per-match SGD.

mod baselines;
mod maxin;
mod theory;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

pub use baselines::{hoeffding_half_width, pair_resolved, Dbgd, RandomPairs, RgUcb};
pub use maxin::{MaxIn, MaxInP, Phase};
pub use theory::{g1, g1_with_log_horizon, g2, theoretical_gamma, TheoryParams};

use crate::design::{DesignTracker, DEFAULT_LAMBDA_RIDGE};
use crate::error::{Error, Result};
use crate::game::{sample_outcome, WinMatrix};
use crate::rating::{RatingState, DEFAULT_RADIUS};

/// UCB width grid searched in experiments.
pub const GAMMA_GRID: [f64; 10] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0];

/// Step-size grid searched in experiments.
pub const ETA_GRID: [f64; 7] = [0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0];

/// Single-run UCB width. Wider than the tuning grid: the design-matrix norm
/// ignores the logistic Fisher weight, so grid values drop the best player
/// too often on untuned runs.
pub const DEFAULT_GAMMA: f64 = 3.0;

/// Ridge of the warmup fit; acts as a unit-scale prior on τ ≈ 0.7n games.
pub const DEFAULT_WARMUP_RIDGE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    MaxInElo,
    MaxInMelo,
    Random,
    RgUcb,
    Dbgd,
    MaxInP,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::MaxInElo,
        Algorithm::MaxInMelo,
        Algorithm::Random,
        Algorithm::RgUcb,
        Algorithm::Dbgd,
        Algorithm::MaxInP,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::MaxInElo => "maxin_elo",
            Algorithm::MaxInMelo => "maxin_melo",
            Algorithm::Random => "random",
            Algorithm::RgUcb => "rg_ucb",
            Algorithm::Dbgd => "dbgd",
            Algorithm::MaxInP => "maxinp",
        }
    }

    /// Whether the policy starts with uniformly sampled warmup matches.
    pub fn has_warmup(self) -> bool {
        matches!(
            self,
            Algorithm::MaxInElo | Algorithm::MaxInMelo | Algorithm::MaxInP
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Rating model learned by the baselines; the MaxIn variants fix their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RatingModel {
    Elo,
    Melo,
}

impl FromStr for RatingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elo" => Ok(RatingModel::Elo),
            "melo" => Ok(RatingModel::Melo),
            _ => Err(Error::param(
                "model",
                format!("expected `elo` or `melo`, got `{s}`"),
            )),
        }
    }
}

impl fmt::Display for RatingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingModel::Elo => "elo",
            RatingModel::Melo => "melo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GammaMode {
    Fixed,
    Theoretical,
}

impl FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(GammaMode::Fixed),
            "theoretical" => Ok(GammaMode::Theoretical),
            _ => Err(Error::param(
                "gamma_mode",
                format!("expected `fixed` or `theoretical`, got `{s}`"),
            )),
        }
    }
}

impl fmt::Display for GammaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GammaMode::Fixed => "fixed",
            GammaMode::Theoretical => "theoretical",
        })
    }
}

/// Default batch size `round(0.7 n)`, at least 1.
pub fn default_tau(n: usize) -> usize {
    ((0.7 * n as f64).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig {
    pub algo: Algorithm,
    /// Model used by Random, RG-UCB and DBGD.
    pub model: RatingModel,
    pub n: usize,
    pub horizon: usize,
    pub tau: usize,
    pub gamma: f64,
    pub gamma_mode: GammaMode,
    /// Strong-convexity parameter; `None` means `tau`.
    pub alpha: Option<f64>,
    /// Base step size; `None` picks the per-algorithm default.
    pub eta0: Option<f64>,
    /// Half-dimension of mElo cyclic features.
    pub k: usize,
    /// RG-UCB stopping confidence.
    pub delta: f64,
    /// RG-UCB per-pair sample cap.
    pub n_max: usize,
    pub lambda_ridge: f64,
    pub mle_ridge: f64,
    pub radius: f64,
    pub c1: f64,
    /// Half-width of the uniform mElo feature initialization.
    pub c_init: f64,
}

impl SchedulerConfig {
    pub fn new(algo: Algorithm, n: usize, horizon: usize) -> Self {
        Self {
            algo,
            model: match algo {
                Algorithm::MaxInMelo => RatingModel::Melo,
                _ => RatingModel::Elo,
            },
            n,
            horizon,
            tau: default_tau(n),
            gamma: DEFAULT_GAMMA,
            gamma_mode: GammaMode::Fixed,
            alpha: None,
            eta0: None,
            k: 4,
            delta: 0.2,
            n_max: 200,
            lambda_ridge: DEFAULT_LAMBDA_RIDGE,
            mle_ridge: DEFAULT_WARMUP_RIDGE,
            radius: DEFAULT_RADIUS,
            c1: 0.25,
            c_init: 0.1,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.tau as f64)
    }

    pub fn eta0(&self) -> f64 {
        self.eta0.unwrap_or(match self.algo {
            Algorithm::MaxInElo | Algorithm::MaxInP => 40.0,
            Algorithm::MaxInMelo => 3.0,
            Algorithm::Random | Algorithm::RgUcb | Algorithm::Dbgd => 0.1,
        })
    }

    /// The model actually learned by this algorithm.
    pub fn effective_model(&self) -> RatingModel {
        match self.algo {
            Algorithm::MaxInElo | Algorithm::MaxInP => RatingModel::Elo,
            Algorithm::MaxInMelo => RatingModel::Melo,
            _ => self.model,
        }
    }

    pub fn theory(&self) -> TheoryParams {
        TheoryParams {
            c1: self.c1,
            horizon: self.horizon,
            n: self.n,
            alpha: self.alpha(),
            tau: self.tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::Invariant {
                key: key.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.n < 2 {
            return bad("n", "at least two players are required");
        }
        if self.tau < 1 {
            return bad("tau", "batch size must be at least 1");
        }
        if self.algo.has_warmup() && self.tau >= self.horizon {
            return bad("tau", "warmup length must be smaller than the horizon T");
        }
        if self.gamma_mode == GammaMode::Fixed && !(self.gamma > 0.0) {
            return bad("gamma", "must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", "must lie in (0, 1)");
        }
        if self.n_max < 1 {
            return bad("n_max", "must be at least 1");
        }
        if !(self.alpha() > 0.0) {
            return bad("alpha", "must be positive");
        }
        if !(self.eta0() > 0.0) {
            return bad("eta0", "must be positive");
        }
        if self.effective_model() == RatingModel::Melo && self.k < 1 {
            return bad("k", "mElo needs k >= 1");
        }
        if !(self.lambda_ridge > 0.0) {
            return bad("lambda_ridge", "must be positive");
        }
        if !(self.mle_ridge > 0.0) {
            return bad("mle_ridge", "must be positive");
        }
        if !(self.radius > 0.0) {
            return bad("radius", "must be positive");
        }
        if !(self.c1 > 0.0 && self.c1 <= 0.25) {
            return bad("c1", "must lie in (0, 0.25]");
        }
        if !(self.c_init >= 0.0) {
            return bad("c_init", "must be non-negative");
        }
        Ok(())
    }

    /// Initial ratings for the per-match SGD baselines.
    fn initial_state(&self, rng: &mut dyn RngCore) -> Result<RatingState> {
        match self.effective_model() {
            RatingModel::Elo => Ok(RatingState::zeros(self.n)),
            RatingModel::Melo => RatingState::melo_random(self.n, self.k, self.c_init, rng),
        }
    }
}

pub trait Scheduler: Send {
    fn algorithm(&self) -> Algorithm;

    /// Chooses the next pair `(x, y)` with `x <= y`.
    fn select_pair(&mut self, rng: &mut dyn RngCore) -> Result<(usize, usize)>;

    /// Records the outcome of `(x, y)`; `x_won` is from `x`'s perspective.
    fn observe(&mut self, x: usize, y: usize, x_won: bool) -> Result<()>;

    fn estimate(&self) -> Result<RatingState>;

    fn in_warmup(&self) -> bool {
        false
    }

    /// Completed SGD batches, for batch-based schedulers.
    fn batches(&self) -> Option<usize> {
        None
    }
}

pub fn build_scheduler(cfg: &SchedulerConfig, rng: &mut dyn RngCore) -> Result<Box<dyn Scheduler>> {
    cfg.validate()?;
    Ok(match cfg.algo {
        Algorithm::MaxInElo | Algorithm::MaxInMelo => Box::new(MaxIn::new(cfg.clone(), rng)?),
        Algorithm::MaxInP => Box::new(MaxInP::new(cfg.clone())?),
        Algorithm::Random => Box::new(RandomPairs::new(cfg.clone(), rng)?),
        Algorithm::RgUcb => Box::new(RgUcb::new(cfg.clone(), rng)?),
        Algorithm::Dbgd => Box::new(Dbgd::new(cfg.clone(), rng)?),
    })
}

/// One round: select, play against `env`, observe.
pub fn step(
    sched: &mut dyn Scheduler,
    env: &WinMatrix,
    sched_rng: &mut dyn RngCore,
    outcome_rng: &mut dyn RngCore,
) -> Result<(usize, usize, bool)> {
    let (x, y) = sched.select_pair(sched_rng)?;
    let o = sample_outcome(env, x, y, outcome_rng)?;
    sched.observe(x, y, o)?;
    Ok((x, y, o))
}

/// Uniform unordered pair of distinct players, returned as `(min, max)`.
pub fn uniform_pair(n: usize, rng: &mut dyn RngCore) -> (usize, usize) {
    let x = rng.random_range(0..n);
    let mut y = rng.random_range(0..n - 1);
    if y >= x {
        y += 1;
    }
    (x.min(y), x.max(y))
}

/// UCB score `h(x, y)`: the model's logit plus `γ‖e_x − e_y‖_{V⁻¹}`.
pub fn ucb_score(
    est: &RatingState,
    tracker: &DesignTracker,
    gamma: f64,
    x: usize,
    y: usize,
) -> f64 {
    est.logit(x, y) + gamma * tracker.pair_uncertainty(x, y)
}

/// Players not confidently beaten by anyone: `h(x, y) > 0` for all `y ≠ x`.
///
/// For the Elo model the result always contains the top-rated player. With
/// cyclic features it can be empty.
pub fn candidate_set(est: &RatingState, tracker: &DesignTracker, gamma: f64) -> Vec<usize> {
    let n = est.n();
    (0..n)
        .filter(|&x| (0..n).all(|y| y == x || ucb_score(est, tracker, gamma, x, y) > 0.0))
        .collect()
}

/// Most uncertain pair within `candidates` (sorted ascending), first in
/// lexicographic order on ties; a singleton yields the self-pair.
pub fn select_pair(candidates: &[usize], tracker: &DesignTracker) -> (usize, usize) {
    let mut best = (candidates[0], candidates[0]);
    let mut best_u = f64::NEG_INFINITY;
    for (a, &x) in candidates.iter().enumerate() {
        for &y in &candidates[a + 1..] {
            let u = tracker.pair_uncertainty(x, y);
            if u > best_u {
                best_u = u;
                best = (x, y);
            }
        }
    }
    best
}
