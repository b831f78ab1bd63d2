use rand::RngCore;

use crate::design::DesignTracker;
use crate::error::{Error, Result};
use crate::rating::{
    batch_update, mle_fit, mle_fit_from, BatchBuffer, MatchRecord, MleOptions, RatingState,
    SgdState,
};

use super::{
    candidate_set, select_pair, theoretical_gamma, uniform_pair, Algorithm, GammaMode, RatingModel,
    Scheduler, SchedulerConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warmup,
    Active,
}

/// UCB width for round `t` (1-based).
fn gamma_at(cfg: &SchedulerConfig, t: usize) -> f64 {
    match cfg.gamma_mode {
        GammaMode::Fixed => cfg.gamma,
        GammaMode::Theoretical => theoretical_gamma(t.max(1), &cfg.theory()),
    }
}

/// Candidate set, widened to every player when no one survives (possible
/// only with cyclic features, where domination can be circular).
fn candidates_or_all(est: &RatingState, tracker: &DesignTracker, gamma: f64) -> Vec<usize> {
    let s = candidate_set(est, tracker, gamma);
    if s.is_empty() {
        (0..est.n()).collect()
    } else {
        s
    }
}

fn check_pair(n: usize, x: usize, y: usize) -> Result<()> {
    for index in [x, y] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    Ok(())
}

/// Dueling-bandit scheduler with projected batch SGD (Elo or mElo).
#[derive(Debug, Clone)]
pub struct MaxIn {
    cfg: SchedulerConfig,
    phase: Phase,
    warmup_log: Vec<MatchRecord>,
    /// Cyclic features drawn at construction, installed after warmup.
    initial_c: Vec<f64>,
    buffer: BatchBuffer,
    sgd: Option<SgdState>,
    tracker: DesignTracker,
    candidates: Vec<usize>,
    round: usize,
}

impl MaxIn {
    pub fn new(cfg: SchedulerConfig, rng: &mut dyn RngCore) -> Result<Self> {
        cfg.validate()?;
        let initial_c = match cfg.effective_model() {
            RatingModel::Melo => RatingState::melo_random(cfg.n, cfg.k, cfg.c_init, rng)?.c,
            RatingModel::Elo => Vec::new(),
        };
        Ok(Self {
            phase: Phase::Warmup,
            warmup_log: Vec::with_capacity(cfg.tau),
            initial_c,
            buffer: BatchBuffer::new(cfg.tau)?,
            sgd: None,
            tracker: DesignTracker::new(cfg.n, cfg.lambda_ridge)?,
            candidates: (0..cfg.n).collect(),
            round: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn tracker(&self) -> &DesignTracker {
        &self.tracker
    }

    pub fn sgd(&self) -> Option<&SgdState> {
        self.sgd.as_ref()
    }

    pub fn buffer(&self) -> &BatchBuffer {
        &self.buffer
    }

    /// Candidate set used by the most recent selection.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    /// Completed batch updates.
    pub fn batches(&self) -> usize {
        self.sgd.as_ref().map_or(0, |s| s.batches)
    }

    /// Rounds observed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    fn finish_warmup(&mut self) -> Result<()> {
        let r_hat = mle_fit(&self.warmup_log, self.cfg.n, self.cfg.mle_ridge)?;
        let init = match self.cfg.effective_model() {
            RatingModel::Elo => r_hat,
            RatingModel::Melo => {
                RatingState::melo(r_hat.r, std::mem::take(&mut self.initial_c), self.cfg.k)?
            }
        };
        self.sgd = Some(SgdState::new(
            init,
            self.cfg.radius,
            self.cfg.eta0(),
            self.cfg.alpha(),
        )?);
        self.phase = Phase::Active;
        Ok(())
    }
}

impl Scheduler for MaxIn {
    fn algorithm(&self) -> Algorithm {
        self.cfg.algo
    }

    fn select_pair(&mut self, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        let sgd = match (self.phase, &self.sgd) {
            (Phase::Active, Some(sgd)) => sgd,
            _ => return Ok(uniform_pair(self.cfg.n, rng)),
        };
        let gamma = gamma_at(&self.cfg, self.round + 1);
        self.candidates = candidates_or_all(&sgd.bar, &self.tracker, gamma);
        Ok(select_pair(&self.candidates, &self.tracker))
    }

    fn observe(&mut self, x: usize, y: usize, x_won: bool) -> Result<()> {
        check_pair(self.cfg.n, x, y)?;
        self.round += 1;
        if x == y {
            // self-pairs carry no information
            return Ok(());
        }
        let record = MatchRecord::new(x, y, x_won);
        self.tracker.update(x, y);
        match self.phase {
            Phase::Warmup => {
                self.warmup_log.push(record);
                if self.warmup_log.len() == self.cfg.tau {
                    self.finish_warmup()?;
                }
            }
            Phase::Active => {
                self.buffer.push(record)?;
                if self.buffer.is_full() {
                    let sgd = self.sgd.as_mut().expect("active phase has SGD state");
                    batch_update(sgd, &self.buffer)?;
                    self.buffer.clear();
                }
            }
        }
        Ok(())
    }

    fn estimate(&self) -> Result<RatingState> {
        match &self.sgd {
            Some(sgd) => Ok(sgd.bar.clone()),
            None => Err(Error::NotReady),
        }
    }

    fn in_warmup(&self) -> bool {
        self.phase == Phase::Warmup
    }

    fn batches(&self) -> Option<usize> {
        Some(MaxIn::batches(self))
    }
}

/// Candidate-set scheduler refitting the maximum-likelihood Elo ratings on
/// the full match history every round.
#[derive(Debug, Clone)]
pub struct MaxInP {
    cfg: SchedulerConfig,
    phase: Phase,
    history: Vec<MatchRecord>,
    tracker: DesignTracker,
    current: Option<RatingState>,
    candidates: Vec<usize>,
}

impl MaxInP {
    pub fn new(cfg: SchedulerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            phase: Phase::Warmup,
            history: Vec::new(),
            tracker: DesignTracker::new(cfg.n, cfg.lambda_ridge)?,
            current: None,
            candidates: (0..cfg.n).collect(),
            cfg,
        })
    }

    pub fn history(&self) -> &[MatchRecord] {
        &self.history
    }

    pub fn tracker(&self) -> &DesignTracker {
        &self.tracker
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    fn refit(&mut self) -> Result<()> {
        let opts = MleOptions {
            ridge: self.cfg.mle_ridge,
            ..MleOptions::default()
        };
        let warm = self.current.as_ref().map(|s| s.r.as_slice());
        self.current = Some(mle_fit_from(&self.history, self.cfg.n, &opts, warm)?);
        Ok(())
    }
}

impl Scheduler for MaxInP {
    fn algorithm(&self) -> Algorithm {
        Algorithm::MaxInP
    }

    fn select_pair(&mut self, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        if self.phase == Phase::Warmup {
            return Ok(uniform_pair(self.cfg.n, rng));
        }
        let est = self.current.as_ref().expect("fitted after warmup");
        let gamma = gamma_at(&self.cfg, self.history.len() + 1);
        self.candidates = candidates_or_all(est, &self.tracker, gamma);
        Ok(select_pair(&self.candidates, &self.tracker))
    }

    fn observe(&mut self, x: usize, y: usize, x_won: bool) -> Result<()> {
        check_pair(self.cfg.n, x, y)?;
        self.history.push(MatchRecord::new(x, y, x_won));
        self.tracker.update(x, y);
        if self.phase == Phase::Warmup && self.history.len() == self.cfg.tau {
            self.phase = Phase::Active;
        }
        if self.phase == Phase::Active {
            self.refit()?;
        }
        Ok(())
    }

    fn estimate(&self) -> Result<RatingState> {
        match (self.phase, &self.current) {
            (Phase::Active, Some(s)) => Ok(s.clone()),
            _ => Err(Error::NotReady),
        }
    }

    fn in_warmup(&self) -> bool {
        self.phase == Phase::Warmup
    }
}
