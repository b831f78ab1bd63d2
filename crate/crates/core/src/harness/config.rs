//! Flat `key=value` run configuration.
//!
//! Files hold one assignment per line; `#` starts a comment. Command-line
//! flags are applied after the file, so they override it.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::{self, WinMatrix, DEFAULT_CLIP_EPS};
use crate::rng::{self, Stream, PRNG_NAME};
use crate::scheduler::{default_tau, Algorithm, GammaMode, RatingModel, SchedulerConfig};

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "algo",
    "model",
    "env",
    "n",
    "rating_scale",
    "noise",
    "dominant_p",
    "matrix",
    "T",
    "tau",
    "gamma",
    "gamma_mode",
    "alpha",
    "eta0",
    "k",
    "delta",
    "n_max",
    "lambda_ridge",
    "mle_ridge",
    "radius",
    "c1",
    "c_init",
    "clip_eps",
    "seed",
    "matrix_seed",
    "scheduler_seed",
    "outcome_seed",
    "replicates",
    "topk",
    "out",
    "summary_out",
    "workers",
    "record_timing",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Elo,
    NoisyElo,
    Triangular,
    Cyclic,
    /// Cyclic ring plus one player beating everyone with `dominant_p`.
    CyclicDominant,
    File,
}

impl EnvKind {
    fn as_str(self) -> &'static str {
        match self {
            EnvKind::Elo => "elo",
            EnvKind::NoisyElo => "noisy_elo",
            EnvKind::Triangular => "triangular",
            EnvKind::Cyclic => "cyclic",
            EnvKind::CyclicDominant => "cyclic_dominant",
            EnvKind::File => "file",
        }
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            EnvKind::Elo,
            EnvKind::NoisyElo,
            EnvKind::Triangular,
            EnvKind::Cyclic,
            EnvKind::CyclicDominant,
            EnvKind::File,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::TypeMismatch {
            key: "env".into(),
            value: s.into(),
            expected: "one of elo, noisy_elo, triangular, cyclic, cyclic_dominant, file",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algo: Algorithm,
    pub model: RatingModel,
    pub env: EnvKind,
    /// Player count for generated games; for `file` it is taken from the matrix.
    pub n: usize,
    pub rating_scale: f64,
    pub noise: f64,
    pub dominant_p: f64,
    pub matrix: Option<PathBuf>,
    pub horizon: usize,
    /// Explicit batch size; `None` means `round(0.7 n)`.
    pub tau: Option<usize>,
    pub gamma: f64,
    pub gamma_mode: GammaMode,
    pub alpha: Option<f64>,
    pub eta0: Option<f64>,
    pub k: usize,
    pub delta: f64,
    pub n_max: usize,
    pub lambda_ridge: f64,
    pub mle_ridge: f64,
    pub radius: f64,
    pub c1: f64,
    pub c_init: f64,
    pub clip_eps: f64,
    pub seed: u64,
    pub matrix_seed: Option<u64>,
    pub scheduler_seed: Option<u64>,
    pub outcome_seed: Option<u64>,
    pub replicates: usize,
    pub topk: Vec<usize>,
    pub out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub workers: usize,
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SchedulerConfig::new(Algorithm::MaxInElo, 20, 5000);
        Self {
            algo: s.algo,
            model: RatingModel::Elo,
            env: EnvKind::Elo,
            n: 20,
            rating_scale: 1.0,
            noise: 0.0,
            dominant_p: 0.8,
            matrix: None,
            horizon: 5000,
            tau: None,
            gamma: s.gamma,
            gamma_mode: s.gamma_mode,
            alpha: None,
            eta0: None,
            k: s.k,
            delta: s.delta,
            n_max: s.n_max,
            lambda_ridge: s.lambda_ridge,
            mle_ridge: s.mle_ridge,
            radius: s.radius,
            c1: s.c1,
            c_init: s.c_init,
            clip_eps: DEFAULT_CLIP_EPS,
            seed: 0,
            matrix_seed: None,
            scheduler_seed: None,
            outcome_seed: None,
            replicates: 1,
            topk: Vec::new(),
            out: None,
            summary_out: None,
            workers: 1,
            record_timing: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T> {
    value.parse().map_err(|_| Error::TypeMismatch {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn opt_to_string<T: Display>(v: &Option<T>) -> String {
    v.as_ref()
        .map_or_else(|| "auto".to_string(), |v| v.to_string())
}

fn parse_opt<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value, expected).map(Some)
    }
}

impl RunConfig {
    /// Applies one assignment. Values are checked for type here and for
    /// cross-key invariants in [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "algo" => self.algo = v.parse()?,
            "model" => {
                self.model = v.parse().map_err(|_| Error::TypeMismatch {
                    key: key.into(),
                    value: v.into(),
                    expected: "elo or melo",
                })?
            }
            "env" => self.env = v.parse()?,
            "n" => self.n = parse_value(key, v, "a player count")?,
            "rating_scale" => self.rating_scale = parse_value(key, v, "a real number")?,
            "noise" => self.noise = parse_value(key, v, "a real number")?,
            "dominant_p" => self.dominant_p = parse_value(key, v, "a probability")?,
            "matrix" => {
                self.matrix = Some(PathBuf::from(v));
                self.env = EnvKind::File;
            }
            "T" => self.horizon = parse_value(key, v, "a round count")?,
            "tau" => self.tau = parse_opt(key, v, "a batch size")?,
            "gamma" => self.gamma = parse_value(key, v, "a real number")?,
            "gamma_mode" => {
                self.gamma_mode = v.parse().map_err(|_| Error::TypeMismatch {
                    key: key.into(),
                    value: v.into(),
                    expected: "fixed or theoretical",
                })?
            }
            "alpha" => self.alpha = parse_opt(key, v, "a real number")?,
            "eta0" => self.eta0 = parse_opt(key, v, "a real number")?,
            "k" => self.k = parse_value(key, v, "an integer")?,
            "delta" => self.delta = parse_value(key, v, "a real number")?,
            "n_max" => self.n_max = parse_value(key, v, "an integer")?,
            "lambda_ridge" => self.lambda_ridge = parse_value(key, v, "a real number")?,
            "mle_ridge" => self.mle_ridge = parse_value(key, v, "a real number")?,
            "radius" => self.radius = parse_value(key, v, "a real number")?,
            "c1" => self.c1 = parse_value(key, v, "a real number")?,
            "c_init" => self.c_init = parse_value(key, v, "a real number")?,
            "clip_eps" => self.clip_eps = parse_value(key, v, "a real number")?,
            "seed" => self.seed = parse_value(key, v, "an unsigned integer")?,
            "matrix_seed" => self.matrix_seed = parse_opt(key, v, "an unsigned integer")?,
            "scheduler_seed" => self.scheduler_seed = parse_opt(key, v, "an unsigned integer")?,
            "outcome_seed" => self.outcome_seed = parse_opt(key, v, "an unsigned integer")?,
            "replicates" => self.replicates = parse_value(key, v, "an integer")?,
            "topk" => {
                self.topk = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',')
                        .map(|s| parse_value(key, s.trim(), "a comma-separated list of integers"))
                        .collect::<Result<_>>()?
                }
            }
            "out" => self.out = Some(PathBuf::from(v)),
            "summary_out" => self.summary_out = Some(PathBuf::from(v)),
            "workers" => self.workers = parse_value(key, v, "an integer")?,
            "record_timing" => self.record_timing = parse_value(key, v, "true or false")?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Batch size for a game of `n` players.
    pub fn tau_for(&self, n: usize) -> usize {
        self.tau.unwrap_or_else(|| default_tau(n))
    }

    /// Checks every invariant that does not need the matrix file.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| {
            Err(Error::Invariant {
                key: key.to_string(),
                reason,
            })
        };
        if self.tau == Some(0) {
            return bad("tau", "batch size must be at least 1".into());
        }
        if self.replicates < 1 {
            return bad("replicates", "must be at least 1".into());
        }
        if self.workers < 1 {
            return bad("workers", "must be at least 1".into());
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 0.5) {
            return bad("clip_eps", "must lie in (0, 0.5)".into());
        }
        if self.env == EnvKind::File && self.matrix.is_none() {
            return bad("matrix", "env=file needs a matrix path".into());
        }
        if self.env != EnvKind::File {
            let min = if matches!(self.env, EnvKind::Cyclic | EnvKind::CyclicDominant) {
                3
            } else {
                2
            };
            if self.n < min {
                return bad("n", format!("this game needs at least {min} players"));
            }
            self.check_n(self.n)?;
        }
        if !(self.rating_scale > 0.0) {
            return bad("rating_scale", "must be positive".into());
        }
        if !(self.noise >= 0.0) {
            return bad("noise", "must be non-negative".into());
        }
        Ok(())
    }

    /// Invariants that depend on the resolved player count.
    pub fn check_n(&self, n: usize) -> Result<()> {
        let tau = self.tau_for(n);
        if self.horizon <= tau {
            return Err(Error::Invariant {
                key: "T".into(),
                reason: format!("horizon {} must exceed tau = {tau}", self.horizon),
            });
        }
        if let Some(&k) = self.topk.iter().find(|&&k| k == 0 || k > n) {
            return Err(Error::Invariant {
                key: "topk".into(),
                reason: format!("{k} is outside 1..={n}"),
            });
        }
        self.scheduler_config(n).validate()
    }

    /// Number of players in the simulated game (generated games fold in a
    /// dominant player).
    pub fn player_count(&self) -> Result<usize> {
        match self.env {
            EnvKind::CyclicDominant => Ok(self.n + 1),
            EnvKind::File => {
                let path = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing matrix".into()))?;
                Ok(game::load_matrix(path, self.clip_eps)?.n())
            }
            _ => Ok(self.n),
        }
    }

    pub fn scheduler_config(&self, n: usize) -> SchedulerConfig {
        SchedulerConfig {
            algo: self.algo,
            model: self.model,
            n,
            horizon: self.horizon,
            tau: self.tau_for(n),
            gamma: self.gamma,
            gamma_mode: self.gamma_mode,
            alpha: self.alpha,
            eta0: self.eta0,
            k: self.k,
            delta: self.delta,
            n_max: self.n_max,
            lambda_ridge: self.lambda_ridge,
            mle_ridge: self.mle_ridge,
            radius: self.radius,
            c1: self.c1,
            c_init: self.c_init,
        }
    }

    /// Seed of replicate `i`.
    pub fn replicate_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }

    /// Builds the environment for replicate seed `seed`.
    pub fn build_env(&self, seed: u64) -> Result<WinMatrix> {
        let mut rng = rng::stream_rng(self.matrix_seed.unwrap_or(seed), Stream::Matrix);
        match self.env {
            EnvKind::Elo => game::gen_elo_game_with(self.n, self.rating_scale, &mut rng),
            EnvKind::NoisyElo => {
                game::gen_noisy_elo_game_with(self.n, self.rating_scale, self.noise, &mut rng)
            }
            EnvKind::Triangular => game::gen_triangular(self.n),
            EnvKind::Cyclic => game::gen_cyclic(self.n),
            EnvKind::CyclicDominant => {
                game::with_dominant_player(&game::gen_cyclic(self.n)?, self.dominant_p)
            }
            EnvKind::File => {
                let path: &Path = self
                    .matrix
                    .as_deref()
                    .ok_or_else(|| Error::Config("missing matrix".into()))?;
                game::load_matrix(path, self.clip_eps)
            }
        }
    }

    /// Canonical resolved assignments, one per key in [`KEYS`] order, plus the
    /// generator name.
    pub fn echo(&self) -> Vec<(String, String)> {
        let tau = match self.tau {
            Some(t) => t.to_string(),
            None if self.env != EnvKind::File => default_tau(self.n).to_string(),
            None => "auto".into(),
        };
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or_else(String::new, |p| p.display().to_string())
        };
        let mut out: Vec<(String, String)> = KEYS
            .iter()
            .map(|&key| {
                let value = match key {
                    "algo" => self.algo.to_string(),
                    "model" => self.model.to_string(),
                    "env" => self.env.as_str().to_string(),
                    "n" => self.n.to_string(),
                    "rating_scale" => self.rating_scale.to_string(),
                    "noise" => self.noise.to_string(),
                    "dominant_p" => self.dominant_p.to_string(),
                    "matrix" => path(&self.matrix),
                    "T" => self.horizon.to_string(),
                    "tau" => tau.clone(),
                    "gamma" => self.gamma.to_string(),
                    "gamma_mode" => self.gamma_mode.to_string(),
                    "alpha" => opt_to_string(&self.alpha),
                    "eta0" => opt_to_string(&self.eta0),
                    "k" => self.k.to_string(),
                    "delta" => self.delta.to_string(),
                    "n_max" => self.n_max.to_string(),
                    "lambda_ridge" => self.lambda_ridge.to_string(),
                    "mle_ridge" => self.mle_ridge.to_string(),
                    "radius" => self.radius.to_string(),
                    "c1" => self.c1.to_string(),
                    "c_init" => self.c_init.to_string(),
                    "clip_eps" => self.clip_eps.to_string(),
                    "seed" => self.seed.to_string(),
                    "matrix_seed" => opt_to_string(&self.matrix_seed),
                    "scheduler_seed" => opt_to_string(&self.scheduler_seed),
                    "outcome_seed" => opt_to_string(&self.outcome_seed),
                    "replicates" => self.replicates.to_string(),
                    "topk" => self
                        .topk
                        .iter()
                        .map(|k| k.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    "out" => path(&self.out),
                    "summary_out" => path(&self.summary_out),
                    "workers" => self.workers.to_string(),
                    "record_timing" => self.record_timing.to_string(),
                    _ => unreachable!("every key is echoed"),
                };
                (key.to_string(), value)
            })
            .collect();
        out.push(("prng".into(), PRNG_NAME.into()));
        out
    }

    /// Echo rendered as a single `key=value;...` line.
    pub fn digest(&self) -> String {
        self.echo()
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "out" | "summary_out" | "workers"))
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Splits `key=value` lines, dropping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected key=value, got `{line}`",
                lineno + 1
            ))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Defaults, then `pairs` in order (later assignments win), then validation.
pub fn config_from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (k, v) in pairs {
        cfg.set(k.as_ref(), v.as_ref())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    config_from_pairs(&parse_pairs(text)?)
}

/// Reads an optional config file and applies `overrides` on top.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut pairs = match path {
        Some(p) => parse_pairs(&std::fs::read_to_string(p)?)?,
        None => Vec::new(),
    };
    pairs.extend(overrides.iter().cloned());
    config_from_pairs(&pairs)
}
