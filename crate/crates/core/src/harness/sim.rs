//! Seeded end-to-end simulation of one configuration.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{sample_outcome, true_ratings, TrueRatings};
use crate::metrics::{instant_regret, snapshot, MetricSnapshot};
use crate::rating::RatingState;
use crate::rng::{stream_rng, Stream, PRNG_NAME};
use crate::scheduler::build_scheduler;

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub x: usize,
    pub y: usize,
    pub outcome: bool,
    pub instant_regret: f64,
    pub cum_regret: f64,
    /// `NaN` while the scheduler has no estimate yet.
    pub rr: f64,
    pub hr: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub warmup: bool,
    /// This round completed an SGD batch.
    pub batch_end: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    /// Resolved configuration that produced the trace.
    pub config_digest: String,
    pub topk: Vec<usize>,
    pub rows: Vec<TraceRow>,
    pub final_estimate: Option<RatingState>,
}

impl Trace {
    pub fn warmup_rounds(&self) -> usize {
        self.rows.iter().filter(|r| r.warmup).count()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.rows.iter().map(|r| (r.x, r.y)).collect()
    }

    pub fn cum_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub seed: u64,
    /// Metric values in the order of [`RunSummary::metrics`].
    pub values: Vec<f64>,
    pub warmup_rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algo: String,
    pub env: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub prng: String,
    pub metrics: Vec<String>,
    pub replicates: Vec<ReplicateSummary>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_secs: Option<f64>,
    pub config: Vec<(String, String)>,
}

impl RunSummary {
    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metrics.iter().position(|m| m == name)
    }

    /// Per-replicate values of one metric.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.metric_index(name)?;
        Some(self.replicates.iter().map(|r| r.values[i]).collect())
    }
}

/// Names of the summarized metrics for a given `k` list.
pub fn metric_names(topk: &[usize]) -> Vec<String> {
    let mut names = vec!["cum_regret".to_string(), "rr".to_string()];
    names.extend(topk.iter().map(|k| format!("hr@{k}")));
    names.extend(topk.iter().map(|k| format!("ndcg@{k}")));
    names
}

fn nan_snapshot(ks: &[usize]) -> MetricSnapshot {
    MetricSnapshot {
        rr: f64::NAN,
        hr: vec![f64::NAN; ks.len()],
        ndcg: vec![f64::NAN; ks.len()],
    }
}

fn estimate_snapshot(
    est: Result<RatingState>,
    truth: &TrueRatings,
    ks: &[usize],
) -> Result<(Option<RatingState>, MetricSnapshot)> {
    match est {
        Ok(s) => {
            let snap = snapshot(truth, &s.r, ks)?;
            Ok((Some(s), snap))
        }
        Err(Error::NotReady) => Ok((None, nan_snapshot(ks))),
        Err(e) => Err(e),
    }
}

/// Runs replicate `i` of `cfg` and returns its trace.
pub fn simulate_replicate(cfg: &RunConfig, i: usize) -> Result<Trace> {
    let seed = cfg.replicate_seed(i);
    let env = cfg.build_env(seed)?;
    let n = env.n();
    cfg.check_n(n)?;
    let truth = true_ratings(&env, cfg.clip_eps)?;

    let mut sched_rng = stream_rng(cfg.scheduler_seed.unwrap_or(seed), Stream::Scheduler);
    let mut outcome_rng = stream_rng(cfg.outcome_seed.unwrap_or(seed), Stream::Outcomes);
    let mut sched = build_scheduler(&cfg.scheduler_config(n), &mut sched_rng)?;

    let mut rows = Vec::with_capacity(cfg.horizon);
    let mut cum = 0.0;
    let mut last = None;
    for t in 1..=cfg.horizon {
        let warmup = sched.in_warmup();
        let batches = sched.batches();
        let (x, y) = sched.select_pair(&mut sched_rng)?;
        let outcome = sample_outcome(&env, x, y, &mut outcome_rng)?;
        sched.observe(x, y, outcome)?;
        let regret = instant_regret(&truth, x, y);
        cum += regret;
        let (est, snap) = estimate_snapshot(sched.estimate(), &truth, &cfg.topk)?;
        last = est;
        rows.push(TraceRow {
            t,
            x,
            y,
            outcome,
            instant_regret: regret,
            cum_regret: cum,
            rr: snap.rr,
            hr: snap.hr,
            ndcg: snap.ndcg,
            warmup,
            batch_end: sched.batches() != batches,
        });
    }
    Ok(Trace {
        seed,
        config_digest: cfg.digest(),
        topk: cfg.topk.clone(),
        rows,
        final_estimate: last,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

fn final_values(trace: &Trace) -> Vec<f64> {
    let mut v = vec![trace.cum_regret()];
    if let Some(row) = trace.rows.last() {
        v.push(row.rr);
        v.extend(&row.hr);
        v.extend(&row.ndcg);
    }
    v
}

/// Builds the summary from finished traces (in replicate order).
pub fn summarize(cfg: &RunConfig, traces: &[Trace], times: Option<&[f64]>) -> Result<RunSummary> {
    let env = cfg.build_env(cfg.seed)?;
    let metrics = metric_names(&cfg.topk);
    let replicates: Vec<ReplicateSummary> = traces
        .iter()
        .enumerate()
        .map(|(i, tr)| ReplicateSummary {
            seed: tr.seed,
            values: final_values(tr),
            warmup_rounds: tr.warmup_rounds(),
            wall_time_secs: times.map(|t| t[i]),
        })
        .collect();
    let (mean, std) = (0..metrics.len())
        .map(|j| {
            let col: Vec<f64> = replicates.iter().map(|r| r.values[j]).collect();
            mean_std(&col)
        })
        .unzip();
    Ok(RunSummary {
        algo: cfg.algo.to_string(),
        env: env.name().to_string(),
        n: env.n(),
        horizon: cfg.horizon,
        prng: PRNG_NAME.to_string(),
        metrics,
        replicates,
        mean,
        std,
        wall_time_secs: times.map(|t| t.iter().sum()),
        config: cfg.echo(),
    })
}

/// Runs every replicate (in parallel on the current rayon pool) and
/// summarizes them.
pub fn simulate(cfg: &RunConfig) -> Result<(Vec<Trace>, RunSummary)> {
    cfg.validate()?;
    let results: Vec<(Trace, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let tr = simulate_replicate(cfg, i)?;
            Ok((tr, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let (traces, times): (Vec<Trace>, Vec<f64>) = results.into_iter().unzip();
    let summary = summarize(cfg, &traces, cfg.record_timing.then_some(times.as_slice()))?;
    Ok((traces, summary))
}

/// [`simulate`] on a dedicated pool of `cfg.workers` threads.
pub fn simulate_with_workers(cfg: &RunConfig) -> Result<(Vec<Trace>, RunSummary)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| simulate(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    #[test]
    fn warmup_rows_are_flagged() {
        let cfg = parse_config("n=10\nT=10\ntau=7\nseed=3").unwrap();
        let (traces, summary) = simulate(&cfg).unwrap();
        let tr = &traces[0];
        assert_eq!(tr.rows.len(), 10);
        assert!(tr.rows[..7].iter().all(|r| r.warmup));
        assert!(tr.rows[7..].iter().all(|r| !r.warmup));
        assert!(tr.rows[..6].iter().all(|r| r.rr.is_nan()));
        assert!(!tr.rows[6].rr.is_nan());
        assert_eq!(summary.replicates[0].warmup_rounds, 7);
        assert!(tr.rows.iter().all(|r| !r.batch_end));
        let cfg = parse_config("n=10\nT=30\ntau=7\nseed=3").unwrap();
        let ends: Vec<usize> = simulate(&cfg).unwrap().0[0]
            .rows
            .iter()
            .filter(|r| r.batch_end)
            .map(|r| r.t)
            .collect();
        assert_eq!(ends, vec![14, 21, 28]);
    }

    #[test]
    fn regret_accumulates_from_round_one() {
        let cfg = parse_config("algo=random\nn=6\nT=50\nseed=1").unwrap();
        let (traces, _) = simulate(&cfg).unwrap();
        let rows = &traces[0].rows;
        let mut cum = 0.0;
        for r in rows {
            assert!(r.instant_regret >= 0.0);
            cum += r.instant_regret;
            assert!((r.cum_regret - cum).abs() < 1e-12);
        }
    }

    #[test]
    fn summary_shape() {
        let cfg = parse_config("n=8\nT=60\nreplicates=5\ntopk=1,3").unwrap();
        let (traces, s) = simulate(&cfg).unwrap();
        assert_eq!(traces.len(), 5);
        assert_eq!(s.replicates.len(), 5);
        assert_eq!(
            s.metrics,
            vec!["cum_regret", "rr", "hr@1", "hr@3", "ndcg@1", "ndcg@3"]
        );
        assert_eq!(s.mean.len(), 6);
        assert_eq!(s.std.len(), 6);
        assert_eq!(traces[2].seed, 2);
        assert!(s.wall_time_secs.is_none());
    }

    #[test]
    fn scheduler_seed_leaves_matrix_alone() {
        let a = parse_config("n=8\nT=40\nseed=5\nscheduler_seed=1").unwrap();
        let b = parse_config("n=8\nT=40\nseed=5\nscheduler_seed=2").unwrap();
        assert_eq!(a.build_env(5).unwrap(), b.build_env(5).unwrap());
        let pa = simulate(&a).unwrap().0[0].pairs();
        let pb = simulate(&b).unwrap().0[0].pairs();
        assert_ne!(pa, pb);
    }

    #[test]
    fn matrix_seed_leaves_warmup_pairs_alone() {
        let a = parse_config("n=8\nT=40\nseed=5\nmatrix_seed=1").unwrap();
        let b = parse_config("n=8\nT=40\nseed=5\nmatrix_seed=2").unwrap();
        assert_ne!(a.build_env(5).unwrap(), b.build_env(5).unwrap());
        let ta = simulate(&a).unwrap().0.remove(0);
        let tb = simulate(&b).unwrap().0.remove(0);
        let w = ta.warmup_rounds();
        assert_eq!(ta.pairs()[..w], tb.pairs()[..w]);
    }
}
