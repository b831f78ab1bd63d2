//! Confidence-width schedule from the regret analysis.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    /// Lower bound on the link derivative; at most 1/4 for the logistic link.
    pub c1: f64,
    pub horizon: usize,
    pub n: usize,
    pub alpha: f64,
    pub tau: usize,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 <= 0.25) {
            return Err(Error::param("c1", "must lie in (0, 0.25]"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::param("alpha", "must be positive"));
        }
        Ok(())
    }
}

/// `g₁(t) = (1/(2c₁)) √((n/2) log(1 + 2t/n) + 2 log T)`.
pub fn g1(t: usize, p: &TheoryParams) -> f64 {
    let n = p.n as f64;
    let inner = 0.5 * n * (1.0 + 2.0 * t as f64 / n).ln() + 2.0 * (p.horizon as f64).ln();
    inner.max(0.0).sqrt() / (2.0 * p.c1)
}

/// Same as [`g1`] with a real-valued horizon, for hand-checkable values.
pub fn g1_with_log_horizon(t: usize, p: &TheoryParams, log_horizon: f64) -> f64 {
    let n = p.n as f64;
    let inner = 0.5 * n * (1.0 + 2.0 * t as f64 / n).ln() + 2.0 * log_horizon;
    inner.max(0.0).sqrt() / (2.0 * p.c1)
}

/// `g₂(j) = (τ/α) √(1 + log j)`.
pub fn g2(j: usize, p: &TheoryParams) -> f64 {
    p.tau as f64 / p.alpha * (1.0 + (j as f64).ln()).sqrt()
}

/// UCB width `γ = 2 g₁(t)`.
pub fn theoretical_gamma(t: usize, p: &TheoryParams) -> f64 {
    2.0 * g1(t, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TheoryParams {
        TheoryParams {
            c1: 0.25,
            horizon: 1000,
            n: 2,
            alpha: 14.0,
            tau: 14,
        }
    }

    #[test]
    fn g1_hand_value() {
        // c₁ = 1/4, n = 2, log T = 1: t = 1 gives 2 √(log 2 + 2), t = 2 gives 2 √(log 3 + 2)
        let v = g1_with_log_horizon(1, &params(), 1.0);
        assert!((v - 2.0 * (2f64.ln() + 2.0).sqrt()).abs() < 1e-12);
        assert!((v - 3.2822).abs() < 1e-4);
        let v = g1_with_log_horizon(2, &params(), 1.0);
        assert!((v - 3.5206).abs() < 1e-4);
    }

    #[test]
    fn g1_monotone_and_scales_with_c1() {
        let p = params();
        let mut prev = 0.0;
        for t in 1..200 {
            let v = g1(t, &p);
            assert!(v > prev);
            prev = v;
        }
        let half = TheoryParams { c1: 0.125, ..p };
        assert!((g1(17, &half) - 2.0 * g1(17, &p)).abs() < 1e-12);
        assert!((theoretical_gamma(17, &p) - 2.0 * g1(17, &p)).abs() < 1e-15);
    }

    #[test]
    fn g2_values() {
        let p = params();
        assert!((g2(1, &p) - 1.0).abs() < 1e-15);
        // log j = 3 at j = e³; use the real-valued formula through j ≈ 20.0855
        let j = 3f64.exp();
        let v = p.tau as f64 / p.alpha * (1.0 + j.ln()).sqrt();
        assert!((v - 2.0).abs() < 1e-12);
        let doubled = TheoryParams { tau: 28, ..p };
        assert!((g2(9, &doubled) - 2.0 * g2(9, &p)).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_ok());
        assert!(TheoryParams {
            c1: 0.3,
            ..params()
        }
        .validate()
        .is_err());
        assert!(TheoryParams {
            c1: 0.0,
            ..params()
        }
        .validate()
        .is_err());
    }
}
