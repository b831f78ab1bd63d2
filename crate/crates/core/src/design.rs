//! Ridge-regularized design matrix `V_t = λI + Σ (e_x − e_y)(e_x − e_y)ᵀ`
//! and its inverse, maintained by Sherman–Morrison rank-one updates.
//!
//! Every difference vector is orthogonal to the all-ones vector, so without
//! the ridge `V_t` would be singular.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA_RIDGE: f64 = 1.0;

/// Recompute the inverse from scratch after this many rank-one updates.
pub const REFRESH_INTERVAL: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignTracker {
    lambda_ridge: f64,
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    t: usize,
    scratch: Vec<f64>,
}

impl DesignTracker {
    pub fn new(n: usize, lambda_ridge: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize {
                what: "design tracker",
                min: 2,
                got: n,
            });
        }
        if !(lambda_ridge > 0.0 && lambda_ridge.is_finite()) {
            return Err(Error::param("lambda_ridge", "must be positive"));
        }
        Ok(Self {
            lambda_ridge,
            v: DMatrix::from_diagonal_element(n, n, lambda_ridge),
            v_inv: DMatrix::from_diagonal_element(n, n, 1.0 / lambda_ridge),
            t: 0,
            scratch: vec![0.0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn lambda_ridge(&self) -> f64 {
        self.lambda_ridge
    }

    /// Number of rank-one updates applied.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn v_inv(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    /// Adds `(e_x − e_y)(e_x − e_y)ᵀ` in O(n²). Returns `false` and leaves the
    /// tracker untouched when `x == y`, since the update vector is zero.
    pub fn update(&mut self, x: usize, y: usize) -> bool {
        if x == y {
            return false;
        }
        let n = self.n();
        // w = V⁻¹u with u = e_x − e_y is a column difference
        for (i, w) in self.scratch.iter_mut().enumerate() {
            *w = self.v_inv[(i, x)] - self.v_inv[(i, y)];
        }
        let quad = self.scratch[x] - self.scratch[y];
        let denom = 1.0 + quad;
        for j in 0..n {
            let wj = self.scratch[j] / denom;
            if wj == 0.0 {
                continue;
            }
            for i in 0..n {
                self.v_inv[(i, j)] -= self.scratch[i] * wj;
            }
        }

        self.v[(x, x)] += 1.0;
        self.v[(y, y)] += 1.0;
        self.v[(x, y)] -= 1.0;
        self.v[(y, x)] -= 1.0;
        self.t += 1;
        if self.t % REFRESH_INTERVAL == 0 {
            self.refresh();
        }
        true
    }

    /// Replaces the maintained inverse with a direct inversion of `V_t`.
    pub fn refresh(&mut self) {
        if let Some(ch) = self.v.clone().cholesky() {
            self.v_inv = ch.inverse();
        }
    }

    /// `‖e_x − e_y‖` in the `V⁻¹` norm; zero for `x == y`.
    pub fn pair_uncertainty(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        let (x, y) = (x.min(y), x.max(y));
        let q = self.v_inv[(x, x)] + self.v_inv[(y, y)] - self.v_inv[(x, y)] - self.v_inv[(y, x)];
        q.max(0.0).sqrt()
    }
}
