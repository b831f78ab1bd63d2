//! Elo and multidimensional Elo (mElo) rating models.
//!
//! Win probability is `σ(r_x − r_y)` for Elo. mElo adds a `2k`-dimensional
//! cyclic feature vector per player and the antisymmetric bilinear term
//! `c_xᵀ Ω c_y`, where `Ω` pairs coordinates `(2i, 2i+1)` as
//! `[[0, 1], [−1, 0]]` blocks.

mod mle;
mod sgd;

pub use mle::{mle_fit, mle_fit_from, mle_objective, MleOptions, DEFAULT_MLE_RIDGE};
pub use sgd::{batch_update, project, BatchBuffer, MatchRecord, SgdState, DEFAULT_RADIUS};

use rand::Rng;

use crate::error::{Error, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Ratings plus optional cyclic features (`k == 0` is plain Elo).
#[derive(Debug, Clone, PartialEq)]
pub struct RatingState {
    pub r: Vec<f64>,
    /// Row-major `n x 2k` cyclic features.
    pub c: Vec<f64>,
    pub k: usize,
}

impl RatingState {
    pub fn elo(r: Vec<f64>) -> Self {
        Self {
            r,
            c: Vec::new(),
            k: 0,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::elo(vec![0.0; n])
    }

    pub fn melo(r: Vec<f64>, c: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("mElo state needs k >= 1".into()));
        }
        if c.len() != r.len() * 2 * k {
            return Err(Error::Config(format!(
                "cyclic features have length {}, expected {} x {}",
                c.len(),
                r.len(),
                2 * k
            )));
        }
        Ok(Self { r, c, k })
    }

    /// mElo state with zero ratings and features drawn i.i.d. from
    /// `[-spread, spread]`.
    pub fn melo_random<R: Rng + ?Sized>(
        n: usize,
        k: usize,
        spread: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let c = (0..n * 2 * k)
            .map(|_| rng.random_range(-spread..=spread))
            .collect();
        Self::melo(vec![0.0; n], c, k)
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn is_melo(&self) -> bool {
        self.k > 0
    }

    pub fn c_row(&self, x: usize) -> &[f64] {
        let d = 2 * self.k;
        &self.c[x * d..(x + 1) * d]
    }

    fn c_row_mut(&mut self, x: usize) -> &mut [f64] {
        let d = 2 * self.k;
        &mut self.c[x * d..(x + 1) * d]
    }

    /// Logit of `x` beating `y` under whichever model the state carries.
    pub fn logit(&self, x: usize, y: usize) -> f64 {
        let mut z = self.r[x] - self.r[y];
        if self.is_melo() {
            z += omega_form(self.c_row(x), self.c_row(y));
        }
        z
    }

    pub fn predict(&self, x: usize, y: usize) -> f64 {
        sigmoid(self.logit(x, y))
    }
}

/// `aᵀ Ω b` with `Ω = Σ_i (e_{2i} e_{2i+1}ᵀ − e_{2i+1} e_{2i}ᵀ)`.
pub fn omega_form(a: &[f64], b: &[f64]) -> f64 {
    a.chunks_exact(2)
        .zip(b.chunks_exact(2))
        .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
        .sum()
}

pub fn predict_elo(state: &RatingState, x: usize, y: usize) -> f64 {
    sigmoid(state.r[x] - state.r[y])
}

pub fn predict_melo(state: &RatingState, x: usize, y: usize) -> Result<f64> {
    if !state.is_melo() {
        return Err(Error::Config(
            "mElo prediction needs cyclic features".into(),
        ));
    }
    Ok(state.predict(x, y))
}

/// Cross-entropy of outcome `o` (binary or soft) against prediction `p_hat`.
pub fn elo_loss(o: f64, p_hat: f64) -> f64 {
    let mut loss = 0.0;
    if o != 0.0 {
        loss -= o * p_hat.ln();
    }
    if o != 1.0 {
        loss -= (1.0 - o) * (1.0 - p_hat).ln();
    }
    loss
}

/// Gradient of `elo_loss(o, predict(x, y))` with respect to the four
/// parameter blocks touched by one match.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub rx: f64,
    pub ry: f64,
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
}

pub fn pair_gradient(state: &RatingState, x: usize, y: usize, o: f64) -> PairGradient {
    // dℓ/dz = p̂ − o
    let g = state.predict(x, y) - o;
    let (cx, cy) = if state.is_melo() {
        let (rx, ry) = (state.c_row(x), state.c_row(y));
        // dz/dc_x = Ω c_y, dz/dc_y = Ωᵀ c_x = −Ω c_x
        let cx = ry
            .chunks_exact(2)
            .flat_map(|b| [g * b[1], -g * b[0]])
            .collect();
        let cy = rx
            .chunks_exact(2)
            .flat_map(|a| [-g * a[1], g * a[0]])
            .collect();
        (cx, cy)
    } else {
        (Vec::new(), Vec::new())
    };
    PairGradient {
        rx: g,
        ry: -g,
        cx,
        cy,
    }
}

/// One Elo gradient step: `r_x += η(o − p̂)`, `r_y −= η(o − p̂)`.
pub fn sgd_step_elo(state: &mut RatingState, x: usize, y: usize, o: f64, eta: f64) {
    if x == y {
        return;
    }
    let delta = o - predict_elo(state, x, y);
    state.r[x] += eta * delta;
    state.r[y] -= eta * delta;
}

/// One mElo gradient step on ratings and both players' cyclic features,
/// all evaluated at the pre-step parameters.
pub fn sgd_step_melo(state: &mut RatingState, x: usize, y: usize, o: f64, eta: f64) -> Result<()> {
    if !state.is_melo() {
        return Err(Error::Config("mElo step needs cyclic features".into()));
    }
    if x == y {
        return Ok(());
    }
    let grad = pair_gradient(state, x, y, o);
    apply_gradient(state, x, y, &grad, eta);
    Ok(())
}

pub(crate) fn apply_gradient(
    state: &mut RatingState,
    x: usize,
    y: usize,
    grad: &PairGradient,
    eta: f64,
) {
    state.r[x] -= eta * grad.rx;
    state.r[y] -= eta * grad.ry;
    if state.is_melo() {
        for (c, g) in state.c_row_mut(x).iter_mut().zip(&grad.cx) {
            *c -= eta * g;
        }
        for (c, g) in state.c_row_mut(y).iter_mut().zip(&grad.cy) {
            *c -= eta * g;
        }
    }
}

/// Applies whichever step matches the state's model.
pub fn sgd_step(state: &mut RatingState, x: usize, y: usize, o: f64, eta: f64) {
    if state.is_melo() {
        // cannot fail: the model is known to be mElo
        let _ = sgd_step_melo(state, x, y, o, eta);
    } else {
        sgd_step_elo(state, x, y, o, eta);
    }
}
