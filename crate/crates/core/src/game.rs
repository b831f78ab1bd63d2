//! Ground-truth win-probability matrices.
//!
//! A [`WinMatrix`] is the environment every scheduler plays against. This
//! module builds the synthetic games used in experiments, loads real payoff
//! matrices from CSV, splits the logit matrix into its transitive and cyclic
//! parts, and samples match outcomes.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rating::sigmoid;
use crate::rng;

/// Default probability clip used before taking logits.
pub const DEFAULT_CLIP_EPS: f64 = 1e-3;

/// Invariant tolerance for generated matrices.
pub const GENERATOR_TOL: f64 = 1e-9;

/// Invariant tolerance for matrices read from disk.
pub const LOADER_TOL: f64 = 1e-6;

/// Win probability of a cyclic player over its successor.
const CYCLIC_WIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct WinMatrix {
    p: DMatrix<f64>,
    name: String,
}

impl WinMatrix {
    /// Validates `p` against the win-matrix invariants at tolerance `tol`.
    pub fn new(p: DMatrix<f64>, name: impl Into<String>, tol: f64) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n {
            return Err(Error::NonSquare {
                rows: n,
                row: 0,
                cols: p.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidSize {
                what: "win matrix",
                min: 2,
                got: n,
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = p[(i, j)];
                if !v.is_finite() || !(-tol..=1.0 + tol).contains(&v) {
                    return Err(Error::ProbabilityRange { i, j, value: v });
                }
            }
        }
        for i in 0..n {
            let d = p[(i, i)];
            if (d - 0.5).abs() > tol {
                return Err(Error::Diagonal { i, value: d });
            }
            for j in (i + 1)..n {
                let sum = p[(i, j)] + p[(j, i)];
                if (sum - 1.0).abs() > tol {
                    return Err(Error::Antisymmetry { i, j, sum });
                }
            }
        }
        Ok(Self {
            p,
            name: name.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Antisymmetric logit matrix of the clipped probabilities.
    pub fn logits(&self, clip_eps: f64) -> Result<LogitMatrix> {
        check_clip(clip_eps)?;
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let q = self.p[(i, j)].clamp(clip_eps, 1.0 - clip_eps);
                let l = (q / (1.0 - q)).ln();
                a[(i, j)] = l;
                a[(j, i)] = -l;
            }
        }
        Ok(LogitMatrix { a, clip_eps })
    }

    /// Writes the matrix as headerless CSV, one row per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| self.p[(i, j)].to_string()).collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_clip(clip_eps: f64) -> Result<()> {
    if !(clip_eps > 0.0 && clip_eps < 0.5) {
        return Err(Error::param("clip_eps", "must lie in (0, 0.5)"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    pub a: DMatrix<f64>,
    pub clip_eps: f64,
}

/// Hodge split of a game: `grad(r_star) + rot` equals the logit matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueRatings {
    pub r_star: Vec<f64>,
    pub rot: DMatrix<f64>,
    pub best: usize,
    /// Gap between the best and second-best true rating.
    pub delta: f64,
    pub delta_max: f64,
}

impl TrueRatings {
    pub fn n(&self) -> usize {
        self.r_star.len()
    }
}

/// `grad(r)[i][j] = r_i - r_j`.
pub fn gradient_flow(r: &[f64]) -> DMatrix<f64> {
    let n = r.len();
    DMatrix::from_fn(n, n, |i, j| r[i] - r[j])
}

/// Divergence `(1/n) A 1` of a square matrix.
pub fn divergence(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows() as f64;
    a.row_iter().map(|row| row.sum() / n).collect()
}

pub fn true_ratings(m: &WinMatrix, clip_eps: f64) -> Result<TrueRatings> {
    let LogitMatrix { a, .. } = m.logits(clip_eps)?;
    let n = m.n();
    let r_star = divergence(&a);
    let rot = DMatrix::from_fn(n, n, |i, j| a[(i, j)] - r_star[i] + r_star[j]);

    let best = argmax(&r_star);
    let second = r_star
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = r_star.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TrueRatings {
        delta: r_star[best] - second,
        delta_max: r_star[best] - lo,
        best,
        r_star,
        rot,
    })
}

/// Index of the maximum, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn require_players(what: &'static str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidSize { what, min, got: n });
    }
    Ok(())
}

/// Bradley–Terry game `p[i][j] = σ(r_i − r_j)` for fixed latent ratings.
pub fn elo_game_from_ratings(ratings: &[f64]) -> Result<WinMatrix> {
    let n = ratings.len();
    require_players("elo game", n, 2)?;
    let p = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.5
        } else if i < j {
            sigmoid(ratings[i] - ratings[j])
        } else {
            1.0 - sigmoid(ratings[j] - ratings[i])
        }
    });
    WinMatrix::new(p, "elo", GENERATOR_TOL)
}

/// Latent ratings drawn i.i.d. uniform on `[-scale, scale]`.
pub fn sample_latent_ratings<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
}

pub fn gen_elo_game(n: usize, rating_scale: f64, seed: u64) -> Result<WinMatrix> {
    gen_elo_game_with(n, rating_scale, &mut rng::seeded(seed))
}

pub fn gen_elo_game_with<R: Rng + ?Sized>(
    n: usize,
    rating_scale: f64,
    rng: &mut R,
) -> Result<WinMatrix> {
    require_players("elo game", n, 2)?;
    if !(rating_scale > 0.0 && rating_scale.is_finite()) {
        return Err(Error::param("rating_scale", "must be positive"));
    }
    let r = sample_latent_ratings(n, rating_scale, rng);
    elo_game_from_ratings(&r)
}

pub fn gen_noisy_elo_game(n: usize, rating_scale: f64, eps: f64, seed: u64) -> Result<WinMatrix> {
    gen_noisy_elo_game_with(n, rating_scale, eps, &mut rng::seeded(seed))
}

/// Elo game with Gaussian noise of standard deviation `eps` on the upper
/// triangle, mirrored to the lower triangle and clipped to
/// `[DEFAULT_CLIP_EPS, 1 - DEFAULT_CLIP_EPS]`.
pub fn gen_noisy_elo_game_with<R: Rng + ?Sized>(
    n: usize,
    rating_scale: f64,
    eps: f64,
    rng: &mut R,
) -> Result<WinMatrix> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", "noise level must be non-negative"));
    }
    let base = gen_elo_game_with(n, rating_scale, rng)?;
    if eps == 0.0 {
        return Ok(base);
    }
    let noise = Normal::new(0.0, eps).map_err(|e| Error::param("eps", e.to_string()))?;
    let mut p = base.p;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (p[(i, j)] + noise.sample(rng)).clamp(DEFAULT_CLIP_EPS, 1.0 - DEFAULT_CLIP_EPS);
            p[(i, j)] = v;
            p[(j, i)] = 1.0 - v;
        }
    }
    WinMatrix::new(p, format!("elo+noise={eps}"), GENERATOR_TOL)
}

/// Deterministic total order: player `i` always beats every `j > i`.
pub fn gen_triangular(n: usize) -> Result<WinMatrix> {
    require_players("triangular game", n, 2)?;
    let p = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Greater => 0.0,
        std::cmp::Ordering::Equal => 0.5,
    });
    WinMatrix::new(p, "triangular", GENERATOR_TOL)
}

/// Rock-paper-scissors ring: each player beats its successor with
/// probability 0.9, all other pairings are even.
pub fn gen_cyclic(n: usize) -> Result<WinMatrix> {
    require_players("cyclic game", n, 3)?;
    let p = DMatrix::from_fn(n, n, |i, j| {
        if j == (i + 1) % n {
            CYCLIC_WIN
        } else if i == (j + 1) % n {
            1.0 - CYCLIC_WIN
        } else {
            0.5
        }
    });
    WinMatrix::new(p, "cyclic", GENERATOR_TOL)
}

/// Appends one player who beats every existing player with probability `p_win`.
pub fn with_dominant_player(m: &WinMatrix, p_win: f64) -> Result<WinMatrix> {
    if !(0.0..=1.0).contains(&p_win) {
        return Err(Error::param("dominant_p", "must lie in [0, 1]"));
    }
    let n = m.n();
    let p = DMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i < n && j < n {
            m.p[(i, j)]
        } else if i == j {
            0.5
        } else if i == n {
            p_win
        } else {
            1.0 - p_win
        }
    });
    WinMatrix::new(p, format!("{}+dominant", m.name), GENERATOR_TOL)
}

/// Reads a headerless `n x n` CSV of probabilities.
///
/// The stored matrix is exactly what the file contains; `clip_eps` only
/// needs to be valid here and is applied later when logits are taken.
pub fn load_matrix(path: &Path, clip_eps: f64) -> Result<WinMatrix> {
    check_clip(clip_eps)?;
    let parse_err = |reason: String| Error::MatrixParse {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| {
                    parse_err(format!("row {i}, column {j}: `{field}` is not a number"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err("empty file".into()));
    }
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::NonSquare {
            rows: n,
            row,
            cols: r.len(),
        });
    }
    let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "loaded".into());
    WinMatrix::new(p, name, LOADER_TOL)
}

/// Draws `o ~ Bern(p[x][y])`; `true` means `x` won.
pub fn sample_outcome<R: Rng + ?Sized>(
    m: &WinMatrix,
    x: usize,
    y: usize,
    rng: &mut R,
) -> Result<bool> {
    let n = m.n();
    for index in [x, y] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    Ok(rng.random::<f64>() < m.p[(x, y)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn assert_invariants(m: &WinMatrix, tol: f64) {
        let n = m.n();
        for i in 0..n {
            assert!((m.get(i, i) - 0.5).abs() <= tol);
            for j in 0..n {
                assert!((m.get(i, j) + m.get(j, i) - 1.0).abs() <= tol);
            }
        }
    }

    #[test]
    fn elo_game_identical_ratings_is_even() {
        let m = elo_game_from_ratings(&[0.0, 0.0]).unwrap();
        assert_eq!(m.probabilities(), &DMatrix::from_element(2, 2, 0.5));
        // a vanishing scale approaches the same matrix
        let m = gen_elo_game(2, 1e-12, 3).unwrap();
        for v in m.probabilities().iter() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn elo_game_known_entry() {
        let m = elo_game_from_ratings(&[1.0, 0.0, -1.0]).unwrap();
        assert!((m.get(0, 2) - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert_invariants(&m, GENERATOR_TOL);
    }

    #[test]
    fn generators_reject_small_n() {
        assert!(matches!(
            gen_elo_game(1, 1.0, 0),
            Err(Error::InvalidSize { .. })
        ));
        assert!(matches!(gen_triangular(1), Err(Error::InvalidSize { .. })));
        assert!(matches!(gen_cyclic(2), Err(Error::InvalidSize { .. })));
    }

    #[test]
    fn noisy_with_zero_noise_matches_plain() {
        let a = gen_elo_game(12, 1.0, 99).unwrap();
        let b = gen_noisy_elo_game(12, 1.0, 0.0, 99).unwrap();
        assert_eq!(a.probabilities(), b.probabilities());
    }

    #[test]
    fn noisy_game_keeps_invariants_and_perturbs() {
        for seed in 0..5 {
            let m = gen_noisy_elo_game(30, 1.0, 0.05, seed).unwrap();
            assert_invariants(&m, GENERATOR_TOL);
        }
        // Monte-Carlo oracle: E|N(0, s)| = s * sqrt(2/pi)
        let clean = gen_elo_game(100, 1.0, 5).unwrap();
        let noisy = gen_noisy_elo_game(100, 1.0, 0.1, 5).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..100 {
            for j in (i + 1)..100 {
                total += (noisy.get(i, j) - clean.get(i, j)).abs();
                count += 1;
            }
        }
        let mean = total / count as f64;
        let expected = 0.1 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() < 0.006, "mean perturbation {mean}");
    }

    #[test]
    fn triangular_structure() {
        let m = gen_triangular(2).unwrap();
        assert_eq!(
            m.probabilities(),
            &DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5])
        );
        let m = gen_triangular(3).unwrap();
        assert_eq!(true_ratings(&m, DEFAULT_CLIP_EPS).unwrap().best, 0);
        let m = gen_triangular(6).unwrap();
        let mut rng = rng::seeded(1);
        for _ in 0..200 {
            assert!(sample_outcome(&m, 1, 4, &mut rng).unwrap());
            assert!(!sample_outcome(&m, 4, 1, &mut rng).unwrap());
        }
    }

    #[test]
    fn cyclic_has_no_transitive_part() {
        let m = gen_cyclic(3).unwrap();
        let t = true_ratings(&m, DEFAULT_CLIP_EPS).unwrap();
        assert!(t.r_star.iter().all(|v| v.abs() < 1e-12));
        let a = m.logits(DEFAULT_CLIP_EPS).unwrap().a;
        assert!((t.rot.clone() - a).amax() < 1e-12);
        assert_invariants(&gen_cyclic(5).unwrap(), GENERATOR_TOL);
    }

    #[test]
    fn true_ratings_recover_latent() {
        let m = elo_game_from_ratings(&[1.0, 0.0, -1.0]).unwrap();
        let t = true_ratings(&m, DEFAULT_CLIP_EPS).unwrap();
        for (got, want) in t.r_star.iter().zip([1.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(t.rot.amax() < 1e-12);
        assert_eq!(t.best, 0);
        assert!((t.delta - 1.0).abs() < 1e-12);
        assert!((t.delta_max - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_player_is_best() {
        let m = with_dominant_player(&gen_cyclic(5).unwrap(), 0.8).unwrap();
        assert_eq!(m.n(), 6);
        assert_eq!(m.get(5, 2), 0.8);
        assert!((m.get(2, 5) - 0.2).abs() < 1e-15);
        assert_eq!(true_ratings(&m, DEFAULT_CLIP_EPS).unwrap().best, 5);
    }

    #[test]
    fn sample_outcome_checks_indices() {
        let m = gen_triangular(3).unwrap();
        let mut rng = rng::seeded(0);
        assert!(matches!(
            sample_outcome(&m, 3, 0, &mut rng),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn sample_outcome_even_matchup_frequency() {
        let m = elo_game_from_ratings(&[0.3, 0.3]).unwrap();
        let mut rng = rng::seeded(11);
        let draws = 100_000;
        let wins = (0..draws)
            .filter(|_| sample_outcome(&m, 0, 1, &mut rng).unwrap())
            .count();
        assert!((wins as f64 / draws as f64 - 0.5).abs() < 0.01);
    }

    fn csv_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_matrix_reads_and_validates() {
        let f = csv_file("0.5,0.7\n0.3,0.5\n");
        let m = load_matrix(f.path(), DEFAULT_CLIP_EPS).unwrap();
        assert_eq!(m.get(0, 1), 0.7);

        let f = csv_file("0.5,0.7,0.1\n0.3,0.5,0.2\n");
        assert!(matches!(
            load_matrix(f.path(), 1e-3),
            Err(Error::NonSquare { .. })
        ));

        let f = csv_file("0.5,0.7\n0.4,0.5\n");
        assert!(matches!(
            load_matrix(f.path(), 1e-3),
            Err(Error::Antisymmetry { .. })
        ));

        let f = csv_file("0.6,0.7\n0.3,0.5\n");
        assert!(matches!(
            load_matrix(f.path(), 1e-3),
            Err(Error::Diagonal { i: 0, .. })
        ));

        let f = csv_file("0.5,abc\n0.3,0.5\n");
        assert!(matches!(
            load_matrix(f.path(), 1e-3),
            Err(Error::MatrixParse { .. })
        ));

        // tolerance for files is looser than for generators
        let f = csv_file("0.5,0.7000004\n0.3,0.5\n");
        assert!(load_matrix(f.path(), 1e-3).is_ok());
    }

    #[test]
    fn csv_write_then_load() {
        let m = gen_noisy_elo_game(7, 1.5, 0.05, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        m.write_csv(&path).unwrap();
        let back = load_matrix(&path, DEFAULT_CLIP_EPS).unwrap();
        assert_eq!(back.probabilities(), m.probabilities());
    }
}
