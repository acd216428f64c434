//! Transfer matrices of `-u'' + V u = E u` over pieces and words.
//!
//! Every matrix acts on the column `(u, u')` and maps the data at the left
//! end of an interval to the data at its right end, so the columns are the
//! Neumann and Dirichlet solutions:
//!
//! ```text
//! M = | u_N(l)   u_D(l)  |
//!     | u_N'(l)  u_D'(l) |
//! ```
//!
//! Word products are accumulated as [`ScaledMatrix`] values (a matrix plus a
//! log-scale) so that long products never overflow.

use std::ops::Mul;

use crate::error::{Error, Result};
use crate::potential::{Model, PieceKind, PotentialPiece};
use crate::subshift::Word;

/// Real 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn half_trace(&self) -> f64 {
        0.5 * self.trace()
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        let Self { m11: a, m12: b, m21: c, m22: d } = *self;
        0.5 * ((a + d).hypot(b - c) + (a - d).hypot(b + c))
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m21.abs()).max(self.m22.abs())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.m11 * k, self.m12 * k, self.m21 * k, self.m22 * k)
    }

    /// Inverse of a unimodular matrix.
    pub fn unimodular_inverse(&self) -> Self {
        Self::new(self.m22, -self.m12, -self.m21, self.m11)
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.m11 - other.m11)
            .abs()
            .max((self.m12 - other.m12).abs())
            .max((self.m21 - other.m21).abs())
            .max((self.m22 - other.m22).abs())
    }

    pub fn apply(&self, u: f64, du: f64) -> (f64, f64) {
        (self.m11 * u + self.m12 * du, self.m21 * u + self.m22 * du)
    }
}

impl Mul for TransferMatrix {
    type Output = Self;

    fn mul(self, r: Self) -> Self {
        Self::new(
            self.m11 * r.m11 + self.m12 * r.m21,
            self.m11 * r.m12 + self.m12 * r.m22,
            self.m21 * r.m11 + self.m22 * r.m21,
            self.m21 * r.m12 + self.m22 * r.m22,
        )
    }
}

/// Threshold on `|z| l^2` below which the kernels use their Taylor series.
pub const SERIES_SWITCH: f64 = 1e-2;
const SERIES_TERMS: usize = 8;

/// `c(z, l) = cos(sqrt(z) l)`, entire in `z`.
pub fn cos_kernel(z: f64, len: f64) -> f64 {
    let w = z * len * len;
    if w.abs() < SERIES_SWITCH {
        // sum_j (-w)^j / (2j)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..SERIES_TERMS {
            term *= -w / ((2 * j - 1) * (2 * j)) as f64;
            sum += term;
        }
        sum
    } else if z > 0.0 {
        (z.sqrt() * len).cos()
    } else {
        ((-z).sqrt() * len).cosh()
    }
}

/// `s(z, l) = sin(sqrt(z) l) / sqrt(z)`, entire in `z`, equal to `l` at `z = 0`.
pub fn sin_kernel(z: f64, len: f64) -> f64 {
    let w = z * len * len;
    if w.abs() < SERIES_SWITCH {
        // l * sum_j (-w)^j / (2j+1)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..SERIES_TERMS {
            term *= -w / ((2 * j) * (2 * j + 1)) as f64;
            sum += term;
        }
        len * sum
    } else if z > 0.0 {
        let k = z.sqrt();
        (k * len).sin() / k
    } else {
        let k = (-z).sqrt();
        (k * len).sinh() / k
    }
}

// Above this exponent a single barrier cell is built in scaled form.
const CELL_LOG_SPLIT: f64 = 300.0;

/// Matrix of a constant potential `v` over width `len` at energy `e`.
pub fn constant_matrix(v: f64, len: f64, e: f64) -> TransferMatrix {
    let z = e - v;
    let c = cos_kernel(z, len);
    let s = sin_kernel(z, len);
    TransferMatrix::new(c, s, -z * s, c)
}

fn constant_matrix_scaled(v: f64, len: f64, e: f64) -> ScaledMatrix {
    let z = e - v;
    if z < 0.0 {
        let kappa = (-z).sqrt();
        let x = kappa * len;
        if x > CELL_LOG_SPLIT {
            // cosh x = e^x (1 + e^-2x) / 2, sinh x = e^x (1 - e^-2x) / 2
            let t = (-2.0 * x).exp();
            let c = 0.5 * (1.0 + t);
            let sh = 0.5 * (1.0 - t);
            let m = TransferMatrix::new(c, sh / kappa, kappa * sh, c);
            return ScaledMatrix { matrix: m, log_scale: x };
        }
    }
    ScaledMatrix::from(constant_matrix(v, len, e))
}

/// Jump across `strength * delta`: `u' -> u' + strength * u`.
pub fn jump_matrix(strength: f64) -> TransferMatrix {
    TransferMatrix::new(1.0, 0.0, strength, 1.0)
}

fn check_energy(e: f64) -> Result<()> {
    if e.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteEnergy(e))
    }
}

/// Transfer matrix across one piece. Sampled pieces are the exact product of
/// their constant cells. Entries may overflow for extreme barriers; use
/// [`piece_matrix_scaled`] for those.
pub fn piece_matrix(piece: &PotentialPiece, e: f64) -> Result<TransferMatrix> {
    check_energy(e)?;
    Ok(match piece.kind() {
        PieceKind::Constant { value } => constant_matrix(*value, piece.length(), e),
        PieceKind::PointInteraction { strength } => {
            constant_matrix(0.0, piece.length(), e) * jump_matrix(*strength)
        }
        PieceKind::Sampled { samples, step } => samples[..samples.len() - 1]
            .iter()
            .fold(TransferMatrix::IDENTITY, |acc, &v| constant_matrix(v, *step, e) * acc),
    })
}

pub fn piece_matrix_scaled(piece: &PotentialPiece, e: f64) -> Result<ScaledMatrix> {
    check_energy(e)?;
    Ok(match piece.kind() {
        PieceKind::Constant { value } => constant_matrix_scaled(*value, piece.length(), e),
        PieceKind::PointInteraction { .. } => ScaledMatrix::from(piece_matrix(piece, e)?),
        PieceKind::Sampled { samples, step } => samples[..samples.len() - 1]
            .iter()
            .fold(ScaledMatrix::IDENTITY, |acc, &v| constant_matrix_scaled(v, *step, e) * acc),
    })
}

/// Rescale once the largest entry passes this.
pub const RESCALE_THRESHOLD: f64 = 1e100;

/// `exp(log_scale) * matrix`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMatrix {
    pub matrix: TransferMatrix,
    pub log_scale: f64,
}

impl From<TransferMatrix> for ScaledMatrix {
    fn from(matrix: TransferMatrix) -> Self {
        Self { matrix, log_scale: 0.0 }.normalized()
    }
}

impl ScaledMatrix {
    pub const IDENTITY: Self = Self { matrix: TransferMatrix::IDENTITY, log_scale: 0.0 };

    fn normalized(mut self) -> Self {
        let big = self.matrix.max_abs();
        if big > RESCALE_THRESHOLD && big.is_finite() {
            self.matrix = self.matrix.scale(1.0 / big);
            self.log_scale += big.ln();
        }
        self
    }

    /// `log` of the largest singular value.
    pub fn log_norm(&self) -> f64 {
        self.matrix.norm().ln() + self.log_scale
    }

    /// `log |tr / 2|`.
    pub fn log_abs_half_trace(&self) -> f64 {
        self.matrix.half_trace().abs().ln() + self.log_scale
    }

    /// Half-trace as a plain float; infinite when it does not fit.
    pub fn half_trace(&self) -> f64 {
        self.matrix.half_trace() * self.log_scale.exp()
    }

    /// The unscaled matrix, if it is representable.
    pub fn to_matrix(&self) -> Option<TransferMatrix> {
        let m = self.matrix.scale(self.log_scale.exp());
        m.is_finite().then_some(m)
    }

    /// True when the entries had to be rescaled to stay finite.
    pub fn is_rescaled(&self) -> bool {
        self.log_scale > 0.0
    }
}

impl Mul for ScaledMatrix {
    type Output = Self;

    fn mul(self, r: Self) -> Self {
        Self { matrix: self.matrix * r.matrix, log_scale: self.log_scale + r.log_scale }.normalized()
    }
}

/// Product `M(w_{k-1}) ... M(w_0)` over the word.
pub fn word_matrix(model: &Model, word: &Word, e: f64) -> Result<ScaledMatrix> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let letters = letter_matrices(model, e)?;
    Ok(product_over(&letters, word.symbols()))
}

/// Scaled matrices of every letter at energy `e`, indexed like the alphabet.
pub fn letter_matrices(model: &Model, e: f64) -> Result<Vec<ScaledMatrix>> {
    model.pieces().iter().map(|p| piece_matrix_scaled(p, e)).collect()
}

/// Product over a symbol slice given precomputed letter matrices.
pub fn product_over(letters: &[ScaledMatrix], symbols: &[u8]) -> ScaledMatrix {
    symbols
        .iter()
        .fold(ScaledMatrix::IDENTITY, |acc, &s| letters[usize::from(s)] * acc)
}

/// Matrix over `S^n(seed)` built level by level from the substitution,
/// without materializing the word.
pub fn approximant_matrix(model: &Model, seed: char, n: usize, e: f64) -> Result<ScaledMatrix> {
    let seed = model.alphabet().index_of(seed)?;
    let sub = model.substitution();
    let mut level = letter_matrices(model, e)?;
    for _ in 0..n {
        level = (0..level.len())
            .map(|x| product_over(&level, sub.image(x)))
            .collect();
    }
    Ok(level[seed])
}

pub fn half_trace(m: &TransferMatrix) -> f64 {
    m.half_trace()
}

/// `log` of the elementary bound `exp(int max(1, |V - E|) dx)` on the norm
/// of the word's transfer matrix. Each point interaction adds the log-norm
/// of its jump matrix.
pub fn log_growth_bound(model: &Model, word: &Word, e: f64) -> Result<f64> {
    check_energy(e)?;
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let per_letter: Vec<f64> = model
        .pieces()
        .iter()
        .map(|p| {
            let integral: f64 = p
                .cells()
                .iter()
                .map(|&(v, w)| w * (v - e).abs().max(1.0))
                .sum();
            let jump = match p.kind() {
                PieceKind::PointInteraction { strength } => jump_matrix(*strength).norm().ln(),
                _ => 0.0,
            };
            integral + jump
        })
        .collect();
    Ok(word.symbols().iter().map(|&s| per_letter[usize::from(s)]).sum())
}

pub fn growth_bound(model: &Model, word: &Word, e: f64) -> Result<f64> {
    log_growth_bound(model, word, e).map(f64::exp)
}

/// Strictly increasing energies in `[e_min, e_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    points: Vec<f64>,
}

impl EnergyGrid {
    /// `count` evenly spaced points including both ends.
    pub fn uniform(e_min: f64, e_max: f64, count: usize) -> Result<Self> {
        if !(e_min.is_finite() && e_max.is_finite() && e_min < e_max) {
            return Err(Error::InvalidWindow(e_min, e_max));
        }
        if count < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
        }
        let h = (e_max - e_min) / (count - 1) as f64;
        let mut points: Vec<f64> = (0..count).map(|i| e_min + i as f64 * h).collect();
        points[count - 1] = e_max;
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("grid is empty".into()));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("grid must be finite and strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}
