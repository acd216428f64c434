//! Lyapunov exponents along the approximants `S^n(a)`.
//!
//! The per-symbol exponent is `log ||M(S^n(a), E)|| / |S^n(a)|` with the
//! spectral norm; dividing by the mean piece length `s` turns it into the
//! per-unit-length exponent `L = L_disc / s`.

use crate::error::{Error, Result};
use crate::potential::Model;
use crate::subshift::iterate_substitution;
use crate::transfer::{approximant_matrix, letter_matrices, product_over};

/// Highest level accepted by [`lyapunov_estimate`].
pub const MAX_LYAPUNOV_LEVEL: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub energy: f64,
    /// Per-symbol exponent.
    pub l_disc: f64,
    /// Mean piece length over the word.
    pub mean_length: f64,
    /// Per-unit-length exponent `l_disc / mean_length`.
    pub exponent: f64,
    pub n_used: usize,
    /// Change in `l_disc` from level `n - 1` to `n` (0 at level 0).
    pub residual: f64,
}

fn per_symbol(model: &Model, seed: char, n: usize, e: f64) -> Result<(f64, f64)> {
    let sub = model.substitution();
    let seed_idx = model.alphabet().index_of(seed)?;
    let counts = sub.iterate_counts(seed_idx, n);
    let len: u64 = counts.iter().sum();
    let total_length: f64 = counts
        .iter()
        .zip(model.lengths())
        .map(|(&c, l)| c as f64 * l)
        .sum();
    let m = approximant_matrix(model, seed, n, e)?;
    Ok((m.log_norm() / len as f64, total_length / len as f64))
}

pub fn lyapunov_estimate(model: &Model, e: f64, n: usize) -> Result<LyapunovEstimate> {
    if n > MAX_LYAPUNOV_LEVEL {
        return Err(Error::LevelCap { level: n, cap: MAX_LYAPUNOV_LEVEL });
    }
    let seed = model.seed_letter().or_else(|_| Ok::<_, Error>(model.alphabet().letter(0)))?;
    let (l_disc, s) = per_symbol(model, seed, n, e)?;
    let residual = if n == 0 { 0.0 } else { l_disc - per_symbol(model, seed, n - 1, e)?.0 };
    Ok(LyapunovEstimate {
        energy: e,
        l_disc,
        mean_length: s,
        exponent: l_disc / s,
        n_used: n,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityProbe {
    /// Per-symbol exponent of each window.
    pub exponents: Vec<f64>,
    pub offsets: Vec<usize>,
    pub mean: f64,
    /// `max - min` over the windows.
    pub spread: f64,
}

/// Per-symbol exponents over windows of length `|S^n(a)|` placed at
/// `shifts` evenly spaced offsets inside `S^{n+3}(a)`.
pub fn uniformity_probe(model: &Model, e: f64, n: usize, shifts: usize) -> Result<UniformityProbe> {
    if shifts < 2 {
        return Err(Error::InvalidArgument("uniformity probe needs at least 2 shifts".into()));
    }
    let seed = model.seed_letter().or_else(|_| Ok::<_, Error>(model.alphabet().letter(0)))?;
    let sub = model.substitution();
    let host = iterate_substitution(sub, seed, n + 3)?;
    let window = sub.iterate_length(model.alphabet().index_of(seed)?, n) as usize;
    let letters = letter_matrices(model, e)?;
    let span = host.len() - window;
    let offsets: Vec<usize> = (0..shifts).map(|k| k * span / (shifts - 1)).collect();
    let exponents: Vec<f64> = offsets
        .iter()
        .map(|&o| product_over(&letters, &host.symbols()[o..o + window]).log_norm() / window as f64)
        .collect();
    let mean = exponents.iter().sum::<f64>() / exponents.len() as f64;
    let (lo, hi) = exponents
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(UniformityProbe { exponents, offsets, mean, spread: hi - lo })
}
