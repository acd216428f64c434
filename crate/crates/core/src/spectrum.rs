//! Band spectra of the periodic approximants, escape-time classification of
//! energy grids, spectral covers and box-counting dimension estimates.
//!
//! The level-`n` band spectrum is `σ_n = {E : |x_n(E)| <= 1}` with `x_n` the
//! half-trace over `S^n(a)`. Bands are located on a uniform grid with
//! spacing at most `width / (samples · F_{n+2})`, then refined:
//!
//! * sign changes of `x_n ∓ 1` between neighbours are bisected;
//! * a jump from `x_n > 1` to `x_n < -1` inside one cell brackets a zero of
//!   `x_n`, which sits inside a band;
//! * local extrema of `|x_n|` are followed by golden-section search, which
//!   uncovers bands and gaps narrower than a cell and band-edge tangencies.
//!
//! Every band and gap is finally probed at five Chebyshev points; a failed
//! probe means the grid missed an oscillation and the search is refused.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::Model;
use crate::tracemap::{half_trace_at_level, initial_conditions, invariant_at, trace_recursion, ESCAPE_GUARD};
use crate::transfer::{approximant_matrix, EnergyGrid};

/// Highest level accepted by [`band_spectrum`].
pub const MAX_BAND_LEVEL: usize = 25;

/// Grid points per oscillation of `x_n`.
pub const DEFAULT_OSCILLATION_SAMPLES: usize = 50;

/// Tolerance of the band and gap probes and of the tangency test.
pub const PROBE_TOLERANCE: f64 = 1e-9;

const EDGE_TOLERANCE: f64 = 1e-12;
const EDGE_RESIDUAL_TARGET: f64 = 1e-10;
const GOLDEN_ITERATIONS: usize = 80;
const REFINE_DEPTH: usize = 24;
const GUIDE_SAMPLES: usize = 16;
const REFINE_STEP: f64 = 0.2;
const REFINE_CURVATURE: f64 = 0.05;
const REFINE_RANGE: f64 = 3.0;
const REFINE_LOG_CURVATURE: f64 = 0.5;
const PROBES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub e_lo: f64,
    pub e_hi: f64,
    pub level: usize,
    /// `|x_n| - 1` at `e_lo` and `e_hi`.
    pub edge_residuals: [f64; 2],
    /// Edge set by the window rather than by `|x_n| = 1`.
    pub clipped: [bool; 2],
    /// Zero-length band from a double root of `x_n ∓ 1`.
    pub tangency: bool,
}

impl Band {
    pub fn length(&self) -> f64 {
        self.e_hi - self.e_lo
    }

    pub fn contains(&self, e: f64, tol: f64) -> bool {
        e >= self.e_lo - tol && e <= self.e_hi + tol
    }

    /// Five Chebyshev points of the interior.
    pub fn probes(&self) -> [f64; PROBES] {
        chebyshev(self.e_lo, self.e_hi)
    }
}

fn chebyshev(a: f64, b: f64) -> [f64; PROBES] {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    std::array::from_fn(|k| {
        mid + half * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * PROBES) as f64).cos()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCover {
    pub level: usize,
    pub bands: Vec<Band>,
    pub window: (f64, f64),
    pub total_measure: f64,
}

impl SpectralCover {
    pub fn contains(&self, e: f64, tol: f64) -> bool {
        let i = self.bands.partition_point(|b| b.e_hi + tol < e);
        self.bands.get(i).is_some_and(|b| b.contains(e, tol))
    }

    /// Bands of positive length.
    pub fn proper_bands(&self) -> impl Iterator<Item = &Band> {
        self.bands.iter().filter(|b| b.length() > 0.0)
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.bands.iter().map(|b| (b.e_lo, b.e_hi)).collect()
    }
}

/// Union of sorted interval lists, merging overlaps.
pub fn union_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut all: Vec<(f64, f64)> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(all.len());
    for (lo, hi) in all {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

pub fn measure(intervals: &[(f64, f64)]) -> f64 {
    intervals.iter().map(|(lo, hi)| hi - lo).sum()
}

/// `x_n(E)`, saturating to infinity once out of range.
fn half_trace_fn(model: &Model, n: usize) -> Result<impl Fn(f64) -> f64 + Sync + '_> {
    let fibonacci = model.trace_letters().is_ok();
    let seed = match model.seed_letter() {
        Ok(c) => c,
        Err(_) => model.alphabet().letter(0),
    };
    Ok(move |e: f64| {
        let x = if fibonacci {
            initial_conditions(model, e).map(|p| half_trace_at_level(p, n).to_f64())
        } else {
            approximant_matrix(model, seed, n, e).map(|m| m.half_trace())
        };
        x.unwrap_or(f64::NAN)
    })
}

fn fibonacci_number(k: usize) -> f64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..k {
        (a, b) = (b, a + b);
    }
    a
}

fn check_window(window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidWindow(lo, hi));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Below,
    Inside,
    Above,
}

fn side(x: f64) -> Side {
    if x.abs() <= 1.0 + ESCAPE_GUARD {
        Side::Inside
    } else if x > 0.0 {
        Side::Above
    } else {
        Side::Below
    }
}

fn inside(x: f64) -> bool {
    side(x) == Side::Inside
}

/// Bisects between an inside point and an outside point and returns the
/// inside end of the final bracket.
fn bisect_edge(f: &impl Fn(f64) -> f64, mut ein: f64, mut eout: f64) -> f64 {
    let tol = EDGE_TOLERANCE * ein.abs().max(1.0);
    loop {
        let mid = 0.5 * (ein + eout);
        if mid == ein || mid == eout {
            return ein;
        }
        if (ein - eout).abs() <= tol && (f(ein).abs() - 1.0).abs() <= EDGE_RESIDUAL_TARGET {
            return ein;
        }
        if inside(f(mid)) {
            ein = mid;
        } else {
            eout = mid;
        }
    }
}

/// Point with `|x| <= 1` between `a` (`x > 1` side `sa`) and `b` (opposite side).
fn bisect_into_band(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, sa: Side) -> Option<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            return None;
        }
        let s = side(f(mid));
        if s == Side::Inside {
            return Some(mid);
        }
        if s == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    None
}

/// Minimizes `g` on `[a, b]` by golden-section search.
fn golden_min(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
        if b - a <= f64::EPSILON * a.abs().max(1.0) {
            break;
        }
    }
    if gc <= gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Interior samples of `[a, b]`, halving while `x` changes quickly near the
/// bands.
fn refine(f: &impl Fn(f64) -> f64, (a, xa): (f64, f64), (b, xb): (f64, f64), depth: usize, out: &mut Vec<(f64, f64)>) {
    let m = 0.5 * (a + b);
    if depth == 0 || m == a || m == b {
        return;
    }
    let xm = f(m);
    let split = if xa.abs().min(xb.abs()).min(xm.abs()) < REFINE_RANGE {
        (xa - xb).abs() > REFINE_STEP || (xm - 0.5 * (xa + xb)).abs() > REFINE_CURVATURE
    } else {
        // far from the bands the growth of log|x| should be close to linear
        let (la, lb, lm) = (xa.abs().ln(), xb.abs().ln(), xm.abs().ln());
        la.is_finite() && lb.is_finite() && lm.is_finite() && (lm - 0.5 * (la + lb)).abs() > REFINE_LOG_CURVATURE
    };
    if split {
        refine(f, (a, xa), (m, xm), depth - 1, out);
        out.push((m, xm));
        refine(f, (m, xm), (b, xb), depth - 1, out);
    }
}

#[derive(Debug, Clone, Copy)]
enum Marker {
    Open(f64),
    Close(f64),
    Tangency(f64),
}

impl Marker {
    fn energy(&self) -> f64 {
        match *self {
            Marker::Open(e) | Marker::Close(e) | Marker::Tangency(e) => e,
        }
    }
}

/// Markers for the cell `[e[i], e[i+1]]` and the neighbourhood of `e[i]`.
fn markers_at(f: &impl Fn(f64) -> f64, e: &[f64], x: &[f64], i: usize) -> Vec<Marker> {
    let last = e.len() - 1;
    let mut out = Vec::new();
    let s = side(x[i]);

    // extremum of |x| around sample i, with the same side at the neighbours
    let lo = i.saturating_sub(1);
    let hi = (i + 1).min(last);
    let same = side(x[lo]) == s && side(x[hi]) == s;
    let ax = |k: usize| x[k].abs();
    if same && hi > lo {
        match s {
            Side::Above | Side::Below => {
                // local minimum of |x|: a band narrower than a cell, or a tangency
                if ax(i) < ax(lo) && ax(i) <= ax(hi) || (i == 0 && ax(0) <= ax(1)) || (i == last && ax(i) < ax(lo)) {
                    let (em, gm) = golden_min(&|t| f(t).abs(), e[lo], e[hi]);
                    if gm <= 1.0 + ESCAPE_GUARD {
                        out.push(Marker::Open(bisect_edge(f, em, e[lo])));
                        out.push(Marker::Close(bisect_edge(f, em, e[hi])));
                    } else if gm <= 1.0 + PROBE_TOLERANCE {
                        out.push(Marker::Tangency(em));
                    }
                }
            }
            Side::Inside => {
                // local maximum of |x|: a gap narrower than a cell
                if ax(i) > ax(lo) && ax(i) >= ax(hi) || (i == 0 && ax(0) >= ax(1)) || (i == last && ax(i) > ax(lo)) {
                    let (em, gm) = golden_min(&|t| -f(t).abs(), e[lo], e[hi]);
                    if !inside(gm) {
                        out.push(Marker::Close(bisect_edge(f, e[lo], em)));
                        out.push(Marker::Open(bisect_edge(f, e[hi], em)));
                    }
                }
            }
        }
    }

    if i < last {
        let t = side(x[i + 1]);
        match (s, t) {
            (Side::Inside, Side::Inside) => {}
            (Side::Inside, _) => out.push(Marker::Close(bisect_edge(f, e[i], e[i + 1]))),
            (_, Side::Inside) => out.push(Marker::Open(bisect_edge(f, e[i + 1], e[i]))),
            (a, b) if a != b => {
                if let Some(m) = bisect_into_band(f, e[i], e[i + 1], a) {
                    out.push(Marker::Open(bisect_edge(f, m, e[i])));
                    out.push(Marker::Close(bisect_edge(f, m, e[i + 1])));
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandSearch {
    /// Grid points per oscillation of `x_n`.
    pub oscillation_samples: usize,
}

impl Default for BandSearch {
    fn default() -> Self {
        Self { oscillation_samples: DEFAULT_OSCILLATION_SAMPLES }
    }
}

pub fn band_spectrum(model: &Model, n: usize, window: (f64, f64)) -> Result<SpectralCover> {
    band_spectrum_with(model, n, window, &BandSearch::default())
}

pub fn band_spectrum_with(model: &Model, n: usize, window: (f64, f64), opts: &BandSearch) -> Result<SpectralCover> {
    if n > MAX_BAND_LEVEL {
        return Err(Error::LevelCap { level: n, cap: MAX_BAND_LEVEL });
    }
    check_window(window)?;
    if opts.oscillation_samples < 4 {
        return Err(Error::InvalidArgument("at least 4 samples per oscillation are needed".into()));
    }
    // new bands open up inside the bands of the two previous levels, so
    // those are sampled densely when searching the next one
    let mut guides: Vec<Vec<(f64, f64)>> = Vec::new();
    for k in 0..=n {
        let guide = match guides.len() {
            0 => Vec::new(),
            1 => guides[0].clone(),
            len => union_intervals(&guides[len - 1], &guides[len - 2]),
        };
        let cover = search_level(model, k, window, opts, &guide)?;
        if k == n {
            return Ok(cover);
        }
        guides.push(cover.intervals());
    }
    unreachable!()
}

fn search_level(
    model: &Model,
    n: usize,
    window: (f64, f64),
    opts: &BandSearch,
    guide: &[(f64, f64)],
) -> Result<SpectralCover> {
    let f = half_trace_fn(model, n)?;
    let (wlo, whi) = window;
    let cells = (opts.oscillation_samples as f64 * fibonacci_number(n + 2)).ceil() as usize;
    let mut points = EnergyGrid::uniform(wlo, whi, cells + 1)?.points().to_vec();
    for &(lo, hi) in guide {
        let k = GUIDE_SAMPLES;
        points.extend((0..=k).map(|j| lo + (hi - lo) * j as f64 / k as f64));
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let coarse_x: Vec<f64> = points.par_iter().map(|&t| f(t)).collect();
    if let Some(i) = coarse_x.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFiniteEnergy(points[i]));
    }
    let last = points.len() - 1;
    let samples: Vec<(f64, f64)> = points
        .par_windows(2)
        .zip(coarse_x.par_windows(2))
        .flat_map_iter(|(e, x)| {
            let mut out = vec![(e[0], x[0])];
            refine(&f, (e[0], x[0]), (e[1], x[1]), REFINE_DEPTH, &mut out);
            out
        })
        .chain(rayon::iter::once((whi, coarse_x[last])))
        .collect();
    let (e, x): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    if let Some(i) = x.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFiniteEnergy(e[i]));
    }
    let (e, x) = (&e[..], &x[..]);

    let mut markers: Vec<Marker> = Vec::new();
    if inside(x[0]) {
        markers.push(Marker::Open(wlo));
    }
    let found: Vec<Vec<Marker>> = (0..e.len()).into_par_iter().map(|i| markers_at(&f, e, x, i)).collect();
    markers.extend(found.into_iter().flatten());
    if inside(x[e.len() - 1]) {
        markers.push(Marker::Close(whi));
    }
    markers.sort_by(|a, b| a.energy().total_cmp(&b.energy()));

    let residual = |t: f64| f(t).abs() - 1.0;
    let band = |lo: f64, hi: f64, tangency: bool| Band {
        e_lo: lo,
        e_hi: hi,
        level: n,
        edge_residuals: [residual(lo), residual(hi)],
        clipped: [lo == wlo && !tangency, hi == whi && !tangency],
        tangency,
    };
    let mut bands: Vec<Band> = Vec::new();
    let mut open: Option<f64> = None;
    let coarse = |detail: String| Error::GridTooCoarse { level: n, detail };
    for m in markers {
        match (m, open) {
            (Marker::Open(t), None) => open = Some(t),
            (Marker::Close(t), Some(lo)) => {
                bands.push(band(lo, t.max(lo), false));
                open = None;
            }
            (Marker::Tangency(t), None) => bands.push(band(t, t, true)),
            (m, _) => return Err(coarse(format!("unpaired band edge near E = {}", m.energy()))),
        }
    }
    if let Some(lo) = open {
        return Err(coarse(format!("band opened at E = {lo} never closes")));
    }

    // touching or overlapping bands merge
    let mut merged: Vec<Band> = Vec::with_capacity(bands.len());
    for b in bands {
        match merged.last_mut() {
            Some(last) if b.e_lo <= last.e_hi => {
                if b.e_hi > last.e_hi {
                    last.e_hi = b.e_hi;
                    last.edge_residuals[1] = b.edge_residuals[1];
                    last.clipped[1] = b.clipped[1];
                }
                last.tangency &= b.tangency;
            }
            _ => merged.push(b),
        }
    }

    validate(&f, n, window, &merged)?;
    let total_measure = merged.iter().map(Band::length).sum();
    Ok(SpectralCover { level: n, bands: merged, window, total_measure })
}

fn validate(f: &(impl Fn(f64) -> f64 + Sync), n: usize, window: (f64, f64), bands: &[Band]) -> Result<()> {
    let mut gaps = Vec::with_capacity(bands.len() + 1);
    let mut from = window.0;
    for b in bands {
        if b.e_lo > from {
            gaps.push((from, b.e_lo));
        }
        from = from.max(b.e_hi);
    }
    if window.1 > from {
        gaps.push((from, window.1));
    }
    let bad_band = bands
        .par_iter()
        .filter(|b| b.length() > 0.0)
        .find_any(|b| b.probes().iter().any(|&t| f(t).abs() > 1.0 + PROBE_TOLERANCE));
    if let Some(b) = bad_band {
        return Err(Error::GridTooCoarse {
            level: n,
            detail: format!("probe leaves the band [{}, {}]", b.e_lo, b.e_hi),
        });
    }
    let bad_gap = gaps
        .par_iter()
        .find_any(|&&(a, b)| chebyshev(a, b).iter().any(|&t| f(t).abs() < 1.0 - PROBE_TOLERANCE));
    if let Some((a, b)) = bad_gap {
        return Err(Error::GridTooCoarse { level: n, detail: format!("probe inside the gap [{a}, {b}]") });
    }
    Ok(())
}

/// Smallest `I(E)` over the edges and probes of a band.
pub fn min_invariant_on_band(model: &Model, band: &Band) -> Result<f64> {
    let mut points = vec![band.e_lo, band.e_hi];
    if band.length() > 0.0 {
        points.extend(band.probes());
    }
    points.into_iter().try_fold(f64::INFINITY, |m, e| Ok(m.min(invariant_at(model, e)?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyClass {
    /// Escape inequalities first hold at this index.
    Escaped(usize),
    NotEscapedBy(usize),
    /// Escape inequalities hold only inside the guard band at this index.
    Undetermined(usize),
}

impl EnergyClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Escaped(_) => "escaped",
            Self::NotEscapedBy(_) => "bounded",
            Self::Undetermined(_) => "undetermined",
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            Self::Escaped(n) | Self::NotEscapedBy(n) | Self::Undetermined(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedGrid {
    pub grid: EnergyGrid,
    pub classes: Vec<EnergyClass>,
    pub invariants: Vec<f64>,
}

pub fn classify_grid(model: &Model, grid: &EnergyGrid, n_max: usize) -> Result<ClassifiedGrid> {
    let rows: Vec<(EnergyClass, f64)> = grid
        .points()
        .par_iter()
        .map(|&e| {
            let orbit = trace_recursion(model, e, n_max)?;
            let class = match (orbit.escape_index, orbit.undetermined_index) {
                (Some(k), _) => EnergyClass::Escaped(k),
                (None, Some(k)) => EnergyClass::Undetermined(k),
                (None, None) => EnergyClass::NotEscapedBy(n_max),
            };
            Ok((class, orbit.invariant))
        })
        .collect::<Result<_>>()?;
    let (classes, invariants) = rows.into_iter().unzip();
    Ok(ClassifiedGrid { grid: grid.clone(), classes, invariants })
}

/// Measure of `σ_n ∪ σ_{n+1}` inside the window, for each level.
pub fn cover_measure_sequence(model: &Model, window: (f64, f64), levels: &[usize]) -> Result<Vec<(usize, f64)>> {
    levels
        .iter()
        .map(|&n| {
            let a = band_spectrum(model, n, window)?;
            let b = band_spectrum(model, n + 1, window)?;
            Ok((n, measure(&union_intervals(&a.intervals(), &b.intervals()))))
        })
        .collect()
}

/// `log(N2 / N1) / log(ε1 / ε2)` with `N` the number of bands of positive
/// length and `ε` their mean length, clamped to `[0, 1]`.
pub fn box_dimension_estimate(model: &Model, window: (f64, f64), levels: (usize, usize)) -> Result<f64> {
    let (n1, n2) = levels;
    if n2 <= n1 {
        return Err(Error::InvalidArgument(format!("levels must increase, got ({n1}, {n2})")));
    }
    let c1 = band_spectrum(model, n1, window)?;
    let c2 = band_spectrum(model, n2, window)?;
    box_dimension_from_covers(&c1, &c2)
}

pub fn box_dimension_from_covers(c1: &SpectralCover, c2: &SpectralCover) -> Result<f64> {
    let width = c1.window.1 - c1.window.0;
    let fills = |c: &SpectralCover| c.bands.len() == 1 && c.total_measure >= width * (1.0 - 1e-12);
    if fills(c1) && fills(c2) {
        return Ok(1.0);
    }
    let count = |c: &SpectralCover| c.proper_bands().count();
    let (k1, k2) = (count(c1), count(c2));
    if k1 < 2 || k2 < 2 {
        return Err(Error::InsufficientResolution(format!(
            "need at least 2 bands at both levels, got {k1} and {k2}"
        )));
    }
    let eps1 = c1.total_measure / k1 as f64;
    let eps2 = c2.total_measure / k2 as f64;
    let d = (k2 as f64 / k1 as f64).ln() / (eps1 / eps2).ln();
    Ok(if d.is_nan() { 0.0 } else { d.clamp(0.0, 1.0) })
}
