//! The Fibonacci trace map `T(x, y, z) = (2xy - z, x, y)`, its invariant
//! `I(x, y, z) = x² + y² + z² - 2xyz - 1`, and the half-trace recursion
//! `x_{n+1} = 2 x_n x_{n-1} - x_{n-2}` seeded by the curve of initial
//! conditions `(x_1(E), x_0(E), x_{-1}(E))`.

mod mesh;

pub use mesh::{surface_mesh, TriangleMesh, MIN_MESH_RESOLUTION};

use crate::error::{Error, Result};
use crate::potential::Model;
use crate::transfer::piece_matrix_scaled;

/// A point `(x_{n+1}, x_n, x_{n-1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceTriple {
    pub x_next: f64,
    pub x_cur: f64,
    pub x_prev: f64,
}

impl TraceTriple {
    pub const fn new(x_next: f64, x_cur: f64, x_prev: f64) -> Self {
        Self { x_next, x_cur, x_prev }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x_next, self.x_cur, self.x_prev]
    }

    pub fn norm(&self) -> f64 {
        self.as_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// `T(x, y, z)` in plain arithmetic.
    pub fn step(&self) -> Self {
        Self::new(2.0 * self.x_next * self.x_cur - self.x_prev, self.x_next, self.x_cur)
    }

    /// `T^{-1}(x, y, z) = (y, z, 2yz - x)`.
    pub fn inverse_step(&self) -> Self {
        Self::new(self.x_cur, self.x_prev, 2.0 * self.x_cur * self.x_prev - self.x_next)
    }
}

/// Result of one trace-map step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapStep {
    Finite(TraceTriple),
    /// The image does not fit in `f64`; carried as a unit direction and
    /// the log of its Euclidean norm.
    Escaped { direction: [f64; 3], log_magnitude: f64 },
}

pub fn trace_map_step(p: TraceTriple) -> MapStep {
    let q = p.step();
    if q.is_finite() && q.norm().is_finite() {
        return MapStep::Finite(q);
    }
    // redo the step on p / s, where the quadratic term picks up a factor s
    let s = p.as_array().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let [x, y, z] = p.as_array().map(|v| v / s);
    let scaled = [2.0 * x * y * s - z, x, y];
    let len = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len.is_finite() {
        MapStep::Escaped { direction: scaled.map(|v| v / len), log_magnitude: len.ln() + s.ln() }
    } else {
        // 2xy*s overflowed too: the first coordinate dominates
        let first = 2.0 * x * y;
        let log_magnitude = (2.0 * x.abs() * y.abs()).ln() + 2.0 * s.ln();
        MapStep::Escaped { direction: [first.signum(), 0.0, 0.0], log_magnitude }
    }
}

/// Fricke-Vogt invariant.
pub fn fricke_vogt(p: TraceTriple) -> f64 {
    let TraceTriple { x_next: x, x_cur: y, x_prev: z } = p;
    x * x + y * y + z * z - 2.0 * x * y * z - 1.0
}

/// Gradient of the invariant.
pub fn fricke_vogt_gradient(p: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = p;
    [2.0 * x - 2.0 * y * z, 2.0 * y - 2.0 * x * z, 2.0 * z - 2.0 * x * y]
}

/// `(x_1, x_0, x_{-1}) = (tr(M_b M_a), tr M_a, tr M_b) / 2`.
pub fn initial_conditions(model: &Model, e: f64) -> Result<TraceTriple> {
    let (a, b) = model.trace_letters()?;
    let ma = piece_matrix_scaled(model.piece(a), e)?;
    let mb = piece_matrix_scaled(model.piece(b), e)?;
    Ok(TraceTriple::new((mb * ma).half_trace(), ma.half_trace(), mb.half_trace()))
}

/// `I(E)` through the commutator, `I = -det(M_a M_b - M_b M_a) / 4`, which
/// stays accurate where the three half-traces are large but `I` is small.
/// Falls back to the polynomial on rescaled matrices.
pub fn invariant_at(model: &Model, e: f64) -> Result<f64> {
    let (a, b) = model.trace_letters()?;
    let ma = piece_matrix_scaled(model.piece(a), e)?;
    let mb = piece_matrix_scaled(model.piece(b), e)?;
    match (ma.to_matrix(), mb.to_matrix()) {
        (Some(ma), Some(mb)) => {
            let (p, q) = (ma * mb, mb * ma);
            let c = [p.m11 - q.m11, p.m12 - q.m12, p.m21 - q.m21, p.m22 - q.m22];
            Ok(-0.25 * (c[0] * c[3] - c[1] * c[2]))
        }
        _ => Ok(fricke_vogt(TraceTriple::new((mb * ma).half_trace(), ma.half_trace(), mb.half_trace()))),
    }
}

/// Tolerance band around the escape inequalities.
pub const ESCAPE_GUARD: f64 = 1e-12;

/// Default cap on the number of recursion steps.
pub const DEFAULT_NMAX_CAP: usize = 200;

const LOG_SWITCH: f64 = 1e100;

/// One entry of the half-trace sequence. Values beyond `1e100` are kept as
/// sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceValue {
    Finite(f64),
    Log { negative: bool, log_abs: f64 },
}

impl TraceValue {
    fn from_log(negative: bool, log_abs: f64) -> Self {
        if log_abs < LOG_SWITCH.ln() {
            let v = log_abs.exp();
            Self::Finite(if negative { -v } else { v })
        } else {
            Self::Log { negative, log_abs }
        }
    }

    pub fn log_abs(&self) -> f64 {
        match *self {
            Self::Finite(v) => v.abs().ln(),
            Self::Log { log_abs, .. } => log_abs,
        }
    }

    pub fn is_negative(&self) -> bool {
        match *self {
            Self::Finite(v) => v < 0.0,
            Self::Log { negative, .. } => negative,
        }
    }

    /// As a float, saturating to infinity when out of range.
    pub fn to_f64(&self) -> f64 {
        match *self {
            Self::Finite(v) => v,
            Self::Log { negative, log_abs } => {
                let v = log_abs.exp();
                if negative {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// `|self| > threshold` for a finite threshold.
    pub fn abs_exceeds(&self, threshold: f64) -> bool {
        match *self {
            Self::Finite(v) => v.abs() > threshold,
            Self::Log { log_abs, .. } => log_abs > threshold.ln(),
        }
    }

    /// `2 x y - z`.
    pub fn recur(x: Self, y: Self, z: Self) -> Self {
        if let (Self::Finite(a), Self::Finite(b), Self::Finite(c)) = (x, y, z) {
            let r = 2.0 * a * b - c;
            if r.is_finite() && r.abs() <= LOG_SWITCH {
                return Self::Finite(r);
            }
        }
        let lp = std::f64::consts::LN_2 + x.log_abs() + y.log_abs();
        let sp = x.is_negative() != y.is_negative();
        let lz = z.log_abs();
        let sz = z.is_negative();
        if lz == f64::NEG_INFINITY {
            return Self::from_log(sp, lp);
        }
        if lp == f64::NEG_INFINITY {
            return Self::from_log(!sz, lz);
        }
        // product term minus z, factoring out the larger magnitude
        if lp >= lz {
            let ratio = (lz - lp).exp();
            let f = if sp == sz { 1.0 - ratio } else { 1.0 + ratio };
            Self::from_log(sp, lp + f.ln())
        } else {
            let ratio = (lp - lz).exp();
            let f = if sp == sz { 1.0 - ratio } else { 1.0 + ratio };
            Self::from_log(!sz, lz + f.ln())
        }
    }
}

/// Outcome of testing the escape inequalities at one index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EscapeTest {
    No,
    Yes,
    /// Holds without the guard band but not with it.
    Borderline,
}

fn escape_test(next: TraceValue, cur: TraceValue, prev: TraceValue) -> EscapeTest {
    let holds = |guard: f64| {
        let rhs = match prev {
            TraceValue::Finite(v) => (v.abs() + guard).ln(),
            TraceValue::Log { log_abs, .. } => log_abs,
        };
        next.abs_exceeds(1.0 + guard)
            && cur.abs_exceeds(1.0 + guard)
            && next.log_abs() + cur.log_abs() > rhs
    };
    if holds(ESCAPE_GUARD) {
        EscapeTest::Yes
    } else if holds(0.0) {
        EscapeTest::Borderline
    } else {
        EscapeTest::No
    }
}

/// Half-trace sequence `x_{-1}, ..., x_{n_max}` of one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub initial: TraceTriple,
    pub invariant: f64,
    values: Vec<TraceValue>,
    /// First `n` with `|x_{n+1}| > 1`, `|x_n| > 1`, `|x_{n+1} x_n| > |x_{n-1}|`.
    pub escape_index: Option<usize>,
    /// First `n` where the escape inequalities held only inside the guard band.
    pub undetermined_index: Option<usize>,
}

impl OrbitRecord {
    pub fn n_max(&self) -> usize {
        self.values.len() - 2
    }

    /// `x_n` for `-1 <= n <= n_max`.
    pub fn x(&self, n: isize) -> TraceValue {
        self.values[(n + 1) as usize]
    }

    pub fn values(&self) -> &[TraceValue] {
        &self.values
    }

    /// Finite triples `(x_{n+1}, x_n, x_{n-1})` for `n = 0, 1, ...`, stopping
    /// at the first entry kept in log form.
    pub fn steps(&self) -> Vec<TraceTriple> {
        self.values
            .windows(3)
            .map_while(|w| match (w[2], w[1], w[0]) {
                (TraceValue::Finite(a), TraceValue::Finite(b), TraceValue::Finite(c)) => {
                    Some(TraceTriple::new(a, b, c))
                }
                _ => None,
            })
            .collect()
    }
}

/// Runs the half-trace recursion from an initial triple up to `x_{n_max}`.
pub fn orbit_from(initial: TraceTriple, n_max: usize) -> OrbitRecord {
    let mut values = Vec::with_capacity(n_max + 2);
    values.push(TraceValue::Finite(initial.x_prev));
    values.push(TraceValue::Finite(initial.x_cur));
    if n_max >= 1 {
        values.push(TraceValue::Finite(initial.x_next));
    }
    while values.len() < n_max + 2 {
        let k = values.len();
        values.push(TraceValue::recur(values[k - 1], values[k - 2], values[k - 3]));
    }
    let mut escape_index = None;
    let mut undetermined_index = None;
    // index n compares x_{n+1}, x_n, x_{n-1} = values[n + 2], values[n + 1], values[n]
    for n in 0..n_max {
        match escape_test(values[n + 2], values[n + 1], values[n]) {
            EscapeTest::Yes => {
                escape_index = Some(n);
                break;
            }
            EscapeTest::Borderline if undetermined_index.is_none() => undetermined_index = Some(n),
            _ => {}
        }
    }
    OrbitRecord {
        initial,
        invariant: fricke_vogt(initial),
        values,
        escape_index,
        undetermined_index,
    }
}

pub fn trace_recursion(model: &Model, e: f64, n_max: usize) -> Result<OrbitRecord> {
    if n_max > DEFAULT_NMAX_CAP {
        return Err(Error::LevelCap { level: n_max, cap: DEFAULT_NMAX_CAP });
    }
    let mut orbit = orbit_from(initial_conditions(model, e)?, n_max);
    orbit.invariant = invariant_at(model, e)?;
    Ok(orbit)
}

/// `x_n` alone, without recording the orbit.
pub fn half_trace_at_level(initial: TraceTriple, n: usize) -> TraceValue {
    let mut prev = TraceValue::Finite(initial.x_prev);
    let mut cur = TraceValue::Finite(initial.x_cur);
    if n == 0 {
        return cur;
    }
    let mut next = TraceValue::Finite(initial.x_next);
    for _ in 1..n {
        let new = TraceValue::recur(next, cur, prev);
        prev = cur;
        cur = next;
        next = new;
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialPiece;
    use crate::subshift::iterate_substitution;
    use crate::transfer::word_matrix;

    fn step_model(lambda: f64) -> Model {
        Model::fibonacci(
            "step",
            PotentialPiece::constant(lambda, 1.0).unwrap(),
            PotentialPiece::free(1.0).unwrap(),
        )
    }

    fn free_model() -> Model {
        Model::fibonacci("free", PotentialPiece::free(1.0).unwrap(), PotentialPiece::free(1.0).unwrap())
    }

    #[test]
    fn map_examples() {
        assert_eq!(TraceTriple::new(1.0, 1.0, 1.0).step(), TraceTriple::new(1.0, 1.0, 1.0));
        assert_eq!(TraceTriple::new(0.0, 0.0, 0.0).step(), TraceTriple::new(0.0, 0.0, 0.0));
        assert_eq!(
            trace_map_step(TraceTriple::new(2.0, 1.0, 0.0)),
            MapStep::Finite(TraceTriple::new(4.0, 2.0, 1.0))
        );
    }

    #[test]
    fn map_overflow_is_escaped() {
        let p = TraceTriple::new(1e200, 1e200, 1.0);
        match trace_map_step(p) {
            MapStep::Escaped { direction, log_magnitude } => {
                assert!((log_magnitude - (2.0f64.ln() + 400.0 * 10f64.ln())).abs() < 1e-9);
                assert!((direction[0] - 1.0).abs() < 1e-12);
            }
            other => panic!("expected escape, got {other:?}"),
        }
        let q = TraceTriple::new(1e160, -1e160, 3.0);
        match trace_map_step(q) {
            MapStep::Escaped { direction, log_magnitude } => {
                assert!(direction[0] < 0.0);
                assert!((log_magnitude - (2.0f64.ln() + 320.0 * 10f64.ln())).abs() < 1e-9);
            }
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn invariant_examples() {
        assert_eq!(fricke_vogt(TraceTriple::new(1.0, 1.0, 1.0)), 0.0);
        assert_eq!(fricke_vogt(TraceTriple::new(0.0, 0.0, 0.0)), -1.0);
        for e in [0.5, 3.0, 40.0] {
            let p = initial_conditions(&free_model(), e).unwrap();
            assert!(fricke_vogt(p).abs() < 1e-13, "E = {e}");
        }
    }

    #[test]
    fn commutator_form_matches_polynomial() {
        let step = Model::fibonacci(
            "step",
            PotentialPiece::constant(1.0, 1.0).unwrap(),
            PotentialPiece::free(1.0).unwrap(),
        );
        for e in [0.3, 2.0, 7.5, 30.0] {
            let poly = fricke_vogt(initial_conditions(&step, e).unwrap());
            assert!((invariant_at(&step, e).unwrap() - poly).abs() < 1e-12, "E = {e}");
        }
        for e in [-19.9, -5.0, 0.0, 60.0] {
            assert_eq!(invariant_at(&free_model(), e).unwrap(), 0.0);
        }
    }

    #[test]
    fn inverse_undoes_step() {
        let p = TraceTriple::new(0.3, -1.7, 2.2);
        let q = p.step().inverse_step();
        assert!((q.x_next - p.x_next).abs() < 1e-12);
        assert!((q.x_cur - p.x_cur).abs() < 1e-12);
        assert!((q.x_prev - p.x_prev).abs() < 1e-12);
    }

    #[test]
    fn free_initials() {
        let e: f64 = 2.3;
        let p = initial_conditions(&free_model(), e).unwrap();
        let k = e.sqrt();
        assert!((p.x_next - (2.0 * k).cos()).abs() < 1e-14);
        assert!((p.x_cur - k.cos()).abs() < 1e-15);
        assert!((p.x_prev - k.cos()).abs() < 1e-15);
    }

    #[test]
    fn step_initials_above_barrier() {
        let lambda = 1.0;
        let e: f64 = 5.0;
        let p = initial_conditions(&step_model(lambda), e).unwrap();
        let (k, q) = (e.sqrt(), (e - lambda).sqrt());
        let x1 = k.cos() * q.cos() - 0.5 * (k / q + q / k) * k.sin() * q.sin();
        assert!((p.x_next - x1).abs() < 1e-14);
        assert!((p.x_cur - q.cos()).abs() < 1e-15);
        assert!((p.x_prev - k.cos()).abs() < 1e-15);
    }

    #[test]
    fn kp_at_four_pi_squared_lies_on_cayley_cubic() {
        let kp = Model::fibonacci(
            "kp",
            PotentialPiece::point_interaction(1.0, 1.0).unwrap(),
            PotentialPiece::free(1.0).unwrap(),
        );
        let e = 4.0 * std::f64::consts::PI.powi(2);
        let p = initial_conditions(&kp, e).unwrap();
        assert!((p.x_prev - 1.0).abs() < 1e-12);
        assert!(fricke_vogt(p).abs() < 1e-12);
        assert!(p.as_array().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn non_fibonacci_model_refused() {
        let ab = crate::subshift::Alphabet::new(['a', 'b']).unwrap();
        let tm = crate::subshift::Substitution::new(ab, &[('a', "ab"), ('b', "ba")]).unwrap();
        let m = Model::new(
            "tm",
            tm,
            vec![('a', PotentialPiece::free(1.0).unwrap()), ('b', PotentialPiece::free(1.0).unwrap())],
        )
        .unwrap();
        assert!(matches!(initial_conditions(&m, 1.0), Err(Error::NotFibonacci(_))));
    }

    #[test]
    fn free_orbits_stay_bounded() {
        for e in [1.0, 2.0, 10.0] {
            let orbit = trace_recursion(&free_model(), e, 40).unwrap();
            assert_eq!(orbit.escape_index, None);
            for n in -1..=40 {
                assert!(!orbit.x(n).abs_exceeds(1.0 + 1e-9), "E={e} n={n}");
            }
        }
    }

    #[test]
    fn deep_barrier_escapes_early() {
        let orbit = trace_recursion(&step_model(50.0), 1.0, 30).unwrap();
        let k = orbit.escape_index.expect("escapes");
        assert!(k <= 2, "escape at {k}");
        // values past escape keep growing and stay outside [-1, 1]
        for n in k as isize..=30 {
            assert!(orbit.x(n).abs_exceeds(1.0));
        }
        assert!(matches!(orbit.x(30), TraceValue::Log { .. }));
    }

    #[test]
    fn recursion_matches_matrix_product_at_level_two() {
        let m = step_model(1.0);
        let w = iterate_substitution(m.substitution(), 'a', 2).unwrap();
        for e in [0.4, 2.5, 7.7, 19.0] {
            let orbit = trace_recursion(&m, e, 2).unwrap();
            let direct = word_matrix(&m, &w, e).unwrap().half_trace();
            assert!((orbit.x(2).to_f64() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn level_helper_agrees_with_orbit() {
        let m = step_model(2.0);
        for e in [0.7, 3.1, 8.8] {
            let orbit = trace_recursion(&m, e, 25).unwrap();
            for n in 0..=25usize {
                assert_eq!(half_trace_at_level(orbit.initial, n), orbit.x(n as isize));
            }
        }
    }

    #[test]
    fn log_domain_recursion_tracks_growth() {
        let big = TraceValue::Finite(1e90);
        let r = TraceValue::recur(big, big, TraceValue::Finite(1.0));
        match r {
            TraceValue::Log { negative, log_abs } => {
                assert!(!negative);
                assert!((log_abs - (2.0f64.ln() + 180.0 * 10f64.ln())).abs() < 1e-9);
            }
            _ => panic!("expected log form"),
        }
        let r2 = TraceValue::recur(r, TraceValue::Finite(-3.0), big);
        assert!(r2.is_negative());
        assert!((r2.log_abs() - (6.0f64.ln() + r.log_abs())).abs() < 1e-9);
        // a small factor brings the value back into plain range
        let back = TraceValue::recur(
            TraceValue::Log { negative: false, log_abs: 101.0 * 10f64.ln() },
            TraceValue::Finite(1e-5),
            TraceValue::Finite(0.0),
        );
        match back {
            TraceValue::Finite(v) => assert!((v / 2e96 - 1.0).abs() < 1e-12),
            _ => panic!("expected finite"),
        }
    }

    #[test]
    fn steps_are_consistent() {
        let orbit = trace_recursion(&step_model(1.0), 3.0, 10).unwrap();
        let steps = orbit.steps();
        assert_eq!(steps[0], orbit.initial);
        for w in steps.windows(2) {
            let stepped = w[0].step();
            assert!((stepped.x_next - w[1].x_next).abs() <= 1e-12 * (1.0 + w[1].x_next.abs()));
        }
    }

    #[test]
    fn nmax_cap() {
        assert!(matches!(trace_recursion(&free_model(), 1.0, 201), Err(Error::LevelCap { .. })));
    }
}
