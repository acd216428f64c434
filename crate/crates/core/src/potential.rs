//! Local potential pieces and their concatenation along a word.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::subshift::{Alphabet, Substitution, Word};

/// Shape of one letter's local potential on `[0, length)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PieceKind {
    Constant { value: f64 },
    /// A single `strength * delta(x)` at the left endpoint of a free interval.
    PointInteraction { strength: f64 },
    /// Uniform samples with left-sample (piecewise-constant) interpolation;
    /// `samples[i]` holds on `[i * step, (i + 1) * step)`.
    Sampled { samples: Vec<f64>, step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPiece {
    kind: PieceKind,
    length: f64,
}

fn check_length(length: f64) -> Result<()> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidPiece(format!("length must be positive, got {length}")));
    }
    Ok(())
}

impl PotentialPiece {
    pub fn constant(value: f64, length: f64) -> Result<Self> {
        check_length(length)?;
        if !value.is_finite() {
            return Err(Error::InvalidPiece(format!("non-finite value {value}")));
        }
        Ok(Self { kind: PieceKind::Constant { value }, length })
    }

    pub fn free(length: f64) -> Result<Self> {
        Self::constant(0.0, length)
    }

    pub fn point_interaction(strength: f64, length: f64) -> Result<Self> {
        check_length(length)?;
        if !strength.is_finite() {
            return Err(Error::InvalidPiece(format!("non-finite strength {strength}")));
        }
        Ok(Self { kind: PieceKind::PointInteraction { strength }, length })
    }

    /// Sampled piece of length `step * (samples.len() - 1)`.
    pub fn sampled(samples: Vec<f64>, step: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidPiece("sampled piece needs at least 2 samples".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidPiece(format!("sample step must be positive, got {step}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPiece("non-finite sample".into()));
        }
        let length = step * (samples.len() - 1) as f64;
        Ok(Self { kind: PieceKind::Sampled { samples, step }, length })
    }

    /// Sampled piece whose step is derived from a declared length.
    pub fn sampled_with_length(samples: Vec<f64>, length: f64) -> Result<Self> {
        check_length(length)?;
        if samples.len() < 2 {
            return Err(Error::InvalidPiece("sampled piece needs at least 2 samples".into()));
        }
        let step = length / (samples.len() - 1) as f64;
        let mut piece = Self::sampled(samples, step)?;
        piece.length = length;
        Ok(piece)
    }

    /// Samples `f` on a uniform grid of `cells + 1` points over `[0, length]`.
    pub fn sample_fn(f: impl Fn(f64) -> f64, length: f64, cells: usize) -> Result<Self> {
        check_length(length)?;
        if cells == 0 {
            return Err(Error::InvalidPiece("need at least one cell".into()));
        }
        let step = length / cells as f64;
        let samples = (0..=cells).map(|i| f(i as f64 * step)).collect();
        Self::sampled_with_length(samples, length)
    }

    pub fn kind(&self) -> &PieceKind {
        &self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_point_interaction(&self) -> bool {
        matches!(self.kind, PieceKind::PointInteraction { .. })
    }

    /// True when the piece contributes nothing to the potential.
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PieceKind::Constant { value } => *value == 0.0,
            PieceKind::PointInteraction { strength } => *strength == 0.0,
            PieceKind::Sampled { samples, .. } => {
                samples[..samples.len() - 1].iter().all(|&v| v == 0.0)
            }
        }
    }

    /// Value at local coordinate `t` in `[0, length)`. Point interactions
    /// report the free background 0.
    pub fn local_value(&self, t: f64) -> f64 {
        match &self.kind {
            PieceKind::Constant { value } => *value,
            PieceKind::PointInteraction { .. } => 0.0,
            PieceKind::Sampled { samples, step } => {
                let cells = samples.len() - 1;
                let idx = ((t / step).floor().max(0.0) as usize).min(cells - 1);
                samples[idx]
            }
        }
    }

    /// Constant cells `(value, width)` making up the piece, left to right.
    /// Point interactions contribute their free background.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            PieceKind::Constant { value } => vec![(*value, self.length)],
            PieceKind::PointInteraction { .. } => vec![(0.0, self.length)],
            PieceKind::Sampled { samples, step } => {
                samples[..samples.len() - 1].iter().map(|&v| (v, *step)).collect()
            }
        }
    }
}

/// Letter pieces plus the substitution that orders them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    name: String,
    substitution: Substitution,
    pieces: Vec<PotentialPiece>,
    params: BTreeMap<String, f64>,
    trace_letters: Option<(usize, usize)>,
}

impl Model {
    pub fn new(
        name: impl Into<String>,
        substitution: Substitution,
        pieces: Vec<(char, PotentialPiece)>,
    ) -> Result<Self> {
        let alphabet = substitution.alphabet();
        let mut slots: Vec<Option<PotentialPiece>> = vec![None; alphabet.len()];
        for (letter, piece) in pieces {
            let idx = alphabet.index_of(letter)?;
            if slots[idx].replace(piece).is_some() {
                return Err(Error::InvalidModel(format!("letter '{letter}' has two pieces")));
            }
        }
        let pieces = slots
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                p.ok_or_else(|| {
                    Error::InvalidModel(format!("letter '{}' has no piece", alphabet.letter(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let trace_letters = substitution.fibonacci_roles();
        Ok(Self {
            name: name.into(),
            substitution,
            pieces,
            params: BTreeMap::new(),
            trace_letters,
        })
    }

    /// Fibonacci model with pieces for `a` and `b`.
    pub fn fibonacci(name: impl Into<String>, a: PotentialPiece, b: PotentialPiece) -> Self {
        Self::new(name, Substitution::fibonacci(), vec![('a', a), ('b', b)])
            .expect("fibonacci model is well formed")
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    /// Overrides which letters play the roles of `a` and `b` in the trace map.
    /// The substitution must be Fibonacci with exactly those roles.
    pub fn with_trace_letters(mut self, a: char, b: char) -> Result<Self> {
        let alphabet = self.substitution.alphabet();
        let roles = (alphabet.index_of(a)?, alphabet.index_of(b)?);
        if self.substitution.fibonacci_roles() != Some(roles) {
            return Err(Error::NotFibonacci(format!(
                "substitution does not act as {a} -> {a}{b}, {b} -> {a}"
            )));
        }
        self.trace_letters = Some(roles);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.substitution.alphabet()
    }

    pub fn substitution(&self) -> &Substitution {
        &self.substitution
    }

    pub fn pieces(&self) -> &[PotentialPiece] {
        &self.pieces
    }

    pub fn piece(&self, index: usize) -> &PotentialPiece {
        &self.pieces[index]
    }

    pub fn piece_for(&self, letter: char) -> Result<&PotentialPiece> {
        Ok(&self.pieces[self.alphabet().index_of(letter)?])
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.pieces.iter().map(PotentialPiece::length).collect()
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Letter indices for the `a` and `b` roles of the trace map.
    pub fn trace_letters(&self) -> Result<(usize, usize)> {
        self.trace_letters.ok_or_else(|| {
            Error::NotFibonacci(format!("model '{}' has a non-Fibonacci substitution", self.name))
        })
    }

    /// The seed letter of the approximants `S^n(a)`.
    pub fn seed_letter(&self) -> Result<char> {
        Ok(self.alphabet().letter(self.trace_letters()?.0))
    }
}

/// A word laid out on the line, starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatenatedPotential {
    word: Word,
    breakpoints: Vec<f64>,
    total_length: f64,
}

impl ConcatenatedPotential {
    pub fn word(&self) -> &Word {
        &self.word
    }

    /// Left edge of each cell; `breakpoints[0] == 0`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Index of the cell containing `x`.
    pub fn cell_at(&self, x: f64) -> Result<usize> {
        if !(0.0..self.total_length).contains(&x) {
            return Err(Error::OutOfRange { x, total: self.total_length });
        }
        Ok(self.breakpoints.partition_point(|&b| b <= x) - 1)
    }
}

pub fn concatenate(model: &Model, word: &Word) -> Result<ConcatenatedPotential> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let k = model.alphabet().len();
    if let Some(&bad) = word.symbols().iter().find(|&&s| usize::from(s) >= k) {
        return Err(Error::InvalidModel(format!("symbol index {bad} has no piece")));
    }
    let mut breakpoints = Vec::with_capacity(word.len());
    let mut position = 0.0;
    for &s in word.symbols() {
        breakpoints.push(position);
        position += model.piece(usize::from(s)).length();
    }
    Ok(ConcatenatedPotential { word: word.clone(), breakpoints, total_length: position })
}

/// A pointwise potential value; `in_point_interaction` flags cells whose
/// delta is not representable pointwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    pub in_point_interaction: bool,
}

pub fn evaluate(pot: &ConcatenatedPotential, model: &Model, x: f64) -> Result<PotentialValue> {
    let cell = pot.cell_at(x)?;
    let piece = model.piece(usize::from(pot.word.symbols()[cell]));
    let t = x - pot.breakpoints[cell];
    Ok(PotentialValue {
        value: piece.local_value(t),
        in_point_interaction: piece.is_point_interaction(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelWarning {
    /// The two letters produce the same potential, so the concatenation
    /// cannot see the substitution.
    IndistinguishableLetters(char, char),
    /// Every piece is zero: the free operator.
    AllPiecesZero,
}

impl std::fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::IndistinguishableLetters(a, b) => {
                write!(f, "letters indistinguishable: '{a}' and '{b}'")
            }
            Self::AllPiecesZero => write!(f, "all pieces are zero (free operator)"),
        }
    }
}

fn indistinguishable(p: &PotentialPiece, q: &PotentialPiece) -> bool {
    match (&p.kind, &q.kind) {
        // constant pieces of equal value tile a constant potential at any lengths
        (PieceKind::Constant { value: u }, PieceKind::Constant { value: v }) => u == v,
        _ => p == q,
    }
}

/// Heuristic degeneracy checks; full aperiodicity and irreducibility are not decided here.
pub fn validate_model(model: &Model) -> Vec<ModelWarning> {
    let mut warnings = Vec::new();
    let pieces = model.pieces();
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            if indistinguishable(&pieces[i], &pieces[j]) {
                warnings.push(ModelWarning::IndistinguishableLetters(
                    model.alphabet().letter(i),
                    model.alphabet().letter(j),
                ));
            }
        }
    }
    if pieces.iter().all(PotentialPiece::is_zero) {
        warnings.push(ModelWarning::AllPiecesZero);
    }
    warnings
}
