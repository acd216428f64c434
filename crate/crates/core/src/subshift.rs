//! Substitution words over a finite alphabet and their letter statistics.
//!
//! Words are flat arrays of letter indices. Iterating a substitution
//! `n` times from a seed letter gives the approximant `S^n(seed)`; for the
//! Fibonacci rule `a -> ab, b -> a` these are the prefixes of the fixed point.

use crate::error::{Error, Result};

/// Highest substitution level [`iterate_substitution`] will build.
pub const DEFAULT_LEVEL_CAP: usize = 32;

/// Longest word [`iterate_substitution`] will build (`|S^32(a)|` for Fibonacci).
pub const DEFAULT_MAX_WORD_LEN: usize = 5_702_887;

/// Ordered set of distinct letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    pub fn new(letters: impl IntoIterator<Item = char>) -> Result<Self> {
        let letters: Vec<char> = letters.into_iter().collect();
        if letters.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        if letters.len() > usize::from(u8::MAX) + 1 {
            return Err(Error::InvalidAlphabet("more than 256 letters".into()));
        }
        for (i, c) in letters.iter().enumerate() {
            if letters[..i].contains(c) {
                return Err(Error::InvalidAlphabet(format!("letter '{c}' repeated")));
            }
        }
        Ok(Self { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn letter(&self, index: usize) -> char {
        self.letters[index]
    }

    pub fn index_of(&self, letter: char) -> Result<usize> {
        self.letters
            .iter()
            .position(|&c| c == letter)
            .ok_or(Error::UnknownLetter(letter))
    }
}

/// A substitution rule: every letter maps to a non-empty word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    alphabet: Alphabet,
    rules: Vec<Vec<u8>>,
}

impl Substitution {
    /// Builds a substitution from `(letter, image)` pairs; every letter of the
    /// alphabet needs exactly one rule.
    pub fn new(alphabet: Alphabet, rules: &[(char, &str)]) -> Result<Self> {
        let mut images: Vec<Option<Vec<u8>>> = vec![None; alphabet.len()];
        for &(letter, image) in rules {
            let idx = alphabet.index_of(letter)?;
            if images[idx].is_some() {
                return Err(Error::InvalidSubstitution(format!(
                    "letter '{letter}' has more than one rule"
                )));
            }
            if image.is_empty() {
                return Err(Error::InvalidSubstitution(format!(
                    "image of '{letter}' is empty"
                )));
            }
            let symbols = image
                .chars()
                .map(|c| alphabet.index_of(c).map(|i| i as u8))
                .collect::<Result<Vec<u8>>>()?;
            images[idx] = Some(symbols);
        }
        let rules = images
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.ok_or_else(|| {
                    Error::InvalidSubstitution(format!(
                        "letter '{}' has no rule",
                        alphabet.letter(i)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { alphabet, rules })
    }

    /// `a -> ab`, `b -> a`.
    pub fn fibonacci() -> Self {
        Self {
            alphabet: Alphabet { letters: vec!['a', 'b'] },
            rules: vec![vec![0, 1], vec![0]],
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn image(&self, index: usize) -> &[u8] {
        &self.rules[index]
    }

    /// For a Fibonacci rule `a -> ab, b -> a` on two letters, the indices
    /// playing the roles of `a` and `b`.
    pub fn fibonacci_roles(&self) -> Option<(usize, usize)> {
        if self.alphabet.len() != 2 {
            return None;
        }
        [(0usize, 1usize), (1, 0)].into_iter().find(|&(a, b)| {
            self.rules[a] == [a as u8, b as u8] && self.rules[b] == [a as u8]
        })
    }

    pub fn is_fibonacci(&self) -> bool {
        self.fibonacci_roles().is_some()
    }

    /// `m[i][j]` counts occurrences of letter `i` in the image of letter `j`.
    pub fn incidence_matrix(&self) -> Vec<Vec<u64>> {
        let k = self.alphabet.len();
        let mut m = vec![vec![0u64; k]; k];
        for (j, image) in self.rules.iter().enumerate() {
            for &s in image {
                m[usize::from(s)][j] += 1;
            }
        }
        m
    }

    /// Letter counts of `S^n(letter)` without building the word.
    pub fn iterate_counts(&self, index: usize, n: usize) -> Vec<u64> {
        let m = self.incidence_matrix();
        let k = self.alphabet.len();
        let mut counts = vec![0u64; k];
        counts[index] = 1;
        for _ in 0..n {
            counts = (0..k)
                .map(|i| {
                    (0..k).fold(0u64, |acc, j| acc.saturating_add(m[i][j].saturating_mul(counts[j])))
                })
                .collect();
        }
        counts
    }

    /// Length of `S^n(letter)` without building the word; saturates at `u64::MAX`.
    pub fn iterate_length(&self, index: usize, n: usize) -> u64 {
        let k = self.alphabet.len();
        let mut lens = vec![1u64; k];
        for _ in 0..n {
            lens = self
                .rules
                .iter()
                .map(|img| {
                    img.iter()
                        .fold(0u64, |acc, &s| acc.saturating_add(lens[usize::from(s)]))
                })
                .collect();
        }
        lens[index]
    }
}

/// A finite word, optionally tagged with the substitution level that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    symbols: Vec<u8>,
    level: Option<usize>,
}

impl Word {
    pub fn from_symbols(symbols: Vec<u8>) -> Self {
        Self { symbols, level: None }
    }

    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| alphabet.index_of(c).map(|i| i as u8))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_symbols(symbols))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn level(&self) -> Option<usize> {
        self.level
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Subword `[start, end)`; untagged.
    pub fn slice(&self, start: usize, end: usize) -> Word {
        Word::from_symbols(self.symbols[start..end].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = Vec::with_capacity(self.len() + other.len());
        symbols.extend_from_slice(&self.symbols);
        symbols.extend_from_slice(&other.symbols);
        Word::from_symbols(symbols)
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.symbols.starts_with(&prefix.symbols)
    }

    pub fn counts(&self, alphabet_len: usize) -> Vec<usize> {
        let mut counts = vec![0usize; alphabet_len];
        for &s in &self.symbols {
            counts[usize::from(s)] += 1;
        }
        counts
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        self.symbols
            .iter()
            .map(|&s| alphabet.letter(usize::from(s)))
            .collect()
    }
}

/// Returns `S^n(seed)`, refusing levels above [`DEFAULT_LEVEL_CAP`] or
/// words longer than [`DEFAULT_MAX_WORD_LEN`].
pub fn iterate_substitution(sub: &Substitution, seed: char, n: usize) -> Result<Word> {
    iterate_substitution_capped(sub, seed, n, DEFAULT_LEVEL_CAP, DEFAULT_MAX_WORD_LEN)
}

pub fn iterate_substitution_capped(
    sub: &Substitution,
    seed: char,
    n: usize,
    level_cap: usize,
    max_len: usize,
) -> Result<Word> {
    let seed_idx = sub.alphabet.index_of(seed)?;
    if n > level_cap {
        return Err(Error::LevelCap { level: n, cap: level_cap });
    }
    let len = sub.iterate_length(seed_idx, n);
    if len > max_len as u64 {
        return Err(Error::WordTooLong {
            len: usize::try_from(len).unwrap_or(usize::MAX),
            cap: max_len,
        });
    }
    let mut current = vec![seed_idx as u8];
    for _ in 0..n {
        let mut next = Vec::with_capacity(current.len() * 2);
        for &s in &current {
            next.extend_from_slice(&sub.rules[usize::from(s)]);
        }
        current = next;
    }
    Ok(Word { symbols: current, level: Some(n) })
}

/// Empirical letter statistics of a finite word.
#[derive(Debug, Clone, PartialEq)]
pub struct WordStatistics {
    pub counts: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub length: usize,
}

impl WordStatistics {
    pub fn of_word(word: &Word, alphabet_len: usize) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::EmptyWord);
        }
        let counts = word.counts(alphabet_len);
        let total = word.len() as f64;
        let frequencies = counts.iter().map(|&c| c as f64 / total).collect();
        Ok(Self { counts, frequencies, length: word.len() })
    }

    /// Mean piece length `s = sum_a l_a freq(a)`, accumulated from integer
    /// counts so that `s * |w|` reproduces the total length.
    pub fn mean_length(&self, lengths: &[f64]) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .zip(lengths)
            .map(|(&c, &l)| c as f64 * l)
            .sum();
        total / self.length as f64
    }
}

pub fn letter_frequencies(sub: &Substitution, seed: char, n: usize) -> Result<WordStatistics> {
    let word = iterate_substitution(sub, seed, n)?;
    WordStatistics::of_word(&word, sub.alphabet.len())
}

/// Letter frequencies of the infinite fixed point from the Perron-Frobenius
/// eigenvector of the incidence matrix. Requires a primitive substitution.
pub fn perron_frequencies(sub: &Substitution) -> Result<Vec<f64>> {
    if !check_primitivity(sub) {
        return Err(Error::InvalidSubstitution(
            "Perron frequencies need a primitive substitution".into(),
        ));
    }
    let m = sub.incidence_matrix();
    let k = m.len();
    let mut v = vec![1.0 / k as f64; k];
    for _ in 0..10_000 {
        let mut next = vec![0.0; k];
        for (i, row) in m.iter().enumerate() {
            next[i] = row.iter().zip(&v).map(|(&a, &x)| a as f64 * x).sum();
        }
        let norm: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= norm);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < 1e-16 {
            break;
        }
    }
    Ok(v)
}

/// True iff some power `k <= |alphabet|^2` of the incidence matrix is
/// entrywise positive.
pub fn check_primitivity(sub: &Substitution) -> bool {
    let k = sub.alphabet.len();
    let base: Vec<Vec<bool>> = sub
        .incidence_matrix()
        .into_iter()
        .map(|row| row.into_iter().map(|x| x > 0).collect())
        .collect();
    let mut power = base.clone();
    for _ in 0..k * k {
        if power.iter().all(|row| row.iter().all(|&x| x)) {
            return true;
        }
        let mut next = vec![vec![false; k]; k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = (0..k).any(|l| power[i][l] && base[l][j]);
            }
        }
        power = next;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib(n: usize) -> String {
        let sub = Substitution::fibonacci();
        iterate_substitution(&sub, 'a', n).unwrap().render(sub.alphabet())
    }

    #[test]
    fn fibonacci_iterates() {
        assert_eq!(fib(0), "a");
        assert_eq!(fib(1), "ab");
        assert_eq!(fib(2), "aba");
        assert_eq!(fib(3), "abaab");
        assert_eq!(fib(10).len(), 144);
    }

    #[test]
    fn lengths_follow_fibonacci_numbers() {
        let sub = Substitution::fibonacci();
        // F_1 = F_2 = 1
        let mut fib = vec![0u64, 1, 1];
        while fib.len() < 45 {
            let k = fib.len();
            fib.push(fib[k - 1] + fib[k - 2]);
        }
        for n in 0..=40 {
            assert_eq!(sub.iterate_length(0, n), fib[n + 2], "level {n}");
        }
        assert_eq!(fib[33], 3_524_578);
        assert_eq!(sub.iterate_length(0, 32), DEFAULT_MAX_WORD_LEN as u64);
    }

    #[test]
    fn counts_without_building() {
        let sub = Substitution::fibonacci();
        for n in 0..15 {
            let w = iterate_substitution(&sub, 'a', n).unwrap();
            let counts: Vec<u64> = w.counts(2).into_iter().map(|c| c as u64).collect();
            assert_eq!(sub.iterate_counts(0, n), counts);
        }
    }

    #[test]
    fn concatenation_identity() {
        let sub = Substitution::fibonacci();
        for n in 1..=20 {
            let next = iterate_substitution(&sub, 'a', n + 1).unwrap();
            let cur = iterate_substitution(&sub, 'a', n).unwrap();
            let prev = iterate_substitution(&sub, 'a', n - 1).unwrap();
            assert_eq!(next.symbols(), cur.concat(&prev).symbols(), "n = {n}");
        }
    }

    #[test]
    fn square_prefix_property() {
        let sub = Substitution::fibonacci();
        let long = iterate_substitution(&sub, 'a', 16).unwrap();
        for n in 2..=8 {
            let w = iterate_substitution(&sub, 'a', n).unwrap();
            assert!(long.starts_with(&w.concat(&w)), "n = {n}");
        }
    }

    #[test]
    fn unknown_seed_is_rejected() {
        let sub = Substitution::fibonacci();
        assert_eq!(iterate_substitution(&sub, 'c', 3), Err(Error::UnknownLetter('c')));
    }

    #[test]
    fn level_cap_enforced() {
        let sub = Substitution::fibonacci();
        assert!(matches!(
            iterate_substitution(&sub, 'a', 33),
            Err(Error::LevelCap { level: 33, cap: 32 })
        ));
        assert!(matches!(
            iterate_substitution_capped(&sub, 'a', 10, 32, 100),
            Err(Error::WordTooLong { len: 144, cap: 100 })
        ));
    }

    #[test]
    fn frequencies() {
        let sub = Substitution::fibonacci();
        let s3 = letter_frequencies(&sub, 'a', 3).unwrap();
        assert_eq!(s3.frequencies, vec![0.6, 0.4]);
        let s1 = letter_frequencies(&sub, 'a', 1).unwrap();
        assert_eq!(s1.frequencies, vec![0.5, 0.5]);
        let s20 = letter_frequencies(&sub, 'a', 20).unwrap();
        assert!((s20.frequencies[0] - 0.618_033_988_7).abs() < 1e-4);
        for n in 1..25 {
            let s = letter_frequencies(&sub, 'a', n).unwrap();
            assert!((s.frequencies.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn perron_frequencies_are_golden() {
        let f = perron_frequencies(&Substitution::fibonacci()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((f[0] - 1.0 / phi).abs() < 1e-14);
        assert!((f[1] - 1.0 / (phi * phi)).abs() < 1e-14);
    }

    #[test]
    fn mean_length_weights_by_counts() {
        let sub = Substitution::fibonacci();
        let s = letter_frequencies(&sub, 'a', 3).unwrap();
        assert!((s.mean_length(&[2.0, 1.0]) - (3.0 * 2.0 + 2.0) / 5.0).abs() < 1e-15);
        assert_eq!(s.mean_length(&[1.0, 1.0]), 1.0);
    }

    #[test]
    fn primitivity() {
        assert!(check_primitivity(&Substitution::fibonacci()));
        let ab = Alphabet::new(['a', 'b']).unwrap();
        let identity = Substitution::new(ab.clone(), &[('a', "a"), ('b', "b")]).unwrap();
        assert!(!check_primitivity(&identity));
        let triangular = Substitution::new(ab.clone(), &[('a', "ab"), ('b', "b")]).unwrap();
        assert!(!check_primitivity(&triangular));
        // Thue-Morse
        let tm = Substitution::new(ab, &[('a', "ab"), ('b', "ba")]).unwrap();
        assert!(check_primitivity(&tm));
    }

    #[test]
    fn substitution_validation() {
        let ab = Alphabet::new(['a', 'b']).unwrap();
        assert!(Substitution::new(ab.clone(), &[('a', "ab")]).is_err());
        assert!(Substitution::new(ab.clone(), &[('a', "ab"), ('b', "")]).is_err());
        assert!(Substitution::new(ab.clone(), &[('a', "ac"), ('b', "a")]).is_err());
        assert!(Alphabet::new(['a', 'a']).is_err());
        assert!(Alphabet::new([]).is_err());
        let fib = Substitution::new(ab, &[('b', "a"), ('a', "ab")]).unwrap();
        assert!(fib.is_fibonacci());
        assert_eq!(fib, Substitution::fibonacci());
        let ba = Alphabet::new(['b', 'a']).unwrap();
        let swapped = Substitution::new(ba, &[('a', "ab"), ('b', "a")]).unwrap();
        assert_eq!(swapped.fibonacci_roles(), Some((1, 0)));
    }
}
