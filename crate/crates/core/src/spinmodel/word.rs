use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use super::epsilon::{EpsilonTable, Letter, Scheme};
use crate::error::{Error, Result};
use crate::moments::StructureMatrix;

/// An unreduced product of generators, read left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SpinWord(pub Vec<Letter>);

impl SpinWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        SpinWord(letters)
    }

    /// Builds `x_{i_1}(k_1) ... x_{i_d}(k_d)` from 1-based labels.
    pub fn from_labels(i: &[usize], k: &[usize]) -> Result<Self> {
        if i.len() != k.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} row labels vs {} column labels",
                i.len(),
                k.len()
            )));
        }
        if i.iter().chain(k).any(|&v| v == 0) {
            return Err(Error::InvalidParameter("labels are 1-based".into()));
        }
        Ok(SpinWord(i.iter().zip(k).map(|(&a, &b)| Letter::one_based(a, b)).collect()))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The word read backwards, i.e. the adjoint product.
    pub fn reversed(&self) -> Self {
        SpinWord(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &SpinWord) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        SpinWord(v)
    }
}

impl fmt::Display for SpinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (n, l) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Receives one callback per adjacent interchange `... b a ... -> ... a b ...`
/// (with `b > a`) performed during reduction.
pub trait SwapSink {
    fn swap(&mut self, left: Letter, right: Letter);
}

/// Accumulates the numeric sign from a concrete table.
pub struct TableSign<'a> {
    pub table: &'a EpsilonTable,
    pub sign: i8,
}

impl SwapSink for TableSign<'_> {
    fn swap(&mut self, left: Letter, right: Letter) {
        self.sign *= self.table.sign(left, right);
    }
}

/// Folds every letter into canonical order by insertion: each incoming letter
/// is moved left past larger letters, and cancels against an equal neighbour.
pub fn reduce_with<S: SwapSink>(word: &[Letter], sink: &mut S) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(word.len());
    for &x in word {
        let mut pos = out.len();
        while pos > 0 && out[pos - 1] > x {
            sink.swap(out[pos - 1], x);
            pos -= 1;
        }
        if pos > 0 && out[pos - 1] == x {
            out.remove(pos - 1);
        } else {
            out.insert(pos, x);
        }
    }
    out
}

/// Canonical reduction: `(sign, sorted distinct letters)`.
pub fn reduce(word: &SpinWord, eps: &EpsilonTable) -> (i8, Vec<Letter>) {
    let mut sink = TableSign { table: eps, sign: 1 };
    let reduced = reduce_with(&word.0, &mut sink);
    (sink.sign, reduced)
}

/// Reduction along a random bubble schedule: repeatedly picks a random
/// adjacent position that is out of order or equal and resolves it. Used to
/// test that the result does not depend on the schedule.
pub fn reduce_random_schedule<R: Rng + ?Sized>(
    word: &SpinWord,
    eps: &EpsilonTable,
    rng: &mut R,
) -> (i8, Vec<Letter>) {
    let mut w = word.0.clone();
    let mut sign = 1i8;
    let mut moves = Vec::new();
    loop {
        moves.clear();
        moves.extend((0..w.len().saturating_sub(1)).filter(|&p| w[p] >= w[p + 1]));
        if moves.is_empty() {
            return (sign, w);
        }
        let p = moves[rng.random_range(0..moves.len())];
        if w[p] == w[p + 1] {
            w.drain(p..p + 2);
        } else {
            sign *= eps.sign(w[p], w[p + 1]);
            w.swap(p, p + 1);
        }
    }
}

/// Normalized trace of a word: the sign if it reduces to the identity.
pub fn trace(word: &SpinWord, eps: &EpsilonTable) -> f64 {
    let (s, rest) = reduce(word, eps);
    if rest.is_empty() {
        s as f64
    } else {
        0.0
    }
}

/// Same as [`trace`] on a raw letter slice; avoids allocating a `SpinWord`.
pub(crate) fn trace_letters(word: &[Letter], eps: &EpsilonTable) -> i8 {
    let mut sink = TableSign { table: eps, sign: 1 };
    if reduce_with(word, &mut sink).is_empty() {
        sink.sign
    } else {
        0
    }
}

/// Letter identification used for symbolic signs: `Independent` keeps rows,
/// `TensorRepeated` folds rows modulo the base row count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolRule {
    pub base_rows: Option<usize>,
}

impl SymbolRule {
    pub fn for_scheme(scheme: Scheme, base_rows: usize) -> Self {
        match scheme {
            Scheme::Independent => SymbolRule { base_rows: None },
            Scheme::TensorRepeated { .. } => SymbolRule {
                base_rows: Some(base_rows),
            },
        }
    }

    fn fold(&self, a: Letter) -> Letter {
        match self.base_rows {
            None => a,
            Some(n) => Letter::new(a.row() % n, a.col()),
        }
    }
}

/// Collects the formal sign symbols of a reduction, modulo squares.
struct SymbolSink {
    rule: SymbolRule,
    fixed: i8,
    odd: BTreeSet<(Letter, Letter)>,
}

impl SwapSink for SymbolSink {
    fn swap(&mut self, left: Letter, right: Letter) {
        let (a, b) = (self.rule.fold(left), self.rule.fold(right));
        if a == b {
            // a folded diagonal entry is -1 deterministically
            self.fixed = -self.fixed;
            return;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if !self.odd.remove(&key) {
            self.odd.insert(key);
        }
    }
}

/// Result of reducing a word with formal signs.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicTrace {
    /// The word did not reduce to the identity, so every trace vanishes.
    pub vanishes: bool,
    /// Deterministic part of the sign.
    pub sign: i8,
    /// Symbols occurring an odd number of times (distinct, canonical pairs).
    pub symbols: Vec<(Letter, Letter)>,
}

impl SymbolicTrace {
    /// Expected trace given the row couplings (0-based rows of `q`).
    pub fn expectation(&self, q: &StructureMatrix) -> f64 {
        if self.vanishes {
            return 0.0;
        }
        self.symbols
            .iter()
            .fold(self.sign as f64, |acc, (a, b)| acc * q.get(a.row(), b.row()))
    }

    /// Evaluates the symbols against a concrete table.
    pub fn evaluate(&self, eps: &EpsilonTable) -> f64 {
        if self.vanishes {
            return 0.0;
        }
        self.symbols
            .iter()
            .fold(self.sign as f64, |acc, (a, b)| acc * eps.sign(*a, *b) as f64)
    }
}

pub fn symbolic_trace(word: &[Letter], rule: SymbolRule) -> SymbolicTrace {
    let mut sink = SymbolSink {
        rule,
        fixed: 1,
        odd: BTreeSet::new(),
    };
    let rest = reduce_with(word, &mut sink);
    SymbolicTrace {
        vanishes: !rest.is_empty(),
        sign: sink.fixed,
        symbols: sink.odd.into_iter().collect(),
    }
}

/// Expectation of the trace over the random signs.
///
/// Distinct symbols are independent with mean `q(i, j)`, so the expectation
/// is the product over symbols that survive an odd number of times. Under
/// tensor repetition `q` is the base matrix and rows are folded first.
pub fn expected_trace(word: &SpinWord, q: &StructureMatrix, scheme: Scheme) -> Result<f64> {
    let rows = q.dim() * scheme.copies();
    if let Some(bad) = word.0.iter().find(|l| l.row() >= rows) {
        return Err(Error::LabelOutOfRange {
            label: bad.row() + 1,
            n: rows,
        });
    }
    Ok(symbolic_trace(&word.0, SymbolRule::for_scheme(scheme, q.dim())).expectation(q))
}
