use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::epsilon::{EpsilonTable, Letter};
use super::word::{reduce_with, TableSign};
use crate::error::{Error, Result};

/// Finite linear combination of reduced words `x_B`.
///
/// Keys are strictly increasing letter lists; zero coefficients are never
/// stored. All elements that interact must share a compatible table.
#[derive(Debug, Clone)]
pub struct SpinElement {
    table: EpsilonTable,
    terms: BTreeMap<Vec<Letter>, Complex64>,
}

impl PartialEq for SpinElement {
    fn eq(&self, other: &Self) -> bool {
        self.table.compatible(&other.table) && self.terms == other.terms
    }
}

fn is_canonical(b: &[Letter]) -> bool {
    b.windows(2).all(|w| w[0] < w[1])
}

/// Sign picked up when reversing a reduced word: `prod_{a<b in B} eps(a, b)`.
fn reversal_sign(b: &[Letter], table: &EpsilonTable) -> i8 {
    let mut s = 1i8;
    for (n, &x) in b.iter().enumerate() {
        for &y in &b[n + 1..] {
            s *= table.sign(x, y);
        }
    }
    s
}

impl SpinElement {
    pub fn zero(table: &EpsilonTable) -> Self {
        SpinElement {
            table: table.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(table: &EpsilonTable) -> Self {
        Self::scalar(table, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(table: &EpsilonTable, c: Complex64) -> Self {
        let mut e = Self::zero(table);
        e.add_term(Vec::new(), c);
        e
    }

    /// The (reduced) product of the given letters.
    pub fn word(table: &EpsilonTable, letters: &[Letter]) -> Result<Self> {
        Self::check_letters(table, letters)?;
        let mut sink = TableSign { table, sign: 1 };
        let reduced = reduce_with(letters, &mut sink);
        let mut e = Self::zero(table);
        e.add_term(reduced, Complex64::new(sink.sign as f64, 0.0));
        Ok(e)
    }

    /// The generator `x_i(k)`, 1-based.
    pub fn generator(table: &EpsilonTable, i: usize, k: usize) -> Result<Self> {
        if i == 0 || k == 0 {
            return Err(Error::InvalidParameter("labels are 1-based".into()));
        }
        Self::word(table, &[Letter::one_based(i, k)])
    }

    /// Builds an element from reduced words. Keys must be canonical.
    pub fn from_terms(
        table: &EpsilonTable,
        terms: impl IntoIterator<Item = (Vec<Letter>, Complex64)>,
    ) -> Result<Self> {
        let mut e = Self::zero(table);
        for (b, c) in terms {
            if !is_canonical(&b) {
                return Err(Error::InvalidParameter(format!(
                    "word {b:?} is not in canonical reduced form"
                )));
            }
            Self::check_letters(table, &b)?;
            e.add_term(b, c);
        }
        Ok(e)
    }

    /// Gaussian random element: each reduced word over `letters` of length at
    /// most `max_len` gets an independent real N(0, 1) coefficient.
    pub fn random_gaussian<R: Rng + ?Sized>(
        table: &EpsilonTable,
        letters: &[Letter],
        max_len: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sorted = letters.to_vec();
        sorted.sort();
        sorted.dedup();
        Self::check_letters(table, &sorted)?;
        let mut e = Self::zero(table);
        for b in subsets_up_to(&sorted, max_len) {
            let c: f64 = StandardNormal.sample(rng);
            e.add_term(b, Complex64::new(c, 0.0));
        }
        Ok(e)
    }

    /// Random element with `terms` words (drawn with replacement) and small
    /// integer coefficients, so that algebraic identities hold exactly.
    pub fn random_integer<R: Rng + ?Sized>(
        table: &EpsilonTable,
        letters: &[Letter],
        max_len: usize,
        terms: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sorted = letters.to_vec();
        sorted.sort();
        sorted.dedup();
        Self::check_letters(table, &sorted)?;
        let mut e = Self::zero(table);
        for _ in 0..terms {
            let len = rng.random_range(0..=max_len.min(sorted.len()));
            let mut pick = rand::seq::index::sample(rng, sorted.len(), len).into_vec();
            pick.sort_unstable();
            let b: Vec<Letter> = pick.into_iter().map(|p| sorted[p]).collect();
            let re = rng.random_range(-3i32..=3) as f64;
            let im = rng.random_range(-1i32..=1) as f64;
            e.add_term(b, Complex64::new(re, im));
        }
        Ok(e)
    }

    fn check_letters(table: &EpsilonTable, letters: &[Letter]) -> Result<()> {
        match letters.iter().find(|l| !table.contains(**l)) {
            Some(l) => Err(Error::InvalidParameter(format!(
                "letter {l} is outside the {} x {} generator set",
                table.rows(),
                table.m()
            ))),
            None => Ok(()),
        }
    }

    fn add_term(&mut self, b: Vec<Letter>, c: Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        if c == zero {
            return;
        }
        match self.terms.entry(b) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == zero {
                    o.remove();
                }
            }
        }
    }

    pub fn table(&self) -> &EpsilonTable {
        &self.table
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Letter], Complex64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn coefficient(&self, b: &[Letter]) -> Complex64 {
        self.terms.get(b).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Normalized trace: the identity coefficient.
    pub fn trace(&self) -> Complex64 {
        self.coefficient(&[])
    }

    /// All letters that occur in some word, sorted.
    pub fn support(&self) -> Vec<Letter> {
        let mut v: Vec<Letter> = self.terms.keys().flatten().copied().collect();
        v.sort();
        v.dedup();
        v
    }

    fn require_compatible(&self, other: &SpinElement) -> Result<()> {
        if self.table.compatible(&other.table) {
            Ok(())
        } else {
            Err(Error::TableMismatch)
        }
    }

    pub fn add(&self, other: &SpinElement) -> Result<Self> {
        self.require_compatible(other)?;
        let mut e = self.clone();
        for (b, c) in &other.terms {
            e.add_term(b.clone(), *c);
        }
        Ok(e)
    }

    pub fn sub(&self, other: &SpinElement) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut e = Self::zero(&self.table);
        for (b, v) in &self.terms {
            e.add_term(b.clone(), v * c);
        }
        e
    }

    pub fn mul(&self, other: &SpinElement) -> Result<Self> {
        self.require_compatible(other)?;
        let mut e = Self::zero(&self.table);
        let mut buf = Vec::new();
        for (b, u) in &self.terms {
            for (c, v) in &other.terms {
                buf.clear();
                buf.extend_from_slice(b);
                buf.extend_from_slice(c);
                let mut sink = TableSign {
                    table: &self.table,
                    sign: 1,
                };
                let reduced = reduce_with(&buf, &mut sink);
                e.add_term(reduced, u * v * sink.sign as f64);
            }
        }
        Ok(e)
    }

    pub fn adjoint(&self) -> Self {
        let mut e = Self::zero(&self.table);
        for (b, c) in &self.terms {
            let s = reversal_sign(b, &self.table) as f64;
            e.add_term(b.clone(), c.conj() * s);
        }
        e
    }

    /// Applies `c_B -> w(|B|) c_B`.
    pub fn map_by_length(&self, w: impl Fn(usize) -> f64) -> Self {
        let mut e = Self::zero(&self.table);
        for (b, c) in &self.terms {
            e.add_term(b.clone(), c * w(b.len()));
        }
        e
    }

    /// Same element viewed in the doubled algebra.
    pub fn embed_doubled(&self) -> Self {
        SpinElement {
            table: self.table.doubled(),
            terms: self.terms.clone(),
        }
    }

    /// Largest coefficient gap to `other` (words missing on one side count
    /// as zero coefficients).
    pub fn max_abs_diff(&self, other: &SpinElement) -> Result<f64> {
        self.require_compatible(other)?;
        Ok(self.sub(other)?.terms.values().map(|c| c.norm()).fold(0.0, f64::max))
    }
}

impl fmt::Display for SpinElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (b, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})")?;
            for l in b {
                write!(f, " {l}")?;
            }
        }
        Ok(())
    }
}

/// All strictly increasing sublists of `letters` with length `<= max_len`,
/// by length then lexicographically.
pub fn subsets_up_to(letters: &[Letter], max_len: usize) -> Vec<Vec<Letter>> {
    fn rec(letters: &[Letter], start: usize, len: usize, cur: &mut Vec<Letter>, out: &mut Vec<Vec<Letter>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for p in start..letters.len() {
            cur.push(letters[p]);
            rec(letters, p + 1, len, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for len in 0..=max_len.min(letters.len()) {
        rec(letters, 0, len, &mut Vec::new(), &mut out);
    }
    out
}

/// `delta(x_{b_1} ... x_{b_n}) = sum_a x_{b_1} ... x'_{b_a} ... x_{b_n}` where
/// `x'` shifts the row by the number of rows of `f`'s algebra. The result
/// lives over the doubled table.
pub fn derivation(f: &SpinElement) -> SpinElement {
    let shift = f.table.rows();
    let doubled = f.table.doubled();
    let mut out = SpinElement::zero(&doubled);
    let mut buf = Vec::new();
    for (b, c) in &f.terms {
        for a in 0..b.len() {
            buf.clear();
            buf.extend_from_slice(b);
            buf[a] = buf[a].shifted(shift);
            let mut sink = TableSign {
                table: &doubled,
                sign: 1,
            };
            let reduced = reduce_with(&buf, &mut sink);
            out.add_term(reduced, c * sink.sign as f64);
        }
    }
    out
}

/// Conditional expectation from the doubled algebra onto the lower half:
/// keeps reduced words without upper letters.
pub fn conditional_expectation(f: &SpinElement) -> Result<SpinElement> {
    let lower = f.table.halved()?;
    let cut = lower.rows();
    let mut out = SpinElement::zero(&lower);
    for (b, c) in &f.terms {
        if b.iter().all(|l| l.row() < cut) {
            out.add_term(b.clone(), *c);
        }
    }
    Ok(out)
}

/// Whether every word of `g` has exactly one letter in the upper half of a
/// doubled algebra.
pub fn in_derivation_span(g: &SpinElement) -> bool {
    if g.table.copies() % 2 != 0 {
        return false;
    }
    let cut = g.table.rows() / 2;
    g.terms
        .keys()
        .all(|b| b.iter().filter(|l| l.row() >= cut).count() == 1)
}

/// Number operator `A x_B = |B| x_B`.
pub fn number_operator_spin(f: &SpinElement) -> SpinElement {
    f.map_by_length(|d| d as f64)
}

/// Ornstein-Uhlenbeck semigroup `T_t x_B = exp(-t|B|) x_B`.
pub fn ou_spin(f: &SpinElement, t: f64) -> Result<SpinElement> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("semigroup time must be >= 0, got {t}")));
    }
    Ok(f.map_by_length(|d| (-t * d as f64).exp()))
}

/// `A^{1/2}`, acting diagonally on word lengths.
pub fn sqrt_number_operator(f: &SpinElement) -> SpinElement {
    f.map_by_length(|d| (d as f64).sqrt())
}

/// Gradient form `1/2 (A(f*) g + f* A(g) - A(f* g))`.
pub fn gradient_form(f: &SpinElement, g: &SpinElement) -> Result<SpinElement> {
    let fs = f.adjoint();
    let a = number_operator_spin(&fs).mul(g)?;
    let b = fs.mul(&number_operator_spin(g))?;
    let c = number_operator_spin(&fs.mul(g)?);
    Ok(a.add(&b)?.sub(&c)?.scale(Complex64::new(0.5, 0.0)))
}

/// Gradient form through the derivation: `E(delta(f)* delta(g))`.
pub fn gradient_form_via_derivation(f: &SpinElement, g: &SpinElement) -> Result<SpinElement> {
    let df = derivation(f);
    let dg = derivation(g);
    conditional_expectation(&df.adjoint().mul(&dg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::StructureMatrix;
    use crate::spinmodel::epsilon::Scheme;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(seed: u64) -> EpsilonTable {
        let q = StructureMatrix::from_rows(&[vec![0.2, -0.4], vec![-0.4, 0.6]]).unwrap();
        EpsilonTable::sample(&q, 3, seed, Scheme::Independent).unwrap()
    }

    fn letters(t: &EpsilonTable) -> Vec<Letter> {
        (0..t.rows())
            .flat_map(|i| (0..t.m()).map(move |k| Letter::new(i, k)))
            .collect()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn derivation_examples() {
        let t = table(1);
        let x = SpinElement::generator(&t, 1, 1).unwrap();
        let dx = derivation(&x);
        assert_eq!(dx, SpinElement::generator(&t.doubled(), 3, 1).unwrap());
        assert!(derivation(&SpinElement::scalar(&t, c(2.5))).is_zero());
    }

    #[test]
    fn leibniz_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..30 {
            let t = table(seed);
            let ls = letters(&t);
            let xi = SpinElement::random_integer(&t, &ls, 4, 4, &mut rng).unwrap();
            let eta = SpinElement::random_integer(&t, &ls, 4, 4, &mut rng).unwrap();
            let lhs = derivation(&xi.mul(&eta).unwrap());
            let rhs = derivation(&xi)
                .mul(&eta.embed_doubled())
                .unwrap()
                .add(&xi.embed_doubled().mul(&derivation(&eta)).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn conditional_expectation_examples() {
        let t = table(2);
        let d = t.doubled();
        let x11 = SpinElement::generator(&d, 1, 1).unwrap();
        assert_eq!(conditional_expectation(&x11).unwrap(), SpinElement::generator(&t, 1, 1).unwrap());
        let upper = SpinElement::generator(&d, 3, 1).unwrap();
        assert!(conditional_expectation(&upper).unwrap().is_zero());
        let w = SpinElement::word(
            &d,
            &[Letter::one_based(3, 1), Letter::one_based(3, 1), Letter::one_based(2, 3)],
        )
        .unwrap();
        assert_eq!(conditional_expectation(&w).unwrap(), SpinElement::generator(&t, 2, 3).unwrap());
    }

    #[test]
    fn derivation_image_has_one_upper_letter() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = table(5);
        let ls = letters(&t);
        for _ in 0..20 {
            let f = SpinElement::random_integer(&t, &ls, 5, 6, &mut rng).unwrap();
            let df = derivation(&f);
            assert!(in_derivation_span(&df));
            assert!(conditional_expectation(&df).unwrap().is_zero());
        }
    }

    #[test]
    fn gradient_form_on_words() {
        let t = table(3);
        let b = SpinElement::word(&t, &[Letter::new(0, 0), Letter::new(0, 2), Letter::new(1, 1)]).unwrap();
        let cc = SpinElement::word(&t, &[Letter::new(0, 2), Letter::new(1, 1), Letter::new(1, 2)]).unwrap();
        let want = b.adjoint().mul(&cc).unwrap().scale(c(2.0));
        assert_eq!(gradient_form(&b, &cc).unwrap(), want);
        let one = SpinElement::one(&t);
        assert!(gradient_form(&one, &b).unwrap().is_zero());
    }

    #[test]
    fn gradient_form_two_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..40 {
            let t = table(seed);
            let ls = letters(&t);
            let f = SpinElement::random_integer(&t, &ls, 5, 10, &mut rng).unwrap();
            let g = SpinElement::random_integer(&t, &ls, 5, 10, &mut rng).unwrap();
            assert_eq!(gradient_form(&f, &g).unwrap(), gradient_form_via_derivation(&f, &g).unwrap());
        }
    }

    #[test]
    fn adjoint_is_antimultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = table(9);
        let ls = letters(&t);
        for _ in 0..20 {
            let f = SpinElement::random_integer(&t, &ls, 4, 5, &mut rng).unwrap();
            let g = SpinElement::random_integer(&t, &ls, 4, 5, &mut rng).unwrap();
            assert_eq!(f.mul(&g).unwrap().adjoint(), g.adjoint().mul(&f.adjoint()).unwrap());
            assert_eq!(f.adjoint().adjoint(), f);
        }
    }

    #[test]
    fn semigroup_examples() {
        let t = table(0);
        let one = SpinElement::one(&t);
        assert_eq!(ou_spin(&one, 0.7).unwrap(), one);
        let b = SpinElement::word(&t, &[Letter::new(0, 0), Letter::new(0, 1), Letter::new(1, 0)]).unwrap();
        let tb = ou_spin(&b, 0.3).unwrap();
        let want = b.scale(c((-0.9f64).exp()));
        assert!(tb.max_abs_diff(&want).unwrap() < 1e-15);
        assert!(ou_spin(&b, -1.0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = SpinElement::random_gaussian(&t, &letters(&t), 4, &mut rng).unwrap();
        // one-sided second-order difference, since T_t needs t >= 0
        let h = 1e-4;
        let fd = f
            .scale(c(3.0))
            .sub(&ou_spin(&f, h).unwrap().scale(c(4.0)))
            .unwrap()
            .add(&ou_spin(&f, 2.0 * h).unwrap())
            .unwrap()
            .scale(c(0.5 / h));
        assert!(fd.max_abs_diff(&number_operator_spin(&f)).unwrap() < 1e-6);
    }

    #[test]
    fn mismatched_tables_are_rejected() {
        let a = SpinElement::generator(&table(1), 1, 1).unwrap();
        let b = SpinElement::generator(&table(2), 1, 1).unwrap();
        assert_eq!(a.mul(&b), Err(Error::TableMismatch));
    }
}
