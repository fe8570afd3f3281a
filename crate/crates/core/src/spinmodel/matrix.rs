use nalgebra::DMatrix;
use num_complex::Complex64;

use super::element::SpinElement;
use super::epsilon::{EpsilonTable, Letter};
use crate::error::{Error, Result};

/// Default cap on the number of represented generators (matrices are 2^G).
pub const DEFAULT_MAX_GENERATORS: usize = 12;

/// Tolerance for the Hermitian check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Signed tensor product of Pauli X and Z factors: `sign * prod_l X^{x_l} Z^{z_l}`
/// with site `l` at bit `l`. Within one site X is applied after Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliMonomial {
    pub x: u64,
    pub z: u64,
    pub sign: i8,
}

impl PauliMonomial {
    pub const IDENTITY: PauliMonomial = PauliMonomial { x: 0, z: 0, sign: 1 };

    /// `Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}` site by site.
    pub fn mul(&self, other: &PauliMonomial) -> PauliMonomial {
        let flip = (self.z & other.x).count_ones() % 2 == 1;
        let mut sign = self.sign * other.sign;
        if flip {
            sign = -sign;
        }
        PauliMonomial {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            sign,
        }
    }

    /// Image of basis state `b`: `(target, sign)`.
    pub fn apply(&self, b: u64) -> (u64, i8) {
        let s = if (self.z & b).count_ones() % 2 == 1 { -self.sign } else { self.sign };
        (b ^ self.x, s)
    }

    pub fn is_identity_up_to_sign(&self) -> bool {
        self.x == 0 && self.z == 0
    }
}

/// Complex matrix that is Hermitian to [`HERMITIAN_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!("{} x {} matrix", m.nrows(), m.ncols())));
        }
        let gap = (&m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if gap > HERMITIAN_TOL {
            return Err(Error::InvalidParameter(format!("matrix is not Hermitian (gap {gap:e})")));
        }
        Ok(HermitianMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// `tr(M) / dim`.
pub fn normalized_trace(m: &DMatrix<Complex64>) -> Complex64 {
    m.trace() / m.nrows() as f64
}

/// Z-chain representation of a set of letters: generator `j` (in sorted
/// order) acts as `Z^{eta(l, j)}` on every earlier site `l`, `X` on site `j`
/// and identity afterwards, with `eta = (1 - eps) / 2`.
#[derive(Debug, Clone)]
pub struct Representation {
    table: EpsilonTable,
    letters: Vec<Letter>,
    generators: Vec<PauliMonomial>,
}

impl Representation {
    pub fn new(table: &EpsilonTable, letters: &[Letter]) -> Result<Self> {
        Self::with_cap(table, letters, DEFAULT_MAX_GENERATORS)
    }

    pub fn with_cap(table: &EpsilonTable, letters: &[Letter], cap: usize) -> Result<Self> {
        let mut letters = letters.to_vec();
        letters.sort();
        letters.dedup();
        if letters.len() > cap.min(63) {
            return Err(Error::CapExceeded {
                what: "represented generators",
                requested: letters.len(),
                cap: cap.min(63),
            });
        }
        if let Some(l) = letters.iter().find(|l| !table.contains(**l)) {
            return Err(Error::InvalidParameter(format!("letter {l} is outside the sign table")));
        }
        let generators = (0..letters.len())
            .map(|j| {
                let z = (0..j)
                    .filter(|&l| table.sign(letters[l], letters[j]) == -1)
                    .fold(0u64, |acc, l| acc | 1 << l);
                PauliMonomial { x: 1 << j, z, sign: 1 }
            })
            .collect();
        Ok(Representation {
            table: table.clone(),
            letters,
            generators,
        })
    }

    /// Representation on every letter of the table.
    pub fn for_table(table: &EpsilonTable) -> Result<Self> {
        let letters: Vec<Letter> = (0..table.rows())
            .flat_map(|i| (0..table.m()).map(move |k| Letter::new(i, k)))
            .collect();
        Self::new(table, &letters)
    }

    /// Representation on the letters used by the given elements.
    pub fn for_elements(elements: &[&SpinElement]) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidParameter("no elements to represent".into()))?;
        let mut letters = Vec::new();
        for e in elements {
            if !e.table().compatible(first.table()) {
                return Err(Error::TableMismatch);
            }
            letters.extend(e.support());
        }
        Self::new(first.table(), &letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn dim(&self) -> usize {
        1 << self.letters.len()
    }

    pub fn generator_monomials(&self) -> &[PauliMonomial] {
        &self.generators
    }

    fn site(&self, l: Letter) -> Result<usize> {
        self.letters
            .binary_search(&l)
            .map_err(|_| Error::InvalidParameter(format!("letter {l} is not represented")))
    }

    /// Monomial of the ordered product of the given letters.
    pub fn word_monomial(&self, word: &[Letter]) -> Result<PauliMonomial> {
        word.iter().try_fold(PauliMonomial::IDENTITY, |acc, &l| {
            Ok(acc.mul(&self.generators[self.site(l)?]))
        })
    }

    pub fn monomial_matrix(&self, p: &PauliMonomial) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for b in 0..n as u64 {
            let (t, s) = p.apply(b);
            m[(t as usize, b as usize)] = Complex64::new(s as f64, 0.0);
        }
        m
    }

    pub fn generator_matrices(&self) -> Result<Vec<HermitianMatrix>> {
        self.generators
            .iter()
            .map(|p| HermitianMatrix::new(self.monomial_matrix(p)))
            .collect()
    }

    /// Matrix of an element whose letters are all represented.
    pub fn matrix(&self, f: &SpinElement) -> Result<DMatrix<Complex64>> {
        if !f.table().compatible(&self.table) {
            return Err(Error::TableMismatch);
        }
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (b, c) in f.terms() {
            let p = self.word_monomial(b)?;
            for col in 0..n as u64 {
                let (row, s) = p.apply(col);
                m[(row as usize, col as usize)] += c * s as f64;
            }
        }
        Ok(m)
    }
}

/// Generator matrices for the first `g` letters of `table` in canonical order.
pub fn matrix_representation(table: &EpsilonTable, g: usize) -> Result<Vec<HermitianMatrix>> {
    let letters: Vec<Letter> = (0..table.rows())
        .flat_map(|i| (0..table.m()).map(move |k| Letter::new(i, k)))
        .take(g)
        .collect();
    if letters.len() < g {
        return Err(Error::InvalidParameter(format!(
            "table has only {} generators, {g} requested",
            letters.len()
        )));
    }
    Representation::new(table, &letters)?.generator_matrices()
}
