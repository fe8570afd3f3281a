//! Truncated mixed q-Fock space.
//!
//! The basis is the set of special Wick words `w(i)` with `|i| <= D`, ordered
//! by degree and lexicographically inside a degree. All operators are stored
//! as dense per-degree blocks acting on coordinates in that (non-orthonormal)
//! basis; inner products go through the Gram blocks.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::{wick_decompose, wick_inner, StructureMatrix, WickWord};
use crate::combinatorics::Caps;

/// Default cap on the total number of basis words.
pub const DEFAULT_WORD_CAP: usize = 20_000;

/// Residual tolerance for operator identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Eigenvalues with absolute value below this are treated as Gram kernel.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n: usize,
    max_degree: usize,
    offsets: Vec<usize>,
}

impl FockBasis {
    pub fn new(n: usize, max_degree: usize) -> Result<Self> {
        Self::with_cap(n, max_degree, DEFAULT_WORD_CAP)
    }

    pub fn with_cap(n: usize, max_degree: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Fock basis needs N >= 1".into()));
        }
        let mut offsets = Vec::with_capacity(max_degree + 2);
        let mut total: usize = 0;
        let mut layer: usize = 1;
        for _ in 0..=max_degree {
            offsets.push(total);
            total = total.checked_add(layer).filter(|&t| t <= cap).ok_or(Error::CapExceeded {
                what: "Fock basis words",
                requested: total.saturating_add(layer),
                cap,
            })?;
            layer = layer.saturating_mul(n);
        }
        offsets.push(total);
        Ok(FockBasis {
            n,
            max_degree,
            offsets,
        })
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.offsets[self.max_degree + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn degree_len(&self, s: usize) -> usize {
        self.offsets[s + 1] - self.offsets[s]
    }

    pub fn degree_offset(&self, s: usize) -> usize {
        self.offsets[s]
    }

    /// Position of a word inside its degree block.
    pub fn local_index(&self, labels: &[usize]) -> usize {
        labels.iter().fold(0, |acc, &l| acc * self.n + (l - 1))
    }

    /// Global position of a word.
    pub fn index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() > self.max_degree {
            return Err(Error::InvalidParameter(format!(
                "word of length {} beyond degree cutoff {}",
                labels.len(),
                self.max_degree
            )));
        }
        for &l in labels {
            if l == 0 || l > self.n {
                return Err(Error::LabelOutOfRange { label: l, n: self.n });
            }
        }
        Ok(self.offsets[labels.len()] + self.local_index(labels))
    }

    /// Word at local position `idx` of degree `s`.
    pub fn word(&self, s: usize, mut idx: usize) -> WickWord {
        let mut labels = vec![0; s];
        for slot in labels.iter_mut().rev() {
            *slot = idx % self.n + 1;
            idx /= self.n;
        }
        WickWord(labels)
    }

    pub fn words(&self) -> Vec<WickWord> {
        (0..=self.max_degree)
            .flat_map(|s| (0..self.degree_len(s)).map(move |i| self.word(s, i)))
            .collect()
    }

    pub fn vacuum(&self) -> DVector<f64> {
        self.basis_vector(&[]).expect("vacuum is always in the basis")
    }

    pub fn basis_vector(&self, labels: &[usize]) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(self.len());
        v[self.index(labels)?] = 1.0;
        Ok(v)
    }

    pub fn degree_slice<'a>(&self, v: &'a DVector<f64>, s: usize) -> nalgebra::DVectorView<'a, f64> {
        v.rows(self.offsets[s], self.degree_len(s))
    }
}

/// Per-degree Gram blocks `G_s[a][b] = ⟨w(a), w(b)⟩`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub blocks: Vec<DMatrix<f64>>,
    pub min_eigenvalues: Vec<f64>,
    /// Number of eigenvalues with `|λ| <= KERNEL_TOL`, per degree.
    pub kernel_dims: Vec<usize>,
    eigen: Vec<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl GramMatrix {
    pub fn block(&self, s: usize) -> &DMatrix<f64> {
        &self.blocks[s]
    }

    /// Moore–Penrose pseudo-inverse of `G_s`, clipping the kernel.
    pub fn pseudo_inverse(&self, s: usize) -> DMatrix<f64> {
        let e = &self.eigen[s];
        let inv = e
            .eigenvalues
            .map(|l| if l.abs() <= KERNEL_TOL { 0.0 } else { 1.0 / l });
        &e.eigenvectors * DMatrix::from_diagonal(&inv) * e.eigenvectors.transpose()
    }

    /// `⟨u, v⟩_G` for two full coordinate vectors.
    pub fn inner(&self, basis: &FockBasis, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (0..=basis.max_degree())
            .map(|s| {
                let us = basis.degree_slice(u, s);
                let vs = basis.degree_slice(v, s);
                (us.transpose() * &self.blocks[s] * vs)[(0, 0)]
            })
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let tagged: Vec<(String, &DMatrix<f64>)> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(s, b)| (format!("gram degree={s}"), b))
            .collect();
        write_blocks_csv(out, &tagged)
    }
}

/// Builds the Gram blocks from [`wick_inner`]. Fails if a block has an
/// eigenvalue below `-KERNEL_TOL` while `max|q_ij| < 1`.
pub fn gram(q: &StructureMatrix, basis: &FockBasis) -> Result<GramMatrix> {
    if q.dim() != basis.generators() {
        return Err(Error::DimensionMismatch(format!(
            "structure matrix N = {} vs basis N = {}",
            q.dim(),
            basis.generators()
        )));
    }
    let blocks: Vec<DMatrix<f64>> = (0..=basis.max_degree())
        .into_par_iter()
        .map(|s| gram_block(q, basis, s))
        .collect::<Result<_>>()?;
    let eigen: Vec<_> = blocks
        .par_iter()
        .map(|b| SymmetricEigen::new(b.clone()))
        .collect();
    let min_eigenvalues: Vec<f64> = eigen.iter().map(|e| e.eigenvalues.min()).collect();
    let kernel_dims = eigen
        .iter()
        .map(|e| e.eigenvalues.iter().filter(|l| l.abs() <= KERNEL_TOL).count())
        .collect();
    if q.max_abs() < 1.0 {
        for (degree, &m) in min_eigenvalues.iter().enumerate() {
            if m < -KERNEL_TOL {
                return Err(Error::GramNotPositive {
                    degree,
                    min_eigenvalue: m,
                });
            }
        }
    }
    Ok(GramMatrix {
        blocks,
        min_eigenvalues,
        kernel_dims,
        eigen,
    })
}

fn gram_block(q: &StructureMatrix, basis: &FockBasis, s: usize) -> Result<DMatrix<f64>> {
    let len = basis.degree_len(s);
    let words: Vec<WickWord> = (0..len).map(|i| basis.word(s, i)).collect();
    let mut g = DMatrix::zeros(len, len);
    for a in 0..len {
        for b in a..len {
            let v = wick_inner(q, &words[a], &words[b])?;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

/// A linear map on the truncated Fock space, stored as degree blocks
/// `(from, to, matrix)`.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub blocks: Vec<OperatorBlock>,
}

#[derive(Debug, Clone)]
pub struct OperatorBlock {
    pub from: usize,
    pub to: usize,
    pub matrix: DMatrix<f64>,
}

impl FockOperator {
    pub fn block(&self, from: usize, to: usize) -> Option<&DMatrix<f64>> {
        self.blocks
            .iter()
            .find(|b| b.from == from && b.to == to)
            .map(|b| &b.matrix)
    }

    pub fn apply(&self, basis: &FockBasis, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(basis.len());
        for b in &self.blocks {
            let src = basis.degree_slice(v, b.from);
            let img = &b.matrix * src;
            let mut dst = out.rows_mut(basis.degree_offset(b.to), basis.degree_len(b.to));
            dst += img;
        }
        out
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for b in &mut self.blocks {
            b.matrix *= factor;
        }
        self
    }

    pub fn sum(mut self, other: FockOperator) -> Self {
        for b in other.blocks {
            match self
                .blocks
                .iter_mut()
                .find(|x| x.from == b.from && x.to == b.to)
            {
                Some(x) => x.matrix += b.matrix,
                None => self.blocks.push(b),
            }
        }
        self
    }

    /// Block degree shifts present in this operator.
    pub fn shifts(&self) -> Vec<isize> {
        let mut v: Vec<isize> = self
            .blocks
            .iter()
            .map(|b| b.to as isize - b.from as isize)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn write_csv<W: Write>(&self, name: &str, out: W) -> Result<()> {
        let tagged: Vec<(String, &DMatrix<f64>)> = self
            .blocks
            .iter()
            .map(|b| (format!("{name} from={} to={}", b.from, b.to), &b.matrix))
            .collect();
        write_blocks_csv(out, &tagged)
    }
}

/// Writes each block as a `#`-tagged header line followed by its rows.
pub fn write_blocks_csv<W: Write>(mut out: W, blocks: &[(String, &DMatrix<f64>)]) -> Result<()> {
    for (tag, m) in blocks {
        writeln!(out, "# {tag} rows={} cols={}", m.nrows(), m.ncols())?;
        for r in 0..m.nrows() {
            let row: Vec<String> = m.row(r).iter().map(|x| format!("{x:e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn check_generator(j: usize, basis: &FockBasis) -> Result<()> {
    if j == 0 || j > basis.generators() {
        return Err(Error::LabelOutOfRange {
            label: j,
            n: basis.generators(),
        });
    }
    Ok(())
}

/// `c_j w(i) = w(j ⊔ i)`; the top degree maps to zero.
pub fn creation(j: usize, basis: &FockBasis) -> Result<FockOperator> {
    check_generator(j, basis)?;
    let n = basis.generators();
    let blocks = (0..basis.max_degree())
        .map(|s| {
            let cols = basis.degree_len(s);
            let mut m = DMatrix::zeros(cols * n, cols);
            // prepending j: local index of (j, i) = (j-1) * N^s + local(i)
            for c in 0..cols {
                m[((j - 1) * cols + c, c)] = 1.0;
            }
            OperatorBlock {
                from: s,
                to: s + 1,
                matrix: m,
            }
        })
        .collect();
    Ok(FockOperator { blocks })
}

/// `a_j w(i) = Σ_l δ_{j, i_l} Π_{r<l} q(i_r, i_l) w(i - i_l)`.
pub fn annihilation(q: &StructureMatrix, j: usize, basis: &FockBasis) -> Result<FockOperator> {
    check_generator(j, basis)?;
    if q.dim() != basis.generators() {
        return Err(Error::DimensionMismatch("structure matrix vs basis".into()));
    }
    let blocks = (1..=basis.max_degree())
        .map(|s| {
            let cols = basis.degree_len(s);
            let rows = basis.degree_len(s - 1);
            let mut m = DMatrix::zeros(rows, cols);
            for c in 0..cols {
                let word = basis.word(s, c);
                let labels = word.labels();
                let mut coeff = 1.0;
                for (l, &il) in labels.iter().enumerate() {
                    if il == j {
                        let mut rest = labels.to_vec();
                        rest.remove(l);
                        m[(basis.local_index(&rest), c)] += coeff;
                    }
                    // running product Π_{r<=l} q(i_r, j) for the next matching slot
                    coeff *= q.q(il, j);
                }
            }
            OperatorBlock {
                from: s,
                to: s - 1,
                matrix: m,
            }
        })
        .collect();
    Ok(FockOperator { blocks })
}

/// `s_j = c_j + a_j`.
pub fn generator(q: &StructureMatrix, j: usize, basis: &FockBasis) -> Result<FockOperator> {
    Ok(creation(j, basis)?.sum(annihilation(q, j, basis)?))
}

/// `A w(i) = |i| w(i)`.
pub fn number_operator(basis: &FockBasis) -> FockOperator {
    diagonal_by_degree(basis, |s| s as f64)
}

/// `T_t w(i) = e^{-t|i|} w(i)`.
pub fn ou_semigroup(basis: &FockBasis, t: f64) -> Result<FockOperator> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("semigroup time t = {t} < 0")));
    }
    Ok(diagonal_by_degree(basis, |s| (-t * s as f64).exp()))
}

fn diagonal_by_degree(basis: &FockBasis, f: impl Fn(usize) -> f64) -> FockOperator {
    let blocks = (0..=basis.max_degree())
        .map(|s| OperatorBlock {
            from: s,
            to: s,
            matrix: DMatrix::identity(basis.degree_len(s), basis.degree_len(s)) * f(s),
        })
        .collect();
    FockOperator { blocks }
}

/// Creation and annihilation operators for all generators.
#[derive(Debug, Clone)]
pub struct FockOperators {
    pub creation: Vec<FockOperator>,
    pub annihilation: Vec<FockOperator>,
}

impl FockOperators {
    pub fn build(q: &StructureMatrix, basis: &FockBasis) -> Result<Self> {
        let n = basis.generators();
        let creation = (1..=n).map(|j| creation(j, basis)).collect::<Result<_>>()?;
        let annihilation = (1..=n)
            .map(|j| annihilation(q, j, basis))
            .collect::<Result<_>>()?;
        Ok(FockOperators {
            creation,
            annihilation,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// 1-based generator labels.
    pub j: usize,
    pub k: usize,
    pub degree: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub max_residual: f64,
    pub violations: Vec<Violation>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, j: usize, k: usize, degree: usize, residual: f64) {
        self.max_residual = self.max_residual.max(residual);
        if residual > IDENTITY_TOL {
            self.violations.push(Violation {
                j,
                k,
                degree,
                residual,
            });
        }
    }

    fn merge(mut self, other: IdentityReport) -> Self {
        self.max_residual = self.max_residual.max(other.max_residual);
        self.violations.extend(other.violations);
        self
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Checks `a_k c_j − q(j,k) c_j a_k = δ_{jk} 1` on degrees `0..D`.
pub fn verify_commutation(q: &StructureMatrix, basis: &FockBasis) -> Result<IdentityReport> {
    let ops = FockOperators::build(q, basis)?;
    check_commutation(q, basis, &ops)
}

/// Same as [`verify_commutation`] against externally supplied operators.
pub fn check_commutation(
    q: &StructureMatrix,
    basis: &FockBasis,
    ops: &FockOperators,
) -> Result<IdentityReport> {
    if basis.max_degree() < 2 {
        return Err(Error::InvalidParameter(
            "commutation check needs degree cutoff D >= 2".into(),
        ));
    }
    let n = basis.generators();
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|j| (1..=n).map(move |k| (j, k))).collect();
    let report = pairs
        .par_iter()
        .map(|&(j, k)| {
            let mut rep = IdentityReport {
                max_residual: 0.0,
                violations: Vec::new(),
            };
            let c = &ops.creation[j - 1];
            let a = &ops.annihilation[k - 1];
            for s in 0..basis.max_degree() {
                let dim = basis.degree_len(s);
                let up = c.block(s, s + 1).expect("creation block") ;
                let mut lhs = a.block(s + 1, s).expect("annihilation block") * up;
                if s > 0 {
                    let down = a.block(s, s - 1).expect("annihilation block");
                    let back = c.block(s - 1, s).expect("creation block");
                    lhs -= (back * down) * q.q(j, k);
                }
                if j == k {
                    lhs -= DMatrix::<f64>::identity(dim, dim);
                }
                rep.record(j, k, s, max_abs(&lhs));
            }
            rep
        })
        .reduce(
            || IdentityReport {
                max_residual: 0.0,
                violations: Vec::new(),
            },
            IdentityReport::merge,
        );
    Ok(sorted(report))
}

fn sorted(mut r: IdentityReport) -> IdentityReport {
    r.violations
        .sort_by(|a, b| (a.j, a.k, a.degree).cmp(&(b.j, b.k, b.degree)));
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointReport {
    /// Residual of `c_jᵀ G_{s+1} = G_s a_j` per generator and degree.
    pub form: IdentityReport,
    /// Residual of `G_s (a_j − a_j^♯)` with `a_j^♯ = G_s^+ c_jᵀ G_{s+1}`,
    /// i.e. adjointness on the quotient by the Gram kernel.
    pub quotient: IdentityReport,
    pub kernel_dims: Vec<usize>,
}

impl AdjointReport {
    pub fn passed(&self) -> bool {
        self.form.passed() && self.quotient.passed()
    }
}

/// Adjointness of `c_j` and `a_j` with respect to the Gram inner product.
pub fn verify_adjoint(
    q: &StructureMatrix,
    basis: &FockBasis,
    g: &GramMatrix,
) -> Result<AdjointReport> {
    let ops = FockOperators::build(q, basis)?;
    check_adjoint(basis, g, &ops)
}

pub fn check_adjoint(
    basis: &FockBasis,
    g: &GramMatrix,
    ops: &FockOperators,
) -> Result<AdjointReport> {
    let empty = || IdentityReport {
        max_residual: 0.0,
        violations: Vec::new(),
    };
    let mut form = empty();
    let mut quotient = empty();
    let pinvs: Vec<DMatrix<f64>> = (0..=basis.max_degree())
        .map(|s| g.pseudo_inverse(s))
        .collect();
    for j in 1..=basis.generators() {
        let c = &ops.creation[j - 1];
        let a = &ops.annihilation[j - 1];
        for s in 0..basis.max_degree() {
            let up = c.block(s, s + 1).expect("creation block");
            let down = a.block(s + 1, s).expect("annihilation block");
            let ctg = up.transpose() * g.block(s + 1);
            let ga = g.block(s) * down;
            form.record(j, j, s, max_abs(&(&ctg - &ga)));
            let sharp = &pinvs[s] * &ctg;
            quotient.record(j, j, s, max_abs(&(g.block(s) * (down - sharp))));
        }
    }
    Ok(AdjointReport {
        form: sorted(form),
        quotient: sorted(quotient),
        kernel_dims: g.kernel_dims.clone(),
    })
}

/// `s_{i_1} ⋯ s_{i_d} Ω`, applying `s_{i_d}` first.
pub fn generator_product_vector(
    q: &StructureMatrix,
    basis: &FockBasis,
    labels: &[usize],
) -> Result<DVector<f64>> {
    let mut v = basis.vacuum();
    for &j in labels.iter().rev() {
        v = generator(q, j, basis)?.apply(basis, &v);
    }
    Ok(v)
}

/// `⟨Ω, s_{i_1} ⋯ s_{i_d} Ω⟩`.
pub fn vacuum_expectation(q: &StructureMatrix, basis: &FockBasis, labels: &[usize]) -> Result<f64> {
    check_fits(basis, labels)?;
    let v = generator_product_vector(q, basis, labels)?;
    Ok(v[0])
}

fn check_fits(basis: &FockBasis, labels: &[usize]) -> Result<()> {
    if labels.len() > basis.max_degree() {
        return Err(Error::InvalidParameter(format!(
            "word length {} exceeds degree cutoff {}",
            labels.len(),
            basis.max_degree()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WickVectorReport {
    pub residual: f64,
    pub passed: bool,
}

/// Compares `s_{i_1} ⋯ s_{i_d} Ω` with `Σ_σ f_σ(i) w(i_np)`.
pub fn wick_vector_check(
    q: &StructureMatrix,
    basis: &FockBasis,
    labels: &[usize],
) -> Result<WickVectorReport> {
    check_fits(basis, labels)?;
    let lhs = generator_product_vector(q, basis, labels)?;
    let caps = Caps::default();
    let dec = wick_decompose(q, labels, &caps)?;
    let mut rhs = DVector::zeros(basis.len());
    for t in &dec.terms {
        rhs[basis.index(t.reduced.labels())?] += t.coefficient;
    }
    let residual = (lhs - rhs).amax();
    Ok(WickVectorReport {
        residual,
        passed: residual <= IDENTITY_TOL,
    })
}
