//! Structure matrices and the closed-form partition sums built on them:
//! mixed moments, Wick inner products, Wick coefficients and the Wick
//! decomposition of generator products.
//!
//! Generator labels are 1-based (`1..=N`) throughout this module.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    for_each_matching, for_each_pairing, for_each_singleton_pairing, Caps, SingletonPairPartition,
};
use crate::error::{Error, Result};

/// Symmetric `N x N` matrix of coupling constants in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    n: usize,
    entries: Vec<f64>,
}

/// On-disk form: `{"N": 2, "entries": [[q11, q12], [q21, q22]]}`. A `null`
/// entry counts as missing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureMatrixJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub entries: Vec<Vec<Option<f64>>>,
}

impl StructureMatrix {
    /// Validates a raw square matrix. Every entry, the diagonal included,
    /// must be present.
    pub fn validate(raw: &[Vec<Option<f64>>]) -> Result<Self> {
        let n = raw.len();
        for (row, r) in raw.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    row: row + 1,
                    len: r.len(),
                    n,
                });
            }
        }
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = match raw[i][j] {
                    Some(v) => v,
                    None if i == j => return Err(Error::MissingDiagonal(i + 1)),
                    None => return Err(Error::MissingEntry(i + 1, j + 1)),
                };
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange(i + 1, j + 1, v));
                }
                entries[i * n + j] = v;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if a != b {
                    return Err(Error::Asymmetric(i + 1, j + 1, a, b));
                }
            }
        }
        Ok(StructureMatrix { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let raw: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| r.iter().copied().map(Some).collect())
            .collect();
        Self::validate(&raw)
    }

    pub fn constant(n: usize, q: f64) -> Result<Self> {
        Self::from_rows(&vec![vec![q; n]; n])
    }

    /// Uniform random symmetric matrix with entries in `[-max_abs, max_abs]`.
    pub fn random<R: Rng + ?Sized>(n: usize, max_abs: f64, rng: &mut R) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-max_abs..=max_abs);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        StructureMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `q(i, j)` with 1-based labels.
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.entries[(i - 1) * self.n + (j - 1)]
    }

    /// 0-based access.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n.max(1)).map(|r| r.to_vec()).take(self.n).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise product with a scalar.
    pub fn scaled(&self, q: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("scale {q} outside [-1, 1]")));
        }
        Ok(StructureMatrix {
            n: self.n,
            entries: self.entries.iter().map(|v| v * q).collect(),
        })
    }

    /// Free product of `q_k`-Gaussian blocks of sizes `dims[k]`: coupling
    /// `qs[k]` inside block `k`, zero across blocks.
    pub fn free_product(dims: &[usize], qs: &[f64]) -> Result<Self> {
        if dims.len() != qs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} block sizes but {} couplings",
                dims.len(),
                qs.len()
            )));
        }
        let block_of: Vec<usize> = dims
            .iter()
            .enumerate()
            .flat_map(|(k, &d)| std::iter::repeat_n(k, d))
            .collect();
        let rows: Vec<Vec<f64>> = block_of
            .iter()
            .map(|&a| {
                block_of
                    .iter()
                    .map(|&b| if a == b { qs[a] } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::from_rows(&rows)
    }

    /// Tensor product over factors `k` of the free product
    /// `Gamma_{qs[k]}(R^{dims[k]}) * Gamma_{ps[k]}(R^{dims2[k]})`.
    /// Inside a factor: `qs[k]` on the first block, `ps[k]` on the second,
    /// zero between them. Across factors: 1.
    pub fn tensor_mixed(dims: &[usize], dims2: &[usize], qs: &[f64], ps: &[f64]) -> Result<Self> {
        let n = dims.len();
        if dims2.len() != n || qs.len() != n || ps.len() != n {
            return Err(Error::DimensionMismatch(
                "tensor_mixed needs equal-length dims, dims', qs, ps".into(),
            ));
        }
        // (factor, side) per generator; side 0 = H block, 1 = K block
        let mut tags = Vec::new();
        for k in 0..n {
            tags.extend(std::iter::repeat_n((k, 0u8), dims[k]));
            tags.extend(std::iter::repeat_n((k, 1u8), dims2[k]));
        }
        let rows: Vec<Vec<f64>> = tags
            .iter()
            .map(|&(fa, sa)| {
                tags.iter()
                    .map(|&(fb, sb)| match (fa == fb, sa == sb) {
                        (false, _) => 1.0,
                        (true, false) => 0.0,
                        (true, true) if sa == 0 => qs[fa],
                        (true, true) => ps[fa],
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(&rows)
    }

    /// `Q ⊗ 1_n`: `q(i + aN, j + bN) = q(i, j)`.
    pub fn tensor_identity(&self, copies: usize) -> Self {
        let big = self.n * copies;
        let mut entries = vec![0.0; big * big];
        for i in 0..big {
            for j in 0..big {
                entries[i * big + j] = self.get(i % self.n, j % self.n);
            }
        }
        StructureMatrix { n: big, entries }
    }

    /// `Q ⊗ [[1, 1], [1, 1]]`, the structure matrix of the doubled algebra.
    pub fn double(&self) -> Self {
        self.tensor_identity(2)
    }

    pub fn to_json(&self) -> StructureMatrixJson {
        StructureMatrixJson {
            n: self.n,
            entries: self
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
        }
    }

    pub fn from_json(doc: &StructureMatrixJson) -> Result<Self> {
        if doc.entries.len() != doc.n {
            return Err(Error::DimensionMismatch(format!(
                "N = {} but {} rows",
                doc.n,
                doc.entries.len()
            )));
        }
        Self::validate(&doc.entries)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: StructureMatrixJson = serde_json::from_str(s)?;
        Self::from_json(&doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Checks that every label lies in `1..=N`.
    pub fn check_labels(&self, labels: &[usize]) -> Result<()> {
        for &l in labels {
            if l == 0 || l > self.n {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    n: self.n,
                });
            }
        }
        Ok(())
    }
}

/// Label vector `i ∈ [N]^s` naming the special Wick word `w(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WickWord(pub Vec<usize>);

impl WickWord {
    pub fn new(labels: Vec<usize>) -> Self {
        WickWord(labels)
    }

    pub fn vacuum() -> Self {
        WickWord(Vec::new())
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&[usize]> for WickWord {
    fn from(labels: &[usize]) -> Self {
        WickWord(labels.to_vec())
    }
}

/// `τ(x_{i_1} ⋯ x_{i_d})`: zero for odd `d`, otherwise the sum over pair
/// partitions `σ ≤ σ(i)` of the product of `q` over crossing pairs.
pub fn moment(q: &StructureMatrix, labels: &[usize]) -> Result<f64> {
    q.check_labels(labels)?;
    let d = labels.len();
    if d % 2 == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for_each_pairing(d, &|a, b| labels[a] == labels[b], &mut |pairs| {
        total += crossing_weight(q, labels, pairs);
    });
    Ok(total)
}

fn crossing_weight(q: &StructureMatrix, labels: &[usize], pairs: &[(usize, usize)]) -> f64 {
    let mut w = 1.0;
    for (k, &(ek, zk)) in pairs.iter().enumerate() {
        for &(el, zl) in &pairs[k + 1..] {
            if el < zk && zk < zl && ek < el {
                w *= q.q(labels[ek], labels[el]);
            }
        }
    }
    w
}

fn same_multiset(a: &[usize], b: &[usize]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// `⟨w(i), w(i')⟩`. Zero unless the label multisets agree; otherwise a sum
/// over label-respecting matchings `k ↦ π(k)` weighted by `q(i_k, i_l)` for
/// every inversion `k < l`, `π(k) > π(l)`.
pub fn wick_inner(q: &StructureMatrix, i: &WickWord, j: &WickWord) -> Result<f64> {
    q.check_labels(i.labels())?;
    q.check_labels(j.labels())?;
    if !same_multiset(i.labels(), j.labels()) {
        return Ok(0.0);
    }
    let (a, b) = (i.labels(), j.labels());
    let mut total = 0.0;
    for_each_matching(a.len(), &|k, r| a[k] == b[r], &mut |m| {
        let mut w = 1.0;
        for k in 0..m.len() {
            for l in k + 1..m.len() {
                if m[k] > m[l] {
                    w *= q.q(a[k], a[l]);
                }
            }
        }
        total += w;
    });
    Ok(total)
}

/// `i_np`: the labels sitting at singleton positions of `σ`, order kept.
pub fn reduced_labels(labels: &[usize], sigma: &SingletonPairPartition) -> Vec<usize> {
    sigma.singletons().iter().map(|&t| labels[t]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WickCoefficient {
    pub value: f64,
    /// `false` when `σ ≰ σ(i)`; the value is then 0 by convention.
    pub admissible: bool,
}

/// `f_σ(i)`: product of `q` over pair-pair crossings and over
/// singleton-inside-pair crossings of `σ`.
pub fn wick_coefficient(
    q: &StructureMatrix,
    labels: &[usize],
    sigma: &SingletonPairPartition,
) -> Result<WickCoefficient> {
    q.check_labels(labels)?;
    if sigma.ground_size() != labels.len() {
        return Err(Error::GroundSetMismatch(sigma.ground_size(), labels.len()));
    }
    let admissible = sigma.pairs().iter().all(|&(e, z)| labels[e] == labels[z]);
    if !admissible {
        return Ok(WickCoefficient {
            value: 0.0,
            admissible,
        });
    }
    let cs = sigma.crossing_sets();
    let pairs = sigma.pairs();
    let mut value = 1.0;
    for &(r, t) in &cs.pair_pair {
        value *= q.q(labels[pairs[r].0], labels[pairs[t].0]);
    }
    for &(r, t) in &cs.pair_singleton {
        value *= q.q(labels[pairs[r].0], labels[t]);
    }
    Ok(WickCoefficient { value, admissible })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WickTerm {
    pub reduced: WickWord,
    pub coefficient: f64,
    pub sigma: SingletonPairPartition,
}

/// `x_{i_1} ⋯ x_{i_d} = Σ_σ f_σ(i) w(i_np)` over `σ ∈ P_{1,2}(d)`, `σ ≤ σ(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WickDecomposition {
    pub labels: Vec<usize>,
    pub terms: Vec<WickTerm>,
}

impl WickDecomposition {
    /// Sum of coefficients of terms reducing to the vacuum.
    pub fn vacuum_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.reduced.is_empty())
            .map(|t| t.coefficient)
            .sum()
    }

    /// Terms collected by reduced word, in the order of first appearance.
    pub fn collected(&self) -> Vec<(WickWord, f64)> {
        let mut out: Vec<(WickWord, f64)> = Vec::new();
        for t in &self.terms {
            match out.iter_mut().find(|(w, _)| *w == t.reduced) {
                Some((_, c)) => *c += t.coefficient,
                None => out.push((t.reduced.clone(), t.coefficient)),
            }
        }
        out
    }
}

pub fn wick_decompose(q: &StructureMatrix, labels: &[usize], caps: &Caps) -> Result<WickDecomposition> {
    q.check_labels(labels)?;
    let d = labels.len();
    if d > caps.pairings {
        return Err(Error::CapExceeded {
            what: "Wick decomposition length",
            requested: d,
            cap: caps.pairings,
        });
    }
    let mut sigmas = Vec::new();
    for_each_singleton_pairing(d, &|a, b| labels[a] == labels[b], &mut |s, p| {
        sigmas.push((s.to_vec(), p.to_vec()))
    });
    let mut terms = Vec::with_capacity(sigmas.len());
    for (s, p) in sigmas {
        let sigma = SingletonPairPartition::new(d, s, p)?;
        let c = wick_coefficient(q, labels, &sigma)?;
        terms.push(WickTerm {
            reduced: WickWord(reduced_labels(labels, &sigma)),
            coefficient: c.value,
            sigma,
        });
    }
    Ok(WickDecomposition {
        labels: labels.to_vec(),
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferenceCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

/// Checks `Σ_σ q^{|I(σ)|} Π q̃(...) = moment(q·Q̃, i)` to 1e-12.
pub fn transference_moment_check(
    scale: f64,
    base: &StructureMatrix,
    labels: &[usize],
) -> Result<TransferenceCheck> {
    base.check_labels(labels)?;
    let d = labels.len();
    let mut lhs = 0.0;
    if d % 2 == 0 {
        for_each_pairing(d, &|a, b| labels[a] == labels[b], &mut |pairs| {
            let mut crossings = 0;
            let mut w = 1.0;
            for (k, &(ek, zk)) in pairs.iter().enumerate() {
                for &(el, zl) in &pairs[k + 1..] {
                    if ek < el && el < zk && zk < zl {
                        crossings += 1;
                        w *= base.q(labels[ek], labels[el]);
                    }
                }
            }
            lhs += scale.powi(crossings) * w;
        });
    }
    let rhs = moment(&base.scaled(scale)?, labels)?;
    Ok(TransferenceCheck {
        lhs,
        rhs,
        passed: (lhs - rhs).abs() <= 1e-12,
    })
}
