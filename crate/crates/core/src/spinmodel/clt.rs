//! Finite-m central-limit statistics
//! `m^{-d/2} sum_{k in [m]^d} tau(x_{i_1}(k_1) ... x_{i_d}(k_d))`.
//!
//! The sum is grouped by the set partition `tau` of positions induced by equal
//! column indices. A word can only have nonzero trace when every letter occurs
//! an even number of times, which prunes most partitions. In expectation the
//! value of a group does not depend on which distinct columns are used, so the
//! whole statistic becomes `sum_tau (m)_{|tau|} / m^{d/2} * E_tau`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::epsilon::{derive_seed, EpsilonTable, Letter, Scheme};
use super::word::{symbolic_trace, trace_letters, SymbolRule, SymbolicTrace};
use crate::combinatorics::{enumerate_set_partitions, falling_factorial, Caps, Partition};
use crate::error::{Error, Result};
use crate::moments::StructureMatrix;

/// Default cap on the number of words visited by exact enumeration.
pub const DEFAULT_BUDGET: u128 = 50_000_000;

fn check_rows(labels: &[usize], rows: usize) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptyVector);
    }
    match labels.iter().find(|&&i| i == 0 || i > rows) {
        Some(&label) => Err(Error::LabelOutOfRange { label, n: rows }),
        None => Ok(()),
    }
}

fn normalization(m: usize, d: usize) -> f64 {
    (m as f64).powf(d as f64 / 2.0)
}

/// Column partitions whose refinement by row labels has only even blocks.
fn admissible_partitions(labels: &[usize], caps: &Caps) -> Result<Vec<Partition>> {
    let d = labels.len();
    if d % 2 == 1 {
        return Ok(Vec::new());
    }
    Ok(enumerate_set_partitions(d, caps)?
        .into_iter()
        .filter(|tau| {
            tau.blocks().iter().all(|b| {
                b.iter().all(|&r| b.iter().filter(|&&t| labels[t] == labels[r]).count() % 2 == 0)
            })
        })
        .collect())
}

fn block_of(tau: &Partition) -> Vec<usize> {
    let mut lab = vec![0; tau.ground_size()];
    for (b, block) in tau.blocks().iter().enumerate() {
        for &r in block {
            lab[r] = b;
        }
    }
    lab
}

/// One column partition with its symbolic trace.
#[derive(Debug, Clone)]
pub struct ProfileTerm {
    pub partition: Partition,
    pub symbolic: SymbolicTrace,
}

/// Column-partition expansion of the expectation-mode statistic for a fixed
/// label vector; evaluating it at any `q` and `m` is cheap.
#[derive(Debug, Clone)]
pub struct ExpectationProfile {
    labels: Vec<usize>,
    rule: SymbolRule,
    terms: Vec<ProfileTerm>,
}

impl ExpectationProfile {
    /// `labels` are 1-based rows. `base_rows` is the dimension of `q` used
    /// later; for `TensorRepeated` rows fold modulo it.
    pub fn new(labels: &[usize], base_rows: usize, scheme: Scheme, caps: &Caps) -> Result<Self> {
        check_rows(labels, base_rows * scheme.copies())?;
        let rule = SymbolRule::for_scheme(scheme, base_rows);
        let terms = admissible_partitions(labels, caps)?
            .into_iter()
            .filter_map(|tau| {
                let lab = block_of(&tau);
                let word: Vec<Letter> = labels
                    .iter()
                    .zip(&lab)
                    .map(|(&i, &k)| Letter::new(i - 1, k))
                    .collect();
                let symbolic = symbolic_trace(&word, rule);
                (!symbolic.vanishes).then_some(ProfileTerm {
                    partition: tau,
                    symbolic,
                })
            })
            .collect();
        Ok(ExpectationProfile {
            labels: labels.to_vec(),
            rule,
            terms,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn terms(&self) -> &[ProfileTerm] {
        &self.terms
    }

    fn check_q(&self, q: &StructureMatrix) -> Result<()> {
        match self.rule.base_rows {
            Some(n) if n != q.dim() => Err(Error::DimensionMismatch(format!(
                "profile built for base dimension {n}, got {}",
                q.dim()
            ))),
            None if self.labels.iter().any(|&i| i > q.dim()) => Err(Error::LabelOutOfRange {
                label: *self.labels.iter().max().unwrap(),
                n: q.dim(),
            }),
            _ => Ok(()),
        }
    }

    fn sum_where(&self, q: &StructureMatrix, m: usize, keep: impl Fn(&Partition) -> bool) -> Result<f64> {
        self.check_q(q)?;
        let d = self.labels.len();
        Ok(self
            .terms
            .iter()
            .filter(|t| keep(&t.partition))
            .map(|t| {
                falling_factorial(m, t.partition.num_blocks()) as f64 / normalization(m, d)
                    * t.symbolic.expectation(q)
            })
            .sum())
    }

    /// The expectation-mode statistic at `m`.
    pub fn value(&self, q: &StructureMatrix, m: usize) -> Result<f64> {
        self.sum_where(q, m, |_| true)
    }

    /// Contribution of pair partitions only; tends to the moment as m grows.
    pub fn pair_part(&self, q: &StructureMatrix, m: usize) -> Result<f64> {
        self.sum_where(q, m, |p| p.is_pair_partition())
    }

    /// `sum_tau |E_tau| * |(m)_{|tau|} / m^{d/2} - [tau is a pairing]|`, an
    /// upper bound on `|value(m) - limit|` that is O(1/m).
    pub fn error_bound(&self, q: &StructureMatrix, m: usize) -> Result<f64> {
        self.check_q(q)?;
        let d = self.labels.len();
        Ok(self
            .terms
            .iter()
            .map(|t| {
                let w = falling_factorial(m, t.partition.num_blocks()) as f64 / normalization(m, d);
                let limit = if t.partition.is_pair_partition() { 1.0 } else { 0.0 };
                (w - limit).abs() * t.symbolic.expectation(q).abs()
            })
            .sum())
    }
}

/// Expectation-mode statistic.
pub fn clt_expectation(q: &StructureMatrix, scheme: Scheme, labels: &[usize], m: usize) -> Result<f64> {
    ExpectationProfile::new(labels, q.dim(), scheme, &Caps::default())?.value(q, m)
}

/// Number of words exact enumeration would visit.
pub fn exact_cost(labels: &[usize], m: usize) -> Result<u128> {
    Ok(admissible_partitions(labels, &Caps::default())?
        .iter()
        .map(|p| falling_factorial(m, p.num_blocks()))
        .sum())
}

fn injective_sum(
    labels: &[usize],
    lab: &[usize],
    blocks: usize,
    eps: &EpsilonTable,
    cols: &mut Vec<usize>,
    used: &mut [bool],
    word: &mut [Letter],
) -> i64 {
    if cols.len() == blocks {
        for (r, w) in word.iter_mut().enumerate() {
            *w = Letter::new(labels[r] - 1, cols[lab[r]]);
        }
        return trace_letters(word, eps) as i64;
    }
    let mut total = 0;
    for k in 0..used.len() {
        if !used[k] {
            used[k] = true;
            cols.push(k);
            total += injective_sum(labels, lab, blocks, eps, cols, used, word);
            cols.pop();
            used[k] = false;
        }
    }
    total
}

/// Exact statistic for one sampled table, summing only the column patterns
/// that can contribute. Errors when the work exceeds `budget`.
pub fn clt_exact(eps: &EpsilonTable, labels: &[usize], budget: u128) -> Result<f64> {
    check_rows(labels, eps.rows())?;
    let m = eps.m();
    let needed = exact_cost(labels, m)?;
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let parts = admissible_partitions(labels, &Caps::default())?;
    let total: i64 = parts
        .par_iter()
        .map(|tau| {
            let lab = block_of(tau);
            let mut word = vec![Letter::new(0, 0); labels.len()];
            let mut used = vec![false; m];
            injective_sum(labels, &lab, tau.num_blocks(), eps, &mut Vec::new(), &mut used, &mut word)
        })
        .sum();
    Ok(total as f64 / normalization(m, labels.len()))
}

/// Reference implementation over all of `[m]^d`.
pub fn clt_bruteforce(eps: &EpsilonTable, labels: &[usize]) -> Result<f64> {
    check_rows(labels, eps.rows())?;
    let (m, d) = (eps.m(), labels.len());
    let count = (m as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if count > DEFAULT_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: count,
            budget: DEFAULT_BUDGET,
        });
    }
    let mut k = vec![0usize; d];
    let mut word = vec![Letter::new(0, 0); d];
    let mut total = 0i64;
    loop {
        for r in 0..d {
            word[r] = Letter::new(labels[r] - 1, k[r]);
        }
        total += trace_letters(&word, eps) as i64;
        let mut r = 0;
        loop {
            if r == d {
                return Ok(total as f64 / normalization(m, d));
            }
            k[r] += 1;
            if k[r] < m {
                break;
            }
            k[r] = 0;
            r += 1;
        }
    }
}

/// Unbiased Monte Carlo estimate of the exact statistic from uniformly drawn
/// column vectors. Chunks use derived seeds, so the result does not depend
/// on thread scheduling.
pub fn clt_monte_carlo(eps: &EpsilonTable, labels: &[usize], samples: usize, seed: u64) -> Result<f64> {
    check_rows(labels, eps.rows())?;
    if samples == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least one sample".into()));
    }
    const CHUNK: usize = 4096;
    let (m, d) = (eps.m(), labels.len());
    let chunks = samples.div_ceil(CHUNK);
    let total: i64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
            let n = CHUNK.min(samples - c * CHUNK);
            let mut word = vec![Letter::new(0, 0); d];
            let mut s = 0i64;
            for _ in 0..n {
                for r in 0..d {
                    word[r] = Letter::new(labels[r] - 1, rng.random_range(0..m));
                }
                s += trace_letters(&word, eps) as i64;
            }
            s
        })
        .sum();
    Ok(total as f64 / samples as f64 * normalization(m, d))
}

/// Evaluation strategy for [`clt_statistic`].
#[derive(Debug, Clone)]
pub enum CltMode<'a> {
    Exact { table: &'a EpsilonTable, budget: u128 },
    Expectation { q: &'a StructureMatrix, scheme: Scheme, m: usize },
    MonteCarlo { table: &'a EpsilonTable, samples: usize, seed: u64 },
}

pub fn clt_statistic(mode: &CltMode<'_>, labels: &[usize]) -> Result<f64> {
    match mode {
        CltMode::Exact { table, budget } => clt_exact(table, labels, *budget),
        CltMode::Expectation { q, scheme, m } => clt_expectation(q, *scheme, labels, *m),
        CltMode::MonteCarlo { table, samples, seed } => clt_monte_carlo(table, labels, *samples, *seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moment;
    use crate::spinmodel::word::{expected_trace, SpinWord};

    fn q2(a: f64, b: f64, c: f64) -> StructureMatrix {
        StructureMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap()
    }

    /// Independent oracle: expected_trace summed over every column vector.
    fn expectation_bruteforce(q: &StructureMatrix, scheme: Scheme, labels: &[usize], m: usize) -> f64 {
        let d = labels.len();
        let mut total = 0.0;
        for code in 0..m.pow(d as u32) {
            let mut c = code;
            let letters = labels
                .iter()
                .map(|&i| {
                    let k = c % m;
                    c /= m;
                    Letter::new(i - 1, k)
                })
                .collect();
            total += expected_trace(&SpinWord(letters), q, scheme).unwrap();
        }
        total / normalization(m, d)
    }

    #[test]
    fn pair_of_equal_labels_is_one() {
        let q = q2(0.3, 0.1, -0.2);
        for m in [1, 2, 5, 17] {
            assert!((clt_expectation(&q, Scheme::Independent, &[1, 1], m).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn four_equal_labels_closed_form() {
        let q = StructureMatrix::constant(1, 0.35).unwrap();
        for m in [2usize, 4, 8, 16, 32] {
            let mf = m as f64;
            let want = mf * (mf - 1.0) / (mf * mf) * 2.35 + mf / (mf * mf);
            let got = clt_expectation(&q, Scheme::Independent, &[1, 1, 1, 1], m).unwrap();
            assert!((got - want).abs() < 1e-13, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn profile_matches_bruteforce_expectation() {
        let q = q2(0.3, -0.6, 0.8);
        let cases: &[&[usize]] = &[&[1, 2, 1, 2], &[1, 1, 2, 2], &[1, 2, 2, 1, 1, 1], &[2, 2, 2, 2], &[1, 2, 1]];
        for labels in cases {
            for m in [1, 2, 3] {
                let a = clt_expectation(&q, Scheme::Independent, labels, m).unwrap();
                let b = expectation_bruteforce(&q, Scheme::Independent, labels, m);
                assert!((a - b).abs() < 1e-12, "{labels:?} m={m}: {a} vs {b}");
            }
        }
        let scheme = Scheme::TensorRepeated { copies: 2 };
        for labels in [&[1usize, 3, 1, 3][..], &[1, 4, 2, 3], &[3, 3, 1, 1, 2, 4]] {
            for m in [1, 2, 3] {
                let a = clt_expectation(&q, scheme, labels, m).unwrap();
                let b = expectation_bruteforce(&q, scheme, labels, m);
                assert!((a - b).abs() < 1e-12, "{labels:?} m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn pair_part_is_scaled_moment() {
        let q = q2(0.3, -0.6, 0.8);
        for labels in [&[1usize, 2, 1, 2][..], &[1, 1, 1, 1, 2, 2]] {
            let p = ExpectationProfile::new(labels, 2, Scheme::Independent, &Caps::default()).unwrap();
            let d = labels.len();
            for m in [4usize, 9, 32] {
                let want = falling_factorial(m, d / 2) as f64 / normalization(m, d) * moment(&q, labels).unwrap();
                assert!((p.pair_part(&q, m).unwrap() - want).abs() < 1e-12);
                let err = (p.value(&q, m).unwrap() - moment(&q, labels).unwrap()).abs();
                assert!(err <= p.error_bound(&q, m).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn exact_matches_bruteforce() {
        let q = q2(0.3, -0.6, 0.8);
        for seed in 0..5 {
            let eps = EpsilonTable::sample(&q, 4, seed, Scheme::Independent).unwrap();
            for labels in [&[1usize, 2, 1, 2][..], &[1, 1, 1, 1], &[2, 1, 1, 2, 2, 1], &[1, 2, 2]] {
                let a = clt_exact(&eps, labels, DEFAULT_BUDGET).unwrap();
                let b = clt_bruteforce(&eps, labels).unwrap();
                assert!((a - b).abs() < 1e-12, "{labels:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let q = q2(0.3, -0.6, 0.8);
        let eps = EpsilonTable::sample(&q, 16, 1, Scheme::Independent).unwrap();
        let err = clt_exact(&eps, &[1, 1, 1, 1], 10).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(err.to_string().contains("Monte Carlo"));
    }

    #[test]
    fn monte_carlo_is_close_and_deterministic() {
        let q = q2(0.3, -0.6, 0.8);
        let eps = EpsilonTable::sample(&q, 6, 2, Scheme::Independent).unwrap();
        let exact = clt_exact(&eps, &[1, 2, 1, 2], DEFAULT_BUDGET).unwrap();
        let a = clt_monte_carlo(&eps, &[1, 2, 1, 2], 400_000, 7).unwrap();
        let b = clt_monte_carlo(&eps, &[1, 2, 1, 2], 400_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a - exact).abs() < 0.1, "{a} vs {exact}");
    }

    #[test]
    fn mode_dispatch() {
        let q = q2(0.3, -0.6, 0.8);
        let eps = EpsilonTable::sample(&q, 3, 0, Scheme::Independent).unwrap();
        let exact = clt_statistic(&CltMode::Exact { table: &eps, budget: DEFAULT_BUDGET }, &[1, 1]).unwrap();
        // x x = 1 for every column, so the statistic is m / m = 1
        assert_eq!(exact, 1.0);
        let e = clt_statistic(&CltMode::Expectation { q: &q, scheme: Scheme::Independent, m: 3 }, &[1, 1]).unwrap();
        assert_eq!(e, 1.0);
        assert!(clt_statistic(&CltMode::Exact { table: &eps, budget: 1 }, &[3, 3]).is_err());
    }
}
