//! Normalized Schatten norms on the matrix representation of the spin model,
//! and numerical checks of the semigroup and gradient-form inequalities.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{moment, StructureMatrix};
use crate::spinmodel::{
    clt_exact, conditional_expectation, derivation, derive_seed, gradient_form, in_derivation_span,
    number_operator_spin, ou_spin, sqrt_number_operator, EpsilonTable, ExpectationProfile, Letter,
    Representation, Scheme, SpinElement,
};

pub use crate::spinmodel::HermitianMatrix;

/// Slack allowed on inequalities (eigensolver accuracy).
pub const INEQUALITY_TOL: f64 = 1e-10;
/// Slack allowed on algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be >= 1, got {p}")));
    }
    Ok(())
}

fn power_mean(eigs: impl Iterator<Item = f64>, n: usize, half_p: f64, p: f64) -> f64 {
    let s: f64 = eigs.map(|l| l.max(0.0).powf(half_p)).sum();
    (s / n as f64).powf(1.0 / p)
}

/// `(tr|f|^p / dim)^{1/p}` from the eigenvalues of `f* f`.
pub fn schatten_norm(f: &DMatrix<Complex64>, p: f64) -> Result<f64> {
    check_p(p)?;
    if !f.is_square() || f.nrows() == 0 {
        return Err(Error::DimensionMismatch("Schatten norm needs a nonempty square matrix".into()));
    }
    let eigs = (f.adjoint() * f).symmetric_eigenvalues();
    Ok(power_mean(eigs.iter().copied(), f.nrows(), p / 2.0, p))
}

/// `sqrt(tr(f* f) / dim)`, computed from the entries.
pub fn hilbert_schmidt_norm(f: &DMatrix<Complex64>) -> f64 {
    (f.iter().map(|z| z.norm_sqr()).sum::<f64>() / f.nrows() as f64).sqrt()
}

/// `||h^{1/2}||_p` for positive semidefinite Hermitian `h`. Errors when the
/// smallest eigenvalue is below `-1e-10` (relative to the spectral scale).
pub fn psd_root_norm(h: &DMatrix<Complex64>, p: f64) -> Result<f64> {
    check_p(p)?;
    let eigs = h.symmetric_eigenvalues();
    let scale = eigs.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -INEQUALITY_TOL * scale {
        return Err(Error::InvalidParameter(format!(
            "matrix is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(power_mean(eigs.iter().copied(), h.nrows(), p / 2.0, p))
}

fn element_norm(f: &SpinElement, p: f64) -> Result<f64> {
    if f.is_zero() {
        check_p(p)?;
        return Ok(0.0);
    }
    if p == 2.0 {
        // reduced words are orthonormal for the trace
        return Ok(f.terms().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt());
    }
    let rep = Representation::for_elements(&[f])?;
    schatten_norm(&rep.matrix(f)?, p)
}

fn element_root_norm(h: &SpinElement, p: f64) -> Result<f64> {
    if h.is_zero() {
        check_p(p)?;
        return Ok(0.0);
    }
    let rep = Representation::for_elements(&[h])?;
    psd_root_norm(&rep.matrix(h)?, p)
}

/// Normalized Schatten norm of a spin element, in the representation on
/// the letters it uses.
pub fn spin_norm(f: &SpinElement, p: f64) -> Result<f64> {
    element_norm(f, p)
}

/// Random-element ensemble on a sampled spin model: Gaussian coefficients on
/// all reduced words of length at most `max_len` over every generator.
#[derive(Debug, Clone)]
pub struct SpinSetup {
    table: EpsilonTable,
    letters: Vec<Letter>,
    max_len: usize,
}

impl SpinSetup {
    pub fn new(q: &StructureMatrix, m: usize, seed: u64) -> Result<Self> {
        let table = EpsilonTable::sample(q, m, seed, Scheme::Independent)?;
        Self::from_table(table, 4)
    }

    pub fn from_table(table: EpsilonTable, max_len: usize) -> Result<Self> {
        let letters: Vec<Letter> = (0..table.rows())
            .flat_map(|i| (0..table.m()).map(move |k| Letter::new(i, k)))
            .collect();
        if letters.len() > 8 {
            return Err(Error::CapExceeded {
                what: "spin setup generators",
                requested: letters.len(),
                cap: 8,
            });
        }
        Ok(SpinSetup {
            table,
            letters,
            max_len,
        })
    }

    pub fn table(&self) -> &EpsilonTable {
        &self.table
    }

    pub fn generators(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Sample `index` of the ensemble seeded by `seed`.
    pub fn sample(&self, seed: u64, index: usize) -> Result<SpinElement> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64));
        SpinElement::random_gaussian(&self.table, &self.letters, self.max_len, &mut rng)
    }

    /// Same as [`sample`](Self::sample) with the identity coefficient removed.
    pub fn sample_mean_zero(&self, seed: u64, index: usize) -> Result<SpinElement> {
        let f = self.sample(seed, index)?;
        f.sub(&SpinElement::scalar(&self.table, f.trace()))
    }

    /// `1 + s x` for the first generator.
    pub fn two_point(&self, s: f64) -> Result<SpinElement> {
        let x = SpinElement::word(&self.table, &self.letters[..1])?;
        SpinElement::one(&self.table).add(&x.scale(c(s)))
    }

    fn representation(&self) -> Result<Representation> {
        Representation::new(&self.table, &self.letters)
    }
}

/// One evaluated sample of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of an inequality suite at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub p: f64,
    pub r: Option<f64>,
    pub t: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub generators: usize,
    pub worst_ratio: f64,
    pub worst_index: Option<usize>,
    pub witness: Option<String>,
    pub violations: usize,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<SampleRow>,
}

impl InequalityReport {
    fn from_rows(name: &str, p: f64, r: Option<f64>, t: Option<f64>, seed: u64, generators: usize, tolerance: f64, rows: Vec<SampleRow>) -> Self {
        let violations = rows.iter().filter(|row| row.lhs > row.rhs + tolerance).count();
        let worst = rows
            .iter()
            .filter(|row| row.ratio.is_finite())
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio));
        InequalityReport {
            name: name.to_string(),
            p,
            r,
            t,
            seed,
            samples: rows.len(),
            generators,
            worst_ratio: worst.map_or(f64::NAN, |w| w.ratio),
            worst_index: worst.map(|w| w.index),
            witness: None,
            violations,
            tolerance,
            passed: violations == 0,
            rows,
        }
    }
}

/// `(p - 1) / (r - 1)`, with the contraction case `p = r` mapped to 1.
pub fn hypercontractive_threshold(p: f64, r: f64) -> Result<f64> {
    check_p(p)?;
    if !(r >= p) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("need 1 <= p <= r < inf, got p={p}, r={r}")));
    }
    if r == p {
        return Ok(1.0);
    }
    Ok((p - 1.0) / (r - 1.0))
}

/// Smallest time at which `T_t: L_p -> L_r` is a contraction.
pub fn hypercontractive_time(p: f64, r: f64) -> Result<f64> {
    let th = hypercontractive_threshold(p, r)?;
    if th == 0.0 {
        return Err(Error::InvalidParameter("no finite time for p = 1 < r".into()));
    }
    Ok(-0.5 * th.ln())
}

/// Checks `||T_t f||_r <= ||f||_p` on random elements, plus equality at the
/// identity.
pub fn hypercontractivity_check(setup: &SpinSetup, p: f64, r: f64, t: f64, samples: usize, seed: u64) -> Result<InequalityReport> {
    let th = hypercontractive_threshold(p, r)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("semigroup time must be >= 0, got {t}")));
    }
    if (-2.0 * t).exp() > th * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "exp(-2t) = {} exceeds (p-1)/(r-1) = {th}; use the witness search instead",
            (-2.0 * t).exp()
        )));
    }
    let rep = setup.representation()?;
    let rows = (0..samples)
        .into_par_iter()
        .map(|index| {
            let f = setup.sample(seed, index)?;
            let lhs = schatten_norm(&rep.matrix(&ou_spin(&f, t)?)?, r)?;
            let rhs = schatten_norm(&rep.matrix(&f)?, p)?;
            Ok(SampleRow { index, lhs, rhs, ratio: lhs / rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = InequalityReport::from_rows("hypercontractivity", p, Some(r), Some(t), seed, setup.generators(), INEQUALITY_TOL, rows);
    let one = SpinElement::one(setup.table());
    let at_one = schatten_norm(&rep.matrix(&ou_spin(&one, t)?)?, r)?;
    if (at_one - 1.0).abs() > IDENTITY_TOL {
        report.passed = false;
    }
    Ok(report)
}

/// Default grid for the witness search: `s = 10^{-3} .. 10^{0}`.
pub fn witness_grid() -> Vec<f64> {
    (0..=60).map(|k| 10f64.powf(-3.0 + k as f64 / 20.0)).collect()
}

/// Searches `f = 1 + s x` for a violation of `||T_t f||_r <= ||f||_p` when
/// `exp(-2t)` lies above the threshold by the relative `margin`.
pub fn hypercontractivity_witness(setup: &SpinSetup, p: f64, r: f64, t: f64, margin: f64) -> Result<InequalityReport> {
    let th = hypercontractive_threshold(p, r)?;
    if r == p {
        return Err(Error::InvalidParameter(
            "p = r: the threshold is 1 and T_t is a contraction, no witness exists".into(),
        ));
    }
    if !(t >= 0.0) || (-2.0 * t).exp() <= th * (1.0 + margin) {
        return Err(Error::InvalidParameter(format!(
            "exp(-2t) = {} is not above (p-1)/(r-1) = {th} by the margin {margin}",
            (-2.0 * t).exp()
        )));
    }
    let x = SpinElement::word(setup.table(), &setup.letters()[..1])?;
    let rep = Representation::for_elements(&[&x])?;
    let rows = witness_grid()
        .into_iter()
        .enumerate()
        .map(|(index, s)| {
            let f = setup.two_point(s)?;
            let lhs = schatten_norm(&rep.matrix(&ou_spin(&f, t)?)?, r)?;
            let rhs = schatten_norm(&rep.matrix(&f)?, p)?;
            Ok(SampleRow { index, lhs, rhs, ratio: lhs / rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    // the gap must clear rounding noise, not the inequality slack
    let best = rows
        .iter()
        .max_by(|a, b| (a.lhs - a.rhs).total_cmp(&(b.lhs - b.rhs)))
        .cloned()
        .expect("grid is nonempty");
    let found = best.lhs - best.rhs > 1e-13;
    let s = witness_grid()[best.index];
    let mut report = InequalityReport::from_rows("hypercontractivity-witness", p, Some(r), Some(t), 0, 1, 0.0, rows);
    if !found {
        return Err(Error::NoWitness(format!(
            "no s in the grid violates the inequality at p={p}, r={r}, t={t} (best gap {:e})",
            best.lhs - best.rhs
        )));
    }
    report.witness = Some(format!("f = 1 + {s:.6e} x, gap {:.6e}", best.lhs - best.rhs));
    // a violation is the expected outcome here
    report.passed = true;
    Ok(report)
}

/// Both sides of the log-Sobolev inequality for one element:
/// `tau(|f|^2 ln|f|^2) - ||f||_2^2 ln ||f||_2^2` and `2 tau(f A f*)`.
pub fn log_sobolev_sides(f: &SpinElement) -> Result<(f64, f64)> {
    let rhs = 2.0 * f.mul(&number_operator_spin(&f.adjoint()))?.trace().re;
    if f.is_zero() {
        return Ok((0.0, rhs));
    }
    let rep = Representation::for_elements(&[f])?;
    let m = rep.matrix(f)?;
    let eigs = (m.adjoint() * &m).symmetric_eigenvalues();
    let n = m.nrows() as f64;
    let ent: f64 = eigs.iter().map(|&l| if l > 0.0 { l * l.ln() } else { 0.0 }).sum::<f64>() / n;
    let norm2: f64 = eigs.iter().map(|l| l.max(0.0)).sum::<f64>() / n;
    let lhs = ent - if norm2 > 0.0 { norm2 * norm2.ln() } else { 0.0 };
    Ok((lhs, rhs))
}

pub fn log_sobolev_check(setup: &SpinSetup, samples: usize, seed: u64) -> Result<InequalityReport> {
    let rows = (0..samples)
        .into_par_iter()
        .map(|index| {
            let (lhs, rhs) = log_sobolev_sides(&setup.sample(seed, index)?)?;
            Ok(SampleRow { index, lhs, rhs, ratio: lhs / rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InequalityReport::from_rows("log-sobolev", 2.0, None, None, seed, setup.generators(), 1e-8, rows))
}

/// `||delta f||_p` and `||A^{1/2} f||_p` for a mean-zero element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszRatio {
    pub delta_norm: f64,
    pub sqrt_a_norm: f64,
    pub ratio: f64,
}

pub fn riesz_ratio(f: &SpinElement, p: f64) -> Result<RieszRatio> {
    check_p(p)?;
    let mean = f.trace().norm();
    if mean > IDENTITY_TOL {
        return Err(Error::NonzeroMean(mean));
    }
    if f.is_zero() {
        return Err(Error::InvalidParameter("Riesz ratio of the zero element".into()));
    }
    let delta_norm = element_norm(&derivation(f), p)?;
    let sqrt_a_norm = element_norm(&sqrt_number_operator(f), p)?;
    Ok(RieszRatio {
        delta_norm,
        sqrt_a_norm,
        ratio: delta_norm / sqrt_a_norm,
    })
}

/// `||g||_p / max(||E(g*g)^{1/2}||_p, ||E(gg*)^{1/2}||_p)` for `g` in the span
/// of words with exactly one upper letter.
pub fn khintchine_ratio(g: &SpinElement, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("Khintchine ratio needs p >= 2, got {p}")));
    }
    if !in_derivation_span(g) {
        return Err(Error::NotInDerivationImage(g.to_string()));
    }
    if g.is_zero() {
        return Err(Error::InvalidParameter("Khintchine ratio of the zero element".into()));
    }
    let gs = g.adjoint();
    let col = element_root_norm(&conditional_expectation(&gs.mul(g)?)?, p)?;
    let row = element_root_norm(&conditional_expectation(&g.mul(&gs)?)?, p)?;
    Ok(element_norm(g, p)? / col.max(row))
}

/// `||f - tau(f)||_p / max(||Gamma(f,f)^{1/2}||_p, ||Gamma(f*,f*)^{1/2}||_p)`.
pub fn poincare_ratio(f: &SpinElement, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("Poincare ratio needs p >= 2, got {p}")));
    }
    let centered = f.sub(&SpinElement::scalar(f.table(), f.trace()))?;
    if centered.is_zero() {
        return Err(Error::InvalidParameter("Poincare ratio of a constant".into()));
    }
    let fs = f.adjoint();
    let a = element_root_norm(&gradient_form(f, f)?, p)?;
    let b = element_root_norm(&gradient_form(&fs, &fs)?, p)?;
    Ok(element_norm(&centered, p)? / a.max(b))
}

/// Min and max of a ratio over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub name: String,
    pub p: f64,
    pub samples: usize,
    pub seed: u64,
    pub min: f64,
    pub max: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl RatioSummary {
    fn new(name: &str, p: f64, seed: u64, values: Vec<f64>) -> Self {
        RatioSummary {
            name: name.to_string(),
            p,
            samples: values.len(),
            seed,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            values,
        }
    }
}

fn ensemble<F>(samples: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    (0..samples).into_par_iter().map(f).collect()
}

pub fn riesz_study(setup: &SpinSetup, p: f64, samples: usize, seed: u64) -> Result<RatioSummary> {
    let v = ensemble(samples, |i| Ok(riesz_ratio(&setup.sample_mean_zero(seed, i)?, p)?.ratio))?;
    Ok(RatioSummary::new("riesz", p, seed, v))
}

pub fn khintchine_study(setup: &SpinSetup, p: f64, samples: usize, seed: u64) -> Result<RatioSummary> {
    let v = ensemble(samples, |i| khintchine_ratio(&derivation(&setup.sample_mean_zero(seed, i)?), p))?;
    Ok(RatioSummary::new("khintchine", p, seed, v))
}

pub fn poincare_study(setup: &SpinSetup, p: f64, samples: usize, seed: u64) -> Result<RatioSummary> {
    let v = ensemble(samples, |i| poincare_ratio(&setup.sample(seed, i)?, p))?;
    Ok(RatioSummary::new("poincare", p, seed, v))
}

/// One `(m, seed)` point of a CLT convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltRow {
    pub m: usize,
    pub seed: u64,
    pub exact: f64,
    pub expectation: f64,
    pub exact_error: f64,
    pub expectation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltStudy {
    pub labels: Vec<usize>,
    pub limit: f64,
    pub rows: Vec<CltRow>,
    /// Log-log slope of the expectation-mode error against m.
    pub expectation_slope: Option<f64>,
    /// Log-log slope of the root-mean-square exact-mode error against m.
    pub exact_slope: Option<f64>,
    /// Sample variance of the exact-mode value across seeds, per m.
    pub variances: Vec<(usize, f64)>,
    /// Spearman correlation between m and that variance.
    pub variance_spearman: Option<f64>,
}

/// Least-squares slope of `ln y` on `ln x`, ignoring non-positive `y`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// Exact and expectation-mode statistics over an `m` grid and a seed list.
/// Rows are ordered by `(m, seed)`.
pub fn clt_convergence_study(q: &StructureMatrix, labels: &[usize], ms: &[usize], seeds: &[u64], budget: u128) -> Result<CltStudy> {
    let limit = moment(q, labels)?;
    let profile = ExpectationProfile::new(labels, q.dim(), Scheme::Independent, &Default::default())?;
    let mut rows = Vec::with_capacity(ms.len() * seeds.len());
    let mut variances = Vec::new();
    let mut exact_rms = Vec::new();
    let mut expectation_err = Vec::new();
    for &m in ms {
        let expectation = profile.value(q, m)?;
        let exact: Vec<f64> = seeds
            .par_iter()
            .map(|&s| clt_exact(&EpsilonTable::sample(q, m, s, Scheme::Independent)?, labels, budget))
            .collect::<Result<_>>()?;
        for (&seed, &e) in seeds.iter().zip(&exact) {
            rows.push(CltRow {
                m,
                seed,
                exact: e,
                expectation,
                exact_error: (e - limit).abs(),
                expectation_error: (expectation - limit).abs(),
            });
        }
        let n = exact.len() as f64;
        if exact.len() >= 2 {
            let mean = exact.iter().sum::<f64>() / n;
            variances.push((m, exact.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)));
        }
        if !exact.is_empty() {
            exact_rms.push((m as f64, (exact.iter().map(|e| (e - limit).powi(2)).sum::<f64>() / n).sqrt()));
        }
        expectation_err.push((m as f64, (expectation - limit).abs()));
    }
    let mx: Vec<f64> = variances.iter().map(|v| v.0 as f64).collect();
    let vy: Vec<f64> = variances.iter().map(|v| v.1).collect();
    Ok(CltStudy {
        labels: labels.to_vec(),
        limit,
        rows,
        expectation_slope: log_log_slope(&expectation_err),
        exact_slope: log_log_slope(&exact_rms),
        variance_spearman: spearman(&mx, &vy),
        variances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(seed: u64) -> SpinSetup {
        let q = StructureMatrix::from_rows(&[vec![0.3, -0.5], vec![-0.5, 0.7]]).unwrap();
        SpinSetup::new(&q, 3, seed).unwrap()
    }

    #[test]
    fn norm_examples() {
        let s = setup(1);
        let rep = Representation::new(s.table(), s.letters()).unwrap();
        let one = rep.matrix(&SpinElement::one(s.table())).unwrap();
        let x = rep.matrix(&SpinElement::word(s.table(), &s.letters()[2..3]).unwrap()).unwrap();
        for p in [1.0, 1.5, 2.0, 3.7, 8.0] {
            assert!((schatten_norm(&one, p).unwrap() - 1.0).abs() < 1e-14);
            assert!((schatten_norm(&x, p).unwrap() - 1.0).abs() < 1e-14);
            for sv in [0.3, -0.8, 2.0] {
                let f = rep.matrix(&s.two_point(sv).unwrap()).unwrap();
                let want = (((1.0 + sv).abs().powf(p) + (1.0 - sv).abs().powf(p)) / 2.0).powf(1.0 / p);
                assert!((schatten_norm(&f, p).unwrap() - want).abs() < 1e-12);
            }
        }
        assert!(schatten_norm(&one, 0.5).is_err());
    }

    #[test]
    fn two_norm_matches_entries() {
        let s = setup(2);
        let rep = Representation::new(s.table(), s.letters()).unwrap();
        for i in 0..10 {
            let f = rep.matrix(&s.sample(5, i).unwrap()).unwrap();
            assert!((schatten_norm(&f, 2.0).unwrap() - hilbert_schmidt_norm(&f)).abs() < 1e-12 * hilbert_schmidt_norm(&f));
        }
    }

    #[test]
    fn hypercontractivity_small_suite() {
        let s = setup(3);
        let t = hypercontractive_time(2.0, 4.0).unwrap();
        assert!((t - 0.5 * 3f64.ln()).abs() < 1e-15);
        let rep = hypercontractivity_check(&s, 2.0, 4.0, t, 40, 9).unwrap();
        assert!(rep.passed, "{rep:?}");
        let id = hypercontractivity_check(&s, 3.0, 3.0, 0.0, 10, 9).unwrap();
        assert!(id.rows.iter().all(|r| (r.lhs - r.rhs).abs() < 1e-12));
        assert!(hypercontractivity_check(&s, 2.0, 4.0, 0.1, 1, 0).is_err());
    }

    #[test]
    fn threshold_is_tight_for_two_point() {
        let s = setup(4);
        let t = hypercontractive_time(2.0, 4.0).unwrap();
        let x = SpinElement::word(s.table(), &s.letters()[..1]).unwrap();
        let rep = Representation::for_elements(&[&x]).unwrap();
        let mut last = f64::INFINITY;
        for sv in [0.4, 0.2, 0.1, 0.05] {
            let f = s.two_point(sv).unwrap();
            let lhs = schatten_norm(&rep.matrix(&ou_spin(&f, t).unwrap()).unwrap(), 4.0).unwrap();
            let rhs = schatten_norm(&rep.matrix(&f).unwrap(), 2.0).unwrap();
            assert!(lhs <= rhs + 1e-14);
            let rel = (rhs - lhs) / (sv * sv);
            assert!(rel < last);
            last = rel;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn witness_examples() {
        let s = setup(5);
        let t = -0.5 * (1.0f64 / 3.0 + 0.1).ln();
        let w = hypercontractivity_witness(&s, 2.0, 4.0, t, 0.05).unwrap();
        assert!(w.witness.is_some());
        let t6 = -0.5 * (1.1f64 / 5.0).ln();
        assert!(hypercontractivity_witness(&s, 2.0, 6.0, t6, 0.05).is_ok());
        assert!(hypercontractivity_witness(&s, 3.0, 3.0, 0.5, 0.05).is_err());
        assert!(hypercontractivity_witness(&s, 2.0, 4.0, 0.6, 0.05).is_err());
    }

    #[test]
    fn log_sobolev_examples() {
        let s = setup(6);
        let (l, r) = log_sobolev_sides(&SpinElement::one(s.table())).unwrap();
        assert!(l.abs() < 1e-15 && r == 0.0);
        let (l, r) = log_sobolev_sides(&s.two_point(0.01).unwrap()).unwrap();
        assert!((r - 2e-4).abs() < 1e-15);
        assert!(l <= r && l > 0.95 * r, "{l} {r}");
        let rep = log_sobolev_check(&s, 30, 1).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn riesz_examples() {
        let s = setup(7);
        let x = SpinElement::word(s.table(), &s.letters()[..1]).unwrap();
        let r = riesz_ratio(&x, 3.0).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        assert!(matches!(riesz_ratio(&s.two_point(0.5).unwrap(), 2.0), Err(Error::NonzeroMean(_))));
        let small = SpinSetup::from_table(EpsilonTable::sample(&StructureMatrix::constant(2, 0.4).unwrap(), 2, 3, Scheme::Independent).unwrap(), 4).unwrap();
        for i in 0..5 {
            let f = small.sample_mean_zero(1, i).unwrap();
            assert!((riesz_ratio(&f, 2.0).unwrap().ratio - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn khintchine_examples() {
        let s = setup(8);
        let d = s.table().doubled();
        let g = SpinElement::generator(&d, 3, 1).unwrap();
        assert!((khintchine_ratio(&g, 4.0).unwrap() - 1.0).abs() < 1e-12);
        let g2 = SpinElement::word(&d, &[Letter::one_based(3, 1), Letter::one_based(1, 2)]).unwrap();
        assert!((khintchine_ratio(&g2, 4.0).unwrap() - 1.0).abs() < 1e-12);
        let lower = SpinElement::generator(&d, 1, 1).unwrap();
        assert!(matches!(khintchine_ratio(&lower, 4.0), Err(Error::NotInDerivationImage(_))));
    }

    #[test]
    fn poincare_examples() {
        let s = setup(9);
        let x = SpinElement::generator(s.table(), 1, 1).unwrap();
        assert!((poincare_ratio(&x, 4.0).unwrap() - 1.0).abs() < 1e-12);
        let xy = SpinElement::word(s.table(), &[Letter::one_based(1, 1), Letter::one_based(2, 1)]).unwrap();
        assert!((poincare_ratio(&xy, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spearman_and_slope() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[9.0, 5.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[1.0, 1.0]), None);
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0].iter().map(|&m| (m, 3.0 / m)).collect();
        assert!((log_log_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn clt_study_examples() {
        let q = StructureMatrix::from_rows(&[vec![0.5, 0.2], vec![0.2, -0.3]]).unwrap();
        let st = clt_convergence_study(&q, &[1, 1], &[4, 8], &[1, 2], 1_000_000).unwrap();
        assert!(st.rows.iter().all(|r| r.expectation_error < 1e-15));
        // the all-equal-column term equals q_12 as well, so this one is exact
        let st = clt_convergence_study(&q, &[1, 2, 1, 2], &[4, 8], &[1], 1_000_000).unwrap();
        assert!(st.rows.iter().all(|r| r.expectation_error < 1e-15));
        assert_eq!(st.expectation_slope, None);
        let st = clt_convergence_study(&q, &[1, 1, 1, 1], &[4, 8, 16, 32], &[1, 2, 3], 1_000_000).unwrap();
        for r in &st.rows {
            assert!((r.expectation_error - 1.5 / r.m as f64).abs() < 1e-13);
        }
        assert!((st.expectation_slope.unwrap() + 1.0).abs() < 1e-10);
    }
}
