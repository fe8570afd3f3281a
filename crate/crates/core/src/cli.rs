//! Experiment runner behind the `mixedq` binary.
//!
//! Every run is described by a [`RunConfig`]. A JSON config file can supply
//! any field; command-line flags override it. The effective config (with
//! command defaults filled in) is echoed as `#` lines at the top of the CSV
//! output, or under `"config"` in JSON output, so a result file is enough to
//! reproduce itself. Exit codes: 0 pass, 1 verification failure, 2 bad
//! configuration.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    clt_convergence_study, hypercontractive_threshold, hypercontractive_time, hypercontractivity_check,
    hypercontractivity_witness, khintchine_ratio, log_sobolev_check, log_sobolev_sides, poincare_ratio,
    riesz_ratio, InequalityReport, SpinSetup, INEQUALITY_TOL,
};
use crate::error::{Error, Result};
use crate::fock::{check_adjoint, check_commutation, gram, wick_vector_check, FockBasis, FockOperators};
use crate::moments::{moment, StructureMatrix};
use crate::spinmodel::{derivation, derive_seed, DEFAULT_BUDGET};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Fully serializable description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub q_file: Option<String>,
    pub q_json: Option<String>,
    /// Dimension of the random structure matrix used when no Q is given.
    pub n: usize,
    /// Bound on entries of the random structure matrix.
    pub max_q: f64,
    pub seed: u64,
    /// Columns of the spin model (command default when absent).
    pub m: Option<usize>,
    pub ms: Vec<usize>,
    /// Fock degree cutoff.
    pub degree: usize,
    pub labels: Vec<Vec<usize>>,
    pub p: Vec<f64>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub seeds: usize,
    pub samples: usize,
    pub budget: u64,
    pub max_generators: usize,
    pub margin: f64,
    pub corrupt: bool,
    pub witness: bool,
    pub out: Option<String>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            q_file: None,
            q_json: None,
            n: 2,
            max_q: 0.9,
            seed: 42,
            m: None,
            ms: Vec::new(),
            degree: 4,
            labels: Vec::new(),
            p: Vec::new(),
            r: Vec::new(),
            t: Vec::new(),
            seeds: 10,
            samples: 100,
            budget: DEFAULT_BUDGET as u64,
            max_generators: 8,
            margin: 0.05,
            corrupt: false,
            witness: false,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Fills command-dependent defaults.
    pub fn resolved(mut self) -> Result<Self> {
        let (m, p, r): (usize, &[f64], &[f64]) = match self.command.as_str() {
            "moments" | "fock-verify" | "clt" => (3, &[], &[]),
            "hyper" => (3, &[1.5, 2.0, 3.0, 4.0], &[1.5, 2.0, 3.0, 4.0]),
            "logsob" => (3, &[2.0], &[]),
            "riesz" => (2, &[1.5, 2.0, 4.0, 8.0], &[]),
            "poincare" => (3, &[2.0, 4.0, 8.0, 16.0], &[]),
            "khintchine" => (2, &[2.0, 4.0, 8.0], &[]),
            other => return Err(Error::InvalidParameter(format!("unknown command '{other}'"))),
        };
        self.m.get_or_insert(m);
        if self.p.is_empty() {
            self.p = p.to_vec();
        }
        if self.r.is_empty() {
            self.r = r.to_vec();
        }
        if self.command == "clt" {
            if self.ms.is_empty() {
                self.ms = vec![4, 8, 16, 32];
            }
            if self.labels.is_empty() {
                self.labels = vec![vec![1, 1, 1, 1]];
            }
        }
        if self.command == "moments" && self.labels.is_empty() {
            return Err(Error::InvalidParameter("moments needs --labels".into()));
        }
        if !(0.0..=1.0).contains(&self.max_q) {
            return Err(Error::InvalidParameter(format!("max-q {} is outside [0, 1]", self.max_q)));
        }
        Ok(self)
    }

    /// Structure matrix: inline JSON, then file, then a random matrix from
    /// `(n, max_q, seed)`.
    pub fn structure_matrix(&self) -> Result<StructureMatrix> {
        if let Some(s) = &self.q_json {
            return StructureMatrix::from_json_str(s);
        }
        if let Some(f) = &self.q_file {
            return StructureMatrix::load(Path::new(f));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(StructureMatrix::random(self.n, self.max_q, &mut rng))
    }

    fn m(&self) -> usize {
        self.m.unwrap_or(3)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| format!("cannot parse '{t}'")))
        .collect()
}

fn parse_labels(s: &str) -> std::result::Result<Vec<Vec<usize>>, String> {
    s.split(';').map(parse_list::<usize>).collect()
}

#[derive(Debug, Parser)]
#[command(name = "mixedq", version, about = "Mixed q-Gaussian moments, Fock checks and spin-model inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moments for listed label vectors.
    Moments(Flags),
    /// Commutation, adjointness and Wick checks on the truncated Fock space.
    FockVerify(Flags),
    /// Finite-m CLT convergence table.
    Clt(Flags),
    /// Hypercontractivity suite and witness search.
    Hyper(Flags),
    /// Log-Sobolev suite.
    Logsob(Flags),
    /// Riesz-transform ratios.
    Riesz(Flags),
    /// Poincare ratios.
    Poincare(Flags),
    /// Khintchine ratios on the derivation image.
    Khintchine(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    /// JSON file with RunConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    q_file: Option<String>,
    /// Inline structure matrix, e.g. '{"N":1,"entries":[[0.5]]}'.
    #[arg(long)]
    q_json: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    max_q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated m grid.
    #[arg(long)]
    ms: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// Label vectors, e.g. '1,1,1,1;1,2,1,2'.
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    max_generators: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    /// Negative control: build annihilation operators from a perturbed Q.
    #[arg(long)]
    corrupt: bool,
    /// Search for violations above the hypercontractive threshold.
    #[arg(long)]
    witness: bool,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

impl Flags {
    fn into_config(self, command: &str) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json_str(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        c.command = command.to_string();
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f { c.$f = v.into(); }
            )*};
        }
        take!(n, max_q, seed, degree, seeds, samples, budget, max_generators, margin, format);
        let bad = |flag: &str, e: String| Error::InvalidParameter(format!("--{flag}: {e}"));
        if let Some(v) = &self.ms {
            c.ms = parse_list(v).map_err(|e| bad("ms", e))?;
        }
        if let Some(v) = &self.labels {
            c.labels = parse_labels(v).map_err(|e| bad("labels", e))?;
        }
        if let Some(v) = &self.p {
            c.p = parse_list(v).map_err(|e| bad("p", e))?;
        }
        if let Some(v) = &self.r {
            c.r = parse_list(v).map_err(|e| bad("r", e))?;
        }
        if let Some(v) = &self.t {
            c.t = parse_list(v).map_err(|e| bad("t", e))?;
        }
        if self.q_file.is_some() {
            c.q_file = self.q_file;
        }
        if self.q_json.is_some() {
            c.q_json = self.q_json;
        }
        if self.m.is_some() {
            c.m = self.m;
        }
        if self.out.is_some() {
            c.out = self.out;
        }
        c.corrupt |= self.corrupt;
        c.witness |= self.witness;
        c.resolved()
    }
}

/// Tabular result of a command plus summary values and a verdict.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Vec<(String, Value)>,
    pub passed: bool,
}

impl Outcome {
    fn new(columns: &[&'static str]) -> Self {
        Outcome {
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
            passed: true,
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn note(&mut self, key: impl Into<String>, v: Value) {
        self.summary.push((key.into(), v));
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn labels_str(l: &[usize]) -> String {
    l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Renders the outcome with the config echo.
pub fn render(config: &RunConfig, q: &StructureMatrix, outcome: &Outcome) -> Result<Vec<u8>> {
    let cfg = serde_json::to_value(config)?;
    match config.format {
        OutputFormat::Json => {
            let rows: Vec<Value> = outcome
                .rows
                .iter()
                .map(|r| Value::Object(outcome.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                .collect();
            let summary: serde_json::Map<String, Value> = outcome.summary.iter().cloned().collect();
            let doc = json!({
                "config": cfg,
                "q": q.to_json(),
                "passed": outcome.passed,
                "summary": summary,
                "rows": rows,
            });
            let mut s = serde_json::to_vec_pretty(&doc)?;
            s.push(b'\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# mixedq {}", config.command)?;
            if let Value::Object(map) = &cfg {
                for (k, v) in map {
                    writeln!(out, "# config.{k}: {v}")?;
                }
            }
            writeln!(out, "# q: {}", serde_json::to_string(&q.to_json())?)?;
            for (k, v) in &outcome.summary {
                writeln!(out, "# result.{k}: {v}")?;
            }
            writeln!(out, "# passed: {}", outcome.passed)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&outcome.columns)?;
            for r in &outcome.rows {
                w.write_record(r.iter().map(cell))?;
            }
            w.into_inner().map_err(|e| Error::Io(e.to_string()))
        }
    }
}

/// Moves every entry of `q` by 0.5 towards the opposite sign, keeping it in
/// range. Used as a negative control.
pub fn corrupted(q: &StructureMatrix) -> Result<StructureMatrix> {
    let rows: Vec<Vec<f64>> = q
        .rows()
        .into_iter()
        .map(|row| row.into_iter().map(|v| if v >= 0.0 { v - 0.5 } else { v + 0.5 }).collect())
        .collect();
    StructureMatrix::from_rows(&rows)
}

fn cmd_moments(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    let mut o = Outcome::new(&["labels", "d", "moment"]);
    for l in &c.labels {
        o.push(vec![json!(labels_str(l)), json!(l.len()), json!(moment(q, l)?)]);
    }
    Ok(o)
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Vec<usize> {
    let d = rng.random_range(1..=max_len.max(1));
    (0..d).map(|_| rng.random_range(1..=n)).collect()
}

fn cmd_fock_verify(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    if c.degree < 2 {
        return Err(Error::InvalidParameter("fock-verify needs degree >= 2".into()));
    }
    let basis = FockBasis::new(q.dim(), c.degree)?;
    let g = gram(q, &basis)?;
    let ops_q = if c.corrupt { corrupted(q)? } else { q.clone() };
    let ops = FockOperators::build(&ops_q, &basis)?;
    let comm = check_commutation(q, &basis, &ops)?;
    let adj = check_adjoint(&basis, &g, &ops)?;
    let mut o = Outcome::new(&["check", "labels", "max_residual", "violations", "passed"]);
    for (name, rep) in [("commutation", &comm), ("adjoint-form", &adj.form), ("adjoint-quotient", &adj.quotient)] {
        o.push(vec![
            json!(name),
            json!(""),
            json!(rep.max_residual),
            json!(rep.violations.len()),
            json!(rep.passed()),
        ]);
        o.passed &= rep.passed();
        if let Some(v) = rep.violations.first() {
            o.note(format!("{name}.first_violation"), json!(format!("j={} k={} degree={}", v.j, v.k, v.degree)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(c.seed, 1));
    for _ in 0..c.samples {
        let l = random_labels(&mut rng, q.dim(), c.degree);
        let rep = wick_vector_check(q, &basis, &l)?;
        o.passed &= rep.passed;
        o.push(vec![json!("wick"), json!(labels_str(&l)), json!(rep.residual), json!(usize::from(!rep.passed)), json!(rep.passed)]);
    }
    o.note("kernel_dims", json!(adj.kernel_dims));
    o.note("min_eigenvalues", json!(g.min_eigenvalues));
    Ok(o)
}

fn cmd_clt(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    let seeds: Vec<u64> = (0..c.seeds as u64).map(|k| derive_seed(c.seed, k)).collect();
    let mut o = Outcome::new(&["labels", "m", "seed", "exact", "expectation", "exact_error", "expectation_error"]);
    for l in &c.labels {
        let st = clt_convergence_study(q, l, &c.ms, &seeds, c.budget as u128)?;
        let key = labels_str(l).replace(' ', ",");
        o.note(format!("{key}.limit"), json!(st.limit));
        o.note(format!("{key}.expectation_slope"), json!(st.expectation_slope));
        o.note(format!("{key}.exact_rms_slope"), json!(st.exact_slope));
        o.note(format!("{key}.variance_spearman"), json!(st.variance_spearman));
        for r in st.rows {
            o.push(vec![
                json!(labels_str(l)),
                json!(r.m),
                json!(r.seed),
                json!(r.exact),
                json!(r.expectation),
                json!(r.exact_error),
                json!(r.expectation_error),
            ]);
        }
    }
    Ok(o)
}

fn setup(c: &RunConfig, q: &StructureMatrix) -> Result<SpinSetup> {
    let g = q.dim() * c.m();
    if g > c.max_generators {
        return Err(Error::CapExceeded {
            what: "spin generators (N * m)",
            requested: g,
            cap: c.max_generators,
        });
    }
    SpinSetup::new(q, c.m(), c.seed)
}

const SAMPLE_COLUMNS: &[&str] = &["suite", "p", "r", "t", "seed", "index", "lhs", "rhs", "ratio", "ok"];

fn push_report(o: &mut Outcome, suite: &str, rep: &InequalityReport) {
    for row in &rep.rows {
        o.push(vec![
            json!(suite),
            json!(rep.p),
            json!(rep.r),
            json!(rep.t),
            json!(rep.seed),
            json!(row.index),
            json!(row.lhs),
            json!(row.rhs),
            json!(row.ratio),
            json!(row.lhs <= row.rhs + rep.tolerance),
        ]);
    }
}

fn report_key(rep: &InequalityReport) -> String {
    format!("p={}/r={}/t={}", rep.p, rep.r.unwrap_or(f64::NAN), rep.t.unwrap_or(f64::NAN))
}

fn cmd_hyper(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    let s = setup(c, q)?;
    let mut o = Outcome::new(SAMPLE_COLUMNS);
    for &p in &c.p {
        for &r in &c.r {
            if r < p {
                continue;
            }
            let th = hypercontractive_threshold(p, r)?;
            let ts = if c.t.is_empty() {
                let t0 = if th == 1.0 { 0.0 } else { hypercontractive_time(p, r)? };
                vec![t0, t0 + 0.25]
            } else {
                c.t.clone()
            };
            for t in ts {
                let e = (-2.0 * t).exp();
                if e <= th * (1.0 + 1e-12) {
                    let rep = hypercontractivity_check(&s, p, r, t, c.samples, c.seed)?;
                    o.passed &= rep.passed;
                    o.note(format!("{}.violations", report_key(&rep)), json!(rep.violations));
                    o.note(format!("{}.worst_ratio", report_key(&rep)), json!(rep.worst_ratio));
                    push_report(&mut o, "hyper", &rep);
                } else if c.witness && p < r && e > th * (1.0 + c.margin) {
                    match hypercontractivity_witness(&s, p, r, t, c.margin) {
                        Ok(rep) => {
                            o.note(format!("{}.witness", report_key(&rep)), json!(rep.witness));
                            push_report(&mut o, "witness", &rep);
                        }
                        Err(Error::NoWitness(msg)) => {
                            o.passed = false;
                            o.note(format!("p={p}/r={r}/t={t}.witness"), json!(format!("none: {msg}")));
                        }
                        Err(e) => return Err(e),
                    }
                } else {
                    o.note(format!("p={p}/r={r}/t={t}.skipped"), json!("outside the tested region"));
                }
            }
        }
    }
    Ok(o)
}

fn cmd_logsob(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    let s = setup(c, q)?;
    let rep = log_sobolev_check(&s, c.samples, c.seed)?;
    let mut o = Outcome::new(SAMPLE_COLUMNS);
    o.passed = rep.passed;
    o.note("violations", json!(rep.violations));
    o.note("worst_ratio", json!(rep.worst_ratio));
    let (lhs, rhs) = log_sobolev_sides(&s.two_point(0.01)?)?;
    o.note("two_point_0.01_ratio", json!(lhs / rhs));
    push_report(&mut o, "logsob", &rep);
    Ok(o)
}

fn ratio_rows<F>(c: &RunConfig, o: &mut Outcome, suite: &str, eval: F) -> Result<Vec<(f64, Vec<(f64, f64, f64)>)>>
where
    F: Fn(f64, usize) -> Result<(f64, f64, f64)> + Sync + Send,
{
    let mut out = Vec::new();
    for &p in &c.p {
        let vals = (0..c.samples).into_par_iter().map(|i| eval(p, i)).collect::<Result<Vec<_>>>()?;
        for (i, (lhs, rhs, ratio)) in vals.iter().enumerate() {
            o.push(vec![
                json!(suite),
                json!(p),
                Value::Null,
                Value::Null,
                json!(c.seed),
                json!(i),
                json!(lhs),
                json!(rhs),
                json!(ratio),
                Value::Null,
            ]);
        }
        let max = vals.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
        o.note(format!("p={p}.min_ratio"), json!(min));
        o.note(format!("p={p}.max_ratio"), json!(max));
        o.note(format!("p={p}.max_ratio_over_sqrt_p"), json!(max / p.sqrt()));
        out.push((p, vals));
    }
    Ok(out)
}

fn cmd_riesz(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    let s = setup(c, q)?;
    let mut o = Outcome::new(SAMPLE_COLUMNS);
    let res = ratio_rows(c, &mut o, "riesz", |p, i| {
        let r = riesz_ratio(&s.sample_mean_zero(c.seed, i)?, p)?;
        Ok((r.delta_norm, r.sqrt_a_norm, r.ratio))
    })?;
    for (p, vals) in res {
        for v in vals {
            let ok = v.2.is_finite() && v.2 > 0.0 && (p != 2.0 || (v.2 - 1.0).abs() <= INEQUALITY_TOL);
            o.passed &= ok;
        }
    }
    Ok(o)
}

fn cmd_poincare(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    let s = setup(c, q)?;
    let mut o = Outcome::new(SAMPLE_COLUMNS);
    let res = ratio_rows(c, &mut o, "poincare", |p, i| Ok((f64::NAN, f64::NAN, poincare_ratio(&s.sample(c.seed, i)?, p)?)))?;
    for (p, vals) in res {
        for v in vals {
            o.passed &= v.2.is_finite() && (p != 2.0 || v.2 <= 1.0 + INEQUALITY_TOL);
        }
    }
    Ok(o)
}

fn cmd_khintchine(c: &RunConfig, q: &StructureMatrix) -> Result<Outcome> {
    let s = setup(c, q)?;
    let mut o = Outcome::new(SAMPLE_COLUMNS);
    let res = ratio_rows(c, &mut o, "khintchine", |p, i| {
        Ok((f64::NAN, f64::NAN, khintchine_ratio(&derivation(&s.sample_mean_zero(c.seed, i)?), p)?))
    })?;
    for (_, vals) in res {
        for v in vals {
            o.passed &= v.2 >= 1.0 - INEQUALITY_TOL;
        }
    }
    Ok(o)
}

/// Runs a resolved config and returns the rendered output and verdict.
pub fn execute(config: &RunConfig) -> Result<(Vec<u8>, bool)> {
    let q = config.structure_matrix()?;
    let outcome = match config.command.as_str() {
        "moments" => cmd_moments(config, &q),
        "fock-verify" => cmd_fock_verify(config, &q),
        "clt" => cmd_clt(config, &q),
        "hyper" => cmd_hyper(config, &q),
        "logsob" => cmd_logsob(config, &q),
        "riesz" => cmd_riesz(config, &q),
        "poincare" => cmd_poincare(config, &q),
        "khintchine" => cmd_khintchine(config, &q),
        other => Err(Error::InvalidParameter(format!("unknown command '{other}'"))),
    }?;
    Ok((render(config, &q, &outcome)?, outcome.passed))
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let (name, flags) = match cli.command {
        Command::Moments(f) => ("moments", f),
        Command::FockVerify(f) => ("fock-verify", f),
        Command::Clt(f) => ("clt", f),
        Command::Hyper(f) => ("hyper", f),
        Command::Logsob(f) => ("logsob", f),
        Command::Riesz(f) => ("riesz", f),
        Command::Poincare(f) => ("poincare", f),
        Command::Khintchine(f) => ("khintchine", f),
    };
    let config = match flags.into_config(name) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "mixedq: configuration error: {e}");
            return EXIT_CONFIG;
        }
    };
    let (bytes, passed) = match execute(&config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "mixedq {name}: {e}");
            return EXIT_CONFIG;
        }
    };
    let written = match &config.out {
        Some(path) => fs::write(path, &bytes),
        None => stdout.write_all(&bytes),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "mixedq: cannot write output: {e}");
        return EXIT_CONFIG;
    }
    if passed {
        EXIT_PASS
    } else {
        let _ = writeln!(stderr, "mixedq {name}: verification failed");
        EXIT_FAIL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("mixedq").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn moments_command() {
        let (code, out, _) = run_str(&["moments", "--q-json", r#"{"N":2,"entries":[[0,0.3],[0.3,0]]}"#, "--labels", "1,1,1,1;1,2,1,2;1,2,1"]);
        assert_eq!(code, 0);
        let body: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "labels,d,moment");
        assert_eq!(body[1], "1 1 1 1,4,2.0");
        assert_eq!(body[2], "1 2 1 2,4,0.3");
        assert_eq!(body[3], "1 2 1,3,0.0");
        assert!(out.contains("# config.seed: 42"));
    }

    #[test]
    fn bad_config_exits_two() {
        assert_eq!(run_str(&["moments"]).0, 2);
        assert_eq!(run_str(&["moments", "--labels", "1,1", "--q-json", "{"]).0, 2);
        assert_eq!(run_str(&["nonsense"]).0, 2);
        assert_eq!(run_str(&["hyper", "--m", "9"]).0, 2);
        assert_eq!(run_str(&["--help"]).0, 0);
    }

    #[test]
    fn fock_verify_and_negative_control() {
        assert_eq!(run_str(&["fock-verify", "--n", "2", "--degree", "4", "--seed", "42"]).0, 0);
        let (code, out, _) = run_str(&["fock-verify", "--n", "2", "--degree", "4", "--seed", "42", "--corrupt"]);
        assert_eq!(code, 1);
        assert!(out.contains("commutation.first_violation"));
        let fermion = r#"{"N":1,"entries":[[-1]]}"#;
        assert_eq!(run_str(&["fock-verify", "--q-json", fermion, "--degree", "3"]).0, 0);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"seed": 7, "samples": 3, "labels": [[1,1]]}"#).unwrap();
        let flags = Cli::try_parse_from(["mixedq", "moments", "--config", path.to_str().unwrap(), "--seed", "9"]).unwrap();
        let Command::Moments(f) = flags.command else { panic!() };
        let c = f.into_config("moments").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.samples, 3);
        assert_eq!(c.labels, vec![vec![1, 1]]);
        fs::write(&path, r#"{"bogus": 1}"#).unwrap();
        assert_eq!(run_str(&["moments", "--config", path.to_str().unwrap()]).0, 2);
    }

    #[test]
    fn json_output_round_trips_config() {
        let (code, out, _) = run_str(&["moments", "--labels", "1,1", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let cfg: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(cfg.labels, vec![vec![1, 1]]);
        assert_eq!(v["rows"][0]["moment"], json!(1.0));
    }

    #[test]
    fn hyper_degenerate_and_witness() {
        let q = r#"{"N":1,"entries":[[0.5]]}"#;
        assert_eq!(run_str(&["hyper", "--q-json", q, "--m", "2", "--p", "2", "--r", "2", "--t", "0", "--samples", "5"]).0, 0);
        let (code, out, _) = run_str(&["hyper", "--q-json", q, "--m", "2", "--p", "2", "--r", "4", "--t", "0.3", "--witness", "--samples", "5"]);
        assert_eq!(code, 0);
        assert!(out.contains("witness"));
    }
}
