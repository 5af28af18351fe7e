//! Batch front end: configuration, dispatch to the formula or the oracle,
//! `(M, L)` sweeps, the verification suite and JSON/CSV output.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monodromy::{
    contract_Z, contract_column_Z, contract_psi1, contract_psi2, verify_action_identities, ActionIdentity, MAX_ORACLE_N,
};
use crate::partition::{izergin_Z, tsuchiya_Z};
use crate::scalar::{c, rel_err};
use crate::type_one::{psi1_det_form, psi1_double_sum, psi1_homogeneous, psi1_shift_ladder, richardson};
use crate::type_two::psi2;
use crate::vertex::{yang_baxter_residual, ModelParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Threshold for calling a normalization sum equal to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Default pass threshold for `method = both`.
pub const DEFAULT_BOTH_TOL: f64 = 1e-8;

pub const DEFAULT_DRAWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Mode {
    #[serde(rename = "partition")]
    #[value(name = "partition")]
    Partition,
    #[serde(rename = "typeI")]
    #[value(name = "typeI")]
    TypeI,
    #[serde(rename = "typeII")]
    #[value(name = "typeII")]
    TypeII,
    #[serde(rename = "verify")]
    #[value(name = "verify")]
    Verify,
    #[serde(rename = "sweep")]
    #[value(name = "sweep")]
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Formula,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// The correlator tabulated in sweep mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Correlator {
    #[serde(rename = "typeI")]
    #[value(name = "typeI")]
    TypeI,
    #[serde(rename = "typeII")]
    #[value(name = "typeII")]
    TypeII,
}

/// A complex scalar as `[re, im]` or a bare real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexInput> for C64 {
    fn from(z: ComplexInput) -> Self {
        match z {
            ComplexInput::Real(x) => C64::new(x, 0.0),
            ComplexInput::Pair([re, im]) => C64::new(re, im),
        }
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// `0.3` or `[0.3, 0.1]`.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    serde_json::from_str::<ComplexInput>(s.trim()).map(C64::from).map_err(|e| format!("expected a real or [re, im]: {e}"))
}

/// A comma-separated or JSON list of complex scalars given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexList(pub Vec<C64>);

/// `0.1,0.2,0.3` or a JSON array whose entries are reals or `[re, im]`.
pub fn parse_complex_list(s: &str) -> std::result::Result<ComplexList, String> {
    let s = s.trim();
    if s.starts_with('[') {
        return serde_json::from_str::<Vec<ComplexInput>>(s)
            .map(|v| ComplexList(v.into_iter().map(C64::from).collect()))
            .map_err(|e| format!("expected a JSON list of reals or [re, im] pairs: {e}"));
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|e| format!("bad number {x:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(ComplexList)
}

/// Command-line flags; each one overrides the same key of `--config`.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "sixvertex", version, about = "Six-vertex model with domain wall boundary and a reflecting end")]
pub struct Args {
    #[arg(long)]
    pub n: Option<usize>,
    /// Row rapidities, e.g. `0.1,0.2` or `[[0.1,0.05],0.2]`.
    #[arg(long, value_parser = parse_complex_list, allow_hyphen_values = true)]
    pub lambda: Option<ComplexList>,
    /// Column inhomogeneities, same syntax as `--lambda`.
    #[arg(long, value_parser = parse_complex_list, allow_hyphen_values = true)]
    pub nu: Option<ComplexList>,
    /// `λ_j = lambda_base + j·dz`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda_base: Option<C64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub dz: Option<C64>,
    /// `ν_k = nu_base + k·dw`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub nu_base: Option<C64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub dw: Option<C64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub eta: Option<C64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub zeta_plus: Option<C64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    /// Correlator tabulated by `--mode sweep`.
    #[arg(long, value_enum)]
    pub sweep: Option<Correlator>,
    #[arg(long, value_enum)]
    pub out: Option<OutputFormat>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random parameter draws per check in `--mode verify`.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Pass threshold for `--method both` and every hard check of `--mode verify`.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Emit `elapsed_ms` as null so output is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

/// Contents of a `--config` JSON file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "N", alias = "n")]
    pub n: Option<usize>,
    pub lambda: Option<Vec<ComplexInput>>,
    pub nu: Option<Vec<ComplexInput>>,
    pub lambda_base: Option<ComplexInput>,
    pub dz: Option<ComplexInput>,
    pub nu_base: Option<ComplexInput>,
    pub dw: Option<ComplexInput>,
    pub eta: Option<ComplexInput>,
    pub zeta_plus: Option<ComplexInput>,
    pub mode: Option<Mode>,
    pub method: Option<Method>,
    #[serde(rename = "M", alias = "m")]
    pub m: Option<usize>,
    #[serde(rename = "L", alias = "l")]
    pub l: Option<usize>,
    pub sweep: Option<Correlator>,
    pub out: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    pub no_timing: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Explicit { lambda: Vec<C64>, nu: Vec<C64> },
    Shifted { lambda_base: C64, dz: C64, nu_base: C64, dw: C64 },
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub source: Option<ParamSource>,
    pub eta: Option<C64>,
    pub zeta_plus: Option<C64>,
    pub mode: Mode,
    pub method: Method,
    pub m: Option<usize>,
    pub l: Option<usize>,
    pub sweep: Correlator,
    pub out: OutputFormat,
    pub tol: Option<f64>,
    pub seed: u64,
    pub draws: usize,
    pub threads: Option<usize>,
    pub timing: bool,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn list(v: Option<Vec<ComplexInput>>) -> Option<Vec<C64>> {
    v.map(|v| v.into_iter().map(C64::from).collect())
}

impl RunConfig {
    /// Merges flags over the optional config file and validates the result.
    pub fn from_args(args: &Args) -> Result<Self> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        Self::merge(args, file)
    }

    pub fn merge(args: &Args, file: ConfigFile) -> Result<Self> {
        let lambda = args.lambda.clone().map(|l| l.0).or(list(file.lambda));
        let nu = args.nu.clone().map(|l| l.0).or(list(file.nu));
        let lambda_base = args.lambda_base.or(file.lambda_base.map(C64::from));
        let nu_base = args.nu_base.or(file.nu_base.map(C64::from));
        let dz = args.dz.or(file.dz.map(C64::from));
        let dw = args.dw.or(file.dw.map(C64::from));
        let mode = args.mode.or(file.mode).ok_or_else(|| cfg_err("mode is required"))?;

        let source = match (lambda, nu, lambda_base, nu_base) {
            (Some(lambda), Some(nu), None, None) => Some(ParamSource::Explicit { lambda, nu }),
            (None, None, Some(lambda_base), Some(nu_base)) => Some(ParamSource::Shifted {
                lambda_base,
                dz: dz.unwrap_or(c(0.0)),
                nu_base,
                dw: dw.unwrap_or(c(0.0)),
            }),
            (None, None, None, None) => None,
            _ => {
                return Err(cfg_err(
                    "parameters need either both --lambda and --nu lists or both --lambda-base and --nu-base",
                ))
            }
        };
        let n = match (&source, args.n.or(file.n)) {
            (Some(ParamSource::Explicit { lambda, .. }), None) => lambda.len(),
            (_, Some(n)) => n,
            (_, None) if mode == Mode::Verify => 0,
            _ => return Err(cfg_err("N is required with --lambda-base/--nu-base")),
        };
        let cfg = Self {
            n,
            source,
            eta: args.eta.or(file.eta.map(C64::from)),
            zeta_plus: args.zeta_plus.or(file.zeta_plus.map(C64::from)),
            mode,
            method: args.method.or(file.method).unwrap_or(Method::Formula),
            m: args.m.or(file.m),
            l: args.l.or(file.l),
            sweep: args.sweep.or(file.sweep).unwrap_or(Correlator::TypeII),
            out: args.out.or(file.out).unwrap_or(OutputFormat::Json),
            tol: args.tol.or(file.tol),
            seed: args.seed.or(file.seed).unwrap_or(0),
            draws: args.draws.or(file.draws).unwrap_or(DEFAULT_DRAWS),
            threads: args.threads.or(file.threads),
            timing: !(args.no_timing || file.no_timing.unwrap_or(false)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(cfg_err(format!("tol must be positive, got {t}")));
            }
        }
        if self.threads == Some(0) {
            return Err(cfg_err("threads must be at least 1"));
        }
        if self.mode == Mode::Verify {
            return Ok(());
        }
        if self.n == 0 {
            return Err(cfg_err("N must be at least 1"));
        }
        match &self.source {
            None => return Err(cfg_err("parameters are required: --lambda/--nu or --lambda-base/--nu-base")),
            Some(ParamSource::Explicit { lambda, nu }) => {
                if lambda.len() != self.n || nu.len() != self.n {
                    return Err(cfg_err(format!(
                        "N = {} but {} lambdas and {} nus were given",
                        self.n,
                        lambda.len(),
                        nu.len()
                    )));
                }
            }
            Some(ParamSource::Shifted { .. }) => {}
        }
        if self.eta.is_none() {
            return Err(cfg_err("eta is required"));
        }
        if self.zeta_plus.is_none() {
            return Err(cfg_err("zeta_plus is required"));
        }
        if self.method != Method::Formula && self.n > MAX_ORACLE_N {
            return Err(cfg_err(format!("the oracle supports N <= {MAX_ORACLE_N}, got N = {}", self.n)));
        }
        let need = |x: Option<usize>, name: &str| x.ok_or_else(|| cfg_err(format!("{name} is required for mode {:?}", self.mode)));
        match self.mode {
            Mode::TypeI => {
                let (m, l) = (need(self.m, "M")?, need(self.l, "L")?);
                if !(1 <= m && m < l && l <= self.n) {
                    return Err(cfg_err(format!("typeI requires 1 <= M < L <= N, got M = {m}, L = {l}, N = {}", self.n)));
                }
            }
            Mode::TypeII => {
                let (m, l) = (need(self.m, "M")?, need(self.l, "L")?);
                if !(1 <= m && m < self.n) || !(1 <= l && l <= self.n) {
                    return Err(cfg_err(format!(
                        "typeII requires 1 <= M <= N-1 and 1 <= L <= N, got M = {m}, L = {l}, N = {}",
                        self.n
                    )));
                }
            }
            Mode::Sweep if self.n < 2 => return Err(cfg_err("sweep requires N >= 2")),
            _ => {}
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let (eta, zeta) = match (self.eta, self.zeta_plus) {
            (Some(e), Some(z)) => (e, z),
            _ => return Err(cfg_err("eta and zeta_plus are required")),
        };
        match &self.source {
            Some(ParamSource::Explicit { lambda, nu }) => ModelParams::new(lambda.clone(), nu.clone(), eta, zeta),
            Some(ParamSource::Shifted { lambda_base, dz, nu_base, dw }) => {
                ModelParams::shifted(self.n, *lambda_base, *dz, *nu_base, *dw, eta, zeta)
            }
            None => Err(cfg_err("parameters are required")),
        }
    }

    /// Pass threshold for `method = both`.
    pub fn both_tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_BOTH_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub lambda: Vec<[f64; 2]>,
    pub nu: Vec<[f64; 2]>,
    pub eta: [f64; 2],
    pub zeta_plus: [f64; 2],
}

impl From<&ModelParams> for ParamsEcho {
    fn from(p: &ModelParams) -> Self {
        Self {
            lambda: p.lambdas.iter().copied().map(pair).collect(),
            nu: p.nus.iter().copied().map(pair).collect(),
            eta: pair(p.eta),
            zeta_plus: pair(p.zeta_plus),
        }
    }
}

/// One evaluated quantity. `residual` is the relative difference between
/// formula and oracle and is present exactly when `method = both`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorResult {
    pub mode: Mode,
    #[serde(rename = "N")]
    pub n: usize,
    pub params: ParamsEcho,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub value: [f64; 2],
    pub method: Method,
    pub residual: Option<f64>,
    pub elapsed_ms: Option<f64>,
}

impl CorrelatorResult {
    pub fn value(&self) -> C64 {
        C64::new(self.value[0], self.value[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedSum {
    pub index: usize,
    pub value: [f64; 2],
}

/// All valid `(M, L)` for one correlator, with row sums over `L`, column
/// sums over `M` and the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub mode: Mode,
    pub correlator: Correlator,
    #[serde(rename = "N")]
    pub n: usize,
    pub params: ParamsEcho,
    pub method: Method,
    pub entries: Vec<CorrelatorResult>,
    pub row_sums: Vec<IndexedSum>,
    pub column_sums: Vec<IndexedSum>,
    pub total: [f64; 2],
    /// `|total − 1| < 1e−9`; reported, never enforced.
    pub total_is_one: bool,
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub detail: String,
    pub residual: f64,
    pub tol: f64,
    /// Soft rows are reported but do not affect `passed`.
    pub hard: bool,
    pub passed: bool,
    pub value: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub seed: u64,
    pub draws: usize,
    pub rows: Vec<CheckRow>,
    pub passed: bool,
    pub elapsed_ms: Option<f64>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| r.hard && !r.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Output {
    Single(CorrelatorResult),
    Sweep(SweepTable),
    Verify(VerifyReport),
}

impl Output {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("output is plain data")
    }

    /// `m,l,re,im,residual` per `(M, L)`; sweep sums use `*` for the summed index.
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let res = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        let num = |x: f64| format!("{x:e}");
        let mut rows: Vec<Vec<String>> = Vec::new();
        let entry = |r: &CorrelatorResult| vec![opt(r.m), opt(r.l), num(r.value[0]), num(r.value[1]), res(r.residual)];
        let header = |cols: &[&str]| cols.iter().map(|c| c.to_string()).collect::<Vec<_>>();
        match self {
            Output::Single(r) => {
                rows.push(header(&["m", "l", "re", "im", "residual"]));
                rows.push(entry(r));
            }
            Output::Sweep(t) => {
                rows.push(header(&["m", "l", "re", "im", "residual"]));
                rows.extend(t.entries.iter().map(entry));
                let sum = |m: String, l: String, v: [f64; 2]| vec![m, l, num(v[0]), num(v[1]), String::new()];
                rows.extend(t.row_sums.iter().map(|r| sum(r.index.to_string(), "*".into(), r.value)));
                rows.extend(t.column_sums.iter().map(|r| sum("*".into(), r.index.to_string(), r.value)));
                rows.push(sum("*".into(), "*".into(), t.total));
            }
            Output::Verify(v) => {
                rows.push(header(&["check", "n", "detail", "residual", "tol", "hard", "passed"]));
                rows.extend(v.rows.iter().map(|r| {
                    vec![r.check.clone(), opt(r.n), r.detail.clone(), num(r.residual), num(r.tol), r.hard.to_string(), r.passed.to_string()]
                }));
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.write_record(&row).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 fields")
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    /// Exit status given the run's `method = both` threshold.
    pub fn exit_code(&self, tol: f64) -> i32 {
        let bad = |r: &CorrelatorResult| r.residual.is_some_and(|x| x.is_nan() || x >= tol);
        let failed = match self {
            Output::Single(r) => bad(r),
            Output::Sweep(t) => t.entries.iter().any(bad),
            Output::Verify(v) => !v.passed,
        };
        if failed {
            EXIT_VERIFICATION
        } else {
            EXIT_OK
        }
    }
}

/// Exit status for an error.
pub fn exit_code_for(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn is_homogeneous(p: &ModelParams) -> bool {
    p.lambdas.iter().all(|&x| x == p.lambdas[0]) && p.nus.iter().all(|&x| x == p.nus[0])
}

fn formula(p: &ModelParams, mode: Mode, m: usize, l: usize) -> Result<C64> {
    match mode {
        Mode::Partition => tsuchiya_Z(p),
        Mode::TypeI if p.n() >= 2 && is_homogeneous(p) => {
            psi1_homogeneous(p.lambdas[0], p.nus[0], p.eta, p.zeta_plus, p.n(), m, l)
        }
        Mode::TypeI => psi1_double_sum(p, m, l),
        Mode::TypeII => psi2(p, m, l),
        _ => unreachable!("formula is only defined for partition, typeI and typeII"),
    }
}

fn oracle(p: &ModelParams, mode: Mode, m: usize, l: usize) -> Result<C64> {
    match mode {
        Mode::Partition => contract_Z(p),
        Mode::TypeI => Ok(contract_psi1(p, m, l)? / contract_Z(p)?),
        Mode::TypeII => Ok(contract_psi2(p, m, l)? / contract_Z(p)?),
        _ => unreachable!("oracle is only defined for partition, typeI and typeII"),
    }
}

fn elapsed(start: Instant, timing: bool) -> Option<f64> {
    timing.then(|| start.elapsed().as_secs_f64() * 1e3)
}

fn evaluate(p: &ModelParams, mode: Mode, method: Method, m: Option<usize>, l: Option<usize>, timing: bool) -> Result<CorrelatorResult> {
    let start = Instant::now();
    let (mi, li) = (m.unwrap_or(0), l.unwrap_or(0));
    let (value, residual) = match method {
        Method::Formula => (formula(p, mode, mi, li)?, None),
        Method::Oracle => (oracle(p, mode, mi, li)?, None),
        Method::Both => {
            let f = formula(p, mode, mi, li)?;
            let o = oracle(p, mode, mi, li)?;
            let r = if f == o { 0.0 } else { rel_err(f, o) };
            (f, Some(r))
        }
    };
    Ok(CorrelatorResult {
        mode,
        n: p.n(),
        params: p.into(),
        m,
        l,
        value: pair(value),
        method,
        residual,
        elapsed_ms: elapsed(start, timing),
    })
}

fn sweep(p: &ModelParams, correlator: Correlator, method: Method, timing: bool) -> Result<SweepTable> {
    let start = Instant::now();
    let n = p.n();
    let (mode, pairs): (Mode, Vec<(usize, usize)>) = match correlator {
        Correlator::TypeI => (Mode::TypeI, (1..n).flat_map(|m| ((m + 1)..=n).map(move |l| (m, l))).collect()),
        Correlator::TypeII => (Mode::TypeII, (1..n).flat_map(|m| (1..=n).map(move |l| (m, l))).collect()),
    };
    let entries = pairs
        .iter()
        .map(|&(m, l)| evaluate(p, mode, method, Some(m), Some(l), timing))
        .collect::<Result<Vec<_>>>()?;
    let sum_by = |key: &dyn Fn(&CorrelatorResult) -> usize, range: std::ops::RangeInclusive<usize>| {
        range
            .map(|i| IndexedSum {
                index: i,
                value: pair(entries.iter().filter(|r| key(r) == i).map(CorrelatorResult::value).sum()),
            })
            .collect::<Vec<_>>()
    };
    let row_sums = sum_by(&|r| r.m.unwrap_or(0), 1..=n - 1);
    let column_sums = sum_by(&|r| r.l.unwrap_or(0), 1..=n);
    let total: C64 = entries.iter().map(CorrelatorResult::value).sum();
    Ok(SweepTable {
        mode: Mode::Sweep,
        correlator,
        n,
        params: p.into(),
        method,
        entries,
        row_sums,
        column_sums,
        total: pair(total),
        total_is_one: (total - 1.0).norm() < NORMALIZATION_TOL,
        elapsed_ms: elapsed(start, timing),
    })
}

/// Executes a validated configuration.
pub fn run(cfg: &RunConfig) -> Result<Output> {
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| cfg_err(format!("cannot build a {t}-thread pool: {e}")))?
            .install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &RunConfig) -> Result<Output> {
    match cfg.mode {
        Mode::Verify => {
            let start = Instant::now();
            let mut report = verify_all(cfg.seed, cfg.draws, cfg.tol);
            report.elapsed_ms = elapsed(start, cfg.timing);
            Ok(Output::Verify(report))
        }
        Mode::Sweep => Ok(Output::Sweep(sweep(&cfg.params()?, cfg.sweep, cfg.method, cfg.timing)?)),
        mode => {
            let p = cfg.params()?;
            let (m, l) = if mode == Mode::Partition { (None, None) } else { (cfg.m, cfg.l) };
            Ok(Output::Single(evaluate(&p, mode, cfg.method, m, l, cfg.timing)?))
        }
    }
}

/// Tolerances of the hard checks in [`verify_all`].
pub mod tolerances {
    pub const YANG_BAXTER: f64 = 1e-12;
    pub const ACTION: f64 = 1e-9;
    pub const PARTITION: f64 = 1e-9;
    pub const IZERGIN: f64 = 1e-10;
    pub const PSI1: f64 = 1e-8;
    pub const PSI1_DET_FORM: f64 = 1e-10;
    pub const HOMOGENEOUS: f64 = 1e-6;
    pub const PSI2: f64 = 1e-8;
}

const VERIFY_ETA: f64 = 0.5;
const VERIFY_ZETA: f64 = 0.8;

/// Fixed parameters used by the deterministic rows.
pub fn reference_params(n: usize) -> ModelParams {
    let lam = [0.23, 0.41, 0.67, 0.89];
    let nu = [0.31, 0.52, 0.74, 0.95];
    ModelParams::real(&lam[..n], &nu[..n], VERIFY_ETA, VERIFY_ZETA).expect("n in 1..=4")
}

/// Real parameters with `λ_j, ν_k` uniform in `(0.1, 1.0)`, `η = 0.5`, `ζ₊ = 0.8`.
pub fn random_params(rng: &mut ChaCha8Rng, n: usize) -> ModelParams {
    let lam: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let nu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    ModelParams::real(&lam, &nu, VERIFY_ETA, VERIFY_ZETA).expect("equal lengths")
}

/// Parameters with every vertex and boundary weight positive at `η = 0.5`:
/// `λ_j ∈ (0, η/2)`, `ν_k < −λ_j − η/2` and `ζ₊ > λ_j + η/2`.
pub fn positive_params(n: usize) -> ModelParams {
    let lam: Vec<f64> = (0..n).map(|j| 0.05 + 0.04 * j as f64).collect();
    let nu: Vec<f64> = (0..n).map(|k| -0.45 - 0.04 * k as f64).collect();
    ModelParams::real(&lam, &nu, VERIFY_ETA, VERIFY_ZETA).expect("equal lengths")
}

struct Suite {
    rows: Vec<CheckRow>,
    tol: Option<f64>,
}

impl Suite {
    fn push(&mut self, check: &str, n: Option<usize>, detail: String, outcome: Result<(f64, Option<C64>)>, tol: f64) {
        let tol = self.tol.unwrap_or(tol);
        let (residual, value, detail) = match outcome {
            Ok((r, v)) => (r, v, detail),
            Err(e) => (f64::INFINITY, None, format!("{detail}; error: {e}")),
        };
        self.rows.push(CheckRow { check: check.into(), n, detail, residual, tol, hard: true, passed: residual < tol, value: value.map(pair) });
    }

    fn soft(&mut self, check: &str, n: Option<usize>, detail: String, outcome: Result<C64>, target: C64, tol: f64) {
        let (residual, value, detail) = match outcome {
            Ok(v) => ((v - target).norm(), Some(pair(v)), detail),
            Err(e) => (f64::INFINITY, None, format!("{detail}; error: {e}")),
        };
        self.rows.push(CheckRow { check: check.into(), n, detail, residual, tol, hard: false, passed: residual < tol, value });
    }
}

fn compare(a: Result<C64>, b: Result<C64>) -> Result<(f64, Option<C64>)> {
    let (a, b) = (a?, b?);
    Ok((if a == b { 0.0 } else { rel_err(a, b) }, Some(a)))
}

fn psi1_rows(s: &mut Suite, p: &ModelParams, tag: &str) {
    let n = p.n();
    let z = contract_Z(p);
    for m in 1..n {
        for l in (m + 1)..=n {
            let detail = format!("{tag} M={m} L={l}");
            let oracle = z.clone().and_then(|z| Ok(contract_psi1(p, m, l)? / z));
            s.push("psi1_vs_oracle", Some(n), detail.clone(), compare(psi1_double_sum(p, m, l), oracle), tolerances::PSI1);
            let base = p.lambdas[0];
            let shifts: Vec<C64> = p.lambdas.iter().map(|&x| x - base).collect();
            let det = psi1_det_form(base, &shifts, &p.nus, p.eta, p.zeta_plus, m, l);
            s.push("psi1_det_form", Some(n), detail, compare(det, psi1_double_sum(p, m, l)), tolerances::PSI1_DET_FORM);
        }
    }
}

fn psi2_rows(s: &mut Suite, p: &ModelParams, tag: &str) {
    let n = p.n();
    let z = contract_Z(p);
    for m in 1..n {
        for l in 1..=n {
            let oracle = z.clone().and_then(|z| Ok(contract_psi2(p, m, l)? / z));
            s.push("psi2_vs_oracle", Some(n), format!("{tag} M={m} L={l}"), compare(psi2(p, m, l), oracle), tolerances::PSI2);
        }
    }
}

fn identity_rows(s: &mut Suite, p: &ModelParams, tag: &str) {
    let n = p.n();
    for which in ActionIdentity::ALL {
        for i in 1..=n {
            let r = verify_action_identities(p, which, i).map(|r| (r, None));
            s.push(which.name(), Some(n), format!("{tag} i={i}"), r, tolerances::ACTION);
        }
    }
}

fn partition_rows(s: &mut Suite, p: &ModelParams, tag: &str) {
    let n = p.n();
    s.push("Z_vs_oracle", Some(n), tag.into(), compare(tsuchiya_Z(p), contract_Z(p)), tolerances::PARTITION);
    if n <= 3 {
        let iz = izergin_Z(&p.lambdas, &p.nus, p.eta);
        let col = contract_column_Z(&p.lambdas, &p.nus, p.eta);
        s.push("izergin_vs_column", Some(n), tag.into(), compare(iz, col), tolerances::IZERGIN);
    }
}

/// Runs every identity: Yang–Baxter, the four action identities, both
/// partition functions, Type I in all forms and Type II. Each family gets a
/// row at fixed parameters plus `draws` rows at parameters drawn from `seed`.
/// `tol` replaces every hard tolerance. Normalization sums are soft rows.
pub fn verify_all(seed: u64, draws: usize, tol: Option<f64>) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Suite { rows: Vec::new(), tol };

    s.push("yang_baxter", None, "fixed (0.3, 0.7)".into(), yang_baxter_residual(c(0.3), c(0.7), c(VERIFY_ETA)).map(|r| (r, None)), tolerances::YANG_BAXTER);
    for d in 0..draws {
        let (a, b) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
        let r = yang_baxter_residual(c(a), c(b), c(VERIFY_ETA)).map(|r| (r, None));
        s.push("yang_baxter", None, format!("draw {d}"), r, tolerances::YANG_BAXTER);
    }

    for n in 1..=4 {
        let p = reference_params(n);
        partition_rows(&mut s, &p, "fixed");
        if n >= 2 {
            identity_rows(&mut s, &p, "fixed");
            psi1_rows(&mut s, &p, "fixed");
            psi2_rows(&mut s, &p, "fixed");
        }
    }
    for d in 0..draws {
        for n in 1..=4 {
            let p = random_params(&mut rng, n);
            let tag = format!("draw {d}");
            partition_rows(&mut s, &p, &tag);
            if n >= 2 {
                identity_rows(&mut s, &p, &tag);
                psi1_rows(&mut s, &p, &tag);
                psi2_rows(&mut s, &p, &tag);
            }
        }
    }

    let (lam, nu) = (c(0.3), c(0.45));
    for n in 2..=3 {
        for m in 1..n {
            for l in (m + 1)..=n {
                let h = psi1_homogeneous(lam, nu, c(VERIFY_ETA), c(VERIFY_ZETA), n, m, l);
                let detail = format!("λ=0.3 ν=0.45 M={m} L={l}");
                let five = psi1_shift_ladder(lam, nu, c(VERIFY_ETA), c(VERIFY_ZETA), n, m, l, 1e-2, 5).map(|v| richardson(&v));
                s.push("psi1_homogeneous_richardson5", Some(n), detail.clone(), compare(h.clone(), five), tolerances::HOMOGENEOUS);
                let three = psi1_shift_ladder(lam, nu, c(VERIFY_ETA), c(VERIFY_ZETA), n, m, l, 1e-2, 3).map(|v| richardson(&v));
                let r = compare(h, three).map(|(r, _)| c(r));
                s.soft("psi1_homogeneous_richardson3", Some(n), detail, r, c(0.0), tolerances::HOMOGENEOUS);
            }
        }
    }

    for n in 2..=3 {
        let p = positive_params(n);
        let z = contract_Z(&p);
        let sum1 = z.clone().and_then(|z| {
            let mut t = c(0.0);
            for m in 1..n {
                for l in (m + 1)..=n {
                    t += contract_psi1(&p, m, l)? / z;
                }
            }
            Ok(t)
        });
        s.soft("psi1_normalization", Some(n), "oracle, positive weights".into(), sum1, c(1.0), NORMALIZATION_TOL);
        let sum2 = z.and_then(|z| {
            let mut t = c(0.0);
            for m in 1..n {
                for l in 1..=n {
                    t += contract_psi2(&p, m, l)? / z;
                }
            }
            Ok(t)
        });
        s.soft("psi2_normalization", Some(n), "oracle, positive weights".into(), sum2, c(1.0), NORMALIZATION_TOL);
    }

    let passed = s.rows.iter().all(|r| !r.hard || r.passed);
    VerifyReport { mode: Mode::Verify, seed, draws, rows: s.rows, passed, elapsed_ms: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Args {
        Args::parse_from(std::iter::once("sixvertex").chain(list.iter().copied()))
    }

    #[test]
    fn parses_complex_forms() {
        assert_eq!(parse_complex("0.5").unwrap(), c(0.5));
        assert_eq!(parse_complex("[0.5, -0.1]").unwrap(), C64::new(0.5, -0.1));
        assert_eq!(parse_complex_list("0.1, 0.2").unwrap().0, vec![c(0.1), c(0.2)]);
        assert_eq!(parse_complex_list("[0.1, [0.2, 0.3]]").unwrap().0, vec![c(0.1), C64::new(0.2, 0.3)]);
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn partition_both_small_residual() {
        let a = args(&["--mode", "partition", "--lambda", "0.3,0.7", "--nu", "0.2,0.5", "--eta", "0.5", "--zeta-plus", "0.8", "--method", "both"]);
        let cfg = RunConfig::from_args(&a).unwrap();
        let Output::Single(r) = run(&cfg).unwrap() else { panic!("single result expected") };
        assert!(r.residual.unwrap() < 1e-9);
        assert_eq!((r.m, r.l), (None, None));
    }

    #[test]
    fn type_one_ordering_is_config_error() {
        let a = args(&["--mode", "typeI", "--n", "3", "--lambda-base", "0.3", "--dz", "0.1", "--nu-base", "0.2", "--dw", "0.1", "--eta", "0.5", "--zeta-plus", "0.8", "--m", "2", "--l", "1"]);
        let e = RunConfig::from_args(&a).unwrap_err();
        assert!(matches!(e, Error::Config(ref s) if s.contains("M < L")));
        assert_eq!(exit_code_for(&e), EXIT_CONFIG);
    }

    #[test]
    fn sweep_type_two_table() {
        let a = args(&["--mode", "sweep", "--sweep", "typeII", "--lambda", "0.3,0.5,0.8", "--nu", "0.2,0.6,0.9", "--eta", "0.5", "--zeta-plus", "0.8", "--method", "both"]);
        let cfg = RunConfig::from_args(&a).unwrap();
        let out = run(&cfg).unwrap();
        let Output::Sweep(t) = &out else { panic!("sweep expected") };
        assert_eq!(t.entries.len(), 2 * 3);
        assert_eq!((t.row_sums.len(), t.column_sums.len()), (2, 3));
        let rows: C64 = t.row_sums.iter().map(|r| C64::new(r.value[0], r.value[1])).sum();
        assert!(rel_err(rows, C64::new(t.total[0], t.total[1])) < 1e-12);
        assert_eq!(out.exit_code(cfg.both_tol()), EXIT_OK);
        assert_eq!(out.to_csv().lines().count(), 1 + 6 + 2 + 3 + 1);
    }

    #[test]
    fn json_round_trip_and_field_names() {
        let a = args(&["--mode", "typeII", "--lambda", "[0.3, [0.5, 0.05]]", "--nu", "0.2,0.6", "--eta", "0.5", "--zeta-plus", "0.8", "--m", "1", "--l", "2", "--no-timing"]);
        let out = run(&RunConfig::from_args(&a).unwrap()).unwrap();
        let json = out.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["mode", "N", "params", "M", "L", "value", "method", "residual", "elapsed_ms"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        for key in ["lambda", "nu", "eta", "zeta_plus"] {
            assert!(v["params"].get(key).is_some(), "missing params.{key}");
        }
        assert_eq!(v["mode"], "typeII");
        assert_eq!(v["params"]["lambda"][1], serde_json::json!([0.5, 0.05]));
        let back: CorrelatorResult = serde_json::from_str(&json).unwrap();
        assert_eq!(Output::Single(back), out);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join(format!("sixvertex-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(&path, r#"{"mode": "typeI", "N": 3, "lambda_base": 0.3, "dz": 0.1, "nu_base": [0.2, 0], "dw": 0.13, "eta": 0.5, "zeta_plus": 0.8, "M": 1, "L": 3}"#).unwrap();
        let a = args(&["--config", path.to_str().unwrap(), "--l", "2"]);
        let cfg = RunConfig::from_args(&a).unwrap();
        assert_eq!((cfg.mode, cfg.n, cfg.m, cfg.l), (Mode::TypeI, 3, Some(1), Some(2)));
        std::fs::write(&path, r#"{"mode": "typeI", "bogus": 1}"#).unwrap();
        assert!(matches!(RunConfig::from_args(&a), Err(Error::Config(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn homogeneous_type_one_uses_limit() {
        let a = args(&["--mode", "typeI", "--n", "3", "--lambda-base", "0.3", "--nu-base", "0.45", "--eta", "0.5", "--zeta-plus", "0.8", "--m", "1", "--l", "2", "--method", "both"]);
        let Output::Single(r) = run(&RunConfig::from_args(&a).unwrap()).unwrap() else { panic!() };
        assert!(r.residual.unwrap() < 1e-8, "{:?}", r.residual);
    }

    #[test]
    fn singular_parameters_exit_code() {
        let a = args(&["--mode", "partition", "--lambda", "0.3,0.3", "--nu", "0.2,0.5", "--eta", "0.5", "--zeta-plus", "0.8"]);
        let e = run(&RunConfig::from_args(&a).unwrap()).unwrap_err();
        assert_eq!(exit_code_for(&e), EXIT_NUMERICAL);
    }

    #[test]
    fn missing_and_conflicting_inputs() {
        let base = ["--eta", "0.5", "--zeta-plus", "0.8"];
        let with = |extra: &[&str]| RunConfig::from_args(&args(&[extra, &base[..]].concat()));
        assert!(with(&["--mode", "partition"]).is_err());
        assert!(with(&["--mode", "partition", "--lambda", "0.1", "--nu-base", "0.2"]).is_err());
        assert!(with(&["--mode", "partition", "--lambda", "0.1,0.2", "--nu", "0.3"]).is_err());
        assert!(with(&["--mode", "typeII", "--lambda", "0.1,0.2", "--nu", "0.3,0.4", "--m", "2", "--l", "1"]).is_err());
        assert!(with(&["--mode", "verify", "--threads", "0"]).is_err());
        assert!(with(&["--mode", "verify"]).is_ok());
    }

    #[test]
    fn verify_without_draws_runs_fixed_rows() {
        let r = verify_all(0, 0, None);
        assert!(r.rows.iter().all(|row| !row.detail.starts_with("draw")));
        assert!(r.rows.iter().any(|row| row.check == "psi2_vs_oracle"));
        let fails: Vec<_> = r.failures().collect();
        assert!(r.passed, "{fails:#?}");
    }

    #[test]
    fn tight_tolerance_fails_verification() {
        let r = verify_all(0, 0, Some(1e-30));
        assert!(!r.passed);
        assert_eq!(Output::Verify(r).exit_code(1e-8), EXIT_VERIFICATION);
    }
}
