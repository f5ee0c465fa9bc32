//! Batch front end: reads JSON inputs, dispatches, and writes deterministic
//! JSON (or CSV) reports.
//!
//! Exit codes: 0 success, 1 verification failure (including an unmet gap
//! condition), 2 input error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dyadic::{DyadicIndex, DyadicStep};
use crate::error::Error;
use crate::gen::{self, Gen};
use crate::octahedral::{
    disjoint_spike_family, dual_segment, ell1_bounds, greedy_asymptotic_ell1, nonsmooth_pairings, SpikeFamily,
};
use crate::probes::{midpoint_defect, perturbation_l1_chain, slice_diameter_lb, strong_extreme_failure, write_slice_csv};
use crate::rational::{self, int, pow2, rat, Rational};
use crate::renorm::{norm_report, triangle_equality_case};
use crate::selftest::{self, Counts};
use crate::ured::{segment_check, ured_recursion, verify_claim};
use crate::witness::{d2p_witness, split_pair, WeakNbhd};

#[derive(Debug, Clone, Parser)]
#[command(name = "l1renorm", version, about = "Exact computations in L1[0,1] under a strictly convex diameter-2 renorming")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// JSON input file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Report path (stdout when absent; `.csv` selects CSV for `probe slice`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for generated inputs and randomized trials.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Rational `p/q`, or a comma-separated list for schedules.
    #[arg(long, global = true)]
    pub eps: Option<String>,
    /// Rational `p/q`, or a comma-separated list of deltas for `ell1`.
    #[arg(long, global = true)]
    pub delta: Option<String>,
    #[arg(long, global = true)]
    pub level: Option<u32>,
    /// Rational precision for near-unit scaling of generated centers.
    #[arg(long, global = true)]
    pub prec: Option<String>,
    #[arg(long = "float-digits", global = true, default_value_t = 12)]
    pub float_digits: u32,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact ⦀f⦀², ‖f‖₁, ‖f‖∞ of a step function.
    Norm,
    /// The split pair f₁, f₂ at level K (`--level`).
    Split,
    /// A diameter-2 witness pair in a weak neighborhood.
    Witness,
    Probe {
        #[command(subcommand)]
        which: Probe,
    },
    Ell1 {
        #[command(subcommand)]
        which: Ell1,
    },
    /// The sup-norm recursion, its claim checks and the segment check.
    Ured,
    /// The full invariant suite.
    Selftest,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Probe {
    /// Triangle equality case of a pair {"f","g"}.
    Strict,
    /// Midpoint defect of a pair {"f","g"}.
    Midpoint,
    /// Failure of strong extremality in a neighborhood.
    Extreme,
    /// The equi-integrability chain for {"f","g","A"}.
    Chain,
    /// Slice gaps for an ε schedule.
    Slice,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Ell1 {
    Greedy,
    Spikes,
    Dual,
}

/// What a command produced: a report body and an exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub report: Option<String>,
    pub message: Option<String>,
}

impl CommandOutput {
    fn report(body: String, ok: bool) -> Self {
        let message = (!ok).then(|| "verification failed; see report".to_string());
        Self { code: if ok { 0 } else { 1 }, report: Some(body), message }
    }

    fn error(e: CliError) -> Self {
        Self { code: e.code(), report: None, message: Some(e.to_string()) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Lib(e) if !e.is_input_error() => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: name.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: name, source })
}

fn parse_q(s: &str) -> CliResult<Rational> {
    Ok(rational::parse(s)?)
}

fn parse_list(s: &str) -> CliResult<Vec<Rational>> {
    s.split(',').map(|p| parse_q(p.trim())).collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

impl RunConfig {
    fn input<T: DeserializeOwned>(&self) -> CliResult<Option<T>> {
        self.input.as_deref().map(read_json).transpose()
    }

    fn rng(&self) -> Gen {
        gen::rng(self.seed)
    }

    fn eps_or(&self, default: Rational) -> CliResult<Rational> {
        self.eps.as_deref().map_or(Ok(default), parse_q)
    }

    fn prec(&self) -> CliResult<Rational> {
        self.prec.as_deref().map_or(Ok(rat(1, 10_000)), parse_q)
    }

    /// The neighborhood from `--input`, or a generated one; `--delta`
    /// overrides the radius.
    fn nbhd(&self) -> CliResult<WeakNbhd> {
        let nbhd = match self.input::<WeakNbhd>()? {
            Some(n) => n,
            None => {
                let mut g = self.rng();
                let center = gen::near_unit(&mut g, 3, 16, &self.prec()?);
                let m = g.random_range(0..=3);
                let functionals = (0..m).map(|_| gen::functional(&mut g, 3, 8)).collect();
                WeakNbhd::new(center, functionals, rat(1, 10))?
            }
        };
        match &self.delta {
            Some(d) => Ok(nbhd.with_delta(parse_q(d)?)?),
            None => Ok(nbhd),
        }
    }

    fn pair(&self) -> CliResult<PairInput> {
        match self.input()? {
            Some(p) => Ok(p),
            None => {
                let mut g = self.rng();
                Ok(PairInput { f: gen::step(&mut g, 3, 8), g: gen::step(&mut g, 3, 8) })
            }
        }
    }
}

#[derive(Deserialize)]
struct PairInput {
    f: DyadicStep,
    g: DyadicStep,
}

#[derive(Deserialize)]
struct ChainInput {
    f: DyadicStep,
    g: DyadicStep,
    #[serde(rename = "A", default)]
    a: Vec<DyadicIndex>,
}

#[derive(Deserialize)]
struct DeltasInput {
    #[serde(with = "rational::serde_q_vec")]
    deltas: Vec<Rational>,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default, with = "rational::serde_q_mat")]
    alphas: Vec<Vec<Rational>>,
}

#[derive(Deserialize)]
struct UredInput {
    #[serde(with = "rational::serde_q")]
    delta: Rational,
    #[serde(with = "rational::serde_q_vec")]
    eps: Vec<Rational>,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default, with = "rational::serde_q_vec")]
    t_grid: Vec<Rational>,
    #[serde(rename = "N", default)]
    n: Option<usize>,
}

pub fn run_command(cfg: &RunConfig) -> CommandOutput {
    match dispatch(cfg) {
        Ok((body, ok)) => CommandOutput::report(body, ok),
        Err(e) => CommandOutput::error(e),
    }
}

fn dispatch(cfg: &RunConfig) -> CliResult<(String, bool)> {
    match &cfg.command {
        Command::Norm => norm(cfg),
        Command::Split => split(cfg),
        Command::Witness => {
            let report = d2p_witness(&cfg.nbhd()?, &cfg.eps_or(rat(1, 5))?)?;
            Ok((to_json(&report), true))
        }
        Command::Probe { which } => probe(cfg, *which),
        Command::Ell1 { which } => ell1(cfg, *which),
        Command::Ured => ured(cfg),
        Command::Selftest => {
            let counts = cfg.trials.map_or(Counts::full(), Counts::capped);
            let mut outcomes = selftest::run_all(cfg.seed, counts);
            outcomes.push(determinism_outcome(cfg.seed));
            let ok = outcomes.iter().all(|o| o.ok);
            Ok((to_json(&json!({ "seed": cfg.seed, "ok": ok, "checks": outcomes })), ok))
        }
    }
}

fn norm(cfg: &RunConfig) -> CliResult<(String, bool)> {
    let digits = cfg.float_digits;
    if let Some(f) = cfg.input::<DyadicStep>()? {
        let r = norm_report(&f, digits);
        let ok = r.equiv_ok;
        return Ok((to_json(&r), ok));
    }
    let mut g = cfg.rng();
    let rows: Vec<Value> = (0..cfg.trials.unwrap_or(1))
        .map(|_| {
            let f = gen::step(&mut g, cfg.level.unwrap_or(4), 64);
            json!({ "f": f, "report": norm_report(&f, digits) })
        })
        .collect();
    let ok = rows.iter().all(|r| r["report"]["equiv_ok"] == Value::Bool(true));
    Ok((to_json(&json!({ "seed": cfg.seed, "trials": rows })), ok))
}

fn split(cfg: &RunConfig) -> CliResult<(String, bool)> {
    let k = cfg.level.unwrap_or(2);
    let f = match cfg.input::<DyadicStep>()? {
        Some(f) => f,
        None => gen::step(&mut cfg.rng(), 3, 16),
    };
    let pair = split_pair(&f, k)?;
    let checks = pair.identity_checks(&f);
    let ok = checks.values().all(|c| c.ok);
    Ok((to_json(&json!({ "f": f, "split": pair, "checks": checks })), ok))
}

fn probe(cfg: &RunConfig, which: Probe) -> CliResult<(String, bool)> {
    match which {
        Probe::Strict => {
            let p = cfg.pair()?;
            let case = triangle_equality_case(&p.f, &p.g);
            Ok((to_json(&json!({ "f": p.f, "g": p.g, "case": case })), true))
        }
        Probe::Midpoint => {
            let p = cfg.pair()?;
            let d = midpoint_defect(&p.f, &p.g);
            let body = json!({ "f": p.f, "g": p.g, "defect": rational::format(&d) });
            Ok((to_json(&body), d >= int(0)))
        }
        Probe::Extreme => {
            let w = strong_extreme_failure(&cfg.nbhd()?, &cfg.eps_or(rat(1, 5))?)?;
            let ok = w.ok;
            Ok((to_json(&w), ok))
        }
        Probe::Chain => {
            let input = match cfg.input::<ChainInput>()? {
                Some(c) => c,
                None => {
                    let mut g = cfg.rng();
                    let (f, h) = (gen::step(&mut g, 3, 8), gen::step(&mut g, 3, 8));
                    ChainInput { f, g: h, a: gen::disjoint_sets(&mut g, 4) }
                }
            };
            let r = perturbation_l1_chain(&input.f, &input.g, &input.a)?;
            let ok = r.ok;
            Ok((to_json(&json!({ "f": input.f, "g": input.g, "A": input.a, "chain": r })), ok))
        }
        Probe::Slice => {
            let nbhd = cfg.nbhd()?;
            let schedule = match &cfg.eps {
                Some(s) => parse_list(s)?,
                None => vec![rat(1, 5), rat(1, 10), rat(1, 100)],
            };
            let entries = slice_diameter_lb(&nbhd, &schedule, cfg.float_digits);
            let ok = entries.iter().all(|e| e.as_ref().is_ok_and(|e| e.ok));
            if cfg.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) {
                let mut buf = Vec::new();
                write_slice_csv(&entries, &mut buf).map_err(|e| CliError::Usage(e.to_string()))?;
                return Ok((String::from_utf8(buf).expect("csv is utf-8"), ok));
            }
            let rows: Vec<Value> = entries
                .iter()
                .zip(&schedule)
                .map(|(e, eps)| match e {
                    Ok(e) => serde_json::to_value(e).expect("entry serializes"),
                    Err(err) => json!({ "eps": rational::format(eps), "error": err.to_string() }),
                })
                .collect();
            Ok((to_json(&json!({ "entries": rows })), ok))
        }
    }
}

/// Deltas, family size and coefficient vectors for the `ell1` builders.
fn ell1_inputs(cfg: &RunConfig, g: &mut Gen) -> CliResult<(Vec<Rational>, usize, Vec<Vec<Rational>>)> {
    let (deltas, m, alphas) = match cfg.input::<DeltasInput>()? {
        Some(d) => {
            let m = d.m.unwrap_or(d.deltas.len());
            (d.deltas, m, d.alphas)
        }
        None => {
            let deltas = match &cfg.delta {
                Some(s) => parse_list(s)?,
                None => gen::deltas(g, 3, &rat(1, 2)),
            };
            let m = deltas.len();
            (deltas, m, vec![])
        }
    };
    let alphas = if alphas.is_empty() {
        (0..cfg.trials.unwrap_or(10)).map(|_| gen::coefficients(g, m, 16)).collect()
    } else {
        alphas
    };
    Ok((deltas, m, alphas))
}

fn ell1(cfg: &RunConfig, which: Ell1) -> CliResult<(String, bool)> {
    let mut g = cfg.rng();
    let family_report = |fam: SpikeFamily, alphas: &[Vec<Rational>], exact: bool| -> CliResult<(String, bool)> {
        let checks = alphas.iter().map(|a| ell1_bounds(&fam, a)).collect::<Result<Vec<_>, _>>()?;
        let ok = checks.iter().all(|c| c.lower_ok && c.upper_ok && (!exact || c.value == c.lower));
        Ok((to_json(&json!({ "family": fam, "bounds": checks })), ok))
    };
    match which {
        Ell1::Greedy => {
            let (deltas, m, alphas) = ell1_inputs(cfg, &mut g)?;
            family_report(greedy_asymptotic_ell1(&deltas, m)?, &alphas, false)
        }
        Ell1::Spikes => {
            let (deltas, m, alphas) = ell1_inputs(cfg, &mut g)?;
            let k = cfg.level.unwrap_or_else(|| (m.max(1) as u64).next_power_of_two().trailing_zeros());
            family_report(disjoint_spike_family(&deltas, m, k)?, &alphas, true)
        }
        Ell1::Dual => {
            let fam = match cfg.input::<SpikeFamily>()? {
                Some(f) => f,
                None => {
                    let deltas = gen::deltas(&mut g, 4, &rat(1, 64));
                    disjoint_spike_family(&deltas, 4, cfg.level.unwrap_or(2))?
                }
            };
            let pair = dual_segment(&fam)?;
            let ns = nonsmooth_pairings(&fam, &pair);
            let ok = pair.ok() && ns.ok;
            Ok((to_json(&json!({ "family": fam, "dual": pair, "nonsmooth": ns })), ok))
        }
    }
}

fn ured(cfg: &RunConfig) -> CliResult<(String, bool)> {
    let input = match cfg.input::<UredInput>()? {
        Some(u) => u,
        None => {
            let delta = cfg.delta.as_deref().map_or(Ok(rat(1, 2)), parse_q)?;
            let eps = match &cfg.eps {
                Some(s) => parse_list(s)?,
                None => (1..=10).map(|n| pow2(-n)).collect(),
            };
            UredInput { delta, eps, steps: None, t_grid: vec![], n: None }
        }
    };
    let steps = input.steps.unwrap_or(input.eps.len());
    let run = ured_recursion(&input.delta, &input.eps, steps)?;
    let claim = verify_claim(&run);
    let grid = if input.t_grid.is_empty() {
        vec![int(0), rat(1, 4), rat(1, 2), rat(3, 4), int(1)]
    } else {
        input.t_grid
    };
    let segment = if steps == 0 { None } else { Some(segment_check(&run, &grid, input.n.unwrap_or(steps))?) };
    let ok = claim.ok && segment.as_ref().is_none_or(|s| s.ok);
    Ok((to_json(&json!({ "run": run, "claim": claim, "segment": segment })), ok))
}

/// Repeats a fixed set of seeded commands in-process and compares reports.
fn determinism_outcome(seed: u64) -> selftest::Outcome {
    let commands: [&[&str]; 6] = [
        &["norm", "--trials", "3"],
        &["witness"],
        &["probe", "slice", "--eps", "1/5,1/10"],
        &["ell1", "greedy"],
        &["ell1", "dual"],
        &["ured"],
    ];
    let seed_s = seed.to_string();
    let failures = commands
        .iter()
        .filter(|args| {
            let argv: Vec<&str> = ["l1renorm"].iter().chain(args.iter()).chain(["--seed", &seed_s].iter()).copied().collect();
            let cfg = RunConfig::parse_from(argv);
            let (a, b) = (run_command(&cfg), run_command(&cfg));
            a.report.is_none() || a != b
        })
        .count();
    selftest::Outcome {
        id: 12,
        name: "determinism",
        trials: commands.len(),
        failures,
        detail: "repeated in-process commands give identical reports".into(),
        ok: failures == 0,
    }
}

/// Writes the report (to `--out` or stdout) and returns the exit code.
pub fn main_with(cfg: &RunConfig) -> i32 {
    let out = run_command(cfg);
    if let Some(body) = &out.report {
        match &cfg.out {
            Some(path) => {
                if let Err(e) = fs::write(path, body) {
                    eprintln!("{}: {e}", path.display());
                    return 2;
                }
            }
            None => print!("{body}"),
        }
    }
    if let Some(msg) = &out.message {
        eprintln!("l1renorm: {msg}");
    }
    out.code
}
