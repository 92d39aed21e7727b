//! `ellgt`: R-matrix and weight-function tables, GT bases, shuffle products,
//! and the verification suites.

mod config;

use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use elliptic_gt::combinatorics::{enumerate_partitions, leq};
use elliptic_gt::gt_representation::{gt_vectors, x_matrix_via_weights, DescentPath};
use elliptic_gt::linalg::{self, CMatrix};
use elliptic_gt::rmatrix::{check_dybe, check_unitarity, r_full, rbar, Sign};
use elliptic_gt::sampling::Sampler;
use elliptic_gt::shuffle::{check_closure, star_product, SymmetricFunctionValue};
use elliptic_gt::verify::{CaseResult, Fault};
use elliptic_gt::weight_functions::{
    orthogonality_grid, specialize_zi, stab_restrict, OrthogonalityShift, TVariables, WeightVariant,
};
use elliptic_gt::{Complex64, DynamicalState, Lambda, PartitionIndex, RhoMinusVariant, SuiteRegistry};
use serde::Serialize;

use config::{parse_complex, parse_complex_list, write_to, CommonArgs, RunConfig};

#[derive(Parser)]
#[command(name = "ellgt", version, about = "Elliptic dynamical R-matrix, weight functions and GT representation numerics")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes R-bar or R± at one point as JSON, or a table of DYBE / unitarity residuals.
    Rmat(RmatArgs),
    /// Dumps specialization, orthogonality and stable-envelope tables as CSV.
    Weights(WeightsArgs),
    /// Dumps the GT change-of-basis matrix as CSV.
    Gtbasis(GtArgs),
    /// Star product of two weight functions with its closure expansion, as JSON.
    Shuffle(ShuffleArgs),
    /// Runs verification suites and writes one JSON report.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct RmatArgs {
    /// Spectral parameter: `a`, `a+bi` or `a,b`.
    #[arg(long)]
    u: Option<String>,
    /// Dynamical parameters `P_1 … P_N`, whitespace or `;` separated; missing trailing entries are 0.
    #[arg(long = "P")]
    p: Option<String>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Instead of the matrix, write a residual table over seeded samples.
    #[arg(long, value_enum)]
    check: Option<Check>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Bar,
    Plus,
    MinusPShift,
    MinusPShiftWeighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Dybe,
    Unitarity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Specialization,
    Orthogonality,
    Stab,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Cal,
    Tilde,
    Entire,
}

#[derive(clap::Args)]
struct WeightsArgs {
    #[arg(long, value_enum, default_value = "specialization")]
    table: Table,
    #[arg(long, value_enum, default_value = "cal")]
    variant: Variant,
    /// Site parameters `u_1 … u_n`; sampled from the seed when absent.
    #[arg(long)]
    z: Option<String>,
    #[arg(long = "P")]
    p: Option<String>,
}

#[derive(clap::Args)]
struct GtArgs {
    #[arg(long)]
    z: Option<String>,
    #[arg(long = "P")]
    p: Option<String>,
    /// Build the vectors along the rightmost reduced words instead of the leftmost.
    #[arg(long)]
    rightmost: bool,
    /// Also compare against the weight-function formula; fails above tolerance.
    #[arg(long)]
    check: bool,
}

#[derive(clap::Args)]
struct ShuffleArgs {
    /// Colour word of the left factor, e.g. `21`.
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    #[arg(long)]
    z: Option<String>,
    #[arg(long = "P")]
    p: Option<String>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Suites to run, comma-separated; all registered suites when absent.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Corrupts one R-bar entry to check that the harness notices.
    #[arg(long, value_enum)]
    inject_fault: Option<FaultArg>,
    /// Lists the registered suites and exits.
    #[arg(long)]
    list: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    NegateCbar,
}

#[derive(Serialize)]
struct Report {
    suite: String,
    version: &'static str,
    config_digest: String,
    seed: u64,
    max_residual: f64,
    pass: bool,
    cases: Vec<ReportCase>,
}

#[derive(Serialize)]
struct ReportCase {
    suite: String,
    #[serde(flatten)]
    case: CaseResult,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every check passed.
fn run(cli: Cli) -> Result<bool> {
    let extra: Vec<(&str, Option<String>)> = match &cli.command {
        Command::Rmat(a) => vec![
            ("u", a.u.clone()),
            ("P", a.p.clone()),
            ("kind", a.kind.map(name_of)),
            ("check", a.check.map(name_of)),
        ],
        Command::Weights(a) => vec![
            ("table", Some(name_of(a.table))),
            ("variant", Some(name_of(a.variant))),
            ("z", a.z.clone()),
            ("P", a.p.clone()),
        ],
        Command::Gtbasis(a) => vec![("z", a.z.clone()), ("P", a.p.clone())],
        Command::Shuffle(a) => {
            vec![("left", Some(a.left.clone())), ("right", Some(a.right.clone())), ("z", a.z.clone()), ("P", a.p.clone())]
        }
        Command::Verify(a) => vec![
            ("suite", (!a.suite.is_empty()).then(|| a.suite.join(","))),
            ("inject_fault", a.inject_fault.map(name_of)),
        ],
    };
    let cfg = RunConfig::resolve(&cli.common, &extra)?;
    if let Some(workers) = cfg.workers {
        rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().context("building worker pool")?;
    }
    match &cli.command {
        Command::Rmat(a) => cmd_rmat(&cfg, a),
        Command::Weights(a) => cmd_weights(&cfg, a),
        Command::Gtbasis(a) => cmd_gtbasis(&cfg, a),
        Command::Shuffle(a) => cmd_shuffle(&cfg, a),
        Command::Verify(a) => cmd_verify(&cfg, a),
    }
}

fn name_of(v: impl ValueEnum) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn state_from(cfg: &RunConfig, text: Option<&str>, rank: usize) -> Result<DynamicalState> {
    match text {
        Some(t) => {
            let mut p = parse_complex_list(t)?;
            if p.len() > rank {
                bail!("{} dynamical parameters given for N = {rank}", p.len());
            }
            p.resize(rank, Complex64::new(0.0, 0.0));
            Ok(DynamicalState::new(p))
        }
        None => Ok(Sampler::keyed(cfg.seed, "cli/P", 0).state(rank)),
    }
}

fn sites_from(cfg: &RunConfig, text: Option<&str>, n: usize) -> Result<Vec<Complex64>> {
    match text {
        Some(t) => {
            let z = parse_complex_list(t)?;
            if z.len() != n {
                bail!("{} site parameters given for n = {n}", z.len());
            }
            Ok(z)
        }
        None => Ok(Sampler::keyed(cfg.seed, "cli/z", 0).spectral(n)),
    }
}

fn require_lambda(cfg: &RunConfig) -> Result<Lambda> {
    cfg.lambda()?.context("--lambda is required")
}

fn cmd_rmat(cfg: &RunConfig, a: &RmatArgs) -> Result<bool> {
    let rank = cfg.rank_or(2);
    let params = cfg.params(rank)?;
    if let Some(check) = a.check {
        let mut csv = String::from("sample,residual\n");
        let mut pass = true;
        for k in 0..cfg.samples_or(100) {
            let mut s = Sampler::keyed(cfg.seed, "cli/rmat", k);
            let state = s.state(rank);
            let residual = match check {
                Check::Dybe => {
                    let u = s.spectral(3);
                    check_dybe([u[0], u[1], u[2]], &state, &params)?
                }
                Check::Unitarity => check_unitarity(s.complex(0.6, 0.3), &state, &params)?.rbar,
            };
            pass &= residual < cfg.tol;
            writeln!(csv, "{k},{residual:.6e}")?;
        }
        cfg.write_output(&csv)?;
        return Ok(pass);
    }
    let u = cfg.extra("u").map(parse_complex).transpose()?.unwrap_or(Complex64::new(0.2, 0.0));
    let state = state_from(cfg, cfg.extra("P"), rank)?;
    let matrix = match a.kind.unwrap_or(Kind::Bar) {
        Kind::Bar => rbar(u, &state, &params)?,
        Kind::Plus => r_full(u, &state, &params, Sign::Plus)?,
        Kind::MinusPShift => r_full(u, &state, &params, Sign::Minus(RhoMinusVariant::PShift))?,
        Kind::MinusPShiftWeighted => r_full(u, &state, &params, Sign::Minus(RhoMinusVariant::PShiftWeighted))?,
    };
    cfg.write_output(&(serde_json::to_string_pretty(&matrix)? + "\n"))?;
    Ok(true)
}

fn cmd_weights(cfg: &RunConfig, a: &WeightsArgs) -> Result<bool> {
    let lambda = require_lambda(cfg)?;
    let params = cfg.params(lambda.rank())?;
    let z = sites_from(cfg, cfg.extra("z"), lambda.n())?;
    let state = state_from(cfg, cfg.extra("P"), lambda.rank())?;
    let parts = enumerate_partitions(&lambda)?;
    let mut csv = String::new();
    let mut pass = true;
    match a.table {
        Table::Specialization => {
            let variant = match a.variant {
                Variant::Cal => WeightVariant::Cal,
                Variant::Tilde => WeightVariant::Tilde,
                Variant::Entire => WeightVariant::Entire,
            };
            csv.push_str("I,J,variant,re,im,structural_zero,error\n");
            for i in &parts {
                for j in &parts {
                    let zero = !leq(i, j)?;
                    match specialize_zi(j, i, &z, &state, &params, variant) {
                        Ok(v) => {
                            let v = v.value;
                            writeln!(csv, "{i},{j},{},{:.17e},{:.17e},{zero},", variant.name(), v.re, v.im)?;
                        }
                        Err(e) => {
                            pass = false;
                            writeln!(csv, "{i},{j},{},,,{zero},{}", variant.name(), e.to_string().replace(',', ";"))?;
                        }
                    }
                }
            }
        }
        Table::Orthogonality => {
            let (parts, grid) = orthogonality_grid(&lambda, &z, &state, &params, OrthogonalityShift::Verbatim)?;
            pass = linalg::residual(&grid, &linalg::identity(parts.len())) < cfg.tol;
            csv.push_str("J,K,re,im\n");
            push_matrix(&mut csv, &parts, &grid)?;
        }
        Table::Stab => {
            csv.push_str("I,J,re,im\n");
            for i in &parts {
                for j in &parts {
                    let v = stab_restrict(i, j, &z, &state, &params)?;
                    writeln!(csv, "{i},{j},{:.17e},{:.17e}", v.re, v.im)?;
                }
            }
        }
    }
    cfg.write_output(&csv)?;
    Ok(pass)
}

fn push_matrix(csv: &mut String, parts: &[PartitionIndex], m: &CMatrix) -> Result<()> {
    for (r, i) in parts.iter().enumerate() {
        for (c, j) in parts.iter().enumerate() {
            let v = m[(r, c)];
            writeln!(csv, "{i},{j},{:.17e},{:.17e}", v.re, v.im)?;
        }
    }
    Ok(())
}

fn cmd_gtbasis(cfg: &RunConfig, a: &GtArgs) -> Result<bool> {
    let lambda = require_lambda(cfg)?;
    let params = cfg.params(lambda.rank())?;
    let z = sites_from(cfg, cfg.extra("z"), lambda.n())?;
    let state = state_from(cfg, cfg.extra("P"), lambda.rank())?;
    let path = if a.rightmost { DescentPath::Rightmost } else { DescentPath::Leftmost };
    let basis = gt_vectors(enumerate_partitions(&lambda)?, &z, &state, &params, path)?;
    let x = basis.transition_matrix();
    let mut csv = String::from("I,J,re,im\n");
    push_matrix(&mut csv, &basis.parts, &x)?;
    cfg.write_output(&csv)?;
    if a.check {
        let residual = linalg::residual(&x_matrix_via_weights(&lambda, &z, &state, &params)?, &x);
        eprintln!("x_vs_weights_residual = {residual:.3e}");
        return Ok(residual < cfg.tol);
    }
    Ok(true)
}

#[derive(Serialize)]
struct ShuffleOutput {
    left: String,
    right: String,
    lambda: Vec<usize>,
    basis: Vec<PartitionIndex>,
    coefficients: Vec<Complex64>,
    closure_residual: f64,
}

fn cmd_shuffle(cfg: &RunConfig, a: &ShuffleArgs) -> Result<bool> {
    let rank = cfg.rank_or(2);
    let params = cfg.params(rank)?;
    let left = PartitionIndex::parse(rank, &a.left)?;
    let right = PartitionIndex::parse(rank, &a.right)?;
    let product = star_product(
        &SymmetricFunctionValue::weight(&left, &params),
        &SymmetricFunctionValue::weight(&right, &params),
        &params,
    )?;
    let lambda = product.lambda().clone();
    let z = sites_from(cfg, cfg.extra("z"), lambda.n())?;
    let state = state_from(cfg, cfg.extra("P"), rank)?;
    let checks: Vec<TVariables> = (0..2)
        .map(|k| {
            let mut s = Sampler::keyed(cfg.seed, "cli/shuffle", k);
            let levels = (1..rank).map(|l| s.spectral(lambda.partial(l))).collect();
            TVariables::new(levels, z.clone())
        })
        .collect();
    let report = check_closure(&product, &z, &checks, &state, &params)?;
    let out = ShuffleOutput {
        left: a.left.clone(),
        right: a.right.clone(),
        lambda: lambda.parts().to_vec(),
        basis: report.basis,
        coefficients: report.coefficients,
        closure_residual: report.residual,
    };
    cfg.write_output(&(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(out.closure_residual < cfg.tol)
}

fn cmd_verify(cfg: &RunConfig, a: &VerifyArgs) -> Result<bool> {
    let registry = SuiteRegistry::standard();
    if a.list {
        write_to(cfg.out.as_deref(), &(registry.names().join("\n") + "\n"))?;
        return Ok(true);
    }
    let names: Vec<String> = match cfg.extra("suite") {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => registry.names().iter().map(|s| s.to_string()).collect(),
    };
    let fault = match cfg.extra("inject_fault") {
        None => None,
        Some("negate-cbar") => Some(Fault::NegateCBar),
        Some(other) => bail!("unknown fault {other}"),
    };
    let vcfg = cfg.verify_config(fault)?;
    let mut cases = Vec::new();
    let mut max_residual = 0.0f64;
    let mut pass = true;
    for name in &names {
        let report = registry.run(name, &vcfg)?;
        max_residual = max_residual.max(report.max_residual);
        pass &= report.pass;
        for case in report.cases {
            if !case.pass {
                eprintln!("FAIL {name}: {} (residual {:.3e})", case.name, case.residual);
            }
            cases.push(ReportCase { suite: name.clone(), case });
        }
    }
    let report = Report {
        suite: names.join(","),
        version: elliptic_gt::VERSION,
        config_digest: cfg.digest(),
        seed: cfg.seed,
        max_residual,
        pass,
        cases,
    };
    cfg.write_output(&(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(pass)
}
