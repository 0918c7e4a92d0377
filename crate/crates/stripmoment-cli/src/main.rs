//! Command-line driver for the strip moment-problem library.
//!
//! Every subcommand prints exactly one JSON report to standard output (the
//! machine interface) and a one-line summary with timing to standard error
//! (the human interface). Reports embed the tool version and an echo of the
//! configuration that produced them; with a fixed seed the report bytes are
//! reproducible run to run. Output files are written to a temporary sibling
//! and renamed into place, so failures never leave partial files behind.
//!
//! Exit codes: 0 when the command succeeds and its verdict is non-negative
//! (feasible or marginal table, verification passed, at least one solution
//! or extension emitted); 1 when the verdict is negative (infeasible,
//! verification failed, every sampled parameter skipped); 2 on usage or
//! input errors, with a `{"error": ...}` report on standard output.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use serde::Serialize;

use stripmoment::complex_bridge::{complex_to_real_with_residual, real_to_complex};
use stripmoment::extension::{cayley_transform, defect_subspaces, inverse_cayley};
use stripmoment::io;
use stripmoment::linalg::{eigen_sorted, haar_unitary, hermitian_defect, substream, CMat};
use stripmoment::solutions::{canonical_solutions, extract_atoms, verify_solution, SpectralSolution};
use stripmoment::{
    check_solvability, moments_from_atoms, Error, Result, SolvabilityReport, StripParams, Verdict,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "stripmoment",
    version,
    about = "Power moment problems for measures on a horizontal strip of the plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the moments of an atomic measure.
    Gen(GenArgs),
    /// Decide whether a moment table is solvable on a strip.
    Check(CheckArgs),
    /// Recover the unique representing measure of a flat table.
    Extract(ExtractArgs),
    /// Convert between real and complex moment tables.
    Convert(ConvertArgs),
    /// Enumerate self-adjoint extensions of a partial Hermitian operator.
    Extend(ExtendArgs),
    /// Sample canonical representing measures of a truncated table.
    ParamSample(ParamSampleArgs),
    /// Compare the moments of a measure against a table.
    Verify(VerifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Gen(args) => run_gen(args, started),
        Command::Check(args) => run_check(args, started),
        Command::Extract(args) => run_extract(args, started),
        Command::Convert(args) => run_convert(args, started),
        Command::Extend(args) => run_extend(args, started),
        Command::ParamSample(args) => run_param_sample(args, started),
        Command::Verify(args) => run_verify(args, started),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            let message = err.to_string();
            eprintln!("error: {message}");
            let report = ErrorReport {
                version: VERSION,
                error: message,
            };
            let _ = emit(&report, None);
            ExitCode::from(2)
        }
    }
}

#[derive(Serialize)]
struct ErrorReport {
    version: &'static str,
    error: String,
}

/// Prints `report` as one JSON line on stdout and, when `out` is given,
/// writes the same document to the file atomically.
fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> Result<()> {
    let mut bytes = io::to_json_vec(report)?;
    bytes.push(b'\n');
    std::io::stdout()
        .write_all(&bytes)
        .map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })?;
    if let Some(path) = out {
        io::write_json_atomic(path, report)?;
    }
    Ok(())
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn order_pair(order: &[usize]) -> (usize, usize) {
    (order[0], order[1])
}

fn millis(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}

// ---------------------------------------------------------------------------
// gen

#[derive(Args)]
struct GenArgs {
    /// Measure file: {"R": optional half-width, "atoms": [{"x1", "x2", "w"}]}.
    #[arg(long)]
    measure: PathBuf,
    /// Target check order (d1, d2); the table is sized for it, holding
    /// moments up to degrees (2*d1, 2*d2 + 2).
    #[arg(long, num_args = 2, value_names = ["D1", "D2"])]
    order: Vec<usize>,
    /// Output table path (written atomically).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct GenConfig {
    measure: String,
    order: [usize; 2],
    out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
}

#[derive(Serialize)]
struct GenReport {
    version: &'static str,
    command: &'static str,
    config: GenConfig,
    atoms: usize,
    total_mass: f64,
    max_m: usize,
    max_n: usize,
}

fn run_gen(args: GenArgs, started: Instant) -> Result<ExitCode> {
    let spec = io::read_measure(&args.measure)?;
    let (d1, d2) = order_pair(&args.order);
    let table = moments_from_atoms(&spec.measure, 2 * d1, 2 * d2 + 2)?;
    io::write_table(&args.out, &table)?;
    let report = GenReport {
        version: VERSION,
        command: "gen",
        config: GenConfig {
            measure: display(&args.measure),
            order: [d1, d2],
            out: display(&args.out),
            r: spec.r,
        },
        atoms: spec.measure.len(),
        total_mass: spec.measure.total_mass(),
        max_m: table.max_m(),
        max_n: table.max_n(),
    };
    emit(&report, None)?;
    eprintln!(
        "gen: wrote table (max_m={}, max_n={}) from {} atoms to {} [{:.1} ms]",
        table.max_m(),
        table.max_n(),
        spec.measure.len(),
        display(&args.out),
        millis(started)
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// check

#[derive(Args)]
struct CheckArgs {
    /// Moment table file.
    #[arg(long)]
    table: PathBuf,
    /// Strip half-width.
    #[arg(long = "R")]
    r: f64,
    /// Check order (d1, d2); requires the table to reach (2*d1, 2*d2 + 2).
    #[arg(long, num_args = 2, value_names = ["D1", "D2"])]
    order: Vec<usize>,
    /// Relative eigenvalue tolerance separating the three verdicts.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CheckConfig {
    table: String,
    r: f64,
    order: [usize; 2],
    tol: f64,
}

#[derive(Serialize)]
struct CheckReport {
    version: &'static str,
    command: &'static str,
    config: CheckConfig,
    report: SolvabilityReport,
}

fn run_check(args: CheckArgs, started: Instant) -> Result<ExitCode> {
    let table = io::read_table(&args.table)?;
    let strip = StripParams::new(args.r)?;
    let (d1, d2) = order_pair(&args.order);
    let report = check_solvability(&table, &strip, (d1, d2), args.tol)?;
    let verdict = report.verdict;
    let wrapped = CheckReport {
        version: VERSION,
        command: "check",
        config: CheckConfig {
            table: display(&args.table),
            r: args.r,
            order: [d1, d2],
            tol: args.tol,
        },
        report,
    };
    emit(&wrapped, args.out.as_deref())?;
    eprintln!(
        "check: {} at order ({}, {}); min eig kernel {:.3e}, strip {:.3e}, scale {:.3e} [{:.1} ms]",
        verdict,
        d1,
        d2,
        wrapped.report.min_eig_g,
        wrapped.report.min_eig_s,
        wrapped.report.scale,
        millis(started)
    );
    Ok(if verdict == Verdict::Infeasible {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

// ---------------------------------------------------------------------------
// extract

#[derive(Args)]
struct ExtractArgs {
    /// Moment table file.
    #[arg(long)]
    table: PathBuf,
    /// Strip half-width (context echoed into the report; extraction places
    /// atoms where the operators dictate).
    #[arg(long = "R")]
    r: f64,
    /// Extraction order (d1, d2); the table must be flat there.
    #[arg(long, num_args = 2, value_names = ["D1", "D2"])]
    order: Vec<usize>,
    /// Maximum relative moment residual accepted from the recovered measure.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the recovered measure to this file for reuse.
    #[arg(long)]
    measure_out: Option<PathBuf>,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExtractConfig {
    table: String,
    r: f64,
    order: [usize; 2],
    tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    measure_out: Option<String>,
}

#[derive(Serialize)]
struct ExtractReport {
    version: &'static str,
    command: &'static str,
    config: ExtractConfig,
    atoms: usize,
    solution: SpectralSolution,
}

fn run_extract(args: ExtractArgs, started: Instant) -> Result<ExitCode> {
    let table = io::read_table(&args.table)?;
    let strip = StripParams::new(args.r)?;
    let (d1, d2) = order_pair(&args.order);
    let solution = extract_atoms(&table, &strip, (d1, d2), args.tol)?;
    if let Some(path) = &args.measure_out {
        io::write_measure(path, &solution.measure, Some(args.r))?;
    }
    let report = ExtractReport {
        version: VERSION,
        command: "extract",
        config: ExtractConfig {
            table: display(&args.table),
            r: args.r,
            order: [d1, d2],
            tol: args.tol,
            measure_out: args.measure_out.as_deref().map(display),
        },
        atoms: solution.measure.len(),
        solution,
    };
    emit(&report, args.out.as_deref())?;
    eprintln!(
        "extract: {} atoms, max rel residual {:.3e} [{:.1} ms]",
        report.atoms,
        report.solution.residuals.max_rel,
        millis(started)
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// convert

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    /// Complex table (z, conj z powers) to real table (x1, x2 powers).
    C2r,
    /// Real table to complex table.
    R2c,
}

impl Direction {
    fn as_str(self) -> &'static str {
        match self {
            Direction::C2r => "c2r",
            Direction::R2c => "r2c",
        }
    }
}

#[derive(Args)]
struct ConvertArgs {
    /// Conversion direction.
    #[arg(long = "dir", value_enum)]
    direction: Direction,
    /// Input table path.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output table path (written atomically).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ConvertConfig {
    dir: &'static str,
    #[serde(rename = "in")]
    input: String,
    out: String,
}

#[derive(Serialize)]
struct ConvertReport {
    version: &'static str,
    command: &'static str,
    config: ConvertConfig,
    max_m: usize,
    max_n: usize,
    /// Deviation of the complex table from Hermitian symmetry.
    hermitian_residual: f64,
    /// Largest imaginary part discarded when producing real entries
    /// (complex-to-real only).
    #[serde(skip_serializing_if = "Option::is_none")]
    imaginary_residue: Option<f64>,
}

fn run_convert(args: ConvertArgs, started: Instant) -> Result<ExitCode> {
    let config = ConvertConfig {
        dir: args.direction.as_str(),
        input: display(&args.input),
        out: display(&args.out),
    };
    let report = match args.direction {
        Direction::C2r => {
            let a = io::read_complex_table(&args.input)?;
            let hermitian_residual = a.hermitian_residual();
            let (s, residue) = complex_to_real_with_residual(&a)?;
            io::write_table(&args.out, &s)?;
            ConvertReport {
                version: VERSION,
                command: "convert",
                config,
                max_m: s.max_m(),
                max_n: s.max_n(),
                hermitian_residual,
                imaginary_residue: Some(residue),
            }
        }
        Direction::R2c => {
            let s = io::read_table(&args.input)?;
            let a = real_to_complex(&s);
            io::write_complex_table(&args.out, &a)?;
            ConvertReport {
                version: VERSION,
                command: "convert",
                config,
                max_m: a.max_m(),
                max_n: a.max_n(),
                hermitian_residual: a.hermitian_residual(),
                imaginary_residue: None,
            }
        }
    };
    emit(&report, None)?;
    eprintln!(
        "convert {}: wrote table (max_m={}, max_n={}) to {} [{:.1} ms]",
        report.config.dir,
        report.max_m,
        report.max_n,
        display(&args.out),
        millis(started)
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// extend

#[derive(Args)]
struct ExtendArgs {
    /// Operator model file: {"dim", "domain": [[{re, im}]], "action": [[{re, im}]]}.
    #[arg(long)]
    model: PathBuf,
    /// Angles: each phi yields the defect-space parameter e^{i*phi} * I.
    #[arg(
        long = "phi-list",
        value_delimiter = ',',
        num_args(1..),
        conflicts_with_all = ["seed", "count"]
    )]
    phi_list: Option<Vec<f64>>,
    /// Seed for Haar-random defect-space parameters.
    #[arg(long, required_unless_present = "phi_list")]
    seed: Option<u64>,
    /// Number of sampled parameters (default 1).
    #[arg(long, requires = "seed")]
    count: Option<usize>,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExtendConfig {
    model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
}

#[derive(Serialize)]
struct ExtensionEntry {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    eigenvalues: Vec<f64>,
    /// Deviation of the assembled matrix from Hermitian symmetry.
    hermitian_defect: f64,
    /// Deviation from reproducing the partial action on its domain.
    extension_defect: f64,
    matrix: Vec<Vec<io::ComplexEntry>>,
}

#[derive(Serialize)]
struct SkippedEntry {
    index: usize,
    note: String,
}

#[derive(Serialize)]
struct ExtendReport {
    version: &'static str,
    command: &'static str,
    config: ExtendConfig,
    dim: usize,
    domain_dim: usize,
    deficiency: [usize; 2],
    extensions: Vec<ExtensionEntry>,
    skipped: Vec<SkippedEntry>,
}

fn run_extend(args: ExtendArgs, started: Instant) -> Result<ExitCode> {
    let op = io::read_model(&args.model)?;
    let defects = defect_subspaces(&op)?;
    let cayley = cayley_transform(&op)?;
    let p = defects.n_plus;

    let count = args.count.unwrap_or(1);
    let parameters: Vec<(Option<f64>, CMat)> = match &args.phi_list {
        Some(phis) => phis
            .iter()
            .map(|&phi| {
                let u = CMat::from_diagonal_element(p, p, Complex::from_polar(1.0, phi));
                (Some(phi), u)
            })
            .collect(),
        None => {
            let seed = args.seed.expect("clap enforces seed without phi-list");
            (0..count)
                .map(|index| {
                    let mut rng = substream(seed, "extend", index as u64);
                    (None, haar_unitary(&mut rng, p))
                })
                .collect()
        }
    };

    let mut extensions = Vec::new();
    let mut skipped = Vec::new();
    for (index, (phi, u24)) in parameters.iter().enumerate() {
        let unitary = stripmoment::extension::assemble_extension(&cayley, &defects, u24)?;
        match inverse_cayley(&unitary) {
            Ok(a_u) => {
                let (eigs, _) = eigen_sorted(&a_u);
                extensions.push(ExtensionEntry {
                    index,
                    phi: *phi,
                    eigenvalues: eigs.iter().copied().collect(),
                    hermitian_defect: hermitian_defect(&a_u),
                    extension_defect: op.extension_defect(&a_u),
                    matrix: io::matrix_to_rows(&a_u),
                });
            }
            Err(Error::SpectrumAtOne { gap }) => skipped.push(SkippedEntry {
                index,
                note: format!("extension has unitary spectrum at 1 (gap {gap:.3e})"),
            }),
            Err(other) => return Err(other),
        }
    }

    let report = ExtendReport {
        version: VERSION,
        command: "extend",
        config: ExtendConfig {
            model: display(&args.model),
            phi_list: args.phi_list.clone(),
            seed: args.seed,
            count: args.phi_list.is_none().then_some(count),
        },
        dim: op.dim,
        domain_dim: op.domain_dim(),
        deficiency: [defects.n_plus, defects.n_minus],
        extensions,
        skipped,
    };
    emit(&report, args.out.as_deref())?;
    eprintln!(
        "extend: {} extensions emitted, {} skipped (deficiency ({}, {})) [{:.1} ms]",
        report.extensions.len(),
        report.skipped.len(),
        defects.n_plus,
        defects.n_minus,
        millis(started)
    );
    Ok(if report.extensions.is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

// ---------------------------------------------------------------------------
// param-sample

#[derive(Args)]
struct ParamSampleArgs {
    /// Moment table file.
    #[arg(long)]
    table: PathBuf,
    /// Strip half-width.
    #[arg(long = "R")]
    r: f64,
    /// Seed for the commutant parameter samples.
    #[arg(long)]
    seed: u64,
    /// Number of parameters to sample.
    #[arg(long)]
    count: usize,
    /// Truncation order (d1, d2); defaults to the largest order the table
    /// supports, (max_m/2, max_n/2).
    #[arg(long, num_args = 2, value_names = ["D1", "D2"])]
    order: Option<Vec<usize>>,
    /// Maximum relative moment residual accepted from a sampled measure.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ParamSampleConfig {
    table: String,
    r: f64,
    order: [usize; 2],
    seed: u64,
    count: usize,
    tol: f64,
}

#[derive(Serialize)]
struct ParamSampleReport {
    version: &'static str,
    command: &'static str,
    config: ParamSampleConfig,
    defect: [usize; 2],
    solutions: Vec<SpectralSolution>,
    skipped: Vec<SkippedEntry>,
}

fn run_param_sample(args: ParamSampleArgs, started: Instant) -> Result<ExitCode> {
    let table = io::read_table(&args.table)?;
    let strip = StripParams::new(args.r)?;
    let order = match &args.order {
        Some(v) => order_pair(v),
        None => (table.max_m() / 2, table.max_n() / 2),
    };
    let batch = canonical_solutions(&table, &strip, order, args.seed, args.count, args.tol)?;
    let report = ParamSampleReport {
        version: VERSION,
        command: "param-sample",
        config: ParamSampleConfig {
            table: display(&args.table),
            r: args.r,
            order: [order.0, order.1],
            seed: args.seed,
            count: args.count,
            tol: args.tol,
        },
        defect: [batch.defect.0, batch.defect.1],
        solutions: batch.solutions,
        skipped: batch
            .skipped
            .into_iter()
            .map(|(index, note)| SkippedEntry { index, note })
            .collect(),
    };
    emit(&report, args.out.as_deref())?;
    eprintln!(
        "param-sample: {} solutions, {} skipped (defect ({}, {}), order ({}, {})) [{:.1} ms]",
        report.solutions.len(),
        report.skipped.len(),
        report.defect[0],
        report.defect[1],
        order.0,
        order.1,
        millis(started)
    );
    Ok(if report.solutions.is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

// ---------------------------------------------------------------------------
// verify

#[derive(Args)]
struct VerifyArgs {
    /// Measure file.
    #[arg(long)]
    measure: PathBuf,
    /// Moment table to compare against, over its full index range.
    #[arg(long)]
    table: PathBuf,
    /// Maximum relative residual counted as a pass.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerifyConfig {
    measure: String,
    table: String,
    tol: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    version: &'static str,
    command: &'static str,
    config: VerifyConfig,
    residuals: stripmoment::solutions::ResidualReport,
    pass: bool,
}

fn run_verify(args: VerifyArgs, started: Instant) -> Result<ExitCode> {
    let spec = io::read_measure(&args.measure)?;
    let table = io::read_table(&args.table)?;
    let residuals = verify_solution(
        &spec.measure,
        &table,
        (table.max_m() + 1, table.max_n() + 1),
    )?;
    let pass = residuals.max_rel <= args.tol;
    let report = VerifyReport {
        version: VERSION,
        command: "verify",
        config: VerifyConfig {
            measure: display(&args.measure),
            table: display(&args.table),
            tol: args.tol,
        },
        residuals,
        pass,
    };
    emit(&report, args.out.as_deref())?;
    eprintln!(
        "verify: max rel residual {:.3e} over {} entries — {} [{:.1} ms]",
        report.residuals.max_rel,
        report.residuals.count,
        if pass { "pass" } else { "FAIL" },
        millis(started)
    );
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
