//! Command-line front end for the `trop-hodge` binary.
//!
//! Every subcommand reads a curve document, writes JSON to stdout or
//! `--out`, and exits with 0 on success, 1 when a check fails and 2 on
//! input errors. Errors are reported on stderr as
//! `{"error": {"kind": ..., "message": ...}}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::checks::{self, CheckReport, VerifyOptions, TRUNCATION_EPS};
use crate::curve::{genus, parse_document, validate, CurveDocument};
use crate::discrete::{assemble, build_mesh, spectrum};
use crate::harmonic::harmonic_basis;
use crate::metric::{KahlerForm, QuadratureRule};
use crate::superform::Bidegree;

pub const THREADS_VAR: &str = "TROP_HODGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "trop-hodge", version, about = "Hodge theory of tropical curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Curve document (JSON).
    curve: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the curve conditions and the Kähler weights.
    Validate(Common),
    /// Print the genus.
    Genus(Common),
    /// Exact harmonic basis of one bidegree.
    Harmonic {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_bidegree)]
        bidegree: Bidegree,
    },
    /// Smallest eigenvalues of the discrete Laplace-Beltrami operator.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_bidegree)]
        bidegree: Bidegree,
        /// Mesh size; `1/64` style fractions are accepted.
        #[arg(long, value_parser = parse_real, default_value = "1/32")]
        h: f64,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Also write `index,eigenvalue,h` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run every check suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated mesh sizes for the discrete checks.
        #[arg(long, value_delimiter = ',', value_parser = parse_real, default_values = ["1/32", "1/64"])]
        h_list: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record wall-clock seconds per suite (makes output nondeterministic).
        #[arg(long)]
        timings: bool,
    },
    /// Compare tropical integrals with their images on annuli.
    Theta {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_bidegree(s: &str) -> Result<Bidegree, String> {
    Bidegree::parse(s).map_err(|e| e.to_string())
}

fn parse_real(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("`{s}`: {e}"))?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("`{s}` is not a positive number"))
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl ToString) -> Self {
        CliError { kind, message: message.to_string() }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

/// Sizes the global worker pool from `TROP_HODGE_THREADS` (0 or unset
/// means one thread per core).
pub fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|e| CliError::new("environment", format!("{THREADS_VAR}={v}: {e}")))?,
        Err(_) => 0,
    };
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn load(path: &Path, rule: &QuadratureRule) -> Result<(CurveDocument, KahlerForm), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    let doc = parse_document(&text).map_err(|e| CliError::new("curve", e))?;
    let g = KahlerForm::from_document(&doc, rule).map_err(|e| CliError::new("kahler", e))?;
    Ok((doc, g))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| CliError::new("io", format!("{}: {e}", p.display()))),
        None => writeln!(stdout, "{text}").map_err(|e| CliError::new("io", e)),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serialises")
}

fn report_exit(report: &CheckReport) -> i32 {
    if report.passed() {
        0
    } else {
        1
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let rule = QuadratureRule::default();
    match cli.command {
        Command::Validate(c) => {
            let (doc, g) = load(&c.curve, &rule)?;
            let report = validate(&doc.curve);
            let v = json!({
                "valid": report.pass,
                "conditions": report.conditions,
                "notes": report.notes,
                "kahler": g.report(),
            });
            emit(&c.out, &pretty(&v), stdout)?;
            Ok(if report.pass { 0 } else { 2 })
        }
        Command::Genus(c) => {
            let (doc, _) = load(&c.curve, &rule)?;
            emit(&c.out, &json!({ "genus": genus(&doc.curve) }).to_string(), stdout)?;
            Ok(0)
        }
        Command::Harmonic { common, bidegree } => {
            let (doc, g) = load(&common.curve, &rule)?;
            let basis = harmonic_basis(&doc.curve, Some(&g), bidegree).map_err(|e| CliError::new("harmonic", e))?;
            emit(&common.out, &pretty(&basis.to_json()), stdout)?;
            Ok(0)
        }
        Command::Spectrum { common, bidegree, h, k, csv } => {
            let (doc, g) = load(&common.curve, &rule)?;
            let input = |e: crate::discrete::DiscreteError| CliError::new("discrete", e);
            let mesh = build_mesh(&doc.curve, &g, h, TRUNCATION_EPS, &rule).map_err(input)?;
            let system = assemble(&mesh, &doc.curve, &g, bidegree).map_err(input)?;
            let result = spectrum(&system, k).map_err(input)?;
            if let Some(path) = csv {
                let mut text = String::from("index,eigenvalue,h\n");
                for (i, l) in result.eigenvalues.iter().enumerate() {
                    text.push_str(&format!("{i},{l:e},{h:e}\n"));
                }
                std::fs::write(&path, text).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
            }
            let v = json!({
                "bidegree": format!("{}{}", bidegree.p, bidegree.q),
                "h": h,
                "k": k,
                "ndof": system.ndof(),
                "truncations": mesh.truncations,
                "warnings": mesh.warnings,
                "spectrum": result,
            });
            emit(&common.out, &pretty(&v), stdout)?;
            Ok(0)
        }
        Command::Verify { common, h_list, seed, timings } => {
            let (doc, g) = load(&common.curve, &rule)?;
            let options = VerifyOptions { h_list, seed, timings, ..VerifyOptions::default() };
            let report = checks::verify(&doc.curve, &g, &options, &rule);
            emit(&common.out, &report.to_json(), stdout)?;
            Ok(report_exit(&report))
        }
        Command::Theta { common, seed } => {
            let (doc, g) = load(&common.curve, &rule)?;
            let report = CheckReport { seed, checks: checks::theta_checks(&doc.curve, &g, seed, &rule) };
            emit(&common.out, &report.to_json(), stdout)?;
            Ok(report_exit(&report))
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = writeln!(stderr, "{}", CliError::new("usage", e.to_string().trim_end()).to_json());
            return 2;
        }
    };
    let result = configure_threads().and_then(|_| dispatch(cli, stdout));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            2
        }
    }
}
