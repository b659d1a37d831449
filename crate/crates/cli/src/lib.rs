//! `discern` command line: certificates, reconstructions, witness searches and
//! the two-moment linear solve, reading JSON and writing JSON or CSV reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use discern::certificates::{
    reconstruct, solve_lemma_moment, verify_injectivity_sampling, Certificate, CertificateKind, CubeSolveConfig,
    DiscernibilityReport, LinearMap, ReconstructionResult, ReconstructionStatus,
};
use discern::measures::{MomentVector, PolyDensity};
use discern::real::{self, format_real};
use discern::search::{find_indiscernible_tuple, phase_batch, verify_witness, PhaseBatch, SearchConfig, SearchProblem, SearchResult, SearchStatus, WitnessCheck};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_RECONSTRUCTION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "discern", version, about = "Measure discernibility: certificates, reconstruction, witness search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Top-level seed; every stochastic step derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Residual tolerance (searches and numeric reconstruction).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Restart budget (searches) or number of starts (numeric reconstruction).
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample pairs of distinct shapes and report the smallest moment gap.
    Certify {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
    /// Recover a shape from its certificate moments.
    Reconstruct {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        /// JSON array of moments.
        #[arg(long)]
        moments: Option<String>,
        /// JSON file with {"kind", "d", "moments"}.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Search for an indiscernible tuple described by a JSON file with
    /// {"problem": …, "config": …}.
    Search {
        #[arg(long)]
        input: PathBuf,
    },
    /// Solve for the increasing u(x) = a x + b with ∫uα = m1 and ∫u²α = m2.
    Lemma {
        /// One-dimensional density as JSON.
        #[arg(long)]
        alpha: String,
        /// Support interval as a JSON pair, e.g. [-1,1].
        #[arg(long, allow_hyphen_values = true)]
        support: String,
        #[arg(long, allow_hyphen_values = true)]
        m1: f64,
        #[arg(long, allow_hyphen_values = true)]
        m2: f64,
    },
    /// Pair searches on cuboids over k = 1..2d measures of the quadratic
    /// certificate family.
    Report {
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
}

/// A failure with its exit code and one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<discern::Error> for Failure {
    fn from(e: discern::Error) -> Self {
        let code = match e {
            discern::Error::ReconstructionFailed { .. } => EXIT_RECONSTRUCTION,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::invalid(format!("{what}: {e}")))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    parse_json(&path.display().to_string(), &text)
}

fn parse_kind(s: &str) -> Result<CertificateKind, Failure> {
    s.parse().map_err(Failure::from)
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn write_csv(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(header).expect("write to memory");
        for r in rows {
            w.write_record(r).expect("write to memory");
        }
        w.flush().expect("flush to memory");
    }
    buf
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec(v).expect("reports serialize");
    s.push(b'\n');
    s
}

/// `separation,gap` per sampled pair.
pub fn certify_csv(r: &DiscernibilityReport) -> Vec<u8> {
    let rows: Vec<Vec<String>> = r
        .samples
        .iter()
        .map(|s| vec![format_real(s.separation), format_real(s.gap)])
        .collect();
    write_csv(&["separation", "gap"], &rows)
}

/// One row per measure count.
pub fn batch_csv(b: &PhaseBatch) -> Vec<u8> {
    let rows: Vec<Vec<String>> = b
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.d.to_string(),
                r.restarts_used.to_string(),
                format_real(r.residual),
                format_real(r.separation),
                status_name(r.status).to_string(),
            ]
        })
        .collect();
    write_csv(&["k", "d", "restarts_used", "residual", "separation", "status"], &rows)
}

fn status_name(s: SearchStatus) -> &'static str {
    match s {
        SearchStatus::Found => "found",
        SearchStatus::NotFound => "not-found",
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub schema: u32,
    pub kind: CertificateKind,
    pub d: usize,
    #[serde(flatten)]
    pub result: ReconstructionResult,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchReport {
    pub schema: u32,
    pub result: SearchResult,
    pub verification: Option<WitnessCheck>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LemmaReport {
    pub schema: u32,
    #[serde(with = "real::scalar")]
    pub a: f64,
    #[serde(with = "real::scalar")]
    pub b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReconstructInput {
    kind: CertificateKind,
    d: usize,
    #[serde(with = "real::vector")]
    moments: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchInput {
    problem: SearchProblem,
    #[serde(default)]
    config: SearchConfig,
}

/// Report bytes and exit code.
pub struct Output {
    pub bytes: Vec<u8>,
    pub code: i32,
    pub note: Option<String>,
}

fn ok(bytes: Vec<u8>) -> Output {
    Output {
        bytes,
        code: EXIT_OK,
        note: None,
    }
}

fn search_config(base: SearchConfig, cli: &Cli) -> SearchConfig {
    SearchConfig {
        seed: cli.seed,
        max_restarts: cli.restarts.unwrap_or(base.max_restarts),
        tol_residual: cli.tol.unwrap_or(base.tol_residual),
        ..base
    }
}

pub fn execute(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Certify { kind, d, pairs } => {
            let report = verify_injectivity_sampling(parse_kind(kind)?, *d, *pairs, cli.seed)?;
            Ok(ok(match cli.format {
                Format::Json => to_json(&report),
                Format::Csv => certify_csv(&report),
            }))
        }
        Command::Reconstruct { kind, d, moments, input } => {
            let (kind, d, moments) = match (input, kind, d, moments) {
                (Some(path), None, None, None) => {
                    let i: ReconstructInput = read_json(path)?;
                    (i.kind, i.d, i.moments)
                }
                (None, Some(k), Some(d), Some(m)) => (parse_kind(k)?, *d, parse_json::<Vec<f64>>("moments", m)?),
                _ => return Err(Failure::invalid("reconstruct: give either --input or all of --kind, --d, --moments")),
            };
            let cert = Certificate::new(kind, d)?;
            let defaults = CubeSolveConfig::default();
            let cfg = CubeSolveConfig {
                seed: cli.seed,
                starts: cli.restarts.unwrap_or(defaults.starts),
                tol: cli.tol.unwrap_or(defaults.tol),
                ..defaults
            };
            let result = reconstruct(&cert, &MomentVector::new(moments), &cfg)?;
            let ambiguous = result.status == ReconstructionStatus::Ambiguous;
            let report = ReconstructReport {
                schema: 1,
                kind,
                d,
                result,
            };
            let bytes = match cli.format {
                Format::Json => to_json(&report),
                Format::Csv => {
                    let shape = report.result.shape.as_ref().map(|s| serde_json::to_string(s).expect("shape serializes"));
                    let residual = report.result.residual.map(format_real).unwrap_or_default();
                    let status = serde_json::to_value(report.result.status).expect("status serializes");
                    write_csv(
                        &["kind", "d", "status", "residual", "shape"],
                        &[vec![
                            kind.to_string(),
                            d.to_string(),
                            status.as_str().unwrap_or_default().to_string(),
                            residual,
                            shape.unwrap_or_default(),
                        ]],
                    )
                }
            };
            Ok(Output {
                bytes,
                code: if ambiguous { EXIT_RECONSTRUCTION } else { EXIT_OK },
                note: ambiguous.then(|| "reconstruction ambiguous: a coordinate sum a_j + b_j vanishes".to_string()),
            })
        }
        Command::Search { input } => {
            let i: SearchInput = read_json(input)?;
            i.problem.validate()?;
            let cfg = search_config(i.config, cli);
            cfg.validate()?;
            let result = find_indiscernible_tuple(&i.problem, &cfg)?;
            let verification = match result.status {
                SearchStatus::Found => Some(verify_witness(&result, &i.problem, &cfg)?),
                SearchStatus::NotFound => None,
            };
            let verified = verification.is_some_and(|v| v.verified);
            let note = match (result.status, verified) {
                (SearchStatus::NotFound, _) => Some(format!("no witness within {} restarts", cfg.max_restarts)),
                (SearchStatus::Found, false) => Some("witness failed oracle verification".to_string()),
                _ => None,
            };
            let bytes = match cli.format {
                Format::Json => to_json(&SearchReport {
                    schema: 1,
                    result: result.clone(),
                    verification,
                }),
                Format::Csv => write_csv(
                    &["k", "d", "n", "restarts_used", "residual", "separation", "status", "verified"],
                    &[vec![
                        i.problem.k().to_string(),
                        i.problem.dim().to_string(),
                        i.problem.n_shapes.to_string(),
                        result.restarts_used.to_string(),
                        format_real(result.residual_inf),
                        format_real(result.min_pairwise_separation),
                        status_name(result.status).to_string(),
                        verified.to_string(),
                    ]],
                ),
            };
            Ok(Output {
                bytes,
                code: if verified { EXIT_OK } else { EXIT_NOT_FOUND },
                note,
            })
        }
        Command::Lemma { alpha, support, m1, m2 } => {
            let alpha: PolyDensity = parse_json("alpha", alpha)?;
            let (lo, hi): (f64, f64) = parse_json("support", support)?;
            let LinearMap { a, b } = solve_lemma_moment(&alpha, (lo, hi), *m1, *m2)?;
            Ok(ok(match cli.format {
                Format::Json => to_json(&LemmaReport { schema: 1, a, b }),
                Format::Csv => write_csv(&["a", "b"], &[vec![format_real(a), format_real(b)]]),
            }))
        }
        Command::Report { d } => {
            if *d == 0 {
                return Err(Failure::invalid("d: must be positive"));
            }
            let cfg = search_config(SearchConfig::default(), cli);
            cfg.validate()?;
            let batch = phase_batch(*d, &cfg)?;
            Ok(ok(match cli.format {
                Format::Json => to_json(&batch),
                Format::Csv => batch_csv(&batch),
            }))
        }
    }
}

/// Parses `args`, runs the command and writes the report to `--out` or
/// `stdout`; diagnostics go to `stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, &out.bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(&out.bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_INVALID;
    }
    if let Some(note) = out.note {
        let _ = writeln!(stderr, "{note}");
    }
    out.code
}
