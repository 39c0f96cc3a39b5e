//! `cvdp`: command-line front end for sign-variation analysis of matrices,
//! linear time-varying systems and the ribosome flow model on a ring.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvdp::classify::classify;
use cvdp::compound::{add_compound, add_compound_uncapped, mult_compound, mult_compound_uncapped};
use cvdp::io::{parse_matrix_auto, parse_matrix_csv, parse_matrix_json, parse_vector};
use cvdp::lindyn::{simulate, verify_cvds, verify_tpds, GeneratorSpec, SimOptions};
use cvdp::monitor::{MonitorOptions, SignEvent};
use cvdp::rfmr::{rfmr_rhs, simulate_with_variational, RfmrConfig, RfmrParams};
use cvdp::vdp::{
    check_nonstandard_vdp, check_prop_sv1, check_scvdp, check_svdp, check_weak_cvdp, SampleBudget,
};
use cvdp::{sign_report, Error, Matrix, SCHEMA_VERSION};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "cvdp", version, about = "Cyclic variation diminishing analysis")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RunConfig {
    /// Entries with |v_i| <= zero-tol count as zero in every sign count.
    #[arg(long, global = true, env = "CVDP_ZERO_TOL", default_value_t = 1e-9, value_parser = positive)]
    zero_tol: f64,
    /// Threshold for strict minor signs and for the nonsingularity gate.
    #[arg(long, visible_alias = "det-tol", global = true, env = "CVDP_TOL", default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    /// Integration step.
    #[arg(long, global = true, env = "CVDP_STEP", default_value_t = 1e-3, value_parser = positive)]
    step: f64,
    #[arg(long, global = true, env = "CVDP_SEED", default_value_t = 0)]
    seed: u64,
    /// Sampled witness-search budget for `verify`; 0 gives the structural verdict only.
    #[arg(long, global = true, env = "CVDP_SAMPLES", default_value_t = 10_000)]
    samples: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, env = "CVDP_OUT")]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "CVDP_FORMAT", value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PropertyArg {
    Scvdp,
    WeakCvdp,
    Svdp,
    Nonstandard,
    PropSv1,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sign regularity, structural classes and the CVDS/TPDS verdict of a matrix.
    Classify {
        /// Matrix file (CSV or JSON nested arrays), `-` for stdin.
        matrix: String,
    },
    /// Multiplicative or additive compound of a matrix.
    Compound {
        matrix: String,
        #[arg(short, long)]
        p: usize,
        #[arg(long)]
        additive: bool,
        /// Lift the dimension cap.
        #[arg(long)]
        uncapped: bool,
    },
    /// All sign counters of a vector.
    Signvar {
        /// Vector file (JSON array or one CSV line), `-` for stdin.
        #[arg(required_unless_present = "values", conflicts_with = "values")]
        vector: Option<String>,
        /// The vector inline, e.g. `0,1,-2`.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
    },
    /// Variation diminishing property of a matrix.
    Verify {
        matrix: String,
        #[arg(value_enum)]
        property: PropertyArg,
        /// Order for the non-standard property.
        #[arg(short, long, required_if_eq("property", "nonstandard"))]
        p: Option<usize>,
    },
    /// Integrate a linear time-varying system and monitor its sign counts.
    Simulate {
        /// System file: JSON generator spec.
        system: String,
        /// Initial state inline, e.g. `1,-2,1`.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        /// Final time.
        #[arg(long)]
        horizon: f64,
        /// Also write the event list as JSON to this file.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Store the transition matrix at every grid time (JSON output only).
        #[arg(long)]
        record_phi: bool,
    },
    /// Check positivity of the odd minors (all minors with `--tpds`) of the
    /// transition matrix on a time grid.
    VerifyCvds {
        system: String,
        /// Grid times inline, e.g. `0.1,0.5,1`.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long)]
        tpds: bool,
    },
    /// Ribosome flow model on a ring with its variational system.
    Rfmr {
        /// JSON parameter file: lambda, x0, optional z0, horizon, optional step.
        config: String,
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Failure surfaced to the user: exit code plus a JSON error object.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    class: &'static str,
    message: String,
}

impl Failure {
    fn parse(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { kind, class: "parse_error", message: message.into() }
    }

    fn shape(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { kind, class: "shape_error", message: message.into() }
    }

    fn exit_code(&self) -> u8 {
        if self.class == "numerical_abort" {
            3
        } else {
            2
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, class) = match &e {
            Error::Parse(_) => ("invalid_input", "parse_error"),
            Error::NumericalAbort(_) => ("diverged", "numerical_abort"),
            Error::OutOfUnitCube { .. } => ("left_unit_cube", "numerical_abort"),
            Error::SingularMatrix { .. } => ("singular_matrix", "shape_error"),
            Error::NotInV(_) => ("not_in_v", "shape_error"),
            Error::TooLarge { .. } => ("too_large", "shape_error"),
            Error::InadmissibleState(_) | Error::ZeroInitialCondition => ("inadmissible_state", "shape_error"),
            _ => ("invalid_shape", "shape_error"),
        };
        Failure { kind, class, message: e.to_string() }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema: u32,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    class: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    config: &'a RunConfig,
    report: T,
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::parse("io_error", format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::parse("io_error", format!("{path}: {e}")))
    }
}

/// Format from the extension, content sniffing for stdin and anything else.
fn read_matrix(path: &str) -> Result<Matrix, Failure> {
    let text = read_input(path)?;
    let ext = Path::new(path).extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let m = match ext.as_deref() {
        Some("csv") => parse_matrix_csv(&text),
        Some("json") => parse_matrix_json(&text),
        _ => parse_matrix_auto(&text),
    }?;
    Ok(m)
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::from(Error::Parse(format!("{what}: {e}"))))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn envelope<T: Serialize>(name: &str, config: &RunConfig, report: T) -> String {
    to_json(&Envelope { schema: SCHEMA_VERSION, command: name, config, report })
}

fn emit(config: &RunConfig, text: &str) -> Result<(), Failure> {
    match &config.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::parse("io_error", format!("{}: {e}", path.display())))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::parse("io_error", format!("stdout: {e}"))),
    }
}

fn write_events(path: &Path, config: &RunConfig, events: &[SignEvent]) -> Result<(), Failure> {
    fs::write(path, envelope("events", config, events))
        .map_err(|e| Failure::parse("io_error", format!("{}: {e}", path.display())))
}

fn csv_unavailable(command: &str) -> Failure {
    Failure::shape(
        "unsupported_format",
        format!("CSV output is not available for `{command}`; CSV covers compound, signvar, simulate and rfmr"),
    )
}

fn monitor_options(config: &RunConfig, step: f64) -> MonitorOptions {
    MonitorOptions { step, zero_tol: config.zero_tol, ..Default::default() }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = &cli.config;
    let text = match cli.command {
        Command::Classify { matrix } => {
            if config.format == Format::Csv {
                return Err(csv_unavailable("classify"));
            }
            let a = read_matrix(&matrix)?;
            envelope("classify", config, classify(&a, config.tol)?)
        }
        Command::Compound { matrix, p, additive, uncapped } => {
            let a = read_matrix(&matrix)?;
            let c = match (additive, uncapped) {
                (false, false) => mult_compound(&a, p),
                (false, true) => mult_compound_uncapped(&a, p),
                (true, false) => add_compound(&a, p),
                (true, true) => add_compound_uncapped(&a, p),
            }?;
            match config.format {
                Format::Json => envelope("compound", config, &c),
                Format::Csv => c.to_csv(),
            }
        }
        Command::Signvar { vector, values } => {
            let raw = match (vector, values) {
                (_, Some(v)) => v,
                (Some(path), None) => read_input(&path)?,
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let v = parse_vector(&raw)?;
            let r = sign_report(&v, config.zero_tol);
            match config.format {
                Format::Json => envelope("signvar", config, r),
                Format::Csv => {
                    let sigma = r.sigma.map_or(String::new(), |s| s.to_string());
                    format!(
                        "sigma,s_minus,s_plus,sc_minus,sc_plus,in_V,in_Vc\n{sigma},{},{},{},{},{},{}\n",
                        r.s_minus, r.s_plus, r.sc_minus, r.sc_plus, r.in_v, r.in_vc
                    )
                }
            }
        }
        Command::Verify { matrix, property, p } => {
            if config.format == Format::Csv {
                return Err(csv_unavailable("verify"));
            }
            let a = read_matrix(&matrix)?;
            let budget = (config.samples > 0).then_some(SampleBudget { num_samples: config.samples, seed: config.seed });
            let tol = config.tol;
            let verdict = match property {
                PropertyArg::Scvdp => check_scvdp(&a, tol, budget),
                PropertyArg::WeakCvdp => check_weak_cvdp(&a, tol, budget),
                PropertyArg::Svdp => check_svdp(&a, tol, budget),
                PropertyArg::Nonstandard => check_nonstandard_vdp(&a, p.expect("clap requires -p"), tol, budget),
                PropertyArg::PropSv1 => check_prop_sv1(&a, tol, budget),
            }?;
            envelope("verify", config, verdict)
        }
        Command::Simulate { system, x0, t0, horizon, events, record_phi } => {
            if record_phi && config.format == Format::Csv {
                return Err(Failure::shape("unsupported_format", "--record-phi needs JSON output"));
            }
            let spec: GeneratorSpec = parse_json(&read_input(&system)?, "system spec")?;
            let sys = spec.build()?;
            let x0 = parse_vector(&x0)?;
            let opts = SimOptions { monitor: monitor_options(config, config.step), record_phi };
            let traj = simulate(&sys, &x0, t0, horizon, &opts)?;
            if let Some(path) = &events {
                write_events(path, config, &traj.events)?;
            }
            match config.format {
                Format::Json => envelope("simulate", config, &traj),
                Format::Csv => traj.to_csv(),
            }
        }
        Command::VerifyCvds { system, grid, t0, tpds } => {
            if config.format == Format::Csv {
                return Err(csv_unavailable("verify-cvds"));
            }
            let spec: GeneratorSpec = parse_json(&read_input(&system)?, "system spec")?;
            let sys = spec.build()?;
            let grid = parse_vector(&grid)?;
            let v = if tpds {
                verify_tpds(&sys, t0, &grid, config.step, config.tol)
            } else {
                verify_cvds(&sys, t0, &grid, config.step, config.tol)
            }?;
            envelope("verify-cvds", config, v)
        }
        Command::Rfmr { config: file, events } => {
            let rc: RfmrConfig = parse_json(&read_input(&file)?, "rfmr config")?;
            let params = RfmrParams::new(rc.lambda.clone())?;
            let z0 = match &rc.z0 {
                Some(z) => z.clone(),
                None => rfmr_rhs(&params, &rc.x0)?,
            };
            let step = rc.step.unwrap_or(config.step);
            if !(step > 0.0) {
                return Err(Error::NonpositiveParameter(step).into());
            }
            let run = simulate_with_variational(&params, &rc.x0, &z0, rc.horizon, &monitor_options(config, step))?;
            if let Some(path) = &events {
                write_events(path, config, &run.z.events)?;
            }
            match config.format {
                Format::Json => envelope("rfmr", config, &run),
                Format::Csv => run.to_csv(),
            }
        }
    };
    emit(config, &text)
}

fn report_failure(f: &Failure) -> ExitCode {
    let body = ErrorReport {
        schema: SCHEMA_VERSION,
        error: ErrorBody { kind: f.kind, class: f.class, message: &f.message },
    };
    eprint!("{}", to_json(&body));
    ExitCode::from(f.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report_failure(&Failure::parse("usage_error", e.to_string()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(&f),
    }
}
