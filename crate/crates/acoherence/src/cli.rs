//! Command-line front end: `probs`, `ratio`, `moments`, `sample`, `test`,
//! `astro`.
//!
//! States are given as `kind:params` shorthand (`coherent:1+0.5i`, `fock:3`,
//! `thermal:0.5`, `squeezed:1.2`, `gaussian:x0,r,phi,n_th`) or as
//! `@file.json` holding a state object (see `schemas/state.schema.json`).
//! Couplings come from `--kappa` or from `--gamma0 --dt`, with `--eta` for
//! the detector efficiency. Every command is deterministic given its
//! configuration; floats are printed with 12 significant digits so output
//! files are stable. Relative `--out` paths resolve against
//! `ACOHERENCE_OUT_DIR` when it is set.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical-validity
//! failure (truncation bound exceeded, model breakdown).

use std::num::FpCategory;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::astro::{self, BarDetector, ChirpSpec, ScenarioFile, ScenarioRow};
use crate::detector::{
    self, AngleMode, CountDistribution, DetectorCoupling, Method, ValidityWarning,
};
use crate::error::{Error, Result};
use crate::fock;
use crate::sampler::{self, Alternative, ClickExperiment, CountRecord, TestOptions};
use crate::states::FieldState;
use crate::stats;

const SCHEMA_VERSION: u32 = 1;
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ACOHERENCE_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "acoherence",
    version,
    about = "Counting statistics of radiation fields in resonant harmonic detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detector excitation probabilities per requested method
    Probs(ProbsArgs),
    /// Ratio tests R = 2P2P0/P1^2 and R' = 3P3P1/(2P2^2)
    Ratio(RatioArgs),
    /// Normally ordered field moments, analytic vs oracle
    Moments(MomentsArgs),
    /// Sample detector clicks over repeated windows
    Sample(SampleArgs),
    /// Coherent-null hypothesis test on a sampled record
    Test(TestArgs),
    /// Gravitational-wave scenario tables
    Astro(AstroArgs),
}

#[derive(Args)]
struct CouplingArgs {
    /// Dimensionless coupling kappa = sqrt(gamma0*dt)
    #[arg(long, conflicts_with_all = ["gamma0", "dt"])]
    kappa: Option<f64>,
    /// Coupling rate gamma0 in 1/s (with --dt)
    #[arg(long, requires = "dt")]
    gamma0: Option<f64>,
    /// Interaction window dt in s (with --gamma0)
    #[arg(long, requires = "gamma0")]
    dt: Option<f64>,
    /// Detector efficiency in [0, 1]
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

impl CouplingArgs {
    fn build(&self) -> Result<DetectorCoupling> {
        let coupling = match (self.kappa, self.gamma0, self.dt) {
            (Some(kappa), None, None) => DetectorCoupling::from_kappa(kappa)?,
            (None, Some(gamma0), Some(dt)) => DetectorCoupling::new(gamma0, dt)?,
            _ => {
                return Err(Error::invalid(
                    "coupling",
                    "specify either --kappa or both --gamma0 and --dt",
                ))
            }
        };
        coupling.with_efficiency(self.eta)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output file (stdout when omitted); relative paths resolve against
    /// ACOHERENCE_OUT_DIR
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ProbsArgs {
    /// Field state (kind:params or @file.json)
    #[arg(long)]
    state: String,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Comma-separated methods: perturbative, exact, bch, gaussian, oracle
    #[arg(long, value_delimiter = ',', default_value = "oracle")]
    methods: Vec<String>,
    /// Highest excitation level to report
    #[arg(long, default_value_t = 3)]
    nmax: usize,
    /// Use the small-angle detection strength on the exact route
    #[arg(long)]
    small_angle: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long)]
    state: String,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Probability route (default: exact where available, else oracle)
    #[arg(long, default_value = "auto")]
    method: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    state: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    state: String,
    /// Coupling rate gamma0 in 1/s
    #[arg(long)]
    gamma0: f64,
    /// Step duration dt in s
    #[arg(long)]
    dt: f64,
    /// Detector resets per window
    #[arg(long, default_value_t = 1)]
    steps: u64,
    /// Independent observation windows
    #[arg(long)]
    windows: usize,
    /// Master seed for the per-window substreams
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output base path; writes <out>.json and <out>.csv
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct TestArgs {
    /// Count record produced by `sample` (JSON)
    #[arg(long)]
    record: String,
    /// Alternative families to test against
    #[arg(long, value_delimiter = ',', default_value = "thermal,squeezed")]
    alternatives: Vec<String>,
    /// Parametric-bootstrap resamples
    #[arg(long, default_value_t = 999)]
    bootstrap: usize,
    /// Test level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Gw150914,
    Gw170817,
}

#[derive(Args)]
struct AstroArgs {
    /// Benchmark chirp preset
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Frequencies in Hz for presets and --chirp-mass-solar
    #[arg(long, value_delimiter = ',')]
    nu: Vec<f64>,
    /// Custom chirp mass in solar masses
    #[arg(long)]
    chirp_mass_solar: Option<f64>,
    /// Scenario file (JSON) with bars and chirps
    #[arg(long)]
    scenario: Option<String>,
    /// Custom bar mass in kg (with --bar-length and --bar-frequency)
    #[arg(long, requires = "bar_length", requires = "bar_frequency")]
    bar_mass: Option<f64>,
    /// Custom bar length in m
    #[arg(long, requires = "bar_mass")]
    bar_length: Option<f64>,
    /// Custom bar resonance in Hz
    #[arg(long, requires = "bar_mass")]
    bar_frequency: Option<f64>,
    /// Mode occupation of the radiation field
    #[arg(long, default_value_t = 1e36)]
    nbar: f64,
    /// Mandel Q of the radiation field (defaults to --nbar)
    #[arg(long)]
    mandel_q: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Entry point for the binary: parses arguments, runs the command, maps
/// errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Probs(args) => cmd_probs(args),
        Command::Ratio(args) => cmd_ratio(args),
        Command::Moments(args) => cmd_moments(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Test(args) => cmd_test(args),
        Command::Astro(args) => cmd_astro(args),
    }
}

/// Parses the CLI state grammar.
pub fn parse_state(spec: &str) -> Result<FieldState> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(resolve_path(path))?;
        let state: FieldState = serde_json::from_str(&text)?;
        state.validate()?;
        return Ok(state);
    }
    let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
    let parse_f64 = |name: &'static str, s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(name, format!("cannot parse `{s}` as a number")))
    };
    match kind.to_ascii_lowercase().as_str() {
        "coherent" => {
            let alpha = Complex64::from_str(params.trim()).map_err(|_| {
                Error::invalid("alpha", format!("cannot parse `{params}` (try 1+0.5i)"))
            })?;
            FieldState::coherent(alpha)
        }
        "fock" => {
            let n: u32 = params.trim().parse().map_err(|_| {
                Error::invalid("n", format!("cannot parse `{params}` as an integer"))
            })?;
            Ok(FieldState::fock(n))
        }
        "thermal" => FieldState::thermal(parse_f64("n_th", params)?),
        "squeezed" | "squeezed_vacuum" => FieldState::squeezed_vacuum(parse_f64("r", params)?),
        "gaussian" => {
            let parts: Vec<&str> = params.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::invalid(
                    "state",
                    "gaussian takes four parameters: x0,r,phi,n_th",
                ));
            }
            FieldState::gaussian(
                parse_f64("x0", parts[0])?,
                parse_f64("r", parts[1])?,
                parse_f64("phi", parts[2])?,
                parse_f64("n_th", parts[3])?,
            )
        }
        other => Err(Error::invalid(
            "state",
            format!("unknown state kind `{other}` (custom states go through @file.json)"),
        )),
    }
}

fn resolve_path(path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(p);
            }
        }
    }
    p
}

fn format_sig(x: f64) -> String {
    match x.classify() {
        FpCategory::Nan | FpCategory::Infinite => x.to_string(),
        _ => format!("{x:.11e}"),
    }
}

fn round_json_floats(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if n.is_f64() {
                    if let Ok(rounded) = format_sig(x).parse::<f64>() {
                        if let Some(num) = serde_json::Number::from_f64(rounded) {
                            *n = num;
                        }
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json_floats),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json_floats),
        _ => {}
    }
}

/// JSON with floats rounded to 12 significant digits for stable regression
/// files.
fn rounded_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

fn emit(text: &str, out: Option<&str>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(resolve_path(path), text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CouplingOut {
    gamma0: f64,
    dt: f64,
    kappa: f64,
    eta: f64,
    effective_kappa: f64,
}

impl From<&DetectorCoupling> for CouplingOut {
    fn from(c: &DetectorCoupling) -> Self {
        CouplingOut {
            gamma0: c.gamma0(),
            dt: c.dt(),
            kappa: c.kappa(),
            eta: c.eta(),
            effective_kappa: c.effective_kappa(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MethodColumn {
    method: Method,
    probs: Vec<f64>,
    tail: f64,
    warnings: Vec<ValidityWarning>,
}

#[derive(Serialize, Deserialize)]
struct Disagreement {
    method_a: Method,
    method_b: Method,
    max_abs_difference: f64,
}

#[derive(Serialize, Deserialize)]
struct ProbsOutput {
    schema_version: u32,
    state: FieldState,
    coupling: CouplingOut,
    small_angle: bool,
    columns: Vec<MethodColumn>,
    disagreement: Option<Disagreement>,
}

fn compute_distribution(
    state: &FieldState,
    coupling: &DetectorCoupling,
    n_max: usize,
    method: Method,
    small_angle: bool,
) -> Result<CountDistribution> {
    if small_angle && method == Method::PRepresentation {
        let probs: Vec<f64> = (0..=n_max)
            .map(|n| detector::pn_exact_with_mode(state, coupling, n, AngleMode::SmallAngle))
            .collect::<Result<_>>()?;
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        Ok(CountDistribution::new(probs, Method::PRepresentation, tail))
    } else {
        detector::distribution(state, coupling, n_max, method)
    }
}

fn cmd_probs(args: ProbsArgs) -> Result<()> {
    let state = parse_state(&args.state)?;
    let coupling = args.coupling.build()?;
    if args.methods.is_empty() {
        return Err(Error::invalid("methods", "need at least one method"));
    }
    let mut columns = Vec::new();
    for name in &args.methods {
        let method: Method = name.parse()?;
        let dist = compute_distribution(&state, &coupling, args.nmax, method, args.small_angle)?;
        columns.push(MethodColumn {
            method,
            probs: dist.probs().to_vec(),
            tail: dist.tail_mass(),
            warnings: dist.warnings().to_vec(),
        });
    }
    let mut disagreement: Option<Disagreement> = None;
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            let rows = columns[i].probs.len().min(columns[j].probs.len());
            let max_abs = (0..rows)
                .map(|n| (columns[i].probs[n] - columns[j].probs[n]).abs())
                .fold(0.0f64, f64::max);
            if disagreement
                .as_ref()
                .map(|d| max_abs > d.max_abs_difference)
                .unwrap_or(true)
            {
                disagreement = Some(Disagreement {
                    method_a: columns[i].method,
                    method_b: columns[j].method,
                    max_abs_difference: max_abs,
                });
            }
        }
    }
    let output = ProbsOutput {
        schema_version: SCHEMA_VERSION,
        state,
        coupling: CouplingOut::from(&coupling),
        small_angle: args.small_angle,
        columns,
        disagreement,
    };
    let text = match args.output.format {
        Format::Json => rounded_json(&output)?,
        Format::Csv => {
            let mut text = String::from("n");
            for col in &output.columns {
                text.push_str(&format!(",{}", col.method));
            }
            text.push('\n');
            let rows = output
                .columns
                .iter()
                .map(|c| c.probs.len())
                .max()
                .unwrap_or(0);
            for n in 0..rows {
                text.push_str(&n.to_string());
                for col in &output.columns {
                    match col.probs.get(n) {
                        Some(p) => text.push_str(&format!(",{}", format_sig(*p))),
                        None => text.push(','),
                    }
                }
                text.push('\n');
            }
            text
        }
    };
    emit(&text, args.output.out.as_deref())
}

#[derive(Serialize, Deserialize)]
struct RatioOutput {
    schema_version: u32,
    state: FieldState,
    coupling: CouplingOut,
    method: Method,
    probs: Vec<f64>,
    r: Option<f64>,
    r_reason: Option<String>,
    r_prime: Option<f64>,
    r_prime_reason: Option<String>,
    classification: Option<String>,
    reference_r: Option<f64>,
    reference_r_prime: Option<f64>,
    mean_occupation: f64,
    mandel_q: Option<f64>,
}

fn cmd_ratio(args: RatioArgs) -> Result<()> {
    let state = parse_state(&args.state)?;
    let coupling = args.coupling.build()?;
    let method = if args.method == "auto" {
        match state.p_function() {
            crate::states::PFunctionDescriptor::Unavailable => Method::Oracle,
            _ => Method::PRepresentation,
        }
    } else {
        args.method.parse()?
    };
    let result = stats::ratios(&state, &coupling, method)?;
    let output = RatioOutput {
        schema_version: SCHEMA_VERSION,
        coupling: CouplingOut::from(&coupling),
        method,
        probs: result.probs.clone(),
        r: result.r,
        r_reason: result.r_reason.clone(),
        r_prime: result.r_prime,
        r_prime_reason: result.r_prime_reason.clone(),
        classification: result.r.map(|r| stats::classify_ratio(r).to_string()),
        reference_r: stats::reference_r(&state),
        reference_r_prime: stats::reference_r_prime(&state),
        mean_occupation: state.mean_occupation(),
        mandel_q: stats::mandel_q(&state).ok(),
        state,
    };
    let text = match args.output.format {
        Format::Json => rounded_json(&output)?,
        Format::Csv => {
            let fmt_opt = |v: &Option<f64>| v.map(format_sig).unwrap_or_default();
            let mut text = String::from("key,value\n");
            for (n, p) in output.probs.iter().enumerate() {
                text.push_str(&format!("p{n},{}\n", format_sig(*p)));
            }
            text.push_str(&format!("r,{}\n", fmt_opt(&output.r)));
            text.push_str(&format!("r_prime,{}\n", fmt_opt(&output.r_prime)));
            text.push_str(&format!(
                "classification,{}\n",
                output.classification.clone().unwrap_or_default()
            ));
            text.push_str(&format!("reference_r,{}\n", fmt_opt(&output.reference_r)));
            text
        }
    };
    emit(&text, args.output.out.as_deref())
}

#[derive(Serialize, Deserialize)]
struct MomentRow {
    j: u32,
    analytic: f64,
    oracle: f64,
}

#[derive(Serialize, Deserialize)]
struct MomentsOutput {
    schema_version: u32,
    state: FieldState,
    moments: Vec<MomentRow>,
    mean_occupation: f64,
    mandel_q: Option<f64>,
    mandel_q_reason: Option<String>,
}

fn cmd_moments(args: MomentsArgs) -> Result<()> {
    let state = parse_state(&args.state)?;
    let mut rows = Vec::new();
    for j in 1..=4 {
        rows.push(MomentRow {
            j,
            analytic: state.analytic_moment(j)?,
            oracle: fock::normal_ordered_moment(&state, j)?,
        });
    }
    let (q, q_reason) = match stats::mandel_q(&state) {
        Ok(q) => (Some(q), None),
        Err(err) => (None, Some(err.to_string())),
    };
    let output = MomentsOutput {
        schema_version: SCHEMA_VERSION,
        mean_occupation: state.mean_occupation(),
        moments: rows,
        mandel_q: q,
        mandel_q_reason: q_reason,
        state,
    };
    let text = match args.output.format {
        Format::Json => rounded_json(&output)?,
        Format::Csv => {
            let mut text = String::from("j,analytic,oracle\n");
            for row in &output.moments {
                text.push_str(&format!(
                    "{},{},{}\n",
                    row.j,
                    format_sig(row.analytic),
                    format_sig(row.oracle)
                ));
            }
            text
        }
    };
    emit(&text, args.output.out.as_deref())
}

#[derive(Serialize)]
struct SampleSummary {
    schema_version: u32,
    windows: usize,
    mean: f64,
    variance: f64,
    written: Vec<String>,
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let state = parse_state(&args.state)?;
    let experiment = ClickExperiment::new(
        state,
        args.gamma0,
        args.dt,
        args.steps,
        args.windows,
        args.seed,
    )?;
    let record = sampler::sample_clicks(&experiment)?;
    match args.out {
        Some(base) => {
            let base_path = resolve_path(&base);
            let json_path = if base_path.extension().is_some() {
                base_path.clone()
            } else {
                base_path.with_extension("json")
            };
            let csv_path = json_path.with_extension("csv");
            std::fs::write(&json_path, rounded_json(&record)?)?;
            std::fs::write(&csv_path, record.to_csv())?;
            let summary = SampleSummary {
                schema_version: SCHEMA_VERSION,
                windows: record.windows(),
                mean: record.stats.mean,
                variance: record.stats.variance,
                written: vec![
                    json_path.to_string_lossy().into_owned(),
                    csv_path.to_string_lossy().into_owned(),
                ],
            };
            print!("{}", rounded_json(&summary)?);
            Ok(())
        }
        None => {
            print!("{}", rounded_json(&record)?);
            Ok(())
        }
    }
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let text = std::fs::read_to_string(resolve_path(&args.record))?;
    let record = CountRecord::from_json(&text)?;
    let alternatives: Vec<Alternative> = args
        .alternatives
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    let opts = TestOptions {
        alternatives,
        resamples: args.bootstrap,
        alpha: args.alpha,
        seed: args.seed,
    };
    let report = sampler::test_coherent_null(&record, &opts)?;
    let text = match args.output.format {
        Format::Json => rounded_json(&report)?,
        Format::Csv => {
            let fmt_opt = |v: Option<f64>| v.map(format_sig).unwrap_or_default();
            let mut text = String::from("key,value\n");
            text.push_str(&format!("windows,{}\n", report.windows));
            text.push_str(&format!("lambda_hat,{}\n", format_sig(report.lambda_hat)));
            text.push_str(&format!("statistic,{}\n", format_sig(report.statistic)));
            text.push_str(&format!("p_value,{}\n", fmt_opt(report.p_value)));
            text.push_str(&format!("dispersion,{}\n", fmt_opt(report.dispersion)));
            text.push_str(&format!(
                "dispersion_p_value,{}\n",
                fmt_opt(report.dispersion_p_value)
            ));
            text.push_str(&format!("verdict,{:?}\n", report.verdict));
            text
        }
    };
    emit(&text, args.output.out.as_deref())
}

#[derive(Serialize, Deserialize)]
struct AstroOutput {
    schema_version: u32,
    bar: BarDetector,
    gamma0_per_s: f64,
    nbar: f64,
    mandel_q: f64,
    rows: Vec<ScenarioRow>,
}

fn cmd_astro(args: AstroArgs) -> Result<()> {
    let scenario: Option<ScenarioFile> = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(resolve_path(path))?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let bar = if let Some(mass) = args.bar_mass {
        BarDetector::from_frequency(
            mass,
            args.bar_length.expect("clap enforces bar argument group"),
            args.bar_frequency
                .expect("clap enforces bar argument group"),
        )?
    } else if let Some(spec) = scenario.as_ref().and_then(|s| s.bars.first()) {
        spec.detector()?
    } else {
        BarDetector::reference()
    };

    let frequencies = if args.nu.is_empty() {
        vec![200.0, 1000.0]
    } else {
        args.nu.clone()
    };
    let mut chirps: Vec<ChirpSpec> = Vec::new();
    if let Some(preset) = args.preset {
        let (label, mass) = match preset {
            Preset::Gw150914 => ("GW150914", 30.0),
            Preset::Gw170817 => ("GW170817", 1.19),
        };
        chirps.push(ChirpSpec {
            label: label.into(),
            chirp_mass_solar: mass,
            frequencies_hz: frequencies.clone(),
        });
    }
    if let Some(mass) = args.chirp_mass_solar {
        chirps.push(ChirpSpec {
            label: "custom".into(),
            chirp_mass_solar: mass,
            frequencies_hz: frequencies.clone(),
        });
    }
    if let Some(file) = &scenario {
        chirps.extend(file.chirps.iter().cloned());
    }
    if chirps.is_empty() {
        return Err(Error::invalid(
            "astro",
            "no chirp specified: use --preset, --chirp-mass-solar or --scenario",
        ));
    }
    let mandel_q = args.mandel_q.unwrap_or(args.nbar);
    let rows = astro::evaluate_chirps(&bar, &chirps, args.nbar, mandel_q)?;
    let output = AstroOutput {
        schema_version: SCHEMA_VERSION,
        gamma0_per_s: astro::weber_gamma0(&bar),
        bar,
        nbar: args.nbar,
        mandel_q,
        rows,
    };
    let text = match args.output.format {
        Format::Json => rounded_json(&output)?,
        Format::Csv => {
            let mut text = String::from(
                "label,frequency_hz,dt_max_s,bandwidth_rad_per_s,gamma0_per_s,acoherence_signal\n",
            );
            for row in &output.rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    row.label,
                    format_sig(row.frequency_hz),
                    format_sig(row.dt_max_s),
                    format_sig(row.bandwidth_rad_per_s),
                    format_sig(row.gamma0_per_s),
                    format_sig(row.acoherence_signal)
                ));
            }
            text
        }
    };
    emit(&text, args.output.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_grammar_round_trip() {
        let coherent = parse_state("coherent:1+0.5i").unwrap();
        match coherent {
            FieldState::Coherent { alpha } => {
                assert_eq!(alpha, Complex64::new(1.0, 0.5));
            }
            other => panic!("unexpected state {other:?}"),
        }
        assert_eq!(parse_state("fock:3").unwrap(), FieldState::fock(3));
        assert!(matches!(
            parse_state("thermal:0.5").unwrap(),
            FieldState::Thermal { n_th } if n_th == 0.5
        ));
        assert!(matches!(
            parse_state("squeezed:1.2").unwrap(),
            FieldState::SqueezedVacuum { r } if r == 1.2
        ));
        assert!(parse_state("gaussian:2,0.5,0,1").is_ok());
        assert!(parse_state("gaussian:2,0.5").is_err());
        assert!(parse_state("bogus:1").is_err());
        assert!(parse_state("thermal:-1").is_err());
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(2.0), "2.00000000000e0");
        assert_eq!(format_sig(1.0 / 3.0), "3.33333333333e-1");
        let rounded: f64 = format_sig(std::f64::consts::PI).parse().unwrap();
        assert!((rounded - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn coupling_requires_kappa_or_pair() {
        let args = CouplingArgs {
            kappa: None,
            gamma0: Some(1.0),
            dt: None,
            eta: 1.0,
        };
        assert!(args.build().is_err());
        let args = CouplingArgs {
            kappa: Some(0.3),
            gamma0: None,
            dt: None,
            eta: 0.5,
        };
        let coupling = args.build().unwrap();
        assert_eq!(coupling.eta(), 0.5);
        assert!((coupling.kappa() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rounded_json_is_stable() {
        #[derive(Serialize)]
        struct Demo {
            x: f64,
        }
        let a = rounded_json(&Demo { x: 0.1 + 0.2 }).unwrap();
        let b = rounded_json(&Demo { x: 0.3 }).unwrap();
        assert_eq!(a, b);
    }
}
