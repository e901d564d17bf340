//! Command-line interface.
//!
//! Exit codes: 0 on success whatever the test outcome, 2 for invalid
//! configuration, 3 for unreadable or invalid data.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::design::{check_linear_independence, parse_weights, ContrastSpec, WeightSpec};
use crate::error::Error;
use crate::estimators::kaplan_meier_pooled;
use crate::numerics::Sidedness;
use crate::procedures::{parse_methods, run_method, text_table, write_csv, Method, MethodSettings, TestReport, MIN_BOOTSTRAP_ITERATIONS};
use crate::simulation::{builtin_scenario, builtin_scenarios, run_study, Scenario, StudyConfig};
use crate::survdata::{parse_csv, ColumnSpec, RiskTable, SurvivalSample};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

const ALL_METHODS: &str = "logrank,mdir,maxwlr,casanova-rade,casanova-pois";

#[derive(Debug, Parser)]
#[command(name = "mctsurv", version, about = "Multiple contrast tests for right-censored survival data")]
pub struct Cli {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "MCTSURV_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run multiple contrast tests on a CSV sample.
    Test(TestArgs),
    /// Estimate FWER and local power on simulated scenarios.
    Simulate(SimulateArgs),
    /// Write per-group Kaplan-Meier curves as CSV.
    KmExport(KmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    /// Column holding 1 for an event and 0 for a censoring.
    #[arg(long, default_value = "status")]
    pub status_col: String,
    #[arg(long, default_value = "group")]
    pub group_col: String,
    /// Label of the group to treat as group 1 (the Dunnett control).
    /// Otherwise groups are numbered by first appearance.
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated subset of logrank, mdir, maxwlr, casanova-rade, casanova-pois.
    #[arg(long, default_value = ALL_METHODS)]
    pub methods: String,
    /// `dunnett`, `tukey` or `pairs:1-2,1-3`.
    #[arg(long, default_value = "dunnett")]
    pub contrast: String,
    /// Comma-separated weights, `fh:r:g` or `cross`.
    #[arg(long, default_value = "fh:0:0,cross")]
    pub weights: String,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    /// Wild bootstrap iterations.
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Monte Carlo draws for the maxwlr critical value.
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One-sided maxwlr (largest statistic instead of largest absolute value).
    #[arg(long)]
    pub upper: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in scenario (prop, nprop, cross, mix, with optional -null suffix) or `all`.
    #[arg(long, required_unless_present = "scenario_file")]
    pub scenario: Option<String>,
    /// JSON file with a scenario or a list of scenarios.
    #[arg(long, conflicts_with = "scenario")]
    pub scenario_file: Option<PathBuf>,
    /// Use the full-null variant of the scenario.
    #[arg(long)]
    pub null: bool,
    #[arg(long, default_value = "dunnett")]
    pub contrast: String,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    /// Subjects per group.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Comma-separated target censoring proportions in [0, 0.3].
    #[arg(long, default_value = "0")]
    pub censoring: String,
    #[arg(long, default_value = ALL_METHODS)]
    pub methods: String,
    #[arg(long, default_value = "fh:0:0,cross")]
    pub weights: String,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    #[arg(long, default_value_t = 50_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub upper: bool,
    /// Coverage of the binomial band used to flag FWER.
    #[arg(long, default_value_t = 0.99, value_parser = parse_alpha)]
    pub band_level: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside the open interval (0, 1)"))
    }
}

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) => m,
        }
    }
}

fn config(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn data(e: Error) -> CliError {
    CliError::Data(e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(rendered.as_bytes()) } else { stdout.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start thread pool: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = pool
        .install(|| match &cli.command {
            Command::Test(a) => cmd_test(a),
            Command::Simulate(a) => cmd_simulate(a),
            Command::KmExport(a) => cmd_km_export(a),
        })
        .and_then(|out| {
            for w in &out.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            write_output(out.path.as_deref(), stdout, &out.bytes)
        });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn load_sample(input: &InputArgs) -> Result<SurvivalSample, CliError> {
    let file = File::open(&input.input)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", input.input.display())))?;
    let columns = ColumnSpec {
        time: input.time_col.clone(),
        status: input.status_col.clone(),
        group: input.group_col.clone(),
    };
    let sample = parse_csv(io::BufReader::new(file), &columns).map_err(data)?;
    match &input.reference {
        None => Ok(sample),
        Some(label) => {
            let j = sample
                .group_index(label)
                .ok_or_else(|| CliError::Config(format!("reference group `{label}` not found in the data")))?;
            sample.with_reference(j).map_err(data)
        }
    }
}

/// Rendered result of a subcommand.
#[derive(Debug)]
pub struct Output {
    pub bytes: Vec<u8>,
    pub path: Option<PathBuf>,
    pub warnings: Vec<String>,
}

fn write_output(path: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    let res = match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => stdout.write_all(bytes).map_err(|e| e.to_string()),
    };
    res.map_err(CliError::Data)
}

#[derive(Serialize)]
struct GroupInfo<'a> {
    index: usize,
    label: &'a str,
    size: usize,
    events: usize,
}

#[derive(Serialize)]
struct TestDocument<'a> {
    subjects: usize,
    events: usize,
    groups: Vec<GroupInfo<'a>>,
    contrast: String,
    seed: u64,
    reports: &'a [TestReport],
}

fn group_info(sample: &SurvivalSample) -> Vec<GroupInfo<'_>> {
    let mut events = vec![0; sample.num_groups()];
    for o in sample.observations().iter().filter(|o| o.event) {
        events[o.group] += 1;
    }
    sample
        .labels()
        .iter()
        .zip(sample.group_sizes())
        .zip(events)
        .enumerate()
        .map(|(i, ((label, &size), events))| GroupInfo { index: i + 1, label, size, events })
        .collect()
}

fn parse_common(methods: &str, weights: &str, contrast: &str, iterations: usize) -> Result<(Vec<Method>, Vec<WeightSpec>, ContrastSpec), CliError> {
    let methods = parse_methods(methods).map_err(config)?;
    let weights = parse_weights(weights).map_err(config)?;
    let contrast: ContrastSpec = contrast.parse().map_err(config)?;
    if methods.iter().any(|m| m.multiplier_law().is_some()) && iterations < MIN_BOOTSTRAP_ITERATIONS {
        return Err(CliError::Config(format!(
            "--iterations must be at least {MIN_BOOTSTRAP_ITERATIONS} for bootstrap methods, got {iterations}"
        )));
    }
    Ok((methods, weights, contrast))
}

pub fn cmd_test(args: &TestArgs) -> Result<Output, CliError> {
    let (methods, weights, spec) = parse_common(&args.methods, &args.weights, &args.contrast, args.iterations)?;
    if args.mc_samples == 0 {
        return Err(CliError::Config("--mc-samples must be positive".into()));
    }
    let sample = load_sample(&args.input)?;
    let contrasts = spec.build(sample.num_groups()).map_err(config)?;
    let warnings = check_linear_independence(&weights).err().map(|e| e.to_string()).into_iter().collect();
    let settings = MethodSettings {
        mc_samples: args.mc_samples,
        iterations: args.iterations,
        seed: args.seed,
        sidedness: if args.upper { Sidedness::Upper } else { Sidedness::TwoSided },
    };
    let reports: Vec<TestReport> = methods
        .iter()
        .map(|&m| run_method(m, &sample, &contrasts, &weights, args.alpha, &settings))
        .collect::<Result<_, _>>()
        .map_err(|e| match e {
            Error::InvalidArgument(_) | Error::InvalidWeight(_) | Error::InvalidContrast(_) => config(e),
            other => data(other),
        })?;

    let bytes = match args.format {
        Format::Json => {
            let doc = TestDocument {
                subjects: sample.len(),
                events: sample.num_events(),
                groups: group_info(&sample),
                contrast: spec.to_string(),
                seed: args.seed,
                reports: &reports,
            };
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Data(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&reports, &mut buf).map_err(data)?;
            buf
        }
        Format::Text => {
            let mut s = String::new();
            let groups: Vec<String> = group_info(&sample)
                .iter()
                .map(|g| format!("{}={} (n={}, events={})", g.index, g.label, g.size, g.events))
                .collect();
            let _ = writeln!(s, "subjects: {}, events: {}", sample.len(), sample.num_events());
            let _ = writeln!(s, "groups: {}", groups.join(", "));
            let _ = writeln!(
                s,
                "contrast: {}, weights: {}, alpha: {}, seed: {}",
                spec,
                weights.iter().map(WeightSpec::label).collect::<Vec<_>>().join(","),
                args.alpha,
                args.seed
            );
            s.push('\n');
            s.push_str(&text_table(&reports));
            for r in &reports {
                for note in &r.notes {
                    let _ = writeln!(s, "note ({}): {note}", r.method);
                }
            }
            s.into_bytes()
        }
    };
    Ok(Output { bytes, path: args.output.clone(), warnings })
}

fn load_scenarios(args: &SimulateArgs) -> Result<Vec<Scenario>, CliError> {
    if let Some(path) = &args.scenario_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let list: Vec<Scenario> = match serde_json::from_str::<Vec<Scenario>>(&text) {
            Ok(v) => v,
            Err(_) => vec![serde_json::from_str::<Scenario>(&text)
                .map_err(|e| CliError::Config(format!("invalid scenario file: {e}")))?],
        };
        return Ok(if args.null { list.iter().map(Scenario::null_variant).collect() } else { list });
    }
    let name = args.scenario.as_deref().unwrap_or_default();
    if name == "all" {
        return Ok(builtin_scenarios().into_iter().filter(|s| s.null == args.null).collect());
    }
    builtin_scenario(name, args.null).map(|s| vec![s]).map_err(config)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    let (methods, weights, contrast) = parse_common(&args.methods, &args.weights, &args.contrast, args.iterations)?;
    let censoring: Vec<f64> = args
        .censoring
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| CliError::Config(format!("invalid censoring target `{c}`"))))
        .collect::<Result<_, _>>()?;
    let scenarios = load_scenarios(args)?;
    let cfg = StudyConfig {
        methods,
        contrast,
        weights,
        runs: args.runs as usize,
        n: args.n as usize,
        censoring,
        alpha: args.alpha,
        mc_samples: args.mc_samples,
        iterations: args.iterations,
        sidedness: if args.upper { Sidedness::Upper } else { Sidedness::TwoSided },
        seed: args.seed,
        band_level: args.band_level,
    };
    let report = run_study(&scenarios, &cfg).map_err(config)?;
    let bytes = match args.format {
        Format::Json => {
            let mut s = report.to_json().map_err(data)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(data)?;
            buf
        }
        Format::Text => report.text().into_bytes(),
    };
    Ok(Output { bytes, path: args.output.clone(), warnings: Vec::new() })
}

pub fn cmd_km_export(args: &KmArgs) -> Result<Output, CliError> {
    let sample = load_sample(&args.input)?;
    let table = match RiskTable::new(&sample) {
        Ok(t) => Some(t),
        Err(Error::NoEvents) => None,
        Err(e) => return Err(data(e)),
    };
    let mut last_time = vec![0.0f64; sample.num_groups()];
    for o in sample.observations() {
        last_time[o.group] = last_time[o.group].max(o.time);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["group", "time", "survival"]).map_err(io_err)?;
    for (j, label) in sample.labels().iter().enumerate() {
        w.write_record([label.as_str(), "0", "1"]).map_err(io_err)?;
        let mut tail = (0.0, 1.0);
        if let Some(rt) = &table {
            let f = kaplan_meier_pooled(rt, &[j]).map_err(data)?;
            for (&t, &v) in f.jump_times().iter().zip(f.values()) {
                let s = 1.0 - v;
                w.write_record([label.clone(), t.to_string(), s.to_string()]).map_err(io_err)?;
                tail = (t, s);
            }
        }
        if last_time[j] > tail.0 {
            w.write_record([label.clone(), last_time[j].to_string(), tail.1.to_string()]).map_err(io_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(Output { bytes, path: args.output.clone(), warnings: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("mctsurv").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn alpha_bounds() {
        assert!(parse_alpha("0.05").is_ok());
        assert!(parse_alpha("1.5").unwrap_err().contains("(0, 1)"));
        assert!(parse_alpha("0").is_err());
        assert!(parse_alpha("x").is_err());
    }

    #[test]
    fn missing_input_is_usage_error() {
        let (code, _, err) = run_args(&["test"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("--input"));
    }

    #[test]
    fn zero_runs_is_config_error() {
        let (code, _, _) = run_args(&["simulate", "--scenario", "prop", "--runs", "0"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn unknown_scenario_is_config_error() {
        let (code, _, err) = run_args(&["simulate", "--scenario", "wavy", "--runs", "1"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("wavy"));
    }

    #[test]
    fn too_few_iterations() {
        let (code, _, err) = run_args(&["simulate", "--scenario", "prop", "--runs", "1", "--iterations", "50"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("iterations"));
    }

    #[test]
    fn missing_file_is_data_error() {
        let (code, _, _) = run_args(&["test", "--input", "/nonexistent/x.csv"]);
        assert_eq!(code, EXIT_DATA);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("km-export"));
    }
}
