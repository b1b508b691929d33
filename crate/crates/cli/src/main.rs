use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use etsmc::scenario::{ScenarioConfig, PRESETS};
use etsmc::smc::Mode;
use etsmc::Error;

const USAGE: u8 = 2;
const INFEASIBLE: u8 = 3;
const NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "etsmc",
    version,
    about = "Event-triggered delta-operator sliding mode control toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Singular values, ranks and condition numbers of the observability stacks
    Condition(Common),
    /// Switching-gain checks, bands and ultimate bounds
    Design(Common),
    /// Closed-loop run; writes trace.csv and summary.json
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// built-in scenario: example1 or example2
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// scenario JSON file
    #[arg(long)]
    config: Option<PathBuf>,
    /// periodic or event
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// comma-separated fast sampling periods in seconds
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// fail on rank deficiency (condition) or a violated gain inequality (design, simulate)
    #[arg(long)]
    strict: bool,
    /// reserved for measurement noise; currently unused
    #[arg(long)]
    seed: Option<u64>,
    /// simulated time in seconds
    #[arg(long)]
    horizon: Option<f64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "periodic" => Ok(Mode::Periodic),
        "event" => Ok(Mode::Event),
        _ => Err(format!("expected `periodic` or `event`, got `{s}`")),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument { .. } | Error::Dimension { .. } => USAGE,
            Error::Infeasible(_) => INFEASIBLE,
            _ => NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::usage(format!("cannot write {}: {e}", path.display()))
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match (&common.preset, &common.config) {
        (Some(name), None) => ScenarioConfig::preset(name).ok_or_else(|| {
            Failure::usage(format!(
                "unknown preset `{name}`; available: {}",
                PRESETS.join(", ")
            ))
        })?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        _ => return Err(Failure::usage("give exactly one of --preset or --config")),
    };
    if let Some(mode) = common.mode {
        cfg.mode = mode;
    }
    if let Some(h) = common.horizon {
        cfg.horizon = h;
    }
    if let Some(d) = &common.deltas {
        cfg.deltas = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ScenarioConfig) -> Result<Option<PathBuf>, Failure> {
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from));
    if let Some(d) = &dir {
        fs::create_dir_all(d).map_err(|e| io_failure(d, e))?;
    }
    Ok(dir)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| io_failure(&path, e))
}

fn condition(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    if cfg.deltas.is_empty() {
        return Err(Failure::usage(
            "no sampling periods: pass --deltas or set `deltas` in the config",
        ));
    }
    let report = cfg.conditioning(&[])?;
    let csv = report.to_csv();
    print!("{csv}");
    if let Some(dir) = out_dir(common, &cfg)? {
        write(&dir, "conditioning.csv", &csv)?;
        write(&dir, "conditioning.json", &report.to_json())?;
    }
    if common.strict && report.any_rank_deficient() {
        return Err(Failure {
            code: NUMERICAL,
            message: "rank-deficient observability stack".into(),
        });
    }
    Ok(())
}

fn design(common: &Common) -> Result<(), Failure> {
    let mut cfg = load(common)?;
    cfg.enforce_gain_condition |= common.strict;
    let report = cfg.design()?;
    for check in [&report.periodic, &report.event] {
        if let Some(v) = &check.violation {
            eprintln!("warning: {:?} mode: {v}", check.mode);
        }
        if let Some(w) = &check.warning {
            eprintln!("warning: {:?} mode: {w}", check.mode);
        }
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    if let Some(dir) = out_dir(common, &cfg)? {
        write(&dir, "design.json", &json)?;
    }
    Ok(())
}

fn simulate(common: &Common) -> Result<(), Failure> {
    let mut cfg = load(common)?;
    cfg.enforce_gain_condition |= common.strict;
    let trace = cfg.simulate()?;
    if let Some(v) = &trace.summary.gain.violation {
        eprintln!("warning: {v}");
    }
    let summary = trace.summary_json();
    println!("{summary}");
    let dir = out_dir(common, &cfg)?.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let path = dir.join("trace.csv");
    let file = fs::File::create(&path).map_err(|e| io_failure(&path, e))?;
    let mut w = BufWriter::new(file);
    trace
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(&path, e))?;
    write(&dir, "summary.json", &summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Condition(c) => condition(c),
        Command::Design(c) => design(c),
        Command::Simulate(c) => simulate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
