//! Batch front end: loads a device description, runs one named experiment
//! and writes tables, JSON reports and SVG figures into an output directory.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 numerical or
//! calibration failure.

mod commands;
mod output;
mod svg;
mod table;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qpu_twin::device::DeviceDescription;

pub use output::{Output, RunManifest};
pub use table::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<qpu_twin::Error> for CliError {
    fn from(e: qpu_twin::Error) -> Self {
        use qpu_twin::Error as E;
        match e {
            E::Config(_) | E::InvalidParameter(_) | E::Truncation { .. } | E::SampleRateMismatch { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qpu-twin", version, about = "Desk-scale digital twin of a flux-tunable transmon processor")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Device description (TOML, or JSON by extension), or a bundled name: device-a, device-b.
    #[arg(long, global = true, default_value = "device-a")]
    pub config: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long, global = true, env = "QPU_TWIN_THREADS")]
    pub threads: Option<usize>,
    /// Embed a generation timestamp in SVG figures.
    #[arg(long, global = true)]
    pub stamp: bool,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit chain parameters to each qubit's measured spectrum.
    FitDevice(commands::fit::FitArgs),
    /// Readout spectroscopy, single shots and assignment matrices.
    Readout(commands::readout::ReadoutArgs),
    /// Flux-line cryoscope, pre-distortion design and closed-loop check.
    Flux(commands::flux::FluxArgs),
    /// Two-qubit spectroscopy, chevron and CZ calibration.
    Gate(commands::gate::GateArgs),
    /// Randomized benchmarking and the error budget report.
    Bench(commands::bench::BenchArgs),
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::FitDevice(_) => "fit-device".into(),
            Command::Readout(a) => format!("readout {}", a.mode.name()),
            Command::Flux(a) => format!("flux {}", a.mode.name()),
            Command::Gate(a) => format!("gate {}", a.mode.name()),
            Command::Bench(a) => format!("bench {}", a.mode.name()),
        }
    }
}

/// Everything a command needs besides its own arguments.
pub struct Context {
    pub device: DeviceDescription,
    pub global: GlobalArgs,
    pub out: Output,
}

impl Context {
    /// Reads an artifact written by an earlier command into the output directory.
    pub fn artifact<T: serde::de::DeserializeOwned>(&self, name: &str) -> CliResult<T> {
        let path = self.global.out.join(name);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Loads a device description from a path, falling back to the bundled names.
pub fn load_device(spec: &str) -> CliResult<DeviceDescription> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok(DeviceDescription::load(path)?);
    }
    DeviceDescription::builtin(spec).map_err(|_| CliError::Input(format!("{spec}: no such file or bundled device")))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(cli))) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            3
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let start = Instant::now();
    let device = load_device(&cli.global.config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Input(e.to_string()))?;
    let name = cli.command.name();
    let mut ctx = Context {
        out: Output::new(cli.global.out.clone(), cli.global.stamp),
        device,
        global: cli.global,
    };
    let result = pool.install(|| match &cli.command {
        Command::FitDevice(a) => commands::fit::run(&mut ctx, a),
        Command::Readout(a) => commands::readout::run(&mut ctx, a),
        Command::Flux(a) => commands::flux::run(&mut ctx, a),
        Command::Gate(a) => commands::gate::run(&mut ctx, a),
        Command::Bench(a) => commands::bench::run(&mut ctx, a),
    });
    // Input errors leave no outputs; numerical failures keep what was produced.
    if let Err(CliError::Input(_)) = result {
        return result;
    }
    let manifest = RunManifest {
        experiment: name,
        config: ctx.global.config.clone(),
        seed: ctx.global.seed,
        output_directory: ctx.global.out.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        exit_code: result.as_ref().map_or_else(CliError::exit_code, |_| 0),
    };
    let file = format!("manifest-{}.json", manifest.experiment.replace(' ', "-"));
    ctx.out.json(&file, &manifest)?;
    ctx.out.flush()?;
    result
}
