use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qpu_twin::flux::{characterize, verify, Characterization, ClosedLoopConfig, Predistortion, VerifyReport};
use serde::Serialize;

use super::figure;
use crate::svg::{Kind, Plot, Series};
use crate::table::{num, Table};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cryoscope,
    Predistort,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Cryoscope => "cryoscope",
            Mode::Predistort => "predistort",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Args)]
pub struct FluxArgs {
    #[arg(value_enum)]
    pub mode: Mode,
    /// Qubit whose flux line is characterized.
    #[arg(long)]
    pub qubit: Option<String>,
    /// Reduced flux of the idle point during the measurement.
    #[arg(long, default_value_t = 0.0)]
    pub idle_phi: f64,
    /// Frequency excursion at the pulse flat-top, MHz below the idle point.
    #[arg(long, default_value_t = 200.0)]
    pub depth_mhz: f64,
    #[arg(long, default_value_t = 100.0)]
    pub pulse_ns: f64,
    /// Maximum allowed flat-top deviation for verify, MHz.
    #[arg(long, default_value_t = 1.0)]
    pub budget_mhz: f64,
    /// Filters written by predistort; designed in place when absent.
    #[arg(long)]
    pub filters: Option<PathBuf>,
    /// Verify the uncorrected line.
    #[arg(long)]
    pub skip_predistort: bool,
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    qubit: &'a str,
    corrected: bool,
    target_mhz: f64,
    max_deviation_mhz: f64,
    window_ns: (f64, f64),
    budget_mhz: f64,
}

pub fn run(ctx: &mut Context, args: &FluxArgs) -> CliResult<()> {
    let q = super::qubit(ctx, args.qubit.as_deref())?.clone();
    let tf = ctx.device.flux_line.transfer_function();
    let map = q.flux_map()?;
    let cfg = ClosedLoopConfig {
        idle_phi: args.idle_phi,
        depth_ghz: -args.depth_mhz * 1e-3,
        pulse_ns: args.pulse_ns,
        budget_mhz: args.budget_mhz,
        ..ClosedLoopConfig::default()
    };
    if !(args.pulse_ns > 2.0 * cfg.edge_exclusion_ns && args.budget_mhz > 0.0) {
        return Err(CliError::Input("pulse must outlast the edge exclusion and the budget must be positive".into()));
    }
    let name = q.name.as_str();
    match args.mode {
        Mode::Cryoscope => {
            let r = verify(&tf, None, &map, &cfg)?;
            write_trace(ctx, name, "cryoscope", &r, false, args.budget_mhz)
        }
        Mode::Predistort => {
            let ch = characterize(&tf, &map, &cfg)?;
            for t in &ch.fitted.iir_terms {
                println!("fitted term: amplitude {:.5}, tau {:.1} ns", t.amplitude, t.tau_ns);
            }
            println!("FIR taps: {:?}", ch.predistortion.fir_taps);
            ctx.out.json(&format!("flux-{name}-filters.json"), &ch)
        }
        Mode::Verify => {
            let correction: Option<Predistortion> = if args.skip_predistort {
                None
            } else if let Some(path) = &args.filters {
                Some(load_filters(path)?)
            } else {
                let ch = characterize(&tf, &map, &cfg)?;
                ctx.out.json(&format!("flux-{name}-filters.json"), &ch)?;
                Some(ch.predistortion)
            };
            let r = verify(&tf, correction.as_ref(), &map, &cfg)?;
            println!(
                "{name}: max deviation {:.4} MHz over the flat-top ({} pre-distortion)",
                r.max_deviation_mhz,
                if correction.is_some() { "with" } else { "without" }
            );
            write_trace(ctx, name, "verify", &r, correction.is_some(), args.budget_mhz)?;
            if r.within(args.budget_mhz) {
                Ok(())
            } else {
                Err(CliError::Numerical(format!(
                    "deviation {:.4} MHz exceeds the {} MHz budget",
                    r.max_deviation_mhz, args.budget_mhz
                )))
            }
        }
    }
}

/// Accepts the predistort output or a bare filter set.
fn load_filters(path: &PathBuf) -> CliResult<Predistortion> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Ok(ch) = serde_json::from_str::<Characterization>(&text) {
        return Ok(ch.predistortion);
    }
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_trace(ctx: &mut Context, name: &str, stem: &str, r: &VerifyReport, corrected: bool, budget: f64) -> CliResult<()> {
    let mut table = Table::new(&["time_ns", "frequency_offset_mhz", "target_mhz"]);
    for (t, f) in r.trace.times_ns.iter().zip(&r.trace.freq_offsets_mhz) {
        table.push(vec![num(*t), num(*f), num(r.target_mhz)]);
    }
    ctx.out.table(&format!("flux-{name}-{stem}"), &table, ctx.global.format)?;
    ctx.out.json(
        &format!("flux-{name}-{stem}-summary.json"),
        &TraceSummary {
            qubit: name,
            corrected,
            target_mhz: r.target_mhz,
            max_deviation_mhz: r.max_deviation_mhz,
            window_ns: r.window_ns,
            budget_mhz: budget,
        },
    )?;
    let plot = Plot {
        title: format!("Qubit frequency during the flux pulse, {name}"),
        xlabel: "time (ns)".into(),
        ylabel: "deviation from target (MHz)".into(),
        series: vec![Series::new(
            if corrected { "pre-distorted" } else { "uncorrected" },
            r.trace.times_ns.clone(),
            r.trace.freq_offsets_mhz.iter().map(|f| f - r.target_mhz).collect(),
            Kind::Line,
        )],
        hline: Some(0.0),
        ..Plot::default()
    };
    figure(ctx, &format!("flux-{name}-{stem}.svg"), &plot, &table)
}
