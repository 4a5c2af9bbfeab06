use clap::{Args, ValueEnum};
use qpu_twin::dynamics::{
    calibrate_cz, chevron_scan, resonant_amplitude, spectroscopy_lines, CzConfig, CzPulse, DuffingPair, GateReport,
};
use serde::Serialize;

use super::{figure, parse_list};
use crate::svg::{self, Kind, Plot, Series};
use crate::table::{num, Table};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Spectroscopy,
    Chevron,
    Calibrate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectroscopy => "spectroscopy",
            Mode::Chevron => "chevron",
            Mode::Calibrate => "calibrate",
        }
    }
}

#[derive(Debug, Args)]
pub struct GateArgs {
    #[arg(value_enum)]
    pub mode: Mode,
    /// Coupled pair written a,b; defaults to the first coupler.
    #[arg(long)]
    pub pair: Option<String>,
    /// Spectroscopy: Gaussian noise on each line, MHz.
    #[arg(long, default_value_t = 0.1)]
    pub noise_mhz: f64,
    /// Spectroscopy: sweep half-width around resonance, MHz.
    #[arg(long, default_value_t = 40.0)]
    pub span_mhz: f64,
    /// Spectroscopy sweep points, or chevron amplitude points.
    #[arg(long, default_value_t = 81)]
    pub points: usize,
    /// Chevron: explicit qubit-2 flux amplitudes, comma separated.
    #[arg(long)]
    pub amplitudes: Option<String>,
    /// Chevron: longest pulse, ns.
    #[arg(long, default_value_t = 120.0)]
    pub max_duration_ns: f64,
    /// Chevron: duration step, ns.
    #[arg(long, default_value_t = 1.0)]
    pub duration_step_ns: f64,
    /// Chevron: qubit-1 flux offset; defaults to the interaction point.
    #[arg(long)]
    pub q1_flux: Option<f64>,
}

/// File stem for artifacts of a pair.
pub fn pair_stem(names: &[String; 2]) -> String {
    format!("gate-{}-{}", names[0], names[1])
}

/// Qubit-1 flux offset placing it at the interaction frequency.
fn interaction_flux(pair: &DuffingPair) -> CliResult<f64> {
    let q1 = &pair.qubits[0];
    Ok(q1
        .flux_map
        .flux_for_detuning(q1.idle_phi, pair.interaction_frequency - q1.idle_frequency())?)
}

#[derive(Serialize)]
struct SplittingReport<'a> {
    pair: &'a [String; 2],
    two_j_mhz: f64,
    two_j_err_mhz: f64,
    programmed_two_j_mhz: f64,
    noise_mhz: f64,
}

#[derive(Serialize)]
struct ChevronReport<'a> {
    pair: &'a [String; 2],
    q1_flux: f64,
    resonant_amplitude: Option<f64>,
    recovery_amplitude: Option<f64>,
    recovery_time_ns: Option<f64>,
    minimum_gate_ns: f64,
}

pub fn run(ctx: &mut Context, args: &GateArgs) -> CliResult<()> {
    let coupler = super::coupler(ctx, args.pair.as_deref())?.clone();
    let pair = ctx.device.pair(&coupler)?;
    let stem = pair_stem(&coupler.qubits);
    match args.mode {
        Mode::Spectroscopy => spectroscopy(ctx, args, &coupler.qubits, &pair, &stem),
        Mode::Chevron => chevron(ctx, args, &coupler.qubits, &pair, &stem),
        Mode::Calibrate => {
            let cfg = CzConfig {
                buffer_ns: ctx.device.gates.cz_buffer_ns,
                ..CzConfig::default()
            };
            let (report, pulse) = calibrate_cz(&pair, None, &cfg)?;
            println!(
                "conditional phase {:.6} rad, leakage {:.2e}, total duration {} ns",
                report.conditional_phase, report.leakage, report.total_duration_ns
            );
            ctx.out.json(&format!("{stem}-report.json"), &report)?;
            ctx.out.json(&format!("{stem}-pulse.json"), &pulse)?;
            write_pulse_figure(ctx, &stem, &pulse, &report)
        }
    }
}

fn spectroscopy(ctx: &mut Context, args: &GateArgs, names: &[String; 2], pair: &DuffingPair, stem: &str) -> CliResult<()> {
    if !(args.noise_mhz >= 0.0 && args.span_mhz > 0.0) {
        return Err(CliError::Input("noise must be non-negative and the span positive".into()));
    }
    // Qubit 1 parked at the interaction frequency; qubit 2 swept across it.
    let mut parked = pair.clone();
    parked.qubits[0].idle_phi += interaction_flux(pair)?;
    let f1 = parked.qubits[0].idle_frequency();
    let q2 = &parked.qubits[1];
    let n = args.points.max(4);
    let flux: Vec<f64> = (0..n)
        .map(|k| {
            let d = -args.span_mhz + 2.0 * args.span_mhz * k as f64 / (n - 1) as f64;
            q2.flux_map.flux_for_detuning(q2.idle_phi, f1 + d * 1e-3 - q2.idle_frequency())
        })
        .collect::<qpu_twin::Result<_>>()?;
    let lines = spectroscopy_lines(&parked, &flux, args.noise_mhz * 1e-3, ctx.global.seed)?;
    println!("2J = {:.3} ± {:.3} MHz", lines.two_j * 1e3, lines.two_j_err * 1e3);
    let mut table = Table::new(&["q2_flux", "lower_ghz", "upper_ghz"]);
    for k in 0..n {
        table.push(vec![num(lines.flux[k]), num(lines.lower[k]), num(lines.upper[k])]);
    }
    ctx.out.table(&format!("{stem}-spectroscopy"), &table, ctx.global.format)?;
    ctx.out.json(
        &format!("{stem}-spectroscopy-fit.json"),
        &SplittingReport {
            pair: names,
            two_j_mhz: lines.two_j * 1e3,
            two_j_err_mhz: lines.two_j_err * 1e3,
            programmed_two_j_mhz: 2.0 * pair.j_qq * 1e3,
            noise_mhz: args.noise_mhz,
        },
    )?;
    let plot = Plot {
        title: "Single-excitation avoided crossing".into(),
        xlabel: "qubit 2 flux offset".into(),
        ylabel: "frequency (GHz)".into(),
        series: vec![
            Series::new("lower branch", lines.flux.clone(), lines.lower.clone(), Kind::Points),
            Series::new("upper branch", lines.flux.clone(), lines.upper.clone(), Kind::Points),
        ],
        ..Plot::default()
    };
    figure(ctx, &format!("{stem}-spectroscopy.svg"), &plot, &table)
}

fn chevron(ctx: &mut Context, args: &GateArgs, names: &[String; 2], pair: &DuffingPair, stem: &str) -> CliResult<()> {
    if !(args.duration_step_ns > 0.0 && args.max_duration_ns > args.duration_step_ns) {
        return Err(CliError::Input("durations need a positive step below the maximum".into()));
    }
    let q1_flux = match args.q1_flux {
        Some(f) => f,
        None => interaction_flux(pair)?,
    };
    // Out of reach when qubit 1 is parked where no qubit-2 flux hits the ef resonance.
    let res = resonant_amplitude(pair, q1_flux).ok();
    let amplitudes = match &args.amplitudes {
        Some(s) => parse_list(s)?,
        None => {
            // ±30 MHz of qubit-2 detuning around the ef resonance.
            let q2 = &pair.qubits[1];
            let target = pair.qubits[0].frequency_at(q1_flux) - q2.anharmonicity - q2.idle_frequency();
            let n = args.points.max(2);
            (0..n)
                .map(|k| {
                    let d = -0.03 + 0.06 * k as f64 / (n - 1) as f64;
                    q2.flux_map.flux_for_detuning(q2.idle_phi, target + d)
                })
                .collect::<qpu_twin::Result<_>>()?
        }
    };
    let steps = (args.max_duration_ns / args.duration_step_ns).floor() as usize;
    let durations: Vec<f64> = (0..=steps).map(|k| k as f64 * args.duration_step_ns).collect();
    let map = chevron_scan(pair, q1_flux, &durations, &amplitudes)?;
    let nearest = res.and_then(|res| {
        amplitudes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - res).abs().total_cmp(&(b.1 - res).abs()))
            .map(|(i, _)| i)
    });
    let recovery = nearest
        .filter(|&k| map.p_ground[k].iter().any(|p| *p > 0.5))
        .and_then(|k| map.recovery_time(k).ok());
    match (recovery, nearest) {
        (Some(t), Some(k)) => println!("recovery time {t:.2} ns at amplitude {:.6}", amplitudes[k]),
        _ => println!("no population exchange near resonance"),
    }
    let mut table = Table::new(&["q2_amplitude", "duration_ns", "p_ground_q1"]);
    for (a, row) in amplitudes.iter().zip(&map.p_ground) {
        for (t, p) in durations.iter().zip(row) {
            table.push(vec![num(*a), num(*t), num(*p)]);
        }
    }
    ctx.out.table(&format!("{stem}-chevron"), &table, ctx.global.format)?;
    ctx.out.json(
        &format!("{stem}-chevron-summary.json"),
        &ChevronReport {
            pair: names,
            q1_flux,
            resonant_amplitude: res,
            recovery_amplitude: nearest.map(|k| amplitudes[k]),
            recovery_time_ns: recovery,
            minimum_gate_ns: 1.0 / (2.0 * 2f64.sqrt() * pair.j_qq),
        },
    )?;
    let stamp = ctx.out.stamp();
    let s = svg::heatmap(
        "Qubit 1 ground population from |ee>",
        "pulse duration (ns)",
        "qubit 2 flux amplitude",
        &durations,
        &amplitudes,
        &map.p_ground,
        &table.to_csv()?,
        stamp.as_deref(),
    );
    ctx.out.text(&format!("{stem}-chevron.svg"), s);
    Ok(())
}

fn write_pulse_figure(ctx: &mut Context, stem: &str, pulse: &CzPulse, report: &GateReport) -> CliResult<()> {
    let t = pulse.q1.times();
    let mut table = Table::new(&["time_ns", "q1_flux", "q2_flux"]);
    for k in 0..t.len() {
        table.push(vec![num(t[k]), num(pulse.q1.samples[k]), num(pulse.q2.samples[k])]);
    }
    let plot = Plot {
        title: format!("Net-zero CZ pulse, {} ns with buffers", report.total_duration_ns),
        xlabel: "time (ns)".into(),
        ylabel: "flux offset".into(),
        series: vec![
            Series::new("qubit 1", t.clone(), pulse.q1.samples.clone(), Kind::Line),
            Series::new("qubit 2", t, pulse.q2.samples.clone(), Kind::Line),
        ],
        hline: Some(0.0),
        ..Plot::default()
    };
    figure(ctx, &format!("{stem}-pulse.svg"), &plot, &table)
}
