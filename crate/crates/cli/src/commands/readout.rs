use clap::{Args, ValueEnum};
use qpu_twin::readout::{
    assignment_matrix, default_grid, fit_classifier, hybridized_linewidths, simulate_shots, transmission_s21,
    AssignmentMatrix, Classifier, HybridModes, IQShotSet, QubitState, ReadoutModes,
};
use serde::Serialize;

use super::figure;
use crate::svg::{self, Kind, Plot, Series};
use crate::table::{num, text, Table};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Spectrum,
    Shots,
    Matrix,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Shots => "shots",
            Mode::Matrix => "matrix",
        }
    }
}

#[derive(Debug, Args)]
pub struct ReadoutArgs {
    #[arg(value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub qubit: Option<String>,
    /// Shots per prepared state.
    #[arg(long)]
    pub shots: Option<usize>,
    /// Measurement efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Drive amplitude, square root of the resonant ground-state photon number.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Overrides the qubit T1 in µs during the readout window; `inf` disables decay.
    #[arg(long)]
    pub t1_us: Option<f64>,
    /// Keep shots whose pre-selection readout is not ground.
    #[arg(long)]
    pub no_preselect: bool,
    /// Frequency points in the transmission spectrum.
    #[arg(long, default_value_t = 1201)]
    pub points: usize,
}

#[derive(Serialize)]
struct ModeSummary {
    state: QubitState,
    omega_r_ghz: f64,
    hybrid: HybridModes,
}

#[derive(Serialize)]
struct SpectrumReport {
    qubit: String,
    two_chi_mhz: f64,
    modes: Vec<ModeSummary>,
}

#[derive(Serialize)]
struct ShotSummary<'a> {
    qubit: &'a str,
    probe_frequency_ghz: f64,
    snr: f64,
    sigma: f64,
    mean_error: f64,
    discarded: [f64; 3],
    preselected: bool,
}

#[derive(Serialize)]
struct MatrixReport<'a> {
    qubit: &'a str,
    matrix: &'a AssignmentMatrix,
    mean_error: f64,
    row_sums: [f64; 3],
    classifier: &'a Classifier,
    probe_frequency_ghz: f64,
    snr: f64,
}

pub fn run(ctx: &mut Context, args: &ReadoutArgs) -> CliResult<()> {
    let q = super::qubit(ctx, args.qubit.as_deref())?.clone();
    let modes = q.readout_modes()?;
    match args.mode {
        Mode::Spectrum => spectrum(ctx, &q.name, &modes, args.points),
        Mode::Shots | Mode::Matrix => {
            let mut cfg = q
                .readout_config()
                .ok_or_else(|| CliError::Input(format!("qubit {} has no readout settings", q.name)))?;
            cfg.seed = ctx.global.seed;
            if let Some(n) = args.shots {
                cfg.shots = n;
            }
            if let Some(e) = args.eta {
                cfg.eta = e;
            }
            if let Some(a) = args.amplitude {
                cfg.drive_amplitude = a;
            }
            cfg.validate()?;
            let t1 = args.t1_us.unwrap_or(q.t1_us);
            if !(t1 > 0.0) {
                return Err(CliError::Input("--t1-us must be positive".into()));
            }
            let shots = simulate_shots(&modes, &cfg, t1)?;
            let clf = fit_classifier(&shots)?;
            let am = assignment_matrix(&shots, &clf, !args.no_preselect)?;
            println!(
                "{}: probe {:.6} GHz, SNR {:.3}, mean assignment error {:.3e}, discarded {:.3e}",
                q.name,
                shots.probe_frequency,
                shots.snr,
                am.mean_error(),
                am.total_discarded()
            );
            if args.mode == Mode::Shots {
                write_shots(ctx, &q.name, &shots, &clf, &am, !args.no_preselect)
            } else {
                write_matrix(ctx, &q.name, &shots, &clf, &am)
            }
        }
    }
}

fn spectrum(ctx: &mut Context, name: &str, modes: &ReadoutModes, points: usize) -> CliResult<()> {
    if points < 2 {
        return Err(CliError::Input("need at least two frequency points".into()));
    }
    let grid = default_grid(modes, 0.03, points);
    let s21: Vec<Vec<f64>> = QubitState::ALL
        .iter()
        .map(|&s| transmission_s21(modes, s, &grid).iter().map(|z| z.norm()).collect())
        .collect();
    let mut table = Table::new(&["frequency_ghz", "s21_g", "s21_e", "s21_f"]);
    for (k, f) in grid.iter().enumerate() {
        table.push(vec![num(*f), num(s21[0][k]), num(s21[1][k]), num(s21[2][k])]);
    }
    let report = SpectrumReport {
        qubit: name.into(),
        two_chi_mhz: modes.two_chi() * 1e3,
        modes: QubitState::ALL
            .iter()
            .map(|&s| {
                Ok(ModeSummary {
                    state: s,
                    omega_r_ghz: modes.omega_r[s.index()],
                    hybrid: hybridized_linewidths(modes, s)?,
                })
            })
            .collect::<CliResult<_>>()?,
    };
    let g = &report.modes[0].hybrid;
    println!(
        "{name}: kappa_r {:.3} MHz, kappa_p {:.3} MHz, 2chi {:.3} MHz",
        g.kappa_r_eff * 1e3,
        g.kappa_p_eff * 1e3,
        report.two_chi_mhz
    );
    ctx.out.table(&format!("readout-{name}-spectrum"), &table, ctx.global.format)?;
    ctx.out.json(&format!("readout-{name}-modes.json"), &report)?;
    let plot = Plot {
        title: format!("Feedline transmission, {name}"),
        xlabel: "frequency (GHz)".into(),
        ylabel: "|S21|".into(),
        series: QubitState::ALL
            .iter()
            .map(|&s| Series::new(format!("|{s}>"), grid.clone(), s21[s.index()].clone(), Kind::Line))
            .collect(),
        ..Plot::default()
    };
    figure(ctx, &format!("readout-{name}-spectrum.svg"), &plot, &table)
}

fn write_shots(
    ctx: &mut Context,
    name: &str,
    shots: &IQShotSet,
    clf: &Classifier,
    am: &AssignmentMatrix,
    preselected: bool,
) -> CliResult<()> {
    let mut table = Table::new(&["prepared", "i", "q", "presel_i", "presel_q"]);
    for r in &shots.records {
        table.push(vec![text(r.prepared.symbol()), num(r.i), num(r.q), num(r.presel_i), num(r.presel_q)]);
    }
    ctx.out.table(&format!("readout-{name}-shots"), &table, ctx.global.format)?;
    ctx.out.json(
        &format!("readout-{name}-shots-summary.json"),
        &ShotSummary {
            qubit: name,
            probe_frequency_ghz: shots.probe_frequency,
            snr: shots.snr,
            sigma: shots.sigma,
            mean_error: am.mean_error(),
            discarded: am.discarded,
            preselected,
        },
    )?;

    // Histogram of the projection onto the axis through the g and e centers.
    let g = clf.components[0].mean;
    let e = clf.components[1].mean;
    let axis = [e[0] - g[0], e[1] - g[1]];
    let norm = axis[0].hypot(axis[1]).max(f64::MIN_POSITIVE);
    let proj = |x: [f64; 2]| ((x[0] - g[0]) * axis[0] + (x[1] - g[1]) * axis[1]) / norm;
    let values: Vec<(QubitState, f64)> = shots.records.iter().map(|r| (r.prepared, proj(r.iq()))).collect();
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let bins = 80usize;
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = [vec![0usize; bins], vec![0usize; bins], vec![0usize; bins]];
    for (s, v) in &values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[s.index()][k] += 1;
    }
    let centers: Vec<f64> = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    let mut hist = Table::new(&["projection", "count_g", "count_e", "count_f"]);
    for k in 0..bins {
        hist.push(vec![
            num(centers[k]),
            num(counts[0][k] as f64),
            num(counts[1][k] as f64),
            num(counts[2][k] as f64),
        ]);
    }
    let plot = Plot {
        title: format!("Integrated single shots, {name}"),
        xlabel: "projection on the g-e axis".into(),
        ylabel: "counts".into(),
        series: QubitState::ALL
            .iter()
            .map(|&s| {
                Series::new(
                    format!("prepared {s}"),
                    centers.clone(),
                    counts[s.index()].iter().map(|&c| c as f64).collect(),
                    Kind::Steps,
                )
            })
            .collect(),
        ..Plot::default()
    };
    figure(ctx, &format!("readout-{name}-shots.svg"), &plot, &hist)
}

fn write_matrix(ctx: &mut Context, name: &str, shots: &IQShotSet, clf: &Classifier, am: &AssignmentMatrix) -> CliResult<()> {
    ctx.out.json(
        &format!("readout-{name}-assignment.json"),
        &MatrixReport {
            qubit: name,
            matrix: am,
            mean_error: am.mean_error(),
            row_sums: [am.row_sum(0), am.row_sum(1), am.row_sum(2)],
            classifier: clf,
            probe_frequency_ghz: shots.probe_frequency,
            snr: shots.snr,
        },
    )?;
    let mut table = Table::new(&["prepared", "assigned", "probability"]);
    for s in QubitState::ALL {
        for a in QubitState::ALL {
            table.push(vec![text(s.symbol()), text(a.symbol()), num(am.p[s.index()][a.index()])]);
        }
    }
    let idx = [0.0, 1.0, 2.0];
    let z: Vec<Vec<f64>> = (0..3).map(|s| am.p[s].to_vec()).collect();
    let stamp = ctx.out.stamp();
    let s = svg::heatmap(
        &format!("Assignment probabilities, {name}"),
        "assigned state (g, e, f)",
        "prepared state (g, e, f)",
        &idx,
        &idx,
        &z,
        &table.to_csv()?,
        stamp.as_deref(),
    );
    ctx.out.text(&format!("readout-{name}-assignment.svg"), s);
    Ok(())
}
