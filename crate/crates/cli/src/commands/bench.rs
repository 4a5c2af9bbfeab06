use std::path::Path;

use clap::{Args, ValueEnum};
use qpu_twin::dynamics::{DriveModel, Rates, T2Kind};
use qpu_twin::rb::{
    clifford_group_c2, coherence_limit, depolarizing_kraus, p_from_epc, run_rb, summarize, ChannelModel, CliffordElement,
    CoherenceSegment, DynamicsBackend, Experiment, NoiseModel, RbResult, RbSettings,
};
use serde::{Deserialize, Serialize};

use super::gate::pair_stem;
use crate::svg::{Kind, Plot, Series};
use crate::table::{num, opt, text, Table};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rb1,
    Rb2,
    Irb,
    Report,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rb1 => "rb1",
            Mode::Rb2 => "rb2",
            Mode::Irb => "irb",
            Mode::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Ideal gates.
    Noiseless,
    /// Depolarizing channel after every Clifford, set by --epc.
    Depolarizing,
    /// Depolarizing channels after each physical pulse, tuned to --rb-epc and --cz-epc.
    Channels,
    /// Calibrated pulse-level dynamics with the device coherence times.
    Dynamics,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "channels")]
    pub model: Model,
    /// Coupled pair written a,b; defaults to the first coupler.
    #[arg(long)]
    pub pair: Option<String>,
    /// rb1: benchmarked qubit; defaults to the first qubit of the pair.
    #[arg(long)]
    pub qubit: Option<String>,
    /// rb1: benchmark both qubits of the pair at once.
    #[arg(long)]
    pub simultaneous: bool,
    /// Depolarizing model: error per Clifford.
    #[arg(long)]
    pub epc: Option<f64>,
    /// Channel model: target two-qubit error per Clifford.
    #[arg(long, default_value_t = 1.34e-2)]
    pub rb_epc: f64,
    /// Channel model: error of the CZ channel.
    #[arg(long, default_value_t = 7.0e-3)]
    pub cz_epc: f64,
    /// Sequence lengths, comma separated.
    #[arg(long)]
    pub lengths: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub randomizations: usize,
    /// Shots per sequence; 0 reports exact populations.
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    /// Report: time per single-qubit gate used for its coherence limit, ns.
    #[arg(long, default_value_t = 50.0)]
    pub single_qubit_slot_ns: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRecord {
    pub experiment: String,
    pub model: Model,
    pub qubits: Vec<String>,
    pub settings: RbSettings,
    pub results: Vec<RbResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrbRecord {
    pub model: Model,
    pub qubits: Vec<String>,
    pub settings: RbSettings,
    pub rb: RbResult,
    pub irb: RbResult,
    pub epg: Option<f64>,
    pub epg_err: Option<f64>,
    pub leakage_per_cz: Option<f64>,
    pub leakage_per_cz_err: Option<f64>,
}

/// Per-pulse depolarizing channels such that two-qubit RB decays with
/// `rb_epc` per Clifford and the CZ channel alone has error `cz_epc`.
pub fn tuned_channels(rb_epc: f64, cz_epc: f64) -> CliResult<ChannelModel> {
    let c2 = clifford_group_c2();
    let n = c2.len() as f64;
    let n_cz = c2.elements.iter().map(|e| e.cz_count()).sum::<usize>() as f64 / n;
    let n_1q = c2.elements.iter().map(|e| e.pulse_count() - e.cz_count()).sum::<usize>() as f64 / n;
    let p_cz = p_from_epc(cz_epc, 4);
    let p_rb = p_from_epc(rb_epc, 4);
    // A single-qubit depolarizing λ acting inside two qubits twirls to (1 + 4λ)/5.
    let p_1q = (p_rb / p_cz.powf(n_cz)).powf(1.0 / n_1q);
    let lambda = (5.0 * p_1q - 1.0) / 4.0;
    if !(0.0..=1.0).contains(&lambda) || !(0.0..=1.0).contains(&p_cz) {
        return Err(CliError::Input(format!(
            "no channel model gives EPC {rb_epc} with a CZ error of {cz_epc}"
        )));
    }
    Ok(ChannelModel {
        levels: 2,
        single: Some(depolarizing_kraus(lambda, 1)),
        cz: Some(depolarizing_kraus(p_cz, 2)),
    })
}

fn settings(ctx: &Context, args: &BenchArgs, two_qubit: bool) -> CliResult<RbSettings> {
    let lengths = match &args.lengths {
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| CliError::Input(format!("not a length: {v}"))))
            .collect::<CliResult<Vec<_>>>()?,
        None if two_qubit => (0..=8).map(|k| 1 << k).collect(),
        None => RbSettings::default().lengths,
    };
    if lengths.is_empty() || lengths.contains(&0) || args.randomizations == 0 {
        return Err(CliError::Input("lengths must be positive and randomizations non-zero".into()));
    }
    Ok(RbSettings {
        lengths,
        randomizations: args.randomizations,
        shots: args.shots,
        seed: ctx.global.seed,
    })
}

fn drive(ctx: &Context, name: &str) -> CliResult<(DriveModel, Rates)> {
    let q = super::qubit(ctx, Some(name))?;
    Ok((
        DriveModel::new(q.anharmonicity()?, q.dynamics_levels),
        q.noise().rates(T2Kind::Star)?,
    ))
}

fn model(ctx: &Context, args: &BenchArgs, qubits: &[String], two_qubit: bool) -> CliResult<NoiseModel> {
    let d = if two_qubit { 4 } else { 2 };
    Ok(match args.model {
        Model::Noiseless => NoiseModel::Channels(ChannelModel::ideal()),
        Model::Depolarizing => {
            let epc = args.epc.unwrap_or(if two_qubit { 1.34e-2 } else { 1e-3 });
            if !(0.0..1.0).contains(&epc) {
                return Err(CliError::Input("--epc must lie in [0, 1)".into()));
            }
            NoiseModel::Depolarizing { p: p_from_epc(epc, d) }
        }
        Model::Channels => NoiseModel::Channels(tuned_channels(args.rb_epc, args.cz_epc)?),
        Model::Dynamics => {
            let g = ctx.device.gates;
            let parts: Vec<(DriveModel, Rates)> = qubits.iter().map(|n| drive(ctx, n)).collect::<CliResult<_>>()?;
            let backend = DynamicsBackend::new(&parts, g.single_qubit_duration_ns, g.sample_period_ns)?;
            if !two_qubit {
                return Ok(NoiseModel::Dynamics(Box::new(backend)));
            }
            let coupler = super::coupler(ctx, args.pair.as_deref())?;
            let pair = ctx.device.pair(coupler)?;
            let stem = pair_stem(&coupler.qubits);
            let report: qpu_twin::dynamics::GateReport = ctx.artifact(&format!("{stem}-report.json"))?;
            let pulse: qpu_twin::dynamics::CzPulse = ctx.artifact(&format!("{stem}-pulse.json"))?;
            let rates = |kind| -> CliResult<[Rates; 2]> {
                let r = |n: &str| -> CliResult<Rates> { Ok(super::qubit(ctx, Some(n))?.noise().rates(kind)?) };
                Ok([r(&qubits[0])?, r(&qubits[1])?])
            };
            let backend = backend.with_cz(
                &pair,
                &pulse,
                report.virtual_z,
                &rates(T2Kind::Echo)?,
                &rates(T2Kind::Star)?,
                g.cz_buffer_ns,
            )?;
            NoiseModel::Dynamics(Box::new(backend))
        }
    })
}

pub fn run(ctx: &mut Context, args: &BenchArgs) -> CliResult<()> {
    let coupler = super::coupler(ctx, args.pair.as_deref())?.clone();
    match args.mode {
        Mode::Rb1 => {
            let qubits: Vec<String> = if args.simultaneous {
                coupler.qubits.to_vec()
            } else {
                vec![super::qubit(ctx, Some(args.qubit.as_deref().unwrap_or(&coupler.qubits[0])))?.name.clone()]
            };
            let set = settings(ctx, args, false)?;
            let noise = model(ctx, args, &qubits, false)?;
            let exp = if args.simultaneous {
                Experiment::Simultaneous
            } else {
                Experiment::Single { qubit: 0 }
            };
            let curves = run_rb(&noise, &exp, &set)?;
            let results: Vec<RbResult> = curves.iter().map(|c| summarize(c, 2, Some(2.0), None)).collect::<Result<_, _>>()?;
            for (q, r) in qubits.iter().zip(&results) {
                println!(
                    "{q}: p {:.6} ± {:.1e}, EPC {:.3e}, EPG {:.3e}",
                    r.fit.p,
                    r.fit.p_err,
                    r.epc,
                    r.epg.unwrap_or(f64::NAN)
                );
                write_curves(ctx, &format!("bench-rb1-{q}"), &[("RB", r)], 2)?;
            }
            ctx.out.json(
                "bench-rb1.json",
                &BenchRecord {
                    experiment: if args.simultaneous { "simultaneous" } else { "single" }.into(),
                    model: args.model,
                    qubits,
                    settings: set,
                    results,
                },
            )
        }
        Mode::Rb2 => {
            let qubits = coupler.qubits.to_vec();
            let set = settings(ctx, args, true)?;
            let noise = model(ctx, args, &qubits, true)?;
            let curve = &run_rb(&noise, &Experiment::Two { interleave: None }, &set)?[0];
            let r = summarize(curve, 4, None, None)?;
            println!("p {:.6} ± {:.1e}, EPC {:.3e} ± {:.1e}", r.fit.p, r.fit.p_err, r.epc, r.epc_err);
            write_curves(ctx, "bench-rb2", &[("RB", &r)], 4)?;
            ctx.out.json(
                "bench-rb2.json",
                &BenchRecord {
                    experiment: "two-qubit".into(),
                    model: args.model,
                    qubits,
                    settings: set,
                    results: vec![r],
                },
            )
        }
        Mode::Irb => {
            let qubits = coupler.qubits.to_vec();
            let set = settings(ctx, args, true)?;
            let noise = model(ctx, args, &qubits, true)?;
            let rb_curve = &run_rb(&noise, &Experiment::Two { interleave: None }, &set)?[0];
            let irb_curve = &run_rb(
                &noise,
                &Experiment::Two {
                    interleave: Some(CliffordElement::cz()),
                },
                &set,
            )?[0];
            let rb = summarize(rb_curve, 4, None, None)?;
            let irb = summarize(irb_curve, 4, None, Some(&rb.fit))?;
            let (leak, leak_err) = match (&rb.leakage, &irb.leakage) {
                (Some(a), Some(b)) => (Some(b.per_step - a.per_step), Some(a.per_step_err.hypot(b.per_step_err))),
                (None, Some(b)) => (Some(b.per_step), Some(b.per_step_err)),
                _ => (None, None),
            };
            println!(
                "EPC RB {:.3e}, IRB {:.3e}, EPG {:.3e} ± {:.1e}",
                rb.epc,
                irb.epc,
                irb.epg.unwrap_or(f64::NAN),
                irb.epg_err.unwrap_or(f64::NAN)
            );
            if irb.ratio_out_of_range {
                println!("warning: interleaved decay is slower than the reference");
            }
            write_curves(ctx, "bench-irb", &[("RB", &rb), ("IRB", &irb)], 4)?;
            let record = IrbRecord {
                model: args.model,
                qubits,
                settings: set,
                epg: irb.epg,
                epg_err: irb.epg_err,
                leakage_per_cz: leak,
                leakage_per_cz_err: leak_err,
                rb,
                irb,
            };
            ctx.out.json("bench-irb.json", &record)
        }
        Mode::Report => report(ctx, args, &coupler.qubits),
    }
}

fn write_curves(ctx: &mut Context, stem: &str, curves: &[(&str, &RbResult)], d: usize) -> CliResult<()> {
    let mut table = Table::new(&["sequence", "m", "mean", "std", "n", "fit"]);
    let mut series = Vec::new();
    for (label, r) in curves {
        let fit: Vec<f64> = r
            .lengths
            .iter()
            .map(|&m| r.fit.a * r.fit.p.powi(m as i32) + r.fit.b)
            .collect();
        for k in 0..r.lengths.len() {
            table.push(vec![
                text(*label),
                num(r.lengths[k] as f64),
                num(r.mean[k]),
                num(r.std[k]),
                num(r.n as f64),
                num(fit[k]),
            ]);
        }
        let x: Vec<f64> = r.lengths.iter().map(|&m| m as f64).collect();
        series.push(Series::new(format!("{label} data"), x.clone(), r.mean.clone(), Kind::Points));
        series.push(Series::new(format!("{label} fit, p = {:.5}", r.fit.p), x, fit, Kind::Line));
    }
    ctx.out.table(stem, &table, ctx.global.format)?;
    let plot = Plot {
        title: "Randomized benchmarking".into(),
        xlabel: "Clifford sequence length".into(),
        ylabel: "ground-state population".into(),
        series,
        log_x: true,
        hline: Some(1.0 / d as f64),
    };
    super::figure(ctx, &format!("{stem}.svg"), &plot, &table)
}

fn load<T: serde::de::DeserializeOwned>(ctx: &Context, name: &str) -> CliResult<Option<T>> {
    if Path::new(&ctx.global.out).join(name).exists() {
        ctx.artifact(name).map(Some)
    } else {
        Ok(None)
    }
}

fn report(ctx: &mut Context, args: &BenchArgs, pair: &[String; 2]) -> CliResult<()> {
    if !(args.single_qubit_slot_ns > 0.0) {
        return Err(CliError::Input("single-qubit slot must be positive".into()));
    }
    let mut table = Table::new(&["quantity", "qubits", "value", "error", "source"]);
    if let Some(r) = load::<BenchRecord>(ctx, "bench-rb1.json")? {
        for (q, res) in r.qubits.iter().zip(&r.results) {
            table.push(vec![text("single-qubit EPG"), text(q), opt(res.epg), opt(res.epg_err), text("bench-rb1.json")]);
        }
    }
    for q in pair {
        let spec = super::qubit(ctx, Some(q))?;
        let limit = coherence_limit(&[CoherenceSegment {
            duration_ns: args.single_qubit_slot_ns,
            t1_us: vec![spec.t1_us],
            t2_us: vec![spec.t2_star_us],
        }])?;
        table.push(vec![text("single-qubit coherence limit"), text(q), num(limit), opt(None), text("config")]);
    }
    let both = pair.join(",");
    if let Some(r) = load::<BenchRecord>(ctx, "bench-rb2.json")? {
        let res = &r.results[0];
        table.push(vec![text("two-qubit EPC"), text(&both), num(res.epc), num(res.epc_err), text("bench-rb2.json")]);
    }
    if let Some(r) = load::<IrbRecord>(ctx, "bench-irb.json")? {
        let src = "bench-irb.json";
        table.push(vec![text("two-qubit EPC (RB)"), text(&both), num(r.rb.epc), num(r.rb.epc_err), text(src)]);
        table.push(vec![text("two-qubit EPC (IRB)"), text(&both), num(r.irb.epc), num(r.irb.epc_err), text(src)]);
        table.push(vec![text("CZ EPG"), text(&both), opt(r.epg), opt(r.epg_err), text(src)]);
        table.push(vec![text("CZ leakage"), text(&both), opt(r.leakage_per_cz), opt(r.leakage_per_cz_err), text(src)]);
    }
    let stem = pair_stem(pair);
    if let Some(g) = load::<qpu_twin::dynamics::GateReport>(ctx, &format!("{stem}-report.json"))? {
        let limit = cz_coherence_limit(ctx, pair, g.total_duration_ns, ctx.device.gates.cz_buffer_ns)?;
        table.push(vec![text("CZ coherence limit"), text(&both), num(limit), opt(None), text(format!("{stem}-report.json"))]);
    }
    print!("{}", table.render());
    ctx.out.table("bench-report", &table, ctx.global.format)
}

/// Flux pulse at T2 echo, buffers on either side at T2*.
pub fn cz_coherence_limit(ctx: &Context, pair: &[String; 2], total_ns: f64, buffer_ns: f64) -> CliResult<f64> {
    let specs = [super::qubit(ctx, Some(&pair[0]))?, super::qubit(ctx, Some(&pair[1]))?];
    let t1: Vec<f64> = specs.iter().map(|s| s.t1_us).collect();
    let segments = [
        CoherenceSegment {
            duration_ns: total_ns - 2.0 * buffer_ns,
            t1_us: t1.clone(),
            t2_us: specs.iter().map(|s| s.t2_echo_us).collect(),
        },
        CoherenceSegment {
            duration_ns: 2.0 * buffer_ns,
            t1_us: t1,
            t2_us: specs.iter().map(|s| s.t2_star_us).collect(),
        },
    ];
    Ok(coherence_limit(&segments)?)
}
