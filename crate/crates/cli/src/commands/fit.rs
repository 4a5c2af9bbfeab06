use clap::Args;
use qpu_twin::fit::{fit_chain, FitOptions, FitReport};
use serde::Serialize;

use crate::table::{num, opt, text, Table};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Fit only this qubit.
    #[arg(long)]
    pub qubit: Option<String>,
}

#[derive(Serialize)]
struct QubitFit<'a> {
    qubit: &'a str,
    report: &'a FitReport,
}

pub fn run(ctx: &mut Context, args: &FitArgs) -> CliResult<()> {
    if let Some(q) = &args.qubit {
        super::qubit(ctx, Some(q))?;
    }
    let targets: Vec<_> = ctx
        .device
        .qubits
        .iter()
        .filter(|q| args.qubit.as_ref().is_none_or(|n| &q.name == n))
        .cloned()
        .collect();
    let mut table = Table::new(&["qubit", "parameter", "fitted", "reference", "relative_difference", "constrained"]);
    let mut failed = Vec::new();
    for q in &targets {
        let Some(obs) = q.observations() else {
            println!("{}: no measured spectrum, skipped", q.name);
            continue;
        };
        let opts = FitOptions {
            seed: ctx.global.seed,
            ..FitOptions::default()
        };
        let report = fit_chain(&obs, &opts)?;
        if !report.converged {
            failed.push(q.name.clone());
        }
        let p = report.params;
        let reference = q.reference;
        let rows = [
            ("ej_max_ghz", "ej_max", p.ej_max, reference.map(|r| r.ej_max_ghz)),
            ("ec_ghz", "ec", p.ec, reference.map(|r| r.ec_ghz)),
            ("asym", "asym", p.asym, None),
            ("g_qr_ghz", "g_qr", p.g_qr, reference.map(|r| r.g_qr_ghz)),
        ];
        for (label, key, value, r) in rows {
            let constrained = !report.unconstrained.iter().any(|u| u == key);
            table.push(vec![
                text(&q.name),
                text(label),
                num(value),
                opt(r),
                opt(r.map(|r| (value - r) / r)),
                serde_json::Value::Bool(constrained),
            ]);
        }
        if !report.unconstrained.is_empty() {
            println!("{}: unconstrained, held at seed values: {}", q.name, report.unconstrained.join(", "));
        }
        ctx.out.json(
            &format!("fit-{}.json", q.name),
            &QubitFit {
                qubit: &q.name,
                report: &report,
            },
        )?;
    }
    print!("{}", table.render());
    ctx.out.table("fit-table", &table, ctx.global.format)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("fit did not converge for {}", failed.join(", "))))
    }
}
