pub mod bench;
pub mod flux;
pub mod fit;
pub mod gate;
pub mod readout;

use qpu_twin::device::{CouplerSpec, QubitSpec};

use crate::svg::{self, Plot};
use crate::table::Table;
use crate::{CliError, CliResult, Context};

/// Named qubit, or the first one in the description.
pub fn qubit<'a>(ctx: &'a Context, name: Option<&str>) -> CliResult<&'a QubitSpec> {
    match name {
        Some(n) => ctx
            .device
            .qubit(n)
            .ok_or_else(|| CliError::Input(format!("device {} has no qubit {n}", ctx.device.id))),
        None => Ok(&ctx.device.qubits[0]),
    }
}

/// Coupler for a pair written "q1,q2", or the first coupler.
pub fn coupler<'a>(ctx: &'a Context, pair: Option<&str>) -> CliResult<&'a CouplerSpec> {
    match pair {
        Some(p) => {
            let names: Vec<&str> = p.split(',').map(str::trim).collect();
            if names.len() != 2 {
                return Err(CliError::Input(format!("pair must be written a,b: {p}")));
            }
            ctx.device
                .coupler(names[0], names[1])
                .ok_or_else(|| CliError::Input(format!("device {} has no coupler {p}", ctx.device.id)))
        }
        None => ctx
            .device
            .couplers
            .first()
            .ok_or_else(|| CliError::Input(format!("device {} has no couplers", ctx.device.id))),
    }
}

/// Line/point figure whose embedded data is the given table.
pub fn figure(ctx: &mut Context, name: &str, plot: &Plot, data: &Table) -> CliResult<()> {
    let stamp = ctx.out.stamp();
    let s = svg::plot(plot, &data.to_csv()?, stamp.as_deref());
    ctx.out.text(name, s);
    Ok(())
}

pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Input(format!("not a number: {v}"))))
        .collect()
}
