use std::io;

use vcd::{IdCode, SimulationCommand, TimescaleUnit, Value, Writer};

use super::{Design, SimReport};

/// Port waveforms of a simulation: one wire per net plus `clk`. Each cycle
/// spans two time units; a pulsed net is high for the first of them.
pub fn write_vcd(design: &Design, report: &SimReport, out: impl io::Write) -> io::Result<()> {
    let mut w = Writer::new(out);
    w.timescale(1, TimescaleUnit::NS)?;
    w.add_module("top")?;
    let clk = w.add_wire(1, "clk")?;
    let ids: Vec<IdCode> = design
        .nets
        .iter()
        .map(|n| w.add_wire(1, &n.name.replace(char::is_whitespace, "_")))
        .collect::<io::Result<_>>()?;
    w.upscope()?;
    w.enddefinitions()?;
    w.begin(SimulationCommand::Dumpvars)?;
    w.change_scalar(clk, Value::V0)?;
    for id in &ids {
        w.change_scalar(*id, Value::V0)?;
    }
    w.end()?;
    for (k, round) in report.nets.iter().enumerate() {
        w.timestamp(2 * k as u64)?;
        w.change_scalar(clk, Value::V1)?;
        for n in round {
            w.change_scalar(ids[*n], Value::V1)?;
        }
        w.timestamp(2 * k as u64 + 1)?;
        w.change_scalar(clk, Value::V0)?;
        for n in round {
            w.change_scalar(ids[*n], Value::V0)?;
        }
    }
    w.timestamp(2 * report.nets.len() as u64)?;
    Ok(())
}
