//! Netlists from synchronous machines, and their Verilog, DOT and JSON forms.

mod emit;
mod logic;
mod netlist;

pub use emit::{emit_dot, emit_json, emit_verilog, parse_json, sanitize};
pub use logic::{minimize_sop, sop_expr, Cube, Expr};
pub use netlist::{to_netlist, BackendError, Direction, Netlist, NetlistSim, Port, MAX_QM_VARS};
