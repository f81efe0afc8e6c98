//! A compiler from an affine higher-order imperative language to synchronous
//! circuits, built on the game-semantic model of the language.
//!
//! The pipeline is: [`parse`] → [`typecheck`] → [`strategy::denote`]
//! (asynchronous transducers over arenas) → [`syncmin::round_abstract`] and
//! minimization → [`backend`] (netlists, Verilog, DOT, JSON). [`sim`] runs
//! synchronous machines and multi-instance designs under an always-on
//! protocol monitor.

pub mod arena;
pub mod backend;
pub mod parse;
pub mod plays;
pub mod random;
pub mod sim;
pub mod strategy;
pub mod syncmin;
pub mod syntax;
pub mod typecheck;

pub use arena::{Arena, Move, MoveId, MoveKind, Polarity};
pub use parse::{parse, parse_type, ParseError};
pub use backend::{emit_verilog, to_netlist, Netlist};
pub use plays::{check_play, check_sync_trace, enumerate_plays, protocol_automaton, ProtocolAutomaton, Rule, Violation};
pub use sim::{compile, simulate, Design, SimReport, SimStatus};
pub use strategy::{Automaton, Strategy};
pub use syncmin::{MoveSet, SyncMachine};
pub use syntax::{BinOp, Constant, Term, Type};
pub use typecheck::{typecheck, Context, TypeError, TypedTerm};
