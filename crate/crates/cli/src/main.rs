use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gosyn_core::backend::{emit_dot, emit_json};
use gosyn_core::sim::{
    interface_type, parse_trace, parse_wiring, resolve_rounds, write_vcd, Environment, Kind, Reactive, Script,
};
use gosyn_core::strategy::denote;
use gosyn_core::syncmin::{minimize, minimize_under_protocol, round_abstract};
use gosyn_core::{
    check_sync_trace, compile, emit_verilog, parse, parse_type, protocol_automaton, simulate, to_netlist, typecheck,
    Arena, Context, Design, SyncMachine, TypedTerm,
};

/// Compile affine imperative programs to synchronous circuits.
#[derive(Parser)]
#[command(name = "gosyn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck a program.
    Check {
        file: PathBuf,
        #[command(flatten)]
        ctx: CtxArgs,
        /// Print the typed syntax tree.
        #[arg(long)]
        dump_ast: bool,
    },
    /// Print an arena or a program's intermediate automaton.
    Ir(IrArgs),
    /// Compile a program to a flat Verilog module.
    Compile {
        file: PathBuf,
        #[command(flatten)]
        ctx: CtxArgs,
        /// Verilog output path (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Module name.
        #[arg(long, default_value = "top")]
        top: String,
        /// Also write the netlist as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also write the netlist dependency graph as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Simulate a program or a wiring file cycle by cycle.
    Sim(SimArgs),
    /// Check a trace against the protocol of a type's arena.
    Monitor {
        /// Type whose arena the trace is over.
        #[arg(long = "type")]
        ty: String,
        trace: PathBuf,
    },
}

#[derive(Args)]
struct CtxArgs {
    /// Free identifier of a program, as `name:type`. Repeatable.
    #[arg(long = "var", value_name = "NAME:TYPE")]
    vars: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MinMode {
    None,
    Plain,
    Protocol,
}

#[derive(Args)]
struct IrArgs {
    /// Program to translate.
    #[arg(required_unless_present = "arena", conflicts_with = "arena")]
    file: Option<PathBuf>,
    /// Print the arena of a type instead.
    #[arg(long, value_name = "TYPE")]
    arena: Option<String>,
    #[command(flatten)]
    ctx: CtxArgs,
    /// Round-abstract to a synchronous machine.
    #[arg(long)]
    sync: bool,
    /// Minimization of the synchronous machine.
    #[arg(long, value_enum, default_value = "protocol", requires = "sync")]
    min: MinMode,
    /// Print DOT instead of the summary.
    #[arg(long, conflicts_with = "json")]
    dot: bool,
    /// Print JSON instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimArgs {
    /// A program (.sci) or, with --unsafe-wire, a wiring file (.wire). The
    /// extension may be left out.
    design: PathBuf,
    #[command(flatten)]
    ctx: CtxArgs,
    /// Rounds to present, one per line. Without it the environment opens
    /// `--sessions` sessions and answers every question.
    #[arg(long)]
    stimulus: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    sessions: usize,
    #[arg(long, default_value_t = 1000)]
    max_cycles: usize,
    /// Write port waveforms.
    #[arg(long)]
    vcd: Option<PathBuf>,
    /// Accept a hand-written wiring that the typechecker cannot vouch for;
    /// stimulus rounds are forced rather than monitor-guarded.
    #[arg(long)]
    unsafe_wire: bool,
    /// Simulate the whole program as one machine instead of its structure.
    #[arg(long)]
    flat: bool,
    /// Simulate the gate-level netlists instead of the machines.
    #[arg(long)]
    netlist: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn context(args: &CtxArgs) -> Result<Context> {
    let mut ctx = Context::new();
    for v in &args.vars {
        let Some((name, ty)) = v.split_once(':') else { bail!("--var expects NAME:TYPE, got `{v}`") };
        ctx = ctx.with(name.trim(), parse_type(ty).map_err(|e| anyhow::anyhow!("type of {name}: {e}"))?);
    }
    Ok(ctx)
}

fn load(file: &Path, ctx: &CtxArgs) -> Result<TypedTerm> {
    let src = read(file)?;
    let term = parse(&src).map_err(|e| anyhow::anyhow!("{}: {e}", file.display()))?;
    typecheck(&term, &context(ctx)?).map_err(|e| anyhow::anyhow!("{}: {e}", file.display()))
}

fn machine(t: &TypedTerm, min: MinMode) -> Result<SyncMachine> {
    let s = denote(t)?;
    let m = round_abstract(&s.automaton)?;
    Ok(match min {
        MinMode::None => m,
        MinMode::Plain => minimize(&m),
        MinMode::Protocol => minimize_under_protocol(&m, &protocol_automaton(&m.arena)),
    })
}

fn check(file: &Path, ctx: &CtxArgs, dump_ast: bool) -> Result<()> {
    let t = load(file, ctx)?;
    if dump_ast {
        println!("{t:#?}");
    }
    println!("ok: {}", t.ty);
    Ok(())
}

fn ir(args: &IrArgs) -> Result<()> {
    if let Some(ty) = &args.arena {
        let a = Arena::of_type(&parse_type(ty).map_err(|e| anyhow::anyhow!("{e}"))?);
        if args.dot {
            print!("{}", a.to_dot());
        } else if args.json {
            let moves: Vec<_> = a
                .ids()
                .map(|m| {
                    serde_json::json!({
                        "move": a.get(m),
                        "enablers": a.enablers(m).iter().map(|e| a.name(*e)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&moves)?);
        } else {
            print!("{}", a.table());
        }
        return Ok(());
    }
    let t = load(args.file.as_deref().expect("clap requires a file"), &args.ctx)?;
    if args.sync {
        let m = machine(&t, args.min)?;
        if args.dot {
            print!("{}", m.to_dot());
        } else if args.json {
            println!("{}", m.to_json());
        } else {
            println!(
                "sync machine: {} states, {} transitions{}",
                m.num_states(),
                m.num_transitions(),
                if m.is_combinational() { ", combinational" } else { "" }
            );
        }
        return Ok(());
    }
    let s = denote(&t)?;
    if args.dot {
        print!("{}", s.automaton.to_dot());
    } else if args.json {
        println!("{}", serde_json::to_string_pretty(&s.automaton.to_json())?);
    } else {
        println!("type: {}", t.ty);
        println!("async automaton: {} states, {} transitions", s.automaton.num_states(), s.automaton.num_transitions());
    }
    Ok(())
}

fn compile_flat(
    file: &Path,
    ctx: &CtxArgs,
    output: Option<&Path>,
    top: &str,
    json: Option<&Path>,
    dot: Option<&Path>,
) -> Result<()> {
    let t = load(file, ctx)?;
    let n = to_netlist(&machine(&t, MinMode::Protocol)?)?;
    write_or_print(output, &emit_verilog(&n, top))?;
    if let Some(p) = json {
        write_or_print(Some(p), &emit_json(&n))?;
    }
    if let Some(p) = dot {
        write_or_print(Some(p), &emit_dot(&n))?;
    }
    if output.is_some() {
        eprintln!("{}: {} registers, {} gates", top, n.registers, n.gate_count());
    }
    Ok(())
}

/// `path`, or `path` with the extension the mode expects.
fn resolve(path: &Path, ext: &str) -> PathBuf {
    if path.exists() || path.extension().is_some() {
        path.to_path_buf()
    } else {
        path.with_extension(ext)
    }
}

fn sim(args: &SimArgs) -> Result<bool> {
    let design: Design = if args.unsafe_wire {
        parse_wiring(&read(&resolve(&args.design, "wire"))?)?
    } else {
        let file = resolve(&args.design, "sci");
        if file.extension().is_some_and(|e| e == "wire") {
            bail!("wiring files bypass the typechecker; pass --unsafe-wire to simulate one");
        }
        let t = load(&file, &args.ctx)?;
        if args.flat {
            Design::single("dut", Kind::Flat, interface_type(&t), machine(&t, MinMode::Protocol)?)
        } else {
            compile(&t)?
        }
    };
    let design = if args.netlist { design.to_netlists()? } else { design };
    let mut env: Box<dyn Environment> = match &args.stimulus {
        Some(p) => {
            let p = if p.exists() { p.clone() } else { args.design.with_file_name(p) };
            let rounds = resolve_rounds(&parse_trace(&read(&p)?), |n| design.top_port(n))?;
            Box::new(Script::new(rounds, args.unsafe_wire))
        }
        None => Box::new(Reactive::new(args.sessions)),
    };
    let report = simulate(&design, env.as_mut(), args.max_cycles)?;
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if let Some(p) = &args.vcd {
        let mut f = fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
        write_vcd(&design, &report, &mut f)?;
    }
    Ok(report.status == gosyn_core::SimStatus::Completed)
}

fn monitor(ty: &str, trace: &Path) -> Result<bool> {
    let a = Arena::of_type(&parse_type(ty).map_err(|e| anyhow::anyhow!("{e}"))?);
    let rounds = resolve_rounds(&parse_trace(&read(trace)?), |n| a.by_name(n))?;
    let rounds: Vec<Vec<_>> = rounds.into_iter().map(|r| r.into_iter().collect()).collect();
    match check_sync_trace(&a, &rounds) {
        Ok(()) => {
            println!("Legal");
            Ok(true)
        }
        Err(v) => {
            println!("{v}");
            Ok(false)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Check { file, ctx, dump_ast } => check(&file, &ctx, dump_ast).map(|_| true),
        Command::Ir(args) => ir(&args).map(|_| true),
        Command::Compile { file, ctx, output, top, json, dot } => {
            compile_flat(&file, &ctx, output.as_deref(), &top, json.as_deref(), dot.as_deref()).map(|_| true)
        }
        Command::Sim(args) => sim(&args),
        Command::Monitor { ty, trace } => monitor(&ty, &trace),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
