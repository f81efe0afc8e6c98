use std::fmt::Write;

use super::logic::Expr;
use super::netlist::Netlist;

/// Verilog-safe identifier: primes become `p`, anything else odd becomes `_`.
pub fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| match c {
            '\'' | '′' => 'p',
            c if c.is_ascii_alphanumeric() || c == '_' => c,
            _ => '_',
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, '_');
    }
    s
}

fn reg_name(r: usize) -> String {
    format!("S{r}")
}

fn expr(n: &Netlist, e: &Expr, top: bool) -> String {
    let s = match e {
        Expr::Const(b) => return if *b { "1'b1".into() } else { "1'b0".into() },
        Expr::Input(i) => return n.inputs[*i].name.clone(),
        Expr::Reg(r) => return reg_name(*r),
        Expr::Wire(w) => return sanitize(&n.wires[*w].0),
        Expr::Not(inner) => return format!("~{}", expr(n, inner, false)),
        Expr::And(es) => es.iter().map(|x| expr(n, x, false)).collect::<Vec<_>>().join(" & "),
        Expr::Or(es) => es.iter().map(|x| expr(n, x, false)).collect::<Vec<_>>().join(" | "),
    };
    if top {
        s
    } else {
        format!("({s})")
    }
}

/// Verilog-2001 module. Byte-identical for identical netlists.
pub fn emit_verilog(n: &Netlist, name: &str) -> String {
    let mut v = String::new();
    let mut ports: Vec<String> = Vec::new();
    if !n.is_combinational() {
        ports.push("input wire clk".into());
        ports.push("input wire rst".into());
    }
    ports.extend(n.inputs.iter().map(|p| format!("input wire {}", p.name)));
    ports.extend(n.outputs.iter().map(|p| format!("output wire {}", p.name)));
    writeln!(v, "module {} (", sanitize(name)).unwrap();
    writeln!(v, "  {}", ports.join(",\n  ")).unwrap();
    writeln!(v, ");").unwrap();
    for r in 0..n.registers {
        writeln!(v, "  reg {};", reg_name(r)).unwrap();
    }
    for (w, _) in &n.wires {
        writeln!(v, "  wire {};", sanitize(w)).unwrap();
    }
    for (w, e) in &n.wires {
        writeln!(v, "  assign {} = {};", sanitize(w), expr(n, e, true)).unwrap();
    }
    for (p, e) in n.outputs.iter().zip(&n.output_logic) {
        writeln!(v, "  assign {} = {};", p.name, expr(n, e, true)).unwrap();
    }
    if !n.is_combinational() {
        writeln!(v, "  always @(posedge clk) begin").unwrap();
        writeln!(v, "    if (rst) begin").unwrap();
        for r in 0..n.registers {
            let bit = if r == n.initial { "1'b1" } else { "1'b0" };
            writeln!(v, "      {} <= {bit};", reg_name(r)).unwrap();
        }
        writeln!(v, "    end else begin").unwrap();
        for (r, e) in n.next_state.iter().enumerate() {
            writeln!(v, "      {} <= {};", reg_name(r), expr(n, e, true)).unwrap();
        }
        writeln!(v, "    end").unwrap();
        writeln!(v, "  end").unwrap();
    }
    writeln!(v, "endmodule").unwrap();
    v
}

/// Port-level dependency graph: which inputs and registers drive each output.
pub fn emit_dot(n: &Netlist) -> String {
    let mut d = String::from("digraph netlist {\n  rankdir=LR;\n");
    for p in &n.inputs {
        writeln!(d, "  {} [shape=triangle];", p.name).unwrap();
    }
    for p in &n.outputs {
        writeln!(d, "  {} [shape=invtriangle];", p.name).unwrap();
    }
    for r in 0..n.registers {
        writeln!(d, "  {} [shape=box];", reg_name(r)).unwrap();
    }
    let mut deps = |target: &str, e: &Expr| {
        let mut seen = std::collections::BTreeSet::new();
        collect(e, &mut seen);
        for s in seen {
            let src = match s {
                Leaf::Input(i) => n.inputs[i].name.clone(),
                Leaf::Reg(r) => reg_name(r),
                Leaf::Wire(w) => sanitize(&n.wires[w].0),
            };
            writeln!(d, "  {src} -> {target};").unwrap();
        }
    };
    for (w, e) in &n.wires {
        deps(&sanitize(w), e);
    }
    for (p, e) in n.outputs.iter().zip(&n.output_logic) {
        deps(&p.name, e);
    }
    for (r, e) in n.next_state.iter().enumerate() {
        deps(&reg_name(r), e);
    }
    d + "}\n"
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Leaf {
    Input(usize),
    Reg(usize),
    Wire(usize),
}

fn collect(e: &Expr, out: &mut std::collections::BTreeSet<Leaf>) {
    match e {
        Expr::Const(_) => {}
        Expr::Input(i) => {
            out.insert(Leaf::Input(*i));
        }
        Expr::Reg(r) => {
            out.insert(Leaf::Reg(*r));
        }
        Expr::Wire(w) => {
            out.insert(Leaf::Wire(*w));
        }
        Expr::Not(x) => collect(x, out),
        Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| collect(x, out)),
    }
}

pub fn emit_json(n: &Netlist) -> String {
    serde_json::to_string_pretty(n).expect("serializable")
}

pub fn parse_json(text: &str) -> Result<Netlist, serde_json::Error> {
    serde_json::from_str(text)
}
