//! Acceptance gate: one line per criterion, each checked at its stated
//! tolerance and time bound. Run with `cargo test --test acceptance`.

use std::collections::{BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gosyn_core::backend::{emit_verilog, to_netlist};
use gosyn_core::plays::{enumerate_plays, protocol_automaton};
use gosyn_core::random::random_term;
use gosyn_core::sim::{
    compile, is_linearization, parse_trace, parse_wiring, resolve_rounds, simulate, Design, RandomEnv, Reactive,
    Script, SimStatus,
};
use gosyn_core::strategy::{compose, compose_oracle, denote, denote_constant, diagonal, pair, plug, StrategyError};
use gosyn_core::syncmin::{equivalent_under_protocol, minimize_under_protocol, round_abstract};
use gosyn_core::{check_play, parse, parse_type, typecheck, Arena, Automaton, Constant, Context, MoveId, Rule, Type, TypedTerm};
use rand::rngs::StdRng;
use rand::SeedableRng;

const FIG6: &str = include_str!("../../../programs/fig6.sci");
const FIG6_TRACE: &str = include_str!("../../../programs/fig6.trace");
const FIG7: &str = include_str!("../../../programs/fig7.wire");
const FIG7_TRACE: &str = include_str!("../../../programs/fig7.trace");
const FIG8: &str = include_str!("../../../programs/fig8.wire");
const FIG8_TRACE: &str = include_str!("../../../programs/fig8.trace");

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn typed(src: &str, ctx: &Context) -> Result<TypedTerm, String> {
    let t = parse(src).map_err(|e| e.to_string())?;
    typecheck(&t, ctx).map_err(|e| e.to_string())
}

fn moves(a: &Arena, s: &str) -> Vec<MoveId> {
    s.split_whitespace().map(|n| a.by_name(n).unwrap()).collect()
}

/// Exact equality of two prefix-closed languages up to `len`, by walking
/// the product of the automata breadth-first.
fn same_language(a: &Automaton, b: &Automaton, len: usize) -> bool {
    let mut seen = BTreeSet::from([(a.initial, b.initial)]);
    let mut queue = VecDeque::from([(a.initial, b.initial, 0)]);
    while let Some((s, t, d)) = queue.pop_front() {
        if d == len {
            continue;
        }
        let ms: BTreeSet<MoveId> = a.delta[s].keys().copied().collect();
        let mt: BTreeSet<MoveId> = b.delta[t].keys().copied().collect();
        if ms != mt {
            return false;
        }
        for m in ms {
            let next = (a.delta[s][&m], b.delta[t][&m]);
            if seen.insert(next) {
                queue.push_back((next.0, next.1, d + 1));
            }
        }
    }
    true
}

fn script(d: &Design, text: &str, forced: bool) -> Script {
    Script::new(resolve_rounds(&parse_trace(text), |n| d.top_port(n)).unwrap(), forced)
}

fn is_am_port(n: &str) -> bool {
    n.starts_with(['Q', 'A'])
}

fn com_to_com() -> Type {
    Type::arrow(Type::Com, Type::Com)
}

fn c1_typing() -> Outcome {
    let ctx = Context::new();
    typed("λx:com. x; x", &ctx)?;
    for bad in ["λx:com. x || x", "λf:com -> com. λx:com. f (f x)"] {
        match typed(bad, &ctx) {
            Ok(_) => return Err(format!("`{bad}` accepted")),
            Err(e) => ensure(e.contains("affin"), format!("`{bad}`: {e}"))?,
        }
    }
    Ok("x;x accepted, x||x and f(f x) rejected (affinity)".into())
}

fn c2_protocol_language() -> Outcome {
    let a = Arena::of_type(&parse_type("com -> com").unwrap());
    let mut oracle: BTreeSet<Vec<MoveId>> = BTreeSet::new();
    for k in 0..=4 {
        let w = moves(&a, &format!("q1 {} a1", "q2 a2 ".repeat(k)));
        for n in 0..=w.len().min(9) {
            oracle.insert(w[..n].to_vec());
        }
    }
    let via_automaton = protocol_automaton(&a).language(9);
    let via_enumeration = enumerate_plays(&a, 9).map_err(|e| e.to_string())?;
    ensure(via_automaton == oracle, "automaton language differs from q1(q2 a2)*a1")?;
    ensure(via_enumeration == oracle, "enumerated plays differ from q1(q2 a2)*a1")?;
    Ok(format!("{} plays up to length 9", oracle.len()))
}

fn c3_violation_triad() -> Outcome {
    let a = Arena::of_type(&parse_type("com -> com").unwrap());
    for (w, rule) in [("q1 a1 q2", Rule::Fork), ("q1 q2 a1", Rule::Wait), ("q1 q2 q2", Rule::Serial)] {
        let v = check_play(&a, &moves(&a, w)).err().ok_or(format!("`{w}` accepted"))?;
        ensure(v.rule == rule && v.index == 2, format!("`{w}`: {v}"))?;
    }
    Ok("Fork, Wait, Serial at index 2".into())
}

fn c4_wire_collapse() -> Outcome {
    let mut out = Vec::new();
    for src in ["true", "seq"] {
        let s = denote(&typed(src, &Context::new())?).map_err(|e| e.to_string())?;
        let m = round_abstract(&s.automaton).map_err(|e| e.to_string())?;
        let m = minimize_under_protocol(&m, &protocol_automaton(&m.arena));
        ensure(m.num_states() == 1 && m.is_combinational(), format!("{src}: {} states", m.num_states()))?;
        let n = to_netlist(&m).map_err(|e| e.to_string())?;
        let v = emit_verilog(&n, src);
        ensure(n.registers == 0 && !v.contains("reg ") && !v.contains("always"), format!("{src}: registers emitted"))?;
        out.push(format!("{src}: {} assigns", v.matches("assign").count()));
    }
    Ok(out.join(", "))
}

fn c5_round_abstraction() -> Outcome {
    let mut worst = String::new();
    for c in Constant::ALL {
        let a = denote_constant(c).automaton;
        let m = round_abstract(&a).map_err(|e| format!("{c}: {e}"))?;
        ensure(m.num_states() <= a.num_states(), format!("{c}: {} > {}", m.num_states(), a.num_states()))?;
        worst = format!("{c} {}→{}", a.num_states(), m.num_states());
    }
    let d = diagonal(&Type::Com, "x").automaton;
    let m = round_abstract(&d).map_err(|e| e.to_string())?;
    ensure(m.num_states() < d.num_states(), format!("diagonal: {} !< {}", m.num_states(), d.num_states()))?;
    Ok(format!("all constants ≤ (last {worst}); diagonal {}→{}", d.num_states(), m.num_states()))
}

fn c6_fig6() -> Outcome {
    let d = compile(&typed(FIG6, &Context::new())?).map_err(|e| e.to_string())?;
    let r = simulate(&d, &mut script(&d, FIG6_TRACE, false), 100).map_err(|e| e.to_string())?;
    ensure(r.status == SimStatus::Completed, format!("status {}", r.status))?;
    let expected: Vec<&str> = "Q'2 Q'0 Q0 Q2 A2 A0 A'0 A'2 Q'1 Q'0 Q0 Q1 A1 A0 A'0 A'1".split(' ').collect();
    let rounds = r.restricted(is_am_port);
    ensure(is_linearization(&rounds, &expected), format!("observed {rounds:?}"))?;
    Ok(format!("16 moves in {} rounds, Completed", rounds.len()))
}

fn c7_fig7() -> Outcome {
    let d = parse_wiring(FIG7).map_err(|e| e.to_string())?;
    let r = simulate(&d, &mut script(&d, FIG7_TRACE, true), 100).map_err(|e| e.to_string())?;
    ensure(matches!(r.status, SimStatus::Deadlock(_)), format!("status {}", r.status))?;
    let flat: Vec<String> = r.restricted(is_am_port).concat();
    ensure(flat.starts_with(&["Q'2".into(), "Q'0".into()]), format!("prefix {flat:?}"))?;
    let q2 = flat.iter().position(|m| m == "Q2").ok_or("Q2 never requested")?;
    ensure(!flat[q2..].iter().any(|m| m == "A0"), "A0 emitted")?;
    Ok(format!("{} after {}, A0 never emitted", r.status, flat.join(" ")))
}

fn c8_fig8() -> Outcome {
    let d = parse_wiring(FIG8).map_err(|e| e.to_string())?;
    let r = simulate(&d, &mut script(&d, FIG8_TRACE, true), 100).map_err(|e| e.to_string())?;
    match &r.status {
        SimStatus::Race { ports, .. } => {
            let set: BTreeSet<&str> = ports.iter().map(String::as_str).collect();
            ensure(set == BTreeSet::from(["Q'1", "Q'2"]), format!("race on {ports:?}"))?;
            Ok(r.status.to_string())
        }
        s => Err(format!("status {s}")),
    }
}

fn open_ctx() -> Context {
    Context::new().with("x", Type::Com).with("c", Type::Cell).with("f", com_to_com())
}

fn c9_compositionality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut statuses = [0usize; 2];
    for k in 0..200u64 {
        let ctx = if k % 2 == 0 { Context::new() } else { open_ctx() };
        let t = random_term(&mut rng, &Type::Com, &ctx, 3);
        let d = compile(&t).map_err(|e| e.to_string())?;
        let r = simulate(&d, &mut RandomEnv::new(12, k), 40).map_err(|e| format!("{}: {e}", t.erase().to_source()))?;
        let slot = match r.status {
            SimStatus::Completed => 0,
            SimStatus::Deadlock(_) => 1,
            SimStatus::Race { .. } => {
                2
            }
            SimStatus::ProtocolViolation { .. } => {
                return Err(format!("{} on `{}`", r.status, t.erase().to_source()));
            }
        };
        statuses[slot] += 1;
    }
    Ok(format!(
        "200 designs, no violation or race ({} completed, {} still running when stimulus ended)",
        statuses[0], statuses[1]
    ))
}

fn c10_diagonal_law() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xd1a6);
    let ctx = Context::new().with("z", Type::Com);
    let mut checked = 0;
    for ty in [Type::Com, Type::Exp, com_to_com()] {
        let mut done = 0;
        while done < 20 {
            let p = random_term(&mut rng, &ty, &ctx, 2);
            let p = match denote(&p) {
                Ok(s) => s,
                Err(StrategyError::DivergenceDetected) => continue,
                Err(e) => return Err(e.to_string()),
            };
            let shared = plug(&diagonal(&ty, "x"), &p, &[("x", 0)]).map_err(|e| e.to_string())?;
            let replicated = pair(&p, &p).map_err(|e| e.to_string())?;
            ensure(shared.arena() == replicated.arena(), "interfaces differ")?;
            ensure(same_language(&shared.automaton, &replicated.automaton, 16), format!("law fails at {ty}"))?;
            done += 1;
            checked += 1;
        }
    }
    Ok(format!("{checked} random P over com, exp, com -> com agree to length 16"))
}

fn c11_oracles() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x0c1e);
    let mut checked = 0;
    let types = [Type::Com, Type::Exp, com_to_com()];
    while checked < 100 {
        let ty = types[checked % 3].clone();
        let consumer = random_term(&mut rng, &Type::Com, &Context::new().with("y", ty.clone()), 3);
        let producer = random_term(&mut rng, &ty, &Context::new().with("z", Type::Com), 3);
        let (t, s) = match (denote(&consumer), denote(&producer)) {
            (Ok(t), Ok(s)) if t.ctx.len() == 1 => (t, s),
            (Err(e), _) | (_, Err(e)) if e != StrategyError::DivergenceDetected => return Err(e.to_string()),
            _ => continue,
        };
        let composed = match compose(&s, &t) {
            Ok(c) => c,
            Err(StrategyError::DivergenceDetected) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let oracle = compose_oracle(&s, &t, 10).map_err(|e| e.to_string())?;
        ensure(composed.automaton.language(10) == oracle, format!("compose differs on `{}`", consumer.erase().to_source()))?;
        checked += 1;
    }
    for c in Constant::ALL {
        let m = round_abstract(&denote_constant(c).automaton).map_err(|e| e.to_string())?;
        let p = protocol_automaton(&m.arena);
        let min = minimize_under_protocol(&m, &p);
        let diff = equivalent_under_protocol(&m, &min, &p, 12).map_err(|e| e.to_string())?;
        ensure(diff.is_none(), format!("{c}: minimized machine differs: {diff:?}"))?;
    }
    Ok("100 compositions match the oracle; all 15 constants equivalent after minimization".into())
}

fn c12_reset() -> Outcome {
    let mut designs: Vec<(String, Design)> = vec![("fig6".into(), compile(&typed(FIG6, &Context::new())?).unwrap())];
    let mut rng = StdRng::seed_from_u64(0x4e5e7);
    for k in 0..60 {
        let ctx = if k % 2 == 0 { Context::new() } else { open_ctx() };
        let t = random_term(&mut rng, &Type::Com, &ctx, 3);
        designs.push((t.erase().to_source(), compile(&t).map_err(|e| e.to_string())?));
    }
    let mut compared = 0;
    let mut diverging = 0;
    for (name, d) in &designs {
        // A context whose answers make the design terminate, if one of a
        // few deterministic ones does.
        let mut ran = None;
        for seed in 0..8 {
            let one = simulate(d, &mut Reactive::seeded(1, seed), 200).map_err(|e| e.to_string())?;
            if one.status == SimStatus::Completed {
                ran = Some((seed, one));
                break;
            }
        }
        let Some((seed, one)) = ran else {
            diverging += 1;
            continue;
        };
        let two = simulate(d, &mut Reactive::seeded(2, seed), 400).map_err(|e| e.to_string())?;
        ensure(two.status == SimStatus::Completed, format!("`{name}`: second session {}", two.status))?;
        ensure(two.iface == [one.iface.clone(), one.iface.clone()].concat(), format!("`{name}`: sessions differ"))?;
        ensure(one.at_reset && two.at_reset, format!("`{name}`: state not reset"))?;
        compared += 1;
    }
    ensure(compared * 2 > designs.len(), format!("only {compared} designs completed a session"))?;
    Ok(format!(
        "{compared}/{} designs: identical sessions, back at reset; {diverging} diverge under every tried context",
        designs.len()
    ))
}

fn main() {
    let criteria: Vec<(&str, u64, fn() -> Outcome)> = vec![
        ("typing gate", 1, c1_typing),
        ("protocol language", 1, c2_protocol_language),
        ("violation triad", 1, c3_violation_triad),
        ("wire collapse", 1, c4_wire_collapse),
        ("round abstraction inequality", 5, c5_round_abstraction),
        ("shared sequential calls", 1, c6_fig6),
        ("nested call deadlock", 1, c7_fig7),
        ("concurrent call race", 1, c8_fig8),
        ("compositionality", 30, c9_compositionality),
        ("diagonal law", 60, c10_diagonal_law),
        ("oracle equivalences", 60, c11_oracles),
        ("reset property", 10, c12_reset),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, bound, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(bound) => Err(format!("{msg}; took longer than {bound}s")),
            o => o,
        };
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} {:>2} {name} ({:.2}s): {msg}", k + 1, took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
