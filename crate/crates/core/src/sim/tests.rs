use super::*;
use crate::parse::parse;
use crate::typecheck::{typecheck, Context};

const FIG6: &str = include_str!("../../../../programs/fig6.sci");
const FIG6_TRACE: &str = include_str!("../../../../programs/fig6.trace");
const FIG7: &str = include_str!("../../../../programs/fig7.wire");
const FIG8: &str = include_str!("../../../../programs/fig8.wire");

fn design(src: &str) -> Design {
    compile(&typecheck(&parse(src).unwrap(), &Context::new()).unwrap()).unwrap()
}

fn script(d: &Design, text: &str, forced: bool) -> Script {
    Script::new(resolve_rounds(&parse_trace(text), |n| d.top_port(n)).unwrap(), forced)
}

fn is_am_port(n: &str) -> bool {
    n.starts_with(['Q', 'A'])
}

#[test]
fn fig6_reproduces_the_sequential_call_trace() {
    let d = design(FIG6);
    let r = simulate(&d, &mut script(&d, FIG6_TRACE, false), 50).unwrap();
    assert_eq!(r.status, SimStatus::Completed, "{}", r.to_text());
    let expected = "Q'2 Q'0 Q0 Q2 A2 A0 A'0 A'2 Q'1 Q'0 Q0 Q1 A1 A0 A'0 A'1";
    let moves: Vec<&str> = expected.split(' ').collect();
    let am = r.restricted(is_am_port);
    assert!(is_linearization(&am, &moves), "{am:?}");
    assert_eq!(am.len(), 5);
    assert!(r.at_reset);
}

#[test]
fn fig6_netlists_agree_with_machines() {
    let d = design(FIG6);
    let a = simulate(&d, &mut script(&d, FIG6_TRACE, false), 50).unwrap();
    let n = d.to_netlists().unwrap();
    let b = simulate(&n, &mut script(&n, FIG6_TRACE, false), 50).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fig7_deadlocks_without_answering() {
    let d = parse_wiring(FIG7).unwrap();
    let r = simulate(&d, &mut script(&d, "q1\nQ0\n", true), 50).unwrap();
    assert!(matches!(r.status, SimStatus::Deadlock(_)), "{}", r.to_text());
    let am = r.restricted(is_am_port);
    let flat: Vec<&str> = am.iter().flatten().map(String::as_str).collect();
    assert!(flat.starts_with(&["Q'2", "Q'0"]), "{flat:?}");
    let q2 = flat.iter().position(|m| *m == "Q2").unwrap();
    assert!(!flat[q2..].contains(&"A0"));
}

#[test]
fn fig8_races_on_the_initial_requests() {
    let d = parse_wiring(FIG8).unwrap();
    let r = simulate(&d, &mut script(&d, "q1\n", true), 50).unwrap();
    match r.status {
        SimStatus::Race { cycle, ports } => {
            assert_eq!(cycle, 1);
            let set: BTreeSet<&str> = ports.iter().map(String::as_str).collect();
            assert_eq!(set, BTreeSet::from(["Q'1", "Q'2"]));
        }
        s => panic!("expected a race, got {s}"),
    }
}

#[test]
fn reactive_sessions_repeat_identically() {
    for src in ["fn f: com -> com -> f skip; f skip", "newvar (fn v: cell -> v := 1; if !v then skip else skip)"] {
        let d = design(src);
        let one = simulate(&d, &mut Reactive::new(1), 100).unwrap();
        let two = simulate(&d, &mut Reactive::new(2), 200).unwrap();
        assert_eq!(one.status, SimStatus::Completed, "{src}: {}", one.to_text());
        assert_eq!(two.status, SimStatus::Completed);
        assert_eq!([one.iface.clone(), one.iface.clone()].concat(), two.iface, "{src}");
        assert!(two.at_reset);
    }
}

#[test]
fn blocked_scripts_report_their_violation() {
    let d = design("skip");
    let r = simulate(&d, &mut script(&d, "a1\n", false), 10);
    assert!(matches!(r.unwrap().status, SimStatus::ProtocolViolation { .. }));
}

#[test]
fn simulation_is_deterministic() {
    let d = design(FIG6);
    let a = simulate(&d, &mut RandomEnv::new(12, 7), 40).unwrap();
    let b = simulate(&d, &mut RandomEnv::new(12, 7), 40).unwrap();
    assert_eq!(a, b);
    assert!(!matches!(a.status, SimStatus::ProtocolViolation { .. }));
}

#[test]
fn vcd_lists_every_net() {
    let d = design(FIG6);
    let r = simulate(&d, &mut script(&d, FIG6_TRACE, false), 50).unwrap();
    let mut buf = Vec::new();
    write_vcd(&d, &r, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("$var wire 1"));
    assert_eq!(text.matches("$var").count(), d.nets.len() + 1);
}

#[test]
fn chained_reads_of_one_cell_wait_a_cycle() {
    let d = design("newvar (fn v: cell -> if !v then while !v do v := 0 else while !v do skip)");
    for seed in 0..100 {
        let r = simulate(&d, &mut RandomEnv::new(12, seed), 40).unwrap();
        assert!(!matches!(r.status, SimStatus::Race { .. } | SimStatus::ProtocolViolation { .. }), "{}", r.to_text());
    }
    let r = simulate(&d, &mut Reactive::new(2), 100).unwrap();
    assert_eq!(r.status, SimStatus::Completed, "{}", r.to_text());
    assert!(r.at_reset);
}
