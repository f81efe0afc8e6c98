use std::collections::{BTreeSet, VecDeque};

use gosyn_core::random::random_term;
use gosyn_core::sim::{Kind, RandomEnv};
use gosyn_core::strategy::{denote, StrategyError};
use gosyn_core::syncmin::{minimize, minimize_under_protocol, round_abstract};
use gosyn_core::{
    check_play, check_sync_trace, compile, parse_type, protocol_automaton, simulate, Arena, Context, Design, MoveId,
    SimStatus, Strategy, Type, TypedTerm,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn term(seed: u64) -> TypedTerm {
    let mut rng = StdRng::seed_from_u64(seed);
    let ctx = match seed % 3 {
        0 => Context::new(),
        1 => Context::new().with("x", Type::Com).with("c", Type::Cell),
        _ => Context::new().with("f", Type::arrow(Type::Com, Type::Com)).with("e", Type::Exp),
    };
    let ty = if seed % 4 == 3 { Type::Exp } else { Type::Com };
    random_term(&mut rng, &ty, &ctx, 3)
}

fn strategy(seed: u64) -> Option<Strategy> {
    match denote(&term(seed)) {
        Ok(s) => Some(s),
        Err(StrategyError::DivergenceDetected) => None,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legal_plays_are_prefix_closed(word in prop::collection::vec(0usize..4, 0..9)) {
        let a = Arena::of_type(&parse_type("com -> com").unwrap());
        let w: Vec<MoveId> = word.into_iter().map(MoveId).collect();
        if check_play(&a, &w).is_ok() {
            for n in 0..w.len() {
                prop_assert!(check_play(&a, &w[..n]).is_ok());
            }
        }
    }

    #[test]
    fn denotations_stay_legal_and_reset(seed in any::<u64>()) {
        let Some(s) = strategy(seed) else { return Ok(()) };
        let a = &s.automaton;
        let p = protocol_automaton(s.arena());
        let start = (a.initial, 0usize);
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some((q, r)) = queue.pop_front() {
            for (&m, &q2) in &a.delta[q] {
                let r2 = p.step(r, m);
                prop_assert!(r2.is_some(), "illegal move {}", s.arena().name(m));
                let r2 = r2.unwrap();
                if p.is_complete(r2) {
                    prop_assert_eq!(q2, a.initial, "a complete play leaves residual state");
                }
                if seen.insert((q2, r2)) {
                    queue.push_back((q2, r2));
                }
            }
        }
    }

    #[test]
    fn abstraction_and_minimization_shrink(seed in any::<u64>()) {
        let Some(s) = strategy(seed) else { return Ok(()) };
        let m = round_abstract(&s.automaton).unwrap();
        prop_assert!(m.num_states() <= s.automaton.num_states());
        let plain = minimize(&m);
        prop_assert!(plain.num_states() <= m.num_states());
        let proto = minimize_under_protocol(&m, &protocol_automaton(&m.arena));
        prop_assert!(proto.num_states() <= plain.num_states());
    }

    #[test]
    fn compiled_traces_pass_the_monitor(seed in any::<u64>(), stim in any::<u64>()) {
        let d = compile(&term(seed)).unwrap();
        let r = simulate(&d, &mut RandomEnv::new(12, stim), 40).unwrap();
        prop_assert!(
            !matches!(r.status, SimStatus::ProtocolViolation { .. } | SimStatus::Race { .. }),
            "{}", r.to_text()
        );
        prop_assert!(check_sync_trace(&d.iface, &r.iface).is_ok());
    }

    #[test]
    fn netlists_agree_with_machines(seed in any::<u64>(), stim in any::<u64>()) {
        let t = term(seed);
        let Some(s) = strategy(seed) else { return Ok(()) };
        let m = round_abstract(&s.automaton).unwrap();
        let m = minimize_under_protocol(&m, &protocol_automaton(&m.arena));
        let ty = gosyn_core::sim::interface_type(&t);
        let d = Design::single("dut", Kind::Flat, ty, m);
        let n = d.to_netlists().unwrap();
        let a = simulate(&d, &mut RandomEnv::new(12, stim), 40).unwrap();
        let b = simulate(&n, &mut RandomEnv::new(12, stim), 40).unwrap();
        prop_assert_eq!(a, b);
    }
}
