use std::collections::{BTreeMap, HashMap};

use crate::arena::{Arena, MoveId, Polarity};
use crate::plays::{protocol_automaton, ProtocolAutomaton};
use crate::syntax::Type;

use super::{type_len, Automaton, Strategy};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Side {
    Shared,
    Proj(usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Fwd {
    /// Projection currently owning the shared face, if any.
    owner: Option<usize>,
    proto: usize,
    /// A move received but not yet copied to the other side.
    pending: Option<(Side, usize)>,
}

/// Copies moves between `copies` projections of `t` and one shared copy,
/// serving one projection at a time.
fn forwarder(t: &Type, x: &str, copies: usize) -> Strategy {
    let base = Arena::of_type(t);
    let proto: ProtocolAutomaton = protocol_automaton(&base);
    let n = type_len(t);
    let result = (1..copies).fold(t.clone(), |acc, _| Type::product(acc, t.clone()));
    let ctx = vec![(x.to_string(), t.clone())];
    let arena = Strategy::interface_arena(&ctx, &result);
    let global = |side: Side, l: usize| MoveId(match side {
        Side::Proj(k) => k * n + l,
        Side::Shared => copies * n + l,
    });

    let start = Fwd { owner: None, proto: ProtocolAutomaton::INITIAL, pending: None };
    let mut index: HashMap<Fwd, usize> = HashMap::from([(start, 0)]);
    let mut states = vec![start];
    let mut delta: Vec<BTreeMap<MoveId, usize>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let st = states[i];
        let mut succ: Vec<(MoveId, Fwd)> = Vec::new();
        match st.pending {
            Some((side, l)) => {
                let owner = if proto.is_complete(st.proto) { None } else { st.owner };
                succ.push((global(side, l), Fwd { owner, pending: None, ..st }));
            }
            None => {
                for m in base.ids() {
                    let Some(p2) = proto.step(st.proto, m) else { continue };
                    if base.get(m).polarity == Polarity::O {
                        for k in 0..copies {
                            if st.owner.is_none() || st.owner == Some(k) {
                                let next = Fwd { owner: Some(k), proto: p2, pending: Some((Side::Shared, m.0)) };
                                succ.push((global(Side::Proj(k), m.0), next));
                            }
                        }
                    } else if let Some(k) = st.owner {
                        let next = Fwd { owner: Some(k), proto: p2, pending: Some((Side::Proj(k), m.0)) };
                        succ.push((global(Side::Shared, m.0), next));
                    }
                }
            }
        }
        let mut row = BTreeMap::new();
        for (m, next) in succ {
            let id = *index.entry(next).or_insert_with(|| {
                states.push(next);
                states.len() - 1
            });
            row.insert(m, id);
        }
        delta.push(row);
        i += 1;
    }
    Strategy { ctx, result, automaton: Automaton { arena, initial: 0, delta }.minimize() }
}

/// Identity `x : t ⊢ x : t`.
pub fn copycat(t: &Type, x: &str) -> Strategy {
    forwarder(t, x, 1)
}

/// Activation manager `x : t ⊢ ⟨x, x⟩ : t × t`.
pub fn diagonal(t: &Type, x: &str) -> Strategy {
    forwarder(t, x, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(s: &Strategy, w: &[MoveId]) -> String {
        w.iter().map(|m| s.arena().name(*m)).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn copycat_on_com() {
        let c = copycat(&Type::Com, "x");
        assert_eq!(c.automaton.num_states(), 4);
        let longest = c.automaton.language(4).into_iter().max_by_key(|w| w.len()).unwrap();
        assert_eq!(names(&c, &longest), "q1 q2 a2 a1");
        assert!(c.automaton.check_protocol().is_ok());
        assert!(c.automaton.check_reset());
    }

    #[test]
    fn diagonal_on_com_has_seven_states() {
        let d = diagonal(&Type::Com, "x");
        assert_eq!(d.automaton.num_states(), 7);
        assert!(d.automaton.check_protocol().is_ok());
        assert!(d.automaton.check_reset());
        let a = d.arena();
        // Busy with the first projection: the second is ignored.
        let w: Vec<MoveId> = ["q1", "q2"].iter().map(|n| a.by_name(n).unwrap()).collect();
        assert!(d.automaton.run(&w).is_none());
    }
}
