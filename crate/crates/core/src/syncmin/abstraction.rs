use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::strategy::Automaton;

use super::{MoveSet, SyncError, SyncMachine};

type Rounds = BTreeMap<MoveSet, (MoveSet, usize)>;

/// All rounds starting at boundary state `b`. Outputs fire as soon as they
/// are enabled; an input may follow outputs of the same round. A round
/// ends when the machine waits for input. No port pulses twice in a round.
fn rounds_from(a: &Automaton, b: usize, strict: bool) -> Result<Rounds, SyncError> {
    let mut rounds: Rounds = BTreeMap::new();
    let mut conflicts: BTreeSet<MoveSet> = BTreeSet::new();
    let mut record = |i: &MoveSet, o: &MoveSet, s: usize| -> Result<(), SyncError> {
        match rounds.get(i) {
            Some((o2, s2)) if (o2, *s2) != (o, s) => {
                if strict {
                    return Err(SyncError::NonConfluent {
                        state: b,
                        inputs: i.iter().map(|m| a.arena.name(*m)).collect::<Vec<_>>().join(","),
                    });
                }
                conflicts.insert(i.clone());
                Ok(())
            }
            _ => {
                rounds.insert(i.clone(), (o.clone(), s));
                Ok(())
            }
        }
    };
    let mut seen = HashSet::new();
    let mut stack = vec![(b, MoveSet::new(), MoveSet::new())];
    while let Some((cur, i, o)) = stack.pop() {
        if !seen.insert((cur, i.clone(), o.clone())) {
            continue;
        }
        let outs: Vec<_> = a.delta[cur].iter().filter(|(m, _)| a.is_output(**m)).collect();
        if !outs.is_empty() {
            // An output already pulsed this round cannot fire again; inputs
            // that lead here belong to a later round.
            let fresh: Vec<_> = outs.iter().filter(|(m, _)| !o.contains(m)).collect();
            for (&m, &t) in fresh {
                let mut o2 = o.clone();
                o2.insert(m);
                stack.push((t, i.clone(), o2));
            }
            continue;
        }
        if !(i.is_empty() && o.is_empty()) {
            record(&i, &o, cur)?;
        }
        for (&m, &t) in &a.delta[cur] {
            if !i.contains(&m) {
                let mut i2 = i.clone();
                i2.insert(m);
                stack.push((t, i2, o.clone()));
            }
        }
    }
    for i in &conflicts {
        rounds.remove(i);
    }
    Ok(rounds)
}

/// Synchronous machine whose states are the round-boundary states of `a`.
/// Input sets whose outcome depends on the order of arrival are left
/// undefined; no well-typed environment presents them together.
pub fn round_abstract(a: &Automaton) -> Result<SyncMachine, SyncError> {
    abstract_rounds(a, false)
}

/// As [`round_abstract`], but order-dependent input sets are an error.
pub fn round_abstract_strict(a: &Automaton) -> Result<SyncMachine, SyncError> {
    abstract_rounds(a, true)
}

fn abstract_rounds(a: &Automaton, strict: bool) -> Result<SyncMachine, SyncError> {
    let mut index: HashMap<usize, usize> = HashMap::from([(a.initial, 0)]);
    let mut order = vec![a.initial];
    let mut trans = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let rounds = rounds_from(a, order[k], strict)?;
        let mut row = BTreeMap::new();
        for (i, (o, s)) in rounds {
            let id = *index.entry(s).or_insert_with(|| {
                order.push(s);
                order.len() - 1
            });
            row.insert(i, (o, id));
        }
        trans.push(row);
        k += 1;
    }
    Ok(SyncMachine { arena: a.arena.clone(), initial: 0, trans })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{copycat, denote_constant, diagonal};
    use crate::syntax::{Constant, Type};

    fn set(m: &SyncMachine, names: &str) -> MoveSet {
        names.split_whitespace().map(|n| m.arena.by_name(n).unwrap()).collect::<MoveSet>()
    }

    #[test]
    fn constant_true_is_one_round() {
        let m = round_abstract(&denote_constant(Constant::True).automaton).unwrap();
        assert_eq!(m.num_states(), 1);
        assert_eq!(m.step(0, &set(&m, "q1")).unwrap().0, &set(&m, "t1"));
    }

    #[test]
    fn par_merges_interleavings() {
        let m = round_abstract(&denote_constant(Constant::Par).automaton).unwrap();
        let (o, s) = m.step(0, &set(&m, "q1")).unwrap();
        assert_eq!(o, &set(&m, "q2 q3"));
        let (o, t) = m.step(s, &set(&m, "a2 a3")).unwrap();
        assert_eq!(o, &set(&m, "a1"));
        assert_eq!(t, 0);
    }

    #[test]
    fn sync_states_never_exceed_async() {
        for a in [
            copycat(&Type::arrow(Type::Com, Type::Com), "x").automaton,
            diagonal(&Type::Com, "x").automaton,
            denote_constant(Constant::Newvar).automaton,
        ] {
            let m = round_abstract(&a).unwrap();
            assert!(m.num_states() <= a.num_states());
        }
        let d = round_abstract(&diagonal(&Type::Com, "x").automaton).unwrap();
        assert_eq!(d.num_states(), 3);
    }

    #[test]
    fn concurrent_read_and_write_is_order_dependent() {
        let a = denote_constant(Constant::Newvar).automaton;
        assert!(matches!(round_abstract_strict(&a), Err(SyncError::NonConfluent { .. })));
        let m = round_abstract(&a).unwrap();
        assert!(m.step(0, &set(&m, "q1 q3 wt3")).is_none());
        assert!(m.step(0, &set(&m, "q1 q3")).is_some());
    }
}
