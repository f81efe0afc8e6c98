use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{MoveSet, SyncMachine};

/// Mealy minimization by partition refinement. Undefined input sets are read
/// as silent self-loops, so they are compared like explicit transitions.
pub fn minimize(m: &SyncMachine) -> SyncMachine {
    let m = m.trim();
    let n = m.num_states();
    let alphabet: BTreeSet<&MoveSet> = m.trans.iter().flat_map(|r| r.keys()).collect();
    let mut class = vec![0usize; n];
    let mut count = 1;
    loop {
        let mut sigs: HashMap<(usize, Vec<(&MoveSet, usize)>), usize> = HashMap::new();
        let mut next = vec![0; n];
        for s in 0..n {
            let row: Vec<(&MoveSet, usize)> = alphabet
                .iter()
                .map(|i| match m.trans[s].get(*i) {
                    Some((o, t)) => (o, class[*t]),
                    None => (&EMPTY, class[s]),
                })
                .collect();
            let len = sigs.len();
            next[s] = *sigs.entry((class[s], row)).or_insert(len);
        }
        let new_count = sigs.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let mut trans: Vec<BTreeMap<MoveSet, (MoveSet, usize)>> = vec![BTreeMap::new(); count];
    for s in 0..n {
        for (i, (o, t)) in &m.trans[s] {
            let (c, d) = (class[s], class[*t]);
            if o.is_empty() && c == d {
                continue;
            }
            trans[c].insert(i.clone(), (o.clone(), d));
        }
    }
    SyncMachine { arena: m.arena.clone(), initial: class[m.initial], trans }.trim()
}

static EMPTY: MoveSet = MoveSet::new();

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::denote_constant;
    use crate::syncmin::round_abstract;
    use crate::syntax::Constant;

    #[test]
    fn skip_minimizes_to_one_state() {
        let m = round_abstract(&denote_constant(Constant::Skip).automaton).unwrap();
        assert_eq!(minimize(&m).num_states(), 1);
    }

    #[test]
    fn identical_rows_merge_and_minimal_is_stable() {
        let base = round_abstract(&denote_constant(Constant::Seq).automaton).unwrap();
        let mut m = SyncMachine::new(base.arena.clone(), 2);
        let q = base.arena.by_name("q1").unwrap();
        let a = base.arena.by_name("a1").unwrap();
        m.trans[0].insert([q].into(), ([a].into(), 1));
        m.trans[1].insert([q].into(), ([a].into(), 0));
        assert_eq!(minimize(&m).num_states(), 1);
        let once = minimize(&base);
        assert_eq!(minimize(&once), once);
    }
}
