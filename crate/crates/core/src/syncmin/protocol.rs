use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::arena::MoveId;
use crate::plays::{LimitExceeded, ProtocolAutomaton};

use super::{minimize, MoveSet, SyncError, SyncMachine};

/// Subset enumeration is exhaustive up to this many input ports.
pub const MAX_SUBSET_INPUTS: usize = 14;
pub const MAX_EQUIV_LEN: usize = 32;
const EXACT_NODES: usize = 64;
const MAX_PRODUCT_NODES: usize = 4096;
const SEARCH_BUDGET: usize = 2_000_000;

type Pi = BTreeSet<usize>;

fn subsets(inputs: &[MoveId]) -> Vec<MoveSet> {
    (0u32..1 << inputs.len())
        .map(|mask| inputs.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, m)| *m).collect())
        .collect()
}

/// Protocol states reachable after one round, memoized.
struct Rounds<'a> {
    p: &'a ProtocolAutomaton,
    memo: HashMap<(Pi, Vec<MoveId>), Pi>,
}

impl Rounds<'_> {
    fn after(&mut self, pi: &Pi, i: &MoveSet, o: &MoveSet) -> Pi {
        let round: Vec<MoveId> = i.union(o).copied().collect();
        if round.is_empty() {
            return pi.clone();
        }
        let key = (pi.clone(), round);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let r = self.p.round_successors(pi, &key.1);
        self.memo.insert(key, r.clone());
        r
    }
}

struct Product {
    /// Machine state of each node.
    state: Vec<usize>,
    /// Legal rounds: input set → (outputs, successor node).
    edges: Vec<BTreeMap<MoveSet, (MoveSet, usize)>>,
}

fn product(m: &SyncMachine, p: &ProtocolAutomaton, sets: &[MoveSet]) -> Option<Product> {
    let mut rounds = Rounds { p, memo: HashMap::new() };
    let start = (m.initial, Pi::from([ProtocolAutomaton::INITIAL]));
    let mut index: HashMap<(usize, Pi), usize> = HashMap::from([(start.clone(), 0)]);
    let mut nodes = vec![start];
    let mut edges = Vec::new();
    let mut k = 0;
    while k < nodes.len() {
        if nodes.len() > MAX_PRODUCT_NODES {
            return None;
        }
        let (s, pi) = nodes[k].clone();
        let mut row = BTreeMap::new();
        for i in sets {
            let (o, t) = match m.step(s, i) {
                Some((o, t)) => (o.clone(), t),
                None if i.is_empty() => continue,
                None => (MoveSet::new(), s),
            };
            let pi2 = rounds.after(&pi, i, &o);
            if pi2.is_empty() {
                continue;
            }
            let key = (t, pi2);
            let id = match index.get(&key) {
                Some(&id) => id,
                None => {
                    nodes.push(key.clone());
                    index.insert(key, nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            row.insert(i.clone(), (o, id));
        }
        edges.push(row);
        k += 1;
    }
    Some(Product { state: nodes.iter().map(|(s, _)| *s).collect(), edges })
}

struct Compat {
    ok: Vec<Vec<bool>>,
    /// For each pair, successor pairs that must share a class.
    implied: HashMap<(usize, usize), Vec<(usize, usize)>>,
}

fn compatibility(g: &Product) -> Compat {
    let n = g.edges.len();
    let mut ok = vec![vec![true; n]; n];
    let mut implied: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for u in 0..n {
        for v in u + 1..n {
            let mut imp = BTreeSet::new();
            for (i, (o1, x)) in &g.edges[u] {
                if let Some((o2, y)) = g.edges[v].get(i) {
                    if o1 != o2 {
                        ok[u][v] = false;
                        ok[v][u] = false;
                    }
                    if x != y {
                        imp.insert((*x.min(y), *x.max(y)));
                    }
                }
            }
            implied.insert((u, v), imp.into_iter().collect());
        }
    }
    loop {
        let mut changed = false;
        for u in 0..n {
            for v in u + 1..n {
                if ok[u][v] && implied[&(u, v)].iter().any(|&(x, y)| !ok[x][y]) {
                    ok[u][v] = false;
                    ok[v][u] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Compat { ok, implied }
}

fn closed(class: &[usize], c: &Compat) -> bool {
    c.implied.iter().all(|(&(u, v), imps)| class[u] != class[v] || imps.iter().all(|&(x, y)| class[x] == class[y]))
}

fn canonical(class: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    class
        .iter()
        .map(|c| {
            let len = map.len();
            *map.entry(*c).or_insert(len)
        })
        .collect()
}

/// Merges classes pairwise while the partition stays compatible and closed.
fn greedy(g: &Product, c: &Compat) -> Vec<usize> {
    let mut class = canonical(&g.state);
    if !closed(&class, c) || (0..class.len()).any(|u| (0..u).any(|v| class[u] == class[v] && !c.ok[u][v])) {
        class = (0..g.edges.len()).collect();
    }
    loop {
        let k = class.iter().max().map_or(0, |m| m + 1);
        let mut merged = false;
        'outer: for a in 0..k {
            for b in a + 1..k {
                let ma: Vec<usize> = (0..class.len()).filter(|&u| class[u] == a).collect();
                let mb: Vec<usize> = (0..class.len()).filter(|&u| class[u] == b).collect();
                if ma.iter().all(|&u| mb.iter().all(|&v| c.ok[u][v])) {
                    let trial: Vec<usize> = class.iter().map(|&x| if x == b { a } else { x }).collect();
                    if closed(&trial, c) {
                        class = canonical(&trial);
                        merged = true;
                        break 'outer;
                    }
                }
            }
        }
        if !merged {
            return class;
        }
    }
}

struct Search<'a> {
    c: &'a Compat,
    n: usize,
    k: usize,
    class: Vec<Option<usize>>,
    /// `rev[x]` lists `(u, v, y)` such that the pair (u, v) implies (x, y).
    rev: Vec<Vec<(usize, usize, usize)>>,
    steps: usize,
}

impl Search<'_> {
    fn consistent(&self, w: usize) -> bool {
        let cw = self.class[w];
        for u in 0..self.n {
            if u == w || self.class[u] != cw {
                continue;
            }
            if !self.c.ok[u][w] {
                return false;
            }
            let key = (u.min(w), u.max(w));
            for &(x, y) in &self.c.implied[&key] {
                if let (Some(a), Some(b)) = (self.class[x], self.class[y]) {
                    if a != b {
                        return false;
                    }
                }
            }
        }
        for &(u, v, y) in &self.rev[w] {
            if self.class[u].is_some() && self.class[u] == self.class[v] {
                if let Some(b) = self.class[y] {
                    if Some(b) != cw {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn go(&mut self, w: usize, used: usize) -> Option<bool> {
        self.steps += 1;
        if self.steps > SEARCH_BUDGET {
            return None;
        }
        if w == self.n {
            return Some(true);
        }
        for c in 0..(used + 1).min(self.k) {
            self.class[w] = Some(c);
            if self.consistent(w) {
                match self.go(w + 1, used.max(c + 1)) {
                    Some(true) => return Some(true),
                    None => return None,
                    Some(false) => {}
                }
            }
        }
        self.class[w] = None;
        Some(false)
    }
}

/// Smallest closed partition into compatible classes, if found within budget.
fn exact(c: &Compat, n: usize, below: usize) -> Option<Vec<usize>> {
    let mut rev = vec![Vec::new(); n];
    for (&(u, v), imps) in &c.implied {
        for &(x, y) in imps {
            rev[x].push((u, v, y));
            rev[y].push((u, v, x));
        }
    }
    let mut steps = 0;
    for k in 1..below {
        let mut s = Search { c, n, k, class: vec![None; n], rev: rev.clone(), steps };
        match s.go(0, 0) {
            Some(true) => return Some(s.class.into_iter().map(Option::unwrap).collect()),
            Some(false) => steps = s.steps,
            None => return None,
        }
    }
    None
}

fn quotient(m: &SyncMachine, g: &Product, class: &[usize]) -> SyncMachine {
    let k = class.iter().max().map_or(1, |x| x + 1);
    let mut out = SyncMachine::new(m.arena.clone(), k);
    out.initial = class[0];
    for (u, row) in g.edges.iter().enumerate() {
        for (i, (o, x)) in row {
            let (c, d) = (class[u], class[*x]);
            if o.is_empty() && c == d {
                continue;
            }
            out.trans[c].insert(i.clone(), (o.clone(), d));
        }
    }
    out.trim()
}

/// Minimization that treats protocol-illegal input rounds as don't-cares.
/// The result agrees with `m` on every legal sequence of input rounds and is
/// never larger than [`minimize`].
pub fn minimize_under_protocol(m: &SyncMachine, p: &ProtocolAutomaton) -> SyncMachine {
    let plain = minimize(m);
    let inputs = m.inputs();
    if inputs.len() > MAX_SUBSET_INPUTS {
        return plain;
    }
    let Some(g) = product(&plain, p, &subsets(&inputs)) else { return plain };
    let c = compatibility(&g);
    let mut class = greedy(&g, &c);
    let k = class.iter().max().map_or(1, |x| x + 1);
    if g.edges.len() <= EXACT_NODES {
        if let Some(better) = exact(&c, g.edges.len(), k) {
            class = better;
        }
    }
    let reduced = minimize(&quotient(&plain, &g, &class));
    if reduced.num_states() <= plain.num_states() {
        reduced
    } else {
        plain
    }
}

/// First legal input round on which two machines disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Difference {
    pub prefix: Vec<MoveSet>,
    pub inputs: MoveSet,
    pub left: MoveSet,
    pub right: MoveSet,
}

impl Difference {
    pub fn round(&self) -> usize {
        self.prefix.len()
    }
}

/// Drives both machines with every protocol-legal sequence of input rounds
/// up to `max_len` (legality judged with `m1`'s outputs). `None` means
/// equivalent.
pub fn equivalent_under_protocol(
    m1: &SyncMachine,
    m2: &SyncMachine,
    p: &ProtocolAutomaton,
    max_len: usize,
) -> Result<Option<Difference>, SyncError> {
    if m1.arena != m2.arena {
        return Err(SyncError::ArenaMismatch);
    }
    if max_len > MAX_EQUIV_LEN {
        return Err(LimitExceeded { what: "max_len", requested: max_len, max: MAX_EQUIV_LEN }.into());
    }
    let inputs = m1.inputs();
    if inputs.len() > MAX_SUBSET_INPUTS {
        return Err(LimitExceeded { what: "input ports", requested: inputs.len(), max: MAX_SUBSET_INPUTS }.into());
    }
    let sets = subsets(&inputs);
    let mut rounds = Rounds { p, memo: HashMap::new() };
    let start = (m1.initial, m2.initial, Pi::from([ProtocolAutomaton::INITIAL]));
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, Vec::new())]);
    while let Some(((s1, s2, pi), path)) = queue.pop_front() {
        if path.len() >= max_len {
            continue;
        }
        for i in &sets {
            let (o1, t1) = m1.step_or_stay(s1, i);
            let pi2 = rounds.after(&pi, i, &o1);
            if pi2.is_empty() {
                continue;
            }
            let (o2, t2) = m2.step_or_stay(s2, i);
            if o1 != o2 {
                return Ok(Some(Difference { prefix: path, inputs: i.clone(), left: o1, right: o2 }));
            }
            let key = (t1, t2, pi2);
            if seen.insert(key.clone()) {
                let mut p2 = path.clone();
                p2.push(i.clone());
                queue.push_back((key, p2));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plays::protocol_automaton;
    use crate::strategy::{denote_constant, diagonal};
    use crate::syncmin::round_abstract;
    use crate::syntax::{Constant, Type};

    fn pipeline(a: &crate::strategy::Automaton) -> (SyncMachine, SyncMachine) {
        let m = round_abstract(a).unwrap();
        let p = protocol_automaton(&m.arena);
        let r = minimize_under_protocol(&m, &p);
        (m, r)
    }

    #[test]
    fn seq_collapses_to_wires() {
        let (m, r) = pipeline(&denote_constant(Constant::Seq).automaton);
        assert_eq!(r.num_states(), 1);
        let p = protocol_automaton(&m.arena);
        assert_eq!(equivalent_under_protocol(&m, &r, &p, 12).unwrap(), None);
    }

    #[test]
    fn every_constant_is_preserved() {
        for c in Constant::ALL {
            let (m, r) = pipeline(&denote_constant(c).automaton);
            let p = protocol_automaton(&m.arena);
            assert!(r.num_states() <= minimize(&m).num_states());
            assert_eq!(equivalent_under_protocol(&m, &r, &p, 12).unwrap(), None, "{}", c.name());
        }
    }

    #[test]
    fn differing_machines_are_reported() {
        let (t, _) = pipeline(&denote_constant(Constant::True).automaton);
        let (f, _) = pipeline(&denote_constant(Constant::False).automaton);
        let p = protocol_automaton(&t.arena);
        let d = equivalent_under_protocol(&t, &f, &p, 4).unwrap().unwrap();
        assert_eq!(d.round(), 0);
        assert_eq!(equivalent_under_protocol(&t, &t, &p, 4).unwrap(), None);
    }

    #[test]
    fn diagonal_sync_is_smaller() {
        let a = diagonal(&Type::Com, "x").automaton;
        let (_, r) = pipeline(&a);
        assert!(r.num_states() < a.num_states());
    }
}
