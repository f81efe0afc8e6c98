use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::arena::MoveId;
use crate::plays::LimitExceeded;
use crate::syntax::Type;

use super::{diagonal, type_len, Automaton, Comp, Strategy, StrategyError};

/// Role of a component move in a two-automaton product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Port {
    /// Visible, as this move of the result arena.
    Ext(MoveId),
    /// Synchronized with this move of the other automaton and hidden.
    Hidden(MoveId),
    /// Never fires.
    Blocked,
}

type Pair = (usize, usize);

struct Product<'a> {
    s: &'a Automaton,
    ps: &'a [Port],
    t: &'a Automaton,
    pt: &'a [Port],
}

impl Product<'_> {
    fn hidden(&self, (i, j): Pair) -> impl Iterator<Item = Pair> + '_ {
        self.s.delta[i].iter().filter_map(move |(&m, &i2)| match self.ps[m.0] {
            Port::Hidden(n) => self.t.step(j, n).map(|j2| (i2, j2)),
            _ => None,
        })
    }

    fn external(&self, (i, j): Pair) -> Vec<(MoveId, Pair)> {
        let mut out = Vec::new();
        for (&m, &i2) in &self.s.delta[i] {
            if let Port::Ext(e) = self.ps[m.0] {
                out.push((e, (i2, j)));
            }
        }
        for (&m, &j2) in &self.t.delta[j] {
            if let Port::Ext(e) = self.pt[m.0] {
                out.push((e, (i, j2)));
            }
        }
        out
    }

    fn closure(&self, seed: impl IntoIterator<Item = Pair>) -> BTreeSet<Pair> {
        let mut set: BTreeSet<Pair> = BTreeSet::new();
        let mut stack: Vec<Pair> = seed.into_iter().collect();
        while let Some(p) = stack.pop() {
            if set.insert(p) {
                stack.extend(self.hidden(p));
            }
        }
        set
    }

    /// A closure with no visible move and an internal cycle never answers.
    fn diverges(&self, set: &BTreeSet<Pair>) -> bool {
        if set.iter().any(|&p| !self.external(p).is_empty()) {
            return false;
        }
        // Kahn's algorithm on the hidden graph restricted to the closure.
        let mut indeg: HashMap<Pair, usize> = set.iter().map(|&p| (p, 0)).collect();
        for &p in set {
            for q in self.hidden(p) {
                *indeg.get_mut(&q).unwrap() += 1;
            }
        }
        let mut ready: Vec<Pair> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&p, _)| p).collect();
        let mut removed = 0;
        while let Some(p) = ready.pop() {
            removed += 1;
            for q in self.hidden(p) {
                let d = indeg.get_mut(&q).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(q);
                }
            }
        }
        removed < set.len()
    }
}

/// Synchronized product with hiding, determinized over the visible moves and
/// minimized.
pub(crate) fn link(
    s: &Automaton,
    ps: &[Port],
    t: &Automaton,
    pt: &[Port],
    arena: crate::arena::Arena,
) -> Result<Automaton, StrategyError> {
    let prod = Product { s, ps, t, pt };
    let start = prod.closure([(s.initial, t.initial)]);
    let mut index: HashMap<BTreeSet<Pair>, usize> = HashMap::new();
    let mut sets = vec![start.clone()];
    index.insert(start, 0);
    let mut delta: Vec<BTreeMap<MoveId, usize>> = Vec::new();
    let mut k = 0;
    while k < sets.len() {
        if prod.diverges(&sets[k]) {
            return Err(StrategyError::DivergenceDetected);
        }
        let mut by_move: BTreeMap<MoveId, Vec<Pair>> = BTreeMap::new();
        for &p in &sets[k] {
            for (e, q) in prod.external(p) {
                by_move.entry(e).or_default().push(q);
            }
        }
        let mut row = BTreeMap::new();
        for (e, seeds) in by_move {
            let next = prod.closure(seeds);
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    sets.push(next.clone());
                    index.insert(next, sets.len() - 1);
                    sets.len() - 1
                }
            };
            row.insert(e, id);
        }
        delta.push(row);
        k += 1;
    }
    Ok(Automaton { arena, initial: 0, delta }.minimize())
}

fn merged_ctx(a: &[(String, Type)], b: &[(String, Type)]) -> Result<Vec<(String, Type)>, StrategyError> {
    let mut all: BTreeMap<String, Type> = a.iter().cloned().collect();
    for (x, t) in b {
        if all.insert(x.clone(), t.clone()).is_some() {
            return Err(StrategyError::Interface(format!("`{x}` occurs on both sides")));
        }
    }
    Ok(all.into_iter().collect())
}

struct Plugged {
    ctx: Vec<(String, Type)>,
    pc: Vec<Port>,
    pp: Vec<Port>,
}

/// Port assignment for plugging the result of `producer` into context slots
/// of `consumer`. Each slot names a consumer context entry and the offset of
/// the matching component within the producer's result.
fn plug_ports(consumer: &Strategy, producer: &Strategy, slots: &[(&str, usize)]) -> Result<Plugged, StrategyError> {
    let mut slot_idx = Vec::new();
    for &(x, off) in slots {
        let i = consumer
            .ctx_index(x)
            .ok_or_else(|| StrategyError::Interface(format!("no context entry `{x}`")))?;
        slot_idx.push((i, off, type_len(&consumer.ctx[i].1)));
    }
    let rest: Vec<(String, Type)> = consumer
        .ctx
        .iter()
        .enumerate()
        .filter(|(i, _)| !slot_idx.iter().any(|(j, _, _)| j == i))
        .map(|(_, e)| e.clone())
        .collect();
    let ctx = merged_ctx(&rest, &producer.ctx)?;
    let offs = Strategy::offsets(&ctx, &consumer.result);
    let new_pos = |x: &str| ctx.iter().position(|(y, _)| y == x).unwrap() + 1;
    let pc = consumer
        .arena()
        .ids()
        .map(|m| match consumer.address(m) {
            (Comp::Result, l) => Port::Ext(MoveId(l)),
            (Comp::Ctx(i), l) => match slot_idx.iter().find(|(j, _, _)| *j == i) {
                Some(&(_, off, _)) => Port::Hidden(producer.global(Comp::Result, off + l)),
                None => Port::Ext(MoveId(offs[new_pos(&consumer.ctx[i].0)] + l)),
            },
        })
        .collect();
    let pp = producer
        .arena()
        .ids()
        .map(|m| match producer.address(m) {
            (Comp::Result, l) => match slot_idx.iter().find(|(_, off, len)| *off <= l && l < off + len) {
                Some(&(i, off, _)) => Port::Hidden(consumer.global(Comp::Ctx(i), l - off)),
                None => Port::Blocked,
            },
            (Comp::Ctx(i), l) => Port::Ext(MoveId(offs[new_pos(&producer.ctx[i].0)] + l)),
        })
        .collect();
    Ok(Plugged { ctx, pc, pp })
}

/// Connects the producer's result to the given context slots of the
/// consumer and hides the connection.
pub fn plug(consumer: &Strategy, producer: &Strategy, slots: &[(&str, usize)]) -> Result<Strategy, StrategyError> {
    let Plugged { ctx, pc, pp } = plug_ports(consumer, producer, slots)?;
    let arena = Strategy::interface_arena(&ctx, &consumer.result);
    let automaton = link(&consumer.automaton, &pc, &producer.automaton, &pp, arena)?;
    Ok(Strategy { ctx, result: consumer.result.clone(), automaton })
}

fn single_slot(t: &Strategy) -> Result<String, StrategyError> {
    match t.ctx.as_slice() {
        [(y, _)] => Ok(y.clone()),
        _ => Err(StrategyError::Interface("second strategy must have exactly one context entry".into())),
    }
}

/// `s : Γ → B` followed by `t : B → C`.
pub fn compose(s: &Strategy, t: &Strategy) -> Result<Strategy, StrategyError> {
    let y = single_slot(t)?;
    if t.ctx[0].1 != s.result {
        return Err(StrategyError::Interface(format!("{} does not match {}", s.result, t.ctx[0].1)));
    }
    plug(t, s, &[(&y, 0)])
}

/// Application: the function's argument face is connected to the argument's result.
pub fn apply(f: &Strategy, a: &Strategy) -> Result<Strategy, StrategyError> {
    let u = f.uncurry("$arg")?;
    plug(&u, a, &[("$arg", 0)])
}

/// Disjoint union of two strategies with disjoint contexts, glued at the
/// initial state: at most one component is active at a time.
pub fn glue(a: &Strategy, b: &Strategy) -> Result<Strategy, StrategyError> {
    let ctx = merged_ctx(&a.ctx, &b.ctx)?;
    let result = Type::product(a.result.clone(), b.result.clone());
    let offs = Strategy::offsets(&ctx, &result);
    let alen = type_len(&a.result);
    let place = |s: &Strategy, shift: usize, m: MoveId| match s.address(m) {
        (Comp::Result, l) => MoveId(shift + l),
        (Comp::Ctx(i), l) => MoveId(offs[ctx.iter().position(|(y, _)| *y == s.ctx[i].0).unwrap() + 1] + l),
    };
    let arena = Strategy::interface_arena(&ctx, &result);
    let na = a.automaton.num_states();
    let nb = b.automaton.num_states();
    let mut automaton = Automaton::new(arena, 1 + (na - 1) + (nb - 1));
    let ida = |s: usize| if s == a.automaton.initial { 0 } else { 1 + s - usize::from(s > a.automaton.initial) };
    let idb = |s: usize| if s == b.automaton.initial { 0 } else { na + s - usize::from(s > b.automaton.initial) };
    for (from, m, to) in a.automaton.edges() {
        automaton.delta[ida(from)].insert(place(a, 0, m), ida(to));
    }
    for (from, m, to) in b.automaton.edges() {
        automaton.delta[idb(from)].insert(place(b, alen, m), idb(to));
    }
    Ok(Strategy { ctx, result, automaton: automaton.minimize() })
}

/// Pairing. Identifiers used by both components are shared through one
/// activation manager each.
pub fn pair(a: &Strategy, b: &Strategy) -> Result<Strategy, StrategyError> {
    let shared: Vec<(String, Type)> = a.ctx.iter().filter(|(x, _)| b.ctx_index(x).is_some()).cloned().collect();
    let is_shared = |x: &str| shared.iter().any(|(y, _)| y == x);
    let a2 = a.rename_ctx(|x| if is_shared(x) { format!("{x}$1") } else { x.to_string() });
    let b2 = b.rename_ctx(|x| if is_shared(x) { format!("{x}$2") } else { x.to_string() });
    let mut out = glue(&a2, &b2)?;
    for (x, t) in &shared {
        let am = diagonal(t, x);
        let (l, r) = (format!("{x}$1"), format!("{x}$2"));
        out = plug(&out, &am, &[(&l, 0), (&r, type_len(t))])?;
    }
    Ok(out)
}

/// Projection out of a product result.
pub fn project(p: &Strategy, first: bool) -> Result<Strategy, StrategyError> {
    let Type::Product(l, r) = &p.result else {
        return Err(StrategyError::Interface(format!("{} is not a product", p.result)));
    };
    let result = if first { (**l).clone() } else { (**r).clone() };
    let llen = type_len(l);
    let offs = Strategy::offsets(&p.ctx, &result);
    let arena = Strategy::interface_arena(&p.ctx, &result);
    let mut automaton = Automaton::new(arena, p.automaton.num_states());
    automaton.initial = p.automaton.initial;
    for (from, m, to) in p.automaton.edges() {
        let target = match p.address(m) {
            (Comp::Result, k) if first && k < llen => Some(k),
            (Comp::Result, k) if !first && k >= llen => Some(k - llen),
            (Comp::Result, _) => None,
            (Comp::Ctx(i), k) => Some(offs[i + 1] + k),
        };
        if let Some(t) = target {
            automaton.delta[from].insert(MoveId(t), to);
        }
    }
    Ok(Strategy { ctx: p.ctx.clone(), result, automaton: automaton.minimize() })
}

pub const MAX_ORACLE_LEN: usize = 16;

/// Independent reference for [`compose`]: enumerates interaction sequences
/// of the undeterminized product directly and keeps their visible parts.
pub fn compose_oracle(s: &Strategy, t: &Strategy, max_len: usize) -> Result<BTreeSet<Vec<MoveId>>, StrategyError> {
    if max_len > MAX_ORACLE_LEN {
        return Err(LimitExceeded { what: "max_len", requested: max_len, max: MAX_ORACLE_LEN }.into());
    }
    let y = single_slot(t)?;
    let Plugged { pc, pp, .. } = plug_ports(t, s, &[(&y, 0)])?;
    let (ta, sa) = (&t.automaton, &s.automaton);
    let mut seen: HashSet<(usize, usize, Vec<MoveId>)> = HashSet::new();
    let mut out = BTreeSet::new();
    let mut stack = vec![(ta.initial, sa.initial, Vec::new())];
    while let Some((i, j, w)) = stack.pop() {
        if !seen.insert((i, j, w.clone())) {
            continue;
        }
        out.insert(w.clone());
        for (&m, &i2) in &ta.delta[i] {
            match pc[m.0] {
                Port::Ext(e) if w.len() < max_len => {
                    let mut w2 = w.clone();
                    w2.push(e);
                    stack.push((i2, j, w2));
                }
                Port::Hidden(n) => {
                    if let Some(j2) = sa.step(j, n) {
                        stack.push((i2, j2, w.clone()));
                    }
                }
                _ => {}
            }
        }
        for (&m, &j2) in &sa.delta[j] {
            if let Port::Ext(e) = pp[m.0] {
                if w.len() < max_len {
                    let mut w2 = w.clone();
                    w2.push(e);
                    stack.push((i, j2, w2));
                }
            }
        }
    }
    Ok(out)
}
