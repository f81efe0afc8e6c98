//! Boolean expressions and two-level minimization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Combinational expression over input ports, state registers and named wires.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expr {
    Const(bool),
    Input(usize),
    Reg(usize),
    Wire(usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    pub fn not(e: Expr) -> Expr {
        match e {
            Expr::Const(b) => Expr::Const(!b),
            Expr::Not(inner) => *inner,
            e => Expr::Not(Box::new(e)),
        }
    }

    pub fn and(items: Vec<Expr>) -> Expr {
        let mut out = Vec::new();
        for e in items {
            match e {
                Expr::Const(true) => {}
                Expr::Const(false) => return Expr::Const(false),
                Expr::And(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => Expr::Const(true),
            1 => out.pop().unwrap(),
            _ => Expr::And(out),
        }
    }

    pub fn or(items: Vec<Expr>) -> Expr {
        let mut out = Vec::new();
        for e in items {
            match e {
                Expr::Const(false) => {}
                Expr::Const(true) => return Expr::Const(true),
                Expr::Or(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => Expr::Const(false),
            1 => out.pop().unwrap(),
            _ => Expr::Or(out),
        }
    }

    pub fn eval(&self, inputs: &[bool], regs: &[bool], wires: &[bool]) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Input(i) => inputs[*i],
            Expr::Reg(r) => regs[*r],
            Expr::Wire(w) => wires[*w],
            Expr::Not(e) => !e.eval(inputs, regs, wires),
            Expr::And(es) => es.iter().all(|e| e.eval(inputs, regs, wires)),
            Expr::Or(es) => es.iter().any(|e| e.eval(inputs, regs, wires)),
        }
    }

    pub fn wires(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Wire(w) => {
                out.insert(*w);
            }
            Expr::Not(e) => e.wires(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.wires(out)),
            _ => {}
        }
    }

    /// Number of two-input gates needed, counting inverters.
    pub fn gate_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Input(_) | Expr::Reg(_) | Expr::Wire(_) => 0,
            Expr::Not(e) => 1 + e.gate_count(),
            Expr::And(es) | Expr::Or(es) => es.len() - 1 + es.iter().map(Expr::gate_count).sum::<usize>(),
        }
    }
}

/// A product term: variables in `care` must equal the matching bit of `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub care: u32,
    pub value: u32,
}

impl Cube {
    pub fn covers(&self, minterm: u32) -> bool {
        minterm & self.care == self.value
    }
}

/// Quine–McCluskey: prime implicants of `on ∪ dc`, then a cover of `on`
/// by essential primes followed by greedy choice.
pub fn minimize_sop(vars: usize, on: &[u32], dc: &[u32]) -> Vec<Cube> {
    if on.is_empty() {
        return Vec::new();
    }
    let full = if vars == 32 { u32::MAX } else { (1u32 << vars) - 1 };
    let mut current: BTreeSet<Cube> = on.iter().chain(dc).map(|&m| Cube { care: full, value: m }).collect();
    let mut primes: BTreeSet<Cube> = BTreeSet::new();
    while !current.is_empty() {
        let mut next = BTreeSet::new();
        let mut used = BTreeSet::new();
        let items: Vec<Cube> = current.iter().copied().collect();
        for (k, a) in items.iter().enumerate() {
            for b in &items[k + 1..] {
                if a.care != b.care {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    next.insert(Cube { care: a.care & !diff, value: a.value & !diff });
                    used.insert(*a);
                    used.insert(*b);
                }
            }
        }
        primes.extend(items.into_iter().filter(|c| !used.contains(c)));
        current = next;
    }
    let mut uncovered: BTreeSet<u32> = on.iter().copied().collect();
    let mut chosen = Vec::new();
    for &m in on {
        let covering: Vec<&Cube> = primes.iter().filter(|p| p.covers(m)).collect();
        if covering.len() == 1 && !chosen.contains(covering[0]) {
            chosen.push(*covering[0]);
        }
    }
    uncovered.retain(|m| !chosen.iter().any(|c| c.covers(*m)));
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .max_by_key(|p| (uncovered.iter().filter(|m| p.covers(**m)).count(), std::cmp::Reverse(p.care.count_ones())))
            .copied()
            .unwrap();
        uncovered.retain(|m| !best.covers(*m));
        chosen.push(best);
    }
    chosen.sort();
    chosen
}

/// Sum of products over `vars`, where bit `k` of a cube is variable `vars[k]`.
pub fn sop_expr(cubes: &[Cube], vars: &[Expr]) -> Expr {
    Expr::or(
        cubes
            .iter()
            .map(|c| {
                Expr::and(
                    (0..vars.len())
                        .filter(|k| c.care & (1 << k) != 0)
                        .map(|k| if c.value & (1 << k) != 0 { vars[k].clone() } else { Expr::not(vars[k].clone()) })
                        .collect(),
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(cubes: &[Cube], vars: usize) -> Vec<bool> {
        (0..1u32 << vars).map(|m| cubes.iter().any(|c| c.covers(m))).collect()
    }

    #[test]
    fn dont_cares_collapse_to_a_wire() {
        // f(q1, a2, a3): on when q1 set, off on {a2}, {a3}, {a2,a3}, {}.
        let on = [0b001, 0b011, 0b111];
        let dc = [0b101];
        let cubes = minimize_sop(3, &on, &dc);
        assert_eq!(cubes, vec![Cube { care: 0b001, value: 0b001 }]);
    }

    #[test]
    fn cover_is_exact_on_specified_points() {
        let on = [1, 3, 7, 11, 15];
        let off = [0, 2, 4, 5, 6, 8, 9];
        let dc: Vec<u32> = (0..16).filter(|m| !on.contains(m) && !off.contains(m)).collect();
        let t = truth(&minimize_sop(4, &on, &dc), 4);
        assert!(on.iter().all(|&m| t[m as usize]));
        assert!(off.iter().all(|&m| !t[m as usize]));
    }

    #[test]
    fn expression_builders_simplify() {
        assert_eq!(Expr::and(vec![Expr::Const(true), Expr::Input(0)]), Expr::Input(0));
        assert_eq!(Expr::or(vec![]), Expr::Const(false));
        assert_eq!(Expr::not(Expr::not(Expr::Reg(1))), Expr::Reg(1));
    }
}
