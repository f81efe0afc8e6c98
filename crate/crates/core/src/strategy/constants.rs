use crate::arena::Arena;
use crate::syntax::{BinOp, Constant};

use super::{Automaton, Strategy};

/// Transducer of a constant over the arena of its signature. Ports are
/// numbered result first: `q1`/`a1` belong to the result.
pub fn denote_constant(c: Constant) -> Strategy {
    let sig = c.signature();
    let arena = Arena::of_type(&sig);
    let automaton = Automaton::from_edges(arena, &edges(c));
    Strategy { ctx: Vec::new(), result: sig, automaton }
}

fn op_edges(op: BinOp) -> Vec<(usize, &'static str, usize)> {
    // 0 -q1-> 1 -q2-> 2; first operand recorded in 3/4; 5/6 await the second.
    let mut e = vec![(0, "q1", 1), (1, "q2", 2), (2, "t2", 3), (2, "f2", 4), (3, "q3", 5), (4, "q3", 6)];
    for (state, a) in [(5, true), (6, false)] {
        for (ans, b) in [("t3", true), ("f3", false)] {
            e.push((state, ans, if op.apply(a, b) { 7 } else { 8 }));
        }
    }
    e.extend([(7, "t1", 0), (8, "f1", 0)]);
    e
}

fn par_edges() -> Vec<(usize, &'static str, usize)> {
    // Phase of each branch: 0 requested, 1 running, 2 done.
    let id = |x: usize, y: usize| 1 + 3 * x + y;
    let mut e = vec![(0, "q1", id(0, 0))];
    for x in 0..3 {
        for y in 0..3 {
            let s = id(x, y);
            match x {
                0 => e.push((s, "q2", id(1, y))),
                1 => e.push((s, "a2", id(2, y))),
                _ => {}
            }
            match y {
                0 => e.push((s, "q3", id(x, 1))),
                1 => e.push((s, "a3", id(x, 2))),
                _ => {}
            }
        }
    }
    e.push((id(2, 2), "a1", 0));
    e
}

fn newvar_edges() -> Vec<(usize, &'static str, usize)> {
    // 2/3: body running with bit 0/1; 4/5: reading; 6/7: writing 0/1; 8: body done.
    vec![
        (0, "q1", 1),
        (1, "q2", 2),
        (2, "q3", 4),
        (4, "f3", 2),
        (3, "q3", 5),
        (5, "t3", 3),
        (2, "wf3", 6),
        (3, "wf3", 6),
        (2, "wt3", 7),
        (3, "wt3", 7),
        (6, "a3", 2),
        (7, "a3", 3),
        (2, "a2", 8),
        (3, "a2", 8),
        (8, "a1", 0),
    ]
}

fn edges(c: Constant) -> Vec<(usize, &'static str, usize)> {
    match c {
        Constant::Skip => vec![(0, "q1", 1), (1, "a1", 0)],
        Constant::True => vec![(0, "q1", 1), (1, "t1", 0)],
        Constant::False => vec![(0, "q1", 1), (1, "f1", 0)],
        Constant::Seq => vec![(0, "q1", 1), (1, "q2", 2), (2, "a2", 3), (3, "q3", 4), (4, "a3", 5), (5, "a1", 0)],
        Constant::Par => par_edges(),
        Constant::Op(op) => op_edges(op),
        Constant::Not => vec![(0, "q1", 1), (1, "q2", 2), (2, "t2", 3), (2, "f2", 4), (3, "f1", 0), (4, "t1", 0)],
        Constant::If => vec![
            (0, "q1", 1),
            (1, "q2", 2),
            (2, "t2", 3),
            (3, "q3", 4),
            (4, "a3", 5),
            (2, "f2", 6),
            (6, "q4", 7),
            (7, "a4", 5),
            (5, "a1", 0),
        ],
        Constant::While => vec![
            (0, "q1", 1),
            (1, "q2", 2),
            (2, "t2", 3),
            (3, "q3", 4),
            (4, "a3", 1),
            (2, "f2", 5),
            (5, "a1", 0),
        ],
        Constant::Asg => vec![
            (0, "q1", 1),
            (1, "q3", 2),
            (2, "t3", 3),
            (3, "wt2", 4),
            (2, "f3", 5),
            (5, "wf2", 4),
            (4, "a2", 6),
            (6, "a1", 0),
        ],
        Constant::Der => vec![(0, "q1", 1), (1, "q2", 2), (2, "t2", 3), (3, "t1", 0), (2, "f2", 4), (4, "f1", 0)],
        Constant::Newvar => newvar_edges(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_constant_is_legal_and_resets() {
        for c in Constant::ALL {
            let s = denote_constant(c);
            assert!(s.automaton.check_protocol().is_ok(), "{}", c.name());
            assert!(s.automaton.check_reset(), "{}", c.name());
            assert_eq!(s.automaton.minimize().num_states(), s.automaton.num_states(), "{}", c.name());
        }
    }

    #[test]
    fn skip_is_two_state() {
        let s = denote_constant(Constant::Skip);
        assert_eq!(s.automaton.num_states(), 2);
    }
}
