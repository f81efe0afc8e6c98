use crate::typecheck::{Context, TypedKind, TypedTerm};

use super::{apply, copycat, denote_constant, pair, project, Strategy, StrategyError};

/// Compositional interpretation of a typed term over the identifiers it uses.
pub fn denote(t: &TypedTerm) -> Result<Strategy, StrategyError> {
    let s = match &t.kind {
        TypedKind::Var(x) => copycat(&t.ty, x),
        TypedKind::Const(c) => denote_constant(*c),
        TypedKind::Lam(x, ty, body) => denote(body)?.curry(x, ty),
        TypedKind::App(f, a) => apply(&denote(f)?, &denote(a)?)?,
        TypedKind::Pair(a, b) => pair(&denote(a)?, &denote(b)?)?,
        TypedKind::Fst(p) => project(&denote(p)?, true)?,
        TypedKind::Snd(p) => project(&denote(p)?, false)?,
    };
    Ok(s)
}

/// As [`denote`], with the interface extended to a whole typing context.
pub fn denote_in(t: &TypedTerm, ctx: &Context) -> Result<Strategy, StrategyError> {
    Ok(denote(t)?.weaken(&ctx.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::MoveId;
    use crate::parse::parse;
    use crate::strategy::{compose_oracle, diagonal, glue, plug};
    use crate::syntax::{Constant, Type};
    use crate::typecheck::typecheck;

    fn den(src: &str, ctx: &Context) -> Strategy {
        denote(&typecheck(&parse(src).unwrap(), ctx).unwrap()).unwrap()
    }

    fn words(s: &Strategy, n: usize) -> Vec<String> {
        s.automaton
            .language(n)
            .into_iter()
            .map(|w| w.iter().map(|m| s.arena().name(*m)).collect::<Vec<_>>().join(" "))
            .collect()
    }

    #[test]
    fn seq_of_skips_behaves_as_skip() {
        let s = den("skip; skip", &Context::new());
        assert_eq!(s.automaton, denote_constant(Constant::Skip).automaton);
    }

    #[test]
    fn identity_is_copycat() {
        let ctx = Context::new().with("x", Type::Com);
        let s = den("x", &ctx);
        assert_eq!(words(&s, 4).last().unwrap(), "q1 q2 a2 a1");
    }

    #[test]
    fn compose_matches_oracle_on_seq() {
        let skips = glue(&denote_constant(Constant::Skip), &denote_constant(Constant::Skip)).unwrap();
        let seq = denote_constant(Constant::Seq).uncurry("p").unwrap();
        let composed = crate::strategy::compose(&skips, &seq).unwrap();
        let oracle = compose_oracle(&skips, &seq, 12).unwrap();
        assert_eq!(composed.automaton.language(12), oracle);
        assert_eq!(composed.automaton.num_states(), 2);
    }

    #[test]
    fn sharing_goes_through_one_manager() {
        let ctx = Context::new().with("x", Type::Com);
        let s = den("x; x", &ctx);
        let w: Vec<MoveId> = ["q1", "q2", "a2", "q2", "a2", "a1"].iter().map(|n| s.arena().by_name(n).unwrap()).collect();
        assert!(s.automaton.run(&w).is_some());
        assert!(s.automaton.check_protocol().is_ok());
        assert!(s.automaton.check_reset());
    }

    #[test]
    fn diagonal_law_on_closed_term() {
        let skip = denote_constant(Constant::Skip);
        let replicated = glue(&skip, &skip).unwrap();
        let shared = plug(&diagonal(&Type::Com, "x"), &skip, &[("x", 0)]).unwrap();
        assert_eq!(replicated.automaton.language(10), shared.automaton.language(10));
    }

    #[test]
    fn newvar_block_is_closed() {
        let s = den("new x in x := 1; if !x then skip else x := 0", &Context::new());
        assert_eq!(words(&s, 2).last().unwrap(), "q1 a1");
        assert_eq!(s.automaton.num_states(), 2);
    }

    #[test]
    fn divergence_is_detected() {
        let t = typecheck(&parse("while 1 do skip").unwrap(), &Context::new()).unwrap();
        assert_eq!(denote(&t).unwrap_err(), StrategyError::DivergenceDetected);
    }
}
