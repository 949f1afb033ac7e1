//! Agreement of the focused atomic checker with a direct, unfocused
//! reading of the typing rules on every small closed atomic term.

use lflogic_core::fixtures::stlc;
use lflogic_core::oracle::{arity_terms, enumerate_terms, instance_heads};
use lflogic_core::subst::*;
use lflogic_core::syntax::*;
use lflogic_core::typing::{focused_check_atomic, Derivation};

use super::gen::*;

/// A straightforward checker returning the derivation height: an
/// abstraction is one more than its body (checked with a fresh nominal),
/// an application one more than its tallest argument.
fn naive(sig: &Signature, ctx: &LfCtx, m: &Term, a: &Type) -> Option<usize> {
    match (m, a) {
        (Term::Lam(x, body), Type::Pi(y, a1, a2)) => {
            let mut avoid = ctx.nominals();
            m.nominals(&mut avoid);
            a.nominals(&mut avoid);
            let n = fresh_nominal(&erase(a1), &avoid);
            let ctx2 = ctx.clone().with(Head::Nom(n.clone()), (**a1).clone());
            Some(1 + naive(sig, &ctx2, &instantiate_term(x, &n, body), &instantiate_type(y, &n, a2))?)
        }
        (Term::App(h, args), Type::Atom(..)) => {
            let mut ty = match h {
                Head::Const(c) => sig.const_type(c)?.clone(),
                other => ctx.lookup(other)?.clone(),
            };
            let mut tallest = 0;
            for arg in args {
                let Type::Pi(x, a1, a2) = ty else { return None };
                tallest = tallest.max(naive(sig, ctx, arg, &a1)?);
                ty = hsub_type(&Subst::single(&x, arg.clone(), erase(&a1)), &a2)?;
            }
            ty.alpha_eq(a).then_some(1 + tallest)
        }
        _ => None,
    }
}

fn decreasing(d: &Derivation) -> bool {
    d.children.iter().all(|c| c.height < d.height && decreasing(c))
}

/// Compares the two checkers on every arity-correct closed atomic term of
/// size at most `max_size` against a family of closed atomic types.
pub fn run(max_size: usize) -> Result<String, String> {
    let sig = stlc();
    let empty = LfCtx::new();
    let terms = arity_terms(&instance_heads(&sig, &Default::default()), &Arity::O, max_size);
    let mut types = vec![tm(), tp()];
    let tps = enumerate_terms(&sig, &empty, &tp(), 3);
    for e in enumerate_terms(&sig, &empty, &tm(), 4) {
        for t in &tps {
            types.push(of(e.clone(), t.clone()));
        }
    }
    for t in &tps {
        for u in &tps {
            types.push(Type::atom("eq", vec![t.clone(), u.clone()]));
        }
    }
    let mut derivable = 0;
    let mut pairs = 0;
    for m in &terms {
        for p in &types {
            pairs += 1;
            let focused = focused_check_atomic(&sig, &empty, m, p);
            let reference = naive(&sig, &empty, m, p);
            match (&focused, reference) {
                (Ok(d), Some(h)) if d.height == h => {
                    if !decreasing(d) {
                        return Err(format!("argument heights do not decrease for {} : {}", m, p));
                    }
                    derivable += 1;
                }
                (Err(_), None) => {}
                _ => return Err(format!("disagreement on {} : {}: focused {:?}, naive {:?}", m, p, focused.map(|d| d.height), reference)),
            }
        }
    }
    if derivable == 0 {
        return Err("no derivable pair was generated".into());
    }
    Ok(format!("{} terms, {} pairs, {} derivable; heights agree and decrease", terms.len(), pairs, derivable))
}
