//! Generators: deterministic random number source, term pools and a bank
//! of derivable LF judgements over the simply-typed lambda calculus.

use std::collections::BTreeSet;

use lflogic_core::fixtures::{stlc, stlc_schema};
use lflogic_core::oracle::{arity_terms, enumerate_terms};
use lflogic_core::sequent::Env;
use lflogic_core::syntax::*;
use lflogic_core::typing::{check_context, Judgement};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn env() -> Env {
    Env::new(stlc()).with_schema("c", stlc_schema())
}

pub fn tm() -> Type {
    Type::atom("tm", vec![])
}

pub fn tp() -> Type {
    Type::atom("tp", vec![])
}

pub fn of(e: Term, t: Term) -> Type {
    Type::atom("of", vec![e, t])
}

pub fn c(name: &str) -> Term {
    Term::cst(name)
}

pub fn app(h: &str, args: Vec<Term>) -> Term {
    Term::app(Head::cst(h), args)
}

pub fn nom(i: u32) -> Nominal {
    Nominal::base(i)
}

pub fn oo() -> Arity {
    Arity::arrow(Arity::O, Arity::O)
}

/// The object constants of the signature at the level of arities.
pub fn const_heads() -> Vec<(Head, Arity)> {
    ["unit", "arr", "empty", "app", "lam"]
        .iter()
        .map(|c| (Head::cst(c), erase(stlc().const_type(c).expect("constant"))))
        .collect()
}

/// Heads used for untyped substitution properties: constants, the free
/// variables `x`, `z : o` and `f : o -> o`, and two nominal constants.
pub fn open_heads() -> Vec<(Head, Arity)> {
    let mut hs = const_heads();
    hs.push((Head::var("x"), Arity::O));
    hs.push((Head::var("z"), Arity::O));
    hs.push((Head::var("f"), oo()));
    hs.push((Head::Nom(nom(0)), Arity::O));
    hs.push((Head::Nom(nom(1)), Arity::O));
    hs
}

/// Arity-correct terms over [`open_heads`].
pub struct Pools {
    pub base: Vec<Term>,
    pub funs: Vec<Term>,
}

impl Pools {
    pub fn new() -> Pools {
        let hs = open_heads();
        Pools { base: arity_terms(&hs, &Arity::O, 5), funs: arity_terms(&hs, &oo(), 4) }
    }
}

pub fn pick<'a, T>(rng: &mut StdRng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty pool")
}

/// Renames every bound variable to a new name, giving an alpha-variant.
pub fn alpha_variant(m: &Term, counter: &mut usize) -> Term {
    match m {
        Term::Lam(x, b) => {
            *counter += 1;
            let y = format!("v{}", counter);
            let b2 = rename_var(&**b, x, &y);
            Term::Lam(y, Box::new(alpha_variant(&b2, counter)))
        }
        Term::App(h, args) => Term::App(h.clone(), args.iter().map(|a| alpha_variant(a, counter)).collect()),
    }
}

/// A random well-formed context of up to three bindings: terms, types, and
/// typing assumptions about earlier term bindings.
pub fn random_ctx(rng: &mut StdRng) -> LfCtx {
    let len = rng.gen_range(0..=3);
    let mut idx: Vec<u32> = (0..4).collect();
    idx.shuffle(rng);
    let mut ctx = LfCtx::new();
    let mut terms: Vec<Nominal> = Vec::new();
    for &i in idx.iter().take(len) {
        let n = nom(i);
        let choice = rng.gen_range(0..3);
        let ty = match choice {
            0 => tm(),
            1 => tp(),
            _ => match terms.choose(rng) {
                Some(e) => of(Term::nom(e.clone()), if rng.gen_bool(0.5) { c("unit") } else { app("arr", vec![c("unit"), c("unit")]) }),
                None => tm(),
            },
        };
        if ty == tm() {
            terms.push(n.clone());
        }
        ctx.push(Head::Nom(n), ty);
    }
    ctx
}

/// Derivable judgements `Γ ⊢ M ⇐ A` found by exhaustive enumeration in a
/// number of random contexts.
pub fn judgement_bank(rng: &mut StdRng, contexts: usize) -> Vec<Judgement> {
    let sig = stlc();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..contexts {
        let ctx = random_ctx(rng);
        if !seen.insert(format!("{:?}", ctx)) {
            continue;
        }
        check_context(&sig, &ctx).expect("generated contexts are well formed");
        let tms = enumerate_terms(&sig, &ctx, &tm(), 4);
        let mut targets = vec![tm(), tp(), Type::arrow(tm(), tm())];
        for e in tms.iter().take(6) {
            for t in [c("unit"), app("arr", vec![c("unit"), c("unit")])] {
                targets.push(of(e.clone(), t));
            }
        }
        for a in targets {
            for m in enumerate_terms(&sig, &ctx, &a, 5) {
                out.push(Judgement { ctx: ctx.clone(), term: m, ty: a.clone() });
            }
        }
    }
    out
}

/// A nominal of base arity occurring nowhere in the judgement.
pub fn fresh_for(j: &Judgement) -> Nominal {
    let mut avoid = j.ctx.nominals();
    j.term.nominals(&mut avoid);
    j.ty.nominals(&mut avoid);
    fresh_nominal(&Arity::O, &avoid)
}
