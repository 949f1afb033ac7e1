//! A brute-force semantics at desk scale, used to test the kernel and the
//! rules: enumeration of canonical inhabitants, LF derivability with
//! heights, validity of closed quantifier-free formulas, and a bounded
//! evaluator for quantified formulas and sequents.

use std::collections::BTreeSet;

use crate::logic::*;
use crate::schemas::*;
use crate::sequent::*;
use crate::subst::*;
use crate::syntax::*;
use crate::typing::{check_context, check_term};

/// Inputs the oracle does not evaluate.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("the oracle does not evaluate quantified formulas: {0}")]
    Quantifier(String),
    #[error("formula is not closed: {0}")]
    NotClosed(String),
}

fn binder(depth: usize) -> String {
    format!("x{}", depth)
}

/// Canonical terms of type `a` in `ctx` with at most `budget` nodes,
/// paired with their sizes. Candidates are generated along the types of
/// the available heads, so only spine-correct terms are produced.
fn enum_typed(sig: &Signature, ctx: &LfCtx, a: &Type, budget: usize, depth: usize) -> Vec<(Term, usize)> {
    if budget == 0 {
        return vec![];
    }
    match a {
        Type::Pi(x, a1, a2) => {
            let y = binder(depth);
            let Some(body_ty) = hsub_type(&Subst::single(x, Term::var(&y), erase(a1)), a2) else { return vec![] };
            let inner = ctx.clone().with(Head::var(&y), (**a1).clone());
            enum_typed(sig, &inner, &body_ty, budget - 1, depth + 1).into_iter().map(|(m, s)| (Term::lam(&y, m), s + 1)).collect()
        }
        Type::Atom(p, _) => {
            let mut heads: Vec<(Head, Type)> = sig.constants().map(|(c, t)| (Head::cst(c), t.clone())).collect();
            heads.extend(ctx.binds.iter().cloned());
            let mut out = Vec::new();
            for (h, t) in heads {
                if result_family(&t) != p {
                    continue;
                }
                spine(sig, ctx, &h, &t, a, budget - 1, depth, &mut vec![], 1, &mut out);
            }
            out
        }
    }
}

fn result_family(t: &Type) -> &str {
    match t {
        Type::Pi(_, _, b) => result_family(b),
        Type::Atom(p, _) => p,
    }
}

fn pi_count(t: &Type) -> usize {
    match t {
        Type::Pi(_, _, b) => 1 + pi_count(b),
        Type::Atom(..) => 0,
    }
}

#[allow(clippy::too_many_arguments)]
fn spine(sig: &Signature, ctx: &LfCtx, h: &Head, t: &Type, target: &Type, budget: usize, depth: usize, args: &mut Vec<Term>, size: usize, out: &mut Vec<(Term, usize)>) {
    match t {
        Type::Atom(..) => {
            if t.alpha_eq(target) {
                out.push((Term::App(h.clone(), args.clone()), size));
            }
        }
        Type::Pi(x, a1, a2) => {
            let later = pi_count(a2);
            if budget < later + 1 {
                return;
            }
            for (m, s) in enum_typed(sig, ctx, a1, budget - later, depth) {
                let Some(rest) = hsub_type(&Subst::single(x, m.clone(), erase(a1)), a2) else { continue };
                args.push(m);
                spine(sig, ctx, h, &rest, target, budget - s, depth, args, size + s, out);
                args.pop();
            }
        }
    }
}

/// The canonical inhabitants of `a` in the closed context `ctx` with at
/// most `max_size` nodes, smallest first; each is confirmed by the checker.
pub fn enumerate_terms(sig: &Signature, ctx: &LfCtx, a: &Type, max_size: usize) -> Vec<Term> {
    let mut found = enum_typed(sig, ctx, a, max_size, 0);
    found.sort_by_key(|(_, s)| *s);
    let mut out: Vec<Term> = Vec::new();
    for (m, _) in found {
        if check_term(sig, ctx, &m, a).is_ok() && !out.iter().any(|n| n.alpha_eq(&m)) {
            out.push(m);
        }
    }
    out
}

/// Canonical terms of arity `alpha` built from the given heads, with at
/// most `max_size` nodes; these are the instances quantifiers range over.
pub fn arity_terms(heads: &[(Head, Arity)], alpha: &Arity, max_size: usize) -> Vec<Term> {
    fn go(heads: &[(Head, Arity)], alpha: &Arity, budget: usize, depth: usize) -> Vec<(Term, usize)> {
        if budget == 0 {
            return vec![];
        }
        match alpha {
            Arity::Arrow(a, b) => {
                let y = binder(depth);
                let mut inner = heads.to_vec();
                inner.push((Head::var(&y), (**a).clone()));
                go(&inner, b, budget - 1, depth + 1).into_iter().map(|(m, s)| (Term::lam(&y, m), s + 1)).collect()
            }
            Arity::O => {
                let mut out = Vec::new();
                for (h, ha) in heads {
                    let (parts, _) = ha.parts();
                    let mut acc: Vec<(Vec<Term>, usize)> = vec![(vec![], 1)];
                    for (i, p) in parts.iter().enumerate() {
                        let later = parts.len() - i - 1;
                        let mut next = Vec::new();
                        for (args, used) in &acc {
                            if budget < used + later + 1 {
                                continue;
                            }
                            for (m, s) in go(heads, p, budget - used - later, depth) {
                                let mut a2 = args.clone();
                                a2.push(m);
                                next.push((a2, used + s));
                            }
                        }
                        acc = next;
                    }
                    out.extend(acc.into_iter().filter(|(_, s)| *s <= budget).map(|(args, s)| (Term::App(h.clone(), args), s)));
                }
                out
            }
        }
    }
    let mut v = go(heads, alpha, max_size, 0);
    v.sort_by_key(|(_, s)| *s);
    v.into_iter().map(|(m, _)| m).collect()
}

/// The height of the LF derivation of `ctx ⊢ m : a`, if there is one.
pub fn lf_height(sig: &Signature, ctx: &LfCtx, m: &Term, a: &Type) -> Option<usize> {
    check_context(sig, ctx).ok()?;
    check_term(sig, ctx, m, a).ok().map(|d| d.height)
}

/// Validity of a closed quantifier-free formula under a height assignment.
pub fn oracle_valid(sig: &Signature, f: &Formula, ups: &HeightAssignment) -> Result<bool, OracleError> {
    Ok(match f {
        Formula::Atom { ctx, term, ty, ann } => {
            if ctx.var.is_some() || !f.fv().is_empty() {
                return Err(OracleError::NotClosed(f.to_string()));
            }
            match lf_height(sig, &ctx.to_lf(), term, ty) {
                Some(h) => ups.admits(*ann, h),
                None => false,
            }
        }
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Imp(a, b) => !oracle_valid(sig, a, ups)? || oracle_valid(sig, b, ups)?,
        Formula::And(a, b) => oracle_valid(sig, a, ups)? && oracle_valid(sig, b, ups)?,
        Formula::Or(a, b) => oracle_valid(sig, a, ups)? || oracle_valid(sig, b, ups)?,
        Formula::Ctx(..) | Formula::All(..) | Formula::Exists(..) => return Err(OracleError::Quantifier(f.to_string())),
    })
}

/// Size limits for the bounded evaluator.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    /// Largest term (in nodes) a term quantifier or variable ranges over.
    pub term_size: usize,
    /// Most blocks added to a context variable's recorded blocks.
    pub extra_blocks: usize,
    /// Largest value given to an annotation index.
    pub max_height: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { term_size: 3, extra_blocks: 1, max_height: 4 }
    }
}

/// Heads from which quantifier instances are built: the object constants
/// of the signature and the given nominal constants.
pub fn instance_heads(sig: &Signature, noms: &BTreeSet<Nominal>) -> Vec<(Head, Arity)> {
    let mut hs: Vec<(Head, Arity)> = sig.constants().map(|(c, t)| (Head::cst(c), erase(t))).collect();
    hs.extend(noms.iter().map(|n| (Head::Nom(n.clone()), n.arity.clone())));
    hs
}

/// Closed instances of a block schema using the nominal constants `ns`.
fn block_instances(sig: &Signature, b: &BlockSchema, ns: &[Nominal], heads: &[(Head, Arity)], bounds: &Bounds) -> Vec<Block> {
    let Some(body) = block_body_with_names(b, ns) else { return vec![] };
    let mut thetas = vec![Subst::new()];
    for (x, a) in &b.header {
        let terms = arity_terms(heads, a, bounds.term_size);
        thetas = thetas
            .into_iter()
            .flat_map(|t| {
                terms.iter().map(move |m| {
                    let mut t2 = t.clone();
                    t2.insert(x, m.clone(), a.clone());
                    t2
                })
            })
            .collect();
    }
    let _ = sig;
    thetas.iter().filter_map(|t| body.iter().map(|(n, a)| Some((n.clone(), hsub_type(t, a)?))).collect()).collect()
}

/// Closed contexts of schema `schema` made of the `recorded` blocks with at
/// most `bounds.extra_blocks` further blocks, whose names avoid `avoid`.
pub fn ctx_instances(env: &Env, schema: &str, recorded: &[Block], avoid: &BTreeSet<Nominal>, heads: &[(Head, Arity)], bounds: &Bounds) -> Vec<CtxExpr> {
    let Some(c) = env.schemas.get(schema) else { return vec![] };
    let mut out = vec![CtxExpr { var: None, binds: recorded.iter().flatten().cloned().collect() }];
    if bounds.extra_blocks == 0 {
        return out;
    }
    let mut taken = avoid.clone();
    for (n, _) in recorded.iter().flatten() {
        taken.insert(n.clone());
    }
    for b in &c.blocks {
        let mut ns = Vec::new();
        for (_, a) in &b.body {
            let n = fresh_nominal(&erase(a), &taken);
            taken.insert(n.clone());
            ns.push(n);
        }
        for taken_n in &ns {
            taken.remove(taken_n);
        }
        for inst in block_instances(&env.sig, b, &ns, heads, bounds) {
            for pos in 0..=recorded.len() {
                let mut binds: Vec<(Nominal, Type)> = recorded[..pos].iter().flatten().cloned().collect();
                binds.extend(inst.iter().cloned());
                binds.extend(recorded[pos..].iter().flatten().cloned());
                out.push(CtxExpr { var: None, binds });
            }
        }
    }
    out.retain(|g| check_context(&env.sig, &g.to_lf()).is_ok());
    out
}

/// Bounded validity of a closed formula: quantifiers range over the
/// instances within `bounds`, built from the signature and `noms`.
pub fn bounded_valid(env: &Env, f: &Formula, ups: &HeightAssignment, noms: &BTreeSet<Nominal>, bounds: &Bounds) -> Result<bool, OracleError> {
    match f {
        Formula::Atom { .. } | Formula::Top | Formula::Bot => oracle_valid(&env.sig, f, ups),
        Formula::Imp(a, b) => Ok(!bounded_valid(env, a, ups, noms, bounds)? || bounded_valid(env, b, ups, noms, bounds)?),
        Formula::And(a, b) => Ok(bounded_valid(env, a, ups, noms, bounds)? && bounded_valid(env, b, ups, noms, bounds)?),
        Formula::Or(a, b) => Ok(bounded_valid(env, a, ups, noms, bounds)? || bounded_valid(env, b, ups, noms, bounds)?),
        Formula::All(x, a, b) | Formula::Exists(x, a, b) => {
            let heads = instance_heads(&env.sig, noms);
            let universal = matches!(f, Formula::All(..));
            for m in arity_terms(&heads, a, bounds.term_size) {
                let Some(inst) = hsub_formula(&Subst::single(x, m, a.clone()), b) else { continue };
                let v = bounded_valid(env, &inst, ups, noms, bounds)?;
                if v != universal {
                    return Ok(v);
                }
            }
            Ok(universal)
        }
        Formula::Ctx(g, c, b) => {
            let heads = instance_heads(&env.sig, noms);
            for inst in ctx_instances(env, c, &[], &f.support(), &heads, bounds) {
                let mut sigma = CtxSubst::new();
                sigma.insert(g.clone(), inst);
                if !bounded_valid(env, &ctxsubst_formula(&sigma, b), ups, noms, bounds)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Every height assignment giving the listed indices values in
/// `1..=max_height + 1`.
fn height_assignments(indices: &[u32], max_height: usize) -> Vec<HeightAssignment> {
    let mut out = vec![HeightAssignment::new(0)];
    for i in indices {
        out = out.into_iter().flat_map(|u| (1..=max_height + 1).map(move |h| u.update(*i, h))).collect();
    }
    out
}

/// Bounded validity of a sequent: for every closed instance of its context
/// variables and term variables within `bounds`, and every height
/// assignment, if all assumptions hold then so does the goal.
pub fn sequent_valid(env: &Env, seq: &Sequent, bounds: &Bounds) -> Result<bool, OracleError> {
    let noms = seq.support.clone();
    let heads = instance_heads(&env.sig, &noms);
    let mut thetas = vec![Subst::new()];
    for (x, a) in &seq.vars {
        let terms = arity_terms(&heads, a, bounds.term_size);
        thetas = thetas
            .into_iter()
            .flat_map(|t| {
                terms.iter().map(move |m| {
                    let mut t2 = t.clone();
                    t2.insert(x, m.clone(), a.clone());
                    t2
                })
            })
            .collect();
    }
    let indices: Vec<u32> = seq.ann_indices().into_iter().collect();
    let upss = height_assignments(&indices, bounds.max_height);
    for theta in &thetas {
        // Recorded blocks mention term variables, so context instances are
        // built after the term variables are fixed.
        let mut sigmas = vec![CtxSubst::new()];
        for (g, e) in &seq.ctxvars {
            let Some(ty) = e.ty.hsub(theta) else { continue };
            let insts = ctx_instances(env, &ty.schema, &ty.blocks, &e.avoid, &heads, bounds);
            sigmas = sigmas
                .into_iter()
                .flat_map(|s| {
                    insts.iter().map(move |i| {
                        let mut s2 = s.clone();
                        s2.insert(g.clone(), i.clone());
                        s2
                    })
                })
                .collect();
        }
        for sigma in &sigmas {
            let inst = |f: &Formula| hsub_formula(theta, &ctxsubst_formula(sigma, f));
            let Some(goal) = inst(&seq.goal) else { continue };
            let Some(hyps) = seq.hyps.iter().map(|h| inst(&h.formula)).collect::<Option<Vec<_>>>() else { continue };
            for ups in &upss {
                let mut hyps_hold = true;
                for h in &hyps {
                    if !bounded_valid(env, h, ups, &noms, bounds)? {
                        hyps_hold = false;
                        break;
                    }
                }
                if hyps_hold && !bounded_valid(env, &goal, ups, &noms, bounds)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::stlc;

    fn tp() -> Type {
        Type::atom("tp", vec![])
    }

    #[test]
    fn enumerates_small_types() {
        let s = stlc();
        let found: Vec<String> = enumerate_terms(&s, &LfCtx::new(), &tp(), 3).iter().map(|m| m.to_string()).collect();
        assert_eq!(found, vec!["unit", "arr unit unit"]);
        let tm = enumerate_terms(&s, &LfCtx::new(), &Type::atom("tm", vec![]), 1);
        assert_eq!(tm, vec![Term::cst("empty")]);
    }

    #[test]
    fn arity_terms_are_canonical() {
        let heads = vec![(Head::cst("c"), Arity::O), (Head::cst("f"), Arity::arrow(Arity::O, Arity::O))];
        let ts: Vec<String> = arity_terms(&heads, &Arity::O, 3).iter().map(|m| m.to_string()).collect();
        assert_eq!(ts, vec!["c", "f c", "f (f c)"]);
        let fs = arity_terms(&heads, &Arity::arrow(Arity::O, Arity::O), 2);
        assert_eq!(fs.len(), 2);
    }

    #[test]
    fn quantifiers_are_rejected() {
        let f = Formula::all("x", Arity::O, Formula::Top);
        assert!(matches!(oracle_valid(&stlc(), &f, &HeightAssignment::new(1)), Err(OracleError::Quantifier(_))));
    }
}
