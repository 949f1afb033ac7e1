//! Case analysis over LF typing derivations: the heads an atomic term can
//! have in a context (including heads introduced by making a block of a
//! context variable explicit), the unification-based computation of the
//! resulting cases, and the decomposition of a type into wellformedness
//! obligations.

use std::collections::BTreeSet;

use crate::logic::*;
use crate::schemas::*;
use crate::sequent::*;
use crate::subst::*;
use crate::syntax::*;
use crate::unify::{solve, Problem, Unified};

/// Failures of case analysis.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum CaseError {
    #[error("no assumption named `{0}`")]
    NoSuchHyp(String),
    #[error("`{0}` is not an atomic formula with an atomic term")]
    NotAtomic(String),
    #[error("case analysis leaves the pattern fragment: {0}")]
    OutsideFragment(String),
    #[error("{0}")]
    Sequent(#[from] SequentError),
}

/// One case of an analysis: the resulting sequent, the head that was
/// assumed, and the names of the added typing obligations.
#[derive(Clone, Debug)]
pub struct Case {
    pub seq: Sequent,
    pub head: Head,
    pub obligations: Vec<String>,
}

/// Choices of names for a block whose bindings have the given arities:
/// each name is either an unused member of `no` or the first name of that
/// arity outside `no ∪ nb`; names within a choice are distinct.
pub fn names_lists(arities: &[Arity], no: &BTreeSet<Nominal>, nb: &BTreeSet<Nominal>) -> Vec<Vec<Nominal>> {
    fn go(arities: &[Arity], no: &BTreeSet<Nominal>, nb: &mut BTreeSet<Nominal>, acc: &mut Vec<Nominal>, out: &mut Vec<Vec<Nominal>>) {
        let Some((alpha, rest)) = arities.split_first() else {
            out.push(acc.clone());
            return;
        };
        let mut cands: Vec<Nominal> = no.iter().filter(|n| &n.arity == alpha && !nb.contains(*n)).cloned().collect();
        let avoid: BTreeSet<Nominal> = no.union(nb).cloned().collect();
        cands.push(fresh_nominal(alpha, &avoid));
        for n in cands {
            nb.insert(n.clone());
            acc.push(n.clone());
            go(rest, no, nb, acc, out);
            acc.pop();
            nb.remove(&n);
        }
    }
    let mut out = Vec::new();
    go(arities, no, &mut nb.clone(), &mut Vec::new(), &mut out);
    out
}

/// Makes an instance of block schema `b`, named by `ns`, explicit as the
/// block following the first `j` recorded blocks of context variable `g`.
/// Header variables become fresh term variables raised over `nprime`, the
/// names of the preceding blocks and the newly introduced names. Returns
/// the new sequent together with the `i`-th binding of the block.
pub fn add_block(env: &Env, seq: &Sequent, g: &str, b: &BlockSchema, ns: &[Nominal], nprime: &BTreeSet<Nominal>, j: usize, i: usize) -> Option<(Sequent, Head, Type)> {
    let entry = seq.ctx_entry(g)?.clone();
    if j > entry.ty.blocks.len() || i >= ns.len() {
        return None;
    }
    let new: Vec<Nominal> = ns.iter().filter(|n| !seq.support.contains(*n)).cloned().collect();
    let (raised, theta1) = raise(&seq.vars, &new);
    let body = block_body_with_names(b, ns)?;
    let mut over: BTreeSet<Nominal> = nprime.clone();
    for blk in &entry.ty.blocks[..j] {
        over.extend(blk.iter().map(|(n, _)| n.clone()));
    }
    over.extend(new.iter().cloned());
    let over: Vec<Nominal> = over.into_iter().collect();
    let over_args: Vec<Term> = over.iter().map(|n| eta_expand(&Head::Nom(n.clone()), &n.arity)).collect();
    let over_arities: Vec<Arity> = over.iter().map(|n| n.arity.clone()).collect();

    let mut s = seq.hsub_all(&theta1)?;
    s.vars = raised;
    let mut header = Subst::new();
    for (x, alpha) in &b.header {
        let x2 = s.fresh_var(env, x);
        s.vars.push((x2.clone(), Arity::from_parts(&over_arities, alpha.clone())));
        header.insert(x, applied_var(&x2, &over_args, alpha), alpha.clone());
    }
    let block: Block = body.into_iter().map(|(n, a)| Some((n, hsub_type(&header, &a)?))).collect::<Option<_>>()?;
    let (hn, ha) = block[i].clone();
    s.ctx_entry_mut(g)?.ty.blocks.insert(j, block);
    s.support.extend(ns.iter().cloned());
    Some((s, Head::Nom(hn), ha))
}

/// Every head an atomic term may have in context `g`, each paired with the
/// sequent in which it is available and its type.
pub fn heads(env: &Env, seq: &Sequent, g: &CtxExpr) -> Vec<(Sequent, Head, Type)> {
    let mut out: Vec<(Sequent, Head, Type)> = env.sig.constants().map(|(c, a)| (seq.clone(), Head::cst(c), a.clone())).collect();
    let explicit = seq.explicit_bindings(g);
    for (n, a) in &explicit {
        out.push((seq.clone(), Head::Nom(n.clone()), a.clone()));
    }
    let Some(gv) = &g.var else { return out };
    let Some(entry) = seq.ctx_entry(gv) else { return out };
    let Some(schema) = env.schemas.get(&entry.ty.schema) else { return out };
    let nb: BTreeSet<Nominal> = explicit.iter().map(|(n, _)| n.clone()).collect();
    let no: BTreeSet<Nominal> = seq.support.iter().filter(|n| !entry.avoid.contains(*n) && !nb.contains(*n)).cloned().collect();
    let forbidden: BTreeSet<Nominal> = entry.avoid.union(&nb).cloned().collect();
    for b in &schema.blocks {
        let arities: Vec<Arity> = b.body.iter().map(|(_, a)| erase(a)).collect();
        for j in 0..=entry.ty.blocks.len() {
            for ns in names_lists(&arities, &no, &forbidden) {
                for i in 0..ns.len() {
                    if let Some(r) = add_block(env, seq, gv, b, &ns, &no, j, i) {
                        out.push(r);
                    }
                }
            }
        }
    }
    out
}

/// The canonical term standing for a generalised argument: `z` applied to
/// the listed nominal constants and eta-expanded to arity `alpha`.
fn generalised(z: &str, over: &[Nominal], alpha: &Arity) -> Term {
    let args: Vec<Term> = over.iter().map(|n| eta_expand(&Head::Nom(n.clone()), &n.arity)).collect();
    applied_var(z, &args, alpha)
}

/// The case for head `h : a` of the atomic assumption `name`, if the
/// unification problem has a solution. The assumption is replaced by
/// typing obligations for the arguments of `h`.
pub fn case_for_head(env: &Env, seq: &Sequent, name: &str, h: &Head, a: &Type) -> Result<Option<Case>, CaseError> {
    let (g, r, p, ann) = match seq.hyp(name).map(|h| &h.formula) {
        Some(Formula::Atom { ctx, term, ty, ann }) if matches!(term, Term::App(..)) && matches!(ty, Type::Atom(..)) => (ctx.clone(), term.clone(), ty.clone(), *ann),
        Some(f) => return Err(CaseError::NotAtomic(f.to_string())),
        None => return Err(CaseError::NoSuchHyp(name.to_string())),
    };
    let over: Vec<Nominal> = seq.support.iter().cloned().collect();
    let over_arities: Vec<Arity> = over.iter().map(|n| n.arity.clone()).collect();
    let mut taken = seq.taken_names(env);
    let mut problem = Problem::new();
    for (x, alpha) in &seq.vars {
        problem = problem.flex(x, alpha.clone());
    }
    let mut inst = Subst::new();
    let mut args = Vec::new();
    let mut arg_tys = Vec::new();
    let mut cur = a.clone();
    while let Type::Pi(x, a1, a2) = cur {
        let a1 = hsub_type(&inst, &a1).ok_or(SequentError::Undefined)?;
        let alpha = erase(&a1);
        let z = fresh_name(&x, |n| taken.contains(n));
        taken.insert(z.clone());
        problem = problem.flex(&z, Arity::from_parts(&over_arities, alpha.clone()));
        let t = generalised(&z, &over, &alpha);
        inst.insert(&x, t.clone(), alpha);
        args.push(t);
        arg_tys.push(a1);
        cur = *a2;
    }
    let p2 = hsub_type(&inst, &cur).ok_or(SequentError::Undefined)?;
    problem = problem.type_eq(p, p2).term_eq(r, Term::app(h.clone(), args.clone()), Arity::O);
    let sol = match solve(&env.sig, &problem) {
        Unified::Unique(s) => s,
        Unified::NoSolution => return Ok(None),
        Unified::OutsideFragment(why) => return Err(CaseError::OutsideFragment(why)),
    };
    let (mut s, theta_r) = seq.apply_term_subst(env, &sol.theta, &sol.vars)?;
    let both = |m: &Term| hsub_term(&theta_r, &hsub_term(&sol.theta, m)?);
    let both_ty = |t: &Type| hsub_type(&theta_r, &hsub_type(&sol.theta, t)?);
    let g2 = g.hsub(&sol.theta).and_then(|g| g.hsub(&theta_r)).ok_or(SequentError::Undefined)?;
    let ob_ann = match ann {
        Ann::None => Ann::None,
        Ann::At(i) | Ann::Star(i) => Ann::Star(i),
    };
    s.remove_hyp(name);
    let mut obligations = Vec::new();
    for (m, ty) in args.iter().zip(&arg_tys) {
        let m2 = both(m).ok_or(SequentError::Undefined)?;
        let ty2 = both_ty(ty).ok_or(SequentError::Undefined)?;
        obligations.push(s.add_hyp(Formula::atom(g2.clone(), m2, ty2).with_ann(ob_ann)));
    }
    let head = match h {
        Head::Nom(n) => Head::Nom(n.clone()),
        other => other.clone(),
    };
    Ok(Some(Case { seq: s, head, obligations }))
}

/// All cases of an atomic assumption. Fails if any head leads outside the
/// pattern fragment, since the remaining cases would then not cover.
pub fn all_cases(env: &Env, seq: &Sequent, name: &str) -> Result<Vec<Case>, CaseError> {
    let g = match seq.hyp(name).map(|h| &h.formula) {
        Some(Formula::Atom { ctx, term: Term::App(..), ty: Type::Atom(..), .. }) => ctx.clone(),
        Some(f) => return Err(CaseError::NotAtomic(f.to_string())),
        None => return Err(CaseError::NoSuchHyp(name.to_string())),
    };
    let mut out = Vec::new();
    for (s, h, a) in heads(env, seq, &g) {
        if let Some(c) = case_for_head(env, &s, name, &h, &a)? {
            out.push(c);
        }
    }
    Ok(out)
}

/// The wellformedness obligations of type `b` in context `g`, each as a
/// copy of `seq` whose goal is the obligation (with the support set and
/// context variable names extended when a Π-type is entered).
pub fn type_decompose(env: &Env, seq: &Sequent, g: &CtxExpr, b: &Type) -> Vec<Sequent> {
    match b {
        Type::Atom(a, args) => {
            let mut out = Vec::new();
            let mut k = match env.sig.family_kind(a) {
                Some(k) => k.clone(),
                None => return out,
            };
            for m in args {
                let Kind::Pi(x, ai, rest) = k else { break };
                let mut s = seq.clone();
                s.goal = Formula::atom(g.clone(), m.clone(), (*ai).clone());
                out.push(s);
                match hsub_kind(&Subst::single(&x, m.clone(), erase(&ai)), &rest) {
                    Some(r) => k = r,
                    None => break,
                }
            }
            out
        }
        Type::Pi(x, a1, a2) => {
            let mut out = type_decompose(env, seq, g, a1);
            let n = seq.fresh_nominal(&erase(a1));
            let mut s = seq.clone();
            s.support.insert(n.clone());
            if let Some(e) = g.var.as_ref().and_then(|v| s.ctx_entry_mut(v)) {
                e.avoid.insert(n.clone());
            }
            let g2 = g.clone().with(n.clone(), (**a1).clone());
            out.extend(type_decompose(env, &s, &g2, &instantiate_type(x, &n, a2)));
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{stlc, stlc_schema};

    fn env() -> Env {
        Env::new(stlc()).with_schema("c", stlc_schema())
    }

    #[test]
    fn names_lists_offer_existing_and_fresh_names() {
        let no: BTreeSet<Nominal> = [Nominal::base(0)].into_iter().collect();
        let ls = names_lists(&[Arity::O, Arity::O], &no, &BTreeSet::new());
        assert_eq!(ls.len(), 3);
        assert!(ls.iter().all(|l| l[0] != l[1]));
        let ls = names_lists(&[Arity::O, Arity::O], &BTreeSet::new(), &BTreeSet::new());
        assert_eq!(ls, vec![vec![Nominal::base(0), Nominal::base(1)]]);
    }

    fn typing_seq() -> Sequent {
        let mut s = Sequent::new(Formula::Top);
        s.vars = vec![("e".into(), Arity::O), ("t".into(), Arity::O), ("d".into(), Arity::O)];
        s.ctxvars.push(("G".into(), CtxVarEntry { avoid: BTreeSet::new(), ty: CtxVarType::new("c") }));
        s.add_hyp(Formula::atom(CtxExpr::var("G"), Term::var("d"), Type::atom("of", vec![Term::var("e"), Term::var("t")])).with_ann(Ann::At(1)));
        s
    }

    #[test]
    fn typing_derivation_has_four_cases() {
        let e = env();
        let s = typing_seq();
        s.wf(&e).unwrap();
        let cases = all_cases(&e, &s, "H1").unwrap();
        let heads: Vec<String> = cases.iter().map(|c| c.head.to_string()).collect();
        assert_eq!(heads, vec!["of_empty", "of_app", "of_lam", "n1"]);
        for c in &cases {
            c.seq.wf(&e).unwrap();
        }
        let block = &cases[3].seq;
        assert_eq!(block.ctx_entry("G").unwrap().ty.blocks.len(), 1);
        for c in &cases { println!("{}\n", c.seq); }
        assert!(cases[2].seq.hyps.iter().all(|h| matches!(h.formula, Formula::Atom { ann: Ann::Star(1), .. })));
    }

    #[test]
    fn type_decomposition() {
        let e = env();
        let s = typing_seq();
        let b = Type::pi("x", Type::atom("tm", vec![]), Type::atom("of", vec![Term::var("x"), Term::var("t")]));
        let obs = type_decompose(&e, &s, &CtxExpr::var("G"), &b);
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[0].goal.to_string(), "{G, n ⊢ n : tm}".replace("G, n", "G, n:tm"));
        assert_eq!(obs[1].goal.to_string(), "{G, n:tm ⊢ t : tp}");
        assert!(obs[1].ctx_entry("G").unwrap().avoid.contains(&Nominal::base(0)));
    }
}
