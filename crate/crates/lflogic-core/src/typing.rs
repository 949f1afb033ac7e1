//! LF formation judgements, arity typing and kinding, and the
//! transformations licensed by the LF meta-theorems.
//!
//! Checking a product or an abstraction instantiates the bound variable
//! with a fresh nominal constant, so the contexts seen during checking bind
//! nominals rather than variables. Every successful check returns a
//! [`Derivation`] carrying its height: leaves have height 1, the focused
//! atomic rule is one more than its tallest argument check, and an
//! abstraction is one more than its body.

use std::collections::BTreeSet;

use crate::subst::*;
use crate::syntax::*;

/// Which rule concluded a derivation node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// `Γ ⊢ R ⇐ P` via the focused atomic rule (head lookup plus arguments).
    Atomic,
    /// `Γ ⊢ λx.M ⇐ Πx:A1.A2`.
    Lam,
    /// `Γ ⊢ P : Type` via the focused family rule.
    AtomicFamily,
    /// `Γ ⊢ Πx:A1.A2 type`.
    PiType,
    /// `Γ ⊢ Type kind`.
    TypeKind,
    /// `Γ ⊢ Πx:A.K kind`.
    PiKind,
}

/// A derivation tree with heights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub height: usize,
    pub children: Vec<Derivation>,
}

impl Derivation {
    fn node(rule: Rule, children: Vec<Derivation>) -> Derivation {
        let height = 1 + children.iter().map(|d| d.height).max().unwrap_or(0);
        Derivation { rule, height, children }
    }
}

/// Why an LF judgement is not derivable.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("`{0}` is not bound in the signature or context")]
    Unbound(String),
    #[error("`{0}` is not a type family")]
    NotAFamily(String),
    #[error("`{0}` is not an object constant")]
    NotAConstant(String),
    #[error("`{head}` is applied to too many arguments")]
    TooManyArgs { head: String },
    #[error("`{head}` is not fully applied")]
    TooFewArgs { head: String },
    #[error("type mismatch: expected `{expected}`, found `{found}`")]
    Mismatch { expected: String, found: String },
    #[error("`{term}` cannot have type `{ty}`")]
    Shape { term: String, ty: String },
    #[error("substitution undefined while instantiating `{0}`")]
    Undefined(String),
    #[error("`{0}` is bound more than once")]
    Duplicate(String),
    #[error("in declaration of `{decl}`: {inner}")]
    InDecl { decl: String, inner: Box<TypeError> },
    #[error("in binding of `{binder}`: {inner}")]
    InBinding { binder: String, inner: Box<TypeError> },
    #[error("in argument {index} of `{head}`: {inner}")]
    InArg { head: String, index: usize, inner: Box<TypeError> },
}

/// Violated hypothesis of a meta-theoretic transformation.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetaError {
    #[error("position {0} is outside the context")]
    Position(usize),
    #[error("`{0}` is already bound in the context")]
    AlreadyBound(String),
    #[error("`{0}` occurs in the judgement")]
    Occurs(String),
    #[error("`{0}` occurs in the type of the next binding")]
    Dependent(String),
    #[error("the new binding's type is ill-formed: {0}")]
    IllFormed(TypeError),
    #[error("the instantiating term does not check: {0}")]
    BadInstance(TypeError),
    #[error("substitution is undefined")]
    Undefined,
}

/// A checking judgement `Γ ⊢ M ⇐ A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgement {
    pub ctx: LfCtx,
    pub term: Term,
    pub ty: Type,
}

fn avoid_set(ctx: &LfCtx, extra: &[&dyn Fn(&mut BTreeSet<Nominal>)]) -> BTreeSet<Nominal> {
    let mut s = ctx.nominals();
    for f in extra {
        f(&mut s);
    }
    s
}

fn head_type<'a>(sig: &'a Signature, ctx: &'a LfCtx, h: &Head) -> Result<&'a Type, TypeError> {
    match h {
        Head::Const(c) => sig.const_type(c).ok_or_else(|| match sig.get(c) {
            Some(_) => TypeError::NotAConstant(c.clone()),
            None => TypeError::Unbound(c.clone()),
        }),
        _ => ctx.lookup(h).ok_or_else(|| TypeError::Unbound(h.to_string())),
    }
}

/// `Γ ⊢ M ⇐ A`.
pub fn check_term(sig: &Signature, ctx: &LfCtx, m: &Term, a: &Type) -> Result<Derivation, TypeError> {
    match (m, a) {
        (Term::Lam(x, body), Type::Pi(y, a1, a2)) => {
            let n = fresh_nominal(&erase(a1), &avoid_set(ctx, &[&|s| m.nominals(s), &|s| a.nominals(s)]));
            let body2 = instantiate_term(x, &n, body);
            let a22 = instantiate_type(y, &n, a2);
            let ctx2 = ctx.clone().with(Head::Nom(n), (**a1).clone());
            let d = check_term(sig, &ctx2, &body2, &a22)?;
            Ok(Derivation::node(Rule::Lam, vec![d]))
        }
        (Term::App(..), Type::Atom(..)) => focused_check_atomic(sig, ctx, m, a),
        _ => Err(TypeError::Shape { term: m.to_string(), ty: a.to_string() }),
    }
}

/// The focused rule for atomic terms: look up the head's type, check each
/// argument against the instantiated domain, and compare the final target.
pub fn focused_check_atomic(sig: &Signature, ctx: &LfCtx, r: &Term, p: &Type) -> Result<Derivation, TypeError> {
    let (h, args) = match r {
        Term::App(h, args) => (h, args),
        Term::Lam(..) => return Err(TypeError::Shape { term: r.to_string(), ty: p.to_string() }),
    };
    let mut ty = head_type(sig, ctx, h)?.clone();
    let mut children = Vec::with_capacity(args.len());
    for (i, arg) in args.iter().enumerate() {
        let (x, a1, a2) = match ty {
            Type::Pi(x, a1, a2) => (x, *a1, *a2),
            Type::Atom(..) => return Err(TypeError::TooManyArgs { head: h.to_string() }),
        };
        let d = check_term(sig, ctx, arg, &a1).map_err(|e| TypeError::InArg {
            head: h.to_string(),
            index: i + 1,
            inner: Box::new(e),
        })?;
        children.push(d);
        ty = hsub_type(&Subst::single(&x, arg.clone(), erase(&a1)), &a2)
            .ok_or_else(|| TypeError::Undefined(h.to_string()))?;
    }
    match &ty {
        Type::Pi(..) => Err(TypeError::TooFewArgs { head: h.to_string() }),
        Type::Atom(..) if ty.alpha_eq(p) => Ok(Derivation::node(Rule::Atomic, children)),
        Type::Atom(..) => Err(TypeError::Mismatch { expected: p.to_string(), found: ty.to_string() }),
    }
}

/// The focused rule for atomic types: `Γ ⊢ a M1 ... Mn : Type`.
pub fn focused_check_atomic_kind(sig: &Signature, ctx: &LfCtx, p: &Type) -> Result<Derivation, TypeError> {
    let (a, args) = match p {
        Type::Atom(a, args) => (a, args),
        Type::Pi(..) => return Err(TypeError::NotAFamily(p.to_string())),
    };
    let mut k = sig
        .family_kind(a)
        .ok_or_else(|| match sig.get(a) {
            Some(_) => TypeError::NotAFamily(a.clone()),
            None => TypeError::Unbound(a.clone()),
        })?
        .clone();
    let mut children = Vec::with_capacity(args.len());
    for (i, arg) in args.iter().enumerate() {
        let (x, a1, k2) = match k {
            Kind::Pi(x, a1, k2) => (x, *a1, *k2),
            Kind::Type => return Err(TypeError::TooManyArgs { head: a.clone() }),
        };
        let d = check_term(sig, ctx, arg, &a1).map_err(|e| TypeError::InArg {
            head: a.clone(),
            index: i + 1,
            inner: Box::new(e),
        })?;
        children.push(d);
        k = hsub_kind(&Subst::single(&x, arg.clone(), erase(&a1)), &k2).ok_or_else(|| TypeError::Undefined(a.clone()))?;
    }
    match k {
        Kind::Type => Ok(Derivation::node(Rule::AtomicFamily, children)),
        Kind::Pi(..) => Err(TypeError::TooFewArgs { head: a.clone() }),
    }
}

/// `Γ ⊢ A type`.
pub fn check_type(sig: &Signature, ctx: &LfCtx, a: &Type) -> Result<Derivation, TypeError> {
    match a {
        Type::Atom(..) => focused_check_atomic_kind(sig, ctx, a),
        Type::Pi(x, a1, a2) => {
            let d1 = check_type(sig, ctx, a1)?;
            let n = fresh_nominal(&erase(a1), &avoid_set(ctx, &[&|s| a.nominals(s)]));
            let a22 = instantiate_type(x, &n, a2);
            let d2 = check_type(sig, &ctx.clone().with(Head::Nom(n), (**a1).clone()), &a22)?;
            Ok(Derivation::node(Rule::PiType, vec![d1, d2]))
        }
    }
}

/// `Γ ⊢ K kind`.
pub fn check_kind(sig: &Signature, ctx: &LfCtx, k: &Kind) -> Result<Derivation, TypeError> {
    match k {
        Kind::Type => Ok(Derivation::node(Rule::TypeKind, vec![])),
        Kind::Pi(x, a, k2) => {
            let d1 = check_type(sig, ctx, a)?;
            let n = fresh_nominal(&erase(a), &avoid_set(ctx, &[&|s| k.nominals(s)]));
            let k22 = instantiate_kind(x, &n, k2);
            let d2 = check_kind(sig, &ctx.clone().with(Head::Nom(n), (**a).clone()), &k22)?;
            Ok(Derivation::node(Rule::PiKind, vec![d1, d2]))
        }
    }
}

/// `⊢ Γ ctx`: bindings are distinct and each type is well-formed in its prefix.
pub fn check_context(sig: &Signature, ctx: &LfCtx) -> Result<(), TypeError> {
    let mut prefix = LfCtx::new();
    for (h, a) in &ctx.binds {
        if prefix.lookup(h).is_some() || matches!(h, Head::Const(_)) {
            return Err(TypeError::Duplicate(h.to_string()));
        }
        if let Head::Var(x) = h {
            if sig.get(x).is_some() {
                return Err(TypeError::Duplicate(x.clone()));
            }
        }
        if let Head::Nom(n) = h {
            if erase(a) != n.arity {
                return Err(TypeError::InBinding {
                    binder: h.to_string(),
                    inner: Box::new(TypeError::Mismatch { expected: n.arity.to_string(), found: erase(a).to_string() }),
                });
            }
        }
        check_type(sig, &prefix, a).map_err(|e| TypeError::InBinding { binder: h.to_string(), inner: Box::new(e) })?;
        prefix.push(h.clone(), a.clone());
    }
    Ok(())
}

/// `⊢ Σ sig`: names are distinct and every classifier is closed and
/// well-formed with respect to the preceding declarations.
pub fn check_signature(sig: &Signature) -> Result<(), TypeError> {
    let mut seen = BTreeSet::new();
    for (i, d) in sig.decls().iter().enumerate() {
        if !seen.insert(d.name.clone()) {
            return Err(TypeError::Duplicate(d.name.clone()));
        }
        let prefix = sig.prefix(i);
        let wrap = |e| TypeError::InDecl { decl: d.name.clone(), inner: Box::new(e) };
        match &d.class {
            Classifier::Type(a) => {
                if !a.support().is_empty() {
                    return Err(wrap(TypeError::Unbound(a.support().iter().next().unwrap().to_string())));
                }
                check_type(&prefix, &LfCtx::new(), a).map_err(wrap)?;
            }
            Classifier::Kind(k) => {
                if !k.support().is_empty() {
                    return Err(wrap(TypeError::Unbound(k.support().iter().next().unwrap().to_string())));
                }
                check_kind(&prefix, &LfCtx::new(), k).map_err(wrap)?;
            }
        }
    }
    Ok(())
}

/// `Θ ⊩ M : α`.
pub fn arity_check_term(theta: &ArityCtx, m: &Term, alpha: &Arity) -> bool {
    match (m, alpha) {
        (Term::Lam(x, b), Arity::Arrow(a1, a2)) => arity_check_term(&theta.with_var(x, (**a1).clone()), b, a2),
        (Term::App(h, args), Arity::O) => arity_synth(theta, h, args) == Some(Arity::O),
        _ => false,
    }
}

/// Synthesizes the arity of an atomic term `h M1 ... Mn`.
pub fn arity_synth(theta: &ArityCtx, h: &Head, args: &[Term]) -> Option<Arity> {
    let mut ty = theta.lookup(h)?;
    for arg in args {
        let (a1, a2) = match ty {
            Arity::Arrow(a1, a2) => (*a1, *a2),
            Arity::O => return None,
        };
        if !arity_check_term(theta, arg, &a1) {
            return None;
        }
        ty = a2;
    }
    Some(ty)
}

/// `Θ ⊩ A`: arity kinding of a canonical type against the signature's kinds.
pub fn arity_kind_type(sig: &Signature, theta: &ArityCtx, a: &Type) -> bool {
    match a {
        Type::Pi(x, a1, a2) => arity_kind_type(sig, theta, a1) && arity_kind_type(sig, &theta.with_var(x, erase(a1)), a2),
        Type::Atom(c, args) => match sig.family_kind(c) {
            Some(k) => {
                let doms = erase_kind(k);
                doms.len() == args.len() && args.iter().zip(&doms).all(|(m, al)| arity_check_term(theta, m, al))
            }
            None => false,
        },
    }
}

fn binder_occurs(h: &Head, j: &Judgement, from: usize) -> bool {
    let occurs_in = |fv: BTreeSet<String>, noms: BTreeSet<Nominal>| match h {
        Head::Var(x) => fv.contains(x),
        Head::Nom(n) => noms.contains(n),
        Head::Const(_) => false,
    };
    if occurs_in(j.term.fv(), j.term.support()) || occurs_in(j.ty.fv(), j.ty.support()) {
        return true;
    }
    j.ctx.binds[from..].iter().any(|(_, a)| occurs_in(a.fv(), a.support()))
}

/// Inserts the binding `h:B` at position `pos` (0 = front).
pub fn weaken(sig: &Signature, j: &Judgement, pos: usize, h: Head, b: Type) -> Result<Judgement, MetaError> {
    if pos > j.ctx.binds.len() {
        return Err(MetaError::Position(pos));
    }
    if j.ctx.lookup(&h).is_some() {
        return Err(MetaError::AlreadyBound(h.to_string()));
    }
    if binder_occurs(&h, j, 0) {
        return Err(MetaError::Occurs(h.to_string()));
    }
    let prefix = LfCtx { binds: j.ctx.binds[..pos].to_vec() };
    check_type(sig, &prefix, &b).map_err(MetaError::IllFormed)?;
    let mut ctx = j.ctx.clone();
    ctx.binds.insert(pos, (h, b));
    Ok(Judgement { ctx, term: j.term.clone(), ty: j.ty.clone() })
}

/// Removes the binding at `pos`, which must not be used anywhere after it.
pub fn strengthen(j: &Judgement, pos: usize) -> Result<Judgement, MetaError> {
    let (h, _) = j.ctx.binds.get(pos).ok_or(MetaError::Position(pos))?;
    if binder_occurs(h, j, pos + 1) {
        return Err(MetaError::Occurs(h.to_string()));
    }
    let mut ctx = j.ctx.clone();
    ctx.binds.remove(pos);
    Ok(Judgement { ctx, term: j.term.clone(), ty: j.ty.clone() })
}

/// Swaps the bindings at `pos` and `pos + 1` when the second does not
/// depend on the first.
pub fn exchange(j: &Judgement, pos: usize) -> Result<Judgement, MetaError> {
    if pos + 1 >= j.ctx.binds.len() {
        return Err(MetaError::Position(pos));
    }
    let (h, _) = &j.ctx.binds[pos];
    let (_, a2) = &j.ctx.binds[pos + 1];
    let dep = match h {
        Head::Var(x) => a2.has_free(x),
        Head::Nom(n) => a2.support().contains(n),
        Head::Const(_) => false,
    };
    if dep {
        return Err(MetaError::Dependent(h.to_string()));
    }
    let mut ctx = j.ctx.clone();
    ctx.binds.swap(pos, pos + 1);
    Ok(Judgement { ctx, term: j.term.clone(), ty: j.ty.clone() })
}

/// Replaces the binding `h:A0` at `pos` by the term `n`, which must check
/// against `A0` in the prefix; later bindings, the term and the type are
/// instantiated hereditarily.
pub fn instantiate(sig: &Signature, j: &Judgement, pos: usize, n: &Term) -> Result<Judgement, MetaError> {
    let (h, a0) = j.ctx.binds.get(pos).ok_or(MetaError::Position(pos))?;
    let prefix = LfCtx { binds: j.ctx.binds[..pos].to_vec() };
    check_term(sig, &prefix, n, a0).map_err(MetaError::BadInstance)?;
    let mut theta = Subst::new();
    theta.insert_head(h.clone(), n.clone(), erase(a0));
    let rest = LfCtx { binds: j.ctx.binds[pos + 1..].to_vec() };
    let rest2 = hsub_ctx(&theta, &rest).ok_or(MetaError::Undefined)?;
    let mut ctx = prefix;
    ctx.binds.extend(rest2.binds);
    Ok(Judgement {
        ctx,
        term: hsub_term(&theta, &j.term).ok_or(MetaError::Undefined)?,
        ty: hsub_type(&theta, &j.ty).ok_or(MetaError::Undefined)?,
    })
}

/// Checks a judgement, returning its derivation.
pub fn check_judgement(sig: &Signature, j: &Judgement) -> Result<Derivation, TypeError> {
    check_term(sig, &j.ctx, &j.term, &j.ty)
}
