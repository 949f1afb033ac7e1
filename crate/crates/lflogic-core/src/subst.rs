//! Hereditary substitution, composition, restriction, eta-expansion and
//! nominal permutations.
//!
//! Substitution is partial: `None` means no rule of the substitution
//! judgement applies (an arity clash in a redex). Callers treat it as a
//! failure of their own operation.

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::*;

/// A finite set of triples `(x, M, alpha)`. Keys are term variables, or
/// nominal constants when the substitution instantiates a context binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    entries: Vec<(Head, Term, Arity)>,
}

/// Composition failure: the outer substitution is undefined on a range term.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("substitution is undefined on the term for `{0}`")]
    Undefined(String),
    #[error("variable `{0}` is assigned twice")]
    Duplicate(String),
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn single(x: &str, m: Term, a: Arity) -> Subst {
        Subst { entries: vec![(Head::var(x), m, a)] }
    }

    pub fn single_nom(n: &Nominal, m: Term) -> Subst {
        Subst { entries: vec![(Head::Nom(n.clone()), m, n.arity.clone())] }
    }

    /// Adds a triple, replacing any existing one for the same key.
    pub fn insert(&mut self, x: &str, m: Term, a: Arity) {
        let h = Head::var(x);
        self.entries.retain(|(k, _, _)| k != &h);
        self.entries.push((h, m, a));
    }

    pub fn insert_head(&mut self, h: Head, m: Term, a: Arity) {
        self.entries.retain(|(k, _, _)| k != &h);
        self.entries.push((h, m, a));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(Head, Term, Arity)] {
        &self.entries
    }

    pub fn get(&self, h: &Head) -> Option<(&Term, &Arity)> {
        self.entries.iter().find(|(k, _, _)| k == h).map(|(_, m, a)| (m, a))
    }

    pub fn get_var(&self, x: &str) -> Option<&Term> {
        self.get(&Head::var(x)).map(|(m, _)| m)
    }

    /// Names of the variables in the domain.
    pub fn dom(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter_map(|(k, _, _)| match k {
                Head::Var(x) => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    /// Free variables of the range.
    pub fn range_fv(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for (_, m, _) in &self.entries {
            m.free_vars(&mut s);
        }
        s
    }

    /// The nominal constants occurring in the range.
    pub fn support(&self) -> BTreeSet<Nominal> {
        let mut s = BTreeSet::new();
        for (_, m, _) in &self.entries {
            m.nominals(&mut s);
        }
        s
    }

    /// The largest arity-type size among the triples.
    pub fn size(&self) -> usize {
        self.entries.iter().map(|(_, _, a)| a.size()).max().unwrap_or(0)
    }

    /// The arity context assigned by the domain.
    pub fn ctx(&self) -> BTreeMap<String, Arity> {
        self.entries
            .iter()
            .filter_map(|(k, _, a)| match k {
                Head::Var(x) => Some((x.clone(), a.clone())),
                _ => None,
            })
            .collect()
    }

    fn without(&self, x: &str) -> Subst {
        Subst {
            entries: self
                .entries
                .iter()
                .filter(|(k, _, _)| !matches!(k, Head::Var(y) if y == x))
                .cloned()
                .collect(),
        }
    }

    fn mentions(&self, x: &str) -> bool {
        self.entries.iter().any(|(k, m, _)| matches!(k, Head::Var(y) if y == x) || m.has_free(x))
    }
}

/// Keeps exactly the triples whose variable is in `keep`.
pub fn restrict(theta: &Subst, keep: &BTreeSet<String>) -> Subst {
    Subst {
        entries: theta
            .entries
            .iter()
            .filter(|(k, _, _)| matches!(k, Head::Var(x) if keep.contains(x)))
            .cloned()
            .collect(),
    }
}

/// `theta2 ∘ theta1`: apply `theta2` to the range of `theta1` and add the
/// triples of `theta2` for variables outside the domain of `theta1`.
pub fn compose(theta2: &Subst, theta1: &Subst) -> Result<Subst, SubstError> {
    let mut out = Subst::new();
    for (k, m, a) in &theta1.entries {
        let m2 = hsub_term(theta2, m).ok_or_else(|| SubstError::Undefined(head_name(k)))?;
        out.entries.push((k.clone(), m2, a.clone()));
    }
    for (k, m, a) in &theta2.entries {
        if !theta1.entries.iter().any(|(k1, _, _)| k1 == k) {
            out.entries.push((k.clone(), m.clone(), a.clone()));
        }
    }
    Ok(out)
}

fn head_name(h: &Head) -> String {
    match h {
        Head::Var(x) | Head::Const(x) => x.clone(),
        Head::Nom(n) => n.to_string(),
    }
}

/// Picks a binder name that avoids capture, renaming the body if necessary.
/// Returns the substitution to use below the binder.
fn enter_binder<E: Syntax>(theta: &Subst, x: &str, body: &E, extra_avoid: &BTreeSet<String>) -> (Subst, String, Option<E>) {
    let inner = theta.without(x);
    if inner.is_empty() {
        return (inner, x.to_string(), None);
    }
    let rfv = inner.range_fv();
    if !rfv.contains(x) {
        return (inner, x.to_string(), None);
    }
    let bfv = body.fv();
    let dom = inner.dom();
    let over = binders_over(body, x);
    let x2 = fresh_name(x, |n| rfv.contains(n) || bfv.contains(n) || dom.contains(n) || extra_avoid.contains(n) || over.contains(n));
    let body2 = rename_var(body, x, &x2);
    (inner, x2, Some(body2))
}

/// Hereditary substitution on canonical terms.
pub fn hsub_term(theta: &Subst, m: &Term) -> Option<Term> {
    if theta.is_empty() {
        return Some(m.clone());
    }
    match m {
        Term::Lam(x, body) => {
            let (inner, x2, renamed) = enter_binder(theta, x, body.as_ref(), &BTreeSet::new());
            let b = renamed.as_ref().unwrap_or(body);
            Some(Term::Lam(x2, Box::new(hsub_term(&inner, b)?)))
        }
        Term::App(h, args) => {
            let args2 = args.iter().map(|a| hsub_term(theta, a)).collect::<Option<Vec<_>>>()?;
            match theta.get(h) {
                None => Some(Term::App(h.clone(), args2)),
                Some((n, alpha)) => reduce(n, alpha, args2).map(|(t, _)| t),
            }
        }
    }
}

/// Applies the term `n` of arity `alpha` to `args`, reducing hereditarily.
pub fn reduce(n: &Term, alpha: &Arity, args: Vec<Term>) -> Option<(Term, Arity)> {
    let mut cur = n.clone();
    let mut ty = alpha.clone();
    for arg in args {
        let (a1, a2) = match ty {
            Arity::Arrow(a1, a2) => (*a1, *a2),
            Arity::O => return None,
        };
        let (x, body) = match cur {
            Term::Lam(x, body) => (x, *body),
            Term::App(..) => return None,
        };
        cur = hsub_term(&Subst::single(&x, arg, a1), &body)?;
        ty = a2;
    }
    Some((cur, ty))
}

/// Hereditary substitution on types.
pub fn hsub_type(theta: &Subst, a: &Type) -> Option<Type> {
    if theta.is_empty() {
        return Some(a.clone());
    }
    match a {
        Type::Atom(c, args) => Some(Type::Atom(c.clone(), args.iter().map(|m| hsub_term(theta, m)).collect::<Option<_>>()?)),
        Type::Pi(x, a1, a2) => {
            let a1s = hsub_type(theta, a1)?;
            let (inner, x2, renamed) = enter_binder(theta, x, a2.as_ref(), &BTreeSet::new());
            let b = renamed.as_ref().unwrap_or(a2);
            Some(Type::Pi(x2, Box::new(a1s), Box::new(hsub_type(&inner, b)?)))
        }
    }
}

/// Hereditary substitution on kinds.
pub fn hsub_kind(theta: &Subst, k: &Kind) -> Option<Kind> {
    if theta.is_empty() {
        return Some(k.clone());
    }
    match k {
        Kind::Type => Some(Kind::Type),
        Kind::Pi(x, a, k2) => {
            let a2 = hsub_type(theta, a)?;
            let (inner, x2, renamed) = enter_binder(theta, x, k2.as_ref(), &BTreeSet::new());
            let b = renamed.as_ref().unwrap_or(k2);
            Some(Kind::Pi(x2, Box::new(a2), Box::new(hsub_kind(&inner, b)?)))
        }
    }
}

/// Substitution into an LF context. Undefined when a bound variable of the
/// context is in the domain of `theta` or free in its range.
pub fn hsub_ctx(theta: &Subst, ctx: &LfCtx) -> Option<LfCtx> {
    let mut out = LfCtx::new();
    let mut cur = theta.clone();
    for (h, a) in &ctx.binds {
        out.push(h.clone(), hsub_type(&cur, a)?);
        match h {
            Head::Var(x) => {
                if theta.mentions(x) {
                    return None;
                }
                cur = cur.without(x);
            }
            Head::Nom(n) => {
                if theta.get(&Head::Nom(n.clone())).is_some() {
                    return None;
                }
            }
            Head::Const(_) => return None,
        }
    }
    Some(out)
}

/// The eta-long form of `head` at arity `alpha`.
pub fn eta_expand(head: &Head, alpha: &Arity) -> Term {
    let avoid: BTreeSet<String> = match head {
        Head::Var(x) => [x.clone()].into_iter().collect(),
        _ => BTreeSet::new(),
    };
    eta_expand_avoiding(head, alpha, &avoid)
}

fn eta_expand_avoiding(head: &Head, alpha: &Arity, avoid: &BTreeSet<String>) -> Term {
    let (args, _) = alpha.parts();
    let mut used = avoid.clone();
    let mut names = Vec::new();
    for _ in &args {
        let x = fresh_name("x", |n| used.contains(n));
        used.insert(x.clone());
        names.push(x);
    }
    let body = Term::App(
        head.clone(),
        names
            .iter()
            .zip(&args)
            .map(|(x, a)| eta_expand_avoiding(&Head::Var(x.clone()), a, &used))
            .collect(),
    );
    names.iter().rev().fold(body, |b, x| Term::Lam(x.clone(), Box::new(b)))
}

/// A finite bijection on nominal constants that preserves arity types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Permutation {
    map: BTreeMap<Nominal, Nominal>,
}

impl Permutation {
    pub fn identity() -> Permutation {
        Permutation::default()
    }

    /// The transposition exchanging `a` and `b`; identity if arities differ.
    pub fn swap(a: &Nominal, b: &Nominal) -> Permutation {
        let mut p = Permutation::identity();
        if a != b && a.arity == b.arity {
            p.map.insert(a.clone(), b.clone());
            p.map.insert(b.clone(), a.clone());
        }
        p
    }

    /// Builds a permutation from an explicit finite bijection; `None` if the
    /// pairs are not injective, not arity-preserving, or do not close up.
    pub fn from_pairs(pairs: &[(Nominal, Nominal)]) -> Option<Permutation> {
        let mut map = BTreeMap::new();
        let mut image = BTreeSet::new();
        for (a, b) in pairs {
            if a.arity != b.arity {
                return None;
            }
            if let Some(prev) = map.insert(a.clone(), b.clone()) {
                if &prev != b {
                    return None;
                }
                continue;
            }
            if !image.insert(b.clone()) {
                return None;
            }
        }
        map.retain(|a, b| a != b);
        let dom: BTreeSet<_> = map.keys().cloned().collect();
        let img: BTreeSet<_> = map.values().cloned().collect();
        (dom == img).then_some(Permutation { map })
    }

    /// Extends a partial injection to a permutation by pairing up the
    /// unmatched elements: each chain `a -> ... -> b` with `b` outside the
    /// domain is closed by mapping `b` back to the chain's start.
    pub fn complete(pairs: &[(Nominal, Nominal)]) -> Option<Permutation> {
        let mut map: BTreeMap<Nominal, Nominal> = BTreeMap::new();
        let mut image = BTreeSet::new();
        for (a, b) in pairs {
            if a.arity != b.arity {
                return None;
            }
            match map.get(a) {
                Some(prev) if prev != b => return None,
                Some(_) => continue,
                None => {}
            }
            if !image.insert(b.clone()) {
                return None;
            }
            map.insert(a.clone(), b.clone());
        }
        let starts: Vec<Nominal> = map.keys().filter(|a| !image.contains(*a)).cloned().collect();
        for s in starts {
            let mut end = s.clone();
            while let Some(next) = map.get(&end) {
                end = next.clone();
            }
            map.insert(end, s);
        }
        map.retain(|a, b| a != b);
        Some(Permutation { map })
    }

    pub fn apply(&self, n: &Nominal) -> Nominal {
        self.map.get(n).cloned().unwrap_or_else(|| n.clone())
    }

    pub fn inverse(&self) -> Permutation {
        Permutation { map: self.map.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn after(&self, other: &Permutation) -> Permutation {
        let mut keys: BTreeSet<Nominal> = self.map.keys().cloned().collect();
        keys.extend(other.map.keys().cloned());
        let mut map = BTreeMap::new();
        for k in keys {
            let v = self.apply(&other.apply(&k));
            if v != k {
                map.insert(k, v);
            }
        }
        Permutation { map }
    }

    pub fn support(&self) -> BTreeSet<Nominal> {
        self.map.keys().cloned().collect()
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Nominal, &Nominal)> {
        self.map.iter()
    }
}

/// Application of a nominal permutation.
pub trait Permute: Sized {
    fn permute(&self, pi: &Permutation) -> Self;
}

fn permute_by<E: Syntax>(e: &E, pi: &Permutation) -> E {
    if pi.is_identity() {
        return e.map_heads(&|_, _| None, &mut BTreeSet::new());
    }
    let f = |h: &Head, _: &BTreeSet<String>| match h {
        Head::Nom(n) => Some(Head::Nom(pi.apply(n))),
        _ => None,
    };
    e.map_heads(&f, &mut BTreeSet::new())
}

impl Permute for Term {
    fn permute(&self, pi: &Permutation) -> Term {
        permute_by(self, pi)
    }
}
impl Permute for Type {
    fn permute(&self, pi: &Permutation) -> Type {
        permute_by(self, pi)
    }
}
impl Permute for Kind {
    fn permute(&self, pi: &Permutation) -> Kind {
        permute_by(self, pi)
    }
}
impl Permute for Nominal {
    fn permute(&self, pi: &Permutation) -> Nominal {
        pi.apply(self)
    }
}
impl Permute for Head {
    fn permute(&self, pi: &Permutation) -> Head {
        match self {
            Head::Nom(n) => Head::Nom(pi.apply(n)),
            h => h.clone(),
        }
    }
}
impl Permute for LfCtx {
    fn permute(&self, pi: &Permutation) -> LfCtx {
        LfCtx { binds: self.binds.iter().map(|(h, a)| (h.permute(pi), a.permute(pi))).collect() }
    }
}
impl Permute for Subst {
    fn permute(&self, pi: &Permutation) -> Subst {
        Subst {
            entries: self.entries.iter().map(|(k, m, a)| (k.permute(pi), m.permute(pi), a.clone())).collect(),
        }
    }
}

/// Replaces every occurrence of nominal `n` by the term `m` (hereditarily),
/// as used when instantiating a context binding.
pub fn subst_nominal_term(n: &Nominal, m: &Term, e: &Term) -> Option<Term> {
    hsub_term(&Subst::single_nom(n, m.clone()), e)
}

pub fn subst_nominal_type(n: &Nominal, m: &Term, e: &Type) -> Option<Type> {
    hsub_type(&Subst::single_nom(n, m.clone()), e)
}

/// Instantiates the bound variable of a binder body with a nominal constant.
pub fn instantiate_term(x: &str, n: &Nominal, body: &Term) -> Term {
    hsub_term(&Subst::single(x, eta_expand(&Head::Nom(n.clone()), &n.arity), n.arity.clone()), body)
        .expect("instantiating a binder with an eta-expanded nominal is always defined")
}

pub fn instantiate_type(x: &str, n: &Nominal, body: &Type) -> Type {
    hsub_type(&Subst::single(x, eta_expand(&Head::Nom(n.clone()), &n.arity), n.arity.clone()), body)
        .expect("instantiating a binder with an eta-expanded nominal is always defined")
}

pub fn instantiate_kind(x: &str, n: &Nominal, body: &Kind) -> Kind {
    hsub_kind(&Subst::single(x, eta_expand(&Head::Nom(n.clone()), &n.arity), n.arity.clone()), body)
        .expect("instantiating a binder with an eta-expanded nominal is always defined")
}
