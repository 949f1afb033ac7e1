//! Formulas of the reasoning logic: atomic LF typing assertions over context
//! expressions, propositional connectives, and quantifiers over terms and
//! contexts, together with well-formedness, substitution, permutation,
//! equivalence and the strength order used by the annotated axiom rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::print::term_arg;
use crate::subst::*;
use crate::syntax::*;
use crate::typing::{arity_check_term, arity_kind_type};

/// Height annotation on an atomic formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Ann {
    #[default]
    None,
    /// `@i`: derivation height at most the bound for `i`.
    At(u32),
    /// `*i`: derivation height strictly below the bound for `i`.
    Star(u32),
}

impl Ann {
    /// `self` is stronger than or identical to `other`.
    pub fn at_least(self, other: Ann) -> bool {
        self == other || other == Ann::None || matches!((self, other), (Ann::Star(i), Ann::At(j)) if i == j)
    }

    pub fn index(self) -> Option<u32> {
        match self {
            Ann::None => None,
            Ann::At(i) | Ann::Star(i) => Some(i),
        }
    }
}

impl fmt::Display for Ann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ann::None => Ok(()),
            Ann::At(i) => write!(f, "@{}", i),
            Ann::Star(i) => write!(f, "*{}", i),
        }
    }
}

/// A context expression: an optional context variable followed by explicit
/// bindings of nominal constants.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CtxExpr {
    pub var: Option<String>,
    pub binds: Vec<(Nominal, Type)>,
}

impl CtxExpr {
    pub fn empty() -> CtxExpr {
        CtxExpr::default()
    }
    pub fn var(g: &str) -> CtxExpr {
        CtxExpr { var: Some(g.to_string()), binds: vec![] }
    }
    pub fn with(mut self, n: Nominal, a: Type) -> CtxExpr {
        self.binds.push((n, a));
        self
    }
    pub fn bound_noms(&self) -> BTreeSet<Nominal> {
        self.binds.iter().map(|(n, _)| n.clone()).collect()
    }
    pub fn lookup(&self, n: &Nominal) -> Option<&Type> {
        self.binds.iter().rev().find(|(m, _)| m == n).map(|(_, a)| a)
    }
    /// The LF context denoted by a closed context expression.
    pub fn to_lf(&self) -> LfCtx {
        LfCtx { binds: self.binds.iter().map(|(n, a)| (Head::Nom(n.clone()), a.clone())).collect() }
    }
    pub fn nominals(&self, out: &mut BTreeSet<Nominal>) {
        for (n, a) in &self.binds {
            out.insert(n.clone());
            a.nominals(out);
        }
    }
    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        for (_, a) in &self.binds {
            a.free_vars(out);
        }
    }
    pub fn hsub(&self, theta: &Subst) -> Option<CtxExpr> {
        Some(CtxExpr {
            var: self.var.clone(),
            binds: self.binds.iter().map(|(n, a)| Some((n.clone(), hsub_type(theta, a)?))).collect::<Option<_>>()?,
        })
    }
}

impl Permute for CtxExpr {
    fn permute(&self, pi: &Permutation) -> CtxExpr {
        CtxExpr { var: self.var.clone(), binds: self.binds.iter().map(|(n, a)| (pi.apply(n), a.permute(pi))).collect() }
    }
}

impl fmt::Display for CtxExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if let Some(g) = &self.var {
            write!(f, "{}", g)?;
            first = false;
        }
        for (n, a) in &self.binds {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", n, a)?;
            first = false;
        }
        if first {
            write!(f, "·")?;
        }
        Ok(())
    }
}

/// Formulas.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { ctx: CtxExpr, term: Term, ty: Type, ann: Ann },
    Top,
    Bot,
    Imp(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `Π Γ:C. F`, quantification over contexts of schema `C`.
    Ctx(String, String, Box<Formula>),
    All(String, Arity, Box<Formula>),
    Exists(String, Arity, Box<Formula>),
}

impl Formula {
    pub fn atom(ctx: CtxExpr, term: Term, ty: Type) -> Formula {
        Formula::Atom { ctx, term, ty, ann: Ann::None }
    }
    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn all(x: &str, a: Arity, f: Formula) -> Formula {
        Formula::All(x.to_string(), a, Box::new(f))
    }
    pub fn exists(x: &str, a: Arity, f: Formula) -> Formula {
        Formula::Exists(x.to_string(), a, Box::new(f))
    }
    pub fn ctx(g: &str, schema: &str, f: Formula) -> Formula {
        Formula::Ctx(g.to_string(), schema.to_string(), Box::new(f))
    }

    pub fn with_ann(self, a: Ann) -> Formula {
        match self {
            Formula::Atom { ctx, term, ty, .. } => Formula::Atom { ctx, term, ty, ann: a },
            f => f,
        }
    }

    /// Removes every annotation.
    pub fn erase_ann(&self) -> Formula {
        self.map_ann(&|_| Ann::None)
    }

    pub fn map_ann(&self, f: &dyn Fn(Ann) -> Ann) -> Formula {
        match self {
            Formula::Atom { ctx, term, ty, ann } => Formula::Atom { ctx: ctx.clone(), term: term.clone(), ty: ty.clone(), ann: f(*ann) },
            Formula::Top | Formula::Bot => self.clone(),
            Formula::Imp(a, b) => Formula::imp(a.map_ann(f), b.map_ann(f)),
            Formula::And(a, b) => Formula::and(a.map_ann(f), b.map_ann(f)),
            Formula::Or(a, b) => Formula::or(a.map_ann(f), b.map_ann(f)),
            Formula::Ctx(g, c, b) => Formula::Ctx(g.clone(), c.clone(), Box::new(b.map_ann(f))),
            Formula::All(x, a, b) => Formula::All(x.clone(), a.clone(), Box::new(b.map_ann(f))),
            Formula::Exists(x, a, b) => Formula::Exists(x.clone(), a.clone(), Box::new(b.map_ann(f))),
        }
    }

    /// Annotation indices used anywhere in the formula.
    pub fn ann_indices(&self, out: &mut BTreeSet<u32>) {
        match self {
            Formula::Atom { ann, .. } => out.extend(ann.index()),
            Formula::Top | Formula::Bot => {}
            Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
                a.ann_indices(out);
                b.ann_indices(out);
            }
            Formula::Ctx(_, _, b) | Formula::All(_, _, b) | Formula::Exists(_, _, b) => b.ann_indices(out),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom { ctx, term, ty, .. } => {
                ctx.free_vars(out);
                term.free_vars(out);
                ty.free_vars(out);
            }
            Formula::Top | Formula::Bot => {}
            Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Formula::Ctx(_, _, b) => b.free_vars(out),
            Formula::All(x, _, b) | Formula::Exists(x, _, b) => {
                let mut inner = BTreeSet::new();
                b.free_vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
        }
    }

    pub fn fv(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    pub fn free_ctx_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom { ctx, .. } => out.extend(ctx.var.clone()),
            Formula::Top | Formula::Bot => {}
            Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
                a.free_ctx_vars(out);
                b.free_ctx_vars(out);
            }
            Formula::Ctx(g, _, b) => {
                let mut inner = BTreeSet::new();
                b.free_ctx_vars(&mut inner);
                inner.remove(g);
                out.extend(inner);
            }
            Formula::All(_, _, b) | Formula::Exists(_, _, b) => b.free_ctx_vars(out),
        }
    }

    pub fn ctx_fv(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.free_ctx_vars(&mut s);
        s
    }

    pub fn nominals(&self, out: &mut BTreeSet<Nominal>) {
        match self {
            Formula::Atom { ctx, term, ty, .. } => {
                ctx.nominals(out);
                term.nominals(out);
                ty.nominals(out);
            }
            Formula::Top | Formula::Bot => {}
            Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
                a.nominals(out);
                b.nominals(out);
            }
            Formula::Ctx(_, _, b) | Formula::All(_, _, b) | Formula::Exists(_, _, b) => b.nominals(out),
        }
    }

    pub fn support(&self) -> BTreeSet<Nominal> {
        let mut s = BTreeSet::new();
        self.nominals(&mut s);
        s
    }

    /// True if the formula has no quantifiers of either kind.
    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom { .. } | Formula::Top | Formula::Bot => true,
            Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            _ => false,
        }
    }

    /// All context expressions occurring in atomic subformulas.
    pub fn ctx_exprs<'a>(&'a self, out: &mut Vec<&'a CtxExpr>) {
        match self {
            Formula::Atom { ctx, .. } => out.push(ctx),
            Formula::Top | Formula::Bot => {}
            Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
                a.ctx_exprs(out);
                b.ctx_exprs(out);
            }
            Formula::Ctx(_, _, b) | Formula::All(_, _, b) | Formula::Exists(_, _, b) => b.ctx_exprs(out),
        }
    }
}

/// Hereditary substitution into a formula, renaming bound term variables to
/// avoid capture.
pub fn hsub_formula(theta: &Subst, f: &Formula) -> Option<Formula> {
    if theta.is_empty() {
        return Some(f.clone());
    }
    Some(match f {
        Formula::Atom { ctx, term, ty, ann } => Formula::Atom {
            ctx: ctx.hsub(theta)?,
            term: hsub_term(theta, term)?,
            ty: hsub_type(theta, ty)?,
            ann: *ann,
        },
        Formula::Top | Formula::Bot => f.clone(),
        Formula::Imp(a, b) => Formula::imp(hsub_formula(theta, a)?, hsub_formula(theta, b)?),
        Formula::And(a, b) => Formula::and(hsub_formula(theta, a)?, hsub_formula(theta, b)?),
        Formula::Or(a, b) => Formula::or(hsub_formula(theta, a)?, hsub_formula(theta, b)?),
        Formula::Ctx(g, c, b) => Formula::Ctx(g.clone(), c.clone(), Box::new(hsub_formula(theta, b)?)),
        Formula::All(x, a, b) | Formula::Exists(x, a, b) => {
            let (x2, inner, body) = enter_term_binder(theta, x, b);
            let nb = Box::new(hsub_formula(&inner, &body)?);
            match f {
                Formula::All(..) => Formula::All(x2, a.clone(), nb),
                _ => Formula::Exists(x2, a.clone(), nb),
            }
        }
    })
}

fn enter_term_binder(theta: &Subst, x: &str, body: &Formula) -> (String, Subst, Formula) {
    let mut inner = Subst::new();
    for (k, m, a) in theta.entries() {
        if !matches!(k, Head::Var(y) if y == x) {
            inner.insert_head(k.clone(), m.clone(), a.clone());
        }
    }
    let rfv = inner.range_fv();
    if !rfv.contains(x) {
        return (x.to_string(), inner, body.clone());
    }
    let bfv = body.fv();
    let dom = inner.dom();
    let over = formula_binders_over(body, x);
    let x2 = fresh_name(x, |n| rfv.contains(n) || bfv.contains(n) || dom.contains(n) || over.contains(n));
    (x2.clone(), inner, rename_formula_var(body, x, &x2))
}

/// The term binders (quantifiers and abstractions) in scope at the free
/// occurrences of `x` in a formula.
pub fn formula_binders_over(f: &Formula, x: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match f {
        Formula::Atom { ctx, term, ty, .. } => {
            for (_, a) in &ctx.binds {
                out.extend(binders_over(a, x));
            }
            out.extend(binders_over(term, x));
            out.extend(binders_over(ty, x));
        }
        Formula::Top | Formula::Bot => {}
        Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
            out.extend(formula_binders_over(a, x));
            out.extend(formula_binders_over(b, x));
        }
        Formula::Ctx(_, _, b) => out.extend(formula_binders_over(b, x)),
        Formula::All(y, _, b) | Formula::Exists(y, _, b) => {
            if y != x && b.fv().contains(x) {
                out.insert(y.clone());
                out.extend(formula_binders_over(b, x));
            }
        }
    }
    out
}

/// Renames the free term variable `from` to `to` throughout a formula.
pub fn rename_formula_var(f: &Formula, from: &str, to: &str) -> Formula {
    match f {
        Formula::Atom { ctx, term, ty, ann } => Formula::Atom {
            ctx: CtxExpr { var: ctx.var.clone(), binds: ctx.binds.iter().map(|(n, a)| (n.clone(), rename_var(a, from, to))).collect() },
            term: rename_var(term, from, to),
            ty: rename_var(ty, from, to),
            ann: *ann,
        },
        Formula::Top | Formula::Bot => f.clone(),
        Formula::Imp(a, b) => Formula::imp(rename_formula_var(a, from, to), rename_formula_var(b, from, to)),
        Formula::And(a, b) => Formula::and(rename_formula_var(a, from, to), rename_formula_var(b, from, to)),
        Formula::Or(a, b) => Formula::or(rename_formula_var(a, from, to), rename_formula_var(b, from, to)),
        Formula::Ctx(g, c, b) => Formula::Ctx(g.clone(), c.clone(), Box::new(rename_formula_var(b, from, to))),
        Formula::All(x, a, b) | Formula::Exists(x, a, b) => {
            if x == from {
                return f.clone();
            }
            let nb = Box::new(rename_formula_var(b, from, to));
            match f {
                Formula::All(..) => Formula::All(x.clone(), a.clone(), nb),
                _ => Formula::Exists(x.clone(), a.clone(), nb),
            }
        }
    }
}

/// A context-variable substitution `{G1/Γ1, ..., Gn/Γn}`.
pub type CtxSubst = BTreeMap<String, CtxExpr>;

/// Replaces context variables by context expressions. Bound context
/// variables are renamed away from those used in the range.
pub fn ctxsubst_formula(sigma: &CtxSubst, f: &Formula) -> Formula {
    if sigma.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Atom { ctx, term, ty, ann } => {
            let ctx2 = match ctx.var.as_ref().and_then(|g| sigma.get(g)) {
                Some(g2) => {
                    let mut binds = g2.binds.clone();
                    binds.extend(ctx.binds.iter().cloned());
                    CtxExpr { var: g2.var.clone(), binds }
                }
                None => ctx.clone(),
            };
            Formula::Atom { ctx: ctx2, term: term.clone(), ty: ty.clone(), ann: *ann }
        }
        Formula::Top | Formula::Bot => f.clone(),
        Formula::Imp(a, b) => Formula::imp(ctxsubst_formula(sigma, a), ctxsubst_formula(sigma, b)),
        Formula::And(a, b) => Formula::and(ctxsubst_formula(sigma, a), ctxsubst_formula(sigma, b)),
        Formula::Or(a, b) => Formula::or(ctxsubst_formula(sigma, a), ctxsubst_formula(sigma, b)),
        Formula::All(x, a, b) => Formula::All(x.clone(), a.clone(), Box::new(ctxsubst_formula(sigma, b))),
        Formula::Exists(x, a, b) => Formula::Exists(x.clone(), a.clone(), Box::new(ctxsubst_formula(sigma, b))),
        Formula::Ctx(g, c, b) => {
            let mut inner = sigma.clone();
            inner.remove(g);
            let range_vars: BTreeSet<String> = inner.values().filter_map(|e| e.var.clone()).collect();
            if range_vars.contains(g) {
                let mut taken = range_vars.clone();
                taken.extend(b.ctx_fv());
                taken.extend(inner.keys().cloned());
                let g2 = fresh_name(g, |n| taken.contains(n));
                let mut ren = CtxSubst::new();
                ren.insert(g.clone(), CtxExpr::var(&g2));
                let b2 = ctxsubst_formula(&ren, b);
                Formula::Ctx(g2, c.clone(), Box::new(ctxsubst_formula(&inner, &b2)))
            } else {
                Formula::Ctx(g.clone(), c.clone(), Box::new(ctxsubst_formula(&inner, b)))
            }
        }
    }
}

impl Permute for Formula {
    fn permute(&self, pi: &Permutation) -> Formula {
        if pi.is_identity() {
            return self.clone();
        }
        match self {
            Formula::Atom { ctx, term, ty, ann } => Formula::Atom { ctx: ctx.permute(pi), term: term.permute(pi), ty: ty.permute(pi), ann: *ann },
            Formula::Top | Formula::Bot => self.clone(),
            Formula::Imp(a, b) => Formula::imp(a.permute(pi), b.permute(pi)),
            Formula::And(a, b) => Formula::and(a.permute(pi), b.permute(pi)),
            Formula::Or(a, b) => Formula::or(a.permute(pi), b.permute(pi)),
            Formula::Ctx(g, c, b) => Formula::Ctx(g.clone(), c.clone(), Box::new(b.permute(pi))),
            Formula::All(x, a, b) => Formula::All(x.clone(), a.clone(), Box::new(b.permute(pi))),
            Formula::Exists(x, a, b) => Formula::Exists(x.clone(), a.clone(), Box::new(b.permute(pi))),
        }
    }
}

/// `π.F`.
pub fn permute_formula(pi: &Permutation, f: &Formula) -> Formula {
    f.permute(pi)
}

/// Well-formedness failures for formulas.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("context variable `{0}` is not bound")]
    UnboundCtxVar(String),
    #[error("nominal constant `{0}` is not in scope")]
    NominalOutOfScope(String),
    #[error("nominal constant `{nom}` cannot be assigned a type of arity `{arity}`")]
    BindingArity { nom: String, arity: String },
    #[error("type `{0}` is not well-kinded")]
    Kinding(String),
    #[error("term `{term}` does not have arity `{arity}`")]
    TermArity { term: String, arity: String },
    #[error("unknown or ill-formed context schema `{0}`")]
    Schema(String),
}

/// `Θ; Ξ ⊩ F fmla` (annotations are ignored). `schema_ok` decides whether a
/// schema name denotes a well-formed schema.
pub fn wf_formula(sig: &Signature, schema_ok: &dyn Fn(&str) -> bool, theta: &ArityCtx, xi: &BTreeSet<String>, f: &Formula) -> Result<(), LogicError> {
    match f {
        Formula::Atom { ctx, term, ty, .. } => {
            wf_ctx_expr(sig, theta, xi, ctx)?;
            if !arity_kind_type(sig, theta, ty) {
                return Err(LogicError::Kinding(ty.to_string()));
            }
            let al = erase(ty);
            if !arity_check_term(theta, term, &al) {
                return Err(LogicError::TermArity { term: term.to_string(), arity: al.to_string() });
            }
            Ok(())
        }
        Formula::Top | Formula::Bot => Ok(()),
        Formula::Imp(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
            wf_formula(sig, schema_ok, theta, xi, a)?;
            wf_formula(sig, schema_ok, theta, xi, b)
        }
        Formula::Ctx(g, c, b) => {
            if !schema_ok(c) {
                return Err(LogicError::Schema(c.clone()));
            }
            let mut xi2 = xi.clone();
            xi2.insert(g.clone());
            wf_formula(sig, schema_ok, theta, &xi2, b)
        }
        Formula::All(x, a, b) | Formula::Exists(x, a, b) => wf_formula(sig, schema_ok, &theta.with_var(x, a.clone()), xi, b),
    }
}

/// Well-formedness of a context expression.
pub fn wf_ctx_expr(sig: &Signature, theta: &ArityCtx, xi: &BTreeSet<String>, g: &CtxExpr) -> Result<(), LogicError> {
    if let Some(v) = &g.var {
        if !xi.contains(v) {
            return Err(LogicError::UnboundCtxVar(v.clone()));
        }
    }
    for (n, a) in &g.binds {
        if theta.lookup(&Head::Nom(n.clone())).is_none() {
            return Err(LogicError::NominalOutOfScope(n.to_string()));
        }
        if erase(a) != n.arity {
            return Err(LogicError::BindingArity { nom: n.to_string(), arity: erase(a).to_string() });
        }
        if !arity_kind_type(sig, theta, a) {
            return Err(LogicError::Kinding(a.to_string()));
        }
    }
    Ok(())
}

/// Looks up the name set `ℕ_Γ` of a free context variable.
pub type CtxNames<'a> = &'a dyn Fn(&str) -> Option<BTreeSet<Nominal>>;

struct Cmp<'a> {
    names: CtxNames<'a>,
    strength: bool,
}

impl Cmp<'_> {
    fn ctx_ok(&self, pi: &Permutation, g2: &CtxExpr, g1: &CtxExpr, cenv: &[(String, String)], tenv: &mut Vec<(String, String)>) -> bool {
        match (&g2.var, &g1.var) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                let bound = cenv.iter().rev().find(|(x, y)| x == a || y == b);
                match bound {
                    Some((x, y)) => {
                        if !(x == a && y == b) || !pi.is_identity() {
                            return false;
                        }
                    }
                    None => {
                        if a != b {
                            return false;
                        }
                        match (self.names)(a) {
                            Some(ns) => {
                                if !pi.support().is_subset(&ns) {
                                    return false;
                                }
                            }
                            None => return false,
                        }
                    }
                }
            }
            _ => return false,
        }
        g2.binds.len() == g1.binds.len()
            && g2
                .binds
                .iter()
                .zip(&g1.binds)
                .all(|((n2, a2), (n1, a1))| &pi.apply(n2) == n1 && a2.permute(pi).alpha_eq_in(a1, tenv))
    }

    fn rel(&self, pi: &Permutation, f2: &Formula, f1: &Formula, cenv: &mut Vec<(String, String)>, tenv: &mut Vec<(String, String)>) -> bool {
        match (f2, f1) {
            (Formula::Atom { ctx: g2, term: m2, ty: a2, ann: ann2 }, Formula::Atom { ctx: g1, term: m1, ty: a1, ann: ann1 }) => {
                let ann_ok = if self.strength { ann2.at_least(*ann1) } else { ann2 == ann1 };
                ann_ok
                    && self.ctx_ok(pi, g2, g1, cenv, tenv)
                    && m2.permute(pi).alpha_eq_in(m1, tenv)
                    && a2.permute(pi).alpha_eq_in(a1, tenv)
            }
            (Formula::Top, Formula::Top) | (Formula::Bot, Formula::Bot) => true,
            (Formula::Imp(a2, b2), Formula::Imp(a1, b1)) => {
                let ant = if self.strength {
                    let mut ce: Vec<_> = cenv.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
                    let mut te: Vec<_> = tenv.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
                    self.rel(&pi.inverse(), a1, a2, &mut ce, &mut te)
                } else {
                    self.rel(pi, a2, a1, cenv, tenv)
                };
                ant && self.rel(pi, b2, b1, cenv, tenv)
            }
            (Formula::And(a2, b2), Formula::And(a1, b1)) | (Formula::Or(a2, b2), Formula::Or(a1, b1)) => {
                self.rel(pi, a2, a1, cenv, tenv) && self.rel(pi, b2, b1, cenv, tenv)
            }
            (Formula::Ctx(g2, c2, b2), Formula::Ctx(g1, c1, b1)) => {
                if c2 != c1 {
                    return false;
                }
                cenv.push((g2.clone(), g1.clone()));
                let r = self.rel(pi, b2, b1, cenv, tenv);
                cenv.pop();
                r
            }
            (Formula::All(x2, a2, b2), Formula::All(x1, a1, b1)) | (Formula::Exists(x2, a2, b2), Formula::Exists(x1, a1, b1)) => {
                if a2 != a1 {
                    return false;
                }
                tenv.push((x2.clone(), x1.clone()));
                let r = self.rel(pi, b2, b1, cenv, tenv);
                tenv.pop();
                r
            }
            _ => false,
        }
    }
}

/// `F2 ≈[Ξ,π] F1`: the permuted `F2` is `F1` up to bound-variable renaming,
/// and every free context variable's name set contains the support of `π`.
pub fn formula_equiv(names: CtxNames<'_>, pi: &Permutation, f2: &Formula, f1: &Formula) -> bool {
    Cmp { names, strength: false }.rel(pi, f2, f1, &mut Vec::new(), &mut Vec::new())
}

/// `F2` is at least as strong as `F1` with respect to `Ξ` and `π`.
pub fn formula_strength(names: CtxNames<'_>, pi: &Permutation, f2: &Formula, f1: &Formula) -> bool {
    Cmp { names, strength: true }.rel(pi, f2, f1, &mut Vec::new(), &mut Vec::new())
}

/// Alpha-equivalence of formulas including annotations.
pub fn formula_alpha_eq(f2: &Formula, f1: &Formula) -> bool {
    formula_equiv(&|_| Some(BTreeSet::new()), &Permutation::identity(), f2, f1)
}

/// Bounds for annotation indices: finite overrides over a default.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeightAssignment {
    pub default: usize,
    pub overrides: BTreeMap<u32, usize>,
}

impl HeightAssignment {
    pub fn new(default: usize) -> HeightAssignment {
        HeightAssignment { default, overrides: BTreeMap::new() }
    }
    pub fn get(&self, i: u32) -> usize {
        self.overrides.get(&i).copied().unwrap_or(self.default)
    }
    /// `Υ[i ↦ m]`.
    pub fn update(&self, i: u32, m: usize) -> HeightAssignment {
        let mut h = self.clone();
        h.overrides.insert(i, m);
        h
    }
    /// Whether a derivation of height `h` satisfies annotation `ann`.
    pub fn admits(&self, ann: Ann, h: usize) -> bool {
        match ann {
            Ann::None => true,
            Ann::At(i) => h <= self.get(i),
            Ann::Star(i) => h < self.get(i),
        }
    }
}

fn fmt_formula(f: &Formula, prec: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Precedences: 0 quantifiers, 1 implication, 2 disjunction, 3 conjunction, 4 atoms.
    let paren = |p: u8| p < prec;
    match f {
        Formula::Atom { ctx, term, ty, ann } => write!(out, "{{{} ⊢ {} : {}}}{}", ctx, term, ty, ann),
        Formula::Top => write!(out, "true"),
        Formula::Bot => write!(out, "false"),
        Formula::Imp(a, b) => {
            if paren(1) {
                write!(out, "(")?;
            }
            fmt_formula(a, 2, out)?;
            write!(out, " => ")?;
            fmt_formula(b, 1, out)?;
            if paren(1) {
                write!(out, ")")?;
            }
            Ok(())
        }
        Formula::Or(a, b) | Formula::And(a, b) => {
            let (p, op) = if matches!(f, Formula::Or(..)) { (2, "\\/") } else { (3, "/\\") };
            if paren(p) {
                write!(out, "(")?;
            }
            fmt_formula(a, p, out)?;
            write!(out, " {} ", op)?;
            fmt_formula(b, p + 1, out)?;
            if paren(p) {
                write!(out, ")")?;
            }
            Ok(())
        }
        Formula::Ctx(..) | Formula::All(..) | Formula::Exists(..) => {
            if paren(0) {
                write!(out, "(")?;
            }
            match f {
                Formula::Ctx(g, c, b) => {
                    write!(out, "ctx {}:{}. ", g, c)?;
                    fmt_formula(b, 0, out)?;
                }
                Formula::All(x, a, b) | Formula::Exists(x, a, b) => {
                    let kw = if matches!(f, Formula::All(..)) { "forall" } else { "exists" };
                    write!(out, "{} {}:{}. ", kw, x, a)?;
                    fmt_formula(b, 0, out)?;
                }
                _ => unreachable!(),
            }
            if paren(0) {
                write!(out, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, 0, f)
    }
}

/// Renders a term in argument position (re-exported for rule displays).
pub fn render_arg(m: &Term) -> String {
    term_arg(m)
}
