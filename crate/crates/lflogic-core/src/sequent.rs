//! Sequents `ℕ; Ψ; Ξ; Ω ⟶ F`, their wellformedness, raising, and the
//! application of term substitutions, context substitutions and nominal
//! permutations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::logic::*;
use crate::schemas::*;
use crate::subst::*;
use crate::syntax::*;
use crate::typing::arity_check_term;

/// The fixed parameters of reasoning: an LF signature and named schemas.
#[derive(Clone, Debug, Default)]
pub struct Env {
    pub sig: Signature,
    pub schemas: BTreeMap<String, ContextSchema>,
}

impl Env {
    pub fn new(sig: Signature) -> Env {
        Env { sig, schemas: BTreeMap::new() }
    }

    pub fn with_schema(mut self, name: &str, c: ContextSchema) -> Env {
        self.schemas.insert(name.to_string(), c);
        self
    }

    pub fn schema_ok(&self, name: &str) -> bool {
        self.schemas.get(name).is_some_and(|c| check_context_schema(&self.sig, c).is_ok())
    }

    /// `Θ0`, the arity context of the signature, with no nominal constants.
    pub fn theta0(&self) -> ArityCtx {
        induced_arity_context(&self.sig, &LfCtx::new()).expect("signature names are distinct")
    }
}

/// `Γ: ℕ_Γ ⊳ 𝒞[𝒢]`: the names the variable's instances must avoid, and its type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtxVarEntry {
    pub avoid: BTreeSet<Nominal>,
    pub ty: CtxVarType,
}

/// A named assumption formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyp {
    pub name: String,
    pub formula: Formula,
}

/// A sequent. Assumptions form a set: adding a formula already present
/// (up to renaming of bound variables) is a no-op.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequent {
    pub support: BTreeSet<Nominal>,
    pub vars: Vec<(String, Arity)>,
    pub ctxvars: Vec<(String, CtxVarEntry)>,
    pub hyps: Vec<Hyp>,
    pub goal: Formula,
}

/// Failures of sequent wellformedness and of substitution application.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum SequentError {
    #[error("names avoided by `{0}` are not all in the support set")]
    AvoidNotInSupport(String),
    #[error("context variable `{0}`: {1}")]
    CtxVarType(String, SchemaError),
    #[error("formula `{formula}` is ill-formed: {error}")]
    Formula { formula: String, error: LogicError },
    #[error("term variable `{0}` is declared twice")]
    DuplicateVar(String),
    #[error("substitution uses nominal constants from the support set")]
    SupportClash,
    #[error("substitution for `{0}` is not arity-correct")]
    SubstArity(String),
    #[error("substitution changes the arity of `{0}`")]
    ArityChange(String),
    #[error("substitution is undefined on the sequent")]
    Undefined,
    #[error("context variable `{0}` is not declared")]
    UnknownCtxVar(String),
    #[error("`{0}` is not an instance of the type of `{1}`")]
    NotAnInstance(String, String),
}

/// `Ψ` raised over `over`: each variable keeps its name but gains leading
/// arguments for the listed nominal constants; returns the raised context
/// and the raising substitution (empty when `over` is empty).
pub fn raise(vars: &[(String, Arity)], over: &[Nominal]) -> (Vec<(String, Arity)>, Subst) {
    if over.is_empty() {
        return (vars.to_vec(), Subst::new());
    }
    let doms: Vec<Arity> = over.iter().map(|n| n.arity.clone()).collect();
    let args: Vec<Term> = over.iter().map(|n| eta_expand(&Head::Nom(n.clone()), &n.arity)).collect();
    let mut raised = Vec::new();
    let mut theta = Subst::new();
    for (x, a) in vars {
        raised.push((x.clone(), Arity::from_parts(&doms, a.clone())));
        theta.insert(x, applied_var(x, &args, a), a.clone());
    }
    (raised, theta)
}

/// The canonical form of `x a1 ... ak` at the remaining arity `rest`.
pub fn applied_var(x: &str, args: &[Term], rest: &Arity) -> Term {
    let (doms, _) = rest.parts();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for a in args {
        a.free_vars(&mut taken);
    }
    taken.insert(x.to_string());
    let mut all = args.to_vec();
    let mut binders = Vec::new();
    for d in &doms {
        let y = fresh_name("x", |n| taken.contains(n));
        taken.insert(y.clone());
        all.push(eta_expand(&Head::Var(y.clone()), d));
        binders.push(y);
    }
    let mut t = Term::app(Head::Var(x.to_string()), all);
    for y in binders.iter().rev() {
        t = Term::lam(y, t);
    }
    t
}

impl Sequent {
    /// `∅; ∅; ∅; ∅ ⟶ F`.
    pub fn new(goal: Formula) -> Sequent {
        Sequent { support: BTreeSet::new(), vars: vec![], ctxvars: vec![], hyps: vec![], goal }
    }

    pub fn psi(&self) -> BTreeMap<String, Arity> {
        self.vars.iter().cloned().collect()
    }

    /// `ℕ ∪ Θ0 ∪ Ψ`.
    pub fn arity_ctx(&self, env: &Env) -> ArityCtx {
        let mut th = env.theta0();
        for (x, a) in &self.vars {
            th = th.with_var(x, a.clone());
        }
        th.add_noms(self.support.iter());
        th
    }

    pub fn ctx_dom(&self) -> BTreeSet<String> {
        self.ctxvars.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn ctx_entry(&self, g: &str) -> Option<&CtxVarEntry> {
        self.ctxvars.iter().find(|(h, _)| h == g).map(|(_, e)| e)
    }

    pub fn ctx_entry_mut(&mut self, g: &str) -> Option<&mut CtxVarEntry> {
        self.ctxvars.iter_mut().find(|(h, _)| h == g).map(|(_, e)| e)
    }

    /// `ℕ_Γ` lookup, as used by formula equivalence.
    pub fn avoid_sets(&self) -> impl Fn(&str) -> Option<BTreeSet<Nominal>> + '_ {
        move |g| self.ctx_entry(g).map(|e| e.avoid.clone())
    }

    /// Context variable lookup, as used by context type instances.
    pub fn xi_lookup(&self) -> impl Fn(&str) -> Option<(BTreeSet<Nominal>, CtxVarType)> + '_ {
        move |g| self.ctx_entry(g).map(|e| (e.avoid.clone(), e.ty.clone()))
    }

    pub fn hyp(&self, name: &str) -> Option<&Hyp> {
        self.hyps.iter().find(|h| h.name == name)
    }

    /// Finds an assumption equal to `f` up to bound-variable renaming.
    pub fn find_hyp(&self, f: &Formula) -> Option<&Hyp> {
        self.hyps.iter().find(|h| formula_alpha_eq(&h.formula, f))
    }

    pub fn fresh_hyp_name(&self, base: &str) -> String {
        let mut i = 1;
        loop {
            let n = format!("{}{}", base, i);
            if self.hyp(&n).is_none() {
                return n;
            }
            i += 1;
        }
    }

    /// Adds an assumption with an automatically chosen name; returns the
    /// name under which the formula is now available.
    pub fn add_hyp(&mut self, f: Formula) -> String {
        if let Some(h) = self.find_hyp(&f) {
            return h.name.clone();
        }
        let name = self.fresh_hyp_name("H");
        self.hyps.push(Hyp { name: name.clone(), formula: f });
        name
    }

    /// Adds an assumption under a preferred name (made unique if taken).
    pub fn add_hyp_named(&mut self, base: &str, f: Formula) -> String {
        if let Some(h) = self.find_hyp(&f) {
            return h.name.clone();
        }
        let name = if self.hyp(base).is_none() { base.to_string() } else { self.fresh_hyp_name(base) };
        self.hyps.push(Hyp { name: name.clone(), formula: f });
        name
    }

    pub fn remove_hyp(&mut self, name: &str) -> Option<Formula> {
        let i = self.hyps.iter().position(|h| h.name == name)?;
        Some(self.hyps.remove(i).formula)
    }

    /// Replaces the formula of a named assumption in place.
    pub fn replace_hyp(&mut self, name: &str, f: Formula) {
        if let Some(h) = self.hyps.iter_mut().find(|h| h.name == name) {
            h.formula = f;
        }
    }

    /// Names a fresh term variable would have to avoid.
    pub fn taken_names(&self, env: &Env) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.vars.iter().map(|(x, _)| x.clone()).collect();
        s.extend(self.ctxvars.iter().map(|(g, _)| g.clone()));
        s.extend(env.sig.decls().iter().map(|d| d.name.clone()));
        s.extend(env.schemas.keys().cloned());
        s
    }

    pub fn fresh_var(&self, env: &Env, base: &str) -> String {
        let taken = self.taken_names(env);
        fresh_name(base, |n| taken.contains(n))
    }

    /// Every nominal constant mentioned anywhere in the sequent.
    pub fn all_nominals(&self) -> BTreeSet<Nominal> {
        let mut s = self.support.clone();
        for (_, e) in &self.ctxvars {
            s.extend(e.avoid.iter().cloned());
            e.ty.nominals(&mut s);
        }
        for h in &self.hyps {
            h.formula.nominals(&mut s);
        }
        self.goal.nominals(&mut s);
        s
    }

    pub fn fresh_nominal(&self, alpha: &Arity) -> Nominal {
        fresh_nominal(alpha, &self.all_nominals())
    }

    /// All formulas: assumptions then the goal.
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.hyps.iter().map(|h| &h.formula).chain(std::iter::once(&self.goal))
    }

    /// Annotation indices used anywhere in the sequent.
    pub fn ann_indices(&self) -> BTreeSet<u32> {
        let mut s = BTreeSet::new();
        for f in self.formulas() {
            f.ann_indices(&mut s);
        }
        s
    }

    /// The explicit bindings of a context expression relative to this
    /// sequent: the recorded blocks of its context variable, then its own
    /// bindings.
    pub fn explicit_bindings(&self, g: &CtxExpr) -> Vec<(Nominal, Type)> {
        let mut out = Vec::new();
        if let Some(e) = g.var.as_ref().and_then(|v| self.ctx_entry(v)) {
            out.extend(e.ty.blocks.iter().flatten().cloned());
        }
        out.extend(g.binds.iter().cloned());
        out
    }

    /// Checks the wellformedness conditions on a sequent.
    pub fn wf(&self, env: &Env) -> Result<(), SequentError> {
        let mut seen = BTreeSet::new();
        for (x, _) in &self.vars {
            if !seen.insert(x.clone()) {
                return Err(SequentError::DuplicateVar(x.clone()));
            }
        }
        let psi = self.psi();
        for (g, e) in &self.ctxvars {
            if !e.avoid.is_subset(&self.support) {
                return Err(SequentError::AvoidNotInSupport(g.clone()));
            }
            let nset: BTreeSet<Nominal> = self.support.difference(&e.avoid).cloned().collect();
            wf_ctxvar_ty(&env.sig, &env.schemas, &nset, &psi, &e.ty).map_err(|err| SequentError::CtxVarType(g.clone(), err))?;
        }
        let th = self.arity_ctx(env);
        let xi = self.ctx_dom();
        for f in self.formulas() {
            wf_formula(&env.sig, &|c| env.schema_ok(c), &th, &xi, f).map_err(|error| SequentError::Formula { formula: f.to_string(), error })?;
        }
        Ok(())
    }

    /// Applies a function to every formula and context variable type.
    pub fn try_map(&self, f: &dyn Fn(&Formula) -> Option<Formula>, t: &dyn Fn(&CtxVarType) -> Option<CtxVarType>) -> Option<Sequent> {
        Some(Sequent {
            support: self.support.clone(),
            vars: self.vars.clone(),
            ctxvars: self
                .ctxvars
                .iter()
                .map(|(g, e)| Some((g.clone(), CtxVarEntry { avoid: e.avoid.clone(), ty: t(&e.ty)? })))
                .collect::<Option<_>>()?,
            hyps: self.hyps.iter().map(|h| Some(Hyp { name: h.name.clone(), formula: f(&h.formula)? })).collect::<Option<_>>()?,
            goal: f(&self.goal)?,
        })
    }

    /// Applies a term substitution to formulas and context variable types,
    /// leaving `ℕ` and `Ψ` alone.
    pub fn hsub_all(&self, theta: &Subst) -> Option<Sequent> {
        if theta.is_empty() {
            return Some(self.clone());
        }
        self.try_map(&|f| hsub_formula(theta, f), &|t| t.hsub(theta))
    }

    /// The application of `⟨θ, Ψ′⟩`: checks substitution compatibility,
    /// extends the support set by `supp(θ)` and raises the residual term
    /// variables over it. Returns the new sequent and the raising substitution.
    pub fn apply_term_subst(&self, env: &Env, theta: &Subst, psi_new: &[(String, Arity)]) -> Result<(Sequent, Subst), SequentError> {
        let supp = theta.support();
        if !supp.is_disjoint(&self.support) {
            return Err(SequentError::SupportClash);
        }
        let mut th = env.theta0().all_noms();
        let dom = theta.dom();
        for (x, a) in self.vars.iter().filter(|(x, _)| !dom.contains(x)).chain(psi_new) {
            th = th.with_var(x, a.clone());
        }
        let psi = self.psi();
        let new: BTreeMap<String, Arity> = psi_new.iter().cloned().collect();
        for (h, m, a) in theta.entries() {
            let x = match h {
                Head::Var(x) => x,
                _ => return Err(SequentError::SubstArity(h.to_string())),
            };
            if !arity_check_term(&th, m, a) {
                return Err(SequentError::SubstArity(x.clone()));
            }
            if psi.get(x).is_some_and(|b| b != a) {
                return Err(SequentError::ArityChange(x.clone()));
            }
        }
        for (x, a) in &new {
            if psi.get(x).is_some_and(|b| b != a) && theta.get_var(x).is_none() {
                return Err(SequentError::ArityChange(x.clone()));
            }
        }
        let mut residual: Vec<(String, Arity)> = self.vars.iter().filter(|(x, _)| !dom.contains(x) && !new.contains_key(x)).cloned().collect();
        for (x, a) in psi_new {
            if !residual.iter().any(|(y, _)| y == x) {
                residual.push((x.clone(), a.clone()));
            }
        }
        let over: Vec<Nominal> = supp.iter().cloned().collect();
        let (raised, theta_r) = raise(&residual, &over);
        let s1 = self.hsub_all(theta).ok_or(SequentError::Undefined)?;
        let mut s2 = s1.hsub_all(&theta_r).ok_or(SequentError::Undefined)?;
        s2.support.extend(supp);
        s2.vars = raised;
        Ok((s2, theta_r))
    }

    /// The application of an appropriate context substitution.
    pub fn apply_ctx_subst(&self, env: &Env, sigma: &CtxSubst) -> Result<Sequent, SequentError> {
        let psi = self.psi();
        let mut supp = BTreeSet::new();
        for g in sigma.values() {
            g.nominals(&mut supp);
        }
        let rest: Vec<(String, CtxVarEntry)> = self.ctxvars.iter().filter(|(g, _)| !sigma.contains_key(g)).cloned().collect();
        let rest_lookup = |g: &str| rest.iter().find(|(h, _)| h == g).map(|(_, e)| (e.avoid.clone(), e.ty.clone()));
        for (g, expr) in sigma {
            let e = self.ctx_entry(g).ok_or_else(|| SequentError::UnknownCtxVar(g.clone()))?;
            wf_ctxvar_ty(&env.sig, &env.schemas, &self.support, &psi, &e.ty).map_err(|err| SequentError::CtxVarType(g.clone(), err))?;
            let allowed: BTreeSet<Nominal> = supp.difference(&e.avoid).cloned().collect();
            if !ctxty_instance(&env.sig, &env.schemas, &allowed, &e.avoid, &psi, &rest_lookup, &e.ty, expr) {
                return Err(SequentError::NotAnInstance(expr.to_string(), g.clone()));
            }
        }
        let new_noms: Vec<Nominal> = supp.difference(&self.support).cloned().collect();
        let (raised, theta_r) = raise(&self.vars, &new_noms);
        let mut s = Sequent {
            support: self.support.clone(),
            vars: self.vars.clone(),
            ctxvars: rest,
            hyps: self.hyps.iter().map(|h| Hyp { name: h.name.clone(), formula: ctxsubst_formula(sigma, &h.formula) }).collect(),
            goal: ctxsubst_formula(sigma, &self.goal),
        };
        s = s.hsub_all(&theta_r).ok_or(SequentError::Undefined)?;
        s.support.extend(supp);
        s.vars = raised;
        Ok(s)
    }

    /// Alpha-equality of sequents with set equality of assumptions.
    pub fn alpha_eq(&self, other: &Sequent) -> bool {
        self.support == other.support
            && self.vars == other.vars
            && self.ctxvars.len() == other.ctxvars.len()
            && self.ctxvars.iter().zip(&other.ctxvars).all(|((g1, e1), (g2, e2))| {
                g1 == g2
                    && e1.avoid == e2.avoid
                    && e1.ty.schema == e2.ty.schema
                    && e1.ty.blocks.len() == e2.ty.blocks.len()
                    && e1.ty.blocks.iter().zip(&e2.ty.blocks).all(|(b1, b2)| {
                        b1.len() == b2.len() && b1.iter().zip(b2).all(|((n1, a1), (n2, a2))| n1 == n2 && a1.alpha_eq(a2))
                    })
            })
            && self.hyps.iter().all(|h| other.find_hyp(&h.formula).is_some())
            && other.hyps.iter().all(|h| self.find_hyp(&h.formula).is_some())
            && formula_alpha_eq(&self.goal, &other.goal)
    }

    /// Rendering of the support set, e.g. `n, n1`.
    pub fn render_support(&self) -> String {
        self.support.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
    }

    /// Rendering of the term variables context, e.g. `e:o, t1:o`.
    pub fn render_vars(&self) -> String {
        self.vars.iter().map(|(x, a)| format!("{}:{}", x, a)).collect::<Vec<_>>().join(", ")
    }

    /// Rendering of one context variable entry, e.g. `G:{n} ⊳ c[·]`.
    pub fn render_ctxvar(g: &str, e: &CtxVarEntry) -> String {
        let avoid = e.avoid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ");
        format!("{}:{{{}}} ⊳ {}", g, avoid, e.ty)
    }
}

impl Permute for Sequent {
    fn permute(&self, pi: &Permutation) -> Sequent {
        Sequent {
            support: self.support.iter().map(|n| pi.apply(n)).collect(),
            vars: self.vars.clone(),
            ctxvars: self
                .ctxvars
                .iter()
                .map(|(g, e)| (g.clone(), CtxVarEntry { avoid: e.avoid.iter().map(|n| pi.apply(n)).collect(), ty: e.ty.permute(pi) }))
                .collect(),
            hyps: self.hyps.iter().map(|h| Hyp { name: h.name.clone(), formula: h.formula.permute(pi) }).collect(),
            goal: self.goal.permute(pi),
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.support.is_empty() {
            writeln!(f, "  Nominals: {}", self.render_support())?;
        }
        if !self.vars.is_empty() {
            writeln!(f, "  Variables: {}", self.render_vars())?;
        }
        for (g, e) in &self.ctxvars {
            writeln!(f, "  Context: {}", Sequent::render_ctxvar(g, e))?;
        }
        for h in &self.hyps {
            writeln!(f, "  {} : {}", h.name, h.formula)?;
        }
        writeln!(f, "  ============================")?;
        write!(f, "  {}", self.goal)
    }
}
