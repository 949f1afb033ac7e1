//! The inference rules of the logic, each as a checked backward
//! application: given a conclusion sequent and the rule's parameters, all
//! side conditions are verified and the premise sequents are returned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cases::{all_cases, type_decompose, CaseError};
use crate::logic::*;
use crate::schemas::*;
use crate::sequent::*;
use crate::subst::*;
use crate::syntax::*;
use crate::typing::arity_check_term;

/// Names of the rules, with the annotated atomic rules listed separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    Wk,
    Cont,
    CtxStr,
    CtxWk,
    Id,
    Cut,
    TopR,
    BotL,
    AndR,
    AndL,
    OrR,
    OrL,
    ImpR,
    ImpL,
    AllR,
    AllL,
    ExR,
    ExL,
    CtxR,
    CtxL,
    AtmAppL,
    AtmAppR,
    AtmAbsL,
    AtmAbsR,
    AtmAppLAnn,
    AtmAppRAnn,
    AtmAbsLAnn,
    AtmAbsRAnn,
    Ind,
    LfWk,
    LfStr,
    LfPerm,
    LfInst,
}

impl RuleId {
    pub const ALL: [RuleId; 33] = [
        RuleId::Wk,
        RuleId::Cont,
        RuleId::CtxStr,
        RuleId::CtxWk,
        RuleId::Id,
        RuleId::Cut,
        RuleId::TopR,
        RuleId::BotL,
        RuleId::AndR,
        RuleId::AndL,
        RuleId::OrR,
        RuleId::OrL,
        RuleId::ImpR,
        RuleId::ImpL,
        RuleId::AllR,
        RuleId::AllL,
        RuleId::ExR,
        RuleId::ExL,
        RuleId::CtxR,
        RuleId::CtxL,
        RuleId::AtmAppL,
        RuleId::AtmAppR,
        RuleId::AtmAbsL,
        RuleId::AtmAbsR,
        RuleId::AtmAppLAnn,
        RuleId::AtmAppRAnn,
        RuleId::AtmAbsLAnn,
        RuleId::AtmAbsRAnn,
        RuleId::Ind,
        RuleId::LfWk,
        RuleId::LfStr,
        RuleId::LfPerm,
        RuleId::LfInst,
    ];
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleId::Wk => "wk",
            RuleId::Cont => "cont",
            RuleId::CtxStr => "ctx-str",
            RuleId::CtxWk => "ctx-wk",
            RuleId::Id => "id",
            RuleId::Cut => "cut",
            RuleId::TopR => "top-R",
            RuleId::BotL => "bot-L",
            RuleId::AndR => "and-R",
            RuleId::AndL => "and-L",
            RuleId::OrR => "or-R",
            RuleId::OrL => "or-L",
            RuleId::ImpR => "imp-R",
            RuleId::ImpL => "imp-L",
            RuleId::AllR => "all-R",
            RuleId::AllL => "all-L",
            RuleId::ExR => "ex-R",
            RuleId::ExL => "ex-L",
            RuleId::CtxR => "ctx-R",
            RuleId::CtxL => "ctx-L",
            RuleId::AtmAppL => "atm-app-L",
            RuleId::AtmAppR => "atm-app-R",
            RuleId::AtmAbsL => "atm-abs-L",
            RuleId::AtmAbsR => "atm-abs-R",
            RuleId::AtmAppLAnn => "atm-app-L*",
            RuleId::AtmAppRAnn => "atm-app-R*",
            RuleId::AtmAbsLAnn => "atm-abs-L*",
            RuleId::AtmAbsRAnn => "atm-abs-R*",
            RuleId::Ind => "ind",
            RuleId::LfWk => "LF-wk",
            RuleId::LfStr => "LF-str",
            RuleId::LfPerm => "LF-perm",
            RuleId::LfInst => "LF-inst",
        };
        f.write_str(s)
    }
}

/// A rule together with its parameters. Left rules name their principal
/// assumption; `keep` retains it in the premises.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleApp {
    Wk { hyp: String },
    Cont { hyp: String },
    /// Extends the sequent with new names, variables and context
    /// variables; `avoid` adds some of the new names to existing `ℕ_Γ`.
    CtxStr { noms: Vec<Nominal>, vars: Vec<(String, Arity)>, ctxvars: Vec<(String, CtxVarEntry)>, avoid: BTreeMap<String, BTreeSet<Nominal>> },
    /// Removes names, variables and context variables that are not used.
    CtxWk { noms: Vec<Nominal>, vars: Vec<String>, ctxvars: Vec<String> },
    Id { hyp: String, pi: Permutation },
    Cut { formula: Formula },
    TopR,
    BotL { hyp: String },
    AndR,
    AndL { hyp: String, right: bool, keep: bool },
    OrR { right: bool },
    OrL { hyp: String },
    ImpR,
    ImpL { hyp: String, keep: bool },
    AllR,
    AllL { hyp: String, term: Term, keep: bool },
    ExR { term: Term },
    ExL { hyp: String },
    CtxR,
    CtxL { hyp: String, ctx: CtxExpr, keep: bool },
    AtmAppL { hyp: String },
    AtmAppR,
    AtmAbsL { hyp: String },
    AtmAbsR,
    /// Induction on the `position`-th antecedent (1-based) of the goal,
    /// using annotation index `index`.
    Ind { position: usize, index: u32 },
    LfWk,
    LfStr,
    LfPerm,
    LfInst,
}

/// Failures of rule application, naming the violated premise.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("no assumption named `{0}`")]
    NoSuchHyp(String),
    #[error("{rule}: expected {expected}, found `{found}`")]
    Shape { rule: RuleId, expected: &'static str, found: String },
    #[error("{rule}: {condition}")]
    SideCondition { rule: RuleId, condition: String },
    #[error("{0}")]
    Case(#[from] CaseError),
    #[error("{rule}: {error}")]
    Sequent { rule: RuleId, error: SequentError },
    #[error("{rule}: a premise is ill-formed: {error}")]
    IllFormedPremise { rule: RuleId, error: SequentError },
}

/// The premises of a rule application and, for left rules, the name of
/// the assumption the rule added.
#[derive(Clone, Debug)]
pub struct Applied {
    pub premises: Vec<Sequent>,
    pub added: Option<String>,
}

fn side(rule: RuleId, condition: impl Into<String>) -> RuleError {
    RuleError::SideCondition { rule, condition: condition.into() }
}

fn shape(rule: RuleId, expected: &'static str, found: &Formula) -> RuleError {
    RuleError::Shape { rule, expected, found: found.to_string() }
}

fn hyp_formula<'a>(seq: &'a Sequent, name: &str) -> Result<&'a Formula, RuleError> {
    seq.hyp(name).map(|h| &h.formula).ok_or_else(|| RuleError::NoSuchHyp(name.to_string()))
}

fn annotated(f: &Formula) -> bool {
    matches!(f, Formula::Atom { ann, .. } if *ann != Ann::None)
}

impl RuleApp {
    /// The rule's name, distinguishing annotated atomic variants by the
    /// principal formula in `seq`.
    pub fn id(&self, seq: &Sequent) -> RuleId {
        let hyp_ann = |h: &str| seq.hyp(h).is_some_and(|h| annotated(&h.formula));
        match self {
            RuleApp::Wk { .. } => RuleId::Wk,
            RuleApp::Cont { .. } => RuleId::Cont,
            RuleApp::CtxStr { .. } => RuleId::CtxStr,
            RuleApp::CtxWk { .. } => RuleId::CtxWk,
            RuleApp::Id { .. } => RuleId::Id,
            RuleApp::Cut { .. } => RuleId::Cut,
            RuleApp::TopR => RuleId::TopR,
            RuleApp::BotL { .. } => RuleId::BotL,
            RuleApp::AndR => RuleId::AndR,
            RuleApp::AndL { .. } => RuleId::AndL,
            RuleApp::OrR { .. } => RuleId::OrR,
            RuleApp::OrL { .. } => RuleId::OrL,
            RuleApp::ImpR => RuleId::ImpR,
            RuleApp::ImpL { .. } => RuleId::ImpL,
            RuleApp::AllR => RuleId::AllR,
            RuleApp::AllL { .. } => RuleId::AllL,
            RuleApp::ExR { .. } => RuleId::ExR,
            RuleApp::ExL { .. } => RuleId::ExL,
            RuleApp::CtxR => RuleId::CtxR,
            RuleApp::CtxL { .. } => RuleId::CtxL,
            RuleApp::AtmAppL { hyp } if hyp_ann(hyp) => RuleId::AtmAppLAnn,
            RuleApp::AtmAppL { .. } => RuleId::AtmAppL,
            RuleApp::AtmAppR if annotated(&seq.goal) => RuleId::AtmAppRAnn,
            RuleApp::AtmAppR => RuleId::AtmAppR,
            RuleApp::AtmAbsL { hyp } if hyp_ann(hyp) => RuleId::AtmAbsLAnn,
            RuleApp::AtmAbsL { .. } => RuleId::AtmAbsL,
            RuleApp::AtmAbsR if annotated(&seq.goal) => RuleId::AtmAbsRAnn,
            RuleApp::AtmAbsR => RuleId::AtmAbsR,
            RuleApp::Ind { .. } => RuleId::Ind,
            RuleApp::LfWk => RuleId::LfWk,
            RuleApp::LfStr => RuleId::LfStr,
            RuleApp::LfPerm => RuleId::LfPerm,
            RuleApp::LfInst => RuleId::LfInst,
        }
    }
}

impl fmt::Display for RuleApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleApp::Wk { hyp } | RuleApp::Cont { hyp } | RuleApp::BotL { hyp } | RuleApp::OrL { hyp } | RuleApp::ExL { hyp } | RuleApp::AtmAppL { hyp } | RuleApp::AtmAbsL { hyp } => {
                write!(f, "{} {}", self.id(&Sequent::new(Formula::Top)), hyp)
            }
            RuleApp::Id { hyp, pi } => {
                write!(f, "id {}", hyp)?;
                for (a, b) in pi.pairs() {
                    write!(f, " {}->{}", a, b)?;
                }
                Ok(())
            }
            RuleApp::Cut { formula } => write!(f, "cut {}", formula),
            RuleApp::AndL { hyp, right, .. } => write!(f, "and-L{} {}", if *right { 2 } else { 1 }, hyp),
            RuleApp::OrR { right } => write!(f, "or-R{}", if *right { 2 } else { 1 }),
            RuleApp::ImpL { hyp, .. } => write!(f, "imp-L {}", hyp),
            RuleApp::AllL { hyp, term, .. } => write!(f, "all-L {} {}", hyp, render_arg(term)),
            RuleApp::ExR { term } => write!(f, "ex-R {}", render_arg(term)),
            RuleApp::CtxL { hyp, ctx, .. } => write!(f, "ctx-L {} [{}]", hyp, ctx),
            RuleApp::Ind { position, index } => write!(f, "ind {} @{}", position, index),
            other => write!(f, "{}", other.id(&Sequent::new(Formula::Top))),
        }
    }
}

/// Collects the nominal correspondences forced by aligning `f2` with `f1`
/// position by position; `None` if the formulas differ in shape.
pub fn nominal_alignment(f2: &Formula, f1: &Formula) -> Option<Vec<(Nominal, Nominal)>> {
    fn term(m2: &Term, m1: &Term, out: &mut Vec<(Nominal, Nominal)>) -> Option<()> {
        match (m2, m1) {
            (Term::Lam(_, b2), Term::Lam(_, b1)) => term(b2, b1, out),
            (Term::App(h2, a2), Term::App(h1, a1)) if a2.len() == a1.len() => {
                if let (Head::Nom(n2), Head::Nom(n1)) = (h2, h1) {
                    out.push((n2.clone(), n1.clone()));
                }
                a2.iter().zip(a1).try_for_each(|(x, y)| term(x, y, out))
            }
            _ => None,
        }
    }
    fn ty(a2: &Type, a1: &Type, out: &mut Vec<(Nominal, Nominal)>) -> Option<()> {
        match (a2, a1) {
            (Type::Pi(_, x2, y2), Type::Pi(_, x1, y1)) => {
                ty(x2, x1, out)?;
                ty(y2, y1, out)
            }
            (Type::Atom(c2, a2), Type::Atom(c1, a1)) if c2 == c1 && a2.len() == a1.len() => a2.iter().zip(a1).try_for_each(|(x, y)| term(x, y, out)),
            _ => None,
        }
    }
    fn go(f2: &Formula, f1: &Formula, out: &mut Vec<(Nominal, Nominal)>) -> Option<()> {
        match (f2, f1) {
            (Formula::Atom { ctx: g2, term: m2, ty: a2, .. }, Formula::Atom { ctx: g1, term: m1, ty: a1, .. }) => {
                if g2.binds.len() != g1.binds.len() {
                    return None;
                }
                for ((n2, b2), (n1, b1)) in g2.binds.iter().zip(&g1.binds) {
                    out.push((n2.clone(), n1.clone()));
                    ty(b2, b1, out)?;
                }
                term(m2, m1, out)?;
                ty(a2, a1, out)
            }
            (Formula::Top, Formula::Top) | (Formula::Bot, Formula::Bot) => Some(()),
            (Formula::Imp(a2, b2), Formula::Imp(a1, b1)) | (Formula::And(a2, b2), Formula::And(a1, b1)) | (Formula::Or(a2, b2), Formula::Or(a1, b1)) => {
                go(a2, a1, out)?;
                go(b2, b1, out)
            }
            (Formula::Ctx(_, _, b2), Formula::Ctx(_, _, b1)) | (Formula::All(_, _, b2), Formula::All(_, _, b1)) | (Formula::Exists(_, _, b2), Formula::Exists(_, _, b1)) => go(b2, b1, out),
            _ => None,
        }
    }
    let mut out = Vec::new();
    go(f2, f1, &mut out)?;
    Some(out)
}

/// A permutation under which assumption `f2` is at least as strong as `f1`
/// in `seq`, if the positional alignment of nominals yields one.
pub fn find_perm(seq: &Sequent, f2: &Formula, f1: &Formula) -> Option<Permutation> {
    let pairs = nominal_alignment(f2, f1)?;
    let pi = Permutation::complete(&pairs)?;
    let names = seq.avoid_sets();
    (pi.support().is_subset(&seq.support) && formula_strength(&names, &pi, f2, f1)).then_some(pi)
}

/// Follows the goal's spine of quantifiers and implications to the
/// `position`-th antecedent and replaces it using `f`.
fn at_antecedent(goal: &Formula, position: usize, f: &dyn Fn(&Formula) -> Option<Formula>) -> Option<Formula> {
    match goal {
        Formula::Ctx(g, c, b) => Some(Formula::Ctx(g.clone(), c.clone(), Box::new(at_antecedent(b, position, f)?))),
        Formula::All(x, a, b) => Some(Formula::All(x.clone(), a.clone(), Box::new(at_antecedent(b, position, f)?))),
        Formula::Imp(a, b) if position == 1 => Some(Formula::Imp(Box::new(f(a)?), b.clone())),
        Formula::Imp(a, b) if position > 1 => Some(Formula::Imp(a.clone(), Box::new(at_antecedent(b, position - 1, f)?))),
        _ => None,
    }
}

/// Whether context `g` occurs, up to a permutation of names allowed by
/// the sequent, as the context of an atomic assumption.
fn ctx_witnessed(seq: &Sequent, g: &CtxExpr) -> bool {
    if g.var.is_none() && g.binds.is_empty() {
        return true;
    }
    let names = seq.avoid_sets();
    seq.hyps.iter().any(|h| match &h.formula {
        Formula::Atom { ctx, .. } if ctx.var == g.var && ctx.binds.len() == g.binds.len() => {
            let pairs: Vec<(Nominal, Nominal)> = ctx.binds.iter().zip(&g.binds).map(|((a, _), (b, _))| (a.clone(), b.clone())).collect();
            let Some(pi) = Permutation::complete(&pairs) else { return false };
            if !pi.support().is_subset(&seq.support) {
                return false;
            }
            if let Some(v) = &g.var {
                if !names(v).is_some_and(|ns| pi.support().is_subset(&ns)) {
                    return false;
                }
            }
            ctx.binds.iter().zip(&g.binds).all(|((a, b), (c, d))| &pi.apply(a) == c && b.permute(&pi).alpha_eq(d))
        }
        _ => false,
    })
}

/// Adds a fresh nominal for an abstraction, extending `ℕ` and the name set
/// of the context variable of `g`.
fn open_binder(seq: &mut Sequent, g: &CtxExpr, a1: &Type) -> Nominal {
    let n = seq.fresh_nominal(&erase(a1));
    seq.support.insert(n.clone());
    if let Some(e) = g.var.as_ref().and_then(|v| seq.ctx_entry_mut(v)) {
        e.avoid.insert(n.clone());
    }
    n
}

fn strict(rule: RuleId, ann: Ann) -> Result<Ann, RuleError> {
    match ann {
        Ann::None => Ok(Ann::None),
        Ann::At(i) => Ok(Ann::Star(i)),
        Ann::Star(_) => Err(side(rule, "a strictly bounded goal cannot be decomposed further")),
    }
}

fn no_nominal(rule: RuleId, n: &Nominal, what: &str, occurs: bool) -> Result<(), RuleError> {
    if occurs {
        Err(side(rule, format!("{} must not occur in {}", n, what)))
    } else {
        Ok(())
    }
}

fn term_noms(m: &Term) -> BTreeSet<Nominal> {
    let mut s = BTreeSet::new();
    m.nominals(&mut s);
    s
}

fn type_noms(a: &Type) -> BTreeSet<Nominal> {
    let mut s = BTreeSet::new();
    a.nominals(&mut s);
    s
}

/// Applies a rule backwards and checks that every premise is well-formed.
pub fn apply_rule(env: &Env, seq: &Sequent, rule: &RuleApp) -> Result<Applied, RuleError> {
    let id = rule.id(seq);
    let applied = apply_unchecked_wf(env, seq, rule, id)?;
    for p in &applied.premises {
        p.wf(env).map_err(|error| RuleError::IllFormedPremise { rule: id, error })?;
    }
    Ok(applied)
}

fn premises(ps: Vec<Sequent>) -> Result<Applied, RuleError> {
    Ok(Applied { premises: ps, added: None })
}

fn with_added(mut s: Sequent, f: Formula, keep_from: Option<&str>) -> Applied {
    if let Some(h) = keep_from {
        s.remove_hyp(h);
    }
    let name = s.add_hyp(f);
    Applied { premises: vec![s], added: Some(name) }
}

fn apply_unchecked_wf(env: &Env, seq: &Sequent, rule: &RuleApp, id: RuleId) -> Result<Applied, RuleError> {
    let goal = &seq.goal;
    match rule {
        RuleApp::Wk { hyp } => {
            let mut s = seq.clone();
            s.remove_hyp(hyp).ok_or_else(|| RuleError::NoSuchHyp(hyp.clone()))?;
            premises(vec![s])
        }
        RuleApp::Cont { hyp } => {
            hyp_formula(seq, hyp)?;
            premises(vec![seq.clone()])
        }
        RuleApp::CtxStr { noms, vars, ctxvars, avoid } => {
            let mut s = seq.clone();
            for n in noms {
                if !s.support.insert(n.clone()) {
                    return Err(side(id, format!("{} is already in the support set", n)));
                }
            }
            let taken = seq.taken_names(env);
            for (x, a) in vars {
                if taken.contains(x) || s.vars.iter().any(|(y, _)| y == x) {
                    return Err(side(id, format!("variable {} is not fresh", x)));
                }
                s.vars.push((x.clone(), a.clone()));
            }
            let new: BTreeSet<Nominal> = noms.iter().cloned().collect();
            for (g, ns) in avoid {
                if !ns.is_subset(&new) {
                    return Err(side(id, "only new names may be added to a name set"));
                }
                s.ctx_entry_mut(g).ok_or_else(|| side(id, format!("unknown context variable {}", g)))?.avoid.extend(ns.iter().cloned());
            }
            for (g, e) in ctxvars {
                if taken.contains(g) || s.ctx_entry(g).is_some() {
                    return Err(side(id, format!("context variable {} is not fresh", g)));
                }
                s.ctxvars.push((g.clone(), e.clone()));
            }
            let psi = s.psi();
            for (g, e) in &s.ctxvars {
                let nset: BTreeSet<Nominal> = s.support.difference(&e.avoid).cloned().collect();
                wf_ctxvar_ty(&env.sig, &env.schemas, &nset, &psi, &e.ty).map_err(|err| side(id, format!("type of {}: {}", g, err)))?;
            }
            premises(vec![s])
        }
        RuleApp::CtxWk { noms, vars, ctxvars } => {
            let mut s = seq.clone();
            for n in noms {
                if !s.support.remove(n) {
                    return Err(side(id, format!("{} is not in the support set", n)));
                }
                for (_, e) in s.ctxvars.iter_mut() {
                    e.avoid.remove(n);
                }
            }
            for x in vars {
                let i = s.vars.iter().position(|(y, _)| y == x).ok_or_else(|| side(id, format!("unknown variable {}", x)))?;
                s.vars.remove(i);
            }
            for g in ctxvars {
                let i = s.ctxvars.iter().position(|(h, _)| h == g).ok_or_else(|| side(id, format!("unknown context variable {}", g)))?;
                s.ctxvars.remove(i);
            }
            s.wf(env).map_err(|error| side(id, error.to_string()))?;
            premises(vec![s])
        }
        RuleApp::Id { hyp, pi } => {
            let f = hyp_formula(seq, hyp)?;
            if !pi.support().is_subset(&seq.support) {
                return Err(side(id, "the permutation must be supported by the support set"));
            }
            if !formula_strength(&seq.avoid_sets(), pi, f, goal) {
                return Err(side(id, format!("`{}` is not at least as strong as the goal", f)));
            }
            premises(vec![])
        }
        RuleApp::Cut { formula } => {
            let th = seq.arity_ctx(env);
            wf_formula(&env.sig, &|c| env.schema_ok(c), &th, &seq.ctx_dom(), formula).map_err(|e| side(id, e.to_string()))?;
            let mut s1 = seq.clone();
            s1.goal = formula.clone();
            let Applied { premises: mut p2, added } = with_added(seq.clone(), formula.clone(), None);
            Ok(Applied { premises: vec![s1, p2.remove(0)], added })
        }
        RuleApp::TopR => match goal {
            Formula::Top => premises(vec![]),
            f => Err(shape(id, "true", f)),
        },
        RuleApp::BotL { hyp } => match hyp_formula(seq, hyp)? {
            Formula::Bot => premises(vec![]),
            f => Err(shape(id, "false", f)),
        },
        RuleApp::AndR => match goal {
            Formula::And(a, b) => {
                let (mut s1, mut s2) = (seq.clone(), seq.clone());
                s1.goal = (**a).clone();
                s2.goal = (**b).clone();
                premises(vec![s1, s2])
            }
            f => Err(shape(id, "a conjunction", f)),
        },
        RuleApp::AndL { hyp, right, keep } => match hyp_formula(seq, hyp)? {
            Formula::And(a, b) => Ok(with_added(seq.clone(), if *right { (**b).clone() } else { (**a).clone() }, (!keep).then_some(hyp.as_str()))),
            f => Err(shape(id, "a conjunction", f)),
        },
        RuleApp::OrR { right } => match goal {
            Formula::Or(a, b) => {
                let mut s = seq.clone();
                s.goal = if *right { (**b).clone() } else { (**a).clone() };
                premises(vec![s])
            }
            f => Err(shape(id, "a disjunction", f)),
        },
        RuleApp::OrL { hyp } => match hyp_formula(seq, hyp)? {
            Formula::Or(a, b) => {
                let mut s1 = seq.clone();
                s1.remove_hyp(hyp);
                let mut s2 = s1.clone();
                s1.add_hyp((**a).clone());
                s2.add_hyp((**b).clone());
                premises(vec![s1, s2])
            }
            f => Err(shape(id, "a disjunction", f)),
        },
        RuleApp::ImpR => match goal {
            Formula::Imp(a, b) => {
                let mut s = seq.clone();
                s.goal = (**b).clone();
                let name = s.add_hyp((**a).clone());
                Ok(Applied { premises: vec![s], added: Some(name) })
            }
            f => Err(shape(id, "an implication", f)),
        },
        RuleApp::ImpL { hyp, keep } => match hyp_formula(seq, hyp)? {
            Formula::Imp(a, b) => {
                let mut s1 = seq.clone();
                if !keep {
                    s1.remove_hyp(hyp);
                }
                let mut s2 = s1.clone();
                s1.goal = (**a).clone();
                let name = s2.add_hyp((**b).clone());
                Ok(Applied { premises: vec![s1, s2], added: Some(name) })
            }
            f => Err(shape(id, "an implication", f)),
        },
        RuleApp::AllR => match goal {
            Formula::All(x, a, b) => {
                let (s, body) = open_quantifier(env, seq, x, a, b).map_err(|e| RuleError::Sequent { rule: id, error: e })?;
                let mut s = s;
                s.goal = body;
                premises(vec![s])
            }
            f => Err(shape(id, "a universal formula", f)),
        },
        RuleApp::ExL { hyp } => match hyp_formula(seq, hyp)? {
            Formula::Exists(x, a, b) => {
                let (mut s, body) = open_quantifier(env, seq, x, a, b).map_err(|e| RuleError::Sequent { rule: id, error: e })?;
                s.remove_hyp(hyp);
                let name = s.add_hyp(body);
                Ok(Applied { premises: vec![s], added: Some(name) })
            }
            f => Err(shape(id, "an existential formula", f)),
        },
        RuleApp::AllL { hyp, term, keep } => match hyp_formula(seq, hyp)? {
            Formula::All(x, a, b) => {
                let body = instantiate_quantifier(env, seq, id, x, a, b, term)?;
                Ok(with_added(seq.clone(), body, (!keep).then_some(hyp.as_str())))
            }
            f => Err(shape(id, "a universal formula", f)),
        },
        RuleApp::ExR { term } => match goal {
            Formula::Exists(x, a, b) => {
                let mut s = seq.clone();
                s.goal = instantiate_quantifier(env, seq, id, x, a, b, term)?;
                premises(vec![s])
            }
            f => Err(shape(id, "an existential formula", f)),
        },
        RuleApp::CtxR => match goal {
            Formula::Ctx(g, c, b) => {
                let mut s = seq.clone();
                let g2 = s.fresh_var(env, g);
                s.ctxvars.push((g2.clone(), CtxVarEntry { avoid: BTreeSet::new(), ty: CtxVarType::new(c) }));
                let mut sigma = CtxSubst::new();
                sigma.insert(g.clone(), CtxExpr::var(&g2));
                s.goal = ctxsubst_formula(&sigma, b);
                premises(vec![s])
            }
            f => Err(shape(id, "a context quantification", f)),
        },
        RuleApp::CtxL { hyp, ctx, keep } => match hyp_formula(seq, hyp)? {
            Formula::Ctx(g, c, b) => {
                let th = seq.arity_ctx(env);
                wf_ctx_expr(&env.sig, &th, &seq.ctx_dom(), ctx).map_err(|e| side(id, e.to_string()))?;
                let xi = seq.xi_lookup();
                if !ctxty_instance(&env.sig, &env.schemas, &seq.support, &BTreeSet::new(), &seq.psi(), &xi, &CtxVarType::new(c), ctx) {
                    return Err(side(id, format!("`{}` is not an instance of schema {}", ctx, c)));
                }
                let mut sigma = CtxSubst::new();
                sigma.insert(g.clone(), ctx.clone());
                Ok(with_added(seq.clone(), ctxsubst_formula(&sigma, b), (!keep).then_some(hyp.as_str())))
            }
            f => Err(shape(id, "a context quantification", f)),
        },
        RuleApp::AtmAppL { hyp } => {
            let cases = all_cases(env, seq, hyp)?;
            premises(cases.into_iter().map(|c| c.seq).collect())
        }
        RuleApp::AtmAppR => {
            let Formula::Atom { ctx, term, ty, ann } = goal else { return Err(shape(id, "an atomic formula", goal)) };
            let (Term::App(h, args), Type::Atom(..)) = (term, ty) else { return Err(shape(id, "an atomic term at an atomic type", goal)) };
            let head_ty = match h {
                Head::Const(c) => env.sig.const_type(c).cloned(),
                Head::Nom(n) => seq.explicit_bindings(ctx).into_iter().find(|(m, _)| m == n).map(|(_, a)| a),
                Head::Var(_) => None,
            }
            .ok_or_else(|| side(id, format!("head {} has no type in the context", h)))?;
            if !ctx_witnessed(seq, ctx) {
                return Err(side(id, format!("context `{}` does not occur in an assumption", ctx)));
            }
            let ann2 = strict(id, *ann)?;
            let mut cur = head_ty;
            let mut out = Vec::new();
            for m in args {
                let Type::Pi(x, a1, a2) = cur else { return Err(side(id, "too many arguments")) };
                let mut s = seq.clone();
                s.goal = Formula::atom(ctx.clone(), m.clone(), (*a1).clone()).with_ann(ann2);
                out.push(s);
                cur = hsub_type(&Subst::single(&x, m.clone(), erase(&a1)), &a2).ok_or_else(|| side(id, "argument substitution is undefined"))?;
            }
            if !cur.alpha_eq(ty) {
                return Err(side(id, format!("head type ends in `{}`, not `{}`", cur, ty)));
            }
            premises(out)
        }
        RuleApp::AtmAbsL { hyp } => match hyp_formula(seq, hyp)? {
            Formula::Atom { ctx, term: Term::Lam(x, m), ty: Type::Pi(y, a1, a2), ann } => {
                let mut s = seq.clone();
                let n = open_binder(&mut s, ctx, a1);
                let f = Formula::atom(ctx.clone().with(n.clone(), (**a1).clone()), instantiate_term(x, &n, m), instantiate_type(y, &n, a2)).with_ann(*ann);
                Ok(with_added(s, f, Some(hyp)))
            }
            f => Err(shape(id, "an abstraction at a Π-type", f)),
        },
        RuleApp::AtmAbsR => match goal {
            Formula::Atom { ctx, term: Term::Lam(x, m), ty: Type::Pi(y, a1, a2), ann } => {
                let ann2 = strict(id, *ann)?;
                let mut s = seq.clone();
                let n = open_binder(&mut s, ctx, a1);
                s.goal = Formula::atom(ctx.clone().with(n.clone(), (**a1).clone()), instantiate_term(x, &n, m), instantiate_type(y, &n, a2)).with_ann(ann2);
                premises(vec![s])
            }
            f => Err(shape(id, "an abstraction at a Π-type", f)),
        },
        RuleApp::Ind { position, index } => {
            if seq.ann_indices().contains(index) {
                return Err(side(id, format!("annotation index {} already occurs in the sequent", index)));
            }
            let mark = |ann: Ann| {
                move |f: &Formula| match f {
                    Formula::Atom { ann: Ann::None, .. } => Some(f.clone().with_ann(ann)),
                    _ => None,
                }
            };
            let ih = at_antecedent(goal, *position, &mark(Ann::Star(*index))).ok_or_else(|| side(id, format!("antecedent {} is not an unannotated atomic formula", position)))?;
            let g2 = at_antecedent(goal, *position, &mark(Ann::At(*index))).expect("same shape as the hypothesis");
            let mut s = seq.clone();
            s.goal = g2;
            let name = s.add_hyp_named("IH", ih);
            Ok(Applied { premises: vec![s], added: Some(name) })
        }
        RuleApp::LfWk => {
            let (lhs, rhs) = imp_of_atoms(id, goal)?;
            let (g, m, a, ann) = lhs;
            let (g2, m2, a2, ann2) = rhs;
            if ann != ann2 || !m.alpha_eq(m2) || !a.alpha_eq(a2) || g2.var != g.var || g2.binds.len() != g.binds.len() + 1 {
                return Err(shape(id, "{G ⊢ M : A} => {G, n:B ⊢ M : A}", goal));
            }
            if !g.binds.iter().zip(&g2.binds).all(|((n1, b1), (n2, b2))| n1 == n2 && b1.alpha_eq(b2)) {
                return Err(shape(id, "{G ⊢ M : A} => {G, n:B ⊢ M : A}", goal));
            }
            let (n, b) = g2.binds.last().expect("one more binding").clone();
            no_nominal(id, &n, "the term", term_noms(m).contains(&n))?;
            no_nominal(id, &n, "the type", type_noms(a).contains(&n))?;
            let mut bound = BTreeSet::new();
            for (k, t) in seq.explicit_bindings(g) {
                bound.insert(k);
                t.nominals(&mut bound);
            }
            no_nominal(id, &n, "the context", bound.contains(&n))?;
            if let Some(v) = &g.var {
                if !seq.ctx_entry(v).is_some_and(|e| e.avoid.contains(&n)) {
                    return Err(side(id, format!("{} must be in the name set of {}", n, v)));
                }
            }
            premises(type_decompose(env, seq, g, &b))
        }
        RuleApp::LfStr => {
            let ((g, m, a, ann), (g2, m2, a2, ann2)) = imp_of_atoms(id, goal)?;
            if ann != ann2 || !m.alpha_eq(m2) || !a.alpha_eq(a2) || g2.var != g.var || g.binds.len() != g2.binds.len() + 1 {
                return Err(shape(id, "{G, n:B ⊢ M : A} => {G ⊢ M : A}", goal));
            }
            if !g2.binds.iter().zip(&g.binds).all(|((n1, b1), (n2, b2))| n1 == n2 && b1.alpha_eq(b2)) {
                return Err(shape(id, "{G, n:B ⊢ M : A} => {G ⊢ M : A}", goal));
            }
            let (n, _) = g.binds.last().expect("one more binding");
            no_nominal(id, n, "the term", term_noms(m).contains(n))?;
            no_nominal(id, n, "the type", type_noms(a).contains(n))?;
            premises(vec![])
        }
        RuleApp::LfPerm => {
            let ((g, m, a, ann), (g2, m2, a2, ann2)) = imp_of_atoms(id, goal)?;
            let expected = "{G, n1:B1, n2:B2, G' ⊢ M : A} => {G, n2:B2, n1:B1, G' ⊢ M : A}";
            if ann != ann2 || !m.alpha_eq(m2) || !a.alpha_eq(a2) || g2.var != g.var || g.binds.len() != g2.binds.len() {
                return Err(shape(id, expected, goal));
            }
            let diffs: Vec<usize> = (0..g.binds.len()).filter(|&k| g.binds[k].0 != g2.binds[k].0 || !g.binds[k].1.alpha_eq(&g2.binds[k].1)).collect();
            let k = match diffs.as_slice() {
                [k, k1] if *k1 == k + 1 => *k,
                _ => return Err(shape(id, expected, goal)),
            };
            let ((n1, b1), (n2, b2)) = (&g.binds[k], &g.binds[k + 1]);
            if !(&g2.binds[k].0 == n2 && g2.binds[k].1.alpha_eq(b2) && &g2.binds[k + 1].0 == n1 && g2.binds[k + 1].1.alpha_eq(b1)) {
                return Err(shape(id, expected, goal));
            }
            no_nominal(id, n1, "the type of the binding it is exchanged with", type_noms(b2).contains(n1))?;
            premises(vec![])
        }
        RuleApp::LfInst => {
            let expected = "{G, n:B, G' ⊢ M : A} => {G ⊢ N : B} => {G, G'[N/n] ⊢ M[N/n] : A[N/n]}";
            let Formula::Imp(f1, rest) = goal else { return Err(shape(id, expected, goal)) };
            let Formula::Imp(f2, f3) = &**rest else { return Err(shape(id, expected, goal)) };
            let (Formula::Atom { ctx: g1, term: m, ty: a, .. }, Formula::Atom { ctx: g2, term: nn, ty: b, .. }, Formula::Atom { ctx: g3, term: m3, ty: a3, ann: ann3 }) = (&**f1, &**f2, &**f3) else {
                return Err(shape(id, expected, goal));
            };
            if *ann3 != Ann::None {
                return Err(side(id, "the instantiated formula must be unannotated"));
            }
            let k = g2.binds.len();
            if g1.var != g2.var || g1.binds.len() <= k || !g1.binds[..k].iter().zip(&g2.binds).all(|((n1, b1), (n2, b2))| n1 == n2 && b1.alpha_eq(b2)) {
                return Err(shape(id, expected, goal));
            }
            let (n, bn) = &g1.binds[k];
            if !bn.alpha_eq(b) {
                return Err(side(id, format!("the instance has type `{}`, not `{}`", b, bn)));
            }
            no_nominal(id, n, "the instance", term_noms(nn).contains(n))?;
            let err = || side(id, "instantiation is undefined");
            let mut ctx3 = CtxExpr { var: g1.var.clone(), binds: g1.binds[..k].to_vec() };
            for (n2, b2) in &g1.binds[k + 1..] {
                ctx3.binds.push((n2.clone(), subst_nominal_type(n, nn, b2).ok_or_else(err)?));
            }
            let m_inst = subst_nominal_term(n, nn, m).ok_or_else(err)?;
            let a_inst = subst_nominal_type(n, nn, a).ok_or_else(err)?;
            let same_ctx = ctx3.var == g3.var && ctx3.binds.len() == g3.binds.len() && ctx3.binds.iter().zip(&g3.binds).all(|((n1, b1), (n2, b2))| n1 == n2 && b1.alpha_eq(b2));
            if !same_ctx || !m_inst.alpha_eq(m3) || !a_inst.alpha_eq(a3) {
                return Err(side(id, format!("the conclusion should be `{{{} ⊢ {} : {}}}`", ctx3, m_inst, a_inst)));
            }
            premises(vec![])
        }
    }
}

type AtomParts<'a> = (&'a CtxExpr, &'a Term, &'a Type, Ann);

fn imp_of_atoms(id: RuleId, goal: &Formula) -> Result<(AtomParts<'_>, AtomParts<'_>), RuleError> {
    match goal {
        Formula::Imp(a, b) => match (&**a, &**b) {
            (Formula::Atom { ctx: g1, term: m1, ty: a1, ann: n1 }, Formula::Atom { ctx: g2, term: m2, ty: a2, ann: n2 }) => Ok(((g1, m1, a1, *n1), (g2, m2, a2, *n2))),
            _ => Err(shape(id, "an implication between atomic formulas", goal)),
        },
        _ => Err(shape(id, "an implication between atomic formulas", goal)),
    }
}

/// Opens a quantifier `x:α. F` with a fresh variable raised over the
/// support set; returns the extended sequent and the instantiated body.
fn open_quantifier(env: &Env, seq: &Sequent, x: &str, alpha: &Arity, body: &Formula) -> Result<(Sequent, Formula), SequentError> {
    let mut s = seq.clone();
    let y = s.fresh_var(env, x);
    let over: Vec<Nominal> = s.support.iter().cloned().collect();
    let doms: Vec<Arity> = over.iter().map(|n| n.arity.clone()).collect();
    let args: Vec<Term> = over.iter().map(|n| eta_expand(&Head::Nom(n.clone()), &n.arity)).collect();
    s.vars.push((y.clone(), Arity::from_parts(&doms, alpha.clone())));
    let theta = Subst::single(x, applied_var(&y, &args, alpha), alpha.clone());
    let f = hsub_formula(&theta, body).ok_or(SequentError::Undefined)?;
    Ok((s, f))
}

#[allow(clippy::too_many_arguments)]
fn instantiate_quantifier(env: &Env, seq: &Sequent, id: RuleId, x: &str, alpha: &Arity, body: &Formula, t: &Term) -> Result<Formula, RuleError> {
    if !arity_check_term(&seq.arity_ctx(env), t, alpha) {
        return Err(side(id, format!("witness `{}` does not have arity {}", t, alpha)));
    }
    hsub_formula(&Subst::single(x, t.clone(), alpha.clone()), body).ok_or_else(|| side(id, "substitution of the witness is undefined"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{stlc, stlc_schema};

    fn env() -> Env {
        Env::new(stlc()).with_schema("c", stlc_schema())
    }

    fn tm() -> Type {
        Type::atom("tm", vec![])
    }

    fn tp() -> Type {
        Type::atom("tp", vec![])
    }

    #[test]
    fn abstraction_on_the_right() {
        let e = env();
        let goal = Formula::atom(CtxExpr::empty(), Term::lam("x", Term::var("x")), Type::arrow(tm(), tm()));
        let s = Sequent::new(goal);
        let p = apply_rule(&e, &s, &RuleApp::AtmAbsR).unwrap().premises;
        assert_eq!(p[0].goal.to_string(), "{n:tm ⊢ n : tm}");
    }

    #[test]
    fn application_on_the_right_tightens_annotations() {
        let e = env();
        let arr = Term::app(Head::cst("arr"), vec![Term::var("t"), Term::var("u")]);
        let goal = Formula::atom(CtxExpr::var("G"), Term::app(Head::cst("refl"), vec![arr.clone()]), Type::atom("eq", vec![arr.clone(), arr.clone()])).with_ann(Ann::At(1));
        let mut s = Sequent::new(goal);
        s.vars = vec![("t".into(), Arity::O), ("u".into(), Arity::O)];
        s.ctxvars.push(("G".into(), CtxVarEntry { avoid: BTreeSet::new(), ty: CtxVarType::new("c") }));
        assert!(apply_rule(&e, &s, &RuleApp::AtmAppR).is_err());
        s.add_hyp(Formula::atom(CtxExpr::var("G"), Term::var("t"), tp()));
        let p = apply_rule(&e, &s, &RuleApp::AtmAppR).unwrap().premises;
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].goal.to_string(), "{G ⊢ arr t u : tp}*1");
    }

    #[test]
    fn id_modulo_permutation() {
        let e = env();
        let (n, n1) = (Nominal::base(0), Nominal::base(1));
        let mut s = Sequent::new(Formula::atom(CtxExpr::empty().with(n1.clone(), tm()), Term::nom(n1.clone()), tm()));
        s.support = [n.clone(), n1.clone()].into_iter().collect();
        s.add_hyp(Formula::atom(CtxExpr::empty().with(n.clone(), tm()), Term::nom(n.clone()), tm()).with_ann(Ann::Star(2)));
        assert!(apply_rule(&e, &s, &RuleApp::Id { hyp: "H1".into(), pi: Permutation::identity() }).is_err());
        let pi = find_perm(&s, &s.hyps[0].formula, &s.goal).unwrap();
        apply_rule(&e, &s, &RuleApp::Id { hyp: "H1".into(), pi }).unwrap();
    }

    #[test]
    fn induction_marks_the_antecedent() {
        let e = env();
        let atom = Formula::atom(CtxExpr::empty(), Term::var("d"), Type::atom("of", vec![Term::var("e"), Term::var("t")]));
        let goal = Formula::all("e", Arity::O, Formula::all("t", Arity::O, Formula::all("d", Arity::O, Formula::imp(atom, Formula::Top))));
        let s = Sequent::new(goal);
        let p = apply_rule(&e, &s, &RuleApp::Ind { position: 1, index: 1 }).unwrap();
        let s2 = &p.premises[0];
        assert_eq!(p.added.as_deref(), Some("IH"));
        assert!(s2.goal.to_string().contains("@1"));
        assert!(apply_rule(&e, s2, &RuleApp::Ind { position: 1, index: 1 }).is_err());
        assert!(apply_rule(&e, &s, &RuleApp::Ind { position: 2, index: 1 }).is_err());
    }

    #[test]
    fn meta_rules() {
        let e = env();
        let n = Nominal::base(0);
        let g = CtxExpr::var("G");
        let mut s = Sequent::new(Formula::imp(
            Formula::atom(g.clone().with(n.clone(), tp()), Term::cst("empty"), tm()),
            Formula::atom(g.clone(), Term::cst("empty"), tm()),
        ));
        s.support.insert(n.clone());
        s.ctxvars.push(("G".into(), CtxVarEntry { avoid: [n.clone()].into_iter().collect(), ty: CtxVarType::new("c") }));
        assert!(apply_rule(&e, &s, &RuleApp::LfStr).unwrap().premises.is_empty());
        let mut w = s.clone();
        w.goal = Formula::imp(Formula::atom(g.clone(), Term::cst("empty"), tm()), Formula::atom(g.clone().with(n.clone(), tp()), Term::cst("empty"), tm()));
        assert!(apply_rule(&e, &w, &RuleApp::LfWk).unwrap().premises.is_empty());
        w.ctxvars[0].1.avoid.clear();
        assert!(apply_rule(&e, &w, &RuleApp::LfWk).is_err());
    }
}
