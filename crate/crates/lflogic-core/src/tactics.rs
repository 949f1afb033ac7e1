//! Proof states and the tactic layer. Every tactic elaborates into a
//! sequence of checked rule applications; a tactic either succeeds as a
//! whole or leaves the state untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::logic::*;
use crate::prover::*;
use crate::sequent::*;
use crate::subst::*;
use crate::syntax::*;

/// Default bound on the depth of `search`.
pub const DEFAULT_SEARCH_DEPTH: usize = 5;

/// An open goal with a stable identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub id: usize,
    pub seq: Sequent,
}

/// A logged step: a rule application, or a goal closed by a proved lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Rule(RuleApp),
    Lemma(String),
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Rule(r) => write!(f, "{}", r),
            Step::Lemma(l) => write!(f, "lemma {}", l),
        }
    }
}

/// One entry of the rule-application log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub goal: usize,
    pub step: Step,
    pub produced: Vec<usize>,
}

/// The user-level proof commands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tactic {
    /// Introduces context quantifiers, universal quantifiers and
    /// antecedents; the optional names are given to the new assumptions.
    Intros(Vec<String>),
    /// Induction on the given (1-based) antecedent of the goal.
    Induction(usize),
    Case { hyp: String, keep: bool },
    /// `apply H to A1 ... An with x = t, ...`; `None` arguments are
    /// discharged by search.
    Apply { hyp: String, args: Vec<Option<String>>, terms: Vec<(String, Term)>, ctxs: Vec<(String, CtxExpr)> },
    Exists(Term),
    Search(Option<usize>),
    Split,
    Left,
    Right,
    Assert(Formula),
    Clear(String),
    Weaken { hyp: String, ty: Type },
    Strengthen { hyp: String },
    /// Exchanges the `pos`-th and following explicit binding (1-based).
    Permute { hyp: String, pos: usize },
    /// Instantiates the nominal `nominal` bound in the context of `hyp`.
    Inst { hyp: String, nominal: Nominal, term: Term },
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tactic::Intros(ns) if ns.is_empty() => write!(f, "intros."),
            Tactic::Intros(ns) => write!(f, "intros {}.", ns.join(" ")),
            Tactic::Induction(k) => write!(f, "induction on {}.", k),
            Tactic::Case { hyp, keep } => write!(f, "case {}{}.", hyp, if *keep { " (keep)" } else { "" }),
            Tactic::Apply { hyp, args, terms, ctxs } => {
                write!(f, "apply {}", hyp)?;
                if !args.is_empty() {
                    let a: Vec<&str> = args.iter().map(|a| a.as_deref().unwrap_or("_")).collect();
                    write!(f, " to {}", a.join(" "))?;
                }
                let mut w: Vec<String> = ctxs.iter().map(|(g, c)| format!("{} = {}", g, c)).collect();
                w.extend(terms.iter().map(|(x, t)| format!("{} = {}", x, t)));
                if !w.is_empty() {
                    write!(f, " with {}", w.join(", "))?;
                }
                write!(f, ".")
            }
            Tactic::Exists(t) => write!(f, "exists {}.", t),
            Tactic::Search(None) => write!(f, "search."),
            Tactic::Search(Some(d)) => write!(f, "search {}.", d),
            Tactic::Split => write!(f, "split."),
            Tactic::Left => write!(f, "left."),
            Tactic::Right => write!(f, "right."),
            Tactic::Assert(g) => write!(f, "assert {}.", g),
            Tactic::Clear(h) => write!(f, "clear {}.", h),
            Tactic::Weaken { hyp, ty } => write!(f, "weaken {} with {}.", hyp, ty),
            Tactic::Strengthen { hyp } => write!(f, "strengthen {}.", hyp),
            Tactic::Permute { hyp, pos } => write!(f, "permute {} at {}.", hyp, pos),
            Tactic::Inst { hyp, nominal, term } => write!(f, "inst {} with {} = {}.", hyp, nominal, term),
        }
    }
}

/// Tactic failures.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum TacticError {
    #[error("no goals remain")]
    NoGoals,
    #[error("{0}")]
    Rule(#[from] RuleError),
    #[error("no assumption or lemma named `{0}`")]
    Unknown(String),
    #[error("search failed on goal {gid}: {goal}")]
    SearchFailed { gid: usize, goal: String },
    #[error("cannot infer an instance for `{0}`; supply it with `with`")]
    CannotInfer(String),
    #[error("`{0}` does not match the antecedent `{1}`")]
    NoMatch(String, String),
    #[error("{0}")]
    Other(String),
    #[error("nothing to undo")]
    NothingToUndo,
}

#[derive(Clone, Debug)]
struct Snapshot {
    goals: Vec<Goal>,
    log_len: usize,
    next_gid: usize,
    next_index: u32,
}

/// The state of a proof in progress.
#[derive(Clone, Debug)]
pub struct ProofState {
    pub name: String,
    pub goals: Vec<Goal>,
    pub log: Vec<LogEntry>,
    pub lemmas: BTreeMap<String, Formula>,
    pub search_depth: usize,
    next_gid: usize,
    next_index: u32,
    history: Vec<Snapshot>,
}

impl ProofState {
    /// Starts a proof of a closed formula.
    pub fn new(env: &Env, name: &str, goal: Formula, lemmas: BTreeMap<String, Formula>) -> Result<ProofState, SequentError> {
        let seq = Sequent::new(goal);
        seq.wf(env)?;
        Ok(ProofState {
            name: name.to_string(),
            goals: vec![Goal { id: 0, seq }],
            log: vec![],
            lemmas,
            search_depth: DEFAULT_SEARCH_DEPTH,
            next_gid: 1,
            next_index: 1,
            history: vec![],
        })
    }

    pub fn is_complete(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn current(&self) -> Option<&Goal> {
        self.goals.first()
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot { goals: self.goals.clone(), log_len: self.log.len(), next_gid: self.next_gid, next_index: self.next_index }
    }

    fn restore(&mut self, s: Snapshot) {
        self.goals = s.goals;
        self.log.truncate(s.log_len);
        self.next_gid = s.next_gid;
        self.next_index = s.next_index;
    }

    /// Runs a tactic on the current goal, atomically.
    pub fn run(&mut self, env: &Env, t: &Tactic) -> Result<(), TacticError> {
        let before = self.snapshot();
        match self.run_inner(env, t) {
            Ok(()) => {
                self.history.push(before);
                Ok(())
            }
            Err(e) => {
                self.restore(before);
                Err(e)
            }
        }
    }

    /// Reverts the most recent successful tactic.
    pub fn undo(&mut self) -> Result<(), TacticError> {
        let s = self.history.pop().ok_or(TacticError::NothingToUndo)?;
        self.restore(s);
        Ok(())
    }

    /// Applies a rule to the goal at position `pos`, replacing it by the
    /// premises in order.
    pub fn step_at(&mut self, env: &Env, pos: usize, rule: RuleApp) -> Result<Applied, TacticError> {
        let goal = self.goals.get(pos).ok_or(TacticError::NoGoals)?.clone();
        let applied = apply_rule(env, &goal.seq, &rule)?;
        let mut produced = Vec::new();
        let mut new_goals = Vec::new();
        for p in &applied.premises {
            produced.push(self.next_gid);
            new_goals.push(Goal { id: self.next_gid, seq: p.clone() });
            self.next_gid += 1;
        }
        self.goals.splice(pos..pos + 1, new_goals);
        self.log.push(LogEntry { goal: goal.id, step: Step::Rule(rule), produced });
        Ok(applied)
    }

    pub fn step(&mut self, env: &Env, rule: RuleApp) -> Result<Applied, TacticError> {
        self.step_at(env, 0, rule)
    }

    fn current_seq(&self) -> Result<Sequent, TacticError> {
        Ok(self.current().ok_or(TacticError::NoGoals)?.seq.clone())
    }

    /// Closes the current goal, which must be a proved lemma's statement.
    fn close_by_lemma(&mut self, name: &str) -> Result<(), TacticError> {
        let goal = self.goals.first().ok_or(TacticError::NoGoals)?;
        let f = self.lemmas.get(name).ok_or_else(|| TacticError::Unknown(name.to_string()))?;
        if !formula_alpha_eq(f, &goal.seq.goal) {
            return Err(TacticError::Other(format!("goal is not the statement of lemma {}", name)));
        }
        let g = self.goals.remove(0);
        self.log.push(LogEntry { goal: g.id, step: Step::Lemma(name.to_string()), produced: vec![] });
        Ok(())
    }

    /// Closes the current goal by bounded search, or fails.
    fn search_current(&mut self, env: &Env, depth: usize) -> Result<(), TacticError> {
        let g = self.goals.first().ok_or(TacticError::NoGoals)?.clone();
        let steps = search(env, &g.seq, depth).ok_or_else(|| TacticError::SearchFailed { gid: g.id, goal: g.seq.goal.to_string() })?;
        let target = self.goals.len() - 1;
        for r in steps {
            self.step(env, r)?;
        }
        debug_assert_eq!(self.goals.len(), target);
        Ok(())
    }

    fn fresh_index(&mut self, seq: &Sequent) -> u32 {
        let used = seq.ann_indices();
        let mut i = self.next_index.max(used.iter().max().map_or(1, |m| m + 1));
        while used.contains(&i) {
            i += 1;
        }
        self.next_index = i + 1;
        i
    }

    fn run_inner(&mut self, env: &Env, t: &Tactic) -> Result<(), TacticError> {
        let seq = self.current_seq()?;
        match t {
            Tactic::Intros(names) => {
                let mut names = names.iter();
                let mut progressed = false;
                loop {
                    let goal = &self.current_seq()?.goal;
                    let rule = match goal {
                        Formula::Ctx(..) => RuleApp::CtxR,
                        Formula::All(..) => RuleApp::AllR,
                        Formula::Imp(..) => RuleApp::ImpR,
                        _ => break,
                    };
                    let a = self.step(env, rule)?;
                    progressed = true;
                    if let (Some(added), true) = (a.added, matches!(goal, Formula::Imp(..))) {
                        if let Some(n) = names.next() {
                            rename_hyp(&mut self.goals[0].seq, &added, n)?;
                        }
                    }
                }
                if !progressed {
                    return Err(TacticError::Other("nothing to introduce".into()));
                }
                Ok(())
            }
            Tactic::Induction(k) => {
                let index = self.fresh_index(&seq);
                self.step(env, RuleApp::Ind { position: *k, index })?;
                Ok(())
            }
            Tactic::Case { hyp, keep } => self.tac_case(env, &seq, hyp, *keep),
            Tactic::Apply { hyp, args, terms, ctxs } => self.tac_apply(env, hyp, args, terms, ctxs),
            Tactic::Exists(term) => {
                self.step(env, RuleApp::ExR { term: term.clone() })?;
                Ok(())
            }
            Tactic::Search(d) => self.search_current(env, d.unwrap_or(self.search_depth)),
            Tactic::Split => self.step(env, RuleApp::AndR).map(|_| ()),
            Tactic::Left => self.step(env, RuleApp::OrR { right: false }).map(|_| ()),
            Tactic::Right => self.step(env, RuleApp::OrR { right: true }).map(|_| ()),
            Tactic::Assert(f) => {
                self.step(env, RuleApp::Cut { formula: f.clone() })?;
                let depth = self.search_depth;
                let before = self.snapshot();
                if self.search_current(env, depth).is_err() {
                    self.restore(before);
                }
                Ok(())
            }
            Tactic::Clear(h) => self.step(env, RuleApp::Wk { hyp: h.clone() }).map(|_| ()),
            Tactic::Weaken { hyp, ty } => {
                let (g, m, a, ann) = atom_parts(&seq, hyp)?;
                let n = seq.fresh_nominal(&erase(ty));
                let mut avoid = BTreeMap::new();
                if let Some(v) = &g.var {
                    avoid.insert(v.clone(), [n.clone()].into_iter().collect::<BTreeSet<_>>());
                }
                self.step(env, RuleApp::CtxStr { noms: vec![n.clone()], vars: vec![], ctxvars: vec![], avoid })?;
                let target = Formula::atom(g.with(n, ty.clone()), m, a).with_ann(ann);
                self.use_meta(env, hyp, target, RuleApp::LfWk)
            }
            Tactic::Strengthen { hyp } => {
                let (mut g, m, a, ann) = atom_parts(&seq, hyp)?;
                if g.binds.pop().is_none() {
                    return Err(TacticError::Other(format!("{} has no explicit binding to remove", hyp)));
                }
                self.use_meta(env, hyp, Formula::atom(g, m, a).with_ann(ann), RuleApp::LfStr)
            }
            Tactic::Permute { hyp, pos } => {
                let (mut g, m, a, ann) = atom_parts(&seq, hyp)?;
                if *pos == 0 || pos + 1 > g.binds.len() {
                    return Err(TacticError::Other(format!("no bindings at positions {} and {}", pos, pos + 1)));
                }
                g.binds.swap(pos - 1, *pos);
                self.use_meta(env, hyp, Formula::atom(g, m, a).with_ann(ann), RuleApp::LfPerm)
            }
            Tactic::Inst { hyp, nominal, term } => {
                let (g, m, a, _) = atom_parts(&seq, hyp)?;
                let k = g.binds.iter().position(|(n, _)| n == nominal).ok_or_else(|| TacticError::Other(format!("{} is not bound in {}", nominal, hyp)))?;
                let err = || TacticError::Other("instantiation is undefined".into());
                let prefix = CtxExpr { var: g.var.clone(), binds: g.binds[..k].to_vec() };
                let b = g.binds[k].1.clone();
                let mut ctx3 = prefix.clone();
                for (n2, b2) in &g.binds[k + 1..] {
                    ctx3.binds.push((n2.clone(), subst_nominal_type(nominal, term, b2).ok_or_else(err)?));
                }
                let concl = Formula::atom(ctx3, subst_nominal_term(nominal, term, &m).ok_or_else(err)?, subst_nominal_type(nominal, term, &a).ok_or_else(err)?);
                let premise = Formula::atom(prefix, term.clone(), b);
                let f = seq.hyp(hyp).expect("checked").formula.clone();
                let meta = Formula::imp(f, Formula::imp(premise, concl));
                self.step(env, RuleApp::Cut { formula: meta })?;
                self.step(env, RuleApp::LfInst)?;
                self.imp_chain(env, vec![Some(hyp.clone()), None])
            }
        }
    }

    /// Proves `hyp => target` by a meta rule, then uses it on `hyp`.
    fn use_meta(&mut self, env: &Env, hyp: &str, target: Formula, rule: RuleApp) -> Result<(), TacticError> {
        let f = self.current_seq()?.hyp(hyp).ok_or_else(|| TacticError::Unknown(hyp.to_string()))?.formula.clone();
        self.step(env, RuleApp::Cut { formula: Formula::imp(f, target) })?;
        let n_before = self.goals.len();
        self.step(env, rule)?;
        let obligations = self.goals.len() + 1 - n_before;
        // Try to discharge the meta rule's obligations; leave the rest open.
        let mut pos = 0;
        for _ in 0..obligations {
            let before = self.snapshot();
            let g = self.goals[pos].clone();
            let done = match search(env, &g.seq, self.search_depth) {
                Some(steps) => {
                    let mut ok = true;
                    for r in steps {
                        if self.step_at(env, pos, r).is_err() {
                            ok = false;
                            break;
                        }
                    }
                    ok
                }
                None => false,
            };
            if !done {
                self.restore(before);
                pos += 1;
            }
        }
        let main = self.goals.remove(pos);
        self.goals.insert(0, main);
        self.imp_chain(env, vec![Some(hyp.to_string())])
    }

    /// Uses the assumption added last (the cut formula, an implication
    /// chain) on the current goal: each antecedent is closed by the named
    /// assumption or by search.
    fn imp_chain(&mut self, env: &Env, args: Vec<Option<String>>) -> Result<(), TacticError> {
        let seq = self.current_seq()?;
        let cur = seq.hyps.last().ok_or(TacticError::NoGoals)?.name.clone();
        self.use_antecedents(env, cur, args.into_iter().map(|a| (a, false)).collect())
    }

    fn use_antecedents(&mut self, env: &Env, mut cur: String, args: Vec<(Option<String>, bool)>) -> Result<(), TacticError> {
        for (arg, keep) in args {
            let a = self.step(env, RuleApp::ImpL { hyp: cur.clone(), keep })?;
            self.close_antecedent(env, arg.as_deref())?;
            cur = a.added.expect("imp-L adds the consequent");
        }
        Ok(())
    }

    fn close_antecedent(&mut self, env: &Env, arg: Option<&str>) -> Result<(), TacticError> {
        match arg {
            Some(h) => {
                let s = self.current_seq()?;
                let f = &s.hyp(h).ok_or_else(|| TacticError::Unknown(h.to_string()))?.formula;
                let pi = find_perm(&s, f, &s.goal).ok_or_else(|| TacticError::NoMatch(h.to_string(), s.goal.to_string()))?;
                self.step(env, RuleApp::Id { hyp: h.to_string(), pi })?;
                Ok(())
            }
            None => self.search_current(env, self.search_depth),
        }
    }

    fn tac_case(&mut self, env: &Env, seq: &Sequent, hyp: &str, keep: bool) -> Result<(), TacticError> {
        let f = seq.hyp(hyp).ok_or_else(|| TacticError::Unknown(hyp.to_string()))?.formula.clone();
        match f {
            Formula::Atom { term: Term::Lam(..), .. } => self.step(env, RuleApp::AtmAbsL { hyp: hyp.to_string() }).map(|_| ()),
            Formula::Atom { .. } => {
                // To keep the analysed assumption, first cut in `F /\ true`,
                // which survives the analysis, and unpack it in every case.
                let kept = if keep {
                    let a = self.step(env, RuleApp::Cut { formula: Formula::and(f.clone(), Formula::Top) })?;
                    self.step(env, RuleApp::AndR)?;
                    self.step(env, RuleApp::Id { hyp: hyp.to_string(), pi: Permutation::identity() })?;
                    self.step(env, RuleApp::TopR)?;
                    Some(a.added.expect("cut adds its formula"))
                } else {
                    None
                };
                let seq = self.current_seq()?;
                let n_before = self.goals.len();
                self.step(env, RuleApp::AtmAppL { hyp: hyp.to_string() })?;
                let produced = self.goals.len() + 1 - n_before;
                let old: BTreeSet<String> = seq.hyps.iter().map(|h| h.name.clone()).collect();
                for pos in 0..produced {
                    loop {
                        let s = &self.goals[pos].seq;
                        let next = s.hyps.iter().find(|h| {
                            !old.contains(&h.name) && matches!(&h.formula, Formula::Atom { term: Term::Lam(..), ty: Type::Pi(..), .. })
                        });
                        match next {
                            Some(h) => {
                                let h = h.name.clone();
                                self.step_at(env, pos, RuleApp::AtmAbsL { hyp: h })?;
                            }
                            None => break,
                        }
                    }
                }
                if let Some(k) = kept {
                    for pos in 0..produced {
                        let a = self.step_at(env, pos, RuleApp::AndL { hyp: k.clone(), right: false, keep: false })?;
                        if let Some(added) = a.added {
                            if added != hyp && self.goals[pos].seq.hyp(hyp).is_none() {
                                rename_hyp(&mut self.goals[pos].seq, &added, hyp)?;
                            }
                        }
                    }
                }
                Ok(())
            }
            Formula::And(..) => {
                self.step(env, RuleApp::AndL { hyp: hyp.to_string(), right: false, keep: true })?;
                self.step(env, RuleApp::AndL { hyp: hyp.to_string(), right: true, keep })?;
                Ok(())
            }
            Formula::Or(..) => self.step(env, RuleApp::OrL { hyp: hyp.to_string() }).map(|_| ()),
            Formula::Exists(..) => self.step(env, RuleApp::ExL { hyp: hyp.to_string() }).map(|_| ()),
            Formula::Bot => self.step(env, RuleApp::BotL { hyp: hyp.to_string() }).map(|_| ()),
            Formula::Top => self.step(env, RuleApp::Wk { hyp: hyp.to_string() }).map(|_| ()),
            other => Err(TacticError::Other(format!("cannot do case analysis on `{}`", other))),
        }
    }

    fn tac_apply(&mut self, env: &Env, hyp: &str, args: &[Option<String>], terms: &[(String, Term)], ctxs: &[(String, CtxExpr)]) -> Result<(), TacticError> {
        let seq = self.current_seq()?;
        let (mut cur, mut keep) = if seq.hyp(hyp).is_some() {
            (hyp.to_string(), true)
        } else if let Some(f) = self.lemmas.get(hyp).cloned() {
            let a = self.step(env, RuleApp::Cut { formula: f })?;
            self.close_by_lemma(hyp)?;
            (a.added.expect("cut adds its formula"), false)
        } else {
            return Err(TacticError::Unknown(hyp.to_string()));
        };
        let seq = self.current_seq()?;
        let f = seq.hyp(&cur).expect("present").formula.clone();
        let plan = plan_apply(&seq, &f, args, terms, ctxs)?;
        let mut arg_iter = args.iter();
        for step in plan {
            let a = match step {
                PlanStep::Ctx(g) => self.step(env, RuleApp::CtxL { hyp: cur.clone(), ctx: g, keep })?,
                PlanStep::All(t) => self.step(env, RuleApp::AllL { hyp: cur.clone(), term: t, keep })?,
                PlanStep::Imp => {
                    let a = self.step(env, RuleApp::ImpL { hyp: cur.clone(), keep })?;
                    let arg = arg_iter.next().cloned().flatten();
                    self.close_antecedent(env, arg.as_deref())?;
                    a
                }
            };
            cur = a.added.expect("left rules add a formula");
            keep = false;
        }
        Ok(())
    }
}

fn rename_hyp(seq: &mut Sequent, from: &str, to: &str) -> Result<(), TacticError> {
    if from == to {
        return Ok(());
    }
    if seq.hyp(to).is_some() {
        return Err(TacticError::Other(format!("an assumption named {} already exists", to)));
    }
    if let Some(h) = seq.hyps.iter_mut().find(|h| h.name == from) {
        h.name = to.to_string();
    }
    Ok(())
}

fn atom_parts(seq: &Sequent, hyp: &str) -> Result<(CtxExpr, Term, Type, Ann), TacticError> {
    match seq.hyp(hyp).map(|h| &h.formula) {
        Some(Formula::Atom { ctx, term, ty, ann }) => Ok((ctx.clone(), term.clone(), ty.clone(), *ann)),
        Some(f) => Err(TacticError::Other(format!("`{}` is not atomic", f))),
        None => Err(TacticError::Unknown(hyp.to_string())),
    }
}

enum PlanStep {
    Ctx(CtxExpr),
    All(Term),
    Imp,
}

/// Pattern variable bindings found while matching antecedents.
#[derive(Default)]
struct Bindings {
    terms: BTreeMap<String, Option<Term>>,
    ctxs: BTreeMap<String, Option<CtxExpr>>,
}

fn pattern_name(x: &str) -> String {
    format!("?{}", x)
}

/// Works out the instantiations of an `apply`: quantified variables are
/// renamed apart and then determined by matching the antecedents against
/// the given assumptions (modulo a permutation of explicit bindings).
fn plan_apply(seq: &Sequent, f: &Formula, args: &[Option<String>], terms: &[(String, Term)], ctxs: &[(String, CtxExpr)]) -> Result<Vec<PlanStep>, TacticError> {
    enum Raw {
        Ctx(String),
        All(String),
        Imp(Formula),
    }
    let mut raw = Vec::new();
    let mut arities = BTreeMap::new();
    let mut b = Bindings::default();
    let mut cur = f.clone();
    loop {
        cur = match cur {
            Formula::Ctx(g, _, body) => {
                let p = pattern_name(&g);
                let mut sigma = CtxSubst::new();
                sigma.insert(g.clone(), CtxExpr::var(&p));
                b.ctxs.insert(p.clone(), ctxs.iter().find(|(h, _)| h == &g).map(|(_, c)| c.clone()));
                raw.push(Raw::Ctx(p));
                ctxsubst_formula(&sigma, &body)
            }
            Formula::All(x, a, body) => {
                let p = pattern_name(&x);
                b.terms.insert(p.clone(), terms.iter().find(|(y, _)| y == &x).map(|(_, t)| t.clone()));
                arities.insert(p.clone(), a);
                raw.push(Raw::All(p.clone()));
                rename_formula_var(&body, &x, &p)
            }
            Formula::Imp(a, body) if raw.iter().filter(|r| matches!(r, Raw::Imp(_))).count() < args.len() => {
                raw.push(Raw::Imp(*a));
                *body
            }
            _ => break,
        };
    }
    let n_imps = raw.iter().filter(|r| matches!(r, Raw::Imp(_))).count();
    if n_imps != args.len() {
        return Err(TacticError::Other(format!("expected {} arguments, found {}", n_imps, args.len())));
    }
    // Match the antecedents against the given assumptions.
    let mut k = 0;
    for r in &raw {
        if let Raw::Imp(ant) = r {
            if let Some(h) = &args[k] {
                let hf = &seq.hyp(h).ok_or_else(|| TacticError::Unknown(h.clone()))?.formula;
                let inst = instantiate_pattern(&b, &arities, ant)?;
                if !match_formula(&mut b, &inst, hf) {
                    return Err(TacticError::NoMatch(h.clone(), ant.to_string()));
                }
            }
            k += 1;
        }
    }
    let mut plan = Vec::new();
    for r in raw {
        plan.push(match r {
            Raw::Ctx(p) => PlanStep::Ctx(b.ctxs[&p].clone().ok_or_else(|| TacticError::CannotInfer(p[1..].to_string()))?),
            Raw::All(p) => PlanStep::All(b.terms[&p].clone().ok_or_else(|| TacticError::CannotInfer(p[1..].to_string()))?),
            Raw::Imp(_) => PlanStep::Imp,
        });
    }
    Ok(plan)
}

fn instantiate_pattern(b: &Bindings, arities: &BTreeMap<String, Arity>, f: &Formula) -> Result<Formula, TacticError> {
    let mut s = Subst::new();
    for (x, t) in &b.terms {
        if let Some(t) = t {
            s.insert(x, t.clone(), arities[x].clone());
        }
    }
    let mut sigma = CtxSubst::new();
    for (g, c) in &b.ctxs {
        if let Some(c) = c {
            sigma.insert(g.clone(), c.clone());
        }
    }
    let f = ctxsubst_formula(&sigma, f);
    hsub_formula(&s, &f).ok_or_else(|| TacticError::Other("instantiation is undefined".into()))
}

fn is_pattern(x: &str) -> bool {
    x.starts_with('?')
}

/// Matches pattern `p` (with `?`-variables) against the assumption `f`,
/// first aligning the explicit bindings of their contexts.
fn match_formula(b: &mut Bindings, p: &Formula, f: &Formula) -> bool {
    match (p, f) {
        (Formula::Atom { ctx: gp, term: mp, ty: ap, .. }, Formula::Atom { ctx: gf, .. }) => {
            let k = gp.binds.len();
            if gf.binds.len() < k {
                return false;
            }
            let (prefix, tail) = gf.binds.split_at(gf.binds.len() - k);
            match &gp.var {
                Some(v) if is_pattern(v) => {
                    if b.ctxs.get(v).is_some_and(|c| c.is_some()) {
                        return false;
                    }
                    b.ctxs.insert(v.clone(), Some(CtxExpr { var: gf.var.clone(), binds: prefix.to_vec() }));
                    let pairs: Vec<(Nominal, Nominal)> = tail.iter().zip(&gp.binds).map(|((a, _), (c, _))| (a.clone(), c.clone())).collect();
                    let Some(pi) = Permutation::complete(&pairs) else { return false };
                    let Formula::Atom { ctx: gf2, term: mf, ty: af, .. } = f.permute(&pi) else { unreachable!() };
                    let tail2 = &gf2.binds[gf2.binds.len() - k..];
                    tail2.iter().zip(&gp.binds).all(|((_, t1), (_, t2))| match_type(b, t2, t1, &mut vec![])) && match_term(b, mp, &mf, &mut vec![]) && match_type(b, ap, &af, &mut vec![])
                }
                _ => {
                    if gp.var != gf.var || gp.binds.len() != gf.binds.len() {
                        return false;
                    }
                    let pairs: Vec<(Nominal, Nominal)> = gf.binds.iter().zip(&gp.binds).map(|((a, _), (c, _))| (a.clone(), c.clone())).collect();
                    let Some(pi) = Permutation::complete(&pairs) else { return false };
                    let Formula::Atom { ctx: gf2, term: mf, ty: af, .. } = f.permute(&pi) else { unreachable!() };
                    gf2.binds.iter().zip(&gp.binds).all(|((_, t1), (_, t2))| match_type(b, t2, t1, &mut vec![])) && match_term(b, mp, &mf, &mut vec![]) && match_type(b, ap, &af, &mut vec![])
                }
            }
        }
        (Formula::Top, Formula::Top) | (Formula::Bot, Formula::Bot) => true,
        (Formula::Imp(a, c), Formula::Imp(x, y)) | (Formula::And(a, c), Formula::And(x, y)) | (Formula::Or(a, c), Formula::Or(x, y)) => match_formula(b, a, x) && match_formula(b, c, y),
        _ => formula_alpha_eq(&p.erase_ann(), &f.erase_ann()),
    }
}

fn match_term(b: &mut Bindings, p: &Term, t: &Term, env: &mut Vec<(String, String)>) -> bool {
    match (p, t) {
        (Term::App(Head::Var(x), args), _) if is_pattern(x) => {
            if !args.is_empty() {
                // Applied pattern variables are left to `with` or to the final check.
                return true;
            }
            let fv = t.fv();
            if env.iter().any(|(_, y)| fv.contains(y)) {
                return false;
            }
            match b.terms.get(x) {
                Some(Some(bound)) => bound.alpha_eq(t),
                _ => {
                    b.terms.insert(x.clone(), Some(t.clone()));
                    true
                }
            }
        }
        (Term::Lam(x, m), Term::Lam(y, n)) => {
            env.push((x.clone(), y.clone()));
            let r = match_term(b, m, n, env);
            env.pop();
            r
        }
        (Term::App(h1, a1), Term::App(h2, a2)) => {
            let heads = match (h1, h2) {
                (Head::Var(x), Head::Var(y)) => match env.iter().rev().find(|(a, c)| a == x || c == y) {
                    Some((a, c)) => a == x && c == y,
                    None => x == y,
                },
                _ => h1 == h2,
            };
            heads && a1.len() == a2.len() && a1.iter().zip(a2).all(|(m, n)| match_term(b, m, n, env))
        }
        _ => false,
    }
}

fn match_type(b: &mut Bindings, p: &Type, t: &Type, env: &mut Vec<(String, String)>) -> bool {
    match (p, t) {
        (Type::Atom(c1, a1), Type::Atom(c2, a2)) => c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(m, n)| match_term(b, m, n, env)),
        (Type::Pi(x, a1, b1), Type::Pi(y, a2, b2)) => {
            if !match_type(b, a1, a2, env) {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let r = match_type(b, b1, b2, env);
            env.pop();
            r
        }
        _ => false,
    }
}

/// Bounded proof search using the axiom rule (modulo permutations),
/// `true`, the right rules for atomic formulas, and weakening away unused
/// trailing bindings. Returns the rule applications in pre-order.
pub fn search(env: &Env, seq: &Sequent, depth: usize) -> Option<Vec<RuleApp>> {
    if matches!(seq.goal, Formula::Top) {
        return Some(vec![RuleApp::TopR]);
    }
    for h in &seq.hyps {
        if let Some(pi) = find_perm(seq, &h.formula, &seq.goal) {
            return Some(vec![RuleApp::Id { hyp: h.name.clone(), pi }]);
        }
    }
    if depth == 0 {
        return None;
    }
    let Formula::Atom { ctx, term, ty, ann } = &seq.goal else { return None };
    let try_rule = |rule: RuleApp| -> Option<Vec<RuleApp>> {
        let a = apply_rule(env, seq, &rule).ok()?;
        let mut out = vec![rule];
        for p in &a.premises {
            out.extend(search(env, p, depth - 1)?);
        }
        Some(out)
    };
    match (term, ty) {
        (Term::Lam(..), Type::Pi(..)) => {
            if let Some(r) = try_rule(RuleApp::AtmAbsR) {
                return Some(r);
            }
        }
        (Term::App(..), Type::Atom(..)) => {
            if let Some(r) = try_rule(RuleApp::AtmAppR) {
                return Some(r);
            }
        }
        _ => {}
    }
    if !ctx.binds.is_empty() {
        let mut smaller = ctx.clone();
        smaller.binds.pop();
        let weaker = Formula::atom(smaller, term.clone(), ty.clone()).with_ann(*ann);
        let wk = Formula::imp(weaker, seq.goal.clone());
        let cut = RuleApp::Cut { formula: wk };
        let a = apply_rule(env, seq, &cut).ok()?;
        let (p1, p2) = (&a.premises[0], &a.premises[1]);
        let mut out = vec![cut];
        let lf = apply_rule(env, p1, &RuleApp::LfWk).ok()?;
        out.push(RuleApp::LfWk);
        for p in &lf.premises {
            out.extend(search(env, p, depth - 1)?);
        }
        let imp = RuleApp::ImpL { hyp: a.added.clone()?, keep: false };
        let b = apply_rule(env, p2, &imp).ok()?;
        out.push(imp);
        out.extend(search(env, &b.premises[0], depth - 1)?);
        out.push(RuleApp::Id { hyp: b.added?, pi: Permutation::identity() });
        return Some(out);
    }
    None
}
