//! A checking session: the loaded signature and schemas, proved theorems,
//! and the proof in progress. The script checker, the REPL and the JSON
//! protocol all drive a `Session` and render goals through the same views.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use lflogic_core::logic::Formula;
use lflogic_core::sequent::{Env, Sequent, SequentError};
use lflogic_core::syntax::{Arity, Nominal};
use lflogic_core::tactics::{Goal, ProofState, Tactic, TacticError, DEFAULT_SEARCH_DEPTH};

use crate::elab::{self, Elab, ElabError, Scope};
use crate::lexer::{SyntaxError, Token};
use crate::parser::{parse_script, parse_signature, Command, Located, Parser, RTactic};

/// Errors surfaced to the user by a session.
#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Elab(#[from] ElabError),
    #[error("{0}")]
    Tactic(#[from] TacticError),
    #[error("{0}")]
    Sequent(#[from] SequentError),
    #[error("no proof in progress")]
    NoProof,
    #[error("the current proof is complete; start a new theorem")]
    ProofComplete,
    #[error("a theorem named `{0}` already exists")]
    DuplicateTheorem(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// One assumption as shown to the user.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypView {
    pub name: String,
    pub rendering: String,
}

/// One open goal as shown to the user.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoalView {
    pub gid: usize,
    pub rendering: String,
    pub hyps: Vec<HypView>,
    pub nominals: String,
    pub vars: String,
    pub ctxvars: Vec<String>,
}

impl GoalView {
    pub fn of(g: &Goal) -> GoalView {
        let s = &g.seq;
        GoalView {
            gid: g.id,
            rendering: s.goal.to_string(),
            hyps: s.hyps.iter().map(|h| HypView { name: h.name.clone(), rendering: h.formula.to_string() }).collect(),
            nominals: s.render_support(),
            vars: s.render_vars(),
            ctxvars: s.ctxvars.iter().map(|(g, e)| Sequent::render_ctxvar(g, e)).collect(),
        }
    }
}

/// The outcome of one theorem in a checked script.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremResult {
    pub name: String,
    pub proved: bool,
    pub message: Option<String>,
}

/// The outcome of checking a script.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScriptReport {
    pub theorems: Vec<TheoremResult>,
    /// Errors outside any theorem (syntax errors, bad schema declarations).
    pub errors: Vec<String>,
}

impl ScriptReport {
    pub fn success(&self) -> bool {
        self.errors.is_empty() && self.theorems.iter().all(|t| t.proved)
    }
}

/// What a successfully executed command did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Declared(String),
    Started(String),
    Progress,
    Proved(String),
}

/// Mutable state shared by all front ends.
pub struct Session {
    pub env: Env,
    pub theorems: BTreeMap<String, Formula>,
    pub proof: Option<ProofState>,
    pub search_depth: usize,
    pub trace: bool,
    statement: Option<Formula>,
    trace_lines: Vec<String>,
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

impl Session {
    pub fn new() -> Session {
        Session {
            env: Env::default(),
            theorems: BTreeMap::new(),
            proof: None,
            search_depth: DEFAULT_SEARCH_DEPTH,
            trace: false,
            statement: None,
            trace_lines: vec![],
        }
    }

    /// Replaces the signature; schemas, theorems and the current proof are
    /// discarded because they may mention the old constants.
    pub fn load_signature(&mut self, src: &str) -> Result<(), SessionError> {
        let sig = elab::signature(&parse_signature(src)?)?;
        self.env = Env::new(sig);
        self.theorems.clear();
        self.proof = None;
        Ok(())
    }

    /// Loads a file: `.lfs` files are signatures, anything else a script.
    /// A script may leave its last theorem unfinished for interactive use.
    pub fn load_path(&mut self, path: &Path) -> Result<ScriptReport, SessionError> {
        let src = std::fs::read_to_string(path).map_err(|e| SessionError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        if path.extension().is_some_and(|e| e == "lfs") {
            self.load_signature(&src)?;
            Ok(ScriptReport::default())
        } else {
            Ok(self.run_script(&src, true))
        }
    }

    /// Trace lines produced since the last call.
    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace_lines)
    }

    fn schema_names(&self) -> BTreeSet<String> {
        self.env.schemas.keys().cloned().collect()
    }

    /// The goals of the proof in progress, current goal first.
    pub fn goals(&self) -> Vec<GoalView> {
        self.proof.as_ref().map_or_else(Vec::new, |p| p.goals.iter().map(GoalView::of).collect())
    }

    /// The text shown by the REPL for the current state.
    pub fn display(&self) -> String {
        let Some(p) = &self.proof else {
            return "No proof in progress.\n".to_string();
        };
        let mut out = String::new();
        if p.goals.is_empty() {
            let _ = writeln!(out, "Proof of {} completed.", p.name);
            return out;
        }
        let _ = writeln!(out, "{}: {} subgoal{} remaining.", p.name, p.goals.len(), if p.goals.len() == 1 { "" } else { "s" });
        let _ = writeln!(out);
        let _ = writeln!(out, "Subgoal {}:", p.goals[0].id);
        let _ = writeln!(out, "{}", p.goals[0].seq);
        for g in &p.goals[1..] {
            let _ = writeln!(out);
            let _ = writeln!(out, "Subgoal {} is:", g.id);
            let _ = writeln!(out, "  {}", g.seq.goal);
        }
        out
    }

    /// Parses and executes every command in `text`, stopping at the first
    /// failure.
    pub fn exec_text(&mut self, text: &str) -> Result<Vec<Outcome>, SessionError> {
        let mut out = Vec::new();
        for cmd in parse_script(text)? {
            out.push(self.exec(&cmd.cmd)?);
        }
        Ok(out)
    }

    /// Executes one command.
    pub fn exec(&mut self, cmd: &Command) -> Result<Outcome, SessionError> {
        match cmd {
            Command::Schema { name, blocks } => {
                let c = Elab::new(&self.env.sig).schema(name, blocks)?;
                self.env.schemas.insert(name.clone(), c);
                Ok(Outcome::Declared(name.clone()))
            }
            Command::Theorem { name, formula } => {
                if self.theorems.contains_key(name) {
                    return Err(SessionError::DuplicateTheorem(name.clone()));
                }
                let f = Elab::new(&self.env.sig).formula(&Scope::new(), &self.schema_names(), formula)?;
                let mut p = ProofState::new(&self.env, name, f.clone(), self.theorems.clone())?;
                p.search_depth = self.search_depth;
                self.proof = Some(p);
                self.statement = Some(f);
                Ok(Outcome::Started(name.clone()))
            }
            Command::Undo => {
                let p = self.proof.as_mut().ok_or(SessionError::NoProof)?;
                let was_complete = p.is_complete();
                p.undo()?;
                if was_complete {
                    self.theorems.remove(&p.name);
                }
                Ok(Outcome::Progress)
            }
            Command::Tactic(rt) => {
                let p = self.proof.as_ref().ok_or(SessionError::NoProof)?;
                let goal = p.current().ok_or(SessionError::ProofComplete)?;
                let t = self.elab_tactic(&goal.seq, rt)?;
                let p = self.proof.as_mut().expect("checked above");
                let log_len = p.log.len();
                p.run(&self.env, &t)?;
                if self.trace {
                    for e in &p.log[log_len..] {
                        let produced: Vec<String> = e.produced.iter().map(|g| g.to_string()).collect();
                        self.trace_lines.push(format!("goal {}: {} -> [{}]", e.goal, e.step, produced.join(", ")));
                    }
                }
                if p.is_complete() {
                    let (name, f) = (p.name.clone(), self.proved_statement());
                    self.theorems.insert(name.clone(), f);
                    return Ok(Outcome::Proved(name));
                }
                Ok(Outcome::Progress)
            }
        }
    }

    fn proved_statement(&self) -> Formula {
        self.statement.clone().expect("a theorem is in progress")
    }

    /// Checks a whole script. The first failing command of a theorem aborts
    /// that theorem and checking resumes at the next one. With
    /// `allow_open`, a final unfinished theorem is left in progress instead
    /// of being reported as a failure.
    pub fn run_script(&mut self, src: &str, allow_open: bool) -> ScriptReport {
        let mut report = ScriptReport::default();
        let cmds = match parse_script(src) {
            Ok(c) => c,
            Err(e) => {
                // Run the commands before the syntax error so that their
                // theorems are still reported.
                let prefix = truncate_before(src, e.line);
                let mut r = self.run_script(&prefix, false);
                r.errors.push(format!("syntax error at {}", e));
                return r;
            }
        };
        let mut skipping = false;
        let finish = |s: &mut Session, report: &mut ScriptReport, skipping: bool| {
            if let Some(p) = &s.proof {
                if !skipping && !p.is_complete() {
                    let msg = format!("proof incomplete: {} subgoal(s) remain", p.goals.len());
                    report.theorems.push(TheoremResult { name: p.name.clone(), proved: false, message: Some(msg) });
                }
            }
            s.proof = None;
        };
        for Located { cmd, line, text } in &cmds {
            match cmd {
                Command::Theorem { name, .. } => {
                    finish(self, &mut report, skipping);
                    skipping = false;
                    if let Err(e) = self.exec(cmd) {
                        report.theorems.push(TheoremResult { name: name.clone(), proved: false, message: Some(format!("line {}: {}", line, e)) });
                        skipping = true;
                    }
                }
                Command::Schema { .. } => {
                    if let Err(e) = self.exec(cmd) {
                        report.errors.push(format!("line {}: {}", line, e));
                    }
                }
                Command::Tactic(_) | Command::Undo => {
                    if skipping {
                        continue;
                    }
                    match self.exec(cmd) {
                        Ok(Outcome::Proved(name)) => report.theorems.push(TheoremResult { name, proved: true, message: None }),
                        Ok(_) => {}
                        Err(e) => {
                            let msg = format!("line {}: `{}` failed: {}", line, text, e);
                            match &self.proof {
                                Some(p) => report.theorems.push(TheoremResult { name: p.name.clone(), proved: false, message: Some(msg) }),
                                None => report.errors.push(msg),
                            }
                            skipping = true;
                        }
                    }
                }
            }
        }
        let open = self.proof.as_ref().is_some_and(|p| !p.is_complete());
        if !(allow_open && open && !skipping) {
            finish(self, &mut report, skipping);
        }
        report
    }

    fn scope_of(seq: &Sequent) -> Scope {
        Scope { vars: seq.vars.iter().cloned().collect(), ctxvars: seq.ctx_dom() }
    }

    /// Elaborates a tactic against the current goal.
    fn elab_tactic(&self, seq: &Sequent, rt: &RTactic) -> Result<Tactic, SessionError> {
        let e = Elab::new(&self.env.sig);
        let scope = Session::scope_of(seq);
        Ok(match rt {
            RTactic::Intros(ns) => Tactic::Intros(ns.clone()),
            RTactic::Induction(k) => Tactic::Induction(*k),
            RTactic::Case { hyp, keep } => Tactic::Case { hyp: hyp.clone(), keep: *keep },
            RTactic::Apply { hyp, args, with } => {
                let f = match seq.hyp(hyp) {
                    Some(h) => h.formula.clone(),
                    None => self.theorems.get(hyp).cloned().ok_or_else(|| TacticError::Unknown(hyp.clone()))?,
                };
                let binders = prefix_binders(&f);
                let (mut terms, mut ctxs) = (vec![], vec![]);
                for (x, toks) in with {
                    match binders.iter().find(|(y, _)| y == x) {
                        Some((_, Binder::Ctx)) => ctxs.push((x.clone(), e.ctx(&scope, &parse_all(toks, |p| p.ctx())?)?)),
                        Some((_, Binder::Term(a))) => terms.push((x.clone(), e.term(&scope, &parse_all(toks, |p| p.term())?, a)?)),
                        None => return Err(TacticError::Other(format!("`{}` is not quantified in {}", x, hyp)).into()),
                    }
                }
                Tactic::Apply { hyp: hyp.clone(), args: args.clone(), terms, ctxs }
            }
            RTactic::Exists(t) => {
                let a = match &seq.goal {
                    Formula::Exists(_, a, _) => a.clone(),
                    _ => return Err(TacticError::Other("the goal is not an existential formula".into()).into()),
                };
                Tactic::Exists(e.term(&scope, t, &a)?)
            }
            RTactic::Search(d) => Tactic::Search(*d),
            RTactic::Split => Tactic::Split,
            RTactic::Left => Tactic::Left,
            RTactic::Right => Tactic::Right,
            RTactic::Assert(f) => Tactic::Assert(e.formula(&scope, &self.schema_names(), f)?),
            RTactic::Clear(h) => Tactic::Clear(h.clone()),
            RTactic::Weaken { hyp, ty } => Tactic::Weaken { hyp: hyp.clone(), ty: e.ty(&scope, ty)? },
            RTactic::Strengthen { hyp } => Tactic::Strengthen { hyp: hyp.clone() },
            RTactic::Permute { hyp, pos } => Tactic::Permute { hyp: hyp.clone(), pos: *pos },
            RTactic::Inst { hyp, nominal, term } => {
                let n = Nominal::parse(nominal).ok_or_else(|| ElabError::NotNominal(nominal.clone()))?;
                let a = n.arity.clone();
                Tactic::Inst { hyp: hyp.clone(), nominal: n, term: e.term(&scope, term, &a)? }
            }
        })
    }
}

enum Binder {
    Ctx,
    Term(Arity),
}

/// The names quantified in the prefix of a formula, through implications.
fn prefix_binders(f: &Formula) -> Vec<(String, Binder)> {
    let mut out = Vec::new();
    let mut cur = f;
    loop {
        match cur {
            Formula::Ctx(g, _, b) => {
                out.push((g.clone(), Binder::Ctx));
                cur = b;
            }
            Formula::All(x, a, b) => {
                out.push((x.clone(), Binder::Term(a.clone())));
                cur = b;
            }
            Formula::Imp(_, b) => cur = b,
            _ => return out,
        }
    }
}

fn parse_all<T>(toks: &[Token], f: impl FnOnce(&mut Parser) -> Result<T, SyntaxError>) -> Result<T, SyntaxError> {
    let mut p = Parser::from_tokens(toks.to_vec());
    let v = f(&mut p)?;
    if !p.at_eof() {
        let t = &toks[toks.len() - 1];
        return Err(SyntaxError { line: t.line, col: t.col, msg: "unexpected trailing input".into() });
    }
    Ok(v)
}

/// The lines of `src` strictly before `line`.
fn truncate_before(src: &str, line: usize) -> String {
    src.lines().take(line.saturating_sub(1)).collect::<Vec<_>>().join("\n")
}
