//! Higher-order pattern unification over canonical terms.
//!
//! Flexible variables may be instantiated; every other head (constants,
//! nominal constants, rigid variables and locally bound variables) is rigid.
//! Within the pattern fragment, where each flexible variable is applied to
//! distinct nominal constants or bound variables, a problem has either no
//! solution or a single most general one, which is returned as a singleton
//! covering set. Problems that leave the fragment are reported rather than
//! approximated.

use std::collections::{BTreeMap, BTreeSet};

use crate::subst::*;
use crate::syntax::*;

/// One equation of a unification problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equation {
    Term(Term, Term, Arity),
    Type(Type, Type),
}

/// A unification problem: flexible variables in age order (older first),
/// rigid variables, and equations.
#[derive(Clone, Debug, Default)]
pub struct Problem {
    pub flex: Vec<(String, Arity)>,
    pub rigid: BTreeMap<String, Arity>,
    pub eqs: Vec<Equation>,
}

impl Problem {
    pub fn new() -> Problem {
        Problem::default()
    }
    pub fn flex(mut self, x: &str, a: Arity) -> Problem {
        self.flex.push((x.to_string(), a));
        self
    }
    pub fn rigid(mut self, x: &str, a: Arity) -> Problem {
        self.rigid.insert(x.to_string(), a);
        self
    }
    pub fn term_eq(mut self, s: Term, t: Term, a: Arity) -> Problem {
        self.eqs.push(Equation::Term(s, t, a));
        self
    }
    pub fn type_eq(mut self, a: Type, b: Type) -> Problem {
        self.eqs.push(Equation::Type(a, b));
        self
    }
}

/// A solution `⟨θ, Ψ′⟩`: the substitution for (some of) the flexible
/// variables and the arity context of the variables in its range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub theta: Subst,
    pub vars: Vec<(String, Arity)>,
}

/// Outcome of solving a problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unified {
    /// A most general solution; `[s]` is a covering set.
    Unique(Solution),
    /// The empty covering set.
    NoSolution,
    /// The problem is not a pattern problem; the payload describes why.
    OutsideFragment(String),
}

impl Unified {
    /// The covering set of solutions, if the problem was in the fragment.
    pub fn covering(&self) -> Option<Vec<Solution>> {
        match self {
            Unified::Unique(s) => Some(vec![s.clone()]),
            Unified::NoSolution => Some(vec![]),
            Unified::OutsideFragment(_) => None,
        }
    }
}

enum Fail {
    Clash,
    Outside(String),
}

type Step = Result<(), Fail>;

#[derive(Clone)]
struct Eqn {
    lhs: Term,
    rhs: Term,
    arity: Arity,
    env: Vec<(String, Arity)>,
}

struct FlexVar {
    arity: Arity,
    age: usize,
    bound: bool,
}

struct Unifier<'a> {
    sig: &'a Signature,
    rigid: &'a BTreeMap<String, Arity>,
    flex: BTreeMap<String, FlexVar>,
    theta: Vec<(String, Term, Arity)>,
    names: BTreeSet<String>,
    counter: usize,
    progress: bool,
}

/// Solves a unification problem.
pub fn solve(sig: &Signature, p: &Problem) -> Unified {
    let mut u = Unifier {
        sig,
        rigid: &p.rigid,
        flex: BTreeMap::new(),
        theta: Vec::new(),
        names: BTreeSet::new(),
        counter: 0,
        progress: false,
    };
    for (i, (x, a)) in p.flex.iter().enumerate() {
        u.flex.insert(x.clone(), FlexVar { arity: a.clone(), age: i * 2, bound: false });
        u.names.insert(x.clone());
    }
    u.names.extend(p.rigid.keys().cloned());
    let mut work = Vec::new();
    for e in &p.eqs {
        match e {
            Equation::Term(s, t, a) => {
                collect_names(s, &mut u.names);
                collect_names(t, &mut u.names);
                work.push(Eqn { lhs: s.clone(), rhs: t.clone(), arity: a.clone(), env: vec![] });
            }
            Equation::Type(a, b) => {
                if let Err(f) = u.type_eqs(a, b, &[], &mut work) {
                    return fail_to_outcome(f);
                }
            }
        }
    }
    match u.run(work) {
        Ok(()) => {}
        Err(f) => return fail_to_outcome(f),
    }
    let originals: BTreeSet<&String> = p.flex.iter().map(|(x, _)| x).collect();
    let mut theta = Subst::new();
    for (x, m, a) in &u.theta {
        if originals.contains(x) {
            theta.insert(x, m.clone(), a.clone());
        }
    }
    let rfv = theta.range_fv();
    let mut vars = Vec::new();
    let mut ordered: Vec<(&String, &FlexVar)> = u.flex.iter().filter(|(x, v)| !v.bound && rfv.contains(*x)).collect();
    ordered.sort_by_key(|(x, v)| (v.age, (*x).clone()));
    for (x, v) in ordered {
        vars.push((x.clone(), v.arity.clone()));
    }
    Unified::Unique(Solution { theta, vars })
}

fn fail_to_outcome(f: Fail) -> Unified {
    match f {
        Fail::Clash => Unified::NoSolution,
        Fail::Outside(s) => Unified::OutsideFragment(s),
    }
}

fn collect_names(m: &Term, out: &mut BTreeSet<String>) {
    match m {
        Term::Lam(x, b) => {
            out.insert(x.clone());
            collect_names(b, out);
        }
        Term::App(h, args) => {
            if let Head::Var(x) | Head::Const(x) = h {
                out.insert(x.clone());
            }
            for a in args {
                collect_names(a, out);
            }
        }
    }
}

/// Eta-contracts an argument to the head it stands for, if it is the
/// eta-expansion of a bare head.
pub fn eta_head(m: &Term) -> Option<Head> {
    let mut binders = Vec::new();
    let mut body = m;
    while let Term::Lam(x, b) = body {
        binders.push(x.clone());
        body = b;
    }
    match body {
        Term::App(h, args) => {
            if args.len() != binders.len() {
                return None;
            }
            if let Head::Var(x) = h {
                if binders.contains(x) {
                    return None;
                }
            }
            for (a, z) in args.iter().zip(&binders) {
                match eta_head(a) {
                    Some(Head::Var(y)) if &y == z => {}
                    _ => return None,
                }
            }
            Some(h.clone())
        }
        Term::Lam(..) => unreachable!(),
    }
}

impl Unifier<'_> {
    fn fresh_bound(&mut self) -> String {
        self.counter += 1;
        format!("#{}", self.counter)
    }

    fn fresh_var(&mut self, like: &str, arity: Arity, age: usize) -> String {
        let base = like.trim_start_matches('#');
        let names = &self.names;
        let flex = &self.flex;
        let x = fresh_name(base, |n| names.contains(n) || flex.contains_key(n));
        self.names.insert(x.clone());
        self.flex.insert(x.clone(), FlexVar { arity, age, bound: false });
        x
    }

    fn is_flex(&self, h: &Head, env: &[(String, Arity)]) -> Option<String> {
        match h {
            Head::Var(x) if !env.iter().any(|(y, _)| y == x) => match self.flex.get(x) {
                Some(v) if !v.bound => Some(x.clone()),
                _ => None,
            },
            _ => None,
        }
    }

    fn head_arity(&self, h: &Head, env: &[(String, Arity)]) -> Option<Arity> {
        match h {
            Head::Nom(n) => Some(n.arity.clone()),
            Head::Const(c) => self.sig.const_type(c).map(erase),
            Head::Var(x) => env
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, a)| a.clone())
                .or_else(|| self.rigid.get(x).cloned())
                .or_else(|| self.flex.get(x).map(|v| v.arity.clone())),
        }
    }

    fn is_atom(&self, h: &Head, env: &[(String, Arity)]) -> bool {
        match h {
            Head::Nom(_) => true,
            Head::Var(x) => env.iter().any(|(y, _)| y == x),
            Head::Const(_) => false,
        }
    }

    /// The atoms a flexible variable is applied to, if they form a pattern.
    fn pattern_args(&self, args: &[Term], env: &[(String, Arity)]) -> Option<Vec<Head>> {
        let mut out: Vec<Head> = Vec::new();
        for a in args {
            let h = eta_head(a)?;
            if !self.is_atom(&h, env) || out.contains(&h) {
                return None;
            }
            out.push(h);
        }
        Some(out)
    }

    fn type_eqs(&mut self, a: &Type, b: &Type, env: &[(String, Arity)], work: &mut Vec<Eqn>) -> Step {
        match (a, b) {
            (Type::Atom(c, xs), Type::Atom(d, ys)) => {
                if c != d || xs.len() != ys.len() {
                    return Err(Fail::Clash);
                }
                let doms = self.sig.family_kind(c).map(erase_kind).unwrap_or_default();
                if doms.len() != xs.len() {
                    return Err(Fail::Clash);
                }
                for ((x, y), al) in xs.iter().zip(ys).zip(doms) {
                    collect_names(x, &mut self.names);
                    collect_names(y, &mut self.names);
                    work.push(Eqn { lhs: x.clone(), rhs: y.clone(), arity: al, env: env.to_vec() });
                }
                Ok(())
            }
            (Type::Pi(x, a1, a2), Type::Pi(y, b1, b2)) => {
                self.type_eqs(a1, b1, env, work)?;
                let z = self.fresh_bound();
                let mut env2 = env.to_vec();
                env2.push((z.clone(), erase(a1)));
                let a2 = rename_var(&**a2, x, &z);
                let b2 = rename_var(&**b2, y, &z);
                self.type_eqs(&a2, &b2, &env2, work)
            }
            _ => Err(Fail::Clash),
        }
    }

    fn run(&mut self, mut work: Vec<Eqn>) -> Step {
        let mut postponed: Vec<Eqn> = Vec::new();
        loop {
            while let Some(e) = work.pop() {
                self.step(e, &mut work, &mut postponed)?;
            }
            if postponed.is_empty() {
                return Ok(());
            }
            if !self.progress {
                let e = &postponed[0];
                return Err(Fail::Outside(format!("{} = {} is not a pattern equation", e.lhs, e.rhs)));
            }
            self.progress = false;
            work = std::mem::take(&mut postponed);
            work.reverse();
        }
    }

    fn normalize(&self, m: &Term) -> Term {
        if self.theta.is_empty() {
            return m.clone();
        }
        let mut s = Subst::new();
        for (x, t, a) in &self.theta {
            s.insert(x, t.clone(), a.clone());
        }
        hsub_term(&s, m).expect("unifier bindings are arity-correct")
    }

    fn step(&mut self, e: Eqn, work: &mut Vec<Eqn>, postponed: &mut Vec<Eqn>) -> Step {
        let lhs = self.normalize(&e.lhs);
        let rhs = self.normalize(&e.rhs);
        if lhs.alpha_eq(&rhs) {
            return Ok(());
        }
        match (&e.arity, &lhs, &rhs) {
            (Arity::Arrow(a1, a2), Term::Lam(x, b1), Term::Lam(y, b2)) => {
                let z = self.fresh_bound();
                let mut env = e.env.clone();
                env.push((z.clone(), (**a1).clone()));
                work.push(Eqn { lhs: rename_var(&**b1, x, &z), rhs: rename_var(&**b2, y, &z), arity: (**a2).clone(), env });
                Ok(())
            }
            (Arity::O, Term::App(h1, as1), Term::App(h2, as2)) => {
                let env = &e.env;
                match (self.is_flex(h1, env), self.is_flex(h2, env)) {
                    (None, None) => {
                        if h1 != h2 || as1.len() != as2.len() {
                            return Err(Fail::Clash);
                        }
                        let ar = self.head_arity(h1, env).ok_or(Fail::Clash)?;
                        let (doms, _) = ar.parts();
                        for ((a, b), al) in as1.iter().zip(as2).zip(doms) {
                            work.push(Eqn { lhs: a.clone(), rhs: b.clone(), arity: al, env: env.clone() });
                        }
                        Ok(())
                    }
                    (Some(x), None) => match self.pattern_args(as1, env) {
                        Some(atoms) => self.solve_flex(&x, &atoms, &rhs, env),
                        None => {
                            postponed.push(Eqn { lhs, rhs, arity: e.arity, env: e.env });
                            Ok(())
                        }
                    },
                    (None, Some(y)) => match self.pattern_args(as2, env) {
                        Some(atoms) => self.solve_flex(&y, &atoms, &lhs, env),
                        None => {
                            postponed.push(Eqn { lhs, rhs, arity: e.arity, env: e.env });
                            Ok(())
                        }
                    },
                    (Some(x), Some(y)) => {
                        let pa = self.pattern_args(as1, env);
                        let pb = self.pattern_args(as2, env);
                        match (pa, pb) {
                            (Some(a), Some(b)) if x == y => self.flex_same(&x, &a, &b),
                            (Some(a), Some(b)) => self.flex_flex(&x, &a, &y, &b, env),
                            (Some(a), None) if x != y => self.solve_flex(&x, &a, &rhs, env),
                            (None, Some(b)) if x != y => self.solve_flex(&y, &b, &lhs, env),
                            _ => {
                                postponed.push(Eqn { lhs, rhs, arity: e.arity, env: e.env });
                                Ok(())
                            }
                        }
                    }
                }
            }
            _ => Err(Fail::Clash),
        }
    }

    fn bind(&mut self, x: &str, m: Term) {
        let v = self.flex.get_mut(x).expect("binding an unknown variable");
        assert!(!v.bound, "variable bound twice");
        v.bound = true;
        let a = v.arity.clone();
        let single = Subst::single(x, m.clone(), a.clone());
        for (_, t, _) in self.theta.iter_mut() {
            *t = hsub_term(&single, t).expect("unifier bindings are arity-correct");
        }
        self.theta.push((x.to_string(), m, a));
        self.progress = true;
    }

    fn atom_arity(&self, h: &Head, env: &[(String, Arity)]) -> Arity {
        self.head_arity(h, env).expect("atoms have arities")
    }

    /// `λys. body`, where the atoms are renamed to the binders `ys`.
    fn abstract_over(&mut self, atoms: &[Head], body: &Term) -> Term {
        let mut taken = BTreeSet::new();
        collect_names(body, &mut taken);
        taken.extend(self.names.iter().cloned());
        let mut ys: Vec<String> = Vec::new();
        for _ in atoms {
            let y = fresh_name("x", |n| taken.contains(n) || ys.iter().any(|z| z == n));
            ys.push(y);
        }
        let map: Vec<(Head, String)> = atoms.iter().cloned().zip(ys.iter().cloned()).collect();
        let renamed = body.map_heads(
            &|h, bound| {
                if let Head::Var(x) = h {
                    if bound.contains(x) {
                        return None;
                    }
                }
                map.iter().find(|(a, _)| a == h).map(|(_, y)| Head::Var(y.clone()))
            },
            &mut BTreeSet::new(),
        );
        let mut t = renamed;
        for y in ys.iter().rev() {
            t = Term::lam(y, t);
        }
        t
    }

    fn flex_same(&mut self, x: &str, a: &[Head], b: &[Head]) -> Step {
        if a == b {
            return Ok(());
        }
        let v = &self.flex[x];
        let (doms, res) = v.arity.parts();
        let age = v.age;
        let keep: Vec<usize> = (0..a.len()).filter(|&i| a[i] == b[i]).collect();
        let new_ar = Arity::from_parts(&keep.iter().map(|&i| doms[i].clone()).collect::<Vec<_>>(), res);
        let w = self.fresh_var(x, new_ar, age + 1);
        let body_binders = self.binder_names(a.len(), &w);
        let body = Term::app(Head::Var(w), keep.iter().map(|&i| eta_expand(&Head::Var(body_binders[i].clone()), &doms[i])).collect());
        let mut t = body;
        for y in body_binders.iter().rev() {
            t = Term::lam(y, t);
        }
        self.bind(x, t);
        Ok(())
    }

    fn flex_flex(&mut self, x: &str, a: &[Head], y: &str, b: &[Head], env: &[(String, Arity)]) -> Step {
        let sa: BTreeSet<&Head> = a.iter().collect();
        let sb: BTreeSet<&Head> = b.iter().collect();
        let (age_x, age_y) = (self.flex[x].age, self.flex[y].age);
        let a_in_b = sa.is_subset(&sb);
        let b_in_a = sb.is_subset(&sa);
        // Bind the variable whose arguments include the other's, preferring
        // to keep the older variable when either direction works.
        let bind_y = if a_in_b && b_in_a { age_y > age_x } else { a_in_b };
        if a_in_b || b_in_a {
            let (bound, bound_args, kept, kept_args) = if bind_y { (y, b, x, a) } else { (x, a, y, b) };
            let body = Term::app(Head::Var(kept.to_string()), kept_args.iter().map(|h| eta_expand(h, &self.atom_arity(h, env))).collect());
            let t = self.abstract_over(bound_args, &body);
            self.bind(bound, t);
            return Ok(());
        }
        let common: Vec<Head> = a.iter().filter(|h| sb.contains(h)).cloned().collect();
        let (older, age) = if age_x <= age_y { (x, age_x) } else { (y, age_y) };
        let res = self.flex[x].arity.parts().1;
        let w_ar = Arity::from_parts(&common.iter().map(|h| self.atom_arity(h, env)).collect::<Vec<_>>(), res);
        let w = self.fresh_var(older, w_ar, age + 1);
        let body = Term::app(Head::Var(w), common.iter().map(|h| eta_expand(h, &self.atom_arity(h, env))).collect());
        let tx = self.abstract_over(a, &body);
        let ty = self.abstract_over(b, &body);
        self.bind(x, tx);
        self.bind(y, ty);
        Ok(())
    }

    fn solve_flex(&mut self, x: &str, atoms: &[Head], t: &Term, env: &[(String, Arity)]) -> Step {
        let mut t = t.clone();
        // Prune until every atom in `t` is among the allowed ones.
        loop {
            if let Some(strict) = occurs(x, &t, &self.flex_names(), false) {
                return Err(if strict {
                    Fail::Clash
                } else {
                    Fail::Outside(format!("{} occurs under a flexible argument in {}", x, t))
                });
            }
            match self.prune(&t, atoms, env, &mut BTreeSet::new())? {
                true => t = self.normalize(&t),
                false => break,
            }
        }
        let m = self.abstract_over(atoms, &t);
        self.bind(x, m);
        Ok(())
    }

    fn binder_names(&self, k: usize, avoid: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for _ in 0..k {
            let y = fresh_name("x", |n| n == avoid || self.names.contains(n) || out.iter().any(|z| z == n));
            out.push(y);
        }
        out
    }

    fn flex_names(&self) -> BTreeSet<String> {
        self.flex.iter().filter(|(_, v)| !v.bound).map(|(x, _)| x.clone()).collect()
    }

    /// Checks the atoms of `t` against `allowed`; performs at most one
    /// pruning binding and reports whether it did.
    fn prune(&mut self, t: &Term, allowed: &[Head], env: &[(String, Arity)], local: &mut BTreeSet<String>) -> Result<bool, Fail> {
        match t {
            Term::Lam(x, b) => {
                let fresh = local.insert(x.clone());
                let r = self.prune(b, allowed, env, local);
                if fresh {
                    local.remove(x);
                }
                r
            }
            Term::App(h, args) => {
                let is_local = matches!(h, Head::Var(x) if local.contains(x));
                if !is_local {
                    if let Some(y) = self.is_flex(h, env) {
                        return self.prune_flex(&y, args, allowed, env, local);
                    }
                    if self.is_atom(h, env) && !allowed.contains(h) {
                        return Err(Fail::Clash);
                    }
                }
                for a in args {
                    if self.prune(a, allowed, env, local)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    fn prune_flex(&mut self, y: &str, args: &[Term], allowed: &[Head], env: &[(String, Arity)], local: &BTreeSet<String>) -> Result<bool, Fail> {
        let ok = |h: &Head| allowed.contains(h) || matches!(h, Head::Var(v) if local.contains(v));
        let mut drop = Vec::new();
        for (i, a) in args.iter().enumerate() {
            match eta_head(a) {
                Some(h) if self.is_atom(&h, env) || matches!(&h, Head::Var(v) if local.contains(v)) => {
                    if !ok(&h) {
                        drop.push(i);
                    }
                }
                _ => {
                    let mut bad = false;
                    for h in free_atoms(a, &|h| self.is_atom(h, env)) {
                        if !ok(&h) {
                            bad = true;
                        }
                    }
                    if bad {
                        return Err(Fail::Outside(format!("cannot prune the non-pattern argument {} of {}", a, y)));
                    }
                }
            }
        }
        if drop.is_empty() {
            return Ok(false);
        }
        let v = &self.flex[y];
        let (doms, res) = v.arity.parts();
        let age = v.age;
        let keep: Vec<usize> = (0..args.len()).filter(|i| !drop.contains(i)).collect();
        let new_ar = Arity::from_parts(&keep.iter().map(|&i| doms[i].clone()).collect::<Vec<_>>(), res);
        let w = self.fresh_var(y, new_ar, age + 1);
        let binders = self.binder_names(args.len(), &w);
        let mut t = Term::app(Head::Var(w), keep.iter().map(|&i| eta_expand(&Head::Var(binders[i].clone()), &doms[i])).collect());
        for b in binders.iter().rev() {
            t = Term::lam(b, t);
        }
        self.bind(y, t);
        Ok(true)
    }
}

/// Atom heads occurring free in `m`.
fn free_atoms(m: &Term, is_atom: &dyn Fn(&Head) -> bool) -> Vec<Head> {
    fn go(m: &Term, is_atom: &dyn Fn(&Head) -> bool, bound: &mut Vec<String>, out: &mut Vec<Head>) {
        match m {
            Term::Lam(x, b) => {
                bound.push(x.clone());
                go(b, is_atom, bound, out);
                bound.pop();
            }
            Term::App(h, args) => {
                let shadowed = matches!(h, Head::Var(x) if bound.contains(x));
                if !shadowed && is_atom(h) {
                    out.push(h.clone());
                }
                for a in args {
                    go(a, is_atom, bound, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(m, is_atom, &mut Vec::new(), &mut out);
    out
}

/// Whether `x` occurs in `m`; `Some(true)` if some occurrence is strict
/// (not inside the argument of a flexible variable).
fn occurs(x: &str, m: &Term, flex: &BTreeSet<String>, under_flex: bool) -> Option<bool> {
    match m {
        Term::Lam(y, b) => {
            if y == x {
                None
            } else {
                occurs(x, b, flex, under_flex)
            }
        }
        Term::App(h, args) => {
            let mut found: Option<bool> = None;
            if matches!(h, Head::Var(y) if y == x) {
                found = Some(!under_flex);
            }
            let inner_flex = under_flex || matches!(h, Head::Var(y) if flex.contains(y));
            for a in args {
                if let Some(s) = occurs(x, a, flex, inner_flex) {
                    found = Some(found.unwrap_or(false) || s);
                }
            }
            found
        }
    }
}
