//! Soundness and covering of pattern unification on planted problems: a
//! random pattern equation system is built together with a known solution
//! `σ`; the unifier must return a unifier `θ` of which `σ` is an instance.

use lflogic_core::fixtures::stlc;
use lflogic_core::oracle::arity_terms;
use lflogic_core::subst::*;
use lflogic_core::syntax::*;
use lflogic_core::unify::{solve, Equation, Problem, Unified};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::*;

fn ooo() -> Arity {
    Arity::arrow(Arity::O, oo())
}

/// The flexible variables of every planted problem.
fn flex_vars() -> Vec<(String, Arity)> {
    vec![("X".into(), Arity::O), ("Y".into(), oo()), ("W".into(), ooo())]
}

struct PatternGen<'a> {
    rng: &'a mut StdRng,
    counter: usize,
}

impl PatternGen<'_> {
    fn atom(&mut self, atoms: &[Head]) -> Term {
        Term::App(atoms.choose(self.rng).expect("atoms").clone(), vec![])
    }

    fn flex(&mut self, atoms: &[Head]) -> Term {
        let mut picks: Vec<Head> = atoms.to_vec();
        picks.shuffle(self.rng);
        let arg = |h: &Head| Term::App(h.clone(), vec![]);
        match self.rng.gen_range(0..3) {
            0 => Term::var("X"),
            1 => Term::app(Head::var("Y"), vec![arg(&picks[0])]),
            _ if picks.len() >= 2 => Term::app(Head::var("W"), vec![arg(&picks[0]), arg(&picks[1])]),
            _ => Term::app(Head::var("Y"), vec![arg(&picks[0])]),
        }
    }

    /// A term in which flexible variables are applied only to distinct
    /// nominal constants and bound variables.
    fn term(&mut self, depth: usize, atoms: &mut Vec<Head>) -> Term {
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        if leaf {
            return match self.rng.gen_range(0..4) {
                0 => c(if self.rng.gen_bool(0.5) { "unit" } else { "empty" }),
                1 => self.atom(atoms),
                _ => self.flex(atoms),
            };
        }
        match self.rng.gen_range(0..3) {
            0 => app("app", vec![self.term(depth - 1, atoms), self.term(depth - 1, atoms)]),
            1 => app("arr", vec![self.term(depth - 1, atoms), self.term(depth - 1, atoms)]),
            _ => {
                self.counter += 1;
                let y = format!("y{}", self.counter);
                let ty = self.term(depth - 1, atoms);
                atoms.push(Head::var(&y));
                let body = self.term(depth - 1, atoms);
                atoms.pop();
                app("lam", vec![ty, Term::lam(&y, body)])
            }
        }
    }
}

/// A closed solution for the flexible variables, mentioning no nominal
/// constant except through the variables' own arguments.
fn planted_solution(rng: &mut StdRng) -> Subst {
    let consts = const_heads();
    let with = |names: &[&str]| {
        let mut hs = consts.clone();
        hs.extend(names.iter().map(|x| (Head::var(x), Arity::O)));
        arity_terms(&hs, &Arity::O, 3)
    };
    let xs = with(&[]);
    let ys: Vec<Term> = with(&["a"]).into_iter().map(|b| Term::lam("a", b)).collect();
    let ws: Vec<Term> = with(&["a", "b"]).into_iter().map(|b| Term::lam("a", Term::lam("b", b))).collect();
    let mut s = Subst::new();
    s.insert("X", xs.choose(rng).expect("terms").clone(), Arity::O);
    s.insert("Y", ys.choose(rng).expect("terms").clone(), oo());
    s.insert("W", ws.choose(rng).expect("terms").clone(), ooo());
    s
}

fn without(s: &Subst, x: &str) -> Subst {
    let mut out = Subst::new();
    for (h, m, a) in s.entries() {
        if !matches!(h, Head::Var(y) if y == x) {
            out.insert_head(h.clone(), m.clone(), a.clone());
        }
    }
    out
}

/// One planted problem and its known solution.
pub fn planted_problem(rng: &mut StdRng) -> (Problem, Subst) {
    let sigma = planted_solution(rng);
    let mut p = Problem::new();
    for (x, a) in flex_vars() {
        p = p.flex(&x, a);
    }
    let eqs = rng.gen_range(1..=2);
    let mut gen = PatternGen { rng, counter: 0 };
    for _ in 0..eqs {
        let mut atoms: Vec<Head> = (0..3).map(|i| Head::Nom(nom(i))).collect();
        let t = gen.term(3, &mut atoms);
        let partial = if gen.rng.gen_bool(0.5) {
            sigma.clone()
        } else {
            let drop = ["X", "Y", "W"].choose(gen.rng).expect("names");
            without(&sigma, drop)
        };
        let other = hsub_term(&partial, &t).expect("solutions are arity-correct");
        p = if gen.rng.gen_bool(0.5) { p.term_eq(t, other, Arity::O) } else { p.term_eq(other, t, Arity::O) };
    }
    (p, sigma)
}

fn check_planted(sig: &Signature, p: &Problem, sigma: &Subst) -> Result<(), String> {
    let sol = match solve(sig, p) {
        Unified::Unique(s) => s,
        other => return Err(format!("planted problem {:?} gave {:?}", p.eqs, other)),
    };
    // Soundness: θ equates both sides of every equation.
    for e in &p.eqs {
        let Equation::Term(l, r, _) = e else { continue };
        let l2 = hsub_term(&sol.theta, l).ok_or("θ undefined on a left side")?;
        let r2 = hsub_term(&sol.theta, r).ok_or("θ undefined on a right side")?;
        if !l2.alpha_eq(&r2) {
            return Err(format!("θ does not unify {} = {}: {} vs {}", l, r, l2, r2));
        }
    }
    // Covering: σ factors through θ.
    let mut q = Problem::new();
    for (x, a) in &sol.vars {
        q = q.flex(x, a.clone());
    }
    let mut targets = Vec::new();
    for (x, a) in flex_vars() {
        let want = sigma.get_var(&x).expect("σ is total").clone();
        let have = match sol.theta.get_var(&x) {
            Some(m) => m.clone(),
            None => {
                if !sol.vars.iter().any(|(y, _)| y == &x) {
                    q = q.flex(&x, a.clone());
                }
                eta_expand(&Head::var(&x), &a)
            }
        };
        targets.push((have.clone(), want.clone()));
        q = q.term_eq(have, want, a);
    }
    let rho = match solve(sig, &q) {
        Unified::Unique(s) => s,
        other => return Err(format!("the planted solution is not an instance of θ: {:?}", other)),
    };
    for (have, want) in targets {
        let got = hsub_term(&rho.theta, &have).ok_or("ρ undefined")?;
        if !got.alpha_eq(&want) {
            return Err(format!("ρ∘θ gives {} instead of {}", got, want));
        }
    }
    Ok(())
}

/// Problems outside the pattern fragment, each of which must be reported.
pub fn non_pattern_probes() -> Vec<(&'static str, Problem)> {
    let n = || Term::nom(nom(0));
    vec![
        (
            "repeated argument",
            Problem::new().flex("W", ooo()).term_eq(Term::app(Head::var("W"), vec![n(), n()]), app("app", vec![n(), n()]), Arity::O),
        ),
        ("constant argument", Problem::new().flex("Y", oo()).term_eq(Term::app(Head::var("Y"), vec![c("unit")]), c("unit"), Arity::O)),
        (
            "flexible argument",
            Problem::new().flex("X", Arity::O).flex("Y", oo()).term_eq(Term::app(Head::var("Y"), vec![Term::var("X")]), c("empty"), Arity::O),
        ),
    ]
}

/// Checks `count` planted problems and the non-pattern probes.
pub fn run(count: usize, seed: u64) -> Result<Vec<String>, String> {
    let sig = stlc();
    let mut r = rng(seed);
    for k in 0..count {
        let (p, sigma) = planted_problem(&mut r);
        check_planted(&sig, &p, &sigma).map_err(|e| format!("problem {}: {}", k, e))?;
    }
    let mut out = vec![format!("{} planted pattern problems solved soundly and covered", count)];
    for (name, p) in non_pattern_probes() {
        match solve(&sig, &p) {
            Unified::OutsideFragment(why) => out.push(format!("{}: outside the fragment ({})", name, why)),
            other => return Err(format!("{}: expected OutsideFragment, got {:?}", name, other)),
        }
    }
    Ok(out)
}
