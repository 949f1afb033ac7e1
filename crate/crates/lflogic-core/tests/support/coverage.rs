//! Coverage of case analysis: for planted derivations `d : of e t` in
//! concrete instances of the context schema, the analysis of the generic
//! assumption `{G ⊢ D : of E T}@1` must have a branch that, after renaming
//! nominal constants and instantiating its variables, describes `d`, and
//! whose typing obligations all hold with heights below that of `d`.

use std::collections::BTreeSet;

use lflogic_core::cases::all_cases;
use lflogic_core::logic::*;
use lflogic_core::oracle::{enumerate_terms, lf_height, oracle_valid};
use lflogic_core::schemas::CtxVarType;
use lflogic_core::sequent::*;
use lflogic_core::subst::*;
use lflogic_core::syntax::*;
use lflogic_core::unify::{solve, Problem, Unified};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::*;

/// A planted instance: a closed schema instance and a derivation in it.
#[derive(Clone, Debug)]
pub struct Planted {
    pub ctx: CtxExpr,
    pub d: Term,
    pub e: Term,
    pub t: Term,
    pub height: usize,
}

/// A random closed instance of the schema with `blocks` blocks.
fn schema_instance(rng: &mut StdRng, blocks: usize) -> CtxExpr {
    let u = || c("unit");
    let tps = [u(), app("arr", vec![u(), u()]), app("arr", vec![app("arr", vec![u(), u()]), u()]), app("arr", vec![u(), app("arr", vec![u(), u()])])];
    let start = rng.gen_range(3..6);
    let mut g = CtxExpr::empty();
    for k in 0..blocks as u32 {
        let x = nom(start + 2 * k);
        let y = nom(start + 1 + 2 * k);
        let t = tps.choose(rng).expect("types").clone();
        g = g.with(x.clone(), tm()).with(y, of(Term::nom(x), t));
    }
    g
}

/// Planted derivations, distinct up to the context, in random order.
pub fn planted(rng: &mut StdRng, count: usize) -> Vec<Planted> {
    let env = env();
    let sig = &env.sig;
    let tps = enumerate_terms(sig, &LfCtx::new(), &tp(), 3);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for round in 0..40 {
        let g = schema_instance(rng, round % 4);
        let lf = g.to_lf();
        for e in enumerate_terms(sig, &lf, &tm(), 4) {
            for t in &tps {
                for d in enumerate_terms(sig, &lf, &of(e.clone(), t.clone()), 9) {
                    let key = format!("{} | {}", g, d);
                    if seen.insert(key) {
                        let height = lf_height(sig, &lf, &d, &of(e.clone(), t.clone())).expect("enumerated terms check");
                        out.push(Planted { ctx: g.clone(), d, e: e.clone(), t: t.clone(), height });
                    }
                }
            }
        }
    }
    out.shuffle(rng);
    // Take derivations round-robin by head so every kind of case is exercised.
    let head = |p: &Planted| match &p.d {
        Term::App(Head::Nom(_), _) => "block".to_string(),
        Term::App(h, _) => h.to_string(),
        Term::Lam(..) => "lam".to_string(),
    };
    let mut groups: std::collections::BTreeMap<String, Vec<Planted>> = Default::default();
    for p in out {
        groups.entry(head(&p)).or_default().push(p);
    }
    let mut mixed = Vec::new();
    while mixed.len() < count && groups.values().any(|g| !g.is_empty()) {
        for g in groups.values_mut() {
            if let Some(p) = g.pop() {
                mixed.push(p);
            }
        }
    }
    mixed.truncate(count);
    mixed
}

fn generic_sequent() -> Sequent {
    let atom = || Formula::atom(CtxExpr::var("G"), Term::var("D"), of(Term::var("E"), Term::var("T")));
    let mut s = Sequent::new(atom());
    s.vars = vec![("D".into(), Arity::O), ("E".into(), Arity::O), ("T".into(), Arity::O)];
    s.ctxvars.push(("G".into(), CtxVarEntry { avoid: BTreeSet::new(), ty: CtxVarType::new("c") }));
    s.add_hyp_named("H", atom().with_ann(Ann::At(1)));
    s
}

/// All injections of `from` into `to` respecting arities.
fn injections(from: &[Nominal], to: &[Nominal]) -> Vec<Vec<(Nominal, Nominal)>> {
    let Some((first, rest)) = from.split_first() else { return vec![vec![]] };
    let mut out = Vec::new();
    for target in to.iter().filter(|n| n.arity == first.arity) {
        for mut tail in injections(rest, to) {
            if tail.iter().any(|(_, b)| b == target) {
                continue;
            }
            tail.insert(0, (first.clone(), target.clone()));
            out.push(tail);
        }
    }
    out
}

/// Whether case sequent `s` describes the planted derivation `p`; the
/// obligations listed in `obligations` must then hold strictly below the
/// planted height.
fn matches(env: &Env, s: &Sequent, obligations: &[String], p: &Planted) -> bool {
    let Some(entry) = s.ctx_entry("G") else { return false };
    let Formula::Atom { term, ty, .. } = &s.goal else { return false };
    let support: Vec<Nominal> = s.support.iter().cloned().collect();
    let targets: Vec<Nominal> = p.ctx.binds.iter().map(|(n, _)| n.clone()).collect();
    for pairs in injections(&support, &targets) {
        let Some(pi) = Permutation::complete(&pairs) else { continue };
        // Nominal constants of the instance that the case does not name may
        // still occur in the instances of its variables: they stand for
        // rigid unknowns during matching.
        let named: BTreeSet<Nominal> = s.support.iter().map(|n| pi.apply(n)).collect();
        let mut hide = Subst::new();
        let mut back = Subst::new();
        for (k, n) in targets.iter().filter(|n| !named.contains(*n)).enumerate() {
            let r = format!("r{}", k);
            hide.insert_head(Head::Nom(n.clone()), Term::var(&r), Arity::O);
            back.insert(&r, Term::nom(n.clone()), Arity::O);
        }
        let hidden_ty = |a: &Type| hsub_type(&hide, a).expect("renaming nominals is defined");
        let hidden = |m: &Term| hsub_term(&hide, m).expect("renaming nominals is defined");
        let mut problem = Problem::new();
        for (x, a) in &s.vars {
            problem = problem.flex(x, a.clone());
        }
        for k in 0..back.len() {
            problem = problem.rigid(&format!("r{}", k), Arity::O);
        }
        let mut ok = true;
        for (n, b) in entry.ty.blocks.iter().flatten() {
            match p.ctx.lookup(&pi.apply(n)) {
                Some(target) => problem = problem.type_eq(b.permute(&pi), hidden_ty(target)),
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        problem = problem.term_eq(term.permute(&pi), hidden(&p.d), Arity::O).type_eq(ty.permute(&pi), hidden_ty(&of(p.e.clone(), p.t.clone())));
        let Unified::Unique(sol) = solve(&env.sig, &problem) else { continue };
        let mut sigma = CtxSubst::new();
        sigma.insert("G".into(), p.ctx.clone());
        let ups = HeightAssignment::new(0).update(1, p.height);
        let all_hold = obligations.iter().all(|name| {
            let f = &s.hyp(name).expect("obligation is an assumption").formula;
            let Some(inst) = hsub_formula(&sol.theta, &f.permute(&pi)).and_then(|g| hsub_formula(&back, &g)) else { return false };
            let closed = ctxsubst_formula(&sigma, &inst);
            matches!(oracle_valid(&env.sig, &closed, &ups), Ok(true))
        });
        if all_hold {
            return true;
        }
    }
    false
}

/// Checks `count` planted instances.
pub fn run(count: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let env = env();
    let instances = planted(&mut r, count);
    if instances.len() < count {
        return Err(format!("only {} planted instances could be generated", instances.len()));
    }
    let seq = generic_sequent();
    let cases = all_cases(&env, &seq, "H").map_err(|e| e.to_string())?;
    // Context blocks are made explicit one at a time; instances with
    // several blocks are matched against every block position.
    let mut heads = BTreeSet::new();
    for p in &instances {
        let found = cases.iter().find(|c| matches(&env, &c.seq, &c.obligations, p));
        match found {
            Some(c) => {
                heads.insert(match &c.head {
                    Head::Nom(_) => "block".to_string(),
                    h => h.to_string(),
                });
            }
            None => return Err(format!("no case matches {} ⊢ {} : of {} {}", p.ctx, p.d, render(&p.e), render(&p.t))),
        }
    }
    Ok(format!("{} planted derivations matched by {} cases (heads: {})", instances.len(), cases.len(), heads.into_iter().collect::<Vec<_>>().join(", ")))
}

fn render(m: &Term) -> String {
    render_arg(m)
}
