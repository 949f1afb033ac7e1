//! Smoke test of every inference rule against the oracle: on a small
//! concrete instance, valid premises must give a valid conclusion; and a
//! deliberately violating instance of each rule must be rejected.
//!
//! Instances are closed and quantifier-free where the rule allows it; the
//! quantifier, context and induction rules are evaluated with the bounded
//! evaluator, which ranges over small terms and context instances.

use std::collections::{BTreeMap, BTreeSet};

use lflogic_core::logic::*;
use lflogic_core::oracle::{sequent_valid, Bounds};
use lflogic_core::prover::{apply_rule, RuleApp, RuleId};
use lflogic_core::sequent::*;
use lflogic_core::subst::Permutation;
use lflogic_core::syntax::*;

use super::gen::*;

struct Instance {
    id: RuleId,
    seq: Sequent,
    app: RuleApp,
    bad_seq: Sequent,
    bad_app: RuleApp,
}

fn at(g: CtxExpr, m: Term, a: Type) -> Formula {
    Formula::atom(g, m, a)
}

fn e() -> CtxExpr {
    CtxExpr::empty()
}

/// `{· ⊢ empty : tm}`, valid.
fn fa() -> Formula {
    at(e(), c("empty"), tm())
}

/// `{· ⊢ unit : tp}`, valid.
fn fb() -> Formula {
    at(e(), c("unit"), tp())
}

/// `{· ⊢ unit : tm}`, invalid.
fn ff() -> Formula {
    at(e(), c("unit"), tm())
}

fn idfun() -> Term {
    Term::lam("x", Term::var("x"))
}

fn tmtm() -> Type {
    Type::arrow(tm(), tm())
}

fn unitunit() -> Term {
    app("arr", vec![c("unit"), c("unit")])
}

fn seq(support: &[u32], hyps: Vec<Formula>, goal: Formula) -> Sequent {
    let mut s = Sequent::new(goal);
    s.support = support.iter().map(|i| nom(*i)).collect();
    for h in hyps {
        s.add_hyp(h);
    }
    s
}

fn h1() -> String {
    "H1".to_string()
}

fn n0() -> Nominal {
    nom(0)
}

fn instances() -> Vec<Instance> {
    use RuleId as R;
    let g_n_tm = || e().with(n0(), tm());
    let ctx_c = |body: Formula| Formula::ctx("G", "c", body);
    let loop_x = || Formula::imp(at(e(), Term::var("x"), tm()), at(e(), Term::var("x"), tm()));
    vec![
        Instance { id: R::Wk, seq: seq(&[], vec![fa()], fb()), app: RuleApp::Wk { hyp: h1() }, bad_seq: seq(&[], vec![fa()], fb()), bad_app: RuleApp::Wk { hyp: "H9".into() } },
        Instance { id: R::Cont, seq: seq(&[], vec![fa()], fa()), app: RuleApp::Cont { hyp: h1() }, bad_seq: seq(&[], vec![], fa()), bad_app: RuleApp::Cont { hyp: h1() } },
        Instance {
            id: R::CtxStr,
            seq: seq(&[], vec![], fa()),
            app: RuleApp::CtxStr { noms: vec![n0()], vars: vec![], ctxvars: vec![], avoid: BTreeMap::new() },
            bad_seq: seq(&[0], vec![], fa()),
            bad_app: RuleApp::CtxStr { noms: vec![n0()], vars: vec![], ctxvars: vec![], avoid: BTreeMap::new() },
        },
        Instance {
            id: R::CtxWk,
            seq: seq(&[0], vec![], fa()),
            app: RuleApp::CtxWk { noms: vec![n0()], vars: vec![], ctxvars: vec![] },
            bad_seq: seq(&[0], vec![], at(g_n_tm(), Term::nom(n0()), tm())),
            bad_app: RuleApp::CtxWk { noms: vec![n0()], vars: vec![], ctxvars: vec![] },
        },
        Instance {
            id: R::Id,
            seq: seq(&[], vec![fa()], fa()),
            app: RuleApp::Id { hyp: h1(), pi: Permutation::identity() },
            bad_seq: seq(&[], vec![fb()], fa()),
            bad_app: RuleApp::Id { hyp: h1(), pi: Permutation::identity() },
        },
        Instance {
            id: R::Cut,
            seq: seq(&[], vec![], fa()),
            app: RuleApp::Cut { formula: fb() },
            bad_seq: seq(&[], vec![], fa()),
            bad_app: RuleApp::Cut { formula: at(e(), c("nonexistent"), tm()) },
        },
        Instance { id: R::TopR, seq: seq(&[], vec![], Formula::Top), app: RuleApp::TopR, bad_seq: seq(&[], vec![], fa()), bad_app: RuleApp::TopR },
        Instance { id: R::BotL, seq: seq(&[], vec![Formula::Bot], ff()), app: RuleApp::BotL { hyp: h1() }, bad_seq: seq(&[], vec![fa()], ff()), bad_app: RuleApp::BotL { hyp: h1() } },
        Instance { id: R::AndR, seq: seq(&[], vec![], Formula::and(fa(), fb())), app: RuleApp::AndR, bad_seq: seq(&[], vec![], fa()), bad_app: RuleApp::AndR },
        Instance {
            id: R::AndL,
            seq: seq(&[], vec![Formula::and(fa(), fb())], fb()),
            app: RuleApp::AndL { hyp: h1(), right: true, keep: false },
            bad_seq: seq(&[], vec![fa()], fb()),
            bad_app: RuleApp::AndL { hyp: h1(), right: true, keep: false },
        },
        Instance {
            id: R::OrR,
            seq: seq(&[], vec![], Formula::or(ff(), fa())),
            app: RuleApp::OrR { right: true },
            bad_seq: seq(&[], vec![], fa()),
            bad_app: RuleApp::OrR { right: true },
        },
        Instance {
            id: R::OrL,
            seq: seq(&[], vec![Formula::or(fa(), fb())], Formula::or(fa(), fb())),
            app: RuleApp::OrL { hyp: h1() },
            bad_seq: seq(&[], vec![fa()], fa()),
            bad_app: RuleApp::OrL { hyp: h1() },
        },
        Instance { id: R::ImpR, seq: seq(&[], vec![], Formula::imp(fa(), fa())), app: RuleApp::ImpR, bad_seq: seq(&[], vec![], fa()), bad_app: RuleApp::ImpR },
        Instance {
            id: R::ImpL,
            seq: seq(&[], vec![Formula::imp(fa(), fb()), fa()], fb()),
            app: RuleApp::ImpL { hyp: h1(), keep: false },
            bad_seq: seq(&[], vec![fa()], fb()),
            bad_app: RuleApp::ImpL { hyp: h1(), keep: false },
        },
        Instance {
            id: R::AllR,
            seq: seq(&[], vec![], Formula::all("x", Arity::O, loop_x())),
            app: RuleApp::AllR,
            bad_seq: seq(&[], vec![], fa()),
            bad_app: RuleApp::AllR,
        },
        Instance {
            id: R::AllL,
            seq: seq(&[], vec![Formula::all("x", Arity::O, loop_x())], Formula::imp(fa(), fa())),
            app: RuleApp::AllL { hyp: h1(), term: c("empty"), keep: false },
            bad_seq: seq(&[], vec![Formula::all("x", Arity::O, loop_x())], Formula::imp(fa(), fa())),
            bad_app: RuleApp::AllL { hyp: h1(), term: idfun(), keep: false },
        },
        Instance {
            id: R::ExR,
            seq: seq(&[], vec![], Formula::exists("x", Arity::O, at(e(), Term::var("x"), tm()))),
            app: RuleApp::ExR { term: c("empty") },
            bad_seq: seq(&[], vec![], Formula::exists("x", Arity::O, at(e(), Term::var("x"), tm()))),
            bad_app: RuleApp::ExR { term: idfun() },
        },
        Instance {
            id: R::ExL,
            seq: seq(&[], vec![Formula::exists("x", Arity::O, at(e(), Term::var("x"), tm()))], Formula::exists("y", Arity::O, at(e(), Term::var("y"), tm()))),
            app: RuleApp::ExL { hyp: h1() },
            bad_seq: seq(&[], vec![fa()], fa()),
            bad_app: RuleApp::ExL { hyp: h1() },
        },
        Instance {
            id: R::CtxR,
            seq: seq(&[], vec![], ctx_c(at(CtxExpr::var("G"), c("empty"), tm()))),
            app: RuleApp::CtxR,
            bad_seq: seq(&[], vec![], fa()),
            bad_app: RuleApp::CtxR,
        },
        Instance {
            id: R::CtxL,
            seq: seq(&[], vec![ctx_c(at(CtxExpr::var("G"), c("empty"), tm()))], fa()),
            app: RuleApp::CtxL { hyp: h1(), ctx: e(), keep: false },
            bad_seq: seq(&[0], vec![ctx_c(at(CtxExpr::var("G"), c("empty"), tm()))], fa()),
            bad_app: RuleApp::CtxL { hyp: h1(), ctx: e().with(n0(), tp()), keep: false },
        },
        Instance {
            id: R::AtmAppL,
            seq: seq(&[], vec![at(e(), c("of_empty"), of(c("empty"), c("unit")))], fa()),
            app: RuleApp::AtmAppL { hyp: h1() },
            bad_seq: seq(&[], vec![Formula::Top], fa()),
            bad_app: RuleApp::AtmAppL { hyp: h1() },
        },
        Instance {
            id: R::AtmAppR,
            seq: seq(&[], vec![], at(e(), unitunit(), tp())),
            app: RuleApp::AtmAppR,
            bad_seq: seq(&[], vec![], at(e(), unitunit(), tm())),
            bad_app: RuleApp::AtmAppR,
        },
        Instance {
            id: R::AtmAbsL,
            seq: seq(&[], vec![at(e(), idfun(), tmtm())], fa()),
            app: RuleApp::AtmAbsL { hyp: h1() },
            bad_seq: seq(&[], vec![fa()], fa()),
            bad_app: RuleApp::AtmAbsL { hyp: h1() },
        },
        Instance {
            id: R::AtmAbsR,
            seq: seq(&[], vec![], at(e(), idfun(), tmtm())),
            app: RuleApp::AtmAbsR,
            bad_seq: seq(&[], vec![], at(e(), idfun(), tm())),
            bad_app: RuleApp::AtmAbsR,
        },
        Instance {
            id: R::AtmAppLAnn,
            seq: seq(&[], vec![at(e(), c("of_empty"), of(c("empty"), c("unit"))).with_ann(Ann::At(1))], fa()),
            app: RuleApp::AtmAppL { hyp: h1() },
            bad_seq: seq(&[], vec![at(e(), idfun(), tmtm()).with_ann(Ann::At(1))], fa()),
            bad_app: RuleApp::AtmAppL { hyp: h1() },
        },
        Instance {
            id: R::AtmAppRAnn,
            seq: seq(&[], vec![at(e(), unitunit(), tp()).with_ann(Ann::At(1))], at(e(), unitunit(), tp()).with_ann(Ann::At(1))),
            app: RuleApp::AtmAppR,
            bad_seq: seq(&[], vec![at(e(), unitunit(), tp()).with_ann(Ann::At(1))], at(e(), unitunit(), tp()).with_ann(Ann::Star(1))),
            bad_app: RuleApp::AtmAppR,
        },
        Instance {
            id: R::AtmAbsLAnn,
            seq: seq(&[], vec![at(e(), idfun(), tmtm()).with_ann(Ann::At(1))], fa()),
            app: RuleApp::AtmAbsL { hyp: h1() },
            bad_seq: seq(&[], vec![fa().with_ann(Ann::At(1))], fa()),
            bad_app: RuleApp::AtmAbsL { hyp: h1() },
        },
        Instance {
            id: R::AtmAbsRAnn,
            seq: seq(&[], vec![at(e(), idfun(), tmtm()).with_ann(Ann::At(1))], at(e(), idfun(), tmtm()).with_ann(Ann::At(1))),
            app: RuleApp::AtmAbsR,
            bad_seq: seq(&[], vec![at(e(), idfun(), tmtm()).with_ann(Ann::At(1))], at(e(), idfun(), tmtm()).with_ann(Ann::Star(1))),
            bad_app: RuleApp::AtmAbsR,
        },
        Instance {
            id: R::Ind,
            seq: seq(&[], vec![], Formula::imp(fa(), fa())),
            app: RuleApp::Ind { position: 1, index: 1 },
            bad_seq: seq(&[], vec![], Formula::imp(fa(), fa())),
            bad_app: RuleApp::Ind { position: 2, index: 1 },
        },
        Instance {
            id: R::LfWk,
            seq: seq(&[0], vec![], Formula::imp(fa(), at(e().with(n0(), tp()), c("empty"), tm()))),
            app: RuleApp::LfWk,
            bad_seq: seq(&[0], vec![], Formula::imp(fa(), at(e().with(n0(), tp()), c("unit"), tm()))),
            bad_app: RuleApp::LfWk,
        },
        Instance {
            id: R::LfStr,
            seq: seq(&[0], vec![], Formula::imp(at(e().with(n0(), tp()), c("empty"), tm()), fa())),
            app: RuleApp::LfStr,
            bad_seq: seq(&[0], vec![], Formula::imp(at(g_n_tm(), Term::nom(n0()), tm()), at(e(), Term::nom(n0()), tm()))),
            bad_app: RuleApp::LfStr,
        },
        Instance {
            id: R::LfPerm,
            seq: seq(&[0, 1], vec![], Formula::imp(at(e().with(n0(), tm()).with(nom(1), tp()), c("empty"), tm()), at(e().with(nom(1), tp()).with(n0(), tm()), c("empty"), tm()))),
            app: RuleApp::LfPerm,
            bad_seq: {
                let dep = of(Term::nom(n0()), c("unit"));
                seq(&[0, 1], vec![], Formula::imp(at(e().with(n0(), tm()).with(nom(1), dep.clone()), c("empty"), tm()), at(e().with(nom(1), dep).with(n0(), tm()), c("empty"), tm())))
            },
            bad_app: RuleApp::LfPerm,
        },
        Instance {
            id: R::LfInst,
            seq: seq(&[0], vec![], Formula::imp(at(g_n_tm(), Term::nom(n0()), tm()), Formula::imp(fa(), fa()))),
            app: RuleApp::LfInst,
            bad_seq: seq(&[0], vec![], Formula::imp(at(g_n_tm(), Term::nom(n0()), tm()), Formula::imp(fa(), ff()))),
            bad_app: RuleApp::LfInst,
        },
    ]
}

/// Checks every rule; returns one line per rule.
pub fn run() -> Result<Vec<String>, String> {
    let env = env();
    let bounds = Bounds::default();
    let mut out = Vec::new();
    let all = instances();
    let covered: BTreeSet<RuleId> = all.iter().map(|i| i.id).collect();
    if covered.len() != RuleId::ALL.len() {
        let missing: Vec<String> = RuleId::ALL.iter().filter(|r| !covered.contains(r)).map(|r| r.to_string()).collect();
        return Err(format!("rules without an instance: {}", missing.join(", ")));
    }
    for inst in all {
        let id = inst.app.id(&inst.seq);
        if id != inst.id {
            return Err(format!("instance for {} is classified as {}", inst.id, id));
        }
        inst.seq.wf(&env).map_err(|e| format!("{}: conclusion ill-formed: {}", inst.id, e))?;
        let applied = apply_rule(&env, &inst.seq, &inst.app).map_err(|e| format!("{}: valid instance rejected: {}", inst.id, e))?;
        let mut premises_valid = true;
        for p in &applied.premises {
            premises_valid &= sequent_valid(&env, p, &bounds).map_err(|e| format!("{}: {}", inst.id, e))?;
        }
        if !premises_valid {
            return Err(format!("{}: smoke instance has an invalid premise", inst.id));
        }
        if !sequent_valid(&env, &inst.seq, &bounds).map_err(|e| format!("{}: {}", inst.id, e))? {
            return Err(format!("{}: premises valid but conclusion {} is not", inst.id, inst.seq.goal));
        }
        match apply_rule(&env, &inst.bad_seq, &inst.bad_app) {
            Ok(_) => return Err(format!("{}: violating instance accepted", inst.id)),
            Err(e) => out.push(format!("{}: sound on {} premise(s); violation rejected ({})", inst.id, applied.premises.len(), e)),
        }
    }
    Ok(out)
}
