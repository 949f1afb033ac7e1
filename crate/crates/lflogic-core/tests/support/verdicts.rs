//! Fixed validity verdicts of the oracle on the simply-typed lambda
//! calculus, including the size of the smallest typing derivation for the
//! identity function.

use lflogic_core::fixtures::stlc;
use lflogic_core::logic::*;
use lflogic_core::oracle::{enumerate_terms, oracle_valid};
use lflogic_core::syntax::*;

use super::gen::*;

fn idfun() -> Term {
    Term::lam("x", Term::var("x"))
}

fn valid(f: &Formula) -> Result<bool, String> {
    oracle_valid(&stlc(), f, &HeightAssignment::new(1)).map_err(|e| e.to_string())
}

fn expect(label: &str, got: bool, want: bool, out: &mut Vec<String>) -> Result<(), String> {
    if got != want {
        return Err(format!("{}: expected {}, got {}", label, want, got));
    }
    out.push(format!("{}: {}", label, got));
    Ok(())
}

/// Checks all verdicts; returns one line per verdict.
pub fn run() -> Result<Vec<String>, String> {
    let sig = stlc();
    let empty = LfCtx::new();
    let mut out = Vec::new();
    let lam_id = app("lam", vec![c("unit"), idfun()]);
    let n = nom(0);

    expect("{⊢ empty : tm} valid", valid(&Formula::atom(CtxExpr::empty(), c("empty"), tm()))?, true, &mut out)?;
    expect("{⊢ lam unit ([x]x) : tm} valid", valid(&Formula::atom(CtxExpr::empty(), lam_id.clone(), tm()))?, true, &mut out)?;
    expect("{n:tm ⊢ n : tm} valid", valid(&Formula::atom(CtxExpr::empty().with(n.clone(), tm()), Term::nom(n.clone()), tm()))?, true, &mut out)?;

    let w1 = enumerate_terms(&sig, &empty, &of(c("empty"), c("unit")), 4);
    expect("of empty unit inhabited", !w1.is_empty(), true, &mut out)?;
    let unit_arrow = app("arr", vec![c("unit"), c("unit")]);
    let w2 = enumerate_terms(&sig, &empty, &of(lam_id.clone(), unit_arrow.clone()), 10);
    let Some(first) = w2.first() else { return Err("of (lam unit [x]x) (arr unit unit) has no witness".into()) };
    if first.size() != 8 {
        return Err(format!("smallest witness {} has size {}, expected 8", first, first.size()));
    }
    out.push(format!("of (lam unit [x]x) (arr unit unit) inhabited by {} (size 8)", first));

    let none1 = enumerate_terms(&sig, &empty, &of(lam_id.clone(), c("unit")), 10);
    expect("of (lam unit [x]x) unit inhabited", !none1.is_empty(), false, &mut out)?;
    let lam_bad = app("lam", vec![c("empty"), idfun()]);
    // `lam empty [x]x` is not even a term, so the type is ill-formed and
    // has no inhabitants.
    let none2 = enumerate_terms(&sig, &empty, &of(lam_bad, unit_arrow), 10);
    expect("of (lam empty [x]x) (arr unit unit) inhabited", !none2.is_empty(), false, &mut out)?;

    let ill = CtxExpr::empty().with(n.clone(), tm()).with(n, tp());
    expect("{n:tm, n:tp ⊢ empty : tm} valid", valid(&Formula::atom(ill, c("empty"), tm()))?, false, &mut out)?;
    Ok(out)
}
