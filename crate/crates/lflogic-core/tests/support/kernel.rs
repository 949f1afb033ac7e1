//! Property suite for hereditary substitution, erasure and the LF
//! meta-theorems (weakening, exchange, strengthening, instantiation and
//! equivariance under nominal permutations).

use lflogic_core::fixtures::stlc;
use lflogic_core::oracle::enumerate_terms;
use lflogic_core::subst::*;
use lflogic_core::syntax::*;
use lflogic_core::typing::*;
use rand::rngs::StdRng;
use rand::Rng;

use super::gen::*;

/// Checks one property on `cases` samples; `Ok(false)` marks a sample that
/// did not meet the property's precondition and does not count.
fn property(name: &str, cases: usize, rng: &mut StdRng, mut f: impl FnMut(&mut StdRng) -> Result<bool, String>) -> Result<String, String> {
    let mut done = 0;
    let mut tries = 0;
    while done < cases {
        tries += 1;
        if tries > cases * 50 {
            return Err(format!("{}: only {} of {} samples met the precondition", name, done, cases));
        }
        match f(rng) {
            Ok(true) => done += 1,
            Ok(false) => {}
            Err(e) => return Err(format!("{}: {}", name, e)),
        }
    }
    Ok(format!("{} ({} cases)", name, done))
}

fn subst2(x: &str, n: &Term, f: &str, l: &Term, swap: bool) -> Subst {
    let mut s = Subst::new();
    if swap {
        s.insert(f, l.clone(), oo());
        s.insert(x, n.clone(), Arity::O);
    } else {
        s.insert(x, n.clone(), Arity::O);
        s.insert(f, l.clone(), oo());
    }
    s
}

fn open_arity_ctx() -> ArityCtx {
    let mut th = ArityCtx::new();
    for (h, a) in open_heads() {
        match h {
            Head::Const(c) | Head::Var(c) => {
                th.names.insert(c, a);
            }
            Head::Nom(n) => th.add_noms([&n]),
        }
    }
    th
}

fn same_height(sig: &Signature, before: &Judgement, after: &Judgement) -> Result<bool, String> {
    let h0 = check_judgement(sig, before).map_err(|e| format!("source judgement not derivable: {}", e))?.height;
    let h1 = check_judgement(sig, after).map_err(|e| format!("{} ⊢ {} : {} not derivable: {}", after.ctx, after.term, after.ty, e))?.height;
    if h0 != h1 {
        return Err(format!("height changed from {} to {} for {} ⊢ {}", h0, h1, after.ctx, after.term));
    }
    Ok(true)
}

/// Runs every property with `cases` samples each.
pub fn run(cases: usize, seed: u64) -> Result<Vec<String>, String> {
    let mut r = rng(seed);
    let sig = stlc();
    let pools = Pools::new();
    let bank = judgement_bank(&mut r, 60);
    if bank.len() < 100 {
        return Err(format!("judgement bank too small ({})", bank.len()));
    }
    let mut out = Vec::new();
    let mut counter = 0usize;

    out.push(property("substitution is deterministic", cases, &mut r, |r| {
        let m = pick(r, &pools.base);
        let n = pick(r, &pools.base);
        let l = pick(r, &pools.funs);
        let a = hsub_term(&subst2("x", n, "f", l, false), m).ok_or("undefined")?;
        let b = hsub_term(&subst2("x", n, "f", l, true), m).ok_or("undefined")?;
        let c = hsub_term(&subst2("x", n, "f", l, false), &alpha_variant(m, &mut counter)).ok_or("undefined")?;
        if !a.alpha_eq(&b) || !a.alpha_eq(&c) {
            return Err(format!("[{}/x, {}/f]{} gave {}, {} and {}", n, l, m, a, b, c));
        }
        Ok(true)
    })?);

    out.push(property("vacuous substitution is the identity", cases, &mut r, |r| {
        let m = pick(r, &pools.base);
        if m.has_free("x") {
            return Ok(false);
        }
        let n = pick(r, &pools.base);
        let res = hsub_term(&Subst::single("x", n.clone(), Arity::O), m).ok_or("undefined")?;
        if !res.alpha_eq(m) {
            return Err(format!("[{}/x]{} = {}", n, m, res));
        }
        Ok(true)
    })?);

    out.push(property("substitution commutes with permutations", cases, &mut r, |r| {
        let m = pick(r, &pools.base);
        let theta = subst2("x", pick(r, &pools.base), "f", pick(r, &pools.funs), false);
        let other = nom(r.gen_range(1..4));
        let pi = Permutation::swap(&nom(0), &other);
        let lhs = hsub_term(&theta.permute(&pi), &m.permute(&pi)).ok_or("undefined")?;
        let rhs = hsub_term(&theta, m).ok_or("undefined")?.permute(&pi);
        if !lhs.alpha_eq(&rhs) {
            return Err(format!("{} vs {} for {}", lhs, rhs, m));
        }
        Ok(true)
    })?);

    out.push(property("composition agrees with sequential substitution", cases, &mut r, |r| {
        let m = pick(r, &pools.base);
        let theta1 = Subst::single("x", pick(r, &pools.base).clone(), Arity::O);
        let mut theta2 = Subst::single("f", pick(r, &pools.funs).clone(), oo());
        theta2.insert("z", pick(r, &pools.base).clone(), Arity::O);
        let seq = hsub_term(&theta2, &hsub_term(&theta1, m).ok_or("undefined")?).ok_or("undefined")?;
        let comp = compose(&theta2, &theta1).map_err(|e| e.to_string())?;
        let once = hsub_term(&comp, m).ok_or("undefined")?;
        if !seq.alpha_eq(&once) {
            return Err(format!("{} vs {} for {}", seq, once, m));
        }
        Ok(true)
    })?);

    out.push(property("typing erases to arity typing", cases, &mut r, |r| {
        let j = pick(r, &bank);
        let th = induced_arity_context(&sig, &j.ctx).map_err(|e| e.to_string())?;
        if !arity_check_term(&th, &j.term, &erase(&j.ty)) {
            return Err(format!("{} ⊢ {} : {} does not erase", j.ctx, j.term, j.ty));
        }
        // Erasure ignores the terms substituted into a dependent type.
        let (name, ty) = sig.constants().nth(r.gen_range(0..sig.constants().count())).map(|(c, t)| (c.to_string(), t.clone())).expect("constant");
        if let Type::Pi(x, a1, a2) = &ty {
            let arg = enumerate_terms(&sig, &LfCtx::new(), a1, 3);
            if let Some(n) = arg.first() {
                let inst = hsub_type(&Subst::single(x, n.clone(), erase(a1)), a2).ok_or("undefined")?;
                if erase(&inst) != erase(a2) {
                    return Err(format!("instantiating the type of {} changed its erasure", name));
                }
            }
        }
        Ok(true)
    })?);

    let th = open_arity_ctx();
    out.push(property("arity-typed substitutions are defined", cases, &mut r, |r| {
        let m = pick(r, &pools.base);
        let theta = subst2("x", pick(r, &pools.base), "f", pick(r, &pools.funs), r.gen_bool(0.5));
        let res = hsub_term(&theta, m).ok_or_else(|| format!("undefined on {}", m))?;
        if !arity_check_term(&th, &res, &Arity::O) {
            return Err(format!("result {} lost its arity", res));
        }
        let f = pick(r, &pools.funs);
        let res = hsub_term(&theta, f).ok_or_else(|| format!("undefined on {}", f))?;
        if !arity_check_term(&th, &res, &oo()) {
            return Err(format!("result {} lost its arity", res));
        }
        Ok(true)
    })?);

    out.push(property("weakening preserves derivations and heights", cases, &mut r, |r| {
        let j = pick(r, &bank);
        let pos = r.gen_range(0..=j.ctx.binds.len());
        let n = fresh_for(j);
        let b = if r.gen_bool(0.5) { tm() } else { tp() };
        let w = weaken(&sig, j, pos, Head::Nom(n), b).map_err(|e| e.to_string())?;
        same_height(&sig, j, &w)
    })?);

    out.push(property("exchange preserves derivations and heights", cases, &mut r, |r| {
        let j = pick(r, &bank);
        if j.ctx.binds.len() < 2 {
            return Ok(false);
        }
        let pos = r.gen_range(0..j.ctx.binds.len() - 1);
        match exchange(j, pos) {
            Ok(x) => same_height(&sig, j, &x),
            Err(MetaError::Dependent(_)) => {
                let (h, _) = &j.ctx.binds[pos];
                let (_, next) = &j.ctx.binds[pos + 1];
                let Head::Nom(n) = h else { return Err("non-nominal binder".into()) };
                if !next.support().contains(n) {
                    return Err(format!("exchange at {} wrongly refused in {}", pos, j.ctx));
                }
                Ok(false)
            }
            Err(e) => Err(e.to_string()),
        }
    })?);

    out.push(property("strengthening preserves derivations and heights", cases, &mut r, |r| {
        let j = pick(r, &bank);
        if j.ctx.binds.is_empty() {
            return Ok(false);
        }
        let pos = r.gen_range(0..j.ctx.binds.len());
        match strengthen(j, pos) {
            Ok(s) => same_height(&sig, j, &s),
            Err(MetaError::Occurs(_)) => {
                let Head::Nom(n) = &j.ctx.binds[pos].0 else { return Err("non-nominal binder".into()) };
                let mut used = j.term.support();
                j.ty.nominals(&mut used);
                for (_, a) in &j.ctx.binds[pos + 1..] {
                    a.nominals(&mut used);
                }
                if !used.contains(n) {
                    return Err(format!("strengthening {} wrongly refused", n));
                }
                Ok(false)
            }
            Err(e) => Err(e.to_string()),
        }
    })?);

    out.push(property("instantiation by a nominal does not increase height", cases, &mut r, |r| {
        let j = pick(r, &bank);
        if j.ctx.binds.is_empty() {
            return Ok(false);
        }
        let k = r.gen_range(0..j.ctx.binds.len());
        let b = j.ctx.binds[k].1.clone();
        let n = fresh_for(j);
        let w = weaken(&sig, j, k, Head::Nom(n.clone()), b).map_err(|e| e.to_string())?;
        let inst = instantiate(&sig, &w, k + 1, &Term::nom(n)).map_err(|e| e.to_string())?;
        let h0 = check_judgement(&sig, j).map_err(|e| e.to_string())?.height;
        let h1 = check_judgement(&sig, &inst).map_err(|e| format!("{} ⊢ {} : {}: {}", inst.ctx, inst.term, inst.ty, e))?.height;
        if h1 > h0 {
            return Err(format!("height grew from {} to {}", h0, h1));
        }
        // Instantiating with an arbitrary closed inhabitant stays derivable.
        let prefix = LfCtx { binds: j.ctx.binds[..k].to_vec() };
        if let Some(m) = enumerate_terms(&sig, &prefix, &j.ctx.binds[k].1, 3).first() {
            let inst = instantiate(&sig, j, k, m).map_err(|e| e.to_string())?;
            check_judgement(&sig, &inst).map_err(|e| format!("{} ⊢ {} : {}: {}", inst.ctx, inst.term, inst.ty, e))?;
        }
        Ok(true)
    })?);

    out.push(property("derivations are equivariant", cases, &mut r, |r| {
        let j = pick(r, &bank);
        let a = nom(r.gen_range(0..5));
        let b = nom(r.gen_range(0..5));
        let pi = Permutation::swap(&a, &b);
        let p = Judgement { ctx: j.ctx.permute(&pi), term: j.term.permute(&pi), ty: j.ty.permute(&pi) };
        same_height(&sig, j, &p)
    })?);

    Ok(out)
}
