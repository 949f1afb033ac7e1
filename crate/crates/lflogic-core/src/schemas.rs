//! Block schemas, context schemas and context variable types, with their
//! wellformedness judgements and the instantiation relations that connect
//! them to concrete context expressions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::logic::CtxExpr;
use crate::subst::*;
use crate::syntax::*;
use crate::typing::arity_kind_type;
use crate::unify::{solve, Problem, Unified};

/// `{x1:α1,...,xn:αn} y1:A1,...,yk:Ak`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSchema {
    pub header: Vec<(String, Arity)>,
    pub body: Vec<(String, Type)>,
}

/// A context schema: the block schemas whose repetitions make up a context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextSchema {
    pub blocks: Vec<BlockSchema>,
}

/// A block of explicit nominal bindings.
pub type Block = Vec<(Nominal, Type)>;

/// `𝒞[G1;...;Gn]`: a schema together with blocks already made explicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtxVarType {
    pub schema: String,
    pub blocks: Vec<Block>,
}

impl CtxVarType {
    pub fn new(schema: &str) -> CtxVarType {
        CtxVarType { schema: schema.to_string(), blocks: vec![] }
    }
    /// All nominal constants bound by the recorded blocks, in order.
    pub fn bound_noms(&self) -> Vec<Nominal> {
        self.blocks.iter().flatten().map(|(n, _)| n.clone()).collect()
    }
    pub fn nominals(&self, out: &mut BTreeSet<Nominal>) {
        for (n, a) in self.blocks.iter().flatten() {
            out.insert(n.clone());
            a.nominals(out);
        }
    }
    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        for (_, a) in self.blocks.iter().flatten() {
            a.free_vars(out);
        }
    }
    pub fn hsub(&self, theta: &Subst) -> Option<CtxVarType> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|(n, a)| Some((n.clone(), hsub_type(theta, a)?))).collect::<Option<Block>>())
            .collect::<Option<Vec<_>>>()?;
        Some(CtxVarType { schema: self.schema.clone(), blocks })
    }
}

impl Permute for CtxVarType {
    fn permute(&self, pi: &Permutation) -> CtxVarType {
        CtxVarType {
            schema: self.schema.clone(),
            blocks: self.blocks.iter().map(|b| b.iter().map(|(n, a)| (pi.apply(n), a.permute(pi))).collect()).collect(),
        }
    }
}

/// Errors in schema declarations and context variable types.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("name `{0}` is declared more than once in a block schema")]
    Duplicate(String),
    #[error("type `{ty}` of `{name}` is not well-kinded in the block schema")]
    IllKinded { name: String, ty: String },
    #[error("unknown context schema `{0}`")]
    Unknown(String),
    #[error("block `{0}` is not an instance of schema `{1}`")]
    NotInstance(String, String),
}

/// `⊩ ℬ block`: names are distinct and each body type arity-kinds in the
/// header and preceding body declarations.
pub fn check_block_schema(sig: &Signature, b: &BlockSchema) -> Result<(), SchemaError> {
    let mut seen = BTreeSet::new();
    let mut theta = induced_arity_context(sig, &LfCtx::new()).map_err(|e| SchemaError::Duplicate(e.0))?;
    for (x, a) in &b.header {
        if !seen.insert(x.clone()) || sig.get(x).is_some() {
            return Err(SchemaError::Duplicate(x.clone()));
        }
        theta = theta.with_var(x, a.clone());
    }
    for (y, a) in &b.body {
        if !seen.insert(y.clone()) || sig.get(y).is_some() {
            return Err(SchemaError::Duplicate(y.clone()));
        }
        if !arity_kind_type(sig, &theta, a) {
            return Err(SchemaError::IllKinded { name: y.clone(), ty: a.to_string() });
        }
        theta = theta.with_var(y, erase(a));
    }
    Ok(())
}

/// `⊩ 𝒞 schema`.
pub fn check_context_schema(sig: &Signature, c: &ContextSchema) -> Result<(), SchemaError> {
    c.blocks.iter().try_for_each(|b| check_block_schema(sig, b))
}

/// The body of a block schema with its schematic variables replaced by the
/// given nominal constants (header variables left in place).
pub fn block_body_with_names(b: &BlockSchema, ns: &[Nominal]) -> Option<Block> {
    if ns.len() != b.body.len() {
        return None;
    }
    let mut s = Subst::new();
    let mut out = Vec::new();
    for ((y, a), n) in b.body.iter().zip(ns) {
        if erase(a) != n.arity {
            return None;
        }
        out.push((n.clone(), hsub_type(&s, a)?));
        s.insert(y, eta_expand(&Head::Nom(n.clone()), &n.arity), n.arity.clone());
    }
    Some(out)
}

/// Decides whether the bindings `g` form an instance of block schema `b`
/// whose header instantiations are arity-typed over `nset`, `psi` and the
/// signature. Returns the header instantiation on success.
pub fn is_block_instance(sig: &Signature, nset: &BTreeSet<Nominal>, psi: &BTreeMap<String, Arity>, b: &BlockSchema, g: &[(Nominal, Type)]) -> Option<Subst> {
    let ns: Vec<Nominal> = g.iter().map(|(n, _)| n.clone()).collect();
    let distinct: BTreeSet<&Nominal> = ns.iter().collect();
    if distinct.len() != ns.len() {
        return None;
    }
    let body = block_body_with_names(b, &ns)?;
    // Header variables are raised over the permitted names and solved for.
    let over: Vec<Nominal> = nset.iter().cloned().collect();
    let mut taken: BTreeSet<String> = psi.keys().cloned().collect();
    for (_, a) in g {
        a.free_vars(&mut taken);
    }
    let mut raise = Subst::new();
    let mut problem = Problem::new();
    for (x, al) in &b.header {
        let x2 = fresh_name(x, |n| taken.contains(n));
        taken.insert(x2.clone());
        let ar = Arity::from_parts(&over.iter().map(|n| n.arity.clone()).collect::<Vec<_>>(), al.clone());
        problem = problem.flex(&x2, ar);
        let args = over.iter().map(|n| eta_expand(&Head::Nom(n.clone()), &n.arity)).collect();
        raise.insert(x, Term::app(Head::Var(x2), args), al.clone());
    }
    problem.rigid = psi.clone();
    for ((_, pat), (_, actual)) in body.iter().zip(g) {
        problem.eqs.push(crate::unify::Equation::Type(hsub_type(&raise, pat)?, actual.clone()));
    }
    match solve(sig, &problem) {
        Unified::Unique(sol) => {
            let mut inst = Subst::new();
            for (x, m, al) in raise.entries() {
                if let Head::Var(x) = x {
                    inst.insert(x, hsub_term(&sol.theta, m)?, al.clone());
                }
            }
            Some(inst)
        }
        _ => None,
    }
}

/// Whether `g` is an instance of a single block of `c`.
pub fn is_one_block_instance(sig: &Signature, nset: &BTreeSet<Nominal>, psi: &BTreeMap<String, Arity>, c: &ContextSchema, g: &[(Nominal, Type)]) -> bool {
    c.blocks.iter().any(|b| b.body.len() == g.len() && is_block_instance(sig, nset, psi, b, g).is_some())
}

/// `𝒞 ⇛ G` for a context without a context variable: `g` splits into a
/// sequence of block instances.
pub fn is_schema_instance(sig: &Signature, nset: &BTreeSet<Nominal>, psi: &BTreeMap<String, Arity>, c: &ContextSchema, g: &[(Nominal, Type)]) -> bool {
    if g.is_empty() {
        return true;
    }
    let mut seen = BTreeSet::new();
    if !g.iter().all(|(n, _)| seen.insert(n.clone())) {
        return false;
    }
    c.blocks.iter().any(|b| {
        let k = b.body.len();
        k > 0 && k <= g.len() && is_block_instance(sig, nset, psi, b, &g[g.len() - k..]).is_some() && is_schema_instance(sig, nset, psi, c, &g[..g.len() - k])
    })
}

/// `𝒩set; Ψ ⊩ 𝒞[𝒢]`: every recorded block is a block instance.
pub fn wf_ctxvar_ty(sig: &Signature, schemas: &BTreeMap<String, ContextSchema>, nset: &BTreeSet<Nominal>, psi: &BTreeMap<String, Arity>, cvt: &CtxVarType) -> Result<(), SchemaError> {
    let c = schemas.get(&cvt.schema).ok_or_else(|| SchemaError::Unknown(cvt.schema.clone()))?;
    for b in &cvt.blocks {
        if !is_one_block_instance(sig, nset, psi, c, b) {
            let shown = CtxExpr { var: None, binds: b.clone() };
            return Err(SchemaError::NotInstance(shown.to_string(), cvt.schema.clone()));
        }
    }
    Ok(())
}

/// The information about a context variable needed to decide instances:
/// the names it must avoid and its type.
pub type CtxVarLookup<'a> = &'a dyn Fn(&str) -> Option<(BTreeSet<Nominal>, CtxVarType)>;

/// `G` is an instance of `𝒞[𝒢]`. Block instances use header
/// instantiations over `allowed`; a context variable leaf is accepted when
/// it has the same schema and already avoids every name in `must_avoid`,
/// and explicit bindings must not use names in `must_avoid`.
#[allow(clippy::too_many_arguments)]
pub fn ctxty_instance(
    sig: &Signature,
    schemas: &BTreeMap<String, ContextSchema>,
    allowed: &BTreeSet<Nominal>,
    must_avoid: &BTreeSet<Nominal>,
    psi: &BTreeMap<String, Arity>,
    xi: CtxVarLookup<'_>,
    cvt: &CtxVarType,
    g: &CtxExpr,
) -> bool {
    let c = match schemas.get(&cvt.schema) {
        Some(c) => c,
        None => return false,
    };
    if g.binds.iter().any(|(n, _)| must_avoid.contains(n)) {
        return false;
    }
    let mut seen = BTreeSet::new();
    if !g.binds.iter().all(|(n, _)| seen.insert(n.clone())) {
        return false;
    }
    fn go(
        sig: &Signature,
        c: &ContextSchema,
        allowed: &BTreeSet<Nominal>,
        must_avoid: &BTreeSet<Nominal>,
        psi: &BTreeMap<String, Arity>,
        xi: CtxVarLookup<'_>,
        schema: &str,
        blocks: &[Block],
        var: &Option<String>,
        binds: &[(Nominal, Type)],
    ) -> bool {
        if binds.is_empty() {
            return match var {
                None => blocks.is_empty(),
                Some(v) => {
                    blocks.is_empty()
                        && match xi(v) {
                            Some((names, ty)) => ty.schema == schema && must_avoid.is_subset(&names),
                            None => false,
                        }
                }
            };
        }
        if let Some(last) = blocks.last() {
            let k = last.len();
            if k <= binds.len() {
                let tail = &binds[binds.len() - k..];
                let same = tail.iter().zip(last).all(|((n1, a1), (n2, a2))| n1 == n2 && a1.alpha_eq(a2));
                if same && go(sig, c, allowed, must_avoid, psi, xi, schema, &blocks[..blocks.len() - 1], var, &binds[..binds.len() - k]) {
                    return true;
                }
            }
        }
        c.blocks.iter().any(|b| {
            let k = b.body.len();
            k > 0
                && k <= binds.len()
                && is_block_instance(sig, allowed, psi, b, &binds[binds.len() - k..]).is_some()
                && go(sig, c, allowed, must_avoid, psi, xi, schema, blocks, var, &binds[..binds.len() - k])
        })
    }
    go(sig, c, allowed, must_avoid, psi, xi, &cvt.schema, &cvt.blocks, &g.var, &g.binds)
}

impl fmt::Display for BlockSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, a)) in self.header.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", x, a)?;
        }
        write!(f, "}}(")?;
        for (i, (y, a)) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", y, a)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for ContextSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

impl fmt::Display for CtxVarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.schema)?;
        if self.blocks.is_empty() {
            write!(f, "·")?;
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}", CtxExpr { var: None, binds: b.clone() })?;
        }
        write!(f, "]")
    }
}
