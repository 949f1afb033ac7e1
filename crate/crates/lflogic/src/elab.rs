//! Elaboration of raw syntax into kernel syntax.
//!
//! Names are resolved in the order: bound variables, variables in scope,
//! signature constants, nominal constants. Terms are elaborated against the
//! arity expected at their position and eta-expanded to canonical form, so
//! `lam T R` may be written for `lam T ([x] R x)`.

use std::collections::{BTreeMap, BTreeSet};

use lflogic_core::logic::{Ann, CtxExpr, Formula};
use lflogic_core::schemas::{check_context_schema, BlockSchema, ContextSchema};
use lflogic_core::syntax::*;
use lflogic_core::typing::check_signature;

use crate::parser::{RAnn, RBlock, RCtx, RDecl, RFormula, RTerm, RType};

/// An elaboration failure.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum ElabError {
    #[error("unknown name `{0}`")]
    Unknown(String),
    #[error("`{0}` is a type family and cannot be used as a term")]
    FamilyAsTerm(String),
    #[error("`{0}` is not a type family")]
    NotFamily(String),
    #[error("`{head}` expects {expected} arguments but is given {given}")]
    TooManyArgs { head: String, expected: usize, given: usize },
    #[error("`{term}` does not have arity {arity}")]
    ArityMismatch { term: String, arity: String },
    #[error("an abstraction is not allowed where arity o is expected")]
    LamAtBase,
    #[error("`type` may only appear at the end of a kind")]
    MisplacedType,
    #[error("`{0}` is not a nominal constant")]
    NotNominal(String),
    #[error("unknown context variable `{0}`")]
    UnknownCtxVar(String),
    #[error("unknown context schema `{0}`")]
    UnknownSchema(String),
    #[error("declaration `{0}`: {1}")]
    Decl(String, String),
    #[error("schema `{0}`: {1}")]
    Schema(String, String),
}

type EResult<T> = Result<T, ElabError>;

/// Names visible while elaborating: variables with their arities, and the
/// context variables in scope.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    pub vars: BTreeMap<String, Arity>,
    pub ctxvars: BTreeSet<String>,
}

impl Scope {
    pub fn new() -> Scope {
        Scope::default()
    }

    fn with(&self, x: &str, a: Arity) -> Scope {
        let mut s = self.clone();
        s.vars.insert(x.to_string(), a);
        s
    }
}

/// Elaborator bound to a signature.
pub struct Elab<'a> {
    pub sig: &'a Signature,
}

impl<'a> Elab<'a> {
    pub fn new(sig: &'a Signature) -> Elab<'a> {
        Elab { sig }
    }

    fn taken(&self, scope: &Scope, x: &str) -> bool {
        scope.vars.contains_key(x) || self.sig.get(x).is_some()
    }

    fn head(&self, scope: &Scope, name: &str) -> EResult<(Head, Arity)> {
        if let Some(a) = scope.vars.get(name) {
            return Ok((Head::var(name), a.clone()));
        }
        if let Some(d) = self.sig.get(name) {
            return match &d.class {
                Classifier::Type(a) => Ok((Head::cst(name), erase(a))),
                Classifier::Kind(_) => Err(ElabError::FamilyAsTerm(name.to_string())),
            };
        }
        match Nominal::parse(name) {
            Some(n) => {
                let a = n.arity.clone();
                Ok((Head::Nom(n), a))
            }
            None => Err(ElabError::Unknown(name.to_string())),
        }
    }

    /// Eta-expands `h args` over the remaining argument arities.
    fn eta(&self, scope: &Scope, h: Head, mut args: Vec<Term>, rest: &[Arity]) -> Term {
        let mut names = Vec::new();
        let mut inner = scope.clone();
        for a in rest {
            let y = fresh_name("x", |n| self.taken(&inner, n));
            inner = inner.with(&y, a.clone());
            names.push(y);
        }
        for (y, a) in names.iter().zip(rest) {
            args.push(self.eta(&inner, Head::var(y), vec![], &a.parts().0));
        }
        names.iter().rev().fold(Term::App(h, args), |body, y| Term::lam(y, body))
    }

    /// Elaborates a term at the given arity.
    pub fn term(&self, scope: &Scope, m: &RTerm, alpha: &Arity) -> EResult<Term> {
        match m {
            RTerm::Lam(x, body) => match alpha {
                Arity::Arrow(a, b) => Ok(Term::lam(x, self.term(&scope.with(x, (**a).clone()), body, b)?)),
                Arity::O => Err(ElabError::LamAtBase),
            },
            RTerm::App(name, rargs) => {
                let (h, ha) = self.head(scope, name)?;
                let (parts, _) = ha.parts();
                if rargs.len() > parts.len() {
                    return Err(ElabError::TooManyArgs { head: name.clone(), expected: parts.len(), given: rargs.len() });
                }
                let args = rargs.iter().zip(&parts).map(|(r, a)| self.term(scope, r, a)).collect::<EResult<Vec<_>>>()?;
                let rest = &parts[rargs.len()..];
                if Arity::from_parts(rest, Arity::O) != *alpha {
                    let shown = Term::App(h, args);
                    return Err(ElabError::ArityMismatch { term: shown.to_string(), arity: alpha.to_string() });
                }
                Ok(self.eta(scope, h, args, rest))
            }
        }
    }

    fn family_args(&self, scope: &Scope, a: &str, rargs: &[RTerm]) -> EResult<Vec<Term>> {
        let k = match self.sig.get(a).map(|d| &d.class) {
            Some(Classifier::Kind(k)) => k,
            Some(Classifier::Type(_)) => return Err(ElabError::NotFamily(a.to_string())),
            None => return Err(ElabError::Unknown(a.to_string())),
        };
        let parts = erase_kind(k);
        if rargs.len() != parts.len() {
            return Err(ElabError::TooManyArgs { head: a.to_string(), expected: parts.len(), given: rargs.len() });
        }
        rargs.iter().zip(&parts).map(|(r, p)| self.term(scope, r, p)).collect()
    }

    fn pi_name(&self, scope: &Scope, x: &Option<String>) -> String {
        match x {
            Some(x) => x.clone(),
            None => fresh_name("y", |n| self.taken(scope, n)),
        }
    }

    /// Elaborates a type.
    pub fn ty(&self, scope: &Scope, a: &RType) -> EResult<Type> {
        match a {
            RType::Pi(x, a1, a2) => {
                let t1 = self.ty(scope, a1)?;
                let x = self.pi_name(scope, x);
                let t2 = self.ty(&scope.with(&x, erase(&t1)), a2)?;
                Ok(Type::pi(&x, t1, t2))
            }
            RType::Atom(c, _) if c == "type" => Err(ElabError::MisplacedType),
            RType::Atom(c, args) => Ok(Type::atom(c, self.family_args(scope, c, args)?)),
        }
    }

    /// Elaborates a kind.
    pub fn kind(&self, scope: &Scope, k: &RType) -> EResult<Kind> {
        match k {
            RType::Atom(c, args) if c == "type" && args.is_empty() => Ok(Kind::Type),
            RType::Pi(x, a, rest) => {
                let t = self.ty(scope, a)?;
                let x = self.pi_name(scope, x);
                let body = self.kind(&scope.with(&x, erase(&t)), rest)?;
                Ok(Kind::Pi(x, Box::new(t), Box::new(body)))
            }
            _ => Err(ElabError::MisplacedType),
        }
    }

    fn nominal(name: &str) -> EResult<Nominal> {
        Nominal::parse(name).ok_or_else(|| ElabError::NotNominal(name.to_string()))
    }

    /// Elaborates a context expression.
    pub fn ctx(&self, scope: &Scope, c: &RCtx) -> EResult<CtxExpr> {
        let var = match &c.var {
            Some(g) if scope.ctxvars.contains(g) => Some(g.clone()),
            Some(g) => return Err(ElabError::UnknownCtxVar(g.clone())),
            None => None,
        };
        let binds = c.binds.iter().map(|(n, a)| Ok((Self::nominal(n)?, self.ty(scope, a)?))).collect::<EResult<_>>()?;
        Ok(CtxExpr { var, binds })
    }

    /// Elaborates a formula; `schemas` lists the declared context schemas.
    pub fn formula(&self, scope: &Scope, schemas: &BTreeSet<String>, f: &RFormula) -> EResult<Formula> {
        Ok(match f {
            RFormula::Atom { ctx, term, ty, ann } => {
                let ann = match *ann {
                    RAnn::None => Ann::None,
                    RAnn::At(i) => Ann::At(i.unwrap_or(1)),
                    RAnn::Star(i) => Ann::Star(i.unwrap_or(1)),
                };
                let ty = self.ty(scope, ty)?;
                let term = self.term(scope, term, &erase(&ty))?;
                Formula::Atom { ctx: self.ctx(scope, ctx)?, term, ty, ann }
            }
            RFormula::Top => Formula::Top,
            RFormula::Bot => Formula::Bot,
            RFormula::Imp(a, b) => Formula::imp(self.formula(scope, schemas, a)?, self.formula(scope, schemas, b)?),
            RFormula::And(a, b) => Formula::and(self.formula(scope, schemas, a)?, self.formula(scope, schemas, b)?),
            RFormula::Or(a, b) => Formula::or(self.formula(scope, schemas, a)?, self.formula(scope, schemas, b)?),
            RFormula::Ctx(g, c, body) => {
                if !schemas.contains(c) {
                    return Err(ElabError::UnknownSchema(c.clone()));
                }
                let mut inner = scope.clone();
                inner.ctxvars.insert(g.clone());
                Formula::ctx(g, c, self.formula(&inner, schemas, body)?)
            }
            RFormula::All(xs, a, body) | RFormula::Exists(xs, a, body) => {
                let mut inner = scope.clone();
                for x in xs {
                    inner = inner.with(x, a.clone());
                }
                let mut out = self.formula(&inner, schemas, body)?;
                for x in xs.iter().rev() {
                    out = if matches!(f, RFormula::All(..)) { Formula::all(x, a.clone(), out) } else { Formula::exists(x, a.clone(), out) };
                }
                out
            }
        })
    }

    /// Elaborates a block schema.
    pub fn block(&self, b: &RBlock) -> EResult<BlockSchema> {
        let mut scope = Scope::new();
        for (x, a) in &b.header {
            scope = scope.with(x, a.clone());
        }
        let mut body = Vec::new();
        for (y, a) in &b.body {
            let t = self.ty(&scope, a)?;
            scope = scope.with(y, erase(&t));
            body.push((y.clone(), t));
        }
        Ok(BlockSchema { header: b.header.clone(), body })
    }

    /// Elaborates and checks a context schema.
    pub fn schema(&self, name: &str, blocks: &[RBlock]) -> EResult<ContextSchema> {
        let c = ContextSchema { blocks: blocks.iter().map(|b| self.block(b)).collect::<EResult<_>>()? };
        check_context_schema(self.sig, &c).map_err(|e| ElabError::Schema(name.to_string(), e.to_string()))?;
        Ok(c)
    }
}

fn is_kind(a: &RType) -> bool {
    match a {
        RType::Pi(_, _, rest) => is_kind(rest),
        RType::Atom(c, args) => c == "type" && args.is_empty(),
    }
}

/// Elaborates and checks a signature, declaration by declaration.
pub fn signature(decls: &[RDecl]) -> EResult<Signature> {
    let mut sig = Signature::new();
    for d in decls {
        let e = Elab::new(&sig);
        let class = if is_kind(&d.class) {
            e.kind(&Scope::new(), &d.class).map(Classifier::Kind)
        } else {
            e.ty(&Scope::new(), &d.class).map(Classifier::Type)
        }
        .map_err(|err| ElabError::Decl(d.name.clone(), format!("line {}: {}", d.line, err)))?;
        sig.push(Decl { name: d.name.clone(), class })
            .map_err(|n| ElabError::Decl(n, format!("line {}: declared more than once", d.line)))?;
    }
    check_signature(&sig).map_err(|e| ElabError::Decl(String::new(), e.to_string()))?;
    Ok(sig)
}
