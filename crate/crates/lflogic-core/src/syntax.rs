//! Abstract syntax for canonical LF extended with nominal constants.
//!
//! Terms are kept in spine form: an atomic term is a head applied to a
//! (possibly empty) list of canonical arguments, so a beta-redex cannot be
//! represented. Binders carry source names; alpha-equivalence is computed
//! structurally with a renaming environment and capture is avoided by
//! renaming during substitution.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Simple types that approximate LF types: `o` and arrows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arity {
    O,
    Arrow(Box<Arity>, Box<Arity>),
}

impl Arity {
    pub fn arrow(a: Arity, b: Arity) -> Arity {
        Arity::Arrow(Box::new(a), Box::new(b))
    }

    /// Builds `a1 -> ... -> an -> result`.
    pub fn from_parts(args: &[Arity], result: Arity) -> Arity {
        args.iter()
            .rev()
            .fold(result, |acc, a| Arity::arrow(a.clone(), acc))
    }

    /// The number of arrows in the arity type.
    pub fn size(&self) -> usize {
        match self {
            Arity::O => 0,
            Arity::Arrow(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Splits into argument arities and the final (base) result.
    pub fn parts(&self) -> (Vec<Arity>, Arity) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Arity::Arrow(a, b) = cur {
            args.push((**a).clone());
            cur = b;
        }
        (args, cur.clone())
    }

    /// Compact prefix code used when printing nominals of non-base arity.
    pub fn code(&self) -> String {
        match self {
            Arity::O => "o".into(),
            Arity::Arrow(a, b) => format!("a{}{}", a.code(), b.code()),
        }
    }

    /// Inverse of [`Arity::code`].
    pub fn from_code(code: &str) -> Option<Arity> {
        fn go(s: &[u8], pos: &mut usize) -> Option<Arity> {
            let c = *s.get(*pos)?;
            *pos += 1;
            match c {
                b'o' => Some(Arity::O),
                b'a' => {
                    let a = go(s, pos)?;
                    let b = go(s, pos)?;
                    Some(Arity::arrow(a, b))
                }
                _ => None,
            }
        }
        let mut pos = 0;
        let r = go(code.as_bytes(), &mut pos)?;
        (pos == code.len()).then_some(r)
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::O => write!(f, "o"),
            Arity::Arrow(a, b) => match **a {
                Arity::O => write!(f, "o -> {}", b),
                _ => write!(f, "({}) -> {}", a, b),
            },
        }
    }
}

/// A nominal constant: the `index`-th member of the family for `arity`.
///
/// The derived ordering compares the arity first, then the index; every
/// family is therefore totally ordered and families never overlap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nominal {
    pub arity: Arity,
    pub index: u32,
}

impl Nominal {
    pub fn new(arity: Arity, index: u32) -> Nominal {
        Nominal { arity, index }
    }

    /// The nominal printed as `n`, `n1`, ... (base arity).
    pub fn base(index: u32) -> Nominal {
        Nominal { arity: Arity::O, index }
    }

    /// Parses the printed form of a nominal, e.g. `n`, `n3`, `n0_aoo`.
    pub fn parse(s: &str) -> Option<Nominal> {
        let rest = s.strip_prefix('n')?;
        let (digits, code) = match rest.find('_') {
            Some(i) => (&rest[..i], Some(&rest[i + 1..])),
            None => (rest, None),
        };
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        if digits.len() > 1 && digits.starts_with('0') {
            return None;
        }
        let index = if digits.is_empty() {
            0
        } else {
            digits.parse().ok()?
        };
        match code {
            None => {
                if digits == "0" {
                    return None;
                }
                Some(Nominal::base(index))
            }
            Some(c) => {
                let arity = Arity::from_code(c)?;
                if arity == Arity::O || digits.is_empty() {
                    return None;
                }
                Some(Nominal { arity, index })
            }
        }
    }
}

/// True when `s` has the lexical shape reserved for nominal constants.
pub fn is_nominal_name(s: &str) -> bool {
    match s.strip_prefix('n') {
        Some(rest) => {
            let digits_end = rest
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(rest.len());
            let tail = &rest[digits_end..];
            tail.is_empty() || tail.starts_with('_')
        }
        None => false,
    }
}

impl fmt::Display for Nominal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.arity {
            Arity::O if self.index == 0 => write!(f, "n"),
            Arity::O => write!(f, "n{}", self.index),
            _ => write!(f, "n{}_{}", self.index, self.arity.code()),
        }
    }
}

/// The head of an atomic term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Const(String),
    Var(String),
    Nom(Nominal),
}

impl Head {
    pub fn var(name: &str) -> Head {
        Head::Var(name.to_string())
    }
    pub fn cst(name: &str) -> Head {
        Head::Const(name.to_string())
    }
}

/// Canonical terms; `App` doubles as the atomic-term spine.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Lam(String, Box<Term>),
    App(Head, Vec<Term>),
}

/// Canonical types; `Atom` is an atomic type `a M1 ... Mn`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Pi(String, Box<Type>, Box<Type>),
    Atom(String, Vec<Term>),
}

/// Kinds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Type,
    Pi(String, Box<Type>, Box<Kind>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::App(Head::var(name), vec![])
    }
    pub fn cst(name: &str) -> Term {
        Term::App(Head::cst(name), vec![])
    }
    pub fn nom(n: Nominal) -> Term {
        Term::App(Head::Nom(n), vec![])
    }
    pub fn app(head: Head, args: Vec<Term>) -> Term {
        Term::App(head, args)
    }
    pub fn lam(x: &str, body: Term) -> Term {
        Term::Lam(x.to_string(), Box::new(body))
    }

    /// Number of syntax nodes: heads, abstractions and applications count one each.
    pub fn size(&self) -> usize {
        match self {
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn head(&self) -> Option<&Head> {
        match self {
            Term::App(h, _) => Some(h),
            Term::Lam(..) => None,
        }
    }
}

impl Type {
    pub fn atom(a: &str, args: Vec<Term>) -> Type {
        Type::Atom(a.to_string(), args)
    }
    pub fn pi(x: &str, a: Type, b: Type) -> Type {
        Type::Pi(x.to_string(), Box::new(a), Box::new(b))
    }
    /// Non-dependent arrow `a -> b`; the bound name is chosen to be unused.
    pub fn arrow(a: Type, b: Type) -> Type {
        let mut fv = BTreeSet::new();
        b.free_vars(&mut fv);
        let x = fresh_name("x", |n| fv.contains(n));
        Type::pi(&x, a, b)
    }
}

/// Erasure of an LF type to its arity type.
pub fn erase(a: &Type) -> Arity {
    match a {
        Type::Atom(..) => Arity::O,
        Type::Pi(_, a1, a2) => Arity::arrow(erase(a1), erase(a2)),
    }
}

/// Erasure of a kind: the arity of the family's arguments.
pub fn erase_kind(k: &Kind) -> Vec<Arity> {
    let mut out = Vec::new();
    let mut cur = k;
    while let Kind::Pi(_, a, rest) = cur {
        out.push(erase(a));
        cur = rest;
    }
    out
}

/// Returns `base`, or `base` with a numeric suffix (or primes, when the
/// numeric form would look like a nominal constant) that `taken` rejects.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'');
    let stem = if stem.is_empty() { "x" } else { stem };
    if !taken(base) && !is_nominal_name(base) {
        return base.to_string();
    }
    if stem == "n" || is_nominal_name(stem) {
        let mut cand = format!("{}'", stem);
        while taken(&cand) {
            cand.push('\'');
        }
        return cand;
    }
    if !taken(stem) {
        return stem.to_string();
    }
    let mut i = 1u32;
    loop {
        let cand = format!("{}{}", stem, i);
        if !taken(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// The least nominal of arity `alpha` not in `avoid`.
pub fn fresh_nominal(alpha: &Arity, avoid: &BTreeSet<Nominal>) -> Nominal {
    let mut i = 0;
    loop {
        let n = Nominal::new(alpha.clone(), i);
        if !avoid.contains(&n) {
            return n;
        }
        i += 1;
    }
}

/// Operations shared by all expression categories.
pub trait Syntax: Sized {
    /// Adds free term variables to `out`.
    fn free_vars(&self, out: &mut BTreeSet<String>);
    /// Adds nominal constants (the support) to `out`.
    fn nominals(&self, out: &mut BTreeSet<Nominal>);
    /// Applies `f` to every head occurrence outside binders that shadow it.
    fn map_heads(&self, f: &dyn Fn(&Head, &BTreeSet<String>) -> Option<Head>, bound: &mut BTreeSet<String>) -> Self;

    fn fv(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }
    fn support(&self) -> BTreeSet<Nominal> {
        let mut s = BTreeSet::new();
        self.nominals(&mut s);
        s
    }
    fn has_free(&self, x: &str) -> bool {
        self.fv().contains(x)
    }
}

fn head_free_vars(h: &Head, out: &mut BTreeSet<String>) {
    if let Head::Var(x) = h {
        out.insert(x.clone());
    }
}

impl Syntax for Term {
    fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Lam(x, b) => {
                let mut inner = BTreeSet::new();
                b.free_vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            Term::App(h, args) => {
                head_free_vars(h, out);
                for a in args {
                    a.free_vars(out);
                }
            }
        }
    }
    fn nominals(&self, out: &mut BTreeSet<Nominal>) {
        match self {
            Term::Lam(_, b) => b.nominals(out),
            Term::App(h, args) => {
                if let Head::Nom(n) = h {
                    out.insert(n.clone());
                }
                for a in args {
                    a.nominals(out);
                }
            }
        }
    }
    fn map_heads(&self, f: &dyn Fn(&Head, &BTreeSet<String>) -> Option<Head>, bound: &mut BTreeSet<String>) -> Term {
        match self {
            Term::Lam(x, b) => {
                let fresh = bound.insert(x.clone());
                let b2 = b.map_heads(f, bound);
                if fresh {
                    bound.remove(x);
                }
                Term::Lam(x.clone(), Box::new(b2))
            }
            Term::App(h, args) => {
                let h2 = f(h, bound).unwrap_or_else(|| h.clone());
                Term::App(h2, args.iter().map(|a| a.map_heads(f, bound)).collect())
            }
        }
    }
}

impl Syntax for Type {
    fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Pi(x, a, b) => {
                a.free_vars(out);
                let mut inner = BTreeSet::new();
                b.free_vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            Type::Atom(_, args) => {
                for a in args {
                    a.free_vars(out);
                }
            }
        }
    }
    fn nominals(&self, out: &mut BTreeSet<Nominal>) {
        match self {
            Type::Pi(_, a, b) => {
                a.nominals(out);
                b.nominals(out);
            }
            Type::Atom(_, args) => {
                for a in args {
                    a.nominals(out);
                }
            }
        }
    }
    fn map_heads(&self, f: &dyn Fn(&Head, &BTreeSet<String>) -> Option<Head>, bound: &mut BTreeSet<String>) -> Type {
        match self {
            Type::Pi(x, a, b) => {
                let a2 = a.map_heads(f, bound);
                let fresh = bound.insert(x.clone());
                let b2 = b.map_heads(f, bound);
                if fresh {
                    bound.remove(x);
                }
                Type::Pi(x.clone(), Box::new(a2), Box::new(b2))
            }
            Type::Atom(c, args) => {
                Type::Atom(c.clone(), args.iter().map(|a| a.map_heads(f, bound)).collect())
            }
        }
    }
}

impl Syntax for Kind {
    fn free_vars(&self, out: &mut BTreeSet<String>) {
        if let Kind::Pi(x, a, k) = self {
            a.free_vars(out);
            let mut inner = BTreeSet::new();
            k.free_vars(&mut inner);
            inner.remove(x);
            out.extend(inner);
        }
    }
    fn nominals(&self, out: &mut BTreeSet<Nominal>) {
        if let Kind::Pi(_, a, k) = self {
            a.nominals(out);
            k.nominals(out);
        }
    }
    fn map_heads(&self, f: &dyn Fn(&Head, &BTreeSet<String>) -> Option<Head>, bound: &mut BTreeSet<String>) -> Kind {
        match self {
            Kind::Type => Kind::Type,
            Kind::Pi(x, a, k) => {
                let a2 = a.map_heads(f, bound);
                let fresh = bound.insert(x.clone());
                let k2 = k.map_heads(f, bound);
                if fresh {
                    bound.remove(x);
                }
                Kind::Pi(x.clone(), Box::new(a2), Box::new(k2))
            }
        }
    }
}

/// Renames the free variable `from` to `to`; the caller guarantees `to` is
/// not captured (it is fresh for the expression).
pub fn rename_var<E: Syntax>(e: &E, from: &str, to: &str) -> E {
    let f = |h: &Head, bound: &BTreeSet<String>| match h {
        Head::Var(x) if x == from && !bound.contains(from) => Some(Head::Var(to.to_string())),
        _ => None,
    };
    e.map_heads(&f, &mut BTreeSet::new())
}

/// The binder names in scope at the free occurrences of `x`; renaming `x`
/// to any name outside this set (and the free variables) cannot capture.
pub fn binders_over<E: Syntax>(e: &E, x: &str) -> BTreeSet<String> {
    let found = std::cell::RefCell::new(BTreeSet::new());
    let f = |h: &Head, bound: &BTreeSet<String>| {
        if matches!(h, Head::Var(y) if y == x) && !bound.contains(x) {
            found.borrow_mut().extend(bound.iter().cloned());
        }
        None
    };
    e.map_heads(&f, &mut BTreeSet::new());
    found.into_inner()
}

/// Alpha-equivalence, computed with a pair of binder stacks.
pub trait AlphaEq {
    fn alpha_eq_in(&self, other: &Self, env: &mut Vec<(String, String)>) -> bool;
    fn alpha_eq(&self, other: &Self) -> bool {
        self.alpha_eq_in(other, &mut Vec::new())
    }
}

fn heads_alpha_eq(h1: &Head, h2: &Head, env: &[(String, String)]) -> bool {
    match (h1, h2) {
        (Head::Var(x), Head::Var(y)) => {
            for (a, b) in env.iter().rev() {
                let ma = a == x;
                let mb = b == y;
                if ma || mb {
                    return ma && mb;
                }
            }
            x == y
        }
        _ => h1 == h2,
    }
}

impl AlphaEq for Term {
    fn alpha_eq_in(&self, other: &Term, env: &mut Vec<(String, String)>) -> bool {
        match (self, other) {
            (Term::Lam(x, b1), Term::Lam(y, b2)) => {
                env.push((x.clone(), y.clone()));
                let r = b1.alpha_eq_in(b2, env);
                env.pop();
                r
            }
            (Term::App(h1, a1), Term::App(h2, a2)) => {
                a1.len() == a2.len()
                    && heads_alpha_eq(h1, h2, env)
                    && a1.iter().zip(a2).all(|(m, n)| m.alpha_eq_in(n, env))
            }
            _ => false,
        }
    }
}

impl AlphaEq for Type {
    fn alpha_eq_in(&self, other: &Type, env: &mut Vec<(String, String)>) -> bool {
        match (self, other) {
            (Type::Pi(x, a1, b1), Type::Pi(y, a2, b2)) => {
                if !a1.alpha_eq_in(a2, env) {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = b1.alpha_eq_in(b2, env);
                env.pop();
                r
            }
            (Type::Atom(c1, a1), Type::Atom(c2, a2)) => {
                c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(m, n)| m.alpha_eq_in(n, env))
            }
            _ => false,
        }
    }
}

impl AlphaEq for Kind {
    fn alpha_eq_in(&self, other: &Kind, env: &mut Vec<(String, String)>) -> bool {
        match (self, other) {
            (Kind::Type, Kind::Type) => true,
            (Kind::Pi(x, a1, k1), Kind::Pi(y, a2, k2)) => {
                if !a1.alpha_eq_in(a2, env) {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = k1.alpha_eq_in(k2, env);
                env.pop();
                r
            }
            _ => false,
        }
    }
}

/// The classifier of a signature declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classifier {
    /// An object constant `c : A`.
    Type(Type),
    /// A type family `a : K`.
    Kind(Kind),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub class: Classifier,
}

/// An ordered LF signature with name lookup.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    decls: Vec<Decl>,
    index: HashMap<String, usize>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    /// Appends a declaration; duplicate names are rejected.
    pub fn push(&mut self, decl: Decl) -> Result<(), String> {
        if self.index.contains_key(&decl.name) {
            return Err(decl.name);
        }
        self.index.insert(decl.name.clone(), self.decls.len());
        self.decls.push(decl);
        Ok(())
    }

    pub fn decls(&self) -> &[Decl] {
        &self.decls
    }

    pub fn get(&self, name: &str) -> Option<&Decl> {
        self.index.get(name).map(|&i| &self.decls[i])
    }

    pub fn const_type(&self, name: &str) -> Option<&Type> {
        match self.get(name)?.class {
            Classifier::Type(ref a) => Some(a),
            _ => None,
        }
    }

    pub fn family_kind(&self, name: &str) -> Option<&Kind> {
        match self.get(name)?.class {
            Classifier::Kind(ref k) => Some(k),
            _ => None,
        }
    }

    /// The signature consisting of the first `n` declarations.
    pub fn prefix(&self, n: usize) -> Signature {
        let mut s = Signature::new();
        for d in &self.decls[..n] {
            s.push(d.clone()).expect("prefix of a valid signature");
        }
        s
    }

    /// Object constants in declaration order.
    pub fn constants(&self) -> impl Iterator<Item = (&str, &Type)> {
        self.decls.iter().filter_map(|d| match &d.class {
            Classifier::Type(a) => Some((d.name.as_str(), a)),
            _ => None,
        })
    }
}

/// An LF context: bindings of variables or nominal constants to types.
/// Only `Head::Var` and `Head::Nom` appear as binders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LfCtx {
    pub binds: Vec<(Head, Type)>,
}

impl LfCtx {
    pub fn new() -> LfCtx {
        LfCtx::default()
    }
    pub fn push(&mut self, h: Head, a: Type) {
        self.binds.push((h, a));
    }
    pub fn with(mut self, h: Head, a: Type) -> LfCtx {
        self.push(h, a);
        self
    }
    pub fn lookup(&self, h: &Head) -> Option<&Type> {
        self.binds.iter().rev().find(|(b, _)| b == h).map(|(_, a)| a)
    }
    pub fn nominals(&self) -> BTreeSet<Nominal> {
        let mut s = BTreeSet::new();
        for (h, a) in &self.binds {
            if let Head::Nom(n) = h {
                s.insert(n.clone());
            }
            a.nominals(&mut s);
        }
        s
    }
}

/// Which nominal constants an arity context assigns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NomScope {
    /// Every nominal constant, at its intrinsic arity.
    All,
    /// Only the listed ones.
    Set(BTreeSet<Nominal>),
}

/// A finite assignment of arity types to constants, variables and nominals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArityCtx {
    pub names: BTreeMap<String, Arity>,
    pub noms: NomScope,
}

impl Default for ArityCtx {
    fn default() -> Self {
        ArityCtx { names: BTreeMap::new(), noms: NomScope::Set(BTreeSet::new()) }
    }
}

impl ArityCtx {
    pub fn new() -> ArityCtx {
        ArityCtx::default()
    }

    pub fn lookup(&self, h: &Head) -> Option<Arity> {
        match h {
            Head::Const(c) | Head::Var(c) => self.names.get(c).cloned(),
            Head::Nom(n) => match &self.noms {
                NomScope::All => Some(n.arity.clone()),
                NomScope::Set(s) => s.contains(n).then(|| n.arity.clone()),
            },
        }
    }

    pub fn with_var(&self, x: &str, a: Arity) -> ArityCtx {
        let mut c = self.clone();
        c.names.insert(x.to_string(), a);
        c
    }

    pub fn add_noms<'a>(&mut self, ns: impl IntoIterator<Item = &'a Nominal>) {
        if let NomScope::Set(s) = &mut self.noms {
            s.extend(ns.into_iter().cloned());
        }
    }

    pub fn all_noms(mut self) -> ArityCtx {
        self.noms = NomScope::All;
        self
    }
}

/// Error for ill-formed inputs to context construction.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("name `{0}` is assigned more than once")]
pub struct DuplicateName(pub String);

/// The arity context induced by a signature and an LF context.
pub fn induced_arity_context(sig: &Signature, ctx: &LfCtx) -> Result<ArityCtx, DuplicateName> {
    let mut th = ArityCtx::new();
    for d in sig.decls() {
        let a = match &d.class {
            Classifier::Type(a) => erase(a),
            Classifier::Kind(k) => Arity::from_parts(&erase_kind(k), Arity::O),
        };
        if th.names.insert(d.name.clone(), a).is_some() {
            return Err(DuplicateName(d.name.clone()));
        }
    }
    let mut noms = BTreeSet::new();
    for (h, a) in &ctx.binds {
        match h {
            Head::Var(x) | Head::Const(x) => {
                if th.names.insert(x.clone(), erase(a)).is_some() {
                    return Err(DuplicateName(x.clone()));
                }
            }
            Head::Nom(n) => {
                if !noms.insert(n.clone()) {
                    return Err(DuplicateName(n.to_string()));
                }
            }
        }
    }
    th.noms = NomScope::Set(noms);
    Ok(th)
}
