//! Programmatically built signatures used by tests and examples.

use crate::syntax::*;

fn a(name: &str, args: Vec<Term>) -> Type {
    Type::atom(name, args)
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn c(name: &str) -> Term {
    Term::cst(name)
}

fn app(h: &str, args: Vec<Term>) -> Term {
    Term::app(Head::cst(h), args)
}

fn decl(sig: &mut Signature, name: &str, class: Classifier) {
    sig.push(Decl { name: name.to_string(), class }).expect("fixture names are distinct");
}

/// The simply-typed lambda calculus: types, terms, typing and type equality.
pub fn stlc() -> Signature {
    let mut s = Signature::new();
    let tp = || a("tp", vec![]);
    let tm = || a("tm", vec![]);
    decl(&mut s, "tp", Classifier::Kind(Kind::Type));
    decl(&mut s, "unit", Classifier::Type(tp()));
    decl(&mut s, "arr", Classifier::Type(Type::arrow(tp(), Type::arrow(tp(), tp()))));
    decl(&mut s, "tm", Classifier::Kind(Kind::Type));
    decl(&mut s, "empty", Classifier::Type(tm()));
    decl(&mut s, "app", Classifier::Type(Type::arrow(tm(), Type::arrow(tm(), tm()))));
    decl(&mut s, "lam", Classifier::Type(Type::arrow(tp(), Type::arrow(Type::arrow(tm(), tm()), tm()))));
    decl(
        &mut s,
        "of",
        Classifier::Kind(Kind::Pi("x".into(), Box::new(tm()), Box::new(Kind::Pi("y".into(), Box::new(tp()), Box::new(Kind::Type))))),
    );
    decl(&mut s, "of_empty", Classifier::Type(a("of", vec![c("empty"), c("unit")])));
    let of_app = Type::pi(
        "E1",
        tm(),
        Type::pi(
            "E2",
            tm(),
            Type::pi(
                "T1",
                tp(),
                Type::pi(
                    "T2",
                    tp(),
                    Type::pi(
                        "D1",
                        a("of", vec![v("E1"), app("arr", vec![v("T1"), v("T2")])]),
                        Type::pi(
                            "D2",
                            a("of", vec![v("E2"), v("T1")]),
                            a("of", vec![app("app", vec![v("E1"), v("E2")]), v("T2")]),
                        ),
                    ),
                ),
            ),
        ),
    );
    decl(&mut s, "of_app", Classifier::Type(of_app));
    let r_x = |x: &str| Term::app(Head::var("R"), vec![v(x)]);
    let of_lam = Type::pi(
        "R",
        Type::arrow(tm(), tm()),
        Type::pi(
            "T1",
            tp(),
            Type::pi(
                "T2",
                tp(),
                Type::pi(
                    "D",
                    Type::pi("x", tm(), Type::pi("y", a("of", vec![v("x"), v("T1")]), a("of", vec![r_x("x"), v("T2")]))),
                    a(
                        "of",
                        vec![app("lam", vec![v("T1"), Term::lam("x", r_x("x"))]), app("arr", vec![v("T1"), v("T2")])],
                    ),
                ),
            ),
        ),
    );
    decl(&mut s, "of_lam", Classifier::Type(of_lam));
    decl(
        &mut s,
        "eq",
        Classifier::Kind(Kind::Pi("x".into(), Box::new(tp()), Box::new(Kind::Pi("y".into(), Box::new(tp()), Box::new(Kind::Type))))),
    );
    decl(&mut s, "refl", Classifier::Type(Type::pi("T", tp(), a("eq", vec![v("T"), v("T")]))));
    s
}

/// The schema of contexts that pair each term variable with a typing
/// assumption: `{t:o}(x:tm, y:of x t)`.
pub fn stlc_schema() -> crate::schemas::ContextSchema {
    crate::schemas::ContextSchema {
        blocks: vec![crate::schemas::BlockSchema {
            header: vec![("t".to_string(), Arity::O)],
            body: vec![("x".to_string(), a("tm", vec![])), ("y".to_string(), a("of", vec![v("x"), v("t")]))],
        }],
    }
}
