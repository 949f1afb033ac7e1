//! Canonical concrete rendering of LF expressions.
//!
//! The output is the same surface syntax the frontend parses: `[x] M` for
//! abstraction, `{x:A} B` for a dependent product, `A -> B` when the bound
//! variable is unused, and juxtaposition for application.

use std::fmt;

use crate::syntax::*;

fn head_str(h: &Head) -> String {
    match h {
        Head::Const(c) | Head::Var(c) => c.clone(),
        Head::Nom(n) => n.to_string(),
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&head_str(self))
    }
}

/// Renders a term in argument position, parenthesized unless atomic.
pub fn term_arg(m: &Term) -> String {
    match m {
        Term::App(h, args) if args.is_empty() => head_str(h),
        _ => format!("({})", m),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Lam(x, b) => write!(f, "[{}] {}", x, b),
            Term::App(h, args) => {
                write!(f, "{}", h)?;
                for a in args {
                    write!(f, " {}", term_arg(a))?;
                }
                Ok(())
            }
        }
    }
}

fn type_left(a: &Type) -> String {
    match a {
        Type::Pi(..) => format!("({})", a),
        _ => a.to_string(),
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Pi(x, a, b) => {
                if b.has_free(x) {
                    write!(f, "{{{}:{}}} {}", x, a, b)
                } else {
                    write!(f, "{} -> {}", type_left(a), b)
                }
            }
            Type::Atom(c, args) => {
                write!(f, "{}", c)?;
                for a in args {
                    write!(f, " {}", term_arg(a))?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Type => write!(f, "type"),
            Kind::Pi(x, a, k) => {
                if k.has_free(x) {
                    write!(f, "{{{}:{}}} {}", x, a, k)
                } else {
                    write!(f, "{} -> {}", type_left(a), k)
                }
            }
        }
    }
}

impl fmt::Display for LfCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.binds.is_empty() {
            return write!(f, "·");
        }
        for (i, (h, a)) in self.binds.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", h, a)?;
        }
        Ok(())
    }
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.class {
            Classifier::Type(a) => write!(f, "{} : {}.", self.name, a),
            Classifier::Kind(k) => write!(f, "{} : {}.", self.name, k),
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.decls() {
            writeln!(f, "{}", d)?;
        }
        Ok(())
    }
}
