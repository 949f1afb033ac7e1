//! Recursive-descent parser producing a raw syntax tree in which names are
//! not yet resolved; see `elab` for resolution and eta-expansion.

use lflogic_core::syntax::Arity;

use crate::lexer::{tokenize, SyntaxError, Tok, Token};

/// An unresolved term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RTerm {
    Lam(String, Box<RTerm>),
    App(String, Vec<RTerm>),
}

/// An unresolved type or kind (`type` appears as the atom `type`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RType {
    Pi(Option<String>, Box<RType>, Box<RType>),
    Atom(String, Vec<RTerm>),
}

/// An unresolved context expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RCtx {
    pub var: Option<String>,
    pub binds: Vec<(String, RType)>,
}

/// An annotation as written: `*` or `@` with an optional index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RAnn {
    None,
    At(Option<u32>),
    Star(Option<u32>),
}

/// An unresolved formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RFormula {
    Atom { ctx: RCtx, term: RTerm, ty: RType, ann: RAnn },
    Top,
    Bot,
    Imp(Box<RFormula>, Box<RFormula>),
    And(Box<RFormula>, Box<RFormula>),
    Or(Box<RFormula>, Box<RFormula>),
    Ctx(String, String, Box<RFormula>),
    All(Vec<String>, Arity, Box<RFormula>),
    Exists(Vec<String>, Arity, Box<RFormula>),
}

/// A signature declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RDecl {
    pub name: String,
    pub class: RType,
    pub line: usize,
}

/// A block schema `{x:α,...}(y:A,...)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RBlock {
    pub header: Vec<(String, Arity)>,
    pub body: Vec<(String, RType)>,
}

/// A tactic whose terms are not yet elaborated. `with` values are kept as
/// token slices because whether they denote terms or contexts depends on
/// the assumption being applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RTactic {
    Intros(Vec<String>),
    Induction(usize),
    Case { hyp: String, keep: bool },
    Apply { hyp: String, args: Vec<Option<String>>, with: Vec<(String, Vec<Token>)> },
    Exists(RTerm),
    Search(Option<usize>),
    Split,
    Left,
    Right,
    Assert(RFormula),
    Clear(String),
    Weaken { hyp: String, ty: RType },
    Strengthen { hyp: String },
    Permute { hyp: String, pos: usize },
    Inst { hyp: String, nominal: String, term: RTerm },
}

/// A top-level command of a script.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Schema { name: String, blocks: Vec<RBlock> },
    Theorem { name: String, formula: RFormula },
    Tactic(RTactic),
    Undo,
}

/// A command with the source line it starts on and its source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located {
    pub cmd: Command,
    pub line: usize,
    pub text: String,
}

/// Parser state over a token vector.
pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

const KEYWORDS: &[&str] = &["forall", "exists", "ctx", "true", "false"];

impl Parser {
    pub fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: tokenize(src)?, pos: 0 })
    }

    pub fn from_tokens(mut toks: Vec<Token>) -> Parser {
        let (line, col) = toks.last().map_or((1, 1), |t| (t.line, t.col));
        if !matches!(toks.last(), Some(Token { tok: Tok::Eof, .. })) {
            toks.push(Token { tok: Tok::Eof, line, col });
        }
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(SyntaxError { line, col, msg: msg.into() })
    }

    fn unexpected<T>(&self, what: &str) -> PResult<T> {
        self.error(format!("expected {}, found {}", what, self.peek()))
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{}`", s))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{}`", s))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn num(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("a number"),
        }
    }

    fn starts_arg(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()) && s != "type",
            Tok::Sym("(") => true,
            _ => false,
        }
    }

    // ----- terms, types, arities -----

    pub fn term(&mut self) -> PResult<RTerm> {
        if self.eat_sym("[") {
            let x = self.ident()?;
            self.expect_sym("]")?;
            return Ok(RTerm::Lam(x, Box::new(self.term()?)));
        }
        if self.eat_sym("(") {
            let t = self.term()?;
            self.expect_sym(")")?;
            if self.starts_arg() {
                return self.error("a parenthesized term cannot be applied");
            }
            return Ok(t);
        }
        let h = self.ident()?;
        let mut args = Vec::new();
        while self.starts_arg() {
            args.push(self.arg()?);
        }
        Ok(RTerm::App(h, args))
    }

    fn arg(&mut self) -> PResult<RTerm> {
        if self.eat_sym("(") {
            let t = self.term()?;
            self.expect_sym(")")?;
            Ok(t)
        } else {
            Ok(RTerm::App(self.ident()?, vec![]))
        }
    }

    pub fn ty(&mut self) -> PResult<RType> {
        if self.eat_sym("{") {
            let x = self.ident()?;
            self.expect_sym(":")?;
            let a = self.ty()?;
            self.expect_sym("}")?;
            let b = self.ty()?;
            return Ok(RType::Pi(Some(x), Box::new(a), Box::new(b)));
        }
        let left = if self.eat_sym("(") {
            let a = self.ty()?;
            self.expect_sym(")")?;
            a
        } else {
            let a = match self.peek().clone() {
                Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                    self.bump();
                    s
                }
                _ => return self.unexpected("a type"),
            };
            let mut args = Vec::new();
            if a != "type" {
                while self.starts_arg() {
                    args.push(self.arg()?);
                }
            }
            RType::Atom(a, args)
        };
        if self.eat_sym("->") {
            let b = self.ty()?;
            return Ok(RType::Pi(None, Box::new(left), Box::new(b)));
        }
        Ok(left)
    }

    pub fn arity(&mut self) -> PResult<Arity> {
        let left = if self.eat_sym("(") {
            let a = self.arity()?;
            self.expect_sym(")")?;
            a
        } else {
            self.expect_kw("o")?;
            Arity::O
        };
        if self.eat_sym("->") {
            return Ok(Arity::arrow(left, self.arity()?));
        }
        Ok(left)
    }

    // ----- formulas -----

    pub fn ctx(&mut self) -> PResult<RCtx> {
        let mut c = RCtx { var: None, binds: vec![] };
        if self.eat_sym("·") || self.is_sym("|-") {
            return Ok(c);
        }
        loop {
            let x = self.ident()?;
            if self.eat_sym(":") {
                c.binds.push((x, self.ty()?));
            } else if c.var.is_none() && c.binds.is_empty() {
                c.var = Some(x);
            } else {
                return self.error("only the first item of a context may be a context variable");
            }
            if !self.eat_sym(",") {
                return Ok(c);
            }
        }
    }

    fn ann(&mut self) -> PResult<RAnn> {
        let idx = |p: &mut Parser| -> PResult<Option<u32>> {
            if matches!(p.peek(), Tok::Num(_)) {
                Ok(Some(p.num()?))
            } else {
                Ok(None)
            }
        };
        if self.eat_sym("*") {
            Ok(RAnn::Star(idx(self)?))
        } else if self.eat_sym("@") {
            Ok(RAnn::At(idx(self)?))
        } else {
            Ok(RAnn::None)
        }
    }

    pub fn formula(&mut self) -> PResult<RFormula> {
        if self.eat_kw("forall") || self.is_kw("exists") {
            let is_ex = self.eat_kw("exists");
            let mut xs = vec![self.ident()?];
            while !self.is_sym(":") {
                xs.push(self.ident()?);
            }
            self.expect_sym(":")?;
            let a = self.arity()?;
            self.expect_sym(".")?;
            let body = Box::new(self.formula()?);
            return Ok(if is_ex { RFormula::Exists(xs, a, body) } else { RFormula::All(xs, a, body) });
        }
        if self.eat_kw("ctx") {
            let g = self.ident()?;
            self.expect_sym(":")?;
            let c = self.ident()?;
            self.expect_sym(".")?;
            return Ok(RFormula::Ctx(g, c, Box::new(self.formula()?)));
        }
        let left = self.disjunction()?;
        if self.eat_sym("=>") {
            return Ok(RFormula::Imp(Box::new(left), Box::new(self.formula()?)));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> PResult<RFormula> {
        let mut f = self.conjunction()?;
        while self.eat_sym("\\/") {
            f = RFormula::Or(Box::new(f), Box::new(self.conjunction()?));
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<RFormula> {
        let mut f = self.formula_atom()?;
        while self.eat_sym("/\\") {
            f = RFormula::And(Box::new(f), Box::new(self.formula_atom()?));
        }
        Ok(f)
    }

    fn formula_atom(&mut self) -> PResult<RFormula> {
        if self.eat_kw("true") {
            return Ok(RFormula::Top);
        }
        if self.eat_kw("false") {
            return Ok(RFormula::Bot);
        }
        if self.is_kw("forall") || self.is_kw("exists") || self.is_kw("ctx") {
            return self.formula();
        }
        if self.eat_sym("(") {
            let f = self.formula()?;
            self.expect_sym(")")?;
            return Ok(f);
        }
        if self.eat_sym("{") {
            let ctx = self.ctx()?;
            self.expect_sym("|-")?;
            let term = self.term()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym("}")?;
            let ann = self.ann()?;
            return Ok(RFormula::Atom { ctx, term, ty, ann });
        }
        self.unexpected("a formula")
    }

    // ----- files -----

    /// `name : classifier.` declarations up to the end of input.
    pub fn signature(&mut self) -> PResult<Vec<RDecl>> {
        let mut out = Vec::new();
        while !self.at_eof() {
            let line = self.here().0;
            let name = self.ident()?;
            self.expect_sym(":")?;
            let class = self.ty()?;
            self.expect_sym(".")?;
            out.push(RDecl { name, class, line });
        }
        Ok(out)
    }

    fn block(&mut self) -> PResult<RBlock> {
        let mut header = Vec::new();
        while self.eat_sym("{") {
            loop {
                let x = self.ident()?;
                self.expect_sym(":")?;
                header.push((x, self.arity()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
        }
        self.expect_sym("(")?;
        let mut body = Vec::new();
        loop {
            let y = self.ident()?;
            self.expect_sym(":")?;
            body.push((y, self.ty()?));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(RBlock { header, body })
    }

    fn with_value(&mut self) -> PResult<Vec<Token>> {
        let start = self.pos;
        let mut depth = 0i32;
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Sym("(") | Tok::Sym("{") | Tok::Sym("[") => depth += 1,
                Tok::Sym(")") | Tok::Sym("}") | Tok::Sym("]") => depth -= 1,
                Tok::Sym(".") if depth == 0 => break,
                Tok::Sym(",") if depth == 0 && matches!(self.peek_at(1), Tok::Ident(_)) && matches!(self.peek_at(2), Tok::Sym("=")) => break,
                _ => {}
            }
            self.bump();
        }
        if self.pos == start {
            return self.unexpected("a value");
        }
        Ok(self.toks[start..self.pos].to_vec())
    }

    fn tactic(&mut self) -> PResult<Command> {
        let kw = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return self.unexpected("a command"),
        };
        self.bump();
        let t = match kw.as_str() {
            "undo" => Command::Undo,
            "intros" => {
                let mut names = Vec::new();
                while !self.is_sym(".") {
                    names.push(self.ident()?);
                }
                Command::Tactic(RTactic::Intros(names))
            }
            "induction" => {
                self.expect_kw("on")?;
                Command::Tactic(RTactic::Induction(self.num()? as usize))
            }
            "case" => {
                let hyp = self.ident()?;
                let keep = if self.eat_sym("(") {
                    self.expect_kw("keep")?;
                    self.expect_sym(")")?;
                    true
                } else {
                    false
                };
                Command::Tactic(RTactic::Case { hyp, keep })
            }
            "apply" => {
                let hyp = self.ident()?;
                let mut args = Vec::new();
                if self.eat_kw("to") {
                    loop {
                        if self.eat_sym("_") {
                            args.push(None);
                        } else if matches!(self.peek(), Tok::Ident(s) if s != "with") {
                            args.push(Some(self.ident()?));
                        } else {
                            break;
                        }
                    }
                    if args.is_empty() {
                        return self.unexpected("an argument");
                    }
                }
                let mut with = Vec::new();
                if self.eat_kw("with") {
                    loop {
                        let x = self.ident()?;
                        self.expect_sym("=")?;
                        with.push((x, self.with_value()?));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                Command::Tactic(RTactic::Apply { hyp, args, with })
            }
            "exists" => Command::Tactic(RTactic::Exists(self.term()?)),
            "search" => {
                let d = if matches!(self.peek(), Tok::Num(_)) { Some(self.num()? as usize) } else { None };
                Command::Tactic(RTactic::Search(d))
            }
            "split" => Command::Tactic(RTactic::Split),
            "left" => Command::Tactic(RTactic::Left),
            "right" => Command::Tactic(RTactic::Right),
            "assert" => Command::Tactic(RTactic::Assert(self.formula()?)),
            "clear" => Command::Tactic(RTactic::Clear(self.ident()?)),
            "weaken" => {
                let hyp = self.ident()?;
                self.expect_kw("with")?;
                Command::Tactic(RTactic::Weaken { hyp, ty: self.ty()? })
            }
            "strengthen" => Command::Tactic(RTactic::Strengthen { hyp: self.ident()? }),
            "permute" => {
                let hyp = self.ident()?;
                self.expect_kw("at")?;
                Command::Tactic(RTactic::Permute { hyp, pos: self.num()? as usize })
            }
            "inst" => {
                let hyp = self.ident()?;
                self.expect_kw("with")?;
                let nominal = self.ident()?;
                self.expect_sym("=")?;
                Command::Tactic(RTactic::Inst { hyp, nominal, term: self.term()? })
            }
            other => {
                self.pos -= 1;
                return self.error(format!("unknown command `{}`", other));
            }
        };
        Ok(t)
    }

    /// One command of a script, including its terminating period.
    pub fn command(&mut self) -> PResult<Command> {
        let cmd = if self.eat_kw("Schema") {
            let name = self.ident()?;
            self.expect_sym(":=")?;
            let mut blocks = vec![self.block()?];
            while self.eat_sym("|") {
                blocks.push(self.block()?);
            }
            Command::Schema { name, blocks }
        } else if self.eat_kw("Theorem") || self.eat_kw("Lemma") {
            let name = self.ident()?;
            self.expect_sym(":")?;
            Command::Theorem { name, formula: self.formula()? }
        } else {
            self.tactic()?
        };
        self.expect_sym(".")?;
        Ok(cmd)
    }
}

/// Parses a whole script into located commands.
pub fn parse_script(src: &str) -> PResult<Vec<Located>> {
    let lines: Vec<&str> = src.lines().collect();
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        let (line, col) = p.here();
        let cmd = p.command()?;
        let end = &p.toks[p.pos.saturating_sub(1)];
        let text = slice_text(&lines, (line, col), (end.line, end.col + 1));
        out.push(Located { cmd, line, text });
    }
    Ok(out)
}

fn slice_text(lines: &[&str], from: (usize, usize), to: (usize, usize)) -> String {
    let mut s = String::new();
    for l in from.0..=to.0 {
        let Some(text) = lines.get(l - 1) else { break };
        let chars: Vec<char> = text.chars().collect();
        let a = if l == from.0 { from.1 - 1 } else { 0 };
        let b = if l == to.0 { (to.1 - 1).min(chars.len()) } else { chars.len() };
        if a < b {
            s.extend(&chars[a..b]);
        }
        if l != to.0 {
            s.push(' ');
        }
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses a signature file.
pub fn parse_signature(src: &str) -> PResult<Vec<RDecl>> {
    Parser::new(src)?.signature()
}

/// Parses a standalone formula.
pub fn parse_formula(src: &str) -> PResult<RFormula> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    if !p.at_eof() {
        return p.unexpected("end of input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_declarations() {
        let d = parse_signature("of_lam : {R:tm -> tm}{T1:tp}{T2:tp} ({x:tm} of x T1 -> of (R x) T2) -> of (lam T1 ([x] R x)) (arr T1 T2).").unwrap();
        assert_eq!(d.len(), 1);
        assert!(matches!(&d[0].class, RType::Pi(Some(r), _, _) if r == "R"));
    }

    #[test]
    fn parses_schema_and_theorem() {
        let cmds = parse_script("Schema c := {T:o}(x:tm, y: of x T).\nTheorem t : ctx G:c. forall e : o. {G |- e : tm}*1 => true.\nintros.\n").unwrap();
        assert_eq!(cmds.len(), 3);
        assert!(matches!(&cmds[0].cmd, Command::Schema { blocks, .. } if blocks[0].header.len() == 1 && blocks[0].body.len() == 2));
        assert_eq!(cmds[2].text, "intros.");
        assert_eq!(cmds[2].line, 3);
    }

    #[test]
    fn reports_malformed_pi() {
        let e = parse_signature("c : {x:tm tm.").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.msg.contains("`}`"), "{}", e.msg);
    }

    #[test]
    fn apply_with_values_are_split() {
        let cmds = parse_script("apply IH to _ H2 with G = G, n:tm, e = app e1 (e2).").unwrap();
        match &cmds[0].cmd {
            Command::Tactic(RTactic::Apply { args, with, .. }) => {
                assert_eq!(args, &vec![None, Some("H2".to_string())]);
                assert_eq!(with.len(), 2);
                assert_eq!(with[0].1.len(), 5);
            }
            other => panic!("{:?}", other),
        }
    }
}
