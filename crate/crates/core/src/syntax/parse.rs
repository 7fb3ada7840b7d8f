//! Lexer and recursive-descent parser for the concrete grammar.

use super::ast::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMS: &[&str] = &[
    "==>", ":=", "=>>", "!=", "<=", ">=", "++", "..", "~>", "(", ")", "{", "}", "[", "]", "|",
    ";", ":", ",", ".", "`", "=", "<", ">", "+", "-", "*", "%", "#", "!",
];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    'outer: while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let n: i64 = text.parse().map_err(|_| ParseError {
                line,
                col,
                msg: format!("integer literal out of range: {text}"),
            })?;
            out.push(Spanned {
                tok: Tok::Int(n),
                line,
                col,
            });
            col += i - start;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(src[start..i].to_string()),
                line,
                col,
            });
            col += i - start;
            continue;
        }
        for s in SYMS {
            if src[i..].starts_with(s) {
                out.push(Spanned {
                    tok: Tok::Sym(s),
                    line,
                    col,
                });
                i += s.len();
                col += s.len();
                continue 'outer;
            }
        }
        return Err(ParseError {
            line,
            col,
            msg: format!("unexpected character {c:?}"),
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Context needed to expand array-access and constructor sugar.
#[derive(Clone)]
pub struct SugarCtx {
    pub classes: ClassTable,
    pub vars: TypingCtx,
}

impl SugarCtx {
    fn array_arity(&self, class: &str) -> Option<usize> {
        let fs = self.classes.fields(class)?;
        let mut n = 0;
        while fs.iter().any(|(f, t)| *f == format!("idx{n}") && *t == Type::Int) {
            n += 1;
        }
        if n > 0 {
            Some(n)
        } else {
            None
        }
    }

    fn var_class(&self, x: &str) -> Option<&str> {
        match self.vars.get(x) {
            Some(Type::Class(k)) => Some(k),
            _ => None,
        }
    }
}

pub struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Procedure parameter registry for call sugar: m(E) becomes m_x := E; m().
    pub params: BTreeMap<ProcName, (VarName, Type)>,
    /// When set, old(E) is accepted and desugared to a ghost variable.
    pub allow_old: bool,
    pub old_bindings: Vec<(VarName, Expr)>,
    pub sugar: Option<SugarCtx>,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            params: BTreeMap::new(),
            allow_old: false,
            old_bindings: Vec::new(),
            sugar: None,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        if self.pos + 1 < self.toks.len() {
            &self.toks[self.pos + 1].tok
        } else {
            &Tok::Eof
        }
    }

    fn here(&self) -> (usize, usize) {
        (self.toks[self.pos].line, self.toks[self.pos].col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(t) if *t == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {:?}", self.peek()))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(t) if t == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {:?}", self.peek()))
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other:?}")),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(format!("trailing input: {:?}", self.peek()))
        }
    }

    // ---------------- types and classes ----------------

    pub fn parse_type(&mut self) -> Result<Type, ParseError> {
        let name = self.expect_ident()?;
        Ok(match name.as_str() {
            "int" => Type::Int,
            "bool" => Type::Bool,
            "rgn" => Type::Rgn,
            "intlist" => Type::IntList,
            k => Type::Class(k.to_string()),
        })
    }

    /// `class K { f: T; g: T }`, repeated.
    pub fn parse_class_table(&mut self) -> Result<ClassTable, ParseError> {
        let mut ct = ClassTable::default();
        while self.eat_kw("class") {
            let name = self.expect_ident()?;
            self.expect_sym("{")?;
            let mut fields = Vec::new();
            while !self.eat_sym("}") {
                let f = self.expect_ident()?;
                self.expect_sym(":")?;
                let t = self.parse_type()?;
                fields.push((f, t));
                if !self.eat_sym(";") && !matches!(self.peek(), Tok::Sym("}")) {
                    return self.err("expected `;` or `}` in class body");
                }
            }
            if ct.classes.insert(name.clone(), fields).is_some() {
                return self.err(format!("class {name} declared twice"));
            }
        }
        Ok(ct)
    }

    /// `x: int; r: rgn` (`;` or `,` separated).
    pub fn parse_var_decls(&mut self) -> Result<Vec<(VarName, Type)>, ParseError> {
        let mut out = Vec::new();
        loop {
            if self.at_eof() || !matches!(self.peek(), Tok::Ident(_)) {
                break;
            }
            let x = self.expect_ident()?;
            self.expect_sym(":")?;
            let t = self.parse_type()?;
            out.push((x, t));
            if !self.eat_sym(";") && !self.eat_sym(",") {
                break;
            }
        }
        Ok(out)
    }

    // ---------------- expressions ----------------

    /// Full expression including and/or (used for program guards).
    pub fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.eat_kw("or") {
            let rhs = self.parse_and()?;
            lhs = Expr::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_cmp()?;
        while self.eat_kw("and") {
            let rhs = self.parse_cmp()?;
            lhs = Expr::Bin(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    /// Comparison-level expression: arithmetic with at most one relator.
    pub fn parse_cmp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_add()?;
        let op = match self.peek() {
            Tok::Sym("=") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Ne),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            Tok::Sym(">=") => Some(BinOp::Ge),
            Tok::Sym(">") => None, // handled below: a > b is b < a
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.parse_add()?;
            return Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)));
        }
        if matches!(self.peek(), Tok::Sym(">")) {
            self.bump();
            let rhs = self.parse_add()?;
            return Ok(Expr::Bin(BinOp::Lt, Box::new(rhs), Box::new(lhs)));
        }
        Ok(lhs)
    }

    fn parse_add(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_mul()?;
        loop {
            if self.eat_sym("+") {
                let rhs = self.parse_mul()?;
                lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat_sym("-") {
                let rhs = self.parse_mul()?;
                lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn parse_mul(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            if self.eat_sym("*") {
                let rhs = self.parse_unary()?;
                lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat_sym("%") {
                let rhs = self.parse_unary()?;
                lhs = Expr::Bin(BinOp::Mod, Box::new(lhs), Box::new(rhs));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("!") || self.eat_kw("not") {
            let e = self.parse_unary()?;
            return Ok(Expr::Not(Box::new(e)));
        }
        if self.eat_sym("-") {
            let e = self.parse_unary()?;
            return Ok(match e {
                Expr::Int(n) => Expr::Int(-n),
                other => Expr::Bin(BinOp::Sub, Box::new(Expr::Int(0)), Box::new(other)),
            });
        }
        self.parse_postfix()
    }

    /// Primary with trailing image selectors: G`f, G`any.
    pub fn parse_postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.parse_primary()?;
        while self.eat_sym("`") {
            let sel = if self.eat_kw("any") {
                FieldSel::Any
            } else {
                FieldSel::Field(self.expect_ident()?)
            };
            e = Expr::Image(Box::new(e), sel);
        }
        Ok(e)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                if self.eat_sym("}") {
                    return Ok(Expr::EmptyRgn);
                }
                let e = self.parse_expr()?;
                self.expect_sym("}")?;
                Ok(Expr::Singleton(Box::new(e)))
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::Bool(true))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::Bool(false))
                }
                "null" => {
                    self.bump();
                    Ok(Expr::Null)
                }
                "union" | "inter" | "diff" => {
                    self.bump();
                    let op = match name.as_str() {
                        "union" => RgnOp::Union,
                        "inter" => RgnOp::Inter,
                        _ => RgnOp::Diff,
                    };
                    self.expect_sym("(")?;
                    let a = self.parse_expr()?;
                    self.expect_sym(",")?;
                    let b = self.parse_expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::Rgn(op, Box::new(a), Box::new(b)))
                }
                "old" => {
                    self.bump();
                    if !self.allow_old {
                        return self.err("old(..) is only allowed in judgment pre/post sections");
                    }
                    self.expect_sym("(")?;
                    let e = self.parse_expr()?;
                    self.expect_sym(")")?;
                    if let Some((g, _)) = self.old_bindings.iter().find(|(_, b)| *b == e) {
                        return Ok(Expr::Var(g.clone()));
                    }
                    let ghost = format!("old_{}", self.old_bindings.len() + 1);
                    self.old_bindings.push((ghost.clone(), e));
                    Ok(Expr::Var(ghost))
                }
                _ => {
                    if matches!(self.peek2(), Tok::Sym("(")) {
                        if let Some(f) = SpecFn::from_name(&name) {
                            self.bump();
                            self.bump();
                            let mut args = Vec::new();
                            if !self.eat_sym(")") {
                                loop {
                                    args.push(self.parse_expr()?);
                                    if self.eat_sym(")") {
                                        break;
                                    }
                                    self.expect_sym(",")?;
                                }
                            }
                            if args.len() != f.arity() {
                                return self.err(format!(
                                    "{} expects {} argument(s)",
                                    f.name(),
                                    f.arity()
                                ));
                            }
                            return Ok(Expr::App(f, args));
                        }
                    }
                    self.bump();
                    Ok(Expr::Var(name))
                }
            },
            other => self.err(format!("expected expression, found {other:?}")),
        }
    }

    // ---------------- effects ----------------

    pub fn parse_effect(&mut self) -> Result<Effect, ParseError> {
        let mut eff = Effect::empty();
        if self.at_eof() || !self.peek_tag() {
            return Ok(eff);
        }
        let mut tags: Vec<RdWr> = self.parse_tag()?;
        loop {
            let target = self.parse_eff_target()?;
            for tag in &tags {
                eff.push(EffAtom {
                    kind: *tag,
                    target: target.clone(),
                });
            }
            if !self.eat_sym(",") {
                break;
            }
            if self.peek_tag() {
                tags = self.parse_tag()?;
            }
        }
        Ok(eff)
    }

    fn peek_tag(&self) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == "rd" || t == "wr" || t == "rw")
    }

    fn parse_tag(&mut self) -> Result<Vec<RdWr>, ParseError> {
        let t = self.expect_ident()?;
        Ok(match t.as_str() {
            "rd" => vec![RdWr::Rd],
            "wr" => vec![RdWr::Wr],
            "rw" => vec![RdWr::Rd, RdWr::Wr],
            _ => return self.err("expected rd, wr, or rw"),
        })
    }

    fn parse_eff_target(&mut self) -> Result<EffTarget, ParseError> {
        let e = self.parse_postfix()?;
        match e {
            Expr::Var(x) => Ok(EffTarget::Var(x)),
            Expr::Image(g, sel) => Ok(EffTarget::Image(*g, sel)),
            other => self.err(format!(
                "effect target must be a variable or region image, found {other}"
            )),
        }
    }

    // ---------------- unary formulas ----------------

    pub fn parse_uformula(&mut self) -> Result<UFormula, ParseError> {
        self.parse_uimp()
    }

    fn parse_uimp(&mut self) -> Result<UFormula, ParseError> {
        let lhs = self.parse_uor()?;
        if self.eat_sym("==>") {
            let rhs = self.parse_uimp()?;
            return Ok(UFormula::Imp(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_uor(&mut self) -> Result<UFormula, ParseError> {
        let mut lhs = self.parse_uand()?;
        while self.eat_kw("or") {
            let rhs = self.parse_uand()?;
            lhs = UFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_uand(&mut self) -> Result<UFormula, ParseError> {
        let mut lhs = self.parse_unot()?;
        while self.eat_kw("and") {
            let rhs = self.parse_unot()?;
            lhs = UFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unot(&mut self) -> Result<UFormula, ParseError> {
        if self.eat_kw("not") || self.eat_sym("!") {
            let p = self.parse_unot()?;
            return Ok(UFormula::Not(Box::new(p)));
        }
        self.parse_uatom()
    }

    fn parse_uatom(&mut self) -> Result<UFormula, ParseError> {
        if self.peek_kw("forall") {
            self.bump();
            let x = self.expect_ident()?;
            self.expect_sym(":")?;
            let k = self.expect_ident()?;
            self.expect_sym(".")?;
            let body = self.parse_uimp()?;
            return Ok(UFormula::Forall(x, k, Box::new(body)));
        }
        if self.peek_kw("true") && !matches!(self.peek2(), Tok::Sym("=") | Tok::Sym("!=")) {
            self.bump();
            return Ok(UFormula::True);
        }
        if self.peek_kw("false") && !matches!(self.peek2(), Tok::Sym("=") | Tok::Sym("!=")) {
            self.bump();
            return Ok(UFormula::False);
        }
        // try a comparison-level term first; fall back to a parenthesized formula
        let save = self.pos;
        match self.try_term_atom() {
            Ok(p) => Ok(p),
            Err(first_err) => {
                self.pos = save;
                if self.eat_sym("(") {
                    let p = self.parse_uimp()?;
                    self.expect_sym(")")?;
                    Ok(p)
                } else {
                    Err(first_err)
                }
            }
        }
    }

    /// Parse a term and classify the following relator into a formula atom.
    fn try_term_atom(&mut self) -> Result<UFormula, ParseError> {
        let lhs = self.parse_add()?;
        // points-to: x.f = T
        if matches!(self.peek(), Tok::Sym(".")) {
            let x = match &lhs {
                Expr::Var(x) => x.clone(),
                _ => return self.err("field selection requires a variable"),
            };
            self.bump();
            let f = self.expect_ident()?;
            self.expect_sym("=")?;
            let rhs = self.parse_add()?;
            return Ok(UFormula::PointsTo(x, f, rhs));
        }
        if self.eat_kw("subset") {
            let rhs = self.parse_add()?;
            return Ok(UFormula::Subset(lhs, rhs));
        }
        if self.eat_kw("in") {
            let rhs = self.parse_add()?;
            return Ok(UFormula::Subset(Expr::Singleton(Box::new(lhs)), rhs));
        }
        if self.eat_sym("#") {
            let rhs = self.parse_add()?;
            return Ok(UFormula::Subset(
                Expr::Rgn(RgnOp::Inter, Box::new(lhs), Box::new(rhs)),
                Expr::Singleton(Box::new(Expr::Null)),
            ));
        }
        let op = match self.peek() {
            Tok::Sym("=") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Ne),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            Tok::Sym(">=") => Some(BinOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.parse_add()?;
            return Ok(UFormula::Atom(Expr::Bin(op, Box::new(lhs), Box::new(rhs))));
        }
        if matches!(self.peek(), Tok::Sym(">")) {
            self.bump();
            let rhs = self.parse_add()?;
            return Ok(UFormula::Atom(Expr::Bin(
                BinOp::Lt,
                Box::new(rhs),
                Box::new(lhs),
            )));
        }
        // bare boolean expression (a variable or negation already consumed upstream)
        Ok(UFormula::Atom(lhs))
    }

    // ---------------- relational formulas ----------------

    pub fn parse_rformula(&mut self) -> Result<RFormula, ParseError> {
        self.parse_rimp()
    }

    fn parse_rimp(&mut self) -> Result<RFormula, ParseError> {
        let lhs = self.parse_ror()?;
        if self.eat_sym("==>") {
            let rhs = self.parse_rimp()?;
            return Ok(RFormula::Imp(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_ror(&mut self) -> Result<RFormula, ParseError> {
        let mut lhs = self.parse_rand()?;
        while self.eat_kw("or") {
            let rhs = self.parse_rand()?;
            lhs = RFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_rand(&mut self) -> Result<RFormula, ParseError> {
        let mut lhs = self.parse_rnot()?;
        while self.eat_kw("and") {
            let rhs = self.parse_rnot()?;
            lhs = RFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_rnot(&mut self) -> Result<RFormula, ParseError> {
        if self.eat_kw("not") || self.eat_sym("!") {
            let p = self.parse_rnot()?;
            return Ok(RFormula::Not(Box::new(p)));
        }
        self.parse_ratom()
    }

    fn parse_ratom(&mut self) -> Result<RFormula, ParseError> {
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.bump();
                let p = self.parse_rimp()?;
                self.expect_sym(")")?;
                Ok(p)
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => {
                    self.bump();
                    Ok(RFormula::True)
                }
                "false" => {
                    self.bump();
                    Ok(RFormula::False)
                }
                "eq" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let a = self.parse_expr()?;
                    self.expect_sym(",")?;
                    let b = self.parse_expr()?;
                    self.expect_sym(")")?;
                    Ok(RFormula::CrossEq(a, b))
                }
                "agr" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let mut items = Vec::new();
                    loop {
                        let e = self.parse_add()?;
                        match e {
                            Expr::Image(g, sel) => items.push(RFormula::Agree(*g, sel)),
                            other => items.push(RFormula::CrossEq(other.clone(), other)),
                        }
                        if self.eat_sym(")") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                    Ok(RFormula::and(items))
                }
                "later" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let p = self.parse_rimp()?;
                    self.expect_sym(")")?;
                    Ok(RFormula::Later(Box::new(p)))
                }
                "L" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let p = self.parse_uformula()?;
                    self.expect_sym(")")?;
                    Ok(RFormula::LEmb(p))
                }
                "R" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let p = self.parse_uformula()?;
                    self.expect_sym(")")?;
                    Ok(RFormula::REmb(p))
                }
                "B" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let p = self.parse_uformula()?;
                    self.expect_sym(")")?;
                    Ok(RFormula::both(p))
                }
                "forall" => {
                    self.bump();
                    let x = self.expect_ident()?;
                    self.expect_sym("|")?;
                    let x2 = self.expect_ident()?;
                    self.expect_sym(":")?;
                    let k = self.expect_ident()?;
                    self.expect_sym(".")?;
                    let body = self.parse_rimp()?;
                    Ok(RFormula::Forall(x, x2, k, Box::new(body)))
                }
                _ => self.err(format!(
                    "expected relational atom (eq, agr, L, R, B, later, forall), found `{name}`"
                )),
            },
            other => self.err(format!("expected relational formula, found {other:?}")),
        }
    }

    // ---------------- commands ----------------

    pub fn parse_command(&mut self) -> Result<Command, ParseError> {
        let mut parts = vec![self.parse_stmt()?];
        while self.eat_sym(";") {
            if self.at_eof() || self.stmt_terminator() {
                break;
            }
            parts.push(self.parse_stmt()?);
        }
        let mut flat = Vec::new();
        for p in parts {
            for q in p.seq_parts() {
                flat.push(q.clone());
            }
        }
        Ok(Command::seq(flat))
    }

    fn stmt_terminator(&self) -> bool {
        matches!(self.peek(), Tok::Sym("|") | Tok::Sym(")") | Tok::Sym("]"))
            || self.peek_kw("else")
            || self.peek_kw("fi")
            || self.peek_kw("od")
            || self.peek_kw("in")
            || self.peek_kw("end")
    }

    fn parse_stmt(&mut self) -> Result<Command, ParseError> {
        if self.eat_kw("skip") {
            return Ok(Command::skip());
        }
        if self.peek_kw("if") {
            self.bump();
            let e = self.parse_expr()?;
            self.expect_kw("then")?;
            let c = self.parse_command()?;
            let d = if self.eat_kw("else") {
                self.parse_command()?
            } else {
                Command::skip()
            };
            self.expect_kw("fi")?;
            return Ok(Command::If(e, Box::new(c), Box::new(d)));
        }
        if self.peek_kw("while") {
            self.bump();
            let e = self.parse_expr()?;
            self.expect_kw("do")?;
            let c = self.parse_command()?;
            self.expect_kw("od")?;
            return Ok(Command::While(e, Box::new(c)));
        }
        if self.peek_kw("let") {
            self.bump();
            let (m, body_subst) = self.parse_proc_header()?;
            self.expect_sym("=")?;
            let b = self.parse_command()?;
            self.expect_kw("in")?;
            let c = self.parse_command()?;
            self.expect_kw("end")?;
            let b = apply_rename(&b, &body_subst);
            return Ok(Command::Let(m, Box::new(b), Box::new(c)));
        }
        // x++ / assignment / field ops / array sugar / call
        let x = self.expect_ident()?;
        if self.eat_sym("++") {
            return Ok(Command::Atom(Atomic::Assign(
                x.clone(),
                Expr::Bin(BinOp::Add, Box::new(Expr::Var(x)), Box::new(Expr::Int(1))),
            )));
        }
        if self.eat_sym("(") {
            // call, possibly with an argument
            if self.eat_sym(")") {
                return Ok(Command::Atom(Atomic::Call(x)));
            }
            let arg = self.parse_expr()?;
            self.expect_sym(")")?;
            let (px, _) = self
                .params
                .get(&x)
                .cloned()
                .ok_or(())
                .or_else(|_| self.err(format!("call {x}(..) but {x} has no declared parameter")))?;
            return Ok(Command::seq(vec![
                Command::Atom(Atomic::Assign(px, arg)),
                Command::Atom(Atomic::Call(x)),
            ]));
        }
        if self.eat_sym(".") {
            let f = self.expect_ident()?;
            self.expect_sym(":=")?;
            let src = self.parse_atom_src()?;
            return Ok(Command::Atom(Atomic::FieldSet(x, f, src)));
        }
        if self.eat_sym("[") {
            let idx = self.parse_expr()?;
            self.expect_sym("]")?;
            self.expect_sym(":=")?;
            let rhs = self.parse_expr()?;
            return self.desugar_array_write(&x, &idx, &rhs);
        }
        self.expect_sym(":=")?;
        if self.eat_kw("new") {
            let k = self.expect_ident()?;
            if self.eat_sym("(") {
                let mut args = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        args.push(self.parse_expr()?);
                        if self.eat_sym(")") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                }
                return self.desugar_ctor(&x, &k, &args);
            }
            return Ok(Command::Atom(Atomic::Alloc(x, k)));
        }
        // x := y.f | x := a[E] | x := E
        if let Tok::Ident(y) = self.peek().clone() {
            if matches!(self.peek2(), Tok::Sym(".")) {
                self.bump();
                self.bump();
                let f = self.expect_ident()?;
                return Ok(Command::Atom(Atomic::FieldGet(x, y, f)));
            }
            if matches!(self.peek2(), Tok::Sym("[")) {
                self.bump();
                self.bump();
                let idx = self.parse_expr()?;
                self.expect_sym("]")?;
                return self.desugar_array_read(&x, &y, &idx);
            }
        }
        let e = self.parse_expr()?;
        Ok(Command::Atom(Atomic::Assign(x, e)))
    }

    fn parse_atom_src(&mut self) -> Result<AtomSrc, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(AtomSrc::Int(n))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(AtomSrc::Int(-n))
                    }
                    _ => self.err("expected integer literal after `-`"),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(match name.as_str() {
                    "true" => AtomSrc::Bool(true),
                    "false" => AtomSrc::Bool(false),
                    "null" => AtomSrc::Null,
                    _ => AtomSrc::Var(name),
                })
            }
            other => self.err(format!(
                "field update source must be a variable or literal, found {other:?}"
            )),
        }
    }

    /// `m()` or `m(x: T)`; registers the parameter and returns the rename
    /// applied to the body (parameter to its mangled global).
    fn parse_proc_header(&mut self) -> Result<(ProcName, Option<(VarName, VarName)>), ParseError> {
        let m = self.expect_ident()?;
        self.expect_sym("(")?;
        if self.eat_sym(")") {
            return Ok((m, None));
        }
        let px = self.expect_ident()?;
        self.expect_sym(":")?;
        let t = self.parse_type()?;
        self.expect_sym(")")?;
        let global = format!("{m}_{px}");
        self.params.insert(m.clone(), (global.clone(), t));
        Ok((m, Some((px, global))))
    }

    fn desugar_ctor(&mut self, x: &str, k: &str, args: &[Expr]) -> Result<Command, ParseError> {
        let sugar = match &self.sugar {
            Some(s) => s.clone(),
            None => return self.err("constructor sugar needs class declarations in scope"),
        };
        let fields = match sugar.classes.fields(k) {
            Some(fs) => fs.to_vec(),
            None => return self.err(format!("unknown class {k}")),
        };
        if args.len() > fields.len() {
            return self.err(format!("class {k} has only {} field(s)", fields.len()));
        }
        for a in args {
            if a.contains_var(x) {
                return self.err(format!(
                    "constructor argument mentions target {x}; desugar manually with a temporary"
                ));
            }
        }
        let mut parts = vec![Command::Atom(Atomic::Alloc(x.to_string(), k.to_string()))];
        for ((f, _), a) in fields.iter().zip(args.iter()) {
            let src = match a {
                Expr::Var(v) => AtomSrc::Var(v.clone()),
                Expr::Int(n) => AtomSrc::Int(*n),
                Expr::Bool(b) => AtomSrc::Bool(*b),
                Expr::Null => AtomSrc::Null,
                other => {
                    return self.err(format!(
                        "constructor argument must be a variable or literal, found {other}"
                    ))
                }
            };
            parts.push(Command::Atom(Atomic::FieldSet(
                x.to_string(),
                f.clone(),
                src,
            )));
        }
        Ok(Command::seq(parts))
    }

    fn array_arity_of(&mut self, arr: &str) -> Result<usize, ParseError> {
        let sugar = match &self.sugar {
            Some(s) => s.clone(),
            None => return self.err("array sugar needs class and variable declarations in scope"),
        };
        let class = match sugar.var_class(arr) {
            Some(k) => k.to_string(),
            None => return self.err(format!("{arr} is not a declared object variable")),
        };
        match sugar.array_arity(&class) {
            Some(n) => Ok(n),
            None => self.err(format!("class {class} has no idx0.. fields")),
        }
    }

    fn desugar_array_write(
        &mut self,
        arr: &str,
        idx: &Expr,
        rhs: &Expr,
    ) -> Result<Command, ParseError> {
        let n = self.array_arity_of(arr)?;
        let mut cmd = Command::skip();
        for k in (0..n).rev() {
            let guard = Expr::Bin(BinOp::Eq, Box::new(idx.clone()), Box::new(Expr::Int(k as i64)));
            let folded = const_fold(&replace_subterm(rhs, idx, &Expr::Int(k as i64)));
            let src = match folded {
                Expr::Int(v) => AtomSrc::Int(v),
                Expr::Bool(b) => AtomSrc::Bool(b),
                Expr::Null => AtomSrc::Null,
                Expr::Var(v) => AtomSrc::Var(v),
                other => {
                    return self.err(format!(
                        "array write value {other} does not reduce to a variable or literal at index {k}"
                    ))
                }
            };
            let assign = Command::Atom(Atomic::FieldSet(
                arr.to_string(),
                format!("idx{k}"),
                src,
            ));
            cmd = Command::If(guard, Box::new(assign), Box::new(cmd));
        }
        Ok(cmd)
    }

    fn desugar_array_read(
        &mut self,
        x: &str,
        arr: &str,
        idx: &Expr,
    ) -> Result<Command, ParseError> {
        let n = self.array_arity_of(arr)?;
        let mut cmd = Command::skip();
        for k in (0..n).rev() {
            let guard = Expr::Bin(BinOp::Eq, Box::new(idx.clone()), Box::new(Expr::Int(k as i64)));
            let assign = Command::Atom(Atomic::FieldGet(
                x.to_string(),
                arr.to_string(),
                format!("idx{k}"),
            ));
            cmd = Command::If(guard, Box::new(assign), Box::new(cmd));
        }
        Ok(cmd)
    }

    // ---------------- biprograms ----------------

    pub fn parse_biprogram(&mut self) -> Result<Biprogram, ParseError> {
        let mut parts = vec![self.parse_bistmt()?];
        while self.eat_sym(";") {
            if self.at_eof() || self.stmt_terminator() {
                break;
            }
            parts.push(self.parse_bistmt()?);
        }
        let mut flat = Vec::new();
        for p in parts {
            for q in p.biseq_parts() {
                flat.push(q.clone());
            }
        }
        Ok(Biprogram::biseq(flat))
    }

    fn parse_bistmt(&mut self) -> Result<Biprogram, ParseError> {
        if self.eat_sym("(") {
            let c = self.parse_command()?;
            self.expect_sym("|")?;
            let d = self.parse_command()?;
            self.expect_sym(")")?;
            return Ok(Biprogram::Split(c, d));
        }
        if self.eat_sym("[") {
            let c = self.parse_command()?;
            self.expect_sym("]")?;
            let mut syncs = Vec::new();
            for part in c.seq_parts() {
                match part {
                    Command::Atom(a) => syncs.push(Biprogram::Sync(a.clone())),
                    other => {
                        return self.err(format!(
                            "sync brackets may only contain atomic commands, found {other}"
                        ))
                    }
                }
            }
            return Ok(Biprogram::biseq(syncs));
        }
        if self.peek_kw("if") {
            self.bump();
            let e = self.parse_expr()?;
            self.expect_sym("|")?;
            let e2 = self.parse_expr()?;
            self.expect_kw("then")?;
            let c = self.parse_biprogram()?;
            let d = if self.eat_kw("else") {
                self.parse_biprogram()?
            } else {
                Biprogram::sync_skip()
            };
            self.expect_kw("fi")?;
            return Ok(Biprogram::BiIf(e, e2, Box::new(c), Box::new(d)));
        }
        if self.peek_kw("while") {
            self.bump();
            let e = self.parse_expr()?;
            self.expect_sym("|")?;
            let e2 = self.parse_expr()?;
            let (p, p2) = if self.eat_kw("align") {
                let p = self.parse_rformula()?;
                self.expect_sym("|")?;
                let p2 = self.parse_rformula()?;
                (p, p2)
            } else {
                (RFormula::False, RFormula::False)
            };
            self.expect_kw("do")?;
            let c = self.parse_biprogram()?;
            self.expect_kw("od")?;
            return Ok(Biprogram::BiWhile(e, e2, p, p2, Box::new(c)));
        }
        if self.peek_kw("let") {
            self.bump();
            let (m, body_subst) = self.parse_proc_header()?;
            self.expect_sym("=")?;
            self.expect_sym("(")?;
            let b = self.parse_command()?;
            self.expect_sym("|")?;
            let b2 = self.parse_command()?;
            self.expect_sym(")")?;
            self.expect_kw("in")?;
            let c = self.parse_biprogram()?;
            self.expect_kw("end")?;
            let b = apply_rename(&b, &body_subst);
            let b2 = apply_rename(&b2, &body_subst);
            return Ok(Biprogram::BiLet(m, b, b2, Box::new(c)));
        }
        self.err(format!(
            "expected biprogram form `(C|C)`, `[A]`, if, while, or let; found {:?}",
            self.peek()
        ))
    }

    // ---------------- specs ----------------

    /// `pre ~> post [eff]`
    pub fn parse_unary_spec(&mut self) -> Result<UnarySpec, ParseError> {
        let pre = self.parse_uformula()?;
        self.expect_sym("~>")?;
        let post = self.parse_uformula()?;
        self.expect_sym("[")?;
        let frame = self.parse_effect()?;
        self.expect_sym("]")?;
        Ok(UnarySpec { pre, post, frame })
    }

    /// `pre =>> post [effL | effR]` (or `[eff]` for both sides).
    pub fn parse_rel_spec(&mut self) -> Result<RelSpec, ParseError> {
        let pre = self.parse_rformula()?;
        self.expect_sym("=>>")?;
        let post = self.parse_rformula()?;
        self.expect_sym("[")?;
        let frame_l = self.parse_effect()?;
        let frame_r = if self.eat_sym("|") {
            self.parse_effect()?
        } else {
            frame_l.clone()
        };
        self.expect_sym("]")?;
        Ok(RelSpec {
            pre,
            post,
            frame_l,
            frame_r,
        })
    }
}

fn apply_rename(c: &Command, subst: &Option<(VarName, VarName)>) -> Command {
    match subst {
        None => c.clone(),
        Some((from, to)) => rename_var_cmd(c, from, to),
    }
}

/// Rename a variable throughout a command (used for parameter mangling).
pub fn rename_var_cmd(c: &Command, from: &str, to: &str) -> Command {
    let rv = |x: &VarName| -> VarName {
        if x == from {
            to.to_string()
        } else {
            x.clone()
        }
    };
    let re = |e: &Expr| e.subst(from, &Expr::Var(to.to_string()));
    match c {
        Command::Atom(a) => Command::Atom(match a {
            Atomic::Skip => Atomic::Skip,
            Atomic::Call(m) => Atomic::Call(m.clone()),
            Atomic::EndLet(m) => Atomic::EndLet(m.clone()),
            Atomic::Assign(x, e) => Atomic::Assign(rv(x), re(e)),
            Atomic::Alloc(x, k) => Atomic::Alloc(rv(x), k.clone()),
            Atomic::FieldGet(x, y, f) => Atomic::FieldGet(rv(x), rv(y), f.clone()),
            Atomic::FieldSet(x, f, src) => Atomic::FieldSet(
                rv(x),
                f.clone(),
                match src {
                    AtomSrc::Var(v) => AtomSrc::Var(rv(v)),
                    other => other.clone(),
                },
            ),
        }),
        Command::Seq(a, b) => Command::Seq(
            Box::new(rename_var_cmd(a, from, to)),
            Box::new(rename_var_cmd(b, from, to)),
        ),
        Command::If(e, a, b) => Command::If(
            re(e),
            Box::new(rename_var_cmd(a, from, to)),
            Box::new(rename_var_cmd(b, from, to)),
        ),
        Command::While(e, a) => Command::While(re(e), Box::new(rename_var_cmd(a, from, to))),
        Command::Let(m, b, c2) => Command::Let(
            m.clone(),
            Box::new(rename_var_cmd(b, from, to)),
            Box::new(rename_var_cmd(c2, from, to)),
        ),
    }
}

/// Replace every occurrence of `pat` (as a subterm) with `rep`.
pub fn replace_subterm(e: &Expr, pat: &Expr, rep: &Expr) -> Expr {
    if e == pat {
        return rep.clone();
    }
    match e {
        Expr::Bin(op, a, b) => Expr::Bin(
            *op,
            Box::new(replace_subterm(a, pat, rep)),
            Box::new(replace_subterm(b, pat, rep)),
        ),
        Expr::Rgn(op, a, b) => Expr::Rgn(
            *op,
            Box::new(replace_subterm(a, pat, rep)),
            Box::new(replace_subterm(b, pat, rep)),
        ),
        Expr::Not(a) => Expr::Not(Box::new(replace_subterm(a, pat, rep))),
        Expr::Singleton(a) => Expr::Singleton(Box::new(replace_subterm(a, pat, rep))),
        Expr::Image(a, f) => Expr::Image(Box::new(replace_subterm(a, pat, rep)), f.clone()),
        Expr::App(fun, args) => Expr::App(
            *fun,
            args.iter().map(|a| replace_subterm(a, pat, rep)).collect(),
        ),
        other => other.clone(),
    }
}

/// Fold constant integer/boolean arithmetic.
pub fn const_fold(e: &Expr) -> Expr {
    match e {
        Expr::Bin(op, a, b) => {
            let a = const_fold(a);
            let b = const_fold(b);
            if let (Expr::Int(x), Expr::Int(y)) = (&a, &b) {
                match op {
                    BinOp::Add => return Expr::Int(x.wrapping_add(*y)),
                    BinOp::Sub => return Expr::Int(x.wrapping_sub(*y)),
                    BinOp::Mul => return Expr::Int(x.wrapping_mul(*y)),
                    BinOp::Mod if *y != 0 => return Expr::Int(x.wrapping_rem(*y)),
                    BinOp::Eq => return Expr::Bool(x == y),
                    BinOp::Ne => return Expr::Bool(x != y),
                    BinOp::Lt => return Expr::Bool(x < y),
                    BinOp::Le => return Expr::Bool(x <= y),
                    BinOp::Ge => return Expr::Bool(x >= y),
                    _ => {}
                }
            }
            Expr::Bin(*op, Box::new(a), Box::new(b))
        }
        Expr::Not(a) => {
            let a = const_fold(a);
            if let Expr::Bool(v) = a {
                Expr::Bool(!v)
            } else {
                Expr::Not(Box::new(a))
            }
        }
        other => other.clone(),
    }
}

// ---------------- convenience entry points ----------------

pub fn parse_command_str(src: &str) -> Result<Command, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.parse_command()?;
    p.expect_eof()?;
    Ok(c)
}

pub fn parse_biprogram_str(src: &str) -> Result<Biprogram, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.parse_biprogram()?;
    p.expect_eof()?;
    Ok(c)
}

pub fn parse_uformula_str(src: &str) -> Result<UFormula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.parse_uformula()?;
    p.expect_eof()?;
    Ok(f)
}

pub fn parse_rformula_str(src: &str) -> Result<RFormula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.parse_rformula()?;
    p.expect_eof()?;
    Ok(f)
}

pub fn parse_effect_str(src: &str) -> Result<Effect, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.parse_effect()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_expr_str(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.parse_expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_class_table_str(src: &str) -> Result<ClassTable, ParseError> {
    let mut p = Parser::new(src)?;
    let ct = p.parse_class_table()?;
    p.expect_eof()?;
    Ok(ct)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_factorial_command() {
        let c = parse_command_str("x := 1; while y > 0 do x := x * y; y := y - 1 od").unwrap();
        let parts = c.seq_parts();
        assert_eq!(parts.len(), 2);
        assert!(matches!(parts[1], Command::While(..)));
        // y > 0 normalizes to 0 < y
        if let Command::While(e, _) = parts[1] {
            assert_eq!(
                *e,
                Expr::Bin(
                    BinOp::Lt,
                    Box::new(Expr::Int(0)),
                    Box::new(Expr::var("y"))
                )
            );
        }
    }

    #[test]
    fn parses_skip() {
        assert!(parse_command_str("skip").unwrap().is_skip());
    }

    #[test]
    fn split_of_skips_canonicalizes_to_sync_skip() {
        let b = parse_biprogram_str("( skip | skip )").unwrap();
        assert_eq!(b.canon(), Biprogram::sync_skip());
    }

    #[test]
    fn parses_sync_and_split() {
        let b = parse_biprogram_str("( x := 0 | x := 0 ); [ y := y - 1 ]").unwrap();
        let parts = b.biseq_parts();
        assert_eq!(parts.len(), 2);
        assert!(matches!(parts[0], Biprogram::Split(..)));
        assert!(matches!(parts[1], Biprogram::Sync(Atomic::Assign(..))));
    }

    #[test]
    fn parses_while_biprogram_with_alignment_guards() {
        let b = parse_biprogram_str(
            "while p != null | p != null align L(p.del = true) | R(p.del = true) do ( skip | skip ) od",
        )
        .unwrap();
        assert!(matches!(b, Biprogram::BiWhile(..)));
    }

    #[test]
    fn parses_effects() {
        let e = parse_effect_str("rw s, p, rd r, r`val, r`nxt, r`del").unwrap();
        assert!(e.contains(&EffAtom::rd_var("s")));
        assert!(e.contains(&EffAtom::wr_var("s")));
        assert!(e.contains(&EffAtom::wr_var("p")));
        assert!(!e.contains(&EffAtom::wr_var("r")));
        assert_eq!(e.0.len(), 8);
    }

    #[test]
    fn parses_pointsto_and_subset() {
        let f = parse_uformula_str("p in r and r`nxt subset r and p.del = true").unwrap();
        assert_eq!(f.conjuncts().len(), 3);
    }

    #[test]
    fn parses_relational_formula() {
        let f = parse_rformula_str(
            "B(y >= 0) and eq(y, y) ==> later(eq(x, x) and agr({p}`any))",
        )
        .unwrap();
        assert!(matches!(f, RFormula::Imp(..)));
    }

    #[test]
    fn old_requires_permission() {
        assert!(parse_uformula_str("s = sum(listnd(old(p)))").is_err());
        let mut p = Parser::new("s = sum(listnd(old(p)))").unwrap();
        p.allow_old = true;
        let f = p.parse_uformula().unwrap();
        assert_eq!(p.old_bindings.len(), 1);
        assert_eq!(p.old_bindings[0].1, Expr::var("p"));
        let mut vars = std::collections::BTreeSet::new();
        f.vars(&mut vars);
        assert!(vars.contains("old_1"));
    }

    #[test]
    fn call_sugar_uses_registered_param() {
        let src = "let push(x: int) = size := size + x in push(4) end";
        let c = parse_command_str(src).unwrap();
        if let Command::Let(m, b, cli) = c {
            assert_eq!(m, "push");
            let mut vars = std::collections::BTreeSet::new();
            b.vars(&mut vars);
            assert!(vars.contains("push_x"));
            let parts = cli.seq_parts();
            assert_eq!(parts.len(), 2);
            assert_eq!(
                *parts[0],
                Command::Atom(Atomic::Assign("push_x".into(), Expr::Int(4)))
            );
        } else {
            panic!("expected let");
        }
    }
}
