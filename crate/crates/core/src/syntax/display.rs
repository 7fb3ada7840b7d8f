//! Concrete-syntax rendering of the AST.

use super::ast::*;
use std::fmt;

fn prec_of(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Mod => 5,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, prec: u8) -> fmt::Result {
    match e {
        Expr::Int(n) => write!(f, "{n}"),
        Expr::Bool(b) => write!(f, "{b}"),
        Expr::Null => write!(f, "null"),
        Expr::Var(x) => write!(f, "{x}"),
        Expr::Bin(op, a, b) => {
            let p = prec_of(*op);
            if p < prec {
                write!(f, "(")?;
            }
            write_expr(f, a, p)?;
            write!(f, " {op} ")?;
            write_expr(f, b, p + 1)?;
            if p < prec {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Not(a) => {
            write!(f, "!")?;
            write_expr(f, a, 6)
        }
        Expr::EmptyRgn => write!(f, "{{}}"),
        Expr::Singleton(a) => {
            write!(f, "{{")?;
            write_expr(f, a, 0)?;
            write!(f, "}}")
        }
        Expr::Image(g, sel) => {
            write_expr(f, g, 6)?;
            write!(f, "`{sel}")
        }
        Expr::Rgn(op, a, b) => {
            write!(f, "{op}(")?;
            write_expr(f, a, 0)?;
            write!(f, ", ")?;
            write_expr(f, b, 0)?;
            write!(f, ")")
        }
        Expr::App(fun, args) => {
            write!(f, "{}(", fun.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_expr(f, a, 0)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl fmt::Display for Atomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atomic::Skip => write!(f, "skip"),
            Atomic::Call(m) => write!(f, "{m}()"),
            Atomic::Assign(x, e) => write!(f, "{x} := {e}"),
            Atomic::Alloc(x, k) => write!(f, "{x} := new {k}"),
            Atomic::FieldGet(x, y, fld) => write!(f, "{x} := {y}.{fld}"),
            Atomic::FieldSet(x, fld, src) => write!(f, "{x}.{fld} := {}", src.as_expr()),
            Atomic::EndLet(m) => write!(f, "elet({m})"),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Atom(a) => write!(f, "{a}"),
            Command::Seq(a, b) => write!(f, "{a}; {b}"),
            Command::If(e, c, d) => {
                if d.is_skip() {
                    write!(f, "if {e} then {c} fi")
                } else {
                    write!(f, "if {e} then {c} else {d} fi")
                }
            }
            Command::While(e, c) => write!(f, "while {e} do {c} od"),
            Command::Let(m, b, c) => write!(f, "let {m}() = {b} in {c} end"),
        }
    }
}

impl fmt::Display for Biprogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Biprogram::Split(c, d) => write!(f, "( {c} | {d} )"),
            Biprogram::Sync(a) => write!(f, "[ {a} ]"),
            Biprogram::BiSeq(a, b) => write!(f, "{a}; {b}"),
            Biprogram::BiIf(e, e2, c, d) => {
                write!(f, "if {e} | {e2} then {c} else {d} fi")
            }
            Biprogram::BiWhile(e, e2, p, p2, c) => {
                write!(f, "while {e} | {e2} align {p} | {p2} do {c} od")
            }
            Biprogram::BiLet(m, b, b2, c) => {
                write!(f, "let {m}() = ( {b} | {b2} ) in {c} end")
            }
        }
    }
}

impl fmt::Display for EffTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffTarget::Var(x) => write!(f, "{x}"),
            EffTarget::Image(g, sel) => {
                write_expr(f, g, 6)?;
                write!(f, "`{sel}")
            }
        }
    }
}

impl fmt::Display for EffAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.target)
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn uprec(p: &UFormula) -> u8 {
    match p {
        UFormula::Imp(..) => 1,
        UFormula::Or(..) => 2,
        UFormula::And(..) => 3,
        UFormula::Not(..) => 4,
        _ => 5,
    }
}

fn write_uf(f: &mut fmt::Formatter<'_>, p: &UFormula, prec: u8) -> fmt::Result {
    let my = uprec(p);
    let paren = my < prec;
    if paren {
        write!(f, "(")?;
    }
    match p {
        UFormula::True => write!(f, "true")?,
        UFormula::False => write!(f, "false")?,
        UFormula::Atom(e) => write_expr(f, e, 3)?,
        UFormula::PointsTo(x, fld, e) => write!(f, "{x}.{fld} = {e}")?,
        UFormula::Subset(a, b) => write!(f, "{a} subset {b}")?,
        UFormula::Not(q) => {
            write!(f, "not ")?;
            write_uf(f, q, 4)?;
        }
        UFormula::And(a, b) => {
            write_uf(f, a, 3)?;
            write!(f, " and ")?;
            write_uf(f, b, 4)?;
        }
        UFormula::Or(a, b) => {
            write_uf(f, a, 2)?;
            write!(f, " or ")?;
            write_uf(f, b, 3)?;
        }
        UFormula::Imp(a, b) => {
            write_uf(f, a, 2)?;
            write!(f, " ==> ")?;
            write_uf(f, b, 1)?;
        }
        UFormula::Forall(x, k, q) => {
            write!(f, "forall {x}: {k} . ")?;
            write_uf(f, q, 1)?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for UFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_uf(f, self, 0)
    }
}

fn rprec(p: &RFormula) -> u8 {
    match p {
        RFormula::Imp(..) => 1,
        RFormula::Or(..) => 2,
        RFormula::And(..) => 3,
        RFormula::Not(..) => 4,
        _ => 5,
    }
}

fn write_rf(f: &mut fmt::Formatter<'_>, p: &RFormula, prec: u8) -> fmt::Result {
    let my = rprec(p);
    let paren = my < prec;
    if paren {
        write!(f, "(")?;
    }
    match p {
        RFormula::True => write!(f, "true")?,
        RFormula::False => write!(f, "false")?,
        RFormula::CrossEq(a, b) => write!(f, "eq({a}, {b})")?,
        RFormula::Agree(g, sel) => {
            write!(f, "agr(")?;
            write_expr(f, g, 6)?;
            write!(f, "`{sel})")?;
        }
        RFormula::Later(q) => {
            write!(f, "later(")?;
            write_rf(f, q, 0)?;
            write!(f, ")")?;
        }
        RFormula::LEmb(q) => write!(f, "L({q})")?,
        RFormula::REmb(q) => write!(f, "R({q})")?,
        RFormula::Not(q) => {
            write!(f, "not ")?;
            write_rf(f, q, 4)?;
        }
        RFormula::And(a, b) => {
            write_rf(f, a, 3)?;
            write!(f, " and ")?;
            write_rf(f, b, 4)?;
        }
        RFormula::Or(a, b) => {
            write_rf(f, a, 2)?;
            write!(f, " or ")?;
            write_rf(f, b, 3)?;
        }
        RFormula::Imp(a, b) => {
            write_rf(f, a, 2)?;
            write!(f, " ==> ")?;
            write_rf(f, b, 1)?;
        }
        RFormula::Forall(x, x2, k, q) => {
            write!(f, "forall {x}|{x2}: {k} . ")?;
            write_rf(f, q, 1)?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for RFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_rf(f, self, 0)
    }
}
