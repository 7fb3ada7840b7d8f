//! Typechecking for expressions, formulas, effects, commands, and biprograms.

use super::ast::*;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("type error: {0}")]
pub struct TypeError(pub String);

type TcResult<T> = Result<T, TypeError>;

fn err<T>(msg: impl Into<String>) -> TcResult<T> {
    Err(TypeError(msg.into()))
}

/// The type of an expression; `NullAny` is the polymorphic type of `null`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprTy {
    T(Type),
    NullAny,
}

impl ExprTy {
    pub fn compatible(&self, other: &ExprTy) -> bool {
        match (self, other) {
            (ExprTy::NullAny, ExprTy::NullAny) => true,
            (ExprTy::NullAny, ExprTy::T(t)) | (ExprTy::T(t), ExprTy::NullAny) => {
                matches!(t, Type::Class(_) | Type::Rgn)
            }
            (ExprTy::T(a), ExprTy::T(b)) => a == b,
        }
    }

    pub fn fits(&self, declared: &Type) -> bool {
        match self {
            ExprTy::T(t) => t == declared,
            ExprTy::NullAny => matches!(declared, Type::Class(_)),
        }
    }
}

pub struct Tc<'a> {
    pub classes: &'a ClassTable,
}

impl<'a> Tc<'a> {
    pub fn new(classes: &'a ClassTable) -> Tc<'a> {
        Tc { classes }
    }

    /// Consistent global type of a field name across declaring classes.
    fn global_field_type(&self, f: &str) -> TcResult<Type> {
        let mut found: Option<Type> = None;
        for fields in self.classes.classes.values() {
            if let Some((_, t)) = fields.iter().find(|(n, _)| n == f) {
                match &found {
                    None => found = Some(t.clone()),
                    Some(prev) if prev == t => {}
                    Some(prev) => {
                        return err(format!(
                            "field {f} declared with conflicting types {prev} and {t}"
                        ))
                    }
                }
            }
        }
        found.ok_or_else(|| TypeError(format!("field {f} is not declared in any class")))
    }

    pub fn expr_type(&self, ctx: &TypingCtx, e: &Expr) -> TcResult<ExprTy> {
        match e {
            Expr::Int(_) => Ok(ExprTy::T(Type::Int)),
            Expr::Bool(_) => Ok(ExprTy::T(Type::Bool)),
            Expr::Null => Ok(ExprTy::NullAny),
            Expr::Var(x) => match ctx.get(x) {
                Some(t) => Ok(ExprTy::T(t.clone())),
                None => err(format!("undeclared variable {x}")),
            },
            Expr::Not(a) => {
                let t = self.expr_type(ctx, a)?;
                if t.compatible(&ExprTy::T(Type::Bool)) {
                    Ok(ExprTy::T(Type::Bool))
                } else {
                    err(format!("negation of non-boolean {a}"))
                }
            }
            Expr::Bin(op, a, b) => {
                let ta = self.expr_type(ctx, a)?;
                let tb = self.expr_type(ctx, b)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Mod => {
                        if ta.fits(&Type::Int) && tb.fits(&Type::Int) {
                            Ok(ExprTy::T(Type::Int))
                        } else {
                            err(format!("arithmetic on non-integers in {e}"))
                        }
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Ge => {
                        if ta.fits(&Type::Int) && tb.fits(&Type::Int) {
                            Ok(ExprTy::T(Type::Bool))
                        } else {
                            err(format!("ordering on non-integers in {e}"))
                        }
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if ta.compatible(&tb) {
                            Ok(ExprTy::T(Type::Bool))
                        } else {
                            err(format!("equality between incompatible types in {e}"))
                        }
                    }
                    BinOp::And | BinOp::Or => {
                        if ta.fits(&Type::Bool) && tb.fits(&Type::Bool) {
                            Ok(ExprTy::T(Type::Bool))
                        } else {
                            err(format!("boolean connective on non-booleans in {e}"))
                        }
                    }
                }
            }
            Expr::EmptyRgn => Ok(ExprTy::T(Type::Rgn)),
            Expr::Singleton(a) => {
                let t = self.expr_type(ctx, a)?;
                match t {
                    ExprTy::NullAny | ExprTy::T(Type::Class(_)) => Ok(ExprTy::T(Type::Rgn)),
                    _ => err(format!("singleton of non-reference in {e}")),
                }
            }
            Expr::Image(g, sel) => {
                let tg = self.expr_type(ctx, g)?;
                if !tg.fits(&Type::Rgn) {
                    return err(format!("image of non-region in {e}"));
                }
                match sel {
                    FieldSel::Any => err(format!(
                        "`any` image {e} is only legal in effects and agreement formulas"
                    )),
                    FieldSel::Field(f) => {
                        let ft = self.global_field_type(f)?;
                        match ft {
                            Type::Class(_) => Ok(ExprTy::T(Type::Rgn)),
                            other => err(format!(
                                "image {e} needs a reference-typed field, {f} has type {other}"
                            )),
                        }
                    }
                }
            }
            Expr::Rgn(_, a, b) => {
                let ta = self.expr_type(ctx, a)?;
                let tb = self.expr_type(ctx, b)?;
                if ta.fits(&Type::Rgn) && tb.fits(&Type::Rgn) {
                    Ok(ExprTy::T(Type::Rgn))
                } else {
                    err(format!("region operator on non-regions in {e}"))
                }
            }
            Expr::App(f, args) => self.app_type(ctx, *f, args),
        }
    }

    fn app_type(&self, ctx: &TypingCtx, f: SpecFn, args: &[Expr]) -> TcResult<ExprTy> {
        let arg_tys: Vec<ExprTy> = args
            .iter()
            .map(|a| self.expr_type(ctx, a))
            .collect::<TcResult<_>>()?;
        let class_arg = |t: &ExprTy| -> TcResult<()> {
            match t {
                ExprTy::NullAny | ExprTy::T(Type::Class(_)) => Ok(()),
                other => err(format!("{} expects a reference argument, got {other:?}", f.name())),
            }
        };
        match f {
            SpecFn::ListNd | SpecFn::List => {
                class_arg(&arg_tys[0])?;
                Ok(ExprTy::T(Type::IntList))
            }
            SpecFn::Sum | SpecFn::Length => {
                if arg_tys[0].fits(&Type::IntList) {
                    Ok(ExprTy::T(Type::Int))
                } else {
                    err(format!("{} expects a list argument", f.name()))
                }
            }
            SpecFn::Rev => {
                if arg_tys[0].fits(&Type::IntList) {
                    Ok(ExprTy::T(Type::IntList))
                } else {
                    err("rev expects a list argument")
                }
            }
            SpecFn::Fact => {
                if arg_tys[0].fits(&Type::Int) {
                    Ok(ExprTy::T(Type::Int))
                } else {
                    err("fact expects an integer argument")
                }
            }
            SpecFn::Slice => {
                class_arg(&arg_tys[0])?;
                if arg_tys[1].fits(&Type::Int) {
                    Ok(ExprTy::T(Type::IntList))
                } else {
                    err("slice expects (array, int)")
                }
            }
            SpecFn::Enc => {
                if arg_tys[0].fits(&Type::IntList) {
                    Ok(ExprTy::T(Type::Int))
                } else {
                    err("enc expects a list argument")
                }
            }
        }
    }

    /// Expressions legal in program positions: no spec functions, no list type.
    pub fn check_program_expr(&self, ctx: &TypingCtx, e: &Expr) -> TcResult<ExprTy> {
        if e.has_app() {
            return err(format!("spec functions are not allowed in program code: {e}"));
        }
        let t = self.expr_type(ctx, e)?;
        if t.fits(&Type::IntList) {
            return err(format!("list-typed expression in program code: {e}"));
        }
        Ok(t)
    }

    pub fn check_uformula(&self, ctx: &TypingCtx, p: &UFormula) -> TcResult<()> {
        match p {
            UFormula::True | UFormula::False => Ok(()),
            UFormula::Atom(e) => {
                let t = self.expr_type(ctx, e)?;
                if t.fits(&Type::Bool) {
                    Ok(())
                } else {
                    err(format!("formula atom {e} is not boolean"))
                }
            }
            UFormula::PointsTo(x, f, t) => {
                let k = match ctx.get(x) {
                    Some(Type::Class(k)) => k.clone(),
                    Some(other) => {
                        return err(format!("points-to on {x} of non-class type {other}"))
                    }
                    None => return err(format!("undeclared variable {x}")),
                };
                let ft = self
                    .classes
                    .field_type(&k, f)
                    .ok_or_else(|| TypeError(format!("class {k} has no field {f}")))?
                    .clone();
                let tt = self.expr_type(ctx, t)?;
                if tt.compatible(&ExprTy::T(ft.clone())) {
                    Ok(())
                } else {
                    err(format!("points-to {x}.{f} = {t}: field has type {ft}"))
                }
            }
            UFormula::Subset(a, b) => {
                let ta = self.expr_type(ctx, a)?;
                let tb = self.expr_type(ctx, b)?;
                if ta.fits(&Type::Rgn) && tb.fits(&Type::Rgn) {
                    Ok(())
                } else {
                    err(format!("subset between non-regions: {a} subset {b}"))
                }
            }
            UFormula::Not(q) => self.check_uformula(ctx, q),
            UFormula::And(a, b) | UFormula::Or(a, b) | UFormula::Imp(a, b) => {
                self.check_uformula(ctx, a)?;
                self.check_uformula(ctx, b)
            }
            UFormula::Forall(x, k, q) => {
                if !self.classes.has_class(k) {
                    return err(format!("quantifier over undeclared class {k}"));
                }
                let mut ctx2 = ctx.clone();
                ctx2.insert(x.clone(), Type::Class(k.clone()));
                self.check_uformula(&ctx2, q)
            }
        }
    }

    pub fn check_rformula(
        &self,
        left: &TypingCtx,
        right: &TypingCtx,
        p: &RFormula,
    ) -> TcResult<()> {
        match p {
            RFormula::True | RFormula::False => Ok(()),
            RFormula::CrossEq(a, b) => {
                let ta = self.expr_type(left, a)?;
                let tb = self.expr_type(right, b)?;
                if ta.compatible(&tb) {
                    Ok(())
                } else {
                    err(format!("cross equality between incompatible types: eq({a}, {b})"))
                }
            }
            RFormula::Agree(g, sel) => {
                let tg = self.expr_type(left, g)?;
                if !tg.fits(&Type::Rgn) {
                    return err(format!("agreement over non-region {g}"));
                }
                if let FieldSel::Field(f) = sel {
                    self.global_field_type(f)?;
                }
                Ok(())
            }
            RFormula::Later(q) | RFormula::Not(q) => self.check_rformula(left, right, q),
            RFormula::LEmb(q) => self.check_uformula(left, q),
            RFormula::REmb(q) => self.check_uformula(right, q),
            RFormula::And(a, b) | RFormula::Or(a, b) | RFormula::Imp(a, b) => {
                self.check_rformula(left, right, a)?;
                self.check_rformula(left, right, b)
            }
            RFormula::Forall(x, x2, k, q) => {
                if !self.classes.has_class(k) {
                    return err(format!("quantifier over undeclared class {k}"));
                }
                let mut l2 = left.clone();
                l2.insert(x.clone(), Type::Class(k.clone()));
                let mut r2 = right.clone();
                r2.insert(x2.clone(), Type::Class(k.clone()));
                self.check_rformula(&l2, &r2, q)
            }
        }
    }

    pub fn check_effect(&self, ctx: &TypingCtx, eff: &Effect) -> TcResult<()> {
        for atom in &eff.0 {
            match &atom.target {
                EffTarget::Var(x) => {
                    if !ctx.contains_key(x) {
                        return err(format!("effect names undeclared variable {x}"));
                    }
                }
                EffTarget::Image(g, sel) => {
                    let tg = self.expr_type(ctx, g)?;
                    if !tg.fits(&Type::Rgn) {
                        return err(format!("effect image over non-region {g}"));
                    }
                    if let FieldSel::Field(f) = sel {
                        self.global_field_type(f)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn check_atomic(
        &self,
        ctx: &TypingCtx,
        procs: &BTreeSet<ProcName>,
        a: &Atomic,
    ) -> TcResult<()> {
        match a {
            Atomic::Skip => Ok(()),
            Atomic::EndLet(_) => err("scope endmarker in source program"),
            Atomic::Call(m) => {
                if procs.contains(m) {
                    Ok(())
                } else {
                    err(format!("call to {m}() which is neither let-bound nor hypothesized"))
                }
            }
            Atomic::Assign(x, e) => {
                if x == ALLOC {
                    return err("assignment to alloc");
                }
                let tx = match ctx.get(x) {
                    Some(t) => t.clone(),
                    None => return err(format!("undeclared variable {x}")),
                };
                let te = self.check_program_expr(ctx, e)?;
                if te.fits(&tx) {
                    Ok(())
                } else {
                    err(format!("assignment {x} := {e}: type mismatch (expected {tx})"))
                }
            }
            Atomic::Alloc(x, k) => {
                if x == ALLOC {
                    return err("assignment to alloc");
                }
                if !self.classes.has_class(k) {
                    return err(format!("allocation of undeclared class {k}"));
                }
                match ctx.get(x) {
                    Some(Type::Class(k2)) if k2 == k => Ok(()),
                    Some(other) => err(format!("{x} := new {k}: {x} has type {other}")),
                    None => err(format!("undeclared variable {x}")),
                }
            }
            Atomic::FieldGet(x, y, f) => {
                if x == ALLOC {
                    return err("assignment to alloc");
                }
                let k = match ctx.get(y) {
                    Some(Type::Class(k)) => k.clone(),
                    Some(other) => return err(format!("{y}.{f}: {y} has non-class type {other}")),
                    None => return err(format!("undeclared variable {y}")),
                };
                let ft = self
                    .classes
                    .field_type(&k, f)
                    .ok_or_else(|| TypeError(format!("class {k} has no field {f}")))?;
                match ctx.get(x) {
                    Some(t) if t == ft => Ok(()),
                    Some(other) => err(format!("{x} := {y}.{f}: {x} has type {other}, field {ft}")),
                    None => err(format!("undeclared variable {x}")),
                }
            }
            Atomic::FieldSet(x, f, src) => {
                let k = match ctx.get(x) {
                    Some(Type::Class(k)) => k.clone(),
                    Some(other) => return err(format!("{x}.{f}: {x} has non-class type {other}")),
                    None => return err(format!("undeclared variable {x}")),
                };
                let ft = self
                    .classes
                    .field_type(&k, f)
                    .ok_or_else(|| TypeError(format!("class {k} has no field {f}")))?
                    .clone();
                let ts = self.expr_type(ctx, &src.as_expr())?;
                if ts.fits(&ft) || (matches!(src, AtomSrc::Null) && matches!(ft, Type::Class(_))) {
                    Ok(())
                } else {
                    err(format!("{x}.{f} := ..: field has type {ft}"))
                }
            }
        }
    }

    pub fn check_command(
        &self,
        ctx: &TypingCtx,
        procs: &BTreeSet<ProcName>,
        c: &Command,
    ) -> TcResult<()> {
        match c {
            Command::Atom(a) => self.check_atomic(ctx, procs, a),
            Command::Seq(a, b) => {
                self.check_command(ctx, procs, a)?;
                self.check_command(ctx, procs, b)
            }
            Command::If(e, a, b) => {
                let t = self.check_program_expr(ctx, e)?;
                if !t.fits(&Type::Bool) {
                    return err(format!("if guard {e} is not boolean"));
                }
                self.check_command(ctx, procs, a)?;
                self.check_command(ctx, procs, b)
            }
            Command::While(e, a) => {
                let t = self.check_program_expr(ctx, e)?;
                if !t.fits(&Type::Bool) {
                    return err(format!("while guard {e} is not boolean"));
                }
                self.check_command(ctx, procs, a)
            }
            Command::Let(m, b, cont) => {
                self.check_command(ctx, procs, b)?;
                let mut procs2 = procs.clone();
                procs2.insert(m.clone());
                self.check_command(ctx, &procs2, cont)
            }
        }
    }

    pub fn check_biprogram(
        &self,
        left: &TypingCtx,
        right: &TypingCtx,
        procs: &BTreeSet<ProcName>,
        bb: &Biprogram,
    ) -> TcResult<()> {
        match bb {
            Biprogram::Split(c, d) => {
                self.check_command(left, procs, c)?;
                self.check_command(right, procs, d)
            }
            Biprogram::Sync(a) => {
                self.check_atomic(left, procs, a)?;
                self.check_atomic(right, procs, a)
            }
            Biprogram::BiSeq(a, b) => {
                self.check_biprogram(left, right, procs, a)?;
                self.check_biprogram(left, right, procs, b)
            }
            Biprogram::BiIf(e, e2, a, b) => {
                if !self.check_program_expr(left, e)?.fits(&Type::Bool) {
                    return err(format!("left if guard {e} is not boolean"));
                }
                if !self.check_program_expr(right, e2)?.fits(&Type::Bool) {
                    return err(format!("right if guard {e2} is not boolean"));
                }
                self.check_biprogram(left, right, procs, a)?;
                self.check_biprogram(left, right, procs, b)
            }
            Biprogram::BiWhile(e, e2, p, p2, body) => {
                if !self.check_program_expr(left, e)?.fits(&Type::Bool) {
                    return err(format!("left while guard {e} is not boolean"));
                }
                if !self.check_program_expr(right, e2)?.fits(&Type::Bool) {
                    return err(format!("right while guard {e2} is not boolean"));
                }
                self.check_rformula(left, right, p)?;
                self.check_rformula(left, right, p2)?;
                self.check_biprogram(left, right, procs, body)
            }
            Biprogram::BiLet(m, b, b2, cont) => {
                self.check_command(left, procs, b)?;
                self.check_command(right, procs, b2)?;
                let mut procs2 = procs.clone();
                procs2.insert(m.clone());
                self.check_biprogram(left, right, &procs2, cont)
            }
        }
    }

    pub fn check_class_table(&self) -> TcResult<()> {
        for (k, fields) in &self.classes.classes {
            let mut seen = BTreeSet::new();
            for (f, t) in fields {
                if !seen.insert(f.clone()) {
                    return err(format!("class {k}: duplicate field {f}"));
                }
                match t {
                    Type::Int | Type::Bool | Type::Rgn => {}
                    Type::Class(k2) => {
                        if !self.classes.has_class(k2) {
                            return err(format!("class {k}: field {f} of undeclared class {k2}"));
                        }
                    }
                    Type::IntList => {
                        return err(format!("class {k}: field {f} may not have list type"))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn check_unary_spec(&self, ctx: &TypingCtx, s: &UnarySpec) -> TcResult<()> {
        self.check_uformula(ctx, &s.pre)?;
        self.check_uformula(ctx, &s.post)?;
        self.check_effect(ctx, &s.frame)
    }

    pub fn check_rel_spec(
        &self,
        left: &TypingCtx,
        right: &TypingCtx,
        s: &RelSpec,
    ) -> TcResult<()> {
        self.check_rformula(left, right, &s.pre)?;
        self.check_rformula(left, right, &s.post)?;
        self.check_effect(left, &s.frame_l)?;
        self.check_effect(right, &s.frame_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse::*;

    fn setup() -> (ClassTable, TypingCtx) {
        let ct = parse_class_table_str("class Node { nxt: Node; val: int; del: bool }").unwrap();
        let mut ctx = base_ctx();
        ctx.insert("x".into(), Type::Int);
        ctx.insert("y".into(), Type::Int);
        ctx.insert("p".into(), Type::Class("Node".into()));
        ctx.insert("r".into(), Type::Rgn);
        (ct, ctx)
    }

    #[test]
    fn accepts_simple_assignment() {
        let (ct, ctx) = setup();
        let tc = Tc::new(&ct);
        let c = parse_command_str("x := 1").unwrap();
        assert!(tc.check_command(&ctx, &BTreeSet::new(), &c).is_ok());
    }

    #[test]
    fn rejects_int_null_assignment() {
        let (ct, ctx) = setup();
        let tc = Tc::new(&ct);
        let c = parse_command_str("x := null").unwrap();
        assert!(tc.check_command(&ctx, &BTreeSet::new(), &c).is_err());
    }

    #[test]
    fn rejects_alloc_assignment() {
        let (ct, ctx) = setup();
        let tc = Tc::new(&ct);
        let c = Command::Atom(Atomic::Assign(ALLOC.into(), Expr::EmptyRgn));
        assert!(tc.check_command(&ctx, &BTreeSet::new(), &c).is_err());
    }

    #[test]
    fn rejects_undeclared_field_in_formula() {
        let (ct, ctx) = setup();
        let tc = Tc::new(&ct);
        let f = parse_uformula_str("r`wal subset r").unwrap();
        assert!(tc.check_uformula(&ctx, &f).is_err());
        let ok = parse_uformula_str("r`nxt subset r").unwrap();
        assert!(tc.check_uformula(&ctx, &ok).is_ok());
    }

    #[test]
    fn rejects_undeclared_call() {
        let (ct, ctx) = setup();
        let tc = Tc::new(&ct);
        let c = parse_command_str("m()").unwrap();
        assert!(tc.check_command(&ctx, &BTreeSet::new(), &c).is_err());
        let c2 = parse_command_str("let m() = skip in m() end").unwrap();
        assert!(tc.check_command(&ctx, &BTreeSet::new(), &c2).is_ok());
    }

    #[test]
    fn value_position_any_image_rejected() {
        let (ct, ctx) = setup();
        let tc = Tc::new(&ct);
        let f = parse_uformula_str("r`any subset r").unwrap();
        assert!(tc.check_uformula(&ctx, &f).is_err());
    }
}
