//! Abstract syntax: expressions, commands, biprograms, effects, formulas, specs.

use std::collections::BTreeMap;
use std::fmt;

pub type VarName = String;
pub type FieldName = String;
pub type ClassName = String;
pub type ProcName = String;

/// The distinguished region variable tracking the allocated references.
pub const ALLOC: &str = "alloc";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Int,
    Bool,
    Rgn,
    Class(ClassName),
    /// Mathematical integer lists, produced only by spec functions in assertions.
    IntList,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "bool"),
            Type::Rgn => write!(f, "rgn"),
            Type::Class(k) => write!(f, "{k}"),
            Type::IntList => write!(f, "intlist"),
        }
    }
}

/// Declared classes with ordered field lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassTable {
    pub classes: BTreeMap<ClassName, Vec<(FieldName, Type)>>,
}

impl ClassTable {
    pub fn fields(&self, class: &str) -> Option<&[(FieldName, Type)]> {
        self.classes.get(class).map(|v| v.as_slice())
    }

    pub fn field_type(&self, class: &str, field: &str) -> Option<&Type> {
        self.fields(class)?
            .iter()
            .find(|(f, _)| f == field)
            .map(|(_, t)| t)
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes.contains_key(class)
    }

    /// All (class, field) pairs that declare the given field name.
    pub fn classes_with_field(&self, field: &str) -> Vec<&ClassName> {
        self.classes
            .iter()
            .filter(|(_, fs)| fs.iter().any(|(f, _)| f == field))
            .map(|(k, _)| k)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Eq,
    Ne,
    Lt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Mod,
    And,
    Or,
}

impl BinOp {
    pub fn is_cmp(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Ge)
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Mod => "%",
            BinOp::And => "and",
            BinOp::Or => "or",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RgnOp {
    Union,
    Inter,
    Diff,
}

impl fmt::Display for RgnOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RgnOp::Union => "union",
            RgnOp::Inter => "inter",
            RgnOp::Diff => "diff",
        };
        write!(f, "{s}")
    }
}

/// Built-in spec functions usable in assertions (never in program code).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpecFn {
    /// Values of non-deleted nodes along a `nxt` chain.
    ListNd,
    /// Values of all nodes along a `nxt` chain.
    List,
    Sum,
    Rev,
    Length,
    Fact,
    /// First n slots of a bounded array object, as a list.
    Slice,
    /// Injective integer encoding of a bounded list, for scalar ghost snapshots.
    Enc,
}

impl SpecFn {
    pub fn name(self) -> &'static str {
        match self {
            SpecFn::ListNd => "listnd",
            SpecFn::List => "list",
            SpecFn::Sum => "sum",
            SpecFn::Rev => "rev",
            SpecFn::Length => "length",
            SpecFn::Fact => "fact",
            SpecFn::Slice => "slice",
            SpecFn::Enc => "enc",
        }
    }

    pub fn from_name(name: &str) -> Option<SpecFn> {
        Some(match name {
            "listnd" => SpecFn::ListNd,
            "list" => SpecFn::List,
            "sum" => SpecFn::Sum,
            "rev" => SpecFn::Rev,
            "length" => SpecFn::Length,
            "fact" => SpecFn::Fact,
            "slice" => SpecFn::Slice,
            "enc" => SpecFn::Enc,
            _ => None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            SpecFn::Slice => 2,
            _ => 1,
        }
    }
}

/// Program and region expressions, plus spec-function applications for assertions.
///
/// Program positions reject `App`; the typechecker enforces this.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Null,
    Var(VarName),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    EmptyRgn,
    Singleton(Box<Expr>),
    /// Image G`f (or G`any in effect positions).
    Image(Box<Expr>, FieldSel),
    Rgn(RgnOp, Box<Expr>, Box<Expr>),
    App(SpecFn, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn contains_var(&self, x: &str) -> bool {
        match self {
            Expr::Var(v) => v == x,
            Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::EmptyRgn => false,
            Expr::Bin(_, a, b) | Expr::Rgn(_, a, b) => a.contains_var(x) || b.contains_var(x),
            Expr::Not(a) | Expr::Singleton(a) | Expr::Image(a, _) => a.contains_var(x),
            Expr::App(_, args) => args.iter().any(|a| a.contains_var(x)),
        }
    }

    pub fn vars(&self, out: &mut std::collections::BTreeSet<VarName>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::EmptyRgn => {}
            Expr::Bin(_, a, b) | Expr::Rgn(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Not(a) | Expr::Singleton(a) | Expr::Image(a, _) => a.vars(out),
            Expr::App(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }

    pub fn has_app(&self) -> bool {
        match self {
            Expr::App(..) => true,
            Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::EmptyRgn => false,
            Expr::Bin(_, a, b) | Expr::Rgn(_, a, b) => a.has_app() || b.has_app(),
            Expr::Not(a) | Expr::Singleton(a) | Expr::Image(a, _) => a.has_app(),
        }
    }

    /// Substitute expression `e` for variable `x`.
    pub fn subst(&self, x: &str, e: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == x => e.clone(),
            Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::EmptyRgn => {
                self.clone()
            }
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.subst(x, e)), Box::new(b.subst(x, e)))
            }
            Expr::Rgn(op, a, b) => {
                Expr::Rgn(*op, Box::new(a.subst(x, e)), Box::new(b.subst(x, e)))
            }
            Expr::Not(a) => Expr::Not(Box::new(a.subst(x, e))),
            Expr::Singleton(a) => Expr::Singleton(Box::new(a.subst(x, e))),
            Expr::Image(a, f) => Expr::Image(Box::new(a.subst(x, e)), f.clone()),
            Expr::App(fun, args) => {
                Expr::App(*fun, args.iter().map(|a| a.subst(x, e)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldSel {
    Field(FieldName),
    Any,
}

impl fmt::Display for FieldSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSel::Field(n) => write!(f, "{n}"),
            FieldSel::Any => write!(f, "any"),
        }
    }
}

/// Source operand of a field update: a variable or a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomSrc {
    Var(VarName),
    Int(i64),
    Bool(bool),
    Null,
}

impl AtomSrc {
    pub fn as_expr(&self) -> Expr {
        match self {
            AtomSrc::Var(v) => Expr::Var(v.clone()),
            AtomSrc::Int(n) => Expr::Int(*n),
            AtomSrc::Bool(b) => Expr::Bool(*b),
            AtomSrc::Null => Expr::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atomic {
    Skip,
    Call(ProcName),
    Assign(VarName, Expr),
    Alloc(VarName, ClassName),
    /// x := y.f
    FieldGet(VarName, VarName, FieldName),
    /// x.f := src
    FieldSet(VarName, FieldName, AtomSrc),
    /// Scope endmarker popping a let binding; runtime-only control.
    EndLet(ProcName),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    Atom(Atomic),
    Seq(Box<Command>, Box<Command>),
    If(Expr, Box<Command>, Box<Command>),
    While(Expr, Box<Command>),
    Let(ProcName, Box<Command>, Box<Command>),
}

impl Command {
    pub fn skip() -> Command {
        Command::Atom(Atomic::Skip)
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, Command::Atom(Atomic::Skip))
    }

    pub fn seq(cs: Vec<Command>) -> Command {
        let mut it = cs.into_iter().rev();
        let mut acc = match it.next() {
            Some(c) => c,
            None => Command::skip(),
        };
        for c in it {
            acc = Command::Seq(Box::new(c), Box::new(acc));
        }
        acc
    }

    /// Flatten nested sequencing into a list of non-seq commands.
    pub fn seq_parts(&self) -> Vec<&Command> {
        let mut out = Vec::new();
        fn go<'a>(c: &'a Command, out: &mut Vec<&'a Command>) {
            match c {
                Command::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Right-nested form with unit skips dropped; lone skip kept.
    pub fn canon(&self) -> Command {
        match self {
            Command::Seq(..) => {
                let parts: Vec<Command> = self
                    .seq_parts()
                    .into_iter()
                    .map(|c| c.canon())
                    .filter(|c| !c.is_skip())
                    .collect();
                if parts.is_empty() {
                    Command::skip()
                } else {
                    Command::seq(parts)
                }
            }
            Command::If(e, c, d) => Command::If(e.clone(), Box::new(c.canon()), Box::new(d.canon())),
            Command::While(e, c) => Command::While(e.clone(), Box::new(c.canon())),
            Command::Let(m, b, c) => {
                Command::Let(m.clone(), Box::new(b.canon()), Box::new(c.canon()))
            }
            Command::Atom(a) => Command::Atom(a.clone()),
        }
    }

    pub fn proc_calls(&self, out: &mut std::collections::BTreeSet<ProcName>) {
        match self {
            Command::Atom(Atomic::Call(m)) => {
                out.insert(m.clone());
            }
            Command::Atom(_) => {}
            Command::Seq(a, b) => {
                a.proc_calls(out);
                b.proc_calls(out);
            }
            Command::If(_, c, d) => {
                c.proc_calls(out);
                d.proc_calls(out);
            }
            Command::While(_, c) => c.proc_calls(out),
            Command::Let(m, b, c) => {
                b.proc_calls(out);
                let mut inner = std::collections::BTreeSet::new();
                c.proc_calls(&mut inner);
                inner.remove(m);
                out.extend(inner);
            }
        }
    }

    /// Variables read or written anywhere in the command, including guards.
    pub fn vars(&self, out: &mut std::collections::BTreeSet<VarName>) {
        match self {
            Command::Atom(a) => match a {
                Atomic::Skip | Atomic::Call(_) | Atomic::EndLet(_) => {}
                Atomic::Assign(x, e) => {
                    out.insert(x.clone());
                    e.vars(out);
                }
                Atomic::Alloc(x, _) => {
                    out.insert(x.clone());
                }
                Atomic::FieldGet(x, y, _) => {
                    out.insert(x.clone());
                    out.insert(y.clone());
                }
                Atomic::FieldSet(x, _, src) => {
                    out.insert(x.clone());
                    if let AtomSrc::Var(y) = src {
                        out.insert(y.clone());
                    }
                }
            },
            Command::Seq(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Command::If(e, c, d) => {
                e.vars(out);
                c.vars(out);
                d.vars(out);
            }
            Command::While(e, c) => {
                e.vars(out);
                c.vars(out);
            }
            Command::Let(_, b, c) => {
                b.vars(out);
                c.vars(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Biprogram {
    Split(Command, Command),
    Sync(Atomic),
    BiSeq(Box<Biprogram>, Box<Biprogram>),
    BiIf(Expr, Expr, Box<Biprogram>, Box<Biprogram>),
    /// while E | E' align P | P' do CC od
    BiWhile(Expr, Expr, RFormula, RFormula, Box<Biprogram>),
    BiLet(ProcName, Command, Command, Box<Biprogram>),
}

impl Biprogram {
    pub fn sync_skip() -> Biprogram {
        Biprogram::Sync(Atomic::Skip)
    }

    pub fn is_sync_skip(&self) -> bool {
        matches!(self, Biprogram::Sync(Atomic::Skip))
    }

    pub fn biseq(parts: Vec<Biprogram>) -> Biprogram {
        let mut it = parts.into_iter().rev();
        let mut acc = match it.next() {
            Some(b) => b,
            None => Biprogram::sync_skip(),
        };
        for b in it {
            acc = Biprogram::BiSeq(Box::new(b), Box::new(acc));
        }
        acc
    }

    pub fn biseq_parts(&self) -> Vec<&Biprogram> {
        let mut out = Vec::new();
        fn go<'a>(b: &'a Biprogram, out: &mut Vec<&'a Biprogram>) {
            match b {
                Biprogram::BiSeq(x, y) => {
                    go(x, out);
                    go(y, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Apply the structural identifications: command skip-units dropped,
    /// (skip|skip) collapses to a sync'd skip, and a leading sync'd skip in
    /// a sequence is dropped.
    pub fn canon(&self) -> Biprogram {
        match self {
            Biprogram::Split(c, d) => {
                let c = c.canon();
                let d = d.canon();
                if c.is_skip() && d.is_skip() {
                    Biprogram::sync_skip()
                } else {
                    Biprogram::Split(c, d)
                }
            }
            Biprogram::Sync(a) => Biprogram::Sync(a.clone()),
            Biprogram::BiSeq(..) => {
                let mut parts: Vec<Biprogram> =
                    self.biseq_parts().into_iter().map(|b| b.canon()).collect();
                // drop leading sync'd skips; a trailing one is kept
                while parts.len() > 1 && parts[0].is_sync_skip() {
                    parts.remove(0);
                }
                Biprogram::biseq(parts)
            }
            Biprogram::BiIf(e, e2, c, d) => Biprogram::BiIf(
                e.clone(),
                e2.clone(),
                Box::new(c.canon()),
                Box::new(d.canon()),
            ),
            Biprogram::BiWhile(e, e2, p, p2, c) => Biprogram::BiWhile(
                e.clone(),
                e2.clone(),
                p.clone(),
                p2.clone(),
                Box::new(c.canon()),
            ),
            Biprogram::BiLet(m, b, b2, c) => {
                Biprogram::BiLet(m.clone(), b.canon(), b2.canon(), Box::new(c.canon()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RdWr {
    Rd,
    Wr,
}

impl fmt::Display for RdWr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RdWr::Rd => write!(f, "rd"),
            RdWr::Wr => write!(f, "wr"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EffTarget {
    Var(VarName),
    /// Region image G`f or G`any.
    Image(Expr, FieldSel),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EffAtom {
    pub kind: RdWr,
    pub target: EffTarget,
}

impl EffAtom {
    pub fn rd_var(x: &str) -> EffAtom {
        EffAtom {
            kind: RdWr::Rd,
            target: EffTarget::Var(x.to_string()),
        }
    }

    pub fn wr_var(x: &str) -> EffAtom {
        EffAtom {
            kind: RdWr::Wr,
            target: EffTarget::Var(x.to_string()),
        }
    }
}

/// An effect: a list of read/write atoms. `rw` sugar is stored as two atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Effect(pub Vec<EffAtom>);

impl Effect {
    pub fn empty() -> Effect {
        Effect(Vec::new())
    }

    pub fn union(&self, other: &Effect) -> Effect {
        let mut out = self.clone();
        for a in &other.0 {
            if !out.0.contains(a) {
                out.0.push(a.clone());
            }
        }
        out
    }

    pub fn push(&mut self, atom: EffAtom) {
        if !self.0.contains(&atom) {
            self.0.push(atom);
        }
    }

    pub fn contains(&self, atom: &EffAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn reads(&self) -> impl Iterator<Item = &EffAtom> {
        self.0.iter().filter(|a| a.kind == RdWr::Rd)
    }

    pub fn writes(&self) -> impl Iterator<Item = &EffAtom> {
        self.0.iter().filter(|a| a.kind == RdWr::Wr)
    }

    /// Set equality modulo ordering and duplicates.
    pub fn same_atoms(&self, other: &Effect) -> bool {
        let a: std::collections::BTreeSet<_> = self.0.iter().collect();
        let b: std::collections::BTreeSet<_> = other.0.iter().collect();
        a == b
    }

    pub fn writes_var(&self, x: &str) -> bool {
        self.0
            .iter()
            .any(|a| a.kind == RdWr::Wr && matches!(&a.target, EffTarget::Var(v) if v == x))
    }
}

/// First-order unary formulas.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UFormula {
    True,
    False,
    /// A boolean-typed expression (comparisons, connective-free or not).
    Atom(Expr),
    /// Points-to: x.f = E (implies x non-null).
    PointsTo(VarName, FieldName, Expr),
    /// Region subset G <= G'.
    Subset(Expr, Expr),
    Not(Box<UFormula>),
    And(Box<UFormula>, Box<UFormula>),
    Or(Box<UFormula>, Box<UFormula>),
    Imp(Box<UFormula>, Box<UFormula>),
    /// forall x: K . P, ranging over allocated non-null refs of class K.
    Forall(VarName, ClassName, Box<UFormula>),
}

impl UFormula {
    pub fn and(ps: Vec<UFormula>) -> UFormula {
        let mut it = ps.into_iter();
        let mut acc = match it.next() {
            Some(p) => p,
            None => UFormula::True,
        };
        for p in it {
            acc = UFormula::And(Box::new(acc), Box::new(p));
        }
        acc
    }

    pub fn conjuncts(&self) -> Vec<&UFormula> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a UFormula, out: &mut Vec<&'a UFormula>) {
            match p {
                UFormula::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn vars(&self, out: &mut std::collections::BTreeSet<VarName>) {
        match self {
            UFormula::True | UFormula::False => {}
            UFormula::Atom(e) => e.vars(out),
            UFormula::PointsTo(x, _, e) => {
                out.insert(x.clone());
                e.vars(out);
            }
            UFormula::Subset(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            UFormula::Not(p) => p.vars(out),
            UFormula::And(a, b) | UFormula::Or(a, b) | UFormula::Imp(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            UFormula::Forall(x, _, p) => {
                let mut inner = std::collections::BTreeSet::new();
                p.vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
        }
    }
}

/// Relational formulas over a pair of states and a refperm.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RFormula {
    True,
    False,
    /// Cross-state equality F =:= F' modulo the refperm.
    CrossEq(Expr, Expr),
    /// Agreement on G`f (or G`any): refperm total on G with equal field values.
    Agree(Expr, FieldSel),
    /// Later modality: holds after some extension of the refperm.
    Later(Box<RFormula>),
    LEmb(UFormula),
    REmb(UFormula),
    Not(Box<RFormula>),
    And(Box<RFormula>, Box<RFormula>),
    Or(Box<RFormula>, Box<RFormula>),
    Imp(Box<RFormula>, Box<RFormula>),
    /// forall x | x' : K . P, two-sided quantifier over allocated refs of K.
    Forall(VarName, VarName, ClassName, Box<RFormula>),
}

impl RFormula {
    pub fn and(ps: Vec<RFormula>) -> RFormula {
        let mut it = ps.into_iter();
        let mut acc = match it.next() {
            Some(p) => p,
            None => RFormula::True,
        };
        for p in it {
            acc = RFormula::And(Box::new(acc), Box::new(p));
        }
        acc
    }

    /// B(P): embed P on both sides.
    pub fn both(p: UFormula) -> RFormula {
        RFormula::And(Box::new(RFormula::LEmb(p.clone())), Box::new(RFormula::REmb(p)))
    }

    pub fn conjuncts(&self) -> Vec<&RFormula> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a RFormula, out: &mut Vec<&'a RFormula>) {
            match p {
                RFormula::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn boxed(p: RFormula) -> RFormula {
        RFormula::Not(Box::new(RFormula::Later(Box::new(RFormula::Not(Box::new(p))))))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnarySpec {
    pub pre: UFormula,
    pub post: UFormula,
    pub frame: Effect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelSpec {
    pub pre: RFormula,
    pub post: RFormula,
    pub frame_l: Effect,
    pub frame_r: Effect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcSpec {
    Unary(UnarySpec),
    Rel(RelSpec),
}

/// Hypothesis context: procedure names bound to exactly one spec each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HypContext {
    pub procs: BTreeMap<ProcName, ProcSpec>,
}

impl HypContext {
    pub fn unary_only(&self) -> bool {
        self.procs.values().all(|s| matches!(s, ProcSpec::Unary(_)))
    }

    pub fn is_empty(&self) -> bool {
        self.procs.is_empty()
    }

    pub fn with(&self, m: &str, spec: ProcSpec) -> HypContext {
        let mut out = self.clone();
        out.procs.insert(m.to_string(), spec);
        out
    }
}

/// A typing context: variable names to types. Always includes `alloc: rgn`.
pub type TypingCtx = BTreeMap<VarName, Type>;

pub fn base_ctx() -> TypingCtx {
    let mut ctx = TypingCtx::new();
    ctx.insert(ALLOC.to_string(), Type::Rgn);
    ctx
}
