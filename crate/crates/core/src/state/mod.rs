//! States, heaps, regions, refperms, locations, and the semantic effect apparatus.

mod effects;
mod eval;
mod refperm;

pub use effects::*;
pub use eval::*;
pub use refperm::*;

use crate::syntax::ast::*;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Abstract reference token; ordering is used only for deterministic
/// enumeration and canonical dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefId(pub u32);

impl fmt::Display for RefId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A region value: a finite set of references, possibly including null.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionVal {
    pub has_null: bool,
    pub refs: BTreeSet<RefId>,
}

impl RegionVal {
    pub fn empty() -> RegionVal {
        RegionVal::default()
    }

    pub fn of_refs(refs: impl IntoIterator<Item = RefId>) -> RegionVal {
        RegionVal {
            has_null: false,
            refs: refs.into_iter().collect(),
        }
    }

    pub fn union(&self, other: &RegionVal) -> RegionVal {
        RegionVal {
            has_null: self.has_null || other.has_null,
            refs: self.refs.union(&other.refs).cloned().collect(),
        }
    }

    pub fn inter(&self, other: &RegionVal) -> RegionVal {
        RegionVal {
            has_null: self.has_null && other.has_null,
            refs: self.refs.intersection(&other.refs).cloned().collect(),
        }
    }

    pub fn diff(&self, other: &RegionVal) -> RegionVal {
        RegionVal {
            has_null: self.has_null && !other.has_null,
            refs: self.refs.difference(&other.refs).cloned().collect(),
        }
    }

    pub fn subset(&self, other: &RegionVal) -> bool {
        (!self.has_null || other.has_null) && self.refs.is_subset(&other.refs)
    }
}

impl fmt::Display for RegionVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for r in &self.refs {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
            first = false;
        }
        if self.has_null {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "null")?;
        }
        write!(f, "}}")
    }
}

/// Storable values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Null,
    Ref(RefId),
    Rgn(RegionVal),
}

impl Value {
    pub fn default_of(t: &Type) -> Value {
        match t {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Rgn => Value::Rgn(RegionVal::empty()),
            Type::Class(_) => Value::Null,
            Type::IntList => Value::Int(0),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Null => write!(f, "null"),
            Value::Ref(r) => write!(f, "{r}"),
            Value::Rgn(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Object {
    pub class: ClassName,
    pub fields: BTreeMap<FieldName, Value>,
}

/// A program state: store plus heap. The store always binds `alloc` to the
/// heap domain exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct State {
    pub store: BTreeMap<VarName, Value>,
    pub heap: BTreeMap<RefId, Object>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("evaluation error: {0}")]
pub struct EvalError(pub String);

impl State {
    pub fn new(ctx: &TypingCtx) -> State {
        let mut store = BTreeMap::new();
        for (x, t) in ctx {
            store.insert(x.clone(), Value::default_of(t));
        }
        store.insert(ALLOC.to_string(), Value::Rgn(RegionVal::empty()));
        State {
            store,
            heap: BTreeMap::new(),
        }
    }

    pub fn get(&self, x: &str) -> Option<&Value> {
        self.store.get(x)
    }

    pub fn set(&mut self, x: &str, v: Value) {
        self.store.insert(x.to_string(), v);
    }

    pub fn alloc_region(&self) -> RegionVal {
        RegionVal::of_refs(self.heap.keys().cloned())
    }

    /// Re-derive the alloc variable from the heap domain.
    pub fn sync_alloc(&mut self) {
        let r = self.alloc_region();
        self.store.insert(ALLOC.to_string(), Value::Rgn(r));
    }

    pub fn field(&self, o: RefId, f: &str) -> Option<&Value> {
        self.heap.get(&o)?.fields.get(f)
    }

    pub fn set_field(&mut self, o: RefId, f: &str, v: Value) {
        if let Some(obj) = self.heap.get_mut(&o) {
            obj.fields.insert(f.to_string(), v);
        }
    }

    pub fn class_of(&self, o: RefId) -> Option<&str> {
        self.heap.get(&o).map(|obj| obj.class.as_str())
    }

    pub fn add_object(&mut self, id: RefId, class: &str, classes: &ClassTable) {
        let fields = classes
            .fields(class)
            .unwrap_or(&[])
            .iter()
            .map(|(f, t)| (f.clone(), Value::default_of(t)))
            .collect();
        self.heap.insert(
            id,
            Object {
                class: class.to_string(),
                fields,
            },
        );
        self.sync_alloc();
    }

    /// No dangling references in store or heap, and alloc mirrors the heap.
    pub fn well_formed(&self) -> bool {
        let dom: BTreeSet<RefId> = self.heap.keys().cloned().collect();
        let val_ok = |v: &Value| match v {
            Value::Ref(r) => dom.contains(r),
            Value::Rgn(rv) => rv.refs.is_subset(&dom),
            _ => true,
        };
        if !self.store.values().all(val_ok) {
            return false;
        }
        if !self
            .heap
            .values()
            .all(|o| o.fields.values().all(val_ok))
        {
            return false;
        }
        match self.store.get(ALLOC) {
            Some(Value::Rgn(r)) => !r.has_null && r.refs == dom,
            _ => false,
        }
    }

    /// Canonical textual dump with deterministic ordering.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for (x, v) in &self.store {
            let _ = writeln!(s, "var {x} = {v}");
        }
        for (r, o) in &self.heap {
            let fields: Vec<String> = o
                .fields
                .iter()
                .map(|(f, v)| format!("{f}={v}"))
                .collect();
            let _ = writeln!(s, "obj {r}: {} {{ {} }}", o.class, fields.join(", "));
        }
        s
    }
}

/// Fresh-reference policy for allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Allocator {
    /// Smallest unused id; deterministic.
    Counter,
    /// Deterministic but scrambled ids derived from a seed.
    Permuted(u64),
}

impl Allocator {
    /// Non-empty set of fresh non-null references for this state.
    pub fn fresh(&self, s: &State) -> BTreeSet<RefId> {
        let used: BTreeSet<u32> = s.heap.keys().map(|r| r.0).collect();
        match self {
            Allocator::Counter => {
                let next = (1..).find(|n| !used.contains(n)).unwrap();
                [RefId(next)].into_iter().collect()
            }
            Allocator::Permuted(seed) => {
                let n = used.len() as u64;
                for k in 0u64.. {
                    let h = seed
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(n.wrapping_mul(1442695040888963407))
                        .wrapping_add(k.wrapping_mul(2654435761));
                    let cand = 1 + (h % 997) as u32;
                    if !used.contains(&cand) {
                        return [RefId(cand)].into_iter().collect();
                    }
                }
                unreachable!()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Var(VarName),
    Heap(RefId, FieldName),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Var(x) => write!(f, "{x}"),
            Location::Heap(r, fld) => write!(f, "{r}.{fld}"),
        }
    }
}

pub type LocSet = BTreeSet<Location>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_allocator_is_sequential() {
        let ctx = base_ctx();
        let mut s = State::new(&ctx);
        let ct = ClassTable::default();
        let a = Allocator::Counter;
        let f1 = a.fresh(&s);
        assert_eq!(f1.len(), 1);
        assert!(f1.contains(&RefId(1)));
        s.add_object(RefId(1), "K", &ct);
        let f2 = a.fresh(&s);
        assert!(f2.contains(&RefId(2)));
        assert_eq!(s.alloc_region().refs.len(), 1);
    }

    #[test]
    fn permuted_allocator_avoids_used_ids() {
        let ctx = base_ctx();
        let mut s = State::new(&ctx);
        let ct = ClassTable::default();
        let a = Allocator::Permuted(3);
        for _ in 0..10 {
            let f = a.fresh(&s);
            let id = *f.iter().next().unwrap();
            assert!(!s.heap.contains_key(&id));
            s.add_object(id, "K", &ct);
        }
        assert_eq!(s.heap.len(), 10);
    }

    #[test]
    fn well_formedness_detects_dangling() {
        let ctx = base_ctx();
        let mut s = State::new(&ctx);
        assert!(s.well_formed());
        s.set("p", Value::Ref(RefId(7)));
        assert!(!s.well_formed());
    }
}
