//! Type-respecting partial bijections between the allocated references of two states.

use super::{RefId, State};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Abort signal for enumerations that exceed the configured cap.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("enumeration cap exceeded: {0}")]
pub struct CapExceeded(pub String);

/// A partial bijection on non-null references.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Refperm {
    fwd: BTreeMap<RefId, RefId>,
    bwd: BTreeMap<RefId, RefId>,
}

impl Refperm {
    pub fn empty() -> Refperm {
        Refperm::default()
    }

    pub fn identity_on(refs: impl IntoIterator<Item = RefId>) -> Refperm {
        let mut p = Refperm::empty();
        for r in refs {
            p.insert(r, r).unwrap();
        }
        p
    }

    pub fn get(&self, o: RefId) -> Option<RefId> {
        self.fwd.get(&o).copied()
    }

    pub fn get_inv(&self, o: RefId) -> Option<RefId> {
        self.bwd.get(&o).copied()
    }

    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RefId, RefId)> + '_ {
        self.fwd.iter().map(|(a, b)| (*a, *b))
    }

    /// Insert a pair, failing if injectivity would break.
    pub fn insert(&mut self, a: RefId, b: RefId) -> Result<(), ()> {
        match (self.fwd.get(&a), self.bwd.get(&b)) {
            (None, None) => {
                self.fwd.insert(a, b);
                self.bwd.insert(b, a);
                Ok(())
            }
            (Some(b2), _) if *b2 == b => Ok(()),
            _ => Err(()),
        }
    }

    pub fn extends(&self, smaller: &Refperm) -> bool {
        smaller
            .fwd
            .iter()
            .all(|(a, b)| self.fwd.get(a) == Some(b))
    }

    pub fn invert(&self) -> Refperm {
        Refperm {
            fwd: self.bwd.clone(),
            bwd: self.fwd.clone(),
        }
    }

    /// Composition self;other — first self, then other.
    pub fn compose(&self, other: &Refperm) -> Refperm {
        let mut out = Refperm::empty();
        for (a, b) in self.iter() {
            if let Some(c) = other.get(b) {
                // both inputs are injective so insertion cannot fail
                let _ = out.insert(a, c);
            }
        }
        out
    }

    /// Direct image of a reference set.
    pub fn image(&self, refs: &BTreeSet<RefId>) -> BTreeSet<RefId> {
        refs.iter().filter_map(|r| self.get(*r)).collect()
    }

    /// Well-formed as a refperm from s to s': domains within the allocs,
    /// classes preserved.
    pub fn respects(&self, s: &State, s2: &State) -> bool {
        self.iter().all(|(a, b)| match (s.class_of(a), s2.class_of(b)) {
            (Some(ka), Some(kb)) => ka == kb,
            _ => false,
        })
    }
}

impl fmt::Display for Refperm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}->{b}")?;
        }
        write!(f, "}}")
    }
}

fn refs_by_class(s: &State) -> BTreeMap<String, Vec<RefId>> {
    let mut out: BTreeMap<String, Vec<RefId>> = BTreeMap::new();
    for (r, o) in &s.heap {
        out.entry(o.class.clone()).or_default().push(*r);
    }
    out
}

fn partial_injections(
    left: &[RefId],
    right: &[RefId],
    base: Refperm,
    cap: usize,
    out: &mut Vec<Refperm>,
) -> Result<(), CapExceeded> {
    if out.len() > cap {
        return Err(CapExceeded(format!("more than {cap} refperms")));
    }
    match left.split_first() {
        None => {
            out.push(base);
            Ok(())
        }
        Some((first, rest)) => {
            // leave `first` unmapped
            partial_injections(rest, right, base.clone(), cap, out)?;
            for r in right {
                let mut ext = base.clone();
                if ext.insert(*first, *r).is_ok() {
                    partial_injections(rest, right, ext, cap, out)?;
                }
            }
            Ok(())
        }
    }
}

/// All type-respecting partial bijections between the allocated references
/// of the two states.
pub fn enumerate_refperms(s: &State, s2: &State, cap: usize) -> Result<Vec<Refperm>, CapExceeded> {
    enumerate_extensions(&Refperm::empty(), s, s2, cap)
}

/// All refperms between s and s' extending pi.
pub fn enumerate_extensions(
    pi: &Refperm,
    s: &State,
    s2: &State,
    cap: usize,
) -> Result<Vec<Refperm>, CapExceeded> {
    if !pi.respects(s, s2) {
        return Ok(Vec::new());
    }
    let left = refs_by_class(s);
    let right = refs_by_class(s2);
    let mut perms = vec![pi.clone()];
    for (class, lrefs) in &left {
        let lrefs: Vec<RefId> = lrefs
            .iter()
            .filter(|r| pi.get(**r).is_none())
            .cloned()
            .collect();
        let rrefs: Vec<RefId> = right
            .get(class)
            .map(|v| {
                v.iter()
                    .filter(|r| pi.get_inv(**r).is_none())
                    .cloned()
                    .collect()
            })
            .unwrap_or_default();
        if lrefs.is_empty() || rrefs.is_empty() {
            continue;
        }
        let mut next = Vec::new();
        for base in perms {
            partial_injections(&lrefs, &rrefs, base, cap, &mut next)?;
        }
        perms = next;
        if perms.len() > cap {
            return Err(CapExceeded(format!("more than {cap} refperms")));
        }
    }
    Ok(perms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::*;

    fn node_table() -> ClassTable {
        let mut ct = ClassTable::default();
        ct.classes
            .insert("Node".into(), vec![("val".into(), Type::Int)]);
        ct
    }

    #[test]
    fn empty_states_have_one_refperm() {
        let ctx = base_ctx();
        let s = State::new(&ctx);
        let perms = enumerate_refperms(&s, &s, 1000).unwrap();
        assert_eq!(perms.len(), 1);
        assert!(perms[0].is_empty());
    }

    #[test]
    fn one_node_each_side_gives_two_refperms() {
        let ct = node_table();
        let ctx = base_ctx();
        let mut s = State::new(&ctx);
        s.add_object(RefId(1), "Node", &ct);
        let mut s2 = State::new(&ctx);
        s2.add_object(RefId(5), "Node", &ct);
        let perms = enumerate_refperms(&s, &s2, 1000).unwrap();
        assert_eq!(perms.len(), 2);
    }

    #[test]
    fn counts_match_partial_injection_formula() {
        // between 2 and 2 refs of one class: 1 + 4 + 2 = 7
        let ct = node_table();
        let ctx = base_ctx();
        let mut s = State::new(&ctx);
        s.add_object(RefId(1), "Node", &ct);
        s.add_object(RefId(2), "Node", &ct);
        let perms = enumerate_refperms(&s, &s, 1000).unwrap();
        assert_eq!(perms.len(), 7);
    }

    #[test]
    fn invert_twice_is_identity() {
        let mut p = Refperm::empty();
        p.insert(RefId(1), RefId(4)).unwrap();
        p.insert(RefId(2), RefId(3)).unwrap();
        assert_eq!(p.invert().invert(), p);
    }

    #[test]
    fn compose_chains_mappings() {
        let mut p = Refperm::empty();
        p.insert(RefId(1), RefId(4)).unwrap();
        let mut q = Refperm::empty();
        q.insert(RefId(4), RefId(9)).unwrap();
        let c = p.compose(&q);
        assert_eq!(c.get(RefId(1)), Some(RefId(9)));
    }
}
