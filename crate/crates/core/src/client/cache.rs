//! Result caches keyed by server array versions.
//!
//! An entry is only valid while every array it mentions still holds the
//! version recorded in the key. Entries mentioning an array are dropped when
//! that array is overwritten or deleted.

use std::collections::HashMap;

use crate::dtype::{Dtype, Scalar};
use crate::ops::{BinOp, ReduceOp, UnaryOp};
use crate::protocol::ServerId;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperandKey {
    Array(ServerId, u64),
    Scalar(Dtype, u64),
}

impl OperandKey {
    pub fn scalar(s: Scalar) -> OperandKey {
        let (d, bits) = s.key();
        OperandKey::Scalar(d, bits)
    }

    fn server_id(&self) -> Option<&ServerId> {
        match self {
            OperandKey::Array(id, _) => Some(id),
            OperandKey::Scalar(..) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OpKey {
    /// Deterministic fills only; `fill` is the canonical JSON of the spec.
    Create { dtype: Dtype, size: usize, fill: String },
    Binop(BinOp),
    Unary(UnaryOp),
    Slice { start: usize, stop: usize },
}

/// Three-address key: operation plus operand identities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExprKey {
    pub op: OpKey,
    pub operands: Vec<OperandKey>,
}

impl ExprKey {
    /// Builds a key; commutative binops store their operands sorted.
    pub fn new(op: OpKey, mut operands: Vec<OperandKey>) -> ExprKey {
        if let OpKey::Binop(b) = &op {
            if b.is_commutative() {
                operands.sort();
            }
        }
        ExprKey { op, operands }
    }
}

#[derive(Debug, Default)]
pub struct ExprCache {
    entries: HashMap<ExprKey, (ServerId, u64)>,
    mentions: HashMap<ServerId, Vec<ExprKey>>,
}

impl ExprCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &ExprKey) -> Option<&(ServerId, u64)> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: ExprKey, result: ServerId, version: u64) {
        for id in key.operands.iter().filter_map(OperandKey::server_id) {
            self.mentions.entry(id.clone()).or_default().push(key.clone());
        }
        self.mentions.entry(result.clone()).or_default().push(key.clone());
        self.entries.insert(key, (result, version));
    }

    /// Drops every entry that mentions `id` as an operand or a result.
    pub fn evict(&mut self, id: &ServerId) {
        if let Some(keys) = self.mentions.remove(id) {
            for k in keys {
                self.entries.remove(&k);
            }
        }
    }

    /// Iterates over `(key, result id, result version)`.
    pub fn iter(&self) -> impl Iterator<Item = (&ExprKey, &ServerId, u64)> {
        self.entries.iter().map(|(k, (id, v))| (k, id, *v))
    }
}

#[derive(Debug, Default)]
pub struct ReduceCache {
    entries: HashMap<(ReduceOp, ServerId, u64), Scalar>,
}

impl ReduceCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, op: ReduceOp, id: &ServerId, version: u64) -> Option<Scalar> {
        self.entries.get(&(op, id.clone(), version)).copied()
    }

    pub fn insert(&mut self, op: ReduceOp, id: ServerId, version: u64, value: Scalar) {
        self.entries.insert((op, id, version), value);
    }

    pub fn evict(&mut self, id: &ServerId) {
        self.entries.retain(|(_, x, _), _| x != id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(n: u64, v: u64) -> OperandKey {
        OperandKey::Array(ServerId::from_counter(n), v)
    }

    #[test]
    fn commutative_keys_are_canonical() {
        let a = ExprKey::new(OpKey::Binop(BinOp::Add), vec![arr(2, 0), arr(1, 0)]);
        let b = ExprKey::new(OpKey::Binop(BinOp::Add), vec![arr(1, 0), arr(2, 0)]);
        assert_eq!(a, b);
        let c = ExprKey::new(OpKey::Binop(BinOp::Sub), vec![arr(2, 0), arr(1, 0)]);
        let d = ExprKey::new(OpKey::Binop(BinOp::Sub), vec![arr(1, 0), arr(2, 0)]);
        assert_ne!(c, d);
    }

    #[test]
    fn eviction_covers_operands_and_results() {
        let mut c = ExprCache::default();
        let k1 = ExprKey::new(OpKey::Binop(BinOp::Mul), vec![arr(1, 0), arr(1, 0)]);
        let k2 = ExprKey::new(OpKey::Unary(UnaryOp::Neg), vec![arr(2, 0)]);
        c.insert(k1.clone(), ServerId::from_counter(2), 0);
        c.insert(k2.clone(), ServerId::from_counter(3), 0);
        c.evict(&ServerId::from_counter(2));
        assert!(c.get(&k1).is_none());
        assert!(c.get(&k2).is_none());
        assert!(c.is_empty());
    }

    #[test]
    fn reduce_entries_are_versioned() {
        let mut r = ReduceCache::default();
        let s = ServerId::from_counter(1);
        r.insert(ReduceOp::Sum, s.clone(), 0, Scalar::Int(3));
        assert_eq!(r.get(ReduceOp::Sum, &s, 0), Some(Scalar::Int(3)));
        assert_eq!(r.get(ReduceOp::Sum, &s, 1), None);
        r.evict(&s);
        assert!(r.is_empty());
    }
}
