//! Idle server arrays available for reuse, bucketed by (size, dtype).

use std::collections::{HashMap, VecDeque};

use crate::dtype::Dtype;
use crate::protocol::ServerId;

type Bucket = VecDeque<(u64, ServerId)>;

#[derive(Debug)]
pub struct FreeList {
    buckets: HashMap<(usize, Dtype), Bucket>,
    bucket_cap: usize,
    idle_budget: usize,
    idle_elements: usize,
    clock: u64,
}

impl FreeList {
    pub fn new(bucket_cap: usize, idle_budget: usize) -> FreeList {
        FreeList {
            buckets: HashMap::new(),
            bucket_cap,
            idle_budget,
            idle_elements: 0,
            clock: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idle_elements(&self) -> usize {
        self.idle_elements
    }

    pub fn contains(&self, id: &ServerId) -> bool {
        self.buckets.values().any(|b| b.iter().any(|(_, x)| x == id))
    }

    /// Adds an idle array. Returns the ids evicted (least recently used
    /// first) to respect the capacities; the caller must delete them.
    pub fn push(&mut self, id: ServerId, size: usize, dtype: Dtype) -> Vec<ServerId> {
        let mut evicted = Vec::new();
        if size > self.idle_budget || self.bucket_cap == 0 {
            evicted.push(id);
            return evicted;
        }
        self.clock += 1;
        let bucket = self.buckets.entry((size, dtype)).or_default();
        bucket.push_back((self.clock, id));
        self.idle_elements += size;
        if bucket.len() > self.bucket_cap {
            let (_, old) = bucket.pop_front().expect("bucket over capacity");
            self.idle_elements -= size;
            evicted.push(old);
        }
        while self.idle_elements > self.idle_budget {
            let Some(key) = self
                .buckets
                .iter()
                .filter_map(|(k, b)| b.front().map(|(t, _)| (*t, *k)))
                .min()
                .map(|(_, k)| k)
            else {
                break;
            };
            let (_, old) = self.buckets.get_mut(&key).and_then(VecDeque::pop_front).expect("non-empty");
            self.idle_elements -= key.0;
            evicted.push(old);
        }
        evicted
    }

    /// Takes the most recently idled array of this shape.
    pub fn pop(&mut self, size: usize, dtype: Dtype) -> Option<ServerId> {
        let (_, id) = self.buckets.get_mut(&(size, dtype))?.pop_back()?;
        self.idle_elements -= size;
        Some(id)
    }

    pub fn remove(&mut self, id: &ServerId, size: usize, dtype: Dtype) -> bool {
        let Some(bucket) = self.buckets.get_mut(&(size, dtype)) else {
            return false;
        };
        match bucket.iter().position(|(_, x)| x == id) {
            Some(pos) => {
                bucket.remove(pos);
                self.idle_elements -= size;
                true
            }
            None => false,
        }
    }

    /// Removes and returns every idle id.
    pub fn drain(&mut self) -> Vec<ServerId> {
        self.idle_elements = 0;
        let mut all: Vec<_> = self.buckets.drain().flat_map(|(_, b)| b).collect();
        all.sort();
        all.into_iter().map(|(_, id)| id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(n: u64) -> ServerId {
        ServerId::from_counter(n)
    }

    #[test]
    fn reuse_matches_shape() {
        let mut f = FreeList::new(4, 1000);
        f.push(sid(1), 10, Dtype::Int64);
        assert_eq!(f.pop(10, Dtype::Float64), None);
        assert_eq!(f.pop(11, Dtype::Int64), None);
        assert_eq!(f.pop(10, Dtype::Int64), Some(sid(1)));
        assert!(f.is_empty());
    }

    #[test]
    fn bucket_cap_evicts_lru() {
        let mut f = FreeList::new(2, 1000);
        assert!(f.push(sid(1), 1, Dtype::Int64).is_empty());
        assert!(f.push(sid(2), 1, Dtype::Int64).is_empty());
        assert_eq!(f.push(sid(3), 1, Dtype::Int64), vec![sid(1)]);
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn global_budget_evicts_oldest_across_buckets() {
        let mut f = FreeList::new(8, 10);
        f.push(sid(1), 4, Dtype::Int64);
        f.push(sid(2), 4, Dtype::Float64);
        assert_eq!(f.push(sid(3), 4, Dtype::Bool), vec![sid(1)]);
        assert_eq!(f.idle_elements(), 8);
        assert_eq!(f.push(sid(4), 11, Dtype::Bool), vec![sid(4)]);
    }

    #[test]
    fn remove_specific_id() {
        let mut f = FreeList::new(8, 100);
        f.push(sid(1), 2, Dtype::Int64);
        f.push(sid(2), 2, Dtype::Int64);
        assert!(f.remove(&sid(1), 2, Dtype::Int64));
        assert!(!f.contains(&sid(1)));
        assert_eq!(f.drain(), vec![sid(2)]);
    }
}
