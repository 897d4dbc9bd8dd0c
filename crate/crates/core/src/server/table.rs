use std::collections::HashMap;

use crate::dtype::{ArrayData, Dtype};
use crate::error::{Error, Result};
use crate::protocol::ServerId;

/// A named server-resident array.
#[derive(Debug, Clone)]
pub struct ServerArray {
    pub id: ServerId,
    pub data: ArrayData,
    /// Incremented on every overwrite through a store command.
    pub version: u64,
}

impl ServerArray {
    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn size(&self) -> usize {
        self.data.len()
    }
}

/// Map of live arrays. Ids are never reissued.
#[derive(Debug)]
pub struct SymbolTable {
    arrays: HashMap<ServerId, ServerArray>,
    next_id: u64,
    live_elements: usize,
    element_budget: usize,
    pub(crate) created_count: u64,
    pub(crate) deleted_count: u64,
}

impl SymbolTable {
    pub fn new(element_budget: usize) -> SymbolTable {
        SymbolTable {
            arrays: HashMap::new(),
            next_id: 1,
            live_elements: 0,
            element_budget,
            created_count: 0,
            deleted_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    pub fn live_elements(&self) -> usize {
        self.live_elements
    }

    pub fn get(&self, id: &ServerId) -> Result<&ServerArray> {
        self.arrays
            .get(id)
            .ok_or_else(|| Error::UnknownArray(id.to_string()))
    }

    pub fn get_mut(&mut self, id: &ServerId) -> Result<&mut ServerArray> {
        self.arrays
            .get_mut(id)
            .ok_or_else(|| Error::UnknownArray(id.to_string()))
    }

    /// Checks that `size` more elements fit in the budget.
    pub fn reserve(&self, size: usize) -> Result<()> {
        if self.live_elements.saturating_add(size) > self.element_budget {
            return Err(Error::Resource(format!(
                "{size} elements would exceed the budget ({} of {} in use)",
                self.live_elements, self.element_budget
            )));
        }
        Ok(())
    }

    pub fn insert(&mut self, data: ArrayData) -> Result<ServerId> {
        self.reserve(data.len())?;
        let id = ServerId::from_counter(self.next_id);
        self.next_id += 1;
        self.live_elements += data.len();
        self.created_count += 1;
        self.arrays.insert(
            id.clone(),
            ServerArray {
                id: id.clone(),
                data,
                version: 0,
            },
        );
        Ok(id)
    }

    /// Replaces the contents of `id`, which must keep its size and dtype.
    pub fn overwrite(&mut self, id: &ServerId, data: ArrayData) -> Result<()> {
        let arr = self.get_mut(id)?;
        if arr.size() != data.len() || arr.dtype() != data.dtype() {
            return Err(Error::Size(format!(
                "store into {id} ({} x {}) from a {} x {} result",
                arr.size(),
                arr.dtype(),
                data.len(),
                data.dtype()
            )));
        }
        arr.data = data;
        arr.version += 1;
        Ok(())
    }

    pub fn remove(&mut self, id: &ServerId) -> Result<ServerArray> {
        let arr = self
            .arrays
            .remove(id)
            .ok_or_else(|| Error::UnknownArray(id.to_string()))?;
        self.live_elements -= arr.size();
        self.deleted_count += 1;
        Ok(arr)
    }
}
