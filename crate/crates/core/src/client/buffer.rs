//! The deferred command buffer.
//!
//! Each entry is one three-address operation whose inputs are client ids.
//! Entries are appended in issue order and carry a monotone index, so the
//! expression DAG is implicit: inputs always precede the command reading them.

use std::collections::BTreeMap;
use std::fmt;

use crate::dtype::Scalar;
use crate::ops::{BinOp, UnaryOp};
use crate::protocol::FillSpec;

/// Client-side array name, printed as `C<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClientId(pub u64);

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Array(ClientId),
    Scalar(Scalar),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CmdKind {
    Create { fill: FillSpec },
    Binop(BinOp),
    Unary(UnaryOp),
    Slice { start: usize, stop: usize },
}

impl CmdKind {
    pub fn name(&self) -> &'static str {
        match self {
            CmdKind::Create { .. } => "create",
            CmdKind::Binop(_) => "binop",
            CmdKind::Unary(_) => "unary",
            CmdKind::Slice { .. } => "slice",
        }
    }

    /// Whether equal operands always give equal results.
    pub fn is_deterministic(&self) -> bool {
        match self {
            CmdKind::Create { fill } => fill.is_deterministic(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferCommand {
    pub index: u64,
    pub kind: CmdKind,
    pub inputs: Vec<Input>,
    pub output: ClientId,
}

impl BufferCommand {
    /// Array inputs in operand order, repeats included.
    pub fn array_inputs(&self) -> impl Iterator<Item = ClientId> + '_ {
        self.inputs.iter().filter_map(|i| match i {
            Input::Array(c) => Some(*c),
            Input::Scalar(_) => None,
        })
    }

    /// Array inputs in operand order without repeats.
    pub fn distinct_inputs(&self) -> Vec<ClientId> {
        let mut out: Vec<ClientId> = Vec::with_capacity(self.inputs.len());
        for c in self.array_inputs() {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    pub fn reads(&self, id: ClientId) -> u32 {
        self.array_inputs().filter(|&c| c == id).count() as u32
    }
}

#[derive(Debug, Default)]
pub struct CommandBuffer {
    pending: BTreeMap<u64, BufferCommand>,
    next_index: u64,
}

impl CommandBuffer {
    pub fn push(&mut self, kind: CmdKind, inputs: Vec<Input>, output: ClientId) -> u64 {
        let index = self.next_index;
        self.next_index += 1;
        self.pending.insert(
            index,
            BufferCommand {
                index,
                kind,
                inputs,
                output,
            },
        );
        index
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn get(&self, index: u64) -> Option<&BufferCommand> {
        self.pending.get(&index)
    }

    pub fn remove(&mut self, index: u64) -> Option<BufferCommand> {
        self.pending.remove(&index)
    }

    pub fn oldest(&self) -> Option<&BufferCommand> {
        self.pending.values().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BufferCommand> {
        self.pending.values()
    }

    /// Highest index of an unexecuted command reading `id`.
    pub fn last_reader(&self, id: ClientId) -> Option<u64> {
        self.pending
            .values()
            .rev()
            .find(|c| c.reads(id) > 0)
            .map(|c| c.index)
    }
}
