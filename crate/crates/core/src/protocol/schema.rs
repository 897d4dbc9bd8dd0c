//! Static description of the command vocabulary.

use crate::error::{Error, Result};

/// One row of the command table. Optional argument names end in `?`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommandSpec {
    pub cmd: &'static str,
    pub args: &'static [&'static str],
    pub payload: &'static [&'static str],
    /// Accepted values of the `op` argument, when the command has one.
    pub ops: &'static [&'static str],
}

const BINOPS: &[&str] = &[
    "add", "sub", "mul", "truediv", "floordiv", "mod", "safediv", "eq", "ne", "lt", "le", "gt",
    "ge",
];
const UNARY_OPS: &[&str] = &["neg", "abs", "lognot"];
const REDUCE_OPS: &[&str] = &["sum", "prod", "min", "max", "any", "all"];

/// Fill kinds accepted by `create` and `create_store`.
pub const FILL_KINDS: &[&str] = &["randint", "const", "arange", "values"];

const SCHEMA: &[CommandSpec] = &[
    CommandSpec { cmd: "connect", args: &["client_name"], payload: &["session_id"], ops: &[] },
    CommandSpec { cmd: "create", args: &["dtype", "size", "fill"], payload: &["server_id"], ops: &[] },
    CommandSpec { cmd: "create_store", args: &["dest", "fill"], payload: &["server_id"], ops: &[] },
    CommandSpec {
        cmd: "binop",
        args: &["op", "left", "right"],
        payload: &["server_id", "size", "dtype"],
        ops: BINOPS,
    },
    CommandSpec {
        cmd: "binop_store",
        args: &["op", "left", "right", "dest"],
        payload: &["server_id"],
        ops: BINOPS,
    },
    CommandSpec { cmd: "unary", args: &["op", "a"], payload: &["server_id", "size", "dtype"], ops: UNARY_OPS },
    CommandSpec { cmd: "unary_store", args: &["op", "a", "dest"], payload: &["server_id"], ops: UNARY_OPS },
    CommandSpec { cmd: "reduce", args: &["op", "a"], payload: &["value"], ops: REDUCE_OPS },
    CommandSpec { cmd: "slice", args: &["a", "start", "stop"], payload: &["server_id", "size", "dtype"], ops: &[] },
    CommandSpec { cmd: "slice_store", args: &["a", "start", "stop", "dest"], payload: &["server_id"], ops: &[] },
    CommandSpec { cmd: "intersect_size", args: &["a", "b"], payload: &["value"], ops: &[] },
    CommandSpec { cmd: "fetch", args: &["a", "start?", "stop?"], payload: &["dtype", "values"], ops: &[] },
    CommandSpec { cmd: "delete", args: &["a"], payload: &[], ops: &[] },
    CommandSpec {
        cmd: "stats",
        args: &[],
        payload: &[
            "messages_handled",
            "arrays_created",
            "arrays_deleted",
            "parse_ns",
            "create_ns",
            "delete_ns",
            "compute_ns",
        ],
        ops: &[],
    },
    CommandSpec { cmd: "reset_stats", args: &[], payload: &[], ops: &[] },
    CommandSpec { cmd: "shutdown", args: &[], payload: &[], ops: &[] },
];

pub fn command_schema() -> &'static [CommandSpec] {
    SCHEMA
}

pub fn lookup(cmd: &str) -> Result<&'static CommandSpec> {
    SCHEMA
        .iter()
        .find(|spec| spec.cmd == cmd)
        .ok_or_else(|| Error::Schema(format!("unknown command `{cmd}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{BinOp, ReduceOp, UnaryOp};

    #[test]
    fn op_tables_match_operator_enums() {
        let names: Vec<_> = BinOp::ALL.iter().map(|o| o.name()).collect();
        assert_eq!(lookup("binop").unwrap().ops, names.as_slice());
        assert_eq!(lookup("binop_store").unwrap().ops, names.as_slice());
        let names: Vec<_> = ReduceOp::ALL.iter().map(|o| o.name()).collect();
        assert_eq!(lookup("reduce").unwrap().ops, names.as_slice());
        let names: Vec<_> = UnaryOp::ALL.iter().map(|o| o.name()).collect();
        assert_eq!(lookup("unary").unwrap().ops, names.as_slice());
    }

    #[test]
    fn closed_set() {
        assert_eq!(command_schema().len(), 16);
        assert!(matches!(lookup("frobnicate"), Err(Error::Schema(_))));
    }
}
