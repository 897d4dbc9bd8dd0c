//! Operator vocabularies and their dtype rules.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dtype::Dtype;
use crate::error::{Error, Result};

/// Elementwise binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Truediv,
    Floordiv,
    Mod,
    Safediv,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Truediv,
        BinOp::Floordiv,
        BinOp::Mod,
        BinOp::Safediv,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Truediv => "truediv",
            BinOp::Floordiv => "floordiv",
            BinOp::Mod => "mod",
            BinOp::Safediv => "safediv",
            BinOp::Eq => "eq",
            BinOp::Ne => "ne",
            BinOp::Lt => "lt",
            BinOp::Le => "le",
            BinOp::Gt => "gt",
            BinOp::Ge => "ge",
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::Ne)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    /// Result dtype for the given operand dtypes.
    ///
    /// Bools promote to int64 in arithmetic; `truediv`/`safediv` always yield
    /// float64; `floordiv`/`mod` accept int64 only.
    pub fn result_dtype(self, left: Dtype, right: Dtype) -> Result<Dtype> {
        use BinOp::*;
        match self {
            Eq | Ne | Lt | Le | Gt | Ge => Ok(Dtype::Bool),
            Truediv | Safediv => Ok(Dtype::Float64),
            Floordiv | Mod => {
                if left == Dtype::Int64 && right == Dtype::Int64 {
                    Ok(Dtype::Int64)
                } else {
                    Err(Error::Dtype(format!(
                        "{} requires int64 operands, got {left} and {right}",
                        self.name()
                    )))
                }
            }
            Add | Sub | Mul => {
                if left == Dtype::Float64 || right == Dtype::Float64 {
                    Ok(Dtype::Float64)
                } else {
                    Ok(Dtype::Int64)
                }
            }
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryOp {
    Neg,
    Abs,
    Lognot,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 3] = [UnaryOp::Neg, UnaryOp::Abs, UnaryOp::Lognot];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Abs => "abs",
            UnaryOp::Lognot => "lognot",
        }
    }

    pub fn result_dtype(self, operand: Dtype) -> Result<Dtype> {
        match (self, operand) {
            (UnaryOp::Lognot, Dtype::Bool) => Ok(Dtype::Bool),
            (UnaryOp::Neg | UnaryOp::Abs, d) if d.is_numeric() => Ok(d),
            (op, d) => Err(Error::Dtype(format!("{} is not defined on {d}", op.name()))),
        }
    }
}

impl fmt::Display for UnaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceOp {
    Sum,
    Prod,
    Min,
    Max,
    Any,
    All,
}

impl ReduceOp {
    pub const ALL: [ReduceOp; 6] = [
        ReduceOp::Sum,
        ReduceOp::Prod,
        ReduceOp::Min,
        ReduceOp::Max,
        ReduceOp::Any,
        ReduceOp::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReduceOp::Sum => "sum",
            ReduceOp::Prod => "prod",
            ReduceOp::Min => "min",
            ReduceOp::Max => "max",
            ReduceOp::Any => "any",
            ReduceOp::All => "all",
        }
    }

    /// Sums and products of bools count in int64; min/max keep the dtype.
    pub fn result_dtype(self, operand: Dtype) -> Dtype {
        match self {
            ReduceOp::Any | ReduceOp::All => Dtype::Bool,
            ReduceOp::Sum | ReduceOp::Prod if operand == Dtype::Bool => Dtype::Int64,
            _ => operand,
        }
    }

    pub fn parse(name: &str) -> Option<ReduceOp> {
        ReduceOp::ALL.into_iter().find(|op| op.name() == name)
    }
}

impl fmt::Display for ReduceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dtype_rules() {
        assert_eq!(BinOp::Add.result_dtype(Dtype::Int64, Dtype::Int64).unwrap(), Dtype::Int64);
        assert_eq!(BinOp::Add.result_dtype(Dtype::Int64, Dtype::Float64).unwrap(), Dtype::Float64);
        assert_eq!(BinOp::Mul.result_dtype(Dtype::Float64, Dtype::Bool).unwrap(), Dtype::Float64);
        assert_eq!(BinOp::Truediv.result_dtype(Dtype::Int64, Dtype::Int64).unwrap(), Dtype::Float64);
        assert!(BinOp::Floordiv.result_dtype(Dtype::Float64, Dtype::Int64).is_err());
        assert!(BinOp::Mod.result_dtype(Dtype::Bool, Dtype::Int64).is_err());
        assert_eq!(BinOp::Lt.result_dtype(Dtype::Float64, Dtype::Int64).unwrap(), Dtype::Bool);
        assert!(UnaryOp::Abs.result_dtype(Dtype::Bool).is_err());
        assert!(UnaryOp::Lognot.result_dtype(Dtype::Int64).is_err());
        assert_eq!(ReduceOp::Sum.result_dtype(Dtype::Bool), Dtype::Int64);
        assert_eq!(ReduceOp::Max.result_dtype(Dtype::Bool), Dtype::Bool);
    }

    #[test]
    fn serde_names_match_wire_vocabulary() {
        for op in BinOp::ALL {
            assert_eq!(serde_json::to_string(&op).unwrap(), format!("\"{}\"", op.name()));
        }
        for op in ReduceOp::ALL {
            assert_eq!(serde_json::to_string(&op).unwrap(), format!("\"{}\"", op.name()));
        }
    }
}
