//! Elementwise kernels, fills and deterministic reductions.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dtype::{ArrayData, Dtype, Scalar};
use crate::error::{Error, Result};
use crate::ops::{BinOp, ReduceOp, UnaryOp};
use crate::protocol::FillSpec;

/// Reductions accumulate left to right inside fixed-size chunks, then combine
/// the chunk results left to right.
pub const REDUCE_CHUNK: usize = 4096;

/// A binop operand after id resolution.
#[derive(Clone, Copy)]
pub enum Operand<'a> {
    Array(&'a ArrayData),
    Scalar(Scalar),
}

impl Operand<'_> {
    fn dtype(&self) -> Dtype {
        match self {
            Operand::Array(a) => a.dtype(),
            Operand::Scalar(s) => s.dtype(),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Operand::Array(a) => Some(a.len()),
            Operand::Scalar(_) => None,
        }
    }

    #[inline]
    fn int_at(&self, i: usize) -> i64 {
        match self {
            Operand::Array(ArrayData::Int(v)) => v[i],
            Operand::Array(ArrayData::Bool(v)) => i64::from(v[i]),
            Operand::Array(ArrayData::Float(v)) => v[i] as i64,
            Operand::Scalar(s) => s.as_i64().unwrap_or_else(|| s.as_f64() as i64),
        }
    }

    #[inline]
    fn float_at(&self, i: usize) -> f64 {
        match self {
            Operand::Array(ArrayData::Int(v)) => v[i] as f64,
            Operand::Array(ArrayData::Bool(v)) => f64::from(u8::from(v[i])),
            Operand::Array(ArrayData::Float(v)) => v[i],
            Operand::Scalar(s) => s.as_f64(),
        }
    }
}

fn floordiv(a: i64, b: i64) -> i64 {
    let q = a.wrapping_div(b);
    if a.wrapping_rem(b) != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn modulo(a: i64, b: i64) -> i64 {
    let r = a.wrapping_rem(b);
    if r != 0 && ((r < 0) != (b < 0)) {
        r + b
    } else {
        r
    }
}

/// Result length of a binop: the common array length.
pub fn binop_len(left: &Operand, right: &Operand) -> Result<usize> {
    match (left.len(), right.len()) {
        (Some(a), Some(b)) if a != b => Err(Error::Size(format!("operands have sizes {a} and {b}"))),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::Argument("binop needs at least one array operand".into())),
    }
}

pub fn binop(op: BinOp, left: Operand, right: Operand) -> Result<ArrayData> {
    let n = binop_len(&left, &right)?;
    let (ld, rd) = (left.dtype(), right.dtype());
    let out = op.result_dtype(ld, rd)?;
    let float_inputs = ld == Dtype::Float64 || rd == Dtype::Float64;

    let cmp = |f: fn(&std::cmp::Ordering) -> bool| -> ArrayData {
        if float_inputs {
            ArrayData::Bool(
                (0..n)
                    .map(|i| {
                        let (a, b) = (left.float_at(i), right.float_at(i));
                        a.partial_cmp(&b).is_some_and(|o| f(&o))
                    })
                    .collect(),
            )
        } else {
            ArrayData::Bool((0..n).map(|i| f(&left.int_at(i).cmp(&right.int_at(i)))).collect())
        }
    };

    Ok(match op {
        BinOp::Eq => cmp(|o| o.is_eq()),
        BinOp::Ne => {
            // NaN != NaN must hold, so this is not the negation of `cmp`.
            if float_inputs {
                ArrayData::Bool((0..n).map(|i| left.float_at(i) != right.float_at(i)).collect())
            } else {
                ArrayData::Bool((0..n).map(|i| left.int_at(i) != right.int_at(i)).collect())
            }
        }
        BinOp::Lt => cmp(|o| o.is_lt()),
        BinOp::Le => cmp(|o| o.is_le()),
        BinOp::Gt => cmp(|o| o.is_gt()),
        BinOp::Ge => cmp(|o| o.is_ge()),
        BinOp::Truediv => {
            ArrayData::Float((0..n).map(|i| left.float_at(i) / right.float_at(i)).collect())
        }
        BinOp::Safediv => ArrayData::Float(
            (0..n)
                .map(|i| {
                    let d = right.float_at(i);
                    if d == 0.0 {
                        0.0
                    } else {
                        left.float_at(i) / d
                    }
                })
                .collect(),
        ),
        BinOp::Floordiv | BinOp::Mod => {
            let mut v = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (left.int_at(i), right.int_at(i));
                if b == 0 {
                    return Err(Error::Arithmetic(format!("{} by zero at index {i}", op.name())));
                }
                v.push(if op == BinOp::Floordiv { floordiv(a, b) } else { modulo(a, b) });
            }
            ArrayData::Int(v)
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul if out == Dtype::Float64 => {
            let f = match op {
                BinOp::Add => |a: f64, b: f64| a + b,
                BinOp::Sub => |a: f64, b: f64| a - b,
                _ => |a: f64, b: f64| a * b,
            };
            ArrayData::Float((0..n).map(|i| f(left.float_at(i), right.float_at(i))).collect())
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => {
            let f = match op {
                BinOp::Add => i64::wrapping_add,
                BinOp::Sub => i64::wrapping_sub,
                _ => i64::wrapping_mul,
            };
            ArrayData::Int((0..n).map(|i| f(left.int_at(i), right.int_at(i))).collect())
        }
    })
}

pub fn unary(op: UnaryOp, a: &ArrayData) -> Result<ArrayData> {
    op.result_dtype(a.dtype())?;
    Ok(match (op, a) {
        (UnaryOp::Neg, ArrayData::Int(v)) => ArrayData::Int(v.iter().map(|x| x.wrapping_neg()).collect()),
        (UnaryOp::Neg, ArrayData::Float(v)) => ArrayData::Float(v.iter().map(|x| -x).collect()),
        (UnaryOp::Abs, ArrayData::Int(v)) => ArrayData::Int(v.iter().map(|x| x.wrapping_abs()).collect()),
        (UnaryOp::Abs, ArrayData::Float(v)) => ArrayData::Float(v.iter().map(|x| x.abs()).collect()),
        (UnaryOp::Lognot, ArrayData::Bool(v)) => ArrayData::Bool(v.iter().map(|x| !x).collect()),
        _ => unreachable!("dtype checked above"),
    })
}

/// Materializes a fill of `size` elements of `dtype`.
pub fn fill(spec: &FillSpec, dtype: Dtype, size: usize) -> Result<ArrayData> {
    match spec {
        FillSpec::Const { value } => {
            let v = value
                .cast(dtype)
                .ok_or_else(|| Error::Schema(format!("fill value {value} is not a valid {dtype}")))?;
            Ok(match v {
                Scalar::Int(x) => ArrayData::Int(vec![x; size]),
                Scalar::Float(x) => ArrayData::Float(vec![x; size]),
                Scalar::Bool(x) => ArrayData::Bool(vec![x; size]),
            })
        }
        FillSpec::Arange => match dtype {
            Dtype::Int64 => Ok(ArrayData::Int((0..size as i64).collect())),
            Dtype::Float64 => Ok(ArrayData::Float((0..size).map(|i| i as f64).collect())),
            Dtype::Bool => Err(Error::Schema("arange fill is not defined for bool".into())),
        },
        FillSpec::Values { data } => {
            if data.len() != size {
                return Err(Error::Schema(format!(
                    "values fill has {} elements, expected {size}",
                    data.len()
                )));
            }
            ArrayData::from_scalars(dtype, data)
                .ok_or_else(|| Error::Schema(format!("values fill does not fit {dtype}")))
        }
        FillSpec::Randint { lo, hi, seed } => {
            if lo >= hi {
                return Err(Error::Schema(format!("randint needs lo < hi, got [{lo}, {hi})")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            match dtype {
                Dtype::Int64 => {
                    let dist = Uniform::new(*lo, *hi);
                    Ok(ArrayData::Int((0..size).map(|_| dist.sample(&mut rng)).collect()))
                }
                Dtype::Float64 => {
                    let dist = Uniform::new(*lo as f64, *hi as f64);
                    Ok(ArrayData::Float((0..size).map(|_| dist.sample(&mut rng)).collect()))
                }
                Dtype::Bool => Err(Error::Schema("randint fill is not defined for bool".into())),
            }
        }
    }
}

fn chunked<T: Copy>(values: &[T], init: T, f: impl Fn(T, T) -> T) -> T {
    values
        .chunks(REDUCE_CHUNK)
        .map(|chunk| chunk.iter().fold(init, |acc, &x| f(acc, x)))
        .fold(init, &f)
}

fn chunked_nonempty<T: Copy>(values: &[T], f: impl Fn(T, T) -> T) -> T {
    values
        .chunks(REDUCE_CHUNK)
        .map(|chunk| chunk[1..].iter().fold(chunk[0], |acc, &x| f(acc, x)))
        .reduce(&f)
        .expect("caller checked non-empty")
}

pub fn reduce(op: ReduceOp, a: &ArrayData) -> Result<Scalar> {
    if matches!(op, ReduceOp::Min | ReduceOp::Max) && a.is_empty() {
        return Err(Error::Argument(format!("{} of an empty array", op.name())));
    }
    Ok(match (op, a) {
        (ReduceOp::Any, _) => Scalar::Bool(truthy(a).any(|x| x)),
        (ReduceOp::All, _) => Scalar::Bool(truthy(a).all(|x| x)),

        (ReduceOp::Sum, ArrayData::Int(v)) => Scalar::Int(chunked(v, 0, i64::wrapping_add)),
        (ReduceOp::Prod, ArrayData::Int(v)) => Scalar::Int(chunked(v, 1, i64::wrapping_mul)),
        (ReduceOp::Min, ArrayData::Int(v)) => Scalar::Int(chunked_nonempty(v, i64::min)),
        (ReduceOp::Max, ArrayData::Int(v)) => Scalar::Int(chunked_nonempty(v, i64::max)),

        (ReduceOp::Sum, ArrayData::Float(v)) => Scalar::Float(chunked(v, 0.0, |x, y| x + y)),
        (ReduceOp::Prod, ArrayData::Float(v)) => Scalar::Float(chunked(v, 1.0, |x, y| x * y)),
        (ReduceOp::Min, ArrayData::Float(v)) => Scalar::Float(chunked_nonempty(v, f64::min)),
        (ReduceOp::Max, ArrayData::Float(v)) => Scalar::Float(chunked_nonempty(v, f64::max)),

        (ReduceOp::Sum, ArrayData::Bool(v)) => {
            let ints: Vec<i64> = v.iter().map(|&b| i64::from(b)).collect();
            Scalar::Int(chunked(&ints, 0, i64::wrapping_add))
        }
        (ReduceOp::Prod, ArrayData::Bool(v)) => Scalar::Int(i64::from(v.iter().all(|&b| b))),
        (ReduceOp::Min, ArrayData::Bool(v)) => Scalar::Bool(v.iter().all(|&b| b)),
        (ReduceOp::Max, ArrayData::Bool(v)) => Scalar::Bool(v.iter().any(|&b| b)),
    })
}

fn truthy(a: &ArrayData) -> Box<dyn Iterator<Item = bool> + '_> {
    match a {
        ArrayData::Int(v) => Box::new(v.iter().map(|&x| x != 0)),
        ArrayData::Float(v) => Box::new(v.iter().map(|&x| x != 0.0)),
        ArrayData::Bool(v) => Box::new(v.iter().copied()),
    }
}

/// Number of distinct values common to `a` and `b`.
pub fn intersect_size(a: &[i64], b: &[i64]) -> i64 {
    let sorted = |v: &[i64]| {
        let mut s = v.to_vec();
        s.sort_unstable();
        s.dedup();
        s
    };
    let (a, b) = (sorted(a), sorted(b));
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}
