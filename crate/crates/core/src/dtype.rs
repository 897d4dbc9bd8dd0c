//! Element types, scalars and typed element storage shared by client and server.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// Element type of an array. Serialized as `"int64"`, `"float64"` or `"bool"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "int64")]
    Int64,
    #[serde(rename = "float64")]
    Float64,
    #[serde(rename = "bool")]
    Bool,
}

impl Dtype {
    pub fn name(self) -> &'static str {
        match self {
            Dtype::Int64 => "int64",
            Dtype::Float64 => "float64",
            Dtype::Bool => "bool",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Dtype::Int64 | Dtype::Float64)
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single typed value.
///
/// On the wire a scalar is self-describing: integers are JSON integers, floats
/// always carry a fraction or exponent (shortest round-trip formatting), and
/// non-finite floats are the strings `"NaN"`, `"Inf"` and `"-Inf"`.
#[derive(Debug, Clone, Copy)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Scalar {
    pub fn dtype(self) -> Dtype {
        match self {
            Scalar::Int(_) => Dtype::Int64,
            Scalar::Float(_) => Dtype::Float64,
            Scalar::Bool(_) => Dtype::Bool,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::Int(v) => v as f64,
            Scalar::Float(v) => v,
            Scalar::Bool(v) => f64::from(u8::from(v)),
        }
    }

    pub fn as_i64(self) -> Option<i64> {
        match self {
            Scalar::Int(v) => Some(v),
            Scalar::Bool(v) => Some(i64::from(v)),
            Scalar::Float(_) => None,
        }
    }

    /// Converts to `dtype`, failing when the conversion would lose information.
    pub fn cast(self, dtype: Dtype) -> Option<Scalar> {
        match (self, dtype) {
            (s, d) if s.dtype() == d => Some(s),
            (Scalar::Int(v), Dtype::Float64) => Some(Scalar::Float(v as f64)),
            (Scalar::Bool(v), Dtype::Int64) => Some(Scalar::Int(i64::from(v))),
            (Scalar::Bool(v), Dtype::Float64) => Some(Scalar::Float(f64::from(u8::from(v)))),
            (Scalar::Int(v @ (0 | 1)), Dtype::Bool) => Some(Scalar::Bool(v == 1)),
            (Scalar::Float(v), Dtype::Int64) if v.fract() == 0.0 && v.abs() < 9.2e18 => {
                Some(Scalar::Int(v as i64))
            }
            _ => None,
        }
    }

    /// Hashable identity of the value: dtype plus raw bits.
    pub fn key(self) -> (Dtype, u64) {
        match self {
            Scalar::Int(v) => (Dtype::Int64, v as u64),
            Scalar::Float(v) => (Dtype::Float64, v.to_bits()),
            Scalar::Bool(v) => (Dtype::Bool, u64::from(v)),
        }
    }
}

/// Bit-exact equality: `NaN == NaN` and `0.0 != -0.0`.
impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Scalar {}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => write!(f, "{v:?}"),
            Scalar::Bool(true) => f.write_str("True"),
            Scalar::Bool(false) => f.write_str("False"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

pub(crate) fn serialize_f64<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_str("NaN")
    } else if v == f64::INFINITY {
        s.serialize_str("Inf")
    } else if v == f64::NEG_INFINITY {
        s.serialize_str("-Inf")
    } else {
        s.serialize_f64(v)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Scalar::Int(v) => s.serialize_i64(v),
            Scalar::Float(v) => serialize_f64(v, s),
            Scalar::Bool(v) => s.serialize_bool(v),
        }
    }
}

struct ScalarVisitor;

impl<'de> Visitor<'de> for ScalarVisitor {
    type Value = Scalar;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number, a boolean, or one of \"NaN\", \"Inf\", \"-Inf\"")
    }

    fn visit_bool<E: de::Error>(self, v: bool) -> Result<Scalar, E> {
        Ok(Scalar::Bool(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
        Ok(Scalar::Int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
        i64::try_from(v)
            .map(Scalar::Int)
            .map_err(|_| E::custom(format!("integer {v} out of int64 range")))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Scalar, E> {
        Ok(Scalar::Float(v))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
        match v {
            "NaN" => Ok(Scalar::Float(f64::NAN)),
            "Inf" => Ok(Scalar::Float(f64::INFINITY)),
            "-Inf" => Ok(Scalar::Float(f64::NEG_INFINITY)),
            other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ScalarVisitor)
    }
}

/// Contiguous typed element storage.
#[derive(Debug, Clone)]
pub enum ArrayData {
    Int(Vec<i64>),
    Float(Vec<f64>),
    Bool(Vec<bool>),
}

impl ArrayData {
    pub fn dtype(&self) -> Dtype {
        match self {
            ArrayData::Int(_) => Dtype::Int64,
            ArrayData::Float(_) => Dtype::Float64,
            ArrayData::Bool(_) => Dtype::Bool,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ArrayData::Int(v) => v.len(),
            ArrayData::Float(v) => v.len(),
            ArrayData::Bool(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Option<Scalar> {
        match self {
            ArrayData::Int(v) => v.get(i).copied().map(Scalar::Int),
            ArrayData::Float(v) => v.get(i).copied().map(Scalar::Float),
            ArrayData::Bool(v) => v.get(i).copied().map(Scalar::Bool),
        }
    }

    pub fn zeros(dtype: Dtype, size: usize) -> ArrayData {
        match dtype {
            Dtype::Int64 => ArrayData::Int(vec![0; size]),
            Dtype::Float64 => ArrayData::Float(vec![0.0; size]),
            Dtype::Bool => ArrayData::Bool(vec![false; size]),
        }
    }

    pub fn slice(&self, start: usize, stop: usize) -> ArrayData {
        match self {
            ArrayData::Int(v) => ArrayData::Int(v[start..stop].to_vec()),
            ArrayData::Float(v) => ArrayData::Float(v[start..stop].to_vec()),
            ArrayData::Bool(v) => ArrayData::Bool(v[start..stop].to_vec()),
        }
    }

    pub fn to_scalars(&self) -> Vec<Scalar> {
        (0..self.len()).filter_map(|i| self.get(i)).collect()
    }

    /// Builds typed storage from scalars, casting each to `dtype`.
    pub fn from_scalars(dtype: Dtype, values: &[Scalar]) -> Option<ArrayData> {
        let cast = |s: &Scalar| s.cast(dtype);
        Some(match dtype {
            Dtype::Int64 => ArrayData::Int(
                values
                    .iter()
                    .map(|s| cast(s).and_then(Scalar::as_i64))
                    .collect::<Option<_>>()?,
            ),
            Dtype::Float64 => ArrayData::Float(
                values
                    .iter()
                    .map(|s| cast(s).map(Scalar::as_f64))
                    .collect::<Option<_>>()?,
            ),
            Dtype::Bool => ArrayData::Bool(
                values
                    .iter()
                    .map(|s| match cast(s) {
                        Some(Scalar::Bool(b)) => Some(b),
                        _ => None,
                    })
                    .collect::<Option<_>>()?,
            ),
        })
    }

    pub fn as_int(&self) -> Option<&[i64]> {
        match self {
            ArrayData::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<&[f64]> {
        match self {
            ArrayData::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<&[bool]> {
        match self {
            ArrayData::Bool(v) => Some(v),
            _ => None,
        }
    }

    /// Element values widened to `f64` (bools as 0/1).
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            ArrayData::Int(v) => v.iter().map(|&x| x as f64).collect(),
            ArrayData::Float(v) => v.clone(),
            ArrayData::Bool(v) => v.iter().map(|&x| f64::from(u8::from(x))).collect(),
        }
    }
}

/// Bit-exact comparison, consistent with [`Scalar`] equality.
impl PartialEq for ArrayData {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ArrayData::Int(a), ArrayData::Int(b)) => a == b,
            (ArrayData::Bool(a), ArrayData::Bool(b)) => a == b,
            (ArrayData::Float(a), ArrayData::Float(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl fmt::Display for ArrayData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.to_scalars().into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_json_is_self_describing() {
        for s in [
            Scalar::Int(-3),
            Scalar::Float(3.0),
            Scalar::Float(0.1),
            Scalar::Float(1e300),
            Scalar::Float(f64::NAN),
            Scalar::Float(f64::NEG_INFINITY),
            Scalar::Bool(true),
        ] {
            let text = serde_json::to_string(&s).unwrap();
            let back: Scalar = serde_json::from_str(&text).unwrap();
            assert_eq!(s, back, "{text}");
        }
        assert_eq!(serde_json::to_string(&Scalar::Float(f64::INFINITY)).unwrap(), "\"Inf\"");
        assert_eq!(serde_json::to_string(&Scalar::Float(2.0)).unwrap(), "2.0");
    }

    #[test]
    fn casts_refuse_lossy_conversions() {
        assert_eq!(Scalar::Float(2.5).cast(Dtype::Int64), None);
        assert_eq!(Scalar::Int(2).cast(Dtype::Bool), None);
        assert_eq!(Scalar::Int(1).cast(Dtype::Bool), Some(Scalar::Bool(true)));
        assert_eq!(Scalar::Float(4.0).cast(Dtype::Int64), Some(Scalar::Int(4)));
    }
}
