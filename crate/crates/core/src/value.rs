//! Scalar types the engine can select over.
//!
//! Every supported type maps onto an unsigned bit pattern of `WIDTH` bits
//! whose unsigned order is the natural ascending order of the value. The
//! engine itself never looks at the value again until results are read back.

use std::cmp::Ordering;
use std::fmt::Debug;

use half::f16;
use num_traits::{Bounded, NumCast, ToPrimitive};
use serde::{Deserialize, Serialize};

/// On-disk element type code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    U32,
    F16,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::U32 => 1,
            DType::F16 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::F32),
            1 => Some(DType::U32),
            2 => Some(DType::F16),
            _ => None,
        }
    }

    pub fn elem_bytes(self) -> usize {
        match self {
            DType::F32 | DType::U32 => 4,
            DType::F16 => 2,
        }
    }
}

pub trait RadixValue:
    Copy + Debug + PartialOrd + Send + Sync + NumCast + ToPrimitive + Bounded + 'static
{
    /// Key width in bits.
    const WIDTH: u32;
    /// Digit width used when the caller does not pick one.
    const DEFAULT_DIGIT: u32;
    const IS_FLOAT: bool;
    const DTYPE: DType;

    /// Order-preserving map onto the low `WIDTH` bits of a `u32`.
    fn to_ordered_bits(self) -> u32;
    fn from_ordered_bits(bits: u32) -> Self;

    fn is_nan(self) -> bool;

    /// Total order used by the reference implementations. Must agree with
    /// `to_ordered_bits` on non-NaN values but is computed independently.
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// Quantize a real-valued sample into this type (round and saturate for
    /// integers).
    fn from_sample(x: f64) -> Self;

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    fn elem_bytes() -> usize {
        Self::DTYPE.elem_bytes()
    }
}

impl RadixValue for f32 {
    const WIDTH: u32 = 32;
    const DEFAULT_DIGIT: u32 = 12;
    const IS_FLOAT: bool = true;
    const DTYPE: DType = DType::F32;

    #[inline]
    fn to_ordered_bits(self) -> u32 {
        let raw = self.to_bits();
        if raw & 0x8000_0000 != 0 {
            !raw
        } else {
            raw | 0x8000_0000
        }
    }

    #[inline]
    fn from_ordered_bits(bits: u32) -> Self {
        let raw = if bits & 0x8000_0000 != 0 {
            bits & 0x7FFF_FFFF
        } else {
            !bits
        };
        f32::from_bits(raw)
    }

    fn is_nan(self) -> bool {
        f32::is_nan(self)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f32::total_cmp(self, other)
    }

    fn from_sample(x: f64) -> Self {
        x as f32
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().unwrap())
    }
}

impl RadixValue for u32 {
    const WIDTH: u32 = 32;
    const DEFAULT_DIGIT: u32 = 12;
    const IS_FLOAT: bool = false;
    const DTYPE: DType = DType::U32;

    #[inline]
    fn to_ordered_bits(self) -> u32 {
        self
    }

    #[inline]
    fn from_ordered_bits(bits: u32) -> Self {
        bits
    }

    fn is_nan(self) -> bool {
        false
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn from_sample(x: f64) -> Self {
        if x.is_nan() {
            return 0;
        }
        x.round().clamp(0.0, u32::MAX as f64) as u32
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        u32::from_le_bytes(bytes[..4].try_into().unwrap())
    }
}

impl RadixValue for f16 {
    const WIDTH: u32 = 16;
    const DEFAULT_DIGIT: u32 = 8;
    const IS_FLOAT: bool = true;
    const DTYPE: DType = DType::F16;

    #[inline]
    fn to_ordered_bits(self) -> u32 {
        let raw = self.to_bits();
        let ordered = if raw & 0x8000 != 0 {
            !raw
        } else {
            raw | 0x8000
        };
        ordered as u32
    }

    #[inline]
    fn from_ordered_bits(bits: u32) -> Self {
        let bits = bits as u16;
        let raw = if bits & 0x8000 != 0 {
            bits & 0x7FFF
        } else {
            !bits
        };
        f16::from_bits(raw)
    }

    fn is_nan(self) -> bool {
        f16::is_nan(self)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f16::total_cmp(self, other)
    }

    fn from_sample(x: f64) -> Self {
        f16::from_f64(x)
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f16::from_le_bytes(bytes[..2].try_into().unwrap())
    }
}

/// Position of the first NaN, if any.
pub fn find_nan<T: RadixValue>(values: &[T]) -> Option<usize> {
    if !T::IS_FLOAT {
        return None;
    }
    values.iter().position(|v| v.is_nan())
}
