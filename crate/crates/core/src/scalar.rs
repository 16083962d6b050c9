//! Scalar kinds a [`SparseMatrix`](crate::SparseMatrix) can hold.
//!
//! Two kinds exist: exact `i128` with checked arithmetic, and `Complex64`.
//! All arithmetic used by the expansion goes through this trait so that the
//! integer kind reports overflow instead of wrapping.

use std::fmt::{Debug, Display};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar: Copy + Debug + PartialEq + Send + Sync + 'static {
    const KIND: ScalarKind;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(v: i64) -> Self;

    fn add(self, rhs: Self) -> Result<Self>;
    fn sub(self, rhs: Self) -> Result<Self>;
    fn mul(self, rhs: Self) -> Result<Self>;
    fn neg(self) -> Result<Self>;

    /// Magnitude as a float, used for permanent bounds and reporting.
    fn abs_f64(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Integer,
    Complex,
}

macro_rules! checked_integer {
    ($t:ty) => {
        impl Scalar for $t {
            const KIND: ScalarKind = ScalarKind::Integer;

            #[inline]
            fn zero() -> Self {
                0
            }
            #[inline]
            fn one() -> Self {
                1
            }
            #[inline]
            fn is_zero(&self) -> bool {
                *self == 0
            }
            #[inline]
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            #[inline]
            fn add(self, rhs: Self) -> Result<Self> {
                self.checked_add(rhs).ok_or(Error::Overflow("addition"))
            }
            #[inline]
            fn sub(self, rhs: Self) -> Result<Self> {
                self.checked_sub(rhs).ok_or(Error::Overflow("subtraction"))
            }
            #[inline]
            fn mul(self, rhs: Self) -> Result<Self> {
                self.checked_mul(rhs).ok_or(Error::Overflow("multiplication"))
            }
            #[inline]
            fn neg(self) -> Result<Self> {
                self.checked_neg().ok_or(Error::Overflow("negation"))
            }
            fn abs_f64(&self) -> f64 {
                (*self as f64).abs()
            }
        }
    };
}

checked_integer!(i64);
checked_integer!(i128);

impl Scalar for Complex64 {
    const KIND: ScalarKind = ScalarKind::Complex;

    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    #[inline]
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    #[inline]
    fn add(self, rhs: Self) -> Result<Self> {
        Ok(self + rhs)
    }
    #[inline]
    fn sub(self, rhs: Self) -> Result<Self> {
        Ok(self - rhs)
    }
    #[inline]
    fn mul(self, rhs: Self) -> Result<Self> {
        Ok(self * rhs)
    }
    #[inline]
    fn neg(self) -> Result<Self> {
        Ok(-self)
    }
    fn abs_f64(&self) -> f64 {
        self.norm()
    }
}

/// Formats a permanent value the way reports print it: integers in full,
/// complex values with 15 significant digits per component.
pub trait FormatValue {
    fn format_value(&self) -> String;
}

impl FormatValue for i128 {
    fn format_value(&self) -> String {
        self.to_string()
    }
}

impl FormatValue for Complex64 {
    fn format_value(&self) -> String {
        let sign = if self.im.is_sign_negative() { '-' } else { '+' };
        format!("{} {} {}i", Sig15(self.re), sign, Sig15(self.im.abs()))
    }
}

struct Sig15(f64);

impl Display for Sig15 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.14e}", self.0)
    }
}
