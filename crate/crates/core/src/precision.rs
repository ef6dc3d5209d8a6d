//! Working-precision arithmetic helpers.
//!
//! Every probability in the engine is an MPFR [`Float`] at a caller-chosen mantissa
//! width. Model parameters arrive as `f64` and are reinterpreted as the decimal they
//! print as (`0.3` means 3/10, not the nearest binary double), so that the expected
//! claim sum can be compared with 2 exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Result, RuinError};

pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const MIN_PRECISION_BITS: u32 = 64;

/// Mantissa width in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Precision(u32);

impl Precision {
    pub fn new(bits: u32) -> Result<Self> {
        if bits < MIN_PRECISION_BITS {
            return Err(RuinError::Parameter(format!(
                "precision must be at least {MIN_PRECISION_BITS} bits, got {bits}"
            )));
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn zero(self) -> Float {
        Float::new(self.0)
    }

    pub fn one(self) -> Float {
        Float::with_val(self.0, 1)
    }

    pub fn float<T>(self, value: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.0, value)
    }

    /// Probability mass below this is invisible next to O(1) quantities.
    pub fn negligible(self) -> Float {
        Float::with_val(self.0, 1) >> (self.0 + 16)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(DEFAULT_PRECISION_BITS)
    }
}

/// The exact rational whose shortest decimal representation matches `x`.
///
/// `decimal_rational(0.3)` is 3/10. Non-finite input is a parameter error.
pub fn decimal_rational(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(RuinError::Parameter(format!("non-finite value {x}")));
    }
    // `{:e}` prints the shortest round-tripping digits, e.g. "1.4e0", "-9e-1".
    let text = format!("{x:e}");
    let (mantissa, exponent) = text
        .split_once('e')
        .expect("LowerExp output always contains an exponent");
    let exponent: i64 = exponent.parse().expect("LowerExp exponent is an integer");
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: Integer = format!("{int_part}{frac_part}")
        .parse()
        .expect("mantissa digits are decimal");
    let scale = exponent - frac_part.len() as i64;
    let ten = Integer::from(10);
    let mut value = if scale >= 0 {
        Rational::from(digits * ten.pow(scale as u32))
    } else {
        Rational::from((digits, ten.pow((-scale) as u32)))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// A parameter as a working-precision float, rounded from its decimal value.
pub fn decimal_float(x: f64, prec: Precision) -> Result<Float> {
    Ok(Float::with_val(prec.bits(), &decimal_rational(x)?))
}

/// A distribution mean: exact when every input is a decimal and the closed form is
/// rational, otherwise a working-precision approximation.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanValue {
    Exact(Rational),
    Approx(Float),
}

impl MeanValue {
    pub fn is_exact(&self) -> bool {
        matches!(self, MeanValue::Exact(_))
    }

    pub fn to_float(&self, prec: Precision) -> Float {
        match self {
            MeanValue::Exact(r) => Float::with_val(prec.bits(), r),
            MeanValue::Approx(f) => Float::with_val(prec.bits(), f),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            MeanValue::Exact(r) => r.to_f64(),
            MeanValue::Approx(f) => f.to_f64(),
        }
    }

    /// Compares with an integer, exactly when possible and otherwise within `tolerance`.
    pub fn compare_with(&self, target: i64, tolerance: &Float) -> Ordering {
        match self {
            MeanValue::Exact(r) => r.cmp(&Rational::from(target)),
            MeanValue::Approx(f) => {
                let diff = Float::with_val(f.prec(), f - target);
                if diff.clone().abs() <= *tolerance {
                    Ordering::Equal
                } else if diff.is_sign_negative() {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }
}

impl Add for &MeanValue {
    type Output = MeanValue;

    fn add(self, rhs: &MeanValue) -> MeanValue {
        match (self, rhs) {
            (MeanValue::Exact(a), MeanValue::Exact(b)) => MeanValue::Exact(Rational::from(a + b)),
            (MeanValue::Exact(a), MeanValue::Approx(b))
            | (MeanValue::Approx(b), MeanValue::Exact(a)) => {
                MeanValue::Approx(Float::with_val(b.prec(), b + a))
            }
            (MeanValue::Approx(a), MeanValue::Approx(b)) => {
                MeanValue::Approx(Float::with_val(a.prec().max(b.prec()), a + b))
            }
        }
    }
}

impl fmt::Display for MeanValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanValue::Exact(r) => write!(f, "{r}"),
            MeanValue::Approx(v) => write!(f, "{}", v.to_f64()),
        }
    }
}
