//! A floating-point value with an unbounded binary exponent.
//!
//! Hermite functions at large arguments, GOE densities in the far tail and
//! `e^{N x^2 / 2}` all leave the `f64` range long before the quantities built
//! from them do. [`ScaledValue`] stores `m * 2^e` with `|m|` in `[1, 2)` (or
//! `m = 0`) and an `i64` exponent, so products and sums stay representable.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use serde::{Serialize, Serializer};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Copy, PartialEq)]
pub struct ScaledValue {
    mantissa: f64,
    exponent: i64,
}

/// Splits a finite nonzero `f64` into a mantissa in `[1, 2)` and a binary
/// exponent by reading the IEEE bit fields directly.
fn split(v: f64) -> (f64, i64) {
    debug_assert!(v.is_finite() && v != 0.0);
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal: renormalize through a multiplication by 2^64
        let (m, e) = split(v * f64::from_bits(0x43f0_0000_0000_0000));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff_u64 << 52)) | (0x3ff_u64 << 52));
    (m, biased - 1023)
}

/// `2^k` for `k` in the normal exponent range.
fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

impl ScaledValue {
    pub const ZERO: Self = Self {
        mantissa: 0.0,
        exponent: 0,
    };
    pub const ONE: Self = Self {
        mantissa: 1.0,
        exponent: 0,
    };

    /// Panics on NaN or infinite input.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "ScaledValue::from_f64 on non-finite {v}");
        if v == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = split(v);
        Self {
            mantissa: m,
            exponent: e,
        }
    }

    /// `mantissa * 2^exponent` for an arbitrary finite mantissa.
    pub fn from_parts(mantissa: f64, exponent: i64) -> Self {
        let mut v = Self::from_f64(mantissa);
        if v.mantissa != 0.0 {
            v.exponent += exponent;
        }
        v
    }

    /// `exp(x)`, representable far beyond the `f64` range.
    pub fn exp(x: f64) -> Self {
        Self::from_log2(x / LN_2)
    }

    /// `2^t` for real `t`.
    pub fn from_log2(t: f64) -> Self {
        if t == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        assert!(t.is_finite(), "ScaledValue::from_log2 on {t}");
        let k = t.floor();
        Self::from_parts((t - k).exp2(), k as i64)
    }

    pub fn mantissa(self) -> f64 {
        self.mantissa
    }

    pub fn exponent(self) -> i64 {
        self.exponent
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    /// `-1`, `0` or `1`.
    pub fn signum(self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    pub fn abs(self) -> Self {
        Self {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// `log2 |v|`, `-inf` for zero.
    pub fn log2(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.exponent as f64 + self.mantissa.abs().log2()
        }
    }

    /// `ln |v|`, `-inf` for zero.
    pub fn ln(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.exponent as f64 * LN_2 + self.mantissa.abs().ln()
        }
    }

    /// Nearest `f64`, saturating to `+-inf` or flushing to zero.
    pub fn to_f64(self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.exponent > 1023 {
            return self.mantissa.signum() * f64::INFINITY;
        }
        if self.exponent < -1074 {
            return 0.0;
        }
        if self.exponent < -1022 {
            return self.mantissa * pow2(self.exponent + 64) * pow2(-64);
        }
        self.mantissa * pow2(self.exponent)
    }

    /// Multiplies by `2^k` exactly.
    pub fn ldexp(self, k: i64) -> Self {
        if self.is_zero() {
            self
        } else {
            Self {
                mantissa: self.mantissa,
                exponent: self.exponent + k,
            }
        }
    }

    pub fn scale(self, s: f64) -> Self {
        self * Self::from_f64(s)
    }

    pub fn powi(self, n: i32) -> Self {
        let mut acc = Self::ONE;
        let mut base = if n < 0 { Self::ONE / self } else { self };
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Self {
        assert!(self.mantissa >= 0.0, "sqrt of negative ScaledValue");
        if self.is_zero() {
            return self;
        }
        let (m, e) = if self.exponent % 2 == 0 {
            (self.mantissa, self.exponent)
        } else {
            (self.mantissa * 2.0, self.exponent - 1)
        };
        Self::from_parts(m.sqrt(), e / 2)
    }

    /// Exact sum up to the rounding of one `f64` addition.
    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= other.exponent {
            (self, other)
        } else {
            (other, self)
        };
        let gap = big.exponent - small.exponent;
        if gap > 60 {
            return big;
        }
        let s = big.mantissa + small.mantissa * pow2(-gap);
        if s == 0.0 {
            Self::ZERO
        } else {
            Self::from_parts(s, big.exponent)
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(-other)
    }

    pub fn cmp_abs(self, other: Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self
                .exponent
                .cmp(&other.exponent)
                .then(self.mantissa.abs().total_cmp(&other.mantissa.abs())),
        }
    }
}

impl Mul for ScaledValue {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Div for ScaledValue {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "ScaledValue division by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl Neg for ScaledValue {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl From<f64> for ScaledValue {
    fn from(v: f64) -> Self {
        Self::from_f64(v)
    }
}

impl fmt::Debug for ScaledValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

impl fmt::Display for ScaledValue {
    /// Decimal scientific notation, valid beyond the `f64` range.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let l10 = self.log2() * std::f64::consts::LOG10_2;
        let e10 = l10.floor();
        let sign = if self.mantissa < 0.0 { "-" } else { "" };
        write!(f, "{sign}{:.9}e{}", 10f64.powf(l10 - e10), e10 as i64)
    }
}

impl Serialize for ScaledValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_arithmetic() {
        let a = ScaledValue::from_f64(3.0);
        let b = ScaledValue::from_f64(-1.25);
        assert_eq!((a * b).to_f64(), -3.75);
        assert_eq!((a / b).to_f64(), -2.4);
        assert_eq!(a.add(b).to_f64(), 1.75);
        assert_eq!(a.sub(a), ScaledValue::ZERO);
        assert_eq!(ScaledValue::from_f64(2.25).sqrt().to_f64(), 1.5);
        assert_eq!(ScaledValue::from_f64(8.0).sqrt().to_f64(), 8f64.sqrt());
        assert_eq!(ScaledValue::from_f64(3.0).powi(5).to_f64(), 243.0);
    }

    #[test]
    fn subnormals_split() {
        let v = f64::MIN_POSITIVE / 8.0;
        let s = ScaledValue::from_f64(v);
        assert_eq!(s.mantissa(), 1.0);
        assert_eq!(s.exponent(), -1025);
        assert_eq!(s.to_f64(), v);
    }

    #[test]
    fn far_beyond_f64_range() {
        let tiny = ScaledValue::exp(-50_000.0);
        assert_eq!(tiny.to_f64(), 0.0);
        assert!((tiny.ln() + 50_000.0).abs() < 1e-9);
        let back = tiny * ScaledValue::exp(50_000.0);
        assert!((back.to_f64() - 1.0).abs() < 1e-10);
        assert_eq!(
            format!("{}", ScaledValue::from_f64(1234.5)),
            "1.234500000e3"
        );
    }

    proptest! {
        #[test]
        fn log2_round_trip(t in -100_000.0f64..100_000.0) {
            let v = ScaledValue::from_log2(t);
            prop_assert!((v.log2() - t).abs() <= 1e-12 * t.abs().max(1.0));
        }

        #[test]
        fn f64_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(ScaledValue::from_f64(v).to_f64(), v);
        }

        #[test]
        fn mul_matches_f64(a in -1e100f64..1e100, b in -1e100f64..1e100) {
            let p = (ScaledValue::from_f64(a) * ScaledValue::from_f64(b)).to_f64();
            prop_assert!((p - a * b).abs() <= 1e-15 * (a * b).abs());
        }
    }
}
