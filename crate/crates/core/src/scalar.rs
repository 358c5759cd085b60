//! Real scalars of configurable precision.
//!
//! Every numerical routine in the crate is generic over [`Scalar`]. Two
//! implementations are provided: plain `f64` ("double" mode) and
//! [`Extended`], a multiprecision binary float whose mantissa length is
//! fixed when the value is constructed ("extended" mode). Precision is a
//! property of the values, carried by [`Scalar::Ctx`]; there is no global
//! precision setting.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Arithmetic mode selected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    Double,
    Extended,
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecisionMode::Double => f.write_str("double"),
            PrecisionMode::Extended => f.write_str("extended"),
        }
    }
}

impl std::str::FromStr for PrecisionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "double" => Ok(PrecisionMode::Double),
            "extended" => Ok(PrecisionMode::Extended),
            other => Err(format!("unknown precision mode '{other}'")),
        }
    }
}

pub trait Scalar:
    Clone
    + Send
    + Sync
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
{
    /// Construction context: everything needed to create a value of the
    /// right precision from nothing.
    type Ctx: Copy + Send + Sync + fmt::Debug + PartialEq;

    fn ctx(&self) -> Self::Ctx;
    /// Approximate number of significant decimal digits.
    fn digits(ctx: Self::Ctx) -> u32;

    fn from_f64(ctx: Self::Ctx, v: f64) -> Self;
    fn from_i64(ctx: Self::Ctx, v: i64) -> Self;
    fn from_bigint(ctx: Self::Ctx, v: &BigInt) -> Self;
    fn pi(ctx: Self::Ctx) -> Self;

    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn asin(&self) -> Self;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool;

    /// Unit roundoff of the representation.
    fn epsilon(ctx: Self::Ctx) -> f64 {
        10f64.powi(-(Self::digits(ctx) as i32))
    }

    fn zero(ctx: Self::Ctx) -> Self {
        Self::from_i64(ctx, 0)
    }

    fn one(ctx: Self::Ctx) -> Self {
        Self::from_i64(ctx, 1)
    }

    fn from_ratio(ctx: Self::Ctx, r: &BigRational) -> Self {
        Self::from_bigint(ctx, r.numer()) / Self::from_bigint(ctx, r.denom())
    }

    /// Product without consuming either operand.
    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other
    }

    fn recip(&self) -> Self {
        Self::one(self.ctx()) / self
    }

    fn powi(&self, n: u32) -> Self {
        let mut result = Self::one(self.ctx());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result *= base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * &base;
            }
        }
        result
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    type Ctx = ();

    fn ctx(&self) {}

    fn digits(_: ()) -> u32 {
        16
    }

    fn epsilon(_: ()) -> f64 {
        f64::EPSILON
    }

    fn from_f64(_: (), v: f64) -> Self {
        v
    }

    fn from_i64(_: (), v: i64) -> Self {
        v as f64
    }

    fn from_bigint(_: (), v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(_: (), r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn pi(_: ()) -> Self {
        std::f64::consts::PI
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn sin(&self) -> Self {
        f64::sin(*self)
    }

    fn cos(&self) -> Self {
        f64::cos(*self)
    }

    fn tan(&self) -> Self {
        f64::tan(*self)
    }

    fn asin(&self) -> Self {
        f64::asin(*self)
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}

/// Mantissa length, in bits, of an [`Extended`] value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bits(pub usize);

impl Bits {
    /// Smallest word-aligned mantissa holding `digits` decimal digits plus
    /// one guard word.
    pub fn for_digits(digits: u32) -> Bits {
        let needed = (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as usize;
        Bits(needed.div_ceil(64) * 64 + 64)
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Multiprecision real backed by `astro_float::BigFloat`.
#[derive(Clone)]
pub struct Extended {
    v: BigFloat,
    p: usize,
}

impl Extended {
    fn wrap(v: BigFloat, p: usize) -> Self {
        Extended { v, p }
    }

    pub fn with_digits(digits: u32, v: f64) -> Self {
        Self::from_f64(Bits::for_digits(digits), v)
    }

    /// Parses a decimal literal at the given precision.
    pub fn parse(ctx: Bits, s: &str) -> Self {
        let v = with_consts(|cc| BigFloat::parse(s, astro_float::Radix::Dec, ctx.0, RM, cc));
        Self::wrap(v, ctx.0)
    }

    pub fn precision_bits(&self) -> usize {
        self.p
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.v.is_zero() {
            return "0".to_string();
        }
        let s = format!("{}", self.v);
        // BigFloat renders as d.ddddde±x; trim the mantissa.
        match s.split_once('e') {
            Some((mant, exp)) => {
                let keep = digits.max(1) + usize::from(mant.starts_with('-')) + 1;
                let mant = if mant.len() > keep { &mant[..keep] } else { mant };
                format!("{mant}e{exp}")
            }
            None => s,
        }
    }
}

impl fmt::Debug for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Extended({})", self.to_decimal(24))
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(Bits(self.p).decimal_digits() as usize))
    }
}

impl Bits {
    fn decimal_digits(self) -> u32 {
        ((self.0.saturating_sub(64)) as f64 / std::f64::consts::LOG2_10).floor() as u32
    }
}

impl PartialEq for Extended {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.partial_cmp(&other.v)
    }
}

macro_rules! ext_binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign_method:ident, $op:ident) => {
        impl $trait for Extended {
            type Output = Extended;
            fn $method(self, rhs: Extended) -> Extended {
                let p = self.p.max(rhs.p);
                Extended::wrap(self.v.$op(&rhs.v, p, RM), p)
            }
        }

        impl<'a> $trait<&'a Extended> for Extended {
            type Output = Extended;
            fn $method(self, rhs: &'a Extended) -> Extended {
                let p = self.p.max(rhs.p);
                Extended::wrap(self.v.$op(&rhs.v, p, RM), p)
            }
        }

        impl<'a, 'b> $trait<&'b Extended> for &'a Extended {
            type Output = Extended;
            fn $method(self, rhs: &'b Extended) -> Extended {
                let p = self.p.max(rhs.p);
                Extended::wrap(self.v.$op(&rhs.v, p, RM), p)
            }
        }

        impl $assign_trait for Extended {
            fn $assign_method(&mut self, rhs: Extended) {
                let p = self.p.max(rhs.p);
                self.v = self.v.$op(&rhs.v, p, RM);
                self.p = p;
            }
        }

        impl<'a> $assign_trait<&'a Extended> for Extended {
            fn $assign_method(&mut self, rhs: &'a Extended) {
                let p = self.p.max(rhs.p);
                self.v = self.v.$op(&rhs.v, p, RM);
                self.p = p;
            }
        }
    };
}

ext_binop!(Add, add, AddAssign, add_assign, add);
ext_binop!(Sub, sub, SubAssign, sub_assign, sub);
ext_binop!(Mul, mul, MulAssign, mul_assign, mul);

impl Div for Extended {
    type Output = Extended;
    fn div(self, rhs: Extended) -> Extended {
        let p = self.p.max(rhs.p);
        Extended::wrap(self.v.div(&rhs.v, p, RM), p)
    }
}

impl<'a> Div<&'a Extended> for Extended {
    type Output = Extended;
    fn div(self, rhs: &'a Extended) -> Extended {
        let p = self.p.max(rhs.p);
        Extended::wrap(self.v.div(&rhs.v, p, RM), p)
    }
}

impl Neg for Extended {
    type Output = Extended;
    fn neg(self) -> Extended {
        let p = self.p;
        Extended::wrap(-self.v, p)
    }
}

impl Scalar for Extended {
    type Ctx = Bits;

    fn ctx(&self) -> Bits {
        Bits(self.p)
    }

    fn digits(ctx: Bits) -> u32 {
        ctx.decimal_digits()
    }

    fn epsilon(ctx: Bits) -> f64 {
        2f64.powi(-(ctx.0 as i32))
    }

    fn from_f64(ctx: Bits, v: f64) -> Self {
        Self::wrap(BigFloat::from_f64(v, ctx.0), ctx.0)
    }

    fn from_i64(ctx: Bits, v: i64) -> Self {
        Self::wrap(BigFloat::from_i64(v, ctx.0), ctx.0)
    }

    fn from_bigint(ctx: Bits, v: &BigInt) -> Self {
        if let Some(small) = v.to_i128() {
            return Self::wrap(BigFloat::from_i128(small, ctx.0), ctx.0);
        }
        // Horner over base 2^64 digits.
        let (sign, digits) = v.to_u64_digits();
        let base = BigFloat::from_u128(1u128 << 64, ctx.0);
        let mut acc = BigFloat::from_u64(0, ctx.0);
        for d in digits.iter().rev() {
            acc = acc.mul(&base, ctx.0, RM).add(&BigFloat::from_u64(*d, ctx.0), ctx.0, RM);
        }
        if sign == num_bigint::Sign::Minus {
            acc = -acc;
        }
        Self::wrap(acc, ctx.0)
    }

    fn pi(ctx: Bits) -> Self {
        Self::wrap(with_consts(|cc| cc.pi(ctx.0, RM)), ctx.0)
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn sqrt(&self) -> Self {
        Self::wrap(self.v.sqrt(self.p, RM), self.p)
    }

    fn sin(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.sin(self.p, RM, cc)), self.p)
    }

    fn cos(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.cos(self.p, RM, cc)), self.p)
    }

    fn tan(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.tan(self.p, RM, cc)), self.p)
    }

    fn asin(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.asin(self.p, RM, cc)), self.p)
    }

    fn ln(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.ln(self.p, RM, cc)), self.p)
    }

    fn exp(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.exp(self.p, RM, cc)), self.p)
    }

    fn abs(&self) -> Self {
        Self::wrap(self.v.abs(), self.p)
    }

    fn to_f64(&self) -> f64 {
        if self.v.is_nan() {
            return f64::NAN;
        }
        if self.v.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.v.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        match self.v.as_raw_parts() {
            Some((words, _, sign, exponent, _)) => {
                // Value = 0.m * 2^exponent with the most significant word last.
                let top = words.last().copied().unwrap_or(0) as f64;
                let next = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
                let frac = (top + next / 18446744073709551616.0) / 18446744073709551616.0;
                let mag = frac * 2f64.powi(exponent);
                if sign == Sign::Neg {
                    -mag
                } else {
                    mag
                }
            }
            None => 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        !self.v.is_nan() && !self.v.is_inf()
    }

    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }
}

/// Converts an exact rational to `f64`, falling back through scaling when
/// numerator or denominator overflow.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    if r.is_zero() {
        return 0.0;
    }
    let nb = r.numer().abs().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db;
    let scaled = if shift > 0 {
        BigRational::new(r.numer().clone(), r.denom() << (shift as usize))
    } else {
        BigRational::new(r.numer() << ((-shift) as usize), r.denom().clone())
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}
