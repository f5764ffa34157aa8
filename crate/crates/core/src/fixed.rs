//! Signed fixed-point reals with 64 fractional bits.
//!
//! A [`FixedReal`] stores `raw / 2^64` in an `i128`, so the integer part has
//! 63 bits of range and the quantization unit is `2^-64`. Addition and
//! subtraction are exact; multiplication by integers is exact while it fits.
//!
//! Scalars are written in configs as small expressions:
//!
//! * decimals: `"1.5"`, `"-0.125"`
//! * fractions: `"3/4"`
//! * named constants: `sqrt2`, `sqrt3`, `sqrt5`, `sqrtN` for any integer `N`,
//!   `phi`, `e`, `pi`
//! * products of the above: `"sqrt2*sqrt3"`, `"-2*pi"`
//!
//! Every expression is evaluated with at least 192 fractional bits of
//! precision and rounded once to the nearest multiple of `2^-64` (ties away
//! from zero). The resulting bit patterns of the named constants are
//!
//! | name    | raw (hex)                  |
//! |---------|----------------------------|
//! | `sqrt2` | `0x1_6a09_e667_f3bc_c909`  |
//! | `sqrt3` | `0x1_bb67_ae85_84ca_a73b`  |
//! | `sqrt5` | `0x2_3c6e_f372_fe94_f82c`  |
//! | `phi`   | `0x1_9e37_79b9_7f4a_7c16`  |
//! | `e`     | `0x2_b7e1_5162_8aed_2a6b`  |
//! | `pi`    | `0x3_243f_6a88_85a3_08d3`  |

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};

pub const FRAC_BITS: u32 = 64;
const ONE_RAW: i128 = 1i128 << 64;

// 70 significant digits; far beyond the 2^-192 working precision.
const E_DIGITS: &str = "2.718281828459045235360287471352662497757247093699959574966967627724077";
const PI_DIGITS: &str = "3.141592653589793238462643383279502884197169399375105820974944592307816";

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FixedReal(i128);

impl FixedReal {
    pub const ZERO: FixedReal = FixedReal(0);
    pub const ONE: FixedReal = FixedReal(ONE_RAW);

    pub const fn from_raw(raw: i128) -> Self {
        FixedReal(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn from_int(n: i64) -> Self {
        FixedReal((n as i128) << 64)
    }

    /// A value in `[0, 1)` given by its 64 fractional bits.
    pub const fn from_frac_bits(bits: u64) -> Self {
        FixedReal(bits as i128)
    }

    /// `⌊x⌋`.
    pub const fn floor(self) -> i128 {
        self.0 >> 64
    }

    /// Fractional part `{x} ∈ [0,1)` as its 64 bits.
    pub const fn frac_bits(self) -> u64 {
        self.0 as u64
    }

    pub fn frac(self) -> FixedReal {
        FixedReal::from_frac_bits(self.frac_bits())
    }

    pub fn is_integer(self) -> bool {
        self.frac_bits() == 0
    }

    pub fn checked_add(self, o: FixedReal) -> Option<FixedReal> {
        self.0.checked_add(o.0).map(FixedReal)
    }

    pub fn checked_sub(self, o: FixedReal) -> Option<FixedReal> {
        self.0.checked_sub(o.0).map(FixedReal)
    }

    pub fn checked_mul_int(self, n: i128) -> Option<FixedReal> {
        self.0.checked_mul(n).map(FixedReal)
    }

    pub fn abs(self) -> FixedReal {
        FixedReal(self.0.abs())
    }

    pub fn signum(self) -> i32 {
        self.0.signum() as i32
    }

    pub fn to_f64(self) -> f64 {
        // Split to keep the 53-bit mantissa from the top of the value.
        (self.floor() as f64) + (self.frac_bits() as f64) / 18446744073709551616.0
    }

    /// Exact value as a rational number.
    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.0), BigInt::one() << 64)
    }

    /// Nearest fixed-point value to a rational (ties away from zero).
    pub fn from_rational(r: &BigRational) -> Result<FixedReal> {
        let scaled = r * BigRational::from_integer(BigInt::one() << 64);
        let rounded = round_half_away(&scaled);
        rounded
            .to_i128()
            .map(FixedReal)
            .ok_or_else(|| LabError::Headroom(format!("{} does not fit 63 integer bits", r)))
    }

    /// Product rounded to the nearest multiple of `2^-64`.
    pub fn mul_round(self, o: FixedReal) -> Result<FixedReal> {
        let prod = BigInt::from(self.0) * BigInt::from(o.0);
        let r = BigRational::new(prod, BigInt::one() << 128);
        FixedReal::from_rational(&r)
    }

    /// Parses a scalar expression (see module docs).
    pub fn parse(src: &str) -> Result<FixedReal> {
        let r = parse_expr(src)?;
        FixedReal::from_rational(&r)
    }

    /// Exact decimal expansion (every multiple of `2^-64` has a finite one).
    pub fn to_decimal_string(self) -> String {
        let neg = self.0 < 0;
        let mag = self.0.unsigned_abs();
        let int = mag >> 64;
        let mut frac = (mag as u64) as u128;
        if frac == 0 {
            return format!("{}{}", if neg { "-" } else { "" }, int);
        }
        let mut digits = String::new();
        while frac != 0 {
            // frac < 2^64, times 10 fits u128
            frac *= 10;
            digits.push(char::from(b'0' + (frac >> 64) as u8));
            frac &= u64::MAX as u128;
        }
        format!("{}{}.{}", if neg { "-" } else { "" }, int, digits)
    }
}

fn round_half_away(r: &BigRational) -> BigInt {
    let (num, den) = (r.numer(), r.denom());
    let (q, rem) = num.abs().div_rem(den);
    let twice = rem * 2u32;
    let mag = if &twice >= den { q + 1u32 } else { q };
    if num.sign() == Sign::Minus {
        -mag
    } else {
        mag
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", int_part, frac_part);
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    Some(BigRational::new(num, den))
}

const WORK_BITS: usize = 192;

fn sqrt_rational(n: u64) -> BigRational {
    let scaled = BigInt::from(n) << (2 * WORK_BITS);
    BigRational::new(scaled.sqrt(), BigInt::one() << WORK_BITS)
}

fn parse_factor(tok: &str) -> Result<BigRational> {
    let t = tok.trim();
    let bad = || LabError::InvalidInput(format!("cannot parse scalar factor `{}`", tok));
    match t {
        "phi" => return Ok((BigRational::one() + sqrt_rational(5)) / BigRational::from_integer(2.into())),
        "e" => return parse_decimal(E_DIGITS).ok_or_else(bad),
        "pi" => return parse_decimal(PI_DIGITS).ok_or_else(bad),
        _ => {}
    }
    if let Some(rest) = t.strip_prefix("sqrt") {
        let n: u64 = rest.parse().map_err(|_| bad())?;
        return Ok(sqrt_rational(n));
    }
    if let Some((a, b)) = t.split_once('/') {
        let a = parse_decimal(a.trim()).ok_or_else(bad)?;
        let b = parse_decimal(b.trim()).ok_or_else(bad)?;
        if b.is_zero() {
            return Err(LabError::InvalidInput(format!("division by zero in `{}`", tok)));
        }
        return Ok(a / b);
    }
    parse_decimal(t).ok_or_else(bad)
}

fn parse_expr(src: &str) -> Result<BigRational> {
    let s = src.trim();
    if s.is_empty() {
        return Err(LabError::InvalidInput("empty scalar".into()));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let mut acc = BigRational::one();
    for f in body.split('*') {
        acc *= parse_factor(f)?;
    }
    Ok(if neg { -acc } else { acc })
}

impl Add for FixedReal {
    type Output = FixedReal;
    fn add(self, o: FixedReal) -> FixedReal {
        self.checked_add(o).expect("FixedReal addition overflow")
    }
}

impl Sub for FixedReal {
    type Output = FixedReal;
    fn sub(self, o: FixedReal) -> FixedReal {
        self.checked_sub(o).expect("FixedReal subtraction overflow")
    }
}

impl Neg for FixedReal {
    type Output = FixedReal;
    fn neg(self) -> FixedReal {
        FixedReal(self.0.checked_neg().expect("FixedReal negation overflow"))
    }
}

impl fmt::Debug for FixedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FixedReal({})", self.to_f64())
    }
}

impl fmt::Display for FixedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl FromStr for FixedReal {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        FixedReal::parse(s)
    }
}

impl Serialize for FixedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal_string())
    }
}

impl<'de> Deserialize<'de> for FixedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Int(i64),
            Float(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Str(s) => FixedReal::parse(&s).map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(FixedReal::from_int(i)),
            // floats are read through their shortest decimal representation
            Repr::Float(x) => FixedReal::parse(&format!("{}", x)).map_err(serde::de::Error::custom),
        }
    }
}

/// Fixed point with 128 fractional bits, used where products of two
/// [`FixedReal`] values must stay exact.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct WideFixed(pub ethnum::I256);

impl WideFixed {
    pub fn zero() -> Self {
        WideFixed(ethnum::I256::ZERO)
    }

    pub fn from_fixed(x: FixedReal) -> Self {
        WideFixed(ethnum::I256::from(x.raw()) << 64)
    }

    pub fn from_int(n: i128) -> Self {
        WideFixed(ethnum::I256::from(n) << 128)
    }

    /// Exact product of two 64-bit-fraction values.
    pub fn product(a: FixedReal, b: FixedReal) -> Self {
        WideFixed(ethnum::I256::from(a.raw()) * ethnum::I256::from(b.raw()))
    }

    pub fn checked_add(self, o: WideFixed) -> Option<WideFixed> {
        self.0.checked_add(o.0).map(WideFixed)
    }

    pub fn checked_sub(self, o: WideFixed) -> Option<WideFixed> {
        self.0.checked_sub(o.0).map(WideFixed)
    }

    pub fn checked_mul_int(self, n: i128) -> Option<WideFixed> {
        self.0.checked_mul(ethnum::I256::from(n)).map(WideFixed)
    }

    pub fn floor(self) -> Option<i128> {
        let f = self.0 >> 128u32;
        i128::try_from(f).ok()
    }

    /// The 128 fractional bits.
    pub fn frac_bits(self) -> u128 {
        self.0.as_u128()
    }

    pub fn to_f64(self) -> f64 {
        let int = (self.0 >> 128u32).as_f64();
        int + (self.frac_bits() as f64) / 2f64.powi(128)
    }
}
