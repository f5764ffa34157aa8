//! Real and generalized polynomials with exact floor and fractional-part
//! evaluation.
//!
//! A [`RealPolynomial`] has [`FixedReal`] coefficients. Writing `A_i` for the
//! raw 2^64-scaled coefficients, `p(n)·2^64 = Σ A_i n^i` is an integer, which
//! is accumulated in 256-bit signed arithmetic with every step checked. The
//! floor and the fractional bits of `p(n)` then fall out of a shift and a
//! mask, so they are exact with respect to the quantized coefficients.

use ethnum::I256;
use num_bigint::BigInt;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fixed::FixedReal;

pub const DEFAULT_MAX_DEGREE: usize = 8;

/// Windows whose density is summarized by [`frac_density`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if end <= start {
            return Err(LabError::InvalidInput(format!("empty window [{}, {})", start, end)));
        }
        Ok(Window { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn shifted(&self, by: i64) -> Window {
        Window { start: self.start + by, end: self.end + by }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<FixedReal>", into = "Vec<FixedReal>")]
pub struct RealPolynomial {
    coeffs: Vec<FixedReal>,
}

impl TryFrom<Vec<FixedReal>> for RealPolynomial {
    type Error = LabError;
    fn try_from(v: Vec<FixedReal>) -> Result<Self> {
        RealPolynomial::new(v)
    }
}

impl From<RealPolynomial> for Vec<FixedReal> {
    fn from(p: RealPolynomial) -> Self {
        p.coeffs
    }
}

impl RealPolynomial {
    /// Coefficients in increasing degree; trailing zeros are dropped.
    pub fn new(coeffs: Vec<FixedReal>) -> Result<Self> {
        Self::with_max_degree(coeffs, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max_degree(mut coeffs: Vec<FixedReal>, max_degree: usize) -> Result<Self> {
        while coeffs.last() == Some(&FixedReal::ZERO) {
            coeffs.pop();
        }
        if coeffs.len() > max_degree + 1 {
            return Err(LabError::InvalidInput(format!(
                "degree {} exceeds maximum {}",
                coeffs.len() - 1,
                max_degree
            )));
        }
        Ok(RealPolynomial { coeffs })
    }

    pub fn zero() -> Self {
        RealPolynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: FixedReal) -> Self {
        RealPolynomial::new(vec![c]).expect("constant has degree 0")
    }

    /// `c·t^d`.
    pub fn monomial(c: FixedReal, d: usize) -> Result<Self> {
        let mut v = vec![FixedReal::ZERO; d + 1];
        v[d] = c;
        RealPolynomial::new(v)
    }

    /// Parses coefficient expressions in increasing degree.
    pub fn parse(coeffs: &[&str]) -> Result<Self> {
        let v = coeffs.iter().map(|s| FixedReal::parse(s)).collect::<Result<Vec<_>>>()?;
        RealPolynomial::new(v)
    }

    pub fn coeffs(&self) -> &[FixedReal] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FixedReal {
        self.coeffs.get(i).copied().unwrap_or(FixedReal::ZERO)
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn has_integer_coeffs(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    /// `p(n)·2^64` exactly.
    pub fn eval_scaled(&self, n: i128) -> Result<I256> {
        let x = I256::from(n);
        let mut acc = I256::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(x)
                .and_then(|a| a.checked_add(I256::from(c.raw())))
                .ok_or_else(|| LabError::Headroom(format!("p({}) overflows the 256-bit accumulator", n)))?;
        }
        Ok(acc)
    }

    /// `(⌊p(n)⌋, {p(n)})` with the fractional part as 64 bits.
    pub fn eval_split(&self, n: i128) -> Result<(i128, u64)> {
        let acc = self.eval_scaled(n)?;
        let fl = i128::try_from(acc >> 64u32)
            .map_err(|_| LabError::Headroom(format!("⌊p({})⌋ does not fit 127 bits", n)))?;
        Ok((fl, acc.as_u64()))
    }

    pub fn eval_floor(&self, n: i128) -> Result<i128> {
        self.eval_split(n).map(|s| s.0)
    }

    pub fn eval_frac(&self, n: i128) -> Result<FixedReal> {
        self.eval_split(n).map(|s| FixedReal::from_frac_bits(s.1))
    }

    /// Exact `p(n)` when it fits a [`FixedReal`].
    pub fn eval(&self, n: i128) -> Result<FixedReal> {
        let acc = self.eval_scaled(n)?;
        i128::try_from(acc)
            .map(FixedReal::from_raw)
            .map_err(|_| LabError::Headroom(format!("p({}) does not fit a FixedReal", n)))
    }

    pub fn eval_f64(&self, n: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * n + c.to_f64())
    }

    /// Rejects `max_n` when `Σ|A_i|·max_n^i` could reach `2^191`, the point
    /// past which the floor no longer fits 127 bits.
    pub fn check_headroom(&self, max_n: u128) -> Result<()> {
        let mut bound = BigInt::from(0);
        let mut pw = BigInt::one();
        for c in &self.coeffs {
            bound += BigInt::from(c.raw()).abs() * &pw;
            pw *= BigInt::from(max_n);
        }
        if bound >= (BigInt::one() << 191) {
            return Err(LabError::Headroom(format!(
                "degree {:?} polynomial exceeds headroom for |n| ≤ {}",
                self.degree(),
                max_n
            )));
        }
        Ok(())
    }

    /// Largest power of two `2^j` with `check_headroom(2^j)` passing.
    pub fn advised_max_n(&self) -> u128 {
        let mut j = 0u32;
        while j < 127 && self.check_headroom(1u128 << (j + 1)).is_ok() {
            j += 1;
        }
        1u128 << j
    }

    /// `p(t + h)` for integer `h`; exact.
    pub fn shift(&self, h: i64) -> Result<RealPolynomial> {
        let d = self.coeffs.len();
        let mut out = vec![BigInt::from(0); d];
        // binomial expansion: a_i (t+h)^i = Σ_j C(i,j) h^{i-j} a_i t^j
        for (i, c) in self.coeffs.iter().enumerate() {
            let mut binom = BigInt::one();
            for j in (0..=i).rev() {
                // j runs i, i-1, ..., 0 with C(i,j) h^{i-j}
                let k = i - j;
                let hp = num_traits::pow(BigInt::from(h), k);
                out[j] += BigInt::from(c.raw()) * &binom * hp;
                binom = binom * BigInt::from(j) / BigInt::from(k + 1);
            }
        }
        let coeffs = out
            .into_iter()
            .map(|b| {
                i128::try_from(b)
                    .map(FixedReal::from_raw)
                    .map_err(|_| LabError::Headroom(format!("shift by {} overflows", h)))
            })
            .collect::<Result<Vec<_>>>()?;
        RealPolynomial::new(coeffs)
    }

    pub fn sub(&self, o: &RealPolynomial) -> Result<RealPolynomial> {
        let d = self.coeffs.len().max(o.coeffs.len());
        let v = (0..d)
            .map(|i| {
                self.coeff(i)
                    .checked_sub(o.coeff(i))
                    .ok_or_else(|| LabError::Headroom("coefficient difference overflows".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        RealPolynomial::new(v)
    }

    /// Dyadic period of `n ↦ {p(n)}`: `2^(64 − min tz)` over nonconstant
    /// coefficients, where `tz` counts trailing zero fractional bits.
    pub fn frac_period(&self) -> u128 {
        let mut min_tz = 64u32;
        for c in self.coeffs.iter().skip(1) {
            let bits = c.frac_bits();
            if bits != 0 {
                min_tz = min_tz.min(bits.trailing_zeros());
            }
        }
        1u128 << (64 - min_tz)
    }
}

/// Integer polynomial; leaves of generalized polynomials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntPolynomial {
    pub coeffs: Vec<i128>,
}

impl IntPolynomial {
    pub fn new(coeffs: Vec<i128>) -> Self {
        IntPolynomial { coeffs }
    }

    pub fn monomial(d: usize) -> Self {
        let mut c = vec![0; d + 1];
        c[d] = 1;
        IntPolynomial { coeffs: c }
    }

    pub fn eval(&self, n: i128) -> Result<i128> {
        let mut acc: i128 = 0;
        for c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(n)
                .and_then(|a| a.checked_add(*c))
                .ok_or_else(|| LabError::Headroom(format!("integer polynomial overflows at n = {}", n)))?;
        }
        Ok(acc)
    }
}

/// Integer-valued expressions built from integer polynomials with sums,
/// products and floors of real linear combinations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum GeneralizedPolynomial {
    Leaf { poly: IntPolynomial },
    Sum { terms: Vec<GeneralizedPolynomial> },
    Product { factors: Vec<GeneralizedPolynomial> },
    Floor { terms: Vec<(FixedReal, GeneralizedPolynomial)> },
}

impl GeneralizedPolynomial {
    pub fn leaf(coeffs: Vec<i128>) -> Self {
        GeneralizedPolynomial::Leaf { poly: IntPolynomial::new(coeffs) }
    }

    /// `[p(n)]` written as a floor of `Σ a_i · n^i`.
    pub fn floor_of(p: &RealPolynomial) -> Self {
        let terms = p
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != FixedReal::ZERO)
            .map(|(i, c)| (*c, GeneralizedPolynomial::Leaf { poly: IntPolynomial::monomial(i) }))
            .collect();
        GeneralizedPolynomial::Floor { terms }
    }

    pub fn eval(&self, n: i128) -> Result<i128> {
        let ovf = || LabError::Headroom(format!("generalized polynomial overflows at n = {}", n));
        match self {
            GeneralizedPolynomial::Leaf { poly } => poly.eval(n),
            GeneralizedPolynomial::Sum { terms } => {
                terms.iter().try_fold(0i128, |acc, t| acc.checked_add(t.eval(n)?).ok_or_else(ovf))
            }
            GeneralizedPolynomial::Product { factors } => {
                factors.iter().try_fold(1i128, |acc, t| acc.checked_mul(t.eval(n)?).ok_or_else(ovf))
            }
            GeneralizedPolynomial::Floor { terms } => {
                let mut acc = I256::ZERO;
                for (w, g) in terms {
                    let v = I256::from(g.eval(n)?);
                    acc = acc
                        .checked_add(I256::from(w.raw()).checked_mul(v).ok_or_else(ovf)?)
                        .ok_or_else(ovf)?;
                }
                i128::try_from(acc >> 64u32).map_err(|_| ovf())
            }
        }
    }
}

/// Evaluates a generalized polynomial at `n ≥ 1`.
pub fn gp_eval(g: &GeneralizedPolynomial, n: i128) -> Result<i128> {
    if n < 1 {
        return Err(LabError::InvalidInput(format!("generalized polynomials are evaluated at n ≥ 1, got {}", n)));
    }
    g.eval(n)
}

/// `[x + {y}] + [y]`, which equals `[x + y]` for all fixed-point `x, y`.
pub fn floor_split(x: FixedReal, y: FixedReal) -> i128 {
    (x + y.frac()).floor() + y.floor()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracDensityReport {
    pub delta: FixedReal,
    pub window: Window,
    /// Numerator of the reported density.
    pub count: u64,
    /// Denominator of the reported density.
    pub total: u64,
    pub density: f64,
    pub periodic_flag: bool,
    /// Dyadic period of `{p(n)}` when `periodic_flag` is set.
    pub period: Option<u64>,
    /// Count over the requested window itself.
    pub window_count: u64,
    pub window_density: f64,
    /// Max density over the window shifted by 0, W/2, W and 2W.
    pub shifted_sup: f64,
}

/// Period lengths up to this are enumerated exactly.
pub const MAX_EXACT_PERIOD: u128 = 1 << 20;

fn count_top(p: &RealPolynomial, threshold: u64, start: i64, end: i64) -> Result<u64> {
    (start..end)
        .into_par_iter()
        .map(|n| p.eval_split(n as i128).map(|(_, f)| (f >= threshold) as u64))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Counts `n` in the window with `{p(n)} ∈ [1−δ, 1)`.
pub fn frac_density(p: &RealPolynomial, delta: FixedReal, window: Window) -> Result<FracDensityReport> {
    if delta <= FixedReal::ZERO || delta >= FixedReal::ONE {
        return Err(LabError::InvalidInput(format!("delta must lie in (0,1), got {}", delta)));
    }
    if window.is_empty() {
        return Err(LabError::InvalidInput("window must be nonempty".into()));
    }
    let w = window.len() as i64;
    let max_n = window.end.unsigned_abs().max(window.start.unsigned_abs()) as u128 + 2 * w as u128;
    p.check_headroom(max_n)?;
    // {p(n)} ≥ 1 − δ  ⇔  frac bits ≥ 2^64 − raw(δ)
    let threshold = (((1u128 << 64) - delta.raw() as u128) as u64).max(1);
    let window_count = count_top(p, threshold, window.start, window.end)?;
    let window_density = window_count as f64 / w as f64;
    let mut shifted_sup = window_density;
    for s in [w / 2, w, 2 * w] {
        let c = count_top(p, threshold, window.start + s, window.end + s)?;
        shifted_sup = shifted_sup.max(c as f64 / w as f64);
    }
    let period = p.frac_period();
    let periodic_flag = period <= MAX_EXACT_PERIOD;
    let (count, total, period_out) = if periodic_flag {
        let c = count_top(p, threshold, 0, period as i64)?;
        (c, period as u64, Some(period as u64))
    } else {
        (window_count, w as u64, None)
    };
    Ok(FracDensityReport {
        delta,
        window,
        count,
        total,
        density: count as f64 / total as f64,
        periodic_flag,
        period: period_out,
        window_count,
        window_density,
        shifted_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(s: &str) -> FixedReal {
        FixedReal::parse(s).unwrap()
    }

    #[test]
    fn floor_examples() {
        let half = RealPolynomial::parse(&["0", "1/2"]).unwrap();
        assert_eq!(half.eval_floor(3).unwrap(), 1);
        assert_eq!(RealPolynomial::zero().eval_floor(12345).unwrap(), 0);
        let r2 = RealPolynomial::parse(&["0", "sqrt2"]).unwrap();
        assert_eq!(r2.eval_floor(10).unwrap(), 14);
        assert_eq!(r2.eval_floor(-10).unwrap(), -15);
    }

    #[test]
    fn gp_examples() {
        let r2 = RealPolynomial::parse(&["0", "sqrt2"]).unwrap();
        let g = GeneralizedPolynomial::Product {
            factors: vec![GeneralizedPolynomial::floor_of(&r2), GeneralizedPolynomial::leaf(vec![0, 1])],
        };
        assert_eq!(gp_eval(&g, 5).unwrap(), 35);
        assert_eq!(gp_eval(&GeneralizedPolynomial::leaf(vec![0, 0, 1]), 4).unwrap(), 16);
        let n = GeneralizedPolynomial::leaf(vec![0, 1]);
        let half_sum = GeneralizedPolynomial::Floor { terms: vec![(fx("0.5"), n.clone()), (fx("0.5"), n)] };
        assert_eq!(gp_eval(&half_sum, 7).unwrap(), 7);
        assert!(gp_eval(&half_sum, 0).is_err());
    }

    #[test]
    fn rational_density_is_periodic() {
        let half = RealPolynomial::parse(&["0", "1/2"]).unwrap();
        let r = frac_density(&half, fx("0.1"), Window::new(1, 1000).unwrap()).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.periodic_flag);
        assert_eq!(r.period, Some(2));
    }

    #[test]
    fn irrational_density_counts() {
        // direct counts with an 80-digit oracle over [1, 1e5)
        let lin = RealPolynomial::parse(&["0", "sqrt2"]).unwrap();
        let quad = RealPolynomial::parse(&["0", "0", "sqrt2"]).unwrap();
        let w = Window::new(1, 100_000).unwrap();
        let r = frac_density(&lin, fx("0.1"), w).unwrap();
        assert_eq!(r.window_count, 10000);
        assert!(!r.periodic_flag);
        let r = frac_density(&quad, fx("0.05"), w).unwrap();
        assert_eq!(r.window_count, 4930);
    }

    #[test]
    fn headroom_is_enforced() {
        let big = RealPolynomial::parse(&["0", "0", "0", "0", "0", "0", "0", "0", "1000"]).unwrap();
        assert!(big.check_headroom(1 << 30).is_err());
        assert!(big.eval_floor(i64::MAX as i128).is_err());
        assert!(big.check_headroom(1 << 10).is_ok());
        assert!(RealPolynomial::parse(&["1"; 10]).is_err());
    }

    #[test]
    fn shift_matches_pointwise() {
        let p = RealPolynomial::parse(&["0.25", "sqrt2", "-3", "pi"]).unwrap();
        let q = p.shift(7).unwrap();
        for n in -20..20 {
            assert_eq!(q.eval_scaled(n).unwrap(), p.eval_scaled(n + 7).unwrap());
        }
    }

    #[test]
    fn floor_identity_examples() {
        let x = fx("-2.75");
        let y = fx("1.5");
        assert_eq!(floor_split(x, y), (x + y).floor());
    }
}
