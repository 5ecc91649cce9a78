//! Numeric abstraction shared by the deterministic analysis code.
//!
//! Everything that feeds an [`crate::analysis::Analysis`] report runs either
//! in exact rational arithmetic (`BigRational`, when the instance was given
//! as fractions) or in `f64`. The trait below is the small common surface
//! both modes need; comparison slack is zero in the exact mode.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Float-mode slack for analysis-level equality decisions (mass ties,
/// achiever sets).
pub const ANALYSIS_TOL: f64 = 1e-12;
/// Float-mode slack for LP-derived comparisons (active-set membership,
/// closed-form-vs-oracle gaps).
pub const LP_TOL: f64 = 1e-8;

/// Tolerances used by the float-mode analysis, centralized so tests and the
/// CLI agree on them.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Slack for equality / feasibility decisions in the analysis layer.
    pub analysis: f64,
    /// Slack for LP-oracle comparisons (reduced costs, ratio tests, witnesses).
    pub lp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { analysis: ANALYSIS_TOL, lp: LP_TOL }
    }
}

/// Field-like scalar: `f64` or `BigRational`.
pub trait Scalar:
    Clone
    + PartialOrd
    + PartialEq
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    /// Exact ratio constructor; `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// Comparison slack for LP pivoting and feasibility: zero for exact
    /// types, a small epsilon for floats.
    fn feas_tol() -> Self;
    /// Slack for analysis-level equality decisions (mass ties, achiever
    /// sets); zero for exact types.
    fn analysis_tol() -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    /// `a == b` up to the comparison slack.
    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::feas_tol()
    }
    /// Strictly positive beyond the comparison slack.
    fn is_strictly_positive(&self) -> bool {
        *self > Self::feas_tol()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn feas_tol() -> Self {
        1e-9
    }
    fn analysis_tol() -> Self {
        ANALYSIS_TOL
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num_traits::One>::one()
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn feas_tol() -> Self {
        <BigRational as Zero>::zero()
    }
    fn analysis_tol() -> Self {
        <BigRational as Zero>::zero()
    }
}

/// Parse a rational literal: `"3/8"`, `"-2"`, `"0.375"`.
///
/// Decimal strings are read exactly (`0.375` becomes `3/8`), which is what
/// lets JSON instances opt in to the exact analysis mode.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_part: BigInt = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits = frac_part.len() as u32;
        let frac: BigInt = frac_part.parse().ok()?;
        let den = BigInt::from(10u32).pow(digits);
        let frac = BigRational::new(frac, den);
        let int = BigRational::from_integer(int_part);
        return Some(if negative { int - frac } else { int + frac });
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// Render a rational as the `"num/den"` (or plain integer) form used in JSON
/// reports.
pub fn rational_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
