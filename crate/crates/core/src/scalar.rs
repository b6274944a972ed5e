//! Dual-mode scalars.
//!
//! Every family is tagged with a [`Mode`]: `Exact` computes in
//! arbitrary-precision rationals and admits no rounding anywhere, `Float`
//! computes in `f64` and carries the comparison tolerance used by support
//! and fairness decisions. All decision procedures in this crate run on
//! whichever mode the input declares; the two are never mixed silently by
//! the parsers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::{BigInt, Sign};
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Default relative comparison tolerance for float mode.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Arithmetic mode of a family, with the float comparison tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact,
    Float { eps: f64 },
}

impl Mode {
    /// Float mode with the default tolerance.
    pub fn float_default() -> Mode {
        Mode::Float { eps: DEFAULT_EPS }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Mode::Exact)
    }

    /// Comparison tolerance: 0 in exact mode.
    pub fn eps(self) -> f64 {
        match self {
            Mode::Exact => 0.0,
            Mode::Float { eps } => eps,
        }
    }

    pub fn zero(self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(self, n: i64) -> Scalar {
        match self {
            Mode::Exact => Scalar::Exact(BigRational::from_integer(BigInt::from(n))),
            Mode::Float { .. } => Scalar::Float(n as f64),
        }
    }

    /// `n / d` in this mode. Panics if `d == 0`.
    pub fn from_ratio(self, n: i64, d: i64) -> Scalar {
        assert!(d != 0, "zero denominator");
        match self {
            Mode::Exact => Scalar::Exact(BigRational::new(BigInt::from(n), BigInt::from(d))),
            Mode::Float { .. } => Scalar::Float(n as f64 / d as f64),
        }
    }

    /// Parse a scalar literal: an integer ("3", "-2"), a fraction ("5/4"),
    /// or a decimal ("0.25"). Exact mode converts decimals exactly.
    pub fn parse(self, s: &str) -> Result<Scalar> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Malformed("empty scalar literal".into()));
        }
        match self {
            Mode::Float { .. } => {
                // Accept the same fraction syntax as exact mode.
                if let Some((n, d)) = s.split_once('/') {
                    let n: f64 = n.trim().parse().map_err(|_| bad_scalar(s))?;
                    let d: f64 = d.trim().parse().map_err(|_| bad_scalar(s))?;
                    if d == 0.0 {
                        return Err(bad_scalar(s));
                    }
                    Ok(Scalar::Float(n / d))
                } else {
                    s.parse::<f64>().map(Scalar::Float).map_err(|_| bad_scalar(s))
                }
            }
            Mode::Exact => parse_exact(s).map(Scalar::Exact),
        }
    }
}

fn bad_scalar(s: &str) -> Error {
    Error::Malformed(format!("cannot parse scalar literal {s:?}"))
}

fn parse_exact(s: &str) -> Result<BigRational> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad_scalar(s))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad_scalar(s))?;
        if d.is_zero() {
            return Err(bad_scalar(s));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad_scalar(s))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad_scalar(s));
        }
        let num: BigInt = frac.parse().map_err(|_| bad_scalar(s))?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigRational::new(num, den);
        let int_part = BigRational::from_integer(int);
        return Ok(if neg { int_part - frac_part } else { int_part + frac_part });
    }
    let n: BigInt = s.parse().map_err(|_| bad_scalar(s))?;
    Ok(BigRational::from_integer(n))
}

/// A number in one of the two modes.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::float_default(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Float(x) => *x < 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_positive(),
            Scalar::Float(x) => *x > 0.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.recip()),
            Scalar::Float(x) => Scalar::Float(1.0 / x),
        }
    }

    /// Convert to `f64`. Exact values of any magnitude convert without
    /// intermediate overflow (the naive numerator/denominator route turns
    /// huge/huge into NaN).
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Float(x) => *x,
            Scalar::Exact(r) => ratio_to_f64(r),
        }
    }

    /// Natural log as `f64`; `-inf` at zero. Errors on negative input.
    pub fn ln(&self) -> Result<f64> {
        if self.is_negative() {
            return Err(Error::Malformed("ln of a negative scalar".into()));
        }
        if self.is_zero() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(match self {
            Scalar::Float(x) => x.ln(),
            Scalar::Exact(r) => ratio_ln(r),
        })
    }

    /// Stable dedup key (exact: canonical fraction; float: bit pattern).
    pub fn key(&self) -> String {
        match self {
            Scalar::Exact(r) => format!("{}/{}", r.numer(), r.denom()),
            Scalar::Float(x) => format!("f{:016x}", x.to_bits()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Scalar::Exact(_) => serde_json::Value::String(self.to_string()),
            Scalar::Float(x) => serde_json::json!(x),
        }
    }

    /// Reinterpret in float mode (identity on floats).
    pub fn to_float_scalar(&self) -> Scalar {
        Scalar::Float(self.to_f64())
    }
}

/// `f64` value of a possibly huge `BigInt` sign/magnitude pair, via the top
/// 64 bits and a power-of-two exponent.
fn bigint_ln_parts(x: &BigInt) -> (f64, i64) {
    let bits = x.bits();
    if bits <= 63 {
        return (x.to_f64().unwrap_or(0.0).abs(), 0);
    }
    let shift = bits - 63;
    let top: BigInt = x.abs() >> shift;
    (top.to_f64().unwrap_or(0.0), shift as i64)
}

fn ratio_ln(r: &BigRational) -> f64 {
    let (nm, ns) = bigint_ln_parts(r.numer());
    let (dm, ds) = bigint_ln_parts(r.denom());
    (nm.ln() + ns as f64 * std::f64::consts::LN_2)
        - (dm.ln() + ds as f64 * std::f64::consts::LN_2)
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    if r.numer().bits() <= 900 && r.denom().bits() <= 900 {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        return n / d;
    }
    // Magnitudes beyond f64's direct range: go through the log.
    let ln = ratio_ln(&r.abs());
    sign * ln.exp()
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Float(x) => write!(f, "{x}"),
            Scalar::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.partial_cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    // Mixed-mode arithmetic degrades to float; the parsers keep
                    // families homogeneous, so this only happens on purpose.
                    _ => Scalar::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);
scalar_binop!(Div, div, /);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

/// Exact rational `n/d` (shorthand used all over the tests and presets).
pub fn rat(n: i64, d: i64) -> Scalar {
    Mode::Exact.from_ratio(n, d)
}

/// Exact integer.
pub fn int(n: i64) -> Scalar {
    Mode::Exact.from_i64(n)
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`,
/// best first. Used to recognize rational eigenvalues from float estimates;
/// every candidate is verified exactly before it is trusted.
pub fn rational_candidates(x: f64, max_den: u64, count: usize) -> Vec<BigRational> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    // Convergents of the continued fraction expansion.
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one());
    let mut t = x.abs();
    let sign = if x < 0.0 { Sign::Minus } else { Sign::Plus };
    for _ in 0..40 {
        let a = t.floor();
        if !a.is_finite() || a >= 9e18 {
            break;
        }
        let ab = BigInt::from(a as i128);
        let p2 = &ab * &p0 + &p1;
        let q2 = &ab * &q0 + &q1;
        if q2 > BigInt::from(max_den) {
            break;
        }
        p1 = std::mem::replace(&mut p0, p2);
        q1 = std::mem::replace(&mut q0, q2);
        let num = if sign == Sign::Minus { -&p0 } else { p0.clone() };
        out.push(BigRational::new(num, q0.clone()));
        if out.len() >= count {
            break;
        }
        let frac = t - a;
        if frac < 1e-15 {
            break;
        }
        t = 1.0 / frac;
    }
    out.reverse(); // best approximation first
    out
}
