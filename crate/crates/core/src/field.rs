//! Exact scalar fields: ℚ and the quadratic fields ℚ(√d).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact field operations used by the generic linear algebra.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_q(x: Q) -> Self;
    fn from_i64(n: i64) -> Self {
        Self::from_q(q(n))
    }
}

impl Field for Q {
    fn from_q(x: Q) -> Self {
        x
    }
}

/// a + b√d with d square-free. `d = 0` marks a rational whose field is not
/// yet fixed; it adopts the field of the first surd it meets.
#[derive(Clone, Debug)]
pub struct QuadraticScalar {
    pub a: Q,
    pub b: Q,
    pub d: i64,
}

impl QuadraticScalar {
    pub fn new(a: Q, b: Q, d: i64) -> Self {
        assert!(d != 1 && is_square_free(d), "d must be square-free and not 1");
        QuadraticScalar { a, b, d }
    }

    pub fn rational(a: Q) -> Self {
        QuadraticScalar { a, b: Q::zero(), d: 0 }
    }

    /// (u + v√d)/2 style helper: (a_num + b_num√d)/den.
    pub fn from_ints(a: i64, b: i64, den: i64, d: i64) -> Self {
        Self::new(qf(a, den), qf(b, den), d)
    }

    pub fn conj(&self) -> Self {
        QuadraticScalar { a: self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    /// a² − d b².
    pub fn norm(&self) -> Q {
        &self.a * &self.a - q(self.d) * &self.b * &self.b
    }

    pub fn to_f64(&self) -> f64 {
        q_to_f64(&self.a) + q_to_f64(&self.b) * (self.d as f64).sqrt()
    }

    fn field(&self, other: &Self) -> i64 {
        match (self.d, other.d) {
            (0, d) | (d, 0) => d,
            (d, e) if d == e => d,
            (d, e) => {
                if self.b.is_zero() {
                    e
                } else if other.b.is_zero() {
                    d
                } else {
                    panic!("mixing ℚ(√{d}) and ℚ(√{e})")
                }
            }
        }
    }
}

fn is_square_free(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let n = d.unsigned_abs();
    let mut k = 2u64;
    while k * k <= n {
        if n % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

impl PartialEq for QuadraticScalar {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && (self.b.is_zero() || self.d == other.d)
    }
}

impl fmt::Display for QuadraticScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let sign = if self.b.is_negative() { "-" } else { "+" };
        write!(f, "{} {} {}√{}", self.a, sign, self.b.abs(), self.d)
    }
}

impl Add for QuadraticScalar {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let d = self.field(&o);
        QuadraticScalar { a: self.a + o.a, b: self.b + o.b, d }
    }
}

impl Sub for QuadraticScalar {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let d = self.field(&o);
        QuadraticScalar { a: self.a - o.a, b: self.b - o.b, d }
    }
}

impl Mul for QuadraticScalar {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let d = self.field(&o);
        let a = &self.a * &o.a + q(d) * &self.b * &o.b;
        let b = &self.a * &o.b + &self.b * &o.a;
        QuadraticScalar { a, b, d }
    }
}

impl Div for QuadraticScalar {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let n = o.norm();
        assert!(!n.is_zero(), "division by zero in ℚ(√{})", o.d);
        let num = self * o.conj();
        QuadraticScalar { a: num.a / n.clone(), b: num.b / n, d: num.d }
    }
}

impl Neg for QuadraticScalar {
    type Output = Self;
    fn neg(self) -> Self {
        QuadraticScalar { a: -self.a, b: -self.b, d: self.d }
    }
}

impl Zero for QuadraticScalar {
    fn zero() -> Self {
        Self::rational(Q::zero())
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl One for QuadraticScalar {
    fn one() -> Self {
        Self::rational(Q::one())
    }
}

impl Field for QuadraticScalar {
    fn from_q(x: Q) -> Self {
        Self::rational(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_roots() {
        // x = (1 + √13)/2 solves x² − x − 3 = 0.
        let x = QuadraticScalar::from_ints(1, 1, 2, 13);
        let f = x.clone() * x.clone() - x - QuadraticScalar::from_i64(3);
        assert!(f.is_zero());
    }

    #[test]
    fn inverse() {
        let x = QuadraticScalar::from_ints(3, 2, 1, 5);
        let y = QuadraticScalar::one() / x.clone();
        assert_eq!(x * y, QuadraticScalar::one());
    }
}
