//! Dense integer polynomials with arbitrary-precision coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Coefficients lowest degree first; no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_i64(&[1])
    }

    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    /// X − r.
    pub fn linear(r: i64) -> Self {
        Self::from_i64(&[-r, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &IntPolynomial) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * inner) + &Self::new(vec![c.clone()]);
        }
        acc
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| {
            acc * x + c.to_string().parse::<f64>().unwrap_or(f64::NAN)
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "coeffs": self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>() })
    }
}

impl Add for &IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = BigInt::zero();
        IntPolynomial::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + rhs.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl Sub for &IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: &IntPolynomial) -> IntPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &IntPolynomial {
    type Output = IntPolynomial;
    fn neg(self) -> IntPolynomial {
        IntPolynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return IntPolynomial::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPolynomial::new(out)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let a = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let show_coeff = !a.is_one() || i == 0;
            if show_coeff {
                write!(f, "{a}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "X")?,
                _ => write!(f, "X^{i}")?,
            }
        }
        Ok(())
    }
}

/// Product of powers of polynomials, kept unexpanded for display.
#[derive(Clone, Debug, Default)]
pub struct Factored {
    pub factors: Vec<(String, IntPolynomial, u64)>,
}

impl Factored {
    pub fn push(&mut self, name: impl Into<String>, p: IntPolynomial, e: u64) {
        if e > 0 {
            self.factors.push((name.into(), p, e));
        }
    }

    pub fn degree(&self) -> usize {
        self.factors.iter().map(|(_, p, e)| p.degree().unwrap_or(0) * *e as usize).sum()
    }

    pub fn expand(&self) -> IntPolynomial {
        self.factors.iter().fold(IntPolynomial::one(), |acc, (_, p, e)| &acc * &p.pow(*e))
    }
}

impl fmt::Display for Factored {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(name, _, e)| if *e == 1 { format!("({name})") } else { format!("({name})^{e}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// f(X) = X² − X − 3.
pub fn f_poly() -> IntPolynomial {
    IntPolynomial::from_i64(&[-3, -1, 1])
}

/// f^p as a polynomial.
pub fn f_iterate(p: u32) -> IntPolynomial {
    let f = f_poly();
    (0..p).fold(IntPolynomial::x(), |acc, _| f.compose(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma0_expansion() {
        let p = &IntPolynomial::linear(3) * &IntPolynomial::linear(-1).pow(3);
        assert_eq!(p, IntPolynomial::from_i64(&[-3, -8, -6, 0, 1]));
        assert_eq!(p.to_string(), "X^4 - 6X^2 - 8X - 3");
    }

    #[test]
    fn f_iterates() {
        assert_eq!(f_iterate(0), IntPolynomial::x());
        assert_eq!(f_iterate(2).degree(), Some(4));
        assert_eq!(f_iterate(2).eval(&BigInt::from(3)), BigInt::from(3));
        assert_eq!(f_iterate(1).eval(&BigInt::from(-2)), BigInt::from(3));
    }
}
