//! Real dynamics of f(x) = x² − x − 3 on its Julia set Λ ⊂ [−2, 3]: inverse
//! branches, symbolic coding over {−2, 3} and preimage trees.
//!
//! Λ is a repelling Cantor set, so forward iteration of floats drifts off it
//! after a dozen steps. Codes are therefore read off by locating a point in
//! the nested cylinders B_{ε₀}∘…∘B_{εₙ}([−2, 3]), computed with inverse
//! branches (which contract) in double-double precision.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::field::{q, Q};

pub const SQRT5: f64 = 2.236_067_977_499_79;
/// Right end of I₋₂ and left end of I₃.
pub const GAP: (f64, f64) = ((1.0 - SQRT5) / 2.0, (1.0 + SQRT5) / 2.0);
pub const DEFAULT_ESCAPE: f64 = 3.0 + 1e-9;

pub fn f_eval(x: f64) -> f64 {
    x * x - x - 3.0
}

pub fn f_eval_q(x: &Q) -> Q {
    x * x - x - q(3)
}

fn f_eval_dd(x: TwoFloat) -> TwoFloat {
    x * x - x - TwoFloat::from(3.0)
}

/// (x₋, x₊) with f(x±) = y, x₋ ≤ 1/2 ≤ x₊.
pub fn f_preimages(y: f64) -> Result<(f64, f64)> {
    let disc = 4.0 * y + 13.0;
    if disc < 0.0 {
        return Err(Error::NoRealPreimage(y));
    }
    let s = disc.sqrt();
    Ok(((1.0 - s) / 2.0, (1.0 + s) / 2.0))
}

/// A finite word over {−2, 3}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct JuliaCode(pub Vec<i8>);

impl JuliaCode {
    pub fn new(word: Vec<i8>) -> Result<JuliaCode> {
        if let Some(s) = word.iter().find(|&&s| s != -2 && s != 3) {
            return Err(Error::InvalidArgument(format!("symbol {s} is not -2 or 3")));
        }
        Ok(JuliaCode(word))
    }

    pub fn parse(s: &str) -> Result<JuliaCode> {
        let word = s
            .split(',')
            .map(|t| t.trim().parse::<i8>().map_err(|_| Error::InvalidArgument(format!("bad symbol {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        JuliaCode::new(word)
    }

    /// The code of the i-th point of the depth-n grid: bit j of i picks symbol j.
    pub fn from_bits(bits: u64, len: usize) -> JuliaCode {
        JuliaCode((0..len).map(|j| if bits >> j & 1 == 1 { 3 } else { -2 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shift(&self) -> JuliaCode {
        JuliaCode(self.0.iter().skip(1).copied().collect())
    }
}

impl std::fmt::Display for JuliaCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A point of Λ located by a code, with a double-double representative.
#[derive(Clone, Debug, Serialize)]
pub struct BranchPoint {
    pub value: f64,
    pub value_lo: f64,
    pub branch_word: JuliaCode,
    pub error_bound: f64,
}

impl BranchPoint {
    fn precise(&self) -> TwoFloat {
        TwoFloat::new_add(self.value, self.value_lo)
    }
}

fn branch_dd(sym: i8, y: TwoFloat) -> TwoFloat {
    let disc = TwoFloat::from(4.0) * y + TwoFloat::from(13.0);
    let disc = if disc < TwoFloat::from(0.0) { TwoFloat::from(0.0) } else { disc };
    let s = disc.sqrt();
    let half = TwoFloat::from(0.5);
    if sym == -2 {
        (TwoFloat::from(1.0) - s) * half
    } else {
        (TwoFloat::from(1.0) + s) * half
    }
}

/// Precision floor of the double-double evaluation.
const DD_FLOOR: f64 = 1e-28;

/// The point whose code is `code` followed by 3, 3, 3, …: the image of the
/// fixed point 3 under the inverse branches read from the end of the code.
pub fn code_to_point(code: &JuliaCode, tol: f64) -> Result<BranchPoint> {
    if code.is_empty() {
        return Err(Error::InvalidArgument("empty code".into()));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if tol < DD_FLOOR {
        return Err(Error::NeedsLongerCode(DD_FLOOR));
    }
    let mut x = TwoFloat::from(3.0);
    for &s in code.0.iter().rev() {
        x = branch_dd(s, x);
    }
    Ok(BranchPoint { value: x.hi(), value_lo: x.lo(), branch_word: code.clone(), error_bound: DD_FLOOR })
}

fn cylinder(prefix: &[i8]) -> (TwoFloat, TwoFloat) {
    let mut lo = TwoFloat::from(-2.0);
    let mut hi = TwoFloat::from(3.0);
    for &s in prefix.iter().rev() {
        lo = branch_dd(s, lo);
        hi = branch_dd(s, hi);
    }
    if lo > hi {
        (hi, lo)
    } else {
        (lo, hi)
    }
}

fn distance(x: TwoFloat, (lo, hi): (TwoFloat, TwoFloat)) -> f64 {
    if x < lo {
        f64::from(lo - x)
    } else if x > hi {
        f64::from(x - hi)
    } else {
        0.0
    }
}

fn code_of(x: TwoFloat, n: usize, slack: f64) -> Result<JuliaCode> {
    let mut word: Vec<i8> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = (f64::INFINITY, 0i8);
        for s in [-2i8, 3] {
            word.push(s);
            let d = distance(x, cylinder(&word));
            word.pop();
            if d < best.0 {
                best = (d, s);
            }
        }
        if best.0 > slack {
            return Err(Error::NotInJulia(x.hi()));
        }
        word.push(best.1);
    }
    Ok(JuliaCode(word))
}

/// Code of length n of a float, located to within a few ulps.
pub fn point_to_code(x: f64, n: usize) -> Result<JuliaCode> {
    code_of(TwoFloat::from(x), n, 8.0 * f64::EPSILON * x.abs().max(1.0))
}

/// Code of length n of a located point, using its double-double value.
pub fn branch_point_code(p: &BranchPoint, n: usize) -> Result<JuliaCode> {
    code_of(p.precise(), n, 1e3 * DD_FLOOR)
}

/// Forward image of a located point, carried in double-double.
pub fn f_branch_point(p: &BranchPoint) -> BranchPoint {
    let y = f_eval_dd(p.precise());
    BranchPoint { value: y.hi(), value_lo: y.lo(), branch_word: p.branch_word.shift(), error_bound: 5.0 * p.error_bound }
}

/// True iff x is within rounding slack of the depth-`max_iter` cylinders and
/// never beyond `escape_bound`.
pub fn julia_membership(x: f64, max_iter: usize, escape_bound: f64) -> bool {
    x.abs() <= escape_bound && point_to_code(x, max_iter).is_ok()
}

/// f^{−depth}(y0) sorted increasingly, or the first value with no real
/// preimage together with the last complete level.
pub fn preimage_tree_partial(y0: f64, depth: usize) -> (Vec<f64>, Option<f64>) {
    let mut level = vec![y0];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(2 * level.len());
        for &y in &level {
            match f_preimages(y) {
                Ok((a, b)) => {
                    next.push(a);
                    if b != a {
                        next.push(b);
                    }
                }
                Err(_) => return (level, Some(y)),
            }
        }
        next.sort_by(f64::total_cmp);
        level = next;
    }
    (level, None)
}

pub fn preimage_tree(y0: f64, depth: usize) -> Result<Vec<f64>> {
    match preimage_tree_partial(y0, depth) {
        (v, None) => Ok(v),
        (_, Some(y)) => Err(Error::NoRealPreimage(y)),
    }
}

/// The 2ⁿ points coded by the words of length n (followed by 3, 3, …).
pub fn lambda_samples(n: usize) -> Vec<f64> {
    (0..1u64 << n)
        .map(|b| code_to_point(&JuliaCode::from_bits(b, n), 1e-15).expect("valid code").value)
        .collect()
}

/// Smallest distance from the given points to the poles 1/2, 1 and 3/2.
pub fn pole_distance(points: &[f64]) -> f64 {
    points
        .iter()
        .flat_map(|&x| [0.5, 1.0, 1.5].map(|p| (x - p).abs()))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_and_critical_values() {
        assert_eq!(f_eval(3.0), 3.0);
        assert_eq!(f_eval(-2.0), 3.0);
        assert_eq!(f_eval(0.0), -3.0);
        assert_eq!(f_eval(1.0), -3.0);
        assert_eq!(f_preimages(3.0).unwrap(), (-2.0, 3.0));
        assert_eq!(f_preimages(-3.25).unwrap(), (0.5, 0.5));
        assert!(f_preimages(-3.5).is_err());
    }

    #[test]
    fn coded_points() {
        let p = code_to_point(&JuliaCode(vec![3; 10]), 1e-12).unwrap();
        assert_eq!(p.value, 3.0);
        let p = code_to_point(&JuliaCode(vec![-2, 3, 3]), 1e-12).unwrap();
        assert_eq!(p.value, -2.0);
        let p = code_to_point(&JuliaCode(vec![3, -2, 3, 3]), 1e-12).unwrap();
        assert!((p.value - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn codes_of_floats() {
        assert_eq!(point_to_code(3.0, 5).unwrap().0, vec![3; 5]);
        assert_eq!(point_to_code(-2.0, 4).unwrap().0, vec![-2, 3, 3, 3]);
        assert!(matches!(point_to_code(0.0, 3), Err(Error::NotInJulia(_))));
        assert!(julia_membership(3.0, 40, DEFAULT_ESCAPE));
        assert!(!julia_membership(0.0, 40, DEFAULT_ESCAPE));
        assert!(julia_membership((1.0 + 5f64.sqrt()) / 2.0, 40, DEFAULT_ESCAPE));
    }

    #[test]
    fn first_preimages() {
        let v = preimage_tree(0.0, 1).unwrap();
        assert!((v[0] - (1.0 - 13f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(preimage_tree(0.0, 10).unwrap().len(), 1024);
    }
}
