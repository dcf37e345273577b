//! Exact linear algebra: modular characteristic polynomials with CRT
//! reconstruction, rational kernels by multi-modular reduction and rational
//! reconstruction, and a generic field elimination for small systems.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::field::{Field, Q};
use crate::poly::IntPolynomial;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The `count` largest primes below 2⁶².
pub fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut n = (1u64 << 62) - 1;
    while out.len() < count {
        if is_prime(n) {
            out.push(n);
        }
        n -= 2;
    }
    out
}

fn reduce(x: i64, p: u64) -> u64 {
    x.rem_euclid(p as i64) as u64
}

/// Characteristic polynomial det(X − M) modulo p, lowest degree first.
pub fn char_poly_mod(m: &[Vec<i64>], p: u64) -> Vec<u64> {
    let n = m.len();
    let mut h: Vec<Vec<u64>> = m.iter().map(|r| r.iter().map(|&x| reduce(x, p)).collect()).collect();
    // Reduction to upper Hessenberg form by elementary similarities.
    for j in 0..n.saturating_sub(2) {
        let Some(piv) = (j + 1..n).find(|&i| h[i][j] != 0) else { continue };
        if piv != j + 1 {
            h.swap(piv, j + 1);
            for row in h.iter_mut() {
                row.swap(piv, j + 1);
            }
        }
        let inv = invmod(h[j + 1][j], p);
        for k in j + 2..n {
            if h[k][j] == 0 {
                continue;
            }
            let u = mulmod(h[k][j], inv, p);
            let (top, bottom) = h.split_at_mut(k);
            let src = &top[j + 1];
            let dst = &mut bottom[0];
            for c in 0..n {
                if src[c] != 0 {
                    dst[c] = (dst[c] + p - mulmod(u, src[c], p)) % p;
                }
            }
            for row in h.iter_mut() {
                if row[k] != 0 {
                    row[j + 1] = (row[j + 1] + mulmod(u, row[k], p)) % p;
                }
            }
        }
    }
    // p_{k+1} = (X − h_kk) p_k − Σ_{i<k} h_ik (Π_{j=i+1..k} h_{j,j−1}) p_i.
    let mut polys: Vec<Vec<u64>> = vec![vec![1]];
    for k in 0..n {
        let prev = &polys[k];
        let mut next = vec![0u64; k + 2];
        for (i, &c) in prev.iter().enumerate() {
            next[i + 1] = (next[i + 1] + c) % p;
            next[i] = (next[i] + p - mulmod(h[k][k], c, p)) % p;
        }
        let mut t = 1u64;
        for i in (0..k).rev() {
            t = mulmod(t, h[i + 1][i], p);
            if t == 0 {
                break;
            }
            let coef = mulmod(h[i][k], t, p);
            if coef == 0 {
                continue;
            }
            for (d, &c) in polys[i].iter().enumerate() {
                next[d] = (next[d] + p - mulmod(coef, c, p)) % p;
            }
        }
        polys.push(next);
    }
    polys.pop().unwrap()
}

/// Bits needed for the coefficients of the characteristic polynomial:
/// |c_k| ≤ C(n, k) · Π (row norms), bounded by 2ⁿ · Π max(1, ‖row‖).
pub fn char_poly_bound_bits(m: &[Vec<i64>]) -> u64 {
    let n = m.len() as f64;
    let rows: f64 = m
        .iter()
        .map(|r| {
            let s: f64 = r.iter().map(|&x| (x as f64) * (x as f64)).sum();
            0.5 * s.max(1.0).log2()
        })
        .sum();
    (n + rows).ceil() as u64 + 2
}

/// Combines residues by Garner's incremental CRT and lifts symmetrically.
pub fn crt_symmetric(residues: &[u64], moduli: &[u64]) -> BigInt {
    let mut x = BigInt::zero();
    let mut modulus = BigInt::one();
    for (&r, &p) in residues.iter().zip(moduli) {
        let pb = BigInt::from(p);
        let xm: u64 = (&x % &pb + &pb).mod_floor(&pb).try_into().unwrap();
        let mm: u64 = (&modulus % &pb).try_into().unwrap();
        let t = mulmod((r + p - xm) % p, invmod(mm, p), p);
        x += &modulus * BigInt::from(t);
        modulus *= pb;
    }
    let half = &modulus >> 1;
    if x > half {
        x - modulus
    } else {
        x
    }
}

/// Exact characteristic polynomial of an integer matrix.
pub fn char_poly_exact(m: &[Vec<i64>]) -> IntPolynomial {
    let n = m.len();
    if n == 0 {
        return IntPolynomial::one();
    }
    let bits = char_poly_bound_bits(m);
    let ps = primes((bits / 61 + 1) as usize);
    let residues: Vec<Vec<u64>> = ps.par_iter().map(|&p| char_poly_mod(m, p)).collect();
    let coeffs = (0..=n)
        .map(|d| {
            let r: Vec<u64> = residues.iter().map(|v| v[d]).collect();
            crt_symmetric(&r, &ps)
        })
        .collect();
    IntPolynomial::new(coeffs)
}

/// Reduced row echelon form modulo p: pivot columns and the reduced rows.
pub fn rref_mod(m: &[Vec<i64>], p: u64) -> (Vec<usize>, Vec<Vec<u64>>) {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<u64>> = m.iter().map(|r| r.iter().map(|&x| reduce(x, p)).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, piv);
        let inv = invmod(a[r][c], p);
        for x in a[r].iter_mut() {
            *x = mulmod(*x, inv, p);
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c] == 0 {
                continue;
            }
            let u = row[c];
            for (x, &y) in row.iter_mut().zip(&pivot_row).skip(c) {
                if y != 0 {
                    *x = (*x + p - mulmod(u, y, p)) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    (pivots, a)
}

/// Rank of an integer matrix over ℚ (as the maximum of two modular ranks;
/// a modular rank never exceeds the rational one).
pub fn rank_mod(m: &[Vec<i64>], p: u64) -> usize {
    rref_mod(m, p).0.len()
}

/// Rational number r/s ≡ a (mod M) with |r|, s ≤ √(M/2), if any.
pub fn rational_reconstruct(a: &BigInt, modulus: &BigInt) -> Option<BigRational> {
    let bound: BigInt = (modulus >> 1usize).sqrt();
    let (mut r0, mut r1) = (modulus.clone(), a.mod_floor(modulus));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let qt = &r0 / &r1;
        let r2 = &r0 - &qt * &r1;
        let t2 = &t0 - &qt * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

/// Basis of the rational kernel of an integer matrix, one vector per free
/// column (value 1 there, 0 on the other free columns). The basis is checked
/// exactly; its size equals cols − rank.
pub fn kernel_rational(m: &[Vec<i64>]) -> Vec<Vec<Q>> {
    let cols = m.first().map_or(0, |r| r.len());
    let all_primes = primes(400);
    let mut best: Option<Vec<usize>> = None;
    let mut used: Vec<u64> = Vec::new();
    let mut residues: Vec<Vec<Vec<u64>>> = Vec::new();
    for chunk in all_primes.chunks(4) {
        let results: Vec<(u64, Vec<usize>, Vec<Vec<u64>>)> = chunk
            .par_iter()
            .map(|&p| {
                let (piv, rows) = rref_mod(m, p);
                (p, piv, rows)
            })
            .collect();
        for (p, piv, rows) in results {
            let better = match &best {
                None => true,
                Some(b) => piv.len() > b.len() || (piv.len() == b.len() && piv < *b),
            };
            if better {
                best = Some(piv.clone());
                used.clear();
                residues.clear();
            }
            if best.as_ref() == Some(&piv) {
                used.push(p);
                residues.push(rows);
            }
        }
        let pivots = best.clone().unwrap();
        let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
        if free.is_empty() {
            return Vec::new();
        }
        if let Some(basis) = try_reconstruct(m, &pivots, &free, &used, &residues) {
            return basis;
        }
    }
    panic!("rational kernel reconstruction did not stabilise");
}

fn try_reconstruct(
    m: &[Vec<i64>],
    pivots: &[usize],
    free: &[usize],
    used: &[u64],
    residues: &[Vec<Vec<u64>>],
) -> Option<Vec<Vec<Q>>> {
    let cols = m[0].len();
    let modulus: BigInt = used.iter().fold(BigInt::one(), |acc, &p| acc * BigInt::from(p));
    let mut basis = Vec::with_capacity(free.len());
    for &f in free {
        let mut v = vec![Q::zero(); cols];
        v[f] = Q::one();
        for (i, &pc) in pivots.iter().enumerate() {
            // Entry of the kernel vector is −R[i][f].
            let r: Vec<u64> = residues.iter().map(|rows| rows[i][f]).collect();
            let lifted = crt_symmetric(&r, used);
            let val = rational_reconstruct(&lifted, &modulus)?;
            v[pc] = -val;
        }
        basis.push(v);
    }
    let ok = basis.par_iter().all(|v| {
        m.iter().all(|row| {
            let s: Q = row
                .iter()
                .zip(v)
                .filter(|(&a, x)| a != 0 && !x.is_zero())
                .map(|(&a, x)| x * BigInt::from(a))
                .fold(Q::zero(), |acc, t| acc + t);
            s.is_zero()
        })
    });
    ok.then_some(basis)
}

/// Kernel over a generic exact field by Gauss–Jordan elimination.
pub fn kernel_generic<F: Field>(mut a: Vec<Vec<F>>, cols: usize) -> Vec<Vec<F>> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, piv);
        let inv = F::one() / a[r][c].clone();
        for x in a[r].iter_mut() {
            if !x.is_zero() {
                *x = x.clone() * inv.clone();
            }
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let u = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                if !y.is_zero() {
                    *x = x.clone() - u.clone() * y.clone();
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![F::zero(); cols];
            v[f] = F::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[i][f].clone();
            }
            v
        })
        .collect()
}

/// Solves a square nonsingular system exactly; `None` when singular.
pub fn solve_generic<F: Field>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = a.len();
    for c in 0..n {
        let piv = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(c, piv);
        b.swap(c, piv);
        let inv = F::one() / a[c][c].clone();
        for x in a[c].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        b[c] = b[c].clone() * inv;
        let pivot_row = a[c].clone();
        let pb = b[c].clone();
        for i in 0..n {
            if i == c || a[i][c].is_zero() {
                continue;
            }
            let u = a[i][c].clone();
            for (x, y) in a[i].iter_mut().zip(&pivot_row).skip(c) {
                *x = x.clone() - u.clone() * y.clone();
            }
            b[i] = b[i].clone() - u * pb.clone();
        }
    }
    Some(b)
}

/// Exact characteristic polynomial of a small rational matrix by the
/// Faddeev–LeVerrier recursion.
pub fn char_poly_rational(m: &[Vec<Q>]) -> Vec<Q> {
    let n = m.len();
    let mut coeffs = vec![Q::zero(); n + 1];
    coeffs[n] = Q::one();
    let mut mk: Vec<Vec<Q>> = vec![vec![Q::zero(); n]; n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1} I
        let mut next = vec![vec![Q::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Q::zero();
                for l in 0..n {
                    if !m[i][l].is_zero() && !mk[l][j].is_zero() {
                        s += &m[i][l] * &mk[l][j];
                    }
                }
                next[i][j] = s;
            }
            next[i][i] += &coeffs[n - k + 1];
        }
        mk = next;
        let mut tr = Q::zero();
        for i in 0..n {
            for l in 0..n {
                if !m[i][l].is_zero() && !mk[l][i].is_zero() {
                    tr += &m[i][l] * &mk[l][i];
                }
            }
        }
        coeffs[n - k] = -tr / Q::from_integer(BigInt::from(k as i64));
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::q;

    #[test]
    fn k3_charpoly() {
        let m = vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
        assert_eq!(char_poly_exact(&m), IntPolynomial::from_i64(&[-2, -3, 0, 1]));
    }

    #[test]
    fn faddeev_matches_modular() {
        let m = vec![vec![2, -1, 0, 3], vec![1, 0, 5, 1], vec![0, 4, -2, 1], vec![7, 1, 1, 1]];
        let exact = char_poly_exact(&m);
        let mq: Vec<Vec<Q>> = m.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
        let fl = char_poly_rational(&mq);
        let want: Vec<Q> = exact.coeffs().iter().map(|c| Q::from_integer(c.clone())).collect();
        assert_eq!(fl, want);
    }

    #[test]
    fn reconstruction() {
        let m = BigInt::from(1_000_003i64) * BigInt::from(998_244_353i64);
        let x = BigRational::new(BigInt::from(-7), BigInt::from(12));
        let a = (BigInt::from(-7) * mod_inverse(&BigInt::from(12), &m)).mod_floor(&m);
        assert_eq!(rational_reconstruct(&a, &m), Some(x));
    }

    fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
        let e = a.extended_gcd(m);
        e.x.mod_floor(m)
    }

    #[test]
    fn kernel_of_rank_one() {
        let m = vec![vec![1, 2, 3], vec![2, 4, 6]];
        let k = kernel_rational(&m);
        assert_eq!(k.len(), 2);
        assert_eq!(k[0], vec![q(-2), q(1), q(0)]);
    }
}
