//! Exact integer arithmetic and complete exponential sums.
//!
//! Everything here is computed over exact rationals-mod-1: a phase `a/c`
//! is reduced as an integer residue and only converted to a complex number
//! by a single `exp` call at the end. That keeps Kloosterman and Ramanujan
//! sums accurate to a few ulps even for moduli near the 10^7 contract cap.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("{a} is not invertible modulo {modulus}")]
    NonInvertible { a: i64, modulus: u64 },
    #[error("modulus must be positive")]
    ZeroModulus,
}

/// A complete exponential sum together with the number of terms that built it.
///
/// `terms` is the length of the defining sum, so `value.norm() <= terms as f64`
/// always holds up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpSumResult {
    pub value: Complex64,
    pub terms: u64,
}

/// e(num/den) = exp(2 pi i num / den), with the fraction reduced exactly first.
pub fn unit_phase(num: i64, den: u64) -> Complex64 {
    debug_assert!(den > 0);
    let d = den as i64;
    let r = num.rem_euclid(d);
    Complex64::cis(TAU * (r as f64) / (d as f64))
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// gcd that accepts signed input; gcd(0, 0) = 0.
pub fn gcd_i(a: i64, b: i64) -> u64 {
    gcd(a.unsigned_abs(), b.unsigned_abs())
}

/// Trial-division factorization, smallest prime first. Fine at desk scale
/// (inputs stay below 10^7 per the module contracts).
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0u32;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    true
}

/// All primes in the half-open interval [lo, hi).
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..hi).filter(|&n| is_prime(n)).collect()
}

pub fn euler_phi(q: u64) -> u64 {
    assert!(q > 0, "euler_phi takes a positive modulus");
    factorize(q)
        .into_iter()
        .fold(1u64, |acc, (p, e)| acc * (p - 1) * p.pow(e - 1))
}

pub fn moebius(n: u64) -> i64 {
    assert!(n > 0);
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn divisor_count(c: u64) -> u64 {
    assert!(c > 0);
    factorize(c)
        .into_iter()
        .fold(1u64, |acc, (_, e)| acc * (e as u64 + 1))
}

/// Inverse of `a` modulo `q` via the extended Euclidean algorithm.
pub fn mod_inverse(a: i64, q: u64) -> Result<u64, ArithError> {
    if q == 0 {
        return Err(ArithError::ZeroModulus);
    }
    if q == 1 {
        return Ok(0);
    }
    let m = q as i64;
    let a_red = a.rem_euclid(m);
    // Invariants: r = s*a + t*q (t not tracked).
    let (mut r0, mut r1) = (m, a_red);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    if r0 != 1 {
        return Err(ArithError::NonInvertible { a, modulus: q });
    }
    Ok(s0.rem_euclid(m) as u64)
}

/// Kloosterman sum S(a, b; c) = sum over x coprime to c of e_c(a x + b xbar).
///
/// The inner phase is an exact residue mod c; each term costs one complex
/// exponential. Contract: c <= 10^7.
pub fn kloosterman_sum(a: i64, b: i64, c: u64) -> ExpSumResult {
    assert!(c > 0 && c <= 10_000_000, "modulus out of contract range");
    if c == 1 {
        // Single term x = 0 with the empty-phase convention e(0) = 1.
        return ExpSumResult {
            value: Complex64::new(1.0, 0.0),
            terms: 1,
        };
    }
    let m = c as i64;
    let ar = a.rem_euclid(m);
    let br = b.rem_euclid(m);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut terms = 0u64;
    for x in 1..c {
        if gcd(x, c) != 1 {
            continue;
        }
        let xinv = mod_inverse(x as i64, c).expect("unit has an inverse") as i64;
        // a*x + b*xbar fits in i128 comfortably (both factors < 10^7).
        let ph = ((ar as i128 * x as i128 + br as i128 * xinv as i128) % m as i128) as i64;
        acc += unit_phase(ph, c);
        terms += 1;
    }
    ExpSumResult { value: acc, terms }
}

/// Weil's bound d(c) * gcd(a,b,c)^{1/2} * c^{1/2} for |S(a,b;c)|.
pub fn weil_bound(a: i64, b: i64, c: u64) -> f64 {
    let m = c as i64;
    let g = gcd(gcd_i(a.rem_euclid(m), b.rem_euclid(m)), c);
    let g = if g == 0 { c } else { g };
    divisor_count(c) as f64 * (g as f64).sqrt() * (c as f64).sqrt()
}

/// Ramanujan sum c_q(n) = sum over a coprime to q of e_q(a n), an exact integer:
/// c_q(n) = mu(q/g) * phi(q) / phi(q/g) with g = gcd(n, q).
pub fn ramanujan_sum(q: u64, n: i64) -> i64 {
    assert!(q > 0);
    let g = gcd(n.unsigned_abs() % q, q);
    let qg = q / g;
    moebius(qg) * (euler_phi(q) / euler_phi(qg)) as i64
}
