//! Small exact-integer helpers shared by the other modules.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// `floor(sqrt(n))` for `n >= 0`.
pub fn isqrt_big(n: &BigInt) -> BigInt {
    debug_assert!(!n.is_negative());
    n.sqrt()
}

/// `floor(sqrt(n))` on machine integers, exact for the full `u64` range.
pub fn isqrt_u64(n: u64) -> u64 {
    let mut s = (n as f64).sqrt() as u64;
    while s.checked_mul(s).map_or(true, |sq| sq > n) {
        s -= 1;
    }
    while (s + 1).checked_mul(s + 1).is_some_and(|sq| sq <= n) {
        s += 1;
    }
    s
}

/// `floor(sqrt(n))` for `u128`.
pub fn isqrt_u128(n: u128) -> u128 {
    if n < (1u128 << 64) {
        return isqrt_u64(n as u64) as u128;
    }
    n.sqrt()
}

pub fn is_square_big(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let s = isqrt_big(n);
    &s * &s == *n
}

pub fn is_square_u64(n: u64) -> bool {
    let s = isqrt_u64(n);
    s * s == n
}

/// Trial-division squarefree test. Intended for the sizes that appear as
/// field discriminants here, not for cryptographic sizes.
pub fn is_squarefree_u64(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    true
}

pub fn is_squarefree_big(n: &BigInt) -> bool {
    match u64::try_from(n) {
        Ok(v) => is_squarefree_u64(v),
        Err(_) => {
            // Trial division by every k with k^2 <= n is hopeless here; only
            // factors up to 10^6 are checked, and the remainder is rejected if
            // it is a perfect square.
            let mut m = n.clone();
            let mut p = BigInt::from(2);
            let limit = BigInt::from(1_000_000u32);
            while p <= limit && &p * &p <= m {
                if m.is_multiple_of(&p) {
                    m /= &p;
                    if m.is_multiple_of(&p) {
                        return false;
                    }
                }
                p += 1;
            }
            !(m > BigInt::from(1) && is_square_big(&m))
        }
    }
}

pub fn floor_rat(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil_rat(x: &BigRational) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

/// Formats a rational as `p/q` (or `p` when the denominator is one).
pub fn fmt_rational(x: &BigRational) -> String {
    if x.denom() == &BigInt::from(1) {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p/q`, an integer, or a finite decimal like `-0.125` into an exact
/// rational. No floating point is involved.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !int_digits.chars().all(|c| c.is_ascii_digit())
            || (int_digits.is_empty() && frac.is_empty())
        {
            return None;
        }
        let digits = format!("{int_digits}{frac}");
        let mut num: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().ok()?
        };
        if neg {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Some(BigRational::new(num, den));
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}
