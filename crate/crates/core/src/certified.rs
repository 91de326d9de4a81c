//! Certified real arithmetic on dyadic enclosures.
//!
//! Every real quantity is carried as a closed interval `[lo, hi]` whose
//! endpoints are dyadic rationals `m * 2^e` with at most `prec` mantissa bits.
//! Each operation rounds `lo` toward minus infinity and `hi` toward plus
//! infinity, so the exact real result always lies in the interval. Constants
//! (pi, e, ln) are enclosed through convergent series with explicit tail
//! bounds. Exponents are unbounded, so there is no overflow.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;

/// An exact dyadic rational `mant * 2^exp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    Down,
    Up,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mant, exp };
        d.normalize();
        d
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Dyadic::new(n.into(), 0)
    }

    /// Exact conversion; every finite `f64` is dyadic.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        Some(Dyadic::new(BigInt::from(m) * sign, e))
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz;
            self.exp += tz as i64;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as usize)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    fn add_exact(&self, other: &Dyadic) -> Dyadic {
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        Dyadic::new(a + b, e)
    }

    fn mul_exact(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    fn neg(&self) -> Dyadic {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    fn round(&self, prec: u32, dir: Dir) -> Dyadic {
        let bits = self.mant.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let shift = bits - prec as u64;
        let floor = &self.mant >> shift as usize;
        let exact = (&floor << shift as usize) == self.mant;
        let mant = match dir {
            Dir::Down => floor,
            Dir::Up if exact => floor,
            Dir::Up => floor + 1,
        };
        Dyadic::new(mant, self.exp + shift as i64)
    }

    /// `floor(self)` as an integer.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as usize
        } else {
            &self.mant >> (-self.exp) as usize
        }
    }

    /// `ceil(self)` as an integer.
    pub fn ceil(&self) -> BigInt {
        -self.neg().floor()
    }

    /// Nearest `f64` in the requested direction (may be infinite upward).
    pub fn to_f64_up(&self) -> f64 {
        self.to_f64_dir(Dir::Up)
    }

    pub fn to_f64_down(&self) -> f64 {
        self.to_f64_dir(Dir::Down)
    }

    fn to_f64_dir(&self, dir: Dir) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53, dir);
        let mut v = r.mant.to_f64().expect("53-bit mantissa fits f64");
        let mut e = r.exp;
        // Scale in steps that stay exact until overflow or underflow.
        while e > 0 {
            let step = e.min(1000);
            v *= 2f64.powi(step as i32);
            e -= step;
        }
        while e < 0 {
            let step = (-e).min(1000);
            v /= 2f64.powi(step as i32);
            e += step;
        }
        match dir {
            Dir::Up if v.is_infinite() && v < 0.0 => f64::MIN,
            Dir::Down if v.is_infinite() && v > 0.0 => f64::MAX,
            Dir::Up if v == 0.0 && self.is_positive() => f64::from_bits(1),
            Dir::Down if v == 0.0 && self.is_negative() => -f64::from_bits(1),
            _ => v,
        }
    }

    /// Decimal rendering with `digits` significant digits, rounded in the
    /// requested direction so the printed value is still a valid bound.
    pub fn to_decimal(&self, digits: usize, round_up: bool) -> String {
        decimal_directed(&self.to_rational(), digits, round_up)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.add_exact(&other.neg());
        d.mant.sign().cmp(&Sign::NoSign)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20, false))
    }
}

/// Renders a rational in scientific-free decimal with `digits` significant
/// digits, rounded toward +inf (`round_up`) or -inf.
pub fn decimal_directed(x: &BigRational, digits: usize, round_up: bool) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let ax = x.abs();
    // Find k with 10^(k-1) <= |x| < 10^k.
    let ten = BigInt::from(10);
    let mut k: i64 = (ax.numer().bits() as i64 - ax.denom().bits() as i64) * 30103 / 100000;
    loop {
        let lo = pow10_rat(k - 1);
        let hi = pow10_rat(k);
        if ax < lo {
            k -= 1;
        } else if ax >= hi {
            k += 1;
        } else {
            break;
        }
    }
    let scale = digits as i64 - k;
    let scaled = &ax * pow10_rat(scale);
    // Round magnitude away from or toward zero depending on sign and direction.
    let away = round_up != neg;
    let mag = if away {
        -((-scaled.numer()).div_floor(scaled.denom()))
    } else {
        scaled.numer().div_floor(scaled.denom())
    };
    let s = mag.to_string();
    let body = if scale <= 0 {
        let zeros = "0".repeat((-scale) as usize);
        format!("{s}{zeros}")
    } else {
        let scale = scale as usize;
        let padded = if s.len() <= scale {
            format!("{}{}", "0".repeat(scale - s.len() + 1), s)
        } else {
            s
        };
        let (int, frac) = padded.split_at(padded.len() - scale);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    };
    let _ = &ten;
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn pow10_rat(k: i64) -> BigRational {
    let p = num_traits::pow(BigInt::from(10), k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

fn rational_round(x: &BigRational, prec: u32, dir: Dir) -> Dyadic {
    if x.is_zero() {
        return Dyadic::zero();
    }
    let n = x.numer();
    let d = x.denom();
    // Choose k so that n * 2^k / d carries at least prec + 2 bits.
    let k = prec as i64 + 2 + d.bits() as i64 - n.bits() as i64;
    let (num, den) = if k >= 0 {
        (n << k as usize, d.clone())
    } else {
        (n.clone(), d << (-k) as usize)
    };
    let (q, r) = num.div_mod_floor(&den);
    let q = match dir {
        Dir::Up if !r.is_zero() => q + 1,
        _ => q,
    };
    Dyadic::new(q, -k).round(prec, dir)
}

fn div_round(a: &Dyadic, b: &Dyadic, prec: u32, dir: Dir) -> Dyadic {
    let q = a.to_rational() / b.to_rational();
    rational_round(&q, prec, dir)
}

fn sqrt_round(a: &Dyadic, prec: u32, dir: Dir) -> Dyadic {
    debug_assert!(!a.is_negative());
    if a.is_zero() {
        return Dyadic::zero();
    }
    let want = 2 * prec as i64 + 4;
    let mut t = (want - a.mant.bits() as i64).max(0);
    if (a.exp - t).rem_euclid(2) != 0 {
        t += 1;
    }
    let m = &a.mant << t as usize;
    let e = a.exp - t;
    let s = crate::arith::isqrt_big(&m);
    let s = match dir {
        Dir::Up if &s * &s != m => s + 1,
        _ => s,
    };
    Dyadic::new(s, e / 2).round(prec, dir)
}

/// A closed interval with dyadic endpoints guaranteed to contain the exact
/// real it stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Dyadic,
    hi: Dyadic,
    prec: u32,
}

impl Interval {
    pub fn exact(d: Dyadic, prec: u32) -> Self {
        Interval {
            lo: d.round(prec, Dir::Down),
            hi: d.round(prec, Dir::Up),
            prec,
        }
    }

    pub fn from_int(n: impl Into<BigInt>, prec: u32) -> Self {
        Interval::exact(Dyadic::from_int(n), prec)
    }

    pub fn from_rational(x: &BigRational, prec: u32) -> Self {
        Interval {
            lo: rational_round(x, prec, Dir::Down),
            hi: rational_round(x, prec, Dir::Up),
            prec,
        }
    }

    pub fn from_ratio(p: i64, q: i64, prec: u32) -> Self {
        Interval::from_rational(&BigRational::new(p.into(), q.into()), prec)
    }

    /// Builds an interval from explicit endpoints (`lo <= hi` required).
    pub fn from_bounds(lo: Dyadic, hi: Dyadic, prec: u32) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval {
            lo: lo.round(prec, Dir::Down),
            hi: hi.round(prec, Dir::Up),
            prec,
        }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    fn p(&self, other: &Interval) -> u32 {
        self.prec.max(other.prec)
    }

    pub fn add(&self, other: &Interval) -> Interval {
        let prec = self.p(other);
        Interval {
            lo: self.lo.add_exact(&other.lo).round(prec, Dir::Down),
            hi: self.hi.add_exact(&other.hi).round(prec, Dir::Up),
            prec,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let prec = self.p(other);
        let prods = [
            self.lo.mul_exact(&other.lo),
            self.lo.mul_exact(&other.hi),
            self.hi.mul_exact(&other.lo),
            self.hi.mul_exact(&other.hi),
        ];
        let lo = prods.iter().min().expect("nonempty").round(prec, Dir::Down);
        let hi = prods.iter().max().expect("nonempty").round(prec, Dir::Up);
        Interval { lo, hi, prec }
    }

    pub fn div(&self, other: &Interval) -> Result<Interval> {
        if other.contains_zero() {
            return Err(Error::Domain(
                "division by an interval containing zero".into(),
            ));
        }
        let prec = self.p(other);
        let mut lows = Vec::with_capacity(4);
        let mut highs = Vec::with_capacity(4);
        for a in [&self.lo, &self.hi] {
            for b in [&other.lo, &other.hi] {
                lows.push(div_round(a, b, prec, Dir::Down));
                highs.push(div_round(a, b, prec, Dir::Up));
            }
        }
        Ok(Interval {
            lo: lows.into_iter().min().expect("nonempty"),
            hi: highs.into_iter().max().expect("nonempty"),
            prec,
        })
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.hi.is_negative() {
            return Err(Error::Domain("square root of a negative interval".into()));
        }
        let lo = if self.lo.is_negative() {
            Dyadic::zero()
        } else {
            sqrt_round(&self.lo, self.prec, Dir::Down)
        };
        Ok(Interval {
            lo,
            hi: sqrt_round(&self.hi, self.prec, Dir::Up),
            prec: self.prec,
        })
    }

    /// Integer power by repeated squaring.
    pub fn powu(&self, mut n: u64) -> Interval {
        let mut base = self.clone();
        let mut acc = Interval::from_int(1, self.prec);
        let nonneg = !self.lo.is_negative();
        if !nonneg {
            // Sign-sensitive; plain repeated multiplication is still sound.
            for _ in 0..n {
                acc = acc.mul(self);
            }
            return acc;
        }
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn scale_rational(&self, q: &BigRational) -> Interval {
        self.mul(&Interval::from_rational(q, self.prec))
    }

    /// Hull of two intervals.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.p(other),
        }
    }

    /// Returns `Some(true)` if every point is `< x`, `Some(false)` if every
    /// point is `>= x`, and `None` if the interval straddles `x`.
    pub fn cmp_lt(&self, x: &Dyadic) -> Option<bool> {
        if &self.hi < x {
            Some(true)
        } else if &self.lo >= x {
            Some(false)
        } else {
            None
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            self.lo.to_decimal(20, false),
            self.hi.to_decimal(20, true)
        )
    }
}

fn cache() -> &'static Mutex<HashMap<(&'static str, u32), Interval>> {
    static CACHE: OnceLock<Mutex<HashMap<(&'static str, u32), Interval>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(name: &'static str, prec: u32, f: impl FnOnce() -> Interval) -> Interval {
    if let Some(v) = cache()
        .lock()
        .expect("constant cache poisoned")
        .get(&(name, prec))
    {
        return v.clone();
    }
    let v = f();
    cache()
        .lock()
        .expect("constant cache poisoned")
        .insert((name, prec), v.clone());
    v
}

/// Encloses `atan(1/k)` for an integer `k >= 2` by its alternating series.
fn atan_inv(k: u64, prec: u32) -> Interval {
    let k = BigInt::from(k);
    let k2 = &k * &k;
    let mut sum = BigRational::zero();
    let mut pow = k.clone(); // k^(2j+1)
    let mut j: u64 = 0;
    let target = BigInt::one() << (prec as usize + 8);
    loop {
        let denom = &pow * BigInt::from(2 * j + 1);
        let term = BigRational::new(BigInt::one(), denom.clone());
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        pow *= &k2;
        j += 1;
        let next_denom = &pow * BigInt::from(2 * j + 1);
        if next_denom > target {
            let tail = BigRational::new(BigInt::one(), next_denom);
            let lo = rational_round(&(&sum - &tail), prec, Dir::Down);
            let hi = rational_round(&(&sum + &tail), prec, Dir::Up);
            return Interval { lo, hi, prec };
        }
    }
}

/// Enclosure of pi (Machin's formula).
pub fn pi(prec: u32) -> Interval {
    cached("pi", prec, || {
        let w = prec + 16;
        let a = atan_inv(5, w).mul(&Interval::from_int(16, w));
        let b = atan_inv(239, w).mul(&Interval::from_int(4, w));
        let r = a.sub(&b);
        Interval::from_bounds(r.lo, r.hi, prec)
    })
}

/// Enclosure of e.
pub fn e(prec: u32) -> Interval {
    cached("e", prec, || {
        let mut sum = BigRational::zero();
        let mut fact = BigInt::one();
        let mut k: u64 = 0;
        let target = BigInt::one() << (prec as usize + 8);
        loop {
            if k > 0 {
                fact *= BigInt::from(k);
            }
            sum += BigRational::new(BigInt::one(), fact.clone());
            // Remainder after term k is below 2/(k+1)!.
            let next = &fact * BigInt::from(k + 1);
            if next > target {
                let tail = BigRational::new(BigInt::from(2), next);
                return Interval {
                    lo: rational_round(&sum, prec, Dir::Down),
                    hi: rational_round(&(&sum + tail), prec, Dir::Up),
                    prec,
                };
            }
            k += 1;
        }
    })
}

/// Enclosure of `e^n` for a nonnegative integer `n`.
pub fn exp_int(n: u64, prec: u32) -> Interval {
    let w = prec + 2 * (64 - n.leading_zeros()) + 16;
    let r = e(w).powu(n);
    Interval::from_bounds(r.lo, r.hi, prec)
}

/// Encloses `atanh(z)` for rational `0 <= z <= 1/3`.
fn atanh_small(z: &BigRational, prec: u32) -> Interval {
    debug_assert!(!z.is_negative() && z <= &BigRational::new(1.into(), 3.into()));
    if z.is_zero() {
        return Interval::from_int(0, prec);
    }
    let z2 = z * z;
    let mut pow = z.clone(); // z^(2j+1)
    let mut sum = BigRational::zero();
    let mut j: u64 = 0;
    let eps = BigRational::new(BigInt::one(), BigInt::one() << (prec as usize + 8));
    let one_minus = BigRational::one() - &z2;
    loop {
        sum += &pow / BigRational::from_integer(BigInt::from(2 * j + 1));
        pow *= &z2;
        j += 1;
        // Tail is at most z^(2j+1) / ((2j+1)(1 - z^2)).
        let tail = &pow / (BigRational::from_integer(BigInt::from(2 * j + 1)) * &one_minus);
        if tail < eps {
            return Interval {
                lo: rational_round(&sum, prec, Dir::Down),
                hi: rational_round(&(&sum + tail), prec, Dir::Up),
                prec,
            };
        }
        // Keep the exact rationals small by rounding the running power.
        if pow.denom().bits() > 4 * prec as u64 {
            let hi = rational_round(&pow, 2 * prec, Dir::Up).to_rational();
            pow = hi;
        }
    }
}

/// Enclosure of ln 2.
pub fn ln2(prec: u32) -> Interval {
    cached("ln2", prec, || {
        let w = prec + 8;
        let r =
            atanh_small(&BigRational::new(1.into(), 3.into()), w).mul(&Interval::from_int(2, w));
        Interval::from_bounds(r.lo, r.hi, prec)
    })
}

/// Enclosure of the natural logarithm of a positive rational.
pub fn ln(x: &BigRational, prec: u32) -> Result<Interval> {
    if !x.is_positive() {
        return Err(Error::Domain("logarithm of a non-positive number".into()));
    }
    if x < &BigRational::one() {
        return Ok(ln(&x.recip(), prec)?.neg());
    }
    let w = prec + 16;
    // x = 2^k * y with 1 <= y < 2.
    let mut k = x.numer().bits() as i64 - x.denom().bits() as i64;
    let two_k = |k: i64| -> BigRational {
        if k >= 0 {
            BigRational::from_integer(BigInt::one() << k as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-k) as usize)
        }
    };
    let mut y = x / two_k(k);
    while y >= BigRational::from_integer(2.into()) {
        k += 1;
        y = x / two_k(k);
    }
    while y < BigRational::one() {
        k -= 1;
        y = x / two_k(k);
    }
    let z = (&y - BigRational::one()) / (&y + BigRational::one());
    let ln_y = atanh_small(&z, w).mul(&Interval::from_int(2, w));
    let r = ln2(w).mul(&Interval::from_int(k, w)).add(&ln_y);
    Ok(Interval::from_bounds(r.lo, r.hi, prec))
}

/// A certified real bound: an enclosure of the exact value computed with
/// directed rounding. The reported [`BoundValue::value`] is the upper end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundValue {
    enclosure: Interval,
}

impl BoundValue {
    pub fn new(enclosure: Interval) -> Self {
        BoundValue { enclosure }
    }

    pub fn exact_int(n: impl Into<BigInt>, prec: u32) -> Self {
        BoundValue::new(Interval::from_int(n, prec))
    }

    /// Upper end of the enclosure: a certified upper bound.
    pub fn value(&self) -> &Dyadic {
        self.enclosure.hi()
    }

    /// Lower end of the enclosure: a certified lower bound.
    pub fn lower(&self) -> &Dyadic {
        self.enclosure.lo()
    }

    pub fn enclosure(&self) -> &Interval {
        &self.enclosure
    }

    pub fn precision_bits(&self) -> u32 {
        self.enclosure.precision()
    }

    pub fn to_f64_up(&self) -> f64 {
        self.value().to_f64_up()
    }

    /// True when the exact value is certainly `>= n`.
    pub fn certainly_ge(&self, n: &BigInt) -> bool {
        self.lower() >= &Dyadic::from_int(n.clone())
    }

    /// True when the exact value is certainly `> n`.
    pub fn certainly_gt(&self, n: &BigInt) -> bool {
        self.lower() > &Dyadic::from_int(n.clone())
    }

    /// True when the exact value is certainly `<= n`.
    pub fn certainly_le(&self, n: &BigInt) -> bool {
        self.value() <= &Dyadic::from_int(n.clone())
    }

    /// Upward-rounded decimal rendering of the upper bound.
    pub fn to_decimal_up(&self, digits: usize) -> String {
        self.value().to_decimal(digits, true)
    }

    pub fn halve(&self) -> BoundValue {
        let p = self.precision_bits();
        BoundValue::new(self.enclosure.mul(&Interval::from_ratio(1, 2, p)))
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_up(30))
    }
}

impl Serialize for BoundValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal_up(40))
    }
}
