//! Fractional parts of `f_D = sqrt D` and `f_D = (1 + sqrt D)/2`: exact
//! interval counts, discrepancy, and the explicit bounds controlling it.
//!
//! Counts are exact. For `m = isqrt(D)` and `delta = sqrt D - m`, the
//! condition `delta >= alpha` is `D >= (m + alpha)^2`, so each block
//! `m^2 <= D < (m+1)^2` contributes a contiguous range of `D` computed with
//! rational squaring. Exponential sums are evaluated in `f64` from an exact
//! integer reduction of the phase, accumulated exactly in fixed point, and
//! reported with an explicit error radius.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{ceil_rat, floor_rat, isqrt_u64};
use crate::certified::{pi, BoundValue, Dyadic, Interval};
use crate::error::{Error, Result};

/// Which sequence `f_D` is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    /// `f_D = sqrt D`.
    Sqrt,
    /// `f_D = (1 + sqrt D)/2`.
    Half,
}

/// An endpoint of an interval in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Closed(BigRational),
    Open(BigRational),
}

impl Endpoint {
    fn value(&self) -> &BigRational {
        match self {
            Endpoint::Closed(v) | Endpoint::Open(v) => v,
        }
    }
}

/// Number of `D` in `[m^2, (m+1)^2)` with `delta(D) = sqrt D - m` inside the
/// interval `lo .. hi` (both given in delta units).
fn block_count(m: u64, x: u64, lo: &Endpoint, hi: &Endpoint) -> u64 {
    let start = m * m;
    let end = ((m + 1) * (m + 1) - 1).min(x);
    if start > end {
        return 0;
    }
    let mm = BigRational::from_integer(BigInt::from(m));
    // D >= ceil((m+a)^2) for closed, D >= floor((m+a)^2) + 1 for open.
    let first: BigInt = {
        let a = lo.value();
        let base = &mm + a;
        if base.is_negative() {
            BigInt::from(start)
        } else {
            let sq = &base * &base;
            match lo {
                Endpoint::Closed(_) => ceil_rat(&sq),
                Endpoint::Open(_) => floor_rat(&sq) + 1,
            }
        }
    };
    let last: BigInt = {
        let b = hi.value();
        let base = &mm + b;
        if base.is_negative() {
            return 0;
        }
        let sq = &base * &base;
        match hi {
            Endpoint::Closed(_) => floor_rat(&sq),
            Endpoint::Open(_) => ceil_rat(&sq) - 1,
        }
    };
    let first = first.max(BigInt::from(start));
    let last = last.min(BigInt::from(end));
    if first > last {
        0
    } else {
        (last - first + 1u32).to_u64().expect("block count fits")
    }
}

fn shift(e: &Endpoint, scale: i64, off: i64) -> Endpoint {
    let f = |v: &BigRational| {
        v * BigRational::from_integer(scale.into()) + BigRational::from_integer(off.into())
    };
    match e {
        Endpoint::Closed(v) => Endpoint::Closed(f(v)),
        Endpoint::Open(v) => Endpoint::Open(f(v)),
    }
}

/// `#{1 <= D <= X : frac(f_D) in (lo .. hi)}` with each end open or closed.
pub fn count_between(kind: SequenceKind, x: u64, lo: &Endpoint, hi: &Endpoint) -> Result<u64> {
    let zero = BigRational::zero();
    let one = BigRational::one();
    if lo.value() < &zero || hi.value() > &one || lo.value() > hi.value() {
        return Err(Error::invalid("need 0 <= a <= b <= 1"));
    }
    if x == 0 {
        return Ok(0);
    }
    let mmax = isqrt_u64(x);
    let count = (1..=mmax)
        .into_par_iter()
        .map(|m| match kind {
            SequenceKind::Sqrt => block_count(m, x, lo, hi),
            SequenceKind::Half => {
                // frac((1 + m + delta)/2) is delta/2 for odd m and
                // (1 + delta)/2 for even m.
                if m % 2 == 1 {
                    block_count(m, x, &shift(lo, 2, 0), &shift(hi, 2, 0))
                } else {
                    block_count(m, x, &shift(lo, 2, -1), &shift(hi, 2, -1))
                }
            }
        })
        .sum();
    Ok(count)
}

/// `#{1 <= D <= X : frac(f_D) in [a, b]}`.
pub fn fractional_count(
    kind: SequenceKind,
    x: u64,
    a: &BigRational,
    b: &BigRational,
) -> Result<u64> {
    count_between(
        kind,
        x,
        &Endpoint::Closed(a.clone()),
        &Endpoint::Closed(b.clone()),
    )
}

/// `fractional_count - (b - a) X`, signed and exact.
pub fn discrepancy(
    kind: SequenceKind,
    x: u64,
    a: &BigRational,
    b: &BigRational,
) -> Result<BigRational> {
    let c = fractional_count(kind, x, a, b)?;
    Ok(BigRational::from_integer(c.into()) - (b - a) * BigRational::from_integer(x.into()))
}

fn sqrt_int(n: u64, prec: u32) -> Result<Interval> {
    Interval::from_int(n, prec).sqrt()
}

/// `f_{X+1}` and `1/(f_{X+2} - f_{X+1})` as enclosures.
fn f_and_inv_gap(kind: SequenceKind, x: u64, prec: u32) -> Result<(Interval, Interval)> {
    let s1 = sqrt_int(x + 1, prec)?;
    let s2 = sqrt_int(x + 2, prec)?;
    let sum = s1.add(&s2);
    Ok(match kind {
        SequenceKind::Sqrt => (s1, sum),
        SequenceKind::Half => {
            let f = s1
                .add(&Interval::from_int(1, prec))
                .mul(&Interval::from_ratio(1, 2, prec));
            (f, sum.mul(&Interval::from_int(2, prec)))
        }
    })
}

/// `(3 pi + 1) X^{1/2} f_{X+1}^{1/2} + (pi/2) / (f_{X+2} - f_{X+1})`.
pub fn discrepancy_bound(kind: SequenceKind, x: u64, prec: u32) -> Result<BoundValue> {
    if x < 1 {
        return Err(Error::invalid("X must be at least 1"));
    }
    let w = prec + 32;
    let p = pi(w);
    let (f, inv_gap) = f_and_inv_gap(kind, x, w)?;
    let root = Interval::from_int(x, w).mul(&f).sqrt()?;
    let lead = p
        .mul(&Interval::from_int(3, w))
        .add(&Interval::from_int(1, w))
        .mul(&root);
    let tail = p.mul(&Interval::from_ratio(1, 2, w)).mul(&inv_gap);
    let v = lead.add(&tail);
    Ok(BoundValue::new(Interval::from_bounds(
        v.lo().clone(),
        v.hi().clone(),
        prec,
    )))
}

/// Per-term error allowance for one `f64` evaluation of `cos` or `sin` of
/// the reduced phase: phase error at most a few ulps of `2 pi`, plus the
/// libm error. `1e-14` leaves an order of magnitude of headroom.
const TERM_ERR: f64 = 1e-14;
/// Fixed-point scale for exact accumulation.
const FIX_BITS: i32 = 60;

/// `frac(k f_D)` in `[0, 1)`, reduced exactly and then rounded once.
fn phase(kind: SequenceKind, k: u64, d: u64) -> Result<f64> {
    let n = (k as u128) * (k as u128) * (d as u128);
    if n >= 1u128 << 52 {
        return Err(Error::invalid(
            "k^2 D too large for the f64 phase reduction",
        ));
    }
    let n = n as u64;
    let t = isqrt_u64(n);
    // sqrt(n) - t = (n - t^2)/(sqrt n + t), numerator exact.
    let num = (n - t * t) as f64;
    let delta = if num == 0.0 {
        0.0
    } else {
        num / ((n as f64).sqrt() + t as f64)
    };
    Ok(match kind {
        SequenceKind::Sqrt => delta,
        SequenceKind::Half => (((k + t) % 2) as f64 + delta) / 2.0,
    })
}

/// An exponential sum `S_k = sum_{D <= X} e(k f_D)` with a rigorous error
/// radius: the exact sum lies within `err` of `(re, im)`.
#[derive(Clone, Debug)]
pub struct ExpSum {
    pub re: Dyadic,
    pub im: Dyadic,
    pub err: BigRational,
}

impl ExpSum {
    /// Certified upper bound on `|S_k|`.
    pub fn modulus_upper(&self, prec: u32) -> Result<Interval> {
        let re = Interval::exact(self.re.clone(), prec);
        let im = Interval::exact(self.im.clone(), prec);
        let m = re.mul(&re).add(&im.mul(&im)).sqrt()?;
        Ok(m.add(&Interval::from_rational(&self.err, prec)))
    }
}

/// `S_k = sum_{D=1}^X exp(2 pi i k f_D)`.
pub fn exp_sum(kind: SequenceKind, x: u64, k: u64) -> Result<ExpSum> {
    let scale = (1i64 << FIX_BITS) as f64;
    let (re, im) = (1..=x)
        .into_par_iter()
        .map(|d| -> Result<(i128, i128)> {
            let t = phase(kind, k, d)?;
            let (s, c) = (2.0 * PI * t).sin_cos();
            Ok(((c * scale).round() as i128, (s * scale).round() as i128))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    // Each coordinate is off by at most TERM_ERR + 2^-61 per term.
    let per_term = BigRational::from_float(TERM_ERR).expect("finite")
        + BigRational::new(BigInt::one(), BigInt::one() << (FIX_BITS as usize + 1));
    let coord_err = per_term * BigRational::from_integer(x.into());
    // |error vector| <= sqrt(2) * coord_err < (3/2) coord_err.
    let err = coord_err * BigRational::new(3.into(), 2.into());
    Ok(ExpSum {
        re: Dyadic::new(re.into(), -(FIX_BITS as i64)),
        im: Dyadic::new(im.into(), -(FIX_BITS as i64)),
        err,
    })
}

/// `X/(K+1) + 3 sum_{k=1}^K |S_k| / k`, with each `|S_k|` replaced by a
/// certified upper bound.
pub fn erdos_turan_rhs(kind: SequenceKind, x: u64, k: u64, prec: u32) -> Result<BoundValue> {
    if x < 1 || k < 1 {
        return Err(Error::invalid("X and K must be at least 1"));
    }
    let w = prec + 16;
    let mut acc = Interval::from_rational(&BigRational::new(x.into(), (k + 1).into()), w);
    let three = Interval::from_int(3, w);
    for kk in 1..=k {
        let s = exp_sum(kind, x, kk)?.modulus_upper(w)?;
        acc = acc.add(&three.mul(&s).div(&Interval::from_int(kk, w))?);
    }
    Ok(BoundValue::new(Interval::from_bounds(
        acc.lo().clone(),
        acc.hi().clone(),
        prec,
    )))
}

/// Both sides of `(1/k)|S_k| <= pi f_{X+1} + 1/(k^2 pi (f_{X+2} - f_{X+1}))`.
/// `lhs` is rounded up and `rhs` rounded down.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl TrigCheck {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

pub fn trig_sum_bound_check(kind: SequenceKind, x: u64, k: u64) -> Result<TrigCheck> {
    if x < 1 || k < 1 {
        return Err(Error::invalid("X and k must be at least 1"));
    }
    let prec = 128;
    let s = exp_sum(kind, x, k)?.modulus_upper(prec)?;
    let lhs = s.div(&Interval::from_int(k, prec))?;
    let p = pi(prec);
    let (f, inv_gap) = f_and_inv_gap(kind, x, prec)?;
    let k2 = Interval::from_int(k * k, prec);
    let rhs = p.mul(&f).add(&inv_gap.div(&k2.mul(&p))?);
    Ok(TrigCheck {
        lhs: lhs.hi().to_f64_up(),
        rhs: rhs.lo().to_f64_down(),
    })
}

/// The `K` used to balance the two Erdős–Turán terms:
/// `floor(X^{1/2} / f_{X+1}^{1/2})`, at least 1.
pub fn balanced_k(kind: SequenceKind, x: u64) -> Result<u64> {
    let prec = 128;
    let (f, _) = f_and_inv_gap(kind, x, prec)?;
    let v = Interval::from_int(x, prec).div(&f)?.sqrt()?;
    let lo = v.lo().floor();
    let hi = v.hi().floor();
    if lo != hi {
        return Err(Error::Domain(
            "balanced K is not resolved at 128 bits".into(),
        ));
    }
    Ok(lo.to_u64().unwrap_or(u64::MAX).max(1))
}

/// Exact `floor(f_D)`, used by tests and callers that need the integer part.
pub fn floor_f(kind: SequenceKind, d: u64) -> u64 {
    let m = isqrt_u64(d);
    match kind {
        SequenceKind::Sqrt => m,
        SequenceKind::Half => m.div_ceil(2),
    }
}
