//! Sweeps over `D <= X`: the squarefree sieve, counts of `D` whose
//! continued fraction has bounded odd-indexed coefficients, the explicit
//! upper bounds for those counts, and rank lower bounds for universal
//! lattices derived from the largest odd-indexed coefficient.
//!
//! The hot path runs the PQa recurrence on machine integers. It is checked
//! against the arbitrary-precision expansion in [`crate::surd_cf`].

use std::collections::HashMap;
use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::arith::{is_square_u64, isqrt_u64};
use crate::certified::{ln, BoundValue, Interval, DEFAULT_PRECISION};
use crate::error::{Error, Result};
use crate::lattice::bound_b;

/// Largest `D` accepted by the machine-integer sweeps.
pub const MAX_D: u64 = 1 << 50;

/// Precision ceiling for resolving certified comparisons.
const MAX_REFINE_BITS: u32 = 1 << 14;

const CHUNK: u64 = 1 << 12;

/// Bitset of squarefree integers in `1..=X`.
#[derive(Clone, Debug)]
pub struct SquarefreeSieve {
    x: u64,
    words: Vec<u64>,
}

impl SquarefreeSieve {
    pub fn limit(&self) -> u64 {
        self.x
    }

    /// Whether `d` is squarefree. `d` must lie in `1..=limit`.
    pub fn contains(&self, d: u64) -> bool {
        assert!(
            d >= 1 && d <= self.x,
            "{d} outside sieve range 1..={}",
            self.x
        );
        self.words[(d / 64) as usize] >> (d % 64) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.x).filter(|&d| self.contains(d))
    }

    pub fn count(&self) -> u64 {
        self.iter().count() as u64
    }
}

/// Marks every `D <= X` not divisible by a square `k^2 > 1`.
pub fn squarefree_sieve(x: u64) -> Result<SquarefreeSieve> {
    if x < 1 {
        return Err(Error::invalid("sieve limit must be at least 1"));
    }
    let len = (x / 64 + 1) as usize;
    let mut words = vec![u64::MAX; len];
    words[0] &= !1;
    let r = isqrt_u64(x);
    // Composite k are redundant but cheap; sum x/k^2 < 0.65 x.
    for k in 2..=r {
        let sq = k * k;
        let mut m = sq;
        while m <= x {
            words[(m / 64) as usize] &= !(1u64 << (m % 64));
            m += sq;
        }
    }
    Ok(SquarefreeSieve { x, words })
}

/// Which number's expansion is examined for a given `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CensusKind {
    /// `xi_D`; `D = 1` and `D = 0 (mod 4)` are skipped.
    Xi,
    /// `sqrt D` for every `D`.
    SqrtAll,
    /// `(1 + sqrt D)/2` for every `D`.
    HalfAll,
}

impl CensusKind {
    pub fn name(self) -> &'static str {
        match self {
            CensusKind::Xi => "xi",
            CensusKind::SqrtAll => "sqrt_all",
            CensusKind::HalfAll => "half_all",
        }
    }
}

impl std::str::FromStr for CensusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(CensusKind::Xi),
            "sqrt_all" => Ok(CensusKind::SqrtAll),
            "half_all" => Ok(CensusKind::HalfAll),
            _ => Err(Error::invalid(format!("unknown census kind {s:?}"))),
        }
    }
}

/// The number attached to `D` under a census kind.
enum Target {
    Skip,
    /// Rational, with the largest odd-indexed coefficient of its finite
    /// expansion (0 when there is none).
    Rational(u64),
    /// `(P + sqrt d)/Q` with `Q | d - P^2` and `d` not a square.
    Surd {
        p: i64,
        q: i64,
        d: i64,
    },
}

fn target(kind: CensusKind, d: u64) -> Target {
    let sq = is_square_u64(d);
    match kind {
        CensusKind::Xi => {
            if d == 1 || d % 4 == 0 {
                Target::Skip
            } else if d % 4 == 1 {
                if sq {
                    Target::Rational(0)
                } else {
                    Target::Surd {
                        p: 1,
                        q: 2,
                        d: d as i64,
                    }
                }
            } else {
                Target::Surd {
                    p: 0,
                    q: 1,
                    d: d as i64,
                }
            }
        }
        CensusKind::SqrtAll => {
            if sq {
                Target::Rational(0)
            } else {
                Target::Surd {
                    p: 0,
                    q: 1,
                    d: d as i64,
                }
            }
        }
        CensusKind::HalfAll => {
            if sq {
                // (1 + m)/2 is an integer for odd m and [m/2; 2] for even m.
                Target::Rational(if isqrt_u64(d) % 2 == 1 { 0 } else { 2 })
            } else if d % 2 == 1 {
                Target::Surd {
                    p: 1,
                    q: 2,
                    d: d as i64,
                }
            } else {
                Target::Surd {
                    p: 2,
                    q: 4,
                    d: 4 * d as i64,
                }
            }
        }
    }
}

/// Outcome of a scan of odd-indexed coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OddScan {
    /// Largest odd-indexed coefficient, or the first one exceeding the cap.
    pub u: u64,
    /// Period length, if the scan ran to completion.
    pub period: Option<u64>,
}

/// Runs PQa on `(p + sqrt d)/q`. The expansion of every target is purely
/// periodic from index 1, so the scan stops once the state after `u_0`
/// recurs after an even number of steps: then every odd-indexed phase of
/// the period has been seen.
fn scan_surd(mut p: i64, mut q: i64, d: i64, cap: Option<u64>) -> Result<OddScan> {
    let s = isqrt_u64(d as u64) as i64;
    let step = |p: &mut i64, q: &mut i64| -> i64 {
        let a = if *q > 0 {
            Integer::div_floor(&(*p + s), q)
        } else {
            Integer::div_floor(&(*p + s + 1), q)
        };
        let np = a * *q - *p;
        *q = (d - np * np) / *q;
        *p = np;
        a
    };
    step(&mut p, &mut q);
    let first = (p, q);
    let mut best = 0u64;
    let mut period = None;
    // Periods are below 2 sqrt(d) log(d) + O(1); this cap is never reached.
    let limit = 64 * (s as u64 + 16) * 64;
    for j in 1..=limit {
        let a = step(&mut p, &mut q) as u64;
        if j % 2 == 1 && a > best {
            best = a;
            if cap.is_some_and(|c| a > c) {
                return Ok(OddScan { u: a, period: None });
            }
        }
        if (p, q) == first {
            period.get_or_insert(j);
            if j % 2 == 0 {
                return Ok(OddScan { u: best, period });
            }
        }
    }
    Err(Error::assertion(format!(
        "no period found for ({p}+√{d})/{q}"
    )))
}

fn check_d(d: u64) -> Result<()> {
    if d > MAX_D {
        return Err(Error::invalid(format!(
            "D = {d} exceeds the sweep limit {MAX_D}"
        )));
    }
    Ok(())
}

/// `(u, period length)` for `xi_D`, with `D > 1` squarefree.
pub fn odd_max_and_period(d: u64) -> Result<(u64, u64)> {
    check_d(d)?;
    crate::surd_cf::make_xi(d)?;
    xi_full_scan(d)
}

/// [`odd_max_and_period`] without validating `D`.
fn xi_full_scan(d: u64) -> Result<(u64, u64)> {
    match target(CensusKind::Xi, d) {
        Target::Surd { p, q, d } => {
            let r = scan_surd(p, q, d, None)?;
            Ok((r.u, r.period.expect("full scan records the period")))
        }
        _ => unreachable!("squarefree D > 1 gives an irrational xi_D"),
    }
}

/// Whether every odd-indexed coefficient of `xi_D` is at most `b`.
pub fn all_odd_bounded(d: u64, b: u64) -> Result<bool> {
    check_d(d)?;
    crate::surd_cf::make_xi(d)?;
    bounded(CensusKind::Xi, d, b)
}

fn bounded(kind: CensusKind, d: u64, b: u64) -> Result<bool> {
    Ok(match target(kind, d) {
        Target::Skip => false,
        Target::Rational(u) => u <= b,
        Target::Surd { p, q, d } => scan_surd(p, q, d, Some(b))?.u <= b,
    })
}

/// Number of `D <= X` (restricted to squarefree `D` if asked) whose number
/// under `kind` has all odd-indexed coefficients at most `B`.
pub fn census(x: u64, b: u64, kind: CensusKind, squarefree_only: bool) -> Result<u64> {
    if x < 1 || b < 1 {
        return Err(Error::invalid("census needs X >= 1 and B >= 1"));
    }
    check_d(x)?;
    let sieve = if squarefree_only {
        Some(squarefree_sieve(x)?)
    } else {
        None
    };
    let chunks = x.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<u64> {
            let lo = c * CHUNK + 1;
            let hi = ((c + 1) * CHUNK).min(x);
            let mut n = 0;
            for d in lo..=hi {
                if sieve.as_ref().is_some_and(|s| !s.contains(d)) {
                    continue;
                }
                if bounded(kind, d, b)? {
                    n += 1;
                }
            }
            Ok(n)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `count <= bound` report for one of the explicit census bounds.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub x: u64,
    pub params: ReportParams,
    pub count: u64,
    pub bound: BoundValue,
    pub precondition_ok: bool,
}

#[derive(Clone, Debug)]
pub enum ReportParams {
    Census {
        b: u64,
        kind: CensusKind,
        squarefree_only: bool,
        man: bool,
    },
    Exclusion {
        r: u64,
        m: u64,
        threshold: BoundValue,
    },
}

impl BoundReport {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "X": self.x,
            "count": self.count,
            "bound": self.bound,
            "bound_precision_bits": self.bound.precision_bits(),
            "precondition_ok": self.precondition_ok,
        });
        let o = v.as_object_mut().expect("object literal");
        match &self.params {
            ReportParams::Census {
                b,
                kind,
                squarefree_only,
                man,
            } => {
                o.insert("B".into(), json!(b));
                o.insert("kind".into(), json!(kind.name()));
                o.insert("squarefree".into(), json!(squarefree_only));
                o.insert(
                    "variant".into(),
                    json!(if *man { "man" } else { "standard" }),
                );
            }
            ReportParams::Exclusion { r, m, threshold } => {
                o.insert("R".into(), json!(r));
                o.insert("m".into(), json!(m));
                o.insert("B(R,m)".into(), json!(threshold));
            }
        }
        v
    }

    /// Header line and value line.
    pub fn to_csv(&self) -> String {
        let bound = self.bound.to_decimal_up(30);
        let bits = self.bound.precision_bits();
        match &self.params {
            ReportParams::Census {
                b,
                kind,
                squarefree_only,
                man,
            } => format!(
                "X,B,kind,squarefree,variant,count,bound,bound_precision_bits,precondition_ok\n\
                 {},{},{},{},{},{},{},{},{}\n",
                self.x,
                b,
                kind.name(),
                squarefree_only,
                if *man { "man" } else { "standard" },
                self.count,
                bound,
                bits,
                self.precondition_ok
            ),
            ReportParams::Exclusion { r, m, threshold } => format!(
                "X,R,m,B(R;m),count,bound,bound_precision_bits,precondition_ok\n\
                 {},{},{},{},{},{},{},{}\n",
                self.x,
                r,
                m,
                threshold.to_decimal_up(30),
                self.count,
                bound,
                bits,
                self.precondition_ok
            ),
        }
    }

    fn verify(self) -> Result<Self> {
        if self.precondition_ok && !self.bound.certainly_ge(&BigInt::from(self.count)) {
            return Err(Error::assertion(format!(
                "count {} exceeds bound {} at X = {}",
                self.count,
                self.bound.to_decimal_up(20),
                self.x
            )));
        }
        Ok(self)
    }
}

/// Decides `lhs(prec) <= X` by raising the precision until the enclosure
/// separates from `X`.
fn certified_le_x(x: u64, prec: u32, f: impl Fn(u32) -> Result<Interval>) -> Result<bool> {
    let xr = BigRational::from_integer(BigInt::from(x));
    let mut w = prec.max(64);
    loop {
        let v = f(w)?;
        if v.hi().to_rational() <= xr {
            return Ok(true);
        }
        if v.lo().to_rational() > xr {
            return Ok(false);
        }
        if w >= MAX_REFINE_BITS {
            return Err(Error::Domain(format!(
                "cannot separate precondition from X = {x}"
            )));
        }
        w *= 2;
    }
}

fn ln_x(x: u64, w: u32) -> Result<Interval> {
    ln(&BigInt::from(x).into(), w)
}

fn pow_3_2(v: &Interval) -> Result<Interval> {
    Ok(v.mul(&v.sqrt()?))
}

/// `X^{1/8}`.
fn eighth_root(x: u64, w: u32) -> Result<Interval> {
    Interval::from_int(x, w).sqrt()?.sqrt()?.sqrt()
}

/// `c B^{3/2} (ln X)^{3/2} X^{7/8}`.
fn main_term(c: u64, b: &Interval, x: u64, w: u32) -> Result<Interval> {
    let l = ln_x(x, w)?;
    let x78 = Interval::from_int(x, w).div(&eighth_root(x, w)?)?;
    Ok(Interval::from_int(c, w)
        .mul(&pow_3_2(b)?)
        .mul(&pow_3_2(&l)?)
        .mul(&x78))
}

fn standard_bound(b: &Interval, x: u64, prec: u32) -> Result<BoundValue> {
    let w = prec + 32;
    let v = main_term(100, b, x, w)?;
    Ok(BoundValue::new(Interval::from_bounds(
        v.lo().clone(),
        v.hi().clone(),
        prec,
    )))
}

fn man_bound(b: &Interval, x: u64, prec: u32) -> Result<BoundValue> {
    let w = prec + 32;
    let l = ln_x(x, w)?;
    let x34 = Interval::from_int(x, w).div(&eighth_root(x, w)?.powu(2))?;
    let second = Interval::from_int(23, w)
        .mul(&b.powu(3))
        .mul(&l.powu(2))
        .mul(&x34);
    let v = main_term(50, b, x, w)?.add(&second);
    Ok(BoundValue::new(Interval::from_bounds(
        v.lo().clone(),
        v.hi().clone(),
        prec,
    )))
}

/// `B^e (ln X)^4`.
fn precondition_lhs(b: &Interval, e: u64, x: u64, w: u32) -> Result<Interval> {
    Ok(b.powu(e).mul(&ln_x(x, w)?.powu(4)))
}

fn check_xb(x: u64, b: u64) -> Result<()> {
    if x < 2 || b < 1 {
        return Err(Error::invalid("the census bounds need X >= 2 and B >= 1"));
    }
    Ok(())
}

/// Census against `100 B^{3/2} (ln X)^{3/2} X^{7/8}`, valid once
/// `X >= B^12 (ln X)^4`.
pub fn census_report(
    x: u64,
    b: u64,
    kind: CensusKind,
    squarefree_only: bool,
    man: bool,
    prec: u32,
) -> Result<BoundReport> {
    check_xb(x, b)?;
    let count = census(x, b, kind, squarefree_only)?;
    let bi = |w| Interval::from_int(b, w);
    let (bound, precondition_ok) = if man {
        // X > B^4 (ln X)^4; the two sides never coincide since ln X is
        // irrational for X >= 2.
        let ok = certified_le_x(x, prec, |w| precondition_lhs(&bi(w), 4, x, w))?;
        (man_bound(&bi(prec + 32), x, prec)?, ok)
    } else {
        let ok = certified_le_x(x, prec, |w| precondition_lhs(&bi(w), 12, x, w))?;
        (standard_bound(&bi(prec + 32), x, prec)?, ok)
    };
    BoundReport {
        x,
        params: ReportParams::Census {
            b,
            kind,
            squarefree_only,
            man,
        },
        count,
        bound,
        precondition_ok,
    }
    .verify()
}

/// [`census_report`] over `xi_D` for every `D <= X`.
pub fn corollary_bound(x: u64, b: u64) -> Result<BoundReport> {
    census_report(x, b, CensusKind::Xi, false, false, DEFAULT_PRECISION)
}

/// The variant bound `50 B^{3/2} (ln X)^{3/2} X^{7/8} + 23 B^3 (ln X)^2 X^{3/4}`,
/// valid once `X > B^4 (ln X)^4`.
pub fn corollary_bound_man(x: u64, b: u64) -> Result<BoundReport> {
    census_report(x, b, CensusKind::Xi, false, true, DEFAULT_PRECISION)
}

/// Certified `B(R, m) > u`.
fn threshold_exceeds(r: u64, m: u64, u: u64) -> Result<bool> {
    let ub = BigInt::from(u);
    let mut w = DEFAULT_PRECISION;
    loop {
        let v = bound_b(r, m, w)?;
        if v.certainly_gt(&ub) {
            return Ok(true);
        }
        if v.certainly_le(&ub) {
            return Ok(false);
        }
        if w >= MAX_REFINE_BITS {
            return Err(Error::Domain(format!(
                "cannot compare B({r}, {m}) with {u}"
            )));
        }
        w *= 2;
    }
}

/// Smallest `R` with `B(R, m) > u`. Classical `m O`-universal lattices over a
/// field whose `xi_D` has largest odd-indexed coefficient `u` have at least
/// this rank.
pub fn min_rank_classical(u: u64, m: u64) -> Result<u64> {
    if u < 1 || m < 1 {
        return Err(Error::invalid("min_rank needs u >= 1 and m >= 1"));
    }
    // B(., m) is nondecreasing and unbounded.
    let mut hi = 1;
    while !threshold_exceeds(hi, m, u)? {
        hi *= 2;
        if hi > 1 << 40 {
            return Err(Error::SearchExhausted(format!(
                "no rank found for u = {u}, m = {m}"
            )));
        }
    }
    let mut lo = hi / 2;
    // Invariant: B(lo) <= u (or lo = 0), B(hi) > u.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if threshold_exceeds(mid, m, u)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Rank lower bound for arbitrary (not necessarily classical) universal
/// lattices: doubling the form gives a classical `2 O`-universal lattice.
pub fn min_rank_general(u: u64) -> Result<u64> {
    min_rank_classical(u, 2)
}

/// Largest integer strictly below `B(R, m)`.
fn integer_below_threshold(r: u64, m: u64) -> Result<u64> {
    let mut w = DEFAULT_PRECISION;
    loop {
        let v = bound_b(r, m, w)?;
        let lo = v.lower().to_rational();
        let hi = v.value().to_rational();
        if lo == hi && lo.is_integer() {
            return (lo.to_integer() - 1u32)
                .to_u64()
                .ok_or_else(|| Error::Domain("threshold out of range".into()));
        }
        let (fl, fh) = (lo.floor(), hi.floor());
        if fl == fh && fh != hi {
            return fl
                .to_integer()
                .to_u64()
                .ok_or_else(|| Error::Domain("threshold out of range".into()));
        }
        if w >= MAX_REFINE_BITS {
            return Err(Error::Domain(format!("cannot round B({r}, {m})")));
        }
        w *= 2;
    }
}

/// Counts squarefree `1 < D <= X` with `u(D) < B(R, m)`: the fields not
/// excluded from carrying a rank-`R` classical `m O`-universal lattice.
/// Compared against `100 B^{3/2} X^{7/8} (ln X)^{3/2}`, valid once
/// `X >= B^12 (ln X)^4`.
///
/// The count is computed per `D` from the full maximum `u(D)` and checked
/// against the bounded-coefficient census at the largest integer below
/// `B(R, m)`; disagreement is an assertion failure.
pub fn exclusion_count(r: u64, m: u64, x: u64) -> Result<BoundReport> {
    if r < 1 || m < 1 || x < 2 {
        return Err(Error::invalid("exclusion_count needs R, m >= 1 and X >= 2"));
    }
    check_d(x)?;
    let sieve = squarefree_sieve(x)?;
    let us: Vec<u64> = (2..=x)
        .into_par_iter()
        .filter(|&d| sieve.contains(d))
        .map(|d| xi_full_scan(d).map(|(u, _)| u))
        .collect::<Result<_>>()?;
    let mut verdict: HashMap<u64, bool> = HashMap::new();
    let mut count = 0u64;
    for u in us {
        let below = match verdict.get(&u) {
            Some(&v) => v,
            None => {
                let v = threshold_exceeds(r, m, u)?;
                verdict.insert(u, v);
                v
            }
        };
        count += below as u64;
    }
    let floor_b = integer_below_threshold(r, m)?;
    let via_census = if floor_b == 0 {
        0
    } else {
        census(x, floor_b, CensusKind::Xi, true)?
    };
    if via_census != count {
        return Err(Error::assertion(format!(
            "exclusion count {count} disagrees with census {via_census} at B = {floor_b}"
        )));
    }
    let prec = DEFAULT_PRECISION;
    let threshold = bound_b(r, m, prec)?;
    let tb = |w: u32| -> Result<Interval> { Ok(bound_b(r, m, w)?.enclosure().clone()) };
    let precondition_ok = certified_le_x(x, prec, |w| precondition_lhs(&tb(w)?, 12, x, w))?;
    let bound = standard_bound(&tb(prec + 32)?, x, prec)?;
    BoundReport {
        x,
        params: ReportParams::Exclusion { r, m, threshold },
        count,
        bound,
        precondition_ok,
    }
    .verify()
}

/// Per-`D` data: the largest odd-indexed coefficient and the rank bounds it
/// implies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusRecord {
    pub d: u64,
    pub squarefree: bool,
    pub u: u64,
    pub period_length: u64,
    pub rank_lb_classical: u64,
    pub rank_lb_general: u64,
}

pub const RANK_TABLE_HEADER: &str =
    "D,squarefree,u,period_length,rank_lb_classical,rank_lb_general";

impl CensusRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.d,
            self.squarefree,
            self.u,
            self.period_length,
            self.rank_lb_classical,
            self.rank_lb_general
        )
    }
}

/// One record per squarefree `1 < D <= X`, in order of `D`.
pub fn rank_table(x: u64, m: u64) -> Result<Vec<CensusRecord>> {
    if x < 2 || m < 1 {
        return Err(Error::invalid("rank_table needs X >= 2 and m >= 1"));
    }
    check_d(x)?;
    let sieve = squarefree_sieve(x)?;
    let raw: Vec<(u64, u64, u64)> = (2..=x)
        .into_par_iter()
        .filter(|&d| sieve.contains(d))
        .map(|d| xi_full_scan(d).map(|(u, s)| (d, u, s)))
        .collect::<Result<_>>()?;
    let mut memo: HashMap<u64, (u64, u64)> = HashMap::new();
    raw.into_iter()
        .map(|(d, u, s)| {
            let (c, g) = match memo.get(&u) {
                Some(&v) => v,
                None => {
                    let v = (min_rank_classical(u, m)?, min_rank_general(u)?);
                    memo.insert(u, v);
                    v
                }
            };
            Ok(CensusRecord {
                d,
                squarefree: true,
                u,
                period_length: s,
                rank_lb_classical: c,
                rank_lb_general: g,
            })
        })
        .collect()
}

/// Writes records as CSV with LF line endings.
pub fn write_rank_table_csv<W: Write>(
    out: &mut W,
    records: &[CensusRecord],
) -> std::io::Result<()> {
    writeln!(out, "{RANK_TABLE_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    Ok(())
}

/// `u` through the arbitrary-precision expansion, for cross-checks.
pub fn odd_max_exact(d: u64) -> Result<u64> {
    let (u, _) = crate::surd_cf::max_odd_coefficient(d)?;
    if u.is_zero() {
        return Err(Error::assertion(format!("empty odd scan for D = {d}")));
    }
    u.to_u64()
        .ok_or_else(|| Error::Domain("coefficient out of range".into()))
}
