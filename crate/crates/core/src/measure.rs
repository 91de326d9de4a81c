//! Intervals of fixed continued-fraction rank and the finite interval covers
//! built from them.
//!
//! For `x = [0; k_1, k_2, ...]` in `[0, 1)`, the set of `x` whose first `N`
//! coefficients are `k_1..k_N` is an interval with endpoints `p_N/q_N` and
//! `(p_N + p_{N-1})/(q_N + q_{N-1})`. Everything here is exact rational
//! arithmetic.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::arith::fmt_rational;
use crate::error::{Error, Result};
use crate::surd_cf::QuadraticSurd;

/// Default cap on the number of intervals a cover may generate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Closure {
    Closed,
    HalfOpenRight,
}

/// An interval in `[0, 1]` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalInterval {
    pub lo: BigRational,
    pub hi: BigRational,
    pub closure: Closure,
}

impl RationalInterval {
    pub fn closed(a: BigRational, b: BigRational) -> Self {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        RationalInterval {
            lo,
            hi,
            closure: Closure::Closed,
        }
    }

    pub fn half_open(a: BigRational, b: BigRational) -> Self {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        RationalInterval {
            lo,
            hi,
            closure: Closure::HalfOpenRight,
        }
    }

    pub fn length(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains_rational(&self, x: &BigRational) -> bool {
        match self.closure {
            Closure::Closed => &self.lo <= x && x <= &self.hi,
            Closure::HalfOpenRight => &self.lo <= x && x < &self.hi,
        }
    }

    /// Exact membership of a quadratic irrational (never on an endpoint).
    pub fn contains_surd(&self, x: &QuadraticSurd) -> bool {
        x.cmp_rational(&self.lo) == Ordering::Greater && x.cmp_rational(&self.hi) == Ordering::Less
    }

    /// `self` is contained in `other` as a point set.
    pub fn is_subset_of(&self, other: &RationalInterval) -> bool {
        let right_ok = match (self.closure, other.closure) {
            (Closure::Closed, Closure::HalfOpenRight) => self.hi < other.hi,
            _ => self.hi <= other.hi,
        };
        other.lo <= self.lo && right_ok
    }

    fn to_json(&self) -> serde_json::Value {
        json!({ "lo": fmt_rational(&self.lo), "hi": fmt_rational(&self.hi) })
    }
}

/// `(p_N, q_N, p_{N-1}, q_{N-1})` for `[0; k_1, ..., k_N]`; the empty list
/// gives the seeds `(0, 1, 1, 0)`.
fn last_convergents(ks: &[u64]) -> (BigInt, BigInt, BigInt, BigInt) {
    let (mut p, mut q) = (BigInt::zero(), BigInt::one());
    let (mut pp, mut qp) = (BigInt::one(), BigInt::zero());
    for &k in ks {
        let np = BigInt::from(k) * &p + &pp;
        let nq = BigInt::from(k) * &q + &qp;
        pp = std::mem::replace(&mut p, np);
        qp = std::mem::replace(&mut q, nq);
    }
    (p, q, pp, qp)
}

fn check_coeffs(ks: &[u64]) -> Result<()> {
    if ks.contains(&0) {
        return Err(Error::invalid(
            "continued fraction coefficients must be >= 1",
        ));
    }
    Ok(())
}

/// The interval of `x in [0, 1)` whose first coefficients are `ks`.
pub fn rank_interval(ks: &[u64]) -> Result<RationalInterval> {
    if ks.is_empty() {
        return Err(Error::invalid(
            "rank interval needs at least one coefficient",
        ));
    }
    check_coeffs(ks)?;
    let (p, q, pp, qp) = last_convergents(ks);
    Ok(RationalInterval::half_open(
        BigRational::new(p.clone(), q.clone()),
        BigRational::new(p + pp, q + qp),
    ))
}

/// Endpoint `(t p_n + p_{n-1}) / (t q_n + q_{n-1})`.
fn weighted_endpoint(ks: &[u64], t: u64) -> (BigRational, BigRational) {
    let (p, q, pp, qp) = last_convergents(ks);
    let t = BigInt::from(t);
    let far = BigRational::new(&t * &p + pp, &t * &q + qp);
    (BigRational::new(p, q), far)
}

/// Measure of the union of the rank-`(n+1)` intervals below `ks` whose next
/// coefficient exceeds `n_cut`.
pub fn tail_union_measure(ks: &[u64], n_cut: u64) -> Result<BigRational> {
    check_coeffs(ks)?;
    let (limit, far) = weighted_endpoint(ks, n_cut + 1);
    Ok((limit - far).abs())
}

/// The closed interval `I(ks)` enclosing every rank interval `ks ++ [k]`
/// with `k >= L + 1`.
pub fn cover_interval_i(ks: &[u64], l: u64) -> Result<RationalInterval> {
    if ks.is_empty() {
        return Err(Error::invalid(
            "cover interval needs at least one coefficient",
        ));
    }
    if l == 0 {
        return Err(Error::invalid("L must be at least 1"));
    }
    check_coeffs(ks)?;
    let (limit, far) = weighted_endpoint(ks, l + 1);
    Ok(RationalInterval::closed(limit, far))
}

/// `sum_j (n-j+1) phi(a_j) + (sum_t a_t - n(n+1)/2) L` for explicit
/// `a_1 < ... < a_n` and the values `phi(a_j)`.
pub fn count_bound_formula(a: &[u64], phi_a: &[u64], l: u64) -> Result<u128> {
    let n = a.len();
    if n == 0 || phi_a.len() != n {
        return Err(Error::invalid("need matching nonempty a and phi(a) lists"));
    }
    let mut total: u128 = 0;
    for (j, &ph) in phi_a.iter().enumerate() {
        total += (n - j) as u128 * ph as u128;
    }
    let sum_a: u128 = a.iter().map(|&x| x as u128).sum();
    let tri = (n * (n + 1) / 2) as u128;
    if sum_a < tri {
        return Err(Error::invalid(
            "a_j must be strictly increasing positive integers",
        ));
    }
    Ok(total + (sum_a - tri) * l as u128)
}

/// `prod_j (1 - 1/(3(phi_j + 2))) + c (n-1)/L`, with one factor per entry of
/// `phi` (`None` is an unbounded coefficient and contributes 1) and the
/// slack constant `c` given as a rational.
pub fn measure_bound_formula(phi: &[Option<u64>], l: u64, c: &BigRational) -> BigRational {
    let mut prod = BigRational::one();
    for p in phi.iter().flatten() {
        prod *= BigRational::one() - BigRational::new(1.into(), BigInt::from(3 * (p + 2)));
    }
    let n = phi.len() as i64;
    prod + c * BigRational::new(BigInt::from(n - 1), BigInt::from(l))
}

/// The explicit cover for coefficient bound `B` on odd indices (even indices
/// unbounded), depth `n` and cut-off `L`.
#[derive(Clone, Debug)]
pub struct CoverSpec {
    pub b: u64,
    pub n: u64,
    pub l: u64,
    /// Disjoint closed components, sorted.
    pub intervals: Vec<RationalInterval>,
    /// Number of intervals generated before merging.
    pub raw_count: u64,
    pub declared_count_bound: u128,
    /// `(1 - 1/(3(B+2)))^n + 2(n-1)/L`.
    pub declared_measure_bound: BigRational,
    /// Variant with slack `5(n-1)/(3L)`.
    pub declared_measure_bound_alt: BigRational,
}

impl CoverSpec {
    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    /// Exact total length. Summed pairwise so that denominators stay
    /// balanced; large covers can still be slow, see `measure_at_most`.
    pub fn total_measure(&self) -> BigRational {
        fn sum(ivs: &[RationalInterval]) -> BigRational {
            match ivs {
                [] => BigRational::zero(),
                [iv] => iv.length(),
                _ => {
                    let (l, r) = ivs.split_at(ivs.len() / 2);
                    sum(l) + sum(r)
                }
            }
        }
        sum(&self.intervals)
    }

    /// `(lower, upper)` on the total length from per-interval floor and
    /// ceiling at `frac_bits` fractional bits.
    pub fn measure_bounds(&self, frac_bits: u32) -> (BigRational, BigRational) {
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for iv in &self.intervals {
            let len = iv.length();
            let scaled = len.numer() << frac_bits as usize;
            let (q, r) = (&scaled / len.denom(), &scaled % len.denom());
            hi += if r.is_zero() { q.clone() } else { &q + 1u32 };
            lo += q;
        }
        let den = BigInt::one() << frac_bits as usize;
        (BigRational::new(lo, den.clone()), BigRational::new(hi, den))
    }

    /// `total_measure() <= bound`, decided from certified brackets and
    /// falling back to the exact sum only when they straddle `bound`.
    pub fn measure_at_most(&self, bound: &BigRational) -> bool {
        for bits in [128, 1024] {
            let (lo, hi) = self.measure_bounds(bits);
            if &hi <= bound {
                return true;
            }
            if &lo > bound {
                return false;
            }
        }
        &self.total_measure() <= bound
    }

    pub fn count_within_bound(&self) -> bool {
        self.count() as u128 <= self.declared_count_bound
    }

    pub fn measure_within_bound(&self) -> bool {
        self.measure_at_most(&self.declared_measure_bound)
    }

    /// Exact membership of `x in [0, 1)`.
    pub fn contains(&self, x: &QuadraticSurd) -> bool {
        let idx = self
            .intervals
            .partition_point(|iv| x.cmp_rational(&iv.lo) == Ordering::Greater);
        idx > 0 && x.cmp_rational(&self.intervals[idx - 1].hi) == Ordering::Less
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "params": { "B": self.b, "n": self.n, "L": self.l },
            "intervals": self.intervals.iter().map(|i| i.to_json()).collect::<Vec<_>>(),
            "count": self.count(),
            "raw_count": self.raw_count,
            "declared_count_bound": self.declared_count_bound.to_string(),
            "measure": fmt_rational(&self.total_measure()),
            "declared_measure_bound": fmt_rational(&self.declared_measure_bound),
            "declared_measure_bound_alt": fmt_rational(&self.declared_measure_bound_alt),
        })
    }
}

fn checked_pow(base: u64, exp: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

/// Number of raw intervals `build_cover` would generate.
pub fn cover_raw_size(b: u64, n: u64, l: u64) -> Option<u128> {
    let mut total = checked_pow(b, n)?.checked_mul(checked_pow(l, n - 1)?)?;
    for m in 1..n {
        total = total.checked_add(checked_pow(b, m)?.checked_mul(checked_pow(l, m - 1)?)?)?;
    }
    Some(total)
}

fn bound_for(j: usize, b: u64, l: u64) -> u64 {
    // j is 0-based: index j+1 odd <=> j even.
    if j % 2 == 0 {
        b
    } else {
        l
    }
}

/// Pushes every interval below `prefix` into `out`.
fn collect_cover(prefix: &mut Vec<u64>, b: u64, n: usize, l: u64, out: &mut Vec<RationalInterval>) {
    let depth = prefix.len();
    let full = 2 * n - 1;
    if depth == full {
        out.push(rank_interval(prefix).expect("nonempty valid prefix"));
        return;
    }
    // After an odd-length prefix of length 2N-1 < 2n-1, the next (even)
    // coefficient beyond L is covered by I(prefix).
    if depth % 2 == 1 {
        out.push(cover_interval_i(prefix, l).expect("nonempty valid prefix"));
    }
    for k in 1..=bound_for(depth, b, l) {
        prefix.push(k);
        collect_cover(prefix, b, n, l, out);
        prefix.pop();
    }
}

fn merge(mut ivs: Vec<RationalInterval>) -> Vec<RationalInterval> {
    ivs.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.hi.cmp(&b.hi)));
    let mut out: Vec<RationalInterval> = Vec::new();
    for iv in ivs {
        match out.last_mut() {
            Some(cur) if iv.lo <= cur.hi => {
                if iv.hi > cur.hi {
                    cur.hi = iv.hi;
                }
            }
            _ => out.push(RationalInterval::closed(iv.lo, iv.hi)),
        }
    }
    out
}

/// Builds the cover: all rank-`(2n-1)` intervals with odd-indexed
/// coefficients `<= B` and even-indexed ones `<= L`, plus `I(prefix)` for
/// every admissible prefix of length `2N-1`, `N < n`. Components sharing an
/// endpoint are merged.
pub fn build_cover(b: u64, n: u64, l: u64, budget: u64) -> Result<CoverSpec> {
    if b < 1 || n < 1 || l < 1 {
        return Err(Error::invalid("B, n and L must all be at least 1"));
    }
    let raw = cover_raw_size(b, n, l).unwrap_or(u128::MAX);
    if raw > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "cover intervals",
            needed: raw,
            budget: budget as u128,
        });
    }
    let nn = n as usize;
    let parts: Vec<Vec<RationalInterval>> = (1..=b)
        .into_par_iter()
        .map(|k1| {
            let mut out = Vec::new();
            let mut prefix = vec![k1];
            collect_cover(&mut prefix, b, nn, l, &mut out);
            out
        })
        .collect();
    let all: Vec<RationalInterval> = parts.into_iter().flatten().collect();
    let raw_count = all.len() as u64;
    let intervals = merge(all);
    let a: Vec<u64> = (1..=n).map(|j| 2 * j - 1).collect();
    let phi_a = vec![b; nn];
    let declared_count_bound = count_bound_formula(&a, &phi_a, l)?;
    let phi = vec![Some(b); nn];
    let two = BigRational::from_integer(2.into());
    let five_thirds = BigRational::new(5.into(), 3.into());
    Ok(CoverSpec {
        b,
        n,
        l,
        intervals,
        raw_count,
        declared_count_bound,
        declared_measure_bound: measure_bound_formula(&phi, l, &two),
        declared_measure_bound_alt: measure_bound_formula(&phi, l, &five_thirds),
    })
}

/// `cover.contains(x)`.
pub fn cover_contains(cover: &CoverSpec, x: &QuadraticSurd) -> bool {
    cover.contains(x)
}

/// `q_N` of `[0; k_1..k_N]` for every tuple in `[1, K]^N`, folded through `f`.
fn for_each_q<T: Send>(
    n: u32,
    k: u64,
    init: impl Fn() -> T + Sync + Send,
    f: impl Fn(&mut T, u64) + Sync + Send,
    reduce: impl Fn(T, T) -> T + Sync + Send,
) -> T {
    fn rec<T>(depth: u32, n: u32, k: u64, q: u64, qp: u64, acc: &mut T, f: &impl Fn(&mut T, u64)) {
        if depth == n {
            f(acc, q);
            return;
        }
        for kk in 1..=k {
            rec(depth + 1, n, k, kk * q + qp, q, acc, f);
        }
    }
    (1..=k)
        .into_par_iter()
        .map(|k1| {
            let mut acc = init();
            rec(1, n, k, k1, 1, &mut acc, &f);
            acc
        })
        .collect::<Vec<T>>()
        .into_iter()
        .fold(init(), &reduce)
}

fn check_qsum_args(n: u32, k: u64, budget: u64) -> Result<()> {
    if n < 1 || k < 1 {
        return Err(Error::invalid("qsum needs N >= 1 and K >= 1"));
    }
    let terms = checked_pow(k, n as u64).unwrap_or(u128::MAX);
    if terms > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "qsum terms",
            needed: terms,
            budget: budget as u128,
        });
    }
    // q_N <= (K+1)^N must fit comfortably in 64 bits.
    if checked_pow(k + 1, n as u64).map_or(true, |m| m >= 1u128 << 62) {
        return Err(Error::invalid("qsum denominators exceed 64 bits"));
    }
    Ok(())
}

/// Exact `sum_{k_1..k_N <= K} 1/q_N(k_1..k_N)^2`.
///
/// Besides the term budget, the big-integer work (squared limb counts of
/// every fraction addition) is capped at `budget`; [`qsum_bounds`] handles
/// larger cases.
pub fn qsum_truncated(n: u32, k: u64, budget: u64) -> Result<BigRational> {
    check_qsum_args(n, k, budget)?;
    let mut qs: Vec<u64> = for_each_q(
        n,
        k,
        Vec::new,
        |acc: &mut Vec<u64>, q| acc.push(q),
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    qs.sort_unstable();
    let mut distinct: Vec<(u64, u64)> = Vec::new();
    for q in qs {
        match distinct.last_mut() {
            Some((v, c)) if *v == q => *c += 1,
            _ => distinct.push((q, 1)),
        }
    }
    let mut work: u128 = 0;
    tree_sum(&distinct, &mut work, budget as u128)
}

fn limbs(x: &BigInt) -> u128 {
    x.bits() as u128 / 64 + 1
}

/// `sum c/q^2` by pairwise addition of reduced fractions. Each addition is
/// charged the square of its operand size in limbs.
fn tree_sum(items: &[(u64, u64)], work: &mut u128, cap: u128) -> Result<BigRational> {
    if let [(q, c)] = items {
        return Ok(BigRational::new(
            BigInt::from(*c),
            BigInt::from(*q) * BigInt::from(*q),
        ));
    }
    let (l, r) = items.split_at(items.len() / 2);
    let a = tree_sum(l, work, cap)?;
    let b = tree_sum(r, work, cap)?;
    let size = limbs(a.denom()) + limbs(b.denom());
    *work += size * size;
    if *work > cap {
        return Err(Error::BudgetExceeded {
            what: "qsum exact arithmetic",
            needed: *work,
            budget: cap,
        });
    }
    Ok(a + b)
}

/// Certified `(lower, upper)` bounds on the same sum, each a dyadic rational
/// with `frac_bits` fractional bits (term-wise floor and ceiling).
pub fn qsum_bounds(
    n: u32,
    k: u64,
    frac_bits: u32,
    budget: u64,
) -> Result<(BigRational, BigRational)> {
    check_qsum_args(n, k, budget)?;
    if frac_bits > 100 {
        return Err(Error::invalid("at most 100 fractional bits"));
    }
    let one = 1u128 << frac_bits;
    let (lo, hi) = for_each_q(
        n,
        k,
        || (0u128, 0u128),
        |acc: &mut (u128, u128), q| {
            let q2 = q as u128 * q as u128;
            let fl = one / q2;
            acc.0 += fl;
            acc.1 += if fl * q2 == one { fl } else { fl + 1 };
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    );
    let den = BigInt::one() << frac_bits as usize;
    Ok((
        BigRational::new(lo.into(), den.clone()),
        BigRational::new(hi.into(), den),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn rank_intervals() {
        let i = rank_interval(&[3]).unwrap();
        assert_eq!((i.lo.clone(), i.hi.clone()), (r(1, 4), r(1, 3)));
        let j = rank_interval(&[1, 1]).unwrap();
        assert_eq!((j.lo.clone(), j.hi.clone()), (r(1, 2), r(2, 3)));
        let k = rank_interval(&[2, 2]).unwrap();
        // [0; 2, y] for y in [2, 3) sweeps 2/5 up to 3/7.
        assert_eq!((k.lo, k.hi), (r(2, 5), r(3, 7)));
        assert!(rank_interval(&[]).is_err());
        assert!(rank_interval(&[1, 0]).is_err());
    }

    #[test]
    fn tail_measures() {
        assert_eq!(tail_union_measure(&[], 0).unwrap(), r(1, 1));
        assert_eq!(tail_union_measure(&[], 2).unwrap(), r(1, 3));
        let t = tail_union_measure(&[1], 1).unwrap();
        assert!(t > rank_interval(&[1]).unwrap().length() / r(9, 1));
    }

    #[test]
    fn cover_interval_contains_tails() {
        let i = cover_interval_i(&[1], 1).unwrap();
        assert_eq!((i.lo.clone(), i.hi.clone()), (r(2, 3), r(1, 1)));
        for k in 2..=50 {
            assert!(rank_interval(&[1, k]).unwrap().is_subset_of(&i));
        }
        let i = cover_interval_i(&[2, 1], 3).unwrap();
        for k in 4..=100 {
            assert!(rank_interval(&[2, 1, k]).unwrap().is_subset_of(&i));
        }
    }

    #[test]
    fn tiny_covers() {
        let c = build_cover(1, 1, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.count(), 1);
        assert_eq!(
            (c.intervals[0].lo.clone(), c.intervals[0].hi.clone()),
            (r(1, 2), r(1, 1))
        );
        assert_eq!(c.declared_count_bound, 1);
        let c2 = build_cover(4, 2, 7, DEFAULT_BUDGET).unwrap();
        assert_eq!(c2.declared_count_bound, 3 * 4 + 7);
        let c3 = build_cover(2, 2, 5, DEFAULT_BUDGET).unwrap();
        assert!(c3.measure_within_bound());
        assert_eq!(c3.declared_measure_bound, r(121, 144) + r(2, 5));
    }

    #[test]
    fn measure_brackets_contain_exact_sum() {
        let c = build_cover(3, 3, 6, DEFAULT_BUDGET).unwrap();
        let exact = c.total_measure();
        let (lo, hi) = c.measure_bounds(40);
        assert!(lo <= exact && exact <= hi);
        assert!(c.measure_at_most(&exact));
        assert!(!c.measure_at_most(&(&exact - r(1, 1_000_000_000))));
    }

    #[test]
    fn cover_membership() {
        let s2 = QuadraticSurd::from_i64(-1, 1, 2).unwrap(); // sqrt2 - 1
        assert!(!build_cover(1, 1, 1, DEFAULT_BUDGET).unwrap().contains(&s2));
        assert!(build_cover(2, 1, 1, DEFAULT_BUDGET).unwrap().contains(&s2));
        let g = QuadraticSurd::from_i64(-1, 2, 5).unwrap(); // xi_5 - 1
        assert!(build_cover(1, 3, 10, DEFAULT_BUDGET).unwrap().contains(&g));
    }

    #[test]
    fn cover_budget() {
        assert!(matches!(
            build_cover(10, 5, 10, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn qsums() {
        assert_eq!(qsum_truncated(1, 4, DEFAULT_BUDGET).unwrap(), r(205, 144));
        let s = qsum_truncated(2, 50, DEFAULT_BUDGET).unwrap();
        assert!(s < r(2, 1));
        let (lo, hi) = qsum_bounds(2, 50, 96, DEFAULT_BUDGET).unwrap();
        assert!(lo <= s && s <= hi);
        assert!(qsum_truncated(3, 200, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn formulas() {
        assert_eq!(count_bound_formula(&[1, 3], &[5, 5], 2).unwrap(), 15 + 2);
        let m = measure_bound_formula(&[Some(1), None], 4, &r(2, 1));
        assert_eq!(m, r(8, 9) + r(1, 2));
    }
}
