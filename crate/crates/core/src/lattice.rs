//! Positive definite integral lattices: exact short-vector counts and the
//! explicit upper bounds `C(r, n)` and `B(R, m) = C(2R, m)/2`.
//!
//! Enumeration works entirely in integers. With `Delta_k` the leading
//! `(k+1) x (k+1)` minor of `G` (and `Delta_{-1} = 1`), the Bareiss
//! sequence `G_0 = G`, `G_{k+1} = (Delta_k G_k' - b b^T) / Delta_{k-1}` gives
//! integer matrices with
//!
//! ```text
//! Delta_k Q_{G_k}(x, w) = (Delta_k x + b.w)^2 + Delta_{k-1} Q_{G_{k+1}}(w)
//! ```
//!
//! and `Q_{G_k} <= Delta_{k-1} N` on every vector of norm `<= N`. The range
//! of each coordinate is then `|Delta_k x + b.w| <= isqrt(R)` with an exact
//! integer `R`, so no rounding enters the search.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::certified::{exp_int, pi, BoundValue, Interval};
use crate::error::{Error, Result};

/// A symmetric positive definite integer Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramMatrix {
    entries: Vec<Vec<BigInt>>,
}

fn check_square_symmetric(g: &[Vec<BigInt>]) -> Result<()> {
    let r = g.len();
    if r == 0 {
        return Err(Error::invalid("Gram matrix is empty"));
    }
    if g.iter().any(|row| row.len() != r) {
        return Err(Error::invalid("Gram matrix is not square"));
    }
    #[allow(clippy::needless_range_loop)]
    for i in 0..r {
        for j in 0..i {
            if g[i][j] != g[j][i] {
                return Err(Error::invalid(format!(
                    "Gram matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Leading principal minors `Delta_0, ..., Delta_{r-1}` by fraction-free
/// elimination. Stops early (shorter output) once a minor vanishes.
fn leading_minors(g: &[Vec<BigInt>]) -> Vec<BigInt> {
    let r = g.len();
    let mut a: Vec<Vec<BigInt>> = g.to_vec();
    let mut prev = BigInt::one();
    let mut minors = Vec::with_capacity(r);
    for k in 0..r {
        let pivot = a[k][k].clone();
        minors.push(pivot.clone());
        if pivot.is_zero() {
            break;
        }
        for i in k + 1..r {
            for j in k + 1..r {
                let v = (&pivot * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = pivot;
    }
    minors
}

/// True iff every leading principal minor is positive.
pub fn is_positive_definite(g: &[Vec<BigInt>]) -> Result<bool> {
    check_square_symmetric(g)?;
    let m = leading_minors(g);
    Ok(m.len() == g.len() && m.iter().all(|x| x.is_positive()))
}

/// Exact determinant of a square integer matrix (Bareiss with pivoting).
pub fn det(g: &[Vec<BigInt>]) -> Result<BigInt> {
    let r = g.len();
    if r == 0 || g.iter().any(|row| row.len() != r) {
        return Err(Error::invalid("determinant needs a nonempty square matrix"));
    }
    let mut a: Vec<Vec<BigInt>> = g.to_vec();
    let mut prev = BigInt::one();
    let mut sign = BigInt::one();
    for k in 0..r {
        if a[k][k].is_zero() {
            match (k + 1..r).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..r {
            for j in k + 1..r {
                let v = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    Ok(sign * &a[r - 1][r - 1])
}

impl GramMatrix {
    pub fn new(entries: Vec<Vec<BigInt>>) -> Result<Self> {
        if !is_positive_definite(&entries)? {
            return Err(Error::invalid("Gram matrix is not positive definite"));
        }
        Ok(GramMatrix { entries })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        GramMatrix::new(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    pub fn identity(r: usize) -> Self {
        let mut e = vec![vec![BigInt::zero(); r]; r];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = BigInt::one();
        }
        GramMatrix { entries: e }
    }

    /// Gram matrix of the `E_8` root lattice (Cartan matrix).
    pub fn e8() -> Self {
        let mut g = vec![vec![0i64; 8]; 8];
        for (i, row) in g.iter_mut().enumerate() {
            row[i] = 2;
        }
        // Bourbaki labelling: chain 1-3-4-5-6-7-8 with 2 attached to 4.
        let edges = [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)];
        for (a, b) in edges {
            g[a][b] = -1;
            g[b][a] = -1;
        }
        GramMatrix::from_i64(&g).expect("E8 is positive definite")
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<BigInt>] {
        &self.entries
    }

    pub fn det(&self) -> BigInt {
        det(&self.entries).expect("square by construction")
    }

    /// `v^T G v`.
    pub fn norm_of(&self, v: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for (i, vi) in v.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                acc += &self.entries[i][j] * vi * vj;
            }
        }
        acc
    }

    /// Parses the text format: first line `r`, then `r` rows of `r`
    /// integers. `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let r: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("missing rank line".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad rank: {e}")))?;
        if r == 0 {
            return Err(Error::Parse("rank must be at least 1".into()));
        }
        let mut rows = Vec::with_capacity(r);
        for i in 0..r {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {}", i + 1)))?;
            let row: Vec<BigInt> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<BigInt>()
                        .map_err(|e| Error::Parse(format!("bad entry {t:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != r {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {r}",
                    i + 1,
                    row.len()
                )));
            }
            rows.push(row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after the last row".into()));
        }
        GramMatrix::new(rows)
    }

    /// Inverse of [`GramMatrix::parse`] (without comments).
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.rank());
        for row in &self.entries {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

/// Precomputed integer data for the enumeration.
struct Enumerator {
    /// `levels[k]` is `G_k`, of size `(r-k) x (r-k)`.
    levels: Vec<Vec<Vec<i128>>>,
    /// `delta[k + 1] = Delta_k`, `delta[0] = Delta_{-1} = 1`.
    delta: Vec<i128>,
    nmax: i128,
    budget: u64,
    nodes: AtomicU64,
}

fn overflow() -> Error {
    Error::Domain("enumeration exceeds 128-bit integer range".into())
}

fn ck_mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or_else(overflow)
}

fn ck_add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or_else(overflow)
}

fn isqrt_i128(n: i128) -> i128 {
    crate::arith::isqrt_u128(n as u128) as i128
}

impl Enumerator {
    fn new(g: &GramMatrix, nmax: u64, budget: u64) -> Result<Self> {
        let r = g.rank();
        let mut cur: Vec<Vec<i128>> = g
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| x.to_i128().ok_or_else(overflow))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut levels = Vec::with_capacity(r);
        let mut delta = vec![1i128];
        for _ in 0..r {
            let piv = cur[0][0];
            let prev = *delta.last().expect("seeded");
            delta.push(piv);
            let n = cur.len();
            let mut next = vec![vec![0i128; n - 1]; n - 1];
            for i in 1..n {
                for j in 1..n {
                    let v = ck_mul(piv, cur[i][j])?
                        .checked_sub(ck_mul(cur[i][0], cur[0][j])?)
                        .ok_or_else(overflow)?;
                    debug_assert_eq!(v % prev, 0);
                    next[i - 1][j - 1] = v / prev;
                }
            }
            levels.push(std::mem::replace(&mut cur, next));
        }
        Ok(Enumerator {
            levels,
            delta,
            nmax: nmax as i128,
            budget,
            nodes: AtomicU64::new(0),
        })
    }

    fn tick(&self) -> Result<()> {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed);
        if n >= self.budget {
            return Err(Error::BudgetExceeded {
                what: "enumeration nodes",
                needed: n as u128 + 1,
                budget: self.budget as u128,
            });
        }
        Ok(())
    }

    /// Integer range of coordinate `k` given the outer coordinates
    /// `w = v[k+1..]` and `V_{k+1} = Q_{G_{k+1}}(w)`.
    fn range(&self, k: usize, w: &[i128], v_next: i128) -> Result<Option<(i128, i128, i128)>> {
        let dk = self.delta[k + 1];
        let dkm1 = self.delta[k];
        let g = &self.levels[k];
        let mut beta = 0i128;
        for (j, &wj) in w.iter().enumerate() {
            beta = ck_add(beta, ck_mul(g[0][j + 1], wj)?)?;
        }
        let cap = ck_mul(dk, self.nmax)?;
        let rem = ck_mul(dkm1, cap - v_next)?;
        if rem < 0 {
            return Ok(None);
        }
        let s = isqrt_i128(rem);
        let lo = Integer::div_ceil(&(-s - beta), &dk);
        let hi = Integer::div_floor(&(s - beta), &dk);
        if lo > hi {
            return Ok(None);
        }
        Ok(Some((lo, hi, beta)))
    }

    /// Counts vectors by norm below level `k`, with `w = v[k+1..]` fixed.
    fn descend(&self, k: usize, w: &mut Vec<i128>, v_next: i128, counts: &mut [u64]) -> Result<()> {
        self.tick()?;
        let Some((lo, hi, beta)) = self.range(k, w, v_next)? else {
            return Ok(());
        };
        let dk = self.delta[k + 1];
        let dkm1 = self.delta[k];
        for x in lo..=hi {
            let lin = ck_add(ck_mul(dk, x)?, beta)?;
            let vk = ck_add(ck_mul(lin, lin)?, ck_mul(dkm1, v_next)?)? / dk;
            if k == 0 {
                if vk >= 1 && vk <= self.nmax {
                    counts[vk as usize] += 1;
                }
            } else {
                w.insert(0, x);
                self.descend(k - 1, w, vk, counts)?;
                w.remove(0);
            }
        }
        Ok(())
    }

    fn run(&self) -> Result<Vec<u64>> {
        let r = self.levels.len();
        let top = r - 1;
        let size = self.nmax as usize + 1;
        let Some((lo, hi, _)) = self.range(top, &[], 0)? else {
            return Ok(vec![0; size]);
        };
        let dk = self.delta[top + 1];
        let partial: Vec<Result<Vec<u64>>> = (lo..=hi)
            .into_par_iter()
            .map(|x| {
                let mut counts = vec![0u64; size];
                let lin = ck_mul(dk, x)?;
                let vk = ck_mul(lin, lin)? / dk;
                if top == 0 {
                    if vk >= 1 && vk <= self.nmax {
                        counts[vk as usize] += 1;
                    }
                } else {
                    let mut w = vec![x];
                    self.descend(top - 1, &mut w, vk, &mut counts)?;
                }
                Ok(counts)
            })
            .collect();
        let mut total = vec![0u64; size];
        for p in partial {
            for (t, c) in total.iter_mut().zip(p?) {
                *t += c;
            }
        }
        Ok(total)
    }
}

/// Default cap on enumeration nodes.
pub const DEFAULT_ENUM_BUDGET: u64 = 1_000_000_000;

/// `counts[n] = #{v : v^T G v = n}` for `1 <= n <= nmax` (`counts[0] = 0`).
pub fn count_vectors_upto(g: &GramMatrix, nmax: u64, budget: u64) -> Result<Vec<u64>> {
    if nmax == 0 {
        return Err(Error::invalid("norm bound must be at least 1"));
    }
    Enumerator::new(g, nmax, budget)?.run()
}

/// `N(n) = #{v in Z^r : v^T G v = n}`.
pub fn count_vectors(g: &GramMatrix, n: u64) -> Result<u64> {
    Ok(count_vectors_upto(g, n, DEFAULT_ENUM_BUDGET)?[n as usize])
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn binomial(n: u64, k: u64) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `omega_m = pi^{m/2} / Gamma(m/2 + 1)`, the volume of the unit `m`-ball,
/// written as `rational * pi^{floor(m/2)}`.
fn ball_volume(m: u64, prec: u32) -> Interval {
    let s = m / 2;
    let coef = if m % 2 == 0 {
        BigRational::new(BigInt::one(), factorial(s))
    } else {
        // Gamma(s + 3/2) = (2s+2)! sqrt(pi) / (4^{s+1} (s+1)!)
        BigRational::new(
            num_traits::pow(BigInt::from(4), (s + 1) as usize) * factorial(s + 1),
            factorial(2 * s + 2),
        )
    };
    pi(prec).powu(s).scale_rational(&coef)
}

/// `n^{m/2}`.
fn half_power(n: u64, m: u64, prec: u32) -> Result<Interval> {
    let base = Interval::from_int(n, prec).powu(m / 2);
    if m % 2 == 0 {
        Ok(base)
    } else {
        Ok(base.mul(&Interval::from_int(n, prec).sqrt()?))
    }
}

fn working(prec: u32) -> u32 {
    prec + 32
}

fn finish(x: Interval, prec: u32) -> BoundValue {
    BoundValue::new(Interval::from_bounds(x.lo().clone(), x.hi().clone(), prec))
}

/// `C(r, n)`: `2r` for `n = 1`, `max(480, 2r(r-1))` for `n = 2`, and for
/// `n >= 3`
/// `omega_r n^{r/2} / sqrt(det) + sum_{m<r} binom(r, m) omega_m n^{m/2}`.
pub fn bound_c(r: u64, n: u64, det: &BigInt, prec: u32) -> Result<BoundValue> {
    if r < 1 || n < 1 {
        return Err(Error::invalid("bound_C needs r >= 1 and n >= 1"));
    }
    if !det.is_positive() {
        return Err(Error::invalid("determinant must be positive"));
    }
    match n {
        1 => return Ok(BoundValue::exact_int(2 * r, prec)),
        2 => {
            let v = BigInt::from(2 * r) * BigInt::from(r - 1);
            return Ok(BoundValue::exact_int(v.max(BigInt::from(480)), prec));
        }
        _ => {}
    }
    let w = working(prec);
    let lead = ball_volume(r, w)
        .mul(&half_power(n, r, w)?)
        .div(&Interval::from_int(det.clone(), w).sqrt()?)?;
    let mut acc = lead;
    for m in 0..r {
        let term = ball_volume(m, w)
            .mul(&half_power(n, m, w)?)
            .mul(&Interval::from_int(binomial(r, m), w));
        acc = acc.add(&term);
    }
    Ok(finish(acc, prec))
}

/// The simplified bound for `r, n >= 3`:
/// `omega_r n^{r/2}/sqrt(det) + (r omega_{r-1} + e^330 (9/10)^r / sqrt n) n^{(r-1)/2}`.
pub fn bound_c_simplified(r: u64, n: u64, det: &BigInt, prec: u32) -> Result<BoundValue> {
    if r < 3 || n < 3 {
        return Err(Error::Domain(format!(
            "simplified bound needs r >= 3 and n >= 3 (got r = {r}, n = {n})"
        )));
    }
    if !det.is_positive() {
        return Err(Error::invalid("determinant must be positive"));
    }
    let w = working(prec);
    let lead = ball_volume(r, w)
        .mul(&half_power(n, r, w)?)
        .div(&Interval::from_int(det.clone(), w).sqrt()?)?;
    let nine_tenths = Interval::from_ratio(9, 10, w).powu(r);
    let big = exp_int(330, w)
        .mul(&nine_tenths)
        .div(&Interval::from_int(n, w).sqrt()?)?;
    let mid = Interval::from_int(r, w)
        .mul(&ball_volume(r - 1, w))
        .add(&big);
    let total = lead.add(&mid.mul(&half_power(n, r - 1, w)?));
    Ok(finish(total, prec))
}

/// `B(R, m) = C(2R, m, det = 1) / 2`.
pub fn bound_b(r: u64, m: u64, prec: u32) -> Result<BoundValue> {
    if r < 1 || m < 1 {
        return Err(Error::invalid("bound_B needs R >= 1 and m >= 1"));
    }
    Ok(bound_c(2 * r, m, &BigInt::one(), prec)?.halve())
}
