//! Quadratic surds `(P + sqrt d)/Q` and their eventually periodic continued
//! fractions.
//!
//! Expansion runs the classical PQa recurrence on the state `(P, Q)`:
//!
//! ```text
//! a_j     = floor((P_j + sqrt d) / Q_j)
//! P_{j+1} = a_j Q_j - P_j
//! Q_{j+1} = (d - P_{j+1}^2) / Q_j
//! ```
//!
//! which stays integral as long as `Q_0 | d - P_0^2`. The state sequence is
//! eventually periodic and determines the tail, so a cycle in `(P, Q)` is
//! exactly a period of the expansion.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{is_square_big, is_squarefree_u64, isqrt_big};
use crate::error::{Error, Result};

/// The real number `(P + sqrt d) / Q`, stored with `Q | d - P^2`.
///
/// Equality is equality of the represented real numbers, so differently
/// scaled representations compare equal.
#[derive(Clone, Debug)]
pub struct QuadraticSurd {
    p: BigInt,
    q: BigInt,
    d: BigInt,
}

impl QuadraticSurd {
    /// Builds `(p + sqrt d)/q`, rescaling to `(kp + sqrt(k^2 d))/(kq)` when
    /// needed so that `q | d - p^2`.
    pub fn new(p: BigInt, q: BigInt, d: BigInt) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::invalid("surd denominator is zero"));
        }
        if d <= BigInt::one() {
            return Err(Error::invalid(format!("surd radicand {d} must exceed 1")));
        }
        if is_square_big(&d) {
            return Err(Error::invalid(format!(
                "surd radicand {d} is a perfect square"
            )));
        }
        let rem = &d - &p * &p;
        let g = q.gcd(&rem);
        let k = q.abs() / g;
        if k.is_one() {
            return Ok(QuadraticSurd { p, q, d });
        }
        let k2 = &k * &k;
        Ok(QuadraticSurd {
            p: p * &k,
            q: q * &k,
            d: d * k2,
        })
    }

    pub fn from_i64(p: i64, q: i64, d: i64) -> Result<Self> {
        QuadraticSurd::new(p.into(), q.into(), d.into())
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn floor(&self) -> BigInt {
        let s = isqrt_big(&self.d);
        if self.q.is_positive() {
            Integer::div_floor(&(&self.p + s), &self.q)
        } else {
            Integer::div_floor(&(&self.p + s + 1u32), &self.q)
        }
    }

    /// `self - floor(self)`, a surd in `(0, 1)`.
    pub fn fract(&self) -> QuadraticSurd {
        let f = self.floor();
        QuadraticSurd {
            p: &self.p - f * &self.q,
            q: self.q.clone(),
            d: self.d.clone(),
        }
    }

    /// Exact comparison with a rational number.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        // x - a/b = ((bP - aQ) + b sqrt d) / (bQ) with b > 0.
        let a = r.numer();
        let b = r.denom();
        let c = b * &self.p - a * &self.q;
        let num_sign = if !c.is_negative() || b * b * &self.d > &c * &c {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        if self.q.is_positive() {
            num_sign
        } else {
            num_sign.reverse()
        }
    }

    /// Rough `f64` value, for display only.
    pub fn approx_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        let d = self.d.to_f64().unwrap_or(f64::NAN);
        (self.p.to_f64().unwrap_or(f64::NAN) + d.sqrt()) / self.q.to_f64().unwrap_or(f64::NAN)
    }
}

impl PartialEq for QuadraticSurd {
    fn eq(&self, other: &Self) -> bool {
        self.q.sign() == other.q.sign()
            && &self.p * &other.q == &other.p * &self.q
            && &self.d * &other.q * &other.q == &other.d * &self.q * &self.q
    }
}

impl Eq for QuadraticSurd {}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+√{})/{}", self.p, self.d, self.q)
    }
}

/// `xi_D`, the standard generator of the ring of integers of `Q(sqrt D)`:
/// `sqrt D` for `D = 2, 3 (mod 4)` and `(1 + sqrt D)/2` for `D = 1 (mod 4)`.
pub fn make_xi(d: u64) -> Result<QuadraticSurd> {
    if d <= 1 {
        return Err(Error::invalid(format!("D = {d} must be greater than 1")));
    }
    if d % 4 == 0 {
        return Err(Error::invalid(format!("D = {d} is divisible by 4")));
    }
    if !is_squarefree_u64(d) {
        return Err(Error::invalid(format!("D = {d} is not squarefree")));
    }
    if d % 4 == 1 {
        QuadraticSurd::new(BigInt::one(), BigInt::from(2), BigInt::from(d))
    } else {
        QuadraticSurd::new(BigInt::zero(), BigInt::one(), BigInt::from(d))
    }
}

/// An eventually periodic continued fraction
/// `[u_0; u_1, ..., u_{t-1}, (u_t, ..., u_{t+s-1})]`.
///
/// The preperiod always holds at least `u_0`, so a purely periodic number is
/// written with its period rotated by one. `u_0` may be any integer; later
/// coefficients are positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicCF {
    preperiod: Vec<BigInt>,
    period: Vec<BigInt>,
}

impl PeriodicCF {
    pub fn new(preperiod: Vec<BigInt>, period: Vec<BigInt>) -> Result<Self> {
        if preperiod.is_empty() {
            return Err(Error::invalid("preperiod must contain u_0"));
        }
        if period.is_empty() {
            return Err(Error::invalid("period must be nonempty"));
        }
        if preperiod[1..]
            .iter()
            .chain(&period)
            .any(|u| !u.is_positive())
        {
            return Err(Error::invalid("coefficients after u_0 must be >= 1"));
        }
        let period = minimal_rotation_period(period);
        Ok(PeriodicCF { preperiod, period })
    }

    pub fn from_i64(preperiod: &[i64], period: &[i64]) -> Result<Self> {
        PeriodicCF::new(
            preperiod.iter().map(|&x| BigInt::from(x)).collect(),
            period.iter().map(|&x| BigInt::from(x)).collect(),
        )
    }

    pub fn preperiod(&self) -> &[BigInt] {
        &self.preperiod
    }

    pub fn period(&self) -> &[BigInt] {
        &self.period
    }

    /// `u_j`.
    pub fn coefficient_at(&self, j: usize) -> &BigInt {
        let t = self.preperiod.len();
        if j < t {
            &self.preperiod[j]
        } else {
            &self.period[(j - t) % self.period.len()]
        }
    }

    /// Convergents `p_j/q_j` for `j = 0..=n`.
    pub fn convergents(&self, n: usize) -> Vec<Convergent> {
        let coeffs: Vec<BigInt> = (0..=n).map(|j| self.coefficient_at(j).clone()).collect();
        convergents_of(&coeffs)
    }

    /// Largest `u_j` over odd `j`, with the smallest odd index attaining it.
    ///
    /// Scanning `j = 1 ..= t + 2s` is enough: from index `t` on, the pair
    /// (parity of `j`, phase in the period) repeats with period at most `2s`.
    pub fn max_odd_coefficient(&self) -> (BigInt, usize) {
        let end = self.preperiod.len() + 2 * self.period.len();
        self.max_odd_in_window(end)
    }

    /// Same scan over `j = 1 ..= end`.
    pub fn max_odd_in_window(&self, end: usize) -> (BigInt, usize) {
        let mut best = BigInt::zero();
        let mut at = 1;
        for j in (1..=end).step_by(2) {
            let u = self.coefficient_at(j);
            if *u > best {
                best = u.clone();
                at = j;
            }
        }
        (best, at)
    }

    /// Reconstructs the exact surd from the expansion.
    pub fn evaluate(&self) -> Result<QuadraticSurd> {
        // Purely periodic tail y = [b_0; ..., b_{l-1}, y] = (p y + p')/(q y + q').
        let pc = convergents_of(&self.period);
        let l = pc.len();
        let (p, q) = (&pc[l - 1].p, &pc[l - 1].q);
        let (pp, qp) = if l >= 2 {
            (pc[l - 2].p.clone(), pc[l - 2].q.clone())
        } else {
            (BigInt::one(), BigInt::zero())
        };
        // q y^2 + (q' - p) y - p' = 0, positive root.
        let u = p - &qp;
        let disc = &u * &u + BigInt::from(4) * q * &pp;
        if is_square_big(&disc) {
            return Err(Error::invalid("continued fraction encodes a rational"));
        }
        let v = BigInt::from(2) * q;
        // Fold the preperiod: x = (A y + B)/(C y + D).
        let pre = convergents_of(&self.preperiod);
        let t = pre.len();
        let (a, c) = (&pre[t - 1].p, &pre[t - 1].q);
        let (b, dd) = if t >= 2 {
            (pre[t - 2].p.clone(), pre[t - 2].q.clone())
        } else {
            (BigInt::one(), BigInt::zero())
        };
        // y = (u + sqrt disc)/v, so x = (alpha + beta sqrt disc)/(gamma + eps sqrt disc).
        let alpha = a * &u + &b * &v;
        let beta = a.clone();
        let gamma = c * &u + &dd * &v;
        let eps = c.clone();
        let rat = &alpha * &gamma - &beta * &eps * &disc;
        let coef = &beta * &gamma - &alpha * &eps;
        let den = &gamma * &gamma - &eps * &eps * &disc;
        let d = &coef * &coef * &disc;
        if coef.is_positive() {
            QuadraticSurd::new(rat, den, d)
        } else {
            QuadraticSurd::new(-rat, -den, d)
        }
    }
}

impl fmt::Display for PeriodicCF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[BigInt]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "[{};", self.preperiod[0])?;
        if self.preperiod.len() > 1 {
            write!(f, " {},", join(&self.preperiod[1..]))?;
        }
        write!(f, " ({})]", join(&self.period))
    }
}

/// Shortest cyclic generator of a period.
fn minimal_rotation_period(period: Vec<BigInt>) -> Vec<BigInt> {
    let s = period.len();
    for len in 1..s {
        if s % len == 0 && (len..s).all(|i| period[i] == period[i % len]) {
            return period[..len].to_vec();
        }
    }
    period
}

/// A convergent `p/q` with its index; index `-1` and `-2` are the seeds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigInt,
    pub q: BigInt,
    pub index: i64,
}

impl Convergent {
    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.p.clone(), self.q.clone())
    }
}

/// Convergents of the finite continued fraction `[c_0; c_1, ..., c_n]`.
pub fn convergents_of(coeffs: &[BigInt]) -> Vec<Convergent> {
    let (mut p2, mut p1) = (BigInt::zero(), BigInt::one());
    let (mut q2, mut q1) = (BigInt::one(), BigInt::zero());
    let mut out = Vec::with_capacity(coeffs.len());
    for (j, u) in coeffs.iter().enumerate() {
        let p = u * &p1 + &p2;
        let q = u * &q1 + &q2;
        out.push(Convergent {
            p: p.clone(),
            q: q.clone(),
            index: j as i64,
        });
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
    }
    out
}

#[derive(Clone, PartialEq, Eq)]
struct PqState {
    p: BigInt,
    q: BigInt,
}

struct Pqa<'a> {
    d: &'a BigInt,
    s: BigInt,
}

impl Pqa<'_> {
    fn coeff(&self, st: &PqState) -> BigInt {
        if st.q.is_positive() {
            Integer::div_floor(&(&st.p + &self.s), &st.q)
        } else {
            Integer::div_floor(&(&st.p + &self.s + 1u32), &st.q)
        }
    }

    fn step(&self, st: &PqState) -> PqState {
        let a = self.coeff(st);
        let p = &a * &st.q - &st.p;
        let q = (self.d - &p * &p) / &st.q;
        PqState { p, q }
    }
}

/// Expands a quadratic surd into its eventually periodic continued fraction
/// with minimal period (Floyd cycle detection on the PQa state).
pub fn expand(x: &QuadraticSurd) -> PeriodicCF {
    let pqa = Pqa {
        d: &x.d,
        s: isqrt_big(&x.d),
    };
    let x0 = PqState {
        p: x.p.clone(),
        q: x.q.clone(),
    };
    let mut tort = pqa.step(&x0);
    let mut hare = pqa.step(&tort);
    while tort != hare {
        tort = pqa.step(&tort);
        hare = pqa.step(&pqa.step(&hare));
    }
    // Start of the cycle.
    let mut mu = 0usize;
    tort = x0.clone();
    while tort != hare {
        tort = pqa.step(&tort);
        hare = pqa.step(&hare);
        mu += 1;
    }
    // Length of the cycle.
    let mut lam = 1usize;
    hare = pqa.step(&tort);
    while tort != hare {
        hare = pqa.step(&hare);
        lam += 1;
    }
    let t = mu.max(1);
    let mut coeffs = Vec::with_capacity(t + lam);
    let mut st = x0;
    for _ in 0..t + lam {
        coeffs.push(pqa.coeff(&st));
        st = pqa.step(&st);
    }
    let period = coeffs.split_off(t);
    PeriodicCF {
        preperiod: coeffs,
        period,
    }
}

/// Expansion of `xi_D`.
pub fn expand_xi(d: u64) -> Result<PeriodicCF> {
    Ok(expand(&make_xi(d)?))
}

/// `(u, j)`: the largest odd-indexed coefficient of `xi_D` and the smallest
/// odd index where it occurs.
pub fn max_odd_coefficient(d: u64) -> Result<(BigInt, usize)> {
    Ok(expand_xi(d)?.max_odd_coefficient())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cf(pre: &[i64], per: &[i64]) -> PeriodicCF {
        PeriodicCF::from_i64(pre, per).unwrap()
    }

    #[test]
    fn xi_cases() {
        assert_eq!(
            make_xi(2).unwrap(),
            QuadraticSurd::from_i64(0, 1, 2).unwrap()
        );
        assert_eq!(
            make_xi(5).unwrap(),
            QuadraticSurd::from_i64(1, 2, 5).unwrap()
        );
        assert!(make_xi(12).is_err());
        assert!(make_xi(1).is_err());
        assert!(make_xi(18).is_err());
    }

    #[test]
    fn normalization_rescales() {
        // 2 does not divide 3 - 0^2, so sqrt(3)/2 is stored as sqrt(12)/4.
        let x = QuadraticSurd::from_i64(0, 2, 3).unwrap();
        assert_eq!(x.q(), &BigInt::from(4));
        assert_eq!(x.d(), &BigInt::from(12));
        assert!(QuadraticSurd::from_i64(1, 1, 4).is_err());
        assert!(QuadraticSurd::from_i64(1, 0, 5).is_err());
    }

    #[test]
    fn known_expansions() {
        assert_eq!(expand_xi(2).unwrap(), cf(&[1], &[2]));
        assert_eq!(expand_xi(5).unwrap(), cf(&[1], &[1]));
        assert_eq!(expand_xi(13).unwrap(), cf(&[2], &[3]));
        assert_eq!(expand_xi(7).unwrap(), cf(&[2], &[1, 1, 1, 4]));
        let neg = QuadraticSurd::from_i64(-3, 1, 2).unwrap(); // sqrt2 - 3
        assert_eq!(expand(&neg), cf(&[-2], &[2]));
    }

    #[test]
    fn coefficient_indexing() {
        let c = cf(&[2], &[1, 1, 1, 4]);
        assert_eq!(c.coefficient_at(4), &BigInt::from(4));
        assert_eq!(c.coefficient_at(8), &BigInt::from(4));
        assert_eq!(cf(&[1], &[1]).coefficient_at(1_000_000), &BigInt::one());
    }

    #[test]
    fn convergent_values() {
        let c = expand_xi(2).unwrap().convergents(2);
        let got: Vec<(i64, i64)> = c
            .iter()
            .map(|x| {
                (
                    x.p.clone().try_into().unwrap(),
                    x.q.clone().try_into().unwrap(),
                )
            })
            .collect();
        assert_eq!(got, vec![(1, 1), (3, 2), (7, 5)]);
        let f = convergents_of(&[0, 1, 1].map(BigInt::from));
        assert_eq!(f[2].to_rational(), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn evaluation_inverts_expansion() {
        assert_eq!(cf(&[1], &[1]).evaluate().unwrap(), make_xi(5).unwrap());
        assert_eq!(cf(&[1], &[2]).evaluate().unwrap(), make_xi(2).unwrap());
        assert_eq!(cf(&[2], &[3]).evaluate().unwrap(), make_xi(13).unwrap());
        let x = QuadraticSurd::from_i64(7, -3, 11).unwrap();
        assert_eq!(expand(&x).evaluate().unwrap(), x);
    }

    #[test]
    fn rotated_period_is_minimized() {
        assert_eq!(cf(&[1], &[2, 2, 2]).period().len(), 1);
        assert_eq!(cf(&[1], &[1, 2, 1, 2]).period().len(), 2);
    }

    #[test]
    fn odd_maxima() {
        assert_eq!(max_odd_coefficient(2).unwrap(), (BigInt::from(2), 1));
        assert_eq!(max_odd_coefficient(5).unwrap(), (BigInt::from(1), 1));
        // sqrt 7 = [2; (1,1,1,4)]: u_4 = 4 is even-indexed, u_8 likewise,
        // so odd indices only see 1.
        assert_eq!(max_odd_coefficient(7).unwrap(), (BigInt::from(1), 1));
    }

    #[test]
    fn rational_comparison() {
        let x = make_xi(2).unwrap();
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        assert_eq!(x.cmp_rational(&r(7, 5)), Ordering::Greater);
        assert_eq!(x.cmp_rational(&r(3, 2)), Ordering::Less);
        let y = QuadraticSurd::from_i64(0, -1, 2).unwrap();
        assert_eq!(y.cmp_rational(&r(-7, 5)), Ordering::Less);
        assert_eq!(x.fract().cmp_rational(&r(2, 5)), Ordering::Greater);
        assert_eq!(x.fract().cmp_rational(&r(1, 2)), Ordering::Less);
    }
}
