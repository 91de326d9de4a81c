//! Arithmetic in `H = Q(sqrt D)` written in the basis `(1, xi_D)`.
//!
//! Besides trace, norm and total positivity this module builds the objects
//! used to force short vectors in a trace form: the elements
//! `alpha_i = p_i - q_i xi'` from the convergents of `xi_D`, the
//! semiconvergents `B_r = alpha_{2i-1} + r alpha_{2i}`, the codifferent
//! element `delta` with `Tr(delta B_r) = 1`, and the transfer of an
//! `O_H`-lattice to an integral `Z`-lattice through `Tr(delta Q(.))`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::is_positive_definite;
use crate::surd_cf::{expand_xi, make_xi, PeriodicCF};

/// Which generator `xi_D` the field uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum XiCase {
    /// `D = 2, 3 (mod 4)`, `xi = sqrt D`.
    Sqrt,
    /// `D = 1 (mod 4)`, `xi = (1 + sqrt D)/2`.
    Half,
}

/// A real quadratic field `Q(sqrt D)` with `D > 1` squarefree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldContext {
    d: u64,
    case: XiCase,
}

impl FieldContext {
    pub fn new(d: u64) -> Result<Self> {
        make_xi(d)?;
        let case = if d % 4 == 1 {
            XiCase::Half
        } else {
            XiCase::Sqrt
        };
        Ok(FieldContext { d, case })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn case(&self) -> XiCase {
        self.case
    }

    /// `xi^2 = xi_sq.0 + xi_sq.1 * xi`.
    fn xi_sq(&self) -> (BigRational, BigRational) {
        match self.case {
            XiCase::Sqrt => (rat(self.d as i64), BigRational::zero()),
            XiCase::Half => (rat(((self.d - 1) / 4) as i64), BigRational::one()),
        }
    }

    pub fn element(&self, a: BigRational, b: BigRational) -> FieldElement {
        FieldElement { a, b, ctx: *self }
    }

    pub fn int(&self, a: i64, b: i64) -> FieldElement {
        self.element(rat(a), rat(b))
    }

    pub fn xi(&self) -> FieldElement {
        self.int(0, 1)
    }

    /// The element `c` with codifferent `(1/c) O_H`: `2 sqrt D` or `sqrt D`.
    pub fn codifferent_denominator(&self) -> FieldElement {
        match self.case {
            XiCase::Sqrt => self.int(0, 2),
            XiCase::Half => self.int(-1, 2),
        }
    }

    fn expansion(&self) -> PeriodicCF {
        expand_xi(self.d).expect("context holds a valid D")
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `a + b xi_D` with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldElement {
    a: BigRational,
    b: BigRational,
    ctx: FieldContext,
}

impl FieldElement {
    pub fn a(&self) -> &BigRational {
        &self.a
    }

    pub fn b(&self) -> &BigRational {
        &self.b
    }

    pub fn ctx(&self) -> FieldContext {
        self.ctx
    }

    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    fn same_field(&self, other: &FieldElement) {
        assert_eq!(self.ctx, other.ctx, "elements of different fields");
    }

    pub fn add(&self, other: &FieldElement) -> FieldElement {
        self.same_field(other);
        self.ctx.element(&self.a + &other.a, &self.b + &other.b)
    }

    pub fn sub(&self, other: &FieldElement) -> FieldElement {
        self.same_field(other);
        self.ctx.element(&self.a - &other.a, &self.b - &other.b)
    }

    pub fn scale(&self, k: &BigRational) -> FieldElement {
        self.ctx.element(&self.a * k, &self.b * k)
    }

    pub fn mul(&self, other: &FieldElement) -> FieldElement {
        self.same_field(other);
        let (c0, c1) = self.ctx.xi_sq();
        let bb = &self.b * &other.b;
        let a = &self.a * &other.a + &bb * c0;
        let b = &self.a * &other.b + &self.b * &other.a + bb * c1;
        self.ctx.element(a, b)
    }

    /// The Galois conjugate.
    pub fn conj(&self) -> FieldElement {
        match self.ctx.case {
            XiCase::Sqrt => self.ctx.element(self.a.clone(), -&self.b),
            // xi' = 1 - xi
            XiCase::Half => self.ctx.element(&self.a + &self.b, -&self.b),
        }
    }

    pub fn inverse(&self) -> Result<FieldElement> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        Ok(self.conj().scale(&n.recip()))
    }

    pub fn trace(&self) -> BigRational {
        match self.ctx.case {
            XiCase::Sqrt => &self.a * rat(2),
            XiCase::Half => &self.a * rat(2) + &self.b,
        }
    }

    pub fn norm(&self) -> BigRational {
        match self.ctx.case {
            XiCase::Sqrt => &self.a * &self.a - &self.b * &self.b * rat(self.ctx.d as i64),
            XiCase::Half => {
                let k =
                    BigRational::new(BigInt::from(1) - BigInt::from(self.ctx.d), BigInt::from(4));
                &self.a * &self.a + &self.a * &self.b + &self.b * &self.b * k
            }
        }
    }

    /// Coordinates `(x, y)` with value `x + y sqrt D`.
    pub fn sqrt_coords(&self) -> (BigRational, BigRational) {
        match self.ctx.case {
            XiCase::Sqrt => (self.a.clone(), self.b.clone()),
            XiCase::Half => {
                let half = BigRational::new(1.into(), 2.into());
                (&self.a + &self.b * &half, &self.b * half)
            }
        }
    }

    /// Both real embeddings are strictly positive. Decided exactly: with
    /// value `x + y sqrt D`, this holds iff `x > 0` and `x^2 > y^2 D`.
    pub fn is_totally_positive(&self) -> bool {
        let (x, y) = self.sqrt_coords();
        x.is_positive() && &x * &x > &y * &y * rat(self.ctx.d as i64)
    }

    /// Membership in the codifferent: `Tr(self)` and `Tr(self * xi)` are integers.
    pub fn in_codifferent(&self) -> bool {
        self.trace().is_integer() && self.mul(&self.ctx.xi()).trace().is_integer()
    }

    /// Approximate value of the first embedding (xi > 0), for display.
    pub fn approx_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        let (x, y) = self.sqrt_coords();
        x.to_f64().unwrap_or(f64::NAN) + y.to_f64().unwrap_or(f64::NAN) * (self.ctx.d as f64).sqrt()
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (x, y) = self.sqrt_coords();
        write!(f, "{} + {}·√{}", x, y, self.ctx.d)
    }
}

/// `alpha_i = p_i - q_i xi'` for `i >= -1`, where `p_i/q_i` are the
/// convergents of `xi_D` and `alpha_{-1} = 1`.
pub fn alpha(ctx: FieldContext, i: i64) -> Result<FieldElement> {
    if i < -1 {
        return Err(Error::invalid(format!("alpha index {i} is below -1")));
    }
    if i == -1 {
        return Ok(ctx.int(1, 0));
    }
    let conv = ctx.expansion().convergents(i as usize);
    let c = conv.last().expect("n + 1 convergents");
    let p = BigRational::from_integer(c.p.clone());
    let q = BigRational::from_integer(c.q.clone());
    Ok(match ctx.case {
        XiCase::Sqrt => ctx.element(p, q),
        XiCase::Half => ctx.element(&p - &q, q),
    })
}

/// `[B_0, ..., B_u]` with `B_r = alpha_{2i-1} + r alpha_{2i}` and
/// `u = u_{2i+1}`. Every element is checked to be totally positive.
pub fn semiconvergents(ctx: FieldContext, i: u64) -> Result<Vec<FieldElement>> {
    let cf = ctx.expansion();
    let u = cf.coefficient_at(2 * i as usize + 1).clone();
    let u: u64 = u
        .try_into()
        .map_err(|_| Error::invalid("partial quotient too large to enumerate"))?;
    let lo = alpha(ctx, 2 * i as i64 - 1)?;
    let step = alpha(ctx, 2 * i as i64)?;
    let mut out = Vec::with_capacity(u as usize + 1);
    let mut b = lo;
    for r in 0..=u {
        if !b.is_totally_positive() {
            return Err(Error::assertion(format!(
                "semiconvergent B_{r} = {b} for D = {}, i = {i} is not totally positive",
                ctx.d
            )));
        }
        out.push(b.clone());
        b = b.add(&step);
    }
    Ok(out)
}

/// Finds `delta` in the codifferent, totally positive, with
/// `Tr(delta alpha_{2i-1}) = 1` and `Tr(delta alpha_{2i}) = 0`.
///
/// Writing `delta = (x + y xi)/c`, both trace conditions are linear in the
/// integers `(x, y)`. Because `(alpha_{2i-1}, alpha_{2i})` is a `Z`-basis of
/// `O_H`, the system is unimodular and has exactly one solution: the dual
/// basis vector. `search_limit`, if given, caps `|x|` and `|y|`; the
/// coordinates grow with `i` roughly like the convergents.
pub fn find_delta(ctx: FieldContext, i: u64, search_limit: Option<u64>) -> Result<FieldElement> {
    let a1 = alpha(ctx, 2 * i as i64 - 1)?;
    let a2 = alpha(ctx, 2 * i as i64)?;
    let cinv = ctx.codifferent_denominator().inverse()?;
    let e0 = cinv.clone();
    let e1 = ctx.xi().mul(&cinv);
    let coef = |e: &FieldElement, a: &FieldElement| e.mul(a).trace();
    // [m00 m01; m10 m11] (x, y)^T = (1, 0)^T
    let m00 = coef(&e0, &a1);
    let m01 = coef(&e1, &a1);
    let m10 = coef(&e0, &a2);
    let m11 = coef(&e1, &a2);
    let det = &m00 * &m11 - &m01 * &m10;
    if det.is_zero() {
        return Err(Error::SearchExhausted(format!(
            "trace conditions are degenerate for D = {}, i = {i}",
            ctx.d
        )));
    }
    let x = &m11 / &det;
    let y = -&m10 / &det;
    if !x.is_integer() || !y.is_integer() {
        return Err(Error::SearchExhausted(format!(
            "no codifferent solution for D = {}, i = {i}",
            ctx.d
        )));
    }
    if let Some(cap) = search_limit {
        let limit = BigInt::from(cap);
        if x.numer().abs() > limit || y.numer().abs() > limit {
            return Err(Error::SearchExhausted(format!(
                "delta coordinates ({x}, {y}) exceed search limit {cap}"
            )));
        }
    }
    let delta = ctx.element(x, y).mul(&cinv);
    if !delta.is_totally_positive() {
        return Err(Error::SearchExhausted(format!(
            "the unique codifferent solution for D = {}, i = {i} is not totally positive",
            ctx.d
        )));
    }
    Ok(delta)
}

/// Gram matrix of the `Z`-lattice `(O_H^R, Tr(delta Q(.)))` on the basis
/// `(e_1, xi e_1, ..., e_R, xi e_R)`.
pub fn transfer(gram: &[Vec<FieldElement>], delta: &FieldElement) -> Result<Vec<Vec<BigInt>>> {
    let r = gram.len();
    if r == 0 || gram.iter().any(|row| row.len() != r) {
        return Err(Error::invalid("Gram matrix must be square and nonempty"));
    }
    let ctx = delta.ctx;
    #[allow(clippy::needless_range_loop)]
    for s in 0..r {
        for t in 0..r {
            let g = &gram[s][t];
            if g.ctx != ctx {
                return Err(Error::invalid("Gram entries live in a different field"));
            }
            if !g.is_integral() {
                return Err(Error::invalid("Gram entries must lie in O_H"));
            }
            if *g != gram[t][s] {
                return Err(Error::invalid("Gram matrix is not symmetric"));
            }
        }
    }
    if !delta.in_codifferent() {
        return Err(Error::invalid("delta is not in the codifferent"));
    }
    let basis = [ctx.int(1, 0), ctx.xi()];
    let n = 2 * r;
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for s in 0..r {
        for t in 0..r {
            let dg = delta.mul(&gram[s][t]);
            for (i, wi) in basis.iter().enumerate() {
                for (j, wj) in basis.iter().enumerate() {
                    let tr = dg.mul(wi).mul(wj).trace();
                    debug_assert!(tr.is_integer());
                    out[2 * s + i][2 * t + j] = tr.to_integer();
                }
            }
        }
    }
    if !is_positive_definite(&out)? {
        return Err(Error::invalid("transferred form is not positive definite"));
    }
    Ok(out)
}

/// The `O_H` vector behind an integer coordinate vector in the transfer
/// basis: `w_s = v_{2s} + v_{2s+1} xi`.
pub fn lift_vector(ctx: FieldContext, v: &[BigInt]) -> Vec<FieldElement> {
    v.chunks(2)
        .map(|c| {
            let a = BigRational::from_integer(c[0].clone());
            let b = BigRational::from_integer(c.get(1).cloned().unwrap_or_default());
            ctx.element(a, b)
        })
        .collect()
}

/// `Q(w) = sum_{s,t} G_st w_s w_t` for an `O_H`-Gram matrix.
pub fn quadratic_value(gram: &[Vec<FieldElement>], w: &[FieldElement]) -> FieldElement {
    let ctx = w[0].ctx;
    let mut acc = ctx.int(0, 0);
    for (s, ws) in w.iter().enumerate() {
        for (t, wt) in w.iter().enumerate() {
            acc = acc.add(&gram[s][t].mul(ws).mul(wt));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn trace_and_norm() {
        let f2 = FieldContext::new(2).unwrap();
        let f5 = FieldContext::new(5).unwrap();
        let f13 = FieldContext::new(13).unwrap();
        assert_eq!(f2.int(1, 1).trace(), q(2, 1));
        assert_eq!(f5.xi().trace(), q(1, 1));
        assert_eq!(f13.int(3, 0).trace(), q(6, 1));
        assert_eq!(f2.int(1, 1).norm(), q(-1, 1));
        assert_eq!(f5.xi().norm(), q(-1, 1));
        assert_eq!(f2.int(3, 2).norm(), q(1, 1));
    }

    #[test]
    fn positivity() {
        let f2 = FieldContext::new(2).unwrap();
        assert!(f2.int(3, 2).is_totally_positive());
        assert!(!f2.int(1, 1).is_totally_positive());
        assert!(!f2.int(0, 0).is_totally_positive());
        assert!(f2.int(17, -12).is_totally_positive());
        let f5 = FieldContext::new(5).unwrap();
        // xi_5 = 1.618..., xi_5' = -0.618...
        assert!(!f5.xi().is_totally_positive());
        assert!(f5.int(1, 1).is_totally_positive());
    }

    #[test]
    fn alphas_for_d2() {
        let f2 = FieldContext::new(2).unwrap();
        assert_eq!(alpha(f2, -1).unwrap(), f2.int(1, 0));
        assert_eq!(alpha(f2, 0).unwrap(), f2.int(1, 1));
        assert_eq!(alpha(f2, 1).unwrap(), f2.int(3, 2));
        assert!(alpha(f2, -2).is_err());
    }

    #[test]
    fn semiconvergent_lists() {
        let f2 = FieldContext::new(2).unwrap();
        assert_eq!(
            semiconvergents(f2, 0).unwrap(),
            vec![f2.int(1, 0), f2.int(2, 1), f2.int(3, 2)]
        );
        assert_eq!(
            semiconvergents(f2, 1).unwrap(),
            vec![f2.int(3, 2), f2.int(10, 7), f2.int(17, 12)]
        );
        let f5 = FieldContext::new(5).unwrap();
        assert_eq!(
            semiconvergents(f5, 0).unwrap(),
            vec![f5.int(1, 0), f5.int(1, 1)]
        );
    }

    #[test]
    fn delta_for_d2() {
        let f2 = FieldContext::new(2).unwrap();
        let d = find_delta(f2, 0, Some(1_000_000)).unwrap();
        assert_eq!(d, f2.element(q(1, 2), q(-1, 4)));
        for b in semiconvergents(f2, 0).unwrap() {
            assert_eq!(d.mul(&b).trace(), q(1, 1));
        }
        assert!(d.in_codifferent());
    }

    #[test]
    fn transfer_unit_form() {
        let f2 = FieldContext::new(2).unwrap();
        let d = f2.element(q(1, 2), q(-1, 4));
        let m = transfer(&[vec![f2.int(1, 0)]], &d).unwrap();
        let e: Vec<Vec<BigInt>> = vec![vec![1.into(), (-1).into()], vec![(-1).into(), 2.into()]];
        assert_eq!(m, e);
        let bad = vec![
            vec![f2.int(0, 0), f2.int(1, 0)],
            vec![f2.int(2, 0), f2.int(0, 0)],
        ];
        assert!(transfer(&bad, &d).is_err());
    }

    #[test]
    fn codifferent_denominators() {
        // Tr(x/c) is an integer for every x in O_H.
        for d in [2u64, 3, 5, 13, 21] {
            let ctx = FieldContext::new(d).unwrap();
            let cinv = ctx.codifferent_denominator().inverse().unwrap();
            assert!(cinv.in_codifferent(), "D = {d}");
            assert!(!cinv.scale(&q(1, 2)).in_codifferent(), "D = {d}");
        }
    }
}
