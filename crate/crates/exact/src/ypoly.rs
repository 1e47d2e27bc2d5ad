//! Truncated polynomials in the occurrence-counting variable y.
//!
//! `YPoly<R>` is a polynomial in y reduced modulo y^cap, used as the
//! coefficient ring for bivariate work: a polynomial in z with `YPoly`
//! coefficients is a bivariate polynomial truncated uniformly in y.

use crate::poly::DensePoly;
use crate::ring::{FieldRing, Ring};

/// A polynomial in z whose y-coefficients share a uniform truncation order.
pub type TruncBivarPoly<R> = DensePoly<YPoly<R>>;

pub const NO_CAP: usize = usize::MAX;

#[derive(Clone, PartialEq, Debug)]
pub struct YPoly<R: Ring> {
    c: Vec<R>,
    cap: usize,
}

impl<R: Ring> YPoly<R> {
    pub fn from_coeffs(mut c: Vec<R>, cap: usize) -> Self {
        assert!(cap >= 1);
        if c.len() > cap {
            c.truncate(cap);
        }
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        YPoly { c, cap }
    }

    pub fn zero(cap: usize) -> Self {
        YPoly { c: vec![], cap }
    }

    pub fn constant(v: R, cap: usize) -> Self {
        Self::from_coeffs(vec![v], cap)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn deg(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[R] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Option<&R> {
        self.c.get(i)
    }

    /// Multiply by y^k (shifting up, truncating at cap).
    pub fn shift_y(&self, k: usize) -> Self {
        if self.c.is_empty() || k >= self.cap {
            return Self::zero(self.cap);
        }
        let z = self.c[0].zero_like();
        let mut out = vec![z; k];
        out.extend(self.c.iter().cloned());
        Self::from_coeffs(out, self.cap)
    }

    pub fn eval_y(&self, x: &R) -> R {
        let mut acc = x.zero_like();
        for c in self.c.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    pub fn scale(&self, k: &R) -> Self {
        Self::from_coeffs(self.c.iter().map(|v| v.mul(k)).collect(), self.cap)
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> YPoly<S> {
        YPoly::from_coeffs(self.c.iter().map(&f).collect(), self.cap)
    }

    pub fn retrunc(&self, cap: usize) -> Self {
        Self::from_coeffs(self.c.clone(), cap)
    }

    fn cap_of(&self, rhs: &Self) -> usize {
        debug_assert_eq!(self.cap, rhs.cap, "mismatched y-truncation");
        self.cap
    }
}

impl<R: Ring> Ring for YPoly<R> {
    fn zero_like(&self) -> Self {
        YPoly::zero(self.cap)
    }

    fn one_like(&self) -> Self {
        let one = self.c.first().map(|x| x.one_like()).expect("one_like needs an exemplar");
        YPoly::constant(one, self.cap)
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn add(&self, rhs: &Self) -> Self {
        let cap = self.cap_of(rhs);
        let n = self.c.len().max(rhs.c.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(match (self.c.get(i), rhs.c.get(i)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            });
        }
        Self::from_coeffs(out, cap)
    }

    fn sub(&self, rhs: &Self) -> Self {
        let cap = self.cap_of(rhs);
        let n = self.c.len().max(rhs.c.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(match (self.c.get(i), rhs.c.get(i)) {
                (Some(a), Some(b)) => a.sub(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.neg(),
                (None, None) => unreachable!(),
            });
        }
        Self::from_coeffs(out, cap)
    }

    fn mul(&self, rhs: &Self) -> Self {
        let cap = self.cap_of(rhs);
        if self.c.is_empty() || rhs.c.is_empty() {
            return Self::zero(cap);
        }
        let z = self.c[0].zero_like();
        let n = cap.min(self.c.len() + rhs.c.len() - 1);
        let mut out = vec![z; n];
        for (i, a) in self.c.iter().enumerate() {
            if i >= cap {
                break;
            }
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate() {
                if i + j >= cap {
                    break;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Self::from_coeffs(out, cap)
    }

    fn neg(&self) -> Self {
        YPoly { c: self.c.iter().map(|x| x.neg()).collect(), cap: self.cap }
    }
}

impl<F: FieldRing> FieldRing for YPoly<F> {
    /// Series reciprocal modulo y^cap; `None` when the constant term is not a
    /// unit (that is what makes truncated-ring Euclid Las Vegas).
    fn inv(&self) -> Option<Self> {
        if self.cap == NO_CAP {
            // untruncated polynomials are units only when constant
            if self.deg() == Some(0) {
                return self.c[0].inv().map(|i| YPoly::constant(i, self.cap));
            }
            return None;
        }
        let c0 = self.c.first()?;
        let c0_inv = c0.inv()?;
        let mut s = Vec::with_capacity(self.cap);
        s.push(c0_inv.clone());
        for n in 1..self.cap {
            let mut acc = c0.zero_like();
            for i in 1..=n.min(self.c.len() - 1) {
                acc = acc.add(&self.c[i].mul(&s[n - i]));
            }
            s.push(acc.mul(&c0_inv).neg());
        }
        Some(Self::from_coeffs(s, self.cap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;

    fn yp(coeffs: &[i64], cap: usize, p: u64) -> YPoly<Fp> {
        YPoly::from_coeffs(coeffs.iter().map(|&c| Fp::from_i64(c, p)).collect(), cap)
    }

    #[test]
    fn truncated_product() {
        let p = 101;
        let a = yp(&[1, 1], 3, p); // 1 + y
        let b = a.mul(&a); // 1 + 2y + y^2
        assert_eq!(b, yp(&[1, 2, 1], 3, p));
        let c = b.mul(&a); // (1+y)^3 mod y^3 = 1 + 3y + 3y^2
        assert_eq!(c, yp(&[1, 3, 3], 3, p));
    }

    #[test]
    fn reciprocal_mod_cap() {
        let p = 101;
        let a = yp(&[1, 5, 7, 2], 4, p);
        let inv = a.inv().unwrap();
        assert_eq!(a.mul(&inv), yp(&[1], 4, p));
        // non-unit constant term
        assert!(yp(&[0, 1], 4, p).inv().is_none());
    }

    #[test]
    fn shift_and_eval() {
        let p = 101;
        let a = yp(&[2, 3], 5, p);
        assert_eq!(a.shift_y(2), yp(&[0, 0, 2, 3], 5, p));
        assert_eq!(a.eval_y(&Fp::new(2, p)).value(), 8);
        // shifting past the cap leaves nothing
        assert!(a.shift_y(5).is_zero());
    }
}
