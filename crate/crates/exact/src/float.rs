//! Arbitrary-precision binary floating point.
//!
//! A value is `sign * mant * 2^exp` with the mantissa normalized to exactly
//! `prec` bits. Every operation rounds once, so the relative error per
//! operation is at most 2^(1-prec). The exponent is an i64, which makes
//! underflow or overflow impossible at the magnitudes this crate handles.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

use crate::decimal::sci_parts;
use crate::ring::Ring;
use crate::Rat;

pub const DEFAULT_PREC: u32 = 1024;

#[derive(Clone, Debug)]
pub struct ExtFloat {
    sign: i8,
    mant: BigUint,
    exp: i64,
    prec: u32,
}

impl ExtFloat {
    pub fn zero(prec: u32) -> Self {
        ExtFloat { sign: 0, mant: BigUint::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        ExtFloat::from_u64(1, prec)
    }

    pub fn from_u64(v: u64, prec: u32) -> Self {
        Self::from_parts(1, BigUint::from(v), 0, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Self::from_parts(v.signum() as i8, BigUint::from(v.unsigned_abs()), 0, prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        let sign = if v.is_negative() {
            -1
        } else if Zero::is_zero(v) {
            0
        } else {
            1
        };
        Self::from_parts(sign, v.magnitude().clone(), 0, prec)
    }

    pub fn from_rat(r: &Rat, prec: u32) -> Self {
        if Zero::is_zero(r) {
            return Self::zero(prec);
        }
        let sign = if r.numer().is_negative() { -1 } else { 1 };
        let num = r.numer().magnitude();
        let den = r.denom().magnitude();
        let s = prec as i64 + 2 + den.bits() as i64 - num.bits() as i64;
        let q = if s >= 0 { (num << s as u64) / den } else { num / (den << (-s) as u64) };
        Self::from_parts(sign, q, -s, prec)
    }

    /// Normalize an unrounded (sign, mantissa, exp) triple to `prec` bits,
    /// rounding half away from zero.
    pub fn from_parts(sign: i8, mant: BigUint, mut exp: i64, prec: u32) -> Self {
        if mant.is_zero() || sign == 0 {
            return Self::zero(prec);
        }
        let l = mant.bits();
        let p = prec as u64;
        let mut m = mant;
        if l > p {
            let shift = l - p;
            let round_up = m.bit(shift - 1);
            m >>= shift;
            exp += shift as i64;
            if round_up {
                m += 1u32;
                if m.bits() > p {
                    m >>= 1;
                    exp += 1;
                }
            }
        } else if l < p {
            let shift = p - l;
            m <<= shift;
            exp -= shift as i64;
        }
        ExtFloat { sign, mant: m, exp, prec }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Re-round to a different working precision.
    pub fn with_precision(&self, prec: u32) -> Self {
        if self.prec == prec {
            return self.clone();
        }
        Self::from_parts(self.sign, self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign < 0
    }

    pub fn neg(&self) -> Self {
        let mut r = self.clone();
        r.sign = -r.sign;
        r
    }

    pub fn abs(&self) -> Self {
        let mut r = self.clone();
        r.sign = r.sign.abs();
        r
    }

    fn is_pow2(&self) -> bool {
        self.sign != 0 && self.mant.count_ones() == 1
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.prec, rhs.prec);
        if self.sign == 0 {
            return rhs.clone();
        }
        if rhs.sign == 0 {
            return self.clone();
        }
        let (hi, lo) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        let diff = (hi.exp - lo.exp) as u64;
        if diff > self.prec as u64 + 1 {
            return hi.clone();
        }
        let hm = &hi.mant << diff;
        if hi.sign == lo.sign {
            Self::from_parts(hi.sign, hm + &lo.mant, lo.exp, self.prec)
        } else {
            match hm.cmp(&lo.mant) {
                Ordering::Equal => Self::zero(self.prec),
                Ordering::Greater => Self::from_parts(hi.sign, hm - &lo.mant, lo.exp, self.prec),
                Ordering::Less => Self::from_parts(lo.sign, &lo.mant - hm, lo.exp, self.prec),
            }
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.prec, rhs.prec);
        if self.sign == 0 || rhs.sign == 0 {
            return Self::zero(self.prec);
        }
        let sign = self.sign * rhs.sign;
        // exact power-of-two factors only shift the exponent
        if self.is_pow2() {
            return ExtFloat {
                sign,
                mant: rhs.mant.clone(),
                exp: rhs.exp + self.exp + self.prec as i64 - 1,
                prec: self.prec,
            };
        }
        if rhs.is_pow2() {
            return ExtFloat {
                sign,
                mant: self.mant.clone(),
                exp: self.exp + rhs.exp + self.prec as i64 - 1,
                prec: self.prec,
            };
        }
        Self::from_parts(sign, &self.mant * &rhs.mant, self.exp + rhs.exp, self.prec)
    }

    pub fn div(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.prec, rhs.prec);
        assert!(rhs.sign != 0, "division by zero");
        if self.sign == 0 {
            return Self::zero(self.prec);
        }
        let sign = self.sign * rhs.sign;
        if rhs.is_pow2() {
            return ExtFloat {
                sign,
                mant: self.mant.clone(),
                exp: self.exp - rhs.exp - (self.prec as i64 - 1),
                prec: self.prec,
            };
        }
        let sh = self.prec as i64 + 1;
        let q = (&self.mant << sh as u64) / &rhs.mant;
        Self::from_parts(sign, q, self.exp - rhs.exp - sh, self.prec)
    }

    pub fn recip(&self) -> Self {
        Self::one(self.prec).div(self)
    }

    pub fn powi(&self, mut e: u64) -> Self {
        let mut acc = Self::one(self.prec);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        acc
    }

    /// Exact conversion; every float is a dyadic rational.
    pub fn to_rat(&self) -> Rat {
        if self.sign == 0 {
            return Rat::zero();
        }
        let m = BigInt::from(self.mant.clone()) * self.sign;
        if self.exp >= 0 {
            Rat::from_integer(m << self.exp as u64)
        } else {
            Rat::new(m, BigInt::one() << (-self.exp) as u64)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let take = 53u64.min(self.mant.bits());
        let top = (&self.mant >> (self.mant.bits() - take)).to_u64().unwrap();
        let k = self.exp + (self.mant.bits() - take) as i64;
        let mut v = top as f64;
        if k > 3000 {
            return if self.sign > 0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        if k < -3000 {
            return 0.0;
        }
        v *= 2f64.powi(k as i32);
        if self.sign < 0 {
            -v
        } else {
            v
        }
    }

    pub fn cmp_abs(&self, rhs: &Self) -> Ordering {
        match (self.sign == 0, rhs.sign == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        self.exp.cmp(&rhs.exp).then_with(|| self.mant.cmp(&rhs.mant))
    }

    /// |self - rhs| / |rhs| as f64; rhs must be nonzero.
    pub fn rel_diff(&self, rhs: &Self) -> f64 {
        self.sub(rhs).abs().div(&rhs.abs()).to_f64()
    }

    /// Scientific notation with `sig` significant decimal digits, e.g. 9.12559e-2.
    pub fn sci(&self, sig: u32) -> String {
        if self.sign == 0 {
            return "0".into();
        }
        let (digits, k) = sci_parts(&self.mant, &BigUint::one(), self.exp, sig);
        let s = if self.sign < 0 { "-" } else { "" };
        if digits.len() == 1 {
            format!("{s}{digits}e{k}")
        } else {
            format!("{s}{}.{}e{k}", &digits[..1], &digits[1..])
        }
    }
}

impl PartialEq for ExtFloat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtFloat {}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            o => return o,
        }
        match self.sign {
            0 => Ordering::Equal,
            1 => self.cmp_abs(other),
            _ => other.cmp_abs(self),
        }
    }
}

macro_rules! ref_binop {
    ($tr:ident, $method:ident) => {
        impl std::ops::$tr<&ExtFloat> for &ExtFloat {
            type Output = ExtFloat;
            fn $method(self, rhs: &ExtFloat) -> ExtFloat {
                ExtFloat::$method(self, rhs)
            }
        }
    };
}
ref_binop!(Add, add);
ref_binop!(Sub, sub);
ref_binop!(Mul, mul);
ref_binop!(Div, div);

impl std::ops::Neg for &ExtFloat {
    type Output = ExtFloat;
    fn neg(self) -> ExtFloat {
        ExtFloat::neg(self)
    }
}

impl Ring for ExtFloat {
    fn zero_like(&self) -> Self {
        ExtFloat::zero(self.prec)
    }
    fn one_like(&self) -> Self {
        ExtFloat::one(self.prec)
    }
    fn is_zero(&self) -> bool {
        ExtFloat::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        ExtFloat::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        ExtFloat::sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        ExtFloat::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        ExtFloat::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn round_trip_small_integers() {
        for v in [0i64, 1, -1, 7, -42, 1 << 40] {
            let f = ExtFloat::from_i64(v, 128);
            assert_eq!(f.to_rat(), Rat::from_integer(BigInt::from(v)));
        }
    }

    #[test]
    fn dyadic_arithmetic_is_exact() {
        let p = 256;
        let a = ExtFloat::from_rat(&rat(3, 4), p);
        let b = ExtFloat::from_rat(&rat(1, 8), p);
        assert_eq!(a.add(&b).to_rat(), rat(7, 8));
        assert_eq!(a.mul(&b).to_rat(), rat(3, 32));
        assert_eq!(a.sub(&a).to_rat(), Rat::zero());
        assert_eq!(a.div(&b).to_rat(), rat(6, 1));
    }

    #[test]
    fn pow2_fast_path_matches() {
        let p = 128;
        let a = ExtFloat::from_rat(&rat(5, 7), p);
        let q = ExtFloat::from_rat(&rat(1, 4), p);
        let via_mul = a.mul(&q);
        let direct = ExtFloat::from_rat(&rat(5, 28), p);
        assert!(via_mul.rel_diff(&direct) < 1e-35);
    }

    #[test]
    fn relative_error_bound() {
        let p = 64u32;
        let cases = [
            (rat(1, 3), rat(7, 11)),
            (rat(-5, 9), rat(13, 3)),
            (rat(1000001, 7), rat(-1, 999983)),
        ];
        for (x, y) in cases {
            let fx = ExtFloat::from_rat(&x, p);
            let fy = ExtFloat::from_rat(&y, p);
            let tol = 4.0 * 2f64.powi(1 - p as i32);
            for (exact, approx) in [
                (&x + &y, fx.add(&fy)),
                (&x * &y, fx.mul(&fy)),
                (&x / &y, fx.div(&fy)),
            ] {
                let err = (approx.to_rat() - &exact) / &exact;
                let err = ExtFloat::from_rat(&err, 64).to_f64().abs();
                assert!(err <= tol, "err {err} > {tol}");
            }
        }
    }

    #[test]
    fn powering() {
        let p = 128;
        let x = ExtFloat::from_rat(&rat(1, 2), p);
        assert_eq!(x.powi(10).to_rat(), rat(1, 1024));
        let y = ExtFloat::from_rat(&rat(99, 100), p);
        let v = y.powi(1000).to_f64();
        assert!((v - 0.99f64.powi(1000)).abs() < 1e-10);
    }

    #[test]
    fn ordering() {
        let p = 64;
        let a = ExtFloat::from_rat(&rat(-3, 2), p);
        let b = ExtFloat::from_rat(&rat(1, 100), p);
        let c = ExtFloat::from_rat(&rat(5, 2), p);
        assert!(a < b && b < c);
        assert!(ExtFloat::zero(p) > a);
    }

    #[test]
    fn sci_formatting() {
        let p = 256;
        let x = ExtFloat::from_rat(&rat(912559, 10_000_000), p);
        assert_eq!(x.sci(6), "9.12559e-2");
        let y = ExtFloat::from_rat(&rat(-1, 3), p);
        assert_eq!(y.sci(3), "-3.33e-1");
        let tiny = ExtFloat::from_rat(&rat(1, 2), p).powi(1000);
        assert_eq!(tiny.sci(3), "9.33e-302");
    }
}
