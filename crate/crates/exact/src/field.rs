//! Prime-field elements with a runtime modulus.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use crate::ring::{FieldRing, Ring};
use crate::Rat;

/// Value in [0, p) for an odd prime p carried alongside the value.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Fp {
    v: u64,
    p: u64,
}

impl Fp {
    pub fn new(v: u64, p: u64) -> Self {
        debug_assert!(p >= 2);
        Fp { v: v % p, p }
    }

    pub fn from_i64(v: i64, p: u64) -> Self {
        let r = v.rem_euclid(p as i64);
        Fp { v: r as u64, p }
    }

    pub fn value(&self) -> u64 {
        self.v
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = Fp::new(1, self.p);
        let mut b = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }

    /// Reduce a rational modulo p; `None` when the denominator vanishes mod p.
    pub fn from_rat(r: &Rat, p: u64) -> Option<Self> {
        let den = bigint_mod_u64(r.denom(), p);
        if den == 0 {
            return None;
        }
        let num = bigint_mod_u64(r.numer(), p);
        Some(Fp::new(num, p).mul(&Fp::new(den, p).inv_unchecked()))
    }

    /// Reduce an integer modulo p.
    pub fn from_bigint(n: &BigInt, p: u64) -> Self {
        Fp::new(bigint_mod_u64(n, p), p)
    }

    fn inv_unchecked(&self) -> Self {
        debug_assert!(self.v != 0);
        self.pow(self.p - 2)
    }
}

pub fn bigint_mod_u64(n: &BigInt, p: u64) -> u64 {
    let m = n.mod_floor(&BigInt::from(p));
    debug_assert!(!m.is_negative());
    m.to_u64().expect("residue fits in u64")
}

impl Ring for Fp {
    fn zero_like(&self) -> Self {
        Fp { v: 0, p: self.p }
    }
    fn one_like(&self) -> Self {
        Fp { v: 1 % self.p, p: self.p }
    }
    fn is_zero(&self) -> bool {
        self.v == 0
    }
    fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        let mut s = self.v + rhs.v;
        if s >= self.p {
            s -= self.p;
        }
        Fp { v: s, p: self.p }
    }
    fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        let s = if self.v >= rhs.v { self.v - rhs.v } else { self.v + self.p - rhs.v };
        Fp { v: s, p: self.p }
    }
    fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        Fp { v: ((self.v as u128 * rhs.v as u128) % self.p as u128) as u64, p: self.p }
    }
    fn neg(&self) -> Self {
        Fp { v: if self.v == 0 { 0 } else { self.p - self.v }, p: self.p }
    }
}

impl FieldRing for Fp {
    fn inv(&self) -> Option<Self> {
        if self.v == 0 {
            None
        } else {
            Some(self.inv_unchecked())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn inverse_round_trip() {
        let p = 1_000_003u64;
        for v in [1u64, 2, 17, 65, p - 1] {
            let x = Fp::new(v, p);
            let i = x.inv().unwrap();
            assert_eq!(x.mul(&i).value(), 1);
        }
        assert!(Fp::new(0, p).inv().is_none());
    }

    #[test]
    fn rational_reduction() {
        let p = 97u64;
        let r = Rat::new(BigInt::one(), BigInt::from(3));
        let x = Fp::from_rat(&r, p).unwrap();
        // 1/3 mod 97 = 65 because 3 * 65 = 195 = 2*97 + 1
        assert_eq!(x.value(), 65);
        let bad = Rat::new(BigInt::one(), BigInt::from(97));
        assert!(Fp::from_rat(&bad, p).is_none());
    }

    #[test]
    fn negatives_reduce_into_range() {
        let p = 11u64;
        assert_eq!(Fp::from_i64(-3, p).value(), 8);
        assert_eq!(Fp::from_bigint(&BigInt::from(-25), p).value(), 8);
    }
}
