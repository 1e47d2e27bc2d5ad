//! Helpers for building reduced rationals from scaled-integer arithmetic.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::Rat;

/// Construct the reduced rational num/den. Powers of two in the denominator
/// are stripped by shifts; a general odd part falls back to a gcd. This keeps
/// the common case of dyadic denominators (uniform models, float conversions)
/// linear-time even at hundreds of kilobits.
pub fn reduce_with_den(num: BigInt, den: BigUint) -> Rat {
    assert!(!den.is_zero(), "zero denominator");
    if num.is_zero() {
        return Rat::zero();
    }
    let (sign, mut n) = num.into_parts();
    let mut d = den;
    let common2 = n
        .trailing_zeros()
        .unwrap_or(0)
        .min(d.trailing_zeros().unwrap_or(0));
    if common2 > 0 {
        n >>= common2;
        d >>= common2;
    }
    let odd = &d >> d.trailing_zeros().unwrap_or(0);
    if !odd.is_one() {
        let g = n.gcd(&odd);
        if !g.is_one() {
            n /= &g;
            d /= &g;
        }
    }
    Rat::new_raw(BigInt::from_biguint(sign, n), BigInt::from_biguint(Sign::Plus, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_standard_reduction() {
        let cases = [
            (6i64, 8u64),
            (-6, 8),
            (5, 7),
            (0, 3),
            (12, 18),
            (1024, 4096),
            (9, 27),
            (-35, 50),
        ];
        for (n, d) in cases {
            let fast = reduce_with_den(BigInt::from(n), BigUint::from(d));
            let slow = Rat::new(BigInt::from(n), BigInt::from(d));
            assert_eq!(fast, slow, "{n}/{d}");
        }
    }

    #[test]
    fn huge_dyadic_is_cheap() {
        let num: BigInt = (BigInt::one() << 100_000u32) * 3 + 7; // odd-ish
        let den = BigUint::one() << 100_000u32;
        let r = reduce_with_den(num.clone() << 3u32, den.clone());
        assert_eq!(r.denom().magnitude(), &(den >> 3u32));
    }
}
