//! Exact decimal scientific formatting for huge-exponent values.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::Rat;

/// Render |value| = num * 2^exp2 / den (nonzero) as `sig` decimal digits and
/// a decimal exponent k, such that value = 0.digits * 10^(k+1), i.e. the
/// first digit carries magnitude 10^k. All arithmetic is exact.
pub fn sci_parts(num: &BigUint, den: &BigUint, exp2: i64, sig: u32) -> (String, i64) {
    assert!(!num.is_zero() && !den.is_zero() && sig >= 1);
    let log2 = (num.bits() as f64 - 1.0) + frac_log2(num) + exp2 as f64
        - (den.bits() as f64 - 1.0)
        - frac_log2(den);
    let mut k = (log2 * std::f64::consts::LOG10_2).floor() as i64;
    let lo = pow10(sig as u64 - 1);
    let hi = &lo * BigUint::from(10u32);
    loop {
        let d = digits_for(num, den, exp2, sig, k);
        if d < lo {
            k -= 1;
        } else if d >= hi {
            k += 1;
        } else {
            return (d.to_str_radix(10), k);
        }
    }
}

/// round(num * 2^exp2 / den * 10^(sig-1-k))
fn digits_for(num: &BigUint, den: &BigUint, exp2: i64, sig: u32, k: i64) -> BigUint {
    let t = sig as i64 - 1 - k;
    let mut n = num.clone();
    let mut d = den.clone();
    if t >= 0 {
        n *= pow10(t as u64);
    } else {
        d *= pow10((-t) as u64);
    }
    if exp2 >= 0 {
        n <<= exp2 as u64;
    } else {
        d <<= (-exp2) as u64;
    }
    // round half up
    ((n << 1u32) + &d) / (d << 1u32)
}

fn pow10(e: u64) -> BigUint {
    BigUint::from(10u32).pow(e as u32)
}

fn frac_log2(x: &BigUint) -> f64 {
    let take = 53u64.min(x.bits());
    let top = (x >> (x.bits() - take)).to_u64().unwrap() as f64;
    top.log2() - (take as f64 - 1.0)
}

/// Scientific notation for a rational, `sig` significant digits.
pub fn sci_rat(r: &Rat, sig: u32) -> String {
    if Zero::is_zero(r) {
        return "0".into();
    }
    let (digits, k) = sci_parts(r.numer().magnitude(), r.denom().magnitude(), 0, sig);
    let s = if r.numer().sign() == num_bigint::Sign::Minus { "-" } else { "" };
    if digits.len() == 1 {
        format!("{s}{digits}e{k}")
    } else {
        format!("{s}{}.{}e{k}", &digits[..1], &digits[1..])
    }
}

/// Digits-and-exponent form used for fixed-digit comparisons.
pub fn sci_rat_parts(r: &Rat, sig: u32) -> Option<(String, i64)> {
    if Zero::is_zero(r) {
        return None;
    }
    Some(sci_parts(r.numer().magnitude(), r.denom().magnitude(), 0, sig))
}
