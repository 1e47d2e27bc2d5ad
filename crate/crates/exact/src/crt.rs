//! Chinese remaindering and rational number reconstruction.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ExactError;
use crate::Rat;

/// Combine residues into the unique x with 0 <= x < prod(moduli) and
/// x = value_i (mod modulus_i) for every i.
///
/// Moduli need not be prime but must be pairwise coprime.
pub fn crt_combine(residues: &[(u64, u64)]) -> Result<(BigUint, BigUint), ExactError> {
    if residues.is_empty() {
        return Err(ExactError::Input("empty residue list".into()));
    }
    let mut x = BigUint::from(residues[0].0 % residues[0].1);
    let mut m = BigUint::from(residues[0].1);
    for &(v, p) in &residues[1..] {
        let pb = BigUint::from(p);
        if m.gcd(&pb) != BigUint::one() {
            return Err(ExactError::NonCoprimeModuli);
        }
        // x' = x + m * ((v - x) * m^{-1} mod p)
        let m_mod_p = (&m % &pb).to_u64().expect("fits");
        let m_inv = mod_inv_u64(m_mod_p % p, p).ok_or(ExactError::NonCoprimeModuli)?;
        let x_mod_p = (&x % &pb).to_u64().expect("fits");
        let diff = (v % p + p - x_mod_p % p) % p;
        let k = ((diff as u128 * m_inv as u128) % p as u128) as u64;
        x += &m * BigUint::from(k);
        m *= pb;
    }
    Ok((x, m))
}

fn mod_inv_u64(a: u64, m: u64) -> Option<u64> {
    // extended Euclid on (a, m)
    let (mut r0, mut r1) = (a as i128, m as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m as i128) as u64)
}

/// Recover n/d from x mod M with |n| <= sqrt(M/2) and 0 < d <= sqrt(M/2),
/// using the half-bound stopping rule of the extended Euclidean algorithm.
pub fn rational_reconstruct(x: &BigUint, modulus: &BigUint) -> Result<Rat, ExactError> {
    if x >= modulus {
        return Err(ExactError::Input("residue not reduced modulo M".into()));
    }
    if x.is_zero() {
        return Ok(Rat::zero());
    }
    let bound = BigInt::from((modulus / 2u32).sqrt());
    let (mut r0, mut r1) = (BigInt::from(modulus.clone()), BigInt::from(x.clone()));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    let num = if t1.is_negative() { -&r1 } else { r1.clone() };
    let den = t1.abs();
    let fail = || ExactError::ReconstructionFailure(modulus.bits());
    if den.is_zero() || den > bound {
        return Err(fail());
    }
    if num.gcd(&den) != BigInt::one() {
        return Err(fail());
    }
    // safety: verify n = d * x (mod M)
    let mb = BigInt::from(modulus.clone());
    let lhs = num.mod_floor(&mb);
    let rhs = (&den * BigInt::from(x.clone())).mod_floor(&mb);
    if lhs != rhs {
        return Err(fail());
    }
    Ok(Rat::new(num, den))
}

/// Encode a rational modulo M: n * d^{-1} mod M. `None` if gcd(d, M) != 1.
pub fn encode_mod(r: &Rat, modulus: &BigUint) -> Option<BigUint> {
    let mb = BigInt::from(modulus.clone());
    let d = r.denom().mod_floor(&mb);
    let eg = d.extended_gcd(&mb);
    if eg.gcd != BigInt::one() {
        return None;
    }
    let inv = eg.x.mod_floor(&mb);
    let v = (r.numer().mod_floor(&mb) * inv).mod_floor(&mb);
    Some(v.to_biguint().expect("non-negative"))
}
