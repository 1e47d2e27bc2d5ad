use num_bigint::{BigInt, BigUint};
use num_traits::Signed;
use patdist_exact::crt::encode_mod;
use patdist_exact::poly::taylor_inv_normalized;
use patdist_exact::{
    crt_combine, fraction_reconstruct, prime_stream, rational_reconstruct, DensePoly, ExtFloat,
    Fp, Rat,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn crt_round_trip(vals in prop::collection::vec(0u64..u64::MAX, 1..6)) {
        let primes: Vec<u64> = prime_stream(31, 0).take(vals.len()).collect();
        let residues: Vec<(u64, u64)> =
            vals.iter().zip(&primes).map(|(&v, &p)| (v % p, p)).collect();
        let (x, m) = crt_combine(&residues).unwrap();
        prop_assert!(x < m);
        for &(v, p) in &residues {
            prop_assert_eq!(&x % BigUint::from(p), BigUint::from(v));
        }
    }

    #[test]
    fn rational_reconstruction_is_left_inverse_of_encoding(
        num in -1_000_000i64..1_000_000, den in 1i64..1_000_000,
    ) {
        let r = Rat::new(BigInt::from(num), BigInt::from(den));
        // modulus comfortably above 2*max(num, den)^2
        let primes: Vec<u64> = prime_stream(31, 0).take(3).collect();
        let m = primes.iter().map(|&p| BigUint::from(p)).product::<BigUint>();
        if let Some(x) = encode_mod(&r, &m) {
            let back = rational_reconstruct(&x, &m).unwrap();
            prop_assert_eq!(back, r);
        }
    }

    #[test]
    fn fraction_reconstruction_congruence(
        bc in prop::collection::vec(0i64..101, 1..5),
        ac in prop::collection::vec(0i64..101, 0..5),
    ) {
        let p = 101u64;
        // A with constant term 1 so the series exists
        let mut a_coeffs = vec![Fp::new(1, p)];
        a_coeffs.extend(ac.iter().map(|&c| Fp::from_i64(c, p)));
        let a = DensePoly::from_coeffs(a_coeffs);
        let b = DensePoly::from_coeffs(bc.iter().map(|&c| Fp::from_i64(c, p)).collect());
        let d = a.deg().unwrap().max(b.deg().unwrap_or(0));
        let n = 2 * d + 1;
        let inv = DensePoly::from_coeffs(taylor_inv_normalized(&a, n));
        let mut series = b.mul_trunc(&inv, n).coeffs().to_vec();
        series.resize(n, Fp::new(0, p));
        let (rb, ra) = fraction_reconstruct(&series, d).unwrap();
        // invariant: A * series = B (mod z^(2d+1)) in the coefficient field
        let lhs = ra.mul_trunc(&DensePoly::from_coeffs(series.clone()), n);
        let mut lhs = lhs.coeffs().to_vec();
        lhs.resize(n, Fp::new(0, p));
        let mut rhs = rb.coeffs().to_vec();
        rhs.resize(n, Fp::new(0, p));
        prop_assert_eq!(lhs, rhs);
        // normalization
        prop_assert_eq!(ra.coeff(0).unwrap().value(), 1);
    }

    #[test]
    fn float_tracks_exact_rationals(
        an in -10_000_000i64..10_000_000, ad in 1i64..10_000_000,
        bn in -10_000_000i64..10_000_000, bd in 1i64..10_000_000,
    ) {
        prop_assume!(an != 0 && bn != 0);
        let prec = 96u32;
        let fx = ExtFloat::from_rat(&Rat::new(BigInt::from(an), BigInt::from(ad)), prec);
        let fy = ExtFloat::from_rat(&Rat::new(BigInt::from(bn), BigInt::from(bd)), prec);
        // per-operation error: compare against exact arithmetic on the
        // rounded operands (cancellation may amplify input rounding, which
        // is not the operation's doing)
        let x = fx.to_rat();
        let y = fy.to_rat();
        let tol = Rat::new(BigInt::from(4), BigInt::from(1) << (prec as u64 - 1));
        let check = |exact: Rat, approx: ExtFloat| {
            if exact == Rat::new(BigInt::from(0), BigInt::from(1)) {
                return approx.to_rat() == exact;
            }
            let err = (approx.to_rat() - &exact) / &exact;
            err.abs() <= tol.abs()
        };
        prop_assert!(check(&x + &y, fx.add(&fy)));
        prop_assert!(check(&x - &y, fx.sub(&fy)));
        prop_assert!(check(&x * &y, fx.mul(&fy)));
        prop_assert!(check(&x / &y, fx.div(&fy)));
    }
}
