//! Dense univariate polynomials over an element-carried ring, plus the
//! Euclidean kernels: polynomial fraction reconstruction (Padé style) and
//! Newton interpolation.

use crate::error::ExactError;
use crate::ring::{FieldRing, Ring};

/// Coefficients from degree 0 upward; no trailing zeros.
#[derive(Clone, PartialEq, Debug)]
pub struct DensePoly<R: Ring> {
    c: Vec<R>,
}

impl<R: Ring> DensePoly<R> {
    pub fn from_coeffs(mut c: Vec<R>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        DensePoly { c }
    }

    pub fn zero() -> Self {
        DensePoly { c: vec![] }
    }

    pub fn constant(v: R) -> Self {
        Self::from_coeffs(vec![v])
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; zero polynomial reports None.
    pub fn deg(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[R] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Option<&R> {
        self.c.get(i)
    }

    pub fn leading(&self) -> Option<&R> {
        self.c.last()
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> DensePoly<S> {
        DensePoly::from_coeffs(self.c.iter().map(f).collect())
    }

    pub fn add(&self, rhs: &Self) -> Self {
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
        Self::from_coeffs(out)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
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
        Self::from_coeffs(out)
    }

    pub fn neg(&self) -> Self {
        DensePoly { c: self.c.iter().map(|x| x.neg()).collect() }
    }

    pub fn scale(&self, k: &R) -> Self {
        Self::from_coeffs(self.c.iter().map(|x| x.mul(k)).collect())
    }

    /// Classical quadratic product.
    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let z = self.c[0].zero_like();
        let mut out = vec![z; self.c.len() + rhs.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Self::from_coeffs(out)
    }

    /// Product truncated to degree < cap.
    pub fn mul_trunc(&self, rhs: &Self, cap: usize) -> Self {
        if self.is_zero() || rhs.is_zero() || cap == 0 {
            return Self::zero();
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
        Self::from_coeffs(out)
    }

    /// Multiply by z^k.
    pub fn shl(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let z = self.c[0].zero_like();
        let mut out = vec![z; k];
        out.extend(self.c.iter().cloned());
        DensePoly { c: out }
    }

    pub fn eval(&self, x: &R) -> R {
        let mut acc = x.zero_like();
        for c in self.c.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Lowest index with nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.c.iter().position(|x| !x.is_zero())
    }

    /// Drop the z^k factor; polynomial must be divisible by z^k.
    pub fn shr(&self, k: usize) -> Self {
        debug_assert!(self.valuation().is_none_or(|v| v >= k));
        DensePoly { c: self.c.iter().skip(k).cloned().collect() }
    }
}

impl<R: FieldRing> DensePoly<R> {
    /// Euclidean division; the divisor's leading coefficient must be a unit.
    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self), ExactError> {
        let dd = d.deg().ok_or_else(|| ExactError::Input("division by zero polynomial".into()))?;
        let lc_inv = d.leading().unwrap().inv().ok_or(ExactError::NonUnitLeading)?;
        if self.deg().is_none_or(|n| n < dd) {
            return Ok((Self::zero(), self.clone()));
        }
        let mut rem = self.c.clone();
        let n = rem.len() - 1;
        let z = rem[0].zero_like();
        let mut quo = vec![z; n - dd + 1];
        for i in (dd..=n).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let q = rem[i].mul(&lc_inv);
            for j in 0..dd {
                rem[i - dd + j] = rem[i - dd + j].sub(&q.mul(&d.c[j]));
            }
            rem[i] = rem[i].zero_like();
            quo[i - dd] = q;
        }
        Ok((Self::from_coeffs(quo), Self::from_coeffs(rem)))
    }

    pub fn gcd(&self, rhs: &Self) -> Result<Self, ExactError> {
        let mut a = self.clone();
        let mut b = rhs.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b)?;
            a = std::mem::replace(&mut b, r);
        }
        // normalize monic when possible
        if let Some(lc) = a.leading() {
            if let Some(inv) = lc.inv() {
                return Ok(a.scale(&inv));
            }
        }
        Ok(a)
    }
}

/// Taylor coefficients s_0..s_upto of 1/A for A with constant term 1.
pub fn taylor_inv_normalized<R: Ring>(a: &DensePoly<R>, upto: usize) -> Vec<R> {
    let a0 = a.coeff(0).expect("nonzero polynomial");
    assert!(*a0 == a0.one_like(), "constant coefficient must be 1");
    let one = a0.one_like();
    let mut s = Vec::with_capacity(upto + 1);
    s.push(one);
    for n in 1..=upto {
        let mut acc = a0.zero_like();
        for i in 1..=n.min(a.deg().unwrap_or(0)) {
            let ai = &a.coeffs()[i];
            if !ai.is_zero() {
                acc = acc.add(&ai.mul(&s[n - i]));
            }
        }
        s.push(acc.neg());
    }
    s
}

/// Reconstruct (B, A) with deg B <= d, deg A <= d, A(0) = 1, gcd(B, A) = 1 and
/// B = A * series (mod z^(2d+1)), by the extended Euclidean algorithm on
/// (z^(2d+1), series) stopped at remainder degree <= d.
pub fn fraction_reconstruct<F: FieldRing>(
    series: &[F],
    d: usize,
) -> Result<(DensePoly<F>, DensePoly<F>), ExactError> {
    if series.len() < 2 * d + 1 {
        return Err(ExactError::Input(format!(
            "need {} series terms for degree bound {}, got {}",
            2 * d + 1,
            d,
            series.len()
        )));
    }
    let one = series[0].one_like();
    let n = 2 * d + 1;
    let mut m = vec![series[0].zero_like(); n + 1];
    m[n] = one.clone();
    let mut r0 = DensePoly::from_coeffs(m);
    let mut r1 = DensePoly::from_coeffs(series[..n].to_vec());
    let mut t0 = DensePoly::zero();
    let mut t1 = DensePoly::constant(one.clone());
    while r1.deg().is_some_and(|deg| deg > d) {
        let (q, r2) = r0.div_rem(&r1)?;
        let t2 = t0.sub(&q.mul(&t1));
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    // reduce the pair; the congruence survives because any common factor has
    // a unit constant term (otherwise A(0) = 0 below).
    let g = r1.gcd(&t1)?;
    if g.deg().is_some_and(|d| d > 0) {
        r1 = r1.div_rem(&g)?.0;
        t1 = t1.div_rem(&g)?.0;
    }
    let a0 = t1.coeff(0).cloned().ok_or(ExactError::DegenerateFraction)?;
    let a0_inv = a0.inv().ok_or(ExactError::DegenerateFraction)?;
    Ok((r1.scale(&a0_inv), t1.scale(&a0_inv)))
}

/// Unique polynomial of degree < points.len() through the given points
/// (Newton divided differences).
pub fn interpolate<F: FieldRing>(points: &[(F, F)]) -> Result<DensePoly<F>, ExactError> {
    if points.is_empty() {
        return Err(ExactError::Input("no interpolation points".into()));
    }
    let n = points.len();
    // divided-difference table
    let mut dd: Vec<F> = points.iter().map(|(_, v)| v.clone()).collect();
    let mut coeffs = vec![dd[0].clone()];
    for level in 1..n {
        for i in 0..n - level {
            let dx = points[i + level].0.sub(&points[i].0);
            let inv = dx.inv().ok_or(ExactError::RepeatedAbscissa)?;
            dd[i] = dd[i + 1].sub(&dd[i]).mul(&inv);
        }
        dd.truncate(n - level);
        coeffs.push(dd[0].clone());
    }
    // expand Newton form
    let mut poly = DensePoly::zero();
    let mut basis = DensePoly::constant(points[0].0.one_like());
    for (i, c) in coeffs.iter().enumerate() {
        poly = poly.add(&basis.scale(c));
        if i + 1 < n {
            let xi = &points[i].0;
            basis = basis.mul(&DensePoly::from_coeffs(vec![xi.neg(), xi.one_like()]));
        }
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;
    use crate::Rat;
    use num_bigint::BigInt;

    fn fp_poly(coeffs: &[i64], p: u64) -> DensePoly<Fp> {
        DensePoly::from_coeffs(coeffs.iter().map(|&c| Fp::from_i64(c, p)).collect())
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn divrem_identity() {
        let p = 101;
        let a = fp_poly(&[3, 0, 2, 7, 1], p);
        let b = fp_poly(&[5, 1, 2], p);
        let (q, r) = a.div_rem(&b).unwrap();
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.deg().unwrap_or(0) < b.deg().unwrap());
    }

    #[test]
    fn geometric_series_reconstruction() {
        let series: Vec<Rat> = (0..5).map(|_| rat(1, 1)).collect();
        let (b, a) = fraction_reconstruct(&series, 2).unwrap();
        assert_eq!(b, DensePoly::from_coeffs(vec![rat(1, 1)]));
        assert_eq!(a, DensePoly::from_coeffs(vec![rat(1, 1), rat(-1, 1)]));
    }

    #[test]
    fn squared_geometric_reconstruction() {
        // 1/(1-z)^2 = 1 + 2z + 3z^2 + ...
        let series: Vec<Rat> = (0..5).map(|i| rat(i + 1, 1)).collect();
        let (b, a) = fraction_reconstruct(&series, 2).unwrap();
        assert_eq!(b, DensePoly::from_coeffs(vec![rat(1, 1)]));
        assert_eq!(a, DensePoly::from_coeffs(vec![rat(1, 1), rat(-2, 1), rat(1, 1)]));
    }

    #[test]
    fn fibonacci_reconstruction() {
        // z/(1-z-z^2) = z + z^2 + 2z^3 + 3z^4 + ...
        let mut fib = vec![rat(0, 1), rat(1, 1)];
        while fib.len() < 5 {
            let n = fib.len();
            fib.push(&fib[n - 1] + &fib[n - 2]);
        }
        let (b, a) = fraction_reconstruct(&fib, 2).unwrap();
        assert_eq!(b, DensePoly::from_coeffs(vec![rat(0, 1), rat(1, 1)]));
        assert_eq!(a, DensePoly::from_coeffs(vec![rat(1, 1), rat(-1, 1), rat(-1, 1)]));
    }

    #[test]
    fn reconstruction_congruence_holds_mod_p() {
        let p = 1_000_003u64;
        // random-ish proper fraction over Fp
        let b_true = fp_poly(&[2, 9, 4], p);
        let a_true = fp_poly(&[1, 5, 0, 3, 8], p);
        let d = 4;
        let inv = taylor_inv_normalized(&a_true, 2 * d);
        let series: Vec<Fp> =
            DensePoly::from_coeffs(inv).mul_trunc(&b_true, 2 * d + 1).coeffs().to_vec();
        let mut series = series;
        series.resize(2 * d + 1, Fp::new(0, p));
        let (b, a) = fraction_reconstruct(&series, d).unwrap();
        assert_eq!(b, b_true);
        assert_eq!(a, a_true);
    }

    #[test]
    fn interpolate_constant_and_quadratic() {
        let p = 101;
        let pts = vec![(Fp::new(0, p), Fp::new(3, p))];
        assert_eq!(interpolate(&pts).unwrap(), fp_poly(&[3], p));

        let pts: Vec<(Fp, Fp)> =
            [(0, 1), (1, 2), (2, 5)].iter().map(|&(x, y)| (Fp::new(x, p), Fp::new(y, p))).collect();
        assert_eq!(interpolate(&pts).unwrap(), fp_poly(&[1, 0, 1], p));
    }

    #[test]
    fn interpolate_round_trip_degree_7() {
        let p = crate::primes::prime_stream(31, 0).next().unwrap();
        let poly = fp_poly(&[3, 1, 4, 1, 5, 9, 2, 6], p);
        let pts: Vec<(Fp, Fp)> =
            (0..8).map(|x| (Fp::new(x, p), poly.eval(&Fp::new(x, p)))).collect();
        assert_eq!(interpolate(&pts).unwrap(), poly);
    }

    #[test]
    fn interpolate_rejects_repeats() {
        let p = 101;
        let pts = vec![(Fp::new(1, p), Fp::new(3, p)), (Fp::new(1, p), Fp::new(4, p))];
        assert!(matches!(interpolate(&pts), Err(ExactError::RepeatedAbscissa)));
    }

    #[test]
    fn taylor_inversion_geometric() {
        let a = DensePoly::from_coeffs(vec![rat(1, 1), rat(-1, 1)]);
        let s = taylor_inv_normalized(&a, 6);
        assert!(s.iter().all(|c| *c == rat(1, 1)));
    }
}
