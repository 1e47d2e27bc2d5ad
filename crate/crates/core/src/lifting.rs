//! Taylor-coefficient chunks of B/A at arbitrary order: high-order lifting
//! (precomputed residues at orders near powers of two, then baby-step
//! development), and coefficient extraction through the linear recurrence
//! satisfied by the series (modular exponentiation against the reversed
//! denominator). Generic over the coefficient ring, so the same code runs
//! over rationals, scaled integers, prime fields, floats and truncated
//! y-polynomials over any of those.

use num_bigint::BigInt;
use patdist_exact::poly::taylor_inv_normalized;
use patdist_exact::{reduce_with_den, DensePoly, ExtFloat, Rat, Ring, YPoly};

use crate::distribution::{CountDistribution, MethodMeta, Prob};
use crate::error::{Error, Result};
use crate::fraction::BivariateFraction;

#[derive(Clone, Debug)]
pub struct Chunk<R: Ring> {
    pub alpha: usize,
    pub beta: usize,
    /// coeffs[i] is the coefficient of z^(alpha + i).
    pub coeffs: Vec<R>,
}

/// Precomputed data enabling chunk extraction anywhere up to order beta:
/// the series prefix S = [A^{-1}]_0^delta and the residue ladder at orders
/// 2^e - d.
#[derive(Clone, Debug)]
pub struct HighOrderData<R: Ring> {
    a: Vec<R>,
    d: usize,
    e0: u32,
    e_beta: u32,
    delta: usize,
    s: Vec<R>,
    gammas: Vec<Vec<R>>,
}

impl<R: Ring> HighOrderData<R> {
    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    /// Orders at which ladder residues were precomputed.
    pub fn gamma_orders(&self) -> Vec<usize> {
        if self.gammas.is_empty() {
            return Vec::new();
        }
        (self.e0..=self.e_beta).map(|e| (1usize << e) - self.d).collect()
    }

    pub fn series_prefix(&self) -> &[R] {
        &self.s
    }
}

/// Coefficients of x*y at positions [out_lo, out_hi], where x's first entry
/// sits at absolute position x_lo and y's at y_lo.
fn win_mul<R: Ring>(
    zero: &R,
    x: &[R],
    x_lo: i64,
    y: &[R],
    y_lo: i64,
    out_lo: i64,
    out_hi: i64,
) -> Vec<R> {
    debug_assert!(out_hi >= out_lo);
    let mut out = vec![zero.clone(); (out_hi - out_lo + 1) as usize];
    for (i, xv) in x.iter().enumerate() {
        if xv.is_zero() {
            continue;
        }
        let xpos = x_lo + i as i64;
        // y index j must satisfy out_lo <= xpos + y_lo + j <= out_hi
        let j_min = (out_lo - xpos - y_lo).max(0);
        let j_max = (out_hi - xpos - y_lo).min(y.len() as i64 - 1);
        let mut j = j_min;
        while j <= j_max {
            let t = (xpos + y_lo + j - out_lo) as usize;
            let yv = &y[j as usize];
            if !yv.is_zero() {
                out[t] = out[t].add(&xv.mul(yv));
            }
            j += 1;
        }
    }
    out
}

fn value_at<R: Ring>(zero: &R, x: &[R], x_lo: i64, pos: i64) -> R {
    let idx = pos - x_lo;
    if idx < 0 || idx >= x.len() as i64 {
        zero.clone()
    } else {
        x[idx as usize].clone()
    }
}

/// Residue B_j with B/A = prefix + z^j B_j / A, given the inverse window
/// V = [A^{-1}]_{j-2d+1}^{j-1}: U = [VB]_{j-d}^{j-1}, B_j = z^-j [B - AU]_j^{j+d-1}.
pub fn residue<R: Ring>(a: &[R], b: &[R], b_lo: i64, j: usize, v: &[R], v_lo: i64) -> Vec<R> {
    let d = a.len() - 1;
    let zero = a[0].zero_like();
    if j == 0 {
        let mut out = vec![zero; d.max(b.len())];
        for (i, c) in b.iter().enumerate() {
            let pos = b_lo + i as i64;
            debug_assert!(pos >= 0);
            out[pos as usize] = c.clone();
        }
        out.truncate(d.max(1));
        return out;
    }
    let ji = j as i64;
    let u = win_mul(&zero, v, v_lo, b, b_lo, ji - d as i64, ji - 1);
    let au = win_mul(&zero, a, 0, &u, ji - d as i64, ji, ji + d as i64 - 1);
    (0..d)
        .map(|t| value_at(&zero, b, b_lo, ji + t as i64).sub(&au[t]))
        .collect()
}

/// One doubling step: from V_e = [A^{-1}]_{2^e-2d+1}^{2^e-1} and the residue
/// at order 2^e - d, produce the residue at 2^(e+1) - d and V_{e+1}.
pub fn double_order<R: Ring>(
    a: &[R],
    s: &[R],
    v_e: &[R],
    gamma: &[R],
    e: u32,
) -> (Vec<R>, Vec<R>) {
    let d = a.len() - 1;
    let zero = a[0].zero_like();
    let pe = 1i64 << e;
    let pe1 = 1i64 << (e + 1);
    let v_lo = pe - 2 * d as i64 + 1;
    // V_L = [A^{-1}]_{2^{e+1}-2d}^{2^{e+1}-d-1}, from the ladder identity
    let vl = win_mul(&zero, gamma, 0, v_e, v_lo, pe - d as i64, pe - 1);
    let vl_lo = pe1 - 2 * d as i64;
    // residue at 2^{e+1}-d: the constant 1 has no support in the window
    let au = win_mul(&zero, a, 0, &vl, vl_lo, pe1 - d as i64, pe1 - 1);
    let gamma_next: Vec<R> = au.iter().map(|x| x.neg()).collect();
    // V_H = [A^{-1}]_{2^{e+1}-d}^{2^{e+1}-1}
    let vh = win_mul(&zero, &gamma_next, 0, &s[..d], 0, 0, d as i64 - 1);
    let mut v_next: Vec<R> = vl[1..].to_vec();
    v_next.extend(vh);
    (gamma_next, v_next)
}

/// Precompute the series prefix and the residue ladder for chunk queries in
/// [alpha, beta]. Requires A(0) = 1.
pub fn high_order<R: Ring>(a_in: &[R], alpha: usize, beta: usize) -> Result<HighOrderData<R>> {
    let mut a: Vec<R> = a_in.to_vec();
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    if a.is_empty() {
        return Err(Error::Input("zero denominator".into()));
    }
    if a[0] != a[0].one_like() {
        return Err(Error::Range(
            "denominator constant term must be 1; normalize or strip the valuation first".into(),
        ));
    }
    let d = a.len() - 1;
    if d == 0 {
        return Ok(HighOrderData {
            a,
            d: 0,
            e0: 0,
            e_beta: 0,
            delta: beta.saturating_sub(alpha),
            s: Vec::new(),
            gammas: Vec::new(),
        });
    }
    let mut e0 = 0u32;
    while (1usize << e0) < 2 * d {
        e0 += 1;
    }
    let e_beta = usize::BITS - 1 - (beta + d).leading_zeros();
    let delta = ((1usize << e0) - 1).max(beta.saturating_sub(alpha));
    let ap = DensePoly::from_coeffs(a.clone());
    let s = taylor_inv_normalized(&ap, delta);
    let zero = a[0].zero_like();
    let mut gammas = Vec::new();
    if e_beta >= e0 {
        let xi0 = (1usize << e0) - d;
        let u0 = &s[xi0 - d..=xi0 - 1];
        let au = win_mul(&zero, &a, 0, u0, (xi0 - d) as i64, xi0 as i64, (xi0 + d - 1) as i64);
        let g0: Vec<R> = au.iter().map(|x| x.neg()).collect();
        gammas.push(g0);
        let mut v: Vec<R> = s[(1 << e0) - 2 * d + 1..=(1 << e0) - 1].to_vec();
        for e in e0..e_beta {
            let (g, v2) = double_order(&a, &s, &v, gammas.last().unwrap(), e);
            gammas.push(g);
            v = v2;
        }
    }
    Ok(HighOrderData { a, d, e0, e_beta, delta, s, gammas })
}

/// [A^{-1}]_alpha^beta as a window (first entry at position alpha).
pub fn inverse_chunk<R: Ring>(ho: &HighOrderData<R>, alpha: i64, beta: i64) -> Vec<R> {
    let zero = ho.a[0].zero_like();
    if beta < 0 {
        return Vec::new();
    }
    let alpha_c = alpha.max(0);
    if beta as usize <= ho.delta {
        let mut out = Vec::with_capacity((beta - alpha_c + 1) as usize);
        for t in alpha_c..=beta {
            out.push(value_at(&zero, &ho.s, 0, t));
        }
        // pad for callers expecting the full (possibly negative-lo) window
        let mut full = vec![zero; (alpha_c - alpha) as usize];
        full.extend(out);
        return full;
    }
    debug_assert!(beta - alpha_c <= ho.delta as i64);
    let g = get_gamma(ho, alpha_c as usize);
    let win = win_mul(&zero, &g, 0, &ho.s, 0, 0, beta - alpha_c);
    let mut full = vec![zero; (alpha_c - alpha) as usize];
    full.extend(win);
    full
}

/// Residue of 1/A at an arbitrary order, assembled from the precomputed
/// ladder by a logarithmic descent.
pub fn get_gamma<R: Ring>(ho: &HighOrderData<R>, alpha: usize) -> Vec<R> {
    let zero = ho.a[0].zero_like();
    let one = ho.a[0].one_like();
    let d = ho.d;
    if alpha == 0 {
        let mut out = vec![one];
        out.resize(d.max(1), zero);
        return out;
    }
    if alpha <= ho.delta {
        // direct residue from the series prefix
        let lo = alpha.saturating_sub(d);
        let u = &ho.s[lo..=alpha - 1];
        let au = win_mul(&zero, &ho.a, 0, u, lo as i64, alpha as i64, (alpha + d - 1) as i64);
        return au.iter().map(|x| x.neg()).collect();
    }
    let a_exp = usize::BITS - 1 - (alpha + d).leading_zeros();
    debug_assert!(a_exp >= ho.e0 && a_exp <= ho.e_beta);
    let base = &ho.gammas[(a_exp - ho.e0) as usize];
    let j = alpha + d - (1usize << a_exp);
    residue_general(ho, base, j)
}

/// Residue of B/A at order j for deg B < d, fetching inverse windows on the
/// fly from the ladder.
pub fn residue_general<R: Ring>(ho: &HighOrderData<R>, b: &[R], j: usize) -> Vec<R> {
    let d = ho.d;
    let zero = ho.a[0].zero_like();
    if j == 0 {
        let mut out = b.to_vec();
        out.resize(d.max(b.len()), zero);
        out.truncate(d.max(1));
        return out;
    }
    let lo = j as i64 - (2 * d as i64) + 1;
    let v = inverse_chunk(ho, lo, j as i64 - 1);
    residue(&ho.a, b, 0, j, &v, lo)
}

/// Exact chunk [B/A]_alpha^beta for deg B < deg A.
pub fn devel_chunk<R: Ring>(
    ho: &HighOrderData<R>,
    b: &[R],
    alpha: usize,
    beta: usize,
) -> Result<Chunk<R>> {
    if beta < alpha {
        return Err(Error::Range("beta below alpha".into()));
    }
    let zero = ho.a[0].zero_like();
    if ho.d == 0 {
        // A = 1: the series is B itself
        let coeffs = (alpha..=beta).map(|t| value_at(&zero, b, 0, t as i64)).collect();
        return Ok(Chunk { alpha, beta, coeffs });
    }
    if beta.saturating_sub(alpha) > ho.delta {
        return Err(Error::Range(format!(
            "chunk width {} exceeds precomputed depth {}",
            beta - alpha,
            ho.delta
        )));
    }
    if beta <= ho.delta {
        let coeffs = win_mul(&zero, b, 0, &ho.s, 0, alpha as i64, beta as i64);
        return Ok(Chunk { alpha, beta, coeffs });
    }
    let b_alpha = residue_general(ho, b, alpha);
    let coeffs = win_mul(&zero, &b_alpha, 0, &ho.s, 0, 0, (beta - alpha) as i64);
    Ok(Chunk { alpha, beta, coeffs })
}

/// Chunk extraction through the linear recurrence a_0 t_l = -sum a_i t_{l-i}:
/// one modular exponentiation Z^alpha mod rev(A), then O(d) work per
/// successive coefficient, and dot products with the first d series terms.
pub fn fiduccia_chunk<R: Ring>(a_in: &[R], b: &[R], alpha: usize, beta: usize) -> Result<Chunk<R>> {
    let mut a = a_in.to_vec();
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    if a.is_empty() {
        return Err(Error::Input("zero denominator".into()));
    }
    if a[0] != a[0].one_like() {
        return Err(Error::Range("denominator constant term must be 1".into()));
    }
    let d = a.len() - 1;
    let zero = a[0].zero_like();
    let one = a[0].one_like();
    if b.len() > d.max(1) && b[d.max(1)..].iter().any(|c| !c.is_zero()) {
        return Err(Error::Input("numerator degree must be below denominator degree".into()));
    }
    if beta < alpha {
        return Err(Error::Range("beta below alpha".into()));
    }
    if d == 0 {
        let coeffs = (alpha..=beta).map(|t| value_at(&zero, b, 0, t as i64)).collect();
        return Ok(Chunk { alpha, beta, coeffs });
    }
    // first d Taylor terms of B/A
    let mut t = Vec::with_capacity(d);
    for j in 0..d {
        let mut acc = value_at(&zero, b, 0, j as i64);
        for i in 1..=j {
            acc = acc.sub(&a[i].mul(&t[j - i]));
        }
        t.push(acc);
    }
    // characteristic polynomial rev(A), monic of degree d
    let p: Vec<R> = (0..=d).map(|i| a[d - i].clone()).collect();
    // polynomials of degree < d modulo p
    let reduce_top = |x: &mut Vec<R>| {
        // x has length d+1 at most; cancel the top coefficient
        while x.len() > d {
            let top = x.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let shift = x.len() - d;
            for i in 0..d {
                x[shift + i] = x[shift + i].sub(&top.mul(&p[i]));
            }
        }
    };
    let mul_mod = |x: &[R], y: &[R]| -> Vec<R> {
        let mut prod = vec![zero.clone(); x.len() + y.len() - 1];
        for (i, xv) in x.iter().enumerate() {
            if xv.is_zero() {
                continue;
            }
            for (j, yv) in y.iter().enumerate() {
                if !yv.is_zero() {
                    prod[i + j] = prod[i + j].add(&xv.mul(yv));
                }
            }
        }
        let mut prod = prod;
        // full reduction from the top
        while prod.len() > d {
            reduce_top(&mut prod);
        }
        prod.resize(d, zero.clone());
        prod
    };
    // Z^alpha mod p by binary powering
    let mut base = vec![zero.clone(); d.min(2).max(1)];
    if d == 1 {
        // Z mod p = -p[0]
        base = vec![p[0].neg()];
    } else {
        base.resize(2, zero.clone());
        base[1] = one.clone();
    }
    let mut acc = vec![zero.clone(); d];
    acc[0] = one.clone();
    let mut e = alpha;
    let mut sq = {
        let mut v = base.clone();
        v.resize(d, zero.clone());
        v
    };
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(&acc, &sq);
        }
        e >>= 1;
        if e > 0 {
            sq = mul_mod(&sq, &sq);
        }
    }
    // successive coefficients: dot with t, then multiply by Z and reduce
    let mut coeffs = Vec::with_capacity(beta - alpha + 1);
    for _ in alpha..=beta {
        let mut dot = zero.clone();
        for (c, tv) in acc.iter().zip(&t) {
            if !c.is_zero() && !tv.is_zero() {
                dot = dot.add(&c.mul(tv));
            }
        }
        coeffs.push(dot);
        // acc <- acc * Z mod p
        let mut shifted = vec![zero.clone(); d + 1];
        shifted[1..].clone_from_slice(&acc);
        reduce_top(&mut shifted);
        shifted.resize(d, zero.clone());
        acc = shifted;
    }
    Ok(Chunk { alpha, beta, coeffs })
}

// --------------------------------------------------------- bivariate lift

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftKind {
    HighOrder,
    Fiduccia,
}

use crate::recursion::Mode;

/// Extract {P(N_len = k)}_{k=0..n} from the reconstructed fraction: the
/// coefficient ring is y-polynomials modulo y^(n+1) over scaled integers
/// (exact mode) or extended floats (float mode). The z^m shift of the
/// series convention is pure index arithmetic.
pub fn bivariate_lift(
    frac: &BivariateFraction,
    seq_len: usize,
    n: usize,
    mode: Mode,
    precision_bits: u32,
    kind: LiftKind,
) -> Result<CountDistribution> {
    if seq_len < frac.m {
        return Err(Error::Input(format!(
            "sequence length {seq_len} below model order {}",
            frac.m
        )));
    }
    if let Some(yt) = frac.ytrunc {
        if n > yt {
            return Err(Error::Range(format!(
                "fraction was reconstructed modulo y^{}, cannot report n = {n}",
                yt + 1
            )));
        }
    }
    let steps = seq_len - frac.m;
    let cap = n + 1;
    let probs = match mode {
        Mode::Exact => {
            let (b, a, scale, extra_den) = frac.scaled_int(cap);
            let coeff = lift_order(&a, &b, steps, kind)?;
            let den = extra_den * scale.pow(steps as u32);
            (0..cap)
                .map(|k| {
                    let num = coeff
                        .as_ref()
                        .and_then(|c| c.coeff(k).cloned())
                        .unwrap_or(BigInt::ZERO);
                    Prob::Exact(reduce_with_den(num, den.clone()))
                })
                .collect::<Vec<_>>()
        }
        Mode::Float => {
            let (b, a) = frac.to_float(cap, precision_bits);
            check_float_precision(&a, precision_bits)?;
            let coeff = lift_order(&a, &b, steps, kind)?;
            let probs: Vec<Prob> = (0..cap)
                .map(|k| {
                    Prob::Float(
                        coeff
                            .as_ref()
                            .and_then(|c| c.coeff(k).cloned())
                            .unwrap_or_else(|| ExtFloat::zero(precision_bits)),
                    )
                })
                .collect();
            // probabilities escaping [0, 1] beyond rounding noise mean the
            // working precision collapsed along the way
            let tol = ExtFloat::from_rat(
                &Rat::new(BigInt::from(1), BigInt::from(1u64 << 20)),
                precision_bits,
            );
            let hi = ExtFloat::one(precision_bits).add(&tol);
            let lo = tol.neg();
            for (k, p) in probs.iter().enumerate() {
                if let Prob::Float(f) = p {
                    if *f > hi || *f < lo {
                        return Err(Error::PrecisionExhausted(format!(
                            "coefficient {k} escaped [0,1]"
                        )));
                    }
                }
            }
            probs
        }
    };
    let meta = MethodMeta {
        degrees: Some((frac.deg_b(), frac.deg_a())),
        precision_bits: (mode == Mode::Float).then_some(precision_bits),
        complete: n >= steps,
        ..MethodMeta::default()
    };
    let method = match kind {
        LiftKind::HighOrder => "lifting",
        LiftKind::Fiduccia => "fiduccia",
    };
    Ok(CountDistribution { seq_len, m: frac.m, probs, method: method.into(), meta })
}

/// [z^target] B/A over any ring, handling a z-valuation of B and improper
/// numerators by index arithmetic.
fn lift_order<T: Ring>(
    a: &[YPoly<T>],
    b: &[YPoly<T>],
    target: usize,
    kind: LiftKind,
) -> Result<Option<YPoly<T>>> {
    let mut b = b.to_vec();
    while b.last().is_some_and(|c| c.is_zero()) {
        b.pop();
    }
    if b.is_empty() {
        return Ok(None);
    }
    let val = b.iter().position(|c| !c.is_zero()).unwrap();
    if target < val {
        return Ok(None);
    }
    let b: Vec<YPoly<T>> = b[val..].to_vec();
    let target = target - val;
    let mut a = a.to_vec();
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    let d = a.len() - 1;
    let deg_b = b.len() - 1;
    if deg_b < d.max(1) || d == 0 {
        match kind {
            LiftKind::HighOrder => {
                let ho = high_order(&a, target, target)?;
                let chunk = devel_chunk(&ho, &b, target, target)?;
                Ok(Some(chunk.coeffs.into_iter().next().unwrap()))
            }
            LiftKind::Fiduccia => {
                let chunk = fiduccia_chunk(&a, &b, target, target)?;
                Ok(Some(chunk.coeffs.into_iter().next().unwrap()))
            }
        }
    } else {
        // improper numerator: [z^t]B/A = sum_i b_i [A^{-1}]_{t-i}
        if kind == LiftKind::Fiduccia {
            return Err(Error::Input(
                "coefficient-recurrence extraction requires a proper fraction".into(),
            ));
        }
        let ho = high_order(&a, target.saturating_sub(deg_b), target)?;
        let lo = target as i64 - deg_b as i64;
        let win = inverse_chunk(&ho, lo, target as i64);
        let zero = a[0].zero_like();
        let mut acc = zero.clone();
        for (i, bi) in b.iter().enumerate() {
            if bi.is_zero() {
                continue;
            }
            let w = value_at(&zero, &win, lo.max(0), target as i64 - i as i64);
            acc = acc.add(&bi.mul(&w));
        }
        Ok(Some(acc))
    }
}

/// Residual check that float precision suffices: A times a freshly expanded
/// prefix of 1/A must reproduce 1 within 2^-(prec/2).
fn check_float_precision(a: &[YPoly<ExtFloat>], prec: u32) -> Result<()> {
    let lead = a
        .first()
        .ok_or_else(|| Error::Input("empty denominator".into()))?;
    let one = ExtFloat::one(prec);
    if lead.coeff(0) != Some(&one) || lead.deg() != Some(0) {
        return Err(Error::PrecisionExhausted("denominator lost its unit constant term".into()));
    }
    let mut a = a.to_vec();
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    let d = a.len() - 1;
    if d == 0 {
        return Ok(());
    }
    let ap = DensePoly::from_coeffs(a.clone());
    let s = DensePoly::from_coeffs(taylor_inv_normalized(&ap, 2 * d));
    let r = ap.mul_trunc(&s, 2 * d + 1);
    let tol = ExtFloat::from_parts(1, num_bigint::BigUint::from(1u32), -(prec as i64 / 2), prec);
    for t in 0..=2 * d {
        let got = r.coeff(t).cloned().unwrap_or_else(|| YPoly::zero(lead.cap()));
        let want = if t == 0 { one.clone() } else { ExtFloat::zero(prec) };
        for (yi, c) in got.coeffs().iter().enumerate() {
            let expect = if yi == 0 { &want } else { &ExtFloat::zero(prec) };
            if c.sub(expect).abs() > tol {
                return Err(Error::PrecisionExhausted(format!(
                    "inverse-series residual at z^{t} y^{yi}"
                )));
            }
        }
    }
    Ok(())
}
