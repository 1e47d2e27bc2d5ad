//! Count-distribution computation by direct iteration of the embedded
//! chain: the full recursion over y-truncated polynomial vectors, and the
//! partial recursion that truncates the finite-difference scheme once it
//! stabilizes under the spectral normalization P/lambda.

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use patdist_exact::{reduce_with_den, ExtFloat, Rat, Ring, YPoly};

use crate::distribution::{CountDistribution, MethodMeta, Prob};
use crate::embed::{EmbeddedChain, FloatChain, SparseMatrix};
use crate::error::{Error, Result};
use crate::spectral::{dominant_eigenvalue, SpectralData};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

/// u (P + yQ)^(len-m) v truncated modulo y^(nmax+1), entry n giving
/// P(N_len = n).
pub fn full_distribution(
    chain: &EmbeddedChain,
    seq_len: usize,
    nmax: usize,
    mode: Mode,
    precision_bits: u32,
) -> Result<CountDistribution> {
    if seq_len < chain.m {
        return Err(Error::Input(format!(
            "sequence length {seq_len} below model order {}",
            chain.m
        )));
    }
    let steps = seq_len - chain.m;
    let cap = nmax.min(steps) + 1;
    let mut probs = match mode {
        Mode::Exact => full_exact(chain, steps, cap),
        Mode::Float => full_float(chain, steps, cap, precision_bits),
    };
    while probs.len() <= nmax {
        probs.push(match mode {
            Mode::Exact => Prob::Exact(Rat::from_integer(BigInt::ZERO)),
            Mode::Float => Prob::Float(ExtFloat::zero(precision_bits)),
        });
    }
    let meta = MethodMeta {
        precision_bits: (mode == Mode::Float).then_some(precision_bits),
        complete: nmax >= steps,
        ..MethodMeta::default()
    };
    Ok(CountDistribution {
        seq_len,
        m: chain.m,
        probs,
        method: "full".into(),
        meta,
    })
}

fn full_exact(chain: &EmbeddedChain, steps: usize, cap: usize) -> Vec<Prob> {
    let sc = chain.to_scaled();
    let r = chain.dim();
    let mut w: Vec<YPoly<BigInt>> =
        sc.u.iter().map(|v| YPoly::constant(v.clone(), cap)).collect();
    for _ in 0..steps {
        let mut next = vec![YPoly::zero(cap); r];
        for p in 0..r {
            if w[p].is_zero() {
                continue;
            }
            for (col, val) in sc.p.row(p) {
                next[*col as usize] = next[*col as usize].add(&w[p].scale(val));
            }
            for (col, val) in sc.q.row(p) {
                next[*col as usize] = next[*col as usize].add(&w[p].scale(val).shift_y(1));
            }
        }
        w = next;
    }
    let mut total = YPoly::zero(cap);
    for v in &w {
        total = total.add(v);
    }
    let den = &sc.u_den * sc.step_den.pow(steps as u32);
    (0..cap)
        .map(|n| {
            let num = total.coeff(n).cloned().unwrap_or(BigInt::ZERO);
            Prob::Exact(reduce_with_den(num, den.clone()))
        })
        .collect()
}

fn full_float(chain: &EmbeddedChain, steps: usize, cap: usize, prec: u32) -> Vec<Prob> {
    let fc = chain.to_float(prec);
    let r = fc.u.len();
    let mut w: Vec<YPoly<ExtFloat>> =
        fc.u.iter().map(|v| YPoly::constant(v.clone(), cap)).collect();
    for _ in 0..steps {
        let mut next = vec![YPoly::zero(cap); r];
        for p in 0..r {
            if w[p].is_zero() {
                continue;
            }
            for (col, val) in fc.p.row(p) {
                next[*col as usize] = next[*col as usize].add(&w[p].scale(val));
            }
            for (col, val) in fc.q.row(p) {
                next[*col as usize] = next[*col as usize].add(&w[p].scale(val).shift_y(1));
            }
        }
        w = next;
    }
    let mut total = YPoly::zero(cap);
    for v in &w {
        total = total.add(v);
    }
    (0..cap)
        .map(|n| Prob::Float(total.coeff(n).cloned().unwrap_or_else(|| ExtFloat::zero(prec))))
        .collect()
}

#[derive(Clone, Debug)]
pub struct PartialOpts {
    /// Relative-error target for the truncation rank detection.
    pub eta: f64,
    pub precision_bits: u32,
    /// Power-method relative bracket threshold, as 2^-bits.
    pub power_eps_bits: u32,
    pub power_iter_cap: usize,
    /// Cap on the stabilization search for the truncation rank.
    pub alpha_iter_cap: usize,
    /// Test hooks: bypass the power method or the rank search.
    pub forced_lambda: Option<ExtFloat>,
    pub forced_alpha: Option<usize>,
}

impl Default for PartialOpts {
    fn default() -> Self {
        PartialOpts {
            eta: 1e-15,
            precision_bits: 1024,
            power_eps_bits: 1024 - 16,
            power_iter_cap: 1_000_000,
            alpha_iter_cap: 1_000_000,
            forced_lambda: None,
            forced_alpha: None,
        }
    }
}

struct NormChain {
    p: SparseMatrix<ExtFloat>,
    q: SparseMatrix<ExtFloat>,
    u: Vec<ExtFloat>,
    prec: u32,
}

impl NormChain {
    fn matvec(&self, mat: &SparseMatrix<ExtFloat>, x: &[ExtFloat]) -> Vec<ExtFloat> {
        crate::spectral::matvec(mat, x, self.prec)
    }

    /// One difference stage: delta_k <- P delta_k + Q delta_{k-1} - delta_k,
    /// descending k so the k-1 operand is the previous-stage value.
    fn difference_stage(&self, delta: &mut [Vec<ExtFloat>]) {
        for k in (1..delta.len()).rev() {
            let pd = self.matvec(&self.p, &delta[k]);
            let qd = self.matvec(&self.q, &delta[k - 1]);
            for (i, slot) in delta[k].iter_mut().enumerate() {
                *slot = pd[i].add(&qd[i]).sub(slot);
            }
        }
        let pd = self.matvec(&self.p, &delta[0]);
        for (i, slot) in delta[0].iter_mut().enumerate() {
            *slot = pd[i].sub(slot);
        }
    }

    /// One plain step: delta_k <- P delta_k + Q delta_{k-1}.
    fn forward_stage(&self, delta: &mut [Vec<ExtFloat>]) {
        for k in (1..delta.len()).rev() {
            let pd = self.matvec(&self.p, &delta[k]);
            let qd = self.matvec(&self.q, &delta[k - 1]);
            for (i, slot) in delta[k].iter_mut().enumerate() {
                *slot = pd[i].add(&qd[i]);
            }
        }
        delta[0] = self.matvec(&self.p, &delta[0]);
    }

    fn dot_u(&self, x: &[ExtFloat]) -> ExtFloat {
        let mut acc = ExtFloat::zero(self.prec);
        for (u, v) in self.u.iter().zip(x) {
            if !u.is_zero() && !v.is_zero() {
                acc = acc.add(&u.mul(v));
            }
        }
        acc
    }
}

/// Partial recursion: normalize by the dominant eigenvalue, iterate the
/// difference scheme until the highest-order difference stabilizes at rank
/// alpha, then assemble P(N = k) for all k <= n from the stabilized
/// differences and binomial weights.
pub fn partial_distribution(
    chain: &EmbeddedChain,
    seq_len: usize,
    n: usize,
    opts: &PartialOpts,
) -> Result<CountDistribution> {
    if seq_len < chain.m {
        return Err(Error::Input(format!(
            "sequence length {seq_len} below model order {}",
            chain.m
        )));
    }
    let prec = opts.precision_bits;
    let steps = seq_len - chain.m;
    let n_eff = n.min(steps);
    let fc: FloatChain = chain.to_float(prec);

    // phase 1: dominant eigenvalue and normalization
    let spectral: SpectralData = match &opts.forced_lambda {
        Some(l) => SpectralData {
            lambda: l.clone(),
            iterations: 0,
            achieved_eps: 0.0,
            vector: vec![],
        },
        None => {
            let eps = ExtFloat::from_rat(
                &Rat::new(BigInt::one(), BigInt::one() << opts.power_eps_bits as u64),
                prec,
            );
            dominant_eigenvalue(&fc.p, prec, &eps, opts.power_iter_cap)?
        }
    };
    let lambda = spectral.lambda.clone();
    if !lambda.is_positive() {
        return Err(Error::Spectral("dominant eigenvalue is not positive".into()));
    }
    let nc = NormChain {
        p: fc.p.map(|v| v.div(&lambda)),
        q: fc.q.map(|v| v.div(&lambda)),
        u: fc.u.clone(),
        prec,
    };
    let dim = chain.dim();
    let support: Vec<usize> = (0..dim).filter(|&i| !nc.u[i].is_zero()).collect();

    // phase 2: warm up D_k^i(i) for i <= n, then search the rank alpha at
    // which D_n^n has stabilized within relative eta
    let mut delta: Vec<Vec<ExtFloat>> = vec![vec![ExtFloat::zero(prec); dim]; n_eff + 1];
    delta[0] = vec![ExtFloat::one(prec); dim];
    for _ in 1..=n_eff {
        nc.difference_stage(&mut delta);
    }
    let eta_f = ExtFloat::from_rat(&f64_to_rat(opts.eta), prec);
    let mut alpha: Option<usize> = None;
    let mut achieved: f64 = f64::INFINITY;
    if let Some(fa) = opts.forced_alpha {
        if fa <= n_eff || fa > steps {
            return Err(Error::Input(format!("forced alpha {fa} out of range")));
        }
        for _ in (n_eff + 1)..=fa {
            nc.forward_stage(&mut delta);
        }
        alpha = Some(fa);
        achieved = 0.0;
    } else {
        let mut prev: Vec<ExtFloat> = support.iter().map(|&i| delta[n_eff][i].clone()).collect();
        let hard_cap = steps.min(opts.alpha_iter_cap.saturating_add(n_eff));
        for i in (n_eff + 1)..=hard_cap {
            nc.forward_stage(&mut delta);
            let cur: Vec<ExtFloat> = support.iter().map(|&i| delta[n_eff][i].clone()).collect();
            let mut worst = 0f64;
            let mut ok = true;
            let mut any_nonzero = false;
            for (c, p) in cur.iter().zip(&prev) {
                if c.is_zero() && p.is_zero() {
                    continue;
                }
                if c.is_zero() {
                    ok = false;
                    break;
                }
                any_nonzero = true;
                let rd = c.sub(p).abs().div(&c.abs());
                if rd > eta_f {
                    ok = false;
                    break;
                }
                worst = worst.max(rd.to_f64());
            }
            prev = cur;
            let ok = ok && any_nonzero;
            if ok {
                alpha = Some(i);
                achieved = worst;
                break;
            }
        }
        if alpha.is_none() && steps > opts.alpha_iter_cap.saturating_add(n_eff) {
            return Err(Error::Convergence(format!(
                "difference scheme not stable after {} iterations",
                opts.alpha_iter_cap
            )));
        }
    }

    let alpha = match alpha {
        Some(a) => a,
        None => {
            // stabilization would need more steps than the sequence has:
            // the full recursion is both exact enough and no slower here
            let mut dist = full_distribution(chain, seq_len, n, Mode::Float, prec)?;
            dist.method = "partial".into();
            dist.meta.fell_back_to_full = true;
            dist.meta.eta = Some(opts.eta);
            dist.meta.lambda_gap = Some(lambda_gap(&lambda, prec));
            dist.meta.power_iterations = Some(spectral.iterations);
            return Ok(dist);
        }
    };
    let alpha_bar = alpha - n_eff;

    // phase 3: recompute D_k^0(alpha_bar), then stage j' differences give
    // D_k^{j'}(alpha_bar + j'); record u-dots per stage
    let mut delta2: Vec<Vec<ExtFloat>> = vec![vec![ExtFloat::zero(prec); dim]; n_eff + 1];
    delta2[0] = vec![ExtFloat::one(prec); dim];
    for _ in 0..alpha_bar {
        nc.forward_stage(&mut delta2);
    }
    let stages = n_eff + 2; // one extra stage for the residual estimate
    let mut dots: Vec<Vec<ExtFloat>> = vec![Vec::with_capacity(stages); n_eff + 1];
    for k in 0..=n_eff {
        dots[k].push(nc.dot_u(&delta2[k]));
    }
    for _ in 1..stages {
        nc.difference_stage(&mut delta2);
        for k in 0..=n_eff {
            dots[k].push(nc.dot_u(&delta2[k]));
        }
    }

    // assembly: P(N = k) = lambda^steps * sum_{j'=0..k} C(steps - alpha_bar, j') u D_k^{j'}(alpha_bar + j')
    let lambda_pow = lambda.powi(steps as u64);
    let mut binom = Vec::with_capacity(stages);
    binom.push(ExtFloat::one(prec));
    let top = (steps - alpha_bar) as i64;
    for j in 1..stages as i64 {
        let factor = ExtFloat::from_i64(top - j + 1, prec).div(&ExtFloat::from_i64(j, prec));
        let prev = binom.last().unwrap().clone();
        binom.push(prev.mul(&factor));
    }
    let mut probs = Vec::with_capacity(n + 1);
    let mut worst_resid = achieved;
    for k in 0..=n_eff {
        let mut acc = ExtFloat::zero(prec);
        for j in 0..=k {
            acc = acc.add(&binom[j].mul(&dots[k][j]));
        }
        let value = lambda_pow.mul(&acc);
        // dropped-term estimate: the j' = k+1 contribution
        if !value.is_zero() {
            let dropped = binom[k + 1].mul(&dots[k][k + 1]).mul(&lambda_pow);
            let rel = dropped.abs().div(&value.abs()).to_f64();
            if rel.is_finite() {
                worst_resid = worst_resid.max(rel);
            }
        }
        probs.push(Prob::Float(value));
    }
    while probs.len() <= n {
        probs.push(Prob::Float(ExtFloat::zero(prec)));
    }

    let meta = MethodMeta {
        eta: Some(opts.eta),
        residual: Some(worst_resid),
        alpha: Some(alpha),
        lambda_gap: Some(lambda_gap(&lambda, prec)),
        power_iterations: Some(spectral.iterations),
        precision_bits: Some(prec),
        complete: n >= steps,
        ..MethodMeta::default()
    };
    Ok(CountDistribution { seq_len, m: chain.m, probs, method: "partial".into(), meta })
}

fn lambda_gap(lambda: &ExtFloat, prec: u32) -> f64 {
    ExtFloat::one(prec).sub(lambda).to_f64()
}

pub(crate) fn f64_to_rat(x: f64) -> Rat {
    assert!(x.is_finite());
    // exact binary expansion of the f64
    let (mant, exp) = {
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        if biased == 0 {
            (sign * frac as i64, -1074i64)
        } else {
            (sign * (frac | (1 << 52)) as i64, biased - 1075)
        }
    };
    let num = BigInt::from(mant);
    if exp >= 0 {
        Rat::from_integer(num << exp as u64)
    } else {
        Rat::new(num, BigInt::from(BigUint::one() << (-exp) as u64))
    }
}
