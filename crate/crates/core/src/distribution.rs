//! Count-distribution container shared by all solving strategies.

use num_traits::Zero;
use patdist_exact::decimal::{sci_rat, sci_rat_parts};
use patdist_exact::{ExtFloat, Rat};

#[derive(Clone, Debug)]
pub enum Prob {
    Exact(Rat),
    Float(ExtFloat),
}

impl Prob {
    pub fn is_zero(&self) -> bool {
        match self {
            Prob::Exact(r) => r.is_zero(),
            Prob::Float(f) => f.is_zero(),
        }
    }

    pub fn as_float(&self, prec: u32) -> ExtFloat {
        match self {
            Prob::Exact(r) => ExtFloat::from_rat(r, prec),
            Prob::Float(f) => f.with_precision(prec),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.as_float(128).to_f64()
    }

    /// |self - other| / |other| (other nonzero), in high precision.
    pub fn rel_diff(&self, other: &Prob) -> f64 {
        let prec = 1088;
        let a = self.as_float(prec);
        let b = other.as_float(prec);
        a.rel_diff(&b)
    }

    pub fn sci(&self, sig: u32) -> String {
        match self {
            Prob::Exact(r) => sci_rat(r, sig),
            Prob::Float(f) => f.sci(sig),
        }
    }

    /// (digits, decimal exponent) for fixed-digit comparisons; None for 0.
    pub fn sci_parts(&self, sig: u32) -> Option<(String, i64)> {
        match self {
            Prob::Exact(r) => sci_rat_parts(r, sig),
            Prob::Float(f) => {
                if f.is_zero() {
                    None
                } else {
                    let s = f.sci(sig);
                    let (m, e) = s.trim_start_matches('-').split_once('e')?;
                    Some((m.replace('.', ""), e.parse().ok()?))
                }
            }
        }
    }

    /// Full-precision rendering: num/den for exact values, long scientific
    /// notation for floats.
    pub fn full(&self) -> String {
        match self {
            Prob::Exact(r) => format!("{r}"),
            Prob::Float(f) => {
                let digits = (f.precision() as f64 * 0.301) as u32;
                f.sci(digits.max(8))
            }
        }
    }
}

/// Phase timings in seconds, in pipeline order.
pub type Phases = Vec<(String, f64)>;

#[derive(Clone, Debug, Default)]
pub struct MethodMeta {
    /// Relative-error target for approximate methods.
    pub eta: Option<f64>,
    /// Achieved residual estimate (dropped-term / convergence scale).
    pub residual: Option<f64>,
    /// Truncation rank of the partial recursion.
    pub alpha: Option<usize>,
    /// Spectral gap 1 - lambda.
    pub lambda_gap: Option<f64>,
    /// Power-method iterations.
    pub power_iterations: Option<usize>,
    /// Fraction degrees (numerator, denominator) in z.
    pub degrees: Option<(usize, usize)>,
    /// Working precision in mantissa bits for float arithmetic.
    pub precision_bits: Option<u32>,
    /// Set when a partial recursion fell back to full recursion.
    pub fell_back_to_full: bool,
    /// Entries cover every n = 0..len-m.
    pub complete: bool,
    pub phases: Phases,
}

#[derive(Clone, Debug)]
pub struct CountDistribution {
    /// Sequence length.
    pub seq_len: usize,
    /// Model order (occurrences within the first m letters are ignored).
    pub m: usize,
    /// probs[n] = P(N = n) for n = 0..=nmax.
    pub probs: Vec<Prob>,
    pub method: String,
    pub meta: MethodMeta,
}

impl CountDistribution {
    pub fn nmax(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }

    pub fn prob(&self, n: usize) -> Option<&Prob> {
        self.probs.get(n)
    }
}
