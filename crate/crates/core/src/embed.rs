//! Optimal Markov chain embedding: sparse u, P, Q, v built from an order-m
//! automaton and a model, and truncated series coefficients of the joint
//! generating function. The final-state split tags occurrence transitions:
//! P carries transitions into non-final states, Q into final states.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use patdist_exact::{ExtFloat, Rat, Ring, YPoly};

use crate::alphabet::Word;
use crate::distribution::{CountDistribution, Prob};
use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::orderm::OrderMDfa;

#[derive(Clone, Debug)]
pub struct SparseMatrix<T> {
    dim: usize,
    rows: Vec<Vec<(u32, T)>>,
}

impl<T> SparseMatrix<T> {
    pub fn new(dim: usize) -> Self {
        SparseMatrix { dim, rows: (0..dim).map(|_| Vec::new()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, row: usize, col: u32, value: T) {
        self.rows[row].push((col, value));
    }

    pub fn row(&self, row: usize) -> &[(u32, T)] {
        &self.rows[row]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn map<S>(&self, f: impl Fn(&T) -> S) -> SparseMatrix<S> {
        SparseMatrix {
            dim: self.dim,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(c, v)| (*c, f(v))).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddedChain {
    pub m: usize,
    /// Starting distribution of the chain (dense, length R).
    pub u: Vec<Rat>,
    /// Transitions into non-final states.
    pub p_mat: SparseMatrix<Rat>,
    /// Transitions into final states.
    pub q_mat: SparseMatrix<Rat>,
    /// Chain row -> automaton state id.
    pub state_of_row: Vec<u32>,
    /// Chain row -> its m-letter context.
    pub contexts: Vec<Word>,
    /// Chain row is a final state (its column lives in Q).
    pub finals: Vec<bool>,
}

impl EmbeddedChain {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn nnz(&self) -> usize {
        self.p_mat.nnz() + self.q_mat.nnz()
    }

    pub fn to_float(&self, prec: u32) -> FloatChain {
        FloatChain {
            u: self.u.iter().map(|r| ExtFloat::from_rat(r, prec)).collect(),
            p: self.p_mat.map(|r| ExtFloat::from_rat(r, prec)),
            q: self.q_mat.map(|r| ExtFloat::from_rat(r, prec)),
            prec,
        }
    }

    /// Integer-scaled view: entries of P and Q multiplied by the common
    /// denominator `step_den`, u by `u_den`. A value after i steps carries
    /// the implicit denominator u_den * step_den^i, so all iteration
    /// arithmetic is gcd-free integer work.
    pub fn to_scaled(&self) -> ScaledChain {
        let mut step_den = BigUint::one();
        for mat in [&self.p_mat, &self.q_mat] {
            for row in 0..mat.dim() {
                for (_, v) in mat.row(row) {
                    step_den = step_den.lcm(v.denom().magnitude());
                }
            }
        }
        let mut u_den = BigUint::one();
        for v in &self.u {
            u_den = u_den.lcm(v.denom().magnitude());
        }
        let scale = |v: &Rat, den: &BigUint| -> BigInt {
            v.numer() * BigInt::from(den / v.denom().magnitude())
        };
        ScaledChain {
            u: self.u.iter().map(|v| scale(v, &u_den)).collect(),
            u_den: u_den.clone(),
            p: self.p_mat.map(|v| scale(v, &step_den)),
            q: self.q_mat.map(|v| scale(v, &step_den)),
            step_den,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FloatChain {
    pub u: Vec<ExtFloat>,
    pub p: SparseMatrix<ExtFloat>,
    pub q: SparseMatrix<ExtFloat>,
    pub prec: u32,
}

#[derive(Clone, Debug)]
pub struct ScaledChain {
    pub u: Vec<BigInt>,
    pub u_den: BigUint,
    pub p: SparseMatrix<BigInt>,
    pub q: SparseMatrix<BigInt>,
    pub step_den: BigUint,
}

/// Build the embedded chain per the optimal embedding: chain states are the
/// automaton states reachable by words of length >= m; u places the initial
/// mass mu(a) on the state reached by reading a from the start.
pub fn embed(autom: &OrderMDfa, model: &MarkovModel) -> Result<EmbeddedChain> {
    if autom.m != model.order {
        return Err(Error::Input(format!(
            "automaton order {} differs from model order {}",
            autom.m, model.order
        )));
    }
    let chain = autom.chain_states();
    let r = chain.len();
    let mut row_of = vec![u32::MAX; autom.dfa.num_states()];
    for (i, &q) in chain.iter().enumerate() {
        row_of[q as usize] = i as u32;
    }
    let mut p_mat = SparseMatrix::new(r);
    let mut q_mat = SparseMatrix::new(r);
    let mut contexts = Vec::with_capacity(r);
    let mut finals = Vec::with_capacity(r);
    let mut missing: Vec<String> = Vec::new();
    for (i, &q) in chain.iter().enumerate() {
        let ctx = autom.context(q).expect("chain states carry contexts").to_vec();
        finals.push(autom.dfa.is_final(q));
        match model.row(&ctx) {
            None => missing.push(model.alphabet.decode(&ctx)),
            Some(row) => {
                for l in model.alphabet.letters() {
                    let prob = &row[l as usize];
                    if Zero::is_zero(prob) {
                        continue;
                    }
                    let t = autom.dfa.next(q, l);
                    let col = row_of[t as usize];
                    debug_assert!(col != u32::MAX, "chain must be closed under transitions");
                    if autom.dfa.is_final(t) {
                        q_mat.push(i, col, prob.clone());
                    } else {
                        p_mat.push(i, col, prob.clone());
                    }
                }
            }
        }
        contexts.push(ctx);
    }
    if !missing.is_empty() {
        missing.dedup();
        return Err(Error::MissingContext(missing));
    }
    let mut u = vec![Rat::zero(); r];
    if autom.m == 0 {
        u[row_of[autom.dfa.start as usize] as usize] = Rat::one();
    } else {
        if model.mu().is_empty() {
            return Err(Error::Input("order >= 1 model lacks an initial distribution".into()));
        }
        for (word, mass) in model.mu() {
            if Zero::is_zero(mass) {
                continue;
            }
            let state = autom.dfa.walk(autom.dfa.start, word);
            debug_assert_eq!(autom.context(state), Some(word.as_slice()));
            u[row_of[state as usize] as usize] += mass;
        }
    }
    Ok(EmbeddedChain { m: autom.m, u, p_mat, q_mat, state_of_row: chain, contexts, finals })
}

/// g_i(y) = u (P + yQ)^i v for i = 0..=count, exact, optionally truncated
/// modulo y^(ytrunc+1). Row-vector iteration over the sparse structure.
pub fn series_prefix(chain: &EmbeddedChain, count: usize, ytrunc: Option<usize>) -> Vec<YPoly<Rat>> {
    let (scaled, u_den, step_den) = series_prefix_scaled(chain, count, ytrunc);
    let mut den = BigInt::from(u_den);
    let step = BigInt::from(step_den);
    let mut out = Vec::with_capacity(count + 1);
    for g in scaled {
        out.push(g.map(|c| Rat::new(c.clone(), den.clone())));
        den *= &step;
    }
    out
}

/// Scaled-integer series: term i carries implicit denominator
/// u_den * step_den^i.
pub fn series_prefix_scaled(
    chain: &EmbeddedChain,
    count: usize,
    ytrunc: Option<usize>,
) -> (Vec<YPoly<BigInt>>, BigUint, BigUint) {
    let cap = ytrunc.map_or(count + 1, |n| n + 1).max(1);
    let sc = chain.to_scaled();
    let r = chain.dim();
    let mut w: Vec<YPoly<BigInt>> =
        sc.u.iter().map(|v| YPoly::constant(v.clone(), cap)).collect();
    let mut out = Vec::with_capacity(count + 1);
    out.push(sum_vec(&w, cap));
    for _ in 0..count {
        let mut next = vec![YPoly::zero(cap); r];
        for p in 0..r {
            if w[p].is_zero() {
                continue;
            }
            for (col, val) in sc.p.row(p) {
                let add = w[p].scale(val);
                next[*col as usize] = next[*col as usize].add(&add);
            }
            for (col, val) in sc.q.row(p) {
                let add = w[p].scale(val).shift_y(1);
                next[*col as usize] = next[*col as usize].add(&add);
            }
        }
        w = next;
        out.push(sum_vec(&w, cap));
    }
    (out, sc.u_den, sc.step_den)
}

fn sum_vec(w: &[YPoly<BigInt>], cap: usize) -> YPoly<BigInt> {
    let mut acc = YPoly::zero(cap);
    for v in w {
        acc = acc.add(v);
    }
    acc
}

/// Check that the distribution sums to 1: exactly in rational mode, within
/// 2^-(precision/2) in float mode. The distribution must cover n = 0..len-m.
pub fn distribution_identity_check(chain: &EmbeddedChain, dist: &CountDistribution) -> bool {
    if dist.nmax() < dist.seq_len.saturating_sub(chain.m) {
        return false;
    }
    let mut exact_sum = Rat::zero();
    let mut float_sum: Option<ExtFloat> = None;
    let mut prec = 1024u32;
    for p in &dist.probs {
        match p {
            Prob::Exact(r) => exact_sum += r,
            Prob::Float(f) => {
                prec = f.precision();
                float_sum = Some(match float_sum {
                    None => f.clone(),
                    Some(acc) => acc.add(f),
                });
            }
        }
    }
    match float_sum {
        None => exact_sum == Rat::one(),
        Some(fs) => {
            let total = fs.add(&ExtFloat::from_rat(&exact_sum, prec));
            let err = total.sub(&ExtFloat::one(prec)).abs();
            let tol = ExtFloat::from_rat(
                &Rat::new(BigInt::one(), BigInt::one() << (prec as u64 / 2)),
                prec,
            );
            err <= tol
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::dfa::{build_min_dfa, Dfa};
    use crate::model::MarkovModel;
    use crate::orderm::make_order_m;
    use crate::pattern::{parse_pattern, ClassTable};
    use std::collections::BTreeMap;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    pub(crate) fn toy_chain(pattern: &str, alphabet: &str) -> EmbeddedChain {
        let a = Alphabet::new(alphabet).unwrap();
        let ast = parse_pattern(pattern, &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        let om = make_order_m(&dfa, 0).unwrap();
        let model = MarkovModel::uniform_iid(&a);
        embed(&om, &model).unwrap()
    }

    #[test]
    fn row_sums_are_one_and_sparsity_bounded() {
        let chain = toy_chain("ADAD", "ABCD");
        assert_eq!(chain.dim(), 5);
        assert!(chain.nnz() <= chain.dim() * 4);
        for i in 0..chain.dim() {
            let mut sum = Rat::zero();
            for (_, v) in chain.p_mat.row(i) {
                sum += v;
            }
            for (_, v) in chain.q_mat.row(i) {
                sum += v;
            }
            assert_eq!(sum, Rat::one(), "row {i}");
        }
        // P never targets final columns, Q only targets final columns
        for i in 0..chain.dim() {
            for (c, _) in chain.p_mat.row(i) {
                assert!(!chain.finals[*c as usize]);
            }
            for (c, _) in chain.q_mat.row(i) {
                assert!(chain.finals[*c as usize]);
            }
        }
    }

    #[test]
    fn single_state_all_final() {
        let a = Alphabet::new("AB").unwrap();
        // hand-built one-state automaton accepting everything
        let dfa = Dfa::from_parts(a.clone(), vec![vec![0, 0]], 0, vec![true]);
        let om = make_order_m(&dfa, 0).unwrap();
        let model = MarkovModel::uniform_iid(&a);
        let chain = embed(&om, &model).unwrap();
        assert_eq!(chain.dim(), 1);
        assert_eq!(chain.p_mat.nnz(), 0);
        let total: Rat = chain.q_mat.row(0).iter().map(|(_, v)| v.clone()).sum();
        assert_eq!(total, Rat::one());
    }

    #[test]
    fn order_one_transition_structure_w1() {
        // the 12-state automaton for AB.AA.AB is already non-1-ambiguous;
        // state 0 is reached only by B, state 1 only by A, so row 0 holds
        // pi(B, B) at column 0 and pi(B, A) at column 1
        let a = Alphabet::new("AB").unwrap();
        let ast = parse_pattern("AB(A|B)AA(A|B)AB", &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        let om = make_order_m(&dfa, 1).unwrap();
        let mut pi = BTreeMap::new();
        pi.insert(a.encode("A").unwrap(), vec![rat(1, 3), rat(2, 3)]);
        pi.insert(a.encode("B").unwrap(), vec![rat(1, 5), rat(4, 5)]);
        let mut mu = BTreeMap::new();
        mu.insert(a.encode("A").unwrap(), rat(1, 2));
        mu.insert(a.encode("B").unwrap(), rat(1, 2));
        let model = MarkovModel::new(a.clone(), 1, mu, pi).unwrap();
        let chain = embed(&om, &model).unwrap();
        assert_eq!(chain.dim(), 12);
        // locate the rows for automaton states 0 and 1 (transients dropped)
        let row0 = chain.state_of_row.iter().position(|&s| {
            om.context(s) == Some(&a.encode("B").unwrap()[..]) && {
                let mut self_loop = false;
                for (c, _) in chain.p_mat.row(chain.state_of_row.iter().position(|&t| t == s).unwrap()) {
                    if *c as usize == chain.state_of_row.iter().position(|&t| t == s).unwrap() {
                        self_loop = true;
                    }
                }
                self_loop
            }
        });
        assert!(row0.is_some(), "a B-context state with a self-loop exists");
        let i = row0.unwrap();
        let mut entries: Vec<Rat> = chain.p_mat.row(i).iter().map(|(_, v)| v.clone()).collect();
        entries.sort();
        assert_eq!(entries, vec![rat(1, 5), rat(4, 5)]); // pi(B,B), pi(B,A)
        // u places mass through the automaton walk
        let total: Rat = chain.u.iter().sum();
        assert_eq!(total, Rat::one());
    }

    #[test]
    fn series_terms_match_hand_counts() {
        let chain = toy_chain("ADAD", "ABCD");
        let g = series_prefix(&chain, 4, None);
        // g_0 = u v = 1
        assert_eq!(g[0].coeff(0), Some(&Rat::one()));
        assert_eq!(g[0].deg(), Some(0));
        // no occurrence fits in fewer than 4 letters
        for gi in g.iter().take(4) {
            assert_eq!(gi.deg(), Some(0), "y-degree 0 expected before length 4");
            assert_eq!(gi.coeff(0), Some(&Rat::one()));
        }
        // P(one occurrence ending at 4) = 1/256
        assert_eq!(g[4].coeff(1), Some(&rat(1, 256)));
        // conservation at y = 1
        for gi in &g {
            let at_one: Rat = gi.coeffs().iter().sum();
            assert_eq!(at_one, Rat::one());
        }
    }

    #[test]
    fn truncation_drops_high_y_terms() {
        let chain = toy_chain("AB", "AB");
        let full = series_prefix(&chain, 8, None);
        let trunc = series_prefix(&chain, 8, Some(1));
        for (f, t) in full.iter().zip(&trunc) {
            for k in 0..2 {
                assert_eq!(f.coeff(k), t.coeff(k), "y^{k}");
            }
            assert!(t.deg().unwrap_or(0) <= 1);
        }
    }

    #[test]
    fn indicator_path_counts_match_scan() {
        // walking the embedding along a deterministic word, the number of
        // occurrence-tagged transitions equals the scan count
        let a = Alphabet::new("AB").unwrap();
        let ast = parse_pattern("AB(A|B)AB", &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        let om = make_order_m(&dfa, 0).unwrap();
        let model = MarkovModel::uniform_iid(&a);
        let chain = embed(&om, &model).unwrap();
        let row_of = |state: u32| chain.state_of_row.iter().position(|&s| s == state).unwrap();
        for len in 0..=12usize {
            for w in a.words(len) {
                let mut row = row_of(om.dfa.start);
                let mut tagged = 0usize;
                for &letter in &w {
                    let next_state = om.dfa.next(chain.state_of_row[row], letter);
                    let next_row = row_of(next_state);
                    let in_q = chain.q_mat.row(row).iter().any(|(c, _)| *c as usize == next_row);
                    let in_p = chain.p_mat.row(row).iter().any(|(c, _)| *c as usize == next_row);
                    assert!(in_q ^ in_p, "transition must be in exactly one of P, Q");
                    tagged += in_q as usize;
                    row = next_row;
                }
                assert_eq!(tagged, dfa.scan(&w).len(), "word {}", a.decode(&w));
            }
        }
    }

    #[test]
    fn probability_conservation_at_y_one_generic_model() {
        let a = Alphabet::new("AB").unwrap();
        let seq = a.encode("ABAABBBAABABABBABAAABBBABB").unwrap();
        let model = MarkovModel::fit_mle(&a, &seq, 1).unwrap();
        let ast = parse_pattern("AB", &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        let om = make_order_m(&dfa, 1).unwrap();
        let chain = embed(&om, &model).unwrap();
        let g = series_prefix(&chain, 6, None);
        for gi in &g {
            let at_one: Rat = gi.coeffs().iter().sum();
            assert_eq!(at_one, Rat::one());
        }
    }
}
