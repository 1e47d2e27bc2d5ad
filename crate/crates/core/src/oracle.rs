//! Independent ground truth: exhaustive enumeration over all sequences with
//! exact model weights, and seeded Monte Carlo sampling.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use patdist_exact::{reduce_with_den, Rat};

use crate::alphabet::Word;
use crate::dfa::Dfa;
use crate::error::{Error, Result};
use crate::model::MarkovModel;

#[derive(Clone, Debug)]
pub enum OracleResult {
    Exhaustive {
        probs: BTreeMap<usize, Rat>,
    },
    MonteCarlo {
        /// count -> (estimate, standard error)
        estimates: BTreeMap<usize, (f64, f64)>,
        samples: u64,
    },
}

impl OracleResult {
    pub fn exact(&self) -> Option<&BTreeMap<usize, Rat>> {
        match self {
            OracleResult::Exhaustive { probs } => Some(probs),
            _ => None,
        }
    }
}

/// SplitMix64: the 64-bit mixer with additive constant 0x9E3779B97F4A7C15
/// (golden-ratio increment) and the Stafford mix13 finalizer. Chosen for a
/// documented, platform-independent sample path.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

/// Enumerate every sequence of the given length, weight it by its exact
/// model probability, count occurrences by scanning (positions within the
/// first m letters are ignored), and aggregate exactly.
pub fn exhaustive(dfa: &Dfa, model: &MarkovModel, seq_len: usize, budget: u64) -> Result<OracleResult> {
    let k = model.alphabet.len() as u64;
    let m = model.order;
    if seq_len < m {
        return Err(Error::Input("sequence shorter than the model order".into()));
    }
    let total = k.checked_pow(seq_len as u32).filter(|&t| t <= budget).ok_or_else(|| {
        Error::Input(format!(
            "enumeration of {k}^{seq_len} sequences exceeds the budget {budget}"
        ))
    })?;
    let _ = total;
    // integer-scaled transition rows: value * step_den per context
    let mut step_den = BigUint::one();
    for ctx in model.contexts() {
        for p in model.row(ctx).unwrap() {
            step_den = num_integer::lcm(step_den.clone(), p.denom().magnitude().clone());
        }
    }
    let scale_row = |ctx: &Word| -> Option<Vec<BigInt>> {
        model.row(ctx).map(|row| {
            row.iter()
                .map(|p| p.numer() * BigInt::from(&step_den / p.denom().magnitude()))
                .collect()
        })
    };
    let mut mu_den = BigUint::one();
    for p in model.mu().values() {
        mu_den = num_integer::lcm(mu_den.clone(), p.denom().magnitude().clone());
    }

    let mut tallies: BTreeMap<usize, BigInt> = BTreeMap::new();
    let mut word: Word = vec![0; seq_len];
    // depth-first over the sequence tree keeping partial weights and states
    struct Frame {
        state: u32,
        count: usize,
        weight: BigInt,
    }
    let init_weight = |word: &Word| -> Option<(BigInt, u32, usize)> {
        if m == 0 {
            return Some((BigInt::from(mu_den.clone()), dfa.start, 0));
        }
        let prefix = &word[..m];
        let mass = model.mu().get(prefix)?;
        if Zero::is_zero(mass) {
            return None;
        }
        let w = mass.numer() * BigInt::from(&mu_den / mass.denom().magnitude());
        // occurrences inside the first m letters are deliberately ignored
        let state = dfa.walk(dfa.start, prefix);
        Some((w, state, 0))
    };
    // enumerate the first m letters separately (their weight is mu)
    let mut heads: Vec<Word> = Vec::new();
    if m == 0 {
        heads.push(Vec::new());
    } else {
        for h in model.alphabet.words(m) {
            heads.push(h);
        }
    }
    let den = &mu_den * step_den.pow((seq_len - m) as u32);
    for head in heads {
        word[..m].copy_from_slice(&head);
        let Some((w0, s0, c0)) = init_weight(&word) else { continue };
        let mut stack: Vec<(usize, u8, Frame)> = Vec::new();
        let mut frame = Frame { state: s0, count: c0, weight: w0 };
        let mut depth = m;
        let mut letter: u8 = 0;
        loop {
            if depth == seq_len {
                *tallies.entry(frame.count).or_insert_with(|| BigInt::ZERO) +=
                    &frame.weight * BigInt::from(step_den.pow(0u32));
                // backtrack
                match stack.pop() {
                    None => break,
                    Some((d, l, f)) => {
                        depth = d;
                        letter = l + 1;
                        frame = f;
                        continue;
                    }
                }
            }
            if letter as usize >= model.alphabet.len() {
                match stack.pop() {
                    None => break,
                    Some((d, l, f)) => {
                        depth = d;
                        letter = l + 1;
                        frame = f;
                        continue;
                    }
                }
            }
            // descend with this letter
            let ctx: Word = if m == 0 { Vec::new() } else { word[depth - m..depth].to_vec() };
            let row = scale_row(&ctx).ok_or_else(|| {
                Error::MissingContext(vec![model.alphabet.decode(&ctx)])
            })?;
            let lw = &row[letter as usize];
            if Zero::is_zero(lw) {
                letter += 1;
                continue;
            }
            word[depth] = letter;
            let ns = dfa.next(frame.state, letter);
            let nf = Frame {
                state: ns,
                count: frame.count + dfa.is_final(ns) as usize,
                weight: &frame.weight * lw,
            };
            stack.push((depth, letter, std::mem::replace(&mut frame, nf)));
            depth += 1;
            letter = 0;
        }
    }
    let probs: BTreeMap<usize, Rat> = tallies
        .into_iter()
        .map(|(c, w)| (c, reduce_with_den(w, den.clone())))
        .filter(|(_, p)| !Zero::is_zero(p))
        .collect();
    Ok(OracleResult::Exhaustive { probs })
}

/// Reproducible sampling: exact rational inverse-CDF per letter realized as
/// precomputed 64-bit thresholds (ceil(cum * 2^64)), compared against raw
/// SplitMix64 draws. Shards the budget over a fixed shard count with
/// per-shard derived seeds, so results are independent of the worker count.
pub fn monte_carlo(
    dfa: &Dfa,
    model: &MarkovModel,
    seq_len: usize,
    samples: u64,
    seed: u64,
    jobs: usize,
) -> Result<OracleResult> {
    if samples == 0 {
        return Err(Error::Input("need at least one sample".into()));
    }
    let m = model.order;
    if seq_len < m {
        return Err(Error::Input("sequence shorter than the model order".into()));
    }
    // thresholds: letter j iff draw < t_j, exact rational inverse CDF;
    // cum = 1 maps to 2^64, hence u128 storage
    let to_thresholds = |cum: &[Rat]| -> Vec<u128> {
        cum.iter()
            .map(|c| {
                let scaled = c * Rat::from_integer(BigInt::from(BigUint::one() << 64u32));
                scaled.ceil().to_integer().to_u128().unwrap_or(0)
            })
            .collect()
    };
    let mut ctx_thresholds: BTreeMap<Word, Vec<u128>> = BTreeMap::new();
    for ctx in model.contexts() {
        let row = model.row(ctx).unwrap();
        let mut cum = Vec::with_capacity(row.len());
        let mut acc = Rat::zero();
        for p in row {
            acc += p;
            cum.push(acc.clone());
        }
        ctx_thresholds.insert(ctx.clone(), to_thresholds(&cum));
    }
    let mu_entries: Vec<(Word, Rat)> =
        model.mu().iter().map(|(w, p)| (w.clone(), p.clone())).collect();
    let mu_thresholds: Vec<u128> = {
        let mut cum = Vec::new();
        let mut acc = Rat::zero();
        for (_, p) in &mu_entries {
            acc += p;
            cum.push(acc.clone());
        }
        to_thresholds(&cum)
    };

    let shards = 64u64.min(samples);
    let mut shard_seeds = Vec::with_capacity(shards as usize);
    let mut seeder = SplitMix64::new(seed);
    for _ in 0..shards {
        shard_seeds.push(seeder.next_u64());
    }
    let shard_samples: Vec<u64> =
        (0..shards).map(|s| samples / shards + u64::from(s < samples % shards)).collect();

    let run_shard = |shard: usize| -> Result<BTreeMap<usize, u64>> {
        let mut rng = SplitMix64::new(shard_seeds[shard]);
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        let mut ctx: Word = vec![0; m];
        for _ in 0..shard_samples[shard] {
            let mut state = dfa.start;
            let mut occ = 0usize;
            if m > 0 {
                let draw = rng.next_u64() as u128;
                let mut idx = mu_entries.len() - 1;
                for (j, t) in mu_thresholds.iter().enumerate() {
                    if draw < *t {
                        idx = j;
                        break;
                    }
                }
                ctx.copy_from_slice(&mu_entries[idx].0);
                state = dfa.walk(state, &ctx);
            }
            for _ in m..seq_len {
                let th = ctx_thresholds.get(&ctx[..].to_vec()).ok_or_else(|| {
                    Error::MissingContext(vec![model.alphabet.decode(&ctx)])
                })?;
                let draw = rng.next_u64() as u128;
                let mut letter = (model.alphabet.len() - 1) as u8;
                for (j, t) in th.iter().enumerate() {
                    if draw < *t {
                        letter = j as u8;
                        break;
                    }
                }
                state = dfa.next(state, letter);
                occ += dfa.is_final(state) as usize;
                if m > 0 {
                    ctx.rotate_left(1);
                    ctx[m - 1] = letter;
                }
            }
            *counts.entry(occ).or_insert(0) += 1;
        }
        Ok(counts)
    };

    let jobs = if jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        jobs
    }
    .min(shards as usize)
    .max(1);
    let mut merged: BTreeMap<usize, u64> = BTreeMap::new();
    if jobs <= 1 {
        for s in 0..shards as usize {
            for (c, n) in run_shard(s)? {
                *merged.entry(c).or_insert(0) += n;
            }
        }
    } else {
        let results = std::sync::Mutex::new(Vec::new());
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| -> Result<()> {
            let mut handles = Vec::new();
            for _ in 0..jobs {
                handles.push(scope.spawn(|| -> Result<()> {
                    loop {
                        let s = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if s >= shards as usize {
                            return Ok(());
                        }
                        let r = run_shard(s)?;
                        results.lock().unwrap().push(r);
                    }
                }));
            }
            for h in handles {
                h.join().map_err(|_| Error::Input("sampler panicked".into()))??;
            }
            Ok(())
        })?;
        for r in results.into_inner().unwrap() {
            for (c, n) in r {
                *merged.entry(c).or_insert(0) += n;
            }
        }
    }
    let n = samples as f64;
    let estimates = merged
        .into_iter()
        .map(|(c, k)| {
            let p = k as f64 / n;
            (c, (p, (p * (1.0 - p) / n).sqrt()))
        })
        .collect();
    Ok(OracleResult::MonteCarlo { estimates, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::dfa::build_min_dfa;
    use crate::pattern::{parse_pattern, ClassTable};

    fn setup(pattern: &str, alphabet: &str) -> (Dfa, MarkovModel) {
        let a = Alphabet::new(alphabet).unwrap();
        let ast = parse_pattern(pattern, &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        (dfa, MarkovModel::uniform_iid(&a))
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ab_length_two() {
        let (dfa, model) = setup("AB", "AB");
        let r = exhaustive(&dfa, &model, 2, 1_000_000).unwrap();
        let probs = r.exact().unwrap();
        assert_eq!(probs.get(&1), Some(&rat(1, 4)));
        assert_eq!(probs.get(&0), Some(&rat(3, 4)));
    }

    #[test]
    fn length_equals_order_gives_point_mass() {
        let a = Alphabet::new("AB").unwrap();
        let ast = parse_pattern("AB", &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        let seq = a.encode("ABBBAABAB").unwrap();
        let model = MarkovModel::fit_mle(&a, &seq, 1).unwrap();
        let r = exhaustive(&dfa, &model, 1, 1_000_000).unwrap();
        assert_eq!(r.exact().unwrap().get(&0), Some(&Rat::one()));
    }

    #[test]
    fn budget_is_enforced() {
        let (dfa, model) = setup("AB", "AB");
        assert!(exhaustive(&dfa, &model, 40, 1_000_000).is_err());
    }

    #[test]
    fn exhaustive_matches_full_recursion_exactly() {
        use crate::embed::embed;
        use crate::orderm::make_order_m;
        use crate::recursion::{full_distribution, Mode};
        let (dfa, model) = setup("ADAD", "ABCD");
        let r = exhaustive(&dfa, &model, 8, 1_000_000).unwrap();
        let om = make_order_m(&dfa, 0).unwrap();
        let chain = embed(&om, &model).unwrap();
        let dist = full_distribution(&chain, 8, 8, Mode::Exact, 0).unwrap();
        let probs = r.exact().unwrap();
        for n in 0..=8usize {
            let expect = probs.get(&n).cloned().unwrap_or_else(Rat::zero);
            match dist.prob(n).unwrap() {
                crate::distribution::Prob::Exact(p) => assert_eq!(*p, expect, "n = {n}"),
                _ => panic!(),
            }
        }
        let total: Rat = probs.values().sum();
        assert_eq!(total, Rat::one());
    }

    #[test]
    fn monte_carlo_is_deterministic_and_sane() {
        let (dfa, model) = setup("AB", "AB");
        let a = monte_carlo(&dfa, &model, 50, 1000, 42, 2).unwrap();
        let b = monte_carlo(&dfa, &model, 50, 1000, 42, 7).unwrap();
        match (&a, &b) {
            (
                OracleResult::MonteCarlo { estimates: ea, .. },
                OracleResult::MonteCarlo { estimates: eb, .. },
            ) => assert_eq!(ea, eb),
            _ => panic!(),
        }
        // compare against exhaustive on a small case within 5 sigma
        let ex = exhaustive(&dfa, &model, 10, 1 << 12).unwrap();
        let mc = monte_carlo(&dfa, &model, 10, 40_000, 7, 0).unwrap();
        if let (OracleResult::Exhaustive { probs }, OracleResult::MonteCarlo { estimates, .. }) =
            (&ex, &mc)
        {
            for (n, truth) in probs {
                let t = truth.numer().to_f64().unwrap() / truth.denom().to_f64().unwrap();
                let (est, se) = estimates.get(n).copied().unwrap_or((0.0, 0.0));
                assert!((est - t).abs() <= 5.0 * se.max(1e-4), "n={n} est={est} truth={t}");
            }
        }
    }

    #[test]
    fn degenerate_model_is_deterministic() {
        let a = Alphabet::new("AB").unwrap();
        let ast = parse_pattern("AA", &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        // point mass: always letter A
        let mut pi = BTreeMap::new();
        pi.insert(Vec::new(), vec![Rat::one(), Rat::zero()]);
        let model = MarkovModel::new(a, 0, BTreeMap::new(), pi).unwrap();
        let mc = monte_carlo(&dfa, &model, 5, 100, 3, 1).unwrap();
        if let OracleResult::MonteCarlo { estimates, .. } = mc {
            // AAAAA has occurrences of AA ending at 2,3,4,5
            assert_eq!(estimates.len(), 1);
            assert_eq!(estimates.get(&4), Some(&(1.0, 0.0)));
        }
    }
}
