//! Interchangeable solving strategies behind a common trait, registered by
//! name and selected at runtime ("auto" picks by the cost profile of the
//! job). All strategies answer the same question: the distribution of the
//! occurrence count for a given embedded chain and sequence length.

use std::time::Instant;

use crate::distribution::CountDistribution;
use crate::embed::EmbeddedChain;
use crate::error::{Error, Result};
use crate::fraction::{probe_degree, reconstruct_gf, BivariateFraction, ReconstructOpts};
use crate::lifting::{bivariate_lift, LiftKind};
use crate::recursion::{full_distribution, partial_distribution, Mode, PartialOpts};
use crate::spectral::dominant_eigenvalue;
use patdist_exact::{ExtFloat, Rat};

#[derive(Clone, Debug)]
pub struct SolveContext<'a> {
    pub chain: &'a EmbeddedChain,
    pub seq_len: usize,
    pub nmax: usize,
    pub mode: Mode,
    pub precision_bits: u32,
    pub eta: f64,
    pub seed: u64,
    pub jobs: usize,
    pub memory_budget_bytes: u64,
    /// Reconstruct the fraction with full y-degrees so it can be reused for
    /// other count ranges (set when the caller persists it).
    pub full_y_fraction: bool,
    /// In: cached fraction if available. Out: the fraction a lifting
    /// strategy reconstructed, for the caller to persist.
    pub fraction: Option<BivariateFraction>,
}

impl<'a> SolveContext<'a> {
    pub fn new(chain: &'a EmbeddedChain, seq_len: usize, nmax: usize) -> Self {
        SolveContext {
            chain,
            seq_len,
            nmax,
            mode: Mode::Float,
            precision_bits: 1024,
            eta: 1e-15,
            seed: 0x5EED_CAFE,
            jobs: 0,
            memory_budget_bytes: 8 << 30,
            full_y_fraction: false,
            fraction: None,
        }
    }
}

pub trait CountingStrategy: Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &mut SolveContext) -> Result<CountDistribution>;
}

pub struct FullRecursion;

impl CountingStrategy for FullRecursion {
    fn name(&self) -> &'static str {
        "full"
    }

    fn run(&self, ctx: &mut SolveContext) -> Result<CountDistribution> {
        let t = Instant::now();
        let mut dist =
            full_distribution(ctx.chain, ctx.seq_len, ctx.nmax, ctx.mode, ctx.precision_bits)?;
        dist.meta.phases.push(("recursion".into(), t.elapsed().as_secs_f64()));
        Ok(dist)
    }
}

pub struct PartialRecursion;

impl CountingStrategy for PartialRecursion {
    fn name(&self) -> &'static str {
        "partial"
    }

    fn run(&self, ctx: &mut SolveContext) -> Result<CountDistribution> {
        let prec = ctx.precision_bits;
        let opts = PartialOpts {
            eta: ctx.eta,
            precision_bits: prec,
            power_eps_bits: prec.saturating_sub(16).max(32),
            ..Default::default()
        };
        // run the spectral phase separately so its time is reported
        let t1 = Instant::now();
        let fc = ctx.chain.to_float(prec);
        let eps = ExtFloat::from_rat(
            &Rat::new(
                num_bigint::BigInt::from(1),
                num_bigint::BigInt::from(1) << opts.power_eps_bits as u64,
            ),
            prec,
        );
        let spectral = dominant_eigenvalue(&fc.p, prec, &eps, opts.power_iter_cap)?;
        let t1 = t1.elapsed().as_secs_f64();
        let t3 = Instant::now();
        let mut dist = partial_distribution(
            ctx.chain,
            ctx.seq_len,
            ctx.nmax,
            &PartialOpts { forced_lambda: Some(spectral.lambda.clone()), ..opts },
        )?;
        dist.meta.power_iterations = Some(spectral.iterations);
        dist.meta.phases.push(("power-method".into(), t1));
        dist.meta.phases.push(("recursion".into(), t3.elapsed().as_secs_f64()));
        Ok(dist)
    }
}

pub struct Lifting {
    pub kind: LiftKind,
}

impl CountingStrategy for Lifting {
    fn name(&self) -> &'static str {
        match self.kind {
            LiftKind::HighOrder => "lifting",
            LiftKind::Fiduccia => "fiduccia",
        }
    }

    fn run(&self, ctx: &mut SolveContext) -> Result<CountDistribution> {
        let mut phases = Vec::new();
        if ctx.fraction.is_none() {
            let t2 = Instant::now();
            let opts = ReconstructOpts {
                seed: ctx.seed,
                jobs: ctx.jobs,
                memory_budget_bytes: ctx.memory_budget_bytes,
                ..Default::default()
            };
            let ytrunc = if ctx.full_y_fraction { None } else { Some(ctx.nmax) };
            let d = probe_degree(ctx.chain, &opts)?;
            let frac = reconstruct_gf(ctx.chain, d, ytrunc, &opts)?;
            phases.push(("fraction-reconstruction".into(), t2.elapsed().as_secs_f64()));
            ctx.fraction = Some(frac);
        }
        let frac = ctx.fraction.as_ref().unwrap();
        let t4 = Instant::now();
        let mut dist = bivariate_lift(
            frac,
            ctx.seq_len,
            ctx.nmax,
            ctx.mode,
            ctx.precision_bits,
            self.kind,
        )?;
        phases.push(("lifting".into(), t4.elapsed().as_secs_f64()));
        dist.meta.phases = [dist.meta.phases, phases].concat();
        Ok(dist)
    }
}

pub struct StrategyRegistry {
    entries: Vec<Box<dyn CountingStrategy>>,
}

impl StrategyRegistry {
    pub fn standard() -> Self {
        let mut reg = StrategyRegistry { entries: Vec::new() };
        reg.register(Box::new(FullRecursion));
        reg.register(Box::new(PartialRecursion));
        reg.register(Box::new(Lifting { kind: LiftKind::HighOrder }));
        reg.register(Box::new(Lifting { kind: LiftKind::Fiduccia }));
        reg
    }

    pub fn register(&mut self, s: Box<dyn CountingStrategy>) {
        self.entries.push(s);
    }

    pub fn get(&self, name: &str) -> Option<&dyn CountingStrategy> {
        self.entries.iter().find(|s| s.name() == name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }

    /// Resolve a requested method name, mapping "auto" through the cost
    /// heuristic.
    pub fn resolve(&self, requested: &str, ctx: &SolveContext) -> Result<&dyn CountingStrategy> {
        let name = if requested == "auto" {
            select_method(&ChainStats {
                dim: ctx.chain.dim(),
                nnz: ctx.chain.nnz(),
                seq_len: ctx.seq_len,
                nmax: ctx.nmax,
                fraction_cached: ctx.fraction.is_some(),
            })
        } else {
            requested
        };
        self.get(name).ok_or_else(|| {
            Error::Input(format!(
                "unknown method '{name}'; available: {}",
                self.names().join(", ")
            ))
        })
    }
}

#[derive(Clone, Debug)]
pub struct ChainStats {
    pub dim: usize,
    pub nnz: usize,
    pub seq_len: usize,
    pub nmax: usize,
    pub fraction_cached: bool,
}

/// Sparse full recursion costs about nnz * n * len operations; the partial
/// recursion replaces len by the stabilization rank but is quadratic in n;
/// lifting pays a reconstruction cubic in the fraction degree (bounded by
/// the dimension) and then log(len) per query.
const FULL_COST_CEILING: u128 = 200_000_000;
const LIFTING_DIM_CEILING: usize = 128;
const LIFTING_NMAX_FLOOR: usize = 32;

pub fn select_method(stats: &ChainStats) -> &'static str {
    if stats.fraction_cached {
        return "lifting";
    }
    let full_cost = stats.nnz as u128 * (stats.nmax as u128 + 1) * stats.seq_len as u128;
    if full_cost <= FULL_COST_CEILING {
        return "full";
    }
    if stats.dim <= LIFTING_DIM_CEILING && stats.nmax >= LIFTING_NMAX_FLOOR {
        return "lifting";
    }
    "partial"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::dfa::build_min_dfa;
    use crate::embed::embed;
    use crate::model::MarkovModel;
    use crate::orderm::make_order_m;
    use crate::pattern::{parse_pattern, ClassTable};

    fn toy_chain(pattern: &str, alphabet: &str) -> EmbeddedChain {
        let a = Alphabet::new(alphabet).unwrap();
        let ast = parse_pattern(pattern, &a, &ClassTable::empty()).unwrap();
        let dfa = build_min_dfa(&ast, &a).unwrap();
        let om = make_order_m(&dfa, 0).unwrap();
        embed(&om, &MarkovModel::uniform_iid(&a)).unwrap()
    }

    #[test]
    fn selection_rule_boundaries() {
        // cached fraction always wins
        let s = ChainStats { dim: 5000, nnz: 20000, seq_len: 100, nmax: 1, fraction_cached: true };
        assert_eq!(select_method(&s), "lifting");
        // tiny job: full recursion
        let s = ChainStats { dim: 50, nnz: 200, seq_len: 1000, nmax: 10, fraction_cached: false };
        assert_eq!(select_method(&s), "full");
        // small automaton, many counts: lifting
        let s =
            ChainStats { dim: 64, nnz: 256, seq_len: 10_000_000, nmax: 100, fraction_cached: false };
        assert_eq!(select_method(&s), "lifting");
        // large automaton, few counts: partial recursion
        let s =
            ChainStats { dim: 5000, nnz: 20000, seq_len: 100_000_000, nmax: 5, fraction_cached: false };
        assert_eq!(select_method(&s), "partial");
    }

    #[test]
    fn registry_lists_and_dispatches() {
        let reg = StrategyRegistry::standard();
        assert_eq!(reg.names(), vec!["full", "partial", "lifting", "fiduccia"]);
        assert!(reg.get("lifting").is_some());
        assert!(reg.get("nope").is_none());
        let chain = toy_chain("AB", "AB");
        let ctx = SolveContext::new(&chain, 100, 2);
        assert_eq!(reg.resolve("auto", &ctx).unwrap().name(), "full");
        assert!(reg.resolve("bogus", &ctx).is_err());
    }

    #[test]
    fn all_methods_agree_on_a_toy_job() {
        let chain = toy_chain("ADAD", "ABCD");
        let reg = StrategyRegistry::standard();
        let mut results = Vec::new();
        for name in ["full", "partial", "lifting", "fiduccia"] {
            let mut ctx = SolveContext::new(&chain, 300, 4);
            ctx.mode = if name == "full" { Mode::Exact } else { ctx.mode };
            if name == "lifting" || name == "fiduccia" {
                ctx.mode = Mode::Exact;
            }
            let dist = reg.get(name).unwrap().run(&mut ctx).unwrap();
            assert_eq!(dist.method, name);
            results.push(dist);
        }
        for pair in results.windows(2) {
            for n in 0..=4 {
                let rel = pair[0].prob(n).unwrap().rel_diff(pair[1].prob(n).unwrap());
                assert!(rel <= 1e-12, "{} vs {} at n={n}: {rel:e}", pair[0].method, pair[1].method);
            }
        }
        // phase timings recorded
        assert!(results.iter().all(|d| !d.meta.phases.is_empty()));
    }
}
