//! End-to-end orchestration: pattern -> automaton -> model -> embedding,
//! strategy dispatch, fraction caching, and report emission.

use std::io::Write;
use std::time::Instant;

use patdist_core::fraction::BivariateFraction;
use patdist_core::model::read_sequence;
use patdist_core::oracle::{exhaustive, monte_carlo, OracleResult};
use patdist_core::recursion::Mode;
use patdist_core::strategy::{SolveContext, StrategyRegistry};
use patdist_core::{
    build_min_dfa, embed, make_order_m, parse_pattern, Alphabet, ClassTable, Dfa, EmbeddedChain,
    Error, MarkovModel, OrderMDfa,
};
use sha2::{Digest, Sha256};

use crate::report::{print_report, Report};
use crate::{
    AutomatonArgs, DistArgs, FitArgs, ModeArg, ModelSource, MuArg, OracleArgs, OracleKind,
};



fn build_automaton(pattern: &str, alphabet: &str, classes: &str, order: usize) -> Result<(Alphabet, Dfa, OrderMDfa), Error> {
    let alpha = Alphabet::new(alphabet)?;
    let table = if classes.is_empty() {
        ClassTable::empty()
    } else {
        ClassTable::parse(classes, &alpha)?
    };
    let ast = parse_pattern(pattern, &alpha, &table)?;
    let dfa = build_min_dfa(&ast, &alpha)?;
    let om = make_order_m(&dfa, order)?;
    Ok((alpha, dfa, om))
}

fn load_model(src: &ModelSource, alpha: &Alphabet) -> Result<MarkovModel, Error> {
    let mut model = if src.uniform {
        MarkovModel::uniform_iid(alpha)
    } else if let Some(path) = &src.model {
        let m = MarkovModel::load(path)?;
        if m.alphabet != *alpha {
            return Err(Error::Input("model alphabet differs from --alphabet".into()));
        }
        m
    } else if let Some(path) = &src.fit {
        let order = src
            .order
            .ok_or_else(|| Error::Input("--fit requires --order".into()))?;
        let text = std::fs::read_to_string(path)?;
        let seq = read_sequence(&text, alpha, src.skip_unknown)?;
        MarkovModel::fit_mle(alpha, &seq, order)?
    } else {
        return Err(Error::Input(
            "choose a model source: --uniform, --model FILE, or --fit FILE --order M".into(),
        ));
    };
    if src.mu == MuArg::Stationary && model.order >= 1 {
        let mu = model.stationary_mu(1024, 4096)?;
        model.set_mu(mu, true)?;
    }
    Ok(model)
}

fn source_hash(args: &DistArgs, model: &MarkovModel) -> String {
    let mut h = Sha256::new();
    h.update(args.alphabet.as_bytes());
    h.update([0]);
    h.update(args.pattern.as_bytes());
    h.update([0]);
    h.update(args.classes.as_bytes());
    h.update([0]);
    h.update(model.to_text().as_bytes());
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run_dist(args: &DistArgs) -> Result<(), Error> {
    let (n_min, n_max) = match (args.n, args.n_min, args.n_max) {
        (Some(n), None, None) => (n, n),
        (None, lo, hi) => {
            let hi = hi.ok_or_else(|| Error::Input("give --n or --n-max".into()))?;
            (lo.unwrap_or(0), hi)
        }
        _ => return Err(Error::Input("--n conflicts with --n-min/--n-max".into())),
    };
    if n_min > n_max {
        return Err(Error::Input("empty count range".into()));
    }
    let t_build = Instant::now();
    let alpha = Alphabet::new(&args.alphabet)?;
    let model = load_model(&args.model, &alpha)?;
    let (_, dfa, om) = build_automaton(&args.pattern, &args.alphabet, &args.classes, model.order)?;
    let chain: EmbeddedChain = embed(&om, &model)?;
    let t_build = t_build.elapsed().as_secs_f64();

    let mut ctx = SolveContext::new(&chain, args.length, n_max);
    ctx.mode = match args.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Float => Mode::Float,
    };
    ctx.precision_bits = args.precision_bits;
    ctx.eta = args.eta;
    ctx.seed = args.seed;
    ctx.jobs = args.jobs;
    ctx.memory_budget_bytes = args.memory_budget;
    // a persisted fraction must stay usable for later queries: keep full y
    ctx.full_y_fraction = args.fraction_cache.is_some();

    let hash = source_hash(args, &model);
    if let Some(path) = &args.fraction_cache {
        if path.exists() {
            let frac = BivariateFraction::load(path)?;
            if frac.source != hash {
                return Err(Error::Input(format!(
                    "fraction cache {} was built for different inputs",
                    path.display()
                )));
            }
            let usable = frac.ytrunc.map_or(true, |yt| yt >= n_max);
            if usable {
                ctx.fraction = Some(frac);
            } else {
                eprintln!(
                    "note: cached fraction is truncated below n = {n_max}; reconstructing"
                );
            }
        }
    }
    let had_cache = ctx.fraction.is_some();

    let registry = StrategyRegistry::standard();
    let strategy = registry.resolve(&args.method, &ctx)?;
    let dist = strategy.run(&mut ctx)?;

    if let (Some(path), Some(frac), false) = (&args.fraction_cache, &ctx.fraction, had_cache) {
        let mut frac = frac.clone();
        frac.source = hash.clone();
        frac.save(path)?;
    }

    let report = Report {
        pattern: args.pattern.clone(),
        alphabet: args.alphabet.clone(),
        requested_method: args.method.clone(),
        order: model.order,
        mu_inexact: model.mu_inexact,
        automaton_states: dfa.num_states(),
        chain_states: chain.dim(),
        final_states: om.dfa.num_finals(),
        nnz: chain.nnz(),
        seq_len: args.length,
        n_min,
        n_max,
        build_seconds: t_build,
        dist,
        full_precision: args.full_precision,
    };
    let mut out = std::io::stdout().lock();
    print_report(&mut out, &report, args.format).map_err(Error::Io)?;
    Ok(())
}

pub fn run_automaton(args: &AutomatonArgs) -> Result<(), Error> {
    let (_, dfa, om) = build_automaton(&args.pattern, &args.alphabet, &args.classes, args.order)?;
    let target = if args.order == 0 { &dfa } else { &om.dfa };
    let dot = target.to_dot("pattern_automaton");
    eprintln!(
        "states {} finals {} chain-states {}",
        target.num_states(),
        target.num_finals(),
        om.num_chain_states()
    );
    match &args.out {
        Some(path) => std::fs::write(path, dot)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(dot.as_bytes())?;
        }
    }
    Ok(())
}

pub fn run_fit(args: &FitArgs) -> Result<(), Error> {
    let alpha = Alphabet::new(&args.alphabet)?;
    let text = std::fs::read_to_string(&args.input)?;
    let seq = read_sequence(&text, &alpha, args.skip_unknown)?;
    let model = MarkovModel::fit_mle(&alpha, &seq, args.order)?;
    match &args.out {
        Some(path) => model.save(path)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(model.to_text().as_bytes())?;
        }
    }
    Ok(())
}

pub fn run_oracle(args: &OracleArgs) -> Result<(), Error> {
    let alpha = Alphabet::new(&args.alphabet)?;
    let model = load_model(&args.model, &alpha)?;
    let (_, dfa, _) = build_automaton(&args.pattern, &args.alphabet, &args.classes, model.order)?;
    let result = match args.kind {
        OracleKind::Exhaustive => exhaustive(&dfa, &model, args.length, args.budget)?,
        OracleKind::MonteCarlo => {
            monte_carlo(&dfa, &model, args.length, args.samples, args.seed, args.jobs)?
        }
    };
    let mut out = std::io::stdout().lock();
    match result {
        OracleResult::Exhaustive { probs } => {
            writeln!(out, "n,probability,exact")?;
            for (n, p) in probs {
                writeln!(out, "{n},{},{p}", patdist_exact::decimal::sci_rat(&p, 6))?;
            }
        }
        OracleResult::MonteCarlo { estimates, samples } => {
            writeln!(out, "# samples {samples}")?;
            writeln!(out, "n,estimate,stderr")?;
            for (n, (est, se)) in estimates {
                writeln!(out, "{n},{est:e},{se:e}")?;
            }
        }
    }
    Ok(())
}
