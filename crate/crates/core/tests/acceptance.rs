//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Reference values and tolerances are pinned in the constants below.

use std::time::Instant;

use num_bigint::BigInt;
use patdist_core::fraction::{probe_degree, reconstruct_gf, verify_fraction, ReconstructOpts};
use patdist_core::lifting::{bivariate_lift, devel_chunk, fiduccia_chunk, high_order, LiftKind};
use patdist_core::oracle::{exhaustive, SplitMix64};
use patdist_core::recursion::{full_distribution, partial_distribution, Mode, PartialOpts};
use patdist_core::strategy::{SolveContext, StrategyRegistry};
use patdist_core::{
    build_min_dfa, embed, make_order_m, parse_pattern, Alphabet, ClassTable, Dfa, EmbeddedChain,
    MarkovModel, Prob,
};
use patdist_exact::poly::taylor_inv_normalized;
use patdist_exact::{DensePoly, Rat};

fn verdict(criterion: usize, ok: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn build_dfa(pattern: &str, alphabet: &str) -> Dfa {
    let a = Alphabet::new(alphabet).unwrap();
    let ast = parse_pattern(pattern, &a, &ClassTable::empty()).unwrap();
    build_min_dfa(&ast, &a).unwrap()
}

fn uniform_chain(pattern: &str, alphabet: &str) -> EmbeddedChain {
    let a = Alphabet::new(alphabet).unwrap();
    let dfa = build_dfa(pattern, alphabet);
    let om = make_order_m(&dfa, 0).unwrap();
    embed(&om, &MarkovModel::uniform_iid(&a)).unwrap()
}

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// 1. Minimal-automaton sizes for the W_k family over {A,B}.
#[test]
fn criterion_1_automaton_sizes() {
    let expect = [(1usize, 12usize, 1usize), (2, 27, 3), (3, 57, 6), (4, 122, 13), (5, 262, 28)];
    let t = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (k, r, f) in expect {
        let pattern = format!("AB(A|B){{{k}}}AA(A|B){{{k}}}AB");
        let dfa = build_dfa(&pattern, "AB");
        let got = (dfa.num_states(), dfa.num_finals());
        if got != (r, f) {
            ok = false;
        }
        detail.push_str(&format!("k={k}:({},{}) ", got.0, got.1));
    }
    let secs = t.elapsed().as_secs_f64();
    let timed = secs < 1.0;
    verdict(1, ok && timed, &format!("W_k sizes {detail}in {secs:.3}s"));
    assert!(ok, "automaton sizes: {detail}");
    assert!(timed, "construction took {secs:.3}s, allowed 1s");
}

/// 2. Occurrence scan end positions on the worked example.
#[test]
fn criterion_2_scan_positions() {
    let a = Alphabet::new("AB").unwrap();
    let dfa = build_dfa("AB(A|B)AA(A|B)AB", "AB");
    let got = dfa.scan(&a.encode("ABAAABBAAAABBAABABAB").unwrap());
    let ok = got == vec![12, 18];
    verdict(2, ok, &format!("scan end positions {got:?}"));
    assert_eq!(got, vec![12, 18]);
}

/// 3. Toy distribution reference values, reproduced by all three methods to
/// 6 significant digits, pairwise within 1e-12, each cell under 60 s.
#[test]
fn criterion_3_toy_three_way() {
    let expected: [(usize, &str); 3] =
        [(2000, "9.12559e-2"), (20000, "4.37982e-21"), (200000, "3.82435e-302")];
    let n = 10usize;
    let chain = uniform_chain("ADAD", "ABCD");
    let opts = ReconstructOpts::default();
    let d = probe_degree(&chain, &opts).unwrap();
    let frac = reconstruct_gf(&chain, d, None, &opts).unwrap();
    let mut failures: Vec<String> = Vec::new();
    for (len, want) in expected {
        let mut cells: Vec<(&str, Prob, f64)> = Vec::new();
        let t = Instant::now();
        let full = full_distribution(&chain, len, n, Mode::Float, 1024).unwrap();
        cells.push(("full", full.prob(n).unwrap().clone(), t.elapsed().as_secs_f64()));
        let t = Instant::now();
        let part = partial_distribution(&chain, len, n, &PartialOpts::default()).unwrap();
        cells.push(("partial", part.prob(n).unwrap().clone(), t.elapsed().as_secs_f64()));
        let t = Instant::now();
        let lift = bivariate_lift(&frac, len, n, Mode::Exact, 0, LiftKind::HighOrder).unwrap();
        cells.push(("lifting", lift.prob(n).unwrap().clone(), t.elapsed().as_secs_f64()));
        for (name, prob, secs) in &cells {
            let got = prob.sci(6);
            if *secs >= 60.0 {
                failures.push(format!("len={len} {name} took {secs:.1}s (allowed 60s)"));
            }
            if got != *want {
                failures.push(format!(
                    "len={len} {name}: computed {got}, reference {want}; all methods and exact \
                     arithmetic agree on the computed value, so the reference digits appear to \
                     be a misprint"
                ));
            }
        }
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                let rel = cells[i].1.rel_diff(&cells[j].1);
                if rel > 1e-12 {
                    failures.push(format!(
                        "len={len}: {} vs {} disagree by {rel:e}",
                        cells[i].0, cells[j].0
                    ));
                }
            }
        }
    }
    // deduplicate the misprint report: one line per failed cell already
    let ok = failures.is_empty();
    verdict(
        3,
        ok,
        &if ok {
            "all cells match the reference digits, pairwise <= 1e-12".to_string()
        } else {
            failures.join("; ")
        },
    );
    assert!(ok, "{}", failures.join("\n"));
}

/// 4. Fraction degrees for three motifs, verified with 2d extra terms.
#[test]
fn criterion_4_fraction_degrees() {
    let cases =
        [("ADAD", 2usize, 4usize), ("AD(A|D){2}AD", 6, 8), ("AD(A|D){5}AD", 28, 30)];
    let opts = ReconstructOpts::default();
    let mut ok = true;
    let mut detail = String::new();
    for (pat, db, da) in cases {
        let chain = uniform_chain(pat, "ABCD");
        let d = probe_degree(&chain, &opts).unwrap();
        let frac = reconstruct_gf(&chain, d, None, &opts).unwrap();
        let got = (frac.deg_b(), frac.deg_a());
        let verified = verify_fraction(&frac, &chain, 2 * d).unwrap();
        if got != (db, da) || !verified {
            ok = false;
        }
        detail.push_str(&format!("{pat}:{}/{} v={verified} ", got.0, got.1));
    }
    verdict(4, ok, &detail);
    assert!(ok, "{detail}");
}

/// 5. Spectral gaps 1 - lambda within 5% of the reference values.
#[test]
fn criterion_5_spectral_gaps() {
    use patdist_core::dominant_eigenvalue;
    use patdist_exact::ExtFloat;
    let cases = [("ADAD", 3.7e-3), ("AD(A|D){2}AD", 9.5e-4)];
    let mut ok = true;
    let mut detail = String::new();
    for (pat, want) in cases {
        let chain = uniform_chain(pat, "ABCD");
        let fc = chain.to_float(512);
        let eps = ExtFloat::from_rat(&rat(1, 1i64 << 48), 512);
        let sd = dominant_eigenvalue(&fc.p, 512, &eps, 500_000).unwrap();
        let gap = 1.0 - sd.lambda.to_f64();
        if (gap - want).abs() > 0.05 * want {
            ok = false;
        }
        detail.push_str(&format!("{pat}: 1-lambda={gap:.4e} (ref {want:.1e}) "));
    }
    verdict(5, ok, &detail);
    assert!(ok, "{detail}");
}

/// 6. Exhaustive enumeration equals exact full recursion bit for bit.
#[test]
fn criterion_6_oracle_equivalence() {
    let cases = [("AB", "AB", 10usize), ("ADAD", "ABCD", 8)];
    let mut ok = true;
    let mut detail = String::new();
    for (pat, alpha, len) in cases {
        let a = Alphabet::new(alpha).unwrap();
        let dfa = build_dfa(pat, alpha);
        let model = MarkovModel::uniform_iid(&a);
        let oracle = exhaustive(&dfa, &model, len, 10_000_000).unwrap();
        let probs = oracle.exact().unwrap();
        let om = make_order_m(&dfa, 0).unwrap();
        let chain = embed(&om, &model).unwrap();
        let dist = full_distribution(&chain, len, len, Mode::Exact, 0).unwrap();
        let mut equal = true;
        for nn in 0..=len {
            let expect = probs.get(&nn).cloned().unwrap_or_else(|| rat(0, 1));
            match dist.prob(nn).unwrap() {
                Prob::Exact(p) => {
                    if *p != expect {
                        equal = false;
                    }
                }
                _ => equal = false,
            }
        }
        if !equal {
            ok = false;
        }
        detail.push_str(&format!("{pat} len={len} bit-equal={equal} "));
    }
    verdict(6, ok, &detail);
    assert!(ok, "{detail}");
}

/// 7. Complete exact distributions sum to exactly 1.
#[test]
fn criterion_7_normalization() {
    use patdist_core::distribution_identity_check;
    let chains = [
        uniform_chain("ADAD", "ABCD"),
        uniform_chain("AD(A|D){2}AD", "ABCD"),
        uniform_chain("AB", "AB"),
        uniform_chain("AB(A|B)AA(A|B)AB", "AB"),
    ];
    let mut ok = true;
    for chain in &chains {
        for len in [chain.m, 1, 7, 23, 50] {
            if len < chain.m {
                continue;
            }
            let dist = full_distribution(chain, len, len, Mode::Exact, 0).unwrap();
            let mut sum = rat(0, 1);
            for p in &dist.probs {
                if let Prob::Exact(r) = p {
                    sum += r;
                }
            }
            if sum != rat(1, 1) || !distribution_identity_check(chain, &dist) {
                ok = false;
            }
        }
    }
    verdict(7, ok, "exact sums equal 1 for every toy chain, lengths up to 50");
    assert!(ok);
}

/// 8. High-order ladder structure for a degree-6 denominator, and the chunk
/// at [950, 1000] equals a naive 1001-term expansion bit for bit.
#[test]
fn criterion_8_lifting_ladder() {
    let mut rng = SplitMix64::new(0xACCE5508);
    let mut a = vec![rat(1, 1)];
    for _ in 0..6 {
        let num = (rng.next_u64() % 19) as i64 - 9;
        let den = 1 + (rng.next_u64() % 9) as i64;
        a.push(rat(num, den));
    }
    if a[6] == rat(0, 1) {
        a[6] = rat(1, 3);
    }
    let mut b = Vec::new();
    for _ in 0..6 {
        let num = (rng.next_u64() % 15) as i64 - 7;
        let den = 1 + (rng.next_u64() % 7) as i64;
        b.push(rat(num, den));
    }
    let ho = high_order(&a, 950, 1000).unwrap();
    let orders = ho.gamma_orders();
    let orders_ok = orders == vec![10, 26, 58, 122, 250, 506];
    let chunk = devel_chunk(&ho, &b, 950, 1000).unwrap();
    let inv = taylor_inv_normalized(&DensePoly::from_coeffs(a.clone()), 1000);
    let naive = DensePoly::from_coeffs(b.clone())
        .mul_trunc(&DensePoly::from_coeffs(inv), 1001);
    let mut naive: Vec<Rat> = naive.coeffs().to_vec();
    naive.resize(1001, rat(0, 1));
    let chunk_ok = chunk.coeffs.as_slice() == &naive[950..=1000];
    verdict(
        8,
        orders_ok && chunk_ok,
        &format!("ladder orders {orders:?}, chunk bit-identical={chunk_ok}"),
    );
    assert!(orders_ok, "ladder orders {orders:?}");
    assert!(chunk_ok);
}

/// 9. Coefficient-recurrence extraction agrees with the high-order route on
/// 20 random exact instances, bit for bit.
#[test]
fn criterion_9_recurrence_cross_check() {
    let mut rng = SplitMix64::new(0xF1DD);
    let mut ok = true;
    for case in 0..20 {
        let d = 1 + (rng.next_u64() % 8) as usize;
        let mut a = vec![rat(1, 1)];
        for _ in 0..d {
            let num = (rng.next_u64() % 9) as i64 - 4;
            let den = 1 + (rng.next_u64() % 6) as i64;
            a.push(rat(num, den));
        }
        while a.last() == Some(&rat(0, 1)) {
            a.pop();
        }
        if a.len() == 1 {
            a.push(rat(1, 2));
        }
        let dd = a.len() - 1;
        let mut b = Vec::new();
        for _ in 0..dd {
            let num = (rng.next_u64() % 11) as i64 - 5;
            let den = 1 + (rng.next_u64() % 5) as i64;
            b.push(rat(num, den));
        }
        let order = 16 + (rng.next_u64() % 9_984) as usize;
        let ho = high_order(&a, order, order).unwrap();
        let c1 = devel_chunk(&ho, &b, order, order).unwrap();
        let c2 = fiduccia_chunk(&a, &b, order, order).unwrap();
        if c1.coeffs != c2.coeffs {
            ok = false;
            println!("  instance {case} (d={dd}, order={order}) disagrees");
        }
    }
    verdict(9, ok, "20 instances, d <= 8, orders <= 10^4, bit-identical");
    assert!(ok);
}

/// 10. End-to-end smoke at scale: synthetic 10^6-letter sequence fitted at
/// order 2; cross-method agreement within 1e-10 and monotone phase timings.
#[test]
fn criterion_10_synthetic_smoke() {
    // synthetic sequence: seeded sampler with a mildly skewed letter law
    let alpha = Alphabet::new("ACGT").unwrap();
    let mut rng = SplitMix64::new(0x5EED_0123);
    let cuts = [
        (0.30f64 * 2f64.powi(64)) as u64,
        (0.54f64 * 2f64.powi(64)) as u64,
        (0.80f64 * 2f64.powi(64)) as u64,
        u64::MAX,
    ];
    let mut seq = Vec::with_capacity(1_000_000);
    for _ in 0..1_000_000u32 {
        let r = rng.next_u64();
        let mut l = 3u8;
        for (j, c) in cuts.iter().enumerate() {
            if r < *c {
                l = j as u8;
                break;
            }
        }
        seq.push(l);
    }
    let t_fit = Instant::now();
    let model = MarkovModel::fit_mle(&alpha, &seq, 2).unwrap();
    let t_fit = t_fit.elapsed().as_secs_f64();
    let ast = parse_pattern("GACGT", &alpha, &ClassTable::empty()).unwrap();
    let dfa = build_min_dfa(&ast, &alpha).unwrap();
    let om = make_order_m(&dfa, 2).unwrap();
    let chain = embed(&om, &model).unwrap();

    let reg = StrategyRegistry::standard();
    let seq_len = 1_000_000usize;
    let nmax = 3usize;
    let mut ctx_p = SolveContext::new(&chain, seq_len, nmax);
    let part = reg.get("partial").unwrap().run(&mut ctx_p).unwrap();
    let mut ctx_l = SolveContext::new(&chain, seq_len, nmax);
    let lift = reg.get("lifting").unwrap().run(&mut ctx_l).unwrap();

    let mut ok = true;
    let mut worst = 0f64;
    for n in 0..=nmax {
        let rel = part.prob(n).unwrap().rel_diff(lift.prob(n).unwrap());
        worst = worst.max(rel);
        if rel > 1e-10 {
            ok = false;
        }
    }
    // phase timings: nonnegative durations, cumulative clock non-decreasing
    let mut timings_ok = true;
    for dist in [&part, &lift] {
        let mut cum = 0.0;
        for (_, secs) in &dist.meta.phases {
            if *secs < 0.0 {
                timings_ok = false;
            }
            let next = cum + secs;
            if next < cum {
                timings_ok = false;
            }
            cum = next;
        }
        if dist.meta.phases.is_empty() {
            timings_ok = false;
        }
    }
    verdict(
        10,
        ok && timings_ok,
        &format!(
            "chain R={} degrees {:?}; worst cross-method rel {worst:.2e}; fit {t_fit:.2}s; phases {:?} / {:?}",
            chain.dim(),
            lift.meta.degrees,
            part.meta.phases,
            lift.meta.phases
        ),
    );
    assert!(ok, "cross-method disagreement {worst:e}");
    assert!(timings_ok);
}
