//! Exact bivariate fraction B(y,z)/A(y,z) equal to the occurrence
//! generating function, reconstructed from series prefixes by modular
//! evaluation, univariate fraction reconstruction, interpolation in y,
//! Chinese remaindering and rational reconstruction, with Las Vegas degree
//! probing and end-to-end verification.
//!
//! Series convention: coefficients are indexed from 0 with g_i the
//! coefficient of z^(m+i) of the joint generating function, so leading
//! zero coefficients below z^m are never stored.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use patdist_exact::field::bigint_mod_u64;
use patdist_exact::{
    crt_combine, fraction_reconstruct, prime_stream, rational_reconstruct, ExtFloat, FieldRing,
    Fp, Rat, Ring, YPoly,
};

use crate::embed::{series_prefix, series_prefix_scaled, EmbeddedChain};
use crate::error::{Error, Result};
use crate::model::parse_rat;

#[derive(Clone, Debug)]
pub struct BivariateFraction {
    /// Model order; the stored fraction expands to g_i = [z^(m+i)] G.
    pub m: usize,
    /// Numerator z-coefficients (y-polynomials).
    pub b: Vec<YPoly<Rat>>,
    /// Denominator z-coefficients; A(y,0) = 1.
    pub a: Vec<YPoly<Rat>>,
    /// Some(n) when built modulo y^(n+1).
    pub ytrunc: Option<usize>,
    /// Identifier tying the fraction to its pattern/alphabet/model inputs.
    pub source: String,
}

impl BivariateFraction {
    pub fn deg_b(&self) -> usize {
        self.b.len().saturating_sub(1)
    }

    pub fn deg_a(&self) -> usize {
        self.a.len().saturating_sub(1)
    }

    pub fn nu_y(&self) -> usize {
        self.a
            .iter()
            .chain(self.b.iter())
            .filter_map(|c| c.deg())
            .max()
            .unwrap_or(0)
    }

    /// Scaled-integer view with cap on y: returns (B, A, scale, extra_den)
    /// where A_i * scale^i and B_i * scale^i * extra_den are integral and
    /// the series coefficient of z^t carries denominator
    /// extra_den * scale^t.
    pub fn scaled_int(&self, cap: usize) -> (Vec<YPoly<BigInt>>, Vec<YPoly<BigInt>>, BigUint, BigUint) {
        let mut scale = BigUint::one();
        for (i, c) in self.a.iter().enumerate().skip(1) {
            for r in c.coeffs() {
                absorb_root(&mut scale, r.denom().magnitude(), i as u32);
            }
        }
        for (i, c) in self.b.iter().enumerate().skip(1) {
            for r in c.coeffs() {
                absorb_root(&mut scale, r.denom().magnitude(), i as u32);
            }
        }
        // residual denominators of B after per-degree scaling
        let mut extra = BigUint::one();
        for (i, c) in self.b.iter().enumerate() {
            let si = scale.pow(i as u32);
            for r in c.coeffs() {
                let den = r.denom().magnitude();
                let g = den.gcd(&si);
                extra = extra.lcm(&(den / g));
            }
        }
        let conv = |polys: &[YPoly<Rat>], extra: &BigUint| -> Vec<YPoly<BigInt>> {
            polys
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let si = scale.pow(i as u32) * extra;
                    YPoly::from_coeffs(
                        c.coeffs()
                            .iter()
                            .map(|r| {
                                let mult = &si / r.denom().magnitude();
                                r.numer() * BigInt::from(mult)
                            })
                            .collect(),
                        cap,
                    )
                })
                .collect()
        };
        let one = BigUint::one();
        (conv(&self.b, &extra), conv(&self.a, &one), scale, extra)
    }

    pub fn to_float(&self, cap: usize, prec: u32) -> (Vec<YPoly<ExtFloat>>, Vec<YPoly<ExtFloat>>) {
        let conv = |polys: &[YPoly<Rat>]| -> Vec<YPoly<ExtFloat>> {
            polys
                .iter()
                .map(|c| {
                    YPoly::from_coeffs(
                        c.coeffs().iter().map(|r| ExtFloat::from_rat(r, prec)).collect(),
                        cap,
                    )
                })
                .collect()
        };
        (conv(&self.b), conv(&self.a))
    }

    // ----------------------------------------------------------- files

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("fraction v1\n");
        s.push_str(&format!("source {}\n", if self.source.is_empty() { "-" } else { &self.source }));
        s.push_str(&format!("m {}\n", self.m));
        match self.ytrunc {
            None => s.push_str("ytrunc none\n"),
            Some(n) => s.push_str(&format!("ytrunc {n}\n")),
        }
        s.push_str(&format!("degb {}\n", self.deg_b()));
        s.push_str(&format!("dega {}\n", self.deg_a()));
        for (tag, polys) in [("b", &self.b), ("a", &self.a)] {
            for (zi, c) in polys.iter().enumerate() {
                for (yi, r) in c.coeffs().iter().enumerate() {
                    if !Zero::is_zero(r) {
                        s.push_str(&format!("{tag} {zi} {yi} {r}\n"));
                    }
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = None;
        let mut ytrunc: Option<Option<usize>> = None;
        let mut source = String::new();
        let mut degb = None;
        let mut dega = None;
        let mut bco: Vec<Vec<(usize, Rat)>> = Vec::new();
        let mut aco: Vec<Vec<(usize, Rat)>> = Vec::new();
        let bad = |line: &str, why: &str| Error::Input(format!("fraction line '{line}': {why}"));
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "fraction v1" {
                continue;
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("source") => source = it.next().unwrap_or("-").to_string(),
                Some("m") => {
                    m = Some(
                        it.next()
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| bad(line, "bad m"))?,
                    )
                }
                Some("ytrunc") => {
                    let v = it.next().ok_or_else(|| bad(line, "missing value"))?;
                    ytrunc = Some(if v == "none" {
                        None
                    } else {
                        Some(v.parse().map_err(|_| bad(line, "bad ytrunc"))?)
                    });
                }
                Some("degb") => degb = it.next().and_then(|v| v.parse::<usize>().ok()),
                Some("dega") => dega = it.next().and_then(|v| v.parse::<usize>().ok()),
                Some(tag @ ("a" | "b")) => {
                    let zi: usize = it
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad(line, "bad z index"))?;
                    let yi: usize = it
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad(line, "bad y index"))?;
                    let r = it
                        .next()
                        .and_then(parse_rat)
                        .ok_or_else(|| bad(line, "bad rational"))?;
                    let store = if tag == "b" { &mut bco } else { &mut aco };
                    if store.len() <= zi {
                        store.resize(zi + 1, Vec::new());
                    }
                    store[zi].push((yi, r));
                }
                _ => return Err(bad(line, "unknown keyword")),
            }
        }
        let m = m.ok_or_else(|| Error::Input("fraction file lacks m".into()))?;
        let ytrunc = ytrunc.ok_or_else(|| Error::Input("fraction file lacks ytrunc".into()))?;
        let cap = ytrunc.map_or(usize::MAX, |n| n + 1);
        let build = |store: Vec<Vec<(usize, Rat)>>, want: Option<usize>| -> Result<Vec<YPoly<Rat>>> {
            let mut out = Vec::new();
            for entries in store {
                let ymax = entries.iter().map(|(y, _)| *y).max().unwrap_or(0);
                let mut c = vec![Rat::zero(); ymax + 1];
                for (y, r) in entries {
                    c[y] = r;
                }
                out.push(YPoly::from_coeffs(c, cap));
            }
            if let Some(w) = want {
                if out.len() != w + 1 {
                    return Err(Error::Input("fraction degrees disagree with coefficients".into()));
                }
            }
            Ok(out)
        };
        let source = if source == "-" { String::new() } else { source };
        Ok(BivariateFraction { m, b: build(bco, degb)?, a: build(aco, dega)?, ytrunc, source })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Grow `scale` minimally-ish so den | scale^power.
fn absorb_root(scale: &mut BigUint, den: &BigUint, power: u32) {
    if den.is_one() {
        return;
    }
    loop {
        let sp = scale.pow(power);
        let g = den.gcd(&sp);
        let rest = den / g;
        if rest.is_one() {
            return;
        }
        *scale = scale.clone() * rest;
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructOpts {
    /// Bit size of the word primes.
    pub gamma: u32,
    pub seed: u64,
    pub jobs: usize,
    pub memory_budget_bytes: u64,
    pub max_retries: usize,
}

impl Default for ReconstructOpts {
    fn default() -> Self {
        ReconstructOpts {
            gamma: 31,
            seed: 0x5EED_CAFE,
            jobs: 0,
            memory_budget_bytes: 8 << 30,
            max_retries: 4,
        }
    }
}

/// Embedded chain reduced modulo a prime, iterated at a fixed evaluation
/// point y0. Yields the scalar series g_i(y0) mod p.
struct FpSeries {
    p_rows: Vec<Vec<(u32, Fp)>>,
    q_rows: Vec<Vec<(u32, Fp)>>,
    y0: Fp,
    w: Vec<Fp>,
    terms: Vec<Fp>,
}

impl FpSeries {
    /// None when the prime divides a parameter denominator (unlucky).
    fn new(chain: &EmbeddedChain, p: u64, y0: u64) -> Option<Self> {
        let conv_mat = |m: &crate::embed::SparseMatrix<Rat>| -> Option<Vec<Vec<(u32, Fp)>>> {
            let mut rows = Vec::with_capacity(m.dim());
            for i in 0..m.dim() {
                let mut row = Vec::with_capacity(m.row(i).len());
                for (c, v) in m.row(i) {
                    row.push((*c, Fp::from_rat(v, p)?));
                }
                rows.push(row);
            }
            Some(rows)
        };
        let u: Option<Vec<Fp>> = chain.u.iter().map(|v| Fp::from_rat(v, p)).collect();
        let s = FpSeries {
            w: u?,
            p_rows: conv_mat(&chain.p_mat)?,
            q_rows: conv_mat(&chain.q_mat)?,
            y0: Fp::new(y0, p),
            terms: Vec::new(),
        };
        Some(s)
    }

    fn ensure(&mut self, count: usize) {
        if self.terms.is_empty() {
            let dot = self.w.iter().fold(Fp::new(0, self.y0.modulus()), |acc, v| acc.add(v));
            self.terms.push(dot);
        }
        while self.terms.len() < count {
            let dim = self.w.len();
            let mut next = vec![Fp::new(0, self.y0.modulus()); dim];
            for i in 0..dim {
                if self.w[i].is_zero() {
                    continue;
                }
                for (c, v) in &self.p_rows[i] {
                    let t = &mut next[*c as usize];
                    *t = t.add(&self.w[i].mul(v));
                }
                for (c, v) in &self.q_rows[i] {
                    let t = &mut next[*c as usize];
                    *t = t.add(&self.w[i].mul(v).mul(&self.y0));
                }
            }
            self.w = next;
            let dot = self.w.iter().fold(Fp::new(0, self.y0.modulus()), |acc, v| acc.add(v));
            self.terms.push(dot);
        }
    }
}

/// Smallest degree bound at which a single modular evaluation reconstructs
/// a stable fraction: Las Vegas early termination with a doubling schedule.
pub fn probe_degree(chain: &EmbeddedChain, opts: &ReconstructOpts) -> Result<usize> {
    let r_bound = chain.dim();
    let mut rng = SplitMix(opts.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut primes = prime_stream(opts.gamma, r_bound as u64 + 2);
    'prime: for _ in 0..8 {
        let p = primes.next().expect("prime stream");
        let y0 = 1 + rng.next() % (p - 1);
        let mut series = match FpSeries::new(chain, p, y0) {
            Some(s) => s,
            None => continue 'prime,
        };
        let mut d_try = 1usize;
        loop {
            // a degree-(<= d_try) candidate that explains d_try + R + 1
            // series terms is the true fraction: the cross-difference
            // \hat A B - \hat B A has degree at most d_try + R, so agreement
            // past that forces it to vanish identically
            let need = (2 * (d_try + 1) + 1).max(d_try + r_bound + 2);
            series.ensure(need + 1);
            let t = &series.terms;
            let lo = fraction_reconstruct(&t[..2 * d_try + 1], d_try);
            let hi = fraction_reconstruct(&t[..2 * d_try + 3], d_try + 1);
            if let (Ok((b1, a1)), Ok((b2, a2))) = (lo, hi) {
                if b1 == b2 && a1 == a2 {
                    let sp = patdist_exact::DensePoly::from_coeffs(t[..need + 1].to_vec());
                    let lhs = a1.mul_trunc(&sp, need + 1);
                    let mut ok = true;
                    for i in 0..=need {
                        let l = lhs.coeff(i).cloned().unwrap_or(Fp::new(0, p));
                        let r = b1.coeff(i).cloned().unwrap_or(Fp::new(0, p));
                        if l != r {
                            ok = false;
                            break;
                        }
                    }
                    let db = b1.deg().unwrap_or(0);
                    let da = a1.deg().unwrap_or(0);
                    if ok && db < d_try && da < d_try {
                        return Ok(db.max(da).max(1));
                    }
                }
            }
            if d_try > 2 * r_bound {
                return Err(Error::DegreeProbe(format!(
                    "degree bound exceeded the system size {r_bound}"
                )));
            }
            d_try *= 2;
        }
    }
    Err(Error::DegreeProbe("all probe primes were unlucky".into()))
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

struct PrimeImage {
    p: u64,
    /// b[zi][yi], a[zi][yi] as residues.
    b: Vec<Vec<u64>>,
    a: Vec<Vec<u64>>,
    db: usize,
    da: usize,
}

/// Execute the modular bivariate reconstruction: exact series, per-prime
/// evaluation/reconstruction/interpolation, Chinese remaindering, rational
/// reconstruction, and a final exact verification.
pub fn reconstruct_gf(
    chain: &EmbeddedChain,
    d: usize,
    ytrunc: Option<usize>,
    opts: &ReconstructOpts,
) -> Result<BivariateFraction> {
    match reconstruct_inner(chain, d, ytrunc, opts) {
        // The truncated-ring route needs generic pivots; when the fraction
        // specialized at y = 0 is degenerate, every prime fails the same
        // way. Full y-degrees always work, so retry untruncated.
        Err(Error::Reconstruction(msg)) if ytrunc.is_some() && msg.contains("pivot") => {
            reconstruct_inner(chain, d, None, opts)
        }
        other => other,
    }
}

fn reconstruct_inner(
    chain: &EmbeddedChain,
    d: usize,
    ytrunc: Option<usize>,
    opts: &ReconstructOpts,
) -> Result<BivariateFraction> {
    if d == 0 {
        return Err(Error::Input("degree bound must be positive".into()));
    }
    estimate_memory(chain, d, ytrunc, opts)?;
    let ycap_terms = ytrunc.map_or(2 * d, |n| n.min(2 * d));
    let (series, u_den, step_den) = series_prefix_scaled(chain, 2 * d, Some(ycap_terms));
    let interp_points = d + 1;

    // prime-count target: the a-priori bound from the input magnitudes,
    // refined by the measured growth of the reduced series coefficients
    let mag_bits = chain_magnitude_bits(chain);
    let floor_primes = ((2 * d + 2) as u64 * mag_bits).div_ceil(opts.gamma as u64) as usize + 1;
    let measured = measured_growth_bits(&series, &u_den, &step_den);
    let measured_primes =
        ((2 * d + 2) as u64 * measured).div_ceil(opts.gamma as u64) as usize + 1;
    let mut target = floor_primes.max(measured_primes);

    let mut images: Vec<PrimeImage> = Vec::new();
    let mut attempts = 0usize;
    let mut stream = prime_stream(opts.gamma, (d.max(interp_points)) as u64 + 2);
    for retry in 0..=opts.max_retries {
        // collect images until the dominant degree group reaches the target
        loop {
            let (_, _, have) = dominant_group(&images);
            if have >= target {
                break;
            }
            let missing = target - have;
            let batch: Vec<u64> = stream.by_ref().take(missing.max(2)).collect();
            attempts += batch.len();
            let new_images = compute_images(chain, &series, &u_den, &step_den, &batch, d, ytrunc, opts)?;
            images.extend(new_images);
            if images.is_empty() && attempts >= (3 * target).max(24) {
                return Err(Error::Reconstruction(
                    "every prime failed (non-unit pivot in the truncated ring or degenerate inputs)"
                        .into(),
                ));
            }
            if attempts > 64 * target + 64 {
                return Err(Error::Reconstruction(
                    "too many unlucky primes; inputs look degenerate".into(),
                ));
            }
        }
        let (db, da, _) = dominant_group(&images);
        let group: Vec<&PrimeImage> =
            images.iter().filter(|im| im.db == db && im.da == da).collect();
        match assemble(&group, db, da, ytrunc, chain.m) {
            Ok(frac) => {
                // enough extra terms to make agreement a proof of identity
                let extra = (chain.dim() + 1).saturating_sub(d).max(4);
                if verify_fraction(&frac, chain, extra)? {
                    return Ok(frac);
                }
                if retry == opts.max_retries {
                    return Err(Error::Reconstruction(
                        "verification failed after retries; degree bound may be wrong".into(),
                    ));
                }
                target += target / 2 + 2;
            }
            Err(_) if retry < opts.max_retries => {
                target += target / 2 + 2;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Reconstruction("prime budget exhausted".into()))
}

fn dominant_group(images: &[PrimeImage]) -> (usize, usize, usize) {
    let mut best = (0usize, 0usize, 0usize);
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for im in images {
        *counts.entry((im.db, im.da)).or_insert(0) += 1;
    }
    for ((db, da), c) in counts {
        // degree drops are the failure mode: prefer the largest degrees
        if (da, db) > (best.1, best.0) {
            best = (db, da, c);
        }
    }
    best
}

fn chain_magnitude_bits(chain: &EmbeddedChain) -> u64 {
    let mut bits = 1u64;
    let mut consider = |r: &Rat| {
        bits = bits.max(r.numer().magnitude().bits()).max(r.denom().magnitude().bits());
    };
    for v in &chain.u {
        consider(v);
    }
    for mat in [&chain.p_mat, &chain.q_mat] {
        for i in 0..mat.dim() {
            for (_, v) in mat.row(i) {
                consider(v);
            }
        }
    }
    bits + (chain.dim() as u64).next_power_of_two().trailing_zeros() as u64 + 1
}

fn measured_growth_bits(series: &[YPoly<BigInt>], u_den: &BigUint, step_den: &BigUint) -> u64 {
    let t = series.len() - 1;
    if t == 0 {
        return 1;
    }
    let last = &series[t];
    let num_bits = last.coeffs().iter().map(|c| c.magnitude().bits()).max().unwrap_or(1);
    let den_bits = (u_den.bits() + step_den.bits() * t as u64).max(1);
    // reduce one representative coefficient to estimate cancellation
    let reduced_bits = match last.coeffs().iter().rev().find(|c| !Zero::is_zero(*c)) {
        Some(c) => {
            let den: BigUint = u_den * step_den.pow(t as u32);
            let g = c.magnitude().gcd(&den);
            (c.magnitude() / &g).bits().max((den / &g).bits())
        }
        None => num_bits.max(den_bits),
    };
    reduced_bits.div_ceil(t as u64).max(1)
}

fn estimate_memory(
    chain: &EmbeddedChain,
    d: usize,
    ytrunc: Option<usize>,
    opts: &ReconstructOpts,
) -> Result<()> {
    let ycap = ytrunc.map_or(2 * d + 1, |n| n + 1).min(2 * d + 1) as u64;
    let mag = chain_magnitude_bits(chain);
    let terms = (2 * d + 1) as u64;
    // scalar series storage plus the R-vector iterate at final size
    let per_term_bits = mag * terms; // coefficient size at the deep end
    let series_bytes = terms * ycap * per_term_bits / 8;
    let vector_bytes = chain.dim() as u64 * ycap * per_term_bits / 8;
    let needed = series_bytes + vector_bytes;
    if needed > opts.memory_budget_bytes {
        return Err(Error::MemoryBudget {
            needed_bytes: needed,
            budget_bytes: opts.memory_budget_bytes,
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn compute_images(
    chain: &EmbeddedChain,
    series: &[YPoly<BigInt>],
    u_den: &BigUint,
    step_den: &BigUint,
    primes: &[u64],
    d: usize,
    ytrunc: Option<usize>,
    opts: &ReconstructOpts,
) -> Result<Vec<PrimeImage>> {
    let jobs = if opts.jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        opts.jobs
    }
    .min(primes.len())
    .max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<PrimeImage>> = Mutex::new(Vec::new());
    let worker = |_: usize| -> Result<()> {
        loop {
            let idx = next.fetch_add(1, Ordering::Relaxed);
            if idx >= primes.len() {
                return Ok(());
            }
            let p = primes[idx];
            if let Some(img) = prime_image(chain, series, u_den, step_den, p, d, ytrunc)? {
                results.lock().unwrap().push(img);
            }
        }
    };
    if jobs <= 1 {
        worker(0)?;
    } else {
        std::thread::scope(|scope| -> Result<()> {
            let mut handles = Vec::new();
            for t in 0..jobs {
                handles.push(scope.spawn(move || worker(t)));
            }
            for h in handles {
                h.join().map_err(|_| Error::Input("worker panicked".into()))??;
            }
            Ok(())
        })?;
    }
    let mut out = results.into_inner().unwrap();
    out.sort_by_key(|im| im.p);
    Ok(out)
}

/// Per-prime pipeline. Returns None for unlucky primes.
fn prime_image(
    chain: &EmbeddedChain,
    series: &[YPoly<BigInt>],
    u_den: &BigUint,
    step_den: &BigUint,
    p: u64,
    d: usize,
    ytrunc: Option<usize>,
) -> Result<Option<PrimeImage>> {
    let _ = chain;
    let du = bigint_mod_u64(&BigInt::from(u_den.clone()), p);
    let ds = bigint_mod_u64(&BigInt::from(step_den.clone()), p);
    if du == 0 || ds == 0 {
        return Ok(None);
    }
    let inv_u = FieldRing::inv(&Fp::new(du, p)).unwrap();
    let inv_s = FieldRing::inv(&Fp::new(ds, p)).unwrap();
    // series mod p with the scaling divided out: coefficient i carries
    // denominator u_den * step_den^i
    let mut scale = inv_u;
    let mut terms_mod: Vec<Vec<Fp>> = Vec::with_capacity(series.len());
    for g in series {
        let row: Vec<Fp> =
            g.coeffs().iter().map(|c| Fp::from_bigint(c, p).mul(&scale)).collect();
        terms_mod.push(row);
        scale = scale.mul(&inv_s);
    }
    match ytrunc {
        None => prime_image_interpolated(&terms_mod, p, d),
        Some(n) => prime_image_truncated(&terms_mod, p, d, n),
    }
}

/// Evaluation points y = 0, 1, 2, ...; univariate reconstruction per point;
/// interpolation of each z-coefficient in y.
fn prime_image_interpolated(terms_mod: &[Vec<Fp>], p: u64, d: usize) -> Result<Option<PrimeImage>> {
    use patdist_exact::DensePoly;
    let need_points = d + 1;
    let mut got: Vec<(u64, DensePoly<Fp>, DensePoly<Fp>)> = Vec::new();
    let mut best = (0usize, 0usize);
    let mut y = 0u64;
    let budget = 8 * (d + 2) as u64;
    while got.len() < need_points && y < budget.min(p) {
        let yf = Fp::new(y, p);
        let evals: Vec<Fp> = terms_mod
            .iter()
            .map(|row| {
                let mut acc = Fp::new(0, p);
                for c in row.iter().rev() {
                    acc = acc.mul(&yf).add(c);
                }
                acc
            })
            .collect();
        y += 1;
        match fraction_reconstruct(&evals[..2 * d + 1], d) {
            Ok((b, a)) => {
                let db = b.deg().unwrap_or(0);
                let da = a.deg().unwrap_or(0);
                if (da, db) > (best.1, best.0) {
                    // everything collected so far had dropped degrees
                    best = (db, da);
                    got.retain(|(_, bb, aa)| {
                        (aa.deg().unwrap_or(0), bb.deg().unwrap_or(0)) == (best.1, best.0)
                    });
                }
                if (db, da) == best {
                    got.push((y - 1, b, a));
                }
            }
            Err(_) => continue,
        }
    }
    if got.len() < need_points {
        return Ok(None); // unlucky prime
    }
    let (db, da) = best;
    let interp = |idx: usize, which: bool| -> Result<Vec<u64>> {
        let pts: Vec<(Fp, Fp)> = got
            .iter()
            .map(|(yv, b, a)| {
                let poly = if which { b } else { a };
                let c = poly.coeff(idx).cloned().unwrap_or(Fp::new(0, p));
                (Fp::new(*yv, p), c)
            })
            .collect();
        let poly = patdist_exact::interpolate(&pts)?;
        Ok((0..=d).map(|yi| poly.coeff(yi).map(|c| c.value()).unwrap_or(0)).collect())
    };
    let mut b_img = Vec::with_capacity(db + 1);
    for zi in 0..=db {
        b_img.push(interp(zi, true)?);
    }
    let mut a_img = Vec::with_capacity(da + 1);
    for zi in 0..=da {
        a_img.push(interp(zi, false)?);
    }
    Ok(Some(PrimeImage { p, b: b_img, a: a_img, db, da }))
}

/// Truncated-ring route: one fraction reconstruction over Fp[y]/(y^(n+1)),
/// no evaluation or interpolation.
fn prime_image_truncated(
    terms_mod: &[Vec<Fp>],
    p: u64,
    d: usize,
    n: usize,
) -> Result<Option<PrimeImage>> {
    let cap = n + 1;
    let series: Vec<YPoly<Fp>> =
        terms_mod.iter().map(|row| YPoly::from_coeffs(row.clone(), cap)).collect();
    // pad zeros with the right modulus if a term vanished entirely
    let zero = YPoly::constant(Fp::new(0, p), cap);
    let series: Vec<YPoly<Fp>> =
        series.into_iter().map(|c| if c.coeffs().is_empty() { zero.clone() } else { c }).collect();
    match fraction_reconstruct(&series[..2 * d + 1], d) {
        Ok((b, a)) => {
            let db = b.deg().unwrap_or(0);
            let da = a.deg().unwrap_or(0);
            let pack = |poly: &patdist_exact::DensePoly<YPoly<Fp>>, deg: usize| -> Vec<Vec<u64>> {
                (0..=deg)
                    .map(|zi| {
                        let c = poly.coeff(zi);
                        (0..cap)
                            .map(|yi| {
                                c.and_then(|cc| cc.coeff(yi)).map(|f| f.value()).unwrap_or(0)
                            })
                            .collect()
                    })
                    .collect()
            };
            Ok(Some(PrimeImage { p, b: pack(&b, db), a: pack(&a, da), db, da }))
        }
        Err(_) => Ok(None), // non-unit pivot: unlucky prime
    }
}

/// CRT + rational reconstruction across the prime images.
fn assemble(
    group: &[&PrimeImage],
    db: usize,
    da: usize,
    ytrunc: Option<usize>,
    m: usize,
) -> Result<BivariateFraction> {
    let cap = group[0].b.first().map(|r| r.len()).unwrap_or(1);
    let cap_store = ytrunc.map_or(usize::MAX, |n| n + 1);
    let recon = |which: bool, deg: usize| -> Result<Vec<YPoly<Rat>>> {
        let mut out = Vec::with_capacity(deg + 1);
        for zi in 0..=deg {
            let mut coeffs = Vec::with_capacity(cap);
            for yi in 0..cap {
                let residues: Vec<(u64, u64)> = group
                    .iter()
                    .map(|im| {
                        let arr = if which { &im.b } else { &im.a };
                        (arr.get(zi).map(|r| r[yi]).unwrap_or(0), im.p)
                    })
                    .collect();
                let (x, modulus) = crt_combine(&residues)?;
                let r = rational_reconstruct(&x, &modulus)?;
                coeffs.push(r);
            }
            out.push(YPoly::from_coeffs(coeffs, cap_store));
        }
        Ok(out)
    };
    let b = recon(true, db)?;
    let a = recon(false, da)?;
    match a.first() {
        Some(c) if c.deg() == Some(0) && c.coeff(0) == Some(&Rat::one()) => {}
        _ => return Err(Error::Reconstruction("denominator is not normalized at z = 0".into())),
    }
    Ok(BivariateFraction { m, b, a, ytrunc, source: String::new() })
}

/// Exact check: A(y,z) * sum g_i z^i = B(y,z) modulo z^(2d+1+extra).
pub fn verify_fraction(
    frac: &BivariateFraction,
    chain: &EmbeddedChain,
    extra: usize,
) -> Result<bool> {
    let d = frac.deg_a().max(frac.deg_b());
    let upto = 2 * d + extra;
    let g = series_prefix(chain, upto, frac.ytrunc.map(|n| n.min(upto)));
    let zero_cap = frac.ytrunc.map_or(usize::MAX, |n| n + 1);
    for t in 0..=upto {
        let mut lhs = YPoly::zero(zero_cap);
        for (i, ai) in frac.a.iter().enumerate() {
            if i > t {
                break;
            }
            let gi = g[t - i].retrunc(zero_cap);
            let ai = ai.retrunc(zero_cap);
            lhs = lhs.add(&ai.mul(&gi));
        }
        let rhs = frac
            .b
            .get(t)
            .cloned()
            .map(|c| c.retrunc(zero_cap))
            .unwrap_or_else(|| YPoly::zero(zero_cap));
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::dfa::{build_min_dfa, Dfa};
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

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn adad_degrees_and_verification() {
        let chain = toy_chain("ADAD", "ABCD");
        let opts = ReconstructOpts::default();
        let d = probe_degree(&chain, &opts).unwrap();
        assert_eq!(d, 4);
        let frac = reconstruct_gf(&chain, d, None, &opts).unwrap();
        assert_eq!((frac.deg_b(), frac.deg_a()), (2, 4));
        assert!(verify_fraction(&frac, &chain, 2 * d).unwrap());
        assert!(frac.nu_y() <= 2 * d);
        // series of the fraction matches 20 further terms exactly
        let g = series_prefix(&chain, 2 * d + 20, None);
        let lhs_check = verify_fraction(&frac, &chain, 20).unwrap();
        assert!(lhs_check);
        let _ = g;
    }

    #[test]
    fn single_state_fraction() {
        let a = Alphabet::new("AB").unwrap();
        let dfa = Dfa::from_parts(a.clone(), vec![vec![0, 0]], 0, vec![true]);
        let om = make_order_m(&dfa, 0).unwrap();
        let chain = embed(&om, &MarkovModel::uniform_iid(&a)).unwrap();
        let opts = ReconstructOpts::default();
        let d = probe_degree(&chain, &opts).unwrap();
        assert_eq!(d, 1);
        let frac = reconstruct_gf(&chain, d, None, &opts).unwrap();
        // shifted convention: B = 1, A = 1 - y z
        assert_eq!(frac.deg_b(), 0);
        assert_eq!(frac.deg_a(), 1);
        assert_eq!(frac.b[0].coeff(0), Some(&rat(1, 1)));
        assert_eq!(frac.a[1].coeff(1), Some(&rat(-1, 1)));
    }

    #[test]
    fn perturbed_fraction_fails_verification() {
        let chain = toy_chain("ADAD", "ABCD");
        let opts = ReconstructOpts::default();
        let mut frac = reconstruct_gf(&chain, 4, None, &opts).unwrap();
        assert!(verify_fraction(&frac, &chain, 10).unwrap());
        // perturb one coefficient by 1
        let c0 = frac.b[0].coeff(0).cloned().unwrap_or_else(Rat::zero);
        let mut coeffs: Vec<Rat> = frac.b[0].coeffs().to_vec();
        if coeffs.is_empty() {
            coeffs.push(Rat::zero());
        }
        coeffs[0] = c0 + Rat::one();
        frac.b[0] = YPoly::from_coeffs(coeffs, usize::MAX);
        assert!(!verify_fraction(&frac, &chain, 10).unwrap());
    }

    #[test]
    fn truncated_reconstruction_matches_full() {
        let chain = toy_chain("ADAD", "ABCD");
        let opts = ReconstructOpts::default();
        let full = reconstruct_gf(&chain, 4, None, &opts).unwrap();
        let trunc = reconstruct_gf(&chain, 4, Some(1), &opts).unwrap();
        assert_eq!(trunc.deg_a(), full.deg_a());
        assert_eq!(trunc.deg_b(), full.deg_b());
        for (t, f) in trunc.a.iter().zip(&full.a) {
            for yi in 0..2 {
                assert_eq!(t.coeff(yi), f.coeff(yi), "A y^{yi}");
            }
        }
        for (t, f) in trunc.b.iter().zip(&full.b) {
            for yi in 0..2 {
                assert_eq!(t.coeff(yi), f.coeff(yi), "B y^{yi}");
            }
        }
        assert!(verify_fraction(&trunc, &chain, 8).unwrap());
    }

    #[test]
    fn final_coefficients_reduce_to_fresh_prime_images() {
        // modular consistency: the reconstructed rationals, reduced modulo a
        // previously unused prime, coincide with that prime's own image
        let chain = toy_chain("ADAD", "ABCD");
        let opts = ReconstructOpts::default();
        let frac = reconstruct_gf(&chain, 4, None, &opts).unwrap();
        let d = 4usize;
        let (series, u_den, step_den) = series_prefix_scaled(&chain, 2 * d, Some(2 * d));
        let p = prime_stream(40, d as u64).next().unwrap(); // far from the 31-bit pool
        let img = prime_image(&chain, &series, &u_den, &step_den, p, d, None)
            .unwrap()
            .expect("fresh prime should be lucky");
        assert_eq!((img.db, img.da), (frac.deg_b(), frac.deg_a()));
        for (zi, c) in frac.a.iter().enumerate() {
            for yi in 0..=d {
                let want = img.a[zi][yi];
                let have = c
                    .coeff(yi)
                    .map(|r| Fp::from_rat(r, p).unwrap().value())
                    .unwrap_or(0);
                assert_eq!(have, want, "A z^{zi} y^{yi}");
            }
        }
        for (zi, c) in frac.b.iter().enumerate() {
            for yi in 0..=d {
                let want = img.b[zi][yi];
                let have = c
                    .coeff(yi)
                    .map(|r| Fp::from_rat(r, p).unwrap().value())
                    .unwrap_or(0);
                assert_eq!(have, want, "B z^{zi} y^{yi}");
            }
        }
    }

    #[test]
    fn persistence_round_trip() {
        let chain = toy_chain("ADAD", "ABCD");
        let opts = ReconstructOpts::default();
        let mut frac = reconstruct_gf(&chain, 4, None, &opts).unwrap();
        frac.source = "deadbeef".into();
        let text = frac.to_text();
        let back = BivariateFraction::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.source, "deadbeef");
        assert_eq!(back.deg_a(), 4);
    }

    #[test]
    fn memory_guard_trips() {
        let chain = toy_chain("ADAD", "ABCD");
        let opts = ReconstructOpts { memory_budget_bytes: 16, ..Default::default() };
        assert!(matches!(
            reconstruct_gf(&chain, 4, None, &opts),
            Err(Error::MemoryBudget { .. })
        ));
    }
}
