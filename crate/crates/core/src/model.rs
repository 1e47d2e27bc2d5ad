//! Homogeneous order-m Markov models with exact rational parameters.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use patdist_exact::{ExtFloat, Rat};

use crate::alphabet::{Alphabet, Letter, Word};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct MarkovModel {
    pub alphabet: Alphabet,
    pub order: usize,
    /// Initial distribution over A^m; empty for order 0.
    mu: BTreeMap<Word, Rat>,
    /// Transition rows: context -> probabilities per letter.
    pi: BTreeMap<Word, Vec<Rat>>,
    /// Set when mu was computed numerically (stationary distribution).
    pub mu_inexact: bool,
}

impl MarkovModel {
    pub fn new(
        alphabet: Alphabet,
        order: usize,
        mu: BTreeMap<Word, Rat>,
        pi: BTreeMap<Word, Vec<Rat>>,
    ) -> Result<Self> {
        let model = MarkovModel { alphabet, order, mu, pi, mu_inexact: false };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let one = Rat::one();
        for (ctx, row) in &self.pi {
            if ctx.len() != self.order {
                return Err(Error::NonStochastic(format!(
                    "context {} has length {}, expected order {}",
                    self.alphabet.decode(ctx),
                    ctx.len(),
                    self.order
                )));
            }
            if row.len() != self.alphabet.len() {
                return Err(Error::NonStochastic("row width differs from alphabet".into()));
            }
            if row.iter().any(|p| p.is_negative() || *p > one) {
                return Err(Error::NonStochastic(format!(
                    "row {} has entries outside [0, 1]",
                    self.alphabet.decode(ctx)
                )));
            }
            let sum: Rat = row.iter().sum();
            if sum != one {
                return Err(Error::NonStochastic(format!(
                    "row {} sums to {}",
                    self.alphabet.decode(ctx),
                    sum
                )));
            }
        }
        if self.order >= 1 && !self.mu.is_empty() {
            let sum: Rat = self.mu.values().sum();
            if sum != one {
                return Err(Error::NonStochastic(format!("initial distribution sums to {sum}")));
            }
            for w in self.mu.keys() {
                if w.len() != self.order {
                    return Err(Error::NonStochastic("initial word length differs from order".into()));
                }
            }
        }
        Ok(())
    }

    pub fn pi(&self, context: &[Letter], letter: Letter) -> Option<&Rat> {
        self.pi.get(context).map(|row| &row[letter as usize])
    }

    pub fn row(&self, context: &[Letter]) -> Option<&[Rat]> {
        self.pi.get(context).map(|r| r.as_slice())
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Word> {
        self.pi.keys()
    }

    pub fn mu(&self) -> &BTreeMap<Word, Rat> {
        &self.mu
    }

    pub fn set_mu(&mut self, mu: BTreeMap<Word, Rat>, inexact: bool) -> Result<()> {
        self.mu = mu;
        self.mu_inexact = inexact;
        self.validate()
    }

    /// Uniform iid model: order 0, every letter 1/|A|.
    pub fn uniform_iid(alphabet: &Alphabet) -> Self {
        let k = alphabet.len();
        let p = Rat::new(BigInt::one(), BigInt::from(k));
        let mut pi = BTreeMap::new();
        pi.insert(Vec::new(), vec![p; k]);
        MarkovModel {
            alphabet: alphabet.clone(),
            order: 0,
            mu: BTreeMap::new(),
            pi,
            mu_inexact: false,
        }
    }

    /// MLE from (m+1)-gram counts: pi(c, b) = N(cb) / sum_b' N(cb').
    pub fn from_counts(
        alphabet: &Alphabet,
        order: usize,
        counts: &BTreeMap<Word, Vec<u64>>,
        mu: BTreeMap<Word, Rat>,
    ) -> Result<Self> {
        let mut pi = BTreeMap::new();
        for (ctx, row) in counts {
            let total: u64 = row.iter().sum();
            if total == 0 {
                continue;
            }
            let probs: Vec<Rat> =
                row.iter().map(|&n| Rat::new(BigInt::from(n), BigInt::from(total))).collect();
            pi.insert(ctx.clone(), probs);
        }
        if pi.is_empty() {
            return Err(Error::Fit("no contexts with observations".into()));
        }
        MarkovModel::new(alphabet.clone(), order, mu, pi)
    }

    /// Maximum-likelihood fit on a sequence; the initial distribution is the
    /// point mass on the observed first m letters.
    pub fn fit_mle(alphabet: &Alphabet, sequence: &[Letter], order: usize) -> Result<Self> {
        if sequence.len() < order + 1 {
            return Err(Error::Fit(format!(
                "sequence of length {} cannot fit an order-{} model",
                sequence.len(),
                order
            )));
        }
        let mut counts: BTreeMap<Word, Vec<u64>> = BTreeMap::new();
        for win in sequence.windows(order + 1) {
            let (ctx, letter) = win.split_at(order);
            counts.entry(ctx.to_vec()).or_insert_with(|| vec![0; alphabet.len()])
                [letter[0] as usize] += 1;
        }
        let mut mu = BTreeMap::new();
        if order >= 1 {
            mu.insert(sequence[..order].to_vec(), Rat::one());
        }
        Self::from_counts(alphabet, order, &counts, mu)
    }

    /// Stationary distribution of the context chain, computed in extended
    /// precision and converted to (dyadic) rationals normalized to sum 1.
    /// The result is flagged inexact.
    pub fn stationary_mu(&self, precision_bits: u32, iterations: usize) -> Result<BTreeMap<Word, Rat>> {
        if self.order == 0 {
            return Ok(BTreeMap::new());
        }
        let contexts: Vec<Word> = self.pi.keys().cloned().collect();
        let index: BTreeMap<&Word, usize> =
            contexts.iter().enumerate().map(|(i, w)| (w, i)).collect();
        // successor structure: c --b--> suffix(c.b)
        let mut succ: Vec<Vec<(usize, ExtFloat)>> = Vec::with_capacity(contexts.len());
        for ctx in &contexts {
            let row = &self.pi[ctx];
            let mut out = Vec::new();
            for l in self.alphabet.letters() {
                if row[l as usize].is_zero() {
                    continue;
                }
                let mut next = ctx.clone();
                next.push(l);
                next.remove(0);
                let j = *index.get(&next).ok_or_else(|| {
                    Error::MissingContext(vec![self.alphabet.decode(&next)])
                })?;
                out.push((j, ExtFloat::from_rat(&row[l as usize], precision_bits)));
            }
            succ.push(out);
        }
        let n = contexts.len();
        let mut v = vec![ExtFloat::from_rat(&Rat::new(BigInt::one(), BigInt::from(n)), precision_bits); n];
        for _ in 0..iterations {
            let mut next = vec![ExtFloat::zero(precision_bits); n];
            for (i, outs) in succ.iter().enumerate() {
                for (j, p) in outs {
                    next[*j] = next[*j].add(&v[i].mul(p));
                }
            }
            v = next;
        }
        // exact dyadic conversion, then normalize the sum to exactly 1
        let raw: Vec<Rat> = v.iter().map(|x| x.to_rat()).collect();
        let total: Rat = raw.iter().sum();
        if total.is_zero() {
            return Err(Error::Convergence("stationary iteration vanished".into()));
        }
        Ok(contexts.into_iter().zip(raw).map(|(c, p)| (c, p / &total)).collect())
    }

    // ------------------------------------------------------------- files

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let abc: String = self.alphabet.letters().map(|l| self.alphabet.char(l)).collect();
        s.push_str(&format!("alphabet {abc}\n"));
        s.push_str(&format!("order {}\n", self.order));
        if self.mu_inexact {
            s.push_str("mu-inexact true\n");
        }
        for (w, p) in &self.mu {
            s.push_str(&format!("mu {} {}\n", self.alphabet.decode(w), p));
        }
        for (ctx, row) in &self.pi {
            let c = if ctx.is_empty() { ".".to_string() } else { self.alphabet.decode(ctx) };
            for l in self.alphabet.letters() {
                let p = &row[l as usize];
                if !p.is_zero() {
                    s.push_str(&format!("pi {c} {} {p}\n", self.alphabet.char(l)));
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut alphabet: Option<Alphabet> = None;
        let mut order: Option<usize> = None;
        let mut mu = BTreeMap::new();
        let mut pi: BTreeMap<Word, Vec<Rat>> = BTreeMap::new();
        let mut mu_inexact = false;
        let bad = |line: &str, why: &str| Error::Input(format!("model line '{line}': {why}"));
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("alphabet") => {
                    let chars = it.next().ok_or_else(|| bad(line, "missing letters"))?;
                    alphabet = Some(Alphabet::new(chars)?);
                }
                Some("order") => {
                    let v = it.next().ok_or_else(|| bad(line, "missing order"))?;
                    order = Some(v.parse().map_err(|_| bad(line, "bad order"))?);
                }
                Some("mu-inexact") => {
                    mu_inexact = it.next() == Some("true");
                }
                Some("mu") => {
                    let a = alphabet.as_ref().ok_or_else(|| bad(line, "alphabet not declared"))?;
                    let w = it.next().ok_or_else(|| bad(line, "missing word"))?;
                    let p = it.next().ok_or_else(|| bad(line, "missing probability"))?;
                    mu.insert(a.encode(w)?, parse_rat(p).ok_or_else(|| bad(line, "bad rational"))?);
                }
                Some("pi") => {
                    let a = alphabet.as_ref().ok_or_else(|| bad(line, "alphabet not declared"))?;
                    if order.is_none() {
                        return Err(bad(line, "order not declared"));
                    }
                    let ctx_s = it.next().ok_or_else(|| bad(line, "missing context"))?;
                    let letter_s = it.next().ok_or_else(|| bad(line, "missing letter"))?;
                    let p_s = it.next().ok_or_else(|| bad(line, "missing probability"))?;
                    let ctx = if ctx_s == "." { Vec::new() } else { a.encode(ctx_s)? };
                    let letter_c: Vec<char> = letter_s.chars().collect();
                    if letter_c.len() != 1 {
                        return Err(bad(line, "letter must be one character"));
                    }
                    let letter = a
                        .letter(letter_c[0])
                        .ok_or_else(|| bad(line, "letter outside alphabet"))?;
                    let p = parse_rat(p_s).ok_or_else(|| bad(line, "bad rational"))?;
                    let row = pi.entry(ctx).or_insert_with(|| vec![Rat::zero(); a.len()]);
                    row[letter as usize] = p;
                }
                Some(other) => return Err(bad(line, &format!("unknown keyword '{other}'"))),
                None => {}
            }
        }
        let alphabet = alphabet.ok_or_else(|| Error::Input("model file lacks alphabet".into()))?;
        let order = order.ok_or_else(|| Error::Input("model file lacks order".into()))?;
        let mut model = MarkovModel::new(alphabet, order, mu, pi)?;
        model.mu_inexact = mu_inexact;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

pub fn parse_rat(s: &str) -> Option<Rat> {
    match s.split_once('/') {
        Some((n, d)) => {
            let num: BigInt = n.parse().ok()?;
            let den: BigInt = d.parse().ok()?;
            if den.is_zero() {
                return None;
            }
            Some(Rat::new(num, den))
        }
        None => {
            let num: BigInt = s.parse().ok()?;
            Some(Rat::from_integer(num))
        }
    }
}

/// Read a sequence from FASTA-style text: '>' header lines skipped, letters
/// uppercased; characters outside the alphabet are errors unless
/// skip_unknown is set.
pub fn read_sequence(text: &str, alphabet: &Alphabet, skip_unknown: bool) -> Result<Vec<Letter>> {
    let mut out = Vec::new();
    for line in text.lines() {
        if line.starts_with('>') {
            continue;
        }
        for c in line.chars() {
            if c.is_whitespace() {
                continue;
            }
            let up = c.to_ascii_uppercase();
            match alphabet.letter(up) {
                Some(l) => out.push(l),
                None if skip_unknown => {}
                None => {
                    return Err(Error::Input(format!("sequence character '{c}' outside alphabet")))
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abcd() -> Alphabet {
        Alphabet::new("ABCD").unwrap()
    }

    #[test]
    fn uniform_iid_rows() {
        let m = MarkovModel::uniform_iid(&abcd());
        let q = Rat::new(BigInt::one(), BigInt::from(4));
        for l in 0..4u8 {
            assert_eq!(m.pi(&[], l), Some(&q));
        }
        let single = MarkovModel::uniform_iid(&Alphabet::new("A").unwrap());
        assert_eq!(single.pi(&[], 0), Some(&Rat::one()));
    }

    #[test]
    fn mle_order_zero_counts() {
        let a = Alphabet::new("AB").unwrap();
        let seq = a.encode("AAAB").unwrap();
        let m = MarkovModel::fit_mle(&a, &seq, 0).unwrap();
        assert_eq!(m.pi(&[], 0), Some(&Rat::new(BigInt::from(3), BigInt::from(4))));
        assert_eq!(m.pi(&[], 1), Some(&Rat::new(BigInt::from(1), BigInt::from(4))));
    }

    #[test]
    fn mle_order_one_counts() {
        let a = Alphabet::new("AB").unwrap();
        let seq = a.encode("ABAB").unwrap();
        let m = MarkovModel::fit_mle(&a, &seq, 1).unwrap();
        // context A always followed by B, context B always by A
        assert_eq!(m.pi(&a.encode("A").unwrap(), 1), Some(&Rat::one()));
        assert_eq!(m.pi(&a.encode("B").unwrap(), 0), Some(&Rat::one()));
        // mu is the point mass on the first letter
        assert_eq!(m.mu().get(&a.encode("A").unwrap()), Some(&Rat::one()));
    }

    #[test]
    fn published_order_two_mle_row() {
        let a = abcd(); // stands in for ACGT with A,C,G,T = A,B,C,D
        let mut counts = BTreeMap::new();
        counts.insert(a.encode("DA").unwrap(), vec![2632852u64, 1451956, 1655432, 2565811]);
        let mut mu = BTreeMap::new();
        mu.insert(a.encode("CA").unwrap(), Rat::one());
        let m = MarkovModel::from_counts(&a, 2, &counts, mu).unwrap();
        assert_eq!(
            m.pi(&a.encode("DA").unwrap(), 1),
            Some(&Rat::new(BigInt::from(1451956), BigInt::from(8306051)))
        );
    }

    #[test]
    fn round_trip_is_lossless() {
        let a = abcd();
        let mut counts = BTreeMap::new();
        counts.insert(a.encode("DA").unwrap(), vec![2632852u64, 1451956, 1655432, 2565811]);
        counts.insert(a.encode("AB").unwrap(), vec![1, 2, 3, 0]);
        let mut mu = BTreeMap::new();
        mu.insert(a.encode("DA").unwrap(), Rat::new(BigInt::from(1), BigInt::from(3)));
        mu.insert(a.encode("AB").unwrap(), Rat::new(BigInt::from(2), BigInt::from(3)));
        let m = MarkovModel::from_counts(&a, 2, &counts, mu).unwrap();
        let text = m.to_text();
        let back = MarkovModel::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(
            back.pi(&a.encode("DA").unwrap(), 1),
            Some(&Rat::new(BigInt::from(1451956), BigInt::from(8306051)))
        );
    }

    #[test]
    fn non_stochastic_rows_rejected() {
        let text = "alphabet AB\norder 0\npi . A 1/2\npi . B 2/5\n";
        assert!(matches!(MarkovModel::from_text(text), Err(Error::NonStochastic(_))));
    }

    #[test]
    fn fasta_reading() {
        let a = abcd();
        let text = ">header line\nABba\nCD\n>another\nDA x\n";
        assert!(read_sequence(text, &a, false).is_err());
        let seq = read_sequence(text, &a, true).unwrap();
        assert_eq!(a.decode(&seq), "ABBACDDA");
    }

    #[test]
    fn stationary_mu_sums_to_one() {
        let a = Alphabet::new("AB").unwrap();
        let seq = a.encode("ABAABBBAABABABBABAAABBB").unwrap();
        let m = MarkovModel::fit_mle(&a, &seq, 1).unwrap();
        let mu = m.stationary_mu(256, 200).unwrap();
        let total: Rat = mu.values().sum();
        assert_eq!(total, Rat::one());
        let mut m2 = m.clone();
        m2.set_mu(mu, true).unwrap();
        assert!(m2.mu_inexact);
    }
}
