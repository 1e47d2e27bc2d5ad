//! Order-m augmentation: a DFA whose states each remember a unique last-m
//! context (non-m-ambiguous), built as the product with the de Bruijn
//! automaton over A^m and minimized without merging distinct contexts.

use std::collections::HashMap;

use crate::alphabet::Word;
use crate::dfa::{canonicalize, minimize_with_classes, Dfa};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct OrderMDfa {
    pub dfa: Dfa,
    pub m: usize,
    /// Per state: the unique m-letter suffix of every word of length >= m
    /// reaching it, or None for states reachable only by shorter words.
    backmap: Vec<Option<Word>>,
}

impl OrderMDfa {
    pub fn context(&self, state: u32) -> Option<&[u8]> {
        self.backmap[state as usize].as_deref()
    }

    pub fn is_transient(&self, state: u32) -> bool {
        self.backmap[state as usize].is_none()
    }

    /// States reachable by words of length >= m (the chain state space).
    pub fn chain_states(&self) -> Vec<u32> {
        (0..self.dfa.num_states() as u32).filter(|&q| !self.is_transient(q)).collect()
    }

    pub fn num_chain_states(&self) -> usize {
        self.backmap.iter().filter(|b| b.is_some()).count()
    }
}

pub fn make_order_m(dfa: &Dfa, m: usize) -> Result<OrderMDfa> {
    if m == 0 {
        let backmap = vec![Some(Vec::new()); dfa.num_states()];
        return Ok(OrderMDfa { dfa: dfa.clone(), m, backmap });
    }
    let k = dfa.alphabet.len();
    // product with the last-min(len, m) letter tracker
    let mut ids: HashMap<(u32, Word), u32> = HashMap::new();
    let mut states: Vec<(u32, Word)> = vec![(dfa.start, Vec::new())];
    ids.insert((dfa.start, Vec::new()), 0);
    let mut delta: Vec<Vec<u32>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let (q, w) = states[i].clone();
        let mut row = Vec::with_capacity(k);
        for l in dfa.alphabet.letters() {
            let mut w2 = w.clone();
            w2.push(l);
            if w2.len() > m {
                w2.remove(0);
            }
            let key = (dfa.next(q, l), w2);
            let id = *ids.entry(key.clone()).or_insert_with(|| {
                states.push(key);
                (states.len() - 1) as u32
            });
            row.push(id);
        }
        delta.push(row);
        i += 1;
    }
    let finals: Vec<bool> = states.iter().map(|(q, _)| dfa.is_final(*q)).collect();
    let product =
        Dfa::from_parts(dfa.alphabet.clone(), delta, 0, finals.clone());

    // minimize subject to preserving contexts: states may merge only when
    // they agree on (finality, context); short-context states never merge
    // because their context word determines them uniquely
    let mut class_key: HashMap<(bool, &Word), usize> = HashMap::new();
    let mut classes = Vec::with_capacity(states.len());
    for (idx, (_, w)) in states.iter().enumerate() {
        let key = (finals[idx], w);
        let next = class_key.len();
        classes.push(*class_key.entry(key).or_insert(next));
    }
    let quotient = minimize_with_classes(&product, &classes);

    // recompute contexts for the quotient by replaying the product
    let canon = canonicalize(&quotient);
    let mut backmap: Vec<Option<Word>> = vec![None; canon.num_states()];
    let mut seen = vec![false; canon.num_states()];
    // map each product state through both reductions by walking words:
    // simpler and robust, propagate contexts by BFS over the canonical DFA
    let mut frontier = vec![(canon.start, Vec::<u8>::new())];
    seen[canon.start as usize] = true;
    while let Some((q, w)) = frontier.pop() {
        if w.len() >= m {
            debug_assert!(backmap[q as usize].as_ref().is_none_or(|b| *b == w[w.len() - m..]));
            backmap[q as usize] = Some(w[w.len() - m..].to_vec());
        }
        for l in canon.alphabet.letters() {
            let t = canon.next(q, l);
            let mut w2 = w.clone();
            w2.push(l);
            if w2.len() > m + 1 {
                w2.remove(0);
            }
            // visit a state once per (state, recent-suffix) up to length m+1
            // to guarantee every chain state receives its context
            if !seen[t as usize] || (w2.len() >= m && backmap[t as usize].is_none()) {
                seen[t as usize] = true;
                frontier.push((t, w2));
            }
        }
    }
    Ok(OrderMDfa { dfa: canon, m, backmap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::dfa::build_min_dfa;
    use crate::pattern::{parse_pattern, ClassTable};

    fn build(pattern: &str, alphabet: &str) -> Dfa {
        let a = Alphabet::new(alphabet).unwrap();
        let ast = parse_pattern(pattern, &a, &ClassTable::empty()).unwrap();
        build_min_dfa(&ast, &a).unwrap()
    }

    /// Exact non-m-ambiguity check: fixpoint over reachable (state, suffix)
    /// pairs of words with length >= m.
    fn contexts_reaching(dfa: &Dfa, m: usize) -> Vec<std::collections::BTreeSet<Word>> {
        use std::collections::BTreeSet;
        let mut sets: Vec<BTreeSet<Word>> = vec![BTreeSet::new(); dfa.num_states()];
        let mut frontier: Vec<(u32, Word)> = vec![(dfa.start, Vec::new())];
        let mut visited: BTreeSet<(u32, Word)> = BTreeSet::new();
        while let Some((q, w)) = frontier.pop() {
            for l in dfa.alphabet.letters() {
                let t = dfa.next(q, l);
                let mut w2 = w.clone();
                w2.push(l);
                if w2.len() > m {
                    w2.remove(0);
                }
                if w2.len() == m {
                    sets[t as usize].insert(w2.clone());
                }
                if visited.insert((t, w2.clone())) {
                    frontier.push((t, w2));
                }
            }
        }
        sets
    }

    #[test]
    fn order_zero_is_identity() {
        let dfa = build("ADAD", "ABCD");
        let om = make_order_m(&dfa, 0).unwrap();
        assert_eq!(om.dfa.num_states(), dfa.num_states());
        assert_eq!(om.num_chain_states(), dfa.num_states());
        assert_eq!(om.context(0), Some(&[][..]));
    }

    #[test]
    fn w1_order_1_has_singleton_contexts() {
        let dfa = build("AB(A|B)AA(A|B)AB", "AB");
        let om = make_order_m(&dfa, 1).unwrap();
        let sets = contexts_reaching(&om.dfa, 1);
        for q in 0..om.dfa.num_states() as u32 {
            let set = &sets[q as usize];
            match om.context(q) {
                Some(ctx) => {
                    assert_eq!(set.len(), 1, "state {q} has contexts {set:?}");
                    assert_eq!(set.iter().next().unwrap().as_slice(), ctx);
                }
                None => assert!(set.is_empty(), "transient state {q} reached by long words"),
            }
        }
    }

    #[test]
    fn non_ambiguity_holds_for_order_2() {
        let dfa = build("ACA", "ACGT");
        let om = make_order_m(&dfa, 2).unwrap();
        let sets = contexts_reaching(&om.dfa, 2);
        for (q, set) in sets.iter().enumerate() {
            assert!(set.len() <= 1, "state {q} ambiguous: {set:?}");
        }
    }

    #[test]
    fn cgcaccc_order_2_chain_size() {
        let dfa = build("CGCACCC", "ACGT");
        let om = make_order_m(&dfa, 2).unwrap();
        assert_eq!(om.num_chain_states(), 21);
        assert_eq!(om.dfa.num_finals(), 1);
    }

    #[test]
    fn language_is_preserved() {
        let a = Alphabet::new("AB").unwrap();
        let dfa = build("AB(A|B)AA(A|B)AB", "AB");
        let om = make_order_m(&dfa, 1).unwrap();
        for len in 0..=10usize {
            for w in a.words(len) {
                assert_eq!(dfa.scan(&w), om.dfa.scan(&w));
            }
        }
    }
}
