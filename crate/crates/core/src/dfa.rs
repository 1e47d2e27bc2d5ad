//! Deterministic automata for A*W: Thompson construction, subset
//! determinization, Hopcroft minimization, canonical BFS numbering,
//! sequence scanning and DOT export.

use std::collections::{HashMap, VecDeque};

use crate::alphabet::{Alphabet, Letter};
use crate::error::{Error, Result};
use crate::pattern::PatternAst;

#[derive(Clone, Debug)]
pub struct Dfa {
    pub alphabet: Alphabet,
    delta: Vec<Vec<u32>>,
    pub start: u32,
    finals: Vec<bool>,
}

impl Dfa {
    pub fn from_parts(alphabet: Alphabet, delta: Vec<Vec<u32>>, start: u32, finals: Vec<bool>) -> Self {
        debug_assert_eq!(delta.len(), finals.len());
        debug_assert!(delta.iter().all(|row| row.len() == alphabet.len()));
        Dfa { alphabet, delta, start, finals }
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_finals(&self) -> usize {
        self.finals.iter().filter(|&&f| f).count()
    }

    pub fn next(&self, state: u32, letter: Letter) -> u32 {
        self.delta[state as usize][letter as usize]
    }

    pub fn is_final(&self, state: u32) -> bool {
        self.finals[state as usize]
    }

    pub fn walk(&self, from: u32, word: &[Letter]) -> u32 {
        word.iter().fold(from, |q, &l| self.next(q, l))
    }

    /// End positions (1-based) at which an occurrence ends.
    pub fn scan(&self, sequence: &[Letter]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut q = self.start;
        for (i, &l) in sequence.iter().enumerate() {
            q = self.next(q, l);
            if self.is_final(q) {
                out.push(i + 1);
            }
        }
        out
    }

    /// DOT text graph: final states double-circled, edges grouped by target.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        s.push_str(&format!("digraph {name} {{\n  rankdir=LR;\n  node [shape=circle];\n"));
        for q in 0..self.num_states() {
            if self.finals[q] {
                s.push_str(&format!("  {q} [shape=doublecircle];\n"));
            }
        }
        s.push_str(&format!("  __start [shape=point];\n  __start -> {};\n", self.start));
        for q in 0..self.num_states() {
            let mut by_target: HashMap<u32, Vec<char>> = HashMap::new();
            for l in self.alphabet.letters() {
                by_target.entry(self.next(q as u32, l)).or_default().push(self.alphabet.char(l));
            }
            let mut targets: Vec<_> = by_target.into_iter().collect();
            targets.sort();
            for (t, letters) in targets {
                let label: String =
                    letters.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
                s.push_str(&format!("  {q} -> {t} [label=\"{label}\"];\n"));
            }
        }
        s.push_str("}\n");
        s
    }
}

// ---------------------------------------------------------------- NFA

struct Nfa {
    eps: Vec<Vec<u32>>,
    edges: Vec<Vec<(u64, u32)>>, // (letter bitmask, target)
    start: u32,
    accept: u32,
}

impl Nfa {
    fn new() -> Self {
        Nfa { eps: Vec::new(), edges: Vec::new(), start: 0, accept: 0 }
    }

    fn add_state(&mut self) -> u32 {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        (self.eps.len() - 1) as u32
    }

    fn add_eps(&mut self, from: u32, to: u32) {
        self.eps[from as usize].push(to);
    }

    fn add_edge(&mut self, from: u32, mask: u64, to: u32) {
        self.edges[from as usize].push((mask, to));
    }

    /// Thompson fragment for a node; returns (entry, exit).
    fn fragment(&mut self, node: &PatternAst) -> (u32, u32) {
        match node {
            PatternAst::Epsilon => {
                let s = self.add_state();
                let e = self.add_state();
                self.add_eps(s, e);
                (s, e)
            }
            PatternAst::Literal(l) => {
                let s = self.add_state();
                let e = self.add_state();
                self.add_edge(s, 1u64 << l, e);
                (s, e)
            }
            PatternAst::Class(ls) => {
                let s = self.add_state();
                let e = self.add_state();
                let mask = ls.iter().fold(0u64, |m, &l| m | (1u64 << l));
                self.add_edge(s, mask, e);
                (s, e)
            }
            PatternAst::Concat(parts) => {
                let frags: Vec<(u32, u32)> = parts.iter().map(|p| self.fragment(p)).collect();
                for w in frags.windows(2) {
                    self.add_eps(w[0].1, w[1].0);
                }
                (frags.first().unwrap().0, frags.last().unwrap().1)
            }
            PatternAst::Alternation(parts) => {
                let s = self.add_state();
                let e = self.add_state();
                for p in parts {
                    let (fs, fe) = self.fragment(p);
                    self.add_eps(s, fs);
                    self.add_eps(fe, e);
                }
                (s, e)
            }
            PatternAst::Star(p) => {
                let s = self.add_state();
                let e = self.add_state();
                let (fs, fe) = self.fragment(p);
                self.add_eps(s, fs);
                self.add_eps(s, e);
                self.add_eps(fe, fs);
                self.add_eps(fe, e);
                (s, e)
            }
            PatternAst::Repeat(p, min, max) => {
                // expand: min mandatory copies, then optional tail
                let s = self.add_state();
                let mut cur = s;
                for _ in 0..*min {
                    let (fs, fe) = self.fragment(p);
                    self.add_eps(cur, fs);
                    cur = fe;
                }
                match max {
                    None => {
                        let (fs, fe) = self.fragment(p);
                        let e = self.add_state();
                        self.add_eps(cur, fs);
                        self.add_eps(cur, e);
                        self.add_eps(fe, fs);
                        self.add_eps(fe, e);
                        (s, e)
                    }
                    Some(mx) => {
                        let e = self.add_state();
                        for _ in *min..*mx {
                            let (fs, fe) = self.fragment(p);
                            self.add_eps(cur, fs);
                            self.add_eps(cur, e);
                            cur = fe;
                        }
                        self.add_eps(cur, e);
                        (s, e)
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------- subset construction

type BitSet = Vec<u64>;

fn bit_insert(s: &mut BitSet, i: u32) -> bool {
    let w = (i / 64) as usize;
    let b = 1u64 << (i % 64);
    let had = s[w] & b != 0;
    s[w] |= b;
    !had
}

fn bit_contains(s: &BitSet, i: u32) -> bool {
    s[(i / 64) as usize] & (1u64 << (i % 64)) != 0
}

/// Minimal DFA for A* . L(ast): self-loop-prefixed Thompson NFA, subset
/// construction, Hopcroft minimization, BFS-canonical state numbering.
pub fn build_min_dfa(ast: &PatternAst, alphabet: &Alphabet) -> Result<Dfa> {
    let mut nfa = Nfa::new();
    let global = nfa.add_state();
    let all_mask = if alphabet.len() == 64 { u64::MAX } else { (1u64 << alphabet.len()) - 1 };
    nfa.add_edge(global, all_mask, global);
    let (fs, fe) = nfa.fragment(ast);
    nfa.add_eps(global, fs);
    nfa.start = global;
    nfa.accept = fe;

    let n_states = nfa.eps.len();
    let words = n_states.div_ceil(64);
    let closure = |set: &mut BitSet| {
        let mut stack: Vec<u32> =
            (0..n_states as u32).filter(|&q| bit_contains(set, q)).collect();
        while let Some(q) = stack.pop() {
            for &t in &nfa.eps[q as usize] {
                if bit_insert(set, t) {
                    stack.push(t);
                }
            }
        }
    };

    let mut init: BitSet = vec![0; words];
    bit_insert(&mut init, nfa.start);
    closure(&mut init);

    let mut ids: HashMap<BitSet, u32> = HashMap::new();
    let mut subsets: Vec<BitSet> = vec![init.clone()];
    ids.insert(init, 0);
    let mut delta: Vec<Vec<u32>> = Vec::new();
    let mut finals: Vec<bool> = Vec::new();
    let mut queue = VecDeque::from([0u32]);
    while let Some(id) = queue.pop_front() {
        let cur = subsets[id as usize].clone();
        let mut row = Vec::with_capacity(alphabet.len());
        for l in alphabet.letters() {
            let mut next: BitSet = vec![0; words];
            for q in 0..n_states as u32 {
                if bit_contains(&cur, q) {
                    for &(mask, t) in &nfa.edges[q as usize] {
                        if mask & (1u64 << l) != 0 {
                            bit_insert(&mut next, t);
                        }
                    }
                }
            }
            closure(&mut next);
            let nid = *ids.entry(next.clone()).or_insert_with(|| {
                subsets.push(next);
                queue.push_back((subsets.len() - 1) as u32);
                (subsets.len() - 1) as u32
            });
            row.push(nid);
        }
        debug_assert_eq!(delta.len(), id as usize);
        delta.push(row);
        finals.push(bit_contains(&subsets[id as usize], nfa.accept));
    }

    if !finals.iter().any(|&f| f) {
        return Err(Error::EmptyLanguage);
    }

    let classes: Vec<usize> = finals.iter().map(|&f| f as usize).collect();
    let raw = Dfa::from_parts(alphabet.clone(), delta, 0, finals);
    let quotient = minimize_with_classes(&raw, &classes);
    Ok(canonicalize(&quotient))
}

/// Hopcroft partition refinement starting from a caller-supplied partition.
/// States may merge only within an initial class.
pub fn minimize_with_classes(dfa: &Dfa, init_class: &[usize]) -> Dfa {
    let n = dfa.num_states();
    let k = dfa.alphabet.len();
    // inverse transition lists per letter
    let mut inv: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); n]; k];
    for q in 0..n as u32 {
        for l in 0..k {
            inv[l][dfa.next(q, l as Letter) as usize].push(q);
        }
    }
    // blocks from initial classes
    let mut class_ids: HashMap<usize, usize> = HashMap::new();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut block_of: Vec<usize> = vec![0; n];
    for q in 0..n {
        let b = *class_ids.entry(init_class[q]).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(q as u32);
        block_of[q] = b;
    }

    let mut work: VecDeque<(usize, usize)> = VecDeque::new();
    let mut in_work: Vec<Vec<bool>> = vec![vec![false; k]; blocks.len()];
    for b in 0..blocks.len() {
        for l in 0..k {
            work.push_back((b, l));
            in_work[b][l] = true;
        }
    }

    while let Some((b, l)) = work.pop_front() {
        in_work[b][l] = false;
        // predecessors of block b under letter l, grouped by their block
        let mut touched: HashMap<usize, Vec<u32>> = HashMap::new();
        for &q in &blocks[b] {
            for &p in &inv[l][q as usize] {
                touched.entry(block_of[p as usize]).or_default().push(p);
            }
        }
        for (c, hits) in touched {
            if hits.len() == blocks[c].len() {
                continue;
            }
            // split block c into hits / rest
            let mut in_hits = vec![false; blocks[c].len()];
            let pos: HashMap<u32, usize> =
                blocks[c].iter().enumerate().map(|(i, &q)| (q, i)).collect();
            for &h in &hits {
                in_hits[pos[&h]] = true;
            }
            let rest: Vec<u32> = blocks[c]
                .iter()
                .enumerate()
                .filter(|(i, _)| !in_hits[*i])
                .map(|(_, &q)| q)
                .collect();
            let new_id = blocks.len();
            for &q in &hits {
                block_of[q as usize] = new_id;
            }
            blocks[c] = rest;
            blocks.push(hits);
            in_work.push(vec![false; k]);
            for letter in 0..k {
                if in_work[c][letter] {
                    work.push_back((new_id, letter));
                    in_work[new_id][letter] = true;
                } else {
                    // enqueue the smaller half
                    let (small, big) =
                        if blocks[new_id].len() <= blocks[c].len() { (new_id, c) } else { (c, new_id) };
                    let _ = big;
                    work.push_back((small, letter));
                    in_work[small][letter] = true;
                }
            }
        }
    }

    // quotient automaton
    let mut delta = vec![vec![0u32; k]; blocks.len()];
    let mut finals = vec![false; blocks.len()];
    for (b, members) in blocks.iter().enumerate() {
        let rep = members[0];
        for l in 0..k {
            delta[b][l] = block_of[dfa.next(rep, l as Letter) as usize] as u32;
        }
        finals[b] = dfa.is_final(rep);
    }
    let start = block_of[dfa.start as usize] as u32;
    Dfa::from_parts(dfa.alphabet.clone(), delta, start, finals)
}

/// Renumber states in BFS order from the start, letters in alphabet order,
/// dropping unreachable states.
pub fn canonicalize(dfa: &Dfa) -> Dfa {
    let n = dfa.num_states();
    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut new_id: Vec<Option<u32>> = vec![None; n];
    let mut queue = VecDeque::from([dfa.start]);
    new_id[dfa.start as usize] = Some(0);
    order.push(dfa.start);
    while let Some(q) = queue.pop_front() {
        for l in dfa.alphabet.letters() {
            let t = dfa.next(q, l);
            if new_id[t as usize].is_none() {
                new_id[t as usize] = Some(order.len() as u32);
                order.push(t);
                queue.push_back(t);
            }
        }
    }
    let mut delta = Vec::with_capacity(order.len());
    let mut finals = Vec::with_capacity(order.len());
    for &old in &order {
        delta.push(
            dfa.alphabet.letters().map(|l| new_id[dfa.next(old, l) as usize].unwrap()).collect(),
        );
        finals.push(dfa.is_final(old));
    }
    Dfa::from_parts(dfa.alphabet.clone(), delta, 0, finals)
}
