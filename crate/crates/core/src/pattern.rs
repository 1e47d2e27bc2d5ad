//! Pattern expressions: a small POSIX-like dialect with literals, named
//! character classes, grouped alternation, bounded repeats and star.

use std::collections::BTreeMap;

use crate::alphabet::{Alphabet, Letter};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternAst {
    Epsilon,
    Literal(Letter),
    Class(Vec<Letter>),
    Concat(Vec<PatternAst>),
    Alternation(Vec<PatternAst>),
    /// min..=max copies; None means unbounded.
    Repeat(Box<PatternAst>, usize, Option<usize>),
    Star(Box<PatternAst>),
}

/// Named single-character classes, e.g. N = (A|C|G|T).
#[derive(Clone, Debug, Default)]
pub struct ClassTable {
    classes: BTreeMap<char, Vec<Letter>>,
}

impl ClassTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parse declarations like "N=ACGT" or "N=(A|C|G|T)", comma separated.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let mut classes = BTreeMap::new();
        for decl in text.split(',') {
            let decl = decl.trim();
            if decl.is_empty() {
                continue;
            }
            let (name, body) = decl
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("class declaration '{decl}' lacks '='")))?;
            let name: Vec<char> = name.trim().chars().collect();
            if name.len() != 1 {
                return Err(Error::Input(format!("class name must be one character: '{decl}'")));
            }
            if alphabet.letter(name[0]).is_some() {
                return Err(Error::Input(format!(
                    "class name '{}' collides with an alphabet letter",
                    name[0]
                )));
            }
            let mut letters = Vec::new();
            for c in body.trim().chars() {
                if c == '(' || c == ')' || c == '|' || c.is_whitespace() {
                    continue;
                }
                let l = alphabet
                    .letter(c)
                    .ok_or_else(|| Error::Input(format!("class letter '{c}' outside alphabet")))?;
                if !letters.contains(&l) {
                    letters.push(l);
                }
            }
            if letters.is_empty() {
                return Err(Error::Input(format!("class '{}' is empty", name[0])));
            }
            classes.insert(name[0], letters);
        }
        Ok(ClassTable { classes })
    }

    pub fn get(&self, name: char) -> Option<&[Letter]> {
        self.classes.get(&name).map(|v| v.as_slice())
    }
}

pub fn parse_pattern(text: &str, alphabet: &Alphabet, classes: &ClassTable) -> Result<PatternAst> {
    if text.is_empty() {
        return Err(Error::Syntax { pos: 0, msg: "empty pattern".into() });
    }
    let chars: Vec<char> = text.chars().collect();
    let mut p = Parser { chars: &chars, pos: 0, alphabet, classes };
    let ast = p.alternation()?;
    if p.pos != p.chars.len() {
        return Err(Error::Syntax { pos: p.pos, msg: format!("unexpected '{}'", p.chars[p.pos]) });
    }
    Ok(ast)
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
    alphabet: &'a Alphabet,
    classes: &'a ClassTable,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn alternation(&mut self) -> Result<PatternAst> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { PatternAst::Alternation(branches) })
    }

    fn concat(&mut self) -> Result<PatternAst> {
        let mut parts = Vec::new();
        while let Some(c) = self.peek() {
            if c == ')' || c == '|' {
                break;
            }
            parts.push(self.repeat()?);
        }
        Ok(match parts.len() {
            0 => PatternAst::Epsilon,
            1 => parts.pop().unwrap(),
            _ => PatternAst::Concat(parts),
        })
    }

    fn repeat(&mut self) -> Result<PatternAst> {
        let mut node = self.atom()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    node = PatternAst::Star(Box::new(node));
                }
                Some('{') => {
                    let open = self.pos;
                    self.pos += 1;
                    let min = self.number(open)?;
                    let max = match self.peek() {
                        Some(',') => {
                            self.pos += 1;
                            if self.peek() == Some('}') {
                                None
                            } else {
                                Some(self.number(open)?)
                            }
                        }
                        _ => Some(min),
                    };
                    if self.peek() != Some('}') {
                        return Err(Error::Syntax { pos: self.pos, msg: "expected '}'".into() });
                    }
                    self.pos += 1;
                    if let Some(mx) = max {
                        if min > mx {
                            return Err(Error::Syntax {
                                pos: open,
                                msg: format!("repeat bounds {{{min},{mx}}} are reversed"),
                            });
                        }
                    }
                    node = PatternAst::Repeat(Box::new(node), min, max);
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn number(&mut self, open: usize) -> Result<usize> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Syntax { pos: open, msg: "expected number in repeat".into() });
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| Error::Syntax { pos: start, msg: "repeat bound too large".into() })
    }

    fn atom(&mut self) -> Result<PatternAst> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.alternation()?;
                if self.peek() != Some(')') {
                    return Err(Error::Syntax { pos: self.pos, msg: "expected ')'".into() });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) => {
                if let Some(l) = self.alphabet.letter(c) {
                    self.pos += 1;
                    Ok(PatternAst::Literal(l))
                } else if let Some(letters) = self.classes.get(c) {
                    self.pos += 1;
                    Ok(PatternAst::Class(letters.to_vec()))
                } else {
                    Err(Error::Syntax {
                        pos: self.pos,
                        msg: format!("letter '{c}' outside alphabet and not a declared class"),
                    })
                }
            }
            None => Err(Error::Syntax { pos: self.pos, msg: "unexpected end of pattern".into() }),
        }
    }
}

/// Language membership by dynamic programming over subranges; the reference
/// matcher for testing automaton construction on short words.
pub fn ast_matches(ast: &PatternAst, word: &[Letter]) -> bool {
    let n = word.len();
    range_set(ast, word)[0][n]
}

/// End positions (1-based) of factors of `word` in the language; the naive
/// counterpart of scanning with an associated automaton. The empty factor
/// counts too: a pattern accepting the empty word matches at every position.
pub fn naive_end_positions(ast: &PatternAst, word: &[Letter]) -> Vec<usize> {
    let set = range_set(ast, word);
    let n = word.len();
    (1..=n).filter(|&i| (0..=i).any(|j| set[j][i])).collect()
}

/// set[i][j] = word[i..j] in L(node)
fn range_set(node: &PatternAst, w: &[Letter]) -> Vec<Vec<bool>> {
    let n = w.len();
    let empty = || vec![vec![false; n + 1]; n + 1];
    let identity = || {
        let mut s = empty();
        for i in 0..=n {
            s[i][i] = true;
        }
        s
    };
    let compose = |x: &Vec<Vec<bool>>, y: &Vec<Vec<bool>>| {
        let mut out = empty();
        for i in 0..=n {
            for k in i..=n {
                if x[i][k] {
                    for j in k..=n {
                        if y[k][j] {
                            out[i][j] = true;
                        }
                    }
                }
            }
        }
        out
    };
    let closure = |s: &Vec<Vec<bool>>| {
        let mut out = identity();
        // Kleene closure: iterate until fixpoint (at most n compositions matter)
        loop {
            let next = compose(&out, s);
            let mut changed = false;
            let mut merged = out.clone();
            for i in 0..=n {
                for j in 0..=n {
                    if next[i][j] && !merged[i][j] {
                        merged[i][j] = true;
                        changed = true;
                    }
                }
            }
            out = merged;
            if !changed {
                break;
            }
        }
        out
    };
    match node {
        PatternAst::Epsilon => identity(),
        PatternAst::Literal(l) => {
            let mut s = empty();
            for i in 0..n {
                if w[i] == *l {
                    s[i][i + 1] = true;
                }
            }
            s
        }
        PatternAst::Class(ls) => {
            let mut s = empty();
            for i in 0..n {
                if ls.contains(&w[i]) {
                    s[i][i + 1] = true;
                }
            }
            s
        }
        PatternAst::Concat(parts) => {
            let mut acc = identity();
            for p in parts {
                acc = compose(&acc, &range_set(p, w));
            }
            acc
        }
        PatternAst::Alternation(parts) => {
            let mut acc = empty();
            for p in parts {
                let s = range_set(p, w);
                for i in 0..=n {
                    for j in 0..=n {
                        acc[i][j] |= s[i][j];
                    }
                }
            }
            acc
        }
        PatternAst::Star(p) => closure(&range_set(p, w)),
        PatternAst::Repeat(p, min, max) => {
            let s = range_set(p, w);
            let mut acc = identity();
            for _ in 0..*min {
                acc = compose(&acc, &s);
            }
            match max {
                None => compose(&acc, &closure(&s)),
                Some(mx) => {
                    // acc * (eps | s)^(mx-min)
                    let mut opt = s.clone();
                    for i in 0..=n {
                        opt[i][i] = true;
                    }
                    for _ in *min..*mx {
                        acc = compose(&acc, &opt);
                    }
                    acc
                }
            }
        }
    }
}
