use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Letters are stored as indices into an ordered alphabet of at most 64
/// characters (character classes are letter bitmasks during NFA building).
pub type Letter = u8;
pub type Word = Vec<Letter>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    chars: Vec<char>,
    index: BTreeMap<char, Letter>,
}

impl Alphabet {
    pub fn new(chars: &str) -> Result<Self> {
        let list: Vec<char> = chars.chars().filter(|c| !c.is_whitespace()).collect();
        if list.is_empty() {
            return Err(Error::Input("empty alphabet".into()));
        }
        if list.len() > 64 {
            return Err(Error::Input("alphabet larger than 64 letters".into()));
        }
        let mut index = BTreeMap::new();
        for (i, &c) in list.iter().enumerate() {
            if index.insert(c, i as Letter).is_some() {
                return Err(Error::Input(format!("duplicate letter '{c}' in alphabet")));
            }
        }
        Ok(Alphabet { chars: list, index })
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn letter(&self, c: char) -> Option<Letter> {
        self.index.get(&c).copied()
    }

    pub fn char(&self, l: Letter) -> char {
        self.chars[l as usize]
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.chars.len()).map(|i| i as Letter)
    }

    pub fn encode(&self, text: &str) -> Result<Word> {
        text.chars()
            .map(|c| {
                self.letter(c)
                    .ok_or_else(|| Error::Input(format!("letter '{c}' outside alphabet")))
            })
            .collect()
    }

    pub fn decode(&self, word: &[Letter]) -> String {
        word.iter().map(|&l| self.char(l)).collect()
    }

    /// All words of the given length, lexicographic in letter order.
    pub fn words(&self, len: usize) -> WordsIter<'_> {
        WordsIter { alphabet: self, current: vec![0; len], done: false }
    }
}

pub struct WordsIter<'a> {
    alphabet: &'a Alphabet,
    current: Word,
    done: bool,
}

impl Iterator for WordsIter<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.alphabet.len() as Letter;
        let mut i = self.current.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] < k {
                break;
            }
            self.current[i] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode() {
        let a = Alphabet::new("ACGT").unwrap();
        let w = a.encode("GATTACA").unwrap();
        assert_eq!(a.decode(&w), "GATTACA");
        assert!(a.encode("GATTAXA").is_err());
    }

    #[test]
    fn word_enumeration() {
        let a = Alphabet::new("AB").unwrap();
        let all: Vec<String> = a.words(2).map(|w| a.decode(&w)).collect();
        assert_eq!(all, vec!["AA", "AB", "BA", "BB"]);
        assert_eq!(a.words(0).count(), 1);
        assert_eq!(a.words(3).count(), 8);
    }

    #[test]
    fn rejects_duplicates() {
        assert!(Alphabet::new("AA").is_err());
        assert!(Alphabet::new("").is_err());
    }
}
