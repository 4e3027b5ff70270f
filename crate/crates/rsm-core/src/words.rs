//! Alphabets and finite past words.
//!
//! A [`Word`] stores a finite past most-recent-first: position `0` holds
//! `ω₋₁`, position `j` holds `ω₋(j+1)`. With this orientation the `n`-past
//! of a longer past is simply its length-`n` prefix, which is what every
//! table lookup in the crate does.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Finite ordered alphabet. Symbols are addressed by index; labels are
/// carried for rendering and file formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Unsupported(String::from("empty alphabet")));
        }
        for (i, a) in labels.iter().enumerate() {
            for b in labels.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::Unsupported(alloc::format!(
                        "duplicate alphabet label `{a}`"
                    )));
                }
            }
        }
        Ok(Alphabet { labels })
    }

    /// Alphabet `{"0", "1", ..., "size-1"}`.
    pub fn indexed(size: usize) -> Self {
        let labels = (0..size).map(|i| alloc::format!("{i}")).collect();
        Alphabet { labels }
    }

    /// Binary alphabet `{"0", "1"}`.
    pub fn binary() -> Self {
        Alphabet::indexed(2)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn check_symbol(&self, index: usize) -> Result<()> {
        if index < self.size() {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                index,
                size: self.size(),
            })
        }
    }

    /// All words of a given length, lexicographic by symbol index.
    pub fn words(&self, len: usize) -> WordIter<'_> {
        WordIter {
            alphabet: self,
            next: Some(Word::from_symbols(alloc::vec![0u16; len])),
        }
    }
}

/// A finite past, most-recent-first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_symbols(symbols: Vec<u16>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u16] {
        &self.0
    }

    /// `ω₋(j+1)`; position 0 is the most recent symbol.
    pub fn symbol(&self, position: usize) -> u16 {
        self.0[position]
    }

    /// The `n`-past: the `n` most recent symbols.
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n].to_vec())
    }

    pub fn prefix_checked(&self, n: usize) -> Result<Word> {
        if self.len() < n {
            Err(Error::WordTooShort {
                needed: n,
                got: self.len(),
            })
        } else {
            Ok(self.prefix(n))
        }
    }

    /// Prepend a newer symbol: the result's most recent symbol is `sym`.
    pub fn extend_newer(&self, sym: u16) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(sym);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// Append an older symbol at the far end of the past.
    pub fn extend_older(&self, sym: u16) -> Word {
        let mut v = self.0.clone();
        v.push(sym);
        Word(v)
    }

    /// Drop the most recent symbol.
    pub fn drop_newest(&self) -> Word {
        Word(self.0[1..].to_vec())
    }

    /// Drop the oldest symbol.
    pub fn drop_oldest(&self) -> Word {
        Word(self.0[..self.len() - 1].to_vec())
    }

    /// Render with the alphabet's labels, most recent first, comma-separated.
    pub fn render(&self, alphabet: &Alphabet) -> String {
        let mut out = String::new();
        for (i, &s) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(alphabet.label(s as usize));
        }
        out
    }

    /// Parse a comma-separated label string (inverse of [`Word::render`]).
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Word> {
        if text.is_empty() {
            return Ok(Word::empty());
        }
        let mut symbols = Vec::new();
        for part in text.split(',') {
            match alphabet.index_of(part) {
                Some(i) => symbols.push(i as u16),
                None => {
                    return Err(Error::Unsupported(alloc::format!(
                        "unknown symbol label `{part}`"
                    )))
                }
            }
        }
        Ok(Word(symbols))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

/// Iterator over all words of a fixed length (lexicographic).
pub struct WordIter<'a> {
    alphabet: &'a Alphabet,
    next: Option<Word>,
}

impl Iterator for WordIter<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let current = self.next.take()?;
        // Compute the successor in place.
        let size = self.alphabet.size() as u16;
        let mut succ = current.clone();
        let mut pos = succ.0.len();
        loop {
            if pos == 0 {
                self.next = None;
                break;
            }
            pos -= 1;
            if succ.0[pos] + 1 < size {
                succ.0[pos] += 1;
                for s in &mut succ.0[pos + 1..] {
                    *s = 0;
                }
                self.next = Some(succ);
                break;
            }
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation() {
        // Word (ω₋₁, ω₋₂, ω₋₃) = (1, 0, 1): prefix(2) is the 2-past.
        let w = Word::from_symbols(vec![1, 0, 1]);
        assert_eq!(w.prefix(2), Word::from_symbols(vec![1, 0]));
        assert_eq!(w.extend_newer(0).symbols(), &[0, 1, 0, 1]);
        assert_eq!(w.extend_older(0).symbols(), &[1, 0, 1, 0]);
        assert_eq!(w.drop_newest().symbols(), &[0, 1]);
        assert_eq!(w.drop_oldest().symbols(), &[1, 0]);
    }

    #[test]
    fn enumeration_counts() {
        let a = Alphabet::indexed(3);
        assert_eq!(a.words(0).count(), 1);
        assert_eq!(a.words(2).count(), 9);
        let all: Vec<Word> = a.words(1).collect();
        assert_eq!(all[0].symbols(), &[0]);
        assert_eq!(all[2].symbols(), &[2]);
    }

    #[test]
    fn render_parse_round_trip() {
        let a = Alphabet::indexed(4);
        let w = Word::from_symbols(vec![3, 0, 2]);
        let s = w.render(&a);
        assert_eq!(s, "3,0,2");
        assert_eq!(Word::parse(&s, &a).unwrap(), w);
        assert_eq!(Word::parse("", &a).unwrap(), Word::empty());
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(Alphabet::new(vec!["a".into(), "a".into()]).is_err());
    }
}
