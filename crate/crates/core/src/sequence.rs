//! Symbols, masked outputs and processing orders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symbol of a finite alphabet, `0..size`.
pub type Symbol = u8;

/// Textual marker of an erased position.
pub const ERASURE_CHAR: char = '*';

const SYMBOL_CHARS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Largest alphabet that has a single-character text encoding.
pub const MAX_TEXT_ALPHABET: usize = SYMBOL_CHARS.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet { size: 2 };

    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::input(format!("alphabet size must be >= 2, got {size}")));
        }
        if size > Symbol::MAX as usize + 1 {
            return Err(Error::input(format!("alphabet size {size} exceeds symbol range")));
        }
        Ok(Alphabet { size })
    }

    pub fn size(self) -> usize {
        self.size
    }

    pub fn contains(self, s: Symbol) -> bool {
        (s as usize) < self.size
    }
}

pub fn symbol_to_char(s: Symbol) -> char {
    SYMBOL_CHARS
        .get(s as usize)
        .map(|&c| c as char)
        .unwrap_or('?')
}

pub fn char_to_symbol(c: char) -> Option<Symbol> {
    let c = c.to_ascii_lowercase();
    SYMBOL_CHARS
        .iter()
        .position(|&b| b as char == c)
        .map(|p| p as Symbol)
}

/// Parses a plain symbol string such as `01101`.
pub fn parse_symbols(text: &str) -> Result<Vec<Symbol>> {
    text.trim()
        .chars()
        .map(|c| char_to_symbol(c).ok_or_else(|| Error::input(format!("bad symbol character {c:?}"))))
        .collect()
}

pub fn format_symbols(x: &[Symbol]) -> String {
    x.iter().map(|&s| symbol_to_char(s)).collect()
}

/// Mechanism output over the alphabet extended with the erasure symbol.
/// `None` marks an erasure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MaskedSequence(pub Vec<Option<Symbol>>);

impl MaskedSequence {
    pub fn all_erased(n: usize) -> Self {
        MaskedSequence(vec![None; n])
    }

    pub fn released(x: &[Symbol]) -> Self {
        MaskedSequence(x.iter().map(|&s| Some(s)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of erased positions, e(Y).
    pub fn erasures(&self) -> usize {
        self.0.iter().filter(|s| s.is_none()).count()
    }

    pub fn is_erased(&self, i: usize) -> bool {
        self.0[i].is_none()
    }

    /// Every released symbol equals the source symbol at the same position.
    pub fn is_faithful_to(&self, x: &[Symbol]) -> bool {
        self.0.len() == x.len()
            && self
                .0
                .iter()
                .zip(x)
                .all(|(y, &xi)| y.is_none_or(|s| s == xi))
    }
}

impl serde::Serialize for MaskedSequence {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl fmt::Display for MaskedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in &self.0 {
            let c = match y {
                Some(s) => symbol_to_char(*s),
                None => ERASURE_CHAR,
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for MaskedSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| {
                if c == ERASURE_CHAR {
                    Ok(None)
                } else {
                    char_to_symbol(c)
                        .map(Some)
                        .ok_or_else(|| Error::input(format!("bad masked character {c:?}")))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(MaskedSequence)
    }
}

/// Permutation of `0..n` giving the order in which positions are processed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcessingOrder {
    perm: Vec<usize>,
}

impl ProcessingOrder {
    pub fn linear(n: usize) -> Self {
        ProcessingOrder {
            perm: (0..n).collect(),
        }
    }

    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::input(format!("{perm:?} is not a permutation of 0..{n}")));
            }
        }
        Ok(ProcessingOrder { perm })
    }

    /// Builds an order from 1-based indices as used in files and on the command line.
    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.contains(&0) {
            return Err(Error::input("order indices are 1-based"));
        }
        Self::new(perm.iter().map(|&p| p - 1).collect())
    }

    pub fn positions(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// Sorted, de-duplicated set of 0-based sensitive positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SensitiveSet {
    positions: Vec<usize>,
}

impl SensitiveSet {
    pub fn new(mut positions: Vec<usize>, n: usize) -> Result<Self> {
        positions.sort_unstable();
        positions.dedup();
        if let Some(&p) = positions.iter().find(|&&p| p >= n) {
            return Err(Error::input(format!("sensitive index {} outside 1..={n}", p + 1)));
        }
        Ok(SensitiveSet { positions })
    }

    pub fn from_one_based(positions: &[usize], n: usize) -> Result<Self> {
        if positions.contains(&0) {
            return Err(Error::input("sensitive indices are 1-based"));
        }
        Self::new(positions.iter().map(|&p| p - 1).collect(), n)
    }

    pub fn empty() -> Self {
        SensitiveSet::default()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.positions.binary_search(&i).is_ok()
    }

    /// Rank of `i` within the set, if present.
    pub fn rank(&self, i: usize) -> Option<usize> {
        self.positions.binary_search(&i).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_text_roundtrip() {
        let y: MaskedSequence = "*0*21".parse().unwrap();
        assert_eq!(y.0, vec![None, Some(0), None, Some(2), Some(1)]);
        assert_eq!(y.to_string(), "*0*21");
        assert_eq!(y.erasures(), 2);
        assert!(y.is_faithful_to(&[1, 0, 1, 2, 1]));
        assert!(!y.is_faithful_to(&[1, 1, 1, 2, 1]));
    }

    #[test]
    fn order_must_be_permutation() {
        assert!(ProcessingOrder::new(vec![0, 2, 1]).is_ok());
        assert!(ProcessingOrder::new(vec![0, 0, 1]).is_err());
        assert!(ProcessingOrder::new(vec![0, 3, 1]).is_err());
        assert_eq!(
            ProcessingOrder::from_one_based(&[2, 1]).unwrap().positions(),
            &[1, 0]
        );
    }

    #[test]
    fn sensitive_set_dedups_and_checks_range() {
        let k = SensitiveSet::from_one_based(&[3, 1, 3], 4).unwrap();
        assert_eq!(k.positions(), &[0, 2]);
        assert_eq!(k.rank(2), Some(1));
        assert!(SensitiveSet::from_one_based(&[5], 4).is_err());
    }

    #[test]
    fn alphabet_rejects_unary() {
        assert!(Alphabet::new(1).is_err());
        assert_eq!(Alphabet::new(3).unwrap().size(), 3);
    }
}
