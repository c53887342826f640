//! Dependence alphabets: a finite ordered letter set with a reflexive,
//! symmetric dependence relation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A set of letters, represented as a bitmask over the alphabet's letter
/// indices. Alphabets are small (single-token letters), so 32 bits suffice.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct LetterSet(pub u32);

impl LetterSet {
    pub const EMPTY: LetterSet = LetterSet(0);

    pub fn singleton(letter: usize) -> Self {
        LetterSet(1 << letter)
    }

    pub fn from_letters(letters: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = 0;
        for l in letters {
            mask |= 1 << l;
        }
        LetterSet(mask)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, letter: usize) -> bool {
        self.0 & (1 << letter) != 0
    }

    pub fn insert(&mut self, letter: usize) {
        self.0 |= 1 << letter;
    }

    pub fn remove(&mut self, letter: usize) {
        self.0 &= !(1 << letter);
    }

    pub fn union(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 | other.0)
    }

    pub fn intersect(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 & other.0)
    }

    pub fn minus(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: LetterSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: LetterSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Iterate letter indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut mask = self.0;
        std::iter::from_fn(move || {
            if mask == 0 {
                None
            } else {
                let i = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                Some(i)
            }
        })
    }

    /// All subsets of `self`, ascending by mask value.
    pub fn subsets(self) -> Vec<LetterSet> {
        let full = self.0;
        let mut out = Vec::with_capacity(1 << self.len());
        let mut sub: u32 = 0;
        loop {
            out.push(LetterSet(sub));
            if sub == full {
                break;
            }
            sub = (sub.wrapping_sub(full)) & full;
        }
        out.sort();
        out
    }
}

impl fmt::Debug for LetterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LetterSet({:b})", self.0)
    }
}

/// A dependence alphabet: ordered letters plus a reflexive symmetric
/// dependence relation, stored as one dependence mask per letter.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DependenceAlphabet {
    names: Vec<String>,
    dep: Vec<LetterSet>,
}

impl DependenceAlphabet {
    /// Builds an alphabet from letter names and dependence pairs. The
    /// reflexive and symmetric closure is applied.
    pub fn new(names: Vec<String>, pairs: &[(usize, usize)]) -> Self {
        assert!(names.len() <= 32, "alphabet too large");
        let n = names.len();
        let mut dep = vec![LetterSet::EMPTY; n];
        for (i, d) in dep.iter_mut().enumerate() {
            d.insert(i);
        }
        for &(a, b) in pairs {
            dep[a].insert(b);
            dep[b].insert(a);
        }
        DependenceAlphabet { names, dep }
    }

    pub fn from_chars(letters: &str, pairs: &[(char, char)]) -> Self {
        let names: Vec<String> = letters.chars().map(|c| c.to_string()).collect();
        let idx = |c: char| {
            names
                .iter()
                .position(|n| n == &c.to_string())
                .expect("letter")
        };
        let pairs: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (idx(a), idx(b))).collect();
        DependenceAlphabet::new(names, &pairs)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, letter: usize) -> &str {
        &self.names[letter]
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownLetter(name.to_string()))
    }

    /// Parses a word written as a sequence of single-character letters.
    pub fn parse_word(&self, word: &str) -> Result<Vec<usize>> {
        word.chars().map(|c| self.index(&c.to_string())).collect()
    }

    pub fn all_letters(&self) -> LetterSet {
        LetterSet((1u64 << self.len()).wrapping_sub(1) as u32)
    }

    /// The set D(a) of letters dependent on `a` (includes `a` itself).
    pub fn dep_of(&self, letter: usize) -> LetterSet {
        self.dep[letter]
    }

    /// D(B): letters dependent on some letter of `set`.
    pub fn dep_of_set(&self, set: LetterSet) -> LetterSet {
        set.iter()
            .fold(LetterSet::EMPTY, |acc, l| acc.union(self.dep[l]))
    }

    pub fn dependent(&self, a: usize, b: usize) -> bool {
        self.dep[a].contains(b)
    }

    pub fn independent(&self, a: usize, b: usize) -> bool {
        !self.dependent(a, b)
    }

    /// X ∥ Y: every letter of `x` is independent from every letter of `y`.
    pub fn sets_independent(&self, x: LetterSet, y: LetterSet) -> bool {
        x.iter().all(|l| self.dep[l].is_disjoint(y))
    }

    /// Is every pair of distinct letters in `set` independent?
    pub fn is_independent_set(&self, set: LetterSet) -> bool {
        set.iter()
            .all(|l| self.dep[l].intersect(set) == LetterSet::singleton(l))
    }

    /// Connectivity of the graph (S, D ∩ S²). The empty set and singletons
    /// are connected.
    pub fn connected(&self, set: LetterSet) -> bool {
        let Some(start) = set.iter().next() else {
            return true;
        };
        let mut seen = LetterSet::singleton(start);
        loop {
            let grown = seen
                .iter()
                .fold(seen, |acc, l| acc.union(self.dep[l].intersect(set)));
            if grown == seen {
                break;
            }
            seen = grown;
        }
        seen == set
    }

    /// The twin class {b : D(a) = D(b)} of `a`.
    pub fn twin_class(&self, a: usize) -> LetterSet {
        LetterSet::from_letters((0..self.len()).filter(|&b| self.dep[b] == self.dep[a]))
    }

    /// All twin classes, ordered by their least letter.
    pub fn twin_classes(&self) -> Vec<LetterSet> {
        let mut classes = Vec::new();
        let mut seen = LetterSet::EMPTY;
        for a in 0..self.len() {
            if !seen.contains(a) {
                let c = self.twin_class(a);
                seen = seen.union(c);
                classes.push(c);
            }
        }
        classes
    }

    pub fn twin_index(&self) -> usize {
        self.twin_classes().len()
    }

    /// All independent subsets of the alphabet, ascending by mask value.
    /// The empty set comes first.
    pub fn independent_sets(&self) -> Vec<LetterSet> {
        self.all_letters()
            .subsets()
            .into_iter()
            .filter(|&s| self.is_independent_set(s))
            .collect()
    }

    /// Renders a letter set like `{a,b}`.
    pub fn show_set(&self, set: LetterSet) -> String {
        let inner: Vec<&str> = set.iter().map(|l| self.name(l)).collect();
        format!("{{{}}}", inner.join(","))
    }

    pub fn show_word(&self, word: &[usize]) -> String {
        word.iter().map(|&l| self.name(l)).collect()
    }
}
