//! Traces in Foata-normal-form representation.
//!
//! A trace is stored as its unique Foata block sequence: nonempty independent
//! sets where every block depends on its predecessor. Extended words
//! additionally permit trailing empty blocks and serve as padding for
//! convolutions.

use crate::alphabet::{DependenceAlphabet, LetterSet};
use crate::error::{Error, Result};

/// A trace, canonically represented by its Foata block sequence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Trace {
    blocks: Vec<LetterSet>,
}

impl Trace {
    pub fn empty() -> Self {
        Trace { blocks: Vec::new() }
    }

    /// The Foata normal form of a word, via left-fold insertion: each letter
    /// lands right after the last block containing a dependent letter.
    pub fn from_word(word: &[usize], alpha: &DependenceAlphabet) -> Self {
        let mut t = Trace::empty();
        for &a in word {
            t.push_letter(a, alpha);
        }
        t
    }

    pub fn parse(word: &str, alpha: &DependenceAlphabet) -> Result<Self> {
        Ok(Trace::from_word(&alpha.parse_word(word)?, alpha))
    }

    /// Builds a trace from blocks, checking the Foata invariants.
    pub fn from_blocks(blocks: Vec<LetterSet>, alpha: &DependenceAlphabet) -> Result<Self> {
        for (i, &b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::Precondition("empty Foata block".into()));
            }
            if !alpha.is_independent_set(b) {
                return Err(Error::Precondition("block is not independent".into()));
            }
            if i > 0 && !b.is_subset_of(alpha.dep_of_set(blocks[i - 1])) {
                return Err(Error::Precondition("Foata condition violated".into()));
            }
        }
        Ok(Trace { blocks })
    }

    pub fn blocks(&self) -> &[LetterSet] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Total letter count.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn push_letter(&mut self, a: usize, alpha: &DependenceAlphabet) {
        let dep = alpha.dep_of(a);
        // Last block holding a letter dependent on `a`.
        let anchor = self
            .blocks
            .iter()
            .rposition(|b| !b.intersect(dep).is_empty());
        let target = anchor.map_or(0, |i| i + 1);
        if target == self.blocks.len() {
            self.blocks.push(LetterSet::singleton(a));
        } else {
            self.blocks[target].insert(a);
        }
    }

    pub fn concat(&self, other: &Trace, alpha: &DependenceAlphabet) -> Trace {
        let mut t = self.clone();
        for &b in &other.blocks {
            for a in b.iter() {
                t.push_letter(a, alpha);
            }
        }
        t
    }

    /// Canonical linearization: blocks in order, letters ascending per block.
    pub fn linearize(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| b.iter()).collect()
    }

    pub fn letter_multiset(&self) -> Vec<usize> {
        let mut v = self.linearize();
        v.sort_unstable();
        v
    }

    /// Removes a maximal occurrence of `a`, i.e. returns x with
    /// self = x · [a], if one exists.
    pub fn pop_letter(&self, a: usize, alpha: &DependenceAlphabet) -> Option<Trace> {
        let last = self.blocks.iter().rposition(|b| b.contains(a))?;
        let dep = alpha.dep_of(a);
        if self.blocks[last + 1..]
            .iter()
            .any(|b| !b.intersect(dep).is_empty())
        {
            return None;
        }
        let mut word = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let mut b = *b;
            if i == last {
                b.remove(a);
            }
            word.extend(b.iter());
        }
        Some(Trace::from_word(&word, alpha))
    }

    pub fn show(&self, alpha: &DependenceAlphabet) -> String {
        if self.blocks.is_empty() {
            return "1".to_string();
        }
        self.blocks.iter().map(|&b| alpha.show_set(b)).collect()
    }
}

/// A word in extended Foata normal form: like a Foata block sequence but
/// empty blocks may occur as a trailing run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EfnfWord {
    blocks: Vec<LetterSet>,
}

impl EfnfWord {
    pub fn new(blocks: Vec<LetterSet>, alpha: &DependenceAlphabet) -> Result<Self> {
        for (i, &b) in blocks.iter().enumerate() {
            if !alpha.is_independent_set(b) {
                return Err(Error::Precondition("block is not independent".into()));
            }
            if i > 0 && !b.is_subset_of(alpha.dep_of_set(blocks[i - 1])) {
                return Err(Error::Precondition(
                    "extended Foata condition violated".into(),
                ));
            }
        }
        Ok(EfnfWord { blocks })
    }

    pub fn from_trace(t: &Trace) -> Self {
        EfnfWord {
            blocks: t.blocks().to_vec(),
        }
    }

    pub fn blocks(&self) -> &[LetterSet] {
        &self.blocks
    }

    pub fn to_trace(&self, alpha: &DependenceAlphabet) -> Trace {
        let word: Vec<usize> = self.blocks.iter().flat_map(|b| b.iter()).collect();
        Trace::from_word(&word, alpha)
    }

    /// All factorization certificates (B_1..B_n): subsets B_i ⊆ A_i such that
    /// the residues (A_i \ B_i) again form an extended Foata word and every
    /// B_i is independent from all later residues. Each tuple determines one
    /// factorization [W] = x·y with x the residues and y the B-word.
    pub fn factorizations(&self, alpha: &DependenceAlphabet) -> Vec<Vec<LetterSet>> {
        let mut out = Vec::new();
        let mut chosen: Vec<LetterSet> = Vec::new();
        self.factorize_rec(alpha, 0, None, LetterSet::EMPTY, &mut chosen, &mut out);
        out
    }

    fn factorize_rec(
        &self,
        alpha: &DependenceAlphabet,
        pos: usize,
        prev_residue: Option<LetterSet>,
        taken: LetterSet,
        chosen: &mut Vec<LetterSet>,
        out: &mut Vec<Vec<LetterSet>>,
    ) {
        if pos == self.blocks.len() {
            out.push(chosen.clone());
            return;
        }
        let block = self.blocks[pos];
        for b in block.subsets() {
            let residue = block.minus(b);
            // (a) residues form an extended Foata word.
            if let Some(prev) = prev_residue {
                if !residue.is_subset_of(alpha.dep_of_set(prev)) {
                    continue;
                }
            }
            // (b) earlier B's are independent from this residue.
            if !alpha.sets_independent(taken, residue) {
                continue;
            }
            chosen.push(b);
            self.factorize_rec(
                alpha,
                pos + 1,
                Some(residue),
                taken.union(b),
                chosen,
                out,
            );
            chosen.pop();
        }
    }
}
