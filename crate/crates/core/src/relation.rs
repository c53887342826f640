//! The algebra of fnf-automatic trace relations.
//!
//! A k-ary trace relation is represented by a word automaton over k-tuples of
//! Foata blocks: a tuple of traces belongs to the relation iff the convolution
//! of their Foata normal forms (padded with empty blocks to equal length) is
//! accepted. Relations are kept in a pad-normalized canonical minimal form,
//! so equal relations have structurally equal automata.

use crate::alphabet::LetterSet;
use crate::error::{Error, Result};
use crate::nfa::Nfa;
use crate::trace::Trace;
use crate::tracelang::{efnf_valid, BlockAlphabet, TraceClosedLang};
use std::collections::{HashMap, VecDeque};

/// The convolution of trace tuples: each track is the Foata normal form of
/// its trace, padded with ∅ to the common maximum length; columns become
/// block-tuple symbols.
pub fn convolve(traces: &[Trace], blocks: &BlockAlphabet) -> Result<Vec<usize>> {
    let n = traces
        .iter()
        .map(|t| t.blocks().len())
        .max()
        .unwrap_or(0);
    (0..n)
        .map(|i| {
            let column: Vec<LetterSet> = traces
                .iter()
                .map(|t| t.blocks().get(i).copied().unwrap_or(LetterSet::EMPTY))
                .collect();
            blocks.tuple_index(&column)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FnfRelation {
    arity: usize,
    blocks: BlockAlphabet,
    auto: Nfa,
}

/// `(∅,…,∅)*`, the padding language.
fn pad_star(blocks: &BlockAlphabet, k: usize) -> Nfa {
    let mut n = Nfa::new(blocks.tuple_domain(k));
    let s = n.add_state();
    n.initial.insert(s);
    n.finals.insert(s);
    n.add_transition(s, 0, s);
    n
}

/// Pad normal form: strip the padding requirement via right quotient, re-pad
/// freely, restrict to valid convolutions, minimize canonically.
fn normalize(auto: &Nfa, blocks: &BlockAlphabet, k: usize) -> Result<Nfa> {
    let valid = efnf_valid(k, blocks);
    let quotiented = auto
        .intersect(&valid)?
        .right_quotient(&pad_star(blocks, k))?;
    let mut padded = quotiented.trim();
    let pad = padded.add_state();
    padded.transitions.insert((pad, 0, pad));
    for f in padded.finals.clone() {
        padded.transitions.insert((f, 0, pad));
    }
    padded.finals.insert(pad);
    Ok(padded.intersect(&valid)?.minimized())
}

impl FnfRelation {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn blocks(&self) -> &BlockAlphabet {
        &self.blocks
    }

    pub fn auto(&self) -> &Nfa {
        &self.auto
    }

    /// Wraps a raw automaton over block k-tuples, normalizing it.
    pub fn from_auto(blocks: &BlockAlphabet, arity: usize, auto: Nfa) -> Result<Self> {
        if auto.symbols != blocks.tuple_domain(arity) {
            return Err(Error::DomainMismatch(
                auto.symbols,
                blocks.tuple_domain(arity),
            ));
        }
        Ok(FnfRelation {
            arity,
            blocks: blocks.clone(),
            auto: normalize(&auto, blocks, arity)?,
        })
    }

    /// The empty k-ary relation.
    pub fn empty(blocks: &BlockAlphabet, arity: usize) -> Self {
        FnfRelation::from_auto(blocks, arity, Nfa::empty(blocks.tuple_domain(arity)))
            .expect("domain matches")
    }

    /// All of M^k.
    pub fn full(blocks: &BlockAlphabet, arity: usize) -> Self {
        FnfRelation::from_auto(blocks, arity, Nfa::universal(blocks.tuple_domain(arity)))
            .expect("domain matches")
    }

    /// The identity relation {(x,x)}.
    pub fn identity(blocks: &BlockAlphabet) -> Self {
        let mut n = Nfa::new(blocks.tuple_domain(2));
        let s = n.add_state();
        n.initial.insert(s);
        n.finals.insert(s);
        for i in 0..blocks.len() {
            let sym = blocks
                .tuple_index(&[blocks.set(i), blocks.set(i)])
                .expect("independent set");
            n.add_transition(s, sym, s);
        }
        FnfRelation::from_auto(blocks, 2, n).expect("domain matches")
    }

    /// The relation holding exactly one trace tuple.
    pub fn singleton(blocks: &BlockAlphabet, traces: &[Trace]) -> Result<Self> {
        let word = convolve(traces, blocks)?;
        FnfRelation::from_auto(
            blocks,
            traces.len(),
            Nfa::from_words(blocks.tuple_domain(traces.len()), &[word]),
        )
    }

    fn check_compatible(&self, other: &FnfRelation) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch(self.arity, other.arity));
        }
        if self.blocks != other.blocks {
            return Err(Error::Precondition("different alphabets".into()));
        }
        Ok(())
    }

    pub fn union(&self, other: &FnfRelation) -> Result<Self> {
        self.check_compatible(other)?;
        FnfRelation::from_auto(&self.blocks, self.arity, self.auto.union(&other.auto)?)
    }

    pub fn intersect(&self, other: &FnfRelation) -> Result<Self> {
        self.check_compatible(other)?;
        FnfRelation::from_auto(&self.blocks, self.arity, self.auto.intersect(&other.auto)?)
    }

    /// Complement relative to M^k.
    pub fn complement(&self) -> Self {
        let valid = efnf_valid(self.arity, &self.blocks);
        let c = valid
            .intersect(&self.auto.complement())
            .expect("same domain");
        FnfRelation::from_auto(&self.blocks, self.arity, c).expect("domain matches")
    }

    /// Reorders coordinates: position i of the result is coordinate
    /// `perm[i]` (0-based) of the original.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.arity {
            return Err(Error::ArityMismatch(perm.len(), self.arity));
        }
        let mut relabeled = Nfa::new(self.auto.symbols);
        relabeled.states = self.auto.states;
        relabeled.initial = self.auto.initial.clone();
        relabeled.finals = self.auto.finals.clone();
        for &(p, s, q) in &self.auto.transitions {
            let tuple = self.blocks.tuple_at(s, self.arity);
            let new: Vec<LetterSet> = (0..self.arity)
                .map(|i| {
                    *tuple
                        .get(perm[i])
                        .ok_or(Error::Precondition("permutation index out of range".into()))
                        .unwrap()
                })
                .collect();
            relabeled
                .transitions
                .insert((p, self.blocks.tuple_index(&new)?, q));
        }
        FnfRelation::from_auto(&self.blocks, self.arity, relabeled)
    }

    /// Reverses the coordinate order.
    pub fn invert(&self) -> Self {
        let perm: Vec<usize> = (0..self.arity).rev().collect();
        self.permute(&perm).expect("valid permutation")
    }

    /// Existential projection dropping coordinate `i` (1-based).
    pub fn project(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.arity || self.arity == 1 {
            return Err(Error::Precondition(format!("cannot project track {i}")));
        }
        let raw = raw_project(&self.auto, &self.blocks, self.arity, i - 1);
        FnfRelation::from_auto(&self.blocks, self.arity - 1, raw)
    }

    /// Adds a free coordinate at position `i` (1-based).
    pub fn cylindrify(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.arity + 1 {
            return Err(Error::Precondition(format!("cannot cylindrify at {i}")));
        }
        let raw = raw_cylindrify(&self.auto, &self.blocks, self.arity, i - 1);
        FnfRelation::from_auto(&self.blocks, self.arity + 1, raw)
    }

    /// Relational composition of two binary relations.
    pub fn compose(&self, other: &FnfRelation) -> Result<Self> {
        self.check_compatible(other)?;
        if self.arity != 2 {
            return Err(Error::ArityMismatch(self.arity, 2));
        }
        // (x,y) and (y,z) meet on the middle track; the three-track
        // intermediate stays raw, normalization happens after projection.
        let c1 = raw_cylindrify(&self.auto, &self.blocks, 2, 2);
        let c2 = raw_cylindrify(&other.auto, &self.blocks, 2, 0);
        let joined = c1.intersect(&c2)?;
        let raw = raw_project(&joined, &self.blocks, 3, 1);
        FnfRelation::from_auto(&self.blocks, 2, raw)
    }

    /// R · (K × L) = {(x1·y, x2·z) : (x1,x2) ∈ R, y ∈ [K], z ∈ [L]},
    /// via the reduction R·(K×L) = (R·(K×{1})) ∘ (Id·(L×{1}))⁻¹.
    pub fn product_with_recognizable(
        &self,
        k: &TraceClosedLang,
        l: &TraceClosedLang,
    ) -> Result<Self> {
        if self.arity != 2 {
            return Err(Error::ArityMismatch(self.arity, 2));
        }
        let left = FnfRelation::from_auto(
            &self.blocks,
            2,
            product_core(&self.auto, &k.lin, &self.blocks),
        )?;
        let id = FnfRelation::identity(&self.blocks);
        let right = FnfRelation::from_auto(
            &self.blocks,
            2,
            product_core(&id.auto, &l.lin, &self.blocks),
        )?;
        left.compose(&right.invert())
    }

    pub fn membership(&self, traces: &[Trace]) -> Result<bool> {
        if traces.len() != self.arity {
            return Err(Error::ArityMismatch(traces.len(), self.arity));
        }
        Ok(self.auto.accepts(&convolve(traces, &self.blocks)?))
    }

    pub fn is_empty(&self) -> bool {
        self.auto.is_empty_lang()
    }

    /// Relations are stored canonically, so equivalence is equality.
    pub fn is_equivalent(&self, other: &FnfRelation) -> bool {
        self.arity == other.arity && self.blocks == other.blocks && self.auto == other.auto
    }

    /// Some member tuple, length-lexicographically least by convolution.
    pub fn witness(&self) -> Option<Vec<Trace>> {
        let word = self.auto.shortest_accepted()?;
        let alpha = self.blocks.alpha();
        let mut tracks = vec![Vec::new(); self.arity];
        for &sym in &word {
            for (track, &b) in tracks.iter_mut().zip(&self.blocks.tuple_at(sym, self.arity)) {
                track.extend(b.iter());
            }
        }
        Some(
            tracks
                .into_iter()
                .map(|w| Trace::from_word(&w, alpha))
                .collect(),
        )
    }
}

fn raw_project(auto: &Nfa, blocks: &BlockAlphabet, k: usize, drop: usize) -> Nfa {
    let map: Vec<Vec<usize>> = (0..blocks.tuple_domain(k))
        .map(|s| {
            let mut tuple = blocks.tuple_at(s, k);
            tuple.remove(drop);
            vec![blocks.tuple_index(&tuple).expect("independent sets")]
        })
        .collect();
    auto.hom_image(&map, blocks.tuple_domain(k - 1))
}

fn raw_cylindrify(auto: &Nfa, blocks: &BlockAlphabet, k: usize, at: usize) -> Nfa {
    let map: Vec<Vec<usize>> = (0..blocks.tuple_domain(k + 1))
        .map(|s| {
            let mut tuple = blocks.tuple_at(s, k + 1);
            tuple.remove(at);
            vec![blocks.tuple_index(&tuple).expect("independent sets")]
        })
        .collect();
    auto.inv_hom_image(&map)
}

/// The automaton for R · (K × {1}) where `r` accepts L_R and `lin` is the
/// swap-closed word language of K.
///
/// States are quadruples (p1, p2, X1, X2): a state of `r`, a state of `lin`,
/// the K-letters consumed so far (they must stay independent of later
/// first-track residues), and the previous first-track residue (whose
/// dependence set must cover the next residue, keeping the residue track in
/// extended Foata normal form). A step on (A, C) splits A into a K-part B
/// read letterwise by `lin` and a residue A∖B read by `r`.
fn product_core(r: &Nfa, lin: &Nfa, blocks: &BlockAlphabet) -> Nfa {
    let alpha = blocks.alpha();
    let radj = {
        let mut adj: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for &(p, s, q) in &r.transitions {
            adj.entry((p, s)).or_default().push(q);
        }
        adj
    };
    let ladj = {
        let mut adj = vec![Vec::new(); lin.states];
        for &(p, s, q) in &lin.transitions {
            adj[p].push((s, q));
        }
        adj
    };
    let word_reach = |from: usize, word: &[usize]| -> Vec<usize> {
        let mut cur = vec![from];
        for &a in word {
            let mut next: Vec<usize> = Vec::new();
            for &p in &cur {
                for &(s, q) in &ladj[p] {
                    if s == a && !next.contains(&q) {
                        next.push(q);
                    }
                }
            }
            cur = next;
            if cur.is_empty() {
                break;
            }
        }
        cur
    };
    type Quad = (usize, usize, LetterSet, LetterSet);
    let all = alpha.all_letters();
    let mut out = Nfa::new(blocks.tuple_domain(2));
    let mut index: HashMap<Quad, usize> = HashMap::new();
    let mut queue: VecDeque<Quad> = VecDeque::new();
    for &i1 in &r.initial {
        for &i2 in &lin.initial {
            let key = (i1, i2, LetterSet::EMPTY, all);
            let id = out.add_state();
            index.insert(key, id);
            out.initial.insert(id);
            queue.push_back(key);
        }
    }
    while let Some((p1, p2, x1, x2)) = queue.pop_front() {
        let id = index[&(p1, p2, x1, x2)];
        if r.finals.contains(&p1) && lin.finals.contains(&p2) {
            out.finals.insert(id);
        }
        for ai in 0..blocks.len() {
            let a = blocks.set(ai);
            for b in a.subsets() {
                let residue = a.minus(b);
                if !alpha.sets_independent(x1, residue)
                    || !residue.is_subset_of(alpha.dep_of_set(x2))
                {
                    continue;
                }
                let targets2 = word_reach(p2, &b.iter().collect::<Vec<_>>());
                if targets2.is_empty() {
                    continue;
                }
                for ci in 0..blocks.len() {
                    let sym_in = blocks
                        .tuple_index(&[residue, blocks.set(ci)])
                        .expect("independent sets");
                    let Some(targets1) = radj.get(&(p1, sym_in)) else {
                        continue;
                    };
                    let sym_out = blocks
                        .tuple_index(&[a, blocks.set(ci)])
                        .expect("independent sets");
                    for &q1 in targets1 {
                        for &q2 in &targets2 {
                            let key = (q1, q2, x1.union(b), residue);
                            let nid = *index.entry(key).or_insert_with(|| {
                                queue.push_back(key);
                                out.states += 1;
                                out.states - 1
                            });
                            out.transitions.insert((id, sym_out, nid));
                        }
                    }
                }
            }
        }
    }
    if out.states == 0 {
        return Nfa::empty(blocks.tuple_domain(2));
    }
    out
}
