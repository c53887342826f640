//! Trace closures of regular languages and their Foata-block encodings.
//!
//! A regular language whose loops all have connected alphabets has a regular
//! trace closure. The closure is built compositionally from a rational
//! expression and certified afterwards: the result must contain the base
//! language and be closed under adjacent independent swaps. Those two facts
//! pin the language down exactly, since the construction only ever emits
//! words equivalent to base words.

use crate::alphabet::{DependenceAlphabet, LetterSet};
use crate::error::{Error, Result};
use crate::nfa::{EpsilonNfa, Nfa};
use std::collections::{BTreeSet, HashMap, VecDeque};

/// The independent subsets of an alphabet, indexed as automaton symbols.
/// Index 0 is always the empty block (the padding symbol). Tuples of blocks
/// are flattened big-endian into a single symbol domain of size `len^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAlphabet {
    alpha: DependenceAlphabet,
    sets: Vec<LetterSet>,
}

impl BlockAlphabet {
    pub fn new(alpha: &DependenceAlphabet) -> Self {
        BlockAlphabet {
            alpha: alpha.clone(),
            sets: alpha.independent_sets(),
        }
    }

    pub fn alpha(&self) -> &DependenceAlphabet {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn set(&self, index: usize) -> LetterSet {
        self.sets[index]
    }

    pub fn index(&self, set: LetterSet) -> Result<usize> {
        self.sets
            .binary_search(&set)
            .map_err(|_| Error::Precondition("not an independent set".into()))
    }

    pub fn tuple_domain(&self, k: usize) -> usize {
        self.sets.len().pow(k as u32)
    }

    pub fn tuple_index(&self, blocks: &[LetterSet]) -> Result<usize> {
        let mut idx = 0;
        for &b in blocks {
            idx = idx * self.sets.len() + self.index(b)?;
        }
        Ok(idx)
    }

    pub fn tuple_at(&self, mut index: usize, k: usize) -> Vec<LetterSet> {
        let mut out = vec![LetterSet::EMPTY; k];
        for i in (0..k).rev() {
            out[i] = self.sets[index % self.sets.len()];
            index /= self.sets.len();
        }
        out
    }

    pub fn show_tuple(&self, index: usize, k: usize) -> String {
        let parts: Vec<String> = self
            .tuple_at(index, k)
            .iter()
            .map(|&b| self.alpha.show_set(b))
            .collect();
        parts.join("|")
    }
}

/// Proof obligations discharged for a [`TraceClosedLang`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// Concurrent-instance cap that produced the certified automaton.
    pub cap: usize,
}

/// A regular language together with evidence that it is the trace closure of
/// its base language: `lin` contains `base` and is swap-closed.
#[derive(Clone, Debug)]
pub struct TraceClosedLang {
    pub lin: Nfa,
    pub base: Nfa,
    pub certificate: Certificate,
}

/// Is L(a) closed under swapping adjacent independent letters?
pub fn swap_closed(a: &Nfa, alpha: &DependenceAlphabet) -> bool {
    a.swap_image(alpha)
        .is_subset_of(a)
        .expect("same symbol domain")
}

/// Checks that every cycle of `a` has a connected letter alphabet. Returns a
/// witness cycle word on failure.
///
/// For each pair (X, Y) of disjoint nonempty mutually independent letter
/// sets, restrict to transitions labeled in X ∪ Y: a strongly connected
/// component containing both an X-transition and a Y-transition yields a
/// cycle whose alphabet splits into independent halves.
pub fn connected_loops(a: &Nfa, alpha: &DependenceAlphabet) -> Option<Vec<usize>> {
    let all = alpha.all_letters();
    for x in all.subsets() {
        if x.is_empty() {
            continue;
        }
        for y in all.minus(x).subsets() {
            if y.is_empty() || y.0 < x.0 || !alpha.sets_independent(x, y) {
                continue;
            }
            let label = x.union(y);
            let edges: Vec<(usize, usize, usize)> = a
                .transitions
                .iter()
                .copied()
                .filter(|&(_, s, _)| label.contains(s))
                .collect();
            let comp = scc(a.states, &edges);
            // Group internal edges by component.
            let mut touch: HashMap<usize, (Option<(usize, usize, usize)>, Option<(usize, usize, usize)>)> =
                HashMap::new();
            for &(p, s, q) in &edges {
                if comp[p] != comp[q] {
                    continue;
                }
                let e = touch.entry(comp[p]).or_default();
                if x.contains(s) {
                    e.0.get_or_insert((p, s, q));
                } else {
                    e.1.get_or_insert((p, s, q));
                }
            }
            for (c, (ex, ey)) in touch {
                if let (Some(ex), Some(ey)) = (ex, ey) {
                    return Some(witness_cycle(&edges, &comp, c, ex, ey));
                }
            }
        }
    }
    None
}

/// A concrete cycle word through two given edges of one component.
fn witness_cycle(
    edges: &[(usize, usize, usize)],
    comp: &[usize],
    c: usize,
    ex: (usize, usize, usize),
    ey: (usize, usize, usize),
) -> Vec<usize> {
    let path = |from: usize, to: usize| -> Vec<usize> {
        // BFS inside the component; returns the label word.
        let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            if p == to {
                break;
            }
            for &(u, s, v) in edges {
                if u == p && comp[v] == c && !prev.contains_key(&v) && v != from {
                    prev.insert(v, (u, s));
                    queue.push_back(v);
                }
            }
        }
        let mut word = Vec::new();
        let mut cur = to;
        while cur != from {
            let (u, s) = prev[&cur];
            word.push(s);
            cur = u;
        }
        word.reverse();
        word
    };
    let mut w = vec![ex.1];
    w.extend(path(ex.2, ey.0));
    w.push(ey.1);
    w.extend(path(ey.2, ex.0));
    w
}

/// Kosaraju strongly connected components over the given edges.
fn scc(states: usize, edges: &[(usize, usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); states];
    let mut radj = vec![Vec::new(); states];
    for &(p, _, q) in edges {
        adj[p].push(q);
        radj[q].push(p);
    }
    let mut order = Vec::with_capacity(states);
    let mut seen = vec![false; states];
    for s in 0..states {
        if seen[s] {
            continue;
        }
        // iterative post-order
        let mut stack = vec![(s, 0usize)];
        seen[s] = true;
        while let Some(&mut (p, ref mut i)) = stack.last_mut() {
            if *i < adj[p].len() {
                let q = adj[p][*i];
                *i += 1;
                if !seen[q] {
                    seen[q] = true;
                    stack.push((q, 0));
                }
            } else {
                order.push(p);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; states];
    let mut next = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = next;
        while let Some(p) = stack.pop() {
            for &q in &radj[p] {
                if comp[q] == usize::MAX {
                    comp[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    comp
}

#[derive(Clone, Debug)]
enum Regex {
    Empty,
    Eps,
    Letter(usize),
    Union(Box<Regex>, Box<Regex>),
    Concat(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
}

fn runion(a: Regex, b: Regex) -> Regex {
    match (a, b) {
        (Regex::Empty, r) | (r, Regex::Empty) => r,
        (a, b) => Regex::Union(Box::new(a), Box::new(b)),
    }
}

fn rconcat(a: Regex, b: Regex) -> Regex {
    match (a, b) {
        (Regex::Empty, _) | (_, Regex::Empty) => Regex::Empty,
        (Regex::Eps, r) | (r, Regex::Eps) => r,
        (a, b) => Regex::Concat(Box::new(a), Box::new(b)),
    }
}

fn rstar(a: Regex) -> Regex {
    match a {
        Regex::Empty | Regex::Eps => Regex::Eps,
        s @ Regex::Star(_) => s,
        a => Regex::Star(Box::new(a)),
    }
}

/// Rational expression by state elimination. Every starred subexpression
/// denotes loops of the automaton, so under the connected-loops precondition
/// all starred factors have connected alphabets.
fn to_regex(a: &Nfa) -> Regex {
    let a = a.trim();
    let n = a.states;
    let (src, snk) = (n, n + 1);
    let mut edge: HashMap<(usize, usize), Regex> = HashMap::new();
    let add = |edge: &mut HashMap<(usize, usize), Regex>, p: usize, q: usize, r: Regex| {
        let cur = edge.remove(&(p, q)).unwrap_or(Regex::Empty);
        edge.insert((p, q), runion(cur, r));
    };
    for &(p, s, q) in &a.transitions {
        add(&mut edge, p, q, Regex::Letter(s));
    }
    for &i in &a.initial {
        add(&mut edge, src, i, Regex::Eps);
    }
    for &f in &a.finals {
        add(&mut edge, f, snk, Regex::Eps);
    }
    for rip in 0..n {
        let lstar = rstar(edge.remove(&(rip, rip)).unwrap_or(Regex::Empty));
        let keys: Vec<(usize, usize)> = edge.keys().copied().collect();
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for k in keys {
            if k.1 == rip {
                ins.push((k.0, edge.remove(&k).unwrap()));
            } else if k.0 == rip {
                outs.push((k.1, edge.remove(&k).unwrap()));
            }
        }
        for (p, rin) in &ins {
            for (q, rout) in &outs {
                let r = rconcat(rconcat(rin.clone(), lstar.clone()), rout.clone());
                add(&mut edge, *p, *q, r);
            }
        }
    }
    edge.remove(&(src, snk)).unwrap_or(Regex::Empty)
}

/// Interleavings of L(a) and L(b) in which every a-letter is independent of
/// all b-letters consumed so far. This is exactly the closure of the
/// concatenation when both factors are already swap-closed.
///
/// The state tracks the dependence closure of the consumed letters rather
/// than the letters themselves: the gate `s` independent of every consumed
/// letter is exactly `s ∉ D(consumed)`, and coarser states collapse.
fn interleave_concat(a: &Nfa, b: &Nfa, alpha: &DependenceAlphabet) -> Nfa {
    let aadj: Vec<Vec<(usize, usize)>> = adjacency(a);
    let badj: Vec<Vec<(usize, usize)>> = adjacency(b);
    let mut out = Nfa::new(alpha.len());
    let mut index: HashMap<(usize, usize, LetterSet), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for &p in &a.initial {
        for &q in &b.initial {
            let key = (p, q, LetterSet::EMPTY);
            let id = out.add_state();
            index.insert(key, id);
            out.initial.insert(id);
            queue.push_back(key);
        }
    }
    while let Some((p, q, consumed)) = queue.pop_front() {
        let id = index[&(p, q, consumed)];
        if a.finals.contains(&p) && b.finals.contains(&q) {
            out.finals.insert(id);
        }
        let step = |key: (usize, usize, LetterSet),
                        sym: usize,
                        out: &mut Nfa,
                        index: &mut HashMap<(usize, usize, LetterSet), usize>,
                        queue: &mut VecDeque<(usize, usize, LetterSet)>| {
            let nid = *index.entry(key).or_insert_with(|| {
                queue.push_back(key);
                out.states += 1;
                out.states - 1
            });
            out.transitions.insert((id, sym, nid));
        };
        for &(s, q2) in &badj[q] {
            step(
                (p, q2, consumed.union(alpha.dep_of(s))),
                s,
                &mut out,
                &mut index,
                &mut queue,
            );
        }
        for &(s, p2) in &aadj[p] {
            if !consumed.contains(s) {
                step((p2, q, consumed), s, &mut out, &mut index, &mut queue);
            }
        }
    }
    out
}

fn adjacency(a: &Nfa) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); a.states];
    for &(p, s, q) in &a.transitions {
        adj[p].push((s, q));
    }
    adj
}

/// One concurrent copy of the starred factor, tagged with its consumed
/// alphabet; ghosts keep the consumed alphabet of retired copies alive as a
/// constraint on earlier factors.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Entry {
    Active(usize, LetterSet),
    Ghost(LetterSet),
}

impl Entry {
    fn consumed(&self) -> LetterSet {
        match *self {
            Entry::Active(_, c) | Entry::Ghost(c) => c,
        }
    }
}

/// Concurrent-instances automaton for the closure of L(inner)*, with at most
/// `cap` simultaneously active copies of `inner`.
///
/// The state is a list of instances ordered by trace-factor position. A
/// letter fed to an instance must be independent of everything consumed by
/// later-factor instances; a fresh instance may be inserted at any factor
/// position subject to the same gate. Instances retire in accepting states,
/// leaving a ghost so their alphabet keeps constraining earlier factors.
/// Sound for any cap; large enough caps make it complete, which the
/// certificate check establishes after the fact.
///
/// Three canonicalizations keep the state space small. Consumed sets are
/// stored as their dependence closure — the gate `a` independent of every
/// consumed letter is exactly `a ∉ D(consumed)`, so nothing finer matters.
/// A final instance none of whose moves pass its gate retires immediately:
/// keeping it active adds no behavior. An unfinished instance none of whose
/// ways to finish pass its gate is dead — gates only ever tighten — and the
/// whole state is dropped.
fn star_instances(inner: &Nfa, alpha: &DependenceAlphabet, cap: usize) -> Nfa {
    let adj = adjacency(inner);
    // Can `s` still reach a final state using only letters outside `blocked`?
    let can_finish = |s: usize, blocked: LetterSet| -> bool {
        let mut seen = vec![false; inner.states];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(p) = stack.pop() {
            if inner.finals.contains(&p) {
                return true;
            }
            for &(a, q) in &adj[p] {
                if !blocked.contains(a) && !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        false
    };
    // Canonical form, or None for a dead state.
    let canonical = |v: Vec<Entry>| -> Option<Vec<Entry>> {
        let mut rev: Vec<Entry> = Vec::with_capacity(v.len());
        let mut suffix = LetterSet::EMPTY;
        for e in v.into_iter().rev() {
            let e = match e {
                Entry::Active(s, c) => {
                    if !can_finish(s, suffix) {
                        return None;
                    }
                    let stuck = adj[s].iter().all(|&(a, _)| suffix.contains(a));
                    if stuck && inner.finals.contains(&s) {
                        Entry::Ghost(c)
                    } else {
                        Entry::Active(s, c)
                    }
                }
                g => g,
            };
            suffix = suffix.union(e.consumed());
            match (rev.last_mut(), e) {
                // merge adjacent ghosts: their sets address the same positions
                (Some(Entry::Ghost(g)), Entry::Ghost(c)) => *g = g.union(c),
                (_, e) => rev.push(e),
            }
        }
        rev.reverse();
        Some(rev)
    };

    let mut enfa = EpsilonNfa::new(alpha.len());
    let mut index: HashMap<Vec<Entry>, usize> = HashMap::new();
    let start: Vec<Entry> = Vec::new();
    index.insert(start.clone(), enfa.add_state());
    enfa.initial.insert(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let id = index[&v];
        let actives = v
            .iter()
            .filter(|e| matches!(e, Entry::Active(..)))
            .count();
        if v.iter().all(|e| match e {
            Entry::Active(s, _) => inner.finals.contains(s),
            Entry::Ghost(_) => true,
        }) {
            enfa.finals.insert(id);
        }
        // suffix[k] = everything consumed at factor positions ≥ k
        let mut suffix = vec![LetterSet::EMPTY; v.len() + 1];
        for k in (0..v.len()).rev() {
            suffix[k] = suffix[k + 1].union(v[k].consumed());
        }
        let intern = |key: Option<Vec<Entry>>,
                          enfa: &mut EpsilonNfa,
                          index: &mut HashMap<Vec<Entry>, usize>,
                          queue: &mut VecDeque<Vec<Entry>>| {
            let key = key?;
            Some(*index.entry(key.clone()).or_insert_with(|| {
                queue.push_back(key);
                enfa.add_state()
            }))
        };
        for k in 0..v.len() {
            match v[k] {
                Entry::Active(s, c) => {
                    // feed instance k
                    for &(a, s2) in &adj[s] {
                        if !suffix[k + 1].contains(a) {
                            let mut v2 = v.clone();
                            v2[k] = Entry::Active(s2, c.union(alpha.dep_of(a)));
                            if let Some(nid) =
                                intern(canonical(v2), &mut enfa, &mut index, &mut queue)
                            {
                                enfa.transitions.insert((id, a, nid));
                            }
                        }
                    }
                    // retire instance k
                    if inner.finals.contains(&s) {
                        let mut v2 = v.clone();
                        v2[k] = Entry::Ghost(c);
                        if let Some(nid) =
                            intern(canonical(v2), &mut enfa, &mut index, &mut queue)
                        {
                            enfa.eps.insert((id, nid));
                        }
                    }
                }
                Entry::Ghost(_) => {}
            }
        }
        if actives < cap {
            // start a fresh instance at any factor position
            for k in 0..=v.len() {
                for &i in &inner.initial {
                    for &(a, s2) in &adj[i] {
                        if !suffix[k].contains(a) {
                            let mut v2 = v.clone();
                            v2.insert(k, Entry::Active(s2, alpha.dep_of(a)));
                            if let Some(nid) =
                                intern(canonical(v2), &mut enfa, &mut index, &mut queue)
                            {
                                enfa.transitions.insert((id, a, nid));
                            }
                        }
                    }
                }
            }
        }
    }
    enfa.eliminate()
}

fn closure_of(r: &Regex, alpha: &DependenceAlphabet, cap: usize) -> Nfa {
    match r {
        Regex::Empty => Nfa::empty(alpha.len()),
        Regex::Eps => Nfa::from_words(alpha.len(), &[vec![]]),
        Regex::Letter(a) => Nfa::from_words(alpha.len(), &[vec![*a]]),
        Regex::Union(x, y) => closure_of(x, alpha, cap)
            .union(&closure_of(y, alpha, cap))
            .expect("same domain")
            .minimized(),
        Regex::Concat(x, y) => interleave_concat(
            &closure_of(x, alpha, cap),
            &closure_of(y, alpha, cap),
            alpha,
        )
        .minimized(),
        Regex::Star(x) => star_instances(&closure_of(x, alpha, cap), alpha, cap).minimized(),
    }
}

/// The trace closure of L(a), certified.
///
/// Requires every loop of `a` to have a connected alphabet. The instance cap
/// starts at |Σ| and doubles until the certificate (base inclusion and swap
/// closure) passes; exhausting 2^|Σ| is reported as a diagnostic failure,
/// never as a wrong answer.
pub fn trace_closure(a: &Nfa, alpha: &DependenceAlphabet) -> Result<TraceClosedLang> {
    if let Some(cycle) = connected_loops(a, alpha) {
        return Err(Error::Precondition(format!(
            "loop with disconnected alphabet: {}",
            alpha.show_word(&cycle)
        )));
    }
    let base = a.trim();
    let regex = to_regex(&base);
    let limit = 1usize << alpha.len();
    let mut cap = alpha.len().max(1);
    loop {
        let lin = closure_of(&regex, alpha, cap);
        if base.is_subset_of(&lin)? && swap_closed(&lin, alpha) {
            return Ok(TraceClosedLang {
                lin: lin.minimized(),
                base,
                certificate: Certificate { cap },
            });
        }
        if cap >= limit {
            return Err(Error::ClosureCapExhausted(cap));
        }
        cap = (cap * 2).min(limit);
    }
}

/// The language of extended Foata words denoting traces of `k`, as an
/// automaton over single blocks.
///
/// States pair a `lin` state with the dependence mask of the previous block;
/// a nonempty block A is read iff A lies in that mask and `lin` can read a
/// linearization of A (any one linearization suffices since `lin` is
/// swap-closed). Trailing padding is a ∅-loop after accepting states.
pub fn fnf_encode(k: &TraceClosedLang, blocks: &BlockAlphabet) -> Nfa {
    let alpha = blocks.alpha();
    let lin = &k.lin;
    let adj = adjacency(lin);
    let word_reach = |from: usize, word: &[usize]| -> BTreeSet<usize> {
        let mut cur = BTreeSet::from([from]);
        for &a in word {
            let mut next = BTreeSet::new();
            for &p in &cur {
                for &(s, q) in &adj[p] {
                    if s == a {
                        next.insert(q);
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
    let mut out = Nfa::new(blocks.len());
    let mut index: HashMap<(usize, LetterSet), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let all = alpha.all_letters();
    for &s in &lin.initial {
        let id = out.add_state();
        index.insert((s, all), id);
        out.initial.insert(id);
        queue.push_back((s, all));
    }
    while let Some((s, mask)) = queue.pop_front() {
        let id = index[&(s, mask)];
        if lin.finals.contains(&s) {
            out.finals.insert(id);
        }
        for sym in 1..blocks.len() {
            let block = blocks.set(sym);
            if !block.is_subset_of(mask) {
                continue;
            }
            let word: Vec<usize> = block.iter().collect();
            for s2 in word_reach(s, &word) {
                let key = (s2, alpha.dep_of_set(block));
                let nid = *index.entry(key).or_insert_with(|| {
                    queue.push_back(key);
                    out.states += 1;
                    out.states - 1
                });
                out.transitions.insert((id, sym, nid));
            }
        }
    }
    // trailing ∅ padding
    let pad = out.add_state();
    out.transitions.insert((pad, 0, pad));
    for f in out.finals.clone() {
        out.transitions.insert((f, 0, pad));
    }
    out.finals.insert(pad);
    out.minimized()
}

/// Accepts exactly the convolutions of `k` extended Foata words of equal
/// length: per track, each block must lie in the dependence mask of the
/// previous one (which forces padding to be a trailing run).
pub fn efnf_valid(k: usize, blocks: &BlockAlphabet) -> Nfa {
    let alpha = blocks.alpha();
    let all = alpha.all_letters();
    let mut out = Nfa::new(blocks.tuple_domain(k));
    let mut index: HashMap<Vec<LetterSet>, usize> = HashMap::new();
    let start = vec![all; k];
    index.insert(start.clone(), out.add_state());
    out.initial.insert(0);
    out.finals.insert(0);
    let mut queue = VecDeque::from([start]);
    while let Some(masks) = queue.pop_front() {
        let id = index[&masks];
        for sym in 0..blocks.tuple_domain(k) {
            let tuple = blocks.tuple_at(sym, k);
            if tuple
                .iter()
                .zip(&masks)
                .any(|(&b, &m)| !b.is_subset_of(m))
            {
                continue;
            }
            let next: Vec<LetterSet> = tuple.iter().map(|&b| alpha.dep_of_set(b)).collect();
            let nid = *index.entry(next.clone()).or_insert_with(|| {
                queue.push_back(next);
                out.states += 1;
                out.states - 1
            });
            out.finals.insert(nid);
            out.transitions.insert((id, sym, nid));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Trace;
    use std::collections::BTreeSet;

    fn emso() -> DependenceAlphabet {
        DependenceAlphabet::from_chars("abT", &[('a', 'T'), ('b', 'T')])
    }

    fn free2() -> DependenceAlphabet {
        DependenceAlphabet::from_chars("ab", &[])
    }

    /// Brute-force trace closure of an enumerated language up to a length.
    fn swap_saturate(base: &Nfa, alpha: &DependenceAlphabet, max_len: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for w in base.enumerate_accepted(max_len) {
            let mut stack = vec![w.clone()];
            out.insert(w);
            while let Some(u) = stack.pop() {
                for i in 0..u.len().saturating_sub(1) {
                    if u[i] != u[i + 1] && alpha.independent(u[i], u[i + 1]) {
                        let mut v = u.clone();
                        v.swap(i, i + 1);
                        if out.insert(v.clone()) {
                            stack.push(v);
                        }
                    }
                }
            }
        }
        out
    }

    fn accepted(a: &Nfa, max_len: usize) -> BTreeSet<Vec<usize>> {
        a.enumerate_accepted(max_len).into_iter().collect()
    }

    #[test]
    fn swap_closed_examples() {
        let f = free2();
        assert!(swap_closed(&Nfa::from_words(2, &[vec![0, 1], vec![1, 0]]), &f));
        assert!(!swap_closed(&Nfa::from_words(2, &[vec![0, 1]]), &f));
        // a⊤ over the E-MSO alphabet: no independent adjacent pair.
        let al = emso();
        assert!(swap_closed(&Nfa::from_words(3, &[vec![0, 2]]), &al));
    }

    #[test]
    fn connected_loops_examples() {
        let al = emso();
        // single a-loop
        let mut a = Nfa::new(3);
        let s = a.add_state();
        a.initial.insert(s);
        a.finals.insert(s);
        a.add_transition(s, 0, s);
        assert!(connected_loops(&a, &al).is_none());

        // a-loop and b-loop at the same state, a ∥ b
        a.add_transition(s, 1, s);
        let w = connected_loops(&a, &al).expect("disconnected loop");
        let letters: BTreeSet<usize> = w.iter().copied().collect();
        assert_eq!(letters, BTreeSet::from([0, 1]));

        // a-loop and b-loop linked only one way: no mixed cycle
        let mut b = Nfa::new(3);
        let p = b.add_state();
        let q = b.add_state();
        b.initial.insert(p);
        b.finals.insert(q);
        b.add_transition(p, 0, p);
        b.add_transition(p, 2, q);
        b.add_transition(q, 1, q);
        assert!(connected_loops(&b, &al).is_none());
    }

    #[test]
    fn closure_of_astar_unchanged() {
        let al = emso();
        let mut a = Nfa::new(3);
        let s = a.add_state();
        a.initial.insert(s);
        a.finals.insert(s);
        a.add_transition(s, 0, s);
        let k = trace_closure(&a, &al).unwrap();
        assert!(k.lin.equivalent(&a).unwrap().is_ok());
    }

    #[test]
    fn closure_of_ab_free() {
        let f = free2();
        let a = Nfa::from_words(2, &[vec![0, 1]]);
        let k = trace_closure(&a, &f).unwrap();
        let expect = Nfa::from_words(2, &[vec![0, 1], vec![1, 0]]);
        assert!(k.lin.equivalent(&expect).unwrap().is_ok());
    }

    fn astar_bstar_b() -> Nfa {
        // over the 3-letter E-MSO alphabet: a* b* b
        let mut n = Nfa::new(3);
        let p = n.add_state();
        let q = n.add_state();
        n.initial.insert(p);
        n.finals.insert(q);
        n.add_transition(p, 0, p);
        n.add_transition(p, 1, q);
        n.add_transition(q, 1, q);
        n
    }

    #[test]
    fn closure_matches_swap_saturation() {
        let al = emso();
        let f = free2();
        let cases: Vec<(DependenceAlphabet, Nfa)> = vec![
            (al.clone(), astar_bstar_b()),
            (f.clone(), Nfa::from_words(2, &[vec![0, 0, 1]])),
            (al.clone(), {
                // (ab⊤)*: the loop alphabet {a,b,⊤} is connected via ⊤
                let mut n = Nfa::new(3);
                let p = n.add_state();
                let q = n.add_state();
                let r = n.add_state();
                n.initial.insert(p);
                n.finals.insert(p);
                n.add_transition(p, 0, q);
                n.add_transition(q, 1, r);
                n.add_transition(r, 2, p);
                n
            }),
            (al.clone(), {
                // ⊤(a⊤)* over E-MSO letters: dependent loop stays rigid
                let mut n = Nfa::new(3);
                let p = n.add_state();
                let q = n.add_state();
                let r = n.add_state();
                n.initial.insert(p);
                n.finals.insert(q);
                n.add_transition(p, 2, q);
                n.add_transition(q, 0, r);
                n.add_transition(r, 2, q);
                n
            }),
        ];
        for (alpha, base) in &cases {
            let k = trace_closure(base, alpha).unwrap();
            assert_eq!(
                accepted(&k.lin, 6),
                swap_saturate(base, alpha, 6),
                "base words: {:?}",
                base.enumerate_accepted(4)
            );
        }
    }

    #[test]
    fn closure_of_astar_bstar_b_is_words_with_a_b() {
        // a ∥ b: the closure is every word over {a,b} containing b.
        let al = emso();
        let k = trace_closure(&astar_bstar_b(), &al).unwrap();
        let expect = {
            let mut n = Nfa::new(3);
            let p = n.add_state();
            let q = n.add_state();
            n.initial.insert(p);
            n.finals.insert(q);
            n.add_transition(p, 0, p);
            n.add_transition(p, 1, q);
            n.add_transition(q, 0, q);
            n.add_transition(q, 1, q);
            n
        };
        assert!(k.lin.equivalent(&expect).unwrap().is_ok());
    }

    #[test]
    fn closure_rejects_disconnected_loop() {
        let al = emso();
        let mut a = Nfa::new(3);
        let s = a.add_state();
        a.initial.insert(s);
        a.finals.insert(s);
        a.add_transition(s, 0, s);
        a.add_transition(s, 1, s);
        assert!(matches!(
            trace_closure(&a, &al),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn fnf_encode_of_unit_language() {
        let al = emso();
        let blocks = BlockAlphabet::new(&al);
        let k = trace_closure(&Nfa::from_words(3, &[vec![]]), &al).unwrap();
        let enc = fnf_encode(&k, &blocks);
        // exactly ∅*
        let mut pad = Nfa::new(blocks.len());
        let s = pad.add_state();
        pad.initial.insert(s);
        pad.finals.insert(s);
        pad.add_transition(s, 0, s);
        assert!(enc.equivalent(&pad).unwrap().is_ok());
    }

    #[test]
    fn fnf_encode_of_astar_bstar_b() {
        let al = emso();
        let blocks = BlockAlphabet::new(&al);
        let k = trace_closure(&astar_bstar_b(), &al).unwrap();
        let enc = fnf_encode(&k, &blocks);
        assert!(!enc.accepts(&[]));
        // trace a b b has fnf {a,b}{b}
        let t = Trace::parse("abb", &al).unwrap();
        let word: Vec<usize> = t
            .blocks()
            .iter()
            .map(|&b| blocks.index(b).unwrap())
            .collect();
        assert!(enc.accepts(&word));
        let mut padded = word.clone();
        padded.push(0);
        assert!(enc.accepts(&padded));
        // the single-letter trace b is a member (m=0, n=1)
        assert!(enc.accepts(&[blocks.index(LetterSet::singleton(1)).unwrap()]));
        // a alone has no b
        assert!(!enc.accepts(&[blocks.index(LetterSet::singleton(0)).unwrap()]));
    }

    #[test]
    fn fnf_encode_members_and_non_members() {
        // cross-check membership against the word-level language
        let al = emso();
        let blocks = BlockAlphabet::new(&al);
        let base = astar_bstar_b();
        let k = trace_closure(&base, &al).unwrap();
        let enc = fnf_encode(&k, &blocks);
        let members = accepted(&k.lin, 6);
        // every word ≤ 6 over letters: encoded fnf accepted iff member
        for w in Nfa::universal(3).enumerate_accepted(5) {
            let t = Trace::from_word(&w, &al);
            let word: Vec<usize> = t
                .blocks()
                .iter()
                .map(|&b| blocks.index(b).unwrap())
                .collect();
            assert_eq!(
                enc.accepts(&word),
                members.contains(&t.linearize()),
                "word {w:?}"
            );
        }
    }

    #[test]
    fn fnf_encode_of_aab_closure() {
        // closure({aab}) over a ∥ b encodes as exactly {a,b}{a}∅*
        let f = free2();
        let blocks = BlockAlphabet::new(&f);
        let k = trace_closure(&Nfa::from_words(2, &[vec![0, 0, 1]]), &f).unwrap();
        let enc = fnf_encode(&k, &blocks);
        let ab = blocks.index(LetterSet::from_letters([0, 1])).unwrap();
        let a = blocks.index(LetterSet::singleton(0)).unwrap();
        let expect = {
            let mut n = Nfa::new(blocks.len());
            let s0 = n.add_state();
            let s1 = n.add_state();
            let s2 = n.add_state();
            n.initial.insert(s0);
            n.finals.insert(s2);
            n.add_transition(s0, ab, s1);
            n.add_transition(s1, a, s2);
            n.add_transition(s2, 0, s2);
            n
        };
        assert!(enc.equivalent(&expect).unwrap().is_ok());
    }

    #[test]
    fn efnf_valid_unary_examples() {
        let al = emso();
        let blocks = BlockAlphabet::new(&al);
        let v = efnf_valid(1, &blocks);
        let a = blocks.index(LetterSet::singleton(0)).unwrap();
        let b = blocks.index(LetterSet::singleton(1)).unwrap();
        let t = blocks.index(LetterSet::singleton(2)).unwrap();
        assert!(v.accepts(&[a, t]));
        assert!(!v.accepts(&[a, b]));
        assert!(v.accepts(&[a, 0, 0]));
        assert!(!v.accepts(&[a, 0, t]));
        assert!(v.accepts(&[]));
    }

    #[test]
    fn efnf_valid_binary_tracks_are_independent() {
        let al = emso();
        let blocks = BlockAlphabet::new(&al);
        let v = efnf_valid(2, &blocks);
        let a = LetterSet::singleton(0);
        let b = LetterSet::singleton(1);
        let t = LetterSet::singleton(2);
        let e = LetterSet::EMPTY;
        // ({a},{b}) ({T},∅): track 1 a then T is fine, track 2 b then ∅ fine
        let w1 = vec![
            blocks.tuple_index(&[a, b]).unwrap(),
            blocks.tuple_index(&[t, e]).unwrap(),
        ];
        assert!(v.accepts(&w1));
        // track 2 violates: b then a
        let w2 = vec![
            blocks.tuple_index(&[a, b]).unwrap(),
            blocks.tuple_index(&[t, a]).unwrap(),
        ];
        assert!(!v.accepts(&w2));
        // padding must stay padding per track
        let w3 = vec![
            blocks.tuple_index(&[a, e]).unwrap(),
            blocks.tuple_index(&[t, b]).unwrap(),
        ];
        assert!(!v.accepts(&w3));
    }
}
