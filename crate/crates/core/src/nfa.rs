//! Generic finite automata over an interned symbol domain.
//!
//! Symbols are indices into an ordered domain fixed by the caller, so the same
//! machinery serves letters, Foata blocks, and block tuples. All constructions
//! use deterministic state numbering (BFS discovery order, symbols ascending)
//! so identical inputs produce identical outputs.

use crate::alphabet::DependenceAlphabet;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Nfa {
    pub symbols: usize,
    pub states: usize,
    pub initial: BTreeSet<usize>,
    pub finals: BTreeSet<usize>,
    pub transitions: BTreeSet<(usize, usize, usize)>,
}

impl Nfa {
    pub fn new(symbols: usize) -> Self {
        Nfa {
            symbols,
            states: 0,
            initial: BTreeSet::new(),
            finals: BTreeSet::new(),
            transitions: BTreeSet::new(),
        }
    }

    pub fn add_state(&mut self) -> usize {
        self.states += 1;
        self.states - 1
    }

    pub fn add_transition(&mut self, src: usize, sym: usize, dst: usize) {
        debug_assert!(src < self.states && dst < self.states && sym < self.symbols);
        self.transitions.insert((src, sym, dst));
    }

    /// Accepts exactly the given finite set of words.
    pub fn from_words(symbols: usize, words: &[Vec<usize>]) -> Self {
        let mut a = Nfa::new(symbols);
        let root = a.add_state();
        a.initial.insert(root);
        for w in words {
            let mut cur = root;
            for &s in w {
                let nxt = a.add_state();
                a.add_transition(cur, s, nxt);
                cur = nxt;
            }
            a.finals.insert(cur);
        }
        a
    }

    /// Accepts the empty language.
    pub fn empty(symbols: usize) -> Self {
        let mut a = Nfa::new(symbols);
        let s = a.add_state();
        a.initial.insert(s);
        a
    }

    /// Accepts every word over the domain.
    pub fn universal(symbols: usize) -> Self {
        let mut a = Nfa::new(symbols);
        let s = a.add_state();
        a.initial.insert(s);
        a.finals.insert(s);
        for sym in 0..symbols {
            a.add_transition(s, sym, s);
        }
        a
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.states];
        for &(p, s, q) in &self.transitions {
            adj[p].push((s, q));
        }
        adj
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut cur: BTreeSet<usize> = self.initial.clone();
        let adj = self.adjacency();
        for &sym in word {
            let mut next = BTreeSet::new();
            for &p in &cur {
                for &(s, q) in &adj[p] {
                    if s == sym {
                        next.insert(q);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            cur = next;
        }
        cur.iter().any(|s| self.finals.contains(s))
    }

    pub fn is_empty_lang(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.states];
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        for &s in &self.initial {
            seen[s] = true;
        }
        while let Some(p) = queue.pop_front() {
            if self.finals.contains(&p) {
                return false;
            }
            for &(_, q) in &adj[p] {
                if !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        true
    }

    /// Disjoint union.
    pub fn union(&self, other: &Nfa) -> Result<Nfa> {
        if self.symbols != other.symbols {
            return Err(Error::DomainMismatch(self.symbols, other.symbols));
        }
        let mut a = self.clone();
        let off = self.states;
        a.states += other.states;
        for &s in &other.initial {
            a.initial.insert(s + off);
        }
        for &s in &other.finals {
            a.finals.insert(s + off);
        }
        for &(p, s, q) in &other.transitions {
            a.transitions.insert((p + off, s, q + off));
        }
        Ok(a)
    }

    /// Product automaton restricted to reachable state pairs.
    pub fn intersect(&self, other: &Nfa) -> Result<Nfa> {
        if self.symbols != other.symbols {
            return Err(Error::DomainMismatch(self.symbols, other.symbols));
        }
        let adj_a = self.adjacency();
        let adj_b = other.adjacency();
        let mut out = Nfa::new(self.symbols);
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut order: Vec<(usize, usize)> = Vec::new();
        let mut queue = VecDeque::new();
        for &p in &self.initial {
            for &q in &other.initial {
                if !index.contains_key(&(p, q)) {
                    let id = out.add_state();
                    index.insert((p, q), id);
                    order.push((p, q));
                    out.initial.insert(id);
                    queue.push_back((p, q));
                }
            }
        }
        while let Some((p, q)) = queue.pop_front() {
            let src = index[&(p, q)];
            if self.finals.contains(&p) && other.finals.contains(&q) {
                out.finals.insert(src);
            }
            // group b-successors by symbol
            let mut bsucc: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &(s, q2) in &adj_b[q] {
                bsucc.entry(s).or_default().push(q2);
            }
            let mut asucc: Vec<(usize, usize)> = adj_a[p].clone();
            asucc.sort_unstable();
            for (s, p2) in asucc {
                if let Some(qs) = bsucc.get(&s) {
                    for &q2 in qs {
                        let id = *index.entry((p2, q2)).or_insert_with(|| {
                            order.push((p2, q2));
                            queue.push_back((p2, q2));
                            out.states += 1;
                            out.states - 1
                        });
                        out.transitions.insert((src, s, id));
                    }
                }
            }
        }
        if out.states == 0 {
            return Ok(Nfa::empty(self.symbols));
        }
        Ok(out)
    }

    /// Subset construction. The result is a complete DFA; state 0 is the
    /// initial subset, and the dead subset (if reached) is an ordinary state.
    pub fn determinize(&self) -> Nfa {
        let adj = self.adjacency();
        let mut out = Nfa::new(self.symbols);
        let start: BTreeSet<usize> = self.initial.clone();
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        let key = |s: &BTreeSet<usize>| s.iter().copied().collect::<Vec<_>>();
        let k0 = key(&start);
        index.insert(k0.clone(), out.add_state());
        subsets.push(k0);
        out.initial.insert(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let subset = subsets[id].clone();
            if subset.iter().any(|s| self.finals.contains(s)) {
                out.finals.insert(id);
            }
            for sym in 0..self.symbols {
                let mut next = BTreeSet::new();
                for &p in &subset {
                    for &(s, q) in &adj[p] {
                        if s == sym {
                            next.insert(q);
                        }
                    }
                }
                let k = key(&next);
                let nid = match index.get(&k) {
                    Some(&n) => n,
                    None => {
                        let n = out.add_state();
                        index.insert(k.clone(), n);
                        subsets.push(k);
                        queue.push_back(n);
                        n
                    }
                };
                out.transitions.insert((id, sym, nid));
            }
        }
        out
    }

    /// Complement via determinization.
    pub fn complement(&self) -> Nfa {
        let mut d = self.determinize();
        d.finals = (0..d.states).filter(|s| !d.finals.contains(s)).collect();
        d
    }

    pub fn is_subset_of(&self, other: &Nfa) -> Result<bool> {
        Ok(self.intersect(&other.complement())?.is_empty_lang())
    }

    /// Language equivalence; on failure returns a shortest separating word.
    pub fn equivalent(&self, other: &Nfa) -> Result<std::result::Result<(), Vec<usize>>> {
        if self.symbols != other.symbols {
            return Err(Error::DomainMismatch(self.symbols, other.symbols));
        }
        let da = self.determinize();
        let db = other.determinize();
        let adj_a = da.adjacency();
        let adj_b = db.adjacency();
        // Both DFAs are complete with a single initial state.
        let ia = *da.initial.iter().next().unwrap();
        let ib = *db.initial.iter().next().unwrap();
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut queue: VecDeque<(usize, usize, Vec<usize>)> = VecDeque::new();
        seen.insert((ia, ib));
        queue.push_back((ia, ib, Vec::new()));
        while let Some((p, q, word)) = queue.pop_front() {
            if da.finals.contains(&p) != db.finals.contains(&q) {
                return Ok(Err(word));
            }
            for sym in 0..self.symbols {
                let p2 = adj_a[p].iter().find(|&&(s, _)| s == sym).unwrap().1;
                let q2 = adj_b[q].iter().find(|&&(s, _)| s == sym).unwrap().1;
                if seen.insert((p2, q2)) {
                    let mut w = word.clone();
                    w.push(sym);
                    queue.push_back((p2, q2, w));
                }
            }
        }
        Ok(Ok(()))
    }

    /// Image under a homomorphism mapping each symbol to a word over the
    /// target domain.
    pub fn hom_image(&self, map: &[Vec<usize>], target_symbols: usize) -> Nfa {
        assert_eq!(map.len(), self.symbols);
        let mut e = EpsilonNfa::new(target_symbols);
        e.states = self.states;
        e.initial = self.initial.clone();
        e.finals = self.finals.clone();
        for &(p, s, q) in &self.transitions {
            let w = &map[s];
            if w.is_empty() {
                e.eps.insert((p, q));
            } else {
                let mut cur = p;
                for (i, &t) in w.iter().enumerate() {
                    let nxt = if i + 1 == w.len() {
                        q
                    } else {
                        e.states += 1;
                        e.states - 1
                    };
                    e.transitions.insert((cur, t, nxt));
                    cur = nxt;
                }
            }
        }
        e.eliminate()
    }

    /// Inverse image: the result reads source symbol `s` wherever `self` can
    /// read the word `map[s]`.
    pub fn inv_hom_image(&self, map: &[Vec<usize>]) -> Nfa {
        let adj = self.adjacency();
        let mut out = Nfa::new(map.len());
        out.states = self.states;
        out.initial = self.initial.clone();
        out.finals = self.finals.clone();
        // Word reachability per mapped word.
        for (s, w) in map.iter().enumerate() {
            for p in 0..self.states {
                let mut cur: BTreeSet<usize> = BTreeSet::from([p]);
                for &t in w {
                    let mut next = BTreeSet::new();
                    for &x in &cur {
                        for &(sym, y) in &adj[x] {
                            if sym == t {
                                next.insert(y);
                            }
                        }
                    }
                    cur = next;
                    if cur.is_empty() {
                        break;
                    }
                }
                for q in cur {
                    out.transitions.insert((p, s, q));
                }
            }
        }
        out
    }

    /// Right quotient: accepts u iff uv ∈ L(self) for some v ∈ L(r).
    pub fn right_quotient(&self, r: &Nfa) -> Result<Nfa> {
        if self.symbols != r.symbols {
            return Err(Error::DomainMismatch(self.symbols, r.symbols));
        }
        // Backward reachability over the product from final×final pairs.
        let mut rev: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.states * r.states];
        let radj = r.adjacency();
        for &(p, s, q) in &self.transitions {
            for x in 0..r.states {
                for &(sym, y) in &radj[x] {
                    if sym == s {
                        rev[q * r.states + y].push((p, x));
                    }
                }
            }
        }
        let mut co = vec![false; self.states * r.states];
        let mut queue = VecDeque::new();
        for &f in &self.finals {
            for &g in &r.finals {
                if !co[f * r.states + g] {
                    co[f * r.states + g] = true;
                    queue.push_back((f, g));
                }
            }
        }
        while let Some((q, y)) = queue.pop_front() {
            for &(p, x) in &rev[q * r.states + y] {
                if !co[p * r.states + x] {
                    co[p * r.states + x] = true;
                    queue.push_back((p, x));
                }
            }
        }
        let mut out = self.clone();
        out.finals = (0..self.states)
            .filter(|&p| r.initial.iter().any(|&i| co[p * r.states + i]))
            .collect();
        Ok(out)
    }

    /// One-swap image over a letter domain: accepts exactly
    /// { u b a v : u a b v ∈ L, (a,b) independent }.
    pub fn swap_image(&self, alpha: &DependenceAlphabet) -> Nfa {
        assert_eq!(self.symbols, alpha.len());
        let mut out = Nfa::new(self.symbols);
        out.states = 2 * self.states; // unprimed = before swap, primed = after
        out.initial = self.initial.clone();
        out.finals = self.finals.iter().map(|&f| f + self.states).collect();
        for &(p, s, q) in &self.transitions {
            out.transitions.insert((p, s, q));
            out.transitions
                .insert((p + self.states, s, q + self.states));
        }
        let adj = self.adjacency();
        for &(p, a, r) in &self.transitions {
            for &(b, q) in &adj[r] {
                if a != b && alpha.independent(a, b) {
                    let mid = out.add_state();
                    out.transitions.insert((p, b, mid));
                    out.transitions.insert((mid, a, q + self.states));
                }
            }
        }
        out
    }

    pub fn reverse(&self) -> Nfa {
        let mut out = Nfa::new(self.symbols);
        out.states = self.states;
        out.initial = self.finals.clone();
        out.finals = self.initial.clone();
        for &(p, s, q) in &self.transitions {
            out.transitions.insert((q, s, p));
        }
        out
    }

    /// Restricts to accessible and co-accessible states, renumbering in BFS
    /// order. The empty language canonicalizes to a single initial state.
    pub fn trim(&self) -> Nfa {
        let adj = self.adjacency();
        let mut fwd = vec![false; self.states];
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        for &s in &self.initial {
            fwd[s] = true;
        }
        while let Some(p) = queue.pop_front() {
            for &(_, q) in &adj[p] {
                if !fwd[q] {
                    fwd[q] = true;
                    queue.push_back(q);
                }
            }
        }
        let mut radj = vec![Vec::new(); self.states];
        for &(p, _, q) in &self.transitions {
            radj[q].push(p);
        }
        let mut bwd = vec![false; self.states];
        let mut queue: VecDeque<usize> = self.finals.iter().copied().collect();
        for &s in &self.finals {
            bwd[s] = true;
        }
        while let Some(q) = queue.pop_front() {
            for &p in &radj[q] {
                if !bwd[p] {
                    bwd[p] = true;
                    queue.push_back(p);
                }
            }
        }
        let live: Vec<bool> = (0..self.states).map(|s| fwd[s] && bwd[s]).collect();
        if !self.initial.iter().any(|&s| live[s]) {
            return Nfa::empty(self.symbols);
        }
        // BFS renumbering over live states, symbols ascending.
        let mut id = vec![usize::MAX; self.states];
        let mut out = Nfa::new(self.symbols);
        let mut queue = VecDeque::new();
        let mut inits: Vec<usize> = self.initial.iter().copied().filter(|&s| live[s]).collect();
        inits.sort_unstable();
        for s in inits {
            if id[s] == usize::MAX {
                id[s] = out.add_state();
                out.initial.insert(id[s]);
                queue.push_back(s);
            }
        }
        let mut sorted_adj = adj;
        for l in sorted_adj.iter_mut() {
            l.sort_unstable();
        }
        while let Some(p) = queue.pop_front() {
            if self.finals.contains(&p) {
                out.finals.insert(id[p]);
            }
            for &(s, q) in &sorted_adj[p] {
                if !live[q] {
                    continue;
                }
                if id[q] == usize::MAX {
                    id[q] = out.add_state();
                    queue.push_back(q);
                }
                out.transitions.insert((id[p], s, id[q]));
            }
        }
        out
    }

    /// Canonical minimal form: determinize, merge equivalent states, trim.
    /// Equal languages yield structurally equal automata.
    pub fn minimized(&self) -> Nfa {
        let d = self.determinize();
        // Moore partition refinement on the complete DFA.
        let mut class: Vec<usize> = (0..d.states)
            .map(|s| usize::from(d.finals.contains(&s)))
            .collect();
        let mut succ = vec![0usize; d.states * d.symbols];
        for &(p, s, q) in &d.transitions {
            succ[p * d.symbols + s] = q;
        }
        loop {
            let mut sig: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            let mut next = vec![0usize; d.states];
            for p in 0..d.states {
                let mut key = Vec::with_capacity(d.symbols + 1);
                key.push(class[p]);
                for s in 0..d.symbols {
                    key.push(class[succ[p * d.symbols + s]]);
                }
                let n = sig.len();
                next[p] = *sig.entry(key).or_insert(n);
            }
            if next == class {
                break;
            }
            class = next;
        }
        let nclasses = class.iter().max().map_or(0, |m| m + 1);
        let mut m = Nfa::new(d.symbols);
        m.states = nclasses;
        m.initial
            .insert(class[*d.initial.iter().next().unwrap()]);
        for &f in &d.finals {
            m.finals.insert(class[f]);
        }
        for p in 0..d.states {
            for s in 0..d.symbols {
                m.transitions
                    .insert((class[p], s, class[succ[p * d.symbols + s]]));
            }
        }
        m.trim()
    }

    /// Shortest accepted word in length-lexicographic order.
    pub fn shortest_accepted(&self) -> Option<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen: HashMap<Vec<usize>, ()> = HashMap::new();
        let start: Vec<usize> = self.initial.iter().copied().collect();
        let mut queue = VecDeque::from([(start.clone(), Vec::new())]);
        seen.insert(start, ());
        while let Some((subset, word)) = queue.pop_front() {
            if subset.iter().any(|s| self.finals.contains(s)) {
                return Some(word);
            }
            for sym in 0..self.symbols {
                let mut next = BTreeSet::new();
                for &p in &subset {
                    for &(s, q) in &adj[p] {
                        if s == sym {
                            next.insert(q);
                        }
                    }
                }
                if next.is_empty() {
                    continue;
                }
                let k: Vec<usize> = next.into_iter().collect();
                if !seen.contains_key(&k) {
                    seen.insert(k.clone(), ());
                    let mut w = word.clone();
                    w.push(sym);
                    queue.push_back((k, w));
                }
            }
        }
        None
    }

    /// Enumerates accepted words up to the given length (test oracle helper).
    pub fn enumerate_accepted(&self, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut layer = vec![Vec::new()];
        for len in 0..=max_len {
            for w in &layer {
                if self.accepts(w) {
                    out.push(w.clone());
                }
            }
            if len == max_len {
                break;
            }
            let mut next = Vec::new();
            for w in &layer {
                for s in 0..self.symbols {
                    let mut v = w.clone();
                    v.push(s);
                    next.push(v);
                }
            }
            layer = next;
        }
        out
    }

    /// DOT rendering; `show` names each symbol.
    pub fn to_dot(&self, show: &dyn Fn(usize) -> String) -> String {
        let mut s = String::from("digraph nfa {\n  rankdir=LR;\n");
        for q in 0..self.states {
            let shape = if self.finals.contains(&q) {
                "doublecircle"
            } else {
                "circle"
            };
            s.push_str(&format!("  q{q} [shape={shape}];\n"));
            if self.initial.contains(&q) {
                s.push_str(&format!("  start{q} [shape=point];\n  start{q} -> q{q};\n"));
            }
        }
        for &(p, sym, q) in &self.transitions {
            s.push_str(&format!("  q{p} -> q{q} [label=\"{}\"];\n", show(sym)));
        }
        s.push_str("}\n");
        s
    }
}

/// An NFA with ε-transitions.
#[derive(Clone, Debug)]
pub struct EpsilonNfa {
    pub symbols: usize,
    pub states: usize,
    pub initial: BTreeSet<usize>,
    pub finals: BTreeSet<usize>,
    pub transitions: BTreeSet<(usize, usize, usize)>,
    pub eps: BTreeSet<(usize, usize)>,
}

impl EpsilonNfa {
    pub fn new(symbols: usize) -> Self {
        EpsilonNfa {
            symbols,
            states: 0,
            initial: BTreeSet::new(),
            finals: BTreeSet::new(),
            transitions: BTreeSet::new(),
            eps: BTreeSet::new(),
        }
    }

    pub fn add_state(&mut self) -> usize {
        self.states += 1;
        self.states - 1
    }

    fn closures(&self) -> Vec<BTreeSet<usize>> {
        let mut eadj = vec![Vec::new(); self.states];
        for &(p, q) in &self.eps {
            eadj[p].push(q);
        }
        (0..self.states)
            .map(|s| {
                let mut seen = BTreeSet::from([s]);
                let mut queue = VecDeque::from([s]);
                while let Some(p) = queue.pop_front() {
                    for &q in &eadj[p] {
                        if seen.insert(q) {
                            queue.push_back(q);
                        }
                    }
                }
                seen
            })
            .collect()
    }

    /// Standard ε-elimination: p reads a to q whenever some state in the
    /// ε-closure of p does; finals grow to states whose closure meets F.
    pub fn eliminate(&self) -> Nfa {
        let cls = self.closures();
        let mut out = Nfa::new(self.symbols);
        out.states = self.states.max(1);
        out.initial = if self.initial.is_empty() {
            BTreeSet::from([0])
        } else {
            self.initial.clone()
        };
        let mut adj = vec![Vec::new(); self.states];
        for &(p, s, q) in &self.transitions {
            adj[p].push((s, q));
        }
        for p in 0..self.states {
            for &r in &cls[p] {
                for &(s, q) in &adj[r] {
                    out.transitions.insert((p, s, q));
                }
            }
            if cls[p].iter().any(|r| self.finals.contains(r)) {
                out.finals.insert(p);
            }
        }
        out
    }
}
