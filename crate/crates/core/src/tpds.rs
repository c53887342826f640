//! Trace-pushdown systems: parsing, the defining conditions (P1)/(P2),
//! saturation, loop-connectedness, and twin-class splitting.
//!
//! A transition (p, a, w, q) pops a maximal letter `a` from the stack trace
//! and pushes the word `w`. (P1) keeps pushes local to the dependence
//! neighborhood of the popped letter; (P2) makes independent pops commute.

use crate::alphabet::{DependenceAlphabet, LetterSet};
use crate::error::{Error, Result};
use std::collections::BTreeSet;

pub type Transition = (usize, usize, Vec<usize>, usize);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Flags {
    pub checked_p1: bool,
    pub checked_p2: bool,
    pub saturated: bool,
    pub loop_connected: bool,
}

#[derive(Clone, Debug)]
pub struct Tpds {
    pub alphabet: DependenceAlphabet,
    pub state_names: Vec<String>,
    pub transitions: BTreeSet<Transition>,
    pub flags: Flags,
}

/// The loop graph: nodes are (state, letter) pairs; an edge
/// (p,a) → (q,b) labeled alph(u) exists for every transition (p,a,w,q)
/// with a decomposition w = u·b·v, b ∥ v.
#[derive(Clone, Debug)]
pub struct LoopGraph {
    pub nodes: Vec<(usize, usize)>,
    /// (from node index, to node index, label)
    pub edges: Vec<(usize, usize, LetterSet)>,
}

/// A closed walk of the loop graph whose labels union to a disconnected set.
#[derive(Clone, Debug)]
pub struct LoopWitness {
    /// Edge indices of the walk, in order.
    pub walk: Vec<usize>,
    pub label_union: LetterSet,
}

impl Tpds {
    pub fn new(alphabet: DependenceAlphabet, state_names: Vec<String>) -> Self {
        Tpds {
            alphabet,
            state_names,
            transitions: BTreeSet::new(),
            flags: Flags::default(),
        }
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn add_transition(&mut self, p: &str, a: &str, w: &str, q: &str) -> Result<()> {
        let t = (
            self.state_index(p)?,
            self.alphabet.index(a)?,
            self.alphabet.parse_word(w)?,
            self.state_index(q)?,
        );
        self.transitions.insert(t);
        self.flags = Flags::default();
        Ok(())
    }

    /// Parses the line-oriented text format:
    /// `letters a b T`, `dep a T`, `states p q r`,
    /// `trans p T aT q` (with `-` for the empty push word), `#` comments.
    pub fn parse(text: &str) -> Result<Tpds> {
        let mut letters: Option<Vec<String>> = None;
        let mut dep_pairs: Vec<(String, String)> = Vec::new();
        let mut states: Option<Vec<String>> = None;
        let mut trans: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace().map(str::to_string);
            let head = toks.next().unwrap();
            let rest: Vec<String> = toks.collect();
            let lineno = i + 1;
            match head.as_str() {
                "letters" => {
                    if rest.is_empty() || rest.iter().any(|l| l.chars().count() != 1) {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: "letters must be single characters".into(),
                        });
                    }
                    letters = Some(rest);
                }
                "dep" => {
                    if rest.len() != 2 {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: "dep takes exactly two letters".into(),
                        });
                    }
                    dep_pairs.push((rest[0].clone(), rest[1].clone()));
                }
                "states" => {
                    if rest.is_empty() {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: "states must not be empty".into(),
                        });
                    }
                    states = Some(rest);
                }
                "trans" => {
                    if rest.len() != 4 {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: "trans takes state, letter, word, state".into(),
                        });
                    }
                    trans.push((lineno, rest));
                }
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown directive `{other}`"),
                    });
                }
            }
        }
        let letters = letters.ok_or(Error::Parse {
            line: 0,
            msg: "missing letters line".into(),
        })?;
        let states = states.ok_or(Error::Parse {
            line: 0,
            msg: "missing states line".into(),
        })?;
        let tmp = DependenceAlphabet::new(letters.clone(), &[]);
        let mut pairs = Vec::new();
        for (x, y) in &dep_pairs {
            pairs.push((tmp.index(x)?, tmp.index(y)?));
        }
        let alphabet = DependenceAlphabet::new(letters, &pairs);
        let mut sys = Tpds::new(alphabet, states);
        for (lineno, t) in trans {
            let word = if t[2] == "-" { "" } else { &t[2] };
            sys.add_transition(&t[0], &t[1], word, &t[3])
                .map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
        }
        sys.flags = Flags::default();
        Ok(sys)
    }

    /// Renders the system back into the text format, deterministically.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = (0..self.alphabet.len())
            .map(|l| self.alphabet.name(l))
            .collect();
        out.push_str(&format!("letters {}\n", names.join(" ")));
        for x in 0..self.alphabet.len() {
            for y in x + 1..self.alphabet.len() {
                if self.alphabet.dependent(x, y) {
                    out.push_str(&format!("dep {} {}\n", names[x], names[y]));
                }
            }
        }
        out.push_str(&format!("states {}\n", self.state_names.join(" ")));
        for (p, a, w, q) in &self.transitions {
            let word = if w.is_empty() {
                "-".to_string()
            } else {
                self.alphabet.show_word(w)
            };
            out.push_str(&format!(
                "trans {} {} {} {}\n",
                self.state_names[*p], names[*a], word, self.state_names[*q]
            ));
        }
        out
    }

    pub fn show_transition(&self, t: &Transition) -> String {
        format!(
            "{} --{}|{}--> {}",
            self.state_names[t.0],
            self.alphabet.name(t.1),
            if t.2.is_empty() {
                "ε".to_string()
            } else {
                self.alphabet.show_word(&t.2)
            },
            self.state_names[t.3]
        )
    }

    /// (P1): every pushed letter depends only within D(a). Returns an
    /// offending transition, if any; records success.
    pub fn check_p1(&mut self) -> Option<Transition> {
        for t in &self.transitions {
            let pushed = LetterSet::from_letters(t.2.iter().copied());
            if !self
                .alphabet
                .dep_of_set(pushed)
                .is_subset_of(self.alphabet.dep_of(t.1))
            {
                return Some(t.clone());
            }
        }
        self.flags.checked_p1 = true;
        None
    }

    /// (P2): for p →a|v q →b|w r with a ∥ b there must be q′ with
    /// p →b|w q′ →a|v r. Returns an offending pair, if any.
    pub fn check_p2(&mut self) -> Option<(Transition, Transition)> {
        for t1 in &self.transitions {
            for t2 in &self.transitions {
                if t2.0 != t1.3 || !self.alphabet.independent(t1.1, t2.1) {
                    continue;
                }
                let commuted = (0..self.state_count()).any(|mid| {
                    self.transitions
                        .contains(&(t1.0, t2.1, t2.2.clone(), mid))
                        && self.transitions.contains(&(mid, t1.1, t1.2.clone(), t2.3))
                });
                if !commuted {
                    return Some((t1.clone(), t2.clone()));
                }
            }
        }
        self.flags.checked_p2 = true;
        None
    }

    /// All decompositions w = u·b·v with b ∥ v, as (u, b, v) index triples.
    pub(crate) fn decompositions<'a>(
        &'a self,
        w: &'a [usize],
    ) -> impl Iterator<Item = (&'a [usize], usize, &'a [usize])> + 'a {
        (0..w.len()).filter_map(move |i| {
            let (u, rest) = w.split_at(i);
            let (b, v) = (rest[0], &rest[1..]);
            let vset = LetterSet::from_letters(v.iter().copied());
            self.alphabet
                .sets_independent(LetterSet::singleton(b), vset)
                .then_some((u, b, v))
        })
    }

    /// Least fixpoint of the shortcut rule: (p,a,ubv,q), (q,b,ε,r), b ∥ v
    /// adds (p,a,uv,r). Terminates since added words are subsequences of
    /// existing ones; reachability is preserved.
    pub fn saturate(&self) -> Result<Tpds> {
        if !self.flags.checked_p1 || !self.flags.checked_p2 {
            return Err(Error::Precondition(
                "saturate requires P1 and P2 checked".into(),
            ));
        }
        let mut sys = self.clone();
        loop {
            let mut added = Vec::new();
            for t in &sys.transitions {
                for (u, b, v) in sys.decompositions(&t.2) {
                    for pop in &sys.transitions {
                        if pop.0 == t.3 && pop.1 == b && pop.2.is_empty() {
                            let mut w = u.to_vec();
                            w.extend_from_slice(v);
                            let cand = (t.0, t.1, w, pop.3);
                            if !sys.transitions.contains(&cand) {
                                added.push(cand);
                            }
                        }
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            sys.transitions.extend(added);
        }
        sys.flags = Flags {
            checked_p1: self.flags.checked_p1,
            checked_p2: self.flags.checked_p2,
            saturated: true,
            loop_connected: false,
        };
        Ok(sys)
    }

    pub fn loop_graph(&self) -> LoopGraph {
        let mut nodes = Vec::new();
        for p in 0..self.state_count() {
            for a in 0..self.alphabet.len() {
                nodes.push((p, a));
            }
        }
        let node = |p: usize, a: usize| p * self.alphabet.len() + a;
        let mut edges = Vec::new();
        for t in &self.transitions {
            for (u, b, _v) in self.decompositions(&t.2) {
                let label = LetterSet::from_letters(u.iter().copied());
                let e = (node(t.0, t.1), node(t.3, b), label);
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        LoopGraph { nodes, edges }
    }

    /// Checks that every closed walk of the loop graph has a connected label
    /// union. Returns a witness walk on failure; records success.
    ///
    /// For every pair (X, Y) of disjoint nonempty mutually independent
    /// letter sets, edges with labels inside X ∪ Y are kept and a strongly
    /// connected component containing an X-touching and a Y-touching edge
    /// (possibly the same edge) is a violation.
    pub fn check_loop_connected(&mut self) -> Result<Option<LoopWitness>> {
        if !self.flags.saturated {
            return Err(Error::Precondition(
                "loop-connectedness requires a saturated system".into(),
            ));
        }
        let g = self.loop_graph();
        let all = self.alphabet.all_letters();
        for x in all.subsets() {
            if x.is_empty() {
                continue;
            }
            for y in all.minus(x).subsets() {
                if y.is_empty() || y.0 < x.0 || !self.alphabet.sets_independent(x, y) {
                    continue;
                }
                let keep: Vec<usize> = (0..g.edges.len())
                    .filter(|&e| g.edges[e].2.is_subset_of(x.union(y)))
                    .collect();
                let comp = graph_scc(
                    g.nodes.len(),
                    &keep.iter().map(|&e| (g.edges[e].0, g.edges[e].1)).collect::<Vec<_>>(),
                );
                for &e in &keep {
                    let (from, to, label) = g.edges[e];
                    if comp[from] != comp[to] {
                        continue;
                    }
                    if !label.intersect(x).is_empty() && !label.intersect(y).is_empty() {
                        let walk = close_walk(&g, &keep, &comp, e, e);
                        return Ok(Some(LoopWitness {
                            label_union: label,
                            walk,
                        }));
                    }
                    for &e2 in &keep {
                        let (f2, t2, l2) = g.edges[e2];
                        if comp[f2] != comp[from] || comp[f2] != comp[t2] {
                            continue;
                        }
                        if !label.intersect(x).is_empty() && !l2.intersect(y).is_empty() {
                            let walk = close_walk(&g, &keep, &comp, e, e2);
                            let label_union = walk
                                .iter()
                                .fold(LetterSet::EMPTY, |acc, &i| acc.union(g.edges[i].2));
                            return Ok(Some(LoopWitness { label_union, walk }));
                        }
                    }
                }
            }
        }
        self.flags.loop_connected = true;
        Ok(None)
    }

    /// Splits into the pop-only sub-system Δ_ε and one push sub-system Δ_T
    /// per twin class T of the alphabet. All sub-systems share states and
    /// alphabet.
    pub fn split(&self) -> (Tpds, Vec<(LetterSet, Tpds)>) {
        let mut eps = Tpds::new(self.alphabet.clone(), self.state_names.clone());
        eps.transitions = self
            .transitions
            .iter()
            .filter(|t| t.2.is_empty())
            .cloned()
            .collect();
        let mut per_class = Vec::new();
        for class in self.alphabet.twin_classes() {
            let mut sub = Tpds::new(self.alphabet.clone(), self.state_names.clone());
            sub.transitions = self
                .transitions
                .iter()
                .filter(|t| !t.2.is_empty() && class.contains(t.1))
                .cloned()
                .collect();
            per_class.push((class, sub));
        }
        (eps, per_class)
    }
}

fn graph_scc(nodes: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); nodes];
    let mut radj = vec![Vec::new(); nodes];
    for &(p, q) in edges {
        adj[p].push(q);
        radj[q].push(p);
    }
    let mut order = Vec::with_capacity(nodes);
    let mut seen = vec![false; nodes];
    for s in 0..nodes {
        if seen[s] {
            continue;
        }
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
    let mut comp = vec![usize::MAX; nodes];
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

/// A closed walk through edges `e1` and `e2` inside their common component.
fn close_walk(g: &LoopGraph, keep: &[usize], comp: &[usize], e1: usize, e2: usize) -> Vec<usize> {
    let path = |from: usize, to: usize| -> Vec<usize> {
        if from == to {
            return Vec::new();
        }
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; g.nodes.len()];
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            if p == to {
                break;
            }
            for &e in keep {
                let (u, v, _) = g.edges[e];
                if u == p && comp[v] == comp[from] && prev[v].is_none() && v != from {
                    prev[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
        let mut walk = Vec::new();
        let mut cur = to;
        while cur != from {
            let (u, e) = prev[cur].expect("connected in component");
            walk.push(e);
            cur = u;
        }
        walk.reverse();
        walk
    };
    if e1 == e2 {
        let mut walk = vec![e1];
        walk.extend(path(g.edges[e1].1, g.edges[e1].0));
        return walk;
    }
    let mut walk = vec![e1];
    walk.extend(path(g.edges[e1].1, g.edges[e2].0));
    walk.push(e2);
    walk.extend(path(g.edges[e2].1, g.edges[e1].0));
    walk
}
