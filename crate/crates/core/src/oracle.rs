//! Brute-force ground truth: bounded exploration of the configuration graph
//! and cross-validation of built reachability automata against it.

use crate::reach::ReachTable;
use crate::trace::Trace;
use crate::tpds::Tpds;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, VecDeque};

pub type Config = (usize, Trace);

/// All one-step successors of a configuration: for each transition (p,a,w,q),
/// if `a` can be popped (it is maximal in the stack trace), push `w`.
pub fn one_step(sys: &Tpds, c: &Config) -> Vec<Config> {
    let mut out = Vec::new();
    for (p, a, w, q) in &sys.transitions {
        if *p != c.0 {
            continue;
        }
        if let Some(rest) = c.1.pop_letter(*a, &sys.alphabet) {
            let pushed = Trace::from_word(w, &sys.alphabet);
            let succ = (*q, rest.concat(&pushed, &sys.alphabet));
            if !out.contains(&succ) {
                out.push(succ);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ReachSet {
    pub configs: BTreeSet<Config>,
    /// Some successor exceeded the bound and was not explored.
    pub overflow: bool,
}

/// BFS closure of ⊢ restricted to traces of at most `bound` letters.
pub fn bounded_reach(sys: &Tpds, start: Config, bound: usize) -> ReachSet {
    let mut set = ReachSet {
        configs: BTreeSet::new(),
        overflow: start.1.len() > bound,
    };
    if set.overflow {
        return set;
    }
    let mut queue = VecDeque::from([start.clone()]);
    set.configs.insert(start);
    while let Some(c) = queue.pop_front() {
        for succ in one_step(sys, &c) {
            if succ.1.len() > bound {
                set.overflow = true;
            } else if set.configs.insert(succ.clone()) {
                queue.push_back(succ);
            }
        }
    }
    set
}

#[derive(Clone, Debug, Serialize)]
pub struct Discrepancy {
    pub from_state: String,
    pub from_trace: String,
    pub to_state: String,
    pub to_trace: String,
}

/// Cross-validation report. Hard failures are BFS-reachable pairs the
/// automaton rejects (soundness violations). Soft failures are
/// automaton-accepted pairs not confirmed by BFS within the intermediate
/// bound; runs may legitimately pass through longer traces, so these are
/// flagged for review rather than condemned.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub bound: usize,
    pub intermediate_bound: usize,
    pub pairs_checked: usize,
    pub hard_failures: Vec<Discrepancy>,
    pub soft_failures: Vec<Discrepancy>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.hard_failures.is_empty() && self.soft_failures.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "cross-validation: {} pairs checked (endpoints <= {}, intermediate <= {})\n",
            self.pairs_checked, self.bound, self.intermediate_bound
        ));
        for d in &self.hard_failures {
            out.push_str(&format!(
                "HARD: ({},{}) reachable by search but rejected by automaton ({},{})\n",
                d.from_state, d.from_trace, d.to_state, d.to_trace
            ));
        }
        for d in &self.soft_failures {
            out.push_str(&format!(
                "soft: ({},{}) -> ({},{}) accepted by automaton, unconfirmed by bounded search\n",
                d.from_state, d.from_trace, d.to_state, d.to_trace
            ));
        }
        out.push_str(&format!(
            "hard failures: {}, soft failures: {}\n",
            self.hard_failures.len(),
            self.soft_failures.len()
        ));
        out
    }
}

/// All distinct traces with at most `max_len` letters.
pub fn all_traces(sys: &Tpds, max_len: usize) -> Vec<Trace> {
    let mut seen = BTreeSet::new();
    let mut layer = vec![Vec::new()];
    for _ in 0..=max_len {
        for w in &layer {
            seen.insert(Trace::from_word(w, &sys.alphabet));
        }
        let mut next = Vec::new();
        for w in &layer {
            for l in 0..sys.alphabet.len() {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        layer = next;
    }
    seen.into_iter().collect()
}

/// Checks the reach automata against bounded search, both directions.
pub fn cross_validate(
    sys: &Tpds,
    table: &ReachTable,
    bound: usize,
    intermediate_bound: usize,
) -> ValidationReport {
    let traces = all_traces(sys, bound);
    let mut report = ValidationReport {
        bound,
        intermediate_bound,
        pairs_checked: 0,
        hard_failures: Vec::new(),
        soft_failures: Vec::new(),
    };
    let describe = |c: &Config| {
        (
            sys.state_names[c.0].clone(),
            c.1.show(&sys.alphabet),
        )
    };
    for p in 0..sys.state_count() {
        for s in &traces {
            // (i) completeness of the automaton wrt. search at the endpoint
            // bound itself (every witness run here stays within the bound).
            let found = bounded_reach(sys, (p, s.clone()), bound);
            for c in &found.configs {
                report.pairs_checked += 1;
                if !table
                    .reach(p, c.0)
                    .membership(&[s.clone(), c.1.clone()])
                    .unwrap()
                {
                    let (fs, ft) = describe(&(p, s.clone()));
                    let (ts, tt) = describe(c);
                    report.hard_failures.push(Discrepancy {
                        from_state: fs,
                        from_trace: ft,
                        to_state: ts,
                        to_trace: tt,
                    });
                }
            }
            // (ii) soundness of the automaton wrt. deeper search.
            let deeper = bounded_reach(sys, (p, s.clone()), intermediate_bound);
            for q in 0..sys.state_count() {
                for t in &traces {
                    if table.reach(p, q).membership(&[s.clone(), t.clone()]).unwrap()
                        && !deeper.configs.contains(&(q, t.clone()))
                    {
                        let (fs, ft) = describe(&(p, s.clone()));
                        let (ts, tt) = describe(&(q, t.clone()));
                        report.soft_failures.push(Discrepancy {
                            from_state: fs,
                            from_trace: ft,
                            to_state: ts,
                            to_trace: tt,
                        });
                    }
                }
            }
        }
    }
    report
}

/// Memoized successor map for repeated searches over one system.
pub struct SuccessorCache<'a> {
    sys: &'a Tpds,
    memo: HashMap<Config, Vec<Config>>,
}

impl<'a> SuccessorCache<'a> {
    pub fn new(sys: &'a Tpds) -> Self {
        SuccessorCache {
            sys,
            memo: HashMap::new(),
        }
    }

    pub fn successors(&mut self, c: &Config) -> &[Config] {
        if !self.memo.contains_key(c) {
            let succs = one_step(self.sys, c);
            self.memo.insert(c.clone(), succs);
        }
        &self.memo[c]
    }
}
