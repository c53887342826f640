//! Construction of the step and reach relations of a validated system as
//! synchronous automata: the pop case, one push case per twin class, and a
//! certified fixpoint combining the pieces.

use crate::alphabet::LetterSet;
use crate::error::{Error, Result};
use crate::nfa::{EpsilonNfa, Nfa};
use crate::relation::FnfRelation;
use crate::tpds::Tpds;
use crate::tracelang::{
    connected_loops, swap_closed, trace_closure, BlockAlphabet, Certificate, TraceClosedLang,
};

/// One building block of the reach fixpoint, tagged for provenance.
#[derive(Clone, Debug)]
pub struct Piece {
    /// "eps" for the pop case, "T<idx>" for the push case of twin class idx.
    pub tag: String,
    pub from: usize,
    pub to: usize,
    pub rel: FnfRelation,
}

/// Step and reach relations for every state pair, plus the pieces and
/// closure inventory that went into them.
#[derive(Clone, Debug)]
pub struct ReachTable {
    pub system: Tpds,
    pub blocks: BlockAlphabet,
    step: Vec<FnfRelation>,
    reach: Vec<FnfRelation>,
    pub pieces: Vec<Piece>,
    /// Fixpoint rounds until convergence.
    pub iterations: usize,
    /// Every certified closure produced during the build, by label.
    pub closures: Vec<(String, TraceClosedLang)>,
}

fn closure_of_word(word: &[usize], sys: &Tpds) -> Result<TraceClosedLang> {
    trace_closure(
        &Nfa::from_words(sys.alphabet.len(), &[word.to_vec()]),
        &sys.alphabet,
    )
}

/// step_{p,q} = ⋃ over transitions (p,a,w,q) of Id·({[a]}×{[w]}).
pub fn build_step(sys: &Tpds, blocks: &BlockAlphabet, p: usize, q: usize) -> Result<FnfRelation> {
    build_step_logged(sys, blocks, p, q, &mut Vec::new())
}

fn build_step_logged(
    sys: &Tpds,
    blocks: &BlockAlphabet,
    p: usize,
    q: usize,
    log: &mut Vec<(String, TraceClosedLang)>,
) -> Result<FnfRelation> {
    let id = FnfRelation::identity(blocks);
    let mut acc = FnfRelation::empty(blocks, 2);
    for t in &sys.transitions {
        if t.0 != p || t.3 != q {
            continue;
        }
        let k = closure_of_word(&[t.1], sys)?;
        let l = closure_of_word(&t.2, sys)?;
        acc = acc.union(&id.product_with_recognizable(&k, &l)?)?;
        log.push((format!("step.{}.{}.read", p, q), k));
        log.push((format!("step.{}.{}.push", p, q), l));
    }
    Ok(acc)
}

/// The word language of pop sequences from p to q in the ε-push sub-system:
/// states are the control states, one a-edge per transition (p′,a,ε,q′).
pub fn pop_language(eps: &Tpds, p: usize, q: usize) -> Nfa {
    let mut nfa = Nfa::new(eps.alphabet.len());
    for _ in 0..eps.state_count() {
        nfa.add_state();
    }
    nfa.initial.insert(p);
    nfa.finals.insert(q);
    for t in &eps.transitions {
        nfa.add_transition(t.0, t.1, t.3);
    }
    nfa
}

/// reach^ε_{p,q} = Id·(K×{1}) where K = [reverse(L_{p,q})] and L_{p,q} is
/// the pop-sequence language. A run pops its letters outermost-first, so the
/// erased suffix of the stack trace is the reversal of the pop sequence.
/// L is swap-closed by (P2), hence so is its reversal; the closure is
/// certified directly rather than computed.
pub fn build_reach_pop(
    eps: &Tpds,
    blocks: &BlockAlphabet,
    p: usize,
    q: usize,
) -> Result<FnfRelation> {
    build_reach_pop_logged(eps, blocks, p, q, &mut Vec::new())
}

fn build_reach_pop_logged(
    eps: &Tpds,
    blocks: &BlockAlphabet,
    p: usize,
    q: usize,
    log: &mut Vec<(String, TraceClosedLang)>,
) -> Result<FnfRelation> {
    let rev = pop_language(eps, p, q).reverse().trim();
    if !swap_closed(&rev, &eps.alphabet) {
        return Err(Error::Certificate(format!(
            "pop language for states {} -> {} is not swap-closed (commutation violated)",
            eps.state_names[p], eps.state_names[q]
        )));
    }
    let k = TraceClosedLang {
        lin: rev.minimized(),
        base: rev,
        certificate: Certificate { cap: 0 },
    };
    let unit = closure_of_word(&[], eps)?;
    let rel = FnfRelation::identity(blocks).product_with_recognizable(&k, &unit)?;
    log.push((format!("pop.{}.{}", p, q), k));
    Ok(rel)
}

/// The trace language H_a^{p,q} of stack contents writable while moving from
/// p to q, starting with top letter `a`: an ε-NFA over pairs
/// (state, current top letter) plus a sink (q,ε). Each transition
/// (r,c,udv,s) with d ∥ v contributes a uv-labeled path (r,c) → (s,d); the
/// run ends by emitting the final top letter.
pub fn build_push_h(sub: &Tpds, p: usize, q: usize, a: usize) -> Result<TraceClosedLang> {
    let letters = sub.alphabet.len();
    let mut nfa = EpsilonNfa::new(letters);
    for _ in 0..sub.state_count() * letters {
        nfa.add_state();
    }
    let sink = nfa.add_state();
    let node = |r: usize, c: usize| r * letters + c;
    for c in 0..letters {
        nfa.transitions.insert((node(q, c), c, sink));
    }
    for t in &sub.transitions {
        for (u, d, v) in sub.decompositions(&t.2) {
            let mut word: Vec<usize> = u.to_vec();
            word.extend_from_slice(v);
            if word.is_empty() {
                nfa.eps.insert((node(t.0, t.1), node(t.3, d)));
            } else {
                let mut cur = node(t.0, t.1);
                for (i, &l) in word.iter().enumerate() {
                    let next = if i + 1 == word.len() {
                        node(t.3, d)
                    } else {
                        nfa.add_state()
                    };
                    nfa.transitions.insert((cur, l, next));
                    cur = next;
                }
            }
        }
    }
    nfa.initial.insert(node(p, a));
    nfa.finals.insert(sink);
    let flat = nfa.eliminate().trim();
    if let Some(cycle) = connected_loops(&flat, &sub.alphabet) {
        return Err(Error::Precondition(format!(
            "push automaton has a loop with disconnected alphabet {} (system not loop-connected)",
            sub.alphabet.show_word(&cycle)
        )));
    }
    trace_closure(&flat, &sub.alphabet)
}

/// reach^T_{p,q} = (Id iff p = q) ∪ ⋃_{a ∈ T} Id·({[a]} × H_a^{p,q}).
pub fn build_reach_push(
    sub: &Tpds,
    class: LetterSet,
    blocks: &BlockAlphabet,
    p: usize,
    q: usize,
) -> Result<FnfRelation> {
    build_reach_push_logged(sub, class, blocks, p, q, &mut Vec::new())
}

fn build_reach_push_logged(
    sub: &Tpds,
    class: LetterSet,
    blocks: &BlockAlphabet,
    p: usize,
    q: usize,
    log: &mut Vec<(String, TraceClosedLang)>,
) -> Result<FnfRelation> {
    let id = FnfRelation::identity(blocks);
    let mut acc = if p == q {
        id.clone()
    } else {
        FnfRelation::empty(blocks, 2)
    };
    for a in class.iter() {
        let h = build_push_h(sub, p, q, a)?;
        let k = closure_of_word(&[a], sub)?;
        acc = acc.union(&id.product_with_recognizable(&k, &h)?)?;
        log.push((format!("push.{}.{}.{}", p, q, sub.alphabet.name(a)), h));
        log.push((format!("push.{}.{}.top", p, q), k));
    }
    Ok(acc)
}

impl ReachTable {
    pub fn step(&self, p: usize, q: usize) -> &FnfRelation {
        &self.step[p * self.system.state_count() + q]
    }

    pub fn reach(&self, p: usize, q: usize) -> &FnfRelation {
        &self.reach[p * self.system.state_count() + q]
    }

    /// Builds the full table for a checked, saturated, loop-connected system:
    /// constructs every piece, then iterates
    /// R⁰(p,p) = Id, R^{i+1}(p,q) = R^i(p,q) ∪ ⋃_r R^i(p,r)·π(r,q)
    /// until every entry stabilizes under canonical equivalence.
    pub fn build(sys: &Tpds) -> Result<ReachTable> {
        if !(sys.flags.checked_p1
            && sys.flags.checked_p2
            && sys.flags.saturated
            && sys.flags.loop_connected)
        {
            return Err(Error::Precondition(
                "reach construction needs a system checked for (P1), (P2), saturated, \
                 and verified loop-connected"
                    .into(),
            ));
        }
        let blocks = BlockAlphabet::new(&sys.alphabet);
        let n = sys.state_count();
        let mut closures = Vec::new();

        let mut step = Vec::with_capacity(n * n);
        for p in 0..n {
            for q in 0..n {
                step.push(build_step_logged(sys, &blocks, p, q, &mut closures)?);
            }
        }

        let (eps, per_class) = sys.split();
        let mut pieces = Vec::new();
        for r in 0..n {
            for s in 0..n {
                pieces.push(Piece {
                    tag: "eps".into(),
                    from: r,
                    to: s,
                    rel: build_reach_pop_logged(&eps, &blocks, r, s, &mut closures)?,
                });
                for (idx, (class, sub)) in per_class.iter().enumerate() {
                    if sub.transitions.is_empty() {
                        continue;
                    }
                    pieces.push(Piece {
                        tag: format!("T{}", idx),
                        from: r,
                        to: s,
                        rel: build_reach_push_logged(sub, *class, &blocks, r, s, &mut closures)?,
                    });
                }
            }
        }

        let id = FnfRelation::identity(&blocks);
        let mut reach: Vec<FnfRelation> = (0..n * n)
            .map(|i| {
                if i / n == i % n {
                    id.clone()
                } else {
                    FnfRelation::empty(&blocks, 2)
                }
            })
            .collect();
        let mut iterations = 0;
        loop {
            iterations += 1;
            let mut next = reach.clone();
            for p in 0..n {
                for piece in &pieces {
                    let grown =
                        next[p * n + piece.to].union(&reach[p * n + piece.from].compose(&piece.rel)?)?;
                    next[p * n + piece.to] = grown;
                }
            }
            let stable = next
                .iter()
                .zip(reach.iter())
                .all(|(a, b)| a.is_equivalent(b));
            reach = next;
            if stable {
                break;
            }
        }

        Ok(ReachTable {
            system: sys.clone(),
            blocks,
            step,
            reach,
            pieces,
            iterations,
            closures,
        })
    }
}
