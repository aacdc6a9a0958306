//! Labelled transitions for diagrams: generator rules from transition
//! tables, structural rules for the five term formers, and LTS construction
//! with canonical-state identification.

use crate::algebra::Word;
use crate::diagram::{DiagramError, OpenHypergraph};
use crate::syntax::{GenRule, Signature, Sort, SortError, Target, Term};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// One transition of a term: `input / output` to a successor term of the
/// same sort.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Transition {
    pub input: Word,
    pub output: Word,
    pub next: Term,
}

#[derive(Debug, Error)]
pub enum SosError {
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// The full finite transition set of a single generator occurrence.
pub fn generator_transitions(
    sig: &Signature,
    symbol: &str,
    state: Option<i64>,
) -> Result<Vec<Transition>, SosError> {
    let g = sig
        .generator(symbol)
        .ok_or_else(|| SortError::UnknownGenerator(symbol.to_string()))?;
    // validate state against the state space
    sig.infer_sort(&Term::Gen { symbol: symbol.to_string(), state })?;
    let alg = &sig.algebra;
    let carrier = alg.carrier();
    let same = |st: Option<i64>| Term::Gen { symbol: symbol.to_string(), state: st };
    let mut out: Vec<Transition> = Vec::new();
    match &g.rule {
        GenRule::BDel => {
            for &k in carrier {
                out.push(Transition {
                    input: Word(vec![k]),
                    output: Word::empty(),
                    next: same(state),
                });
            }
        }
        GenRule::BCopy => {
            for &k in carrier {
                out.push(Transition {
                    input: Word(vec![k]),
                    output: Word(vec![k, k]),
                    next: same(state),
                });
            }
        }
        GenRule::BNew => {
            for &k in carrier {
                out.push(Transition {
                    input: Word::empty(),
                    output: Word(vec![k]),
                    next: same(state),
                });
            }
        }
        GenRule::BMerge => {
            for &k in carrier {
                out.push(Transition {
                    input: Word(vec![k, k]),
                    output: Word(vec![k]),
                    next: same(state),
                });
            }
        }
        GenRule::WAdd => {
            for &k in carrier {
                for &l in carrier {
                    if let Some(s) = alg.add(k, l) {
                        out.push(Transition {
                            input: Word(vec![k, l]),
                            output: Word(vec![s]),
                            next: same(state),
                        });
                    }
                }
            }
        }
        GenRule::WZero => {
            let zero = alg.zero().expect("additive structure required for wzero");
            out.push(Transition {
                input: Word::empty(),
                output: Word(vec![zero]),
                next: same(state),
            });
        }
        GenRule::WCopy => {
            for &total in carrier {
                for (k, l) in alg.splits(total) {
                    out.push(Transition {
                        input: Word(vec![total]),
                        output: Word(vec![k, l]),
                        next: same(state),
                    });
                }
            }
        }
        GenRule::WDel => {
            let zero = alg.zero().expect("additive structure required for wdel");
            out.push(Transition {
                input: Word(vec![zero]),
                output: Word::empty(),
                next: same(state),
            });
        }
        GenRule::Reg => {
            let k = state.expect("reg is stateful");
            for &l in carrier {
                out.push(Transition {
                    input: Word(vec![l]),
                    output: Word(vec![k]),
                    next: same(Some(l)),
                });
            }
        }
        GenRule::CoReg => {
            let k = state.expect("coreg is stateful");
            for &l in carrier {
                out.push(Transition {
                    input: Word(vec![k]),
                    output: Word(vec![l]),
                    next: same(Some(l)),
                });
            }
        }
        GenRule::Amp => {
            let k = state.expect("amp is stateful");
            for &l in carrier {
                if let Some(p) = alg.mul(l, k) {
                    out.push(Transition {
                        input: Word(vec![l]),
                        output: Word(vec![p]),
                        next: same(state),
                    });
                }
            }
        }
        GenRule::CoAmp => {
            let k = state.expect("coamp is stateful");
            for &l in carrier {
                if let Some(p) = alg.mul(l, k) {
                    out.push(Transition {
                        input: Word(vec![p]),
                        output: Word(vec![l]),
                        next: same(state),
                    });
                }
            }
        }
        GenRule::Table(entries) => {
            for e in entries {
                if e.state != state {
                    continue;
                }
                let next = match &e.next {
                    Target::Symbol { symbol, state } => {
                        Term::Gen { symbol: symbol.clone(), state: *state }
                    }
                    Target::Term(t) => t.clone(),
                };
                out.push(Transition {
                    input: e.input.clone(),
                    output: e.output.clone(),
                    next,
                });
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// The one-step transition set of an arbitrary sorted term, by structural
/// recursion over the five term formers.
pub fn step(t: &Term, sig: &Signature) -> Result<Vec<Transition>, SosError> {
    let mut out = match t {
        Term::Gen { symbol, state } => generator_transitions(sig, symbol, *state)?,
        Term::Id0 => vec![Transition {
            input: Word::empty(),
            output: Word::empty(),
            next: Term::Id0,
        }],
        Term::Id1 => sig
            .algebra
            .carrier()
            .iter()
            .map(|&k| Transition {
                input: Word(vec![k]),
                output: Word(vec![k]),
                next: Term::Id1,
            })
            .collect(),
        Term::Sym => {
            let carrier = sig.algebra.carrier();
            let mut v = Vec::with_capacity(carrier.len() * carrier.len());
            for &k in carrier {
                for &l in carrier {
                    v.push(Transition {
                        input: Word(vec![k, l]),
                        output: Word(vec![l, k]),
                        next: Term::Sym,
                    });
                }
            }
            v
        }
        Term::Seq(a, b) => {
            let ta = step(a, sig)?;
            let tb = step(b, sig)?;
            // join on the middle word: index the right side by its inputs
            let mut by_input: HashMap<&Word, Vec<&Transition>> = HashMap::new();
            for tr in &tb {
                by_input.entry(&tr.input).or_default().push(tr);
            }
            let mut v = Vec::new();
            for la in &ta {
                if let Some(matches) = by_input.get(&la.output) {
                    for rb in matches {
                        v.push(Transition {
                            input: la.input.clone(),
                            output: rb.output.clone(),
                            next: Term::Seq(
                                Box::new(la.next.clone()),
                                Box::new(rb.next.clone()),
                            ),
                        });
                    }
                }
            }
            v
        }
        Term::Tens(a, b) => {
            let ta = step(a, sig)?;
            let tb = step(b, sig)?;
            let mut v = Vec::with_capacity(ta.len() * tb.len());
            for la in &ta {
                for rb in &tb {
                    v.push(Transition {
                        input: la.input.concat(&rb.input),
                        output: la.output.concat(&rb.output),
                        next: Term::Tens(
                            Box::new(la.next.clone()),
                            Box::new(rb.next.clone()),
                        ),
                    });
                }
            }
            v
        }
    };
    out.sort();
    out.dedup();
    Ok(out)
}

/// A transition with the successor replaced by its canonical key; the shape
/// memoization and LTS construction work with.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct KeyedTransition {
    pub input: Word,
    pub output: Word,
    pub next_key: String,
    /// A representative term for the successor.
    pub next: Term,
}

/// Computes transition sets, memoized on the canonical key of the source
/// term — two congruent terms share one entry.
pub struct StepEngine<'a> {
    pub sig: &'a Signature,
    memo: HashMap<String, Vec<KeyedTransition>>,
}

impl<'a> StepEngine<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        StepEngine { sig, memo: HashMap::new() }
    }

    pub fn canonical_key(&self, t: &Term) -> Result<String, SosError> {
        Ok(OpenHypergraph::from_term(t, self.sig)?.canonical_form())
    }

    /// Step with successor canonicalization, deduplicated as a set of
    /// (input, output, successor key) triples.
    pub fn step_keyed(&mut self, t: &Term) -> Result<Vec<KeyedTransition>, SosError> {
        let key = self.canonical_key(t)?;
        if let Some(cached) = self.memo.get(&key) {
            return Ok(cached.clone());
        }
        let raw = step(t, self.sig)?;
        let mut seen: BTreeSet<(Word, Word, String)> = BTreeSet::new();
        let mut out: Vec<KeyedTransition> = Vec::new();
        for tr in raw {
            let next_key = self.canonical_key(&tr.next)?;
            if seen.insert((tr.input.clone(), tr.output.clone(), next_key.clone())) {
                out.push(KeyedTransition {
                    input: tr.input,
                    output: tr.output,
                    next_key,
                    next: tr.next,
                });
            }
        }
        out.sort();
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

pub const DEFAULT_MAX_STATES: usize = 10_000;
pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: DEFAULT_MAX_STATES, max_depth: DEFAULT_MAX_DEPTH }
    }
}

#[derive(Clone, Debug)]
pub struct LtsState {
    pub key: String,
    /// Representative term for the state (the first term discovered with
    /// this canonical key).
    pub term: Term,
}

/// The finite transition system grown from a root diagram, with states
/// identified up to structural congruence.
#[derive(Clone, Debug)]
pub struct Lts {
    pub sort: Sort,
    pub states: Vec<LtsState>,
    pub root: usize,
    pub edges: Vec<(usize, Word, Word, usize)>,
    pub complete: bool,
    pub limits: Limits,
}

/// BFS closure of the step relation from the root, states deduplicated by
/// canonical key, deterministic numbering by discovery order.
pub fn build_lts(root: &Term, sig: &Signature, limits: Limits) -> Result<Lts, SosError> {
    let sort = sig.infer_sort(root)?;
    let mut engine = StepEngine::new(sig);
    let root_key = engine.canonical_key(root)?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut states: Vec<LtsState> = vec![LtsState { key: root_key.clone(), term: root.clone() }];
    index.insert(root_key, 0);
    let mut edges: Vec<(usize, Word, Word, usize)> = Vec::new();
    let mut frontier: Vec<usize> = vec![0];
    let mut depth = 0usize;
    let mut complete = true;
    while !frontier.is_empty() {
        if depth >= limits.max_depth {
            complete = false;
            break;
        }
        let mut next_frontier: Vec<usize> = Vec::new();
        for &s in &frontier {
            let term = states[s].term.clone();
            let trs = engine.step_keyed(&term)?;
            for tr in trs {
                debug_assert_eq!(tr.input.len(), sort.left);
                debug_assert_eq!(tr.output.len(), sort.right);
                let target = match index.get(&tr.next_key) {
                    Some(&i) => i,
                    None => {
                        if states.len() >= limits.max_states {
                            complete = false;
                            continue;
                        }
                        let i = states.len();
                        index.insert(tr.next_key.clone(), i);
                        states.push(LtsState { key: tr.next_key.clone(), term: tr.next.clone() });
                        next_frontier.push(i);
                        i
                    }
                };
                edges.push((s, tr.input, tr.output, target));
            }
        }
        frontier = next_frontier;
        depth += 1;
    }
    edges.sort();
    edges.dedup();
    Ok(Lts { sort, states, root: 0, edges, complete, limits })
}

#[derive(Serialize)]
struct LtsJson<'a> {
    sort: [usize; 2],
    complete: bool,
    states: Vec<&'a str>,
    edges: Vec<(usize, String, String, usize)>,
}

impl Lts {
    pub fn to_json(&self) -> String {
        let doc = LtsJson {
            sort: [self.sort.left, self.sort.right],
            complete: self.complete,
            states: self.states.iter().map(|s| s.key.as_str()).collect(),
            edges: self
                .edges
                .iter()
                .map(|(s, i, o, t)| (*s, i.to_string(), o.to_string(), *t))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("LTS serialization cannot fail")
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n  rankdir=LR;\n  node [shape=circle, fontsize=10];\n");
        for (i, st) in self.states.iter().enumerate() {
            let label = crate::syntax::pretty_print(&st.term).replace('"', "\\\"");
            let shape = if i == self.root { ", shape=doublecircle" } else { "" };
            s.push_str(&format!("  s{i} [label=\"{label}\"{shape}];\n"));
        }
        for (src, input, output, tgt) in &self.edges {
            let i = if input.is_empty() { "ε".to_string() } else { input.to_string() };
            let o = if output.is_empty() { "ε".to_string() } else { output.to_string() };
            s.push_str(&format!("  s{src} -> s{tgt} [label=\"{i}/{o}\"];\n"));
        }
        s.push_str("}\n");
        s
    }

    pub fn state_of_key(&self, key: &str) -> Option<usize> {
        self.states.iter().position(|s| s.key == key)
    }

    /// Outgoing edges of a state.
    pub fn edges_from(&self, s: usize) -> impl Iterator<Item = &(usize, Word, Word, usize)> {
        self.edges.iter().filter(move |(src, _, _, _)| *src == s)
    }
}

/// The running toy coalgebra: symbols x, y, z of sort (1,2)/(1,2)/(1,1)
/// over the two-letter alphabet {a ↦ 0, b ↦ 1}, with
/// x —b/ab→ y, x —a/aa→ x, y with no transitions, z —b/a→ z.
pub fn toy_coalgebra() -> Signature {
    let json = r#"{
        "generators": [
            {"symbol": "x", "arity": 1, "coarity": 2,
             "transitions": [
                {"in": "1", "out": "01", "next": "y"},
                {"in": "0", "out": "00", "next": "x"}]},
            {"symbol": "y", "arity": 1, "coarity": 2, "transitions": []},
            {"symbol": "z", "arity": 1, "coarity": 1,
             "transitions": [{"in": "1", "out": "0", "next": "z"}]}
        ],
        "frobenius": "none"
    }"#;
    let alg = crate::algebra::LabelAlgebra::from_spec("two").expect("builtin algebra");
    crate::syntax::load_signature(json, alg).expect("toy coalgebra is well-formed")
}
