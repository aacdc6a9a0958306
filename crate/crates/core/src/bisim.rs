//! Strong bisimilarity by partition refinement, plus the semantic checks
//! built on it: the special-Frobenius axiom suite, random compositionality
//! probing, and the copy-naturality counterexample.

use crate::algebra::{LabelAlgebra, Word};
use crate::diagram::congruent;
use crate::sos::{build_lts, Limits, Lts, SosError};
use crate::syntax::{
    cw_signature, gen, id_n, seq, tens, FrobeniusMode, GenRule, Generator, Signature, SortError,
    Target, TableEntry, Term,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BisimError {
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error("sort mismatch: left term has sort {0}, right term has sort {1}")]
    SortMismatch(crate::syntax::Sort, crate::syntax::Sort),
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error(transparent)]
    Signature(#[from] crate::syntax::SignatureError),
}

/// Outcome of a bisimilarity check over the disjoint union of two LTSs.
#[derive(Clone, Debug, Serialize)]
pub struct BisimResult {
    pub related: bool,
    /// Block id per disjoint-union state (first LTS's states, then the
    /// second's).
    pub partition: Vec<usize>,
    /// On failure, a shortest trace enabled by exactly one side, when the
    /// difference is observable at trace level (it is for all checks here).
    pub witness: Option<Vec<(String, String)>>,
    pub complete_inputs: bool,
    pub lts_sizes: (usize, usize),
}

/// Decide strong bisimilarity of the roots of two LTSs.
pub fn bisimilar_lts(l1: &Lts, l2: &Lts) -> BisimResult {
    bisimilar_lts_opt(l1, l2, true)
}

/// As [`bisimilar_lts`], optionally skipping witness extraction.
pub fn bisimilar_lts_opt(l1: &Lts, l2: &Lts, want_witness: bool) -> BisimResult {
    let n1 = l1.states.len();
    let n = n1 + l2.states.len();
    let mut edges: Vec<(usize, Word, Word, usize)> = l1.edges.clone();
    for (s, i, o, t) in &l2.edges {
        edges.push((s + n1, i.clone(), o.clone(), t + n1));
    }
    let partition = refine(n, &edges);
    debug_assert!(is_bisimulation(&partition, n, &edges));
    let related = partition[l1.root] == partition[n1 + l2.root];
    let witness = if related || !want_witness {
        None
    } else {
        trace_witness(l1, l2).map(|w| {
            w.into_iter()
                .map(|(i, o)| (i.to_string(), o.to_string()))
                .collect()
        })
    };
    BisimResult {
        related,
        partition,
        witness,
        complete_inputs: l1.complete && l2.complete,
        lts_sizes: (n1, n - n1),
    }
}

/// Build both LTSs and decide bisimilarity of the two terms.
pub fn bisimilar(
    t1: &Term,
    t2: &Term,
    sig: &Signature,
    limits: Limits,
) -> Result<BisimResult, BisimError> {
    bisimilar_opt(t1, t2, sig, limits, true)
}

/// As [`bisimilar`], optionally skipping witness extraction.
pub fn bisimilar_opt(
    t1: &Term,
    t2: &Term,
    sig: &Signature,
    limits: Limits,
    want_witness: bool,
) -> Result<BisimResult, BisimError> {
    let s1 = sig.infer_sort(t1)?;
    let s2 = sig.infer_sort(t2)?;
    if s1 != s2 {
        return Err(BisimError::SortMismatch(s1, s2));
    }
    let l1 = build_lts(t1, sig, limits)?;
    let l2 = build_lts(t2, sig, limits)?;
    Ok(bisimilar_lts_opt(&l1, &l2, want_witness))
}

// Kanellakis–Smolka: split blocks by their outgoing (input, output, target
// block) signatures until stable.
fn refine(n: usize, edges: &[(usize, Word, Word, usize)]) -> Vec<usize> {
    let mut block: Vec<usize> = vec![0; n];
    let mut count = 1usize;
    loop {
        let mut sigs: Vec<BTreeSet<(Word, Word, usize)>> = vec![BTreeSet::new(); n];
        for (s, i, o, t) in edges {
            sigs[*s].insert((i.clone(), o.clone(), block[*t]));
        }
        let mut renumber: BTreeMap<(usize, &BTreeSet<(Word, Word, usize)>), usize> =
            BTreeMap::new();
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for s in 0..n {
            let key = (block[s], &sigs[s]);
            let id = renumber.len();
            let b = *renumber.entry(key).or_insert(id);
            next.push(b);
        }
        let new_count = renumber.len();
        block = next;
        if new_count == count {
            return block;
        }
        count = new_count;
    }
}

// Independent post-validation: every pair of same-block states matches each
// other's transitions into same-block targets.
fn is_bisimulation(block: &[usize], n: usize, edges: &[(usize, Word, Word, usize)]) -> bool {
    let mut out: Vec<Vec<(&Word, &Word, usize)>> = vec![Vec::new(); n];
    for (s, i, o, t) in edges {
        out[*s].push((i, o, block[*t]));
    }
    for s in 0..n {
        for t in 0..n {
            if block[s] != block[t] {
                continue;
            }
            for &(i, o, tb) in &out[s] {
                if !out[t].iter().any(|&(i2, o2, tb2)| i2 == i && o2 == o && tb2 == tb) {
                    return false;
                }
            }
        }
    }
    true
}

// Shortest trace separating the two roots, if any, by BFS over pairs of
// determinized state sets. Bounded: bisimilarity differences need not be
// observable at trace level, so the search gives up after a node budget and
// returns None.
fn trace_witness(l1: &Lts, l2: &Lts) -> Option<Vec<(Word, Word)>> {
    const NODE_BUDGET: usize = 20_000;
    let labels: BTreeSet<(Word, Word)> = l1
        .edges
        .iter()
        .chain(l2.edges.iter())
        .map(|(_, i, o, _)| (i.clone(), o.clone()))
        .collect();
    let index = |lts: &Lts| -> Vec<BTreeMap<(Word, Word), Vec<usize>>> {
        let mut by_src: Vec<BTreeMap<(Word, Word), Vec<usize>>> =
            vec![BTreeMap::new(); lts.states.len()];
        for (s, i, o, t) in &lts.edges {
            by_src[*s].entry((i.clone(), o.clone())).or_default().push(*t);
        }
        by_src
    };
    let ix1 = index(l1);
    let ix2 = index(l2);
    let post = |ix: &[BTreeMap<(Word, Word), Vec<usize>>],
                set: &[usize],
                label: &(Word, Word)|
     -> Vec<usize> {
        let mut next: BTreeSet<usize> = BTreeSet::new();
        for &s in set {
            if let Some(ts) = ix[s].get(label) {
                next.extend(ts.iter().copied());
            }
        }
        next.into_iter().collect()
    };
    let start = (vec![l1.root], vec![l2.root]);
    let mut seen: HashSet<(Vec<usize>, Vec<usize>)> = HashSet::new();
    seen.insert(start.clone());
    let mut queue: VecDeque<(Vec<usize>, Vec<usize>, Vec<(Word, Word)>)> = VecDeque::new();
    queue.push_back((start.0, start.1, Vec::new()));
    let mut visited = 0usize;
    while let Some((a, b, path)) = queue.pop_front() {
        visited += 1;
        if visited > NODE_BUDGET {
            return None;
        }
        for label in &labels {
            let na = post(&ix1, &a, label);
            let nb = post(&ix2, &b, label);
            if na.is_empty() && nb.is_empty() {
                continue;
            }
            let mut next_path = path.clone();
            next_path.push(label.clone());
            if na.is_empty() != nb.is_empty() {
                return Some(next_path);
            }
            if seen.insert((na.clone(), nb.clone())) {
                queue.push_back((na, nb, next_path));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Frobenius axiom suite
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub related: bool,
    pub witness: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrobeniusReport {
    pub mode: String,
    pub algebra: String,
    pub all_pass: bool,
    pub complete: bool,
    pub axioms: Vec<AxiomCheck>,
}

/// The eleven special-Frobenius-bimonoid equations for the four structure
/// generators, read in the given mode, each checked up to bisimilarity.
pub fn check_frobenius_axioms(
    mode: FrobeniusMode,
    algebra: LabelAlgebra,
    limits: Limits,
) -> Result<FrobeniusReport, BisimError> {
    let mode_name = match mode {
        FrobeniusMode::Black => "black",
        FrobeniusMode::White => "white",
        _ => panic!("check_frobenius_axioms requires black or white"),
    };
    let algebra_name = algebra.name().to_string();
    let sig = cw_signature(algebra, mode)?;
    let copy = gen("copy");
    let del = gen("del");
    let merge = gen("merge");
    let unit = gen("unit");
    let id = Term::Id1;
    let frob_rhs = seq(merge.clone(), copy.clone());
    let axioms: Vec<(&str, Term, Term)> = vec![
        (
            "comonoid-assoc",
            seq(copy.clone(), tens(copy.clone(), id.clone())),
            seq(copy.clone(), tens(id.clone(), copy.clone())),
        ),
        ("comonoid-comm", seq(copy.clone(), Term::Sym), copy.clone()),
        (
            "comonoid-unit-l",
            seq(copy.clone(), tens(del.clone(), id.clone())),
            id.clone(),
        ),
        (
            "comonoid-unit-r",
            seq(copy.clone(), tens(id.clone(), del.clone())),
            id.clone(),
        ),
        (
            "monoid-assoc",
            seq(tens(merge.clone(), id.clone()), merge.clone()),
            seq(tens(id.clone(), merge.clone()), merge.clone()),
        ),
        ("monoid-comm", seq(Term::Sym, merge.clone()), merge.clone()),
        (
            "monoid-unit-l",
            seq(tens(unit.clone(), id.clone()), merge.clone()),
            id.clone(),
        ),
        (
            "monoid-unit-r",
            seq(tens(id.clone(), unit.clone()), merge.clone()),
            id.clone(),
        ),
        ("special", seq(copy.clone(), merge.clone()), id.clone()),
        (
            "frobenius-l",
            seq(tens(copy.clone(), id.clone()), tens(id.clone(), merge.clone())),
            frob_rhs.clone(),
        ),
        (
            "frobenius-r",
            seq(tens(id.clone(), copy.clone()), tens(merge.clone(), id.clone())),
            frob_rhs,
        ),
    ];
    let mut checks = Vec::new();
    let mut all_pass = true;
    let mut complete = true;
    for (name, lhs, rhs) in axioms {
        let res = bisimilar(&lhs, &rhs, &sig, limits)?;
        all_pass &= res.related;
        complete &= res.complete_inputs;
        checks.push(AxiomCheck {
            name: name.to_string(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            related: res.related,
            witness: res.witness,
        });
    }
    Ok(FrobeniusReport {
        mode: mode_name.to_string(),
        algebra: algebra_name,
        all_pass,
        complete,
        axioms: checks,
    })
}

// ---------------------------------------------------------------------------
// Compositionality probe
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ProbeViolation {
    pub kind: String,
    pub a: String,
    pub b: String,
    pub context: String,
    pub witness: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub pairs_tested: usize,
    pub skipped: usize,
    pub violations: Vec<ProbeViolation>,
    pub seed: u64,
}

/// Random sorted term of the given sort, built by recursive splitting;
/// always succeeds because (n, m) can be bridged by deleting all inputs and
/// creating all outputs.
pub fn random_term(sort: (usize, usize), size: usize, sig: &Signature, rng: &mut ChaCha8Rng) -> Term {
    let (n, m) = sort;
    if size == 0 || rng.gen_bool(0.25) {
        // base case: a single generator if one fits, else a bridge
        let fits: Vec<&Generator> = sig
            .generators()
            .filter(|g| g.arity == n && g.coarity == m)
            .collect();
        if !fits.is_empty() && rng.gen_bool(0.8) {
            let g = fits[rng.gen_range(0..fits.len())];
            let state = g
                .state_space
                .as_ref()
                .map(|space| space[rng.gen_range(0..space.len())]);
            return Term::Gen { symbol: g.symbol.clone(), state };
        }
        if n == m {
            return id_n(n);
        }
        // kill all inputs, spawn all outputs
        let kill = sig
            .generators()
            .find(|g| g.arity == 1 && g.coarity == 0)
            .map(|g| g.symbol.clone())
            .unwrap_or_else(|| "bdel".into());
        let spawn = sig
            .generators()
            .find(|g| g.arity == 0 && g.coarity == 1)
            .map(|g| g.symbol.clone())
            .unwrap_or_else(|| "bnew".into());
        let left = (0..n).map(|_| gen(&kill)).fold(Term::Id0, tens);
        let right = (0..m).map(|_| gen(&spawn)).fold(Term::Id0, tens);
        return seq(left, right);
    }
    // split the remaining budget strictly, so recursion depth is bounded by
    // the initial size
    let rest = size - 1;
    if rng.gen_bool(0.5) {
        // sequential split with a small middle interface
        let mid = rng.gen_range(0..=2usize);
        let a = random_term((n, mid), rest / 2, sig, rng);
        let b = random_term((mid, m), rest - rest / 2, sig, rng);
        seq(a, b)
    } else {
        let n1 = rng.gen_range(0..=n);
        let m1 = rng.gen_range(0..=m);
        let a = random_term((n1, m1), rest / 2, sig, rng);
        let b = random_term((n - n1, m - m1), rest - rest / 2, sig, rng);
        tens(a, b)
    }
}

/// A structurally congruent variant of a term, produced by random
/// applications of the monoidal-category equations.
pub fn congruent_variant(t: &Term, rng: &mut ChaCha8Rng, sig: &Signature, depth: usize) -> Term {
    if depth == 0 {
        return t.clone();
    }
    let rewritten = match (rng.gen_range(0..6), t) {
        // reassociate ;
        (0, Term::Seq(a, b)) => {
            if let Term::Seq(b1, b2) = &**b {
                seq(seq((**a).clone(), (**b1).clone()), (**b2).clone())
            } else if let Term::Seq(a1, a2) = &**a {
                seq((**a1).clone(), seq((**a2).clone(), (**b).clone()))
            } else {
                t.clone()
            }
        }
        // reassociate *
        (1, Term::Tens(a, b)) => {
            if let Term::Tens(b1, b2) = &**b {
                tens(tens((**a).clone(), (**b1).clone()), (**b2).clone())
            } else if let Term::Tens(a1, a2) = &**a {
                tens((**a1).clone(), tens((**a2).clone(), (**b).clone()))
            } else {
                t.clone()
            }
        }
        // insert a unit on the left or right of ;
        (2, _) => match sig.infer_sort(t) {
            Ok(s) => {
                if rng.gen_bool(0.5) {
                    seq(id_n(s.left), t.clone())
                } else {
                    seq(t.clone(), id_n(s.right))
                }
            }
            Err(_) => t.clone(),
        },
        // strip a unit
        (3, Term::Seq(a, b)) => {
            let is_id = |x: &Term| matches!(x, Term::Id0 | Term::Id1);
            if is_id(a) {
                (**b).clone()
            } else if is_id(b) {
                (**a).clone()
            } else {
                t.clone()
            }
        }
        // pad with the monoidal unit
        (4, _) => {
            if rng.gen_bool(0.5) {
                tens(Term::Id0, t.clone())
            } else {
                tens(t.clone(), Term::Id0)
            }
        }
        // interchange: (a;b) * (c;d) -> (a*c) ; (b*d)
        (5, Term::Tens(l, r)) => match (&**l, &**r) {
            (Term::Seq(a, b), Term::Seq(c, d)) => seq(
                tens((**a).clone(), (**c).clone()),
                tens((**b).clone(), (**d).clone()),
            ),
            _ => t.clone(),
        },
        _ => t.clone(),
    };
    // recurse into children of the (possibly rewritten) term
    let descend = |x: &Term, rng: &mut ChaCha8Rng| congruent_variant(x, rng, sig, depth - 1);
    match &rewritten {
        Term::Seq(a, b) => {
            let a2 = descend(a, rng);
            let b2 = descend(b, rng);
            seq(a2, b2)
        }
        Term::Tens(a, b) => {
            let a2 = descend(a, rng);
            let b2 = descend(b, rng);
            tens(a2, b2)
        }
        other => other.clone(),
    }
}

/// Random compositionality check: bisimilar pairs stay bisimilar in
/// sequential and parallel contexts.
pub fn congruence_probe(
    sig: &Signature,
    samples: usize,
    max_size: usize,
    seed: u64,
    limits: Limits,
) -> Result<ProbeReport, BisimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs_tested = 0usize;
    let mut skipped = 0usize;
    let mut violations: Vec<ProbeViolation> = Vec::new();
    for round in 0..samples {
        let n = rng.gen_range(0..=2usize);
        let m = rng.gen_range(0..=2usize);
        let size = rng.gen_range(1..=max_size);
        let a = random_term((n, m), size, sig, &mut rng);
        // every second round uses a rewrite-generated pair (congruent, hence
        // bisimilar by construction); the others sample independently and
        // filter
        let b = if round % 2 == 0 {
            congruent_variant(&a, &mut rng, sig, 4)
        } else {
            random_term((n, m), rng.gen_range(1..=max_size), sig, &mut rng)
        };
        if round % 2 == 0 {
            debug_assert!(congruent(&a, &b, sig).unwrap_or(false));
        }
        let base = match bisimilar_opt(&a, &b, sig, limits, round % 2 == 0) {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        if !base.complete_inputs {
            skipped += 1;
            continue;
        }
        if !base.related {
            if round % 2 == 0 {
                // congruent pairs must be bisimilar
                violations.push(ProbeViolation {
                    kind: "congruent-but-not-bisimilar".into(),
                    a: a.to_string(),
                    b: b.to_string(),
                    context: String::new(),
                    witness: base.witness,
                });
            }
            continue;
        }
        pairs_tested += 1;
        // sequential context: c ; a ; d vs c ; b ; d
        let p = rng.gen_range(0..=2usize);
        let q = rng.gen_range(0..=2usize);
        let c = random_term((p, n), 2, sig, &mut rng);
        let d = random_term((m, q), 2, sig, &mut rng);
        let ctx_a = seq(seq(c.clone(), a.clone()), d.clone());
        let ctx_b = seq(seq(c.clone(), b.clone()), d.clone());
        match bisimilar(&ctx_a, &ctx_b, sig, limits) {
            Ok(r) if r.complete_inputs && !r.related => violations.push(ProbeViolation {
                kind: "seq-context".into(),
                a: a.to_string(),
                b: b.to_string(),
                context: format!("{} ; _ ; {}", c, d),
                witness: r.witness,
            }),
            Ok(_) => {}
            Err(_) => skipped += 1,
        }
        // parallel context: a * e vs b * e
        let e = random_term((rng.gen_range(0..=1), rng.gen_range(0..=1)), 2, sig, &mut rng);
        match bisimilar(&tens(a.clone(), e.clone()), &tens(b.clone(), e.clone()), sig, limits) {
            Ok(r) if r.complete_inputs && !r.related => violations.push(ProbeViolation {
                kind: "tens-context".into(),
                a: a.to_string(),
                b: b.to_string(),
                context: format!("_ * {}", e),
                witness: r.witness,
            }),
            Ok(_) => {}
            Err(_) => skipped += 1,
        }
    }
    Ok(ProbeReport { samples, pairs_tested, skipped, violations, seed })
}

// ---------------------------------------------------------------------------
// Copy-naturality counterexample
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct LawvereReport {
    pub related: bool,
    pub seq_outputs: Vec<String>,
    pub tens_outputs: Vec<String>,
    pub witness: Option<Vec<(String, String)>>,
}

/// A nondeterministic source `d : (0,1)` emitting `a` or `b` makes copying
/// after the fact (`d ; copy`) strictly less expressive than duplicating the
/// source (`d * d`): naturality of the comonoid cannot be imposed.
pub fn lawvere_counterexample(limits: Limits) -> Result<LawvereReport, BisimError> {
    let alg = LabelAlgebra::from_spec("two").expect("builtin algebra");
    let mut sig = Signature::new(alg, FrobeniusMode::Black);
    // letters: a ↦ 0, b ↦ 1
    sig.add_generator(Generator {
        symbol: "d".into(),
        arity: 0,
        coarity: 1,
        state_space: None,
        rule: GenRule::Table(vec![
            TableEntry {
                state: None,
                input: Word::empty(),
                output: Word(vec![0]),
                next: Target::Symbol { symbol: "d".into(), state: None },
            },
            TableEntry {
                state: None,
                input: Word::empty(),
                output: Word(vec![1]),
                next: Target::Symbol { symbol: "d".into(), state: None },
            },
        ]),
    })
    .expect("fresh symbol");
    sig.add_generator(Generator {
        symbol: "copy".into(),
        arity: 1,
        coarity: 2,
        state_space: None,
        rule: GenRule::BCopy,
    })
    .expect("fresh symbol");
    let lhs = seq(gen("d"), gen("copy"));
    let rhs = tens(gen("d"), gen("d"));
    let letters = |t: &Term| -> Result<Vec<String>, BisimError> {
        let trs = crate::sos::step(t, &sig)?;
        let mut outs: BTreeSet<String> = BTreeSet::new();
        for tr in trs {
            outs.insert(
                tr.output
                    .0
                    .iter()
                    .map(|&l| if l == 0 { 'a' } else { 'b' })
                    .collect(),
            );
        }
        Ok(outs.into_iter().collect())
    };
    let seq_outputs = letters(&lhs)?;
    let tens_outputs = letters(&rhs)?;
    let res = bisimilar(&lhs, &rhs, &sig, limits)?;
    Ok(LawvereReport {
        related: res.related,
        seq_outputs,
        tens_outputs,
        witness: res.witness,
    })
}
