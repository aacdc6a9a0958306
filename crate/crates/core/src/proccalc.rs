//! A small process calculus with declarations, step semantics in two
//! synchronisation disciplines (Hoare and Milner), an encoding of typed
//! processes into diagrams over the four structure generators, and an
//! automated check that the encoding preserves and reflects transitions.

use crate::algebra::{LabelAlgebra, Word};
use crate::bisim::{bisimilar_opt, BisimError};
use crate::diagram::congruent;
use crate::sos::Limits;
use crate::syntax::{
    cw_signature, gen, id_n, perm_term, seq, tens, FrobeniusMode, GenRule, Generator, Signature,
    SignatureError, TableEntry, Target, Term,
};
use indexmap::IndexMap;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Hoare,
    Milner,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Hoare => "hoare",
            Mode::Milner => "milner",
        })
    }
}

/// A finitely supported permutation of name indices, kept as the syntactic
/// list of transpositions (applied left to right).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Perm {
    pairs: Vec<(usize, usize)>,
}

impl Perm {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self, ProcError> {
        for &(a, b) in &pairs {
            if a == 0 || b == 0 || a == b {
                return Err(ProcError::BadPermutation(a, b));
            }
        }
        Ok(Perm { pairs })
    }

    pub fn apply(&self, i: usize) -> usize {
        self.pairs.iter().fold(i, |x, &(a, b)| {
            if x == a {
                b
            } else if x == b {
                a
            } else {
                x
            }
        })
    }

    pub fn apply_inverse(&self, i: usize) -> usize {
        self.pairs.iter().rev().fold(i, |x, &(a, b)| {
            if x == a {
                b
            } else if x == b {
                a
            } else {
                x
            }
        })
    }

    /// The greatest index the permutation moves; 0 for the identity.
    pub fn degree(&self) -> usize {
        let bound = self
            .pairs
            .iter()
            .map(|&(a, b)| a.max(b))
            .max()
            .unwrap_or(0);
        (1..=bound).rev().find(|&i| self.apply(i) != i).unwrap_or(0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Process {
    Par(Box<Process>, Box<Process>),
    Nu(usize, Box<Process>),
    Var(String),
    Perm(Box<Process>, Perm),
}

impl std::fmt::Display for Process {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // `|` is lowest, `nu` prefixes, `[perm ...]` binds tightest
        match self {
            Process::Par(a, b) => {
                write!(f, "{a} | ")?;
                if matches!(**b, Process::Par(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Process::Nu(i, p) => {
                if matches!(**p, Process::Par(..)) {
                    write!(f, "nu({i}) ({p})")
                } else {
                    write!(f, "nu({i}) {p}")
                }
            }
            Process::Var(name) => f.write_str(name),
            Process::Perm(p, perm) => {
                if matches!(**p, Process::Par(..) | Process::Nu(..)) {
                    write!(f, "({p})")?;
                } else {
                    write!(f, "{p}")?;
                }
                write!(f, " [perm ")?;
                for (k, (a, b)) in perm.pairs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a} {b}")?;
                }
                write!(f, "]")
            }
        }
    }
}

pub fn par(a: Process, b: Process) -> Process {
    Process::Par(Box::new(a), Box::new(b))
}

pub fn nu(i: usize, p: Process) -> Process {
    Process::Nu(i, Box::new(p))
}

pub fn var(name: &str) -> Process {
    Process::Var(name.to_string())
}

pub fn perm(p: Process, pairs: Vec<(usize, usize)>) -> Process {
    Process::Perm(Box::new(p), Perm { pairs })
}

/// A finite-support action: name index to monoid value, zeros omitted.
/// Hoare reads values as set membership (any nonzero ↦ present), Milner as
/// integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Action {
    map: BTreeMap<usize, i64>,
}

impl Action {
    pub fn zero() -> Self {
        Action::default()
    }

    pub fn from_pairs(pairs: &[(usize, i64)]) -> Self {
        let mut map = BTreeMap::new();
        for &(i, v) in pairs {
            if v != 0 {
                map.insert(i, v);
            }
        }
        Action { map }
    }

    pub fn get(&self, i: usize) -> i64 {
        self.map.get(&i).copied().unwrap_or(0)
    }

    /// al(α): the support.
    pub fn support(&self) -> BTreeSet<usize> {
        self.map.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.map.is_empty()
    }

    fn normalized_set(&self) -> Action {
        Action {
            map: self.map.keys().map(|&k| (k, 1)).collect(),
        }
    }

    fn union(&self, other: &Action) -> Action {
        let mut map = self.map.clone();
        for (&k, _) in &other.map {
            map.insert(k, 1);
        }
        Action { map }.normalized_set()
    }

    fn sum(&self, other: &Action) -> Action {
        let mut map = self.map.clone();
        for (&k, &v) in &other.map {
            let e = map.entry(k).or_insert(0);
            *e += v;
            if *e == 0 {
                map.remove(&k);
            }
        }
        Action { map }
    }

    fn without(&self, i: usize) -> Action {
        let mut map = self.map.clone();
        map.remove(&i);
        Action { map }
    }

    /// `α∘σ`: the action reading position j as `α(σ(j))`.
    fn compose(&self, p: &Perm) -> Action {
        let map = self
            .map
            .iter()
            .map(|(&k, &v)| (p.apply_inverse(k), v))
            .collect();
        Action { map }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.map.is_empty() {
            return f.write_str("0");
        }
        f.write_str("{")?;
        for (k, (i, v)) in self.map.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            match v {
                1 => write!(f, "a{i}")?,
                -1 => write!(f, "-a{i}")?,
                v => write!(f, "{v}a{i}")?,
            }
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug)]
pub struct Declaration {
    pub name: String,
    pub arity: usize,
    pub branches: Vec<(Action, Process)>,
}

#[derive(Clone, Debug, Default)]
pub struct Declarations {
    decls: IndexMap<String, Declaration>,
}

#[derive(Debug, Error)]
pub enum ProcError {
    #[error("parse error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown process variable `{0}`")]
    UnknownVariable(String),
    #[error("transposition ({0} {1}) is not valid: indices are positive and distinct")]
    BadPermutation(usize, usize),
    #[error("declaration `{name}` does not cover its declared names: missing {missing:?}")]
    Coverage { name: String, missing: Vec<usize> },
    #[error("context width {given} is below the minimal width {required}")]
    WidthTooSmall { required: usize, given: usize },
    #[error("restriction of a{index} is not topmost: the body needs width {inner}")]
    BadRestriction { index: usize, inner: usize },
    #[error("co-action on a{index} is not allowed in hoare mode")]
    NegativeHoare { index: usize },
    #[error("action value {value} exceeds the milner label window ±{bound}")]
    LabelOutOfWindow { value: i64, bound: i64 },
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Bisim(#[from] Box<BisimError>),
}

impl From<BisimError> for ProcError {
    fn from(e: BisimError) -> Self {
        ProcError::Bisim(Box::new(e))
    }
}

impl Declarations {
    pub fn get(&self, name: &str) -> Result<&Declaration, ProcError> {
        self.decls
            .get(name)
            .ok_or_else(|| ProcError::UnknownVariable(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Declaration> {
        self.decls.values()
    }

    pub fn insert(&mut self, d: Declaration) {
        self.decls.insert(d.name.clone(), d);
    }

    /// Well-formedness: every declared name a1..a_ar(f) appears in some
    /// branch action or branch body alphabet. Bodies are read with the least
    /// fixed point of the declared alphabets, so a recursive call does not
    /// justify its own names.
    pub fn check_wellformed(&self) -> Result<(), ProcError> {
        fn al_fp(
            p: &Process,
            env: &BTreeMap<String, BTreeSet<usize>>,
        ) -> Result<BTreeSet<usize>, ProcError> {
            Ok(match p {
                Process::Var(f) => env
                    .get(f)
                    .cloned()
                    .ok_or_else(|| ProcError::UnknownVariable(f.clone()))?,
                Process::Par(a, b) => {
                    let mut s = al_fp(a, env)?;
                    s.extend(al_fp(b, env)?);
                    s
                }
                Process::Nu(i, a) => {
                    let mut s = al_fp(a, env)?;
                    s.remove(i);
                    s
                }
                Process::Perm(a, sigma) => al_fp(a, env)?
                    .into_iter()
                    .map(|k| sigma.apply_inverse(k))
                    .collect(),
            })
        }
        let mut env: BTreeMap<String, BTreeSet<usize>> = self
            .decls
            .keys()
            .map(|k| (k.clone(), BTreeSet::new()))
            .collect();
        loop {
            let mut changed = false;
            for d in self.decls.values() {
                let mut covered: BTreeSet<usize> = BTreeSet::new();
                for (act, body) in &d.branches {
                    covered.extend(act.support());
                    covered.extend(al_fp(body, &env)?);
                }
                covered.retain(|&i| i <= d.arity);
                let cur = env.get_mut(&d.name).expect("seeded");
                if covered != *cur {
                    *cur = covered;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for d in self.decls.values() {
            let covered = &env[&d.name];
            let missing: Vec<usize> =
                (1..=d.arity).filter(|i| !covered.contains(i)).collect();
            if !missing.is_empty() {
                return Err(ProcError::Coverage { name: d.name.clone(), missing });
            }
        }
        Ok(())
    }

    /// Reject co-actions when running in hoare mode.
    pub fn check_mode(&self, mode: Mode) -> Result<(), ProcError> {
        if mode == Mode::Hoare {
            for d in self.decls.values() {
                for (act, _) in &d.branches {
                    if let Some((&i, _)) = act.map.iter().find(|(_, &v)| v < 0) {
                        return Err(ProcError::NegativeHoare { index: i });
                    }
                }
            }
        }
        Ok(())
    }
}

/// al(P): Par unions, Nu hides, Var takes the declared names, Perm takes the
/// preimage (so that transition labels stay within the alphabet).
pub fn alphabet(p: &Process, decls: &Declarations) -> Result<BTreeSet<usize>, ProcError> {
    Ok(match p {
        Process::Var(f) => (1..=decls.get(f)?.arity).collect(),
        Process::Par(a, b) => {
            let mut s = alphabet(a, decls)?;
            s.extend(alphabet(b, decls)?);
            s
        }
        Process::Nu(i, a) => {
            let mut s = alphabet(a, decls)?;
            s.remove(i);
            s
        }
        Process::Perm(a, sigma) => alphabet(a, decls)?
            .into_iter()
            .map(|k| sigma.apply_inverse(k))
            .collect(),
    })
}

/// The least n with n ⊢ P derivable; errors if no width works.
pub fn minimal_width(p: &Process, decls: &Declarations) -> Result<usize, ProcError> {
    Ok(match p {
        Process::Var(f) => decls.get(f)?.arity,
        Process::Par(a, b) => minimal_width(a, decls)?.max(minimal_width(b, decls)?),
        Process::Nu(i, a) => {
            let inner = minimal_width(a, decls)?;
            if inner > *i {
                return Err(ProcError::BadRestriction { index: *i, inner });
            }
            i - 1
        }
        Process::Perm(a, sigma) => minimal_width(a, decls)?.max(sigma.degree()),
    })
}

#[derive(Clone, Debug)]
pub struct TypedProcess {
    pub width: usize,
    pub process: Process,
}

pub fn type_check(
    n: usize,
    p: &Process,
    decls: &Declarations,
) -> Result<TypedProcess, ProcError> {
    let required = minimal_width(p, decls)?;
    if n < required {
        return Err(ProcError::WidthTooSmall { required, given: n });
    }
    Ok(TypedProcess { width: n, process: p.clone() })
}

// ---------------------------------------------------------------------------
// Encoding into diagrams
// ---------------------------------------------------------------------------

/// The n-fold duplicator (n, 2n): one copy per wire, then a shuffle sending
/// the first copies left and the second copies right.
fn delta(n: usize) -> Term {
    if n == 0 {
        return Term::Id0;
    }
    let copies = (1..n).fold(gen("copy"), |acc, _| tens(acc, gen("copy")));
    let mut targets = vec![0usize; 2 * n];
    for i in 0..n {
        targets[2 * i] = i;
        targets[2 * i + 1] = n + i;
    }
    seq(copies, perm_term(&targets))
}

fn caps(k: usize) -> Term {
    (0..k).fold(Term::Id0, |acc, _| tens(acc, gen("del")))
}

/// `⟨⟨n ⊢ P⟩⟩ : (n, 0)` over the structure generators plus one box per
/// process variable. Weakening is rendered as counit-capped extra wires.
pub fn encode(n: usize, p: &Process, decls: &Declarations) -> Result<Term, ProcError> {
    let required = minimal_width(p, decls)?;
    if n < required {
        return Err(ProcError::WidthTooSmall { required, given: n });
    }
    Ok(match p {
        Process::Var(f) => {
            let ar = decls.get(f)?.arity;
            let boxed = gen(f);
            if n == ar {
                boxed
            } else {
                tens(boxed, caps(n - ar))
            }
        }
        Process::Par(a, b) => seq(
            delta(n),
            tens(encode(n, a, decls)?, encode(n, b, decls)?),
        ),
        Process::Nu(i, a) => {
            // minimal at i−1, capped up to n
            let core = seq(
                tens(id_n(i - 1), gen("unit")),
                encode(*i, a, decls)?,
            );
            if n == i - 1 {
                core
            } else {
                tens(core, caps(n - (i - 1)))
            }
        }
        Process::Perm(a, sigma) => {
            let targets: Vec<usize> = (1..=n).map(|j| sigma.apply(j) - 1).collect();
            seq(perm_term(&targets), encode(n, a, decls)?)
        }
    })
}

// ---------------------------------------------------------------------------
// Step semantics
// ---------------------------------------------------------------------------

/// One-step transitions of a process: declaration branches plus the idle
/// self-loop at variables, combined through Par/Nu/Perm by the mode's rules.
pub fn proc_step(
    p: &Process,
    decls: &Declarations,
    mode: Mode,
) -> Result<Vec<(Action, Process)>, ProcError> {
    let mut out: BTreeSet<(Action, Process)> = BTreeSet::new();
    match p {
        Process::Var(f) => {
            let d = decls.get(f)?;
            for (act, body) in &d.branches {
                let act = match mode {
                    Mode::Hoare => {
                        if let Some((&i, _)) = act.map.iter().find(|(_, &v)| v < 0) {
                            return Err(ProcError::NegativeHoare { index: i });
                        }
                        act.normalized_set()
                    }
                    Mode::Milner => act.clone(),
                };
                out.insert((act, body.clone()));
            }
            out.insert((Action::zero(), p.clone()));
        }
        Process::Par(a, b) => {
            let sa = proc_step(a, decls, mode)?;
            let sb = proc_step(b, decls, mode)?;
            match mode {
                Mode::Hoare => {
                    let al_a = alphabet(a, decls)?;
                    let al_b = alphabet(b, decls)?;
                    for (alpha, a2) in &sa {
                        for (beta, b2) in &sb {
                            // both sides must agree on the shared names
                            let left: BTreeSet<usize> =
                                alpha.support().intersection(&al_b).copied().collect();
                            let right: BTreeSet<usize> =
                                beta.support().intersection(&al_a).copied().collect();
                            if left == right {
                                out.insert((alpha.union(beta), par(a2.clone(), b2.clone())));
                            }
                        }
                    }
                }
                Mode::Milner => {
                    for (alpha, a2) in &sa {
                        for (beta, b2) in &sb {
                            out.insert((alpha.sum(beta), par(a2.clone(), b2.clone())));
                        }
                    }
                }
            }
        }
        Process::Nu(i, a) => {
            for (alpha, a2) in proc_step(a, decls, mode)? {
                match mode {
                    Mode::Hoare => {
                        out.insert((alpha.without(*i), nu(*i, a2)));
                    }
                    Mode::Milner => {
                        if alpha.get(*i) == 0 {
                            out.insert((alpha, nu(*i, a2)));
                        }
                    }
                }
            }
        }
        Process::Perm(a, sigma) => {
            for (alpha, a2) in proc_step(a, decls, mode)? {
                out.insert((
                    alpha.compose(sigma),
                    Process::Perm(Box::new(a2), sigma.clone()),
                ));
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// BFS transition system of a process, states printed as process text.
#[derive(Clone, Debug, Serialize)]
pub struct ProcLts {
    pub mode: String,
    pub states: Vec<String>,
    pub edges: Vec<(usize, String, usize)>,
    pub complete: bool,
}

pub fn proc_lts(
    root: &Process,
    decls: &Declarations,
    mode: Mode,
    max_states: usize,
    max_depth: usize,
) -> Result<ProcLts, ProcError> {
    let mut index: BTreeMap<Process, usize> = BTreeMap::new();
    let mut states: Vec<Process> = vec![root.clone()];
    index.insert(root.clone(), 0);
    let mut edges: Vec<(usize, String, usize)> = Vec::new();
    let mut frontier = vec![0usize];
    let mut complete = true;
    let mut depth = 0usize;
    while !frontier.is_empty() {
        if depth >= max_depth {
            complete = false;
            break;
        }
        let mut next = Vec::new();
        for &s in &frontier {
            let from = states[s].clone();
            for (act, succ) in proc_step(&from, decls, mode)? {
                let t = match index.get(&succ) {
                    Some(&t) => t,
                    None => {
                        if states.len() >= max_states {
                            complete = false;
                            continue;
                        }
                        let t = states.len();
                        index.insert(succ.clone(), t);
                        states.push(succ.clone());
                        next.push(t);
                        t
                    }
                };
                edges.push((s, act.to_string(), t));
            }
        }
        frontier = next;
        depth += 1;
    }
    edges.sort();
    edges.dedup();
    Ok(ProcLts {
        mode: mode.to_string(),
        states: states.iter().map(|p| p.to_string()).collect(),
        edges,
        complete,
    })
}

// ---------------------------------------------------------------------------
// Semantics signature and theorem check
// ---------------------------------------------------------------------------

fn action_to_word(act: &Action, n: usize, mode: Mode, bound: i64) -> Result<Word, ProcError> {
    let mut w = vec![0i64; n];
    for (&i, &v) in &act.map {
        debug_assert!(i >= 1 && i <= n);
        let label = match mode {
            Mode::Hoare => 1,
            Mode::Milner => {
                if v.abs() > bound {
                    return Err(ProcError::LabelOutOfWindow { value: v, bound });
                }
                v
            }
        };
        w[i - 1] = label;
    }
    Ok(Word(w))
}

fn word_to_action(w: &Word) -> Action {
    Action {
        map: w
            .0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(j, &v)| (j + 1, v))
            .collect(),
    }
}

/// Number of parallel components, the default Milner label window.
pub fn par_components(p: &Process) -> usize {
    match p {
        Process::Par(a, b) => par_components(a) + par_components(b),
        Process::Nu(_, a) | Process::Perm(a, _) => par_components(a),
        Process::Var(_) => 1,
    }
}

/// The diagram signature realizing the step semantics: structure generators
/// in the mode's reading, plus one table-driven box per declaration whose
/// entries are the branches (encoded bodies as targets) and the idle loop.
pub fn semantics_signature(
    decls: &Declarations,
    mode: Mode,
    milner_bound: i64,
) -> Result<Signature, ProcError> {
    decls.check_mode(mode)?;
    let (alg, fmode) = match mode {
        Mode::Hoare => (LabelAlgebra::from_spec("two").expect("builtin"), FrobeniusMode::Black),
        Mode::Milner => (
            LabelAlgebra::from_spec(&format!("int:{}", milner_bound.max(1)))
                .expect("builtin"),
            FrobeniusMode::White,
        ),
    };
    let mut sig = cw_signature(alg, fmode)?;
    for d in decls.iter() {
        let mut entries: Vec<TableEntry> = Vec::new();
        for (act, body) in &d.branches {
            let input = action_to_word(act, d.arity, mode, milner_bound)?;
            entries.push(TableEntry {
                state: None,
                input,
                output: Word::empty(),
                next: Target::Term(encode(d.arity, body, decls)?),
            });
        }
        entries.push(TableEntry {
            state: None,
            input: Word(vec![0; d.arity]),
            output: Word::empty(),
            next: Target::Symbol { symbol: d.name.clone(), state: None },
        });
        sig.add_generator(Generator {
            symbol: d.name.clone(),
            arity: d.arity,
            coarity: 0,
            state_space: None,
            rule: GenRule::Table(entries),
        })?;
    }
    sig.validate()?;
    Ok(sig)
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremMismatch {
    pub judgement: String,
    pub direction: String,
    pub action: String,
    pub detail: String,
    pub involves_perm: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub mode: String,
    pub depth: usize,
    pub milner_bound: i64,
    pub processes_checked: usize,
    pub transitions_checked: usize,
    pub pass: bool,
    /// True when every mismatch involves a permutation node — the label of a
    /// permuted process is the one point where the composition order of the
    /// action and the permutation could be read two ways.
    pub perm_only_failures: bool,
    pub mismatches: Vec<TheoremMismatch>,
}

fn involves_perm(p: &Process) -> bool {
    match p {
        Process::Perm(..) => true,
        Process::Par(a, b) => involves_perm(a) || involves_perm(b),
        Process::Nu(_, a) => involves_perm(a),
        Process::Var(_) => false,
    }
}

/// Checks, breadth-first to the given depth, that process transitions and
/// diagram transitions of the encoding agree in both directions, restricted
/// to actions within the process alphabet. Encoded targets are compared up
/// to congruence first, then bisimilarity.
pub fn theorem_check(
    tp: &TypedProcess,
    decls: &Declarations,
    mode: Mode,
    depth: usize,
    milner_bound: Option<i64>,
    limits: Limits,
) -> Result<TheoremReport, ProcError> {
    decls.check_wellformed()?;
    let bound = match mode {
        Mode::Hoare => 1,
        Mode::Milner => milner_bound.unwrap_or(par_components(&tp.process).max(1) as i64),
    };
    let sig = semantics_signature(decls, mode, bound)?;
    let n = tp.width;
    let mut mismatches: Vec<TheoremMismatch> = Vec::new();
    let mut seen: BTreeSet<Process> = BTreeSet::new();
    let mut frontier: Vec<Process> = vec![tp.process.clone()];
    seen.insert(tp.process.clone());
    let mut processes_checked = 0usize;
    let mut transitions_checked = 0usize;
    // A target matches if it is congruent to a candidate; only when no
    // candidate matches syntactically do we pay for bisimilarity, bounded so
    // the recursive (infinite-state) encodings cannot run away.
    let bisim_limits = Limits {
        max_states: limits.max_states.min(400),
        max_depth: limits.max_depth.min(10),
    };
    let matches_any = |target: &Term, candidates: &[&Term]| -> Result<bool, ProcError> {
        for c in candidates {
            if congruent(target, c, &sig).unwrap_or(false) {
                return Ok(true);
            }
        }
        for c in candidates {
            if bisimilar_opt(target, c, &sig, bisim_limits, false)?.related {
                return Ok(true);
            }
        }
        Ok(false)
    };
    for _level in 0..depth {
        if frontier.is_empty() {
            break;
        }
        let mut next_frontier: Vec<Process> = Vec::new();
        for p in &frontier {
            processes_checked += 1;
            let judgement = format!("{n} |- {p}");
            let al_p = alphabet(p, decls)?;
            let enc_p = encode(n, p, decls)?;
            let ptrans = proc_step(p, decls, mode)?;
            let dtrans = crate::sos::step(&enc_p, &sig)
                .map_err(|e| ProcError::Bisim(Box::new(BisimError::Sos(e))))?;
            // forward: every process move is matched by the diagram
            for (act, succ) in &ptrans {
                if !act.support().is_subset(&al_p) {
                    continue;
                }
                transitions_checked += 1;
                let w = action_to_word(act, n, mode, bound)?;
                let enc_succ = encode(n, succ, decls)?;
                let candidates: Vec<&Term> = dtrans
                    .iter()
                    .filter(|dt| dt.input == w)
                    .map(|dt| &dt.next)
                    .collect();
                if !matches_any(&enc_succ, &candidates)? {
                    mismatches.push(TheoremMismatch {
                        judgement: judgement.clone(),
                        direction: "process-to-diagram".into(),
                        action: act.to_string(),
                        detail: format!("no diagram transition to an encoding of {succ}"),
                        involves_perm: involves_perm(p),
                    });
                }
            }
            // backward: every in-alphabet diagram move is matched by the
            // process
            for dt in &dtrans {
                let act = word_to_action(&dt.input);
                if !act.support().is_subset(&al_p) {
                    continue;
                }
                transitions_checked += 1;
                let mut candidates: Vec<Term> = Vec::new();
                for (pact, succ) in &ptrans {
                    if action_to_word(pact, n, mode, bound)? == dt.input {
                        candidates.push(encode(n, succ, decls)?);
                    }
                }
                let refs: Vec<&Term> = candidates.iter().collect();
                if !matches_any(&dt.next, &refs)? {
                    mismatches.push(TheoremMismatch {
                        judgement: judgement.clone(),
                        direction: "diagram-to-process".into(),
                        action: act.to_string(),
                        detail: "diagram transition has no matching process move".into(),
                        involves_perm: involves_perm(p),
                    });
                }
            }
            for (_, succ) in ptrans {
                if seen.insert(succ.clone()) {
                    next_frontier.push(succ);
                }
            }
        }
        frontier = next_frontier;
    }
    let pass = mismatches.is_empty();
    let perm_only_failures = !pass && mismatches.iter().all(|m| m.involves_perm);
    Ok(TheoremReport {
        mode: mode.to_string(),
        depth,
        milner_bound: bound,
        processes_checked,
        transitions_checked,
        pass,
        perm_only_failures,
        mismatches,
    })
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Bar,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Plus,
    Minus,
    Assign,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_tok(&mut self) -> Result<(usize, Tok), ProcError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= bytes.len() {
            return Ok((start, Tok::Eof));
        }
        let b = bytes[self.pos];
        let tok = match b {
            b'|' => {
                self.pos += 1;
                Tok::Bar
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'[' => {
                self.pos += 1;
                Tok::LBrack
            }
            b']' => {
                self.pos += 1;
                Tok::RBrack
            }
            b'{' => {
                self.pos += 1;
                Tok::LBrace
            }
            b'}' => {
                self.pos += 1;
                Tok::RBrace
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'.' => {
                self.pos += 1;
                Tok::Dot
            }
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b':' => {
                if bytes.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Tok::Assign
                } else {
                    return Err(ProcError::Syntax {
                        pos: start,
                        msg: "expected `:=`".into(),
                    });
                }
            }
            b'0'..=b'9' => {
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = &self.src[start..self.pos];
                Tok::Int(text.parse().map_err(|_| ProcError::Syntax {
                    pos: start,
                    msg: format!("bad integer `{text}`"),
                })?)
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            other => {
                return Err(ProcError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: (usize, Tok),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ProcError> {
        let mut lexer = Lexer { src, pos: 0 };
        let lookahead = lexer.next_tok()?;
        Ok(Parser { lexer, lookahead })
    }

    fn advance(&mut self) -> Result<(usize, Tok), ProcError> {
        let cur = std::mem::replace(&mut self.lookahead, (0, Tok::Eof));
        self.lookahead = self.lexer.next_tok()?;
        Ok(cur)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, ProcError> {
        let (pos, tok) = self.advance()?;
        if tok == want {
            Ok(pos)
        } else {
            Err(ProcError::Syntax { pos, msg: format!("expected {what}, found {tok:?}") })
        }
    }

    fn int(&mut self, what: &str) -> Result<usize, ProcError> {
        let (pos, tok) = self.advance()?;
        match tok {
            Tok::Int(v) if v >= 0 => Ok(v as usize),
            other => Err(ProcError::Syntax {
                pos,
                msg: format!("expected {what}, found {other:?}"),
            }),
        }
    }

    // par := prefix ('|' prefix)*
    fn process(&mut self) -> Result<Process, ProcError> {
        let mut p = self.prefix()?;
        while self.lookahead.1 == Tok::Bar {
            self.advance()?;
            p = par(p, self.prefix()?);
        }
        Ok(p)
    }

    // prefix := 'nu' '(' int ')' prefix | postfix
    fn prefix(&mut self) -> Result<Process, ProcError> {
        if let (_, Tok::Ident(name)) = &self.lookahead {
            if name == "nu" {
                self.advance()?;
                self.expect(Tok::LParen, "`(`")?;
                let i = self.int("a name index")?;
                if i == 0 {
                    return Err(ProcError::Syntax {
                        pos: self.lookahead.0,
                        msg: "name indices start at 1".into(),
                    });
                }
                self.expect(Tok::RParen, "`)`")?;
                return Ok(nu(i, self.prefix()?));
            }
        }
        self.postfix()
    }

    // postfix := atom ('[' 'perm' int int (',' int int)* ']')*
    fn postfix(&mut self) -> Result<Process, ProcError> {
        let mut p = self.atom()?;
        while self.lookahead.1 == Tok::LBrack {
            self.advance()?;
            let (pos, tok) = self.advance()?;
            match tok {
                Tok::Ident(kw) if kw == "perm" => {}
                other => {
                    return Err(ProcError::Syntax {
                        pos,
                        msg: format!("expected `perm`, found {other:?}"),
                    })
                }
            }
            let mut pairs = Vec::new();
            loop {
                let a = self.int("a name index")?;
                let b = self.int("a name index")?;
                pairs.push((a, b));
                if self.lookahead.1 == Tok::Comma {
                    self.advance()?;
                } else {
                    break;
                }
            }
            self.expect(Tok::RBrack, "`]`")?;
            let sigma = Perm::new(pairs)?;
            p = Process::Perm(Box::new(p), sigma);
        }
        Ok(p)
    }

    fn atom(&mut self) -> Result<Process, ProcError> {
        let (pos, tok) = self.advance()?;
        match tok {
            Tok::LParen => {
                let p = self.process()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Tok::Ident(name) => Ok(var(&name)),
            other => Err(ProcError::Syntax {
                pos,
                msg: format!("expected a process, found {other:?}"),
            }),
        }
    }

    // atom of an action: ['-'] a<digits>
    fn action_atom(&mut self) -> Result<(usize, i64), ProcError> {
        let mut sign = 1i64;
        if self.lookahead.1 == Tok::Minus {
            self.advance()?;
            sign = -1;
        }
        let (pos, tok) = self.advance()?;
        match tok {
            Tok::Ident(name) if name.starts_with('a') && name[1..].parse::<usize>().is_ok() => {
                let idx: usize = name[1..].parse().unwrap();
                if idx == 0 {
                    return Err(ProcError::Syntax {
                        pos,
                        msg: "name indices start at 1".into(),
                    });
                }
                Ok((idx, sign))
            }
            other => Err(ProcError::Syntax {
                pos,
                msg: format!("expected a name like `a1`, found {other:?}"),
            }),
        }
    }

    // action := '0' | atom | '{' [atom (',' atom)*] '}'
    fn action(&mut self) -> Result<Action, ProcError> {
        match &self.lookahead.1 {
            Tok::Int(0) => {
                self.advance()?;
                Ok(Action::zero())
            }
            Tok::LBrace => {
                self.advance()?;
                let mut pairs = Vec::new();
                if self.lookahead.1 != Tok::RBrace {
                    loop {
                        pairs.push(self.action_atom()?);
                        if self.lookahead.1 == Tok::Comma {
                            self.advance()?;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Action::from_pairs(&pairs))
            }
            _ => {
                let (i, v) = self.action_atom()?;
                Ok(Action::from_pairs(&[(i, v)]))
            }
        }
    }

    // decl := ident '(' int ')' ':=' [branch ('+' branch)*]
    fn declaration(&mut self) -> Result<Declaration, ProcError> {
        let (pos, tok) = self.advance()?;
        let name = match tok {
            Tok::Ident(n) => n,
            other => {
                return Err(ProcError::Syntax {
                    pos,
                    msg: format!("expected a declaration name, found {other:?}"),
                })
            }
        };
        self.expect(Tok::LParen, "`(`")?;
        let arity = self.int("an arity")?;
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Assign, "`:=`")?;
        let mut branches = Vec::new();
        if self.lookahead.1 != Tok::Eof {
            loop {
                let act = self.action()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.process()?;
                branches.push((act, body));
                if self.lookahead.1 == Tok::Plus {
                    self.advance()?;
                } else {
                    break;
                }
            }
        }
        Ok(Declaration { name, arity, branches })
    }

    fn finish(&mut self) -> Result<(), ProcError> {
        let (pos, tok) = self.advance()?;
        if tok != Tok::Eof {
            return Err(ProcError::Syntax {
                pos,
                msg: format!("trailing input {tok:?}"),
            });
        }
        Ok(())
    }
}

pub fn parse_process(text: &str) -> Result<Process, ProcError> {
    let mut p = Parser::new(text)?;
    let proc = p.process()?;
    p.finish()?;
    Ok(proc)
}

/// One declaration per nonempty line; `#` starts a comment. Name-coverage
/// well-formedness is checked across the whole set.
pub fn parse_declarations(text: &str) -> Result<Declarations, ProcError> {
    let mut decls = Declarations::default();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut p = Parser::new(line)?;
        let d = p.declaration()?;
        p.finish()?;
        decls.insert(d);
    }
    decls.check_wellformed()?;
    Ok(decls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sos::Limits;

    // the running two-declaration example: a one-port feedback process and a
    // two-port idler
    fn example_decls() -> Declarations {
        parse_declarations(
            "f(1) := a1 . nu(2) (f [perm 1 2] | g)\n\
             g(2) := a1 . g + a2 . g\n",
        )
        .unwrap()
    }

    fn example_root() -> Process {
        nu(2, par(perm(var("f"), vec![(1, 2)]), var("g")))
    }

    #[test]
    fn parse_and_display_roundtrip() {
        let texts = [
            "f | g",
            "nu(2) (f [perm 1 2] | g)",
            "f [perm 1 2] | g | h",
            "(nu(1) f) [perm 1 2, 2 3]",
        ];
        for t in texts {
            let p = parse_process(t).unwrap();
            let printed = p.to_string();
            assert_eq!(parse_process(&printed).unwrap(), p, "{t} vs {printed}");
        }
    }

    #[test]
    fn wellformedness() {
        assert!(parse_declarations("f(2) := a1 . f").is_err());
        // vacuous for arity 0 with no branches
        assert!(parse_declarations("f(0) :=").is_ok());
        example_decls();
    }

    #[test]
    fn typing_examples() {
        let decls = example_decls();
        assert!(type_check(1, &example_root(), &decls).is_ok());
        assert!(matches!(
            type_check(0, &var("f"), &decls),
            Err(ProcError::WidthTooSmall { required: 1, given: 0 })
        ));
        assert!(type_check(3, &var("f"), &decls).is_ok());
        // restriction must be topmost: nu(1) g with ar(g)=2 is rejected
        assert!(matches!(
            minimal_width(&nu(1, var("g")), &decls),
            Err(ProcError::BadRestriction { index: 1, inner: 2 })
        ));
    }

    #[test]
    fn alphabet_examples() {
        let decls = example_decls();
        assert_eq!(
            alphabet(&var("g"), &decls).unwrap(),
            BTreeSet::from([1, 2])
        );
        assert_eq!(
            alphabet(&example_root(), &decls).unwrap(),
            BTreeSet::from([1])
        );
        assert_eq!(
            alphabet(&perm(var("f"), vec![]), &decls).unwrap(),
            alphabet(&var("f"), &decls).unwrap()
        );
    }

    #[test]
    fn alphabet_within_width() {
        let decls = example_decls();
        for (p, n) in [
            (var("f"), 1usize),
            (var("g"), 2),
            (example_root(), 1),
            (par(var("f"), var("g")), 2),
        ] {
            let tp = type_check(n, &p, &decls).unwrap();
            let al = alphabet(&tp.process, &decls).unwrap();
            assert!(al.iter().all(|&i| i <= tp.width), "{p}");
        }
    }

    #[test]
    fn step_examples_hoare() {
        let decls = example_decls();
        let g_steps = proc_step(&var("g"), &decls, Mode::Hoare).unwrap();
        let labels: BTreeSet<String> =
            g_steps.iter().map(|(a, _)| a.to_string()).collect();
        assert_eq!(
            labels,
            BTreeSet::from(["0".to_string(), "{a1}".to_string(), "{a2}".to_string()])
        );
        let f_steps = proc_step(&var("f"), &decls, Mode::Hoare).unwrap();
        assert!(f_steps
            .iter()
            .any(|(a, p)| a.to_string() == "{a1}" && *p == example_root()));
        // the restricted system hides the a2 synchronisation
        let root_steps = proc_step(&example_root(), &decls, Mode::Hoare).unwrap();
        let labels: BTreeSet<String> =
            root_steps.iter().map(|(a, _)| a.to_string()).collect();
        assert!(labels.contains("0"));
        assert!(labels.contains("{a1}"));
        assert!(!labels.iter().any(|l| l.contains("a2")));
        // the synchronised move exists: f[perm] steps on a2 jointly with g
        assert!(root_steps.iter().any(|(a, p)| {
            a.is_zero() && format!("{p}").contains("nu(2)") && *p != example_root()
        }));
    }

    #[test]
    fn hoare_label_soundness_and_idle_closure() {
        let decls = example_decls();
        let mut frontier = vec![example_root()];
        let mut seen = BTreeSet::new();
        for _ in 0..3 {
            let mut next = Vec::new();
            for p in frontier.drain(..) {
                if !seen.insert(p.clone()) {
                    continue;
                }
                let al = alphabet(&p, &decls).unwrap();
                let steps = proc_step(&p, &decls, Mode::Hoare).unwrap();
                // idle closure
                assert!(steps.iter().any(|(a, q)| a.is_zero() && *q == p), "{p}");
                for (a, q) in steps {
                    // label soundness
                    assert!(a.support().is_subset(&al), "{a} outside al({p})");
                    next.push(q);
                }
            }
            frontier = next;
        }
    }

    #[test]
    fn encode_shapes() {
        let decls = example_decls();
        let sig = semantics_signature(&decls, Mode::Hoare, 1).unwrap();
        // Var at its own arity is the bare box
        assert_eq!(encode(1, &var("f"), &decls).unwrap(), gen("f"));
        // weakening caps the extra wire
        let e = encode(2, &var("f"), &decls).unwrap();
        assert_eq!(sig.infer_sort(&e).unwrap(), crate::syntax::Sort::new(2, 0));
        let root = encode(1, &example_root(), &decls).unwrap();
        assert_eq!(sig.infer_sort(&root).unwrap(), crate::syntax::Sort::new(1, 0));
    }

    #[test]
    fn weakening_commutes_with_encoding() {
        // encoding at a wider context is bisimilar to capping afterwards
        let decls = example_decls();
        let sig = semantics_signature(&decls, Mode::Hoare, 1).unwrap();
        // the recursion unfolds forever, so explore a bounded slice only
        let limits = Limits { max_states: 60, max_depth: 4 };
        for p in [var("f"), example_root(), par(var("f"), var("f"))] {
            let wide = encode(2, &p, &decls).unwrap();
            let capped = tens(encode(1, &p, &decls).unwrap(), gen("del"));
            let r = bisimilar_opt(&wide, &capped, &sig, limits, false).unwrap();
            assert!(r.related, "{p}");
        }
    }

    #[test]
    fn names_toggle_on_unused_wires() {
        // with a1 outside the (shifted) alphabet, black transitions pair up:
        // flipping the unused coordinate preserves targets
        let decls = example_decls();
        let sig = semantics_signature(&decls, Mode::Hoare, 1).unwrap();
        let e = encode(2, &var("f"), &decls).unwrap(); // wire 2 unused
        let trs = crate::sos::step(&e, &sig).unwrap();
        for tr in &trs {
            let mut flipped = tr.input.0.clone();
            flipped[1] = 1 - flipped[1];
            assert!(
                trs.iter()
                    .any(|o| o.input.0 == flipped && o.next == tr.next),
                "no toggle partner for {:?}",
                tr.input
            );
        }
    }

    #[test]
    fn theorem_hoare_example() {
        let decls = example_decls();
        let tp = type_check(1, &var("f"), &decls).unwrap();
        let rep =
            theorem_check(&tp, &decls, Mode::Hoare, 2, None, Limits::default()).unwrap();
        assert!(rep.pass, "{:?}", rep.mismatches);
        assert!(rep.processes_checked >= 2);
        assert!(rep.transitions_checked > 0);
    }

    #[test]
    fn theorem_milner_handshake() {
        let decls = parse_declarations("f(1) := a1 . f\nh(1) := -a1 . h\n").unwrap();
        let root = nu(1, par(var("f"), var("h")));
        // the handshake: +1 and −1 cancel under the restriction
        let steps = proc_step(&root, &decls, Mode::Milner).unwrap();
        assert!(steps
            .iter()
            .any(|(a, p)| a.is_zero() && *p == root && format!("{p}").contains("|")));
        let tp = type_check(0, &root, &decls).unwrap();
        let rep =
            theorem_check(&tp, &decls, Mode::Milner, 2, None, Limits::default()).unwrap();
        assert!(rep.pass, "{:?}", rep.mismatches);
    }

    #[test]
    fn theorem_idle_only() {
        let decls = parse_declarations("f(0) :=").unwrap();
        let tp = type_check(0, &var("f"), &decls).unwrap();
        for mode in [Mode::Hoare, Mode::Milner] {
            let rep = theorem_check(&tp, &decls, mode, 2, None, Limits::default()).unwrap();
            assert!(rep.pass, "{mode}: {:?}", rep.mismatches);
        }
    }

    #[test]
    fn hoare_rejects_coactions() {
        let decls = parse_declarations("h(1) := -a1 . h\n").unwrap();
        assert!(matches!(
            proc_step(&var("h"), &decls, Mode::Hoare),
            Err(ProcError::NegativeHoare { index: 1 })
        ));
    }

    #[test]
    fn proc_lts_runs() {
        let decls = example_decls();
        let lts = proc_lts(&example_root(), &decls, Mode::Hoare, 100, 4).unwrap();
        assert!(lts.states.len() >= 2);
        assert!(lts.edges.iter().any(|(_, a, _)| a == "0"));
        assert!(lts.edges.iter().any(|(_, a, _)| a == "{a1}"));
    }

    #[test]
    fn perm_composition_on_labels() {
        // a 3-cycle: [perm 1 2, 2 3] sends 1↦3 (apply transpositions left to
        // right), so the permuted process reads a3-moves as a1-moves
        let decls = parse_declarations(
            "k(3) := a3 . k + a1 . (k [perm 1 2]) + a2 . k\n",
        )
        .unwrap();
        let sigma = Perm::new(vec![(1, 2), (2, 3)]).unwrap();
        assert_eq!(sigma.apply(1), 3);
        let p = Process::Perm(Box::new(var("k")), sigma);
        let steps = proc_step(&p, &decls, Mode::Hoare).unwrap();
        let labels: BTreeSet<String> = steps.iter().map(|(a, _)| a.to_string()).collect();
        // k's a3 move shows up as a1 on the permuted process
        assert!(labels.contains("{a1}"), "{labels:?}");
    }
}
