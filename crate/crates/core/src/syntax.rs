//! Sorted diagrammatic terms: signatures, the term grammar, sort inference
//! and a textual surface syntax.
//!
//! The surface grammar: atoms are generator symbols (optionally with a state
//! argument, e.g. `reg(2)`) or the keywords `id`, `id0`, `swap`; `;` is
//! sequential composition (left-associative), `*` is parallel composition and
//! binds tighter, parentheses group. n-ary identities and symmetries are not
//! primitive; they expand to trees of `id`/`id0`/`swap`.

use crate::algebra::{Label, LabelAlgebra, Word};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The pair (n, m) of dangling wire counts of a term.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Sort {
    pub left: usize,
    pub right: usize,
}

impl Sort {
    pub fn new(left: usize, right: usize) -> Self {
        Sort { left, right }
    }
}

impl std::fmt::Display for Sort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.left, self.right)
    }
}

/// Abstract syntax of the diagrammatic language.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Gen { symbol: String, state: Option<Label> },
    Id0,
    Id1,
    Sym,
    Seq(Box<Term>, Box<Term>),
    Tens(Box<Term>, Box<Term>),
}

pub fn gen(symbol: &str) -> Term {
    Term::Gen { symbol: symbol.to_string(), state: None }
}

pub fn gen_state(symbol: &str, state: Label) -> Term {
    Term::Gen { symbol: symbol.to_string(), state: Some(state) }
}

pub fn seq(a: Term, b: Term) -> Term {
    Term::Seq(Box::new(a), Box::new(b))
}

pub fn tens(a: Term, b: Term) -> Term {
    Term::Tens(Box::new(a), Box::new(b))
}

/// Left-nested sequential composition of a non-empty list.
pub fn seq_all(parts: Vec<Term>) -> Term {
    let mut it = parts.into_iter();
    let first = it.next().expect("seq_all of empty list");
    it.fold(first, seq)
}

/// `id_n`, recursively defined starting from `id0`.
pub fn id_n(n: usize) -> Term {
    match n {
        0 => Term::Id0,
        1 => Term::Id1,
        _ => tens(id_n(n - 1), Term::Id1),
    }
}

/// The diagram of an arbitrary permutation on `n` wires, built from a network
/// of adjacent swaps. `targets[i]` is the right-interface position that the
/// wire entering at left position `i` exits from.
pub fn perm_term(targets: &[usize]) -> Term {
    let n = targets.len();
    debug_assert!({
        let mut seen = targets.to_vec();
        seen.sort_unstable();
        seen == (0..n).collect::<Vec<_>>()
    });
    if n == 0 {
        return Term::Id0;
    }
    // Bubble-sort the wire order; each adjacent transposition becomes a layer
    // id^a * swap * id^b.
    let mut pos: Vec<usize> = targets.to_vec();
    let mut layers: Vec<Term> = Vec::new();
    loop {
        let mut swapped = false;
        for i in 0..n.saturating_sub(1) {
            if pos[i] > pos[i + 1] {
                pos.swap(i, i + 1);
                let mut layer = Term::Sym;
                if i > 0 {
                    layer = tens(id_n(i), layer);
                }
                if i + 2 < n {
                    layer = tens(layer, id_n(n - i - 2));
                }
                layers.push(layer);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    if layers.is_empty() {
        id_n(n)
    } else {
        seq_all(layers)
    }
}

/// `sigma_{n,m}`: the block symmetry of sort (n+m, m+n).
pub fn sym_n_m(n: usize, m: usize) -> Term {
    let targets: Vec<usize> = (0..n + m)
        .map(|i| if i < n { i + m } else { i - n })
        .collect();
    perm_term(&targets)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SortError {
    #[error("sort mismatch in `;` at {position}: left subterm has sort {left}, right subterm has sort {right}")]
    Mismatch { left: Sort, right: Sort, position: String },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{symbol}` state {state} is not in its state space")]
    BadState { symbol: String, state: Label },
    #[error("generator `{0}` requires a state argument")]
    MissingState(String),
    #[error("generator `{0}` does not take a state argument")]
    UnexpectedState(String),
}

/// Sort inference. Without a signature, generators cannot be sorted; use
/// [`Signature::infer_sort`] for terms containing generators.
fn infer_sort_with<F>(t: &Term, lookup: &F, path: &mut Vec<&'static str>) -> Result<Sort, SortError>
where
    F: Fn(&str, Option<Label>) -> Result<Sort, SortError>,
{
    match t {
        Term::Gen { symbol, state } => lookup(symbol, *state),
        Term::Id0 => Ok(Sort::new(0, 0)),
        Term::Id1 => Ok(Sort::new(1, 1)),
        Term::Sym => Ok(Sort::new(2, 2)),
        Term::Seq(a, b) => {
            path.push("L");
            let sa = infer_sort_with(a, lookup, path)?;
            path.pop();
            path.push("R");
            let sb = infer_sort_with(b, lookup, path)?;
            path.pop();
            if sa.right != sb.left {
                return Err(SortError::Mismatch {
                    left: sa,
                    right: sb,
                    position: path.join(""),
                });
            }
            Ok(Sort::new(sa.left, sb.right))
        }
        Term::Tens(a, b) => {
            path.push("L");
            let sa = infer_sort_with(a, lookup, path)?;
            path.pop();
            path.push("R");
            let sb = infer_sort_with(b, lookup, path)?;
            path.pop();
            Ok(Sort::new(sa.left + sb.left, sa.right + sb.right))
        }
    }
}

/// How a generator's one-step behaviour is specified.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GenRule {
    /// `bdel`: k / ε
    BDel,
    /// `bcopy`: k / k k
    BCopy,
    /// `bnew`: ε / k
    BNew,
    /// `bmerge`: k k / k
    BMerge,
    /// `wadd`: k l / k+l
    WAdd,
    /// `wzero`: ε / 0
    WZero,
    /// `wcopy`: k+l / k l (all splits)
    WCopy,
    /// `wdel`: 0 / ε
    WDel,
    /// `reg(k)`: l / k, next state l
    Reg,
    /// `coreg(k)`: k / l, next state l
    CoReg,
    /// `amp(k)`: l / l·k
    Amp,
    /// `coamp(k)`: l·k / l
    CoAmp,
    /// Explicit finite transition table.
    Table(Vec<TableEntry>),
}

/// Where an explicit table entry lands.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Target {
    Symbol { symbol: String, state: Option<Label> },
    Term(Term),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TableEntry {
    pub state: Option<Label>,
    pub input: Word,
    pub output: Word,
    pub next: Target,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Generator {
    pub symbol: String,
    pub arity: usize,
    pub coarity: usize,
    /// Present iff the generator denotes a state-indexed family (e.g. the
    /// register holding each carrier value).
    pub state_space: Option<Vec<Label>>,
    pub rule: GenRule,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrobeniusMode {
    None,
    Black,
    White,
    Both,
}

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("duplicate generator symbol `{0}`")]
    Duplicate(String),
    #[error("algebra `{0}` lacks semiring capability")]
    NotSemiring(String),
    #[error("white Frobenius over `{0}` requires additive (commutative monoid) structure")]
    NoAddition(String),
    #[error("table entry for `{symbol}`: expected input length {expected}, got {got}")]
    BadInputLength { symbol: String, expected: usize, got: usize },
    #[error("table entry for `{symbol}`: expected output length {expected}, got {got}")]
    BadOutputLength { symbol: String, expected: usize, got: usize },
    #[error("table entry for `{symbol}`: label {label} is not in the carrier")]
    BadLabel { symbol: String, label: Label },
    #[error("table entry for `{symbol}`: target sort {target} differs from {expected}")]
    TargetSort { symbol: String, target: Sort, expected: Sort },
    #[error("table entry for `{symbol}`: {source}")]
    TargetUnsorted { symbol: String, source: SortError },
}

/// A set of generators over a label algebra.
#[derive(Clone, Debug)]
pub struct Signature {
    generators: IndexMap<String, Generator>,
    pub algebra: LabelAlgebra,
    pub frobenius_mode: FrobeniusMode,
}

impl Signature {
    pub fn new(algebra: LabelAlgebra, frobenius_mode: FrobeniusMode) -> Self {
        Signature { generators: IndexMap::new(), algebra, frobenius_mode }
    }

    pub fn add_generator(&mut self, g: Generator) -> Result<(), SignatureError> {
        if self.generators.contains_key(&g.symbol) {
            return Err(SignatureError::Duplicate(g.symbol));
        }
        self.generators.insert(g.symbol.clone(), g);
        Ok(())
    }

    pub fn generator(&self, symbol: &str) -> Option<&Generator> {
        self.generators.get(symbol)
    }

    pub fn generators(&self) -> impl Iterator<Item = &Generator> {
        self.generators.values()
    }

    fn gen_sort(&self, symbol: &str, state: Option<Label>) -> Result<Sort, SortError> {
        let g = self
            .generator(symbol)
            .ok_or_else(|| SortError::UnknownGenerator(symbol.to_string()))?;
        match (&g.state_space, state) {
            (Some(space), Some(s)) => {
                if !space.contains(&s) {
                    return Err(SortError::BadState { symbol: symbol.to_string(), state: s });
                }
            }
            (Some(_), None) => return Err(SortError::MissingState(symbol.to_string())),
            (None, Some(_)) => return Err(SortError::UnexpectedState(symbol.to_string())),
            (None, None) => {}
        }
        Ok(Sort::new(g.arity, g.coarity))
    }

    /// The unique sort of a term, per the sorting discipline.
    pub fn infer_sort(&self, t: &Term) -> Result<Sort, SortError> {
        let lookup = |s: &str, st: Option<Label>| self.gen_sort(s, st);
        infer_sort_with(t, &lookup, &mut Vec::new())
    }

    /// Validate an explicit transition table against arity/coarity, carrier
    /// membership and target sorts.
    pub fn validate(&self) -> Result<(), SignatureError> {
        for g in self.generators.values() {
            let expected = Sort::new(g.arity, g.coarity);
            if let GenRule::Table(entries) = &g.rule {
                for e in entries {
                    if e.input.len() != g.arity {
                        return Err(SignatureError::BadInputLength {
                            symbol: g.symbol.clone(),
                            expected: g.arity,
                            got: e.input.len(),
                        });
                    }
                    if e.output.len() != g.coarity {
                        return Err(SignatureError::BadOutputLength {
                            symbol: g.symbol.clone(),
                            expected: g.coarity,
                            got: e.output.len(),
                        });
                    }
                    for &l in e.input.0.iter().chain(e.output.0.iter()) {
                        if !self.algebra.contains(l) {
                            return Err(SignatureError::BadLabel {
                                symbol: g.symbol.clone(),
                                label: l,
                            });
                        }
                    }
                    let target_sort = match &e.next {
                        Target::Symbol { symbol, state } => self
                            .gen_sort(symbol, *state)
                            .map_err(|source| SignatureError::TargetUnsorted {
                                symbol: g.symbol.clone(),
                                source,
                            })?,
                        Target::Term(t) => self.infer_sort(t).map_err(|source| {
                            SignatureError::TargetUnsorted { symbol: g.symbol.clone(), source }
                        })?,
                    };
                    if target_sort != expected {
                        return Err(SignatureError::TargetSort {
                            symbol: g.symbol.clone(),
                            target: target_sort,
                            expected,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// The 12-generator signature of the diagrammatic language over a semiring:
/// black (co)monoid, white (co)monoid, registers, scalars and their mirrors.
pub fn circ_signature(algebra: LabelAlgebra) -> Result<Signature, SignatureError> {
    if !algebra.capabilities().semiring {
        return Err(SignatureError::NotSemiring(algebra.name().to_string()));
    }
    let carrier: Vec<Label> = algebra.carrier().to_vec();
    let mut sig = Signature::new(algebra, FrobeniusMode::Both);
    let stateless = |symbol: &str, a: usize, c: usize, rule: GenRule| Generator {
        symbol: symbol.to_string(),
        arity: a,
        coarity: c,
        state_space: None,
        rule,
    };
    let stateful = |symbol: &str, a: usize, c: usize, rule: GenRule| Generator {
        symbol: symbol.to_string(),
        arity: a,
        coarity: c,
        state_space: Some(carrier.clone()),
        rule,
    };
    for g in [
        stateless("bdel", 1, 0, GenRule::BDel),
        stateless("bcopy", 1, 2, GenRule::BCopy),
        stateful("reg", 1, 1, GenRule::Reg),
        stateful("amp", 1, 1, GenRule::Amp),
        stateless("wadd", 2, 1, GenRule::WAdd),
        stateless("wzero", 0, 1, GenRule::WZero),
        stateless("bnew", 0, 1, GenRule::BNew),
        stateless("bmerge", 2, 1, GenRule::BMerge),
        stateful("coreg", 1, 1, GenRule::CoReg),
        stateful("coamp", 1, 1, GenRule::CoAmp),
        stateless("wcopy", 1, 2, GenRule::WCopy),
        stateless("wdel", 1, 0, GenRule::WDel),
    ] {
        sig.add_generator(g)?;
    }
    Ok(sig)
}

/// The four Frobenius generators `copy : (1,2)`, `del : (1,0)`,
/// `merge : (2,1)`, `unit : (0,1)` read in the given mode: black uses the
/// synchronising rules (any label set), white the additive rules (requires
/// at least commutative-monoid structure).
pub fn cw_signature(
    algebra: LabelAlgebra,
    mode: FrobeniusMode,
) -> Result<Signature, SignatureError> {
    let rules = match mode {
        FrobeniusMode::Black => [GenRule::BCopy, GenRule::BDel, GenRule::BMerge, GenRule::BNew],
        FrobeniusMode::White => {
            if !algebra.capabilities().commutative_monoid {
                return Err(SignatureError::NoAddition(algebra.name().to_string()));
            }
            [GenRule::WCopy, GenRule::WDel, GenRule::WAdd, GenRule::WZero]
        }
        _ => panic!("cw_signature requires a black or white mode"),
    };
    let mut sig = Signature::new(algebra, mode);
    let [copy, del, merge, unit] = rules;
    for (symbol, a, c, rule) in [
        ("copy", 1, 2, copy),
        ("del", 1, 0, del),
        ("merge", 2, 1, merge),
        ("unit", 0, 1, unit),
    ] {
        sig.add_generator(Generator {
            symbol: symbol.to_string(),
            arity: a,
            coarity: c,
            state_space: None,
            rule,
        })?;
    }
    Ok(sig)
}

/// The one-place buffer diagram with `k` tokens stored: the flagship example.
pub fn place_term(k: Label) -> Term {
    seq_all(vec![
        tens(seq(gen("bnew"), gen("bcopy")), Term::Id1),
        tens(
            Term::Id1,
            seq_all(vec![gen("wadd"), gen_state("reg", k), gen("wcopy")]),
        ),
        tens(seq(gen("bmerge"), gen("bdel")), Term::Id1),
    ])
}

// ---------------------------------------------------------------------------
// Pretty printing
// ---------------------------------------------------------------------------

/// Prints the surface syntax. Parenthesization preserves the tree shape, so
/// parsing the output reproduces the input term exactly.
pub fn pretty_print(t: &Term) -> String {
    // precedence: atom = 2, * = 1, ; = 0
    fn go(t: &Term, out: &mut String, parent_prec: u8, is_left: bool) {
        let (prec, a, b, op) = match t {
            Term::Gen { symbol, state } => {
                out.push_str(symbol);
                if let Some(s) = state {
                    out.push('(');
                    out.push_str(&s.to_string());
                    out.push(')');
                }
                return;
            }
            Term::Id0 => {
                out.push_str("id0");
                return;
            }
            Term::Id1 => {
                out.push_str("id");
                return;
            }
            Term::Sym => {
                out.push_str("swap");
                return;
            }
            Term::Seq(a, b) => (0u8, a, b, " ; "),
            Term::Tens(a, b) => (1u8, a, b, " * "),
        };
        // both operators parse left-associatively
        let need = prec < parent_prec || (prec == parent_prec && !is_left);
        if need {
            out.push('(');
        }
        go(a, out, prec, true);
        out.push_str(op);
        go(b, out, prec + 1, false);
        if need {
            out.push(')');
        }
    }
    let mut s = String::new();
    go(t, &mut s, 0, true);
    s
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", pretty_print(self))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("parse error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error(transparent)]
    Sort(#[from] SortError),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Semi,
    Star,
    LParen,
    RParen,
    Eof,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next_tok(&mut self) -> Result<(usize, Tok), ParseError> {
        while matches!(self.peek_byte(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let b = match self.peek_byte() {
            None => return Ok((start, Tok::Eof)),
            Some(b) => b,
        };
        let tok = match b {
            b';' => {
                self.pos += 1;
                Tok::Semi
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'-' | b'0'..=b'9' => {
                self.pos += 1;
                while matches!(self.peek_byte(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
                let text = &self.src[start..self.pos];
                let v = text.parse::<i64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("bad integer `{text}`"),
                })?;
                Tok::Int(v)
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                self.pos += 1;
                while matches!(self.peek_byte(), Some(c) if c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            other => {
                return Err(ParseError::Syntax {
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
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let lookahead = lexer.next_tok()?;
        Ok(Parser { lexer, lookahead })
    }

    fn advance(&mut self) -> Result<(usize, Tok), ParseError> {
        let cur = std::mem::replace(&mut self.lookahead, (0, Tok::Eof));
        self.lookahead = self.lexer.next_tok()?;
        Ok(cur)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let (pos, tok) = self.advance()?;
        if tok == want {
            Ok(())
        } else {
            Err(ParseError::Syntax { pos, msg: format!("expected {what}, found {tok:?}") })
        }
    }

    // seq := tens (';' tens)*      left-assoc
    fn seq(&mut self) -> Result<Term, ParseError> {
        let mut t = self.tens()?;
        while self.lookahead.1 == Tok::Semi {
            self.advance()?;
            t = seq(t, self.tens()?);
        }
        Ok(t)
    }

    // tens := atom ('*' atom)*     left-assoc
    fn tens(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?;
        while self.lookahead.1 == Tok::Star {
            self.advance()?;
            t = tens(t, self.atom()?);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let (pos, tok) = self.advance()?;
        match tok {
            Tok::LParen => {
                let t = self.seq()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Ident(name) => match name.as_str() {
                "id" => Ok(Term::Id1),
                "id0" => Ok(Term::Id0),
                "swap" => Ok(Term::Sym),
                _ => {
                    if self.lookahead.1 == Tok::LParen {
                        self.advance()?;
                        let (vpos, vtok) = self.advance()?;
                        let v = match vtok {
                            Tok::Int(v) => v,
                            other => {
                                return Err(ParseError::Syntax {
                                    pos: vpos,
                                    msg: format!("expected state value, found {other:?}"),
                                })
                            }
                        };
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(gen_state(&name, v))
                    } else {
                        Ok(gen(&name))
                    }
                }
            },
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("expected a term, found {other:?}"),
            }),
        }
    }
}

/// Parse a term without checking sorts or generator symbols.
pub fn parse_term_raw(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.seq()?;
    let (pos, tok) = p.advance()?;
    if tok != Tok::Eof {
        return Err(ParseError::Syntax { pos, msg: format!("trailing input {tok:?}") });
    }
    Ok(t)
}

/// Parse a term and infer its sort against the signature; rejects unknown
/// symbols, bad states and sort mismatches.
pub fn parse_term(text: &str, sig: &Signature) -> Result<(Term, Sort), ParseError> {
    let t = parse_term_raw(text)?;
    let sort = sig.infer_sort(&t)?;
    Ok((t, sort))
}

// ---------------------------------------------------------------------------
// Signature file format (JSON)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SigFile {
    generators: Vec<GenFile>,
    #[serde(default = "default_mode")]
    frobenius: FrobeniusMode,
}

fn default_mode() -> FrobeniusMode {
    FrobeniusMode::None
}

#[derive(Serialize, Deserialize)]
struct GenFile {
    symbol: String,
    arity: usize,
    coarity: usize,
    #[serde(default)]
    stateful: bool,
    #[serde(default)]
    state_space: Option<Vec<Label>>,
    #[serde(default)]
    rule: Option<String>,
    #[serde(default)]
    transitions: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    #[serde(default)]
    state: Option<Label>,
    #[serde(rename = "in")]
    input: String,
    #[serde(rename = "out")]
    output: String,
    next: String,
}

#[derive(Debug, Error)]
pub enum SigLoadError {
    #[error("bad signature JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("generator `{symbol}`: unknown builtin rule `{rule}`")]
    UnknownRule { symbol: String, rule: String },
    #[error("generator `{symbol}`: {source}")]
    BadWord { symbol: String, source: crate::algebra::AlgebraError },
    #[error("generator `{symbol}`: bad target `{target}`: {source}")]
    BadTarget { symbol: String, target: String, source: ParseError },
}

fn builtin_rule(name: &str) -> Option<GenRule> {
    Some(match name {
        "bdel" => GenRule::BDel,
        "bcopy" => GenRule::BCopy,
        "bnew" => GenRule::BNew,
        "bmerge" => GenRule::BMerge,
        "wadd" => GenRule::WAdd,
        "wzero" => GenRule::WZero,
        "wcopy" => GenRule::WCopy,
        "wdel" => GenRule::WDel,
        "reg" => GenRule::Reg,
        "coreg" => GenRule::CoReg,
        "amp" => GenRule::Amp,
        "coamp" => GenRule::CoAmp,
        _ => return None,
    })
}

/// Load a signature from its JSON file format. Transition targets may be
/// generator symbols (`"y"`, `"reg(2)"`) or arbitrary term strings; word
/// fields use [`Word::parse`].
pub fn load_signature(json: &str, algebra: LabelAlgebra) -> Result<Signature, SigLoadError> {
    let file: SigFile = serde_json::from_str(json)?;
    let mut sig = Signature::new(algebra, file.frobenius);
    for g in &file.generators {
        let rule = match &g.rule {
            Some(name) => builtin_rule(name).ok_or_else(|| SigLoadError::UnknownRule {
                symbol: g.symbol.clone(),
                rule: name.clone(),
            })?,
            None => {
                let mut entries = Vec::new();
                for e in &g.transitions {
                    let parse_word = |s: &str| {
                        Word::parse(s).map_err(|source| SigLoadError::BadWord {
                            symbol: g.symbol.clone(),
                            source,
                        })
                    };
                    let next_term = parse_term_raw(&e.next).map_err(|source| {
                        SigLoadError::BadTarget {
                            symbol: g.symbol.clone(),
                            target: e.next.clone(),
                            source,
                        }
                    })?;
                    let next = match next_term {
                        Term::Gen { symbol, state } => Target::Symbol { symbol, state },
                        other => Target::Term(other),
                    };
                    entries.push(TableEntry {
                        state: e.state,
                        input: parse_word(&e.input)?,
                        output: parse_word(&e.output)?,
                        next,
                    });
                }
                GenRule::Table(entries)
            }
        };
        let state_space = if g.stateful {
            Some(
                g.state_space
                    .clone()
                    .unwrap_or_else(|| sig.algebra.carrier().to_vec()),
            )
        } else {
            None
        };
        sig.add_generator(Generator {
            symbol: g.symbol.clone(),
            arity: g.arity,
            coarity: g.coarity,
            state_space,
            rule,
        })?;
    }
    sig.validate()?;
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LabelAlgebra;

    fn z2_sig() -> Signature {
        circ_signature(LabelAlgebra::from_spec("zmod:2").unwrap()).unwrap()
    }

    #[test]
    fn generator_sorts_match_the_table() {
        let sig = z2_sig();
        let expect = [
            ("bdel", 1, 0),
            ("bcopy", 1, 2),
            ("reg", 1, 1),
            ("amp", 1, 1),
            ("wadd", 2, 1),
            ("wzero", 0, 1),
            ("bnew", 0, 1),
            ("bmerge", 2, 1),
            ("coreg", 1, 1),
            ("coamp", 1, 1),
            ("wcopy", 1, 2),
            ("wdel", 1, 0),
        ];
        assert_eq!(sig.generators().count(), 12);
        for (sym, a, c) in expect {
            let g = sig.generator(sym).unwrap();
            assert_eq!((g.arity, g.coarity), (a, c), "{sym}");
        }
        assert_eq!(
            sig.generator("reg").unwrap().state_space.as_deref(),
            Some(&[0, 1][..])
        );
        assert!(sig.generator("amp").unwrap().state_space.is_some());
    }

    #[test]
    fn circ_requires_semiring() {
        let two = LabelAlgebra::from_spec("two").unwrap();
        assert!(circ_signature(two).is_err());
    }

    #[test]
    fn parse_and_sort_examples() {
        let sig = z2_sig();
        let (t, s) = parse_term("bcopy", &sig).unwrap();
        assert_eq!(t, gen("bcopy"));
        assert_eq!(s, Sort::new(1, 2));

        let (t, s) = parse_term("id0", &sig).unwrap();
        assert_eq!(t, Term::Id0);
        assert_eq!(s, Sort::new(0, 0));

        let (t, s) = parse_term("(bnew ; bcopy) * id", &sig).unwrap();
        assert_eq!(t, tens(seq(gen("bnew"), gen("bcopy")), Term::Id1));
        assert_eq!(s, Sort::new(1, 3));
    }

    #[test]
    fn place_term_sorts_to_1_1() {
        let sig = z2_sig();
        assert_eq!(sig.infer_sort(&place_term(0)).unwrap(), Sort::new(1, 1));
        let printed = pretty_print(&place_term(1));
        let (reparsed, _) = parse_term(&printed, &sig).unwrap();
        assert_eq!(reparsed, place_term(1));
    }

    #[test]
    fn seq_mismatch_reported() {
        let sig = z2_sig();
        let err = sig
            .infer_sort(&seq(gen("bcopy"), gen("bcopy")))
            .unwrap_err();
        match err {
            SortError::Mismatch { left, right, .. } => {
                assert_eq!(left, Sort::new(1, 2));
                assert_eq!(right, Sort::new(1, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn state_checks() {
        let sig = z2_sig();
        assert!(parse_term("reg(1)", &sig).is_ok());
        assert!(matches!(
            parse_term("reg(5)", &sig),
            Err(ParseError::Sort(SortError::BadState { .. }))
        ));
        assert!(matches!(
            parse_term("reg", &sig),
            Err(ParseError::Sort(SortError::MissingState(_)))
        ));
        assert!(matches!(
            parse_term("bcopy(1)", &sig),
            Err(ParseError::Sort(SortError::UnexpectedState(_)))
        ));
        assert!(matches!(
            parse_term("mystery", &sig),
            Err(ParseError::Sort(SortError::UnknownGenerator(_)))
        ));
    }

    #[test]
    fn pretty_print_shapes() {
        assert_eq!(pretty_print(&Term::Id1), "id");
        assert_eq!(pretty_print(&tens(Term::Id1, gen_state("reg", 3))), "id * reg(3)");
        // right-nested seq keeps its parens
        let t = seq(gen("a"), seq(gen("b"), gen("c")));
        assert_eq!(pretty_print(&t), "a ; (b ; c)");
        assert_eq!(parse_term_raw(&pretty_print(&t)).unwrap(), t);
        let t2 = seq(seq(gen("a"), gen("b")), gen("c"));
        assert_eq!(pretty_print(&t2), "a ; b ; c");
        assert_eq!(parse_term_raw(&pretty_print(&t2)).unwrap(), t2);
    }

    #[test]
    fn parse_error_position() {
        let err = parse_term_raw("bcopy ; ?").unwrap_err();
        match err {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn perm_term_routes_wires() {
        // identity permutation
        assert_eq!(perm_term(&[0, 1]), id_n(2));
        // single swap
        assert_eq!(perm_term(&[1, 0]), Term::Sym);
        assert_eq!(perm_term(&[]), Term::Id0);
    }

    #[test]
    fn sym_n_m_sorts() {
        let sig = z2_sig();
        for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 3)] {
            let t = sym_n_m(n, m);
            assert_eq!(sig.infer_sort(&t).unwrap(), Sort::new(n + m, n + m));
        }
    }

    #[test]
    fn load_signature_roundtrip() {
        let json = r#"{
            "generators": [
                {"symbol": "x", "arity": 1, "coarity": 2,
                 "transitions": [
                    {"in": "1", "out": "01", "next": "y"},
                    {"in": "0", "out": "00", "next": "x"}]},
                {"symbol": "y", "arity": 1, "coarity": 2, "transitions": []}
            ],
            "frobenius": "none"
        }"#;
        let sig =
            load_signature(json, LabelAlgebra::from_spec("two").unwrap()).unwrap();
        assert_eq!(sig.generators().count(), 2);
        let x = sig.generator("x").unwrap();
        match &x.rule {
            GenRule::Table(entries) => assert_eq!(entries.len(), 2),
            other => panic!("unexpected rule {other:?}"),
        }
    }

    #[test]
    fn load_signature_sort_mismatch() {
        // target y has a different sort than x
        let json = r#"{
            "generators": [
                {"symbol": "x", "arity": 1, "coarity": 2,
                 "transitions": [{"in": "1", "out": "01", "next": "y"}]},
                {"symbol": "y", "arity": 1, "coarity": 1, "transitions": []}
            ]
        }"#;
        let err = load_signature(json, LabelAlgebra::from_spec("two").unwrap());
        assert!(matches!(
            err,
            Err(SigLoadError::Signature(SignatureError::TargetSort { .. }))
        ));
    }
}
