//! Label algebras: the finite carriers that transition labels range over.
//!
//! Every algebra here has a finite, ordered carrier so that transition sets
//! are finitely enumerable. Addition and multiplication may be partial
//! (`nat_capped`, `int_window`): a rule instance whose arithmetic leaves the
//! carrier simply produces no transition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A label value. All built-in carriers embed into `i64`.
pub type Label = i64;

/// A word of labels; the input/output annotation of a transition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Word(pub Vec<Label>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Compact rendering: digits are juxtaposed when every label is a single
    /// decimal digit (`[0,1]` prints as `01`), otherwise comma-separated.
    /// The empty word prints as the empty string.
    pub fn display(&self) -> String {
        if self.0.iter().all(|l| (0..=9).contains(l)) {
            self.0.iter().map(|l| l.to_string()).collect()
        } else {
            self.0
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }

    /// Inverse of [`Word::display`]. Also accepts whitespace/comma separation.
    pub fn parse(s: &str) -> Result<Word, AlgebraError> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        if s.contains(',') || s.contains(' ') {
            let mut vals = Vec::new();
            for tok in s.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                vals.push(
                    tok.parse::<i64>()
                        .map_err(|_| AlgebraError::BadWord(s.to_string()))?,
                );
            }
            Ok(Word(vals))
        } else if s.chars().all(|c| c.is_ascii_digit()) {
            Ok(Word(s.bytes().map(|b| (b - b'0') as i64).collect()))
        } else {
            // a single (possibly negative) number
            s.parse::<i64>()
                .map(|v| Word(vec![v]))
                .map_err(|_| AlgebraError::BadWord(s.to_string()))
        }
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.display())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("unknown algebra `{0}`")]
    Unknown(String),
    #[error("algebra `{0}` requires a positive parameter")]
    BadParameter(String),
    #[error("malformed algebra spec `{0}` (expected e.g. zmod:2, nat:6, bool, two, int:3)")]
    BadSpec(String),
    #[error("malformed word `{0}`")]
    BadWord(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
enum Kind {
    ZMod(i64),
    NatCapped(i64),
    BoolOr,
    TwoSet,
    IntWindow(i64),
}

/// Which algebraic structure the carrier supports. `plain_set` always holds.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Capabilities {
    pub plain_set: bool,
    pub commutative_monoid: bool,
    pub semiring: bool,
    pub abelian_group: bool,
}

/// A finite, ordered label carrier with optional (possibly partial)
/// semiring / abelian-group structure. Immutable after construction.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LabelAlgebra {
    name: String,
    kind: Kind,
    carrier: Vec<Label>,
}

impl LabelAlgebra {
    /// Construct one of the built-in algebras:
    ///
    /// * `zmod(n)` — integers mod n, a semiring and abelian group
    /// * `nat_capped(c)` — naturals `0..=c`, partial (rejecting) addition
    /// * `bool_or` — `{0,1}` with (OR, AND); a semiring, not a group
    /// * `two_set` — `{0,1}` with OR only (commutative monoid)
    /// * `int_window(b)` — integers `-b..=b`, partial abelian group
    pub fn builtin(name: &str, params: &[i64]) -> Result<Self, AlgebraError> {
        let need_positive = |p: &[i64]| -> Result<i64, AlgebraError> {
            match p.first() {
                Some(&v) if v > 0 => Ok(v),
                _ => Err(AlgebraError::BadParameter(name.to_string())),
            }
        };
        let (kind, carrier, display) = match name {
            "zmod" => {
                let n = need_positive(params)?;
                (Kind::ZMod(n), (0..n).collect(), format!("zmod({n})"))
            }
            "nat_capped" | "nat" => {
                let c = need_positive(params)?;
                (Kind::NatCapped(c), (0..=c).collect(), format!("nat_capped({c})"))
            }
            "bool_or" | "bool" => (Kind::BoolOr, vec![0, 1], "bool_or".to_string()),
            "two_set" | "two" => (Kind::TwoSet, vec![0, 1], "two_set".to_string()),
            "int_window" | "int" => {
                let b = need_positive(params)?;
                (Kind::IntWindow(b), (-b..=b).collect(), format!("int_window({b})"))
            }
            other => return Err(AlgebraError::Unknown(other.to_string())),
        };
        Ok(LabelAlgebra { name: display, kind, carrier })
    }

    /// Parse a CLI-style spec: `zmod:2 | nat:6 | bool | two | int:3`.
    pub fn from_spec(spec: &str) -> Result<Self, AlgebraError> {
        let mut it = spec.splitn(2, ':');
        let name = it.next().unwrap_or("");
        let params: Vec<i64> = match it.next() {
            None => Vec::new(),
            Some(p) => vec![p
                .parse::<i64>()
                .map_err(|_| AlgebraError::BadSpec(spec.to_string()))?],
        };
        Self::builtin(name, &params).map_err(|e| match e {
            AlgebraError::Unknown(_) => AlgebraError::BadSpec(spec.to_string()),
            other => other,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The ordered carrier. Order is part of the algebra's identity: it fixes
    /// all enumeration and canonicalization order.
    pub fn carrier(&self) -> &[Label] {
        &self.carrier
    }

    pub fn contains(&self, l: Label) -> bool {
        self.carrier.contains(&l)
    }

    pub fn capabilities(&self) -> Capabilities {
        match self.kind {
            Kind::ZMod(_) => Capabilities {
                plain_set: true,
                commutative_monoid: true,
                semiring: true,
                abelian_group: true,
            },
            Kind::NatCapped(_) => Capabilities {
                plain_set: true,
                commutative_monoid: true,
                semiring: true,
                abelian_group: false,
            },
            Kind::BoolOr => Capabilities {
                plain_set: true,
                commutative_monoid: true,
                semiring: true,
                abelian_group: false,
            },
            Kind::TwoSet => Capabilities {
                plain_set: true,
                commutative_monoid: true,
                semiring: false,
                abelian_group: false,
            },
            Kind::IntWindow(_) => Capabilities {
                plain_set: true,
                commutative_monoid: true,
                semiring: false,
                abelian_group: true,
            },
        }
    }

    /// Additive unit, when additive structure is declared.
    pub fn zero(&self) -> Option<Label> {
        Some(0)
    }

    /// Multiplicative unit, when multiplicative structure is declared.
    pub fn one(&self) -> Option<Label> {
        match self.kind {
            Kind::ZMod(1) => Some(0),
            Kind::ZMod(_) | Kind::NatCapped(_) | Kind::BoolOr => Some(1),
            Kind::TwoSet | Kind::IntWindow(_) => None,
        }
    }

    /// Partial addition: `None` when the sum leaves the carrier.
    pub fn add(&self, x: Label, y: Label) -> Option<Label> {
        debug_assert!(self.contains(x) && self.contains(y));
        match self.kind {
            Kind::ZMod(n) => Some((x + y).rem_euclid(n)),
            Kind::NatCapped(c) => {
                let s = x + y;
                (s <= c).then_some(s)
            }
            Kind::BoolOr | Kind::TwoSet => Some(x | y),
            Kind::IntWindow(b) => {
                let s = x + y;
                (-b..=b).contains(&s).then_some(s)
            }
        }
    }

    /// Partial multiplication, present iff the algebra is a semiring.
    pub fn mul(&self, x: Label, y: Label) -> Option<Label> {
        debug_assert!(self.contains(x) && self.contains(y));
        match self.kind {
            Kind::ZMod(n) => Some((x * y).rem_euclid(n)),
            Kind::NatCapped(c) => {
                let p = x * y;
                (p <= c).then_some(p)
            }
            Kind::BoolOr => Some(x & y),
            Kind::TwoSet | Kind::IntWindow(_) => None,
        }
    }

    /// Additive inverse, present iff the algebra declares group structure.
    pub fn neg(&self, x: Label) -> Option<Label> {
        debug_assert!(self.contains(x));
        match self.kind {
            Kind::ZMod(n) => Some((-x).rem_euclid(n)),
            Kind::IntWindow(_) => Some(-x),
            Kind::NatCapped(_) | Kind::BoolOr | Kind::TwoSet => None,
        }
    }

    /// All `|carrier|^n` words of length `n`, in lexicographic carrier order.
    /// `n = 0` yields exactly the empty word.
    pub fn words(&self, n: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * self.carrier.len());
            for w in &out {
                for &l in &self.carrier {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
            out = next;
        }
        out
    }

    /// All ways of writing `total` as `add(k, l)`, in carrier order.
    pub fn splits(&self, total: Label) -> Vec<(Label, Label)> {
        let mut out = Vec::new();
        for &k in &self.carrier {
            for &l in &self.carrier {
                if self.add(k, l) == Some(total) {
                    out.push((k, l));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(spec: &str) -> LabelAlgebra {
        LabelAlgebra::from_spec(spec).unwrap()
    }

    #[test]
    fn zmod2_is_xor_and() {
        let a = alg("zmod:2");
        assert_eq!(a.carrier(), &[0, 1]);
        assert_eq!(a.add(1, 1), Some(0));
        assert_eq!(a.mul(1, 1), Some(1));
        assert_eq!(a.mul(1, 0), Some(0));
        assert_eq!(a.neg(1), Some(1));
    }

    #[test]
    fn nat_capped_rejects_overflow() {
        let a = alg("nat:3");
        assert_eq!(a.carrier(), &[0, 1, 2, 3]);
        assert_eq!(a.add(2, 2), None);
        assert_eq!(a.add(1, 2), Some(3));
    }

    #[test]
    fn bool_or_is_not_a_group() {
        let a = alg("bool");
        assert_eq!(a.add(1, 1), Some(1));
        assert_eq!(a.add(0, 1), Some(1));
        assert_eq!(a.neg(1), None);
        assert!(a.capabilities().semiring);
        assert!(!a.capabilities().abelian_group);
    }

    #[test]
    fn two_set_has_no_multiplication() {
        let a = alg("two");
        assert_eq!(a.mul(1, 1), None);
        assert!(a.capabilities().commutative_monoid);
        assert!(!a.capabilities().semiring);
    }

    #[test]
    fn int_window_partial_group() {
        let a = alg("int:2");
        assert_eq!(a.carrier(), &[-2, -1, 0, 1, 2]);
        assert_eq!(a.add(2, 1), None);
        assert_eq!(a.neg(-2), Some(2));
        assert!(a.capabilities().abelian_group);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            LabelAlgebra::builtin("frobnicate", &[]),
            Err(AlgebraError::Unknown(_))
        ));
        assert!(matches!(
            LabelAlgebra::builtin("zmod", &[0]),
            Err(AlgebraError::BadParameter(_))
        ));
        assert!(matches!(
            LabelAlgebra::builtin("zmod", &[]),
            Err(AlgebraError::BadParameter(_))
        ));
    }

    #[test]
    fn word_enumeration() {
        let a = alg("zmod:2");
        assert_eq!(a.words(0), vec![Word::empty()]);
        assert_eq!(
            a.words(2),
            vec![
                Word(vec![0, 0]),
                Word(vec![0, 1]),
                Word(vec![1, 0]),
                Word(vec![1, 1])
            ]
        );
        let n1 = alg("nat:1");
        assert_eq!(n1.words(1), vec![Word(vec![0]), Word(vec![1])]);
    }

    #[test]
    fn word_count_and_distinctness() {
        for spec in ["zmod:3", "nat:2", "int:1"] {
            let a = alg(spec);
            for n in 0..=3 {
                let ws = a.words(n);
                assert_eq!(ws.len(), a.carrier().len().pow(n as u32));
                let mut dedup = ws.clone();
                dedup.sort();
                dedup.dedup();
                assert_eq!(dedup.len(), ws.len());
            }
        }
    }

    /// Exhaustive semiring axiom check on every built-in with total add.
    #[test]
    fn semiring_axioms_exhaustive() {
        for spec in ["zmod:2", "zmod:3", "zmod:5", "bool"] {
            let a = alg(spec);
            let c = a.carrier().to_vec();
            let zero = a.zero().unwrap();
            let one = a.one().unwrap();
            for &x in &c {
                assert_eq!(a.add(x, zero), Some(x));
                assert_eq!(a.mul(x, one), Some(x));
                assert_eq!(a.mul(one, x), Some(x));
                assert_eq!(a.mul(x, zero), Some(zero));
                for &y in &c {
                    assert_eq!(a.add(x, y), a.add(y, x));
                    for &z in &c {
                        assert_eq!(
                            a.add(a.add(x, y).unwrap(), z),
                            a.add(x, a.add(y, z).unwrap())
                        );
                        assert_eq!(
                            a.mul(a.mul(x, y).unwrap(), z),
                            a.mul(x, a.mul(y, z).unwrap())
                        );
                        // distributivity
                        let lhs = a.mul(x, a.add(y, z).unwrap()).unwrap();
                        let rhs = a
                            .add(a.mul(x, y).unwrap(), a.mul(x, z).unwrap())
                            .unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn group_axiom_zmod() {
        for n in [2, 3, 5, 7] {
            let a = LabelAlgebra::builtin("zmod", &[n]).unwrap();
            for &x in a.carrier() {
                assert_eq!(a.add(x, a.neg(x).unwrap()), Some(0));
            }
        }
    }

    #[test]
    fn word_display_roundtrip() {
        for w in [Word::empty(), Word(vec![0, 1, 1]), Word(vec![-2, 10])] {
            assert_eq!(Word::parse(&w.display()).unwrap(), w);
        }
    }
}
