//! Python bindings for the diagram semantics library.
//!
//! The API mirrors the Rust one: build a `Signature`, parse `Term`s against
//! it, then derive transitions, decide congruence/bisimilarity, and run the
//! report-producing checks. Structured reports are returned as JSON strings
//! so Python can `json.loads` them.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use diagram_sos::algebra::LabelAlgebra;
use diagram_sos::bisim;
use diagram_sos::diagram::{self, OpenHypergraph};
use diagram_sos::proccalc;
use diagram_sos::sos::{self, Limits};
use diagram_sos::syntax::{self, FrobeniusMode};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_algebra(spec: &str) -> PyResult<LabelAlgebra> {
    LabelAlgebra::from_spec(spec).map_err(err)
}

fn parse_mode(mode: &str) -> PyResult<FrobeniusMode> {
    match mode {
        "black" => Ok(FrobeniusMode::Black),
        "white" => Ok(FrobeniusMode::White),
        other => Err(PyValueError::new_err(format!(
            "mode must be `black` or `white`, got `{other}`"
        ))),
    }
}

fn parse_sync(mode: &str) -> PyResult<proccalc::Mode> {
    match mode {
        "hoare" => Ok(proccalc::Mode::Hoare),
        "milner" => Ok(proccalc::Mode::Milner),
        other => Err(PyValueError::new_err(format!(
            "mode must be `hoare` or `milner`, got `{other}`"
        ))),
    }
}

fn limits(max_states: usize, max_depth: usize) -> Limits {
    Limits { max_states, max_depth }
}

const DEFAULTS: Limits = Limits { max_states: 10_000, max_depth: 64 };

/// A generator signature over a label algebra.
#[pyclass(frozen)]
struct Signature {
    inner: syntax::Signature,
}

#[pymethods]
impl Signature {
    /// The twelve-generator circuit signature; requires a semiring algebra
    /// such as "zmod:2" or "nat:6".
    #[staticmethod]
    fn circ(algebra: &str) -> PyResult<Self> {
        let sig = syntax::circ_signature(parse_algebra(algebra)?).map_err(err)?;
        Ok(Signature { inner: sig })
    }

    /// The four structure generators copy/del/merge/unit read in black or
    /// white mode.
    #[staticmethod]
    fn cw(algebra: &str, mode: &str) -> PyResult<Self> {
        let sig =
            syntax::cw_signature(parse_algebra(algebra)?, parse_mode(mode)?).map_err(err)?;
        Ok(Signature { inner: sig })
    }

    /// Load a signature from its JSON description.
    #[staticmethod]
    fn load(json: &str, algebra: &str) -> PyResult<Self> {
        let sig = syntax::load_signature(json, parse_algebra(algebra)?).map_err(err)?;
        Ok(Signature { inner: sig })
    }

    fn generators(&self) -> Vec<String> {
        self.inner.generators().map(|g| g.symbol.clone()).collect()
    }

    fn algebra(&self) -> String {
        self.inner.algebra.name().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Signature({} generators over {})",
            self.inner.generators().count(),
            self.inner.algebra.name()
        )
    }
}

/// A sorted diagram term.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Term {
    inner: syntax::Term,
}

#[pymethods]
impl Term {
    /// Parse surface syntax (`;`, `*`, `id`, `id0`, `swap`, `gen(state)`)
    /// and sort-check against the signature.
    #[staticmethod]
    fn parse(text: &str, sig: &Signature) -> PyResult<Self> {
        let (t, _) = syntax::parse_term(text, &sig.inner).map_err(err)?;
        Ok(Term { inner: t })
    }

    /// The one-place buffer diagram with k tokens.
    #[staticmethod]
    fn place(k: i64) -> Self {
        Term { inner: syntax::place_term(k) }
    }

    fn sort(&self, sig: &Signature) -> PyResult<(usize, usize)> {
        let s = sig.inner.infer_sort(&self.inner).map_err(err)?;
        Ok((s.left, s.right))
    }

    /// DOT rendering of the term's open hypergraph.
    fn dot(&self, sig: &Signature) -> PyResult<String> {
        let g = OpenHypergraph::from_term(&self.inner, &sig.inner).map_err(err)?;
        Ok(g.to_dot())
    }

    /// The canonical-form key deciding structural congruence.
    fn canonical_key(&self, sig: &Signature) -> PyResult<String> {
        let g = OpenHypergraph::from_term(&self.inner, &sig.inner).map_err(err)?;
        Ok(g.canonical_form())
    }

    fn __str__(&self) -> String {
        syntax::pretty_print(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Term({})", syntax::pretty_print(&self.inner))
    }
}

/// Structural congruence: equality modulo the symmetric-monoidal laws.
#[pyfunction]
fn congruent(left: &Term, right: &Term, sig: &Signature) -> PyResult<bool> {
    diagram::congruent(&left.inner, &right.inner, &sig.inner).map_err(err)
}

/// One-step transitions of a term as (input, output, next) triples.
#[pyfunction]
fn step(term: &Term, sig: &Signature) -> PyResult<Vec<(String, String, Term)>> {
    let trs = sos::step(&term.inner, &sig.inner).map_err(err)?;
    Ok(trs
        .into_iter()
        .map(|tr| {
            (
                tr.input.to_string(),
                tr.output.to_string(),
                Term { inner: tr.next },
            )
        })
        .collect())
}

/// Breadth-first LTS of a term, as the JSON document the CLI emits.
#[pyfunction]
#[pyo3(signature = (term, sig, max_states=DEFAULTS.max_states, max_depth=DEFAULTS.max_depth))]
fn lts_json(term: &Term, sig: &Signature, max_states: usize, max_depth: usize) -> PyResult<String> {
    let lts =
        sos::build_lts(&term.inner, &sig.inner, limits(max_states, max_depth)).map_err(err)?;
    Ok(lts.to_json())
}

/// Strong bisimilarity; returns the full result record as JSON.
#[pyfunction]
#[pyo3(signature = (left, right, sig, max_states=DEFAULTS.max_states, max_depth=DEFAULTS.max_depth))]
fn bisimilar(
    left: &Term,
    right: &Term,
    sig: &Signature,
    max_states: usize,
    max_depth: usize,
) -> PyResult<String> {
    let res = bisim::bisimilar(
        &left.inner,
        &right.inner,
        &sig.inner,
        limits(max_states, max_depth),
    )
    .map_err(err)?;
    serde_json::to_string(&res).map_err(err)
}

/// Check the eleven special Frobenius bimonoid axioms; JSON report.
#[pyfunction]
fn check_frobenius(mode: &str, algebra: &str) -> PyResult<String> {
    let rep = bisim::check_frobenius_axioms(parse_mode(mode)?, parse_algebra(algebra)?, DEFAULTS)
        .map_err(err)?;
    serde_json::to_string(&rep).map_err(err)
}

/// Random compositionality probe; JSON report.
#[pyfunction]
#[pyo3(signature = (algebra="zmod:2", samples=50, max_size=5, seed=0))]
fn congruence_probe(algebra: &str, samples: usize, max_size: usize, seed: u64) -> PyResult<String> {
    let sig = syntax::circ_signature(parse_algebra(algebra)?).map_err(err)?;
    let rep = bisim::congruence_probe(&sig, samples, max_size, seed, DEFAULTS).map_err(err)?;
    serde_json::to_string(&rep).map_err(err)
}

/// The copying-a-nondeterministic-source counterexample; JSON report.
#[pyfunction]
fn lawvere_demo() -> PyResult<String> {
    let rep = bisim::lawvere_counterexample(DEFAULTS).map_err(err)?;
    serde_json::to_string(&rep).map_err(err)
}

/// A set of process declarations plus the operations of the calculus.
#[pyclass(frozen)]
struct ProcSystem {
    decls: proccalc::Declarations,
}

#[pymethods]
impl ProcSystem {
    /// Parse declarations, one `f(n) := a1 . P + ...` per line.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(ProcSystem { decls: proccalc::parse_declarations(text).map_err(err)? })
    }

    /// Check `width |- process` and return the process's alphabet.
    fn typecheck(&self, width: usize, process: &str) -> PyResult<Vec<usize>> {
        let p = proccalc::parse_process(process).map_err(err)?;
        let tp = proccalc::type_check(width, &p, &self.decls).map_err(err)?;
        let al = proccalc::alphabet(&tp.process, &self.decls).map_err(err)?;
        Ok(al.into_iter().collect())
    }

    /// The diagram term encoding `width |- process`.
    fn encode(&self, width: usize, process: &str) -> PyResult<Term> {
        let p = proccalc::parse_process(process).map_err(err)?;
        let t = proccalc::encode(width, &p, &self.decls).map_err(err)?;
        Ok(Term { inner: t })
    }

    /// One-step process transitions as (action, successor) strings.
    fn step(&self, process: &str, mode: &str) -> PyResult<Vec<(String, String)>> {
        let p = proccalc::parse_process(process).map_err(err)?;
        let steps = proccalc::proc_step(&p, &self.decls, parse_sync(mode)?).map_err(err)?;
        Ok(steps
            .into_iter()
            .map(|(a, q)| (a.to_string(), q.to_string()))
            .collect())
    }

    /// Check both directions of the process/diagram correspondence; JSON
    /// report.
    #[pyo3(signature = (width, process, mode, depth=3))]
    fn theorem(&self, width: usize, process: &str, mode: &str, depth: usize) -> PyResult<String> {
        let p = proccalc::parse_process(process).map_err(err)?;
        let tp = proccalc::type_check(width, &p, &self.decls).map_err(err)?;
        let rep = proccalc::theorem_check(&tp, &self.decls, parse_sync(mode)?, depth, None, DEFAULTS)
            .map_err(err)?;
        serde_json::to_string(&rep).map_err(err)
    }
}

#[pymodule]
fn diagram_sos_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Signature>()?;
    m.add_class::<Term>()?;
    m.add_class::<ProcSystem>()?;
    m.add_function(wrap_pyfunction!(congruent, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(lts_json, m)?)?;
    m.add_function(wrap_pyfunction!(bisimilar, m)?)?;
    m.add_function(wrap_pyfunction!(check_frobenius, m)?)?;
    m.add_function(wrap_pyfunction!(congruence_probe, m)?)?;
    m.add_function(wrap_pyfunction!(lawvere_demo, m)?)?;
    Ok(())
}
