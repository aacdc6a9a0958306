//! End-to-end acceptance checks. Each test prints a single PASS line on
//! success; a failing assertion is the FAIL signal.

use diagram_sos::algebra::{LabelAlgebra, Word};
use diagram_sos::bisim::{
    check_frobenius_axioms, congruence_probe, congruent_variant, lawvere_counterexample,
    random_term,
};
use diagram_sos::diagram::congruent;
use diagram_sos::proccalc::{self, Mode};
use diagram_sos::sos::{generator_transitions, step, Limits, StepEngine};
use diagram_sos::syntax::{
    circ_signature, gen, gen_state, id_n, place_term, seq, seq_all, sym_n_m, tens,
    FrobeniusMode, Signature, SortError, Term,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::process::Command;

fn z2() -> Signature {
    circ_signature(LabelAlgebra::from_spec("zmod:2").unwrap()).unwrap()
}

fn nat6() -> Signature {
    circ_signature(LabelAlgebra::from_spec("nat:6").unwrap()).unwrap()
}

#[test]
fn acceptance_01_sorting() {
    let sig = z2();
    let expected = [
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
    assert_eq!(sig.generators().count(), expected.len());
    for (symbol, a, c) in expected {
        let g = sig.generator(symbol).unwrap();
        assert_eq!((g.arity, g.coarity), (a, c), "{symbol}");
    }
    // the five composite sorting rules: ;, *, id, id0, swap
    let s = |t: &Term| sig.infer_sort(t).unwrap();
    let sort = |l, r| diagram_sos::syntax::Sort::new(l, r);
    assert_eq!(s(&seq(gen("bcopy"), gen("bmerge"))), sort(1, 1));
    assert_eq!(s(&tens(gen("bnew"), gen("wdel"))), sort(1, 1));
    assert_eq!(s(&tens(gen("bcopy"), gen("bcopy"))), sort(2, 4));
    assert_eq!(s(&Term::Id1), sort(1, 1));
    assert_eq!(s(&Term::Id0), sort(0, 0));
    assert_eq!(s(&Term::Sym), sort(2, 2));
    // ill-sorted composition is rejected with the offending boundary
    assert!(matches!(
        sig.infer_sort(&seq(gen("bcopy"), gen("bdel"))),
        Err(SortError::Mismatch { .. })
    ));
    // the flagship place diagram sorts to (1, 1)
    assert_eq!(nat6().infer_sort(&place_term(2)).unwrap(), sort(1, 1));
    println!("ACCEPTANCE 1 (sorting): PASS");
}

#[test]
fn acceptance_02_place_law() {
    // p_k --i/o--> p_{i+k-o} iff o <= k and i+k-o stays within the cap
    let sig = nat6();
    let engine = StepEngine::new(&sig);
    for k in 0..=5i64 {
        let got: BTreeSet<(String, String, String)> = step(&place_term(k), &sig)
            .unwrap()
            .into_iter()
            .map(|tr| {
                (
                    tr.input.to_string(),
                    tr.output.to_string(),
                    engine.canonical_key(&tr.next).unwrap(),
                )
            })
            .collect();
        let mut want = BTreeSet::new();
        for i in 0..=6i64 {
            for o in 0..=6i64 {
                let next = i + k - o;
                if o <= k && next <= 6 {
                    want.insert((
                        Word(vec![i]).to_string(),
                        Word(vec![o]).to_string(),
                        engine.canonical_key(&place_term(next)).unwrap(),
                    ));
                }
            }
        }
        assert_eq!(got, want, "place law failed at k={k}");
    }
    println!("ACCEPTANCE 2 (petri place law): PASS");
}

#[test]
fn acceptance_03_structural_congruence() {
    let sig = z2();
    // the stacked and the fully sequential renderings of the place diagram
    let alt = seq_all(vec![
        tens(gen("bnew"), Term::Id1),
        tens(gen("bcopy"), Term::Id1),
        tens(Term::Id1, gen("wadd")),
        tens(Term::Id1, gen_state("reg", 1)),
        tens(Term::Id1, gen("wcopy")),
        tens(gen("bmerge"), Term::Id1),
        tens(gen("bdel"), Term::Id1),
    ]);
    assert!(congruent(&place_term(1), &alt, &sig).unwrap());

    // the ten symmetric-monoidal-category laws, each instantiated 50 times
    // with random sorted terms
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rand = |sort: (usize, usize)| random_term(sort, 3, &sig, &mut rng);
    for round in 0..50 {
        let nm = 1 + (round % 2);
        let f = rand((1, nm));
        let g = rand((nm, 1));
        let h = rand((1, 1));
        let i = rand((1, 1));
        let cases: Vec<(Term, Term)> = vec![
            // (f*g)*h = f*(g*h)
            (
                tens(tens(f.clone(), g.clone()), h.clone()),
                tens(f.clone(), tens(g.clone(), h.clone())),
            ),
            // id0 * f = f and f * id0 = f
            (tens(Term::Id0, f.clone()), f.clone()),
            (tens(f.clone(), Term::Id0), f.clone()),
            // swap ; swap = id2
            (seq(Term::Sym, Term::Sym), id_n(2)),
            // (f;g)*(h;i) = (f*h);(g*i)
            (
                tens(seq(f.clone(), g.clone()), seq(h.clone(), i.clone())),
                seq(tens(f.clone(), h.clone()), tens(g.clone(), i.clone())),
            ),
            // (f;g);h = f;(g;h)
            (
                seq(seq(f.clone(), g.clone()), h.clone()),
                seq(f.clone(), seq(g.clone(), h.clone())),
            ),
            // f;id = f and id;f = f
            (seq(f.clone(), id_n(nm)), f.clone()),
            (seq(id_n(1), f.clone()), f.clone()),
            // naturality of the symmetry on both sides
            (
                seq(sym_n_m(1, 1), tens(h.clone(), Term::Id1)),
                seq(tens(Term::Id1, h.clone()), sym_n_m(1, 1)),
            ),
            (
                seq(sym_n_m(1, 1), tens(Term::Id1, i.clone())),
                seq(tens(i.clone(), Term::Id1), sym_n_m(1, 1)),
            ),
        ];
        for (idx, (l, r)) in cases.iter().enumerate() {
            assert!(
                congruent(l, r, &sig).unwrap(),
                "law {idx} failed on round {round}"
            );
        }
    }
    println!("ACCEPTANCE 3 (structural congruence): PASS");
}

#[test]
fn acceptance_04_congruence_invariance_of_step() {
    // rewrite-related terms have identical transition sets
    let sig = z2();
    let mut engine = StepEngine::new(&sig);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for round in 0..100 {
        let sort = (1 + round % 2, 1 + (round / 2) % 2);
        let t = random_term(sort, 4, &sig, &mut rng);
        let v = congruent_variant(&t, &mut rng, &sig, 3);
        assert!(congruent(&t, &v, &sig).unwrap());
        let keyed = |t: &Term, engine: &mut StepEngine| -> BTreeSet<(String, String, String)> {
            step(t, &sig)
                .unwrap()
                .into_iter()
                .map(|tr| {
                    (
                        tr.input.to_string(),
                        tr.output.to_string(),
                        engine.canonical_key(&tr.next).unwrap(),
                    )
                })
                .collect()
        };
        assert_eq!(keyed(&t, &mut engine), keyed(&v, &mut engine), "round {round}");
    }
    println!("ACCEPTANCE 4 (congruence invariance): PASS");
}

#[test]
fn acceptance_05_black_frobenius() {
    for spec in ["zmod:2", "zmod:3", "bool", "two"] {
        let alg = LabelAlgebra::from_spec(spec).unwrap();
        let rep =
            check_frobenius_axioms(FrobeniusMode::Black, alg, Limits::default()).unwrap();
        assert!(rep.complete, "{spec}: truncated LTS");
        assert!(rep.all_pass, "{spec}: {:?}", rep.axioms);
        assert_eq!(rep.axioms.len(), 11);
    }
    println!("ACCEPTANCE 5 (black frobenius): PASS");
}

#[test]
fn acceptance_06_white_frobenius() {
    for spec in ["zmod:2", "zmod:3", "zmod:5"] {
        let alg = LabelAlgebra::from_spec(spec).unwrap();
        let rep =
            check_frobenius_axioms(FrobeniusMode::White, alg, Limits::default()).unwrap();
        assert!(rep.complete && rep.all_pass, "{spec}: {:?}", rep.axioms);
    }
    // bool_or has no additive inverses: some axiom must fail, with a witness
    let alg = LabelAlgebra::from_spec("bool").unwrap();
    let rep = check_frobenius_axioms(FrobeniusMode::White, alg, Limits::default()).unwrap();
    assert!(!rep.all_pass);
    let failing: Vec<_> = rep.axioms.iter().filter(|a| !a.related).collect();
    assert!(!failing.is_empty());
    assert!(
        failing.iter().any(|a| a.witness.is_some()),
        "no concrete witness trace: {failing:?}"
    );
    println!("ACCEPTANCE 6 (white frobenius): PASS");
}

#[test]
fn acceptance_07_compositionality() {
    let sig = z2();
    let rep = congruence_probe(&sig, 200, 6, 0, Limits::default()).unwrap();
    assert_eq!(rep.samples, 200);
    assert!(rep.pairs_tested > 0);
    assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    println!("ACCEPTANCE 7 (compositionality probe): PASS");
}

#[test]
fn acceptance_08_lawvere_counterexample() {
    let rep = lawvere_counterexample(Limits::default()).unwrap();
    assert_eq!(rep.seq_outputs, vec!["aa".to_string(), "bb".to_string()]);
    assert_eq!(
        rep.tens_outputs,
        vec!["aa".to_string(), "ab".to_string(), "ba".to_string(), "bb".to_string()]
    );
    assert!(!rep.related);
    assert_eq!(rep.witness.as_ref().map(|w| w.len()), Some(1));
    println!("ACCEPTANCE 8 (lawvere counterexample): PASS");
}

#[test]
fn acceptance_09_toy_coalgebra() {
    let json = include_str!("data/toy_coalgebra.json");
    let alg = LabelAlgebra::from_spec("two").unwrap();
    let sig = diagram_sos::syntax::load_signature(json, alg).unwrap();
    let pairs = |sym: &str| -> Vec<(String, String, String)> {
        generator_transitions(&sig, sym, None)
            .unwrap()
            .into_iter()
            .map(|tr| {
                (
                    tr.input.to_string(),
                    tr.output.to_string(),
                    diagram_sos::syntax::pretty_print(&tr.next),
                )
            })
            .collect()
    };
    assert_eq!(
        pairs("x"),
        vec![
            ("0".into(), "00".into(), "x".into()),
            ("1".into(), "01".into(), "y".into())
        ]
    );
    assert_eq!(pairs("y"), vec![]);
    assert_eq!(pairs("z"), vec![("1".into(), "0".into(), "z".into())]);
    println!("ACCEPTANCE 9 (toy coalgebra): PASS");
}

#[test]
fn acceptance_10_process_diagram_correspondence() {
    let decls = proccalc::parse_declarations(include_str!("data/ex5.proc")).unwrap();
    let root = proccalc::parse_process("nu(2) (f [perm 1 2] | g)").unwrap();
    let tp = proccalc::type_check(1, &root, &decls).unwrap();

    // the displayed behaviour of the restricted system: a loop on {a1}
    // (g alone) and the hidden synchronisation on a2
    let steps = proccalc::proc_step(&root, &decls, Mode::Hoare).unwrap();
    assert!(steps
        .iter()
        .any(|(a, p)| a.to_string() == "{a1}" && *p == root));
    assert!(steps
        .iter()
        .any(|(a, p)| a.to_string() == "0" && *p != root));

    let rep =
        proccalc::theorem_check(&tp, &decls, Mode::Hoare, 3, None, Limits::default()).unwrap();
    assert!(rep.pass, "hoare: {:?}", rep.mismatches);

    let decls = proccalc::parse_declarations("f(1) := a1 . f\nh(1) := -a1 . h").unwrap();
    let root = proccalc::parse_process("nu(1) (f | h)").unwrap();
    let tp = proccalc::type_check(0, &root, &decls).unwrap();
    let rep =
        proccalc::theorem_check(&tp, &decls, Mode::Milner, 3, None, Limits::default()).unwrap();
    assert!(rep.pass, "milner: {:?}", rep.mismatches);
    println!("ACCEPTANCE 10 (process calculus correspondence): PASS");
}

// ---------------------------------------------------------------------------
// CLI integration
// ---------------------------------------------------------------------------

fn dsos(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dsos"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn cli_roundtrip() {
    let out = dsos(&["sort", "--algebra", "nat:6", "--term", "place:2"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "(1, 1)");

    let out = dsos(&[
        "sos", "lts", "--algebra", "nat:6", "--term", "place:2", "--format", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout))
        .expect("valid JSON");
    assert_eq!(v["sort"], serde_json::json!([1, 1]));
    assert_eq!(v["complete"], serde_json::json!(true));
    assert_eq!(v["states"].as_array().unwrap().len(), 7);

    let out = dsos(&[
        "bisim", "check", "--algebra", "zmod:2", "--left", "bnew;bdel", "--right", "id0",
    ]);
    assert!(out.status.success(), "{out:?}");

    let out = dsos(&[
        "bisim", "check", "--algebra", "zmod:2", "--left", "bcopy", "--right", "wcopy",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = dsos(&["parse", "--term", "bcopy ;"]);
    assert_eq!(out.status.code(), Some(2));

    let out = dsos(&[
        "proc", "theorem", "--mode", "hoare", "--depth", "3",
        "--decls", concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/ex5.proc"),
        "--root", "1: nu(2) (f [perm 1 2] | g)",
    ]);
    assert!(out.status.success(), "{out:?}");
    println!("CLI integration: PASS");
}
