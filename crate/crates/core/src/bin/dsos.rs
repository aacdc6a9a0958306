//! Command-line front door for the diagram semantics library.

use clap::{Args, Parser, Subcommand, ValueEnum};
use diagram_sos::algebra::LabelAlgebra;
use diagram_sos::bisim::{
    bisimilar, check_frobenius_axioms, congruence_probe, lawvere_counterexample,
};
use diagram_sos::diagram::{congruent, OpenHypergraph};
use diagram_sos::proccalc::{
    self, Mode, Process, TypedProcess,
};
use diagram_sos::sos::{build_lts, step, Limits};
use diagram_sos::syntax::{
    circ_signature, load_signature, parse_term, place_term, pretty_print, FrobeniusMode,
    Signature, Term,
};
use serde::Serialize;
use std::process::ExitCode;

const SCHEMA: &str = "diagram-sos/1";

#[derive(Parser)]
#[command(name = "dsos", version, about = "Operational semantics of string diagrams")]
struct Cli {
    /// Label algebra: zmod:N | nat:C | bool | two | int:B
    #[arg(long, global = true, default_value = "zmod:2")]
    algebra: String,
    /// Signature JSON file; defaults to the built-in circuit signature
    #[arg(long, global = true)]
    signature: Option<std::path::PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Args, Clone, Copy)]
struct LimitArgs {
    #[arg(long, default_value_t = Limits::default().max_states)]
    max_states: usize,
    #[arg(long, default_value_t = Limits::default().max_depth)]
    max_depth: usize,
}

impl From<LimitArgs> for Limits {
    fn from(a: LimitArgs) -> Limits {
        Limits { max_states: a.max_states, max_depth: a.max_depth }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term and echo its normalized surface syntax
    Parse {
        #[arg(long)]
        term: String,
    },
    /// Infer the sort of a term
    Sort {
        #[arg(long)]
        term: String,
    },
    /// Decide structural congruence of two terms
    Congruent {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Hypergraph views of terms
    #[command(subcommand)]
    Diagram(DiagramCmd),
    /// Transition derivation
    #[command(subcommand)]
    Sos(SosCmd),
    /// Bisimilarity checking
    #[command(subcommand)]
    Bisim(BisimCmd),
    /// Check the special Frobenius bimonoid axioms up to bisimilarity
    CheckFrobenius {
        #[arg(long, value_enum, default_value_t = FrobMode::Black)]
        mode: FrobMode,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Randomized compositionality check: bisimilar pairs stay bisimilar in
    /// context
    CongruenceProbe {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 6)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Show that copying a nondeterministic source is not natural
    LawvereDemo {
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Process-calculus front end
    #[command(subcommand)]
    Proc(ProcCmd),
}

#[derive(Subcommand)]
enum DiagramCmd {
    /// Emit the term's open hypergraph in DOT
    Dot {
        #[arg(long)]
        term: String,
    },
}

#[derive(Subcommand)]
enum SosCmd {
    /// One-step transitions of a term
    Step {
        #[arg(long)]
        term: String,
    },
    /// Breadth-first labelled transition system of a term
    Lts {
        #[arg(long)]
        term: String,
        #[command(flatten)]
        limits: LimitArgs,
    },
}

#[derive(Subcommand)]
enum BisimCmd {
    /// Decide bisimilarity of two terms
    Check {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[command(flatten)]
        limits: LimitArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FrobMode {
    Black,
    White,
}

#[derive(Clone, Copy, ValueEnum)]
enum SyncMode {
    Hoare,
    Milner,
}

impl From<SyncMode> for Mode {
    fn from(m: SyncMode) -> Mode {
        match m {
            SyncMode::Hoare => Mode::Hoare,
            SyncMode::Milner => Mode::Milner,
        }
    }
}

#[derive(Args, Clone)]
struct ProcInput {
    /// Declarations file, one `f(n) := α . P + …` per line
    #[arg(long, conflicts_with = "decls_text")]
    decls: Option<std::path::PathBuf>,
    /// Declarations inline; `;` separates lines
    #[arg(long)]
    decls_text: Option<String>,
    /// Typed root process, written `n: P`
    #[arg(long)]
    root: String,
}

#[derive(Subcommand)]
enum ProcCmd {
    /// Check well-formedness of the declarations and the typing judgement
    Typecheck(ProcInput),
    /// Emit the diagram term encoding the typed root process
    Encode(ProcInput),
    /// Transition system of the root process
    Lts {
        #[command(flatten)]
        input: ProcInput,
        #[arg(long, value_enum)]
        mode: SyncMode,
        #[arg(long, default_value_t = 1000)]
        max_states: usize,
        #[arg(long, default_value_t = 16)]
        max_depth: usize,
    },
    /// Check that process and diagram transitions agree, both directions
    Theorem {
        #[command(flatten)]
        input: ProcInput,
        #[arg(long, value_enum)]
        mode: SyncMode,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Label window for milner mode; defaults to the component count
        #[arg(long)]
        milner_bound: Option<i64>,
        #[command(flatten)]
        limits: LimitArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DIAGRAM_SOS_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(cli_output: &Option<std::path::PathBuf>, text: &str) -> Result<(), String> {
    match cli_output {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema: &'a str,
    #[serde(flatten)]
    body: T,
}

fn json_of<T: Serialize>(body: T) -> String {
    serde_json::to_string_pretty(&Report { schema: SCHEMA, body }).expect("serializable")
}

fn build_signature(cli: &Cli) -> Result<Signature, String> {
    let algebra =
        LabelAlgebra::from_spec(&cli.algebra).map_err(|e| format!("--algebra: {e}"))?;
    match &cli.signature {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            load_signature(&text, algebra).map_err(|e| e.to_string())
        }
        None => circ_signature(algebra).map_err(|e| e.to_string()),
    }
}

/// `place:k` expands to the one-place Petri net diagram holding k tokens.
fn resolve_term(text: &str, sig: &Signature) -> Result<Term, String> {
    if let Some(k) = text.strip_prefix("place:") {
        let k: i64 = k
            .parse()
            .map_err(|_| format!("place:k needs an integer token count, got `{k}`"))?;
        let t = place_term(k);
        sig.infer_sort(&t).map_err(|e| e.to_string())?;
        return Ok(t);
    }
    parse_term(text, sig).map(|(t, _)| t).map_err(|e| e.to_string())
}

fn load_proc(input: &ProcInput) -> Result<(proccalc::Declarations, TypedProcess), String> {
    let text = match (&input.decls, &input.decls_text) {
        (Some(path), _) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?,
        (None, Some(text)) => text.replace(';', "\n"),
        (None, None) => return Err("one of --decls or --decls-text is required".into()),
    };
    let decls = proccalc::parse_declarations(&text).map_err(|e| e.to_string())?;
    let (width, body) = input
        .root
        .split_once(':')
        .ok_or_else(|| "--root must look like `n: P`".to_string())?;
    let width: usize = width
        .trim()
        .parse()
        .map_err(|_| format!("bad context width `{}`", width.trim()))?;
    let process: Process = proccalc::parse_process(body).map_err(|e| e.to_string())?;
    let tp = proccalc::type_check(width, &process, &decls).map_err(|e| e.to_string())?;
    Ok((decls, tp))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let pass = ExitCode::SUCCESS;
    let fail = ExitCode::from(1);
    match &cli.command {
        Command::Parse { term } => {
            let sig = build_signature(&cli)?;
            let t = resolve_term(term, &sig)?;
            match cli.format {
                Format::Json => emit(
                    &cli.output,
                    &json_of(serde_json::json!({ "term": pretty_print(&t) })),
                )?,
                _ => emit(&cli.output, &pretty_print(&t))?,
            }
            Ok(pass)
        }
        Command::Sort { term } => {
            let sig = build_signature(&cli)?;
            let t = resolve_term(term, &sig)?;
            let sort = sig.infer_sort(&t).map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(
                    &cli.output,
                    &json_of(serde_json::json!({ "sort": [sort.left, sort.right] })),
                )?,
                _ => emit(&cli.output, &format!("({}, {})", sort.left, sort.right))?,
            }
            Ok(pass)
        }
        Command::Congruent { left, right } => {
            let sig = build_signature(&cli)?;
            let l = resolve_term(left, &sig)?;
            let r = resolve_term(right, &sig)?;
            let yes = congruent(&l, &r, &sig).map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(
                    &cli.output,
                    &json_of(serde_json::json!({ "congruent": yes })),
                )?,
                _ => emit(&cli.output, if yes { "congruent" } else { "not congruent" })?,
            }
            Ok(if yes { pass } else { fail })
        }
        Command::Diagram(DiagramCmd::Dot { term }) => {
            let sig = build_signature(&cli)?;
            let t = resolve_term(term, &sig)?;
            let g = OpenHypergraph::from_term(&t, &sig).map_err(|e| e.to_string())?;
            emit(&cli.output, &g.to_dot())?;
            Ok(pass)
        }
        Command::Sos(SosCmd::Step { term }) => {
            let sig = build_signature(&cli)?;
            let t = resolve_term(term, &sig)?;
            let trs = step(&t, &sig).map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => {
                    let rows: Vec<serde_json::Value> = trs
                        .iter()
                        .map(|tr| {
                            serde_json::json!({
                                "in": tr.input.to_string(),
                                "out": tr.output.to_string(),
                                "next": pretty_print(&tr.next),
                            })
                        })
                        .collect();
                    emit(&cli.output, &json_of(serde_json::json!({ "transitions": rows })))?;
                }
                _ => {
                    let mut lines = Vec::new();
                    for tr in &trs {
                        lines.push(format!(
                            "--{}/{}--> {}",
                            tr.input,
                            tr.output,
                            pretty_print(&tr.next)
                        ));
                    }
                    if lines.is_empty() {
                        lines.push("(no transitions)".into());
                    }
                    emit(&cli.output, &lines.join("\n"))?;
                }
            }
            Ok(pass)
        }
        Command::Sos(SosCmd::Lts { term, limits }) => {
            let sig = build_signature(&cli)?;
            let t = resolve_term(term, &sig)?;
            let lts = build_lts(&t, &sig, (*limits).into()).map_err(|e| e.to_string())?;
            if !lts.complete {
                eprintln!(
                    "note: exploration truncated at {} states / depth {}; the LTS is partial",
                    limits.max_states, limits.max_depth
                );
            }
            match cli.format {
                Format::Dot => emit(&cli.output, &lts.to_dot())?,
                Format::Json => emit(&cli.output, &lts.to_json())?,
                Format::Text => emit(
                    &cli.output,
                    &format!(
                        "states: {}\nedges: {}\ncomplete: {}",
                        lts.states.len(),
                        lts.edges.len(),
                        lts.complete
                    ),
                )?,
            }
            Ok(pass)
        }
        Command::Bisim(BisimCmd::Check { left, right, limits }) => {
            let sig = build_signature(&cli)?;
            let l = resolve_term(left, &sig)?;
            let r = resolve_term(right, &sig)?;
            let res = bisimilar(&l, &r, &sig, (*limits).into()).map_err(|e| e.to_string())?;
            if !res.complete_inputs {
                eprintln!(
                    "caveat: at least one LTS was truncated; this verdict is not a proof"
                );
            }
            match cli.format {
                Format::Json => emit(&cli.output, &json_of(&res))?,
                _ => {
                    let mut out = format!(
                        "{} (states: {} vs {}, complete: {})",
                        if res.related { "bisimilar" } else { "not bisimilar" },
                        res.lts_sizes.0,
                        res.lts_sizes.1,
                        res.complete_inputs
                    );
                    if let Some(w) = &res.witness {
                        out.push_str("\nwitness trace:");
                        for (i, o) in w {
                            out.push_str(&format!(" {i}/{o}"));
                        }
                    }
                    emit(&cli.output, &out)?;
                }
            }
            Ok(if res.related { pass } else { fail })
        }
        Command::CheckFrobenius { mode, limits } => {
            let algebra =
                LabelAlgebra::from_spec(&cli.algebra).map_err(|e| format!("--algebra: {e}"))?;
            let fmode = match mode {
                FrobMode::Black => FrobeniusMode::Black,
                FrobMode::White => FrobeniusMode::White,
            };
            let rep = check_frobenius_axioms(fmode, algebra, (*limits).into())
                .map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(&cli.output, &json_of(&rep))?,
                _ => {
                    let mut lines = vec![format!(
                        "{} frobenius over {}: {}",
                        rep.mode,
                        rep.algebra,
                        if rep.all_pass { "all axioms pass" } else { "FAILURES" }
                    )];
                    for ax in &rep.axioms {
                        let mut line = format!(
                            "  {:<16} {}",
                            ax.name,
                            if ax.related { "ok" } else { "FAIL" }
                        );
                        if let Some(w) = &ax.witness {
                            line.push_str("  witness:");
                            for (i, o) in w {
                                line.push_str(&format!(" {i}/{o}"));
                            }
                        }
                        lines.push(line);
                    }
                    emit(&cli.output, &lines.join("\n"))?;
                }
            }
            Ok(if rep.all_pass { pass } else { fail })
        }
        Command::CongruenceProbe { samples, max_size, seed, limits } => {
            let sig = build_signature(&cli)?;
            let rep = congruence_probe(&sig, *samples, *max_size, *seed, (*limits).into())
                .map_err(|e| e.to_string())?;
            let ok = rep.violations.is_empty();
            match cli.format {
                Format::Json => emit(&cli.output, &json_of(&rep))?,
                _ => emit(
                    &cli.output,
                    &format!(
                        "samples: {}, pairs tested: {}, skipped: {}, violations: {}",
                        rep.samples,
                        rep.pairs_tested,
                        rep.skipped,
                        rep.violations.len()
                    ),
                )?,
            }
            Ok(if ok { pass } else { fail })
        }
        Command::LawvereDemo { limits } => {
            let rep = lawvere_counterexample((*limits).into()).map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(&cli.output, &json_of(&rep))?,
                _ => {
                    let mut out = format!(
                        "d;copy outputs {{{}}}, d*d outputs {{{}}}: {}",
                        rep.seq_outputs.join(", "),
                        rep.tens_outputs.join(", "),
                        if rep.related { "bisimilar (unexpected)" } else { "not bisimilar" }
                    );
                    if let Some(w) = &rep.witness {
                        out.push_str("\nwitness trace:");
                        for (i, o) in w {
                            out.push_str(&format!(" {i}/{o}"));
                        }
                    }
                    emit(&cli.output, &out)?;
                }
            }
            // the demo passes when the two sides are distinguished
            Ok(if rep.related { fail } else { pass })
        }
        Command::Proc(cmd) => run_proc(&cli, cmd),
    }
}

fn run_proc(cli: &Cli, cmd: &ProcCmd) -> Result<ExitCode, String> {
    let pass = ExitCode::SUCCESS;
    let fail = ExitCode::from(1);
    match cmd {
        ProcCmd::Typecheck(input) => {
            let (decls, tp) = load_proc(input)?;
            let al = proccalc::alphabet(&tp.process, &decls).map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(
                    &cli.output,
                    &json_of(serde_json::json!({
                        "width": tp.width,
                        "process": tp.process.to_string(),
                        "alphabet": al.iter().collect::<Vec<_>>(),
                    })),
                )?,
                _ => emit(
                    &cli.output,
                    &format!(
                        "{} |- {}  (alphabet: {:?})",
                        tp.width, tp.process, al
                    ),
                )?,
            }
            Ok(pass)
        }
        ProcCmd::Encode(input) => {
            let (decls, tp) = load_proc(input)?;
            let term = proccalc::encode(tp.width, &tp.process, &decls)
                .map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(
                    &cli.output,
                    &json_of(serde_json::json!({ "term": pretty_print(&term) })),
                )?,
                _ => emit(&cli.output, &pretty_print(&term))?,
            }
            Ok(pass)
        }
        ProcCmd::Lts { input, mode, max_states, max_depth } => {
            let (decls, tp) = load_proc(input)?;
            let lts =
                proccalc::proc_lts(&tp.process, &decls, (*mode).into(), *max_states, *max_depth)
                    .map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(&cli.output, &json_of(&lts))?,
                _ => {
                    let mut lines = Vec::new();
                    for (s, a, t) in &lts.edges {
                        lines.push(format!(
                            "{} --{}--> {}",
                            lts.states[*s], a, lts.states[*t]
                        ));
                    }
                    lines.push(format!("complete: {}", lts.complete));
                    emit(&cli.output, &lines.join("\n"))?;
                }
            }
            Ok(pass)
        }
        ProcCmd::Theorem { input, mode, depth, milner_bound, limits } => {
            let (decls, tp) = load_proc(input)?;
            let rep = proccalc::theorem_check(
                &tp,
                &decls,
                (*mode).into(),
                *depth,
                *milner_bound,
                (*limits).into(),
            )
            .map_err(|e| e.to_string())?;
            match cli.format {
                Format::Json => emit(&cli.output, &json_of(&rep))?,
                _ => {
                    let mut lines = vec![format!(
                        "{} mode, depth {}: {} ({} processes, {} transitions)",
                        rep.mode,
                        rep.depth,
                        if rep.pass { "both directions agree" } else { "MISMATCHES" },
                        rep.processes_checked,
                        rep.transitions_checked
                    )];
                    for m in &rep.mismatches {
                        lines.push(format!(
                            "  {} [{}] action {}: {}",
                            m.judgement, m.direction, m.action, m.detail
                        ));
                    }
                    if rep.perm_only_failures {
                        lines.push(
                            "  note: every mismatch involves a permutation node".into(),
                        );
                    }
                    emit(&cli.output, &lines.join("\n"))?;
                }
            }
            Ok(if rep.pass { pass } else { fail })
        }
    }
}
