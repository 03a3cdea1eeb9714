//! End-to-end run: parse, check the proof, colour, interpolate, validate
//! and render the results as S-expression lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::colour::{assign_colours, Flattener, Strategy};
use crate::formula::Formula;
use crate::interp::{validation_sets, InterpError, Interpolants, Interpolator};
use crate::oracle::{Budget, Oracle, Verdict};
use crate::problem::TreeProblem;
use crate::proof::Proof;
use crate::simplify::simplify;
use crate::syntax::{parse_proof, Document, Reader};
use crate::terms::{TermStore, Var};
use crate::validate::{check_all, Level, Obligation, ObligationKind, Report, Status};

/// Exit code: success, possibly with unknown obligations.
pub const EXIT_OK: i32 = 0;
/// Exit code: the proof does not check.
pub const EXIT_PROOF: i32 = 1;
/// Exit code: some obligation failed, or an internal invariant broke.
pub const EXIT_OBLIGATION: i32 = 2;
/// Exit code: unreadable input, syntax error or invalid colouring.
pub const EXIT_INPUT: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColouringChoice {
    Heuristic,
    /// Colours declared in the problem or proof file, completed by the
    /// heuristic.
    File,
    Random(u64),
}

impl ColouringChoice {
    pub fn strategy(&self, doc: &Document) -> Strategy {
        match self {
            ColouringChoice::Heuristic => Strategy::Heuristic,
            ColouringChoice::File => Strategy::Fixed(doc.colours.clone()),
            ColouringChoice::Random(seed) => Strategy::Random(*seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Validation {
    Off,
    Syntactic,
    Full,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub colouring: ColouringChoice,
    pub validate: Validation,
    pub simplify: bool,
    pub dump_partials: bool,
    pub budget: Budget,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            colouring: ColouringChoice::Heuristic,
            validate: Validation::Off,
            simplify: false,
            dump_partials: false,
            budget: Budget::default(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub code: i32,
    /// Result lines, each a comment or an S-expression.
    pub output: String,
    /// Errors and warnings for the user.
    pub diagnostics: Vec<String>,
    /// Final interpolant per non-root tree node, as printed.
    pub interpolants: BTreeMap<String, Formula>,
    pub report: Option<Report>,
}

impl RunOutput {
    fn fail(code: i32, message: String) -> RunOutput {
        RunOutput {
            code,
            diagnostics: vec![message],
            ..RunOutput::default()
        }
    }
}

/// Parse a problem file and an optional separate proof file.
pub fn parse(store: &TermStore, problem: &str, proof: Option<&str>) -> Result<Document, String> {
    let mut r = Reader::new(store);
    r.read(problem).map_err(|e| format!("problem: {e}"))?;
    let doc = r.finish().map_err(|e| format!("problem: {e}"))?;
    match proof {
        Some(text) => parse_proof(store, doc, text).map_err(|e| format!("proof: {e}")),
        None => Ok(doc),
    }
}

fn interp_exit(e: InterpError) -> RunOutput {
    match e {
        InterpError::Colour(c) => RunOutput::fail(EXIT_INPUT, format!("colouring: {c}")),
        InterpError::Invariant(_) => RunOutput::fail(EXIT_OBLIGATION, e.to_string()),
    }
}

pub fn run(config: &RunConfig, problem: &str, proof: Option<&str>) -> RunOutput {
    let store = TermStore::new();
    let doc = match parse(&store, problem, proof) {
        Ok(d) => d,
        Err(e) => return RunOutput::fail(EXIT_INPUT, e),
    };
    run_document(&store, config, &doc)
}

pub fn run_document(store: &TermStore, config: &RunConfig, doc: &Document) -> RunOutput {
    let problem = &doc.problem;
    if doc.proof.is_empty() {
        return RunOutput::fail(EXIT_INPUT, "no proof steps given".into());
    }
    let proof = match Proof::new(store, doc.proof.clone()) {
        Ok(p) => p,
        Err(e) => return RunOutput::fail(EXIT_PROOF, format!("proof: {e}")),
    };
    let check = proof.check(store, problem);
    if !check.is_ok() {
        let mut out = RunOutput::fail(EXIT_PROOF, "proof check failed".into());
        out.diagnostics
            .extend(check.violations.iter().map(|v| format!("  {v}")));
        return out;
    }
    let colouring = match assign_colours(&proof, problem, &config.colouring.strategy(doc)) {
        Ok(c) => c,
        Err(e) => return RunOutput::fail(EXIT_INPUT, format!("colouring: {e}")),
    };
    let flat = Flattener::for_proof(store, &proof);
    let it = Interpolator::new(store, problem, &proof, &colouring, &flat);
    let vectors = match it.run(&validation_sets(problem)) {
        Ok(v) => v,
        Err(e) => return interp_exit(e),
    };

    let mut out = RunOutput::default();
    let mut text = String::new();
    binarization_notes(problem, doc, &mut text);

    let root = proof.root();
    let mut finals = Vec::new();
    for v in problem.non_root_nodes() {
        let raw = vectors.at(problem, root, v).clone();
        let shown = if config.simplify { simplify(store, &raw) } else { raw.clone() };
        let name = problem.node(v).name.clone();
        let _ = writeln!(text, "(interpolant {name} {shown})");
        out.interpolants.insert(name, shown.clone());
        finals.push((v, raw, shown));
    }
    if config.dump_partials {
        for &i in proof.topo_order() {
            for v in 0..problem.nodes().len() {
                let _ = writeln!(
                    text,
                    "(partial {} {} {})",
                    proof.node(i).name,
                    problem.node(v).name,
                    vectors.at(problem, i, v)
                );
            }
        }
    }

    if config.validate != Validation::Off {
        let level = if config.validate == Validation::Full { Level::Full } else { Level::Syntactic };
        let oracle = Oracle::new(store, config.budget.clone());
        let mut report = check_all(&it.proj, &proof, &vectors, &oracle, level);
        if config.simplify && level == Level::Full {
            report
                .obligations
                .extend(simplification_obligations(problem, &proof, &oracle, &finals));
        }
        for o in &report.obligations {
            let _ = writeln!(text, "{o}");
        }
        let failed = report.failures().count();
        let unknown = report.unknowns().count();
        let _ = writeln!(
            text,
            "; {} obligations: {} passed, {failed} failed, {unknown} unknown",
            report.obligations.len(),
            report.obligations.len() - failed - unknown
        );
        if failed > 0 {
            out.code = EXIT_OBLIGATION;
            out.diagnostics.push(format!("{failed} obligation(s) failed"));
        }
        if unknown > 0 {
            out.diagnostics
                .push(format!("warning: {unknown} obligation(s) could not be decided"));
        }
        out.report = Some(report);
    }
    out.output = text;
    out
}

/// Comments relating user tree nodes to the binary tree actually used.
fn binarization_notes(problem: &TreeProblem, doc: &Document, text: &mut String) {
    for (orig, &idx) in &doc.mapping {
        let internal = &problem.node(idx).name;
        if internal != orig {
            let _ = writeln!(text, "; tree node {orig} is represented by {internal}");
        }
    }
    for n in problem.nodes() {
        if n.name.contains('#') {
            let _ = writeln!(text, "; tree node {} was inserted by binarization", n.name);
        }
    }
}

/// Simplified and raw interpolants must be equivalent.
fn simplification_obligations(
    problem: &TreeProblem,
    proof: &Proof,
    oracle: &Oracle,
    finals: &[(usize, Formula, Formula)],
) -> Vec<Obligation> {
    let root = proof.root();
    finals
        .iter()
        .filter(|(_, raw, shown)| raw != shown)
        .map(|(v, raw, shown)| {
            let status = match (oracle.implies(raw, shown), oracle.implies(shown, raw)) {
                (Verdict::Valid(_), Verdict::Valid(_)) => Status::Passed,
                (Verdict::Countermodel(m), _) | (_, Verdict::Countermodel(m)) => {
                    Status::Failed(format!("simplified form differs: {m}"))
                }
                (Verdict::Unknown(r), _) | (_, Verdict::Unknown(r)) => Status::Unknown(r),
            };
            Obligation {
                proof_node: root,
                node_name: proof.node(root).name.clone(),
                kind: ObligationKind::Simplified(*v),
                label: format!("simplified({})", problem.node(*v).name),
                status,
            }
        })
        .collect()
}

/// Re-read a printed interpolant, allowing the reserved names the
/// interpolator introduces.
pub fn reparse(
    store: &TermStore,
    doc: &Document,
    aux: impl IntoIterator<Item = Var>,
    text: &str,
) -> Result<Formula, String> {
    let mut r = Reader::resume(store, doc.clone());
    r.allow_reserved(aux);
    r.formula(text).map_err(|e| e.to_string())
}

/// Vectors of every proof node, for callers that inspect partial
/// interpolants directly.
pub fn interpolate(
    store: &TermStore,
    doc: &Document,
    colouring: &ColouringChoice,
) -> Result<(Proof, Interpolants), String> {
    let proof = Proof::new(store, doc.proof.clone()).map_err(|e| e.to_string())?;
    let col = assign_colours(&proof, &doc.problem, &colouring.strategy(doc)).map_err(|e| e.to_string())?;
    let flat = Flattener::for_proof(store, &proof);
    let it = Interpolator::new(store, &doc.problem, &proof, &col, &flat);
    let vectors = it.run(&validation_sets(&doc.problem)).map_err(|e| e.to_string())?;
    Ok((proof, vectors))
}
