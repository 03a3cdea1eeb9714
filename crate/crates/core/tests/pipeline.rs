use treeitp::colour::{assign_colours, Flattener};
use treeitp::formula::Formula;
use treeitp::interp::{validation_sets, Interpolator};
use treeitp::oracle::{Budget, Oracle};
use treeitp::pipeline::{
    interpolate, parse, reparse, run, run_document, ColouringChoice, RunConfig, Validation, EXIT_INPUT, EXIT_OK,
    EXIT_PROOF,
};
use treeitp::problem::PartSet;
use treeitp::proof::Proof;
use treeitp::syntax::{Document, Reader};
use treeitp::terms::TermStore;
use treeitp::validate::{check_all, Level, ObligationKind, Status};

const EXAMPLE_PROBLEM: &str = include_str!("../../../data/example1.problem");
const EXAMPLE_PROOF: &str = include_str!("../../../data/example1.proof");
const FARKAS_PROBLEM: &str = include_str!("../../../data/farkas.problem");
const FARKAS_PROOF: &str = include_str!("../../../data/farkas.proof");
const BIZARRE_PROBLEM: &str = include_str!("../../../data/bizarre.problem");
const BIZARRE_PROOF: &str = include_str!("../../../data/bizarre.proof");

fn example(store: &TermStore) -> Document {
    parse(store, EXAMPLE_PROBLEM, Some(EXAMPLE_PROOF)).unwrap()
}

fn full(colouring: ColouringChoice) -> RunConfig {
    RunConfig {
        colouring,
        validate: Validation::Full,
        ..RunConfig::default()
    }
}

#[test]
fn example_interpolants_match_expected_quantified_forms() {
    let store = TermStore::new();
    let doc = example(&store);
    let out = run_document(&store, &full(ColouringChoice::File), &doc);
    assert_eq!(out.code, EXIT_OK, "{:?}", out.diagnostics);
    let report = out.report.unwrap();
    assert_eq!(report.failures().count() + report.unknowns().count(), 0);

    let expected = [
        ("1", "(forall ((x Real)) (exists ((y Real)) (<= (g y) x)))"),
        ("2", "(forall ((y Real)) (>= (g y) b))"),
        ("3", "(forall ((y Real)) (not (= (g y) b)))"),
        ("23", "(exists ((x Real)) (forall ((y Real)) (> (g y) x)))"),
    ];
    let reader = Reader::resume(&store, doc.clone());
    for (node, text) in expected {
        let want = reader.formula(text).unwrap();
        let got = &out.interpolants[node];
        assert!(got.alpha_eq(&want, &store), "node {node}: got {got}, want {want}");
    }
    assert_eq!(out.interpolants.len(), 4);
}

#[test]
fn heuristic_colouring_reproduces_declared_colouring() {
    let store = TermStore::new();
    let doc = example(&store);
    let declared = run_document(&store, &RunConfig::default(), &doc);
    let mut cfg = RunConfig::default();
    cfg.colouring = ColouringChoice::File;
    let file = run_document(&store, &cfg, &doc);
    assert_eq!(declared.output, file.output);
}

/// Expected vectors with `{gh}` and `{b}` standing for the auxiliary
/// variables of `g(h(b))` and `b`; the root set is always `false`.
const GOLDENS: &[(&str, [&str; 4])] = &[
    ("phi1", ["false", "true", "true", "true"]),
    ("inst1", ["(<= {gh} {b})", "(> {gh} {b})", "true", "(> {gh} {b})"]),
    ("r0", ["(<= {gh} {b})", "(> {gh} {b})", "true", "(> {gh} {b})"]),
    ("tricho", ["true", "false", "true", "false"]),
    ("r1", ["(<= {gh} {b})", "(> {gh} {b})", "true", "(> {gh} {b})"]),
    ("phi2", ["true", "false", "true", "false"]),
    ("inst2", ["true", "false", "true", "false"]),
    ("r2", ["true", "false", "true", "false"]),
    ("r3", ["(<= {gh} {b})", "(> {gh} {b})", "true", "(> {gh} {b})"]),
    ("phi3", ["true", "true", "false", "false"]),
    ("inst3", ["true", "true", "false", "false"]),
    ("r4", ["true", "true", "false", "false"]),
    ("cong", ["true", "(= {gh} {b})", "(not (= {gh} {b}))", "false"]),
    ("r5", ["true", "(= {gh} {b})", "(not (= {gh} {b}))", "false"]),
];

#[test]
fn partial_interpolants_match_goldens() {
    let store = TermStore::new();
    let doc = example(&store);
    let (proof, vectors) = interpolate(&store, &doc, &ColouringChoice::File).unwrap();
    let flat = Flattener::for_proof(&store, &proof);
    let reader = Reader::resume(&store, doc.clone());
    let aux = |t: &str| flat.aux_var(&reader.term(t).unwrap());
    let (gh, b) = (aux("(g (h b))"), aux("b"));
    let problem = &doc.problem;
    for (name, row) in GOLDENS {
        let i = proof.find(name).unwrap();
        for (node, text) in ["1", "2", "3", "23"].iter().zip(row) {
            let text = text.replace("{gh}", &gh.name).replace("{b}", &b.name);
            let want = reparse(&store, &doc, [gh.clone(), b.clone()], &text).unwrap();
            let v = problem.find(node).unwrap();
            assert_eq!(vectors.at(problem, i, v), &want, "{name} at {node}");
        }
        assert!(vectors.at(problem, i, problem.root()).is_false());
    }
}

#[test]
fn printed_interpolants_reparse_identically() {
    let store = TermStore::new();
    let doc = example(&store);
    let mut cfg = full(ColouringChoice::File);
    cfg.dump_partials = true;
    let out = run_document(&store, &cfg, &doc);
    let (proof, _) = interpolate(&store, &doc, &ColouringChoice::File).unwrap();
    let flat = Flattener::for_proof(&store, &proof);
    let aux: Vec<_> = flat.aux_vars().map(|(v, _)| v.clone()).collect();
    for (node, f) in &out.interpolants {
        let again = reparse(&store, &doc, aux.clone(), &f.to_string()).unwrap();
        assert_eq!(&again, f, "node {node}");
    }
    let mut partials = 0;
    for line in out.output.lines().filter(|l| l.starts_with("(partial ")) {
        // (partial <proof node> <tree node> <formula>)
        let rest = &line["(partial ".len()..line.len() - 1];
        let mut parts = rest.splitn(3, ' ');
        let (_, _, text) = (parts.next(), parts.next(), parts.next().unwrap());
        let f = reparse(&store, &doc, aux.clone(), text).unwrap();
        assert_eq!(f.to_string(), text);
        partials += 1;
    }
    assert_eq!(partials, proof.len() * doc.problem.nodes().len());
}

#[test]
fn identical_inputs_give_identical_output() {
    for colouring in [ColouringChoice::Heuristic, ColouringChoice::Random(7)] {
        let mut cfg = full(colouring);
        cfg.dump_partials = true;
        let a = run(&cfg, EXAMPLE_PROBLEM, Some(EXAMPLE_PROOF));
        let b = run(&cfg, EXAMPLE_PROBLEM, Some(EXAMPLE_PROOF));
        assert_eq!(a.output, b.output);
        assert_eq!(a.code, b.code);
    }
}

#[test]
fn farkas_example_interpolates_bounds() {
    let out = run(&full(ColouringChoice::Heuristic), FARKAS_PROBLEM, Some(FARKAS_PROOF));
    assert_eq!(out.code, EXIT_OK, "{:?}", out.diagnostics);
    assert_eq!(out.interpolants["1"].to_string(), "(< x 1)");
    assert_eq!(out.interpolants["2"].to_string(), "(>= x 1)");
}

#[test]
fn corrupted_farkas_coefficient_is_rejected() {
    let bad = FARKAS_PROOF.replace("((1 (<= x 0))", "((2 (<= x 0))");
    assert_ne!(bad, FARKAS_PROOF);
    let out = run(&RunConfig::default(), FARKAS_PROBLEM, Some(&bad));
    assert_eq!(out.code, EXIT_PROOF, "{:?}", out.diagnostics);
}

#[test]
fn bogus_farkas_lemma_in_quantified_proof_is_rejected() {
    let bad = EXAMPLE_PROOF.replace(
        ":tricho (g (h b)) b",
        ":farkas ((1 (<= (g (h b)) b)) (1 (>= (g (h b)) b)))",
    );
    let out = run(&RunConfig::default(), EXAMPLE_PROBLEM, Some(&bad));
    assert_eq!(out.code, EXIT_PROOF);
}

#[test]
fn unusual_colouring_simplifies_to_disequality() {
    let mut cfg = full(ColouringChoice::File);
    cfg.simplify = true;
    let out = run(&cfg, BIZARRE_PROBLEM, Some(BIZARRE_PROOF));
    assert_eq!(out.code, EXIT_OK, "{:?}", out.diagnostics);
    let report = out.report.unwrap();
    assert_eq!(report.failures().count() + report.unknowns().count(), 0);
    assert!(report
        .obligations
        .iter()
        .any(|o| matches!(o.kind, ObligationKind::Simplified(_))));
    assert_eq!(out.interpolants["A"].to_string(), "(not (= t s))");
}

#[test]
fn syntax_errors_exit_with_input_code() {
    let out = run(&RunConfig::default(), "(tree (leaf 1", None);
    assert_eq!(out.code, EXIT_INPUT);
    let out = run(&RunConfig::default(), EXAMPLE_PROBLEM, Some("(res r0 :pos nowhere"));
    assert_eq!(out.code, EXIT_INPUT);
    let out = run(&RunConfig::default(), EXAMPLE_PROBLEM, None);
    assert_eq!(out.code, EXIT_INPUT);
}

/// Proof, interpolator inputs and vectors for the declared colouring.
fn validate_with(
    edit: impl FnOnce(&TermStore, &Document, &Proof, &mut treeitp::interp::Interpolants),
) -> treeitp::validate::Report {
    let store = TermStore::new();
    let doc = example(&store);
    let proof = Proof::new(&store, doc.proof.clone()).unwrap();
    let col = assign_colours(&proof, &doc.problem, &ColouringChoice::File.strategy(&doc)).unwrap();
    let flat = Flattener::for_proof(&store, &proof);
    let it = Interpolator::new(&store, &doc.problem, &proof, &col, &flat);
    let mut vectors = it.run(&validation_sets(&doc.problem)).unwrap();
    edit(&store, &doc, &proof, &mut vectors);
    let oracle = Oracle::new(&store, Budget::default());
    check_all(&it.proj, &proof, &vectors, &oracle, Level::Full)
}

fn leaf_set(doc: &Document, name: &str) -> PartSet {
    PartSet::single(doc.problem.partition_by_name(name).unwrap())
}

#[test]
fn false_leaf_interpolant_has_leaf_countermodel() {
    let report = validate_with(|_, doc, proof, vectors| {
        let a = leaf_set(doc, "1");
        vectors.vectors[proof.root()].insert(a, Formula::False);
    });
    let failed: Vec<_> = report.failures().collect();
    assert!(failed
        .iter()
        .any(|o| matches!(o.kind, ObligationKind::LeafInd(_)) && matches!(&o.status, Status::Failed(w) if w.contains("countermodel"))));
}

#[test]
fn true_leaf_interpolant_breaks_tree_inductivity() {
    let report = validate_with(|_, doc, proof, vectors| {
        let a = leaf_set(doc, "1");
        vectors.vectors[proof.root()].insert(a, Formula::True);
    });
    assert!(report
        .failures()
        .any(|o| matches!(o.kind, ObligationKind::TreeInd(..))));
    assert_eq!(report.unknowns().count(), 0);
}

/// Negate one literal of a formula, at the `k`-th literal position.
fn flip_literal(f: &Formula, k: &mut usize) -> Formula {
    match f {
        Formula::Lit(l) => {
            let out = if *k == 0 { Formula::lit(l.negate()) } else { f.clone() };
            *k = k.wrapping_sub(1);
            out
        }
        Formula::And(xs) => Formula::and(xs.iter().map(|x| flip_literal(x, k))),
        Formula::Or(xs) => Formula::or(xs.iter().map(|x| flip_literal(x, k))),
        _ => f.clone(),
    }
}

#[test]
fn flipping_any_partial_literal_fails_an_obligation() {
    let store = TermStore::new();
    let doc = example(&store);
    let (proof, vectors) = interpolate(&store, &doc, &ColouringChoice::File).unwrap();
    let problem = &doc.problem;
    let mut sites = Vec::new();
    for (name, _) in GOLDENS {
        let i = proof.find(name).unwrap();
        for v in problem.non_root_nodes() {
            let f = vectors.at(problem, i, v);
            let lits = match f {
                Formula::True | Formula::False => 1,
                _ => f.literals().len(),
            };
            for k in 0..lits {
                sites.push((i, problem.subtree_leaves(v), k));
            }
        }
    }
    assert!(sites.len() > 50);
    for (i, a, k) in sites {
        let report = validate_with(|_, _, _, vs| {
            let f = vs.vectors[i][&a].clone();
            let flipped = match f {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                _ => flip_literal(&f, &mut { k }),
            };
            vs.vectors[i].insert(a, flipped);
        });
        assert!(report.failures().next().is_some(), "node {i}, set {a}, literal {k}: {:?}", report.unknowns().map(|o| o.to_string()).collect::<Vec<_>>());
    }
}

#[test]
fn literal_orientation_is_canonical() {
    let store = TermStore::new();
    let doc = example(&store);
    let reader = Reader::resume(&store, doc);
    let pairs = [
        ("(<= (g b) b)", "(>= b (g b))"),
        ("(< (g b) b)", "(not (>= (g b) b))"),
        ("(= b (g b))", "(= (g b) b)"),
    ];
    for (x, y) in pairs {
        assert_eq!(reader.formula(x).unwrap(), reader.formula(y).unwrap(), "{x} vs {y}");
    }
}
