//! Partial tree interpolants for every node of a proof.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::colour::{negated, ColourError, Colouring, Flattener, Projector};
use crate::formula::{Atom, Clause, Formula, Literal};
use crate::problem::{NodeIdx, PartSet, TreeProblem};
use crate::proof::{as_upper_bound, LemmaKind, NodeKind, Proof};
use crate::terms::{Rational, Term, TermStore, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error(transparent)]
    Colour(#[from] ColourError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Interpolants of one proof node, indexed by partition set `A`.
pub type Vector = BTreeMap<PartSet, Formula>;

/// One vector per proof node (indexed like the proof's nodes).
#[derive(Clone, Debug)]
pub struct Interpolants {
    pub sets: Vec<PartSet>,
    pub vectors: Vec<Vector>,
}

impl Interpolants {
    /// `I(v)` for a tree node `v` at proof node `node`.
    pub fn at(&self, problem: &TreeProblem, node: usize, v: NodeIdx) -> &Formula {
        &self.vectors[node][&problem.subtree_leaves(v)]
    }
}

/// Partition sets needed for validation: every `st(v)` and every union of
/// two disjoint ones.
pub fn validation_sets(problem: &TreeProblem) -> Vec<PartSet> {
    let mut sets: BTreeSet<PartSet> = problem.nodes().iter().map(|n| n.leaves).collect();
    for (i, j) in problem.disjoint_pairs() {
        sets.insert(problem.node(i).leaves.union(problem.node(j).leaves));
    }
    sets.into_iter().collect()
}

pub struct Interpolator<'a> {
    pub proj: Projector<'a>,
    pub proof: &'a Proof,
}

/// Name of the bound variable replacing an auxiliary variable.
fn bound_name(aux: &Var) -> String {
    match aux.name.strip_prefix("!v") {
        Some(id) => format!("!x{id}"),
        None => format!("!x{}", aux.name),
    }
}

impl<'a> Interpolator<'a> {
    pub fn new(
        store: &'a TermStore,
        problem: &'a TreeProblem,
        proof: &'a Proof,
        colouring: &'a Colouring,
        flat: &'a Flattener,
    ) -> Self {
        Interpolator {
            proj: Projector {
                store,
                problem,
                colouring,
                flat,
            },
            proof,
        }
    }

    fn all(&self) -> PartSet {
        self.proj.problem.all_partitions()
    }

    fn in_set(&self, l: &Literal, a: PartSet) -> Result<bool, InterpError> {
        Ok(a.contains(self.proj.colouring.colour(l)?))
    }

    /// Clause owned by partition `p`: `¬⌊¬C⌋_Ā` if `p ∈ A`, else `⌊¬C⌋_A`.
    pub fn owned_clause(&self, c: &Clause, p: usize, a: PartSet) -> Result<Formula, InterpError> {
        let neg = negated(c);
        if a.contains(p) {
            Ok(self.proj.kernel_conj(&neg, self.all().minus(a))?.not())
        } else {
            Ok(self.proj.kernel_conj(&neg, a)?)
        }
    }

    pub fn transitivity(&self, chain: &[Term], a: PartSet) -> Result<Formula, InterpError> {
        let store = self.proj.store;
        let n = chain.len();
        if n < 3 {
            return Err(InterpError::Invariant("transitivity chain shorter than 3".into()));
        }
        let eq = |i: usize, j: usize| {
            Literal::eq(store, &chain[i], &chain[j]).map_err(|e| InterpError::Invariant(e.to_string()))
        };
        let mut in_a = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            in_a.push(self.in_set(&eq(i, i + 1)?, a)?);
        }
        let diseq_in_a = self.in_set(&eq(0, n - 1)?, a)?;
        // boundary indices, 0-based positions in the chain
        let mut b = Vec::new();
        if diseq_in_a != in_a[0] {
            b.push(0);
        }
        for i in 1..n - 1 {
            if in_a[i - 1] != in_a[i] {
                b.push(i);
            }
        }
        if in_a[n - 2] != diseq_in_a {
            b.push(n - 1);
        }
        if b.is_empty() {
            return Ok(if diseq_in_a { Formula::False } else { Formula::True });
        }
        let v = |i: usize| self.proj.flat.flat_term(store, &chain[i]);
        let veq = |i: usize, j: usize| -> Result<Formula, InterpError> {
            Ok(Formula::lit(
                Literal::eq(store, &v(i), &v(j)).map_err(|e| InterpError::Invariant(e.to_string()))?,
            ))
        };
        let m = b.len();
        let mut parts = Vec::new();
        if !diseq_in_a {
            for k in (0..m).step_by(2) {
                parts.push(veq(b[k], b[k + 1])?);
            }
        } else {
            for k in (1..m - 1).step_by(2) {
                parts.push(veq(b[k], b[k + 1])?);
            }
            parts.push(veq(b[m - 1], b[0])?.not());
        }
        Ok(Formula::and(parts))
    }

    pub fn congruence(&self, c: &Clause, kind: &LemmaKind, a: PartSet) -> Result<Formula, InterpError> {
        let LemmaKind::Congruence { f, partition, .. } = kind else {
            unreachable!()
        };
        let pf = partition.unwrap_or_else(|| self.proj.problem.partitions_of(f).min().unwrap_or(0));
        self.owned_clause(c, pf, a)
    }

    pub fn trichotomy(&self, c: &Clause, a: PartSet) -> Result<Formula, InterpError> {
        let neg = negated(c);
        let mut inside = 0;
        for l in &neg {
            if self.in_set(l, a)? {
                inside += 1;
            }
        }
        if inside <= 1 {
            Ok(self.proj.kernel_conj(&neg, a)?)
        } else {
            Ok(self.proj.kernel_conj(&neg, self.all().minus(a))?.not())
        }
    }

    pub fn farkas(&self, items: &[(Rational, Literal)], a: PartSet) -> Result<Formula, InterpError> {
        let store = self.proj.store;
        let mut sum: BTreeMap<Term, Rational> = BTreeMap::new();
        let mut bound = Rational::zero();
        let mut strict = false;
        for (k, l) in items {
            if !self.in_set(l, a)? {
                continue;
            }
            let flat = self.proj.flat.flatten(store, l);
            let (s, b, st) = as_upper_bound(&flat)
                .ok_or_else(|| InterpError::Invariant(format!("{l} is not an inequality")))?;
            for (t, c) in s {
                *sum.entry(t).or_insert_with(Rational::zero) += k * c;
            }
            bound += k * b;
            strict |= st;
        }
        Ok(Formula::lit(Literal::ineq_from_map(sum, -bound, strict)))
    }

    /// Interpolant of a leaf of the proof.
    pub fn leaf(&self, node: usize, a: PartSet) -> Result<Formula, InterpError> {
        let n = self.proof.node(node);
        match &n.kind {
            NodeKind::Input { partition } => self.owned_clause(&n.clause, *partition, a),
            NodeKind::Instantiation { quantified, .. } => {
                let proxy = Literal::new(Atom::Proxy(quantified.clone()), false);
                let p = self.proj.colouring.colour(&proxy)?;
                self.owned_clause(&n.clause, p, a)
            }
            NodeKind::Lemma(kind) => match kind {
                LemmaKind::Transitivity(chain) => self.transitivity(chain, a),
                LemmaKind::Congruence { .. } => self.congruence(&n.clause, kind, a),
                LemmaKind::Trichotomy(..) => self.trichotomy(&n.clause, a),
                LemmaKind::Farkas(items) => self.farkas(items, a),
            },
            NodeKind::Resolution { .. } => Err(InterpError::Invariant(format!(
                "{} is not a leaf",
                n.name
            ))),
        }
    }

    /// McMillan combination followed by elimination of unsupported
    /// variables.
    pub fn resolve(
        &self,
        pivot: &Literal,
        i1: &Formula,
        i2: &Formula,
        resolvent: &Clause,
        a: PartSet,
    ) -> Result<Formula, InterpError> {
        let combined = if self.in_set(pivot, a)? {
            Formula::or([i1.clone(), i2.clone()])
        } else {
            Formula::and([i1.clone(), i2.clone()])
        };
        self.eliminate(combined, &self.proj.flat.supported(resolvent), a)
    }

    /// Replace or quantify every free auxiliary variable not in
    /// `supported`, outermost terms first.
    pub fn eliminate(
        &self,
        mut f: Formula,
        supported: &BTreeSet<Var>,
        a: PartSet,
    ) -> Result<Formula, InterpError> {
        let store = self.proj.store;
        let flat = self.proj.flat;
        loop {
            let unsupported: Vec<(Var, Term)> = f
                .free_vars()
                .into_iter()
                .filter(|v| !supported.contains(v))
                .filter_map(|v| flat.origin(&v).cloned().map(|t| (v, t)))
                .collect();
            if unsupported.is_empty() {
                return Ok(f);
            }
            let inner: BTreeSet<u32> = unsupported
                .iter()
                .flat_map(|(_, t)| t.subterms().into_iter().skip(1).map(|s| s.id()))
                .collect();
            let (v, t) = unsupported
                .iter()
                .filter(|(_, t)| !inner.contains(&t.id()))
                .min_by_key(|(_, t)| t.id())
                .cloned()
                .ok_or_else(|| {
                    InterpError::Invariant("no outermost unsupported variable".into())
                })?;
            let sym = t.hd().map_err(|e| InterpError::Invariant(e.to_string()))?;
            let parts = self.proj.problem.partitions_of(sym);
            let subst_err = |e: crate::formula::FormulaError| InterpError::Invariant(e.to_string());
            if parts.is_subset(a) || parts.is_disjoint(a) {
                let x = Var::new(&bound_name(&v), v.sort.clone());
                let body = f
                    .subst(store, &HashMap::from([(v.clone(), store.var(&x))]))
                    .map_err(subst_err)?;
                f = if parts.is_subset(a) {
                    Formula::exists(vec![x], body)
                } else {
                    Formula::forall(vec![x], body)
                };
            } else {
                let def = flat.definition(store, &t);
                f = f
                    .subst(store, &HashMap::from([(v.clone(), def)]))
                    .map_err(subst_err)?;
            }
        }
    }

    /// Compute vectors over `sets` for every proof node.
    pub fn run(&self, sets: &[PartSet]) -> Result<Interpolants, InterpError> {
        let mut vectors: Vec<Option<Vector>> = vec![None; self.proof.len()];
        for &i in self.proof.topo_order() {
            let node = self.proof.node(i);
            let entries: Vec<(PartSet, Formula)> = match &node.kind {
                NodeKind::Resolution { pos, neg, pivot } => {
                    let v1 = vectors[*pos].as_ref().unwrap();
                    let v2 = vectors[*neg].as_ref().unwrap();
                    sets.par_iter()
                        .map(|&a| Ok((a, self.resolve(pivot, &v1[&a], &v2[&a], &node.clause, a)?)))
                        .collect::<Result<_, InterpError>>()?
                }
                _ => sets
                    .par_iter()
                    .map(|&a| Ok((a, self.leaf(i, a)?)))
                    .collect::<Result<_, InterpError>>()?,
            };
            vectors[i] = Some(entries.into_iter().collect());
        }
        Ok(Interpolants {
            sets: sets.to_vec(),
            vectors: vectors.into_iter().map(Option::unwrap).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::pipeline::{run, ColouringChoice, RunConfig, Validation, EXIT_OK};

    const CHAIN_PROBLEM: &str = "
        (declare-sort U)
        (declare-const a U) (declare-const b U) (declare-const c U) (declare-const d U)
        (tree (node AB A B) (leaf A (= a b) (= c d)) (leaf B (= b c) (not (= a d))))
        (colour (= a b) A) (colour (= b c) B) (colour (= c d) A) (colour (= a d) B)";
    const CHAIN_PROOF: &str = "
        (input i1 :partition A (= a b))
        (input i2 :partition B (= b c))
        (input i3 :partition A (= c d))
        (input i4 :partition B (not (= a d)))
        (lemma tr :trans (a b c d))
        (res r1 :pos i1 :neg tr :pivot (= a b))
        (res r2 :pos i2 :neg r1 :pivot (= b c))
        (res r3 :pos i3 :neg r2 :pivot (= c d))
        (res bot :pos r3 :neg i4 :pivot (= a d))";

    fn check(s: &Setup, node: &str, rows: &[(&[&str], &str)]) {
        let it = s.interpolator();
        let i = s.node(node);
        for (set, want) in rows {
            let got = it.leaf(i, s.set(set)).unwrap();
            assert_eq!(got, s.flat(want), "{node} at {set:?}");
        }
    }

    #[test]
    fn input_clauses() {
        let store = TermStore::new();
        let s = setup(&store, EXAMPLE_PROBLEM, EXAMPLE_PROOF);
        check(
            &s,
            "phi1",
            &[
                (&["1"], "false"),
                (&["2"], "true"),
                (&["3"], "true"),
                (&["2", "3"], "true"),
                (&["1", "2", "3"], "false"),
            ],
        );
    }

    #[test]
    fn instantiation_lemma_uses_quantifier_colour() {
        let store = TermStore::new();
        let s = setup(&store, EXAMPLE_PROBLEM, EXAMPLE_PROOF);
        check(
            &s,
            "inst1",
            &[
                (&["1"], "(<= {(g (h b))} {b})"),
                (&["2"], "(> {(g (h b))} {b})"),
                (&["3"], "true"),
            ],
        );
    }

    #[test]
    fn congruence_lemma() {
        let store = TermStore::new();
        let s = setup(&store, EXAMPLE_PROBLEM, EXAMPLE_PROOF);
        check(
            &s,
            "cong",
            &[
                (&["1"], "true"),
                (&["2"], "(= {(g (h b))} {b})"),
                (&["3"], "(not (= {(g (h b))} {b}))"),
                (&["2", "3"], "false"),
            ],
        );
    }

    #[test]
    fn trichotomy_lemma() {
        let store = TermStore::new();
        let s = setup(&store, EXAMPLE_PROBLEM, EXAMPLE_PROOF);
        check(
            &s,
            "tricho",
            &[(&["1"], "true"), (&["2"], "false"), (&["3"], "true"), (&["1", "2", "3"], "false")],
        );
    }

    #[test]
    fn farkas_lemma_sums_coloured_bounds() {
        let store = TermStore::new();
        let mut s = setup(&store, FARKAS_PROBLEM, FARKAS_PROOF);
        for (lit, part) in [("(<= x 0)", "1"), ("(<= (- x) (- 1))", "2")] {
            let p = s.doc.problem.partition_by_name(part).unwrap();
            s.colouring.set(s.lit(lit).atom, p);
        }
        check(&s, "fk", &[(&["1"], "(<= {x} 0)"), (&["2"], "(<= (- {x}) (- 1))"), (&["1", "2"], "false"), (&[], "true")]);
    }

    #[test]
    fn transitivity_boundaries() {
        let store = TermStore::new();
        let s = setup(&store, BIZARRE_PROBLEM, BIZARRE_PROOF);
        check(&s, "trans1", &[(&["A"], "(= {a} {t})"), (&["A", "B"], "false"), (&[], "true")]);

        let s = setup(&store, CHAIN_PROBLEM, CHAIN_PROOF);
        check(
            &s,
            "tr",
            &[
                (&["A"], "(and (= {a} {b}) (= {c} {d}))"),
                (&["B"], "(and (= {b} {c}) (not (= {d} {a})))"),
            ],
        );
        let cfg = RunConfig {
            colouring: ColouringChoice::File,
            validate: Validation::Full,
            ..RunConfig::default()
        };
        let out = run(&cfg, CHAIN_PROBLEM, Some(CHAIN_PROOF));
        assert_eq!(out.code, EXIT_OK, "{:?}", out.diagnostics);
        let report = out.report.unwrap();
        assert_eq!(report.failures().count() + report.unknowns().count(), 0, "{}", out.output);
    }

    #[test]
    fn elimination_order_is_outermost_first() {
        let store = TermStore::new();
        let s = setup(&store, EXAMPLE_PROBLEM, EXAMPLE_PROOF);
        let it = s.interpolator();
        let f = s.flat("(<= {(g (h b))} {b})");
        let got = it.eliminate(f.clone(), &BTreeSet::new(), s.set(&["1"])).unwrap();
        let want = s.formula("(forall ((x Real)) (exists ((y Real)) (<= (g y) x)))");
        assert!(got.alpha_eq(&want, &store), "{got}");

        let got = it.eliminate(s.flat("(>= {(g (h b))} {b})"), &BTreeSet::new(), s.set(&["2"])).unwrap();
        let want = s.formula("(forall ((y Real)) (>= (g y) b))");
        assert!(got.alpha_eq(&want, &store), "{got}");

        let supported: BTreeSet<Var> = f.free_vars();
        assert_eq!(it.eliminate(f.clone(), &supported, s.set(&["1"])).unwrap(), f);
    }
}
