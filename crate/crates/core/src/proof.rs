//! Resolution proofs with input clauses, instantiation lemmas and theory
//! lemmas, and a node-local proof checker.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::formula::{Atom, Clause, Formula, FormulaError, Literal};
use crate::problem::{PartId, TreeProblem};
use crate::terms::{FunSym, Rational, Sort, Term, TermStore, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("malformed proof: {0}")]
    MalformedProof(String),
    #[error("malformed lemma {node}: {reason}")]
    MalformedLemma { node: String, reason: String },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Clone, Debug)]
pub enum LemmaKind {
    /// Chain `t₁ … tₙ`; the conflict is `t₁=t₂ ∧ … ∧ tₙ₋₁=tₙ ∧ t₁≠tₙ`.
    Transitivity(Vec<Term>),
    /// `f(args) = f(other) ∨ ⋁ argsᵢ ≠ otherᵢ`. `partition` overrides the
    /// default choice of the partition the lemma is attributed to.
    Congruence {
        f: FunSym,
        args: Vec<Term>,
        other: Vec<Term>,
        partition: Option<PartId>,
    },
    /// `t₁ = t₂ ∨ t₁ > t₂ ∨ t₁ < t₂`.
    Trichotomy(Term, Term),
    /// Conflict literals `ℓᵢ` with their coefficients; the clause is `⋁ ¬ℓᵢ`.
    Farkas(Vec<(Rational, Literal)>),
}

impl LemmaKind {
    pub fn name(&self) -> &'static str {
        match self {
            LemmaKind::Transitivity(_) => "transitivity",
            LemmaKind::Congruence { .. } => "congruence",
            LemmaKind::Trichotomy(..) => "trichotomy",
            LemmaKind::Farkas(_) => "farkas",
        }
    }
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Input {
        partition: PartId,
    },
    /// `¬(∀x̄.φ) ∨ φ(t̄)`; `source` is the input node holding the quantified
    /// clause.
    Instantiation {
        source: usize,
        quantified: Arc<Formula>,
        terms: Vec<Term>,
    },
    Lemma(LemmaKind),
    Resolution {
        pos: usize,
        neg: usize,
        pivot: Literal,
    },
}

#[derive(Clone, Debug)]
pub struct ProofNode {
    pub name: String,
    pub clause: Clause,
    pub kind: NodeKind,
}

/// Proof node as read from a file, with references by name and an
/// optional explicit clause.
#[derive(Clone, Debug)]
pub struct RawNode {
    pub name: String,
    pub clause: Option<Clause>,
    pub kind: RawKind,
}

#[derive(Clone, Debug)]
pub enum RawKind {
    Input { partition: PartId },
    Instantiation { source: String, terms: Vec<Term> },
    Lemma(LemmaKind),
    Resolution { pos: String, neg: String, pivot: Literal },
}

/// A proof DAG; the last node is the root.
#[derive(Clone, Debug)]
pub struct Proof {
    nodes: Vec<ProofNode>,
    order: Vec<usize>,
    index: HashMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub node: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.node, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Clause of a theory lemma, as determined by its kind.
pub fn lemma_clause(store: &TermStore, kind: &LemmaKind, node: &str) -> Result<Clause, ProofError> {
    let malformed = |reason: String| ProofError::MalformedLemma {
        node: node.to_string(),
        reason,
    };
    Ok(match kind {
        LemmaKind::Transitivity(chain) => {
            if chain.len() < 3 {
                return Err(malformed(format!(
                    "transitivity chain needs at least 3 terms, got {}",
                    chain.len()
                )));
            }
            let mut lits = Vec::new();
            for w in chain.windows(2) {
                lits.push(Literal::neq(store, &w[0], &w[1])?);
            }
            lits.push(Literal::eq(store, &chain[0], chain.last().unwrap())?);
            Clause::new(lits)
        }
        LemmaKind::Congruence { f, args, other, .. } => {
            let lhs = store.app(f, args.clone()).map_err(FormulaError::from)?;
            let rhs = store.app(f, other.clone()).map_err(FormulaError::from)?;
            let mut lits = vec![Literal::eq(store, &lhs, &rhs)?];
            for (t, s) in args.iter().zip(other) {
                if t != s {
                    lits.push(Literal::neq(store, t, s)?);
                }
            }
            Clause::new(lits)
        }
        LemmaKind::Trichotomy(a, b) => Clause::new([
            Literal::eq(store, a, b)?,
            Literal::gt(a, b)?,
            Literal::lt(a, b)?,
        ]),
        LemmaKind::Farkas(items) => {
            if items.is_empty() {
                return Err(malformed("empty Farkas lemma".into()));
            }
            Clause::new(items.iter().map(|(_, l)| l.negate()))
        }
    })
}

/// `(s, b, strict)` with `ℓ ≡ s ≤ b` (or `s < b`).
pub fn as_upper_bound(l: &Literal) -> Option<(BTreeMap<Term, Rational>, Rational, bool)> {
    let Atom::Leq { lhs, bound, strict } = &l.atom else {
        return None;
    };
    let map: BTreeMap<Term, Rational> = lhs.0.iter().cloned().collect();
    if l.positive {
        Some((map, bound.clone(), *strict))
    } else {
        // ¬(s ≤ b) ≡ −s < −b ; ¬(s < b) ≡ −s ≤ −b
        Some((
            map.into_iter().map(|(t, k)| (t, -k)).collect(),
            -bound.clone(),
            !*strict,
        ))
    }
}

impl Proof {
    /// Resolve names, derive omitted clauses and order the nodes.
    pub fn new(store: &TermStore, raw: Vec<RawNode>) -> Result<Proof, ProofError> {
        if raw.is_empty() {
            return Err(ProofError::MalformedProof("empty proof".into()));
        }
        let mut index = HashMap::new();
        for (i, n) in raw.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(ProofError::MalformedProof(format!(
                    "node {} defined twice",
                    n.name
                )));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| ProofError::MalformedProof(format!("reference to unknown node {name}")))
        };
        let mut deps: Vec<Vec<usize>> = Vec::with_capacity(raw.len());
        for n in &raw {
            deps.push(match &n.kind {
                RawKind::Instantiation { source, .. } => vec![lookup(source)?],
                RawKind::Resolution { pos, neg, .. } => vec![lookup(pos)?, lookup(neg)?],
                _ => Vec::new(),
            });
        }
        let order = topo(&raw.iter().map(|n| n.name.as_str()).collect::<Vec<_>>(), &deps)?;

        let mut nodes: Vec<Option<ProofNode>> = vec![None; raw.len()];
        for &i in &order {
            let n = &raw[i];
            let (kind, derived) = match &n.kind {
                RawKind::Input { partition } => (NodeKind::Input { partition: *partition }, None),
                RawKind::Lemma(k) => (NodeKind::Lemma(k.clone()), Some(lemma_clause(store, k, &n.name)?)),
                RawKind::Resolution { pos, neg, pivot } => {
                    let (p, q) = (index[pos], index[neg]);
                    let pc = &nodes[p].as_ref().unwrap().clause;
                    let nc = &nodes[q].as_ref().unwrap().clause;
                    let derived = pc.without(pivot).union(&nc.without(&pivot.negate()));
                    (
                        NodeKind::Resolution {
                            pos: p,
                            neg: q,
                            pivot: pivot.clone(),
                        },
                        Some(derived),
                    )
                }
                RawKind::Instantiation { source, terms } => {
                    let clause = n.clause.as_ref().ok_or_else(|| {
                        ProofError::MalformedProof(format!("instantiation {} needs a clause", n.name))
                    })?;
                    let proxies: Vec<&Literal> = clause
                        .literals()
                        .iter()
                        .filter(|l| l.is_proxy() && !l.positive)
                        .collect();
                    let [q] = proxies.as_slice() else {
                        return Err(ProofError::MalformedProof(format!(
                            "instantiation {} must contain exactly one negated quantified clause",
                            n.name
                        )));
                    };
                    let Atom::Proxy(f) = &q.atom else { unreachable!() };
                    (
                        NodeKind::Instantiation {
                            source: index[source],
                            quantified: f.clone(),
                            terms: terms.clone(),
                        },
                        None,
                    )
                }
            };
            let clause = match (&n.clause, derived) {
                (Some(c), _) => c.clone(),
                (None, Some(d)) => d,
                (None, None) => {
                    return Err(ProofError::MalformedProof(format!("node {} needs a clause", n.name)))
                }
            };
            nodes[i] = Some(ProofNode {
                name: n.name.clone(),
                clause,
                kind,
            });
        }
        Ok(Proof {
            nodes: nodes.into_iter().map(Option::unwrap).collect(),
            order,
            index,
        })
    }

    pub fn nodes(&self) -> &[ProofNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ProofNode {
        &self.nodes[i]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Antecedents before consequents, ties broken by declaration order.
    pub fn topo_order(&self) -> &[usize] {
        &self.order
    }

    /// Every literal occurring in some clause of the proof.
    pub fn literals(&self) -> BTreeSet<Literal> {
        self.nodes
            .iter()
            .flat_map(|n| n.clause.literals().iter().cloned())
            .collect()
    }

    /// Check every node's local side condition.
    pub fn check(&self, store: &TermStore, problem: &TreeProblem) -> CheckReport {
        let mut report = CheckReport::default();
        let known = problem.occurrence_map();
        for &i in &self.order {
            let n = &self.nodes[i];
            let mut fail = |msg: String| {
                report.violations.push(Violation {
                    node: n.name.clone(),
                    message: msg,
                })
            };
            for l in n.clause.literals() {
                if !l.is_proxy() && !l.free_vars().is_empty() {
                    fail(format!("literal {l} is not ground"));
                }
                for f in l.symbols() {
                    if !known.contains_key(&f) {
                        fail(format!("symbol {f} does not occur in any partition"));
                    }
                }
            }
            if let Err(msg) = self.check_node(store, problem, i) {
                fail(msg);
            }
        }
        let root = &self.nodes[self.root()];
        if !root.clause.is_empty() {
            report.violations.push(Violation {
                node: root.name.clone(),
                message: format!("root clause {} is not empty", root.clause),
            });
        }
        report
    }

    fn check_node(&self, store: &TermStore, problem: &TreeProblem, i: usize) -> Result<(), String> {
        let n = &self.nodes[i];
        match &n.kind {
            NodeKind::Input { partition } => {
                if *partition >= problem.num_partitions() {
                    return Err(format!("unknown partition {partition}"));
                }
                if !problem.label(*partition).contains(&n.clause) {
                    return Err(format!(
                        "clause {} is not an input clause of partition {}",
                        n.clause,
                        problem.partition_name(*partition)
                    ));
                }
                Ok(())
            }
            NodeKind::Instantiation {
                source,
                quantified,
                terms,
            } => {
                let src = &self.nodes[*source];
                if !matches!(src.kind, NodeKind::Input { .. }) {
                    return Err(format!("instantiation source {} is not an input clause", src.name));
                }
                let proxy = Literal::new(Atom::Proxy(quantified.clone()), true);
                if !src.clause.contains(&proxy) {
                    return Err(format!("{} does not contain {}", src.name, proxy));
                }
                let expected = instantiate(store, quantified, terms)?;
                if !expected.free_vars().is_empty() {
                    return Err("instantiation leaves free variables".into());
                }
                let mut lits: Vec<Literal> = vec![proxy.negate()];
                match &expected {
                    Formula::True => return Err("instance is a tautology".into()),
                    f => {
                        for d in f.disjuncts() {
                            match d {
                                Formula::Lit(l) => lits.push(l),
                                other => return Err(format!("instance {other} is not a clause")),
                            }
                        }
                    }
                }
                let expected = Clause::new(lits);
                if expected != n.clause {
                    return Err(format!("clause {} does not match instance {}", n.clause, expected));
                }
                Ok(())
            }
            NodeKind::Lemma(kind) => {
                let expected = lemma_clause(store, kind, &n.name).map_err(|e| e.to_string())?;
                if expected != n.clause {
                    return Err(format!(
                        "{} clause {} does not match expected {}",
                        kind.name(),
                        n.clause,
                        expected
                    ));
                }
                match kind {
                    LemmaKind::Trichotomy(a, _) if a.sort() != &Sort::Rat => {
                        Err("trichotomy on non-arithmetic terms".into())
                    }
                    LemmaKind::Farkas(items) => check_farkas(items),
                    _ => Ok(()),
                }
            }
            NodeKind::Resolution { pos, neg, pivot } => {
                let pc = &self.nodes[*pos].clause;
                let nc = &self.nodes[*neg].clause;
                if !pc.contains(pivot) {
                    return Err(format!("pivot {pivot} missing from {}", self.nodes[*pos].name));
                }
                if !nc.contains(&pivot.negate()) {
                    return Err(format!(
                        "negated pivot {} missing from {}",
                        pivot.negate(),
                        self.nodes[*neg].name
                    ));
                }
                let expected = pc.without(pivot).union(&nc.without(&pivot.negate()));
                if expected != n.clause {
                    return Err(format!("resolvent {} does not match expected {}", n.clause, expected));
                }
                Ok(())
            }
        }
    }
}

/// `φ{x̄ ↦ t̄}` for `∀x̄.φ`; the whole quantifier block must be instantiated.
pub fn instantiate(store: &TermStore, quantified: &Formula, terms: &[Term]) -> Result<Formula, String> {
    let Formula::Forall(vars, body) = quantified else {
        return Err(format!("{quantified} is not universally quantified"));
    };
    if vars.len() != terms.len() {
        return Err(format!(
            "expected {} instantiation terms, got {}",
            vars.len(),
            terms.len()
        ));
    }
    let map: HashMap<Var, Term> = vars.iter().cloned().zip(terms.iter().cloned()).collect();
    body.subst(store, &map).map_err(|e| e.to_string())
}

fn check_farkas(items: &[(Rational, Literal)]) -> Result<(), String> {
    let mut sum: BTreeMap<Term, Rational> = BTreeMap::new();
    let mut bound = Rational::zero();
    let mut strict = false;
    for (k, l) in items {
        if !k.is_positive() {
            return Err(format!("Farkas coefficient {k} is not positive"));
        }
        let (s, b, st) = as_upper_bound(l).ok_or_else(|| format!("{l} is not an inequality"))?;
        for (t, c) in s {
            *sum.entry(t).or_insert_with(Rational::zero) += k * c;
        }
        bound += k * b;
        strict |= st;
    }
    if let Some((t, _)) = sum.iter().find(|(_, c)| !c.is_zero()) {
        return Err(format!("Farkas combination does not cancel {t}"));
    }
    if bound.is_negative() || (bound.is_zero() && strict) {
        Ok(())
    } else {
        Err(format!("Farkas combination yields 0 <= {bound}, not a contradiction"))
    }
}

fn topo(names: &[&str], deps: &[Vec<usize>]) -> Result<Vec<usize>, ProofError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; names.len()];
    let mut order = Vec::with_capacity(names.len());
    for start in 0..names.len() {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some((n, k)) = stack.pop() {
            if k < deps[n].len() {
                stack.push((n, k + 1));
                let d = deps[n][k];
                match state[d] {
                    0 => {
                        state[d] = 1;
                        stack.push((d, 0));
                    }
                    1 => {
                        return Err(ProofError::MalformedProof(format!(
                            "cycle through node {}",
                            names[d]
                        )))
                    }
                    _ => {}
                }
            } else {
                state[n] = 2;
                order.push(n);
            }
        }
    }
    Ok(order)
}
