//! Checks that every proof node's vector is a partial tree interpolant.

use std::fmt;

use rayon::prelude::*;

use crate::colour::{negated, Projector};
use crate::formula::Formula;
use crate::interp::Interpolants;
use crate::oracle::{Oracle, Verdict};
use crate::problem::{NodeIdx, PartId, PartSet};
use crate::proof::Proof;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    /// Root and symbol conditions only.
    Syntactic,
    /// Also leaf and tree inductivity through the oracle.
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObligationKind {
    Root,
    Symbol(PartSet),
    LeafInd(PartId),
    TreeInd(NodeIdx, NodeIdx),
    /// A simplified interpolant is equivalent to the computed one.
    Simplified(NodeIdx),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Passed,
    Failed(String),
    Unknown(String),
}

#[derive(Clone, Debug)]
pub struct Obligation {
    pub proof_node: usize,
    pub node_name: String,
    pub kind: ObligationKind,
    /// `kind` rendered with partition and tree node names.
    pub label: String,
    pub status: Status,
}

/// One S-expression per obligation: node, kind and verdict.
impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let quote = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        write!(f, "(obligation {} {} ", self.node_name, self.label)?;
        match &self.status {
            Status::Passed => write!(f, "passed)"),
            Status::Failed(why) => write!(f, "failed \"{}\")", quote(why)),
            Status::Unknown(why) => write!(f, "unknown \"{}\")", quote(why)),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub obligations: Vec<Obligation>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Obligation> {
        self.obligations
            .iter()
            .filter(|o| matches!(o.status, Status::Failed(_)))
    }

    pub fn unknowns(&self) -> impl Iterator<Item = &Obligation> {
        self.obligations
            .iter()
            .filter(|o| matches!(o.status, Status::Unknown(_)))
    }

    pub fn is_ok(&self) -> bool {
        self.failures().next().is_none()
    }
}

fn from_verdict(v: Verdict) -> Status {
    match v {
        Verdict::Valid(_) => Status::Passed,
        Verdict::Countermodel(m) => Status::Failed(format!("countermodel: {m}")),
        Verdict::Unknown(r) => Status::Unknown(r),
    }
}

struct Task {
    proof_node: usize,
    node_name: String,
    kind: ObligationKind,
    label: String,
}

/// Check root, symbol, leaf-ind and tree-ind conditions for every proof
/// node. Semantic conditions are skipped at [`Level::Syntactic`].
pub fn check_all(
    proj: &Projector,
    proof: &Proof,
    vectors: &Interpolants,
    oracle: &Oracle,
    level: Level,
) -> Report {
    let problem = proj.problem;
    let all = problem.all_partitions();
    let node_name = |v: NodeIdx| problem.node(v).name.as_str();
    let mut tasks = Vec::new();
    for i in 0..proof.len() {
        let name = proof.node(i).name.clone();
        tasks.push(Task {
            proof_node: i,
            node_name: name.clone(),
            kind: ObligationKind::Root,
            label: "root".into(),
        });
        for &a in &vectors.sets {
            if a != all && !a.is_empty() {
                tasks.push(Task {
                    proof_node: i,
                    node_name: name.clone(),
                    kind: ObligationKind::Symbol(a),
                    label: format!("symbol{a}"),
                });
            }
        }
        if level == Level::Full {
            for p in 0..problem.num_partitions() {
                tasks.push(Task {
                    proof_node: i,
                    node_name: name.clone(),
                    kind: ObligationKind::LeafInd(p),
                    label: format!("leaf-ind({})", problem.partition_name(p)),
                });
            }
            for (u, v) in problem.disjoint_pairs() {
                tasks.push(Task {
                    proof_node: i,
                    node_name: name.clone(),
                    kind: ObligationKind::TreeInd(u, v),
                    label: format!("tree-ind({},{})", node_name(u), node_name(v)),
                });
            }
        }
    }
    let obligations = tasks
        .into_par_iter()
        .map(|t| {
            let status = check_one(proj, proof, vectors, oracle, t.proof_node, &t.kind);
            Obligation {
                proof_node: t.proof_node,
                node_name: t.node_name,
                kind: t.kind,
                label: t.label,
                status,
            }
        })
        .collect();
    Report { obligations }
}

fn check_one(
    proj: &Projector,
    proof: &Proof,
    vectors: &Interpolants,
    oracle: &Oracle,
    node: usize,
    kind: &ObligationKind,
) -> Status {
    let problem = proj.problem;
    let vector = &vectors.vectors[node];
    let get = |a: PartSet| vector.get(&a);
    let clause = &proof.node(node).clause;
    match kind {
        ObligationKind::Root => match get(problem.all_partitions()) {
            Some(Formula::False) => Status::Passed,
            Some(f) => Status::Failed(format!("root interpolant is {f}")),
            None => Status::Failed("root interpolant missing".into()),
        },
        ObligationKind::Symbol(a) => {
            let Some(f) = get(*a) else {
                return Status::Failed(format!("no interpolant for {a}"));
            };
            let inside = problem.symbols_in(*a);
            let outside = problem.symbols_in(problem.all_partitions().minus(*a));
            let bad: Vec<String> = f
                .symbols()
                .into_iter()
                .filter(|s| !(inside.contains(s) && outside.contains(s)))
                .map(|s| s.name().to_string())
                .collect();
            if !bad.is_empty() {
                return Status::Failed(format!("non-shared symbols {}", bad.join(", ")));
            }
            let supported = proj.flat.supported(clause);
            let loose: Vec<String> = f
                .free_vars()
                .into_iter()
                .filter(|v| !supported.contains(v))
                .map(|v| v.name.to_string())
                .collect();
            if loose.is_empty() {
                Status::Passed
            } else {
                Status::Failed(format!("unsupported variables {}", loose.join(", ")))
            }
        }
        ObligationKind::LeafInd(_) | ObligationKind::TreeInd(..) => {
            match implication(proj, proof, vectors, node, kind) {
                Ok((premise, conclusion)) => from_verdict(oracle.implies(&premise, &conclusion)),
                Err(why) => Status::Failed(why),
            }
        }
        ObligationKind::Simplified(_) => Status::Unknown("not a proof-node obligation".into()),
    }
}

/// Premise and conclusion of a leaf-ind or tree-ind obligation.
pub fn implication(
    proj: &Projector,
    proof: &Proof,
    vectors: &Interpolants,
    node: usize,
    kind: &ObligationKind,
) -> Result<(Formula, Formula), String> {
    let problem = proj.problem;
    let vector = &vectors.vectors[node];
    let get = |a: PartSet| {
        vector
            .get(&a)
            .cloned()
            .ok_or_else(|| format!("no interpolant for {a}"))
    };
    match kind {
        ObligationKind::LeafInd(p) => {
            let single = PartSet::single(*p);
            let conclusion = get(single)?;
            let clause = &proof.node(node).clause;
            let projected = proj
                .proj_conj(&negated(clause), single)
                .map_err(|e| e.to_string())?;
            Ok((Formula::and([problem.label_formula(*p), projected]), conclusion))
        }
        ObligationKind::TreeInd(u, v) => {
            let (a1, a2) = (problem.subtree_leaves(*u), problem.subtree_leaves(*v));
            Ok((Formula::and([get(a1)?, get(a2)?]), get(a1.union(a2))?))
        }
        _ => Err("not an implication obligation".into()),
    }
}
