//! Tree interpolation problems: a binary tree whose leaves (partitions) are
//! labelled with clause sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::formula::{Atom, Clause, Formula};
use crate::terms::FunSym;

/// Dense index of a partition (a leaf of the tree).
pub type PartId = usize;

/// Index of a node in a [`TreeProblem`].
pub type NodeIdx = usize;

pub const MAX_PARTITIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("unknown tree node {0}")]
    NodeNotFound(String),
    #[error("too many partitions ({0}, at most {MAX_PARTITIONS} are supported)")]
    TooManyPartitions(usize),
}

/// A set of partitions as a bitset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartSet(pub u64);

impl PartSet {
    pub const EMPTY: PartSet = PartSet(0);

    pub fn single(p: PartId) -> PartSet {
        PartSet(1 << p)
    }

    pub fn all(n: usize) -> PartSet {
        if n >= 64 {
            PartSet(u64::MAX)
        } else {
            PartSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, p: PartId) -> bool {
        self.0 >> p & 1 == 1
    }

    pub fn union(self, o: PartSet) -> PartSet {
        PartSet(self.0 | o.0)
    }

    pub fn intersect(self, o: PartSet) -> PartSet {
        PartSet(self.0 & o.0)
    }

    pub fn minus(self, o: PartSet) -> PartSet {
        PartSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: PartSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: PartSet) -> bool {
        self.0 & o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn insert(&mut self, p: PartId) {
        self.0 |= 1 << p;
    }

    pub fn min(self) -> Option<PartId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = PartId> {
        (0..64).filter(move |p| self.contains(*p))
    }
}

impl fmt::Display for PartSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

/// Node of a tree as written by the user: any arity, optional label on
/// inner nodes.
#[derive(Clone, Debug)]
pub struct GeneralNode {
    pub name: String,
    pub children: Vec<String>,
    pub label: Option<Vec<Clause>>,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub name: String,
    pub children: Vec<NodeIdx>,
    pub parent: Option<NodeIdx>,
    /// `st(v)`.
    pub leaves: PartSet,
    pub partition: Option<PartId>,
}

/// A binary, leaf-labelled tree interpolation problem.
#[derive(Clone, Debug)]
pub struct TreeProblem {
    nodes: Vec<TreeNode>,
    root: NodeIdx,
    leaf_nodes: Vec<NodeIdx>,
    labels: Vec<Vec<Clause>>,
    occurrences: BTreeMap<FunSym, PartSet>,
    by_name: HashMap<String, NodeIdx>,
}

impl TreeProblem {
    /// Build a problem from a general tree, inserting leaves for labelled
    /// inner nodes and splitting nodes with more than two children.
    ///
    /// Returns the problem together with the map from every original node
    /// name to the internal node standing for it.
    pub fn binarize(
        nodes: &[GeneralNode],
    ) -> Result<(TreeProblem, BTreeMap<String, NodeIdx>), ProblemError> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(&n.name, i).is_some() {
                return Err(ProblemError::MalformedTree(format!(
                    "node {} declared twice",
                    n.name
                )));
            }
        }
        let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            for c in &n.children {
                let &ci = index
                    .get(c.as_str())
                    .ok_or_else(|| ProblemError::NodeNotFound(c.clone()))?;
                if let Some(old) = parent[ci] {
                    return Err(ProblemError::MalformedTree(format!(
                        "node {} has two parents ({} and {})",
                        c, nodes[old].name, n.name
                    )));
                }
                parent[ci] = Some(i);
            }
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(ProblemError::MalformedTree(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        // every node must be reachable from the root, otherwise there is a cycle
        let mut reach = vec![false; nodes.len()];
        let mut stack = vec![roots[0]];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut reach[i], true) {
                continue;
            }
            for c in &nodes[i].children {
                stack.push(index[c.as_str()]);
            }
        }
        if reach.iter().any(|r| !r) {
            return Err(ProblemError::MalformedTree("cycle in tree".into()));
        }

        let mut b = Builder::default();
        let mut mapping = BTreeMap::new();
        let root = b.build(nodes, &index, roots[0], &mut mapping)?;
        TreeProblem::from_parts(b.nodes, root, b.labels).map(|p| (p, mapping))
    }

    fn from_parts(
        mut nodes: Vec<TreeNode>,
        root: NodeIdx,
        labels: Vec<Vec<Clause>>,
    ) -> Result<TreeProblem, ProblemError> {
        if labels.len() > MAX_PARTITIONS {
            return Err(ProblemError::TooManyPartitions(labels.len()));
        }
        let mut leaf_nodes = vec![0; labels.len()];
        // children precede parents in builder order
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].partition {
                leaf_nodes[p] = i;
                nodes[i].leaves = PartSet::single(p);
            } else {
                let mut s = PartSet::EMPTY;
                for &c in &nodes[i].children {
                    s = s.union(nodes[c].leaves);
                }
                nodes[i].leaves = s;
            }
        }
        let mut occurrences: BTreeMap<FunSym, PartSet> = BTreeMap::new();
        for (p, label) in labels.iter().enumerate() {
            for c in label {
                for f in c.symbols() {
                    occurrences.entry(f).or_default().insert(p);
                }
            }
        }
        let by_name = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        Ok(TreeProblem {
            nodes,
            root,
            leaf_nodes,
            labels,
            occurrences,
            by_name,
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: NodeIdx) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> NodeIdx {
        self.root
    }

    pub fn find(&self, name: &str) -> Result<NodeIdx, ProblemError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| ProblemError::NodeNotFound(name.to_string()))
    }

    pub fn num_partitions(&self) -> usize {
        self.labels.len()
    }

    pub fn all_partitions(&self) -> PartSet {
        PartSet::all(self.labels.len())
    }

    /// Tree node of a partition.
    pub fn leaf_node(&self, p: PartId) -> NodeIdx {
        self.leaf_nodes[p]
    }

    pub fn partition_name(&self, p: PartId) -> &str {
        &self.nodes[self.leaf_nodes[p]].name
    }

    pub fn partition_by_name(&self, name: &str) -> Result<PartId, ProblemError> {
        let i = self.find(name)?;
        self.nodes[i]
            .partition
            .ok_or_else(|| ProblemError::NodeNotFound(format!("{name} (not a leaf)")))
    }

    pub fn label(&self, p: PartId) -> &[Clause] {
        &self.labels[p]
    }

    /// `F(p)` as a formula; quantified clauses are opened.
    pub fn label_formula(&self, p: PartId) -> Formula {
        Formula::and(self.labels[p].iter().map(clause_formula))
    }

    /// `st(v)`.
    pub fn subtree_leaves(&self, v: NodeIdx) -> PartSet {
        self.nodes[v].leaves
    }

    /// `partitions(f)`.
    pub fn occurrence_map(&self) -> &BTreeMap<FunSym, PartSet> {
        &self.occurrences
    }

    pub fn partitions_of(&self, f: &FunSym) -> PartSet {
        self.occurrences.get(f).copied().unwrap_or_default()
    }

    /// Symbols occurring in some partition of `a`.
    pub fn symbols_in(&self, a: PartSet) -> BTreeSet<FunSym> {
        self.occurrences
            .iter()
            .filter(|(_, ps)| !ps.is_disjoint(a))
            .map(|(f, _)| f.clone())
            .collect()
    }

    pub fn non_root_nodes(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.nodes.len()).filter(move |&i| i != self.root)
    }

    /// All pairs of distinct tree nodes with disjoint leaf sets.
    pub fn disjoint_pairs(&self) -> Vec<(NodeIdx, NodeIdx)> {
        let mut out = Vec::new();
        for i in 0..self.nodes.len() {
            for j in i + 1..self.nodes.len() {
                if self.nodes[i].leaves.is_disjoint(self.nodes[j].leaves) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// A clause as a formula: proxy literals stand for their quantified body.
pub fn clause_formula(c: &Clause) -> Formula {
    Formula::or(c.literals().iter().map(|l| match &l.atom {
        Atom::Proxy(q) if l.positive => (**q).clone(),
        Atom::Proxy(q) => q.not(),
        _ => Formula::lit(l.clone()),
    }))
}

#[derive(Default)]
struct Builder {
    nodes: Vec<TreeNode>,
    labels: Vec<Vec<Clause>>,
}

impl Builder {
    fn push(&mut self, name: String, children: Vec<NodeIdx>, label: Option<Vec<Clause>>) -> NodeIdx {
        let idx = self.nodes.len();
        let partition = label.map(|l| {
            self.labels.push(l);
            self.labels.len() - 1
        });
        for &c in &children {
            self.nodes[c].parent = Some(idx);
        }
        self.nodes.push(TreeNode {
            name,
            children,
            parent: None,
            leaves: PartSet::EMPTY,
            partition,
        });
        idx
    }

    fn build(
        &mut self,
        nodes: &[GeneralNode],
        index: &HashMap<&str, usize>,
        i: usize,
        mapping: &mut BTreeMap<String, NodeIdx>,
    ) -> Result<NodeIdx, ProblemError> {
        let n = &nodes[i];
        if n.children.is_empty() {
            let label = n.label.clone().unwrap_or_default();
            let idx = self.push(n.name.clone(), Vec::new(), Some(label));
            mapping.insert(n.name.clone(), idx);
            return Ok(idx);
        }
        let mut kids = Vec::new();
        if let Some(label) = &n.label {
            kids.push(self.push(format!("{}#L", n.name), Vec::new(), Some(label.clone())));
        }
        for c in &n.children {
            kids.push(self.build(nodes, index, index[c.as_str()], mapping)?);
        }
        // right-nested chain: (k0, (k1, (k2, ...)))
        let mut k = kids.len();
        let mut acc = kids[k - 1];
        let mut counter = kids.len().saturating_sub(2);
        while k > 2 {
            k -= 1;
            acc = self.push(format!("{}#{}", n.name, counter), vec![kids[k - 1], acc], None);
            counter -= 1;
        }
        let idx = if kids.len() == 1 {
            // a single unlabelled child: the node coincides with it
            acc
        } else {
            self.push(n.name.clone(), vec![kids[0], acc], None)
        };
        mapping.insert(n.name.clone(), idx);
        Ok(idx)
    }
}
