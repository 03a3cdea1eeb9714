//! Helpers shared by the test suites: a generator of small random proofs
//! and a brute-force model search used to cross-check the oracle.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Atom, Formula};
use crate::oracle::finite;
use crate::oracle::quant::open_proxies;
use crate::terms::{Rational, Sort, Term, TermKind};

/// Problem and proof texts of a generated refutation.
#[derive(Clone, Debug)]
pub struct RandomProof {
    pub problem: String,
    pub proof: String,
    pub partitions: usize,
    pub proof_nodes: usize,
}

struct Gen {
    rng: ChaCha8Rng,
    parts: usize,
    labels: Vec<Vec<String>>,
    steps: Vec<String>,
}

impl Gen {
    /// Put `formula` into a random partition as an input clause.
    fn input(&mut self, name: &str, formula: &str) {
        let p = self.rng.random_range(0..self.parts);
        self.labels[p].push(formula.to_string());
        self.step(format!("(input {name} :partition p{p} {formula})"));
    }

    fn step(&mut self, s: String) {
        self.steps.push(s);
    }

    fn tree(&mut self) -> String {
        let mut out = String::new();
        let mut roots: Vec<String> = (0..self.parts).map(|p| format!("p{p}")).collect();
        let mut k = 0;
        while roots.len() > 1 {
            let a = roots.swap_remove(self.rng.random_range(0..roots.len()));
            let b = roots.swap_remove(self.rng.random_range(0..roots.len()));
            let name = format!("n{k}");
            k += 1;
            let _ = writeln!(out, "  (node {name} {a} {b})");
            roots.push(name);
        }
        for (p, label) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "  (leaf p{p} {})", label.join(" "));
        }
        format!("(tree\n{out})\n")
    }

    /// `c0 = c1 = ... = ck` contradicts `c0 ≠ ck`, possibly through `f`
    /// and a quantified disequality.
    fn euf_chain(&mut self) -> String {
        let k = self.rng.random_range(1..=4);
        let c = |i: usize| format!("c{i}");
        let mut edges = Vec::new();
        for i in 0..k {
            let lit = if self.rng.random_bool(0.5) {
                format!("(= {} {})", c(i), c(i + 1))
            } else {
                format!("(= {} {})", c(i + 1), c(i))
            };
            self.input(&format!("e{i}"), &lit);
            edges.push(lit);
        }
        let target = format!("(= {} {})", c(0), c(k));
        let mut cur = if k == 1 {
            "e0".to_string()
        } else {
            let chain: Vec<String> = (0..=k).map(c).collect();
            self.step(format!("(lemma tr :trans ({}))", chain.join(" ")));
            let mut order: Vec<usize> = (0..k).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, self.rng.random_range(0..=i));
            }
            let mut cur = "tr".to_string();
            for i in order {
                let r = format!("r{i}");
                self.step(format!("(res {r} :pos e{i} :neg {cur} :pivot {})", edges[i]));
                cur = r;
            }
            cur
        };
        let mut last = target;
        if self.rng.random_bool(0.5) {
            self.step(format!("(lemma cg :cong f ({}) ({}))", c(0), c(k)));
            self.step(format!("(res rc :pos {cur} :neg cg :pivot {last})"));
            cur = "rc".into();
            last = format!("(= (f {}) (f {}))", c(0), c(k));
            if self.rng.random_bool(0.5) {
                let q = format!("(forall ((z U)) (not (= (f z) (f {}))))", c(k));
                self.input("q", &q);
                self.step(format!("(inst iq :of q :terms ({}) (or (not {q}) (not {last})))", c(0)));
                self.step(format!("(res d :pos q :neg iq :pivot {q})"));
                self.step(format!("(res bot :pos {cur} :neg d :pivot {last})"));
                return decls_euf(k);
            }
        }
        self.input("d", &format!("(not {last})"));
        self.step(format!("(res bot :pos {cur} :neg d :pivot {last})"));
        decls_euf(k)
    }

    /// A cycle `w₀t₀ ≤ w₁t₁, ..., w_m t_m < w₀t₀` closed by a Farkas
    /// lemma. Literals are stored with coprime coefficients, so each
    /// Farkas coefficient is the gcd of the two weights it combines.
    fn farkas_cycle(&mut self) -> String {
        let m = self.rng.random_range(2..=4);
        let terms: Vec<String> = (0..m)
            .map(|i| {
                if self.rng.random_bool(0.3) {
                    format!("(g x{i})")
                } else {
                    format!("x{i}")
                }
            })
            .collect();
        let weights: Vec<i64> = (0..m).map(|_| self.rng.random_range(1..=4)).collect();
        let scaled = |i: usize| {
            let i = i % m;
            if weights[i] == 1 {
                terms[i].clone()
            } else {
                format!("(* {} {})", weights[i], terms[i])
            }
        };
        let mut lits = Vec::new();
        let mut items = Vec::new();
        for i in 0..m {
            let strict = i == m - 1;
            let (lhs, rhs) = (scaled(i), scaled(i + 1));
            let lit = match (strict, self.rng.random_bool(0.5)) {
                (false, false) => format!("(<= {lhs} {rhs})"),
                (false, true) => format!("(>= {rhs} {lhs})"),
                (true, false) => format!("(< {lhs} {rhs})"),
                (true, true) => format!("(> {rhs} {lhs})"),
            };
            self.input(&format!("l{i}"), &lit);
            items.push(format!("({} {lit})", weights[i].gcd(&weights[(i + 1) % m])));
            lits.push(lit);
        }
        self.step(format!("(lemma fk :farkas ({}))", items.join(" ")));
        let mut cur = "fk".to_string();
        for (i, l) in lits.iter().enumerate().take(m - 1) {
            let r = format!("r{i}");
            self.step(format!("(res {r} :pos l{i} :neg {cur} :pivot {l})"));
            cur = r;
        }
        self.step(format!("(res bot :pos l{} :neg {cur} :pivot {})", m - 1, lits[m - 1]));
        let mut decls = String::from("(declare-fun g (Real) Real)\n");
        for i in 0..m {
            let _ = writeln!(decls, "(declare-const x{i} Real)");
        }
        decls
    }
}

fn decls_euf(k: usize) -> String {
    let mut decls = String::from("(declare-sort U)\n(declare-fun f (U) U)\n");
    for i in 0..=k {
        let _ = writeln!(decls, "(declare-const c{i} U)");
    }
    decls
}

/// A refutation with 2 to 6 partitions and at most 20 proof nodes: either
/// an equality chain (with congruence and instantiation on some seeds) or
/// a Farkas cycle of 2 to 4 inequalities.
pub fn random_proof(seed: u64) -> RandomProof {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = rng.random_range(2..=6);
    let euf = rng.random_bool(0.5);
    let mut g = Gen {
        rng,
        parts,
        labels: vec![Vec::new(); parts],
        steps: Vec::new(),
    };
    let decls = if euf { g.euf_chain() } else { g.farkas_cycle() };
    let tree = g.tree();
    RandomProof {
        problem: format!("{decls}\n{tree}"),
        proof: g.steps.join("\n") + "\n",
        partitions: parts,
        proof_nodes: g.steps.len(),
    }
}

/// Largest number of value-carrying ground terms [`brute_force`] accepts.
const MAX_GROUND_TERMS: usize = 9;

/// Search for a model of `f` by enumeration.
///
/// Quantified formulas without arithmetic go to finite-model enumeration
/// with domains up to `size`. Ground formulas get values for every
/// constant and application term, drawn from `0..size` for uninterpreted
/// sorts and from `grid` for the reals, subject to functional consistency.
/// Returns `None` when neither applies.
pub fn brute_force(f: &Formula, size: usize, grid: &[Rational]) -> Option<bool> {
    let f = open_proxies(f);
    if f.has_quantifier() {
        return match finite::find_model(&f, size, 2_000_000) {
            finite::Outcome::Model(_) => Some(true),
            finite::Outcome::NoModel(n) if n == size => Some(false),
            _ => None,
        };
    }
    let mut terms: Vec<Term> = Vec::new();
    f.for_each_literal(&mut |l| {
        for t in l.subterms() {
            if matches!(t.kind(), TermKind::App(..) | TermKind::Var(_)) && !terms.contains(&t) {
                terms.push(t);
            }
        }
    });
    if terms.len() > MAX_GROUND_TERMS {
        return None;
    }
    terms.sort_by_key(|t| (t.depth(), t.id()));
    let mut s = Search {
        terms: &terms,
        size,
        grid,
        values: HashMap::new(),
        tables: BTreeMap::new(),
        formula: &f,
    };
    Some(s.go(0))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Value {
    Elem(usize),
    Num(Rational),
    Bool(bool),
}

struct Search<'a> {
    terms: &'a [Term],
    size: usize,
    grid: &'a [Rational],
    values: HashMap<Term, Value>,
    tables: BTreeMap<(String, Vec<Value>), Value>,
    formula: &'a Formula,
}

impl Search<'_> {
    fn domain(&self, s: &Sort) -> Vec<Value> {
        match s {
            Sort::Rat => self.grid.iter().cloned().map(Value::Num).collect(),
            Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
            _ => (0..self.size).map(Value::Elem).collect(),
        }
    }

    fn go(&mut self, i: usize) -> bool {
        match self.eval(self.formula) {
            Some(b) => return b,
            None if i == self.terms.len() => unreachable!("all terms have values"),
            None => {}
        }
        let t = &self.terms[i];
        let key = match t.kind() {
            TermKind::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.value(a))
                    .collect::<Option<Vec<Value>>>()
                    .expect("arguments are assigned first");
                Some((f.name().to_string(), vals))
            }
            _ => None,
        };
        if let Some(v) = key.as_ref().and_then(|k| self.tables.get(k)).cloned() {
            self.values.insert(t.clone(), v);
            let found = self.go(i + 1);
            self.values.remove(t);
            return found;
        }
        for v in self.domain(t.sort()) {
            self.values.insert(t.clone(), v.clone());
            if let Some(k) = &key {
                self.tables.insert(k.clone(), v);
            }
            let found = self.go(i + 1);
            if let Some(k) = &key {
                self.tables.remove(k);
            }
            self.values.remove(t);
            if found {
                return true;
            }
        }
        false
    }

    fn num(&self, t: &Term) -> Option<Rational> {
        match self.value(t)? {
            Value::Num(q) => Some(q),
            v => panic!("arithmetic on non-number {v:?}"),
        }
    }

    /// Value under the current partial assignment.
    fn value(&self, t: &Term) -> Option<Value> {
        match t.kind() {
            TermKind::Rat(q) => Some(Value::Num(q.clone())),
            TermKind::Bool(b) => Some(Value::Bool(*b)),
            TermKind::Lin(l) => {
                let mut sum = l.constant.clone();
                for (u, k) in &l.terms {
                    sum += k * self.num(u)?;
                }
                Some(Value::Num(sum))
            }
            _ => self.values.get(t).cloned(),
        }
    }

    /// Three-valued evaluation: `None` while some needed term is unassigned.
    fn eval(&self, f: &Formula) -> Option<bool> {
        match f {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Lit(l) => {
                let holds = match &l.atom {
                    Atom::Eq(a, b) => self.value(a)? == self.value(b)?,
                    Atom::Leq { lhs, bound, strict } => {
                        let mut sum = Rational::from_integer(0.into());
                        for (t, k) in &lhs.0 {
                            sum += k * self.num(t)?;
                        }
                        if *strict {
                            sum < *bound
                        } else {
                            sum <= *bound
                        }
                    }
                    Atom::Proxy(_) => unreachable!("proxies are opened"),
                };
                Some(holds == l.positive)
            }
            Formula::And(xs) => {
                let mut all = Some(true);
                for x in xs {
                    match self.eval(x) {
                        Some(false) => return Some(false),
                        None => all = None,
                        Some(true) => {}
                    }
                }
                all
            }
            Formula::Or(xs) => {
                let mut any = Some(false);
                for x in xs {
                    match self.eval(x) {
                        Some(true) => return Some(true),
                        None => any = None,
                        Some(false) => {}
                    }
                }
                any
            }
            Formula::Forall(..) | Formula::Exists(..) => unreachable!("formula is ground"),
        }
    }
}

/// Small rationals for [`brute_force`].
pub fn small_grid() -> Vec<Rational> {
    [(-1, 1), (0, 1), (1, 2), (1, 1), (2, 1)]
        .iter()
        .map(|&(n, d)| crate::terms::ratio(n, d))
        .collect()
}
