//! Congruence closure over a fixed set of terms.

use std::collections::HashMap;

use crate::terms::{FunSym, Term, TermKind};

pub struct Congruence {
    terms: Vec<Term>,
    index: HashMap<Term, usize>,
    parent: Vec<usize>,
}

impl Congruence {
    /// Closure over `terms` and all their subterms.
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Congruence {
        let mut cc = Congruence {
            terms: Vec::new(),
            index: HashMap::new(),
            parent: Vec::new(),
        };
        for t in terms {
            cc.add(&t);
        }
        cc
    }

    pub fn add(&mut self, t: &Term) -> usize {
        if let Some(&i) = self.index.get(t) {
            return i;
        }
        for c in t.children() {
            self.add(&c);
        }
        let i = self.terms.len();
        self.terms.push(t.clone());
        self.index.insert(t.clone(), i);
        self.parent.push(i);
        i
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub fn find_term(&mut self, t: &Term) -> usize {
        let i = self.add(t);
        self.find(i)
    }

    /// Merge two classes; true when they were distinct.
    pub fn union(&mut self, a: &Term, b: &Term) -> bool {
        let (x, y) = (self.find_term(a), self.find_term(b));
        if x == y {
            return false;
        }
        // keep the smaller index as representative for determinism
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        self.parent[hi] = lo;
        true
    }

    /// Propagate congruences to a fixpoint; true when anything merged.
    pub fn close(&mut self) -> bool {
        let mut any = false;
        loop {
            let mut sigs: HashMap<(FunSym, Vec<usize>), usize> = HashMap::new();
            let mut merges = Vec::new();
            for i in 0..self.terms.len() {
                let TermKind::App(f, args) = self.terms[i].kind() else {
                    continue;
                };
                let f = f.clone();
                let args: Vec<Term> = args.clone();
                let key: Vec<usize> = args.iter().map(|a| self.find_term(a)).collect();
                match sigs.get(&(f.clone(), key.clone())) {
                    Some(&j) => merges.push((i, j)),
                    None => {
                        sigs.insert((f, key), i);
                    }
                }
            }
            let mut changed = false;
            for (i, j) in merges {
                let (a, b) = (self.terms[i].clone(), self.terms[j].clone());
                changed |= self.union(&a, &b);
            }
            if !changed {
                return any;
            }
            any = true;
        }
    }

    pub fn same(&mut self, a: &Term, b: &Term) -> bool {
        self.find_term(a) == self.find_term(b)
    }

    /// Equivalence classes as index lists, in term order.
    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..self.terms.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
        out.sort();
        out
    }
}
