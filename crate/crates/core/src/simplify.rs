//! Equivalence-preserving simplification of quantified interpolants.
//!
//! Rules: miniscoping, destructive equality resolution, distribution of
//! `∃` over `∨` (and `∀` over `∧`) with bounded expansion, absorption,
//! factoring of common junction members, and removal of quantified
//! formulas that only state the domain has two elements when a sibling
//! literal already implies it, and Fourier–Motzkin elimination of
//! arithmetic variables that occur only linearly.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};

use crate::formula::{Atom, Formula, Literal};
use crate::proof::as_upper_bound;
use crate::terms::{Rational, Sort, Term, TermStore, Var};

/// Largest number of disjuncts a distribution step may create.
const MAX_EXPANSION: usize = 16;
const MAX_PASSES: usize = 12;

pub fn simplify(store: &TermStore, f: &Formula) -> Formula {
    let s = Simplifier { store };
    let mut cur = f.clone();
    for _ in 0..MAX_PASSES {
        let next = s.go(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

struct Simplifier<'a> {
    store: &'a TermStore,
}

fn mentions(f: &Formula, x: &Var) -> bool {
    f.free_vars().contains(x)
}

fn binds(f: &Formula, x: &Var) -> bool {
    match f {
        Formula::Forall(vs, b) | Formula::Exists(vs, b) => vs.contains(x) || binds(b, x),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().any(|g| binds(g, x)),
        _ => false,
    }
}

fn term_mentions(t: &Term, x: &Var) -> bool {
    t.free_vars().contains(x)
}

/// Sort with more than one element in every model.
fn surely_nontrivial(s: &Sort) -> bool {
    matches!(s, Sort::Rat | Sort::Bool)
}

impl Simplifier<'_> {
    fn go(&self, f: &Formula) -> Formula {
        match f {
            Formula::True | Formula::False | Formula::Lit(_) => f.clone(),
            Formula::And(xs) => self.junction(xs.iter().map(|x| self.go(x)).collect(), false),
            Formula::Or(xs) => self.junction(xs.iter().map(|x| self.go(x)).collect(), true),
            Formula::Exists(vs, b) => self.quantify(vs, self.go(b), false),
            Formula::Forall(vs, b) => self.quantify(vs, self.go(b), true),
        }
    }

    /// Conjunction (`disj = false`) or disjunction with absorption,
    /// factoring and the two-element rule.
    fn junction(&self, items: Vec<Formula>, disj: bool) -> Formula {
        let build = |xs: Vec<Formula>| if disj { Formula::or(xs) } else { Formula::and(xs) };
        let inner = |f: &Formula| -> Vec<Formula> {
            if disj {
                f.conjuncts()
            } else {
                f.disjuncts()
            }
        };
        let f = build(items);
        let items = if disj { f.disjuncts() } else { f.conjuncts() };
        if items.len() < 2 {
            return f;
        }
        // absorption: D ∧ (D ∨ E) = D, and dually
        let mut kept: Vec<Formula> = Vec::new();
        for (i, x) in items.iter().enumerate() {
            let parts = inner(x);
            let absorbed = parts.len() > 1
                && items.iter().enumerate().any(|(j, y)| {
                    j != i && {
                        let ys = inner(y);
                        ys.len() < parts.len() && ys.iter().all(|p| parts.contains(p))
                    }
                });
            if !absorbed {
                kept.push(x.clone());
            }
        }
        // two-element rule
        let kept: Vec<Formula> = kept
            .iter()
            .filter(|x| {
                let Some(sort) = two_element_claim(x, !disj) else {
                    return true;
                };
                let witnessed = kept.iter().any(|y| match y {
                    Formula::Lit(l) => match &l.atom {
                        Atom::Eq(a, _) => a.sort() == &sort && l.positive == disj,
                        _ => false,
                    },
                    _ => false,
                });
                !witnessed
            })
            .cloned()
            .collect();
        // factoring: (C ∧ A) ∨ (C ∧ B) = C ∧ (A ∨ B), and dually
        if kept.len() > 1 {
            let first = inner(&kept[0]);
            let common: Vec<Formula> = first
                .iter()
                .filter(|c| kept[1..].iter().all(|y| inner(y).contains(c)))
                .cloned()
                .collect();
            if !common.is_empty() && kept.iter().all(|y| inner(y).len() > common.len()) {
                let rests: Vec<Formula> = kept
                    .iter()
                    .map(|y| {
                        let rest: Vec<Formula> =
                            inner(y).into_iter().filter(|c| !common.contains(c)).collect();
                        if disj {
                            Formula::and(rest)
                        } else {
                            Formula::or(rest)
                        }
                    })
                    .collect();
                let mut outer = common;
                outer.push(build(rests));
                return if disj { Formula::and(outer) } else { Formula::or(outer) };
            }
        }
        build(kept)
    }

    fn quantify(&self, vs: &[Var], body: Formula, universal: bool) -> Formula {
        let mut f = body;
        for x in vs.iter().rev() {
            f = if universal {
                self.exists(x, &f.not()).not()
            } else {
                self.exists(x, &f)
            };
        }
        f
    }

    /// `∃x. f` in simplified form.
    fn exists(&self, x: &Var, f: &Formula) -> Formula {
        if !mentions(f, x) {
            return f.clone();
        }
        match f {
            Formula::Or(ds) => Formula::or(ds.iter().map(|d| self.exists(x, d))),
            Formula::Lit(l) => {
                if self.solve(l, x).is_some() || self.avoidable(l, x) {
                    Formula::True
                } else if let Some(g) = self.project(x, std::slice::from_ref(f)) {
                    g
                } else {
                    Formula::exists(vec![x.clone()], f.clone())
                }
            }
            Formula::And(cs) => {
                // destructive equality resolution
                for c in cs {
                    if let Formula::Lit(l) = c {
                        if let Some(t) = self.solve(l, x) {
                            let map = HashMap::from([(x.clone(), t)]);
                            if let Ok(g) = f.subst(self.store, &map) {
                                return self.go(&g);
                            }
                        }
                    }
                }
                // miniscoping
                let (with, without): (Vec<Formula>, Vec<Formula>) =
                    cs.iter().cloned().partition(|c| mentions(c, x));
                if !without.is_empty() {
                    let mut out = without;
                    out.push(self.exists(x, &Formula::and(with)));
                    return Formula::and(out);
                }
                if let Some(g) = self.project(x, &with) {
                    return g;
                }
                // pull an inner existential out when that lets x be eliminated
                for (i, c) in with.iter().enumerate() {
                    let Formula::Exists(ys, b) = c else { continue };
                    let clash = ys.contains(x)
                        || with.iter().enumerate().any(|(j, d)| j != i && ys.iter().any(|y| mentions(d, y)));
                    if clash {
                        continue;
                    }
                    let mut conj = with.clone();
                    conj[i] = (**b).clone();
                    let g = self.exists(x, &Formula::and(conj));
                    if !binds(&g, x) {
                        return self.quantify(ys, g, false);
                    }
                }
                // distribution over a disjunction
                if let Some(pos) = with.iter().position(|c| matches!(c, Formula::Or(_))) {
                    let ds = with[pos].disjuncts();
                    let others: Vec<Formula> =
                        with.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, c)| c.clone()).collect();
                    if ds.len() <= MAX_EXPANSION {
                        return Formula::or(ds.into_iter().map(|d| {
                            let mut conj = others.clone();
                            conj.push(d);
                            self.exists(x, &Formula::and(conj))
                        }));
                    }
                }
                if cs.iter().all(|c| matches!(c, Formula::Lit(l) if self.avoidable(l, x))) {
                    return Formula::True;
                }
                Formula::exists(vec![x.clone()], f.clone())
            }
            _ => Formula::exists(vec![x.clone()], f.clone()),
        }
    }

    /// `t` with `l ≡ x = t` and `x` not in `t`.
    fn solve(&self, l: &Literal, x: &Var) -> Option<Term> {
        let Atom::Eq(a, b) = &l.atom else { return None };
        if !l.positive {
            return None;
        }
        if x.sort != Sort::Rat {
            let is_x = |t: &Term| t.as_var() == Some(x);
            return if is_x(a) && !term_mentions(b, x) {
                Some(b.clone())
            } else if is_x(b) && !term_mentions(a, x) {
                Some(a.clone())
            } else {
                None
            };
        }
        let (mut map, mut c) = a.linearize();
        let (mb, cb) = b.linearize();
        for (t, k) in mb {
            *map.entry(t).or_insert_with(Rational::zero) -= k;
        }
        map.retain(|_, k| !k.is_zero());
        c -= cb;
        let xt = self.store.var(x);
        let k = map.remove(&xt)?;
        if map.keys().any(|t| term_mentions(t, x)) {
            return None;
        }
        // k·x + Σ rest + c = 0
        let parts: Vec<(Term, Rational)> = map.into_iter().map(|(t, q)| (t, -q / &k)).collect();
        self.store.lin(parts, -c / &k).ok()
    }

    /// Fourier–Motzkin: `∃x. ∧ bounds` for inequalities in which `x` occurs
    /// only as a linear summand.
    fn project(&self, x: &Var, conj: &[Formula]) -> Option<Formula> {
        if x.sort != Sort::Rat {
            return None;
        }
        let xt = self.store.var(x);
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for c in conj {
            let Formula::Lit(l) = c else { return None };
            let (map, bound, strict) = as_upper_bound(l)?;
            if map.keys().any(|t| *t != xt && term_mentions(t, x)) {
                return None;
            }
            let k = map.get(&xt)?.clone();
            if k.is_positive() {
                upper.push((map, bound, strict, k));
            } else {
                lower.push((map, bound, strict, k));
            }
        }
        if lower.len() * upper.len() > MAX_EXPANSION {
            return None;
        }
        let mut out = Vec::new();
        for (lm, lb, ls, lk) in &lower {
            for (um, ub, us, uk) in &upper {
                // (-lk)·upper + uk·lower cancels x
                let mut map: BTreeMap<Term, Rational> = BTreeMap::new();
                for (t, k) in um {
                    *map.entry(t.clone()).or_insert_with(Rational::zero) += k * -lk;
                }
                for (t, k) in lm {
                    *map.entry(t.clone()).or_insert_with(Rational::zero) += k * uk;
                }
                map.remove(&xt);
                let bound = ub * -lk + lb * uk;
                out.push(Formula::lit(Literal::ineq_from_map(map, -bound, *ls || *us)));
            }
        }
        Some(Formula::and(out))
    }

    /// `x ≠ t` over the rationals, with `x` not in `t`: any finite set of
    /// such disequalities is satisfiable by some `x`.
    fn avoidable(&self, l: &Literal, x: &Var) -> bool {
        if l.positive || x.sort != Sort::Rat {
            return false;
        }
        let Atom::Eq(a, b) = &l.atom else { return false };
        let mut diff = a.linearize().0;
        for (t, k) in b.linearize().0 {
            *diff.entry(t).or_insert_with(Rational::zero) -= k;
        }
        diff.retain(|_, k| !k.is_zero());
        let xt = self.store.var(x);
        diff.contains_key(&xt) && diff.keys().filter(|t| **t != xt).all(|t| !term_mentions(t, x))
    }
}

/// Sort `S` when `f` is `∃x,y. x ≠ y` (or, with `universal`, `∀x,y. x = y`)
/// over `S`.
fn two_element_claim(f: &Formula, existential: bool) -> Option<Sort> {
    let (vs, body) = match f {
        Formula::Exists(vs, b) if existential => (vs, b),
        Formula::Forall(vs, b) if !existential => (vs, b),
        _ => return None,
    };
    let Formula::Lit(l) = body.as_ref() else { return None };
    let Atom::Eq(a, b) = &l.atom else { return None };
    if l.positive == existential || vs.len() != 2 {
        return None;
    }
    let (x, y) = (a.as_var()?, b.as_var()?);
    let sort = a.sort().clone();
    // arithmetic and Boolean versions are already folded to constants
    (vs.contains(x) && vs.contains(y) && x != y && !surely_nontrivial(&sort)).then_some(sort)
}
