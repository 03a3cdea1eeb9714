//! Refutation of quantified formulas by Skolemization and rounds of
//! instantiation with a growing ground-term pool.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::formula::{Atom, Formula, FormulaError, Literal};
use crate::proof::as_upper_bound;
use crate::terms::{FunSym, Rational, Sort, Term, TermKind, TermStore, Var};

use super::ground::{GroundModel, Search};
use super::{Budget, Exhausted};

static FRESH: AtomicUsize = AtomicUsize::new(0);

pub(super) fn fresh_id() -> usize {
    FRESH.fetch_add(1, Ordering::Relaxed)
}

/// Replace proxy literals by the formulas they stand for.
pub fn open_proxies(f: &Formula) -> Formula {
    f.map_literals(&mut |l: &Literal| {
        Ok(match &l.atom {
            Atom::Proxy(q) if l.positive => open_proxies(q),
            Atom::Proxy(q) => open_proxies(q).not(),
            _ => Formula::lit(l.clone()),
        })
    })
    .expect("opening proxies rebuilds literals unchanged")
}

pub enum Outcome {
    Refuted,
    /// The formula has no quantifiers and this cube satisfies it.
    Model(Vec<Literal>, GroundModel),
    Open(String),
}

struct Prepared {
    formula: Formula,
    bound: HashSet<Var>,
}

/// Rename universal variables apart and replace existential ones by
/// Skolem terms over the enclosing universals.
fn skolemize(store: &TermStore, f: &Formula) -> Result<Prepared, FormulaError> {
    let mut bound = HashSet::new();
    let formula = sk(store, f, &mut Vec::new(), &mut bound)?;
    Ok(Prepared { formula, bound })
}

fn sk(
    store: &TermStore,
    f: &Formula,
    universals: &mut Vec<Var>,
    bound: &mut HashSet<Var>,
) -> Result<Formula, FormulaError> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Lit(_) => f.clone(),
        Formula::And(xs) => Formula::and(
            xs.iter()
                .map(|x| sk(store, x, universals, bound))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Formula::Or(xs) => Formula::or(
            xs.iter()
                .map(|x| sk(store, x, universals, bound))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Formula::Forall(vs, b) => {
            let mut map = HashMap::new();
            let mut fresh = Vec::new();
            for v in vs {
                let w = Var::new(&format!("!u{}", fresh_id()), v.sort.clone());
                map.insert(v.clone(), store.var(&w));
                bound.insert(w.clone());
                fresh.push(w);
            }
            let body = b.subst(store, &map)?;
            let n = universals.len();
            universals.extend(fresh.iter().cloned());
            let out = sk(store, &body, universals, bound)?;
            universals.truncate(n);
            Formula::forall(fresh, out)
        }
        Formula::Exists(vs, b) => {
            let free = b.free_vars();
            let deps: Vec<Var> = universals.iter().filter(|u| free.contains(u)).cloned().collect();
            let args: Vec<Term> = deps.iter().map(|u| store.var(u)).collect();
            let sorts: Vec<Sort> = deps.iter().map(|u| u.sort.clone()).collect();
            let mut map = HashMap::new();
            for v in vs {
                let sym = FunSym::new(&format!("!sk{}", fresh_id()), sorts.clone(), v.sort.clone());
                map.insert(v.clone(), store.app(&sym, args.clone())?);
            }
            let body = b.subst(store, &map)?;
            sk(store, &body, universals, bound)?
        }
    })
}

type Pool = BTreeMap<Sort, Vec<Term>>;

fn rank(t: &Term) -> (usize, u32) {
    (t.depth(), t.id())
}

/// Closed atomic terms usable as instances, plus the boundary point
/// `x = (b - Σ rest) / k` of every inequality `k·x + Σ rest ⋈ b` in which a
/// bound arithmetic variable `x` is a summand next to closed terms.
fn collect_terms(store: &TermStore, f: &Formula, bound: &HashSet<Var>, out: &mut BTreeSet<Term>) {
    let closed = |t: &Term| t.free_vars().iter().all(|v| !bound.contains(v));
    f.for_each_literal(&mut |l| {
        for t in l.subterms() {
            let instance = matches!(t.kind(), TermKind::App(..) | TermKind::Var(_) | TermKind::Rat(_));
            if instance && closed(&t) {
                out.insert(t);
            }
        }
        let Some((map, b, _)) = as_upper_bound(l) else { return };
        for (x, k) in &map {
            if !x.as_var().is_some_and(|v| bound.contains(v)) {
                continue;
            }
            if map.keys().any(|t| t != x && !closed(t)) {
                continue;
            }
            let parts: Vec<(Term, Rational)> = map
                .iter()
                .filter(|(t, _)| *t != x)
                .map(|(t, q)| (t.clone(), -q / k))
                .collect();
            if let Ok(t) = store.lin(parts, &b / k) {
                out.insert(t);
            }
        }
    });
}

fn build_pool(terms: &BTreeSet<Term>, sorts: &BTreeSet<Sort>, store: &TermStore, cap: usize, old: Option<&Pool>) -> Pool {
    let mut pool: Pool = BTreeMap::new();
    for t in terms {
        pool.entry(t.sort().clone()).or_default().push(t.clone());
    }
    for s in sorts {
        let entry = pool.entry(s.clone()).or_default();
        if entry.is_empty() {
            // domains are non-empty: reuse the witness from an earlier round
            match old.and_then(|p| p.get(s)).and_then(|v| v.first()) {
                Some(t) => entry.push(t.clone()),
                None => {
                    let c = FunSym::new(&format!("!c{}", fresh_id()), vec![], s.clone());
                    entry.push(store.constant(&c).expect("constants are well-sorted"));
                }
            }
        }
    }
    for v in pool.values_mut() {
        v.sort_by_key(rank);
        v.dedup();
        v.truncate(cap);
    }
    pool
}

fn bound_sorts(f: &Formula, out: &mut BTreeSet<Sort>) {
    match f {
        Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| bound_sorts(x, out)),
        Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
            out.extend(vs.iter().map(|v| v.sort.clone()));
            bound_sorts(b, out);
        }
        _ => {}
    }
}

struct Instantiator<'a> {
    store: &'a TermStore,
    pool: &'a Pool,
    count: usize,
    cap: usize,
}

impl Instantiator<'_> {
    fn run(&mut self, f: &Formula) -> Result<Formula, FormulaError> {
        Ok(match f {
            Formula::True | Formula::False | Formula::Lit(_) => f.clone(),
            Formula::And(xs) => Formula::and(
                xs.iter().map(|x| self.run(x)).collect::<Result<Vec<_>, _>>()?,
            ),
            Formula::Or(xs) => Formula::or(
                xs.iter().map(|x| self.run(x)).collect::<Result<Vec<_>, _>>()?,
            ),
            Formula::Forall(vs, b) => {
                let domains: Vec<&Vec<Term>> = vs.iter().map(|v| &self.pool[&v.sort]).collect();
                let mut parts = Vec::new();
                let mut idx = vec![0usize; vs.len()];
                'tuples: loop {
                    if self.count >= self.cap {
                        break;
                    }
                    self.count += 1;
                    let map: HashMap<Var, Term> = vs
                        .iter()
                        .zip(&idx)
                        .zip(&domains)
                        .map(|((v, &i), d)| (v.clone(), d[i].clone()))
                        .collect();
                    let inst = self.run(&b.subst(self.store, &map)?)?;
                    if inst.is_false() {
                        return Ok(Formula::False);
                    }
                    parts.push(inst);
                    // next tuple, smallest terms first
                    for k in (0..idx.len()).rev() {
                        idx[k] += 1;
                        if idx[k] < domains[k].len() {
                            continue 'tuples;
                        }
                        idx[k] = 0;
                    }
                    break;
                }
                Formula::and(parts)
            }
            Formula::Exists(..) => unreachable!("formula is Skolemized"),
        })
    }
}

/// Try to show that `f` is unsatisfiable.
pub fn refute(store: &TermStore, f: &Formula, budget: &Budget) -> Outcome {
    match refute_inner(store, f, budget) {
        Ok(o) => o,
        Err(Exhausted(reason)) => Outcome::Open(reason),
    }
}

fn refute_inner(store: &TermStore, f: &Formula, budget: &Budget) -> Result<Outcome, Exhausted> {
    let opened = open_proxies(f);
    let prepared = skolemize(store, &opened).map_err(|e| Exhausted(e.to_string()))?;
    let g = prepared.formula;
    let mut search = Search::new(store, budget.case_splits);
    if !g.has_quantifier() {
        return Ok(match search.satisfy(&g)? {
            None => Outcome::Refuted,
            Some((cube, model)) => Outcome::Model(cube, model),
        });
    }
    let mut sorts = BTreeSet::new();
    bound_sorts(&g, &mut sorts);
    let mut terms = BTreeSet::new();
    collect_terms(store, &g, &prepared.bound, &mut terms);
    let mut pool = build_pool(&terms, &sorts, store, budget.pool, None);
    for _ in 0..budget.rounds {
        let mut inst = Instantiator {
            store,
            pool: &pool,
            count: 0,
            cap: budget.instances,
        };
        let ground = inst.run(&g).map_err(|e| Exhausted(e.to_string()))?;
        if search.satisfy(&ground)?.is_none() {
            return Ok(Outcome::Refuted);
        }
        collect_terms(store, &ground, &prepared.bound, &mut terms);
        let next = build_pool(&terms, &sorts, store, budget.pool, Some(&pool));
        if next == pool {
            break;
        }
        pool = next;
    }
    Ok(Outcome::Open("instantiation found no refutation".into()))
}
