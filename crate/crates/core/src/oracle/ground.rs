//! Satisfiability of quantifier-free EUF+LRA formulas.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::{Signed, Zero};

use crate::formula::{Atom, Formula, Literal};
use crate::terms::{fmt_rational, Rational, Sort, Term, TermKind, TermStore};

use super::cc::Congruence;
use super::lra::{self, Constraint, Rel};
use super::Exhausted;

/// A satisfying assignment of a conjunction of literals.
#[derive(Clone, Debug, Default)]
pub struct GroundModel {
    /// Equivalence classes of the non-arithmetic terms.
    pub classes: Vec<Vec<Term>>,
    /// Values of arithmetic terms.
    pub values: BTreeMap<Term, Rational>,
}

impl GroundModel {
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (i, class) in self.classes.iter().enumerate() {
            let names: Vec<String> = class.iter().map(|t| t.to_string()).collect();
            parts.push(format!("e{i} = {{{}}}", names.join(", ")));
        }
        for (t, v) in &self.values {
            parts.push(format!("{t} = {}", fmt_rational(v)));
        }
        parts.join("; ")
    }
}

struct Arith {
    index: HashMap<Term, usize>,
    atoms: Vec<Term>,
}

impl Arith {
    fn var(&mut self, t: &Term) -> usize {
        if let Some(&i) = self.index.get(t) {
            return i;
        }
        let i = self.atoms.len();
        self.atoms.push(t.clone());
        self.index.insert(t.clone(), i);
        i
    }

    fn linear(&mut self, t: &Term) -> (BTreeMap<usize, Rational>, Rational) {
        let (map, c) = t.linearize();
        let map = map.into_iter().map(|(s, k)| (self.var(&s), k)).collect();
        (map, c)
    }

    fn difference(&mut self, a: &Term, b: &Term) -> (BTreeMap<usize, Rational>, Rational) {
        let (mut m, c) = self.linear(a);
        let (mb, cb) = self.linear(b);
        for (v, k) in mb {
            *m.entry(v).or_insert_with(Rational::zero) -= k;
        }
        m.retain(|_, k| !k.is_zero());
        (m, c - cb)
    }
}

/// Decide a conjunction of ground literals. Proxy literals are ignored.
pub fn check_cube(store: &TermStore, lits: &[Literal]) -> Result<Option<GroundModel>, Exhausted> {
    let t_true = store.bool(true);
    let t_false = store.bool(false);
    let mut cc = Congruence::new([t_true.clone(), t_false.clone()]);
    let mut arith = Arith {
        index: HashMap::new(),
        atoms: Vec::new(),
    };
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut diseqs: Vec<(Term, Term)> = Vec::new();
    let mut rat_diseqs: Vec<(BTreeMap<usize, Rational>, Rational)> = Vec::new();
    for l in lits {
        match &l.atom {
            Atom::Eq(a, b) => {
                cc.add(a);
                cc.add(b);
                let arithmetic = a.sort() == &Sort::Rat;
                if l.positive {
                    cc.union(a, b);
                    if arithmetic {
                        let (m, c) = arith.difference(a, b);
                        constraints.push(Constraint::new(m, c, Rel::Eq));
                    }
                } else {
                    diseqs.push((a.clone(), b.clone()));
                    if arithmetic {
                        rat_diseqs.push(arith.difference(a, b));
                    }
                }
            }
            Atom::Leq { lhs, bound, strict } => {
                let mut m = BTreeMap::new();
                for (t, k) in &lhs.0 {
                    cc.add(t);
                    let (tm, tc) = arith.linear(t);
                    debug_assert!(tc.is_zero());
                    for (v, kv) in tm {
                        *m.entry(v).or_insert_with(Rational::zero) += k * kv;
                    }
                }
                if l.positive {
                    let rel = if *strict { Rel::Lt } else { Rel::Le };
                    constraints.push(Constraint::new(m, -bound.clone(), rel));
                } else {
                    // ¬(e ≤ b) is b - e < 0; ¬(e < b) is b - e ≤ 0
                    let rel = if *strict { Rel::Le } else { Rel::Lt };
                    let neg: BTreeMap<usize, Rational> = m.into_iter().map(|(v, k)| (v, -k)).collect();
                    constraints.push(Constraint::new(neg, bound.clone(), rel));
                }
            }
            Atom::Proxy(_) => {}
        }
    }
    // Arithmetic terms whose equality matters to congruence.
    let mut candidates: Vec<(Term, Term)> = Vec::new();
    {
        let mut by_symbol: HashMap<&str, Vec<&Term>> = HashMap::new();
        for t in cc.terms() {
            if let Some((f, _)) = t.as_app() {
                by_symbol.entry(f.name()).or_default().push(t);
            }
        }
        let mut seen = HashSet::new();
        for apps in by_symbol.values() {
            for (i, s) in apps.iter().enumerate() {
                for t in &apps[i + 1..] {
                    let (_, xs) = s.as_app().unwrap();
                    let (_, ys) = t.as_app().unwrap();
                    for (x, y) in xs.iter().zip(ys) {
                        if x != y && x.sort() == &Sort::Rat {
                            let key = if x.id() < y.id() { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
                            if seen.insert(key.clone()) {
                                candidates.push(key);
                            }
                        }
                    }
                }
            }
        }
    }
    let mut shared: HashSet<(usize, usize)> = HashSet::new();
    let mut model;
    loop {
        cc.close();
        if cc.same(&t_true, &t_false) {
            return Ok(None);
        }
        for (a, b) in &diseqs {
            if cc.same(a, b) {
                return Ok(None);
            }
        }
        for class in cc.classes() {
            let members: Vec<Term> = class
                .iter()
                .map(|&i| cc.terms()[i].clone())
                .filter(|t| t.sort() == &Sort::Rat)
                .collect();
            for m in members.iter().skip(1) {
                if shared.insert((members[0].id() as usize, m.id() as usize)) {
                    let (d, c) = arith.difference(&members[0], m);
                    constraints.push(Constraint::new(d, c, Rel::Eq));
                }
            }
        }
        let Some(m) = lra::solve(&constraints)? else {
            return Ok(None);
        };
        model = m;
        let mut changed = false;
        for (x, y) in &candidates {
            if cc.same(x, y) {
                continue;
            }
            let (d, c) = arith.difference(x, y);
            if !lra::eval(&d, &c, &model).is_zero() {
                continue;
            }
            if implied_zero(&constraints, &d, &c)? {
                cc.union(x, y);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (d, c) in &rat_diseqs {
        if !lra::eval(d, c, &model).is_zero() {
            continue;
        }
        if d.is_empty() || implied_zero(&constraints, d, c)? {
            return Ok(None);
        }
    }
    // The cube is satisfiable, but the point found may still put a
    // disequality, or two arguments congruence keeps apart, at zero. None
    // of them is implied, so each can be pushed to a strict side in turn.
    let mut apart = rat_diseqs;
    for (x, y) in &candidates {
        if !cc.same(x, y) {
            apart.push(arith.difference(x, y));
        }
    }
    while let Some(k) = apart.iter().position(|(d, c)| lra::eval(d, c, &model).is_zero()) {
        let (d, c) = apart.swap_remove(k);
        constraints.push(Constraint::new(d.clone(), c.clone(), Rel::Lt));
        model = match lra::solve(&constraints)? {
            Some(m) => m,
            None => {
                constraints.pop();
                let neg = d.into_iter().map(|(v, q)| (v, -q)).collect();
                constraints.push(Constraint::new(neg, -c, Rel::Lt));
                lra::solve(&constraints)?.ok_or_else(|| Exhausted("disequality has no feasible side".into()))?
            }
        };
    }
    let mut classes: Vec<Vec<Term>> = Vec::new();
    for class in cc.classes() {
        let members: Vec<Term> = class
            .iter()
            .map(|&i| cc.terms()[i].clone())
            .filter(|t| t.sort() != &Sort::Rat)
            .collect();
        let only_constants = members.iter().all(|t| matches!(t.kind(), TermKind::Bool(_)));
        if !only_constants {
            classes.push(members);
        }
    }
    let values = arith
        .atoms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), model.get(&i).cloned().unwrap_or_else(Rational::zero)))
        .collect();
    Ok(Some(GroundModel { classes, values }))
}

/// Whether the constraints force `d + c = 0`.
fn implied_zero(cs: &[Constraint], d: &BTreeMap<usize, Rational>, c: &Rational) -> Result<bool, Exhausted> {
    for sign in [1, -1] {
        let k = Rational::from_integer(sign.into());
        let mut probe = cs.to_vec();
        probe.push(Constraint::new(
            d.iter().map(|(v, q)| (*v, q * &k)).collect(),
            c * &k,
            Rel::Lt,
        ));
        if lra::feasible(&probe)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Case-splitting search for a satisfying cube of a ground formula in
/// negation normal form.
pub struct Search<'a> {
    store: &'a TermStore,
    limit: usize,
    nodes: usize,
}

impl<'a> Search<'a> {
    pub fn new(store: &'a TermStore, limit: usize) -> Self {
        Search {
            store,
            limit,
            nodes: 0,
        }
    }

    pub fn satisfy(&mut self, f: &Formula) -> Result<Option<(Vec<Literal>, GroundModel)>, Exhausted> {
        self.nodes = 0;
        self.search(&[], vec![f.clone()])
    }

    fn search(
        &mut self,
        base: &[Literal],
        todo: Vec<Formula>,
    ) -> Result<Option<(Vec<Literal>, GroundModel)>, Exhausted> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Exhausted("case-split limit".into()));
        }
        let mut cube: Vec<Literal> = base.to_vec();
        let mut in_cube: HashSet<Literal> = cube.iter().cloned().collect();
        let mut ors: Vec<Vec<Formula>> = Vec::new();
        let mut stack = todo;
        loop {
            while let Some(f) = stack.pop() {
                match f {
                    Formula::True => {}
                    Formula::False => return Ok(None),
                    Formula::Lit(l) => {
                        if in_cube.contains(&l.negate()) {
                            return Ok(None);
                        }
                        if in_cube.insert(l.clone()) {
                            cube.push(l);
                        }
                    }
                    Formula::And(xs) => stack.extend(xs),
                    Formula::Or(xs) => ors.push(xs),
                    Formula::Forall(..) | Formula::Exists(..) => {
                        return Err(Exhausted("quantifier in ground search".into()))
                    }
                }
            }
            let mut progress = false;
            let mut kept = Vec::new();
            for or in ors.drain(..) {
                let mut live = Vec::new();
                let mut satisfied = false;
                for d in or {
                    match &d {
                        Formula::Lit(l) if in_cube.contains(l) => {
                            satisfied = true;
                            break;
                        }
                        Formula::Lit(l) if in_cube.contains(&l.negate()) => {}
                        _ => live.push(d),
                    }
                }
                if satisfied {
                    continue;
                }
                match live.len() {
                    0 => return Ok(None),
                    1 => {
                        stack.push(live.pop().unwrap());
                        progress = true;
                    }
                    _ => kept.push(live),
                }
            }
            ors = kept;
            if !progress {
                break;
            }
        }
        let Some(model) = check_cube(self.store, &cube)? else {
            return Ok(None);
        };
        // branch on a disjunction the current model falsifies, if any; when
        // the model satisfies all of them the formula is satisfiable
        let values: Vec<Option<bool>> = ors
            .iter()
            .map(|o| evaluate(&Formula::Or(o.clone()), &model))
            .collect();
        if values.iter().all(|v| *v == Some(true)) {
            return Ok(Some((cube, model)));
        }
        let rank = |i: usize| (values[i].is_none(), ors[i].len());
        let pick = (0..ors.len())
            .filter(|&i| values[i] != Some(true))
            .min_by_key(|&i| rank(i))
            .unwrap();
        let choice = ors.swap_remove(pick);
        let mut refuted: Vec<Formula> = Vec::new();
        for d in choice {
            let mut todo: Vec<Formula> = ors.iter().map(|o| Formula::Or(o.clone())).collect();
            todo.extend(refuted.iter().cloned());
            todo.push(d.clone());
            if let Some(found) = self.search(&cube, todo)? {
                return Ok(Some(found));
            }
            refuted.push(d.not());
        }
        Ok(None)
    }
}

/// Truth value of a quantifier-free formula under a model, when the model
/// covers its terms.
pub fn evaluate(f: &Formula, model: &GroundModel) -> Option<bool> {
    match f {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::Lit(l) => holds(l, model),
        Formula::And(xs) => {
            let mut all = Some(true);
            for x in xs {
                match evaluate(x, model) {
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
                match evaluate(x, model) {
                    Some(true) => return Some(true),
                    None => any = None,
                    Some(false) => {}
                }
            }
            any
        }
        Formula::Forall(..) | Formula::Exists(..) => None,
    }
}

/// Truth value of a literal under a model, when the model covers its terms.
pub fn holds(l: &Literal, model: &GroundModel) -> Option<bool> {
    let value = |t: &Term| -> Option<Rational> {
        let (map, c) = t.linearize();
        let mut v = c;
        for (s, k) in map {
            v += k * model.values.get(&s)?;
        }
        Some(v)
    };
    let class = |t: &Term| model.classes.iter().position(|c| c.contains(t));
    let truth = match &l.atom {
        Atom::Eq(a, b) if a.sort() == &Sort::Rat => value(a)? == value(b)?,
        Atom::Eq(a, b) => {
            if a == b {
                true
            } else {
                match (a.kind(), b.kind()) {
                    (TermKind::Bool(x), TermKind::Bool(y)) => x == y,
                    _ => class(a)? == class(b)?,
                }
            }
        }
        Atom::Leq { lhs, bound, strict } => {
            let mut v = Rational::zero();
            for (t, k) in &lhs.0 {
                v += k * value(t)?;
            }
            let d = v - bound;
            if *strict {
                d.is_negative()
            } else {
                !d.is_positive()
            }
        }
        Atom::Proxy(_) => return None,
    };
    Some(truth == l.positive)
}
