//! Literals, clauses and formulas.
//!
//! Literals are normalized on construction: equalities order their
//! arguments by term id, arithmetic comparisons are brought into the form
//! `Σ kᵢ·tᵢ ≤ c` / `Σ kᵢ·tᵢ < c` with coprime integer coefficients and a
//! positive leading coefficient. As a consequence `x ≤ y`, `y ≥ x` and
//! `1·x + (−1)·y ≤ 0` are the same literal and `x > y` is its negation.
//!
//! Formulas are kept in negation normal form. The smart constructors
//! ([`Formula::and`], [`Formula::or`], [`Formula::not`], ...) fold
//! constants and merge a few complementary literal patterns; they never do
//! anything beyond local, equivalence-preserving clean-up.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::terms::{fmt_rational, FunSym, Rational, Sort, Term, TermError, TermStore, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("quantified clause must be a closed universal formula: {0}")]
    BadProxy(String),
    #[error("comparison on non-arithmetic sort {0}")]
    NotArithmetic(Sort),
}

/// Left-hand side of a normalized inequality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr(pub Vec<(Term, Rational)>);

impl LinExpr {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.0.iter().map(|(t, _)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Eq(Term, Term),
    /// `lhs ≤ bound`, or `lhs < bound` when `strict`.
    Leq {
        lhs: LinExpr,
        bound: Rational,
        strict: bool,
    },
    /// A closed universally quantified clause treated as an opaque atom.
    Proxy(Arc<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

/// Scale a linear form to coprime integer coefficients (positive factor).
fn integer_scale(map: &BTreeMap<Term, Rational>) -> Rational {
    let mut lcm = num_bigint::BigInt::one();
    for k in map.values() {
        lcm = lcm.lcm(k.denom());
    }
    let mut gcd = num_bigint::BigInt::zero();
    for k in map.values() {
        let n = (k * BigRational::from_integer(lcm.clone())).to_integer();
        gcd = gcd.gcd(&n);
    }
    if gcd.is_zero() {
        return Rational::one();
    }
    BigRational::new(lcm, gcd)
}

fn lin_expr(map: BTreeMap<Term, Rational>) -> LinExpr {
    LinExpr(map.into_iter().collect())
}

impl Literal {
    pub fn new(atom: Atom, positive: bool) -> Literal {
        Literal { atom, positive }
    }

    pub fn negate(&self) -> Literal {
        Literal {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }

    fn constant(value: bool) -> Literal {
        Literal {
            atom: Atom::Leq {
                lhs: LinExpr(Vec::new()),
                bound: Rational::zero(),
                strict: false,
            },
            positive: value,
        }
    }

    pub fn truth() -> Literal {
        Literal::constant(true)
    }

    pub fn falsity() -> Literal {
        Literal::constant(false)
    }

    /// `Σ map + constant ≤ 0` (or `< 0`), normalized.
    pub fn ineq_from_map(
        mut map: BTreeMap<Term, Rational>,
        constant: Rational,
        strict: bool,
    ) -> Literal {
        map.retain(|_, k| !k.is_zero());
        let bound = -constant;
        if map.is_empty() {
            let holds = if strict {
                bound.is_positive()
            } else {
                !bound.is_negative()
            };
            return Literal::constant(holds);
        }
        let scale = integer_scale(&map);
        for k in map.values_mut() {
            *k *= &scale;
        }
        let bound = bound * &scale;
        let leading_positive = map.values().next().unwrap().is_positive();
        if leading_positive {
            Literal::new(
                Atom::Leq {
                    lhs: lin_expr(map),
                    bound,
                    strict,
                },
                true,
            )
        } else {
            for k in map.values_mut() {
                *k = -k.clone();
            }
            Literal::new(
                Atom::Leq {
                    lhs: lin_expr(map),
                    bound: -bound,
                    strict: !strict,
                },
                false,
            )
        }
    }

    /// `a ≤ b`, or `a < b` when `strict`.
    pub fn compare(a: &Term, b: &Term, strict: bool) -> Result<Literal, FormulaError> {
        for t in [a, b] {
            if t.sort() != &Sort::Rat {
                return Err(FormulaError::NotArithmetic(t.sort().clone()));
            }
        }
        let (mut map, mut c) = a.linearize();
        let (mb, cb) = b.linearize();
        for (t, k) in mb {
            let e = map.entry(t).or_insert_with(Rational::zero);
            *e -= k;
        }
        c -= cb;
        Ok(Literal::ineq_from_map(map, c, strict))
    }

    pub fn le(a: &Term, b: &Term) -> Result<Literal, FormulaError> {
        Literal::compare(a, b, false)
    }

    pub fn lt(a: &Term, b: &Term) -> Result<Literal, FormulaError> {
        Literal::compare(a, b, true)
    }

    pub fn ge(a: &Term, b: &Term) -> Result<Literal, FormulaError> {
        Literal::compare(b, a, false)
    }

    pub fn gt(a: &Term, b: &Term) -> Result<Literal, FormulaError> {
        Literal::compare(b, a, true)
    }

    /// Equality, canonical up to symmetry and (for arithmetic terms) linear
    /// rearrangement.
    pub fn eq(store: &TermStore, a: &Term, b: &Term) -> Result<Literal, FormulaError> {
        if a.sort() != b.sort() {
            return Err(TermError::SortError {
                context: "equality".into(),
                expected: a.sort().clone(),
                found: b.sort().clone(),
            }
            .into());
        }
        if a.sort() != &Sort::Rat {
            let (x, y) = if a.id() <= b.id() { (a, b) } else { (b, a) };
            return Ok(Literal::new(Atom::Eq(x.clone(), y.clone()), true));
        }
        let (mut map, mut c) = a.linearize();
        let (mb, cb) = b.linearize();
        for (t, k) in mb {
            let e = map.entry(t).or_insert_with(Rational::zero);
            *e -= k;
        }
        map.retain(|_, k| !k.is_zero());
        c -= cb;
        if map.is_empty() {
            return Ok(Literal::constant(c.is_zero()));
        }
        let mut scale = integer_scale(&map);
        if map.values().next().unwrap().is_negative() {
            scale = -scale;
        }
        for k in map.values_mut() {
            *k *= &scale;
        }
        let rhs = -(c * &scale);
        let entries: Vec<(Term, Rational)> = map.into_iter().collect();
        let (x, y) = if entries.len() == 1 && entries[0].1.is_one() {
            (entries[0].0.clone(), store.rat(rhs))
        } else if entries.len() == 2
            && rhs.is_zero()
            && entries[0].1.is_one()
            && entries[1].1 == -Rational::one()
        {
            (entries[0].0.clone(), entries[1].0.clone())
        } else {
            (store.lin(entries, Rational::zero())?, store.rat(rhs))
        };
        let (x, y) = if x.id() <= y.id() { (x, y) } else { (y, x) };
        Ok(Literal::new(Atom::Eq(x, y), true))
    }

    pub fn neq(store: &TermStore, a: &Term, b: &Term) -> Result<Literal, FormulaError> {
        Ok(Literal::eq(store, a, b)?.negate())
    }

    /// Boolean-valued application `p(t̄)` as the atom `p(t̄) = true`.
    pub fn pred(store: &TermStore, t: &Term) -> Result<Literal, FormulaError> {
        if t.sort() != &Sort::Bool {
            return Err(TermError::SortError {
                context: "predicate".into(),
                expected: Sort::Bool,
                found: t.sort().clone(),
            }
            .into());
        }
        Literal::eq(store, t, &store.bool(true))
    }

    /// Proxy literal for a closed quantified clause `∀x̄. φ`.
    pub fn proxy(f: Formula) -> Result<Literal, FormulaError> {
        match &f {
            Formula::Forall(_, _) if f.free_vars().is_empty() => {
                Ok(Literal::new(Atom::Proxy(Arc::new(f)), true))
            }
            _ => Err(FormulaError::BadProxy(f.to_string())),
        }
    }

    pub fn is_proxy(&self) -> bool {
        matches!(self.atom, Atom::Proxy(_))
    }

    /// Truth value of a literal that does not depend on any term.
    pub fn const_value(&self) -> Option<bool> {
        match &self.atom {
            Atom::Leq { lhs, bound, strict } if lhs.is_empty() => {
                let v = if *strict {
                    bound.is_positive()
                } else {
                    !bound.is_negative()
                };
                Some(v == self.positive)
            }
            Atom::Eq(a, b) if a == b => Some(self.positive),
            Atom::Eq(a, b) => match (a.as_rat(), b.as_rat()) {
                (Some(x), Some(y)) => Some((x == y) == self.positive),
                _ => match (a.kind(), b.kind()) {
                    (crate::terms::TermKind::Bool(x), crate::terms::TermKind::Bool(y)) => {
                        Some((x == y) == self.positive)
                    }
                    _ => None,
                },
            },
            _ => None,
        }
    }

    /// Top-level terms: equality sides or the terms of the linear form.
    pub fn top_terms(&self) -> Vec<Term> {
        match &self.atom {
            Atom::Eq(a, b) => vec![a.clone(), b.clone()],
            Atom::Leq { lhs, .. } => lhs.terms().cloned().collect(),
            Atom::Proxy(_) => Vec::new(),
        }
    }

    /// All subterms of the top-level terms; empty for proxies.
    pub fn subterms(&self) -> Vec<Term> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for t in self.top_terms() {
            for s in t.subterms() {
                if seen.insert(s.id()) {
                    out.push(s);
                }
            }
        }
        out
    }

    pub fn symbols(&self) -> BTreeSet<FunSym> {
        match &self.atom {
            Atom::Proxy(f) => f.symbols(),
            _ => self
                .top_terms()
                .iter()
                .flat_map(|t| t.symbols())
                .collect(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match &self.atom {
            Atom::Proxy(_) => BTreeSet::new(),
            _ => self
                .top_terms()
                .iter()
                .flat_map(|t| t.free_vars())
                .collect(),
        }
    }

    /// For arithmetic (in)equalities: the normalized form `(e, c)` meaning
    /// `e ⋈ c` with coprime integer coefficients, positive leading.
    pub fn linear_form(&self) -> Option<(LinExpr, Rational)> {
        match &self.atom {
            Atom::Leq { lhs, bound, .. } => Some((lhs.clone(), bound.clone())),
            Atom::Eq(a, b) if a.sort() == &Sort::Rat => {
                let (mut map, mut c) = a.linearize();
                let (mb, cb) = b.linearize();
                for (t, k) in mb {
                    let e = map.entry(t).or_insert_with(Rational::zero);
                    *e -= k;
                }
                map.retain(|_, k| !k.is_zero());
                c -= cb;
                if map.is_empty() {
                    return None;
                }
                let mut scale = integer_scale(&map);
                if map.values().next().unwrap().is_negative() {
                    scale = -scale;
                }
                for k in map.values_mut() {
                    *k *= &scale;
                }
                Some((lin_expr(map), -(c * scale)))
            }
            _ => None,
        }
    }

    /// Rebuild the literal with every top-level term mapped through `f`.
    /// Proxies are closed and returned unchanged.
    pub fn map_terms(
        &self,
        store: &TermStore,
        f: &mut impl FnMut(&Term) -> Term,
    ) -> Result<Literal, FormulaError> {
        let lit = match &self.atom {
            Atom::Eq(a, b) => Literal::eq(store, &f(a), &f(b))?,
            Atom::Leq { lhs, bound, strict } => {
                let parts: Vec<(Term, Rational)> =
                    lhs.0.iter().map(|(t, k)| (f(t), k.clone())).collect();
                for (t, _) in &parts {
                    if t.sort() != &Sort::Rat {
                        return Err(FormulaError::NotArithmetic(t.sort().clone()));
                    }
                }
                let sum = store.lin(parts, Rational::zero())?;
                let (map, c) = sum.linearize();
                Literal::ineq_from_map(map, c - bound, *strict)
            }
            Atom::Proxy(_) => return Ok(self.clone()),
        };
        Ok(if self.positive { lit } else { lit.negate() })
    }

    pub fn subst(&self, store: &TermStore, map: &HashMap<Var, Term>) -> Result<Literal, FormulaError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        let mut err = None;
        let out = self.map_terms(store, &mut |t| match store.subst(t, map) {
            Ok(r) => r,
            Err(e) => {
                err = Some(e);
                t.clone()
            }
        })?;
        match err {
            Some(e) => Err(e.into()),
            None => Ok(out),
        }
    }
}

/// A disjunction of literals, kept as a sorted duplicate-free set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause(Vec<Literal>);

impl Clause {
    pub fn new(lits: impl IntoIterator<Item = Literal>) -> Clause {
        let mut v: Vec<Literal> = lits.into_iter().collect();
        v.sort();
        v.dedup();
        Clause(v)
    }

    pub fn empty() -> Clause {
        Clause(Vec::new())
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, l: &Literal) -> bool {
        self.0.binary_search(l).is_ok()
    }

    pub fn without(&self, l: &Literal) -> Clause {
        Clause(self.0.iter().filter(|x| *x != l).cloned().collect())
    }

    pub fn union(&self, other: &Clause) -> Clause {
        Clause::new(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn to_formula(&self) -> Formula {
        Formula::or(self.0.iter().cloned().map(Formula::lit))
    }

    pub fn symbols(&self) -> BTreeSet<FunSym> {
        self.0.iter().flat_map(|l| l.symbols()).collect()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(or")?;
        for l in &self.0 {
            write!(f, " {l}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Lit(Literal),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Forall(Vec<Var>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
}

/// Pairwise merging of arithmetic literals inside a junction. `disj`
/// selects the disjunctive rules: `e < c ∨ e = c ⇒ e ≤ c` and
/// `e > c ∨ e = c ⇒ e ≥ c`; the conjunctive duals turn `≤ ∧ ≠` into `<`.
fn merge_pair(a: &Literal, b: &Literal, disj: bool) -> Option<Literal> {
    let (eq, ineq) = match (&a.atom, &b.atom) {
        (Atom::Eq(..), Atom::Leq { .. }) => (a, b),
        (Atom::Leq { .. }, Atom::Eq(..)) => (b, a),
        _ => return None,
    };
    if eq.positive != disj {
        return None;
    }
    let (e1, c1) = eq.linear_form()?;
    let Atom::Leq { lhs, bound, strict } = &ineq.atom else {
        return None;
    };
    if &e1 != lhs || &c1 != bound {
        return None;
    }
    // atom `lhs ⋈ bound`; positive strict = `<`, negative non-strict = `>`
    let is_strict_relation = ineq.positive == *strict;
    if disj && is_strict_relation {
        // `<` becomes `≤` (positive, non-strict); `>` becomes `≥` (negative, strict)
        return Some(Literal::new(
            Atom::Leq {
                lhs: lhs.clone(),
                bound: bound.clone(),
                strict: !*strict,
            },
            ineq.positive,
        ));
    }
    if !disj && !is_strict_relation {
        // `≤` becomes `<`; `≥` becomes `>`
        return Some(Literal::new(
            Atom::Leq {
                lhs: lhs.clone(),
                bound: bound.clone(),
                strict: !*strict,
            },
            ineq.positive,
        ));
    }
    None
}

fn junction(items: impl IntoIterator<Item = Formula>, disj: bool) -> Formula {
    let (unit, zero) = if disj {
        (Formula::False, Formula::True)
    } else {
        (Formula::True, Formula::False)
    };
    let mut out: Vec<Formula> = Vec::new();
    let mut stack: Vec<Formula> = items.into_iter().collect();
    stack.reverse();
    while let Some(f) = stack.pop() {
        match f {
            f if f == unit => {}
            f if f == zero => return zero,
            Formula::Or(xs) if disj => stack.extend(xs.into_iter().rev()),
            Formula::And(xs) if !disj => stack.extend(xs.into_iter().rev()),
            f => {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
    }
    // literal-level clean-up
    let mut changed = true;
    while changed {
        changed = false;
        'outer: for i in 0..out.len() {
            let Formula::Lit(a) = &out[i] else { continue };
            for j in 0..out.len() {
                if i == j {
                    continue;
                }
                let Formula::Lit(b) = &out[j] else { continue };
                if a.atom == b.atom && a.positive != b.positive {
                    return zero;
                }
                if let Some(m) = merge_pair(a, b, disj) {
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    out.remove(hi);
                    out[lo] = Formula::Lit(m.clone());
                    if out[..lo].contains(&out[lo]) || out[lo + 1..].contains(&out[lo]) {
                        out.remove(lo);
                    }
                    changed = true;
                    break 'outer;
                }
            }
        }
    }
    match out.len() {
        0 => unit,
        1 => out.pop().unwrap(),
        _ if disj => Formula::Or(out),
        _ => Formula::And(out),
    }
}

impl Formula {
    pub fn lit(l: Literal) -> Formula {
        match l.const_value() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Lit(l),
        }
    }

    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        junction(items, false)
    }

    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        junction(items, true)
    }

    /// Negation, pushed to the literals.
    pub fn not(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Lit(l) => Formula::lit(l.negate()),
            Formula::And(xs) => Formula::or(xs.iter().map(Formula::not)),
            Formula::Or(xs) => Formula::and(xs.iter().map(Formula::not)),
            Formula::Forall(vs, b) => Formula::exists(vs.clone(), b.not()),
            Formula::Exists(vs, b) => Formula::forall(vs.clone(), b.not()),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or([a.not(), b])
    }

    fn quant(vars: Vec<Var>, body: Formula, universal: bool) -> Formula {
        let free = body.free_vars();
        let mut vars: Vec<Var> = vars.into_iter().filter(|v| free.contains(v)).collect();
        let mut seen = HashSet::new();
        vars.retain(|v| seen.insert(v.clone()));
        if vars.is_empty() {
            return body;
        }
        match body {
            Formula::Forall(inner, b) if universal => {
                let inner: Vec<Var> = inner.into_iter().filter(|v| !vars.contains(v)).collect();
                vars.extend(inner);
                Formula::Forall(vars, b)
            }
            Formula::Exists(inner, b) if !universal => {
                let inner: Vec<Var> = inner.into_iter().filter(|v| !vars.contains(v)).collect();
                vars.extend(inner);
                Formula::Exists(vars, b)
            }
            body if universal => Formula::Forall(vars, Box::new(body)),
            body => Formula::Exists(vars, Box::new(body)),
        }
    }

    pub fn forall(vars: Vec<Var>, body: Formula) -> Formula {
        Formula::quant(vars, body, true)
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        Formula::quant(vars, body, false)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    pub fn conjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::True => Vec::new(),
            Formula::And(xs) => xs.clone(),
            f => vec![f.clone()],
        }
    }

    pub fn disjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::False => Vec::new(),
            Formula::Or(xs) => xs.clone(),
            f => vec![f.clone()],
        }
    }

    /// Visit every literal (not descending into proxies).
    pub fn for_each_literal(&self, f: &mut impl FnMut(&Literal)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Lit(l) => f(l),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.for_each_literal(f)),
            Formula::Forall(_, b) | Formula::Exists(_, b) => b.for_each_literal(f),
        }
    }

    pub fn literals(&self) -> Vec<Literal> {
        let mut out = Vec::new();
        self.for_each_literal(&mut |l| out.push(l.clone()));
        out
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => true,
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(Formula::has_quantifier),
            Formula::Lit(l) => l.is_proxy(),
            _ => false,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Lit(l) => {
                for v in l.free_vars() {
                    if !bound.contains(&v) {
                        out.insert(v);
                    }
                }
            }
            Formula::And(xs) | Formula::Or(xs) => {
                xs.iter().for_each(|x| x.collect_free(bound, out))
            }
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                b.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Uninterpreted symbols, including those inside proxies.
    pub fn symbols(&self) -> BTreeSet<FunSym> {
        let mut out = BTreeSet::new();
        self.for_each_literal(&mut |l| out.extend(l.symbols()));
        out
    }

    /// Ground terms occurring in the formula (outside proxies), with all
    /// their subterms.
    pub fn ground_terms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.for_each_literal(&mut |l| {
            for t in l.subterms() {
                if t.is_ground() {
                    out.insert(t);
                }
            }
        });
        out
    }

    /// Capture-avoiding substitution of free variables.
    pub fn subst(&self, store: &TermStore, map: &HashMap<Var, Term>) -> Result<Formula, FormulaError> {
        for (v, t) in map {
            if &v.sort != t.sort() {
                return Err(TermError::SortError {
                    context: format!("substitution for {}", v.name),
                    expected: v.sort.clone(),
                    found: t.sort().clone(),
                }
                .into());
            }
        }
        if map.is_empty() {
            return Ok(self.clone());
        }
        Ok(match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Lit(l) => Formula::lit(l.subst(store, map)?),
            Formula::And(xs) => Formula::and(
                xs.iter()
                    .map(|x| x.subst(store, map))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Formula::Or(xs) => Formula::or(
                xs.iter()
                    .map(|x| x.subst(store, map))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                let universal = matches!(self, Formula::Forall(..));
                let body_free = b.free_vars();
                let mut inner: HashMap<Var, Term> = map
                    .iter()
                    .filter(|(v, _)| !vs.contains(v) && body_free.contains(v))
                    .map(|(v, t)| (v.clone(), t.clone()))
                    .collect();
                if inner.is_empty() {
                    return Ok(self.clone());
                }
                let mut used: HashSet<Arc<str>> = HashSet::new();
                for t in inner.values() {
                    used.extend(t.free_vars().into_iter().map(|v| v.name));
                }
                used.extend(body_free.iter().map(|v| v.name.clone()));
                let mut new_vars = Vec::with_capacity(vs.len());
                for v in vs {
                    if used.contains(&v.name) && inner.values().any(|t| t.free_vars().iter().any(|w| w.name == v.name)) {
                        let mut name = format!("{}'", v.name);
                        while used.contains(name.as_str()) {
                            name.push('\'');
                        }
                        let fresh = Var::new(&name, v.sort.clone());
                        used.insert(fresh.name.clone());
                        inner.insert(v.clone(), store.var(&fresh));
                        new_vars.push(fresh);
                    } else {
                        new_vars.push(v.clone());
                    }
                }
                let body = b.subst(store, &inner)?;
                if universal {
                    Formula::forall(new_vars, body)
                } else {
                    Formula::exists(new_vars, body)
                }
            }
        })
    }

    /// Rebuild every literal through `f` (bottom-up, constants refolded).
    pub fn map_literals(
        &self,
        f: &mut impl FnMut(&Literal) -> Result<Formula, FormulaError>,
    ) -> Result<Formula, FormulaError> {
        Ok(match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Lit(l) => f(l)?,
            Formula::And(xs) => Formula::and(
                xs.iter()
                    .map(|x| x.map_literals(f))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Formula::Or(xs) => Formula::or(
                xs.iter()
                    .map(|x| x.map_literals(f))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Formula::Forall(vs, b) => Formula::forall(vs.clone(), b.map_literals(f)?),
            Formula::Exists(vs, b) => Formula::exists(vs.clone(), b.map_literals(f)?),
        })
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Lit(_) => 1,
            Formula::And(xs) | Formula::Or(xs) => 1 + xs.iter().map(Formula::size).sum::<usize>(),
            Formula::Forall(_, b) | Formula::Exists(_, b) => 1 + b.size(),
        }
    }

    /// Canonical representative modulo renaming of bound variables and
    /// reordering of junctions.
    pub fn canonical(&self, store: &TermStore) -> Formula {
        self.canon(store, &mut HashMap::new(), 0)
    }

    fn canon(&self, store: &TermStore, ren: &mut HashMap<Var, Term>, level: usize) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Lit(l) => Formula::lit(
                l.subst(store, ren)
                    .expect("renaming keeps sorts"),
            ),
            Formula::And(xs) | Formula::Or(xs) => {
                let mut kids: Vec<Formula> =
                    xs.iter().map(|x| x.canon(store, ren, level)).collect();
                kids.sort();
                kids.dedup();
                if matches!(self, Formula::And(_)) {
                    Formula::and(kids)
                } else {
                    Formula::or(kids)
                }
            }
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                let saved: Vec<(Var, Option<Term>)> =
                    vs.iter().map(|v| (v.clone(), ren.get(v).cloned())).collect();
                let mut fresh = Vec::new();
                for (i, v) in vs.iter().enumerate() {
                    let nv = Var::new(&format!("!b{}", level + i), v.sort.clone());
                    ren.insert(v.clone(), store.var(&nv));
                    fresh.push(nv);
                }
                let body = b.canon(store, ren, level + vs.len());
                for (v, old) in saved {
                    match old {
                        Some(t) => ren.insert(v, t),
                        None => ren.remove(&v),
                    };
                }
                if matches!(self, Formula::Forall(..)) {
                    Formula::forall(fresh, body)
                } else {
                    Formula::exists(fresh, body)
                }
            }
        }
    }

    /// Equality modulo alpha-renaming and junction order.
    pub fn alpha_eq(&self, other: &Formula, store: &TermStore) -> bool {
        self.canonical(store) == other.canonical(store)
    }
}

fn fmt_side(parts: &[(Term, Rational)], constant: &Rational) -> String {
    let mut items: Vec<String> = parts
        .iter()
        .map(|(t, k)| crate::terms::fmt_scaled(t, k))
        .collect();
    if !constant.is_zero() || items.is_empty() {
        items.push(fmt_rational(constant));
    }
    if items.len() == 1 {
        items.pop().unwrap()
    } else {
        format!("(+ {})", items.join(" "))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.atom {
            Atom::Eq(b, a) => {
                if self.positive {
                    write!(f, "(= {a} {b})")
                } else {
                    write!(f, "(not (= {a} {b}))")
                }
            }
            Atom::Proxy(q) => {
                if self.positive {
                    write!(f, "{q}")
                } else {
                    write!(f, "(not {q})")
                }
            }
            Atom::Leq { lhs, bound, strict } => {
                let mut left = Vec::new();
                let mut right = Vec::new();
                for (t, k) in &lhs.0 {
                    if k.is_positive() {
                        left.push((t.clone(), k.clone()));
                    } else {
                        right.push((t.clone(), -k.clone()));
                    }
                }
                let l = fmt_side(&left, &Rational::zero());
                let r = fmt_side(&right, bound);
                let op = match (self.positive, strict) {
                    (true, false) => "<=",
                    (true, true) => "<",
                    (false, false) => ">",
                    (false, true) => ">=",
                };
                // the most recently built term goes on the left
                let newest_negative = lhs.0.last().is_some_and(|(_, k)| k.is_negative());
                if newest_negative && !left.is_empty() {
                    let mirrored = match op {
                        "<=" => ">=",
                        "<" => ">",
                        ">" => "<",
                        _ => "<=",
                    };
                    write!(f, "({mirrored} {r} {l})")
                } else {
                    write!(f, "({op} {l} {r})")
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Lit(l) => write!(f, "{l}"),
            Formula::And(xs) | Formula::Or(xs) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for x in xs {
                    write!(f, " {x}")?;
                }
                f.write_str(")")
            }
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                let q = if matches!(self, Formula::Forall(..)) { "forall" } else { "exists" };
                write!(f, "({q} (")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "({} {})", v.name, v.sort)?;
                }
                write!(f, ") {b})")
            }
        }
    }
}
