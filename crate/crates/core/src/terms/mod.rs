//! Sorts, function symbols and hash-consed terms.
//!
//! Every [`Term`] is created through a [`TermStore`], which guarantees that
//! two structurally equal terms share one node and one id. Equality, hashing
//! and ordering of terms are by id only, so terms coming from different
//! stores must never be mixed.

mod print;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use print::fmt_rational;
pub(crate) use print::fmt_scaled;

/// Exact rational numbers.
pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Rat,
    Uninterpreted(Arc<str>),
}

impl Sort {
    pub fn named(name: &str) -> Sort {
        Sort::Uninterpreted(Arc::from(name))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Rat => f.write_str("Real"),
            Sort::Uninterpreted(name) => f.write_str(name),
        }
    }
}

#[derive(Debug)]
struct FunSymData {
    name: Arc<str>,
    args: Vec<Sort>,
    result: Sort,
}

/// An uninterpreted function symbol. Constants are 0-ary symbols and
/// predicates are symbols with a `Bool` result.
///
/// Symbols are identified by name.
#[derive(Clone)]
pub struct FunSym(Arc<FunSymData>);

impl FunSym {
    pub fn new(name: &str, args: Vec<Sort>, result: Sort) -> FunSym {
        FunSym(Arc::new(FunSymData {
            name: Arc::from(name),
            args,
            result,
        }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn arg_sorts(&self) -> &[Sort] {
        &self.0.args
    }

    pub fn result_sort(&self) -> &Sort {
        &self.0.result
    }

    pub fn arity(&self) -> usize {
        self.0.args.len()
    }
}

impl PartialEq for FunSym {
    fn eq(&self, other: &Self) -> bool {
        self.0.name == other.0.name
    }
}

impl Eq for FunSym {}

impl Hash for FunSym {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.name.hash(state)
    }
}

impl PartialOrd for FunSym {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FunSym {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.name.cmp(&other.0.name)
    }
}

impl fmt::Debug for FunSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for FunSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A sorted variable (bound variable or auxiliary flattening variable).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Var {
        Var {
            name: Arc::from(name),
            sort,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Canonical linear combination: terms sorted by id, no zero coefficients,
/// no nested combinations or numerals among the terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinComb {
    pub terms: Vec<(Term, Rational)>,
    pub constant: Rational,
}

#[derive(Debug)]
pub enum TermKind {
    Var(Var),
    App(FunSym, Vec<Term>),
    Rat(Rational),
    Bool(bool),
    Lin(LinComb),
}

#[derive(Debug)]
pub struct TermNode {
    id: u32,
    sort: Sort,
    kind: TermKind,
}

#[derive(Clone)]
pub struct Term(Arc<TermNode>);

impl Term {
    pub fn id(&self) -> u32 {
        self.0.id
    }

    pub fn sort(&self) -> &Sort {
        &self.0.sort
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn as_var(&self) -> Option<&Var> {
        match &self.0.kind {
            TermKind::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_app(&self) -> Option<(&FunSym, &[Term])> {
        match &self.0.kind {
            TermKind::App(f, args) => Some((f, args)),
            _ => None,
        }
    }

    pub fn as_rat(&self) -> Option<&Rational> {
        match &self.0.kind {
            TermKind::Rat(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_app(&self) -> bool {
        matches!(self.0.kind, TermKind::App(..))
    }

    /// Head symbol of an application.
    pub fn hd(&self) -> Result<&FunSym, TermError> {
        match &self.0.kind {
            TermKind::App(f, _) => Ok(f),
            _ => Err(TermError::NotApplication(self.to_string())),
        }
    }

    /// Immediate subterms.
    pub fn children(&self) -> Vec<Term> {
        match &self.0.kind {
            TermKind::App(_, args) => args.clone(),
            TermKind::Lin(lc) => lc.terms.iter().map(|(t, _)| t.clone()).collect(),
            _ => Vec::new(),
        }
    }

    /// All subterms, `self` first, in outermost-first (pre-order) order
    /// without duplicates.
    pub fn subterms(&self) -> Vec<Term> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            if !seen.insert(t.id()) {
                continue;
            }
            let children = t.children();
            out.push(t);
            stack.extend(children.into_iter().rev());
        }
        out
    }

    pub fn free_vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self
            .subterms()
            .into_iter()
            .filter_map(|t| t.as_var().cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn is_ground(&self) -> bool {
        self.subterms().iter().all(|t| t.as_var().is_none())
    }

    /// Uninterpreted symbols occurring in the term.
    pub fn symbols(&self) -> Vec<FunSym> {
        let mut out: Vec<FunSym> = self
            .subterms()
            .into_iter()
            .filter_map(|t| t.as_app().map(|(f, _)| f.clone()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Term::depth).max().unwrap_or(0)
    }

    /// View the term as a linear combination over non-arithmetic atoms.
    pub fn linearize(&self) -> (BTreeMap<Term, Rational>, Rational) {
        let mut map = BTreeMap::new();
        let mut constant = Rational::zero();
        add_linear(&mut map, &mut constant, self, &Rational::one());
        (map, constant)
    }
}

fn add_linear(
    map: &mut BTreeMap<Term, Rational>,
    constant: &mut Rational,
    t: &Term,
    factor: &Rational,
) {
    match t.kind() {
        TermKind::Rat(q) => *constant += q * factor,
        TermKind::Lin(lc) => {
            *constant += &lc.constant * factor;
            for (s, k) in &lc.terms {
                add_linear(map, constant, s, &(k * factor));
            }
        }
        _ => {
            let entry = map.entry(t.clone()).or_insert_with(Rational::zero);
            *entry += factor;
            if entry.is_zero() {
                map.remove(t);
            }
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state)
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.id.cmp(&other.0.id)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("sort mismatch in {context}: expected {expected}, found {found}")]
    SortError {
        context: String,
        expected: Sort,
        found: Sort,
    },
    #[error("{symbol} expects {expected} arguments, got {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("{0} is not a function application")]
    NotApplication(String),
}

#[derive(PartialEq, Eq, Hash)]
enum Key {
    Var(Var),
    App(Arc<str>, Vec<u32>),
    Rat(Rational),
    Bool(bool),
    Lin(Vec<(u32, Rational)>, Rational),
}

#[derive(Default)]
struct StoreInner {
    table: HashMap<Key, Term>,
    next: u32,
}

/// Append-only interning table for terms.
#[derive(Default)]
pub struct TermStore {
    inner: Mutex<StoreInner>,
}

impl TermStore {
    pub fn new() -> TermStore {
        TermStore::default()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn intern(&self, key: Key, sort: Sort, kind: impl FnOnce() -> TermKind) -> Term {
        let mut inner = self.inner.lock().unwrap();
        if let Some(t) = inner.table.get(&key) {
            return t.clone();
        }
        let id = inner.next;
        inner.next += 1;
        let t = Term(Arc::new(TermNode {
            id,
            sort,
            kind: kind(),
        }));
        inner.table.insert(key, t.clone());
        t
    }

    pub fn var(&self, v: &Var) -> Term {
        self.intern(Key::Var(v.clone()), v.sort.clone(), || {
            TermKind::Var(v.clone())
        })
    }

    pub fn app(&self, f: &FunSym, args: Vec<Term>) -> Result<Term, TermError> {
        if args.len() != f.arity() {
            return Err(TermError::Arity {
                symbol: f.name().to_string(),
                expected: f.arity(),
                found: args.len(),
            });
        }
        for (i, (a, s)) in args.iter().zip(f.arg_sorts()).enumerate() {
            if a.sort() != s {
                return Err(TermError::SortError {
                    context: format!("argument {} of {}", i + 1, f.name()),
                    expected: s.clone(),
                    found: a.sort().clone(),
                });
            }
        }
        let key = Key::App(f.0.name.clone(), args.iter().map(Term::id).collect());
        Ok(self.intern(key, f.result_sort().clone(), || {
            TermKind::App(f.clone(), args)
        }))
    }

    pub fn constant(&self, f: &FunSym) -> Result<Term, TermError> {
        self.app(f, Vec::new())
    }

    pub fn rat(&self, q: Rational) -> Term {
        self.intern(Key::Rat(q.clone()), Sort::Rat, || TermKind::Rat(q))
    }

    pub fn int(&self, n: i64) -> Term {
        self.rat(rat(n))
    }

    pub fn bool(&self, b: bool) -> Term {
        self.intern(Key::Bool(b), Sort::Bool, || TermKind::Bool(b))
    }

    /// Canonical linear combination `Σ kᵢ·tᵢ + c`. Nested combinations and
    /// numerals are folded in; a lone `1·t` collapses to `t` and an empty
    /// combination to a numeral.
    pub fn lin(
        &self,
        parts: impl IntoIterator<Item = (Term, Rational)>,
        constant: Rational,
    ) -> Result<Term, TermError> {
        let mut map = BTreeMap::new();
        let mut c = constant;
        for (t, k) in parts {
            if t.sort() != &Sort::Rat {
                return Err(TermError::SortError {
                    context: "linear combination".into(),
                    expected: Sort::Rat,
                    found: t.sort().clone(),
                });
            }
            add_linear(&mut map, &mut c, &t, &k);
        }
        Ok(self.lin_from_map(map, c))
    }

    pub(crate) fn lin_from_map(&self, map: BTreeMap<Term, Rational>, c: Rational) -> Term {
        if map.is_empty() {
            return self.rat(c);
        }
        if map.len() == 1 && c.is_zero() {
            let (t, k) = map.iter().next().unwrap();
            if k.is_one() {
                return t.clone();
            }
        }
        let terms: Vec<(Term, Rational)> = map.into_iter().collect();
        let key = Key::Lin(
            terms.iter().map(|(t, k)| (t.id(), k.clone())).collect(),
            c.clone(),
        );
        self.intern(key, Sort::Rat, || {
            TermKind::Lin(LinComb { terms, constant: c })
        })
    }

    pub fn sum(&self, a: &Term, b: &Term) -> Result<Term, TermError> {
        self.lin([(a.clone(), rat(1)), (b.clone(), rat(1))], Rational::zero())
    }

    pub fn diff(&self, a: &Term, b: &Term) -> Result<Term, TermError> {
        self.lin([(a.clone(), rat(1)), (b.clone(), rat(-1))], Rational::zero())
    }

    pub fn scale(&self, k: Rational, t: &Term) -> Result<Term, TermError> {
        self.lin([(t.clone(), k)], Rational::zero())
    }

    /// Rebuild `t` bottom-up, replacing each subterm for which `f` returns
    /// `Some`. Replacement terms are not visited again.
    pub fn rewrite(&self, t: &Term, f: &mut impl FnMut(&Term) -> Option<Term>) -> Term {
        let mut memo = HashMap::new();
        self.rewrite_memo(t, f, &mut memo)
    }

    fn rewrite_memo(
        &self,
        t: &Term,
        f: &mut impl FnMut(&Term) -> Option<Term>,
        memo: &mut HashMap<u32, Term>,
    ) -> Term {
        if let Some(r) = memo.get(&t.id()) {
            return r.clone();
        }
        let out = if let Some(r) = f(t) {
            r
        } else {
            match t.kind() {
                TermKind::App(g, args) => {
                    let new_args: Vec<Term> = args
                        .iter()
                        .map(|a| self.rewrite_memo(a, f, memo))
                        .collect();
                    if new_args == *args {
                        t.clone()
                    } else {
                        self.app(g, new_args)
                            .expect("sort-preserving rewrite keeps applications well-sorted")
                    }
                }
                TermKind::Lin(lc) => {
                    let parts: Vec<(Term, Rational)> = lc
                        .terms
                        .iter()
                        .map(|(s, k)| (self.rewrite_memo(s, f, memo), k.clone()))
                        .collect();
                    self.lin(parts, lc.constant.clone())
                        .expect("sort-preserving rewrite keeps sums well-sorted")
                }
                _ => t.clone(),
            }
        };
        memo.insert(t.id(), out.clone());
        out
    }

    /// Substitute variables. Replacement sorts must match.
    pub fn subst(&self, t: &Term, map: &HashMap<Var, Term>) -> Result<Term, TermError> {
        for (v, r) in map {
            if &v.sort != r.sort() {
                return Err(TermError::SortError {
                    context: format!("substitution for {}", v.name),
                    expected: v.sort.clone(),
                    found: r.sort().clone(),
                });
            }
        }
        if map.is_empty() {
            return Ok(t.clone());
        }
        Ok(self.rewrite(t, &mut |s| s.as_var().and_then(|v| map.get(v).cloned())))
    }
}
