//! Literal colouring, flattening and projections.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Atom, Clause, Formula, Literal};
use crate::problem::{PartId, PartSet, TreeProblem};
use crate::proof::{NodeKind, Proof};
use crate::terms::{FunSym, Term, TermKind, TermStore, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColourError {
    #[error("quantified clause {literal} must be coloured with its input partition {expected}, not {found}")]
    InvalidColouring {
        literal: String,
        expected: String,
        found: String,
    },
    #[error("literal {0} has no colour")]
    MissingColour(String),
    #[error("quantified clause {0} does not occur in any input clause")]
    OrphanProxy(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Pick the partition where most head symbols of the literal's
    /// top-level terms occur.
    Heuristic,
    /// User-chosen colours; literals missing from the map are coloured by
    /// the heuristic.
    Fixed(BTreeMap<Atom, PartId>),
    Random(u64),
}

/// Colour of every atom in a proof. Both polarities of an atom share the
/// colour.
#[derive(Clone, Debug, Default)]
pub struct Colouring {
    map: HashMap<Atom, PartId>,
}

impl Colouring {
    pub fn colour(&self, l: &Literal) -> Result<PartId, ColourError> {
        self.map
            .get(&l.atom)
            .copied()
            .ok_or_else(|| ColourError::MissingColour(l.to_string()))
    }

    pub fn set(&mut self, atom: Atom, p: PartId) {
        self.map.insert(atom, p);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Sorted view for reporting.
    pub fn entries(&self) -> BTreeMap<&Atom, PartId> {
        self.map.iter().map(|(a, p)| (a, *p)).collect()
    }
}

/// Heuristic colour: argmax over partitions of the number of head symbols
/// of top-level terms occurring there; ties go to the lowest partition.
pub fn heuristic_colour(l: &Literal, problem: &TreeProblem) -> PartId {
    let heads: Vec<FunSym> = l
        .top_terms()
        .iter()
        .filter_map(|t| t.as_app().map(|(f, _)| f.clone()))
        .collect();
    let mut best = (0usize, 0usize);
    for p in 0..problem.num_partitions() {
        let count = heads
            .iter()
            .filter(|f| problem.partitions_of(f).contains(p))
            .count();
        if count > best.1 {
            best = (p, count);
        }
    }
    best.0
}

/// Colour every literal of the proof.
pub fn assign_colours(
    proof: &Proof,
    problem: &TreeProblem,
    strategy: &Strategy,
) -> Result<Colouring, ColourError> {
    let mut proxy_colour: HashMap<Atom, PartId> = HashMap::new();
    for n in proof.nodes() {
        if let NodeKind::Input { partition } = n.kind {
            for l in n.clause.literals() {
                if l.is_proxy() {
                    proxy_colour.entry(l.atom.clone()).or_insert(partition);
                }
            }
        }
    }
    let atoms: BTreeSet<Atom> = proof.literals().into_iter().map(|l| l.atom).collect();
    let mut rng = match strategy {
        Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut colouring = Colouring::default();
    for atom in atoms {
        let lit = Literal::new(atom.clone(), true);
        let p = if lit.is_proxy() {
            let expected = *proxy_colour
                .get(&atom)
                .ok_or_else(|| ColourError::OrphanProxy(lit.to_string()))?;
            if let Strategy::Fixed(m) = strategy {
                if let Some(&q) = m.get(&atom) {
                    if q != expected {
                        return Err(ColourError::InvalidColouring {
                            literal: lit.to_string(),
                            expected: problem.partition_name(expected).to_string(),
                            found: problem.partition_name(q).to_string(),
                        });
                    }
                }
            }
            expected
        } else {
            match strategy {
                Strategy::Heuristic => heuristic_colour(&lit, problem),
                Strategy::Fixed(m) => m
                    .get(&atom)
                    .copied()
                    .unwrap_or_else(|| heuristic_colour(&lit, problem)),
                Strategy::Random(_) => rng
                    .as_mut()
                    .unwrap()
                    .random_range(0..problem.num_partitions()),
            }
        };
        colouring.set(atom, p);
    }
    Ok(colouring)
}

/// Auxiliary variables `v_t` for application terms and their defining
/// equalities.
#[derive(Debug, Default)]
pub struct Flattener {
    aux: HashMap<Var, Term>,
}

/// Name of the auxiliary variable of a term.
pub fn aux_name(t: &Term) -> String {
    format!("!v{}", t.id())
}

/// One flattening equality `v_{f(t̄)} = f(flat(t̄))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatEq {
    pub symbol: FunSym,
    pub term: Term,
    pub literal: Literal,
}

impl Flattener {
    /// Register every application subterm of the proof's literals.
    pub fn for_proof(store: &TermStore, proof: &Proof) -> Flattener {
        let mut f = Flattener::default();
        for l in proof.literals() {
            f.register_literal(store, &l);
        }
        f
    }

    pub fn register_literal(&mut self, store: &TermStore, l: &Literal) {
        for t in l.subterms() {
            if t.is_app() {
                let v = self.aux_var(&t);
                store.var(&v);
                self.aux.insert(v, t);
            }
        }
    }

    pub fn aux_var(&self, t: &Term) -> Var {
        Var::new(&aux_name(t), t.sort().clone())
    }

    /// The term an auxiliary variable stands for.
    pub fn origin(&self, v: &Var) -> Option<&Term> {
        self.aux.get(v)
    }

    pub fn is_aux(&self, v: &Var) -> bool {
        self.aux.contains_key(v)
    }

    pub fn aux_vars(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.aux.iter()
    }

    /// Replace application terms by their variables; interpreted structure
    /// (sums, numerals) is kept.
    pub fn flat_term(&self, store: &TermStore, t: &Term) -> Term {
        match t.kind() {
            TermKind::App(..) => store.var(&self.aux_var(t)),
            TermKind::Lin(lc) => store
                .lin(
                    lc.terms
                        .iter()
                        .map(|(s, k)| (self.flat_term(store, s), k.clone())),
                    lc.constant.clone(),
                )
                .expect("flattening keeps sorts"),
            _ => t.clone(),
        }
    }

    /// `flatten(ℓ)`; proxies are returned unchanged.
    pub fn flatten(&self, store: &TermStore, l: &Literal) -> Literal {
        l.map_terms(store, &mut |t| self.flat_term(store, t))
            .expect("flattening keeps sorts")
    }

    /// Right-hand side `f(flat(t̄))` of the defining equality of `t`.
    pub fn definition(&self, store: &TermStore, t: &Term) -> Term {
        let (f, args) = t.as_app().expect("definitions exist for applications only");
        let args = args.iter().map(|a| self.flat_term(store, a)).collect();
        store.app(f, args).expect("flattening keeps sorts")
    }

    /// `FlatEQ(ℓ)` in outermost-first order.
    pub fn flat_eqs(&self, store: &TermStore, l: &Literal) -> Vec<FlatEq> {
        l.subterms()
            .into_iter()
            .filter(|t| t.is_app())
            .map(|t| {
                let v = store.var(&self.aux_var(&t));
                let def = self.definition(store, &t);
                FlatEq {
                    symbol: t.hd().unwrap().clone(),
                    literal: Literal::eq(store, &v, &def).expect("flattening keeps sorts"),
                    term: t,
                }
            })
            .collect()
    }

    /// `Supported(C)`: auxiliary variables of application subterms of
    /// non-proxy literals.
    pub fn supported(&self, c: &Clause) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for l in c.literals() {
            if l.is_proxy() {
                continue;
            }
            for t in l.subterms() {
                if t.is_app() {
                    out.insert(self.aux_var(&t));
                }
            }
        }
        out
    }
}

/// Projections of literals onto sets of partitions.
pub struct Projector<'a> {
    pub store: &'a TermStore,
    pub problem: &'a TreeProblem,
    pub colouring: &'a Colouring,
    pub flat: &'a Flattener,
}

impl Projector<'_> {
    /// `⌊ℓ⌋_A`.
    pub fn kernel(&self, l: &Literal, a: PartSet) -> Result<Formula, ColourError> {
        if a.contains(self.colouring.colour(l)?) {
            Ok(Formula::lit(self.flat.flatten(self.store, l)))
        } else {
            Ok(Formula::True)
        }
    }

    /// `⌊ℓ₁ ∧ … ∧ ℓₙ⌋_A`.
    pub fn kernel_conj(&self, lits: &[Literal], a: PartSet) -> Result<Formula, ColourError> {
        let parts = lits
            .iter()
            .map(|l| self.kernel(l, a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Formula::and(parts))
    }

    /// `⌊FlatEQ(ℓ)⌋_A`.
    pub fn flat_eqs(&self, l: &Literal, a: PartSet) -> Formula {
        Formula::and(
            self.flat
                .flat_eqs(self.store, l)
                .into_iter()
                .filter(|e| !self.problem.partitions_of(&e.symbol).is_disjoint(a))
                .map(|e| Formula::lit(e.literal)),
        )
    }

    /// `ℓ|_A = ⌊ℓ⌋_A ∧ ⌊FlatEQ(ℓ)⌋_A`.
    pub fn proj(&self, l: &Literal, a: PartSet) -> Result<Formula, ColourError> {
        Ok(Formula::and([self.kernel(l, a)?, self.flat_eqs(l, a)]))
    }

    pub fn proj_conj(&self, lits: &[Literal], a: PartSet) -> Result<Formula, ColourError> {
        let parts = lits
            .iter()
            .map(|l| self.proj(l, a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Formula::and(parts))
    }
}

/// The negated clause as a list of literals.
pub fn negated(c: &Clause) -> Vec<Literal> {
    c.literals().iter().map(Literal::negate).collect()
}
