//! Desk-scale validity checking for implications between interpolants.
//!
//! Ground formulas are decided by case splitting over a combination of
//! congruence closure and Fourier–Motzkin elimination. Quantified ones are
//! simplified, Skolemized and instantiated over a growing pool of ground
//! terms; for arithmetic-free formulas a bounded search for finite models
//! complements instantiation, and for arithmetic ones a search for models
//! with linear function tables.

pub mod cc;
pub mod finite;
pub mod ground;
pub mod linear;
pub mod lra;
pub mod quant;

use std::fmt;

use crate::formula::Formula;
use crate::simplify::simplify;
use crate::terms::TermStore;

/// A resource limit was hit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exhausted(pub String);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Search nodes per satisfiability check.
    pub case_splits: usize,
    /// Instantiation rounds.
    pub rounds: usize,
    /// Instances per round.
    pub instances: usize,
    /// Pool terms per sort.
    pub pool: usize,
    /// Largest finite domain tried.
    pub domain_size: usize,
    /// Interpretations enumerated per domain size.
    pub models: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            case_splits: 20_000,
            rounds: 3,
            instances: 3_000,
            pool: 40,
            domain_size: 3,
            models: 200_000,
        }
    }
}

impl Budget {
    /// Override fields from `key=value` pairs separated by commas.
    pub fn with_overrides(mut self, spec: &str) -> Result<Budget, String> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{item}`"))?;
            let n: u64 = value
                .trim()
                .parse()
                .map_err(|_| format!("invalid number `{value}` for {key}"))?;
            match key.trim() {
                "case_splits" => self.case_splits = n as usize,
                "rounds" => self.rounds = n as usize,
                "instances" => self.instances = n as usize,
                "pool" => self.pool = n as usize,
                "domain_size" => self.domain_size = n as usize,
                "models" => self.models = n,
                other => return Err(format!("unknown budget `{other}`")),
            }
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// Refuted by instantiation and ground reasoning.
    Proved,
    /// No countermodel with domains up to this size.
    BoundedModels(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid(Evidence),
    Countermodel(String),
    Unknown(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid(Evidence::Proved) => f.write_str("valid"),
            Verdict::Valid(Evidence::BoundedModels(k)) => write!(f, "valid (domains up to {k})"),
            Verdict::Countermodel(m) => write!(f, "countermodel [{m}]"),
            Verdict::Unknown(r) => write!(f, "unknown ({r})"),
        }
    }
}

pub struct Oracle<'a> {
    pub store: &'a TermStore,
    pub budget: Budget,
}

impl<'a> Oracle<'a> {
    pub fn new(store: &'a TermStore, budget: Budget) -> Self {
        Oracle { store, budget }
    }

    /// Validity of `premise ⇒ conclusion`.
    pub fn implies(&self, premise: &Formula, conclusion: &Formula) -> Verdict {
        self.unsatisfiable(&Formula::and([premise.clone(), conclusion.not()]))
    }

    /// Validity of a quantifier-free implication.
    pub fn ground_implication(&self, premise: &Formula, conclusion: &Formula) -> Verdict {
        let goal = Formula::and([premise.clone(), conclusion.not()]);
        let goal = quant::open_proxies(&goal);
        if goal.has_quantifier() {
            return Verdict::Unknown("formula is not quantifier-free".into());
        }
        self.unsatisfiable(&goal)
    }

    /// Validity of `¬f`.
    pub fn unsatisfiable(&self, f: &Formula) -> Verdict {
        let f = simplify(self.store, &quant::open_proxies(f));
        if f.is_false() {
            return Verdict::Valid(Evidence::Proved);
        }
        let reason = match quant::refute(self.store, &f, &self.budget) {
            quant::Outcome::Refuted => return Verdict::Valid(Evidence::Proved),
            quant::Outcome::Model(cube, model) => {
                let cube: Vec<String> = cube.iter().map(|l| l.to_string()).collect();
                return Verdict::Countermodel(format!("{} | {}", cube.join(" "), model.describe()));
            }
            quant::Outcome::Open(reason) => reason,
        };
        match finite::find_model(&f, self.budget.domain_size, self.budget.models) {
            finite::Outcome::Model(m) => Verdict::Countermodel(m),
            finite::Outcome::NoModel(k) => Verdict::Valid(Evidence::BoundedModels(k)),
            finite::Outcome::Unsupported => match linear::find_model(self.store, &f, self.budget.case_splits) {
                Some(m) => Verdict::Countermodel(m),
                None => Verdict::Unknown(reason),
            },
        }
    }
}
