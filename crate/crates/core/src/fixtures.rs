//! Inputs shared by unit tests.

use crate::colour::{assign_colours, Colouring, Flattener, Projector, Strategy};
use crate::formula::{Formula, Literal};
use crate::interp::Interpolator;
use crate::pipeline::parse;
use crate::problem::PartSet;
use crate::proof::Proof;
use crate::syntax::{Document, Reader};
use crate::terms::{Term, TermStore, Var};

pub const EXAMPLE_PROBLEM: &str = include_str!("../../../data/example1.problem");
pub const EXAMPLE_PROOF: &str = include_str!("../../../data/example1.proof");
pub const FARKAS_PROBLEM: &str = include_str!("../../../data/farkas.problem");
pub const FARKAS_PROOF: &str = include_str!("../../../data/farkas.proof");
pub const BIZARRE_PROBLEM: &str = include_str!("../../../data/bizarre.problem");
pub const BIZARRE_PROOF: &str = include_str!("../../../data/bizarre.proof");

pub struct Setup<'s> {
    pub store: &'s TermStore,
    pub doc: Document,
    pub proof: Proof,
    pub colouring: Colouring,
    pub flat: Flattener,
}

/// Parse, build the proof and colour it with the declared colours.
pub fn setup<'s>(store: &'s TermStore, problem: &str, proof: &str) -> Setup<'s> {
    let doc = parse(store, problem, Some(proof)).unwrap();
    let p = Proof::new(store, doc.proof.clone()).unwrap();
    let colouring = assign_colours(&p, &doc.problem, &Strategy::Fixed(doc.colours.clone())).unwrap();
    let flat = Flattener::for_proof(store, &p);
    Setup {
        store,
        doc,
        proof: p,
        colouring,
        flat,
    }
}

impl<'s> Setup<'s> {
    pub fn formula(&self, text: &str) -> Formula {
        let mut r = Reader::resume(self.store, self.doc.clone());
        r.allow_reserved(self.flat.aux_vars().map(|(v, _)| v.clone()));
        r.formula(text).unwrap()
    }

    pub fn lit(&self, text: &str) -> Literal {
        match self.formula(text) {
            Formula::Lit(l) => l,
            f => panic!("{f} is not a literal"),
        }
    }

    pub fn term(&self, text: &str) -> Term {
        Reader::resume(self.store, self.doc.clone()).term(text).unwrap()
    }

    pub fn aux(&self, text: &str) -> Var {
        self.flat.aux_var(&self.term(text))
    }

    /// Partition set from partition names.
    pub fn set(&self, names: &[&str]) -> PartSet {
        let mut s = PartSet::default();
        for n in names {
            s.insert(self.doc.problem.partition_by_name(n).unwrap());
        }
        s
    }

    /// Formula text with `{t}` placeholders replaced by the auxiliary
    /// variable of term `t`.
    pub fn flat(&self, text: &str) -> Formula {
        let mut out = String::new();
        let mut rest = text;
        while let Some(i) = rest.find('{') {
            let j = rest[i..].find('}').unwrap() + i;
            out.push_str(&rest[..i]);
            out.push_str(&self.aux(&rest[i + 1..j]).name);
            rest = &rest[j + 1..];
        }
        out.push_str(rest);
        self.formula(&out)
    }

    pub fn node(&self, name: &str) -> usize {
        self.proof.find(name).unwrap()
    }

    pub fn projector(&self) -> Projector<'_> {
        Projector {
            store: self.store,
            problem: &self.doc.problem,
            colouring: &self.colouring,
            flat: &self.flat,
        }
    }

    pub fn interpolator(&self) -> Interpolator<'_> {
        Interpolator::new(self.store, &self.doc.problem, &self.proof, &self.colouring, &self.flat)
    }
}
