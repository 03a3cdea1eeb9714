//! Exhaustive search for small models of arithmetic-free formulas.

use std::collections::BTreeMap;

use crate::formula::{Atom, Formula};
use crate::terms::{Sort, Term, TermKind, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// No model with every uninterpreted sort of size `1..=n`.
    NoModel(usize),
    Model(String),
    /// The formula mentions arithmetic, or even size one is too large to
    /// enumerate.
    Unsupported,
}

#[derive(Clone, Debug)]
enum CTerm {
    Fun(usize, Vec<CTerm>),
    Bound(usize),
    Const(usize),
}

#[derive(Clone, Debug)]
enum CForm {
    Const(bool),
    Eq(CTerm, CTerm, bool),
    And(Vec<CForm>),
    Or(Vec<CForm>),
    Forall(usize, usize, Box<CForm>),
    Exists(usize, usize, Box<CForm>),
}

/// Sorts in use; index 0 is Bool with its fixed two-element domain.
struct Compiler {
    sorts: Vec<Sort>,
    /// Function symbols and free variables, each with argument and
    /// result sort indices.
    symbols: Vec<(String, Vec<usize>, usize)>,
    by_name: BTreeMap<String, usize>,
    scope: Vec<(Var, usize)>,
    slots: usize,
}

impl Compiler {
    fn sort(&mut self, s: &Sort) -> Option<usize> {
        if s == &Sort::Rat {
            return None;
        }
        if let Some(i) = self.sorts.iter().position(|t| t == s) {
            return Some(i);
        }
        self.sorts.push(s.clone());
        Some(self.sorts.len() - 1)
    }

    fn symbol(&mut self, name: String, args: &[Sort], result: &Sort) -> Option<usize> {
        if let Some(&i) = self.by_name.get(&name) {
            return Some(i);
        }
        let args = args.iter().map(|s| self.sort(s)).collect::<Option<Vec<_>>>()?;
        let result = self.sort(result)?;
        self.symbols.push((name.clone(), args, result));
        self.by_name.insert(name, self.symbols.len() - 1);
        Some(self.symbols.len() - 1)
    }

    fn term(&mut self, t: &Term) -> Option<CTerm> {
        match t.kind() {
            TermKind::Var(v) => {
                if let Some((_, slot)) = self.scope.iter().rev().find(|(w, _)| w == v) {
                    return Some(CTerm::Bound(*slot));
                }
                let i = self.symbol(v.name.to_string(), &[], &v.sort)?;
                Some(CTerm::Fun(i, Vec::new()))
            }
            TermKind::App(f, args) => {
                let i = self.symbol(f.name().to_string(), f.arg_sorts(), f.result_sort())?;
                let args = args.iter().map(|a| self.term(a)).collect::<Option<Vec<_>>>()?;
                Some(CTerm::Fun(i, args))
            }
            TermKind::Bool(b) => Some(CTerm::Const(*b as usize)),
            TermKind::Rat(_) | TermKind::Lin(_) => None,
        }
    }

    fn formula(&mut self, f: &Formula) -> Option<CForm> {
        Some(match f {
            Formula::True => CForm::Const(true),
            Formula::False => CForm::Const(false),
            Formula::Lit(l) => match &l.atom {
                Atom::Eq(a, b) => CForm::Eq(self.term(a)?, self.term(b)?, l.positive),
                _ => return None,
            },
            Formula::And(xs) => CForm::And(xs.iter().map(|x| self.formula(x)).collect::<Option<_>>()?),
            Formula::Or(xs) => CForm::Or(xs.iter().map(|x| self.formula(x)).collect::<Option<_>>()?),
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                let universal = matches!(f, Formula::Forall(..));
                let n = self.scope.len();
                let mut binders = Vec::new();
                for v in vs {
                    let s = self.sort(&v.sort)?;
                    let slot = self.slots;
                    self.slots += 1;
                    self.scope.push((v.clone(), slot));
                    binders.push((slot, s));
                }
                let mut body = self.formula(b)?;
                self.scope.truncate(n);
                for (slot, s) in binders.into_iter().rev() {
                    body = if universal {
                        CForm::Forall(slot, s, Box::new(body))
                    } else {
                        CForm::Exists(slot, s, Box::new(body))
                    };
                }
                body
            }
        })
    }
}

struct Interp<'a> {
    sizes: &'a [usize],
    /// Per symbol: offset of its table in `cells`.
    offsets: &'a [usize],
    symbols: &'a [(String, Vec<usize>, usize)],
    cells: &'a [usize],
    env: Vec<usize>,
}

impl Interp<'_> {
    fn term(&self, t: &CTerm) -> usize {
        match t {
            CTerm::Const(v) => *v,
            CTerm::Bound(slot) => self.env[*slot],
            CTerm::Fun(i, args) => {
                let mut idx = 0;
                for (a, &s) in args.iter().zip(&self.symbols[*i].1) {
                    idx = idx * self.sizes[s] + self.term(a);
                }
                self.cells[self.offsets[*i] + idx]
            }
        }
    }

    fn eval(&mut self, f: &CForm) -> bool {
        match f {
            CForm::Const(b) => *b,
            CForm::Eq(a, b, pos) => (self.term(a) == self.term(b)) == *pos,
            CForm::And(xs) => xs.iter().all(|x| self.eval(x)),
            CForm::Or(xs) => xs.iter().any(|x| self.eval(x)),
            CForm::Forall(slot, s, b) => (0..self.sizes[*s]).all(|v| {
                self.env[*slot] = v;
                self.eval(b)
            }),
            CForm::Exists(slot, s, b) => (0..self.sizes[*s]).any(|v| {
                self.env[*slot] = v;
                self.eval(b)
            }),
        }
    }
}

/// Look for a model of `f` with uninterpreted domains of size `1..=max_size`,
/// enumerating at most `max_models` interpretations per size.
pub fn find_model(f: &Formula, max_size: usize, max_models: u64) -> Outcome {
    let mut c = Compiler {
        sorts: vec![Sort::Bool],
        symbols: Vec::new(),
        by_name: BTreeMap::new(),
        scope: Vec::new(),
        slots: 0,
    };
    let Some(form) = c.formula(f) else {
        return Outcome::Unsupported;
    };
    let mut checked = 0;
    for n in 1..=max_size {
        let sizes: Vec<usize> = c.sorts.iter().map(|s| if s == &Sort::Bool { 2 } else { n }).collect();
        let mut offsets = Vec::new();
        let mut ranges = Vec::new();
        for (_, args, result) in &c.symbols {
            offsets.push(ranges.len());
            let cells: usize = args.iter().map(|&s| sizes[s]).product();
            ranges.extend(std::iter::repeat_n(sizes[*result], cells));
        }
        let total = ranges
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r as u64));
        if total.is_none_or(|t| t > max_models) {
            break;
        }
        let mut cells = vec![0usize; ranges.len()];
        loop {
            let mut it = Interp {
                sizes: &sizes,
                offsets: &offsets,
                symbols: &c.symbols,
                cells: &cells,
                env: vec![0; c.slots],
            };
            if it.eval(&form) {
                return Outcome::Model(describe(&c, &sizes, &offsets, &cells));
            }
            let mut k = 0;
            while k < cells.len() {
                cells[k] += 1;
                if cells[k] < ranges[k] {
                    break;
                }
                cells[k] = 0;
                k += 1;
            }
            if k == cells.len() {
                break;
            }
        }
        checked = n;
    }
    if checked == 0 {
        Outcome::Unsupported
    } else {
        Outcome::NoModel(checked)
    }
}

fn describe(c: &Compiler, sizes: &[usize], offsets: &[usize], cells: &[usize]) -> String {
    let value = |s: usize, v: usize| {
        if c.sorts[s] == Sort::Bool {
            (v == 1).to_string()
        } else {
            format!("{}!{v}", c.sorts[s])
        }
    };
    let mut parts = Vec::new();
    for (s, sort) in c.sorts.iter().enumerate().skip(1) {
        parts.push(format!("|{sort}| = {}", sizes[s]));
    }
    for (i, (name, args, result)) in c.symbols.iter().enumerate() {
        let count: usize = args.iter().map(|&s| sizes[s]).product();
        if args.is_empty() {
            parts.push(format!("{name} = {}", value(*result, cells[offsets[i]])));
            continue;
        }
        let mut entries = Vec::new();
        for idx in 0..count {
            let mut rest = idx;
            let mut tuple = Vec::new();
            for &s in args.iter().rev() {
                tuple.push(value(s, rest % sizes[s]));
                rest /= sizes[s];
            }
            tuple.reverse();
            entries.push(format!("({}) -> {}", tuple.join(" "), value(*result, cells[offsets[i] + idx])));
        }
        parts.push(format!("{name} = [{}]", entries.join(", ")));
    }
    parts.join("; ")
}
