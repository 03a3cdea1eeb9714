//! Models for satisfiable quantified arithmetic: each uninterpreted
//! function is read as a linear template `f(x̄) = Σ sᵢ·xᵢ + c_f` with
//! slopes in {0, 1}, after which quantifiers are eliminated exactly and the
//! remaining ground formula is solved for the template constants.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::ground::{evaluate, Search};
use super::quant::fresh_id;
use crate::formula::{Formula, FormulaError};
use crate::simplify::simplify;
use crate::terms::{FunSym, Rational, Sort, Term, TermError, TermKind, TermStore};

/// Slope choices tried before giving up.
const MAX_TEMPLATES: usize = 32;

struct Template {
    slopes: Vec<bool>,
    constant: Term,
}

fn apply(store: &TermStore, t: &Term, templates: &BTreeMap<FunSym, Template>) -> Result<Term, TermError> {
    match t.kind() {
        TermKind::App(g, args) => {
            let args = args
                .iter()
                .map(|a| apply(store, a, templates))
                .collect::<Result<Vec<_>, _>>()?;
            let Some(tpl) = templates.get(g) else {
                return store.app(g, args);
            };
            if tpl.constant.sort() != &Sort::Rat {
                return Ok(tpl.constant.clone());
            }
            let mut parts = vec![(tpl.constant.clone(), Rational::one())];
            for (a, s) in args.iter().zip(&tpl.slopes) {
                if *s {
                    parts.push((a.clone(), Rational::one()));
                }
            }
            store.lin(parts, Rational::zero())
        }
        TermKind::Lin(lc) => {
            let parts = lc
                .terms
                .iter()
                .map(|(s, k)| Ok((apply(store, s, templates)?, k.clone())))
                .collect::<Result<Vec<_>, TermError>>()?;
            store.lin(parts, lc.constant.clone())
        }
        _ => Ok(t.clone()),
    }
}

fn instantiate(store: &TermStore, f: &Formula, templates: &BTreeMap<FunSym, Template>) -> Result<Formula, FormulaError> {
    f.map_literals(&mut |l| {
        let mut err = None;
        let out = l.map_terms(store, &mut |t| match apply(store, t, templates) {
            Ok(r) => r,
            Err(e) => {
                err = Some(e);
                t.clone()
            }
        })?;
        match err {
            Some(e) => Err(e.into()),
            None => Ok(Formula::lit(out)),
        }
    })
}

/// Slope vectors to try: all combinations when few, else all-zero and
/// all-one.
fn slope_choices(funs: &[FunSym]) -> Vec<Vec<Vec<bool>>> {
    let free: Vec<Vec<usize>> = funs
        .iter()
        .map(|f| {
            if f.result_sort() != &Sort::Rat {
                return Vec::new();
            }
            (0..f.arity()).filter(|&i| f.arg_sorts()[i] == Sort::Rat).collect()
        })
        .collect();
    let bits: usize = free.iter().map(Vec::len).sum();
    let masks: Vec<u64> = if bits < 6 && (1usize << bits) <= MAX_TEMPLATES {
        (0..1u64 << bits).collect()
    } else {
        vec![0, u64::MAX]
    };
    masks
        .into_iter()
        .map(|mask| {
            let mut bit = 0;
            funs.iter()
                .zip(&free)
                .map(|(f, idx)| {
                    let mut slopes = vec![false; f.arity()];
                    for &i in idx {
                        slopes[i] = mask >> bit & 1 == 1;
                        bit += 1;
                    }
                    slopes
                })
                .collect()
        })
        .collect()
}

/// A description of a model of `f`, if one with linear function tables
/// is found. `f` must not contain proxies.
pub fn find_model(store: &TermStore, f: &Formula, case_splits: usize) -> Option<String> {
    let funs: Vec<FunSym> = f.symbols().into_iter().filter(|s| s.arity() > 0).collect();
    if funs.is_empty() {
        return None;
    }
    for choice in slope_choices(&funs) {
        let mut templates = BTreeMap::new();
        for (fun, slopes) in funs.iter().zip(choice) {
            let c = FunSym::new(&format!("!m{}", fresh_id()), vec![], fun.result_sort().clone());
            let constant = store.constant(&c).ok()?;
            templates.insert(fun.clone(), Template { slopes, constant });
        }
        let Ok(g) = instantiate(store, f, &templates) else { continue };
        let g = simplify(store, &g);
        if g.has_quantifier() {
            continue;
        }
        let Ok(Some((_, model))) = Search::new(store, case_splits).satisfy(&g) else {
            continue;
        };
        if evaluate(&g, &model) != Some(true) {
            continue;
        }
        let mut parts: Vec<String> = templates
            .iter()
            .map(|(fun, tpl)| {
                let args: Vec<String> = (0..fun.arity()).map(|i| format!("x{i}")).collect();
                let mut body: Vec<String> =
                    (0..fun.arity()).filter(|&i| tpl.slopes[i]).map(|i| format!("x{i}")).collect();
                body.push(tpl.constant.to_string());
                format!("{}({}) = {}", fun.name(), args.join(", "), body.join(" + "))
            })
            .collect();
        parts.push(model.describe());
        return Some(parts.join("; "));
    }
    None
}
