//! Exact linear arithmetic over the rationals: Gaussian elimination of
//! equalities, then a simplex over the remaining inequalities.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::terms::Rational;

use super::Exhausted;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Le,
    Lt,
    Eq,
}

/// `Σ coeffs·x + constant ⋈ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub coeffs: BTreeMap<usize, Rational>,
    pub constant: Rational,
    pub rel: Rel,
}

impl Constraint {
    pub fn new(mut coeffs: BTreeMap<usize, Rational>, constant: Rational, rel: Rel) -> Constraint {
        coeffs.retain(|_, k| !k.is_zero());
        Constraint {
            coeffs,
            constant,
            rel,
        }
    }

    /// Truth value when no variables are left.
    fn trivial(&self) -> Option<bool> {
        if !self.coeffs.is_empty() {
            return None;
        }
        Some(match self.rel {
            Rel::Le => !self.constant.is_positive(),
            Rel::Lt => self.constant.is_negative(),
            Rel::Eq => self.constant.is_zero(),
        })
    }

    fn substitute(&self, var: usize, def: &(BTreeMap<usize, Rational>, Rational)) -> Constraint {
        let Some(k) = self.coeffs.get(&var).cloned() else {
            return self.clone();
        };
        let mut coeffs = self.coeffs.clone();
        coeffs.remove(&var);
        for (v, c) in &def.0 {
            *coeffs.entry(*v).or_insert_with(Rational::zero) += &k * c;
        }
        Constraint::new(coeffs, &self.constant + &k * &def.1, self.rel)
    }
}

/// Pivot steps before giving up; Bland's rule terminates long before this
/// on the problems the oracle builds.
const MAX_PIVOTS: usize = 200_000;

/// A satisfying assignment when one exists.
pub fn solve(constraints: &[Constraint]) -> Result<Option<BTreeMap<usize, Rational>>, Exhausted> {
    // Gaussian elimination of equalities first.
    let mut defs: Vec<(usize, (BTreeMap<usize, Rational>, Rational))> = Vec::new();
    let mut rest: Vec<Constraint> = Vec::new();
    let mut eqs: Vec<Constraint> = Vec::new();
    for c in constraints {
        if c.rel == Rel::Eq {
            eqs.push(c.clone());
        } else {
            rest.push(c.clone());
        }
    }
    while let Some(e) = eqs.pop() {
        match e.trivial() {
            Some(true) => continue,
            Some(false) => return Ok(None),
            None => {}
        }
        let (&v, k) = e.coeffs.iter().next().unwrap();
        let k = k.clone();
        let mut lin: BTreeMap<usize, Rational> = BTreeMap::new();
        for (w, c) in &e.coeffs {
            if *w != v {
                lin.insert(*w, -(c / &k));
            }
        }
        let def = (lin, -(&e.constant / &k));
        for c in eqs.iter_mut().chain(rest.iter_mut()) {
            *c = c.substitute(v, &def);
        }
        for (_, d) in defs.iter_mut() {
            let tmp = Constraint::new(d.0.clone(), d.1.clone(), Rel::Eq).substitute(v, &def);
            *d = (tmp.coeffs, tmp.constant);
        }
        defs.push((v, def));
    }
    let Some(model) = eliminate(rest)? else {
        return Ok(None);
    };
    let mut model = model;
    // Definitions only mention variables left to the elimination phase.
    for (v, (lin, c)) in &defs {
        let mut value = c.clone();
        for (w, k) in lin {
            value += k * model.get(w).cloned().unwrap_or_else(Rational::zero);
        }
        model.insert(*v, value);
    }
    Ok(Some(model))
}

pub fn feasible(constraints: &[Constraint]) -> Result<bool, Exhausted> {
    Ok(solve(constraints)?.is_some())
}

/// `real + inf·δ` for an arbitrarily small positive δ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Delta {
    real: Rational,
    inf: Rational,
}

impl Delta {
    fn zero() -> Delta {
        Delta {
            real: Rational::zero(),
            inf: Rational::zero(),
        }
    }

    fn add_scaled(&mut self, other: &Delta, k: &Rational) {
        self.real += &other.real * k;
        self.inf += &other.inf * k;
    }

    fn diff(&self, other: &Delta) -> Delta {
        Delta {
            real: &self.real - &other.real,
            inf: &self.inf - &other.inf,
        }
    }
}

/// General simplex over upper-bounded slack variables, with Bland's rule.
fn eliminate(cs: Vec<Constraint>) -> Result<Option<BTreeMap<usize, Rational>>, Exhausted> {
    let mut ineqs = Vec::new();
    for c in cs {
        match c.trivial() {
            Some(true) => {}
            Some(false) => return Ok(None),
            None => ineqs.push(c),
        }
    }
    let ids: Vec<usize> = ineqs
        .iter()
        .flat_map(|c| c.coeffs.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let column: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = ids.len();
    let total = n + ineqs.len();

    // slack n+i = Σ coeffs·x, bounded above by -constant (minus δ when strict)
    let mut upper: Vec<Option<Delta>> = vec![None; total];
    let mut basic: Vec<usize> = Vec::new();
    let mut rows: Vec<BTreeMap<usize, Rational>> = Vec::new();
    for (i, c) in ineqs.iter().enumerate() {
        upper[n + i] = Some(Delta {
            real: -c.constant.clone(),
            inf: if c.rel == Rel::Lt { -Rational::one() } else { Rational::zero() },
        });
        basic.push(n + i);
        rows.push(c.coeffs.iter().map(|(v, k)| (column[v], k.clone())).collect());
    }
    let mut value = vec![Delta::zero(); total];
    let mut row_of: Vec<Option<usize>> = vec![None; total];
    for (r, &b) in basic.iter().enumerate() {
        row_of[b] = Some(r);
    }

    for _ in 0..MAX_PIVOTS {
        let violated = (0..total).find(|&v| {
            row_of[v].is_some() && upper[v].as_ref().is_some_and(|u| value[v] > *u)
        });
        let Some(leave) = violated else {
            return Ok(Some(concrete(&ids, &value, &upper)));
        };
        let r = row_of[leave].unwrap();
        // the basic variable must decrease: lower a positive-coefficient
        // variable or raise a negative-coefficient one below its bound
        let enter = rows[r].iter().find_map(|(&j, k)| {
            let ok = k.is_positive() || upper[j].as_ref().is_none_or(|u| value[j] < *u);
            ok.then_some(j)
        });
        let Some(enter) = enter else {
            return Ok(None);
        };
        let a = rows[r][&enter].clone();
        let target = upper[leave].clone().unwrap();
        let mut theta = target.diff(&value[leave]);
        theta.real /= &a;
        theta.inf /= &a;
        value[enter].add_scaled(&theta, &Rational::one());
        for (row, &b) in rows.iter().zip(&basic) {
            if let Some(k) = row.get(&enter) {
                value[b].add_scaled(&theta, k);
            }
        }
        // pivot: enter = (leave - Σ_{l≠enter} a_l·l) / a
        let mut def: BTreeMap<usize, Rational> = BTreeMap::new();
        for (&l, k) in &rows[r] {
            if l != enter {
                def.insert(l, -(k / &a));
            }
        }
        def.insert(leave, a.recip());
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let Some(k) = row.remove(&enter) else { continue };
            for (l, d) in &def {
                let e = row.entry(*l).or_insert_with(Rational::zero);
                *e += &k * d;
                if e.is_zero() {
                    row.remove(l);
                }
            }
        }
        rows[r] = def;
        basic[r] = enter;
        row_of[leave] = None;
        row_of[enter] = Some(r);
    }
    Err(Exhausted("simplex pivot limit".into()))
}

/// Rational values for the original variables, with δ small enough that
/// every bound still holds.
fn concrete(ids: &[usize], value: &[Delta], upper: &[Option<Delta>]) -> BTreeMap<usize, Rational> {
    let mut delta = Rational::one();
    for (v, u) in value.iter().zip(upper) {
        let Some(u) = u else { continue };
        if v.real < u.real && v.inf > u.inf {
            let limit = (&u.real - &v.real) / (&v.inf - &u.inf);
            if limit < delta {
                delta = limit;
            }
        }
    }
    ids.iter()
        .enumerate()
        .map(|(i, id)| (*id, &value[i].real + &value[i].inf * &delta))
        .collect()
}

/// Value of `Σ coeffs·x + constant` under a model (missing variables are 0).
pub fn eval(coeffs: &BTreeMap<usize, Rational>, constant: &Rational, model: &BTreeMap<usize, Rational>) -> Rational {
    let mut v = constant.clone();
    for (w, k) in coeffs {
        v += k * model.get(w).cloned().unwrap_or_else(Rational::zero);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::rat;

    fn c(pairs: &[(usize, i64)], k: i64, rel: Rel) -> Constraint {
        Constraint::new(pairs.iter().map(|(v, q)| (*v, rat(*q))).collect(), rat(k), rel)
    }

    fn holds(cs: &[Constraint], m: &BTreeMap<usize, Rational>) -> bool {
        cs.iter().all(|c| {
            let v = eval(&c.coeffs, &c.constant, m);
            match c.rel {
                Rel::Le => !v.is_positive(),
                Rel::Lt => v.is_negative(),
                Rel::Eq => v.is_zero(),
            }
        })
    }

    #[test]
    fn farkas_pair_is_infeasible() {
        // x ≤ 0, -x ≤ -1
        let cs = [c(&[(0, 1)], 0, Rel::Le), c(&[(0, -1)], 1, Rel::Le)];
        assert!(!feasible(&cs).unwrap());
    }

    #[test]
    fn strictness_matters() {
        // x ≤ y, y ≤ x, x < y
        let cs = [
            c(&[(0, 1), (1, -1)], 0, Rel::Le),
            c(&[(1, 1), (0, -1)], 0, Rel::Le),
        ];
        assert!(feasible(&cs).unwrap());
        let mut strict = cs.to_vec();
        strict.push(c(&[(0, 1), (1, -1)], 0, Rel::Lt));
        assert!(!feasible(&strict).unwrap());
    }

    #[test]
    fn models_satisfy_constraints() {
        let cs = [
            c(&[(0, 1), (1, 1)], -3, Rel::Eq),
            c(&[(0, 2), (2, -1)], 0, Rel::Lt),
            c(&[(2, 1)], -5, Rel::Le),
            c(&[(1, -1)], 0, Rel::Lt),
        ];
        let m = solve(&cs).unwrap().unwrap();
        assert!(holds(&cs, &m));
    }
}
