use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use treeitp::colour::Flattener;
use treeitp::formula::{Formula, Literal};
use treeitp::oracle::{Budget, Oracle, Verdict};
use treeitp::pipeline::parse;
use treeitp::problem::PartSet;
use treeitp::proof::Proof;
use treeitp::simplify::simplify;
use treeitp::terms::{rat, FunSym, Sort, Term, TermKind, TermStore, Var};
use treeitp::testing::{brute_force, random_proof, small_grid};

/// Shape of a real-valued term over constants `a`, `b`, variables `x`,
/// `y`, unary `f` and binary `h`.
#[derive(Clone, Debug)]
enum T {
    Const(bool),
    Var(bool),
    Num(i8),
    F(Box<T>),
    H(Box<T>, Box<T>),
    Lin(Vec<(T, i8)>, i8),
}

fn term_shape() -> impl Strategy<Value = T> + Clone {
    let leaf = prop_oneof![
        any::<bool>().prop_map(T::Const),
        any::<bool>().prop_map(T::Var),
        (-2i8..=2).prop_map(T::Num),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| T::F(Box::new(t))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| T::H(Box::new(a), Box::new(b))),
            (prop::collection::vec((inner, -3i8..=3), 1..3), -2i8..=2).prop_map(|(ps, c)| T::Lin(ps, c)),
        ]
    })
}

struct Sig {
    a: Term,
    b: Term,
    x: Var,
    y: Var,
    f: FunSym,
    h: FunSym,
}

impl Sig {
    fn new(store: &TermStore) -> Sig {
        let konst = |n: &str| store.constant(&FunSym::new(n, vec![], Sort::Rat)).unwrap();
        Sig {
            a: konst("a"),
            b: konst("b"),
            x: Var::new("x", Sort::Rat),
            y: Var::new("y", Sort::Rat),
            f: FunSym::new("f", vec![Sort::Rat], Sort::Rat),
            h: FunSym::new("h", vec![Sort::Rat, Sort::Rat], Sort::Rat),
        }
    }

    fn build(&self, store: &TermStore, t: &T) -> Term {
        match t {
            T::Const(first) => if *first { self.a.clone() } else { self.b.clone() },
            T::Var(first) => store.var(if *first { &self.x } else { &self.y }),
            T::Num(n) => store.int(*n as i64),
            T::F(a) => store.app(&self.f, vec![self.build(store, a)]).unwrap(),
            T::H(a, b) => store
                .app(&self.h, vec![self.build(store, a), self.build(store, b)])
                .unwrap(),
            T::Lin(ps, c) => store
                .lin(
                    ps.iter().map(|(s, k)| (self.build(store, s), rat(*k as i64))).collect::<Vec<_>>(),
                    rat(*c as i64),
                )
                .unwrap(),
        }
    }
}

/// Structural equality, ignoring intern ids.
fn same_structure(s: &Term, t: &Term) -> bool {
    match (s.kind(), t.kind()) {
        (TermKind::Var(v), TermKind::Var(w)) => v == w,
        (TermKind::Rat(p), TermKind::Rat(q)) => p == q,
        (TermKind::Bool(p), TermKind::Bool(q)) => p == q,
        (TermKind::App(f, xs), TermKind::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| same_structure(x, y))
        }
        (TermKind::Lin(l), TermKind::Lin(m)) => {
            l.constant == m.constant
                && l.terms.len() == m.terms.len()
                && l.terms
                    .iter()
                    .zip(&m.terms)
                    .all(|((x, k), (y, j))| k == j && same_structure(x, y))
        }
        _ => false,
    }
}

#[derive(Clone, Copy, Debug)]
enum Rel {
    Eq,
    Neq,
    Le,
    Lt,
    Ge,
    Gt,
}

#[derive(Clone, Debug)]
enum F {
    Lit(Rel, T, T),
    And(Vec<F>),
    Or(Vec<F>),
    Not(Box<F>),
    Forall(bool, Box<F>),
    Exists(bool, Box<F>),
}

fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![
        Just(Rel::Eq),
        Just(Rel::Neq),
        Just(Rel::Le),
        Just(Rel::Lt),
        Just(Rel::Ge),
        Just(Rel::Gt)
    ]
}

fn formula_shape(terms: impl Strategy<Value = T> + Clone + 'static, quantifiers: bool) -> BoxedStrategy<F> {
    let lit = (rel(), terms.clone(), terms).prop_map(|(r, a, b)| F::Lit(r, a, b));
    lit.prop_recursive(3, 16, 3, move |inner| {
        let mut options = vec![
            prop::collection::vec(inner.clone(), 1..4).prop_map(F::And).boxed(),
            prop::collection::vec(inner.clone(), 1..4).prop_map(F::Or).boxed(),
            inner.clone().prop_map(|f| F::Not(Box::new(f))).boxed(),
        ];
        if quantifiers {
            options.push((any::<bool>(), inner.clone()).prop_map(|(v, f)| F::Forall(v, Box::new(f))).boxed());
            options.push((any::<bool>(), inner).prop_map(|(v, f)| F::Exists(v, Box::new(f))).boxed());
        }
        prop::strategy::Union::new(options)
    })
    .boxed()
}

fn build_formula(store: &TermStore, sig: &Sig, f: &F) -> Formula {
    match f {
        F::Lit(r, a, b) => {
            let (a, b) = (sig.build(store, a), sig.build(store, b));
            let l = match r {
                Rel::Eq => Literal::eq(store, &a, &b),
                Rel::Neq => Literal::neq(store, &a, &b),
                Rel::Le => Literal::le(&a, &b),
                Rel::Lt => Literal::lt(&a, &b),
                Rel::Ge => Literal::ge(&a, &b),
                Rel::Gt => Literal::gt(&a, &b),
            };
            Formula::lit(l.unwrap())
        }
        F::And(xs) => Formula::and(xs.iter().map(|x| build_formula(store, sig, x))),
        F::Or(xs) => Formula::or(xs.iter().map(|x| build_formula(store, sig, x))),
        F::Not(x) => build_formula(store, sig, x).not(),
        F::Forall(first, x) => {
            let v = if *first { sig.x.clone() } else { sig.y.clone() };
            Formula::forall(vec![v], build_formula(store, sig, x))
        }
        F::Exists(first, x) => {
            let v = if *first { sig.x.clone() } else { sig.y.clone() };
            Formula::exists(vec![v], build_formula(store, sig, x))
        }
    }
}

/// Free variables computed directly on the shape.
fn shape_free_vars(f: &F, sig: &Sig, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    fn term_vars(t: &T, sig: &Sig, bound: &[Var], out: &mut BTreeSet<Var>) {
        match t {
            T::Var(first) => {
                let v = if *first { &sig.x } else { &sig.y };
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            T::F(a) => term_vars(a, sig, bound, out),
            T::H(a, b) => {
                term_vars(a, sig, bound, out);
                term_vars(b, sig, bound, out);
            }
            T::Lin(ps, _) => ps.iter().for_each(|(s, _)| term_vars(s, sig, bound, out)),
            _ => {}
        }
    }
    match f {
        F::Lit(_, a, b) => {
            term_vars(a, sig, bound, out);
            term_vars(b, sig, bound, out);
        }
        F::And(xs) | F::Or(xs) => xs.iter().for_each(|x| shape_free_vars(x, sig, bound, out)),
        F::Not(x) => shape_free_vars(x, sig, bound, out),
        F::Forall(first, x) | F::Exists(first, x) => {
            bound.push(if *first { sig.x.clone() } else { sig.y.clone() });
            shape_free_vars(x, sig, bound, out);
            bound.pop();
        }
    }
}

/// Ground terms small enough for brute-force enumeration: `a`, `b`,
/// `f(a)`, `f(b)`, numerals and sums of those.
fn small_ground_term() -> impl Strategy<Value = T> + Clone {
    let atom = prop_oneof![
        any::<bool>().prop_map(T::Const),
        any::<bool>().prop_map(|c| T::F(Box::new(T::Const(c)))),
        (-1i8..=1).prop_map(T::Num),
    ];
    prop_oneof![
        3 => atom.clone(),
        1 => (prop::collection::vec((atom, -2i8..=2), 1..3), -1i8..=1).prop_map(|(ps, c)| T::Lin(ps, c)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn interning_agrees_with_structure(s in term_shape(), t in term_shape()) {
        let store = TermStore::new();
        let sig = Sig::new(&store);
        let (s1, t1) = (sig.build(&store, &s), sig.build(&store, &t));
        let s2 = sig.build(&store, &s);
        prop_assert_eq!(s1.id(), s2.id());
        prop_assert_eq!(same_structure(&s1, &t1), s1.id() == t1.id());
    }

    #[test]
    fn literal_aliases_normalize_alike(a in term_shape(), b in term_shape()) {
        let store = TermStore::new();
        let sig = Sig::new(&store);
        let (a, b) = (sig.build(&store, &a), sig.build(&store, &b));
        let le = Literal::le(&a, &b).unwrap();
        prop_assert_eq!(&le, &Literal::ge(&b, &a).unwrap());
        prop_assert_eq!(&le.negate(), &Literal::gt(&a, &b).unwrap());
        prop_assert_eq!(&Literal::lt(&a, &b).unwrap(), &Literal::gt(&b, &a).unwrap());
        prop_assert_eq!(&le.negate().negate(), &le);
        let eq = Literal::eq(&store, &a, &b).unwrap();
        prop_assert_eq!(&eq, &Literal::eq(&store, &b, &a).unwrap());
        prop_assert_eq!(&eq.negate(), &Literal::neq(&store, &a, &b).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn substitution_and_free_variables_agree(
        shape in formula_shape(term_shape(), true),
        replace_x in any::<bool>(),
        with_var in any::<bool>(),
    ) {
        let store = TermStore::new();
        let sig = Sig::new(&store);
        let f = build_formula(&store, &sig, &shape);
        let mut direct = BTreeSet::new();
        shape_free_vars(&shape, &sig, &mut Vec::new(), &mut direct);
        // constant folding may drop variables, never add them
        prop_assert!(f.free_vars().is_subset(&direct));

        let (target, other) = if replace_x { (&sig.x, &sig.y) } else { (&sig.y, &sig.x) };
        let replacement = if with_var {
            store.app(&sig.f, vec![store.var(other)]).unwrap()
        } else {
            store.app(&sig.f, vec![sig.a.clone()]).unwrap()
        };
        let map = HashMap::from([(target.clone(), replacement)]);
        let g = f.subst(&store, &map).unwrap();
        let mut expected = f.free_vars();
        if expected.remove(target) && with_var {
            expected.insert(other.clone());
        }
        let got = g.free_vars();
        prop_assert!(got.is_subset(&expected), "{} -> {}", f, g);
        prop_assert!(!got.contains(target));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_problems_have_consistent_trees(seed in any::<u64>()) {
        let rp = random_proof(seed);
        let store = TermStore::new();
        let doc = parse(&store, &rp.problem, Some(&rp.proof)).unwrap();
        let problem = &doc.problem;
        prop_assert_eq!(problem.subtree_leaves(problem.root()), problem.all_partitions());
        for n in problem.nodes() {
            if n.children.is_empty() {
                continue;
            }
            let mut union = PartSet::default();
            for &c in &n.children {
                let s = problem.subtree_leaves(c);
                prop_assert!(union.is_disjoint(s));
                union = union.union(s);
            }
            prop_assert_eq!(union, n.leaves);
        }
        for p in 0..problem.num_partitions() {
            for f in problem.label_formula(p).symbols() {
                let mut scan = PartSet::default();
                for q in 0..problem.num_partitions() {
                    if problem.label_formula(q).symbols().contains(&f) {
                        scan.insert(q);
                    }
                }
                prop_assert!(!scan.is_empty());
                prop_assert_eq!(problem.partitions_of(&f), scan);
            }
        }
    }

    #[test]
    fn support_of_union_is_union_of_supports(seed in any::<u64>(), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let rp = random_proof(seed);
        let store = TermStore::new();
        let doc = parse(&store, &rp.problem, Some(&rp.proof)).unwrap();
        let proof = Proof::new(&store, doc.proof.clone()).unwrap();
        let flat = Flattener::for_proof(&store, &proof);
        let c1 = &proof.node(i.index(proof.len())).clause;
        let c2 = &proof.node(j.index(proof.len())).clause;
        let mut expected = flat.supported(c1);
        expected.extend(flat.supported(c2));
        prop_assert_eq!(flat.supported(&c1.union(c2)), expected);
    }

    #[test]
    fn simplification_preserves_ground_meaning(shape in formula_shape(small_ground_term(), false)) {
        let store = TermStore::new();
        let sig = Sig::new(&store);
        let f = build_formula(&store, &sig, &shape);
        let g = simplify(&store, &f);
        let differ = Formula::or([
            Formula::and([f.clone(), g.not()]),
            Formula::and([f.not(), g.clone()]),
        ]);
        prop_assert_ne!(brute_force(&differ, 2, &small_grid()), Some(true), "{} vs {}", f, g);
    }
}

/// Shape of a formula over an uninterpreted sort: constants `c0..c2`,
/// unary `u`, variables `x`, `y`.
#[derive(Clone, Debug)]
enum U {
    Eq(u8, u8),
    And(Vec<U>),
    Or(Vec<U>),
    Not(Box<U>),
    Forall(bool, Box<U>),
    Exists(bool, Box<U>),
}

fn u_shape() -> impl Strategy<Value = U> {
    // atoms 0..3 are constants, 3..5 are u(constant), 5 and 6 are x and y,
    // 7 and 8 are u(x) and u(y)
    (0u8..9, 0u8..9).prop_map(|(a, b)| U::Eq(a, b)).prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(U::And),
            prop::collection::vec(inner.clone(), 1..3).prop_map(U::Or),
            inner.clone().prop_map(|f| U::Not(Box::new(f))),
            (any::<bool>(), inner.clone()).prop_map(|(v, f)| U::Forall(v, Box::new(f))),
            (any::<bool>(), inner).prop_map(|(v, f)| U::Exists(v, Box::new(f))),
        ]
    })
}

fn build_u(store: &TermStore, f: &U) -> Formula {
    let s = Sort::named("S");
    let x = Var::new("x", s.clone());
    let y = Var::new("y", s.clone());
    let u = FunSym::new("u", vec![s.clone()], s.clone());
    let atom = |k: u8| -> Term {
        let c = |i: u8| store.constant(&FunSym::new(&format!("c{i}"), vec![], s.clone())).unwrap();
        match k {
            0..=2 => c(k),
            3 | 4 => store.app(&u, vec![c(k - 3)]).unwrap(),
            5 => store.var(&x),
            6 => store.var(&y),
            7 => store.app(&u, vec![store.var(&x)]).unwrap(),
            _ => store.app(&u, vec![store.var(&y)]).unwrap(),
        }
    };
    match f {
        U::Eq(a, b) => Formula::lit(Literal::eq(store, &atom(*a), &atom(*b)).unwrap()),
        U::And(xs) => Formula::and(xs.iter().map(|g| build_u(store, g))),
        U::Or(xs) => Formula::or(xs.iter().map(|g| build_u(store, g))),
        U::Not(g) => build_u(store, g).not(),
        U::Forall(first, g) => Formula::forall(vec![if *first { x } else { y }], build_u(store, g)),
        U::Exists(first, g) => Formula::exists(vec![if *first { x } else { y }], build_u(store, g)),
    }
}

/// Close a formula by binding its free variables universally.
fn close(f: Formula) -> Formula {
    let free: Vec<Var> = f.free_vars().into_iter().collect();
    if free.is_empty() { f } else { Formula::forall(free, f) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplification_preserves_quantified_meaning(shape in u_shape()) {
        let store = TermStore::new();
        let f = close(build_u(&store, &shape));
        let g = simplify(&store, &f);
        let differ = Formula::or([
            Formula::and([f.clone(), g.not()]),
            Formula::and([f.not(), g.clone()]),
        ]);
        prop_assert_ne!(brute_force(&differ, 3, &[]), Some(true), "{} vs {}", f, g);
    }
}

/// Premise and conclusion; `entailed` conclusions are weakenings of a
/// premise conjunct and must be proved.
fn obligation() -> impl Strategy<Value = (Vec<F>, F, bool)> {
    let conj = prop::collection::vec(formula_shape(small_ground_term(), false), 1..4);
    (conj, formula_shape(small_ground_term(), false), any::<bool>(), any::<prop::sample::Index>())
        .prop_map(|(premise, other, entailed, pick)| {
            let conclusion = if entailed {
                F::Or(vec![premise[pick.index(premise.len())].clone(), other])
            } else {
                other
            };
            (premise, conclusion, entailed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn valid_verdicts_survive_brute_force((premise, conclusion, entailed) in obligation()) {
        let store = TermStore::new();
        let sig = Sig::new(&store);
        let p = Formula::and(premise.iter().map(|x| build_formula(&store, &sig, x)));
        let c = build_formula(&store, &sig, &conclusion);
        let verdict = Oracle::new(&store, Budget::default()).ground_implication(&p, &c);
        if entailed {
            prop_assert!(verdict.is_valid(), "{} => {}: {}", p, c, verdict);
        }
        let counter = brute_force(&Formula::and([p.clone(), c.not()]), 2, &small_grid());
        if verdict.is_valid() {
            prop_assert_ne!(counter, Some(true), "{} => {}", p, c);
        }
        if counter == Some(true) {
            prop_assert!(matches!(verdict, Verdict::Countermodel(_)), "{} => {}: {}", p, c, verdict);
        }
    }
}
