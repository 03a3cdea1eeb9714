use std::collections::{BTreeMap, HashMap};

use crate::formula::{Atom, Clause, Formula, Literal};
use crate::problem::{GeneralNode, NodeIdx, PartId, TreeProblem};
use crate::proof::{LemmaKind, RawKind, RawNode};
use crate::terms::{ratio, FunSym, Rational, Sort, Term, TermStore, Var};

use super::sexp::{self, Pos, Sexp};
use super::SyntaxError;

/// Declared sorts and function symbols.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    pub sorts: BTreeMap<String, Sort>,
    pub funs: BTreeMap<String, FunSym>,
}

/// Everything read from problem and proof files.
#[derive(Clone, Debug)]
pub struct Document {
    pub signature: Signature,
    pub problem: TreeProblem,
    /// Original tree node name to internal node.
    pub mapping: BTreeMap<String, NodeIdx>,
    pub colours: BTreeMap<Atom, PartId>,
    pub proof: Vec<RawNode>,
}

/// Incremental reader: declarations, the tree, colours and proof steps may
/// be spread over several texts, but must appear in dependency order.
pub struct Reader<'s> {
    store: &'s TermStore,
    sig: Signature,
    tree: Option<(TreeProblem, BTreeMap<String, NodeIdx>)>,
    colours: BTreeMap<Atom, PartId>,
    proof: Vec<RawNode>,
    free: HashMap<String, Var>,
    allow_reserved: bool,
}

type Res<T> = Result<T, SyntaxError>;

fn err<T>(pos: Pos, msg: impl Into<String>) -> Res<T> {
    Err(SyntaxError::new(pos, msg))
}

fn parse_numeral(s: &str) -> Option<Rational> {
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return None;
    }
    match s.split_once('.') {
        None => s.parse::<num_bigint::BigInt>().ok().map(Rational::from_integer),
        Some((int, frac)) => {
            if int.is_empty() || frac.is_empty() || frac.contains('.') {
                return None;
            }
            let num: num_bigint::BigInt = format!("{int}{frac}").parse().ok()?;
            let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
            Some(Rational::new(num, den))
        }
    }
}

impl<'s> Reader<'s> {
    pub fn new(store: &'s TermStore) -> Reader<'s> {
        Reader {
            store,
            sig: Signature::default(),
            tree: None,
            colours: BTreeMap::new(),
            proof: Vec::new(),
            free: HashMap::new(),
            allow_reserved: false,
        }
    }

    /// Continue reading on top of an existing document (e.g. a proof file
    /// after its problem file).
    pub fn resume(store: &'s TermStore, doc: Document) -> Reader<'s> {
        Reader {
            store,
            sig: doc.signature,
            tree: Some((doc.problem, doc.mapping)),
            colours: doc.colours,
            proof: doc.proof,
            free: HashMap::new(),
            allow_reserved: false,
        }
    }

    /// Make auxiliary variables and reserved names available, for reading
    /// back formulas produced by the interpolator.
    pub fn allow_reserved(&mut self, aux: impl IntoIterator<Item = Var>) {
        self.allow_reserved = true;
        for v in aux {
            self.free.insert(v.name.to_string(), v);
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn read(&mut self, text: &str) -> Res<()> {
        for cmd in sexp::parse(text)? {
            self.command(&cmd)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Res<Document> {
        let Some((problem, mapping)) = self.tree else {
            return err(Pos::default(), "no (tree ...) declaration");
        };
        Ok(Document {
            signature: self.sig,
            problem,
            mapping,
            colours: self.colours,
            proof: self.proof,
        })
    }

    /// Parse a single formula.
    pub fn formula(&self, text: &str) -> Res<Formula> {
        let xs = sexp::parse(text)?;
        let [x] = xs.as_slice() else {
            return err(Pos::default(), "expected exactly one formula");
        };
        self.parse_formula(x, &mut Vec::new())
    }

    /// Parse a single ground term.
    pub fn term(&self, text: &str) -> Res<Term> {
        let xs = sexp::parse(text)?;
        let [x] = xs.as_slice() else {
            return err(Pos::default(), "expected exactly one term");
        };
        self.parse_term(x, &[])
    }

    fn check_name(&self, name: &str, pos: Pos) -> Res<()> {
        if name.starts_with('!') && !self.allow_reserved {
            return err(pos, format!("names starting with '!' are reserved: {name}"));
        }
        if parse_numeral(name).is_some() || name.starts_with(':') {
            return err(pos, format!("invalid name {name}"));
        }
        Ok(())
    }

    fn sort(&self, x: &Sexp) -> Res<Sort> {
        let Some(name) = x.as_atom() else {
            return err(x.pos(), "expected a sort name");
        };
        match name {
            "Real" | "Rat" => Ok(Sort::Rat),
            "Bool" => Ok(Sort::Bool),
            _ => self
                .sig
                .sorts
                .get(name)
                .cloned()
                .ok_or_else(|| SyntaxError::new(x.pos(), format!("unknown sort {name}"))),
        }
    }

    fn command(&mut self, cmd: &Sexp) -> Res<()> {
        let pos = cmd.pos();
        let Some(items) = cmd.as_list() else {
            return err(pos, format!("expected a command, found {cmd}"));
        };
        match cmd.head() {
            Some("declare-sort") => {
                let [_, name, rest @ ..] = items else {
                    return err(pos, "declare-sort needs a name");
                };
                if !(rest.is_empty() || rest.len() == 1 && rest[0].as_atom() == Some("0")) {
                    return err(pos, "parametric sorts are not supported");
                }
                let name = name.as_atom().ok_or_else(|| SyntaxError::new(name.pos(), "expected a sort name"))?;
                self.check_name(name, pos)?;
                if self.sig.sorts.contains_key(name) || matches!(name, "Real" | "Rat" | "Bool") {
                    return err(pos, format!("sort {name} declared twice"));
                }
                self.sig.sorts.insert(name.to_string(), Sort::named(name));
                Ok(())
            }
            Some("declare-fun") | Some("declare-const") => {
                let (name, args, result) = match items {
                    [_, name, Sexp::List(args, _), result] => (name, args.as_slice(), result),
                    [_, name, result] if cmd.head() == Some("declare-const") => (name, &[][..], result),
                    _ => return err(pos, "expected (declare-fun name (sorts...) sort)"),
                };
                let name = name.as_atom().ok_or_else(|| SyntaxError::new(name.pos(), "expected a symbol"))?;
                self.check_name(name, pos)?;
                if self.sig.funs.contains_key(name) {
                    return err(pos, format!("symbol {name} declared twice"));
                }
                let args = args.iter().map(|a| self.sort(a)).collect::<Res<Vec<_>>>()?;
                let result = self.sort(result)?;
                self.sig.funs.insert(name.to_string(), FunSym::new(name, args, result));
                Ok(())
            }
            Some("tree") => {
                if self.tree.is_some() {
                    return err(pos, "tree declared twice");
                }
                let mut nodes = Vec::new();
                for n in &items[1..] {
                    nodes.push(self.tree_node(n)?);
                }
                let built = TreeProblem::binarize(&nodes).map_err(|e| SyntaxError::new(pos, e.to_string()))?;
                self.tree = Some(built);
                Ok(())
            }
            Some("colour") | Some("color") => {
                let [_, lit, part] = items else {
                    return err(pos, "expected (colour literal partition)");
                };
                let lit = self.parse_literal(lit, &mut Vec::new())?;
                let p = self.partition(part)?;
                self.colours.insert(lit.atom, p);
                Ok(())
            }
            Some("input") | Some("inst") | Some("lemma") | Some("res") => {
                let node = self.proof_node(cmd)?;
                self.proof.push(node);
                Ok(())
            }
            _ => err(pos, format!("unknown command {}", items.first().map(|x| x.to_string()).unwrap_or_default())),
        }
    }

    fn partition(&self, x: &Sexp) -> Res<PartId> {
        let Some((problem, _)) = &self.tree else {
            return err(x.pos(), "partitions referenced before the tree is declared");
        };
        let name = x.as_atom().ok_or_else(|| SyntaxError::new(x.pos(), "expected a partition name"))?;
        problem
            .partition_by_name(name)
            .map_err(|e| SyntaxError::new(x.pos(), e.to_string()))
    }

    fn tree_node(&self, x: &Sexp) -> Res<GeneralNode> {
        let pos = x.pos();
        let items = x.as_list().unwrap_or(&[]);
        let name = |i: usize| -> Res<String> {
            items
                .get(i)
                .and_then(Sexp::as_atom)
                .map(str::to_string)
                .ok_or_else(|| SyntaxError::new(pos, "expected a node name"))
        };
        match x.head() {
            Some("leaf") => {
                let id = name(1)?;
                let mut label = Vec::new();
                for c in &items[2..] {
                    self.label_item(c, &mut label)?;
                }
                Ok(GeneralNode {
                    name: id,
                    children: Vec::new(),
                    label: Some(label),
                })
            }
            Some("node") => {
                let id = name(1)?;
                let mut children = Vec::new();
                let mut label = None;
                let mut i = 2;
                while i < items.len() {
                    if items[i].as_atom() == Some(":label") {
                        let mut l = Vec::new();
                        for c in &items[i + 1..] {
                            self.label_item(c, &mut l)?;
                        }
                        label = Some(l);
                        break;
                    }
                    children.push(name(i)?);
                    i += 1;
                }
                if children.is_empty() {
                    return err(pos, "inner node without children (use leaf)");
                }
                Ok(GeneralNode {
                    name: id,
                    children,
                    label,
                })
            }
            _ => err(pos, "expected (node ...) or (leaf ...)"),
        }
    }

    fn label_item(&self, x: &Sexp, out: &mut Vec<Clause>) -> Res<()> {
        if x.head() == Some("and") {
            for y in &x.as_list().unwrap()[1..] {
                self.label_item(y, out)?;
            }
            return Ok(());
        }
        out.push(self.parse_clause(x)?);
        Ok(())
    }

    /// `(or lit...)`, a single literal, or `false` for the empty clause.
    pub(crate) fn parse_clause(&self, x: &Sexp) -> Res<Clause> {
        if x.as_atom() == Some("false") {
            return Ok(Clause::empty());
        }
        if x.head() == Some("or") {
            let lits = x.as_list().unwrap()[1..]
                .iter()
                .map(|l| self.parse_literal(l, &mut Vec::new()))
                .collect::<Res<Vec<_>>>()?;
            return Ok(Clause::new(lits));
        }
        Ok(Clause::new([self.parse_literal(x, &mut Vec::new())?]))
    }

    fn parse_literal(&self, x: &Sexp, scope: &mut Vec<Var>) -> Res<Literal> {
        let pos = x.pos();
        match x.head() {
            Some("not") => {
                let [_, inner] = x.as_list().unwrap() else {
                    return err(pos, "not takes one argument");
                };
                Ok(self.parse_literal(inner, scope)?.negate())
            }
            Some("forall") => {
                let f = self.parse_formula(x, scope)?;
                let Formula::Forall(_, body) = &f else {
                    return err(pos, "quantified clause has no quantified variables");
                };
                for d in body.disjuncts() {
                    if !matches!(d, Formula::Lit(ref l) if !l.is_proxy()) {
                        return err(pos, "body of a quantified clause must be a disjunction of literals");
                    }
                }
                Literal::proxy(f).map_err(|e| SyntaxError::new(pos, e.to_string()))
            }
            _ => match self.parse_formula(x, scope)? {
                Formula::Lit(l) => Ok(l),
                Formula::True => Ok(Literal::truth()),
                Formula::False => Ok(Literal::falsity()),
                other => err(pos, format!("expected a literal, found {other}")),
            },
        }
    }

    fn binders(&self, x: &Sexp) -> Res<Vec<Var>> {
        let Some(items) = x.as_list() else {
            return err(x.pos(), "expected a variable list");
        };
        let mut out = Vec::new();
        for b in items {
            match b.as_list() {
                Some([name, sort]) => {
                    let n = name.as_atom().ok_or_else(|| SyntaxError::new(name.pos(), "expected a variable name"))?;
                    self.check_name(n, name.pos())?;
                    out.push(Var::new(n, self.sort(sort)?));
                }
                _ => return err(b.pos(), "expected (name sort)"),
            }
        }
        if out.is_empty() {
            return err(x.pos(), "empty variable list");
        }
        Ok(out)
    }

    fn parse_formula(&self, x: &Sexp, scope: &mut Vec<Var>) -> Res<Formula> {
        let pos = x.pos();
        let wrap = |r: Result<Literal, crate::formula::FormulaError>| {
            r.map(Formula::lit).map_err(|e| SyntaxError::new(pos, e.to_string()))
        };
        match x {
            Sexp::Atom(s, _) => match s.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => {
                    let t = self.parse_term(x, scope)?;
                    wrap(Literal::pred(self.store, &t))
                }
            },
            Sexp::List(items, _) => {
                let Some(head) = x.head() else {
                    return err(pos, "expected a formula");
                };
                let args = &items[1..];
                match head {
                    "and" | "or" => {
                        let parts = args
                            .iter()
                            .map(|a| self.parse_formula(a, scope))
                            .collect::<Res<Vec<_>>>()?;
                        Ok(if head == "and" { Formula::and(parts) } else { Formula::or(parts) })
                    }
                    "not" => {
                        let [a] = args else { return err(pos, "not takes one argument") };
                        Ok(self.parse_formula(a, scope)?.not())
                    }
                    "=>" => {
                        let [a, b] = args else { return err(pos, "=> takes two arguments") };
                        Ok(Formula::implies(self.parse_formula(a, scope)?, self.parse_formula(b, scope)?))
                    }
                    "forall" | "exists" => {
                        let [vars, body] = args else {
                            return err(pos, format!("expected ({head} (vars) body)"));
                        };
                        let vars = self.binders(vars)?;
                        let n = scope.len();
                        scope.extend(vars.iter().cloned());
                        let body = self.parse_formula(body, scope);
                        scope.truncate(n);
                        let body = body?;
                        Ok(if head == "forall" {
                            Formula::forall(vars, body)
                        } else {
                            Formula::exists(vars, body)
                        })
                    }
                    "=" | "distinct" | "<=" | "<" | ">=" | ">" => {
                        if args.len() < 2 {
                            return err(pos, format!("{head} needs at least two arguments"));
                        }
                        let ts = args
                            .iter()
                            .map(|a| self.parse_term(a, scope))
                            .collect::<Res<Vec<_>>>()?;
                        if head == "distinct" {
                            let mut parts = Vec::new();
                            for i in 0..ts.len() {
                                for j in i + 1..ts.len() {
                                    parts.push(wrap(Literal::neq(self.store, &ts[i], &ts[j]))?);
                                }
                            }
                            return Ok(Formula::and(parts));
                        }
                        let mut parts = Vec::new();
                        for w in ts.windows(2) {
                            parts.push(wrap(match head {
                                "=" => Literal::eq(self.store, &w[0], &w[1]),
                                "<=" => Literal::le(&w[0], &w[1]),
                                "<" => Literal::lt(&w[0], &w[1]),
                                ">=" => Literal::ge(&w[0], &w[1]),
                                _ => Literal::gt(&w[0], &w[1]),
                            })?);
                        }
                        Ok(Formula::and(parts))
                    }
                    _ => {
                        let t = self.parse_term(x, scope)?;
                        wrap(Literal::pred(self.store, &t))
                    }
                }
            }
        }
    }

    fn numeral(&self, x: &Sexp) -> Option<Rational> {
        match x {
            Sexp::Atom(s, _) => parse_numeral(s),
            Sexp::List(items, _) => match (x.head()?, &items[1..]) {
                ("-", [a]) => self.numeral(a).map(|q| -q),
                ("/", [a, b]) => {
                    let (a, b) = (self.numeral(a)?, self.numeral(b)?);
                    (b != Rational::from_integer(0.into())).then(|| a / b)
                }
                _ => None,
            },
        }
    }

    fn parse_term(&self, x: &Sexp, scope: &[Var]) -> Res<Term> {
        let pos = x.pos();
        let store = self.store;
        let lift = |r: Result<Term, crate::terms::TermError>| r.map_err(|e| SyntaxError::new(pos, e.to_string()));
        if let Some(q) = self.numeral(x) {
            return Ok(store.rat(q));
        }
        match x {
            Sexp::Atom(s, _) => {
                if let Some(v) = scope.iter().rev().find(|v| &*v.name == s) {
                    return Ok(store.var(v));
                }
                match s.as_str() {
                    "true" => return Ok(store.bool(true)),
                    "false" => return Ok(store.bool(false)),
                    _ => {}
                }
                if let Some(f) = self.sig.funs.get(s) {
                    return lift(store.app(f, Vec::new()));
                }
                if let Some(v) = self.free.get(s) {
                    return Ok(store.var(v));
                }
                if let Some(rest) = s.strip_prefix("!v") {
                    if self.allow_reserved && rest.parse::<u32>().is_ok() {
                        return err(pos, format!("unknown auxiliary variable {s}"));
                    }
                }
                err(pos, format!("unknown symbol {s}"))
            }
            Sexp::List(items, _) => {
                let Some(head) = x.head() else {
                    return err(pos, "expected a term");
                };
                let args = items[1..]
                    .iter()
                    .map(|a| self.parse_term(a, scope))
                    .collect::<Res<Vec<_>>>()?;
                match head {
                    "+" => lift(store.lin(args.into_iter().map(|a| (a, ratio(1, 1))), ratio(0, 1))),
                    "-" => match args.as_slice() {
                        [a] => lift(store.scale(ratio(-1, 1), a)),
                        [a, rest @ ..] if !rest.is_empty() => lift(store.lin(
                            std::iter::once((a.clone(), ratio(1, 1)))
                                .chain(rest.iter().map(|b| (b.clone(), ratio(-1, 1)))),
                            ratio(0, 1),
                        )),
                        _ => err(pos, "- needs arguments"),
                    },
                    "*" => {
                        let mut k = ratio(1, 1);
                        let mut rest = None;
                        for (a, t) in items[1..].iter().zip(&args) {
                            if let Some(q) = self.numeral(a) {
                                k *= q;
                            } else if rest.is_none() {
                                rest = Some(t.clone());
                            } else {
                                return err(pos, "non-linear multiplication");
                            }
                        }
                        match rest {
                            Some(t) => lift(store.scale(k, &t)),
                            None => Ok(store.rat(k)),
                        }
                    }
                    "/" => match (args.as_slice(), items.get(2).and_then(|d| self.numeral(d))) {
                        ([a, _], Some(d)) if d != ratio(0, 1) => lift(store.scale(ratio(1, 1) / d, a)),
                        _ => err(pos, "division by a non-constant"),
                    },
                    _ => {
                        let f = self
                            .sig
                            .funs
                            .get(head)
                            .ok_or_else(|| SyntaxError::new(pos, format!("unknown function {head}")))?;
                        lift(store.app(f, args))
                    }
                }
            }
        }
    }

    fn proof_node(&self, cmd: &Sexp) -> Res<RawNode> {
        let pos = cmd.pos();
        let items = cmd.as_list().unwrap();
        let head = cmd.head().unwrap();
        let name = items
            .get(1)
            .and_then(Sexp::as_atom)
            .ok_or_else(|| SyntaxError::new(pos, "expected a node name"))?
            .to_string();
        let rest = &items[2..];
        let keyword = |i: usize, k: &str| -> Res<&Sexp> {
            if rest.get(i).and_then(Sexp::as_atom) != Some(k) {
                return err(rest.get(i).map(Sexp::pos).unwrap_or(pos), format!("expected {k}"));
            }
            rest.get(i + 1)
                .ok_or_else(|| SyntaxError::new(pos, format!("missing value for {k}")))
        };
        let atom = |x: &Sexp| -> Res<String> {
            x.as_atom()
                .map(str::to_string)
                .ok_or_else(|| SyntaxError::new(x.pos(), "expected a name"))
        };
        let terms = |x: &Sexp| -> Res<Vec<Term>> {
            x.as_list()
                .ok_or_else(|| SyntaxError::new(x.pos(), "expected a term list"))?
                .iter()
                .map(|t| self.parse_term(t, &[]))
                .collect()
        };
        let clause_at = |i: usize| -> Res<Option<Clause>> {
            match rest.get(i) {
                None => Ok(None),
                Some(c) if rest.len() == i + 1 => self.parse_clause(c).map(Some),
                Some(c) => err(c.pos(), "unexpected trailing arguments"),
            }
        };
        let (kind, clause) = match head {
            "input" => {
                let p = self.partition(keyword(0, ":partition")?)?;
                let c = clause_at(2)?.ok_or_else(|| SyntaxError::new(pos, "input needs a clause"))?;
                (RawKind::Input { partition: p }, Some(c))
            }
            "inst" => {
                let source = atom(keyword(0, ":of")?)?;
                let ts = terms(keyword(2, ":terms")?)?;
                let c = clause_at(4)?.ok_or_else(|| SyntaxError::new(pos, "inst needs a clause"))?;
                (RawKind::Instantiation { source, terms: ts }, Some(c))
            }
            "res" => {
                let p = atom(keyword(0, ":pos")?)?;
                let n = atom(keyword(2, ":neg")?)?;
                let pivot = self.parse_literal(keyword(4, ":pivot")?, &mut Vec::new())?;
                (
                    RawKind::Resolution { pos: p, neg: n, pivot },
                    clause_at(6)?,
                )
            }
            "lemma" => {
                let kw = rest.first().and_then(Sexp::as_atom).unwrap_or("");
                match kw {
                    ":trans" => (
                        RawKind::Lemma(LemmaKind::Transitivity(terms(keyword(0, ":trans")?)?)),
                        clause_at(2)?,
                    ),
                    ":tricho" => {
                        let (Some(a), Some(b)) = (rest.get(1), rest.get(2)) else {
                            return err(pos, "expected :tricho t1 t2");
                        };
                        (
                            RawKind::Lemma(LemmaKind::Trichotomy(
                                self.parse_term(a, &[])?,
                                self.parse_term(b, &[])?,
                            )),
                            clause_at(3)?,
                        )
                    }
                    ":cong" => {
                        let (Some(f), Some(a), Some(b)) = (rest.get(1), rest.get(2), rest.get(3)) else {
                            return err(pos, "expected :cong f (t...) (s...)");
                        };
                        let fname = atom(f)?;
                        let f = self
                            .sig
                            .funs
                            .get(&fname)
                            .cloned()
                            .ok_or_else(|| SyntaxError::new(pos, format!("unknown function {fname}")))?;
                        let mut i = 4;
                        let mut partition = None;
                        if rest.get(4).and_then(Sexp::as_atom) == Some(":partition") {
                            partition = Some(self.partition(keyword(4, ":partition")?)?);
                            i = 6;
                        }
                        (
                            RawKind::Lemma(LemmaKind::Congruence {
                                f,
                                args: terms(a)?,
                                other: terms(b)?,
                                partition,
                            }),
                            clause_at(i)?,
                        )
                    }
                    ":farkas" => {
                        let list = keyword(0, ":farkas")?;
                        let mut items = Vec::new();
                        for e in list.as_list().ok_or_else(|| SyntaxError::new(list.pos(), "expected ((k lit)...)"))? {
                            let Some([k, l]) = e.as_list() else {
                                return err(e.pos(), "expected (coefficient literal)");
                            };
                            let k = self
                                .numeral(k)
                                .ok_or_else(|| SyntaxError::new(k.pos(), "expected a rational coefficient"))?;
                            items.push((k, self.parse_literal(l, &mut Vec::new())?));
                        }
                        (RawKind::Lemma(LemmaKind::Farkas(items)), clause_at(2)?)
                    }
                    _ => return err(pos, "expected :trans, :cong, :tricho or :farkas"),
                }
            }
            _ => unreachable!(),
        };
        Ok(RawNode { name, clause, kind })
    }
}

/// Read a proof text on top of a problem document.
pub fn parse_proof(store: &TermStore, doc: Document, text: &str) -> Res<Document> {
    let mut r = Reader::resume(store, doc);
    r.read(text)?;
    r.finish()
}
