//! CNF construction: variables, literals, the clause store with its name
//! registry, cardinality helpers and DIMACS text I/O.
//!
//! Encoders never talk to a solver directly. They append clauses to a
//! [`Formula`] and register every variable under a semantic name so that a
//! model can later be decoded by name alone.

use std::collections::HashMap;
use std::fmt;
use std::ops::Not;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("variable name `{0}` is already registered")]
    DuplicateName(String),
    #[error("cardinality constraint over an empty literal list")]
    EmptyCardinality,
    #[error("cardinality bound {k} exceeds the {len} literals given")]
    BoundTooLarge { k: usize, len: usize },
    #[error("dimacs line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
}

/// A propositional variable. Indices start at 1 and are dense.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> u32 {
        self.0
    }

    pub fn from_index(index: u32) -> Self {
        assert!(index > 0, "variable indices start at 1");
        Var(index)
    }

    pub fn pos(self) -> Lit {
        Lit(self.0 as i32)
    }

    pub fn neg(self) -> Lit {
        Lit(-(self.0 as i32))
    }
}

/// A literal in DIMACS convention: the sign carries the polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        if positive {
            var.pos()
        } else {
            var.neg()
        }
    }

    pub fn from_dimacs(value: i32) -> Self {
        assert!(value != 0 && value != i32::MIN);
        Lit(value)
    }

    pub fn var(self) -> Var {
        Var(self.0.unsigned_abs())
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn dimacs(self) -> i32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal or a Boolean constant. Encoders use signals so that fixed facts
/// (a wall, a cell that never holds snow, a fixed source vertex) fold away
/// while clauses are built instead of costing a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signal {
    Const(bool),
    Lit(Lit),
}

impl Signal {
    pub const TRUE: Signal = Signal::Const(true);
    pub const FALSE: Signal = Signal::Const(false);

    pub fn as_lit(self) -> Option<Lit> {
        match self {
            Signal::Lit(l) => Some(l),
            Signal::Const(_) => None,
        }
    }
}

impl From<Lit> for Signal {
    fn from(l: Lit) -> Self {
        Signal::Lit(l)
    }
}

impl From<bool> for Signal {
    fn from(b: bool) -> Self {
        Signal::Const(b)
    }
}

impl Not for Signal {
    type Output = Signal;

    fn not(self) -> Signal {
        match self {
            Signal::Const(b) => Signal::Const(!b),
            Signal::Lit(l) => Signal::Lit(!l),
        }
    }
}

/// A total assignment, indexed by variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    /// `values[i]` is the value of variable `i + 1`.
    pub fn new(values: Vec<bool>) -> Self {
        Model { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn var(&self, v: Var) -> bool {
        self.values[v.index() as usize - 1]
    }

    pub fn lit(&self, l: Lit) -> bool {
        self.var(l.var()) == l.is_positive()
    }

    pub fn signal(&self, s: Signal) -> bool {
        match s {
            Signal::Const(b) => b,
            Signal::Lit(l) => self.lit(l),
        }
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

/// A CNF formula under construction.
#[derive(Clone, Debug, Default)]
pub struct Formula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    names: HashMap<String, Var>,
    var_names: Vec<Option<String>>,
}

impl Formula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars as usize
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    /// Allocates the next variable and registers it under `name`.
    pub fn fresh_var(&mut self, name: impl Into<String>) -> Result<Var, CnfError> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(CnfError::DuplicateName(name));
        }
        let var = self.alloc();
        self.names.insert(name.clone(), var);
        self.var_names[var.index() as usize - 1] = Some(name);
        Ok(var)
    }

    /// Allocates an auxiliary variable named `role#index`. The index makes the
    /// name unique, so this cannot fail.
    pub fn fresh_aux(&mut self, role: &str) -> Var {
        let name = format!("{role}#{}", self.num_vars + 1);
        self.fresh_var(name).expect("aux names embed the fresh index")
    }

    fn alloc(&mut self) -> Var {
        self.num_vars += 1;
        self.var_names.push(None);
        Var(self.num_vars)
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.names.get(name).copied()
    }

    pub fn name_of(&self, var: Var) -> Option<&str> {
        self.var_names
            .get(var.index() as usize - 1)
            .and_then(|n| n.as_deref())
    }

    /// Registered `(name, var)` pairs in allocation order.
    pub fn named_vars(&self) -> impl Iterator<Item = (&str, Var)> + '_ {
        self.var_names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_deref().map(|n| (n, Var(i as u32 + 1))))
    }

    /// Appends a clause. An empty clause makes the formula unsatisfiable.
    pub fn add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) {
        let clause: Vec<Lit> = lits.into_iter().collect();
        debug_assert!(clause.iter().all(|l| l.var().0 <= self.num_vars));
        self.clauses.push(clause);
    }

    /// Appends the disjunction of `signals`, folding constants: a true
    /// constant drops the clause, false constants are removed.
    pub fn add_signals(&mut self, signals: &[Signal]) {
        let mut clause = Vec::with_capacity(signals.len());
        for s in signals {
            match *s {
                Signal::Const(true) => return,
                Signal::Const(false) => {}
                Signal::Lit(l) => clause.push(l),
            }
        }
        self.add_clause(clause);
    }

    /// `premises → conclusion-disjunction`.
    pub fn implies(&mut self, premises: &[Signal], conclusions: &[Signal]) {
        let mut clause: Vec<Signal> = premises.iter().map(|&p| !p).collect();
        clause.extend_from_slice(conclusions);
        self.add_signals(&clause);
    }

    /// Defines a fresh variable equivalent to the conjunction of `inputs`.
    pub fn and_gate(&mut self, name: impl Into<String>, inputs: &[Signal]) -> Result<Signal, CnfError> {
        if inputs.contains(&Signal::FALSE) {
            return Ok(Signal::FALSE);
        }
        let live: Vec<Signal> = inputs.iter().copied().filter(|&s| s != Signal::TRUE).collect();
        match live.as_slice() {
            [] => return Ok(Signal::TRUE),
            [single] => return Ok(*single),
            _ => {}
        }
        let out = Signal::Lit(self.fresh_var(name)?.pos());
        for &i in &live {
            self.implies(&[out], &[i]);
        }
        let mut back: Vec<Signal> = live.iter().map(|&i| !i).collect();
        back.push(out);
        self.add_signals(&back);
        Ok(out)
    }

    /// Defines a fresh variable equivalent to the disjunction of `inputs`.
    pub fn or_gate(&mut self, name: impl Into<String>, inputs: &[Signal]) -> Result<Signal, CnfError> {
        let negated: Vec<Signal> = inputs.iter().map(|&s| !s).collect();
        Ok(!self.and_gate(name, &negated)?)
    }

    /// Pairwise exactly-one: one at-least-one clause plus a binary clause for
    /// every pair.
    pub fn exactly_one(&mut self, lits: &[Lit]) -> Result<(), CnfError> {
        if lits.is_empty() {
            return Err(CnfError::EmptyCardinality);
        }
        self.add_clause(lits.iter().copied());
        for (i, &a) in lits.iter().enumerate() {
            for &b in &lits[i + 1..] {
                self.add_clause([!a, !b]);
            }
        }
        Ok(())
    }

    /// At most `k` of `lits` hold. `k = 0` yields unit clauses, `k ≥ len` is
    /// vacuous, anything in between uses a sequential counter.
    pub fn at_most_k(&mut self, lits: &[Lit], k: usize) -> Result<(), CnfError> {
        let n = lits.len();
        if k >= n {
            return Ok(());
        }
        if k == 0 {
            for &l in lits {
                self.add_clause([!l]);
            }
            return Ok(());
        }
        // counter[i][j]: at least j+1 of lits[0..=i] are true.
        let mut prev: Vec<Lit> = Vec::with_capacity(k);
        for (i, &x) in lits.iter().enumerate().take(n - 1) {
            let cur: Vec<Lit> = (0..k).map(|_| self.fresh_aux("seq").pos()).collect();
            self.add_clause([!x, cur[0]]);
            if i == 0 {
                for &c in &cur[1..] {
                    self.add_clause([!c]);
                }
            } else {
                self.add_clause([!prev[0], cur[0]]);
                for j in 1..k {
                    self.add_clause([!x, !prev[j - 1], cur[j]]);
                    self.add_clause([!prev[j], cur[j]]);
                }
                self.add_clause([!x, !prev[k - 1]]);
            }
            prev = cur;
        }
        self.add_clause([!lits[n - 1], !prev[k - 1]]);
        Ok(())
    }

    /// At least `k` of `lits` hold, as at-most-(len−k) over the negations.
    pub fn at_least_k(&mut self, lits: &[Lit], k: usize) -> Result<(), CnfError> {
        if k > lits.len() {
            return Err(CnfError::BoundTooLarge { k, len: lits.len() });
        }
        let negated: Vec<Lit> = lits.iter().map(|&l| !l).collect();
        self.at_most_k(&negated, lits.len() - k)
    }

    /// Index of the first clause falsified by `model`, if any.
    pub fn first_violated(&self, model: &Model) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| !c.iter().any(|&l| model.lit(l)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for l in clause {
                out.push_str(&l.0.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }

    /// Parses DIMACS CNF. The registry of the result is empty.
    pub fn from_dimacs(text: &str) -> Result<Self, CnfError> {
        let mut formula = Formula::new();
        let mut declared: Option<(u32, usize)> = None;
        let mut current: Vec<Lit> = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            let err = |msg: &str| CnfError::Dimacs { line: no + 1, msg: msg.to_string() };
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(header) = line.strip_prefix("p") {
                let parts: Vec<&str> = header.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(err("malformed header"));
                }
                let vars = parts[1].parse().map_err(|_| err("bad variable count"))?;
                let clauses = parts[2].parse().map_err(|_| err("bad clause count"))?;
                declared = Some((vars, clauses));
                for _ in 0..vars {
                    formula.alloc();
                }
                continue;
            }
            let Some((vars, _)) = declared else {
                return Err(err("clause before header"));
            };
            for tok in line.split_whitespace() {
                let value: i32 = tok.parse().map_err(|_| err("bad literal"))?;
                if value == 0 {
                    formula.clauses.push(std::mem::take(&mut current));
                } else {
                    if value.unsigned_abs() > vars {
                        return Err(err("literal exceeds declared variable count"));
                    }
                    current.push(Lit(value));
                }
            }
        }
        if !current.is_empty() {
            formula.clauses.push(current);
        }
        match declared {
            None => Err(CnfError::Dimacs { line: 0, msg: "missing header".into() }),
            Some((_, n)) if n != formula.clauses.len() => Err(CnfError::Dimacs {
                line: 0,
                msg: format!("header declares {n} clauses, found {}", formula.clauses.len()),
            }),
            Some(_) => Ok(formula),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(f: &mut Formula, n: usize) -> Vec<Lit> {
        (0..n).map(|i| f.fresh_var(format!("x{i}")).unwrap().pos()).collect()
    }

    /// Assignments of the first `n` variables that extend to a model. Small
    /// formulas are enumerated outright; larger ones fix the projection with
    /// unit clauses and ask the solver.
    fn projected_models(f: &Formula, n: usize) -> Vec<Vec<bool>> {
        let total = f.num_vars();
        let mut seen = std::collections::BTreeSet::new();
        if total <= 16 {
            for bits in 0u32..(1 << total) {
                let values: Vec<bool> = (0..total).map(|i| bits >> i & 1 == 1).collect();
                if f.first_violated(&Model::new(values.clone())).is_none() {
                    seen.insert(values[..n].to_vec());
                }
            }
        } else {
            for bits in 0u32..(1 << n) {
                let values: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
                let mut g = f.clone();
                for (i, &v) in values.iter().enumerate() {
                    let lit = Var::from_index(i as u32 + 1).pos();
                    g.add_clause([if v { lit } else { !lit }]);
                }
                let out = crate::solver::solve(&g, std::time::Duration::from_secs(10)).unwrap();
                if out.status == crate::solver::SolveStatus::Sat {
                    seen.insert(values);
                }
            }
        }
        seen.into_iter().collect()
    }

    #[test]
    fn fresh_var_is_dense_and_injective() {
        let mut f = Formula::new();
        assert_eq!(f.fresh_var("x").unwrap(), Var(1));
        f.fresh_var("a").unwrap();
        assert_eq!(f.fresh_var("y").unwrap(), Var(3));
        assert_eq!(f.fresh_var("x"), Err(CnfError::DuplicateName("x".into())));
        assert_eq!(f.lookup("y"), Some(Var(3)));
        assert_eq!(f.name_of(Var(2)), Some("a"));
    }

    #[test]
    fn exactly_one_pairwise_shapes() {
        let mut f = Formula::new();
        let x = vars(&mut f, 4);
        f.exactly_one(&x[..1]).unwrap();
        assert_eq!(f.clauses(), &[vec![x[0]]]);

        let mut f = Formula::new();
        let x = vars(&mut f, 2);
        f.exactly_one(&x).unwrap();
        assert_eq!(f.clauses(), &[vec![x[0], x[1]], vec![!x[0], !x[1]]]);

        let mut f = Formula::new();
        let x = vars(&mut f, 4);
        f.exactly_one(&x).unwrap();
        assert_eq!(f.num_clauses(), 1 + 6);

        assert_eq!(Formula::new().exactly_one(&[]), Err(CnfError::EmptyCardinality));
    }

    #[test]
    fn at_most_k_edge_shapes() {
        let mut f = Formula::new();
        let x = vars(&mut f, 2);
        f.at_most_k(&x, 0).unwrap();
        assert_eq!(f.clauses(), &[vec![!x[0]], vec![!x[1]]]);

        let mut f = Formula::new();
        let x = vars(&mut f, 3);
        f.at_most_k(&x, 3).unwrap();
        assert_eq!(f.num_clauses(), 0);
    }

    #[test]
    fn small_cardinality_model_counts() {
        let mut f = Formula::new();
        let x = vars(&mut f, 3);
        f.at_most_k(&x, 1).unwrap();
        assert_eq!(projected_models(&f, 3).len(), 4);

        let mut f = Formula::new();
        let x = vars(&mut f, 3);
        f.at_least_k(&x, 2).unwrap();
        assert_eq!(projected_models(&f, 3).len(), 4);
    }

    #[test]
    fn at_least_k_units() {
        let mut f = Formula::new();
        let x = vars(&mut f, 1);
        f.at_least_k(&x, 1).unwrap();
        assert_eq!(f.clauses(), &[vec![x[0]]]);

        let mut f = Formula::new();
        let x = vars(&mut f, 3);
        f.at_least_k(&x, 3).unwrap();
        assert_eq!(f.clauses(), &[vec![x[0]], vec![x[1]], vec![x[2]]]);
        assert!(matches!(f.at_least_k(&x, 4), Err(CnfError::BoundTooLarge { .. })));
    }

    #[test]
    fn cardinality_matches_brute_force_up_to_six() {
        for n in 1..=6usize {
            for k in 0..=n {
                for (label, bound_ok) in [
                    ("amk", Box::new(move |c: usize| c <= k) as Box<dyn Fn(usize) -> bool>),
                    ("alk", Box::new(move |c: usize| c >= k)),
                    ("eo", Box::new(move |c: usize| c == 1)),
                ] {
                    if label == "eo" && k != 1 {
                        continue;
                    }
                    let mut f = Formula::new();
                    let x = vars(&mut f, n);
                    match label {
                        "amk" => f.at_most_k(&x, k).unwrap(),
                        "alk" => f.at_least_k(&x, k).unwrap(),
                        _ => f.exactly_one(&x).unwrap(),
                    }
                    let got = projected_models(&f, n);
                    let want: Vec<Vec<bool>> = (0u32..(1 << n))
                        .map(|b| (0..n).map(|i| b >> i & 1 == 1).collect::<Vec<_>>())
                        .filter(|a| bound_ok(a.iter().filter(|&&v| v).count()))
                        .collect::<std::collections::BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    assert_eq!(got, want, "{label} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn dimacs_text() {
        let mut f = Formula::new();
        let x = vars(&mut f, 2);
        f.add_clause([x[0], !x[1]]);
        assert_eq!(f.to_dimacs(), "p cnf 2 1\n1 -2 0\n");
        assert_eq!(Formula::new().to_dimacs(), "p cnf 0 0\n");
    }

    #[test]
    fn dimacs_rejects_garbage() {
        assert!(Formula::from_dimacs("1 2 0\n").is_err());
        assert!(Formula::from_dimacs("p cnf 1 1\n2 0\n").is_err());
        assert!(Formula::from_dimacs("p cnf 2 2\n1 0\n").is_err());
        let f = Formula::from_dimacs("c hi\np cnf 3 2\n1 -3\n 2 0 -1 0\n").unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.clauses()[0], vec![Lit(1), Lit(-3), Lit(2)]);
    }

    #[test]
    fn signals_fold_constants() {
        let mut f = Formula::new();
        let x = vars(&mut f, 1)[0];
        f.add_signals(&[Signal::TRUE, x.into()]);
        assert_eq!(f.num_clauses(), 0);
        f.add_signals(&[Signal::FALSE, x.into()]);
        assert_eq!(f.clauses(), &[vec![x]]);
        f.add_signals(&[Signal::FALSE]);
        assert!(f.clauses()[1].is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_formula() -> impl Strategy<Value = Formula> {
            (0u32..12).prop_flat_map(|n| {
                let lit = if n == 0 {
                    Just(1i32).boxed()
                } else {
                    (1..=n as i32, any::<bool>())
                        .prop_map(|(v, s)| if s { v } else { -v })
                        .boxed()
                };
                let clauses = if n == 0 {
                    Just(Vec::new()).boxed()
                } else {
                    prop::collection::vec(prop::collection::vec(lit, 0..5), 0..10).boxed()
                };
                clauses.prop_map(move |cs| {
                    let mut f = Formula::new();
                    for _ in 0..n {
                        f.alloc();
                    }
                    for c in cs {
                        f.add_clause(c.into_iter().map(Lit));
                    }
                    f
                })
            })
        }

        proptest! {
            #[test]
            fn dimacs_round_trip(f in arb_formula()) {
                let back = Formula::from_dimacs(&f.to_dimacs()).unwrap();
                prop_assert_eq!(back.num_vars(), f.num_vars());
                prop_assert_eq!(back.clauses(), f.clauses());
            }

            #[test]
            fn negation_is_involution(v in 1i32..1000, s in any::<bool>()) {
                let l = Lit::from_dimacs(if s { v } else { -v });
                prop_assert_eq!(!!l, l);
                prop_assert_ne!(!l, l);
                prop_assert_eq!((!l).var(), l.var());
            }
        }
    }
}
