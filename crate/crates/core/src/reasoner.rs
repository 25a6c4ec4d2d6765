//! First-order unification (flat terms, occurs check) and depth-bounded
//! backward chaining over Horn clauses.
//!
//! Depth counts clause expansions: descending from a goal into a clause body
//! costs one level, matching a stored fact costs nothing. A goal additionally
//! matches facts and clause heads of any `genlPreds` specialization of its
//! predicate. Traversal order is canonical (sorted clauses, sorted facts), so
//! runs are reproducible bit for bit under a step budget.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use crate::kbstore::KnowledgeBase;
use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Symbol),
    Const(Symbol),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<Symbol>, args: Vec<Term>) -> Atom {
        Atom { predicate: predicate.into(), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    /// Distinct variables in first-occurrence order.
    pub fn variables(&self) -> Vec<Symbol> {
        let mut vars = Vec::new();
        for term in &self.args {
            if let Term::Var(v) = term {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        vars
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        write!(f, ")")
    }
}

/// `consequent` holds whenever every antecedent holds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HornClause {
    pub consequent: Atom,
    pub antecedents: Vec<Atom>,
}

impl fmt::Display for HornClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(<= {}", self.consequent)?;
        for atom in &self.antecedents {
            write!(f, " {atom}")?;
        }
        write!(f, ")")
    }
}

/// An idempotent variable binding map. `resolve` chases chains to a fixpoint,
/// so applying a substitution twice equals applying it once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Symbol, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, var: &Symbol) -> Option<&Term> {
        self.bindings.get(var)
    }

    /// Follows variable bindings until a constant or an unbound variable.
    pub fn resolve(&self, term: &Term) -> Term {
        let mut current = term.clone();
        while let Term::Var(v) = &current {
            match self.bindings.get(v) {
                Some(next) => current = next.clone(),
                None => break,
            }
        }
        current
    }

    pub fn apply(&self, atom: &Atom) -> Atom {
        Atom {
            predicate: atom.predicate.clone(),
            args: atom.args.iter().map(|t| self.resolve(t)).collect(),
        }
    }

    /// Binds `var` to `term` after resolving both. Binding a variable to
    /// itself is a no-op; with flat terms that is the only way the occurs
    /// check can trigger, so binding never fails.
    fn bind(&mut self, var: Symbol, term: Term) {
        let resolved = self.resolve(&term);
        if resolved == Term::Var(var.clone()) {
            return;
        }
        self.bindings.insert(var, resolved);
    }
}

fn unify_terms(a: &Term, b: &Term, subst: &mut Substitution) -> bool {
    let ra = subst.resolve(a);
    let rb = subst.resolve(b);
    match (ra, rb) {
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), other) => {
            subst.bind(x, other);
            true
        }
        (other, Term::Var(y)) => {
            subst.bind(y, other);
            true
        }
    }
}

/// Unifies two argument lists under an existing substitution. Used both for
/// same-predicate unification and for matching a goal against a
/// specialization's facts or clause heads.
pub fn unify_args(a: &[Term], b: &[Term], base: &Substitution) -> Option<Substitution> {
    if a.len() != b.len() {
        return None;
    }
    let mut subst = base.clone();
    for (x, y) in a.iter().zip(b) {
        if !unify_terms(x, y, &mut subst) {
            return None;
        }
    }
    Some(subst)
}

/// Most general unifier of two atoms, or `None`. Predicates and arities must
/// match exactly.
pub fn unify(a: &Atom, b: &Atom) -> Option<Substitution> {
    if a.predicate != b.predicate {
        return None;
    }
    unify_args(&a.args, &b.args, &Substitution::new())
}

/// Inference budget: either a deterministic count of unification attempts or
/// a wall-clock allowance.
#[derive(Debug, Clone, PartialEq)]
pub enum Budget {
    Steps(u64),
    WallClock(Duration),
}

impl Budget {
    pub const UNLIMITED: Budget = Budget::Steps(u64::MAX);
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceLimits {
    /// Maximum clause expansions along any path. Must be at least 1.
    pub max_depth: usize,
    pub budget: Budget,
}

impl Default for InferenceLimits {
    fn default() -> InferenceLimits {
        InferenceLimits { max_depth: 5, budget: Budget::UNLIMITED }
    }
}

impl InferenceLimits {
    pub fn with_depth(max_depth: usize) -> InferenceLimits {
        InferenceLimits { max_depth, ..InferenceLimits::default() }
    }
}

/// The result of a backchaining run. Every answer grounds every query
/// variable; `complete` is false iff the budget ran out before the search
/// space was exhausted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnswerSet {
    pub answers: BTreeSet<BTreeMap<Symbol, Symbol>>,
    pub complete: bool,
}

struct Search<'a> {
    kb: &'a KnowledgeBase,
    clauses: Vec<HornClause>,
    query_vars: Vec<Symbol>,
    steps_left: u64,
    deadline: Option<Instant>,
    answers: BTreeSet<BTreeMap<Symbol, Symbol>>,
    exhausted: bool,
    rename_counter: u64,
    max_answers: Option<usize>,
}

impl<'a> Search<'a> {
    /// Accounts for one unification attempt. Returns false when the budget
    /// is spent.
    fn charge(&mut self) -> bool {
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.exhausted = true;
                return false;
            }
        }
        if self.steps_left == 0 {
            self.exhausted = true;
            return false;
        }
        if self.steps_left != u64::MAX {
            self.steps_left -= 1;
        }
        true
    }

    fn record(&mut self, subst: &Substitution) -> ControlFlow<()> {
        let mut answer = BTreeMap::new();
        for var in &self.query_vars {
            match subst.resolve(&Term::Var(var.clone())) {
                Term::Const(c) => {
                    answer.insert(var.clone(), c);
                }
                // An unbound query variable means the binding holds for
                // every constant; such answers are not enumerated.
                Term::Var(_) => return ControlFlow::Continue(()),
            }
        }
        self.answers.insert(answer);
        match self.max_answers {
            Some(max) if self.answers.len() >= max => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    }

    fn rename_apart(&mut self, clause: &HornClause) -> HornClause {
        self.rename_counter += 1;
        let tag = self.rename_counter;
        let rename_atom = |atom: &Atom| Atom {
            predicate: atom.predicate.clone(),
            args: atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Term::Var(Symbol::new(format!("{v}#{tag}"))),
                    c => c.clone(),
                })
                .collect(),
        };
        HornClause {
            consequent: rename_atom(&clause.consequent),
            antecedents: clause.antecedents.iter().map(rename_atom).collect(),
        }
    }

    fn solve(&mut self, goals: &[(Atom, usize)], subst: &Substitution) -> ControlFlow<()> {
        let Some(((goal, depth), rest)) = goals.split_first() else {
            return self.record(subst);
        };
        let goal = subst.apply(goal);
        let specializations = self.kb.genl_preds_specializations(&goal.predicate);

        for pred in specializations.iter() {
            if self.kb.arity(pred) != Some(goal.args.len()) {
                continue;
            }
            let pattern: Vec<Option<Symbol>> = goal
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Some(c.clone()),
                    Term::Var(_) => None,
                })
                .collect();
            let candidates = self
                .kb
                .facts_matching(pred, &pattern)
                .expect("pattern arity checked against stored arity");
            for fact in candidates {
                if !self.charge() {
                    return ControlFlow::Break(());
                }
                let fact_args: Vec<Term> = fact.args.iter().cloned().map(Term::Const).collect();
                if let Some(next) = unify_args(&goal.args, &fact_args, subst) {
                    self.solve(rest, &next)?;
                }
            }
        }

        if *depth >= 1 {
            for i in 0..self.clauses.len() {
                let clause = self.clauses[i].clone();
                if !specializations.contains(&clause.consequent.predicate)
                    || clause.consequent.args.len() != goal.args.len()
                {
                    continue;
                }
                let renamed = self.rename_apart(&clause);
                if !self.charge() {
                    return ControlFlow::Break(());
                }
                if let Some(next) = unify_args(&goal.args, &renamed.consequent.args, subst) {
                    let mut subgoals: Vec<(Atom, usize)> = renamed
                        .antecedents
                        .iter()
                        .map(|a| (a.clone(), depth - 1))
                        .collect();
                    subgoals.extend_from_slice(rest);
                    self.solve(&subgoals, &next)?;
                }
            }
        }
        ControlFlow::Continue(())
    }
}

fn run_search(
    kb: &KnowledgeBase,
    axioms: &[HornClause],
    query: &Atom,
    limits: &InferenceLimits,
    max_answers: Option<usize>,
) -> AnswerSet {
    let mut clauses = axioms.to_vec();
    clauses.sort();
    let (steps_left, deadline) = match limits.budget {
        Budget::Steps(n) => (n, None),
        Budget::WallClock(d) => (u64::MAX, Some(Instant::now() + d)),
    };
    let mut search = Search {
        kb,
        clauses,
        query_vars: query.variables(),
        steps_left,
        deadline,
        answers: BTreeSet::new(),
        exhausted: false,
        rename_counter: 0,
        max_answers,
    };
    let goals = vec![(query.clone(), limits.max_depth)];
    let _ = search.solve(&goals, &Substitution::new());
    AnswerSet { answers: search.answers, complete: !search.exhausted }
}

/// Enumerates every answer substitution for `query` reachable within the
/// depth and budget limits.
pub fn backchain(
    kb: &KnowledgeBase,
    axioms: &[HornClause],
    query: &Atom,
    limits: &InferenceLimits,
) -> AnswerSet {
    run_search(kb, axioms, query, limits, None)
}

/// True iff at least one answer exists within the limits. Stops at the first
/// answer found.
pub fn answered(
    kb: &KnowledgeBase,
    axioms: &[HornClause],
    query: &Atom,
    limits: &InferenceLimits,
) -> bool {
    !run_search(kb, axioms, query, limits, Some(1)).answers.is_empty()
}

/// Symbolic backchaining without facts: walks the clause graph from the query
/// predicate and returns every (predicate, arity) whose goals cannot expand
/// through any clause head within the depth limit. When a goal dead-ends,
/// the whole specialization set of its predicate joins the leaf roster, since
/// backchaining would consult those predicates' facts there.
pub fn extract_leaf_predicates(
    kb: &KnowledgeBase,
    axioms: &[HornClause],
    query: &Atom,
    max_depth: usize,
) -> BTreeSet<(Symbol, usize)> {
    let mut leaves = BTreeSet::new();
    let mut visited = BTreeSet::new();
    let mut stack = vec![(query.predicate.clone(), query.args.len(), max_depth)];
    while let Some((pred, arity, depth)) = stack.pop() {
        if !visited.insert((pred.clone(), depth)) {
            continue;
        }
        let specializations = kb.genl_preds_specializations(&pred);
        let matching: Vec<&HornClause> = axioms
            .iter()
            .filter(|c| {
                specializations.contains(&c.consequent.predicate)
                    && c.consequent.args.len() == arity
            })
            .collect();
        if depth >= 1 && !matching.is_empty() {
            for clause in matching {
                for antecedent in &clause.antecedents {
                    stack.push((antecedent.predicate.clone(), antecedent.args.len(), depth - 1));
                }
            }
        } else {
            for spec in specializations.iter() {
                leaves.insert((spec.clone(), arity));
            }
        }
    }
    leaves
}
