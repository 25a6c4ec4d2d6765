//! Ground fact storage with a collection ontology.
//!
//! Three predicates are ontology predicates and get edge indexes on assert:
//! `isa` (entity to collection), `genls` (collection to supercollection,
//! closed reflexively and transitively, cycles collapse into equivalence),
//! and `genlPreds` (predicate to its generalization). `argIsa` constraints
//! are stored alongside the facts. Closures are computed lazily and
//! memoized; asserting a new ontology edge invalidates the affected cache.
//!
//! Mutation happens in a single-writer phase (`&mut self`); shared snapshots
//! are cheap to clone and safe to query concurrently.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::symbol::Symbol;

/// A ground assertion: predicate plus one or more constant arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub predicate: Symbol,
    pub args: Vec<Symbol>,
}

impl Fact {
    pub fn new(predicate: impl Into<Symbol>, args: Vec<Symbol>) -> Fact {
        Fact { predicate: predicate.into(), args }
    }

    pub fn binary(predicate: impl Into<Symbol>, a: impl Into<Symbol>, b: impl Into<Symbol>) -> Fact {
        Fact { predicate: predicate.into(), args: vec![a.into(), b.into()] }
    }

    /// True for the ontology predicates `isa`, `genls`, and `genlPreds`.
    pub fn is_ontology(&self) -> bool {
        is_ontology_predicate(&self.predicate)
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        write!(f, ")")
    }
}

pub fn is_ontology_predicate(predicate: &Symbol) -> bool {
    matches!(predicate.as_str(), "isa" | "genls" | "genlPreds")
}

/// An `argIsa` constraint: argument `position` (1-based) of `predicate`
/// ranges over instances of `collection`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ArgConstraint {
    pub predicate: Symbol,
    pub position: usize,
    pub collection: Symbol,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KbError {
    #[error("arity mismatch for {predicate}: stored {stored}, got {got}")]
    ArityMismatch { predicate: Symbol, stored: usize, got: usize },
    #[error("fact ({predicate}) has no arguments")]
    NoArguments { predicate: Symbol },
    #[error("ontology predicate {predicate} takes exactly 2 arguments, got {got}")]
    OntologyArity { predicate: Symbol, got: usize },
}

#[derive(Debug, Clone, Default)]
struct PredFacts {
    arity: usize,
    facts: BTreeSet<Fact>,
    /// (argument position, constant) to the facts carrying that constant.
    by_arg: BTreeMap<(usize, Symbol), BTreeSet<Fact>>,
}

#[derive(Default)]
struct ClosureCache {
    instances: RwLock<BTreeMap<Symbol, Arc<BTreeSet<Symbol>>>>,
    specializations: RwLock<BTreeMap<Symbol, Arc<BTreeSet<Symbol>>>>,
}

impl Clone for ClosureCache {
    fn clone(&self) -> ClosureCache {
        ClosureCache {
            instances: RwLock::new(self.instances.read().expect("cache lock").clone()),
            specializations: RwLock::new(self.specializations.read().expect("cache lock").clone()),
        }
    }
}

impl fmt::Debug for ClosureCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ClosureCache")
    }
}

/// Fact store plus ontology indexes.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    facts: BTreeSet<Fact>,
    preds: BTreeMap<Symbol, PredFacts>,
    constraints: BTreeMap<(Symbol, usize), Symbol>,
    /// collection -> direct instances
    isa_members: BTreeMap<Symbol, BTreeSet<Symbol>>,
    /// sub -> direct supercollections
    genls_up: BTreeMap<Symbol, BTreeSet<Symbol>>,
    /// super -> direct subcollections
    genls_down: BTreeMap<Symbol, BTreeSet<Symbol>>,
    /// predicate -> direct generalizations
    genl_preds_up: BTreeMap<Symbol, BTreeSet<Symbol>>,
    /// predicate -> direct specializations
    genl_preds_down: BTreeMap<Symbol, BTreeSet<Symbol>>,
    cache: ClosureCache,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &KnowledgeBase) -> bool {
        self.facts == other.facts && self.constraints == other.constraints
    }
}

impl Eq for KnowledgeBase {}

impl KnowledgeBase {
    pub fn new() -> KnowledgeBase {
        KnowledgeBase::default()
    }

    /// Adds a ground fact. Returns `Ok(false)` for an exact duplicate.
    /// Ontology facts also update the edge indexes and invalidate the
    /// affected closure cache.
    pub fn assert_fact(&mut self, fact: Fact) -> Result<bool, KbError> {
        if fact.args.is_empty() {
            return Err(KbError::NoArguments { predicate: fact.predicate });
        }
        if fact.is_ontology() && fact.args.len() != 2 {
            return Err(KbError::OntologyArity { predicate: fact.predicate, got: fact.args.len() });
        }
        let entry = self
            .preds
            .entry(fact.predicate.clone())
            .or_insert_with(|| PredFacts { arity: fact.args.len(), ..PredFacts::default() });
        if entry.arity != fact.args.len() {
            return Err(KbError::ArityMismatch {
                predicate: fact.predicate,
                stored: entry.arity,
                got: fact.args.len(),
            });
        }
        if !self.facts.insert(fact.clone()) {
            return Ok(false);
        }
        entry.facts.insert(fact.clone());
        for (i, arg) in fact.args.iter().enumerate() {
            entry.by_arg.entry((i, arg.clone())).or_default().insert(fact.clone());
        }
        match fact.predicate.as_str() {
            "isa" => {
                self.isa_members
                    .entry(fact.args[1].clone())
                    .or_default()
                    .insert(fact.args[0].clone());
                self.cache.instances.write().expect("cache lock").clear();
            }
            "genls" => {
                self.genls_up
                    .entry(fact.args[0].clone())
                    .or_default()
                    .insert(fact.args[1].clone());
                self.genls_down
                    .entry(fact.args[1].clone())
                    .or_default()
                    .insert(fact.args[0].clone());
                self.cache.instances.write().expect("cache lock").clear();
            }
            "genlPreds" => {
                self.genl_preds_up
                    .entry(fact.args[0].clone())
                    .or_default()
                    .insert(fact.args[1].clone());
                self.genl_preds_down
                    .entry(fact.args[1].clone())
                    .or_default()
                    .insert(fact.args[0].clone());
                self.cache.specializations.write().expect("cache lock").clear();
            }
            _ => {}
        }
        Ok(true)
    }

    pub fn add_constraint(&mut self, constraint: ArgConstraint) {
        self.constraints
            .insert((constraint.predicate, constraint.position), constraint.collection);
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// All facts in canonical (sorted) order.
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    /// The facts of one predicate in canonical order.
    pub fn facts_of(&self, predicate: &Symbol) -> Option<&BTreeSet<Fact>> {
        self.preds.get(predicate).map(|p| &p.facts)
    }

    pub fn arity(&self, predicate: &Symbol) -> Option<usize> {
        self.preds.get(predicate).map(|p| p.arity)
    }

    /// Constraint collection for (predicate, 1-based position), if declared.
    pub fn constraint(&self, predicate: &Symbol, position: usize) -> Option<&Symbol> {
        self.constraints.get(&(predicate.clone(), position))
    }

    pub fn constraints(&self) -> impl Iterator<Item = ArgConstraint> + '_ {
        self.constraints.iter().map(|((predicate, position), collection)| ArgConstraint {
            predicate: predicate.clone(),
            position: *position,
            collection: collection.clone(),
        })
    }

    /// Facts of `predicate` matching a pattern of optional constants. The
    /// most selective position index serves as the candidate set; `None`
    /// entries are wildcards. Unknown predicates match nothing.
    pub fn facts_matching(
        &self,
        predicate: &Symbol,
        pattern: &[Option<Symbol>],
    ) -> Result<Vec<&Fact>, KbError> {
        let Some(entry) = self.preds.get(predicate) else {
            return Ok(Vec::new());
        };
        if entry.arity != pattern.len() {
            return Err(KbError::ArityMismatch {
                predicate: predicate.clone(),
                stored: entry.arity,
                got: pattern.len(),
            });
        }
        let mut narrowest: Option<&BTreeSet<Fact>> = None;
        for (i, slot) in pattern.iter().enumerate() {
            if let Some(constant) = slot {
                match entry.by_arg.get(&(i, constant.clone())) {
                    Some(set) => {
                        if narrowest.is_none_or(|n| set.len() < n.len()) {
                            narrowest = Some(set);
                        }
                    }
                    None => return Ok(Vec::new()),
                }
            }
        }
        let candidates = narrowest.unwrap_or(&entry.facts);
        Ok(candidates
            .iter()
            .filter(|fact| {
                pattern
                    .iter()
                    .zip(&fact.args)
                    .all(|(slot, arg)| slot.as_ref().is_none_or(|c| c == arg))
            })
            .collect())
    }

    /// Every symbol used as a collection: `isa` targets, both sides of
    /// `genls`, and `argIsa` collections.
    pub fn collections(&self) -> BTreeSet<Symbol> {
        let mut out: BTreeSet<Symbol> = self.isa_members.keys().cloned().collect();
        for (sub, supers) in &self.genls_up {
            out.insert(sub.clone());
            out.extend(supers.iter().cloned());
        }
        out.extend(self.constraints.values().cloned());
        out
    }

    /// Instances of `collection` under the reflexive-transitive `genls`
    /// closure: direct members plus the members of every subcollection
    /// reachable downward. Memoized until the ontology changes.
    pub fn instances_of(&self, collection: &Symbol) -> Arc<BTreeSet<Symbol>> {
        if let Some(hit) = self.cache.instances.read().expect("cache lock").get(collection) {
            return hit.clone();
        }
        let mut members = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([collection.clone()]);
        while let Some(node) = queue.pop_front() {
            if !seen.insert(node.clone()) {
                continue;
            }
            if let Some(direct) = self.isa_members.get(&node) {
                members.extend(direct.iter().cloned());
            }
            if let Some(subs) = self.genls_down.get(&node) {
                queue.extend(subs.iter().cloned());
            }
        }
        let members = Arc::new(members);
        self.cache
            .instances
            .write()
            .expect("cache lock")
            .insert(collection.clone(), members.clone());
        members
    }

    /// True iff the collection has strictly fewer instances than `threshold`.
    pub fn is_specific(&self, collection: &Symbol, threshold: usize) -> bool {
        self.instances_of(collection).len() < threshold
    }

    /// All predicates whose `genlPreds` generalization chain reaches
    /// `predicate`, including `predicate` itself. Memoized.
    pub fn genl_preds_specializations(&self, predicate: &Symbol) -> Arc<BTreeSet<Symbol>> {
        if let Some(hit) = self.cache.specializations.read().expect("cache lock").get(predicate) {
            return hit.clone();
        }
        let mut specs = BTreeSet::new();
        let mut queue = VecDeque::from([predicate.clone()]);
        while let Some(node) = queue.pop_front() {
            if !specs.insert(node.clone()) {
                continue;
            }
            if let Some(down) = self.genl_preds_down.get(&node) {
                queue.extend(down.iter().cloned());
            }
        }
        let specs = Arc::new(specs);
        self.cache
            .specializations
            .write()
            .expect("cache lock")
            .insert(predicate.clone(), specs.clone());
        specs
    }

    /// Non-ontology facts divided by the distinct entities appearing in
    /// them; 0.0 when no such facts exist.
    pub fn density(&self) -> f64 {
        let mut count = 0usize;
        let mut entities = BTreeSet::new();
        for fact in &self.facts {
            if fact.is_ontology() {
                continue;
            }
            count += 1;
            entities.extend(fact.args.iter());
        }
        if entities.is_empty() {
            0.0
        } else {
            count as f64 / entities.len() as f64
        }
    }

    /// The KB as canonical statements: sorted facts, then sorted constraints.
    pub fn to_statements(&self) -> Vec<crate::kbformat::Statement> {
        use crate::kbformat::Statement;
        let mut out: Vec<Statement> = self.facts.iter().cloned().map(Statement::Fact).collect();
        out.extend(self.constraints().map(Statement::Constraint));
        out
    }

    #[cfg(test)]
    fn index_is_consistent(&self) -> bool {
        let rebuilt: BTreeSet<&Fact> = self.preds.values().flat_map(|p| p.facts.iter()).collect();
        let stored: BTreeSet<&Fact> = self.facts.iter().collect();
        if rebuilt != stored {
            return false;
        }
        self.preds.values().all(|entry| {
            entry.by_arg.iter().all(|((i, c), facts)| {
                facts.iter().all(|f| entry.facts.contains(f) && &f.args[*i] == c)
            }) && entry.facts.iter().all(|f| {
                f.args
                    .iter()
                    .enumerate()
                    .all(|(i, a)| entry.by_arg.get(&(i, a.clone())).is_some_and(|s| s.contains(f)))
            })
        })
    }
}
