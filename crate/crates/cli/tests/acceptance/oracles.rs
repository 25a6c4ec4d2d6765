//! Independent reference implementations the acceptance checks compare
//! against. Everything here works on plain string tuples and does its own
//! graph walks and fixpoint iteration; none of it routes through the
//! library's search or closure code.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// A ground fact: predicate plus constant arguments.
pub type OFact = (String, Vec<String>);

/// A term in an oracle pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum OTerm {
    V(String),
    C(String),
}

/// An atom pattern: predicate plus terms.
pub type OAtom = (String, Vec<OTerm>);

#[derive(Debug, Clone)]
pub struct OClause {
    pub head: OAtom,
    pub body: Vec<OAtom>,
}

/// All predicates whose generalization chain (following `edges` as
/// specialization -> generalization) reaches `pred`, plus `pred` itself.
pub fn specialization_closure(edges: &[(String, String)], pred: &str) -> BTreeSet<String> {
    let mut down: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (s, g) in edges {
        down.entry(g.as_str()).or_default().push(s.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([pred.to_string()]);
    while let Some(node) = queue.pop_front() {
        if !seen.insert(node.clone()) {
            continue;
        }
        if let Some(subs) = down.get(node.as_str()) {
            queue.extend(subs.iter().map(|s| s.to_string()));
        }
    }
    seen
}

/// Upward reachability over a raw edge list (child -> parent), including the
/// start node. Used as the ontology closure reference.
pub fn reachable_up(edges: &[(String, String)], from: &str) -> BTreeSet<String> {
    let mut up: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (child, parent) in edges {
        up.entry(child.as_str()).or_default().push(parent.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([from.to_string()]);
    while let Some(node) = queue.pop_front() {
        if !seen.insert(node.clone()) {
            continue;
        }
        if let Some(parents) = up.get(node.as_str()) {
            queue.extend(parents.iter().map(|s| s.to_string()));
        }
    }
    seen
}

/// Reference instance computation: every entity with an `isa` link into a
/// collection whose upward `genls` closure contains `collection`.
pub fn oracle_instances(
    isa: &[(String, String)],
    genls: &[(String, String)],
    collection: &str,
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (entity, direct) in isa {
        if reachable_up(genls, direct).contains(collection) {
            out.insert(entity.clone());
        }
    }
    out
}

fn match_against(
    pattern: &OAtom,
    fact: &OFact,
    specs: &BTreeSet<String>,
    env: &BTreeMap<String, String>,
) -> Option<BTreeMap<String, String>> {
    if !specs.contains(&fact.0) || pattern.1.len() != fact.1.len() {
        return None;
    }
    let mut env = env.clone();
    for (term, value) in pattern.1.iter().zip(&fact.1) {
        match term {
            OTerm::C(c) => {
                if c != value {
                    return None;
                }
            }
            OTerm::V(v) => match env.get(v) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    env.insert(v.clone(), value.clone());
                }
            },
        }
    }
    Some(env)
}

fn instantiate(head: &OAtom, env: &BTreeMap<String, String>) -> Option<OFact> {
    let mut args = Vec::with_capacity(head.1.len());
    for term in &head.1 {
        match term {
            OTerm::C(c) => args.push(c.clone()),
            OTerm::V(v) => args.push(env.get(v)?.clone()),
        }
    }
    Some((head.0.clone(), args))
}

/// Naive level-wise forward chaining. Level 0 is the stored facts; level k
/// adds every clause head groundable from level k-1 facts, where a body atom
/// of predicate p matches facts of any specialization of p at no extra cost.
/// The result is the set of facts derivable with rule tree height at most
/// `depth`.
pub fn forward_fragment(
    facts: &[OFact],
    clauses: &[OClause],
    genl_edges: &[(String, String)],
    depth: usize,
) -> BTreeSet<OFact> {
    let mut level: BTreeSet<OFact> = facts.iter().cloned().collect();
    let spec_cache: BTreeMap<String, BTreeSet<String>> = clauses
        .iter()
        .flat_map(|c| c.body.iter().map(|a| a.0.clone()))
        .map(|p| {
            let closure = specialization_closure(genl_edges, &p);
            (p, closure)
        })
        .collect();
    for _ in 0..depth {
        let derived: Vec<OFact> = {
            // bucket the current level by predicate so each body atom only
            // scans facts its specialization closure can match
            let mut by_pred: BTreeMap<&str, Vec<&OFact>> = BTreeMap::new();
            for fact in &level {
                by_pred.entry(fact.0.as_str()).or_default().push(fact);
            }
            let mut derived = Vec::new();
            for clause in clauses {
                let mut envs = vec![BTreeMap::new()];
                for atom in &clause.body {
                    let specs = &spec_cache[&atom.0];
                    let mut grown = Vec::new();
                    for env in &envs {
                        for spec in specs {
                            for fact in by_pred.get(spec.as_str()).into_iter().flatten() {
                                if let Some(env2) = match_against(atom, fact, specs, env) {
                                    grown.push(env2);
                                }
                            }
                        }
                    }
                    envs = grown;
                    if envs.is_empty() {
                        break;
                    }
                }
                for env in envs {
                    if let Some(fact) = instantiate(&clause.head, &env) {
                        derived.push(fact);
                    }
                }
            }
            derived
        };
        let before = level.len();
        level.extend(derived);
        if level.len() == before {
            break;
        }
    }
    level
}

/// Answers to a query over a derived fragment: each match binds the query's
/// variables consistently against a fact of the query predicate or one of
/// its specializations.
pub fn query_answers(
    fragment: &BTreeSet<OFact>,
    genl_edges: &[(String, String)],
    query: &OAtom,
) -> BTreeSet<BTreeMap<String, String>> {
    let specs = specialization_closure(genl_edges, &query.0);
    let mut out = BTreeSet::new();
    for fact in fragment {
        if let Some(env) = match_against(query, fact, &specs, &BTreeMap::new()) {
            out.insert(env);
        }
    }
    out
}

fn distinct_vars(atoms: &[&OAtom]) -> BTreeSet<String> {
    let mut vars = BTreeSet::new();
    for atom in atoms {
        for term in &atom.1 {
            if let OTerm::V(v) = term {
                vars.insert(v.clone());
            }
        }
    }
    vars
}

fn apply_assignment(atom: &OAtom, assignment: &BTreeMap<String, String>) -> Vec<String> {
    atom.1
        .iter()
        .map(|t| match t {
            OTerm::C(c) => c.clone(),
            OTerm::V(v) => assignment[v].clone(),
        })
        .collect()
}

/// Exhaustive unifiability check for atom pairs with at most two distinct
/// variables overall. For flat terms, two atoms unify iff some ground
/// assignment drawn from the atoms' own constants plus one fresh constant
/// makes them identical.
pub fn ground_unifiable(a: &OAtom, b: &OAtom) -> bool {
    if a.0 != b.0 || a.1.len() != b.1.len() {
        return false;
    }
    let vars: Vec<String> = distinct_vars(&[a, b]).into_iter().collect();
    assert!(vars.len() <= 2, "oracle only covers pairs with at most two distinct variables");
    let mut universe: BTreeSet<String> = BTreeSet::new();
    for atom in [a, b] {
        for term in &atom.1 {
            if let OTerm::C(c) = term {
                universe.insert(c.clone());
            }
        }
    }
    universe.insert("image-fresh-constant".to_string());
    let universe: Vec<String> = universe.into_iter().collect();
    let mut assignments: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for var in &vars {
        let mut grown = Vec::new();
        for assignment in &assignments {
            for value in &universe {
                let mut next = assignment.clone();
                next.insert(var.clone(), value.clone());
                grown.push(next);
            }
        }
        assignments = grown;
    }
    assignments
        .iter()
        .any(|assignment| apply_assignment(a, assignment) == apply_assignment(b, assignment))
}
