//! Seeded random case generators for the acceptance checks: small rule KBs,
//! unification atom pairs, ontology DAGs, and reader statement files.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use coordlearn_core::kbstore::Fact;
use coordlearn_core::reasoner::{Atom, HornClause, Term};
use coordlearn_core::Symbol;

use crate::oracles::{OAtom, OClause, OFact, OTerm};

pub fn lib_atom(a: &OAtom) -> Atom {
    let args = a
        .1
        .iter()
        .map(|t| match t {
            OTerm::V(v) => Term::Var(Symbol::new(v)),
            OTerm::C(c) => Term::Const(Symbol::new(c)),
        })
        .collect();
    Atom::new(a.0.as_str(), args)
}

pub fn lib_fact(f: &OFact) -> Fact {
    Fact::new(f.0.as_str(), f.1.iter().map(Symbol::new).collect())
}

pub fn lib_clause(c: &OClause) -> HornClause {
    HornClause {
        consequent: lib_atom(&c.head),
        antecedents: c.body.iter().map(lib_atom).collect(),
    }
}

/// One random reasoner case: ground facts, predicate-generalization edges,
/// range-restricted clauses, and queries to pose.
pub struct ReasonerCase {
    pub facts: Vec<OFact>,
    pub genl_edges: Vec<(String, String)>,
    pub clauses: Vec<OClause>,
    pub queries: Vec<OAtom>,
}

pub fn reasoner_case(rng: &mut ChaCha8Rng) -> ReasonerCase {
    let n_preds = rng.gen_range(2..=5usize);
    let arities: Vec<usize> = (0..n_preds).map(|_| rng.gen_range(1..=2)).collect();
    let pred = |i: usize| format!("p{i}");
    let n_consts = rng.gen_range(3..=8usize);
    let constant = |i: usize| format!("c{i}");

    let mut facts = BTreeSet::new();
    for _ in 0..rng.gen_range(5..=40usize) {
        let p = rng.gen_range(0..n_preds);
        let args: Vec<String> =
            (0..arities[p]).map(|_| constant(rng.gen_range(0..n_consts))).collect();
        facts.insert((pred(p), args));
    }

    // Specialization edges point from a lower predicate index to a higher
    // one. Together with stratified clause heads below, goal expansion can
    // only descend through the indices, so the depth-first search stays
    // tractable on every generated case.
    let mut genl_edges = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=2usize) {
        let a = rng.gen_range(0..n_preds);
        let b = rng.gen_range(0..n_preds);
        if a != b && arities[a] == arities[b] {
            let (s, g) = (a.min(b), a.max(b));
            genl_edges.insert((pred(s), pred(g)));
        }
    }

    let term = |rng: &mut ChaCha8Rng, bound: &mut Vec<String>| {
        if rng.gen_bool(0.7) {
            let v = format!("v{}", rng.gen_range(0..3));
            bound.push(v.clone());
            OTerm::V(v)
        } else {
            OTerm::C(constant(rng.gen_range(0..n_consts)))
        }
    };
    // Heads only reuse body variables, keeping every derivation ground.
    let head_of = |rng: &mut ChaCha8Rng, hp: usize, bound: &[String]| {
        let args = (0..arities[hp])
            .map(|_| {
                if !bound.is_empty() && rng.gen_bool(0.8) {
                    OTerm::V(bound[rng.gen_range(0..bound.len())].clone())
                } else {
                    OTerm::C(constant(rng.gen_range(0..n_consts)))
                }
            })
            .collect();
        (pred(hp), args)
    };

    let mut clauses = Vec::new();
    let mut recursion_budget = 1usize;
    for _ in 0..rng.gen_range(0..=6usize) {
        if recursion_budget > 0 && rng.gen_bool(0.2) {
            // One self-feeding single-atom clause per case: recursion that
            // only the depth bound cuts off.
            recursion_budget -= 1;
            let hp = rng.gen_range(0..n_preds);
            let mut bound = Vec::new();
            let args: Vec<OTerm> = (0..arities[hp]).map(|_| term(rng, &mut bound)).collect();
            bound.sort();
            bound.dedup();
            let head = head_of(rng, hp, &bound);
            clauses.push(OClause { head, body: vec![(pred(hp), args)] });
            continue;
        }
        // Stratified clause: head predicate strictly above every body
        // predicate, so derivations cannot loop back into the clause.
        let hp = rng.gen_range(1..n_preds);
        let body_len = if rng.gen_bool(0.15) { 3 } else { rng.gen_range(1..=2) };
        let mut body = Vec::new();
        let mut bound = Vec::new();
        for _ in 0..body_len {
            let p = rng.gen_range(0..hp);
            let args = (0..arities[p]).map(|_| term(rng, &mut bound)).collect();
            body.push((pred(p), args));
        }
        bound.sort();
        bound.dedup();
        let head = head_of(rng, hp, &bound);
        clauses.push(OClause { head, body });
    }

    let mut queries = Vec::new();
    for _ in 0..5 {
        let p = rng.gen_range(0..n_preds);
        let args = (0..arities[p])
            .map(|_| {
                if rng.gen_bool(0.6) {
                    OTerm::V(format!("q{}", rng.gen_range(0..2usize)))
                } else {
                    OTerm::C(constant(rng.gen_range(0..n_consts)))
                }
            })
            .collect();
        queries.push((pred(p), args));
    }

    ReasonerCase {
        facts: facts.into_iter().collect(),
        genl_edges: genl_edges.into_iter().collect(),
        clauses,
        queries,
    }
}

fn random_term(rng: &mut ChaCha8Rng, var_pool: &[&str]) -> OTerm {
    if rng.gen_bool(0.45) {
        OTerm::V(var_pool[rng.gen_range(0..var_pool.len())].to_string())
    } else {
        OTerm::C(["a", "b", "c"][rng.gen_range(0..3)].to_string())
    }
}

/// A random atom pair. With `two_var_budget` the pair draws from a shared
/// two-variable pool, within reach of the exhaustive oracle.
pub fn atom_pair(rng: &mut ChaCha8Rng, two_var_budget: bool) -> (OAtom, OAtom) {
    let pool: &[&str] = if two_var_budget { &["x", "y"] } else { &["x", "y", "z", "w"] };
    let pred_a = format!("p{}", rng.gen_range(0..2));
    let arity_a = rng.gen_range(0..=3usize);
    let (pred_b, arity_b) = if rng.gen_bool(0.8) {
        (pred_a.clone(), arity_a)
    } else {
        (format!("p{}", rng.gen_range(0..2)), rng.gen_range(0..=3))
    };
    let a = (pred_a, (0..arity_a).map(|_| random_term(rng, pool)).collect());
    let b = (pred_b, (0..arity_b).map(|_| random_term(rng, pool)).collect());
    (a, b)
}

/// One random ontology: genls DAG (child -> parent, edges point to higher
/// indices), isa links into it, and an acyclic genlPreds edge set.
pub struct OntologyCase {
    pub isa: Vec<(String, String)>,
    pub genls: Vec<(String, String)>,
    pub genl_preds: Vec<(String, String)>,
    pub collections: Vec<String>,
    pub predicates: Vec<String>,
}

pub fn ontology_case(rng: &mut ChaCha8Rng) -> OntologyCase {
    let n = rng.gen_range(3..=20usize);
    let node = |i: usize| format!("n{i}");
    let mut genls = BTreeSet::new();
    for i in 0..n.saturating_sub(1) {
        for _ in 0..rng.gen_range(0..=2usize) {
            let j = rng.gen_range(i + 1..n);
            genls.insert((node(i), node(j)));
        }
    }
    let mut isa = BTreeSet::new();
    for e in 0..rng.gen_range(5..=30usize) {
        isa.insert((format!("e{e}"), node(rng.gen_range(0..n))));
    }
    let np = rng.gen_range(2..=8usize);
    let pred = |i: usize| format!("q{i}");
    let mut genl_preds = BTreeSet::new();
    for i in 0..np.saturating_sub(1) {
        for _ in 0..rng.gen_range(0..=2usize) {
            let j = rng.gen_range(i + 1..np);
            genl_preds.insert((pred(i), pred(j)));
        }
    }
    OntologyCase {
        isa: isa.into_iter().collect(),
        genls: genls.into_iter().collect(),
        genl_preds: genl_preds.into_iter().collect(),
        collections: (0..n).map(node).collect(),
        predicates: (0..np).map(pred).collect(),
    }
}

/// A random reader input: facts, constraints, rules, and templates with
/// noisy comments, blank lines, and line breaks.
pub fn statement_file(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let preds = ["r0", "r1", "r2", "r3"];
    let consts = ["k0", "k1", "k2", "k3", "k4", "k5"];
    let colls = ["C0", "C1", "C2"];
    let vars = ["?va", "?vb", "?vc"];
    let pick = |rng: &mut ChaCha8Rng, pool: &[&str]| pool[rng.gen_range(0..pool.len())].to_string();

    for _ in 0..rng.gen_range(1..=30usize) {
        if rng.gen_bool(0.2) {
            out.push_str("; noise comment\n");
        }
        if rng.gen_bool(0.1) {
            out.push('\n');
        }
        match rng.gen_range(0..4) {
            0 => {
                // ground fact, arity 1–3
                let arity = rng.gen_range(1..=3);
                out.push('(');
                out.push_str(&pick(rng, &preds));
                for _ in 0..arity {
                    out.push(' ');
                    out.push_str(&pick(rng, &consts));
                }
                out.push_str(")\n");
            }
            1 => {
                out.push_str(&format!(
                    "(argIsa {} {} {})\n",
                    pick(rng, &preds),
                    rng.gen_range(1..=3),
                    pick(rng, &colls)
                ));
            }
            2 => {
                // rule with 1-2 antecedents, sometimes split across lines
                let sep = if rng.gen_bool(0.4) { "\n    " } else { " " };
                let mut rule = format!("(<= ({} {} {})", pick(rng, &preds), pick(rng, &vars), pick(rng, &vars));
                for _ in 0..rng.gen_range(1..=2) {
                    rule.push_str(sep);
                    rule.push_str(&format!("({} {} {})", pick(rng, &preds), pick(rng, &vars), pick(rng, &consts)));
                }
                rule.push_str(")\n");
                out.push_str(&rule);
            }
            _ => {
                // template: pattern with exactly two distinct variables
                let (pv, av) = (vars[0], vars[1]);
                out.push_str(&format!(
                    "(template t{} ({} {pv} {av}) {} {av})\n",
                    rng.gen_range(0..100),
                    pick(rng, &preds),
                    pick(rng, &colls),
                ));
            }
        }
    }
    out
}
