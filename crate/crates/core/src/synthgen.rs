//! Seeded synthetic corpora: collection trees, entity pools, dense
//! coordinated fact blocks, background noise regions, and rule chains that
//! make the facts answerable through templates. Also houses the fixed
//! birthplace fixture whose four canonical joint actions pay 42/0/0/58.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kbstore::{ArgConstraint, Fact, KbError, KnowledgeBase};
use crate::qa::QuestionTemplate;
use crate::reasoner::HornClause;
use crate::symbol::Symbol;
use crate::{Corpus, Statement};

/// A binary predicate together with its two argument domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSpec {
    pub name: Symbol,
    pub domain1: Symbol,
    pub domain2: Symbol,
}

/// Demands exactly `count` facts of `predicate` linking instances of `c1`
/// to instances of `c2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec {
    pub predicate: Symbol,
    pub c1: Symbol,
    pub c2: Symbol,
    pub count: usize,
}

/// Background facts: fills a share of the (c1 × c2) pair space of
/// `predicate`, skipping pairs claimed by that predicate's blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub predicate: Symbol,
    pub c1: Symbol,
    pub c2: Symbol,
    /// Fraction of the remaining pair space to fill, in [0, 1].
    pub density: f64,
}

/// A rule chain `(<= (consequent ?x0 ?xk) (l1 ?x0 ?x1) … (lk ?xk-1 ?xk))`
/// plus the template asking `consequent` over `param_collection`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    pub template_name: Symbol,
    pub consequent: Symbol,
    pub param_collection: Symbol,
    pub links: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Children per collection-tree node.
    pub branching: usize,
    /// Tree depth below each domain root; 0 puts entities directly in roots.
    pub depth: usize,
    pub entities_per_leaf: usize,
    /// Root collection names.
    pub domains: Vec<Symbol>,
    pub predicates: Vec<PredicateSpec>,
    pub blocks: Vec<BlockSpec>,
    pub regions: Vec<RegionSpec>,
    pub chains: Vec<ChainSpec>,
    /// Pad plain facts until `density()` lands within ±10% of this.
    pub target_density: Option<f64>,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator shape: {0}")]
    BadShape(&'static str),
    #[error("unknown collection {collection}")]
    UnknownCollection { collection: Symbol },
    #[error("unknown predicate {predicate}")]
    UnknownPredicate { predicate: Symbol },
    #[error("block ({predicate} {c1} {c2}) wants {requested} facts but the pair space holds {capacity}")]
    BlockTooLarge { predicate: Symbol, c1: Symbol, c2: Symbol, requested: usize, capacity: usize },
    #[error("two blocks of {predicate} overlap; exact counts cannot both hold")]
    OverlappingBlocks { predicate: Symbol },
    #[error("chain {template} has no link predicates")]
    EmptyChain { template: Symbol },
    #[error("cannot reach density {target:.3} (achieved {achieved:.3})")]
    DensityUnreachable { target: f64, achieved: f64 },
    #[error("generated fact rejected: {0}")]
    Store(#[from] KbError),
}

fn entity_width(entities_per_leaf: usize) -> usize {
    entities_per_leaf.saturating_sub(1).to_string().len().max(2)
}

/// Sorted instance vector, or an error naming the collection when empty and
/// unknown to the ontology.
fn instances(kb: &KnowledgeBase, collection: &Symbol) -> Result<Vec<Symbol>, GenError> {
    let members = kb.instances_of(collection);
    if members.is_empty() && !kb.collections().contains(collection) {
        return Err(GenError::UnknownCollection { collection: collection.clone() });
    }
    Ok(members.iter().cloned().collect())
}

/// All (entity, entity) pairs of a block's region, as a set for overlap and
/// exclusion arithmetic.
fn region_pairs(
    kb: &KnowledgeBase,
    c1: &Symbol,
    c2: &Symbol,
) -> Result<BTreeSet<(Symbol, Symbol)>, GenError> {
    let left = instances(kb, c1)?;
    let right = instances(kb, c2)?;
    let mut pairs = BTreeSet::new();
    for a in &left {
        for b in &right {
            pairs.insert((a.clone(), b.clone()));
        }
    }
    Ok(pairs)
}

pub fn generate(cfg: &GenConfig) -> Result<Corpus, GenError> {
    if cfg.branching == 0 {
        return Err(GenError::BadShape("branching must be at least 1"));
    }
    if cfg.entities_per_leaf == 0 {
        return Err(GenError::BadShape("entities_per_leaf must be at least 1"));
    }
    if cfg.domains.is_empty() {
        return Err(GenError::BadShape("at least one domain is required"));
    }
    for pred in &cfg.predicates {
        if crate::kbstore::is_ontology_predicate(&pred.name) {
            return Err(GenError::BadShape("predicates must not reuse ontology relation names"));
        }
    }

    let mut kb = KnowledgeBase::new();
    let width = entity_width(cfg.entities_per_leaf);

    // collection trees and entity pools
    for domain in &cfg.domains {
        let mut frontier = vec![domain.clone()];
        for _ in 0..cfg.depth {
            let mut next = Vec::new();
            for parent in &frontier {
                for b in 0..cfg.branching {
                    let child = Symbol::new(format!("{parent}-{b}"));
                    kb.assert_fact(Fact::binary("genls", child.clone(), parent.clone()))?;
                    next.push(child);
                }
            }
            frontier = next;
        }
        for leaf in &frontier {
            for e in 0..cfg.entities_per_leaf {
                let entity = Symbol::new(format!("{leaf}-e{e:0width$}"));
                kb.assert_fact(Fact::binary("isa", entity, leaf.clone()))?;
            }
        }
    }

    let declared: BTreeSet<&Symbol> = cfg.predicates.iter().map(|p| &p.name).collect();
    let require_declared = |predicate: &Symbol| -> Result<(), GenError> {
        if declared.contains(predicate) {
            Ok(())
        } else {
            Err(GenError::UnknownPredicate { predicate: predicate.clone() })
        }
    };

    for pred in &cfg.predicates {
        instances(&kb, &pred.domain1)?;
        instances(&kb, &pred.domain2)?;
        kb.add_constraint(ArgConstraint {
            predicate: pred.name.clone(),
            position: 1,
            collection: pred.domain1.clone(),
        });
        kb.add_constraint(ArgConstraint {
            predicate: pred.name.clone(),
            position: 2,
            collection: pred.domain2.clone(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // exact coordination blocks, in declaration order
    let mut block_regions: Vec<(Symbol, BTreeSet<(Symbol, Symbol)>)> = Vec::new();
    for block in &cfg.blocks {
        require_declared(&block.predicate)?;
        let pairs = region_pairs(&kb, &block.c1, &block.c2)?;
        for (predicate, earlier) in &block_regions {
            if *predicate == block.predicate && !earlier.is_disjoint(&pairs) {
                return Err(GenError::OverlappingBlocks { predicate: block.predicate.clone() });
            }
        }
        if block.count > pairs.len() {
            return Err(GenError::BlockTooLarge {
                predicate: block.predicate.clone(),
                c1: block.c1.clone(),
                c2: block.c2.clone(),
                requested: block.count,
                capacity: pairs.len(),
            });
        }
        let ordered: Vec<&(Symbol, Symbol)> = pairs.iter().collect();
        for k in rand::seq::index::sample(&mut rng, ordered.len(), block.count) {
            let (a, b) = ordered[k];
            kb.assert_fact(Fact::binary(block.predicate.clone(), a.clone(), b.clone()))?;
        }
        block_regions.push((block.predicate.clone(), pairs));
    }

    // background noise regions, skipping same-predicate block pairs
    for region in &cfg.regions {
        require_declared(&region.predicate)?;
        if !(0.0..=1.0).contains(&region.density) {
            return Err(GenError::BadShape("region density must lie in [0, 1]"));
        }
        let mut pairs = region_pairs(&kb, &region.c1, &region.c2)?;
        for (predicate, claimed) in &block_regions {
            if *predicate == region.predicate {
                pairs.retain(|p| !claimed.contains(p));
            }
        }
        pairs.retain(|(a, b)| {
            !kb.contains(&Fact::binary(region.predicate.clone(), a.clone(), b.clone()))
        });
        let allowed: Vec<(Symbol, Symbol)> = pairs.into_iter().collect();
        let count = (region.density * allowed.len() as f64).round() as usize;
        for k in rand::seq::index::sample(&mut rng, allowed.len(), count) {
            let (a, b) = &allowed[k];
            kb.assert_fact(Fact::binary(region.predicate.clone(), a.clone(), b.clone()))?;
        }
    }

    // rule chains and their templates
    let mut axioms = Vec::new();
    let mut templates = Vec::new();
    for chain in &cfg.chains {
        if chain.links.is_empty() {
            return Err(GenError::EmptyChain { template: chain.template_name.clone() });
        }
        for link in &chain.links {
            require_declared(link)?;
        }
        instances(&kb, &chain.param_collection)?;
        let mut text = format!("(<= ({} ?x0 ?x{})", chain.consequent, chain.links.len());
        for (i, link) in chain.links.iter().enumerate() {
            text.push_str(&format!(" ({link} ?x{i} ?x{})", i + 1));
        }
        text.push(')');
        text.push('\n');
        text.push_str(&format!(
            "(template {} ({} ?x0 ?xk) {} ?xk)\n",
            chain.template_name, chain.consequent, chain.param_collection
        ));
        let parsed = crate::kbformat::parse_kb(&text).expect("generated chain text is well-formed");
        for stmt in parsed {
            match stmt.statement {
                Statement::Rule(r) => axioms.push(r),
                Statement::Template(t) => templates.push(t),
                _ => unreachable!("chain text holds one rule and one template"),
            }
        }
    }

    if let Some(target) = cfg.target_density {
        pad_to_density(&mut kb, cfg, target, &mut rng)?;
    }

    Ok(Corpus { kb, axioms, templates })
}

/// Entities mentioned by plain facts (the denominator of `density()`).
fn counted_entities(kb: &KnowledgeBase) -> BTreeSet<Symbol> {
    let mut entities = BTreeSet::new();
    for fact in kb.facts().filter(|f| !f.is_ontology()) {
        entities.extend(fact.args.iter().cloned());
    }
    entities
}

fn within_tolerance(achieved: f64, target: f64) -> bool {
    (achieved - target).abs() <= 0.1 * target
}

/// Raises density by linking already-counted entities, or lowers it by
/// adding fresh two-entity filler facts, until within ±10% of `target`.
fn pad_to_density(
    kb: &mut KnowledgeBase,
    cfg: &GenConfig,
    target: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(), GenError> {
    if target <= 0.0 {
        return Err(GenError::BadShape("target density must be positive"));
    }
    if within_tolerance(kb.density(), target) {
        return Ok(());
    }
    if kb.density() < target {
        // more facts over the same entities, staying clear of block regions
        let used = counted_entities(kb);
        let mut pool: Vec<(Symbol, Symbol, Symbol)> = Vec::new();
        for pred in &cfg.predicates {
            let left = instances(kb, &pred.domain1)?;
            let right = instances(kb, &pred.domain2)?;
            let mut blocked: Vec<BTreeSet<(Symbol, Symbol)>> = Vec::new();
            for block in cfg.blocks.iter().filter(|b| b.predicate == pred.name) {
                blocked.push(region_pairs(kb, &block.c1, &block.c2)?);
            }
            for a in left.iter().filter(|a| used.contains(*a)) {
                for b in right.iter().filter(|b| used.contains(*b)) {
                    let pair = (a.clone(), b.clone());
                    if blocked.iter().any(|set| set.contains(&pair)) {
                        continue;
                    }
                    if kb.contains(&Fact::binary(pred.name.clone(), a.clone(), b.clone())) {
                        continue;
                    }
                    pool.push((pred.name.clone(), a.clone(), b.clone()));
                }
            }
        }
        let entities = counted_entities(kb).len() as f64;
        let have = kb.facts().filter(|f| !f.is_ontology()).count();
        let need = ((target * entities).ceil() as usize).saturating_sub(have);
        if need > pool.len() {
            return Err(GenError::DensityUnreachable { target, achieved: kb.density() });
        }
        for k in rand::seq::index::sample(rng, pool.len(), need) {
            let (p, a, b) = &pool[k];
            kb.assert_fact(Fact::binary(p.clone(), a.clone(), b.clone()))?;
        }
    } else {
        // fresh isolated pairs dilute density toward 1/2
        if target <= 0.5 {
            return Err(GenError::DensityUnreachable { target, achieved: kb.density() });
        }
        let entities = counted_entities(kb).len() as f64;
        let facts = kb.density() * entities;
        let mut needed = ((facts - target * entities) / (2.0 * target - 1.0)).ceil() as usize;
        let mut next = 0usize;
        while needed > 0 {
            let a = Symbol::new(format!("Filler-e{next:04}"));
            let b = Symbol::new(format!("Filler-e{:04}", next + 1));
            kb.assert_fact(Fact::binary("isa", a.clone(), "FillerEntity"))?;
            kb.assert_fact(Fact::binary("isa", b.clone(), "FillerEntity"))?;
            kb.assert_fact(Fact::binary("fillerLink", a, b))?;
            next += 2;
            needed -= 1;
        }
    }
    let achieved = kb.density();
    if within_tolerance(achieved, target) {
        Ok(())
    } else {
        Err(GenError::DensityUnreachable { target, achieved })
    }
}

fn two(i: usize) -> String {
    format!("{i:02}")
}

/// The fixed two-predicate fixture: physicists born in cities, cities lying
/// in regions, split into a French side and a US side with no cross links.
/// Exactly 42 French questions and 58 US questions are answerable, and only
/// when both predicates' requests stay on one side.
pub fn birthplace_fixture() -> Corpus {
    let mut kb = KnowledgeBase::new();
    let mut add = |p: &str, a: String, b: String| {
        kb.assert_fact(Fact::binary(p, a, b)).expect("fixture facts are consistent");
    };

    for (child, parent) in [
        ("FrenchPhysicist", "Physicist"),
        ("USPhysicist", "Physicist"),
        ("FrenchCity", "City"),
        ("USCity", "City"),
        ("FrenchRegion", "Region"),
        ("USRegion", "Region"),
    ] {
        add("genls", child.to_string(), parent.to_string());
    }

    for i in 1..=80 {
        add("isa", format!("FrPhys-{}", two(i)), "FrenchPhysicist".to_string());
    }
    for i in 1..=58 {
        add("isa", format!("UsPhys-{}", two(i)), "USPhysicist".to_string());
    }
    for i in 1..=60 {
        add("isa", format!("FrCity-{}", two(i)), "FrenchCity".to_string());
        add("isa", format!("UsCity-{}", two(i)), "USCity".to_string());
    }
    for i in 1..=50 {
        add("isa", format!("FrReg-{}", two(i)), "FrenchRegion".to_string());
    }
    for i in 1..=55 {
        add("isa", format!("UsReg-{}", two(i)), "USRegion".to_string());
    }

    // French physicists 1–42 are born in the five region-covered cities;
    // 43–80 land in cities that never resolve to a region.
    for i in 1..=42 {
        add("bornIn", format!("FrPhys-{}", two(i)), format!("FrCity-{}", two((i - 1) % 5 + 1)));
    }
    for i in 43..=80 {
        add("bornIn", format!("FrPhys-{}", two(i)), format!("FrCity-{}", two(6 + (i - 43) % 55)));
    }
    // every US physicist is born in a region-covered city
    for i in 1..=58 {
        add("bornIn", format!("UsPhys-{}", two(i)), format!("UsCity-{}", two(i)));
    }
    for i in 1..=5 {
        add("cityInRegion", format!("FrCity-{}", two(i)), format!("FrReg-{}", two(i)));
    }
    for i in 1..=60 {
        add("cityInRegion", format!("UsCity-{}", two(i)), format!("UsReg-{}", two((i - 1) % 55 + 1)));
    }

    for (pred, pos, coll) in [
        ("bornIn", 1, "Physicist"),
        ("bornIn", 2, "City"),
        ("cityInRegion", 1, "City"),
        ("cityInRegion", 2, "Region"),
    ] {
        kb.add_constraint(ArgConstraint {
            predicate: Symbol::new(pred),
            position: pos,
            collection: Symbol::new(coll),
        });
    }

    let text = "\
(<= (bornInRegion ?p ?r) (bornIn ?p ?c) (cityInRegion ?c ?r))\n\
(template whereBorn (bornInRegion ?p ?r) Physicist ?r)\n";
    let (axioms, templates) = parse_rules_and_templates(text);
    Corpus { kb, axioms, templates }
}

/// The birthplace fixture plus cross-side born facts, so a single deviating
/// request degrades the reward instead of zeroing it.
pub fn graded_birthplace_fixture() -> Corpus {
    let mut corpus = birthplace_fixture();
    for i in 1..=10 {
        corpus
            .kb
            .assert_fact(Fact::binary(
                "bornIn",
                format!("FrPhys-{}", two(i)),
                format!("UsCity-{}", two(i)),
            ))
            .expect("cross facts are fresh");
    }
    for i in 1..=8 {
        corpus
            .kb
            .assert_fact(Fact::binary(
                "bornIn",
                format!("UsPhys-{}", two(i)),
                format!("FrCity-{}", two((i - 1) % 5 + 1)),
            ))
            .expect("cross facts are fresh");
    }
    corpus
}

fn parse_rules_and_templates(text: &str) -> (Vec<HornClause>, Vec<QuestionTemplate>) {
    let mut axioms = Vec::new();
    let mut templates = Vec::new();
    for stmt in crate::kbformat::parse_kb(text).expect("fixture text is well-formed") {
        match stmt.statement {
            Statement::Rule(r) => axioms.push(r),
            Statement::Template(t) => templates.push(t),
            _ => unreachable!("fixture text holds only rules and templates"),
        }
    }
    (axioms, templates)
}
