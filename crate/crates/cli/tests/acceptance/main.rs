//! End-to-end acceptance suite: one test per shipped guarantee. Each test
//! prints a PASS line with its runtime (visible under `--nocapture`) and
//! enforces a wall-clock ceiling pinned next to the check.

mod oracles;
mod randgen;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use coordlearn_core::game::build_agents;
use coordlearn_core::kbformat::{parse_kb, serialize, SourceStatement, Statement};
use coordlearn_core::learners::{best_equilibrium_fraction, matrix_self_play};
use coordlearn_core::reasoner::backchain;
use coordlearn_core::reasoner::unify;
use coordlearn_core::simulator::run_experiment;
use coordlearn_core::synthgen::birthplace_fixture;
use coordlearn_core::{
    qa, AblationSplit, Algorithm, Corpus, Fact, HornClause, InferenceLimits, JalParams,
    KnowledgeBase, LearningRequest, MatrixGame, MembershipScope, Symbol,
};
use coordlearn_cli::{load_corpus, RunSpec};

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..").join("fixtures")
}

fn finish(criterion: usize, label: &str, t0: Instant, limit: Duration) {
    let elapsed = t0.elapsed();
    assert!(
        elapsed <= limit,
        "criterion {criterion} exceeded its {limit:?} ceiling: took {elapsed:?}"
    );
    println!("acceptance {criterion} ({label}): PASS in {elapsed:.2?}");
}

/// Reward observed when a fixed joint choice of fact blocks is fetched into
/// an initially-empty working set.
fn forced_reward(corpus: &Corpus, requests: &[(&str, &str, &str)]) -> u64 {
    let mut split = AblationSplit::ablate(&corpus.kb, 0, 0).unwrap();
    let limits = InferenceLimits::default();
    let before = qa::evaluate(&split.working, &corpus.axioms, &corpus.templates, &limits);
    for (p, c1, c2) in requests {
        let request = LearningRequest {
            predicate: Symbol::new(p),
            c1: Symbol::new(c1),
            c2: Symbol::new(c2),
        };
        split.execute_request(&request, MembershipScope::Union);
    }
    let after = qa::evaluate(&split.working, &corpus.axioms, &corpus.templates, &limits);
    qa::reward(&before, &after).unwrap()
}

#[test]
fn criterion_1_birthplace_payoff_matrix() {
    let t0 = Instant::now();
    let corpus = birthplace_fixture();

    // Structure derivation at specificity threshold 100, depth 5: two
    // predicates x two argument slots, two side-specific actions each.
    let structure = build_agents(&corpus.kb, &corpus.axioms, &corpus.templates, 100, 5).unwrap();
    let roster: BTreeSet<(String, u8)> = structure
        .agents
        .iter()
        .map(|a| (a.predicate.as_str().to_string(), a.position))
        .collect();
    let expected: BTreeSet<(String, u8)> = [
        ("bornIn".to_string(), 1),
        ("bornIn".to_string(), 2),
        ("cityInRegion".to_string(), 1),
        ("cityInRegion".to_string(), 2),
    ]
    .into_iter()
    .collect();
    assert_eq!(roster, expected);
    for actions in &structure.action_sets {
        assert_eq!(actions.len(), 2, "each slot offers exactly the two side collections");
    }

    // Side-coherent joint choices pay the full block; mixed sides pay zero.
    let french = [
        ("bornIn", "FrenchPhysicist", "FrenchCity"),
        ("cityInRegion", "FrenchCity", "FrenchRegion"),
    ];
    let us = [("bornIn", "USPhysicist", "USCity"), ("cityInRegion", "USCity", "USRegion")];
    let french_then_us = [
        ("bornIn", "FrenchPhysicist", "FrenchCity"),
        ("cityInRegion", "USCity", "USRegion"),
    ];
    let us_then_french = [
        ("bornIn", "USPhysicist", "USCity"),
        ("cityInRegion", "FrenchCity", "FrenchRegion"),
    ];
    let matrix = [
        [forced_reward(&corpus, &french), forced_reward(&corpus, &french_then_us)],
        [forced_reward(&corpus, &us_then_french), forced_reward(&corpus, &us)],
    ];
    assert_eq!(matrix, [[42, 0], [0, 58]]);

    finish(1, "birthplace payoff matrix", t0, Duration::from_secs(10));
}

#[test]
fn criterion_2_stage_game_convergence() {
    let t0 = Instant::now();
    let game = MatrixGame::battle_of_sexes();
    let params = JalParams::default();
    assert_eq!(params.alpha, 0.5);
    assert_eq!(params.gamma, 0.0);
    assert_eq!(params.epsilon, 0.05);

    let equilibria = game.pure_nash_equilibria();
    assert_eq!(equilibria.len(), 2);

    let mut converged = 0;
    for seed in 0..20 {
        let history = matrix_self_play(&game, &params, 2000, seed);
        let (cell, fraction) = best_equilibrium_fraction(&game, &history, 200).unwrap();
        assert!(equilibria.contains(&cell));
        if fraction >= 0.85 {
            converged += 1;
        }
    }
    assert!(converged >= 16, "only {converged}/20 seeds converged to a pure equilibrium");

    finish(2, "stage-game convergence", t0, Duration::from_secs(30));
}

#[test]
fn criterion_3_coordination_beats_baseline() {
    let t0 = Instant::now();
    for conf in ["birthplace/run.conf", "generated/run.conf"] {
        let spec = RunSpec::from_file(&fixtures_dir().join(conf)).unwrap();
        assert_eq!(spec.experiment.episodes, 500);
        let corpus = load_corpus(&spec.source).unwrap();
        let mut wins = 0;
        let mut outcomes = Vec::new();
        for seed in 0..10u64 {
            let mut cfg = spec.experiment.clone();
            cfg.seed = seed;
            let metrics = run_experiment(&corpus, &cfg).unwrap();
            let base = metrics.for_algorithm(Algorithm::Baseline).unwrap().n_answers;
            let coord = metrics.for_algorithm(Algorithm::Coordination).unwrap().n_answers;
            if coord > base && coord * 10 >= base * 12 {
                wins += 1;
            }
            outcomes.push((seed, base, coord));
        }
        assert!(
            wins >= 8,
            "{conf}: coordination improved >=20% in only {wins}/10 seeds: {outcomes:?}"
        );
    }
    finish(3, "coordination beats baseline", t0, Duration::from_secs(300));
}

#[test]
fn criterion_4_backchain_matches_forward_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4acc);
    let limits = InferenceLimits::default();
    for case_idx in 0..100 {
        let case = randgen::reasoner_case(&mut rng);
        let mut kb = KnowledgeBase::new();
        for fact in &case.facts {
            kb.assert_fact(randgen::lib_fact(fact)).unwrap();
        }
        for (s, g) in &case.genl_edges {
            kb.assert_fact(Fact::binary("genlPreds", s.as_str(), g.as_str())).unwrap();
        }
        let clauses: Vec<HornClause> = case.clauses.iter().map(randgen::lib_clause).collect();
        let fragment =
            oracles::forward_fragment(&case.facts, &case.clauses, &case.genl_edges, 5);
        for query in &case.queries {
            let expected = oracles::query_answers(&fragment, &case.genl_edges, query);
            let got = backchain(&kb, &clauses, &randgen::lib_atom(query), &limits);
            assert!(got.complete, "case {case_idx}: unlimited budget must report complete");
            let got_set: BTreeSet<BTreeMap<String, String>> = got
                .answers
                .iter()
                .map(|binding| {
                    binding
                        .iter()
                        .map(|(k, v)| (k.as_str().to_string(), v.as_str().to_string()))
                        .collect()
                })
                .collect();
            assert_eq!(got_set, expected, "case {case_idx}, query {query:?}");
        }
    }
    finish(4, "backchain vs forward oracle", t0, Duration::from_secs(60));
}

#[test]
fn criterion_5_unification_properties() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut successes = 0usize;
    let mut oracle_checked = 0usize;
    for i in 0..10_000 {
        let two_var = i % 2 == 0;
        let (oa, ob) = randgen::atom_pair(&mut rng, two_var);
        let a = randgen::lib_atom(&oa);
        let b = randgen::lib_atom(&ob);
        match unify(&a, &b) {
            Some(sigma) => {
                successes += 1;
                let ia = sigma.apply(&a);
                let ib = sigma.apply(&b);
                assert_eq!(ia, ib, "unifier must equate both atoms: {oa:?} vs {ob:?}");
                assert_eq!(sigma.apply(&ia), ia, "substitution must be idempotent");
                if two_var {
                    oracle_checked += 1;
                    assert!(oracles::ground_unifiable(&oa, &ob), "oracle disagrees: {oa:?} {ob:?}");
                }
            }
            None => {
                if two_var {
                    oracle_checked += 1;
                    assert!(
                        !oracles::ground_unifiable(&oa, &ob),
                        "missed unifier for {oa:?} vs {ob:?}"
                    );
                }
            }
        }
    }
    assert!(successes > 1000, "generator too adversarial: {successes} successes");
    assert_eq!(oracle_checked, 5000);
    finish(5, "unification properties", t0, Duration::from_secs(30));
}

#[test]
fn criterion_6_ontology_closures() {
    let t0 = Instant::now();

    let mut kb = KnowledgeBase::new();
    kb.assert_fact(Fact::binary("genls", "Dog", "Mammal")).unwrap();
    kb.assert_fact(Fact::binary("isa", "Rover", "Dog")).unwrap();
    kb.assert_fact(Fact::binary("genlPreds", "touches", "near")).unwrap();
    let names = |set: &BTreeSet<Symbol>| -> BTreeSet<String> {
        set.iter().map(|s| s.as_str().to_string()).collect()
    };
    assert_eq!(names(&kb.instances_of(&Symbol::new("Mammal"))), BTreeSet::from(["Rover".into()]));
    assert_eq!(names(&kb.instances_of(&Symbol::new("Dog"))), BTreeSet::from(["Rover".into()]));
    assert_eq!(
        names(&kb.genl_preds_specializations(&Symbol::new("near"))),
        BTreeSet::from(["near".into(), "touches".into()])
    );
    assert_eq!(
        names(&kb.genl_preds_specializations(&Symbol::new("touches"))),
        BTreeSet::from(["touches".into()])
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0x60a7);
    for case_idx in 0..50 {
        let case = randgen::ontology_case(&mut rng);
        let mut kb = KnowledgeBase::new();
        for (e, c) in &case.isa {
            kb.assert_fact(Fact::binary("isa", e.as_str(), c.as_str())).unwrap();
        }
        for (c, p) in &case.genls {
            kb.assert_fact(Fact::binary("genls", c.as_str(), p.as_str())).unwrap();
        }
        for (s, g) in &case.genl_preds {
            kb.assert_fact(Fact::binary("genlPreds", s.as_str(), g.as_str())).unwrap();
        }
        for coll in &case.collections {
            let got = names(&kb.instances_of(&Symbol::new(coll)));
            let want = oracles::oracle_instances(&case.isa, &case.genls, coll);
            assert_eq!(got, want, "case {case_idx}, collection {coll}");
        }
        for pred in &case.predicates {
            let got = names(&kb.genl_preds_specializations(&Symbol::new(pred)));
            let want = oracles::specialization_closure(&case.genl_preds, pred);
            assert_eq!(got, want, "case {case_idx}, predicate {pred}");
        }
    }
    finish(6, "ontology closures", t0, Duration::from_secs(10));
}

#[test]
fn criterion_7_ablation_invariants() {
    let t0 = Instant::now();
    let corpus = birthplace_fixture();
    let plain: BTreeSet<Fact> =
        corpus.kb.facts().filter(|f| !f.is_ontology()).cloned().collect();
    let ontology: BTreeSet<Fact> =
        corpus.kb.facts().filter(|f| f.is_ontology()).cloned().collect();
    assert_eq!(plain.len(), 203);

    let physicist = Symbol::new("Physicist");
    for seed in 0..50u64 {
        let sample = (seed as usize * 41) % (plain.len() + 1);
        let split = AblationSplit::ablate(&corpus.kb, sample, seed).unwrap();
        let w_plain: BTreeSet<Fact> =
            split.working.facts().filter(|f| !f.is_ontology()).cloned().collect();
        let external: BTreeSet<Fact> = split.external.facts().cloned().collect();

        assert_eq!(w_plain.len(), sample);
        assert!(external.iter().all(|f| !f.is_ontology()), "external must hold no ontology");
        assert!(w_plain.is_disjoint(&external));
        let mut union = w_plain.clone();
        union.extend(external.iter().cloned());
        assert_eq!(union, plain, "split must partition the plain facts");
        assert!(
            ontology.iter().all(|f| split.working.contains(f)),
            "working must retain every ontology fact"
        );
        assert_eq!(split.working.constraint(&Symbol::new("bornIn"), 1), Some(&physicist));
    }

    // A sample larger than the plain pool is an error, not a clamp.
    assert!(AblationSplit::ablate(&corpus.kb, plain.len() + 1, 0).is_err());

    // Episodic reset restores the initial working set exactly.
    let mut split = AblationSplit::ablate(&corpus.kb, 10, 3).unwrap();
    let initial = split.working.clone();
    let request = LearningRequest {
        predicate: Symbol::new("bornIn"),
        c1: Symbol::new("USPhysicist"),
        c2: Symbol::new("USCity"),
    };
    split.execute_request(&request, MembershipScope::Union);
    assert_ne!(split.working, initial, "the fetch must have changed the working set");
    split.reset_working();
    assert_eq!(split.working, initial);

    finish(7, "ablation invariants", t0, Duration::from_secs(30));
}

#[test]
fn criterion_8_byte_identical_reruns() {
    let t0 = Instant::now();
    let exe = env!("CARGO_BIN_EXE_coordlearn");
    let conf = fixtures_dir().join("birthplace").join("run.conf");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let output = Command::new(exe)
            .arg("run")
            .arg("--config")
            .arg(&conf)
            .args(["--seed", "3"])
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "run failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let summary = std::fs::read(dir.path().join("summary.csv")).unwrap();
        let episodes = std::fs::read(dir.path().join("episodes.jsonl")).unwrap();
        outputs.push((summary, episodes));
    }
    assert!(!outputs[0].0.is_empty() && !outputs[0].1.is_empty());
    assert_eq!(outputs[0].0, outputs[1].0, "summary.csv must be byte-identical across reruns");
    assert_eq!(outputs[0].1, outputs[1].1, "episodes.jsonl must be byte-identical across reruns");
    finish(8, "byte-identical reruns", t0, Duration::from_secs(60));
}

fn bare_statements(parsed: &[SourceStatement]) -> Vec<Statement> {
    parsed.iter().map(|s| s.statement.clone()).collect()
}

fn assert_round_trip(text: &str, context: &str) {
    let first = parse_kb(text).unwrap_or_else(|e| panic!("{context}: {e}\n---\n{text}"));
    let canon = serialize(&bare_statements(&first));
    let second =
        parse_kb(&canon).unwrap_or_else(|e| panic!("{context} (re-parse): {e}\n---\n{canon}"));
    assert_eq!(bare_statements(&first), bare_statements(&second), "{context}");
}

#[test]
fn criterion_9_reader_round_trip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a9a);
    for i in 0..1000 {
        let text = randgen::statement_file(&mut rng);
        assert_round_trip(&text, &format!("random file {i}"));
    }

    let mut checked = 0;
    for scenario in std::fs::read_dir(fixtures_dir()).unwrap() {
        let path = scenario.unwrap().path();
        if !path.is_dir() {
            continue;
        }
        for entry in std::fs::read_dir(&path).unwrap() {
            let file = entry.unwrap().path();
            if file.extension().is_some_and(|e| e == "lkb") {
                let text = std::fs::read_to_string(&file).unwrap();
                assert_round_trip(&text, &file.display().to_string());
                checked += 1;
            }
        }
    }
    assert!(checked >= 9, "expected the shipped corpora on disk, found {checked} files");
    finish(9, "reader round-trip", t0, Duration::from_secs(10));
}
