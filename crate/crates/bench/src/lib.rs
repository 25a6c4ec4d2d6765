//! Shared setup for the benchmark suite: canned corpora and queries sized
//! like the shipped scenarios, so the hot paths get measured on realistic
//! shapes rather than toys.

use coordlearn_core::kbformat;
use coordlearn_core::reasoner::{Atom, Term};
use coordlearn_core::synthgen::birthplace_fixture;
use coordlearn_core::{Corpus, ExperimentConfig, Symbol};

/// The birthplace corpus: 572 facts, one chain rule, one template.
pub fn corpus() -> Corpus {
    birthplace_fixture()
}

/// The birthplace fact store rendered to reader text (one statement per
/// fact), for parser throughput runs.
pub fn corpus_text() -> String {
    kbformat::serialize(&birthplace_fixture().kb.to_statements())
}

/// A chain query with one bound argument: where was this person born?
pub fn person_query(person: &str) -> Atom {
    Atom::new(
        "bornInRegion",
        vec![Term::Const(Symbol::new(person)), Term::Var(Symbol::new("r"))],
    )
}

/// A fully open chain query: enumerate every person-region pair.
pub fn open_query() -> Atom {
    Atom::new(
        "bornInRegion",
        vec![Term::Var(Symbol::new("p")), Term::Var(Symbol::new("r"))],
    )
}

/// A short birthplace experiment configured like the shipped run, shrunk to
/// a handful of episodes so one measurement stays in the milliseconds.
pub fn short_experiment() -> ExperimentConfig {
    ExperimentConfig {
        scenario: "bench".to_string(),
        episodes: 5,
        specificity_threshold: 100,
        ..ExperimentConfig::default()
    }
}
