//! Coordinated fact acquisition over a Horn clause knowledge base.
//!
//! The crate is organized bottom-up:
//!
//! - [`kbformat`]: line-oriented S-expression reader and writer for `.lkb` files
//! - [`kbstore`]: ground fact storage plus the collection ontology (`isa`,
//!   `genls`, `genlPreds`, `argIsa`) with memoized closures
//! - [`reasoner`]: unification and depth-bounded backward chaining
//! - [`qa`]: question templates, evaluation, and reward
//! - [`game`]: the coordination game induced by a template set, and explicit
//!   payoff-matrix games for learner tests
//! - [`learners`]: joint-action Q-learning and a fact-count greedy baseline
//! - [`simulator`]: knowledge base ablation, learning requests, episodes, and
//!   whole experiments
//! - [`synthgen`]: deterministic synthetic corpora and the shipped fixtures

pub mod game;
pub mod kbformat;
pub mod kbstore;
pub mod learners;
pub mod qa;
pub mod reasoner;
pub mod simulator;
pub mod symbol;
pub mod synthgen;

pub use game::{AgentId, GameStructure, JointAction, LearningRequest, MatrixGame, PayoffMatrix};
pub use kbformat::{parse_kb, serialize, SourceStatement, Statement};
pub use kbstore::{ArgConstraint, Fact, KnowledgeBase};
pub use learners::{BaselineState, JalAgent, JalParams, SelectionRule, StateId};
pub use qa::{QaResult, QuestionTemplate};
pub use reasoner::{AnswerSet, Atom, Budget, HornClause, InferenceLimits, Substitution, Term};
pub use simulator::{
    AblationSplit, Algorithm, EpisodeMode, ExperimentConfig, MembershipScope, Metrics, SimError,
};
pub use symbol::Symbol;
pub use synthgen::GenConfig;

use kbformat::ParseError;
use kbstore::KbError;

/// A loaded scenario: the knowledge base plus the rules and question
/// templates that operate over it.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub kb: KnowledgeBase,
    pub axioms: Vec<HornClause>,
    pub templates: Vec<QuestionTemplate>,
}

/// Errors raised while assembling a corpus from parsed statements.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: {source}")]
    Store { line: usize, source: KbError },
}

impl Corpus {
    /// Sorts parsed statements into the KB (facts and argIsa constraints),
    /// the axiom list, and the template list.
    pub fn from_statements(statements: &[SourceStatement]) -> Result<Corpus, CorpusError> {
        let mut corpus = Corpus::default();
        for stmt in statements {
            match &stmt.statement {
                Statement::Fact(f) => {
                    corpus
                        .kb
                        .assert_fact(f.clone())
                        .map_err(|source| CorpusError::Store { line: stmt.line, source })?;
                }
                Statement::Constraint(c) => corpus.kb.add_constraint(c.clone()),
                Statement::Rule(r) => corpus.axioms.push(r.clone()),
                Statement::Template(t) => corpus.templates.push(t.clone()),
            }
        }
        Ok(corpus)
    }

    /// Parses one or more `.lkb` documents into a single corpus.
    pub fn from_sources<'a>(sources: impl IntoIterator<Item = &'a str>) -> Result<Corpus, CorpusError> {
        let mut all = Vec::new();
        for src in sources {
            all.extend(parse_kb(src)?);
        }
        Corpus::from_statements(&all)
    }
}
