//! Inverse-ablation simulation: split a full knowledge base into a small
//! working KB plus an external source, execute learning requests against the
//! source, and run reward-producing episodes for the learners.
//!
//! An episode: every agent picks a collection, the joint action becomes one
//! learning request per predicate, matching external facts flow into the
//! working KB, and the shared reward is the growth in answered questions.
//! Episodic mode restores the working KB afterwards, making each episode a
//! stage game; cumulative mode keeps the acquired facts and identifies
//! states by hashing the fact set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::game::{build_agents, GameError, GameStructure, LearningRequest};
use crate::kbstore::{Fact, KbError, KnowledgeBase};
use crate::learners::{decayed_epsilon, BaselineState, JalAgent, JalParams, StateId, STAGE_STATE};
use crate::qa::{self, QaError, QaResult};
use crate::reasoner::InferenceLimits;
use crate::symbol::Symbol;
use crate::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeMode {
    /// Restore the working KB to its initial state after every episode.
    EpisodicReset,
    /// Let acquired facts persist across episodes.
    Cumulative,
}

/// Which ontology judges whether an entity belongs to a requested collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipScope {
    /// Working-KB ontology plus the external source's own ontology facts.
    Union,
    /// Working-KB ontology only.
    WorkingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Baseline,
    Coordination,
    Random,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Coordination => "coordination",
            Algorithm::Random => "random",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Algorithm, String> {
        match s {
            "baseline" => Ok(Algorithm::Baseline),
            "coordination" => Ok(Algorithm::Coordination),
            "random" => Ok(Algorithm::Random),
            other => Err(format!("unknown algorithm `{other}` (expected baseline, coordination, or random)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sample size {requested} exceeds the {available} non-ontology facts available")]
    SampleTooLarge { requested: usize, available: usize },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Reward(#[from] QaError),
    #[error("knowledge base rejected a fact: {0}")]
    Store(#[from] KbError),
}

/// The split produced by inverse ablation: a working KB holding the whole
/// ontology plus a seeded sample of plain facts, and the remaining plain
/// facts acting as the external source.
#[derive(Debug, Clone)]
pub struct AblationSplit {
    pub working: KnowledgeBase,
    pub external: KnowledgeBase,
    pub seed: u64,
    pub sample_size: usize,
    /// Snapshot of the initial working KB, for episodic resets.
    initial: KnowledgeBase,
    /// Ontology facts of working ∪ external, for `MembershipScope::Union`.
    union_ontology: KnowledgeBase,
}

/// The outcome of one learning request.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FetchResult {
    /// Every external fact matching the request.
    pub fetched: BTreeSet<Fact>,
    /// The subset that was new to the working KB.
    pub added: BTreeSet<Fact>,
}

fn ontology_of(kbs: &[&KnowledgeBase]) -> Result<KnowledgeBase, KbError> {
    let mut onto = KnowledgeBase::new();
    for kb in kbs {
        for fact in kb.facts() {
            if fact.is_ontology() {
                onto.assert_fact(fact.clone())?;
            }
        }
    }
    Ok(onto)
}

impl AblationSplit {
    /// Splits `full`: the working KB keeps every ontology fact, every
    /// argument constraint, and a uniform seeded sample of `sample_size`
    /// plain facts; the remaining plain facts form the external source.
    pub fn ablate(
        full: &KnowledgeBase,
        sample_size: usize,
        seed: u64,
    ) -> Result<AblationSplit, SimError> {
        let plain: Vec<&Fact> = full.facts().filter(|f| !f.is_ontology()).collect();
        if sample_size > plain.len() {
            return Err(SimError::SampleTooLarge {
                requested: sample_size,
                available: plain.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chosen: BTreeSet<usize> =
            rand::seq::index::sample(&mut rng, plain.len(), sample_size).into_iter().collect();

        let mut working = KnowledgeBase::new();
        let mut external = KnowledgeBase::new();
        for constraint in full.constraints() {
            working.add_constraint(constraint.clone());
            external.add_constraint(constraint.clone());
        }
        for fact in full.facts() {
            if fact.is_ontology() {
                working.assert_fact(fact.clone()).map_err(SimError::Store)?;
            }
        }
        for (i, fact) in plain.iter().enumerate() {
            let target = if chosen.contains(&i) { &mut working } else { &mut external };
            target.assert_fact((*fact).clone()).map_err(SimError::Store)?;
        }
        AblationSplit::assemble(working, external, seed, sample_size)
    }

    /// Wraps an existing working/external pair (used by tests and loaders).
    pub fn assemble(
        working: KnowledgeBase,
        external: KnowledgeBase,
        seed: u64,
        sample_size: usize,
    ) -> Result<AblationSplit, SimError> {
        let union_ontology = ontology_of(&[&working, &external]).map_err(SimError::Store)?;
        Ok(AblationSplit {
            initial: working.clone(),
            union_ontology,
            working,
            external,
            seed,
            sample_size,
        })
    }

    fn membership(&self, scope: MembershipScope) -> &KnowledgeBase {
        match scope {
            MembershipScope::Union => &self.union_ontology,
            MembershipScope::WorkingOnly => &self.working,
        }
    }

    /// Copies every external fact matching the request into the working KB.
    /// Matching is by exact predicate plus collection membership of both
    /// arguments; the external source is left untouched, so repeating a
    /// request only re-fetches duplicates.
    pub fn execute_request(
        &mut self,
        request: &LearningRequest,
        scope: MembershipScope,
    ) -> FetchResult {
        let members1 = self.membership(scope).instances_of(&request.c1);
        let members2 = self.membership(scope).instances_of(&request.c2);
        let mut result = FetchResult::default();
        for fact in self.external.facts_of(&request.predicate).into_iter().flatten() {
            if fact.args.len() == 2
                && members1.contains(&fact.args[0])
                && members2.contains(&fact.args[1])
            {
                result.fetched.insert(fact.clone());
            }
        }
        for fact in &result.fetched {
            if self
                .working
                .assert_fact(fact.clone())
                .expect("external facts share arities with the full KB")
            {
                result.added.insert(fact.clone());
            }
        }
        result
    }

    /// Restores the working KB to its initial snapshot.
    pub fn reset_working(&mut self) {
        self.working = self.initial.clone();
    }

    pub fn initial_working(&self) -> &KnowledgeBase {
        &self.initial
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the sorted fact listing: a stable identity for a KB state.
pub fn kb_state_id(kb: &KnowledgeBase) -> StateId {
    let mut hash = FNV_OFFSET;
    for fact in kb.facts() {
        for byte in fact.to_string().bytes().chain(std::iter::once(b'\n')) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(FNV_PRIME);
        }
    }
    StateId(hash)
}

/// One agent's named choice inside an episode log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChosenAction {
    pub agent: String,
    pub action: String,
}

/// Everything observable about one episode, serialized as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: u64,
    pub algorithm: String,
    pub joint_action: Vec<ChosenAction>,
    pub requests: Vec<String>,
    pub facts_gained: u64,
    pub facts: Vec<String>,
    pub reward: u64,
    pub asked: u64,
    pub answered_before: u64,
    pub answered_after: u64,
}

/// Numeric knobs of one experiment; paths live with the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Label echoed into the summary rows.
    pub scenario: String,
    pub algorithms: Vec<Algorithm>,
    pub episodes: u64,
    pub seed: u64,
    pub params: JalParams,
    pub specificity_threshold: usize,
    pub limits: InferenceLimits,
    pub mode: EpisodeMode,
    pub sample_size: usize,
    pub membership: MembershipScope,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            scenario: "scenario".to_string(),
            algorithms: vec![Algorithm::Baseline, Algorithm::Coordination],
            episodes: 500,
            seed: 0,
            params: JalParams::default(),
            specificity_threshold: 5000,
            limits: InferenceLimits::default(),
            mode: EpisodeMode::EpisodicReset,
            sample_size: 0,
            membership: MembershipScope::Union,
        }
    }
}

/// Totals for one algorithm over a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmMetrics {
    pub algorithm: Algorithm,
    pub episodes: Vec<EpisodeLog>,
    /// Questions asked, summed over episodes.
    pub n_queries: u64,
    /// Questions answered after acquisition, summed over episodes.
    pub n_answers: u64,
    /// Reward of one greedy (exploration-free) episode played from the
    /// initial KB after training.
    pub final_policy_reward: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub scenario: String,
    pub per_algorithm: Vec<AlgorithmMetrics>,
}

impl Metrics {
    pub fn for_algorithm(&self, algorithm: Algorithm) -> Option<&AlgorithmMetrics> {
        self.per_algorithm.iter().find(|m| m.algorithm == algorithm)
    }
}

/// Percentage improvement of `coordination` answers over `baseline` answers,
/// rounded to the nearest integer. `None` when the base is zero.
pub fn improvement_pct(baseline: u64, coordination: u64) -> Option<i64> {
    if baseline == 0 {
        return None;
    }
    let ratio = 100.0 * (coordination as f64 - baseline as f64) / baseline as f64;
    Some(ratio.round() as i64)
}

/// A candidate request together with the action indices its two positions
/// occupy in the game.
type BaselineCandidate = (LearningRequest, usize, usize);

/// How joint actions are produced during a run.
enum Strategy {
    Jal(Vec<JalAgent>),
    Baseline {
        /// One learner per predicate, paired with its candidate requests.
        per_predicate: Vec<(BaselineState, Vec<BaselineCandidate>)>,
        /// Agent slots of each predicate's two positions, parallel to
        /// `per_predicate`.
        slots: Vec<(usize, usize)>,
    },
    Random,
}

impl Strategy {
    fn new(algorithm: Algorithm, game: &GameStructure, params: &JalParams) -> Strategy {
        match algorithm {
            Algorithm::Coordination => {
                let n_actions: Vec<usize> =
                    (0..game.n_agents()).map(|i| game.n_actions(i)).collect();
                Strategy::Jal(
                    (0..game.n_agents())
                        .map(|i| JalAgent::new(i, &n_actions, params.clone()))
                        .collect(),
                )
            }
            Algorithm::Baseline => {
                let mut groups: BTreeMap<Symbol, BTreeMap<u8, usize>> = BTreeMap::new();
                for (slot, agent) in game.agents.iter().enumerate() {
                    groups.entry(agent.predicate.clone()).or_default().insert(agent.position, slot);
                }
                let mut per_predicate = Vec::new();
                let mut slots = Vec::new();
                for (predicate, positions) in groups {
                    let s1 = positions[&1];
                    let s2 = positions[&2];
                    let mut candidates = Vec::new();
                    for (i1, c1) in game.action_sets[s1].iter().enumerate() {
                        for (i2, c2) in game.action_sets[s2].iter().enumerate() {
                            let request = LearningRequest {
                                predicate: predicate.clone(),
                                c1: c1.clone(),
                                c2: c2.clone(),
                            };
                            candidates.push((request, i1, i2));
                        }
                    }
                    per_predicate.push((BaselineState::new(params.epsilon), candidates));
                    slots.push((s1, s2));
                }
                Strategy::Baseline { per_predicate, slots }
            }
            Algorithm::Random => Strategy::Random,
        }
    }

    /// Chooses one action index per agent. `greedy` suppresses exploration
    /// for final-policy evaluation.
    fn select(
        &self,
        game: &GameStructure,
        state: StateId,
        rng: &mut ChaCha8Rng,
        greedy: bool,
    ) -> Vec<usize> {
        match self {
            Strategy::Jal(agents) => agents
                .iter()
                .map(|agent| {
                    if greedy {
                        agent.select_greedy(state, rng)
                    } else {
                        agent.select(state, rng)
                    }
                })
                .collect(),
            Strategy::Baseline { per_predicate, slots } => {
                let mut indices = vec![0; game.n_agents()];
                for ((learner, candidates), (s1, s2)) in per_predicate.iter().zip(slots) {
                    let requests: Vec<LearningRequest> =
                        candidates.iter().map(|(r, _, _)| r.clone()).collect();
                    let choice = if greedy {
                        let mut exploit = learner.clone();
                        exploit.epsilon = 0.0;
                        exploit.select(&requests, rng)
                    } else {
                        learner.select(&requests, rng)
                    };
                    let (_, i1, i2) = &candidates[choice];
                    indices[*s1] = *i1;
                    indices[*s2] = *i2;
                }
                indices
            }
            Strategy::Random => {
                (0..game.n_agents()).map(|i| rng.gen_range(0..game.n_actions(i))).collect()
            }
        }
    }

    fn update(
        &mut self,
        state: StateId,
        joint: &[usize],
        reward: u64,
        next: Option<StateId>,
        per_request_added: &BTreeMap<LearningRequest, u64>,
    ) {
        match self {
            Strategy::Jal(agents) => {
                for agent in agents {
                    agent.update(state, joint, reward as f64, next);
                }
            }
            Strategy::Baseline { per_predicate, slots } => {
                for ((learner, candidates), (s1, s2)) in per_predicate.iter_mut().zip(slots) {
                    let issued = candidates
                        .iter()
                        .find(|(_, i1, i2)| *i1 == joint[*s1] && *i2 == joint[*s2])
                        .map(|(request, _, _)| request.clone())
                        .expect("joint action indices come from this candidate grid");
                    let added = per_request_added.get(&issued).copied().unwrap_or(0);
                    learner.update(&issued, added);
                }
            }
            Strategy::Random => {}
        }
    }

    fn set_epsilon(&mut self, epsilon: f64) {
        match self {
            Strategy::Jal(agents) => {
                for agent in agents {
                    agent.params.epsilon = epsilon;
                }
            }
            Strategy::Baseline { per_predicate, .. } => {
                for (learner, _) in per_predicate {
                    learner.epsilon = epsilon;
                }
            }
            Strategy::Random => {}
        }
    }
}

/// Plays one episode: select, fetch, measure, learn, and (in episodic mode)
/// reset. Returns the log plus the post-acquisition coverage, which
/// cumulative mode carries into the next episode.
#[allow(clippy::too_many_arguments)]
fn run_episode(
    split: &mut AblationSplit,
    game: &GameStructure,
    strategy: &mut Strategy,
    corpus: &Corpus,
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    episode: u64,
    algorithm: Algorithm,
    before: &QaResult,
) -> Result<(EpisodeLog, QaResult), SimError> {
    let state = match cfg.mode {
        EpisodeMode::EpisodicReset => STAGE_STATE,
        EpisodeMode::Cumulative => kb_state_id(&split.working),
    };
    let indices = strategy.select(game, state, rng, false);
    let requests = game.requests(&indices);

    let mut per_request_added: BTreeMap<LearningRequest, u64> = BTreeMap::new();
    let mut added_facts: BTreeSet<Fact> = BTreeSet::new();
    for request in &requests {
        let outcome = split.execute_request(request, cfg.membership);
        per_request_added.insert(request.clone(), outcome.added.len() as u64);
        added_facts.extend(outcome.added);
    }

    let after = qa::evaluate(&split.working, &corpus.axioms, &corpus.templates, &cfg.limits);
    let reward = qa::reward(before, &after)?;

    let next = match cfg.mode {
        EpisodeMode::EpisodicReset => Some(STAGE_STATE),
        EpisodeMode::Cumulative => Some(kb_state_id(&split.working)),
    };
    strategy.update(state, &indices, reward, next, &per_request_added);

    let log = EpisodeLog {
        episode,
        algorithm: algorithm.to_string(),
        joint_action: game
            .joint_action(&indices)
            .into_iter()
            .map(|(agent, action)| ChosenAction {
                agent: agent.to_string(),
                action: action.to_string(),
            })
            .collect(),
        requests: requests.iter().map(|r| r.to_string()).collect(),
        facts_gained: added_facts.len() as u64,
        facts: added_facts.iter().map(|f| f.to_string()).collect(),
        reward,
        asked: after.asked,
        answered_before: before.answered,
        answered_after: after.answered,
    };

    if cfg.mode == EpisodeMode::EpisodicReset {
        split.reset_working();
    }
    Ok((log, after))
}

/// Runs every configured algorithm from the same ablation split and seed,
/// collecting per-episode logs and run totals.
pub fn run_experiment(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<Metrics, SimError> {
    let reference = AblationSplit::ablate(&corpus.kb, cfg.sample_size, cfg.seed)?;
    let game = build_agents(
        &reference.working,
        &corpus.axioms,
        &corpus.templates,
        cfg.specificity_threshold,
        cfg.limits.max_depth,
    )?;

    let mut per_algorithm = Vec::new();
    for &algorithm in &cfg.algorithms {
        let mut split = reference.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut strategy = Strategy::new(algorithm, &game, &cfg.params);

        let baseline_coverage =
            qa::evaluate(&split.working, &corpus.axioms, &corpus.templates, &cfg.limits);
        let mut before = baseline_coverage.clone();
        let mut episodes = Vec::with_capacity(cfg.episodes as usize);
        let mut n_queries = 0u64;
        let mut n_answers = 0u64;

        for t in 0..cfg.episodes {
            if cfg.params.epsilon_decay {
                strategy
                    .set_epsilon(decayed_epsilon(cfg.params.epsilon, t as usize, cfg.episodes as usize));
            }
            let (log, after) = run_episode(
                &mut split, &game, &mut strategy, corpus, cfg, &mut rng, t, algorithm, &before,
            )?;
            n_queries += log.asked;
            n_answers += log.answered_after;
            episodes.push(log);
            if cfg.mode == EpisodeMode::Cumulative {
                before = after;
            }
        }

        // final-policy probe: one greedy episode from the initial KB
        split.reset_working();
        let indices = strategy.select(&game, STAGE_STATE, &mut rng, true);
        let mut final_reward_base = baseline_coverage.clone();
        if cfg.mode == EpisodeMode::Cumulative {
            final_reward_base =
                qa::evaluate(&split.working, &corpus.axioms, &corpus.templates, &cfg.limits);
        }
        for request in game.requests(&indices) {
            split.execute_request(&request, cfg.membership);
        }
        let final_after =
            qa::evaluate(&split.working, &corpus.axioms, &corpus.templates, &cfg.limits);
        let final_policy_reward = qa::reward(&final_reward_base, &final_after)?;
        split.reset_working();

        per_algorithm.push(AlgorithmMetrics {
            algorithm,
            episodes,
            n_queries,
            n_answers,
            final_policy_reward,
        });
    }
    Ok(Metrics { scenario: cfg.scenario.clone(), per_algorithm })
}
