//! Joint-action Q-learning with fictitious-play opponent models, and a
//! greedy fact-count baseline. Both explore with probability ε.
//!
//! Each learning agent keeps Q-values over *joint* actions plus empirical
//! counts of the other agents' action profiles. An action's expected value
//! weights the Q-values of its joint actions by the observed profile
//! frequencies; before any observation the belief over profiles is uniform.
//! The default rule weights by other-agents profile counts; a literal
//! variant weights by the agent's own action count instead, kept for
//! comparison.
//!
//! All randomness flows through a caller-supplied seeded generator, so runs
//! are reproducible.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::{LearningRequest, MatrixGame};

/// Identifies a learning state. Stage-game play uses the single state
/// [`STAGE_STATE`]; cumulative play hashes the knowledge base contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u64);

/// The lone state of a repeated stage game.
pub const STAGE_STATE: StateId = StateId(0);

/// How an agent weights Q-values when scoring one of its own actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// Weight each joint action by the observed frequency of the other
    /// agents' profile it contains (the default).
    OpponentModel,
    /// Weight by the count of the agent's own action instead.
    OwnActionCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JalParams {
    /// Learning rate in (0, 1].
    pub alpha: f64,
    /// Discount in [0, 1]. Zero reduces updates to stage-game averaging.
    pub gamma: f64,
    /// Exploration probability in [0, 1].
    pub epsilon: f64,
    pub rule: SelectionRule,
    /// Decay ε linearly to zero over a run's episodes.
    pub epsilon_decay: bool,
}

impl Default for JalParams {
    fn default() -> JalParams {
        JalParams {
            alpha: 0.5,
            gamma: 0.0,
            epsilon: 0.05,
            rule: SelectionRule::OpponentModel,
            epsilon_decay: false,
        }
    }
}

/// Exploration rate after `t` of `total` episodes under linear decay.
pub(crate) fn decayed_epsilon(base: f64, t: usize, total: usize) -> f64 {
    if total == 0 {
        return base;
    }
    base * (1.0 - t as f64 / total as f64)
}

/// One joint-action learner. `index` is the agent's slot in every joint
/// action vector; `n_actions` records the action-set size of every agent in
/// the game.
#[derive(Debug, Clone)]
pub struct JalAgent {
    pub index: usize,
    n_actions: Vec<usize>,
    pub params: JalParams,
    /// (state, joint action) → Q. Missing entries are zero.
    q: BTreeMap<StateId, BTreeMap<Vec<usize>, f64>>,
    /// (state, other-agents profile) → observation count.
    opp_counts: BTreeMap<StateId, BTreeMap<Vec<usize>, u64>>,
    /// (state, own action) → observation count, for the literal rule.
    own_counts: BTreeMap<StateId, BTreeMap<usize, u64>>,
    /// state → total observations n(s).
    visits: BTreeMap<StateId, u64>,
}

impl JalAgent {
    pub fn new(index: usize, n_actions: &[usize], params: JalParams) -> JalAgent {
        assert!(index < n_actions.len());
        assert!(n_actions[index] > 0);
        JalAgent {
            index,
            n_actions: n_actions.to_vec(),
            params,
            q: BTreeMap::new(),
            opp_counts: BTreeMap::new(),
            own_counts: BTreeMap::new(),
            visits: BTreeMap::new(),
        }
    }

    pub fn own_actions(&self) -> usize {
        self.n_actions[self.index]
    }

    fn profile_of(&self, joint: &[usize]) -> Vec<usize> {
        joint
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.index)
            .map(|(_, &a)| a)
            .collect()
    }

    fn joint_of(&self, own: usize, profile: &[usize]) -> Vec<usize> {
        let mut joint = Vec::with_capacity(self.n_actions.len());
        let mut rest = profile.iter();
        for i in 0..self.n_actions.len() {
            if i == self.index {
                joint.push(own);
            } else {
                joint.push(*rest.next().expect("profile covers all other agents"));
            }
        }
        joint
    }

    fn q_value(&self, state: StateId, joint: &[usize]) -> f64 {
        self.q.get(&state).and_then(|m| m.get(joint)).copied().unwrap_or(0.0)
    }

    /// Number of distinct other-agent profiles in the game.
    fn profile_space(&self) -> f64 {
        self.n_actions
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.index)
            .map(|(_, &n)| n as f64)
            .product()
    }

    /// Expected value of playing `action`: Q-values of the containing joint
    /// actions, weighted by the opponent-profile model (or the own-action
    /// count under the literal rule). With no observations the belief over
    /// profiles is uniform.
    pub fn expected_value(&self, state: StateId, action: usize) -> f64 {
        let n = self.visits.get(&state).copied().unwrap_or(0);
        if n == 0 {
            let sum: f64 = self
                .q
                .get(&state)
                .map(|m| {
                    m.iter().filter(|(joint, _)| joint[self.index] == action).map(|(_, q)| q).sum()
                })
                .unwrap_or(0.0);
            return sum / self.profile_space();
        }
        match self.params.rule {
            SelectionRule::OpponentModel => {
                let Some(counts) = self.opp_counts.get(&state) else { return 0.0 };
                counts
                    .iter()
                    .map(|(profile, &c)| {
                        let weight = c as f64 / n as f64;
                        weight * self.q_value(state, &self.joint_of(action, profile))
                    })
                    .sum()
            }
            SelectionRule::OwnActionCount => {
                let c = self
                    .own_counts
                    .get(&state)
                    .and_then(|m| m.get(&action))
                    .copied()
                    .unwrap_or(0);
                let sum: f64 = self
                    .q
                    .get(&state)
                    .map(|m| {
                        m.iter()
                            .filter(|(joint, _)| joint[self.index] == action)
                            .map(|(_, q)| q)
                            .sum()
                    })
                    .unwrap_or(0.0);
                (c as f64 / n as f64) * sum
            }
        }
    }

    /// Highest expected value over the agent's own actions.
    pub fn state_value(&self, state: StateId) -> f64 {
        (0..self.own_actions())
            .map(|a| self.expected_value(state, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action, exact-tie broken uniformly. The generator is consumed
    /// only when more than one action attains the maximum.
    pub fn select_greedy(&self, state: StateId, rng: &mut impl Rng) -> usize {
        let values: Vec<f64> = (0..self.own_actions())
            .map(|a| self.expected_value(state, a))
            .collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> =
            (0..values.len()).filter(|&a| values[a] == best).collect();
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.gen_range(0..ties.len())]
        }
    }

    /// ε-greedy action selection. The exploration coin is always drawn
    /// first, keeping the generator stream aligned across variants.
    pub fn select(&self, state: StateId, rng: &mut impl Rng) -> usize {
        let coin: f64 = rng.gen();
        if coin < self.params.epsilon {
            rng.gen_range(0..self.own_actions())
        } else {
            self.select_greedy(state, rng)
        }
    }

    /// Records one play: Q(s,a) ← (1−α)·Q(s,a) + α·(r + γ·V(s')), and the
    /// observed profile, own action, and visit counters each advance by one.
    pub fn update(&mut self, state: StateId, joint: &[usize], reward: f64, next: Option<StateId>) {
        let future = if self.params.gamma == 0.0 {
            0.0
        } else {
            next.map(|s| self.state_value(s)).unwrap_or(0.0)
        };
        let target = reward + self.params.gamma * future;
        let alpha = self.params.alpha;
        let entry = self
            .q
            .entry(state)
            .or_default()
            .entry(joint.to_vec())
            .or_insert(0.0);
        *entry = (1.0 - alpha) * *entry + alpha * target;

        let profile = self.profile_of(joint);
        *self.opp_counts.entry(state).or_default().entry(profile).or_insert(0) += 1;
        *self.own_counts.entry(state).or_default().entry(joint[self.index]).or_insert(0) += 1;
        *self.visits.entry(state).or_insert(0) += 1;
    }
}

/// The non-coordinating baseline: remember how many facts each request has
/// produced so far and greedily repeat the best, with ε exploration. Unseen
/// requests count as zero yield.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    pub epsilon: f64,
    yield_history: BTreeMap<LearningRequest, u64>,
}

impl BaselineState {
    pub fn new(epsilon: f64) -> BaselineState {
        BaselineState { epsilon, yield_history: BTreeMap::new() }
    }

    pub fn yield_of(&self, request: &LearningRequest) -> u64 {
        self.yield_history.get(request).copied().unwrap_or(0)
    }

    /// Index of the chosen candidate: ε-uniform, otherwise the highest
    /// cumulative yield with exact ties broken uniformly.
    pub fn select(&self, candidates: &[LearningRequest], rng: &mut impl Rng) -> usize {
        assert!(!candidates.is_empty());
        let coin: f64 = rng.gen();
        if coin < self.epsilon {
            return rng.gen_range(0..candidates.len());
        }
        let yields: Vec<u64> = candidates.iter().map(|c| self.yield_of(c)).collect();
        let best = *yields.iter().max().expect("candidates non-empty");
        let ties: Vec<usize> =
            (0..yields.len()).filter(|&i| yields[i] == best).collect();
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.gen_range(0..ties.len())]
        }
    }

    pub fn update(&mut self, request: &LearningRequest, facts_gained: u64) {
        *self.yield_history.entry(request.clone()).or_insert(0) += facts_gained;
    }
}

/// Plays `episodes` rounds of `game` with one learner per agent, each paid
/// its own payoff column. Returns the joint action of every episode.
pub fn matrix_self_play(
    game: &MatrixGame,
    params: &JalParams,
    episodes: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n_actions: Vec<usize> = (0..game.n_agents()).map(|i| game.n_actions(i)).collect();
    let mut agents: Vec<JalAgent> = (0..game.n_agents())
        .map(|i| JalAgent::new(i, &n_actions, params.clone()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = Vec::with_capacity(episodes);
    for t in 0..episodes {
        if params.epsilon_decay {
            let eps = decayed_epsilon(params.epsilon, t, episodes);
            for agent in &mut agents {
                agent.params.epsilon = eps;
            }
        }
        let joint: Vec<usize> =
            agents.iter().map(|agent| agent.select(STAGE_STATE, &mut rng)).collect();
        let payoff = game.payoff(&joint);
        for agent in &mut agents {
            agent.update(STAGE_STATE, &joint, payoff[agent.index], None);
        }
        history.push(joint);
    }
    history
}

/// The pure equilibrium most played over the final `window` episodes, with
/// its share of those episodes. Returns `None` when the game has no pure
/// equilibrium or the history is empty.
pub fn best_equilibrium_fraction(
    game: &MatrixGame,
    history: &[Vec<usize>],
    window: usize,
) -> Option<(Vec<usize>, f64)> {
    if history.is_empty() {
        return None;
    }
    let tail = &history[history.len().saturating_sub(window)..];
    game.pure_nash_equilibria()
        .into_iter()
        .map(|ne| {
            let hits = tail.iter().filter(|cell| **cell == ne).count();
            (ne, hits as f64 / tail.len() as f64)
        })
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("fractions are finite"))
}
