//! The coordination game induced by a question-template set.
//!
//! Each binary leaf predicate of the template queries contributes two
//! players, one per argument position. A player's actions are the
//! collections it may name in a learning request: collections small enough
//! to be specific, filtered through any declared argument constraint. A
//! joint action pairs the two sides of every predicate into one learning
//! request per predicate.
//!
//! [`MatrixGame`] is the explicit-payoff counterpart used to exercise the
//! learners on classic matrix games.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::kbformat::{ParseError, Sexp};
use crate::kbstore::KnowledgeBase;
use crate::qa::QuestionTemplate;
use crate::reasoner::{extract_leaf_predicates, HornClause};
use crate::symbol::Symbol;

/// One player: an argument position of a leaf predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId {
    pub predicate: Symbol,
    /// 1-based argument position.
    pub position: u8,
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.predicate, self.position)
    }
}

/// A chosen collection per player.
pub type JointAction = BTreeMap<AgentId, Symbol>;

/// A request to fetch the facts of `predicate` whose first argument lies in
/// `c1` and second in `c2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LearningRequest {
    pub predicate: Symbol,
    pub c1: Symbol,
    pub c2: Symbol,
}

impl fmt::Display for LearningRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.predicate, self.c1, self.c2)
    }
}

/// A leaf predicate that could not be wired into the game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedPredicate {
    pub predicate: Symbol,
    pub arity: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("no binary leaf predicate reachable from any template")]
    EmptyRoster,
    #[error("agent {agent} has no legal collection to request")]
    EmptyActionSet { agent: AgentId },
    #[error("joint action is missing a choice for agent {agent}")]
    PartialJointAction { agent: AgentId },
    #[error("joint action {cell:?} is outside the payoff table")]
    UnknownJointAction { cell: Vec<usize> },
}

/// Players and their action sets, in canonical (predicate, position) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameStructure {
    pub agents: Vec<AgentId>,
    /// Sorted action set per agent, parallel to `agents`.
    pub action_sets: Vec<Vec<Symbol>>,
    /// Leaf predicates excluded because they are not binary.
    pub skipped: Vec<SkippedPredicate>,
}

impl GameStructure {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_actions(&self, agent: usize) -> usize {
        self.action_sets[agent].len()
    }

    /// Resolves per-agent action indices into named choices.
    pub fn joint_action(&self, indices: &[usize]) -> JointAction {
        assert_eq!(indices.len(), self.agents.len());
        self.agents
            .iter()
            .zip(indices)
            .map(|(agent, &i)| (agent.clone(), self.action_sets[self.index_of(agent)][i].clone()))
            .collect()
    }

    fn index_of(&self, agent: &AgentId) -> usize {
        self.agents.iter().position(|a| a == agent).expect("agent belongs to this game")
    }

    /// Pairs the two sides of each predicate into one learning request per
    /// predicate, in predicate order.
    pub fn requests(&self, indices: &[usize]) -> Vec<LearningRequest> {
        assert_eq!(indices.len(), self.agents.len());
        let mut sides: BTreeMap<Symbol, BTreeMap<u8, Symbol>> = BTreeMap::new();
        for (slot, agent) in self.agents.iter().enumerate() {
            let choice = self.action_sets[slot][indices[slot]].clone();
            sides.entry(agent.predicate.clone()).or_default().insert(agent.position, choice);
        }
        sides
            .into_iter()
            .map(|(predicate, mut positions)| LearningRequest {
                predicate,
                c1: positions.remove(&1).expect("binary predicate has position 1"),
                c2: positions.remove(&2).expect("binary predicate has position 2"),
            })
            .collect()
    }

    /// [`GameStructure::requests`] for a named joint action; fails if any
    /// agent in the roster is missing a choice.
    pub fn requests_from(&self, action: &JointAction) -> Result<Vec<LearningRequest>, GameError> {
        let mut indices = Vec::with_capacity(self.agents.len());
        for (slot, agent) in self.agents.iter().enumerate() {
            let choice = action
                .get(agent)
                .ok_or_else(|| GameError::PartialJointAction { agent: agent.clone() })?;
            let index = self.action_sets[slot]
                .iter()
                .position(|a| a == choice)
                .ok_or_else(|| GameError::PartialJointAction { agent: agent.clone() })?;
            indices.push(index);
        }
        Ok(self.requests(&indices))
    }

    /// Size of the joint action space: the product of the action set sizes.
    pub fn joint_space_size(&self) -> usize {
        self.action_sets.iter().map(Vec::len).product()
    }
}

/// Derives the players and action sets for a scenario: leaf predicates come
/// from symbolic backchaining over the templates, actions are the specific
/// collections compatible with each argument position.
pub fn build_agents(
    kb: &KnowledgeBase,
    axioms: &[HornClause],
    templates: &[QuestionTemplate],
    specificity_threshold: usize,
    max_depth: usize,
) -> Result<GameStructure, GameError> {
    let mut leaves: BTreeSet<(Symbol, usize)> = BTreeSet::new();
    for template in templates {
        leaves.extend(extract_leaf_predicates(kb, axioms, &template.pattern, max_depth));
    }

    let specific: Vec<Symbol> = kb
        .collections()
        .into_iter()
        .filter(|c| kb.is_specific(c, specificity_threshold))
        .collect();

    let mut agents = Vec::new();
    let mut action_sets = Vec::new();
    let mut skipped = Vec::new();
    for (predicate, arity) in leaves {
        if arity != 2 {
            skipped.push(SkippedPredicate { predicate, arity });
            continue;
        }
        for position in [1u8, 2u8] {
            let agent = AgentId { predicate: predicate.clone(), position };
            let actions: Vec<Symbol> = specific
                .iter()
                .filter(|c| match kb.constraint(&predicate, position as usize) {
                    Some(domain) => {
                        let members = kb.instances_of(c);
                        let legal = kb.instances_of(domain);
                        members.iter().all(|m| legal.contains(m))
                    }
                    None => true,
                })
                .cloned()
                .collect();
            if actions.is_empty() {
                return Err(GameError::EmptyActionSet { agent });
            }
            agents.push(agent);
            action_sets.push(actions);
        }
    }
    if agents.is_empty() {
        return Err(GameError::EmptyRoster);
    }
    Ok(GameStructure { agents, action_sets, skipped })
}

/// An explicit n-player matrix game.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    pub agent_names: Vec<Symbol>,
    /// Action names per agent, parallel to `agent_names`.
    pub actions: Vec<Vec<Symbol>>,
    /// Joint action (one index per agent) → payoff per agent. Missing cells
    /// pay zero to everyone.
    pub payoffs: BTreeMap<Vec<usize>, Vec<f64>>,
}

impl MatrixGame {
    /// The classic two-player coordination game with two pure equilibria of
    /// unequal value to each side.
    pub fn battle_of_sexes() -> MatrixGame {
        let mut payoffs = BTreeMap::new();
        payoffs.insert(vec![0, 0], vec![2.0, 1.0]);
        payoffs.insert(vec![1, 1], vec![1.0, 2.0]);
        payoffs.insert(vec![0, 1], vec![0.0, 0.0]);
        payoffs.insert(vec![1, 0], vec![0.0, 0.0]);
        MatrixGame {
            agent_names: vec![Symbol::new("wife"), Symbol::new("husband")],
            actions: vec![
                vec![Symbol::new("LW"), Symbol::new("WL")],
                vec![Symbol::new("LW"), Symbol::new("WL")],
            ],
            payoffs,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.agent_names.len()
    }

    pub fn n_actions(&self, agent: usize) -> usize {
        self.actions[agent].len()
    }

    pub fn payoff(&self, cell: &[usize]) -> Vec<f64> {
        self.payoffs.get(cell).cloned().unwrap_or_else(|| vec![0.0; self.n_agents()])
    }

    fn all_cells(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new()];
        for agent in 0..self.n_agents() {
            let mut next = Vec::new();
            for cell in &cells {
                for action in 0..self.n_actions(agent) {
                    let mut extended = cell.clone();
                    extended.push(action);
                    next.push(extended);
                }
            }
            cells = next;
        }
        cells
    }

    /// Cells from which no single agent can strictly improve by deviating.
    pub fn pure_nash_equilibria(&self) -> Vec<Vec<usize>> {
        self.all_cells()
            .into_iter()
            .filter(|cell| {
                let payoff = self.payoff(cell);
                (0..self.n_agents()).all(|agent| {
                    (0..self.n_actions(agent)).all(|alt| {
                        let mut deviated = cell.clone();
                        deviated[agent] = alt;
                        self.payoff(&deviated)[agent] <= payoff[agent]
                    })
                })
            })
            .collect()
    }

    /// Reads a game description: `(agents ...)`, one `(actions agent ...)`
    /// per agent, and `(payoff action.. value..)` cells listing one action
    /// per agent followed by one non-negative integer payoff per agent.
    pub fn parse(input: &str) -> Result<MatrixGame, ParseError> {
        let malformed = |line: usize, msg: &str| ParseError::Malformed { line, msg: msg.into() };
        let mut agent_names: Vec<Symbol> = Vec::new();
        let mut actions: BTreeMap<Symbol, Vec<Symbol>> = BTreeMap::new();
        let mut payoff_cells: Vec<(usize, Vec<Symbol>, Vec<f64>)> = Vec::new();

        for sexp in crate::kbformat::read_sexps(input)? {
            let Sexp::List(items, line) = sexp else {
                return Err(malformed(sexp.line(), "expected a list"));
            };
            let Some(Sexp::Sym(head, _)) = items.first() else {
                return Err(malformed(line, "expected a keyword head"));
            };
            match head.as_str() {
                "agents" => {
                    if !agent_names.is_empty() {
                        return Err(malformed(line, "duplicate agents declaration"));
                    }
                    for item in &items[1..] {
                        match item {
                            Sexp::Sym(name, _) => agent_names.push(Symbol::new(name.as_str())),
                            _ => return Err(malformed(line, "agent names must be symbols")),
                        }
                    }
                    if agent_names.len() < 2 {
                        return Err(malformed(line, "need at least two agents"));
                    }
                }
                "actions" => {
                    let mut syms = Vec::new();
                    for item in &items[1..] {
                        match item {
                            Sexp::Sym(name, _) => syms.push(Symbol::new(name.as_str())),
                            _ => return Err(malformed(line, "actions must be symbols")),
                        }
                    }
                    if syms.len() < 2 {
                        return Err(malformed(line, "actions needs an agent and one action"));
                    }
                    let agent = syms.remove(0);
                    if !agent_names.contains(&agent) {
                        return Err(malformed(line, "actions for undeclared agent"));
                    }
                    if actions.insert(agent, syms).is_some() {
                        return Err(malformed(line, "duplicate actions declaration"));
                    }
                }
                "payoff" => {
                    let n = agent_names.len();
                    if n == 0 {
                        return Err(malformed(line, "payoff before agents declaration"));
                    }
                    if items.len() != 1 + 2 * n {
                        return Err(malformed(line, "payoff needs one action and one value per agent"));
                    }
                    let mut cell_actions = Vec::new();
                    for item in &items[1..=n] {
                        match item {
                            Sexp::Sym(name, _) => cell_actions.push(Symbol::new(name.as_str())),
                            _ => return Err(malformed(line, "payoff actions must be symbols")),
                        }
                    }
                    let mut values = Vec::new();
                    for item in &items[n + 1..] {
                        match item {
                            Sexp::Int(v, _) => values.push(*v as f64),
                            _ => return Err(malformed(line, "payoff values must be integers")),
                        }
                    }
                    payoff_cells.push((line, cell_actions, values));
                }
                other => {
                    return Err(malformed(line, &format!("unknown declaration {other}")));
                }
            }
        }

        if agent_names.is_empty() {
            return Err(malformed(0, "missing agents declaration"));
        }
        let mut action_lists = Vec::new();
        for name in &agent_names {
            let list = actions
                .remove(name)
                .ok_or_else(|| malformed(0, &format!("no actions declared for agent {name}")))?;
            action_lists.push(list);
        }

        let mut payoffs = BTreeMap::new();
        for (line, cell_actions, values) in payoff_cells {
            let mut cell = Vec::new();
            for (agent, action) in cell_actions.iter().enumerate() {
                let index = action_lists[agent]
                    .iter()
                    .position(|a| a == action)
                    .ok_or_else(|| malformed(line, &format!("unknown action {action}")))?;
                cell.push(index);
            }
            payoffs.insert(cell, values);
        }
        Ok(MatrixGame { agent_names, actions: action_lists, payoffs })
    }

    /// Identical-interest version of this game: every agent receives the
    /// first agent's payoff. Turns a general game into a pure coordination
    /// game while keeping its equilibrium cells.
    pub fn shared_reduction(&self) -> MatrixGame {
        let n = self.n_agents();
        MatrixGame {
            agent_names: self.agent_names.clone(),
            actions: self.actions.clone(),
            payoffs: self
                .payoffs
                .iter()
                .map(|(cell, values)| (cell.clone(), vec![values[0]; n]))
                .collect(),
        }
    }
}

/// A total payoff table for an identical-interest game: one shared value per
/// joint action.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    values: BTreeMap<Vec<usize>, f64>,
}

impl PayoffMatrix {
    pub fn new(values: BTreeMap<Vec<usize>, f64>) -> PayoffMatrix {
        PayoffMatrix { values }
    }

    /// Shared table of an existing game, keeping the first agent's column.
    pub fn from_game(game: &MatrixGame) -> PayoffMatrix {
        PayoffMatrix {
            values: game.payoffs.iter().map(|(cell, v)| (cell.clone(), v[0])).collect(),
        }
    }

    /// The shared reward every agent receives at `cell`.
    pub fn reward(&self, cell: &[usize]) -> Result<f64, GameError> {
        self.values
            .get(cell)
            .copied()
            .ok_or_else(|| GameError::UnknownJointAction { cell: cell.to_vec() })
    }
}
