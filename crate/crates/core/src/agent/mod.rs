//! The test agent: belief state, goal structures, tactics, and the cycle loop.
//!
//! One call to [`TestAgent::update`] is one cycle:
//!
//! 1. refresh the belief (`OBSERVE` and merge);
//! 2. collect the enabled actions of the current goal's tactic;
//! 3. let the policy pick one and run its effect, testing any proposed
//!    candidate against the goal;
//! 4. charge one unit of budget, failing the goal when it runs out;
//! 5. check monitors, settle the goal structure and advance the tick.

mod goal;
mod policy;
mod rng;
mod tactic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use goal::{Goal, GoalNode, GoalStructure, Status};
pub use policy::{greedy_cost_policy, random_policy, GreedyCostPolicy, Policy, RandomPolicy};
pub use rng::XorShift64Star;
pub use tactic::{Action, Candidate, Proposal, Tactic};

use crate::environment::{notes, Command, CommandKind, Environment, Observation};
use crate::navigation::NavKnowledge;
use crate::verdicts::VerdictLog;
use crate::wom::{merge, Tick, WorldModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("a goal is already in progress")]
    GoalAlreadyActive,
    #[error("no goal installed")]
    NoGoal,
    #[error("the installed goal is no longer in progress")]
    GoalNotInProgress,
    #[error("no environment attached")]
    NoEnvironment,
    #[error("environment failure: {0}")]
    EnvironmentFailure(String),
}

/// An `INTERACT` the agent issued.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub tick: u64,
    pub entity_id: String,
    pub success: bool,
    /// Timestamp of the observation returned by the interaction.
    pub observed_at: Tick,
}

/// A non-`OBSERVE` command the agent sent, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssuedCommand {
    pub tick: u64,
    pub command: Command,
}

/// Everything the agent believes and remembers.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub agent_id: String,
    /// The belief.
    pub wom: WorldModel,
    pub tick: u64,
    pub rng_seed: u64,
    pub log: VerdictLog,
    pub nav: Option<NavKnowledge>,
    pub events: Vec<InteractionEvent>,
    pub issued: Vec<IssuedCommand>,
    successes: BTreeMap<String, usize>,
    fresh_since: Tick,
}

impl AgentState {
    pub fn new(agent_id: impl Into<String>, rng_seed: u64) -> Self {
        Self {
            agent_id: agent_id.into(),
            wom: WorldModel::default(),
            tick: 0,
            rng_seed,
            log: VerdictLog::default(),
            nav: None,
            events: Vec::new(),
            issued: Vec::new(),
            successes: BTreeMap::new(),
            fresh_since: 0,
        }
    }

    /// Belief timestamp of the last successful interaction (0 if none).
    /// Entities not observed since then may no longer match reality.
    pub fn fresh_since(&self) -> Tick {
        self.fresh_since
    }

    pub fn successful_interactions(&self, entity_id: &str) -> usize {
        self.successes.get(entity_id).copied().unwrap_or(0)
    }

    fn record_interaction(&mut self, event: InteractionEvent) {
        if event.success {
            *self.successes.entry(event.entity_id.clone()).or_default() += 1;
            self.fresh_since = event.observed_at;
        }
        self.events.push(event);
    }

    fn absorb(&mut self, obs: &Observation) -> Result<(), String> {
        if obs.is_session_failure() {
            return Err(obs.note.clone());
        }
        self.wom = merge(&self.wom, &obs.wom).map_err(|_| notes::INVALID_OBSERVATION.to_owned())?;
        let fresh = self.fresh_since();
        if let Some(nav) = &mut self.nav {
            nav.observe(&self.wom, fresh);
        }
        Ok(())
    }
}

/// Gives an action's effect access to the state and a single command.
pub struct Effector<'a> {
    state: &'a mut AgentState,
    env: &'a mut dyn Environment,
    issued: bool,
    failure: Option<String>,
}

impl<'a> Effector<'a> {
    pub fn state(&self) -> &AgentState {
        self.state
    }

    /// Sends a command and folds the resulting observation into the belief.
    /// A second command in the same cycle is refused.
    pub fn execute(&mut self, kind: CommandKind) -> Observation {
        if self.issued {
            return Observation::failed(self.state.wom.clone(), notes::COMMAND_LIMIT);
        }
        self.issued = true;
        let command = Command::new(self.state.agent_id.clone(), kind);
        let obs = self.env.execute(&command);
        if !matches!(command.kind, CommandKind::Observe) {
            self.state.issued.push(IssuedCommand {
                tick: self.state.tick,
                command: command.clone(),
            });
        }
        match self.state.absorb(&obs) {
            Ok(()) => {
                if let CommandKind::Interact(id) = &command.kind {
                    self.state.record_interaction(InteractionEvent {
                        tick: self.state.tick,
                        entity_id: id.clone(),
                        success: obs.success,
                        observed_at: obs.wom.timestamp,
                    });
                    let fresh = self.state.fresh_since();
                    if let Some(nav) = &mut self.state.nav {
                        nav.observe(&self.state.wom, fresh);
                    }
                }
            }
            Err(note) => self.failure = Some(note),
        }
        obs
    }
}

/// One line of the cycle trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleReport {
    pub tick: u64,
    pub goal: String,
    pub action: Option<String>,
    pub status: Status,
    /// Cycles left to the goal that ran; `None` when unlimited.
    pub budget_left: Option<u64>,
}

impl CycleReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("cycle report serializes")
    }
}

pub struct TestAgent {
    state: AgentState,
    env: Option<Box<dyn Environment>>,
    goal: Option<GoalStructure>,
    policy: Option<Box<dyn Policy>>,
    budget: Option<u64>,
    trace: Vec<CycleReport>,
}

impl TestAgent {
    pub fn new(agent_id: impl Into<String>) -> Self {
        Self {
            state: AgentState::new(agent_id, 0),
            env: None,
            goal: None,
            policy: None,
            budget: None,
            trace: Vec::new(),
        }
    }

    pub fn attach_environment(mut self, env: impl Environment + 'static) -> Self {
        self.env = Some(Box::new(env));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.state.rng_seed = seed;
        self
    }

    pub fn with_navigation(mut self, nav: NavKnowledge) -> Self {
        self.state.nav = Some(nav);
        self
    }

    /// Total number of cycles shared by all goals.
    pub fn budget(mut self, cycles: u64) -> Self {
        self.budget = Some(cycles);
        self
    }

    /// Sets the deliberation policy. Defaults to a [`RandomPolicy`] seeded
    /// with the agent's seed.
    pub fn use_deliberation(mut self, policy: Box<dyn Policy>) -> Self {
        self.policy = Some(policy);
        self
    }

    pub fn set_goal(&mut self, mut goal: GoalStructure) -> Result<(), AgentError> {
        if self
            .goal
            .as_ref()
            .is_some_and(|g| g.status() == Status::InProgress)
        {
            return Err(AgentError::GoalAlreadyActive);
        }
        goal.settle(self.budget == Some(0));
        goal.collect_verdicts(self.state.tick, &mut self.state.log);
        self.goal = Some(goal);
        Ok(())
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    pub fn goal(&self) -> Option<&GoalStructure> {
        self.goal.as_ref()
    }

    pub fn status(&self) -> Option<Status> {
        self.goal.as_ref().map(GoalStructure::status)
    }

    pub fn tick(&self) -> u64 {
        self.state.tick
    }

    pub fn remaining_budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn verdicts(&self) -> &VerdictLog {
        &self.state.log
    }

    pub fn trace(&self) -> &[CycleReport] {
        &self.trace
    }

    /// Runs cycles until the goal is no longer in progress.
    pub fn run_to_completion(&mut self) -> Result<Status, AgentError> {
        while self.status() == Some(Status::InProgress) {
            self.update()?;
        }
        self.status().ok_or(AgentError::NoGoal)
    }

    pub fn update(&mut self) -> Result<CycleReport, AgentError> {
        let goal = self.goal.as_mut().ok_or(AgentError::NoGoal)?;
        let path = goal
            .current_leaf_path()
            .ok_or(AgentError::GoalNotInProgress)?;
        let env = self.env.as_mut().ok_or(AgentError::NoEnvironment)?;
        let policy = self
            .policy
            .get_or_insert_with(|| random_policy(self.state.rng_seed));
        let state = &mut self.state;
        let tick = state.tick;

        let observed = env.execute(&Command::observe(state.agent_id.clone()));
        let mut failure = state.absorb(&observed).err();

        let mut chosen = None;
        let mut proposal = Proposal::Nothing;
        if failure.is_none() {
            let leaf = goal.leaf_at(&path);
            let enabled = leaf.tactic().enabled_actions(state);
            if !enabled.is_empty() {
                let pick = policy.select(&enabled, state).min(enabled.len() - 1);
                let action = enabled[pick];
                chosen = Some((action.name().to_owned(), action.slot()));
                let mut effector = Effector {
                    state,
                    env: env.as_mut(),
                    issued: false,
                    failure: None,
                };
                proposal = action.run(&mut effector);
                failure = effector.failure;
            }
        }

        let leaf = goal.leaf_mut(&path);
        if let Some((_, slot)) = &chosen {
            leaf.tactic.mark_executed(*slot);
        }
        if failure.is_some() {
            leaf.status = Status::Failed;
        } else {
            match &proposal {
                Proposal::Candidate(c) => {
                    if leaf.evaluate(c, state) {
                        leaf.status = Status::Success;
                    }
                }
                Proposal::Abort(_) => leaf.status = Status::Failed,
                Proposal::Nothing => {}
            }
        }

        if let Some(b) = &mut self.budget {
            *b = b.saturating_sub(1);
        }
        if let Some(b) = &mut leaf.budget {
            *b = b.saturating_sub(1);
        }
        let exhausted = self.budget == Some(0);
        if leaf.status == Status::InProgress && (exhausted || leaf.budget == Some(0)) {
            leaf.status = Status::Failed;
        }
        let budget_left = match (leaf.budget, self.budget) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let report = CycleReport {
            tick,
            goal: leaf.name().to_owned(),
            action: chosen.map(|(name, _)| name),
            status: leaf.status,
            budget_left,
        };

        for v in goal.check_monitors(&path, state, tick) {
            state.log.record(v);
        }
        goal.settle(exhausted);
        goal.collect_verdicts(tick, &mut state.log);
        state.tick += 1;
        self.trace.push(report.clone());

        match failure {
            Some(note) => Err(AgentError::EnvironmentFailure(note)),
            None => Ok(report),
        }
    }
}
