//! Batch runs: a level, a built-in task, a budget, a seed and a policy in;
//! a trace, a verdict report and an exit code out.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::agent::{
    greedy_cost_policy, random_policy, AgentError, CycleReport, GoalStructure, IssuedCommand,
    Policy, Status, TestAgent,
};
use crate::environment::Environment;
use crate::sim::{Level, SimEnvironment};
use crate::strategies;
use crate::verdicts::VerdictLog;

pub const AGENT_ID: &str = "agent";
pub const DEFAULT_BUDGET: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("unknown task `{0}` (expected ef-reach:<room>, ef-entity:<id>, ag-door-wiring or explore-all)")]
    UnknownTask(String),
    #[error("unknown policy `{0}` (expected random or greedy)")]
    UnknownPolicy(String),
    #[error("level has no room named `{0}`")]
    UnknownRoom(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    EfReach(String),
    EfEntity(String),
    AgDoorWiring,
    ExploreAll,
}

impl FromStr for Task {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .filter(|a| !a.is_empty())
                .map(str::to_owned)
        };
        if let Some(room) = arg("ef-reach:") {
            Ok(Task::EfReach(room))
        } else if let Some(id) = arg("ef-entity:") {
            Ok(Task::EfEntity(id))
        } else {
            match s {
                "ag-door-wiring" => Ok(Task::AgDoorWiring),
                "explore-all" => Ok(Task::ExploreAll),
                _ => Err(HarnessError::UnknownTask(s.to_owned())),
            }
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::EfReach(r) => write!(f, "ef-reach:{r}"),
            Task::EfEntity(e) => write!(f, "ef-entity:{e}"),
            Task::AgDoorWiring => f.write_str("ag-door-wiring"),
            Task::ExploreAll => f.write_str("explore-all"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyKind {
    #[default]
    Random,
    Greedy,
}

impl PolicyKind {
    pub fn build(self, seed: u64) -> Box<dyn Policy> {
        match self {
            PolicyKind::Random => random_policy(seed),
            PolicyKind::Greedy => greedy_cost_policy(),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "greedy" => Ok(PolicyKind::Greedy),
            _ => Err(HarnessError::UnknownPolicy(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub level: Level,
    pub task: Task,
    pub budget: u64,
    pub seed: u64,
    pub policy: PolicyKind,
}

impl RunConfig {
    pub fn new(level: Level, task: Task) -> Self {
        Self {
            level,
            task,
            budget: DEFAULT_BUDGET,
            seed: 0,
            policy: PolicyKind::Random,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_policy(mut self, policy: PolicyKind) -> Self {
        self.policy = policy;
        self
    }
}

/// Instantiates a built-in task on a level.
pub fn build_task(level: &Level, task: &Task) -> Result<GoalStructure, HarnessError> {
    Ok(match task {
        Task::EfReach(room) => {
            let cells = level
                .room(room)
                .ok_or_else(|| HarnessError::UnknownRoom(room.clone()))?;
            strategies::reach_room(room, cells.clone())
        }
        Task::EfEntity(id) => strategies::find_entity(id),
        Task::AgDoorWiring => strategies::door_wiring(level, &strategies::declared_wiring(level)),
        Task::ExploreAll => strategies::explore_all(),
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: Status,
    pub verdicts: VerdictLog,
    pub trace: Vec<CycleReport>,
    pub issued: Vec<IssuedCommand>,
    pub ticks: u64,
    /// Set when the run stopped because the environment went away.
    pub env_error: Option<String>,
}

impl RunOutcome {
    /// The trace file: one cycle report per line.
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|r| r.to_json_line() + "\n").collect()
    }

    pub fn report_text(&self) -> String {
        self.verdicts.to_json_lines()
    }

    pub fn exit_code(&self, allow_undecided: bool) -> i32 {
        exit_code(&self.verdicts, allow_undecided)
    }
}

/// 1 on any FAIL, 1 on UNDECIDED unless allowed, else 0.
pub fn exit_code(log: &VerdictLog, allow_undecided: bool) -> i32 {
    if log.fail_count() > 0 || (!allow_undecided && log.undecided_count() > 0) {
        1
    } else {
        0
    }
}

/// Runs `config` against the bundled simulator.
pub fn run(config: &RunConfig) -> Result<RunOutcome, HarnessError> {
    run_with_env(config, Box::new(SimEnvironment::new(config.level.clone())))
}

pub fn run_with_env(
    config: &RunConfig,
    env: Box<dyn Environment>,
) -> Result<RunOutcome, HarnessError> {
    let goal = build_task(&config.level, &config.task)?;
    let mut agent = TestAgent::new(AGENT_ID)
        .attach_environment(env)
        .with_seed(config.seed)
        .with_navigation(strategies::navigation_for(&config.level))
        .use_deliberation(config.policy.build(config.seed))
        .budget(config.budget);
    agent.set_goal(goal)?;
    let mut env_error = None;
    while agent.status() == Some(Status::InProgress) {
        match agent.update() {
            Ok(_) => {}
            Err(AgentError::EnvironmentFailure(note)) => {
                env_error = Some(note);
                if agent.status() == Some(Status::InProgress) {
                    continue;
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(RunOutcome {
        status: agent.status().unwrap_or(Status::Failed),
        verdicts: agent.verdicts().clone(),
        trace: agent.trace().to_vec(),
        issued: agent.state().issued.clone(),
        ticks: agent.tick(),
        env_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::bundled_level;

    #[test]
    fn task_names() {
        for name in [
            "ef-reach:treasure",
            "ef-entity:b2",
            "ag-door-wiring",
            "explore-all",
        ] {
            assert_eq!(name.parse::<Task>().unwrap().to_string(), name);
        }
        assert!("ef-reach:".parse::<Task>().is_err());
        assert!("reach".parse::<Task>().is_err());
    }

    #[test]
    fn unknown_room() {
        let level = bundled_level("chain_3").unwrap();
        assert_eq!(
            build_task(&level, &Task::EfReach("attic".into())).err(),
            Some(HarnessError::UnknownRoom("attic".into()))
        );
    }

    #[test]
    fn sealed_level_is_undecided() {
        let cfg = RunConfig::new(
            bundled_level("buttons_doors_sealed").unwrap(),
            Task::EfReach("treasure".into()),
        )
        .with_budget(300)
        .with_seed(3);
        let out = run(&cfg).unwrap();
        assert_eq!(out.status, Status::Failed);
        assert_eq!(out.verdicts.undecided_count(), 1);
        assert_eq!(out.exit_code(false), 1);
        assert_eq!(out.exit_code(true), 0);
    }

    #[test]
    fn greedy_policy_runs() {
        let cfg = RunConfig::new(
            bundled_level("buttons_doors_1").unwrap(),
            Task::EfReach("treasure".into()),
        )
        .with_budget(10_000)
        .with_policy(PolicyKind::Greedy);
        assert_eq!(run(&cfg).unwrap().exit_code(false), 0);
    }
}
