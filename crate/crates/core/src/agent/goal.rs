use std::fmt;

use serde::{Deserialize, Serialize};

use crate::verdicts::{Monitor, Verdict, VerdictKind, VerdictLog};

use super::tactic::{Candidate, Tactic};
use super::AgentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    #[serde(rename = "INPROGRESS")]
    InProgress,
    Success,
    Failed,
}

impl Status {
    pub fn is_final(self) -> bool {
        self != Status::InProgress
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::InProgress => "INPROGRESS",
            Status::Success => "SUCCESS",
            Status::Failed => "FAILED",
        })
    }
}

type PredicateFn = Box<dyn Fn(&Candidate, &AgentState) -> bool + Send + Sync>;
type CostFn = Box<dyn Fn(&Candidate, &AgentState) -> f64 + Send + Sync>;

/// A goal: a predicate over candidates proposed by its tactic.
///
/// A goal may also carry a cost function estimating the remaining effort for
/// a rejected candidate. The agent records the last estimate; nothing in the
/// reference loop consumes it.
pub struct Goal {
    name: String,
    predicate: PredicateFn,
    cost: Option<CostFn>,
    pub(crate) tactic: Tactic,
    pub(crate) status: Status,
    pub(crate) budget: Option<u64>,
    assertion: Option<String>,
    reported: bool,
    last_cost: Option<f64>,
    activations: u32,
}

impl Goal {
    pub fn new(
        name: impl Into<String>,
        predicate: impl Fn(&Candidate, &AgentState) -> bool + Send + Sync + 'static,
        tactic: impl Into<Tactic>,
    ) -> Self {
        let mut tactic = tactic.into();
        tactic.number(&mut 0);
        Self {
            name: name.into(),
            predicate: Box::new(predicate),
            cost: None,
            tactic,
            status: Status::InProgress,
            budget: None,
            assertion: None,
            reported: false,
            last_cost: None,
            activations: 1,
        }
    }

    /// A goal whose predicate only looks at the agent state.
    pub fn on_state(
        name: impl Into<String>,
        predicate: impl Fn(&AgentState) -> bool + Send + Sync + 'static,
        tactic: impl Into<Tactic>,
    ) -> Self {
        Self::new(name, move |_, s| predicate(s), tactic)
    }

    pub fn with_cost(
        mut self,
        cost: impl Fn(&Candidate, &AgentState) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.cost = Some(Box::new(cost));
        self
    }

    /// Caps the number of cycles this goal may consume.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    /// Records PASS on success and UNDECIDED on failure under `name`.
    pub fn as_existential(mut self, name: impl Into<String>) -> Self {
        self.assertion = Some(name.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn tactic(&self) -> &Tactic {
        &self.tactic
    }

    pub fn last_cost(&self) -> Option<f64> {
        self.last_cost
    }

    /// How many times this goal has been (re)instantiated.
    pub fn activations(&self) -> u32 {
        self.activations
    }

    pub(crate) fn evaluate(&mut self, candidate: &Candidate, state: &AgentState) -> bool {
        if let Some(cost) = &self.cost {
            self.last_cost = Some(cost(candidate, state));
        }
        (self.predicate)(candidate, state)
    }

    fn reset(&mut self) {
        self.status = Status::InProgress;
        self.reported = false;
        self.last_cost = None;
        self.activations += 1;
        self.tactic.reset();
    }
}

impl fmt::Debug for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Goal")
            .field("name", &self.name)
            .field("status", &self.status)
            .field("budget", &self.budget)
            .field("tactic", &self.tactic)
            .finish_non_exhaustive()
    }
}

#[derive(Debug)]
pub enum GoalNode {
    Leaf(Goal),
    /// All children, in order.
    Seq(Vec<GoalStructure>),
    /// Children left to right until one succeeds; each is tried once.
    FirstOf(Vec<GoalStructure>),
    /// Re-instantiates the child after each failure, up to `max_attempts`.
    Repeat {
        child: Box<GoalStructure>,
        max_attempts: Option<u32>,
        attempts: u32,
    },
    /// Runs the child while checking an invariant after every cycle.
    Monitor {
        monitor: Monitor,
        child: Box<GoalStructure>,
    },
}

/// A testing task: a combinator tree over goals.
#[derive(Debug)]
pub struct GoalStructure {
    node: GoalNode,
    status: Status,
}

impl From<Goal> for GoalStructure {
    fn from(g: Goal) -> Self {
        GoalStructure::leaf(g)
    }
}

impl GoalStructure {
    fn with(node: GoalNode) -> Self {
        Self {
            node,
            status: Status::InProgress,
        }
    }

    pub fn leaf(goal: Goal) -> Self {
        Self::with(GoalNode::Leaf(goal))
    }

    pub fn seq(children: Vec<GoalStructure>) -> Self {
        assert!(!children.is_empty(), "SEQ needs at least one subgoal");
        Self::with(GoalNode::Seq(children))
    }

    pub fn first_of(children: Vec<GoalStructure>) -> Self {
        assert!(!children.is_empty(), "FIRSTof needs at least one subgoal");
        Self::with(GoalNode::FirstOf(children))
    }

    /// `max_attempts == None` means unlimited.
    pub fn repeat(child: GoalStructure, max_attempts: Option<u32>) -> Self {
        assert!(
            max_attempts != Some(0),
            "REPEAT needs a positive attempt bound"
        );
        Self::with(GoalNode::Repeat {
            child: Box::new(child),
            max_attempts,
            attempts: 1,
        })
    }

    pub fn monitored(monitor: Monitor, child: GoalStructure) -> Self {
        Self::with(GoalNode::Monitor {
            monitor,
            child: Box::new(child),
        })
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn node(&self) -> &GoalNode {
        &self.node
    }

    /// Path (child indices) to the leaf currently being worked on.
    pub fn current_leaf_path(&self) -> Option<Vec<usize>> {
        if self.status != Status::InProgress {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = self;
        loop {
            match &cur.node {
                GoalNode::Leaf(_) => return Some(path),
                GoalNode::Seq(cs) | GoalNode::FirstOf(cs) => {
                    let i = cs.iter().position(|c| c.status == Status::InProgress)?;
                    path.push(i);
                    cur = &cs[i];
                }
                GoalNode::Repeat { child, .. } | GoalNode::Monitor { child, .. } => {
                    path.push(0);
                    cur = child;
                }
            }
        }
    }

    pub fn current_goal(&self) -> Option<&Goal> {
        self.current_leaf_path().map(|p| self.leaf_at(&p))
    }

    fn child(&self, i: usize) -> &GoalStructure {
        match &self.node {
            GoalNode::Leaf(_) => panic!("leaf has no children"),
            GoalNode::Seq(cs) | GoalNode::FirstOf(cs) => &cs[i],
            GoalNode::Repeat { child, .. } | GoalNode::Monitor { child, .. } => child,
        }
    }

    fn child_mut(&mut self, i: usize) -> &mut GoalStructure {
        match &mut self.node {
            GoalNode::Leaf(_) => panic!("leaf has no children"),
            GoalNode::Seq(cs) | GoalNode::FirstOf(cs) => &mut cs[i],
            GoalNode::Repeat { child, .. } | GoalNode::Monitor { child, .. } => child,
        }
    }

    pub(crate) fn leaf_at(&self, path: &[usize]) -> &Goal {
        let node = path.iter().fold(self, |n, &i| n.child(i));
        match &node.node {
            GoalNode::Leaf(g) => g,
            _ => panic!("path does not end at a leaf"),
        }
    }

    pub(crate) fn leaf_mut(&mut self, path: &[usize]) -> &mut Goal {
        let node = path.iter().fold(self, |n, &i| n.child_mut(i));
        match &mut node.node {
            GoalNode::Leaf(g) => g,
            _ => panic!("path does not end at a leaf"),
        }
    }

    /// Recomputes statuses bottom-up after a leaf changed, advancing the
    /// cursor. With `exhausted` set no further cycles are available, so any
    /// leaf that would become current fails immediately.
    pub fn settle(&mut self, exhausted: bool) -> Status {
        let status = match &mut self.node {
            GoalNode::Leaf(g) => {
                if g.status == Status::InProgress && (exhausted || g.budget == Some(0)) {
                    g.status = Status::Failed;
                }
                g.status
            }
            GoalNode::Seq(cs) => {
                let mut s = Status::Success;
                for c in cs.iter_mut() {
                    match c.settle(exhausted) {
                        Status::Success => continue,
                        other => {
                            s = other;
                            break;
                        }
                    }
                }
                s
            }
            GoalNode::FirstOf(cs) => {
                let mut s = Status::Failed;
                for c in cs.iter_mut() {
                    match c.settle(exhausted) {
                        Status::Failed => continue,
                        other => {
                            s = other;
                            break;
                        }
                    }
                }
                s
            }
            GoalNode::Repeat {
                child,
                max_attempts,
                attempts,
            } => match child.settle(exhausted) {
                Status::Failed => {
                    let out_of_attempts = max_attempts.is_some_and(|m| *attempts >= m);
                    if exhausted || out_of_attempts {
                        Status::Failed
                    } else {
                        child.reset();
                        *attempts += 1;
                        // A retry that cannot even start counts as final.
                        child.settle(exhausted)
                    }
                }
                other => other,
            },
            GoalNode::Monitor { child, .. } => child.settle(exhausted),
        };
        self.status = status;
        status
    }

    /// Re-instantiates this subtree for another attempt. Goal budgets are
    /// not restored.
    fn reset(&mut self) {
        self.status = Status::InProgress;
        match &mut self.node {
            GoalNode::Leaf(g) => g.reset(),
            GoalNode::Seq(cs) | GoalNode::FirstOf(cs) => {
                cs.iter_mut().for_each(GoalStructure::reset)
            }
            GoalNode::Repeat {
                child, attempts, ..
            } => {
                *attempts = 1;
                child.reset();
            }
            GoalNode::Monitor { monitor, child } => {
                monitor.rearm();
                child.reset();
            }
        }
    }

    /// Checks the monitors on `path` (those whose subtree is in progress).
    pub(crate) fn check_monitors(
        &mut self,
        path: &[usize],
        state: &AgentState,
        tick: u64,
    ) -> Vec<Verdict> {
        let mut out = Vec::new();
        let mut cur = self;
        let mut rest = path;
        loop {
            if let GoalNode::Monitor { monitor, .. } = &mut cur.node {
                if let Some(v) = monitor.check(state, tick) {
                    out.push(v);
                }
            }
            let Some((&i, tail)) = rest.split_first() else {
                break;
            };
            rest = tail;
            cur = cur.child_mut(i);
        }
        out
    }

    /// Emits verdicts for assertions whose outcome became known.
    pub(crate) fn collect_verdicts(&mut self, tick: u64, log: &mut VerdictLog) {
        match &mut self.node {
            GoalNode::Leaf(g) => {
                if let (Some(name), false) = (&g.assertion, g.reported) {
                    let kind = match g.status {
                        Status::InProgress => return,
                        Status::Success => VerdictKind::Pass,
                        Status::Failed => VerdictKind::Undecided,
                    };
                    let detail = match kind {
                        VerdictKind::Pass => format!("witness found for {}", g.name),
                        _ => format!("no witness found for {} within budget", g.name),
                    };
                    log.record(Verdict::new(kind, name.clone(), tick, detail));
                    g.reported = true;
                }
            }
            GoalNode::Seq(cs) | GoalNode::FirstOf(cs) => {
                for c in cs {
                    c.collect_verdicts(tick, log);
                }
            }
            GoalNode::Repeat { child, .. } => child.collect_verdicts(tick, log),
            GoalNode::Monitor { monitor, child } => {
                child.collect_verdicts(tick, log);
                if child.status.is_final() {
                    if let Some(v) = monitor.conclude(tick) {
                        log.record(v);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::tactic::{Action, Proposal};

    fn leaf(name: &str) -> GoalStructure {
        Goal::on_state(
            name,
            |_| false,
            Action::always("noop", |_| Proposal::Nothing),
        )
        .into()
    }

    fn set(g: &mut GoalStructure, path: &[usize], s: Status) {
        g.leaf_mut(path).status = s;
        g.settle(false);
    }

    #[test]
    fn cursor_starts_leftmost() {
        let g = GoalStructure::seq(vec![leaf("g1"), leaf("g2")]);
        assert_eq!(g.current_goal().unwrap().name(), "g1");
        let single = leaf("g");
        assert_eq!(single.current_leaf_path(), Some(vec![]));
        assert_eq!(single.status(), Status::InProgress);
    }

    #[test]
    fn seq_fails_on_first_failure() {
        let mut g = GoalStructure::seq(vec![leaf("a"), leaf("b"), leaf("c")]);
        set(&mut g, &[0], Status::Success);
        assert_eq!(g.current_goal().unwrap().name(), "b");
        set(&mut g, &[1], Status::Failed);
        assert_eq!(g.status(), Status::Failed);
        assert!(g.current_leaf_path().is_none());
    }

    #[test]
    fn first_of_succeeds_on_any() {
        let mut g = GoalStructure::first_of(vec![leaf("a"), leaf("b")]);
        set(&mut g, &[0], Status::Failed);
        assert_eq!(g.status(), Status::InProgress);
        set(&mut g, &[1], Status::Success);
        assert_eq!(g.status(), Status::Success);
    }

    #[test]
    fn repeat_reinstantiates_until_bound() {
        let mut g = GoalStructure::repeat(leaf("a"), Some(2));
        set(&mut g, &[0], Status::Failed);
        assert_eq!(g.status(), Status::InProgress);
        assert_eq!(g.leaf_at(&[0]).activations(), 2);
        set(&mut g, &[0], Status::Failed);
        assert_eq!(g.status(), Status::Failed);
    }

    #[test]
    fn repeat_does_not_restore_budget() {
        let exhausted = Goal::on_state(
            "a",
            |_| false,
            Action::always("noop", |_| Proposal::Nothing),
        )
        .with_budget(0);
        let mut g = GoalStructure::repeat(exhausted.into(), None);
        assert_eq!(g.settle(false), Status::Failed);
    }

    #[test]
    fn exhaustion_fails_whatever_is_next() {
        let mut g = GoalStructure::seq(vec![leaf("a"), leaf("b")]);
        g.leaf_mut(&[0]).status = Status::Success;
        assert_eq!(g.settle(true), Status::Failed);
        assert_eq!(g.leaf_at(&[1]).status(), Status::Failed);
    }
}
