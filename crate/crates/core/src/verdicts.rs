//! Assertions and the verdicts they produce.
//!
//! * [`ef_goal`] turns "some execution reaches a state where φ holds" into a
//!   goal structure. Finding a witness records PASS; running out of budget
//!   records UNDECIDED, since a failed search proves nothing.
//! * [`ag_goal`] wraps a driver goal and checks φ → ψ on the belief after
//!   every cycle. The first violation records FAIL; finishing without one
//!   records a PASS that only covers the states actually visited.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{Action, AgentState, Candidate, Goal, GoalStructure, Proposal, Tactic};

#[derive(Clone)]
pub struct StatePredicate {
    name: String,
    eval: Arc<dyn Fn(&AgentState) -> bool + Send + Sync>,
}

impl StatePredicate {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&AgentState) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn constant(value: bool) -> Self {
        Self::new(value.to_string(), move |_| value)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn holds(&self, state: &AgentState) -> bool {
        (self.eval)(state)
    }
}

impl fmt::Debug for StatePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("StatePredicate").field(&self.name).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VerdictKind {
    Pass,
    Fail,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub kind: VerdictKind,
    pub assertion_name: String,
    pub tick: u64,
    pub detail: String,
}

impl Verdict {
    pub fn new(
        kind: VerdictKind,
        assertion_name: impl Into<String>,
        tick: u64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            kind,
            assertion_name: assertion_name.into(),
            tick,
            detail: detail.into(),
        }
    }
}

/// Append-only collection of verdicts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerdictLog {
    entries: Vec<Verdict>,
    passes: usize,
    fails: usize,
    undecided: usize,
}

impl VerdictLog {
    pub fn record(&mut self, v: Verdict) {
        match v.kind {
            VerdictKind::Pass => self.passes += 1,
            VerdictKind::Fail => self.fails += 1,
            VerdictKind::Undecided => self.undecided += 1,
        }
        self.entries.push(v);
    }

    pub fn entries(&self) -> &[Verdict] {
        &self.entries
    }

    pub fn fail_count(&self) -> usize {
        self.fails
    }

    pub fn pass_count(&self) -> usize {
        self.passes
    }

    pub fn undecided_count(&self) -> usize {
        self.undecided
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The report file: one JSON object per verdict per line.
    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|v| serde_json::to_string(v).expect("verdict serializes") + "\n")
            .collect()
    }

    pub fn from_json_lines(text: &str) -> Result<Self, serde_json::Error> {
        let mut log = Self::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            log.record(serde_json::from_str(line)?);
        }
        Ok(log)
    }
}

/// Checks `antecedent → consequent` on the belief after every cycle.
#[derive(Debug)]
pub struct Monitor {
    name: String,
    antecedent: StatePredicate,
    consequent: StatePredicate,
    violated_at: Option<u64>,
    checks: u64,
    concluded: bool,
}

impl Monitor {
    pub fn new(
        name: impl Into<String>,
        antecedent: StatePredicate,
        consequent: StatePredicate,
    ) -> Self {
        Self {
            name: name.into(),
            antecedent,
            consequent,
            violated_at: None,
            checks: 0,
            concluded: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn violated_at(&self) -> Option<u64> {
        self.violated_at
    }

    pub(crate) fn check(&mut self, state: &AgentState, tick: u64) -> Option<Verdict> {
        self.checks += 1;
        if self.violated_at.is_some() {
            return None;
        }
        if self.antecedent.holds(state) && !self.consequent.holds(state) {
            self.violated_at = Some(tick);
            return Some(Verdict::new(
                VerdictKind::Fail,
                &self.name,
                tick,
                format!(
                    "{} held but {} did not",
                    self.antecedent.name(),
                    self.consequent.name()
                ),
            ));
        }
        None
    }

    pub(crate) fn conclude(&mut self, tick: u64) -> Option<Verdict> {
        if self.concluded {
            return None;
        }
        self.concluded = true;
        if self.violated_at.is_some() {
            return None;
        }
        Some(Verdict::new(
            VerdictKind::Pass,
            &self.name,
            tick,
            format!("bounded: held on {} visited belief states", self.checks),
        ))
    }

    pub(crate) fn rearm(&mut self) {
        self.concluded = false;
    }
}

/// `EF φ`: helper subgoals first, then a goal solved once φ holds on the
/// belief. `tactic` is what drives the agent towards φ; an extra action that
/// fires as soon as φ holds is placed in front of it.
pub fn ef_goal(phi: StatePredicate, helpers: Vec<GoalStructure>, tactic: Tactic) -> GoalStructure {
    let name = format!("EF {}", phi.name());
    let check_phi = phi.clone();
    let witness = Action::new(
        "witness",
        move |s| check_phi.holds(s),
        |_| Proposal::Candidate(Candidate::Unit),
    );
    let target = phi.clone();
    let goal = Goal::on_state(
        phi.name().to_owned(),
        move |s| target.holds(s),
        Tactic::first_of(vec![witness.into(), tactic]),
    )
    .as_existential(name);
    if helpers.is_empty() {
        goal.into()
    } else {
        let mut children = helpers;
        children.push(goal.into());
        GoalStructure::seq(children)
    }
}

/// `AG(φ → ψ)` over the belief states the driver visits.
pub fn ag_goal(
    name: impl Into<String>,
    phi: StatePredicate,
    psi: StatePredicate,
    driver: GoalStructure,
) -> GoalStructure {
    GoalStructure::monitored(Monitor::new(name, phi, psi), driver)
}
