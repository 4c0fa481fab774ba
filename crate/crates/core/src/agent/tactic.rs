use std::fmt;

use crate::wom::{Scalar, WorldEntity};

use super::{AgentState, Effector};

/// A value proposed by a tactic as a possible solution of its goal.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    Unit,
    Value(Scalar),
    Entity(WorldEntity),
}

/// What an action's effect hands back to the agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    /// Nothing to check this cycle.
    Nothing,
    /// Check this candidate against the goal.
    Candidate(Candidate),
    /// Give up on the goal.
    Abort(String),
}

type GuardFn = Box<dyn Fn(&AgentState) -> bool + Send + Sync>;
type EffectFn = Box<dyn Fn(&mut Effector<'_>) -> Proposal + Send + Sync>;

/// A guarded primitive interaction. The guard must not have side effects; the
/// effect may issue at most one command through the [`Effector`].
pub struct Action {
    name: String,
    rank: i32,
    guard: GuardFn,
    effect: EffectFn,
    slot: usize,
}

impl Action {
    pub fn new(
        name: impl Into<String>,
        guard: impl Fn(&AgentState) -> bool + Send + Sync + 'static,
        effect: impl Fn(&mut Effector<'_>) -> Proposal + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            rank: 0,
            guard: Box::new(guard),
            effect: Box::new(effect),
            slot: usize::MAX,
        }
    }

    pub fn always(
        name: impl Into<String>,
        effect: impl Fn(&mut Effector<'_>) -> Proposal + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, |_| true, effect)
    }

    /// Static rank used by [`super::GreedyCostPolicy`]; lower is preferred.
    pub fn with_rank(mut self, rank: i32) -> Self {
        self.rank = rank;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> i32 {
        self.rank
    }

    pub fn is_enabled(&self, state: &AgentState) -> bool {
        (self.guard)(state)
    }

    pub(crate) fn slot(&self) -> usize {
        self.slot
    }

    pub(crate) fn run(&self, effector: &mut Effector<'_>) -> Proposal {
        (self.effect)(effector)
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Action")
            .field("name", &self.name)
            .field("rank", &self.rank)
            .finish_non_exhaustive()
    }
}

impl From<Action> for Tactic {
    fn from(a: Action) -> Self {
        Tactic::Primitive(a)
    }
}

/// Combinator structure over actions.
#[derive(Debug)]
pub enum Tactic {
    Primitive(Action),
    /// Every enabled action of every child.
    AnyOf(Vec<Tactic>),
    /// Stages in order; only the current stage contributes. A stage is done
    /// once one of its actions ran; after the last stage it starts over.
    Seq {
        stages: Vec<Tactic>,
        current: usize,
    },
    /// The enabled actions of the first child that has any.
    FirstOf(Vec<Tactic>),
}

impl Tactic {
    pub fn any_of(children: Vec<Tactic>) -> Self {
        assert!(!children.is_empty(), "AnyOf needs at least one tactic");
        Tactic::AnyOf(children)
    }

    pub fn seq(stages: Vec<Tactic>) -> Self {
        assert!(!stages.is_empty(), "Seq needs at least one tactic");
        Tactic::Seq { stages, current: 0 }
    }

    pub fn first_of(children: Vec<Tactic>) -> Self {
        assert!(!children.is_empty(), "FirstOf needs at least one tactic");
        Tactic::FirstOf(children)
    }

    pub fn enabled_actions<'a>(&'a self, state: &AgentState) -> Vec<&'a Action> {
        let mut out = Vec::new();
        self.collect_enabled(state, &mut out);
        out
    }

    fn collect_enabled<'a>(&'a self, state: &AgentState, out: &mut Vec<&'a Action>) {
        match self {
            Tactic::Primitive(a) => {
                if a.is_enabled(state) {
                    out.push(a);
                }
            }
            Tactic::AnyOf(children) => {
                for c in children {
                    c.collect_enabled(state, out);
                }
            }
            Tactic::Seq { stages, current } => stages[*current].collect_enabled(state, out),
            Tactic::FirstOf(children) => {
                for c in children {
                    let before = out.len();
                    c.collect_enabled(state, out);
                    if out.len() > before {
                        break;
                    }
                }
            }
        }
    }

    /// Gives every primitive a distinct slot, in pre-order.
    pub(crate) fn number(&mut self, next: &mut usize) {
        match self {
            Tactic::Primitive(a) => {
                a.slot = *next;
                *next += 1;
            }
            Tactic::AnyOf(cs) | Tactic::FirstOf(cs) | Tactic::Seq { stages: cs, .. } => {
                for c in cs {
                    c.number(next);
                }
            }
        }
    }

    /// Records that the action in `slot` ran. Returns `None` when the slot is
    /// not in this subtree, otherwise whether this subtree completed.
    pub(crate) fn mark_executed(&mut self, slot: usize) -> Option<bool> {
        match self {
            Tactic::Primitive(a) => (a.slot == slot).then_some(true),
            Tactic::AnyOf(cs) | Tactic::FirstOf(cs) => {
                cs.iter_mut().find_map(|c| c.mark_executed(slot))
            }
            Tactic::Seq { stages, current } => {
                let done = stages[*current].mark_executed(slot)?;
                if !done {
                    return Some(false);
                }
                *current += 1;
                if *current == stages.len() {
                    *current = 0;
                    Some(true)
                } else {
                    Some(false)
                }
            }
        }
    }

    pub(crate) fn reset(&mut self) {
        match self {
            Tactic::Primitive(_) => {}
            Tactic::AnyOf(cs) | Tactic::FirstOf(cs) => cs.iter_mut().for_each(Tactic::reset),
            Tactic::Seq { stages, current } => {
                *current = 0;
                stages.iter_mut().for_each(Tactic::reset);
            }
        }
    }
}
