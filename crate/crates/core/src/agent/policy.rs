use super::rng::XorShift64Star;
use super::tactic::Action;
use super::AgentState;

/// Deliberation: picks one of the currently enabled actions.
///
/// Implementations must return an index into `enabled`, which is never empty.
/// This is also where a learned policy would plug in.
pub trait Policy: Send {
    fn name(&self) -> &str;
    fn select(&mut self, enabled: &[&Action], state: &AgentState) -> usize;
}

/// Uniform choice driven by [`XorShift64Star`]. A single enabled action is
/// returned without drawing from the generator.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: XorShift64Star,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: XorShift64Star::new(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn select(&mut self, enabled: &[&Action], _state: &AgentState) -> usize {
        match enabled.len() {
            1 => 0,
            n => self.rng.below(n),
        }
    }
}

/// Picks the enabled action with the lowest static rank; ties go to the
/// earliest action in the list.
#[derive(Debug, Clone, Default)]
pub struct GreedyCostPolicy;

impl Policy for GreedyCostPolicy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn select(&mut self, enabled: &[&Action], _state: &AgentState) -> usize {
        enabled
            .iter()
            .enumerate()
            .min_by_key(|(i, a)| (a.rank(), *i))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

pub fn random_policy(seed: u64) -> Box<dyn Policy> {
    Box::new(RandomPolicy::new(seed))
}

pub fn greedy_cost_policy() -> Box<dyn Policy> {
    Box::new(GreedyCostPolicy)
}
