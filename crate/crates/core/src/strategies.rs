//! Reusable strategies for the button-and-door world: parameterized goal
//! structures plus the navigation-aware tactics that solve them.
//!
//! The tactics rank their options the same way throughout: go to the target
//! if the belief says it is reachable, otherwise explore the nearest
//! frontier, otherwise press a reachable button (fewest presses first). Doors
//! not re-observed since the last interaction are assumed passable, so the
//! agent walks up to them and finds out.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::agent::{Action, AgentState, Candidate, Goal, GoalStructure, Proposal, Tactic};
use crate::environment::CommandKind;
use crate::navigation::{astar, Cell, Exploration, NavGrid, NavKnowledge, Path};
use crate::sim::{Level, BUTTON};
use crate::verdicts::{ag_goal, ef_goal, StatePredicate};
use crate::wom::Scalar;

/// What an agent is told up front about a level: its wall layout and view
/// range. Doors and buttons have to be discovered.
pub fn navigation_for(level: &Level) -> NavKnowledge {
    NavKnowledge::new(level.layout(), level.visibility_range)
}

pub fn agent_cell(s: &AgentState) -> Cell {
    Cell::from_position(s.wom.agent_position)
}

fn planning_grid(s: &AgentState) -> Option<NavGrid> {
    s.nav
        .as_ref()
        .map(|nav| nav.planning_grid(&s.wom, s.fresh_since()))
}

/// Shortest path to the nearest of `targets` (ties: row-major smallest).
pub fn path_to_nearest(s: &AgentState, targets: &BTreeSet<Cell>) -> Option<Path> {
    let grid = planning_grid(s)?;
    let from = agent_cell(s);
    if !grid.is_passable(from) {
        return None;
    }
    let dist = grid.distances_from(from);
    let (_, _, target) = targets
        .iter()
        .filter_map(|c| {
            let i = grid.index(*c)?;
            (dist[i] != u32::MAX).then_some((dist[i], i, *c))
        })
        .min()?;
    astar(&grid, from, target).ok()
}

fn exploration_path(s: &AgentState) -> Option<Path> {
    match s.nav.as_ref()?.explore(&s.wom, s.fresh_since()) {
        Ok(Exploration::Path(p)) if p.cost > 0 => Some(p),
        _ => None,
    }
}

pub fn is_fully_explored(s: &AgentState) -> bool {
    s.nav.as_ref().is_some_and(|nav| {
        matches!(
            nav.explore(&s.wom, s.fresh_since()),
            Ok(Exploration::FullyExplored)
        )
    })
}

fn step_along(fx: &mut crate::agent::Effector<'_>, path: &Path) -> Proposal {
    fx.execute(CommandKind::MoveToward(path.next_step().to_position()));
    Proposal::Candidate(Candidate::Unit)
}

pub fn navigate_to(name: impl Into<String>, cells: BTreeSet<Cell>) -> Action {
    let cells = Arc::new(cells);
    let guard_cells = Arc::clone(&cells);
    Action::new(
        name,
        move |s| path_to_nearest(s, &guard_cells).is_some_and(|p| p.cost > 0),
        move |fx| match path_to_nearest(fx.state(), &cells) {
            Some(p) => step_along(fx, &p),
            None => Proposal::Nothing,
        },
    )
}

pub fn explore() -> Action {
    Action::new(
        "explore",
        |s| exploration_path(s).is_some(),
        |fx| match exploration_path(fx.state()) {
            Some(p) => step_along(fx, &p),
            None => Proposal::Nothing,
        },
    )
    .with_rank(1)
}

/// Reachable known buttons ordered by (successful presses, distance, id).
fn button_choice(s: &AgentState, max_presses: Option<usize>) -> Option<(String, Cell, Path)> {
    let mut best: Option<(usize, u32, String, Cell, Path)> = None;
    for e in s.wom.all_entities() {
        if e.entity_type != BUTTON {
            continue;
        }
        let presses = s.successful_interactions(&e.id);
        if max_presses.is_some_and(|m| presses > m) {
            continue;
        }
        let cell = Cell::from_position(e.position);
        let Some(path) = path_to_nearest(s, &BTreeSet::from([cell])) else {
            continue;
        };
        let key = (presses, path.cost, e.id.clone());
        if best
            .as_ref()
            .is_none_or(|(p, c, id, _, _)| key < (*p, *c, id.clone()))
        {
            best = Some((key.0, key.1, key.2, cell, path));
        }
    }
    best.map(|(_, _, id, cell, path)| (id, cell, path))
}

fn press(name: &str, max_presses: Option<usize>) -> Action {
    Action::new(
        name,
        move |s| button_choice(s, max_presses).is_some(),
        move |fx| {
            let Some((id, cell, path)) = button_choice(fx.state(), max_presses) else {
                return Proposal::Nothing;
            };
            if agent_cell(fx.state()).is_adjacent_or_same(cell) {
                fx.execute(CommandKind::Interact(id));
                Proposal::Candidate(Candidate::Unit)
            } else {
                step_along(fx, &path)
            }
        },
    )
    .with_rank(2)
}

/// Walks to and presses the least-pressed reachable button.
pub fn press_buttons() -> Action {
    press("press-button", None)
}

/// Like [`press_buttons`] but only for buttons never pressed successfully.
pub fn press_unpressed_buttons() -> Action {
    press("press-new-button", Some(0))
}

pub fn in_room(name: &str, cells: BTreeSet<Cell>) -> StatePredicate {
    StatePredicate::new(format!("in-room:{name}"), move |s| {
        cells.contains(&agent_cell(s))
    })
}

pub fn knows_entity(id: &str) -> StatePredicate {
    let id = id.to_owned();
    StatePredicate::new(format!("entity:{id}"), move |s| {
        s.wom.get_element(&id).is_some()
    })
}

/// `EF agent-in-room`.
pub fn reach_room(name: &str, cells: BTreeSet<Cell>) -> GoalStructure {
    let tactic = Tactic::first_of(vec![
        navigate_to(format!("goto:{name}"), cells.clone()).into(),
        explore().into(),
        press_buttons().into(),
    ]);
    ef_goal(in_room(name, cells), vec![], tactic)
}

/// `EF entity-known`: the entity shows up in the belief.
pub fn find_entity(id: &str) -> GoalStructure {
    let tactic = Tactic::first_of(vec![explore().into(), press_buttons().into()]);
    ef_goal(knows_entity(id), vec![], tactic)
}

/// Explore every cell reachable without interacting.
pub fn explore_all() -> GoalStructure {
    let done = StatePredicate::new("fully-explored", is_fully_explored);
    ef_goal(done, vec![], explore().into())
}

/// Explores and presses every reachable button at least once.
pub fn exhaust_level() -> GoalStructure {
    let done = |s: &AgentState| is_fully_explored(s) && button_choice(s, Some(0)).is_none();
    let witness = Action::new("done", done, |_| Proposal::Candidate(Candidate::Unit));
    let tactic = Tactic::first_of(vec![
        witness.into(),
        explore().into(),
        press_unpressed_buttons().into(),
    ]);
    Goal::on_state("exhaust-level", done, tactic).into()
}

fn door_open_in_belief(s: &AgentState, door: &str) -> bool {
    s.wom
        .get_element(door)
        .and_then(|e| e.property("open"))
        .and_then(Scalar::as_bool)
        .unwrap_or(false)
}

/// Door → buttons expected to toggle it, as declared by the level.
pub fn declared_wiring(level: &Level) -> BTreeMap<String, Vec<String>> {
    level
        .doors
        .iter()
        .map(|d| {
            let buttons = level
                .wired_buttons(&d.id)
                .into_iter()
                .map(str::to_owned)
                .collect();
            (d.id.clone(), buttons)
        })
        .collect()
}

/// `AG(door open → door initially open, or one of its buttons was pressed)`
/// for every door in `expected`, checked while [`exhaust_level`] runs.
pub fn door_wiring(level: &Level, expected: &BTreeMap<String, Vec<String>>) -> GoalStructure {
    let mut structure = exhaust_level();
    for (door, buttons) in expected.iter().rev() {
        let initially_open = level.door(door).is_some_and(|d| d.initially_open);
        let phi_door = door.clone();
        let phi = StatePredicate::new(format!("open:{door}"), move |s| {
            door_open_in_belief(s, &phi_door)
        });
        let buttons = buttons.clone();
        let psi = StatePredicate::new(format!("pressed-any:{}", buttons.join("|")), move |s| {
            initially_open || buttons.iter().any(|b| s.successful_interactions(b) > 0)
        });
        structure = ag_goal(format!("door-wiring:{door}"), phi, psi, structure);
    }
    structure
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{Status, TestAgent};
    use crate::sim::{bundled_level, SimEnvironment};

    fn agent(level: &Level, budget: u64) -> TestAgent {
        TestAgent::new("agent")
            .attach_environment(SimEnvironment::new(level.clone()))
            .with_navigation(navigation_for(level))
            .budget(budget)
    }

    #[test]
    fn reaches_treasure_on_first_level() {
        let level = bundled_level("buttons_doors_1").unwrap();
        let mut a = agent(&level, 10_000);
        a.set_goal(reach_room(
            "treasure",
            level.room("treasure").unwrap().clone(),
        ))
        .unwrap();
        assert_eq!(a.run_to_completion(), Ok(Status::Success));
        assert_eq!(a.verdicts().pass_count(), 1);
    }

    #[test]
    fn finds_entity_behind_door() {
        let level = bundled_level("chain_3").unwrap();
        let mut a = agent(&level, 10_000);
        a.set_goal(find_entity("b3")).unwrap();
        assert_eq!(a.run_to_completion(), Ok(Status::Success));
    }

    #[test]
    fn explores_maze() {
        let level = bundled_level("maze_explore").unwrap();
        let mut a = agent(&level, 1_000);
        a.set_goal(explore_all()).unwrap();
        assert_eq!(a.run_to_completion(), Ok(Status::Success));
        for b in &level.buttons {
            assert!(a.state().wom.get_element(&b.id).is_some(), "{}", b.id);
        }
    }

    #[test]
    fn door_wiring_passes_on_chain() {
        let level = bundled_level("chain_3").unwrap();
        let mut a = agent(&level, 2_000);
        a.set_goal(door_wiring(&level, &declared_wiring(&level)))
            .unwrap();
        a.run_to_completion().unwrap();
        let v = a.verdicts();
        assert_eq!(v.fail_count(), 0);
        assert_eq!(v.pass_count(), 3);
    }

    #[test]
    fn door_wiring_catches_wrong_expectation() {
        let level = bundled_level("chain_3").unwrap();
        let mut wrong = declared_wiring(&level);
        wrong.insert("d2".into(), vec!["b3".into()]);
        let mut a = agent(&level, 2_000);
        a.set_goal(door_wiring(&level, &wrong)).unwrap();
        a.run_to_completion().unwrap();
        let fails: Vec<_> = a
            .verdicts()
            .entries()
            .iter()
            .filter(|v| v.kind == crate::verdicts::VerdictKind::Fail)
            .map(|v| v.assertion_name.clone())
            .collect();
        assert_eq!(fails, ["door-wiring:d2"]);
    }
}
