//! The reference system under test: a deterministic button-and-door grid game.
//!
//! Rules:
//! * `MOVETOWARD` moves the agent one cell along the A* path to the target
//!   (walls and closed doors block), or does nothing when there is no path.
//! * `INTERACT` on a button toggles every door wired to it, provided the
//!   agent stands on the button or on a 4-adjacent cell. A door the agent is
//!   standing in is left open.
//! * `OBSERVE` changes nothing. Every other command advances the tick.
//! * An observation shows every entity within Chebyshev distance
//!   `visibility_range` whose cell has an unobstructed Bresenham line from
//!   the agent; walls and closed doors block sight.

mod level;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub use level::{Button, Door, Level, LevelError, DEFAULT_VISIBILITY_RANGE};

use crate::environment::{notes, Command, CommandKind, Environment, Observation};
use crate::navigation::{astar, visible_cells, Cell, NavGrid};
use crate::wom::{Tick, WorldEntity, WorldModel};

pub const BUNDLED_LEVELS: [&str; 4] = [
    "buttons_doors_1",
    "chain_3",
    "maze_explore",
    "buttons_doors_sealed",
];

/// Text of a level shipped with the crate.
pub fn bundled(name: &str) -> Option<&'static str> {
    Some(match name {
        "buttons_doors_1" => include_str!("../../../../levels/buttons_doors_1.lvl"),
        "chain_3" => include_str!("../../../../levels/chain_3.lvl"),
        "maze_explore" => include_str!("../../../../levels/maze_explore.lvl"),
        "buttons_doors_sealed" => include_str!("../../../../levels/buttons_doors_sealed.lvl"),
        _ => return None,
    })
}

pub fn bundled_level(name: &str) -> Option<Level> {
    bundled(name).map(|t| Level::parse(t).expect("bundled levels are well-formed"))
}

pub const BUTTON: &str = "button";
pub const DOOR: &str = "door";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameState {
    pub level: Arc<Level>,
    pub agent_cell: Cell,
    pub door_open: BTreeMap<String, bool>,
    pub tick: Tick,
}

impl GameState {
    pub fn new(level: Arc<Level>) -> Self {
        let door_open = level
            .doors
            .iter()
            .map(|d| (d.id.clone(), d.initially_open))
            .collect();
        Self {
            agent_cell: level.agent_start,
            door_open,
            tick: 0,
            level,
        }
    }

    pub fn is_door_open(&self, id: &str) -> bool {
        self.door_open.get(id).copied().unwrap_or(false)
    }

    pub fn closed_door_cells(&self) -> BTreeSet<Cell> {
        self.level
            .doors
            .iter()
            .filter(|d| !self.is_door_open(&d.id))
            .map(|d| d.cell)
            .collect()
    }

    /// Walls plus currently closed doors.
    pub fn grid(&self) -> NavGrid {
        let mut g = self.level.layout();
        g.set_dynamic_blocked(self.closed_door_cells());
        g
    }

    pub fn visible_cells(&self) -> BTreeSet<Cell> {
        visible_cells(&self.grid(), self.agent_cell, self.level.visibility_range)
    }

    pub fn in_room(&self, room: &str) -> bool {
        self.level
            .room(room)
            .is_some_and(|cells| cells.contains(&self.agent_cell))
    }

    /// What the agent currently sees.
    pub fn observe(&self, agent_id: &str) -> WorldModel {
        let visible = self.visible_cells();
        let mut wom = WorldModel::new(agent_id, self.agent_cell.to_position(), self.tick);
        for b in &self.level.buttons {
            if visible.contains(&b.cell) {
                wom = wom.with_entity(WorldEntity::new(
                    &b.id,
                    BUTTON,
                    b.cell.to_position(),
                    self.tick,
                ));
            }
        }
        for d in &self.level.doors {
            if visible.contains(&d.cell) {
                wom = wom.with_entity(
                    WorldEntity::new(&d.id, DOOR, d.cell.to_position(), self.tick)
                        .with_property("open", self.is_door_open(&d.id)),
                );
            }
        }
        wom
    }

    /// Applies one command. Never mutates `self`.
    pub fn step(&self, command: &Command) -> (GameState, Observation) {
        if !command.is_well_formed() {
            let wom = self.observe(&command.agent_id);
            return (
                self.clone(),
                Observation::failed(wom, notes::INVALID_COMMAND),
            );
        }
        let mut next = self.clone();
        let mut result = Ok(());
        match &command.kind {
            CommandKind::Observe => {}
            CommandKind::MoveToward(target) => {
                next.tick += 1;
                let to = Cell::from_position(*target);
                match astar(&self.grid(), self.agent_cell, to) {
                    Ok(path) => next.agent_cell = path.next_step(),
                    Err(_) => result = Err(notes::NO_PATH),
                }
            }
            CommandKind::Interact(id) => {
                next.tick += 1;
                result = next.interact(self, id);
            }
        }
        let wom = next.observe(&command.agent_id);
        let obs = match result {
            Ok(()) => Observation::ok(wom),
            Err(note) => Observation::failed(wom, note),
        };
        (next, obs)
    }

    fn interact(&mut self, before: &GameState, id: &str) -> Result<(), &'static str> {
        let visible = before.visible_cells();
        let level = Arc::clone(&self.level);
        if let Some(b) = level.button(id) {
            if !visible.contains(&b.cell) {
                return Err(notes::UNKNOWN_ENTITY);
            }
            if !before.agent_cell.is_adjacent_or_same(b.cell) {
                return Err(notes::OUT_OF_REACH);
            }
            for door in &b.wiring {
                let cell = level.door(door).map(|d| d.cell);
                if cell == Some(self.agent_cell) {
                    continue;
                }
                if let Some(open) = self.door_open.get_mut(door) {
                    *open = !*open;
                }
            }
            Ok(())
        } else if level.door(id).is_some_and(|d| visible.contains(&d.cell)) {
            Err(notes::OUT_OF_REACH)
        } else {
            Err(notes::UNKNOWN_ENTITY)
        }
    }
}

/// In-process environment running one [`GameState`] session.
#[derive(Debug, Clone)]
pub struct SimEnvironment {
    state: GameState,
    closed: bool,
}

impl SimEnvironment {
    pub fn new(level: Level) -> Self {
        Self::from_state(GameState::new(Arc::new(level)))
    }

    pub fn from_state(state: GameState) -> Self {
        Self {
            state,
            closed: false,
        }
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn close(&mut self) {
        self.closed = true;
    }
}

impl Environment for SimEnvironment {
    fn execute(&mut self, command: &Command) -> Observation {
        if self.closed {
            return Observation::failed(WorldModel::default(), notes::SESSION_CLOSED);
        }
        let (next, obs) = self.state.step(command);
        self.state = next;
        obs
    }
}
