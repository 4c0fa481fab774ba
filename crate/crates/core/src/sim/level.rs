use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::navigation::{Cell, NavGrid};

pub const DEFAULT_VISIBILITY_RANGE: u32 = 4;

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("level has no grid rows")]
    EmptyGrid,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("unexpected character {ch:?} at row {row}, column {col}")]
    UnexpectedChar { row: usize, col: usize, ch: char },
    #[error("level has no agent start `A`")]
    MissingAgent,
    #[error("level has more than one agent start")]
    MultipleAgents,
    #[error("duplicate entity id `{0}`")]
    DuplicateId(String),
    #[error("wiring references unknown button `{0}`")]
    UnknownButton(String),
    #[error("wiring references unknown door `{0}`")]
    UnknownDoor(String),
    #[error("room `{room}` cell ({x}, {y}) is out of bounds")]
    RoomOutOfBounds { room: String, x: i32, y: i32 },
    #[error("visibility range must be positive")]
    ZeroVisibility,
    #[error("invalid metadata block: {0}")]
    Metadata(#[from] serde_json::Error),
    #[error("cannot read level: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Button {
    pub id: String,
    pub cell: Cell,
    pub wiring: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Door {
    pub id: String,
    pub cell: Cell,
    pub initially_open: bool,
}

/// A button-and-door grid level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub width: u32,
    pub height: u32,
    pub walls: BTreeSet<Cell>,
    pub buttons: Vec<Button>,
    pub doors: Vec<Door>,
    pub agent_start: Cell,
    pub rooms: BTreeMap<String, BTreeSet<Cell>>,
    pub visibility_range: u32,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Metadata {
    #[serde(default)]
    wiring: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    rooms: BTreeMap<String, Vec<[i32; 2]>>,
    #[serde(default = "default_range")]
    visibility_range: u32,
}

fn default_range() -> u32 {
    DEFAULT_VISIBILITY_RANGE
}

enum Token {
    Wall,
    Floor,
    Agent,
    Button(String),
    Door(String, bool),
}

fn tokenize(row: usize, line: &str) -> Result<Vec<Token>, LevelError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            '#' => out.push(Token::Wall),
            '.' => out.push(Token::Floor),
            'A' => out.push(Token::Agent),
            'b' | 'd' | 'D' => {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                if end == start {
                    return Err(LevelError::UnexpectedChar { row, col: i, ch });
                }
                let digits: String = chars[start..end].iter().collect();
                out.push(match ch {
                    'b' => Token::Button(format!("b{digits}")),
                    'd' => Token::Door(format!("d{digits}"), false),
                    _ => Token::Door(format!("d{digits}"), true),
                });
                i = end;
                continue;
            }
            _ => return Err(LevelError::UnexpectedChar { row, col: i, ch }),
        }
        i += 1;
    }
    Ok(out)
}

impl Level {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, LevelError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the text format: one grid row per line, then an optional JSON
    /// metadata block starting on the first line that begins with `{`.
    pub fn parse(text: &str) -> Result<Self, LevelError> {
        let mut grid_lines = Vec::new();
        let mut metadata_text = String::new();
        let mut in_metadata = false;
        for line in text.lines() {
            if in_metadata {
                metadata_text.push_str(line);
                metadata_text.push('\n');
                continue;
            }
            let trimmed = line.trim();
            if trimmed.starts_with('{') {
                in_metadata = true;
                metadata_text.push_str(line);
                metadata_text.push('\n');
            } else if !trimmed.is_empty() {
                grid_lines.push(trimmed);
            }
        }
        let meta: Metadata = if in_metadata {
            serde_json::from_str(&metadata_text)?
        } else {
            Metadata {
                visibility_range: DEFAULT_VISIBILITY_RANGE,
                ..Metadata::default()
            }
        };
        if meta.visibility_range == 0 {
            return Err(LevelError::ZeroVisibility);
        }
        if grid_lines.is_empty() {
            return Err(LevelError::EmptyGrid);
        }

        let mut walls = BTreeSet::new();
        let mut buttons = Vec::new();
        let mut doors = Vec::new();
        let mut agent = None;
        let mut ids = BTreeSet::new();
        let mut width = None;
        for (y, line) in grid_lines.iter().enumerate() {
            let tokens = tokenize(y, line)?;
            let expected = *width.get_or_insert(tokens.len());
            if tokens.len() != expected {
                return Err(LevelError::RaggedRow {
                    row: y,
                    found: tokens.len(),
                    expected,
                });
            }
            for (x, token) in tokens.into_iter().enumerate() {
                let cell = Cell::new(x as i32, y as i32);
                match token {
                    Token::Wall => {
                        walls.insert(cell);
                    }
                    Token::Floor => {}
                    Token::Agent => {
                        if agent.replace(cell).is_some() {
                            return Err(LevelError::MultipleAgents);
                        }
                    }
                    Token::Button(id) => {
                        if !ids.insert(id.clone()) {
                            return Err(LevelError::DuplicateId(id));
                        }
                        buttons.push(Button {
                            id,
                            cell,
                            wiring: Vec::new(),
                        });
                    }
                    Token::Door(id, open) => {
                        if !ids.insert(id.clone()) {
                            return Err(LevelError::DuplicateId(id));
                        }
                        doors.push(Door {
                            id,
                            cell,
                            initially_open: open,
                        });
                    }
                }
            }
        }
        let width = width.unwrap_or(0) as u32;
        let height = grid_lines.len() as u32;
        if width == 0 {
            return Err(LevelError::EmptyGrid);
        }
        let agent_start = agent.ok_or(LevelError::MissingAgent)?;

        for (button, targets) in meta.wiring {
            let b = buttons
                .iter_mut()
                .find(|b| b.id == button)
                .ok_or_else(|| LevelError::UnknownButton(button.clone()))?;
            for t in &targets {
                if !doors.iter().any(|d| &d.id == t) {
                    return Err(LevelError::UnknownDoor(t.clone()));
                }
            }
            b.wiring = targets;
        }

        let mut rooms = BTreeMap::new();
        for (name, cells) in meta.rooms {
            let mut set = BTreeSet::new();
            for [x, y] in cells {
                if x < 0 || y < 0 || x as u32 >= width || y as u32 >= height {
                    return Err(LevelError::RoomOutOfBounds { room: name, x, y });
                }
                set.insert(Cell::new(x, y));
            }
            rooms.insert(name, set);
        }

        Ok(Level {
            width,
            height,
            walls,
            buttons,
            doors,
            agent_start,
            rooms,
            visibility_range: meta.visibility_range,
        })
    }

    /// Renders the level back into its text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                let c = Cell::new(x, y);
                if self.walls.contains(&c) {
                    out.push('#');
                } else if c == self.agent_start {
                    out.push('A');
                } else if let Some(b) = self.buttons.iter().find(|b| b.cell == c) {
                    out.push_str(&b.id);
                } else if let Some(d) = self.doors.iter().find(|d| d.cell == c) {
                    if d.initially_open {
                        out.push('D');
                        out.push_str(&d.id[1..]);
                    } else {
                        out.push_str(&d.id);
                    }
                } else {
                    out.push('.');
                }
            }
            out.push('\n');
        }
        let meta = Metadata {
            wiring: self
                .buttons
                .iter()
                .map(|b| (b.id.clone(), b.wiring.clone()))
                .collect(),
            rooms: self
                .rooms
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|c| [c.x, c.y]).collect()))
                .collect(),
            visibility_range: self.visibility_range,
        };
        out.push_str(&serde_json::to_string(&meta).expect("metadata serializes"));
        out.push('\n');
        out
    }

    pub fn button(&self, id: &str) -> Option<&Button> {
        self.buttons.iter().find(|b| b.id == id)
    }

    pub fn door(&self, id: &str) -> Option<&Door> {
        self.doors.iter().find(|d| d.id == id)
    }

    pub fn room(&self, name: &str) -> Option<&BTreeSet<Cell>> {
        self.rooms.get(name)
    }

    /// Static layout (walls only): what an agent is given up front.
    pub fn layout(&self) -> NavGrid {
        NavGrid::new(self.width, self.height).with_blocked(self.walls.iter().copied())
    }

    /// Buttons wired to `door`.
    pub fn wired_buttons(&self, door: &str) -> Vec<&str> {
        self.buttons
            .iter()
            .filter(|b| b.wiring.iter().any(|d| d == door))
            .map(|b| b.id.as_str())
            .collect()
    }
}
