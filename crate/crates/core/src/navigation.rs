//! Grid navigation: A* pathfinding, frontier exploration and line of sight.
//!
//! Movement is 4-connected with unit step cost. Cells are addressed by column
//! `x` and row `y`; the row-major index `y * width + x` is the final
//! tie-breaker everywhere so that every query has a single answer.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wom::{Scalar, Tick, Vec3, WorldEntity, WorldModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Grid cell containing a world position (x → column, z → row).
    pub fn from_position(p: Vec3) -> Self {
        Cell::new(p.x.round() as i32, p.z.round() as i32)
    }

    pub fn to_position(self) -> Vec3 {
        Vec3::new(f64::from(self.x), 0.0, f64::from(self.y))
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn chebyshev(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    /// 4-neighbours in row-major order: up, left, right, down.
    pub fn neighbours(self) -> [Cell; 4] {
        [
            Cell::new(self.x, self.y - 1),
            Cell::new(self.x - 1, self.y),
            Cell::new(self.x + 1, self.y),
            Cell::new(self.x, self.y + 1),
        ]
    }

    pub fn is_adjacent_or_same(self, other: Cell) -> bool {
        self.manhattan(other) <= 1
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NavError {
    #[error("cell ({}, {}) is out of bounds", .0.x, .0.y)]
    OutOfBounds(Cell),
    #[error("start cell ({}, {}) is blocked", .0.x, .0.y)]
    StartBlocked(Cell),
    #[error("no path")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavGrid {
    width: u32,
    height: u32,
    blocked: Vec<bool>,
    dynamic_blocked: BTreeSet<Cell>,
}

impl NavGrid {
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self {
            width,
            height,
            blocked: vec![false; (width * height) as usize],
            dynamic_blocked: BTreeSet::new(),
        }
    }

    pub fn with_blocked(mut self, cells: impl IntoIterator<Item = Cell>) -> Self {
        for c in cells {
            self.block(c);
        }
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn block(&mut self, c: Cell) {
        if let Some(i) = self.index(c) {
            self.blocked[i] = true;
        }
    }

    pub fn set_dynamic_blocked(&mut self, cells: BTreeSet<Cell>) {
        self.dynamic_blocked = cells.into_iter().filter(|c| self.in_bounds(*c)).collect();
    }

    pub fn dynamic_blocked(&self) -> &BTreeSet<Cell> {
        &self.dynamic_blocked
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height
    }

    /// Row-major index, `None` when out of bounds.
    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c)
            .then(|| c.y as usize * self.width as usize + c.x as usize)
    }

    fn cell_at(&self, index: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((index % w) as i32, (index / w) as i32)
    }

    pub fn is_statically_blocked(&self, c: Cell) -> bool {
        self.index(c).is_none_or(|i| self.blocked[i])
    }

    /// In bounds and neither statically nor dynamically blocked.
    pub fn is_passable(&self, c: Cell) -> bool {
        !self.is_statically_blocked(c) && !self.dynamic_blocked.contains(&c)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.blocked.len()).map(|i| self.cell_at(i))
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(|c| self.is_passable(*c))
    }

    fn passable_neighbours(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        c.neighbours().into_iter().filter(|n| self.is_passable(*n))
    }

    /// Breadth-first step distances from `from`; `u32::MAX` marks unreachable.
    pub fn distances_from(&self, from: Cell) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.blocked.len()];
        let Some(start) = self.index(from) else {
            return dist;
        };
        if !self.is_passable(from) {
            return dist;
        }
        dist[start] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c).unwrap()];
            for n in self.passable_neighbours(c) {
                let ni = self.index(n).unwrap();
                if dist[ni] == u32::MAX {
                    dist[ni] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub cells: Vec<Cell>,
    /// Number of moves, `cells.len() - 1`.
    pub cost: u32,
}

impl Path {
    fn from_cells(cells: Vec<Cell>) -> Self {
        let cost = cells.len() as u32 - 1;
        Self { cells, cost }
    }

    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn end(&self) -> Cell {
        *self.cells.last().unwrap()
    }

    /// The cell one move along the path, or the start for a zero-length path.
    pub fn next_step(&self) -> Cell {
        self.cells.get(1).copied().unwrap_or(self.cells[0])
    }
}

/// Minimum-cost 4-connected path avoiding static and dynamic obstacles.
///
/// The open set is ordered by `(f, h, row-major index)`.
pub fn astar(grid: &NavGrid, from: Cell, to: Cell) -> Result<Path, NavError> {
    let start = grid.index(from).ok_or(NavError::OutOfBounds(from))?;
    let goal = grid.index(to).ok_or(NavError::OutOfBounds(to))?;
    if !grid.is_passable(from) {
        return Err(NavError::StartBlocked(from));
    }
    if !grid.is_passable(to) {
        return Err(NavError::NoPath);
    }

    let n = grid.blocked.len();
    let mut g = vec![u32::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    g[start] = 0;
    let h0 = from.manhattan(to);
    open.push(Reverse((h0, h0, start)));

    while let Some(Reverse((_, _, idx))) = open.pop() {
        if closed[idx] {
            continue;
        }
        if idx == goal {
            let mut cells = vec![grid.cell_at(idx)];
            let mut cur = idx;
            while cur != start {
                cur = parent[cur];
                cells.push(grid.cell_at(cur));
            }
            cells.reverse();
            return Ok(Path::from_cells(cells));
        }
        closed[idx] = true;
        let c = grid.cell_at(idx);
        for nb in grid.passable_neighbours(c) {
            let ni = grid.index(nb).unwrap();
            if closed[ni] {
                continue;
            }
            let tentative = g[idx] + 1;
            if tentative < g[ni] {
                g[ni] = tentative;
                parent[ni] = idx;
                let h = nb.manhattan(to);
                open.push(Reverse((tentative + h, h, ni)));
            }
        }
    }
    Err(NavError::NoPath)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exploration {
    Path(Path),
    FullyExplored,
}

/// Unseen passable cells bordering a seen passable cell.
pub fn frontier(grid: &NavGrid, seen: &BTreeSet<Cell>) -> Vec<Cell> {
    grid.passable_cells()
        .filter(|c| !seen.contains(c))
        .filter(|c| {
            c.neighbours()
                .iter()
                .any(|n| seen.contains(n) && grid.is_passable(*n))
        })
        .collect()
}

/// Path to the nearest reachable frontier cell (ties: row-major smallest).
pub fn explore(grid: &NavGrid, seen: &BTreeSet<Cell>, from: Cell) -> Result<Exploration, NavError> {
    if !grid.in_bounds(from) {
        return Err(NavError::OutOfBounds(from));
    }
    if !grid.is_passable(from) {
        return Err(NavError::StartBlocked(from));
    }
    let dist = grid.distances_from(from);
    let target = frontier(grid, seen)
        .into_iter()
        .filter_map(|c| {
            let i = grid.index(c).unwrap();
            (dist[i] != u32::MAX).then_some((dist[i], i, c))
        })
        .min();
    match target {
        Some((_, _, cell)) => astar(grid, from, cell).map(Exploration::Path),
        None => Ok(Exploration::FullyExplored),
    }
}

/// Integer Bresenham line from `a` to `b`, both endpoints included.
pub fn bresenham(a: Cell, b: Cell) -> Vec<Cell> {
    let dx = (b.x - a.x).abs();
    let dy = -(b.y - a.y).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (a.x, a.y);
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push(Cell::new(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// True when no cell strictly between `from` and `to` is an obstacle.
pub fn line_of_sight(grid: &NavGrid, from: Cell, to: Cell) -> bool {
    let line = bresenham(from, to);
    line.iter()
        .skip(1)
        .take(line.len().saturating_sub(2))
        .all(|c| grid.is_passable(*c))
}

/// Cells within Chebyshev distance `range` that `from` can see.
pub fn visible_cells(grid: &NavGrid, from: Cell, range: u32) -> BTreeSet<Cell> {
    let r = range as i32;
    let mut out = BTreeSet::new();
    for y in (from.y - r)..=(from.y + r) {
        for x in (from.x - r)..=(from.x + r) {
            let c = Cell::new(x, y);
            if grid.in_bounds(c) && line_of_sight(grid, from, c) {
                out.insert(c);
            }
        }
    }
    out
}

/// An entity blocks movement and sight when it carries `open == false`.
pub fn is_closed_obstacle(e: &WorldEntity) -> bool {
    matches!(e.property("open"), Some(Scalar::Bool(false)))
}

fn is_open_obstacle(e: &WorldEntity) -> bool {
    matches!(e.property("open"), Some(Scalar::Bool(true)))
}

/// What an agent knows about the navigable space: the static layout it was
/// given, how far it can see, and which cells it has seen so far.
///
/// Doors and similar obstacles come from the belief. An obstacle whose last
/// observation predates `fresh_since` (typically the last interaction) is
/// treated optimistically for planning (passable) and pessimistically for
/// sight (opaque).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavKnowledge {
    pub layout: NavGrid,
    pub view_range: u32,
    pub seen: BTreeSet<Cell>,
}

impl NavKnowledge {
    pub fn new(layout: NavGrid, view_range: u32) -> Self {
        Self {
            layout,
            view_range,
            seen: BTreeSet::new(),
        }
    }

    pub fn planning_grid(&self, belief: &WorldModel, fresh_since: Tick) -> NavGrid {
        let closed = belief
            .all_entities()
            .into_iter()
            .filter(|e| is_closed_obstacle(e) && e.timestamp >= fresh_since)
            .map(|e| Cell::from_position(e.position))
            .collect();
        let mut grid = self.layout.clone();
        grid.set_dynamic_blocked(closed);
        grid
    }

    pub fn sight_grid(&self, belief: &WorldModel, fresh_since: Tick) -> NavGrid {
        let opaque = belief
            .all_entities()
            .into_iter()
            .filter(|e| is_closed_obstacle(e) || (is_open_obstacle(e) && e.timestamp < fresh_since))
            .map(|e| Cell::from_position(e.position))
            .collect();
        let mut grid = self.layout.clone();
        grid.set_dynamic_blocked(opaque);
        grid
    }

    /// Marks what is visible from the believed agent position as seen.
    pub fn observe(&mut self, belief: &WorldModel, fresh_since: Tick) {
        let at = Cell::from_position(belief.agent_position);
        if !self.layout.in_bounds(at) {
            return;
        }
        let sight = self.sight_grid(belief, fresh_since);
        self.seen.extend(visible_cells(&sight, at, self.view_range));
    }

    pub fn explore(&self, belief: &WorldModel, fresh_since: Tick) -> Result<Exploration, NavError> {
        let grid = self.planning_grid(belief, fresh_since);
        explore(
            &grid,
            &self.seen,
            Cell::from_position(belief.agent_position),
        )
    }
}
