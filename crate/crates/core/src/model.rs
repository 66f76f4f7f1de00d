//! Maps, positions, moves and the deterministic environment simulator.
//!
//! Coordinates are `(row, col)` with the origin in the top-left corner, so
//! row 0 is the first line of every rendering.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Smallest accepted side length.
pub const MIN_SIDE: usize = 2;
/// Largest accepted side length.
pub const MAX_SIDE: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

// Positions travel as `[row, col]` pairs in every JSON document.
impl Serialize for Pos {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.row, self.col].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pos {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [row, col] = <[usize; 2]>::deserialize(deserializer)?;
        Ok(Pos { row, col })
    }
}

/// Chebyshev (L∞) distance between two cells.
pub fn d_inf(a: Pos, b: Pos) -> usize {
    a.row.abs_diff(b.row).max(a.col.abs_diff(b.col))
}

/// Manhattan (L1) distance between two cells.
pub fn manhattan(a: Pos, b: Pos) -> usize {
    a.row.abs_diff(b.row) + a.col.abs_diff(b.col)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    /// Fixed order used whenever moves need a stable ranking.
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn name(self) -> &'static str {
        match self {
            Move::Up => "UP",
            Move::Down => "DOWN",
            Move::Left => "LEFT",
            Move::Right => "RIGHT",
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Move::Up | Move::Down)
    }

    pub fn opposite(self) -> Move {
        match self {
            Move::Up => Move::Down,
            Move::Down => Move::Up,
            Move::Left => Move::Right,
            Move::Right => Move::Left,
        }
    }

    /// Target cell of this move from `pos`, or `None` when it would leave a
    /// `rows` x `cols` grid.
    pub fn apply(self, pos: Pos, rows: usize, cols: usize) -> Option<Pos> {
        match self {
            Move::Up => pos.row.checked_sub(1).map(|row| Pos { row, ..pos }),
            Move::Down => (pos.row + 1 < rows).then(|| Pos {
                row: pos.row + 1,
                ..pos
            }),
            Move::Left => pos.col.checked_sub(1).map(|col| Pos { col, ..pos }),
            Move::Right => (pos.col + 1 < cols).then(|| Pos {
                col: pos.col + 1,
                ..pos
            }),
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown move name {0:?}")]
pub struct UnknownMove(pub String);

impl FromStr for Move {
    type Err = UnknownMove;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Move::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMove(s.into()))
    }
}

impl Serialize for Move {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Move {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Comma-space separated move names, e.g. `UP, UP, RIGHT`.
pub fn format_moves(moves: &[Move]) -> String {
    let mut out = String::new();
    for (i, m) in moves.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(m.name());
    }
    out
}

/// All four moves ranked by how directly they lead from `from` to `to`:
/// the vertical move that closes row distance, then the horizontal move that
/// closes column distance, then the remaining moves in `UP, DOWN, LEFT, RIGHT`
/// order.
pub fn direction_preference(from: Pos, to: Pos) -> [Move; 4] {
    let direct = direct_moves(from, to);
    let mut ranked = [Move::Up; 4];
    let mut n = 0;
    for m in direct.iter().copied() {
        ranked[n] = m;
        n += 1;
    }
    for m in Move::ALL {
        if !direct.contains(&m) {
            ranked[n] = m;
            n += 1;
        }
    }
    ranked
}

/// The one or two moves that reduce the distance from `from` to `to`,
/// vertical first. Empty when the cells coincide.
pub fn direct_moves(from: Pos, to: Pos) -> Vec<Move> {
    let mut out = Vec::with_capacity(2);
    if to.row < from.row {
        out.push(Move::Up);
    } else if to.row > from.row {
        out.push(Move::Down);
    }
    if to.col < from.col {
        out.push(Move::Left);
    } else if to.col > from.col {
        out.push(Move::Right);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("map dimensions {rows}x{cols} outside [{MIN_SIDE}, {MAX_SIDE}]")]
    Dimensions { rows: usize, cols: usize },
    #[error("{what} at {pos} is outside a {rows}x{cols} map")]
    OutOfBounds {
        what: &'static str,
        pos: Pos,
        rows: usize,
        cols: usize,
    },
    #[error("player and goal share cell {0}")]
    PlayerOnGoal(Pos),
    #[error("player stands on a hole at {0}")]
    PlayerOnHole(Pos),
    #[error("goal lies on a hole at {0}")]
    GoalOnHole(Pos),
    #[error("hole {0} listed twice")]
    DuplicateHole(Pos),
}

/// A fully observable FrozenLake instance.
///
/// Maps are immutable once built; every constructor validates the
/// invariants (player and goal distinct, both off holes, everything in
/// bounds).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Map {
    id: String,
    rows: usize,
    cols: usize,
    holes: Vec<bool>,
    player: Pos,
    goal: Pos,
    seed: Option<u64>,
}

impl Map {
    pub fn new(
        rows: usize,
        cols: usize,
        holes: impl IntoIterator<Item = Pos>,
        player: Pos,
        goal: Pos,
    ) -> Result<Self, MapError> {
        if !(MIN_SIDE..=MAX_SIDE).contains(&rows) || !(MIN_SIDE..=MAX_SIDE).contains(&cols) {
            return Err(MapError::Dimensions { rows, cols });
        }
        let check = |what, pos: Pos| {
            if pos.row < rows && pos.col < cols {
                Ok(())
            } else {
                Err(MapError::OutOfBounds {
                    what,
                    pos,
                    rows,
                    cols,
                })
            }
        };
        check("player", player)?;
        check("goal", goal)?;
        let mut cells = vec![false; rows * cols];
        for h in holes {
            check("hole", h)?;
            let slot = &mut cells[h.row * cols + h.col];
            if *slot {
                return Err(MapError::DuplicateHole(h));
            }
            *slot = true;
        }
        if player == goal {
            return Err(MapError::PlayerOnGoal(player));
        }
        if cells[player.row * cols + player.col] {
            return Err(MapError::PlayerOnHole(player));
        }
        if cells[goal.row * cols + goal.col] {
            return Err(MapError::GoalOnHole(goal));
        }
        Ok(Map {
            id: String::new(),
            rows,
            cols,
            holes: cells,
            player,
            goal,
            seed: None,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn player(&self) -> Pos {
        self.player
    }

    pub fn goal(&self) -> Pos {
        self.goal
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.row < self.rows && pos.col < self.cols
    }

    /// Out-of-bounds cells are not holes.
    pub fn is_hole(&self, pos: Pos) -> bool {
        self.in_bounds(pos) && self.holes[pos.row * self.cols + pos.col]
    }

    /// Holes in row-major order.
    pub fn holes(&self) -> impl Iterator<Item = Pos> + '_ {
        let cols = self.cols;
        self.holes
            .iter()
            .enumerate()
            .filter(|(_, h)| **h)
            .map(move |(i, _)| Pos::new(i / cols, i % cols))
    }

    pub fn hole_count(&self) -> usize {
        self.holes.iter().filter(|h| **h).count()
    }

    /// Same grid, player and goal; ignores id and seed.
    pub fn same_layout(&self, other: &Map) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.holes == other.holes
            && self.player == other.player
            && self.goal == other.goal
    }

    /// Start-goal Chebyshev distance.
    pub fn d_inf(&self) -> usize {
        d_inf(self.player, self.goal)
    }

    /// A copy with the player moved to `player`.
    pub fn with_player(&self, player: Pos) -> Result<Map, MapError> {
        Map::new(self.rows, self.cols, self.holes(), player, self.goal)
            .map(|m| m.with_id(self.id.clone()).with_seed(self.seed))
    }
}

/// Canonical JSON form of a map; holes are sorted row-major.
#[derive(Serialize, Deserialize)]
struct MapJson {
    id: String,
    rows: usize,
    cols: usize,
    holes: Vec<Pos>,
    player: Pos,
    goal: Pos,
    seed: Option<u64>,
}

impl Serialize for Map {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MapJson {
            id: self.id.clone(),
            rows: self.rows,
            cols: self.cols,
            holes: self.holes().collect(),
            player: self.player,
            goal: self.goal,
            seed: self.seed,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Map {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = MapJson::deserialize(deserializer)?;
        let sorted: BTreeSet<Pos> = raw.holes.iter().copied().collect();
        if sorted.len() != raw.holes.len() {
            let mut seen = BTreeSet::new();
            let dup = raw.holes.iter().find(|h| !seen.insert(**h)).copied();
            if let Some(dup) = dup {
                return Err(serde::de::Error::custom(MapError::DuplicateHole(dup)));
            }
        }
        Map::new(raw.rows, raw.cols, raw.holes, raw.player, raw.goal)
            .map(|m| m.with_id(raw.id).with_seed(raw.seed))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Ok,
    Hole,
    OffGrid,
}

/// One move of the deterministic simulator. Off-grid moves leave the player
/// in place; entering a hole returns the hole's cell.
pub fn step(map: &Map, pos: Pos, mv: Move) -> (Pos, StepOutcome) {
    match mv.apply(pos, map.rows, map.cols) {
        None => (pos, StepOutcome::OffGrid),
        Some(next) if map.is_hole(next) => (next, StepOutcome::Hole),
        Some(next) => (next, StepOutcome::Ok),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutResult {
    pub success: bool,
    pub end_pos: Pos,
    pub fell_in_hole: bool,
    pub hole_pos: Option<Pos>,
    pub off_grid_moves: usize,
    pub steps_executed: usize,
    pub truncated: bool,
}

/// Default replay budget for a map: four moves per cell.
pub fn default_step_cap(map: &Map) -> usize {
    4 * map.rows * map.cols
}

/// Replays `moves` from the map's player position.
///
/// Replay stops on the first hole or once `step_cap` moves have run with
/// more remaining (`truncated`). Success requires the final position, not
/// any intermediate one, to be the goal.
pub fn rollout(map: &Map, moves: &[Move], step_cap: usize) -> RolloutResult {
    let mut pos = map.player;
    let mut off_grid_moves = 0;
    let mut steps_executed = 0;
    for &mv in moves {
        if steps_executed == step_cap {
            return RolloutResult {
                success: false,
                end_pos: pos,
                fell_in_hole: false,
                hole_pos: None,
                off_grid_moves,
                steps_executed,
                truncated: true,
            };
        }
        let (next, outcome) = step(map, pos, mv);
        steps_executed += 1;
        pos = next;
        match outcome {
            StepOutcome::Ok => {}
            StepOutcome::OffGrid => off_grid_moves += 1,
            StepOutcome::Hole => {
                return RolloutResult {
                    success: false,
                    end_pos: pos,
                    fell_in_hole: true,
                    hole_pos: Some(pos),
                    off_grid_moves,
                    steps_executed,
                    truncated: false,
                };
            }
        }
    }
    RolloutResult {
        success: pos == map.goal,
        end_pos: pos,
        fell_in_hole: false,
        hole_pos: None,
        off_grid_moves,
        steps_executed,
        truncated: false,
    }
}
