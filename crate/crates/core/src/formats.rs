//! Text representations of a map: grid, table and description, plus the
//! flat-colour raster used for the image representation.
//!
//! Grid layout, one line per row, each cell written as space, symbol, space:
//!
//! ```text
//!  P  .
//!  .  G
//! ```
//!
//! Table layout, a pipe table whose header holds column indices and whose
//! rows are led by their row index:
//!
//! ```text
//! |   | 0 | 1 |
//! |---|---|---|
//! | 0 | P | . |
//! | 1 | . | G |
//! ```
//!
//! Symbols are `.` empty, `X` hole, `P` player and `G` goal. A player
//! standing on the goal is written `P`. Lines are joined with a single
//! `\n` and there is no trailing newline.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Map, MapError, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    Image,
    Description,
    Table,
    Grid,
}

impl FormatKind {
    pub const ALL: [FormatKind; 4] = [
        FormatKind::Image,
        FormatKind::Description,
        FormatKind::Table,
        FormatKind::Grid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormatKind::Image => "image",
            FormatKind::Description => "description",
            FormatKind::Table => "table",
            FormatKind::Grid => "grid",
        }
    }
}

pub const EMPTY: char = '.';
pub const HOLE: char = 'X';
pub const PLAYER: char = 'P';
pub const GOAL: char = 'G';

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error("no player cell")]
    MissingPlayer,
    #[error("no goal cell")]
    MissingGoal,
    #[error("more than one player cell")]
    DuplicatePlayer,
    #[error("more than one goal cell")]
    DuplicateGoal,
    #[error(transparent)]
    InvalidMap(#[from] MapError),
}

/// A parsed board. `goal` is absent when the player stands on it, which is
/// how the last state of a solved trace looks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoardState {
    pub rows: usize,
    pub cols: usize,
    pub holes: BTreeSet<Pos>,
    pub player: Pos,
    pub goal: Option<Pos>,
}

impl BoardState {
    /// True if this board shows `map` with the player at `player`.
    pub fn matches(&self, map: &Map, player: Pos) -> bool {
        let goal_ok = match self.goal {
            Some(g) => g == map.goal() && player != g,
            None => player == map.goal(),
        };
        self.rows == map.rows()
            && self.cols == map.cols()
            && self.player == player
            && goal_ok
            && self.holes.iter().copied().eq(map.holes())
    }

    fn into_map(self) -> Result<Map, FormatError> {
        let goal = self.goal.ok_or(FormatError::MissingGoal)?;
        Ok(Map::new(
            self.rows,
            self.cols,
            self.holes,
            self.player,
            goal,
        )?)
    }
}

fn symbol(map: &Map, player: Pos, p: Pos) -> char {
    if p == player {
        PLAYER
    } else if p == map.goal() {
        GOAL
    } else if map.is_hole(p) {
        HOLE
    } else {
        EMPTY
    }
}

pub fn emit_grid(map: &Map) -> String {
    emit_grid_state(map, map.player())
}

/// Grid of `map` with the player drawn at `player` instead of its start.
pub fn emit_grid_state(map: &Map, player: Pos) -> String {
    let mut out = String::with_capacity(map.rows() * (3 * map.cols() + 1));
    for r in 0..map.rows() {
        if r > 0 {
            out.push('\n');
        }
        for c in 0..map.cols() {
            out.push(' ');
            out.push(symbol(map, player, Pos::new(r, c)));
            out.push(' ');
        }
    }
    out
}

pub fn emit_table(map: &Map) -> String {
    emit_table_state(map, map.player())
}

pub fn emit_table_state(map: &Map, player: Pos) -> String {
    let mut out = String::from("|   |");
    for c in 0..map.cols() {
        let _ = write!(out, " {c} |");
    }
    out.push_str("\n|");
    for _ in 0..=map.cols() {
        out.push_str("---|");
    }
    for r in 0..map.rows() {
        let _ = write!(out, "\n| {r} |");
        for c in 0..map.cols() {
            let _ = write!(out, " {} |", symbol(map, player, Pos::new(r, c)));
        }
    }
    out
}

/// Fixed-template prose description of a map.
pub fn emit_description(map: &Map) -> String {
    let mut out = format!(
        "The map has {} rows and {} columns. Rows are numbered from 0 at the top and columns from 0 at the left.\n",
        map.rows(),
        map.cols()
    );
    let p = map.player();
    let g = map.goal();
    let _ = writeln!(out, "The player is at row {}, column {}.", p.row, p.col);
    let _ = writeln!(out, "The goal is at row {}, column {}.", g.row, g.col);
    out.push_str("Holes: ");
    let mut any = false;
    for h in map.holes() {
        if any {
            out.push_str("; ");
        }
        let _ = write!(out, "row {}, column {}", h.row, h.col);
        any = true;
    }
    if !any {
        out.push_str("none");
    }
    out.push('.');
    out
}

struct Cells {
    holes: BTreeSet<Pos>,
    player: Option<Pos>,
    goal: Option<Pos>,
}

impl Cells {
    fn new() -> Self {
        Cells {
            holes: BTreeSet::new(),
            player: None,
            goal: None,
        }
    }

    fn put(&mut self, sym: char, p: Pos) -> Result<bool, FormatError> {
        match sym {
            EMPTY => {}
            HOLE => {
                self.holes.insert(p);
            }
            PLAYER => {
                if self.player.replace(p).is_some() {
                    return Err(FormatError::DuplicatePlayer);
                }
            }
            GOAL => {
                if self.goal.replace(p).is_some() {
                    return Err(FormatError::DuplicateGoal);
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn finish(self, rows: usize, cols: usize) -> Result<BoardState, FormatError> {
        Ok(BoardState {
            rows,
            cols,
            holes: self.holes,
            player: self.player.ok_or(FormatError::MissingPlayer)?,
            goal: self.goal,
        })
    }
}

fn body_lines(text: &str) -> Vec<&str> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    text.split('\n').collect()
}

/// Parses a grid that may show the player on the goal.
pub fn parse_grid_state(text: &str) -> Result<BoardState, FormatError> {
    let bad = |msg: String| Err(FormatError::MalformedGrid(msg));
    if text.is_empty() {
        return bad("empty input".into());
    }
    let lines = body_lines(text);
    let width = lines[0].len();
    if width == 0 || !width.is_multiple_of(3) {
        return bad(format!(
            "line 0 has length {width}, not a positive multiple of 3"
        ));
    }
    let cols = width / 3;
    let mut cells = Cells::new();
    for (r, line) in lines.iter().enumerate() {
        if line.len() != width {
            return bad(format!(
                "line {r} has length {}, expected {width}",
                line.len()
            ));
        }
        let bytes = line.as_bytes();
        for c in 0..cols {
            if bytes[3 * c] != b' ' || bytes[3 * c + 2] != b' ' {
                return bad(format!("cell ({r}, {c}) is not space-padded"));
            }
            let sym = bytes[3 * c + 1] as char;
            if !cells.put(sym, Pos::new(r, c))? {
                return bad(format!("unknown symbol {sym:?} at ({r}, {c})"));
            }
        }
    }
    cells.finish(lines.len(), cols)
}

pub fn parse_grid(text: &str) -> Result<Map, FormatError> {
    parse_grid_state(text)?.into_map()
}

fn table_cells(line: &str) -> Option<Vec<&str>> {
    let inner = line.strip_prefix('|')?.strip_suffix('|')?;
    Some(inner.split('|').collect())
}

/// Content of a ` x ` table cell.
fn padded(cell: &str) -> Option<&str> {
    cell.strip_prefix(' ')?
        .strip_suffix(' ')
        .filter(|s| !s.is_empty())
}

/// Parses a table that may show the player on the goal.
pub fn parse_table_state(text: &str) -> Result<BoardState, FormatError> {
    let bad = |msg: String| Err(FormatError::MalformedTable(msg));
    if text.is_empty() {
        return bad("empty input".into());
    }
    let lines = body_lines(text);
    if lines.len() < 3 {
        return bad(format!(
            "{} lines, need a header, a separator and rows",
            lines.len()
        ));
    }
    let Some(header) = table_cells(lines[0]) else {
        return bad("header is not pipe-delimited".into());
    };
    if header[0] != "   " {
        return bad("header corner cell is not blank".into());
    }
    let cols = header.len() - 1;
    for (c, cell) in header[1..].iter().enumerate() {
        if padded(cell).and_then(|s| s.parse::<usize>().ok()) != Some(c) {
            return bad(format!("header cell {c} is {cell:?}"));
        }
    }
    match table_cells(lines[1]) {
        Some(sep) if sep.len() == cols + 1 && sep.iter().all(|s| *s == "---") => {}
        _ => return bad("separator row does not match the header".into()),
    }
    let mut cells = Cells::new();
    for (r, line) in lines[2..].iter().enumerate() {
        let Some(row) = table_cells(line) else {
            return bad(format!("row {r} is not pipe-delimited"));
        };
        if row.len() != cols + 1 {
            return bad(format!(
                "row {r} has {} cells, expected {}",
                row.len() - 1,
                cols
            ));
        }
        if padded(row[0]).and_then(|s| s.parse::<usize>().ok()) != Some(r) {
            return bad(format!("row {r} is labelled {:?}", row[0]));
        }
        for (c, cell) in row[1..].iter().enumerate() {
            let mut chars = padded(cell).unwrap_or("").chars();
            let (Some(sym), None) = (chars.next(), chars.next()) else {
                return bad(format!("cell ({r}, {c}) is {cell:?}"));
            };
            if !cells.put(sym, Pos::new(r, c))? {
                return bad(format!("unknown symbol {sym:?} at ({r}, {c})"));
            }
        }
    }
    cells.finish(lines.len() - 2, cols)
}

pub fn parse_table(text: &str) -> Result<Map, FormatError> {
    parse_table_state(text)?.into_map()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Palette {
    pub empty: [u8; 3],
    pub hole: [u8; 3],
    pub player: [u8; 3],
    pub goal: [u8; 3],
    pub gridline: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            empty: [214, 236, 245],
            hole: [24, 60, 120],
            player: [220, 60, 40],
            goal: [240, 190, 30],
            gridline: [90, 90, 90],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub cell_px: usize,
    pub palette: Palette,
    pub include_gridlines: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            cell_px: 32,
            palette: Palette::default(),
            include_gridlines: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("cell_px must be at least 4, got {0}")]
pub struct BadRenderConfig(pub usize);

/// Packed RGB8 pixels, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Raster {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Binary PPM (`P6`) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

/// Flat-colour rendering, one `cell_px` square per cell. Gridlines, when
/// enabled, overwrite the first pixel row and column of every cell.
pub fn render_image(map: &Map, cfg: &RenderConfig) -> Result<Raster, BadRenderConfig> {
    if cfg.cell_px < 4 {
        return Err(BadRenderConfig(cfg.cell_px));
    }
    let px = cfg.cell_px;
    let width = map.cols() * px;
    let height = map.rows() * px;
    let mut rgb = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let p = Pos::new(y / px, x / px);
            let colour = if cfg.include_gridlines && (y % px == 0 || x % px == 0) {
                cfg.palette.gridline
            } else {
                match symbol(map, map.player(), p) {
                    PLAYER => cfg.palette.player,
                    GOAL => cfg.palette.goal,
                    HOLE => cfg.palette.hole,
                    _ => cfg.palette.empty,
                }
            };
            rgb.extend_from_slice(&colour);
        }
    }
    Ok(Raster { width, height, rgb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::golden_map;
    use alloc::collections::BTreeSet;

    fn tiny() -> Map {
        Map::new(2, 2, [], Pos::new(0, 0), Pos::new(1, 1)).unwrap()
    }

    #[test]
    fn grid_smallest() {
        assert_eq!(emit_grid(&tiny()), " P  . \n .  G ");
    }

    #[test]
    fn grid_golden_final_state() {
        let m = golden_map();
        let g = emit_grid_state(&m, Pos::new(4, 6));
        assert_eq!(g.lines().nth(4), Some(" .  .  .  .  .  .  P  . "));
        let s = parse_grid_state(&g).unwrap();
        assert_eq!(s.goal, None);
        assert!(s.matches(&m, Pos::new(4, 6)));
    }

    #[test]
    fn grid_parse_golden_first_block() {
        let block = " .  .  .  .  .  X  .  . \n .  X  .  .  .  .  X  . \n .  .  .  .  .  .  .  . \n .  .  .  .  .  .  X  . \n .  .  .  .  .  .  G  . \n .  X  .  .  .  .  .  X \n .  .  .  .  .  P  .  . \n .  .  X  .  .  .  .  . ";
        let m = parse_grid(block).unwrap();
        assert_eq!(m.player(), Pos::new(6, 5));
        assert_eq!(m.goal(), Pos::new(4, 6));
        let f = golden_map();
        assert!(m.holes().eq(f.holes()));
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(parse_grid(""), Err(FormatError::MalformedGrid(_))));
        assert_eq!(
            parse_grid(" P  P \n .  G "),
            Err(FormatError::DuplicatePlayer)
        );
        assert_eq!(
            parse_grid(" G  . \n .  G "),
            Err(FormatError::DuplicateGoal)
        );
        assert_eq!(
            parse_grid(" .  . \n .  G "),
            Err(FormatError::MissingPlayer)
        );
        assert_eq!(parse_grid(" P  . \n .  . "), Err(FormatError::MissingGoal));
        assert!(matches!(
            parse_grid(" P  . \n .  G  . "),
            Err(FormatError::MalformedGrid(_))
        ));
        assert!(matches!(
            parse_grid(" P  . \n .  Q "),
            Err(FormatError::MalformedGrid(_))
        ));
        assert!(matches!(
            parse_grid(" P . \n .  G "),
            Err(FormatError::MalformedGrid(_))
        ));
        assert!(matches!(
            parse_grid("P   . \n .  G "),
            Err(FormatError::MalformedGrid(_))
        ));
        // a single row is a valid grid but not a valid map
        assert!(matches!(
            parse_grid(" P  G "),
            Err(FormatError::InvalidMap(_))
        ));
    }

    #[test]
    fn table_smallest() {
        assert_eq!(
            emit_table(&tiny()),
            "|   | 0 | 1 |\n|---|---|---|\n| 0 | P | . |\n| 1 | . | G |"
        );
        assert!(parse_table(&emit_table(&tiny()))
            .unwrap()
            .same_layout(&tiny()));
    }

    #[test]
    fn table_two_digit_indices_round_trip() {
        let m = Map::new(12, 11, [Pos::new(10, 10)], Pos::new(11, 0), Pos::new(0, 10)).unwrap();
        let t = emit_table(&m);
        assert!(t.starts_with("|   | 0 | 1 |"));
        assert!(t.contains("| 11 | P |"));
        assert!(parse_table(&t).unwrap().same_layout(&m));
    }

    #[test]
    fn table_errors() {
        assert!(matches!(
            parse_table(""),
            Err(FormatError::MalformedTable(_))
        ));
        let two_p = "|   | 0 | 1 |\n|---|---|---|\n| 0 | P | P |\n| 1 | . | G |";
        assert_eq!(parse_table(two_p), Err(FormatError::DuplicatePlayer));
        let ragged = "|   | 0 | 1 |\n|---|---|---|\n| 0 | P |\n| 1 | . | G |";
        assert!(matches!(
            parse_table(ragged),
            Err(FormatError::MalformedTable(_))
        ));
        let misnumbered = "|   | 0 | 1 |\n|---|---|---|\n| 1 | P | . |\n| 0 | . | G |";
        assert!(matches!(
            parse_table(misnumbered),
            Err(FormatError::MalformedTable(_))
        ));
        let wide = "|   | 0 | 1 |\n|---|---|---|\n| 0 | PP | . |\n| 1 | . | G |";
        assert!(matches!(
            parse_table(wide),
            Err(FormatError::MalformedTable(_))
        ));
    }

    #[test]
    fn description_template() {
        let d = emit_description(&tiny());
        assert!(d.contains("Holes: none"));
        assert!(d.contains("The player is at row 0, column 0."));
        assert!(d.contains("The goal is at row 1, column 1."));
        let f = emit_description(&golden_map());
        let holes = f.lines().last().unwrap();
        assert_eq!(holes.matches("row ").count(), 7);
        assert!(holes.starts_with("Holes: row 0, column 5; row 1, column 1;"));
        assert_eq!(f, emit_description(&golden_map()));
    }

    #[test]
    fn image_blocks_and_determinism() {
        let cfg = RenderConfig {
            cell_px: 8,
            ..RenderConfig::default()
        };
        let m = tiny();
        let img = render_image(&m, &cfg).unwrap();
        assert_eq!((img.width, img.height), (16, 16));
        assert_eq!(img.pixel(4, 4), cfg.palette.player);
        assert_eq!(img.pixel(12, 12), cfg.palette.goal);
        assert_eq!(img.pixel(12, 4), cfg.palette.empty);
        let mut colours = BTreeSet::new();
        for y in 0..16 {
            for x in 0..16 {
                colours.insert(img.pixel(x, y));
            }
        }
        assert_eq!(colours.len(), 3);
        // each 8x8 block is flat
        for (by, bx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let c = img.pixel(bx * 8, by * 8);
            for y in 0..8 {
                for x in 0..8 {
                    assert_eq!(img.pixel(bx * 8 + x, by * 8 + y), c);
                }
            }
        }
        assert_eq!(img.to_ppm(), render_image(&m, &cfg).unwrap().to_ppm());
        assert!(img.to_ppm().starts_with(b"P6\n16 16\n255\n"));
    }

    #[test]
    fn image_gridlines_and_bad_config() {
        let cfg = RenderConfig {
            include_gridlines: true,
            ..RenderConfig::default()
        };
        let img = render_image(&golden_map(), &cfg).unwrap();
        assert_eq!(img.pixel(0, 0), cfg.palette.gridline);
        assert_eq!(img.pixel(5 * 32 + 16, 7 * 32 + 16), cfg.palette.player);
        assert_eq!(img.pixel(2 * 32 + 16, 7 * 32 + 16), cfg.palette.hole);
        let bad = RenderConfig { cell_px: 3, ..cfg };
        assert_eq!(render_image(&golden_map(), &bad), Err(BadRenderConfig(3)));
    }
}
