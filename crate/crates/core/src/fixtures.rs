//! The 8x8 worked example used throughout the tests and as a CLI fixture.

use crate::model::{Map, Pos};

/// Holes of the worked 8x8 example, row-major.
pub const GOLDEN_HOLES: [Pos; 7] = [
    Pos::new(0, 5),
    Pos::new(1, 1),
    Pos::new(1, 6),
    Pos::new(3, 6),
    Pos::new(5, 1),
    Pos::new(5, 7),
    Pos::new(7, 2),
];

pub fn golden_map() -> Map {
    Map::new(8, 8, GOLDEN_HOLES, Pos::new(7, 5), Pos::new(4, 6))
        .expect("fixture map is valid")
        .with_id("golden")
}

/// Expected grid + description transcript for [`golden_map`].
pub const GOLDEN_TRANSCRIPT: &str = include_str!("../fixtures/golden_grid_description.txt");
