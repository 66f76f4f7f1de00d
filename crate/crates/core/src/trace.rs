//! Ground-truth chain-of-thought transcripts.
//!
//! Each step of a solution path becomes a narration of the direct
//! directions towards the goal, any of them blocked by a hole, and the move
//! taken, and/or a labelled rendering of the board after the move. The
//! transcript ends with `Final answer: \boxed{...}`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{emit_grid_state, emit_table_state};
use crate::model::{
    default_step_cap, direct_moves, direction_preference, format_moves, rollout, step, Map, Move,
    Pos, StepOutcome,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    Description,
    Grid,
    Table,
    GridDescription,
    TableDescription,
    None,
}

impl TraceFormat {
    pub const ALL: [TraceFormat; 6] = [
        TraceFormat::Description,
        TraceFormat::Grid,
        TraceFormat::Table,
        TraceFormat::GridDescription,
        TraceFormat::TableDescription,
        TraceFormat::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TraceFormat::Description => "description",
            TraceFormat::Grid => "grid",
            TraceFormat::Table => "table",
            TraceFormat::GridDescription => "grid_description",
            TraceFormat::TableDescription => "table_description",
            TraceFormat::None => "none",
        }
    }

    pub fn narrates(self) -> bool {
        matches!(
            self,
            TraceFormat::Description | TraceFormat::GridDescription | TraceFormat::TableDescription
        )
    }

    /// The board rendering emitted after each move, if any.
    pub fn state_kind(self) -> Option<StateKind> {
        match self {
            TraceFormat::Grid | TraceFormat::GridDescription => Some(StateKind::Grid),
            TraceFormat::Table | TraceFormat::TableDescription => Some(StateKind::Table),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Grid,
    Table,
}

impl StateKind {
    pub fn label(self) -> &'static str {
        match self {
            StateKind::Grid => "Grid:",
            StateKind::Table => "Table:",
        }
    }

    pub fn render(self, map: &Map, player: Pos) -> String {
        match self {
            StateKind::Grid => emit_grid_state(map, player),
            StateKind::Table => emit_table_state(map, player),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("target move {mv} from {from} enters a hole")]
    InconsistentTarget { from: Pos, mv: Move },
    #[error("path does not solve map {0:?}")]
    InvalidPath(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub narration: Option<String>,
    /// Board after the move, without its label line.
    pub state_block: Option<String>,
    pub mv: Move,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub format: TraceFormat,
    pub steps: Vec<TraceStep>,
    pub final_answer: Vec<Move>,
}

/// Byte ranges of the rendered transcript, for verification tooling.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLayout {
    pub moves: Vec<Move>,
    /// Range of each state block, label line excluded.
    pub state_blocks: Vec<Range<usize>>,
    pub final_answer: Range<usize>,
}

/// `Final answer: \boxed{UP, RIGHT}`.
pub fn final_answer_line(moves: &[Move]) -> String {
    format!("Final answer: \\boxed{{{}}}", format_moves(moves))
}

/// The direct directions towards the goal, vertical first, followed by the
/// other two directions in `UP, DOWN, LEFT, RIGHT` order.
pub fn preferred_directions(map: &Map, pos: Pos) -> Vec<Move> {
    direction_preference(pos, map.goal()).to_vec()
}

/// Narration for moving `next_move` from `pos`.
///
/// States the direct directions, flags each that leads into a hole, and
/// always decides `next_move`.
pub fn narrate_step(map: &Map, pos: Pos, next_move: Move) -> Result<String, TraceError> {
    if step(map, pos, next_move).1 == StepOutcome::Hole {
        return Err(TraceError::InconsistentTarget {
            from: pos,
            mv: next_move,
        });
    }
    let direct = direct_moves(pos, map.goal());
    let mut out = String::from("The direct path to the goal is moving ");
    for (i, m) in direct.iter().enumerate() {
        if i > 0 {
            out.push_str(" or ");
        }
        out.push_str(m.name());
    }
    out.push_str(". \n");
    for m in &direct {
        if step(map, pos, *m).1 == StepOutcome::Hole {
            out.push_str(&format!("Moving {m} is blocked by a hole.\n"));
        }
    }
    out.push_str(&format!("Thus, I will move {next_move}."));
    Ok(out)
}

/// Builds the transcript of `path` on `map` in format `fmt`.
pub fn synthesize_trace(map: &Map, path: &[Move], fmt: TraceFormat) -> Result<Trace, TraceError> {
    if !rollout(map, path, default_step_cap(map).max(path.len())).success {
        return Err(TraceError::InvalidPath(map.id().into()));
    }
    let mut steps = Vec::new();
    if fmt != TraceFormat::None {
        let mut pos = map.player();
        for &mv in path {
            let narration = if fmt.narrates() {
                Some(narrate_step(map, pos, mv)?)
            } else {
                None
            };
            pos = step(map, pos, mv).0;
            let state_block = fmt.state_kind().map(|k| k.render(map, pos));
            steps.push(TraceStep {
                narration,
                state_block,
                mv,
            });
        }
    }
    Ok(Trace {
        format: fmt,
        steps,
        final_answer: path.to_vec(),
    })
}

impl Trace {
    pub fn render(&self) -> String {
        self.render_with_layout().0
    }

    pub fn render_with_layout(&self) -> (String, TraceLayout) {
        let mut out = String::new();
        let mut blocks = Vec::new();
        let label = self.format.state_kind().map(StateKind::label);
        for s in &self.steps {
            if let Some(n) = &s.narration {
                out.push_str(n);
            }
            if let (Some(block), Some(label)) = (&s.state_block, label) {
                if s.narration.is_some() {
                    out.push('\n');
                }
                out.push_str(label);
                out.push('\n');
                let start = out.len();
                out.push_str(block);
                blocks.push(start..out.len());
            }
            out.push_str("\n\n");
        }
        let start = out.len();
        out.push_str(&final_answer_line(&self.final_answer));
        let layout = TraceLayout {
            moves: self.steps.iter().map(|s| s.mv).collect(),
            state_blocks: blocks,
            final_answer: start..out.len(),
        };
        (out, layout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{golden_map, GOLDEN_TRANSCRIPT};
    use crate::formats::{parse_grid_state, parse_table_state};
    use crate::path::astar_shortest;
    use Move::*;

    #[test]
    fn golden_directions() {
        let m = golden_map();
        assert_eq!(
            preferred_directions(&m, Pos::new(7, 5)),
            [Up, Right, Down, Left]
        );
        assert_eq!(direct_moves(Pos::new(4, 5), m.goal()), [Right]);
        assert_eq!(direct_moves(Pos::new(6, 6), m.goal()), [Up]);
    }

    #[test]
    fn golden_first_narration() {
        let m = golden_map();
        assert_eq!(
            narrate_step(&m, Pos::new(7, 5), Up).unwrap(),
            "The direct path to the goal is moving UP or RIGHT. \nThus, I will move UP."
        );
    }

    #[test]
    fn blocked_direct_move_is_narrated() {
        // . G .
        // . X .
        // . P .
        let m = Map::new(3, 3, [Pos::new(1, 1)], Pos::new(2, 1), Pos::new(0, 1)).unwrap();
        let path = astar_shortest(&m).unwrap().moves;
        assert_eq!(path[0], Left);
        let n = narrate_step(&m, m.player(), path[0]).unwrap();
        assert_eq!(
            n,
            "The direct path to the goal is moving UP. \nMoving UP is blocked by a hole.\nThus, I will move LEFT."
        );
        let decided = n
            .rsplit("Thus, I will move ")
            .next()
            .unwrap()
            .trim_end_matches('.');
        assert_eq!(decided.parse::<Move>().unwrap(), path[0]);
    }

    #[test]
    fn hole_target_is_inconsistent() {
        let m = golden_map();
        assert_eq!(
            narrate_step(&m, Pos::new(7, 3), Left),
            Err(TraceError::InconsistentTarget {
                from: Pos::new(7, 3),
                mv: Left
            })
        );
    }

    #[test]
    fn second_direct_move_can_be_decided() {
        let m = golden_map();
        let n = narrate_step(&m, Pos::new(7, 5), Right).unwrap();
        assert!(n.starts_with("The direct path to the goal is moving UP or RIGHT. \n"));
        assert!(n.ends_with("Thus, I will move RIGHT."));
    }

    #[test]
    fn golden_transcript() {
        let m = golden_map();
        let path = astar_shortest(&m).unwrap().moves;
        let t = synthesize_trace(&m, &path, TraceFormat::GridDescription).unwrap();
        assert_eq!(t.render(), GOLDEN_TRANSCRIPT);
    }

    #[test]
    fn answer_only() {
        let m = golden_map();
        let t = synthesize_trace(&m, &[Up, Up, Up, Right], TraceFormat::None).unwrap();
        assert_eq!(t.render(), "Final answer: \\boxed{UP, UP, UP, RIGHT}");
    }

    #[test]
    fn invalid_path_rejected() {
        let m = golden_map();
        assert_eq!(
            synthesize_trace(&m, &[Up, Up, Up], TraceFormat::Grid),
            Err(TraceError::InvalidPath("golden".into()))
        );
    }

    #[test]
    fn layout_points_at_state_blocks() {
        let m = golden_map();
        let path = [Right, Up, Up, Up];
        for fmt in [TraceFormat::Grid, TraceFormat::TableDescription] {
            let t = synthesize_trace(&m, &path, fmt).unwrap();
            let (text, layout) = t.render_with_layout();
            assert_eq!(layout.state_blocks.len(), 4);
            let mut pos = m.player();
            for (k, r) in layout.state_blocks.iter().enumerate() {
                pos = step(&m, pos, path[k]).0;
                let board = match fmt.state_kind().unwrap() {
                    StateKind::Grid => parse_grid_state(&text[r.clone()]).unwrap(),
                    StateKind::Table => parse_table_state(&text[r.clone()]).unwrap(),
                };
                assert!(board.matches(&m, pos));
            }
            assert_eq!(&text[layout.final_answer.clone()], final_answer_line(&path));
        }
    }

    #[test]
    fn description_has_no_state_blocks() {
        let m = golden_map();
        let text = synthesize_trace(&m, &[Up, Up, Up, Right], TraceFormat::Description)
            .unwrap()
            .render();
        assert!(!text.contains("Grid:"));
        assert_eq!(text.matches("Thus, I will move").count(), 4);
    }
}
