//! Core of the lakebench FrozenLake planning benchmark.
//!
//! Everything here is pure and `no_std` (with `alloc`): the environment
//! simulator, shortest-path search, the text map formats, seeded map
//! generation, chain-of-thought synthesis and response scoring. File
//! formats, dataset export, the inference client and the CLI live in the
//! `lakebench` crate.

#![no_std]

extern crate alloc;

pub mod eval;
pub mod fixtures;
pub mod formats;
pub mod gen;
pub mod model;
pub mod path;
pub mod trace;

pub use eval::{
    aggregate, parse_response, score, FailureKind, Report, SampleMeta, ScoreConfig, Verdict,
};
pub use formats::{emit_description, emit_grid, emit_table, parse_grid, parse_table, FormatKind};
pub use gen::{build_split, embed_map, generate_map, GenConstraints, SplitSpec};
pub use model::{d_inf, rollout, step, Map, Move, Pos, RolloutResult, StepOutcome};
pub use path::{astar_shortest, bfs_shortest, is_solvable, PathResult, Unsolvable};
pub use trace::{synthesize_trace, Trace, TraceFormat};
