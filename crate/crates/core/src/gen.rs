//! Seeded map generation, embedding and declarative splits.
//!
//! Each map of a split draws from its own ChaCha8 stream seeded with
//! `map_seed(split_seed, index)`, where `index` counts maps across all
//! entries of the split. A map can therefore be regenerated from its stored
//! seed alone, and the corpus does not depend on generation order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{d_inf, Map, Pos, MAX_SIDE, MIN_SIDE};
use crate::path::is_solvable;

pub const DEFAULT_HOLE_PROB: f64 = 0.1;
pub const DEFAULT_MAX_REJECTIONS: u64 = 100_000;

fn default_hole_prob() -> f64 {
    DEFAULT_HOLE_PROB
}

fn default_true() -> bool {
    true
}

fn default_max_rejections() -> u64 {
    DEFAULT_MAX_REJECTIONS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConstraints {
    pub size: usize,
    #[serde(default = "default_hole_prob")]
    pub hole_prob: f64,
    #[serde(default)]
    pub d_inf_min: Option<usize>,
    #[serde(default)]
    pub d_inf_max: Option<usize>,
    #[serde(default = "default_true")]
    pub require_solvable: bool,
    #[serde(default = "default_max_rejections")]
    pub max_rejections: u64,
}

impl GenConstraints {
    pub fn new(size: usize) -> Self {
        GenConstraints {
            size,
            hole_prob: DEFAULT_HOLE_PROB,
            d_inf_min: None,
            d_inf_max: None,
            require_solvable: true,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        }
    }

    pub fn d_inf_at_least(mut self, min: usize) -> Self {
        self.d_inf_min = Some(min);
        self
    }

    pub fn d_inf_at_most(mut self, max: usize) -> Self {
        self.d_inf_max = Some(max);
        self
    }

    /// Every violated field, prefixed with `prefix`. Bounds that merely
    /// cannot be met (say `d_inf_min` above `size - 1`) are not violations;
    /// generation reports them as exhausted rejections.
    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(MIN_SIDE..=MAX_SIDE).contains(&self.size) {
            out.push(format!(
                "{prefix}size: {} outside [{MIN_SIDE}, {MAX_SIDE}]",
                self.size
            ));
        }
        if !(0.0..1.0).contains(&self.hole_prob) {
            out.push(format!(
                "{prefix}hole_prob: {} outside [0, 1)",
                self.hole_prob
            ));
        }
        if let (Some(lo), Some(hi)) = (self.d_inf_min, self.d_inf_max) {
            if lo > hi {
                out.push(format!("{prefix}d_inf_min: {lo} exceeds d_inf_max {hi}"));
            }
        }
        if self.max_rejections == 0 {
            out.push(format!("{prefix}max_rejections: must be at least 1"));
        }
        out
    }

    fn accepts_distance(&self, d: usize) -> bool {
        self.d_inf_min.is_none_or(|lo| d >= lo) && self.d_inf_max.is_none_or(|hi| d <= hi)
    }

    /// Whether `map` meets every constraint, recomputed from scratch.
    pub fn admits(&self, map: &Map) -> bool {
        map.rows() == self.size
            && map.cols() == self.size
            && self.accepts_distance(map.d_inf())
            && (!self.require_solvable || is_solvable(map))
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GenError {
    #[error("invalid constraints: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("no map met the constraints after {0} candidates")]
    ExhaustedRejections(u64),
    #[error("cannot embed a {rows}x{cols} map into {target}x{target}")]
    EmbedTooSmall {
        rows: usize,
        cols: usize,
        target: usize,
    },
}

fn sample_holes<R: Rng + ?Sized>(size: usize, hole_prob: f64, rng: &mut R) -> Vec<bool> {
    (0..size * size)
        .map(|_| rng.gen::<f64>() < hole_prob)
        .collect()
}

/// Draws candidates until one satisfies `constraints`.
///
/// A candidate marks each cell a hole with probability `hole_prob`, then
/// places the player uniformly on a non-hole cell and the goal uniformly on
/// a remaining non-hole cell.
pub fn generate_map<R: Rng + ?Sized>(
    constraints: &GenConstraints,
    rng: &mut R,
) -> Result<Map, GenError> {
    let problems = constraints.violations("");
    if !problems.is_empty() {
        return Err(GenError::Invalid(problems));
    }
    let n = constraints.size;
    for _ in 0..constraints.max_rejections {
        let holes = sample_holes(n, constraints.hole_prob, rng);
        let free: Vec<usize> = (0..n * n).filter(|i| !holes[*i]).collect();
        if free.len() < 2 {
            continue;
        }
        let p = rng.gen_range(0..free.len());
        let mut g = rng.gen_range(0..free.len() - 1);
        if g >= p {
            g += 1;
        }
        let at = |i: usize| Pos::new(i / n, i % n);
        let (player, goal) = (at(free[p]), at(free[g]));
        if !constraints.accepts_distance(d_inf(player, goal)) {
            continue;
        }
        let hole_cells = (0..n * n).filter(|i| holes[*i]).map(at);
        let map =
            Map::new(n, n, hole_cells, player, goal).expect("candidate is valid by construction");
        if constraints.require_solvable && !is_solvable(&map) {
            continue;
        }
        return Ok(map);
    }
    Err(GenError::ExhaustedRejections(constraints.max_rejections))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedSpec {
    pub target_size: usize,
    pub source: Map,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Embedding {
    pub row_offset: usize,
    pub col_offset: usize,
}

/// Copies `spec.source` into a fresh random `target_size` background.
///
/// The background is drawn with `hole_prob` and has no player or goal; the
/// source rectangle (cells, player and goal) then overwrites it at a
/// uniformly random aligned offset. Paths inside the source stay valid.
pub fn embed_map<R: Rng + ?Sized>(
    spec: &EmbedSpec,
    hole_prob: f64,
    rng: &mut R,
) -> Result<(Map, Embedding), GenError> {
    let t = spec.target_size;
    let src = &spec.source;
    if t < src.rows() || t < src.cols() || t > MAX_SIDE {
        return Err(GenError::EmbedTooSmall {
            rows: src.rows(),
            cols: src.cols(),
            target: t,
        });
    }
    let mut holes = sample_holes(t, hole_prob, rng);
    let row_offset = rng.gen_range(0..=t - src.rows());
    let col_offset = rng.gen_range(0..=t - src.cols());
    for r in 0..src.rows() {
        for c in 0..src.cols() {
            holes[(r + row_offset) * t + c + col_offset] = src.is_hole(Pos::new(r, c));
        }
    }
    let shift = |p: Pos| Pos::new(p.row + row_offset, p.col + col_offset);
    let hole_cells = (0..t * t)
        .filter(|i| holes[*i])
        .map(|i| Pos::new(i / t, i % t));
    let map = Map::new(t, t, hole_cells, shift(src.player()), shift(src.goal()))
        .expect("embedding keeps player and goal on free cells");
    Ok((
        map.with_id(src.id()).with_seed(src.seed()),
        Embedding {
            row_offset,
            col_offset,
        },
    ))
}

/// One block of a split: `count` maps drawn under `constraints`, optionally
/// embedded into a larger square afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub constraints: GenConstraints,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_into: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub seed: u64,
    pub entries: Vec<SplitEntry>,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("split {split:?} entry {entry}: {source}")]
pub struct SplitError {
    pub split: String,
    pub entry: usize,
    pub source: GenError,
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th map of a split seeded with `split_seed`.
pub fn map_seed(split_seed: u64, index: u64) -> u64 {
    mix64(mix64(split_seed) ^ index)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn map_id(split: &str, index: usize) -> String {
    format!("{split}-{index:05}")
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }

    /// Every violated field, for config validation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.name.is_empty() {
            out.push("name: must not be empty".into());
        }
        if self.name.contains(['/', '\\']) {
            out.push(format!(
                "name: {:?} must not contain path separators",
                self.name
            ));
        }
        if self.entries.is_empty() {
            out.push("entries: at least one entry required".into());
        }
        for (i, e) in self.entries.iter().enumerate() {
            out.extend(
                e.constraints
                    .violations(&format!("entries[{i}].constraints.")),
            );
            if e.count == 0 {
                out.push(format!("entries[{i}].count: must be at least 1"));
            }
            if let Some(t) = e.embed_into {
                if t < e.constraints.size || t > MAX_SIDE {
                    out.push(format!(
                        "entries[{i}].embed_into: {t} outside [{}, {MAX_SIDE}]",
                        e.constraints.size
                    ));
                }
            }
        }
        out
    }

    /// `(entry, index)` for every map of the split, in corpus order.
    pub fn plan(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(e, entry)| core::iter::repeat_n(e, entry.count))
            .enumerate()
            .map(|(i, e)| (e, i))
    }

    /// Generates the `index`-th map, which belongs to entry `entry`.
    pub fn generate_one(&self, entry: usize, index: usize) -> Result<Map, SplitError> {
        let spec = &self.entries[entry];
        let seed = map_seed(self.seed, index as u64);
        let mut rng = rng_for(seed);
        let wrap = |source| SplitError {
            split: self.name.clone(),
            entry,
            source,
        };
        let mut map = generate_map(&spec.constraints, &mut rng).map_err(wrap)?;
        if let Some(target) = spec.embed_into {
            let embed = EmbedSpec {
                target_size: target,
                source: map,
            };
            map = embed_map(&embed, spec.constraints.hole_prob, &mut rng)
                .map_err(wrap)?
                .0;
        }
        Ok(map.with_id(map_id(&self.name, index)).with_seed(Some(seed)))
    }
}

/// All maps of a split, in order. Equal specs give equal corpora.
pub fn build_split(spec: &SplitSpec) -> Result<Vec<Map>, SplitError> {
    let problems = spec.violations();
    if !problems.is_empty() {
        return Err(SplitError {
            split: spec.name.clone(),
            entry: 0,
            source: GenError::Invalid(problems),
        });
    }
    spec.plan().map(|(e, i)| spec.generate_one(e, i)).collect()
}

/// Splits matching the benchmark's suites.
pub mod presets {
    use super::*;

    fn split(name: &str, seed: u64, entries: Vec<SplitEntry>) -> SplitSpec {
        SplitSpec {
            name: name.into(),
            seed,
            entries,
        }
    }

    fn entry(constraints: GenConstraints, count: usize) -> SplitEntry {
        SplitEntry {
            constraints,
            count,
            embed_into: None,
        }
    }

    /// 100 3x3, 200 4x4, 300 5x5 and 400 6x6 maps.
    pub fn training_mix(seed: u64) -> SplitSpec {
        let sizes = [(3, 100), (4, 200), (5, 300), (6, 400)];
        split(
            "train",
            seed,
            sizes
                .iter()
                .map(|&(n, c)| entry(GenConstraints::new(n), c))
                .collect(),
        )
    }

    /// 200 maps for each size 7..=10, distance unconstrained.
    pub fn ood_random(seed: u64) -> SplitSpec {
        split(
            "ood_random",
            seed,
            (7..=10)
                .map(|n| entry(GenConstraints::new(n), 200))
                .collect(),
        )
    }

    /// 200 maps for each size 7..=10 with start-goal distance at least 6.
    pub fn ood_far(seed: u64) -> SplitSpec {
        split(
            "ood_d6",
            seed,
            (7..=10)
                .map(|n| entry(GenConstraints::new(n).d_inf_at_least(6), 200))
                .collect(),
        )
    }

    /// The training mix embedded into 10x10 backgrounds.
    pub fn embedded_training(seed: u64) -> SplitSpec {
        let mut spec = training_mix(seed);
        spec.name = "train_embedded10".into();
        for e in &mut spec.entries {
            e.embed_into = Some(10);
        }
        spec
    }

    /// 200 10x10 maps for each exact distance 2..=9.
    pub fn fixed10_by_distance(seed: u64) -> SplitSpec {
        split(
            "fixed10_dist",
            seed,
            (2..=9)
                .map(|d| {
                    entry(
                        GenConstraints::new(10).d_inf_at_least(d).d_inf_at_most(d),
                        200,
                    )
                })
                .collect(),
        )
    }

    pub fn all(seed: u64) -> Vec<SplitSpec> {
        vec![
            training_mix(seed),
            ood_random(seed),
            ood_far(seed),
            embedded_training(seed),
            fixed10_by_distance(seed),
        ]
    }
}
