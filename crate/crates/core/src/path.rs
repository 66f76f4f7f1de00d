//! Shortest paths over the hole-free cells of a map.
//!
//! [`astar_shortest`] is the canonical planner: its move list is what every
//! trace and dataset uses as ground truth. [`bfs_shortest`] is an
//! independent breadth-first oracle for lengths and solvability.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{d_inf, direction_preference, manhattan, Map, Move, Pos};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathResult {
    pub moves: Vec<Move>,
    pub length: usize,
}

impl PathResult {
    fn from_moves(moves: Vec<Move>) -> Self {
        PathResult {
            length: moves.len(),
            moves,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("no hole-free path from player to goal")]
pub struct Unsolvable;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    #[default]
    Manhattan,
    Chebyshev,
}

impl Heuristic {
    fn estimate(self, a: Pos, b: Pos) -> usize {
        match self {
            Heuristic::Manhattan => manhattan(a, b),
            Heuristic::Chebyshev => d_inf(a, b),
        }
    }
}

fn index(map: &Map, p: Pos) -> usize {
    p.row * map.cols() + p.col
}

fn neighbours(map: &Map, p: Pos) -> impl Iterator<Item = (Move, Pos)> + '_ {
    Move::ALL.into_iter().filter_map(move |m| {
        m.apply(p, map.rows(), map.cols())
            .filter(|q| !map.is_hole(*q))
            .map(|q| (m, q))
    })
}

/// Breadth-first search from the player. Returns some shortest path; which
/// one is unspecified.
pub fn bfs_shortest(map: &Map) -> Result<PathResult, Unsolvable> {
    let n = map.rows() * map.cols();
    let mut came_from: Vec<Option<(Move, Pos)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[index(map, map.player())] = true;
    queue.push_back(map.player());
    while let Some(p) = queue.pop_front() {
        if p == map.goal() {
            let mut moves = Vec::new();
            let mut cur = p;
            while let Some((m, prev)) = came_from[index(map, cur)] {
                moves.push(m);
                cur = prev;
            }
            moves.reverse();
            return Ok(PathResult::from_moves(moves));
        }
        for (m, q) in neighbours(map, p) {
            let i = index(map, q);
            if !seen[i] {
                seen[i] = true;
                came_from[i] = Some((m, p));
                queue.push_back(q);
            }
        }
    }
    Err(Unsolvable)
}

pub fn is_solvable(map: &Map) -> bool {
    bfs_shortest(map).is_ok()
}

/// Canonical shortest path using the Manhattan heuristic.
pub fn astar_shortest(map: &Map) -> Result<PathResult, Unsolvable> {
    astar_shortest_with(map, Heuristic::Manhattan)
}

/// A* search returning the canonical shortest path.
///
/// The search runs from the goal towards the player with open-list ties on
/// `f` broken by smaller `g`. With a consistent heuristic this closes every
/// cell on every optimal path before the player is popped, so each of them
/// carries its exact distance to the goal. The path is then read off from
/// the player: at each cell take the neighbour one step closer to the goal,
/// preferring the move that closes row distance, then column distance, then
/// `UP, DOWN, LEFT, RIGHT`.
pub fn astar_shortest_with(map: &Map, heuristic: Heuristic) -> Result<PathResult, Unsolvable> {
    let n = map.rows() * map.cols();
    let start = map.goal();
    let target = map.player();
    let mut g = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    g[index(map, start)] = 0;
    open.push(Reverse((
        heuristic.estimate(start, target),
        0usize,
        index(map, start),
    )));
    let mut found = false;
    while let Some(Reverse((_, cost, i))) = open.pop() {
        if closed[i] || cost > g[i] {
            continue;
        }
        closed[i] = true;
        let p = Pos::new(i / map.cols(), i % map.cols());
        if p == target {
            found = true;
            break;
        }
        for (_, q) in neighbours(map, p) {
            let j = index(map, q);
            let next = cost + 1;
            if !closed[j] && next < g[j] {
                g[j] = next;
                open.push(Reverse((next + heuristic.estimate(q, target), next, j)));
            }
        }
    }
    if !found {
        return Err(Unsolvable);
    }

    let goal = map.goal();
    let mut cur = target;
    let mut moves = Vec::with_capacity(g[index(map, target)]);
    while cur != goal {
        let here = g[index(map, cur)];
        let (m, next) = direction_preference(cur, goal)
            .into_iter()
            .filter_map(|m| {
                m.apply(cur, map.rows(), map.cols())
                    .filter(|q| !map.is_hole(*q))
                    .map(|q| (m, q))
            })
            .find(|(_, q)| {
                let j = index(map, *q);
                closed[j] && g[j] + 1 == here
            })
            .expect("closed cell on an optimal path has a closed successor");
        moves.push(m);
        cur = next;
    }
    Ok(PathResult::from_moves(moves))
}
