#![allow(dead_code)]

use lakebench_core::gen::{generate_map, rng_for, GenConstraints};
use lakebench_core::model::{Map, Move, Pos};

/// A random map of side `n`; unsolvable ones allowed when `solvable` is false.
pub fn random_map(n: usize, seed: u64, solvable: bool) -> Map {
    let c = GenConstraints {
        require_solvable: solvable,
        ..GenConstraints::new(n)
    };
    generate_map(&c, &mut rng_for(seed)).unwrap()
}

/// Every move sequence of exactly `len` moves, in lexicographic order.
pub fn all_sequences(len: usize) -> impl Iterator<Item = Vec<Move>> {
    (0..4usize.pow(len as u32)).map(move |mut code| {
        (0..len)
            .map(|_| {
                let m = Move::ALL[code % 4];
                code /= 4;
                m
            })
            .collect()
    })
}

/// Independent replay: walks the sequence cell by cell against the raw
/// hole list, without the simulator.
pub fn replay_by_hand(map: &Map, moves: &[Move]) -> Option<Pos> {
    let holes: Vec<Pos> = map.holes().collect();
    let (mut r, mut c) = (map.player().row as i64, map.player().col as i64);
    for m in moves {
        let (dr, dc) = match m {
            Move::Up => (-1, 0),
            Move::Down => (1, 0),
            Move::Left => (0, -1),
            Move::Right => (0, 1),
        };
        let (nr, nc) = (r + dr, c + dc);
        if nr < 0 || nc < 0 || nr >= map.rows() as i64 || nc >= map.cols() as i64 {
            continue;
        }
        r = nr;
        c = nc;
        if holes.contains(&Pos::new(r as usize, c as usize)) {
            return None;
        }
    }
    Some(Pos::new(r as usize, c as usize))
}
