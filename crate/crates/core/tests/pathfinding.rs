mod common;

use common::{all_sequences, random_map, replay_by_hand};
use lakebench_core::model::{rollout, Map, Pos};
use lakebench_core::path::{
    astar_shortest, astar_shortest_with, bfs_shortest, Heuristic, Unsolvable,
};
use proptest::prelude::*;

#[test]
fn astar_matches_bfs_on_random_maps() {
    for n in 3..=10 {
        for seed in 0..300u64 {
            let m = random_map(n, seed * 31 + n as u64, false);
            let bfs = bfs_shortest(&m).map(|p| p.length);
            assert_eq!(
                astar_shortest(&m).map(|p| p.length),
                bfs,
                "n={n} seed={seed}"
            );
            assert_eq!(
                astar_shortest_with(&m, Heuristic::Chebyshev).map(|p| p.length),
                bfs,
                "n={n} seed={seed}"
            );
        }
    }
}

#[test]
fn no_shorter_sequence_succeeds() {
    let mut checked = 0;
    for seed in 0..400u64 {
        let m = random_map(3 + (seed % 4) as usize, seed, true);
        let l = astar_shortest(&m).unwrap().length;
        if l > 6 {
            continue;
        }
        checked += 1;
        for len in 0..l {
            for seq in all_sequences(len) {
                assert_ne!(
                    replay_by_hand(&m, &seq),
                    Some(m.goal()),
                    "map {seed} len {len}"
                );
            }
        }
        // and at least one sequence of the optimal length does
        assert!(all_sequences(l).any(|s| replay_by_hand(&m, &s) == Some(m.goal())));
    }
    assert!(checked > 300);
}

#[test]
fn wall_with_single_gap() {
    // P . . . .
    // X X X X .
    // G . . . .
    let holes = (0..4).map(|c| Pos::new(1, c));
    let m = Map::new(3, 5, holes, Pos::new(0, 0), Pos::new(2, 0)).unwrap();
    assert_eq!(bfs_shortest(&m).unwrap().length, 10);
    assert_eq!(astar_shortest(&m).unwrap().length, 10);
    let full = (0..5).map(|c| Pos::new(1, c));
    let blocked = Map::new(3, 5, full, Pos::new(0, 0), Pos::new(2, 0)).unwrap();
    assert_eq!(astar_shortest(&blocked), Err(Unsolvable));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn canonical_path_is_stable_and_valid(n in 2usize..=12, seed in any::<u64>()) {
        let m = random_map(n, seed, false);
        match astar_shortest(&m) {
            Ok(p) => {
                prop_assert_eq!(p.length, p.moves.len());
                prop_assert_eq!(astar_shortest(&m).unwrap(), p.clone());
                let r = rollout(&m, &p.moves, 4 * n * n);
                prop_assert!(r.success && !r.fell_in_hole);
                prop_assert_eq!(r.off_grid_moves, 0);
                prop_assert_eq!(replay_by_hand(&m, &p.moves), Some(m.goal()));
            }
            Err(Unsolvable) => prop_assert!(bfs_shortest(&m).is_err()),
        }
    }
}
