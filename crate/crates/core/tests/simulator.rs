//! Simulator properties under random play.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snowsat::fixtures::gen_random_level;
use snowsat::{parse_snowman, Cell, Direction, Game, GameState, Level, MoveKind};

fn random_play(level: &Level, seed: u64, steps: usize) -> Vec<(GameState, Direction, Option<(GameState, MoveKind)>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = GameState::initial(level);
    let mut out = Vec::new();
    for _ in 0..steps {
        let d = Direction::ALL[rng.gen_range(0..4)];
        let next = s.step(level, d);
        out.push((s.clone(), d, next.clone()));
        if let Some((n, _)) = next {
            s = n;
        }
    }
    out
}

#[test]
fn invariants_hold_under_random_play() {
    for seed in 0..300 {
        let game = if seed % 2 == 0 { Game::Snowman } else { Game::Sokoban };
        let level = gen_random_level(seed, (6, 6), 0.2, game).unwrap();
        for (before, d, after) in random_play(&level, seed, 200) {
            let Some((after, kind)) = after else { continue };
            assert_eq!(after.ball_count(), before.ball_count(), "seed {seed}");
            assert!(after.stack(after.agent()).is_empty(), "agent on a ball, seed {seed}");
            assert!(level.is_floor(after.agent()));
            for c in level.floor_cells() {
                assert!(!after.has_snow(c) || before.has_snow(c), "snow appeared, seed {seed}");
            }
            match kind {
                MoveKind::Walk => assert_eq!(after.with_agent(before.agent()), before),
                MoveKind::Pop => assert_eq!(after.agent(), before.agent()),
                MoveKind::Roll | MoveKind::Push => {
                    assert_eq!(Some(after.agent()), level.neighbor(before.agent(), d));
                }
            }
        }
    }
}

/// Sokoban levels replayed as Snowman levels with only large balls: every
/// move has the same effect on the agent and on ball positions.
#[test]
fn large_balls_move_like_boxes() {
    let mut checked = 0;
    for seed in 0..200 {
        let sok = gen_random_level(2 * seed + 1, (6, 6), 0.2, Game::Sokoban).unwrap();
        let text: String = sok
            .render()
            .chars()
            .map(|c| match c {
                '$' | '*' => '4',
                '@' | '+' => 'p',
                '.' | ' ' => '-',
                other => other,
            })
            .collect();
        // pad with small and medium balls in a sealed row so the count is valid
        let boxes = sok.ball_count();
        let extra: String = "#".to_string() + &"3".repeat(boxes) + &"#".repeat(sok.cols().saturating_sub(boxes + 1));
        let snow = parse_snowman(&format!("{text}{extra}\n{}\n", "#".repeat(sok.cols().max(boxes + 2))));
        let Ok(snow) = snow else { continue };
        checked += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut a, mut b) = (GameState::initial(&sok), GameState::initial(&snow));
        let same = |a: &GameState, b: &GameState| {
            (0..sok.cell_count()).all(|i| a.stack(Cell(i)).is_empty() == b.stack(Cell(i)).is_empty())
                && a.agent() == b.agent()
        };
        for _ in 0..150 {
            let d = Direction::ALL[rng.gen_range(0..4)];
            match (a.step(&sok, d), b.step(&snow, d)) {
                (None, None) => {}
                (Some((na, ka)), Some((nb, kb))) => {
                    assert_eq!(ka, kb, "seed {seed}");
                    a = na;
                    b = nb;
                }
                other => panic!("seed {seed}: {d:?} diverges: {:?}", other.0.is_some()),
            }
            assert!(same(&a, &b), "seed {seed}");
        }
    }
    assert!(checked >= 150, "only {checked} levels converted");
}
