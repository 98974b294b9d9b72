//! Frozen fixtures: sidecars match a fresh oracle run, and the two
//! interference reconstructions behave as documented in the simulator.

use std::path::Path;

use snowsat::fixtures::{
    load_fixture_dir, no_sequencing_medium_roll, no_sequencing_small_roll, oracle_meta, self_blocking_roll,
    NO_SEQUENCING, SELF_BLOCKING,
};
use snowsat::{achievable_lengths, parse_snowman, plan_with_object_actions, run_plan, GameState, Level, ObjectAction};

fn fixtures() -> Vec<snowsat::fixtures::Fixture> {
    load_fixture_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")).unwrap()
}

#[test]
fn sidecars_match_the_oracle() {
    let all = fixtures();
    assert!(all.len() >= 10);
    for fx in all {
        let fresh = oracle_meta(&fx.level, &fx.meta.name, fx.meta.oracle_cap).unwrap();
        assert_eq!(fresh, fx.meta, "{}", fx.meta.name);
        assert_eq!(fx.path.file_stem().unwrap().to_str(), Some(fx.meta.name.as_str()));
    }
}

#[test]
fn padded_fixture_has_no_near_optimal_plans() {
    let fx = fixtures().into_iter().find(|f| f.meta.name == "snow_padded").unwrap();
    let opt = fx.meta.object_actions_optimum;
    let lengths = achievable_lengths(&fx.level, opt + 3, 1_000_000).unwrap();
    assert!(lengths[opt] && !lengths[opt + 1] && !lengths[opt + 2] && lengths[opt + 3]);
    assert!((0..opt).all(|k| !lengths[k]));
    let plan = plan_with_object_actions(&fx.level, opt + 3, 1_000_000).unwrap();
    let replay = run_plan(&fx.level, &plan).unwrap();
    assert!(replay.state.is_goal(&fx.level));
    assert_eq!(replay.object_actions(), opt + 3);
}

/// Walks to the pushing cell and performs the action.
fn act(level: &Level, s: &GameState, a: &ObjectAction) -> Option<GameState> {
    let mut s = s.clone();
    for d in s.shortest_walk(level, a.pushing_cell(level)?)? {
        s = s.step(level, d)?.0;
    }
    let (next, kind) = s.step(level, a.dir)?;
    kind.is_object().then_some(next)
}

#[test]
fn no_sequencing_pair_has_no_serial_order() {
    let level = parse_snowman(NO_SEQUENCING).unwrap();
    let (a, b) = (no_sequencing_small_roll(&level), no_sequencing_medium_roll(&level));
    let init = GameState::initial(&level);
    let after_a = act(&level, &init, &a).expect("small roll alone");
    let after_b = act(&level, &init, &b).expect("medium roll alone");
    // each roll cuts off the other's pushing cell
    assert!(act(&level, &after_a, &b).is_none());
    assert!(act(&level, &after_b, &a).is_none());
    assert!(after_a.shortest_walk(&level, b.pushing_cell(&level).unwrap()).is_none());
    assert!(after_b.shortest_walk(&level, a.pushing_cell(&level).unwrap()).is_none());
}

#[test]
fn self_blocking_roll_is_possible_alone() {
    let level = parse_snowman(SELF_BLOCKING).unwrap();
    let roll = self_blocking_roll(&level);
    let init = GameState::initial(&level);
    let walk = init.shortest_walk(&level, roll.pushing_cell(&level).unwrap()).unwrap();
    // the only route runs through the roll's destination
    let mut s = init.clone();
    let mut visited = vec![s.agent()];
    for d in &walk {
        s = s.step(&level, *d).unwrap().0;
        visited.push(s.agent());
    }
    assert!(visited.contains(&roll.destination(&level).unwrap()));
    assert!(act(&level, &init, &roll).is_some());
}
