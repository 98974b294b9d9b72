//! Fixture levels with oracle optima, reconstructions of two parallel-plan
//! interference situations, and a random level generator for fuzzing.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{ActionKind, ObjectAction};
use crate::game::{oracle_optimal, Metric, OracleResult};
use crate::level::{parse_level, BallSize, Direction, Game, Level, LevelError};

/// Two rolls that are each possible, but never one after the other: each
/// one walls off the other's pushing cell.
///
/// ```text
///   col 01234567
///   r0  ########   outer wall
///   r1  #----###   c5-c6: wall pair at the top right
///   r2  #-#-1--#   c2: top of the tall pillar (c2, r2-r5); c4: small ball
///   r3  #-#-##-#   c4-c5: middle wall pair
///   r4  #-#--2-#   c5: medium ball
///   r5  #-###--#   c3-c4: lower wall pair
///   r6  #p----4#   c1: agent; c6: large ball
///   r7  ########
/// ```
///
/// The small ball is rolled west from r2c5, the medium ball east from r4c4.
pub const NO_SEQUENCING: &str = "\
########
#----###
#-#-1--#
#-#-##-#
#-#--2-#
#-###--#
#p----4#
########
";

/// The small-ball roll of [`NO_SEQUENCING`].
pub fn no_sequencing_small_roll(level: &Level) -> ObjectAction {
    ObjectAction { kind: ActionKind::Roll, cell: level.cell_at(2, 4), dir: Direction::West, size: BallSize::Small }
}

/// The medium-ball roll of [`NO_SEQUENCING`].
pub fn no_sequencing_medium_roll(level: &Level) -> ObjectAction {
    ObjectAction { kind: ActionKind::Roll, cell: level.cell_at(4, 5), dir: Direction::East, size: BallSize::Medium }
}

/// A roll whose own destination cuts the only route to its pushing cell.
///
/// ```text
///   col 01234567
///   r0  ########   added outer wall
///   r1  ######-#   figure top row: walls c1-c5, c6 open
///   r2  ##---#-#   c5: single wall block
///   r3  ##-2--p#   c2: pushing cell; c3: medium ball; c6: agent
///   r4  ######-#   figure bottom row
///   r5  #5######   added sealed pocket with a small and a large ball, so the
///                  level holds one ball of each size
///   r6  ########
/// ```
///
/// The figure has no wall right of the agent's column; the ring closes it.
pub const SELF_BLOCKING: &str = "\
########
######-#
##---#-#
##-2--p#
######-#
#5######
########
";

/// The medium-ball roll of [`SELF_BLOCKING`].
pub fn self_blocking_roll(level: &Level) -> ObjectAction {
    ObjectAction { kind: ActionKind::Roll, cell: level.cell_at(3, 3), dir: Direction::East, size: BallSize::Medium }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("metadata: {0}")]
    Toml(String),
    #[error("oracle gave up on {name} after {cap} states")]
    CapExceeded { name: String, cap: usize },
    #[error("{0} has no solution")]
    Unsolvable(String),
    #[error("no floor left at density {0}")]
    NoFloor(f64),
    #[error("fixture file name {0:?} has no known extension")]
    Extension(PathBuf),
}

/// Sidecar metadata of a frozen fixture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub name: String,
    pub game: Game,
    /// Fewest primitive moves.
    pub moves_optimum: usize,
    /// Fewest rolls, pushes and pops (box pushes for Sokoban).
    pub object_actions_optimum: usize,
    /// State budget the oracle ran under.
    pub oracle_cap: usize,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub meta: FixtureMeta,
    pub level: Level,
    pub path: PathBuf,
}

pub fn extension(game: Game) -> &'static str {
    match game {
        Game::Snowman => "snow",
        Game::Sokoban => "xsb",
    }
}

/// Game implied by a level file's extension.
pub fn game_for_path(path: &Path) -> Option<Game> {
    match path.extension()?.to_str()? {
        "snow" | "sm" => Some(Game::Snowman),
        "xsb" | "sok" => Some(Game::Sokoban),
        _ => None,
    }
}

/// Runs the oracle under both metrics.
pub fn oracle_meta(level: &Level, name: &str, cap: usize) -> Result<FixtureMeta, FixtureError> {
    let run = |metric| match oracle_optimal(level, metric, cap) {
        OracleResult::Optimal(n) => Ok(n),
        OracleResult::Unsolvable => Err(FixtureError::Unsolvable(name.to_owned())),
        OracleResult::CapExceeded => Err(FixtureError::CapExceeded { name: name.to_owned(), cap }),
    };
    Ok(FixtureMeta {
        name: name.to_owned(),
        game: level.game(),
        moves_optimum: run(Metric::Moves)?,
        object_actions_optimum: run(Metric::ObjectActions)?,
        oracle_cap: cap,
    })
}

/// Writes `<dir>/<name>.<ext>` and `<dir>/<name>.toml` with both optima.
pub fn freeze_fixture(level: &Level, name: &str, dir: &Path, cap: usize) -> Result<Fixture, FixtureError> {
    let meta = oracle_meta(level, name, cap)?;
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.{}", extension(level.game())));
    fs::write(&path, level.render())?;
    let toml = toml::to_string(&meta).map_err(|e| FixtureError::Toml(e.to_string()))?;
    fs::write(dir.join(format!("{name}.toml")), toml)?;
    Ok(Fixture { meta, level: level.clone(), path })
}

pub fn load_fixture(path: &Path) -> Result<Fixture, FixtureError> {
    let game = game_for_path(path).ok_or_else(|| FixtureError::Extension(path.to_owned()))?;
    let level = parse_level(game, &fs::read_to_string(path)?)?;
    let meta: FixtureMeta =
        toml::from_str(&fs::read_to_string(path.with_extension("toml"))?).map_err(|e| FixtureError::Toml(e.to_string()))?;
    Ok(Fixture { meta, level, path: path.to_owned() })
}

/// All fixtures in `dir`, sorted by name.
pub fn load_fixture_dir(dir: &Path) -> Result<Vec<Fixture>, FixtureError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| game_for_path(p).is_some() && p.with_extension("toml").exists())
        .collect();
    paths.sort();
    paths.iter().map(|p| load_fixture(p)).collect()
}

/// A random enclosed level of `rows x cols` cells (border included). Each
/// interior cell is a wall with probability `density`. Snowman levels get
/// three balls of random sizes and some snow; Sokoban levels one or two
/// boxes and as many goals. The result may be unsolvable.
pub fn gen_random_level(seed: u64, dims: (usize, usize), density: f64, game: Game) -> Result<Level, FixtureError> {
    let (rows, cols) = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = vec![vec!['#'; cols]; rows];
    let mut floor = Vec::new();
    for (r, row) in grid.iter_mut().enumerate().take(rows.saturating_sub(1)).skip(1) {
        for (c, ch) in row.iter_mut().enumerate().take(cols.saturating_sub(1)).skip(1) {
            if !rng.gen_bool(density.clamp(0.0, 1.0)) {
                *ch = '-';
                floor.push((r, c));
            }
        }
    }
    let items = match game {
        Game::Snowman => 4,
        Game::Sokoban => 1 + 2 * rng.gen_range(1..=2usize),
    };
    if floor.len() < items {
        return Err(FixtureError::NoFloor(density));
    }
    // partial Fisher-Yates: the first `items` cells are distinct picks
    for i in 0..items {
        let j = rng.gen_range(i..floor.len());
        floor.swap(i, j);
    }
    let (ar, ac) = floor[0];
    match game {
        Game::Snowman => {
            for &(r, c) in &floor[items..] {
                if rng.gen_bool(0.3) {
                    grid[r][c] = '.';
                }
            }
            grid[ar][ac] = if grid[ar][ac] == '.' { 'P' } else { 'p' };
            for &(r, c) in &floor[1..items] {
                grid[r][c] = ['1', '2', '4'][rng.gen_range(0..3)];
            }
        }
        Game::Sokoban => {
            grid[ar][ac] = '@';
            let boxes = (items - 1) / 2;
            for (k, &(r, c)) in floor[1..items].iter().enumerate() {
                grid[r][c] = if k < boxes { '$' } else { '.' };
            }
        }
    }
    let text: String = grid.iter().map(|row| row.iter().collect::<String>() + "\n").collect();
    Ok(parse_level(game, &text)?)
}
