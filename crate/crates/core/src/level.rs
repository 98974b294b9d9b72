//! Puzzle levels for Snowman and Sokoban.
//!
//! Snowman text format, one character per cell:
//!
//! ```text
//! #  wall              -  floor              .  floor with snow
//! p  agent on floor    P  agent on snow      (space) outside the level
//! 1..7  ball stack on plain floor: bit 1 small, bit 2 medium, bit 4 large
//!       (3 = small on medium, 5 = small on large, 6 = medium on large,
//!        7 = finished snowman)
//! ```
//!
//! Sokoban uses the usual XSB characters (`#`, space/`-`/`_`, `@`, `+`, `$`,
//! `*`, `.`). Boxes are stored as large balls so both games share one state
//! layout. Lines starting with `;` are comments in both formats.

use std::fmt;

use thiserror::Error;

use crate::reach::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LevelError {
    #[error("level text is empty")]
    Empty,
    #[error("row {row} has length {got}, expected {want}")]
    NonRectangular { row: usize, got: usize, want: usize },
    #[error("unknown character {ch:?} at row {row}, column {col}")]
    UnknownChar { row: usize, col: usize, ch: char },
    #[error("no agent in level")]
    MissingAgent,
    #[error("more than one agent in level")]
    DuplicateAgent,
    #[error("{0} snowballs is not a multiple of three")]
    BallCount(usize),
    #[error("{boxes} boxes but {goals} goal cells")]
    BoxGoalMismatch { boxes: usize, goals: usize },
    #[error("floor cell at row {row}, column {col} lies on the level border")]
    NotEnclosed { row: usize, col: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Snowman,
    Sokoban,
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Game::Snowman => "snowman",
            Game::Sokoban => "sokoban",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::South, Direction::East, Direction::West];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    /// Lowercase LURD letter.
    pub fn letter(self) -> char {
        match self {
            Direction::North => 'u',
            Direction::South => 'd',
            Direction::East => 'r',
            Direction::West => 'l',
        }
    }

    pub fn from_letter(c: char) -> Option<Direction> {
        match c.to_ascii_lowercase() {
            'u' => Some(Direction::North),
            'd' => Some(Direction::South),
            'r' => Some(Direction::East),
            'l' => Some(Direction::West),
            _ => None,
        }
    }

    /// One-letter compass code used in variable names.
    pub fn code(self) -> char {
        match self {
            Direction::North => 'N',
            Direction::South => 'S',
            Direction::East => 'E',
            Direction::West => 'W',
        }
    }

    pub fn from_code(c: char) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.code() == c)
    }
}

/// Row-major cell index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BallSize {
    Small,
    Medium,
    Large,
}

impl BallSize {
    pub const ALL: [BallSize; 3] = [BallSize::Small, BallSize::Medium, BallSize::Large];

    pub fn bit(self) -> u8 {
        match self {
            BallSize::Small => 1,
            BallSize::Medium => 2,
            BallSize::Large => 4,
        }
    }

    /// Size after rolling over snow.
    pub fn grown(self) -> BallSize {
        match self {
            BallSize::Small => BallSize::Medium,
            _ => BallSize::Large,
        }
    }

    pub fn code(self) -> char {
        match self {
            BallSize::Small => 'S',
            BallSize::Medium => 'M',
            BallSize::Large => 'L',
        }
    }

    pub fn from_code(c: char) -> Option<BallSize> {
        BallSize::ALL.into_iter().find(|s| s.code() == c)
    }
}

/// The balls on one cell. Sizes strictly decrease bottom to top, so a stack
/// is fully described by the set of sizes it contains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Stack(u8);

impl Stack {
    pub const EMPTY: Stack = Stack(0);
    pub const SNOWMAN: Stack = Stack(7);

    pub fn from_bits(bits: u8) -> Stack {
        assert!(bits <= 7);
        Stack(bits)
    }

    pub fn single(size: BallSize) -> Stack {
        Stack(size.bit())
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, size: BallSize) -> bool {
        self.0 & size.bit() != 0
    }

    /// The smallest ball, which sits on top.
    pub fn top(self) -> Option<BallSize> {
        BallSize::ALL.into_iter().find(|&s| self.contains(s))
    }

    pub fn with(self, size: BallSize) -> Stack {
        Stack(self.0 | size.bit())
    }

    pub fn without(self, size: BallSize) -> Stack {
        Stack(self.0 & !size.bit())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Wall,
    Floor,
    Outside,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    game: Game,
    rows: usize,
    cols: usize,
    kinds: Vec<CellKind>,
    snow: Vec<bool>,
    stacks: Vec<Stack>,
    goals: Vec<bool>,
    agent: Cell,
}

impl Level {
    pub fn game(&self) -> Game {
        self.game
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell_at(&self, row: usize, col: usize) -> Cell {
        Cell(row * self.cols + col)
    }

    pub fn coords(&self, cell: Cell) -> (usize, usize) {
        (cell.0 / self.cols, cell.0 % self.cols)
    }

    pub fn kind(&self, cell: Cell) -> CellKind {
        self.kinds[cell.0]
    }

    pub fn is_floor(&self, cell: Cell) -> bool {
        self.kinds[cell.0] == CellKind::Floor
    }

    /// The floor cell next to `cell` in `dir`, if any.
    pub fn neighbor(&self, cell: Cell, dir: Direction) -> Option<Cell> {
        let (r, c) = self.coords(cell);
        let next = match dir {
            Direction::North if r > 0 => self.cell_at(r - 1, c),
            Direction::South if r + 1 < self.rows => self.cell_at(r + 1, c),
            Direction::West if c > 0 => self.cell_at(r, c - 1),
            Direction::East if c + 1 < self.cols => self.cell_at(r, c + 1),
            _ => return None,
        };
        self.is_floor(next).then_some(next)
    }

    pub fn initial_snow(&self, cell: Cell) -> bool {
        self.snow[cell.0]
    }

    pub fn initial_stack(&self, cell: Cell) -> Stack {
        self.stacks[cell.0]
    }

    pub fn is_goal(&self, cell: Cell) -> bool {
        self.goals[cell.0]
    }

    pub fn agent(&self) -> Cell {
        self.agent
    }

    pub fn floor_cells(&self) -> Vec<Cell> {
        (0..self.cell_count()).map(Cell).filter(|&c| self.is_floor(c)).collect()
    }

    /// Total number of balls (Snowman) or boxes (Sokoban).
    pub fn ball_count(&self) -> usize {
        self.stacks.iter().map(|s| s.len()).sum()
    }

    /// Snowmen to build; for Sokoban, the number of boxes.
    pub fn snowmen(&self) -> usize {
        match self.game {
            Game::Snowman => self.ball_count() / 3,
            Game::Sokoban => self.ball_count(),
        }
    }

    /// One vertex per floor cell, edges between orthogonal floor neighbours.
    pub fn grid_graph(&self) -> Graph {
        let open: Vec<bool> = self.kinds.iter().map(|&k| k == CellKind::Floor).collect();
        Graph::grid(self.rows, self.cols, &open)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let mut line = String::new();
            for c in 0..self.cols {
                line.push(self.render_cell(self.cell_at(r, c)));
            }
            if self.game == Game::Sokoban {
                line.truncate(line.trim_end().len());
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    fn render_cell(&self, cell: Cell) -> char {
        match self.kinds[cell.0] {
            CellKind::Wall => return '#',
            CellKind::Outside => return ' ',
            CellKind::Floor => {}
        }
        let agent = cell == self.agent;
        let stack = self.stacks[cell.0];
        match self.game {
            Game::Snowman => match (agent, self.snow[cell.0]) {
                (true, true) => 'P',
                (true, false) => 'p',
                _ if !stack.is_empty() => char::from(b'0' + stack.bits()),
                (_, true) => '.',
                _ => '-',
            },
            Game::Sokoban => match (agent, !stack.is_empty(), self.goals[cell.0]) {
                (true, _, true) => '+',
                (true, _, false) => '@',
                (_, true, true) => '*',
                (_, true, false) => '$',
                (_, _, true) => '.',
                _ => ' ',
            },
        }
    }
}

fn content_lines(text: &str) -> Vec<&str> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.starts_with(';'))
        .collect();
    let start = lines.iter().position(|l| !l.trim().is_empty());
    let end = lines.iter().rposition(|l| !l.trim().is_empty());
    match (start, end) {
        (Some(s), Some(e)) => lines[s..=e].to_vec(),
        _ => Vec::new(),
    }
}

struct Builder {
    game: Game,
    rows: usize,
    cols: usize,
    kinds: Vec<CellKind>,
    snow: Vec<bool>,
    stacks: Vec<Stack>,
    goals: Vec<bool>,
    agent: Option<Cell>,
}

impl Builder {
    fn new(game: Game, rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Builder {
            game,
            rows,
            cols,
            kinds: vec![CellKind::Outside; n],
            snow: vec![false; n],
            stacks: vec![Stack::EMPTY; n],
            goals: vec![false; n],
            agent: None,
        }
    }

    fn place_agent(&mut self, cell: usize) -> Result<(), LevelError> {
        if self.agent.replace(Cell(cell)).is_some() {
            return Err(LevelError::DuplicateAgent);
        }
        Ok(())
    }

    fn finish(self) -> Result<Level, LevelError> {
        let agent = self.agent.ok_or(LevelError::MissingAgent)?;
        for (i, &k) in self.kinds.iter().enumerate() {
            let (row, col) = (i / self.cols, i % self.cols);
            if k == CellKind::Floor && (row == 0 || col == 0 || row + 1 == self.rows || col + 1 == self.cols) {
                return Err(LevelError::NotEnclosed { row, col });
            }
        }
        let level = Level {
            game: self.game,
            rows: self.rows,
            cols: self.cols,
            kinds: self.kinds,
            snow: self.snow,
            stacks: self.stacks,
            goals: self.goals,
            agent,
        };
        match level.game {
            Game::Snowman if level.ball_count() % 3 != 0 => Err(LevelError::BallCount(level.ball_count())),
            Game::Sokoban => {
                let goals = level.goals.iter().filter(|&&g| g).count();
                if goals != level.ball_count() {
                    return Err(LevelError::BoxGoalMismatch { boxes: level.ball_count(), goals });
                }
                Ok(level)
            }
            _ => Ok(level),
        }
    }
}

pub fn parse_snowman(text: &str) -> Result<Level, LevelError> {
    let lines = content_lines(text);
    if lines.is_empty() {
        return Err(LevelError::Empty);
    }
    let cols = lines[0].chars().count();
    let mut b = Builder::new(Game::Snowman, lines.len(), cols);
    for (row, line) in lines.iter().enumerate() {
        let got = line.chars().count();
        if got != cols {
            return Err(LevelError::NonRectangular { row, got, want: cols });
        }
        for (col, ch) in line.chars().enumerate() {
            let i = row * cols + col;
            b.kinds[i] = match ch {
                '#' => CellKind::Wall,
                ' ' => CellKind::Outside,
                '-' | '.' | 'p' | 'P' | '1'..='7' => CellKind::Floor,
                _ => return Err(LevelError::UnknownChar { row, col, ch }),
            };
            match ch {
                '.' => b.snow[i] = true,
                'p' => b.place_agent(i)?,
                'P' => {
                    b.snow[i] = true;
                    b.place_agent(i)?
                }
                '1'..='7' => b.stacks[i] = Stack::from_bits(ch as u8 - b'0'),
                _ => {}
            }
        }
    }
    b.finish()
}

pub fn parse_sokoban_xsb(text: &str) -> Result<Level, LevelError> {
    let lines = content_lines(text);
    if lines.is_empty() {
        return Err(LevelError::Empty);
    }
    let cols = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let rows = lines.len();
    let mut b = Builder::new(Game::Sokoban, rows, cols);
    for (row, line) in lines.iter().enumerate() {
        for (col, ch) in line.chars().enumerate() {
            let i = row * cols + col;
            b.kinds[i] = match ch {
                '#' => CellKind::Wall,
                ' ' | '-' | '_' | '@' | '+' | '$' | '*' | '.' => CellKind::Floor,
                _ => return Err(LevelError::UnknownChar { row, col, ch }),
            };
            match ch {
                '@' => b.place_agent(i)?,
                '+' => {
                    b.goals[i] = true;
                    b.place_agent(i)?
                }
                '$' => b.stacks[i] = Stack::single(BallSize::Large),
                '*' => {
                    b.goals[i] = true;
                    b.stacks[i] = Stack::single(BallSize::Large)
                }
                '.' => b.goals[i] = true,
                _ => {}
            }
        }
        // padding beyond a short row stays Outside
    }
    let agent = b.agent.ok_or(LevelError::MissingAgent)?;
    // Plain floor the agent cannot reach even ignoring boxes is exterior.
    let mut inside = vec![false; rows * cols];
    let mut stack = vec![agent.0];
    inside[agent.0] = true;
    while let Some(i) = stack.pop() {
        let (r, c) = (i / cols, i % cols);
        let mut next = Vec::with_capacity(4);
        if r > 0 {
            next.push(i - cols);
        }
        if r + 1 < rows {
            next.push(i + cols);
        }
        if c > 0 {
            next.push(i - 1);
        }
        if c + 1 < cols {
            next.push(i + 1);
        }
        for j in next {
            if !inside[j] && b.kinds[j] == CellKind::Floor {
                inside[j] = true;
                stack.push(j);
            }
        }
    }
    for i in 0..rows * cols {
        if b.kinds[i] == CellKind::Floor && !inside[i] && !b.goals[i] && b.stacks[i].is_empty() {
            b.kinds[i] = CellKind::Outside;
        }
    }
    b.finish()
}

/// Parses by game tag.
pub fn parse_level(game: Game, text: &str) -> Result<Level, LevelError> {
    match game {
        Game::Snowman => parse_snowman(text),
        Game::Sokoban => parse_sokoban_xsb(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snowman_ball_count_must_divide() {
        assert_eq!(parse_snowman("####\n#p1#\n####"), Err(LevelError::BallCount(1)));
    }

    #[test]
    fn snowman_sizes() {
        let l = parse_snowman("######\n#p1..#\n#.24.#\n######").unwrap();
        assert_eq!(l.ball_count(), 3);
        assert_eq!(l.snowmen(), 1);
        assert_eq!(l.initial_stack(l.cell_at(1, 2)), Stack::single(BallSize::Small));
        assert_eq!(l.initial_stack(l.cell_at(2, 2)), Stack::single(BallSize::Medium));
        assert_eq!(l.initial_stack(l.cell_at(2, 3)), Stack::single(BallSize::Large));
        assert!(l.initial_snow(l.cell_at(1, 3)));
        assert_eq!(l.agent(), l.cell_at(1, 1));
    }

    #[test]
    fn snowman_errors() {
        assert!(matches!(parse_snowman("###\n#p#\n##"), Err(LevelError::NonRectangular { row: 2, .. })));
        assert!(matches!(parse_snowman("###\n#x#\n###"), Err(LevelError::UnknownChar { ch: 'x', .. })));
        assert_eq!(parse_snowman("###\n#-#\n###"), Err(LevelError::MissingAgent));
        assert_eq!(parse_snowman("####\n#pp#\n####"), Err(LevelError::DuplicateAgent));
        assert!(matches!(parse_snowman("#p#\n###"), Err(LevelError::NotEnclosed { .. })));
        assert_eq!(parse_snowman("\n\n"), Err(LevelError::Empty));
    }

    #[test]
    fn snowman_render_round_trip() {
        let text = "#######\n#p1.-7#\n#P?###\n";
        assert!(parse_snowman(text).is_err());
        let text = "#######\n#-1.-7#\n#P6###\n#######\n";
        assert!(parse_snowman(text).is_err(), "non-rectangular");
        let text = "#######\n#-1.-7#\n#P65-2#\n#######\n";
        let l = parse_snowman(text).unwrap();
        assert_eq!(l.render(), text);
        assert_eq!(parse_snowman(&text.replace('\n', "\r\n")).unwrap(), l);
    }

    #[test]
    fn sokoban_basics() {
        let l = parse_sokoban_xsb("#####\n#@$.#\n#####").unwrap();
        assert_eq!(l.ball_count(), 1);
        assert!(l.is_goal(l.cell_at(1, 3)));
        assert_eq!(l.agent(), l.cell_at(1, 1));

        let l = parse_sokoban_xsb("#####\n#@*.#\n#####").unwrap_err();
        assert_eq!(l, LevelError::BoxGoalMismatch { boxes: 1, goals: 2 });
        let l = parse_sokoban_xsb("######\n#@*.$#\n######").unwrap();
        assert!(l.is_goal(l.cell_at(1, 2)));
        assert!(!l.initial_stack(l.cell_at(1, 2)).is_empty());

        assert!(matches!(parse_sokoban_xsb("#####\n#@x.#\n#####"), Err(LevelError::UnknownChar { ch: 'x', .. })));
        assert_eq!(parse_sokoban_xsb("#####\n# $.#\n#####"), Err(LevelError::MissingAgent));
    }

    #[test]
    fn sokoban_exterior_and_padding() {
        let text = "  ####\n###  #\n#@$. #\n######\n";
        let l = parse_sokoban_xsb(text).unwrap();
        assert_eq!(l.kind(l.cell_at(0, 0)), CellKind::Outside);
        assert_eq!(l.kind(l.cell_at(1, 3)), CellKind::Floor);
        assert_eq!(l.render(), text);
        let ragged = "####\n#@$.\n####";
        let err = parse_sokoban_xsb(ragged).unwrap_err();
        assert!(matches!(err, LevelError::NotEnclosed { .. }), "{err}");
    }

    #[test]
    fn grid_graph_counts() {
        let l = parse_sokoban_xsb("#####\n#@$.#\n#####").unwrap();
        let g = l.grid_graph();
        assert_eq!((g.vertex_count(), g.edge_count()), (3, 2));
        let l = parse_snowman("###\n#p#\n###").unwrap();
        assert_eq!(l.grid_graph().vertex_count(), 1);
    }

    #[test]
    fn neighbors_skip_walls() {
        let l = parse_sokoban_xsb("#####\n#@$.#\n#####").unwrap();
        let a = l.agent();
        assert_eq!(l.neighbor(a, Direction::East), Some(l.cell_at(1, 2)));
        assert_eq!(l.neighbor(a, Direction::West), None);
        assert_eq!(l.neighbor(a, Direction::North), None);
    }

    #[test]
    fn direction_codes() {
        for d in Direction::ALL {
            assert_eq!(Direction::from_letter(d.letter()), Some(d));
            assert_eq!(Direction::from_letter(d.letter().to_ascii_uppercase()), Some(d));
            assert_eq!(Direction::from_code(d.code()), Some(d));
            assert_eq!(d.opposite().opposite(), d);
        }
    }
}
