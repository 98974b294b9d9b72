//! Executable rules for both games and a breadth-first optimal oracle.
//!
//! The oracle works on simulator states only and shares nothing with the
//! SAT encoders, so its optima can be used to check them.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::level::{BallSize, Cell, Direction, Game, Level, Stack};

const SNOW: u8 = 8;

/// Dynamic contents of a level: ball stacks, snow and the agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GameState {
    agent: Cell,
    // low three bits: stack mask, bit 3: snow
    cells: Vec<u8>,
}

/// What a single move did.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Walk,
    Roll,
    Push,
    Pop,
}

impl MoveKind {
    /// True for every move that displaces a ball or box.
    pub fn is_object(self) -> bool {
        self != MoveKind::Walk
    }
}

impl GameState {
    pub fn initial(level: &Level) -> GameState {
        let cells = (0..level.cell_count())
            .map(|i| {
                let c = Cell(i);
                level.initial_stack(c).bits() | if level.initial_snow(c) { SNOW } else { 0 }
            })
            .collect();
        GameState { agent: level.agent(), cells }
    }

    pub fn agent(&self) -> Cell {
        self.agent
    }

    pub fn stack(&self, cell: Cell) -> Stack {
        Stack::from_bits(self.cells[cell.0] & 7)
    }

    pub fn has_snow(&self, cell: Cell) -> bool {
        self.cells[cell.0] & SNOW != 0
    }

    pub fn ball_count(&self) -> usize {
        self.cells.iter().map(|&c| (c & 7).count_ones() as usize).sum()
    }

    fn set_stack(&mut self, cell: Cell, stack: Stack) {
        self.cells[cell.0] = (self.cells[cell.0] & SNOW) | stack.bits();
    }

    /// Moves `ball` onto the empty cell `to`, growing it on snow.
    fn roll_onto(&mut self, to: Cell, ball: BallSize) {
        let size = if self.has_snow(to) { ball.grown() } else { ball };
        self.cells[to.0] = size.bit();
    }

    /// One move of the agent, or `None` when the rules forbid it.
    pub fn step(&self, level: &Level, dir: Direction) -> Option<(GameState, MoveKind)> {
        let y = level.neighbor(self.agent, dir)?;
        let target = self.stack(y);
        let mut next = self.clone();
        if target.is_empty() {
            next.agent = y;
            return Some((next, MoveKind::Walk));
        }
        let z = level.neighbor(y, dir)?;
        let beyond = self.stack(z);
        let top = target.top().expect("non-empty stack");
        if level.game() == Game::Sokoban {
            if !beyond.is_empty() {
                return None;
            }
            next.set_stack(y, Stack::EMPTY);
            next.set_stack(z, target);
            next.agent = y;
            return Some((next, MoveKind::Roll));
        }
        if target.len() == 1 {
            if beyond.is_empty() {
                next.set_stack(y, Stack::EMPTY);
                next.roll_onto(z, top);
                next.agent = y;
                Some((next, MoveKind::Roll))
            } else if beyond.top().expect("non-empty") > top {
                next.set_stack(y, Stack::EMPTY);
                next.set_stack(z, beyond.with(top));
                next.agent = y;
                Some((next, MoveKind::Push))
            } else {
                None
            }
        } else if beyond.is_empty() {
            next.set_stack(y, target.without(top));
            next.roll_onto(z, top);
            Some((next, MoveKind::Pop))
        } else {
            None
        }
    }

    pub fn is_goal(&self, level: &Level) -> bool {
        (0..self.cells.len()).map(Cell).all(|c| {
            let s = self.stack(c);
            match level.game() {
                Game::Snowman => s.is_empty() || s == Stack::SNOWMAN,
                Game::Sokoban => s.is_empty() || level.is_goal(c),
            }
        })
    }

    /// Cells the agent can walk to without touching a ball.
    pub fn walkable_region(&self, level: &Level) -> Vec<bool> {
        let mut seen = vec![false; self.cells.len()];
        seen[self.agent.0] = true;
        let mut queue = VecDeque::from([self.agent]);
        while let Some(c) = queue.pop_front() {
            for d in Direction::ALL {
                if let Some(n) = level.neighbor(c, d) {
                    if !seen[n.0] && self.stack(n).is_empty() {
                        seen[n.0] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }

    /// A shortest ball-free walk from the agent to `to`.
    pub fn shortest_walk(&self, level: &Level, to: Cell) -> Option<Vec<Direction>> {
        let mut prev: Vec<Option<(Cell, Direction)>> = vec![None; self.cells.len()];
        let mut seen = vec![false; self.cells.len()];
        seen[self.agent.0] = true;
        let mut queue = VecDeque::from([self.agent]);
        while let Some(c) = queue.pop_front() {
            if c == to {
                let mut path = Vec::new();
                let mut at = c;
                while let Some((p, d)) = prev[at.0] {
                    path.push(d);
                    at = p;
                }
                path.reverse();
                return Some(path);
            }
            for d in Direction::ALL {
                if let Some(n) = level.neighbor(c, d) {
                    if !seen[n.0] && self.stack(n).is_empty() {
                        seen[n.0] = true;
                        prev[n.0] = Some((c, d));
                        queue.push_back(n);
                    }
                }
            }
        }
        None
    }

    /// Teleports the agent. Used when replaying collapsed plans.
    pub fn with_agent(&self, agent: Cell) -> GameState {
        GameState { agent, cells: self.cells.clone() }
    }

    /// Every object action available after free walking: the cell acted
    /// from, the direction and the resulting state.
    pub fn object_successors(&self, level: &Level) -> Vec<(Cell, Direction, GameState)> {
        let region = self.walkable_region(level);
        let mut out = Vec::new();
        for (i, &r) in region.iter().enumerate() {
            if !r {
                continue;
            }
            let from = self.with_agent(Cell(i));
            for d in Direction::ALL {
                if let Some((next, kind)) = from.step(level, d) {
                    if kind.is_object() {
                        out.push((Cell(i), d, next));
                    }
                }
            }
        }
        out
    }

    fn canonical(&self, level: &Level) -> GameState {
        let region = self.walkable_region(level);
        let min = region.iter().position(|&r| r).expect("agent cell is in its region");
        self.with_agent(Cell(min))
    }
}

/// A rejected move in a replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub index: usize,
    pub state: GameState,
}

/// A successful replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replay {
    pub state: GameState,
    pub kinds: Vec<MoveKind>,
}

impl Replay {
    pub fn object_actions(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_object()).count()
    }
}

pub fn run_plan(level: &Level, moves: &[Direction]) -> Result<Replay, Rejection> {
    let mut state = GameState::initial(level);
    let mut kinds = Vec::with_capacity(moves.len());
    for (index, &d) in moves.iter().enumerate() {
        match state.step(level, d) {
            Some((next, kind)) => {
                state = next;
                kinds.push(kind);
            }
            None => return Err(Rejection { index, state }),
        }
    }
    Ok(Replay { state, kinds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Every move counts.
    Moves,
    /// Only rolls, pushes and pops count; walking is free.
    ObjectActions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleResult {
    Optimal(usize),
    Unsolvable,
    /// More than the allowed number of distinct states were visited.
    CapExceeded,
}

impl OracleResult {
    pub fn optimum(self) -> Option<usize> {
        match self {
            OracleResult::Optimal(n) => Some(n),
            _ => None,
        }
    }
}

/// Exact optimum by breadth-first search over simulator states, visiting at
/// most `cap` distinct states.
pub fn oracle_optimal(level: &Level, metric: Metric, cap: usize) -> OracleResult {
    let start = GameState::initial(level);
    let start = match metric {
        Metric::Moves => start,
        Metric::ObjectActions => start.canonical(level),
    };
    let mut seen = HashSet::from([start.clone()]);
    let mut frontier = vec![start];
    let mut depth = 0;
    while !frontier.is_empty() {
        if frontier.iter().any(|s| s.is_goal(level)) {
            return OracleResult::Optimal(depth);
        }
        let mut next_frontier = Vec::new();
        for s in &frontier {
            let succ: Vec<GameState> = match metric {
                Metric::Moves => Direction::ALL.iter().filter_map(|&d| s.step(level, d)).map(|(n, _)| n).collect(),
                Metric::ObjectActions => s.object_successors(level).into_iter().map(|(_, _, n)| n.canonical(level)).collect(),
            };
            for n in succ {
                if seen.insert(n.clone()) {
                    if seen.len() > cap {
                        return OracleResult::CapExceeded;
                    }
                    next_frontier.push(n);
                }
            }
        }
        frontier = next_frontier;
        depth += 1;
    }
    OracleResult::Unsolvable
}

/// Object-action counts `0..=max` for which some plan reaches the goal with
/// exactly that many actions, by layered search without cross-layer
/// deduplication. `None` when a layer exceeds `cap` states.
pub fn achievable_lengths(level: &Level, max: usize, cap: usize) -> Option<Vec<bool>> {
    let layers = object_layers(level, max, cap)?;
    Some(layers.iter().map(|layer| layer.keys().any(|s| s.is_goal(level))).collect())
}

/// A move sequence reaching the goal with exactly `k` object actions.
pub fn plan_with_object_actions(level: &Level, k: usize, cap: usize) -> Option<Vec<Direction>> {
    let layers = object_layers(level, k, cap)?;
    let mut at = layers[k].keys().find(|s| s.is_goal(level))?.clone();
    let mut actions = Vec::with_capacity(k);
    for depth in (1..=k).rev() {
        let (prev, from, dir) = layers[depth][&at].clone().expect("non-root entries have parents");
        actions.push((from, dir));
        at = prev;
    }
    actions.reverse();
    let mut state = GameState::initial(level);
    let mut moves = Vec::new();
    for (from, dir) in actions {
        for d in state.shortest_walk(level, from).expect("acting cell is in the walkable region") {
            state = state.step(level, d).expect("walks are legal").0;
            moves.push(d);
        }
        state = state.step(level, dir).expect("recorded action is legal").0;
        moves.push(dir);
    }
    Some(moves)
}

type Layer = HashMap<GameState, Option<(GameState, Cell, Direction)>>;

fn object_layers(level: &Level, max: usize, cap: usize) -> Option<Vec<Layer>> {
    let start = GameState::initial(level).canonical(level);
    let mut layers: Vec<Layer> = vec![HashMap::from([(start, None)])];
    for _ in 0..max {
        let mut next: Layer = HashMap::new();
        for s in layers.last().expect("non-empty").keys() {
            for (from, dir, n) in s.object_successors(level) {
                next.entry(n.canonical(level)).or_insert_with(|| Some((s.clone(), from, dir)));
            }
        }
        if next.len() > cap {
            return None;
        }
        layers.push(next);
    }
    Some(layers)
}
