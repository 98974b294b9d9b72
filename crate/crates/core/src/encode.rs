//! Compiles a level and a horizon into CNF.
//!
//! All modes share one state layout and one set of object-action variables.
//! State at `t = 0` is the initial level, folded in as constants.
//!
//! Registered names:
//!
//! ```text
//! ball[cell,S|M|L,t]  snow[cell,t]  agent[cell,t]  free[cell,t]  gate[cell,t]
//! dir[N|S|E|W,t]                          (full mode)
//! roll[cell,dir,size,t]  push[...]  pop[...]   cell = the ball's cell
//! jump[cell,t]                            (parallel mode)
//! noop[t]                                 (descend mode)
//! ```
//!
//! Cells are row-major level indices. Reachability fragments use graph
//! vertex ids and a `t=..` scope, e.g. `r[4,t=2]`.

use std::fmt;

use thiserror::Error;

use crate::cnf::{CnfError, Formula, Lit, Signal};
use crate::level::{BallSize, Cell, Direction, Game, Level, Stack};
use crate::reach::{self, Gate, Graph, ReachError, Source};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Reach(#[from] ReachError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One primitive move per step.
    Full,
    /// One object action per step, walking replaced by reachability.
    Collapsed,
    /// Sets of non-interfering object actions per step, or a jump.
    Parallel,
    /// Collapsed plus a noop action for probing below an upper bound.
    Descend,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReachKind {
    Path,
    Dag,
    Tree,
}

impl ReachKind {
    pub const ALL: [ReachKind; 3] = [ReachKind::Path, ReachKind::Dag, ReachKind::Tree];
}

impl fmt::Display for ReachKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReachKind::Path => "path",
            ReachKind::Dag => "dag",
            ReachKind::Tree => "tree",
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Collapsed => "collapsed",
            Mode::Parallel => "parallel",
            Mode::Descend => "descend",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodingConfig {
    pub mode: Mode,
    pub reach: ReachKind,
    pub horizon: usize,
    /// Snowball-count invariants (Snowman only).
    pub invariants: bool,
    /// Require the goal at the horizon. Off for feasibility probes.
    pub goal: bool,
}

impl EncodingConfig {
    pub fn new(mode: Mode, reach: ReachKind, horizon: usize) -> Self {
        EncodingConfig { mode, reach, horizon, invariants: true, goal: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Roll,
    Push,
    Pop,
}

impl ActionKind {
    fn word(self) -> &'static str {
        match self {
            ActionKind::Roll => "roll",
            ActionKind::Push => "push",
            ActionKind::Pop => "pop",
        }
    }
}

/// An object action: the agent, standing behind `cell`, moves the ball of
/// `size` found there one cell in `dir`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectAction {
    pub kind: ActionKind,
    pub cell: Cell,
    pub dir: Direction,
    pub size: BallSize,
}

impl ObjectAction {
    /// Where the agent stands to act.
    pub fn pushing_cell(&self, level: &Level) -> Option<Cell> {
        level.neighbor(self.cell, self.dir.opposite())
    }

    /// Where the ball ends up.
    pub fn destination(&self, level: &Level) -> Option<Cell> {
        level.neighbor(self.cell, self.dir)
    }

    /// Agent cell after the action.
    pub fn agent_after(&self, level: &Level) -> Option<Cell> {
        match self.kind {
            ActionKind::Pop => self.pushing_cell(level),
            _ => Some(self.cell),
        }
    }

    pub fn var_name(&self, t: usize) -> String {
        format!("{}[{},{},{},{t}]", self.kind.word(), self.cell.0, self.dir.code(), self.size.code())
    }

    /// Inverse of [`ObjectAction::var_name`].
    pub fn parse_var_name(name: &str) -> Option<(ObjectAction, usize)> {
        let (word, rest) = name.split_once('[')?;
        let kind = match word {
            "roll" => ActionKind::Roll,
            "push" => ActionKind::Push,
            "pop" => ActionKind::Pop,
            _ => return None,
        };
        let fields: Vec<&str> = rest.strip_suffix(']')?.split(',').collect();
        let [cell, dir, size, t] = fields.as_slice() else { return None };
        let one = |s: &str| -> Option<char> {
            let mut it = s.chars();
            let c = it.next()?;
            it.next().is_none().then_some(c)
        };
        Some((
            ObjectAction {
                kind,
                cell: Cell(cell.parse().ok()?),
                dir: Direction::from_code(one(dir)?)?,
                size: BallSize::from_code(one(size)?)?,
            },
            t.parse().ok()?,
        ))
    }
}

/// All syntactically possible object actions of a level: the pushing cell
/// and the destination are floor.
pub fn candidate_actions(level: &Level) -> Vec<ObjectAction> {
    let mut out = Vec::new();
    for x in level.floor_cells() {
        for dir in Direction::ALL {
            if level.neighbor(x, dir).is_none() || level.neighbor(x, dir.opposite()).is_none() {
                continue;
            }
            let mut add = |kind, size| out.push(ObjectAction { kind, cell: x, dir, size });
            match level.game() {
                Game::Sokoban => add(ActionKind::Roll, BallSize::Large),
                Game::Snowman => {
                    for size in BallSize::ALL {
                        add(ActionKind::Roll, size);
                    }
                    for size in [BallSize::Small, BallSize::Medium] {
                        add(ActionKind::Push, size);
                        add(ActionKind::Pop, size);
                    }
                }
            }
        }
    }
    out
}

fn size_index(s: BallSize) -> usize {
    match s {
        BallSize::Small => 0,
        BallSize::Medium => 1,
        BallSize::Large => 2,
    }
}

struct Encoder<'a> {
    level: &'a Level,
    cfg: EncodingConfig,
    f: Formula,
    graph: Graph,
    /// vertex -> cell
    cells: Vec<Cell>,
    /// cell -> vertex
    vertex: Vec<Option<usize>>,
    /// [t][vertex][size]
    balls: Vec<Vec<[Signal; 3]>>,
    snow: Vec<Vec<Signal>>,
    agent: Vec<Vec<Signal>>,
    free: Vec<Option<Vec<Signal>>>,
    actions: Vec<ObjectAction>,
    /// [t][action index]
    act: Vec<Vec<Lit>>,
}

/// Builds the formula for `level` under `cfg`.
pub fn encode(level: &Level, cfg: &EncodingConfig) -> Result<Formula, EncodeError> {
    let mut e = Encoder::new(level, *cfg)?;
    e.agent_constraints()?;
    e.action_semantics();
    e.frame_axioms();
    match cfg.mode {
        Mode::Full => e.full_mode()?,
        Mode::Collapsed | Mode::Descend => e.sequential_object_mode()?,
        Mode::Parallel => e.parallel_mode()?,
    }
    if cfg.invariants {
        e.ball_invariants()?;
    }
    if cfg.goal {
        e.goal();
    }
    Ok(e.f)
}

impl<'a> Encoder<'a> {
    fn new(level: &'a Level, cfg: EncodingConfig) -> Result<Self, EncodeError> {
        let graph = level.grid_graph();
        let cells: Vec<Cell> = level.floor_cells();
        let mut vertex = vec![None; level.cell_count()];
        for (v, c) in cells.iter().enumerate() {
            vertex[c.0] = Some(v);
        }
        let mut f = Formula::new();
        let horizon = cfg.horizon;
        let mut balls = Vec::with_capacity(horizon + 1);
        let mut snow = Vec::with_capacity(horizon + 1);
        let mut agent = Vec::with_capacity(horizon + 1);
        for t in 0..=horizon {
            let mut bt = Vec::with_capacity(cells.len());
            let mut st = Vec::with_capacity(cells.len());
            let mut at = Vec::with_capacity(cells.len());
            for &c in &cells {
                let mut b = [Signal::FALSE; 3];
                for size in BallSize::ALL {
                    let possible = level.game() == Game::Snowman || size == BallSize::Large;
                    b[size_index(size)] = if t == 0 {
                        Signal::Const(level.initial_stack(c).contains(size))
                    } else if possible {
                        f.fresh_var(format!("ball[{},{},{t}]", c.0, size.code()))?.pos().into()
                    } else {
                        Signal::FALSE
                    };
                }
                bt.push(b);
                st.push(if !level.initial_snow(c) {
                    Signal::FALSE
                } else if t == 0 {
                    Signal::TRUE
                } else {
                    f.fresh_var(format!("snow[{},{t}]", c.0))?.pos().into()
                });
                at.push(if t == 0 {
                    Signal::Const(c == level.agent())
                } else {
                    f.fresh_var(format!("agent[{},{t}]", c.0))?.pos().into()
                });
            }
            balls.push(bt);
            snow.push(st);
            agent.push(at);
        }
        let actions = candidate_actions(level);
        let mut act = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let lits = actions
                .iter()
                .map(|a| Ok(f.fresh_var(a.var_name(t))?.pos()))
                .collect::<Result<Vec<_>, CnfError>>()?;
            act.push(lits);
        }
        Ok(Encoder {
            level,
            cfg,
            f,
            graph,
            cells,
            vertex,
            balls,
            snow,
            agent,
            free: vec![None; horizon + 1],
            actions,
            act,
        })
    }

    fn v(&self, c: Cell) -> usize {
        self.vertex[c.0].expect("floor cell")
    }

    fn ball(&self, t: usize, c: Cell, s: BallSize) -> Signal {
        self.balls[t][self.v(c)][size_index(s)]
    }

    /// `free[v,t]`: no ball on the cell.
    fn free(&mut self, t: usize) -> Result<Vec<Signal>, CnfError> {
        if let Some(f) = &self.free[t] {
            return Ok(f.clone());
        }
        let mut out = Vec::with_capacity(self.cells.len());
        for v in 0..self.cells.len() {
            let neg: Vec<Signal> = self.balls[t][v].iter().map(|&b| !b).collect();
            out.push(self.f.and_gate(format!("free[{},{t}]", self.cells[v].0), &neg)?);
        }
        self.free[t] = Some(out.clone());
        Ok(out)
    }

    fn lits(signals: &[Signal]) -> Vec<Lit> {
        signals.iter().filter_map(|s| s.as_lit()).collect()
    }

    fn exactly_one_signals(&mut self, signals: &[Signal]) -> Result<(), CnfError> {
        let trues = signals.iter().filter(|&&s| s == Signal::TRUE).count();
        let lits = Self::lits(signals);
        if trues > 1 {
            self.f.add_clause([]);
        } else if trues == 1 {
            for l in lits {
                self.f.add_clause([!l]);
            }
        } else {
            self.f.add_clause(lits.clone());
            if lits.len() > 1 {
                self.f.at_most_k(&lits, 1)?;
            }
        }
        Ok(())
    }

    fn at_most_one(&mut self, lits: &[Lit]) -> Result<(), CnfError> {
        if lits.len() > 1 {
            self.f.at_most_k(lits, 1)?;
        }
        Ok(())
    }

    /// One agent cell per step, never on a ball.
    fn agent_constraints(&mut self) -> Result<(), CnfError> {
        for t in 1..=self.cfg.horizon {
            let a = self.agent[t].clone();
            self.exactly_one_signals(&a)?;
            for v in 0..self.cells.len() {
                for s in 0..3 {
                    let b = self.balls[t][v][s];
                    self.f.implies(&[a[v]], &[!b]);
                }
            }
        }
        Ok(())
    }

    /// Preconditions on balls and deterministic effects on the two cells an
    /// action touches.
    fn action_semantics(&mut self) {
        for t in 0..self.cfg.horizon {
            for (i, a) in self.actions.clone().into_iter().enumerate() {
                let lit: Signal = self.act[t][i].into();
                let x = a.cell;
                let y = a.destination(self.level).expect("candidate");
                let k = a.size;
                for s in BallSize::ALL {
                    let bx = self.ball(t, x, s);
                    let by = self.ball(t, y, s);
                    let bx1 = self.ball(t + 1, x, s);
                    let by1 = self.ball(t + 1, y, s);
                    match a.kind {
                        ActionKind::Roll => {
                            self.f.implies(&[lit], &[if s == k { bx } else { !bx }]);
                            self.f.implies(&[lit], &[!by]);
                        }
                        ActionKind::Push => {
                            self.f.implies(&[lit], &[if s == k { bx } else { !bx }]);
                            if s <= k {
                                self.f.implies(&[lit], &[!by]);
                            }
                        }
                        ActionKind::Pop => {
                            if s == k {
                                self.f.implies(&[lit], &[bx]);
                            } else if s < k {
                                self.f.implies(&[lit], &[!bx]);
                            }
                            self.f.implies(&[lit], &[!by]);
                        }
                    }
                    // effects on the source cell
                    match a.kind {
                        ActionKind::Roll | ActionKind::Push => self.f.implies(&[lit], &[!bx1]),
                        ActionKind::Pop if s == k => self.f.implies(&[lit], &[!bx1]),
                        ActionKind::Pop => {
                            self.f.implies(&[lit, bx], &[bx1]);
                            self.f.implies(&[lit, !bx], &[!bx1]);
                        }
                    }
                    // effects on the destination cell
                    match a.kind {
                        ActionKind::Push if s == k => self.f.implies(&[lit], &[by1]),
                        ActionKind::Push => {
                            self.f.implies(&[lit, by], &[by1]);
                            self.f.implies(&[lit, !by], &[!by1]);
                        }
                        ActionKind::Roll | ActionKind::Pop => {
                            let snow = self.snow[t][self.v(y)];
                            let on_snow = s == k.grown();
                            let on_plain = s == k;
                            self.f.implies(&[lit, snow], &[if on_snow { by1 } else { !by1 }]);
                            self.f.implies(&[lit, !snow], &[if on_plain { by1 } else { !by1 }]);
                        }
                    }
                }
                match a.kind {
                    ActionKind::Push => {
                        let bigger: Vec<Signal> =
                            BallSize::ALL.into_iter().filter(|&s| s > k).map(|s| self.ball(t, y, s)).collect();
                        self.f.implies(&[lit], &bigger);
                    }
                    ActionKind::Pop => {
                        let below: Vec<Signal> =
                            BallSize::ALL.into_iter().filter(|&s| s > k).map(|s| self.ball(t, x, s)).collect();
                        self.f.implies(&[lit], &below);
                    }
                    ActionKind::Roll => {}
                }
                if matches!(a.kind, ActionKind::Roll | ActionKind::Pop) {
                    let snow1 = self.snow[t + 1][self.v(y)];
                    self.f.implies(&[lit], &[!snow1]);
                }
            }
        }
    }

    /// A state bit changes only if an action touching its cell fires.
    fn frame_axioms(&mut self) {
        let n = self.cells.len();
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut arriving: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, a) in self.actions.iter().enumerate() {
            let y = self.v(a.destination(self.level).expect("candidate"));
            touching[self.v(a.cell)].push(i);
            touching[y].push(i);
            if a.kind != ActionKind::Push {
                arriving[y].push(i);
            }
        }
        for t in 0..self.cfg.horizon {
            for v in 0..n {
                let why: Vec<Signal> = touching[v].iter().map(|&i| self.act[t][i].into()).collect();
                for s in 0..3 {
                    let (b0, b1) = (self.balls[t][v][s], self.balls[t + 1][v][s]);
                    let mut up = vec![b0, !b1];
                    up.extend_from_slice(&why);
                    self.f.add_signals(&up);
                    let mut down = vec![!b0, b1];
                    down.extend_from_slice(&why);
                    self.f.add_signals(&down);
                }
                let (s0, s1) = (self.snow[t][v], self.snow[t + 1][v]);
                self.f.implies(&[!s0], &[!s1]);
                let mut melt: Vec<Signal> = vec![!s0, s1];
                melt.extend(arriving[v].iter().map(|&i| Signal::from(self.act[t][i])));
                self.f.add_signals(&melt);
            }
        }
    }

    fn full_mode(&mut self) -> Result<(), EncodeError> {
        for t in 0..self.cfg.horizon {
            let dirs: Vec<Lit> = Direction::ALL
                .iter()
                .map(|d| Ok(self.f.fresh_var(format!("dir[{},{t}]", d.code()))?.pos()))
                .collect::<Result<_, CnfError>>()?;
            self.f.exactly_one(&dirs)?;
            let free = self.free(t)?;
            let mut by_target: Vec<[Vec<Signal>; 4]> = vec![Default::default(); self.cells.len()];
            for (i, a) in self.actions.iter().enumerate() {
                by_target[self.v(a.cell)][a.dir as usize].push(self.act[t][i].into());
            }
            for (i, a) in self.actions.clone().iter().enumerate() {
                let p = self.v(a.pushing_cell(self.level).expect("candidate"));
                let lit: Signal = self.act[t][i].into();
                self.f.implies(&[lit], &[self.agent[t][p]]);
                self.f.implies(&[lit], &[dirs[a.dir as usize].into()]);
                let after = self.v(a.agent_after(self.level).expect("candidate"));
                self.f.implies(&[lit], &[self.agent[t + 1][after]]);
            }
            for p in 0..self.cells.len() {
                let here = self.agent[t][p];
                for (di, d) in Direction::ALL.into_iter().enumerate() {
                    let dl: Signal = dirs[di].into();
                    let Some(x) = self.level.neighbor(self.cells[p], d) else {
                        self.f.implies(&[here, dl], &[]);
                        continue;
                    };
                    let xv = self.v(x);
                    self.f.implies(&[here, dl, free[xv]], &[self.agent[t + 1][xv]]);
                    let mut acts = by_target[xv][di].clone();
                    acts.push(free[xv]);
                    self.f.implies(&[here, dl], &acts);
                }
            }
        }
        Ok(())
    }

    fn sequential_object_mode(&mut self) -> Result<(), EncodeError> {
        let descend = self.cfg.mode == Mode::Descend;
        let mut prev_noop: Option<Lit> = None;
        for t in 0..self.cfg.horizon {
            let mut choice: Vec<Signal> = self.act[t].iter().map(|&l| l.into()).collect();
            let noop = if descend {
                let l = self.f.fresh_var(format!("noop[{t}]"))?.pos();
                choice.push(l.into());
                if let Some(p) = prev_noop {
                    self.f.add_clause([!p, l]);
                }
                prev_noop = Some(l);
                Some(l)
            } else {
                None
            };
            self.exactly_one_signals(&choice)?;
            for (i, a) in self.actions.clone().iter().enumerate() {
                let after = self.v(a.agent_after(self.level).expect("candidate"));
                self.f.implies(&[self.act[t][i].into()], &[self.agent[t + 1][after]]);
            }
            if let Some(l) = noop {
                for v in 0..self.cells.len() {
                    self.f.implies(&[l.into(), self.agent[t][v]], &[self.agent[t + 1][v]]);
                }
            }
            let gate = self.free(t)?;
            let enable = noop.map_or(Signal::TRUE, |l| Signal::from(!l));
            self.object_reachability(t, &gate, &[], enable)?;
        }
        Ok(())
    }

    /// Requires the pushing cell of every firing action (and the destination
    /// of every firing jump) to be reachable from the agent under `gate`.
    fn object_reachability(
        &mut self,
        t: usize,
        gate: &[Signal],
        jumps: &[Lit],
        enable: Signal,
    ) -> Result<(), EncodeError> {
        let n = self.cells.len();
        let mut need: Vec<Vec<Signal>> = vec![Vec::new(); n];
        for (i, a) in self.actions.iter().enumerate() {
            need[self.v(a.pushing_cell(self.level).expect("candidate"))].push(self.act[t][i].into());
        }
        for (v, &j) in jumps.iter().enumerate() {
            need[v].push(j.into());
        }
        let source = self.agent[t].clone();
        let scope = format!("t={t}");
        match self.cfg.reach {
            ReachKind::Tree | ReachKind::Dag => {
                let frag = if self.cfg.reach == ReachKind::Tree {
                    reach::encode_spanning_tree(&mut self.f, &self.graph, Source::Select(&source), Gate::Free(gate), &scope)?
                } else {
                    reach::encode_dag(&mut self.f, &self.graph, Source::Select(&source), Gate::Free(gate), &scope)?
                };
                for v in 0..n {
                    for &a in &need[v] {
                        self.f.implies(&[a], &[frag.reach[v].into()]);
                    }
                }
            }
            ReachKind::Path if self.cfg.mode != Mode::Parallel => {
                let mut target = Vec::with_capacity(n);
                for (v, acts) in need.iter().enumerate() {
                    target.push(self.f.or_gate(format!("need[{},{t}]", self.cells[v].0), acts)?);
                }
                reach::encode_path_enabled(
                    &mut self.f,
                    &self.graph,
                    Source::Select(&source),
                    Source::Select(&target),
                    Gate::Free(gate),
                    enable,
                    &scope,
                )?;
            }
            ReachKind::Path => {
                // one path per simultaneously acting ball
                let copies = self.level.ball_count().max(1);
                let mut tgt: Vec<Vec<Lit>> = Vec::with_capacity(copies);
                let mut prev_active: Option<Lit> = None;
                for i in 0..copies {
                    let active = self.f.fresh_var(format!("active[{t},{i}]"))?.pos();
                    if let Some(p) = prev_active {
                        self.f.add_clause([!active, p]);
                    }
                    prev_active = Some(active);
                    let row: Vec<Lit> = (0..n)
                        .map(|v| Ok(self.f.fresh_var(format!("tgt[{},{t},{i}]", self.cells[v].0))?.pos()))
                        .collect::<Result<_, CnfError>>()?;
                    for &l in &row {
                        self.f.add_clause([!l, active]);
                    }
                    let mut alo = row.clone();
                    alo.push(!active);
                    self.f.add_clause(alo);
                    self.at_most_one(&row)?;
                    let target: Vec<Signal> = row.iter().map(|&l| l.into()).collect();
                    reach::encode_path_enabled(
                        &mut self.f,
                        &self.graph,
                        Source::Select(&source),
                        Source::Select(&target),
                        Gate::Free(gate),
                        active.into(),
                        &format!("t={t},i={i}"),
                    )?;
                    tgt.push(row);
                }
                for v in 0..n {
                    let covers: Vec<Signal> = tgt.iter().map(|row| row[v].into()).collect();
                    for &a in &need[v] {
                        self.f.implies(&[a], &covers);
                    }
                }
            }
        }
        Ok(())
    }

    fn parallel_mode(&mut self) -> Result<(), EncodeError> {
        let n = self.cells.len();
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, a) in self.actions.iter().enumerate() {
            touching[self.v(a.cell)].push(i);
            touching[self.v(a.destination(self.level).expect("candidate"))].push(i);
        }
        let mut prev_any_jump: Option<Signal> = None;
        for t in 0..self.cfg.horizon {
            let jumps: Vec<Lit> = (0..n)
                .map(|v| Ok(self.f.fresh_var(format!("jump[{},{t}]", self.cells[v].0))?.pos()))
                .collect::<Result<_, CnfError>>()?;
            self.at_most_one(&jumps)?;
            let jump_signals: Vec<Signal> = jumps.iter().map(|&l| l.into()).collect();
            let any_jump = self.f.or_gate(format!("jumped[{t}]"), &jump_signals)?;
            let acts = self.act[t].clone();
            for &a in &acts {
                self.f.implies(&[any_jump], &[(!a).into()]);
            }
            let mut alo: Vec<Lit> = acts.clone();
            alo.extend_from_slice(&jumps);
            self.f.add_clause(alo);
            if let Some(p) = prev_any_jump {
                // two jumps in a row are one jump
                self.f.implies(&[p], &[!any_jump]);
            }
            prev_any_jump = Some(any_jump);
            for cell_acts in &touching {
                let lits: Vec<Lit> = cell_acts.iter().map(|&i| acts[i]).collect();
                self.at_most_one(&lits)?;
            }
            for v in 0..n {
                let here = self.agent[t][v];
                self.f.implies(&[jumps[v].into()], &[self.agent[t + 1][v]]);
                self.f.implies(&[jumps[v].into()], &[!here]);
                self.f.implies(&[!any_jump, here], &[self.agent[t + 1][v]]);
            }
            // Balls do not move during a jump step, so this gate equals the
            // time-t gate there.
            let now = self.free(t)?;
            let next = self.free(t + 1)?;
            let mut gate = Vec::with_capacity(n);
            for v in 0..n {
                gate.push(self.f.and_gate(format!("gate[{},{t}]", self.cells[v].0), &[now[v], next[v]])?);
            }
            self.object_reachability(t, &gate, &jumps, Signal::TRUE)?;
        }
        Ok(())
    }

    fn ball_invariants(&mut self) -> Result<(), CnfError> {
        if self.level.game() != Game::Snowman {
            return Ok(());
        }
        let men = self.level.snowmen();
        for t in 1..=self.cfg.horizon {
            let large: Vec<Signal> = self.balls[t].iter().map(|b| b[2]).collect();
            let small: Vec<Signal> = self.balls[t].iter().map(|b| b[0]).collect();
            self.cardinality(&large, men, true)?;
            self.cardinality(&small, men, false)?;
        }
        Ok(())
    }

    fn cardinality(&mut self, signals: &[Signal], k: usize, at_most: bool) -> Result<(), CnfError> {
        let fixed = signals.iter().filter(|&&s| s == Signal::TRUE).count();
        let lits = Self::lits(signals);
        if at_most {
            if fixed > k {
                self.f.add_clause([]);
            } else if k - fixed < lits.len() {
                self.f.at_most_k(&lits, k - fixed)?;
            }
        } else if fixed < k {
            if k - fixed > lits.len() {
                self.f.add_clause([]);
            } else {
                self.f.at_least_k(&lits, k - fixed)?;
            }
        }
        Ok(())
    }

    fn goal(&mut self) {
        let t = self.cfg.horizon;
        for v in 0..self.cells.len() {
            let [s, m, l] = self.balls[t][v];
            match self.level.game() {
                Game::Snowman => {
                    for (a, b) in [(s, m), (m, l)] {
                        self.f.implies(&[a], &[b]);
                        self.f.implies(&[b], &[a]);
                    }
                }
                Game::Sokoban => {
                    if !self.level.is_goal(self.cells[v]) {
                        self.f.add_signals(&[!l]);
                    }
                }
            }
        }
    }
}

/// Stack mask of a cell read back from ball variables.
pub fn decoded_stack(formula: &Formula, model: &crate::cnf::Model, cell: Cell, t: usize) -> Stack {
    let mut s = Stack::EMPTY;
    for size in BallSize::ALL {
        if let Some(v) = formula.lookup(&format!("ball[{},{},{t}]", cell.0, size.code())) {
            if model.var(v) {
                s = s.with(size);
            }
        }
    }
    s
}
