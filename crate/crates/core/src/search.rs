//! Solving strategies: sequential iterative deepening, parallel ascend,
//! serialization and the descend phase that closes the gap to optimal.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::Formula;
use crate::encode::{encode, EncodeError, EncodingConfig, Mode, ObjectAction, ReachKind};
use crate::game::{run_plan, GameState};
use crate::level::{Direction, Level};
use crate::plan::{decode, BoundStatus, DecodeError, Plan, Probe, Step};
use crate::solver::{Backend, BackendError, SolveOutcome, SolveStatus};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Serialize(#[from] SerializeError),
    #[error("decoded plan fails in the simulator: {0}")]
    InvalidPlan(String),
    #[error("mode {0} is not a sequential search mode")]
    Mode(Mode),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SerializeError {
    #[error("step {step}: no walk to cell {cell}")]
    NoWalk { step: usize, cell: usize },
    #[error("step {step}: action {action:?} rejected")]
    Rejected { step: usize, action: ObjectAction },
}

#[derive(Clone, Copy, Debug)]
pub struct BudgetPolicy {
    /// Wall clock for one solver call.
    pub per_call: Duration,
    /// Wall clock for the whole run.
    pub overall: Duration,
    /// Largest horizon probed.
    pub horizon_cap: usize,
}

impl Default for BudgetPolicy {
    fn default() -> Self {
        BudgetPolicy { per_call: Duration::from_secs(600), overall: Duration::from_secs(3600), horizon_cap: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub status: BoundStatus,
    /// (phase, seconds)
    pub timings: Vec<(String, f64)>,
}

impl Bounds {
    fn new(lower: Option<usize>, upper: Option<usize>) -> Self {
        let status = match (lower, upper) {
            (Some(l), Some(u)) if l == u => BoundStatus::Optimal,
            (None, None) => BoundStatus::Unknown,
            _ => BoundStatus::Bounded,
        };
        Bounds { lower, upper, status, timings: Vec::new() }
    }
}

/// Result of a strategy run.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub bounds: Bounds,
    /// Best plan found, as primitive moves that replay to the goal.
    pub moves: Option<Vec<Direction>>,
    /// Parallel plan from the ascend phase, when one ran.
    pub parallel: Option<Vec<Step>>,
    pub probes: Vec<Probe>,
    /// Upper bounds in the order they were established.
    pub ub_trace: Vec<usize>,
}

impl SearchResult {
    pub fn last_horizon(&self) -> Option<usize> {
        self.probes.last().map(|p| p.horizon)
    }
}

/// Solver calls with a shared deadline.
pub struct Session<'a> {
    backend: &'a dyn Backend,
    policy: BudgetPolicy,
    deadline: Instant,
    probes: Vec<Probe>,
}

impl<'a> Session<'a> {
    pub fn new(backend: &'a dyn Backend, policy: BudgetPolicy) -> Self {
        Session { backend, policy, deadline: Instant::now() + policy.overall, probes: Vec::new() }
    }

    fn probe(&mut self, phase: &str, horizon: usize, formula: &Formula) -> Result<SolveOutcome, BackendError> {
        let left = self.deadline.saturating_duration_since(Instant::now());
        let budget = left.min(self.policy.per_call);
        let out = if budget.is_zero() {
            SolveOutcome { status: SolveStatus::Unknown, model: None, elapsed: Duration::ZERO }
        } else {
            self.backend.solve(formula, budget)?
        };
        self.probes.push(Probe {
            phase: phase.to_owned(),
            horizon,
            result: out.status,
            seconds: out.elapsed.as_secs_f64(),
        });
        Ok(out)
    }
}

fn check_goal(level: &Level, moves: &[Direction]) -> Result<(), SearchError> {
    match run_plan(level, moves) {
        Ok(r) if r.state.is_goal(level) => Ok(()),
        Ok(_) => Err(SearchError::InvalidPlan("replay ends off the goal".into())),
        Err(rej) => Err(SearchError::InvalidPlan(format!("move {} rejected", rej.index))),
    }
}

fn plan_to_moves(level: &Level, plan: &Plan) -> Result<Vec<Direction>, SearchError> {
    match plan {
        Plan::Sequential(m) => Ok(m.clone()),
        Plan::Parallel(steps) => Ok(serialize(level, steps)?),
    }
}

/// Iterative deepening over `T = 0, 1, 2, ...` in FULL or COLLAPSED mode.
pub fn solve_sequential(
    level: &Level,
    mode: Mode,
    reach: ReachKind,
    backend: &dyn Backend,
    policy: BudgetPolicy,
) -> Result<SearchResult, SearchError> {
    if !matches!(mode, Mode::Full | Mode::Collapsed) {
        return Err(SearchError::Mode(mode));
    }
    let started = Instant::now();
    let mut session = Session::new(backend, policy);
    let phase = mode.to_string();
    let mut lower = 0;
    let mut found = None;
    for t in 0..=policy.horizon_cap {
        let f = encode(level, &EncodingConfig::new(mode, reach, t))?;
        let out = session.probe(&phase, t, &f)?;
        match out.status {
            SolveStatus::Unsat => lower = t + 1,
            SolveStatus::Unknown => break,
            SolveStatus::Sat => {
                let plan = decode(&f, out.model.as_ref().expect("sat has model"))?;
                let moves = plan_to_moves(level, &plan)?;
                check_goal(level, &moves)?;
                found = Some((t, moves));
                break;
            }
        }
    }
    let mut bounds = Bounds::new(Some(lower), found.as_ref().map(|f| f.0));
    bounds.timings.push((phase, started.elapsed().as_secs_f64()));
    Ok(SearchResult {
        ub_trace: found.iter().map(|f| f.0).collect(),
        moves: found.map(|f| f.1),
        bounds,
        parallel: None,
        probes: session.probes,
    })
}

/// Outcome of the parallel ascend phase.
#[derive(Clone, Debug)]
pub struct Ascent {
    /// Smallest horizon with a parallel plan.
    pub horizon: usize,
    pub steps: Vec<Step>,
    /// Object actions in the plan.
    pub upper_bound: usize,
}

/// Smallest parallel horizon by iterative deepening; `None` when the budget
/// or horizon cap runs out first.
pub fn ascend_parallel(level: &Level, reach: ReachKind, session: &mut Session<'_>) -> Result<Option<Ascent>, SearchError> {
    for t in 0..=session.policy.horizon_cap {
        let f = encode(level, &EncodingConfig::new(Mode::Parallel, reach, t))?;
        let out = session.probe("ascend", t, &f)?;
        match out.status {
            SolveStatus::Unsat => continue,
            SolveStatus::Unknown => return Ok(None),
            SolveStatus::Sat => {
                let plan = decode(&f, out.model.as_ref().expect("sat has model"))?;
                let upper_bound = plan.object_actions().unwrap_or(0);
                let Plan::Parallel(steps) = plan else {
                    return Err(SearchError::InvalidPlan("parallel model decoded to moves".into()));
                };
                return Ok(Some(Ascent { horizon: t, steps, upper_bound }));
            }
        }
    }
    Ok(None)
}

/// Replays a step plan as primitive moves: within a step, actions go in
/// row-major order of the cell the agent acts from, then N, S, E, W; a
/// shortest walk precedes each action and replaces each jump.
pub fn serialize(level: &Level, steps: &[Step]) -> Result<Vec<Direction>, SerializeError> {
    let mut state = GameState::initial(level);
    let mut moves = Vec::new();
    let walk = |state: &mut GameState, moves: &mut Vec<Direction>, step: usize, to: crate::level::Cell| {
        let path = state.shortest_walk(level, to).ok_or(SerializeError::NoWalk { step, cell: to.0 })?;
        for d in path {
            *state = state.step(level, d).expect("walk cells are free").0;
            moves.push(d);
        }
        Ok::<(), SerializeError>(())
    };
    for (i, s) in steps.iter().enumerate() {
        match s {
            Step::Jump(c) => walk(&mut state, &mut moves, i, *c)?,
            Step::Act(actions) => {
                let mut ordered: Vec<(usize, Direction, ObjectAction)> = actions
                    .iter()
                    .map(|a| (a.pushing_cell(level).map_or(usize::MAX, |c| c.0), a.dir, *a))
                    .collect();
                ordered.sort();
                for (p, _, a) in ordered {
                    let rejected = SerializeError::Rejected { step: i, action: a };
                    if p == usize::MAX {
                        return Err(rejected);
                    }
                    walk(&mut state, &mut moves, i, crate::level::Cell(p))?;
                    match state.step(level, a.dir) {
                        Some((next, kind)) if kind.is_object() => state = next,
                        _ => return Err(rejected),
                    }
                    moves.push(a.dir);
                }
            }
        }
    }
    Ok(moves)
}

/// Descend from a known plan with `upper` object actions. Each probe asks
/// for a plan of at most `upper - 1` actions (noops pad shorter ones).
pub fn descend(
    level: &Level,
    upper: usize,
    moves: Vec<Direction>,
    reach: ReachKind,
    session: &mut Session<'_>,
) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    let mut best = (upper, moves);
    let mut trace = vec![upper];
    let mut lower = None;
    while best.0 > 0 {
        let t = best.0 - 1;
        let f = encode(level, &EncodingConfig::new(Mode::Descend, reach, t))?;
        let out = session.probe("descend", t, &f)?;
        match out.status {
            SolveStatus::Unsat => {
                lower = Some(best.0);
                break;
            }
            SolveStatus::Unknown => break,
            SolveStatus::Sat => {
                let plan = decode(&f, out.model.as_ref().expect("sat has model"))?;
                let k = plan.object_actions().unwrap_or(0);
                let moves = plan_to_moves(level, &plan)?;
                check_goal(level, &moves)?;
                debug_assert!(k < best.0);
                best = (k, moves);
                trace.push(k);
            }
        }
    }
    if best.0 == 0 {
        lower = Some(0);
    }
    let mut bounds = Bounds::new(lower, Some(best.0));
    bounds.timings.push(("descend".into(), started.elapsed().as_secs_f64()));
    Ok(SearchResult { bounds, moves: Some(best.1), parallel: None, probes: Vec::new(), ub_trace: trace })
}

/// Parallel ascend for an upper bound, then sequential descend.
pub fn solve_hybrid(
    level: &Level,
    ascend_reach: ReachKind,
    descend_reach: ReachKind,
    backend: &dyn Backend,
    policy: BudgetPolicy,
) -> Result<SearchResult, SearchError> {
    let mut session = Session::new(backend, policy);
    let started = Instant::now();
    let ascent = ascend_parallel(level, ascend_reach, &mut session)?;
    let ascend_secs = started.elapsed().as_secs_f64();
    let Some(ascent) = ascent else {
        let mut bounds = Bounds::new(None, None);
        bounds.timings.push(("ascend".into(), ascend_secs));
        return Ok(SearchResult { bounds, moves: None, parallel: None, probes: session.probes, ub_trace: Vec::new() });
    };
    let moves = serialize(level, &ascent.steps)?;
    check_goal(level, &moves)?;
    let mut result = descend(level, ascent.upper_bound, moves, descend_reach, &mut session)?;
    result.bounds.timings.insert(0, ("ascend".into(), ascend_secs));
    result.parallel = Some(ascent.steps);
    result.probes = session.probes;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{parse_snowman, parse_sokoban_xsb};
    use crate::solver::Embedded;

    fn policy() -> BudgetPolicy {
        BudgetPolicy { per_call: Duration::from_secs(60), overall: Duration::from_secs(120), horizon_cap: 30 }
    }

    #[test]
    fn at_goal_level_is_optimal_zero() {
        let l = parse_snowman("#####\n#p7-#\n#####").unwrap();
        let b = Embedded::default();
        for mode in [Mode::Full, Mode::Collapsed] {
            let r = solve_sequential(&l, mode, ReachKind::Tree, &b, policy()).unwrap();
            assert_eq!(r.bounds.status, BoundStatus::Optimal);
            assert_eq!(r.bounds.upper, Some(0));
            assert_eq!(r.moves, Some(vec![]));
        }
        let r = solve_hybrid(&l, ReachKind::Tree, ReachKind::Path, &b, policy()).unwrap();
        assert_eq!(r.bounds.upper, Some(0));
        assert!(r.probes.iter().all(|p| p.phase == "ascend"));
    }

    #[test]
    fn forced_push() {
        let l = parse_sokoban_xsb("#####\n#@$.#\n#####").unwrap();
        let b = Embedded::default();
        let r = solve_sequential(&l, Mode::Collapsed, ReachKind::Path, &b, policy()).unwrap();
        assert_eq!((r.bounds.lower, r.bounds.upper), (Some(1), Some(1)));
        assert_eq!(r.moves, Some(vec![Direction::East]));
        let r = solve_hybrid(&l, ReachKind::Tree, ReachKind::Path, &b, policy()).unwrap();
        assert_eq!(r.bounds.status, BoundStatus::Optimal);
        assert_eq!(r.ub_trace, vec![1]);
        assert!(matches!(solve_sequential(&l, Mode::Descend, ReachKind::Path, &b, policy()), Err(SearchError::Mode(_))));
    }

    #[test]
    fn serialize_basics() {
        let l = parse_sokoban_xsb("#####\n#@$.#\n#####").unwrap();
        assert_eq!(serialize(&l, &[]).unwrap(), vec![]);
        let push = ObjectAction {
            kind: crate::encode::ActionKind::Roll,
            cell: l.cell_at(1, 2),
            dir: Direction::East,
            size: crate::level::BallSize::Large,
        };
        assert_eq!(serialize(&l, &[Step::Act(vec![push])]).unwrap(), vec![Direction::East]);
        let bad = ObjectAction { dir: Direction::West, ..push };
        assert!(serialize(&l, &[Step::Act(vec![bad])]).is_err());
    }

    #[test]
    fn budget_exhaustion_is_bounded() {
        let l = parse_sokoban_xsb("######\n#@ $.#\n######").unwrap();
        let b = Embedded::default();
        let p = BudgetPolicy { overall: Duration::ZERO, ..policy() };
        let r = solve_sequential(&l, Mode::Full, ReachKind::Tree, &b, p).unwrap();
        assert_eq!(r.bounds.status, BoundStatus::Bounded);
        assert_eq!(r.bounds.lower, Some(0));
        assert_eq!(r.moves, None);
        assert_eq!(r.last_horizon(), Some(0));
    }
}
