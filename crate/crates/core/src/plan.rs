//! Plans decoded from models, LURD solution strings and run records.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Formula, Model};
use crate::encode::ObjectAction;
use crate::game::{run_plan, GameState, MoveKind, Rejection};
use crate::level::{Cell, Direction, Level};
use crate::solver::SolveStatus;

/// One timestep of an object-level plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Object actions performed together. Sequential plans have one per step.
    Act(Vec<ObjectAction>),
    /// Relocate the agent.
    Jump(Cell),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Plan {
    /// Primitive moves.
    Sequential(Vec<Direction>),
    /// Object actions and jumps, one entry per non-idle timestep.
    Parallel(Vec<Step>),
}

impl Plan {
    /// Object actions in a parallel plan; `None` for move sequences, whose
    /// count depends on simulation.
    pub fn object_actions(&self) -> Option<usize> {
        match self {
            Plan::Sequential(_) => None,
            Plan::Parallel(steps) => Some(
                steps
                    .iter()
                    .map(|s| match s {
                        Step::Act(a) => a.len(),
                        Step::Jump(_) => 0,
                    })
                    .sum(),
            ),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("step {t}: {count} directions set")]
    Directions { t: usize, count: usize },
    #[error("step {0}: jump mixed with object actions")]
    JumpWithActions(usize),
    #[error("step {0}: several jumps")]
    Jumps(usize),
    #[error("malformed variable name `{0}`")]
    Name(String),
}

fn parse_indexed(name: &str, prefix: &str) -> Option<Vec<String>> {
    let rest = name.strip_prefix(prefix)?.strip_prefix('[')?.strip_suffix(']')?;
    Some(rest.split(',').map(str::to_owned).collect())
}

/// Reads the plan of a model through the variable registry. Move variables
/// (`dir[..]`) give a sequential plan; otherwise object actions and jumps
/// give a parallel plan. Noop steps are dropped.
pub fn decode(formula: &Formula, model: &Model) -> Result<Plan, DecodeError> {
    let mut dirs: BTreeMap<usize, Vec<Direction>> = BTreeMap::new();
    let mut acts: BTreeMap<usize, Vec<ObjectAction>> = BTreeMap::new();
    let mut jumps: BTreeMap<usize, Vec<Cell>> = BTreeMap::new();
    let mut has_dirs = false;
    for (name, var) in formula.named_vars() {
        if let Some(f) = parse_indexed(name, "dir") {
            has_dirs = true;
            let bad = || DecodeError::Name(name.to_owned());
            let [d, t] = f.as_slice() else { return Err(bad()) };
            let d = d.chars().next().and_then(Direction::from_code).ok_or_else(bad)?;
            let t: usize = t.parse().map_err(|_| bad())?;
            let entry = dirs.entry(t).or_default();
            if model.var(var) {
                entry.push(d);
            }
        } else if let Some(f) = parse_indexed(name, "jump") {
            if !model.var(var) {
                continue;
            }
            let bad = || DecodeError::Name(name.to_owned());
            let [c, t] = f.as_slice() else { return Err(bad()) };
            let c: usize = c.parse().map_err(|_| bad())?;
            let t: usize = t.parse().map_err(|_| bad())?;
            jumps.entry(t).or_default().push(Cell(c));
        } else if let Some((a, t)) = ObjectAction::parse_var_name(name) {
            if model.var(var) {
                acts.entry(t).or_default().push(a);
            }
        }
    }
    if has_dirs {
        let mut moves = Vec::with_capacity(dirs.len());
        for (t, ds) in dirs {
            if ds.len() != 1 {
                return Err(DecodeError::Directions { t, count: ds.len() });
            }
            moves.push(ds[0]);
        }
        return Ok(Plan::Sequential(moves));
    }
    let horizon = acts.keys().chain(jumps.keys()).max().map_or(0, |&t| t + 1);
    let mut steps = Vec::new();
    for t in 0..horizon {
        let a = acts.remove(&t).unwrap_or_default();
        let j = jumps.remove(&t).unwrap_or_default();
        match (a.is_empty(), j.as_slice()) {
            (true, []) => {}
            (true, [c]) => steps.push(Step::Jump(*c)),
            (true, _) => return Err(DecodeError::Jumps(t)),
            (false, []) => {
                let mut a = a;
                a.sort();
                steps.push(Step::Act(a));
            }
            (false, _) => return Err(DecodeError::JumpWithActions(t)),
        }
    }
    Ok(Plan::Parallel(steps))
}

/// LURD rendering of a move sequence; uppercase where the simulator reports
/// an object action.
pub fn to_lurd(level: &Level, moves: &[Direction]) -> Result<String, Rejection> {
    let replay = run_plan(level, moves)?;
    Ok(moves
        .iter()
        .zip(&replay.kinds)
        .map(|(d, k)| if k.is_object() { d.letter().to_ascii_uppercase() } else { d.letter() })
        .collect())
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("character {ch:?} at position {index} is not one of lurdLURD")]
pub struct LurdError {
    pub index: usize,
    pub ch: char,
}

/// Directions of a LURD string with the case of each letter. Whitespace is
/// ignored.
pub fn parse_lurd(text: &str) -> Result<Vec<(Direction, bool)>, LurdError> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .enumerate()
        .map(|(index, ch)| match Direction::from_letter(ch) {
            Some(d) if ch.is_ascii_alphabetic() => Ok((d, ch.is_ascii_uppercase())),
            _ => Err(LurdError { index, ch }),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validation {
    pub goal_reached: bool,
    pub moves: usize,
    pub object_actions: usize,
    /// First move whose case disagrees with the simulator.
    pub case_mismatch: Option<usize>,
    /// First move the simulator rejects.
    pub rejected_at: Option<usize>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.goal_reached && self.case_mismatch.is_none() && self.rejected_at.is_none()
    }
}

pub fn validate_lurd(level: &Level, text: &str) -> Result<Validation, LurdError> {
    let moves = parse_lurd(text)?;
    let mut state = GameState::initial(level);
    let mut v = Validation { goal_reached: false, moves: 0, object_actions: 0, case_mismatch: None, rejected_at: None };
    for (i, &(d, upper)) in moves.iter().enumerate() {
        let Some((next, kind)) = state.step(level, d) else {
            v.rejected_at = Some(i);
            return Ok(v);
        };
        if kind.is_object() != upper && v.case_mismatch.is_none() {
            v.case_mismatch = Some(i);
        }
        if kind != MoveKind::Walk {
            v.object_actions += 1;
        }
        v.moves += 1;
        state = next;
    }
    v.goal_reached = state.is_goal(level);
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    Optimal,
    Bounded,
    Unknown,
}

/// One solver call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub phase: String,
    pub horizon: usize,
    pub result: SolveStatus,
    pub seconds: f64,
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub game: crate::level::Game,
    pub mode: String,
    pub reach: String,
    pub lb: Option<usize>,
    pub ub: Option<usize>,
    pub status: BoundStatus,
    pub solution: Option<String>,
    pub probes: Vec<Probe>,
    pub last_horizon: Option<usize>,
    pub seed: u64,
    pub backend: String,
    pub seconds: f64,
}

impl RunRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    /// The record with every wall-clock field zeroed.
    pub fn without_timings(&self) -> RunRecord {
        let mut r = self.clone();
        r.seconds = 0.0;
        for p in &mut r.probes {
            p.seconds = 0.0;
        }
        r
    }
}

/// Reads line-delimited records, skipping blank lines.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<RunRecord>, serde_json::Error> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(serde_json::Error::io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
