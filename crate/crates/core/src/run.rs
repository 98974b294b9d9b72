//! One instance run end to end, and PAR-2 scoring over many runs.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::encode::{Mode, ReachKind};
use crate::level::Level;
use crate::plan::{to_lurd, BoundStatus, RunRecord};
use crate::search::{solve_hybrid, solve_sequential, BudgetPolicy, SearchError, SearchResult};
use crate::solver::Backend;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Iterative deepening over primitive moves.
    Full,
    /// Iterative deepening over object actions.
    Collapsed,
    /// Parallel ascend, then descend.
    Hybrid,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Full => "full",
            Strategy::Collapsed => "collapsed",
            Strategy::Hybrid => "hybrid",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub strategy: Strategy,
    /// Reachability encoding; for hybrid runs, the one used while ascending.
    pub reach: ReachKind,
    /// Reachability encoding while descending (hybrid only).
    pub descend_reach: ReachKind,
    pub policy: BudgetPolicy,
    pub seed: u64,
}

impl RunConfig {
    /// Name of the reachability setup as it appears in records.
    pub fn reach_label(&self) -> String {
        match self.strategy {
            Strategy::Full => "none".to_string(),
            Strategy::Collapsed => self.reach.to_string(),
            Strategy::Hybrid => format!("{}+{}", self.reach, self.descend_reach),
        }
    }
}

/// Solves `level` and summarizes the run as a record.
pub fn run_instance(
    level: &Level,
    instance: &str,
    cfg: &RunConfig,
    backend: &dyn Backend,
) -> Result<(RunRecord, SearchResult), SearchError> {
    let started = Instant::now();
    let result = match cfg.strategy {
        Strategy::Full => solve_sequential(level, Mode::Full, cfg.reach, backend, cfg.policy)?,
        Strategy::Collapsed => solve_sequential(level, Mode::Collapsed, cfg.reach, backend, cfg.policy)?,
        Strategy::Hybrid => solve_hybrid(level, cfg.reach, cfg.descend_reach, backend, cfg.policy)?,
    };
    let solution = match &result.moves {
        Some(m) => Some(to_lurd(level, m).map_err(|r| SearchError::InvalidPlan(format!("move {} rejected", r.index)))?),
        None => None,
    };
    let record = RunRecord {
        instance: instance.to_owned(),
        game: level.game(),
        mode: cfg.strategy.to_string(),
        reach: cfg.reach_label(),
        lb: result.bounds.lower,
        ub: result.bounds.upper,
        status: result.bounds.status,
        solution,
        probes: result.probes.clone(),
        last_horizon: result.last_horizon(),
        seed: cfg.seed,
        backend: backend.id(),
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok((record, result))
}

/// How one benchmark run ended, for scoring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    /// Proven optimal after this many seconds.
    Solved(f64),
    /// Not proven optimal within the limit.
    Unsolved,
    /// The run failed; scored like an unsolved run.
    Failed,
}

impl Outcome {
    pub fn of_record(record: &RunRecord, limit: f64) -> Outcome {
        if record.status == BoundStatus::Optimal && record.seconds <= limit {
            Outcome::Solved(record.seconds)
        } else {
            Outcome::Unsolved
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Par2Summary {
    pub instances: usize,
    pub solved: usize,
    pub timeouts: usize,
    pub errors: usize,
    /// Solved runtimes plus twice the limit for every other run.
    pub par2: f64,
}

pub fn par2(outcomes: &[Outcome], limit: f64) -> Par2Summary {
    let mut s = Par2Summary { instances: outcomes.len(), ..Default::default() };
    for o in outcomes {
        match *o {
            Outcome::Solved(secs) => {
                s.solved += 1;
                s.par2 += secs;
            }
            Outcome::Unsolved => {
                s.timeouts += 1;
                s.par2 += 2.0 * limit;
            }
            Outcome::Failed => {
                s.errors += 1;
                s.par2 += 2.0 * limit;
            }
        }
    }
    s
}
