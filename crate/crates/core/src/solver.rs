//! SAT backends.
//!
//! Every backend solves a finished [`Formula`] in one shot under a wall-clock
//! budget. Timeouts come back as [`SolveStatus::Unknown`]; a crashed or
//! misbehaving process is a [`BackendError`]. Models are checked against the
//! clause list before they are handed out.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{Formula, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub model: Option<Model>,
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("empty solver command template")]
    EmptyCommand,
    #[error("failed to run `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error talking to the solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exited with {status} without a result line; stderr: {stderr}")]
    NoResult { status: String, stderr: String },
    #[error("malformed solver output: {0}")]
    Protocol(String),
    #[error("solver model falsifies clause #{0}")]
    InvalidModel(usize),
}

pub trait Backend: Send + Sync {
    /// Short identifier recorded in run records.
    fn id(&self) -> String;

    /// Solves without post-checking. Implementors return a model of exactly
    /// `formula.num_vars()` values when satisfiable.
    fn solve_unchecked(&self, formula: &Formula, budget: Duration) -> Result<SolveOutcome, BackendError>;

    fn solve(&self, formula: &Formula, budget: Duration) -> Result<SolveOutcome, BackendError> {
        let outcome = self.solve_unchecked(formula, budget)?;
        if let Some(model) = &outcome.model {
            if let Some(idx) = formula.first_violated(model) {
                return Err(BackendError::InvalidModel(idx));
            }
        }
        Ok(outcome)
    }
}

/// Solves with the embedded backend.
pub fn solve(formula: &Formula, budget: Duration) -> Result<SolveOutcome, BackendError> {
    Embedded::default().solve(formula, budget)
}

/// In-process CaDiCaL.
#[derive(Clone, Debug, Default)]
pub struct Embedded {
    /// Recorded for reproducibility; CaDiCaL's search is deterministic for a
    /// given clause order, so the seed does not alter it.
    pub seed: u64,
}

impl Backend for Embedded {
    fn id(&self) -> String {
        "cadical-embedded".to_string()
    }

    fn solve_unchecked(&self, formula: &Formula, budget: Duration) -> Result<SolveOutcome, BackendError> {
        let start = Instant::now();
        let mut solver: cadical::Solver<cadical::Timeout> = cadical::Solver::new();
        solver.set_callbacks(Some(cadical::Timeout::new(budget.as_secs_f32())));
        let n = formula.num_vars();
        if n > 0 {
            solver.reserve(n as i32);
        }
        for clause in formula.clauses() {
            solver.add_clause(clause.iter().map(|l| l.dimacs()));
        }
        let result = solver.solve();
        let elapsed = start.elapsed();
        Ok(match result {
            Some(true) => {
                let values = (1..=n as i32).map(|v| solver.value(v).unwrap_or(false)).collect();
                SolveOutcome { status: SolveStatus::Sat, model: Some(Model::new(values)), elapsed }
            }
            Some(false) => SolveOutcome { status: SolveStatus::Unsat, model: None, elapsed },
            None => SolveOutcome { status: SolveStatus::Unknown, model: None, elapsed },
        })
    }
}

/// A solver process driven through a command template. `{input}` expands to
/// the DIMACS file path and `{seed}` to the configured seed, e.g.
/// `kissat -q --seed={seed} {input}`.
#[derive(Clone, Debug)]
pub struct External {
    pub template: String,
    pub seed: u64,
}

impl External {
    pub fn new(template: impl Into<String>, seed: u64) -> Self {
        External { template: template.into(), seed }
    }

    fn argv(&self, input: &str) -> Vec<String> {
        self.template
            .split_whitespace()
            .map(|tok| tok.replace("{input}", input).replace("{seed}", &self.seed.to_string()))
            .collect()
    }
}

impl Backend for External {
    fn id(&self) -> String {
        self.template
            .split_whitespace()
            .next()
            .map(|p| p.rsplit('/').next().unwrap_or(p).to_string())
            .unwrap_or_default()
    }

    fn solve_unchecked(&self, formula: &Formula, budget: Duration) -> Result<SolveOutcome, BackendError> {
        let start = Instant::now();
        let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
        file.write_all(formula.to_dimacs().as_bytes())?;
        file.flush()?;
        let argv = self.argv(&file.path().to_string_lossy());
        let (program, args) = argv.split_first().ok_or(BackendError::EmptyCommand)?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| BackendError::Spawn { program: program.clone(), source })?;

        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let err_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });

        let status = loop {
            if let Some(status) = child.try_wait()? {
                break Some(status);
            }
            if start.elapsed() >= budget {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            thread::sleep(Duration::from_millis(2));
        };
        let out = out_reader.join().expect("reader thread")?;
        let err = err_reader.join().expect("reader thread");
        let elapsed = start.elapsed();
        let Some(status) = status else {
            return Ok(SolveOutcome { status: SolveStatus::Unknown, model: None, elapsed });
        };

        match parse_competition_output(&out, formula.num_vars())? {
            Some((status, model)) => Ok(SolveOutcome { status, model, elapsed }),
            None => Err(BackendError::NoResult { status: status.to_string(), stderr: err.trim().to_string() }),
        }
    }
}

/// Parses SAT-competition output (`s ...` status line, `v ...` value lines).
/// Returns `None` when no status line is present. Variables missing from the
/// value lines default to false.
pub fn parse_competition_output(
    out: &str,
    num_vars: usize,
) -> Result<Option<(SolveStatus, Option<Model>)>, BackendError> {
    let mut status = None;
    let mut values = vec![false; num_vars];
    let mut terminated = false;
    for line in out.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(match s.trim() {
                "SATISFIABLE" => SolveStatus::Sat,
                "UNSATISFIABLE" => SolveStatus::Unsat,
                "UNKNOWN" => SolveStatus::Unknown,
                other => return Err(BackendError::Protocol(format!("unknown status `{other}`"))),
            });
        } else if let Some(v) = line.strip_prefix("v ").or_else(|| (line == "v").then_some("")) {
            for tok in v.split_whitespace() {
                let lit: i64 = tok
                    .parse()
                    .map_err(|_| BackendError::Protocol(format!("bad value `{tok}`")))?;
                if lit == 0 {
                    terminated = true;
                    continue;
                }
                let idx = lit.unsigned_abs() as usize;
                if idx > num_vars {
                    return Err(BackendError::Protocol(format!("value for unknown variable {idx}")));
                }
                values[idx - 1] = lit > 0;
            }
        }
    }
    Ok(match status {
        None => None,
        Some(SolveStatus::Sat) => {
            if !terminated && num_vars > 0 {
                return Err(BackendError::Protocol("value lines not terminated by 0".into()));
            }
            Some((SolveStatus::Sat, Some(Model::new(values))))
        }
        Some(other) => Some((other, None)),
    })
}
