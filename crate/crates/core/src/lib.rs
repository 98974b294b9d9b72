//! Planning for Snowman and Sokoban by iterative SAT solving.

pub mod cnf;
pub mod encode;
pub mod fixtures;
pub mod game;
pub mod level;
pub mod plan;
pub mod reach;
pub mod run;
pub mod search;
pub mod solver;

pub use cnf::{CnfError, Formula, Lit, Model, Signal, Var};
pub use level::{parse_level, parse_snowman, parse_sokoban_xsb, BallSize, Cell, CellKind, Direction, Game, Level, LevelError, Stack};
pub use reach::{Gate, Graph, ReachError, ReachFragment, Source};
pub use solver::{Backend, BackendError, Embedded, External, SolveOutcome, SolveStatus};
pub use game::{achievable_lengths, plan_with_object_actions, run_plan, oracle_optimal, GameState, Metric, MoveKind, OracleResult, Rejection, Replay};
pub use encode::{candidate_actions, encode, ActionKind, EncodeError, EncodingConfig, Mode, ObjectAction, ReachKind};
pub use plan::{decode, parse_lurd, to_lurd, validate_lurd, BoundStatus, Plan, Probe, RunRecord, Step, Validation};
pub use search::{ascend_parallel, descend, serialize, solve_hybrid, solve_sequential, Bounds, BudgetPolicy, SearchError, SearchResult, Session};
pub use run::{par2, run_instance, Outcome, Par2Summary, RunConfig, Strategy};
