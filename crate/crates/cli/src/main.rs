use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use snowsat::fixtures::{freeze_fixture, game_for_path};
use snowsat::{
    encode, par2, parse_level, run_instance, validate_lurd, Backend, BoundStatus, BudgetPolicy, Embedded, EncodingConfig,
    External, Formula, Game, Level, Mode, Outcome, ReachKind, RunConfig, RunRecord, SolveStatus, Strategy,
};

#[derive(Parser)]
#[command(name = "snowsat", version, about = "Optimal Snowman and Sokoban planning with SAT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameArg {
    Snowman,
    Sokoban,
}

impl From<GameArg> for Game {
    fn from(g: GameArg) -> Game {
        match g {
            GameArg::Snowman => Game::Snowman,
            GameArg::Sokoban => Game::Sokoban,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Full,
    Collapsed,
    Hybrid,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Full => Strategy::Full,
            StrategyArg::Collapsed => Strategy::Collapsed,
            StrategyArg::Hybrid => Strategy::Hybrid,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReachArg {
    Path,
    Dag,
    Tree,
}

impl From<ReachArg> for ReachKind {
    fn from(r: ReachArg) -> ReachKind {
        match r {
            ReachArg::Path => ReachKind::Path,
            ReachArg::Dag => ReachKind::Dag,
            ReachArg::Tree => ReachKind::Tree,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Lurd,
    Record,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Collapsed,
    Parallel,
    Descend,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::Collapsed => Mode::Collapsed,
            ModeArg::Parallel => Mode::Parallel,
            ModeArg::Descend => Mode::Descend,
        }
    }
}

/// Solver options shared by `solve` and `bench`.
#[derive(clap::Args)]
struct SolverOpts {
    #[arg(long, value_enum, default_value = "hybrid", env = "SNOWSAT_MODE")]
    mode: StrategyArg,
    /// Wall-clock limit per instance, in seconds.
    #[arg(long, default_value_t = 600.0, env = "SNOWSAT_TIMEOUT")]
    timeout: f64,
    #[arg(long, default_value_t = 0, env = "SNOWSAT_SEED")]
    seed: u64,
    /// External solver command; `{input}` is the DIMACS file, `{seed}` the seed.
    /// Without it the embedded CaDiCaL is used.
    #[arg(long, env = "SNOWSAT_SOLVER_CMD")]
    solver_cmd: Option<String>,
    /// Reachability encoding while descending in hybrid mode.
    #[arg(long, value_enum, default_value = "path", env = "SNOWSAT_DESCEND_REACH")]
    descend_reach: ReachArg,
    #[arg(long, default_value_t = 200, env = "SNOWSAT_HORIZON_CAP")]
    horizon_cap: usize,
}

impl SolverOpts {
    fn backend(&self) -> Box<dyn Backend> {
        match &self.solver_cmd {
            Some(t) => Box::new(External::new(t.clone(), self.seed)),
            None => Box::new(Embedded { seed: self.seed }),
        }
    }

    fn config(&self, reach: ReachArg) -> Result<RunConfig> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            bail!("--timeout must be a positive number of seconds");
        }
        let limit = Duration::from_secs_f64(self.timeout);
        Ok(RunConfig {
            strategy: self.mode.into(),
            reach: reach.into(),
            descend_reach: self.descend_reach.into(),
            policy: BudgetPolicy { per_call: limit, overall: limit, horizon_cap: self.horizon_cap },
            seed: self.seed,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one level; prints the LURD solution and/or a JSON run record.
    Solve {
        level: PathBuf,
        /// Defaults to the one implied by the file extension.
        #[arg(long, value_enum, env = "SNOWSAT_GAME")]
        game: Option<GameArg>,
        /// Reachability encoding; for hybrid runs, the one used while ascending.
        #[arg(long, value_enum, default_value = "tree", env = "SNOWSAT_REACH")]
        reach: ReachArg,
        #[arg(long, value_enum, default_value = "both", env = "SNOWSAT_EMIT")]
        emit: Emit,
        #[command(flatten)]
        opts: SolverOpts,
    },
    /// Solve every level in a directory under each encoding and score PAR-2.
    Bench {
        dir: PathBuf,
        /// Encodings to compare.
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["path", "dag", "tree"], env = "SNOWSAT_REACH")]
        reach: Vec<ReachArg>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long, env = "SNOWSAT_JOBS")]
        jobs: Option<usize>,
        /// Write the run records here, one JSON object per line.
        #[arg(long)]
        records: Option<PathBuf>,
        #[command(flatten)]
        opts: SolverOpts,
    },
    /// Replay a LURD string; exit 0 iff it reaches the goal with correct case.
    Validate {
        level: PathBuf,
        /// The solution string, or `-` to read it from stdin.
        lurd: String,
        #[arg(long, value_enum, env = "SNOWSAT_GAME")]
        game: Option<GameArg>,
    },
    /// Write the CNF for one horizon in DIMACS format.
    Encode {
        level: PathBuf,
        #[arg(long, value_enum, env = "SNOWSAT_GAME")]
        game: Option<GameArg>,
        #[arg(long, value_enum, default_value = "collapsed")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "tree", env = "SNOWSAT_REACH")]
        reach: ReachArg,
        #[arg(long)]
        horizon: usize,
        /// Leave out the goal clauses.
        #[arg(long)]
        no_goal: bool,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Store a level with its oracle optima as a fixture.
    Freeze {
        level: PathBuf,
        #[arg(long, value_enum, env = "SNOWSAT_GAME")]
        game: Option<GameArg>,
        /// Fixture name; defaults to the file stem.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        dir: PathBuf,
        /// Oracle state budget.
        #[arg(long, default_value_t = 1_000_000)]
        cap: usize,
    },
    /// Solve a DIMACS file with the embedded solver, printing competition output.
    Sat {
        input: PathBuf,
        #[arg(long, default_value_t = 600.0)]
        timeout: f64,
    },
}

fn load_level(path: &Path, game: Option<GameArg>) -> Result<Level> {
    let game = match game {
        Some(g) => g.into(),
        None => game_for_path(path)
            .with_context(|| format!("cannot infer the game of {}; pass --game", path.display()))?,
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_level(game, &text).with_context(|| format!("parsing {}", path.display()))
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn cmd_solve(level: PathBuf, game: Option<GameArg>, reach: ReachArg, emit: Emit, opts: SolverOpts) -> Result<ExitCode> {
    let lvl = load_level(&level, game)?;
    let cfg = opts.config(reach)?;
    let backend = opts.backend();
    let (record, _) = run_instance(&lvl, &instance_name(&level), &cfg, backend.as_ref())?;
    let mut out = std::io::stdout().lock();
    if emit != Emit::Record {
        match &record.solution {
            Some(s) => writeln!(out, "{s}")?,
            None => eprintln!("no solution found"),
        }
    }
    if emit != Emit::Lurd {
        writeln!(out, "{}", record.to_json_line())?;
    }
    eprintln!("status {:?}, lb {:?}, ub {:?}", record.status, record.lb, record.ub);
    Ok(if record.status == BoundStatus::Optimal { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[derive(Serialize)]
struct EncodingSummary {
    reach: String,
    #[serde(flatten)]
    score: snowsat::Par2Summary,
}

fn cmd_bench(
    dir: PathBuf,
    reach: Vec<ReachArg>,
    jobs: Option<usize>,
    records: Option<PathBuf>,
    opts: SolverOpts,
) -> Result<ExitCode> {
    let mut levels: Vec<PathBuf> = fs::read_dir(&dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| game_for_path(p).is_some())
        .collect();
    levels.sort();
    if levels.is_empty() {
        eprintln!("warning: no level files in {}", dir.display());
    }
    let mut reach = reach;
    reach.dedup();
    let configs: Vec<RunConfig> = reach.iter().map(|&r| opts.config(r)).collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let pairs: Vec<(usize, &PathBuf)> = (0..configs.len()).flat_map(|c| levels.iter().map(move |l| (c, l))).collect();
    let runs: Vec<(usize, Result<RunRecord>)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(c, path)| {
                let run = || -> Result<RunRecord> {
                    let lvl = load_level(path, None)?;
                    let backend = opts.backend();
                    Ok(run_instance(&lvl, &instance_name(path), &configs[c], backend.as_ref())?.0)
                };
                (c, run())
            })
            .collect()
    });

    let mut sink: Box<dyn Write> = match &records {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::sink()),
    };
    let mut outcomes = vec![Vec::new(); configs.len()];
    for ((c, run), &(_, path)) in runs.iter().zip(&pairs) {
        match run {
            Ok(r) => {
                writeln!(sink, "{}", r.to_json_line())?;
                outcomes[*c].push(Outcome::of_record(r, opts.timeout));
            }
            Err(e) => {
                eprintln!("{}: {e:#}", path.display());
                outcomes[*c].push(Outcome::Failed);
            }
        }
    }
    let mut out = std::io::stdout().lock();
    for (cfg, o) in configs.iter().zip(&outcomes) {
        let s = EncodingSummary { reach: cfg.reach_label(), score: par2(o, opts.timeout) };
        writeln!(out, "{}", serde_json::to_string(&s)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(level: PathBuf, lurd: String, game: Option<GameArg>) -> Result<ExitCode> {
    let lvl = load_level(&level, game)?;
    let text = if lurd == "-" { std::io::read_to_string(std::io::stdin())? } else { lurd };
    let v = validate_lurd(&lvl, &text)?;
    println!(
        "goal_reached={} moves={} object_actions={}",
        v.goal_reached, v.moves, v.object_actions
    );
    if let Some(i) = v.rejected_at {
        println!("rejected at move {i}");
    }
    if let Some(i) = v.case_mismatch {
        println!("case mismatch at move {i}");
    }
    Ok(if v.ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_sat(input: PathBuf, timeout: f64) -> Result<ExitCode> {
    let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let f = Formula::from_dimacs(&text)?;
    let out = Embedded::default().solve(&f, Duration::from_secs_f64(timeout))?;
    let mut w = std::io::stdout().lock();
    match out.status {
        SolveStatus::Sat => {
            writeln!(w, "s SATISFIABLE")?;
            let model = out.model.expect("sat has model");
            let lits: Vec<String> = model
                .values()
                .iter()
                .enumerate()
                .map(|(i, &b)| if b { format!("{}", i + 1) } else { format!("-{}", i + 1) })
                .collect();
            for chunk in lits.chunks(20) {
                writeln!(w, "v {}", chunk.join(" "))?;
            }
            writeln!(w, "v 0")?;
            Ok(ExitCode::from(10))
        }
        SolveStatus::Unsat => {
            writeln!(w, "s UNSATISFIABLE")?;
            Ok(ExitCode::from(20))
        }
        SolveStatus::Unknown => {
            writeln!(w, "s UNKNOWN")?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { level, game, reach, emit, opts } => cmd_solve(level, game, reach, emit, opts),
        Command::Bench { dir, reach, jobs, records, opts } => cmd_bench(dir, reach, jobs, records, opts),
        Command::Validate { level, lurd, game } => cmd_validate(level, lurd, game),
        Command::Encode { level, game, mode, reach, horizon, no_goal, output } => {
            let lvl = load_level(&level, game)?;
            let mut cfg = EncodingConfig::new(mode.into(), reach.into(), horizon);
            cfg.goal = !no_goal;
            let dimacs = encode(&lvl, &cfg)?.to_dimacs();
            match output {
                Some(p) => fs::write(&p, dimacs).with_context(|| format!("writing {}", p.display()))?,
                None => std::io::stdout().lock().write_all(dimacs.as_bytes())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Freeze { level, game, name, dir, cap } => {
            let lvl = load_level(&level, game)?;
            let name = name.unwrap_or_else(|| instance_name(&level));
            let fx = freeze_fixture(&lvl, &name, &dir, cap)?;
            println!("{}", serde_json::to_string(&fx.meta)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sat { input, timeout } => cmd_sat(input, timeout),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
