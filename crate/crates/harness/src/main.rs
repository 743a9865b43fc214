use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use catan_baselines::corpus::write_csv;
use catan_baselines::forest::cross_validate;
use catan_baselines::{generate_corpus, train_forest, ForestParams, RandomForest};
use catan_dqn::DqnAgent;
use catan_harness::cross_eval::{self, agent_path, forest_path, Contenders};
use catan_harness::protocol;
use catan_harness::tournament::{self, TournamentOptions};
use catan_harness::training::{self, run_training};
use catan_harness::{ExperimentConfig, OpponentClass, PolicySpec, SeatAssignment};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "catan-trade", about = "Train and evaluate Catan trading agents")]
struct Cli {
    /// Experiment config (TOML); defaults apply to anything not set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// 500K training experiences and 10K test games.
    #[arg(long, global = true)]
    full_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a DRL agent against three copies of a baseline.
    Train {
        #[arg(long, value_enum)]
        opponent: Option<OpponentClass>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the checkpoint and learning curve.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Play one seat assignment; slot 0 is tracked.
    Tournament {
        /// Four comma-separated seats: ran, heu, sup, or drl:<class>.
        #[arg(long)]
        seats: String,
        #[arg(long)]
        games: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Where forest.json and drl_<class>.ckpt live.
        #[arg(long, default_value = "runs")]
        checkpoints: PathBuf,
        /// Summary CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-game CSV.
        #[arg(long)]
        games_csv: Option<PathBuf>,
        /// Directory for per-game event logs.
        #[arg(long)]
        logs: Option<PathBuf>,
    },
    /// Run the 15-configuration grid.
    CrossEval {
        #[arg(long, default_value = "runs")]
        checkpoints: PathBuf,
        #[arg(long)]
        games: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the synthetic corpus and train the supervised forest.
    GenCorpus {
        #[arg(long)]
        games: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Also report 10-fold cross-validation accuracy.
        #[arg(long)]
        cv: bool,
    },
    /// Serve a learning agent over the line protocol.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Resume from this checkpoint; it is rewritten after every session.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Stop after this many sessions.
        #[arg(long)]
        sessions: Option<usize>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn forest_in(cfg: &ExperimentConfig, dir: &Path) -> Result<Arc<RandomForest>> {
    let path = forest_path(dir);
    if path.exists() {
        return Ok(Arc::new(cross_eval::load_forest(&path)?));
    }
    eprintln!("{} not found; generating the corpus and training a forest", path.display());
    let data = generate_corpus(cfg.corpus.games, cfg.corpus.seed, cfg.rules)?;
    let params = ForestParams { trees: cfg.corpus.trees, ..ForestParams::default() };
    let forest = train_forest(&data, &params, cfg.corpus.forest_seed)?;
    let mut w = create(&path)?;
    w.write_all(forest.to_json().as_bytes())?;
    w.flush()?;
    Ok(Arc::new(forest))
}

fn parse_seat(s: &str, cfg: &ExperimentConfig, dir: &Path) -> Result<PolicySpec> {
    Ok(match s.trim() {
        "ran" => PolicySpec::Random,
        "heu" => PolicySpec::Heuristic,
        "sup" => PolicySpec::Supervised(forest_in(cfg, dir)?),
        other => match other.strip_prefix("drl:") {
            Some(class) => {
                let class: OpponentClass = class.parse().map_err(anyhow::Error::msg)?;
                let agent = cross_eval::load_agent(&agent_path(dir, class))?;
                PolicySpec::Drl { name: class.name().into(), net: Arc::new(agent.net) }
            }
            None => bail!("unknown seat {other:?} (expected ran, heu, sup or drl:<class>)"),
        },
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if cli.full_scale {
        cfg = cfg.full_scale();
    }
    match cli.command {
        Command::Train { opponent, budget, seed, out } => {
            let mut train = cfg.train.clone();
            train.opponent = opponent.unwrap_or(train.opponent);
            train.budget = budget.unwrap_or(train.budget);
            train.seed = seed.unwrap_or(train.seed);
            let forest = match train.opponent {
                OpponentClass::Sup => Some(forest_in(&cfg, &out)?),
                _ => None,
            };
            let started = std::time::Instant::now();
            let outcome = run_training(&train, &cfg.agent, cfg.rules, forest)?;
            let class = train.opponent;
            let ckpt = agent_path(&out, class);
            let mut w = create(&ckpt)?;
            outcome.agent.save(&mut w)?;
            w.flush()?;
            let curve = out.join(format!("curve_{class}.csv"));
            let mut w = create(&curve)?;
            training::write_curve(&outcome.curve, &mut w)?;
            w.flush()?;
            eprintln!(
                "trained vs {class}: {} experiences over {} games ({} won) in {:.1?}; wrote {} and {}",
                outcome.agent.steps,
                outcome.games,
                outcome.wins,
                started.elapsed(),
                ckpt.display(),
                curve.display()
            );
        }
        Command::Tournament { seats, games, seed, checkpoints, out, games_csv, logs } => {
            let specs = seats.split(',').map(|s| parse_seat(s, &cfg, &checkpoints)).collect::<Result<Vec<_>>>()?;
            let slots: [PolicySpec; 4] = specs.try_into().map_err(|_| anyhow::anyhow!("--seats needs exactly four entries"))?;
            let assignment = SeatAssignment { slots };
            let opts = TournamentOptions { rules: cfg.rules, keep_logs: logs.is_some() };
            let report = tournament::run_tournament(&assignment, games.unwrap_or(cfg.eval.games), seed.unwrap_or(cfg.eval.seed), &opts)?;
            tournament::write_report(std::slice::from_ref(&report), output(&out)?)?;
            if let Some(p) = games_csv {
                let mut w = create(&p)?;
                tournament::write_games(&report, &mut w)?;
                w.flush()?;
            }
            if let Some(dir) = logs {
                std::fs::create_dir_all(&dir)?;
                for g in &report.games {
                    let text = g.log.as_deref().unwrap_or_default();
                    std::fs::write(dir.join(format!("game_{:05}.log", g.index)), text)?;
                }
            }
        }
        Command::CrossEval { checkpoints, games, seed, out } => {
            let contenders = Contenders::load(&checkpoints)?;
            let opts = TournamentOptions { rules: cfg.rules, keep_logs: false };
            let reports =
                cross_eval::cross_evaluate(&contenders, games.unwrap_or(cfg.eval.games), seed.unwrap_or(cfg.eval.seed), &opts)?;
            cross_eval::write_table(&reports, output(&out)?)?;
        }
        Command::GenCorpus { games, seed, out, cv } => {
            let data = generate_corpus(games.unwrap_or(cfg.corpus.games), seed.unwrap_or(cfg.corpus.seed), cfg.rules)?;
            let mut w = create(&out.join("corpus.csv"))?;
            write_csv(&data, &mut w)?;
            w.flush()?;
            let params = ForestParams { trees: cfg.corpus.trees, ..ForestParams::default() };
            let forest = train_forest(&data, &params, cfg.corpus.forest_seed)?;
            let mut w = create(&forest_path(&out))?;
            w.write_all(forest.to_json().as_bytes())?;
            w.flush()?;
            eprintln!("{} rows, majority class {:.3}", data.len(), data.majority_rate());
            if cv {
                let acc = cross_validate(&data, 10, &params, cfg.corpus.forest_seed)?;
                eprintln!("10-fold cross-validation accuracy {acc:.3}");
            }
        }
        Command::Serve { port, checkpoint, seed, sessions } => {
            let seed = seed.unwrap_or(cfg.train.seed);
            let mut agent = if checkpoint.exists() {
                cross_eval::load_agent(&checkpoint)?
            } else {
                let mut a = DqnAgent::new(cfg.train.effective_agent(&cfg.agent), seed)?;
                a.budget = Some(cfg.train.budget);
                a
            };
            let listener = TcpListener::bind(("127.0.0.1", port)).with_context(|| format!("binding port {port}"))?;
            eprintln!("serving on {}", listener.local_addr()?);
            protocol::serve(&listener, &mut agent, sessions, |agent, result| {
                match result {
                    Ok(s) => eprintln!("session done: {} episodes, {} decisions", s.episodes, s.decisions),
                    Err(e) => eprintln!("session failed: {e}"),
                }
                let saved = create(&checkpoint).map_err(|e| e.to_string()).and_then(|mut w| {
                    agent.save(&mut w).map_err(|e| e.to_string())?;
                    w.flush().map_err(|e| e.to_string())
                });
                if let Err(e) = saved {
                    eprintln!("could not write {}: {e}", checkpoint.display());
                }
            })?;
        }
    }
    Ok(())
}
