//! `coordlearn` — generate KBs, run baseline-vs-coordination fact-gathering
//! experiments, evaluate question coverage, and demo joint-action learning
//! on a two-player coordination game.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.
//! `COORDLEARN_LOG` (error|info|debug) controls log verbosity.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use coordlearn_cli::{
    emit_corpus, emit_results, load_corpus, load_corpus_files, parse_budget, CliError, GenSpec,
    RunSpec,
};
use coordlearn_core::learners::{best_equilibrium_fraction, matrix_self_play, JalParams};
use coordlearn_core::qa;
use coordlearn_core::reasoner::InferenceLimits;
use coordlearn_core::simulator::{improvement_pct, run_experiment, Algorithm};
use coordlearn_core::MatrixGame;

#[derive(Parser)]
#[command(
    name = "coordlearn",
    version,
    about = "Coordinated fact-gathering experiments over logic knowledge bases",
    after_help = "Run configs are flat `key = value` text (# comments). Keys: scenario, \
kb, axioms, templates, gen, algorithms (baseline,coordination,random), episodes, seed, \
alpha, gamma, epsilon, epsilon_decay, selection_rule (opponent-model|own-action-count), \
threshold, depth, budget (unlimited|steps:N|seconds:N), mode (episodic|cumulative), \
sample_size, membership (union|working-only).\n\
Generator configs: fixture (birthplace|birthplace-graded) or seed, branching, depth, \
entities_per_leaf, domain*, predicate* (`name d1 d2`), block* (`pred c1 c2 count`), \
region* (`pred c1 c2 density`), chain* (`template consequent param-coll link...`), \
target_density. Starred keys repeat."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write kb.lkb, axioms.lkb, and templates.lkb from a generator config
    Generate {
        /// Generator config file
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment; write episodes.jsonl, summary.csv, config.resolved
    Run {
        /// Run config file
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// One-shot question-coverage report over a corpus
    Evaluate(EvaluateArgs),
    /// Self-play demo on the two-player partner-coordination game
    Bos {
        /// Episodes per seed
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        /// Number of seeds (0..seeds)
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Play a matrix game loaded from a .game file instead
        #[arg(long)]
        game: Option<PathBuf>,
        /// Give both players the first player's payoff (shared reward)
        #[arg(long)]
        shared: bool,
        /// Learning rate
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Exploration probability
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Decay exploration linearly to zero over the run
        #[arg(long)]
        decay: bool,
        /// Final episodes scored for convergence
        #[arg(long, default_value_t = 200)]
        window: usize,
    },
}

#[derive(Args)]
struct EvaluateArgs {
    /// Facts and argument constraints (.lkb)
    #[arg(long)]
    kb: PathBuf,
    /// Horn rules (.lkb)
    #[arg(long)]
    axioms: PathBuf,
    /// Question templates (.lkb)
    #[arg(long)]
    templates: PathBuf,
    /// Inference depth bound
    #[arg(long, default_value_t = 5)]
    depth: usize,
    /// Inference budget: unlimited, steps:N, or seconds:N
    #[arg(long, default_value = "unlimited")]
    budget: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("COORDLEARN_LOG", "error"),
    )
    .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let ok = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate { config, out } => {
            let corpus = GenSpec::from_file(&config)?.build()?;
            emit_corpus(&corpus, &out)?;
            println!(
                "wrote {} facts, {} rules, {} templates to {}",
                corpus.kb.len(),
                corpus.axioms.len(),
                corpus.templates.len(),
                out.display()
            );
            Ok(())
        }
        Command::Run { config, out, seed } => {
            let mut spec = RunSpec::from_file(&config)?;
            if let Some(seed) = seed {
                spec.experiment.seed = seed;
            }
            let corpus = load_corpus(&spec.source)?;
            log::info!(
                "running {} episodes x {} algorithms on {} facts",
                spec.experiment.episodes,
                spec.experiment.algorithms.len(),
                corpus.kb.len()
            );
            let metrics = run_experiment(&corpus, &spec.experiment)?;
            emit_results(&metrics, &spec.resolved_text(), &out)?;
            let base = metrics.for_algorithm(Algorithm::Baseline).map(|m| m.n_answers);
            for m in &metrics.per_algorithm {
                let extra = match (m.algorithm, base) {
                    (Algorithm::Coordination, Some(base)) => match improvement_pct(base, m.n_answers) {
                        Some(pct) => format!("  improvement {pct}%"),
                        None => String::new(),
                    },
                    _ => String::new(),
                };
                println!(
                    "{:<14} queries {:>8}  answers {:>8}  final-policy reward {:>6}{extra}",
                    m.algorithm.to_string(),
                    m.n_queries,
                    m.n_answers,
                    m.final_policy_reward
                );
            }
            println!("results in {}", out.display());
            Ok(())
        }
        Command::Evaluate(args) => evaluate(args),
        Command::Bos { episodes, seeds, game, shared, alpha, epsilon, decay, window } => {
            bos(episodes, seeds, game, shared, alpha, epsilon, decay, window)
        }
    }
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let corpus = load_corpus_files(&args.kb, &args.axioms, &args.templates)?;
    let budget = parse_budget(&args.budget).map_err(|msg| {
        coordlearn_cli::ConfigError::Invalid { path: PathBuf::from("--budget"), msg }
    })?;
    let limits = InferenceLimits { max_depth: args.depth, budget };
    let mut asked = 0u64;
    let mut answered = 0u64;
    for template in &corpus.templates {
        let result = qa::evaluate(
            &corpus.kb,
            &corpus.axioms,
            std::slice::from_ref(template),
            &limits,
        );
        println!(
            "template {:<20} asked {:>6}  answered {:>6}",
            template.name.to_string(),
            result.asked,
            result.answered
        );
        asked += result.asked;
        answered += result.answered;
    }
    println!("total asked {asked}  answered {answered}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bos(
    episodes: usize,
    seeds: u64,
    game_file: Option<PathBuf>,
    shared: bool,
    alpha: f64,
    epsilon: f64,
    decay: bool,
    window: usize,
) -> Result<(), CliError> {
    let mut game = match &game_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { path: path.clone(), source })?;
            MatrixGame::parse(&text).map_err(|e| CliError::Corpus {
                path: path.clone(),
                source: e.into(),
            })?
        }
        None => MatrixGame::battle_of_sexes(),
    };
    if shared {
        game = game.shared_reduction();
    }
    let params = JalParams { alpha, epsilon, epsilon_decay: decay, ..JalParams::default() };
    let mut converged = 0u64;
    for seed in 0..seeds {
        let history = matrix_self_play(&game, &params, episodes, seed);
        let Some((cell, fraction)) = best_equilibrium_fraction(&game, &history, window) else {
            println!("seed {seed:>3}: no episodes");
            continue;
        };
        let names: Vec<String> = cell
            .iter()
            .enumerate()
            .map(|(agent, &action)| format!("{}={}", game.agent_names[agent], game.actions[agent][action]))
            .collect();
        if fraction >= 0.85 {
            converged += 1;
        }
        println!(
            "seed {seed:>3}: best equilibrium {} held {:.1}% of the final {window} episodes",
            names.join(" "),
            100.0 * fraction
        );
    }
    println!(
        "converged on a pure equilibrium for >=85% of the final {window} episodes in {converged}/{seeds} seeds"
    );
    Ok(())
}
