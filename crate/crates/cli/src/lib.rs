//! Configuration parsing, corpus loading, and result emission for the
//! `coordlearn` binary. Lives in a library so integration tests can drive
//! the exact code paths the binary uses.
//!
//! Config files are flat `key = value` text; `#` starts a comment and blank
//! lines are skipped. Keys may repeat where noted (generator configs).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use coordlearn_core::learners::SelectionRule;
use coordlearn_core::reasoner::Budget;
use coordlearn_core::simulator::{
    improvement_pct, Algorithm, EpisodeMode, ExperimentConfig, MembershipScope, Metrics, SimError,
};
use coordlearn_core::synthgen::{
    self, BlockSpec, ChainSpec, GenConfig, GenError, PredicateSpec, RegionSpec,
};
use coordlearn_core::{kbformat, Corpus, CorpusError, Statement, Symbol};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: expected `key = value`")]
    NotKeyValue { path: PathBuf, line: usize },
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey { path: PathBuf, line: usize, key: String },
    #[error("{path}:{line}: bad value for `{key}`: {msg}")]
    BadValue { path: PathBuf, line: usize, key: String, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error(transparent)]
    Simulate(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

/// Splits config text into ordered `(line, key, value)` triples.
pub fn parse_kv(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::NotKeyValue { path: path.to_path_buf(), line });
        };
        entries.push((line, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Where a run gets its corpus from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusSource {
    Files { kb: PathBuf, axioms: PathBuf, templates: PathBuf },
    Generator(PathBuf),
}

/// A fully resolved run configuration: corpus source plus experiment knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub source: CorpusSource,
    pub experiment: ExperimentConfig,
}

pub fn parse_budget(text: &str) -> Result<Budget, String> {
    if text == "unlimited" {
        return Ok(Budget::UNLIMITED);
    }
    if let Some(n) = text.strip_prefix("steps:") {
        let steps: u64 = n.parse().map_err(|_| format!("bad step count `{n}`"))?;
        return Ok(Budget::Steps(steps));
    }
    if let Some(n) = text.strip_prefix("seconds:") {
        let secs: u64 = n.parse().map_err(|_| format!("bad second count `{n}`"))?;
        return Ok(Budget::WallClock(Duration::from_secs(secs)));
    }
    Err(format!("expected `unlimited`, `steps:N`, or `seconds:N`, got `{text}`"))
}

pub fn budget_text(budget: &Budget) -> String {
    match budget {
        Budget::Steps(u64::MAX) => "unlimited".to_string(),
        Budget::Steps(n) => format!("steps:{n}"),
        Budget::WallClock(d) => format!("seconds:{}", d.as_secs()),
    }
}

fn absolute(base: &Path, value: &str) -> PathBuf {
    let joined = base.join(value);
    std::path::absolute(&joined).unwrap_or(joined)
}

impl RunSpec {
    /// Parses a run config. Relative paths resolve against the config file's
    /// directory; the scenario label defaults to the config file's stem.
    pub fn from_file(path: &Path) -> Result<RunSpec, ConfigError> {
        let text = read(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = ExperimentConfig {
            scenario: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".to_string()),
            ..ExperimentConfig::default()
        };

        let mut kb = None;
        let mut axioms = None;
        let mut templates = None;
        let mut gen = None;

        let bad = |line: usize, key: &str, msg: String| ConfigError::BadValue {
            path: path.to_path_buf(),
            line,
            key: key.to_string(),
            msg,
        };

        for (line, key, value) in parse_kv(path, &text)? {
            match key.as_str() {
                "scenario" => cfg.scenario = value,
                "kb" => kb = Some(absolute(&dir, &value)),
                "axioms" => axioms = Some(absolute(&dir, &value)),
                "templates" => templates = Some(absolute(&dir, &value)),
                "gen" => gen = Some(absolute(&dir, &value)),
                "algorithms" => {
                    let mut algorithms = Vec::new();
                    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        algorithms.push(part.parse::<Algorithm>().map_err(|e| bad(line, &key, e))?);
                    }
                    if algorithms.is_empty() {
                        return Err(bad(line, &key, "at least one algorithm".to_string()));
                    }
                    cfg.algorithms = algorithms;
                }
                "episodes" => {
                    cfg.episodes = value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a count")))?
                }
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a seed")))?
                }
                "alpha" => {
                    let v: f64 = value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a number")))?;
                    if !(v > 0.0 && v <= 1.0) {
                        return Err(bad(line, &key, "alpha must lie in (0, 1]".to_string()));
                    }
                    cfg.params.alpha = v;
                }
                "gamma" => {
                    let v: f64 = value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a number")))?;
                    if !(0.0..1.0).contains(&v) {
                        return Err(bad(line, &key, "gamma must lie in [0, 1)".to_string()));
                    }
                    cfg.params.gamma = v;
                }
                "epsilon" => {
                    let v: f64 = value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a number")))?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(bad(line, &key, "epsilon must lie in [0, 1]".to_string()));
                    }
                    cfg.params.epsilon = v;
                }
                "epsilon_decay" => {
                    cfg.params.epsilon_decay = match value.as_str() {
                        "true" => true,
                        "false" => false,
                        other => return Err(bad(line, &key, format!("`{other}` is not true/false"))),
                    }
                }
                "selection_rule" => {
                    cfg.params.rule = match value.as_str() {
                        "opponent-model" => SelectionRule::OpponentModel,
                        "own-action-count" => SelectionRule::OwnActionCount,
                        other => {
                            return Err(bad(
                                line,
                                &key,
                                format!("`{other}` is not opponent-model/own-action-count"),
                            ))
                        }
                    }
                }
                "threshold" => {
                    cfg.specificity_threshold =
                        value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a count")))?
                }
                "depth" => {
                    cfg.limits.max_depth =
                        value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a depth")))?
                }
                "budget" => cfg.limits.budget = parse_budget(&value).map_err(|e| bad(line, &key, e))?,
                "mode" => {
                    cfg.mode = match value.as_str() {
                        "episodic" => EpisodeMode::EpisodicReset,
                        "cumulative" => EpisodeMode::Cumulative,
                        other => return Err(bad(line, &key, format!("`{other}` is not episodic/cumulative"))),
                    }
                }
                "sample_size" => {
                    cfg.sample_size =
                        value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a count")))?
                }
                "membership" => {
                    cfg.membership = match value.as_str() {
                        "union" => MembershipScope::Union,
                        "working-only" => MembershipScope::WorkingOnly,
                        other => return Err(bad(line, &key, format!("`{other}` is not union/working-only"))),
                    }
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        path: path.to_path_buf(),
                        line,
                        key,
                    })
                }
            }
        }

        let invalid = |msg: &str| ConfigError::Invalid { path: path.to_path_buf(), msg: msg.to_string() };
        let source = match (kb, axioms, templates, gen) {
            (Some(kb), Some(axioms), Some(templates), None) => {
                CorpusSource::Files { kb, axioms, templates }
            }
            (None, None, None, Some(gen)) => CorpusSource::Generator(gen),
            (None, None, None, None) => {
                return Err(invalid("a corpus is required: set kb/axioms/templates or gen"))
            }
            (_, _, _, Some(_)) => {
                return Err(invalid("gen excludes kb/axioms/templates; choose one source"))
            }
            _ => return Err(invalid("kb, axioms, and templates must be set together")),
        };
        Ok(RunSpec { source, experiment: cfg })
    }

    /// The effective configuration as loadable config text: absolute paths,
    /// every knob explicit, fixed key order.
    pub fn resolved_text(&self) -> String {
        let mut out = String::from("# effective configuration; run --config on this file reproduces the run\n");
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let cfg = &self.experiment;
        kv("scenario", cfg.scenario.clone());
        match &self.source {
            CorpusSource::Files { kb, axioms, templates } => {
                kv("kb", kb.display().to_string());
                kv("axioms", axioms.display().to_string());
                kv("templates", templates.display().to_string());
            }
            CorpusSource::Generator(path) => kv("gen", path.display().to_string()),
        }
        let algorithms: Vec<String> = cfg.algorithms.iter().map(|a| a.to_string()).collect();
        kv("algorithms", algorithms.join(","));
        kv("episodes", cfg.episodes.to_string());
        kv("seed", cfg.seed.to_string());
        kv("alpha", cfg.params.alpha.to_string());
        kv("gamma", cfg.params.gamma.to_string());
        kv("epsilon", cfg.params.epsilon.to_string());
        kv("epsilon_decay", cfg.params.epsilon_decay.to_string());
        kv(
            "selection_rule",
            match cfg.params.rule {
                SelectionRule::OpponentModel => "opponent-model".to_string(),
                SelectionRule::OwnActionCount => "own-action-count".to_string(),
            },
        );
        kv("threshold", cfg.specificity_threshold.to_string());
        kv("depth", cfg.limits.max_depth.to_string());
        kv("budget", budget_text(&cfg.limits.budget));
        kv(
            "mode",
            match cfg.mode {
                EpisodeMode::EpisodicReset => "episodic".to_string(),
                EpisodeMode::Cumulative => "cumulative".to_string(),
            },
        );
        kv("sample_size", cfg.sample_size.to_string());
        kv(
            "membership",
            match cfg.membership {
                MembershipScope::Union => "union".to_string(),
                MembershipScope::WorkingOnly => "working-only".to_string(),
            },
        );
        out
    }
}

/// A parsed generator config: either a named built-in fixture or a full
/// generator configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum GenSpec {
    Fixture(FixtureKind),
    Config(GenConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    Birthplace,
    GradedBirthplace,
}

impl GenSpec {
    pub fn from_file(path: &Path) -> Result<GenSpec, ConfigError> {
        let text = read(path)?;
        let entries = parse_kv(path, &text)?;
        let bad = |line: usize, key: &str, msg: String| ConfigError::BadValue {
            path: path.to_path_buf(),
            line,
            key: key.to_string(),
            msg,
        };

        let mut fixture = None;
        let mut cfg = GenConfig {
            seed: 0,
            branching: 1,
            depth: 0,
            entities_per_leaf: 1,
            domains: Vec::new(),
            predicates: Vec::new(),
            blocks: Vec::new(),
            regions: Vec::new(),
            chains: Vec::new(),
            target_density: None,
        };
        let mut saw_gen_key = false;

        for (line, key, value) in entries {
            let fields: Vec<&str> = value.split_whitespace().collect();
            match key.as_str() {
                "fixture" => {
                    fixture = Some(match value.as_str() {
                        "birthplace" => FixtureKind::Birthplace,
                        "birthplace-graded" => FixtureKind::GradedBirthplace,
                        other => {
                            return Err(bad(
                                line,
                                &key,
                                format!("`{other}` is not birthplace/birthplace-graded"),
                            ))
                        }
                    })
                }
                "seed" => {
                    saw_gen_key = true;
                    cfg.seed = value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a seed")))?;
                }
                "branching" => {
                    saw_gen_key = true;
                    cfg.branching =
                        value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a count")))?;
                }
                "depth" => {
                    saw_gen_key = true;
                    cfg.depth = value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a depth")))?;
                }
                "entities_per_leaf" => {
                    saw_gen_key = true;
                    cfg.entities_per_leaf =
                        value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a count")))?;
                }
                "domain" => {
                    saw_gen_key = true;
                    if fields.len() != 1 {
                        return Err(bad(line, &key, "expected one collection name".to_string()));
                    }
                    cfg.domains.push(Symbol::new(fields[0]));
                }
                "predicate" => {
                    saw_gen_key = true;
                    let [name, d1, d2] = fields.as_slice() else {
                        return Err(bad(line, &key, "expected `name domain1 domain2`".to_string()));
                    };
                    cfg.predicates.push(PredicateSpec {
                        name: Symbol::new(*name),
                        domain1: Symbol::new(*d1),
                        domain2: Symbol::new(*d2),
                    });
                }
                "block" => {
                    saw_gen_key = true;
                    let [pred, c1, c2, count] = fields.as_slice() else {
                        return Err(bad(line, &key, "expected `predicate c1 c2 count`".to_string()));
                    };
                    let count = count.parse().map_err(|_| bad(line, &key, format!("`{count}` is not a count")))?;
                    cfg.blocks.push(BlockSpec {
                        predicate: Symbol::new(*pred),
                        c1: Symbol::new(*c1),
                        c2: Symbol::new(*c2),
                        count,
                    });
                }
                "region" => {
                    saw_gen_key = true;
                    let [pred, c1, c2, density] = fields.as_slice() else {
                        return Err(bad(line, &key, "expected `predicate c1 c2 density`".to_string()));
                    };
                    let density =
                        density.parse().map_err(|_| bad(line, &key, format!("`{density}` is not a number")))?;
                    cfg.regions.push(RegionSpec {
                        predicate: Symbol::new(*pred),
                        c1: Symbol::new(*c1),
                        c2: Symbol::new(*c2),
                        density,
                    });
                }
                "chain" => {
                    saw_gen_key = true;
                    if fields.len() < 4 {
                        return Err(bad(
                            line,
                            &key,
                            "expected `template consequent param-collection link...`".to_string(),
                        ));
                    }
                    cfg.chains.push(ChainSpec {
                        template_name: Symbol::new(fields[0]),
                        consequent: Symbol::new(fields[1]),
                        param_collection: Symbol::new(fields[2]),
                        links: fields[3..].iter().map(Symbol::new).collect(),
                    });
                }
                "target_density" => {
                    saw_gen_key = true;
                    cfg.target_density = Some(
                        value.parse().map_err(|_| bad(line, &key, format!("`{value}` is not a number")))?,
                    );
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        path: path.to_path_buf(),
                        line,
                        key,
                    })
                }
            }
        }

        match (fixture, saw_gen_key) {
            (Some(_), true) => Err(ConfigError::Invalid {
                path: path.to_path_buf(),
                msg: "fixture excludes generator keys; choose one".to_string(),
            }),
            (Some(kind), false) => Ok(GenSpec::Fixture(kind)),
            (None, true) => Ok(GenSpec::Config(cfg)),
            (None, false) => Err(ConfigError::Invalid {
                path: path.to_path_buf(),
                msg: "empty generator config".to_string(),
            }),
        }
    }

    pub fn build(&self) -> Result<Corpus, GenError> {
        match self {
            GenSpec::Fixture(FixtureKind::Birthplace) => Ok(synthgen::birthplace_fixture()),
            GenSpec::Fixture(FixtureKind::GradedBirthplace) => Ok(synthgen::graded_birthplace_fixture()),
            GenSpec::Config(cfg) => synthgen::generate(cfg),
        }
    }
}

/// Reads and combines kb/axioms/templates files, attributing errors to the
/// file (and line) they came from.
pub fn load_corpus_files(kb: &Path, axioms: &Path, templates: &Path) -> Result<Corpus, CliError> {
    let mut corpus = Corpus::default();
    for path in [kb, axioms, templates] {
        let text = read(path)?;
        let statements = kbformat::parse_kb(&text).map_err(|e| CliError::Corpus {
            path: path.to_path_buf(),
            source: CorpusError::Parse(e),
        })?;
        for stmt in statements {
            let line = stmt.line;
            match stmt.statement {
                Statement::Fact(f) => {
                    corpus.kb.assert_fact(f).map_err(|e| CliError::Corpus {
                        path: path.to_path_buf(),
                        source: CorpusError::Store { line, source: e },
                    })?;
                }
                Statement::Constraint(c) => corpus.kb.add_constraint(c),
                Statement::Rule(r) => corpus.axioms.push(r),
                Statement::Template(t) => corpus.templates.push(t),
            }
        }
    }
    Ok(corpus)
}

pub fn load_corpus(source: &CorpusSource) -> Result<Corpus, CliError> {
    match source {
        CorpusSource::Files { kb, axioms, templates } => load_corpus_files(kb, axioms, templates),
        CorpusSource::Generator(path) => Ok(GenSpec::from_file(path)?.build()?),
    }
}

/// Writes a corpus as `kb.lkb`, `axioms.lkb`, and `templates.lkb` under `dir`.
pub fn emit_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CliError> {
    let write = |name: &str, text: String| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    };
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    write("kb.lkb", kbformat::serialize(&corpus.kb.to_statements()))?;
    let axioms: Vec<Statement> = corpus.axioms.iter().cloned().map(Statement::Rule).collect();
    write("axioms.lkb", kbformat::serialize(&axioms))?;
    let templates: Vec<Statement> = corpus.templates.iter().cloned().map(Statement::Template).collect();
    write("templates.lkb", kbformat::serialize(&templates))?;
    Ok(())
}

/// The `summary.csv` body for a metrics bundle: one row per algorithm in run
/// order, improvement only on the coordination row and only when a baseline
/// row exists with a nonzero answer count.
pub fn summary_csv(metrics: &Metrics) -> String {
    let mut out = String::from("scenario,algorithm,n_queries,n_answers,improvement_pct\n");
    let base = metrics.for_algorithm(Algorithm::Baseline).map(|m| m.n_answers);
    for m in &metrics.per_algorithm {
        let improvement = match (m.algorithm, base) {
            (Algorithm::Coordination, Some(base)) => {
                improvement_pct(base, m.n_answers).map(|p| p.to_string()).unwrap_or_default()
            }
            _ => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            metrics.scenario, m.algorithm, m.n_queries, m.n_answers, improvement
        ));
    }
    out
}

/// Writes `episodes.jsonl`, `summary.csv`, and `config.resolved` under `dir`.
pub fn emit_results(metrics: &Metrics, resolved: &str, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let write = |name: &str, text: String| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    };

    let mut jsonl = String::new();
    for m in &metrics.per_algorithm {
        for episode in &m.episodes {
            jsonl.push_str(&serde_json::to_string(episode).expect("episode logs serialize"));
            jsonl.push('\n');
        }
    }
    write("episodes.jsonl", jsonl)?;
    write("summary.csv", summary_csv(metrics))?;
    write("config.resolved", resolved.to_string())?;
    Ok(())
}
