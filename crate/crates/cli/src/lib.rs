//! Command-line driver for distribution design, matrix construction, counting and auditing of
//! QC-SC LDPC codes, plus the file formats it reads and writes.
//!
//! Every command maps failures onto fixed exit codes: 2 for invalid arguments, 3 when the
//! distributor hits its iteration cap, 4 for unreadable input files and 5 for failed invariants.

pub mod format;
pub mod report;

use std::io::Write as _;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scgrade_core::ao::{
    self, best_of, restart_seeds, AoConfig, AoResult, CpoConfig, CycleSearch, LiftTargets,
    ObjectSearch, SearchObjective,
};
use scgrade_core::grade::{
    self, coupling_patterns, evaluate_pattern, select_pattern, CycleObjective, GradeConfig,
    GradeResult, ObjectGraph, ObjectKind, ObjectMode, PatternObjective,
};
use scgrade_core::model::{
    distribution_from_matrix, full_pattern, CodeParams, EdgeDistribution, PartitioningMatrix,
};
use scgrade_core::topology::{count_active_candidates, count_cycles_tanner, count_objects};
use thiserror::Error;

use format::{format_distribution, parse_distribution, MatrixFile, ParseError};
use report::{
    ConstructReport, CountReport, Counts, GradeReport, LiftReport, OracleReport, VerifyReport,
    Violation,
};

/// Default seed of every randomized command.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Validation(String),
    #[error("distributor did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{} invariant(s) failed", .0.len())]
    Invariant(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Parse { .. } | CliError::Read { .. } => 4,
            CliError::Invariant(_) => 5,
            CliError::Write { .. } => 1,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "scgrade", version, about = "Design and analysis of QC-SC LDPC codes")]
pub struct Cli {
    /// Worker threads for restarts and pattern searches; results do not depend on it.
    #[arg(long, global = true, env = "SC_GRADE_THREADS")]
    pub threads: Option<NonZeroUsize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the edge distribution by gradient descent.
    Grade(GradeArgs),
    /// Build partitioning and lifting matrices.
    Construct(ConstructArgs),
    /// Count cycles and concatenated-cycle objects of given matrices.
    Count(CountArgs),
    /// Audit a partitioning matrix and report its edge distribution.
    Verify(VerifyArgs),
    /// Exhaustive partitioning search for tiny instances.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    #[arg(long)]
    pub gamma: usize,
    #[arg(long)]
    pub kappa: usize,
    /// Memory m; the pattern defaults to (0, 1, ..., m).
    #[arg(long, conflicts_with = "pattern")]
    pub memory: Option<usize>,
    /// Coupling pattern, comma separated, e.g. 0,1,4,6.
    #[arg(long)]
    pub pattern: Option<String>,
}

impl ShapeArgs {
    fn pattern(&self) -> Result<Vec<u32>, CliError> {
        match (&self.pattern, self.memory) {
            (Some(s), _) => parse_list(s, "pattern"),
            (None, Some(m)) => Ok(full_pattern(m)),
            (None, None) => Err(invalid("one of --memory or --pattern is required")),
        }
    }

    fn params(&self, circulant: usize, replicas: usize) -> Result<CodeParams, CliError> {
        CodeParams::new(self.gamma, self.kappa, self.pattern()?, circulant, replicas).map_err(invalid)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| invalid(format!("bad {what} element `{x}`"))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradeObjective {
    /// Cycle-6 candidates only.
    Cycles6,
    /// Weighted cycle-6 and cycle-8 candidates.
    Cycles,
    /// Concatenated-cycle objects.
    Objects,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Typical,
    Full,
}

impl From<Mode> for ObjectMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Typical => ObjectMode::Typical,
            Mode::Full => ObjectMode::Full,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GradeOptions {
    #[arg(long, value_enum, default_value = "cycles")]
    pub objective: GradeObjective,
    /// Weight of a cycle-6 relative to a cycle-8.
    #[arg(long, default_value_t = grade::DEFAULT_CYCLE6_WEIGHT)]
    pub weight: f64,
    /// Objects targeted by `--objective objects`, comma separated (212, 213, 222, 313).
    #[arg(long, default_value = "313")]
    pub objects: String,
    #[arg(long, value_enum, default_value = "typical")]
    pub mode: Mode,
    #[arg(long, default_value_t = GradeConfig::default().step)]
    pub step: f64,
    #[arg(long, default_value_t = GradeConfig::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = GradeConfig::default().max_iters)]
    pub max_iters: usize,
    /// Iterations without improvement before stopping; 0 disables the rule.
    #[arg(long, default_value_t = 2000)]
    pub patience: usize,
    /// Take every fixed-size step even when it raises the objective.
    #[arg(long)]
    pub fixed_step: bool,
}

impl GradeOptions {
    fn config(&self) -> GradeConfig {
        GradeConfig {
            step: self.step,
            tol: self.tol,
            max_iters: self.max_iters,
            patience: (self.patience > 0).then_some(self.patience),
            backtrack: !self.fixed_step,
            ..GradeConfig::default()
        }
    }

    fn objects(&self) -> Result<Vec<(ObjectGraph, f64)>, CliError> {
        parse_list::<String>(&self.objects, "object")?
            .iter()
            .map(|name| {
                let kind = match name.as_str() {
                    "212" => ObjectKind::T212,
                    "213" => ObjectKind::T213,
                    "222" => ObjectKind::T222,
                    "313" => ObjectKind::T313,
                    other => return Err(invalid(format!("unknown object `{other}`"))),
                };
                Ok((kind.graph(), 1.0))
            })
            .collect()
    }

    fn pattern_objective(&self, gamma: usize, kappa: usize) -> Result<PatternObjective, CliError> {
        Ok(match self.objective {
            GradeObjective::Cycles6 => PatternObjective::Cycles {
                gamma,
                kappa,
                objective: CycleObjective::Cycle6Only,
            },
            GradeObjective::Cycles => PatternObjective::Cycles {
                gamma,
                kappa,
                objective: CycleObjective::Weighted { w: self.weight },
            },
            GradeObjective::Objects => PatternObjective::Objects {
                gamma,
                kappa,
                objects: self.objects()?,
                mode: self.mode.into(),
            },
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct GradeArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Search every coupling pattern with this pseudo-memory (requires --memory).
    #[arg(long, requires = "memory")]
    pub pseudo_memory: Option<usize>,
    #[command(flatten)]
    pub options: GradeOptions,
    /// Distribution output file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary file; printed to stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistSource {
    Grade,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AoObjective {
    Cycles,
    Objects,
}

#[derive(Debug, Clone, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Circulant size z.
    #[arg(long)]
    pub circulant: usize,
    /// Replica count L.
    #[arg(long)]
    pub replicas: usize,
    #[arg(long, value_enum, default_value = "grade")]
    pub dist: DistSource,
    /// Read the distribution from a file instead.
    #[arg(long)]
    pub dist_file: Option<PathBuf>,
    #[command(flatten)]
    pub grade: GradeOptions,
    /// Partitioning objective.
    #[arg(long = "ao", value_enum, default_value = "cycles")]
    pub ao_objective: AoObjective,
    /// Object weights w212,w213,w222,w313; default scales each object by its all-equal count.
    #[arg(long)]
    pub weights: Option<String>,
    /// Total deviation budget, or `inf`.
    #[arg(long)]
    pub d1: Option<String>,
    /// Per-value deviation budget, or `inf`.
    #[arg(long)]
    pub d2: Option<String>,
    #[arg(long, default_value_t = ao::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long)]
    pub best_improvement: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Skip the lifting optimizer.
    #[arg(long)]
    pub no_lift: bool,
    #[arg(long)]
    pub out_p: Option<PathBuf>,
    #[arg(long)]
    pub out_l: Option<PathBuf>,
    /// JSON statistics file; printed to stdout when absent.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    /// Partitioning matrix file; its header supplies γ, κ, m, z and L.
    #[arg(long)]
    pub p: PathBuf,
    /// Lifting matrix file; lifted counts are skipped when absent.
    #[arg(long)]
    pub l: Option<PathBuf>,
    /// Skip the concatenated-cycle counts.
    #[arg(long)]
    pub no_objects: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub p: PathBuf,
    /// Allowed values; defaults to 0..=m from the header.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Reference distribution file for distance reporting.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleObjective {
    Cycles,
    Objects,
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, value_enum, default_value = "cycles")]
    pub objective: OracleObjective,
    #[arg(long, default_value_t = grade::DEFAULT_CYCLE6_WEIGHT)]
    pub weight: f64,
    #[arg(long, default_value = "1,1,1,1")]
    pub weights: String,
    /// Matrix output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.map_or_else(default_threads, NonZeroUsize::get);
    match cli.command {
        Command::Grade(a) => cmd_grade(&a, threads),
        Command::Construct(a) => cmd_construct(&a, threads),
        Command::Count(a) => cmd_count(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

fn default_threads() -> usize {
    thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Applies `f` to every item on up to `threads` workers, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    let chunk = items.len().div_ceil(threads).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn read_matrix(path: &Path) -> Result<MatrixFile, CliError> {
    MatrixFile::parse(&read_file(path)?).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn read_distribution(path: &Path) -> Result<Vec<f64>, CliError> {
    parse_distribution(&read_file(path)?).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                // A closed reader (for example `| head`) is not an error for a report.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
                result => result.map_err(|source| CliError::Write {
                    path: "stdout".into(),
                    source,
                }),
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Every searched pattern with the objective GRADE reached on it.
pub type Ranking = Vec<(Vec<u32>, f64)>;

/// Pattern search over every pattern of the given pseudo-memory, spread over worker threads.
pub fn search_patterns(
    memory: usize,
    pseudo_memory: usize,
    objective: &PatternObjective,
    config: &GradeConfig,
    threads: usize,
) -> Result<(Vec<u32>, GradeResult, Ranking), CliError> {
    let patterns = coupling_patterns(memory, pseudo_memory).map_err(invalid)?;
    let results = parallel_map(&patterns, threads, |a| evaluate_pattern(a, objective, config));
    let results = results.into_iter().collect::<Result<Vec<_>, _>>().map_err(invalid)?;
    let values: Vec<f64> = results.iter().map(|r| r.objective_final).collect();
    let best = select_pattern(&values).expect("at least one pattern");
    let ranking = patterns.iter().cloned().zip(values).collect();
    Ok((patterns[best].clone(), results[best].clone(), ranking))
}

fn run_grade(
    params: &CodeParams,
    options: &GradeOptions,
) -> Result<GradeResult, CliError> {
    let config = options.config();
    let objective = options.pattern_objective(params.gamma, params.kappa)?;
    evaluate_pattern(&params.pattern, &objective, &config).map_err(invalid)
}

pub fn cmd_grade(a: &GradeArgs, threads: usize) -> Result<(), CliError> {
    let (pattern, result, ranking) = match a.pseudo_memory {
        Some(mt) => {
            let memory = a.shape.memory.expect("clap enforces --memory");
            let objective = a.options.pattern_objective(a.shape.gamma, a.shape.kappa)?;
            CodeParams::new(a.shape.gamma, a.shape.kappa, full_pattern(memory), 1, 1).map_err(invalid)?;
            let (p, r, rank) = search_patterns(memory, mt, &objective, &a.options.config(), threads)?;
            (p, r, Some(rank))
        }
        None => {
            let params = a.shape.params(1, 1)?;
            let r = run_grade(&params, &a.options)?;
            (params.pattern, r, None)
        }
    };
    emit(a.out.as_deref(), &format_distribution(result.distribution.probs()))?;
    let report = GradeReport::new(&pattern, &result, ranking);
    emit(a.summary.as_deref(), &to_json(&report))?;
    if result.converged() {
        Ok(())
    } else {
        Err(CliError::NoConvergence(result.iters))
    }
}

fn parse_budget(s: Option<&str>, default: Option<usize>) -> Result<Option<usize>, CliError> {
    match s {
        None => Ok(default),
        Some("inf") => Ok(None),
        Some(x) => x.parse().map(Some).map_err(|_| invalid(format!("bad budget `{x}`"))),
    }
}

pub fn cmd_construct(a: &ConstructArgs, threads: usize) -> Result<(), CliError> {
    let params = a.shape.params(a.circulant, a.replicas)?;
    if a.restarts == 0 {
        return Err(invalid("--restarts must be at least 1"));
    }
    eprintln!("seed: {}", a.seed);
    let mut converged = true;
    let dist = match (&a.dist_file, a.dist) {
        (Some(path), _) => EdgeDistribution::new(read_distribution(path)?).map_err(invalid)?,
        (None, DistSource::Uniform) => EdgeDistribution::uniform(params.pattern.len()),
        (None, DistSource::Grade) => {
            let r = run_grade(&params, &a.grade)?;
            converged = r.converged();
            r.distribution
        }
    };
    if dist.len() != params.pattern.len() {
        return Err(invalid(format!(
            "distribution has {} entries, pattern has {}",
            dist.len(),
            params.pattern.len()
        )));
    }
    let defaults = AoConfig::for_params(&params);
    let config = AoConfig {
        d1: parse_budget(a.d1.as_deref(), defaults.d1)?,
        d2: parse_budget(a.d2.as_deref(), defaults.d2)?,
        restarts: a.restarts,
        best_improvement: a.best_improvement,
    };
    let seeds = restart_seeds(a.seed, a.restarts);
    let (result, targets) = match a.ao_objective {
        AoObjective::Cycles => {
            let search = CycleSearch::new(&params, a.grade.weight);
            let runs = parallel_map(&seeds, threads, |&s| search.run(&dist, &config, s));
            let runs: Vec<AoResult> = runs.into_iter().collect::<Result<_, _>>().map_err(invalid)?;
            (
                best_of(runs).expect("restarts >= 1"),
                LiftTargets::Cycles {
                    w6: a.grade.weight,
                    w8: 1.0,
                },
            )
        }
        AoObjective::Objects => {
            let w = match &a.weights {
                Some(s) => {
                    let v: Vec<f64> = parse_list(s, "weight")?;
                    <[f64; 4]>::try_from(v).map_err(|_| invalid("--weights needs four values"))?
                }
                None => ao::default_object_weights(&params),
            };
            let search = ObjectSearch::new(&params, w);
            let runs = parallel_map(&seeds, threads, |&s| search.run(&dist, &config, s));
            let runs: Vec<AoResult> = runs.into_iter().collect::<Result<_, _>>().map_err(invalid)?;
            (best_of(runs).expect("restarts >= 1"), LiftTargets::Objects(w))
        }
    };
    let p = &result.matrix;
    let lift = (!a.no_lift).then(|| ao::cpo_lift(p, &params, targets, &CpoConfig::default(), a.seed));
    if let Some(path) = &a.out_p {
        write_file(path, &MatrixFile::from_partitioning(p, &params).serialize())?;
    }
    if let (Some(path), Some(l)) = (&a.out_l, &lift) {
        write_file(path, &MatrixFile::from_lifting(&l.lifting, &params).serialize())?;
    }
    let protograph = protograph_counts(p, &params, a.ao_objective == AoObjective::Objects)?;
    let lifted = match &lift {
        Some(l) => Some(lifted_counts(p, &l.lifting, &params, false)?),
        None => None,
    };
    let report = ConstructReport {
        seed: a.seed,
        restart_seed: result.seed,
        pattern: params.pattern.clone(),
        distribution: dist.probs().to_vec(),
        initial_counts: result.initial_counts.clone(),
        deviation: result.deviation.clone(),
        objective: result.objective,
        trace: result.trace.clone(),
        protograph,
        lifted,
        lift: lift.as_ref().map(LiftReport::from),
    };
    emit(a.stats.as_deref(), &to_json(&report))?;
    if converged {
        Ok(())
    } else {
        Err(CliError::NoConvergence(a.grade.max_iters))
    }
}

fn topology_err(e: impl std::fmt::Display) -> CliError {
    invalid(e)
}

/// Active protograph candidates and, optionally, protograph object counts.
pub fn protograph_counts(p: &PartitioningMatrix, params: &CodeParams, objects: bool) -> Result<Counts, CliError> {
    let mut c = Counts {
        cycles4: count_active_candidates(p, 4).map_err(topology_err)?,
        cycles6: count_active_candidates(p, 6).map_err(topology_err)?,
        cycles8: count_active_candidates(p, 8).map_err(topology_err)?,
        ..Counts::default()
    };
    if objects {
        c.set_objects(count_objects(p, params, None).map_err(topology_err)?);
    }
    Ok(c)
}

/// Lifted Tanner-graph cycle counts and, optionally, lifted object counts.
pub fn lifted_counts(
    p: &PartitioningMatrix,
    l: &scgrade_core::model::LiftingMatrix,
    params: &CodeParams,
    objects: bool,
) -> Result<Counts, CliError> {
    let mut c = Counts {
        cycles4: count_cycles_tanner(p, l, params, 4).map_err(topology_err)?,
        cycles6: count_cycles_tanner(p, l, params, 6).map_err(topology_err)?,
        cycles8: count_cycles_tanner(p, l, params, 8).map_err(topology_err)?,
        ..Counts::default()
    };
    if objects {
        c.set_objects(count_objects(p, params, Some((l, params.replicas))).map_err(topology_err)?);
    }
    Ok(c)
}

/// Parameters implied by a matrix file header (full-memory pattern).
pub fn header_params(m: &MatrixFile) -> Result<CodeParams, CliError> {
    CodeParams::full_memory(m.gamma, m.kappa, m.memory, m.circulant, m.replicas).map_err(invalid)
}

pub fn cmd_count(a: &CountArgs) -> Result<(), CliError> {
    let pf = read_matrix(&a.p)?;
    let params = header_params(&pf)?;
    let p = pf.partitioning();
    if let Some(bad) = p.entries().iter().find(|&&v| v as usize > params.memory) {
        return Err(invalid(format!("entry {bad} exceeds memory {}", params.memory)));
    }
    let lifted = match &a.l {
        Some(path) => {
            let lf = read_matrix(path)?;
            if (lf.gamma, lf.kappa, lf.circulant) != (pf.gamma, pf.kappa, pf.circulant) {
                return Err(invalid("lifting matrix header does not match the partitioning matrix"));
            }
            Some(lifted_counts(&p, &lf.lifting(), &params, !a.no_objects)?)
        }
        None => None,
    };
    let report = CountReport {
        gamma: params.gamma,
        kappa: params.kappa,
        memory: params.memory,
        circulant: params.circulant,
        replicas: params.replicas,
        protograph: protograph_counts(&p, &params, !a.no_objects)?,
        lifted,
    };
    emit(None, &to_json(&report))?;
    Ok(())
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let pf = read_matrix(&a.p)?;
    let pattern = match &a.pattern {
        Some(s) => parse_list(s, "pattern")?,
        None => full_pattern(pf.memory),
    };
    let params = CodeParams::new(pf.gamma, pf.kappa, pattern, pf.circulant.max(1), pf.replicas.max(1))
        .map_err(invalid)?;
    let p = pf.partitioning();
    let violations: Vec<Violation> = p
        .invalid_entries(&params)
        .into_iter()
        .map(|(row, col, value)| Violation { row, col, value })
        .collect();
    let mut report = VerifyReport {
        ok: violations.is_empty(),
        pattern: params.pattern.clone(),
        violations,
        distribution: None,
        l1: None,
        linf: None,
    };
    if report.ok {
        let empirical = distribution_from_matrix(&p, &params).map_err(invalid)?;
        if let Some(path) = &a.reference {
            let reference = EdgeDistribution::new_allow_zero(read_distribution(path)?).map_err(invalid)?;
            if reference.len() != empirical.len() {
                return Err(invalid("reference distribution length does not match the pattern"));
            }
            let (l1, linf) = empirical.distances(&reference);
            report.l1 = Some(l1);
            report.linf = Some(linf);
        }
        report.distribution = Some(empirical.into_vec());
    }
    emit(None, &to_json(&report))?;
    if report.ok {
        Ok(())
    } else {
        Err(CliError::Invariant(
            report
                .violations
                .iter()
                .map(|v| format!("entry {} at ({}, {}) is not in the pattern", v.value, v.row, v.col))
                .collect(),
        ))
    }
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<(), CliError> {
    let params = a.shape.params(1, 1)?;
    let objective = match a.objective {
        OracleObjective::Cycles => SearchObjective::Cycles {
            cycle6_weight: a.weight,
        },
        OracleObjective::Objects => {
            let v: Vec<f64> = parse_list(&a.weights, "weight")?;
            SearchObjective::Objects(<[f64; 4]>::try_from(v).map_err(|_| invalid("--weights needs four values"))?)
        }
        s => SearchObjective::Cycle8Structure(s as u8 - OracleObjective::S1 as u8 + 1),
    };
    let (m, value) = ao::exhaustive_partition_search(&params, objective).map_err(invalid)?;
    let file = MatrixFile::from_partitioning(&m, &params);
    if let Some(path) = &a.out {
        write_file(path, &file.serialize())?;
    }
    let report = OracleReport {
        objective: value,
        rows: file.rows,
    };
    emit(None, &to_json(&report))?;
    Ok(())
}
