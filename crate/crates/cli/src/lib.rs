//! The `purify` command: iteration ladders, asymptotic rate sweeps,
//! finite-pool bound sweeps and the validation self-check.

pub mod config;
pub mod grid;
pub mod output;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use purify_core::bell::ChannelFamily;
use purify_core::dejmps::{build_ladder_with, LadderOptions};
use purify_core::finite::{BoundMode, DEFAULT_STATE_CAP};
use purify_core::sweep::{
    asymptotic_sweep, finite_sweep, FiniteMethod, FiniteSettings, RowStatus, SweepInput,
};
use purify_core::validation::{run_validation, ValidationConfig};

use config::ConfigFile;
use output::{
    AsymptoticDocument, AsymptoticMetadata, Document, FiniteDocument, FiniteMetadata, LadderDocument,
    LadderMetadata, LadderRow, SourceInfo,
};

const DEFAULT_F_TARGET: f64 = 0.9;
const DEFAULT_EPSILON: f64 = 1e-7;
const DEFAULT_SWEEP_KMAX: usize = 30;
const DEFAULT_LADDER_KMAX: usize = 10;
const DEFAULT_N_GRID: &str = "2^3..2^12";
const DEFAULT_F_GRID: (f64, f64, usize) = (0.55, 0.9, 8);

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    ValidationFailed(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::ValidationFailed(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::ValidationFailed(m) | CliError::Other(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<purify_core::Error> for CliError {
    fn from(e: purify_core::Error) -> Self {
        use purify_core::Error as E;
        match e {
            E::PurificationImpossible(_) => CliError::Infeasible(e.to_string()),
            E::InvalidParameter(_) | E::InvalidArgument(_) | E::OutOfRange { .. } | E::Domain(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Other(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(r: Result<T, String>) -> CliResult<T> {
    r.map_err(CliError::Usage)
}

#[derive(Debug, Parser)]
#[command(name = "purify", version, about = "DEJMPS iteration ladders, interpolated purification rates and finite-pool bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of k, F_k, t_k, s_k, R_k, mu_k and sigma2_k for one initial state.
    Ladder(LadderArgs),
    /// Interpolated, uninterpolated and REE-bound rates over a grid of initial states.
    AsymptoticSweep(SweepArgs),
    /// Finite-pool lower and upper bounds per output pair over initial states and pool sizes.
    FiniteSweep(FiniteArgs),
    /// Cross-check the exact methods against each other and against Monte Carlo.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Depolarising,
    Dephasing,
    Pauli,
    AmplitudeDamping,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Global,
    PerPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Markov,
    Iterative,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat TOML file of `flag-name = value` lines; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Initial states. Grids are comma lists (fractions allowed) or start:stop:count.
#[derive(Debug, Args)]
pub struct Source {
    /// Channel applied to one half of a perfect Bell pair; without it states are Werner.
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// Grid of channel strengths for depolarising, dephasing and pauli.
    #[arg(long)]
    pub p: Option<String>,
    /// Grid of damping strengths for amplitude-damping.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Grid of Werner fidelities.
    #[arg(long)]
    pub werner_f: Option<String>,
    /// Grid of initial fidelities, mapped to channel strengths when a channel is given
    /// [default: 0.55:0.9:8].
    #[arg(long)]
    pub f_initial: Option<String>,
    /// Pauli flip weights w_z,w_x,w_y given a flip [default: 1/2,1/3,1/6].
    #[arg(long)]
    pub pauli_weights: Option<String>,
}

#[derive(Debug, Args)]
pub struct LadderArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    /// Deepest level computed [default: 10].
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    /// Target fidelity [default: 0.9].
    #[arg(long)]
    pub f_target: Option<f64>,
    /// Deepest ladder level considered [default: 30].
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FiniteArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Allowed infidelity of the output [default: 1e-7].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Whether epsilon bounds the whole output or each pair [default: global].
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Exact method for the joint law [default: iterative].
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Pool sizes: comma list of integers or 2^k terms, or a range 2^a..2^b
    /// [default: 2^3..2^12, a range picked to show the approach to the asymptotic rates].
    #[arg(long)]
    pub n_grid: Option<String>,
    /// Largest Markov chain allowed; bigger rows get status state-cap-exceeded [default: 10000000].
    #[arg(long)]
    pub state_cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Flat TOML file of `flag-name = value` lines; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Monte Carlo seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per check; tolerance bands scale with the standard error [default: 1000000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Largest Markov chain allowed [default: 10000000].
    #[arg(long)]
    pub state_cap: Option<u64>,
    /// Corrupt t_1 on the exact side so that the checks must fail.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

const SOURCE_KEYS: [&str; 6] = ["channel", "p", "gamma", "werner-f", "f-initial", "pauli-weights"];
const COMMON_KEYS: [&str; 3] = ["out", "format", "workers"];

fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> CliResult<ConfigFile> {
    match path {
        Some(p) => usage(ConfigFile::load(p, allowed)),
        None => Ok(ConfigFile::default()),
    }
}

fn parse_value<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse `{s}`"))
}

fn parse_enum<T: ValueEnum>(s: &str) -> Result<T, String> {
    T::from_str(s.trim(), true)
}

/// Output, format and worker settings after merging the config file.
struct Sink {
    out: Option<PathBuf>,
    format: Format,
    workers: Option<usize>,
}

fn resolve_sink(common: &Common, cfg: &ConfigFile) -> CliResult<Sink> {
    let out = usage(cfg.pick(common.out.clone(), "out", |s| Ok(PathBuf::from(s))))?;
    let format = usage(cfg.pick(common.format, "format", parse_enum))?.unwrap_or(Format::Csv);
    let workers = usage(cfg.pick(common.workers, "workers", parse_value))?;
    Ok(Sink { out, format, workers })
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Other(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Initial states of a run together with a description of their origin.
struct Inputs {
    info: SourceInfo,
    points: Vec<SweepInput>,
}

fn family_of(channel: ChannelArg, weights: Option<[f64; 3]>) -> ChannelFamily {
    match channel {
        ChannelArg::Depolarising => ChannelFamily::Depolarising,
        ChannelArg::Dephasing => ChannelFamily::Dephasing,
        ChannelArg::AmplitudeDamping => ChannelFamily::AmplitudeDamping,
        ChannelArg::Pauli => match weights {
            Some([wz, wx, wy]) => ChannelFamily::Pauli { wz, wx, wy },
            None => ChannelFamily::default_pauli(),
        },
    }
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let w: Vec<f64> = s.split(',').map(grid::parse_number).collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(w).map_err(|_| format!("`{s}` must hold three weights w_z,w_x,w_y"))
}

fn resolve_inputs(src: &Source, cfg: &ConfigFile, default_grid: bool) -> CliResult<Inputs> {
    let channel = usage(cfg.pick(src.channel, "channel", parse_enum))?;
    let weights = usage(cfg.pick(src.pauli_weights.clone(), "pauli-weights", |s| Ok(s.to_string())))?
        .map(|s| usage(parse_weights(&s)))
        .transpose()?;
    let mut grids = Vec::new();
    for (key, cli) in [
        ("p", &src.p),
        ("gamma", &src.gamma),
        ("werner-f", &src.werner_f),
        ("f-initial", &src.f_initial),
    ] {
        if let Some(text) = usage(cfg.pick(cli.clone(), key, |s| Ok(s.to_string())))? {
            let values = usage(grid::parse_float_grid(&text).map_err(|e| format!("--{key}: {e}")))?;
            grids.push((key, values));
        }
    }
    if grids.len() > 1 {
        let names: Vec<String> = grids.iter().map(|(k, _)| format!("--{k}")).collect();
        return Err(CliError::Usage(format!("give only one of {}", names.join(", "))));
    }
    if weights.is_some() && channel != Some(ChannelArg::Pauli) {
        return Err(CliError::Usage("--pauli-weights needs --channel pauli".into()));
    }
    let (key, values) = match grids.pop() {
        Some(g) => g,
        None if default_grid => {
            let (a, b, n) = DEFAULT_F_GRID;
            ("f-initial", grid::linspace(a, b, n))
        }
        None => {
            return Err(CliError::Usage(
                "no initial state: give --werner-f, --f-initial, or --channel with --p/--gamma".into(),
            ))
        }
    };

    let family = channel.map(|c| family_of(c, weights));
    let info = SourceInfo {
        source: family.map_or("werner", |f| f.name()).to_string(),
        pauli_weights: match family {
            Some(ChannelFamily::Pauli { wz, wx, wy }) => Some([wz, wx, wy]),
            _ => None,
        },
    };
    let points = match (key, family) {
        ("werner-f", Some(_)) => return Err(CliError::Usage("--werner-f cannot be combined with --channel".into())),
        ("werner-f", None) | ("f-initial", None) => values
            .iter()
            .map(|&f| SweepInput::werner(f))
            .collect::<Result<_, _>>()?,
        ("f-initial", Some(fam)) => values
            .iter()
            .map(|&f| {
                let param = fam.parameter_for_fidelity(f)?;
                SweepInput::from_channel(&fam.at(param)?)
            })
            .collect::<Result<_, _>>()?,
        (key, None) => return Err(CliError::Usage(format!("--{key} needs --channel"))),
        (key, Some(fam)) => {
            let wants_gamma = matches!(fam, ChannelFamily::AmplitudeDamping);
            if (key == "gamma") != wants_gamma {
                let right = if wants_gamma { "--gamma" } else { "--p" };
                return Err(CliError::Usage(format!("the {} channel takes {right}", fam.name())));
            }
            values
                .iter()
                .map(|&x| SweepInput::from_channel(&fam.at(x)?))
                .collect::<Result<_, _>>()?
        }
    };
    Ok(Inputs { info, points })
}

fn all_infeasible(statuses: impl IntoIterator<Item = RowStatus>) -> bool {
    statuses
        .into_iter()
        .all(|s| matches!(s, RowStatus::Unreachable | RowStatus::NoPurification))
}

fn render<M: serde::Serialize, R: output::CsvRow + serde::Serialize>(
    format: Format,
    doc: &Document<M, R>,
) -> CliResult<String> {
    match format {
        Format::Csv => output::to_csv(&doc.rows),
        Format::Json => output::to_json(doc),
    }
    .map_err(CliError::Other)
}

fn run_ladder(args: &LadderArgs) -> CliResult<()> {
    let cfg = load_config(&args.common.config, &keys(&[&COMMON_KEYS, &SOURCE_KEYS, &["kmax"]]))?;
    let sink = resolve_sink(&args.common, &cfg)?;
    let k_max = usage(cfg.pick(args.kmax, "kmax", parse_value))?.unwrap_or(DEFAULT_LADDER_KMAX);
    let inputs = resolve_inputs(&args.source, &cfg, false)?;
    let [input] = inputs.points[..] else {
        return Err(CliError::Usage("ladder takes a single initial state".into()));
    };
    let ladder = build_ladder_with(&input.state, k_max, LadderOptions::permuted())?;
    let doc: LadderDocument = Document {
        schema: output::LADDER_SCHEMA.into(),
        metadata: LadderMetadata {
            source: inputs.info,
            param: input.param,
            k_max,
            truncated_at: ladder.truncated_at,
        },
        rows: ladder.retained().iter().map(LadderRow::from).collect(),
    };
    emit(&sink.out, &render(sink.format, &doc)?)
}

struct SweepParams {
    sink: Sink,
    inputs: Inputs,
    f_target: f64,
    k_max: usize,
}

fn resolve_sweep(args: &SweepArgs, cfg: &ConfigFile) -> CliResult<SweepParams> {
    Ok(SweepParams {
        sink: resolve_sink(&args.common, cfg)?,
        inputs: resolve_inputs(&args.source, cfg, true)?,
        f_target: usage(cfg.pick(args.f_target, "f-target", parse_value))?.unwrap_or(DEFAULT_F_TARGET),
        k_max: usage(cfg.pick(args.kmax, "kmax", parse_value))?.unwrap_or(DEFAULT_SWEEP_KMAX),
    })
}

const SWEEP_KEYS: [&str; 2] = ["f-target", "kmax"];

fn run_asymptotic(args: &SweepArgs) -> CliResult<()> {
    let cfg = load_config(&args.common.config, &keys(&[&COMMON_KEYS, &SOURCE_KEYS, &SWEEP_KEYS]))?;
    let p = resolve_sweep(args, &cfg)?;
    let rows = with_workers(p.sink.workers, || asymptotic_sweep(&p.inputs.points, p.f_target, p.k_max))??;
    let infeasible = all_infeasible(rows.iter().map(|r| r.status));
    let doc: AsymptoticDocument = Document {
        schema: output::ASYMPTOTIC_SCHEMA.into(),
        metadata: AsymptoticMetadata {
            source: p.inputs.info,
            f_target: p.f_target,
            k_max: p.k_max,
        },
        rows,
    };
    emit(&p.sink.out, &render(p.sink.format, &doc)?)?;
    if infeasible {
        return Err(CliError::Infeasible(format!(
            "target fidelity {} is unreachable at every grid point",
            p.f_target
        )));
    }
    Ok(())
}

fn run_finite(args: &FiniteArgs) -> CliResult<()> {
    let allowed = keys(&[
        &COMMON_KEYS,
        &SOURCE_KEYS,
        &SWEEP_KEYS,
        &["epsilon", "mode", "method", "n-grid", "state-cap"],
    ]);
    let cfg = load_config(&args.sweep.common.config, &allowed)?;
    let p = resolve_sweep(&args.sweep, &cfg)?;
    let n_text = usage(cfg.pick(args.n_grid.clone(), "n-grid", |s| Ok(s.to_string())))?;
    let n_grid = usage(grid::parse_pool_grid(n_text.as_deref().unwrap_or(DEFAULT_N_GRID)))?;
    let mode = match usage(cfg.pick(args.mode, "mode", parse_enum))? {
        Some(ModeArg::PerPair) => BoundMode::PerPair,
        _ => BoundMode::Global,
    };
    let method = match usage(cfg.pick(args.method, "method", parse_enum))? {
        Some(MethodArg::Markov) => FiniteMethod::Markov,
        _ => FiniteMethod::Iterative,
    };
    let settings = FiniteSettings {
        f_target: p.f_target,
        k_max: p.k_max,
        epsilon: usage(cfg.pick(args.epsilon, "epsilon", parse_value))?.unwrap_or(DEFAULT_EPSILON),
        mode,
        method,
        state_cap: usage(cfg.pick(args.state_cap, "state-cap", parse_value))?.unwrap_or(DEFAULT_STATE_CAP),
    };
    if !(settings.epsilon > 0.0 && settings.epsilon < 1.0) {
        return Err(CliError::Usage(format!("--epsilon {} outside (0, 1)", settings.epsilon)));
    }
    let rows = with_workers(p.sink.workers, || finite_sweep(&p.inputs.points, &n_grid, &settings))??;
    let infeasible = all_infeasible(rows.iter().map(|r| r.status));
    let doc: FiniteDocument = Document {
        schema: output::FINITE_SCHEMA.into(),
        metadata: FiniteMetadata {
            source: p.inputs.info,
            settings,
            n_grid,
        },
        rows,
    };
    emit(&p.sink.out, &render(p.sink.format, &doc)?)?;
    if infeasible {
        return Err(CliError::Infeasible(format!(
            "target fidelity {} is unreachable at every grid point",
            settings.f_target
        )));
    }
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> CliResult<()> {
    let cfg = load_config(&args.config, &["out", "workers", "seed", "trials", "state-cap"])?;
    let out = usage(cfg.pick(args.out.clone(), "out", |s| Ok(PathBuf::from(s))))?;
    let workers = usage(cfg.pick(args.workers, "workers", parse_value))?;
    let defaults = ValidationConfig::default();
    let vc = ValidationConfig {
        seed: usage(cfg.pick(args.seed, "seed", parse_value))?.unwrap_or(defaults.seed),
        trials: usage(cfg.pick(args.trials, "trials", parse_value))?.unwrap_or(defaults.trials),
        state_cap: usage(cfg.pick(args.state_cap, "state-cap", parse_value))?.unwrap_or(defaults.state_cap),
        inject_fault: args.inject_fault,
    };
    if vc.trials < 2 {
        return Err(CliError::Usage("--trials must be at least 2".into()));
    }
    let report = with_workers(workers, || run_validation(&vc))??;
    emit(&out, &output::to_json(&report).map_err(CliError::Other)?)?;
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(CliError::ValidationFailed(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Ladder(a) => run_ladder(a),
        Command::AsymptoticSweep(a) => run_asymptotic(a),
        Command::FiniteSweep(a) => run_finite(a),
        Command::Validate(a) => run_validate(a),
    }
}
