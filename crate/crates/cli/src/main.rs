mod figures;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uavkey::config::{load_file, ConfigError, Scenario, ScenarioFile};
use uavkey::engine::{sweep_with, NetworkKind, SweepSpec};
use uavkey::keying::selftest::toy_suite;
use uavkey::mobility::MobilityModel;
use uavkey::output::{
    emit_results, render_checks, rows_for_sweep, select_metrics, standard_notes, write_text,
    Format, Meta, OutputError, OutputRow,
};
use uavkey::par::ExecMode;

const DEFAULTS_HELP: &str = "\
Scenario files are JSON objects; only `network_kind` (\"FANET\" or \"MANET\") is
required and unknown fields are rejected. Defaults for omitted fields:

  mobility_model      \"GM\" (or \"RWP\")
  n                   100 nodes
  area_length_m       1000 (square box); area_lengths_m [..] makes a sweep
  elevation_m         100 for FANET, 0 for MANET
  v_min_mps/v_max_mps 0/50 FANET, 0/20 MANET
  pause_s             0 (RWP)
  gm_alpha            0.85; gm_mean_speed_mps = (v_min+v_max)/2
  gm_pitch_max_rad    0.05
  propagation         \"FreeSpace\" for FANET, \"TwoRay\" for MANET
  tx_power_dbm 7.5, tx_gain_db 0, rx_gain_db 0, freq_hz 2.4e9,
  rx_threshold_dbm -72.55, ant_height_tx_m/ant_height_rx_m 1.5
  explicit_range_m    unset (set it to bypass the link budget)
  strategy            unset: unlimited storage, key_ttl_s \"inf\"
                      \"freshest_replace\" | \"expired_only_replace\" | \"hybrid\":
                      capacity 10 (hybrid 5/5 via hybrid_k1/hybrid_k2),
                      key_ttl_s 100
  capacity            number or \"unlimited\"; key_ttl_s number or \"inf\"
  stagger_key_expiry  false
  curve               \"simulation\" (or \"toy\"); digest \"fnv1a\" (or \"sha256\")
  duration_s 1000, snapshot_dt_s 1, metrics_stride 1, metrics_from_s 0,
  steady_window_s     100 (path metrics average the final window)
  seeds               [1, 2, ..., 20]

Exit codes: 0 ok, 1 self-test failure, 2 usage, 3 config not found,
4 config syntax, 5 invalid config, 6 simulation error, 7 I/O error.";

#[derive(Parser)]
#[command(name = "uavkey", version, about = "Opportunistic public-key exchange simulator for FANET and MANET", after_help = DEFAULTS_HELP)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Single seed (with --seeds N: the first of N consecutive seeds)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use seeds 1..=N (or SEED.. with --seed), overriding the scenario
    #[arg(long, global = true, value_name = "N")]
    seeds: Option<u64>,
    /// Output file (default stdout); files also get a PATH.meta.json sidecar
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Measure path metrics every K snapshots
    #[arg(long, global = true, value_name = "K")]
    metrics_stride: Option<usize>,
    /// Run everything on the calling thread
    #[arg(long, global = true)]
    sequential: bool,
    /// Worker threads for parallel runs (default: all cores)
    #[arg(long, global = true, env = "UAVKEY_THREADS", value_name = "N")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario over its seeds
    Run { config: PathBuf },
    /// Run a scenario or an area-length sweep
    Sweep { config: PathBuf },
    /// Regenerate the data behind one evaluation figure
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(2..=8))]
        number: u8,
        /// Scenario fields applied on top of every preset
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
    /// Neighbor-count normality diagnostics only
    DensityCheck {
        /// Scenario to check (default: both kinds and both models, full sweep)
        config: Option<PathBuf>,
    },
    /// Exhaustive checks on the toy curve (p = 17)
    EccSelftest {
        /// Sign/verify/tamper rounds
        #[arg(long, default_value_t = 1000)]
        fuzz: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Config(ConfigError),
    Sim(uavkey::Error),
    Output(OutputError),
    SelfTest(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::SelfTest(_) => 1,
            CliError::Config(ConfigError::NotFound { .. }) => 3,
            CliError::Config(ConfigError::Syntax { .. }) => 4,
            CliError::Config(ConfigError::Invalid { .. }) => 5,
            CliError::Config(ConfigError::Io { .. }) => 7,
            CliError::Sim(_) => 6,
            CliError::Output(_) => 7,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Sim(e) => write!(f, "simulation failed: {e}"),
            CliError::Output(e) => write!(f, "{e}"),
            CliError::SelfTest(n) => write!(f, "{n} self-test check(s) failed"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        CliError::Output(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uavkey: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads(cli.common.threads);
    match &cli.command {
        Command::Run { config } => {
            let scenario = load(config, &cli.common)?;
            if let Scenario::Sweep(_) = scenario {
                return Err(ConfigError::Invalid {
                    field: "area_lengths_m".into(),
                    reason: "describes a sweep; use `uavkey sweep`".into(),
                }
                .into());
            }
            let spec = scenario.into_sweep();
            let rows = simulate(&spec, &cli.common)?;
            emit(&rows, &cli.common, &[&spec])
        }
        Command::Sweep { config } => {
            let spec = load(config, &cli.common)?.into_sweep();
            let rows = simulate(&spec, &cli.common)?;
            emit(&rows, &cli.common, &[&spec])
        }
        Command::Figure { number, config } => figure(*number, config.as_deref(), &cli.common),
        Command::DensityCheck { config } => density_check(config.as_deref(), &cli.common),
        Command::EccSelftest { fuzz } => ecc_selftest(*fuzz, &cli.common),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        // Only fails if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: Option<usize>) {}

fn mode(common: &Common) -> ExecMode {
    if common.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

/// Scenario fields implied by the global flags.
fn flag_overrides(common: &Common) -> ScenarioFile {
    let seeds = match (common.seed, common.seeds) {
        (Some(s), Some(n)) => Some((s..s.saturating_add(n)).collect()),
        (Some(s), None) => Some(vec![s]),
        (None, Some(n)) => Some((1..=n).collect()),
        (None, None) => None,
    };
    ScenarioFile {
        seeds,
        metrics_stride: common.metrics_stride,
        ..ScenarioFile::default()
    }
}

fn load(path: &Path, common: &Common) -> Result<Scenario, ConfigError> {
    load_file(path)?.merge(&flag_overrides(common)).resolve()
}

fn simulate(spec: &SweepSpec, common: &Common) -> Result<Vec<OutputRow>, CliError> {
    let result = sweep_with(spec, mode(common)).map_err(CliError::Sim)?;
    Ok(rows_for_sweep(&result))
}

fn format(common: &Common) -> Format {
    match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

fn emit(rows: &[OutputRow], common: &Common, specs: &[&SweepSpec]) -> Result<(), CliError> {
    let fingerprints: Vec<String> = specs.iter().map(|s| s.base.fingerprint()).collect();
    let meta = Meta {
        config_fingerprint: Some(fingerprints.join(",")),
        notes: standard_notes(),
    };
    emit_results(rows, format(common), common.out.as_deref(), &meta)?;
    if let Some(path) = &common.out {
        eprintln!("uavkey: wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(())
}

/// Resolves each preset with the user's file and the flags layered on top.
fn resolve_presets(
    presets: &[ScenarioFile],
    overrides: Option<&Path>,
    common: &Common,
) -> Result<(Vec<SweepSpec>, ScenarioFile), CliError> {
    let user = match overrides {
        Some(p) => load_file(p)?,
        None => ScenarioFile::default(),
    };
    let top = user.merge(&flag_overrides(common));
    let specs = presets
        .iter()
        .map(|p| p.merge(&top).resolve().map(Scenario::into_sweep))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((specs, top))
}

fn figure(number: u8, overrides: Option<&Path>, common: &Common) -> Result<(), CliError> {
    let fig = figures::figure(number).expect("clap restricts the figure number");
    let (mut specs, top) = resolve_presets(&fig.scenarios, overrides, common)?;
    if top.metrics_from_s.is_none() {
        for spec in &mut specs {
            let b = &mut spec.base;
            // Snapshots before the steady window never reach the output.
            b.metrics_from = if fig.path_metrics {
                (b.duration - b.steady_window).max(0.0)
            } else {
                b.duration
            };
        }
    }
    eprintln!("uavkey: figure {number}: {}", fig.title);
    let mut rows = Vec::new();
    for spec in &specs {
        rows.extend(select_metrics(simulate(spec, common)?, fig.metrics));
    }
    emit(&rows, common, &specs.iter().collect::<Vec<_>>())
}

const DENSITY_METRICS: [&str; 4] = [
    "density_mean",
    "density_variance",
    "density_skewness",
    "density_excess_kurtosis",
];

fn density_check(config: Option<&Path>, common: &Common) -> Result<(), CliError> {
    let mut specs = match config {
        Some(p) => vec![load(p, common)?.into_sweep()],
        None => {
            let presets: Vec<ScenarioFile> = [NetworkKind::FANET, NetworkKind::MANET]
                .into_iter()
                .flat_map(|k| {
                    [MobilityModel::RandomWaypoint, MobilityModel::GaussMarkov]
                        .into_iter()
                        .map(move |m| ScenarioFile {
                            network_kind: Some(k),
                            mobility_model: Some(m),
                            area_lengths_m: Some(uavkey::engine::default_area_lengths()),
                            ..ScenarioFile::default()
                        })
                })
                .collect();
            resolve_presets(&presets, None, common)?.0
        }
    };
    for spec in &mut specs {
        spec.base.metrics_from = spec.base.duration;
    }
    let mut rows = Vec::new();
    for spec in &specs {
        rows.extend(select_metrics(simulate(spec, common)?, &DENSITY_METRICS));
    }
    emit(&rows, common, &specs.iter().collect::<Vec<_>>())
}

fn ecc_selftest(fuzz: usize, common: &Common) -> Result<(), CliError> {
    let checks = toy_suite(fuzz, common.seed.unwrap_or(0));
    write_text(&render_checks(&checks, format(common)), common.out.as_deref())?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::SelfTest(failed));
    }
    Ok(())
}
