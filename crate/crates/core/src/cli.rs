//! The `ntn-ric` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime
//! error. Every file a subcommand writes goes under `--out`, next to a
//! `run_manifest.json` that records what is needed to reproduce it.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SimConfig;
use crate::dqn;
use crate::error::{HarnessError, NetError, RadioError};
use crate::harness::{self, PolicyKind, RunOptions};
use crate::netmodel::{self, World};
use crate::propagation::{self, Bbox, Terrain};
use crate::ric;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const MANIFEST_FILE: &str = "run_manifest.json";

// Progress goes to stdout; a closed pipe is not an error worth dying for.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "ntn-ric", version, about = "Energy-saving cell on/off control for a hybrid aerial/terrestrial RAN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one policy over consecutive days from day 0 and record the bus
    Simulate(SimulateArgs),
    /// Train the DQN xApp and write a checkpoint and learning curve
    Train(TrainArgs),
    /// Compare policies against always-on over held-out days
    Evaluate(EvaluateArgs),
    /// Write RSRP coverage rasters for every cell
    Coverage(CoverageArgs),
    /// Re-drive a recorded bus stream and check it reproduces exactly
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; defaults apply when omitted
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every random stream
    #[arg(long, value_name = "U64")]
    seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Terrain raster CSV for line-of-sight checks
    #[arg(long, value_name = "PATH")]
    terrain: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Days to simulate
    #[arg(long, value_name = "N", default_value_t = 1)]
    days: u32,
    /// always_on, random, greedy_idle, exhaustive_hourly or dqn
    #[arg(long, value_name = "NAME", default_value = "always_on")]
    policy: String,
    /// DQN checkpoint (for --policy dqn)
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Training episodes (days); overrides the config
    #[arg(long, value_name = "N")]
    episodes: Option<u32>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// Metered days; overrides the config
    #[arg(long, value_name = "N")]
    days: Option<u32>,
    /// Comma-separated policies; always_on is always included
    #[arg(long, value_name = "NAME", default_value = "always_on,random,greedy_idle,exhaustive_hourly")]
    policy: String,
    /// DQN checkpoint; adds dqn to the compared policies
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[command(flatten)]
    common: Common,
    /// Grid spacing in metres
    #[arg(long, value_name = "METERS", default_value_t = 100.0, allow_negative_numbers = true)]
    resolution: f64,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Recorded NDJSON stream; its run_manifest.json must sit beside it
    input: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun an invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    /// Effective configuration, canonical TOML.
    pub config: String,
    pub terrain: Option<FileDigest>,
    pub checkpoint: Option<FileDigest>,
    pub run: Option<RunOptions>,
    pub policies: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Net(n) => n.into(),
            HarnessError::Invalid(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Parse `argv` (without the program name) and run the subcommand.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("ntn-ric".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, &argv),
        Command::Train(a) => train(a, &argv),
        Command::Evaluate(a) => evaluate(a, &argv),
        Command::Coverage(a) => coverage(a, &argv),
        Command::Replay(a) => replay(a, &argv),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("usage error: {m}"),
                CliError::Config(m) => eprintln!("config error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            e.code()
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, CliError> {
    match path {
        None => Ok(SimConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            SimConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn load_terrain(path: Option<&Path>) -> Result<Option<Arc<Terrain>>, CliError> {
    let Some(p) = path else { return Ok(None) };
    let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("--terrain {}: {e}", p.display())))?;
    let t = Terrain::from_csv(&text).map_err(|e| CliError::Config(format!("--terrain {}: {e}", p.display())))?;
    Ok(Some(Arc::new(t)))
}

fn build_world(cfg: &SimConfig, seed: u64, terrain: Option<Arc<Terrain>>) -> Result<World, CliError> {
    let terrain_err = |e: NetError| match e {
        NetError::Radio(RadioError::OutsideTerrain { x, y }) => {
            CliError::Config(format!("--terrain does not cover point ({x}, {y}) of the deployment"))
        }
        other => other.into(),
    };
    World::build(cfg, seed)?.with_terrain(terrain).map_err(terrain_err)
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    fn finish(mut self, mut manifest: RunManifest) -> Result<(), CliError> {
        manifest.outputs = std::mem::take(&mut self.written);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        self.write(MANIFEST_FILE, json.as_bytes())?;
        Ok(())
    }
}

fn manifest(subcommand: &str, argv: &[String], seed: u64, cfg: &SimConfig, terrain: Option<&Path>) -> Result<RunManifest, CliError> {
    Ok(RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        argv: argv.to_vec(),
        seed,
        config_hash: cfg.hash_hex(),
        config: cfg.to_toml(),
        terrain: terrain.map(digest_file).transpose()?,
        checkpoint: None,
        run: None,
        policies: Vec::new(),
        outputs: Vec::new(),
    })
}

fn parse_policy(name: &str, checkpoint: Option<&Path>) -> Result<PolicyKind, CliError> {
    match name.trim() {
        "dqn" => checkpoint
            .map(|p| PolicyKind::Dqn(p.to_path_buf()))
            .ok_or_else(|| CliError::Usage("--policy dqn requires --checkpoint".into())),
        other => other.parse().map_err(|e: String| CliError::Usage(format!("--policy: {e}"))),
    }
}

fn stream_name(policy: &str) -> String {
    format!("bus_{policy}.ndjson")
}

fn simulate(a: SimulateArgs, argv: &[String]) -> Result<(), CliError> {
    let c = &a.common;
    let cfg = load_config(c.config.as_deref())?;
    let kind = parse_policy(&a.policy, a.checkpoint.as_deref())?;
    if a.days == 0 {
        return Err(CliError::Config("--days must be positive".into()));
    }
    let world = build_world(&cfg, c.seed, load_terrain(c.terrain.as_deref())?)?;
    let opts = RunOptions { first_day: 0, days: a.days, warmup_days: 0 };
    let mut policy = harness::build_policy(&kind, &world, c.seed)?;
    let run = harness::run_days(&world, policy.as_mut(), opts)?;

    let mut out = Output::create(&c.out)?;
    let mut metrics = String::from(netmodel::METRICS_CSV_HEADER);
    metrics.push('\n');
    netmodel::metrics_csv_rows(&run.reports, &mut metrics);
    out.write("metrics.csv", metrics.as_bytes())?;
    out.write("episodes.csv", harness::episodes_csv(&run.days).as_bytes())?;
    out.write(&stream_name(kind.label()), ric::encode_stream(&run.envelopes).as_bytes())?;
    let mut m = manifest("simulate", argv, c.seed, &cfg, c.terrain.as_deref())?;
    m.checkpoint = a.checkpoint.as_deref().map(digest_file).transpose()?;
    m.run = Some(opts);
    m.policies = vec![kind.label().to_string()];
    for d in &run.days {
        say!(
            "day {}: {:.1} Wh, {:.1} b/J, {:.3} unserved UEs/hour",
            d.day_index, d.total_energy_wh, d.efficiency_bits_per_j, d.mean_unserved_ues
        );
    }
    out.finish(m)
}

fn train(a: TrainArgs, argv: &[String]) -> Result<(), CliError> {
    let c = &a.common;
    let mut cfg = load_config(c.config.as_deref())?;
    if let Some(n) = a.episodes {
        cfg.dqn.episodes = n;
    }
    let world = build_world(&cfg, c.seed, load_terrain(c.terrain.as_deref())?)?;
    let result = harness::train(&world, &cfg.dqn, c.seed)?;
    let mut out = Output::create(&c.out)?;
    out.write("checkpoint.bin", &dqn::checkpoint_bytes(&result.net))?;
    out.write("learning_curve.csv", harness::learning_curve_csv(&result.curve).as_bytes())?;
    if let Some(last) = result.curve.last() {
        say!(
            "trained {} episodes ({} updates); last episode {:.1} b/J vs always-on {:.1} b/J",
            result.curve.len(),
            result.updates,
            last.mean_efficiency,
            result.baseline_efficiency
        );
    }
    out.finish(manifest("train", argv, c.seed, &cfg, c.terrain.as_deref())?)
}

fn evaluate(a: EvaluateArgs, argv: &[String]) -> Result<(), CliError> {
    let c = &a.common;
    let mut cfg = load_config(c.config.as_deref())?;
    if let Some(d) = a.days {
        if d == 0 {
            return Err(CliError::Config("--days must be positive".into()));
        }
        cfg.evaluation.days = d;
    }
    let mut kinds = Vec::new();
    for name in a.policy.split(',').filter(|s| !s.trim().is_empty()) {
        let k = parse_policy(name, a.checkpoint.as_deref())?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if let Some(p) = &a.checkpoint {
        let k = PolicyKind::Dqn(p.clone());
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    let world = build_world(&cfg, c.seed, load_terrain(c.terrain.as_deref())?)?;
    let e = &cfg.evaluation;
    let opts = RunOptions { first_day: e.first_day, days: e.days, warmup_days: e.warmup_days };
    let cmp = harness::evaluate(&world, &kinds, opts, c.seed)?;

    let mut out = Output::create(&c.out)?;
    out.write("evaluation.csv", cmp.to_csv().as_bytes())?;
    let summary = cmp.summary(opts);
    out.write("summary.txt", summary.as_bytes())?;
    for run in &cmp.runs {
        out.write(&stream_name(&run.policy), ric::encode_stream(&run.envelopes).as_bytes())?;
    }
    say!("{}", summary.trim_end());
    let mut m = manifest("evaluate", argv, c.seed, &cfg, c.terrain.as_deref())?;
    m.checkpoint = a.checkpoint.as_deref().map(digest_file).transpose()?;
    m.run = Some(opts);
    m.policies = cmp.rows.iter().map(|r| r.policy.clone()).collect();
    out.finish(m)
}

fn coverage(a: CoverageArgs, argv: &[String]) -> Result<(), CliError> {
    let c = &a.common;
    if !(a.resolution > 0.0) || !a.resolution.is_finite() {
        return Err(CliError::Config(format!("--resolution must be a positive number of metres, got {}", a.resolution)));
    }
    let cfg = load_config(c.config.as_deref())?;
    let world = build_world(&cfg, c.seed, load_terrain(c.terrain.as_deref())?)?;
    let bbox = Bbox::new(0.0, 0.0, cfg.arena_m, cfg.arena_m);
    let mut out = Output::create(&c.out)?;
    for cell in &world.cells {
        let grid = propagation::coverage_grid(cell, &world.env, bbox, a.resolution, cfg.ues.height_m)
            .map_err(|e| CliError::Runtime(format!("coverage of cell {}: {e}", cell.id)))?;
        let covered = grid.values.iter().filter(|v| v.is_some()).count();
        say!("cell {}: {covered}/{} points above {} dBm", cell.id, grid.values.len(), grid.floor_dbm);
        out.write(&format!("coverage_cell{}.csv", cell.id), grid.to_csv().as_bytes())?;
    }
    out.finish(manifest("coverage", argv, c.seed, &cfg, c.terrain.as_deref())?)
}

fn replay(a: ReplayArgs, argv: &[String]) -> Result<(), CliError> {
    let dir = a.input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::Config(format!("{} (needed to rebuild the run): {e}", manifest_path.display())))?;
    let recorded: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
    let opts = recorded
        .run
        .ok_or_else(|| CliError::Config(format!("{} records no bus run", manifest_path.display())))?;
    let cfg = SimConfig::from_toml(&recorded.config)?;
    if cfg.hash_hex() != recorded.config_hash {
        return Err(CliError::Config("manifest config does not match its recorded hash".into()));
    }
    let terrain = match &recorded.terrain {
        Some(d) => {
            let now = digest_file(Path::new(&d.path))?;
            if now.sha256 != d.sha256 {
                return Err(CliError::Config(format!("terrain {} changed since the run", d.path)));
            }
            load_terrain(Some(Path::new(&d.path)))?
        }
        None => None,
    };
    let world = build_world(&cfg, recorded.seed, terrain)?;
    let envelopes = ric::replay_stream(&a.input).map_err(|e| CliError::Runtime(format!("{}: {e}", a.input.display())))?;
    let run = harness::replay_run(&world, &envelopes, opts)?;

    let mut out = Output::create(&a.out)?;
    out.write("replay_episodes.csv", harness::episodes_csv(&run.days).as_bytes())?;
    say!("replay ok: {} envelopes and {} days of metrics reproduced exactly", envelopes.len(), run.days.len());
    let mut m = manifest("replay", argv, recorded.seed, &cfg, None)?;
    m.terrain = recorded.terrain;
    m.run = Some(opts);
    m.policies = vec![run.policy];
    out.finish(m)
}
