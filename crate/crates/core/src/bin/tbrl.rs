use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tbrl::agent::RunMode;
use tbrl::harness::{
    build_client, emit_report, fixtures, run_curriculum, shuffle_ablation, ClientConfig, CurriculumConfig,
    HarnessError, ReportFormat, RunReport,
};
use tbrl::llm::{Cassette, CassetteWriter, HttpBackend, LlmClient};
use tbrl::pddl::{parse_domain, parse_problem, plan, validate, ValidateOptions, DEFAULT_MAX_NODES};

#[derive(Parser)]
#[command(
    name = "tbrl",
    version,
    about = "Bi-level theory-based agent over learned PDDL abstractions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a curriculum.
    Run(RunArgs),
    /// Solve a single level.
    Solve(SolveArgs),
    /// Plan with a PDDL domain and problem.
    Plan(PlanArgs),
    /// Run a curriculum against a live backend and write a cassette.
    Record(RecordArgs),
    /// Run a curriculum from a cassette.
    Replay(ReplayArgs),
    /// Re-render a saved JSON report.
    Report(ReportArgs),
}

#[derive(Args)]
struct Output {
    /// Report format: table or json.
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// Include wall time and service latency columns.
    #[arg(long)]
    timing: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the mode in the config: full, no-curriculum or flat.
    #[arg(long)]
    mode: Option<RunMode>,
    /// Replay this cassette instead of the configured client.
    #[arg(long)]
    cassette: Option<PathBuf>,
    /// Overrides the exploration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the node budget of both searches.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Shuffle the episode order with this seed.
    #[arg(long)]
    shuffle: Option<u64>,
    /// Answer prompts with the built-in scripted responder.
    #[arg(long, conflicts_with = "cassette")]
    fixture: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    level: PathBuf,
    /// Level seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "full")]
    mode: RunMode,
    #[arg(long)]
    cassette: Option<PathBuf>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Answer prompts with the built-in scripted responder.
    #[arg(long, conflicts_with = "cassette")]
    fixture: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
}

#[derive(Args)]
struct RecordArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    mode: Option<RunMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cassette to write.
    #[arg(long)]
    cassette: PathBuf,
    /// Record the scripted responder instead of the live service.
    #[arg(long)]
    fixture: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    cassette: Option<PathBuf>,
    #[arg(long)]
    mode: Option<RunMode>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ReportArgs {
    /// A report written with `--format json`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("TBRL_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, HarnessError> {
    match command {
        Command::Run(a) => {
            let mut config = CurriculumConfig::load(&a.config)?;
            override_common(&mut config, a.mode, a.seed, a.max_nodes);
            if let Some(seed) = a.shuffle {
                config = shuffle_ablation(&config, seed)?;
            }
            let mut client = client_for(&config, a.cassette.as_deref(), a.fixture)?;
            finish(run_curriculum(&config, &mut client)?, &a.output)
        }
        Command::Solve(a) => {
            let mut config = CurriculumConfig::single(&a.level, a.seed, a.mode);
            override_common(&mut config, None, None, a.max_nodes);
            if a.cassette.is_none() && !a.fixture {
                config.client = Some(ClientConfig::Live { record: None });
            }
            let mut client = client_for(&config, a.cassette.as_deref(), a.fixture)?;
            finish(run_curriculum(&config, &mut client)?, &a.output)
        }
        Command::Plan(a) => plan_files(&a),
        Command::Record(a) => {
            let mut config = CurriculumConfig::load(&a.config)?;
            override_common(&mut config, a.mode, a.seed, None);
            let backend: Box<dyn tbrl::llm::ChatBackend> = if a.fixture {
                Box::new(fixtures::fixture_backend())
            } else {
                Box::new(HttpBackend::from_env().map_err(|e| HarnessError::Config(e.to_string()))?)
            };
            let mut client =
                LlmClient::live(backend, config.llm.clone()).recording(CassetteWriter::create(&a.cassette)?);
            finish(run_curriculum(&config, &mut client)?, &a.output)
        }
        Command::Replay(a) => {
            let mut config = CurriculumConfig::load(&a.config)?;
            override_common(&mut config, a.mode, a.seed, None);
            if a.cassette.is_none() && config.cassette_path().is_none() {
                return Err(HarnessError::Config(
                    "replay needs --cassette or a replay client in the config".into(),
                ));
            }
            let mut client = client_for(&config, a.cassette.as_deref(), false)?;
            finish(run_curriculum(&config, &mut client)?, &a.output)
        }
        Command::Report(a) => {
            let text = std::fs::read_to_string(&a.input).map_err(|e| HarnessError::Io(e.to_string()))?;
            let report: RunReport =
                serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", a.input.display())))?;
            finish(report, &a.output)
        }
    }
}

fn override_common(config: &mut CurriculumConfig, mode: Option<RunMode>, seed: Option<u64>, max_nodes: Option<usize>) {
    if let Some(m) = mode {
        config.mode = m;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(n) = max_nodes {
        config.budgets.bfs_nodes = n;
        config.budgets.plan_nodes = n;
    }
}

fn client_for(config: &CurriculumConfig, cassette: Option<&Path>, fixture: bool) -> Result<LlmClient, HarnessError> {
    if fixture {
        return Ok(LlmClient::live(
            Box::new(fixtures::fixture_backend()),
            config.llm.clone(),
        ));
    }
    match cassette {
        Some(path) => Ok(LlmClient::replay(Cassette::load(path)?, config.llm.clone())),
        None => build_client(config),
    }
}

fn finish(report: RunReport, output: &Output) -> Result<u8, HarnessError> {
    let text = emit_report(&report, output.format, output.timing);
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.exit_code() as u8)
}

fn plan_files(a: &PlanArgs) -> Result<u8, HarnessError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())));
    let domain = parse_domain(&read(&a.domain)?).map_err(|e| HarnessError::Config(format!("domain: {e}")))?;
    let problem = parse_problem(&read(&a.problem)?).map_err(|e| HarnessError::Config(format!("problem: {e}")))?;
    let report = validate(&domain, &problem, &ValidateOptions::default());
    for issue in &report.issues {
        eprintln!("{issue}");
    }
    if !report.is_valid() {
        return Ok(1);
    }
    match plan(&domain, &problem, a.max_nodes) {
        Ok(p) => {
            for step in &p.steps {
                println!("{step}");
            }
            Ok(0)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(2)
        }
    }
}
