use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use xrta::harness::{run, run_with_env, PolicyKind, RunConfig, Task, DEFAULT_BUDGET};
use xrta::remote::{connect_environment, Server, DEFAULT_PORT, PORT_ENV};
use xrta::sim::{bundled_level, Level, SimEnvironment};

/// Agent-based testing of grid-world systems.
#[derive(Parser)]
#[command(name = "xrta", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a built-in testing task and report verdicts.
    Run(RunArgs),
    /// Serve a level over the line-delimited JSON protocol.
    Serve(ServeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Level file, or the name of a bundled level.
    #[arg(long)]
    level: String,
    /// ef-reach:<room>, ef-entity:<id>, ag-door-wiring or explore-all.
    #[arg(long)]
    task: String,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// random or greedy.
    #[arg(long, default_value = "random")]
    policy: PolicyKind,
    /// host:port of a running `xrta serve`; the simulator runs in-process otherwise.
    #[arg(long)]
    remote: Option<String>,
    /// Cycle trace, one JSON object per line.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Verdict report, one JSON object per line.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Exit 0 even if some assertion is UNDECIDED.
    #[arg(long)]
    allow_undecided: bool,
}

#[derive(Args)]
struct ServeArgs {
    /// Level file, or the name of a bundled level.
    #[arg(long)]
    level: String,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
    port: u16,
}

const USAGE_ERROR: u8 = 2;

fn load_level(arg: &str) -> Result<Level, String> {
    match Level::load(arg) {
        Ok(level) => Ok(level),
        Err(e) => bundled_level(arg).ok_or_else(|| format!("{arg}: {e}")),
    }
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(()),
    }
}

fn run_usage() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    cmd.find_subcommand_mut("run")
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default()
}

fn run_command(args: RunArgs) -> Result<ExitCode, String> {
    let task: Task = args
        .task
        .parse()
        .map_err(|e| format!("{e}\n\n{}", run_usage()))?;
    let config = RunConfig::new(load_level(&args.level)?, task)
        .with_budget(args.budget)
        .with_seed(args.seed)
        .with_policy(args.policy);
    let outcome = match &args.remote {
        Some(addr) => {
            let env = connect_environment(addr).map_err(|e| e.to_string())?;
            run_with_env(&config, Box::new(env))
        }
        None => run(&config),
    }
    .map_err(|e| e.to_string())?;
    write_output(&args.trace, &outcome.trace_text())?;
    write_output(&args.report, &outcome.report_text())?;
    for v in outcome.verdicts.entries() {
        println!("{:?} {} @{} {}", v.kind, v.assertion_name, v.tick, v.detail);
    }
    if let Some(note) = &outcome.env_error {
        eprintln!("environment failure: {note}");
    }
    println!(
        "status {} after {} cycles: {} pass, {} fail, {} undecided",
        outcome.status,
        outcome.ticks,
        outcome.verdicts.pass_count(),
        outcome.verdicts.fail_count(),
        outcome.verdicts.undecided_count()
    );
    Ok(ExitCode::from(outcome.exit_code(args.allow_undecided) as u8))
}

fn serve_command(args: ServeArgs) -> Result<ExitCode, String> {
    let level = load_level(&args.level)?;
    let addr = format!("{}:{}", args.host, args.port);
    let server = Server::bind(addr.as_str(), move || {
        Box::new(SimEnvironment::new(level.clone()))
    })
    .map_err(|e| e.to_string())?;
    eprintln!(
        "serving on {}",
        server.local_addr().map_err(|e| e.to_string())?
    );
    server.serve().map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run(args) => run_command(args),
        Cmd::Serve(args) => serve_command(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(USAGE_ERROR)
    })
}
