use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wfaudit::exploitability::EventScoreTable;
use wfaudit::forge::{ForgeConfig, ForgeMode};
use wfaudit::graph::DEFAULT_MAX_DEPTH;
use wfaudit::report::render_human;
use wfaudit::scan::{default_parallelism, scan, Input, ScanConfig};

const EXIT_ERROR: u8 = 3;

/// Security analyzer for GitHub Actions workflows across a project's
/// dependency repositories.
#[derive(Parser)]
#[command(name = "wfaudit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a project, a repository list or a directory of workflows.
    Scan(Box<ScanArgs>),
    /// Print the effective event exploitability table.
    ScoreTable {
        /// YAML overrides: `event: 1|2|3` or `event/activity: 1|2|3`.
        #[arg(long)]
        score_table: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Project,
    Repos,
    Workflows,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct ScanArgs {
    /// Project directory, repository list file, or workflow directory.
    #[arg(long, required_unless_present = "repos")]
    input: Option<PathBuf>,
    /// How to read `--input`.
    #[arg(long, value_enum, default_value = "project")]
    mode: Mode,
    /// Repository list file; shorthand for `--mode repos --input <file>`.
    #[arg(long, conflicts_with_all = ["input", "mode"])]
    repos: Option<PathBuf>,
    /// Dependency levels to follow from the project.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    /// Report destination; `-` for stdout. Defaults to `report.json` for
    /// JSON and stdout for text.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// YAML overrides for event exploitability scores.
    #[arg(long)]
    score_table: Option<PathBuf>,
    /// YAML overrides for which context paths an attacker controls.
    #[arg(long)]
    controllability_table: Option<PathBuf>,
    /// Replay recorded forge responses from this directory; no network.
    #[arg(long, conflicts_with = "record")]
    fixtures: Option<PathBuf>,
    /// Query the forge live and record every response into this directory.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Leave `scan_timestamp` null so identical inputs give identical bytes.
    #[arg(long)]
    no_timestamp: bool,
    /// Worker threads; defaults to the processor count capped by
    /// `--max-in-flight`.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Concurrent forge requests.
    #[arg(long, default_value_t = 8)]
    max_in_flight: usize,
    /// Forge API base URL.
    #[arg(long, default_value = wfaudit::forge::GITHUB_API)]
    api_base_url: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::ScoreTable { score_table } => {
            match EventScoreTable::load_with_overrides(score_table.as_deref()) {
                Ok(table) => {
                    print!("{}", table.render());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e.to_string()),
            }
        }
        Command::Scan(args) => run_scan(*args),
    }
}

fn fail(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_ERROR)
}

fn run_scan(args: ScanArgs) -> ExitCode {
    if args.max_in_flight == 0 {
        return fail("--max-in-flight must be at least 1");
    }
    let input = match (&args.repos, &args.input) {
        (Some(list), _) => Input::RepoList(list.clone()),
        (None, Some(path)) => match args.mode {
            Mode::Project => Input::ProjectDir(path.clone()),
            Mode::Repos => Input::RepoList(path.clone()),
            Mode::Workflows => Input::WorkflowDir(path.clone()),
        },
        (None, None) => return fail("--input is required"),
    };
    let mode = match (&args.fixtures, &args.record) {
        (Some(dir), _) => ForgeMode::Recorded(dir.clone()),
        (None, Some(_)) => ForgeMode::RecordWhileLive,
        (None, None) => ForgeMode::Live,
    };
    let forge = ForgeConfig {
        api_base_url: args.api_base_url.clone(),
        auth_token: None,
        cache_dir: args.record.clone(),
        mode,
        max_in_flight: args.max_in_flight,
    }
    .with_env_token();
    let config = ScanConfig {
        input,
        forge,
        max_depth: args.max_depth,
        score_table_path: args.score_table.clone(),
        controllability_table_path: args.controllability_table.clone(),
        parallelism: args
            .parallelism
            .unwrap_or_else(|| default_parallelism(args.max_in_flight)),
        timestamp: !args.no_timestamp,
    };

    let output = match scan(&config, None) {
        Ok(o) => o,
        Err(e) => return fail(&e.to_string()),
    };
    let report = &output.report;
    let body = match args.format {
        Format::Json => report.to_json(),
        Format::Text => render_human(report),
    };
    let target = args.output.clone().or_else(|| match args.format {
        Format::Json => Some(PathBuf::from("report.json")),
        Format::Text => None,
    });
    match target.filter(|p| p.as_os_str() != "-") {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &body) {
                return fail(&format!("cannot write {}: {e}", path.display()));
            }
            if args.format == Format::Json {
                eprint!("{}", render_human(report));
                eprintln!("report written to {}", path.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            if out
                .write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return fail("cannot write report to stdout");
            }
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
