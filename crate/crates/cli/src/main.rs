use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use bpmn_soundness::checker::DEFAULT_MAX_STATES;
use bpmn_soundness::genbench::{run_benchmark, write_csv, BenchCase, BenchParams};
use bpmn_soundness::quickfix::Edit;
use bpmn_soundness::{parse_bpmn, serialize_bpmn};
use bpmn_soundness_cli::service::{self, ServiceConfig, DEFAULT_PORT, PORT_ENV};
use bpmn_soundness_cli::{
    apply_to_xml, check_xml, parse_properties, ApplyError, CheckOptions, FixSelector, PipelineError,
};
use clap::{Parser, Subcommand, ValueEnum};

/// Exit status for parse errors, limit overruns and bad arguments.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "bpmn-soundness",
    version,
    about = "Soundness and safeness checking for BPMN models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a BPMN file. Exits 0 if all properties hold, 1 if any is
    /// violated, 2 on parse or limit errors.
    Check {
        path: PathBuf,
        /// Comma-separated subset of Safeness, OptionToComplete,
        /// ProperCompletion, NoDeadActivities.
        #[arg(long)]
        properties: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Include suggested quick fixes in the report.
        #[arg(long)]
        quick_fixes: bool,
        /// Treat states that cannot reach completion as Option To Complete
        /// violations, not only stuck states.
        #[arg(long)]
        livelock: bool,
    },
    /// Write synthetic benchmark models as BPMN files.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
        #[arg(long, global = true, default_value = ".")]
        out: PathBuf,
    },
    /// Time repeated checks of generated models and files.
    Bench {
        /// Block counts to benchmark.
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<usize>,
        /// Parallel models as BRANCHESxLENGTH, e.g. 5x1.
        #[arg(long, value_delimiter = ',', value_parser = parse_shape)]
        parallel: Vec<(usize, usize)>,
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        #[arg(long, value_enum, default_value_t = BenchFormat::Csv)]
        format: BenchFormat,
    },
    /// Apply a suggested fix or an edit list and write the edited model.
    /// The inverse edits are printed as JSON.
    ApplyFix {
        path: PathBuf,
        #[arg(long, conflicts_with = "edits", required_unless_present = "edits")]
        fix_id: Option<String>,
        /// JSON file holding an edit list.
        #[arg(long)]
        edits: Option<PathBuf>,
        /// Output file; defaults to overwriting the input.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Upper bound on states per request.
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// One file per block count in FROM..=TO.
    Blocks {
        #[arg(long, default_value_t = 1)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// A single parallel-branches model.
    Parallel {
        #[arg(long)]
        branches: usize,
        #[arg(long)]
        length: usize,
    },
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s.split_once('x').ok_or("expected BRANCHESxLENGTH")?;
    let n = n.parse::<usize>().map_err(|e| e.to_string())?;
    let m = m.parse::<usize>().map_err(|e| e.to_string())?;
    if n == 0 || m == 0 {
        return Err("branches and length must be at least 1".into());
    }
    Ok((n, m))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Check {
            path,
            properties,
            max_states,
            format,
            quick_fixes,
            livelock,
        } => {
            let options = CheckOptions {
                properties: parse_properties(properties.as_deref().unwrap_or("")).map_err(anyhow::Error::msg)?,
                max_states,
                quick_fixes,
                detect_livelocks: livelock,
            };
            check_file(&path, &options, format)
        }
        Command::Generate { kind, out } => {
            generate(kind, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            blocks,
            parallel,
            files,
            repetitions,
            format,
        } => bench(&blocks, &parallel, &files, repetitions, format),
        Command::ApplyFix {
            path,
            fix_id,
            edits,
            out,
            max_states,
        } => {
            let selector = match (fix_id, edits) {
                (Some(id), _) => FixSelector::Id(id),
                (None, Some(file)) => {
                    let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                    let edits: Vec<Edit> = serde_json::from_str(&text).context("parsing edit list")?;
                    FixSelector::Edits(edits)
                }
                (None, None) => bail!("either --fix-id or --edits is required"),
            };
            let xml = read(&path)?;
            let outcome = match apply_to_xml(&xml, &selector, max_states) {
                Ok(outcome) => outcome,
                Err(ApplyError::Invalid(issues)) => return Ok(report_issues(&path, &issues)),
                Err(e) => bail!(e),
            };
            let target = out.unwrap_or(path);
            fs::write(&target, &outcome.bpmn_xml).with_context(|| format!("writing {}", target.display()))?;
            println!("{}", serde_json::to_string_pretty(&outcome.inverse_edits)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { port, host, max_states } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(SocketAddr::new(host, port), ServiceConfig { max_states }))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn report_issues(path: &Path, issues: &[bpmn_soundness::ModelIssue]) -> ExitCode {
    for issue in issues {
        eprintln!("{}: {issue}", path.display());
    }
    ExitCode::from(EXIT_ERROR)
}

fn check_file(path: &Path, options: &CheckOptions, format: Format) -> anyhow::Result<ExitCode> {
    let xml = read(path)?;
    let report = match check_xml(&xml, options) {
        Ok(report) => report,
        Err(PipelineError::Invalid(issues)) => return Ok(report_issues(path, &issues)),
        Err(PipelineError::Check(e)) => bail!(e),
    };
    let rendered = match format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    };
    io::stdout().write_all(rendered.as_bytes())?;
    Ok(if report.all_fulfilled() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn generate(kind: GenerateKind, out: &Path) -> anyhow::Result<()> {
    let cases = match kind {
        GenerateKind::Blocks { from, to } => {
            if from == 0 || from > to {
                bail!("need 1 <= --from <= --to, got {from}..{to}");
            }
            (from..=to).map(BenchCase::blocks).collect::<Vec<_>>()
        }
        GenerateKind::Parallel { branches, length } => {
            if branches == 0 || length == 0 {
                bail!("branches and length must be at least 1");
            }
            vec![BenchCase::parallel(branches, length)]
        }
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for case in &cases {
        let file = out.join(format!("{}.bpmn", case.name));
        fs::write(&file, serialize_bpmn(&case.model)).with_context(|| format!("writing {}", file.display()))?;
    }
    tracing::info!(count = cases.len(), dir = %out.display(), "models written");
    Ok(())
}

fn bench(
    blocks: &[usize],
    parallel: &[(usize, usize)],
    files: &[PathBuf],
    repetitions: usize,
    format: BenchFormat,
) -> anyhow::Result<ExitCode> {
    if blocks.contains(&0) {
        bail!("block counts must be at least 1");
    }
    let mut cases: Vec<BenchCase> = blocks.iter().map(|&k| BenchCase::blocks(k)).collect();
    cases.extend(parallel.iter().map(|&(n, m)| BenchCase::parallel(n, m)));
    for path in files {
        let model = match parse_bpmn(&read(path)?) {
            Ok(model) => model,
            Err(issues) => return Ok(report_issues(path, &issues)),
        };
        cases.push(BenchCase {
            name: path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
            params: BenchParams::File,
            model,
        });
    }
    if cases.is_empty() {
        bail!("nothing to benchmark; pass --blocks, --parallel or files");
    }
    let mut records = Vec::new();
    let mut failed = false;
    for entry in run_benchmark(&cases, repetitions)? {
        match entry {
            Ok(record) => records.push(record),
            Err(e) => {
                eprintln!("error: {e}");
                failed = true;
            }
        }
    }
    let stdout = io::stdout();
    match format {
        BenchFormat::Csv => write_csv(&records, stdout.lock())?,
        BenchFormat::Json => println!("{}", serde_json::to_string_pretty(&records)?),
    }
    Ok(if failed {
        ExitCode::from(EXIT_ERROR)
    } else {
        ExitCode::SUCCESS
    })
}

async fn serve(addr: SocketAddr, config: ServiceConfig) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, service::router(config)).await?;
    Ok(())
}
