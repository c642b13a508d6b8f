use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cuento_core::metrics::{self, CaseTarget, MetricsError};
use cuento_core::pdf::{render_pdf, PdfLayout};
use cuento_core::{load_catalog, Catalog, Story};
use cuento_server::ServiceConfig;

/// Story-creation service and content tools.
#[derive(Parser)]
#[command(name = "cuentoterapp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long, env = "CUENTOTERAPP_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, env = "CUENTOTERAPP_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        /// Frontend build to serve instead of the embedded app shell.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Reject stories that do not write the last function card.
        #[arg(long)]
        require_ending: bool,
        /// Send permissive CORS headers (development only).
        #[arg(long)]
        allow_cross_origin: bool,
    },
    /// Check a story document against the catalog and the ordering rule.
    Validate {
        story: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Render a story document to PDF.
    ExportPdf {
        story: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Defaults to `<title-slug>.pdf` in the current directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score SUS questionnaires (ten answers per line).
    Sus {
        responses: PathBuf,
        /// Input lines are precomputed scores; only the mean is calculated.
        #[arg(long)]
        scores: bool,
    },
    /// Completion and efficiency tables from participant records.
    Metrics {
        records: PathBuf,
        #[arg(long, default_value = "12:45", value_parser = parse_target)]
        target_case1: u32,
        #[arg(long, default_value = "10:05", value_parser = parse_target)]
        target_case2: u32,
        /// Precomputed SUS scores to summarize alongside.
        #[arg(long)]
        sus: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write the shipped default catalog.
    SeedCatalog {
        /// Standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

fn parse_target(raw: &str) -> Result<u32, String> {
    metrics::parse_duration(raw).map_err(|e| e.to_string())
}

enum Failure {
    /// Bad input files or arguments (exit 2).
    Usage(String),
    /// The input was read but failed a domain check (exit 1).
    Domain(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Usage(m) => (2, m),
            Failure::Domain(m) => (1, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { port, host, data_dir, static_dir, catalog, require_ending, allow_cross_origin } => {
            let config = ServiceConfig {
                host,
                port,
                data_dir,
                static_dir,
                catalog_path: catalog,
                require_ending,
                allow_cross_origin,
            };
            serve(config)
        }
        Command::Validate { story, catalog } => validate(&story, catalog.as_deref()),
        Command::ExportPdf { story, catalog, output } => export_pdf(&story, catalog.as_deref(), output),
        Command::Sus { responses, scores } => sus(&responses, scores),
        Command::Metrics { records, target_case1, target_case2, sus, format } => {
            metrics_report(&records, [target_case1, target_case2], sus.as_deref(), format)
        }
        Command::SeedCatalog { output } => seed_catalog(output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read(path)?).map_err(|_| Failure::Usage(format!("{} is not UTF-8 text", path.display())))
}

fn catalog(path: Option<&Path>) -> Result<Catalog, Failure> {
    match path {
        None => Ok(Catalog::builtin()),
        Some(p) => load_catalog(&read(p)?).map_err(|e| Failure::Usage(format!("catalog {}: {e}", p.display()))),
    }
}

fn story(path: &Path) -> Result<Story, Failure> {
    Story::from_document(&read(path)?).map_err(|e| Failure::Usage(format!("{}: not a story document: {e}", path.display())))
}

fn serve(config: ServiceConfig) -> Outcome {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Domain(format!("cannot start runtime: {e}")))?;
    rt.block_on(cuento_server::run_until_signal(config)).map_err(|e| Failure::Domain(e.to_string()))
}

fn validate(path: &Path, catalog_path: Option<&Path>) -> Outcome {
    let catalog = catalog(catalog_path)?;
    let story = story(path)?;
    story.validate(Some(&catalog)).map_err(|v| Failure::Domain(v.to_string()))?;
    println!("OK");
    Ok(())
}

fn export_pdf(path: &Path, catalog_path: Option<&Path>, output: Option<PathBuf>) -> Outcome {
    let catalog = catalog(catalog_path)?;
    let story = story(path)?;
    let bytes = render_pdf(&story, &catalog, &PdfLayout::default()).map_err(|e| Failure::Domain(e.to_string()))?;
    let output = output.unwrap_or_else(|| PathBuf::from(format!("{}.pdf", story.slug())));
    fs::write(&output, &bytes).map_err(|e| Failure::Domain(format!("cannot write {}: {e}", output.display())))?;
    println!("wrote {} bytes to {}", bytes.len(), output.display());
    Ok(())
}

fn sus(path: &Path, precomputed: bool) -> Outcome {
    let raw = read_text(path)?;
    let domain = |e: MetricsError| Failure::Domain(e.to_string());
    let scores = if precomputed {
        metrics::parse_sus_scores(&raw).map_err(domain)?
    } else {
        metrics::parse_sus_responses(&raw).map_err(domain)?.iter().map(metrics::sus_score).collect()
    };
    let summary = metrics::sus_summary(&scores).map_err(domain)?;
    for (i, s) in scores.iter().enumerate() {
        println!("row {}: {s}", i + 1);
    }
    println!("mean: {:.2}", summary.mean);
    Ok(())
}

fn metrics_report(path: &Path, targets: [u32; 2], sus: Option<&Path>, format: Format) -> Outcome {
    let domain = |e: MetricsError| Failure::Domain(e.to_string());
    let records = metrics::parse_records(&read_text(path)?).map_err(domain)?;
    let scores = match sus {
        Some(p) => metrics::parse_sus_scores(&read_text(p)?).map_err(domain)?,
        None => Vec::new(),
    };
    let targets = [
        CaseTarget { case_id: 1, target_seconds: targets[0] },
        CaseTarget { case_id: 2, target_seconds: targets[1] },
    ];
    let report = metrics::report(&records, &targets, &scores).map_err(domain)?;
    let text = match format {
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    print!("{text}");
    Ok(())
}

fn seed_catalog(output: Option<&Path>) -> Outcome {
    let raw = Catalog::builtin_source();
    match output {
        Some(p) => {
            fs::write(p, raw).map_err(|e| Failure::Domain(format!("cannot write {}: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
        }
        None => std::io::stdout()
            .write_all(raw.as_bytes())
            .map_err(|e| Failure::Domain(format!("cannot write catalog: {e}")))?,
    }
    Ok(())
}
