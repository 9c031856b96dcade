use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ifedyn::audit::audit_csv;
use ifedyn::scenario::Scenario;
use ifedyn::{config, resolve_output_dir, run_config};

#[derive(Parser)]
#[command(name = "ifedyn", version, about = "Spin dynamics of the ultrafast inverse Faraday effect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every section of a configuration file
    Run { config: PathBuf },
    /// List the scenario registry
    ListScenarios,
    /// Check the invariants of a CSV written by `run`
    Audit { csv: PathBuf },
}

const AUDIT_FAILURE: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListScenarios => {
            for s in Scenario::ALL {
                let alias = s.alias().map(|a| format!(" (alias {a})")).unwrap_or_default();
                println!("{:<8} {}{alias}", s.name(), s.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config: path } => {
            let cfg = match std::fs::read_to_string(&path) {
                Ok(text) => config::parse(&text),
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            };
            let cfg = match cfg {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            };
            let dir = resolve_output_dir(&cfg);
            match run_config(&cfg, &dir) {
                Ok(summary) => {
                    for (label, audit) in &summary.audits {
                        let failed = audit.failures();
                        if failed.is_empty() {
                            println!("[{label}] audit PASS");
                        } else {
                            println!("[{label}] audit FAIL: {}", failed.join(", "));
                        }
                    }
                    println!("outputs in {}", summary.output_dir.display());
                    if summary.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(AUDIT_FAILURE)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Audit { csv } => {
            let text = match std::fs::read_to_string(&csv) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", csv.display());
                    return ExitCode::FAILURE;
                }
            };
            match audit_csv(&text) {
                Ok(report) => {
                    print!("{}", report.render());
                    if report.passed() {
                        println!("audit PASS");
                        ExitCode::SUCCESS
                    } else {
                        println!("audit FAIL: {}", report.failures().join(", "));
                        ExitCode::from(AUDIT_FAILURE)
                    }
                }
                Err(e) => {
                    eprintln!("error: {}: {e}", csv.display());
                    ExitCode::FAILURE
                }
            }
        }
    }
}
