//! Scenario runner for the spin-dynamics models in `ifedyn-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod config;
pub mod output;
pub mod run;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::audit::AuditReport;
use crate::config::Config;
use crate::run::{execute, CliError, RunOutput};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "IFEDYN_OUTPUT_DIR";

/// Audit outcome of every run, in configuration order.
#[derive(Debug, Clone)]
pub struct Summary {
    pub output_dir: PathBuf,
    pub audits: Vec<(String, AuditReport)>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.audits.iter().all(|(_, a)| a.passed())
    }
}

/// The output directory: the environment override if set, else the configured one.
pub fn resolve_output_dir(cfg: &Config) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(&cfg.output_dir),
    }
}

/// Runs every section on a pool of `cfg.workers` threads, then writes the
/// CSV tables, one report per run and `manifest.txt` into `out_dir`.
pub fn run_config(cfg: &Config, out_dir: &Path) -> Result<Summary, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let results: Vec<Result<RunOutput, CliError>> =
        pool.install(|| cfg.runs.par_iter().map(|r| execute(r, cfg.sample_fs)).collect());
    let outputs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let mut manifest = Vec::new();
    for out in &outputs {
        for table in &out.tables {
            let path = out_dir.join(&table.file_name);
            fs::write(&path, table.render()).map_err(|e| io(&path, e))?;
            manifest.push(table.manifest_line());
        }
        let name = format!("{}.report.txt", out.label);
        let path = out_dir.join(&name);
        fs::write(&path, &out.report).map_err(|e| io(&path, e))?;
        manifest.push(format!("{name}: parameters, results, verdicts and audit of run [{}]", out.label));
    }
    let path = out_dir.join("manifest.txt");
    fs::write(&path, output::manifest(manifest)).map_err(|e| io(&path, e))?;
    Ok(Summary {
        output_dir: out_dir.to_path_buf(),
        audits: outputs.into_iter().map(|o| (o.label, o.audit)).collect(),
    })
}
