//! Experiment runner and report generator for the `photostat` library.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod schema;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use config::{Config, Experiment};
use error::{CliError, Result};

pub const OUTPUT_ENV: &str = "PHOTOSTAT_OUT";
pub const LOCK_FILE: &str = ".photostat.lock";
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// `--out`, then the config file, then `$PHOTOSTAT_OUT/<experiment>`, then
/// `./photostat-out/<experiment>`.
pub fn output_dir(cfg: &Config, exp: Experiment, env_root: Option<PathBuf>) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| {
        env_root
            .unwrap_or_else(|| PathBuf::from("photostat-out"))
            .join(exp.name())
    })
}

/// Exclusive claim on an output directory, released on drop.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(DirLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::config(format!(
                    "{} is in use by another run (remove {LOCK_FILE} if stale)",
                    dir.display()
                )))
            }
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    code_version: &'a str,
    seed: u64,
    config: Config,
    files: Vec<String>,
}

pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

/// Validate, compute everything, then write. Nothing is written when any
/// step fails.
pub fn run(cfg: &Config, env_root: Option<PathBuf>) -> Result<RunReport> {
    let exp = cfg.validate()?;
    let dir = output_dir(cfg, exp, env_root);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let _lock = DirLock::acquire(&dir)?;

    let out = experiments::run(exp, cfg)?;

    let mut files: Vec<String> = out.artifacts.iter().map(|a| a.name.clone()).collect();
    files.push("results.json".into());
    if let Some((stem, _)) = &out.record {
        files.push(format!("{stem}.bin"));
        files.push(format!("{stem}.json"));
    }
    files.push("manifest.json".into());
    files.sort();

    // the manifest omits the output directory so relocated runs compare equal
    let mut recorded = cfg.clone();
    recorded.output_dir = None;
    recorded.experiment = Some(exp);
    let manifest = Manifest {
        experiment: exp.name(),
        code_version: CODE_VERSION,
        seed: cfg.seed,
        config: recorded,
        files: files.clone(),
    };
    let manifest = serde_json::to_value(&manifest).map_err(|e| CliError::config(e.to_string()))?;

    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    };
    for a in &out.artifacts {
        write(&a.name, &a.bytes)?;
    }
    write("results.json", &experiments::json_bytes(&out.results))?;
    if let Some((stem, rec)) = &out.record {
        photostat::dualpath::io::write_record_binary(
            rec,
            &dir.join(format!("{stem}.bin")),
            &dir.join(format!("{stem}.json")),
        )?;
    }
    write("manifest.json", &experiments::json_bytes(&manifest))?;
    Ok(RunReport { dir, files })
}

/// Build the summary for `dir`, write `summary.json` into it and return the text table.
pub fn report(dir: &Path) -> Result<(report::Summary, String)> {
    let summary = report::report(dir)?;
    let value = serde_json::to_value(&summary).map_err(|e| CliError::config(e.to_string()))?;
    let path = dir.join(report::SUMMARY_FILE);
    fs::write(&path, experiments::json_bytes(&value)).map_err(|e| CliError::io(&path, e))?;
    let text = report::text_table(&summary);
    Ok((summary, text))
}
