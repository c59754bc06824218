//! Batch front-end for `thq-core`: config parsing, experiment dispatch,
//! CSV artifacts and run manifests. The `thq` binary is a thin wrapper.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{ExperimentKind, RunConfig};
pub use error::CliError;
use output::{sha256_hex, ArtifactSink, RunManifest};

/// Environment variable that sizes the worker pool.
pub const WORKERS_ENV: &str = "THQ_WORKERS";

/// Bundled preset configurations, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Runs a parsed config into `out` and returns the manifest path.
/// `config_bytes` is the exact file content, hashed into the manifest.
pub fn run(cfg: &RunConfig, config_bytes: &[u8], out: &Path) -> Result<PathBuf, CliError> {
    let started_at = output::now();
    let sink = ArtifactSink::new(out)?;
    output::event(
        "run_start",
        serde_json::json!({ "out": out.display().to_string(), "seed": cfg.seed, "workers": rayon::current_num_threads() }),
    );
    runner::execute(cfg, &sink)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config_bytes),
        seed: cfg.seed,
        experiments: cfg.experiments.iter().map(|k| k.name().to_string()).collect(),
        started_at,
        finished_at: output::now(),
        artifacts: sink.records(),
    };
    let path = manifest.write(sink.root())?;
    output::event("run_done", serde_json::json!({ "manifest": path.display().to_string() }));
    Ok(path)
}

/// Loads a config file, applies the seed override and runs it.
pub fn run_file(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<PathBuf, CliError> {
    let bytes = std::fs::read(config)
        .map_err(|e| thq_core::Error::Parse(format!("cannot read config {}: {e}", config.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| thq_core::Error::Parse(format!("config {} is not UTF-8", config.display())))?;
    let mut cfg = RunConfig::parse(&text, config.parent().unwrap_or(Path::new(".")))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("thq-out"));
    run(&cfg, &bytes, &out)
}

/// Runs a bundled preset into `out` (default `thq-<name>`).
pub fn reproduce(name: &str, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let text = preset(name).ok_or_else(|| thq_core::Error::Parse(format!("unknown preset {name:?}")))?;
    let cfg = RunConfig::parse(text, Path::new("."))?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(format!("thq-{name}")));
    run(&cfg, text.as_bytes(), &out)
}

pub fn validate(config: &Path) -> Result<RunConfig, CliError> {
    Ok(RunConfig::read(config)?)
}

/// Sizes the global rayon pool from [`WORKERS_ENV`], if set.
pub fn init_workers() -> Result<(), CliError> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize =
        value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            thq_core::Error::Parse(format!("{WORKERS_ENV}: expected a positive integer, got {value:?}"))
        })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Io(format!("worker pool: {e}")))
}
