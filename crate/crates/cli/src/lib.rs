//! Experiment runner for the `uelink` simulator: configuration parsing and the
//! sweep, calibration, analytic and adaptation commands.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

pub use commands::{execute, Artifact, CliError, Command};
pub use config::{ConfigError, ExperimentConfig};

/// Reads a config file and applies a seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Sibling path for an extra output: `out.csv` with `.curves.csv` becomes
/// `out.curves.csv`.
pub fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

/// Writes an artifact to `out` and its siblings, or everything to stdout.
pub fn write_artifact(art: &Artifact, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, &art.main)?;
            for (suffix, body) in &art.extra {
                std::fs::write(sibling_path(path, suffix), body)?;
            }
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(art.main.as_bytes())?;
            for (suffix, body) in &art.extra {
                writeln!(stdout, "\n# file: {suffix}")?;
                stdout.write_all(body.as_bytes())?;
            }
            stdout.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(
            sibling_path(Path::new("/t/beta.csv"), ".curves.csv"),
            PathBuf::from("/t/beta.curves.csv")
        );
        assert_eq!(
            sibling_path(Path::new("beta"), ".awgn.csv"),
            PathBuf::from("beta.awgn.csv")
        );
    }
}
